//! Framed-ribbon chain model.
//!
//! Qubits are rings; a CZ bond between neighbours is a ribbon carrying a
//! discrete twist in Z4 (0°, +90°, 180°, −90°). Measurements act as
//! surgeries on the chain: removing rings, cutting or fusing ribbons, and
//! composing twists onto the ribbons next to the cut.
//!
//! Besides the visible twists each ring keeps a `frame`, the twist class of
//! the byproduct attached to that ring. The frame is absorbed into the
//! measured basis before a surgery is chosen, so the model stays in step
//! with [`crate::symbolic`] over measurement sequences.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Add;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qubit::{chain_labels, Outcome, PauliBasis, QubitId};
use crate::symbolic::{absorb_byproduct, Byproduct, RuleTag, SymbolicState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub enum TwistAngle {
    /// 0°
    #[default]
    Flat,
    /// +90°, right-handed
    Right,
    /// 180°
    Flip,
    /// −90°, left-handed
    Left,
}

impl TwistAngle {
    pub const ALL: [TwistAngle; 4] = [TwistAngle::Flat, TwistAngle::Right, TwistAngle::Flip, TwistAngle::Left];

    pub fn quarter_turns(self) -> u8 {
        match self {
            TwistAngle::Flat => 0,
            TwistAngle::Right => 1,
            TwistAngle::Flip => 2,
            TwistAngle::Left => 3,
        }
    }

    pub fn from_quarter_turns(t: u8) -> TwistAngle {
        TwistAngle::ALL[usize::from(t % 4)]
    }

    /// 0, 90, 180 or 270 (Left is encoded as 270).
    pub fn degrees(self) -> u16 {
        u16::from(self.quarter_turns()) * 90
    }

    pub fn from_degrees(deg: i32) -> Result<TwistAngle> {
        if deg.rem_euclid(90) != 0 {
            return Err(Error::InvalidArgument(format!("{deg}° is not a quarter turn")));
        }
        Ok(TwistAngle::from_quarter_turns((deg.rem_euclid(360) / 90) as u8))
    }

    /// Mirror image: Right and Left swap, Flat and Flip are fixed.
    pub fn mirrored(self) -> TwistAngle {
        TwistAngle::from_quarter_turns(4 - self.quarter_turns())
    }

    pub fn crossing(self) -> Crossing {
        match self {
            TwistAngle::Right => Crossing::RightOverLeft,
            TwistAngle::Left => Crossing::RightUnderLeft,
            TwistAngle::Flat | TwistAngle::Flip => Crossing::None,
        }
    }
}

impl Add for TwistAngle {
    type Output = TwistAngle;

    fn add(self, rhs: TwistAngle) -> TwistAngle {
        compose_twists(self, rhs)
    }
}

impl From<Byproduct> for TwistAngle {
    fn from(b: Byproduct) -> TwistAngle {
        TwistAngle::from_quarter_turns(b.power())
    }
}

impl From<TwistAngle> for Byproduct {
    fn from(t: TwistAngle) -> Byproduct {
        Byproduct::new(t.quarter_turns())
    }
}

impl fmt::Display for TwistAngle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TwistAngle::Flat => "0°",
            TwistAngle::Right => "+90°",
            TwistAngle::Flip => "180°",
            TwistAngle::Left => "−90°",
        })
    }
}

/// Addition mod 360°.
pub fn compose_twists(a: TwistAngle, b: TwistAngle) -> TwistAngle {
    TwistAngle::from_quarter_turns(a.quarter_turns() + b.quarter_turns())
}

/// Flat → +1, Right → +i, Flip → −1, Left → −i.
pub fn twist_to_phase(t: TwistAngle) -> Complex64 {
    match t {
        TwistAngle::Flat => Complex64::new(1.0, 0.0),
        TwistAngle::Right => Complex64::new(0.0, 1.0),
        TwistAngle::Flip => Complex64::new(-1.0, 0.0),
        TwistAngle::Left => Complex64::new(0.0, -1.0),
    }
}

pub fn phase_to_twist(p: Complex64) -> Result<TwistAngle> {
    TwistAngle::ALL
        .into_iter()
        .find(|&t| (twist_to_phase(t) - p).norm() < 1e-12)
        .ok_or_else(|| Error::InvalidArgument(format!("{p} is not one of ±1, ±i")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Crossing {
    None,
    RightOverLeft,
    RightUnderLeft,
}

impl Crossing {
    pub fn as_str(self) -> &'static str {
        match self {
            Crossing::None => "none",
            Crossing::RightOverLeft => "over",
            Crossing::RightUnderLeft => "under",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Ribbon {
    pub left_ring: QubitId,
    pub right_ring: QubitId,
    pub twist: TwistAngle,
}

impl Ribbon {
    pub fn crossing_hint(&self) -> Crossing {
        self.twist.crossing()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RingStatus {
    Active,
    Removed,
    Decoupled { value: u8 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Ring {
    pub id: QubitId,
    pub status: RingStatus,
    pub boundary_mark: Option<TwistAngle>,
    pub frame: TwistAngle,
}

impl Ring {
    fn compose_mark(&mut self, t: TwistAngle) {
        if t == TwistAngle::Flat {
            return;
        }
        let mark = self.boundary_mark.unwrap_or_default() + t;
        self.boundary_mark = (mark != TwistAngle::Flat).then_some(mark);
    }
}

/// A chain of rings; `twists[j]` is the ribbon between `rings[j]` and `rings[j+1]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Component {
    rings: Vec<QubitId>,
    twists: Vec<TwistAngle>,
}

impl Component {
    pub fn rings(&self) -> &[QubitId] {
        &self.rings
    }

    pub fn ribbons(&self) -> Vec<Ribbon> {
        self.rings
            .windows(2)
            .zip(&self.twists)
            .map(|(w, &twist)| Ribbon { left_ring: w[0], right_ring: w[1], twist })
            .collect()
    }

    fn reversed(&self) -> Component {
        let mut rings = self.rings.clone();
        let mut twists = self.twists.clone();
        rings.reverse();
        twists.reverse();
        Component { rings, twists }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Chirality {
    Right,
    Left,
}

impl Chirality {
    fn of(o: Outcome) -> Chirality {
        match o {
            Outcome::Plus => Chirality::Right,
            Outcome::Minus => Chirality::Left,
        }
    }

    fn twist(self) -> TwistAngle {
        match self {
            Chirality::Right => TwistAngle::Right,
            Chirality::Left => TwistAngle::Left,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum SurgeryKind {
    Severance,
    SeveranceWithFlips,
    Pruning,
    PruningWithFlip,
    BoundarySkip,
    BoundarySkipWithFlip,
    FlatSplice,
    FlippedSplice,
    TwistSplice(Chirality),
    BoundaryTwist(Chirality),
}

impl SurgeryKind {
    pub fn name(self) -> &'static str {
        match self {
            SurgeryKind::Severance => "Severance",
            SurgeryKind::SeveranceWithFlips => "SeveranceWithFlips",
            SurgeryKind::Pruning => "Pruning",
            SurgeryKind::PruningWithFlip => "PruningWithFlip",
            SurgeryKind::BoundarySkip => "BoundarySkip",
            SurgeryKind::BoundarySkipWithFlip => "BoundarySkipWithFlip",
            SurgeryKind::FlatSplice => "FlatSplice",
            SurgeryKind::FlippedSplice => "FlippedSplice",
            SurgeryKind::TwistSplice(Chirality::Right) => "TwistSplice(Right)",
            SurgeryKind::TwistSplice(Chirality::Left) => "TwistSplice(Left)",
            SurgeryKind::BoundaryTwist(Chirality::Right) => "BoundaryTwist(Right)",
            SurgeryKind::BoundaryTwist(Chirality::Left) => "BoundaryTwist(Left)",
        }
    }

    /// Case table: the surgery for an effective basis, position and outcome.
    pub fn for_case(basis: PauliBasis, bulk: bool, o: Outcome) -> SurgeryKind {
        let minus = o == Outcome::Minus;
        match (basis, bulk) {
            (PauliBasis::Z, false) if minus => SurgeryKind::PruningWithFlip,
            (PauliBasis::Z, false) => SurgeryKind::Pruning,
            (PauliBasis::Z, true) if minus => SurgeryKind::SeveranceWithFlips,
            (PauliBasis::Z, true) => SurgeryKind::Severance,
            (PauliBasis::X, false) if minus => SurgeryKind::BoundarySkipWithFlip,
            (PauliBasis::X, false) => SurgeryKind::BoundarySkip,
            (PauliBasis::X, true) if minus => SurgeryKind::FlippedSplice,
            (PauliBasis::X, true) => SurgeryKind::FlatSplice,
            (PauliBasis::Y, false) => SurgeryKind::BoundaryTwist(Chirality::of(o)),
            (PauliBasis::Y, true) => SurgeryKind::TwistSplice(Chirality::of(o)),
        }
    }

    pub fn from_rule(rule: RuleTag) -> SurgeryKind {
        SurgeryKind::for_case(rule.basis(), rule.is_bulk(), rule.outcome())
    }

    /// The twist the surgery stands for: Flat, Flip, or a chiral quarter turn.
    pub fn twist_class(self) -> TwistAngle {
        match self {
            SurgeryKind::Severance | SurgeryKind::Pruning | SurgeryKind::BoundarySkip | SurgeryKind::FlatSplice => {
                TwistAngle::Flat
            }
            SurgeryKind::SeveranceWithFlips
            | SurgeryKind::PruningWithFlip
            | SurgeryKind::BoundarySkipWithFlip
            | SurgeryKind::FlippedSplice => TwistAngle::Flip,
            SurgeryKind::TwistSplice(c) | SurgeryKind::BoundaryTwist(c) => c.twist(),
        }
    }
}

impl fmt::Display for SurgeryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl From<SurgeryKind> for String {
    fn from(k: SurgeryKind) -> String {
        k.name().to_string()
    }
}

impl TryFrom<String> for SurgeryKind {
    type Error = String;

    fn try_from(s: String) -> std::result::Result<Self, Self::Error> {
        const KINDS: [SurgeryKind; 12] = [
            SurgeryKind::Severance,
            SurgeryKind::SeveranceWithFlips,
            SurgeryKind::Pruning,
            SurgeryKind::PruningWithFlip,
            SurgeryKind::BoundarySkip,
            SurgeryKind::BoundarySkipWithFlip,
            SurgeryKind::FlatSplice,
            SurgeryKind::FlippedSplice,
            SurgeryKind::TwistSplice(Chirality::Right),
            SurgeryKind::TwistSplice(Chirality::Left),
            SurgeryKind::BoundaryTwist(Chirality::Right),
            SurgeryKind::BoundaryTwist(Chirality::Left),
        ];
        KINDS
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown surgery kind {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SurgeryEvent {
    pub kind: SurgeryKind,
    pub qubit: QubitId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RibbonChainState {
    rings: BTreeMap<QubitId, Ring>,
    components: Vec<Component>,
    event_log: Vec<SurgeryEvent>,
}

impl RibbonChainState {
    /// `n` active rings joined by `n − 1` flat ribbons.
    pub fn initial_chain(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("chain size must be at least 1".into()));
        }
        let ids = chain_labels(n);
        let rings = ids
            .iter()
            .map(|&id| {
                (id, Ring { id, status: RingStatus::Active, boundary_mark: None, frame: TwistAngle::Flat })
            })
            .collect();
        Ok(RibbonChainState {
            rings,
            components: vec![Component { rings: ids, twists: vec![TwistAngle::Flat; n - 1] }],
            event_log: Vec::new(),
        })
    }

    pub fn rings(&self) -> impl Iterator<Item = &Ring> {
        self.rings.values()
    }

    pub fn ring(&self, id: QubitId) -> Option<&Ring> {
        self.rings.get(&id)
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn event_log(&self) -> &[SurgeryEvent] {
        &self.event_log
    }

    /// Sum of every ribbon twist and boundary mark.
    pub fn total_twist(&self) -> TwistAngle {
        let ribbons = self.components.iter().flat_map(|c| c.twists.iter().copied());
        let marks = self.rings.values().filter_map(|r| r.boundary_mark);
        ribbons.chain(marks).fold(TwistAngle::Flat, compose_twists)
    }

    /// Geometric mirror image: every component is read in reverse and every
    /// twist and boundary mark changes handedness.
    pub fn mirrored(&self) -> RibbonChainState {
        let mut out = self.clone();
        for comp in &mut out.components {
            *comp = comp.reversed();
            for t in &mut comp.twists {
                *t = t.mirrored();
            }
        }
        for ring in out.rings.values_mut() {
            ring.boundary_mark = ring.boundary_mark.map(TwistAngle::mirrored);
        }
        out
    }

    fn ring_mut(&mut self, id: QubitId) -> &mut Ring {
        self.rings.get_mut(&id).expect("ring exists")
    }

    fn compose_frame(&mut self, id: QubitId, t: TwistAngle) {
        let ring = self.ring_mut(id);
        ring.frame = ring.frame + t;
    }

    /// Composes `t` onto ribbon `twists[idx]` of `comp`, or onto the mark of
    /// `fallback` when that ribbon does not exist.
    fn compose_on_ribbon(&mut self, comp: &mut Component, idx: Option<usize>, fallback: QubitId, t: TwistAngle) {
        match idx.filter(|&i| i < comp.twists.len()) {
            Some(i) => comp.twists[i] = comp.twists[i] + t,
            None => self.ring_mut(fallback).compose_mark(t),
        }
    }

    fn push_component(&mut self, comp: Component) {
        if !comp.rings.is_empty() {
            self.components.push(comp);
        }
    }

    /// Folds the twist of a removed ribbon into `survivor`'s mark when the
    /// survivor is left with no ribbon at all.
    fn fold_removed(&mut self, survivor: QubitId, survivor_isolated: bool, twist: TwistAngle) {
        if survivor_isolated {
            self.ring_mut(survivor).compose_mark(twist);
        }
    }

    pub fn apply_surgery(
        &self,
        q: QubitId,
        basis: PauliBasis,
        o: Outcome,
    ) -> Result<(RibbonChainState, SurgeryEvent)> {
        let ring = *self.rings.get(&q).ok_or(Error::UnknownQubit(q))?;
        let mut next = self.clone();

        let kind = match ring.status {
            RingStatus::Removed => return Err(Error::InactiveRing(q)),
            RingStatus::Decoupled { value } => {
                if basis != PauliBasis::Z {
                    return Err(Error::UnsupportedComposition {
                        qubit: q,
                        reason: format!("decoupled ring admits only Z measurement, got {basis}"),
                    });
                }
                if o.bit() != value {
                    return Err(Error::ImpossibleOutcome { probability: 0.0 });
                }
                let r = next.ring_mut(q);
                r.status = RingStatus::Removed;
                r.frame = TwistAngle::Flat;
                SurgeryKind::for_case(PauliBasis::Z, false, o)
            }
            RingStatus::Active => {
                let ci = self
                    .components
                    .iter()
                    .position(|c| c.rings.contains(&q))
                    .expect("active ring belongs to a component");
                let (basis, o) = absorb_byproduct(basis, o, ring.frame.into());
                let comp = next.components.remove(ci);
                let idx = comp.rings.iter().position(|&r| r == q).expect("member");
                let m = comp.rings.len();

                if m == 1 {
                    if basis == PauliBasis::X && o == Outcome::Minus {
                        return Err(Error::ImpossibleOutcome { probability: 0.0 });
                    }
                    SurgeryKind::for_case(basis, false, o)
                } else if idx == 0 || idx == m - 1 {
                    let right_end = idx != 0;
                    let oriented = if right_end { comp.reversed() } else { comp };
                    let mut rest = next.end_surgery(oriented, basis, o);
                    if right_end {
                        rest = rest.reversed();
                    }
                    next.push_component(rest);
                    SurgeryKind::for_case(basis, false, o)
                } else {
                    next.bulk_surgery(comp, idx, basis, o);
                    SurgeryKind::for_case(basis, true, o)
                }
            }
        };

        if ring.status == RingStatus::Active {
            let r = next.ring_mut(q);
            r.status = RingStatus::Removed;
            r.frame = TwistAngle::Flat;
        }
        next.components.sort_by_key(|c| c.rings[0]);
        let event = SurgeryEvent { kind, qubit: q };
        next.event_log.push(event);
        Ok((next, event))
    }

    /// End surgery on a component oriented so the measured ring is first.
    /// Returns what is left of the component, in the same orientation.
    fn end_surgery(&mut self, comp: Component, basis: PauliBasis, o: Outcome) -> Component {
        let Component { rings, twists } = comp;
        let near = rings[1];
        let minus = o == Outcome::Minus;
        match basis {
            PauliBasis::Z => {
                let mut rest = Component { rings: rings[1..].to_vec(), twists: twists[1..].to_vec() };
                if minus {
                    self.compose_on_ribbon(&mut rest, Some(0), near, TwistAngle::Flip);
                    self.compose_frame(near, TwistAngle::Flip);
                }
                self.fold_removed(near, rest.rings.len() == 1, twists[0]);
                rest
            }
            PauliBasis::X => {
                {
                    let r = self.ring_mut(near);
                    r.status = RingStatus::Decoupled { value: o.bit() };
                    r.frame = TwistAngle::Flat;
                }
                if rings.len() < 3 {
                    return Component { rings: Vec::new(), twists: Vec::new() };
                }
                let far = rings[2];
                let mut rest = Component { rings: rings[2..].to_vec(), twists: twists[2..].to_vec() };
                if minus {
                    self.compose_on_ribbon(&mut rest, Some(0), far, TwistAngle::Flip);
                    self.compose_frame(far, TwistAngle::Flip);
                }
                self.fold_removed(far, rest.rings.len() == 1, twists[1]);
                rest
            }
            PauliBasis::Y => {
                let twist = Chirality::of(o).twist();
                let mut rest = Component { rings: rings[1..].to_vec(), twists: twists[1..].to_vec() };
                self.compose_on_ribbon(&mut rest, Some(0), near, twist);
                self.compose_frame(near, twist);
                self.fold_removed(near, rest.rings.len() == 1, twists[0]);
                rest
            }
        }
    }

    fn bulk_surgery(&mut self, comp: Component, idx: usize, basis: PauliBasis, o: Outcome) {
        let Component { rings, twists } = comp;
        let (a, b) = (rings[idx - 1], rings[idx + 1]);
        let (to_left, to_right) = (twists[idx - 1], twists[idx]);
        match basis {
            PauliBasis::Z => {
                let mut left = Component { rings: rings[..idx].to_vec(), twists: twists[..idx - 1].to_vec() };
                let mut right = Component { rings: rings[idx + 1..].to_vec(), twists: twists[idx + 1..].to_vec() };
                if o == Outcome::Minus {
                    let last = left.twists.len().checked_sub(1);
                    self.compose_on_ribbon(&mut left, last, a, TwistAngle::Flip);
                    self.compose_on_ribbon(&mut right, Some(0), b, TwistAngle::Flip);
                    self.compose_frame(a, TwistAngle::Flip);
                    self.compose_frame(b, TwistAngle::Flip);
                }
                self.fold_removed(a, left.rings.len() == 1, to_left);
                self.fold_removed(b, right.rings.len() == 1, to_right);
                self.push_component(left);
                self.push_component(right);
            }
            PauliBasis::X | PauliBasis::Y => {
                let event_twist = match (basis, o) {
                    (PauliBasis::X, Outcome::Plus) => TwistAngle::Flat,
                    (PauliBasis::X, Outcome::Minus) => TwistAngle::Flip,
                    (_, o) => Chirality::of(o).twist(),
                };
                if basis == PauliBasis::Y {
                    self.compose_frame(a, event_twist);
                    self.compose_frame(b, event_twist);
                }
                let mut fused_rings = rings;
                fused_rings.remove(idx);
                let mut fused_twists = twists;
                fused_twists.remove(idx);
                fused_twists[idx - 1] = to_left + to_right + event_twist;
                self.push_component(Component { rings: fused_rings, twists: fused_twists });
            }
        }
    }

    pub fn export_diagram(&self) -> Diagram {
        let mut components: Vec<DiagramComponent> = self
            .components
            .iter()
            .map(|c| DiagramComponent {
                rings: c.rings.iter().map(|id| DiagramRing::from_ring(&self.rings[id])).collect(),
                ribbons: c
                    .ribbons()
                    .into_iter()
                    .map(|r| DiagramRibbon {
                        l: r.left_ring,
                        r: r.right_ring,
                        twist: r.twist.degrees(),
                        crossing: r.crossing_hint().as_str().to_string(),
                    })
                    .collect(),
            })
            .collect();
        components.extend(
            self.rings
                .values()
                .filter(|r| matches!(r.status, RingStatus::Decoupled { .. }))
                .map(|r| DiagramComponent { rings: vec![DiagramRing::from_ring(r)], ribbons: Vec::new() }),
        );
        components.sort_by_key(|c| c.rings[0].id);
        Diagram {
            components,
            events: self
                .event_log
                .iter()
                .map(|e| DiagramEvent { kind: e.kind.name().to_string(), qubit: e.qubit })
                .collect(),
        }
    }
}

/// Serialized ribbon diagram consumed by the explorer UI.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagram {
    pub components: Vec<DiagramComponent>,
    pub events: Vec<DiagramEvent>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagramComponent {
    pub rings: Vec<DiagramRing>,
    pub ribbons: Vec<DiagramRibbon>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagramRing {
    pub id: QubitId,
    pub status: String,
    pub mark: Option<u16>,
}

impl DiagramRing {
    fn from_ring(r: &Ring) -> Self {
        let status = match r.status {
            RingStatus::Decoupled { .. } => "decoupled",
            _ => "active",
        };
        DiagramRing { id: r.id, status: status.to_string(), mark: r.boundary_mark.map(TwistAngle::degrees) }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagramRibbon {
    pub l: QubitId,
    pub r: QubitId,
    pub twist: u16,
    pub crossing: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagramEvent {
    pub kind: String,
    pub qubit: QubitId,
}

/// A diagram with twists, crossings, marks and event kinds dropped: only
/// which rings exist and which pairs are linked.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Connectivity {
    pub components: Vec<Vec<QubitId>>,
    pub links: Vec<(QubitId, QubitId)>,
}

impl Diagram {
    pub fn connectivity(&self) -> Connectivity {
        Connectivity {
            components: self.components.iter().map(|c| c.rings.iter().map(|r| r.id).collect()).collect(),
            links: self.components.iter().flat_map(|c| c.ribbons.iter().map(|r| (r.l, r.r))).collect(),
        }
    }
}

/// Outcome of comparing a ribbon chain with a symbolic state that went
/// through the same measurements.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CorrespondenceReport {
    /// Active components equal the segment partition.
    pub components_match: bool,
    /// Decoupled rings (with their values) equal the decoupled qubits.
    pub decoupled_match: bool,
    /// Every event maps to its rule and the twist class maps to the rule's
    /// byproduct class under the twist dictionary.
    pub events_match: bool,
    /// Ring frames equal the per-qubit byproducts.
    pub frames_match: bool,
    /// Some twist was recorded on a ring mark because its ribbon was absent.
    pub uses_boundary_marks: bool,
    pub mismatches: Vec<String>,
}

impl CorrespondenceReport {
    pub fn passed(&self) -> bool {
        self.components_match && self.decoupled_match && self.events_match && self.frames_match
    }
}

pub fn correspondence_check(chain: &RibbonChainState, sym: &SymbolicState) -> Result<CorrespondenceReport> {
    let events = chain.event_log();
    let history = sym.history();
    if events.len() != history.len() || events.iter().zip(history).any(|(e, h)| e.qubit != h.qubit) {
        return Err(Error::InvalidArgument(format!(
            "histories differ: {} ribbon events vs {} symbolic measurements",
            events.len(),
            history.len()
        )));
    }
    let mut mismatches = Vec::new();

    let mut ribbon_parts: Vec<Vec<QubitId>> = chain.components.iter().map(|c| sorted(c.rings.clone())).collect();
    let mut symbolic_parts: Vec<Vec<QubitId>> = sym.segments().iter().map(|s| sorted(s.0.clone())).collect();
    ribbon_parts.sort();
    symbolic_parts.sort();
    let components_match = ribbon_parts == symbolic_parts;
    if !components_match {
        mismatches.push(format!("components {ribbon_parts:?} vs segments {symbolic_parts:?}"));
    }

    let ribbon_decoupled: Vec<(QubitId, u8)> = chain
        .rings
        .values()
        .filter_map(|r| match r.status {
            RingStatus::Decoupled { value } => Some((r.id, value)),
            _ => None,
        })
        .collect();
    let symbolic_decoupled: Vec<(QubitId, u8)> = sym.decoupled().iter().map(|d| (d.id, d.value)).collect();
    let decoupled_match = ribbon_decoupled == symbolic_decoupled;
    if !decoupled_match {
        mismatches.push(format!("decoupled {ribbon_decoupled:?} vs {symbolic_decoupled:?}"));
    }

    let mut events_match = true;
    for (step, (event, record)) in events.iter().zip(history).enumerate() {
        let expected = SurgeryKind::from_rule(record.rule);
        let phase = twist_to_phase(event.kind.twist_class());
        let class_phase = record.rule.byproduct_class().phase();
        if event.kind != expected || (phase - class_phase).norm() > 1e-12 {
            events_match = false;
            mismatches.push(format!("step {step}: event {} vs rule {}", event.kind, record.rule));
        }
    }

    let mut frames_match = true;
    for ring in chain.rings.values() {
        let live = !matches!(ring.status, RingStatus::Removed);
        let byproduct = if live { sym.byproduct(ring.id) } else { Byproduct::IDENTITY };
        if Byproduct::from(ring.frame) != byproduct {
            frames_match = false;
            mismatches.push(format!("ring {}: frame {} vs byproduct {}", ring.id, ring.frame, byproduct));
        }
    }

    Ok(CorrespondenceReport {
        components_match,
        decoupled_match,
        events_match,
        frames_match,
        uses_boundary_marks: chain.rings.values().any(|r| r.boundary_mark.is_some()),
        mismatches,
    })
}

fn sorted(mut v: Vec<QubitId>) -> Vec<QubitId> {
    v.sort();
    v
}
