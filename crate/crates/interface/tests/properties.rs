use proptest::prelude::*;
use ribbonchain::{parse_script, MeasurementScript, OutcomeChoice, ScriptStep, Session, SessionOptions};
use ribbonchain_core::{Outcome, PauliBasis, QubitId};

fn step() -> impl Strategy<Value = ScriptStep> {
    (
        1u32..40,
        prop::sample::select(PauliBasis::ALL.to_vec()),
        prop::sample::select(vec![
            OutcomeChoice::Fixed(Outcome::Plus),
            OutcomeChoice::Fixed(Outcome::Minus),
            OutcomeChoice::Random,
        ]),
        prop::option::of(any::<u64>()),
    )
        .prop_map(|(q, basis, outcome, seed)| ScriptStep { qubit: QubitId(q), basis, outcome, seed })
}

fn script() -> impl Strategy<Value = MeasurementScript> {
    (1usize..40, prop::collection::vec(step(), 0..12))
        .prop_map(|(chain_size, steps)| MeasurementScript { chain_size, steps })
}

/// Random attempts against a small session; failures leave it untouched.
fn drive(session: &mut Session, moves: &[(u32, usize)]) {
    for &(q, b) in moves {
        let _ = session.measure(QubitId(q), PauliBasis::ALL[b], OutcomeChoice::Random, None);
    }
}

proptest! {
    #[test]
    fn print_then_parse_is_identity(s in script()) {
        let printed = s.to_string();
        let reparsed = parse_script(&printed).unwrap();
        prop_assert_eq!(&reparsed, &s);
        prop_assert_eq!(reparsed.to_string(), printed);
    }

    #[test]
    fn undo_is_exact(seed in any::<u64>(), moves in prop::collection::vec((1u32..=6, 0usize..3), 0..6), q in 1u32..=6, b in 0usize..3) {
        let mut s = Session::new("p", 6, SessionOptions { seed, hybrid: true, ..SessionOptions::default() }).unwrap();
        drive(&mut s, &moves);
        let before = serde_json::to_string(&s).unwrap();
        if s.measure(QubitId(q), PauliBasis::ALL[b], OutcomeChoice::Random, None).is_ok() {
            s.undo().unwrap();
        }
        prop_assert_eq!(serde_json::to_string(&s).unwrap(), before);
    }

    #[test]
    fn dry_runs_are_pure(seed in any::<u64>(), moves in prop::collection::vec((1u32..=6, 0usize..3), 0..6), probes in prop::collection::vec((1u32..=7, 0usize..3), 1..5)) {
        let mut s = Session::new("p", 6, SessionOptions { seed, ..SessionOptions::default() }).unwrap();
        drive(&mut s, &moves);
        let before = serde_json::to_string(&s).unwrap();
        for (q, b) in probes {
            let _ = s.dry_run(QubitId(q), PauliBasis::ALL[b]);
        }
        prop_assert_eq!(serde_json::to_string(&s).unwrap(), before);
    }

    #[test]
    fn committed_steps_stay_coherent(seed in any::<u64>(), moves in prop::collection::vec((1u32..=7, 0usize..3), 1..8)) {
        let mut s = Session::new("p", 7, SessionOptions { seed, ..SessionOptions::default() }).unwrap();
        for (q, b) in moves {
            if let Ok(r) = s.measure(QubitId(q), PauliBasis::ALL[b], OutcomeChoice::Random, None) {
                prop_assert_eq!(r.step.correspondence, Some(true));
                prop_assert!(r.step.fidelity.unwrap() >= 1.0 - 1e-9);
            }
        }
    }
}
