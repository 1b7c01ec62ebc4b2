use jamcast::adversary::{make_schedule, JamSchedule, StrategySpec};
use jamcast::engine::{simulate, EventKind, Recorder};
use jamcast::metrics::TraceWriter;
use jamcast::protocols::{Alpha, NodeStatus, ProtocolKind, ProtocolParams};
use proptest::prelude::*;

fn params(kind: ProtocolKind, n: u32, c: u32, t: u64) -> ProtocolParams {
    let mut p = ProtocolParams::new(kind, n);
    p.budget = t;
    p.channels = match kind {
        ProtocolKind::MultiCastC => Some(c.min(n / 2)),
        ProtocolKind::MultiCastAdvC => Some(c.next_power_of_two()),
        _ => None,
    };
    if kind == ProtocolKind::MultiCastCore {
        p.a = 64.0;
    }
    p.alpha = Alpha::new(1, 5);
    p
}

fn kind() -> impl Strategy<Value = ProtocolKind> {
    prop::sample::select(ProtocolKind::ALL.to_vec())
}

fn spec() -> impl Strategy<Value = StrategySpec> {
    prop_oneof![
        Just(StrategySpec::Silent),
        (1u32..40, prop::option::of(1u64..5000), 0u64..3000)
            .prop_map(|(channels, slots, start)| StrategySpec::FullBurst { channels, slots, start }),
        (0.0f64..=1.0, 0.0f64..=1.0, 1u64..200, prop::option::of(1u64..100), prop::option::of(1u32..20))
            .prop_map(|(y, x, window, windows, channels)| StrategySpec::FractionJam { y, x, window, windows, channels }),
        (prop::option::of(0u32..4), 0.0f64..=1.0, 0.0f64..=1.0)
            .prop_map(|(phase, y, x)| StrategySpec::PhaseTargeted { phase, y, x }),
    ]
}

/// Spend of every prefix, recomputed slot by slot from the jam sets.
fn max_prefix_spend(s: &JamSchedule) -> u64 {
    let mut spend = 0;
    let mut worst = 0;
    for run in s.runs() {
        for slot in run.start..run.start + run.len {
            spend += s.jam_set(slot).len() as u64;
            worst = worst.max(spend);
        }
    }
    worst
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn prefix_spend_never_exceeds_budget(
        kind in kind(),
        lg in 2u32..6,
        c in 1u32..8,
        t in 0u64..20_000,
        spec in spec(),
    ) {
        let p = params(kind, 1 << lg, c, t);
        prop_assume!(p.validate().is_ok());
        let s = match make_schedule(&spec, &p, t) {
            Ok(s) => s,
            Err(_) => return Ok(()),
        };
        prop_assert!(max_prefix_spend(&s) <= t);
        prop_assert_eq!(max_prefix_spend(&s), s.total_spend());
        prop_assert!(s.verify());
        for cut in [0, 1, 17, 1000, s.horizon()] {
            prop_assert!(s.spend_before(cut) <= s.actual_spend(cut));
            prop_assert!(s.actual_spend(cut) <= t);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn trial_invariants(
        kind in kind(),
        lg in 2u32..5,
        c in 1u32..4,
        t in 0u64..4096,
        spec in spec(),
        seed in any::<u64>(),
    ) {
        let p = params(kind, 1 << lg, c, t);
        prop_assume!(p.validate().is_ok());
        let Ok(s) = make_schedule(&spec, &p, t) else { return Ok(()) };
        let cap = 1 << 17;
        let mut rec = Recorder::default();
        let run = simulate(&p, &s, seed, cap, &mut rec).unwrap();

        // the adversary never spends more than it was given
        prop_assert!(run.ledger.adversary <= t);
        prop_assert_eq!(run.ledger.adversary, s.spend_before(run.termination.slot()));

        // every charged unit is one reported action
        let acts = rec.events.iter().filter(|e| matches!(e.kind, EventKind::Listen { .. } | EventKind::Broadcast { .. })).count();
        prop_assert_eq!(acts as u64, run.ledger.total_node_cost());

        // events in time order, statuses only move forward
        let mut last = vec![NodeStatus::Uninformed; p.n as usize];
        let mut slot = 0;
        for e in &rec.events {
            prop_assert!(e.slot >= slot);
            slot = e.slot;
            if matches!(e.kind, EventKind::Init) {
                last[e.node] = e.status_after;
            }
            prop_assert!(e.status_after >= last[e.node], "{:?}", e);
            last[e.node] = e.status_after;
        }
        prop_assert_eq!(last, run.final_status.clone());

        for u in 0..p.n as usize {
            if let (Some(i), Some(h)) = (run.first_informed[u], run.halted_at[u]) {
                prop_assert!(i <= h);
            }
        }
    }

    #[test]
    fn traces_are_byte_identical(kind in kind(), seed in any::<u64>(), t in 0u64..2048) {
        let p = params(kind, 8, 2, t);
        prop_assume!(p.validate().is_ok());
        let s = make_schedule(&StrategySpec::FullBurst { channels: 2, slots: None, start: 0 }, &p, t).unwrap();
        let trace = || {
            let mut w = TraceWriter::new(Vec::new(), 0);
            simulate(&p, &s, seed, 1 << 16, &mut w).unwrap();
            w.finish().unwrap()
        };
        prop_assert_eq!(trace(), trace());
    }

    #[test]
    fn schedule_ignores_node_randomness(kind in kind(), spec in spec(), t in 0u64..8192, s1 in any::<u64>(), s2 in any::<u64>()) {
        let p = params(kind, 16, 4, t);
        prop_assume!(p.validate().is_ok());
        let Ok(a) = make_schedule(&spec, &p, t) else { return Ok(()) };
        let b = make_schedule(&spec, &p, t).unwrap();
        prop_assert_eq!(a.hash(), b.hash());
        // a run never alters the schedule
        simulate(&p, &a, s1, 1 << 14, &mut ()).unwrap();
        simulate(&p, &a, s2, 1 << 14, &mut ()).unwrap();
        prop_assert!(a.verify());
        prop_assert_eq!(&a, &b);
    }
}
