//! MultiCastC reproduces MultiCast round for round.

use jamcast::adversary::JamSchedule;
use jamcast::engine::simulate;
use jamcast::protocols::{ProtocolKind, ProtocolParams};
use jamcast::rng::trial_seed;

#[test]
fn limited_channels_follow_unlimited_run() {
    let n = 16;
    for c in [2u32, 4, 8] {
        let round = (n / 2 / c) as u64;
        for k in 0..10 {
            let seed = trial_seed(99, k);
            let mut mc = ProtocolParams::new(ProtocolKind::MultiCast, n);
            mc.a = 1.0;
            let mut mcc = mc.clone();
            mcc.kind = ProtocolKind::MultiCastC;
            mcc.channels = Some(c);
            let silent = JamSchedule::silent(0);
            let a = simulate(&mc, &silent, seed, u64::MAX, &mut ()).unwrap();
            let b = simulate(&mcc, &silent, seed, u64::MAX, &mut ()).unwrap();
            let rounds: Vec<_> = b.first_informed.iter().map(|s| s.map(|s| s / round)).collect();
            assert_eq!(rounds, a.first_informed, "C={c} trial {k}");
            let halts: Vec<_> = a.halted_at.iter().map(|s| s.map(|s| s * round)).collect();
            assert_eq!(halts, b.halted_at);
            assert_eq!(a.ledger.node, b.ledger.node);
        }
    }
}

#[test]
fn bad_channel_counts_rejected() {
    let mut p = ProtocolParams::new(ProtocolKind::MultiCastC, 16);
    assert!(p.validate().is_err());
    p.channels = Some(9);
    assert!(p.validate().is_err());
    p.channels = Some(3);
    assert!(p.validate().is_ok());
}
