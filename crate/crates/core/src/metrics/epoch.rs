//! Blocking / non-blocking classification of adaptive-protocol epochs.
//!
//! Only the jam schedule and the slot layout are consulted, so the class of
//! an epoch is fixed before the trial runs.

use num_rational::Ratio;
use serde::Serialize;

use super::MetricsError;
use crate::adversary::JamSchedule;
use crate::protocols::{PhaseSpan, ProtocolParams};

/// Step-one thresholds: more than 1/10 of the slots with more than 1/10 of
/// the channels jammed.
pub const STEP1: (Ratio<u64>, Ratio<u64>) = (Ratio::new_raw(1, 10), Ratio::new_raw(1, 10));
/// Step-two thresholds, both 1/10^4.
pub const STEP2: (Ratio<u64>, Ratio<u64>) = (Ratio::new_raw(1, 10_000), Ratio::new_raw(1, 10_000));

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Blocking {
    Blocking,
    NonBlocking,
    /// Neither condition set holds.
    Mixed,
}

/// Jamming seen in one step of the reference phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepJam {
    pub slots: u64,
    /// Slots with more than the `y` fraction of channels jammed.
    pub heavy_slots: u64,
    /// `heavy_slots / slots`
    pub heavy_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochClass {
    pub epoch: u32,
    pub phase: u32,
    pub class: Blocking,
    pub steps: [StepJam; 2],
}

/// Counts slots of `[start, start + len)` in which more than `y` of
/// channels `1..=width` are jammed.
fn heavy_slots(s: &JamSchedule, start: u64, len: u64, width: u32, y: Ratio<u64>) -> u64 {
    let end = start + len;
    s.runs()
        .iter()
        .filter(|r| r.start < end && r.start + r.len > start)
        .filter(|r| {
            let jammed = r.channels.iter().filter(|c| c.0 <= width).count() as u64;
            Ratio::new(jammed, width as u64) > y
        })
        .map(|r| (r.start + r.len).min(end) - r.start.max(start))
        .sum()
}

fn step(s: &JamSchedule, span: &PhaseSpan, which: u8, y: Ratio<u64>) -> StepJam {
    let heavy = heavy_slots(s, span.step_start(which), span.slots, span.channels(), y);
    StepJam {
        slots: span.slots,
        heavy_slots: heavy,
        heavy_fraction: heavy as f64 / span.slots as f64,
    }
}

/// Classifies `epoch` by the jamming in its reference phase.
pub fn classify_epoch(
    schedule: &JamSchedule,
    params: &ProtocolParams,
    epoch: u32,
) -> Result<EpochClass, MetricsError> {
    let layout = params.layout().ok_or(MetricsError::NotAdaptive(params.kind))?;
    let phase = params.reference_phase().expect("adaptive protocol");
    if epoch <= phase {
        return Err(MetricsError::NoReferencePhase { epoch, phase });
    }
    let span = layout
        .skip_while(|s| s.epoch < epoch)
        .find(|s| s.phase == phase)
        .expect("layout is unbounded");
    let s1 = step(schedule, &span, 1, STEP1.1);
    let s2 = step(schedule, &span, 2, STEP2.1);

    // more than x of the slots heavy
    let over = |st: &StepJam, x: Ratio<u64>| Ratio::new(st.heavy_slots, st.slots) > x;
    // at least 1 - x of the slots light
    let under = |st: &StepJam, x: Ratio<u64>| {
        Ratio::new(st.slots - st.heavy_slots, st.slots) >= Ratio::from_integer(1) - x
    };
    let class = if over(&s1, STEP1.0) || over(&s2, STEP2.0) {
        Blocking::Blocking
    } else if under(&s1, STEP1.0) && under(&s2, STEP2.0) {
        Blocking::NonBlocking
    } else {
        Blocking::Mixed
    };
    Ok(EpochClass { epoch, phase, class, steps: [s1, s2] })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::{JamRun, JamSchedule};
    use crate::protocols::ProtocolKind;
    use crate::radio::Channel;

    fn params() -> ProtocolParams {
        ProtocolParams::new(ProtocolKind::MultiCastAdv, 16)
    }

    fn ref_span(epoch: u32) -> PhaseSpan {
        params()
            .layout()
            .unwrap()
            .find(|s| s.epoch == epoch && s.phase == 3)
            .unwrap()
    }

    fn sched(runs: Vec<JamRun>) -> JamSchedule {
        JamSchedule::from_runs(u64::MAX, "test".into(), runs).unwrap()
    }

    #[test]
    fn unjammed_is_non_blocking() {
        let c = classify_epoch(&JamSchedule::silent(0), &params(), 6).unwrap();
        assert_eq!(c.class, Blocking::NonBlocking);
        assert_eq!(c.phase, 3);
    }

    #[test]
    fn fully_jammed_is_blocking() {
        let sp = ref_span(6);
        let all: Vec<_> = (1..=8).map(Channel).collect();
        let s = sched(vec![JamRun { start: sp.start, len: 2 * sp.slots, channels: all }]);
        let c = classify_epoch(&s, &params(), 6).unwrap();
        assert_eq!(c.class, Blocking::Blocking);
        assert_eq!(c.steps[0].heavy_fraction, 1.0);
        assert_eq!(c.steps[1].heavy_fraction, 1.0);
        // a different epoch is untouched
        assert_eq!(classify_epoch(&s, &params(), 7).unwrap().class, Blocking::NonBlocking);
    }

    #[test]
    fn light_step_one_jamming_is_non_blocking() {
        // 3/32 of the 32 channels at phase 5 of n=64: below 1/10
        let p = ProtocolParams::new(ProtocolKind::MultiCastAdv, 64);
        let sp = p.layout().unwrap().find(|s| s.epoch == 7 && s.phase == 5).unwrap();
        let chs = vec![Channel(1), Channel(2), Channel(3)];
        let s = sched(vec![JamRun { start: sp.start, len: sp.slots, channels: chs }]);
        let c = classify_epoch(&s, &p, 7).unwrap();
        assert_eq!(c.steps[0].heavy_slots, 0);
        assert_eq!(c.class, Blocking::NonBlocking);
        // but a single heavy slot in step two blocks
        let chs = vec![Channel(1), Channel(2), Channel(3), Channel(4)];
        let mut runs = vec![JamRun { start: sp.start, len: sp.slots, channels: vec![Channel(1)] }];
        runs.push(JamRun { start: sp.step_start(2), len: 1, channels: chs });
        let c = classify_epoch(&sched(runs), &p, 7).unwrap();
        assert_eq!(c.steps[1].heavy_slots, 1);
        assert_eq!(c.class, Blocking::Blocking);
    }

    #[test]
    fn step_one_threshold_is_strict() {
        let sp = ref_span(6);
        // exactly 1/10 of slots heavy (rounded down) is not more than 1/10
        let heavy = sp.slots / 10;
        let all: Vec<_> = (1..=8).map(Channel).collect();
        let s = sched(vec![JamRun { start: sp.start, len: heavy, channels: all.clone() }]);
        let c = classify_epoch(&s, &params(), 6).unwrap();
        assert_eq!(c.class, Blocking::NonBlocking);
        let s = sched(vec![JamRun { start: sp.start, len: heavy + 1, channels: all }]);
        assert_eq!(classify_epoch(&s, &params(), 6).unwrap().class, Blocking::Blocking);
    }

    #[test]
    fn needs_reference_phase() {
        assert!(matches!(
            classify_epoch(&JamSchedule::silent(0), &params(), 3),
            Err(MetricsError::NoReferencePhase { .. })
        ));
        let p = ProtocolParams::new(ProtocolKind::MultiCast, 16);
        assert!(classify_epoch(&JamSchedule::silent(0), &p, 5).is_err());
    }

    #[test]
    fn classes_are_complementary() {
        // sweep heavy-slot counts around both thresholds: never mixed
        let sp = ref_span(6);
        let all: Vec<_> = (1..=8).map(Channel).collect();
        for len in [0, 1, sp.slots / 10, sp.slots / 10 + 1, sp.slots] {
            for len2 in [0, 1] {
                let mut runs = vec![];
                if len > 0 {
                    runs.push(JamRun { start: sp.start, len, channels: all.clone() });
                }
                if len2 > 0 {
                    runs.push(JamRun { start: sp.step_start(2), len: len2, channels: all.clone() });
                }
                let c = classify_epoch(&sched(runs), &params(), 6).unwrap();
                assert_ne!(c.class, Blocking::Mixed);
            }
        }
    }
}
