//! Browser bindings: run a trial, show the epoch/phase layout, preview a
//! jam schedule. Every export takes a config in `key=value` form and
//! returns JSON.

use jamcast::engine::{simulate, EventKind, Observer, TraceEvent};
use jamcast::harness::ExperimentConfig;
use jamcast::metrics::{SafetyContext, SafetyMonitor};
use jamcast::protocols::NodeStatus;
use jamcast::rng::trial_seed;
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Browser runs stop here regardless of the config.
pub const DEMO_MAX_SLOTS: u64 = 1 << 24;

fn parse(config: &str) -> Result<ExperimentConfig, String> {
    config.parse::<ExperimentConfig>().map_err(|e| e.to_string())
}

#[derive(Default)]
struct Curve {
    informed: usize,
    halted: usize,
    /// Per node: holds the message, has halted.
    nodes: Vec<(bool, bool)>,
    points: Vec<(u64, usize, usize)>,
}

impl Observer for Curve {
    fn event(&mut self, ev: &TraceEvent) {
        if matches!(ev.kind, EventKind::End { .. }) {
            return;
        }
        if ev.node >= self.nodes.len() {
            self.nodes.resize(ev.node + 1, (false, false));
        }
        let (held, halted) = &mut self.nodes[ev.node];
        let mut changed = ev.kind == EventKind::Init;
        // an uninformed node that halts still lacks the message
        if matches!(ev.status_after, NodeStatus::Informed | NodeStatus::Helper) && !*held {
            *held = true;
            self.informed += 1;
            changed = true;
        }
        if ev.status_after == NodeStatus::Halted && !*halted {
            *halted = true;
            self.halted += 1;
            changed = true;
        }
        if !changed {
            return;
        }
        match self.points.last_mut() {
            Some(p) if p.0 == ev.slot => {
                p.1 = self.informed;
                p.2 = self.halted;
            }
            _ => self.points.push((ev.slot, self.informed, self.halted)),
        }
    }
}

#[derive(Serialize)]
pub struct TrialView {
    pub n: u32,
    pub termination_slot: u64,
    pub capped: bool,
    pub max_node_cost: u64,
    pub adversary_spend: u64,
    pub costs: Vec<u64>,
    pub violations: Vec<String>,
    /// (slot, nodes holding the message, halted nodes) after each change.
    pub curve: Vec<(u64, usize, usize)>,
}

pub fn trial_view(config: &str, trial: u64) -> Result<TrialView, String> {
    let cfg = parse(config)?;
    let schedule = cfg.validate().map_err(|e| e.to_string())?;
    let params = cfg.params();
    let mut obs = (SafetyMonitor::new(SafetyContext::for_params(&params)), Curve::default());
    let cap = cfg.max_slots.min(DEMO_MAX_SLOTS);
    let run = simulate(&params, &schedule, trial_seed(cfg.seed, trial), cap, &mut obs).map_err(|e| e.to_string())?;
    let violations = obs.0.finish().map_err(|e| e.to_string())?;
    Ok(TrialView {
        n: params.n,
        termination_slot: run.termination.slot(),
        capped: run.termination.capped(),
        max_node_cost: run.ledger.max_node_cost(),
        adversary_spend: run.ledger.adversary,
        costs: run.ledger.node,
        violations: violations.iter().map(ToString::to_string).collect(),
        curve: obs.1.points,
    })
}

#[derive(Serialize)]
pub struct SpanView {
    pub epoch: u32,
    pub phase: u32,
    pub start: u64,
    pub slots: u64,
    pub prob: f64,
    pub channels: u32,
    pub reference: bool,
}

pub fn layout_view(config: &str, epochs: u32) -> Result<Vec<SpanView>, String> {
    let cfg = parse(config)?;
    let params = cfg.params();
    params.validate().map_err(|e| e.to_string())?;
    let layout = params
        .layout()
        .ok_or_else(|| format!("{} has no epochs", params.kind))?;
    let reference = params.reference_phase();
    Ok(layout
        .take_while(|s| s.epoch <= epochs)
        .map(|s| SpanView {
            epoch: s.epoch,
            phase: s.phase,
            start: s.start,
            slots: s.slots,
            prob: s.prob,
            channels: s.channels(),
            reference: Some(s.phase) == reference,
        })
        .collect())
}

#[derive(Serialize)]
pub struct JamView {
    pub descriptor: String,
    pub spend: u64,
    pub horizon: u64,
    /// Slots covered by each column.
    pub per_column: u64,
    /// Jammed channel-slots in each column.
    pub columns: Vec<u64>,
    /// Most channels jammed in any one slot.
    pub peak: u64,
}

pub fn jam_view(config: &str, columns: u32) -> Result<JamView, String> {
    let cfg = parse(config)?;
    let schedule = cfg.validate().map_err(|e| e.to_string())?;
    let horizon = schedule.horizon().max(1);
    let width = columns.max(1) as u64;
    let per = horizon.div_ceil(width);
    let mut cols = vec![0u64; width as usize];
    let mut peak = 0;
    for run in schedule.runs() {
        let k = run.channels.len() as u64;
        peak = peak.max(k);
        // spread each run over the columns it overlaps
        let mut s = run.start;
        let end = run.start + run.len;
        while s < end {
            let col = s / per;
            let stop = ((col + 1) * per).min(end);
            cols[col as usize] += (stop - s) * k;
            s = stop;
        }
    }
    Ok(JamView {
        descriptor: schedule.descriptor().to_string(),
        spend: schedule.total_spend(),
        horizon,
        per_column: per,
        columns: cols,
        peak,
    })
}

fn to_json<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn run_trial(config: &str, trial: u32) -> Result<String, JsError> {
    to_json(trial_view(config, trial as u64))
}

#[wasm_bindgen]
pub fn phase_layout(config: &str, epochs: u32) -> Result<String, JsError> {
    to_json(layout_view(config, epochs))
}

#[wasm_bindgen]
pub fn jam_preview(config: &str, columns: u32) -> Result<String, JsError> {
    to_json(jam_view(config, columns))
}
