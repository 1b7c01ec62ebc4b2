//! Summary, manifest, plot and violation files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::{trace_path, Axis, ConfigError, ExperimentConfig, HarnessError, SweepResult};
use crate::metrics::{read_trace_file, Spread, TrialSummary, SUMMARY_HEADER};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(format!("unknown format {s:?}")),
        }
    }
}

pub fn code_version() -> String {
    match option_env!("JAMCAST_GIT_REV") {
        Some(rev) if !rev.is_empty() => format!("{}+{rev}", env!("CARGO_PKG_VERSION")),
        _ => env!("CARGO_PKG_VERSION").to_string(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: Axis,
    pub values: Vec<String>,
}

/// A config plus how it was run. Its text form is itself a valid config
/// file: the extra information lives in comments.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub config: ExperimentConfig,
    pub sweep: Option<SweepSpec>,
    pub format: Format,
}

impl Manifest {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# jamcast manifest");
        let _ = writeln!(s, "# code_version={}", code_version());
        let fmt = match self.format {
            Format::Csv => "csv",
            Format::Json => "json",
        };
        let _ = writeln!(s, "# format={fmt}");
        if let Some(sw) = &self.sweep {
            let _ = writeln!(s, "# sweep_axis={}", sw.axis.key());
            let _ = writeln!(s, "# sweep_values={}", sw.values.join(","));
        }
        s.push_str(&self.config.to_text());
        s
    }

    pub fn parse(text: &str) -> Result<Manifest, ConfigError> {
        let config: ExperimentConfig = text.parse()?;
        let mut axis = None;
        let mut values = None;
        let mut format = Format::Csv;
        for line in text.lines() {
            let Some(rest) = line.trim().strip_prefix('#') else { continue };
            let Some((k, v)) = rest.trim().split_once('=') else { continue };
            match k.trim() {
                "sweep_axis" => axis = Some(v.trim().parse::<Axis>()?),
                "sweep_values" => {
                    values = Some(v.split(',').map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect())
                }
                "format" => {
                    format = v.trim().parse().map_err(|_| ConfigError::BadValue {
                        key: "format",
                        value: v.trim().to_string(),
                    })?
                }
                _ => {}
            }
        }
        let sweep = match (axis, values) {
            (Some(axis), Some(values)) => Some(SweepSpec { axis, values }),
            (None, None) => None,
            _ => return Err(ConfigError::NoValues),
        };
        Ok(Manifest { config, sweep, format })
    }
}

pub fn summary_csv(summaries: &[TrialSummary]) -> Result<String, HarnessError> {
    if summaries.is_empty() {
        return Err(HarnessError::Empty);
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    for s in summaries {
        w.serialize(s.record()).map_err(crate::metrics::MetricsError::from)?;
    }
    let bytes = w.into_inner().map_err(|e| HarnessError::Io("summary".into(), e.into_error()))?;
    let text = String::from_utf8(bytes).expect("csv output is utf-8");
    debug_assert!(text.starts_with(SUMMARY_HEADER));
    Ok(text)
}

pub fn summary_json(summaries: &[TrialSummary]) -> Result<String, HarnessError> {
    if summaries.is_empty() {
        return Err(HarnessError::Empty);
    }
    let records: Vec<_> = summaries.iter().map(TrialSummary::record).collect();
    Ok(serde_json::to_string_pretty(&records).expect("records serialize") + "\n")
}

fn write(dir: &Path, name: &str, body: &str, written: &mut Vec<PathBuf>) -> Result<(), HarnessError> {
    let path = dir.join(name);
    fs::write(&path, body).map_err(|e| HarnessError::Io(path.clone(), e))?;
    written.push(path);
    Ok(())
}

fn write_summary(
    dir: &Path,
    summaries: &[TrialSummary],
    format: Format,
    written: &mut Vec<PathBuf>,
) -> Result<(), HarnessError> {
    match format {
        Format::Csv => write(dir, "summary.csv", &summary_csv(summaries)?, written),
        Format::Json => write(dir, "summary.json", &summary_json(summaries)?, written),
    }
}

/// Lists every violation, with the surrounding trace rows when a trace
/// file exists.
fn violation_dump(dir: &Path, tagged: &[(Option<usize>, &TrialSummary)]) -> Option<String> {
    const CONTEXT: usize = 8;
    let mut out = String::new();
    for &(tag, s) in tagged {
        if s.violations.is_empty() {
            continue;
        }
        let rows = read_trace_file(&trace_path(dir, tag, s.trial_id)).ok();
        for v in &s.violations {
            let _ = writeln!(out, "trial {} ({}): {v}", s.trial_id, s.protocol);
            if let Some(rows) = &rows {
                let at = rows.partition_point(|r| r.slot < v.slot);
                let lo = at.saturating_sub(CONTEXT);
                let hi = (at + CONTEXT).min(rows.len());
                for r in &rows[lo..hi] {
                    let ch = r.channel.map(|c| c.to_string()).unwrap_or_default();
                    let _ = writeln!(
                        out,
                        "    {} {} {} {} {} {} {}",
                        r.slot, r.node_id, r.protocol_phase_label, r.action_kind, ch, r.outcome_kind, r.status_after
                    );
                }
            }
        }
    }
    (!out.is_empty()).then_some(out)
}

fn create_dir(dir: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::Io(dir.to_path_buf(), e))
}

/// Writes the summary, manifest and (if needed) violation dump of a run.
pub fn emit_run(
    dir: &Path,
    summaries: &[TrialSummary],
    manifest: &Manifest,
) -> Result<Vec<PathBuf>, HarnessError> {
    if summaries.is_empty() {
        return Err(HarnessError::Empty);
    }
    create_dir(dir)?;
    let mut written = Vec::new();
    write_summary(dir, summaries, manifest.format, &mut written)?;
    write(dir, "manifest.txt", &manifest.to_text(), &mut written)?;
    let tagged: Vec<_> = summaries.iter().map(|s| (None, s)).collect();
    if let Some(dump) = violation_dump(dir, &tagged) {
        write(dir, "violations.txt", &dump, &mut written)?;
    }
    Ok(written)
}

fn plot_file(points: &[(f64, Spread)]) -> String {
    let mut s = String::from("# x median p25 p75\n");
    for (x, sp) in points {
        let _ = writeln!(s, "{x} {} {} {}", sp.median, sp.p25, sp.p75);
    }
    s
}

/// Writes the sweep summary, per-point table, plot files, the budget
/// report when there is one, the manifest and any violation dump.
pub fn emit_sweep(dir: &Path, result: &SweepResult, manifest: &Manifest) -> Result<Vec<PathBuf>, HarnessError> {
    let flat: Vec<TrialSummary> = result.summaries().cloned().collect();
    if flat.is_empty() {
        return Err(HarnessError::Empty);
    }
    create_dir(dir)?;
    let mut written = Vec::new();
    write_summary(dir, &flat, manifest.format, &mut written)?;

    let key = result.axis.key();
    let mut table = format!(
        "{key},trials,capped,spend_median,cost_median,cost_p25,cost_p75,time_median,time_p25,time_p75\n"
    );
    let mut cost = Vec::new();
    let mut time = Vec::new();
    for p in &result.points {
        let c = Spread::of(p.summaries.iter().map(|s| s.max_node_cost as f64));
        let t = Spread::of(p.summaries.iter().map(|s| s.termination.slot() as f64));
        let sp = Spread::of(p.summaries.iter().map(|s| s.adversary_spend as f64));
        let capped = p.summaries.iter().filter(|s| s.termination.capped()).count();
        let _ = writeln!(
            table,
            "{},{},{capped},{},{},{},{},{},{},{}",
            p.value,
            p.summaries.len(),
            sp.median,
            c.median,
            c.p25,
            c.p75,
            t.median,
            t.p25,
            t.p75
        );
        cost.push((p.x, c));
        time.push((p.x, t));
    }
    write(dir, "sweep.csv", &table, &mut written)?;
    write(dir, &format!("cost_vs_{key}.dat"), &plot_file(&cost), &mut written)?;
    write(dir, &format!("time_vs_{key}.dat"), &plot_file(&time), &mut written)?;
    if let Some(report) = &result.report {
        let body = serde_json::to_string_pretty(report).expect("report serializes") + "\n";
        write(dir, "report.json", &body, &mut written)?;
    }
    write(dir, "manifest.txt", &manifest.to_text(), &mut written)?;
    let tagged: Vec<_> = result
        .points
        .iter()
        .enumerate()
        .flat_map(|(i, p)| p.summaries.iter().map(move |s| (Some(i), s)))
        .collect();
    if let Some(dump) = violation_dump(dir, &tagged) {
        write(dir, "violations.txt", &dump, &mut written)?;
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::run_trials;
    use crate::protocols::ProtocolKind;

    fn cfg() -> ExperimentConfig {
        let mut c = ExperimentConfig::new(ProtocolKind::MultiCastCore, 8);
        c.budget = Some(128);
        c.a = 1024.0;
        c.trials = 2;
        c.strategy = "full_burst(k=2)".parse().unwrap();
        c
    }

    #[test]
    fn csv_header_is_fixed() {
        let s = run_trials(&cfg(), false).unwrap();
        let text = summary_csv(&s).unwrap();
        assert_eq!(text.lines().next().unwrap(), SUMMARY_HEADER);
        assert_eq!(text.lines().count(), 3);
        assert!(summary_csv(&[]).is_err());
    }

    #[test]
    fn json_has_same_fields() {
        let s = run_trials(&cfg(), false).unwrap();
        let v: serde_json::Value = serde_json::from_str(&summary_json(&s).unwrap()).unwrap();
        let obj = v.as_array().unwrap()[0].as_object().unwrap();
        let keys: Vec<&str> = obj.keys().map(String::as_str).collect();
        let mut want: Vec<&str> = SUMMARY_HEADER.split(',').collect();
        want.sort();
        let mut got = keys.clone();
        got.sort();
        assert_eq!(got, want);
    }

    #[test]
    fn manifest_round_trips() {
        let m = Manifest {
            config: cfg(),
            sweep: Some(SweepSpec { axis: Axis::Budget, values: vec!["64".into(), "128".into()] }),
            format: Format::Json,
        };
        assert_eq!(Manifest::parse(&m.to_text()).unwrap(), m);
        let plain: ExperimentConfig = m.to_text().parse().unwrap();
        assert_eq!(plain, m.config);
    }

    #[test]
    fn emit_writes_files() {
        let dir = tempfile::tempdir().unwrap();
        let s = run_trials(&cfg(), false).unwrap();
        let m = Manifest { config: cfg(), sweep: None, format: Format::Csv };
        let files = emit_run(dir.path(), &s, &m).unwrap();
        assert!(files.iter().any(|f| f.ends_with("summary.csv")));
        assert!(files.iter().any(|f| f.ends_with("manifest.txt")));
        assert!(emit_run(dir.path(), &[], &m).is_err());
    }

    #[test]
    fn unwritable_dir_fails() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("plain");
        fs::write(&file, "x").unwrap();
        let s = run_trials(&cfg(), false).unwrap();
        let m = Manifest { config: cfg(), sweep: None, format: Format::Csv };
        assert!(matches!(emit_run(&file.join("sub"), &s, &m), Err(HarnessError::Io(..))));
    }
}
