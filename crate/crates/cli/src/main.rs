use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use jamcast::harness::{
    emit_run, emit_sweep, run_trials, summary_csv, summary_json, sweep, Axis, ExperimentConfig, Format, HarnessError,
    Manifest, SweepSpec,
};
use jamcast::metrics::{read_trace_file, verify_safety, MetricsError, SafetyContext};
use jamcast::TrialSummary;

const OK: u8 = 0;
const INVALID: u8 = 1;
const VIOLATION: u8 = 2;
const CAPPED: u8 = 3;

#[derive(Parser)]
#[command(name = "jamcast", version, about = "Broadcast under budgeted jamming: trials, sweeps and trace checks")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the trials of one config.
    Run(RunArgs),
    /// Run a config at every value of one parameter.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// T, n, C or alpha.
        #[arg(long)]
        axis: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
    },
    /// Re-check a trace file against the safety invariants.
    Verify {
        trace: PathBuf,
        /// Config the trace came from; inferred from the trace when absent.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    /// Output directory; the summary goes to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: Format,
    #[arg(long)]
    emit_trace: bool,
    /// Exit with 3 if any trial hit the slot cap.
    #[arg(long)]
    strict: bool,
    /// Run trials one at a time.
    #[arg(long)]
    serial: bool,
}

fn load_config(path: &Path) -> Result<ExperimentConfig, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    text.parse().map_err(|e| format!("{}: {e}", path.display()))
}

impl RunArgs {
    fn config(&self) -> Result<ExperimentConfig, String> {
        let mut cfg = load_config(&self.config)?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(t) = self.trials {
            cfg.trials = t;
        }
        if let Some(out) = &self.out {
            cfg.out = Some(out.clone());
        }
        if self.emit_trace {
            cfg.emit_trace = true;
        }
        if cfg.emit_trace && cfg.out.is_none() {
            return Err("--emit-trace needs an output directory".into());
        }
        Ok(cfg)
    }
}

fn status<'a>(summaries: impl IntoIterator<Item = &'a TrialSummary>, strict: bool) -> u8 {
    let mut code = OK;
    for s in summaries {
        if !s.violations.is_empty() {
            return VIOLATION;
        }
        if strict && s.termination.capped() {
            code = CAPPED;
        }
    }
    code
}

fn print_summaries(summaries: &[TrialSummary], format: Format) -> Result<(), HarnessError> {
    let text = match format {
        Format::Csv => summary_csv(summaries)?,
        Format::Json => summary_json(summaries)?,
    };
    let _ = std::io::stdout().write_all(text.as_bytes());
    Ok(())
}

fn run(args: RunArgs) -> Result<u8, (u8, String)> {
    let cfg = args.config().map_err(|e| (INVALID, e))?;
    let summaries = run_trials(&cfg, !args.serial).map_err(|e| (INVALID, e.to_string()))?;
    match &cfg.out {
        Some(dir) => {
            let manifest = Manifest { config: cfg.clone(), sweep: None, format: args.format };
            let files = emit_run(dir, &summaries, &manifest).map_err(|e| (INVALID, e.to_string()))?;
            eprintln!("wrote {} files to {}", files.len(), dir.display());
        }
        None => print_summaries(&summaries, args.format).map_err(|e| (INVALID, e.to_string()))?,
    }
    Ok(status(&summaries, args.strict))
}

fn run_sweep(args: RunArgs, axis: &str, values: Vec<String>) -> Result<u8, (u8, String)> {
    let cfg = args.config().map_err(|e| (INVALID, e))?;
    let axis: Axis = axis.parse().map_err(|e: jamcast::harness::ConfigError| (INVALID, e.to_string()))?;
    let res = sweep(&cfg, axis, &values, !args.serial).map_err(|e| (INVALID, e.to_string()))?;
    match &cfg.out {
        Some(dir) => {
            let manifest = Manifest {
                config: cfg.clone(),
                sweep: Some(SweepSpec { axis, values }),
                format: args.format,
            };
            let files = emit_sweep(dir, &res, &manifest).map_err(|e| (INVALID, e.to_string()))?;
            eprintln!("wrote {} files to {}", files.len(), dir.display());
        }
        None => {
            let all: Vec<_> = res.summaries().cloned().collect();
            print_summaries(&all, args.format).map_err(|e| (INVALID, e.to_string()))?;
        }
    }
    if let Some(r) = &res.report {
        for (name, fit) in [("cost", &r.cost_fit), ("time", &r.time_fit)] {
            match fit {
                Some(f) => eprintln!("{name} exponent {:.3} (rms residual {:.3})", f.exponent, f.residual),
                None => eprintln!("{name} exponent unavailable"),
            }
        }
    }
    Ok(status(res.summaries(), args.strict))
}

fn verify(trace: &Path, config: Option<&Path>) -> Result<u8, (u8, String)> {
    let rows = read_trace_file(trace).map_err(|e| (INVALID, e.to_string()))?;
    let events = rows
        .iter()
        .map(|r| r.to_event())
        .collect::<Result<Vec<_>, MetricsError>>()
        .map_err(|e| (INVALID, e.to_string()))?;
    let ctx = match config {
        Some(path) => {
            let cfg = load_config(path).map_err(|e| (INVALID, e))?;
            SafetyContext::for_params(&cfg.params())
        }
        None => SafetyContext::infer(&events).map_err(|e| (INVALID, e.to_string()))?,
    };
    let violations = verify_safety(&events, ctx).map_err(|e| (INVALID, e.to_string()))?;
    for v in &violations {
        println!("{v}");
    }
    eprintln!("{} rows, {} violations", rows.len(), violations.len());
    Ok(if violations.is_empty() { OK } else { VIOLATION })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { INVALID } else { OK });
        }
    };
    let result = match cli.cmd {
        Cmd::Run(args) => run(args),
        Cmd::Sweep { run, axis, values } => run_sweep(run, &axis, values),
        Cmd::Verify { trace, config } => verify(&trace, config.as_deref()),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
