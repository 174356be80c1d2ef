use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use tdm_ies_core::optimizer::{default_grid, log_grid};
use tdm_ies_core::{
    classify_regime, conventional_t_oc, energy_ledger_check, grid_search_qies, minimize_bound,
    phase_durations, run_event_sim_with, run_fixed_step_with, t_oc_analytic, t_oc_upper_bound,
    validate_spec, Error, Evaluator, FinalCycleRule, ScenarioSpec, SimResult, ValidatedScenario,
};

use crate::config::load_config;
use crate::error::{CliError, Result};
use crate::output::{fmt_g9, write_sweep_csv, write_trace_csv};
use crate::sweep::{
    default_evaluators, run_sweep, Axis, EvaluatorKind, Preset, SweepRequest, Values,
};

#[derive(Debug, Parser)]
#[command(
    name = "tdm-ies",
    version,
    about = "Charge-time analysis for IES-assisted time-division wireless charging"
)]
pub struct Cli {
    /// Scenario file (`key=value`); reference parameters when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Reserved.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Phase durations, regime, closed-form charge time and bound.
    Analyze,
    /// Run the event-driven simulator.
    Simulate {
        /// Also run the fixed-step oracle with this step (s).
        #[arg(long)]
        dt: Option<f64>,
        #[command(flatten)]
        rule: RuleArg,
    },
    /// Minimise the bound and scan the charge time over IES capacity.
    Optimize {
        #[command(flatten)]
        range: RangeArgs,
        /// Scan with the simulator instead of the closed form.
        #[arg(long)]
        sim: bool,
    },
    /// Sweep one parameter and write a CSV table.
    Sweep(SweepArgs),
    /// Write the simulator's event trace as CSV.
    Trace {
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        rule: RuleArg,
    },
}

#[derive(Debug, Args)]
pub struct RuleArg {
    /// Release the transmitter once the last cycle's energy is drawn.
    #[arg(long)]
    early_release: bool,
}

impl RuleArg {
    fn rule(&self) -> FinalCycleRule {
        if self.early_release {
            FinalCycleRule::EarlyRelease
        } else {
            FinalCycleRule::HoldUntilFull
        }
    }
}

#[derive(Debug, Args, Default)]
pub struct RangeArgs {
    #[arg(long)]
    pub min: Option<f64>,
    #[arg(long)]
    pub max: Option<f64>,
    #[arg(long)]
    pub count: Option<usize>,
    /// Log-spaced values.
    #[arg(long)]
    pub log: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub axis: Option<Axis>,
    /// Explicit comma-separated values.
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["min", "max", "count", "log"])]
    pub values: Option<Vec<f64>>,
    #[command(flatten)]
    pub range: RangeArgs,
    /// Interpret q_ies values as fractions of q_c.
    #[arg(long)]
    pub ratio: bool,
    #[arg(long, value_enum, value_delimiter = ',')]
    pub evaluators: Option<Vec<EvaluatorKind>>,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl SweepArgs {
    pub fn request(&self, base: ScenarioSpec) -> Result<SweepRequest> {
        let mut req = match self.preset {
            Some(p) => {
                let req = p.request(base);
                if self.axis.is_some_and(|a| a != req.axis) {
                    return Err(CliError::Usage("--axis conflicts with --preset".into()));
                }
                req
            }
            None => SweepRequest {
                axis: self.axis.unwrap_or(Axis::QIes),
                values: None,
                ratio: false,
                evaluators: default_evaluators(&base.profile),
                base,
            },
        };
        req.ratio |= self.ratio;
        if let Some(e) = &self.evaluators {
            req.evaluators = e.clone();
        }
        req.values = match (&self.values, &self.range) {
            (Some(v), _) => Some(Values::List(v.clone())),
            (None, r) if r.min.is_some() || r.max.is_some() || r.count.is_some() => {
                let (Some(min), Some(max)) = (r.min, r.max) else {
                    return Err(CliError::Usage("--min and --max go together".into()));
                };
                let count = match (r.count, req.axis) {
                    (Some(c), _) => c,
                    (None, Axis::N) => (max - min).max(0.0) as usize + 1,
                    (None, _) => return Err(CliError::Usage("--count is required".into())),
                };
                Some(Values::Range {
                    min,
                    max,
                    count,
                    log: r.log,
                })
            }
            _ => None,
        };
        Ok(req)
    }
}

fn sink(
    out: Option<&Path>,
    stdout: &mut dyn Write,
    f: impl FnOnce(&mut dyn Write) -> Result<()>,
) -> Result<()> {
    match out {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            f(&mut w)?;
            w.flush()?;
            Ok(())
        }
        None => f(stdout),
    }
}

/// Runs one command, writing data to `stdout`.
pub fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<()> {
    let spec = match &cli.config {
        Some(p) => load_config(p)?,
        None => ScenarioSpec::default(),
    };
    match &cli.command {
        Command::Analyze => analyze(&validate_spec(spec)?, stdout),
        Command::Simulate { dt, rule } => simulate(&validate_spec(spec)?, *dt, rule.rule(), stdout),
        Command::Optimize { range, sim } => optimize(&validate_spec(spec)?, range, *sim, stdout),
        Command::Sweep(args) => {
            let curve = run_sweep(&args.request(spec)?)?;
            sink(args.out.as_deref(), stdout, |w| write_sweep_csv(&curve, w))
        }
        Command::Trace { out, rule } => {
            let v = validate_spec(spec)?;
            let sim = run_event_sim_with(&v, true, rule.rule())?;
            energy_ledger_check(&sim, &v)?;
            let trace = sim.trace.as_deref().unwrap_or_default();
            sink(out.as_deref(), stdout, |w| write_trace_csv(trace, w))
        }
    }
}

fn analyze(v: &ValidatedScenario, out: &mut dyn Write) -> Result<()> {
    let r = v.receiver();
    let n = v.n();
    if !v.profile().is_constant() || v.initial_soc() != 0.0 {
        return Err(Error::Unsupported(
            "closed forms need a constant profile starting from empty; use `simulate`".into(),
        )
        .into());
    }
    let ph = phase_durations(r);
    let regime = classify_regime(r, n);
    let t = t_oc_analytic(r, n);
    let conv = conventional_t_oc(r, n, v.profile(), 0.0);
    writeln!(out, "charge_phase_a_s={}", fmt_g9(ph.a))?;
    writeln!(out, "discharge_phase_b_s={}", fmt_g9(ph.b))?;
    writeln!(out, "cycle_c_s={}", fmt_g9(ph.c))?;
    writeln!(out, "full_cycles_k_l={}", ph.k_l)?;
    writeln!(out, "final_cycle_c_prime_s={}", fmt_g9(ph.c_prime))?;
    writeln!(out, "n_max={}", regime.n_max)?;
    writeln!(out, "standby={}", regime.standby)?;
    writeln!(out, "regime={}", regime.label())?;
    writeln!(out, "formula={}", t.formula_id.as_str())?;
    for (name, value) in &t.components {
        writeln!(out, "component_{name}_s={}", fmt_g9(*value))?;
    }
    writeln!(out, "t_oc_s={:.2}", t.t_oc)?;
    writeln!(out, "t_oc_exact_s={}", fmt_g9(t.t_oc))?;
    writeln!(out, "t_oc_bound_s={}", fmt_g9(t_oc_upper_bound(r, n)))?;
    writeln!(out, "t_oc_conventional_s={}", fmt_g9(conv))?;
    writeln!(out, "speedup={}", fmt_g9(conv / t.t_oc))?;
    Ok(())
}

fn print_sim(prefix: &str, s: &SimResult, out: &mut dyn Write) -> Result<()> {
    let list = |v: &[f64]| v.iter().map(|x| fmt_g9(*x)).collect::<Vec<_>>().join(",");
    writeln!(out, "{prefix}t_oc_s={}", fmt_g9(s.t_oc))?;
    writeln!(out, "{prefix}finish_s={}", list(&s.per_receiver_finish))?;
    writeln!(out, "{prefix}standby_s={}", list(&s.per_receiver_standby))?;
    writeln!(out, "{prefix}standby_total_s={}", fmt_g9(s.total_standby))?;
    writeln!(out, "{prefix}couplings={}", s.switch_count)?;
    writeln!(
        out,
        "{prefix}tx_busy_fraction={}",
        fmt_g9(s.tx_busy_fraction)
    )?;
    writeln!(out, "{prefix}events={}", s.event_count)?;
    Ok(())
}

fn simulate(
    v: &ValidatedScenario,
    dt: Option<f64>,
    rule: FinalCycleRule,
    out: &mut dyn Write,
) -> Result<()> {
    let sim = run_event_sim_with(v, true, rule)?;
    let ledger = energy_ledger_check(&sim, v)?;
    print_sim("", &sim, out)?;
    writeln!(out, "ledger_max_residual_j={}", fmt_g9(ledger.max_residual))?;
    if let Some(dt) = dt {
        let fx = run_fixed_step_with(v, dt, rule)?;
        print_sim("oracle_", &fx, out)?;
        writeln!(out, "oracle_t_oc_gap_s={}", fmt_g9(fx.t_oc - sim.t_oc))?;
    }
    Ok(())
}

fn optimize(
    v: &ValidatedScenario,
    range: &RangeArgs,
    sim: bool,
    out: &mut dyn Write,
) -> Result<()> {
    let r = v.receiver();
    let n = v.n();
    if v.profile().is_constant() {
        match minimize_bound(r, n) {
            Ok(b) => {
                writeln!(
                    out,
                    "bound_q_star_closed_form_j={}",
                    fmt_g9(b.closed_form.q_star)
                )?;
                writeln!(
                    out,
                    "bound_q_star_golden_j={}",
                    fmt_g9(b.golden_section.q_star)
                )?;
                writeln!(out, "bound_t_star_s={}", fmt_g9(b.closed_form.t_star))?;
                writeln!(out, "bound_at_boundary={}", b.closed_form.at_boundary)?;
                writeln!(out, "bound_disagreement={}", fmt_g9(b.disagreement()))?;
            }
            Err(e @ Error::DegenerateObjective(_)) => eprintln!("bound: {e}"),
            Err(e) => return Err(e.into()),
        }
    }
    let grid = match (range.min, range.max) {
        (Some(lo), Some(hi)) => {
            let count = range.count.unwrap_or(400);
            if range.log {
                log_grid(lo, hi, count)
            } else {
                Values::Range {
                    min: lo,
                    max: hi,
                    count,
                    log: false,
                }
                .expand()?
            }
        }
        (None, None) => default_grid(r.q_c),
        _ => return Err(CliError::Usage("--min and --max go together".into())),
    };
    let evaluator = if sim || !v.profile().is_constant() {
        Evaluator::EventSim
    } else {
        Evaluator::Analytic
    };
    let scan = grid_search_qies(v, &grid, evaluator)?;
    writeln!(
        out,
        "scan_evaluator={}",
        if evaluator == Evaluator::EventSim {
            "sim"
        } else {
            "analytic"
        }
    )?;
    writeln!(out, "scan_points={}", grid.len())?;
    writeln!(out, "scan_q_star_j={}", fmt_g9(scan.q_star))?;
    writeln!(out, "scan_t_star_s={}", fmt_g9(scan.t_star))?;
    Ok(())
}

/// Entry point shared by the binary and tests. Returns the exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(stderr, "{text}")
            } else {
                write!(stdout, "{text}")
            };
            return code;
        }
    };
    match execute(&cli, stdout) {
        Ok(()) => 0,
        Err(e) if e.is_broken_pipe() => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
