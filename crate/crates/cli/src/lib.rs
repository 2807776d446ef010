//! Command implementations behind the `cen-meta` binary.

pub mod format;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use cen_meta::analytic::{match_fixed_range, match_flexible_ratio, stp_file, InLoadStats};
use cen_meta::config::{ConfigDocument, OptimizeSection};
use cen_meta::meta::{beta_meta, MomentSummary};
use cen_meta::model::{db_to_linear, InScheme, NetworkConfig};
use cen_meta::montecarlo::{ccdf_sup_gap, empirical_summaries, interior_grid, run_campaign_multi};
use cen_meta::optimizer::{coordinate_descent, Objective, OptimizationResult};
use cen_meta::parallel::{map_indexed, with_threads, Execution};
use cen_meta::Error;

use format::{num, nums, sig9};

/// Resample rate above which `simulate` attaches a warning.
pub const RESAMPLE_WARN_RATE: f64 = 0.01;
/// Points of the `meta_curve` sweep output, `x = k/(n-1)`.
pub const META_CURVE_POINTS: usize = 21;

#[derive(Debug, Parser)]
#[command(name = "cen-meta", version, about = "Coverage, meta distribution and nulling design for cache-enabled networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Analytic report for one threshold.
    Analyze(AnalyzeArgs),
    /// Analytic outputs over a grid of one parameter.
    Sweep(SweepArgs),
    /// Monte Carlo CSTP samples with an analytic comparison.
    Simulate(SimulateArgs),
    /// Coordinate-descent design of range, nulling budget and cache factor.
    Optimize(OptimizeArgs),
    /// Fixed range with the same mean request load as a flexible ratio, or back.
    MatchRange(MatchRangeArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// JSON config document; built-in defaults when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Worker threads; all cores when omitted.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value_t = 5.0, allow_negative_numbers = true)]
    pub tau_db: f64,
    #[arg(long, default_value_t = 0.9)]
    pub x0: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SweepVar {
    #[value(name = "tau_db")]
    TauDb,
    #[value(name = "r_i")]
    RI,
    #[value(name = "l")]
    L,
    #[value(name = "xi")]
    Xi,
    #[value(name = "eta")]
    Eta,
}

impl SweepVar {
    fn column(self) -> &'static str {
        match self {
            SweepVar::TauDb => "tau_db",
            SweepVar::RI => "r_i",
            SweepVar::L => "l",
            SweepVar::Xi => "xi",
            SweepVar::Eta => "eta",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum SweepOutput {
    Stp,
    StpFile,
    Variance,
    MetaAtX0,
    MetaCurve,
    M1,
    M2,
    Epsilon,
    ThetaBar,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SchemeSelector {
    Fixed,
    Flexible,
    BothMatched,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Swept variable; `r_i` is meters for the fixed selector and `μ` otherwise.
    #[arg(long = "var", value_enum)]
    pub var: SweepVar,
    #[arg(long, allow_negative_numbers = true)]
    pub start: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub stop: Option<f64>,
    #[arg(long)]
    pub step: Option<f64>,
    /// Explicit comma-separated grid instead of start/stop/step.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub values: Option<Vec<f64>>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "stp")]
    pub outputs: Vec<SweepOutput>,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub tau_db: f64,
    #[arg(long, default_value_t = 0.9)]
    pub x0: f64,
    /// Scheme(s) to evaluate; the config's own scheme when omitted.
    #[arg(long, value_enum)]
    pub scheme: Option<SchemeSelector>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value_t = 5.0, allow_negative_numbers = true)]
    pub tau_db: f64,
    #[arg(long, default_value_t = 0.9)]
    pub x0: f64,
    /// Overrides the config's Monte Carlo seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub topologies: Option<usize>,
    #[arg(long)]
    pub fading: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum ObjectiveKind {
    Stp,
    InverseVariance,
    Meta,
    Weighted,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, allow_negative_numbers = true)]
    pub tau_db: Option<f64>,
    /// Overrides the objective's reliability threshold.
    #[arg(long)]
    pub x0: Option<f64>,
    #[arg(long, value_enum)]
    pub objective: Option<ObjectiveKind>,
    #[arg(long)]
    pub eta: Option<f64>,
}

#[derive(Debug, Args)]
pub struct MatchRangeArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Flexible ratio to convert into a fixed range in meters.
    #[arg(long, conflicts_with = "r_c", required_unless_present = "r_c")]
    pub mu: Option<f64>,
    /// Fixed range in meters to convert into a flexible ratio.
    #[arg(long)]
    pub r_c: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// How a successful command ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Done,
    BudgetExhausted,
}

/// Exit status for an error: 2 for bad input, 1 otherwise.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    let bad_input = err.chain().any(|cause| {
        matches!(cause.downcast_ref::<Error>(), Some(Error::InvalidParameter { .. }) | Some(Error::Json(_)))
            || cause.downcast_ref::<serde_json::Error>().is_some()
    });
    if bad_input {
        2
    } else {
        1
    }
}

pub fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Analyze(a) => {
            let doc = load(a.common.config.as_deref())?;
            let report = with_threads(a.common.threads, || cmd_analyze(&doc.network, a.tau_db, a.x0))?;
            emit(a.common.out.as_deref(), &pretty(&report))?;
            Ok(Outcome::Done)
        }
        Command::Sweep(a) => {
            let doc = load(a.common.config.as_deref())?;
            let spec = SweepSpec::from_args(&a)?;
            let csv = with_threads(a.common.threads, || cmd_sweep(&doc, &spec))?;
            emit(a.common.out.as_deref(), &csv)?;
            Ok(Outcome::Done)
        }
        Command::Simulate(a) => {
            let doc = load(a.common.config.as_deref())?;
            let Some(out) = a.common.out.as_deref() else {
                return Err(invalid("out", "simulate needs --out for the CSV and its JSON sidecar"));
            };
            let (csv, summary) = with_threads(a.common.threads, || cmd_simulate(&doc, &a))?;
            emit(Some(out), &csv)?;
            emit(Some(&sidecar_path(out)), &pretty(&summary))?;
            Ok(Outcome::Done)
        }
        Command::Optimize(a) => {
            let doc = load(a.common.config.as_deref())?;
            let result = with_threads(a.common.threads, || cmd_optimize(&doc, &a))?;
            emit(a.common.out.as_deref(), &pretty(&result.1))?;
            Ok(if result.0.budget_exhausted { Outcome::BudgetExhausted } else { Outcome::Done })
        }
        Command::MatchRange(a) => {
            let doc = load(a.config.as_deref())?;
            let value = cmd_match_range(&doc.network, a.mu, a.r_c)?;
            emit(a.out.as_deref(), &format!("{}\n", sig9(value)))?;
            Ok(Outcome::Done)
        }
    }
}

fn invalid(name: &'static str, reason: impl Into<String>) -> anyhow::Error {
    Error::InvalidParameter { name, reason: reason.into() }.into()
}

pub fn load(path: Option<&Path>) -> Result<ConfigDocument> {
    match path {
        None => Ok(ConfigDocument::default()),
        Some(p) => ConfigDocument::load(p).with_context(|| format!("loading config {}", p.display())),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
        Some(p) => {
            let mut w = BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?);
            w.write_all(text.as_bytes())?;
            w.flush()?;
        }
    }
    Ok(())
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON value serializes");
    s.push('\n');
    s
}

/// `samples.csv` → `samples.json`.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

fn check_x0(x0: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x0) {
        return Err(invalid("x0", format!("must lie in [0, 1], got {x0}")));
    }
    Ok(())
}

fn scheme_json(cfg: &NetworkConfig) -> Value {
    match cfg.scheme {
        InScheme::Fixed { r_c } => json!({"scheme": "fixed", "r_c": num(r_c)}),
        InScheme::Flexible { mu } => json!({"scheme": "flexible", "mu": num(mu)}),
    }
}

/// Analytic report for `cfg` at `tau_db`.
pub fn cmd_analyze(cfg: &NetworkConfig, tau_db: f64, x0: f64) -> Result<Value> {
    check_x0(x0)?;
    cfg.validate()?;
    let tau = db_to_linear(tau_db);
    let stats = InLoadStats::new(cfg)?;
    let design = cfg.cache_design()?;
    let stp = stp_file(tau, cfg)?;
    let ms = MomentSummary::compute(tau, cfg)?;
    let meta = beta_meta(&ms, x0)?;
    let hit = design.hit_mass;
    Ok(json!({
        "config_hash": cfg.hash(),
        "scheme": scheme_json(cfg),
        "tau_db": num(tau_db),
        "x0": num(x0),
        "theta_bar": num(stats.theta_bar),
        "epsilon": num(stats.epsilon),
        "theta_i_pmf": nums(&stats.theta_i_pmf),
        "n_c": design.n_c,
        "hit_mass": num(hit),
        "stp_file": num(stp),
        "stp_total": num(hit * stp),
        "m1": num(ms.m1),
        "m2": num(ms.m2),
        "variance_file": num(ms.variance()),
        "variance_total": num(hit * ms.variance()),
        "meta_x0_file": num(meta),
        "meta_x0_total": num(hit * meta),
        "beta_shape": ms.beta_shape().map_or(Value::Null, |(a, b)| nums(&[a, b])),
    }))
}

/// Parsed `sweep` request.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub var: SweepVar,
    pub grid: Vec<f64>,
    pub outputs: Vec<SweepOutput>,
    pub tau_db: f64,
    pub x0: f64,
    pub scheme: Option<SchemeSelector>,
}

impl SweepSpec {
    pub fn from_args(a: &SweepArgs) -> Result<SweepSpec> {
        let grid = match (&a.values, a.start, a.stop, a.step) {
            (Some(v), None, None, None) => v.clone(),
            (None, Some(start), Some(stop), Some(step)) => {
                if step.is_nan() || step <= 0.0 || start.is_nan() || stop.is_nan() || stop < start {
                    return Err(invalid("step", format!("need step > 0 and stop >= start, got {start}:{step}:{stop}")));
                }
                let n = ((stop - start) / step + 1e-9).floor() as usize;
                (0..=n).map(|k| start + k as f64 * step).collect()
            }
            _ => return Err(invalid("grid", "give either --values or all of --start, --stop, --step")),
        };
        if grid.is_empty() || grid.iter().any(|v| !v.is_finite()) {
            return Err(invalid("grid", "must be a nonempty list of finite numbers"));
        }
        if a.outputs.is_empty() {
            return Err(invalid("outputs", "need at least one output"));
        }
        check_x0(a.x0)?;
        Ok(SweepSpec { var: a.var, grid, outputs: a.outputs.clone(), tau_db: a.tau_db, x0: a.x0, scheme: a.scheme })
    }

    pub fn header(&self) -> Vec<String> {
        let mut h = vec!["index".to_string(), "scheme".to_string(), self.var.column().to_string()];
        if self.scheme == Some(SchemeSelector::BothMatched) {
            h.push("r_c".to_string());
        }
        if self.var == SweepVar::Eta {
            h.extend(["r_i_star", "l_star", "xi_star"].map(String::from));
        }
        for o in &self.outputs {
            match o {
                SweepOutput::MetaCurve => {
                    h.extend((0..META_CURVE_POINTS).map(|k| format!("meta_curve_{}", sig9(curve_x(k)))))
                }
                other => h.push(output_name(*other).to_string()),
            }
        }
        h.push("error".to_string());
        h
    }
}

fn curve_x(k: usize) -> f64 {
    k as f64 / (META_CURVE_POINTS - 1) as f64
}

fn output_name(o: SweepOutput) -> &'static str {
    match o {
        SweepOutput::Stp => "stp",
        SweepOutput::StpFile => "stp_file",
        SweepOutput::Variance => "variance",
        SweepOutput::MetaAtX0 => "meta_at_x0",
        SweepOutput::MetaCurve => "meta_curve",
        SweepOutput::M1 => "m1",
        SweepOutput::M2 => "m2",
        SweepOutput::Epsilon => "epsilon",
        SweepOutput::ThetaBar => "theta_bar",
    }
}

fn output_width(o: SweepOutput) -> usize {
    if o == SweepOutput::MetaCurve {
        META_CURVE_POINTS
    } else {
        1
    }
}

/// One sweep row before rendering.
struct SweepRow {
    scheme: &'static str,
    value: f64,
    r_c: Option<f64>,
    optimum: Option<(f64, usize, f64)>,
    cells: std::result::Result<Vec<f64>, String>,
}

/// Flexible ratio implied by the document's scheme at its own `ξ`.
fn base_mu(cfg: &NetworkConfig) -> Result<f64> {
    Ok(match cfg.scheme {
        InScheme::Flexible { mu } => mu,
        InScheme::Fixed { r_c } => match_flexible_ratio(r_c, cfg.lambda_bs, cfg.xi)?,
    })
}

fn sweep_outputs(spec: &SweepSpec, tau: f64, cfg: &NetworkConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let hit = cfg.cache_design()?.hit_mass;
    let needs_moments = spec.outputs.iter().any(|o| {
        matches!(o, SweepOutput::Variance | SweepOutput::MetaAtX0 | SweepOutput::MetaCurve | SweepOutput::M1 | SweepOutput::M2)
    });
    let ms = if needs_moments { Some(MomentSummary::compute(tau, cfg)?) } else { None };
    let ms = || ms.expect("moments computed when requested");
    let needs_stp = spec.outputs.iter().any(|o| matches!(o, SweepOutput::Stp | SweepOutput::StpFile));
    let stp = if needs_stp { stp_file(tau, cfg)? } else { f64::NAN };
    let stats = InLoadStats::new(cfg)?;
    let mut cells = Vec::new();
    for o in &spec.outputs {
        match o {
            SweepOutput::Stp => cells.push(hit * stp),
            SweepOutput::StpFile => cells.push(stp),
            SweepOutput::Variance => cells.push(hit * ms().variance()),
            SweepOutput::MetaAtX0 => cells.push(hit * beta_meta(&ms(), spec.x0)?),
            SweepOutput::MetaCurve => {
                for k in 0..META_CURVE_POINTS {
                    cells.push(hit * beta_meta(&ms(), curve_x(k))?);
                }
            }
            SweepOutput::M1 => cells.push(ms().m1),
            SweepOutput::M2 => cells.push(ms().m2),
            SweepOutput::Epsilon => cells.push(stats.epsilon),
            SweepOutput::ThetaBar => cells.push(stats.theta_bar),
        }
    }
    Ok(cells)
}

/// Configuration for one grid value and one scheme, with the fixed range
/// when it was solved by matching.
fn sweep_point(
    spec: &SweepSpec,
    base: &NetworkConfig,
    fixed: bool,
    value: f64,
) -> Result<(NetworkConfig, f64, Option<f64>)> {
    let mut cfg = base.clone();
    let mut tau_db = spec.tau_db;
    match spec.var {
        SweepVar::TauDb => tau_db = value,
        SweepVar::L => {
            if value < 0.0 || value.fract() != 0.0 {
                return Err(invalid("L", format!("must be a nonnegative integer, got {value}")));
            }
            cfg.l = value as usize;
        }
        SweepVar::Xi => cfg.xi = value,
        SweepVar::RI | SweepVar::Eta => {}
    }
    let own_fixed = matches!(base.scheme, InScheme::Fixed { .. });
    let mut solved = None;
    cfg.scheme = if fixed {
        if spec.var == SweepVar::RI && spec.scheme == Some(SchemeSelector::Fixed) {
            InScheme::Fixed { r_c: value }
        } else if spec.var != SweepVar::RI && own_fixed && spec.scheme != Some(SchemeSelector::BothMatched) {
            base.scheme
        } else {
            let mu = if spec.var == SweepVar::RI { value } else { base_mu(base)? };
            let r_c = match_fixed_range(mu, cfg.lambda_bs, cfg.xi)?;
            solved = Some(r_c);
            InScheme::Fixed { r_c }
        }
    } else {
        let mu = if spec.var == SweepVar::RI { value } else { base_mu(base)? };
        InScheme::Flexible { mu }
    };
    Ok((cfg, db_to_linear(tau_db), solved))
}

fn sweep_schemes(spec: &SweepSpec, base: &NetworkConfig) -> Vec<bool> {
    match spec.scheme {
        Some(SchemeSelector::Fixed) => vec![true],
        Some(SchemeSelector::Flexible) => vec![false],
        Some(SchemeSelector::BothMatched) => vec![true, false],
        None => vec![matches!(base.scheme, InScheme::Fixed { .. })],
    }
}

/// Matched `R_c`, optimizer point and output cells of one sweep row.
type RowCells = (Option<f64>, Option<(f64, usize, f64)>, Vec<f64>);

fn sweep_row(spec: &SweepSpec, doc: &ConfigDocument, fixed: bool, value: f64) -> SweepRow {
    let scheme = if fixed { "fixed" } else { "flexible" };
    let mut row = SweepRow { scheme, value, r_c: None, optimum: None, cells: Err(String::new()) };
    let attempt = || -> Result<RowCells> {
        let (cfg, tau, solved) = sweep_point(spec, &doc.network, fixed, value)?;
        if spec.var != SweepVar::Eta {
            return Ok((solved, None, sweep_outputs(spec, tau, &cfg)?));
        }
        if !(0.0..=1.0).contains(&value) {
            return Err(invalid("eta", format!("must lie in [0, 1], got {value}")));
        }
        let section = OptimizeSection {
            objective: Objective::Weighted { eta: value, x0: spec.x0 },
            ..doc.optimize.clone().unwrap_or_default()
        };
        let problem = section.problem(&cfg, Some(spec.tau_db))?;
        let res = coordinate_descent(&problem, &cfg, Execution::Sequential)?;
        let best = res.point.apply(&cfg);
        let r_c = if fixed { Some(res.point.r_i) } else { None };
        Ok((r_c, Some((res.point.r_i, res.point.l, res.point.xi)), sweep_outputs(spec, tau, &best)?))
    };
    match attempt() {
        Ok((r_c, optimum, cells)) => {
            row.r_c = r_c;
            row.optimum = optimum;
            row.cells = Ok(cells);
        }
        Err(e) => row.cells = Err(format!("{e:#}")),
    }
    row
}

/// CSV text, one row per grid point and scheme in grid order.
pub fn cmd_sweep(doc: &ConfigDocument, spec: &SweepSpec) -> Result<String> {
    doc.network.validate()?;
    let schemes = sweep_schemes(spec, &doc.network);
    let jobs: Vec<(f64, bool)> = spec.grid.iter().flat_map(|&v| schemes.iter().map(move |&f| (v, f))).collect();
    let rows = map_indexed(Execution::Parallel, jobs.len(), |k| sweep_row(spec, doc, jobs[k].1, jobs[k].0));
    let width: usize = spec.outputs.iter().map(|o| output_width(*o)).sum();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(spec.header())?;
    for (k, row) in rows.iter().enumerate() {
        let mut rec = vec![(k / schemes.len()).to_string(), row.scheme.to_string(), sig9(row.value)];
        if spec.scheme == Some(SchemeSelector::BothMatched) {
            rec.push(row.r_c.map(sig9).unwrap_or_default());
        }
        if spec.var == SweepVar::Eta {
            match row.optimum {
                Some((r, l, xi)) => rec.extend([sig9(r), l.to_string(), sig9(xi)]),
                None => rec.extend([String::new(), String::new(), String::new()]),
            }
        }
        match &row.cells {
            Ok(cells) => {
                rec.extend(cells.iter().map(|&c| sig9(c)));
                rec.push(String::new());
            }
            Err(msg) => {
                rec.extend(std::iter::repeat_n(String::new(), width));
                rec.push(msg.clone());
            }
        }
        w.write_record(&rec)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

/// CSV of CSTP samples and the JSON summary that goes beside it.
pub fn cmd_simulate(doc: &ConfigDocument, a: &SimulateArgs) -> Result<(String, Value)> {
    check_x0(a.x0)?;
    let cfg = &doc.network;
    cfg.validate()?;
    let mut section = doc.montecarlo.clone().unwrap_or_default();
    if let Some(s) = a.seed {
        section.seed = s;
    }
    if let Some(n) = a.topologies {
        section.n_topologies = n;
    }
    if let Some(n) = a.fading {
        section.n_fading = n;
    }
    let mc = section.resolve(cfg)?;
    let tau = db_to_linear(a.tau_db);
    let report = run_campaign_multi(cfg, &mc, &[tau], Execution::Parallel)?;
    let set = &report.sets[0];
    let mut buf = Vec::new();
    set.write_csv(&mut buf, sig9)?;
    let csv = String::from_utf8(buf)?;

    let emp = empirical_summaries(&set.samples, &[a.x0])?;
    let emp_meta = emp.ccdf[0].1;
    let stats = InLoadStats::new(cfg)?;
    let stp = stp_file(tau, cfg)?;
    let ms = MomentSummary::compute(tau, cfg)?;
    let meta = beta_meta(&ms, a.x0)?;
    let (sup_gap, sup_at) = ccdf_sup_gap(&set.samples, &interior_grid(100), |x| beta_meta(&ms, x))?;
    let rate = report.resample_rate();
    let warning = if rate > RESAMPLE_WARN_RATE {
        Value::String(format!("resample rate {} exceeds {}", sig9(rate), sig9(RESAMPLE_WARN_RATE)))
    } else {
        Value::Null
    };
    let summary = json!({
        "config": serde_json::to_value(cfg)?,
        "config_hash": cfg.hash(),
        "seed": mc.seed,
        "n_topologies": mc.n_topologies,
        "n_fading": mc.n_fading,
        "region_radius": num(mc.region_radius),
        "guard_radius": num(mc.guard_radius),
        "tau_db": num(a.tau_db),
        "x0": num(a.x0),
        "resamples": report.resamples,
        "resample_rate": num(rate),
        "warning": warning,
        "empirical": {
            "stp": num(emp.stp),
            "ci95": num(emp.ci95),
            "variance": num(emp.variance),
            "meta_x0": num(emp_meta),
            "theta_bar": num(report.interior_load_mean),
            "serving_theta_pmf": nums(&report.serving_theta_pmf()),
        },
        "analytic": {
            "stp": num(stp),
            "m1": num(ms.m1),
            "variance": num(ms.variance()),
            "meta_x0": num(meta),
            "theta_bar": num(stats.theta_bar),
            "theta_i_pmf": nums(&stats.theta_i_pmf),
        },
        "gaps": {
            "stp": num((emp.stp - stp).abs()),
            "m1": num((ms.m1 - emp.stp).abs()),
            "variance": num((emp.variance - ms.variance()).abs()),
            "meta_x0": num((emp_meta - meta).abs()),
            "meta_sup": num(sup_gap),
            "meta_sup_at": num(sup_at),
        },
    });
    Ok((csv, summary))
}

fn result_json(res: &OptimizationResult, tau_db: f64, objective: &Objective, cfg: &NetworkConfig) -> Result<Value> {
    let trajectory: Vec<Value> = res
        .trajectory
        .iter()
        .map(|s| {
            json!({
                "round": s.round,
                "coordinate": serde_json::to_value(s.coordinate).expect("enum serializes"),
                "r_i": num(s.point.r_i),
                "l": s.point.l,
                "xi": num(s.point.xi),
                "value": num(s.value),
            })
        })
        .collect();
    Ok(json!({
        "config_hash": cfg.hash(),
        "scheme": scheme_json(cfg),
        "objective": serde_json::to_value(objective)?,
        "tau_db": num(tau_db),
        "r_i_star": num(res.point.r_i),
        "l_star": res.point.l,
        "xi_star": num(res.point.xi),
        "objective_value": num(res.objective_value),
        "rounds": res.rounds,
        "converged": res.converged,
        "budget_exhausted": res.budget_exhausted,
        "capped": res.capped,
        "trajectory": trajectory,
    }))
}

/// Optimization result and its JSON rendering.
pub fn cmd_optimize(doc: &ConfigDocument, a: &OptimizeArgs) -> Result<(OptimizationResult, Value)> {
    let cfg = &doc.network;
    cfg.validate()?;
    let mut section = doc.optimize.clone().unwrap_or_default();
    let x0_of = |o: &Objective| match *o {
        Objective::Meta { x0 } | Objective::Weighted { x0, .. } => x0,
        _ => 0.9,
    };
    let eta_of = |o: &Objective| match *o {
        Objective::Weighted { eta, .. } => eta,
        _ => 0.5,
    };
    let x0 = a.x0.unwrap_or_else(|| x0_of(&section.objective));
    let eta = a.eta.unwrap_or_else(|| eta_of(&section.objective));
    let kind = a.objective.unwrap_or(match section.objective {
        Objective::Stp => ObjectiveKind::Stp,
        Objective::InverseVariance => ObjectiveKind::InverseVariance,
        Objective::Meta { .. } => ObjectiveKind::Meta,
        Objective::Weighted { .. } => ObjectiveKind::Weighted,
    });
    section.objective = match kind {
        ObjectiveKind::Stp => Objective::Stp,
        ObjectiveKind::InverseVariance => Objective::InverseVariance,
        ObjectiveKind::Meta => Objective::Meta { x0 },
        ObjectiveKind::Weighted => Objective::Weighted { eta, x0 },
    };
    let tau_db = a.tau_db.or(section.tau_db).unwrap_or(0.0);
    let problem = section.problem(cfg, Some(tau_db))?;
    let res = coordinate_descent(&problem, cfg, Execution::Parallel)?;
    let json = result_json(&res, tau_db, &problem.objective, cfg)?;
    Ok((res, json))
}

/// `R_c` for a flexible ratio, or `μ` for a fixed range, under `cfg`'s
/// densities and `ξ`.
pub fn cmd_match_range(cfg: &NetworkConfig, mu: Option<f64>, r_c: Option<f64>) -> Result<f64> {
    cfg.validate()?;
    match (mu, r_c) {
        (Some(mu), None) => Ok(match_fixed_range(mu, cfg.lambda_bs, cfg.xi)?),
        (None, Some(r)) => Ok(match_flexible_ratio(r, cfg.lambda_bs, cfg.xi)?),
        _ => bail!(Error::InvalidParameter { name: "mu", reason: "give exactly one of --mu and --r-c".into() }),
    }
}
