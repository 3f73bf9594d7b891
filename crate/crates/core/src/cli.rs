//! Command-line front end: config ingestion, subcommand dispatch and output
//! artifacts.
//!
//! Every CSV starts with a `# config_hash=<sha256>` line. Each run also writes
//! `manifest.json` with the config echo, version, seed, wall time and the
//! outcome of every embedded assertion.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::checkpoint::Checkpoint;
use crate::config::{parse_config, RunConfig};
use crate::diagnostics::{self, AprioriReport};
use crate::ensemble::{random_scalar, random_vector, EnsembleSpec, MeanConstraint};
use crate::error::{Error, Result};
use crate::filter::{check_filter_identities, symbol_sweep, DeconvChainReport, DeconvSpec, FilterSpec};
use crate::grid::Grid;
use crate::ineq::{self, Lemma, RatioReport};
use crate::ops;
use crate::solver::{dependence_experiment, Solver};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_ASSERTION: i32 = 2;
pub const EXIT_ABORT: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "vadm", version, about = "Deconvolution LES solver and verification bench")]
pub struct Cli {
    /// Configuration file (TOML); defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "vadm-out")]
    pub output: PathBuf,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Suppresses progress output.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Integrate the model and write the energy time series and checkpoints.
    Simulate,
    /// Sweep the filter and deconvolution symbols and check the operator identities.
    VerifyOperators,
    /// Run the functional-inequality ratio benches.
    VerifyInequalities,
    /// Perturbation growth against the Gronwall envelope.
    Dependence,
    /// Vertical energy spectrum of a checkpoint.
    Spectrum {
        #[arg(long)]
        checkpoint: PathBuf,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::VerifyOperators => "verify-operators",
            Command::VerifyInequalities => "verify-inequalities",
            Command::Dependence => "dependence",
            Command::Spectrum { .. } => "spectrum",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Default, Serialize)]
struct Outcome {
    assertions: Vec<Assertion>,
    outputs: Vec<String>,
    abort: Option<String>,
    warnings: Vec<String>,
    summary: serde_json::Map<String, serde_json::Value>,
}

impl Outcome {
    fn check(&mut self, name: &str, passed: bool, detail: String) {
        self.assertions.push(Assertion {
            name: name.to_string(),
            passed,
            detail,
        });
    }

    fn failures(&self) -> Vec<&Assertion> {
        self.assertions.iter().filter(|a| !a.passed).collect()
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    subcommand: &'a str,
    version: &'a str,
    config_hash: String,
    seed: u64,
    wall_time_seconds: f64,
    status: &'a str,
    exit_code: i32,
    config: &'a RunConfig,
    assertions: &'a [Assertion],
    failures: Vec<&'a Assertion>,
    abort: &'a Option<String>,
    warnings: &'a [String],
    outputs: &'a [String],
    summary: &'a serde_json::Map<String, serde_json::Value>,
}

struct Ctx<'a> {
    dir: &'a Path,
    hash: String,
    quiet: bool,
}

impl Ctx<'_> {
    fn say(&self, msg: &str) {
        if !self.quiet {
            eprintln!("{msg}");
        }
    }

    fn write_csv(&self, out: &mut Outcome, name: &str, header: &str, rows: impl IntoIterator<Item = String>) -> Result<()> {
        let mut text = format!("# config_hash={}\n{header}\n", self.hash);
        for r in rows {
            text.push_str(&r);
            text.push('\n');
        }
        fs::write(self.dir.join(name), text)?;
        out.outputs.push(name.to_string());
        Ok(())
    }
}

/// Parses the arguments and runs; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                EXIT_VALIDATION
            } else {
                EXIT_OK
            }
        }
    }
}

pub fn load_config(path: Option<&Path>, seed: Option<u64>) -> std::result::Result<RunConfig, Vec<String>> {
    let text = match path {
        Some(p) => fs::read_to_string(p).map_err(|e| vec![format!("cannot read {}: {e}", p.display())])?,
        None => String::new(),
    };
    let cfg = parse_config(&text)?;
    Ok(match seed {
        Some(s) => cfg.with_seed(s),
        None => cfg,
    })
}

pub fn run(cli: &Cli) -> i32 {
    let cfg = match load_config(cli.config.as_deref(), cli.seed) {
        Ok(c) => c,
        Err(errors) => {
            for e in &errors {
                eprintln!("config error: {e}");
            }
            return EXIT_VALIDATION;
        }
    };
    if let Err(e) = fs::create_dir_all(&cli.output) {
        eprintln!("cannot create {}: {e}", cli.output.display());
        return EXIT_VALIDATION;
    }
    let ctx = Ctx {
        dir: &cli.output,
        hash: cfg.hash_hex(),
        quiet: cli.quiet,
    };
    let started = Instant::now();
    let mut out = Outcome::default();
    let result = match &cli.command {
        Command::Simulate => simulate(&ctx, &cfg, &mut out),
        Command::VerifyOperators => verify_operators(&ctx, &cfg, &mut out),
        Command::VerifyInequalities => verify_inequalities(&ctx, &cfg, &mut out),
        Command::Dependence => dependence(&ctx, &cfg, &mut out),
        Command::Spectrum { checkpoint } => spectrum(&ctx, checkpoint, &mut out),
    };
    let (status, code) = match &result {
        Err(e) if e.is_runtime_abort() => {
            out.abort = Some(e.to_string());
            ("aborted", EXIT_ABORT)
        }
        Err(e) => {
            eprintln!("error: {e}");
            out.abort = Some(e.to_string());
            ("invalid", EXIT_VALIDATION)
        }
        Ok(()) if out.abort.is_some() => ("aborted", EXIT_ABORT),
        Ok(()) if !out.failures().is_empty() => ("assertion_failed", EXIT_ASSERTION),
        Ok(()) => ("ok", EXIT_OK),
    };
    for w in &out.warnings {
        ctx.say(&format!("warning: {w}"));
    }
    for a in &out.assertions {
        ctx.say(&format!("[{}] {}: {}", if a.passed { "pass" } else { "FAIL" }, a.name, a.detail));
    }
    if let Some(a) = &out.abort {
        eprintln!("aborted: {a}");
    }
    let manifest = Manifest {
        subcommand: cli.command.name(),
        version: env!("CARGO_PKG_VERSION"),
        config_hash: ctx.hash.clone(),
        seed: cfg.seed,
        wall_time_seconds: started.elapsed().as_secs_f64(),
        status,
        exit_code: code,
        config: &cfg,
        assertions: &out.assertions,
        failures: out.failures(),
        abort: &out.abort,
        warnings: &out.warnings,
        outputs: &out.outputs,
        summary: &out.summary,
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    if let Err(e) = fs::write(cli.output.join("manifest.json"), json) {
        eprintln!("cannot write manifest: {e}");
        return EXIT_VALIDATION.max(code);
    }
    code
}

fn e17(x: f64) -> String {
    format!("{x:.17e}")
}

fn simulate(ctx: &Ctx, cfg: &RunConfig, out: &mut Outcome) -> Result<()> {
    let solver = Solver::new(cfg.solver.clone())?;
    out.warnings.extend(cfg.solver.warnings());
    let hash = cfg.hash();
    let every = cfg.checkpoint_every;
    let mut max_defect = 0.0_f64;
    let mut ckpt_error = None;
    let (records, last, abort) = solver.integrate(solver.initial_state(), |s, _| {
        max_defect = max_defect.max(s.w.divergence_defect());
        if every > 0 && s.step > 0 && s.step % every == 0 {
            let name = format!("checkpoint_{:08}.bin", s.step);
            if let Err(e) = Checkpoint::from_state(s, hash).save(ctx.dir.join(&name)) {
                ckpt_error = Some(e);
            }
        }
    })?;
    if let Some(e) = ckpt_error {
        return Err(e);
    }
    let mut rows = Vec::new();
    for r in &records {
        rows.push(diagnostics::csv_row(r));
    }
    ctx.write_csv(out, "energy.csv", diagnostics::CSV_HEADER, rows)?;
    Checkpoint::from_state(&last, hash).save(ctx.dir.join("checkpoint_final.bin"))?;
    out.outputs.push("checkpoint_final.bin".into());
    if every > 0 {
        out.outputs.push(format!("checkpoint_<step>.bin every {every} steps"));
    }
    if let Some(e) = abort {
        out.abort = Some(e.to_string());
    }

    out.check(
        "divergence_free",
        max_defect <= 1e-12,
        format!("max per-mode divergence defect {max_defect:e}"),
    );
    let chain = records.iter().filter(|r| !r.chain_holds(1e-10)).count();
    out.check("energy_floor", chain == 0, format!("{chain} records below the filtered-norm floor"));
    if matches!(cfg.solver.forcing, crate::solver::ForcingDescriptor::None) {
        let dt = cfg.solver.dt * cfg.solver.output_every as f64;
        let e0 = records.first().map_or(0.0, |r| r.model_energy);
        let tol = 10.0 * dt * dt * e0;
        let rises = records.windows(2).filter(|w| w[1].model_energy > w[0].model_energy + tol).count();
        out.check("energy_nonincreasing", rises == 0, format!("{rises} increases beyond 10 dt^2 E0"));
    }
    let max_res = records.iter().skip(1).map(|r| r.budget_residual).fold(0.0, f64::max);
    out.check("budget_residual_finite", max_res.is_finite(), format!("max budget residual {max_res:e}"));
    let f_norm_sq = ops::vector_norm(solver.forcing()).powi(2);
    let v0_sq = ops::vector_norm(&solver.initial().v0).powi(2);
    let ap = AprioriReport::new(&records, v0_sq, f_norm_sq, cfg.solver.nu, cfg.solver.order);
    out.summary.insert("apriori".into(), serde_json::to_value(&ap).expect("serializes"));
    out.summary.insert(
        "regularity".into(),
        serde_json::to_value(diagnostics::regularity_from_records(&records)).expect("serializes"),
    );
    ctx.say(&format!(
        "a priori: sup lhs {:.6e}, ||v0||^2 {:.6e}, measured constant {:.6e}",
        ap.sup_lhs(),
        v0_sq,
        ap.measured_constant
    ));
    ctx.say(&format!(
        "simulated {} steps to t = {:.6}; {} records",
        last.step,
        last.t,
        records.len()
    ));
    Ok(())
}

fn verify_operators(ctx: &Ctx, cfg: &RunConfig, out: &mut Outcome) -> Result<()> {
    let o = &cfg.operators;
    let rows = symbol_sweep(&o.alphas, &o.thetas, &o.orders, o.k3_max)?;
    let violations = rows.iter().filter(|r| !r.bounds_hold(1e-12)).count();
    let deviation = rows.iter().map(|r| r.relative_deviation()).fold(0.0, f64::max);
    ctx.write_csv(
        out,
        "symbols.csv",
        "alpha,theta,order,k3,A_symbol,D_symbol,bound_margin",
        rows.iter().map(|r| {
            format!(
                "{},{},{},{},{},{},{}",
                r.alpha,
                r.theta,
                r.order,
                r.k3,
                e17(r.a_symbol),
                e17(r.d_symbol),
                e17(r.bound_margin)
            )
        }),
    )?;
    out.check("symbol_bounds", violations == 0, format!("{violations} of {} rows violate 1 <= D <= N+1, D <= A", rows.len()));
    out.check(
        "closed_form_vs_iterative",
        deviation <= 1e-12,
        format!("max relative deviation {deviation:e}"),
    );

    let grid = Grid::cubic(o.n)?;
    let ens = EnsembleSpec::new(o.fields, o.band, cfg.seed);
    let mut id_rows = Vec::new();
    let (mut worst_id, mut chain_bad) = (0.0_f64, 0usize);
    for i in 0..o.fields {
        let w = random_vector(grid, &ens, 2 * i, true, MeanConstraint::None)?;
        let f = random_scalar(grid, &ens, 2 * i + 1, MeanConstraint::None)?;
        for &alpha in &o.alphas {
            for &theta in &o.thetas {
                let filter = FilterSpec::new(alpha, theta)?;
                let id = check_filter_identities(&filter, &f, &w)?;
                worst_id = worst_id.max(id.max_residual());
                let mut chain = 0;
                for &order in &o.orders {
                    chain += DeconvChainReport::measure(&DeconvSpec::new(filter, order), &w).violations(1e-10).len();
                }
                chain_bad += chain;
                id_rows.push(format!("{i},{alpha},{theta},{},{chain}", e17(id.max_residual())));
            }
        }
    }
    ctx.write_csv(out, "identities.csv", "sample,alpha,theta,max_identity_residual,chain_violations", id_rows)?;
    out.check("filter_identities", worst_id <= 1e-10, format!("max relative residual {worst_id:e}"));
    out.check("deconvolution_chain", chain_bad == 0, format!("{chain_bad} chain violations"));
    Ok(())
}

fn ratio_row(r: &RatioReport, drift: Option<f64>, extra: &str) -> String {
    format!(
        "{},{},{}x{}x{},{},{},{},{},{},{},{}",
        r.lemma.name(),
        r.s.map_or(String::new(), |s| s.to_string()),
        r.resolution[0],
        r.resolution[1],
        r.resolution[2],
        r.count,
        e17(r.max_ratio),
        e17(r.mean_ratio),
        r.worst_case.seed,
        r.worst_case.index,
        drift.map_or(String::new(), e17),
        extra
    )
}

fn verify_inequalities(ctx: &Ctx, cfg: &RunConfig, out: &mut Outcome) -> Result<()> {
    let q = &cfg.inequalities;
    let spec3 = EnsembleSpec::new(q.count, q.band, cfg.seed).with_decay(q.amplitude_decay);
    let spec1 = EnsembleSpec::new(q.count, q.band1d, cfg.seed).with_decay(q.amplitude_decay);
    let grid = Grid::cubic(q.n)?;
    let mut rows = Vec::new();
    let mut record = |out: &mut Outcome, coarse: &RatioReport, fine: Option<&RatioReport>, extra: String| {
        let drift = fine.map(|f| f.drift(coarse));
        let label = match coarse.s {
            Some(s) => format!("{}(s={s})", coarse.lemma.name()),
            None => coarse.lemma.name().to_string(),
        };
        out.check(
            &format!("{label} finite"),
            coarse.is_finite() && fine.map_or(true, RatioReport::is_finite),
            format!("max ratio {:.6e}", coarse.max_ratio),
        );
        if let Some(d) = drift {
            out.check(&format!("{label} drift"), d < q.max_drift, format!("resolution-doubling drift {d:.3e}"));
        }
        rows.push(ratio_row(coarse, None, &extra));
        if let Some(f) = fine {
            rows.push(ratio_row(f, drift, &extra));
        }
    };
    for &s in &q.exponents {
        ctx.say(&format!("agmon s = {s}"));
        let a = ineq::agmon_sweep(q.n1d, &spec1, s)?;
        let b = if q.refine { Some(ineq::agmon_sweep(2 * q.n1d, &spec1, s)?) } else { None };
        let bad = a.bound_violations + b.as_ref().map_or(0, |b| b.bound_violations);
        let label = format!("agmon(s={s}) split bound");
        out.check(&label, bad == 0, format!("{bad} samples above the split bound; max utilization {:.4}", a.max_bound_utilization));
        record(out, &a.report, b.as_ref().map(|b| &b.report), a.max_bound_utilization.to_string());
    }
    for lemma in [Lemma::Ladyzhenskaya, Lemma::VerticalEmbedding, Lemma::TrilinearI, Lemma::TrilinearII] {
        let exps: Vec<f64> = if lemma.uses_exponent() { q.exponents.clone() } else { vec![1.0] };
        for s in exps {
            ctx.say(&format!("{} s = {s}", lemma.name()));
            let a = ineq::ratio_sweep(grid, &spec3, lemma, s)?;
            let b = if q.refine { Some(ineq::ratio_sweep(grid.refined(2), &spec3, lemma, s)?) } else { None };
            record(out, &a, b.as_ref(), String::new());
        }
    }
    ctx.write_csv(
        out,
        "inequalities.csv",
        "lemma,s,resolution,count,max_ratio,mean_ratio,worst_seed,worst_index,drift,bound_utilization",
        rows,
    )?;
    Ok(())
}

fn dependence(ctx: &Ctx, cfg: &RunConfig, out: &mut Outcome) -> Result<()> {
    let Some(block) = &cfg.dependence else {
        return Err(Error::InvalidParameter("the dependence subcommand needs a [dependence] section".into()));
    };
    let r = dependence_experiment(&cfg.solver, block.epsilon, cfg.perturbation_seed())?;
    let rows = (0..r.times.len()).map(|i| {
        format!(
            "{},{},{},{},{}",
            e17(r.times[i]),
            e17(r.delta_norms[i]),
            e17(r.integrand[i]),
            e17(r.integral[i]),
            e17(r.envelope[i])
        )
    });
    ctx.write_csv(out, "dependence.csv", "t,delta_norm,gronwall_integrand,integrand_integral,envelope", rows)?;
    out.check(
        "gronwall_constant_finite",
        r.fitted_constant.is_finite(),
        format!("fitted C = {:.6e}, pathwise C = {:.6e}", r.fitted_constant, r.pathwise_constant),
    );
    out.check("envelope", r.envelope_holds(), "||dw(t)|| under the fitted envelope".into());
    out.abort = r.abort;
    Ok(())
}

fn spectrum(ctx: &Ctx, path: &Path, out: &mut Outcome) -> Result<()> {
    let c = Checkpoint::load(path)?;
    let hex: String = c.config_hash.iter().map(|b| format!("{b:02x}")).collect();
    let spec = diagnostics::vertical_spectrum(&c.w);
    let total: f64 = spec.iter().map(|s| s.1).sum();
    let norm = ops::vector_norm(&c.w).powi(2);
    let ck = Ctx {
        dir: ctx.dir,
        hash: hex,
        quiet: ctx.quiet,
    };
    ck.write_csv(out, "spectrum.csv", "k3,energy", spec.iter().map(|(k, e)| format!("{k},{}", e17(*e))))?;
    let rel = if norm == 0.0 { total.abs() } else { (total - norm).abs() / norm };
    out.check("spectrum_sums_to_energy", rel <= 1e-12, format!("relative defect {rel:e} at t = {}", c.t));
    Ok(())
}
