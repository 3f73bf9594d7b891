//! Pseudo-spectral time integration of the deconvolution model on the
//! periodic box.
//!
//! `dw/dt = -P bar(div(Dw (x) Dw)) + nu lap w + P bar f` is advanced with an
//! integrating factor for the viscous term and Heun's method for the rest.
//! The pressure never appears: the Leray projection `P` absorbs it.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{self, EnergyRecord};
use crate::ensemble::{random_vector, EnsembleSpec, MeanConstraint};
use crate::error::{Error, Result};
use crate::field::{SpectralField, VectorField};
use crate::filter::{DeconvSpec, FilterSpec};
use crate::grid::Grid;
use crate::ops;

pub const DEFAULT_CFL_LIMIT: f64 = 0.5;

/// Raw velocity before the initial filtering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum InitDescriptor {
    Zero,
    /// `(sin x cos y cos z, -cos x sin y cos z, 0)`
    TaylorGreen,
    /// Divergence-free band-limited field, rescaled so that the filtered
    /// field has `1/2 ||w0||^2 = energy`.
    Random { seed: u64, band: i64, energy: f64 },
    /// `amplitude * d * cos(k.x)` with `d` a unit vector orthogonal to `k`.
    SingleMode { k: [i64; 3], amplitude: f64 },
}

/// Steady body force, Leray-projected before use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ForcingDescriptor {
    None,
    /// Divergence-free band-limited field with `||f|| = amplitude`.
    Band { seed: u64, band: i64, amplitude: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverConfig {
    pub grid: Grid,
    pub nu: f64,
    pub filter: FilterSpec,
    pub order: u32,
    pub dt: f64,
    pub t_end: f64,
    pub init: InitDescriptor,
    pub forcing: ForcingDescriptor,
    pub output_every: u64,
    pub cfl_limit: f64,
}

impl SolverConfig {
    /// Taylor-Green baseline on `n^3`: nu = 0.1, alpha = 0.5, theta = 1, N = 1, dt = 0.01.
    pub fn taylor_green(n: usize) -> Result<Self> {
        Ok(Self {
            grid: Grid::cubic(n)?,
            nu: 0.1,
            filter: FilterSpec::new(0.5, 1.0)?,
            order: 1,
            dt: 0.01,
            t_end: 1.0,
            init: InitDescriptor::TaylorGreen,
            forcing: ForcingDescriptor::None,
            output_every: 1,
            cfl_limit: DEFAULT_CFL_LIMIT,
        })
    }

    pub fn deconv(&self) -> DeconvSpec {
        DeconvSpec::new(self.filter, self.order)
    }

    /// Number of steps to reach `t_end`.
    pub fn steps(&self) -> u64 {
        (self.t_end / self.dt).round().max(1.0) as u64
    }

    /// Every violated precondition.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            out.push(format!("viscosity must be positive, got {}", self.nu));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            out.push(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_end >= self.dt) {
            out.push(format!("t_end must be >= dt, got t_end = {} and dt = {}", self.t_end, self.dt));
        }
        if self.output_every < 1 {
            out.push("output_every must be >= 1".into());
        }
        if !(self.cfl_limit > 0.0 && self.cfl_limit.is_finite()) {
            out.push(format!("cfl limit must be positive, got {}", self.cfl_limit));
        }
        let limit = dealias_band(&self.grid);
        match self.init {
            InitDescriptor::Random { band, energy, .. } => {
                if band < 1 || band > limit {
                    out.push(format!(
                        "initial band {band} must lie in [1, {limit}] (dealiased modes below Nyquist on {})",
                        self.grid
                    ));
                }
                if !(energy >= 0.0 && energy.is_finite()) {
                    out.push(format!("initial energy must be >= 0, got {energy}"));
                }
            }
            InitDescriptor::SingleMode { k, amplitude } => {
                if k == [0, 0, 0] {
                    out.push("single mode needs a nonzero wavevector".into());
                }
                if k.iter().any(|m| m.abs() > limit) {
                    out.push(format!("single mode {k:?} lies beyond the dealiased band {limit}"));
                }
                if !amplitude.is_finite() {
                    out.push("single mode amplitude must be finite".into());
                }
            }
            _ => {}
        }
        if let ForcingDescriptor::Band { band, amplitude, .. } = self.forcing {
            if band < 1 || band > limit {
                out.push(format!("forcing band {band} must lie in [1, {limit}]"));
            }
            if !(amplitude >= 0.0 && amplitude.is_finite()) {
                out.push(format!("forcing amplitude must be >= 0, got {amplitude}"));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.problems();
        if p.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(p.join("; ")))
        }
    }

    /// Non-fatal remarks about the configuration.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.filter.theta() <= 0.5 {
            out.push(format!(
                "theta = {} <= 1/2: uniqueness of the continuous model is not guaranteed",
                self.filter.theta()
            ));
        }
        out
    }
}

fn dealias_band(grid: &Grid) -> i64 {
    (0..3).map(|a| grid.dealias_limit(a)).min().expect("three axes")
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub t: f64,
    pub step: u64,
    pub w: VectorField,
}

/// `v0` and the filtered initial datum `w0 = bar(v0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    pub v0: VectorField,
    pub w0: VectorField,
}

fn unit_orthogonal(k: [i64; 3]) -> [f64; 3] {
    let kf = k.map(|x| x as f64);
    // cross k with the axis along which k is smallest
    let axis = (0..3)
        .min_by(|&a, &b| kf[a].abs().partial_cmp(&kf[b].abs()).expect("finite"))
        .expect("three axes");
    let mut e = [0.0; 3];
    e[axis] = 1.0;
    let d = [
        kf[1] * e[2] - kf[2] * e[1],
        kf[2] * e[0] - kf[0] * e[2],
        kf[0] * e[1] - kf[1] * e[0],
    ];
    let n = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    d.map(|x| x / n)
}

pub fn initial_data(descriptor: &InitDescriptor, grid: Grid, filter: &FilterSpec) -> Result<InitialData> {
    let v0 = match *descriptor {
        InitDescriptor::Zero => VectorField::zeros(grid),
        InitDescriptor::TaylorGreen => ops::leray_project(&VectorField::from_fn(grid, |x, y, z| {
            [x.sin() * y.cos() * z.cos(), -x.cos() * y.sin() * z.cos(), 0.0]
        })),
        InitDescriptor::Random { seed, band, energy } => {
            if band > dealias_band(&grid) {
                return Err(Error::InvalidParameter(format!(
                    "initial band {band} beyond the dealiased band {} of {grid}",
                    dealias_band(&grid)
                )));
            }
            let raw = random_vector(grid, &EnsembleSpec::new(1, band, seed), 0, true, MeanConstraint::None)?;
            let norm = ops::vector_norm(&filter.bar(&raw));
            if norm == 0.0 {
                return Err(Error::Degenerate("random initial field vanished".into()));
            }
            raw.scaled((2.0 * energy).sqrt() / norm)
        }
        InitDescriptor::SingleMode { k, amplitude } => {
            if k == [0, 0, 0] || k.iter().any(|m| m.abs() > dealias_band(&grid)) {
                return Err(Error::InvalidParameter(format!("single mode {k:?} not in the dealiased band")));
            }
            let d = unit_orthogonal(k);
            let c = |j: usize| -> Result<SpectralField> {
                let mut f = SpectralField::zeros(grid);
                f.add_mode_pair(k, Complex64::new(0.5 * amplitude * d[j], 0.0))?;
                Ok(f)
            };
            ops::leray_project(&VectorField::new(c(0)?, c(1)?, c(2)?)?)
        }
    };
    let w0 = ops::leray_project(&filter.bar(&v0));
    Ok(InitialData { v0, w0 })
}

/// The filtered initial datum `bar(v0)`.
pub fn init_field(descriptor: &InitDescriptor, grid: Grid, filter: &FilterSpec) -> Result<VectorField> {
    Ok(initial_data(descriptor, grid, filter)?.w0)
}

/// The projected (unfiltered) forcing `f`.
pub fn forcing_field(descriptor: &ForcingDescriptor, grid: Grid) -> Result<VectorField> {
    match *descriptor {
        ForcingDescriptor::None => Ok(VectorField::zeros(grid)),
        ForcingDescriptor::Band { seed, band, amplitude } => {
            let raw = random_vector(grid, &EnsembleSpec::new(1, band, seed), 0, true, MeanConstraint::None)?;
            let f = ops::dealias_vector(&ops::leray_project(&raw));
            let norm = ops::vector_norm(&f);
            if norm == 0.0 {
                return Err(Error::Degenerate("forcing field vanished".into()));
            }
            Ok(f.scaled(amplitude / norm))
        }
    }
}

/// `P bar(div(Dw (x) Dw))`, with `Dw` dealiased before the product.
pub fn nonlinear_term(w: &VectorField, spec: &DeconvSpec) -> VectorField {
    let z = ops::dealias_vector(&spec.deconv(w));
    ops::leray_project(&spec.filter.bar(&ops::tensor_divergence(&z)))
}

/// Same as `nonlinear_term`, also returning `max |Dw|` on the grid.
fn nonlinear_with_speed(w: &VectorField, spec: &DeconvSpec) -> (VectorField, f64) {
    let z = ops::dealias_vector(&spec.deconv(w));
    let phys = z.to_physical();
    let speed = (0..z.grid().len())
        .map(|i| (phys[0][i].powi(2) + phys[1][i].powi(2) + phys[2][i].powi(2)).sqrt())
        .fold(0.0, f64::max);
    let n = ops::tensor_divergence_physical(*z.grid(), &phys);
    (ops::leray_project(&spec.filter.bar(&n)), speed)
}

/// `e^(-nu |k|^2 dt)` for every flat index.
pub fn viscous_decay(grid: &Grid, nu: f64, dt: f64) -> Vec<f64> {
    let probe = SpectralField::zeros(*grid);
    (0..grid.len()).map(|i| (-nu * probe.mode(i).k_squared() * dt).exp()).collect()
}

fn apply_decay(u: &VectorField, decay: &[f64]) -> VectorField {
    u.map_components(|c| c.map_modes(|m, v| v * decay[m.index]))
}

/// One integrating-factor Heun step for `dw/dt = nu lap w + rhs(w)`:
/// `w* = E(w + dt N(w))`, `w1 = E w + dt/2 (E N(w) + N(w*))`, with
/// `E = e^(-nu |k|^2 dt)` tabulated in `decay`.
pub fn heun_if_step(
    w: &VectorField,
    dt: f64,
    decay: &[f64],
    mut rhs: impl FnMut(&VectorField) -> VectorField,
) -> VectorField {
    let n0 = rhs(w);
    let predictor = apply_decay(&w.axpy(dt, &n0), decay);
    let n1 = rhs(&predictor);
    let ew = apply_decay(w, decay);
    let en0 = apply_decay(&n0, decay);
    ew.axpy(0.5 * dt, &en0.axpy(1.0, &n1))
}

/// Precomputed operators for one configuration.
#[derive(Debug, Clone)]
pub struct Solver {
    config: SolverConfig,
    spec: DeconvSpec,
    decay: Vec<f64>,
    forcing: VectorField,
    /// `P bar f`
    filtered_forcing: VectorField,
    initial: InitialData,
    kmax: f64,
}

/// Records and final state of a run; `abort` holds the runtime error that
/// stopped it early, if any.
#[derive(Debug)]
pub struct RunOutput {
    pub records: Vec<EnergyRecord>,
    /// States at every output step, starting with the initial one.
    pub trajectory: Vec<SolverState>,
    pub final_state: SolverState,
    pub abort: Option<Error>,
}

impl Solver {
    pub fn new(config: SolverConfig) -> Result<Self> {
        config.validate()?;
        let spec = config.deconv();
        let initial = initial_data(&config.init, config.grid, &config.filter)?;
        let forcing = forcing_field(&config.forcing, config.grid)?;
        let filtered_forcing = ops::leray_project(&config.filter.bar(&forcing));
        Ok(Self {
            decay: viscous_decay(&config.grid, config.nu, config.dt),
            kmax: config.grid.max_dealiased_wavenumber(),
            config,
            spec,
            forcing,
            filtered_forcing,
            initial,
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn deconv(&self) -> &DeconvSpec {
        &self.spec
    }

    pub fn initial(&self) -> &InitialData {
        &self.initial
    }

    pub fn forcing(&self) -> &VectorField {
        &self.forcing
    }

    pub fn initial_state(&self) -> SolverState {
        self.state_from(self.initial.w0.clone())
    }

    /// A state at `t = 0` with a caller-supplied field (projected and dealiased).
    pub fn state_from(&self, w: VectorField) -> SolverState {
        SolverState {
            t: 0.0,
            step: 0,
            w: ops::dealias_vector(&ops::leray_project(&w)),
        }
    }

    /// `-P bar(div(Dw (x) Dw)) + P bar f`
    pub fn rhs(&self, w: &VectorField) -> VectorField {
        nonlinear_term(w, &self.spec).scaled(-1.0).axpy(1.0, &self.filtered_forcing)
    }

    pub fn record(&self, state: &SolverState) -> Result<EnergyRecord> {
        diagnostics::energy_terms(&state.w, &self.forcing, &self.spec, self.config.nu, state.t, state.step)
    }

    pub fn cfl(&self, speed: f64) -> f64 {
        self.config.dt * speed * self.kmax
    }

    /// Advances one step, aborting on a CFL violation or non-finite values.
    pub fn step(&self, state: &SolverState) -> Result<SolverState> {
        let dt = self.config.dt;
        let mut first = true;
        let mut violation = None;
        let w = heun_if_step(&state.w, dt, &self.decay, |u| {
            let (n, speed) = nonlinear_with_speed(u, &self.spec);
            if first {
                first = false;
                let cfl = self.cfl(speed);
                if !(cfl <= self.config.cfl_limit) {
                    violation = Some(cfl);
                }
            }
            n.scaled(-1.0).axpy(1.0, &self.filtered_forcing)
        });
        if let Some(cfl) = violation {
            return Err(Error::Cfl {
                step: state.step,
                t: state.t,
                cfl,
                limit: self.config.cfl_limit,
            });
        }
        let step = state.step + 1;
        let t = step as f64 * dt;
        if !w.is_finite() {
            return Err(Error::NonFinite { step, t });
        }
        Ok(SolverState {
            t,
            step,
            w: ops::leray_project(&w),
        })
    }

    /// Integrates to `t_end` from `start`, calling `observe` at every output
    /// step (including the first) with the state and its energy record.
    pub fn integrate(
        &self,
        start: SolverState,
        mut observe: impl FnMut(&SolverState, &EnergyRecord),
    ) -> Result<(Vec<EnergyRecord>, SolverState, Option<Error>)> {
        let total = self.config.steps();
        let every = self.config.output_every;
        let mut records = Vec::new();
        let mut state = start;
        let push = |s: &SolverState, records: &mut Vec<EnergyRecord>, observe: &mut dyn FnMut(&SolverState, &EnergyRecord)| -> Result<()> {
            let mut r = self.record(s)?;
            if let Some(p) = records.last() {
                r.budget_residual = diagnostics::budget_residual(p, &r, r.t - p.t)?;
            }
            observe(s, &r);
            records.push(r);
            Ok(())
        };
        push(&state, &mut records, &mut observe)?;
        while state.step < total {
            match self.step(&state) {
                Ok(next) => state = next,
                Err(e) if e.is_runtime_abort() => return Ok((records, state, Some(e))),
                Err(e) => return Err(e),
            }
            if state.step % every == 0 || state.step == total {
                push(&state, &mut records, &mut observe)?;
            }
        }
        Ok((records, state, None))
    }

    /// Full run from the configured initial data, keeping every output state.
    pub fn run(&self) -> Result<RunOutput> {
        let mut trajectory = Vec::new();
        let (records, final_state, abort) = self.integrate(self.initial_state(), |s, _| trajectory.push(s.clone()))?;
        Ok(RunOutput {
            records,
            trajectory,
            final_state,
            abort,
        })
    }
}

pub fn run(config: SolverConfig) -> Result<RunOutput> {
    Solver::new(config)?.run()
}

/// Perturbation growth against the Gronwall envelope.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DependenceReport {
    pub epsilon: f64,
    pub times: Vec<f64>,
    /// `||w2 - w1||` at every output time.
    pub delta_norms: Vec<f64>,
    /// Integrand evaluated on the perturbed trajectory `w2`.
    pub integrand: Vec<f64>,
    /// Cumulative trapezoid integral of `integrand`.
    pub integral: Vec<f64>,
    /// Smallest `C` with `||dw(t)|| <= ||dw(0)|| exp(C integral(t))` at every output time.
    pub fitted_constant: f64,
    /// Smallest `C` bounding the growth rate of `log ||dw||` by `C * integrand`
    /// on every output interval.
    pub pathwise_constant: f64,
    pub envelope: Vec<f64>,
    pub abort: Option<String>,
}

impl DependenceReport {
    pub fn envelope_holds(&self) -> bool {
        self.delta_norms
            .iter()
            .zip(&self.envelope)
            .all(|(d, e)| *d <= e * (1.0 + 1e-12) + f64::MIN_POSITIVE)
    }
}

/// Unit-norm divergence-free perturbation shared by every dependence run.
pub fn dependence_perturbation(grid: Grid, seed: u64) -> Result<VectorField> {
    let band = dealias_band(&grid).min(4);
    let p = random_vector(grid, &EnsembleSpec::new(1, band, seed), 0, true, MeanConstraint::None)?;
    Ok(p.scaled(1.0 / ops::vector_norm(&p)))
}

/// Runs the base flow `w1` and `w2 = w1 + epsilon p` side by side.
pub fn dependence_experiment(config: &SolverConfig, epsilon: f64, seed: u64) -> Result<DependenceReport> {
    if !(config.filter.theta() > 0.5) {
        return Err(Error::InvalidParameter(format!(
            "continuous dependence needs theta > 1/2, got {}",
            config.filter.theta()
        )));
    }
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParameter(format!("epsilon must be >= 0, got {epsilon}")));
    }
    let solver = Solver::new(config.clone())?;
    let base = solver.initial_state();
    let p = solver.state_from(dependence_perturbation(config.grid, seed)?).w;
    let perturbed = SolverState {
        w: base.w.axpy(epsilon, &p),
        ..base.clone()
    };

    let mut w1_states = Vec::new();
    let (_, _, abort1) = solver.integrate(base, |s, _| w1_states.push(s.w.clone()))?;
    let mut rows = Vec::new();
    let mut k = 0;
    let (_, _, abort2) = solver.integrate(perturbed, |s, r| {
        if let Some(w1) = w1_states.get(k) {
            rows.push((s.t, ops::vector_norm(&(&s.w - w1)), r.gronwall_integrand));
        }
        k += 1;
    })?;

    let times: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let delta_norms: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let integrand: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let mut integral = vec![0.0; rows.len()];
    for i in 1..rows.len() {
        integral[i] = integral[i - 1] + 0.5 * (times[i] - times[i - 1]) * (integrand[i] + integrand[i - 1]);
    }
    let d0 = delta_norms.first().copied().unwrap_or(0.0);
    let (mut fitted, mut pathwise) = (0.0_f64, 0.0_f64);
    if d0 > 0.0 {
        for i in 1..rows.len() {
            let growth = (delta_norms[i] / d0).ln();
            if growth > 0.0 {
                fitted = fitted.max(if integral[i] > 0.0 { growth / integral[i] } else { f64::INFINITY });
            }
            let local = (delta_norms[i] / delta_norms[i - 1]).ln();
            let area = integral[i] - integral[i - 1];
            if local > 0.0 {
                pathwise = pathwise.max(if area > 0.0 { local / area } else { f64::INFINITY });
            }
        }
    }
    let envelope = integral.iter().map(|i| d0 * (fitted * i).exp()).collect();
    let abort = abort1.or(abort2).map(|e| e.to_string());
    Ok(DependenceReport {
        epsilon,
        times,
        delta_norms,
        integrand,
        integral,
        fitted_constant: fitted,
        pathwise_constant: pathwise,
        envelope,
        abort,
    })
}
