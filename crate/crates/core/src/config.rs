//! Run configuration: a TOML file of flat sections with typed scalars.
//!
//! ```toml
//! [grid]
//! n = 32                # or n1, n2, n3
//!
//! [model]
//! nu = 0.1
//! alpha = 0.5
//! theta = 1.0
//! order = 1
//!
//! [time]
//! dt = 0.01
//! t_end = 5.0
//! output_every = 1
//!
//! [init]
//! type = "taylor_green" # zero | random | single_mode
//!
//! [run]
//! seed = 0
//! ```
//!
//! Every section and key is optional; the defaults give the Taylor-Green
//! baseline on `32^3`. Unknown sections and keys are errors.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use serde::Serialize;
use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::filter::FilterSpec;
use crate::grid::Grid;
use crate::solver::{ForcingDescriptor, InitDescriptor, SolverConfig, DEFAULT_CFL_LIMIT};

/// Parameters of the operator sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OperatorSweep {
    pub alphas: Vec<f64>,
    pub thetas: Vec<f64>,
    pub orders: Vec<u32>,
    pub k3_max: i64,
    /// Random fields for the identity and chain checks.
    pub fields: usize,
    pub n: usize,
    pub band: i64,
}

/// Parameters of the inequality benches.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalitySweep {
    pub count: usize,
    pub n: usize,
    pub band: i64,
    pub n1d: usize,
    pub band1d: i64,
    pub exponents: Vec<f64>,
    pub amplitude_decay: f64,
    /// Also evaluate every ensemble on the doubled grid and report the drift.
    pub refine: bool,
    pub max_drift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DependenceBlock {
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub solver: SolverConfig,
    pub seed: u64,
    /// Checkpoint every this many steps; 0 writes only the final state.
    pub checkpoint_every: u64,
    pub operators: OperatorSweep,
    pub inequalities: InequalitySweep,
    pub dependence: Option<DependenceBlock>,
}

impl RunConfig {
    /// Replaces the master seed and every seed derived from it.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        if let InitDescriptor::Random { seed: s, .. } = &mut self.solver.init {
            *s = seed;
        }
        if let ForcingDescriptor::Band { seed: s, .. } = &mut self.solver.forcing {
            *s = seed.wrapping_add(1);
        }
        self
    }

    /// Seed of the dependence perturbation.
    pub fn perturbation_seed(&self) -> u64 {
        self.seed.wrapping_add(2)
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> [u8; 32] {
        let json = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&json).into()
    }

    pub fn hash_hex(&self) -> String {
        self.hash().iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        parse_config("").expect("defaults are valid")
    }
}

/// Typed access to one section; remembers which keys were read.
struct Section<'a> {
    name: &'a str,
    table: Option<&'a Table>,
    seen: BTreeSet<&'a str>,
}

impl<'a> Section<'a> {
    fn new(root: &'a Table, name: &'a str, errors: &mut Vec<String>) -> Self {
        let table = match root.get(name) {
            None => None,
            Some(Value::Table(t)) => Some(t),
            Some(_) => {
                errors.push(format!("[{name}] must be a table"));
                None
            }
        };
        Self {
            name,
            table,
            seen: BTreeSet::new(),
        }
    }

    fn present(&self) -> bool {
        self.table.is_some()
    }

    fn raw(&mut self, key: &'a str) -> Option<&'a Value> {
        self.seen.insert(key);
        self.table.and_then(|t| t.get(key))
    }

    fn typed<T>(&mut self, key: &'a str, default: T, errors: &mut Vec<String>, conv: impl Fn(&Value) -> Option<T>, what: &str) -> T {
        match self.raw(key) {
            None => default,
            Some(v) => conv(v).unwrap_or_else(|| {
                errors.push(format!("{}.{key}: expected {what}, got {v}", self.name));
                default
            }),
        }
    }

    fn f64(&mut self, key: &'a str, default: f64, errors: &mut Vec<String>) -> f64 {
        self.typed(key, default, errors, as_f64, "a number")
    }

    fn u64(&mut self, key: &'a str, default: u64, errors: &mut Vec<String>) -> u64 {
        self.typed(key, default, errors, |v| v.as_integer().and_then(|i| u64::try_from(i).ok()), "a non-negative integer")
    }

    fn i64(&mut self, key: &'a str, default: i64, errors: &mut Vec<String>) -> i64 {
        self.typed(key, default, errors, Value::as_integer, "an integer")
    }

    fn usize(&mut self, key: &'a str, default: usize, errors: &mut Vec<String>) -> usize {
        self.u64(key, default as u64, errors) as usize
    }

    fn bool(&mut self, key: &'a str, default: bool, errors: &mut Vec<String>) -> bool {
        self.typed(key, default, errors, Value::as_bool, "a boolean")
    }

    fn string(&mut self, key: &'a str, default: &str, errors: &mut Vec<String>) -> String {
        self.typed(key, default.to_string(), errors, |v| v.as_str().map(str::to_string), "a string")
    }

    fn f64_list(&mut self, key: &'a str, default: &[f64], errors: &mut Vec<String>) -> Vec<f64> {
        self.typed(
            key,
            default.to_vec(),
            errors,
            |v| v.as_array().and_then(|a| a.iter().map(as_f64).collect()),
            "an array of numbers",
        )
    }

    fn i64_list(&mut self, key: &'a str, default: &[i64], errors: &mut Vec<String>) -> Vec<i64> {
        self.typed(
            key,
            default.to_vec(),
            errors,
            |v| v.as_array().and_then(|a| a.iter().map(Value::as_integer).collect()),
            "an array of integers",
        )
    }

    fn finish(self, errors: &mut Vec<String>) {
        if let Some(t) = self.table {
            for k in t.keys() {
                if !self.seen.contains(k.as_str()) {
                    errors.push(format!("unknown key {}.{k}", self.name));
                }
            }
        }
    }
}

fn as_f64(v: &Value) -> Option<f64> {
    v.as_float().or_else(|| v.as_integer().map(|i| i as f64))
}

const SECTIONS: [&str; 9] = ["grid", "model", "time", "init", "forcing", "run", "operators", "inequalities", "dependence"];

/// Parses and validates a configuration, reporting every problem found.
pub fn parse_config(text: &str) -> std::result::Result<RunConfig, Vec<String>> {
    let root: Table = text.parse().map_err(|e: toml::de::Error| vec![format!("syntax: {}", e.message())])?;
    let mut errors = Vec::new();
    for k in root.keys() {
        if !SECTIONS.contains(&k.as_str()) {
            errors.push(format!("unknown section [{k}]"));
        }
    }
    let e = &mut errors;

    let mut grid = Section::new(&root, "grid", e);
    let n = grid.usize("n", 32, e);
    let n1 = grid.usize("n1", n, e);
    let n2 = grid.usize("n2", n, e);
    let n3 = grid.usize("n3", n, e);
    let lengths = grid.f64_list("lengths", &[2.0 * PI; 3], e);
    grid.finish(e);
    let grid = match <[f64; 3]>::try_from(lengths) {
        Ok(l) => Grid::with_lengths([n1, n2, n3], l).map_err(|err| e.push(format!("grid: {err}"))).ok(),
        Err(_) => {
            e.push("grid.lengths: expected three box lengths".into());
            None
        }
    };

    let mut model = Section::new(&root, "model", e);
    let nu = model.f64("nu", 0.1, e);
    let alpha = model.f64("alpha", 0.5, e);
    let theta = model.f64("theta", 1.0, e);
    let order = model.u64("order", 1, e);
    model.finish(e);
    let filter = FilterSpec::new(alpha, theta).map_err(|err| e.push(format!("model: {err}"))).ok();
    let order = u32::try_from(order).unwrap_or_else(|_| {
        e.push(format!("model.order: {order} is too large"));
        0
    });

    let mut time = Section::new(&root, "time", e);
    let dt = time.f64("dt", 0.01, e);
    let t_end = time.f64("t_end", 5.0, e);
    let output_every = time.u64("output_every", 1, e);
    let cfl_limit = time.f64("cfl_limit", DEFAULT_CFL_LIMIT, e);
    time.finish(e);

    let mut run = Section::new(&root, "run", e);
    let seed = run.u64("seed", 0, e);
    let checkpoint_every = run.u64("checkpoint_every", 0, e);
    run.finish(e);

    let mut init = Section::new(&root, "init", e);
    let kind = init.string("type", "taylor_green", e);
    let init_desc = match kind.as_str() {
        "taylor_green" => Some(InitDescriptor::TaylorGreen),
        "zero" => Some(InitDescriptor::Zero),
        "random" => Some(InitDescriptor::Random {
            seed,
            band: init.i64("band", 4, e),
            energy: init.f64("energy", 0.5, e),
        }),
        "single_mode" => {
            let k = init.i64_list("k", &[1, 0, 0], e);
            let amplitude = init.f64("amplitude", 1.0, e);
            match <[i64; 3]>::try_from(k) {
                Ok(k) => Some(InitDescriptor::SingleMode { k, amplitude }),
                Err(_) => {
                    e.push("init.k: expected three integers".into());
                    None
                }
            }
        }
        other => {
            e.push(format!("init.type: unknown initial condition \"{other}\" (taylor_green, random, single_mode, zero)"));
            None
        }
    };
    init.finish(e);

    let mut forcing = Section::new(&root, "forcing", e);
    let fkind = forcing.string("type", "none", e);
    let forcing_desc = match fkind.as_str() {
        "none" => Some(ForcingDescriptor::None),
        "band" => Some(ForcingDescriptor::Band {
            seed: seed.wrapping_add(1),
            band: forcing.i64("band", 2, e),
            amplitude: forcing.f64("amplitude", 1.0, e),
        }),
        other => {
            e.push(format!("forcing.type: unknown forcing \"{other}\" (none, band)"));
            None
        }
    };
    forcing.finish(e);

    let mut ops = Section::new(&root, "operators", e);
    let orders_raw = ops.i64_list("orders", &(0..=10).collect::<Vec<_>>(), e);
    let operators = OperatorSweep {
        alphas: ops.f64_list("alphas", &[0.1, 0.5, 1.0, 2.0], e),
        thetas: ops.f64_list("thetas", &[0.51, 0.75, 1.0], e),
        orders: orders_raw
            .iter()
            .filter_map(|&o| {
                u32::try_from(o)
                    .map_err(|_| e.push(format!("operators.orders: order {o} must be >= 0")))
                    .ok()
            })
            .collect(),
        k3_max: ops.i64("k3_max", 64, e),
        fields: ops.usize("fields", 10, e),
        n: ops.usize("n", 16, e),
        band: ops.i64("band", 4, e),
    };
    ops.finish(e);
    if operators.k3_max < 0 {
        e.push("operators.k3_max must be >= 0".into());
    }
    for &a in &operators.alphas {
        if !(a > 0.0) {
            e.push(format!("operators.alphas: alpha must be positive, got {a}"));
        }
    }
    for &t in &operators.thetas {
        if !(0.0..=1.0).contains(&t) {
            e.push(format!("operators.thetas: fractional order theta must satisfy 0 <= theta <= 1, got {t}"));
        }
    }
    check_ensemble_grid("operators", operators.n, operators.band, e);

    let mut ineq = Section::new(&root, "inequalities", e);
    let inequalities = InequalitySweep {
        count: ineq.usize("count", 100, e),
        n: ineq.usize("n", 12, e),
        band: ineq.i64("band", 3, e),
        n1d: ineq.usize("n1d", 32, e),
        band1d: ineq.i64("band1d", 8, e),
        exponents: ineq.f64_list("exponents", &[0.6, 0.75, 1.0], e),
        amplitude_decay: ineq.f64("amplitude_decay", 1.0, e),
        refine: ineq.bool("refine", true, e),
        max_drift: ineq.f64("max_drift", 0.05, e),
    };
    ineq.finish(e);
    if inequalities.count < 1 {
        e.push("inequalities.count must be >= 1".into());
    }
    for &s in &inequalities.exponents {
        if !(s > 0.5 && s <= 1.0) {
            e.push(format!("inequalities.exponents: exponent must satisfy 1/2 < s <= 1, got {s}"));
        }
    }
    check_ensemble_grid("inequalities", inequalities.n, inequalities.band, e);
    if inequalities.n1d < 4 || inequalities.n1d % 2 != 0 || inequalities.band1d < 1 || 2 * inequalities.band1d >= inequalities.n1d as i64 {
        e.push(format!(
            "inequalities: 1d band {} must satisfy 1 <= band < n1d/2 with n1d = {} even",
            inequalities.band1d, inequalities.n1d
        ));
    }
    if !(inequalities.amplitude_decay >= 0.0) {
        e.push("inequalities.amplitude_decay must be >= 0".into());
    }

    let mut dep = Section::new(&root, "dependence", e);
    let dependence = if dep.present() {
        let epsilon = dep.f64("epsilon", 1e-6, e);
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            e.push(format!("dependence.epsilon must be >= 0, got {epsilon}"));
        }
        if filter.is_some() && !(theta > 0.5) {
            e.push(format!(
                "model.theta = {theta}: the dependence run requires theta > 1/2 (uniqueness needs theta > 1/2)"
            ));
        }
        Some(DependenceBlock { epsilon })
    } else {
        None
    };
    dep.finish(e);

    let (Some(grid), Some(init), Some(forcing)) = (grid, init_desc, forcing_desc) else {
        return Err(errors);
    };
    // an invalid filter is already reported; a placeholder lets the remaining
    // solver checks run
    let filter_ok = filter.is_some();
    let solver = SolverConfig {
        grid,
        nu,
        filter: filter.unwrap_or_else(|| FilterSpec::new(1.0, 1.0).expect("valid placeholder")),
        order,
        dt,
        t_end,
        init,
        forcing,
        output_every,
        cfl_limit,
    };
    errors.extend(solver.problems());
    if !filter_ok || !errors.is_empty() {
        return Err(errors);
    }
    Ok(RunConfig {
        solver,
        seed,
        checkpoint_every,
        operators,
        inequalities,
        dependence,
    })
}

fn check_ensemble_grid(section: &str, n: usize, band: i64, e: &mut Vec<String>) {
    if n < 4 || n % 2 != 0 {
        e.push(format!("{section}.n must be even and >= 4, got {n}"));
    } else if band < 1 || 3 * band >= n as i64 {
        e.push(format!("{section}.band must satisfy 1 <= band and 3 band < n, got band {band} with n = {n}"));
    }
}
