//! Energy budget, regularity norms and vertical spectra.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::filter::DeconvSpec;
use crate::ops;

/// Relative tolerance on the time gap when pairing records.
const ADJACENCY_TOL: f64 = 1e-9;

/// Every term of the energy identity at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyRecord {
    pub t: f64,
    pub step: u64,
    /// `1/2 ||A^(1/2) D^(1/2) w||^2`
    pub model_energy: f64,
    /// `nu ||grad A^(1/2) D^(1/2) w||^2`
    pub dissipation: f64,
    /// `(D^(1/2) f, D^(1/2) w)`
    pub forcing_power: f64,
    /// Paired with the previous record; NaN until then.
    pub budget_residual: f64,
    /// `||grad w||^(2 - 1/theta) ||d3^theta grad w||^(1/theta)`
    pub gronwall_integrand: f64,
    pub l2_norm: f64,
    /// `||D w||`, the deconvolved velocity.
    pub v_norm: f64,
    /// `||d3^theta w||`
    pub theta_seminorm: f64,
    pub grad_norm: f64,
    /// `||d3^theta grad w||`
    pub theta_grad_norm: f64,
    /// `1/2 (||w||^2 + alpha^(2 theta) ||d3^theta w||^2)`, never above `model_energy`.
    pub energy_floor: f64,
}

impl EnergyRecord {
    /// `energy_floor <= model_energy` up to a relative tolerance.
    pub fn chain_holds(&self, tol: f64) -> bool {
        self.energy_floor <= self.model_energy * (1.0 + tol) + f64::MIN_POSITIVE
    }

    pub fn is_finite(&self) -> bool {
        self.model_energy.is_finite() && self.dissipation.is_finite() && self.forcing_power.is_finite()
    }
}

/// `||grad w||^(2 - 1/theta) ||d3^theta grad w||^(1/theta)`; zero for a
/// constant field, NaN for `theta = 0`.
pub fn gronwall_integrand(grad: f64, theta_grad: f64, theta: f64) -> f64 {
    if theta <= 0.0 {
        return f64::NAN;
    }
    if grad == 0.0 {
        return 0.0;
    }
    grad.powf(2.0 - 1.0 / theta) * theta_grad.powf(1.0 / theta)
}

/// Evaluates every term at one state; `budget_residual` is left NaN.
pub fn energy_terms(w: &VectorField, f: &VectorField, spec: &DeconvSpec, nu: f64, t: f64, step: u64) -> Result<EnergyRecord> {
    if w.grid() != f.grid() {
        return Err(Error::GridMismatch);
    }
    let grid = *w.grid();
    let n3 = grid.shape()[2];
    let d: Vec<f64> = (0..n3).map(|i| spec.symbol_at(grid.wavenumber(2, i))).collect();
    let mut power = 0.0;
    for (wc, fc) in w.components().iter().zip(f.components()) {
        for (i, (a, b)) in wc.coeffs().iter().zip(fc.coeffs()).enumerate() {
            power += d[i % n3] * (b * a.conj()).re;
        }
    }
    let theta = spec.filter.theta();
    let l2 = ops::vector_norm(w);
    let semi = ops::vector_vertical_seminorm(w, theta);
    let grad = ops::gradient_norm(w);
    let theta_grad = ops::vertical_gradient_seminorm(w, theta);
    let v_norm = ops::vector_norm(&spec.deconv(w));
    Ok(EnergyRecord {
        t,
        step,
        model_energy: 0.5 * spec.energy_norm_sq(w),
        dissipation: nu * spec.energy_gradient_norm_sq(w),
        forcing_power: power * grid.volume(),
        budget_residual: f64::NAN,
        gronwall_integrand: gronwall_integrand(grad, theta_grad, theta),
        l2_norm: l2,
        v_norm,
        theta_seminorm: semi,
        grad_norm: grad,
        theta_grad_norm: theta_grad,
        energy_floor: 0.5 * (l2 * l2 + spec.filter.seminorm_weight() * semi * semi),
    })
}

/// `|dE/dt + mean dissipation - mean forcing power|` over one interval, the
/// means taken by the trapezoid rule.
pub fn budget_residual(prev: &EnergyRecord, next: &EnergyRecord, dt: f64) -> Result<f64> {
    let gap = next.t - prev.t;
    if !(dt > 0.0) || (gap - dt).abs() > ADJACENCY_TOL * dt.max(gap.abs()) {
        return Err(Error::NonAdjacent);
    }
    let de = (next.model_energy - prev.model_energy) / dt;
    let diss = 0.5 * (prev.dissipation + next.dissipation);
    let power = 0.5 * (prev.forcing_power + next.forcing_power);
    Ok((de + diss - power).abs())
}

/// Fills `budget_residual` of every record after the first.
pub fn pair_residuals(records: &mut [EnergyRecord]) -> Result<()> {
    for i in 1..records.len() {
        let dt = records[i].t - records[i - 1].t;
        records[i].budget_residual = budget_residual(&records[i - 1], &records[i], dt)?;
    }
    Ok(())
}

/// Trapezoid integral of `value` over the record times, cumulative.
pub fn cumulative_integral(records: &[EnergyRecord], value: impl Fn(&EnergyRecord) -> f64) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(records.len());
    for (i, r) in records.iter().enumerate() {
        if i > 0 {
            let p = &records[i - 1];
            acc += 0.5 * (r.t - p.t) * (value(p) + value(r));
        }
        out.push(acc);
    }
    out
}

/// `E(t) - E(0) + int diss - int power` at every record: the integrated
/// budget defect.
pub fn cumulative_budget(records: &[EnergyRecord]) -> Vec<f64> {
    let diss = cumulative_integral(records, |r| r.dissipation);
    let power = cumulative_integral(records, |r| r.forcing_power);
    let e0 = records.first().map_or(0.0, |r| r.model_energy);
    records
        .iter()
        .enumerate()
        .map(|(i, r)| r.model_energy - e0 + diss[i] - power[i])
        .collect()
}

/// The a priori quantity `||A^(1/2) D^(1/2) w(t)||^2 + nu int ||grad A^(1/2) D^(1/2) w||^2`
/// against `||v0||^2 + C (N+1)/nu int ||f||^2` for steady forcing.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AprioriReport {
    pub times: Vec<f64>,
    pub lhs: Vec<f64>,
    pub initial_norm_sq: f64,
    /// `(N+1)/nu int_0^t ||f||^2` at every record.
    pub forcing_scale: Vec<f64>,
    /// Smallest `C` making the bound hold at every record.
    pub measured_constant: f64,
}

impl AprioriReport {
    pub fn new(records: &[EnergyRecord], initial_norm_sq: f64, forcing_norm_sq: f64, nu: f64, order: u32) -> Self {
        let diss = cumulative_integral(records, |r| r.dissipation);
        let lhs: Vec<f64> = records
            .iter()
            .zip(&diss)
            .map(|(r, d)| 2.0 * r.model_energy + d)
            .collect();
        let t0 = records.first().map_or(0.0, |r| r.t);
        let forcing_scale: Vec<f64> = records
            .iter()
            .map(|r| (order as f64 + 1.0) / nu * forcing_norm_sq * (r.t - t0))
            .collect();
        let mut c: f64 = 0.0;
        for (l, s) in lhs.iter().zip(&forcing_scale) {
            let excess = l - initial_norm_sq;
            if excess > 0.0 {
                c = c.max(if *s > 0.0 { excess / s } else { f64::INFINITY });
            }
        }
        Self {
            times: records.iter().map(|r| r.t).collect(),
            lhs,
            initial_norm_sq,
            forcing_scale,
            measured_constant: c,
        }
    }

    /// Records where `lhs` exceeds the bound with constant `c`. A non-finite
    /// `c` bounds nothing, so every record is reported.
    pub fn violations(&self, c: f64) -> Vec<usize> {
        if !c.is_finite() {
            return (0..self.lhs.len()).collect();
        }
        self.lhs
            .iter()
            .zip(&self.forcing_scale)
            .enumerate()
            .filter(|(_, (l, s))| **l > (self.initial_norm_sq + c * **s) * (1.0 + 1e-12))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn sup_lhs(&self) -> f64 {
        self.lhs.iter().cloned().fold(0.0, f64::max)
    }
}

/// Discrete membership certificates for the regularity classes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegularityReport {
    pub sup_l2: f64,
    pub sup_l2_time: f64,
    pub sup_theta_seminorm: f64,
    /// `int ||grad w||^2`
    pub grad_sq_integral: f64,
    /// `int ||d3^theta grad w||^2`
    pub theta_grad_sq_integral: f64,
}

pub fn regularity_norms<'a>(trajectory: impl IntoIterator<Item = (f64, &'a VectorField)>, theta: f64) -> RegularityReport {
    let mut rep = RegularityReport {
        sup_l2: 0.0,
        sup_l2_time: 0.0,
        sup_theta_seminorm: 0.0,
        grad_sq_integral: 0.0,
        theta_grad_sq_integral: 0.0,
    };
    let mut prev: Option<(f64, f64, f64)> = None;
    for (t, w) in trajectory {
        let l2 = ops::vector_norm(w);
        if prev.is_none() || l2 > rep.sup_l2 {
            rep.sup_l2 = l2;
            rep.sup_l2_time = t;
        }
        rep.sup_theta_seminorm = rep.sup_theta_seminorm.max(ops::vector_vertical_seminorm(w, theta));
        let g = ops::gradient_norm(w).powi(2);
        let tg = ops::vertical_gradient_seminorm(w, theta).powi(2);
        if let Some((tp, gp, tgp)) = prev {
            rep.grad_sq_integral += 0.5 * (t - tp) * (g + gp);
            rep.theta_grad_sq_integral += 0.5 * (t - tp) * (tg + tgp);
        }
        prev = Some((t, g, tg));
    }
    rep
}

/// `regularity_norms` from the norms stored in energy records.
pub fn regularity_from_records(records: &[EnergyRecord]) -> RegularityReport {
    let mut rep = RegularityReport {
        sup_l2: 0.0,
        sup_l2_time: records.first().map_or(0.0, |r| r.t),
        sup_theta_seminorm: 0.0,
        grad_sq_integral: cumulative_integral(records, |r| r.grad_norm * r.grad_norm).last().copied().unwrap_or(0.0),
        theta_grad_sq_integral: cumulative_integral(records, |r| r.theta_grad_norm * r.theta_grad_norm)
            .last()
            .copied()
            .unwrap_or(0.0),
    };
    for r in records {
        if r.l2_norm > rep.sup_l2 {
            rep.sup_l2 = r.l2_norm;
            rep.sup_l2_time = r.t;
        }
        rep.sup_theta_seminorm = rep.sup_theta_seminorm.max(r.theta_seminorm);
    }
    rep
}

/// `(m3, energy)` for every vertical mode, ascending in `m3`; energy is
/// `||.||^2` of the `k3` shell so the entries sum to `||w||^2`.
pub fn vertical_spectrum(w: &VectorField) -> Vec<(i64, f64)> {
    let grid = *w.grid();
    let n3 = grid.shape()[2];
    let mut shells = vec![0.0; n3];
    for c in w.components() {
        for (i, v) in c.coeffs().iter().enumerate() {
            shells[i % n3] += v.norm_sqr();
        }
    }
    let mut out: Vec<(i64, f64)> = shells
        .into_iter()
        .enumerate()
        .map(|(i, e)| (grid.mode(2, i), e * grid.volume()))
        .collect();
    out.sort_by_key(|&(m, _)| m);
    out
}

pub const CSV_HEADER: &str =
    "t,step,model_energy,dissipation,forcing_power,budget_residual,l2_norm,v_norm,theta_seminorm,gronwall_integrand";

pub fn csv_row(r: &EnergyRecord) -> String {
    format!(
        "{:.17e},{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
        r.t,
        r.step,
        r.model_energy,
        r.dissipation,
        r.forcing_power,
        r.budget_residual,
        r.l2_norm,
        r.v_norm,
        r.theta_seminorm,
        r.gronwall_integrand
    )
}
