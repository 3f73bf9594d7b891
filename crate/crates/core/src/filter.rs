//! Vertical fractional filter and Van Cittert deconvolution.
//!
//! The filter `A = I + alpha^(2 theta) (-d3^2)^theta` acts only on the
//! vertical variable, so every operator here is a real diagonal multiplier in
//! `k3`, applied uniformly over the horizontal modes:
//!
//! | operator        | symbol                                   |
//! |-----------------|------------------------------------------|
//! | `A`             | `1 + (alpha |k3|)^(2 theta)`             |
//! | bar = `A^-1`    | `1 / A(k3)`                              |
//! | `D_N`           | `sum_{i=0..N} (1 - 1/A)^i`               |
//!
//! The deconvolution sum has the closed form `A (1 - r^(N+1))` with
//! `r = a / (1 + a)`, `a = (alpha |k3|)^(2 theta)`. At `k3 = 0` every symbol
//! is 1. `theta = 0` is admitted and gives the constant symbol 2 off the
//! mean plane; well-posedness of the time-dependent model needs `theta > 1/2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{SpectralField, VectorField};
use crate::ops;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    alpha: f64,
    theta: f64,
}

impl FilterSpec {
    pub fn new(alpha: f64, theta: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "filter length alpha must be positive, got {alpha}"
            )));
        }
        if !(0.0..=1.0).contains(&theta) {
            return Err(Error::InvalidParameter(format!(
                "fractional order theta must satisfy 0 <= theta <= 1, got {theta}"
            )));
        }
        Ok(Self { alpha, theta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// `alpha^(2 theta)`, the weight of the fractional seminorm.
    pub fn seminorm_weight(&self) -> f64 {
        self.alpha.powf(2.0 * self.theta)
    }

    /// `(alpha |k3|)^(2 theta)`, zero on the mean plane.
    #[inline]
    pub fn excess(&self, k3: f64) -> f64 {
        if k3 == 0.0 {
            0.0
        } else {
            (self.alpha * k3.abs()).powf(2.0 * self.theta)
        }
    }

    /// Filter symbol at integer vertical wavenumber `k3` (period `2 pi`).
    pub fn symbol(&self, k3: i64) -> f64 {
        self.symbol_at(k3 as f64)
    }

    /// Filter symbol at a physical vertical wavenumber.
    #[inline]
    pub fn symbol_at(&self, k3: f64) -> f64 {
        1.0 + self.excess(k3)
    }

    pub fn apply_bar(&self, f: &SpectralField) -> SpectralField {
        f.scale_vertical(|k| 1.0 / self.symbol_at(k))
    }

    pub fn apply_filter_a(&self, f: &SpectralField) -> SpectralField {
        f.scale_vertical(|k| self.symbol_at(k))
    }

    pub fn apply_filter_a_half(&self, f: &SpectralField) -> SpectralField {
        f.scale_vertical(|k| self.symbol_at(k).sqrt())
    }

    /// `(-d3^2)^theta`, symbol `|k3|^(2 theta)`.
    pub fn apply_vertical_power(&self, f: &SpectralField) -> SpectralField {
        let t = self.theta;
        f.scale_vertical(|k| ops::vertical_weight(k, t))
    }

    pub fn bar(&self, u: &VectorField) -> VectorField {
        u.scale_vertical(|k| 1.0 / self.symbol_at(k))
    }

    pub fn filter_a(&self, u: &VectorField) -> VectorField {
        u.scale_vertical(|k| self.symbol_at(k))
    }

    pub fn filter_a_half(&self, u: &VectorField) -> VectorField {
        u.scale_vertical(|k| self.symbol_at(k).sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeconvSpec {
    pub filter: FilterSpec,
    pub order: u32,
}

impl DeconvSpec {
    pub fn new(filter: FilterSpec, order: u32) -> Self {
        Self { filter, order }
    }

    pub fn symbol(&self, k3: i64) -> f64 {
        self.symbol_at(k3 as f64)
    }

    /// Closed form `A (1 - r^(N+1))`, evaluated as `-A expm1((N+1) ln r)` with
    /// `ln r = -ln_1p(1/a)` so that neither small nor large `a` cancels.
    pub fn symbol_at(&self, k3: f64) -> f64 {
        let a = self.filter.excess(k3);
        if self.order == 0 || a == 0.0 {
            return 1.0;
        }
        let ln_r = -(1.0 / a).ln_1p();
        -(1.0 + a) * ((self.order as f64 + 1.0) * ln_r).exp_m1()
    }

    pub fn symbol_iterative(&self, k3: i64) -> f64 {
        self.symbol_iterative_at(k3 as f64)
    }

    /// Term-by-term Van Cittert partial sum `sum_{i=0..N} r^i`, with
    /// Neumaier-compensated accumulation.
    pub fn symbol_iterative_at(&self, k3: f64) -> f64 {
        let a = self.filter.excess(k3);
        if self.order == 0 || a == 0.0 {
            return 1.0;
        }
        let r = a / (1.0 + a);
        let mut sum = 0.0_f64;
        let mut comp = 0.0_f64;
        let mut term = 1.0_f64;
        for _ in 0..=self.order {
            let t = sum + term;
            if sum.abs() >= term.abs() {
                comp += (sum - t) + term;
            } else {
                comp += (term - t) + sum;
            }
            sum = t;
            term *= r;
        }
        sum + comp
    }

    /// Per-mode relative reconstruction error of `D_N(bar v)` against `v`,
    /// `(a / (1 + a))^(N+1)`.
    pub fn reconstruction_error_at(&self, k3: f64) -> f64 {
        let a = self.filter.excess(k3);
        if a == 0.0 {
            return 0.0;
        }
        (-(self.order as f64 + 1.0) * (1.0 / a).ln_1p()).exp()
    }

    pub fn apply_deconv(&self, f: &SpectralField) -> SpectralField {
        f.scale_vertical(|k| self.symbol_at(k))
    }

    pub fn apply_deconv_half(&self, f: &SpectralField) -> SpectralField {
        f.scale_vertical(|k| self.symbol_at(k).sqrt())
    }

    pub fn deconv(&self, u: &VectorField) -> VectorField {
        u.scale_vertical(|k| self.symbol_at(k))
    }

    pub fn deconv_half(&self, u: &VectorField) -> VectorField {
        u.scale_vertical(|k| self.symbol_at(k).sqrt())
    }

    /// `A^(1/2) D^(1/2)`, whose squared norm is twice the model energy.
    pub fn energy_operator(&self, u: &VectorField) -> VectorField {
        u.scale_vertical(|k| (self.filter.symbol_at(k) * self.symbol_at(k)).sqrt())
    }

    /// `sum_k A(k3) D(k3) |u_k|^2 * volume`, i.e. `||A^(1/2) D^(1/2) u||^2`.
    pub fn energy_norm_sq(&self, u: &VectorField) -> f64 {
        self.weighted_norm_sq(u, |_| 1.0)
    }

    /// `||grad A^(1/2) D^(1/2) u||^2`.
    pub fn energy_gradient_norm_sq(&self, u: &VectorField) -> f64 {
        self.weighted_norm_sq(u, |m| m.k_squared())
    }

    fn weighted_norm_sq(&self, u: &VectorField, extra: impl Fn(&crate::field::Mode) -> f64 + Copy) -> f64 {
        let grid = *u.grid();
        let n3 = grid.shape()[2];
        let table: Vec<f64> = (0..n3)
            .map(|i| {
                let k = grid.wavenumber(2, i);
                self.filter.symbol_at(k) * self.symbol_at(k)
            })
            .collect();
        let s: f64 = u
            .components()
            .iter()
            .map(|c| c.weighted_mass(|m| table[m.index % n3] * extra(m)))
            .sum();
        s * grid.volume()
    }
}

/// Residuals of the filter identities; each entry is relative to the natural
/// scale of its two sides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FilterIdentityReport {
    /// `(bar f, w_j) = (f, bar w_j)`, worst component.
    pub self_adjoint: f64,
    /// `bar(w - alpha^(2 theta) d3^(2 theta) w) = bar w - alpha^(2 theta) d3^(2 theta) bar w`.
    pub commutation: f64,
    /// `(bar(div(w (x) w)), A w)`.
    pub orthogonality_filtered: f64,
    /// `(div(w (x) w), w)`.
    pub orthogonality: f64,
    /// `|(bar(div(w (x) w)), A w) - (div(w (x) w), w)|`.
    pub filtered_vs_plain: f64,
}

impl FilterIdentityReport {
    pub fn max_residual(&self) -> f64 {
        [
            self.self_adjoint,
            self.commutation,
            self.orthogonality_filtered,
            self.orthogonality,
            self.filtered_vs_plain,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn holds(&self, tol: f64) -> bool {
        self.max_residual() <= tol
    }
}

fn ratio(num: f64, scale: f64) -> f64 {
    if scale == 0.0 {
        num.abs()
    } else {
        num.abs() / scale
    }
}

/// Evaluates the three filter identities on `f` and `w`. Violations are
/// reported, not raised; feeding a field with divergence shows up in the
/// orthogonality entries.
pub fn check_filter_identities(spec: &FilterSpec, f: &SpectralField, w: &VectorField) -> Result<FilterIdentityReport> {
    if f.grid() != w.grid() {
        return Err(Error::GridMismatch);
    }
    let bar_f = spec.apply_bar(f);
    let mut self_adjoint = 0.0_f64;
    for wj in w.components() {
        let lhs = ops::inner_product(&bar_f, wj)?;
        let rhs = ops::inner_product(f, &spec.apply_bar(wj))?;
        self_adjoint = self_adjoint.max(ratio(lhs - rhs, ops::norm(f) * ops::norm(wj)));
    }

    // the operator d3^(2 theta) entering A = I - alpha^(2 theta) d3^(2 theta): symbol -|k3|^(2 theta)
    let weight = spec.seminorm_weight();
    let frac = |u: &VectorField| u.scale_vertical(|k| -ops::vertical_weight(k, spec.theta()));
    let lhs = spec.bar(&w.axpy(-weight, &frac(w)));
    let bw = spec.bar(w);
    let rhs = bw.axpy(-weight, &frac(&bw));
    let commutation = ratio(ops::vector_norm(&(&lhs - &rhs)), ops::vector_norm(&lhs));

    let t = ops::tensor_divergence(w);
    let aw = spec.filter_a(w);
    let bt = spec.bar(&t);
    let filtered = ops::vector_inner_product(&bt, &aw)?;
    let plain = ops::vector_inner_product(&t, w)?;
    let scale = ops::vector_norm(&t) * ops::vector_norm(w);
    Ok(FilterIdentityReport {
        self_adjoint,
        commutation,
        orthogonality_filtered: ratio(filtered, ops::vector_norm(&bt) * ops::vector_norm(&aw)),
        orthogonality: ratio(plain, scale),
        filtered_vs_plain: ratio(filtered - plain, scale),
    })
}

/// Norms entering the deconvolution operator bounds for one field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeconvChainReport {
    pub norm_v: f64,
    pub norm_dv: f64,
    /// `||A^(1/2) D^(1/2) v||`
    pub norm_energy_v: f64,
    /// `||A^(1/2) D^(1/2) bar v||`
    pub norm_energy_bar_v: f64,
    /// `||v||^2 + alpha^(2 theta) ||d3^theta v||^2`
    pub filtered_norm_sq: f64,
    pub order: u32,
}

impl DeconvChainReport {
    pub fn measure(spec: &DeconvSpec, v: &VectorField) -> Self {
        let f = &spec.filter;
        Self {
            norm_v: ops::vector_norm(v),
            norm_dv: ops::vector_norm(&spec.deconv(v)),
            norm_energy_v: spec.energy_norm_sq(v).sqrt(),
            norm_energy_bar_v: spec.energy_norm_sq(&f.bar(v)).sqrt(),
            filtered_norm_sq: ops::vector_norm(v).powi(2)
                + f.seminorm_weight() * ops::vector_vertical_seminorm(v, f.theta()).powi(2),
            order: spec.order,
        }
    }

    /// Constant `C` needed in `||D v|| <= C ||A^(1/2) D^(1/2) v||`.
    pub fn energy_constant(&self) -> f64 {
        if self.norm_energy_v == 0.0 {
            0.0
        } else {
            self.norm_dv / self.norm_energy_v
        }
    }

    /// Lists every violated bound at relative tolerance `tol`.
    pub fn violations(&self, tol: f64) -> Vec<String> {
        let mut out = Vec::new();
        let le = |a: f64, b: f64| a <= b + tol * a.abs().max(b.abs());
        let n1 = (self.order + 1) as f64;
        if !le(self.norm_v, self.norm_dv) {
            out.push(format!("||v|| = {} > ||Dv|| = {}", self.norm_v, self.norm_dv));
        }
        if !le(self.norm_dv, n1 * self.norm_v) {
            out.push(format!("||Dv|| = {} > (N+1)||v|| = {}", self.norm_dv, n1 * self.norm_v));
        }
        if !le(self.norm_dv, self.norm_energy_v) {
            out.push(format!(
                "||Dv|| = {} > ||A^1/2 D^1/2 v|| = {}",
                self.norm_dv, self.norm_energy_v
            ));
        }
        if !le(self.norm_energy_bar_v, self.norm_v) {
            out.push(format!(
                "||A^1/2 D^1/2 bar v|| = {} > ||v|| = {}",
                self.norm_energy_bar_v, self.norm_v
            ));
        }
        if !le(self.filtered_norm_sq, self.norm_energy_v.powi(2)) {
            out.push(format!(
                "||v||^2 + a||d3^t v||^2 = {} > ||A^1/2 D^1/2 v||^2 = {}",
                self.filtered_norm_sq,
                self.norm_energy_v.powi(2)
            ));
        }
        out
    }
}

/// One line of the operator symbol table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymbolRow {
    pub alpha: f64,
    pub theta: f64,
    pub order: u32,
    pub k3: i64,
    pub a_symbol: f64,
    pub d_symbol: f64,
    pub d_iterative: f64,
    /// `min(D - 1, N + 1 - D, A - D)`; negative means a violated bound.
    pub bound_margin: f64,
}

impl SymbolRow {
    pub fn evaluate(spec: &DeconvSpec, k3: i64) -> Self {
        let a = spec.filter.symbol(k3);
        let d = spec.symbol(k3);
        let n1 = (spec.order + 1) as f64;
        Self {
            alpha: spec.filter.alpha(),
            theta: spec.filter.theta(),
            order: spec.order,
            k3,
            a_symbol: a,
            d_symbol: d,
            d_iterative: spec.symbol_iterative(k3),
            bound_margin: (d - 1.0).min(n1 - d).min(a - d),
        }
    }

    pub fn relative_deviation(&self) -> f64 {
        (self.d_symbol - self.d_iterative).abs() / self.d_symbol.abs()
    }

    /// True when the three symbol bounds hold within `tol` (relative to `A`).
    pub fn bounds_hold(&self, tol: f64) -> bool {
        self.bound_margin >= -tol * self.a_symbol
    }
}

/// Symbol table over the Cartesian product of parameters and `k3` in
/// `[-k3_max, k3_max]`.
pub fn symbol_sweep(alphas: &[f64], thetas: &[f64], orders: &[u32], k3_max: i64) -> Result<Vec<SymbolRow>> {
    let mut rows = Vec::new();
    for &alpha in alphas {
        for &theta in thetas {
            let filter = FilterSpec::new(alpha, theta)?;
            for &order in orders {
                let spec = DeconvSpec::new(filter, order);
                rows.extend((-k3_max..=k3_max).map(|k3| SymbolRow::evaluate(&spec, k3)));
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{random_scalar, random_vector, EnsembleSpec, MeanConstraint};
    use crate::grid::Grid;
    use proptest::prelude::*;

    fn spec(alpha: f64, theta: f64) -> FilterSpec {
        FilterSpec::new(alpha, theta).unwrap()
    }

    #[test]
    fn filter_symbol_examples() {
        assert_eq!(spec(1.0, 1.0).symbol(2), 5.0);
        assert_eq!(spec(0.3, 0.7).symbol(0), 1.0);
        assert_eq!(spec(2.0, 0.0).symbol(0), 1.0);
        assert_eq!(spec(2.0, 0.0).symbol(5), 2.0);
        // 1 + 4^(2 * 1/2)
        assert!((spec(1.0, 0.5).symbol(4) - 5.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(FilterSpec::new(0.0, 0.5).is_err());
        assert!(FilterSpec::new(1.0, 1.5).is_err());
        assert!(FilterSpec::new(1.0, -0.1).is_err());
    }

    #[test]
    fn deconv_symbol_examples() {
        let f = spec(1.0, 1.0);
        for k in [-3, 0, 1, 7] {
            assert_eq!(DeconvSpec::new(f, 0).symbol(k), 1.0);
            assert_eq!(DeconvSpec::new(f, 0).symbol_iterative(k), 1.0);
        }
        assert!((DeconvSpec::new(f, 1).symbol(1) - 1.5).abs() < 1e-15);
        assert!((DeconvSpec::new(f, 2).symbol(1) - 1.75).abs() < 1e-15);
        assert!((DeconvSpec::new(f, 1).symbol_iterative(1) - 1.5).abs() < 1e-15);
        let d = DeconvSpec::new(spec(2.0, 0.7), 10);
        let closed = d.symbol(3);
        assert!((closed - d.symbol_iterative(3)).abs() <= 1e-12 * closed);
    }

    #[test]
    fn bar_and_filter_on_single_mode() {
        let g = Grid::cubic(8).unwrap();
        let f = spec(1.0, 1.0);
        let e = SpectralField::from_fn(g, |_, _, z| z.cos());
        let b = f.apply_bar(&e);
        assert!((b.coeff([0, 0, 1]).re - 0.25).abs() < 1e-15);
        let a = f.apply_filter_a(&e);
        assert!((a.coeff([0, 0, 1]).re - 1.0).abs() < 1e-14);
        let h = f.apply_filter_a_half(&e);
        assert!((h.coeff([0, 0, 1]).re - 0.5 * 2f64.sqrt()).abs() < 1e-14);
        let flat = SpectralField::from_fn(g, |x, y, _| x.sin() + y.cos());
        assert_eq!(f.apply_bar(&flat), flat);
    }

    #[test]
    fn operator_compositions_on_random_field() {
        let g = Grid::cubic(12).unwrap();
        let v = random_scalar(g, &EnsembleSpec::new(1, 5, 17), 0, MeanConstraint::None).unwrap();
        let f = spec(0.7, 0.6);
        let d = DeconvSpec::new(f, 3);
        let close = |a: &SpectralField, b: &SpectralField| {
            ops::norm(&(a - b)) <= 1e-12 * ops::norm(b)
        };
        assert!(close(&f.apply_filter_a(&f.apply_bar(&v)), &v));
        assert!(close(&f.apply_filter_a_half(&f.apply_filter_a_half(&v)), &f.apply_filter_a(&v)));
        assert!(close(&d.apply_deconv_half(&d.apply_deconv_half(&v)), &d.apply_deconv(&v)));
        assert_eq!(DeconvSpec::new(f, 0).apply_deconv(&v), v);
        assert!(ops::norm(&f.apply_bar(&v)) <= ops::norm(&v));
    }

    #[test]
    fn identities_on_single_modes() {
        let g = Grid::cubic(8).unwrap();
        let f = SpectralField::from_fn(g, |_, _, z| (2.0 * z).sin());
        let w = VectorField::from_fn(g, |x, y, _| [-(y.sin()), x.sin(), 0.0]);
        let r = check_filter_identities(&spec(0.5, 0.8), &f, &w).unwrap();
        assert!(r.holds(1e-14), "{r:?}");
    }

    #[test]
    fn gradient_field_breaks_orthogonality() {
        let g = Grid::cubic(12).unwrap();
        let phi = random_scalar(g, &EnsembleSpec::new(1, 3, 2), 0, MeanConstraint::None).unwrap();
        let w = ops::gradient(&phi);
        let r = check_filter_identities(&spec(0.5, 1.0), &phi, &w).unwrap();
        assert!(r.orthogonality > 1e-3, "{r:?}");
        assert!(r.self_adjoint < 1e-12 && r.commutation < 1e-12);
    }

    #[test]
    fn chain_holds_on_random_fields() {
        let g = Grid::cubic(12).unwrap();
        let ens = EnsembleSpec::new(1, 5, 4);
        for (i, (alpha, theta, n)) in [(0.1, 0.51, 1), (2.0, 1.0, 7), (1.0, 0.0, 3)].into_iter().enumerate() {
            let v = random_vector(g, &ens, i, true, MeanConstraint::None).unwrap();
            let r = DeconvChainReport::measure(&DeconvSpec::new(spec(alpha, theta), n), &v);
            assert!(r.violations(1e-12).is_empty(), "{:?}", r.violations(1e-12));
            assert!(r.energy_constant() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn reconstruction_error_matches_symbols() {
        let d = DeconvSpec::new(spec(0.8, 0.75), 4);
        for k in 1..20 {
            let a = d.filter.symbol(k);
            let expect = 1.0 - d.symbol(k) / a;
            assert!((d.reconstruction_error_at(k as f64) - expect).abs() < 1e-13);
        }
    }

    proptest! {
        #[test]
        fn symbol_bounds(alpha in 0.01f64..10.0, theta in 0.0f64..=1.0, order in 0u32..60, k3 in -200i64..200) {
            let d = DeconvSpec::new(FilterSpec::new(alpha, theta).unwrap(), order);
            let a = d.filter.symbol(k3);
            let s = d.symbol(k3);
            prop_assert!(a >= 1.0);
            prop_assert!(s >= 1.0 - 1e-12);
            prop_assert!(s <= (order + 1) as f64 * (1.0 + 1e-12));
            prop_assert!(s <= a * (1.0 + 1e-12));
            let it = d.symbol_iterative(k3);
            prop_assert!((s - it).abs() <= 1e-12 * s);
        }
    }
}
