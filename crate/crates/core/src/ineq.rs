//! Ratio benches for the anisotropic functional inequalities.
//!
//! Each `*_ratio` function returns `lhs / rhs` of one inequality with the
//! constant set to 1, so a bounded ratio over an ensemble is a numerical
//! certificate for the inequality and its maximum estimates the constant.
//! All ratios are homogeneous of degree zero.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::ensemble::{random_vector, EnsembleSpec, MeanConstraint};
use crate::error::{Error, Result};
use crate::fft;
use crate::field::VectorField;
use crate::grid::Grid;
use crate::ops;

/// Oversampling factor for grid-maximum approximations of sup norms.
pub const SUP_OVERSAMPLE: usize = 4;
/// Oversampling factor for the `L^4` horizontal quadrature.
pub const QUAD_OVERSAMPLE: usize = 2;

/// Maximum of a smooth periodic `f` given its values on a uniform grid over
/// one period: each discrete local maximum is refined by golden-section search
/// over the two neighbouring cells.
pub fn refine_periodic_max(values: &[f64], period: f64, f: impl Fn(f64) -> f64) -> f64 {
    let m = values.len();
    let mut best = values.iter().copied().fold(0.0, f64::max);
    if m < 3 {
        return best;
    }
    let h = period / m as f64;
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    for i in 0..m {
        let (l, r) = (values[(i + m - 1) % m], values[(i + 1) % m]);
        if values[i] < l || values[i] < r || values[i] <= 0.0 {
            continue;
        }
        let (mut a, mut b) = ((i as f64 - 1.0) * h, (i as f64 + 1.0) * h);
        let mut c = b - ratio * (b - a);
        let mut d = a + ratio * (b - a);
        let (mut fc, mut fd) = (f(c), f(d));
        while b - a > 1e-12 * h {
            if fc >= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - ratio * (b - a);
                fc = f(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + ratio * (b - a);
                fd = f(d);
            }
        }
        best = best.max(fc).max(fd);
    }
    best
}

/// A `2 pi`-periodic function of one variable, `g(x) = sum_k g_k e^{ikx}`,
/// with modes `-n/2 + 1 ..= n/2`. Coefficients need not be Hermitian.
#[derive(Debug, Clone, PartialEq)]
pub struct Periodic1d {
    coeffs: Vec<Complex64>,
}

impl Periodic1d {
    pub fn zeros(n: usize) -> Result<Self> {
        if n < 4 || n % 2 != 0 {
            return Err(Error::InvalidGrid(format!("1d grid needs an even n >= 4, got {n}")));
        }
        Ok(Self {
            coeffs: vec![Complex64::default(); n],
        })
    }

    pub fn from_modes(n: usize, modes: &[(i64, Complex64)]) -> Result<Self> {
        let mut g = Self::zeros(n)?;
        for &(k, c) in modes {
            let idx = g.index(k).ok_or_else(|| {
                Error::InvalidParameter(format!("mode {k} not representable with n = {n}"))
            })?;
            g.coeffs[idx] += c;
        }
        Ok(g)
    }

    /// Real mean-zero trigonometric polynomial with modes `1..=band`, drawn
    /// from the same stream for every `n`.
    pub fn random_real(n: usize, spec: &EnsembleSpec, index: usize) -> Result<Self> {
        if spec.band_limit < 1 || 2 * spec.band_limit >= n as i64 {
            return Err(Error::InvalidParameter(format!(
                "band limit {} does not fit n = {n}",
                spec.band_limit
            )));
        }
        let mut rng = spec.rng(index);
        let mut g = Self::zeros(n)?;
        for k in 1..=spec.band_limit {
            let a = (1.0 + k as f64).powf(-spec.amplitude_decay);
            let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * a;
            let i = g.index(k).expect("in band");
            let j = g.index(-k).expect("in band");
            g.coeffs[i] = c;
            g.coeffs[j] = c.conj();
        }
        Ok(g)
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    fn index(&self, k: i64) -> Option<usize> {
        let n = self.coeffs.len() as i64;
        if k > n / 2 || k <= -n / 2 {
            return None;
        }
        Some(k.rem_euclid(n) as usize)
    }

    fn mode(&self, i: usize) -> i64 {
        let n = self.coeffs.len();
        if i <= n / 2 {
            i as i64
        } else {
            i as i64 - n as i64
        }
    }

    /// `(k, g_k)` for every stored mode.
    pub fn modes(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.coeffs.iter().enumerate().map(|(i, &c)| (self.mode(i), c))
    }

    pub fn coeff(&self, k: i64) -> Complex64 {
        self.index(k).map(|i| self.coeffs[i]).unwrap_or_default()
    }

    /// Same function stored with `n` modes (zero-padded or truncated).
    pub fn resized(&self, n: usize) -> Result<Self> {
        let mut g = Self::zeros(n)?;
        for (k, c) in self.modes() {
            if let Some(i) = g.index(k) {
                g.coeffs[i] += c;
            }
        }
        Ok(g)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    /// Values on an `oversample * n` point grid.
    pub fn samples(&self, oversample: usize) -> Vec<Complex64> {
        let m = self.coeffs.len() * oversample;
        let mut data = vec![Complex64::default(); m];
        for (k, c) in self.modes() {
            data[k.rem_euclid(m as i64) as usize] += c;
        }
        fft::inverse(&mut data, &[m]);
        data
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        self.modes()
            .filter(|(_, c)| *c != Complex64::default())
            .map(|(k, c)| c * Complex64::from_polar(1.0, k as f64 * x))
            .sum()
    }

    /// `max |g|`: grid maximum on the `SUP_OVERSAMPLE`-times refined grid,
    /// polished by a local search around every discrete peak.
    pub fn sup_norm(&self) -> f64 {
        let values: Vec<f64> = self.samples(SUP_OVERSAMPLE).iter().map(|v| v.norm()).collect();
        refine_periodic_max(&values, 2.0 * PI, |x| self.eval(x).norm())
    }

    pub fn l2_norm(&self) -> f64 {
        (2.0 * PI * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt()
    }

    /// `||d^s g||_2`.
    pub fn seminorm(&self, s: f64) -> f64 {
        let sum: f64 = self
            .modes()
            .map(|(k, c)| ops::vertical_weight(k as f64, s) * c.norm_sqr())
            .sum();
        (2.0 * PI * sum).sqrt()
    }

    /// `(||g||^2 + ||d^s g||^2)^(1/2)`.
    pub fn hs_norm(&self, s: f64) -> f64 {
        (self.l2_norm().powi(2) + self.seminorm(s).powi(2)).sqrt()
    }

    /// `sum_k |g_k|`, the first bound in the wavenumber-split argument.
    pub fn coefficient_sum(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).sum()
    }
}

/// `sum_{k >= q} k^(-p)` for `p > 1`, `q >= 1` (Hurwitz zeta), by direct
/// summation followed by an Euler-Maclaurin tail.
pub fn hurwitz_zeta(p: f64, q: u64) -> f64 {
    assert!(p > 1.0 && q >= 1);
    let cut = q + 64;
    let head: f64 = (q..cut).map(|k| (k as f64).powf(-p)).sum();
    let m = cut as f64;
    let tail = m.powf(1.0 - p) / (p - 1.0) + 0.5 * m.powf(-p) + p * m.powf(-p - 1.0) / 12.0
        - p * (p + 1.0) * (p + 2.0) * m.powf(-p - 3.0) / 720.0;
    head + tail
}

/// Every quantity of the wavenumber-split Agmon argument for one function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AgmonReport {
    pub s: f64,
    pub sup_norm: f64,
    pub l2_norm: f64,
    pub hs_norm: f64,
    /// `||g||_inf / (||g||_2^(1 - 1/2s) ||g||_Hs^(1/2s))`
    pub ratio: f64,
    /// Balancing split `(||g||_Hs / ||g||_2)^(1/s)`.
    pub kappa: f64,
    /// `#{0 < |k| <= kappa}`
    pub low_count: f64,
    /// `sum_{|k| > kappa} |k|^(-2s)`
    pub high_tail: f64,
    /// `sum_k |g_k|`
    pub coefficient_sum: f64,
    /// Split bound on the coefficient partial sums (before bounding by norms).
    pub split_bound_partial: f64,
    /// `sqrt(low_count/2pi) ||g||_2 + sqrt(high_tail/2pi) ||g||_Hs`: the split
    /// bound in norm form with the explicit counting constants.
    pub split_bound: f64,
}

impl AgmonReport {
    pub fn bound_holds(&self) -> bool {
        self.sup_norm <= self.split_bound * (1.0 + 1e-12)
            && self.sup_norm <= self.split_bound_partial * (1.0 + 1e-12)
    }
}

pub fn agmon_ratio(g: &Periodic1d, s: f64) -> Result<AgmonReport> {
    if !(s > 0.5) {
        return Err(Error::InvalidParameter(format!(
            "Agmon exponent needs s > 1/2 (sum |k|^(-2s) diverges otherwise), got {s}"
        )));
    }
    let l2 = g.l2_norm();
    if l2 == 0.0 {
        return Err(Error::Degenerate("zero function".into()));
    }
    if g.coeff(0).norm() > 1e-14 * l2 {
        return Err(Error::InvalidParameter("function must have zero mean".into()));
    }
    let hs = g.hs_norm(s);
    let sup = g.sup_norm();
    let kappa = (hs / l2).powf(1.0 / s);
    let kfloor = kappa.floor() as u64;
    let low_count = 2.0 * kfloor as f64;
    let high_tail = 2.0 * hurwitz_zeta(2.0 * s, kfloor + 1);
    let (mut low_mass, mut high_mass) = (0.0, 0.0);
    for (k, c) in g.modes() {
        if k == 0 {
            continue;
        }
        if (k.unsigned_abs() as f64) <= kappa {
            low_mass += c.norm_sqr();
        } else {
            high_mass += (k.unsigned_abs() as f64).powf(2.0 * s) * c.norm_sqr();
        }
    }
    let two_pi = 2.0 * PI;
    Ok(AgmonReport {
        s,
        sup_norm: sup,
        l2_norm: l2,
        hs_norm: hs,
        ratio: sup / (l2.powf(1.0 - 1.0 / (2.0 * s)) * hs.powf(1.0 / (2.0 * s))),
        kappa,
        low_count,
        high_tail,
        coefficient_sum: g.coefficient_sum(),
        split_bound_partial: (low_mass * low_count).sqrt() + (high_mass * high_tail).sqrt(),
        split_bound: (low_count / two_pi).sqrt() * l2 + (high_tail / two_pi).sqrt() * hs,
    })
}

fn check_order(s: f64) -> Result<()> {
    if !(s > 0.5 && s <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "inequality exponent must satisfy 1/2 < s <= 1, got {s}"
        )));
    }
    Ok(())
}

/// `||u||_{L^2_v L^4_h}` by quadrature: `L^4` over each horizontal plane of a
/// `QUAD_OVERSAMPLE`-refined grid, then `L^2` in `x3`.
pub fn mixed_l2v_l4h(u: &VectorField) -> Result<f64> {
    let fine = u.grid().refined(QUAD_OVERSAMPLE);
    let phys = ops::resample_vector(u, fine)?.to_physical();
    let [n1, n2, n3] = fine.shape();
    let cell_h = fine.horizontal_area() / (n1 * n2) as f64;
    let mut plane = vec![0.0; n3];
    for idx in 0..fine.len() {
        let m2 = phys[0][idx].powi(2) + phys[1][idx].powi(2) + phys[2][idx].powi(2);
        plane[idx % n3] += m2 * m2;
    }
    let dz = fine.lengths()[2] / n3 as f64;
    let s: f64 = plane.iter().map(|p| (p * cell_h).sqrt() * dz).sum();
    Ok(s.sqrt())
}

/// `sup_{x3} ||u(., ., x3)||_{L^2_h}`: plane energies by horizontal Parseval,
/// evaluated on a `SUP_OVERSAMPLE`-refined vertical grid.
pub fn mixed_linfv_l2h(u: &VectorField) -> Result<f64> {
    let g = *u.grid();
    let s = g.shape();
    let fine = Grid::with_lengths([s[0], s[1], s[2] * SUP_OVERSAMPLE], g.lengths())?;
    let n3 = fine.shape()[2];
    let mut plane = vec![0.0; n3];
    for c in u.components() {
        let mut data = ops::resample(c, fine)?.into_coeffs();
        fft::transform_axis(&mut data, &fine.shape(), 2, fft::Direction::Inverse);
        for (idx, v) in data.iter().enumerate() {
            plane[idx % n3] += v.norm_sqr();
        }
    }
    let max = refine_periodic_max(&plane, g.lengths()[2], |x3| plane_sum_sq(u, x3));
    Ok((max * g.horizontal_area()).sqrt())
}

/// `sum over horizontal modes and components of |u(., ., x3)|^2` in
/// coefficient space.
fn plane_sum_sq(u: &VectorField, x3: f64) -> f64 {
    let g = u.grid();
    let [n1, n2, n3] = g.shape();
    let l3 = g.lengths()[2];
    let phase: Vec<Complex64> = (0..n3)
        .map(|i| Complex64::from_polar(1.0, 2.0 * PI * g.mode(2, i) as f64 * x3 / l3))
        .collect();
    let mut total = 0.0;
    for c in u.components() {
        let data = c.coeffs();
        for row in data.chunks_exact(n3).take(n1 * n2) {
            let v: Complex64 = row.iter().zip(&phase).map(|(a, p)| a * p).sum();
            total += v.norm_sqr();
        }
    }
    total
}

pub fn ladyzhenskaya_ratio(u: &VectorField) -> Result<f64> {
    let l2 = ops::vector_norm(u);
    let gh = ops::horizontal_gradient_norm(u);
    if l2 == 0.0 || gh <= 1e-14 * l2 {
        return Err(Error::Degenerate("field is constant in the horizontal variables".into()));
    }
    Ok(mixed_l2v_l4h(u)? / (l2 * gh).sqrt())
}

pub fn vertical_embedding_ratio(u: &VectorField, s: f64) -> Result<f64> {
    if !(s > 0.5) {
        return Err(Error::InvalidParameter(format!("embedding exponent needs s > 1/2, got {s}")));
    }
    let l2 = ops::vector_norm(u);
    let v = ops::vector_vertical_seminorm(u, s);
    if l2 == 0.0 || v <= 1e-14 * l2 {
        return Err(Error::Degenerate("field has no vertical variation".into()));
    }
    let e = 1.0 / (2.0 * s);
    Ok(mixed_linfv_l2h(u)? / (l2.powf(1.0 - e) * v.powf(e)))
}

/// `||f||_2^(1/2) ||grad f||_2^(1/2)`
fn ladyzhenskaya_factor(f: &VectorField) -> f64 {
    (ops::vector_norm(f) * ops::gradient_norm(f)).sqrt()
}

/// `||grad f||_2^(1 - 1/2s) ||d3^s grad f||_2^(1/2s)`
fn embedding_factor(f: &VectorField, s: f64) -> f64 {
    let e = 1.0 / (2.0 * s);
    ops::gradient_norm(f).powf(1.0 - e) * ops::vertical_gradient_seminorm(f, s).powf(e)
}

fn trilinear_inputs(u: &VectorField, v: &VectorField, w: &VectorField, s: f64) -> Result<()> {
    check_order(s)?;
    for (name, f) in [("u", u), ("v", v), ("w", w)] {
        let d = f.divergence_defect();
        if d > 1e-10 {
            return Err(Error::InvalidParameter(format!(
                "{name} must be divergence-free (defect {d:e})"
            )));
        }
    }
    Ok(())
}

fn ratio_or_degenerate(num: f64, den: f64) -> Result<f64> {
    if !(den > 0.0) || !den.is_finite() {
        if num == 0.0 {
            return Ok(0.0);
        }
        return Err(Error::Degenerate("right-hand side vanishes".into()));
    }
    Ok(num / den)
}

/// `|((u.grad)v, w)| / (L(u) E(v) L(w))` with `L` the Ladyzhenskaya factor and
/// `E` the vertical-embedding factor of the gradient.
pub fn trilinear_ratio_i(u: &VectorField, v: &VectorField, w: &VectorField, s: f64) -> Result<f64> {
    trilinear_inputs(u, v, w, s)?;
    let t = ops::trilinear(u, v, w)?.abs();
    ratio_or_degenerate(t, ladyzhenskaya_factor(u) * embedding_factor(v, s) * ladyzhenskaya_factor(w))
}

/// Same trilinear form with the embedding factor on `w` instead of `v`.
pub fn trilinear_ratio_ii(u: &VectorField, v: &VectorField, w: &VectorField, s: f64) -> Result<f64> {
    trilinear_inputs(u, v, w, s)?;
    let t = ops::trilinear(u, v, w)?.abs();
    ratio_or_degenerate(t, ladyzhenskaya_factor(u) * ladyzhenskaya_factor(v) * embedding_factor(w, s))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Lemma {
    Agmon,
    Ladyzhenskaya,
    VerticalEmbedding,
    TrilinearI,
    TrilinearII,
}

impl Lemma {
    pub fn name(&self) -> &'static str {
        match self {
            Lemma::Agmon => "agmon",
            Lemma::Ladyzhenskaya => "ladyzhenskaya",
            Lemma::VerticalEmbedding => "vertical_embedding",
            Lemma::TrilinearI => "trilinear_i",
            Lemma::TrilinearII => "trilinear_ii",
        }
    }

    pub fn all() -> [Lemma; 5] {
        [
            Lemma::Agmon,
            Lemma::Ladyzhenskaya,
            Lemma::VerticalEmbedding,
            Lemma::TrilinearI,
            Lemma::TrilinearII,
        ]
    }

    /// True if the ratio depends on an exponent `s`.
    pub fn uses_exponent(&self) -> bool {
        !matches!(self, Lemma::Ladyzhenskaya)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleId {
    pub seed: u64,
    pub index: usize,
}

/// Reduction of one ratio over an ensemble.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioReport {
    pub lemma: Lemma,
    pub s: Option<f64>,
    pub count: usize,
    pub max_ratio: f64,
    pub mean_ratio: f64,
    pub worst_case: SampleId,
    /// Grid the samples were evaluated on (1d benches use `n` on every axis).
    pub resolution: [usize; 3],
    /// Every per-sample ratio, in sample order.
    #[serde(skip)]
    pub ratios: Vec<f64>,
}

impl RatioReport {
    fn from_ratios(lemma: Lemma, s: Option<f64>, seed: u64, resolution: [usize; 3], ratios: Vec<f64>) -> Self {
        let (mut max, mut arg) = (f64::NEG_INFINITY, 0);
        for (i, &r) in ratios.iter().enumerate() {
            if r > max {
                max = r;
                arg = i;
            }
        }
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        Self {
            lemma,
            s,
            count: ratios.len(),
            max_ratio: max,
            mean_ratio: mean,
            worst_case: SampleId { seed, index: arg },
            resolution,
            ratios,
        }
    }

    /// Running maximum over the first `1..=count` samples.
    pub fn running_max(&self) -> Vec<f64> {
        self.ratios
            .iter()
            .scan(f64::NEG_INFINITY, |m, &r| {
                *m = m.max(r);
                Some(*m)
            })
            .collect()
    }

    /// `|max_ratio / other.max_ratio - 1|`
    pub fn drift(&self, other: &RatioReport) -> f64 {
        (self.max_ratio / other.max_ratio - 1.0).abs()
    }

    pub fn is_finite(&self) -> bool {
        self.max_ratio.is_finite() && self.mean_ratio.is_finite()
    }
}

/// Agmon ensemble: ratios plus split-bound violations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgmonSweep {
    pub report: RatioReport,
    /// Samples with `||g||_inf` above either split bound.
    pub bound_violations: usize,
    /// `max ||g||_inf / split_bound` over the ensemble.
    pub max_bound_utilization: f64,
}

pub fn agmon_sweep(n: usize, spec: &EnsembleSpec, s: f64) -> Result<AgmonSweep> {
    if spec.count < 1 {
        return Err(Error::InvalidParameter("ensemble count must be >= 1".into()));
    }
    let reports: Vec<AgmonReport> = (0..spec.count)
        .into_par_iter()
        .map(|i| agmon_ratio(&Periodic1d::random_real(n, spec, i)?, s))
        .collect::<Result<_>>()?;
    let violations = reports.iter().filter(|r| !r.bound_holds()).count();
    let util = reports
        .iter()
        .map(|r| r.sup_norm / r.split_bound)
        .fold(0.0, f64::max);
    Ok(AgmonSweep {
        report: RatioReport::from_ratios(
            Lemma::Agmon,
            Some(s),
            spec.seed,
            [n, 1, 1],
            reports.iter().map(|r| r.ratio).collect(),
        ),
        bound_violations: violations,
        max_bound_utilization: util,
    })
}

/// Sample `i` of a 3d ensemble for the given lemma. Trilinear benches use
/// three consecutive samples per triple.
fn sample(grid: Grid, spec: &EnsembleSpec, lemma: Lemma, i: usize) -> Result<VectorField> {
    let mean = match lemma {
        Lemma::Ladyzhenskaya => MeanConstraint::Horizontal,
        _ => MeanConstraint::Vertical,
    };
    random_vector(grid, spec, i, true, mean)
}

/// Ensemble sweep of one of the 3d ratios. `s` is ignored for Ladyzhenskaya.
pub fn ratio_sweep(grid: Grid, spec: &EnsembleSpec, lemma: Lemma, s: f64) -> Result<RatioReport> {
    spec.validate(&grid)?;
    let eval = |i: usize| -> Result<f64> {
        match lemma {
            Lemma::Agmon => Err(Error::InvalidParameter("use agmon_sweep for the 1d bench".into())),
            Lemma::Ladyzhenskaya => ladyzhenskaya_ratio(&sample(grid, spec, lemma, i)?),
            Lemma::VerticalEmbedding => vertical_embedding_ratio(&sample(grid, spec, lemma, i)?, s),
            Lemma::TrilinearI | Lemma::TrilinearII => {
                let u = sample(grid, spec, lemma, 3 * i)?;
                let v = sample(grid, spec, lemma, 3 * i + 1)?;
                let w = sample(grid, spec, lemma, 3 * i + 2)?;
                if lemma == Lemma::TrilinearI {
                    trilinear_ratio_i(&u, &v, &w, s)
                } else {
                    trilinear_ratio_ii(&u, &v, &w, s)
                }
            }
        }
    };
    let ratios: Vec<f64> = (0..spec.count).into_par_iter().map(eval).collect::<Result<_>>()?;
    let s = lemma.uses_exponent().then_some(s);
    Ok(RatioReport::from_ratios(lemma, s, spec.seed, grid.shape(), ratios))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sup_norm_finds_off_grid_peak() {
        // |1 + e^{i(x - x0)}| peaks at x0 = 0.3, between grid points
        let x0: f64 = 0.3;
        let g = Periodic1d::from_modes(8, &[(0, Complex64::new(1.0, 0.0)), (1, Complex64::from_polar(1.0, -x0))]).unwrap();
        assert!((g.sup_norm() - 2.0).abs() < 1e-12);
        let grid_max = g.samples(SUP_OVERSAMPLE).iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(grid_max < 2.0 - 1e-4);
    }

    #[test]
    fn zeta_matches_direct_sum() {
        // sum_{k>=1} k^-2 = pi^2/6
        assert!((hurwitz_zeta(2.0, 1) - PI * PI / 6.0).abs() < 1e-12);
        let direct: f64 = (5..2_000_000u64).map(|k| (k as f64).powf(-1.5)).sum::<f64>()
            + 2.0 / (2_000_000f64).sqrt();
        assert!((hurwitz_zeta(1.5, 5) - direct).abs() < 1e-8);
    }

    #[test]
    fn agmon_single_mode_by_direct_norms() {
        let g = Periodic1d::from_modes(16, &[(1, Complex64::new(1.0, 0.0))]).unwrap();
        let r = agmon_ratio(&g, 1.0).unwrap();
        // oracle: |e^{ix}| = 1, ||g||_2 = sqrt(2 pi), ||g||_H1 = sqrt(2) sqrt(2 pi)
        let l2 = (2.0 * PI).sqrt();
        let hs = 2f64.sqrt() * l2;
        let expect = 1.0 / (l2.powf(0.5) * hs.powf(0.5));
        assert!((r.ratio - expect).abs() < 1e-14);
        assert!((r.sup_norm - 1.0).abs() < 1e-14);
        assert!(r.bound_holds());
    }

    #[test]
    fn agmon_rejections_and_homogeneity() {
        let g = Periodic1d::from_modes(16, &[(2, Complex64::new(0.3, 0.1)), (-2, Complex64::new(0.3, -0.1))]).unwrap();
        assert!(agmon_ratio(&g, 0.5).is_err());
        assert!(agmon_ratio(&Periodic1d::zeros(16).unwrap(), 1.0).is_err());
        let with_mean = Periodic1d::from_modes(16, &[(0, Complex64::new(1.0, 0.0)), (1, Complex64::new(1.0, 0.0))]).unwrap();
        assert!(agmon_ratio(&with_mean, 1.0).is_err());
        let r = agmon_ratio(&g, 0.75).unwrap().ratio;
        for lambda in [1e-3, 7.0, 1e3] {
            let rl = agmon_ratio(&g.scaled(lambda), 0.75).unwrap().ratio;
            assert!((rl - r).abs() <= 1e-10 * r);
        }
    }

    #[test]
    fn ladyzhenskaya_single_mode_quadrature() {
        let g = Grid::cubic(8).unwrap();
        let u = VectorField::from_fn(g, |x, _, _| [0.0, x.sin(), 0.0]);
        // plane integral of sin^4 is 2pi * 3pi/4, constant in x3
        let mixed = (2.0 * PI * (2.0 * PI * 3.0 * PI / 4.0).sqrt()).sqrt();
        assert!((mixed_l2v_l4h(&u).unwrap() - mixed).abs() < 1e-12);
        let l2 = (4.0 * PI.powi(3)).sqrt();
        let r = ladyzhenskaya_ratio(&u).unwrap();
        assert!((r - mixed / l2).abs() < 1e-12);
        let flat = VectorField::from_fn(g, |_, _, z| [z.cos(), 0.0, 0.0]);
        assert!(ladyzhenskaya_ratio(&flat).is_err());
    }

    #[test]
    fn embedding_separable_reduction() {
        let g = Grid::cubic(8).unwrap();
        let u = VectorField::from_fn(g, |x, y, z| [0.0, 0.0, z.cos() * (x.sin() + 0.5 * (2.0 * y).cos())]);
        let gz = Periodic1d::from_modes(8, &[(1, Complex64::new(0.5, 0.0)), (-1, Complex64::new(0.5, 0.0))]).unwrap();
        for s in [0.6, 1.0] {
            let e = 1.0 / (2.0 * s);
            let oracle = gz.sup_norm() / (gz.l2_norm().powf(1.0 - e) * gz.seminorm(s).powf(e));
            let r = vertical_embedding_ratio(&u, s).unwrap();
            assert!((r - oracle).abs() < 1e-12, "{r} vs {oracle}");
        }
        let flat = VectorField::from_fn(g, |x, _, _| [0.0, x.sin(), 0.0]);
        assert!(vertical_embedding_ratio(&flat, 1.0).is_err());
        assert!(vertical_embedding_ratio(&u, 0.5).is_err());
    }

    #[test]
    fn trilinear_orthogonal_modes() {
        let g = Grid::cubic(8).unwrap();
        let u = VectorField::from_fn(g, |x, _, z| [0.0, (x + z).sin(), 0.0]);
        let v = VectorField::from_fn(g, |_, y, z| [(y + 2.0 * z).cos(), 0.0, 0.0]);
        let w = VectorField::from_fn(g, |x, y, _| [0.0, 0.0, (x + y).cos()]);
        assert_eq!(trilinear_ratio_i(&u, &v, &w, 1.0).unwrap(), 0.0);
        assert_eq!(trilinear_ratio_ii(&u, &v, &w, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn trilinear_rejects_divergent_input() {
        let g = Grid::cubic(8).unwrap();
        let u = VectorField::from_fn(g, |x, _, _| [x.sin(), 0.0, 0.0]);
        let v = VectorField::from_fn(g, |_, _, z| [0.0, z.sin(), 0.0]);
        assert!(trilinear_ratio_i(&u, &v, &v, 1.0).is_err());
        assert!(trilinear_ratio_i(&v, &v, &v, 0.4).is_err());
    }

    #[test]
    fn running_max_is_monotone() {
        let spec = EnsembleSpec::new(40, 4, 3);
        let r = agmon_sweep(32, &spec, 0.75).unwrap().report;
        let m = r.running_max();
        assert!(m.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(*m.last().unwrap(), r.max_ratio);
        assert!(r.max_ratio >= r.mean_ratio && r.mean_ratio >= 0.0);
    }
}
