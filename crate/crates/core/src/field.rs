//! Spectral representation of real scalar and vector fields on the 3-torus.
//!
//! Coefficients are Fourier-series amplitudes: a field is
//! `f(x) = sum_k f_k exp(i k.x)`, so `cos(x3)` has amplitude `1/2` at
//! `k = (0, 0, +-1)` and `integral(f g) = volume * sum_k f_k conj(g_k)`.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft;
use crate::grid::Grid;

/// Imaginary residue above which an inverse transform is treated as corrupted.
pub const HERMITIAN_TOLERANCE: f64 = 1e-10;

/// Per-mode data handed to multiplier closures.
#[derive(Debug, Clone, Copy)]
pub struct Mode {
    pub index: usize,
    /// Signed mode numbers.
    pub m: [i64; 3],
    /// Physical wavenumbers (symmetric, Nyquist kept).
    pub k: [f64; 3],
    /// Derivative wavenumbers (zero at Nyquist).
    pub kd: [f64; 3],
}

impl Mode {
    pub fn k_squared(&self) -> f64 {
        self.kd.iter().map(|k| k * k).sum()
    }
}

/// Complex Fourier coefficients of a real scalar field.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    coeffs: Vec<Complex64>,
    vertical_mean_zero: bool,
}

impl SpectralField {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            coeffs: vec![Complex64::default(); grid.len()],
            vertical_mean_zero: false,
        }
    }

    pub fn from_coeffs(grid: Grid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                got: coeffs.len(),
            });
        }
        Ok(Self {
            grid,
            coeffs,
            vertical_mean_zero: false,
        })
    }

    /// Builds a field from `(mode, amplitude)` pairs; each pair also sets the
    /// conjugate partner so the field is real.
    pub fn from_modes(grid: Grid, modes: &[([i64; 3], Complex64)]) -> Result<Self> {
        let mut f = Self::zeros(grid);
        for &(m, c) in modes {
            f.add_mode_pair(m, c)?;
        }
        Ok(f)
    }

    /// Samples `func(x1, x2, x3)` on the grid and transforms.
    pub fn from_fn(grid: Grid, func: impl Fn(f64, f64, f64) -> f64) -> Self {
        let [n1, n2, n3] = grid.shape();
        let mut samples = Vec::with_capacity(grid.len());
        for i1 in 0..n1 {
            let x1 = grid.coordinate(0, i1);
            for i2 in 0..n2 {
                let x2 = grid.coordinate(1, i2);
                for i3 in 0..n3 {
                    samples.push(func(x1, x2, grid.coordinate(2, i3)));
                }
            }
        }
        Self::forward_transform(grid, &samples).expect("sample count matches grid")
    }

    /// Adds `c` at mode `m` and `conj(c)` at `-m`.
    pub fn add_mode_pair(&mut self, m: [i64; 3], c: Complex64) -> Result<()> {
        let idx = self.grid.flat_of_modes(m).ok_or_else(|| {
            Error::InvalidParameter(format!("mode {:?} is not representable on {}", m, self.grid))
        })?;
        let conj = self.grid.conjugate_flat(idx);
        if conj == idx {
            self.coeffs[idx] += Complex64::new(2.0 * c.re, 0.0);
        } else {
            self.coeffs[idx] += c;
            self.coeffs[conj] += c.conj();
        }
        Ok(())
    }

    pub fn forward_transform(grid: Grid, samples: &[f64]) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                got: samples.len(),
            });
        }
        let mut coeffs: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        fft::forward(&mut coeffs, &grid.shape());
        let mut f = Self::from_coeffs(grid, coeffs)?;
        // the Nyquist planes of a real signal are exactly self-conjugate; enforce it
        f.symmetrize();
        Ok(f)
    }

    /// Real samples on the grid. Fails if the coefficients are not Hermitian.
    pub fn inverse_transform(&self) -> Result<Vec<f64>> {
        let mut data = self.coeffs.clone();
        fft::inverse(&mut data, &self.grid.shape());
        let scale = data.iter().map(|c| c.re.abs()).fold(1.0_f64, f64::max);
        let residue = data.iter().map(|c| c.im.abs()).fold(0.0_f64, f64::max);
        if residue > HERMITIAN_TOLERANCE * scale {
            return Err(Error::BrokenHermitian { residue });
        }
        Ok(data.into_iter().map(|c| c.re).collect())
    }

    /// Inverse transform without the Hermitian check.
    pub(crate) fn to_physical(&self) -> Vec<f64> {
        let mut data = self.coeffs.clone();
        fft::inverse(&mut data, &self.grid.shape());
        data.into_iter().map(|c| c.re).collect()
    }

    /// Largest `|c(-k) - conj(c(k))|` over all modes.
    pub fn hermitian_residue(&self) -> f64 {
        (0..self.coeffs.len())
            .map(|i| (self.coeffs[self.grid.conjugate_flat(i)] - self.coeffs[i].conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Replaces every coefficient pair by its Hermitian average.
    pub fn symmetrize(&mut self) {
        let old = self.coeffs.clone();
        for (i, c) in self.coeffs.iter_mut().enumerate() {
            let partner = old[self.grid.conjugate_flat(i)];
            *c = 0.5 * (old[i] + partner.conj());
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        self.vertical_mean_zero = false;
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Amplitude at mode `m`, zero if `m` is not representable.
    pub fn coeff(&self, m: [i64; 3]) -> Complex64 {
        self.grid
            .flat_of_modes(m)
            .map(|i| self.coeffs[i])
            .unwrap_or_default()
    }

    pub fn mode(&self, index: usize) -> Mode {
        let g = &self.grid;
        let i = g.unflat(index);
        Mode {
            index,
            m: [g.mode(0, i[0]), g.mode(1, i[1]), g.mode(2, i[2])],
            k: [g.wavenumber(0, i[0]), g.wavenumber(1, i[1]), g.wavenumber(2, i[2])],
            kd: [
                g.deriv_wavenumber(0, i[0]),
                g.deriv_wavenumber(1, i[1]),
                g.deriv_wavenumber(2, i[2]),
            ],
        }
    }

    /// Applies a diagonal multiplier. The vertical-mean flag is preserved.
    pub fn map_modes(&self, mut symbol: impl FnMut(&Mode, Complex64) -> Complex64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| symbol(&self.mode(i), c))
            .collect();
        Self {
            grid: self.grid,
            coeffs,
            vertical_mean_zero: self.vertical_mean_zero,
        }
    }

    /// Multiplies every coefficient by a real function of the vertical wavenumber.
    pub fn scale_vertical(&self, symbol: impl Fn(f64) -> f64) -> Self {
        let g = self.grid;
        let n3 = g.shape()[2];
        let table: Vec<f64> = (0..n3).map(|i| symbol(g.wavenumber(2, i))).collect();
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| c * table[i % n3])
            .collect();
        Self {
            grid: g,
            coeffs,
            vertical_mean_zero: self.vertical_mean_zero,
        }
    }

    /// `sum_k w(k) |f_k|^2`.
    pub fn weighted_mass(&self, mut weight: impl FnMut(&Mode) -> f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let n = c.norm_sqr();
                if n == 0.0 {
                    0.0
                } else {
                    weight(&self.mode(i)) * n
                }
            })
            .sum()
    }

    /// Zeroes the `k3 = 0` plane and marks the field as vertical-mean-free.
    pub fn remove_vertical_mean(&self) -> Self {
        let n3 = self.grid.shape()[2];
        let mut out = self.clone();
        for (i, c) in out.coeffs.iter_mut().enumerate() {
            if i % n3 == 0 {
                *c = Complex64::default();
            }
        }
        out.vertical_mean_zero = true;
        out
    }

    pub fn is_vertical_mean_zero(&self) -> bool {
        self.vertical_mean_zero
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|c| *c *= s);
        out
    }

    pub(crate) fn zip_with(&self, other: &Self, op: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        assert_eq!(self.grid, other.grid, "operands live on different grids");
        Self {
            grid: self.grid,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(&a, &b)| op(a, b))
                .collect(),
            vertical_mean_zero: self.vertical_mean_zero && other.vertical_mean_zero,
        }
    }

    /// `self + s * other`
    pub fn axpy(&self, s: f64, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b * s)
    }
}

impl Add for &SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: &SpectralField) -> SpectralField {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: &SpectralField) -> SpectralField {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Mul<f64> for &SpectralField {
    type Output = SpectralField;
    fn mul(self, rhs: f64) -> SpectralField {
        self.scaled(rhs)
    }
}

impl Neg for &SpectralField {
    type Output = SpectralField;
    fn neg(self) -> SpectralField {
        self.scaled(-1.0)
    }
}

/// Three spectral components on a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    comps: [SpectralField; 3],
    divergence_free: bool,
}

impl VectorField {
    pub fn new(u1: SpectralField, u2: SpectralField, u3: SpectralField) -> Result<Self> {
        if u1.grid != u2.grid || u1.grid != u3.grid {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            comps: [u1, u2, u3],
            divergence_free: false,
        })
    }

    pub fn zeros(grid: Grid) -> Self {
        let z = SpectralField::zeros(grid);
        Self {
            comps: [z.clone(), z.clone(), z],
            divergence_free: true,
        }
    }

    pub fn from_fn(grid: Grid, func: impl Fn(f64, f64, f64) -> [f64; 3]) -> Self {
        let c = |j: usize| SpectralField::from_fn(grid, |x, y, z| func(x, y, z)[j]);
        Self {
            comps: [c(0), c(1), c(2)],
            divergence_free: false,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.comps[0].grid
    }

    pub fn component(&self, j: usize) -> &SpectralField {
        &self.comps[j]
    }

    pub fn components(&self) -> &[SpectralField; 3] {
        &self.comps
    }

    pub fn into_components(self) -> [SpectralField; 3] {
        self.comps
    }

    /// Flag set by the Leray projection and preserved by diagonal multipliers
    /// and linear combinations of divergence-free fields.
    pub fn is_divergence_free(&self) -> bool {
        self.divergence_free
    }

    /// Sets the flag after checking `|k.u_k| <= tol |u_k|` on every mode.
    pub fn mark_divergence_free(mut self, tol: f64) -> Result<Self> {
        let defect = self.divergence_defect();
        if defect > tol {
            return Err(Error::InvalidParameter(format!(
                "field is not divergence-free: per-mode defect {defect:e} > {tol:e}"
            )));
        }
        self.divergence_free = true;
        Ok(self)
    }

    pub(crate) fn with_flag(mut self, divergence_free: bool) -> Self {
        self.divergence_free = divergence_free;
        self
    }

    /// Applies the same multiplier to all three components.
    pub fn map_components(&self, f: impl Fn(&SpectralField) -> SpectralField) -> Self {
        Self {
            comps: [f(&self.comps[0]), f(&self.comps[1]), f(&self.comps[2])],
            divergence_free: self.divergence_free,
        }
    }

    /// Multiplies every component by a real function of the vertical wavenumber.
    pub fn scale_vertical(&self, symbol: impl Fn(f64) -> f64 + Copy) -> Self {
        self.map_components(|c| c.scale_vertical(symbol))
    }

    /// Largest per-mode ratio `|k.u_k| / |u_k|`, ignoring modes whose amplitude
    /// is below `1e-14` of the largest one.
    pub fn divergence_defect(&self) -> f64 {
        let floor = 1e-14
            * self
                .comps
                .iter()
                .map(|c| c.max_abs_coeff())
                .fold(0.0, f64::max);
        let u = &self.comps;
        let mut worst = 0.0_f64;
        for i in 0..u[0].coeffs.len() {
            let v = [u[0].coeffs[i], u[1].coeffs[i], u[2].coeffs[i]];
            let amp = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            if amp <= floor || amp == 0.0 {
                continue;
            }
            let kd = u[0].mode(i).kd;
            let div = v[0] * kd[0] + v[1] * kd[1] + v[2] * kd[2];
            worst = worst.max(div.norm() / amp);
        }
        worst
    }

    /// Spectral divergence `i k . u_k`.
    pub fn divergence(&self) -> SpectralField {
        let u = &self.comps;
        let mut out = SpectralField::zeros(*self.grid());
        for (i, c) in out.coeffs.iter_mut().enumerate() {
            let kd = u[0].mode(i).kd;
            let s = u[0].coeffs[i] * kd[0] + u[1].coeffs[i] * kd[1] + u[2].coeffs[i] * kd[2];
            *c = Complex64::new(-s.im, s.re);
        }
        out
    }

    pub fn remove_vertical_mean(&self) -> Self {
        self.map_components(|c| c.remove_vertical_mean())
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.map_components(|c| c.scaled(s))
    }

    /// `self + s * other`
    pub fn axpy(&self, s: f64, other: &Self) -> Self {
        Self {
            comps: [
                self.comps[0].axpy(s, &other.comps[0]),
                self.comps[1].axpy(s, &other.comps[1]),
                self.comps[2].axpy(s, &other.comps[2]),
            ],
            divergence_free: self.divergence_free && other.divergence_free,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().all(|c| c.is_finite())
    }

    pub fn hermitian_residue(&self) -> f64 {
        self.comps
            .iter()
            .map(|c| c.hermitian_residue())
            .fold(0.0, f64::max)
    }

    pub(crate) fn to_physical(&self) -> [Vec<f64>; 3] {
        [
            self.comps[0].to_physical(),
            self.comps[1].to_physical(),
            self.comps[2].to_physical(),
        ]
    }
}

impl Add for &VectorField {
    type Output = VectorField;
    fn add(self, rhs: &VectorField) -> VectorField {
        self.axpy(1.0, rhs)
    }
}

impl Sub for &VectorField {
    type Output = VectorField;
    fn sub(self, rhs: &VectorField) -> VectorField {
        self.axpy(-1.0, rhs)
    }
}

impl Mul<f64> for &VectorField {
    type Output = VectorField;
    fn mul(self, rhs: f64) -> VectorField {
        self.scaled(rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid() -> Grid {
        Grid::new(8, 6, 10).unwrap()
    }

    #[test]
    fn constant_field_has_only_mean() {
        let g = grid();
        let f = SpectralField::forward_transform(g, &vec![1.0; g.len()]).unwrap();
        assert!((f.coeff([0, 0, 0]) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        let others: f64 = f.coeffs().iter().skip(1).map(|c| c.norm()).sum();
        assert!(others < 1e-14);
    }

    #[test]
    fn cosine_has_half_amplitudes() {
        let g = grid();
        let f = SpectralField::from_fn(g, |_, _, z| z.cos());
        assert!((f.coeff([0, 0, 1]) - Complex64::new(0.5, 0.0)).norm() < 1e-14);
        assert!((f.coeff([0, 0, -1]) - Complex64::new(0.5, 0.0)).norm() < 1e-14);
        let mass: f64 = f.coeffs().iter().map(|c| c.norm_sqr()).sum();
        assert!((mass - 0.5).abs() < 1e-14);
    }

    #[test]
    fn delta_coefficient_is_constant() {
        let g = grid();
        let f = SpectralField::from_modes(g, &[([0, 0, 0], Complex64::new(1.5, 0.0))]).unwrap();
        // the mean is self-conjugate and stored as 2 Re(c) by add_mode_pair
        let x = f.inverse_transform().unwrap();
        assert!(x.iter().all(|v| (v - 3.0).abs() < 1e-14));
        let c = SpectralField::from_modes(g, &[([0, 0, 1], Complex64::new(0.5, 0.0))]).unwrap();
        let y = c.inverse_transform().unwrap();
        for i3 in 0..10 {
            let z = g.coordinate(2, i3);
            assert!((y[g.flat([1, 2, i3])] - z.cos()).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_wrong_dimensions() {
        let g = grid();
        assert!(matches!(
            SpectralField::forward_transform(g, &[0.0; 7]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn broken_symmetry_is_detected() {
        let g = grid();
        let mut f = SpectralField::zeros(g);
        let idx = g.flat_of_modes([1, 0, 0]).unwrap();
        f.coeffs_mut()[idx] = Complex64::new(1.0, 0.0);
        assert!(matches!(f.inverse_transform(), Err(Error::BrokenHermitian { .. })));
    }

    #[test]
    fn random_round_trips() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let f = SpectralField::forward_transform(g, &x).unwrap();
        assert!(f.hermitian_residue() < 1e-15);
        let y = f.inverse_transform().unwrap();
        let err = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let scale = x.iter().map(|a| a.abs()).fold(0.0, f64::max);
        assert!(err <= 1e-12 * scale, "round trip error {err}");

        // forward after inverse on random Hermitian coefficients
        let mut h = SpectralField::zeros(g);
        for _ in 0..40 {
            let m = [rng.gen_range(-3..=4), rng.gen_range(-2..=3), rng.gen_range(-4..=5)];
            h.add_mode_pair(m, Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .unwrap();
        }
        let back = SpectralField::forward_transform(g, &h.inverse_transform().unwrap()).unwrap();
        let err = h
            .coeffs()
            .iter()
            .zip(back.coeffs())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err <= 1e-12 * h.max_abs_coeff(), "coefficient round trip error {err}");
    }

    #[test]
    fn vertical_mean_removal_sets_flag() {
        let g = grid();
        let f = SpectralField::from_fn(g, |x, _, z| x.sin() + z.cos());
        assert!(!f.is_vertical_mean_zero());
        let h = f.remove_vertical_mean();
        assert!(h.is_vertical_mean_zero());
        assert!(h.coeff([1, 0, 0]).norm() < 1e-15);
        assert!((h.coeff([0, 0, 1]).re - 0.5).abs() < 1e-14);
        assert!(h.scale_vertical(|k| 1.0 + k * k).is_vertical_mean_zero());
    }
}
