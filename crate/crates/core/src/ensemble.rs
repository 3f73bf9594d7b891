//! Seeded random band-limited fields.
//!
//! Coefficients are drawn per wavevector in a fixed canonical order over the
//! band, so the same `(seed, index)` yields the same function on every grid
//! that resolves the band. Resolution studies rely on this.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{SpectralField, VectorField};
use crate::grid::Grid;
use crate::ops;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub count: usize,
    /// Largest `|m|` drawn on each axis.
    pub band_limit: i64,
    pub seed: u64,
    /// Coefficients scale like `(1 + |m|)^(-amplitude_decay)`.
    pub amplitude_decay: f64,
}

impl EnsembleSpec {
    pub fn new(count: usize, band_limit: i64, seed: u64) -> Self {
        Self {
            count,
            band_limit,
            seed,
            amplitude_decay: 1.0,
        }
    }

    pub fn with_decay(mut self, decay: f64) -> Self {
        self.amplitude_decay = decay;
        self
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        if self.count < 1 {
            return Err(Error::InvalidParameter("ensemble count must be >= 1".into()));
        }
        if self.band_limit < 1 || self.band_limit >= grid.nyquist_mode() {
            return Err(Error::InvalidParameter(format!(
                "band limit {} must lie in [1, {}) on grid {}",
                self.band_limit,
                grid.nyquist_mode(),
                grid
            )));
        }
        if !(self.amplitude_decay >= 0.0 && self.amplitude_decay.is_finite()) {
            return Err(Error::InvalidParameter("amplitude decay must be >= 0".into()));
        }
        Ok(())
    }

    pub(crate) fn rng(&self, index: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index as u64);
        rng
    }
}

/// Sectors of wavevector space left empty by the generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MeanConstraint {
    /// Only the mean mode is excluded.
    None,
    /// No `k3 = 0` modes: zero vertical average at every horizontal point.
    Vertical,
    /// No `k1 = k2 = 0` modes: zero horizontal average on every plane.
    Horizontal,
}

impl MeanConstraint {
    fn admits(self, m: [i64; 3]) -> bool {
        if m == [0, 0, 0] {
            return false;
        }
        match self {
            MeanConstraint::None => true,
            MeanConstraint::Vertical => m[2] != 0,
            MeanConstraint::Horizontal => m[0] != 0 || m[1] != 0,
        }
    }
}

/// First nonzero entry positive: one representative of each `+-m` pair.
fn is_positive_half(m: [i64; 3]) -> bool {
    m.iter().find(|&&x| x != 0).is_some_and(|&x| x > 0)
}

/// Visits the positive half of the band in canonical order.
pub(crate) fn band_modes(band: i64) -> impl Iterator<Item = [i64; 3]> {
    (-band..=band).flat_map(move |a| {
        (-band..=band).flat_map(move |b| (-band..=band).map(move |c| [a, b, c]))
    })
    .filter(|&m| is_positive_half(m))
}

fn amplitude(m: [i64; 3], decay: f64) -> f64 {
    let r = ((m[0] * m[0] + m[1] * m[1] + m[2] * m[2]) as f64).sqrt();
    (1.0 + r).powf(-decay)
}

fn draw(rng: &mut ChaCha8Rng, scale: f64) -> Complex64 {
    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * scale
}

pub fn random_scalar(grid: Grid, spec: &EnsembleSpec, index: usize, mean: MeanConstraint) -> Result<SpectralField> {
    spec.validate(&grid)?;
    let mut rng = spec.rng(index);
    let mut f = SpectralField::zeros(grid);
    for m in band_modes(spec.band_limit) {
        let c = draw(&mut rng, amplitude(m, spec.amplitude_decay));
        if mean.admits(m) {
            f.add_mode_pair(m, c)?;
        }
    }
    Ok(if mean == MeanConstraint::Vertical {
        f.remove_vertical_mean()
    } else {
        f
    })
}

pub fn random_vector(
    grid: Grid,
    spec: &EnsembleSpec,
    index: usize,
    divergence_free: bool,
    mean: MeanConstraint,
) -> Result<VectorField> {
    spec.validate(&grid)?;
    let mut rng = spec.rng(index);
    let mut comps = [
        SpectralField::zeros(grid),
        SpectralField::zeros(grid),
        SpectralField::zeros(grid),
    ];
    for m in band_modes(spec.band_limit) {
        let a = amplitude(m, spec.amplitude_decay);
        let draws = [draw(&mut rng, a), draw(&mut rng, a), draw(&mut rng, a)];
        if mean.admits(m) {
            for (c, d) in comps.iter_mut().zip(draws) {
                c.add_mode_pair(m, d)?;
            }
        }
    }
    let [a, b, c] = comps;
    let mut u = VectorField::new(a, b, c)?;
    if mean == MeanConstraint::Vertical {
        u = u.remove_vertical_mean();
    }
    Ok(if divergence_free { ops::leray_project(&u) } else { u })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_function_on_every_grid() {
        let spec = EnsembleSpec::new(1, 3, 42);
        let a = random_vector(Grid::cubic(8).unwrap(), &spec, 3, true, MeanConstraint::None).unwrap();
        let b = random_vector(Grid::cubic(16).unwrap(), &spec, 3, true, MeanConstraint::None).unwrap();
        let up = ops::resample_vector(&a, *b.grid()).unwrap();
        assert!(ops::vector_norm(&(&up - &b)) < 1e-14);
    }

    #[test]
    fn constraints_hold() {
        let g = Grid::cubic(12).unwrap();
        let spec = EnsembleSpec::new(1, 3, 1);
        let v = random_scalar(g, &spec, 0, MeanConstraint::Vertical).unwrap();
        assert!(v.is_vertical_mean_zero());
        for m1 in -3..=3 {
            for m2 in -3..=3 {
                assert_eq!(v.coeff([m1, m2, 0]).norm(), 0.0);
            }
        }
        let h = random_scalar(g, &spec, 0, MeanConstraint::Horizontal).unwrap();
        for m3 in -3..=3 {
            assert_eq!(h.coeff([0, 0, m3]).norm(), 0.0);
        }
        assert!(h.hermitian_residue() == 0.0);
        let u = random_vector(g, &spec, 2, true, MeanConstraint::None).unwrap();
        assert!(u.is_divergence_free());
        assert!(u.divergence_defect() < 1e-12);
    }

    #[test]
    fn band_must_fit_grid() {
        let g = Grid::cubic(8).unwrap();
        assert!(random_scalar(g, &EnsembleSpec::new(1, 4, 0), 0, MeanConstraint::None).is_err());
        assert!(random_scalar(g, &EnsembleSpec::new(0, 2, 0), 0, MeanConstraint::None).is_err());
    }
}
