use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tensor-product Fourier grid on the periodic box `[0, L1) x [0, L2) x [0, L3)`.
///
/// Along an axis with `n` points the retained mode numbers are
/// `-n/2 + 1, ..., n/2`; the physical wavenumber of mode `m` is `m * 2 pi / L`.
/// Storage is row-major with axis 3 (vertical) contiguous.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    n: [usize; 3],
    lengths: [f64; 3],
}

impl Grid {
    pub fn new(n1: usize, n2: usize, n3: usize) -> Result<Self> {
        Self::with_lengths([n1, n2, n3], [2.0 * PI; 3])
    }

    pub fn cubic(n: usize) -> Result<Self> {
        Self::new(n, n, n)
    }

    pub fn with_lengths(n: [usize; 3], lengths: [f64; 3]) -> Result<Self> {
        for (axis, &na) in n.iter().enumerate() {
            if na < 4 || na % 2 != 0 {
                return Err(Error::InvalidGrid(format!(
                    "axis {} has {} modes; need an even number >= 4",
                    axis + 1,
                    na
                )));
            }
        }
        for (axis, &l) in lengths.iter().enumerate() {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::InvalidGrid(format!(
                    "axis {} has non-positive period {}",
                    axis + 1,
                    l
                )));
            }
        }
        Ok(Self { n, lengths })
    }

    pub fn shape(&self) -> [usize; 3] {
        self.n
    }

    pub fn lengths(&self) -> [f64; 3] {
        self.lengths
    }

    /// Total number of grid points (and of stored modes).
    pub fn len(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn volume(&self) -> f64 {
        self.lengths.iter().product()
    }

    /// Area of a horizontal `(x1, x2)` cross-section.
    pub fn horizontal_area(&self) -> f64 {
        self.lengths[0] * self.lengths[1]
    }

    /// Same box, each axis resolved with `factor` times as many points.
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            n: [self.n[0] * factor, self.n[1] * factor, self.n[2] * factor],
            lengths: self.lengths,
        }
    }

    #[inline]
    pub fn flat(&self, i: [usize; 3]) -> usize {
        (i[0] * self.n[1] + i[1]) * self.n[2] + i[2]
    }

    #[inline]
    pub fn unflat(&self, idx: usize) -> [usize; 3] {
        let i3 = idx % self.n[2];
        let rest = idx / self.n[2];
        [rest / self.n[1], rest % self.n[1], i3]
    }

    /// Signed mode number of storage index `i` along `axis`.
    #[inline]
    pub fn mode(&self, axis: usize, i: usize) -> i64 {
        let n = self.n[axis];
        if i <= n / 2 {
            i as i64
        } else {
            i as i64 - n as i64
        }
    }

    /// Storage index of mode `m` along `axis`, if it is retained.
    #[inline]
    pub fn index_of_mode(&self, axis: usize, m: i64) -> Option<usize> {
        let half = (self.n[axis] / 2) as i64;
        if m > half || m <= -half {
            return None;
        }
        Some(m.rem_euclid(self.n[axis] as i64) as usize)
    }

    pub fn flat_of_modes(&self, m: [i64; 3]) -> Option<usize> {
        Some(self.flat([
            self.index_of_mode(0, m[0])?,
            self.index_of_mode(1, m[1])?,
            self.index_of_mode(2, m[2])?,
        ]))
    }

    pub fn modes_at(&self, idx: usize) -> [i64; 3] {
        let i = self.unflat(idx);
        [self.mode(0, i[0]), self.mode(1, i[1]), self.mode(2, i[2])]
    }

    #[inline]
    pub fn is_nyquist(&self, axis: usize, i: usize) -> bool {
        i == self.n[axis] / 2
    }

    #[inline]
    pub fn scale(&self, axis: usize) -> f64 {
        2.0 * PI / self.lengths[axis]
    }

    /// Physical wavenumber of index `i` along `axis`.
    #[inline]
    pub fn wavenumber(&self, axis: usize, i: usize) -> f64 {
        self.mode(axis, i) as f64 * self.scale(axis)
    }

    /// Wavenumber used by odd-order derivatives: zero at the Nyquist index so
    /// that real fields stay real.
    #[inline]
    pub fn deriv_wavenumber(&self, axis: usize, i: usize) -> f64 {
        if self.is_nyquist(axis, i) {
            0.0
        } else {
            self.wavenumber(axis, i)
        }
    }

    /// Index of the mode `-m` for storage index `i` (Hermitian partner).
    #[inline]
    pub fn conjugate_index(&self, axis: usize, i: usize) -> usize {
        (self.n[axis] - i) % self.n[axis]
    }

    pub fn conjugate_flat(&self, idx: usize) -> usize {
        let i = self.unflat(idx);
        self.flat([
            self.conjugate_index(0, i[0]),
            self.conjugate_index(1, i[1]),
            self.conjugate_index(2, i[2]),
        ])
    }

    /// Largest mode number kept by the 2/3 rule on `axis`.
    pub fn dealias_limit(&self, axis: usize) -> i64 {
        ((self.n[axis] - 1) / 3) as i64
    }

    /// True when mode `m` on `axis` survives the 2/3 rule (`3|m| < n`), so
    /// that sums of two kept modes never alias back into the kept band.
    #[inline]
    pub fn keeps(&self, axis: usize, m: i64) -> bool {
        3 * (m.unsigned_abs() as usize) < self.n[axis]
    }

    /// Physical coordinate of grid point `i` along `axis`.
    pub fn coordinate(&self, axis: usize, i: usize) -> f64 {
        self.lengths[axis] * i as f64 / self.n[axis] as f64
    }

    /// Largest retained physical wavenumber magnitude after dealiasing, over all axes.
    pub fn max_dealiased_wavenumber(&self) -> f64 {
        (0..3)
            .map(|a| self.dealias_limit(a) as f64 * self.scale(a))
            .fold(0.0, f64::max)
    }

    /// Largest mode number that fits every axis (Nyquist of the coarsest axis).
    pub fn nyquist_mode(&self) -> i64 {
        (self.n.iter().copied().min().unwrap_or(0) / 2) as i64
    }
}

impl std::fmt::Display for Grid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}x{}", self.n[0], self.n[1], self.n[2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_odd_or_small() {
        assert!(Grid::new(8, 8, 7).is_err());
        assert!(Grid::new(2, 8, 8).is_err());
        assert!(Grid::with_lengths([8, 8, 8], [1.0, -1.0, 1.0]).is_err());
    }

    #[test]
    fn mode_numbering() {
        let g = Grid::cubic(8).unwrap();
        let modes: Vec<i64> = (0..8).map(|i| g.mode(0, i)).collect();
        assert_eq!(modes, vec![0, 1, 2, 3, 4, -3, -2, -1]);
        for m in -3..=4 {
            let i = g.index_of_mode(0, m).unwrap();
            assert_eq!(g.mode(0, i), m);
        }
        assert!(g.index_of_mode(0, -4).is_none());
        assert!(g.index_of_mode(0, 5).is_none());
        assert_eq!(g.deriv_wavenumber(0, 4), 0.0);
        assert_eq!(g.wavenumber(0, 4), 4.0);
    }

    #[test]
    fn two_thirds_rule_on_eight_points() {
        let g = Grid::cubic(8).unwrap();
        let kept: Vec<i64> = (-3..=4).filter(|&m| g.keeps(0, m)).collect();
        assert_eq!(kept, vec![-2, -1, 0, 1, 2]);
        let g = Grid::cubic(12).unwrap();
        assert_eq!(g.dealias_limit(2), 3);
        assert!(g.keeps(2, 3) && !g.keeps(2, 4));
    }

    #[test]
    fn flat_round_trip() {
        let g = Grid::new(4, 6, 8).unwrap();
        for idx in 0..g.len() {
            assert_eq!(g.flat(g.unflat(idx)), idx);
            let c = g.conjugate_flat(idx);
            assert_eq!(g.conjugate_flat(c), idx);
        }
    }
}
