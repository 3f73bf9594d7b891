//! Differential operators, projections, dealiased products and norms.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{SpectralField, VectorField};
use crate::grid::Grid;

#[inline]
fn times_i(c: Complex64, k: f64) -> Complex64 {
    Complex64::new(-c.im * k, c.re * k)
}

/// Full gradient `(d1 f, d2 f, d3 f)`.
pub fn gradient(f: &SpectralField) -> VectorField {
    let d = |axis: usize| f.map_modes(|m, c| times_i(c, m.kd[axis]));
    VectorField::new(d(0), d(1), d(2)).expect("components share a grid")
}

/// Horizontal gradient `(d1 f, d2 f, 0)`.
pub fn horizontal_gradient(f: &SpectralField) -> VectorField {
    let d = |axis: usize| f.map_modes(|m, c| times_i(c, m.kd[axis]));
    VectorField::new(d(0), d(1), SpectralField::zeros(*f.grid())).expect("components share a grid")
}

/// Partial derivative along `axis`.
pub fn partial(f: &SpectralField, axis: usize) -> SpectralField {
    f.map_modes(|m, c| times_i(c, m.kd[axis]))
}

/// Orthogonal projection onto divergence-free fields, `u - k (k.u) / |k|^2`.
/// The mean mode passes through unchanged.
pub fn leray_project(u: &VectorField) -> VectorField {
    let grid = *u.grid();
    let c = u.components();
    let mut out = [
        Vec::with_capacity(grid.len()),
        Vec::with_capacity(grid.len()),
        Vec::with_capacity(grid.len()),
    ];
    for i in 0..grid.len() {
        let v = [c[0].coeffs()[i], c[1].coeffs()[i], c[2].coeffs()[i]];
        let kd = c[0].mode(i).kd;
        let k2 = kd[0] * kd[0] + kd[1] * kd[1] + kd[2] * kd[2];
        let kv = if k2 == 0.0 {
            Complex64::default()
        } else {
            (v[0] * kd[0] + v[1] * kd[1] + v[2] * kd[2]) / k2
        };
        for j in 0..3 {
            out[j].push(v[j] - kv * kd[j]);
        }
    }
    let [a, b, d] = out;
    let mk = |coeffs: Vec<Complex64>, src: &SpectralField| {
        let f = SpectralField::from_coeffs(grid, coeffs).expect("length matches");
        if src.is_vertical_mean_zero() {
            f.remove_vertical_mean()
        } else {
            f
        }
    };
    VectorField::new(mk(a, &c[0]), mk(b, &c[1]), mk(d, &c[2]))
        .expect("components share a grid")
        .with_flag(true)
}

/// 2/3-rule truncation: zero every mode with `|m_j| > n_j / 3` on any axis.
pub fn dealias(f: &SpectralField) -> SpectralField {
    let g = *f.grid();
    f.map_modes(|m, c| {
        if g.keeps(0, m.m[0]) && g.keeps(1, m.m[1]) && g.keeps(2, m.m[2]) {
            c
        } else {
            Complex64::default()
        }
    })
}

pub fn dealias_vector(u: &VectorField) -> VectorField {
    u.map_components(dealias)
}

/// `integral(f g)` over the box, by Parseval.
pub fn inner_product(f: &SpectralField, g: &SpectralField) -> Result<f64> {
    if f.grid() != g.grid() {
        return Err(Error::GridMismatch);
    }
    let s: f64 = f
        .coeffs()
        .iter()
        .zip(g.coeffs())
        .map(|(a, b)| a.re * b.re + a.im * b.im)
        .sum();
    Ok(s * f.grid().volume())
}

pub fn vector_inner_product(u: &VectorField, v: &VectorField) -> Result<f64> {
    let mut s = 0.0;
    for j in 0..3 {
        s += inner_product(u.component(j), v.component(j))?;
    }
    Ok(s)
}

pub fn norm(f: &SpectralField) -> f64 {
    (f.weighted_mass(|_| 1.0) * f.grid().volume()).sqrt()
}

pub fn vector_norm(u: &VectorField) -> f64 {
    let s: f64 = u.components().iter().map(|c| c.weighted_mass(|_| 1.0)).sum();
    (s * u.grid().volume()).sqrt()
}

/// `|k3|^(2s)` with the convention that the `k3 = 0` plane has weight zero.
#[inline]
pub fn vertical_weight(k3: f64, s: f64) -> f64 {
    if k3 == 0.0 {
        0.0
    } else {
        k3.abs().powf(2.0 * s)
    }
}

/// `||d3^s f||_2` as a Fourier multiplier, for `s` in `(0, 1]`.
pub fn vertical_seminorm(f: &SpectralField, s: f64) -> Result<f64> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "vertical seminorm order must lie in (0, 1], got {s}"
        )));
    }
    Ok(vertical_seminorm_unchecked(f, s))
}

/// Same as [`vertical_seminorm`] for any `s >= 0` (`s = 0` measures the
/// non-mean part).
pub fn vertical_seminorm_unchecked(f: &SpectralField, s: f64) -> f64 {
    (f.weighted_mass(|m| vertical_weight(m.k[2], s)) * f.grid().volume()).sqrt()
}

pub fn vector_vertical_seminorm(u: &VectorField, s: f64) -> f64 {
    let sum: f64 = u
        .components()
        .iter()
        .map(|c| c.weighted_mass(|m| vertical_weight(m.k[2], s)))
        .sum();
    (sum * u.grid().volume()).sqrt()
}

/// `||grad u||_2` summed over components.
pub fn gradient_norm(u: &VectorField) -> f64 {
    let sum: f64 = u
        .components()
        .iter()
        .map(|c| c.weighted_mass(|m| m.k_squared()))
        .sum();
    (sum * u.grid().volume()).sqrt()
}

/// `||grad_h u||_2` (derivatives in `x1`, `x2` only).
pub fn horizontal_gradient_norm(u: &VectorField) -> f64 {
    let sum: f64 = u
        .components()
        .iter()
        .map(|c| c.weighted_mass(|m| m.kd[0] * m.kd[0] + m.kd[1] * m.kd[1]))
        .sum();
    (sum * u.grid().volume()).sqrt()
}

/// `||d3^s grad u||_2`.
pub fn vertical_gradient_seminorm(u: &VectorField, s: f64) -> f64 {
    let sum: f64 = u
        .components()
        .iter()
        .map(|c| c.weighted_mass(|m| m.k_squared() * vertical_weight(m.k[2], s)))
        .sum();
    (sum * u.grid().volume()).sqrt()
}

/// Pseudo-spectral product truncated to the 2/3 band; exact on that band when
/// both inputs already lie in it.
pub fn product(f: &SpectralField, g: &SpectralField) -> Result<SpectralField> {
    if f.grid() != g.grid() {
        return Err(Error::GridMismatch);
    }
    let a = f.to_physical();
    let b = g.to_physical();
    let p: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
    Ok(dealias(&SpectralField::forward_transform(*f.grid(), &p)?))
}

/// Dealiased `div(z (x) z)`, component `i` being `sum_j d_j (z_j z_i)`.
pub fn tensor_divergence(z: &VectorField) -> VectorField {
    tensor_divergence_physical(*z.grid(), &z.to_physical())
}

/// `tensor_divergence` from samples of `z` already on the grid.
pub(crate) fn tensor_divergence_physical(grid: Grid, phys: &[Vec<f64>; 3]) -> VectorField {
    // the six independent products z_i z_j, i <= j
    let pairs = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];
    let prods: Vec<SpectralField> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let p: Vec<f64> = phys[i].iter().zip(&phys[j]).map(|(a, b)| a * b).collect();
            SpectralField::forward_transform(grid, &p).expect("sample count matches grid")
        })
        .collect();
    let at = |i: usize, j: usize| {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        &prods[pairs.iter().position(|&p| p == (a, b)).unwrap()]
    };
    let comp = |i: usize| {
        let (p0, p1, p2) = (at(i, 0), at(i, 1), at(i, 2));
        let mut out = SpectralField::zeros(grid);
        let coeffs = out.coeffs_mut();
        for (idx, c) in coeffs.iter_mut().enumerate() {
            let m = p0.mode(idx);
            if !(grid.keeps(0, m.m[0]) && grid.keeps(1, m.m[1]) && grid.keeps(2, m.m[2])) {
                continue;
            }
            let s = p0.coeffs()[idx] * m.kd[0] + p1.coeffs()[idx] * m.kd[1] + p2.coeffs()[idx] * m.kd[2];
            *c = Complex64::new(-s.im, s.re);
        }
        out
    };
    VectorField::new(comp(0), comp(1), comp(2)).expect("components share a grid")
}

/// Dealiased convective derivative `(u . grad) v`.
pub fn convective(u: &VectorField, v: &VectorField) -> Result<VectorField> {
    if u.grid() != v.grid() {
        return Err(Error::GridMismatch);
    }
    let grid = *u.grid();
    let up = u.to_physical();
    let comps: Vec<SpectralField> = (0..3)
        .into_par_iter()
        .map(|i| {
            let mut acc = vec![0.0; grid.len()];
            for (j, uj) in up.iter().enumerate() {
                let d = partial(v.component(i), j).to_physical();
                for ((a, x), y) in acc.iter_mut().zip(uj).zip(&d) {
                    *a += x * y;
                }
            }
            dealias(&SpectralField::forward_transform(grid, &acc).expect("sample count matches grid"))
        })
        .collect();
    let [a, b, c]: [SpectralField; 3] = comps.try_into().expect("three components");
    VectorField::new(a, b, c)
}

/// `((u . grad) v, w)`, the trilinear form.
pub fn trilinear(u: &VectorField, v: &VectorField, w: &VectorField) -> Result<f64> {
    vector_inner_product(&convective(u, v)?, w)
}

/// Copies a field onto another grid of the same box: zero-padding when the
/// target is finer, truncation (with Nyquist aliasing) when coarser.
pub fn resample(f: &SpectralField, target: Grid) -> Result<SpectralField> {
    let src = *f.grid();
    if src.lengths() != target.lengths() {
        return Err(Error::GridMismatch);
    }
    let mut out = SpectralField::zeros(target);
    {
        let coeffs = out.coeffs_mut();
        for (idx, &c) in f.coeffs().iter().enumerate() {
            if c == Complex64::default() {
                continue;
            }
            let m = src.modes_at(idx);
            let i = src.unflat(idx);
            // a source Nyquist mode is cos-like: split it evenly onto +-n/2
            let mut targets: Vec<([i64; 3], f64)> = vec![([0; 3], 1.0)];
            for axis in 0..3 {
                let mut next = Vec::with_capacity(targets.len() * 2);
                let fine = target.shape()[axis] > src.shape()[axis];
                for (t, w) in &targets {
                    if src.is_nyquist(axis, i[axis]) && fine {
                        for sign in [1, -1] {
                            let mut t2 = *t;
                            t2[axis] = sign * m[axis];
                            next.push((t2, w * 0.5));
                        }
                    } else {
                        let mut t2 = *t;
                        t2[axis] = m[axis];
                        next.push((t2, *w));
                    }
                }
                targets = next;
            }
            for (t, w) in targets {
                let mut mapped = [0i64; 3];
                let mut ok = true;
                for axis in 0..3 {
                    let n = target.shape()[axis] as i64;
                    let half = n / 2;
                    if t[axis] == -half && t[axis].abs() <= half {
                        // -n/2 folds onto the stored +n/2 slot
                        mapped[axis] = half;
                    } else if t[axis] > half || t[axis] < -half {
                        ok = false;
                    } else {
                        mapped[axis] = t[axis];
                    }
                }
                if ok {
                    let j = target.flat_of_modes(mapped).expect("in range");
                    coeffs[j] += c * w;
                }
            }
        }
    }
    Ok(out)
}

pub fn resample_vector(u: &VectorField, target: Grid) -> Result<VectorField> {
    let [a, b, c] = u.components();
    Ok(VectorField::new(resample(a, target)?, resample(b, target)?, resample(c, target)?)?
        .with_flag(u.is_divergence_free()))
}

/// Physical samples on a grid refined by `factor` along each axis given by
/// `factors` (spectral interpolation).
pub fn oversampled(f: &SpectralField, factors: [usize; 3]) -> Result<(Grid, Vec<f64>)> {
    let g = *f.grid();
    let s = g.shape();
    let fine = Grid::with_lengths([s[0] * factors[0], s[1] * factors[1], s[2] * factors[2]], g.lengths())?;
    let r = resample(f, fine)?;
    Ok((fine, r.to_physical()))
}
