//! Batched multi-dimensional FFTs on flat row-major buffers.

use std::cell::RefCell;

use num_complex::Complex64;
use rustfft::FftPlanner;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

#[derive(Clone, Copy, PartialEq, Eq)]
pub(crate) enum Direction {
    Forward,
    Inverse,
}

/// Unnormalised transform of one axis of a row-major array with the given shape.
pub(crate) fn transform_axis(data: &mut [Complex64], shape: &[usize], axis: usize, dir: Direction) {
    let n = shape[axis];
    if n <= 1 {
        return;
    }
    let fft = PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        match dir {
            Direction::Forward => p.plan_fft_forward(n),
            Direction::Inverse => p.plan_fft_inverse(n),
        }
    });
    let stride: usize = shape[axis + 1..].iter().product();
    if stride == 1 {
        fft.process(data);
        return;
    }
    let outer: usize = shape[..axis].iter().product();
    let block = n * stride;
    let mut lines = vec![Complex64::default(); data.len()];
    // gather every line along `axis` contiguously, transform as one batch
    let mut line = 0;
    for o in 0..outer {
        let base = o * block;
        for s in 0..stride {
            let dst = &mut lines[line * n..(line + 1) * n];
            for (j, d) in dst.iter_mut().enumerate() {
                *d = data[base + j * stride + s];
            }
            line += 1;
        }
    }
    fft.process(&mut lines);
    let mut line = 0;
    for o in 0..outer {
        let base = o * block;
        for s in 0..stride {
            let src = &lines[line * n..(line + 1) * n];
            for (j, v) in src.iter().enumerate() {
                data[base + j * stride + s] = *v;
            }
            line += 1;
        }
    }
}

pub(crate) fn transform(data: &mut [Complex64], shape: &[usize], dir: Direction) {
    for axis in 0..shape.len() {
        transform_axis(data, shape, axis, dir);
    }
}

/// Forward transform normalised so that coefficients are Fourier-series amplitudes.
pub(crate) fn forward(data: &mut [Complex64], shape: &[usize]) {
    transform(data, shape, Direction::Forward);
    let scale = 1.0 / data.len() as f64;
    for v in data.iter_mut() {
        *v *= scale;
    }
}

/// Synthesis: evaluates the Fourier series at the grid points.
pub(crate) fn inverse(data: &mut [Complex64], shape: &[usize]) {
    transform(data, shape, Direction::Inverse);
}
