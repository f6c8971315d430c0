use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

use crate::error::{arg, Result};
use crate::graded::Side;
use crate::spectral::{GridSpec, SampledField};

/// In-place unnormalized FFT along every axis of a row-major array.
fn fft_all_axes(grid: &GridSpec, data: &mut [Complex64], dir: FftDirection) {
    let mut planner = FftPlanner::new();
    let n = grid.ndim();
    for axis in 0..n {
        let len = grid.counts[axis];
        let stride: usize = grid.counts[axis + 1..].iter().product();
        let outer: usize = grid.counts[..axis].iter().product();
        let fft = planner.plan_fft(len, dir);
        let mut line = vec![Complex64::new(0.0, 0.0); len];
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        for o in 0..outer {
            for s in 0..stride {
                let base = o * len * stride + s;
                for (k, v) in line.iter_mut().enumerate() {
                    *v = data[base + k * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (k, v) in line.iter().enumerate() {
                    data[base + k * stride] = *v;
                }
            }
        }
    }
}

/// Multiplies by a separable factor `prod_i w_i(idx_i)`.
fn apply_separable(grid: &GridSpec, data: &mut [Complex64], factors: &[Vec<Complex64>]) {
    let mut idx = vec![0; grid.ndim()];
    for (flat, v) in data.iter_mut().enumerate() {
        grid.unravel(flat, &mut idx);
        let mut w = Complex64::new(1.0, 0.0);
        for (i, &j) in idx.iter().enumerate() {
            w *= factors[i][j];
        }
        *v *= w;
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// `F f(xi) = int f(x) e^{-i<x, xi>} dx` on the dual grid.
pub fn forward_transform(field: &SampledField) -> Result<SampledField> {
    if field.side != Side::Primal {
        return Err(arg("field", "forward transform needs a primal-side field"));
    }
    let g = &field.grid;
    let d = g.dual();
    let (o, od) = (g.offsets(), d.offsets());
    let mut data = field.values.clone();
    let pre: Vec<Vec<Complex64>> = (0..g.ndim())
        .map(|i| {
            (0..g.counts[i])
                .map(|j| Complex64::from_polar(1.0, -(j as f64) * g.spacings[i] * od[i]))
                .collect()
        })
        .collect();
    apply_separable(g, &mut data, &pre);
    fft_all_axes(g, &mut data, FftDirection::Forward);
    let post: Vec<Vec<Complex64>> = (0..g.ndim())
        .map(|i| {
            (0..g.counts[i])
                .map(|k| {
                    let xi = od[i] + k as f64 * d.spacings[i];
                    let deconv = sinc(0.5 * xi * g.spacings[i]).powi(field.box_order as i32);
                    Complex64::from_polar(g.spacings[i] / deconv, -o[i] * xi)
                })
                .collect()
        })
        .collect();
    apply_separable(g, &mut data, &post);
    let mut out = SampledField::new(&field.layout, Side::Dual, d, data)?;
    out.box_order = 0;
    Ok(out)
}

/// `f(x) = (2 pi)^{-n} int F(xi) e^{i<x, xi>} dxi` on the primal grid.
pub fn inverse_transform(field: &SampledField) -> Result<SampledField> {
    if field.side != Side::Dual {
        return Err(arg("field", "inverse transform needs a dual-side field"));
    }
    let d = &field.grid;
    // The primal grid is the dual of the dual up to the 2 pi factor.
    let g = GridSpec {
        counts: d.counts.clone(),
        spacings: d
            .counts
            .iter()
            .zip(&d.spacings)
            .map(|(&n, &h)| 2.0 * PI / (n as f64 * h))
            .collect(),
    };
    let (o, od) = (g.offsets(), d.offsets());
    let mut data = field.values.clone();
    let pre: Vec<Vec<Complex64>> = (0..d.ndim())
        .map(|i| {
            (0..d.counts[i])
                .map(|k| Complex64::from_polar(1.0, o[i] * k as f64 * d.spacings[i]))
                .collect()
        })
        .collect();
    apply_separable(d, &mut data, &pre);
    fft_all_axes(d, &mut data, FftDirection::Inverse);
    let post: Vec<Vec<Complex64>> = (0..d.ndim())
        .map(|i| {
            (0..d.counts[i])
                .map(|j| {
                    let x = o[i] + j as f64 * g.spacings[i];
                    Complex64::from_polar(d.spacings[i] / (2.0 * PI), od[i] * x)
                })
                .collect()
        })
        .collect();
    apply_separable(d, &mut data, &post);
    SampledField::new(&field.layout, Side::Primal, g, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graded::GradedLayout;
    use crate::spectral::sample_function;

    fn gaussian_field(n: usize, count: usize, length: f64) -> SampledField {
        let l = GradedLayout::euclidean(n).unwrap();
        let g = GridSpec::cube(n, count, length).unwrap();
        sample_function(&l, Side::Primal, &g, |x| {
            Complex64::new((-0.5 * x.iter().map(|v| v * v).sum::<f64>()).exp(), 0.0)
        })
        .unwrap()
    }

    #[test]
    fn gaussian_is_self_dual() {
        let f = gaussian_field(1, 256, 32.0);
        let t = forward_transform(&f).unwrap();
        for (i, v) in t.values.iter().enumerate() {
            let xi = t.coords(i)[0];
            let want = (2.0 * PI).sqrt() * (-0.5 * xi * xi).exp();
            assert!((v - Complex64::new(want, 0.0)).norm() < 1e-12, "xi={xi}");
        }
        let f2 = gaussian_field(2, 64, 20.0);
        let t2 = forward_transform(&f2).unwrap();
        let c = t2.values[t2.grid.ravel(&[32, 32])];
        assert!((c.re - 2.0 * PI).abs() < 1e-10);
    }

    #[test]
    fn round_trip_and_parseval() {
        let f = gaussian_field(2, 32, 16.0).map_values(|x, v| v * Complex64::new(1.0 + x[0], x[1]));
        let t = forward_transform(&f).unwrap();
        let b = inverse_transform(&t).unwrap();
        for (a, c) in f.values.iter().zip(&b.values) {
            assert!((a - c).norm() < 1e-12);
        }
        let ef = f.energy();
        let et = t.energy() / (2.0 * PI).powi(2);
        assert!((ef - et).abs() < 1e-10 * ef);
        assert!(inverse_transform(&f).is_err());
        assert!(forward_transform(&t).is_err());
    }
}
