use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{arg, Error, Result};
use crate::graded::Side;
use crate::groupconv::GroupLaw;
use crate::spectral::{forward_transform, inverse_transform, SampledField};

/// Nodes whose magnitude is below this fraction of the peak count as outside the support.
pub const SUPPORT_TOL: f64 = 1e-15;

fn check_inputs(a: &SampledField, b: &SampledField, law: &GroupLaw) -> Result<()> {
    if a.side != Side::Primal || b.side != Side::Primal {
        return Err(arg("field", "group convolution takes primal-side fields"));
    }
    for f in [a, b] {
        if f.grid.ndim() != law.dim() {
            return Err(Error::Shape {
                expected: law.dim(),
                got: f.grid.ndim(),
            });
        }
    }
    Ok(())
}

/// `(node, value)` pairs of the support and the per-axis bound on `|x_i|`.
fn support(f: &SampledField) -> (Vec<(Vec<f64>, Complex64)>, Vec<f64>) {
    let peak = f.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let cut = peak * SUPPORT_TOL;
    let n = f.grid.ndim();
    let mut bound = vec![0.0f64; n];
    let mut pts = Vec::new();
    for (i, v) in f.values.iter().enumerate() {
        if v.norm() > cut {
            let x = f.coords(i);
            for k in 0..n {
                bound[k] = bound[k].max(x[k].abs());
            }
            pts.push((x, *v));
        }
    }
    (pts, bound)
}

/// `(A * B)(x) = int A(y) B(y^{-1} x) dy` at arbitrary points; `B` is
/// interpolated multilinearly and the `y` sum runs over `A`'s grid nodes.
pub fn group_convolve_at(a: &SampledField, b: &SampledField, law: &GroupLaw, points: &[Vec<f64>]) -> Result<Vec<Complex64>> {
    check_inputs(a, b, law)?;
    let (pts, _) = support(a);
    Ok(convolve_points(&pts, a.grid.cell_volume(), b, law, points))
}

fn convolve_points(pts: &[(Vec<f64>, Complex64)], vol: f64, b: &SampledField, law: &GroupLaw, points: &[Vec<f64>]) -> Vec<Complex64> {
    points
        .par_iter()
        .map(|x| {
            let n = law.dim();
            let mut yinv = vec![0.0; n];
            let mut z = vec![0.0; n];
            let mut acc = Complex64::new(0.0, 0.0);
            for (y, av) in pts {
                for k in 0..n {
                    yinv[k] = -y[k];
                }
                law.multiply_into(&yinv, x, &mut z);
                acc += av * b.interpolate(&z);
            }
            acc * vol
        })
        .collect()
}

/// Direct quadrature on `B`'s grid, for any law.
pub fn group_convolve_direct(a: &SampledField, b: &SampledField, law: &GroupLaw) -> Result<SampledField> {
    check_inputs(a, b, law)?;
    let (pts, abound) = support(a);
    let (_, bbound) = support(b);
    check_overflow(law, &abound, &bbound, b)?;
    let points: Vec<Vec<f64>> = (0..b.grid.len()).map(|i| b.coords(i)).collect();
    let values = convolve_points(&pts, a.grid.cell_volume(), b, law, &points);
    let mut out = SampledField::new(&b.layout, Side::Primal, b.grid.clone(), values)?;
    out.box_order = a.box_order + b.box_order;
    Ok(out)
}

fn check_overflow(law: &GroupLaw, abound: &[f64], bbound: &[f64], out: &SampledField) -> Result<()> {
    let need = law.magnitude_bound(abound, bbound);
    let half = out.grid.half_extents();
    let bad: Vec<String> = (0..need.len())
        .filter(|&k| need[k] > half[k] - out.grid.spacings[k])
        .map(|k| format!("axis {k} needs half-width {:.6} (grid has {:.6})", need[k] + out.grid.spacings[k], half[k]))
        .collect();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Error::Overflow(bad.join("; ")))
    }
}

/// Group convolution on `B`'s grid. Abelian laws with matching grids use
/// the transform-domain product, which equals the direct trapezoid sum.
pub fn group_convolve(a: &SampledField, b: &SampledField, law: &GroupLaw) -> Result<SampledField> {
    check_inputs(a, b, law)?;
    if !law.algebra.is_abelian() || a.grid != b.grid {
        return group_convolve_direct(a, b, law);
    }
    let (_, abound) = support(a);
    let (_, bbound) = support(b);
    check_overflow(law, &abound, &bbound, b)?;
    let mut a0 = a.clone();
    let mut b0 = b.clone();
    a0.box_order = 0;
    b0.box_order = 0;
    let fa = forward_transform(&a0)?;
    let fb = forward_transform(&b0)?;
    let mut prod = fa;
    for (p, q) in prod.values.iter_mut().zip(&fb.values) {
        *p *= q;
    }
    let mut out = inverse_transform(&prod)?;
    out.grid = b.grid.clone();
    out.box_order = a.box_order + b.box_order;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graded::GradedLayout;
    use crate::groupconv::NilpotentAlgebra;
    use crate::spectral::{sample_function, GridSpec};
    use std::f64::consts::PI;

    #[test]
    fn abelian_gaussians() {
        let l = GradedLayout::euclidean(1).unwrap();
        let law = GroupLaw::from_algebra(&NilpotentAlgebra::abelian(1).unwrap()).unwrap();
        let g = GridSpec::from_lengths(vec![512], &[40.0]).unwrap();
        // e^{-x^2/2} cut below 1e-300 so the support is compact on the grid
        let f = sample_function(&l, Side::Primal, &g, |x| {
            let v = (-0.5 * x[0] * x[0]).exp();
            Complex64::new(if x[0].abs() < 9.0 { v } else { 0.0 }, 0.0)
        })
        .unwrap();
        let fast = group_convolve(&f, &f, &law).unwrap();
        let direct = group_convolve_direct(&f, &f, &law).unwrap();
        let peak = direct.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for i in 0..g.len() {
            let x = fast.coords(i)[0];
            // sqrt(pi) e^{-x^2/4}
            let want = PI.sqrt() * (-0.25 * x * x).exp();
            assert!((direct.values[i].re - want).abs() < 1e-9, "{x}");
            assert!((fast.values[i] - direct.values[i]).norm() < 1e-8 * peak);
        }
    }

    #[test]
    fn overflow_reports_extent() {
        let l = GradedLayout::euclidean(1).unwrap();
        let law = GroupLaw::from_algebra(&NilpotentAlgebra::abelian(1).unwrap()).unwrap();
        let g = GridSpec::from_lengths(vec![64], &[8.0]).unwrap();
        let f = sample_function(&l, Side::Primal, &g, |x| Complex64::new(if x[0].abs() < 3.0 { 1.0 } else { 0.0 }, 0.0)).unwrap();
        let e = group_convolve(&f, &f, &law).unwrap_err();
        assert!(e.to_string().contains("needs half-width"), "{e}");
    }
}
