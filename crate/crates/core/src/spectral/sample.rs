use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graded::{GradedLayout, Side};
use crate::kernels::{KernelModel, Mollifier, SingularSet};
use crate::quadrature::gauss_legendre;
use crate::spectral::{GridSpec, SampledField};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleMode {
    /// Node values; nodes inside the singular exclusion are zeroed and masked.
    Point,
    /// Cell averages, with graded quadrature in cells touching the singular set.
    Cell,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleOptions {
    pub mode: SampleMode,
    /// Largest admissible fraction of masked nodes.
    pub mask_bound: f64,
}

impl Default for SampleOptions {
    fn default() -> Self {
        SampleOptions {
            mode: SampleMode::Cell,
            mask_bound: 0.01,
        }
    }
}

/// One-axis averaging rule: offsets in units of `h` and weights summing to 1.
#[derive(Clone, Debug)]
struct AxisRule {
    t: Vec<f64>,
    w: Vec<f64>,
}

impl AxisRule {
    fn gl(n: usize) -> Self {
        let r = gauss_legendre(n);
        AxisRule {
            t: r.nodes.iter().map(|x| 0.5 * x).collect(),
            w: r.weights.iter().map(|w| 0.5 * w).collect(),
        }
    }

    /// Cell centred on the singular coordinate: split at 0, `t = +-v^4 / 2`.
    fn graded(n: usize) -> Self {
        let r = gauss_legendre(n);
        let mut t = Vec::new();
        let mut w = Vec::new();
        for sign in [-1.0, 1.0] {
            for (x, wt) in r.nodes.iter().zip(&r.weights) {
                let v = 0.5 * (x + 1.0);
                let wv = 0.5 * wt;
                t.push(sign * 0.5 * v.powi(4));
                w.push(wv * 0.5 * 4.0 * v.powi(3));
            }
        }
        AxisRule { t, w }
    }
}

pub fn sample_function(
    layout: &GradedLayout,
    side: Side,
    grid: &GridSpec,
    f: impl Fn(&[f64]) -> Complex64 + Sync,
) -> Result<SampledField> {
    let values = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let mut x = vec![0.0; grid.ndim()];
            grid.coords_of(i, &mut x);
            f(&x)
        })
        .collect();
    SampledField::new(layout, side, grid.clone(), values)
}

/// Samples `phi(eps x) P(x)` (or `P` itself when `eps` is `None`) on the grid.
pub fn sample_kernel(kernel: &KernelModel, grid: &GridSpec, eps: Option<f64>, opts: &SampleOptions) -> Result<SampledField> {
    let l = &kernel.layout;
    if grid.ndim() != l.total_dim() {
        return Err(Error::Shape {
            expected: l.total_dim(),
            got: grid.ndim(),
        });
    }
    let k = match eps {
        Some(e) => kernel.truncate(Mollifier::for_layout(l), e)?,
        None => kernel.clone(),
    };
    check_resolution(&k, grid)?;
    let singular_axes: Vec<bool> = (0..grid.ndim())
        .map(|i| k.singular != SingularSet::None && l.layer_of(i) == 0)
        .collect();
    let mut field = match opts.mode {
        SampleMode::Point => {
            let hmin = grid.spacings.iter().zip(&singular_axes).filter(|(_, &s)| s).map(|(h, _)| *h).fold(f64::INFINITY, f64::min);
            let excl = k.exclusion.max(if hmin.is_finite() { 0.5 * hmin } else { 0.0 });
            let vals: Vec<(Complex64, bool)> = (0..grid.len())
                .into_par_iter()
                .map(|i| {
                    let mut x = vec![0.0; grid.ndim()];
                    grid.coords_of(i, &mut x);
                    if k.singular_distance(&x) < excl {
                        (Complex64::new(0.0, 0.0), true)
                    } else {
                        (Complex64::new(k.eval_unchecked(&x), 0.0), false)
                    }
                })
                .collect();
            let masked: Vec<usize> = vals.iter().enumerate().filter(|(_, v)| v.1).map(|(i, _)| i).collect();
            let mut f = SampledField::new(l, Side::Primal, grid.clone(), vals.into_iter().map(|v| v.0).collect())?;
            f.masked = masked;
            if f.mask_fraction() > opts.mask_bound {
                return Err(Error::Resolution(format!(
                    "mask fraction {:.4} exceeds the bound {}",
                    f.mask_fraction(),
                    opts.mask_bound
                )));
            }
            f
        }
        SampleMode::Cell => {
            let far = AxisRule::gl(4);
            let near = AxisRule::gl(12);
            let zero = AxisRule::graded(12);
            let off = grid.offsets();
            let vals = (0..grid.len())
                .into_par_iter()
                .map(|flat| {
                    let n = grid.ndim();
                    let mut idx = vec![0; n];
                    grid.unravel(flat, &mut idx);
                    let mut centre = vec![0.0; n];
                    let rules: Vec<&AxisRule> = (0..n)
                        .map(|i| {
                            centre[i] = off[i] + idx[i] as f64 * grid.spacings[i];
                            if !singular_axes[i] {
                                return &far;
                            }
                            let d = centre[i].abs() / grid.spacings[i];
                            if d < 0.5 {
                                &zero
                            } else if d <= 1.5 {
                                &near
                            } else {
                                &far
                            }
                        })
                        .collect();
                    Complex64::new(cell_average(&k, &centre, &grid.spacings, &rules), 0.0)
                })
                .collect();
            let mut f = SampledField::new(l, Side::Primal, grid.clone(), vals)?;
            f.box_order = 1;
            f
        }
    };
    field.side = Side::Primal;
    Ok(field)
}

fn cell_average(k: &KernelModel, centre: &[f64], h: &[f64], rules: &[&AxisRule]) -> f64 {
    let n = centre.len();
    let mut pos = vec![0usize; n];
    let mut x = vec![0.0; n];
    let mut total = 0.0;
    loop {
        let mut w = 1.0;
        for i in 0..n {
            x[i] = centre[i] + rules[i].t[pos[i]] * h[i];
            w *= rules[i].w[pos[i]];
        }
        let v = k.eval_unchecked(&x);
        if v.is_finite() {
            total += w * v;
        }
        let mut i = n;
        loop {
            if i == 0 {
                return total;
            }
            i -= 1;
            pos[i] += 1;
            if pos[i] < rules[i].t.len() {
                break;
            }
            pos[i] = 0;
        }
    }
}

fn check_resolution(k: &KernelModel, grid: &GridSpec) -> Result<()> {
    let l = &k.layout;
    let half = grid.half_extents();
    match k.support_radius() {
        Some(rs) => {
            let plateau = 0.5 * rs;
            for i in 0..grid.ndim() {
                let p = l.exponents_f64()[l.layer_of(i)];
                let reach = rs.powf(p);
                let top = half[i] - grid.spacings[i];
                if reach > top {
                    return Err(Error::Resolution(format!(
                        "axis {i}: support half-width (2/eps)^p = {reach:.6} exceeds grid half-width {top:.6}"
                    )));
                }
                let inner = plateau.powf(p);
                if inner < 4.0 * grid.spacings[i] {
                    return Err(Error::Resolution(format!(
                        "axis {i}: plateau half-width (1/eps)^p = {inner:.6} < 4 h = {:.6}",
                        4.0 * grid.spacings[i]
                    )));
                }
            }
        }
        None if k.singular != SingularSet::None => {
            return Err(Error::Resolution(format!(
                "{} is neither truncated nor rapidly decreasing; pass a truncation scale",
                k.id
            )))
        }
        None => {}
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graded::{NormVariant, OrderVector};

    fn line() -> GradedLayout {
        GradedLayout::euclidean(1).unwrap()
    }

    #[test]
    fn gaussian_nodes_match() {
        let k = KernelModel::gaussian(&line(), 1.0).unwrap();
        let g = GridSpec::from_lengths(vec![256], &[16.0]).unwrap();
        let opts = SampleOptions {
            mode: SampleMode::Point,
            ..Default::default()
        };
        let f = sample_kernel(&k, &g, Some(0.3), &opts).unwrap();
        for i in 0..g.len() {
            let x = f.coords(i)[0];
            let want = if x.abs() <= 1.0 / 0.3 { (-x * x).exp() } else { f.values[i].re };
            assert!((f.values[i].re - want).abs() < 1e-12);
        }
    }

    #[test]
    fn flag_power_point_sampling_is_symmetric() {
        let k = KernelModel::flag_power(&line(), OrderVector::from_ratios(&[(-1, 2)]), NormVariant::Smooth(1)).unwrap();
        let g = GridSpec::from_lengths(vec![4096], &[64.0]).unwrap();
        let opts = SampleOptions {
            mode: SampleMode::Point,
            ..Default::default()
        };
        let f = sample_kernel(&k, &g, Some(0.1), &opts).unwrap();
        assert_eq!(f.masked, vec![2048]);
        assert!(f.mask_fraction() <= 0.01);
        for j in 1..2048 {
            assert_eq!(f.values[2048 + j], f.values[2048 - j]);
        }
    }

    #[test]
    fn cell_average_of_inverse_root() {
        let k = KernelModel::flag_power(&line(), OrderVector::from_ratios(&[(-1, 2)]), NormVariant::Smooth(1)).unwrap();
        let g = GridSpec::from_lengths(vec![64], &[64.0]).unwrap();
        let f = sample_kernel(&k, &g, Some(0.1), &SampleOptions::default()).unwrap();
        // average of |x|^{-1/2} over [-1/2, 1/2] is 2 sqrt(2)
        assert!((f.values[32].re - 2.0 * 2f64.sqrt()).abs() < 1e-10);
        // over [1/2, 3/2]: 2 (sqrt(3/2) - sqrt(1/2))
        assert!((f.values[33].re - 2.0 * (1.5f64.sqrt() - 0.5f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn resolution_errors() {
        let k = KernelModel::flag_power(&line(), OrderVector::from_ratios(&[(-1, 2)]), NormVariant::Smooth(1)).unwrap();
        let g = GridSpec::from_lengths(vec![64], &[8.0]).unwrap();
        let e = sample_kernel(&k, &g, Some(0.1), &SampleOptions::default()).unwrap_err();
        assert!(e.to_string().contains("support"));
        let e = sample_kernel(&k, &g, Some(8.0), &SampleOptions::default()).unwrap_err();
        assert!(e.to_string().contains("plateau"));
        assert!(sample_kernel(&k, &g, None, &SampleOptions::default()).is_err());
    }
}
