use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{arg, Error, Result};
use crate::graded::{GradedLayout, NormVariant, Side};
use crate::spectral::SampledField;

/// Dual-side sampling region for exponent regression.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitRegion {
    /// Minimum Euclidean size of the last block; `None` means `8 dxi`.
    pub r_min: Option<f64>,
    /// Points with homogeneous norm above this fraction of the grid extent are dropped.
    pub max_norm_fraction: f64,
    /// Require `|xi|_k >= separation |xi|_{k+1}`.
    pub separation: f64,
    pub samples: usize,
    pub seed: u64,
    pub norm: Option<NormVariant>,
}

impl Default for FitRegion {
    fn default() -> Self {
        FitRegion {
            r_min: None,
            max_norm_fraction: 0.25,
            separation: 1.0,
            samples: 400,
            seed: 0,
            norm: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub exponents: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub prefactor: f64,
    pub residual_rms: f64,
    pub samples: usize,
    pub region: String,
}

impl ExponentFit {
    /// `layer,exponent,std_error,target` rows.
    pub fn to_csv(&self, targets: Option<&[f64]>) -> String {
        let mut s = String::from("layer,exponent,std_error,target\n");
        for (k, e) in self.exponents.iter().enumerate() {
            let t = targets.and_then(|t| t.get(k)).map(|v| format!("{v}")).unwrap_or_default();
            s.push_str(&format!("{},{e},{},{t}\n", k + 1, self.std_errors[k]));
        }
        s
    }
}

const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Point `i` of the Halton sequence in `[0, 1)^n`.
pub(crate) fn halton(i: u64, n: usize) -> Vec<f64> {
    (0..n).map(|k| radical_inverse(i, PRIMES[k % PRIMES.len()])).collect()
}

/// Least squares `log|v| = log C + sum_k sigma_k log|xi|_k` over the given points.
pub fn fit_exponents(layout: &GradedLayout, side: Side, points: &[(Vec<f64>, f64)], norm: NormVariant, region: &str) -> Result<ExponentFit> {
    let d = layout.d();
    let rows: Vec<(Vec<f64>, f64)> = points
        .iter()
        .filter(|(_, v)| v.is_finite() && *v != 0.0)
        .map(|(x, v)| {
            let pn = match side {
                Side::Dual => layout.partial_norms_dual(x, norm),
                Side::Primal => layout.partial_norms_primal(x, norm),
            };
            (pn.iter().map(|p| p.ln()).collect::<Vec<f64>>(), v.abs().ln())
        })
        .filter(|(r, _)| r.iter().all(|v| v.is_finite()))
        .collect();
    if rows.len() < 10 * d.max(1) {
        return Err(Error::Regression(format!(
            "{} usable samples, need at least {}",
            rows.len(),
            10 * d.max(1)
        )));
    }
    let m = rows.len();
    let a = DMatrix::from_fn(m, d + 1, |i, j| if j == 0 { 1.0 } else { rows[i].0[j - 1] });
    let b = DVector::from_iterator(m, rows.iter().map(|r| r.1));
    // Column scaling keeps the conditioning test meaningful.
    let scales: Vec<f64> = (0..=d).map(|j| a.column(j).norm().max(1e-300)).collect();
    let mut an = a.clone();
    for j in 0..=d {
        an.column_mut(j).scale_mut(1.0 / scales[j]);
    }
    let svd = an.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let vt = svd.v_t.as_ref().unwrap();
    let mut degenerate = Vec::new();
    for (k, s) in svd.singular_values.iter().enumerate() {
        if *s < 1e-9 * smax {
            let dir: Vec<String> = vt.row(k).iter().skip(1).map(|v| format!("{v:.3}")).collect();
            degenerate.push(format!("[{}]", dir.join(",")));
        }
    }
    if !degenerate.is_empty() {
        return Err(Error::Regression(format!(
            "collinear partial norms; degenerate directions {}",
            degenerate.join(" ")
        )));
    }
    let sol = svd.solve(&b, 1e-14).map_err(|e| Error::Regression(e.to_string()))?;
    let coef: Vec<f64> = (0..=d).map(|j| sol[j] / scales[j]).collect();
    let resid = &b - &a * DVector::from_vec(coef.clone());
    let rss = resid.norm_squared();
    let dof = (m - d - 1).max(1) as f64;
    let sigma2 = rss / dof;
    let ata = a.transpose() * &a;
    let cov = ata.try_inverse().map(|c| c * sigma2);
    let std_errors = (1..=d)
        .map(|j| cov.as_ref().map_or(f64::NAN, |c| c[(j, j)].max(0.0).sqrt()))
        .collect();
    Ok(ExponentFit {
        exponents: coef[1..].to_vec(),
        std_errors,
        prefactor: coef[0].exp(),
        residual_rms: (rss / m as f64).sqrt(),
        samples: m,
        region: region.to_string(),
    })
}

/// Regression of a dual field over quasi-random grid nodes in the region.
pub fn decay_exponent_fit(field: &SampledField, region: &FitRegion) -> Result<ExponentFit> {
    if field.side != Side::Dual {
        return Err(arg("field", "exponent fits run on dual-side fields"));
    }
    let l = &field.layout;
    let g = &field.grid;
    let norm = region.norm.unwrap_or_else(|| l.default_norm());
    l.check_norm(norm)?;
    let last = l.block(l.d() - 1);
    let dxi = last.clone().map(|i| g.spacings[i]).fold(0.0, f64::max);
    let r_min = region.r_min.unwrap_or(8.0 * dxi);
    let half = g.half_extents();
    let extent = (0..g.ndim())
        .map(|i| half[i].powf(1.0 / l.exponents_f64()[l.layer_of(i)]))
        .fold(f64::INFINITY, f64::min);
    let max_norm = region.max_norm_fraction * extent;
    let mut seen = BTreeSet::new();
    let mut pts = Vec::new();
    let mut idx = vec![0usize; g.ndim()];
    let mut x = vec![0.0; g.ndim()];
    let start = 1 + region.seed % 1_000_000;
    let tries = 400 * region.samples as u64;
    for t in 0..tries {
        if pts.len() >= region.samples {
            break;
        }
        let u = halton(start + t, g.ndim());
        for i in 0..g.ndim() {
            idx[i] = ((u[i] * g.counts[i] as f64) as usize).min(g.counts[i] - 1);
        }
        let flat = g.ravel(&idx);
        if !seen.insert(flat) {
            continue;
        }
        g.coords_of(flat, &mut x);
        let last_size = last.clone().map(|i| x[i] * x[i]).sum::<f64>().sqrt();
        if last_size < r_min || l.norm_unchecked(&x, norm) > max_norm {
            continue;
        }
        if region.separation > 1.0 {
            let pn = l.partial_norms_dual(&x, norm);
            if pn.windows(2).any(|w| w[0] < region.separation * w[1]) {
                continue;
            }
        }
        pts.push((x.clone(), field.values[flat].norm()));
    }
    let desc = format!(
        "r_min={r_min:.4e}, max_norm={max_norm:.4e}, separation={}, seed={}",
        region.separation, region.seed
    );
    fit_exponents(l, Side::Dual, &pts, norm, &desc)
}

/// Slope of `log|f(delta_t xi0)|` against `log t`.
pub fn dilation_orbit_slope(f: &dyn Fn(&[f64]) -> f64, layout: &GradedLayout, xi0: &[f64], ts: &[f64]) -> Result<(f64, f64)> {
    layout.check_point(xi0)?;
    if ts.len() < 3 {
        return Err(arg("ts", "need at least three dilation parameters"));
    }
    let pts: Vec<(f64, f64)> = ts
        .iter()
        .map(|&t| {
            let y = layout.dilate(t, xi0)?;
            Ok((t.ln(), f(&y).abs().ln()))
        })
        .collect::<Result<_>>()?;
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let rms = (pts.iter().map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2)).sum::<f64>() / n).sqrt();
    Ok((slope, rms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graded::Rational;
    use crate::spectral::{sample_function, GridSpec};
    use num_complex::Complex64;

    #[test]
    fn recovers_model_exponents() {
        let l = GradedLayout::flag(vec![(Rational::from_integer(1), 1), (Rational::from_integer(1), 1)]).unwrap();
        let g = GridSpec::cube(2, 128, 128.0).unwrap().dual();
        let norm = l.default_norm();
        let field = sample_function(&l, Side::Dual, &g, |x| {
            let pn = l.partial_norms_dual(x, norm);
            Complex64::new(3.0 * pn[0].powf(-0.7) * pn[1].powf(-0.2), 0.0)
        })
        .unwrap();
        let fit = decay_exponent_fit(&field, &FitRegion::default()).unwrap();
        assert!((fit.exponents[0] + 0.7).abs() < 1e-3 && (fit.exponents[1] + 0.2).abs() < 1e-3);
        assert!(fit.residual_rms < 1e-6);
        assert!((fit.prefactor - 3.0).abs() < 1e-6);
        let scaled = decay_exponent_fit(&field.scale(Complex64::new(5.0, 0.0)), &FitRegion::default()).unwrap();
        for k in 0..2 {
            assert!((scaled.exponents[k] - fit.exponents[k]).abs() < 1e-9);
        }
    }

    #[test]
    fn collinear_norms_are_reported() {
        let l = GradedLayout::flag(vec![(Rational::from_integer(1), 1), (Rational::from_integer(1), 1)]).unwrap();
        let pts: Vec<(Vec<f64>, f64)> = (1..40).map(|i| (vec![0.0, i as f64], 1.0 / i as f64)).collect();
        let e = fit_exponents(&l, Side::Dual, &pts, NormVariant::Max, "").unwrap_err();
        assert!(e.to_string().contains("degenerate"));
    }

    #[test]
    fn orbit_slope() {
        let l = GradedLayout::new(vec![(Rational::from_integer(1), 1), (Rational::from_integer(2), 1)]).unwrap();
        let f = |x: &[f64]| {
            let pn = l.partial_norms_dual(x, NormVariant::Smooth(2));
            pn[0].powf(-0.5) * pn[1].powf(-1.5)
        };
        let ts: Vec<f64> = (0..10).map(|i| 2f64.powi(i)).collect();
        let (s, rms) = dilation_orbit_slope(&f, &l, &[0.3, 1.1], &ts).unwrap();
        assert!((s + 2.0).abs() < 1e-12 && rms < 1e-12);
    }
}
