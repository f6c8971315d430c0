//! Dual-side decay of truncated kernels.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::graded::to_f64;
use crate::kernels::{KernelForm, KernelModel, TestFamily, TestFunction};
use crate::special::gamma;
use crate::spectral::{decay_exponent_fit, forward_transform, sample_kernel, FitRegion, GridSpec, SampleOptions, SampledField};
use crate::verify::report::{Provenance, Quantity, VerificationReport};
use crate::verify::{params_json, CheckContext};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FourierParams {
    /// Nodes per axis; `None` picks 4096 on the line and 512 per axis otherwise.
    pub counts: Option<Vec<usize>>,
    pub spacing: Option<f64>,
    /// Truncation scale; `None` puts the support at half the grid half-width.
    pub eps: Option<f64>,
    /// `None` fits over `16 eps <= |xi|` up to a tenth (line) or a quarter of the extent.
    pub region: Option<FitRegion>,
    /// `None` means 0.05 on the line and 0.1 otherwise.
    pub exponent_tol: Option<f64>,
    pub prefactor_tol: f64,
    /// Dilations for the dual-side pairing slope (line only).
    pub spot_r: Vec<f64>,
    pub spot_tol: f64,
    /// Decay faster than this power counts as superpolynomial.
    pub superpolynomial_power: f64,
}

impl Default for FourierParams {
    fn default() -> Self {
        FourierParams {
            counts: None,
            spacing: None,
            eps: None,
            region: None,
            exponent_tol: None,
            prefactor_tol: 0.03,
            spot_r: vec![0.04, 0.08, 0.16, 0.32, 0.64],
            spot_tol: 0.05,
            superpolynomial_power: 20.0,
        }
    }
}

impl FourierParams {
    /// Copy with every default filled in for a given dimension.
    pub fn resolved(&self, dim: usize) -> FourierParams {
        let mut p = self.clone();
        let counts = self.counts.clone().unwrap_or_else(|| vec![if dim == 1 { 4096 } else { 512 }; dim]);
        let h = self.spacing.unwrap_or(if dim == 1 { 1.0 / 32.0 } else { 1.0 / 8.0 });
        let half = 0.5 * counts.iter().cloned().min().unwrap_or(0) as f64 * h;
        let eps = self.eps.unwrap_or(4.0 / half);
        p.region = Some(self.region.clone().unwrap_or(FitRegion {
            r_min: Some(16.0 * eps),
            max_norm_fraction: if dim == 1 { 0.1 } else { 0.25 },
            ..FitRegion::default()
        }));
        p.exponent_tol = Some(self.exponent_tol.unwrap_or(if dim == 1 { 0.05 } else { 0.1 }));
        p.counts = Some(counts);
        p.spacing = Some(h);
        p.eps = Some(eps);
        p
    }
}

/// `int e^{-i x xi} |x|^{-s} dx = 2 Gamma(1 - s) sin(pi s / 2) |xi|^{s - 1}`, `0 < s < 1`.
fn line_power_prefactor(kernel: &KernelModel) -> Option<f64> {
    match &kernel.form {
        KernelForm::FlagPower { order, .. } if kernel.layout.total_dim() == 1 => {
            let s = to_f64(&order.0[0]) + 1.0;
            (s > 0.0 && s < 1.0).then(|| 2.0 * gamma(1.0 - s) * (std::f64::consts::PI * s / 2.0).sin())
        }
        _ => None,
    }
}

/// `sum_xi Phat(xi) f(R xi) dxi` on the dual grid.
fn dual_pairing(field: &SampledField, f: &TestFunction, r: f64) -> Complex64 {
    let vol = field.grid.cell_volume();
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, v) in field.values.iter().enumerate() {
        let x = field.coords(i);
        acc += v * f.value_dilated(&x, r);
    }
    acc * vol
}

fn slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    sxy / sxx
}

pub fn check_fourier(id: &str, kernel: &KernelModel, p: &FourierParams, ctx: &CheckContext) -> Result<VerificationReport> {
    let l = &kernel.layout;
    let dim = l.total_dim();
    let p = &p.resolved(dim);
    let (eps, region) = (p.eps.unwrap(), p.region.clone().unwrap());
    let mut rep = VerificationReport::new(id, "fourier", params_json(p));
    rep.subjects.push(format!("{}: {}", kernel.id, kernel.class));
    rep.seeds.push(region.seed);
    let grid = GridSpec::new(p.counts.clone().unwrap(), vec![p.spacing.unwrap(); dim])?;
    let opts = SampleOptions::default();
    if let KernelForm::Gaussian { .. } = kernel.form {
        let field = forward_transform(&sample_kernel(kernel, &grid, None, &opts)?)?;
        superpolynomial(&mut rep, &field, p.superpolynomial_power);
        return Ok(rep.finish());
    }
    let field = forward_transform(&sample_kernel(kernel, &grid, Some(eps), &opts)?)?;
    let fit = decay_exponent_fit(&field, &region)?;
    let targets: Vec<f64> = kernel.class.order.0.iter().map(to_f64).collect();
    let tol = p.exponent_tol.unwrap() * ctx.tol_scale;
    for (k, t) in targets.iter().enumerate() {
        rep.push(Quantity::abs(format!("dual_exponent[{}]", k + 1), fit.exponents[k], *t, tol, Provenance::Stated).with_error(fit.std_errors[k]));
    }
    rep.push(Quantity::info("fit_residual_rms", fit.residual_rms));
    if let Some(c) = line_power_prefactor(kernel) {
        rep.push(Quantity::rel("dual_prefactor", fit.prefactor, c, p.prefactor_tol * ctx.tol_scale, Provenance::Derived));
    }
    rep.fit("dual_decay", fit, targets.clone());
    if dim == 1 {
        let pts: Vec<(f64, f64)> = (0..field.values.len())
            .filter_map(|i| {
                let x = field.coords(i)[0];
                (x > 0.0).then(|| (x, field.values[i].norm()))
            })
            .collect();
        rep.series("dual_magnitude", ["xi", "abs_transform"], pts);
        if !p.spot_r.is_empty() {
            // odd kernels pair trivially with even test functions
            let odd = (kernel.eval_unchecked(&[0.7]) + kernel.eval_unchecked(&[-0.7])).abs() < 1e-12 * kernel.eval_unchecked(&[0.7]).abs();
            let f = if odd {
                TestFunction::new(l, TestFamily::HermiteGaussian { coord: 0, degree: 1 })
            } else {
                TestFunction::gaussian(l)
            };
            let pts: Vec<(f64, f64)> = p.spot_r.iter().map(|&r| (r.ln(), dual_pairing(&field, &f, r).norm().ln())).collect();
            let target = -l.q_f64() - targets[0];
            rep.push(Quantity::abs("dual_pairing_slope", slope(&pts), target, p.spot_tol * ctx.tol_scale, Provenance::Stated));
            rep.series("dual_pairing", ["log_R", "log_abs_pairing"], pts);
        }
    }
    Ok(rep.finish())
}

/// Shell maxima over dyadic annuli; the decay is superpolynomial when the
/// local slope falls below `-power` or the values reach the rounding floor.
fn superpolynomial(rep: &mut VerificationReport, field: &SampledField, power: f64) {
    let l = &field.layout;
    let norm = l.default_norm();
    let peak = field.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let half = field.grid.half_extents().into_iter().fold(f64::INFINITY, f64::min);
    let mut shells = Vec::new();
    let mut r = 0.5;
    while 2.0 * r <= half {
        let m = (0..field.values.len())
            .filter(|&i| {
                let n = l.norm_unchecked(&field.coords(i), norm);
                n >= r && n < 2.0 * r
            })
            .map(|i| field.values[i].norm())
            .fold(0.0, f64::max);
        shells.push((r, m));
        r *= 2.0;
    }
    let floor = 1e-13 * peak;
    let mut steepest = 0.0f64;
    let mut fast = false;
    for w in shells.windows(2) {
        if w[1].1 <= floor {
            fast = true;
            break;
        }
        let s = (w[1].1 / w[0].1).log2();
        steepest = steepest.min(s);
        if s < -power {
            fast = true;
        }
    }
    rep.push(Quantity::info("steepest_shell_slope", steepest));
    rep.push(Quantity::holds("superpolynomial", fast, true, Provenance::Trivial));
    rep.series("dual_shell_max", ["xi", "max_abs_transform"], shells);
    rep.note("superpolynomial decay passes the exponent claim vacuously");
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graded::{GradedLayout, NormVariant, OrderVector, Rational};
    use crate::verify::report::Verdict;

    #[test]
    fn inverse_root_on_line() {
        let l = GradedLayout::euclidean(1).unwrap();
        let k = KernelModel::flag_power(&l, OrderVector::from_ratios(&[(-1, 2)]), NormVariant::Smooth(1)).unwrap();
        let r = check_fourier("f", &k, &FourierParams::default(), &CheckContext::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{:#?}", r.quantities);
    }

    #[test]
    fn gaussian_is_superpolynomial() {
        let l = GradedLayout::euclidean(1).unwrap();
        let k = KernelModel::gaussian(&l, 1.0).unwrap();
        let r = check_fourier("f", &k, &FourierParams::default(), &CheckContext::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{:#?}", r.quantities);
    }

    #[test]
    fn flag_plane() {
        let l = GradedLayout::flag(vec![(Rational::from_integer(1), 1), (Rational::from_integer(1), 1)]).unwrap();
        let k = KernelModel::flag_power(&l, OrderVector::from_ratios(&[(-1, 2), (-1, 2)]), NormVariant::Smooth(1)).unwrap();
        let r = check_fourier("f", &k, &FourierParams::default(), &CheckContext::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{:#?}", r.quantities);
    }
}
