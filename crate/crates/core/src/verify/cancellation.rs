//! Normalized pairings against dilated test functions, recursively through
//! restricted kernels for flag layouts.

use serde::{Deserialize, Serialize};

use crate::calculus::cancellation_free;
use crate::error::{arg, Result};
use crate::graded::{to_f64, GradedLayout, MultiIndex};
use crate::kernels::testfn::default_seminorm_index;
use crate::kernels::{flag_cancellation_restrict, pair, schwartz_seminorm, standard_bank, KernelForm, KernelModel, SeminormGrid, TestFamily, TestFunction};
use crate::special::gamma;
use crate::verify::report::{Provenance, Quantity, VerificationReport};
use crate::verify::size::{evaluate_all, kernel_norm, sample_points_ranges, size_quantities};
use crate::verify::{params_json, CheckContext};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CancellationParams {
    /// `log10` range of the dilation parameter `R`.
    pub r_log10_range: [f64; 2],
    pub r_count: usize,
    /// Schwartz seminorm index; `None` uses `2 ceil(Q) + 2`.
    pub seminorm_index: Option<u32>,
    /// Cap on `R^{-nu} |<P, phi o delta_R>| / ||phi||_N`.
    pub constant_cap: f64,
    /// Relative tolerance of the Gaussian scaling constant, when a closed form exists.
    pub oracle_rel_tol: f64,
    /// Layers to restrict along (1-based); empty means all.
    pub layers: Vec<usize>,
    /// Dilations used for restricted kernels.
    pub restrict_r: Vec<f64>,
    /// Sample count for restricted-kernel size checks.
    pub restrict_samples: usize,
    pub restrict_exponent_tol: f64,
    /// Cap on the spread of restricted size constants across `R` and the bank.
    pub restrict_spread_cap: f64,
    /// `R` values for pairings of restricted kernels.
    pub restrict_pair_count: usize,
    pub max_depth: usize,
}

impl Default for CancellationParams {
    fn default() -> Self {
        CancellationParams {
            r_log10_range: [-3.0, 3.0],
            r_count: 13,
            seminorm_index: None,
            constant_cap: 10.0,
            oracle_rel_tol: 1e-4,
            layers: Vec::new(),
            restrict_r: vec![0.5, 2.0],
            restrict_samples: 60,
            restrict_exponent_tol: 0.1,
            restrict_spread_cap: 20.0,
            restrict_pair_count: 7,
            max_depth: 2,
        }
    }
}

fn geometric_log10(range: [f64; 2], n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![10f64.powf(range[0])];
    }
    (0..n)
        .map(|i| 10f64.powf(range[0] + (range[1] - range[0]) * i as f64 / (n - 1) as f64))
        .collect()
}

/// `int exp(-x^2) |x|^c dx = Gamma((1 + c) / 2)` for the line kernel `|x|^c`.
fn gaussian_constant(kernel: &KernelModel) -> Option<f64> {
    match &kernel.form {
        KernelForm::FlagPower { order, .. } if kernel.layout.total_dim() == 1 && !kernel.is_truncated() => {
            let c = -to_f64(&order.0[0]) - 1.0;
            (c > -1.0).then(|| gamma(0.5 * (1.0 + c)))
        }
        _ => None,
    }
}

/// Pairing bounds over `R` on a one-layer kernel; returns the largest
/// normalized constant.
fn one_layer(rep: &mut VerificationReport, prefix: &str, kernel: &KernelModel, rs: &[f64], bank: &[TestFunction], n_index: u32) -> Result<f64> {
    let nu = to_f64(&kernel.class.order.0[0]);
    let grid = SeminormGrid::for_dim(kernel.layout.total_dim());
    let mut worst: f64 = 0.0;
    for f in bank {
        let s = schwartz_seminorm(f, n_index, grid);
        let mut series = Vec::new();
        for &r in rs {
            let v = pair(kernel, f, r)?;
            let normalized = r.powf(-nu) * v.value.abs();
            worst = worst.max(normalized / s);
            series.push((r, normalized));
        }
        if prefix.is_empty() {
            rep.series(format!("pairing[{}]", f.label()), ["R", "normalized_pairing"], series);
        }
    }
    Ok(worst)
}

pub fn check_cancellation(id: &str, kernel: &KernelModel, p: &CancellationParams, ctx: &CheckContext) -> Result<VerificationReport> {
    let l = &kernel.layout;
    let mut rep = VerificationReport::new(id, "cancellation", params_json(p));
    rep.subjects.push(format!("{}: {}", kernel.id, kernel.class));
    rep.seeds.push(ctx.seed);
    if cancellation_free(&kernel.class) {
        rep.note("every order entry is negative, so the size estimates already imply the cancellation bounds");
    }
    rep.note("uniformity is tested over the recorded test bank and R range only");
    let rs = geometric_log10(p.r_log10_range, p.r_count);
    if l.d() == 1 {
        let n_index = p.seminorm_index.unwrap_or_else(|| default_seminorm_index(l));
        let worst = one_layer(&mut rep, "", kernel, &rs, &standard_bank(l), n_index)?;
        rep.push(Quantity::at_most("pairing_constant_over_seminorm", worst, p.constant_cap, Provenance::Stated));
        if let Some(target) = gaussian_constant(kernel) {
            let f = TestFunction::gaussian(l);
            let nu = to_f64(&kernel.class.order.0[0]);
            let mut far = target;
            for &r in &rs {
                let v = r.powf(-nu) * pair(kernel, &f, r)?.value;
                if (v / target - 1.0).abs() > (far / target - 1.0).abs() {
                    far = v;
                }
            }
            rep.push(Quantity::rel("gaussian_scaling_constant", far, target, p.oracle_rel_tol * ctx.tol_scale, Provenance::Derived));
        }
    } else {
        flag_recursive(&mut rep, "", kernel, p, p.max_depth, ctx)?;
    }
    Ok(rep.finish())
}

/// Restricts along each configured layer, size-checks the restricted
/// kernels and recurses into their cancellation bounds.
fn flag_recursive(rep: &mut VerificationReport, prefix: &str, kernel: &KernelModel, p: &CancellationParams, depth: usize, ctx: &CheckContext) -> Result<()> {
    let l = &kernel.layout;
    if depth == 0 {
        return Err(arg("max_depth", format!("recursion depth exceeded at {prefix}")));
    }
    let layers: Vec<usize> = if p.layers.is_empty() || !prefix.is_empty() {
        (1..=l.d()).collect()
    } else {
        p.layers.clone()
    };
    for &j in &layers {
        if j == 0 || j > l.d() {
            return Err(arg("layers", format!("layer {j} outside 1..={}", l.d())));
        }
        let block = GradedLayout::reduced(vec![(l.exponent(j - 1), l.dim(j - 1))])?;
        let bank = [
            TestFunction::gaussian(&block),
            TestFunction::new(&block, TestFamily::HermiteGaussian { coord: 0, degree: 2 }),
        ];
        let n_index = p.seminorm_index.unwrap_or_else(|| default_seminorm_index(&block));
        let mut consts = Vec::new();
        let mut pair_consts = Vec::new();
        for phi in &bank {
            let s = schwartz_seminorm(phi, n_index, SeminormGrid::for_dim(block.total_dim()));
            for &r in &p.restrict_r {
                let k = flag_cancellation_restrict(kernel, j, phi, r)?;
                let rl = &k.layout;
                let label = format!("{prefix}restrict(j={j},{},R={r})", phi.label());
                let nu: Vec<f64> = k.class.order.0.iter().map(to_f64).collect();
                let targets: Vec<f64> = (0..rl.d()).map(|m| -nu[m] - rl.q_f64_k(m)).collect();
                // the removed layer sits at scale 1/R
                let centre = -r.log10();
                let norm = kernel_norm(&k);
                let all = sample_points_ranges(rl, norm, &vec![[centre - 3.0, centre + 3.0]; rl.d()], p.restrict_samples, 4.0, ctx.seed)?;
                // homogeneous regime: layers before j well inside 1/R, layers after j well outside
                let sharp_ranges: Vec<[f64; 2]> = (0..rl.d())
                    .map(|m| if m + 1 < j { [centre - 4.0, centre - 1.0] } else { [centre + 1.0, centre + 4.0] })
                    .collect();
                let sharp = sample_points_ranges(rl, norm, &sharp_ranges, p.restrict_samples, 4.0, ctx.seed)?;
                let zero = MultiIndex::zero(rl.total_dim());
                let eval = |x: &[f64]| k.evaluate_derivative(&zero, x).map(|v| v.value);
                let vals = evaluate_all(&all, eval)?;
                if vals.iter().all(|(_, v)| *v == 0.0) {
                    rep.note(format!("{label}: restricted kernel vanishes identically"));
                    continue;
                }
                let sharp_vals = evaluate_all(&sharp, eval)?;
                let c = size_quantities(rep, &label, rl, norm, &vals, &sharp_vals, &targets, p.restrict_exponent_tol * ctx.tol_scale, f64::INFINITY)?;
                consts.push(c / s);
                if rl.d() == 1 {
                    let rs = geometric_log10([centre - 3.0, centre + 3.0], p.restrict_pair_count);
                    let rbank = [TestFunction::gaussian(rl), TestFunction::new(rl, TestFamily::HermiteGaussian { coord: 0, degree: 1 })];
                    let rn = p.seminorm_index.unwrap_or_else(|| default_seminorm_index(rl));
                    pair_consts.push(one_layer(rep, &label, &k, &rs, &rbank, rn)? / s);
                } else {
                    flag_recursive(rep, &format!("{label}/"), &k, p, depth - 1, ctx)?;
                }
            }
        }
        let max = consts.iter().cloned().fold(0.0, f64::max);
        let min = consts.iter().cloned().fold(f64::INFINITY, f64::min);
        rep.push(Quantity::info(format!("{prefix}restricted_size_constant[j={j}]"), max));
        rep.push(Quantity::at_most(
            format!("{prefix}restricted_size_spread[j={j}]"),
            max / min,
            p.restrict_spread_cap,
            Provenance::Stated,
        ));
        if !pair_consts.is_empty() {
            let worst = pair_consts.iter().cloned().fold(0.0, f64::max);
            rep.push(Quantity::at_most(
                format!("{prefix}restricted_pairing_constant[j={j}]"),
                worst,
                p.constant_cap,
                Provenance::Stated,
            ));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graded::{NormVariant, OrderVector, Rational};
    use crate::verify::report::Verdict;

    fn value(r: &VerificationReport, name: &str) -> f64 {
        r.quantities.iter().find(|q| q.name == name).unwrap().value
    }

    #[test]
    fn inverse_root_scaling_constant() {
        let l = GradedLayout::euclidean(1).unwrap();
        let k = KernelModel::flag_power(&l, OrderVector::from_ratios(&[(-1, 2)]), NormVariant::Smooth(1)).unwrap();
        let r = check_cancellation("c", &k, &CancellationParams::default(), &CheckContext::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{:#?}", r.quantities);
        assert!((value(&r, "gaussian_scaling_constant") / 3.625609908221908 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn principal_value_bounded() {
        let k = KernelModel::pv_odd_1d(1.0);
        let r = check_cancellation("c", &k, &CancellationParams::default(), &CheckContext::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{:#?}", r.quantities);
    }

    #[test]
    fn flag_restrictions() {
        let l = GradedLayout::flag(vec![(Rational::from_integer(1), 1), (Rational::from_integer(1), 1)]).unwrap();
        let k = KernelModel::flag_power(&l, OrderVector::from_ratios(&[(-1, 2), (-1, 2)]), NormVariant::Smooth(1)).unwrap();
        let p = CancellationParams {
            layers: vec![2],
            ..Default::default()
        };
        let r = check_cancellation("c", &k, &p, &CheckContext::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{:#?}", r.quantities);
    }
}
