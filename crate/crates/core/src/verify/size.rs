//! Size estimates, truncation uniformity and the monomial-derivative sign test.

use serde::{Deserialize, Serialize};

use crate::calculus::{monomial_derivative_order, monomial_derivative_order_flipped};
use crate::error::{arg, Error, Result};
use crate::graded::{to_f64, GradedLayout, MultiIndex, NormVariant, OrderVector, Side};
use crate::groupconv::composition::monotone_with_floor;
use crate::kernels::{KernelForm, KernelModel, Mollifier};
use crate::spectral::{fit_exponents, forward_transform, halton, sample_kernel, GridSpec, SampleOptions};
use crate::verify::report::{Provenance, Quantity, VerificationReport};
use crate::verify::{params_json, CheckContext};

/// Log-spaced sample cloud for primal-side regressions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleSpec {
    /// `log10` range of each layer's scale `t_k`, block size `t_k^{p_k}`.
    pub log10_range: [f64; 2],
    pub count: usize,
    /// Keep points with `|x|_{k+1} >= separation |x|_k`.
    pub separation: f64,
}

impl Default for SampleSpec {
    fn default() -> Self {
        SampleSpec {
            log10_range: [-2.0, 2.0],
            count: 200,
            separation: 4.0,
        }
    }
}

pub(crate) fn kernel_norm(k: &KernelModel) -> NormVariant {
    match &k.form {
        KernelForm::FlagPower { norm, .. } => *norm,
        _ => k.layout.default_norm(),
    }
}

/// Quasi-random points, independent log-uniform scale per layer.
pub(crate) fn sample_points(layout: &GradedLayout, norm: NormVariant, spec: &SampleSpec, seed: u64) -> Result<Vec<Vec<f64>>> {
    let ranges = vec![spec.log10_range; layout.d()];
    sample_points_ranges(layout, norm, &ranges, spec.count, spec.separation, seed)
}

/// As [`sample_points`] with a separate `log10` scale range per layer.
pub(crate) fn sample_points_ranges(
    layout: &GradedLayout,
    norm: NormVariant,
    ranges: &[[f64; 2]],
    count: usize,
    separation: f64,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    if ranges.iter().any(|r| !(r[1] > r[0])) {
        return Err(arg("log10_range", "needs lo < hi"));
    }
    let d = layout.d();
    let dims: usize = (0..d).map(|k| 1 + layout.dim(k)).sum();
    let mut out = Vec::new();
    let start = 1 + seed % 1_000_000;
    for t in 0..(400 * count as u64) {
        if out.len() >= count {
            break;
        }
        let u = halton(start + t, dims);
        let mut x = Vec::with_capacity(layout.total_dim());
        let mut c = 0;
        let mut ok = true;
        for k in 0..d {
            let [lo, hi] = ranges[k];
            let scale = 10f64.powf(lo + (hi - lo) * u[c]).powf(layout.exponents_f64()[k]);
            c += 1;
            let n = layout.dim(k);
            let dir: Vec<f64> = if n == 1 {
                vec![if u[c] < 0.5 { -1.0 } else { 1.0 }]
            } else {
                u[c..c + n].iter().map(|v| 2.0 * v - 1.0).collect()
            };
            c += n;
            let len = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !(0.1..=1.0).contains(&len) {
                ok = false;
                break;
            }
            x.extend(dir.iter().map(|v| scale * v / len));
        }
        if !ok {
            continue;
        }
        let pn = layout.partial_norms_primal(&x, norm);
        if separation > 1.0 && pn.windows(2).any(|w| w[1] < separation * w[0]) {
            continue;
        }
        out.push(x);
    }
    if out.len() < 10 * d.max(1) {
        return Err(Error::Regression(format!("only {} sample points satisfy the separation", out.len())));
    }
    Ok(out)
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn claimed_order(kernel: &KernelModel, claimed: &Option<Vec<String>>) -> Result<OrderVector> {
    match claimed {
        Some(v) => {
            let o = OrderVector::parse(v)?;
            if o.len() != kernel.layout.d() {
                return Err(Error::Shape {
                    expected: kernel.layout.d(),
                    got: o.len(),
                });
            }
            Ok(o)
        }
        None => Ok(kernel.class.order.clone()),
    }
}

/// Values of `f` at the points; more than 1% failures is an error.
pub(crate) fn evaluate_all(points: &[Vec<f64>], f: impl Fn(&[f64]) -> Result<f64>) -> Result<Vec<(Vec<f64>, f64)>> {
    let mut out = Vec::new();
    let mut failed = 0;
    let mut first = None;
    for x in points {
        match f(x) {
            Ok(v) if v.is_finite() => out.push((x.clone(), v)),
            Ok(v) => {
                failed += 1;
                first.get_or_insert_with(|| format!("value {v} at {x:?}"));
            }
            Err(e) => {
                failed += 1;
                first.get_or_insert_with(|| e.to_string());
            }
        }
    }
    if failed * 100 > points.len() {
        return Err(Error::Quadrature(format!(
            "{failed} of {} evaluations failed; first: {}",
            points.len(),
            first.unwrap_or_default()
        )));
    }
    Ok(out)
}

fn alpha_label(a: &MultiIndex) -> String {
    format!("{:?}", a.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SizeParams {
    /// Derivative multiindices in flat coordinates; empty means `alpha = 0` only.
    pub alphas: Vec<Vec<u32>>,
    /// Claimed order, defaulting to the kernel's class.
    pub claimed: Option<Vec<String>>,
    pub samples: SampleSpec,
    pub exponent_tol: f64,
    /// Cap on `max / median` of the normalized size ratio.
    pub ratio_cap: f64,
}

impl Default for SizeParams {
    fn default() -> Self {
        SizeParams {
            alphas: Vec::new(),
            claimed: None,
            samples: SampleSpec::default(),
            exponent_tol: 0.05,
            ratio_cap: 20.0,
        }
    }
}

/// `|D^alpha P(x)| <= C prod_k |x|_k^{-nu_k - Q_k - |alpha_k|}` over a sample cloud.
pub fn check_size(id: &str, kernel: &KernelModel, p: &SizeParams, ctx: &CheckContext) -> Result<VerificationReport> {
    let l = &kernel.layout;
    let nu = claimed_order(kernel, &p.claimed)?;
    let norm = kernel_norm(kernel);
    let alphas: Vec<MultiIndex> = if p.alphas.is_empty() {
        vec![MultiIndex::zero(l.total_dim())]
    } else {
        p.alphas.iter().map(|a| MultiIndex(a.clone())).collect()
    };
    let mut rep = VerificationReport::new(id, "size", params_json(p));
    rep.subjects.push(format!("{}: {}{}", kernel.id, kernel.class.tag, nu));
    rep.seeds.push(ctx.seed);
    let points = sample_points(l, norm, &p.samples, ctx.seed)?;
    for alpha in &alphas {
        if alpha.0.len() != l.total_dim() {
            return Err(Error::Shape {
                expected: l.total_dim(),
                got: alpha.0.len(),
            });
        }
        let lens: Vec<f64> = l.layer_lengths(alpha)?.iter().map(to_f64).collect();
        let targets: Vec<f64> = (0..l.d())
            .map(|k| -to_f64(&nu.0[k]) - l.q_f64_k(k) - lens[k])
            .collect();
        let vals = evaluate_all(&points, |x| kernel.evaluate_derivative(alpha, x).map(|v| v.value))?;
        size_quantities(&mut rep, &alpha_label(alpha), l, norm, &vals, &vals, &targets, p.exponent_tol * ctx.tol_scale, p.ratio_cap)?;
        if l.total_dim() == 1 {
            let pts = vals.iter().filter(|(x, _)| x[0] > 0.0).map(|(x, v)| (x[0], v.abs())).collect();
            rep.series(format!("size{}", alpha_label(alpha)), ["x", "abs_derivative"], pts);
        }
    }
    Ok(rep.finish())
}

/// Ratio boundedness and per-layer exponent regression for one derivative.
#[allow(clippy::too_many_arguments)]
pub(crate) fn size_quantities(
    rep: &mut VerificationReport,
    label: &str,
    l: &GradedLayout,
    norm: NormVariant,
    vals: &[(Vec<f64>, f64)],
    fit_vals: &[(Vec<f64>, f64)],
    targets: &[f64],
    tol: f64,
    cap: f64,
) -> Result<f64> {
    let mut ratios: Vec<f64> = vals
        .iter()
        .map(|(x, v)| {
            let pn = l.partial_norms_primal(x, norm);
            v.abs() * (0..l.d()).map(|k| pn[k].powf(-targets[k])).product::<f64>()
        })
        .collect();
    let max = ratios.iter().cloned().fold(0.0, f64::max);
    let med = median(&mut ratios);
    rep.push(Quantity::info(format!("size_constant{label}"), max));
    rep.push(Quantity::at_most(format!("ratio_max_over_median{label}"), max / med, cap, Provenance::Stated));
    let fit = fit_exponents(l, Side::Primal, fit_vals, norm, "log-uniform layer scales")?;
    for k in 0..l.d() {
        rep.push(
            Quantity::abs(format!("exponent{label}[{}]", k + 1), fit.exponents[k], targets[k], tol, Provenance::Derived)
                .with_error(fit.std_errors[k]),
        );
    }
    rep.fit(format!("size{label}"), fit, targets.to_vec());
    Ok(max)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TruncationParams {
    pub eps: Vec<f64>,
    pub alphas: Vec<Vec<u32>>,
    pub samples: SampleSpec,
    /// Cap on `max_eps C_eps / min_eps C_eps`.
    pub spread_cap: f64,
    /// Grid for the dual-side convergence; one-dimensional layouts only.
    pub dual_counts: Option<Vec<usize>>,
    pub dual_spacing: f64,
    pub annulus: [f64; 2],
}

impl Default for TruncationParams {
    fn default() -> Self {
        TruncationParams {
            eps: vec![1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625],
            alphas: Vec::new(),
            samples: SampleSpec {
                log10_range: [-2.0, 3.0],
                count: 400,
                separation: 4.0,
            },
            spread_cap: 2.0,
            dual_counts: Some(vec![8192]),
            dual_spacing: 1.0 / 16.0,
            annulus: [1.0, 2.0],
        }
    }
}

/// Size constants of `phi(eps .) P` across `eps`, exact agreement on the
/// plateau and convergence of the transforms on an annulus.
pub fn check_truncation_uniformity(id: &str, kernel: &KernelModel, p: &TruncationParams, ctx: &CheckContext) -> Result<VerificationReport> {
    let l = &kernel.layout;
    if p.eps.is_empty() || p.eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(arg("eps", "need a decreasing, nonempty list"));
    }
    let nu = &kernel.class.order;
    let norm = kernel_norm(kernel);
    let moll = Mollifier::for_layout(l);
    let mut rep = VerificationReport::new(id, "truncation_uniformity", params_json(p));
    rep.subjects.push(format!("{}: {}", kernel.id, kernel.class));
    rep.seeds.push(ctx.seed);
    let points = sample_points(l, norm, &p.samples, ctx.seed)?;
    let alphas: Vec<MultiIndex> = if p.alphas.is_empty() {
        vec![MultiIndex::zero(l.total_dim()), {
            let mut a = vec![0; l.total_dim()];
            a[0] = 1;
            MultiIndex(a)
        }]
    } else {
        p.alphas.iter().map(|a| MultiIndex(a.clone())).collect()
    };
    let truncs: Vec<KernelModel> = p.eps.iter().map(|&e| kernel.truncate(moll, e)).collect::<Result<_>>()?;
    for alpha in &alphas {
        let lens: Vec<f64> = l.layer_lengths(alpha)?.iter().map(to_f64).collect();
        let mut consts = Vec::new();
        for (t, &e) in truncs.iter().zip(&p.eps) {
            let vals = evaluate_all(&points, |x| t.evaluate_derivative(alpha, x).map(|v| v.value))?;
            let c = vals
                .iter()
                .map(|(x, v)| {
                    let pn = l.partial_norms_primal(x, norm);
                    v.abs() * (0..l.d()).map(|k| pn[k].powf(to_f64(&nu.0[k]) + l.q_f64_k(k) + lens[k])).product::<f64>()
                })
                .fold(0.0, f64::max);
            consts.push((e, c));
        }
        let cmax = consts.iter().map(|c| c.1).fold(0.0, f64::max);
        let cmin = consts.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
        let label = alpha_label(alpha);
        rep.push(Quantity::info(format!("size_constant_max{label}"), cmax));
        rep.push(Quantity::at_most(format!("constant_spread{label}"), cmax / cmin, p.spread_cap, Provenance::Derived));
        rep.series(format!("truncation_constants{label}"), ["eps", "size_constant"], consts);
    }
    // The mollifier is exactly 1 on its plateau, so the truncation is the kernel there.
    let mut worst: f64 = 0.0;
    let mut checked = 0usize;
    for (t, &e) in truncs.iter().zip(&p.eps) {
        for x in &points {
            if moll.eval_f64(l, x, e) == 1.0 {
                checked += 1;
                worst = worst.max((t.eval_unchecked(x) - kernel.eval_unchecked(x)).abs());
            }
        }
    }
    rep.push(Quantity::info("plateau_points", checked as f64));
    rep.push(Quantity::at_most("plateau_max_difference", worst, 0.0, Provenance::Trivial));
    match &p.dual_counts {
        Some(counts) if l.total_dim() == 1 => {
            let grid = GridSpec::new(counts.clone(), vec![p.dual_spacing; counts.len()])?;
            let opts = SampleOptions::default();
            let fields = p
                .eps
                .iter()
                .map(|&e| forward_transform(&sample_kernel(kernel, &grid, Some(e), &opts)?))
                .collect::<Result<Vec<_>>>()?;
            let mask = crate::groupconv::composition::annulus_mask(&fields[0], p.annulus)?;
            let diffs: Vec<f64> = fields
                .windows(2)
                .map(|w| mask.iter().map(|&i| (w[0].values[i] - w[1].values[i]).norm()).fold(0.0, f64::max))
                .collect();
            let scale = mask.iter().map(|&i| fields.last().unwrap().values[i].norm()).fold(0.0, f64::max);
            for (i, dv) in diffs.iter().enumerate() {
                rep.push(Quantity::info(format!("dual_cauchy[{}]", i + 1), *dv));
            }
            rep.push(Quantity::holds("dual_cauchy_monotone", monotone_with_floor(&diffs, scale), true, Provenance::Stated).diagnostic());
            rep.series(
                "dual_cauchy",
                ["eps", "annulus_sup_difference"],
                p.eps.iter().zip(&diffs).map(|(e, d)| (*e, *d)).collect(),
            );
        }
        Some(_) => rep.note("dual-side convergence runs on one-dimensional layouts only; skipped"),
        None => {}
    }
    Ok(rep.finish())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonomialCase {
    pub alpha: Vec<u32>,
    pub beta: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SignRuleParams {
    pub cases: Vec<MonomialCase>,
    pub samples: SampleSpec,
    pub tol: f64,
}

impl Default for SignRuleParams {
    fn default() -> Self {
        SignRuleParams {
            cases: vec![
                MonomialCase { alpha: vec![2], beta: vec![1] },
                MonomialCase { alpha: vec![1], beta: vec![2] },
                MonomialCase { alpha: vec![0], beta: vec![2] },
                MonomialCase { alpha: vec![3], beta: vec![0] },
            ],
            samples: SampleSpec::default(),
            tol: 0.05,
        }
    }
}

/// Fits the order of `x^alpha D^beta P` and compares it with both
/// monomial-derivative rules.
pub fn check_sign_rule(id: &str, kernel: &KernelModel, p: &SignRuleParams, ctx: &CheckContext) -> Result<VerificationReport> {
    let l = &kernel.layout;
    let norm = kernel_norm(kernel);
    let mut rep = VerificationReport::new(id, "sign_rule", params_json(p));
    rep.subjects.push(format!("{}: {}", kernel.id, kernel.class));
    rep.seeds.push(ctx.seed);
    let points = sample_points(l, norm, &p.samples, ctx.seed)?;
    let tol = p.tol * ctx.tol_scale;
    for case in &p.cases {
        let alpha = MultiIndex(case.alpha.clone());
        let beta = MultiIndex(case.beta.clone());
        let fixed = monomial_derivative_order(&kernel.class, &alpha, &beta)?;
        let flipped = monomial_derivative_order_flipped(&kernel.class, &alpha, &beta)?;
        let vals = evaluate_all(&points, |x| {
            let d = kernel.evaluate_derivative(&beta, x)?.value;
            Ok(d * x.iter().zip(&alpha.0).map(|(v, &a)| v.powi(a as i32)).product::<f64>())
        })?;
        let fit = fit_exponents(l, Side::Primal, &vals, norm, "log-uniform layer scales")?;
        let la = l.layer_lengths(&alpha)?;
        let lb = l.layer_lengths(&beta)?;
        let label = format!("[a={:?},b={:?}]", alpha.0, beta.0);
        let mut targets = Vec::new();
        for k in 0..l.d() {
            // size exponent -mu_k - Q_k
            let mu = -fit.exponents[k] - l.q_f64_k(k);
            let want = to_f64(&fixed.order.0[k]);
            let gap = 2.0 * (to_f64(&lb[k]) - to_f64(&la[k]));
            targets.push(-want - l.q_f64_k(k));
            rep.push(Quantity::abs(format!("order{label}[{}]", k + 1), mu, want, tol, Provenance::Derived).with_error(fit.std_errors[k]));
            rep.push(Quantity::abs(
                format!("gap_to_flipped_rule{label}[{}]", k + 1),
                mu - to_f64(&flipped.order.0[k]),
                gap,
                tol,
                Provenance::Derived,
            ));
        }
        rep.fit(format!("monomial_derivative{label}"), fit, targets);
    }
    Ok(rep.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graded::Rational;
    use crate::verify::report::Verdict;

    fn line_power(n: i64, d: i64) -> KernelModel {
        let l = GradedLayout::euclidean(1).unwrap();
        KernelModel::flag_power(&l, OrderVector::from_ratios(&[(n, d)]), NormVariant::Smooth(1)).unwrap()
    }

    fn ctx() -> CheckContext {
        CheckContext::default()
    }

    fn value(r: &VerificationReport, name: &str) -> f64 {
        r.quantities.iter().find(|q| q.name == name).unwrap_or_else(|| panic!("{name}")).value
    }

    #[test]
    fn inverse_root_exponents() {
        let k = line_power(-1, 2);
        let p = SizeParams {
            alphas: vec![vec![0], vec![1]],
            ..Default::default()
        };
        let r = check_size("s", &k, &p, &ctx()).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{:#?}", r.quantities);
        assert!((value(&r, "exponent[0][1]") + 0.5).abs() < 1e-9);
        assert!((value(&r, "exponent[1][1]") + 1.5).abs() < 1e-9);
    }

    #[test]
    fn wrong_claim_fails() {
        let k = line_power(-1, 2);
        let p = SizeParams {
            claimed: Some(vec!["-1/4".into()]),
            ..Default::default()
        };
        assert_eq!(check_size("s", &k, &p, &ctx()).unwrap().verdict, Verdict::ViolatesBound);
    }

    #[test]
    fn flag_pair_of_layers() {
        let l = GradedLayout::flag(vec![(Rational::from_integer(1), 1), (Rational::from_integer(1), 1)]).unwrap();
        let k = KernelModel::flag_power(&l, OrderVector::from_ratios(&[(-1, 2), (-1, 2)]), NormVariant::Smooth(1)).unwrap();
        let p = SizeParams {
            alphas: vec![vec![1, 1]],
            exponent_tol: 0.1,
            ..Default::default()
        };
        let r = check_size("s", &k, &p, &ctx()).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{:#?}", r.quantities);
    }

    #[test]
    fn truncations_uniform() {
        let r = check_truncation_uniformity("t", &line_power(-1, 2), &TruncationParams::default(), &ctx()).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{:#?}", r.quantities);
        assert!(value(&r, "plateau_points") > 100.0);
    }

    #[test]
    fn sign_rule_matches() {
        let r = check_sign_rule("g", &line_power(-1, 2), &SignRuleParams::default(), &ctx()).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{:#?}", r.quantities);
        // x^2 D P: -3/2, opposite sign gives 1/2
        assert!((value(&r, "gap_to_flipped_rule[a=[2],b=[1]][1]") + 2.0).abs() < 0.05);
    }
}
