//! Acceptance harness: one PASS/FAIL line per criterion, nonzero exit if any fails.
//!
//! The default suite runs once for criteria 2 to 7 and again for the
//! reproducibility check. Targets are recomputed here from first principles
//! rather than read back from the reports.

use std::path::Path;
use std::time::{Duration, Instant};

use flagkernel::calculus::{convolution_order, fourier_order, monomial_derivative_order, KernelClass};
use flagkernel::cli::output::{suite_json, RunInfo};
use flagkernel::cli::RunConfig;
use flagkernel::verify::{run_check, run_suite, VerificationReport};
use flagkernel::{GradedLayout, MultiIndex, OrderVector, Rational};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GAMMA_QUARTER: f64 = 3.625_609_908_221_908_3;

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(checks: &[(bool, String)]) -> Outcome {
    let ok = checks.iter().all(|c| c.0);
    let detail = checks
        .iter()
        .map(|(pass, s)| if *pass { s.clone() } else { format!("{s} [FAILED]") })
        .collect::<Vec<_>>()
        .join("; ");
    Outcome { ok, detail }
}

fn report<'a>(rs: &'a [VerificationReport], id: &str) -> &'a VerificationReport {
    rs.iter().find(|r| r.check_id == id).unwrap_or_else(|| panic!("default suite has no check `{id}`"))
}

fn value(r: &VerificationReport, name: &str) -> f64 {
    r.quantities
        .iter()
        .find(|q| q.name == name)
        .unwrap_or_else(|| panic!("{}: no quantity `{name}`", r.check_id))
        .value
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

/// Random layout with strictly increasing exponents, and orders on it.
fn random_case(rng: &mut ChaCha8Rng) -> (Vec<(Rational, usize)>, Vec<Rational>, Vec<Rational>) {
    let d = rng.random_range(1..=3);
    let mut p = Rational::from_integer(1);
    let mut layers = Vec::new();
    for k in 0..d {
        if k > 0 {
            p += Rational::new(rng.random_range(1..4), rng.random_range(1..4));
        }
        layers.push((p, rng.random_range(1..=3)));
    }
    let mut order = || (0..d).map(|_| Rational::new(rng.random_range(-20..20), rng.random_range(1..7))).collect::<Vec<_>>();
    let nu = order();
    let mu = order();
    (layers, nu, mu)
}

fn criterion_1(cfg: &RunConfig) -> Outcome {
    let sc = cfg.context().unwrap();
    let spec = cfg.check.iter().find(|c| c.id() == "order-calculus").unwrap();
    let t0 = Instant::now();
    let r = run_check(spec, &sc, &cfg.check_context()).unwrap();
    let elapsed = t0.elapsed();
    let mismatches: f64 = ["involution_mismatches", "additivity_mismatches", "gate_mismatches", "derivative_shift_mismatches"]
        .iter()
        .map(|n| value(&r, n))
        .sum();

    // a second, local pass over 1000 cases with the rules written out here
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xacce);
    let mut local_bad = 0;
    let t1 = Instant::now();
    for _ in 0..1000 {
        let (layers, nu, mu) = random_case(&mut rng);
        let q: Vec<Rational> = layers.iter().map(|(p, n)| p * Rational::from_integer(*n as i64)).collect();
        let l = GradedLayout::new(layers.clone()).unwrap();
        let a = KernelClass::f(l.clone(), OrderVector(nu.clone())).unwrap();
        let b = KernelClass::f(l.clone(), OrderVector(mu.clone())).unwrap();
        let fa = fourier_order(&a).unwrap();
        let inv_ok = fourier_order(&fa).unwrap() == a && (0..nu.len()).all(|k| fa.order.0[k] == -q[k] - nu[k]);
        let gate = convolution_order(&a, &b).unwrap();
        let gate_ok = gate.composable == (0..nu.len()).all(|k| nu[k] + mu[k] > -q[k]);
        let n: usize = layers.iter().map(|x| x.1).sum();
        let alpha: Vec<u32> = (0..n).map(|_| rng.random_range(0..3)).collect();
        let beta: Vec<u32> = (0..n).map(|_| rng.random_range(0..3)).collect();
        let zero = MultiIndex::zero(n);
        let both = monomial_derivative_order(&a, &MultiIndex(alpha.clone()), &MultiIndex(beta.clone())).unwrap();
        let split = monomial_derivative_order(&monomial_derivative_order(&a, &MultiIndex(alpha), &zero).unwrap(), &zero, &MultiIndex(beta)).unwrap();
        if !(inv_ok && gate_ok && both == split) {
            local_bad += 1;
        }
    }
    let local = t1.elapsed();
    outcome(&[
        (value(&r, "cases") >= 1000.0 && mismatches == 0.0, format!("{} suite cases, {mismatches} mismatches", value(&r, "cases"))),
        (local_bad == 0, format!("1000 local cases, {local_bad} mismatches")),
        (elapsed < Duration::from_secs(1) && local < Duration::from_secs(1), format!("runtime {} / {}", secs(elapsed), secs(local))),
    ])
}

fn counts_of(r: &VerificationReport) -> Vec<u64> {
    r.params["counts"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).collect()
}

fn criterion_2(rs: &[VerificationReport]) -> Outcome {
    let root = report(rs, "fourier-root");
    let plane = report(rs, "fourier-plane");
    let e = value(root, "dual_exponent[1]");
    let pre = value(root, "dual_prefactor");
    let oracle = (2.0 * std::f64::consts::PI).sqrt();
    let (p1, p2) = (value(plane, "dual_exponent[1]"), value(plane, "dual_exponent[2]"));
    let grids_ok = counts_of(root).iter().all(|&n| n <= 4096) && counts_of(plane).iter().all(|&n| n <= 512);
    let time = root.runtime + plane.runtime;
    outcome(&[
        ((e + 0.5).abs() <= 0.05, format!("1D exponent {e:.4}")),
        (((pre - oracle) / oracle).abs() <= 0.03, format!("prefactor {pre:.4} vs sqrt(2 pi) = {oracle:.4}")),
        ((p1 + 0.5).abs() <= 0.1 && (p2 + 0.5).abs() <= 0.1, format!("2D exponents {p1:.4}, {p2:.4}")),
        (grids_ok, format!("grids {:?} / {:?}", counts_of(root), counts_of(plane))),
        (time < Duration::from_secs(60), format!("runtime {}", secs(time))),
    ])
}

fn criterion_3(rs: &[VerificationReport]) -> Outcome {
    let r = report(rs, "cancellation-root");
    let c = value(r, "gaussian_scaling_constant");
    let span: Vec<f64> = r.params["r_log10_range"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    outcome(&[
        (((c - GAMMA_QUARTER) / GAMMA_QUARTER).abs() <= 1e-4, format!("R^(1/2) pairing {c:.6} vs Gamma(1/4) = {GAMMA_QUARTER:.6}")),
        (span[1] - span[0] >= 6.0, format!("log10 R in [{}, {}]", span[0], span[1])),
        (r.runtime < Duration::from_secs(30), format!("runtime {}", secs(r.runtime))),
    ])
}

fn criterion_4(rs: &[VerificationReport]) -> Outcome {
    let r = report(rs, "counterexample");
    let f0 = r.params["f0"].as_f64().unwrap();
    let rv: Vec<f64> = r.params["r_values"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    let slope = value(r, "log_slope");
    let line = GradedLayout::euclidean(1).unwrap();
    let half = KernelClass::f(line, OrderVector(vec![Rational::new(-1, 2)])).unwrap();
    let gate = convolution_order(&half, &half).unwrap();
    outcome(&[
        (((slope + 2.0 * f0) / (2.0 * f0)).abs() <= 0.02, format!("slope {slope:.5} vs {}", -2.0 * f0)),
        (rv.first() == Some(&10.0) && rv.last() == Some(&1e4), format!("R from {} to {}", rv[0], rv[rv.len() - 1])),
        (!gate.composable && value(r, "gate_composable") == 0.0, "F(-1/2)*F(-1/2) flagged non-composable".to_string()),
        (r.runtime < Duration::from_secs(30), format!("runtime {}", secs(r.runtime))),
    ])
}

fn criterion_5(cfg: &RunConfig, rs: &[VerificationReport]) -> Outcome {
    let quarter = report(rs, "compose-quarter");
    let heis = report(rs, "compose-heisenberg");
    let e = value(quarter, "phi_exponent[1]");
    // mu + nu per layer from the configured kernel orders
    let sc = cfg.context().unwrap();
    let k = sc.kernel("heis").unwrap();
    let target: Vec<f64> = k.class.order.0.iter().map(|v| 2.0 * *v.numer() as f64 / *v.denom() as f64).collect();
    let got: Vec<f64> = (1..=target.len()).map(|i| value(heis, &format!("phi_exponent[{i}]"))).collect();
    let within = got.iter().zip(&target).all(|(g, t)| (g - t).abs() <= 0.15);
    let halvings = heis.quantities.iter().filter(|q| q.name.starts_with("cauchy[")).count();
    let time = quarter.runtime + heis.runtime;
    outcome(&[
        (value(quarter, "gate_composable") == 1.0 && (e + 0.5).abs() <= 0.1, format!("abelian quarter pair exponent {e:.4}")),
        (value(heis, "gate_composable") == 1.0 && within, format!("Heisenberg exponents {got:.4?} vs {target:?}")),
        (value(heis, "cauchy_monotone") == 1.0 && halvings >= 4, format!("Cauchy monotone over {halvings} halvings")),
        (time < Duration::from_secs(600), format!("runtime {} (central-variable route)", secs(time))),
    ])
}

fn criterion_6(rs: &[VerificationReport]) -> Outcome {
    let mut checks = Vec::new();
    let mut time = Duration::ZERO;
    for id in ["group-law-abelian", "group-law-heisenberg", "group-law-filiform3"] {
        let r = report(rs, id);
        time += r.runtime;
        let n = r.params["samples"].as_u64().unwrap();
        let a = value(r, "associativity_defect");
        let exact = value(r, "polynomial_homogeneity") == 1.0 && value(r, "polynomial_identity") == 1.0;
        checks.push((n >= 1000 && a <= 1e-12 && exact, format!("{id}: {n} triples, defect {a:.1e}")));
    }
    let heis = report(rs, "group-law-heisenberg");
    checks.push((value(heis, "reference_z3") == 1.0, "Heisenberg correction term exact".into()));
    checks.push((time < Duration::from_secs(1), format!("runtime {}", secs(time))));
    outcome(&checks)
}

fn criterion_7(cfg: &RunConfig, rs: &[VerificationReport]) -> Outcome {
    let r = report(rs, "sign-rule-root");
    let tol = r.params["tol"].as_f64().unwrap();
    let sc = cfg.context().unwrap();
    let nu = sc.kernel("root").unwrap().class.order.0[0];
    let nu = *nu.numer() as f64 / *nu.denom() as f64;
    let mut checks = Vec::new();
    for case in r.params["cases"].as_array().unwrap() {
        let sum = |k: &str| case[k].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).sum::<f64>();
        let (a, b) = (sum("alpha"), sum("beta"));
        let label = format!("a=[{a}],b=[{b}]");
        let fitted = value(r, &format!("order[{label}][1]"));
        let gap = value(r, &format!("gap_to_flipped_rule[{label}][1]"));
        checks.push(((fitted - (nu - a + b)).abs() <= tol && (gap - 2.0 * (b - a)).abs() <= tol, format!("{label}: order {fitted:.3}, gap {gap:.3}")));
    }
    checks.push((r.runtime < Duration::from_secs(60), format!("runtime {}", secs(r.runtime))));
    outcome(&checks)
}

fn criterion_8(cfg: &RunConfig, first: &str) -> Outcome {
    let sc = cfg.context().unwrap();
    let again = run_suite(&cfg.check, &sc, &cfg.check_context()).unwrap();
    let second = suite_json(RunInfo::new("verify", cfg.seed, cfg.tol_scale), cfg, &again).unwrap();
    outcome(&[(first.as_bytes() == second.as_bytes(), format!("{} bytes, identical: {}", first.len(), first == second))])
}

fn main() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.toml");
    let cfg = RunConfig::load(&path).expect("default config");

    let mut results = vec![("order calculus exactness", criterion_1(&cfg))];

    let t0 = Instant::now();
    let sc = cfg.context().unwrap();
    let reports = run_suite(&cfg.check, &sc, &cfg.check_context()).expect("default suite");
    let suite_time = t0.elapsed();
    let json = suite_json(RunInfo::new("verify", cfg.seed, cfg.tol_scale), &cfg, &reports).unwrap();

    results.push(("Fourier exponent transfer", criterion_2(&reports)));
    results.push(("cancellation scaling", criterion_3(&reports)));
    results.push(("order-zero counterexample", criterion_4(&reports)));
    results.push(("regularized composition", criterion_5(&cfg, &reports)));
    results.push(("group law correctness", criterion_6(&reports)));
    results.push(("sign discrimination", criterion_7(&cfg, &reports)));
    results.push(("reproducibility", criterion_8(&cfg, &json)));

    println!("default suite: {} checks in {}", reports.len(), secs(suite_time));
    let mut failed = 0;
    for (i, (name, o)) in results.iter().enumerate() {
        println!("criterion {} {} {name}: {}", i + 1, if o.ok { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.ok);
    }
    println!("{} of {} criteria pass", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
