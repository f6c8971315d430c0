use std::cell::RefCell;
use std::sync::Arc;

use crate::calculus::cancellation_exponent;
use crate::error::{arg, Error, Result};
use crate::graded::to_f64;
use crate::kernels::{KernelModel, SingularSet, TestFunction, Valued};
use crate::quadrature::{aitken, half_line, integrate, QuadOptions};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairOptions {
    /// First exclusion radius, relative to the test-function scale.
    pub delta0: f64,
    pub max_halvings: usize,
    pub rel_tol: f64,
    pub quad: QuadOptions,
}

impl Default for PairOptions {
    fn default() -> Self {
        PairOptions {
            delta0: 1e-2,
            max_halvings: 40,
            rel_tol: 1e-9,
            quad: QuadOptions::tol(1e-15, 1e-12),
        }
    }
}

/// Records the first error raised inside an infallible quadrature callback.
struct Trap(RefCell<Option<Error>>);

impl Trap {
    fn new() -> Self {
        Trap(RefCell::new(None))
    }

    fn wrap(&self, r: Result<f64>) -> f64 {
        match r {
            Ok(v) => v,
            Err(e) => {
                self.0.borrow_mut().get_or_insert(e);
                0.0
            }
        }
    }

    fn check<T>(self, v: T) -> Result<T> {
        match self.0.into_inner() {
            Some(e) => Err(e),
            None => Ok(v),
        }
    }
}

/// Integral over `R^n` of a smooth integrand; coordinate `i` has length scale `scales[i]`.
fn smooth_integral(g: &dyn Fn(&[f64]) -> Result<f64>, scales: &[f64], q: QuadOptions) -> Result<f64> {
    fn rec(g: &dyn Fn(&[f64]) -> Result<f64>, scales: &[f64], prefix: &mut Vec<f64>, q: QuadOptions) -> Result<f64> {
        let i = prefix.len();
        if i == scales.len() {
            return g(prefix);
        }
        let trap = Trap::new();
        let h = |t: f64| {
            let mut s = 0.0;
            for sign in [1.0, -1.0] {
                let mut p = prefix.clone();
                p.push(sign * t);
                s += trap.wrap(rec(g, scales, &mut p, q));
            }
            s
        };
        let v = half_line(&h, 0.0, scales[i], q)?.value;
        trap.check(v)
    }
    rec(g, scales, &mut Vec::new(), q)
}

/// `lim_{delta -> 0} int_{|z| >= delta} g(z) dz` over `R^n`, `n <= 2`, along
/// `delta_k = delta0 2^-k` with Aitken extrapolation.
fn excluded_integral(g: &dyn Fn(&[f64]) -> Result<f64>, n: usize, scale: f64, opts: &PairOptions) -> Result<Valued> {
    let trap = Trap::new();
    let q = opts.quad;
    let shell = |r: f64| -> f64 {
        match n {
            1 => trap.wrap(g(&[r])) + trap.wrap(g(&[-r])),
            2 => {
                let ring = |th: f64| trap.wrap(g(&[r * th.cos(), r * th.sin()]));
                let half = std::f64::consts::PI;
                let v = integrate(&ring, 0.0, half, q).and_then(|a| Ok(a.value + integrate(&ring, half, 2.0 * half, q)?.value));
                r * trap.wrap(v)
            }
            _ => unreachable!(),
        }
    };
    if n == 0 || n > 2 {
        return Err(arg(
            "kernel",
            format!("symmetric exclusion needs a singular block of dimension 1 or 2, got {n}"),
        ));
    }
    let mut delta = opts.delta0 * scale;
    let mut s = half_line(&shell, delta, scale, q)?.value;
    let mut seq = vec![s];
    let mut prev: Option<f64> = None;
    for _ in 0..opts.max_halvings {
        let next = 0.5 * delta;
        s += integrate(&shell, next, delta, q)?.value;
        delta = next;
        seq.push(s);
        let k = seq.len();
        if k < 3 {
            continue;
        }
        let a = aitken(seq[k - 3], seq[k - 2], seq[k - 1]);
        if let Some(p) = prev {
            let diff = (a - p).abs();
            if diff <= opts.rel_tol * a.abs() + 1e-14 * seq[0].abs() + 1e-300 {
                return trap.check(Valued { value: a, error: diff });
            }
        }
        prev = Some(a);
    }
    if let Some(e) = trap.0.into_inner() {
        return Err(e);
    }
    Err(Error::Quadrature(format!(
        "exclusion extrapolation did not converge after {} halvings (last estimate {:e})",
        opts.max_halvings,
        prev.unwrap_or(s)
    )))
}

/// `int f(delta_R x) P(x) dx`, with symmetric exclusion around the singular set.
pub fn pair(kernel: &KernelModel, f: &TestFunction, r: f64) -> Result<Valued> {
    pair_with(kernel, f, r, &PairOptions::default())
}

pub fn pair_with(kernel: &KernelModel, f: &TestFunction, r: f64, opts: &PairOptions) -> Result<Valued> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(arg("R", format!("must be positive, got {r}")));
    }
    let l = &kernel.layout;
    if f.layout != *l {
        return Err(arg("f", "test function and kernel live on different layouts"));
    }
    let n = l.total_dim();
    let scales: Vec<f64> = (0..n).map(|i| r.powf(-l.exponents_f64()[l.layer_of(i)])).collect();
    pair_function(kernel, &|x: &[f64]| f.value_dilated(x, r), &scales, opts)
}

/// `int g(x) P(x) dx` for a smooth, rapidly decreasing `g` whose coordinate
/// `i` varies on the length scale `scales[i]`; symmetric exclusion around the
/// singular set.
pub fn pair_function(kernel: &KernelModel, g: &dyn Fn(&[f64]) -> f64, scales: &[f64], opts: &PairOptions) -> Result<Valued> {
    let l = &kernel.layout;
    if scales.len() != l.total_dim() {
        return Err(Error::Shape {
            expected: l.total_dim(),
            got: scales.len(),
        });
    }
    let integrand = |x: &[f64]| -> Result<f64> {
        let fv = g(x);
        if fv == 0.0 {
            return Ok(0.0);
        }
        Ok(fv * kernel.eval_unchecked(x))
    };
    match kernel.singular {
        SingularSet::None => Ok(Valued {
            value: smooth_integral(&integrand, scales, opts.quad)?,
            error: 0.0,
        }),
        SingularSet::Origin if l.d() == 1 => {
            let n1 = l.dim(0);
            excluded_integral(&integrand, n1, scales[0], opts)
        }
        SingularSet::Origin | SingularSet::Hyperplane => {
            let n1 = l.dim(0);
            let rest = &scales[n1..];
            let outer = |z: &[f64]| -> Result<f64> {
                if rest.is_empty() {
                    return integrand(z);
                }
                let inner = |y: &[f64]| {
                    let mut x = z.to_vec();
                    x.extend_from_slice(y);
                    integrand(&x)
                };
                smooth_integral(&inner, rest, opts.quad)
            };
            excluded_integral(&outer, n1, scales[0], opts)
        }
    }
}

/// Principal-value pairing against a test function with vanishing moments
/// in the last block up to `moment_degree`.
pub fn pv_pair(kernel: &KernelModel, f: &TestFunction, moment_degree: u32) -> Result<Valued> {
    f.moment_check(moment_degree)?;
    pair(kernel, f, 1.0)
}

/// Kernel in the variables other than layer `j` (1-based):
/// `y -> R^{-nu_j} int phi(delta_R z) P(y, z) dz`, with the reduced claimed class.
pub fn flag_cancellation_restrict(kernel: &KernelModel, j: usize, phi: &TestFunction, r: f64) -> Result<KernelModel> {
    let l = &kernel.layout;
    if l.d() < 2 {
        return Err(arg("kernel", "restriction needs at least two layers"));
    }
    let (nu_j, reduced) = cancellation_exponent(&kernel.class, j)?;
    if !(r > 0.0) {
        return Err(arg("R", format!("must be positive, got {r}")));
    }
    let block = l.block(j - 1);
    if phi.layout.total_dim() != block.len() || phi.layout.d() != 1 || phi.layout.exponent(0) != l.exponent(j - 1) {
        return Err(arg("phi", format!("test function must live on layer {j} alone")));
    }
    let norm = r.powf(-to_f64(&nu_j));
    let scale = r.powf(-l.exponents_f64()[j - 1]);
    let k = kernel.clone();
    let phi = phi.clone();
    let opts = PairOptions::default();
    let value = Arc::new(move |y: &[f64]| -> f64 {
        let block = k.layout.block(j - 1);
        let g = |z: &[f64]| -> Result<f64> {
            let pv = phi.value_dilated(z, r);
            if pv == 0.0 {
                return Ok(0.0);
            }
            let mut x = Vec::with_capacity(k.layout.total_dim());
            x.extend_from_slice(&y[..block.start]);
            x.extend_from_slice(z);
            x.extend_from_slice(&y[block.start..]);
            Ok(pv * k.eval_unchecked(&x))
        };
        let v = if j == 1 && k.singular != SingularSet::None {
            excluded_integral(&g, block.len(), scale, &opts).map(|v| v.value)
        } else {
            smooth_integral(&g, &vec![scale; block.len()], opts.quad)
        };
        v.map(|v| norm * v).unwrap_or(f64::NAN)
    });
    Ok(KernelModel::custom(
        &format!("{}|restrict(j={j},R={r})", kernel.id),
        reduced,
        SingularSet::Hyperplane,
        value,
        None,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graded::{GradedLayout, NormVariant, OrderVector, Rational};
    use crate::kernels::TestFamily;
    use crate::special::gamma;

    fn line() -> GradedLayout {
        GradedLayout::euclidean(1).unwrap()
    }

    fn power(nu: (i64, i64)) -> KernelModel {
        KernelModel::flag_power(&line(), OrderVector::from_ratios(&[nu]), NormVariant::Smooth(1)).unwrap()
    }

    #[test]
    fn gaussian_against_inverse_root() {
        let k = power((-1, 2));
        let f = TestFunction::gaussian(&line());
        for r in [0.1, 1.0, 7.0] {
            let v = pair(&k, &f, r).unwrap();
            let want = r.powf(-0.5) * gamma(0.25);
            assert!((v.value - want).abs() < 1e-8 * want, "R={r}: {} vs {want}", v.value);
        }
    }

    #[test]
    fn principal_values() {
        let pv = KernelModel::pv_odd_1d(1.0);
        let even = TestFunction::gaussian(&line());
        assert_eq!(pair(&pv, &even, 1.0).unwrap().value, 0.0);
        let odd = TestFunction::new(&line(), TestFamily::HermiteGaussian { coord: 0, degree: 1 }).with_amplitude(0.5);
        let v = pv_pair(&pv, &odd, 0).unwrap();
        assert!((v.value - std::f64::consts::PI.sqrt()).abs() < 1e-9);
        assert!(pv_pair(&pv, &even, 0).is_err());
    }

    #[test]
    fn tensor_restriction_separates() {
        let p = GradedLayout::flag(vec![(Rational::from_integer(1), 1), (Rational::from_integer(1), 1)]).unwrap();
        let p1 = power((-1, 2));
        let p2 = power((-1, 3));
        let (a, b) = (p1.clone(), p2.clone());
        let class = crate::calculus::KernelClass::f(p.clone(), OrderVector::from_ratios(&[(-1, 2), (-1, 3)])).unwrap();
        let t = KernelModel::custom(
            "tensor",
            class,
            SingularSet::Hyperplane,
            Arc::new(move |x: &[f64]| a.eval_unchecked(&x[..1]) * b.eval_unchecked(&x[1..])),
            None,
        );
        let phi = TestFunction::gaussian(&line());
        let r = 3.0;
        let red = flag_cancellation_restrict(&t, 2, &phi, r).unwrap();
        let y = 0.8;
        let want = r.powf(1.0 / 3.0) * pair(&p2, &phi, r).unwrap().value * p1.evaluate(&[y]).unwrap();
        let got = red.evaluate(&[y]).unwrap();
        assert!((got - want).abs() < 1e-8 * want.abs(), "{got} vs {want}");
        assert_eq!(red.class.layout.d(), 1);
    }
}
