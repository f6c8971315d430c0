//! Invariants of the order calculus and of the group laws, checked against
//! arithmetic done here rather than through the library helpers.

use flagkernel::calculus::{convolution_order, fourier_order, monomial_derivative_order, ClassTag, KernelClass};
use flagkernel::classcalc::{evaluate, Outcome};
use flagkernel::groupconv::{GroupLaw, NilpotentAlgebra};
use flagkernel::{GradedLayout, MultiIndex, OrderVector, Rational};
use proptest::prelude::*;

/// `(p_k, n_k)` with `p_1 = 1` and nondecreasing exponents.
fn layers() -> impl Strategy<Value = Vec<(Rational, usize)>> {
    prop::collection::vec((1i64..4, 1i64..4, 1usize..4), 1..4).prop_map(|raw| {
        let mut p = Rational::from_integer(1);
        raw.iter()
            .enumerate()
            .map(|(k, &(num, den, n))| {
                if k > 0 {
                    p += Rational::new(num, den);
                }
                (p, n)
            })
            .collect()
    })
}

fn rational() -> impl Strategy<Value = Rational> {
    (-24i64..24, 1i64..9).prop_map(|(n, d)| Rational::new(n, d))
}

/// Layout with two order vectors and two multiindex pairs on it.
#[derive(Debug, Clone)]
struct Case {
    layers: Vec<(Rational, usize)>,
    nu: Vec<Rational>,
    mu: Vec<Rational>,
    alpha: Vec<u32>,
    beta: Vec<u32>,
}

fn case() -> impl Strategy<Value = Case> {
    layers().prop_flat_map(|l| {
        let d = l.len();
        let n: usize = l.iter().map(|x| x.1).sum();
        (
            Just(l),
            prop::collection::vec(rational(), d),
            prop::collection::vec(rational(), d),
            prop::collection::vec(0u32..3, n),
            prop::collection::vec(0u32..3, n),
        )
            .prop_map(|(layers, nu, mu, alpha, beta)| Case { layers, nu, mu, alpha, beta })
    })
}

fn class(c: &Case, v: &[Rational]) -> KernelClass {
    KernelClass::f(GradedLayout::reduced(c.layers.clone()).unwrap(), OrderVector(v.to_vec())).unwrap()
}

fn q(c: &Case) -> Vec<Rational> {
    c.layers.iter().map(|(p, n)| p * Rational::from_integer(*n as i64)).collect()
}

/// Per-layer `p_k * sum of the entries of the block`.
fn lengths(c: &Case, a: &[u32]) -> Vec<Rational> {
    let mut off = 0;
    c.layers
        .iter()
        .map(|(p, n)| {
            let s: u32 = a[off..off + n].iter().sum();
            off += n;
            p * Rational::from_integer(s as i64)
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn transform_matches_oracle_and_is_involutive(c in case()) {
        let k = class(&c, &c.nu);
        let once = fourier_order(&k).unwrap();
        let want: Vec<Rational> = c.nu.iter().zip(q(&c)).map(|(v, q)| -q - v).collect();
        prop_assert_eq!(&once.order.0, &want);
        prop_assert_eq!(fourier_order(&once).unwrap(), k);
    }

    #[test]
    fn gate_matches_oracle(c in case()) {
        let v = convolution_order(&class(&c, &c.nu), &class(&c, &c.mu)).unwrap();
        let failing: Vec<usize> = (0..c.nu.len()).filter(|&k| c.nu[k] + c.mu[k] <= -q(&c)[k]).map(|k| k + 1).collect();
        prop_assert_eq!(v.composable, failing.is_empty());
        prop_assert_eq!(&v.failing_layers, &failing);
        if let Some(r) = v.result {
            let sum: Vec<Rational> = c.nu.iter().zip(&c.mu).map(|(a, b)| a + b).collect();
            prop_assert_eq!(r.order.0, sum);
        }
        let w = convolution_order(&class(&c, &c.mu), &class(&c, &c.nu)).unwrap();
        prop_assert_eq!(w.failing_layers, failing);
    }

    #[test]
    fn restricted_classes_always_compose(c in case()) {
        let l = GradedLayout::reduced(c.layers.clone()).unwrap();
        let a = KernelClass::new(ClassTag::F0, l.clone(), OrderVector(c.nu.clone())).unwrap();
        let b = KernelClass::new(ClassTag::F0, l, OrderVector(c.mu.clone())).unwrap();
        let v = convolution_order(&a, &b).unwrap();
        prop_assert!(v.composable);
        prop_assert_eq!(v.result.unwrap().tag, ClassTag::F0);
    }

    #[test]
    fn derivative_shift_matches_oracle(c in case()) {
        let k = class(&c, &c.nu);
        let r = monomial_derivative_order(&k, &MultiIndex(c.alpha.clone()), &MultiIndex(c.beta.clone())).unwrap();
        let (la, lb) = (lengths(&c, &c.alpha), lengths(&c, &c.beta));
        let want: Vec<Rational> = (0..c.nu.len()).map(|i| c.nu[i] - la[i] + lb[i]).collect();
        prop_assert_eq!(&r.order.0, &want);
        // a monomial weight and an equal derivative cancel
        let same = monomial_derivative_order(&k, &MultiIndex(c.alpha.clone()), &MultiIndex(c.alpha.clone())).unwrap();
        prop_assert_eq!(same, k);
    }

    #[test]
    fn derivative_shifts_compose(c in case()) {
        let k = class(&c, &c.nu);
        let (a, b) = (MultiIndex(c.alpha.clone()), MultiIndex(c.beta.clone()));
        let zero = MultiIndex::zero(c.alpha.len());
        let stepwise = monomial_derivative_order(&monomial_derivative_order(&k, &a, &zero).unwrap(), &zero, &b).unwrap();
        prop_assert_eq!(stepwise, monomial_derivative_order(&k, &a, &b).unwrap());
    }

    #[test]
    fn expression_language_agrees(c in case()) {
        let l = GradedLayout::reduced(c.layers.clone()).unwrap();
        let k = class(&c, &c.nu);
        let text = format!("fourier(fourier({k}))");
        prop_assert_eq!(evaluate(&text, &l).unwrap(), Outcome::Class(k.clone()));
        let conv = format!("conv({}, {})", k, class(&c, &c.mu));
        let composable = (0..c.nu.len()).all(|i| c.nu[i] + c.mu[i] > -q(&c)[i]);
        prop_assert_eq!(evaluate(&conv, &l).unwrap().is_class(), composable);
    }
}

fn laws() -> Vec<GroupLaw> {
    vec![
        GroupLaw::from_algebra(&NilpotentAlgebra::heisenberg()).unwrap(),
        GroupLaw::from_algebra(&NilpotentAlgebra::filiform(3).unwrap()).unwrap(),
        GroupLaw::from_algebra(&NilpotentAlgebra::filiform(4).unwrap()).unwrap(),
    ]
}

fn point(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0f64..2.0, n)
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * (1.0 + x.abs().max(y.abs())))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn laws_are_associative(which in 0usize..3, seed in prop::collection::vec(-2.0f64..2.0, 15)) {
        let law = &laws()[which];
        let n = law.dim();
        let (x, y, z) = (&seed[..n], &seed[5..5 + n], &seed[10..10 + n]);
        let left = law.multiply(&law.multiply(x, y), z);
        let right = law.multiply(x, &law.multiply(y, z));
        prop_assert!(close(&left, &right, 1e-12), "{left:?} vs {right:?}");
    }

    #[test]
    fn dilations_are_automorphisms(which in 0usize..3, seed in prop::collection::vec(-2.0f64..2.0, 10), t in 0.1f64..5.0) {
        let law = &laws()[which];
        let n = law.dim();
        let l = &law.algebra.layout;
        let (x, y) = (&seed[..n], &seed[5..5 + n]);
        let lhs = l.dilate(t, &law.multiply(x, y)).unwrap();
        let rhs = law.multiply(&l.dilate(t, x).unwrap(), &l.dilate(t, y).unwrap());
        prop_assert!(close(&lhs, &rhs, 1e-12));
    }

    #[test]
    fn inverse_and_identity(which in 0usize..3, x in point(5)) {
        let law = &laws()[which];
        let x = &x[..law.dim()];
        let zero = vec![0.0; law.dim()];
        prop_assert!(close(&law.multiply(x, &law.inverse(x)), &zero, 1e-14));
        prop_assert!(close(&law.multiply(&zero, x), x, 0.0));
        prop_assert!(close(&law.left_divide(x, &law.multiply(x, &zero)), &zero, 1e-14));
    }

    #[test]
    fn heisenberg_matches_closed_form(x in point(3), y in point(3)) {
        let law = &laws()[0];
        let z = law.multiply(&x, &y);
        let want = [x[0] + y[0], x[1] + y[1], x[2] + y[2] + 0.5 * (x[0] * y[1] - x[1] * y[0])];
        prop_assert!(close(&z, &want, 1e-15));
    }
}
