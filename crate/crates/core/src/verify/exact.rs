//! Checks done in exact arithmetic: the order calculus on random classes and
//! the polynomial group laws.

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::calculus::{convolution_order, fourier_order, monomial_derivative_order, KernelClass};
use crate::error::Result;
use crate::graded::{GradedLayout, MultiIndex, OrderVector, Rational};
use crate::groupconv::poly::Poly;
use crate::groupconv::{GroupLaw, NilpotentAlgebra};
use crate::verify::report::{Provenance, Quantity, VerificationReport};
use crate::verify::{params_json, CheckContext};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OrderCalculusParams {
    pub cases: usize,
    pub max_layers: usize,
    pub max_block: usize,
}

impl Default for OrderCalculusParams {
    fn default() -> Self {
        OrderCalculusParams {
            cases: 1000,
            max_layers: 3,
            max_block: 3,
        }
    }
}

fn random_layout(rng: &mut ChaCha8Rng, p: &OrderCalculusParams) -> Result<GradedLayout> {
    let d = rng.random_range(1..=p.max_layers);
    let mut exp = 1i64;
    let mut layers = Vec::with_capacity(d);
    for k in 0..d {
        if k > 0 {
            exp += rng.random_range(0..=2);
        }
        layers.push((Rational::from_integer(exp), rng.random_range(1..=p.max_block)));
    }
    GradedLayout::flag(layers)
}

fn random_order(rng: &mut ChaCha8Rng, d: usize) -> OrderVector {
    const DENOMS: [i64; 5] = [1, 2, 3, 4, 6];
    OrderVector(
        (0..d)
            .map(|_| {
                let den = DENOMS[rng.random_range(0..DENOMS.len())];
                Rational::new(rng.random_range(-6 * den..=2 * den), den)
            })
            .collect(),
    )
}

/// Random classes through the rational calculus: transform involution,
/// additivity of composed orders, the gate against its inequality recomputed
/// from the layer data, and the monomial-derivative shift.
pub fn check_order_calculus(id: &str, p: &OrderCalculusParams, ctx: &CheckContext) -> Result<VerificationReport> {
    let mut rep = VerificationReport::new(id, "order_calculus", params_json(p));
    rep.seeds.push(ctx.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let (mut involution, mut additivity, mut gate, mut shift) = (0usize, 0usize, 0usize, 0usize);
    let mut composable = 0usize;
    for _ in 0..p.cases {
        let l = random_layout(&mut rng, p)?;
        let d = l.d();
        let a = KernelClass::f(l.clone(), random_order(&mut rng, d))?;
        let b = KernelClass::f(l.clone(), random_order(&mut rng, d))?;

        if fourier_order(&fourier_order(&a)?)? != a {
            involution += 1;
        }

        let v = convolution_order(&a, &b)?;
        let mut expect_ok = true;
        let mut sum = Vec::with_capacity(d);
        for (k, layer) in l.layers().iter().enumerate() {
            let q = layer.exponent * Rational::from_integer(layer.dim as i64);
            let s = a.order.0[k] + b.order.0[k];
            expect_ok &= s + q > Rational::zero();
            sum.push(s);
        }
        if v.composable != expect_ok {
            gate += 1;
        }
        if v.composable {
            composable += 1;
            if v.result.as_ref().map(|c| &c.order.0) != Some(&sum) {
                additivity += 1;
            }
        } else if v.result.is_some() {
            additivity += 1;
        }

        let n = l.total_dim();
        let alpha = MultiIndex((0..n).map(|_| rng.random_range(0..3)).collect());
        let beta = MultiIndex((0..n).map(|_| rng.random_range(0..3)).collect());
        let m = monomial_derivative_order(&a, &alpha, &beta)?;
        let ok = (0..d).all(|k| {
            let w = l.layers()[k].exponent;
            let (la, lb) = l.block(k).fold((Rational::zero(), Rational::zero()), |(x, y), i| {
                (x + w * Rational::from_integer(alpha.0[i] as i64), y + w * Rational::from_integer(beta.0[i] as i64))
            });
            m.order.0[k] == a.order.0[k] - la + lb
        });
        if !ok {
            shift += 1;
        }
    }
    rep.push(Quantity::info("cases", p.cases as f64));
    rep.push(Quantity::info("composable_cases", composable as f64));
    rep.push(Quantity::at_most("involution_mismatches", involution as f64, 0.0, Provenance::Trivial));
    rep.push(Quantity::at_most("additivity_mismatches", additivity as f64, 0.0, Provenance::Stated));
    rep.push(Quantity::at_most("gate_mismatches", gate as f64, 0.0, Provenance::Stated));
    rep.push(Quantity::at_most("derivative_shift_mismatches", shift as f64, 0.0, Provenance::Derived));
    Ok(rep.finish())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GroupLawParams {
    pub samples: usize,
    /// Coordinates are drawn from `[-box_size, box_size]`.
    pub box_size: f64,
    pub tol: f64,
}

impl Default for GroupLawParams {
    fn default() -> Self {
        GroupLawParams {
            samples: 1000,
            box_size: 2.0,
            tol: 1e-12,
        }
    }
}

/// Reference `z_k` for the presets with a short closed form.
fn reference_component(name: &str) -> Option<(usize, Poly)> {
    let r = |n, d| Rational::new(n, d);
    match name {
        "heisenberg" => {
            // z3 = x3 + y3 + (x1 y2 - x2 y1) / 2
            let v = |i| Poly::var(6, i);
            let mut p = v(2).add(&v(5));
            p.add_scaled(&v(0).mul(&v(4)), r(1, 2));
            p.add_scaled(&v(1).mul(&v(3)), r(-1, 2));
            Some((2, p))
        }
        "filiform3" => {
            // z4 = x4 + y4 + (x1 y3 - x3 y1) / 2 + (x1 - y1)(x1 y2 - x2 y1) / 12
            let v = |i| Poly::var(8, i);
            let mut p = v(3).add(&v(7));
            p.add_scaled(&v(0).mul(&v(6)), r(1, 2));
            p.add_scaled(&v(2).mul(&v(4)), r(-1, 2));
            let mut w = v(0).mul(&v(5));
            w.add_scaled(&v(1).mul(&v(4)), -Rational::one());
            let mut d = v(0);
            d.add_scaled(&v(4), -Rational::one());
            p.add_scaled(&d.mul(&w), r(1, 12));
            Some((3, p))
        }
        _ => None,
    }
}

pub fn check_group_law(id: &str, algebra: &NilpotentAlgebra, p: &GroupLawParams, ctx: &CheckContext) -> Result<VerificationReport> {
    let mut rep = VerificationReport::new(id, "group_law", params_json(p));
    rep.subjects.push(format!("{} (step {}, dimension {})", algebra.name, algebra.step(), algebra.dim()));
    rep.seeds.push(ctx.seed);
    let law = GroupLaw::from_algebra(algebra)?;
    let n = law.dim();
    rep.push(Quantity::holds("polynomial_identity", law.has_identity(), true, Provenance::Trivial));
    rep.push(Quantity::holds("polynomial_homogeneity", law.is_homogeneous(), true, Provenance::Stated));
    let assoc = law.associativity_defect(p.samples, p.box_size, ctx.seed);
    rep.push(Quantity::at_most("associativity_defect", assoc, p.tol, Provenance::Trivial));

    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let b = p.box_size;
    let point = |rng: &mut ChaCha8Rng| (0..n).map(|_| rng.random_range(-b..=b)).collect::<Vec<f64>>();
    let (mut hom, mut ident) = (0.0f64, 0.0f64);
    let zero = vec![0.0; n];
    let l = &algebra.layout;
    for _ in 0..p.samples {
        let (x, y) = (point(&mut rng), point(&mut rng));
        let t = 0.25 + 3.0 * rng.random::<f64>();
        let lhs = l.dilate(t, &law.multiply(&x, &y))?;
        let rhs = law.multiply(&l.dilate(t, &x)?, &l.dilate(t, &y)?);
        let scale = lhs.iter().map(|v| v.abs()).fold(1.0, f64::max);
        hom = hom.max(lhs.iter().zip(&rhs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale);
        let unit = law.multiply(&x, &law.inverse(&x));
        let same = law.multiply(&x, &zero);
        let worst = unit.iter().map(|v| v.abs()).chain(same.iter().zip(&x).map(|(a, b)| (a - b).abs()));
        ident = ident.max(worst.fold(0.0, f64::max));
    }
    rep.push(Quantity::at_most("dilation_defect", hom, p.tol, Provenance::Stated));
    rep.push(Quantity::at_most("identity_inverse_defect", ident, p.tol, Provenance::Trivial));
    if let Some((k, want)) = reference_component(&algebra.name) {
        rep.push(Quantity::holds(format!("reference_z{}", k + 1), law.components[k] == want, true, Provenance::Derived));
    }
    rep.note(law.canonical_text());
    Ok(rep.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::report::Verdict;

    #[test]
    fn random_orders_consistent() {
        let r = check_order_calculus("o", &OrderCalculusParams::default(), &CheckContext::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{:#?}", r.quantities);
    }

    #[test]
    fn presets_are_groups() {
        for alg in [NilpotentAlgebra::abelian(3).unwrap(), NilpotentAlgebra::heisenberg(), NilpotentAlgebra::filiform(3).unwrap()] {
            let r = check_group_law("g", &alg, &GroupLawParams::default(), &CheckContext::default()).unwrap();
            assert_eq!(r.verdict, Verdict::Pass, "{}: {:#?}", alg.name, r.quantities);
        }
    }

    #[test]
    fn reference_catches_sign() {
        let (_, mut p) = reference_component("heisenberg").unwrap();
        let law = GroupLaw::from_algebra(&NilpotentAlgebra::heisenberg()).unwrap();
        assert_eq!(law.components[2], p);
        p.add_scaled(&Poly::var(6, 0).mul(&Poly::var(6, 4)), -Rational::one());
        assert_ne!(law.components[2], p);
    }
}
