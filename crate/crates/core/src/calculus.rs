//! Exact order arithmetic for the kernel classes `F(nu)`, `F0(nu)` and `S(nu)`.
//!
//! Everything here is rational; nothing touches floating point.

use std::fmt;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{arg, Error, Result};
use crate::graded::{GradedLayout, MultiIndex, OrderVector, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClassTag {
    F,
    F0,
    S,
}

impl fmt::Display for ClassTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClassTag::F => "F",
            ClassTag::F0 => "F0",
            ClassTag::S => "S",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KernelClass {
    pub tag: ClassTag,
    pub layout: GradedLayout,
    pub order: OrderVector,
}

impl KernelClass {
    pub fn new(tag: ClassTag, layout: GradedLayout, order: OrderVector) -> Result<Self> {
        if order.len() != layout.d() {
            return Err(Error::Shape {
                expected: layout.d(),
                got: order.len(),
            });
        }
        Ok(KernelClass { tag, layout, order })
    }

    pub fn f(layout: GradedLayout, order: OrderVector) -> Result<Self> {
        Self::new(ClassTag::F, layout, order)
    }

    fn expect(&self, tag: ClassTag) -> Result<()> {
        if self.tag != tag {
            return Err(Error::Class(format!("expected a {tag} class, got {}", self.tag)));
        }
        Ok(())
    }
}

impl fmt::Display for KernelClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.tag, self.order)
    }
}

/// Outcome of the convolution gate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComposabilityVerdict {
    pub composable: bool,
    /// 1-based layers with `mu_k + nu_k <= -Q_k`.
    pub failing_layers: Vec<usize>,
    pub result: Option<KernelClass>,
}

impl fmt::Display for ComposabilityVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.result {
            Some(c) if self.composable => write!(f, "{c}"),
            _ => {
                let layers: Vec<String> = self.failing_layers.iter().map(|k| k.to_string()).collect();
                write!(f, "not composable: failing layers {{{}}}", layers.join(","))
            }
        }
    }
}

/// Class of `x^alpha D^beta P`: `mu_k = nu_k - |alpha_k| + |beta_k|`.
pub fn monomial_derivative_order(class: &KernelClass, alpha: &MultiIndex, beta: &MultiIndex) -> Result<KernelClass> {
    monomial_derivative_with_sign(class, alpha, beta, 1)
}

/// Opposite-sign rule `mu_k = nu_k + |alpha_k| - |beta_k|`; kept for the
/// numerical sign-discrimination check.
pub fn monomial_derivative_order_flipped(
    class: &KernelClass,
    alpha: &MultiIndex,
    beta: &MultiIndex,
) -> Result<KernelClass> {
    monomial_derivative_with_sign(class, alpha, beta, -1)
}

fn monomial_derivative_with_sign(
    class: &KernelClass,
    alpha: &MultiIndex,
    beta: &MultiIndex,
    sign: i64,
) -> Result<KernelClass> {
    class.expect(ClassTag::F)?;
    let la = class.layout.layer_lengths(alpha)?;
    let lb = class.layout.layer_lengths(beta)?;
    let s = Rational::from_integer(sign);
    let order = class
        .order
        .0
        .iter()
        .zip(la.iter().zip(&lb))
        .map(|(nu, (a, b))| nu + s * (b - a))
        .collect();
    KernelClass::new(ClassTag::F, class.layout.clone(), OrderVector(order))
}

/// Dual-side class: `mu_k = -Q_k - nu_k`.
pub fn fourier_order(class: &KernelClass) -> Result<KernelClass> {
    class.expect(ClassTag::F)?;
    let order = class
        .order
        .0
        .iter()
        .zip(class.layout.q_vec())
        .map(|(nu, q)| -q - nu)
        .collect();
    KernelClass::new(ClassTag::F, class.layout.clone(), OrderVector(order))
}

fn same_layout(a: &KernelClass, b: &KernelClass) -> Result<()> {
    if a.layout != b.layout {
        return Err(arg(
            "layout",
            format!("convolution needs one layout, got {} and {}", a.layout, b.layout),
        ));
    }
    Ok(())
}

/// Convolution gate for `F` classes and the unconditional `F0` rule.
pub fn convolution_order(a: &KernelClass, b: &KernelClass) -> Result<ComposabilityVerdict> {
    same_layout(a, b)?;
    if a.tag != b.tag {
        return Err(Error::Class(format!(
            "mixed-class convolution {} * {} has no rule",
            a.tag, b.tag
        )));
    }
    let sum = a.order.add(&b.order);
    match a.tag {
        ClassTag::F => {
            let failing: Vec<usize> = sum
                .0
                .iter()
                .zip(a.layout.q_vec())
                .enumerate()
                .filter(|(_, (s, q))| **s <= -*q)
                .map(|(k, _)| k + 1)
                .collect();
            let composable = failing.is_empty();
            Ok(ComposabilityVerdict {
                composable,
                failing_layers: failing,
                result: composable.then(|| KernelClass {
                    tag: ClassTag::F,
                    layout: a.layout.clone(),
                    order: sum,
                }),
            })
        }
        ClassTag::F0 => Ok(ComposabilityVerdict {
            composable: true,
            failing_layers: Vec::new(),
            result: Some(KernelClass {
                tag: ClassTag::F0,
                layout: a.layout.clone(),
                order: sum,
            }),
        }),
        ClassTag::S => Err(Error::Class(
            "use s_convolution_order for S classes".into(),
        )),
    }
}

/// `S(mu) * S(nu) -> S(mu + nu)`.
pub fn s_convolution_order(a: &KernelClass, b: &KernelClass) -> Result<KernelClass> {
    same_layout(a, b)?;
    a.expect(ClassTag::S)?;
    b.expect(ClassTag::S)?;
    KernelClass::new(ClassTag::S, a.layout.clone(), a.order.add(&b.order))
}

/// Normalization exponent `nu_j` and the reduced class on the layout with
/// layer `j` (1-based) removed.
pub fn cancellation_exponent(class: &KernelClass, j: usize) -> Result<(Rational, KernelClass)> {
    class.expect(ClassTag::F)?;
    if j == 0 || j > class.layout.d() {
        return Err(arg("j", format!("layer index {j} outside 1..={}", class.layout.d())));
    }
    let layout = class.layout.remove_layer(j)?;
    let order: Vec<Rational> = class
        .order
        .0
        .iter()
        .enumerate()
        .filter(|(k, _)| k + 1 != j)
        .map(|(_, v)| *v)
        .collect();
    Ok((
        class.order.0[j - 1],
        KernelClass::new(ClassTag::F, layout, OrderVector(order))?,
    ))
}

/// True iff every `nu_j < 0`, in which case size estimates imply cancellation.
pub fn cancellation_free(class: &KernelClass) -> bool {
    class.order.0.iter().all(|v| v.is_negative())
}

/// Sum of an order vector, used by the cancellation bookkeeping.
pub fn order_sum(v: &OrderVector) -> Rational {
    v.0.iter().fold(Rational::zero(), |a, b| a + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    fn line() -> GradedLayout {
        GradedLayout::euclidean(1).unwrap()
    }

    fn class(tag: ClassTag, layout: GradedLayout, v: &[(i64, i64)]) -> KernelClass {
        KernelClass::new(tag, layout, OrderVector::from_ratios(v)).unwrap()
    }

    #[test]
    fn derivative_rules() {
        let c = class(ClassTag::F, line(), &[(0, 1)]);
        let a = MultiIndex(vec![1]);
        let z = MultiIndex(vec![0]);
        assert_eq!(monomial_derivative_order(&c, &z, &z).unwrap(), c);
        assert_eq!(monomial_derivative_order(&c, &a, &z).unwrap().order.0, vec![r(-1, 1)]);
        assert_eq!(monomial_derivative_order_flipped(&c, &a, &z).unwrap().order.0, vec![r(1, 1)]);
        let h = GradedLayout::new(vec![(r(1, 1), 2), (r(2, 1), 1)]).unwrap();
        let c = class(ClassTag::F, h.clone(), &[(0, 1), (0, 1)]);
        let b = MultiIndex::from_blocks(&h, &[vec![1, 0], vec![1]]).unwrap();
        let m = monomial_derivative_order(&c, &MultiIndex::zero(3), &b).unwrap();
        assert_eq!(m.order.0, vec![r(1, 1), r(2, 1)]);
    }

    #[test]
    fn fourier_examples() {
        let h = GradedLayout::new(vec![(r(1, 1), 2), (r(2, 1), 1)]).unwrap();
        let c = class(ClassTag::F, h, &[(0, 1), (0, 1)]);
        assert_eq!(fourier_order(&c).unwrap().order.0, vec![r(-2, 1), r(-2, 1)]);
        assert_eq!(fourier_order(&fourier_order(&c).unwrap()).unwrap(), c);
        let c = class(ClassTag::F, line(), &[(-1, 2)]);
        assert_eq!(fourier_order(&c).unwrap(), c);
    }

    #[test]
    fn convolution_gate() {
        let a = class(ClassTag::F, line(), &[(-1, 2)]);
        let v = convolution_order(&a, &a).unwrap();
        assert!(!v.composable);
        assert_eq!(v.failing_layers, vec![1]);
        let a0 = class(ClassTag::F0, line(), &[(-1, 2)]);
        let v = convolution_order(&a0, &a0).unwrap();
        assert!(v.composable);
        assert_eq!(v.result.unwrap().to_string(), "F0[-1]");
        let p = GradedLayout::flag(vec![(r(1, 1), 2), (r(1, 1), 2)]).unwrap();
        let z = class(ClassTag::F, p, &[(0, 1), (0, 1)]);
        let v = convolution_order(&z, &z).unwrap();
        assert!(v.composable);
        assert_eq!(v.result.unwrap().order, z.order);
        assert!(convolution_order(&a, &a0).is_err());
    }

    #[test]
    fn s_classes() {
        let p = GradedLayout::flag(vec![(r(1, 1), 1), (r(1, 1), 1)]).unwrap();
        let a = class(ClassTag::S, p.clone(), &[(-1, 1), (2, 1)]);
        let b = class(ClassTag::S, p, &[(3, 1), (-1, 1)]);
        assert_eq!(s_convolution_order(&a, &b).unwrap().order.0, vec![r(2, 1), r(1, 1)]);
        assert_eq!(s_convolution_order(&a, &b).unwrap(), s_convolution_order(&b, &a).unwrap());
    }

    #[test]
    fn cancellation_exponents() {
        let c = class(ClassTag::F, line(), &[(-1, 2)]);
        let (e, red) = cancellation_exponent(&c, 1).unwrap();
        assert_eq!(e, r(-1, 2));
        assert_eq!(red.layout.d(), 0);
        let l3 = GradedLayout::new(vec![(r(1, 1), 1), (r(2, 1), 1), (r(3, 1), 1)]).unwrap();
        let c = class(ClassTag::F, l3, &[(1, 3), (2, 5), (-7, 2)]);
        let (e, red) = cancellation_exponent(&c, 2).unwrap();
        assert_eq!(e, r(2, 5));
        assert_eq!(red.order.0, vec![r(1, 3), r(-7, 2)]);
        assert!(!cancellation_free(&c));
        assert!(cancellation_free(&class(ClassTag::F, line(), &[(-1, 4)])));
    }
}
