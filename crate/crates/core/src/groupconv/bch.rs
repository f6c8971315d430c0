//! Group laws in exponential coordinates from the Dynkin form of the
//! Campbell-Hausdorff series.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::error::{arg, Result};
use crate::graded::{to_f64, Rational};
use crate::groupconv::algebra::NilpotentAlgebra;
use crate::groupconv::poly::{format_grouped, Monomial, Poly};

/// `z = x * y` with `z_k` a polynomial in `x_1..x_n, y_1..y_n`.
#[derive(Clone, Debug)]
pub struct GroupLaw {
    pub algebra: NilpotentAlgebra,
    pub components: Vec<Poly>,
    compiled: Vec<Vec<(f64, Vec<(usize, i32)>)>>,
}

/// Words over `{X, Y}` (false = X) with their Dynkin coefficients, up to length `step`.
fn dynkin_words(step: usize) -> BTreeMap<Vec<bool>, Rational> {
    let mut out: BTreeMap<Vec<bool>, Rational> = BTreeMap::new();
    let fact = |k: usize| (1..=k as i64).product::<i64>();
    // blocks (r_i, s_i) with r_i + s_i >= 1, sum <= step
    fn rec(
        blocks: &mut Vec<(usize, usize)>,
        left: usize,
        step: usize,
        visit: &mut dyn FnMut(&[(usize, usize)]),
    ) {
        if !blocks.is_empty() {
            visit(blocks);
        }
        for m in 1..=left {
            for r in 0..=m {
                blocks.push((r, m - r));
                rec(blocks, left - m, step, visit);
                blocks.pop();
            }
        }
    }
    let mut visit = |blocks: &[(usize, usize)]| {
        let n = blocks.len() as i64;
        let total: usize = blocks.iter().map(|b| b.0 + b.1).sum();
        let denom: i64 = n * total as i64 * blocks.iter().map(|b| fact(b.0) * fact(b.1)).product::<i64>();
        let sign = if n % 2 == 1 { 1 } else { -1 };
        let mut word = Vec::with_capacity(total);
        for &(r, s) in blocks {
            word.extend(std::iter::repeat_n(false, r));
            word.extend(std::iter::repeat_n(true, s));
        }
        // [.., [a, a]] vanishes
        if total >= 2 && word[total - 1] == word[total - 2] {
            return;
        }
        let e = out.entry(word).or_insert_with(Rational::zero);
        *e += Rational::new(sign, denom);
    };
    let mut blocks = Vec::new();
    rec(&mut blocks, step, step, &mut visit);
    out.retain(|_, c| !c.is_zero());
    out
}

impl GroupLaw {
    pub fn from_algebra(algebra: &NilpotentAlgebra) -> Result<Self> {
        let n = algebra.dim();
        let step = algebra.step();
        if step > 4 {
            return Err(arg("algebra", format!("step {step} exceeds the supported 4")));
        }
        let nv = 2 * n;
        let x: Vec<Poly> = (0..n).map(|i| Poly::var(nv, i)).collect();
        let y: Vec<Poly> = (0..n).map(|i| Poly::var(nv, n + i)).collect();
        let mut z = vec![Poly::zero(); n];
        // right-nested brackets cached by word suffix
        let mut cache: BTreeMap<Vec<bool>, Vec<Poly>> = BTreeMap::new();
        for (word, c) in dynkin_words(step) {
            let v = nested(algebra, &word, &x, &y, &mut cache);
            for k in 0..n {
                z[k].add_scaled(&v[k], c);
            }
        }
        Ok(Self::from_components(algebra, z))
    }

    fn from_components(algebra: &NilpotentAlgebra, components: Vec<Poly>) -> Self {
        let compiled = components
            .iter()
            .map(|p| {
                p.terms
                    .iter()
                    .map(|(m, c)| {
                        let f: Vec<(usize, i32)> = m.iter().enumerate().filter(|(_, &e)| e > 0).map(|(i, &e)| (i, e as i32)).collect();
                        (to_f64(c), f)
                    })
                    .collect()
            })
            .collect();
        GroupLaw {
            algebra: algebra.clone(),
            components,
            compiled,
        }
    }

    pub fn dim(&self) -> usize {
        self.algebra.dim()
    }

    pub fn multiply(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.multiply_into(x, y, &mut out);
        out
    }

    pub fn multiply_into(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        let n = self.dim();
        let var = |i: usize| if i < n { x[i] } else { y[i - n] };
        for (k, terms) in self.compiled.iter().enumerate() {
            out[k] = terms
                .iter()
                .map(|(c, f)| f.iter().fold(*c, |a, &(i, e)| a * var(i).powi(e)))
                .sum();
        }
    }

    /// Inverse in exponential coordinates.
    pub fn inverse(&self, x: &[f64]) -> Vec<f64> {
        x.iter().map(|v| -v).collect()
    }

    /// `y^{-1} x`.
    pub fn left_divide(&self, y: &[f64], x: &[f64]) -> Vec<f64> {
        self.multiply(&self.inverse(y), x)
    }

    /// Bound on `|z_k|` given `|x_i| <= bx[i]` and `|y_i| <= by[i]`.
    pub fn magnitude_bound(&self, bx: &[f64], by: &[f64]) -> Vec<f64> {
        let b: Vec<f64> = bx.iter().chain(by).copied().collect();
        self.components.iter().map(|p| p.magnitude_bound(&b)).collect()
    }

    /// Every monomial of `z_k` has weighted degree `p_k`.
    pub fn is_homogeneous(&self) -> bool {
        let l = &self.algebra.layout;
        let n = self.dim();
        let w = |m: &Monomial| -> Rational {
            m.iter()
                .enumerate()
                .map(|(i, &e)| l.exponent(l.layer_of(i % n)) * Rational::from_integer(e as i64))
                .fold(Rational::zero(), |a, b| a + b)
        };
        self.components
            .iter()
            .enumerate()
            .all(|(k, p)| p.terms.keys().all(|m| w(m) == l.exponent(l.layer_of(k))))
    }

    /// `z(x, 0) = x` and `z(0, y) = y` as polynomials.
    pub fn has_identity(&self) -> bool {
        let n = self.dim();
        self.components.iter().enumerate().all(|(k, p)| {
            let only = |range: std::ops::Range<usize>, var: usize| {
                let sub: Vec<(&Monomial, &Rational)> = p.terms.iter().filter(|(m, _)| m.iter().enumerate().all(|(i, &e)| e == 0 || range.contains(&i))).collect();
                sub.len() == 1 && sub[0].1.is_one() && sub[0].0[var] == 1 && Poly::total_degree(sub[0].0) == 1
            };
            only(0..n, k) && only(n..2 * n, n + k)
        })
    }

    fn names(&self) -> Vec<String> {
        let n = self.dim();
        (1..=n).map(|i| format!("x{i}")).chain((1..=n).map(|i| format!("y{i}"))).collect()
    }

    /// One `z_k = ...` line per coordinate, linear part first and the rest
    /// grouped by coefficient.
    pub fn canonical_text(&self) -> String {
        let n = self.dim();
        let names = self.names();
        let mut s = format!("# group law for `{}` (step {}, dimension {n})\n", self.algebra.name, self.algebra.step());
        if self.algebra.is_abelian() {
            s.push_str("x*y = x + y\n");
        }
        for (k, p) in self.components.iter().enumerate() {
            let mut rest = p.clone();
            let xk = Poly::var(2 * n, k);
            let yk = Poly::var(2 * n, n + k);
            rest.add_scaled(&xk, -Rational::one());
            rest.add_scaled(&yk, -Rational::one());
            s.push_str(&format!("z{} = x{} + y{}{}\n", k + 1, k + 1, k + 1, format_grouped(&rest, &names)));
        }
        s
    }

    /// Largest associativity defect over `count` pseudo-random triples in `[-a, a]^n`.
    pub fn associativity_defect(&self, count: usize, a: f64, seed: u64) -> f64 {
        let n = self.dim();
        (0..count)
            .into_par_iter()
            .map(|t| {
                let u = crate::spectral::halton(seed + 1 + t as u64, 3 * n);
                let p: Vec<f64> = u.iter().map(|v| a * (2.0 * v - 1.0)).collect();
                let (x, y, z) = (&p[..n], &p[n..2 * n], &p[2 * n..]);
                let l = self.multiply(&self.multiply(x, y), z);
                let r = self.multiply(x, &self.multiply(y, z));
                l.iter().zip(&r).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
            })
            .reduce(|| 0.0, f64::max)
    }
}

fn nested(
    alg: &NilpotentAlgebra,
    word: &[bool],
    x: &[Poly],
    y: &[Poly],
    cache: &mut BTreeMap<Vec<bool>, Vec<Poly>>,
) -> Vec<Poly> {
    if let Some(v) = cache.get(word) {
        return v.clone();
    }
    let head = if word[0] { y } else { x };
    let v = if word.len() == 1 {
        head.to_vec()
    } else {
        let tail = nested(alg, &word[1..], x, y, cache);
        alg.bracket_poly(head, &tail)
    };
    cache.insert(word.to_vec(), v.clone());
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lie_bracket(alg: &NilpotentAlgebra, a: &[f64], b: &[f64]) -> Vec<f64> {
        let n = alg.dim();
        let mut out = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                for &(k, c) in alg.bracket_basis(i, j) {
                    out[k] += to_f64(&c) * a[i] * b[j];
                }
            }
        }
        out
    }

    /// Degree-4 truncation written out term by term.
    fn oracle(alg: &NilpotentAlgebra, x: &[f64], y: &[f64]) -> Vec<f64> {
        let b = |a: &[f64], c: &[f64]| lie_bracket(alg, a, c);
        let xy = b(x, y);
        let xxy = b(x, &xy);
        let yxy = b(y, &xy);
        let yxxy = b(y, &xxy);
        (0..x.len())
            .map(|k| x[k] + y[k] + 0.5 * xy[k] + xxy[k] / 12.0 - yxy[k] / 12.0 - yxxy[k] / 24.0)
            .collect()
    }

    #[test]
    fn matches_explicit_series() {
        for alg in [
            NilpotentAlgebra::heisenberg(),
            NilpotentAlgebra::filiform(3).unwrap(),
            NilpotentAlgebra::filiform(4).unwrap(),
        ] {
            let law = GroupLaw::from_algebra(&alg).unwrap();
            let n = alg.dim();
            for t in 0..200 {
                let u = crate::spectral::halton(t + 7, 2 * n);
                let p: Vec<f64> = u.iter().map(|v| 3.0 * (2.0 * v - 1.0)).collect();
                let got = law.multiply(&p[..n], &p[n..]);
                let want = oracle(&alg, &p[..n], &p[n..]);
                for k in 0..n {
                    assert!((got[k] - want[k]).abs() < 1e-10 * (1.0 + want[k].abs()), "{} {k}: {got:?} {want:?}", alg.name);
                }
            }
            assert!(law.is_homogeneous() && law.has_identity());
        }
    }

    #[test]
    fn heisenberg_text_and_product() {
        let law = GroupLaw::from_algebra(&NilpotentAlgebra::heisenberg()).unwrap();
        assert_eq!(law.multiply(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]), vec![1.0, 1.0, 0.5]);
        let text = law.canonical_text();
        assert!(text.contains("z1 = x1 + y1\n"), "{text}");
        assert!(text.contains("z3 = x3 + y3 + 1/2*(x1*y2 - x2*y1)\n"), "{text}");
        assert_eq!(law.inverse(&[1.0, -2.0, 3.0]), vec![-1.0, 2.0, -3.0]);
        let x = [0.3, -1.2, 2.0];
        let e = law.multiply(&x, &law.inverse(&x));
        assert!(e.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn abelian_and_associativity() {
        let law = GroupLaw::from_algebra(&NilpotentAlgebra::abelian(2).unwrap()).unwrap();
        assert!(law.canonical_text().contains("x*y = x + y"));
        assert_eq!(law.multiply(&[1.0, 2.0], &[3.0, 4.0]), vec![4.0, 6.0]);
        for alg in [NilpotentAlgebra::heisenberg(), NilpotentAlgebra::filiform(4).unwrap()] {
            let law = GroupLaw::from_algebra(&alg).unwrap();
            assert!(law.associativity_defect(1000, 2.0, 0) < 1e-11);
        }
    }

    #[test]
    fn dynkin_low_order_coefficients() {
        let w = dynkin_words(3);
        assert_eq!(w[&vec![false]], Rational::one());
        // [X,Y] and [Y,X] both appear; the net coefficient of [X,Y] is 1/2
        assert_eq!(w[&vec![false, true]] - w[&vec![true, false]], Rational::new(1, 2));
        assert!(w.keys().all(|k| k.len() <= 3));
    }
}
