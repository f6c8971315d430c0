//! Sparse polynomials with rational coefficients in `x_1..x_n, y_1..y_n`.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};

use crate::graded::{format_rational, to_f64, Rational};

/// Exponent vector over the `2n` variables, `x` first.
pub type Monomial = Vec<u8>;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Poly {
    pub terms: BTreeMap<Monomial, Rational>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut m = vec![0u8; nvars];
        m[i] = 1;
        let mut p = Poly::zero();
        p.terms.insert(m, Rational::one());
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn insert(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        let sum = self.terms.get(&m).copied().unwrap_or_else(Rational::zero) + c;
        if sum.is_zero() {
            self.terms.remove(&m);
        } else {
            self.terms.insert(m, sum);
        }
    }

    pub fn add(&self, o: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &o.terms {
            out.insert(m.clone(), *c);
        }
        out
    }

    pub fn add_scaled(&mut self, o: &Poly, s: Rational) {
        if s.is_zero() {
            return;
        }
        for (m, c) in &o.terms {
            self.insert(m.clone(), *c * s);
        }
    }

    pub fn scale(&self, s: Rational) -> Poly {
        let mut out = Poly::zero();
        out.add_scaled(self, s);
        out
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &o.terms {
                let m: Monomial = m1.iter().zip(m2).map(|(a, b)| a + b).collect();
                out.insert(m, *c1 * *c2);
            }
        }
        out
    }

    pub fn eval(&self, vars: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(m, c)| {
                m.iter()
                    .enumerate()
                    .filter(|(_, &e)| e > 0)
                    .fold(to_f64(c), |a, (i, &e)| a * vars[i].powi(e as i32))
            })
            .sum()
    }

    /// `sum |c| prod |v_i|^{e_i}` with `|v_i| <= bounds[i]`.
    pub fn magnitude_bound(&self, bounds: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(m, c)| {
                m.iter()
                    .enumerate()
                    .fold(to_f64(&c.abs()), |a, (i, &e)| a * bounds[i].powi(e as i32))
            })
            .sum()
    }

    pub fn total_degree(m: &Monomial) -> u32 {
        m.iter().map(|&e| e as u32).sum()
    }
}

/// `x3*y1^2` style rendering; `names[i]` names variable `i`.
pub fn format_monomial(m: &Monomial, names: &[String]) -> String {
    let parts: Vec<String> = m
        .iter()
        .enumerate()
        .filter(|(_, &e)| e > 0)
        .map(|(i, &e)| if e == 1 { names[i].clone() } else { format!("{}^{e}", names[i]) })
        .collect();
    if parts.is_empty() {
        "1".into()
    } else {
        parts.join("*")
    }
}

/// Monomial order used for printing: total degree, then reverse exponent
/// vector (so `x1*y2` precedes `x2*y1`).
pub fn monomial_order(a: &Monomial, b: &Monomial) -> std::cmp::Ordering {
    Poly::total_degree(a)
        .cmp(&Poly::total_degree(b))
        .then_with(|| b.cmp(a))
}

/// Groups the terms of `p` by absolute coefficient:
/// `+ 1/2*(x1*y2 - x2*y1) - 1/12*x1^2*y2`.
pub fn format_grouped(p: &Poly, names: &[String]) -> String {
    let mut groups: Vec<(Rational, Vec<(Monomial, bool)>)> = Vec::new();
    let mut terms: Vec<(&Monomial, &Rational)> = p.terms.iter().collect();
    terms.sort_by(|a, b| monomial_order(a.0, b.0));
    for (m, c) in terms {
        let a = c.abs();
        match groups.iter_mut().find(|g| g.0 == a) {
            Some(g) => g.1.push((m.clone(), c.is_negative())),
            None => groups.push((a, vec![(m.clone(), c.is_negative())])),
        }
    }
    let mut out = String::new();
    for (a, ms) in groups {
        let lead_neg = ms[0].1;
        out.push_str(if lead_neg { " - " } else { " + " });
        let coef = if a.is_one() { String::new() } else { format!("{}*", format_rational(&a)) };
        if ms.len() == 1 {
            out.push_str(&format!("{coef}{}", format_monomial(&ms[0].0, names)));
            continue;
        }
        let mut inner = String::new();
        for (k, (m, neg)) in ms.iter().enumerate() {
            let rel_neg = neg != &lead_neg;
            if k > 0 {
                inner.push_str(if rel_neg { " - " } else { " + " });
            }
            inner.push_str(&format_monomial(m, names));
        }
        out.push_str(&format!("{coef}({inner})"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_and_printing() {
        let x1 = Poly::var(4, 0);
        let x2 = Poly::var(4, 1);
        let y1 = Poly::var(4, 2);
        let y2 = Poly::var(4, 3);
        let half = Rational::new(1, 2);
        let r = x1.mul(&y2).scale(half).add(&x2.mul(&y1).scale(-half));
        assert_eq!(r.eval(&[1.0, 0.0, 0.0, 1.0]), 0.5);
        let names: Vec<String> = ["x1", "x2", "y1", "y2"].iter().map(|s| s.to_string()).collect();
        assert_eq!(format_grouped(&r, &names), " + 1/2*(x1*y2 - x2*y1)");
        assert!(r.add(&r.scale(-Rational::one())).is_zero());
        assert_eq!(r.magnitude_bound(&[1.0, 2.0, 3.0, 4.0]), 0.5 * 4.0 + 0.5 * 6.0);
    }
}
