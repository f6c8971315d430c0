//! Truncated multivariate Taylor arithmetic.
//!
//! A [`Jet`] carries all partial derivatives of a quantity up to a fixed total
//! order with respect to a fixed set of variables. Kernels and test functions
//! are written once against [`Scalar`] and evaluated either on `f64` or on jets,
//! which yields exact (closed-form) derivatives of any order.

use std::collections::HashMap;
use std::sync::Arc;

/// Numeric type accepted by the generic evaluators.
pub trait Scalar: Clone {
    fn value(&self) -> f64;
    /// Constant with the same variable space as `self`.
    fn lift(&self, v: f64) -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn scale(&self, s: f64) -> Self;
    fn add_const(&self, c: f64) -> Self;
    fn powf(&self, e: f64) -> Self;
    fn powi(&self, n: u32) -> Self;
    fn exp(&self) -> Self;
    fn recip(&self) -> Self;

    fn div(&self, o: &Self) -> Self {
        self.mul(&o.recip())
    }
    fn sqrt(&self) -> Self {
        self.powf(0.5)
    }
}

impl Scalar for f64 {
    fn value(&self) -> f64 {
        *self
    }
    fn lift(&self, v: f64) -> Self {
        v
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn scale(&self, s: f64) -> Self {
        self * s
    }
    fn add_const(&self, c: f64) -> Self {
        self + c
    }
    fn powf(&self, e: f64) -> Self {
        f64::powf(*self, e)
    }
    fn powi(&self, n: u32) -> Self {
        f64::powi(*self, n as i32)
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn recip(&self) -> Self {
        1.0 / self
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
}

/// Index tables shared by all jets of the same shape.
#[derive(Debug)]
pub struct JetSpace {
    nvars: usize,
    order: usize,
    monomials: Vec<Vec<u32>>,
    index: HashMap<Vec<u32>, usize>,
    products: Vec<(u32, u32, u32)>,
}

impl JetSpace {
    pub fn new(nvars: usize, order: usize) -> Arc<Self> {
        let mut monomials = Vec::new();
        for deg in 0..=order {
            let mut cur = vec![0u32; nvars];
            enumerate(nvars, deg as u32, 0, &mut cur, &mut monomials);
        }
        let index: HashMap<Vec<u32>, usize> = monomials
            .iter()
            .enumerate()
            .map(|(i, m)| (m.clone(), i))
            .collect();
        let mut products = Vec::new();
        for (i, a) in monomials.iter().enumerate() {
            let da: u32 = a.iter().sum();
            for (j, b) in monomials.iter().enumerate() {
                let db: u32 = b.iter().sum();
                if (da + db) as usize > order {
                    continue;
                }
                let c: Vec<u32> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                products.push((i as u32, j as u32, index[&c] as u32));
            }
        }
        Arc::new(JetSpace {
            nvars,
            order,
            monomials,
            index,
            products,
        })
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn monomials(&self) -> &[Vec<u32>] {
        &self.monomials
    }
}

fn enumerate(n: usize, left: u32, pos: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if n == 0 {
        if left == 0 {
            out.push(Vec::new());
        }
        return;
    }
    if pos == n - 1 {
        cur[pos] = left;
        out.push(cur.clone());
        cur[pos] = 0;
        return;
    }
    for k in (0..=left).rev() {
        cur[pos] = k;
        enumerate(n, left - k, pos + 1, cur, out);
    }
    cur[pos] = 0;
}

/// Truncated Taylor expansion around a point. Coefficient `c[i]` multiplies
/// `h^m / 1` where `m` is the i-th monomial (no factorials folded in).
#[derive(Clone, Debug)]
pub struct Jet {
    space: Arc<JetSpace>,
    c: Vec<f64>,
}

impl Jet {
    pub fn constant(space: &Arc<JetSpace>, v: f64) -> Self {
        let mut c = vec![0.0; space.len()];
        c[0] = v;
        Jet {
            space: space.clone(),
            c,
        }
    }

    /// The coordinate function `x_i` expanded at `v`.
    pub fn variable(space: &Arc<JetSpace>, i: usize, v: f64) -> Self {
        let mut j = Jet::constant(space, v);
        if space.order >= 1 {
            let mut m = vec![0u32; space.nvars];
            m[i] = 1;
            j.c[space.index[&m]] = 1.0;
        }
        j
    }

    /// Jets for all coordinates of `x`.
    pub fn point(space: &Arc<JetSpace>, x: &[f64]) -> Vec<Jet> {
        x.iter()
            .enumerate()
            .map(|(i, &v)| Jet::variable(space, i, v))
            .collect()
    }

    pub fn space(&self) -> &Arc<JetSpace> {
        &self.space
    }

    /// Taylor coefficient of the monomial `m` (not multiplied by `m!`).
    pub fn coefficient(&self, m: &[u32]) -> f64 {
        match self.space.index.get(m) {
            Some(&i) => self.c[i],
            None => 0.0,
        }
    }

    /// Partial derivative `D^m` at the expansion point.
    pub fn derivative(&self, m: &[u32]) -> f64 {
        let fact: f64 = m.iter().map(|&k| factorial(k)).product();
        self.coefficient(m) * fact
    }

    /// Apply a univariate function given its derivatives `d[k] = f^{(k)}(a)`
    /// at `a = self.value()`.
    pub fn compose(&self, d: &[f64]) -> Self {
        let order = self.space.order;
        let mut h = self.clone();
        h.c[0] = 0.0;
        let coef = |k: usize| d.get(k).copied().unwrap_or(0.0) / factorial(k as u32);
        let mut acc = Jet::constant(&self.space, coef(order));
        for k in (0..order).rev() {
            acc = Scalar::mul(&acc, &h);
            acc.c[0] += coef(k);
        }
        acc
    }
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

impl Scalar for Jet {
    fn value(&self) -> f64 {
        self.c[0]
    }
    fn lift(&self, v: f64) -> Self {
        Jet::constant(&self.space, v)
    }
    fn add(&self, o: &Self) -> Self {
        let c = self.c.iter().zip(&o.c).map(|(a, b)| a + b).collect();
        Jet {
            space: self.space.clone(),
            c,
        }
    }
    fn sub(&self, o: &Self) -> Self {
        let c = self.c.iter().zip(&o.c).map(|(a, b)| a - b).collect();
        Jet {
            space: self.space.clone(),
            c,
        }
    }
    fn mul(&self, o: &Self) -> Self {
        let mut c = vec![0.0; self.c.len()];
        for &(i, j, k) in &self.space.products {
            let a = self.c[i as usize];
            if a != 0.0 {
                c[k as usize] += a * o.c[j as usize];
            }
        }
        Jet {
            space: self.space.clone(),
            c,
        }
    }
    fn scale(&self, s: f64) -> Self {
        Jet {
            space: self.space.clone(),
            c: self.c.iter().map(|a| a * s).collect(),
        }
    }
    fn add_const(&self, v: f64) -> Self {
        let mut j = self.clone();
        j.c[0] += v;
        j
    }
    fn powf(&self, e: f64) -> Self {
        let a = self.value();
        let mut d = Vec::with_capacity(self.space.order + 1);
        let mut f = 1.0;
        for k in 0..=self.space.order {
            d.push(f * a.powf(e - k as f64));
            f *= e - k as f64;
        }
        self.compose(&d)
    }
    fn powi(&self, n: u32) -> Self {
        let mut acc = self.lift(1.0);
        for _ in 0..n {
            acc = Scalar::mul(&acc, self);
        }
        acc
    }
    fn exp(&self) -> Self {
        let v = self.value().exp();
        self.compose(&vec![v; self.space.order + 1])
    }
    fn recip(&self) -> Self {
        let a = self.value();
        let mut d = Vec::with_capacity(self.space.order + 1);
        let mut f = 1.0;
        for k in 0..=self.space.order {
            d.push(f / a.powi(k as i32 + 1));
            f *= -((k + 1) as f64);
        }
        self.compose(&d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_rule_two_variables() {
        let sp = JetSpace::new(2, 3);
        let x = Jet::variable(&sp, 0, 1.5);
        let y = Jet::variable(&sp, 1, -0.5);
        let f = x.mul(&x).mul(&y);
        assert!((f.derivative(&[2, 1]) - 2.0).abs() < 1e-14);
        assert!((f.derivative(&[1, 1]) - 3.0).abs() < 1e-14);
        assert_eq!(f.derivative(&[0, 2]), 0.0);
    }

    #[test]
    fn power_and_exp_derivatives() {
        let sp = JetSpace::new(1, 4);
        let x = Jet::variable(&sp, 0, 2.0);
        let p = x.powf(-0.5);
        let want = -0.5 * -1.5 * -2.5 * 2.0f64.powf(-3.5);
        assert!((p.derivative(&[3]) - want).abs() < 1e-14);
        let e = x.scale(3.0).exp();
        assert!((e.derivative(&[4]) - 81.0 * 6.0f64.exp()).abs() < 1e-8 * 6.0f64.exp() * 81.0);
        let r = x.recip();
        assert!((r.derivative(&[2]) - 2.0 / 8.0).abs() < 1e-15);
    }

    #[test]
    fn monomial_count() {
        assert_eq!(JetSpace::new(3, 4).len(), 35);
        assert_eq!(JetSpace::new(1, 0).len(), 1);
    }
}
