use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graded::{GradedLayout, MultiIndex, NormVariant};
use crate::jet::{Jet, Scalar};
use crate::kernels::jet_space;
use crate::kernels::mollifier::profile;
use crate::quadrature::{half_line, QuadOptions};
use crate::special::hermite;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum TestFamily {
    /// `exp(-|x|^2 / scale^2)`.
    Gaussian { scale: f64 },
    /// `H_degree(x_coord) exp(-|x|^2)`; moments below `degree` vanish in `x_coord`.
    HermiteGaussian { coord: usize, degree: u32 },
    /// `psi(2|x|/radius) |x|_2^{2 weight_power}`, supported in `|x| <= radius`.
    CompactBump { radius: f64, weight_power: u32 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct TestFunction {
    pub layout: GradedLayout,
    pub family: TestFamily,
    pub amplitude: f64,
}

impl TestFunction {
    pub fn new(layout: &GradedLayout, family: TestFamily) -> Self {
        TestFunction {
            layout: layout.clone(),
            family,
            amplitude: 1.0,
        }
    }

    pub fn gaussian(layout: &GradedLayout) -> Self {
        Self::new(layout, TestFamily::Gaussian { scale: 1.0 })
    }

    pub fn with_amplitude(mut self, a: f64) -> Self {
        self.amplitude = a;
        self
    }

    pub fn label(&self) -> String {
        let base = match &self.family {
            TestFamily::Gaussian { scale } => format!("gaussian(s={scale})"),
            TestFamily::HermiteGaussian { coord, degree } => format!("hermite(c={coord},n={degree})"),
            TestFamily::CompactBump { radius, weight_power } => format!("bump(r={radius},w={weight_power})"),
        };
        if self.amplitude == 1.0 {
            base
        } else {
            format!("{}*{base}", self.amplitude)
        }
    }

    pub fn eval_generic<S: Scalar>(&self, x: &[S]) -> S {
        let zero = x[0].lift(0.0);
        let sq = x.iter().fold(zero, |a, v| a.add(&v.mul(v)));
        let v = match &self.family {
            TestFamily::Gaussian { scale } => sq.scale(-1.0 / (scale * scale)).exp(),
            TestFamily::HermiteGaussian { coord, degree } => hermite(*degree, &x[*coord]).mul(&sq.scale(-1.0).exp()),
            TestFamily::CompactBump { radius, weight_power } => {
                let n = self.layout.norm_generic(x, 0..self.layout.d(), self.layout.default_norm());
                profile(&n.scale(2.0 / radius)).mul(&sq.powi(*weight_power))
            }
        };
        v.scale(self.amplitude)
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.eval_generic(x)
    }

    /// `f(delta_r x)`.
    pub fn value_dilated(&self, x: &[f64], r: f64) -> f64 {
        let mut y = x.to_vec();
        self.layout.dilate_in_place(r, &mut y);
        self.value(&y)
    }

    pub fn derivative(&self, alpha: &MultiIndex, x: &[f64]) -> Result<f64> {
        self.layout.check_point(x)?;
        self.layout.check_point(&vec![0.0; alpha.0.len()])?;
        let sp = jet_space(x.len(), alpha.order() as usize);
        let j = self.eval_generic(&Jet::point(&sp, x));
        Ok(j.derivative(&alpha.0))
    }

    /// Radius of the support in the homogeneous norm, if compact.
    pub fn support_radius(&self) -> Option<f64> {
        match self.family {
            TestFamily::CompactBump { radius, .. } => Some(radius),
            _ => None,
        }
    }

    /// Checks `int f(x) x_d^m dx_d = 0` for every monomial of degree `<= degree`
    /// in the last block, at a few fixed values of the other coordinates.
    pub fn moment_check(&self, degree: u32) -> Result<()> {
        let l = &self.layout;
        let last = l.block(l.d() - 1);
        let others: Vec<usize> = (0..l.total_dim()).filter(|i| !last.contains(i)).collect();
        let nd = last.len();
        let mut monomials = Vec::new();
        for deg in 0..=degree {
            collect_monomials(nd, deg, &mut vec![0; nd], 0, &mut monomials);
        }
        let anchors: Vec<Vec<f64>> = vec![vec![0.0; others.len()], others.iter().map(|&i| 0.3 + 0.2 * i as f64).collect()];
        let scale = self.support_radius().unwrap_or(1.0);
        for anchor in &anchors {
            for m in &monomials {
                let f = |y: &[f64]| {
                    let mut x = vec![0.0; l.total_dim()];
                    for (k, &i) in others.iter().enumerate() {
                        x[i] = anchor[k];
                    }
                    let mut w = 1.0;
                    for (k, i) in last.clone().enumerate() {
                        x[i] = y[k];
                        w *= y[k].powi(m[k] as i32);
                    }
                    self.value(&x) * w
                };
                let v = integrate_rn(&f, nd, scale)?;
                let size = integrate_rn(&|y: &[f64]| f(y).abs(), nd, scale)?.max(1e-300);
                if v.abs() > 1e-8 * size.max(1.0) {
                    return Err(Error::Argument {
                        name: "test function",
                        reason: format!(
                            "{} fails the moment check: monomial {:?} of the last block integrates to {v:e}",
                            self.label(),
                            m
                        ),
                    });
                }
            }
        }
        Ok(())
    }
}

fn collect_monomials(n: usize, left: u32, cur: &mut Vec<u32>, pos: usize, out: &mut Vec<Vec<u32>>) {
    if pos + 1 >= n {
        if n > 0 {
            cur[n - 1] = left;
        }
        out.push(cur.clone());
        return;
    }
    for k in 0..=left {
        cur[pos] = k;
        collect_monomials(n, left - k, cur, pos + 1, out);
    }
    cur[pos] = 0;
}

/// Integral over `R^n` by nested half-line quadrature with folding.
pub(crate) fn integrate_rn(f: &dyn Fn(&[f64]) -> f64, n: usize, scale: f64) -> Result<f64> {
    fn rec(f: &dyn Fn(&[f64]) -> f64, n: usize, prefix: &mut Vec<f64>, scale: f64) -> Result<f64> {
        if prefix.len() == n {
            return Ok(f(prefix));
        }
        let err = std::cell::RefCell::new(None);
        let g = |t: f64| {
            let mut s = 0.0;
            for sign in [1.0, -1.0] {
                let mut p = prefix.clone();
                p.push(sign * t);
                match rec(f, n, &mut p, scale) {
                    Ok(v) => s += v,
                    Err(e) => {
                        *err.borrow_mut() = Some(e);
                    }
                }
            }
            s
        };
        let opts = QuadOptions::tol(1e-14, 1e-10);
        let v = half_line(&g, 0.0, scale, opts)?.value;
        if let Some(e) = err.into_inner() {
            return Err(e);
        }
        Ok(v)
    }
    rec(f, n, &mut Vec::new(), scale)
}

/// Evaluation grid for Schwartz seminorms: a tensor grid on `[-w, w]^n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeminormGrid {
    pub half_width: f64,
    pub points_per_axis: usize,
}

impl SeminormGrid {
    pub fn for_dim(n: usize) -> Self {
        let points = match n {
            1 => 601,
            2 => 81,
            _ => 15,
        };
        SeminormGrid {
            half_width: 6.0,
            points_per_axis: points,
        }
    }
}

/// Default seminorm index `2 ceil(Q) + 2`.
pub fn default_seminorm_index(layout: &GradedLayout) -> u32 {
    2 * layout.q_f64().ceil() as u32 + 2
}

/// `sup_x sup_{|alpha| <= n} (1 + |x|)^n |D^alpha f(x)|` over the grid.
pub fn schwartz_seminorm(f: &TestFunction, n: u32, grid: SeminormGrid) -> f64 {
    let l = &f.layout;
    let dim = l.total_dim();
    let pmin = l.exponents_f64().iter().cloned().fold(f64::INFINITY, f64::min);
    let order = (n as f64 / pmin).floor() as usize;
    let sp = jet_space(dim, order);
    let admissible: Vec<Vec<u32>> = sp
        .monomials()
        .iter()
        .filter(|m| {
            let len: f64 = m.iter().enumerate().map(|(i, &a)| a as f64 * l.exponents_f64()[l.layer_of(i)]).sum();
            len <= n as f64 + 1e-12
        })
        .cloned()
        .collect();
    let k = grid.points_per_axis.max(2);
    let total = k.pow(dim as u32);
    let mut best: f64 = 0.0;
    let mut x = vec![0.0; dim];
    for idx in 0..total {
        let mut r = idx;
        for v in x.iter_mut() {
            let i = r % k;
            r /= k;
            *v = -grid.half_width + 2.0 * grid.half_width * i as f64 / (k - 1) as f64;
        }
        let w = (1.0 + l.norm_unchecked(&x, NormVariant::Smooth(l.min_smooth_m()))).powi(n as i32);
        let j = f.eval_generic(&Jet::point(&sp, &x));
        for m in &admissible {
            best = best.max(w * j.derivative(m).abs());
        }
    }
    best
}

/// Fixed bank: unit Gaussian, Hermite-Gaussians of degree 1..=4 in every
/// coordinate, and one compact bump.
pub fn standard_bank(layout: &GradedLayout) -> Vec<TestFunction> {
    let mut bank = vec![TestFunction::gaussian(layout)];
    for coord in 0..layout.total_dim() {
        for degree in 1..=4 {
            bank.push(TestFunction::new(layout, TestFamily::HermiteGaussian { coord, degree }));
        }
    }
    bank.push(TestFunction::new(
        layout,
        TestFamily::CompactBump {
            radius: 1.0,
            weight_power: 0,
        },
    ));
    bank
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> GradedLayout {
        GradedLayout::euclidean(1).unwrap()
    }

    #[test]
    fn seminorm_examples() {
        let g = TestFunction::gaussian(&line());
        let grid = SeminormGrid::for_dim(1);
        assert!((schwartz_seminorm(&g, 0, grid) - 1.0).abs() < 1e-12);
        let g2 = TestFunction::new(&line(), TestFamily::Gaussian { scale: 0.37 });
        assert!((schwartz_seminorm(&g2, 0, grid) - 1.0).abs() < 1e-12);
        let s2 = schwartz_seminorm(&g, 2, grid);
        let mut dense: f64 = 0.0;
        for i in 0..=120_000 {
            let x = -6.0 + 12.0 * i as f64 / 120_000.0;
            let e = (-x * x).exp();
            let w = (1.0 + x.abs()).powi(2);
            for d in [e, 2.0 * x.abs() * e, (4.0 * x * x - 2.0).abs() * e] {
                dense = dense.max(w * d);
            }
        }
        assert!((s2 - dense).abs() < 2e-3 * dense, "{s2} vs {dense}");
        assert!(schwartz_seminorm(&g, 4, grid) >= s2);
    }

    #[test]
    fn moment_checks() {
        let odd = TestFunction::new(&line(), TestFamily::HermiteGaussian { coord: 0, degree: 1 });
        assert!(odd.moment_check(0).is_ok());
        assert!(odd.moment_check(1).is_err());
        let h3 = TestFunction::new(&line(), TestFamily::HermiteGaussian { coord: 0, degree: 3 });
        assert!(h3.moment_check(2).is_ok());
        assert!(TestFunction::gaussian(&line()).moment_check(0).is_err());
    }

    #[test]
    fn bump_support() {
        let b = TestFunction::new(&line(), TestFamily::CompactBump { radius: 1.0, weight_power: 0 });
        assert_eq!(b.value(&[0.0]), 1.0);
        assert_eq!(b.value(&[1.0]), 0.0);
        assert_eq!(b.value(&[-0.4]), 1.0);
        assert!(b.value(&[0.75]) > 0.0 && b.value(&[0.75]) < 1.0);
    }
}
