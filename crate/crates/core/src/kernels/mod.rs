//! Concrete kernels with known class membership, mollified truncations,
//! Schwartz test functions and pairings.

pub mod mollifier;
pub mod pairing;
pub mod testfn;

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::calculus::{ClassTag, KernelClass};
use crate::error::{arg, Error, Result};
use crate::graded::{to_f64, GradedLayout, MultiIndex, NormVariant, OrderVector, Rational};
use crate::jet::{Jet, JetSpace, Scalar};
use crate::quadrature::{integrate, QuadOptions};

pub use mollifier::Mollifier;
pub use pairing::{flag_cancellation_restrict, pair, pair_function, pair_with, pv_pair, PairOptions};
pub use testfn::{schwartz_seminorm, standard_bank, SeminormGrid, TestFamily, TestFunction};

/// Shared jet spaces keyed by `(nvars, order)`.
pub(crate) fn jet_space(nvars: usize, order: usize) -> Arc<JetSpace> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<JetSpace>>>> = OnceLock::new();
    let mut map = CACHE.get_or_init(Default::default).lock().unwrap();
    map.entry((nvars, order))
        .or_insert_with(|| JetSpace::new(nvars, order))
        .clone()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SingularSet {
    None,
    Origin,
    /// `{x_1 = 0}`: the first block vanishes.
    Hyperplane,
}

pub type ValueFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type JetFn = Arc<dyn Fn(&[Jet]) -> Jet + Send + Sync>;

/// Closed-form evaluator supplied by the caller.
#[derive(Clone)]
pub struct CustomKernel {
    pub name: String,
    pub value: ValueFn,
    pub jet: Option<JetFn>,
}

impl fmt::Debug for CustomKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Custom({}, jet={})", self.name, self.jet.is_some())
    }
}

#[derive(Clone, Debug)]
pub enum KernelForm {
    /// `prod_k |x|_k^{-nu_k - Q_k}` with primal partial norms.
    FlagPower { order: OrderVector, norm: NormVariant },
    /// `c sign(x)/|x|` on the line.
    PrincipalValueOdd1D { c: f64 },
    /// Inverse transform of `|xi|^exponent 1_{|xi| <= cap}` on the line.
    SpectralCappedPower { exponent: f64, cap: f64 },
    /// `exp(-|x|^2 / scale^2)`, smooth and rapidly decreasing.
    Gaussian { scale: f64 },
    Custom(CustomKernel),
}

#[derive(Clone, Debug)]
pub struct KernelModel {
    pub id: String,
    pub layout: GradedLayout,
    pub class: KernelClass,
    pub form: KernelForm,
    pub singular: SingularSet,
    /// Points closer than this to the singular set are rejected.
    pub exclusion: f64,
    truncations: Vec<(Mollifier, f64)>,
}

/// Value with an error estimate (zero for closed forms).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Valued {
    pub value: f64,
    pub error: f64,
}

impl KernelModel {
    pub fn flag_power(layout: &GradedLayout, order: OrderVector, norm: NormVariant) -> Result<Self> {
        layout.check_norm(norm)?;
        let class = KernelClass::f(layout.clone(), order.clone())?;
        let singular = if layout.d() == 0 {
            SingularSet::None
        } else {
            SingularSet::Hyperplane
        };
        Ok(KernelModel {
            id: format!("flag_power{order}"),
            layout: layout.clone(),
            class,
            form: KernelForm::FlagPower { order, norm },
            singular,
            exclusion: 1e-12,
            truncations: Vec::new(),
        })
    }

    pub fn pv_odd_1d(c: f64) -> Self {
        let layout = GradedLayout::euclidean(1).unwrap();
        KernelModel {
            id: format!("pv_odd({c})"),
            class: KernelClass::new(ClassTag::F0, layout.clone(), OrderVector::zeros(1)).unwrap(),
            layout,
            form: KernelForm::PrincipalValueOdd1D { c },
            singular: SingularSet::Origin,
            exclusion: 1e-12,
            truncations: Vec::new(),
        }
    }

    /// `A` with `A^(xi) = |xi|^e 1_{|xi| <= cap}`; claimed order `-1 - e`.
    pub fn spectral_capped_power(exponent: Rational, cap: f64) -> Result<Self> {
        let e = to_f64(&exponent);
        if !(e > -1.0) || !(cap > 0.0) {
            return Err(arg("spectral_capped_power", "needs exponent > -1 and cap > 0"));
        }
        let layout = GradedLayout::euclidean(1)?;
        let order = OrderVector(vec![-Rational::from_integer(1) - exponent]);
        Ok(KernelModel {
            id: format!("capped_power({},{cap})", crate::graded::format_rational(&exponent)),
            class: KernelClass::f(layout.clone(), order)?,
            layout,
            form: KernelForm::SpectralCappedPower { exponent: e, cap },
            singular: SingularSet::None,
            exclusion: 0.0,
            truncations: Vec::new(),
        })
    }

    /// Gaussian, claimed in `F(-Q_1, ..., -Q_d)`.
    pub fn gaussian(layout: &GradedLayout, scale: f64) -> Result<Self> {
        if !(scale > 0.0) {
            return Err(arg("scale", "must be positive"));
        }
        let order = OrderVector(layout.q_vec().into_iter().map(|q| -q).collect());
        Ok(KernelModel {
            id: format!("gaussian({scale})"),
            layout: layout.clone(),
            class: KernelClass::f(layout.clone(), order)?,
            form: KernelForm::Gaussian { scale },
            singular: SingularSet::None,
            exclusion: 0.0,
            truncations: Vec::new(),
        })
    }

    pub fn custom(
        id: &str,
        class: KernelClass,
        singular: SingularSet,
        value: ValueFn,
        jet: Option<JetFn>,
    ) -> Self {
        KernelModel {
            id: id.to_string(),
            layout: class.layout.clone(),
            class,
            form: KernelForm::Custom(CustomKernel {
                name: id.to_string(),
                value,
                jet,
            }),
            singular,
            exclusion: 1e-12,
            truncations: Vec::new(),
        }
    }

    pub fn with_exclusion(mut self, delta: f64) -> Self {
        self.exclusion = delta;
        self
    }

    pub fn truncations(&self) -> &[(Mollifier, f64)] {
        &self.truncations
    }

    /// `phi(eps x) P(x)`.
    pub fn truncate(&self, mollifier: Mollifier, eps: f64) -> Result<Self> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(arg("eps", format!("truncation scale must be positive, got {eps}")));
        }
        self.layout.check_norm(mollifier.norm)?;
        let mut k = self.clone();
        k.truncations.push((mollifier, eps));
        k.id = format!("{}~eps{eps}", self.id);
        Ok(k)
    }

    /// Radius (homogeneous norm of the mollifier) of the support, if compact.
    pub fn support_radius(&self) -> Option<f64> {
        self.truncations
            .iter()
            .map(|(_, e)| 2.0 / e)
            .fold(None, |a: Option<f64>, r| Some(a.map_or(r, |a| a.min(r))))
    }

    pub fn is_truncated(&self) -> bool {
        !self.truncations.is_empty()
    }

    pub fn singular_distance(&self, x: &[f64]) -> f64 {
        match self.singular {
            SingularSet::None => f64::INFINITY,
            SingularSet::Origin => self.layout.norm_unchecked(x, NormVariant::Max),
            SingularSet::Hyperplane => x[self.layout.block(0)].iter().map(|v| v * v).sum::<f64>().sqrt(),
        }
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        self.layout.check_point(x)?;
        let dist = self.singular_distance(x);
        if dist <= self.exclusion {
            return Err(Error::Singular { distance: dist });
        }
        Ok(())
    }

    pub fn has_closed_form_jet(&self) -> bool {
        match &self.form {
            KernelForm::SpectralCappedPower { .. } => false,
            KernelForm::Custom(c) => c.jet.is_some(),
            _ => true,
        }
    }

    fn base_generic<S: Scalar>(&self, x: &[S]) -> S {
        match &self.form {
            KernelForm::FlagPower { order, norm } => {
                let l = &self.layout;
                let mut v = x[0].lift(1.0);
                for k in 0..l.d() {
                    let c = -to_f64(&order.0[k]) - l.q_f64_k(k);
                    if c == 0.0 {
                        continue;
                    }
                    let n = l.norm_generic(x, 0..k + 1, *norm);
                    v = v.mul(&n.powf(c));
                }
                v
            }
            KernelForm::PrincipalValueOdd1D { c } => x[0].recip().scale(*c),
            KernelForm::Gaussian { scale } => {
                let zero = x[0].lift(0.0);
                let sq = x.iter().fold(zero, |a, v| a.add(&v.mul(v)));
                sq.scale(-1.0 / (scale * scale)).exp()
            }
            KernelForm::SpectralCappedPower { .. } | KernelForm::Custom(_) => {
                unreachable!("no generic evaluator for this form")
            }
        }
    }

    fn truncation_generic<S: Scalar>(&self, x: &[S]) -> S {
        let mut v = x[0].lift(1.0);
        for (m, eps) in &self.truncations {
            v = v.mul(&m.eval(&self.layout, x, *eps));
        }
        v
    }

    fn truncation_f64(&self, x: &[f64]) -> f64 {
        self.truncations
            .iter()
            .map(|(m, eps)| m.eval_f64(&self.layout, x, *eps))
            .product()
    }

    /// Fast unchecked evaluation used by samplers; may return a non-finite
    /// value on the singular set.
    pub fn eval_unchecked(&self, x: &[f64]) -> f64 {
        let t = self.truncation_f64(x);
        if t == 0.0 {
            return 0.0;
        }
        let base = match &self.form {
            KernelForm::FlagPower { order, norm } => {
                let l = &self.layout;
                let pn = l.partial_norms_primal(x, *norm);
                let mut v = 1.0;
                for k in 0..l.d() {
                    let c = -to_f64(&order.0[k]) - l.q_f64_k(k);
                    if c != 0.0 {
                        v *= pn[k].powf(c);
                    }
                }
                v
            }
            KernelForm::PrincipalValueOdd1D { c } => c / x[0],
            KernelForm::Gaussian { scale } => (-x.iter().map(|v| v * v).sum::<f64>() / (scale * scale)).exp(),
            KernelForm::SpectralCappedPower { exponent, cap } => capped_power_primal(*exponent, *cap, x[0]),
            KernelForm::Custom(c) => (c.value)(x),
        };
        base * t
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        self.check(x)?;
        let v = self.eval_unchecked(x);
        if !v.is_finite() {
            return Err(Error::Quadrature(format!("{} is not finite at {x:?}", self.id)));
        }
        Ok(v)
    }

    /// Value on the Fourier side, where the form is defined there.
    pub fn fourier_value(&self, xi: &[f64]) -> Option<f64> {
        match &self.form {
            KernelForm::SpectralCappedPower { exponent, cap } if self.truncations.is_empty() => {
                let a = xi[0].abs();
                Some(if a <= *cap && a > 0.0 { a.powf(*exponent) } else { 0.0 })
            }
            _ => None,
        }
    }

    /// Evaluation on jets; `None` when the form has no closed-form jet.
    pub fn eval_jet(&self, x: &[Jet]) -> Option<Jet> {
        let base = match &self.form {
            KernelForm::SpectralCappedPower { .. } => return None,
            KernelForm::Custom(c) => (c.jet.as_ref()?)(x),
            _ => self.base_generic(x),
        };
        Some(base.mul(&self.truncation_generic(x)))
    }

    /// `D^alpha P(x)`: closed form through jets when available, otherwise
    /// nested central differences with Richardson extrapolation.
    pub fn evaluate_derivative(&self, alpha: &MultiIndex, x: &[f64]) -> Result<Valued> {
        self.check(x)?;
        if alpha.0.len() != x.len() {
            return Err(Error::Shape {
                expected: x.len(),
                got: alpha.0.len(),
            });
        }
        if alpha.is_zero() {
            return Ok(Valued {
                value: self.evaluate(x)?,
                error: 0.0,
            });
        }
        if self.has_closed_form_jet() {
            let sp = jet_space(x.len(), alpha.order() as usize);
            let j = self.eval_jet(&Jet::point(&sp, x)).unwrap();
            let v = j.derivative(&alpha.0);
            if !v.is_finite() {
                return Err(Error::Quadrature(format!("derivative of {} not finite at {x:?}", self.id)));
            }
            return Ok(Valued { value: v, error: 0.0 });
        }
        self.richardson_derivative(alpha, x)
    }

    fn richardson_derivative(&self, alpha: &MultiIndex, x: &[f64]) -> Result<Valued> {
        let dist = self.singular_distance(x);
        let h0 = (0.1 * dist).min(0.1 * (1.0 + x.iter().map(|v| v.abs()).fold(0.0, f64::max)));
        let order = alpha.order() as i32;
        let fd = |h: f64| central_difference(&|y: &[f64]| self.eval_unchecked(y), alpha, x, h);
        // Error terms are even in h: eliminate h^2 and h^4.
        let d1 = fd(h0);
        let d2 = fd(h0 / 2.0);
        let d3 = fd(h0 / 4.0);
        let r1 = (4.0 * d2 - d1) / 3.0;
        let r2 = (4.0 * d3 - d2) / 3.0;
        let value = (16.0 * r2 - r1) / 15.0;
        let error = (value - r2).abs() + f64::EPSILON * value.abs() * 4f64.powi(order) / (h0 / 4.0).powi(order);
        if !value.is_finite() {
            return Err(Error::Quadrature(format!("finite differences of {} diverged", self.id)));
        }
        Ok(Valued { value, error })
    }
}

impl GradedLayout {
    pub(crate) fn q_f64_k(&self, k: usize) -> f64 {
        to_f64(&self.q_k(k))
    }
}

/// Nested central differences `prod_i delta_{h,i}^{alpha_i} f(x) / h^{|alpha|}`.
pub(crate) fn central_difference(f: &dyn Fn(&[f64]) -> f64, alpha: &MultiIndex, x: &[f64], h: f64) -> f64 {
    fn rec(f: &dyn Fn(&[f64]) -> f64, alpha: &[u32], i: usize, x: &mut Vec<f64>, h: f64) -> f64 {
        if i == alpha.len() {
            return f(x);
        }
        let m = alpha[i];
        if m == 0 {
            return rec(f, alpha, i + 1, x, h);
        }
        let x0 = x[i];
        let mut s = 0.0;
        let mut binom = 1.0;
        for k in 0..=m {
            // Stencil points x0 + (m/2 - k) h with binomial weights (-1)^k C(m, k).
            x[i] = x0 + (m as f64 / 2.0 - k as f64) * h;
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            s += sign * binom * rec(f, alpha, i + 1, x, h);
            binom = binom * (m - k) as f64 / (k + 1) as f64;
        }
        x[i] = x0;
        s / h.powi(m as i32)
    }
    rec(f, &alpha.0, 0, &mut x.to_vec(), h)
}

/// `(1/pi) int_0^cap xi^e cos(x xi) dxi`, via `xi = cap u^2`.
fn capped_power_primal(e: f64, cap: f64, x: f64) -> f64 {
    let g = |u: f64| {
        if u <= 0.0 {
            return if 2.0 * e + 1.0 == 0.0 { 2.0 * cap.powf(e + 1.0) } else { 0.0 };
        }
        2.0 * cap.powf(e + 1.0) * u.powf(2.0 * e + 1.0) * (x * cap * u * u).cos()
    };
    let opts = QuadOptions {
        max_intervals: 20_000,
        ..QuadOptions::tol(1e-13, 1e-10)
    };
    integrate(&g, 0.0, 1.0, opts)
        .map(|e| e.value / std::f64::consts::PI)
        .unwrap_or(f64::NAN)
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

    #[test]
    fn flag_power_examples() {
        let k = KernelModel::flag_power(&line(), OrderVector(vec![r(-1, 2)]), NormVariant::Smooth(1)).unwrap();
        assert!((k.evaluate(&[4.0]).unwrap() - 0.5).abs() < 1e-15);
        let d = k.evaluate_derivative(&MultiIndex(vec![1]), &[1.0]).unwrap();
        assert!((d.value + 0.5).abs() < 1e-13);
        assert!(k.evaluate(&[0.0]).is_err());
        let p = GradedLayout::flag(vec![(r(1, 1), 1), (r(1, 1), 1)]).unwrap();
        let k = KernelModel::flag_power(&p, OrderVector(vec![r(-1, 2), r(-1, 2)]), NormVariant::Smooth(1)).unwrap();
        assert!((k.evaluate(&[1.0, 0.0]).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn jets_match_richardson() {
        let h = GradedLayout::new(vec![(r(1, 1), 2), (r(2, 1), 1)]).unwrap();
        let k = KernelModel::flag_power(&h, OrderVector(vec![r(-1, 2), r(-3, 5)]), NormVariant::Smooth(2)).unwrap();
        let x = [0.7, -0.4, 1.3];
        let value = Arc::new({
            let k = k.clone();
            move |y: &[f64]| k.eval_unchecked(y)
        });
        let c = KernelModel::custom("copy", k.class.clone(), SingularSet::Hyperplane, value, None);
        for a in [vec![1, 0, 0], vec![0, 1, 1], vec![2, 0, 0], vec![0, 0, 2]] {
            let a = MultiIndex(a);
            let exact = k.evaluate_derivative(&a, &x).unwrap().value;
            let fd = c.evaluate_derivative(&a, &x).unwrap();
            assert!((exact - fd.value).abs() < 1e-6 * (1.0 + exact.abs()), "{a:?}: {exact} vs {}", fd.value);
        }
    }

    #[test]
    fn truncation_support() {
        let k = KernelModel::flag_power(&line(), OrderVector(vec![r(-1, 2)]), NormVariant::Smooth(1)).unwrap();
        let m = Mollifier::for_layout(&line());
        let t = k.truncate(m, 1.0).unwrap();
        assert_eq!(t.evaluate(&[3.0]).unwrap(), 0.0);
        assert_eq!(t.evaluate(&[0.5]).unwrap(), k.evaluate(&[0.5]).unwrap());
        assert!(k.truncate(m, 0.0).is_err());
        assert_eq!(t.support_radius(), Some(2.0));
    }

    #[test]
    fn capped_power_at_origin_limit() {
        // (1/pi) int_0^1 xi^{-1/2} dxi = 2/pi.
        let v = capped_power_primal(-0.5, 1.0, 0.0);
        assert!((v - 2.0 / std::f64::consts::PI).abs() < 1e-10);
        let x: f64 = 3.0;
        let edges: Vec<f64> = (0..=200).map(|i| i as f64 / 200.0).collect();
        let oracle = crate::quadrature::gl_panels(|u| 2.0 * (x * u * u).cos(), &edges, 20) / std::f64::consts::PI;
        assert!((capped_power_primal(-0.5, 1.0, x) - oracle).abs() < 1e-10);
    }
}
