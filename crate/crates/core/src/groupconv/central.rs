//! Composition on the Heisenberg group through the central frequency.
//!
//! For kernels radial in the first layer, the partial transform in `x3`
//! turns `A_eps * B` into a twisted convolution in `x'`, and
//!
//! `Phi_eps(xi', tau) = int Atilde_eps(|y|, tau) e^{-i<y, xi'>} Bhat(xi' + lambda J y, tau) dy`
//!
//! with `lambda = kappa tau` and `J` the quarter turn. The angular integral is
//! a periodic trapezoid sum, the radial one composite Gauss-Legendre.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{arg, Error, Result};
use crate::graded::{to_f64, GradedLayout, NormVariant, Rational, Side};
use crate::groupconv::composition::monotone_with_floor;
use crate::groupconv::GroupLaw;
use crate::kernels::mollifier::profile_f64;
use crate::kernels::{KernelForm, KernelModel};
use crate::quadrature::{gauss_legendre, gl_panel_nodes};
use crate::special::{bessel_j0, cosine_power_integral};
use crate::spectral::{fit_exponents, ExponentFit};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CentralOptions {
    /// Truncation scales of `A`, decreasing.
    pub eps: Vec<f64>,
    /// Number of central frequencies, geometric over `tau_range`.
    pub taus: usize,
    pub tau_range: [f64; 2],
    /// Number of `|xi'| / sqrt(tau)` values, geometric over `ratio_range`.
    pub ratios: usize,
    pub ratio_range: [f64; 2],
    /// Chebyshev nodes for the truncation correction in `r`.
    pub cheb_nodes: usize,
}

impl Default for CentralOptions {
    fn default() -> Self {
        CentralOptions {
            eps: vec![1.0, 0.5, 0.25, 0.125, 0.0625],
            taus: 48,
            tau_range: [1.0, 4.0],
            ratios: 48,
            ratio_range: [4.0, 32.0],
            cheb_nodes: 128,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CentralResult {
    pub eps: Vec<f64>,
    /// Sample points `(|xi'|, tau)`.
    pub samples: Vec<(f64, f64)>,
    /// `Phi_eps` at the samples, one row per `eps`.
    pub phis: Vec<Vec<f64>>,
    /// `sup |Phi_{eps_{i+1}} - Phi_{eps_i}|` over the samples (all in `1 <= |xi|_2 <= 2`).
    pub cauchy: Vec<f64>,
    pub cauchy_monotone: bool,
    pub sup: f64,
    pub fit: ExponentFit,
}

/// Layout `p = (1, 2)`, `n = (2, 1)`.
pub fn heisenberg_layout() -> GradedLayout {
    GradedLayout::new(vec![(Rational::from_integer(1), 2), (Rational::from_integer(2), 1)]).unwrap()
}

/// `kappa` in `z3 = x3 + y3 + kappa (x1 y2 - x2 y1)`, if the law has that shape.
pub fn heisenberg_kappa(law: &GroupLaw) -> Result<f64> {
    let alg = &law.algebra;
    if alg.layout != heisenberg_layout() {
        return Err(arg("law", "central composition needs the layout 1:2,2:1"));
    }
    let c = alg.bracket_basis(0, 1);
    let others = (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).any(|(i, j)| (i, j) != (0, 1) && (i, j) != (1, 0) && !alg.bracket_basis(i, j).is_empty());
    match c {
        [(2, v)] if !others => Ok(0.5 * to_f64(v)),
        _ => Err(arg("law", "central composition needs a single bracket [X1, X2] = c X3")),
    }
}

/// `(c1, a)` with `K(x) = |x'|^{c1} (|x'|^4 + x3^2)^{-a}`.
fn flag_exponents(k: &KernelModel) -> Result<(f64, f64)> {
    if k.layout != heisenberg_layout() || k.is_truncated() {
        return Err(arg("kernel", format!("{}: need an untruncated kernel on 1:2,2:1", k.id)));
    }
    match &k.form {
        KernelForm::FlagPower { order, norm } if *norm == NormVariant::Smooth(2) => {
            let nu: Vec<f64> = order.to_f64();
            let (c1, a) = (-nu[0] - 2.0, (nu[1] + 2.0) / 4.0);
            if !(a > 0.0 && a < 0.5) || !(c1 > -2.0) {
                return Err(arg(
                    "kernel",
                    format!("{}: central route needs -2 < nu_2 < 0 and nu_1 < 0", k.id),
                ));
            }
            Ok((c1, a))
        }
        _ => Err(arg("kernel", format!("{}: central route takes FlagPower kernels with the smooth M=2 norm", k.id))),
    }
}

fn geometric(n: usize, range: [f64; 2]) -> Vec<f64> {
    if n == 1 {
        return vec![range[0]];
    }
    (0..n)
        .map(|i| range[0] * (range[1] / range[0]).powf(i as f64 / (n - 1) as f64))
        .collect()
}

/// Radial nodes on `[0, r_max]`: a `t^4`-substituted first panel, geometric
/// growth up to `panel`, then uniform panels no longer than `panel`.
pub fn radial_nodes(r_max: f64, panel: f64) -> (Vec<f64>, Vec<f64>) {
    let panel = panel.min(r_max);
    let h0 = panel / 16.0;
    let rule = gauss_legendre(10);
    let (mut r, mut w) = (Vec::new(), Vec::new());
    for (t, wt) in rule.nodes.iter().zip(&rule.weights) {
        let u = 0.5 * (t + 1.0);
        r.push(h0 * u.powi(4));
        w.push(0.5 * wt * 4.0 * h0 * u.powi(3));
    }
    let mut edges = vec![h0];
    while *edges.last().unwrap() < r_max {
        let last = *edges.last().unwrap();
        let len = (2.0 * (last - 0.0)).min(panel).max(h0);
        edges.push((last + len).min(r_max));
    }
    let (x, v) = gl_panel_nodes(&edges, 10);
    r.extend(x);
    w.extend(v);
    (r, w)
}

/// `S(r, rho, tau) = int_0^{2 pi} e^{-i r rho cos t} Bhat(eta(t), tau) dt` with
/// `eta^2 = rho^2 - 2 rho lambda r sin t + lambda^2 r^2`.
pub fn angular_sum(r: f64, rho: f64, lambda: f64, tau: f64, b_hat: &(dyn Fn(f64, f64) -> f64 + Sync)) -> f64 {
    let m = 2 * ((r * rho).ceil() as usize) + 2 * ((lambda * r).abs().ceil() as usize) + 32;
    let m = m + m % 2;
    let mut s = 0.0;
    // nodes symmetric under t -> pi - t; only the right half is summed
    for j in 0..m / 2 {
        let t = -0.5 * PI + 2.0 * PI * (j as f64 + 0.5) / m as f64;
        let (sn, cs) = t.sin_cos();
        let eta = (rho * rho - 2.0 * rho * lambda * r * sn + lambda * lambda * r * r).max(0.0).sqrt();
        s += (r * rho * cs).cos() * b_hat(eta, tau);
    }
    4.0 * PI / m as f64 * s
}

/// `Phi(rho, tau)` from radial values `a_tilde[i] = Atilde(r_i, tau)`.
pub fn central_phi(r: &[f64], w: &[f64], a_tilde: &[f64], rho: f64, tau: f64, kappa: f64, b_hat: &(dyn Fn(f64, f64) -> f64 + Sync)) -> f64 {
    let lambda = kappa * tau;
    (0..r.len())
        .filter(|&i| a_tilde[i] != 0.0)
        .map(|i| w[i] * r[i] * a_tilde[i] * angular_sum(r[i], rho, lambda, tau, b_hat))
        .sum()
}

/// Table of `beta(u) = 2 pi int_0^inf Btilde(r, 1) J0(u r) r dr` with
/// `Btilde(r, 1) = 2 r^{c1} int_0^inf (r^4 + s^2)^{-a} cos s ds`.
#[derive(Clone, Debug)]
pub struct BesselTable {
    du: f64,
    values: Vec<f64>,
    /// `(mu_1 + mu_2) / 2`.
    power: f64,
}

impl BesselTable {
    pub const U_MAX: f64 = 40.0;
    pub const DU: f64 = 0.02;

    pub fn new(c1: f64, a: f64) -> Self {
        // orders: nu_1 = -c1 - 2, nu_2 = 4a - 2
        let power = 0.5 * ((-c1 - 2.0) + (4.0 * a - 2.0));
        Self::from_radial(|r| 2.0 * r.powf(c1) * cosine_power_integral(a, r * r, 1.0), power)
    }

    /// Table of the radial transform of `btilde` on `[0, 7]`, which must be
    /// negligible beyond.
    pub fn from_radial(btilde: impl Fn(f64) -> f64, power: f64) -> Self {
        let (r, w) = radial_nodes(7.0, 0.02);
        let bt: Vec<f64> = r.iter().map(|&r| btilde(r)).collect();
        let n = (Self::U_MAX / Self::DU).round() as usize + 1;
        let values = (0..n)
            .into_par_iter()
            .map(|k| {
                let u = k as f64 * Self::DU;
                2.0 * PI * (0..r.len()).map(|i| w[i] * bt[i] * bessel_j0(u * r[i]) * r[i]).sum::<f64>()
            })
            .collect();
        BesselTable {
            du: Self::DU,
            values,
            power,
        }
    }

    /// Cubic Lagrange interpolation; `u` beyond the table is an error upstream.
    pub fn beta(&self, u: f64) -> f64 {
        let t = u / self.du;
        let n = self.values.len();
        let i = (t.floor() as isize).clamp(1, n as isize - 3) as usize;
        let x = t - i as f64;
        let (p0, p1, p2, p3) = (self.values[i - 1], self.values[i], self.values[i + 1], self.values[i + 2]);
        let l0 = -x * (x - 1.0) * (x - 2.0) / 6.0;
        let l1 = (x + 1.0) * (x - 1.0) * (x - 2.0) / 2.0;
        let l2 = -(x + 1.0) * x * (x - 2.0) / 2.0;
        let l3 = (x + 1.0) * x * (x - 1.0) / 6.0;
        p0 * l0 + p1 * l1 + p2 * l2 + p3 * l3
    }

    /// `Bhat(eta, tau) = tau^{(mu_1 + mu_2)/2} beta(eta / sqrt(tau))`.
    pub fn b_hat(&self, eta: f64, tau: f64) -> f64 {
        tau.powf(self.power) * self.beta(eta / tau.sqrt())
    }
}

/// Barycentric interpolant on Chebyshev points of the first kind over `[0, len]`.
struct Cheb {
    len: f64,
    x: Vec<f64>,
    wb: Vec<f64>,
    f: Vec<f64>,
}

impl Cheb {
    fn nodes(n: usize, len: f64) -> Vec<f64> {
        (0..n)
            .map(|j| 0.5 * len * (1.0 + ((2 * j + 1) as f64 * PI / (2 * n) as f64).cos()))
            .collect()
    }

    fn new(len: f64, f: Vec<f64>) -> Self {
        let n = f.len();
        let x = Self::nodes(n, len);
        let wb = (0..n)
            .map(|j| {
                let s = if j % 2 == 0 { 1.0 } else { -1.0 };
                s * ((2 * j + 1) as f64 * PI / (2 * n) as f64).sin()
            })
            .collect();
        Cheb { len, x, wb, f }
    }

    fn eval(&self, r: f64) -> f64 {
        let r = r.clamp(0.0, self.len);
        let (mut num, mut den) = (0.0, 0.0);
        for j in 0..self.x.len() {
            let d = r - self.x[j];
            if d == 0.0 {
                return self.f[j];
            }
            let t = self.wb[j] / d;
            num += t * self.f[j];
            den += t;
        }
        num / den
    }
}

/// `int_0^{s_b} (r^4 + s^2)^{-a} psi(eps (r^4 + s^2)^{1/4}) cos(s tau) ds`.
fn truncated_cosine(a: f64, r: f64, eps: f64, tau: f64) -> f64 {
    let r4 = r.powi(4);
    let sb2 = 16.0 / eps.powi(4) - r4;
    if sb2 <= 0.0 {
        return 0.0;
    }
    let sb = sb2.sqrt();
    let cap = 2.0 / tau;
    let mut edges = vec![0.0];
    let mut len = (r * r).max(1e-12).min(cap);
    while *edges.last().unwrap() < sb {
        let last = *edges.last().unwrap();
        edges.push((last + len).min(sb));
        len = (2.0 * len).min(cap);
    }
    let f = |s: f64| {
        let q = r4 + s * s;
        q.powf(-a) * profile_f64(eps * q.powf(0.25)) * (s * tau).cos()
    };
    crate::quadrature::gl_panels(f, &edges, 10)
}

/// `Phi_eps` for a pair of Heisenberg flag kernels, over the configured samples.
pub fn central_composition(a: &KernelModel, b: &KernelModel, law: &GroupLaw, opts: &CentralOptions) -> Result<CentralResult> {
    let kappa = heisenberg_kappa(law)?;
    let (ca, aa) = flag_exponents(a)?;
    let (cb, ab) = flag_exponents(b)?;
    if opts.eps.is_empty() || opts.eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(arg("eps", "need a decreasing, nonempty list of truncation scales"));
    }
    if opts.taus == 0 || opts.ratios == 0 || opts.cheb_nodes < 8 {
        return Err(arg("samples", "need taus, ratios >= 1 and cheb_nodes >= 8"));
    }
    let taus = geometric(opts.taus, opts.tau_range);
    let ratios = geometric(opts.ratios, opts.ratio_range);
    let table = BesselTable::new(cb, ab);
    let b_hat = |eta: f64, tau: f64| table.b_hat(eta, tau);
    let eps_min = *opts.eps.last().unwrap();
    let ne = opts.eps.len();
    // one row per tau: Phi at every ratio for every eps
    let rows: Vec<Result<Vec<Vec<f64>>>> = taus
        .par_iter()
        .map(|&tau| {
            let st = tau.sqrt();
            let rho_max = ratios.last().unwrap() * st;
            let reach = (rho_max + kappa.abs() * tau * 5.5 / st) / st;
            if reach > BesselTable::U_MAX {
                return Err(Error::Resolution(format!(
                    "tau = {tau}: |eta| / sqrt(tau) reaches {reach:.2}, beyond the table's {}",
                    BesselTable::U_MAX
                )));
            }
            let r_max = (2.0 / eps_min).min(5.5 / st);
            let (r, w) = radial_nodes(r_max, 2.0 / rho_max);
            let g: Vec<f64> = r.iter().map(|&r| cosine_power_integral(aa, r * r, tau)).collect();
            let s: Vec<Vec<f64>> = ratios
                .iter()
                .map(|&q| r.iter().map(|&ri| angular_sum(ri, q * st, kappa * tau, tau, &b_hat)).collect())
                .collect();
            let mut out = vec![vec![0.0; ratios.len()]; ne];
            for (k, &eps) in opts.eps.iter().enumerate() {
                let len = r_max.min(2.0 / eps);
                let xs = Cheb::nodes(opts.cheb_nodes, len);
                let e: Vec<f64> = xs
                    .iter()
                    .map(|&x| cosine_power_integral(aa, x * x, tau) - truncated_cosine(aa, x, eps, tau))
                    .collect();
                let cheb = Cheb::new(len, e);
                let at: Vec<f64> = r
                    .iter()
                    .zip(&g)
                    .map(|(&ri, &gi)| if ri >= 2.0 / eps { 0.0 } else { 2.0 * ri.powf(ca) * (gi - cheb.eval(ri)) })
                    .collect();
                for (j, sj) in s.iter().enumerate() {
                    out[k][j] = (0..r.len()).map(|i| w[i] * r[i] * at[i] * sj[i]).sum();
                }
            }
            Ok(out)
        })
        .collect();
    let mut phis = vec![Vec::new(); ne];
    let mut samples = Vec::new();
    for (ti, row) in rows.into_iter().enumerate() {
        let row = row?;
        for (j, q) in ratios.iter().enumerate() {
            samples.push((q * taus[ti].sqrt(), taus[ti]));
            for k in 0..ne {
                phis[k].push(row[k][j]);
            }
        }
    }
    let cauchy: Vec<f64> = phis
        .windows(2)
        .map(|w| w[0].iter().zip(&w[1]).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
        .collect();
    let last = phis.last().unwrap();
    let sup = last.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let points: Vec<(Vec<f64>, f64)> = samples.iter().zip(last).map(|(&(rho, tau), &v)| (vec![rho, 0.0, tau], v)).collect();
    let region = format!(
        "tau in [{}, {}] x |xi'|/sqrt(tau) in [{}, {}], {}x{} samples",
        opts.tau_range[0], opts.tau_range[1], opts.ratio_range[0], opts.ratio_range[1], opts.taus, opts.ratios
    );
    let fit = fit_exponents(&a.layout, Side::Dual, &points, NormVariant::Smooth(2), &region)?;
    Ok(CentralResult {
        eps: opts.eps.clone(),
        samples,
        cauchy_monotone: monotone_with_floor(&cauchy, sup),
        cauchy,
        sup,
        fit,
        phis,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_pair_matches_closed_form() {
        // A = B = exp(-|x|^2): Atilde = sqrt(pi) e^{-tau^2/4} e^{-r^2},
        // Bhat = pi^{3/2} e^{-(eta^2 + tau^2)/4}
        let b_hat = |eta: f64, tau: f64| PI.powf(1.5) * (-(eta * eta + tau * tau) / 4.0).exp();
        for &(rho, tau) in &[(0.5f64, 1.0f64), (2.0, 1.5), (3.0, 3.0), (0.0, 2.0)] {
            let (r, w) = radial_nodes(7.0, 0.1);
            let at: Vec<f64> = r.iter().map(|&r| PI.sqrt() * (-tau * tau / 4.0).exp() * (-r * r).exp()).collect();
            let got = central_phi(&r, &w, &at, rho, tau, 0.5, &b_hat);
            let alpha = 1.0 + tau * tau / 16.0;
            let want = PI.powi(3) / alpha * (-tau * tau / 2.0).exp() * (-rho * rho / (2.0 * alpha)).exp();
            assert!((got - want).abs() < 1e-10 * want.abs().max(1e-3), "({rho},{tau}): {got} vs {want}");
        }
    }

    #[test]
    fn radial_nodes_integrate_singular_power() {
        let (r, w) = radial_nodes(3.0, 0.1);
        let s: f64 = r.iter().zip(&w).map(|(r, w)| w * r.powf(-0.5)).sum();
        assert!((s - 2.0 * 3f64.sqrt()).abs() < 1e-10, "{s}");
    }

    #[test]
    fn chebyshev_interpolant() {
        let xs = Cheb::nodes(32, 2.0);
        let c = Cheb::new(2.0, xs.iter().map(|x| (x * 1.3).cos()).collect());
        for i in 0..50 {
            let x = 2.0 * i as f64 / 49.0;
            assert!((c.eval(x) - (x * 1.3).cos()).abs() < 1e-13);
        }
    }

    #[test]
    fn bessel_table_of_gaussian() {
        let t = BesselTable::from_radial(|r| (-r * r).exp(), 0.0);
        for i in 0..200 {
            let u = 0.173 * i as f64;
            let want = PI * (-u * u / 4.0).exp();
            assert!((t.beta(u) - want).abs() < 1e-8, "{u}: {} vs {want}", t.beta(u));
        }
    }

    #[test]
    fn truncation_correction_vanishes() {
        let a = 0.275;
        for &(r, tau) in &[(0.3, 1.0), (1.2, 2.5)] {
            let full = cosine_power_integral(a, r * r, tau);
            let cut = truncated_cosine(a, r, 1.0 / 16.0, tau);
            assert!((full - cut).abs() < 1e-9, "{r} {tau}: {full} {cut}");
        }
    }

    #[test]
    fn kappa_from_law() {
        let law = GroupLaw::from_algebra(&crate::groupconv::NilpotentAlgebra::heisenberg()).unwrap();
        assert_eq!(heisenberg_kappa(&law).unwrap(), 0.5);
    }
}

