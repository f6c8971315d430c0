//! Special functions not covered by dependencies: Bessel `J0`, modified
//! Bessel `K_nu`, Hermite polynomials.

use std::f64::consts::{FRAC_PI_4, PI};

use crate::jet::Scalar;

pub use statrs::function::gamma::gamma;

/// Bessel function of the first kind of order zero.
pub fn bessel_j0(x: f64) -> f64 {
    let x = x.abs();
    if x < 12.0 {
        let q = 0.25 * x * x;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..200 {
            term *= -q / (k as f64 * k as f64);
            sum += term;
            if term.abs() < 1e-17 * sum.abs().max(1e-300) && k > 2 {
                break;
            }
        }
        sum
    } else {
        // Hankel asymptotic expansion, truncated at the smallest term.
        let mut p = 0.0;
        let mut q = 0.0;
        let mut a = 1.0;
        let mut last = f64::INFINITY;
        for k in 0..60 {
            let term = a / x.powi(k);
            if term.abs() > last {
                break;
            }
            last = term.abs();
            match k % 4 {
                0 => p += term,
                1 => q -= term,
                2 => p -= term,
                _ => q += term,
            }
            let m = (2 * k + 1) as f64;
            a *= m * m / ((k + 1) as f64 * 8.0);
            if last < 1e-17 {
                break;
            }
        }
        let ph = x - FRAC_PI_4;
        (2.0 / (PI * x)).sqrt() * (p * ph.cos() - q * ph.sin())
    }
}

/// Modified Bessel function of the second kind `K_nu(x)` for real `nu` and
/// `x > 0`, by the trapezoid rule on `int_0^inf exp(-x cosh t) cosh(nu t) dt`.
pub fn bessel_k(nu: f64, x: f64) -> f64 {
    (-x).exp() * bessel_k_scaled(nu, x)
}

/// `e^x K_nu(x)`.
pub fn bessel_k_scaled(nu: f64, x: f64) -> f64 {
    assert!(x > 0.0, "bessel_k needs x > 0");
    let nu = nu.abs();
    let h = 0.1;
    let tmax = {
        let c = 1.0 + (60.0 + 2.0 * nu) / x;
        (c + (c * c - 1.0).sqrt()).ln() + 2.0
    };
    let n = (tmax / h).ceil() as usize;
    let mut s = 0.5;
    for i in 1..=n {
        let t = i as f64 * h;
        let v = (-x * (t.cosh() - 1.0)).exp() * (nu * t).cosh();
        s += v;
        if v < 1e-18 * s {
            break;
        }
    }
    s * h
}

/// `int_0^inf cos(tau s) (z^2 + s^2)^{-a} ds` for `a > 0`, `tau > 0`, `z > 0`.
pub fn cosine_power_integral(a: f64, z: f64, tau: f64) -> f64 {
    PI.sqrt() / gamma(a) * (tau / (2.0 * z)).powf(a - 0.5) * bessel_k(a - 0.5, z * tau)
}

/// Physicists' Hermite polynomial `H_n`.
pub fn hermite<S: Scalar>(n: u32, x: &S) -> S {
    let mut h0 = x.lift(1.0);
    if n == 0 {
        return h0;
    }
    let mut h1 = x.scale(2.0);
    for k in 1..n {
        let h2 = x.mul(&h1).scale(2.0).sub(&h0.scale(2.0 * k as f64));
        h0 = h1;
        h1 = h2;
    }
    h1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{gl_panels, integrate, QuadOptions};

    #[test]
    fn j0_against_integral_representation() {
        for &x in &[0.0, 0.5, 3.0, 7.9, 11.9, 12.1, 20.0, 57.3, 300.0] {
            let edges: Vec<f64> = (0..=64).map(|i| PI * i as f64 / 64.0).collect();
            let oracle = gl_panels(|t| (x * t.cos()).cos(), &edges, 20) / PI;
            assert!((bessel_j0(x) - oracle).abs() < 1e-11, "x={x}: {} vs {oracle}", bessel_j0(x));
        }
    }

    #[test]
    fn k_half_closed_form() {
        for &x in &[1e-4, 0.3, 1.0, 5.0, 30.0] {
            let want = (PI / (2.0 * x)).sqrt() * (-x).exp();
            let got = bessel_k(0.5, x);
            assert!((got / want - 1.0).abs() < 1e-12, "x={x}");
        }
    }

    #[test]
    fn basset_against_quadrature() {
        let (a, z, tau) = (0.7, 0.8, 1.3);
        let f = |s: f64| (tau * s).cos() * (z * z + s * s).powf(-a);
        let mut total = 0.0;
        let period = 2.0 * PI / tau;
        for k in 0..4000 {
            let lo = k as f64 * period;
            total += integrate(&f, lo, lo + period, QuadOptions::default()).unwrap().value;
        }
        assert!((cosine_power_integral(a, z, tau) - total).abs() < 1e-4);
    }

    #[test]
    fn hermite_values() {
        assert_eq!(hermite(0, &0.3), 1.0);
        assert!((hermite(3, &0.5) - (8.0 * 0.125 - 12.0 * 0.5)).abs() < 1e-14);
    }
}
