//! One-dimensional quadrature primitives: Gauss-Legendre rules, adaptive
//! Gauss-Kronrod (7/15), half-line mapping and extrapolation helpers.

use std::collections::BinaryHeap;
use std::sync::OnceLock;

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct GlRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

const MAX_GL: usize = 64;

fn compute_gl(n: usize) -> GlRule {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * p - pm) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    GlRule { nodes, weights }
}

/// Gauss-Legendre rule on `[-1, 1]` with `n` nodes (`1 <= n <= 64`).
pub fn gauss_legendre(n: usize) -> &'static GlRule {
    static RULES: OnceLock<Vec<GlRule>> = OnceLock::new();
    let rules = RULES.get_or_init(|| (0..=MAX_GL).map(|n| if n == 0 { GlRule { nodes: vec![], weights: vec![] } } else { compute_gl(n) }).collect());
    &rules[n.clamp(1, MAX_GL)]
}

/// Composite Gauss-Legendre rule over consecutive panels given by `edges`.
pub fn gl_panels(f: impl Fn(f64) -> f64, edges: &[f64], n: usize) -> f64 {
    let rule = gauss_legendre(n);
    let mut total = 0.0;
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
        let mut s = 0.0;
        for (x, wt) in rule.nodes.iter().zip(&rule.weights) {
            s += wt * f(c + h * x);
        }
        total += h * s;
    }
    total
}

/// Nodes and weights of a composite rule, for callers that tabulate.
pub fn gl_panel_nodes(edges: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let rule = gauss_legendre(n);
    let mut xs = Vec::with_capacity(edges.len() * n);
    let mut ws = Vec::with_capacity(edges.len() * n);
    for w in edges.windows(2) {
        let (c, h) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
        for (x, wt) in rule.nodes.iter().zip(&rule.weights) {
            xs.push(c + h * x);
            ws.push(h * wt);
        }
    }
    (xs, ws)
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let x = h * XGK[i];
        let s = f(c - x) + f(c + x);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            abs_tol: 1e-13,
            rel_tol: 1e-11,
            max_intervals: 4000,
        }
    }
}

impl QuadOptions {
    pub fn tol(abs_tol: f64, rel_tol: f64) -> Self {
        QuadOptions {
            abs_tol,
            rel_tol,
            ..Default::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub converged: bool,
}

#[derive(PartialEq)]
struct Piece {
    err: f64,
    a: f64,
    b: f64,
    val: f64,
}

impl Eq for Piece {}

impl PartialOrd for Piece {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for Piece {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.err
            .total_cmp(&o.err)
            .then_with(|| o.a.total_cmp(&self.a))
    }
}

/// Globally adaptive Gauss-Kronrod integration over `[a, b]`.
pub fn adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, opts: QuadOptions) -> Estimate {
    if a == b {
        return Estimate {
            value: 0.0,
            error: 0.0,
            converged: true,
        };
    }
    let mut heap = BinaryHeap::new();
    let (v, e) = gk15(f, a, b);
    heap.push(Piece { err: e, a, b, val: v });
    let (mut total, mut err) = (v, e);
    let mut converged = false;
    for _ in 0..opts.max_intervals {
        if err <= opts.abs_tol.max(opts.rel_tol * total.abs()) {
            converged = true;
            break;
        }
        let p = heap.pop().unwrap();
        let m = 0.5 * (p.a + p.b);
        if m <= p.a || m >= p.b {
            heap.push(p);
            break;
        }
        let (v1, e1) = gk15(f, p.a, m);
        let (v2, e2) = gk15(f, m, p.b);
        total += v1 + v2 - p.val;
        err += e1 + e2 - p.err;
        heap.push(Piece { err: e1, a: p.a, b: m, val: v1 });
        heap.push(Piece { err: e2, a: m, b: p.b, val: v2 });
    }
    let mut pieces = heap.into_vec();
    pieces.sort_by(|x, y| x.a.total_cmp(&y.a));
    let value = pieces.iter().map(|p| p.val).sum();
    let error: f64 = pieces.iter().map(|p| p.err).sum();
    Estimate {
        value,
        error,
        converged: converged || error <= opts.abs_tol.max(opts.rel_tol * f64::abs(value)),
    }
}

/// `adaptive` that turns non-convergence into an error.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, opts: QuadOptions) -> Result<Estimate> {
    let e = adaptive(f, a, b, opts);
    if !e.converged || !e.value.is_finite() {
        return Err(Error::Quadrature(format!(
            "[{a:e}, {b:e}]: estimate {:e} with error {:e}",
            e.value, e.error
        )));
    }
    Ok(e)
}

/// Integral over `[a, a + scale]` plus the mapped tail `[a + scale, inf)`.
pub fn half_line(f: &dyn Fn(f64) -> f64, a: f64, scale: f64, opts: QuadOptions) -> Result<Estimate> {
    let head = integrate(f, a, a + scale, opts)?;
    let g = |t: f64| {
        let u = 1.0 - t;
        if u <= 0.0 {
            return 0.0;
        }
        let x = a + scale / u;
        let v = f(x) * scale / (u * u);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    let tail = integrate(&g, 0.0, 1.0, opts)?;
    Ok(Estimate {
        value: head.value + tail.value,
        error: head.error + tail.error,
        converged: true,
    })
}

/// Aitken extrapolation of three successive terms of a geometrically
/// converging sequence. Falls back to the last term when the differences
/// do not shrink.
pub fn aitken(s0: f64, s1: f64, s2: f64) -> f64 {
    let d1 = s1 - s0;
    let d2 = s2 - s1;
    let den = d2 - d1;
    if den == 0.0 || d1 == 0.0 || (d2 / d1).abs() >= 1.0 {
        return s2;
    }
    s2 - d2 * d2 / den
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl_integrates_polynomials_exactly() {
        for n in [1usize, 4, 10, 20] {
            let r = gauss_legendre(n);
            let deg = 2 * n - 1;
            let s: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x.powi(deg as i32 - 1)).sum();
            let want = if (deg - 1) % 2 == 0 { 2.0 / deg as f64 } else { 0.0 };
            assert!((s - want).abs() < 1e-13, "n={n}: {s} vs {want}");
        }
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let e = integrate(&|x: f64| x.powf(-0.5), 0.0, 1.0, QuadOptions::default()).unwrap();
        assert!((e.value - 2.0).abs() < 1e-9);
    }

    #[test]
    fn half_line_gaussian() {
        let e = half_line(&|x: f64| (-x * x).exp(), 0.0, 1.0, QuadOptions::default()).unwrap();
        assert!((e.value - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn aitken_is_exact_on_geometric_sequences() {
        let s = |k: i32| 3.0 + 0.7 * 0.5f64.powi(k);
        assert!((aitken(s(0), s(1), s(2)) - 3.0).abs() < 1e-14);
    }
}
