use crate::error::{arg, Error, Result};
use crate::graded::{GradedLayout, Side};
use crate::jet::Jet;
use crate::kernels::jet_space;
use crate::spectral::{GridSpec, SampledField};

/// Highest total derivative order the grid stencils support.
const MAX_STENCIL_ORDER: usize = 8;

/// Multiindices with homogeneous length `<= n`.
fn admissible(layout: &GradedLayout, n: u32) -> Vec<Vec<u32>> {
    let p = layout.exponents_f64();
    let pmin = p.iter().cloned().fold(f64::INFINITY, f64::min);
    let order = (n as f64 / pmin + 1e-12).floor() as usize;
    jet_space(layout.total_dim(), order)
        .monomials()
        .iter()
        .filter(|m| {
            let len: f64 = m.iter().enumerate().map(|(i, &a)| a as f64 * p[layout.layer_of(i)]).sum();
            len <= n as f64 + 1e-12
        })
        .cloned()
        .collect()
}

fn weight(layout: &GradedLayout, xi: &[f64], nu: &[f64], alpha: &[u32]) -> f64 {
    let pn = layout.partial_norms_dual(xi, layout.default_norm());
    let p = layout.exponents_f64();
    (0..layout.d())
        .map(|k| {
            let len: f64 = layout.block(k).map(|i| alpha[i] as f64).sum::<f64>() * p[k];
            (1.0 + pn[k]).powf(-nu[k] + len)
        })
        .product()
}

/// `sup_{|alpha| <= n} sup_xi prod_k (1 + |xi|_k)^{-nu_k + |alpha_k|} |D^alpha F(xi)|`
/// on a dual field, with derivatives from iterated central differences.
pub fn s_class_seminorm(field: &SampledField, nu: &[f64], n: u32) -> Result<f64> {
    if field.side != Side::Dual {
        return Err(arg("field", "S-class seminorms are taken on the dual side"));
    }
    let l = &field.layout;
    if nu.len() != l.d() {
        return Err(Error::Shape {
            expected: l.d(),
            got: nu.len(),
        });
    }
    let alphas = admissible(l, n);
    let order = alphas.iter().map(|a| a.iter().sum::<u32>() as usize).max().unwrap_or(0);
    if order > MAX_STENCIL_ORDER {
        return Err(arg(
            "n",
            format!("derivative order {order} exceeds the stencil order {MAX_STENCIL_ORDER}"),
        ));
    }
    let g = &field.grid;
    if g.counts.iter().any(|&c| c < 4 * order + 4) {
        return Err(arg("n", format!("grid too small for order-{order} stencils")));
    }
    let mut best: f64 = 0.0;
    let mut idx = vec![0usize; g.ndim()];
    let mut x = vec![0.0; g.ndim()];
    for flat in 0..g.len() {
        g.unravel(flat, &mut idx);
        if idx.iter().zip(&g.counts).any(|(&i, &c)| i < order || i + order >= c) {
            continue;
        }
        g.coords_of(flat, &mut x);
        for a in &alphas {
            let d = stencil(g, &field.values, &idx, a);
            best = best.max(weight(l, &x, nu, a) * d);
        }
    }
    Ok(best)
}

/// `|D^alpha F|` at a node: each axis uses `(delta_{2h})^m`, offsets `-m, -m+2, ..., m`.
fn stencil(g: &GridSpec, values: &[num_complex::Complex64], idx: &[usize], alpha: &[u32]) -> f64 {
    let mut terms: Vec<(Vec<isize>, f64)> = vec![(vec![0; idx.len()], 1.0)];
    for (axis, &m) in alpha.iter().enumerate() {
        if m == 0 {
            continue;
        }
        let h = g.spacings[axis];
        let mut next = Vec::new();
        let mut c = 1.0;
        for k in 0..=m {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let off = m as isize - 2 * k as isize;
            for (o, w) in &terms {
                let mut o = o.clone();
                o[axis] = off;
                next.push((o, w * sign * c / (2.0 * h).powi(m as i32)));
            }
            c = c * (m - k) as f64 / (k + 1) as f64;
        }
        terms = next;
    }
    let mut acc = num_complex::Complex64::new(0.0, 0.0);
    let mut j = vec![0usize; idx.len()];
    for (o, w) in &terms {
        for i in 0..idx.len() {
            j[i] = (idx[i] as isize + o[i]) as usize;
        }
        acc += values[g.ravel(&j)] * *w;
    }
    acc.norm()
}

/// The same seminorm for a closed-form symbol evaluated on jets at the nodes of `grid`.
pub fn s_class_seminorm_closed(layout: &GradedLayout, f: &dyn Fn(&[Jet]) -> Jet, nu: &[f64], n: u32, grid: &GridSpec) -> Result<f64> {
    if nu.len() != layout.d() {
        return Err(Error::Shape {
            expected: layout.d(),
            got: nu.len(),
        });
    }
    let alphas = admissible(layout, n);
    let order = alphas.iter().map(|a| a.iter().sum::<u32>() as usize).max().unwrap_or(0);
    let sp = jet_space(layout.total_dim(), order);
    let mut best: f64 = 0.0;
    let mut x = vec![0.0; grid.ndim()];
    for flat in 0..grid.len() {
        grid.coords_of(flat, &mut x);
        let j = f(&Jet::point(&sp, &x));
        for a in &alphas {
            best = best.max(weight(layout, &x, nu, a) * j.derivative(a).abs());
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::Scalar;
    use crate::spectral::sample_function;
    use num_complex::Complex64;
    use std::f64::consts::PI;

    fn gaussian_hat() -> (GradedLayout, SampledField) {
        let l = GradedLayout::euclidean(1).unwrap();
        let g = GridSpec::new(vec![512], vec![0.05]).unwrap();
        let f = sample_function(&l, Side::Dual, &g, |x| Complex64::new((2.0 * PI).sqrt() * (-0.5 * x[0] * x[0]).exp(), 0.0)).unwrap();
        (l, f)
    }

    #[test]
    fn gaussian_symbol() {
        let (l, f) = gaussian_hat();
        let s0 = s_class_seminorm(&f, &[0.0], 0).unwrap();
        assert!((s0 - (2.0 * PI).sqrt()).abs() < 1e-12);
        let s2 = s_class_seminorm(&f, &[0.0], 2).unwrap();
        assert!(s2 >= s0);
        let closed = s_class_seminorm_closed(
            &l,
            &|x: &[Jet]| x[0].mul(&x[0]).scale(-0.5).exp().scale((2.0 * PI).sqrt()),
            &[0.0],
            2,
            &f.grid,
        )
        .unwrap();
        assert!((closed - s2).abs() < 1e-2 * closed, "{closed} vs {s2}");
    }

    #[test]
    fn growth_detected_on_nested_grids() {
        let l = GradedLayout::euclidean(1).unwrap();
        let sym = |x: &[Jet]| x[0].mul(&x[0]).add_const(1.0).powf(-0.25);
        let at = |nu: f64, h: f64| {
            let g = GridSpec::new(vec![512], vec![h]).unwrap();
            s_class_seminorm_closed(&l, &sym, &[nu], 0, &g).unwrap()
        };
        // exact order -1/2: bounded; a smaller order grows with the extent
        assert!((at(-0.5, 0.5) - at(-0.5, 2.0)).abs() < 0.05);
        assert!(at(-1.0, 4.0) > 2.0 * at(-1.0, 0.5));
    }
}
