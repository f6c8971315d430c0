use rayon::prelude::*;

use crate::calculus::ClassTag;
use crate::error::{arg, Result};
use crate::groupconv::{group_convolve, GroupLaw};
use crate::kernels::{pair_function, KernelModel, PairOptions, TestFunction, Valued};
use crate::spectral::SampledField;

/// `T_A f(x) = int f(x y) A(y) dy` at each point, principal value around
/// the singular set of `A`. `F0` kernels act only on test functions with a
/// vanishing last-block mean.
pub fn operator_apply(kernel: &KernelModel, f: &TestFunction, law: &GroupLaw, points: &[Vec<f64>], opts: &PairOptions) -> Result<Vec<Valued>> {
    if f.layout != kernel.layout || law.dim() != kernel.layout.total_dim() {
        return Err(arg("f", "test function, kernel and law must share one layout"));
    }
    if kernel.class.tag == ClassTag::F0 {
        f.moment_check(0)?;
    }
    let scale = f.support_radius().unwrap_or(1.0);
    let scales = vec![scale; law.dim()];
    points
        .par_iter()
        .map(|x| {
            law.algebra.layout.check_point(x)?;
            let g = |y: &[f64]| f.value(&law.multiply(x, y));
            pair_function(kernel, &g, &scales, opts)
        })
        .collect()
}

/// Grid form `T_A g = g * A(.^{-1})`.
pub fn operator_apply_field(a: &SampledField, g: &SampledField, law: &GroupLaw) -> Result<SampledField> {
    group_convolve(g, &reflect(a), law)
}

/// `A(x^{-1}) = A(-x)`; the grid is symmetric about the origin except for its first node.
pub fn reflect(a: &SampledField) -> SampledField {
    let mut out = a.clone();
    let n = a.grid.ndim();
    let mut idx = vec![0usize; n];
    for flat in 0..a.values.len() {
        a.grid.unravel(flat, &mut idx);
        let mut j = idx.clone();
        let mut inside = true;
        for i in 0..n {
            let c = a.grid.counts[i];
            // node k sits at (k - c/2) h; its mirror is c - k
            if idx[i] == 0 {
                inside = false;
            } else {
                j[i] = c - idx[i];
            }
        }
        out.values[flat] = if inside { a.values[a.grid.ravel(&j)] } else { num_complex::Complex64::new(0.0, 0.0) };
    }
    out.masked = Vec::new();
    out
}
