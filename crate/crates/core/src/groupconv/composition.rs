use serde::{Deserialize, Serialize};

use crate::error::{arg, Error, Result};
use crate::graded::Side;
use crate::groupconv::{group_convolve, GroupLaw};
use crate::kernels::KernelModel;
use crate::spectral::{forward_transform, sample_kernel, GridSpec, SampleOptions, SampledField};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompositionOptions {
    /// Truncation scales of `A`, decreasing.
    pub eps: Vec<f64>,
    /// Truncation scale of `B`; `None` picks the largest support the grid admits.
    pub b_eps: Option<f64>,
    /// Annulus `r1 <= |xi|_d <= r2` for the Cauchy diagnostic.
    pub annulus: [f64; 2],
    pub sample: SampleOptions,
}

impl Default for CompositionOptions {
    fn default() -> Self {
        CompositionOptions {
            eps: vec![0.5, 0.25, 0.125, 0.0625, 0.03125],
            b_eps: None,
            annulus: [1.0, 2.0],
            sample: SampleOptions::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CompositionResult {
    pub eps: Vec<f64>,
    pub b_eps: f64,
    /// Dual fields `Phi_eps`, one per entry of `eps`.
    pub phis: Vec<SampledField>,
    /// `sup_annulus |Phi_{eps_{i+1}} - Phi_{eps_i}|`.
    pub cauchy: Vec<f64>,
    pub cauchy_monotone: bool,
    /// `sup_annulus |Phi|` at the smallest `eps`, the scale of the differences.
    pub annulus_sup: f64,
    /// `sup_annulus` change of the final `Phi` when `B`'s truncation radius is halved.
    pub b_truncation_change: f64,
}

/// Differences below this multiple of machine precision times `sup |Phi|` are
/// converged, and count as nonincreasing.
const NOISE_FLOOR: f64 = 1e3 * f64::EPSILON;

/// `true` when the sequence never increases above the rounding floor.
pub fn monotone_with_floor(seq: &[f64], scale: f64) -> bool {
    let floor = NOISE_FLOOR * scale;
    seq.windows(2).all(|w| w[1] <= w[0] || w[1] <= floor)
}

/// Grid realization of `Phi_eps = (A_eps * B)^` with `B` truncated at the
/// grid scale.
pub fn regularized_composition(a: &KernelModel, b: &KernelModel, law: &GroupLaw, grid: &GridSpec, opts: &CompositionOptions) -> Result<CompositionResult> {
    if opts.eps.is_empty() {
        return Err(arg("eps", "need at least one truncation scale"));
    }
    if opts.eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(arg("eps", "truncation scales must decrease"));
    }
    if a.layout != b.layout || a.layout.total_dim() != law.dim() {
        return Err(arg("kernels", "A, B and the group law must share one layout"));
    }
    let eps_min = *opts.eps.last().unwrap();
    let b_eps = match opts.b_eps {
        Some(e) => e,
        None => auto_b_eps(law, grid, eps_min)?,
    };
    let sample_b = |e: f64| sample_kernel(b, grid, Some(e), &opts.sample);
    let bf = sample_b(b_eps)?;
    let phi_of = |af: &SampledField, bf: &SampledField| -> Result<SampledField> { forward_transform(&group_convolve(af, bf, law)?) };
    let mut phis = Vec::new();
    for &e in &opts.eps {
        let af = sample_kernel(a, grid, Some(e), &opts.sample)?;
        phis.push(phi_of(&af, &bf)?);
    }
    let mask = annulus_mask(&phis[0], opts.annulus)?;
    let sup_diff = |p: &SampledField, q: &SampledField| {
        mask.iter()
            .map(|&i| (p.values[i] - q.values[i]).norm())
            .fold(0.0, f64::max)
    };
    let cauchy: Vec<f64> = phis.windows(2).map(|w| sup_diff(&w[0], &w[1])).collect();
    let last = phis.last().unwrap();
    let annulus_sup = mask.iter().map(|&i| last.values[i].norm()).fold(0.0, f64::max);
    let af = sample_kernel(a, grid, Some(eps_min), &opts.sample)?;
    let b_truncation_change = sup_diff(last, &phi_of(&af, &sample_b(2.0 * b_eps)?)?);
    Ok(CompositionResult {
        eps: opts.eps.clone(),
        b_eps,
        cauchy_monotone: monotone_with_floor(&cauchy, annulus_sup),
        cauchy,
        phis,
        annulus_sup,
        b_truncation_change,
    })
}

/// Flat indices of dual nodes with `r1 <= |xi|_d <= r2`.
pub fn annulus_mask(field: &SampledField, annulus: [f64; 2]) -> Result<Vec<usize>> {
    if field.side != Side::Dual {
        return Err(arg("field", "annulus masks are taken on the dual side"));
    }
    let l = &field.layout;
    let norm = l.default_norm();
    let d = l.d();
    let mask: Vec<usize> = (0..field.values.len())
        .filter(|&i| {
            let r = l.partial_norms_dual(&field.coords(i), norm)[d - 1];
            r >= annulus[0] && r <= annulus[1]
        })
        .collect();
    if mask.is_empty() {
        return Err(Error::Resolution(format!(
            "no dual node lies in the annulus [{}, {}]",
            annulus[0], annulus[1]
        )));
    }
    Ok(mask)
}

/// Largest `B` support (smallest `eps_B`, a power of two) whose product with
/// `A_eps_min` stays inside the grid.
fn auto_b_eps(law: &GroupLaw, grid: &GridSpec, eps_min: f64) -> Result<f64> {
    let l = &law.algebra.layout;
    let half = grid.half_extents();
    let reach = |e: f64| -> Vec<f64> {
        (0..grid.ndim())
            .map(|i| (2.0 / e).powf(l.exponents_f64()[l.layer_of(i)]))
            .collect()
    };
    let ra = reach(eps_min);
    let mut e = eps_min;
    loop {
        let need = law.magnitude_bound(&ra, &reach(e));
        if (0..grid.ndim()).all(|i| need[i] <= half[i] - 2.0 * grid.spacings[i]) {
            return Ok(e);
        }
        e *= 2.0;
        if e > 1e6 {
            return Err(Error::Overflow(format!(
                "A truncated at eps = {eps_min} leaves no room for B on this grid"
            )));
        }
    }
}
