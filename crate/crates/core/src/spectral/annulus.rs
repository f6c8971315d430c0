use num_complex::Complex64;

use crate::error::{arg, Result};
use crate::graded::Side;
use crate::kernels::mollifier::profile_f64;
use crate::spectral::SampledField;

/// `h(r) = (1 - psi(r / r1)) psi(2 r / r2)`: identically 1 on `[2 r1, r2 / 2]`,
/// zero outside `(r1, r2)`.
pub fn annulus_cutoff(r: f64, r1: f64, r2: f64) -> f64 {
    (1.0 - profile_f64(r / r1)) * profile_f64(2.0 * r / r2)
}

/// Multiplies a dual field by `h(|xi|_j)`, `j` 1-based.
pub fn annulus_restrict(field: &SampledField, j: usize, r1: f64, r2: f64) -> Result<SampledField> {
    if field.side != Side::Dual {
        return Err(arg("field", "annulus restriction acts on dual-side fields"));
    }
    let l = &field.layout;
    if j == 0 || j > l.d() {
        return Err(arg("j", format!("layer index {j} outside 1..={}", l.d())));
    }
    if !(r1 > 0.0) || !(r2 > r1) {
        return Err(arg("radii", format!("need 0 < r1 < r2, got [{r1}, {r2}]")));
    }
    let half = field.grid.half_extents();
    let reach = (j - 1..l.d())
        .flat_map(|k| l.block(k).map(move |i| (i, k)))
        .map(|(i, k)| half[i].powf(1.0 / l.exponents_f64()[k]))
        .fold(0.0, f64::max);
    if r2 > reach {
        return Err(arg("radii", format!("r2 = {r2} lies outside the grid (reach {reach:.4})")));
    }
    let norm = l.default_norm();
    Ok(field.map_values(|x, v| {
        let pn = l.partial_norms_dual(x, norm);
        v * Complex64::new(annulus_cutoff(pn[j - 1], r1, r2), 0.0)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graded::GradedLayout;
    use crate::spectral::{sample_function, GridSpec};

    #[test]
    fn plateau_support_and_partition() {
        assert_eq!(annulus_cutoff(1.5, 0.5, 4.0), 1.0);
        assert_eq!(annulus_cutoff(8.0, 0.5, 4.0), 0.0);
        assert_eq!(annulus_cutoff(0.4, 0.5, 4.0), 0.0);
        for i in 0..50 {
            let r = 2f64.powf(i as f64 / 50.0);
            let s: f64 = (-5..=5).map(|k| annulus_cutoff(r * 2f64.powi(k), 0.5, 4.0)).sum();
            assert!((s - 2.0).abs() < 1e-12, "r={r}: {s}");
        }
    }

    #[test]
    fn restrict_constant_field() {
        let l = GradedLayout::euclidean(1).unwrap();
        let g = GridSpec::new(vec![64], vec![0.25]).unwrap();
        let f = sample_function(&l, Side::Dual, &g, |_| Complex64::new(1.0, 0.0)).unwrap();
        let r = annulus_restrict(&f, 1, 0.5, 4.0).unwrap();
        let at = |xi: f64| r.values[(xi / 0.25) as usize + 32].re;
        assert_eq!(at(1.5), 1.0);
        assert_eq!(at(0.25), 0.0);
        assert!(annulus_restrict(&f, 1, 0.5, 40.0).is_err());
    }
}
