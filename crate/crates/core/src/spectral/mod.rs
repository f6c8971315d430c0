//! Sampled fields on uniform anisotropic grids, continuous-convention
//! Fourier transforms, decay-exponent regression and related diagnostics.

pub mod annulus;
pub mod fit;
pub mod io;
pub mod sample;
pub mod sclass;
pub mod transform;

use num_complex::Complex64;

use crate::error::{arg, Error, Result};
use crate::graded::{GradedLayout, Side};

pub use annulus::{annulus_cutoff, annulus_restrict};
pub(crate) use fit::halton;
pub use fit::{decay_exponent_fit, dilation_orbit_slope, fit_exponents, ExponentFit, FitRegion};
pub use io::{read_field, write_field};
pub use sample::{sample_function, sample_kernel, SampleMode, SampleOptions};
pub use sclass::{s_class_seminorm, s_class_seminorm_closed};
pub use transform::{forward_transform, inverse_transform};

/// Per-dimension node counts and spacings; nodes sit at `offset + j h` with
/// `offset = -(N/2) h`, so the origin is always a node.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub counts: Vec<usize>,
    pub spacings: Vec<f64>,
}

impl GridSpec {
    pub fn new(counts: Vec<usize>, spacings: Vec<f64>) -> Result<Self> {
        if counts.len() != spacings.len() {
            return Err(Error::Shape {
                expected: counts.len(),
                got: spacings.len(),
            });
        }
        for (i, (&n, &h)) in counts.iter().zip(&spacings).enumerate() {
            if n < 2 || n % 2 != 0 {
                return Err(arg("grid", format!("counts[{i}] = {n}: need an even count >= 2")));
            }
            if !(h > 0.0) || !h.is_finite() {
                return Err(arg("grid", format!("spacings[{i}] = {h}: must be positive")));
            }
        }
        Ok(GridSpec { counts, spacings })
    }

    /// Grid with `counts[i]` nodes covering total length `lengths[i]`.
    pub fn from_lengths(counts: Vec<usize>, lengths: &[f64]) -> Result<Self> {
        let h = counts.iter().zip(lengths).map(|(&n, &l)| l / n as f64).collect();
        Self::new(counts, h)
    }

    pub fn cube(n: usize, count: usize, length: f64) -> Result<Self> {
        Self::from_lengths(vec![count; n], &vec![length; n])
    }

    pub fn offsets(&self) -> Vec<f64> {
        self.counts
            .iter()
            .zip(&self.spacings)
            .map(|(&n, &h)| -((n / 2) as f64) * h)
            .collect()
    }

    /// Dual grid: `dxi = 2 pi / (N h)`.
    pub fn dual(&self) -> GridSpec {
        GridSpec {
            counts: self.counts.clone(),
            spacings: self
                .counts
                .iter()
                .zip(&self.spacings)
                .map(|(&n, &h)| 2.0 * std::f64::consts::PI / (n as f64 * h))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn ndim(&self) -> usize {
        self.counts.len()
    }

    /// Multi-index of a flat row-major index (last dimension fastest).
    pub fn unravel(&self, mut flat: usize, out: &mut [usize]) {
        for i in (0..self.ndim()).rev() {
            out[i] = flat % self.counts[i];
            flat /= self.counts[i];
        }
    }

    pub fn ravel(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.counts).fold(0, |a, (&i, &n)| a * n + i)
    }

    pub fn coords_of(&self, flat: usize, out: &mut [f64]) {
        let mut idx = vec![0; self.ndim()];
        self.unravel(flat, &mut idx);
        let off = self.offsets();
        for i in 0..self.ndim() {
            out[i] = off[i] + idx[i] as f64 * self.spacings[i];
        }
    }

    /// Half-widths `(N/2) h` of the covered box.
    pub fn half_extents(&self) -> Vec<f64> {
        self.counts
            .iter()
            .zip(&self.spacings)
            .map(|(&n, &h)| (n / 2) as f64 * h)
            .collect()
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacings.iter().product()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampledField {
    pub layout: GradedLayout,
    pub side: Side,
    pub grid: GridSpec,
    pub values: Vec<Complex64>,
    /// Flat indices of nodes zeroed because they lie in the singular exclusion.
    pub masked: Vec<usize>,
    /// Each value is an average over its cell this many times (per axis);
    /// the transform deconvolves the matching `sinc` factor.
    pub box_order: u32,
}

impl SampledField {
    pub fn new(layout: &GradedLayout, side: Side, grid: GridSpec, values: Vec<Complex64>) -> Result<Self> {
        if grid.ndim() != layout.total_dim() {
            return Err(Error::Shape {
                expected: layout.total_dim(),
                got: grid.ndim(),
            });
        }
        if values.len() != grid.len() {
            return Err(Error::Shape {
                expected: grid.len(),
                got: values.len(),
            });
        }
        Ok(SampledField {
            layout: layout.clone(),
            side,
            grid,
            values,
            masked: Vec::new(),
            box_order: 0,
        })
    }

    pub fn mask_fraction(&self) -> f64 {
        self.masked.len() as f64 / self.values.len() as f64
    }

    pub fn coords(&self, flat: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.grid.ndim()];
        self.grid.coords_of(flat, &mut x);
        x
    }

    /// `sum |f|^2 dV`.
    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell_volume()
    }

    pub fn scale(&self, c: Complex64) -> SampledField {
        let mut out = self.clone();
        for v in &mut out.values {
            *v *= c;
        }
        out
    }

    pub fn map_values(&self, f: impl Fn(&[f64], Complex64) -> Complex64) -> SampledField {
        let mut out = self.clone();
        let mut x = vec![0.0; self.grid.ndim()];
        for (i, v) in out.values.iter_mut().enumerate() {
            self.grid.coords_of(i, &mut x);
            *v = f(&x, *v);
        }
        out
    }

    /// Multilinear interpolation; zero outside the grid.
    pub fn interpolate(&self, x: &[f64]) -> Complex64 {
        interpolate(&self.grid, &self.values, x)
    }
}

pub(crate) fn interpolate(grid: &GridSpec, values: &[Complex64], x: &[f64]) -> Complex64 {
    let n = grid.ndim();
    let off = grid.offsets();
    let mut base = [0usize; 8];
    let mut frac = [0.0f64; 8];
    for i in 0..n {
        let t = (x[i] - off[i]) / grid.spacings[i];
        if !(t >= 0.0) || t > (grid.counts[i] - 1) as f64 {
            return Complex64::new(0.0, 0.0);
        }
        let b = (t.floor() as usize).min(grid.counts[i] - 2);
        base[i] = b;
        frac[i] = t - b as f64;
    }
    let mut acc = Complex64::new(0.0, 0.0);
    let mut idx = [0usize; 8];
    for corner in 0..(1usize << n) {
        let mut w = 1.0;
        for i in 0..n {
            let bit = (corner >> i) & 1;
            idx[i] = base[i] + bit;
            w *= if bit == 1 { frac[i] } else { 1.0 - frac[i] };
        }
        if w != 0.0 {
            acc += values[grid.ravel(&idx[..n])] * w;
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_geometry() {
        let g = GridSpec::from_lengths(vec![8, 4], &[4.0, 2.0]).unwrap();
        assert_eq!(g.offsets(), vec![-2.0, -1.0]);
        let d = g.dual();
        assert!((d.spacings[0] - 2.0 * std::f64::consts::PI / 4.0).abs() < 1e-15);
        let mut x = [0.0; 2];
        g.coords_of(g.ravel(&[4, 2]), &mut x);
        assert_eq!(x, [0.0, 0.0]);
        assert!(GridSpec::new(vec![3], vec![1.0]).is_err());
    }

    #[test]
    fn interpolation_is_exact_on_bilinear() {
        let l = GradedLayout::euclidean(2).unwrap();
        let g = GridSpec::cube(2, 8, 8.0).unwrap();
        let mut vals = Vec::new();
        let mut x = [0.0; 2];
        for i in 0..g.len() {
            g.coords_of(i, &mut x);
            vals.push(Complex64::new(1.0 + 2.0 * x[0] - x[1] + 0.5 * x[0] * x[1], 0.0));
        }
        let f = SampledField::new(&l, Side::Primal, g, vals).unwrap();
        let v = f.interpolate(&[0.3, -1.7]);
        assert!((v.re - (1.0 + 0.6 + 1.7 - 0.5 * 0.3 * 1.7)).abs() < 1e-12);
    }
}
