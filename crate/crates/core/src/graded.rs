//! Graded vector-space structure: anisotropic dilations, homogeneous norms,
//! partial norms along the primal and dual filtrations, multiindices.

use std::fmt;
use std::ops::Range;

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{arg, Error, Result};
use crate::jet::Scalar;

pub type Rational = Ratio<i64>;

/// Parse `p/q`, `p` or `-p/q`.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let t = s.trim();
    let bad = || arg("rational", format!("cannot parse `{s}` as p/q"));
    match t.split_once('/') {
        Some((n, d)) => {
            let n: i64 = n.trim().parse().map_err(|_| bad())?;
            let d: i64 = d.trim().parse().map_err(|_| bad())?;
            if d == 0 {
                return Err(arg("rational", format!("zero denominator in `{s}`")));
            }
            Ok(Rational::new(n, d))
        }
        None => Ok(Rational::from_integer(t.parse().map_err(|_| bad())?)),
    }
}

pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Primal,
    Dual,
}

/// Homogeneous norm variant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormVariant {
    /// `max_k |x_k|^{1/p_k}`.
    Max,
    /// `(sum_k |x_k|^{2M/p_k})^{1/(2M)}`.
    Smooth(u32),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Layer {
    pub exponent: Rational,
    pub dim: usize,
}

#[derive(Clone, Debug)]
pub struct GradedLayout {
    layers: Vec<Layer>,
    offsets: Vec<usize>,
    exps: Vec<f64>,
}

impl PartialEq for GradedLayout {
    fn eq(&self, other: &Self) -> bool {
        self.layers == other.layers
    }
}

impl Eq for GradedLayout {}

impl GradedLayout {
    /// Strict graded layout: `p_1 = 1 < p_2 < ... < p_d`.
    pub fn new(layers: Vec<(Rational, usize)>) -> Result<Self> {
        Self::validated(layers, true)
    }

    /// Layout whose consecutive exponents may coincide (several flag blocks
    /// with the same homogeneity). Still requires `p_1 = 1` and no decrease.
    pub fn flag(layers: Vec<(Rational, usize)>) -> Result<Self> {
        Self::validated(layers, false)
    }

    /// Euclidean space of dimension `n`.
    pub fn euclidean(n: usize) -> Result<Self> {
        Self::new(vec![(Rational::from_integer(1), n)])
    }

    /// Layout obtained by removing layers; `p_1` need not be 1 and the
    /// result may be empty (scalar layout).
    pub fn reduced(layers: Vec<(Rational, usize)>) -> Result<Self> {
        for (k, (p, n)) in layers.iter().enumerate() {
            if !p.is_positive() {
                return Err(Error::Layout(format!("layer {}: exponent must be positive", k + 1)));
            }
            if *n == 0 {
                return Err(Error::Layout(format!("layer {}: dimension must be at least 1", k + 1)));
            }
        }
        Ok(Self::build(layers))
    }

    pub fn scalar() -> Self {
        Self::build(Vec::new())
    }

    fn validated(layers: Vec<(Rational, usize)>, strict: bool) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Layout("at least one layer is required".into()));
        }
        if layers[0].0 != Rational::from_integer(1) {
            return Err(Error::Layout(format!(
                "layers[0].exponent must be 1, got {}",
                format_rational(&layers[0].0)
            )));
        }
        for (k, (_, n)) in layers.iter().enumerate() {
            if *n == 0 {
                return Err(Error::Layout(format!("layers[{k}].dim must be at least 1")));
            }
        }
        for k in 1..layers.len() {
            let (a, b) = (layers[k - 1].0, layers[k].0);
            if b < a || (strict && b == a) {
                let rel = if strict { ">" } else { ">=" };
                return Err(Error::Layout(format!(
                    "layers[{k}].exponent: exponents must increase (need {} {rel} {})",
                    format_rational(&b),
                    format_rational(&a)
                )));
            }
        }
        Ok(Self::build(layers))
    }

    fn build(layers: Vec<(Rational, usize)>) -> Self {
        let mut offsets = vec![0];
        for (_, n) in &layers {
            offsets.push(offsets.last().unwrap() + n);
        }
        let exps = layers.iter().map(|(p, _)| to_f64(p)).collect();
        let layers = layers
            .into_iter()
            .map(|(exponent, dim)| Layer { exponent, dim })
            .collect();
        GradedLayout {
            layers,
            offsets,
            exps,
        }
    }

    /// Parse `p:n,p:n,...`; a bare `p` means dimension 1.
    pub fn parse_spec(spec: &str, flag_blocks: bool) -> Result<Self> {
        let mut layers = Vec::new();
        for part in spec.split(',') {
            let part = part.trim();
            let (p, n) = match part.split_once(':') {
                Some((p, n)) => (p, n),
                None => (part, "1"),
            };
            let n: usize = n
                .trim()
                .parse()
                .map_err(|_| Error::Layout(format!("bad dimension in `{part}`")))?;
            layers.push((parse_rational(p)?, n));
        }
        if flag_blocks {
            Self::flag(layers)
        } else {
            Self::new(layers)
        }
    }

    pub fn spec_string(&self) -> String {
        self.layers
            .iter()
            .map(|l| format!("{}:{}", format_rational(&l.exponent), l.dim))
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn d(&self) -> usize {
        self.layers.len()
    }

    pub fn exponent(&self, k: usize) -> Rational {
        self.layers[k].exponent
    }

    pub fn exponents_f64(&self) -> &[f64] {
        &self.exps
    }

    pub fn dim(&self, k: usize) -> usize {
        self.layers[k].dim
    }

    pub fn total_dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    /// Coordinate range of layer `k` (0-based).
    pub fn block(&self, k: usize) -> Range<usize> {
        self.offsets[k]..self.offsets[k + 1]
    }

    pub fn layer_of(&self, coord: usize) -> usize {
        (0..self.d()).find(|&k| self.block(k).contains(&coord)).unwrap_or(0)
    }

    /// `Q_k = p_k n_k` (0-based `k`).
    pub fn q_k(&self, k: usize) -> Rational {
        self.layers[k].exponent * Rational::from_integer(self.layers[k].dim as i64)
    }

    pub fn q_vec(&self) -> Vec<Rational> {
        (0..self.d()).map(|k| self.q_k(k)).collect()
    }

    /// Homogeneous dimension.
    pub fn q(&self) -> Rational {
        self.q_vec().into_iter().fold(Rational::zero(), |a, b| a + b)
    }

    pub fn q_f64(&self) -> f64 {
        to_f64(&self.q())
    }

    /// Whether `2M/p_k` is an even integer for every layer.
    pub fn valid_smooth_m(&self, m: u32) -> bool {
        m > 0
            && self.layers.iter().all(|l| {
                let r = Rational::from_integer(2 * m as i64) / l.exponent;
                r.is_integer() && r.numer().is_even()
            })
    }

    /// Smallest admissible `M` (the lcm of the exponent numerators).
    pub fn min_smooth_m(&self) -> u32 {
        let m = self
            .layers
            .iter()
            .fold(1i64, |acc, l| acc.lcm(l.exponent.numer()));
        m as u32
    }

    pub fn default_norm(&self) -> NormVariant {
        NormVariant::Smooth(self.min_smooth_m())
    }

    pub fn check_norm(&self, v: NormVariant) -> Result<()> {
        match v {
            NormVariant::Max => Ok(()),
            NormVariant::Smooth(m) if self.valid_smooth_m(m) => Ok(()),
            NormVariant::Smooth(m) => Err(arg(
                "norm",
                format!("M = {m} is invalid: 2M/p_k must be an even integer for every layer"),
            )),
        }
    }

    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.total_dim() {
            return Err(Error::Shape {
                expected: self.total_dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// `delta_t x`: layer `k` scaled by `t^{p_k}`.
    pub fn dilate(&self, t: f64, x: &[f64]) -> Result<Vec<f64>> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(arg("t", format!("dilation parameter must be positive, got {t}")));
        }
        self.check_point(x)?;
        let mut out = x.to_vec();
        self.dilate_in_place(t, &mut out);
        Ok(out)
    }

    pub(crate) fn dilate_in_place(&self, t: f64, x: &mut [f64]) {
        for k in 0..self.d() {
            let s = t.powf(self.exps[k]);
            for v in &mut x[self.block(k)] {
                *v *= s;
            }
        }
    }

    /// Homogeneous block sizes `|x_k|^{1/p_k}`.
    pub fn block_sizes(&self, x: &[f64]) -> Vec<f64> {
        (0..self.d())
            .map(|k| {
                let n2: f64 = x[self.block(k)].iter().map(|v| v * v).sum();
                n2.sqrt().powf(1.0 / self.exps[k])
            })
            .collect()
    }

    fn combine(sizes: &[f64], v: NormVariant) -> f64 {
        let amax = sizes.iter().cloned().fold(0.0, f64::max);
        match v {
            NormVariant::Max => amax,
            NormVariant::Smooth(m) => {
                if amax == 0.0 {
                    return 0.0;
                }
                let s: f64 = sizes.iter().map(|a| (a / amax).powi(2 * m as i32)).sum();
                amax * s.powf(1.0 / (2 * m) as f64)
            }
        }
    }

    pub fn hom_norm(&self, x: &[f64], v: NormVariant) -> Result<f64> {
        self.check_norm(v)?;
        self.check_point(x)?;
        Ok(Self::combine(&self.block_sizes(x), v))
    }

    pub(crate) fn norm_unchecked(&self, x: &[f64], v: NormVariant) -> f64 {
        Self::combine(&self.block_sizes(x), v)
    }

    /// `|x|_j` for `j` in `1..=d`: layers after `j` zeroed.
    pub fn partial_norm_primal(&self, x: &[f64], j: usize, v: NormVariant) -> Result<f64> {
        self.check_norm(v)?;
        self.check_point(x)?;
        self.check_j(j)?;
        Ok(Self::combine(&self.block_sizes(x)[..j], v))
    }

    /// `|xi|_j` for `j` in `1..=d`: layers before `j` zeroed.
    pub fn partial_norm_dual(&self, xi: &[f64], j: usize, v: NormVariant) -> Result<f64> {
        self.check_norm(v)?;
        self.check_point(xi)?;
        self.check_j(j)?;
        Ok(Self::combine(&self.block_sizes(xi)[j - 1..], v))
    }

    /// All primal partial norms `(|x|_1, ..., |x|_d)`.
    pub fn partial_norms_primal(&self, x: &[f64], v: NormVariant) -> Vec<f64> {
        let s = self.block_sizes(x);
        (1..=self.d()).map(|j| Self::combine(&s[..j], v)).collect()
    }

    /// All dual partial norms `(|xi|_1, ..., |xi|_d)`.
    pub fn partial_norms_dual(&self, xi: &[f64], v: NormVariant) -> Vec<f64> {
        let s = self.block_sizes(xi);
        (1..=self.d()).map(|j| Self::combine(&s[j - 1..], v)).collect()
    }

    fn check_j(&self, j: usize) -> Result<()> {
        if j == 0 || j > self.d() {
            return Err(arg("j", format!("layer index {j} outside 1..={}", self.d())));
        }
        Ok(())
    }

    /// Norm of the layers in `layers` evaluated on generic scalars.
    pub fn norm_generic<S: Scalar>(&self, x: &[S], layers: Range<usize>, v: NormVariant) -> S {
        let zero = x[0].lift(0.0);
        match v {
            NormVariant::Max => {
                let mut best: Option<(f64, S)> = None;
                for k in layers {
                    let n2 = self.block(k).fold(zero.clone(), |a, i| a.add(&x[i].mul(&x[i])));
                    let a = n2.powf(0.5 / self.exps[k]);
                    if best.as_ref().map_or(true, |(b, _)| a.value() > *b) {
                        best = Some((a.value(), a));
                    }
                }
                best.map(|b| b.1).unwrap_or(zero)
            }
            NormVariant::Smooth(m) => {
                let mut s = zero.clone();
                for k in layers {
                    let n2 = self.block(k).fold(zero.clone(), |a, i| a.add(&x[i].mul(&x[i])));
                    let e = Rational::from_integer(m as i64) / self.layers[k].exponent;
                    let t = match e.to_integer().try_into() {
                        Ok(n) if e.is_integer() => n2.powi(n),
                        _ => n2.powf(to_f64(&e)),
                    };
                    s = s.add(&t);
                }
                s.powf(1.0 / (2 * m) as f64)
            }
        }
    }

    /// `|alpha| = sum_k p_k sum_i alpha_{ki}`.
    pub fn multiindex_length(&self, a: &MultiIndex) -> Result<Rational> {
        Ok(self
            .layer_lengths(a)?
            .into_iter()
            .fold(Rational::zero(), |x, y| x + y))
    }

    /// Per-layer lengths `|alpha_k| = p_k sum_i alpha_{ki}`.
    pub fn layer_lengths(&self, a: &MultiIndex) -> Result<Vec<Rational>> {
        self.check_len(a.0.len())?;
        Ok((0..self.d())
            .map(|k| {
                let s: i64 = a.0[self.block(k)].iter().map(|&v| v as i64).sum();
                self.layers[k].exponent * Rational::from_integer(s)
            })
            .collect())
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if n != self.total_dim() {
            return Err(Error::Shape {
                expected: self.total_dim(),
                got: n,
            });
        }
        Ok(())
    }

    /// Layout with layer `j` (1-based) removed.
    pub fn remove_layer(&self, j: usize) -> Result<GradedLayout> {
        self.check_j(j)?;
        let rest = self
            .layers
            .iter()
            .enumerate()
            .filter(|(k, _)| k + 1 != j)
            .map(|(_, l)| (l.exponent, l.dim))
            .collect();
        GradedLayout::reduced(rest)
    }
}

impl fmt::Display for GradedLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.spec_string())
    }
}

/// A point in primal or dual space, stored as flat coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    pub side: Side,
    pub coords: Vec<f64>,
}

impl Point {
    pub fn from_blocks(layout: &GradedLayout, side: Side, blocks: &[Vec<f64>]) -> Result<Self> {
        if blocks.len() != layout.d() {
            return Err(Error::Shape {
                expected: layout.d(),
                got: blocks.len(),
            });
        }
        for (k, b) in blocks.iter().enumerate() {
            if b.len() != layout.dim(k) {
                return Err(Error::Shape {
                    expected: layout.dim(k),
                    got: b.len(),
                });
            }
        }
        Ok(Point {
            side,
            coords: blocks.concat(),
        })
    }

    pub fn block<'a>(&'a self, layout: &GradedLayout, k: usize) -> &'a [f64] {
        &self.coords[layout.block(k)]
    }
}

/// Multiindex stored per coordinate, blocks following the layout.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn zero(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    pub fn from_blocks(layout: &GradedLayout, blocks: &[Vec<u32>]) -> Result<Self> {
        let flat: Vec<u32> = blocks.concat();
        layout.check_len(flat.len())?;
        if blocks.len() != layout.d() || blocks.iter().enumerate().any(|(k, b)| b.len() != layout.dim(k)) {
            return Err(arg("multiindex", "block lengths do not match the layout"));
        }
        Ok(MultiIndex(flat))
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0)
    }

    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn add(&self, o: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&o.0).map(|(a, b)| a + b).collect())
    }
}

/// Order vector `nu` in `Q^d`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct OrderVector(pub Vec<Rational>);

impl OrderVector {
    pub fn parse(items: &[impl AsRef<str>]) -> Result<Self> {
        items
            .iter()
            .map(|s| parse_rational(s.as_ref()))
            .collect::<Result<Vec<_>>>()
            .map(OrderVector)
    }

    pub fn from_ratios(v: &[(i64, i64)]) -> Self {
        OrderVector(v.iter().map(|&(n, d)| Rational::new(n, d)).collect())
    }

    pub fn zeros(d: usize) -> Self {
        OrderVector(vec![Rational::zero(); d])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(to_f64).collect()
    }

    pub fn add(&self, o: &OrderVector) -> OrderVector {
        OrderVector(self.0.iter().zip(&o.0).map(|(a, b)| a + b).collect())
    }

    pub fn strings(&self) -> Vec<String> {
        self.0.iter().map(format_rational).collect()
    }
}

impl fmt::Display for OrderVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self.strings().join(","))
    }
}

impl Serialize for OrderVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.strings().serialize(s)
    }
}

impl<'de> Deserialize<'de> for OrderVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v: Vec<String> = Vec::deserialize(d)?;
        OrderVector::parse(&v).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    fn heis() -> GradedLayout {
        GradedLayout::new(vec![(r(1, 1), 2), (r(2, 1), 1)]).unwrap()
    }

    #[test]
    fn dilation_examples() {
        let l = GradedLayout::euclidean(1).unwrap();
        assert_eq!(l.dilate(2.0, &[3.0]).unwrap(), vec![6.0]);
        let l = GradedLayout::new(vec![(r(1, 1), 1), (r(2, 1), 1)]).unwrap();
        assert_eq!(l.dilate(2.0, &[1.0, 1.0]).unwrap(), vec![2.0, 4.0]);
        let l = GradedLayout::new(vec![(r(1, 1), 1), (r(2, 1), 1), (r(3, 1), 1)]).unwrap();
        assert_eq!(l.dilate(1.0, &[0.3, -2.0, 5.0]).unwrap(), vec![0.3, -2.0, 5.0]);
        assert!(l.dilate(0.0, &[1.0, 1.0, 1.0]).is_err());
        assert!(l.dilate(1.0, &[1.0]).is_err());
    }

    #[test]
    fn norm_examples() {
        let l = GradedLayout::new(vec![(r(1, 1), 1), (r(2, 1), 1)]).unwrap();
        let v = l.hom_norm(&[0.0, 9.0], NormVariant::Max).unwrap();
        assert!((v - 3.0).abs() < 1e-15);
        assert!(l.hom_norm(&[1.0, 1.0], NormVariant::Smooth(1)).is_err());
        let v = l.hom_norm(&[1.0, 1.0], NormVariant::Smooth(2)).unwrap();
        assert!((v - 2f64.powf(0.25)).abs() < 1e-14);
        assert_eq!(l.min_smooth_m(), 2);
        let e = GradedLayout::euclidean(1).unwrap();
        for v in [NormVariant::Max, NormVariant::Smooth(1)] {
            assert_eq!(e.hom_norm(&[-3.0], v).unwrap(), 3.0);
        }
    }

    #[test]
    fn partial_norm_examples() {
        let l = GradedLayout::flag(vec![(r(1, 1), 1), (r(1, 1), 1)]).unwrap();
        let x = [3.0, 4.0];
        assert_eq!(l.partial_norm_primal(&x, 1, NormVariant::Max).unwrap(), 3.0);
        assert_eq!(l.partial_norm_primal(&x, 2, NormVariant::Max).unwrap(), 4.0);
        assert_eq!(l.partial_norm_dual(&x, 2, NormVariant::Max).unwrap(), 4.0);
        let s = NormVariant::Smooth(1);
        assert!((l.partial_norm_dual(&x, 1, s).unwrap() - 5.0).abs() < 1e-14);
        assert!((l.partial_norm_primal(&x, 2, s).unwrap() - 5.0).abs() < 1e-14);
        assert!(l.partial_norm_primal(&x, 3, s).is_err());
        let h = heis();
        let x = [3.0, 4.0, 7.0];
        assert!((h.partial_norm_primal(&x, 1, h.default_norm()).unwrap() - 5.0).abs() < 1e-14);
        assert!((h.partial_norm_dual(&x, 2, h.default_norm()).unwrap() - 7f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn multiindex_lengths() {
        let h = heis();
        let a = MultiIndex::from_blocks(&h, &[vec![1, 0], vec![1]]).unwrap();
        assert_eq!(h.multiindex_length(&a).unwrap(), r(3, 1));
        assert_eq!(h.multiindex_length(&MultiIndex::zero(3)).unwrap(), r(0, 1));
        let e = GradedLayout::euclidean(1).unwrap();
        assert_eq!(e.multiindex_length(&MultiIndex(vec![3])).unwrap(), r(3, 1));
    }

    #[test]
    fn layout_validation() {
        assert!(GradedLayout::new(vec![(r(1, 1), 1), (r(1, 1), 1)]).is_err());
        assert!(GradedLayout::flag(vec![(r(1, 1), 1), (r(1, 1), 1)]).is_ok());
        let e = GradedLayout::flag(vec![(r(1, 1), 1), (r(1, 2), 1)]).unwrap_err();
        assert!(e.to_string().contains("layers[1].exponent"));
        assert!(GradedLayout::new(vec![(r(2, 1), 1)]).is_err());
        assert_eq!(heis().q(), r(4, 1));
        let red = heis().remove_layer(1).unwrap();
        assert_eq!(red.exponent(0), r(2, 1));
        assert_eq!(GradedLayout::euclidean(1).unwrap().remove_layer(1).unwrap().d(), 0);
        assert_eq!(GradedLayout::parse_spec("1:2,2:1", false).unwrap(), heis());
    }

    #[test]
    fn generic_norm_matches_fast_path() {
        let h = heis();
        let x = [0.3, -1.2, 2.5];
        let v = h.norm_generic(&x, 0..2, h.default_norm());
        assert!((v - h.hom_norm(&x, h.default_norm()).unwrap()).abs() < 1e-14);
        let v = h.norm_generic(&x, 0..2, NormVariant::Max);
        assert!((v - h.hom_norm(&x, NormVariant::Max).unwrap()).abs() < 1e-14);
    }
}
