use num_traits::Zero;

use crate::error::{Error, Result};
use crate::graded::{format_rational, GradedLayout, Rational};
use crate::groupconv::poly::Poly;

/// Graded nilpotent Lie algebra with rational structure constants on the
/// coordinate basis of a layout.
#[derive(Clone, Debug, PartialEq)]
pub struct NilpotentAlgebra {
    pub name: String,
    pub layout: GradedLayout,
    pub labels: Vec<String>,
    /// `table[i][j]`: the nonzero components `(k, c)` of `[e_i, e_j]`.
    table: Vec<Vec<Vec<(usize, Rational)>>>,
    step: usize,
}

impl NilpotentAlgebra {
    /// `brackets` lists `[e_i, e_j] = ... + c e_k` as `(i, j, k, c)`; the
    /// antisymmetric partner is implied.
    pub fn new(name: &str, layout: &GradedLayout, labels: Vec<String>, brackets: &[(usize, usize, usize, Rational)]) -> Result<Self> {
        let n = layout.total_dim();
        let labels = if labels.is_empty() {
            (1..=n).map(|i| format!("X{i}")).collect()
        } else {
            labels
        };
        if labels.len() != n {
            return Err(Error::Algebra(format!("{} labels for {n} basis vectors", labels.len())));
        }
        let mut table = vec![vec![Vec::<(usize, Rational)>::new(); n]; n];
        let mut given = vec![vec![false; n]; n];
        for &(i, j, k, c) in brackets {
            if i >= n || j >= n || k >= n {
                return Err(Error::Algebra(format!("bracket ({i},{j},{k}) indexes outside the {n} basis vectors")));
            }
            if c.is_zero() {
                continue;
            }
            if i == j {
                return Err(Error::Algebra(format!(
                    "antisymmetry: [{0}, {0}] must vanish",
                    labels[i]
                )));
            }
            let (pi, pj, pk) = (layout.exponent(layout.layer_of(i)), layout.exponent(layout.layer_of(j)), layout.exponent(layout.layer_of(k)));
            if pi + pj != pk {
                return Err(Error::Algebra(format!(
                    "grading: [{}, {}] has a component on {} but p = {} + {} differs from {}",
                    labels[i],
                    labels[j],
                    labels[k],
                    format_rational(&pi),
                    format_rational(&pj),
                    format_rational(&pk)
                )));
            }
            given[i][j] = true;
            add_component(&mut table[i][j], k, c);
        }
        for i in 0..n {
            for j in 0..n {
                if given[i][j] && given[j][i] && i < j {
                    let a = &table[i][j];
                    let b = &table[j][i];
                    for &(k, c) in a {
                        let partner = b.iter().find(|e| e.0 == k).map(|e| e.1).unwrap_or_else(Rational::zero);
                        if partner != -c {
                            return Err(Error::Algebra(format!(
                                "antisymmetry: [{}, {}] and [{}, {}] disagree on {}",
                                labels[i], labels[j], labels[j], labels[i], labels[k]
                            )));
                        }
                    }
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                if given[i][j] && !given[j][i] {
                    let comps = table[i][j].clone();
                    for (k, c) in comps {
                        add_component(&mut table[j][i], k, -c);
                    }
                }
            }
        }
        let mut alg = NilpotentAlgebra {
            name: name.to_string(),
            layout: layout.clone(),
            labels,
            table,
            step: 1,
        };
        alg.check_jacobi()?;
        alg.step = alg.compute_step()?;
        Ok(alg)
    }

    pub fn abelian(n: usize) -> Result<Self> {
        Self::new("abelian", &GradedLayout::euclidean(n)?, Vec::new(), &[])
    }

    /// `[X1, X2] = X3` on `p = (1, 2)`, `n = (2, 1)`.
    pub fn heisenberg() -> Self {
        let l = GradedLayout::new(vec![(Rational::from_integer(1), 2), (Rational::from_integer(2), 1)]).unwrap();
        Self::new(
            "heisenberg",
            &l,
            vec!["X1".into(), "X2".into(), "X3".into()],
            &[(0, 1, 2, Rational::from_integer(1))],
        )
        .unwrap()
    }

    /// Filiform algebra of the given step (3 or 4): `[X1, X_k] = X_{k+1}` for `k >= 2`.
    pub fn filiform(step: usize) -> Result<Self> {
        if !(2..=4).contains(&step) {
            return Err(Error::Algebra(format!("filiform presets exist for steps 2..=4, not {step}")));
        }
        let mut layers = vec![(Rational::from_integer(1), 2)];
        for p in 2..=step {
            layers.push((Rational::from_integer(p as i64), 1));
        }
        let l = GradedLayout::new(layers)?;
        let brackets: Vec<_> = (1..step).map(|k| (0, k, k + 1, Rational::from_integer(1))).collect();
        Self::new(&format!("filiform{step}"), &l, Vec::new(), &brackets)
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn is_abelian(&self) -> bool {
        self.table.iter().all(|r| r.iter().all(|c| c.is_empty()))
    }

    /// Components of `[e_i, e_j]`.
    pub fn bracket_basis(&self, i: usize, j: usize) -> &[(usize, Rational)] {
        &self.table[i][j]
    }

    pub fn bracket_vec(&self, a: &[Rational], b: &[Rational]) -> Vec<Rational> {
        let n = self.dim();
        let mut out = vec![Rational::zero(); n];
        for i in 0..n {
            if a[i].is_zero() {
                continue;
            }
            for j in 0..n {
                if b[j].is_zero() {
                    continue;
                }
                for &(k, c) in &self.table[i][j] {
                    out[k] += c * a[i] * b[j];
                }
            }
        }
        out
    }

    /// Bracket of Lie elements with polynomial coefficients.
    pub fn bracket_poly(&self, a: &[Poly], b: &[Poly]) -> Vec<Poly> {
        let n = self.dim();
        let mut out = vec![Poly::zero(); n];
        for i in 0..n {
            if a[i].is_zero() {
                continue;
            }
            for j in 0..n {
                if b[j].is_zero() || self.table[i][j].is_empty() {
                    continue;
                }
                let prod = a[i].mul(&b[j]);
                for &(k, c) in &self.table[i][j] {
                    out[k].add_scaled(&prod, c);
                }
            }
        }
        out
    }

    fn unit(&self, i: usize) -> Vec<Rational> {
        let mut v = vec![Rational::zero(); self.dim()];
        v[i] = Rational::from_integer(1);
        v
    }

    fn check_jacobi(&self) -> Result<()> {
        let n = self.dim();
        for i in 0..n {
            for j in i + 1..n {
                for l in j + 1..n {
                    let (ei, ej, el) = (self.unit(i), self.unit(j), self.unit(l));
                    let t1 = self.bracket_vec(&ei, &self.bracket_vec(&ej, &el));
                    let t2 = self.bracket_vec(&ej, &self.bracket_vec(&el, &ei));
                    let t3 = self.bracket_vec(&el, &self.bracket_vec(&ei, &ej));
                    if (0..n).any(|k| !(t1[k] + t2[k] + t3[k]).is_zero()) {
                        return Err(Error::Algebra(format!(
                            "Jacobi identity fails for (i,j,k) = ({},{},{}): {}, {}, {}",
                            i + 1,
                            j + 1,
                            l + 1,
                            self.labels[i],
                            self.labels[j],
                            self.labels[l]
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Length of the longest nonvanishing right-nested bracket of basis vectors.
    fn compute_step(&self) -> Result<usize> {
        let n = self.dim();
        let mut level: Vec<Vec<Rational>> = (0..n).map(|i| self.unit(i)).collect();
        for s in 1..=16 {
            let mut next = Vec::new();
            for v in &level {
                for i in 0..n {
                    let w = self.bracket_vec(&self.unit(i), v);
                    if w.iter().any(|c| !c.is_zero()) && !next.contains(&w) {
                        next.push(w);
                    }
                }
            }
            if next.is_empty() {
                return Ok(s);
            }
            level = next;
        }
        Err(Error::Algebra("algebra is not nilpotent within 16 steps".into()))
    }
}

fn add_component(list: &mut Vec<(usize, Rational)>, k: usize, c: Rational) {
    match list.iter_mut().find(|e| e.0 == k) {
        Some(e) => e.1 += c,
        None => list.push((k, c)),
    }
    list.retain(|e| !e.1.is_zero());
    list.sort_by_key(|e| e.0);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets() {
        assert!(NilpotentAlgebra::abelian(3).unwrap().is_abelian());
        assert_eq!(NilpotentAlgebra::abelian(3).unwrap().step(), 1);
        assert_eq!(NilpotentAlgebra::heisenberg().step(), 2);
        assert_eq!(NilpotentAlgebra::filiform(3).unwrap().step(), 3);
        assert_eq!(NilpotentAlgebra::filiform(4).unwrap().step(), 4);
        let h = NilpotentAlgebra::heisenberg();
        assert_eq!(h.bracket_basis(1, 0), &[(2, Rational::from_integer(-1))]);
    }

    #[test]
    fn validation_names_the_offender() {
        let l = GradedLayout::new(vec![(Rational::from_integer(1), 2), (Rational::from_integer(2), 1)]).unwrap();
        let e = NilpotentAlgebra::new("bad", &l, Vec::new(), &[(0, 2, 2, Rational::from_integer(1))]).unwrap_err();
        assert!(e.to_string().contains("grading"));
        let e = NilpotentAlgebra::new(
            "bad",
            &l,
            Vec::new(),
            &[(0, 1, 2, Rational::from_integer(1)), (1, 0, 2, Rational::from_integer(1))],
        )
        .unwrap_err();
        assert!(e.to_string().contains("antisymmetry"));
    }

    #[test]
    fn jacobi_failure_is_reported() {
        // [X1, X2] = X4 and [X3, X4] = X5 grade correctly, but the cyclic
        // sum over (X1, X2, X3) leaves X5.
        let l = GradedLayout::new(vec![
            (Rational::from_integer(1), 3),
            (Rational::from_integer(2), 1),
            (Rational::from_integer(3), 1),
        ])
        .unwrap();
        let one = Rational::from_integer(1);
        let e = NilpotentAlgebra::new("bad", &l, Vec::new(), &[(0, 1, 3, one), (2, 3, 4, one)]).unwrap_err();
        assert!(e.to_string().contains("Jacobi identity fails for (i,j,k) = (1,2,3)"), "{e}");
        assert!(NilpotentAlgebra::new("ok", &l, Vec::new(), &[(0, 1, 3, one)]).is_ok());
    }
}
