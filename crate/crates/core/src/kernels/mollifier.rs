use serde::{Deserialize, Serialize};

use crate::graded::{GradedLayout, NormVariant};
use crate::jet::Scalar;

/// Plateau bump `phi(x) = psi(|x|)`: equal to 1 on `|x| <= 1`, zero on `|x| >= 2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mollifier {
    pub norm: NormVariant,
}

impl Mollifier {
    pub fn for_layout(layout: &GradedLayout) -> Self {
        Mollifier {
            norm: layout.default_norm(),
        }
    }

    /// `phi(eps x) = psi(eps |x|)`.
    pub fn eval<S: Scalar>(&self, layout: &GradedLayout, x: &[S], eps: f64) -> S {
        let r = layout.norm_generic(x, 0..layout.d(), self.norm).scale(eps);
        profile(&r)
    }

    pub fn eval_f64(&self, layout: &GradedLayout, x: &[f64], eps: f64) -> f64 {
        profile_f64(eps * layout.norm_unchecked(x, self.norm))
    }
}

fn g<S: Scalar>(t: &S) -> S {
    // exp(-1/t); below 1e-3 the value is under e^-1000 and its jet vanishes.
    if t.value() < 1e-3 {
        t.lift(0.0)
    } else {
        t.recip().scale(-1.0).exp()
    }
}

/// Radial profile: 1 on `[0, 1]`, 0 on `[2, inf)`, smooth in between.
pub fn profile<S: Scalar>(r: &S) -> S {
    let v = r.value();
    if v <= 1.0 {
        return r.lift(1.0);
    }
    if v >= 2.0 {
        return r.lift(0.0);
    }
    let a = g(&r.add_const(-1.0));
    let b = g(&r.scale(-1.0).add_const(2.0));
    // 1 - smoothstep(s) = smoothstep(1 - s), with 1 - s = b / (a + b)
    let s = b.div(&a.add(&b));
    let s3 = s.mul(&s).mul(&s);
    // 10 s^3 - 15 s^4 + 6 s^5
    let out = s3.mul(&s.mul(&s.scale(6.0).add_const(-15.0)).add_const(10.0));
    // rounding can overshoot 1 by an ulp where all derivatives are negligible
    if out.value() > 1.0 {
        return r.lift(1.0);
    }
    out
}

pub fn profile_f64(r: f64) -> f64 {
    profile(&r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::{Jet, JetSpace};

    #[test]
    fn plateau_and_support() {
        assert_eq!(profile_f64(0.0), 1.0);
        assert_eq!(profile_f64(1.0), 1.0);
        assert_eq!(profile_f64(2.0), 0.0);
        assert!((profile_f64(1.5) - 0.5).abs() < 1e-12);
        let mut last = 1.0;
        for i in 0..=200 {
            let v = profile_f64(1.0 + i as f64 / 200.0);
            assert!((0.0..=1.0).contains(&v) && v <= last + 1e-14, "{i}: {v} {last}");
            last = v;
        }
    }

    #[test]
    fn derivatives_stay_bounded() {
        let sp = JetSpace::new(1, 4);
        let mut worst: f64 = 0.0;
        for i in 1..400 {
            let r = Jet::variable(&sp, 0, 1.0 + i as f64 / 400.0);
            let p = profile(&r);
            for k in 1..=4 {
                worst = worst.max(p.derivative(&[k]).abs());
            }
        }
        assert!(worst.is_finite() && worst < 1e4);
    }
}
