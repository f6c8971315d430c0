//! TOML run configuration: kernel bank, algebras, checks and run-wide settings.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graded::{parse_rational, GradedLayout, NormVariant, OrderVector};
use crate::groupconv::NilpotentAlgebra;
use crate::kernels::KernelModel;
use crate::verify::{CheckContext, CheckSpec, SuiteContext};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "one")]
    pub seed: u64,
    #[serde(default = "unit")]
    pub tol_scale: f64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub output: OutputOptions,
    #[serde(default)]
    pub kernel: Vec<KernelSpec>,
    #[serde(default)]
    pub algebra: Vec<AlgebraSpec>,
    #[serde(default)]
    pub check: Vec<CheckSpec>,
}

fn one() -> u64 {
    1
}

fn unit() -> f64 {
    1.0
}

fn default_out() -> PathBuf {
    PathBuf::from("reports")
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputOptions {
    #[serde(default = "yes")]
    pub csv: bool,
    #[serde(default = "yes")]
    pub plots: bool,
}

impl Default for OutputOptions {
    fn default() -> Self {
        OutputOptions { csv: true, plots: true }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFormName {
    FlagPower,
    PvOdd,
    Gaussian,
    SpectralCappedPower,
}

/// One kernel of the bank. Which optional fields apply depends on `form`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub id: String,
    pub form: KernelFormName,
    /// `p:n,p:n,...`, e.g. `1:2,2:1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layout: Option<String>,
    /// Allow repeated exponents (flag blocks of equal homogeneity).
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub flag_blocks: bool,
    /// Order vector as exact rationals.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<Vec<String>>,
    /// `max` or `smooth:M`; defaults to the smallest valid `smooth:M`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponent: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap: Option<f64>,
}

/// A structure constant `[e_i, e_j] += c e_k`, 1-based.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bracket(pub usize, pub usize, pub usize, pub Exact);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Exact {
    Int(i64),
    Text(String),
}

impl Exact {
    fn parse(&self) -> Result<crate::graded::Rational> {
        match self {
            Exact::Int(n) => Ok(crate::graded::Rational::from_integer(*n)),
            Exact::Text(s) => parse_rational(s),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgebraPreset {
    Abelian,
    Heisenberg,
    Filiform,
}

/// Either a preset or an explicit graded basis with structure constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraSpec {
    #[serde(default)]
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<AlgebraPreset>,
    /// Dimension (abelian) or step (filiform).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layout: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub labels: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub brackets: Vec<Bracket>,
}

fn field(path: &str, e: Error) -> Error {
    Error::Config(format!("{path}: {e}"))
}

pub fn parse_norm(s: &str) -> Result<NormVariant> {
    match s.trim() {
        "max" => Ok(NormVariant::Max),
        t => {
            let m = t.strip_prefix("smooth:").and_then(|m| m.trim().parse().ok());
            m.map(NormVariant::Smooth).ok_or_else(|| Error::Config(format!("norm `{s}`: expected `max` or `smooth:M`")))
        }
    }
}

impl KernelSpec {
    pub fn build(&self, path: &str) -> Result<KernelModel> {
        let need = |name: &str| Error::Config(format!("{path}.{name}: required for form {:?}", self.form));
        let unused = |name: &str, set: bool| {
            if set {
                Err(Error::Config(format!("{path}.{name}: not used by form {:?}", self.form)))
            } else {
                Ok(())
            }
        };
        let layout = || -> Result<GradedLayout> {
            let spec = self.layout.as_deref().ok_or_else(|| need("layout"))?;
            GradedLayout::parse_spec(spec, self.flag_blocks).map_err(|e| field(&format!("{path}.layout"), e))
        };
        let mut k = match self.form {
            KernelFormName::FlagPower => {
                let l = layout()?;
                let order = OrderVector::parse(self.order.as_ref().ok_or_else(|| need("order"))?).map_err(|e| field(&format!("{path}.order"), e))?;
                let norm = match &self.norm {
                    Some(s) => parse_norm(s).map_err(|e| field(&format!("{path}.norm"), e))?,
                    None => l.default_norm(),
                };
                unused("scale", self.scale.is_some())?;
                unused("c", self.c.is_some())?;
                unused("exponent", self.exponent.is_some())?;
                unused("cap", self.cap.is_some())?;
                KernelModel::flag_power(&l, order, norm).map_err(|e| field(path, e))?
            }
            KernelFormName::Gaussian => {
                let l = layout()?;
                unused("order", self.order.is_some())?;
                unused("norm", self.norm.is_some())?;
                KernelModel::gaussian(&l, self.scale.unwrap_or(1.0)).map_err(|e| field(&format!("{path}.scale"), e))?
            }
            KernelFormName::PvOdd => {
                unused("layout", self.layout.is_some())?;
                unused("order", self.order.is_some())?;
                KernelModel::pv_odd_1d(self.c.unwrap_or(1.0))
            }
            KernelFormName::SpectralCappedPower => {
                unused("layout", self.layout.is_some())?;
                let e = parse_rational(self.exponent.as_deref().ok_or_else(|| need("exponent"))?).map_err(|e| field(&format!("{path}.exponent"), e))?;
                KernelModel::spectral_capped_power(e, self.cap.unwrap_or(1.0)).map_err(|e| field(path, e))?
            }
        };
        k.id = self.id.clone();
        Ok(k)
    }
}

impl AlgebraSpec {
    pub fn build(&self, path: &str) -> Result<NilpotentAlgebra> {
        let name = if self.id.is_empty() { "custom" } else { self.id.as_str() };
        if let Some(preset) = self.preset {
            if self.layout.is_some() || !self.brackets.is_empty() || !self.labels.is_empty() {
                return Err(Error::Config(format!("{path}: give either `preset` or `layout`/`labels`/`brackets`")));
            }
            let mut alg = match preset {
                AlgebraPreset::Abelian => NilpotentAlgebra::abelian(self.size.unwrap_or(1)),
                AlgebraPreset::Heisenberg => Ok(NilpotentAlgebra::heisenberg()),
                AlgebraPreset::Filiform => NilpotentAlgebra::filiform(self.size.unwrap_or(3)),
            }
            .map_err(|e| field(&format!("{path}.size"), e))?;
            if matches!(preset, AlgebraPreset::Heisenberg) && self.size.is_some() {
                return Err(Error::Config(format!("{path}.size: the Heisenberg preset has no size")));
            }
            if !self.id.is_empty() {
                alg.name = self.id.clone();
            }
            return Ok(alg);
        }
        let spec = self.layout.as_deref().ok_or_else(|| Error::Config(format!("{path}.layout: required without a preset")))?;
        let l = GradedLayout::parse_spec(spec, false).map_err(|e| field(&format!("{path}.layout"), e))?;
        let n = l.total_dim();
        let mut brackets = Vec::with_capacity(self.brackets.len());
        for (t, Bracket(i, j, k, c)) in self.brackets.iter().enumerate() {
            if [i, j, k].iter().any(|&&v| v == 0 || v > n) {
                return Err(Error::Config(format!("{path}.brackets[{t}]: indices are 1-based and at most {n}")));
            }
            let c = c.parse().map_err(|e| field(&format!("{path}.brackets[{t}]"), e))?;
            brackets.push((i - 1, j - 1, k - 1, c));
        }
        NilpotentAlgebra::new(name, &l, self.labels.clone(), &brackets).map_err(|e| field(path, e))
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))?;
        if !(cfg.tol_scale > 0.0) || !cfg.tol_scale.is_finite() {
            return Err(Error::Config("tol_scale: must be positive".into()));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            e => e,
        })
    }

    /// Builds every kernel and algebra and checks the references between them.
    pub fn context(&self) -> Result<SuiteContext> {
        let mut sc = SuiteContext::default();
        for (i, k) in self.kernel.iter().enumerate() {
            let path = format!("kernel[{i}]");
            if sc.kernels.insert(k.id.clone(), k.build(&path)?).is_some() {
                return Err(Error::Config(format!("{path}.id: duplicate kernel `{}`", k.id)));
            }
        }
        for (i, a) in self.algebra.iter().enumerate() {
            let path = format!("algebra[{i}]");
            if a.id.is_empty() {
                return Err(Error::Config(format!("{path}.id: required")));
            }
            if sc.algebras.insert(a.id.clone(), a.build(&path)?).is_some() {
                return Err(Error::Config(format!("{path}.id: duplicate algebra `{}`", a.id)));
            }
        }
        sc.validate(&self.check)?;
        Ok(sc)
    }

    pub fn check_context(&self) -> CheckContext {
        CheckContext {
            seed: self.seed,
            tol_scale: self.tol_scale,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn err(text: &str) -> String {
        match RunConfig::parse(text).and_then(|c| c.context()) {
            Err(e) => e.to_string(),
            Ok(_) => panic!("accepted:\n{text}"),
        }
    }

    #[test]
    fn empty_config_is_valid() {
        let c = RunConfig::parse("").unwrap();
        assert!(c.check.is_empty());
        assert_eq!(c.seed, 1);
        assert!(c.context().unwrap().kernels.is_empty());
    }

    #[test]
    fn layout_error_names_field() {
        let e = err("[[kernel]]\nid = \"k\"\nform = \"flag_power\"\nlayout = \"1,1\"\norder = [\"0\", \"0\"]\n");
        assert!(e.contains("kernel[0].layout"), "{e}");
        assert!(e.contains("exponents must increase"), "{e}");
    }

    #[test]
    fn unknown_check_kind_rejected() {
        let e = err("[[check]]\nid = \"x\"\nkind = \"magic\"\n");
        assert!(e.contains("magic"), "{e}");
    }

    #[test]
    fn unknown_param_rejected() {
        let e = err("[[check]]\nid = \"x\"\nkind = \"counterexample\"\n[check.params]\nslope = 1\n");
        assert!(e.contains("slope"), "{e}");
    }

    #[test]
    fn dangling_reference() {
        let e = err("[[check]]\nid = \"x\"\nkind = \"size\"\nkernel = \"nope\"\n");
        assert!(e.contains("check[0].kernel"), "{e}");
    }

    #[test]
    fn custom_algebra_matches_preset() {
        let text = "[[algebra]]\nid = \"h\"\nlayout = \"1:2,2:1\"\nbrackets = [[1, 2, 3, 1]]\n";
        let sc = RunConfig::parse(text).unwrap().context().unwrap();
        let h = &sc.algebras["h"];
        let law = crate::groupconv::GroupLaw::from_algebra(h).unwrap();
        let pre = crate::groupconv::GroupLaw::from_algebra(&NilpotentAlgebra::heisenberg()).unwrap();
        assert_eq!(law.components, pre.components);
    }

    #[test]
    fn jacobi_violation_names_triple() {
        // [X1,X2]=X4 and [X3,X4]=X5 alone break Jacobi on (X1,X2,X3)
        let text = "[[algebra]]\nid = \"bad\"\nlayout = \"1:3,2:1,3:1\"\nbrackets = [[1, 2, 4, 1], [3, 4, 5, \"1\"]]\n";
        let e = err(text);
        assert!(e.contains("algebra[0]") && e.contains("(1,2,3)"), "{e}");
    }
}
