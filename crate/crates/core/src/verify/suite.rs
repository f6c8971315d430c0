//! Named checks over a bank of kernels and algebras.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groupconv::{GroupLaw, NilpotentAlgebra};
use crate::kernels::KernelModel;
use crate::verify::*;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelCheck<P> {
    pub id: String,
    pub kernel: String,
    #[serde(default)]
    pub params: P,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairCheck<P> {
    pub id: String,
    pub a: String,
    pub b: String,
    /// `None` uses the abelian law on the kernels' layout.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub algebra: Option<String>,
    #[serde(default)]
    pub params: P,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraCheck<P> {
    pub id: String,
    pub algebra: String,
    #[serde(default)]
    pub params: P,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlainCheck<P> {
    pub id: String,
    #[serde(default)]
    pub params: P,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CheckSpec {
    Size(KernelCheck<SizeParams>),
    Truncation(KernelCheck<TruncationParams>),
    SignRule(KernelCheck<SignRuleParams>),
    Cancellation(KernelCheck<CancellationParams>),
    Fourier(KernelCheck<FourierParams>),
    Composition(PairCheck<CompositionParams>),
    SComposition(PairCheck<SCompositionParams>),
    Counterexample(PlainCheck<CounterexampleParams>),
    GateSoundness(PlainCheck<GateSoundnessParams>),
    OrderCalculus(PlainCheck<OrderCalculusParams>),
    GroupLaw(AlgebraCheck<GroupLawParams>),
}

impl CheckSpec {
    pub fn id(&self) -> &str {
        match self {
            CheckSpec::Size(c) => &c.id,
            CheckSpec::Truncation(c) => &c.id,
            CheckSpec::SignRule(c) => &c.id,
            CheckSpec::Cancellation(c) => &c.id,
            CheckSpec::Fourier(c) => &c.id,
            CheckSpec::Composition(c) => &c.id,
            CheckSpec::SComposition(c) => &c.id,
            CheckSpec::Counterexample(c) => &c.id,
            CheckSpec::GateSoundness(c) => &c.id,
            CheckSpec::OrderCalculus(c) => &c.id,
            CheckSpec::GroupLaw(c) => &c.id,
        }
    }

    /// Kernel and algebra ids this check refers to, as `(field, id)`.
    fn references(&self) -> Vec<(&'static str, &str)> {
        match self {
            CheckSpec::Size(c) => vec![("kernel", &c.kernel)],
            CheckSpec::Truncation(c) => vec![("kernel", &c.kernel)],
            CheckSpec::SignRule(c) => vec![("kernel", &c.kernel)],
            CheckSpec::Cancellation(c) => vec![("kernel", &c.kernel)],
            CheckSpec::Fourier(c) => vec![("kernel", &c.kernel)],
            CheckSpec::Composition(c) => pair_refs(c),
            CheckSpec::SComposition(c) => pair_refs(c),
            CheckSpec::GroupLaw(c) => vec![("algebra", &c.algebra)],
            _ => Vec::new(),
        }
    }
}

fn pair_refs<P>(c: &PairCheck<P>) -> Vec<(&'static str, &str)> {
    let mut v = vec![("a", c.a.as_str()), ("b", c.b.as_str())];
    if let Some(g) = &c.algebra {
        v.push(("algebra", g.as_str()));
    }
    v
}

/// Kernels and algebras the checks refer to by id.
#[derive(Clone, Debug, Default)]
pub struct SuiteContext {
    pub kernels: BTreeMap<String, KernelModel>,
    pub algebras: BTreeMap<String, NilpotentAlgebra>,
}

impl SuiteContext {
    pub fn kernel(&self, id: &str) -> Result<&KernelModel> {
        self.kernels.get(id).ok_or_else(|| Error::Config(format!("unknown kernel `{id}`")))
    }

    pub fn algebra(&self, id: &str) -> Result<&NilpotentAlgebra> {
        self.algebras.get(id).ok_or_else(|| Error::Config(format!("unknown algebra `{id}`")))
    }

    fn law_for(&self, algebra: &Option<String>, a: &KernelModel) -> Result<GroupLaw> {
        match algebra {
            Some(g) => GroupLaw::from_algebra(self.algebra(g)?),
            None => GroupLaw::from_algebra(&NilpotentAlgebra::new("abelian", &a.layout, Vec::new(), &[])?),
        }
    }

    /// Duplicate ids and dangling references, reported with the check index.
    pub fn validate(&self, checks: &[CheckSpec]) -> Result<()> {
        let mut seen = BTreeMap::new();
        for (i, c) in checks.iter().enumerate() {
            if let Some(j) = seen.insert(c.id(), i) {
                return Err(Error::Config(format!("check[{i}].id: `{}` already used by check[{j}]", c.id())));
            }
            for (field, id) in c.references() {
                let known = if field == "algebra" { self.algebras.contains_key(id) } else { self.kernels.contains_key(id) };
                if !known {
                    return Err(Error::Config(format!("check[{i}].{field}: unknown {} `{id}`", if field == "algebra" { "algebra" } else { "kernel" })));
                }
            }
        }
        Ok(())
    }
}

pub fn run_check(spec: &CheckSpec, sc: &SuiteContext, ctx: &CheckContext) -> Result<VerificationReport> {
    let start = Instant::now();
    let mut rep = match spec {
        CheckSpec::Size(c) => check_size(&c.id, sc.kernel(&c.kernel)?, &c.params, ctx),
        CheckSpec::Truncation(c) => check_truncation_uniformity(&c.id, sc.kernel(&c.kernel)?, &c.params, ctx),
        CheckSpec::SignRule(c) => check_sign_rule(&c.id, sc.kernel(&c.kernel)?, &c.params, ctx),
        CheckSpec::Cancellation(c) => check_cancellation(&c.id, sc.kernel(&c.kernel)?, &c.params, ctx),
        CheckSpec::Fourier(c) => check_fourier(&c.id, sc.kernel(&c.kernel)?, &c.params, ctx),
        CheckSpec::Composition(c) => {
            let (a, b) = (sc.kernel(&c.a)?, sc.kernel(&c.b)?);
            check_composition(&c.id, a, b, &sc.law_for(&c.algebra, a)?, &c.params, ctx)
        }
        CheckSpec::SComposition(c) => {
            let (a, b) = (sc.kernel(&c.a)?, sc.kernel(&c.b)?);
            check_s_composition(&c.id, a, b, &sc.law_for(&c.algebra, a)?, &c.params, ctx)
        }
        CheckSpec::Counterexample(c) => check_counterexample(&c.id, &c.params, ctx),
        CheckSpec::GateSoundness(c) => check_gate_soundness(&c.id, &c.params, ctx),
        CheckSpec::OrderCalculus(c) => check_order_calculus(&c.id, &c.params, ctx),
        CheckSpec::GroupLaw(c) => check_group_law(&c.id, sc.algebra(&c.algebra)?, &c.params, ctx),
    }
    .map_err(|e| Error::Check {
        id: spec.id().to_string(),
        source: Box::new(e),
    })?;
    rep.runtime = start.elapsed();
    Ok(rep)
}

/// Runs every check as an independent job; reports come back sorted by id.
pub fn run_suite(checks: &[CheckSpec], sc: &SuiteContext, ctx: &CheckContext) -> Result<Vec<VerificationReport>> {
    sc.validate(checks)?;
    let mut reports = checks.par_iter().map(|c| run_check(c, sc, ctx)).collect::<Result<Vec<_>>>()?;
    reports.sort_by(|a, b| a.check_id.cmp(&b.check_id));
    Ok(reports)
}
