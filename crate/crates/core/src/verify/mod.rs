//! Checks that turn the size, cancellation, transform and composition
//! statements into reports with fitted exponents, constants and verdicts.

pub mod cancellation;
pub mod composition;
pub mod exact;
pub mod fourier;
pub mod report;
pub mod size;
pub mod suite;

use serde::Serialize;

pub use cancellation::{check_cancellation, CancellationParams};
pub use composition::{check_composition, check_counterexample, check_gate_soundness, check_s_composition, CompositionParams, CounterexampleParams, GateSoundnessParams, SCompositionParams};
pub use exact::{check_group_law, check_order_calculus, GroupLawParams, OrderCalculusParams};
pub use fourier::{check_fourier, FourierParams};
pub use report::{Provenance, Quantity, Rule, Verdict, VerificationReport, SCHEMA_VERSION};
pub use suite::{run_check, run_suite, CheckSpec, SuiteContext};
pub use size::{check_sign_rule, check_size, check_truncation_uniformity, SampleSpec, SignRuleParams, SizeParams, TruncationParams};

/// Run-wide settings shared by every check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CheckContext {
    pub seed: u64,
    /// Multiplies fitted-exponent and constant tolerances.
    pub tol_scale: f64,
}

impl Default for CheckContext {
    fn default() -> Self {
        CheckContext { seed: 1, tol_scale: 1.0 }
    }
}

pub(crate) fn params_json<T: Serialize>(p: &T) -> serde_json::Value {
    serde_json::to_value(p).unwrap_or(serde_json::Value::Null)
}
