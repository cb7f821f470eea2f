//! Off-policy value estimators over a logged [`Dataset`].
//!
//! | estimator | needs `mu` | construction |
//! |-----------|------------|--------------|
//! | [`estimate_is`] | yes | trajectory importance weight times return |
//! | [`estimate_step_is`] | yes | per-step cumulative weights |
//! | [`estimate_smis`] | yes | weighted state-level transitions and rewards |
//! | [`estimate_tmis`] | no | count-based state-action model, marginalized |
//! | [`estimate_split_tmis`] | no | mean of [`estimate_tmis`] over disjoint folds |
//!
//! [`estimate_fictitious_tmis`] is an analysis device that needs the true
//! model; it is exposed for tests and Monte-Carlo checks only.

use core::fmt;
use core::str::FromStr;

use alloc::string::String;

use crate::model::{Dataset, Policy};
use crate::{Error, Result};

mod empirical;
mod is;
mod smis;
mod tmis;

pub use empirical::EmpiricalModel;
pub use is::{estimate_is, estimate_step_is, CumulativeWeights};
pub use smis::estimate_smis;
pub use tmis::{
    default_theta, estimate_fictitious_tmis, estimate_split_tmis, estimate_tmis, estimate_tmis_with_diagnostics,
    FictitiousConfig, SplitConfig, TmisDiagnostics,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EstimatorKind {
    Is,
    StepIs,
    Smis,
    Tmis,
    SplitTmis,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 5] = [
        EstimatorKind::Is,
        EstimatorKind::StepIs,
        EstimatorKind::Smis,
        EstimatorKind::Tmis,
        EstimatorKind::SplitTmis,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Is => "is",
            EstimatorKind::StepIs => "step-is",
            EstimatorKind::Smis => "smis",
            EstimatorKind::Tmis => "tmis",
            EstimatorKind::SplitTmis => "split-tmis",
        }
    }

    /// Stable numeric id, used to derive random substreams.
    pub fn id(self) -> u64 {
        match self {
            EstimatorKind::Is => 1,
            EstimatorKind::StepIs => 2,
            EstimatorKind::Smis => 3,
            EstimatorKind::Tmis => 4,
            EstimatorKind::SplitTmis => 5,
        }
    }

    pub fn needs_logging_policy(self) -> bool {
        matches!(self, EstimatorKind::Is | EstimatorKind::StepIs | EstimatorKind::Smis)
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EstimatorKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(String::from("unknown estimator '") + s + "'"))
    }
}

/// Runs one estimator. `mu` must be given exactly when the estimator needs it.
pub fn evaluate(
    kind: EstimatorKind,
    data: &Dataset,
    pi: &Policy,
    mu: Option<&Policy>,
    split: SplitConfig,
) -> Result<f64> {
    let need_mu = || {
        mu.ok_or_else(|| Error::Config(alloc::format!("estimator '{kind}' requires the logging policy")))
    };
    match kind {
        EstimatorKind::Is => estimate_is(data, need_mu()?, pi),
        EstimatorKind::StepIs => estimate_step_is(data, need_mu()?, pi),
        EstimatorKind::Smis => estimate_smis(data, need_mu()?, pi),
        EstimatorKind::Tmis => estimate_tmis(data, pi),
        EstimatorKind::SplitTmis => estimate_split_tmis(data, pi, split),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for k in EstimatorKind::ALL {
            assert_eq!(k.name().parse::<EstimatorKind>().unwrap(), k);
        }
        assert!("wis".parse::<EstimatorKind>().is_err());
    }
}
