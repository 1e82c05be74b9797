use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::field::DiscSampler;
use crate::quasiregular::{vanishing_order_fit, VanishingOrderFit, VanishingVerdict};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SucpVerdict {
    FiniteOrder { beta: f64 },
    Constant,
    SucpViolationCandidate { local_slope: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SucpReport {
    pub fit: VanishingOrderFit,
    /// `sup_{B_1} |v - v(center)|`
    pub unit_sup: f64,
    pub verdict: SucpVerdict,
}

/// Flags fields that vanish faster than `|z|^{N_max}` without being constant.
pub fn sucp_contradiction_test(
    v: &dyn DiscSampler,
    center: Complex64,
    r_min: f64,
    r_max: f64,
    n_max: f64,
) -> Result<SucpReport> {
    let fit = vanishing_order_fit(v, center, r_min, r_max, n_max)?;
    let unit_sup = v.disc_samples(center, 1.0)?.shifted(fit.center_value).sup();
    let constant = unit_sup <= 10.0 * f64::EPSILON * fit.center_value.norm().max(1.0);
    let verdict = match fit.verdict {
        _ if constant => SucpVerdict::Constant,
        VanishingVerdict::IdenticallyConstant => SucpVerdict::SucpViolationCandidate { local_slope: f64::MAX },
        VanishingVerdict::ExceedsNMax { local_slope } => SucpVerdict::SucpViolationCandidate { local_slope },
        VanishingVerdict::FiniteOrder { beta } => SucpVerdict::FiniteOrder { beta },
    };
    Ok(SucpReport { fit, unit_sup, verdict })
}
