use serde::Serialize;

use crate::band::apply_weight;
use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::lp::{block_l2_norms, DyadicFilterBank};

use super::certificate::needs_mean;

/// Weighted size of initial data against the two smallness thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmallnessReport {
    /// `‖e^{a|D|}u_0‖_{B^{1/2}} + ‖e^{a|D|}T_0‖_{B^{1/2}}`.
    pub size: f64,
    /// `c_0 · a`.
    pub c0_limit: f64,
    /// `min{1/(2C²), a/(2λ)} / C`.
    pub budget_limit: f64,
    pub margin_c0: f64,
    pub margin_budget: f64,
    pub pass: bool,
    /// Size equal to the binding threshold up to rounding.
    pub boundary: bool,
}

pub fn smallness_check(
    u0: &SpectralField,
    temp0: &SpectralField,
    a: f64,
    c0: f64,
    c: f64,
    lambda: f64,
    bank: &DyadicFilterBank,
) -> Result<SmallnessReport> {
    if !(a > 0.0 && c0 > 0.0 && c > 0.0 && lambda > 0.0) {
        return Err(Error::InvalidInput(format!(
            "smallness constants must be positive (a = {a}, c0 = {c0}, C = {c}, lambda = {lambda})"
        )));
    }
    let mean = needs_mean(&[u0, temp0], bank)?;
    let mut size = 0.0;
    for f in [u0, temp0] {
        let b = block_l2_norms(&apply_weight(f, a)?, bank)?;
        size += if mean {
            b.besov_with_mean(0.5)
        } else {
            b.besov(0.5)
        };
    }
    let c0_limit = c0 * a;
    let budget_limit = (1.0 / (2.0 * c * c)).min(a / (2.0 * lambda)) / c;
    let binding = c0_limit.min(budget_limit);
    Ok(SmallnessReport {
        size,
        c0_limit,
        budget_limit,
        margin_c0: c0_limit - size,
        margin_budget: budget_limit - size,
        pass: size <= binding,
        boundary: (size - binding).abs() <= 1e-9 * binding,
    })
}
