//! Estimating `alpha = theta / b` from the age-ranked fractions of the
//! surviving families, which in the limit are GEM(`alpha`) sticks.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaEstimate {
    pub alpha: f64,
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Number of sticks used.
    pub sticks: usize,
}

const Z_975: f64 = 1.959_963_984_540_054;

/// Recovers `B_i = P_i / (1 - P_1 - ... - P_{i-1})` from the fractions.
/// When they sum to 1 (within 1e-9) the last stick is the whole remainder
/// and carries no information, so it is dropped. Remainders are summed from
/// the tail so that deep sticks keep their relative precision.
pub fn sticks(fractions: &[f64]) -> Result<Vec<f64>> {
    if fractions.is_empty() {
        return Err(Error::InvalidInput("no fractions".into()));
    }
    if let Some(p) = fractions.iter().find(|p| !(**p > 0.0)) {
        return Err(Error::InvalidInput(alloc::format!(
            "fraction {p} is not positive"
        )));
    }
    let sum: f64 = fractions.iter().sum();
    if sum > 1.0 + 1e-9 {
        return Err(Error::InvalidInput(alloc::format!(
            "fractions sum to {sum} > 1"
        )));
    }
    let consumed = (sum - 1.0).abs() <= 1e-9;
    let mut rest = if consumed { 0.0 } else { 1.0 - sum };
    let mut out = vec![0.0; fractions.len()];
    for (i, p) in fractions.iter().enumerate().rev() {
        rest += p;
        out[i] = p / rest;
    }
    if consumed {
        out.pop();
    }
    for (i, b) in out.iter().enumerate() {
        if !(*b > 0.0 && *b < 1.0) {
            return Err(Error::InvalidInput(alloc::format!(
                "stick {} is {b}, outside (0, 1)",
                i + 1
            )));
        }
    }
    Ok(out)
}

fn from_log_sum(k: usize, log_sum: f64) -> Result<AlphaEstimate> {
    if k == 0 {
        return Err(Error::InvalidInput("no usable sticks".into()));
    }
    let kf = k as f64;
    let alpha = -kf / log_sum;
    let se = alpha / libm::sqrt(kf);
    Ok(AlphaEstimate {
        alpha,
        std_error: se,
        ci_low: (alpha - Z_975 * se).max(0.0),
        ci_high: alpha + Z_975 * se,
        sticks: k,
    })
}

/// Maximum likelihood under i.i.d. `Beta(1, alpha)` sticks:
/// `alpha = -K / sum ln(1 - B_i)`, with a normal 95% interval from the
/// observed information `K / alpha^2`.
pub fn estimate_alpha(fractions: &[f64]) -> Result<AlphaEstimate> {
    let b = sticks(fractions)?;
    from_log_sum(b.len(), b.iter().map(|x| libm::log1p(-x)).sum())
}

/// Pools the sticks of several independent partitions.
pub fn estimate_alpha_pooled<'a, I>(samples: I) -> Result<AlphaEstimate>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let (mut k, mut log_sum) = (0, 0.0);
    for fr in samples {
        let b = sticks(fr)?;
        k += b.len();
        log_sum += b.iter().map(|x| libm::log1p(-x)).sum::<f64>();
    }
    from_log_sum(k, log_sum)
}
