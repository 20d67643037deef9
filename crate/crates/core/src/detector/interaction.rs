use serde::Serialize;

use crate::detector::{factor_q, StrataPartition};
use crate::error::{Error, Result};

/// Equality tolerance for comparing q values when typing an interaction.
pub const INTERACTION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InteractionType {
    /// `q(A∩B) < min(q(A), q(B))`
    NonlinearWeaken,
    /// `min ≤ q(A∩B) < max`
    SingleWeaken,
    /// `max < q(A∩B) < q(A) + q(B)`
    BiEnhance,
    /// `q(A∩B) = q(A) + q(B)`
    Independent,
    /// `q(A∩B) > q(A) + q(B)`
    NonlinearEnhance,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InteractionResult {
    pub factor_a: String,
    pub factor_b: String,
    pub q_a: f64,
    pub q_b: f64,
    pub q_ab: f64,
    pub kind: InteractionType,
    /// `q(A∩B)` sits on a class boundary (equal to `min` or `max` within
    /// tolerance); the class follows the boundary rule.
    pub boundary: bool,
}

/// Classifies `q_ab` against the single-factor values.
///
/// Order of the rules: the additive case first, then the weakening cases, with
/// equality to `max` classed as bi-enhancement (flagged as a boundary).
pub fn classify_interaction(q_a: f64, q_b: f64, q_ab: f64) -> (InteractionType, bool) {
    let tol = INTERACTION_TOLERANCE;
    let (lo, hi, sum) = (q_a.min(q_b), q_a.max(q_b), q_a + q_b);
    if (q_ab - sum).abs() <= tol {
        (InteractionType::Independent, false)
    } else if q_ab < lo - tol {
        (InteractionType::NonlinearWeaken, false)
    } else if (q_ab - hi).abs() <= tol {
        (InteractionType::BiEnhance, true)
    } else if q_ab < hi {
        (InteractionType::SingleWeaken, (q_ab - lo).abs() <= tol)
    } else if q_ab < sum {
        (InteractionType::BiEnhance, false)
    } else {
        (InteractionType::NonlinearEnhance, false)
    }
}

/// q of the cross-partition of `a` and `b`, typed against `q(a)` and `q(b)`.
pub fn interaction(y: &[f64], a: &StrataPartition, b: &StrataPartition) -> Result<InteractionResult> {
    let crossed = a.cross(b)?;
    if crossed.count < 2 {
        return Err(Error::InvalidData(format!(
            "crossing `{}` with `{}` leaves a single stratum",
            a.factor, b.factor
        )));
    }
    let q_a = factor_q(y, a)?;
    let q_b = factor_q(y, b)?;
    let q_ab = factor_q(y, &crossed)?;
    let (kind, boundary) = classify_interaction(q_a, q_b, q_ab);
    Ok(InteractionResult {
        factor_a: a.factor.clone(),
        factor_b: b.factor.clone(),
        q_a,
        q_b,
        q_ab,
        kind,
        boundary,
    })
}
