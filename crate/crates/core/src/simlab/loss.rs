//! Losses weighted by the Wicksell measure density `1/(4x)` on the grid `i/n`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossKind {
    L1,
    Rmse,
}

impl LossKind {
    pub fn label(self) -> &'static str {
        match self {
            Self::L1 => "L1",
            Self::Rmse => "RMSE",
        }
    }
}

/// `(1/n) Σ |Δ_i| / (4i/n)` or `sqrt((1/n) Σ Δ_i² / (4i/n))`, `i = 1..=n`.
pub fn weighted_loss(f: &[f64], fhat: &[f64], kind: LossKind) -> Result<f64> {
    if f.len() != fhat.len() {
        return Err(Error::LengthMismatch {
            expected: f.len(),
            got: fhat.len(),
        });
    }
    if f.is_empty() {
        return Err(Error::Degenerate("empty loss grid".into()));
    }
    let n = f.len() as f64;
    let terms = f.iter().zip(fhat).enumerate().map(|(i, (a, b))| {
        let w = 4.0 * (i + 1) as f64 / n;
        match kind {
            LossKind::L1 => (a - b).abs() / w,
            LossKind::Rmse => (a - b).powi(2) / w,
        }
    });
    let mean = terms.sum::<f64>() / n;
    Ok(match kind {
        LossKind::L1 => mean,
        LossKind::Rmse => mean.sqrt(),
    })
}
