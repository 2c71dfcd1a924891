use std::f64::consts::{PI, SQRT_2};
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jacobi::{gauss_jacobi_rule, JacobiParams, Recurrence};

/// Orthonormal basis underlying a needlet frame.
///
/// `Jacobi` lives on `[-1, 1]` with the probability measure `dγ_{α,β}`; basis
/// index and frequency coincide. `FourierPeriodic` lives on `[0, 1)` with
/// Lebesgue measure and the real ordering `1, √2 cos 2πx, √2 sin 2πx,
/// √2 cos 4πx, …`, so index `i` carries frequency `⌈i/2⌉`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BasisFamily {
    Jacobi(JacobiParams),
    FourierPeriodic,
}

impl BasisFamily {
    pub fn jacobi(alpha: f64, beta: f64) -> Result<Self> {
        Ok(Self::Jacobi(JacobiParams::new(alpha, beta)?))
    }

    pub fn frequency(&self, index: usize) -> usize {
        match self {
            Self::Jacobi(_) => index,
            Self::FourierPeriodic => index.div_ceil(2),
        }
    }

    /// Basis indices whose frequency lies strictly inside `(2^{j-1}, 2^{j+1})`.
    pub fn window(&self, j: u32) -> Range<usize> {
        let lo_freq = (1usize << j) / 2 + 1;
        let hi_freq = (1usize << (j + 1)) - 1;
        match self {
            Self::Jacobi(_) => lo_freq..hi_freq + 1,
            Self::FourierPeriodic => 2 * lo_freq - 1..2 * hi_freq + 1,
        }
    }

    /// Number of leading basis coefficients on which a frame with top level
    /// `jmax` is tight (frequencies up to `2^jmax`).
    pub fn budget(&self, jmax: u32) -> usize {
        let top = 1usize << jmax;
        match self {
            Self::Jacobi(_) => top + 1,
            Self::FourierPeriodic => 2 * top + 1,
        }
    }

    /// Number of basis coefficients touched by a frame with top level `jmax`.
    pub fn coeff_len(&self, jmax: u32) -> usize {
        self.window(jmax).end
    }

    pub fn domain(&self) -> (f64, f64) {
        match self {
            Self::Jacobi(_) => (-1.0, 1.0),
            Self::FourierPeriodic => (0.0, 1.0),
        }
    }

    pub fn evaluator(&self, count: usize) -> BasisEvaluator {
        BasisEvaluator {
            family: *self,
            count,
            rec: match self {
                Self::Jacobi(p) => Some(Recurrence::new(*p, count)),
                Self::FourierPeriodic => None,
            },
        }
    }

    /// Quadrature for the family's measure, exact for products of two basis
    /// functions of frequency below `order`.
    pub fn measure_rule(&self, order: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        match self {
            Self::Jacobi(p) => {
                let r = gauss_jacobi_rule(p, order)?;
                Ok((r.nodes, r.weights))
            }
            Self::FourierPeriodic => {
                let n = 2 * order;
                let nodes = (0..n).map(|k| k as f64 / n as f64).collect();
                Ok((nodes, vec![1.0 / n as f64; n]))
            }
        }
    }

    /// Quadrature nodes and weights discretizing level `j` of the frame.
    pub(crate) fn level_nodes(
        &self,
        j: u32,
        layout: NodesPerLevel,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        match (self, layout) {
            (Self::Jacobi(p), NodesPerLevel::Exact) => {
                let r = gauss_jacobi_rule(p, 1 << (j + 1))?;
                Ok((r.nodes, r.weights))
            }
            (Self::Jacobi(p), NodesPerLevel::Paper) => {
                let r = gauss_jacobi_rule(p, 1 << j)?;
                Ok((r.nodes, r.weights))
            }
            (Self::FourierPeriodic, layout) => {
                let n = match layout {
                    NodesPerLevel::Exact => 1usize << (j + 2),
                    NodesPerLevel::Paper => 1usize << (j + 1),
                };
                let nodes = (0..n).map(|k| k as f64 / n as f64).collect();
                Ok((nodes, vec![1.0 / n as f64; n]))
            }
        }
    }
}

/// Node count per frame level.
///
/// `Exact` uses the smallest dyadic Gauss rule integrating products of two
/// level-`j` needlets exactly, which makes the frame tight. `Paper` halves it
/// (`2^j` Jacobi nodes); the resulting system is not tight and exists for
/// comparison runs only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodesPerLevel {
    #[default]
    Exact,
    Paper,
}

impl std::str::FromStr for NodesPerLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Self::Exact),
            "paper" => Ok(Self::Paper),
            other => Err(Error::UnknownName(format!("nodes-per-level {other:?}"))),
        }
    }
}

/// Evaluates the first `count` basis functions at a point.
#[derive(Debug, Clone)]
pub struct BasisEvaluator {
    family: BasisFamily,
    count: usize,
    rec: Option<Recurrence>,
}

impl BasisEvaluator {
    pub fn count(&self) -> usize {
        self.count
    }

    pub fn eval_into(&self, x: f64, out: &mut [f64]) {
        debug_assert!(out.len() <= self.count);
        match (&self.family, &self.rec) {
            (BasisFamily::Jacobi(_), Some(rec)) => rec.eval_into(x, out),
            _ => fourier_into(x, out),
        }
    }

    pub fn eval(&self, x: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.count];
        self.eval_into(x, &mut out);
        out
    }
}

fn fourier_into(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    let (s1, c1) = (2.0 * PI * x).sin_cos();
    // angle addition; drift stays near 1e-13 for a few thousand terms
    let (mut c, mut s) = (c1, s1);
    let mut i = 1;
    while i < out.len() {
        out[i] = SQRT_2 * c;
        if i + 1 < out.len() {
            out[i + 1] = SQRT_2 * s;
        }
        let next_c = c * c1 - s * s1;
        s = s * c1 + c * s1;
        c = next_c;
        i += 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gram_defect(family: BasisFamily, count: usize) -> f64 {
        let (nodes, weights) = family.measure_rule(count + 1).unwrap();
        let ev = family.evaluator(count);
        let mut gram = vec![0.0; count * count];
        let mut buf = vec![0.0; count];
        for (&x, &w) in nodes.iter().zip(&weights) {
            ev.eval_into(x, &mut buf);
            for a in 0..count {
                for b in 0..count {
                    gram[a * count + b] += w * buf[a] * buf[b];
                }
            }
        }
        let mut worst: f64 = 0.0;
        for a in 0..count {
            for b in 0..count {
                let want = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((gram[a * count + b] - want).abs());
            }
        }
        worst
    }

    #[test]
    fn families_are_orthonormal() {
        assert!(gram_defect(BasisFamily::FourierPeriodic, 256) < 1e-9);
        assert!(gram_defect(BasisFamily::jacobi(0.0, 1.0).unwrap(), 256) < 1e-9);
        assert!(gram_defect(BasisFamily::jacobi(0.5, 0.5).unwrap(), 128) < 1e-9);
    }

    #[test]
    fn windows() {
        let jac = BasisFamily::jacobi(0.0, 1.0).unwrap();
        assert_eq!(jac.window(0), 1..2);
        assert_eq!(jac.window(1), 2..4);
        assert_eq!(jac.window(3), 5..16);
        assert_eq!(jac.budget(3), 9);
        let fou = BasisFamily::FourierPeriodic;
        assert_eq!(fou.window(0), 1..3);
        assert_eq!(fou.window(2), 5..15);
        assert_eq!(fou.frequency(5), 3);
        assert_eq!(fou.frequency(6), 3);
        assert_eq!(fou.budget(2), 9);
    }
}
