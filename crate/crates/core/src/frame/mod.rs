//! Needlet tight frames over an orthonormal SVD basis.
//!
//! Level `-1` is the constant function. Level `j ≥ 0` holds one needlet per
//! quadrature node `η`, with basis coefficients
//! `ψ^i_{j,η} = sqrt(w_η) a(freq(i) / 2^j) e_i(η)`, nonzero only for
//! frequencies in `(2^{j-1}, 2^{j+1})`.

mod basis;
pub mod check;
pub mod diagnostics;
pub mod io;

use std::ops::Range;

use ndarray::{Array2, ArrayView1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::Filter;

pub use basis::{BasisEvaluator, BasisFamily, NodesPerLevel};
pub use check::{check_frame, CheckReport, CheckRow};
pub use diagnostics::{
    besov_seq_norm, best_approx_errors, combination_norm, frame_norm, level_norms,
    localization_check, needlet_values, BesovParams,
};

/// Largest tolerated `|Σ_ν w_ν e_k(η_ν) - δ_{k0}|` over the degrees a level
/// rule claims to integrate exactly.
const QUADRATURE_SELF_CHECK: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct FrameLevel {
    pub j: i32,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Basis indices carried by this level.
    pub window: Range<usize>,
    /// `coeffs[[ν, i - window.start]] = ψ^i_{j,η_ν}`.
    pub coeffs: Array2<f64>,
}

impl FrameLevel {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// 1-based position `k(η_ν)` of the node in decreasing order.
    pub fn node_index(&self, nu: usize) -> usize {
        nu + 1
    }

    /// `k'(η_ν)`, the position counted from the other end of the interval.
    pub fn mirror_index(&self, nu: usize) -> usize {
        self.nodes.len() - (nu + 1)
    }

    pub fn needlet(&self, nu: usize) -> ArrayView1<'_, f64> {
        self.coeffs.row(nu)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeedletFrame {
    pub basis: BasisFamily,
    pub filter: Filter,
    pub jmax: u32,
    pub layout: NodesPerLevel,
    /// `levels[0]` is level -1, `levels[j + 1]` is level `j`.
    pub levels: Vec<FrameLevel>,
}

/// Needlet coefficients `β_{j,η}`, stored per level like [`NeedletFrame::levels`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeedletCoeffs {
    pub levels: Vec<Vec<f64>>,
}

impl NeedletCoeffs {
    pub fn zeros_like(frame: &NeedletFrame) -> Self {
        Self {
            levels: frame.levels.iter().map(|l| vec![0.0; l.len()]).collect(),
        }
    }

    pub fn level(&self, j: i32) -> &[f64] {
        &self.levels[level_slot(j)]
    }

    pub fn level_mut(&mut self, j: i32) -> &mut [f64] {
        &mut self.levels[level_slot(j)]
    }

    pub fn top_level(&self) -> i32 {
        self.levels.len() as i32 - 2
    }

    pub fn iter(&self) -> impl Iterator<Item = (i32, &[f64])> {
        self.levels
            .iter()
            .enumerate()
            .map(|(k, v)| (k as i32 - 1, v.as_slice()))
    }

    pub fn sum_squares(&self) -> f64 {
        self.levels.iter().flatten().map(|b| b * b).sum()
    }

    pub fn scale(&mut self, c: f64) {
        self.levels.iter_mut().flatten().for_each(|b| *b *= c);
    }
}

pub(crate) fn level_slot(j: i32) -> usize {
    assert!(j >= -1, "level index below -1");
    (j + 1) as usize
}

/// Builds the frame with the tight node layout.
pub fn build_frame(basis: BasisFamily, filter: Filter, jmax: u32) -> Result<NeedletFrame> {
    NeedletFrame::build(basis, filter, jmax, NodesPerLevel::Exact)
}

impl NeedletFrame {
    pub fn build(
        basis: BasisFamily,
        filter: Filter,
        jmax: u32,
        layout: NodesPerLevel,
    ) -> Result<Self> {
        if jmax > 14 {
            return Err(Error::Domain(format!(
                "jmax = {jmax} is beyond dense-matrix scale"
            )));
        }
        // validates the profile once, so later evaluations cannot fail
        for k in 0..=400 {
            filter.a(0.5 + 1.5 * k as f64 / 400.0)?;
        }
        let constant = FrameLevel {
            j: -1,
            nodes: vec![0.0],
            weights: vec![1.0],
            window: 0..1,
            coeffs: Array2::from_elem((1, 1), 1.0),
        };
        let mut levels = vec![constant];
        let built: Vec<FrameLevel> = (0..=jmax)
            .into_par_iter()
            .map(|j| build_level(&basis, &filter, j, layout))
            .collect::<Result<_>>()?;
        levels.extend(built);
        Ok(Self {
            basis,
            filter,
            jmax,
            layout,
            levels,
        })
    }

    pub fn level(&self, j: i32) -> &FrameLevel {
        &self.levels[level_slot(j)]
    }

    /// Length of the coefficient vectors consumed by [`Self::analyze`].
    pub fn coeff_len(&self) -> usize {
        self.basis.coeff_len(self.jmax)
    }

    /// Number of leading coefficients on which the frame is tight.
    pub fn budget(&self) -> usize {
        self.basis.budget(self.jmax)
    }

    pub fn n_needlets(&self) -> usize {
        self.levels.iter().map(FrameLevel::len).sum()
    }

    /// `β_{j,η} = Σ_i f_i ψ^i_{j,η}`.
    pub fn analyze(&self, f: &[f64]) -> Result<NeedletCoeffs> {
        if f.len() < self.coeff_len() {
            return Err(Error::LengthMismatch {
                expected: self.coeff_len(),
                got: f.len(),
            });
        }
        let levels = self
            .levels
            .iter()
            .map(|l| {
                let slice = ArrayView1::from(&f[l.window.clone()]);
                l.coeffs.dot(&slice).to_vec()
            })
            .collect();
        Ok(NeedletCoeffs { levels })
    }

    /// `Σ_{j,η} β_{j,η} ψ^i_{j,η}` for `i < coeff_len`.
    pub fn synthesize(&self, beta: &NeedletCoeffs) -> Result<Vec<f64>> {
        self.check_shape(beta)?;
        let mut out = vec![0.0; self.coeff_len()];
        for (l, b) in self.levels.iter().zip(&beta.levels) {
            let contrib = l.coeffs.t().dot(&ArrayView1::from(b.as_slice()));
            for (o, c) in out[l.window.clone()].iter_mut().zip(contrib.iter()) {
                *o += c;
            }
        }
        Ok(out)
    }

    pub(crate) fn check_shape(&self, beta: &NeedletCoeffs) -> Result<()> {
        if beta.levels.len() != self.levels.len() {
            return Err(Error::IndexMismatch(format!(
                "{} coefficient levels for a frame with {}",
                beta.levels.len(),
                self.levels.len()
            )));
        }
        for (l, b) in self.levels.iter().zip(&beta.levels) {
            if b.len() != l.len() {
                return Err(Error::IndexMismatch(format!(
                    "level {} has {} nodes, got {} coefficients",
                    l.j,
                    l.len(),
                    b.len()
                )));
            }
        }
        Ok(())
    }

    /// `σ_j = sup_η (Σ_i (ψ^i_{j,η} / b_i)²)^{1/2}` for `j = -1..=jmax`.
    pub fn level_sigma(&self, singular_values: &[f64]) -> Result<Vec<f64>> {
        Ok(self
            .node_sigma(singular_values)?
            .into_iter()
            .map(|v| v.into_iter().fold(0.0, f64::max))
            .collect())
    }

    /// Per-needlet `(Σ_i (ψ^i_{j,η} / b_i)²)^{1/2}`, indexed like the levels.
    pub fn node_sigma(&self, singular_values: &[f64]) -> Result<Vec<Vec<f64>>> {
        let n = self.coeff_len();
        if singular_values.len() < n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: singular_values.len(),
            });
        }
        if let Some((index, &value)) = singular_values[..n]
            .iter()
            .enumerate()
            .find(|(_, b)| !(**b > 0.0))
        {
            return Err(Error::SingularValue { index, value });
        }
        Ok(self
            .levels
            .iter()
            .map(|l| {
                let inv = &singular_values[l.window.clone()];
                l.coeffs
                    .rows()
                    .into_iter()
                    .map(|row| {
                        row.iter()
                            .zip(inv)
                            .map(|(p, b)| (p / b).powi(2))
                            .sum::<f64>()
                            .sqrt()
                    })
                    .collect()
            })
            .collect())
    }
}

fn build_level(
    basis: &BasisFamily,
    filter: &Filter,
    j: u32,
    layout: NodesPerLevel,
) -> Result<FrameLevel> {
    let (nodes, weights) = basis.level_nodes(j, layout)?;
    self_check(basis, j, &nodes, &weights)?;

    let window = basis.window(j);
    let scale = (1u64 << j) as f64;
    let amps: Vec<f64> = window
        .clone()
        .map(|i| filter.value(basis.frequency(i) as f64 / scale))
        .collect();
    let ev = basis.evaluator(window.end);
    let mut buf = vec![0.0; window.end];
    let mut coeffs = Array2::zeros((nodes.len(), window.len()));
    for (nu, (&x, &w)) in nodes.iter().zip(&weights).enumerate() {
        ev.eval_into(x, &mut buf);
        let sw = w.sqrt();
        for (col, i) in window.clone().enumerate() {
            coeffs[[nu, col]] = sw * amps[col] * buf[i];
        }
    }
    Ok(FrameLevel {
        j: j as i32,
        nodes,
        weights,
        window,
        coeffs,
    })
}

/// The level rule must integrate every basis function it is exact for.
fn self_check(basis: &BasisFamily, j: u32, nodes: &[f64], weights: &[f64]) -> Result<()> {
    let defect = quadrature_defect(basis, nodes, weights);
    if !(defect <= QUADRATURE_SELF_CHECK) {
        return Err(Error::QuadratureCheck {
            level: j as i32,
            defect,
        });
    }
    Ok(())
}

/// Largest `|Σ w e_k(η) - δ_{k0}|` over the degrees the rule must integrate.
pub(crate) fn quadrature_defect(basis: &BasisFamily, nodes: &[f64], weights: &[f64]) -> f64 {
    let count = match basis {
        BasisFamily::Jacobi(_) => 2 * nodes.len(),
        BasisFamily::FourierPeriodic => 2 * nodes.len() - 1,
    };
    let ev = basis.evaluator(count);
    let mut moments = vec![0.0; count];
    let mut buf = vec![0.0; count];
    for (&x, &w) in nodes.iter().zip(weights) {
        ev.eval_into(x, &mut buf);
        for (m, v) in moments.iter_mut().zip(&buf) {
            *m += w * v;
        }
    }
    moments[0] -= 1.0;
    moments.iter().fold(0.0f64, |acc, m| acc.max(m.abs()))
}
