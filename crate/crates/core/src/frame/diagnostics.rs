//! Norms, localization and smoothness diagnostics of needlet frames.

use std::f64::consts::PI;
use std::ops::{Range, RangeInclusive};

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::{level_slot, BasisFamily, NeedletCoeffs, NeedletFrame};
use crate::error::{Error, Result};

/// Relative change under order doubling above which a norm is unresolved.
const RESOLUTION_TOL: f64 = 1e-3;
const MAX_DOUBLINGS: usize = 3;
/// Sup-norm grid points per unit of the largest frequency carried.
const SUP_GRID_DENSITY: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesovParams {
    pub s: f64,
    pub pi: f64,
    /// `f64::INFINITY` selects the sup over levels.
    pub r: f64,
}

impl BesovParams {
    pub fn new(s: f64, pi: f64, r: f64) -> Result<Self> {
        if !(s > 0.0 && pi >= 1.0 && r >= 1.0) {
            return Err(Error::Domain(format!(
                "Besov indices need s > 0, pi >= 1, r >= 1 (got {s}, {pi}, {r})"
            )));
        }
        Ok(Self { s, pi, r })
    }
}

fn check_p(p: f64) -> Result<()> {
    if p > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "norm exponent must be positive, got {p}"
        )))
    }
}

fn check_level(frame: &NeedletFrame, j: i32) -> Result<()> {
    if j < -1 || j > frame.jmax as i32 {
        return Err(Error::Domain(format!(
            "level {j} outside -1..={}",
            frame.jmax
        )));
    }
    Ok(())
}

/// Basis functions `e_i`, `i ∈ window`, at the points (rows = basis index).
fn basis_matrix(basis: &BasisFamily, window: &Range<usize>, xs: &[f64]) -> Array2<f64> {
    let ev = basis.evaluator(window.end);
    let mut buf = vec![0.0; window.end];
    let mut out = Array2::zeros((window.len(), xs.len()));
    for (col, &x) in xs.iter().enumerate() {
        ev.eval_into(x, &mut buf);
        for (row, i) in window.clone().enumerate() {
            out[[row, col]] = buf[i];
        }
    }
    out
}

/// `ψ_{j,η_ν}(x)` for every node of level `j` (rows) at every point (columns).
pub fn level_values(frame: &NeedletFrame, j: i32, xs: &[f64]) -> Result<Array2<f64>> {
    check_level(frame, j)?;
    let l = &frame.levels[level_slot(j)];
    Ok(l.coeffs.dot(&basis_matrix(&frame.basis, &l.window, xs)))
}

pub fn needlet_values(frame: &NeedletFrame, j: i32, nu: usize, xs: &[f64]) -> Result<Vec<f64>> {
    check_level(frame, j)?;
    let l = &frame.levels[level_slot(j)];
    if nu >= l.len() {
        return Err(Error::Domain(format!("node {nu} outside level {j}")));
    }
    let row = l.coeffs.row(nu);
    Ok(row.dot(&basis_matrix(&frame.basis, &l.window, xs)).to_vec())
}

/// `(Σ_k w_k |F(x_k)|^p)^{1/p}` for each row `F` of `funcs`, refining the rule
/// until successive orders agree.
fn quadrature_norms(
    basis: &BasisFamily,
    funcs: ArrayView2<'_, f64>,
    window: &Range<usize>,
    p: f64,
) -> Result<Vec<f64>> {
    let eval = |order: usize| -> Result<Array1<f64>> {
        let (xs, ws) = basis.measure_rule(order)?;
        let vals = funcs.dot(&basis_matrix(basis, window, &xs));
        let w = Array1::from(ws);
        Ok(vals.mapv(|v| v.abs().powf(p)).dot(&w))
    };
    let mut order = (4 * window.end).max(16);
    let mut prev = eval(order)?;
    let mut change = f64::INFINITY;
    for _ in 0..MAX_DOUBLINGS {
        order *= 2;
        let next = eval(order)?;
        change = prev
            .iter()
            .zip(next.iter())
            .map(|(a, b)| (a - b).abs() / b.abs().max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max);
        prev = next;
        if change <= RESOLUTION_TOL {
            return Ok(prev.iter().map(|v| v.powf(1.0 / p)).collect());
        }
    }
    Err(Error::Unresolved { change })
}

/// Coarse sup-norm grid: uniform in `θ` for Jacobi, uniform in `x` otherwise.
fn sup_grid(basis: &BasisFamily, count: usize) -> Vec<f64> {
    match basis {
        BasisFamily::Jacobi(_) => (0..=count)
            .map(|k| (PI * k as f64 / count as f64).cos())
            .collect(),
        BasisFamily::FourierPeriodic => (0..count).map(|k| k as f64 / count as f64).collect(),
    }
}

/// Points 4× denser than the coarse grid within a few peak widths of `center`.
fn refined_points(basis: &BasisFamily, center: f64, count: usize, freq_top: usize) -> Vec<f64> {
    let fine = 4 * count;
    match basis {
        BasisFamily::Jacobi(_) => {
            let theta = center.clamp(-1.0, 1.0).acos();
            let half = 2.0 * PI / freq_top as f64;
            let step = PI / fine as f64;
            let n = (2.0 * half / step).ceil() as usize;
            (0..=n)
                .map(|k| (theta - half + k as f64 * step).clamp(0.0, PI).cos())
                .collect()
        }
        BasisFamily::FourierPeriodic => {
            let half = 2.0 / freq_top as f64;
            let step = 1.0 / fine as f64;
            let n = (2.0 * half / step).ceil() as usize;
            (0..=n)
                .map(|k| (center - half + k as f64 * step).rem_euclid(1.0))
                .collect()
        }
    }
}

fn sup_norms(
    basis: &BasisFamily,
    funcs: ArrayView2<'_, f64>,
    window: &Range<usize>,
    centers: Option<&[f64]>,
) -> Vec<f64> {
    let count = SUP_GRID_DENSITY * window.end.max(2);
    let xs = sup_grid(basis, count);
    let vals = funcs.dot(&basis_matrix(basis, window, &xs));
    let mut out: Vec<f64> = vals
        .axis_iter(Axis(0))
        .map(|r| r.iter().fold(0.0f64, |m, v| m.max(v.abs())))
        .collect();
    if let Some(centers) = centers {
        for (k, &c) in centers.iter().enumerate() {
            let pts = refined_points(basis, c, count, window.end);
            let local = funcs.row(k).dot(&basis_matrix(basis, window, &pts));
            out[k] = local.iter().fold(out[k], |m, v| m.max(v.abs()));
        }
    }
    out
}

/// `‖ψ_{j,η_ν}‖_p` for every node of level `j`; `p = ∞` takes a refined grid max.
pub fn level_norms(frame: &NeedletFrame, j: i32, p: f64) -> Result<Vec<f64>> {
    check_level(frame, j)?;
    check_p(p)?;
    let l = &frame.levels[level_slot(j)];
    if j == -1 {
        return Ok(vec![1.0]);
    }
    if p.is_infinite() {
        Ok(sup_norms(
            &frame.basis,
            l.coeffs.view(),
            &l.window,
            Some(&l.nodes),
        ))
    } else {
        quadrature_norms(&frame.basis, l.coeffs.view(), &l.window, p)
    }
}

/// `‖ψ_{j,η_ν}‖_p` under the family's measure.
pub fn frame_norm(frame: &NeedletFrame, j: i32, nu: usize, p: f64) -> Result<f64> {
    check_level(frame, j)?;
    check_p(p)?;
    let l = &frame.levels[level_slot(j)];
    if nu >= l.len() {
        return Err(Error::Domain(format!("node {nu} outside level {j}")));
    }
    if j == -1 {
        return Ok(1.0);
    }
    let row = l.coeffs.slice(ndarray::s![nu..nu + 1, ..]);
    let v = if p.is_infinite() {
        sup_norms(&frame.basis, row, &l.window, Some(&l.nodes[nu..nu + 1]))
    } else {
        quadrature_norms(&frame.basis, row, &l.window, p)?
    };
    Ok(v[0])
}

/// `‖Σ_ν λ_ν ψ_{j,η_ν}‖_p`.
pub fn combination_norm(frame: &NeedletFrame, j: i32, lambdas: &[f64], p: f64) -> Result<f64> {
    check_level(frame, j)?;
    check_p(p)?;
    let l = &frame.levels[level_slot(j)];
    if lambdas.len() != l.len() {
        return Err(Error::LengthMismatch {
            expected: l.len(),
            got: lambdas.len(),
        });
    }
    let coeffs = l.coeffs.t().dot(&Array1::from(lambdas.to_vec()));
    let funcs = coeffs.insert_axis(Axis(0));
    let v = if p.is_infinite() {
        sup_norms(&frame.basis, funcs.view(), &l.window, None)
    } else {
        quadrature_norms(&frame.basis, funcs.view(), &l.window, p)?
    };
    Ok(v[0])
}

/// Smallest `C` with `|ψ_{j,η_ν}(cos θ)| ≤ C 2^{j/2} / ((1 + 2^j|θ - θ_ν|)^l sqrt(ω(2^j; cos θ)))`
/// on a dense `θ` grid.
pub fn localization_check(frame: &NeedletFrame, j: i32, nu: usize, l: u32) -> Result<f64> {
    let params = match frame.basis {
        BasisFamily::Jacobi(p) => p,
        BasisFamily::FourierPeriodic => {
            return Err(Error::Unsupported(
                "localization envelope is defined for Jacobi frames".into(),
            ))
        }
    };
    check_level(frame, j)?;
    if j == -1 {
        return Ok(1.0);
    }
    let level = &frame.levels[level_slot(j)];
    if nu >= level.len() {
        return Err(Error::Domain(format!("node {nu} outside level {j}")));
    }
    let scale = (1u64 << j) as f64;
    let count = 256 * (1usize << j);
    let theta_nu = level.nodes[nu].acos();
    let mut thetas: Vec<f64> = (0..=count).map(|k| PI * k as f64 / count as f64).collect();
    thetas.push(theta_nu);
    let xs: Vec<f64> = thetas.iter().map(|t| t.cos()).collect();
    let vals = needlet_values(frame, j, nu, &xs)?;
    let mut c: f64 = 0.0;
    for ((&t, &x), v) in thetas.iter().zip(&xs).zip(&vals) {
        let omega = params.generalized_weight(scale, x.clamp(-1.0, 1.0))?;
        let envelope =
            scale.sqrt() / ((1.0 + scale * (t - theta_nu).abs()).powi(l as i32) * omega.sqrt());
        c = c.max(v.abs() / envelope);
    }
    Ok(c)
}

/// `‖(2^{js} (Σ_η |β_{j,η}|^π ‖ψ_{j,η}‖_π^π)^{1/π})_j‖_{l_r}`, computing the
/// needlet `π`-norms on the levels where `β` is nonzero.
pub fn besov_seq_norm(frame: &NeedletFrame, beta: &NeedletCoeffs, bp: &BesovParams) -> Result<f64> {
    frame.check_shape(beta)?;
    let norms = beta
        .iter()
        .map(|(j, b)| {
            if b.iter().all(|v| *v == 0.0) {
                Ok(vec![0.0; b.len()])
            } else {
                level_norms(frame, j, bp.pi)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    besov_seq_norm_with(beta, bp, &norms)
}

/// As [`besov_seq_norm`] with precomputed `‖ψ_{j,η}‖_π`.
pub fn besov_seq_norm_with(
    beta: &NeedletCoeffs,
    bp: &BesovParams,
    norms: &[Vec<f64>],
) -> Result<f64> {
    if norms.len() != beta.levels.len() {
        return Err(Error::IndexMismatch(
            "norm table does not match coefficients".into(),
        ));
    }
    let mut terms = Vec::with_capacity(norms.len());
    for ((j, b), n) in beta.iter().zip(norms) {
        if n.len() != b.len() {
            return Err(Error::IndexMismatch(format!("norm table level {j}")));
        }
        let inner: f64 = b
            .iter()
            .zip(n)
            .map(|(v, m)| (v.abs() * m).powf(bp.pi))
            .sum();
        terms.push(2f64.powf(j as f64 * bp.s) * inner.powf(1.0 / bp.pi));
    }
    Ok(if bp.r.is_infinite() {
        terms.into_iter().fold(0.0, f64::max)
    } else {
        terms
            .iter()
            .map(|t| t.powf(bp.r))
            .sum::<f64>()
            .powf(1.0 / bp.r)
    })
}

/// Estimates of `E_{2^j}(f, p)`: the `p`-norm of `f` minus its needlet partial
/// sum through level `j`, made non-increasing by a running minimum.
pub fn best_approx_errors(
    frame: &NeedletFrame,
    f: &[f64],
    p: f64,
    levels: RangeInclusive<i32>,
) -> Result<Vec<f64>> {
    check_p(p)?;
    let (lo, hi) = (*levels.start(), *levels.end());
    check_level(frame, lo)?;
    check_level(frame, hi)?;
    let beta = frame.analyze(f)?;
    let n = frame.coeff_len();
    let mut partial = vec![0.0; n];
    let mut out = Vec::new();
    let mut best = f64::INFINITY;
    for (slot, level) in frame.levels.iter().enumerate() {
        let j = slot as i32 - 1;
        if j > hi {
            break;
        }
        let contrib = level
            .coeffs
            .t()
            .dot(&Array1::from(beta.levels[slot].clone()));
        for (o, c) in partial[level.window.clone()].iter_mut().zip(contrib.iter()) {
            *o += c;
        }
        if j < lo {
            continue;
        }
        let residual: Vec<f64> = f
            .iter()
            .enumerate()
            .map(|(i, v)| v - partial.get(i).copied().unwrap_or(0.0))
            .collect();
        let e = coefficient_norm(&frame.basis, &residual, p)?;
        best = best.min(e);
        out.push(best);
    }
    Ok(out)
}

/// `‖Σ_i c_i e_i‖_p` under the family's measure.
pub fn coefficient_norm(basis: &BasisFamily, coeffs: &[f64], p: f64) -> Result<f64> {
    check_p(p)?;
    let scale = coeffs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return Ok(0.0);
    }
    if p == 2.0 {
        return Ok(coeffs.iter().map(|v| v * v).sum::<f64>().sqrt());
    }
    let window = 0..coeffs.len();
    let funcs = Array1::from(coeffs.to_vec()).insert_axis(Axis(0));
    let v = if p.is_infinite() {
        sup_norms(basis, funcs.view(), &window, None)
    } else {
        quadrature_norms(basis, funcs.view(), &window, p)?
    };
    Ok(v[0])
}
