//! Invariant suite for a built or loaded frame.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{quadrature_defect, NeedletFrame};
use crate::error::Result;
use crate::filter::check_partition;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub rows: Vec<CheckRow>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    fn push(&mut self, name: &str, value: f64, tolerance: f64) {
        self.rows.push(CheckRow {
            name: name.to_string(),
            value,
            tolerance,
            pass: value <= tolerance,
        });
    }
}

impl std::fmt::Display for CheckReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "{:<24} {:>12} {:>10}  result",
            "check", "value", "tolerance"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<24} {:>12.3e} {:>10.1e}  {}",
                r.name,
                r.value,
                r.tolerance,
                if r.pass { "PASS" } else { "FAIL" }
            )?;
        }
        Ok(())
    }
}

/// Runs the frame invariants. `probes` random in-budget vectors feed the
/// Parseval and reconstruction checks.
pub fn check_frame(frame: &NeedletFrame, probes: usize, seed: u64) -> Result<CheckReport> {
    let mut report = CheckReport { rows: Vec::new() };

    let quad = frame.levels[1..]
        .iter()
        .map(|l| quadrature_defect(&frame.basis, &l.nodes, &l.weights))
        .fold(0.0f64, f64::max);
    report.push("quadrature", quad, 1e-10);

    let top = 2f64.powi(frame.jmax as i32).max(2.0);
    let grid: Vec<f64> = (0..10_000)
        .map(|k| 1.0 + (top - 1.0) * k as f64 / 9_999.0)
        .collect();
    report.push(
        "partition of unity",
        check_partition(&frame.filter, &grid)?,
        1e-12,
    );

    let mut zero_sum = 0.0f64;
    let mut norm_excess = 0.0f64;
    for l in &frame.levels {
        for (col, i) in l.window.clone().enumerate() {
            if i == 0 {
                continue;
            }
            let s: f64 = l
                .weights
                .iter()
                .zip(l.coeffs.column(col))
                .map(|(w, c)| w.sqrt() * c)
                .sum();
            zero_sum = zero_sum.max(s.abs());
        }
        for nu in 0..l.len() {
            let n2: f64 = l.needlet(nu).iter().map(|c| c * c).sum();
            norm_excess = norm_excess.max(n2.sqrt() - 1.0);
        }
    }
    report.push("zero-sum levels", zero_sum, 1e-10);
    report.push("needlet norm excess", norm_excess.max(0.0), 1e-10);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let budget = frame.budget();
    let (mut parseval, mut round_trip) = (0.0f64, 0.0f64);
    for _ in 0..probes {
        let mut f = vec![0.0; frame.coeff_len()];
        for v in &mut f[..budget] {
            *v = StandardNormal.sample(&mut rng);
        }
        let norm2: f64 = f.iter().map(|v| v * v).sum();
        let beta = frame.analyze(&f)?;
        parseval = parseval.max((beta.sum_squares() - norm2).abs() / norm2);
        let back = frame.synthesize(&beta)?;
        let err: f64 = back.iter().zip(&f).map(|(a, b)| (a - b).powi(2)).sum();
        round_trip = round_trip.max((err / norm2).sqrt());
    }
    report.push("parseval", parseval, 1e-8);
    report.push("reconstruction", round_trip, 1e-8);

    let rebuilt = NeedletFrame::build(frame.basis, frame.filter.clone(), frame.jmax, frame.layout)?;
    let mut drift = 0.0f64;
    for (a, b) in frame.levels.iter().zip(&rebuilt.levels) {
        if a.coeffs.dim() != b.coeffs.dim() || a.window != b.window {
            drift = f64::INFINITY;
            break;
        }
        for (x, y) in a.coeffs.iter().zip(&b.coeffs) {
            drift = drift.max((x - y).abs());
        }
    }
    report.push("matches rebuild", drift, 1e-12);
    Ok(report)
}
