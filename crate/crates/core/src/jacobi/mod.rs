//! Orthonormal Jacobi polynomials on `[-1, 1]` and Gauss–Jacobi quadrature.
//!
//! Everything here is normalized against the probability measure
//! `dγ(x) = c (1 - x)^α (1 + x)^β dx`, so `Π_0 ≡ 1` and quadrature weights
//! sum to one.

mod tridiag;

pub use tridiag::symmetric_tridiagonal_eigenvalues;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Exponents of the Jacobi weight plus the normalization making `dγ` a
/// probability measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JacobiParams {
    pub alpha: f64,
    pub beta: f64,
    pub c_norm: f64,
}

impl JacobiParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > -0.5 && beta > -0.5) || !alpha.is_finite() || !beta.is_finite() {
            return Err(Error::InvalidJacobiParams { alpha, beta });
        }
        // 1 / ∫ (1-x)^α (1+x)^β dx = 1 / (2^{α+β+1} B(α+1, β+1)), in log space
        let log_integral = (alpha + beta + 1.0) * std::f64::consts::LN_2
            + ln_gamma(alpha + 1.0)
            + ln_gamma(beta + 1.0)
            - ln_gamma(alpha + beta + 2.0);
        Ok(Self {
            alpha,
            beta,
            c_norm: (-log_integral).exp(),
        })
    }

    /// The Legendre case α = β = 0.
    pub fn legendre() -> Self {
        Self::new(0.0, 0.0).expect("valid parameters")
    }

    /// Density of `dγ` with respect to Lebesgue measure.
    pub fn density(&self, x: f64) -> f64 {
        self.c_norm * (1.0 - x).powf(self.alpha) * (1.0 + x).powf(self.beta)
    }

    /// Regularized weight `(1 - x + n^{-2})^{α+1/2} (1 + x + n^{-2})^{β+1/2}`.
    pub fn generalized_weight(&self, n: f64, x: f64) -> Result<f64> {
        if !(n >= 1.0) {
            return Err(Error::Domain(format!(
                "generalized weight needs n >= 1, got {n}"
            )));
        }
        check_unit_interval(x)?;
        let h = 1.0 / (n * n);
        Ok((1.0 - x + h).powf(self.alpha + 0.5) * (1.0 + x + h).powf(self.beta + 0.5))
    }
}

fn check_unit_interval(x: f64) -> Result<()> {
    if x.abs() > 1.0 || x.is_nan() {
        Err(Error::Domain(format!("x = {x} outside [-1, 1]")))
    } else {
        Ok(())
    }
}

/// Three-term recurrence of the orthonormal family,
/// `x Π_k = b_{k+1} Π_{k+1} + a_k Π_k + b_k Π_{k-1}`.
#[derive(Debug, Clone)]
pub struct Recurrence {
    params: JacobiParams,
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl Recurrence {
    /// Coefficients sufficient to evaluate up to degree `kmax`.
    pub fn new(params: JacobiParams, kmax: usize) -> Self {
        let (a, b) = (params.alpha, params.beta);
        let mut diag = Vec::with_capacity(kmax + 1);
        let mut off = Vec::with_capacity(kmax + 2);
        off.push(0.0);
        for k in 0..=kmax {
            let kf = k as f64;
            let s = 2.0 * kf + a + b;
            diag.push(if k == 0 {
                (b - a) / (a + b + 2.0)
            } else {
                (b * b - a * a) / (s * (s + 2.0))
            });
            let k1 = kf + 1.0;
            let s1 = 2.0 * k1 + a + b;
            let num = 4.0 * k1 * (k1 + a) * (k1 + b) * (k1 + a + b);
            let den = s1 * s1 * (s1 + 1.0) * (s1 - 1.0);
            off.push((num / den).sqrt());
        }
        Self { params, diag, off }
    }

    pub fn params(&self) -> JacobiParams {
        self.params
    }

    pub fn max_degree(&self) -> usize {
        self.diag.len() - 1
    }

    /// Writes `Π_0(x), …, Π_{out.len()-1}(x)` into `out`.
    pub fn eval_into(&self, x: f64, out: &mut [f64]) {
        let n = out.len();
        assert!(n <= self.diag.len() + 1, "recurrence too short");
        if n == 0 {
            return;
        }
        out[0] = 1.0;
        if n > 1 {
            out[1] = (x - self.diag[0]) / self.off[1];
        }
        for k in 1..n.saturating_sub(1) {
            out[k + 1] = ((x - self.diag[k]) * out[k] - self.off[k] * out[k - 1]) / self.off[k + 1];
        }
    }

    pub fn eval_all(&self, kmax: usize, x: f64) -> Vec<f64> {
        let mut out = vec![0.0; kmax + 1];
        self.eval_into(x, &mut out);
        out
    }

    /// `(Π_n(x), Π_n'(x))`.
    fn value_and_derivative(&self, n: usize, x: f64) -> (f64, f64) {
        let (mut p0, mut p1) = (0.0, 1.0);
        let (mut d0, mut d1) = (0.0, 0.0);
        for k in 0..n {
            let p2 = ((x - self.diag[k]) * p1 - self.off[k] * p0) / self.off[k + 1];
            let d2 = (p1 + (x - self.diag[k]) * d1 - self.off[k] * d0) / self.off[k + 1];
            p0 = p1;
            p1 = p2;
            d0 = d1;
            d1 = d2;
        }
        (p1, d1)
    }
}

/// `(Π_0(x), …, Π_kmax(x))` for the orthonormal Jacobi family.
pub fn jacobi_eval_all(params: &JacobiParams, kmax: usize, x: f64) -> Result<Vec<f64>> {
    check_unit_interval(x)?;
    JacobiParams::new(params.alpha, params.beta)?;
    Ok(Recurrence::new(*params, kmax).eval_all(kmax, x))
}

/// Regularized Jacobi weight `ω_{α,β}(n; x)`.
pub fn generalized_weight(params: &JacobiParams, n: usize, x: f64) -> Result<f64> {
    params.generalized_weight(n as f64, x)
}

/// Gauss–Jacobi rule: the zeros of `Π_N` with their Christoffel numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    pub params: JacobiParams,
    /// Strictly decreasing, inside (-1, 1).
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// `θ_ν = arccos η_ν`, increasing.
    pub fn angles(&self) -> Vec<f64> {
        self.nodes.iter().map(|x| x.acos()).collect()
    }
}

/// Builds the `n`-point Gauss–Jacobi rule.
///
/// Nodes come from the eigenvalues of the symmetric Jacobi matrix, are
/// polished by Newton steps on `Π_n`, and weights are the Christoffel numbers
/// `1 / Σ_{k<n} Π_k(η)^2`.
pub fn gauss_jacobi_rule(params: &JacobiParams, n: usize) -> Result<QuadratureRule> {
    if n == 0 {
        return Err(Error::Domain("quadrature order must be positive".into()));
    }
    let params = JacobiParams::new(params.alpha, params.beta)?;
    let rec = Recurrence::new(params, n);
    let mut nodes = symmetric_tridiagonal_eigenvalues(&rec.diag[..n], &rec.off[1..n])?;
    nodes.sort_by(|a, b| b.total_cmp(a));

    for (index, x) in nodes.iter_mut().enumerate() {
        let mut converged = false;
        for _ in 0..8 {
            let (p, dp) = rec.value_and_derivative(n, *x);
            if dp == 0.0 || !dp.is_finite() {
                return Err(Error::NodeSolver { order: n, index });
            }
            let step = p / dp;
            *x -= step;
            if step.abs() <= 1e-15 * x.abs().max(1e-3) {
                converged = true;
                break;
            }
        }
        if !converged {
            let (p, dp) = rec.value_and_derivative(n, *x);
            if (p / dp).abs() > 1e-13 {
                return Err(Error::NodeSolver { order: n, index });
            }
        }
        if !(x.abs() < 1.0) {
            return Err(Error::NodeSolver { order: n, index });
        }
    }
    for (index, pair) in nodes.windows(2).enumerate() {
        if !(pair[0] > pair[1]) {
            return Err(Error::NodeSolver {
                order: n,
                index: index + 1,
            });
        }
    }

    let mut buf = vec![0.0; n];
    let weights = nodes
        .iter()
        .map(|&x| {
            rec.eval_into(x, &mut buf);
            1.0 / buf.iter().map(|v| v * v).sum::<f64>()
        })
        .collect();

    Ok(QuadratureRule {
        params,
        nodes,
        weights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn constant_polynomial_is_one() {
        let p = JacobiParams::new(0.0, 1.0).unwrap();
        assert_eq!(jacobi_eval_all(&p, 0, 0.3).unwrap(), vec![1.0]);
    }

    #[test]
    fn legendre_degree_one_matches_gram_schmidt() {
        // Gram–Schmidt of {1, x} under dx/2: x has norm 1/√3, so Π_1 = √3 x
        let v = jacobi_eval_all(&JacobiParams::legendre(), 1, 0.5).unwrap();
        assert_abs_diff_eq!(v[0], 1.0);
        assert_abs_diff_eq!(v[1], 3f64.sqrt() * 0.5, epsilon = 1e-15);
    }

    #[test]
    fn orthogonality_against_high_order_rule() {
        let p = JacobiParams::new(0.0, 1.0).unwrap();
        let rule = gauss_jacobi_rule(&p, 64).unwrap();
        let rec = Recurrence::new(p, 5);
        let (mut i35, mut i55) = (0.0, 0.0);
        for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
            let v = rec.eval_all(5, x);
            i35 += w * v[3] * v[5];
            i55 += w * v[5] * v[5];
        }
        assert!(i35.abs() < 1e-12);
        assert_abs_diff_eq!(i55, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn normalization_constant() {
        // ∫ (1+x) dx over [-1,1] = 2
        assert_abs_diff_eq!(
            JacobiParams::new(0.0, 1.0).unwrap().c_norm,
            0.5,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(JacobiParams::legendre().c_norm, 0.5, epsilon = 1e-14);
        // ∫ sqrt(1-x^2) dx = π/2
        assert_abs_diff_eq!(
            JacobiParams::new(0.5, 0.5).unwrap().c_norm,
            2.0 / std::f64::consts::PI,
            epsilon = 1e-14
        );
        // the measure integrates to one under a rule for a different weight
        for (a, b) in [(0.0, 1.0), (1.0, 0.0), (0.5, 0.5), (2.5, 0.25)] {
            let p = JacobiParams::new(a, b).unwrap();
            let leg = gauss_jacobi_rule(&JacobiParams::legendre(), 400).unwrap();
            // integrand has endpoint singular derivatives for fractional exponents,
            // so only polynomial weights get the tight check
            let total = 2.0 * leg.integrate(|x| p.density(x));
            let tol = if a.fract() == 0.0 && b.fract() == 0.0 {
                1e-12
            } else {
                1e-5
            };
            assert_abs_diff_eq!(total, 1.0, epsilon = tol);
        }
    }

    #[test]
    fn large_exponents_do_not_overflow() {
        let p = JacobiParams::new(180.0, 200.0).unwrap();
        assert!(p.c_norm.is_finite() && p.c_norm > 0.0);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(JacobiParams::new(-0.5, 0.0).is_err());
        assert!(JacobiParams::new(0.0, -0.7).is_err());
        let p = JacobiParams::legendre();
        assert!(jacobi_eval_all(&p, 3, 1.0001).is_err());
        assert!(gauss_jacobi_rule(&p, 0).is_err());
        let bogus = JacobiParams {
            alpha: -0.9,
            beta: 0.0,
            c_norm: 1.0,
        };
        assert!(jacobi_eval_all(&bogus, 2, 0.0).is_err());
    }

    #[test]
    fn two_point_legendre_rule() {
        // moments ∫ x^m dx/2 for m = 0..3 are 1, 0, 1/3, 0: nodes ±1/√3, weights 1/2
        let r = gauss_jacobi_rule(&JacobiParams::legendre(), 2).unwrap();
        let s = 1.0 / 3f64.sqrt();
        assert_abs_diff_eq!(r.nodes[0], s, epsilon = 1e-15);
        assert_abs_diff_eq!(r.nodes[1], -s, epsilon = 1e-15);
        assert_abs_diff_eq!(r.weights[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(r.weights[1], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn generalized_weight_examples() {
        let p = JacobiParams::legendre();
        assert_abs_diff_eq!(
            generalized_weight(&p, 2, 1.0).unwrap(),
            0.75,
            epsilon = 1e-15
        );
        // large n at the center tends to 1
        assert_abs_diff_eq!(
            generalized_weight(&p, 1 << 20, 0.0).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        let q = JacobiParams::new(0.0, 1.0).unwrap();
        let x: f64 = 0.3;
        let limit = (1.0 - x).powf(0.5) * (1.0 + x).powf(1.5);
        let mut prev = f64::INFINITY;
        for n in [1usize, 4, 16, 64, 256] {
            let gap = (generalized_weight(&q, n, x).unwrap() - limit).abs();
            assert!(gap < prev);
            prev = gap;
        }
        assert!(prev < 1e-4);
        assert!(generalized_weight(&p, 0, 0.0).is_err());
    }

    #[test]
    fn weights_sum_to_one_and_interlace() {
        for (a, b) in [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (0.5, 0.5)] {
            let p = JacobiParams::new(a, b).unwrap();
            let mut prev: Option<QuadratureRule> = None;
            for n in 1..40 {
                let r = gauss_jacobi_rule(&p, n).unwrap();
                assert_abs_diff_eq!(r.weights.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
                assert!(r.weights.iter().all(|&w| w > 0.0));
                if let Some(q) = prev {
                    // η^{(n)}_ν > η^{(n-1)}_ν > η^{(n)}_{ν+1}
                    for (nu, &y) in q.nodes.iter().enumerate() {
                        assert!(r.nodes[nu] > y && y > r.nodes[nu + 1]);
                    }
                }
                prev = Some(r);
            }
        }
    }
}
