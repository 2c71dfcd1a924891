//! Littlewood–Paley cutoff profiles and the dyadic filter `a`.
//!
//! A profile `φ` equals 1 on `[0, 1/2]`, 0 on `[1, ∞)` and decreases in
//! between. The filter `a(ξ) = sqrt(φ(ξ/2) - φ(ξ))` is supported in
//! `[1/2, 2]`, and the squares of its dyadic dilates telescope to 1 on
//! `ξ ≥ 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Radicands down to this value are clamped to zero; anything more negative
/// means the profile is not monotone.
const RADICAND_SLACK: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileKind {
    PolynomialShape,
    SmoothExponential,
}

impl std::str::FromStr for ProfileKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "polynomial" | "polynomial-shape" => Ok(Self::PolynomialShape),
            "exponential" | "smooth-exponential" => Ok(Self::SmoothExponential),
            other => Err(Error::UnknownName(format!("profile kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutoffProfile {
    pub kind: ProfileKind,
    /// Number of derivatives matched at 1/2 and 1 (polynomial shape only).
    pub smoothness: u32,
    /// Monomial coefficients of the transition `φ(ξ) = Σ c_k u^k` with
    /// `u = 2ξ - 1 ∈ [0, 1]`. Empty for the exponential profile.
    pub transition: Vec<f64>,
}

/// Builds a cutoff profile.
///
/// For the polynomial shape with smoothness `m`, the transition on `[1/2, 1]`
/// is `1 - S_m(u)` where `S_m(u) = u^{m+1} Σ_{k=0}^{m} C(m+k, k) (1-u)^k` is the
/// unique degree `2m+1` polynomial with `S(0) = 0`, `S(1) = 1` and vanishing
/// derivatives of orders `1..=m` at both ends.
pub fn make_profile(kind: ProfileKind, m: u32) -> Result<CutoffProfile> {
    if m < 1 {
        return Err(Error::Domain(
            "profile smoothness must be at least 1".into(),
        ));
    }
    let transition = match kind {
        ProfileKind::SmoothExponential => Vec::new(),
        ProfileKind::PolynomialShape => {
            let m = m as usize;
            let mut s = vec![0.0; 2 * m + 2];
            for k in 0..=m {
                let c = binomial(m + k, k);
                // u^{m+1} (1-u)^k expanded
                for i in 0..=k {
                    let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                    s[m + 1 + i] += c * sign * binomial(k, i);
                }
            }
            let mut phi: Vec<f64> = s.iter().map(|v| -v).collect();
            phi[0] += 1.0;
            phi
        }
    };
    Ok(CutoffProfile {
        kind,
        smoothness: m,
        transition,
    })
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// Coefficients of `p(1 - v)` in `v`; exact for integer coefficients.
fn reflect(coeffs: &[f64]) -> Vec<f64> {
    (0..coeffs.len())
        .map(|i| {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            sign * (i..coeffs.len())
                .map(|k| coeffs[k] * binomial(k, i))
                .sum::<f64>()
        })
        .collect()
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl CutoffProfile {
    pub fn eval(&self, xi: f64) -> f64 {
        let xi = xi.abs();
        if xi <= 0.5 {
            return 1.0;
        }
        if xi >= 1.0 {
            return 0.0;
        }
        let u = 2.0 * xi - 1.0;
        match self.kind {
            // Horner in whichever of u, 1 - u is small, so the flat end is
            // evaluated without cancellation
            ProfileKind::PolynomialShape if u <= 0.5 => horner(&self.transition, u),
            ProfileKind::PolynomialShape => horner(&reflect(&self.transition), 1.0 - u),
            ProfileKind::SmoothExponential => {
                let h = |t: f64| if t > 0.0 { (-1.0 / t).exp() } else { 0.0 };
                let (left, right) = (h(1.0 - u), h(u));
                left / (left + right)
            }
        }
    }

    /// Derivative of the transition polynomial in `ξ` (polynomial shape only).
    pub fn derivative(&self, xi: f64) -> Option<f64> {
        if self.kind != ProfileKind::PolynomialShape {
            return None;
        }
        if !(0.5..=1.0).contains(&xi) {
            return Some(0.0);
        }
        let u = 2.0 * xi - 1.0;
        let du: f64 = self
            .transition
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (k, c)| acc * u + k as f64 * c);
        Some(2.0 * du)
    }
}

/// The dyadic filter `a(ξ) = sqrt(φ(ξ/2) - φ(ξ))`, evaluated analytically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Filter {
    pub profile: CutoffProfile,
}

impl Filter {
    pub fn new(profile: CutoffProfile) -> Self {
        Self { profile }
    }

    /// Polynomial shape with two matched derivatives.
    pub fn default_polynomial() -> Self {
        Self::new(make_profile(ProfileKind::PolynomialShape, 2).expect("m = 2 is valid"))
    }

    pub fn smooth_exponential() -> Self {
        Self::new(make_profile(ProfileKind::SmoothExponential, 1).expect("valid"))
    }

    pub fn squared(&self, xi: f64) -> Result<f64> {
        if !(xi >= 0.0) {
            return Err(Error::Domain(format!(
                "filter argument must be >= 0, got {xi}"
            )));
        }
        if !(0.5..2.0).contains(&xi) {
            return Ok(0.0);
        }
        let r = self.profile.eval(xi / 2.0) - self.profile.eval(xi);
        if r < -RADICAND_SLACK {
            return Err(Error::BrokenProfile { xi, radicand: r });
        }
        Ok(r.max(0.0))
    }

    pub fn a(&self, xi: f64) -> Result<f64> {
        self.squared(xi).map(f64::sqrt)
    }

    /// Like [`Filter::a`] for arguments known to be valid.
    pub(crate) fn value(&self, xi: f64) -> f64 {
        self.a(xi).expect("filter argument and profile validated")
    }
}

/// `a(filter, ξ)` as a free function.
pub fn filter_a(filter: &Filter, xi: f64) -> Result<f64> {
    filter.a(xi)
}

/// Largest deviation of `Σ_{j≥0} a²(ξ / 2^j)` from 1 over the grid.
pub fn check_partition(filter: &Filter, grid: &[f64]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &xi in grid {
        worst = worst.max((partition_sum(filter, xi)? - 1.0).abs());
    }
    Ok(worst)
}

/// `Σ_{j≥0} a²(ξ / 2^j)`; at most two terms are nonzero.
pub fn partition_sum(filter: &Filter, xi: f64) -> Result<f64> {
    if !(xi >= 0.0) {
        return Err(Error::Domain(format!(
            "partition argument must be >= 0, got {xi}"
        )));
    }
    let mut total = 0.0;
    let mut scaled = xi;
    while scaled >= 0.5 {
        if scaled < 2.0 {
            total += filter.a(scaled)?.powi(2);
        }
        scaled /= 2.0;
    }
    Ok(total)
}
