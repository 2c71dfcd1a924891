//! Donoho–Johnstone test signals on `[0, 1]`.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::grid;

const JUMPS: [f64; 11] = [
    0.1, 0.13, 0.15, 0.23, 0.25, 0.40, 0.44, 0.65, 0.76, 0.78, 0.81,
];
const BLOCK_HEIGHTS: [f64; 11] = [4.0, -5.0, 3.0, -4.0, 5.0, -4.2, 2.1, 4.3, -3.1, 2.1, -4.2];
const BUMP_HEIGHTS: [f64; 11] = [4.0, 5.0, 3.0, 4.0, 5.0, 4.2, 2.1, 4.3, 3.1, 5.1, 4.2];
const BUMP_WIDTHS: [f64; 11] = [
    0.005, 0.005, 0.006, 0.01, 0.01, 0.03, 0.01, 0.01, 0.005, 0.008, 0.005,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetName {
    Blocks,
    Bumps,
    Heavisine,
    Doppler,
}

impl TargetName {
    pub const ALL: [TargetName; 4] = [Self::Blocks, Self::Bumps, Self::Heavisine, Self::Doppler];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Blocks => "blocks",
            Self::Bumps => "bumps",
            Self::Heavisine => "heavisine",
            Self::Doppler => "doppler",
        }
    }

    /// The signal before amplitude normalization.
    pub fn eval(self, x: f64) -> f64 {
        match self {
            Self::Blocks => JUMPS
                .iter()
                .zip(BLOCK_HEIGHTS)
                .map(|(t, h)| h * (1.0 + sgn(x - t)) / 2.0)
                .sum(),
            Self::Bumps => JUMPS
                .iter()
                .zip(BUMP_HEIGHTS.iter().zip(BUMP_WIDTHS))
                .map(|(t, (h, w))| h * (1.0 + ((x - t) / w).abs()).powi(-4))
                .sum(),
            Self::Heavisine => 4.0 * (4.0 * PI * x).sin() - sgn(x - 0.3) - sgn(0.72 - x),
            Self::Doppler => (x * (1.0 - x)).sqrt() * (2.0 * PI * 1.05 / (x + 0.05)).sin(),
        }
    }
}

impl fmt::Display for TargetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for TargetName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::UnknownName(format!("target {s:?}")))
    }
}

/// Sign with `sgn(0) = 0`.
fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

pub fn target_function(name: &str) -> Result<impl Fn(f64) -> f64> {
    let t: TargetName = name.parse()?;
    Ok(move |x| t.eval(x))
}

/// A target divided by its standard deviation on the grid `i/n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Target {
    pub name: TargetName,
    pub scale: f64,
}

impl Target {
    pub fn normalized(name: TargetName, n: usize) -> Result<Self> {
        let vals: Vec<f64> = grid(n).into_iter().map(|x| name.eval(x)).collect();
        let mean = vals.iter().sum::<f64>() / n as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        if !(var > 0.0) {
            return Err(Error::Degenerate(format!("{name} is constant on the grid")));
        }
        Ok(Self {
            name,
            scale: 1.0 / var.sqrt(),
        })
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.scale * self.name.eval(x)
    }
}
