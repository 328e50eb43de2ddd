//! Additive i.i.d. noise on embedding matrices, used to emulate a perturbation
//! defence applied by the victim service.

use alloc::string::ToString;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::CounterRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum NoiseMechanism {
    #[default]
    None,
    /// `scale` is the standard deviation.
    Gaussian,
    /// `scale` is the Laplace scale parameter `b` (variance `2b²`).
    Laplace,
}

impl FromStr for NoiseMechanism {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(NoiseMechanism::None),
            "gaussian" | "normal" => Ok(NoiseMechanism::Gaussian),
            "laplace" => Ok(NoiseMechanism::Laplace),
            _ => Err(Error::UnknownMechanism(s.to_string())),
        }
    }
}

impl fmt::Display for NoiseMechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseMechanism::None => "none",
            NoiseMechanism::Gaussian => "gaussian",
            NoiseMechanism::Laplace => "laplace",
        })
    }
}

/// Returns `e` plus noise drawn deterministically from `seed`. A zero scale or
/// [`NoiseMechanism::None`] returns an exact copy.
pub fn inject_noise(e: &Matrix, mechanism: NoiseMechanism, scale: f64, seed: u64) -> Result<Matrix> {
    if !(scale >= 0.0) || !scale.is_finite() {
        return Err(Error::param("scale", "noise scale must be finite and >= 0"));
    }
    if scale == 0.0 || mechanism == NoiseMechanism::None {
        return Ok(e.clone());
    }
    let rng = CounterRng::new(seed);
    let cols = e.cols();
    Ok(Matrix::from_fn(e.rows(), cols, |i, j| {
        let k = (i * cols + j) as u64;
        let z = match mechanism {
            NoiseMechanism::Gaussian => rng.normal(0, k),
            NoiseMechanism::Laplace => rng.laplace(0, k),
            NoiseMechanism::None => 0.0,
        };
        e[(i, j)] + scale * z
    }))
}
