//! Total-variation coupled subgradient descent.
//!
//! Minimizes
//!
//! ```text
//! Σᵢ ½‖E_A,ᵢ − E_V,ᵢ Wᵢ‖_F² + (λ/2)‖Wᵢ‖_F²  +  η Σ_(i,j)∈E ‖Wᵢ − Wⱼ‖_sum
//! ```
//!
//! with each undirected edge counted once, using the synchronous update
//!
//! ```text
//! Wᵢ ← Wᵢ − α/√(t+1) · [−E_Vᵢᵀ(E_Aᵢ − E_Vᵢ Wᵢ) + λWᵢ + η Σⱼ sign(Wᵢ − Wⱼ)]
//! ```
//!
//! where `sign(0) = 0`.

use alloc::format;
use alloc::vec::Vec;

use crate::align::{alignment_gradient, common_dims, local_objective, ridge_align, AlignmentMap, NodeData};
use crate::error::{Error, Result};
use crate::exec::{RoundExecutor, Sequential};
use crate::graph::LanguageGraph;
use crate::matrix::Matrix;

/// Iterates with an entry above this magnitude are treated as divergent.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TvConfig {
    pub lambda: f64,
    pub eta: f64,
    /// Base learning rate; the step at round `t` is `alpha / sqrt(t + 1)`.
    pub alpha: f64,
    pub max_iters: usize,
    pub record_trace: bool,
    /// Start from the per-node ridge solutions instead of zero.
    pub warm_start: bool,
}

impl Default for TvConfig {
    fn default() -> Self {
        TvConfig {
            lambda: 0.01,
            eta: 0.01,
            alpha: 0.01,
            max_iters: 500,
            record_trace: false,
            warm_start: false,
        }
    }
}

impl TvConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(Error::param("alpha", format!("must be finite and > 0, got {}", self.alpha)));
        }
        if !(self.eta >= 0.0) || !self.eta.is_finite() {
            return Err(Error::param("eta", format!("must be finite and >= 0, got {}", self.eta)));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::param("lambda", format!("must be finite and >= 0, got {}", self.lambda)));
        }
        if self.max_iters == 0 {
            return Err(Error::param("max_iters", "must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TvTraceRow {
    /// Number of completed rounds.
    pub iter: usize,
    /// Objective after the round.
    pub tv_objective: f64,
    /// Step used in the round.
    pub step_size: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TvOutput {
    pub map: AlignmentMap,
    pub trace: Option<Vec<TvTraceRow>>,
}

/// `α / √(t+1)` for zero-based round `t`.
#[inline]
pub fn step_size(alpha: f64, t: usize) -> f64 {
    alpha / libm::sqrt((t + 1) as f64)
}

#[inline]
fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

pub fn tv_objective(g: &LanguageGraph, data: &[NodeData], w: &[Matrix], lambda: f64, eta: f64) -> Result<f64> {
    if data.len() != w.len() || g.len() != w.len() {
        return Err(Error::shape(
            format!("{} nodes", g.len()),
            format!("{} data sets and {} maps", data.len(), w.len()),
        ));
    }
    let mut total = 0.0;
    for (d, wi) in data.iter().zip(w) {
        total += local_objective(d, wi, lambda)?;
    }
    let mut tv = 0.0;
    for &(i, j) in g.edges() {
        tv += w[i].sub(&w[j])?.sum_abs();
    }
    Ok(total + eta * tv)
}

pub fn tv_solve(g: &LanguageGraph, data: &[NodeData], cfg: &TvConfig) -> Result<TvOutput> {
    tv_solve_with(g, data, cfg, &Sequential)
}

/// [`tv_solve`] with node updates scheduled on `exec`.
pub fn tv_solve_with<E: RoundExecutor>(
    g: &LanguageGraph,
    data: &[NodeData],
    cfg: &TvConfig,
    exec: &E,
) -> Result<TvOutput> {
    cfg.validate()?;
    if g.len() != data.len() {
        return Err(Error::shape(format!("{} nodes", g.len()), format!("{} data sets", data.len())));
    }
    let (m, n) = common_dims(data)?;
    let neighbors = g.neighbors();
    let mut w: Vec<Matrix> = if cfg.warm_start {
        data.iter().map(|d| ridge_align(d, cfg.lambda)).collect::<Result<_>>()?
    } else {
        (0..data.len()).map(|_| Matrix::zeros(m, n)).collect()
    };
    let mut trace = cfg.record_trace.then(|| Vec::with_capacity(cfg.max_iters));

    for t in 0..cfg.max_iters {
        let step = step_size(cfg.alpha, t);
        let prev = &w;
        let next = exec.map(data.len(), |i| {
            let mut grad = alignment_gradient(&data[i], &prev[i], cfg.lambda)?;
            if cfg.eta != 0.0 {
                for &j in &neighbors[i] {
                    let sub = prev[i].zip_map(&prev[j], |a, b| sign(a - b))?;
                    grad.axpy(cfg.eta, &sub)?;
                }
            }
            prev[i].zip_map(&grad, |x, gx| x - step * gx)
        });
        w = next.into_iter().collect::<Result<Vec<_>>>()?;
        for wi in &w {
            if !wi.is_finite() {
                return Err(Error::NonFinite { iteration: t });
            }
            if wi.max_abs() > DIVERGENCE_LIMIT {
                return Err(Error::Diverged { iteration: t });
            }
        }
        if let Some(rows) = trace.as_mut() {
            rows.push(TvTraceRow {
                iter: t + 1,
                tv_objective: tv_objective(g, data, &w, cfg.lambda, cfg.eta)?,
                step_size: step,
            });
        }
    }
    Ok(TvOutput {
        map: AlignmentMap::new(w)?,
        trace,
    })
}
