//! Inequality-constrained primal–dual method of multipliers.
//!
//! Solves
//!
//! ```text
//! minimize   Σᵢ ½‖E_A,ᵢ − E_V,ᵢ Wᵢ‖_F² + (λ/2)‖Wᵢ‖_F²
//! subject to ‖Wᵢ − Wⱼ‖_max ≤ ε   for every edge (i, j)
//! ```
//!
//! Each edge `(lo, hi)` with `lo < hi` carries two constraint rows,
//! `W_lo − W_hi ≤ ε` and `W_hi − W_lo ≤ ε`, so node `lo` has coefficient
//! `[+1, −1]` and node `hi` has `[−1, +1]`. Every endpoint keeps one `m×n`
//! dual block per row. In a node's own orientation the block whose
//! coefficient is `+1` is called `Z⁺` and the other `Z⁻`; the exchange step
//! pairs blocks that belong to the same constraint row, which means `Z⁺` of
//! one endpoint meets `Z⁻` of the other.
//!
//! One synchronous round:
//!
//! 1. `Wᵢ ← [E_VᵢᵀE_Vᵢ + (2c·dᵢ + λ)I]⁻¹ (E_VᵢᵀE_Aᵢ − Σⱼ (Z⁺ᵢ|ⱼ − Z⁻ᵢ|ⱼ))`
//! 2. `Y⁺ᵢ|ⱼ ← Z⁺ᵢ|ⱼ + 2cWᵢ − cε`, `Y⁻ᵢ|ⱼ ← Z⁻ᵢ|ⱼ − 2cWᵢ − cε`
//! 3. per constraint row and entry: `Zᵢ|ⱼ ← Yⱼ|ᵢ` if `Yᵢ|ⱼ + Yⱼ|ᵢ > 0`,
//!    otherwise `Zᵢ|ⱼ ← −Yᵢ|ⱼ`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::align::{common_dims, independent_ridge, ridge_objective, AlignmentMap, NodeData};
use crate::error::{Error, Result};
use crate::exec::{RoundExecutor, Sequential};
use crate::graph::LanguageGraph;
use crate::matrix::{Cholesky, Matrix};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PdmmConfig {
    /// Convergence (penalty) parameter, `> 0`.
    pub c: f64,
    pub lambda: f64,
    /// Entry-wise bound on neighbour differences; `f64::INFINITY` decouples.
    pub epsilon: f64,
    pub max_iters: usize,
    /// Stop once the largest entry-wise change of any `Wᵢ` falls below this.
    pub stop_tol: Option<f64>,
    pub record_trace: bool,
}

impl Default for PdmmConfig {
    fn default() -> Self {
        PdmmConfig {
            c: 0.4,
            lambda: 0.01,
            epsilon: 0.01,
            max_iters: 500,
            stop_tol: None,
            record_trace: false,
        }
    }
}

impl PdmmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) || !self.c.is_finite() {
            return Err(Error::param("c", format!("must be finite and > 0, got {}", self.c)));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::param("lambda", format!("must be finite and >= 0, got {}", self.lambda)));
        }
        if !(self.epsilon >= 0.0) {
            return Err(Error::param("epsilon", format!("must be >= 0, got {}", self.epsilon)));
        }
        if self.max_iters == 0 {
            return Err(Error::param("max_iters", "must be >= 1"));
        }
        if let Some(tol) = self.stop_tol {
            if !(tol >= 0.0) {
                return Err(Error::param("stop_tol", format!("must be >= 0, got {tol}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PdmmTraceRow {
    pub iter: usize,
    pub objective: f64,
    pub max_violation: f64,
    pub max_step: f64,
}

/// Dual blocks of one undirected edge, `blocks[side][row]`. Side 0 is the
/// lower-indexed endpoint; row 0 is `W_lo − W_hi ≤ ε`.
#[derive(Debug, Clone, PartialEq)]
struct EdgeBlocks {
    blocks: [[Matrix; 2]; 2],
}

impl EdgeBlocks {
    fn zeros(m: usize, n: usize) -> Self {
        let z = || Matrix::zeros(m, n);
        EdgeBlocks {
            blocks: [[z(), z()], [z(), z()]],
        }
    }

    /// `(plus, minus)` in the orientation of endpoint `side`.
    fn oriented(&self, side: usize) -> (&Matrix, &Matrix) {
        (&self.blocks[side][side], &self.blocks[side][1 - side])
    }
}

/// Iterates and dual variables after `t` completed rounds.
#[derive(Debug, Clone, PartialEq)]
pub struct PdmmState {
    w: Vec<Matrix>,
    z: Vec<EdgeBlocks>,
    y: Vec<EdgeBlocks>,
    edges: Vec<(usize, usize)>,
    t: usize,
}

impl PdmmState {
    pub fn iteration(&self) -> usize {
        self.t
    }

    pub fn maps(&self) -> &[Matrix] {
        &self.w
    }

    fn locate(&self, i: usize, j: usize) -> Option<(usize, usize)> {
        let key = (i.min(j), i.max(j));
        let e = self.edges.binary_search(&key).ok()?;
        Some((e, usize::from(i > j)))
    }

    /// `(Z⁺ᵢ|ⱼ, Z⁻ᵢ|ⱼ)` for the directed edge `i|j`.
    pub fn z(&self, i: usize, j: usize) -> Option<(&Matrix, &Matrix)> {
        let (e, side) = self.locate(i, j)?;
        Some(self.z[e].oriented(side))
    }

    /// `(Y⁺ᵢ|ⱼ, Y⁻ᵢ|ⱼ)` from the most recent round.
    pub fn y(&self, i: usize, j: usize) -> Option<(&Matrix, &Matrix)> {
        let (e, side) = self.locate(i, j)?;
        Some(self.y[e].oriented(side))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdmmOutput {
    pub map: AlignmentMap,
    pub iterations: usize,
    pub trace: Option<Vec<PdmmTraceRow>>,
}

/// Largest `‖Wᵢ − Wⱼ‖_max` over the edges; 0 without edges.
pub fn max_violation(g: &LanguageGraph, w: &[Matrix]) -> Result<f64> {
    if w.len() != g.len() {
        return Err(Error::shape(format!("{} maps", g.len()), format!("{}", w.len())));
    }
    g.edges().iter().try_fold(0.0f64, |acc, &(i, j)| Ok(acc.max(w[i].max_abs_diff(&w[j])?)))
}

/// Round-by-round driver. Most callers want [`pdmm_solve`].
pub struct PdmmSolver<'a> {
    graph: &'a LanguageGraph,
    data: &'a [NodeData],
    cfg: PdmmConfig,
    factors: Vec<Cholesky>,
    cross: Vec<Matrix>,
    /// Per node: `(edge index, side)` of every incident edge.
    incident: Vec<Vec<(usize, usize)>>,
    state: PdmmState,
}

impl<'a> PdmmSolver<'a> {
    pub fn new(graph: &'a LanguageGraph, data: &'a [NodeData], cfg: PdmmConfig) -> Result<Self> {
        cfg.validate()?;
        if graph.len() != data.len() {
            return Err(Error::shape(format!("{} nodes", graph.len()), format!("{} data sets", data.len())));
        }
        let (m, n) = common_dims(data)?;
        let mut factors = Vec::with_capacity(data.len());
        let mut cross = Vec::with_capacity(data.len());
        for (i, d) in data.iter().enumerate() {
            let mut system = d.victim().gram();
            system.add_diagonal(2.0 * cfg.c * graph.degree(i) as f64 + cfg.lambda);
            factors.push(Cholesky::new(&system).ok_or(Error::IndefiniteSystem { node: i })?);
            cross.push(d.victim().t_matmul(d.attack())?);
        }
        let edges = graph.edges().to_vec();
        let mut incident = vec![Vec::new(); data.len()];
        for (e, &(lo, hi)) in edges.iter().enumerate() {
            incident[lo].push((e, 0));
            incident[hi].push((e, 1));
        }
        let state = PdmmState {
            w: vec![Matrix::zeros(m, n); data.len()],
            z: vec![EdgeBlocks::zeros(m, n); edges.len()],
            y: vec![EdgeBlocks::zeros(m, n); edges.len()],
            edges,
            t: 0,
        };
        Ok(PdmmSolver {
            graph,
            data,
            cfg,
            factors,
            cross,
            incident,
            state,
        })
    }

    pub fn state(&self) -> &PdmmState {
        &self.state
    }

    pub fn config(&self) -> &PdmmConfig {
        &self.cfg
    }

    /// Runs one synchronous round and returns the largest entry-wise change
    /// of any node map.
    pub fn step<E: RoundExecutor>(&mut self, exec: &E) -> Result<f64> {
        let st = &self.state;
        let (c, eps) = (self.cfg.c, self.cfg.epsilon);

        // Primal: reads Z from the previous round only.
        let w_new = exec.map(self.data.len(), |i| {
            let mut rhs = self.cross[i].clone();
            for &(e, side) in &self.incident[i] {
                let (plus, minus) = st.z[e].oriented(side);
                rhs.axpy(-1.0, plus)?;
                rhs.axpy(1.0, minus)?;
            }
            self.factors[i].solve(&rhs)
        });
        let w_new = w_new.into_iter().collect::<Result<Vec<_>>>()?;
        if w_new.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite { iteration: st.t });
        }

        // Dual: reads only this round's W and the edge's own Z.
        let duals = exec.map(st.edges.len(), |e| {
            let (lo, hi) = st.edges[e];
            let old = &st.z[e].blocks;
            let mut y = EdgeBlocks::zeros(0, 0);
            for (side, node) in [(0, lo), (1, hi)] {
                for (row, z_old) in old[side].iter().enumerate() {
                    let coef = if row == side { 2.0 * c } else { -2.0 * c };
                    y.blocks[side][row] = z_old.zip_map(&w_new[node], |z, w| z + coef * w - c * eps)?;
                }
            }
            let mut z = EdgeBlocks::zeros(0, 0);
            for side in 0..2 {
                for row in 0..2 {
                    let own = &y.blocks[side][row];
                    let other = &y.blocks[1 - side][row];
                    z.blocks[side][row] = own.zip_map(other, |a, b| if a + b > 0.0 { b } else { -a })?;
                }
            }
            Ok((y, z))
        });
        let duals = duals.into_iter().collect::<Result<Vec<_>>>()?;

        let mut max_step = 0.0f64;
        for (old, new) in self.state.w.iter().zip(&w_new) {
            max_step = max_step.max(old.max_abs_diff(new)?);
        }
        self.state.w = w_new;
        for (e, (y, z)) in duals.into_iter().enumerate() {
            self.state.y[e] = y;
            self.state.z[e] = z;
        }
        self.state.t += 1;
        Ok(max_step)
    }

    fn trace_row(&self, max_step: f64) -> Result<PdmmTraceRow> {
        let map = AlignmentMap::new(self.state.w.clone())?;
        Ok(PdmmTraceRow {
            iter: self.state.t,
            objective: ridge_objective(self.data, &map, self.cfg.lambda)?,
            max_violation: max_violation(self.graph, &self.state.w)?,
            max_step,
        })
    }

    pub fn run<E: RoundExecutor>(mut self, exec: &E) -> Result<PdmmOutput> {
        let mut trace = self.cfg.record_trace.then(Vec::new);
        for _ in 0..self.cfg.max_iters {
            let step = self.step(exec)?;
            if let Some(rows) = trace.as_mut() {
                rows.push(self.trace_row(step)?);
            }
            if let Some(tol) = self.cfg.stop_tol {
                if self.state.t > 1 && step < tol {
                    break;
                }
            }
        }
        Ok(PdmmOutput {
            iterations: self.state.t,
            map: AlignmentMap::new(self.state.w)?,
            trace,
        })
    }
}

pub fn pdmm_solve(g: &LanguageGraph, data: &[NodeData], cfg: &PdmmConfig) -> Result<PdmmOutput> {
    pdmm_solve_with(g, data, cfg, &Sequential)
}

/// [`pdmm_solve`] with the node and edge phases of each round scheduled on
/// `exec`. The output does not depend on the executor.
pub fn pdmm_solve_with<E: RoundExecutor>(
    g: &LanguageGraph,
    data: &[NodeData],
    cfg: &PdmmConfig,
    exec: &E,
) -> Result<PdmmOutput> {
    if cfg.epsilon == f64::INFINITY {
        cfg.validate()?;
        if g.len() != data.len() {
            return Err(Error::shape(format!("{} nodes", g.len()), format!("{} data sets", data.len())));
        }
        common_dims(data)?;
        let map = independent_ridge(data, cfg.lambda).map_err(|e| match e {
            Error::RankDeficient => {
                let node = data
                    .iter()
                    .position(|d| crate::align::ridge_align(d, cfg.lambda).is_err())
                    .unwrap_or(0);
                Error::IndefiniteSystem { node }
            }
            other => other,
        })?;
        let trace = if cfg.record_trace {
            Some(vec![PdmmTraceRow {
                iter: 0,
                objective: ridge_objective(data, &map, cfg.lambda)?,
                max_violation: max_violation(g, map.as_slice())?,
                max_step: 0.0,
            }])
        } else {
            None
        };
        return Ok(PdmmOutput { map, iterations: 0, trace });
    }
    PdmmSolver::new(g, data, cfg.clone())?.run(exec)
}
