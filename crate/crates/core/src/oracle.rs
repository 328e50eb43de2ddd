//! Reference solvers for small instances.
//!
//! Nothing here calls into the distributed solvers or the closed-form ridge
//! routine; each oracle builds its own normal equations and linear solves so
//! that agreement between a solver and an oracle is evidence rather than
//! shared code.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::align::{AlignmentMap, NodeData};
use crate::error::{Error, Result};
use crate::graph::LanguageGraph;
use crate::matrix::Matrix;

/// Largest edge count accepted by [`scalar_ineq_oracle`] (3^6 patterns).
pub const MAX_ENUM_EDGES: usize = 6;
/// Largest node count accepted by [`scalar_tv_oracle`].
pub const MAX_TV_NODES: usize = 3;
/// KKT sign and feasibility tolerance.
pub const KKT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coupling {
    /// Hard bound `|wᵢ − wⱼ| ≤ ε` on every edge.
    Epsilon(f64),
    /// Penalty `η Σ_edges |wᵢ − wⱼ|`.
    Eta(f64),
}

/// Problem with scalar maps (`m = n = 1`): each node holds pairs `(e_V, e_A)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarInstance {
    pub graph: LanguageGraph,
    pub samples: Vec<Vec<(f64, f64)>>,
    pub lambda: f64,
    pub coupling: Coupling,
}

/// Per-node quadratic `½gw² − rw + k`.
#[derive(Debug, Clone, Copy)]
struct Quad {
    g: f64,
    r: f64,
    k: f64,
}

impl Quad {
    fn eval(&self, w: f64) -> f64 {
        0.5 * self.g * w * w - self.r * w + self.k
    }
}

impl ScalarInstance {
    fn validate(&self) -> Result<Vec<Quad>> {
        if self.samples.is_empty() || self.samples.len() != self.graph.len() {
            return Err(Error::shape(
                format!("{} nodes", self.graph.len()),
                format!("{} sample lists", self.samples.len()),
            ));
        }
        if !(self.lambda >= 0.0) {
            return Err(Error::param("lambda", "must be >= 0"));
        }
        self.samples
            .iter()
            .enumerate()
            .map(|(i, s)| {
                if s.is_empty() {
                    return Err(Error::param("samples", format!("node {i} has no samples")));
                }
                let g = s.iter().map(|(v, _)| v * v).sum::<f64>() + self.lambda;
                if !(g > 0.0) {
                    return Err(Error::IndefiniteSystem { node: i });
                }
                Ok(Quad {
                    g,
                    r: s.iter().map(|(v, a)| v * a).sum(),
                    k: 0.5 * s.iter().map(|(_, a)| a * a).sum::<f64>(),
                })
            })
            .collect()
    }

    /// Each node gets a planted slope `wᵢ* ~ N(0, 1)`, `b` samples with
    /// `e_V ~ N(0, 1)` and `e_A = wᵢ* e_V + 0.1·N(0, 1)`.
    pub fn random(seed: u64, graph: LanguageGraph, b: usize, lambda: f64, coupling: Coupling) -> Self {
        let rng = crate::rng::CounterRng::new(seed);
        let samples = (0..graph.len() as u64)
            .map(|i| {
                let slope = rng.normal(i, 0);
                (0..b as u64)
                    .map(|k| {
                        let v = rng.normal(i, 1 + 2 * k);
                        (v, slope * v + 0.1 * rng.normal(i, 2 + 2 * k))
                    })
                    .collect()
            })
            .collect();
        ScalarInstance {
            graph,
            samples,
            lambda,
            coupling,
        }
    }

    /// Per-node unconstrained minimizers `rᵢ / gᵢ`.
    pub fn decoupled(&self) -> Result<Vec<f64>> {
        Ok(self.validate()?.iter().map(|q| q.r / q.g).collect())
    }

    /// The same problem as `1×1` embedding matrices.
    pub fn node_data(&self) -> Result<Vec<NodeData>> {
        self.samples
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let ev = Matrix::from_vec(s.len(), 1, s.iter().map(|p| p.0).collect())?;
                let ea = Matrix::from_vec(s.len(), 1, s.iter().map(|p| p.1).collect())?;
                NodeData::new(i, ev, ea)
            })
            .collect()
    }

    /// Ridge objective plus, for [`Coupling::Eta`], the once-per-edge TV term.
    pub fn objective(&self, w: &[f64]) -> Result<f64> {
        let quads = self.validate()?;
        Ok(objective(&quads, &self.graph, self.coupling, w))
    }
}

fn objective(quads: &[Quad], g: &LanguageGraph, coupling: Coupling, w: &[f64]) -> f64 {
    let smooth: f64 = quads.iter().zip(w).map(|(q, &x)| q.eval(x)).sum();
    match coupling {
        Coupling::Epsilon(_) => smooth,
        Coupling::Eta(eta) => smooth + eta * g.edges().iter().map(|&(i, j)| (w[i] - w[j]).abs()).sum::<f64>(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarSolution {
    pub w: Vec<f64>,
    pub objective: f64,
    /// Per edge `(i, j)`, `i < j`: multipliers of `wᵢ − wⱼ ≤ ε` and
    /// `wⱼ − wᵢ ≤ ε`. Empty for TV problems.
    pub multipliers: Vec<(f64, f64)>,
}

/// Gaussian elimination with partial pivoting on a row-major `n×n` system.
fn solve_dense(mut a: Vec<f64>, mut b: Vec<f64>, n: usize) -> Option<Vec<f64>> {
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    for col in 0..n {
        let pivot = (col..n).max_by(|&x, &y| a[x * n + col].abs().total_cmp(&a[y * n + col].abs()))?;
        if a[pivot * n + col].abs() <= 1e-13 * scale {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                a.swap(pivot * n + k, col * n + k);
            }
            b.swap(pivot, col);
        }
        for row in col + 1..n {
            let f = a[row * n + col] / a[col * n + col];
            if f != 0.0 {
                for k in col..n {
                    a[row * n + k] -= f * a[col * n + k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row * n + k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row * n + row];
    }
    Some(x)
}

/// Exact minimizer of the ε-constrained scalar problem by enumerating which
/// constraints are active.
pub fn scalar_ineq_oracle(inst: &ScalarInstance) -> Result<ScalarSolution> {
    let quads = inst.validate()?;
    let eps = match inst.coupling {
        Coupling::Epsilon(e) if e >= 0.0 => e,
        Coupling::Epsilon(e) => return Err(Error::param("epsilon", format!("must be >= 0, got {e}"))),
        Coupling::Eta(_) => return Err(Error::param("coupling", "inequality oracle needs an epsilon")),
    };
    let edges = inst.graph.edges();
    if edges.len() > MAX_ENUM_EDGES {
        return Err(Error::TooLarge(format!(
            "{} edges, enumeration supports at most {MAX_ENUM_EDGES}",
            edges.len()
        )));
    }
    let n = quads.len();
    if eps == f64::INFINITY {
        let w: Vec<f64> = quads.iter().map(|q| q.r / q.g).collect();
        return Ok(ScalarSolution {
            objective: objective(&quads, &inst.graph, inst.coupling, &w),
            w,
            multipliers: vec![(0.0, 0.0); edges.len()],
        });
    }

    let mut best: Option<ScalarSolution> = None;
    let patterns = 3usize.pow(edges.len() as u32);
    for pattern in 0..patterns {
        // active rows: (edge, row, +node, -node)
        let mut active = Vec::new();
        let mut code = pattern;
        for (e, &(i, j)) in edges.iter().enumerate() {
            match code % 3 {
                1 => active.push((e, 0usize, i, j)),
                2 => active.push((e, 1usize, j, i)),
                _ => {}
            }
            code /= 3;
        }
        let size = n + active.len();
        let mut a = vec![0.0; size * size];
        let mut b = vec![0.0; size];
        for (i, q) in quads.iter().enumerate() {
            a[i * size + i] = q.g;
            b[i] = q.r;
        }
        for (k, &(_, _, p, m)) in active.iter().enumerate() {
            let row = n + k;
            // stationarity column and constraint row
            a[p * size + row] = 1.0;
            a[m * size + row] = -1.0;
            a[row * size + p] = 1.0;
            a[row * size + m] = -1.0;
            b[row] = eps;
        }
        let Some(x) = solve_dense(a, b, size) else { continue };
        let w = &x[..n];
        let feasible = edges.iter().all(|&(i, j)| (w[i] - w[j]).abs() <= eps + KKT_TOL);
        let dual_ok = x[n..].iter().all(|&mu| mu >= -KKT_TOL);
        if !(feasible && dual_ok) {
            continue;
        }
        let obj = objective(&quads, &inst.graph, inst.coupling, w);
        if best.as_ref().is_none_or(|s| obj < s.objective) {
            let mut multipliers = vec![(0.0, 0.0); edges.len()];
            for (k, &(e, row, _, _)) in active.iter().enumerate() {
                let mu = x[n + k].max(0.0);
                if row == 0 {
                    multipliers[e].0 = mu;
                } else {
                    multipliers[e].1 = mu;
                }
            }
            best = Some(ScalarSolution {
                w: w.to_vec(),
                objective: obj,
                multipliers,
            });
        }
    }
    best.ok_or_else(|| Error::NoConvergence("no active set satisfied the KKT conditions".into()))
}

/// Largest violation among stationarity, primal feasibility, dual sign and
/// complementary slackness for an inequality-constrained scalar solution.
pub fn kkt_residual(inst: &ScalarInstance, sol: &ScalarSolution) -> Result<f64> {
    let quads = inst.validate()?;
    let Coupling::Epsilon(eps) = inst.coupling else {
        return Err(Error::param("coupling", "KKT check needs an epsilon"));
    };
    let w = &sol.w;
    let mut grad: Vec<f64> = quads.iter().zip(w).map(|(q, &x)| q.g * x - q.r).collect();
    let mut worst = 0.0f64;
    for (&(i, j), &(mu_p, mu_m)) in inst.graph.edges().iter().zip(&sol.multipliers) {
        grad[i] += mu_p - mu_m;
        grad[j] += mu_m - mu_p;
        let slack_p = eps - (w[i] - w[j]);
        let slack_m = eps - (w[j] - w[i]);
        worst = worst.max((-slack_p).max(0.0)).max((-slack_m).max(0.0));
        worst = worst.max((-mu_p).max(0.0)).max((-mu_m).max(0.0));
        if eps.is_finite() {
            worst = worst.max((mu_p * slack_p).abs()).max((mu_m * slack_m).abs());
        }
    }
    Ok(grad.iter().fold(worst, |m, v| m.max(v.abs())))
}

/// Minimizes `½g x² − r x + η Σ_k |x − anchors[k]|` exactly.
fn min_piecewise(g: f64, r: f64, eta: f64, anchors: &mut [f64]) -> f64 {
    anchors.sort_by(f64::total_cmp);
    let f = |x: f64| 0.5 * g * x * x - r * x + eta * anchors.iter().map(|c| (x - c).abs()).sum::<f64>();
    let mut candidates: Vec<f64> = anchors.to_vec();
    let k = anchors.len();
    for below in 0..=k {
        // region where exactly `below` anchors lie strictly below x
        let x = (r - eta * (below as f64 - (k - below) as f64)) / g;
        let lo_ok = below == 0 || x > anchors[below - 1];
        let hi_ok = below == k || x < anchors[below];
        if lo_ok && hi_ok {
            candidates.push(x);
        }
    }
    candidates
        .into_iter()
        .min_by(|a, b| f(*a).total_cmp(&f(*b)))
        .unwrap_or(r / g)
}

fn golden<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Nested minimization over `[lo, hi]^N`: a grid scan followed by
/// golden-section refinement on the outermost coordinate, plain
/// golden-section on the inner ones. Partial minima of a convex function are
/// convex, so each level is unimodal.
fn nested_search(f: &dyn Fn(&[f64]) -> f64, n: usize, lo: f64, hi: f64, grid_step: f64) -> (Vec<f64>, f64) {
    fn inner(f: &dyn Fn(&[f64]) -> f64, prefix: &mut Vec<f64>, n: usize, lo: f64, hi: f64) -> f64 {
        if prefix.len() == n {
            return f(prefix);
        }
        let (x, v) = golden(
            |x| {
                prefix.push(x);
                let v = inner(f, prefix, n, lo, hi);
                prefix.pop();
                v
            },
            lo,
            hi,
            1e-11 * (1.0 + hi.abs() + lo.abs()),
        );
        let _ = x;
        v
    }
    let mut prefix = Vec::with_capacity(n);
    let mut eval_outer = |x: f64| {
        prefix.clear();
        prefix.push(x);
        inner(f, &mut prefix, n, lo, hi)
    };
    let steps = (libm::ceil((hi - lo) / grid_step) as usize).max(1);
    let mut best = (lo, f64::INFINITY);
    for s in 0..=steps {
        let x = (lo + s as f64 * grid_step).min(hi);
        let v = eval_outer(x);
        if v < best.1 {
            best = (x, v);
        }
    }
    let (x0, _) = golden(
        &mut eval_outer,
        (best.0 - grid_step).max(lo),
        (best.0 + grid_step).min(hi),
        1e-12 * (1.0 + hi.abs() + lo.abs()),
    );
    // recover the inner arguments
    let mut point = vec![x0];
    while point.len() < n {
        let (x, _) = golden(
            |x| {
                let mut p = point.clone();
                p.push(x);
                inner(f, &mut p, n, lo, hi)
            },
            lo,
            hi,
            1e-11 * (1.0 + hi.abs() + lo.abs()),
        );
        point.push(x);
    }
    let v = f(&point);
    (point, v)
}

/// Minimizer of the scalar TV problem.
///
/// Primary route: exact one-dimensional minimization over single nodes and
/// over every subset of nodes moved together, repeated to a fixed point.
/// Cross-check: nested grid and golden-section search. The better of the two
/// is returned.
pub fn scalar_tv_oracle(inst: &ScalarInstance) -> Result<ScalarSolution> {
    let quads = inst.validate()?;
    let eta = match inst.coupling {
        Coupling::Eta(e) if e >= 0.0 && e.is_finite() => e,
        Coupling::Eta(e) => return Err(Error::param("eta", format!("must be finite and >= 0, got {e}"))),
        Coupling::Epsilon(_) => return Err(Error::param("coupling", "TV oracle needs an eta")),
    };
    let n = quads.len();
    if n > MAX_TV_NODES {
        return Err(Error::TooLarge(format!("{n} nodes, TV oracle supports at most {MAX_TV_NODES}")));
    }
    let g = &inst.graph;
    let eval = |w: &[f64]| objective(&quads, g, inst.coupling, w);

    let mut w: Vec<f64> = quads.iter().map(|q| q.r / q.g).collect();
    let subsets: Vec<Vec<usize>> = (1u32..(1 << n))
        .map(|mask| (0..n).filter(|i| mask & (1 << i) != 0).collect())
        .collect();
    let mut current = eval(&w);
    for _ in 0..10_000 {
        let before = current;
        for set in &subsets {
            let (mut gs, mut rs) = (0.0, 0.0);
            for &i in set {
                gs += quads[i].g;
                rs += quads[i].r;
            }
            let mut anchors: Vec<f64> = g
                .edges()
                .iter()
                .filter_map(|&(a, b)| match (set.contains(&a), set.contains(&b)) {
                    (true, false) => Some(w[b]),
                    (false, true) => Some(w[a]),
                    _ => None,
                })
                .collect();
            let x = min_piecewise(gs, rs, eta, &mut anchors);
            let mut trial = w.clone();
            set.iter().for_each(|&i| trial[i] = x);
            let v = eval(&trial);
            if v < current {
                w = trial;
                current = v;
            }
        }
        if !(before - current > 1e-15 * (1.0 + current.abs())) {
            break;
        }
    }

    let lo = w.iter().chain(quads.iter().map(|q| q.r / q.g).collect::<Vec<_>>().iter()).fold(f64::INFINITY, |m, &v| m.min(v));
    let hi = quads.iter().map(|q| q.r / q.g).fold(f64::NEG_INFINITY, f64::max).max(w.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v)));
    let pad = 1e-6 * (1.0 + hi.abs() + lo.abs());
    let step = if n <= 2 { 1e-4 } else { ((hi - lo) / 2000.0).max(1e-4) };
    let (w_grid, v_grid) = nested_search(&eval, n, lo - pad, hi + pad, step);
    // Golden-section arguments are only accurate to about sqrt(machine eps),
    // so the search result wins only when it is clearly better.
    let (w, objective) = if v_grid < current - 1e-12 * (1.0 + current.abs()) {
        (w_grid, v_grid)
    } else {
        (w, current)
    };
    Ok(ScalarSolution {
        w,
        objective,
        multipliers: Vec::new(),
    })
}

/// Penalty continuation schedule: `μ = mu0 · factor^k` for `k < stages`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltySchedule {
    pub mu0: f64,
    pub factor: f64,
    pub stages: usize,
    pub max_newton: usize,
}

impl Default for PenaltySchedule {
    fn default() -> Self {
        PenaltySchedule {
            mu0: 10.0,
            factor: 10.0,
            stages: 6,
            max_newton: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyResult {
    pub map: AlignmentMap,
    /// Ridge objective (without the penalty) at `map`.
    pub objective: f64,
    pub max_violation: f64,
}

/// Approximate solution of the ε-constrained matrix problem by quadratic
/// penalty continuation:
/// `Σᵢ ridgeᵢ(Wᵢ) + μ Σ_edges Σ_entries max(0, |Wᵢ − Wⱼ| − ε)²`.
///
/// The problem separates over the columns of `W`; each column is solved with
/// a damped semismooth Newton method, warm-started across penalty stages.
pub fn penalty_oracle(
    g: &LanguageGraph,
    data: &[NodeData],
    lambda: f64,
    epsilon: f64,
    schedule: PenaltySchedule,
) -> Result<PenaltyResult> {
    if data.len() != g.len() || data.is_empty() {
        return Err(Error::shape(format!("{} nodes", g.len()), format!("{} data sets", data.len())));
    }
    if !(epsilon >= 0.0) || !(lambda >= 0.0) {
        return Err(Error::param("epsilon", "epsilon and lambda must be >= 0"));
    }
    let (m, n) = (data[0].victim().cols(), data[0].attack().cols());
    if data.iter().any(|d| d.victim().cols() != m || d.attack().cols() != n) {
        return Err(Error::shape(format!("{m}x{n} maps"), "mixed dimensions"));
    }
    let nodes = data.len();
    let dim = nodes * m;

    // Own normal equations.
    let mut gram = vec![0.0; nodes * m * m];
    let mut cross = vec![0.0; nodes * m * n];
    for (i, d) in data.iter().enumerate() {
        let (ev, ea) = (d.victim(), d.attack());
        for s in 0..ev.rows() {
            for p in 0..m {
                for q in 0..m {
                    gram[(i * m + p) * m + q] += ev[(s, p)] * ev[(s, q)];
                }
                for c in 0..n {
                    cross[(i * m + p) * n + c] += ev[(s, p)] * ea[(s, c)];
                }
            }
        }
        for p in 0..m {
            gram[(i * m + p) * m + p] += lambda;
        }
    }
    let edges = g.edges();

    let mut solution = vec![0.0; dim * n];
    for c in 0..n {
        let rhs: Vec<f64> = (0..dim).map(|k| cross[k * n + c]).collect();
        let mut x = vec![0.0; dim];
        let value = |x: &[f64], mu: f64| -> f64 {
            let mut v = 0.0;
            for i in 0..nodes {
                for p in 0..m {
                    let mut gx = 0.0;
                    for q in 0..m {
                        gx += gram[(i * m + p) * m + q] * x[i * m + q];
                    }
                    v += 0.5 * x[i * m + p] * gx - rhs[i * m + p] * x[i * m + p];
                }
            }
            if epsilon.is_finite() {
                for &(a, b) in edges {
                    for p in 0..m {
                        let h = ((x[a * m + p] - x[b * m + p]).abs() - epsilon).max(0.0);
                        v += mu * h * h;
                    }
                }
            }
            v
        };
        for stage in 0..schedule.stages.max(1) {
            let mu = schedule.mu0 * libm::pow(schedule.factor, stage as f64);
            for _ in 0..schedule.max_newton {
                let mut grad = vec![0.0; dim];
                let mut hess = vec![0.0; dim * dim];
                for i in 0..nodes {
                    for p in 0..m {
                        let row = i * m + p;
                        let mut gx = 0.0;
                        for q in 0..m {
                            let gpq = gram[(i * m + p) * m + q];
                            gx += gpq * x[i * m + q];
                            hess[row * dim + i * m + q] = gpq;
                        }
                        grad[row] = gx - rhs[row];
                    }
                }
                if epsilon.is_finite() {
                    for &(a, b) in edges {
                        for p in 0..m {
                            let (ia, ib) = (a * m + p, b * m + p);
                            let d = x[ia] - x[ib];
                            if d.abs() > epsilon {
                                let s = 2.0 * mu * (d.abs() - epsilon) * d.signum();
                                grad[ia] += s;
                                grad[ib] -= s;
                                let h = 2.0 * mu;
                                hess[ia * dim + ia] += h;
                                hess[ib * dim + ib] += h;
                                hess[ia * dim + ib] -= h;
                                hess[ib * dim + ia] -= h;
                            }
                        }
                    }
                }
                let gnorm = grad.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let scale = 1.0 + rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                if gnorm <= 1e-12 * scale {
                    break;
                }
                let neg: Vec<f64> = grad.iter().map(|v| -v).collect();
                let dir = solve_dense(hess, neg, dim)
                    .ok_or_else(|| Error::NoConvergence("singular Newton system; use lambda > 0".into()))?;
                let f0 = value(&x, mu);
                let slope: f64 = grad.iter().zip(&dir).map(|(a, b)| a * b).sum();
                let mut t = 1.0;
                let mut accepted = false;
                for _ in 0..60 {
                    let trial: Vec<f64> = x.iter().zip(&dir).map(|(a, b)| a + t * b).collect();
                    if value(&trial, mu) <= f0 + 1e-4 * t * slope {
                        x = trial;
                        accepted = true;
                        break;
                    }
                    t *= 0.5;
                }
                if !accepted {
                    break;
                }
            }
        }
        for (k, v) in x.into_iter().enumerate() {
            solution[k * n + c] = v;
        }
    }

    let maps: Vec<Matrix> = (0..nodes)
        .map(|i| Matrix::from_vec(m, n, solution[i * m * n..(i + 1) * m * n].to_vec()))
        .collect::<Result<_>>()?;
    let mut objective = 0.0;
    for (d, w) in data.iter().zip(&maps) {
        let (ev, ea) = (d.victim(), d.attack());
        for s in 0..ev.rows() {
            for c in 0..n {
                let mut pred = 0.0;
                for p in 0..m {
                    pred += ev[(s, p)] * w[(p, c)];
                }
                let r = ea[(s, c)] - pred;
                objective += 0.5 * r * r;
            }
        }
        objective += 0.5 * lambda * w.as_slice().iter().map(|v| v * v).sum::<f64>();
    }
    let mut max_violation = 0.0f64;
    for &(a, b) in edges {
        for (x, y) in maps[a].as_slice().iter().zip(maps[b].as_slice()) {
            max_violation = max_violation.max((x - y).abs());
        }
    }
    Ok(PenaltyResult {
        map: AlignmentMap::new(maps)?,
        objective,
        max_violation,
    })
}
