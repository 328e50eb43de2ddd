//! Per-node closed-form ridge alignment and its optimality quantities.
//!
//! The local objective at node `i` is
//! `½‖E_A − E_V W‖_F² + (λ/2)‖W‖_F²`, whose gradient is
//! `−E_Vᵀ(E_A − E_V W) + λW`.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::{Cholesky, Matrix};

/// Paired samples for one language: victim embeddings (`b×m`) and attack
/// embeddings (`b×n`), one sample per row.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NodeData {
    pub node: usize,
    victim: Matrix,
    attack: Matrix,
}

impl NodeData {
    pub fn new(node: usize, victim: Matrix, attack: Matrix) -> Result<Self> {
        if victim.rows() != attack.rows() {
            return Err(Error::shape(
                format!("{} attack rows", victim.rows()),
                format!("{}", attack.rows()),
            ));
        }
        if victim.rows() == 0 {
            return Err(Error::param("samples", "need at least one sample"));
        }
        if !victim.is_finite() {
            return Err(Error::NonFiniteInput("victim embeddings"));
        }
        if !attack.is_finite() {
            return Err(Error::NonFiniteInput("attack embeddings"));
        }
        Ok(NodeData { node, victim, attack })
    }

    pub fn victim(&self) -> &Matrix {
        &self.victim
    }

    pub fn attack(&self) -> &Matrix {
        &self.attack
    }

    pub fn samples(&self) -> usize {
        self.victim.rows()
    }

    /// `(m, n)`: victim and attack dimensions.
    pub fn dims(&self) -> (usize, usize) {
        (self.victim.cols(), self.attack.cols())
    }

    /// Both embedding sets with every row scaled to unit ℓ2 norm.
    pub fn row_normalized(&self) -> NodeData {
        NodeData {
            node: self.node,
            victim: self.victim.normalize_rows(),
            attack: self.attack.normalize_rows(),
        }
    }

    pub fn with_victim(&self, victim: Matrix) -> Result<NodeData> {
        NodeData::new(self.node, victim, self.attack.clone())
    }
}

/// One `m×n` map per node, all of the same shape.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AlignmentMap {
    maps: Vec<Matrix>,
}

impl AlignmentMap {
    pub fn new(maps: Vec<Matrix>) -> Result<Self> {
        if let Some(first) = maps.first() {
            for (i, w) in maps.iter().enumerate() {
                if w.shape() != first.shape() {
                    return Err(Error::shape(
                        format!("{}x{}", first.rows(), first.cols()),
                        format!("{}x{} at node {i}", w.rows(), w.cols()),
                    ));
                }
                if !w.is_finite() {
                    return Err(Error::NonFiniteInput("alignment map"));
                }
            }
        }
        Ok(AlignmentMap { maps })
    }

    pub fn zeros(nodes: usize, m: usize, n: usize) -> Self {
        AlignmentMap {
            maps: (0..nodes).map(|_| Matrix::zeros(m, n)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    pub fn get(&self, i: usize) -> &Matrix {
        &self.maps[i]
    }

    pub fn iter(&self) -> core::slice::Iter<'_, Matrix> {
        self.maps.iter()
    }

    pub fn as_slice(&self) -> &[Matrix] {
        &self.maps
    }

    pub fn into_inner(self) -> Vec<Matrix> {
        self.maps
    }

    /// `(m, n)` of the node maps, `None` when empty.
    pub fn shape(&self) -> Option<(usize, usize)> {
        self.maps.first().map(Matrix::shape)
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::param("lambda", format!("must be finite and >= 0, got {lambda}")));
    }
    Ok(())
}

/// Solves `(E_VᵀE_V + λI) W = E_VᵀE_A` by Cholesky factorization.
pub fn ridge_align(d: &NodeData, lambda: f64) -> Result<Matrix> {
    check_lambda(lambda)?;
    let mut system = d.victim.gram();
    system.add_diagonal(lambda);
    let rhs = d.victim.t_matmul(&d.attack)?;
    Cholesky::new(&system).ok_or(Error::RankDeficient)?.solve(&rhs)
}

/// `E_V W`.
pub fn apply_alignment(victim: &Matrix, w: &Matrix) -> Result<Matrix> {
    victim.matmul(w)
}

fn check_map(d: &NodeData, w: &Matrix) -> Result<()> {
    let (m, n) = d.dims();
    if w.shape() != (m, n) {
        return Err(Error::shape(format!("{m}x{n} map"), format!("{}x{}", w.rows(), w.cols())));
    }
    Ok(())
}

/// `−E_Vᵀ(E_A − E_V W) + λW`.
pub fn alignment_gradient(d: &NodeData, w: &Matrix, lambda: f64) -> Result<Matrix> {
    check_map(d, w)?;
    let residual = d.attack.sub(&d.victim.matmul(w)?)?;
    let mut g = d.victim.t_matmul(&residual)?.scale(-1.0);
    g.axpy(lambda, w)?;
    Ok(g)
}

/// `½‖E_A − E_V W‖_F² + (λ/2)‖W‖_F²`.
pub fn local_objective(d: &NodeData, w: &Matrix, lambda: f64) -> Result<f64> {
    check_map(d, w)?;
    let residual = d.attack.sub(&d.victim.matmul(w)?)?;
    Ok(0.5 * residual.frobenius_sq() + 0.5 * lambda * w.frobenius_sq())
}

/// Sum of [`local_objective`] over nodes.
pub fn ridge_objective(data: &[NodeData], map: &AlignmentMap, lambda: f64) -> Result<f64> {
    if data.len() != map.len() {
        return Err(Error::shape(format!("{} maps", data.len()), format!("{}", map.len())));
    }
    data.iter()
        .zip(map.iter())
        .map(|(d, w)| local_objective(d, w, lambda))
        .sum()
}

/// Tolerance used by the first-order optimality certificate:
/// `1e-8 · (1 + ‖E_VᵀE_A‖_F)`.
pub fn optimality_tolerance(d: &NodeData) -> f64 {
    let cross = d.victim.t_matmul(&d.attack).map(|m| m.frobenius()).unwrap_or(0.0);
    1e-8 * (1.0 + cross)
}

/// Per-node ridge solutions.
pub fn independent_ridge(data: &[NodeData], lambda: f64) -> Result<AlignmentMap> {
    let maps = data.iter().map(|d| ridge_align(d, lambda)).collect::<Result<Vec<_>>>()?;
    AlignmentMap::new(maps)
}

/// Single map fitted on all nodes' stacked samples with ridge weight `Nλ`,
/// i.e. `(Σ E_VᵢᵀE_Vᵢ + NλI)⁻¹ Σ E_VᵢᵀE_Aᵢ`.
pub fn pooled_ridge(data: &[NodeData], lambda: f64) -> Result<Matrix> {
    check_lambda(lambda)?;
    let first = data.first().ok_or_else(|| Error::param("data", "no nodes"))?;
    let (m, n) = first.dims();
    let mut system = Matrix::zeros(m, m);
    let mut rhs = Matrix::zeros(m, n);
    for d in data {
        if d.dims() != (m, n) {
            return Err(Error::shape(format!("{m}x{n}"), format!("{:?} at node {}", d.dims(), d.node)));
        }
        system.axpy(1.0, &d.victim.gram())?;
        rhs.axpy(1.0, &d.victim.t_matmul(&d.attack)?)?;
    }
    system.add_diagonal(data.len() as f64 * lambda);
    Cholesky::new(&system).ok_or(Error::RankDeficient)?.solve(&rhs)
}

/// Checks that every node has the same `(m, n)`, returning it.
pub(crate) fn common_dims(data: &[NodeData]) -> Result<(usize, usize)> {
    let first = data.first().ok_or_else(|| Error::param("data", "no nodes"))?;
    let dims = first.dims();
    for (i, d) in data.iter().enumerate() {
        if d.dims() != dims {
            return Err(Error::shape(
                format!("{}x{}", dims.0, dims.1),
                format!("{}x{} at node {i}", d.dims().0, d.dims().1),
            ));
        }
    }
    Ok(dims)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::CounterRng;

    fn random(rng: &CounterRng, stream: u64, r: usize, c: usize) -> Matrix {
        Matrix::from_fn(r, c, |i, j| rng.normal(stream, (i * c + j) as u64))
    }

    #[test]
    fn identity_design_returns_targets() {
        let ea = Matrix::from_rows(&[[1.0, -2.0], [0.5, 3.0], [4.0, 0.0]]).unwrap();
        let d = NodeData::new(0, Matrix::identity(3), ea.clone()).unwrap();
        let w = ridge_align(&d, 0.0).unwrap();
        assert!(w.max_abs_diff(&ea).unwrap() < 1e-14);
    }

    #[test]
    fn self_alignment_is_identity() {
        let rng = CounterRng::new(3);
        let ev = random(&rng, 0, 6, 4);
        let d = NodeData::new(0, ev.clone(), ev).unwrap();
        let w = ridge_align(&d, 0.0).unwrap();
        assert!(w.max_abs_diff(&Matrix::identity(4)).unwrap() < 1e-12);
    }

    #[test]
    fn rank_deficient_without_ridge() {
        let rng = CounterRng::new(5);
        let d = NodeData::new(0, random(&rng, 0, 2, 5), random(&rng, 1, 2, 3)).unwrap();
        assert_eq!(ridge_align(&d, 0.0), Err(Error::RankDeficient));
        assert!(ridge_align(&d, 0.01).is_ok());
        assert!(ridge_align(&d, -1.0).is_err());
        assert!(ridge_align(&d, f64::NAN).is_err());
    }

    #[test]
    fn node_data_validation() {
        assert!(NodeData::new(0, Matrix::zeros(2, 3), Matrix::zeros(3, 3)).is_err());
        assert!(NodeData::new(0, Matrix::zeros(0, 3), Matrix::zeros(0, 3)).is_err());
        let bad = Matrix::filled(1, 1, f64::INFINITY);
        assert!(NodeData::new(0, bad, Matrix::zeros(1, 1)).is_err());
    }

    #[test]
    fn apply_examples() {
        let ev = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        let w = Matrix::identity(2).scale(2.0);
        assert_eq!(apply_alignment(&ev, &w).unwrap().as_slice(), &[2.0, 4.0, 6.0, 8.0]);
        assert_eq!(apply_alignment(&ev, &Matrix::identity(2)).unwrap(), ev);
        let zero = apply_alignment(&Matrix::zeros(3, 2), &w).unwrap();
        assert_eq!(zero, Matrix::zeros(3, 2));
        assert!(apply_alignment(&ev, &Matrix::zeros(3, 1)).is_err());
    }

    #[test]
    fn gradient_with_zero_targets() {
        let rng = CounterRng::new(9);
        let ev = random(&rng, 0, 4, 3);
        let d = NodeData::new(0, ev.clone(), Matrix::zeros(4, 2)).unwrap();
        let w = random(&rng, 1, 3, 2);
        let g = alignment_gradient(&d, &w, 0.0).unwrap();
        let expected = ev.gram().matmul(&w).unwrap();
        assert!(g.max_abs_diff(&expected).unwrap() < 1e-12);
        assert!(alignment_gradient(&d, &Matrix::zeros(2, 2), 0.0).is_err());
    }

    #[test]
    fn pooled_matches_stacked_fit() {
        let rng = CounterRng::new(1);
        let a = NodeData::new(0, random(&rng, 0, 3, 2), random(&rng, 1, 3, 2)).unwrap();
        let b = NodeData::new(1, random(&rng, 2, 4, 2), random(&rng, 3, 4, 2)).unwrap();
        let mut ev = a.victim().as_slice().to_vec();
        ev.extend_from_slice(b.victim().as_slice());
        let mut ea = a.attack().as_slice().to_vec();
        ea.extend_from_slice(b.attack().as_slice());
        let stacked = NodeData::new(0, Matrix::from_vec(7, 2, ev).unwrap(), Matrix::from_vec(7, 2, ea).unwrap()).unwrap();
        let pooled = pooled_ridge(&[a, b], 0.5).unwrap();
        let direct = ridge_align(&stacked, 1.0).unwrap();
        assert!(pooled.max_abs_diff(&direct).unwrap() < 1e-12);
    }
}
