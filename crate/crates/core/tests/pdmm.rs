mod common;

use common::Threads;
use lago_core::align::{independent_ridge, pooled_ridge, ridge_objective};
use lago_core::graph::LanguageGraph;
use lago_core::oracle::{penalty_oracle, scalar_ineq_oracle, Coupling, PenaltySchedule, ScalarInstance};
use lago_core::pdmm::{max_violation, pdmm_solve, pdmm_solve_with, PdmmConfig};
use lago_core::synth::gaussian_nodes;
use proptest::prelude::*;

fn cfg(epsilon: f64, max_iters: usize) -> PdmmConfig {
    PdmmConfig {
        c: 0.4,
        lambda: 0.01,
        epsilon,
        max_iters,
        ..Default::default()
    }
}

#[test]
fn loose_bound_reduces_to_independent_ridge() {
    let data = gaussian_nodes(3, 3, 5, 8, 6).unwrap();
    let g = LanguageGraph::path(3);
    let out = pdmm_solve(&g, &data, &cfg(1e6, 2000)).unwrap();
    let ridge = independent_ridge(&data, 0.01).unwrap();
    for (w, r) in out.map.iter().zip(ridge.iter()) {
        assert!(w.rel_distance(r).unwrap() <= 1e-6);
    }
}

#[test]
fn zero_bound_reaches_pooled_consensus() {
    let data = gaussian_nodes(3, 3, 5, 8, 6).unwrap();
    let g = LanguageGraph::path(3);
    let out = pdmm_solve(&g, &data, &cfg(0.0, 5000)).unwrap();
    let pooled = pooled_ridge(&data, 0.01).unwrap();
    for w in out.map.iter() {
        assert!(w.rel_distance(&pooled).unwrap() <= 1e-4);
    }
}

#[test]
fn scalar_pair_matches_active_set_oracle() {
    let inst = ScalarInstance::random(11, LanguageGraph::path(2), 3, 0.01, Coupling::Epsilon(0.05));
    let free = inst.decoupled().unwrap();
    assert!((free[0] - free[1]).abs() > 0.05, "instance should make the bound active");
    let oracle = scalar_ineq_oracle(&inst).unwrap();
    let out = pdmm_solve(&inst.graph, &inst.node_data().unwrap(), &cfg(0.05, 2000)).unwrap();
    let w: Vec<f64> = out.map.iter().map(|m| m[(0, 0)]).collect();
    assert!((inst.objective(&w).unwrap() - oracle.objective).abs() <= 1e-6);
    for (a, b) in w.iter().zip(&oracle.w) {
        assert!((a - b).abs() <= 1e-4);
    }
}

#[test]
fn objective_matches_oracle_up_to_four_edges() {
    let graphs = [
        LanguageGraph::path(4),
        LanguageGraph::new((0..4).map(|i| i.to_string()).collect(), [(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap(),
        LanguageGraph::new((0..4).map(|i| i.to_string()).collect(), [(0, 1), (0, 2), (0, 3)]).unwrap(),
    ];
    for (k, g) in graphs.into_iter().enumerate() {
        for eps in [0.0, 0.02, 0.3] {
            let inst = ScalarInstance::random(500 + k as u64, g.clone(), 4, 0.01, Coupling::Epsilon(eps));
            let oracle = scalar_ineq_oracle(&inst).unwrap();
            let out = pdmm_solve(&g, &inst.node_data().unwrap(), &cfg(eps, 3000)).unwrap();
            let w: Vec<f64> = out.map.iter().map(|m| m[(0, 0)]).collect();
            assert!((inst.objective(&w).unwrap() - oracle.objective).abs() <= 1e-6, "graph {k} eps {eps}");
            assert!(max_violation(&g, out.map.as_slice()).unwrap() <= eps + 1e-6);
        }
    }
}

#[test]
fn feasible_and_close_to_penalty_oracle() {
    let data = gaussian_nodes(21, 3, 5, 8, 6).unwrap();
    let g = LanguageGraph::path(3);
    let out = pdmm_solve(&g, &data, &cfg(0.01, 3000)).unwrap();
    assert!(max_violation(&g, out.map.as_slice()).unwrap() <= 0.01 + 1e-6);
    let pdmm_obj = ridge_objective(&data, &out.map, 0.01).unwrap();
    let pen = penalty_oracle(&g, &data, 0.01, 0.01, PenaltySchedule::default()).unwrap();
    assert!(pen.max_violation <= 0.01 + 1e-4);
    assert!((pen.objective - pdmm_obj).abs() <= 1e-3 * pdmm_obj.abs());
}

#[test]
fn parallel_rounds_are_bit_identical() {
    let data = gaussian_nodes(8, 5, 6, 4, 3).unwrap();
    let g = LanguageGraph::complete(5);
    let c = PdmmConfig {
        record_trace: true,
        ..cfg(0.05, 300)
    };
    let seq = pdmm_solve(&g, &data, &c).unwrap();
    for threads in [2, 3, 8] {
        let par = pdmm_solve_with(&g, &data, &c, &Threads(threads)).unwrap();
        assert_eq!(seq, par);
    }
}

#[test]
fn trace_has_one_row_per_round() {
    let data = gaussian_nodes(9, 3, 5, 3, 2).unwrap();
    let c = PdmmConfig {
        record_trace: true,
        ..cfg(0.1, 40)
    };
    let out = pdmm_solve(&LanguageGraph::path(3), &data, &c).unwrap();
    let trace = out.trace.unwrap();
    assert_eq!(trace.len(), 40);
    assert_eq!(trace.last().unwrap().iter, 40);
    assert!(trace.iter().all(|r| r.objective.is_finite() && r.max_step >= 0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn inactive_bounds_recover_ridge(seed in 0u64..1000, m in 1usize..9, n in 1usize..9, b in 2usize..9) {
        let data = gaussian_nodes(seed, 3, b, m, n).unwrap();
        let ridge = independent_ridge(&data, 0.01).unwrap();
        let eps = 2.0 * ridge.iter().map(|w| w.max_abs()).fold(0.0, f64::max);
        let out = pdmm_solve(&LanguageGraph::complete(3), &data, &cfg(eps, 2000)).unwrap();
        for (w, r) in out.map.iter().zip(ridge.iter()) {
            prop_assert!(w.rel_distance(r).unwrap() <= 1e-6);
        }
    }
}
