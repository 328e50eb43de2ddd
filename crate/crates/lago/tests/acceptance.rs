//! End-to-end acceptance checks. Prints one line per criterion and exits
//! non-zero if any criterion fails.

use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use lago::config::{ExperimentConfig, GraphConfig, NoiseConfig, Topology};
use lago::{run_experiment, Method};
use lago_core::align::{alignment_gradient, independent_ridge, optimality_tolerance, pooled_ridge, ridge_align, NodeData};
use lago_core::graph::build_graph;
use lago_core::metrics::{lcs_len, rouge_l};
use lago_core::noise::NoiseMechanism;
use lago_core::oracle::{scalar_ineq_oracle, scalar_tv_oracle, Coupling, ScalarInstance};
use lago_core::pdmm::{max_violation, pdmm_solve, PdmmConfig};
use lago_core::rng::CounterRng;
use lago_core::synth::{conditioned_matrix, gaussian_nodes};
use lago_core::tv::{tv_solve, TvConfig};
use lago_core::{Error, LanguageGraph, Matrix};

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e2s<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

struct Suite {
    failures: usize,
    /// Largest PDMM bound violation minus its bound, from criteria 3 to 5.
    feasibility: Vec<(String, f64, f64)>,
    clean: Vec<(Method, f64)>,
}

impl Suite {
    fn run(&mut self, id: u32, name: &str, budget: Duration, f: impl FnOnce(&mut Suite) -> Check) {
        let start = Instant::now();
        let result = f(self);
        let took = start.elapsed();
        let result = result.and_then(|detail| {
            if took <= budget {
                Ok(detail)
            } else {
                Err(format!("{detail}; took {took:.2?}, budget {budget:?}"))
            }
        });
        match result {
            Ok(detail) => println!("criterion {id:>2} PASS  {name} [{took:.2?}] {detail}"),
            Err(detail) => {
                self.failures += 1;
                println!("criterion {id:>2} FAIL  {name} [{took:.2?}] {detail}");
            }
        }
    }
}

fn c1_graph() -> Check {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/eng_fra_ita.csv");
    let d = lago::io::load_distance_matrix(&path).map_err(e2s)?;
    let expected: [(f64, &[(usize, usize)]); 4] = [
        (0.45, &[]),
        (0.47, &[(0, 1)]),
        (0.52, &[(0, 1), (0, 2)]),
        (0.56, &[(0, 1), (0, 2), (1, 2)]),
    ];
    let start = Instant::now();
    let graphs: Vec<LanguageGraph> = expected.iter().map(|(r, _)| build_graph(&d, *r)).collect::<Result<_, _>>().map_err(e2s)?;
    let took = start.elapsed();
    for ((r, edges), g) in expected.iter().zip(&graphs) {
        ensure(g.edges() == *edges, || format!("r = {r}: got {:?}, want {edges:?}", g.edges()))?;
    }
    ensure(took < Duration::from_millis(1), || format!("graph construction took {took:?}"))?;
    Ok(format!("edge counts 0/1/2/3, construction {took:.2?}"))
}

fn c2_ridge() -> Check {
    let rng = CounterRng::new(0xC2);
    let lambdas = [0.0, 0.01, 1.0];
    let (mut checked, mut skipped, mut draw, mut worst) = (0, 0, 0u64, 0.0f64);
    while checked < 100 {
        let pick = |k: u64, lo: u64, hi: u64| lo + rng.bits(1, draw * 8 + k) % (hi - lo + 1);
        let (b, m, n) = (pick(0, 3, 20) as usize, pick(1, 1, 16) as usize, pick(2, 1, 16) as usize);
        let lambda = lambdas[pick(3, 0, 2) as usize];
        let node = draw as usize;
        let ev = Matrix::from_fn(b, m, |i, j| rng.normal(2 + 2 * draw, (i * m + j) as u64));
        let ea = Matrix::from_fn(b, n, |i, j| rng.normal(3 + 2 * draw, (i * n + j) as u64));
        draw += 1;
        let d = NodeData::new(node, ev, ea).map_err(e2s)?;
        let w = match ridge_align(&d, lambda) {
            Err(Error::RankDeficient) if lambda == 0.0 => {
                skipped += 1;
                continue;
            }
            r => r.map_err(e2s)?,
        };
        let residual = alignment_gradient(&d, &w, lambda).map_err(e2s)?.frobenius();
        let tol = optimality_tolerance(&d);
        ensure(residual <= tol, || format!("draw {draw}: b={b} m={m} n={n} lambda={lambda}: residual {residual:e} > {tol:e}"))?;
        worst = worst.max(residual / tol);
        checked += 1;
    }
    Ok(format!("100 instances ({skipped} rank-deficient draws skipped), worst residual/tolerance {worst:.2e}"))
}

fn pdmm_cfg(epsilon: f64, max_iters: usize) -> PdmmConfig {
    PdmmConfig {
        c: 0.4,
        lambda: 0.01,
        epsilon,
        max_iters,
        ..PdmmConfig::default()
    }
}

fn c3_reduction(s: &mut Suite) -> Check {
    let data = gaussian_nodes(3, 3, 5, 8, 6).map_err(e2s)?;
    let g = LanguageGraph::path(3);
    let out = pdmm_solve(&g, &data, &pdmm_cfg(1e6, 2000)).map_err(e2s)?;
    let ridge = independent_ridge(&data, 0.01).map_err(e2s)?;
    let worst = out
        .map
        .iter()
        .zip(ridge.iter())
        .map(|(w, r)| w.rel_distance(r).unwrap())
        .fold(0.0, f64::max);
    s.feasibility.push(("c3".into(), max_violation(&g, out.map.as_slice()).map_err(e2s)?, 1e6));
    ensure(worst <= 1e-6, || format!("max relative distance {worst:e}"))?;
    Ok(format!("max relative distance to ridge {worst:.2e}"))
}

fn c4_consensus(s: &mut Suite) -> Check {
    let data = gaussian_nodes(3, 3, 5, 8, 6).map_err(e2s)?;
    let g = LanguageGraph::path(3);
    let out = pdmm_solve(&g, &data, &pdmm_cfg(0.0, 5000)).map_err(e2s)?;
    let pooled = pooled_ridge(&data, 0.01).map_err(e2s)?;
    let worst = out.map.iter().map(|w| w.rel_distance(&pooled).unwrap()).fold(0.0, f64::max);
    s.feasibility.push(("c4".into(), max_violation(&g, out.map.as_slice()).map_err(e2s)?, 0.0));
    ensure(worst <= 1e-4, || format!("max relative distance {worst:e}"))?;
    Ok(format!("max relative distance to pooled ridge {worst:.2e}"))
}

fn c5_oracle(s: &mut Suite) -> Check {
    let (mut obj_gap, mut sol_gap, mut active) = (0.0f64, 0.0f64, 0);
    for k in 0..20u64 {
        let g = match k % 4 {
            1 => LanguageGraph::path(3),
            3 => LanguageGraph::complete(3),
            _ => LanguageGraph::path(2),
        };
        let eps = [0.01, 0.05, 0.5][(k % 3) as usize];
        let inst = ScalarInstance::random(100 + k, g.clone(), 3 + (k % 3) as usize, 0.01, Coupling::Epsilon(eps));
        let oracle = scalar_ineq_oracle(&inst).map_err(e2s)?;
        active += usize::from(oracle.multipliers.iter().any(|&(a, b)| a > 0.0 || b > 0.0));
        let out = pdmm_solve(&g, &inst.node_data().map_err(e2s)?, &pdmm_cfg(eps, 2000)).map_err(e2s)?;
        let w: Vec<f64> = out.map.iter().map(|m| m[(0, 0)]).collect();
        let gap = (inst.objective(&w).map_err(e2s)? - oracle.objective).abs();
        let sgap = w.iter().zip(&oracle.w).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        ensure(gap <= 1e-6 && sgap <= 1e-4, || format!("instance {k}: objective gap {gap:e}, solution gap {sgap:e}"))?;
        obj_gap = obj_gap.max(gap);
        sol_gap = sol_gap.max(sgap);
        s.feasibility.push((format!("c5 instance {k}"), max_violation(&g, out.map.as_slice()).map_err(e2s)?, eps));
    }
    Ok(format!("20 instances ({active} with active bounds), objective gap {obj_gap:.1e}, solution gap {sol_gap:.1e}"))
}

fn c6_feasibility(s: &mut Suite) -> Check {
    ensure(!s.feasibility.is_empty(), || "no instances recorded".into())?;
    let mut worst = f64::NEG_INFINITY;
    for (name, v, eps) in &s.feasibility {
        ensure(*v <= eps + 1e-6, || format!("{name}: violation {v:e} exceeds bound {eps}"))?;
        worst = worst.max(v - eps);
    }
    Ok(format!("{} instances, max(violation - bound) {worst:.2e}", s.feasibility.len()))
}

/// Gradient descent on a single node with step `alpha / sqrt(t + 1)`, written
/// with explicit loops.
fn descent_reference(d: &NodeData, lambda: f64, alpha: f64, iters: usize) -> Matrix {
    let (ev, ea) = (d.victim(), d.attack());
    let (b, m, n) = (ev.rows(), ev.cols(), ea.cols());
    let mut w = Matrix::zeros(m, n);
    for t in 0..iters {
        let mut res = Matrix::zeros(b, n);
        for k in 0..b {
            for c in 0..n {
                let mut pred = 0.0;
                for p in 0..m {
                    pred += ev[(k, p)] * w[(p, c)];
                }
                res[(k, c)] = ea[(k, c)] - pred;
            }
        }
        let mut grad = Matrix::zeros(m, n);
        for k in 0..b {
            for p in 0..m {
                for c in 0..n {
                    grad[(p, c)] += ev[(k, p)] * res[(k, c)];
                }
            }
        }
        let step = alpha / ((t + 1) as f64).sqrt();
        for p in 0..m {
            for c in 0..n {
                let g = -grad[(p, c)] + lambda * w[(p, c)];
                w[(p, c)] -= step * g;
            }
        }
    }
    w
}

fn c7_tv_reduction() -> Check {
    let ev = conditioned_matrix(4, 6, 4, 2.5, 3.5).map_err(e2s)?;
    let ea = gaussian_nodes(4, 1, 6, 1, 3).map_err(e2s)?[0].attack().clone();
    let d = NodeData::new(0, ev, ea).map_err(e2s)?;
    let cfg = TvConfig {
        lambda: 0.01,
        eta: 0.0,
        alpha: 0.01,
        max_iters: 10_000,
        ..TvConfig::default()
    };
    let out = tv_solve(&LanguageGraph::empty(1), std::slice::from_ref(&d), &cfg).map_err(e2s)?;
    let w = out.map.get(0);
    let rel = w.rel_distance(&ridge_align(&d, 0.01).map_err(e2s)?).map_err(e2s)?;
    ensure(rel <= 1e-3, || format!("relative distance {rel:e}"))?;
    let reference = descent_reference(&d, 0.01, 0.01, 10_000);
    let identical = w.as_slice().iter().zip(reference.as_slice()).all(|(a, b)| a.to_bits() == b.to_bits());
    ensure(identical, || format!("differs from reference descent by {:e}", w.max_abs_diff(&reference).unwrap()))?;
    Ok(format!("relative distance to ridge {rel:.2e}, bit-identical to reference descent"))
}

fn c8_tv_oracle() -> Check {
    let mut worst = 0.0f64;
    for eta in [0.1, 0.5] {
        for seed in 13..18u64 {
            let inst = ScalarInstance::random(seed, LanguageGraph::path(2), 3, 0.01, Coupling::Eta(eta));
            let oracle = scalar_tv_oracle(&inst).map_err(e2s)?;
            let cfg = TvConfig {
                lambda: 0.01,
                eta,
                alpha: 0.01,
                max_iters: 100_000,
                ..TvConfig::default()
            };
            let out = tv_solve(&inst.graph, &inst.node_data().map_err(e2s)?, &cfg).map_err(e2s)?;
            let w: Vec<f64> = out.map.iter().map(|m| m[(0, 0)]).collect();
            let gap = (inst.objective(&w).map_err(e2s)? - oracle.objective).abs();
            ensure(gap <= 1e-3, || format!("eta {eta} seed {seed}: objective gap {gap:e}"))?;
            worst = worst.max(gap);
        }
    }
    Ok(format!("10 instances, max objective gap {worst:.2e}"))
}

fn transfer_config(method: Method) -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        method,
        seeds: (1..=10).collect(),
        graph: GraphConfig {
            topology: Some(Topology::Complete),
            nodes: Some(4),
            ..GraphConfig::default()
        },
        ..ExperimentConfig::default()
    };
    cfg.solver.lambda = 0.01;
    cfg.solver.epsilon = 0.01;
    cfg.solver.eta = 0.01;
    cfg.solver.max_iters = match method {
        Method::Tv => 10_000,
        _ => 500,
    };
    cfg
}

fn mean_cosine(cfg: &ExperimentConfig) -> Result<f64, String> {
    let exp = run_experiment(cfg, 0).map_err(e2s)?;
    let runs = &exp.report.runs;
    Ok(runs.iter().map(|r| r.eval.mean_cosine).sum::<f64>() / runs.len() as f64)
}

fn c9_transfer(s: &mut Suite) -> Check {
    for method in [Method::Closed, Method::Pdmm, Method::Tv] {
        let c = mean_cosine(&transfer_config(method))?;
        s.clean.push((method, c));
    }
    let base = s.clean[0].1;
    let mut parts = vec![format!("ridge {base:.4}")];
    for &(method, c) in &s.clean[1..] {
        let gain = c - base;
        ensure(c > base && gain >= 0.02, || format!("{method} {c:.4} vs ridge {base:.4} (gain {gain:.4})"))?;
        parts.push(format!("{method} {c:.4} (+{gain:.4})"));
    }
    Ok(format!("mean held-out cosine over 10 seeds: {}", parts.join(", ")))
}

fn c10_rouge() -> Check {
    let t = |s: &'static str| s.split_whitespace().collect::<Vec<_>>();
    let same = rouge_l(&t("a b c"), &t("a b c"));
    ensure((same.precision, same.recall, same.f1) == (1.0, 1.0, 1.0), || format!("identical: {same:?}"))?;
    let disjoint = rouge_l(&t("a b"), &t("c d e"));
    ensure((disjoint.precision, disjoint.recall, disjoint.f1) == (0.0, 0.0, 0.0), || format!("disjoint: {disjoint:?}"))?;
    let cat = rouge_l(&t("the cat sat"), &t("the dog sat"));
    let third = 2.0 / 3.0;
    ensure(
        lcs_len(&t("the cat sat"), &t("the dog sat")) == 2
            && [cat.precision, cat.recall, cat.f1].iter().all(|v| (v - third).abs() < 1e-15),
        || format!("the cat sat: {cat:?}"),
    )?;
    let rng = CounterRng::new(0xC10);
    for k in 0..200u64 {
        let len = |s| (rng.bits(s, k) % 11) as usize;
        let a: Vec<u64> = (0..len(0)).map(|i| rng.bits(2, k * 16 + i as u64) % 4).collect();
        let b: Vec<u64> = (0..len(1)).map(|i| rng.bits(3, k * 16 + i as u64) % 4).collect();
        let brute = (0u32..1 << a.len())
            .filter_map(|mask| {
                let sub: Vec<u64> = (0..a.len()).filter(|i| mask >> i & 1 == 1).map(|i| a[i]).collect();
                let mut it = b.iter();
                sub.iter().all(|x| it.any(|y| y == x)).then_some(sub.len())
            })
            .max()
            .unwrap();
        ensure(lcs_len(&a, &b) == brute, || format!("pair {k}: {a:?} vs {b:?}"))?;
    }
    Ok("3 examples, 200 brute-force pairs".into())
}

fn c11_noise(s: &mut Suite) -> Check {
    ensure(s.clean.len() == 3, || "needs the noiseless runs of criterion 9".into())?;
    let mut parts = Vec::new();
    for &(method, clean) in &s.clean.clone() {
        let mut cfg = transfer_config(method);
        cfg.noise = NoiseConfig {
            mechanism: NoiseMechanism::Laplace,
            scale: 1.0,
        };
        let noisy = mean_cosine(&cfg)?;
        let drop = (clean - noisy) / clean;
        ensure(drop >= 0.5, || format!("{method}: {clean:.4} -> {noisy:.4} (drop {:.1}%)", 100.0 * drop))?;
        parts.push(format!("{method} {clean:.3} -> {noisy:.3} (-{:.0}%)", 100.0 * drop));
    }
    Ok(parts.join(", "))
}

fn c12_determinism() -> Check {
    let tmp = tempfile::tempdir().map_err(e2s)?;
    let mut sizes = Vec::new();
    for method in [Method::Closed, Method::Pdmm, Method::Tv] {
        let cfg_path = tmp.path().join(format!("{method}.toml"));
        fs::write(&cfg_path, transfer_config(method).to_toml().map_err(e2s)?).map_err(e2s)?;
        let mut reports = Vec::new();
        for threads in ["1", "4"] {
            let dir = tmp.path().join(format!("{method}-{threads}"));
            let out = Command::new(env!("CARGO_BIN_EXE_lago"))
                .args(["--threads", threads, "solve", "--no-maps", "--config"])
                .arg(&cfg_path)
                .arg("--output-dir")
                .arg(&dir)
                .output()
                .map_err(e2s)?;
            ensure(out.status.success(), || String::from_utf8_lossy(&out.stderr).into_owned())?;
            reports.push(fs::read(dir.join("report.json")).map_err(e2s)?);
        }
        ensure(reports[0] == reports[1], || format!("{method}: report.json differs between 1 and 4 threads"))?;
        sizes.push(format!("{method} {} bytes", reports[0].len()));
    }
    Ok(format!("identical report.json with 1 and 4 threads: {}", sizes.join(", ")))
}

fn main() -> ExitCode {
    let secs = Duration::from_secs;
    let mut s = Suite {
        failures: 0,
        feasibility: Vec::new(),
        clean: Vec::new(),
    };
    s.run(1, "graph thresholds", Duration::from_millis(50), |_| c1_graph());
    s.run(2, "ridge optimality", secs(1), |_| c2_ridge());
    s.run(3, "pdmm loose-bound reduction", secs(5), c3_reduction);
    s.run(4, "pdmm consensus limit", secs(10), c4_consensus);
    s.run(5, "pdmm vs active-set oracle", secs(10), c5_oracle);
    s.run(6, "pdmm feasibility", secs(1), c6_feasibility);
    s.run(7, "tv zero-penalty reduction", secs(5), |_| c7_tv_reduction());
    s.run(8, "tv vs scalar oracle", secs(10), |_| c8_tv_oracle());
    s.run(9, "few-shot transfer benefit", secs(60), c9_transfer);
    s.run(10, "rouge-l correctness", secs(1), |_| c10_rouge());
    s.run(11, "noise sensitivity", secs(60), c11_noise);
    s.run(12, "thread-count determinism", secs(300), |_| c12_determinism());
    println!("{} of 12 criteria passed", 12 - s.failures);
    if s.failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
