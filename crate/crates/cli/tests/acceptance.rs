//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero if any fail.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use consensus_attack::fixtures::fixture;
use consensus_attack_core::dynamics::{matrix_exponential, objective, propagate_unattacked, Kernel, TimeGrid};
use consensus_attack_core::link::checks::verify_scale_invariance;
use consensus_attack_core::link::oracle::greedy_dominance;
use consensus_attack_core::link::{edge_power, forward_backward_sweep, simulate_attack1, SweepOptions};
use consensus_attack_core::model::{build_system_matrix, LinkControl, NetworkTopology};
use consensus_attack_core::noise::{
    baseline_constant_control, simulate_attack2, CostateMap, FixedPointOptions, NoiseParams,
};
use consensus_attack_core::Scenario;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn paper(steps: usize) -> Scenario {
    let s = fixture("paper_k4").unwrap();
    s.with_steps(steps).unwrap().scenario
}

fn within(elapsed: Duration, limit: Duration) -> bool {
    elapsed <= limit
}

fn edge_powers() -> Outcome {
    let s = paper(400);
    let start = Instant::now();
    let p = edge_power(&s.x0, &s.topology);
    let elapsed = start.elapsed();
    let w13 = p.power(&s.topology, 0, 2).unwrap();
    let w14 = p.power(&s.topology, 0, 3).unwrap();
    let ok = (w13 - 2.2101).abs() <= 5e-4
        && (w14 - 13.8979).abs() <= 5e-4
        && within(elapsed, Duration::from_millis(1));
    outcome(
        ok,
        format!("w13(0) = {w13:.6} (2.2101 ± 5e-4), w14(0) = {w14:.6} (13.8979 ± 5e-4), {elapsed:?} (< 1 ms)"),
    )
}

fn stationary_greedy() -> Outcome {
    let s = paper(400);
    let start = Instant::now();
    let out = simulate_attack1(&s, 2).unwrap();
    let elapsed = start.elapsed();
    let hits = (0..400)
        .filter(|&k| out.broken_edges(&s.topology, k) == vec![(0, 2), (0, 3)])
        .count();
    outcome(
        hits == 400 && within(elapsed, Duration::from_secs(1)),
        format!("broken set {{(1,3),(1,4)}} on {hits}/400 steps, {elapsed:?} (< 1 s)"),
    )
}

fn greedy_equals_mp() -> Outcome {
    let s = paper(400);
    let greedy = simulate_attack1(&s, 2).unwrap();
    let sweep = forward_backward_sweep(&s, 2, &SweepOptions::default()).unwrap();
    let same = sweep.schedule == greedy.schedule;
    let gap = (sweep.objective - greedy.objective).abs() / greedy.objective;
    outcome(
        sweep.converged && sweep.iterations <= 100 && same && gap < 1e-4,
        format!(
            "converged = {} in {} iterations (≤ 100), same broken set = {same}, relative J gap {gap:.2e} (< 1e-4)",
            sweep.converged, sweep.iterations
        ),
    )
}

// Every labeled connected graph on n nodes, as edge lists.
fn connected_graphs(n: usize) -> Vec<Vec<(usize, usize)>> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let mut out = Vec::new();
    for mask in 1u32..(1 << pairs.len()) {
        let edges: Vec<(usize, usize)> = (0..pairs.len())
            .filter(|&b| mask & (1 << b) != 0)
            .map(|b| pairs[b])
            .collect();
        let t = NetworkTopology::new(n, edges.iter().map(|&(i, j)| (i, j, 1.0))).unwrap();
        if t.is_connected() {
            out.push(edges);
        }
    }
    out
}

fn greedy_dominance_oracle() -> Outcome {
    let start = Instant::now();
    let (mut cases, mut violations) = (0usize, 0usize);
    let mut worst = (0.0f64, String::new());
    for n in [3usize, 4] {
        for (g, edges) in connected_graphs(n).into_iter().enumerate() {
            for ell in [1usize, 2] {
                if ell > edges.len() {
                    continue;
                }
                for wd in 0..3u64 {
                    let mut wr = ChaCha8Rng::seed_from_u64(1000 * n as u64 + 10 * g as u64 + wd);
                    let weighted: Vec<(usize, usize, f64)> = edges
                        .iter()
                        .map(|&(i, j)| (i, j, wr.gen_range(0.1..2.0)))
                        .collect();
                    let topology = NetworkTopology::new(n, weighted.clone()).unwrap();
                    for xd in 0..3u64 {
                        let mut xr = ChaCha8Rng::seed_from_u64(7_000 + 100 * wd + xd);
                        let x0: Vec<f64> = (0..n).map(|_| xr.gen_range(-3.0..3.0)).collect();
                        let s = Scenario::new(
                            topology.clone(),
                            x0.clone(),
                            TimeGrid::new(2.0, 40).unwrap(),
                            Kernel::default(),
                        )
                        .unwrap();
                        let r = greedy_dominance(&s, ell, 4).unwrap();
                        cases += 1;
                        if !r.holds(1e-3) {
                            violations += 1;
                        }
                        if r.ratio() > worst.0 {
                            let edges: Vec<String> = weighted
                                .iter()
                                .map(|(i, j, w)| format!("({},{}):{w:.3}", i + 1, j + 1))
                                .collect();
                            worst = (
                                r.ratio(),
                                format!(
                                    "n={n} ell={ell} edges [{}] x0 {:.3?} J_greedy={:.5} J_best={:.5}",
                                    edges.join(" "),
                                    x0,
                                    r.greedy,
                                    r.best.objective
                                ),
                            );
                        }
                    }
                }
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        violations == 0 && within(elapsed, Duration::from_secs(120)),
        format!(
            "{violations}/{cases} scenarios with J_best > J_greedy·(1+1e-3); worst ratio {:.4}: {}; {elapsed:.1?} (< 2 min)",
            worst.0, worst.1
        ),
    )
}

fn scale_invariance() -> Outcome {
    let s = paper(400);
    let start = Instant::now();
    let mut ok = true;
    let mut notes = Vec::new();
    for c in [-3.0, 0.5, 10.0] {
        let r = verify_scale_invariance(&s, 2, c).unwrap();
        ok &= r.schedules_identical;
        notes.push(format!("c={c}: identical={}", r.schedules_identical));
    }
    let elapsed = start.elapsed();
    outcome(
        ok && within(elapsed, Duration::from_secs(5)),
        format!("{}, {elapsed:?} (< 5 s)", notes.join(", ")),
    )
}

fn conservation() -> Outcome {
    let mut runs: Vec<(Scenario, usize)> = vec![(paper(400), 1), (paper(400), 2), (paper(400), 3)];
    runs.push((fixture("path3").unwrap().scenario, 1));
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..5 {
        let w: Vec<f64> = (0..6).map(|_| rng.gen_range(0.1..2.0)).collect();
        let x0: Vec<f64> = (0..4).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let s = Scenario::new(
            NetworkTopology::complete(4, &w).unwrap(),
            x0,
            TimeGrid::new(2.0, 400).unwrap(),
            Kernel::default(),
        )
        .unwrap();
        runs.push((s, 2));
    }
    let (mut ok, mut worst_rel, mut worst_stoch) = (true, 0.0f64, 0.0f64);
    for (s, ell) in &runs {
        let out = simulate_attack1(s, *ell).unwrap();
        let sum0: f64 = s.x0.iter().sum();
        for (k, x) in out.trajectory.states().iter().enumerate() {
            let drift = (x.iter().sum::<f64>() - sum0).abs();
            let bound = 1e-8 * sum0.abs() * (1.0 + s.grid.time(k));
            ok &= drift < bound || drift == 0.0;
            if sum0 != 0.0 {
                worst_rel = worst_rel.max(drift / sum0.abs());
            }
        }
        for u in &out.schedule {
            let a = build_system_matrix(&s.topology, u).unwrap();
            let e = matrix_exponential(&a, s.grid.step()).unwrap();
            worst_stoch = worst_stoch.max(e.stochasticity_defect());
        }
    }
    ok &= worst_stoch <= 1e-10;
    outcome(
        ok,
        format!(
            "{} trajectories, max |1'x - 1'x0|/|1'x0| = {worst_rel:.2e} (< 1e-8·(1+t)), max stochasticity defect {worst_stoch:.2e} (≤ 1e-10)",
            runs.len()
        ),
    )
}

fn baseline_bound() -> Outcome {
    let r = baseline_constant_control(&paper(400), 1.0).unwrap();
    let c = fixture("consensus_k4").unwrap().scenario;
    let rc = baseline_constant_control(&c, 1.0).unwrap();
    let bound = 8.0 / 3.0;
    let rel = (rc.simulated - bound).abs() / bound;
    outcome(
        r.simulated >= bound && rel <= 1e-6,
        format!(
            "J2 = {:.9} (≥ 8/3), consensus start J2 = {:.12}, relative error {rel:.2e} (≤ 1e-6)",
            r.simulated, rc.simulated
        ),
    )
}

fn contraction() -> Outcome {
    let s = paper(400);
    let out = simulate_attack2(&s, &NoiseParams::new(1.0), &FixedPointOptions::default()).unwrap();
    let ratios = out.contraction_ratios();
    let worst = ratios.iter().skip(1).copied().fold(0.0, f64::max);
    let a = build_system_matrix(&s.topology, &LinkControl::none(&s.topology)).unwrap();
    let map = CostateMap::new(&a, &s.x0, &s.kernel_profile(), &s.grid, &out.setup).unwrap();
    let image = map.apply(&out.costate);
    let sup = |p: &mut dyn Iterator<Item = f64>| p.fold(0.0f64, |m, v| m.max(v.abs()));
    let defect = sup(&mut image
        .iter()
        .flatten()
        .zip(out.costate.iter().flatten())
        .map(|(a, b)| a - b))
        / sup(&mut out.costate.iter().flatten().copied());
    outcome(
        worst <= 0.95 && defect < 1e-7,
        format!(
            "{} iterations, max residual ratio after the first {worst:.4} (≤ 0.95), fixed-point defect {defect:.2e} (< 1e-7)",
            out.iterations
        ),
    )
}

fn noise_optimality() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for (name, s) in [("paper_k4", paper(400)), ("two_node", fixture("two_node").unwrap().scenario)] {
        let out = simulate_attack2(&s, &NoiseParams::new(1.0), &FixedPointOptions::default()).unwrap();
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let peak = out.costate.iter().map(|p| norm(p)).fold(0.0, f64::max);
        let (mut power, mut cosine) = (0.0f64, 0.0f64);
        for (k, (u, p)) in out.control.values.iter().zip(&out.costate).enumerate() {
            let np = norm(p);
            if np > 1e-10 * peak {
                power = power.max((out.control.power(k) - 1.0).abs());
                let dot: f64 = u.iter().zip(p).map(|(a, b)| a * b).sum();
                cosine = cosine.max((dot / (norm(u) * np) - 1.0).abs());
            }
        }
        let j0 = objective(&propagate_unattacked(&s.x0, &s.topology, &s.grid).unwrap(), &s.kernel);
        let j2 = baseline_constant_control(&s, 1.0).unwrap().simulated;
        let lam = out.multipliers.max_value;
        let dominant = out.objective >= j0.max(j2) - 1e-6;
        ok &= power <= 1e-12 && cosine <= 1e-10 && lam <= 1e-12 && dominant;
        notes.push(format!(
            "{name}: ||u|²-P| {power:.1e}, |cos-1| {cosine:.1e}, max λ {lam:.1e}, J* {:.6} vs max(J0, J2) {:.6}",
            out.objective,
            j0.max(j2)
        ));
    }
    outcome(ok, notes.join("; "))
}

fn analytic() -> Outcome {
    let s = fixture("two_node").unwrap().scenario;
    let j = objective(&propagate_unattacked(&s.x0, &s.topology, &s.grid).unwrap(), &s.kernel);
    let exact = (1.0 - (-8.0f64).exp()) / 2.0;
    let a = build_system_matrix(&s.topology, &LinkControl::none(&s.topology)).unwrap();
    let mut err: f64 = 0.0;
    for t in [0.0, 0.25, 1.0, 2.0, 5.0] {
        let e = matrix_exponential(&a, t).unwrap();
        let d = (-2.0 * t).exp();
        err = err
            .max((e[(0, 0)] - (1.0 + d) / 2.0).abs())
            .max((e[(0, 1)] - (1.0 - d) / 2.0).abs())
            .max((e[(1, 0)] - (1.0 - d) / 2.0).abs())
            .max((e[(1, 1)] - (1.0 + d) / 2.0).abs());
    }
    let jerr = (j - exact).abs();
    outcome(
        jerr <= 1e-8 && err <= 1e-12,
        format!("|J - (1-e^-8)/2| = {jerr:.2e} (≤ 1e-8), exponential error {err:.2e} (≤ 1e-12)"),
    )
}

fn grid_order() -> Outcome {
    let j = |steps: usize| simulate_attack1(&paper(steps), 2).unwrap().objective;
    let (a, b, c) = (j(400), j(800), j(1600));
    let (d1, d2) = ((a - b).abs(), (b - c).abs());
    let ratio = d1 / d2;
    outcome(
        (3.0..=5.0).contains(&ratio),
        format!("J(400) = {a:.15}, J(800) = {b:.15}, J(1600) = {c:.15}; deltas {d1:.2e}, {d2:.2e}; ratio {ratio:.3} (in [3, 5])"),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("paper example edge powers", edge_powers),
        ("stationary greedy control", stationary_greedy),
        ("greedy equals maximum-principle sweep", greedy_equals_mp),
        ("greedy dominance oracle", greedy_dominance_oracle),
        ("scale invariance", scale_invariance),
        ("conservation and stochasticity", conservation),
        ("constant-noise baseline bound", baseline_bound),
        ("co-state contraction", contraction),
        ("noise attack optimality", noise_optimality),
        ("two-node analytic regressions", analytic),
        ("second-order grid convergence", grid_order),
    ];
    let mut failed = Vec::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let o = f();
        println!(
            "{} [{:>2}] {name}: {}",
            if o.passed { "PASS" } else { "FAIL" },
            i + 1,
            o.detail
        );
        if !o.passed {
            failed.push(i + 1);
        }
    }
    println!(
        "acceptance: {}/{} criteria passed{}",
        criteria.len() - failed.len(),
        criteria.len(),
        if failed.is_empty() {
            String::new()
        } else {
            format!("; failed: {failed:?}")
        }
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
