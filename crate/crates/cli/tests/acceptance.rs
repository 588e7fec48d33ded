//! Acceptance criteria 1-10, one status line each. Exits nonzero if any
//! gating criterion fails; criterion 9 is reported but never gates.

use std::f64::consts::FRAC_1_SQRT_2;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use biasgame::analysis::{boundary_samples, seesaw_threshold_on_diagonal, threshold_on_diagonal};
use biasgame::classical::{classical_max, classical_max_analytic};
use biasgame::game::{chsh_game, coefficient_table, svetlichny_game, BiasVector, GameKind};
use biasgame::nosignaling::{game_value, lp_vertex_agreement, ns_maximize, pr_box, svetlichny_box};
use biasgame::quantum::{
    analytic_quantum_max_bipartite, analytic_quantum_max_tripartite_bipartition, ghz_bipartition_strategy,
    quantum_value, region_one_value, region_two_value, seesaw_optimize, verify_chsh_prime_equivalence, Region,
    SeesawOptions,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 2024;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn unbiased() -> Outcome {
    let start = Instant::now();
    let g = chsh_game();
    let b = BiasVector::bipartite(0.5, 0.5).unwrap();
    let target = 0.5 + 0.5 * FRAC_1_SQRT_2;
    let classical = classical_max(&g, &b).unwrap().max_probability;
    let (analytic, _) = analytic_quantum_max_bipartite(&b).unwrap();
    let seesaw = seesaw_optimize(&coefficient_table(&g, &b).unwrap(), &SeesawOptions::default()).unwrap().value;
    let (ns, _) = ns_maximize(&g, &b).unwrap();
    let elapsed = start.elapsed();
    let analytic_err = ((1.0 + analytic) / 2.0 - target).abs();
    let seesaw_err = ((1.0 + seesaw) / 2.0 - target).abs();
    outcome(
        classical == 0.75 && analytic_err <= 1e-6 && seesaw_err <= 1e-6 && (ns - 1.0).abs() <= 1e-9 && elapsed < Duration::from_secs(1),
        format!(
            "classical {classical}, analytic err {analytic_err:.1e}, see-saw err {seesaw_err:.1e}, ns {ns}, {elapsed:.2?}"
        ),
    )
}

/// Canonical grid `p, q ∈ {0.5, 0.525, …, 1}` split by region, 50 points
/// taken at an even stride from each part.
fn region_points(region: Region) -> Vec<(f64, f64)> {
    let axis: Vec<f64> = (0..=20).map(|k| 0.5 + 0.025 * k as f64).collect();
    let all: Vec<(f64, f64)> = axis
        .iter()
        .flat_map(|&p| axis.iter().map(move |&q| (p, q)))
        .filter(|&(p, q)| Region::of(p, q) == region)
        .collect();
    (0..50).map(|i| all[i * all.len() / 50]).collect()
}

fn seesaw_bell(p: f64, q: f64, index: usize) -> f64 {
    let t = coefficient_table(&chsh_game(), &BiasVector::bipartite(p, q).unwrap()).unwrap();
    seesaw_optimize(&t, &SeesawOptions::with_restarts(20, SEED + index as u64)).unwrap().value
}

fn region_one() -> Outcome {
    let start = Instant::now();
    let mut formula_err: f64 = 0.0;
    let mut classical_err: f64 = 0.0;
    for (i, (p, q)) in region_points(Region::One).into_iter().enumerate() {
        let v = seesaw_bell(p, q, i);
        formula_err = formula_err.max((v - region_one_value(p, q)).abs());
        let cl = classical_max(&chsh_game(), &BiasVector::bipartite(p, q).unwrap()).unwrap().max_probability;
        classical_err = classical_err.max(((1.0 + v) / 2.0 - cl).abs());
    }
    let elapsed = start.elapsed();
    outcome(
        formula_err <= 1e-5 && classical_err <= 1e-5 && elapsed < Duration::from_secs(30),
        format!("50 points, max |seesaw - formula| {formula_err:.1e}, max |P - classical| {classical_err:.1e}, {elapsed:.2?}"),
    )
}

fn region_two() -> Outcome {
    let start = Instant::now();
    let mut formula_err: f64 = 0.0;
    let mut min_gap = f64::INFINITY;
    for (i, (p, q)) in region_points(Region::Two).into_iter().enumerate() {
        let v = seesaw_bell(p, q, 100 + i);
        formula_err = formula_err.max((v - region_two_value(p, q)).abs());
        let cl = classical_max(&chsh_game(), &BiasVector::bipartite(p, q).unwrap()).unwrap().bell_value();
        min_gap = min_gap.min(v - cl);
    }
    let elapsed = start.elapsed();
    outcome(
        formula_err <= 1e-5 && min_gap > 1e-6 && elapsed < Duration::from_secs(30),
        format!("50 points, max |seesaw - formula| {formula_err:.1e}, min advantage {min_gap:.2e}, {elapsed:.2?}"),
    )
}

fn boundary() -> Outcome {
    let worst = boundary_samples(100)
        .into_iter()
        .map(|[p, q]| (region_one_value(p, q) - region_two_value(p, q)).abs())
        .fold(0.0, f64::max);
    let t = threshold_on_diagonal(GameKind::Chsh, 1e-9).unwrap();
    let err = (t - FRAC_1_SQRT_2).abs();
    outcome(
        worst <= 1e-12 && err <= 1e-6,
        format!("branch gap {worst:.1e} over 100 samples, diagonal threshold {t:.9} (err {err:.1e})"),
    )
}

fn classical_oracle() -> Outcome {
    let axis = |n: usize| -> Vec<f64> { (0..n).map(|i| 0.5 + 0.5 * i as f64 / (n - 1) as f64).collect() };
    let g = chsh_game();
    let mut bip: f64 = 0.0;
    for &p in &axis(50) {
        for &q in &axis(50) {
            let b = BiasVector::bipartite(p, q).unwrap();
            bip = bip.max((classical_max(&g, &b).unwrap().max_probability - classical_max_analytic(&g, &b).unwrap()).abs());
        }
    }
    let g3 = svetlichny_game();
    let mut tri: f64 = 0.0;
    let mut spread: f64 = 0.0;
    for &p in &axis(10) {
        for &q in &axis(10) {
            let vals: Vec<f64> = axis(10)
                .iter()
                .map(|&r| {
                    let b = BiasVector::tripartite(p, q, r).unwrap();
                    let v = classical_max(&g3, &b).unwrap().max_probability;
                    tri = tri.max((v - classical_max_analytic(&g3, &b).unwrap()).abs());
                    v
                })
                .collect();
            let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            spread = spread.max(hi - lo);
        }
    }
    outcome(
        bip <= 1e-12 && tri <= 1e-12 && spread <= 1e-12,
        format!("bipartite max err {bip:.1e}; tripartite max err {tri:.3e}, r-spread {spread:.3e}"),
    )
}

// 0.7071 is the quoted four-digit threshold, not a stand-in for 1/√2
#[allow(clippy::approx_constant)]
fn bipartition_model() -> Outcome {
    let start = Instant::now();
    let g3 = svetlichny_game();
    let axis: Vec<f64> = (0..5).map(|i| 0.5 + 0.125 * i as f64).collect();
    let mut worst: f64 = 0.0;
    let mut worst_at = (0.0, 0.0, 0.0);
    for &p in &axis {
        for &q in &axis {
            for &r in &axis {
                let b = BiasVector::tripartite(p, q, r).unwrap();
                let v = quantum_value(&coefficient_table(&g3, &b).unwrap(), &ghz_bipartition_strategy(&b).unwrap()).unwrap();
                let (bound, _) = analytic_quantum_max_tripartite_bipartition(&b).unwrap();
                if (v - bound).abs() > worst {
                    worst = (v - bound).abs();
                    worst_at = (p, q, r);
                }
            }
        }
    }
    let b = BiasVector::tripartite(0.5, 0.5, 0.5).unwrap();
    let unbiased = (1.0 + quantum_value(&coefficient_table(&g3, &b).unwrap(), &ghz_bipartition_strategy(&b).unwrap()).unwrap()) / 2.0;
    let unbiased_err = (unbiased - (0.5 + 0.5 * FRAC_1_SQRT_2)).abs();
    let t = threshold_on_diagonal(GameKind::Svetlichny, 1e-9).unwrap();
    let elapsed = start.elapsed();
    outcome(
        worst <= 1e-9 && unbiased_err <= 1e-9 && (t - 0.7071).abs() <= 1e-4 && elapsed < Duration::from_secs(60),
        format!(
            "grid max |GHZ value - bound| {worst:.3e} at {worst_at:?}; unbiased err {unbiased_err:.1e}; threshold {t:.6}; {elapsed:.2?}"
        ),
    )
}

fn equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let b = BiasVector::bipartite(rng.gen_range(0.0..=1.0), rng.gen_range(0.0..=1.0)).unwrap();
    let rep = verify_chsh_prime_equivalence(&b, 100, SEED).unwrap();
    outcome(
        rep.max_discrepancy <= 1e-10 && rep.max_signed_discrepancy <= 1e-10,
        format!(
            "100 observable sets at p={:.4} q={:.4}: max discrepancy {:.1e} (signed {:.1e}), optimum gap {:.1e}",
            b.p, b.q, rep.max_discrepancy, rep.max_signed_discrepancy, rep.optimum_gap
        ),
    )
}

fn nosignaling() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let mut win_err: f64 = 0.0;
    for _ in 0..20 {
        let b2 = BiasVector::bipartite(rng.gen_range(0.0..=1.0), rng.gen_range(0.0..=1.0)).unwrap();
        let b3 = BiasVector::tripartite(rng.gen_range(0.0..=1.0), rng.gen_range(0.0..=1.0), rng.gen_range(0.0..=1.0)).unwrap();
        win_err = win_err.max((game_value(&pr_box(0, 0, 0), &chsh_game(), &b2).unwrap() - 1.0).abs());
        win_err = win_err.max((game_value(&svetlichny_box(), &svetlichny_game(), &b3).unwrap() - 1.0).abs());
    }
    let bx = svetlichny_box();
    let corr = (0..8)
        .flat_map(|x| (1..7usize).map(move |s| (x, s)))
        .map(|(x, s)| bx.correlator(s, x).abs())
        .fold(0.0, f64::max);
    let lp = lp_vertex_agreement(100, SEED).unwrap();
    outcome(
        win_err <= 1e-12 && corr <= 1e-15 && lp.max_gap <= 1e-9,
        format!("win err {win_err:.1e}, low-order correlators {corr:.1e}, LP vs vertices {:.1e}", lp.max_gap),
    )
}

fn seesaw_threshold() -> Outcome {
    let th = seesaw_threshold_on_diagonal(GameKind::Svetlichny, [0.75, 0.95], 1e-3, 1e-7, &SeesawOptions::default()).unwrap();
    outcome(
        (0.83..=0.85).contains(&th.threshold),
        format!("full see-saw threshold {:.4} ({} bisection steps)", th.threshold, th.evaluations),
    )
}

fn reproducible_verify() -> Outcome {
    let dir = std::env::temp_dir().join(format!("biasgame-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let mut reports = Vec::new();
    let mut codes = Vec::new();
    for i in 0..2 {
        let path = dir.join(format!("verify{i}.json"));
        let out = Command::new(env!("CARGO_BIN_EXE_biasgame"))
            .args(["verify", "--seed", "7", "--restarts", "5", "--format", "json", "--out"])
            .arg(&path)
            .output()
            .unwrap();
        codes.push(out.status.code());
        reports.push(std::fs::read(&path).unwrap());
    }
    let _ = std::fs::remove_dir_all(&dir);
    outcome(
        reports[0] == reports[1] && !reports[0].is_empty(),
        format!("two seeded runs, {} bytes each, identical: {}, exit codes {:?}", reports[0].len(), reports[0] == reports[1], codes),
    )
}

fn main() -> ExitCode {
    type Criterion = (&'static str, fn() -> Outcome, bool);
    let criteria: [Criterion; 10] = [
        ("1 unbiased bipartite values", unbiased, true),
        ("2 region-1 no advantage", region_one, true),
        ("3 region-2 advantage", region_two, true),
        ("4 boundary continuity", boundary, true),
        ("5 classical oracle equivalence", classical_oracle, true),
        ("6 tripartite bipartition model", bipartition_model, true),
        ("7 CHSH/CHSH' equivalence", equivalence, true),
        ("8 no-signaling", nosignaling, true),
        ("9 see-saw threshold (diagnostic)", seesaw_threshold, false),
        ("10 reproducible verify report", reproducible_verify, true),
    ];
    let mut gating_failures = Vec::new();
    for (name, check, gating) in criteria {
        let o = check();
        let status = match (o.passed, gating) {
            (true, _) => "PASS",
            (false, true) => "FAIL",
            (false, false) => "FLAG",
        };
        println!("{status} criterion {name}: {}", o.detail);
        if !o.passed && gating {
            gating_failures.push(name);
        }
    }
    if gating_failures.is_empty() {
        println!("acceptance: all gating criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {} gating criteria failed: {}", gating_failures.len(), gating_failures.join("; "));
        ExitCode::FAILURE
    }
}
