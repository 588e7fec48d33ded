//! Invariant suites run by `biasgame verify`.
//!
//! Every suite is deterministic given [`VerifyOptions`]; the report carries
//! no timings so repeated runs serialize identically.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analysis::{boundary_samples, canonicalize_bias, classify_point, point_seed, Classification};
use crate::classical::{classical_max, classical_max_analytic};
use crate::game::{
    chsh_game, coefficient_table, parity, svetlichny_game, winning_probability_direct, winning_probability_identity,
    BiasVector, CoefficientTable, GameSpec,
};
use crate::linalg::{expectation, hermitian_eig, kron, ComplexMatrix, StateVector};
use crate::nosignaling::{
    bipartite_vertices, deterministic_box, lp_vertex_agreement, ns_value, pr_box, svetlichny_box, BOX_TOL,
};
use crate::quantum::{
    analytic_quantum_max_bipartite, analytic_quantum_max_tripartite_bipartition, chsh_prime_game,
    ghz_bipartition_strategy, quantum_value, region_one_value, region_two_value, seesaw_optimize,
    verify_chsh_prime_equivalence, Region, SeesawOptions, DEFAULT_SEED,
};
use crate::Error;

pub const REPORT_SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub seed: u64,
    /// See-saw restarts per grid point.
    pub restarts: usize,
    /// Negates one coefficient in every table built by the suites; used to
    /// check that the suites catch a corrupted game.
    pub inject_sign_flip: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { seed: DEFAULT_SEED, restarts: 20, inject_sign_flip: false }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteResult {
    pub name: &'static str,
    pub invariant: &'static str,
    pub passed: bool,
    pub checked: usize,
    /// Worst observed violation, in the units of `tolerance`.
    pub worst: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub schema: u32,
    pub seed: u64,
    pub restarts: usize,
    pub inject_sign_flip: bool,
    pub passed: bool,
    pub suites: Vec<SuiteResult>,
}

impl VerifyReport {
    pub fn failed(&self) -> impl Iterator<Item = &SuiteResult> {
        self.suites.iter().filter(|s| !s.passed)
    }

    pub fn table(&self) -> String {
        let width = self.suites.iter().map(|s| s.name.len()).max().unwrap_or(0);
        let mut out = String::new();
        for s in &self.suites {
            out.push_str(&format!(
                "{} {:width$}  worst {:.3e} (tol {:.0e}, {} checks)  {}\n",
                if s.passed { "PASS" } else { "FAIL" },
                s.name,
                s.worst,
                s.tolerance,
                s.checked,
                s.invariant,
            ));
        }
        out
    }
}

struct Ctx {
    opts: VerifyOptions,
}

impl Ctx {
    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.opts.seed);
        rng.set_stream(stream);
        rng
    }

    fn table(&self, game: &GameSpec, bias: &BiasVector) -> Result<CoefficientTable, Error> {
        let t = coefficient_table(game, bias)?;
        if !self.opts.inject_sign_flip {
            return Ok(t);
        }
        let mut w = t.weights().to_vec();
        w[0] = -w[0];
        Ok(CoefficientTable::from_weights(t.parties(), w))
    }

    fn seesaw(&self, index: usize) -> SeesawOptions {
        SeesawOptions::with_restarts(self.opts.restarts, point_seed(self.opts.seed, index))
    }
}

fn suite(name: &'static str, invariant: &'static str, worst: f64, tolerance: f64, checked: usize) -> SuiteResult {
    SuiteResult { name, invariant, passed: worst <= tolerance, checked, worst, tolerance }
}

fn canonical_axis(n: usize) -> Vec<f64> {
    (0..n).map(|i| 0.5 + 0.5 * i as f64 / (n - 1) as f64).collect()
}

fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
    let entries = (0..n * n).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    ComplexMatrix::from_rows(n, n, entries)
}

fn random_state(rng: &mut ChaCha8Rng, n: usize) -> StateVector {
    let amps = (0..n).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    StateVector::normalized(amps).expect("nonzero")
}

fn random_bias(rng: &mut ChaCha8Rng, parties: usize) -> BiasVector {
    let c: Vec<f64> = (0..parties).map(|_| rng.gen_range(0.0..=1.0)).collect();
    BiasVector::from_components(&c).expect("in range")
}

fn linalg_suites(ctx: &Ctx, out: &mut Vec<SuiteResult>) -> Result<(), Error> {
    let mut rng = ctx.rng(1);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let (a, b, c) = (random_matrix(&mut rng, 2), random_matrix(&mut rng, 2), random_matrix(&mut rng, 2));
        worst = worst.max(kron(&kron(&a, &b), &c).max_abs_diff(&kron(&a, &kron(&b, &c))));
        let lhs = kron(&(&a + &b), &c);
        let rhs = &kron(&a, &c) + &kron(&b, &c);
        worst = worst.max(lhs.max_abs_diff(&rhs));
        let s = rng.gen_range(-2.0..2.0);
        worst = worst.max(kron(&a.scale(s), &c).max_abs_diff(&kron(&a, &c).scale(s)));
    }
    out.push(suite("linalg.kron", "kron is associative and bilinear", worst, 1e-12, 50));

    let mut worst: f64 = 0.0;
    for dim in [2, 4, 8] {
        for _ in 0..20 {
            let st = random_state(&mut rng, dim);
            worst = worst.max((expectation(&st, &ComplexMatrix::identity(dim))? - 1.0).abs());
        }
    }
    out.push(suite("linalg.identity_expectation", "<psi|I|psi> = 1 for unit states", worst, 1e-12, 60));

    let mut worst: f64 = 0.0;
    for dim in [2, 4, 8] {
        for _ in 0..20 {
            let m = random_matrix(&mut rng, dim);
            let h = &m + &m.adjoint();
            let eig = hermitian_eig(&h)?;
            let mut rec = ComplexMatrix::zeros(dim, dim);
            for (l, v) in eig.values.iter().zip(&eig.vectors) {
                let a = v.amplitudes();
                let outer: Vec<Complex64> = (0..dim * dim).map(|i| a[i / dim] * a[i % dim].conj() * *l).collect();
                rec = &rec + &ComplexMatrix::from_rows(dim, dim, outer);
            }
            worst = worst.max(rec.max_abs_diff(&h));
        }
    }
    out.push(suite("linalg.eigen_reconstruction", "sum of l v v^dag reproduces the operator", worst, 1e-9, 60));
    Ok(())
}

fn game_suites(ctx: &Ctx, out: &mut Vec<SuiteResult>) -> Result<(), Error> {
    let games = [chsh_game(), svetlichny_game(), chsh_prime_game()];
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for g in &games {
        for x in 0..g.setting_count() {
            let wins = (0..g.outcome_count()).filter(|&o| g.wins(x, o)).count();
            worst = worst.max((wins as f64 - (1 << (g.parties() - 1)) as f64).abs());
            checked += 1;
        }
    }
    out.push(suite("game.winning_outcomes", "each setting tuple has 2^(n-1) winning outcomes", worst, 0.0, checked));

    let mut rng = ctx.rng(2);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        for g in &games[..2] {
            let b = random_bias(&mut rng, g.parties());
            worst = worst.max((ctx.table(g, &b)?.abs_sum() - 1.0).abs());
        }
    }
    out.push(suite("game.weight_normalization", "sum of |weight| is 1", worst, 1e-12, 200));

    // direct outcome sum versus (1 + Bell)/2 on correlator-only behaviors
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for _ in 0..100 {
        for g in &games {
            let b = random_bias(&mut rng, g.parties());
            let k = g.setting_count();
            let uniform_c = rng.gen_range(-1.0..=1.0);
            let random_c: Vec<f64> = (0..k).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            for corr in [vec![uniform_c; k], random_c] {
                let n = g.outcome_count() as f64;
                let direct = winning_probability_direct(g, &b, |x, o| {
                    let sign = if parity(o) == 0 { 1.0 } else { -1.0 };
                    (1.0 + sign * corr[x]) / n
                });
                let bell = ctx.table(g, &b)?.bell_value(&corr);
                let via_identity = winning_probability_identity(bell.clamp(-1.0, 1.0))?;
                worst = worst.max((direct - via_identity).abs());
                checked += 1;
            }
        }
    }
    out.push(suite(
        "game.probability_identity",
        "direct winning probability equals (1 + Bell)/2",
        worst,
        1e-12,
        checked,
    ));
    Ok(())
}

fn classical_suites(out: &mut Vec<SuiteResult>) -> Result<(), Error> {
    let g = chsh_game();
    let mut worst: f64 = 0.0;
    let axis = canonical_axis(50);
    for &p in &axis {
        for &q in &axis {
            let b = BiasVector::bipartite(p, q)?;
            worst = worst.max((classical_max(&g, &b)?.max_probability - classical_max_analytic(&g, &b)?).abs());
        }
    }
    out.push(suite("classical.bipartite_closed_form", "enumeration equals 1-(1-p)(1-q)", worst, 1e-12, 2500));

    let g3 = svetlichny_game();
    let axis = canonical_axis(10);
    let mut worst: f64 = 0.0;
    let mut r_spread: f64 = 0.0;
    for &p in &axis {
        for &q in &axis {
            let mut values = Vec::new();
            for &r in &axis {
                let b = BiasVector::tripartite(p, q, r)?;
                let v = classical_max(&g3, &b)?.max_probability;
                worst = worst.max((v - classical_max_analytic(&g3, &b)?).abs());
                values.push(v);
            }
            let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
            r_spread = r_spread.max(hi - lo);
        }
    }
    out.push(suite(
        "classical.tripartite_closed_form",
        "64-strategy enumeration equals 1-(1-p)(1-q)",
        worst,
        1e-12,
        1000,
    ));
    out.push(suite("classical.tripartite_r_independence", "local optimum independent of r", r_spread, 1e-12, 100));

    let grid: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
    let mut worst: f64 = 0.0;
    for &p in &grid {
        for &q in &grid {
            let v = classical_max(&g, &BiasVector::bipartite(p, q)?)?.max_probability;
            let a = classical_max(&g, &BiasVector::bipartite(1.0 - p, q)?)?.max_probability;
            let b = classical_max(&g, &BiasVector::bipartite(p, 1.0 - q)?)?.max_probability;
            worst = worst.max((v - a).abs()).max((v - b).abs());
        }
    }
    out.push(suite("classical.symmetry", "value invariant under p -> 1-p and q -> 1-q", worst, 1e-12, 441));

    // a local CHSH strategy can lose on any single tuple of its choice
    let mut worst: f64 = 0.0;
    for &p in &grid {
        for &q in &grid {
            let b = BiasVector::bipartite(p, q)?;
            let lightest = (0..4).map(|x| b.joint(x)).fold(f64::INFINITY, f64::min);
            worst = worst.max(1.0 - lightest - classical_max(&g, &b)?.max_probability - 1e-15);
        }
    }
    let checked = grid.len() * grid.len();
    out.push(suite(
        "classical.lightest_tuple_bound",
        "optimum is at least 1 - lightest tuple weight",
        worst.max(0.0),
        0.0,
        checked,
    ));
    Ok(())
}

fn quantum_suites(ctx: &Ctx, out: &mut Vec<SuiteResult>) -> Result<(), Error> {
    let g = chsh_game();
    let axis = canonical_axis(20);
    let mut max_decrease = f64::NEG_INFINITY;
    let mut oracle: f64 = 0.0;
    let mut dominance: f64 = 0.0;
    let mut collapse: f64 = 0.0;
    let mut collapse_checked = 0;
    let mut index = 0;
    for &p in &axis {
        for &q in &axis {
            let b = BiasVector::bipartite(p, q)?;
            let res = seesaw_optimize(&ctx.table(&g, &b)?, &ctx.seesaw(index))?;
            index += 1;
            max_decrease = max_decrease.max(res.max_decrease);
            let (analytic, region) = analytic_quantum_max_bipartite(&b)?;
            oracle = oracle.max((res.value - analytic).abs());
            let classical = classical_max(&g, &b)?.max_probability;
            let quantum = (1.0 + res.value) / 2.0;
            let ns = ns_value(&g, &b)?;
            dominance = dominance.max(classical - quantum).max(quantum - ns);
            if region == Region::One {
                collapse = collapse.max((res.value - (2.0 * classical - 1.0)).abs());
                collapse_checked += 1;
            }
        }
    }
    out.push(suite("quantum.seesaw_monotone", "see-saw objective never decreases", max_decrease.max(0.0), 1e-12, 400));
    out.push(suite("quantum.seesaw_oracle", "see-saw equals the piecewise analytic optimum", oracle, 1e-5, 400));
    out.push(suite("quantum.dominance", "classical <= quantum <= no-signaling", dominance.max(0.0), 1e-9, 400));
    out.push(suite(
        "quantum.region_one_collapse",
        "in region 1 the see-saw equals the classical optimum",
        collapse,
        1e-5,
        collapse_checked,
    ));

    let mut worst: f64 = 0.0;
    for [p, q] in boundary_samples(100) {
        worst = worst.max((region_one_value(p, q) - region_two_value(p, q)).abs());
    }
    out.push(suite("quantum.boundary_continuity", "both branches agree on pq = 1/2", worst, 1e-12, 100));

    let g3 = svetlichny_game();
    let axis = canonical_axis(5);
    let mut self_consistency: f64 = 0.0;
    let mut seesaw_gap: f64 = 0.0;
    for &p in &axis {
        for &q in &axis {
            for &r in &axis {
                let b = BiasVector::tripartite(p, q, r)?;
                let table = ctx.table(&g3, &b)?;
                let ghz = quantum_value(&table, &ghz_bipartition_strategy(&b)?)?;
                let (bound, _) = analytic_quantum_max_tripartite_bipartition(&b)?;
                self_consistency = self_consistency.max((ghz - bound).abs());
                let res = seesaw_optimize(&table, &ctx.seesaw(index))?;
                index += 1;
                seesaw_gap = seesaw_gap.max(ghz - res.value);
            }
        }
    }
    out.push(suite(
        "quantum.ghz_self_consistency",
        "GHZ strategy value equals the bipartition bound",
        self_consistency,
        1e-9,
        125,
    ));
    out.push(suite(
        "quantum.tripartite_seesaw_dominates",
        "full see-saw is at least the GHZ strategy value",
        seesaw_gap.max(0.0),
        1e-9,
        125,
    ));

    let mut rng = ctx.rng(3);
    let mut worst: f64 = 0.0;
    for i in 0..10 {
        let b = random_bias(&mut rng, 2);
        let rep = verify_chsh_prime_equivalence(&b, 10, ctx.opts.seed.wrapping_add(i))?;
        worst = worst.max(rep.max_discrepancy).max(rep.max_signed_discrepancy);
    }
    out.push(suite("quantum.chsh_prime_equivalence", "CHSH' maps to CHSH under the Bob rotation", worst, 1e-10, 100));
    Ok(())
}

fn ns_suites(ctx: &Ctx, out: &mut Vec<SuiteResult>) -> Result<(), Error> {
    let mut boxes = bipartite_vertices();
    boxes.push(svetlichny_box());
    boxes.extend(crate::classical::DeterministicStrategy::all(3).map(|s| deterministic_box(&s)));
    let worst = boxes
        .iter()
        .map(|b| b.normalization_error().max(b.signaling_error()).max(b.negativity()))
        .fold(0.0, f64::max);
    out.push(suite("nosignaling.constructed_boxes", "constructed boxes are normalized and no-signaling", worst, BOX_TOL, boxes.len()));

    let rep = lp_vertex_agreement(100, ctx.opts.seed)?;
    out.push(suite("nosignaling.lp_vertex_oracle", "LP optimum equals the 24-vertex maximum", rep.max_gap, 1e-9, 100));

    let bx = svetlichny_box();
    let mut worst: f64 = 0.0;
    for x in 0..8 {
        for subset in 1..7 {
            worst = worst.max(bx.correlator(subset, x).abs());
        }
    }
    out.push(suite("nosignaling.svetlichny_marginals", "one- and two-party correlators vanish", worst, 1e-15, 48));

    let mut rng = ctx.rng(4);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let b2 = random_bias(&mut rng, 2);
        let b3 = random_bias(&mut rng, 3);
        let v2 = crate::nosignaling::game_value(&pr_box(0, 0, 0), &chsh_game(), &b2)?;
        let v3 = crate::nosignaling::game_value(&bx, &svetlichny_game(), &b3)?;
        worst = worst.max((v2 - 1.0).abs()).max((v3 - 1.0).abs());
    }
    out.push(suite("nosignaling.boxes_win", "PR and Svetlichny boxes win with probability 1", worst, 1e-12, 40));
    Ok(())
}

fn analysis_suites(out: &mut Vec<SuiteResult>) -> Result<(), Error> {
    let g = chsh_game();
    let grid: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
    let mut mismatches = 0.0;
    for &p in &grid {
        for &q in &grid {
            let b = BiasVector::bipartite(p, q)?;
            let (c, _) = canonicalize_bias(&b);
            if classify_point(&g, &b, None)?.classification != classify_point(&g, &c, None)?.classification {
                mismatches += 1.0;
            }
        }
    }
    out.push(suite("analysis.relabel_invariance", "classification invariant under canonicalization", mismatches, 0.0, 441));

    let axis = canonical_axis(41);
    let mut violations = 0.0;
    for &q in &axis {
        let mut seen_none = false;
        for &p in &axis {
            let pt = classify_point(&g, &BiasVector::bipartite(p, q)?, None)?;
            match pt.classification {
                Classification::NoQuantumAdvantage => seen_none = true,
                Classification::QuantumAdvantage if seen_none => violations += 1.0,
                Classification::QuantumAdvantage => {}
            }
        }
    }
    out.push(suite("analysis.downward_closed", "advantage region is downward closed in p", violations, 0.0, 41 * 41));

    let g3 = svetlichny_game();
    let axis = canonical_axis(6);
    let mut worst: f64 = 0.0;
    for &p in &axis {
        for &q in &axis {
            let base = classify_point(&g3, &BiasVector::tripartite(p, q, 0.5)?, None)?;
            for &r in &axis {
                let pt = classify_point(&g3, &BiasVector::tripartite(p, q, r)?, None)?;
                worst = worst
                    .max((pt.classical - base.classical).abs())
                    .max((pt.quantum_analytic - base.quantum_analytic).abs())
                    .max((pt.nosignaling - base.nosignaling).abs());
                if pt.classification != base.classification {
                    worst = f64::INFINITY;
                }
            }
        }
    }
    out.push(suite("analysis.r_independence", "bipartition-model point values independent of r", worst, 1e-12, 216));
    Ok(())
}

pub fn run_verification(opts: &VerifyOptions) -> Result<VerifyReport, Error> {
    if opts.restarts == 0 {
        return Err(Error::InvalidArgument("restarts must be at least 1".into()));
    }
    let ctx = Ctx { opts: *opts };
    let mut suites = Vec::new();
    linalg_suites(&ctx, &mut suites)?;
    game_suites(&ctx, &mut suites)?;
    classical_suites(&mut suites)?;
    quantum_suites(&ctx, &mut suites)?;
    ns_suites(&ctx, &mut suites)?;
    analysis_suites(&mut suites)?;
    let passed = suites.iter().all(|s| s.passed);
    Ok(VerifyReport {
        schema: REPORT_SCHEMA,
        seed: opts.seed,
        restarts: opts.restarts,
        inject_sign_flip: opts.inject_sign_flip,
        passed,
        suites,
    })
}
