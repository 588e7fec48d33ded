//! Tripartite strategies built from the bipartition rearrangement
//! `S(p,q,r) = r·CHSH(p,q) ⊗ C0 + (1−r)·CHSH′(p,q) ⊗ C1`.
//!
//! Measuring `C0 = σ_x` or `C1 = −σ_y` on the GHZ state leaves Alice and Bob
//! with `|φ±⟩` or `|φ̃±⟩ = (|00⟩ ± i|11⟩)/√2`, and the Bob rotation
//! `U_B = diag(1, −i)` maps `|φ̃±⟩` to `|φ±⟩`. Two objects live here:
//!
//! * [`ghz_bipartition_strategy`]: a genuine three-party strategy (GHZ state,
//!   Charlie fixed to `σ_x`/`−σ_y`, Alice and Bob at their best joint
//!   response). Its value is what a physical tripartite experiment attains.
//! * [`bipartition_model`]: the model in which Alice and Bob play CHSH and
//!   CHSH′ as separate games, each with its own optimal observables. Its
//!   value is the piecewise analytic bound.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{
    analytic_quantum_max_tripartite_bipartition, bloch_observable, optimal_chsh_strategy, quantum_value,
    Observable, QuantumError, QuantumStrategy,
};
use crate::classical::check_canonical;
use crate::game::{chsh_game, coefficient_table, BiasVector, CoefficientTable, GameError, GameSpec};
use crate::linalg::{ComplexMatrix, StateVector};

/// XOR game whose Bell function is `CHSH′(p,q)`: sign pattern `(+, −, −, −)`.
pub fn chsh_prime_game() -> GameSpec {
    GameSpec::xor_game("chsh-prime", 2, vec![0, 1, 1, 1]).expect("two parties")
}

/// Bob's rotation `diag(1, −i)`.
pub fn bob_rotation() -> ComplexMatrix {
    ComplexMatrix::from_rows(
        2,
        2,
        vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, -1.0),
        ],
    )
}

fn charlie_angles() -> [f64; 2] {
    // C0 = σ_x at azimuth 0, C1 = −σ_y at azimuth 3π/2
    [0.0, 3.0 * FRAC_PI_2]
}

const SCAN_POINTS: usize = 3600;

/// GHZ state with `C0 = σ_x`, `C1 = −σ_y`, and Alice/Bob observables in the
/// x–y plane maximizing the biased Svetlichny value for that Charlie choice.
///
/// On GHZ, `⟨A(α) ⊗ B(β) ⊗ C(γ)⟩ = cos(α + β + γ)` for x–y plane observables
/// at azimuths `α, β, γ`, so the value is `Re Σ_st c_st e^{−i(α_s+β_t)}` with
/// `c_st = Σ_u w_stu e^{−iγ_u}`. Alice's best response is closed form, and
/// after it the objective depends only on `δ = β1 − β0`; that one-dimensional
/// problem is solved by a dense scan and golden-section refinement.
pub fn ghz_bipartition_strategy(bias: &BiasVector) -> Result<QuantumStrategy, QuantumError> {
    if bias.parties() != 3 {
        return Err(GameError::ArityMismatch { game: 3, bias: bias.parties() }.into());
    }
    check_canonical(bias)?;
    let table = coefficient_table(&crate::game::svetlichny_game(), bias)?;
    let gamma = charlie_angles();
    let mut c = [[Complex64::new(0.0, 0.0); 2]; 2];
    for (s, row) in c.iter_mut().enumerate() {
        for (t, entry) in row.iter_mut().enumerate() {
            for (u, g) in gamma.iter().enumerate() {
                *entry += Complex64::from_polar(table.weight(s << 2 | t << 1 | u), -g);
            }
        }
    }
    let alice_field = |delta: f64| -> [Complex64; 2] {
        let rot = Complex64::from_polar(1.0, -delta);
        [c[0][0] + c[0][1] * rot, c[1][0] + c[1][1] * rot]
    };
    let objective = |delta: f64| alice_field(delta).iter().map(|z| z.norm()).sum::<f64>();

    let step = TAU / SCAN_POINTS as f64;
    let mut best_k = 0;
    let mut best_v = f64::NEG_INFINITY;
    for k in 0..SCAN_POINTS {
        let v = objective(k as f64 * step);
        if v > best_v {
            best_v = v;
            best_k = k;
        }
    }
    let center = best_k as f64 * step;
    let delta = golden_max(&objective, center - step, center + step);
    let delta = if objective(delta) >= best_v { delta } else { center };

    let field = alice_field(delta);
    let alpha = [field[0].arg(), field[1].arg()];
    let beta = [0.0, delta];

    let plane = |phi: f64| bloch_observable(FRAC_PI_2, phi.rem_euclid(TAU));
    QuantumStrategy::new(
        StateVector::ghz(3),
        vec![
            [plane(alpha[0]), plane(alpha[1])],
            [plane(beta[0]), plane(beta[1])],
            [plane(gamma[0]), plane(gamma[1])],
        ],
    )
}

fn golden_max<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if hi - lo < 1e-15 {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    0.5 * (lo + hi)
}

/// The bipartition model: Alice and Bob hold `|φ+⟩` when Charlie measures
/// `C0` and `|φ̃+⟩` when he measures `C1`, and use separately optimized
/// observables in each branch.
#[derive(Debug, Clone, Serialize)]
pub struct BipartitionModel {
    pub bias: BiasVector,
    /// CHSH(p,q) branch on `|φ+⟩`.
    pub chsh_branch: QuantumStrategy,
    pub chsh_value: f64,
    /// CHSH′(p,q) branch on `|φ̃+⟩`, Bob's observables conjugated by `U_B`.
    pub chsh_prime_branch: QuantumStrategy,
    pub chsh_prime_value: f64,
    /// `r · chsh_value + (1−r) · chsh_prime_value`.
    pub value: f64,
    /// Closed-form bound for comparison.
    pub analytic: f64,
}

pub fn bipartition_model(bias: &BiasVector) -> Result<BipartitionModel, QuantumError> {
    let (analytic, _) = analytic_quantum_max_tripartite_bipartition(bias)?;
    let (p, q, r) = (bias.p, bias.q, bias.r.expect("three parties"));
    let ab = BiasVector::bipartite(p, q)?;

    let (chsh_branch, _) = optimal_chsh_strategy(p, q)?;
    let chsh_value = quantum_value(&coefficient_table(&chsh_game(), &ab)?, &chsh_branch)?;

    // CHSH′(p,q)[−A; −C1, C0] = CHSH(p,1−q)[A; C0, C1]
    let (mapped, _) = optimal_chsh_strategy(p, 1.0 - q)?;
    let u_b = bob_rotation();
    let a = &mapped.observables()[0];
    let c = &mapped.observables()[1];
    let chsh_prime_branch = QuantumStrategy::new(
        StateVector::bell_pair(Complex64::new(0.0, 1.0))?,
        vec![
            [a[0].negated(), a[1].negated()],
            [c[1].negated().conjugated(&u_b)?, c[0].conjugated(&u_b)?],
        ],
    )?;
    let chsh_prime_value = quantum_value(&coefficient_table(&chsh_prime_game(), &ab)?, &chsh_prime_branch)?;

    Ok(BipartitionModel {
        bias: *bias,
        chsh_branch,
        chsh_value,
        chsh_prime_branch,
        chsh_prime_value,
        value: r * chsh_value + (1.0 - r) * chsh_prime_value,
        analytic,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceReport {
    pub bias: BiasVector,
    pub samples: usize,
    /// Largest `| |⟨CHSH⟩_{φ±}| − |⟨CHSH′⟩_{φ̃±}| |` over samples and both signs.
    pub max_discrepancy: f64,
    /// Largest `|⟨CHSH⟩_{φ±} + ⟨CHSH′⟩_{φ̃±}|`: the mapped forms are exact negatives.
    pub max_signed_discrepancy: f64,
    /// `|max CHSH′ on φ̃+ − max CHSH on φ+|` using the constructive optima.
    pub optimum_gap: f64,
}

/// Checks the CHSH/CHSH′ equivalence on random observables.
///
/// For Alice observables `A` and Bob observables `C`, Bob's CHSH′ observables
/// are `U_B†(−C1)U_B` and `U_B† C0 U_B` (the mapping `B0 → B1`, `B1 → −B0`
/// read backwards), and the CHSH side is evaluated at `q → 1 − q`.
pub fn verify_chsh_prime_equivalence(
    bias: &BiasVector,
    samples: usize,
    seed: u64,
) -> Result<EquivalenceReport, QuantumError> {
    if bias.parties() != 2 {
        return Err(GameError::ArityMismatch { game: 2, bias: bias.parties() }.into());
    }
    let (p, q) = (bias.p, bias.q);
    let chsh_table = coefficient_table(&chsh_game(), &BiasVector::bipartite(p, 1.0 - q)?)?;
    let prime_table = coefficient_table(&chsh_prime_game(), bias)?;
    let u_b = bob_rotation();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_discrepancy: f64 = 0.0;
    let mut max_signed: f64 = 0.0;

    for _ in 0..samples {
        let obs: Vec<Observable> = (0..4).map(|_| random_axis(&mut rng)).collect();
        let (d, s) = compare(&chsh_table, &prime_table, &u_b, [&obs[0], &obs[1]], [&obs[2], &obs[3]])?;
        max_discrepancy = max_discrepancy.max(d);
        max_signed = max_signed.max(s);
    }

    let (opt, _) = optimal_chsh_strategy(p, q)?;
    let plain = quantum_value(&coefficient_table(&chsh_game(), bias)?, &opt)?;
    let model = bipartition_model_bipartite(p, q)?;
    Ok(EquivalenceReport {
        bias: *bias,
        samples,
        max_discrepancy,
        max_signed_discrepancy: max_signed,
        optimum_gap: (model - plain).abs(),
    })
}

fn bipartition_model_bipartite(p: f64, q: f64) -> Result<f64, QuantumError> {
    // reuse the CHSH′ branch construction with r = 0
    let (mapped, _) = optimal_chsh_strategy(p, 1.0 - q)?;
    let u_b = bob_rotation();
    let a = &mapped.observables()[0];
    let c = &mapped.observables()[1];
    let branch = QuantumStrategy::new(
        StateVector::bell_pair(Complex64::new(0.0, 1.0))?,
        vec![
            [a[0].negated(), a[1].negated()],
            [c[1].negated().conjugated(&u_b)?, c[0].conjugated(&u_b)?],
        ],
    )?;
    quantum_value(&coefficient_table(&chsh_prime_game(), &BiasVector::bipartite(p, q)?)?, &branch)
}

/// Returns `(| |lhs| − |rhs| |, |lhs + rhs|)` maximized over `φ±`.
pub(crate) fn compare(
    chsh_table: &CoefficientTable,
    prime_table: &CoefficientTable,
    u_b: &ComplexMatrix,
    alice: [&Observable; 2],
    bob: [&Observable; 2],
) -> Result<(f64, f64), QuantumError> {
    let bob_prime = [bob[1].negated().conjugated(u_b)?, bob[0].conjugated(u_b)?];
    let mut worst = (0.0f64, 0.0f64);
    for sign in [1.0, -1.0] {
        let phi = StateVector::bell_pair(Complex64::new(sign, 0.0))?;
        let phi_tilde = StateVector::bell_pair(Complex64::new(0.0, sign))?;
        let lhs = quantum_value(
            chsh_table,
            &QuantumStrategy::new(phi, vec![[alice[0].clone(), alice[1].clone()], [bob[0].clone(), bob[1].clone()]])?,
        )?;
        let rhs = quantum_value(
            prime_table,
            &QuantumStrategy::new(
                phi_tilde,
                vec![[alice[0].clone(), alice[1].clone()], bob_prime.clone()],
            )?,
        )?;
        worst.0 = worst.0.max((lhs.abs() - rhs.abs()).abs());
        worst.1 = worst.1.max((lhs + rhs).abs());
    }
    Ok(worst)
}

fn random_axis(rng: &mut ChaCha8Rng) -> Observable {
    let z: f64 = rng.gen_range(-1.0..=1.0);
    let phi: f64 = rng.gen_range(0.0..2.0 * PI);
    bloch_observable(z.acos(), phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::svetlichny_game;
    use crate::linalg::{expectation, kron_all, pauli};
    use std::f64::consts::FRAC_1_SQRT_2;

    fn b3(p: f64, q: f64, r: f64) -> BiasVector {
        BiasVector::tripartite(p, q, r).unwrap()
    }

    fn svet(b: &BiasVector) -> CoefficientTable {
        coefficient_table(&svetlichny_game(), b).unwrap()
    }

    /// Brute-force oracle: best GHZ value with Charlie fixed, by alternating
    /// closed-form responses from many starting points.
    fn ghz_fixed_charlie_oracle(b: &BiasVector) -> f64 {
        let t = svet(b);
        let gamma = charlie_angles();
        let val = |a: [f64; 2], be: [f64; 2]| -> f64 {
            (0..8)
                .map(|x| t.weight(x) * (a[x >> 2] + be[(x >> 1) & 1] + gamma[x & 1]).cos())
                .sum()
        };
        let mut best = f64::NEG_INFINITY;
        for i in 0..24 {
            for j in 0..24 {
                let mut a = [0.0, 0.0];
                let mut be = [i as f64 * TAU / 24.0, j as f64 * TAU / 24.0];
                for _ in 0..400 {
                    for s in 0..2 {
                        let z: Complex64 = (0..4)
                            .map(|k| {
                                let (tt, u) = (k >> 1, k & 1);
                                Complex64::from_polar(t.weight(s << 2 | tt << 1 | u), -(be[tt] + gamma[u]))
                            })
                            .sum();
                        a[s] = z.arg();
                    }
                    for tt in 0..2 {
                        let z: Complex64 = (0..4)
                            .map(|k| {
                                let (s, u) = (k >> 1, k & 1);
                                Complex64::from_polar(t.weight(s << 2 | tt << 1 | u), -(a[s] + gamma[u]))
                            })
                            .sum();
                        be[tt] = z.arg();
                    }
                }
                best = best.max(val(a, be));
            }
        }
        best
    }

    #[test]
    fn ghz_correlator_is_cosine_of_azimuth_sum() {
        let ghz = StateVector::ghz(3);
        let (a, b, c) = (0.4, 1.3, 3.0 * FRAC_PI_2);
        let op = kron_all([
            bloch_observable(FRAC_PI_2, a).matrix(),
            bloch_observable(FRAC_PI_2, b).matrix(),
            bloch_observable(FRAC_PI_2, c).matrix(),
        ]);
        assert!((expectation(&ghz, &op).unwrap() - (a + b + c).cos()).abs() < 1e-12);
    }

    #[test]
    fn charlie_settings_prepare_the_bell_pairs() {
        // projecting Charlie onto the +1 eigenvector of σ_x leaves |φ+⟩,
        // and of −σ_y leaves (|00⟩ + i|11⟩)/√2 up to phase
        let ghz = StateVector::ghz(3);
        for (obs, phase) in [(pauli::x(), Complex64::new(1.0, 0.0)), (pauli::y().scale(-1.0), Complex64::new(0.0, 1.0))] {
            let e = crate::linalg::hermitian_eig(&obs).unwrap();
            let plus = e.vectors[0].amplitudes();
            let mut reduced = vec![Complex64::new(0.0, 0.0); 4];
            for ab in 0..4 {
                for cbit in 0..2 {
                    reduced[ab] += plus[cbit].conj() * ghz.amplitudes()[ab << 1 | cbit];
                }
            }
            let reduced = StateVector::normalized(reduced).unwrap();
            let target = StateVector::bell_pair(phase).unwrap();
            assert!((reduced.inner(&target).norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn unbiased_ghz_strategy_reaches_one_over_root_two() {
        let b = b3(0.5, 0.5, 0.5);
        let s = ghz_bipartition_strategy(&b).unwrap();
        assert!((quantum_value(&svet(&b), &s).unwrap() - FRAC_1_SQRT_2).abs() < 1e-9);
        let c = s.observables()[2].clone();
        assert!(c[0].matrix().max_abs_diff(&pauli::x()) < 1e-12);
        assert!(c[1].matrix().max_abs_diff(&pauli::y().scale(-1.0)) < 1e-12);
    }

    #[test]
    fn ghz_strategy_matches_brute_force_oracle() {
        for &(p, q, r) in &[(0.6, 0.6, 0.9), (0.95, 0.95, 0.7), (0.75, 0.75, 0.75), (0.5, 0.5, 0.8), (0.8, 0.6, 0.6)] {
            let b = b3(p, q, r);
            let got = quantum_value(&svet(&b), &ghz_bipartition_strategy(&b).unwrap()).unwrap();
            let oracle = ghz_fixed_charlie_oracle(&b);
            assert!((got - oracle).abs() < 1e-9, "({p},{q},{r}): {got} vs {oracle}");
        }
    }

    #[test]
    fn ghz_strategy_never_exceeds_bipartition_bound() {
        // with Charlie fixed, every term is bounded by √(r² + (1−r)²)·|w|,
        // and both branch values are bounded by the CHSH optimum
        for &(p, q, r) in &[(0.6, 0.6, 0.9), (0.95, 0.95, 0.7), (1.0, 1.0, 0.5), (0.7, 0.9, 0.6)] {
            let b = b3(p, q, r);
            let got = quantum_value(&svet(&b), &ghz_bipartition_strategy(&b).unwrap()).unwrap();
            let (bound, _) = analytic_quantum_max_tripartite_bipartition(&b).unwrap();
            assert!(got <= bound + 1e-12);
            assert!(got <= (r * r + (1.0 - r) * (1.0 - r)).sqrt() + 1e-12);
        }
    }

    #[test]
    fn bipartition_model_reaches_the_analytic_bound() {
        for &(p, q, r) in &[(0.5, 0.5, 0.5), (0.95, 0.95, 0.7), (0.6, 0.6, 0.9), (0.8, 0.625, 0.55), (1.0, 0.5, 1.0)] {
            let m = bipartition_model(&b3(p, q, r)).unwrap();
            assert!((m.chsh_value - m.analytic).abs() < 1e-12, "{m:?}");
            assert!((m.chsh_prime_value - m.analytic).abs() < 1e-12, "{m:?}");
            assert!((m.value - m.analytic).abs() < 1e-12);
        }
        let m = bipartition_model(&b3(0.95, 0.95, 0.7)).unwrap();
        assert!((m.value - 0.995).abs() < 1e-12);
        let m = bipartition_model(&b3(0.6, 0.6, 0.9)).unwrap();
        assert!((m.value - 2f64.sqrt() * 0.52).abs() < 1e-12);
    }

    #[test]
    fn equivalence_identity_holds() {
        let id_like = bloch_observable(0.0, 0.0);
        let chsh_t = coefficient_table(&chsh_game(), &BiasVector::bipartite(0.7, 0.4).unwrap()).unwrap();
        let prime_t = coefficient_table(&chsh_prime_game(), &BiasVector::bipartite(0.7, 0.6).unwrap()).unwrap();
        let (d, s) = compare(&chsh_t, &prime_t, &bob_rotation(), [&id_like, &id_like], [&id_like, &id_like]).unwrap();
        assert!(d < 1e-12 && s < 1e-12);

        let rep = verify_chsh_prime_equivalence(&BiasVector::bipartite(0.5, 0.5).unwrap(), 100, 3).unwrap();
        assert!(rep.max_discrepancy <= 1e-10);
        assert!(rep.max_signed_discrepancy <= 1e-10);
        assert!(rep.optimum_gap <= 1e-10);

        let rep = verify_chsh_prime_equivalence(&BiasVector::bipartite(0.73, 0.58).unwrap(), 100, 4).unwrap();
        assert!(rep.max_discrepancy <= 1e-10 && rep.optimum_gap <= 1e-10);
    }

    #[test]
    fn tsirelson_settings_on_both_sides() {
        // at p = q = ½ the mapped CHSH is again unbiased, so the optimal
        // Tsirelson observables give 1/√2 in magnitude on both sides
        let b = BiasVector::bipartite(0.5, 0.5).unwrap();
        let chsh_t = coefficient_table(&chsh_game(), &b).unwrap();
        let prime_t = coefficient_table(&chsh_prime_game(), &b).unwrap();
        let (s, _) = optimal_chsh_strategy(0.5, 0.5).unwrap();
        let a = &s.observables()[0];
        let c = &s.observables()[1];
        let lhs = quantum_value(&chsh_t, &s).unwrap();
        let u_b = bob_rotation();
        let rhs_strat = QuantumStrategy::new(
            StateVector::bell_pair(Complex64::new(0.0, 1.0)).unwrap(),
            vec![a.clone(), [c[1].negated().conjugated(&u_b).unwrap(), c[0].conjugated(&u_b).unwrap()]],
        )
        .unwrap();
        let rhs = quantum_value(&prime_t, &rhs_strat).unwrap();
        assert!((lhs - FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((rhs + FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn rotation_maps_tilde_states() {
        let u = crate::linalg::kron(&pauli::identity(), &bob_rotation());
        for sign in [1.0, -1.0] {
            let tilde = StateVector::bell_pair(Complex64::new(0.0, sign)).unwrap();
            let plain = StateVector::bell_pair(Complex64::new(sign, 0.0)).unwrap();
            let mapped = tilde.evolve(&u).unwrap();
            assert!((mapped.inner(&plain).norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn ghz_strategy_requires_canonical_bias() {
        assert!(ghz_bipartition_strategy(&b3(0.4, 0.6, 0.6)).is_err());
        assert!(ghz_bipartition_strategy(&BiasVector::bipartite(0.6, 0.6).unwrap()).is_err());
    }
}
