//! Behavior boxes `P(outcomes | settings)` and the bipartite no-signaling
//! polytope.
//!
//! Entry `(x, o)` of a box lives at index `x · 2ⁿ + o`, with setting and
//! outcome tuples packed as in [`crate::game`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classical::DeterministicStrategy;
use crate::game::{bit, parity, BiasVector, GameError, GameSpec};
use crate::simplex::{LinearProgram, LpError};

/// Tolerance of the normalization and no-signaling checks on constructed boxes.
pub const BOX_TOL: f64 = 1e-12;
/// Tolerance for accepting a box passed to [`game_value`].
pub const VALUE_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NsError {
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("box table has {0} entries, expected 16 or 64")]
    BadLength(usize),
    #[error("invalid box: {0}")]
    InvalidBox(String),
    #[error("box has {found} parties, expected {expected}")]
    ArityMismatch { expected: usize, found: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct BehaviorBox {
    parties: usize,
    table: Vec<f64>,
}

impl TryFrom<Vec<f64>> for BehaviorBox {
    type Error = NsError;
    fn try_from(table: Vec<f64>) -> Result<Self, NsError> {
        BehaviorBox::new(table)
    }
}

impl From<BehaviorBox> for Vec<f64> {
    fn from(b: BehaviorBox) -> Self {
        b.table
    }
}

impl BehaviorBox {
    /// Wraps a table without checking the constraints; see [`BehaviorBox::validate`].
    pub fn new(table: Vec<f64>) -> Result<Self, NsError> {
        let parties = match table.len() {
            16 => 2,
            64 => 3,
            n => return Err(NsError::BadLength(n)),
        };
        Ok(Self { parties, table })
    }

    pub fn from_fn<F: Fn(usize, usize) -> f64>(parties: usize, f: F) -> Result<Self, NsError> {
        if !(2..=3).contains(&parties) {
            return Err(GameError::UnsupportedParties(parties).into());
        }
        let k = 1 << parties;
        Self::new((0..k * k).map(|i| f(i / k, i % k)).collect())
    }

    pub fn uniform(parties: usize) -> Result<Self, NsError> {
        let w = 1.0 / (1 << parties) as f64;
        Self::from_fn(parties, |_, _| w)
    }

    pub fn parties(&self) -> usize {
        self.parties
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn prob(&self, settings: usize, outcomes: usize) -> f64 {
        self.table[settings << self.parties | outcomes]
    }

    /// Largest deviation of `Σ_o P(o|x)` from 1.
    pub fn normalization_error(&self) -> f64 {
        let k = 1 << self.parties;
        (0..k)
            .map(|x| ((0..k).map(|o| self.prob(x, o)).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Most negative entry, as a nonnegative number.
    pub fn negativity(&self) -> f64 {
        self.table.iter().map(|v| (-v).max(0.0)).fold(0.0, f64::max)
    }

    /// Largest dependence of a marginal on a setting whose outcome was summed
    /// out: for every party `k`, `Σ_{o_k} P(o|x)` must not depend on `x_k`.
    pub fn signaling_error(&self) -> f64 {
        let n = self.parties;
        let k = 1 << n;
        let mut worst: f64 = 0.0;
        for party in 0..n {
            let mask = 1 << (n - 1 - party);
            for x in (0..k).filter(|x| x & mask == 0) {
                for o in (0..k).filter(|o| o & mask == 0) {
                    let m0 = self.prob(x, o) + self.prob(x, o | mask);
                    let m1 = self.prob(x | mask, o) + self.prob(x | mask, o | mask);
                    worst = worst.max((m0 - m1).abs());
                }
            }
        }
        worst
    }

    pub fn validate(&self, tol: f64) -> Result<(), NsError> {
        let checks = [
            ("negative entry", self.negativity()),
            ("normalization", self.normalization_error()),
            ("signaling", self.signaling_error()),
        ];
        for (what, err) in checks {
            if err > tol {
                return Err(NsError::InvalidBox(format!("{what} violated by {err:e}")));
            }
        }
        Ok(())
    }

    /// `⟨Π_{k ∈ subset} (−1)^{o_k}⟩` at the given settings. `subset` is a
    /// party mask in the packed bit order (first party is the high bit).
    pub fn correlator(&self, subset: usize, settings: usize) -> f64 {
        let k = 1 << self.parties;
        (0..k)
            .map(|o| {
                let sign = if parity(o & subset) == 0 { 1.0 } else { -1.0 };
                sign * self.prob(settings, o)
            })
            .sum()
    }
}

/// PR box with rule `a ⊕ b = st ⊕ αs ⊕ βt ⊕ γ`.
pub fn pr_box(alpha: u8, beta: u8, gamma: u8) -> BehaviorBox {
    BehaviorBox::from_fn(2, |x, o| {
        let (s, t) = (bit(x, 0, 2) as u8, bit(x, 1, 2) as u8);
        let rule = (s & t) ^ (alpha & s) ^ (beta & t) ^ (gamma & 1);
        if parity(o) == rule {
            0.5
        } else {
            0.0
        }
    })
    .expect("two parties")
}

/// Tripartite box with uniform outputs obeying `a ⊕ b ⊕ c = st ⊕ tu ⊕ us`.
pub fn svetlichny_box() -> BehaviorBox {
    BehaviorBox::from_fn(3, |x, o| {
        let (s, t, u) = (bit(x, 0, 3), bit(x, 1, 3), bit(x, 2, 3));
        let rule = ((s & t) ^ (t & u) ^ (u & s)) as u8;
        if parity(o) == rule {
            0.25
        } else {
            0.0
        }
    })
    .expect("three parties")
}

pub fn deterministic_box(strategy: &DeterministicStrategy) -> BehaviorBox {
    BehaviorBox::from_fn(strategy.parties(), |x, o| if strategy.outcomes(x) == o { 1.0 } else { 0.0 })
        .expect("two or three parties")
}

/// The 24 extremal points of the bipartite binary polytope: 16 local
/// deterministic boxes followed by the 8 PR boxes.
pub fn bipartite_vertices() -> Vec<BehaviorBox> {
    let mut out: Vec<BehaviorBox> = DeterministicStrategy::all(2).map(|s| deterministic_box(&s)).collect();
    for code in 0..8u8 {
        out.push(pr_box(code >> 2 & 1, code >> 1 & 1, code & 1));
    }
    out
}

/// Objective vector `c` such that `c · table` is the winning probability.
pub fn win_objective(game: &GameSpec, bias: &BiasVector) -> Result<Vec<f64>, NsError> {
    bias.check_arity(game)?;
    let n = game.parties();
    let k = 1 << n;
    Ok((0..k * k)
        .map(|i| {
            let (x, o) = (i / k, i % k);
            if game.wins(x, o) {
                bias.joint(x)
            } else {
                0.0
            }
        })
        .collect())
}

/// Objective `Σ_x w_x ⟨(−1)^{⊕o}⟩_x` for an XOR-weighted functional.
pub fn xor_objective(weights: &[f64]) -> Vec<f64> {
    let k = weights.len();
    (0..k * k)
        .map(|i| {
            let (x, o) = (i / k, i % k);
            if parity(o) == 0 {
                weights[x]
            } else {
                -weights[x]
            }
        })
        .collect()
}

fn dot(c: &[f64], b: &BehaviorBox) -> f64 {
    c.iter().zip(b.table()).map(|(a, v)| a * v).sum()
}

pub fn game_value(bx: &BehaviorBox, game: &GameSpec, bias: &BiasVector) -> Result<f64, NsError> {
    if bx.parties() != game.parties() {
        return Err(NsError::ArityMismatch { expected: game.parties(), found: bx.parties() });
    }
    bx.validate(VALUE_TOL)?;
    let v = dot(&win_objective(game, bias)?, bx);
    Ok(v.clamp(0.0, 1.0))
}

/// Normalization and no-signaling rows over the 16 entries of a bipartite box.
///
/// Signaling rows: for each party, each own setting and outcome, the other
/// party's two settings give equal marginals. Four of the twelve rows are
/// linearly dependent; the solver drops them.
pub fn bipartite_lp(objective: Vec<f64>) -> Result<LinearProgram, NsError> {
    let mut lp = LinearProgram::new(objective);
    let idx = |x: usize, o: usize| x << 2 | o;
    for x in 0..4 {
        let mut row = vec![0.0; 16];
        for o in 0..4 {
            row[idx(x, o)] = 1.0;
        }
        lp.add_equality(row, 1.0)?;
    }
    for party in 0..2 {
        let own = 1 << (1 - party);
        let other = 1 << party;
        for own_setting in [0, own] {
            for own_outcome in [0, own] {
                let mut row = vec![0.0; 16];
                for other_outcome in [0, other] {
                    row[idx(own_setting, own_outcome | other_outcome)] += 1.0;
                    row[idx(own_setting | other, own_outcome | other_outcome)] -= 1.0;
                }
                lp.add_equality(row, 0.0)?;
            }
        }
    }
    Ok(lp)
}

/// Maximizes `objective · table` over bipartite no-signaling boxes.
pub fn ns_maximize_objective(objective: &[f64]) -> Result<(f64, BehaviorBox), NsError> {
    if objective.len() != 16 {
        return Err(NsError::BadLength(objective.len()));
    }
    let lp = bipartite_lp(objective.to_vec())?;
    let sol = lp.solve()?;
    let bx = BehaviorBox::new(sol.x)?;
    Ok((sol.value, bx))
}

pub fn ns_maximize(game: &GameSpec, bias: &BiasVector) -> Result<(f64, BehaviorBox), NsError> {
    if game.parties() != 2 {
        return Err(GameError::UnsupportedParties(game.parties()).into());
    }
    let (value, bx) = ns_maximize_objective(&win_objective(game, bias)?)?;
    Ok((value.clamp(0.0, 1.0), bx))
}

pub fn ns_vertex_oracle_objective(objective: &[f64]) -> Result<(f64, usize), NsError> {
    if objective.len() != 16 {
        return Err(NsError::BadLength(objective.len()));
    }
    let mut best = (f64::NEG_INFINITY, 0);
    for (i, v) in bipartite_vertices().iter().enumerate() {
        let val = dot(objective, v);
        if val > best.0 {
            best = (val, i);
        }
    }
    Ok(best)
}

pub fn ns_vertex_oracle(game: &GameSpec, bias: &BiasVector) -> Result<f64, NsError> {
    if game.parties() != 2 {
        return Err(GameError::UnsupportedParties(game.parties()).into());
    }
    Ok(ns_vertex_oracle_objective(&win_objective(game, bias)?)?.0)
}

/// No-signaling winning probability: the LP optimum for two parties, and the
/// Svetlichny-box witness value for three.
pub fn ns_value(game: &GameSpec, bias: &BiasVector) -> Result<f64, NsError> {
    match game.parties() {
        2 => Ok(ns_maximize(game, bias)?.0),
        3 => game_value(&svetlichny_box(), game, bias),
        n => Err(GameError::UnsupportedParties(n).into()),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LpOracleReport {
    pub samples: usize,
    pub max_gap: f64,
}

/// LP versus vertex enumeration on random XOR objectives with weights in [−1, 1].
pub fn lp_vertex_agreement(samples: usize, seed: u64) -> Result<LpOracleReport, NsError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_gap: f64 = 0.0;
    for _ in 0..samples {
        let w: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let c = xor_objective(&w);
        let (lp, _) = ns_maximize_objective(&c)?;
        let (vx, _) = ns_vertex_oracle_objective(&c)?;
        max_gap = max_gap.max((lp - vx).abs());
    }
    Ok(LpOracleReport { samples, max_gap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::classical_max;
    use crate::game::{chsh_game, svetlichny_game};
    use proptest::prelude::*;

    fn b2(p: f64, q: f64) -> BiasVector {
        BiasVector::bipartite(p, q).unwrap()
    }

    #[test]
    fn constructed_boxes_are_valid() {
        for v in bipartite_vertices() {
            v.validate(BOX_TOL).unwrap();
        }
        svetlichny_box().validate(BOX_TOL).unwrap();
        BehaviorBox::uniform(2).unwrap().validate(BOX_TOL).unwrap();
        for s in DeterministicStrategy::all(3) {
            deterministic_box(&s).validate(BOX_TOL).unwrap();
        }
    }

    #[test]
    fn pr_box_examples() {
        let g = chsh_game();
        for &(p, q) in &[(0.5, 0.5), (0.9, 0.3), (1.0, 0.0)] {
            assert!((game_value(&pr_box(0, 0, 0), &g, &b2(p, q)).unwrap() - 1.0).abs() < 1e-15);
            assert_eq!(game_value(&pr_box(0, 0, 1), &g, &b2(p, q)).unwrap(), 0.0);
        }
        let pr = pr_box(0, 0, 0);
        for x in 0..4 {
            assert_eq!(pr.prob(x, 0) + pr.prob(x, 1), 0.5);
        }
    }

    #[test]
    fn svetlichny_box_correlators() {
        let bx = svetlichny_box();
        for x in 0..8 {
            for subset in 1..7usize {
                assert!(bx.correlator(subset, x).abs() <= 1e-15);
            }
            let (s, t, u) = (x >> 2, (x >> 1) & 1, x & 1);
            let expected = if (s & t) ^ (t & u) ^ (u & s) == 0 { 1.0 } else { -1.0 };
            assert_eq!(bx.correlator(7, x), expected);
        }
        let v = game_value(&bx, &svetlichny_game(), &BiasVector::tripartite(0.5, 0.5, 0.5).unwrap()).unwrap();
        assert_eq!(v, 1.0);
    }

    #[test]
    fn game_value_examples() {
        let g = chsh_game();
        assert!((game_value(&BehaviorBox::uniform(2).unwrap(), &g, &b2(0.7, 0.2)).unwrap() - 0.5).abs() < 1e-15);
        let zeros = deterministic_box(&DeterministicStrategy::from_code(2, 0));
        assert!((game_value(&zeros, &g, &b2(0.5, 0.5)).unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn invalid_boxes_are_rejected() {
        let mut t = pr_box(0, 0, 0).table().to_vec();
        t[0] += 0.1;
        t[1] -= 0.1;
        let bad = BehaviorBox::new(t).unwrap();
        assert!(bad.signaling_error() > 0.05);
        assert!(game_value(&bad, &chsh_game(), &b2(0.5, 0.5)).is_err());
        assert!(BehaviorBox::new(vec![0.0; 10]).is_err());
        assert!(game_value(&svetlichny_box(), &chsh_game(), &b2(0.5, 0.5)).is_err());
    }

    #[test]
    fn lp_examples() {
        let (v, bx) = ns_maximize(&chsh_game(), &b2(0.5, 0.5)).unwrap();
        assert!((v - 1.0).abs() < 1e-9);
        bx.validate(1e-9).unwrap();
        assert!((ns_vertex_oracle(&chsh_game(), &b2(0.5, 0.5)).unwrap() - 1.0).abs() < 1e-12);

        let trivial = GameSpec::xor_game("trivial", 2, vec![0; 4]).unwrap();
        assert!((ns_maximize(&trivial, &b2(0.3, 0.8)).unwrap().0 - 1.0).abs() < 1e-9);

        let complement = GameSpec::xor_game("complement", 2, vec![1, 1, 1, 0]).unwrap();
        let c = win_objective(&complement, &b2(0.6, 0.7)).unwrap();
        let (v, arg) = ns_vertex_oracle_objective(&c).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        assert_eq!(bipartite_vertices()[arg], pr_box(0, 0, 1));
        assert!(ns_maximize(&svetlichny_game(), &BiasVector::tripartite(0.5, 0.5, 0.5).unwrap()).is_err());
    }

    #[test]
    fn local_vertices_reproduce_classical_max() {
        let g = chsh_game();
        for &(p, q) in &[(0.5, 0.5), (0.7, 0.9), (0.2, 0.6)] {
            let c = win_objective(&g, &b2(p, q)).unwrap();
            let local = bipartite_vertices()[..16].iter().map(|v| dot(&c, v)).fold(f64::NEG_INFINITY, f64::max);
            let cl = classical_max(&g, &b2(p, q)).unwrap().max_probability;
            assert!((local - cl).abs() < 1e-15);
        }
    }

    #[test]
    fn lp_matches_vertices_on_random_objectives() {
        let rep = lp_vertex_agreement(100, 11).unwrap();
        assert!(rep.max_gap <= 1e-9, "{rep:?}");
    }

    #[test]
    fn json_is_flat_array() {
        let s = serde_json::to_string(&pr_box(0, 0, 0)).unwrap();
        assert!(s.starts_with("[0.5,0.0,0.0,0.5"));
        let back: BehaviorBox = serde_json::from_str(&s).unwrap();
        assert_eq!(back, pr_box(0, 0, 0));
        assert!(serde_json::from_str::<BehaviorBox>("[0.5]").is_err());
    }

    proptest! {
        #[test]
        fn lp_equals_vertex_oracle(c in proptest::collection::vec(-1.0f64..1.0, 16)) {
            let (lp, bx) = ns_maximize_objective(&c).unwrap();
            let (vx, _) = ns_vertex_oracle_objective(&c).unwrap();
            prop_assert!((lp - vx).abs() <= 1e-9, "{} vs {}", lp, vx);
            prop_assert!(bx.validate(1e-9).is_ok());
        }

        #[test]
        fn pr_box_wins_chsh_for_every_bias(p in 0.0f64..=1.0, q in 0.0f64..=1.0) {
            prop_assert!((game_value(&pr_box(0, 0, 0), &chsh_game(), &b2(p, q)).unwrap() - 1.0).abs() < 1e-15);
            let (v, _) = ns_maximize(&chsh_game(), &b2(p, q)).unwrap();
            prop_assert!((v - 1.0).abs() < 1e-9);
        }
    }
}
