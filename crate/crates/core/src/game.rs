//! Biased XOR games with binary settings and outcomes.
//!
//! Setting tuples and outcome tuples are packed into integers in
//! lexicographic order with the first party as the most significant bit,
//! so `(s, t)` maps to `2s + t` and `(s, t, u)` to `4s + 2t + u`. That
//! order is used everywhere: coefficient tables, behavior boxes, CSV.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GameError {
    #[error("game has {game} parties but the bias vector has {bias} components")]
    ArityMismatch { game: usize, bias: usize },
    #[error("bias component {name} = {value} is outside [0, 1]")]
    BiasOutOfRange { name: &'static str, value: f64 },
    #[error("Bell value {0} is outside [-1, 1]")]
    BellValueOutOfRange(f64),
    #[error("unsupported party count {0} (expected 2 or 3)")]
    UnsupportedParties(usize),
    #[error("bias component {name} = {value} is outside the canonical range [0.5, 1]")]
    OutsideCanonicalQuadrant { name: &'static str, value: f64 },
    #[error("unknown game {0:?} (expected \"chsh\" or \"svetlichny\")")]
    UnknownGame(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GameKind {
    Chsh,
    Svetlichny,
}

impl GameKind {
    pub fn parties(self) -> usize {
        match self {
            GameKind::Chsh => 2,
            GameKind::Svetlichny => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GameKind::Chsh => "chsh",
            GameKind::Svetlichny => "svetlichny",
        }
    }
}

impl std::str::FromStr for GameKind {
    type Err = GameError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "chsh" => Ok(GameKind::Chsh),
            "svetlichny" => Ok(GameKind::Svetlichny),
            other => Err(GameError::UnknownGame(other.to_string())),
        }
    }
}

/// An XOR game: the team wins on settings `x` iff the XOR of all outcomes
/// equals `target[x]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameSpec {
    name: String,
    parties: usize,
    target: Vec<u8>,
}

impl GameSpec {
    /// Builds a game from its parity target, one bit per setting tuple.
    pub fn xor_game(name: impl Into<String>, parties: usize, target: Vec<u8>) -> Result<Self, GameError> {
        if !(2..=3).contains(&parties) {
            return Err(GameError::UnsupportedParties(parties));
        }
        assert_eq!(target.len(), 1 << parties, "one target bit per setting tuple");
        assert!(target.iter().all(|&b| b <= 1), "target bits must be 0 or 1");
        Ok(Self {
            name: name.into(),
            parties,
            target,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn parties(&self) -> usize {
        self.parties
    }

    pub fn setting_count(&self) -> usize {
        1 << self.parties
    }

    pub fn outcome_count(&self) -> usize {
        1 << self.parties
    }

    /// Winning parity for a packed setting tuple.
    pub fn target(&self, settings: usize) -> u8 {
        self.target[settings]
    }

    pub fn wins(&self, settings: usize, outcomes: usize) -> bool {
        parity(outcomes) == self.target[settings]
    }

    pub fn kind(&self) -> Option<GameKind> {
        if *self == chsh_game() {
            Some(GameKind::Chsh)
        } else if *self == svetlichny_game() {
            Some(GameKind::Svetlichny)
        } else {
            None
        }
    }

    pub fn from_kind(kind: GameKind) -> Self {
        match kind {
            GameKind::Chsh => chsh_game(),
            GameKind::Svetlichny => svetlichny_game(),
        }
    }
}

pub fn parity(bits: usize) -> u8 {
    (bits.count_ones() & 1) as u8
}

/// Bit of `party` inside a packed tuple over `parties` parties.
pub fn bit(tuple: usize, party: usize, parties: usize) -> usize {
    (tuple >> (parties - 1 - party)) & 1
}

/// Win iff `a ⊕ b = s·t`.
pub fn chsh_game() -> GameSpec {
    let target = (0..4)
        .map(|x| (bit(x, 0, 2) & bit(x, 1, 2)) as u8)
        .collect();
    GameSpec::xor_game("chsh", 2, target).expect("two parties")
}

/// Win iff `a ⊕ b ⊕ c = st ⊕ tu ⊕ us`.
pub fn svetlichny_game() -> GameSpec {
    let target = (0..8)
        .map(|x| {
            let (s, t, u) = (bit(x, 0, 3), bit(x, 1, 3), bit(x, 2, 3));
            ((s & t) ^ (t & u) ^ (u & s)) as u8
        })
        .collect();
    GameSpec::xor_game("svetlichny", 3, target).expect("three parties")
}

/// The winning filter: 1 if the outcomes win on these settings, else 0.
pub fn filter_v(game: &GameSpec, settings: usize, outcomes: usize) -> u8 {
    game.wins(settings, outcomes) as u8
}

/// Probabilities of choosing setting 0, one per party.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasVector {
    pub p: f64,
    pub q: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
}

impl BiasVector {
    pub fn bipartite(p: f64, q: f64) -> Result<Self, GameError> {
        Self::new(p, q, None)
    }

    pub fn tripartite(p: f64, q: f64, r: f64) -> Result<Self, GameError> {
        Self::new(p, q, Some(r))
    }

    pub fn new(p: f64, q: f64, r: Option<f64>) -> Result<Self, GameError> {
        check_prob("p", p)?;
        check_prob("q", q)?;
        if let Some(r) = r {
            check_prob("r", r)?;
        }
        Ok(Self { p, q, r })
    }

    pub fn parties(&self) -> usize {
        if self.r.is_some() {
            3
        } else {
            2
        }
    }

    pub fn components(&self) -> Vec<f64> {
        let mut v = vec![self.p, self.q];
        v.extend(self.r);
        v
    }

    pub fn from_components(c: &[f64]) -> Result<Self, GameError> {
        match *c {
            [p, q] => Self::bipartite(p, q),
            [p, q, r] => Self::tripartite(p, q, r),
            _ => Err(GameError::UnsupportedParties(c.len())),
        }
    }

    /// Probability that `party` picks `setting`.
    pub fn marginal(&self, party: usize, setting: usize) -> f64 {
        let x = match party {
            0 => self.p,
            1 => self.q,
            _ => self.r.expect("no third component"),
        };
        if setting == 0 {
            x
        } else {
            1.0 - x
        }
    }

    /// Product probability of a packed setting tuple.
    pub fn joint(&self, settings: usize) -> f64 {
        let n = self.parties();
        (0..n)
            .map(|k| self.marginal(k, bit(settings, k, n)))
            .product()
    }

    pub fn check_arity(&self, game: &GameSpec) -> Result<(), GameError> {
        if self.parties() != game.parties() {
            return Err(GameError::ArityMismatch {
                game: game.parties(),
                bias: self.parties(),
            });
        }
        Ok(())
    }
}

fn check_prob(name: &'static str, value: f64) -> Result<(), GameError> {
    if !(0.0..=1.0).contains(&value) {
        return Err(GameError::BiasOutOfRange { name, value });
    }
    Ok(())
}

/// Input to the CLI and report files: `{"game": "chsh", "p": .., "q": ..}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GameConfig {
    pub game: GameKind,
    #[serde(flatten)]
    pub bias: BiasVector,
}

impl GameConfig {
    pub fn validate(&self) -> Result<(), GameError> {
        let b = self.bias;
        BiasVector::new(b.p, b.q, b.r)?;
        b.check_arity(&GameSpec::from_kind(self.game))
    }
}

/// Signed Bell-function coefficients, one per setting tuple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientTable {
    parties: usize,
    weights: Vec<f64>,
}

impl CoefficientTable {
    /// Arbitrary signed weights; used for perturbation tests.
    pub fn from_weights(parties: usize, weights: Vec<f64>) -> Self {
        assert_eq!(weights.len(), 1 << parties);
        Self { parties, weights }
    }

    pub fn parties(&self) -> usize {
        self.parties
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, settings: usize) -> f64 {
        self.weights[settings]
    }

    pub fn abs_sum(&self) -> f64 {
        self.weights.iter().map(|w| w.abs()).sum()
    }

    /// `Σ weight · correlator` for per-setting full correlators.
    pub fn bell_value(&self, correlators: &[f64]) -> f64 {
        assert_eq!(correlators.len(), self.weights.len());
        self.weights.iter().zip(correlators).map(|(w, c)| w * c).sum()
    }
}

/// `weight(x) = p(x) · (−1)^{target(x)}`.
pub fn coefficient_table(game: &GameSpec, bias: &BiasVector) -> Result<CoefficientTable, GameError> {
    bias.check_arity(game)?;
    let weights = (0..game.setting_count())
        .map(|x| {
            let sign = if game.target(x) == 0 { 1.0 } else { -1.0 };
            sign * bias.joint(x)
        })
        .collect();
    Ok(CoefficientTable {
        parties: game.parties(),
        weights,
    })
}

/// `P = (1 + ⟨Bell⟩)/2`.
pub fn winning_probability_identity(bell_value: f64) -> Result<f64, GameError> {
    // a hair of slack for values computed by eigen-solvers
    if !(bell_value.abs() <= 1.0 + 1e-12) {
        return Err(GameError::BellValueOutOfRange(bell_value));
    }
    Ok((1.0 + bell_value) / 2.0)
}

/// Inverse of [`winning_probability_identity`].
pub fn bell_value_from_probability(probability: f64) -> f64 {
    2.0 * probability - 1.0
}

/// Winning probability computed straight from a conditional distribution
/// `prob(settings, outcomes)`, summing the winning outcomes.
pub fn winning_probability_direct<F>(game: &GameSpec, bias: &BiasVector, prob: F) -> f64
where
    F: Fn(usize, usize) -> f64,
{
    (0..game.setting_count())
        .map(|x| {
            let wins: f64 = (0..game.outcome_count())
                .filter(|&o| game.wins(x, o))
                .map(|o| prob(x, o))
                .sum();
            bias.joint(x) * wins
        })
        .sum()
}
