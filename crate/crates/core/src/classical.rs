//! Local deterministic strategies and the exact classical optimum.

use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use crate::game::{bit, BiasVector, GameError, GameSpec};

/// Two evaluations closer than this are reported as tied maximizers.
const TIE_TOL: f64 = 1e-15;

/// One outcome function per party, packed two bits per party.
///
/// Party `k` occupies bits `2(n−1−k)..2(n−1−k)+1`; within a party the high
/// bit is the answer to setting 0 and the low bit the answer to setting 1.
/// Code 0 is the strategy that always answers 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct DeterministicStrategy {
    code: u8,
    #[serde(skip)]
    parties: u8,
}

impl DeterministicStrategy {
    pub fn from_code(parties: usize, code: u8) -> Self {
        assert!((2..=3).contains(&parties));
        assert!((code as usize) < Self::count(parties), "code out of range");
        Self {
            code,
            parties: parties as u8,
        }
    }

    /// Builds a strategy from per-party `[answer to setting 0, answer to setting 1]`.
    pub fn from_answers(answers: &[[u8; 2]]) -> Self {
        let n = answers.len();
        let code = answers.iter().enumerate().fold(0u8, |acc, (k, a)| {
            acc | ((a[0] << 1 | a[1]) << (2 * (n - 1 - k)))
        });
        Self::from_code(n, code)
    }

    pub fn count(parties: usize) -> usize {
        1 << (2 * parties)
    }

    pub fn all(parties: usize) -> impl Iterator<Item = Self> {
        (0..Self::count(parties)).map(move |c| Self::from_code(parties, c as u8))
    }

    pub fn code(&self) -> u8 {
        self.code
    }

    pub fn parties(&self) -> usize {
        self.parties as usize
    }

    pub fn answer(&self, party: usize, setting: usize) -> u8 {
        let n = self.parties();
        let pair = (self.code >> (2 * (n - 1 - party))) & 0b11;
        (pair >> (1 - setting)) & 1
    }

    pub fn answers(&self) -> Vec<[u8; 2]> {
        (0..self.parties())
            .map(|k| [self.answer(k, 0), self.answer(k, 1)])
            .collect()
    }

    /// Packed outcome tuple produced on a packed setting tuple.
    pub fn outcomes(&self, settings: usize) -> usize {
        let n = self.parties();
        (0..n).fold(0, |acc, k| {
            acc << 1 | self.answer(k, bit(settings, k, n)) as usize
        })
    }
}

/// Winning probability of a deterministic strategy.
pub fn evaluate_strategy(
    game: &GameSpec,
    bias: &BiasVector,
    strat: &DeterministicStrategy,
) -> Result<f64, GameError> {
    bias.check_arity(game)?;
    if strat.parties() != game.parties() {
        return Err(GameError::ArityMismatch {
            game: game.parties(),
            bias: strat.parties(),
        });
    }
    Ok((0..game.setting_count())
        .filter(|&x| game.wins(x, strat.outcomes(x)))
        .map(|x| bias.joint(x))
        .sum())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalReport {
    pub max_probability: f64,
    /// Every maximizer, ordered by code.
    pub argmax_strategies: Vec<DeterministicStrategy>,
    pub bias: BiasVector,
}

impl ClassicalReport {
    pub fn bell_value(&self) -> f64 {
        2.0 * self.max_probability - 1.0
    }
}

impl Serialize for ClassicalReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(None)?;
        map.serialize_entry("max", &self.max_probability)?;
        map.serialize_entry("strategies", &self.argmax_strategies)?;
        map.serialize_entry("p", &self.bias.p)?;
        map.serialize_entry("q", &self.bias.q)?;
        if let Some(r) = self.bias.r {
            map.serialize_entry("r", &r)?;
        }
        map.end()
    }
}

/// Exhaustive maximum over all `4^parties` deterministic strategies.
pub fn classical_max(game: &GameSpec, bias: &BiasVector) -> Result<ClassicalReport, GameError> {
    bias.check_arity(game)?;
    let scored: Vec<(DeterministicStrategy, f64)> = DeterministicStrategy::all(game.parties())
        .map(|s| {
            let v = evaluate_strategy(game, bias, &s).expect("arity checked");
            (s, v)
        })
        .collect();
    let best = scored.iter().map(|&(_, v)| v).fold(f64::NEG_INFINITY, f64::max);
    let argmax_strategies = scored
        .iter()
        .filter(|&&(_, v)| best - v <= TIE_TOL)
        .map(|&(s, _)| s)
        .collect();
    Ok(ClassicalReport {
        max_probability: best,
        argmax_strategies,
        bias: *bias,
    })
}

/// Closed-form classical optimum `1 − (1−p)(1−q)`, valid for bias components
/// in `[½, 1]`.
///
/// For three parties this is the value of the bipartition model, where
/// Alice and Bob may re-optimise for each of Charlie's settings; it is not
/// the fully local optimum in general (see [`classical_max`]).
pub fn classical_max_analytic(game: &GameSpec, bias: &BiasVector) -> Result<f64, GameError> {
    bias.check_arity(game)?;
    check_canonical(bias)?;
    Ok(1.0 - (1.0 - bias.p) * (1.0 - bias.q))
}

pub(crate) fn check_canonical(bias: &BiasVector) -> Result<(), GameError> {
    for (name, value) in ["p", "q", "r"].into_iter().zip(bias.components()) {
        if !(0.5..=1.0).contains(&value) {
            return Err(GameError::OutsideCanonicalQuadrant { name, value });
        }
    }
    Ok(())
}
