//! Qubit strategies, Bell operators and quantum optima.
//!
//! Observables are ±1-valued qubit observables `n·σ` parameterized by a
//! Bloch unit vector. A strategy is one shared pure state plus two
//! observables per party. The Bell operator of a strategy is
//! `Σ_x weight(x) ⊗_k O_k(x_k)`, so its expectation is the Bell value and
//! `(1 + value)/2` the winning probability.

mod seesaw;
mod tripartite;

pub use seesaw::{seesaw_optimize, SeesawOptions, SeesawResult, DEFAULT_SEED};
pub use tripartite::{
    bipartition_model, chsh_prime_game, ghz_bipartition_strategy, verify_chsh_prime_equivalence,
    BipartitionModel, EquivalenceReport,
};

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classical::check_canonical;
use crate::game::{bit, BiasVector, CoefficientTable, GameError};
use crate::linalg::{expectation, kron_all, pauli, ComplexMatrix, LinalgError, StateVector};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuantumError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error("strategy has {strategy} parties but the coefficient table has {table}")]
    ArityMismatch { strategy: usize, table: usize },
    #[error("invalid Bloch vector {0:?}")]
    InvalidBloch([f64; 3]),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

const BLOCH_TOL: f64 = 1e-12;

/// A ±1-valued qubit observable `n·σ` with unit Bloch vector `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    bloch: [f64; 3],
    matrix: ComplexMatrix,
}

impl Observable {
    /// Normalizes `v` and builds `v̂·σ`; rejects zero or non-finite input.
    pub fn from_bloch(v: [f64; 3]) -> Result<Self, QuantumError> {
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if !(n > 0.0) || !n.is_finite() {
            return Err(QuantumError::InvalidBloch(v));
        }
        let bloch = [v[0] / n, v[1] / n, v[2] / n];
        let matrix = &(&pauli::x().scale(bloch[0]) + &pauli::y().scale(bloch[1]))
            + &pauli::z().scale(bloch[2]);
        Ok(Self { bloch, matrix })
    }

    /// Recovers an observable from a Hermitian 2x2 matrix with eigenvalues ±1.
    pub fn from_matrix(m: &ComplexMatrix) -> Result<Self, QuantumError> {
        if m.rows() != 2 || m.cols() != 2 {
            return Err(QuantumError::InvalidArgument("observable must be 2x2".into()));
        }
        let dev = m.hermitian_deviation();
        if dev > BLOCH_TOL {
            return Err(LinalgError::NotHermitian(dev).into());
        }
        // n_j = ½ tr(M σ_j)
        let v = [
            m[(0, 1)].re,
            -m[(0, 1)].im,
            0.5 * (m[(0, 0)].re - m[(1, 1)].re),
        ];
        let trace = m[(0, 0)].re + m[(1, 1)].re;
        let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if trace.abs() > BLOCH_TOL || (norm - 1.0).abs() > BLOCH_TOL {
            return Err(QuantumError::InvalidBloch(v));
        }
        Self::from_bloch(v)
    }

    pub fn bloch(&self) -> [f64; 3] {
        self.bloch
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// Polar angle in `[0, π]` and azimuth in `[0, 2π)`.
    pub fn angles(&self) -> (f64, f64) {
        let [x, y, z] = self.bloch;
        let theta = z.clamp(-1.0, 1.0).acos();
        let mut phi = y.atan2(x);
        if phi < 0.0 {
            phi += 2.0 * PI;
        }
        if phi >= 2.0 * PI {
            phi = 0.0;
        }
        (theta, phi)
    }

    pub fn negated(&self) -> Self {
        let [x, y, z] = self.bloch;
        Self::from_bloch([-x, -y, -z]).expect("unit vector")
    }

    /// `U† O U` for a single-qubit unitary `U`.
    pub fn conjugated(&self, unitary: &ComplexMatrix) -> Result<Self, QuantumError> {
        let m = unitary.adjoint().matmul(&self.matrix).matmul(unitary);
        Self::from_matrix(&m)
    }
}

/// `(sinθ cosφ, sinθ sinφ, cosθ)·σ`.
pub fn bloch_observable(theta: f64, phi: f64) -> Observable {
    Observable::from_bloch([theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()])
        .expect("unit vector")
}

/// Shared pure state plus two observables per party.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumStrategy {
    state: StateVector,
    observables: Vec<[Observable; 2]>,
}

impl QuantumStrategy {
    pub fn new(state: StateVector, observables: Vec<[Observable; 2]>) -> Result<Self, QuantumError> {
        let parties = observables.len();
        if !(2..=3).contains(&parties) {
            return Err(GameError::UnsupportedParties(parties).into());
        }
        if state.dim() != 1 << parties {
            return Err(LinalgError::DimensionMismatch {
                expected: 1 << parties,
                found: state.dim(),
            }
            .into());
        }
        Ok(Self { state, observables })
    }

    pub fn parties(&self) -> usize {
        self.observables.len()
    }

    pub fn state(&self) -> &StateVector {
        &self.state
    }

    pub fn observables(&self) -> &[[Observable; 2]] {
        &self.observables
    }

    pub fn observable(&self, party: usize, setting: usize) -> &Observable {
        &self.observables[party][setting]
    }

    pub fn with_state(&self, state: StateVector) -> Result<Self, QuantumError> {
        Self::new(state, self.observables.clone())
    }

    /// `⊗_k O_k(x_k)` for a packed setting tuple.
    pub fn product_operator(&self, settings: usize) -> ComplexMatrix {
        let n = self.parties();
        let factors: Vec<&ComplexMatrix> = (0..n)
            .map(|k| self.observables[k][bit(settings, k, n)].matrix())
            .collect();
        kron_all(factors)
    }

    /// Full correlator `⟨⊗_k O_k(x_k)⟩` for every setting tuple.
    pub fn correlators(&self) -> Vec<f64> {
        (0..1usize << self.parties())
            .map(|x| expectation(&self.state, &self.product_operator(x)).expect("valid strategy"))
            .collect()
    }
}

#[derive(Serialize, Deserialize)]
struct StrategyJson {
    state: StateVector,
    observables: Vec<[[f64; 2]; 2]>,
}

impl Serialize for QuantumStrategy {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let observables = self
            .observables
            .iter()
            .map(|pair| {
                let (t0, p0) = pair[0].angles();
                let (t1, p1) = pair[1].angles();
                [[t0, p0], [t1, p1]]
            })
            .collect();
        StrategyJson {
            state: self.state.clone(),
            observables,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for QuantumStrategy {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = StrategyJson::deserialize(deserializer)?;
        let observables = raw
            .observables
            .iter()
            .map(|[a, b]| [bloch_observable(a[0], a[1]), bloch_observable(b[0], b[1])])
            .collect();
        QuantumStrategy::new(raw.state, observables).map_err(serde::de::Error::custom)
    }
}

/// Weighted sum of observable products for one strategy.
#[derive(Debug, Clone)]
pub struct BellOperator {
    pub matrix: ComplexMatrix,
    pub table: CoefficientTable,
}

pub fn bell_operator(table: &CoefficientTable, strat: &QuantumStrategy) -> Result<BellOperator, QuantumError> {
    if table.parties() != strat.parties() {
        return Err(QuantumError::ArityMismatch {
            strategy: strat.parties(),
            table: table.parties(),
        });
    }
    let dim = 1 << table.parties();
    let mut matrix = ComplexMatrix::zeros(dim, dim);
    for (x, &w) in table.weights().iter().enumerate() {
        if w != 0.0 {
            matrix = &matrix + &strat.product_operator(x).scale(w);
        }
    }
    Ok(BellOperator {
        matrix,
        table: table.clone(),
    })
}

/// Bell value `⟨ψ|B|ψ⟩` of a strategy.
pub fn quantum_value(table: &CoefficientTable, strat: &QuantumStrategy) -> Result<f64, QuantumError> {
    let op = bell_operator(table, strat)?;
    Ok(expectation(strat.state(), &op.matrix)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Region {
    /// `p ≥ 1/(2q)`: the quantum optimum equals the classical one.
    One,
    /// `p < 1/(2q)`: entangled strategies do strictly better.
    Two,
}

impl Region {
    pub fn id(self) -> u8 {
        match self {
            Region::One => 1,
            Region::Two => 2,
        }
    }

    /// Region of a canonical-quadrant bias; the boundary belongs to region 1.
    pub fn of(p: f64, q: f64) -> Self {
        if p >= 1.0 / (2.0 * q) {
            Region::One
        } else {
            Region::Two
        }
    }
}

impl From<Region> for u8 {
    fn from(r: Region) -> u8 {
        r.id()
    }
}

impl TryFrom<u8> for Region {
    type Error = String;
    fn try_from(v: u8) -> Result<Self, String> {
        match v {
            1 => Ok(Region::One),
            2 => Ok(Region::Two),
            other => Err(format!("invalid region id {other}")),
        }
    }
}

/// `1 − 2(1−p)(1−q)`.
pub fn region_one_value(p: f64, q: f64) -> f64 {
    1.0 - 2.0 * (1.0 - p) * (1.0 - q)
}

/// `√2 · √(q² + (1−q)²) · √(p² + (1−p)²)`.
pub fn region_two_value(p: f64, q: f64) -> f64 {
    2f64.sqrt() * (q * q + (1.0 - q) * (1.0 - q)).sqrt() * (p * p + (1.0 - p) * (1.0 - p)).sqrt()
}

/// Piecewise quantum optimum of the biased CHSH Bell value for a canonical
/// bias (`p, q ∈ [½, 1]`).
pub fn analytic_quantum_max_bipartite(bias: &BiasVector) -> Result<(f64, Region), QuantumError> {
    if bias.parties() != 2 {
        return Err(GameError::ArityMismatch { game: 2, bias: bias.parties() }.into());
    }
    check_canonical(bias)?;
    Ok(piecewise(bias.p, bias.q))
}

/// Bipartition-model optimum of the biased Svetlichny Bell value: the same
/// piecewise form in `(p, q)`, independent of `r`.
pub fn analytic_quantum_max_tripartite_bipartition(bias: &BiasVector) -> Result<(f64, Region), QuantumError> {
    if bias.parties() != 3 {
        return Err(GameError::ArityMismatch { game: 3, bias: bias.parties() }.into());
    }
    check_canonical(bias)?;
    Ok(piecewise(bias.p, bias.q))
}

fn piecewise(p: f64, q: f64) -> (f64, Region) {
    match Region::of(p, q) {
        Region::One => (region_one_value(p, q), Region::One),
        Region::Two => (region_two_value(p, q), Region::Two),
    }
}

/// Optimal biased-CHSH strategy on `|φ+⟩` for any `p, q ∈ [0, 1]`, together
/// with its Bell value.
///
/// Bob measures `σ_z` and a second axis at angle `ϑ` in the x–z plane; Alice
/// aligns with `q·B0 ± (1−q)·B1`. The value
/// `p·|qB0 + (1−q)B1| + (1−p)·|qB0 − (1−q)B1|` is concave in `cos ϑ`, so the
/// stationary point clamped to `[−1, 1]` is the optimum.
pub fn optimal_chsh_strategy(p: f64, q: f64) -> Result<(QuantumStrategy, f64), QuantumError> {
    BiasVector::bipartite(p, q)?;
    let c = q * q + (1.0 - q) * (1.0 - q);
    let d = 2.0 * q * (1.0 - q);
    let pp = p * p + (1.0 - p) * (1.0 - p);
    let cos_t = if d == 0.0 {
        1.0
    } else {
        (c * (2.0 * p - 1.0) / (d * pp)).clamp(-1.0, 1.0)
    };
    let sin_t = (1.0 - cos_t * cos_t).max(0.0).sqrt();
    let b0 = [0.0, 0.0, 1.0];
    let b1 = [sin_t, 0.0, cos_t];
    let plus = [q * b0[0] + (1.0 - q) * b1[0], 0.0, q * b0[2] + (1.0 - q) * b1[2]];
    let minus = [q * b0[0] - (1.0 - q) * b1[0], 0.0, q * b0[2] - (1.0 - q) * b1[2]];
    // a vanishing direction carries zero weight; any axis will do
    let pick = |v: [f64; 3]| Observable::from_bloch(v).or_else(|_| Observable::from_bloch([1.0, 0.0, 0.0]));
    let strat = QuantumStrategy::new(
        StateVector::bell_pair(Complex64::new(1.0, 0.0))?,
        vec![[pick(plus)?, pick(minus)?], [Observable::from_bloch(b0)?, Observable::from_bloch(b1)?]],
    )?;
    let value = p * (c + d * cos_t).max(0.0).sqrt() + (1.0 - p) * (c - d * cos_t).max(0.0).sqrt();
    Ok((strat, value))
}
