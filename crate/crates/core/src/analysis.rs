//! Classification of bias space, grid scans and threshold searches.

use std::fmt;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::classical::{classical_max, classical_max_analytic, DeterministicStrategy};
use crate::game::{coefficient_table, BiasVector, GameError, GameKind, GameSpec};
use crate::nosignaling::{ns_value, NsError};
use crate::quantum::{
    analytic_quantum_max_bipartite, analytic_quantum_max_tripartite_bipartition, region_one_value,
    seesaw_optimize, QuantumError, QuantumStrategy, Region, SeesawOptions,
};

/// Probability gap above which a point counts as a quantum advantage.
pub const ADVANTAGE_EPS: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error(transparent)]
    NoSignaling(#[from] NsError),
    #[error("no sign change of the advantage gap on [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },
    #[error("{0}")]
    InvalidArgument(String),
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

/// Records which parties had their inputs relabeled `x → 1 − x`.
///
/// Relabeling party `k`'s input and flipping every other party's output on
/// input 1 maps the CHSH and Svetlichny rules onto themselves with `k`'s
/// bias reflected, so values are preserved and strategies can be carried
/// back by the same operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RelabelTransform {
    pub parties: usize,
    pub flipped: [bool; 3],
}

impl RelabelTransform {
    pub fn identity(parties: usize) -> Self {
        Self { parties, flipped: [false; 3] }
    }

    pub fn is_identity(&self) -> bool {
        !self.flipped.iter().any(|&f| f)
    }

    /// Carries a strategy for the canonical bias to one for the original bias
    /// with the same value.
    pub fn map_quantum(&self, strat: &QuantumStrategy) -> Result<QuantumStrategy, QuantumError> {
        let mut obs = strat.observables().to_vec();
        for k in (0..self.parties).filter(|&k| self.flipped[k]) {
            obs[k].swap(0, 1);
            for (j, pair) in obs.iter_mut().enumerate() {
                if j != k {
                    pair[1] = pair[1].negated();
                }
            }
        }
        QuantumStrategy::new(strat.state().clone(), obs)
    }

    pub fn map_deterministic(&self, strat: &DeterministicStrategy) -> DeterministicStrategy {
        let mut answers = strat.answers();
        for k in (0..self.parties).filter(|&k| self.flipped[k]) {
            answers[k].swap(0, 1);
            for (j, pair) in answers.iter_mut().enumerate() {
                if j != k {
                    pair[1] ^= 1;
                }
            }
        }
        DeterministicStrategy::from_answers(&answers)
    }
}

pub fn canonicalize_bias(bias: &BiasVector) -> (BiasVector, RelabelTransform) {
    let mut comps = bias.components();
    let mut t = RelabelTransform::identity(comps.len());
    for (k, c) in comps.iter_mut().enumerate() {
        if *c < 0.5 {
            *c = 1.0 - *c;
            t.flipped[k] = true;
        }
    }
    let canonical = BiasVector::from_components(&comps).expect("reflection stays in [0, 1]");
    (canonical, t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Classification {
    NoQuantumAdvantage,
    QuantumAdvantage,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::NoQuantumAdvantage => "no-quantum-advantage",
            Classification::QuantumAdvantage => "quantum-advantage",
        }
    }

    /// Strict rule: the boundary, where both values agree, is no advantage.
    pub fn from_gap(gap: f64) -> Self {
        if gap > ADVANTAGE_EPS {
            Classification::QuantumAdvantage
        } else {
            Classification::NoQuantumAdvantage
        }
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for Classification {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

/// All bounds at one bias point, as winning probabilities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionPoint {
    pub bias: BiasVector,
    /// Closed-form classical bound; for three parties the bipartition-model value.
    pub classical: f64,
    /// Exhaustive optimum over local deterministic strategies.
    pub classical_local: f64,
    pub quantum_analytic: f64,
    /// Absent when the see-saw was not run.
    pub quantum_seesaw: Option<f64>,
    pub seesaw_converged: Option<bool>,
    pub nosignaling: f64,
    pub classification: Classification,
    pub region_id: Region,
}

fn prob(bell: f64) -> f64 {
    (1.0 + bell) / 2.0
}

pub fn classify_point(
    game: &GameSpec,
    bias: &BiasVector,
    seesaw: Option<&SeesawOptions>,
) -> Result<RegionPoint, AnalysisError> {
    bias.check_arity(game)?;
    let kind = game
        .kind()
        .ok_or_else(|| AnalysisError::InvalidArgument(format!("no analytic bounds for game {:?}", game.name())))?;
    let (canonical, _) = canonicalize_bias(bias);
    let classical = classical_max_analytic(game, &canonical)?;
    let classical_local = classical_max(game, bias)?.max_probability;
    let (bell, region_id) = match kind {
        GameKind::Chsh => analytic_quantum_max_bipartite(&canonical)?,
        GameKind::Svetlichny => analytic_quantum_max_tripartite_bipartition(&canonical)?,
    };
    let quantum_analytic = prob(bell);
    let (quantum_seesaw, seesaw_converged) = match seesaw {
        Some(opts) => {
            let res = seesaw_optimize(&coefficient_table(game, bias)?, opts)?;
            (Some(prob(res.value)), Some(res.converged))
        }
        None => (None, None),
    };
    let nosignaling = ns_value(game, bias)?;
    Ok(RegionPoint {
        bias: *bias,
        classical,
        classical_local,
        quantum_analytic,
        quantum_seesaw,
        seesaw_converged,
        nosignaling,
        classification: Classification::from_gap(quantum_analytic - classical),
        region_id,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridShape {
    /// Every node of `[0,1]^d`.
    Full,
    /// Tripartite grid over `(p, q)` with `r` held fixed.
    FixedR(f64),
    /// `p = q (= r)`.
    Diagonal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOptions {
    pub resolution: usize,
    pub shape: GridShape,
    /// See-saw settings; `None` skips the see-saw column.
    pub seesaw: Option<SeesawOptions>,
    /// Worker threads; results are assembled by grid index either way.
    pub jobs: usize,
}

impl ScanOptions {
    pub fn new(resolution: usize) -> Self {
        Self { resolution, shape: GridShape::Full, seesaw: None, jobs: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseDiagram {
    pub game: GameKind,
    pub resolution: usize,
    pub points: Vec<RegionPoint>,
    /// Samples `(p, q)` of the curve `p·q = ½` in the canonical quadrant.
    pub boundary: Vec<[f64; 2]>,
}

/// `count` points of `p·q = ½`, `q` evenly spaced over `[½, 1]`.
pub fn boundary_samples(count: usize) -> Vec<[f64; 2]> {
    (0..count)
        .map(|k| {
            let q = if count == 1 { 0.5 } else { 0.5 + 0.5 * k as f64 / (count - 1) as f64 };
            [1.0 / (2.0 * q), q]
        })
        .collect()
}

pub const BOUNDARY_SAMPLES: usize = 201;

fn node(i: usize, resolution: usize) -> f64 {
    i as f64 / (resolution - 1) as f64
}

fn grid_biases(kind: GameKind, resolution: usize, shape: GridShape) -> Result<Vec<BiasVector>, GameError> {
    let n = resolution;
    let mut out = Vec::new();
    match (kind, shape) {
        (_, GridShape::Diagonal) => {
            for i in 0..n {
                let x = node(i, n);
                out.push(BiasVector::from_components(&vec![x; kind.parties()])?);
            }
        }
        (GameKind::Chsh, GridShape::Full) => {
            for i in 0..n {
                for j in 0..n {
                    out.push(BiasVector::bipartite(node(i, n), node(j, n))?);
                }
            }
        }
        (GameKind::Chsh, GridShape::FixedR(_)) => return Err(GameError::ArityMismatch { game: 2, bias: 3 }),
        (GameKind::Svetlichny, GridShape::Full) => {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        out.push(BiasVector::tripartite(node(i, n), node(j, n), node(k, n))?);
                    }
                }
            }
        }
        (GameKind::Svetlichny, GridShape::FixedR(r)) => {
            for i in 0..n {
                for j in 0..n {
                    out.push(BiasVector::tripartite(node(i, n), node(j, n), r)?);
                }
            }
        }
    }
    Ok(out)
}

/// Seed of grid point `index`, independent of scheduling.
pub fn point_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

pub fn scan_grid(kind: GameKind, opts: &ScanOptions) -> Result<PhaseDiagram, AnalysisError> {
    if opts.resolution < 2 {
        return Err(AnalysisError::InvalidArgument("resolution must be at least 2".into()));
    }
    if opts.jobs == 0 {
        return Err(AnalysisError::InvalidArgument("jobs must be at least 1".into()));
    }
    let game = GameSpec::from_kind(kind);
    let biases = grid_biases(kind, opts.resolution, opts.shape)?;
    let work = |(i, b): (usize, &BiasVector)| {
        let seesaw = opts.seesaw.map(|s| SeesawOptions { seed: point_seed(s.seed, i), ..s });
        classify_point(&game, b, seesaw.as_ref())
    };
    let points: Result<Vec<RegionPoint>, AnalysisError> = if opts.jobs == 1 {
        biases.iter().enumerate().map(work).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.jobs)
            .build()
            .map_err(|e| AnalysisError::ThreadPool(e.to_string()))?;
        pool.install(|| biases.par_iter().enumerate().map(work).collect())
    };
    Ok(PhaseDiagram {
        game: kind,
        resolution: opts.resolution,
        points: points?,
        boundary: boundary_samples(BOUNDARY_SAMPLES),
    })
}

/// Formats with 9 significant digits in positional notation.
pub fn format_sig(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x == 0.0 {
        return "0.00000000".into();
    }
    // exponent after rounding, so 0.9999999999 counts as 1.00000000
    let sci = format!("{x:.8e}");
    let exp: i32 = sci[sci.find('e').expect("exponent") + 1..].parse().expect("integer exponent");
    let decimals = (8 - exp).max(0) as usize;
    format!("{x:.decimals$}")
}

pub const CSV_HEADER: &str = "p,q,r,classical,quantum_analytic,quantum_seesaw,nosignaling,region_id,classification";

impl PhaseDiagram {
    /// One row per grid node. Values are winning probabilities, or Bell
    /// values `2P − 1` when `bell` is set. Missing entries are `nan`.
    pub fn to_csv(&self, bell: bool) -> String {
        let v = |x: f64| format_sig(if bell { 2.0 * x - 1.0 } else { x });
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for pt in &self.points {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                format_sig(pt.bias.p),
                format_sig(pt.bias.q),
                pt.bias.r.map_or("nan".into(), format_sig),
                v(pt.classical),
                v(pt.quantum_analytic),
                pt.quantum_seesaw.map_or("nan".into(), v),
                v(pt.nosignaling),
                pt.region_id.id(),
                pt.classification,
            );
        }
        out
    }

    /// Self-contained heat map over `(p, q)` with the boundary overlaid.
    /// For three-party grids the first point at each `(p, q)` is drawn.
    pub fn to_svg(&self) -> String {
        svg::render(self)
    }
}

pub mod svg {
    use std::collections::HashSet;
    use std::fmt::Write as _;

    use super::{Classification, PhaseDiagram};

    pub const WIDTH: f64 = 560.0;
    pub const HEIGHT: f64 = 560.0;
    pub const MARGIN: f64 = 70.0;
    pub const PLOT: f64 = 420.0;
    pub const ADVANTAGE_COLOR: &str = "#d95f02";
    pub const NO_ADVANTAGE_COLOR: &str = "#1b9e77";

    pub fn to_pixel(p: f64, q: f64) -> (f64, f64) {
        (MARGIN + p * PLOT, MARGIN + (1.0 - q) * PLOT)
    }

    pub fn render(d: &PhaseDiagram) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
        );
        let _ = writeln!(s, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" style="fill:#ffffff"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="30" style="font-family:sans-serif;font-size:16px;text-anchor:middle">{} phase diagram (resolution {})</text>"#,
            WIDTH / 2.0,
            d.game.name(),
            d.resolution
        );

        let cell = PLOT / (d.resolution - 1) as f64;
        let mut seen = HashSet::new();
        let _ = writeln!(s, r#"<g class="cells">"#);
        for pt in &d.points {
            let key = (pt.bias.p.to_bits(), pt.bias.q.to_bits());
            if !seen.insert(key) {
                continue;
            }
            let (cx, cy) = to_pixel(pt.bias.p, pt.bias.q);
            let color = match pt.classification {
                Classification::QuantumAdvantage => ADVANTAGE_COLOR,
                Classification::NoQuantumAdvantage => NO_ADVANTAGE_COLOR,
            };
            let x0 = (cx - cell / 2.0).max(MARGIN);
            let y0 = (cy - cell / 2.0).max(MARGIN);
            let x1 = (cx + cell / 2.0).min(MARGIN + PLOT);
            let y1 = (cy + cell / 2.0).min(MARGIN + PLOT);
            let _ = writeln!(
                s,
                r#"<rect x="{x0:.3}" y="{y0:.3}" width="{:.3}" height="{:.3}" style="fill:{color};stroke:none"/>"#,
                x1 - x0,
                y1 - y0
            );
        }
        let _ = writeln!(s, "</g>");

        let _ = writeln!(
            s,
            r#"<rect x="{MARGIN}" y="{MARGIN}" width="{PLOT}" height="{PLOT}" style="fill:none;stroke:#000000;stroke-width:1"/>"#
        );
        let pts: Vec<String> = d
            .boundary
            .iter()
            .map(|&[p, q]| {
                let (x, y) = to_pixel(p, q);
                format!("{x:.3},{y:.3}")
            })
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline class="boundary" points="{}" style="fill:none;stroke:#000000;stroke-width:2"/>"#,
            pts.join(" ")
        );

        for k in 0..=4 {
            let v = k as f64 / 4.0;
            let (x, _) = to_pixel(v, 0.0);
            let (_, y) = to_pixel(0.0, v);
            let _ = writeln!(
                s,
                r#"<text x="{x:.3}" y="{:.3}" style="font-family:sans-serif;font-size:12px;text-anchor:middle">{v}</text>"#,
                MARGIN + PLOT + 18.0
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.3}" y="{:.3}" style="font-family:sans-serif;font-size:12px;text-anchor:end">{v}</text>"#,
                MARGIN - 8.0,
                y + 4.0
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.3}" y="{:.3}" style="font-family:sans-serif;font-size:14px;text-anchor:middle">p</text>"#,
            MARGIN + PLOT / 2.0,
            MARGIN + PLOT + 40.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.3}" y="{:.3}" style="font-family:sans-serif;font-size:14px;text-anchor:middle">q</text>"#,
            MARGIN - 40.0,
            MARGIN + PLOT / 2.0
        );
        let ly = HEIGHT - 20.0;
        let _ = writeln!(
            s,
            r#"<rect x="{MARGIN}" y="{:.3}" width="12" height="12" style="fill:{ADVANTAGE_COLOR}"/><text x="{:.3}" y="{ly:.3}" style="font-family:sans-serif;font-size:12px">quantum advantage</text>"#,
            ly - 10.0,
            MARGIN + 18.0
        );
        let _ = writeln!(
            s,
            r#"<rect x="{:.3}" y="{:.3}" width="12" height="12" style="fill:{NO_ADVANTAGE_COLOR}"/><text x="{:.3}" y="{ly:.3}" style="font-family:sans-serif;font-size:12px">no quantum advantage</text>"#,
            MARGIN + 180.0,
            ly - 10.0,
            MARGIN + 198.0
        );
        s.push_str("</svg>\n");
        s
    }
}

/// Analytic Bell-value gap `quantum − classical` on the diagonal.
///
/// Computed in Bell units so that region 1, where both sides are the same
/// expression, gives exactly 0. The gap is quadratic in the distance to the
/// boundary, so thresholding it at [`ADVANTAGE_EPS`] would shift the
/// crossing by about 2e-5.
fn diagonal_gap(kind: GameKind, p: f64) -> Result<f64, AnalysisError> {
    let bias = BiasVector::from_components(&vec![p; kind.parties()])?;
    let (bell, _) = match kind {
        GameKind::Chsh => analytic_quantum_max_bipartite(&bias)?,
        GameKind::Svetlichny => analytic_quantum_max_tripartite_bipartition(&bias)?,
    };
    Ok(bell - region_one_value(p, p))
}

fn bisect<F>(mut lo: f64, mut hi: f64, tolerance: f64, mut advantage: F) -> Result<f64, AnalysisError>
where
    F: FnMut(f64) -> Result<bool, AnalysisError>,
{
    if !(tolerance > 0.0) {
        return Err(AnalysisError::InvalidArgument("tolerance must be positive".into()));
    }
    if !advantage(lo)? || advantage(hi)? {
        return Err(AnalysisError::NoSignChange { lo, hi });
    }
    while hi - lo > tolerance {
        let mid = 0.5 * (lo + hi);
        if advantage(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Equal-bias point where the analytic quantum advantage disappears.
pub fn threshold_on_diagonal(kind: GameKind, tolerance: f64) -> Result<f64, AnalysisError> {
    bisect(0.5, 1.0, tolerance, |p| Ok(diagonal_gap(kind, p)? > 0.0))
}

#[derive(Debug, Clone, Serialize)]
pub struct SeesawThreshold {
    pub threshold: f64,
    pub bracket: [f64; 2],
    /// Bell-value margin by which the see-saw must beat local strategies.
    pub margin: f64,
    pub evaluations: usize,
}

/// Diagnostic: equal-bias threshold where the full see-saw optimum stops
/// beating the exhaustive local optimum by more than `margin` (Bell units).
pub fn seesaw_threshold_on_diagonal(
    kind: GameKind,
    bracket: [f64; 2],
    tolerance: f64,
    margin: f64,
    opts: &SeesawOptions,
) -> Result<SeesawThreshold, AnalysisError> {
    let game = GameSpec::from_kind(kind);
    let mut evaluations = 0;
    let threshold = bisect(bracket[0], bracket[1], tolerance, |p| {
        evaluations += 1;
        let bias = BiasVector::from_components(&vec![p; kind.parties()])?;
        let q = seesaw_optimize(&coefficient_table(&game, &bias)?, opts)?.value;
        let c = 2.0 * classical_max(&game, &bias)?.max_probability - 1.0;
        Ok(q - c > margin)
    })?;
    Ok(SeesawThreshold { threshold, bracket, margin, evaluations })
}
