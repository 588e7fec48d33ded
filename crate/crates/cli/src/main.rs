use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use biasgame::analysis::{
    canonicalize_bias, classify_point, format_sig, scan_grid, GridShape, PhaseDiagram, RegionPoint, ScanOptions,
};
use biasgame::game::{coefficient_table, BiasVector, GameKind, GameSpec};
use biasgame::quantum::{
    analytic_quantum_max_bipartite, analytic_quantum_max_tripartite_bipartition, ghz_bipartition_strategy,
    optimal_chsh_strategy, quantum_value, seesaw_optimize, SeesawOptions, DEFAULT_SEED,
};
use biasgame::verify::{run_verification, VerifyOptions};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

const EXIT_USAGE: u8 = 1;
const EXIT_VERIFY: u8 = 2;
const EXIT_NONCONVERGENCE: u8 = 3;

#[derive(Parser)]
#[command(name = "biasgame", version, about = "Bounds on biased CHSH and Svetlichny games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classical, quantum and no-signaling values at one bias point
    Bounds(PointArgs),
    /// Classify a grid of bias points and write CSV, SVG or JSON
    Scan(ScanArgs),
    /// Constructive quantum strategy for one bias point
    Strategy(PointArgs),
    /// Run the invariant suites
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Csv,
    Json,
    Svg,
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Output file (stdout if omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Report Bell values 2P-1 instead of winning probabilities
    #[arg(long)]
    bell: bool,
}

#[derive(Args)]
struct PointArgs {
    #[arg(long, value_enum, default_value = "chsh")]
    game: GameArg,
    #[arg(long)]
    p: f64,
    #[arg(long)]
    q: f64,
    #[arg(long)]
    r: Option<f64>,
    /// See-saw restarts
    #[arg(long, default_value_t = 20)]
    restarts: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct ScanArgs {
    #[arg(long, value_enum, default_value = "chsh")]
    game: GameArg,
    #[arg(long, default_value_t = 101)]
    resolution: usize,
    /// Hold r fixed (svetlichny only); otherwise the full cube is scanned
    #[arg(long)]
    r: Option<f64>,
    /// Scan only the equal-bias diagonal
    #[arg(long)]
    diagonal: bool,
    /// See-saw restarts per point; 0 leaves the quantum_seesaw column as nan
    #[arg(long, default_value_t = 0)]
    restarts: usize,
    /// Worker threads
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 20)]
    restarts: usize,
    #[arg(long, hide = true)]
    inject_sign_flip: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, ValueEnum)]
enum GameArg {
    Chsh,
    Svetlichny,
}

impl From<GameArg> for GameKind {
    fn from(g: GameArg) -> Self {
        match g {
            GameArg::Chsh => GameKind::Chsh,
            GameArg::Svetlichny => GameKind::Svetlichny,
        }
    }
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl ToString) -> Self {
        Self { code: EXIT_USAGE, message: message.to_string() }
    }
}

impl From<biasgame::Error> for Failure {
    fn from(e: biasgame::Error) -> Self {
        Failure::usage(e)
    }
}

fn fail<E: Into<biasgame::Error>>(e: E) -> Failure {
    Failure::from(e.into())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Bounds(a) => cmd_bounds(&a),
        Command::Scan(a) => cmd_scan(&a),
        Command::Strategy(a) => cmd_strategy(&a),
        Command::Verify(a) => cmd_verify(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn emit(common: &Common, content: &str) -> Result<(), Failure> {
    match &common.out {
        Some(path) => fs::write(path, content).map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display()))),
        None => io::stdout().write_all(content.as_bytes()).map_err(|e| Failure::usage(e.to_string())),
    }
}

fn point_bias(kind: GameKind, a: &PointArgs) -> Result<BiasVector, Failure> {
    let bias = BiasVector::new(a.p, a.q, a.r).map_err(fail)?;
    if bias.parties() != kind.parties() {
        return Err(Failure::usage(format!(
            "game {} takes {} bias components, got {}",
            kind.name(),
            kind.parties(),
            bias.parties()
        )));
    }
    Ok(bias)
}

fn seesaw_opts(restarts: usize, seed: u64) -> Option<SeesawOptions> {
    (restarts > 0).then(|| SeesawOptions::with_restarts(restarts, seed))
}

fn point_json(pt: &RegionPoint, bell: bool) -> Value {
    let v = |x: f64| if bell { 2.0 * x - 1.0 } else { x };
    json!({
        "p": pt.bias.p,
        "q": pt.bias.q,
        "r": pt.bias.r,
        "units": if bell { "bell" } else { "probability" },
        "classical": v(pt.classical),
        "classical_local": v(pt.classical_local),
        "quantum_analytic": v(pt.quantum_analytic),
        "quantum_seesaw": pt.quantum_seesaw.map(v),
        "seesaw_converged": pt.seesaw_converged,
        "nosignaling": v(pt.nosignaling),
        "region_id": pt.region_id.id(),
        "classification": pt.classification.as_str(),
    })
}

fn cmd_bounds(a: &PointArgs) -> Result<(), Failure> {
    let kind = GameKind::from(a.game);
    let bias = point_bias(kind, a)?;
    let game = GameSpec::from_kind(kind);
    let pt = classify_point(&game, &bias, seesaw_opts(a.restarts, a.common.seed).as_ref()).map_err(fail)?;
    let content = match a.common.format.unwrap_or(Format::Text) {
        Format::Json => {
            let mut v = point_json(&pt, a.common.bell);
            v["schema"] = json!(1);
            v["game"] = json!(kind.name());
            format!("{}\n", serde_json::to_string_pretty(&v).expect("serializable"))
        }
        Format::Csv => {
            let d = PhaseDiagram { game: kind, resolution: 1, points: vec![pt.clone()], boundary: Vec::new() };
            d.to_csv(a.common.bell)
        }
        Format::Text => {
            let v = |x: f64| format_sig(if a.common.bell { 2.0 * x - 1.0 } else { x });
            let mut s = format!("game             {}\n", kind.name());
            s += &format!("bias             p={} q={}", pt.bias.p, pt.bias.q);
            if let Some(r) = pt.bias.r {
                s += &format!(" r={r}");
            }
            s += &format!("\nunits            {}\n", if a.common.bell { "bell value" } else { "winning probability" });
            s += &format!("classical        {}\n", v(pt.classical));
            if kind == GameKind::Svetlichny {
                s += &format!("classical_local  {}\n", v(pt.classical_local));
            }
            s += &format!("quantum          {}\n", v(pt.quantum_analytic));
            if let Some(q) = pt.quantum_seesaw {
                s += &format!("quantum_seesaw   {}\n", v(q));
            }
            s += &format!("nosignaling      {}\n", v(pt.nosignaling));
            s += &format!("region           {}\n", pt.region_id.id());
            s += &format!("classification   {}\n", pt.classification);
            s
        }
        Format::Svg => return Err(Failure::usage("bounds does not produce svg")),
    };
    emit(&a.common, &content)?;
    if pt.seesaw_converged == Some(false) {
        eprintln!("warning: see-saw hit the iteration cap");
    }
    Ok(())
}

fn cmd_scan(a: &ScanArgs) -> Result<(), Failure> {
    let kind = GameKind::from(a.game);
    let shape = match (a.diagonal, a.r) {
        (true, Some(_)) => return Err(Failure::usage("--diagonal and --r are mutually exclusive")),
        (true, None) => GridShape::Diagonal,
        (false, Some(r)) => {
            if kind != GameKind::Svetlichny {
                return Err(Failure::usage("--r applies to the svetlichny game only"));
            }
            BiasVector::tripartite(0.5, 0.5, r).map_err(fail)?;
            GridShape::FixedR(r)
        }
        (false, None) => GridShape::Full,
    };
    if a.resolution < 2 {
        return Err(Failure::usage("--resolution must be at least 2"));
    }
    if a.jobs == 0 {
        return Err(Failure::usage("--jobs must be at least 1"));
    }
    let opts = ScanOptions {
        resolution: a.resolution,
        shape,
        seesaw: seesaw_opts(a.restarts, a.common.seed),
        jobs: a.jobs,
    };
    let d = scan_grid(kind, &opts).map_err(fail)?;
    let content = match a.common.format.unwrap_or(Format::Csv) {
        Format::Csv => d.to_csv(a.common.bell),
        Format::Svg => d.to_svg(),
        Format::Json => {
            let v = json!({
                "schema": 1,
                "game": kind.name(),
                "resolution": d.resolution,
                "points": d.points.iter().map(|pt| point_json(pt, a.common.bell)).collect::<Vec<_>>(),
                "boundary": d.boundary,
            });
            format!("{}\n", serde_json::to_string(&v).expect("serializable"))
        }
        Format::Text => return Err(Failure::usage("scan writes csv, svg or json")),
    };
    emit(&a.common, &content)?;
    let stalled = d.points.iter().filter(|pt| pt.seesaw_converged == Some(false)).count();
    if stalled > 0 {
        eprintln!("warning: see-saw hit the iteration cap at {stalled} grid points");
    }
    Ok(())
}

fn cmd_strategy(a: &PointArgs) -> Result<(), Failure> {
    let kind = GameKind::from(a.game);
    let bias = point_bias(kind, a)?;
    let game = GameSpec::from_kind(kind);
    let table = coefficient_table(&game, &bias).map_err(fail)?;
    let (canonical, transform) = canonicalize_bias(&bias);
    let (strategy, analytic, construction) = match kind {
        GameKind::Chsh => {
            let (s, _) = optimal_chsh_strategy(canonical.p, canonical.q).map_err(fail)?;
            let (bound, _) = analytic_quantum_max_bipartite(&canonical).map_err(fail)?;
            (s, bound, "optimal two-qubit strategy on |phi+>")
        }
        GameKind::Svetlichny => {
            let s = ghz_bipartition_strategy(&canonical).map_err(fail)?;
            let (bound, _) = analytic_quantum_max_tripartite_bipartition(&canonical).map_err(fail)?;
            (s, bound, "GHZ state, C0 = sigma_x, C1 = -sigma_y")
        }
    };
    let strategy = transform.map_quantum(&strategy).map_err(fail)?;
    let value = quantum_value(&table, &strategy).map_err(fail)?;
    let seesaw = match seesaw_opts(a.restarts, a.common.seed) {
        Some(opts) => Some(seesaw_optimize(&table, &opts).map_err(fail)?),
        None => None,
    };
    let conv = |b: f64| if a.common.bell { b } else { (1.0 + b) / 2.0 };
    let matched = (value - analytic).abs() <= 1e-9;

    let report = json!({
        "schema": 1,
        "game": kind.name(),
        "p": bias.p,
        "q": bias.q,
        "r": bias.r,
        "units": if a.common.bell { "bell" } else { "probability" },
        "construction": construction,
        "strategy": strategy,
        "value": conv(value),
        "analytic": conv(analytic),
        "attains_analytic": matched,
        "seesaw": seesaw.as_ref().map(|s| json!({
            "value": conv(s.value),
            "converged": s.converged,
            "iterations": s.iterations,
        })),
    });
    if !matches!(a.common.format.unwrap_or(Format::Json), Format::Json | Format::Text) {
        return Err(Failure::usage("strategy writes json"));
    }
    emit(&a.common, &format!("{}\n", serde_json::to_string_pretty(&report).expect("serializable")))?;

    if !matched {
        eprintln!(
            "warning: constructive value {} is below the analytic bound {}",
            format_sig(conv(value)),
            format_sig(conv(analytic))
        );
    }
    if let Some(s) = &seesaw {
        if !s.converged {
            if matched {
                eprintln!("warning: see-saw hit the iteration cap; the construction attains the bound");
            } else {
                return Err(Failure { code: EXIT_NONCONVERGENCE, message: "see-saw did not converge".into() });
            }
        }
    }
    Ok(())
}

fn cmd_verify(a: &VerifyArgs) -> Result<(), Failure> {
    let opts = VerifyOptions { seed: a.common.seed, restarts: a.restarts, inject_sign_flip: a.inject_sign_flip };
    let report = run_verification(&opts)?;
    let content = match a.common.format.unwrap_or(Format::Text) {
        Format::Json => format!("{}\n", serde_json::to_string_pretty(&report).expect("serializable")),
        Format::Text => report.table(),
        _ => return Err(Failure::usage("verify writes text or json")),
    };
    emit(&a.common, &content)?;
    if report.passed {
        return Ok(());
    }
    let names: Vec<&str> = report.failed().map(|s| s.name).collect();
    Err(Failure { code: EXIT_VERIFY, message: format!("failed invariants: {}", names.join(", ")) })
}
