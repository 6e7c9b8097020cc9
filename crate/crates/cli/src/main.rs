//! Command-line front end. stdout carries result payloads only; progress,
//! timings, and machine-readable error diagnostics go to stderr. Exit codes:
//! 0 success, 2 input/validation error, 3 solver failure (not well posed or
//! an enumeration cap was hit).

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use mpg_core::fan::{exact_deterministic_cells_2d, explore_slice, AffineSlice};
use mpg_core::fixture;
use mpg_core::game::{GameSpec, PaymentVector, Policy};
use mpg_core::hoffman_karp::{certify_uniqueness, hoffman_karp, CertifyOptions, SolveOptions};
use mpg_core::structural::{structural_verdict, DEFAULT_STATE_CAP};
use mpg_core::{FanError, SolveError, SolveOutcome};

#[derive(Parser)]
#[command(name = "mpg", about = "Mean-payoff stochastic game solver", version)]
struct Cli {
    /// Seed for reproducibility bookkeeping; echoed in diagnostics. All
    /// commands are deterministic.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct GameArgs {
    /// Game description (JSON).
    input: PathBuf,
    /// Per-state payment offsets, in state order (the perturbation g).
    #[arg(long, num_args = 1.., allow_hyphen_values = true)]
    g: Vec<f64>,
}

#[derive(Args)]
struct SliceArgs {
    /// States whose per-state payment offsets span the slice (two, for 2-D).
    #[arg(long = "dir-state", num_args = 1..)]
    dir_states: Vec<String>,
    #[arg(long, default_value_t = -10.0, allow_hyphen_values = true)]
    lo: f64,
    #[arg(long, default_value_t = 10.0, allow_hyphen_values = true)]
    hi: f64,
    #[arg(long, default_value_t = 101)]
    resolution: usize,
}

#[derive(Subcommand)]
enum Cmd {
    /// Decide solvability for all payments from the transition supports.
    CheckStructure {
        input: PathBuf,
        /// State-count cap for the 2^n family enumeration.
        #[arg(long, default_value_t = DEFAULT_STATE_CAP)]
        cap: usize,
    },
    /// Compute an eigenpair by two-player policy iteration.
    Solve {
        #[command(flatten)]
        game: GameArgs,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Outer iteration bound (default: number of MIN policies + 1).
        #[arg(long)]
        max_outer: Option<usize>,
        /// State id whose bias entry is pinned to 0 (default: last state).
        #[arg(long)]
        anchor: Option<String>,
    },
    /// Solve, then certify uniqueness of the bias up to a constant.
    Certify {
        #[command(flatten)]
        game: GameArgs,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Cap on subset-pattern membership tests in the policy sweep.
        #[arg(long, default_value_t = 1u128 << 20)]
        cap_subsets: u128,
    },
    /// Emit the outer iteration trace of the solver.
    PolicyTrace {
        #[command(flatten)]
        game: GameArgs,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long)]
        max_outer: Option<usize>,
    },
    /// Dynamic-programming value iteration from v = 0.
    ValueIterate {
        #[command(flatten)]
        game: GameArgs,
        #[arg(short, default_value_t = 1000)]
        k: usize,
    },
    /// Classify uniqueness over an affine slice of payment space.
    Explore {
        input: PathBuf,
        #[command(flatten)]
        slice: SliceArgs,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Exact boundary-candidate lines of a 2-D slice (deterministic games).
    ExactCells {
        input: PathBuf,
        #[command(flatten)]
        slice: SliceArgs,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Print a built-in game description.
    Example {
        /// `example` (3-state worked example) or `decoupled` (two absorbing
        /// states, not structurally solvable).
        #[arg(long, default_value = "example")]
        fixture: String,
    },
}

struct Failure {
    code: u8,
    kind: &'static str,
    message: String,
}

impl Failure {
    fn validation(kind: &'static str, message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            kind,
            message: message.into(),
        }
    }

    fn solver(kind: &'static str, message: impl Into<String>) -> Self {
        Failure {
            code: 3,
            kind,
            message: message.into(),
        }
    }
}

fn load_game(path: &PathBuf) -> Result<GameSpec, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::validation("io", format!("{}: {e}", path.display())))?;
    GameSpec::from_json(&text).map_err(|e| Failure::validation("validation", e.to_string()))
}

fn payment_for(spec: &GameSpec, g: &[f64]) -> Result<PaymentVector, Failure> {
    if g.is_empty() {
        return Ok(spec.base_payment());
    }
    if g.len() != spec.n_states() {
        return Err(Failure::validation(
            "validation",
            format!(
                "--g needs one offset per state ({} states, got {})",
                spec.n_states(),
                g.len()
            ),
        ));
    }
    Ok(spec.payment_with_state_offsets(g))
}

fn slice_for(spec: &GameSpec, args: &SliceArgs) -> Result<AffineSlice, Failure> {
    if args.dir_states.is_empty() {
        return Err(Failure::validation(
            "validation",
            "at least one --dir-state is required",
        ));
    }
    let mut directions = Vec::new();
    for id in &args.dir_states {
        let i = spec.state_index(id).ok_or_else(|| {
            Failure::validation("validation", format!("unknown state id {id:?}"))
        })?;
        directions.push(spec.state_direction(i));
    }
    let dims = directions.len();
    Ok(AffineSlice {
        base: spec.base_payment(),
        directions,
        bounds: vec![(args.lo, args.hi); dims],
        resolution: args.resolution,
    })
}

fn solve_failure(err: SolveError) -> Failure {
    match err {
        SolveError::MaxOuterIterationsExceeded { .. } => {
            Failure::solver("iteration-bound", err.to_string())
        }
        SolveError::EnumerationCapExceeded { .. } => Failure::solver("cap", err.to_string()),
        SolveError::Markov(e) => Failure::solver("markov", e.to_string()),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.cmd {
        Cmd::CheckStructure { input, cap } => {
            let spec = load_game(&input)?;
            let report = structural_verdict(&spec, cap)
                .map_err(|e| Failure::validation("structural", e.to_string()))?;
            println!(
                "{}",
                serde_json::to_string_pretty(&report.to_json(&spec)).unwrap()
            );
            Ok(())
        }
        Cmd::Solve {
            game,
            tol,
            max_outer,
            anchor,
        } => {
            let spec = load_game(&game.input)?;
            let r = payment_for(&spec, &game.g)?;
            let anchor = match &anchor {
                Some(id) => spec.state_index(id).ok_or_else(|| {
                    Failure::validation("validation", format!("unknown state id {id:?}"))
                })?,
                None => spec.n_states() - 1,
            };
            let opts = SolveOptions { tol, max_outer };
            match hoffman_karp(&spec, &r, &Policy::first(&spec), opts).map_err(solve_failure)? {
                SolveOutcome::Eigen(pair, trace) => {
                    let shift = pair.bias[anchor];
                    let bias: Vec<f64> = pair.bias.iter().map(|v| v - shift).collect();
                    println!(
                        "{}",
                        serde_json::to_string_pretty(&json!({
                            "lambda": pair.lambda,
                            "bias": bias,
                            "anchor": spec.state_ids()[anchor],
                            "residual": pair.residual,
                            "tolerance": tol,
                            "outer_steps": trace.steps.len(),
                        }))
                        .unwrap()
                    );
                    Ok(())
                }
                SolveOutcome::NotWellPosed { sigma, gain, .. } => Err(Failure::solver(
                    "not-well-posed",
                    format!(
                        "no eigenpair: policy {:?} has state-dependent gain {:?}",
                        sigma.choice, gain
                    ),
                )),
            }
        }
        Cmd::Certify {
            game,
            tol,
            cap_subsets,
        } => {
            let spec = load_game(&game.input)?;
            let r = payment_for(&spec, &game.g)?;
            let opts = SolveOptions {
                tol,
                max_outer: None,
            };
            let pair =
                match hoffman_karp(&spec, &r, &Policy::first(&spec), opts).map_err(solve_failure)? {
                    SolveOutcome::Eigen(pair, _) => pair,
                    SolveOutcome::NotWellPosed { gain, .. } => {
                        return Err(Failure::solver(
                            "not-well-posed",
                            format!("no eigenpair: state-dependent gain {gain:?}"),
                        ))
                    }
                };
            let cert = certify_uniqueness(
                &spec,
                &r,
                &pair,
                CertifyOptions {
                    tol,
                    sigma_cap: cap_subsets,
                },
            )
            .map_err(solve_failure)?;
            println!("{}", serde_json::to_string_pretty(&cert).unwrap());
            Ok(())
        }
        Cmd::PolicyTrace {
            game,
            tol,
            max_outer,
        } => {
            let spec = load_game(&game.input)?;
            let r = payment_for(&spec, &game.g)?;
            let opts = SolveOptions { tol, max_outer };
            let trace =
                match hoffman_karp(&spec, &r, &Policy::first(&spec), opts).map_err(solve_failure)? {
                    SolveOutcome::Eigen(_, trace) => trace,
                    SolveOutcome::NotWellPosed { trace, .. } => trace,
                };
            println!("{}", serde_json::to_string_pretty(&trace).unwrap());
            Ok(())
        }
        Cmd::ValueIterate { game, k } => {
            let spec = load_game(&game.input)?;
            let r = payment_for(&spec, &game.g)?;
            if k == 0 {
                return Err(Failure::validation("validation", "-k must be at least 1"));
            }
            let (v, mean) = spec.value_iterate(&r, k);
            println!(
                "{}",
                serde_json::to_string_pretty(&json!({
                    "k": k,
                    "v": v,
                    "mean_estimate": mean,
                }))
                .unwrap()
            );
            Ok(())
        }
        Cmd::Explore {
            input,
            slice,
            format,
        } => {
            let spec = load_game(&input)?;
            let slice = slice_for(&spec, &slice)?;
            let map = explore_slice(&spec, &slice).map_err(fan_failure)?;
            match format {
                Format::Csv => print!("{}", map.to_csv()),
                Format::Json => println!("{}", serde_json::to_string_pretty(&map).unwrap()),
            }
            Ok(())
        }
        Cmd::ExactCells {
            input,
            slice,
            format,
        } => {
            let spec = load_game(&input)?;
            let slice = slice_for(&spec, &slice)?;
            let lines = exact_deterministic_cells_2d(&spec, &slice).map_err(fan_failure)?;
            match format {
                Format::Json => println!("{}", serde_json::to_string_pretty(&lines).unwrap()),
                Format::Csv => {
                    println!("a,b,c");
                    for l in &lines {
                        println!("{},{},{}", l.a, l.b, l.c);
                    }
                }
            }
            Ok(())
        }
        Cmd::Example { fixture } => {
            let raw = match fixture.as_str() {
                "example" => fixture::example_raw(),
                "decoupled" => fixture::decoupled_game([0.0, 1.0]).to_raw(),
                other => {
                    return Err(Failure::validation(
                        "validation",
                        format!("unknown fixture {other:?} (example, decoupled)"),
                    ))
                }
            };
            println!("{}", serde_json::to_string_pretty(&raw).unwrap());
            Ok(())
        }
    }
}

fn fan_failure(err: FanError) -> Failure {
    match err {
        FanError::DependentDirections | FanError::BadSlice(_) => {
            Failure::validation("slice", err.to_string())
        }
        FanError::Game(_) | FanError::Structural(_) | FanError::NotSolvable
        | FanError::MaxPlus(_) => Failure::validation("structural", err.to_string()),
        FanError::CircuitCapExceeded { .. } => Failure::solver("cap", err.to_string()),
        FanError::Solve(e) => solve_failure(e),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let seed = cli.seed;
    let start = Instant::now();
    let result = run(cli);
    let elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    match result {
        Ok(()) => {
            eprintln!("{}", json!({ "elapsed_ms": elapsed_ms, "seed": seed }));
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!(
                "{}",
                json!({
                    "error": f.message,
                    "kind": f.kind,
                    "exit": f.code,
                    "elapsed_ms": elapsed_ms,
                    "seed": seed,
                })
            );
            ExitCode::from(f.code)
        }
    }
}
