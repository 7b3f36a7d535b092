//! Command-line front end.
//!
//! Exit codes: 0 on completion (whatever the verdict), 1 on I/O failure while
//! writing outputs, 2 for configuration or input errors, 3 when every probe
//! aborted.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::config::{
    complex_value, load_tree, parse_complex, parse_complex_list, set_path, Mode, RunConfig,
};
use crate::linalg;
use crate::monodromy::{Classification, ProbeOutcome};
use crate::obstruction::{verdict, ObstructionOptions, ObstructionVerdict};
use crate::report::{execute, to_csv, RunError, RunReport};
use crate::systems;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_ALL_ABORTED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "monodromy", version, about = "Monodromy probes along complex-time loops")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Probe an explicit list of candidate points.
    Probe(RunArgs),
    /// Probe every node of a grid over a rectangle.
    Scan(RunArgs),
    /// Re-judge a saved report, optionally with other tolerances.
    Check(CheckArgs),
    /// Built-in systems.
    Systems {
        #[command(subcommand)]
        action: SystemsAction,
    },
}

#[derive(Debug, Subcommand)]
enum SystemsAction {
    /// List built-in systems with parameters and reference setups.
    List {
        /// Print JSON instead of text.
        #[arg(long)]
        json: bool,
    },
}

/// Flags override the matching keys of `--config`. Complex values are
/// constant expressions such as `0.2+2.5*i`; lists are comma-separated.
#[derive(Debug, Args)]
struct RunArgs {
    /// JSON or TOML config file (`.toml` extension selects TOML).
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Built-in system name.
    #[arg(long)]
    system: Option<String>,
    /// File holding a system definition in the DSL.
    #[arg(long, conflicts_with = "system")]
    dsl: Option<PathBuf>,
    /// System parameter, NAME=VALUE (repeatable).
    #[arg(long = "param", value_name = "NAME=VALUE")]
    params: Vec<String>,
    /// Initial state, comma-separated.
    #[arg(long)]
    x0: Option<String>,
    /// Base point of every loop.
    #[arg(long)]
    t0: Option<String>,
    /// Candidate point (repeatable).
    #[arg(long = "candidate")]
    candidates: Vec<String>,
    /// Scan rectangle as RE_MIN,RE_MAX,IM_MIN,IM_MAX.
    #[arg(long, allow_hyphen_values = true)]
    domain: Option<String>,
    /// Grid size as NX,NY.
    #[arg(long)]
    grid: Option<String>,
    /// Integrator relative tolerance [default: 1e-10].
    #[arg(long)]
    rel_tol: Option<f64>,
    /// Integrator absolute tolerance [default: 1e-12].
    #[arg(long)]
    abs_tol: Option<f64>,
    /// Step budget per integration leg.
    #[arg(long)]
    max_steps: Option<u64>,
    /// Arc-length spacing of recorded checkpoints; 0 records none.
    #[arg(long)]
    checkpoint_stride: Option<f64>,
    /// Loop radius [default: 0.4 for probes, 0.45 x grid spacing for scans].
    #[arg(long)]
    radius: Option<f64>,
    /// Loop clockwise instead of counterclockwise.
    #[arg(long)]
    clockwise: bool,
    /// Approach waypoint (repeatable).
    #[arg(long = "waypoint", allow_hyphen_values = true)]
    waypoints: Vec<String>,
    /// Distance at which the state counts as returned [default: 1e-6].
    #[arg(long)]
    return_tol: Option<f64>,
    /// Distance |T - I| below which a loop matrix counts as trivial [default: 1e-6].
    #[arg(long)]
    matrix_tol: Option<f64>,
    /// Laps tried before a probe is called non-returning [default: 12].
    #[arg(long)]
    max_traversals: Option<u32>,
    /// Relative commutator norm above which a pair is a witness [default: 1e-4].
    #[arg(long)]
    comm_tol: Option<f64>,
    /// Exponent bound of the resonance search [default: 6].
    #[arg(long)]
    k_max: Option<u32>,
    /// Report JSON path.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Per-node CSV path.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Debug, Args)]
struct CheckArgs {
    /// Report JSON written by `probe` or `scan`.
    report: PathBuf,
    /// Override the report's commutator threshold.
    #[arg(long)]
    comm_tol: Option<f64>,
    /// Override the resonance exponent bound.
    #[arg(long)]
    k_max: Option<u32>,
    /// Override the reciprocal-pairing tolerance.
    #[arg(long)]
    pair_tol: Option<f64>,
    /// Override the resonance tolerance.
    #[arg(long)]
    resonance_tol: Option<f64>,
}

struct Failure {
    code: i32,
    message: String,
}

fn config_error(message: impl std::fmt::Display) -> Failure {
    Failure {
        code: EXIT_CONFIG,
        message: message.to_string(),
    }
}

/// Run with explicit arguments (including the program name) and return the
/// exit code.
pub fn run_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Probe(args) => cmd_run(Mode::Probe, &args),
        Command::Scan(args) => cmd_run(Mode::Scan, &args),
        Command::Check(args) => cmd_check(&args),
        Command::Systems {
            action: SystemsAction::List { json },
        } => cmd_systems_list(json),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

pub fn run() -> i32 {
    run_with_args(std::env::args_os())
}

fn build_config(mode: Mode, args: &RunArgs) -> Result<RunConfig, Failure> {
    let mut tree = match &args.config {
        Some(path) => load_tree(path).map_err(config_error)?,
        None => json!({}),
    };
    let set = |tree: &mut Value, path: &[&str], v: Value| set_path(tree, path, v);
    set(&mut tree, &["mode"], json!(mode));
    if let Some(name) = &args.system {
        set(&mut tree, &["system", "catalog"], json!(name));
        remove(&mut tree, &["system", "dsl"]);
    }
    if let Some(path) = &args.dsl {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
        set(&mut tree, &["system", "dsl"], json!(text));
        remove(&mut tree, &["system", "catalog"]);
    }
    for p in &args.params {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| config_error(format!("--param expects NAME=VALUE, got `{p}`")))?;
        let z = parse_complex(v).map_err(config_error)?;
        set(&mut tree, &["system", "params", k.trim()], complex_value(z));
    }
    if let Some(x0) = &args.x0 {
        let xs = parse_complex_list(x0).map_err(config_error)?;
        set(&mut tree, &["initial_state"], Value::Array(xs.into_iter().map(complex_value).collect()));
    }
    if let Some(t0) = &args.t0 {
        set(&mut tree, &["t0"], complex_value(parse_complex(t0).map_err(config_error)?));
    }
    if !args.candidates.is_empty() {
        let cs = args
            .candidates
            .iter()
            .map(|c| parse_complex(c).map(complex_value))
            .collect::<Result<Vec<_>, _>>()
            .map_err(config_error)?;
        set(&mut tree, &["candidates"], Value::Array(cs));
    }
    if let Some(d) = &args.domain {
        let v = parse_reals(d, 4, "--domain")?;
        set(
            &mut tree,
            &["domain"],
            json!({"re_min": v[0], "re_max": v[1], "im_min": v[2], "im_max": v[3]}),
        );
    }
    if let Some(g) = &args.grid {
        let v: Vec<usize> = g
            .split([',', 'x'])
            .map(|s| s.trim().parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|_| config_error(format!("--grid expects NX,NY, got `{g}`")))?;
        if v.len() != 2 {
            return Err(config_error(format!("--grid expects NX,NY, got `{g}`")));
        }
        set(&mut tree, &["grid"], json!([v[0], v[1]]));
    }
    let numbers: [(&[&str], Option<Value>); 11] = [
        (&["integrator", "rel_tol"], args.rel_tol.map(Value::from)),
        (&["integrator", "abs_tol"], args.abs_tol.map(Value::from)),
        (&["integrator", "max_steps"], args.max_steps.map(Value::from)),
        (&["integrator", "checkpoint_stride"], args.checkpoint_stride.map(Value::from)),
        (&["probe", "radius"], args.radius.map(Value::from)),
        (&["probe", "return_tol"], args.return_tol.map(Value::from)),
        (&["probe", "matrix_tol"], args.matrix_tol.map(Value::from)),
        (&["probe", "max_traversals"], args.max_traversals.map(Value::from)),
        (&["obstruction", "comm_tol"], args.comm_tol.map(Value::from)),
        (&["obstruction", "k_max"], args.k_max.map(Value::from)),
        (&["jobs"], args.jobs.map(Value::from)),
    ];
    for (path, v) in numbers {
        if let Some(v) = v {
            set(&mut tree, path, v);
        }
    }
    if args.clockwise {
        set(&mut tree, &["probe", "orientation"], json!(-1));
    }
    if !args.waypoints.is_empty() {
        let ws = args
            .waypoints
            .iter()
            .map(|w| parse_complex(w).map(complex_value))
            .collect::<Result<Vec<_>, _>>()
            .map_err(config_error)?;
        set(&mut tree, &["probe", "waypoints"], Value::Array(ws));
    }
    if let Some(p) = &args.output {
        set(&mut tree, &["output", "report"], json!(p));
    }
    if let Some(p) = &args.csv {
        set(&mut tree, &["output", "csv"], json!(p));
    }
    RunConfig::from_value(tree).map_err(config_error)
}

fn remove(tree: &mut Value, path: &[&str]) {
    let (last, parents) = path.split_last().expect("non-empty path");
    let mut node = tree;
    for key in parents {
        match node.get_mut(*key) {
            Some(n) => node = n,
            None => return,
        }
    }
    if let Some(obj) = node.as_object_mut() {
        obj.remove(*last);
    }
}

fn parse_reals(text: &str, count: usize, flag: &str) -> Result<Vec<f64>, Failure> {
    let v: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| config_error(format!("{flag} expects {count} comma-separated numbers")))?;
    if v.len() != count {
        return Err(config_error(format!("{flag} expects {count} comma-separated numbers")));
    }
    Ok(v)
}

fn cmd_run(mode: Mode, args: &RunArgs) -> Result<i32, Failure> {
    let config = build_config(mode, args)?;
    let report = execute(config).map_err(|e| match e {
        RunError::Pool(_) => Failure {
            code: EXIT_IO,
            message: e.to_string(),
        },
        _ => config_error(e),
    })?;

    let mut out = std::io::stdout().lock();
    for o in &report.scan.outcomes {
        let _ = writeln!(out, "{}", outcome_line(o));
    }
    print_verdict(&mut out, &report.verdict);

    if let Some(path) = &report.config.output.report {
        let text = report.to_json().map_err(|e| Failure {
            code: EXIT_IO,
            message: e.to_string(),
        })?;
        write_file(path, &text)?;
    }
    if let Some(path) = &report.config.output.csv {
        write_file(path, &to_csv(&report.scan))?;
    }
    Ok(if report.scan.all_aborted() { EXIT_ALL_ABORTED } else { EXIT_OK })
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure {
        code: EXIT_IO,
        message: format!("cannot write {}: {e}", path.display()),
    })
}

fn fmt_complex(z: num_complex::Complex64) -> String {
    if z.im < 0.0 {
        format!("{}-{}i", z.re, -z.im)
    } else {
        format!("{}+{}i", z.re, z.im)
    }
}

fn outcome_line(o: &ProbeOutcome) -> String {
    let mut s = format!(
        "{:<16} {:<12} laps={}",
        fmt_complex(o.candidate),
        o.classification.label(),
        o.traversals_used
    );
    if let Some(r) = o.return_residual {
        s.push_str(&format!(" return={r:.2e}"));
    }
    if let Some(d) = o.matrix_distance {
        s.push_str(&format!(" |T-I|={d:.3e}"));
    }
    if let Some(g) = &o.generator {
        if let Some(r) = g.residuals.symplectic_residual {
            s.push_str(&format!(" symplectic={r:.2e}"));
        }
    }
    if let Some(reason) = &o.abort_reason {
        s.push_str(&format!(" ({reason})"));
    }
    if o.classification == Classification::Skipped {
        s.push_str(" (inside base-point guard disk)");
    }
    s
}

fn print_verdict(out: &mut impl Write, v: &ObstructionVerdict) {
    let _ = writeln!(out, "verdict: {:?}", v.conclusion);
    for w in &v.witnesses {
        let _ = writeln!(
            out,
            "  witness: generators {} and {}, |[T1,T2]|_F = {:.6e} (relative {:.3e})",
            w.first, w.second, w.norm, w.relative
        );
    }
    for n in &v.notes {
        let _ = writeln!(out, "  note: {n}");
    }
}

fn cmd_check(args: &CheckArgs) -> Result<i32, Failure> {
    let text = std::fs::read_to_string(&args.report)
        .map_err(|e| config_error(format!("cannot read {}: {e}", args.report.display())))?;
    let report: RunReport =
        serde_json::from_str(&text).map_err(|e| config_error(format!("invalid report: {e}")))?;
    let gens = report.scan.generators();
    if let Some(g) = gens.first() {
        let n = g.matrix.nrows();
        if let Some(bad) = gens.iter().find(|h| h.matrix.nrows() != n) {
            return Err(config_error(format!(
                "invalid report: generator matrices of sizes {n} and {}",
                bad.matrix.nrows()
            )));
        }
        if n != report.system.dimension {
            return Err(config_error(format!(
                "invalid report: {n}x{n} generators for a system of dimension {}",
                report.system.dimension
            )));
        }
    }
    let base = report.config.obstruction;
    let opts = ObstructionOptions {
        comm_tol: args.comm_tol.unwrap_or(base.comm_tol),
        k_max: args.k_max.unwrap_or(base.k_max),
        pair_tol: args.pair_tol.unwrap_or(base.pair_tol),
        resonance_tol: args.resonance_tol.unwrap_or(base.resonance_tol),
    };
    let v = verdict(&report.scan, &opts).map_err(config_error)?;
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{} generator(s) from {}", gens.len(), report.system.name);
    print_verdict(&mut out, &v);
    for w in &v.witnesses {
        for row in linalg::to_rows(&w.commutator) {
            let cells: Vec<String> = row.iter().map(|z| fmt_complex(*z)).collect();
            let _ = writeln!(out, "    [{}]", cells.join(", "));
        }
    }
    Ok(EXIT_OK)
}

fn cmd_systems_list(as_json: bool) -> Result<i32, Failure> {
    let catalog = systems::catalog();
    let mut out = std::io::stdout().lock();
    if as_json {
        let text = serde_json::to_string_pretty(&catalog).map_err(|e| Failure {
            code: EXIT_IO,
            message: e.to_string(),
        })?;
        let _ = writeln!(out, "{text}");
        return Ok(EXIT_OK);
    }
    for e in &catalog {
        let _ = writeln!(out, "{}: {}", e.name, e.description);
        let _ = writeln!(out, "  state: ({})", e.state.join(", "));
        if !e.angles.is_empty() {
            let _ = writeln!(out, "  angles: {}", e.angles.join(", "));
        }
        for p in &e.params {
            let _ = writeln!(out, "  param {} = {}", p.name, fmt_complex(p.default));
        }
        if let Some(r) = &e.reference {
            let xs: Vec<String> = r.x0.iter().map(|z| fmt_complex(*z)).collect();
            let cs: Vec<String> = r.candidates.iter().map(|z| fmt_complex(*z)).collect();
            let _ = writeln!(
                out,
                "  reference: x0 = ({}), t0 = {}, candidates = [{}]",
                xs.join(", "),
                fmt_complex(r.t0),
                cs.join(", ")
            );
        }
    }
    Ok(EXIT_OK)
}
