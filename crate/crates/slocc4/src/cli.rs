//! Command-line front end: file ingestion, subcommand dispatch, and
//! deterministic reports in text or JSON. Exit codes are stable for
//! scripting: 0 success or equivalent, 10 inequivalent, 3 undecided,
//! 2 bad input, 4 internal fault, 5 spectrum outside the exact field.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};

use crate::canonical::{orbit_min, residual_orbit, standard_form};
use crate::census::{genuine_filter, CensusTable};
use crate::decide::{decide_equivalence, matrix_json, quad_json, Budget, Diagnostics, Verdict};
use crate::error::{Error, Result};
use crate::exact::{parse_matrix, ExactMatrix, Gaussian};
use crate::realign::{rank_one_factor, realign, RealignmentShape};
use crate::state::{
    arrange_axes, local_ranks, random_state, read_state_json, to_matrix_pair, write_state_json,
    CompositeSide, RandomMode, StateShape, StateTensor,
};

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Parser)]
#[command(
    name = "slocc4",
    version,
    about = "Exact SLOCC equivalence toolkit for 2 x L x M x N pure states"
)]
struct Cli {
    /// Report format.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
    /// Seed for all randomized sampling; fixed default for reproducibility.
    #[arg(long, default_value_t = 0x0051_0cc4, global = true)]
    seed: u64,
    /// Random parameter points tried per stabilizer element.
    #[arg(long, default_value_t = 24, global = true)]
    samples: usize,
    /// Wall-clock budget for one decision, in milliseconds.
    #[arg(long, global = true)]
    timeout_ms: Option<u64>,
    /// JSON file extending the built-in omega table.
    #[arg(long, global = true)]
    omega_table: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Reduce a state to its standard form and report the family data.
    Classify {
        /// State file (JSON); omit when --batch is given.
        state: Option<PathBuf>,
        /// Directory of state files processed concurrently, one report each.
        #[arg(long)]
        batch: Option<PathBuf>,
    },
    /// Decide SLOCC equivalence of two states sharing a shape.
    Compare { a: PathBuf, b: PathBuf },
    /// Count genuine entanglement families of a 2 x L x M x N system.
    Census { l: usize, m: usize, n: usize },
    /// Realign a composite MN x MN operator and test the tensor split.
    Realign { matrix: PathBuf, m: usize, n: usize },
    /// Print the residual cross-ratio orbit of a free eigenvalue.
    Orbit { lambda: String },
    /// Emit a random state file.
    Random {
        d1: usize,
        d2: usize,
        d3: usize,
        d4: usize,
        /// Largest amplitude magnitude.
        #[arg(long, default_value_t = 1)]
        bound: u64,
        /// Draw signed Gaussian integers instead of nonnegative integers.
        #[arg(long)]
        signed: bool,
        /// Write the state file here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

pub fn run() -> i32 {
    let args: Vec<String> = std::env::args().collect();
    let mut stdout = std::io::stdout().lock();
    run_with_output(&args, &mut stdout)
}

/// Parse arguments, dispatch, and write the report. Returns the process
/// exit code; all output (including errors) goes to `out`.
pub fn run_with_output(args: &[String], out: &mut dyn std::io::Write) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = write!(out, "{e}");
            return code;
        }
    };
    if cli.samples == 0 {
        let _ = writeln!(out, "error: --samples must be positive");
        return 2;
    }
    if cli.timeout_ms == Some(0) {
        let _ = writeln!(out, "error: --timeout-ms must be positive");
        return 2;
    }
    match dispatch(&cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(out, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: &Cli, out: &mut dyn std::io::Write) -> Result<i32> {
    match &cli.cmd {
        Cmd::Classify { state, batch } => match (state, batch) {
            (Some(_), Some(_)) => {
                Err(Error::Parse("give either a state file or --batch, not both".into()))
            }
            (Some(path), None) => {
                let report = classify_report(path, cli.format)?;
                write_out(out, &report)?;
                Ok(0)
            }
            (None, Some(dir)) => batch_classify(dir, cli.format, out),
            (None, None) => Err(Error::Parse("classify needs a state file or --batch".into())),
        },
        Cmd::Compare { a, b } => cmd_compare(cli, a, b, out),
        Cmd::Census { l, m, n } => cmd_census(cli, [*l, *m, *n], out),
        Cmd::Realign { matrix, m, n } => cmd_realign(cli, matrix, *m, *n, out),
        Cmd::Orbit { lambda } => cmd_orbit(cli, lambda, out),
        Cmd::Random { d1, d2, d3, d4, bound, signed, out: dest } => {
            cmd_random(cli, [*d1, *d2, *d3, *d4], *bound, *signed, dest.as_deref(), out)
        }
    }
}

fn write_out(out: &mut dyn std::io::Write, s: &str) -> Result<()> {
    out.write_all(s.as_bytes())
        .and_then(|_| if s.ends_with('\n') { Ok(()) } else { out.write_all(b"\n") })
        .map_err(|e| Error::Parse(format!("writing report: {e}")))
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn matrix_text(m: &ExactMatrix, indent: &str) -> String {
    (0..m.rows)
        .map(|r| {
            let row: Vec<String> = (0..m.cols).map(|c| m.at(r, c).to_string()).collect();
            format!("{indent}[{}]", row.join(", "))
        })
        .collect::<Vec<_>>()
        .join("\n")
}

// --- classify ---------------------------------------------------------------

fn classify_report(path: &Path, format: Format) -> Result<String> {
    let (t, qubit_axis, single_axis) = read_state_json(&read_file(path)?)?;
    if !t.is_valid() {
        return Err(Error::ZeroState);
    }
    let ranks = local_ranks(&t);
    let (shape_ok, shape_note) = genuine_filter(&t.shape);
    let full_ranks = ranks
        .iter()
        .zip(t.shape.dims.iter())
        .all(|(r, d)| r == d);
    let genuine = shape_ok && full_ranks;
    let (arranged, _record) = arrange_axes(&t, qubit_axis, single_axis)?;
    let pair = to_matrix_pair(&arranged)?;
    let (sf, route) = standard_form(&arranged)?;
    let routed = route.apply(&pair)?;
    let verified = routed.gamma1 == sf.e_part && routed.gamma2 == sf.j_part;
    if !verified {
        return Err(Error::Internal("standard-form route failed re-verification".into()));
    }
    let signature = sf.signature().to_string();
    let side = match pair.composite_side {
        CompositeSide::Columns => "columns",
        CompositeSide::Rows => "rows",
    };

    Ok(match format {
        Format::Text => {
            let mut s = String::new();
            s.push_str(&format!(
                "shape: {:?}  (qubit axis {qubit_axis}, single axis {single_axis})\n",
                t.shape.dims
            ));
            s.push_str(&format!("local ranks: {ranks:?}\n"));
            s.push_str(&format!(
                "genuine: {} ({}{})\n",
                if genuine { "yes" } else { "no" },
                shape_note,
                if full_ranks { "" } else { "; some local rank is deficient" }
            ));
            s.push_str(&format!(
                "composite side: {side} (pair {}x{})\n",
                pair.gamma1.rows, pair.gamma1.cols
            ));
            s.push_str(&format!("family signature: {signature}\n"));
            s.push_str(&format!("standard form E:\n{}\n", matrix_text(&sf.e_part, "  ")));
            s.push_str(&format!("standard form J:\n{}\n", matrix_text(&sf.j_part, "  ")));
            s.push_str(&format!("route T0:\n{}\n", matrix_text(&route.t, "  ")));
            s.push_str(&format!("route P0:\n{}\n", matrix_text(&route.p, "  ")));
            s.push_str(&format!("route Q0:\n{}\n", matrix_text(&route.q, "  ")));
            s.push_str("route verified: maps the arranged pair onto the standard form\n");
            s
        }
        Format::Json => serde_json::to_string_pretty(&serde_json::json!({
            "shape": t.shape.dims,
            "qubit_axis": qubit_axis,
            "single_axis": single_axis,
            "local_ranks": ranks,
            "genuine": genuine,
            "genuine_note": shape_note,
            "composite_side": side,
            "signature": signature,
            "standard_form": {
                "e": matrix_json(&sf.e_part),
                "j": matrix_json(&sf.j_part),
            },
            "route": {
                "t": matrix_json(&route.t),
                "p": matrix_json(&route.p),
                "q": matrix_json(&route.q),
            },
            "route_verified": verified,
        }))
        .unwrap(),
    })
}

// --- compare ----------------------------------------------------------------

fn diagnostics_text(d: &Diagnostics) -> String {
    let mut s = String::new();
    if let Some((sa, sb)) = &d.signatures {
        s.push_str(&format!("signature a: {sa}\nsignature b: {sb}\n"));
    }
    s.push_str(&format!(
        "mobius elements: {} (exhaustive: {}), commutant dim: {}\n",
        d.mobius_elements, d.mobius_exhaustive, d.commutant_dim
    ));
    s.push_str(&format!(
        "certain failures: {}, unresolved elements: {}, samples tried: {} (seed {})\n",
        d.certain_failures, d.unresolved_elements, d.samples_tried, d.seed
    ));
    if let Some(r) = &d.search {
        s.push_str(&format!(
            "search: {} candidates, {} exact solves, timed out: {}\n",
            r.candidates_tried, r.exact_solves, r.timed_out
        ));
    }
    for note in &d.notes {
        s.push_str(&format!("note: {note}\n"));
    }
    s
}

fn cmd_compare(cli: &Cli, a: &Path, b: &Path, out: &mut dyn std::io::Write) -> Result<i32> {
    let (ta, qa, sa) = read_state_json(&read_file(a)?)?;
    let (tb, qb, sb) = read_state_json(&read_file(b)?)?;
    if (qa, sa) != (qb, sb) {
        return Err(Error::ShapeMismatch(format!(
            "axis designations disagree: (qubit {qa}, single {sa}) vs (qubit {qb}, single {sb})"
        )));
    }
    let budget = Budget {
        samples: cli.samples,
        time_limit: cli.timeout_ms.map(Duration::from_millis),
        seed: cli.seed,
    };
    let verdict = decide_equivalence(&ta, &tb, qa, sa, &budget)?;
    let report = match cli.format {
        Format::Json => serde_json::to_string_pretty(&verdict.to_json()).unwrap(),
        Format::Text => match &verdict {
            Verdict::Equivalent { witness } => {
                let mut s = String::from("verdict: equivalent\n");
                s.push_str("witness operators (original particle order):\n");
                for (name, m) in [
                    ("A1", &witness.a1),
                    ("A2", &witness.a2),
                    ("A3", &witness.a3),
                    ("A4", &witness.a4),
                ] {
                    s.push_str(&format!("{name}:\n{}\n", matrix_text(m, "  ")));
                }
                s.push_str("witness verified: maps state a onto state b\n");
                s
            }
            Verdict::Inequivalent { reason, diagnostics } => {
                let r = match reason {
                    crate::decide::InequivalenceReason::SignatureMismatch => "signature_mismatch",
                    crate::decide::InequivalenceReason::OrbitExhausted => "orbit_exhausted",
                    crate::decide::InequivalenceReason::MinorInfeasible => "minor_infeasible",
                };
                format!("verdict: inequivalent\nreason: {r}\n{}", diagnostics_text(diagnostics))
            }
            Verdict::SameFamilyUndecided { diagnostics } => {
                format!("verdict: same_family_undecided\n{}", diagnostics_text(diagnostics))
            }
        },
    };
    write_out(out, &report)?;
    Ok(match verdict {
        Verdict::Equivalent { .. } => 0,
        Verdict::Inequivalent { .. } => 10,
        Verdict::SameFamilyUndecided { .. } => 3,
    })
}

// --- census -----------------------------------------------------------------

fn load_table(cli: &Cli) -> Result<CensusTable> {
    let mut table = CensusTable::seeded();
    if let Some(path) = &cli.omega_table {
        table.extend_from_json(&read_file(path)?)?;
    }
    Ok(table)
}

fn cmd_census(cli: &Cli, lmn: [usize; 3], out: &mut dyn std::io::Write) -> Result<i32> {
    let [l, m, n] = lmn;
    let table = load_table(cli)?;
    let shape = StateShape::new([2, l, m, n])?;
    let families = table.count_families(&shape)?;
    let report = match cli.format {
        Format::Text => format!("families(2x{l}x{m}x{n}) = {families}"),
        Format::Json => serde_json::to_string_pretty(&serde_json::json!({
            "shape": [2, l, m, n],
            "families": families,
        }))
        .unwrap(),
    };
    write_out(out, &report)?;
    Ok(0)
}

// --- realign ----------------------------------------------------------------

fn cmd_realign(
    cli: &Cli,
    path: &Path,
    m: usize,
    n: usize,
    out: &mut dyn std::io::Write,
) -> Result<i32> {
    let mat = parse_matrix(&read_file(path)?)?;
    let grid = realign(&mat, RealignmentShape::square(m, n))?;
    let rank = grid.rank();
    let factors = rank_one_factor(&mat, m, n);
    let report = match cli.format {
        Format::Text => {
            let mut s = format!("realignment ({}x{} blocks):\n{}\n", m, n, matrix_text(&grid, "  "));
            s.push_str(&format!("realignment rank: {rank}\n"));
            match &factors {
                Some(f) => s.push_str(&format!(
                    "tensor split: yes\nleft factor:\n{}\nright factor:\n{}\n",
                    matrix_text(&f.left, "  "),
                    matrix_text(&f.right, "  ")
                )),
                None => s.push_str("tensor split: no\n"),
            }
            s
        }
        Format::Json => serde_json::to_string_pretty(&serde_json::json!({
            "realignment": matrix_json(&grid),
            "rank": rank,
            "tensor_split": factors.as_ref().map(|f| serde_json::json!({
                "left": matrix_json(&f.left),
                "right": matrix_json(&f.right),
            })),
        }))
        .unwrap(),
    };
    write_out(out, &report)?;
    Ok(0)
}

// --- orbit ------------------------------------------------------------------

fn cmd_orbit(cli: &Cli, lambda: &str, out: &mut dyn std::io::Write) -> Result<i32> {
    let lam: Gaussian = lambda
        .parse()
        .map_err(|e| Error::Parse(format!("lambda {lambda:?}: {e}")))?;
    let orbit = residual_orbit(&lam)?;
    let min = orbit_min(&lam)?;
    let report = match cli.format {
        Format::Text => format!(
            "orbit: {{{}}}\norbit minimum: {min}",
            orbit.iter().map(|g| g.to_string()).collect::<Vec<_>>().join(", ")
        ),
        Format::Json => serde_json::to_string_pretty(&serde_json::json!({
            "lambda": lam.to_string(),
            "orbit": orbit.iter().map(|g| g.to_string()).collect::<Vec<_>>(),
            "min": min.to_string(),
        }))
        .unwrap(),
    };
    write_out(out, &report)?;
    Ok(0)
}

// --- random -----------------------------------------------------------------

fn cmd_random(
    cli: &Cli,
    dims: [usize; 4],
    bound: u64,
    signed: bool,
    dest: Option<&Path>,
    out: &mut dyn std::io::Write,
) -> Result<i32> {
    let shape = StateShape::new(dims)?;
    let qubit_axis = dims
        .iter()
        .position(|&d| d == 2)
        .map(|k| k + 1)
        .ok_or_else(|| Error::NoQubitAxis(format!("shape {dims:?}")))?;
    let single_axis = dims
        .iter()
        .enumerate()
        .filter(|&(k, _)| k + 1 != qubit_axis)
        .max_by_key(|&(_, &d)| d)
        .map(|(k, _)| k + 1)
        .unwrap();
    let mode = if signed { RandomMode::SignedGaussian } else { RandomMode::NonnegativeInteger };
    let t = random_state(shape, bound, cli.seed, mode);
    if !t.is_valid() {
        return Err(Error::ZeroState);
    }
    let text = write_state_json(&t, qubit_axis, single_axis);
    match dest {
        Some(path) => {
            write_atomic(path, &text)?;
            write_out(out, &format!("wrote {}", path.display()))?;
        }
        None => write_out(out, &text)?,
    }
    Ok(0)
}

// --- batch ------------------------------------------------------------------

fn write_atomic(path: &Path, content: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, content).map_err(|e| Error::Parse(format!("{}: {e}", tmp.display())))?;
    fs::rename(&tmp, path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

/// Classify every .json state file in the directory, one report file per
/// input plus a summary index. Items are independent, so they run on a
/// small thread pool; all outputs are written atomically.
fn batch_classify(dir: &Path, format: Format, out: &mut dyn std::io::Write) -> Result<i32> {
    let mut inputs: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::Parse(format!("{}: {e}", dir.display())))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension().is_some_and(|x| x == "json")
                && !p.file_name().is_some_and(|f| {
                    let f = f.to_string_lossy();
                    f.ends_with(".report.json") || f == "index.json"
                })
        })
        .collect();
    inputs.sort();
    if inputs.is_empty() {
        return Err(Error::Parse(format!("no .json state files in {}", dir.display())));
    }

    let ext = match format {
        Format::Text => "report.txt",
        Format::Json => "report.json",
    };
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<(String, std::result::Result<String, String>)>> =
        Mutex::new(Vec::new());
    let workers = inputs.len().min(8);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(path) = inputs.get(i) else { break };
                let name = path.file_name().unwrap().to_string_lossy().into_owned();
                let outcome = classify_report(path, format)
                    .and_then(|report| {
                        let target = path.with_extension(ext);
                        write_atomic(&target, &report)?;
                        Ok(target.file_name().unwrap().to_string_lossy().into_owned())
                    })
                    .map_err(|e| e.to_string());
                results.lock().unwrap().push((name, outcome));
            });
        }
    });

    let mut rows = results.into_inner().unwrap();
    rows.sort_by(|a, b| a.0.cmp(&b.0));
    let mut all_ok = true;
    let index: Vec<serde_json::Value> = rows
        .iter()
        .map(|(name, outcome)| match outcome {
            Ok(report) => serde_json::json!({"file": name, "report": report, "ok": true}),
            Err(e) => {
                all_ok = false;
                serde_json::json!({"file": name, "ok": false, "error": e})
            }
        })
        .collect();
    write_atomic(
        &dir.join("index.json"),
        &serde_json::to_string_pretty(&serde_json::json!({ "reports": index })).unwrap(),
    )?;
    for (name, outcome) in &rows {
        match outcome {
            Ok(report) => write_out(out, &format!("{name}: ok ({report})"))?,
            Err(e) => write_out(out, &format!("{name}: error: {e}"))?,
        }
    }
    write_out(out, &format!("index written to {}", dir.join("index.json").display()))?;
    Ok(if all_ok { 0 } else { 2 })
}
