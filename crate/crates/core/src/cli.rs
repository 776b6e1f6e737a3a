//! Command dispatch and JSON reports for the `thurston` binary.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::biset::SphereBiset;
use crate::contraction::{certify, is_orbisphere_contracting, Budget, ContractionError, Mealy};
use crate::decide::{decide_expanding, DecideBudgets};
use crate::levy::{
    classify_multicurve, find_levy_cycle, invariant_closure, verify_levy_certificate, LevyError, LiftEdge,
    MulticurveDigraph,
};
use crate::limit::{identification_classes, LimitPicture};
use crate::machine::{parse_machine, write_machine};
use crate::mating::{mate_bisets, mateability_report, Lamination};
use crate::torus::{getparam, is2cover, istor, torus_biset_from, TorVerdict, TorusError};

pub const SCHEMA: u32 = 1;

pub const EXIT_DECIDED: i32 = 0;
pub const EXIT_INPUT_ERROR: i32 = 1;
pub const EXIT_UNDECIDED: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "thurston", version, about = "Decide expansion, obstructions and matings of Thurston maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Args, Debug, Clone)]
struct Opts {
    /// Longest word (in letters) admitted in a nucleus search.
    #[arg(long, global = true)]
    max_word: Option<usize>,
    /// Largest intermediate set in a nucleus search.
    #[arg(long, global = true)]
    max_set: Option<usize>,
    /// Longest Levy-cycle period searched.
    #[arg(long, global = true)]
    max_period: Option<usize>,
    /// Longest conjugacy class searched for Levy cycles.
    #[arg(long, global = true)]
    max_len: Option<usize>,
    /// Depth of certificates or limit-space pictures.
    #[arg(long, global = true)]
    depth: Option<usize>,
    /// Recorded in the report; every procedure is deterministic.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file (image for `limit`, machine for `mate` and `torus --matrix`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Omit timings so that reports are byte-identical across runs.
    #[arg(long, global = true)]
    no_timings: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Nucleus over the minimal orbisphere structure, with a Mealy automaton.
    Contract { machine: PathBuf },
    /// Decide whether the machine is the biset of an expanding map.
    Expanding { machine: PathBuf },
    /// Torus-covered test and geometric decision; or build a machine from `--matrix`.
    Torus {
        machine: Option<PathBuf>,
        /// Matrix entries `m11,m12,m21,m22`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        matrix: Option<Vec<i64>>,
        /// Translation `v1,v2`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0,0")]
        shift: Vec<i64>,
        /// Rounds of the dovetailed search.
        #[arg(long)]
        rounds: Option<usize>,
    },
    /// Extract the affine parameters of a torus-covered machine.
    Params { machine: PathBuf },
    /// Search for an algebraic Levy cycle.
    Levy { machine: PathBuf },
    /// Classify a multicurve: classes on a machine, or an abstract lift graph.
    Multicurve {
        machine: Option<PathBuf>,
        /// One conjugacy class per line.
        #[arg(long)]
        classes: Option<PathBuf>,
        /// Replace the classes by their lift closure, up to this many classes.
        #[arg(long)]
        close: Option<usize>,
        /// Abstract lift graph: `node NAME` lines and `FROM -> TO DEGREE` lines.
        #[arg(long, conflicts_with_all = ["machine", "classes"])]
        graph: Option<PathBuf>,
    },
    /// Formal mating of two polynomial machines.
    Mate { plus: PathBuf, minus: PathBuf },
    /// Pinching-cycle search on two laminations.
    Pinch {
        #[arg(long)]
        plus: PathBuf,
        #[arg(long)]
        minus: PathBuf,
        #[arg(long)]
        degree: usize,
    },
    /// Identification edges of the limit space; image to `--out` (.ppm or .svg).
    Limit {
        machine: PathBuf,
        /// Image side length in pixels.
        #[arg(long, default_value_t = 512)]
        size: u32,
    },
}

#[derive(Serialize)]
struct Report {
    schema: u32,
    command: &'static str,
    input_sha256: String,
    verdict: String,
    exact: bool,
    result: Value,
    budgets: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    timings_ms: Option<f64>,
}

/// What a command produced, before it is wrapped into a report.
struct Outcome {
    verdict: String,
    decided: bool,
    result: Value,
    budgets: Value,
}

impl Outcome {
    fn decided(verdict: impl Into<String>, result: Value, budgets: Value) -> Self {
        Outcome { verdict: verdict.into(), decided: true, result, budgets }
    }

    fn undecided(verdict: impl Into<String>, result: Value, budgets: Value) -> Self {
        Outcome { verdict: verdict.into(), decided: false, result, budgets }
    }
}

struct Inputs {
    hasher: Sha256,
}

impl Inputs {
    fn new() -> Self {
        Inputs { hasher: Sha256::new() }
    }

    fn read(&mut self, path: &Path) -> Result<String, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        self.hasher.update((text.len() as u64).to_le_bytes());
        self.hasher.update(text.as_bytes());
        Ok(text)
    }

    fn machine(&mut self, path: &Path) -> Result<SphereBiset, String> {
        let text = self.read(path)?;
        parse_machine(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    fn lamination(&mut self, path: &Path) -> Result<Lamination, String> {
        let text = self.read(path)?;
        Lamination::parse(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    fn digest(self) -> String {
        hex::encode(self.hasher.finalize())
    }
}

/// Exit code and captured output of one invocation.
#[derive(Debug)]
pub struct RunOutput {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Run the CLI on `args`, including the program name.
pub fn run<I, T>(args: I) -> RunOutput
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                RunOutput { code: EXIT_INPUT_ERROR, stdout: String::new(), stderr: text }
            } else {
                RunOutput { code: EXIT_DECIDED, stdout: text, stderr: String::new() }
            };
        }
    };
    let name = command_name(&cli.command);
    let start = Instant::now();
    let mut inputs = Inputs::new();
    match dispatch(&cli.command, &cli.opts, &mut inputs) {
        Ok(outcome) => {
            let report = Report {
                schema: SCHEMA,
                command: name,
                input_sha256: inputs.digest(),
                verdict: outcome.verdict,
                exact: true,
                result: outcome.result,
                budgets: with_seed(outcome.budgets, cli.opts.seed),
                timings_ms: (!cli.opts.no_timings).then(|| start.elapsed().as_secs_f64() * 1e3),
            };
            let code = if outcome.decided { EXIT_DECIDED } else { EXIT_UNDECIDED };
            RunOutput {
                code,
                stdout: serde_json::to_string_pretty(&report).expect("reports serialize") + "\n",
                stderr: String::new(),
            }
        }
        Err(msg) => {
            let v = json!({ "schema": SCHEMA, "command": name, "error": msg });
            RunOutput {
                code: EXIT_INPUT_ERROR,
                stdout: serde_json::to_string_pretty(&v).expect("reports serialize") + "\n",
                stderr: format!("error: {msg}\n"),
            }
        }
    }
}

fn with_seed(mut budgets: Value, seed: Option<u64>) -> Value {
    if let (Some(s), Value::Object(m)) = (seed, &mut budgets) {
        m.insert("seed".into(), json!(s));
    }
    budgets
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Contract { .. } => "contract",
        Command::Expanding { .. } => "expanding",
        Command::Torus { .. } => "torus",
        Command::Params { .. } => "params",
        Command::Levy { .. } => "levy",
        Command::Multicurve { .. } => "multicurve",
        Command::Mate { .. } => "mate",
        Command::Pinch { .. } => "pinch",
        Command::Limit { .. } => "limit",
    }
}

fn decide_budgets(o: &Opts) -> DecideBudgets {
    let mut b = DecideBudgets::from_env();
    b.max_word = o.max_word.unwrap_or(b.max_word);
    b.max_set = o.max_set.unwrap_or(b.max_set);
    b.max_len = o.max_len.unwrap_or(b.max_len);
    b.max_period = o.max_period.unwrap_or(b.max_period);
    b
}

fn nucleus_budget(o: &Opts) -> Budget {
    let b = decide_budgets(o);
    Budget { max_word: b.max_word, max_set: b.max_set }
}

fn to_value<T: Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("reports serialize")
}

fn write_out(o: &Opts, bytes: &[u8]) -> Result<Option<String>, String> {
    match &o.out {
        Some(p) => {
            std::fs::write(p, bytes).map_err(|e| format!("{}: {e}", p.display()))?;
            Ok(Some(p.display().to_string()))
        }
        None => Ok(None),
    }
}

fn dispatch(c: &Command, o: &Opts, inputs: &mut Inputs) -> Result<Outcome, String> {
    match c {
        Command::Contract { machine } => contract(&inputs.machine(machine)?, o),
        Command::Expanding { machine } => {
            let b = inputs.machine(machine)?;
            let budgets = decide_budgets(o);
            let d = decide_expanding(&b, budgets).map_err(|e| e.to_string())?;
            Ok(Outcome { verdict: d.name().into(), decided: d.is_decided(), result: to_value(&d), budgets: to_value(&budgets) })
        }
        Command::Torus { machine, matrix, shift, rounds } => {
            let rounds = rounds.unwrap_or_else(|| decide_budgets(o).torus_rounds);
            match (machine, matrix) {
                (None, Some(m)) => build_torus(m, shift, o),
                (Some(path), None) => torus(&inputs.machine(path)?, rounds),
                _ => Err("give either a machine file or `--matrix`".into()),
            }
        }
        Command::Params { machine } => {
            let b = inputs.machine(machine)?;
            match getparam(&b) {
                Ok(p) => Ok(Outcome::decided("Params", to_value(&p), json!({}))),
                Err(e @ (TorusError::NotPrincipal(_) | TorusError::NotTorusCovered(_))) => {
                    let verdict = if matches!(e, TorusError::NotPrincipal(_)) { "NotPrincipal" } else { "NotTorusCovered" };
                    Ok(Outcome::decided(verdict, json!({ "reason": e.to_string() }), json!({})))
                }
                Err(e) => Err(e.to_string()),
            }
        }
        Command::Levy { machine } => {
            let b = inputs.machine(machine)?;
            let budgets = decide_budgets(o);
            let budgets_v = json!({ "max_len": budgets.max_len, "max_period": budgets.max_period });
            match find_levy_cycle(&b, budgets.max_len, budgets.max_period) {
                Some(cert) => {
                    let verified = verify_levy_certificate(&b, &cert);
                    Ok(Outcome::decided("LevyCycle", json!({ "certificate": cert, "verified": verified }), budgets_v))
                }
                None => Ok(Outcome::undecided("NoneWithinBudget", json!({}), budgets_v)),
            }
        }
        Command::Multicurve { machine, classes, close, graph } => match (machine, classes, graph) {
            (None, None, Some(g)) => {
                let text = inputs.read(g)?;
                let (nodes, edges) = parse_lift_graph(&text)?;
                let d = MulticurveDigraph::from_edges(nodes, edges).map_err(|e| e.to_string())?;
                Ok(Outcome::decided("Classified", to_value(&d), json!({})))
            }
            (Some(m), Some(cl), None) => {
                let b = inputs.machine(m)?;
                let text = inputs.read(cl)?;
                multicurve(&b, &text, *close)
            }
            _ => Err("give a machine with `--classes`, or `--graph`".into()),
        },
        Command::Mate { plus, minus } => {
            let p = inputs.machine(plus)?;
            let m = inputs.machine(minus)?;
            let mated = mate_bisets(&p, &m).map_err(|e| e.to_string())?;
            let text = write_machine(&mated);
            let written = write_out(o, text.as_bytes())?;
            let budgets = decide_budgets(o);
            let d = decide_expanding(&mated, budgets).map_err(|e| e.to_string())?;
            Ok(Outcome {
                verdict: d.name().into(),
                decided: d.is_decided(),
                result: json!({ "machine": text, "out": written, "decision": d }),
                budgets: to_value(&budgets),
            })
        }
        Command::Pinch { plus, minus, degree } => {
            let p = inputs.lamination(plus)?;
            let m = inputs.lamination(minus)?;
            if p.degree != *degree || m.degree != *degree {
                return Err(format!("laminations have degrees {} and {}, expected {degree}", p.degree, m.degree));
            }
            let r = mateability_report(&p, &m).map_err(|e| e.to_string())?;
            let verdict = if r.mateable { "Mateable" } else { "NotMateable" };
            Ok(Outcome::decided(verdict, to_value(&r), json!({})))
        }
        Command::Limit { machine, size } => limit(&inputs.machine(machine)?, *size, o),
    }
}

fn contract(b: &SphereBiset, o: &Opts) -> Result<Outcome, String> {
    let budget = nucleus_budget(o);
    let budgets = json!({ "max_word": budget.max_word, "max_set": budget.max_set, "depth": o.depth.unwrap_or(16) });
    match is_orbisphere_contracting(b, None, budget) {
        Ok((q, n)) => {
            let depth = certify(&q, &n, o.depth.unwrap_or(16)).map_err(|e| e.to_string())?;
            let ord = b.minimal_orbisphere().map_err(|e| e.to_string())?;
            let result = json!({
                "orbisphere": ord.ord,
                "nucleus": n.iter().map(|w| q.group().format_word(w)).collect::<Vec<_>>(),
                "certified_depth": depth,
                "mealy": Mealy::from_nucleus(&q, &n),
            });
            Ok(Outcome::decided("Contracting", result, budgets))
        }
        Err(ContractionError::BudgetExceeded { reason, frontier }) => {
            Ok(Outcome::undecided("Undecided", json!({ "reason": reason, "frontier": frontier }), budgets))
        }
        Err(e) => Err(e.to_string()),
    }
}

fn build_torus(m: &[i64], shift: &[i64], o: &Opts) -> Result<Outcome, String> {
    if m.len() != 4 || shift.len() != 2 {
        return Err("`--matrix` takes four entries and `--shift` two".into());
    }
    let matrix = [[m[0], m[1]], [m[2], m[3]]];
    let b = torus_biset_from(matrix, [shift[0], shift[1]]).map_err(|e| e.to_string())?;
    let text = write_machine(&b);
    let written = write_out(o, text.as_bytes())?;
    Ok(Outcome::decided("Built", json!({ "machine": text, "out": written }), json!({})))
}

fn torus(b: &SphereBiset, rounds: usize) -> Result<Outcome, String> {
    let budgets = json!({ "rounds": rounds });
    if !is2cover(b) {
        return Ok(Outcome::decided("NotTorusCovered", json!({ "is2cover": false }), budgets));
    }
    let v = match istor(b, rounds) {
        Ok(v) => v,
        Err(e @ TorusError::NotPrincipal(_)) => {
            return Ok(Outcome::decided("NotPrincipal", json!({ "is2cover": true, "reason": e.to_string() }), budgets))
        }
        Err(e) => return Err(e.to_string()),
    };
    let (verdict, decided) = match &v {
        TorVerdict::Yes { .. } => ("Yes", true),
        TorVerdict::No { .. } => ("No", true),
        TorVerdict::Undecided { .. } => ("Undecided", false),
    };
    Ok(Outcome { verdict: verdict.into(), decided, result: json!({ "is2cover": true, "torus": v }), budgets })
}

fn multicurve(b: &SphereBiset, text: &str, close: Option<usize>) -> Result<Outcome, String> {
    let g = b.group();
    let mut classes = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        classes.push(g.parse_class(line).map_err(|e| format!("line {}: {e}", i + 1))?);
    }
    let budgets = json!({ "close": close });
    if let Some(cap) = close {
        classes = match invariant_closure(&classes, b, cap) {
            Ok(c) => c,
            Err(e @ LevyError::CapExceeded(_)) => {
                return Ok(Outcome::undecided("Undecided", json!({ "reason": e.to_string() }), budgets))
            }
            Err(e) => return Err(e.to_string()),
        };
    }
    match classify_multicurve(&classes, b) {
        Ok(d) => Ok(Outcome::decided("Classified", to_value(&d), budgets)),
        Err(LevyError::NotInvariant { class, lift }) => {
            Ok(Outcome::decided("NotInvariant", json!({ "class": class, "lift": lift }), budgets))
        }
        Err(e) => Err(e.to_string()),
    }
}

fn limit(b: &SphereBiset, size: u32, o: &Opts) -> Result<Outcome, String> {
    let budget = nucleus_budget(o);
    let depth = o.depth.unwrap_or(6);
    let budgets = json!({ "max_word": budget.max_word, "max_set": budget.max_set, "depth": depth });
    let (q, n) = match is_orbisphere_contracting(b, None, budget) {
        Ok(x) => x,
        Err(ContractionError::BudgetExceeded { reason, frontier }) => {
            return Ok(Outcome::undecided("Undecided", json!({ "reason": reason, "frontier": frontier }), budgets))
        }
        Err(e) => return Err(e.to_string()),
    };
    let picture = LimitPicture::new(&q, &n, depth);
    let image = match o.out.as_ref().and_then(|p| p.extension()).and_then(|e| e.to_str()) {
        Some("svg") => Some(picture.to_svg(size).into_bytes()),
        Some("ppm") => Some(picture.to_ppm(size)),
        Some(other) => return Err(format!("unknown image format `.{other}`; use .ppm or .svg")),
        None if o.out.is_some() => return Err("image file needs a .ppm or .svg extension".into()),
        None => None,
    };
    let written = match image {
        Some(bytes) => write_out(o, &bytes)?,
        None => None,
    };
    let pairs = crate::limit::identification_pairs(&q, &n, depth);
    let classes = identification_classes(&pairs).len();
    Ok(Outcome::decided(
        "Picture",
        json!({ "picture": picture, "classes": classes, "out": written }),
        budgets,
    ))
}

/// `node NAME` and `FROM -> TO DEGREE` lines; nodes are numbered in order.
pub fn parse_lift_graph(text: &str) -> Result<(Vec<String>, Vec<LiftEdge>), String> {
    let mut nodes: Vec<String> = Vec::new();
    let mut edges = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let err = |m: &str| format!("line {}: {m}", i + 1);
        let parts: Vec<&str> = line.split_whitespace().collect();
        match parts.as_slice() {
            ["node", name] => {
                if nodes.iter().any(|n| n == name) {
                    return Err(err(&format!("duplicate node `{name}`")));
                }
                nodes.push(name.to_string());
            }
            [from, "->", to, degree] => {
                let idx = |n: &str| nodes.iter().position(|x| x == n).ok_or_else(|| err(&format!("unknown node `{n}`")));
                let degree = degree.parse::<u32>().map_err(|_| err("degree must be a positive integer"))?;
                if degree == 0 {
                    return Err(err("degree must be a positive integer"));
                }
                edges.push(LiftEdge { from: idx(from)?, to: idx(to)?, degree });
            }
            _ => return Err(err("expected `node NAME` or `FROM -> TO DEGREE`")),
        }
    }
    Ok((nodes, edges))
}
