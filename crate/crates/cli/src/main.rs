use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::thread;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use zxpqc::evaluator::{evaluate_edge, Evaluation};
use zxpqc::oracle::statevector_zz;
use zxpqc::pqc::{lightcone_reduce, maxcut_hamiltonian, qaoa1_closed_form};
use zxpqc::rewrite::simplify_fixpoint;
use zxpqc::{AnsatzSpec, Binding, Diagram, Error, ProblemGraph, RuleId, ScalarExpr, Strategy};

#[derive(Parser, Debug)]
#[command(name = "zxpqc", version, about = "Symbolic expectation values of parameterized circuits via ZX rewriting")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Symbolic <Z_u Z_v> per edge, and <C> with --all-edges.
    Expval {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, value_enum)]
        ansatz: AnsatzKind,
        #[arg(long, default_value_t = 1)]
        p: usize,
        #[arg(long, value_parser = parse_edge, conflicts_with = "all_edges", required_unless_present = "all_edges")]
        edge: Option<(usize, usize)>,
        #[arg(long)]
        all_edges: bool,
        /// `name=value`, value in radians as a decimal or a multiple of pi such as `pi/4`.
        #[arg(long = "bind", value_parser = parse_bind)]
        binds: Vec<(String, f64)>,
        #[arg(long)]
        lightcone: bool,
        #[arg(long, value_enum, default_value_t = OutFormat::Text)]
        out: OutFormat,
    },
    /// Closed-form single-layer QAOA <Z_u Z_v> from neighborhood sizes.
    Formula {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, value_parser = parse_edge)]
        edge: (usize, usize),
        #[arg(long, value_enum, default_value_t = OutFormat::Text)]
        out: OutFormat,
    },
    /// Rewrite a diagram to a fixpoint.
    Simplify {
        #[arg(long = "in")]
        input: PathBuf,
        /// Comma separated rule names out of f,id,pi,c,b,h,gf,gpi.
        #[arg(long)]
        rules: Option<String>,
        #[arg(long, default_value_t = 100_000)]
        max_steps: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Reduced graph and qubit map for one edge observable.
    Lightcone {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, value_parser = parse_edge)]
        edge: (usize, usize),
        #[arg(long)]
        p: usize,
    },
    /// Compare symbolic edge expectations against the statevector simulator.
    Check {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, value_enum)]
        ansatz: AnsatzKind,
        #[arg(long, default_value_t = 1)]
        p: usize,
        #[arg(long, default_value_t = 32)]
        trials: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = 0x5eed)]
        seed: u64,
        #[arg(long)]
        lightcone: bool,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum AnsatzKind {
    Ry,
    Qaoa,
    Hweff,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum OutFormat {
    Text,
    Json,
}

struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn new(code: u8, msg: impl Into<String>) -> Failure {
        Failure { code, msg: msg.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        let code = match &e {
            Error::TermBudgetExceeded(_) | Error::TooLarge(_) => 3,
            Error::MissingBinding(_) | Error::EdgeNotInGraph(..) | Error::SpecMismatch(_) => 1,
            _ => 2,
        };
        Failure::new(code, e.to_string())
    }
}

type Outcome = std::result::Result<(), Failure>;

fn parse_edge(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected U,V, got `{s}`"))?;
    let p = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("bad vertex `{t}`"));
    Ok((p(a)?, p(b)?))
}

/// Radians from `0.25`, `pi`, `-pi/2`, `3pi/4` or `3*pi/4`.
fn parse_angle(s: &str) -> std::result::Result<f64, String> {
    let t = s.trim();
    let Some(at) = t.find("pi") else {
        return t.parse::<f64>().map_err(|_| format!("bad angle `{s}`"));
    };
    let (head, tail) = (t[..at].trim_end_matches('*').trim(), t[at + 2..].trim());
    let coeff = match head {
        "" | "+" => 1.0,
        "-" => -1.0,
        h => h.parse::<f64>().map_err(|_| format!("bad angle `{s}`"))?,
    };
    let denom = match tail {
        "" => 1.0,
        d => d
            .strip_prefix('/')
            .and_then(|d| d.trim().parse::<f64>().ok())
            .filter(|d| *d != 0.0)
            .ok_or_else(|| format!("bad angle `{s}`"))?,
    };
    Ok(coeff * std::f64::consts::PI / denom)
}

fn parse_bind(s: &str) -> std::result::Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected name=value, got `{s}`"))?;
    Ok((k.trim().to_string(), parse_angle(v)?))
}

fn read_input(path: &Path) -> std::result::Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::new(2, format!("{}: {e}", path.display())))
}

fn load_graph(path: &Path) -> std::result::Result<ProblemGraph, Failure> {
    ProblemGraph::parse(&read_input(path)?).map_err(|e| Failure::new(2, format!("{}: {e}", path.display())))
}

fn ansatz(kind: AnsatzKind, g: &ProblemGraph, p: usize) -> std::result::Result<AnsatzSpec, Failure> {
    let a = match kind {
        AnsatzKind::Ry => AnsatzSpec::ry(g.n()),
        AnsatzKind::Qaoa if p == 0 => return Err(Failure::new(1, "--p must be at least 1")),
        AnsatzKind::Qaoa => AnsatzSpec::qaoa(p),
        AnsatzKind::Hweff => AnsatzSpec::hweff(),
    };
    a.check_fits(g)?;
    Ok(a)
}

/// Evaluates the edges on worker threads; results keep the input order.
fn evaluate_edges(
    g: &ProblemGraph,
    a: &AnsatzSpec,
    edges: &[(usize, usize)],
    lightcone: bool,
) -> zxpqc::Result<Vec<Evaluation>> {
    let s = Strategy::default();
    let workers = thread::available_parallelism().map_or(1, |n| n.get()).min(edges.len()).max(1);
    let mut slots: Vec<Option<zxpqc::Result<Evaluation>>> = vec![None; edges.len()];
    thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let s = &s;
                scope.spawn(move || {
                    (w..edges.len())
                        .step_by(workers)
                        .map(|i| (i, evaluate_edge(g, a, edges[i], lightcone, s)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (i, r) in h.join().expect("edge worker panicked") {
                slots[i] = Some(r);
            }
        }
    });
    slots.into_iter().map(|r| r.expect("every edge evaluated")).collect()
}

fn binding_for(a: &AnsatzSpec, binds: &[(String, f64)]) -> std::result::Result<Option<Binding>, Failure> {
    if binds.is_empty() {
        return Ok(None);
    }
    let params = a.parameters();
    let mut b = Binding::new();
    for (k, v) in binds {
        if !params.iter().any(|p| p.name() == k) {
            return Err(Failure::new(1, format!("unknown parameter `{k}`")));
        }
        b.set(k, *v);
    }
    if let Some(p) = params.iter().find(|p| b.get(p).is_none()) {
        return Err(Error::MissingBinding(p.name().to_string()).into());
    }
    Ok(Some(b))
}

fn value_at(e: &ScalarExpr, b: &Option<Binding>) -> std::result::Result<Option<f64>, Failure> {
    match b {
        None => Ok(None),
        Some(b) => Ok(Some(e.eval_at(b)?.re)),
    }
}

fn expr_json(e: &ScalarExpr, value: Option<f64>) -> Value {
    let mut v = json!({ "formula": e.to_string(), "expr": e.to_wire() });
    if let Some(x) = value {
        v["value"] = json!(x);
    }
    v
}

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string(v).expect("json output"));
}

#[allow(clippy::too_many_arguments)]
fn expval(
    graph: &Path,
    kind: AnsatzKind,
    p: usize,
    edge: Option<(usize, usize)>,
    all_edges: bool,
    binds: &[(String, f64)],
    lightcone: bool,
    out: OutFormat,
) -> Outcome {
    let g = load_graph(graph)?;
    let a = ansatz(kind, &g, p)?;
    let b = binding_for(&a, binds)?;
    let edges: Vec<(usize, usize)> = match edge {
        Some(e) => vec![e],
        None => g.edges().to_vec(),
    };
    let evals = evaluate_edges(&g, &a, &edges, lightcone)?;
    let mut terms = Vec::new();
    for (e, ev) in edges.iter().zip(&evals) {
        let value = value_at(&ev.value, &b)?;
        match out {
            OutFormat::Text => {
                println!("<Z{} Z{}> = {}", e.0, e.1, ev.value);
                if let Some(x) = value {
                    println!("  value {x:?}");
                }
            }
            OutFormat::Json => {
                let mut t = expr_json(&ev.value, value);
                t["edge"] = json!([e.0, e.1]);
                t["rounds"] = json!(ev.rounds);
                terms.push(t);
            }
        }
    }
    let mut cost = None;
    if all_edges {
        let (constant, hterms) = maxcut_hamiltonian(&g);
        let mut total = constant;
        for (t, ev) in hterms.iter().zip(&evals) {
            total = &total + &(&t.weight * &ev.value);
        }
        let total = total.simplify();
        let value = value_at(&total, &b)?;
        if out == OutFormat::Text {
            println!("<C> = {total}");
            if let Some(x) = value {
                println!("  value {x:?}");
            }
        }
        cost = Some(expr_json(&total, value));
    }
    if out == OutFormat::Json {
        let mut doc = json!({ "terms": terms });
        if let Some(c) = cost {
            doc["cost"] = c;
        }
        print_json(&doc);
    }
    Ok(())
}

fn formula(graph: &Path, edge: (usize, usize), out: OutFormat) -> Outcome {
    let g = load_graph(graph)?;
    let f = qaoa1_closed_form(&g, edge)?;
    match out {
        OutFormat::Text => println!("{f}"),
        OutFormat::Json => {
            let mut v = expr_json(&f, None);
            v["edge"] = json!([edge.0, edge.1]);
            print_json(&v);
        }
    }
    Ok(())
}

fn simplify(input: &Path, rules: Option<&str>, max_steps: usize, out: &Path) -> Outcome {
    let rules = match rules {
        Some(r) => RuleId::parse_list(r).map_err(|e| Failure::new(1, e.to_string()))?,
        None => RuleId::DEFAULT_ORDER.to_vec(),
    };
    let d = Diagram::from_json(&read_input(input)?)
        .map_err(|e| Failure::new(2, format!("{}: {e}", input.display())))?;
    let fp = simplify_fixpoint(&d, &rules, max_steps);
    let mut text = fp.diagram.to_json();
    text.push('\n');
    fs::write(out, text).map_err(|e| Failure::new(2, format!("{}: {e}", out.display())))?;
    println!(
        "{} steps, {} vertices{}",
        fp.steps,
        fp.diagram.num_vertices(),
        if fp.exhausted { ", step limit reached" } else { "" }
    );
    Ok(())
}

fn lightcone(graph: &Path, edge: (usize, usize), p: usize) -> Outcome {
    let g = load_graph(graph)?;
    let lc = lightcone_reduce(&g, edge, p)?;
    print_json(&json!({
        "n": lc.graph.n(),
        "edges": lc.graph.edges().iter().map(|(u, v)| [u, v]).collect::<Vec<_>>(),
        "edge": [lc.edge.0, lc.edge.1],
        "vertices": lc.vertices,
    }));
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn check(
    graph: &Path,
    kind: AnsatzKind,
    p: usize,
    trials: usize,
    tol: f64,
    seed: u64,
    lightcone: bool,
) -> Outcome {
    let g = load_graph(graph)?;
    let a = ansatz(kind, &g, p)?;
    let edges = g.edges().to_vec();
    let evals = evaluate_edges(&g, &a, &edges, lightcone)?;
    let params = a.parameters();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let b = Binding::random(&params, &mut rng);
        for (e, ev) in edges.iter().zip(&evals) {
            let got = ev.value.eval_at(&b)?;
            let want = statevector_zz(&g, &a, &b, *e)?;
            let err = (got.re - want).abs().max(got.im.abs());
            worst = worst.max(err);
            if err.is_nan() || err > tol {
                return Err(Failure::new(
                    4,
                    format!("edge {},{}: symbolic {got} vs oracle {want} (error {err:e} > {tol:e})", e.0, e.1),
                ));
            }
        }
    }
    println!("ok: {} edges, {trials} bindings, max error {worst:e}", edges.len());
    Ok(())
}

fn run(cli: Cli) -> Outcome {
    match cli.cmd {
        Command::Expval { graph, ansatz, p, edge, all_edges, binds, lightcone, out } => {
            expval(&graph, ansatz, p, edge, all_edges, &binds, lightcone, out)
        }
        Command::Formula { graph, edge, out } => formula(&graph, edge, out),
        Command::Simplify { input, rules, max_steps, out } => simplify(&input, rules.as_deref(), max_steps, &out),
        Command::Lightcone { graph, edge, p } => lightcone(&graph, edge, p),
        Command::Check { graph, ansatz, p, trials, tol, seed, lightcone: lc } => {
            check(&graph, ansatz, p, trials, tol, seed, lc)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("E1: {e}");
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("E{}: {}", f.code, f.msg);
            ExitCode::from(f.code)
        }
    }
}
