//! Command-line front end. [`run`] parses nothing itself; `main` hands it a
//! parsed [`Cli`] and output streams, which keeps every subcommand callable
//! from tests.
//!
//! Reports go to standard output as CSV, diagnostics to standard error.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::alignment::{find_alignment_with_tol, ALIGNMENT_TOL};
use crate::error::Error;
use crate::geometry::{PosePair, PosePoint};
use crate::gram::representer;
use crate::invariants::{
    counterexample_witness, ponita_invariants, twist_second_orientation, universal_invariants,
    Collection,
};
use crate::io::{read_pose_graph, write_kernel, write_pose_graph};
use crate::kernel::experiment::run_experiment;
use crate::kernel::graph::PoseGraph;
use crate::kernel::train::{ExperimentConfig, TargetKind};
use crate::report::{flag, num, RunReport};
use crate::sampling::{random_transform, seeded_rng, SamplingBox};
use crate::verify::{checks_report, run_suite, Suite};
use crate::UniversalInvariants;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "m3inv", version, about = "E(3) invariants of position-orientation pairs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Invariants of node pairs in a pose graph file.
    ///
    /// CSV columns: i,j then i1,i2,i3,i4 (universal) or j1,j2,j3 (ponita).
    /// Pairs are all ordered (i, j) with i != j, lexicographic, unless
    /// --pairs is given.
    Invariants(InvariantsArgs),
    /// Run randomized property suites.
    ///
    /// CSV columns: suite,check,seed,trials,metric,value,tolerance,failures,pass.
    /// Exit status 1 if any check fails.
    Verify(VerifyArgs),
    /// Show that the PONITA invariants cannot separate two inequivalent pairs.
    ///
    /// CSV columns: fact,p,q,tolerance,transform_seed,perturb,pass.
    Counterexample(CounterexampleArgs),
    /// Train kernels on both invariant collections and compare them.
    ///
    /// CSV columns: seed,target,collection,epochs,learning_rate,momentum,
    /// initial_train_mse,final_train_mse,test_mse,test_floor_mse,
    /// test_collisions,ratio_universal_over_ponita,check,threshold,pass.
    Experiment(ExperimentArgs),
    /// Build a pose pair with prescribed universal invariants; prints a pose
    /// graph file with two nodes.
    Reconstruct(ReconstructArgs),
    /// Find a Euclidean motion mapping one pose pair onto another.
    ///
    /// Each input file holds exactly two nodes. CSV columns:
    /// found,residual,tolerance,tx,ty,tz,q11,q12,q13,q21,q22,q23,q31,q32,q33,determinant.
    Align(AlignArgs),
}

#[derive(Debug, Args)]
pub struct InvariantsArgs {
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = Collection::Universal)]
    pub collection: Collection,
    /// Explicit pair list such as `0:1,2:3`.
    #[arg(long, value_delimiter = ',')]
    pub pairs: Vec<String>,
    /// Also emit the pairs (i, i).
    #[arg(long)]
    pub include_self: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = Suite::All)]
    pub suite: Suite,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct CounterexampleArgs {
    /// Move both pairs by a common random Euclidean motion drawn from this seed.
    #[arg(long)]
    pub transform_seed: Option<u64>,
    /// Rotate q's second orientation about its first by this angle (radians).
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub perturb: f64,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// TOML file with experiment settings; missing keys take defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long, value_enum)]
    pub target: Option<TargetKind>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory for the trained kernels (`<target>-<collection>.mlp`).
    #[arg(long)]
    pub model_dir: Option<PathBuf>,
    /// Exit with status 1 when a comparison check fails.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    #[arg(allow_negative_numbers = true)]
    pub i1: f64,
    #[arg(allow_negative_numbers = true)]
    pub i2: f64,
    pub i3: f64,
    #[arg(allow_negative_numbers = true)]
    pub i4: f64,
}

#[derive(Debug, Args)]
pub struct AlignArgs {
    pub from: PathBuf,
    pub to: PathBuf,
    #[arg(long, default_value_t = ALIGNMENT_TOL)]
    pub tolerance: f64,
}

pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = match cli.command {
        Command::Invariants(a) => cmd_invariants(&a, out, err),
        Command::Verify(a) => cmd_verify(&a, out),
        Command::Counterexample(a) => cmd_counterexample(&a, out),
        Command::Experiment(a) => cmd_experiment(&a, out, err),
        Command::Reconstruct(a) => cmd_reconstruct(&a, out),
        Command::Align(a) => cmd_align(&a, out, err),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            match e {
                Error::Parse { .. } | Error::InvalidConfig(_) => EXIT_USAGE,
                _ => EXIT_FAIL,
            }
        }
    }
}

type CmdResult = Result<i32, Error>;

fn load_graph(path: &Path, err: &mut dyn Write) -> Result<PoseGraph, Error> {
    let text = std::fs::read_to_string(path)?;
    let (graph, warnings) = read_pose_graph(&text).map_err(|e| match e {
        Error::Parse { line, message } => Error::Parse {
            line,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    })?;
    for w in warnings {
        writeln!(err, "warning: {}:{}: {}", path.display(), w.line, w.message)?;
    }
    Ok(graph)
}

fn parse_pairs(specs: &[String], n: usize) -> Result<Vec<(usize, usize)>, Error> {
    specs
        .iter()
        .map(|s| {
            let bad = || Error::InvalidConfig(format!("pair `{s}` is not of the form i:j with i, j < {n}"));
            let (a, b) = s.split_once(':').ok_or_else(bad)?;
            let i: usize = a.trim().parse().map_err(|_| bad())?;
            let j: usize = b.trim().parse().map_err(|_| bad())?;
            if i >= n || j >= n {
                return Err(bad());
            }
            Ok((i, j))
        })
        .collect()
}

pub fn cmd_invariants(args: &InvariantsArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let graph = load_graph(&args.input, err)?;
    let n = graph.len();
    let pairs = if args.pairs.is_empty() {
        (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|(i, j)| args.include_self || i != j)
            .collect()
    } else {
        parse_pairs(&args.pairs, n)?
    };
    let mut header = vec!["i", "j"];
    header.extend(args.collection.column_names());
    let mut report = RunReport::new(&header);
    for (i, j) in pairs {
        let pair = PosePair::new(graph.nodes()[i], graph.nodes()[j]);
        let mut row = vec![i.to_string(), j.to_string()];
        row.extend(args.collection.features(&pair).into_iter().map(num));
        report.push(row);
    }
    out.write_all(report.to_csv().as_bytes())?;
    Ok(EXIT_OK)
}

pub fn cmd_verify(args: &VerifyArgs, out: &mut dyn Write) -> CmdResult {
    let checks = run_suite(args.suite, args.trials, args.seed);
    out.write_all(checks_report(&checks, args.seed).to_csv().as_bytes())?;
    Ok(if checks.iter().all(|c| c.passed()) {
        EXIT_OK
    } else {
        EXIT_FAIL
    })
}

fn pair_coords(pair: &PosePair) -> String {
    [pair.first, pair.second]
        .iter()
        .flat_map(|p: &PosePoint| p.position.iter().chain(p.orientation.iter()).copied().collect::<Vec<_>>())
        .map(num)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Builds the counterexample report; the boolean is the overall verdict.
pub fn counterexample_report(transform_seed: Option<u64>, perturb: f64) -> (RunReport, bool) {
    let (mut p, mut q) = counterexample_witness();
    if perturb != 0.0 {
        q = twist_second_orientation(&q, perturb);
    }
    if let Some(seed) = transform_seed {
        let g = random_transform(&mut seeded_rng(seed), &SamplingBox::default());
        p = g.act_on_pair(&p);
        q = g.act_on_pair(&q);
    }
    let tol = if transform_seed.is_some() { 1e-9 } else { 1e-12 };
    let seed_col = transform_seed.map_or("none".to_owned(), |s| s.to_string());

    let mut report = RunReport::new(&["fact", "p", "q", "tolerance", "transform_seed", "perturb", "pass"]);
    let mut row = |fact: &str, pv: String, qv: String, tolerance: String, pass: String| {
        report.push(vec![
            fact.to_owned(),
            pv,
            qv,
            tolerance,
            seed_col.clone(),
            num(perturb),
            pass,
        ]);
    };
    row("pair", pair_coords(&p), pair_coords(&q), String::new(), "n/a".into());

    let (jp, jq) = (ponita_invariants(&p), ponita_invariants(&q));
    let mut collision = true;
    for (k, name) in ["ponita_j1", "ponita_j2", "ponita_j3"].iter().enumerate() {
        let (a, b) = (jp.to_array()[k], jq.to_array()[k]);
        let agree = (a - b).abs() <= tol;
        collision &= agree;
        row(name, num(a), num(b), num(tol), flag(agree));
    }

    let (up, uq) = (universal_invariants(&p), universal_invariants(&q));
    let mut differs = false;
    for (k, name) in ["universal_i1", "universal_i2", "universal_i3", "universal_i4"].iter().enumerate() {
        let (a, b) = (up.to_array()[k], uq.to_array()[k]);
        if k == 1 {
            differs = (a - b).abs() > tol;
            row(name, num(a), num(b), num(tol), flag(differs));
        } else {
            row(name, num(a), num(b), num(tol), "n/a".into());
        }
    }

    let forward = find_alignment_with_tol(&p, &q, ALIGNMENT_TOL);
    let backward = find_alignment_with_tol(&q, &p, ALIGNMENT_TOL);
    let label = |a: &Option<_>| if a.is_some() { "found" } else { "none" }.to_owned();
    let no_alignment = forward.is_none() && backward.is_none();
    row("alignment", label(&forward), label(&backward), num(ALIGNMENT_TOL), flag(no_alignment));

    let verdict = collision && differs && no_alignment;
    let text = if no_alignment { "no alignment exists" } else { "alignment found" };
    row("verdict", text.into(), text.into(), String::new(), flag(verdict));
    (report, verdict)
}

pub fn cmd_counterexample(args: &CounterexampleArgs, out: &mut dyn Write) -> CmdResult {
    if !args.perturb.is_finite() {
        return Err(Error::InvalidConfig("perturbation must be finite".into()));
    }
    let (report, verdict) = counterexample_report(args.transform_seed, args.perturb);
    out.write_all(report.to_csv().as_bytes())?;
    Ok(if verdict { EXIT_OK } else { EXIT_FAIL })
}

pub fn cmd_experiment(args: &ExperimentArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::from_toml(&std::fs::read_to_string(path)?)?,
        None => ExperimentConfig::default(),
    };
    if let Some(e) = args.epochs {
        cfg.epochs = e;
    }
    if let Some(t) = args.target {
        cfg.target = t;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    let outcome = match run_experiment(&cfg) {
        Err(e @ Error::NonFiniteLoss { .. }) => {
            writeln!(err, "error: {e}")?;
            return Ok(EXIT_FAIL);
        }
        other => other?,
    };
    out.write_all(outcome.report().to_csv().as_bytes())?;
    if let Some(dir) = &args.model_dir {
        std::fs::create_dir_all(dir)?;
        for r in &outcome.results {
            let path = dir.join(format!("{}-{}.mlp", cfg.target.name(), r.collection));
            std::fs::write(&path, write_kernel(&r.kernel))?;
            writeln!(err, "saved {}", path.display())?;
        }
    }
    Ok(if args.strict && !outcome.passed() {
        EXIT_FAIL
    } else {
        EXIT_OK
    })
}

pub fn cmd_reconstruct(args: &ReconstructArgs, out: &mut dyn Write) -> CmdResult {
    let pair = representer(&UniversalInvariants::new(args.i1, args.i2, args.i3, args.i4))?;
    let graph = PoseGraph::new(vec![pair.first, pair.second], vec![0.0, 0.0], 1, vec![1.0, 1.0])?;
    out.write_all(write_pose_graph(&graph).as_bytes())?;
    Ok(EXIT_OK)
}

fn load_pair(path: &Path, err: &mut dyn Write) -> Result<PosePair, Error> {
    let graph = load_graph(path, err)?;
    if graph.len() != 2 {
        return Err(Error::InvalidConfig(format!(
            "{}: expected exactly 2 nodes, found {}",
            path.display(),
            graph.len()
        )));
    }
    Ok(PosePair::new(graph.nodes()[0], graph.nodes()[1]))
}

pub fn cmd_align(args: &AlignArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let from = load_pair(&args.from, err)?;
    let to = load_pair(&args.to, err)?;
    let mut header = vec!["found", "residual", "tolerance", "tx", "ty", "tz"];
    header.extend(["q11", "q12", "q13", "q21", "q22", "q23", "q31", "q32", "q33", "determinant"]);
    let mut report = RunReport::new(&header);
    match find_alignment_with_tol(&from, &to, args.tolerance) {
        Some(a) => {
            let m = a.transform.linear.matrix();
            let mut row = vec!["true".to_owned(), num(a.residual), num(args.tolerance)];
            row.extend(a.transform.translation.iter().map(|v| num(*v)));
            row.extend((0..3).flat_map(|r| (0..3).map(move |c| (r, c))).map(|rc| num(m[rc])));
            row.push(num(a.transform.linear.determinant()));
            report.push(row);
        }
        None => {
            let mut row = vec!["false".to_owned(), String::new(), num(args.tolerance)];
            row.extend(std::iter::repeat_n(String::new(), 13));
            report.push(row);
        }
    }
    out.write_all(report.to_csv().as_bytes())?;
    Ok(EXIT_OK)
}
