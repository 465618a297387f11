mod input;
mod report;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use crn_core::par::{configure_threads, Exec};
use crn_core::parse::parse;
use crn_core::sim::{self, StopRule};
use crn_core::structure::{self, Verdict};
use crn_core::tiers::{self, ParametricSequence, DEFAULT_DRIFT_BUDGET, DEFAULT_PATTERN_BUDGET};
use crn_core::{MassActionSystem, State};

use report::*;

/// Stochastic mass-action reaction networks: recurrence checks, tiers,
/// embedded-chain drift and simulation.
///
/// Set CRN_THREADS to cap the worker threads used for replicas, path
/// enumeration and pattern scans.
#[derive(Parser)]
#[command(name = "crn", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Structural recurrence check. Exit 0 when positive recurrence
    /// follows, 2 when inconclusive, 1 on error.
    Analyze(AnalyzeArgs),
    /// D- and S-type tiers along a monomial sequence, plus a path report.
    Tiers(TiersArgs),
    /// Exact or Monte Carlo k-step drift of V for the embedded chain.
    Drift(DriftArgs),
    /// Gillespie trajectory as CSV.
    Simulate(SimulateArgs),
    /// Stationary distribution by time average or truncated solve.
    Stationary(StationaryArgs),
}

#[derive(Args)]
struct AnalyzeArgs {
    file: PathBuf,
    /// Enumerate states reachable from this state (e.g. 1,0,0).
    #[arg(long)]
    x0: Option<String>,
    /// Cap on enumerated states (requires --x0).
    #[arg(long, default_value_t = 100_000, requires = "x0")]
    reach_cap: usize,
    /// Scan monomial patterns for a top S-tier complex outside the top D-tier.
    #[arg(long)]
    hypothesis_scan: bool,
    #[arg(long, default_value_t = DEFAULT_PATTERN_BUDGET)]
    pattern_budget: usize,
}

#[derive(Args)]
struct TiersArgs {
    file: PathBuf,
    /// Sequence such as "A=n,B=1,C=0" or "A=2*n^2,B=3"; exponents may be fractions.
    #[arg(long)]
    seq: String,
    /// "auto" for a witness path, or a list such as "A->A+B,A+B->A+C".
    #[arg(long, default_value = "auto")]
    path: String,
    /// Witness length (default: number of reactions).
    #[arg(long)]
    len: Option<usize>,
    /// Also evaluate the exact path probability at x_n for this n.
    #[arg(long)]
    limit: Option<u64>,
}

#[derive(Args)]
struct DriftArgs {
    file: PathBuf,
    /// State, e.g. 3,1,0.
    #[arg(long, conflicts_with = "along", required_unless_present = "along")]
    x: Option<String>,
    /// "<sequence>:<n list>"; writes CSV (n,drift) instead of JSON.
    #[arg(long)]
    along: Option<String>,
    #[arg(long)]
    k: usize,
    /// Exact enumeration over all reaction sequences (default).
    #[arg(long, conflicts_with = "mc")]
    exact: bool,
    /// Monte Carlo with this many replicas.
    #[arg(long)]
    mc: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Maximum number of enumerated paths (r^k).
    #[arg(long, default_value_t = DEFAULT_DRIFT_BUDGET)]
    budget: u128,
}

#[derive(Args)]
struct SimulateArgs {
    file: PathBuf,
    #[arg(long)]
    x0: String,
    #[arg(long, conflicts_with = "jumps", required_unless_present = "jumps")]
    t_max: Option<f64>,
    #[arg(long)]
    jumps: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct StationaryArgs {
    file: PathBuf,
    /// Start state (time average), or restriction of --region to states
    /// reachable from it.
    #[arg(long)]
    x0: Option<String>,
    /// Time-average over one trajectory on [0, t_max].
    #[arg(long, conflicts_with = "region", required_unless_present = "region", requires = "x0")]
    t_max: Option<f64>,
    /// Truncated solve on a box such as "0..40" or "0..2,0..2" (inclusive).
    #[arg(long)]
    region: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

struct Input {
    sys: MassActionSystem,
    hash: String,
}

fn load(path: &Path) -> Result<Input> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    let text = String::from_utf8(bytes.clone()).with_context(|| format!("{} is not UTF-8", path.display()))?;
    let sys = parse(&text).map_err(|e| anyhow!("{}:{e}", path.display()))?;
    Ok(Input { sys, hash: hex::encode(Sha256::digest(&bytes)) })
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(stdout.flush()?)
        }
    }
}

fn json<T: serde::Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn analyze(a: AnalyzeArgs) -> Result<ExitCode> {
    let inp = load(&a.file)?;
    let net = inp.sys.network();
    let verdict = structure::theorem_verdict(net);
    let hypothesis_check = if a.hypothesis_scan {
        Some(tiers::hypothesis_check(net, a.pattern_budget)?)
    } else {
        None
    };
    let reachability = match &a.x0 {
        Some(x) => {
            let x0 = input::state(x, net)?;
            let rep = structure::reachable_states(&inp.sys, &x0, a.reach_cap);
            Some(ReachabilitySummary::new(x0.counts().to_vec(), a.reach_cap, &rep))
        }
        None => None,
    };
    let report = AnalysisReport {
        header: Header::new("analysis", &inp.hash),
        network: NetworkSummary::new(&inp.sys),
        linkage_classes: classes(net, &structure::linkage_classes(net)),
        theorem: (&verdict).into(),
        hypothesis_check,
        reachability,
    };
    emit(None, &json(&report)?)?;
    Ok(match verdict.verdict {
        Verdict::PositiveRecurrent => ExitCode::SUCCESS,
        Verdict::Inconclusive => ExitCode::from(2),
    })
}

fn run_tiers(a: TiersArgs) -> Result<ExitCode> {
    let inp = load(&a.file)?;
    let sys = &inp.sys;
    let net = sys.network();
    let names: Vec<String> = net.species().iter().map(|s| s.name.clone()).collect();
    let seq = ParametricSequence::parse(&a.seq, &names)?.tail_normalized(net);
    let d = tiers::d_partition(net, &seq);
    let s = tiers::s_partition(net, &seq)?;

    let (source, path) = if a.path.trim() == "auto" {
        ("witness", tiers::witness_path(sys, &seq, a.len.unwrap_or(net.num_reactions())))
    } else {
        ("given", Ok(input::reaction_list(&a.path, net)?))
    };
    let (path, path_error) = match path {
        Ok(p) => {
            let rep = tiers::path_tier_membership(net, &seq, &p)?;
            let limit = tiers::path_probability_limit(sys, &seq, &p)?;
            let mut summary = PathSummary::new(net, source, &rep, limit);
            if let Some(n) = a.limit {
                let x = seq.evaluate(n.max(seq.n0()))?;
                summary.probability_at_n =
                    Some(ProbabilityAt { n: n.max(seq.n0()), probability: sys.path_probability(&x, &p)?, state: x.counts().to_vec() });
            }
            (Some(summary), None)
        }
        Err(e) => (None, Some(e.to_string())),
    };
    let report = TiersReport {
        header: Header::new("tiers", &inp.hash),
        sequence: seq.describe(&names),
        n0: seq.n0(),
        d_partition: PartitionSummary::new(net, &d, false),
        s_partition: PartitionSummary::new(net, &s, true),
        path,
        path_error,
    };
    emit(None, &json(&report)?)?;
    Ok(ExitCode::SUCCESS)
}

enum DriftValue {
    Exact(tiers::DriftReport),
    Mc(sim::McDrift),
}

fn drift_at(sys: &MassActionSystem, x: &State, a: &DriftArgs) -> Result<DriftValue> {
    Ok(match a.mc {
        Some(replicas) => DriftValue::Mc(sim::drift_estimate_mc(sys, x, a.k, replicas, a.seed)?),
        None => DriftValue::Exact(tiers::exact_kstep_drift_with(sys, x, a.k, a.budget, Exec::default())?),
    })
}

fn drift(a: DriftArgs) -> Result<ExitCode> {
    let inp = load(&a.file)?;
    let net = inp.sys.network();
    if let Some(spec) = &a.along {
        let (seq_text, ns) = input::along(spec)?;
        let names: Vec<String> = net.species().iter().map(|s| s.name.clone()).collect();
        let seq = ParametricSequence::parse(seq_text, &names)?;
        let mut csv = String::from(if a.mc.is_some() { "n,drift,std_error\n" } else { "n,drift\n" });
        for n in ns {
            let x = seq.evaluate(n)?;
            match drift_at(&inp.sys, &x, &a)? {
                DriftValue::Exact(r) => csv.push_str(&format!("{n},{:?}\n", r.drift)),
                DriftValue::Mc(m) => csv.push_str(&format!("{n},{:?},{:?}\n", m.estimate, m.std_error)),
            }
        }
        emit(None, &csv)?;
        return Ok(ExitCode::SUCCESS);
    }
    let x = input::state(a.x.as_deref().expect("clap enforces --x or --along"), net)?;
    let mut report = DriftReport {
        header: Header::new("drift", &inp.hash),
        x: x.counts().to_vec(),
        k: a.k,
        method: "exact",
        drift: 0.0,
        std_error: None,
        replicas: None,
        seed: None,
        paths: None,
        absorbed_mass: None,
    };
    match drift_at(&inp.sys, &x, &a)? {
        DriftValue::Exact(r) => {
            report.drift = r.drift;
            report.paths = Some(r.paths);
            report.absorbed_mass = Some(r.absorbed_mass);
        }
        DriftValue::Mc(m) => {
            report.method = "monte_carlo";
            report.drift = m.estimate;
            report.std_error = Some(m.std_error);
            report.replicas = Some(m.replicas);
            report.seed = Some(a.seed);
        }
    }
    emit(None, &json(&report)?)?;
    Ok(ExitCode::SUCCESS)
}

fn simulate(a: SimulateArgs) -> Result<ExitCode> {
    let inp = load(&a.file)?;
    let net = inp.sys.network();
    let x0 = input::state(&a.x0, net)?;
    let stop = match (a.t_max, a.jumps) {
        (Some(t), None) if t >= 0.0 && t.is_finite() => StopRule::MaxTime(t),
        (Some(t), None) => bail!("--t-max must be finite and nonnegative, got {t}"),
        (None, Some(j)) => StopRule::MaxJumps(j),
        _ => unreachable!("clap enforces exactly one stop rule"),
    };
    let tr = sim::ssa_simulate(&inp.sys, &x0, stop, a.seed)?;
    let names: Vec<String> = net.species().iter().map(|s| s.name.clone()).collect();
    emit(a.out.as_deref(), &tr.to_csv(&names))?;
    Ok(ExitCode::SUCCESS)
}

fn stationary(a: StationaryArgs) -> Result<ExitCode> {
    let inp = load(&a.file)?;
    let sys = &inp.sys;
    let net = sys.network();
    let x0 = a.x0.as_deref().map(|x| input::state(x, net)).transpose()?;
    let header = Header::new("stationary", &inp.hash);
    let report = if let Some(region) = &a.region {
        let mut states = input::region_box(region, net)?;
        if let Some(x0) = &x0 {
            let reach = structure::reachable_states(sys, x0, states.len() + 1);
            let reachable: std::collections::HashSet<State> = reach.states.into_iter().collect();
            states.retain(|s| reachable.contains(s));
            if !reach.truncated && states.is_empty() {
                bail!("no state of the region is reachable from {x0}");
            }
        }
        StationaryReport::new(header, sim::truncated_stationary(sys, &states)?, None)
    } else {
        let x0 = x0.expect("clap enforces --x0 with --t-max");
        if sys.is_absorbing(&x0) {
            eprintln!("warning: {x0} is absorbing; the time average is a point mass");
        }
        let t_max = a.t_max.expect("clap enforces --t-max or --region");
        StationaryReport::new(header, sim::occupancy_estimate(sys, &x0, t_max, a.seed)?, Some(a.seed))
    };
    emit(a.out.as_deref(), &json(&report)?)?;
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode> {
    if let Ok(v) = std::env::var("CRN_THREADS") {
        let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| anyhow!("CRN_THREADS must be a positive integer, got `{v}`"))?;
        configure_threads(n).map_err(|e| anyhow!("cannot size thread pool: {e}"))?;
    }
    match cli.command {
        Command::Analyze(a) => analyze(a),
        Command::Tiers(a) => run_tiers(a),
        Command::Drift(a) => drift(a),
        Command::Simulate(a) => simulate(a),
        Command::Stationary(a) => stationary(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
