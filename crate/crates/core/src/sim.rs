//! Gillespie simulation and recurrence diagnostics.
//!
//! Every random quantity is drawn from a [`StreamRng`] keyed by
//! `(seed, stream)`. A single trajectory uses stream 0; replica `i` of a
//! replicated probe uses stream `i`, so replica 0 reproduces the
//! trajectory of [`ssa_simulate`] with the same seed.
//!
//! Each jump consumes two uniforms: the first for the holding time and the
//! second for the reaction. The embedded chain draws (and discards) the
//! holding time too, so it visits exactly the states of the continuous-time
//! trajectory.

use std::collections::{BTreeMap, HashMap};

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kinetics::{lyapunov, lyapunov_increment};
use crate::model::{MassActionSystem, ReactionId, State};
use crate::par::{pairwise_sum, Exec};
use crate::rng::StreamRng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum StopRule {
    MaxTime(f64),
    MaxJumps(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Termination {
    MaxTime,
    MaxJumps,
    Absorbed,
}

/// `states[n]` is the state entered at `jump_times[n]`; `jump_times[0] = 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectorySample {
    pub jump_times: Vec<f64>,
    pub states: Vec<State>,
    pub seed: u64,
    pub terminated_by: Termination,
}

impl TrajectorySample {
    /// CSV with header `t,<species...>`, one row per visited state.
    pub fn to_csv(&self, species: &[String]) -> String {
        let mut out = format!("t,{}\n", species.join(","));
        for (t, x) in self.jump_times.iter().zip(&self.states) {
            out.push_str(&format!("{t:?}"));
            for c in x.counts() {
                out.push_str(&format!(",{c}"));
            }
            out.push('\n');
        }
        out
    }
}

/// One Gillespie step from `x`: `(holding time, reaction)`, or `None` at an
/// absorbing state. `rates` is scratch space of length `num_reactions`.
fn gillespie_step(sys: &MassActionSystem, x: &State, rates: &mut [f64], rng: &mut StreamRng) -> Option<(f64, ReactionId)> {
    sys.fill_rates(x, rates);
    let total: f64 = rates.iter().sum();
    if total == 0.0 {
        return None;
    }
    let hold = rng.exponential(total);
    let u = rng.uniform() * total;
    let mut acc = 0.0;
    let mut chosen = None;
    for (r, &rate) in rates.iter().enumerate() {
        if rate == 0.0 {
            continue;
        }
        chosen = Some(r);
        acc += rate;
        if u < acc {
            break;
        }
    }
    chosen.map(|r| (hold, r))
}

fn apply(sys: &MassActionSystem, x: &State, r: ReactionId) -> State {
    x.offset(sys.network().jump(r)).expect("positive rate implies a valid target")
}

fn check_dim(sys: &MassActionSystem, x: &State) -> Result<()> {
    let d = sys.network().dim();
    if x.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: x.dim() });
    }
    Ok(())
}

fn simulate_stream(sys: &MassActionSystem, x0: &State, stop: StopRule, seed: u64, stream: u64) -> TrajectorySample {
    let mut rng = StreamRng::new(seed, stream);
    let mut rates = vec![0.0; sys.network().num_reactions()];
    let mut jump_times = vec![0.0];
    let mut states = vec![x0.clone()];
    let mut t = 0.0;
    let terminated_by = loop {
        if let StopRule::MaxJumps(m) = stop {
            if states.len() as u64 > m {
                break Termination::MaxJumps;
            }
        }
        let x = states.last().expect("nonempty");
        let Some((hold, r)) = gillespie_step(sys, x, &mut rates, &mut rng) else {
            break Termination::Absorbed;
        };
        t += hold;
        if let StopRule::MaxTime(tmax) = stop {
            if t > tmax {
                break Termination::MaxTime;
            }
        }
        let next = apply(sys, x, r);
        jump_times.push(t);
        states.push(next);
    };
    TrajectorySample { jump_times, states, seed, terminated_by }
}

/// Gillespie direct method from `x0`.
pub fn ssa_simulate(sys: &MassActionSystem, x0: &State, stop: StopRule, seed: u64) -> Result<TrajectorySample> {
    check_dim(sys, x0)?;
    Ok(simulate_stream(sys, x0, stop, seed, 0))
}

/// States `X~_0 .. X~_steps` of the embedded chain; shorter if an absorbing
/// state is reached.
pub fn embedded_chain_simulate(sys: &MassActionSystem, x0: &State, steps: usize, seed: u64) -> Result<Vec<State>> {
    check_dim(sys, x0)?;
    Ok(embedded_stream(sys, x0, steps, seed, 0))
}

fn embedded_stream(sys: &MassActionSystem, x0: &State, steps: usize, seed: u64, stream: u64) -> Vec<State> {
    let mut rng = StreamRng::new(seed, stream);
    let mut rates = vec![0.0; sys.network().num_reactions()];
    let mut out = Vec::with_capacity(steps + 1);
    out.push(x0.clone());
    for _ in 0..steps {
        let x = out.last().expect("nonempty");
        let Some((_, r)) = gillespie_step(sys, x, &mut rates, &mut rng) else { break };
        let next = apply(sys, x, r);
        out.push(next);
    }
    out
}

/// Target sets for return-time probes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum TargetSet {
    /// `{x : V(x) <= c}`
    LyapunovAtMost(f64),
    /// `{x : sum_i x_i <= m}`
    TotalAtMost(u64),
    Point(State),
}

impl TargetSet {
    pub fn contains(&self, x: &State) -> bool {
        match self {
            TargetSet::LyapunovAtMost(c) => lyapunov(x) <= *c,
            TargetSet::TotalAtMost(m) => x.total() <= *m,
            TargetSet::Point(p) => x == p,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            TargetSet::LyapunovAtMost(c) => format!("V(x) <= {c}"),
            TargetSet::TotalAtMost(m) => format!("|x| <= {m}"),
            TargetSet::Point(p) => format!("x = {p}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ReplicaOutcome {
    /// First re-entry time after leaving the target, measured from `t = 0`.
    Returned(f64),
    /// Left the target and did not re-enter before the horizon (or was
    /// absorbed outside it).
    NotReturned,
    /// Never left the target before the horizon or absorption.
    NeverExited,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReturnTimeStats {
    pub target: String,
    pub horizon: f64,
    pub outcomes: Vec<ReplicaOutcome>,
    pub non_returning: usize,
    pub never_exited: usize,
    pub mean: Option<f64>,
    pub median: Option<f64>,
    pub max: Option<f64>,
}

impl ReturnTimeStats {
    pub fn returned(&self) -> Vec<f64> {
        self.outcomes
            .iter()
            .filter_map(|o| match o {
                ReplicaOutcome::Returned(t) => Some(*t),
                _ => None,
            })
            .collect()
    }
}

fn return_replica(sys: &MassActionSystem, x0: &State, target: &TargetSet, horizon: f64, seed: u64, stream: u64) -> ReplicaOutcome {
    let mut rng = StreamRng::new(seed, stream);
    let mut rates = vec![0.0; sys.network().num_reactions()];
    let mut x = x0.clone();
    let mut t = 0.0;
    let mut exited = false;
    while let Some((hold, r)) = gillespie_step(sys, &x, &mut rates, &mut rng) {
        t += hold;
        if t > horizon {
            break;
        }
        x = apply(sys, &x, r);
        let inside = target.contains(&x);
        if exited && inside {
            return ReplicaOutcome::Returned(t);
        }
        exited |= !inside;
    }
    if exited {
        ReplicaOutcome::NotReturned
    } else {
        ReplicaOutcome::NeverExited
    }
}

pub fn return_times(
    sys: &MassActionSystem,
    x0: &State,
    target: &TargetSet,
    horizon: f64,
    replicas: usize,
    seed: u64,
) -> Result<ReturnTimeStats> {
    return_times_with(sys, x0, target, horizon, replicas, seed, Exec::default())
}

pub fn return_times_with(
    sys: &MassActionSystem,
    x0: &State,
    target: &TargetSet,
    horizon: f64,
    replicas: usize,
    seed: u64,
    exec: Exec,
) -> Result<ReturnTimeStats> {
    check_dim(sys, x0)?;
    if replicas == 0 {
        return Err(Error::InvalidArgument("replicas must be at least 1".into()));
    }
    if !target.contains(x0) {
        return Err(Error::StartOutsideTarget(x0.clone()));
    }
    let outcomes = exec.map_range(replicas, |i| return_replica(sys, x0, target, horizon, seed, i as u64));
    let non_returning = outcomes.iter().filter(|o| matches!(o, ReplicaOutcome::NotReturned)).count();
    let never_exited = outcomes.iter().filter(|o| matches!(o, ReplicaOutcome::NeverExited)).count();
    let mut stats = ReturnTimeStats {
        target: target.describe(),
        horizon,
        outcomes,
        non_returning,
        never_exited,
        mean: None,
        median: None,
        max: None,
    };
    let mut times = stats.returned();
    if !times.is_empty() {
        stats.mean = Some(pairwise_sum(&times) / times.len() as f64);
        times.sort_by(f64::total_cmp);
        let m = times.len();
        stats.median = Some(if m % 2 == 1 { times[m / 2] } else { 0.5 * (times[m / 2 - 1] + times[m / 2]) });
        stats.max = times.last().copied();
    }
    Ok(stats)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StationaryMethod {
    TimeAverage,
    TruncatedSolve,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationaryEstimate {
    pub method: StationaryMethod,
    pub truncation: String,
    /// Support in increasing state order.
    pub distribution: Vec<(State, f64)>,
}

impl StationaryEstimate {
    pub fn probability(&self, x: &State) -> f64 {
        self.distribution
            .binary_search_by(|(s, _)| s.cmp(x))
            .map(|i| self.distribution[i].1)
            .unwrap_or(0.0)
    }

    /// Total variation distance `(1/2) sum |p - q|` over the union of supports.
    pub fn tv_distance(&self, other: &StationaryEstimate) -> f64 {
        let mut diff: BTreeMap<&State, f64> = BTreeMap::new();
        for (s, p) in &self.distribution {
            *diff.entry(s).or_default() += p;
        }
        for (s, p) in &other.distribution {
            *diff.entry(s).or_default() -= p;
        }
        0.5 * diff.values().map(|d| d.abs()).sum::<f64>()
    }

    fn from_weights(method: StationaryMethod, truncation: String, weights: BTreeMap<State, f64>) -> Self {
        let total: f64 = weights.values().sum();
        let distribution = weights.into_iter().map(|(s, w)| (s, w / total)).collect();
        StationaryEstimate { method, truncation, distribution }
    }
}

/// Holding-time weighted occupation measure of one trajectory on `[0, t_max]`.
pub fn occupancy_estimate(sys: &MassActionSystem, x0: &State, t_max: f64, seed: u64) -> Result<StationaryEstimate> {
    check_dim(sys, x0)?;
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::InvalidArgument("t_max must be positive and finite".into()));
    }
    let mut rng = StreamRng::new(seed, 0);
    let mut rates = vec![0.0; sys.network().num_reactions()];
    let mut weights: HashMap<State, f64> = HashMap::new();
    let mut x = x0.clone();
    let mut t = 0.0;
    loop {
        match gillespie_step(sys, &x, &mut rates, &mut rng) {
            None => {
                *weights.entry(x).or_default() += t_max - t;
                break;
            }
            Some((hold, r)) => {
                let stay = hold.min(t_max - t);
                *weights.entry(x.clone()).or_default() += stay;
                t += hold;
                if t >= t_max {
                    break;
                }
                x = apply(sys, &x, r);
            }
        }
    }
    weights.retain(|_, w| *w > 0.0);
    Ok(StationaryEstimate::from_weights(
        StationaryMethod::TimeAverage,
        format!("single trajectory on [0, {t_max}]"),
        weights.into_iter().collect(),
    ))
}

/// Residual bound for [`truncated_stationary`].
pub const STATIONARY_TOLERANCE: f64 = 1e-12;
const STATIONARY_MAX_SWEEPS: usize = 20_000_000;

/// Sparse generator of the censored chain on `region`.
pub struct CensoredGenerator {
    pub states: Vec<State>,
    /// `edges[i]` lists `(j, q_ij)` for `j != i` inside the region.
    pub edges: Vec<Vec<(usize, f64)>>,
}

impl CensoredGenerator {
    pub fn new(sys: &MassActionSystem, region: &[State]) -> Result<Self> {
        let mut index: BTreeMap<State, usize> = BTreeMap::new();
        for x in region {
            check_dim(sys, x)?;
            let n = index.len();
            index.entry(x.clone()).or_insert(n);
        }
        let mut states = vec![State::zeros(0); index.len()];
        for (s, &i) in &index {
            states[i] = s.clone();
        }
        let edges = states
            .iter()
            .enumerate()
            .map(|(i, x)| {
                let mut out: BTreeMap<usize, f64> = BTreeMap::new();
                for (h, rate) in sys.transition_rates(x) {
                    if let Some(&j) = x.offset(&h).and_then(|y| index.get(&y)) {
                        if j != i {
                            *out.entry(j).or_default() += rate;
                        }
                    }
                }
                out.into_iter().collect()
            })
            .collect();
        Ok(CensoredGenerator { states, edges })
    }

    pub fn out_rate(&self, i: usize) -> f64 {
        self.edges[i].iter().map(|e| e.1).sum()
    }

    /// `max_j |(pi Q)_j|` for a distribution indexed like `states`.
    pub fn residual(&self, pi: &[f64]) -> f64 {
        let mut flow = vec![0.0; pi.len()];
        for (i, e) in self.edges.iter().enumerate() {
            flow[i] -= pi[i] * self.out_rate(i);
            for &(j, q) in e {
                flow[j] += pi[i] * q;
            }
        }
        flow.iter().fold(0.0, |m, f| m.max(f.abs()))
    }

    /// Closed communicating classes, each sorted by state.
    pub fn closed_classes(&self) -> Vec<Vec<usize>> {
        let mut g = DiGraph::<(), ()>::with_capacity(self.states.len(), 0);
        let nodes: Vec<_> = (0..self.states.len()).map(|_| g.add_node(())).collect();
        for (i, e) in self.edges.iter().enumerate() {
            for &(j, _) in e {
                g.add_edge(nodes[i], nodes[j], ());
            }
        }
        let mut class_of = vec![0; self.states.len()];
        let sccs = tarjan_scc(&g);
        for (c, comp) in sccs.iter().enumerate() {
            for n in comp {
                class_of[n.index()] = c;
            }
        }
        let mut closed: Vec<Vec<usize>> = sccs
            .iter()
            .enumerate()
            .filter(|(c, comp)| {
                comp.iter().all(|n| self.edges[n.index()].iter().all(|&(j, _)| class_of[j] == *c))
            })
            .map(|(_, comp)| {
                let mut v: Vec<usize> = comp.iter().map(|n| n.index()).collect();
                v.sort_by(|a, b| self.states[*a].cmp(&self.states[*b]));
                v
            })
            .collect();
        closed.sort_by(|a, b| self.states[a[0]].cmp(&self.states[b[0]]));
        closed
    }
}

/// Stationary distribution of the chain censored to `region` (transitions
/// leaving the region are dropped), on its unique closed class.
pub fn truncated_stationary(sys: &MassActionSystem, region: &[State]) -> Result<StationaryEstimate> {
    if region.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let gen = CensoredGenerator::new(sys, region)?;
    let mut classes = gen.closed_classes();
    if classes.len() > 1 {
        return Err(Error::AmbiguousRegion {
            classes: classes
                .iter()
                .map(|c| c.iter().map(|&i| gen.states[i].clone()).collect())
                .collect(),
        });
    }
    let class = classes.pop().expect("a finite chain has a closed class");
    let truncation = format!("censored to {} states, closed class of {}", gen.states.len(), class.len());

    // power iteration for the uniformized chain on the class
    let m = class.len();
    let mut local = vec![usize::MAX; gen.states.len()];
    for (k, &i) in class.iter().enumerate() {
        local[i] = k;
    }
    let out: Vec<f64> = class.iter().map(|&i| gen.out_rate(i)).collect();
    let lambda = 1.05 * out.iter().cloned().fold(0.0, f64::max);
    let mut pi = vec![1.0 / m as f64; m];
    let sub = CensoredGenerator {
        states: class.iter().map(|&i| gen.states[i].clone()).collect(),
        edges: class
            .iter()
            .map(|&i| gen.edges[i].iter().map(|&(j, q)| (local[j], q)).collect())
            .collect(),
    };
    if lambda > 0.0 {
        let mut next = vec![0.0; m];
        let mut sweeps = 0;
        loop {
            if sweeps % 64 == 0 && sub.residual(&pi) <= STATIONARY_TOLERANCE {
                break;
            }
            if sweeps >= STATIONARY_MAX_SWEEPS {
                return Err(Error::NotConverged { tolerance: STATIONARY_TOLERANCE, iterations: sweeps });
            }
            for (k, p) in next.iter_mut().enumerate() {
                *p = pi[k] * (1.0 - out[k] / lambda);
            }
            for (k, e) in sub.edges.iter().enumerate() {
                for &(j, q) in e {
                    next[j] += pi[k] * q / lambda;
                }
            }
            let s: f64 = next.iter().sum();
            for (p, n) in pi.iter_mut().zip(&next) {
                *p = n / s;
            }
            sweeps += 1;
        }
    }
    Ok(StationaryEstimate::from_weights(
        StationaryMethod::TruncatedSolve,
        truncation,
        sub.states.into_iter().zip(pi).collect(),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McDrift {
    pub estimate: f64,
    pub std_error: f64,
    pub replicas: usize,
}

/// Sample mean of `V(X~_k) - V(x)` over independent embedded-chain replicas.
pub fn drift_estimate_mc(sys: &MassActionSystem, x: &State, k: usize, replicas: usize, seed: u64) -> Result<McDrift> {
    drift_estimate_mc_with(sys, x, k, replicas, seed, Exec::default())
}

pub fn drift_estimate_mc_with(
    sys: &MassActionSystem,
    x: &State,
    k: usize,
    replicas: usize,
    seed: u64,
    exec: Exec,
) -> Result<McDrift> {
    check_dim(sys, x)?;
    if replicas < 2 {
        return Err(Error::InvalidArgument("at least 2 replicas are needed".into()));
    }
    if k == 0 {
        return Ok(McDrift { estimate: 0.0, std_error: 0.0, replicas });
    }
    if sys.is_absorbing(x) {
        return Err(Error::AbsorbingState(x.clone()));
    }
    let samples = exec.map_range(replicas, |i| {
        let path = embedded_stream(sys, x, k, seed, i as u64);
        let end = path.last().expect("nonempty");
        let h: Vec<i64> = end.counts().iter().zip(x.counts()).map(|(a, b)| *a as i64 - *b as i64).collect();
        lyapunov_increment(x, &h)
    });
    let n = replicas as f64;
    let mean = pairwise_sum(&samples) / n;
    let sq: Vec<f64> = samples.iter().map(|s| (s - mean) * (s - mean)).collect();
    let var = pairwise_sum(&sq) / (n - 1.0);
    Ok(McDrift { estimate: mean, std_error: (var / n).sqrt(), replicas })
}
