//! Reaction-graph structure: linkage classes, weak reversibility, the
//! binary and species-complex conditions, and the structural verdict.
//! Also breadth-first enumeration of reachable states.

use std::collections::{HashSet, VecDeque};

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use petgraph::unionfind::UnionFind;
use serde::Serialize;

use crate::model::{ComplexId, MassActionSystem, ReactionNetwork, State};

/// Default state budget for [`reachable_states`].
pub const DEFAULT_REACH_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LinkageClass {
    pub complexes: Vec<ComplexId>,
    pub weakly_reversible: bool,
}

/// Linkage classes ordered by their smallest complex index; complexes
/// within a class are sorted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LinkageClassPartition {
    pub classes: Vec<LinkageClass>,
}

impl LinkageClassPartition {
    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn all_weakly_reversible(&self) -> bool {
        self.classes.iter().all(|c| c.weakly_reversible)
    }
}

fn reaction_graph(net: &ReactionNetwork) -> DiGraph<(), ()> {
    let mut g = DiGraph::with_capacity(net.complexes().len(), net.num_reactions());
    for _ in net.complexes() {
        g.add_node(());
    }
    for r in net.reactions() {
        g.add_edge(NodeIndex::new(r.source), NodeIndex::new(r.product), ());
    }
    g
}

/// Connected components of the undirected reaction graph, each flagged
/// with whether it is strongly connected as a directed graph.
pub fn linkage_classes(net: &ReactionNetwork) -> LinkageClassPartition {
    let n = net.complexes().len();
    let mut uf = UnionFind::<usize>::new(n);
    for r in net.reactions() {
        uf.union(r.source, r.product);
    }
    let mut scc_of = vec![0usize; n];
    for (k, comp) in tarjan_scc(&reaction_graph(net)).into_iter().enumerate() {
        for v in comp {
            scc_of[v.index()] = k;
        }
    }

    let mut classes: Vec<LinkageClass> = Vec::new();
    let mut class_of_root = std::collections::HashMap::new();
    for c in 0..n {
        let root = uf.find(c);
        let idx = *class_of_root.entry(root).or_insert_with(|| {
            classes.push(LinkageClass { complexes: Vec::new(), weakly_reversible: true });
            classes.len() - 1
        });
        classes[idx].complexes.push(c);
    }
    for class in &mut classes {
        let first = scc_of[class.complexes[0]];
        class.weakly_reversible = class.complexes.iter().all(|&c| scc_of[c] == first);
    }
    LinkageClassPartition { classes }
}

/// Every linkage class is strongly connected (vacuously true without
/// reactions).
pub fn is_weakly_reversible(net: &ReactionNetwork) -> bool {
    linkage_classes(net).all_weakly_reversible()
}

/// Every complex has total stoichiometry at most two.
pub fn is_binary(net: &ReactionNetwork) -> bool {
    net.complexes().iter().all(|c| c.order() <= 2)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SpeciesWitness {
    pub species: String,
    /// Index of the complex `S` (preferred) or `2S`, if either exists.
    pub complex: Option<ComplexId>,
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SpeciesCondition {
    pub holds: bool,
    pub witnesses: Vec<SpeciesWitness>,
}

impl SpeciesCondition {
    pub fn failures(&self) -> impl Iterator<Item = &str> {
        self.witnesses.iter().filter(|w| w.complex.is_none()).map(|w| w.species.as_str())
    }
}

/// For each species `S`, looks for the complex `S` or `2S`.
pub fn species_complex_condition(net: &ReactionNetwork) -> SpeciesCondition {
    let d = net.dim();
    let find = |i: usize, k: u32| {
        net.complexes().iter().position(|c| {
            c.coeffs().iter().enumerate().all(|(j, &v)| if j == i { v == k } else { v == 0 })
        })
    };
    let witnesses: Vec<SpeciesWitness> = (0..d)
        .map(|i| {
            let complex = find(i, 1).or_else(|| find(i, 2));
            SpeciesWitness {
                species: net.species()[i].name.clone(),
                complex,
                label: complex.map(|c| net.complex_label(c)),
            }
        })
        .collect();
    SpeciesCondition { holds: witnesses.iter().all(|w| w.complex.is_some()), witnesses }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    PositiveRecurrent,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Hypothesis {
    WeaklyReversible,
    SingleLinkageClass,
    Binary,
    SpeciesComplex,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TheoremVerdict {
    pub weakly_reversible: bool,
    pub single_linkage_class: bool,
    pub binary: bool,
    pub species_condition: SpeciesCondition,
    pub verdict: Verdict,
    /// Failed hypotheses, in the order listed in [`Hypothesis`].
    pub reasons: Vec<Hypothesis>,
}

/// Weakly reversible + one linkage class + binary + every species has `S`
/// or `2S` among the complexes implies positive recurrence for every
/// choice of rate constants. Otherwise the check is inconclusive.
pub fn theorem_verdict(net: &ReactionNetwork) -> TheoremVerdict {
    let classes = linkage_classes(net);
    let weakly_reversible = classes.all_weakly_reversible();
    let single_linkage_class = classes.len() == 1;
    let binary = is_binary(net);
    let species_condition = species_complex_condition(net);

    let mut reasons = Vec::new();
    for (ok, h) in [
        (weakly_reversible, Hypothesis::WeaklyReversible),
        (single_linkage_class, Hypothesis::SingleLinkageClass),
        (binary, Hypothesis::Binary),
        (species_condition.holds, Hypothesis::SpeciesComplex),
    ] {
        if !ok {
            reasons.push(h);
        }
    }
    let verdict = if reasons.is_empty() { Verdict::PositiveRecurrent } else { Verdict::Inconclusive };
    TheoremVerdict { weakly_reversible, single_linkage_class, binary, species_condition, verdict, reasons }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReachabilityReport {
    /// Enumerated states in breadth-first discovery order.
    pub states: Vec<State>,
    /// The cap was hit; `states` is then not closed under transitions.
    pub truncated: bool,
    pub absorbing: Vec<State>,
    /// Minimum total rate over the enumerated non-absorbing states. This is
    /// evidence about the infimum over the full reachable set, not a bound.
    pub min_total_rate: Option<f64>,
}

/// Breadth-first closure of `{x0}` under positive-rate transitions, stopping
/// at `cap` states.
pub fn reachable_states(sys: &MassActionSystem, x0: &State, cap: usize) -> ReachabilityReport {
    let cap = cap.max(1);
    let net = sys.network();
    let mut seen: HashSet<State> = HashSet::from([x0.clone()]);
    let mut order = vec![x0.clone()];
    let mut queue = VecDeque::from([x0.clone()]);
    let mut absorbing = Vec::new();
    let mut truncated = false;
    let mut min_rate: Option<f64> = None;
    let mut rates = vec![0.0; net.num_reactions()];

    while let Some(x) = queue.pop_front() {
        sys.fill_rates(&x, &mut rates);
        let total: f64 = rates.iter().sum();
        if total == 0.0 {
            absorbing.push(x);
            continue;
        }
        min_rate = Some(min_rate.map_or(total, |m| m.min(total)));
        for (i, &rate) in rates.iter().enumerate() {
            if rate == 0.0 {
                continue;
            }
            let y = x.offset(net.jump(i)).expect("positive rate implies a valid target");
            if seen.contains(&y) {
                continue;
            }
            if seen.len() >= cap {
                truncated = true;
                continue;
            }
            seen.insert(y.clone());
            order.push(y.clone());
            queue.push_back(y);
        }
    }
    ReachabilityReport { states: order, truncated, absorbing, min_total_rate: min_rate }
}
