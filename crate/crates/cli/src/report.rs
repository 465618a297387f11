//! JSON report types. Every report carries `schema_version` and `kind`;
//! the matching schemas live under `schemas/`.

use serde::Serialize;

use crn_core::sim::{StationaryEstimate, StationaryMethod};
use crn_core::structure::{LinkageClassPartition, ReachabilityReport, TheoremVerdict, Verdict};
use crn_core::tiers::{HypothesisReport, PathTierReport, TierPartition};
use crn_core::{MassActionSystem, ReactionNetwork};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Serialize)]
pub struct Header {
    pub schema_version: u32,
    pub kind: &'static str,
    pub tool_version: &'static str,
    pub input_hash: String,
}

impl Header {
    pub fn new(kind: &'static str, input_hash: &str) -> Self {
        Header { schema_version: SCHEMA_VERSION, kind, tool_version: TOOL_VERSION, input_hash: input_hash.to_string() }
    }
}

#[derive(Serialize)]
pub struct ReactionSummary {
    pub reaction: String,
    pub rate_constant: f64,
}

#[derive(Serialize)]
pub struct NetworkSummary {
    pub species: Vec<String>,
    pub complexes: Vec<String>,
    pub reactions: Vec<ReactionSummary>,
}

impl NetworkSummary {
    pub fn new(sys: &MassActionSystem) -> Self {
        let net = sys.network();
        NetworkSummary {
            species: net.species().iter().map(|s| s.name.clone()).collect(),
            complexes: (0..net.complexes().len()).map(|c| net.complex_label(c)).collect(),
            reactions: (0..net.num_reactions())
                .map(|r| ReactionSummary { reaction: net.reaction_label(r), rate_constant: sys.kappa()[r] })
                .collect(),
        }
    }
}

#[derive(Serialize)]
pub struct ClassSummary {
    pub complexes: Vec<String>,
    pub weakly_reversible: bool,
}

pub fn classes(net: &ReactionNetwork, p: &LinkageClassPartition) -> Vec<ClassSummary> {
    p.classes
        .iter()
        .map(|c| ClassSummary {
            complexes: c.complexes.iter().map(|&i| net.complex_label(i)).collect(),
            weakly_reversible: c.weakly_reversible,
        })
        .collect()
}

#[derive(Serialize)]
pub struct WitnessSummary {
    pub species: String,
    pub complex: Option<String>,
}

#[derive(Serialize)]
pub struct VerdictSummary {
    pub verdict: Verdict,
    pub weakly_reversible: bool,
    pub single_linkage_class: bool,
    pub binary: bool,
    pub species_complex_condition: bool,
    pub species_witnesses: Vec<WitnessSummary>,
    pub failed_hypotheses: Vec<crn_core::structure::Hypothesis>,
}

impl From<&TheoremVerdict> for VerdictSummary {
    fn from(v: &TheoremVerdict) -> Self {
        VerdictSummary {
            verdict: v.verdict,
            weakly_reversible: v.weakly_reversible,
            single_linkage_class: v.single_linkage_class,
            binary: v.binary,
            species_complex_condition: v.species_condition.holds,
            species_witnesses: v
                .species_condition
                .witnesses
                .iter()
                .map(|w| WitnessSummary { species: w.species.clone(), complex: w.label.clone() })
                .collect(),
            failed_hypotheses: v.reasons.clone(),
        }
    }
}

#[derive(Serialize)]
pub struct ReachabilitySummary {
    pub x0: Vec<u64>,
    pub cap: usize,
    pub states_enumerated: usize,
    pub truncated: bool,
    pub absorbing: Vec<Vec<u64>>,
    pub min_total_rate: Option<f64>,
}

impl ReachabilitySummary {
    pub fn new(x0: Vec<u64>, cap: usize, r: &ReachabilityReport) -> Self {
        ReachabilitySummary {
            x0,
            cap,
            states_enumerated: r.states.len(),
            truncated: r.truncated,
            absorbing: r.absorbing.iter().map(|s| s.counts().to_vec()).collect(),
            min_total_rate: r.min_total_rate,
        }
    }
}

#[derive(Serialize)]
pub struct AnalysisReport {
    #[serde(flatten)]
    pub header: Header,
    pub network: NetworkSummary,
    pub linkage_classes: Vec<ClassSummary>,
    pub theorem: VerdictSummary,
    pub hypothesis_check: Option<HypothesisReport>,
    pub reachability: Option<ReachabilitySummary>,
}

#[derive(Serialize)]
pub struct PartitionSummary {
    pub tiers: Vec<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub infinite_tier: Option<Vec<String>>,
}

impl PartitionSummary {
    pub fn new(net: &ReactionNetwork, p: &TierPartition, with_infinite: bool) -> Self {
        let names = |ids: &[usize]| ids.iter().map(|&c| net.complex_label(c)).collect::<Vec<_>>();
        PartitionSummary {
            tiers: p.tiers.iter().map(|t| names(t)).collect(),
            infinite_tier: with_infinite.then(|| names(&p.infinite_tier)),
        }
    }
}

#[derive(Serialize)]
pub struct PathSummary {
    pub source: &'static str,
    pub reactions: Vec<String>,
    pub in_ts1: bool,
    pub in_d: bool,
    pub first_drop_index: Option<usize>,
    pub probability_limit: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probability_at_n: Option<ProbabilityAt>,
}

impl PathSummary {
    pub fn new(net: &ReactionNetwork, source: &'static str, rep: &PathTierReport, limit: f64) -> Self {
        PathSummary {
            source,
            reactions: rep.path.iter().map(|&r| net.reaction_label(r)).collect(),
            in_ts1: rep.in_ts1,
            in_d: rep.in_d,
            first_drop_index: rep.first_drop_index,
            probability_limit: limit,
            probability_at_n: None,
        }
    }
}

#[derive(Serialize)]
pub struct ProbabilityAt {
    pub n: u64,
    pub state: Vec<u64>,
    pub probability: f64,
}

#[derive(Serialize)]
pub struct TiersReport {
    #[serde(flatten)]
    pub header: Header,
    pub sequence: String,
    pub n0: u64,
    pub d_partition: PartitionSummary,
    pub s_partition: PartitionSummary,
    pub path: Option<PathSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path_error: Option<String>,
}

#[derive(Serialize)]
pub struct DriftReport {
    #[serde(flatten)]
    pub header: Header,
    pub x: Vec<u64>,
    pub k: usize,
    pub method: &'static str,
    pub drift: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replicas: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub paths: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub absorbed_mass: Option<f64>,
}

#[derive(Serialize)]
pub struct Entry {
    pub state: Vec<u64>,
    pub probability: f64,
}

#[derive(Serialize)]
pub struct StationaryReport {
    #[serde(flatten)]
    pub header: Header,
    pub method: StationaryMethod,
    pub truncation: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub distribution: Vec<Entry>,
}

impl StationaryReport {
    pub fn new(header: Header, est: StationaryEstimate, seed: Option<u64>) -> Self {
        StationaryReport {
            header,
            method: est.method,
            truncation: est.truncation,
            seed,
            distribution: est
                .distribution
                .into_iter()
                .map(|(s, p)| Entry { state: s.counts().to_vec(), probability: p })
                .collect(),
        }
    }
}
