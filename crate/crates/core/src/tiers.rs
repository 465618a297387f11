//! Tier analysis along monomial state sequences and exact k-step drift.
//!
//! A [`ParametricSequence`] fixes each coordinate either to a constant or to
//! `ceil(a * n^p)` (rational `p > 0`), plus an integer offset. Along such a
//! sequence `(x_n v 1)^y` and `lambda_y(x_n)` are, up to constants,
//! `n^deg(y)` with `deg(y) = sum over growing i of y_i * p_i`, so the
//! limits defining D-type and S-type tiers reduce to exact comparisons of
//! rational degrees. Complexes whose intensity is identically zero (a
//! constant coordinate below the required count) form the S-type infinite
//! tier.

use std::cmp::Reverse;
use std::collections::{BTreeMap, HashSet, VecDeque};
use std::fmt;
use std::hash::{Hash, Hasher};

use num_rational::Ratio;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kinetics::{intensity_unchecked, lyapunov_increment};
use crate::model::{Complex, ComplexId, MassActionSystem, ReactionId, ReactionNetwork, State};
use crate::par::Exec;

pub type Exponent = Ratio<i64>;

/// Default path budget for [`exact_kstep_drift`].
pub const DEFAULT_DRIFT_BUDGET: u128 = 10_000_000;
/// Default pattern budget for [`hypothesis_check`].
pub const DEFAULT_PATTERN_BUDGET: usize = 2_000_000;
/// Largest species count accepted by [`hypothesis_check`].
pub const MAX_SCAN_SPECIES: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub enum Coordinate {
    Const(u64),
    /// `ceil(coef * n^exp)`.
    Grow { coef: f64, exp: Exponent },
}

impl Coordinate {
    pub fn grow(coef: f64, exp: i64) -> Self {
        Coordinate::Grow { coef, exp: Exponent::from_integer(exp) }
    }

    pub fn is_grow(&self) -> bool {
        matches!(self, Coordinate::Grow { .. })
    }
}

fn exp_f64(e: &Exponent) -> f64 {
    *e.numer() as f64 / *e.denom() as f64
}

fn grow_base(coef: f64, exp: &Exponent, n: u64) -> f64 {
    (coef * (n as f64).powf(exp_f64(exp))).ceil()
}

/// A symbolic state sequence `x_n`, `n >= n0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParametricSequence {
    coords: Vec<Coordinate>,
    offset: Vec<i64>,
    n0: u64,
}

impl ParametricSequence {
    /// Validates the coordinates and raises `n0` until every growing
    /// coordinate is nonnegative after the offset.
    pub fn new(coords: Vec<Coordinate>, offset: Vec<i64>, n0: u64) -> Result<Self> {
        if coords.len() != offset.len() {
            return Err(Error::DimensionMismatch { expected: coords.len(), found: offset.len() });
        }
        if !coords.iter().any(Coordinate::is_grow) {
            return Err(Error::InvalidSequence(
                "no growing coordinate; not a proper tier sequence".into(),
            ));
        }
        for (i, c) in coords.iter().enumerate() {
            match c {
                Coordinate::Const(v) => {
                    if (*v as i128) + (offset[i] as i128) < 0 {
                        return Err(Error::InvalidSequence(format!(
                            "coordinate {i} is constant {v} with offset {}",
                            offset[i]
                        )));
                    }
                }
                Coordinate::Grow { coef, exp } => {
                    if !(coef.is_finite() && *coef > 0.0) {
                        return Err(Error::InvalidSequence(format!(
                            "coordinate {i}: growth coefficient must be positive"
                        )));
                    }
                    if *exp <= Exponent::from_integer(0) {
                        return Err(Error::InvalidSequence(format!(
                            "coordinate {i}: growth exponent must be positive"
                        )));
                    }
                }
            }
        }
        let seq = ParametricSequence { coords, offset, n0: n0.max(1) };
        Ok(seq.raised_to(0))
    }

    pub fn from_coords(coords: Vec<Coordinate>) -> Result<Self> {
        let d = coords.len();
        Self::new(coords, vec![0; d], 1)
    }

    pub fn coords(&self) -> &[Coordinate] {
        &self.coords
    }

    pub fn offset(&self) -> &[i64] {
        &self.offset
    }

    pub fn n0(&self) -> u64 {
        self.n0
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    fn value_f64(&self, i: usize, n: u64) -> f64 {
        match &self.coords[i] {
            Coordinate::Const(c) => *c as f64 + self.offset[i] as f64,
            Coordinate::Grow { coef, exp } => grow_base(*coef, exp, n) + self.offset[i] as f64,
        }
    }

    fn grow_ok(&self, n: u64, floor: f64) -> bool {
        (0..self.dim()).all(|i| !self.coords[i].is_grow() || self.value_f64(i, n) >= floor)
    }

    /// Smallest start `>= n0` at which every growing coordinate is at least
    /// `floor`.
    fn raised_to(mut self, floor: u64) -> Self {
        let floor = floor as f64;
        if self.grow_ok(self.n0, floor) {
            return self;
        }
        let mut lo = self.n0;
        let mut hi = self.n0.saturating_mul(2).max(2);
        while !self.grow_ok(hi, floor) {
            lo = hi;
            hi = hi.saturating_mul(2);
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if self.grow_ok(mid, floor) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        self.n0 = hi;
        self
    }

    /// Raises `n0` so every growing coordinate exceeds the largest
    /// stoichiometric coefficient of `net`. After this the intensity of a
    /// complex either vanishes for every `n >= n0` or for none.
    pub fn tail_normalized(&self, net: &ReactionNetwork) -> Self {
        self.clone().raised_to(u64::from(net.max_coefficient()) + 1)
    }

    pub fn is_tail_normalized(&self, net: &ReactionNetwork) -> bool {
        self.grow_ok(self.n0, f64::from(net.max_coefficient()) + 1.0)
    }

    /// `x_n`. Coordinate `i` is `c_i + w_i` or `ceil(a_i n^p_i) + w_i`.
    pub fn evaluate(&self, n: u64) -> Result<State> {
        if n < self.n0 {
            return Err(Error::InvalidSequence(format!("n = {n} is below the start index {}", self.n0)));
        }
        let counts = (0..self.dim())
            .map(|i| {
                let v = self.value_f64(i, n);
                if v < 0.0 {
                    Err(Error::InvalidSequence(format!("coordinate {i} is negative at n = {n}")))
                } else {
                    Ok(v as u64)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(State::from(counts))
    }

    /// The sequence `x_n + w`, with `n0` raised as needed.
    pub fn shift(&self, w: &[i64]) -> Result<Self> {
        if w.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: w.len() });
        }
        let offset = self.offset.iter().zip(w).map(|(a, b)| a + b).collect();
        Self::new(self.coords.clone(), offset, self.n0)
    }

    /// Growth degree of `(x_n v 1)^y` and, off the infinite tier, of
    /// `lambda_y(x_n)`.
    pub fn degree(&self, y: &Complex) -> Exponent {
        self.coords
            .iter()
            .zip(y.coeffs())
            .filter_map(|(c, &k)| match c {
                Coordinate::Grow { exp, .. } => Some(exp * i64::from(k)),
                Coordinate::Const(_) => None,
            })
            .fold(Exponent::from_integer(0), |a, b| a + b)
    }

    /// Whether `lambda_y(x_n) = 0` for every `n` (a constant coordinate has
    /// fewer molecules than `y` needs).
    pub fn intensity_vanishes(&self, y: &Complex) -> bool {
        self.coords.iter().enumerate().zip(y.coeffs()).any(|((i, c), &k)| match c {
            Coordinate::Const(v) => (*v as i64 + self.offset[i]) < i64::from(k),
            Coordinate::Grow { .. } => false,
        })
    }

    /// `lim lambda_y(x_n) / n^deg(y)`; zero on the infinite tier.
    pub fn leading_coefficient(&self, y: &Complex) -> f64 {
        let mut out = 1.0;
        for (i, (c, &k)) in self.coords.iter().zip(y.coeffs()).enumerate() {
            match c {
                Coordinate::Grow { coef, .. } => out *= coef.powi(k as i32),
                Coordinate::Const(v) => {
                    let x = *v as i64 + self.offset[i];
                    for j in 0..i64::from(k) {
                        out *= (x - j).max(0) as f64;
                    }
                }
            }
        }
        out
    }

    /// Human-readable form such as `A=n, B=2*n^3/2+1, C=0`.
    pub fn describe(&self, names: &[String]) -> String {
        let parts: Vec<String> = self
            .coords
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let name = names.get(i).cloned().unwrap_or_else(|| format!("x{i}"));
                let w = self.offset[i];
                let body = match c {
                    Coordinate::Const(v) => return format!("{name}={}", *v as i64 + w),
                    Coordinate::Grow { coef, exp } => {
                        let mut s = if *coef == 1.0 { String::new() } else { format!("{coef}*") };
                        s.push('n');
                        if *exp != Exponent::from_integer(1) {
                            s.push_str(&format!("^{exp}"));
                        }
                        s
                    }
                };
                match w {
                    0 => format!("{name}={body}"),
                    w if w > 0 => format!("{name}={body}+{w}"),
                    w => format!("{name}={body}{w}"),
                }
            })
            .collect();
        parts.join(", ")
    }

    /// Parses `A=n, B=1, C=0` or `A=2*n^2, B=3`. Every species must appear
    /// exactly once. Exponents may be integers or fractions such as `3/2`.
    pub fn parse(text: &str, species: &[String]) -> Result<Self> {
        let mut coords: Vec<Option<Coordinate>> = vec![None; species.len()];
        let bad = |m: String| Error::InvalidSequence(m);
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (name, expr) = item
                .split_once('=')
                .ok_or_else(|| bad(format!("expected `species=expr`, got `{item}`")))?;
            let (name, expr) = (name.trim(), expr.replace(' ', ""));
            let i = species
                .iter()
                .position(|s| s == name)
                .ok_or_else(|| bad(format!("unknown species `{name}`")))?;
            if coords[i].is_some() {
                return Err(bad(format!("species `{name}` given twice")));
            }
            coords[i] = Some(parse_coordinate(&expr).ok_or_else(|| bad(format!("cannot parse `{expr}`")))?);
        }
        let coords = coords
            .into_iter()
            .enumerate()
            .map(|(i, c)| c.ok_or_else(|| bad(format!("species `{}` missing", species[i]))))
            .collect::<Result<Vec<_>>>()?;
        Self::from_coords(coords)
    }
}

fn parse_exponent(s: &str) -> Option<Exponent> {
    let s = s.strip_prefix('(').and_then(|t| t.strip_suffix(')')).unwrap_or(s);
    match s.split_once('/') {
        Some((p, q)) => {
            let (p, q) = (p.parse::<i64>().ok()?, q.parse::<i64>().ok()?);
            (q > 0).then(|| Exponent::new(p, q))
        }
        None => s.parse::<i64>().ok().map(Exponent::from_integer),
    }
}

fn parse_coordinate(expr: &str) -> Option<Coordinate> {
    if expr.chars().all(|c| c.is_ascii_digit()) && !expr.is_empty() {
        return expr.parse().ok().map(Coordinate::Const);
    }
    let (coef, rest) = expr.split_once('n')?;
    let coef = coef.strip_suffix('*').unwrap_or(coef);
    let coef = if coef.is_empty() { 1.0 } else { coef.parse::<f64>().ok()? };
    let exp = if rest.is_empty() { Exponent::from_integer(1) } else { parse_exponent(rest.strip_prefix('^')?)? };
    Some(Coordinate::Grow { coef, exp })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum TierKind {
    Dtype,
    Stype,
}

/// Ordered tiers (index 0 dominates) plus, for S-type partitions, the tier
/// of complexes with identically zero intensity.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct TierPartition {
    pub kind: TierKind,
    pub tiers: Vec<Vec<ComplexId>>,
    pub infinite_tier: Vec<ComplexId>,
}

impl TierPartition {
    /// Index of the finite tier holding `c`, or `None` for the infinite tier.
    pub fn tier_of(&self, c: ComplexId) -> Option<usize> {
        self.tiers.iter().position(|t| t.contains(&c))
    }

    pub fn top(&self) -> &[ComplexId] {
        self.tiers.first().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn in_top(&self, c: ComplexId) -> bool {
        self.top().contains(&c)
    }
}

fn group_by_degree(
    net: &ReactionNetwork,
    seq: &ParametricSequence,
    members: impl Iterator<Item = ComplexId>,
) -> Vec<Vec<ComplexId>> {
    let mut by_deg: BTreeMap<Reverse<Exponent>, Vec<ComplexId>> = BTreeMap::new();
    for c in members {
        by_deg.entry(Reverse(seq.degree(net.complex(c)))).or_default().push(c);
    }
    by_deg.into_values().collect()
}

/// D-type tiers: complexes grouped by decreasing growth degree.
pub fn d_partition(net: &ReactionNetwork, seq: &ParametricSequence) -> TierPartition {
    TierPartition {
        kind: TierKind::Dtype,
        tiers: group_by_degree(net, seq, 0..net.complexes().len()),
        infinite_tier: Vec::new(),
    }
}

/// S-type tiers. Requires a tail-normalized sequence so that each
/// intensity is either zero for every `n` or for none.
pub fn s_partition(net: &ReactionNetwork, seq: &ParametricSequence) -> Result<TierPartition> {
    let mut infinite = Vec::new();
    let mut finite = Vec::new();
    let x0 = seq.evaluate(seq.n0())?;
    for (c, y) in net.complexes().iter().enumerate() {
        if seq.intensity_vanishes(y) {
            infinite.push(c);
        } else if !x0.dominates(y) {
            return Err(Error::TailNotNormalized { complex: c, n0: seq.n0() });
        } else {
            finite.push(c);
        }
    }
    Ok(TierPartition {
        kind: TierKind::Stype,
        tiers: group_by_degree(net, seq, finite.into_iter()),
        infinite_tier: infinite,
    })
}

/// Both partitions along one (tail-normalized) step of a path.
struct StepTiers {
    seq: ParametricSequence,
    d: TierPartition,
    s: TierPartition,
}

fn step_tiers(net: &ReactionNetwork, seq: &ParametricSequence) -> Result<StepTiers> {
    let seq = seq.tail_normalized(net);
    let d = d_partition(net, &seq);
    let s = s_partition(net, &seq)?;
    Ok(StepTiers { seq, d, s })
}

/// Tiers along each prefix-shifted sequence `x_n + sum_{j<m} jump_j`.
fn path_steps(net: &ReactionNetwork, seq: &ParametricSequence, path: &[ReactionId]) -> Result<Vec<StepTiers>> {
    for &r in path {
        net.reaction(r)?;
    }
    let mut out = Vec::with_capacity(path.len());
    let mut z = seq.clone();
    for (m, &r) in path.iter().enumerate() {
        out.push(step_tiers(net, &z)?);
        if m + 1 < path.len() {
            z = z.shift(net.jump(r))?;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PathTierReport {
    pub path: Vec<ReactionId>,
    /// Every source lies in the top S-type tier of its shifted sequence.
    pub in_ts1: bool,
    /// Every source lies in the top D-type tier and some product drops out.
    pub in_d: bool,
    /// 1-based index of the first product outside the top D-type tier.
    pub first_drop_index: Option<usize>,
}

pub fn path_tier_membership(
    net: &ReactionNetwork,
    seq: &ParametricSequence,
    path: &[ReactionId],
) -> Result<PathTierReport> {
    let steps = path_steps(net, seq, path)?;
    let mut in_ts1 = true;
    let mut sources_top_d = true;
    let mut first_drop_index = None;
    for (m, (st, &r)) in steps.iter().zip(path).enumerate() {
        let rx = &net.reactions()[r];
        in_ts1 &= st.s.in_top(rx.source);
        sources_top_d &= st.d.in_top(rx.source);
        if first_drop_index.is_none() && !st.d.in_top(rx.product) {
            first_drop_index = Some(m + 1);
        }
    }
    Ok(PathTierReport {
        path: path.to_vec(),
        in_ts1,
        in_d: sources_top_d && first_drop_index.is_some(),
        first_drop_index,
    })
}

/// `lim_n P_{x_n}(first jumps are exactly `path`)`.
///
/// Each factor tends to `kappa_m c(y_m) / sum kappa c(y)` where `c` is the
/// leading coefficient of the intensity and the sum runs over reactions
/// whose source is in the top S-type tier. Paths leaving the top S-type
/// tier have limit zero.
pub fn path_probability_limit(
    sys: &MassActionSystem,
    seq: &ParametricSequence,
    path: &[ReactionId],
) -> Result<f64> {
    let net = sys.network();
    let steps = path_steps(net, seq, path)?;
    let mut prob = 1.0;
    for (st, &r) in steps.iter().zip(path) {
        let src = net.reactions()[r].source;
        if !st.s.in_top(src) {
            return Ok(0.0);
        }
        let weight = |i: usize| sys.kappa()[i] * st.seq.leading_coefficient(net.source(i));
        let denom: f64 = (0..net.num_reactions())
            .filter(|&i| st.s.in_top(net.reactions()[i].source))
            .map(weight)
            .sum();
        prob *= weight(r) / denom;
    }
    Ok(prob)
}

/// Labels of the scanned sequence family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum PatternLabel {
    Zero,
    Two,
    /// `n^p`, `p` in 1..=3.
    Grow(u8),
}

impl PatternLabel {
    pub const ALL: [PatternLabel; 5] =
        [PatternLabel::Zero, PatternLabel::Two, PatternLabel::Grow(1), PatternLabel::Grow(2), PatternLabel::Grow(3)];

    fn coordinate(self) -> Coordinate {
        match self {
            PatternLabel::Zero => Coordinate::Const(0),
            PatternLabel::Two => Coordinate::Const(2),
            PatternLabel::Grow(p) => Coordinate::grow(1.0, i64::from(p)),
        }
    }
}

impl fmt::Display for PatternLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PatternLabel::Zero => write!(f, "0"),
            PatternLabel::Two => write!(f, "2"),
            PatternLabel::Grow(1) => write!(f, "n"),
            PatternLabel::Grow(p) => write!(f, "n^{p}"),
        }
    }
}

/// The per-species labelling with index `idx` in base-5 order, or `None`
/// when it has no growing coordinate.
pub fn pattern_labels(dim: usize, mut idx: u64) -> Option<Vec<PatternLabel>> {
    let labels: Vec<PatternLabel> = (0..dim)
        .map(|_| {
            let l = PatternLabel::ALL[(idx % 5) as usize];
            idx /= 5;
            l
        })
        .collect();
    labels.iter().any(|l| matches!(l, PatternLabel::Grow(_))).then_some(labels)
}

pub fn pattern_sequence(labels: &[PatternLabel]) -> ParametricSequence {
    ParametricSequence::from_coords(labels.iter().map(|l| l.coordinate()).collect())
        .expect("pattern has a growing coordinate")
}

/// Every scanned pattern for a `dim`-species network, in scan order.
pub fn pattern_family(dim: usize) -> impl Iterator<Item = (Vec<PatternLabel>, ParametricSequence)> {
    (0..5u64.pow(dim as u32)).filter_map(move |i| pattern_labels(dim, i).map(|l| {
        let s = pattern_sequence(&l);
        (l, s)
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub pattern: Vec<String>,
    pub sequence: String,
    pub complex: ComplexId,
    pub complex_label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub patterns_checked: u64,
    pub patterns_total: u64,
    /// Distinct (D-partition, S-partition) pairs among checked patterns.
    pub distinct_structures: usize,
    /// Budget cut the scan short; a clean result is then heuristic.
    pub partial: bool,
    pub violation: Option<Violation>,
}

impl HypothesisReport {
    pub fn no_violation_found(&self) -> bool {
        self.violation.is_none()
    }
}

/// Complexes in the top S-type tier but not in the top D-type tier.
pub fn tier_inclusion_failures(net: &ReactionNetwork, seq: &ParametricSequence) -> Result<Vec<ComplexId>> {
    let st = step_tiers(net, seq)?;
    Ok(st.s.top().iter().copied().filter(|&c| !st.d.in_top(c)).collect())
}

/// Scans the pattern family for a sequence along which the top S-type tier
/// is not contained in the top D-type tier. A reported violation is a
/// genuine counterexample within the family; a clean scan is evidence, not
/// proof, for arbitrary sequences.
pub fn hypothesis_check(net: &ReactionNetwork, budget: usize) -> Result<HypothesisReport> {
    hypothesis_check_with(net, budget, Exec::default())
}

pub fn hypothesis_check_with(net: &ReactionNetwork, budget: usize, exec: Exec) -> Result<HypothesisReport> {
    let d = net.dim();
    if d > MAX_SCAN_SPECIES {
        return Err(Error::TooManySpecies { max: MAX_SCAN_SPECIES, found: d });
    }
    let raw = 5u64.pow(d as u32);
    let total = raw - 2u64.pow(d as u32);

    let evaluate = |i: usize| -> Result<Option<(u64, Option<ComplexId>)>> {
        let Some(labels) = pattern_labels(d, i as u64) else { return Ok(None) };
        let st = step_tiers(net, &pattern_sequence(&labels))?;
        let bad = st.s.top().iter().copied().find(|&c| !st.d.in_top(c));
        let mut h = std::collections::hash_map::DefaultHasher::new();
        (&st.d.tiers, &st.s.tiers, &st.s.infinite_tier).hash(&mut h);
        Ok(Some((h.finish(), bad)))
    };

    // Walk raw indices in chunks until `budget` patterns are evaluated.
    let mut checked = 0u64;
    let mut structures = HashSet::new();
    let mut violation = None;
    let mut next = 0u64;
    let chunk = 1usize << 16;
    'scan: while next < raw && (checked as usize) < budget {
        let len = chunk.min((raw - next) as usize);
        let base = next;
        let results = exec.map_range(len, |j| evaluate((base as usize) + j));
        for (j, res) in results.into_iter().enumerate() {
            let Some((hash, bad)) = res? else { continue };
            if checked as usize >= budget {
                break 'scan;
            }
            checked += 1;
            structures.insert(hash);
            if let Some(c) = bad {
                let labels = pattern_labels(d, base + j as u64).expect("evaluated pattern");
                let names: Vec<String> = net.species().iter().map(|s| s.name.clone()).collect();
                violation = Some(Violation {
                    pattern: labels.iter().map(|l| l.to_string()).collect(),
                    sequence: pattern_sequence(&labels).describe(&names),
                    complex: c,
                    complex_label: net.complex_label(c),
                });
                break 'scan;
            }
        }
        next += len as u64;
    }
    Ok(HypothesisReport {
        patterns_checked: checked,
        patterns_total: total,
        distinct_structures: structures.len(),
        partial: violation.is_none() && checked < total,
        violation,
    })
}

/// Builds a path of exactly `target_len` reactions lying in both the top
/// S-type path tier and the D-type path tier along `seq`.
///
/// Starts from the first complex of the top S-type tier, follows a shortest
/// directed path to a complex outside the top D-type tier, cuts it at the
/// first tier drop, then appends reactions of asymptotically maximal
/// intensity (ties broken by declaration order).
pub fn witness_path(sys: &MassActionSystem, seq: &ParametricSequence, target_len: usize) -> Result<Vec<ReactionId>> {
    let net = sys.network();
    let base = step_tiers(net, seq)?;
    if base.d.tiers.len() <= 1 {
        return Err(Error::NoDropComplex);
    }
    let &start = base
        .s
        .top()
        .first()
        .ok_or_else(|| Error::WitnessUnavailable("every intensity vanishes along the sequence".into()))?;

    // breadth-first search in the reaction graph
    let n = net.complexes().len();
    let mut via: Vec<Option<ReactionId>> = vec![None; n];
    let mut seen = vec![false; n];
    seen[start] = true;
    let mut queue = VecDeque::from([start]);
    let mut target = None;
    while let Some(c) = queue.pop_front() {
        if !base.d.in_top(c) {
            target = Some(c);
            break;
        }
        for (r, rx) in net.reactions().iter().enumerate() {
            if rx.source == c && !seen[rx.product] {
                seen[rx.product] = true;
                via[rx.product] = Some(r);
                queue.push_back(rx.product);
            }
        }
    }
    let target = target.ok_or_else(|| {
        Error::WitnessUnavailable(format!(
            "no complex outside the top D-type tier is reachable from {}",
            net.complex_label(start)
        ))
    })?;
    let mut path = Vec::new();
    let mut c = target;
    while let Some(r) = via[c] {
        path.push(r);
        c = net.reactions()[r].source;
    }
    path.reverse();

    // top D-tier is shift invariant, so the first drop is read off directly
    let h = path
        .iter()
        .position(|&r| !base.d.in_top(net.reactions()[r].product))
        .expect("path ends outside the top D-type tier")
        + 1;
    path.truncate(h);
    if h > target_len {
        return Err(Error::WitnessUnavailable(format!(
            "the first tier drop needs {h} reactions, more than the requested {target_len}"
        )));
    }

    let mut z = seq.clone();
    for &r in &path {
        z = z.shift(net.jump(r))?;
    }
    while path.len() < target_len {
        let zn = z.tail_normalized(net);
        let best = (0..net.num_reactions())
            .filter(|&i| !zn.intensity_vanishes(net.source(i)))
            .map(|i| {
                let y = net.source(i);
                (zn.degree(y), sys.kappa()[i] * zn.leading_coefficient(y), i)
            })
            .fold(None::<(Exponent, f64, usize)>, |best, cand| match best {
                Some(b) if (b.0, b.1) >= (cand.0, cand.1) => Some(b),
                _ => Some(cand),
            });
        let (_, _, r) = best.ok_or_else(|| {
            Error::WitnessUnavailable("every intensity vanishes along the extended sequence".into())
        })?;
        path.push(r);
        if path.len() < target_len {
            z = z.shift(net.jump(r))?;
        }
    }
    Ok(path)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftReport {
    /// `E_x[V(X_k)] - V(x)` for the embedded chain.
    pub drift: f64,
    pub k: usize,
    /// Number of positive-probability paths enumerated.
    pub paths: u64,
    /// Probability of hitting an absorbing state within `k` steps; such
    /// branches are frozen there.
    pub absorbed_mass: f64,
}

struct DriftAcc {
    sum: f64,
    paths: u64,
    absorbed: f64,
}

#[allow(clippy::too_many_arguments)]
fn drift_dfs(
    sys: &MassActionSystem,
    origin: &State,
    z: &State,
    h: &mut Vec<i64>,
    prob: f64,
    depth_left: usize,
    bufs: &mut [Vec<f64>],
    acc: &mut DriftAcc,
) {
    if depth_left == 0 {
        acc.sum += prob * lyapunov_increment(origin, h);
        acc.paths += 1;
        return;
    }
    let (buf, rest) = bufs.split_first_mut().expect("one buffer per level");
    sys.fill_rates(z, buf);
    let total: f64 = buf.iter().sum();
    if total == 0.0 {
        acc.sum += prob * lyapunov_increment(origin, h);
        acc.paths += 1;
        acc.absorbed += prob;
        return;
    }
    let net = sys.network();
    for (r, &rate) in buf.iter().enumerate() {
        if rate == 0.0 {
            continue;
        }
        let jump = net.jump(r);
        let next = z.offset(jump).expect("positive rate implies a valid target");
        for (a, b) in h.iter_mut().zip(jump) {
            *a += b;
        }
        drift_dfs(sys, origin, &next, h, prob * rate / total, depth_left - 1, rest, acc);
        for (a, b) in h.iter_mut().zip(jump) {
            *a -= b;
        }
    }
}

/// Exact `E_x[V(X_k)] - V(x)` for the embedded chain, by enumerating all
/// positive-probability reaction sequences of length `k`. First-step
/// branches are evaluated independently and summed in reaction order.
pub fn exact_kstep_drift(sys: &MassActionSystem, x: &State, k: usize) -> Result<DriftReport> {
    exact_kstep_drift_with(sys, x, k, DEFAULT_DRIFT_BUDGET, Exec::default())
}

pub fn exact_kstep_drift_with(
    sys: &MassActionSystem,
    x: &State,
    k: usize,
    budget: u128,
    exec: Exec,
) -> Result<DriftReport> {
    let d = sys.network().dim();
    if x.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: x.dim() });
    }
    if k == 0 {
        return Ok(DriftReport { drift: 0.0, k, paths: 1, absorbed_mass: 0.0 });
    }
    let r = sys.network().num_reactions() as u128;
    let required = (0..k).try_fold(1u128, |acc, _| acc.checked_mul(r)).unwrap_or(u128::MAX);
    if required > budget {
        return Err(Error::BudgetExceeded { required, budget });
    }
    let rates = sys.reaction_rates(x);
    let total: f64 = rates.iter().sum();
    if total == 0.0 {
        return Err(Error::AbsorbingState(x.clone()));
    }
    let net = sys.network();
    let branches = exec.map_range(rates.len(), |r0| {
        let mut acc = DriftAcc { sum: 0.0, paths: 0, absorbed: 0.0 };
        if rates[r0] == 0.0 {
            return acc;
        }
        let mut h = net.jump(r0).to_vec();
        let next = x.offset(&h).expect("positive rate implies a valid target");
        let mut bufs = vec![vec![0.0; rates.len()]; k - 1];
        drift_dfs(sys, x, &next, &mut h, rates[r0] / total, k - 1, &mut bufs, &mut acc);
        acc
    });
    let mut out = DriftReport { drift: 0.0, k, paths: 0, absorbed_mass: 0.0 };
    for b in branches {
        out.drift += b.sum;
        out.paths += b.paths;
        out.absorbed_mass += b.absorbed;
    }
    Ok(out)
}

/// Intensity of `y` at `x`; re-exported here for tier oracles in tests.
pub fn intensity_at(y: &Complex, x: &State) -> f64 {
    intensity_unchecked(y, x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::networks;
    use crate::parse::parse;

    fn names(net: &ReactionNetwork) -> Vec<String> {
        net.species().iter().map(|s| s.name.clone()).collect()
    }

    fn labels(net: &ReactionNetwork, ids: &[ComplexId]) -> Vec<String> {
        let mut v: Vec<String> = ids.iter().map(|&c| net.complex_label(c)).collect();
        v.sort();
        v
    }

    fn n10() -> ParametricSequence {
        ParametricSequence::from_coords(vec![Coordinate::grow(1.0, 1), Coordinate::Const(1), Coordinate::Const(0)])
            .unwrap()
    }

    fn rxn(net: &ReactionNetwork, text: &str) -> ReactionId {
        let (a, b) = text.split_once("->").unwrap();
        let n = names(net);
        net.reaction_index(
            &crate::parse::parse_complex(a, &n).unwrap(),
            &crate::parse::parse_complex(b, &n).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn evaluate_examples() {
        let s = n10();
        assert_eq!(s.evaluate(3).unwrap(), State::from([3, 1, 0]));
        assert_eq!(s.shift(&[0, 1, 0]).unwrap().evaluate(3).unwrap(), State::from([3, 2, 0]));
        assert!(matches!(s.shift(&[0, 0, -1]), Err(Error::InvalidSequence(_))));
        assert!(matches!(s.shift(&[0, -2, 0]), Err(Error::InvalidSequence(_))));
        assert_eq!(s.shift(&[0, 0, 0]).unwrap(), s);
        let grow2 = ParametricSequence::from_coords(vec![Coordinate::grow(2.0, 2)]).unwrap();
        assert_eq!(grow2.evaluate(3).unwrap(), State::from([18]));
    }

    #[test]
    fn no_growth_is_rejected() {
        let err = ParametricSequence::from_coords(vec![Coordinate::Const(1), Coordinate::Const(1)]).unwrap_err();
        assert!(err.to_string().contains("proper tier sequence"));
    }

    #[test]
    fn negative_offset_on_growth_raises_start() {
        let s = ParametricSequence::from_coords(vec![Coordinate::grow(1.0, 1)]).unwrap();
        let t = s.shift(&[-5]).unwrap();
        assert_eq!(t.n0(), 5);
        assert_eq!(t.evaluate(5).unwrap(), State::from([0]));
        assert!(t.evaluate(4).is_err());
    }

    #[test]
    fn parse_sequence_spec() {
        let n = vec!["A".to_string(), "B".to_string(), "C".to_string()];
        let s = ParametricSequence::parse("A=n, B=1, C=0", &n).unwrap();
        assert_eq!(s, n10());
        let s = ParametricSequence::parse("A=2*n^2, B=3, C=n^3/2", &n).unwrap();
        assert_eq!(s.coords()[0], Coordinate::Grow { coef: 2.0, exp: Exponent::from_integer(2) });
        assert_eq!(s.coords()[2], Coordinate::Grow { coef: 1.0, exp: Exponent::new(3, 2) });
        assert_eq!(s.describe(&n), "A=2*n^2, B=3, C=n^3/2");
        assert!(ParametricSequence::parse("A=1,B=1,C=1", &n).is_err());
        assert!(ParametricSequence::parse("A=n,B=1", &n).is_err());
        assert!(ParametricSequence::parse("A=n,B=1,D=0", &n).is_err());
    }

    #[test]
    fn five_cycle_partitions() {
        let sys = networks::five_cycle();
        let net = sys.network();
        let d = d_partition(net, &n10());
        assert_eq!(d.tiers.len(), 2);
        assert_eq!(labels(net, &d.tiers[0]), ["A", "A+B", "A+C"]);
        assert_eq!(labels(net, &d.tiers[1]), ["2B", "C"]);
        let s = s_partition(net, &n10().tail_normalized(net)).unwrap();
        assert_eq!(s.tiers.len(), 1);
        assert_eq!(labels(net, &s.tiers[0]), ["A", "A+B"]);
        assert_eq!(labels(net, &s.infinite_tier), ["2B", "A+C", "C"]);
    }

    #[test]
    fn s_partition_requires_normalization() {
        let net = parse("3 A <-> B ; k=1, 1").unwrap();
        let seq = ParametricSequence::from_coords(vec![Coordinate::grow(1.0, 1), Coordinate::Const(0)]).unwrap();
        assert!(matches!(s_partition(net.network(), &seq), Err(Error::TailNotNormalized { .. })));
        assert!(s_partition(net.network(), &seq.tail_normalized(net.network())).is_ok());
    }

    #[test]
    fn birth_death_tiers() {
        let sys = networks::birth_death(1.0, 1.0);
        let net = sys.network();
        let seq = ParametricSequence::from_coords(vec![Coordinate::grow(1.0, 1)]).unwrap().tail_normalized(net);
        let s = s_partition(net, &seq).unwrap();
        assert_eq!(s.tiers.len(), 2);
        assert_eq!(labels(net, &s.tiers[0]), ["S"]);
        assert_eq!(labels(net, &s.tiers[1]), ["0"]);
        let d = d_partition(net, &seq);
        assert!(d.in_top(net.complex_index(&Complex::new(vec![1])).unwrap()));

        // 2A dominates A
        let net = parse("2 A <-> A ; k=1, 1").unwrap();
        let seq = ParametricSequence::from_coords(vec![Coordinate::grow(1.0, 1)]).unwrap();
        let d = d_partition(net.network(), &seq);
        assert_eq!(labels(net.network(), d.top()), ["2A"]);
    }

    #[test]
    fn single_tier_when_everything_is_bounded_in_those_species() {
        let net = parse("A <-> B ; k=1, 1\nC <-> 0 ; k=1, 1").unwrap();
        let seq = ParametricSequence::from_coords(vec![Coordinate::Const(1), Coordinate::Const(1), Coordinate::grow(1.0, 1)]).unwrap();
        let d = d_partition(net.network(), &seq);
        // A and B share the degree-0 tier with 0
        assert_eq!(labels(net.network(), &d.tiers[1]), ["0", "A", "B"]);
    }

    #[test]
    fn path_membership_examples() {
        let sys = networks::five_cycle();
        let net = sys.network();
        let path = [rxn(net, "A->A+B"), rxn(net, "A+B->A+C"), rxn(net, "A+C->C")];
        let rep = path_tier_membership(net, &n10(), &path).unwrap();
        assert!(rep.in_ts1);
        assert!(rep.in_d);
        assert_eq!(rep.first_drop_index, Some(3));

        let rep = path_tier_membership(net, &n10(), &path[..1]).unwrap();
        assert!(rep.in_ts1);
        assert!(!rep.in_d);
        assert_eq!(rep.first_drop_index, None);

        let rep = path_tier_membership(net, &n10(), &[rxn(net, "A+C->C")]).unwrap();
        assert!(!rep.in_ts1);
    }

    #[test]
    fn probability_limit_examples() {
        let sys = networks::five_cycle();
        let net = sys.network();
        let path = [rxn(net, "A->A+B"), rxn(net, "A+B->A+C")];
        let lim = path_probability_limit(&sys, &n10(), &path).unwrap();
        assert!((lim - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(path_probability_limit(&sys, &n10(), &[rxn(net, "A+C->C")]).unwrap(), 0.0);

        // S -> 0 dominates 0 -> S along (n)
        let bd = networks::birth_death(2.0, 1.0);
        let seq = ParametricSequence::from_coords(vec![Coordinate::grow(1.0, 1)]).unwrap();
        let down = rxn(bd.network(), "S->0");
        assert_eq!(path_probability_limit(&bd, &seq, &[down, down]).unwrap(), 1.0);
    }

    #[test]
    fn pattern_scan_finds_counterexample() {
        let sys = parse("A + B <-> 0 ; k=1, 1").unwrap();
        let rep = hypothesis_check_with(sys.network(), DEFAULT_PATTERN_BUDGET, Exec::Sequential).unwrap();
        let v = rep.violation.expect("violation");
        assert_eq!(v.complex_label, "0");
        // the direct pattern (Grow, Const(0))
        let seq = ParametricSequence::from_coords(vec![Coordinate::grow(1.0, 1), Coordinate::Const(0)]).unwrap();
        let fails = tier_inclusion_failures(sys.network(), &seq).unwrap();
        assert_eq!(labels(sys.network(), &fails), ["0"]);
    }

    #[test]
    fn pattern_scan_clean_on_theorem_networks() {
        for sys in [networks::five_cycle(), networks::three_species()] {
            let rep = hypothesis_check_with(sys.network(), DEFAULT_PATTERN_BUDGET, Exec::default()).unwrap();
            assert!(rep.no_violation_found());
            assert!(!rep.partial);
            assert_eq!(rep.patterns_checked, 125 - 8);
            assert!(rep.distinct_structures >= 2);
        }
    }

    #[test]
    fn pattern_scan_budget_and_dimension_guard() {
        let sys = networks::five_cycle();
        let rep = hypothesis_check_with(sys.network(), 10, Exec::Sequential).unwrap();
        assert_eq!(rep.patterns_checked, 10);
        assert!(rep.partial);
        let names: Vec<String> = (0..13).map(|i| format!("S{i}")).collect();
        let text = format!("species: {}\nS0 -> 0 ; k=1", names.join(", "));
        let big = parse(&text).unwrap();
        assert!(matches!(
            hypothesis_check_with(big.network(), 10, Exec::Sequential),
            Err(Error::TooManySpecies { .. })
        ));
    }

    #[test]
    fn witness_examples() {
        let sys = networks::five_cycle();
        let net = sys.network();
        let path = witness_path(&sys, &n10(), 5).unwrap();
        assert_eq!(path.len(), 5);
        assert_eq!(&path[..3], &[rxn(net, "A->A+B"), rxn(net, "A+B->A+C"), rxn(net, "A+C->C")]);
        let rep = path_tier_membership(net, &n10(), &path).unwrap();
        assert!(rep.in_ts1 && rep.in_d);

        let bd = networks::birth_death(1.0, 1.0);
        let seq = ParametricSequence::from_coords(vec![Coordinate::grow(1.0, 1)]).unwrap();
        let path = witness_path(&bd, &seq, 2).unwrap();
        assert_eq!(path[0], rxn(bd.network(), "S->0"));
        let rep = path_tier_membership(bd.network(), &seq, &path).unwrap();
        assert!(rep.in_ts1 && rep.in_d);

        let iso = networks::isomerization(1.0, 1.0);
        let seq = ParametricSequence::from_coords(vec![Coordinate::grow(1.0, 1), Coordinate::grow(1.0, 1)]).unwrap();
        assert!(matches!(witness_path(&iso, &seq, 2), Err(Error::NoDropComplex)));
    }

    #[test]
    fn drift_birth_death_one_step() {
        let sys = networks::birth_death(1.0, 1.0);
        let f = |t: f64| t * (t.ln() - 1.0) + 1.0;
        let oracle = (1.0 / 6.0) * (f(6.0) - f(5.0)) + (5.0 / 6.0) * (f(4.0) - f(5.0));
        let rep = exact_kstep_drift_with(&sys, &State::from([5]), 1, DEFAULT_DRIFT_BUDGET, Exec::Sequential).unwrap();
        assert!((rep.drift - oracle).abs() < 1e-14);
        assert!((rep.drift - (-0.96778)).abs() < 1e-5);
        assert_eq!(rep.paths, 2);
    }

    #[test]
    fn drift_edge_cases() {
        let sys = networks::five_cycle();
        let x = State::from([3, 1, 0]);
        assert_eq!(exact_kstep_drift_with(&sys, &x, 0, 1, Exec::Sequential).unwrap().drift, 0.0);
        assert!(matches!(
            exact_kstep_drift_with(&sys, &x, 11, DEFAULT_DRIFT_BUDGET, Exec::Sequential),
            Err(Error::BudgetExceeded { .. })
        ));
        assert!(matches!(
            exact_kstep_drift_with(&sys, &State::from([0, 0, 0]), 1, DEFAULT_DRIFT_BUDGET, Exec::Sequential),
            Err(Error::AbsorbingState(_))
        ));
        let one = exact_kstep_drift_with(&sys, &x, 1, DEFAULT_DRIFT_BUDGET, Exec::Sequential).unwrap();
        let expected = 0.5 * (2.0 * std::f64::consts::LN_2 - 1.0);
        assert!((one.drift - expected).abs() < 1e-15);
    }

    #[test]
    fn drift_freezes_absorbed_branches() {
        // A -> 0 from A=1 absorbs after one step
        let sys = parse("A -> 0 ; k=1").unwrap();
        let rep = exact_kstep_drift_with(&sys, &State::from([1]), 3, DEFAULT_DRIFT_BUDGET, Exec::Sequential).unwrap();
        assert_eq!(rep.absorbed_mass, 1.0);
        assert!((rep.drift - 1.0).abs() < 1e-15); // V(0) - V(1) = 1 - 0
    }

    #[test]
    fn drift_parallel_matches_sequential() {
        let sys = networks::three_species();
        let x = State::from([7, 3, 5]);
        let a = exact_kstep_drift_with(&sys, &x, 5, DEFAULT_DRIFT_BUDGET, Exec::Sequential).unwrap();
        let b = exact_kstep_drift_with(&sys, &x, 5, DEFAULT_DRIFT_BUDGET, Exec::Parallel).unwrap();
        assert_eq!(a, b);
    }
}
