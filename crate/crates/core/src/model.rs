//! Reaction networks, mass-action systems and chain states.
//!
//! Networks are immutable once built. Complexes are stored once and referred
//! to by index; reactions carry source/product complex indices plus their
//! precomputed net jump vector `product - source`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

/// Largest accepted copy number for user-supplied states.
///
/// Intensities are products of falling factors in `f64`; beyond this the
/// products of binary complexes stop being exactly representable.
pub const MAX_COUNT: u64 = 100_000_000;

pub type ComplexId = usize;
pub type ReactionId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Species {
    pub index: usize,
    pub name: String,
}

/// A nonnegative integer combination of species, stored as its vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct Complex(Vec<u32>);

impl Complex {
    pub fn new(coeffs: Vec<u32>) -> Self {
        Complex(coeffs)
    }

    pub fn zero(dim: usize) -> Self {
        Complex(vec![0; dim])
    }

    pub fn coeffs(&self) -> &[u32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Total stoichiometry `sum_i y_i`.
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }
}

/// A point of the nonnegative integer lattice: molecule copy numbers.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct State(Vec<u64>);

impl State {
    /// Validated constructor for untrusted input; rejects counts above
    /// [`MAX_COUNT`].
    pub fn new(counts: Vec<u64>) -> Result<Self> {
        if let Some(&c) = counts.iter().find(|&&c| c > MAX_COUNT) {
            return Err(Error::CountTooLarge(c));
        }
        Ok(State(counts))
    }

    pub fn zeros(dim: usize) -> Self {
        State(vec![0; dim])
    }

    pub fn counts(&self) -> &[u64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// `self + h`, or `None` if any coordinate would go negative.
    pub fn offset(&self, h: &[i64]) -> Option<State> {
        debug_assert_eq!(self.0.len(), h.len());
        self.0
            .iter()
            .zip(h)
            .map(|(&x, &d)| x.checked_add_signed(d))
            .collect::<Option<Vec<_>>>()
            .map(State)
    }

    /// Component-wise `self >= y`.
    pub fn dominates(&self, y: &Complex) -> bool {
        self.0.iter().zip(y.coeffs()).all(|(&x, &c)| x >= u64::from(c))
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }
}

/// Unvalidated conversion; use [`State::new`] for untrusted input.
impl From<Vec<u64>> for State {
    fn from(counts: Vec<u64>) -> Self {
        State(counts)
    }
}

impl<const N: usize> From<[u64; N]> for State {
    fn from(counts: [u64; N]) -> Self {
        State(counts.to_vec())
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Reaction {
    pub source: ComplexId,
    pub product: ComplexId,
}

/// The triple (species, complexes, reactions).
///
/// Invariants enforced at construction: species names are unique
/// identifiers, complexes are duplicate-free and each one touches at least
/// one reaction, no reaction is a self-loop and no reaction appears twice.
#[derive(Debug, Clone)]
pub struct ReactionNetwork {
    species: Vec<Species>,
    complexes: Vec<Complex>,
    reactions: Vec<Reaction>,
    jumps: Vec<Vec<i64>>,
}

pub(crate) fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl ReactionNetwork {
    /// Builds a network from species names and `(source, product)` pairs.
    /// Complexes are collected in first-appearance order.
    pub fn new<S: Into<String>>(
        species: impl IntoIterator<Item = S>,
        reactions: impl IntoIterator<Item = (Complex, Complex)>,
    ) -> Result<Self> {
        let species: Vec<Species> = species
            .into_iter()
            .enumerate()
            .map(|(index, name)| Species { index, name: name.into() })
            .collect();
        let mut seen = HashMap::new();
        for s in &species {
            if !is_identifier(&s.name) {
                return Err(Error::InvalidSpeciesName(s.name.clone()));
            }
            if seen.insert(s.name.as_str(), s.index).is_some() {
                return Err(Error::DuplicateSpecies(s.name.clone()));
            }
        }
        let dim = species.len();

        let mut complexes: Vec<Complex> = Vec::new();
        let mut index_of: HashMap<Complex, ComplexId> = HashMap::new();
        let mut intern = |c: Complex| -> Result<ComplexId> {
            if c.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: c.dim() });
            }
            if let Some(&id) = index_of.get(&c) {
                return Ok(id);
            }
            let id = complexes.len();
            index_of.insert(c.clone(), id);
            complexes.push(c);
            Ok(id)
        };

        let mut rxns = Vec::new();
        let mut pairs = HashMap::new();
        for (source, product) in reactions {
            let s = intern(source)?;
            let p = intern(product)?;
            rxns.push(Reaction { source: s, product: p });
            if s == p {
                let label = complex_label(&species, &complexes[s]);
                return Err(Error::SelfLoop(format!("{label} -> {label}")));
            }
            if pairs.insert((s, p), ()).is_some() {
                return Err(Error::DuplicateReaction(format!(
                    "{} -> {}",
                    complex_label(&species, &complexes[s]),
                    complex_label(&species, &complexes[p])
                )));
            }
        }

        let jumps = rxns
            .iter()
            .map(|r| {
                complexes[r.product]
                    .coeffs()
                    .iter()
                    .zip(complexes[r.source].coeffs())
                    .map(|(&p, &s)| i64::from(p) - i64::from(s))
                    .collect()
            })
            .collect();

        Ok(ReactionNetwork { species, complexes, reactions: rxns, jumps })
    }

    pub fn dim(&self) -> usize {
        self.species.len()
    }

    pub fn species(&self) -> &[Species] {
        &self.species
    }

    pub fn species_index(&self, name: &str) -> Option<usize> {
        self.species.iter().position(|s| s.name == name)
    }

    pub fn complexes(&self) -> &[Complex] {
        &self.complexes
    }

    pub fn complex(&self, id: ComplexId) -> &Complex {
        &self.complexes[id]
    }

    pub fn complex_index(&self, c: &Complex) -> Option<ComplexId> {
        self.complexes.iter().position(|x| x == c)
    }

    pub fn reactions(&self) -> &[Reaction] {
        &self.reactions
    }

    pub fn num_reactions(&self) -> usize {
        self.reactions.len()
    }

    pub fn reaction(&self, id: ReactionId) -> Result<&Reaction> {
        self.reactions.get(id).ok_or(Error::UnknownReaction(id))
    }

    pub fn reaction_index(&self, source: &Complex, product: &Complex) -> Option<ReactionId> {
        let s = self.complex_index(source)?;
        let p = self.complex_index(product)?;
        self.reactions.iter().position(|r| r.source == s && r.product == p)
    }

    /// Net jump `product - source` of a reaction.
    pub fn jump(&self, id: ReactionId) -> &[i64] {
        &self.jumps[id]
    }

    pub fn source(&self, id: ReactionId) -> &Complex {
        &self.complexes[self.reactions[id].source]
    }

    pub fn product(&self, id: ReactionId) -> &Complex {
        &self.complexes[self.reactions[id].product]
    }

    /// Largest single stoichiometric coefficient over all complexes.
    pub fn max_coefficient(&self) -> u32 {
        self.complexes
            .iter()
            .flat_map(|c| c.coeffs().iter().copied())
            .max()
            .unwrap_or(0)
    }

    /// Compact label such as `A+2B`, or `0` for the zero complex.
    pub fn complex_label(&self, id: ComplexId) -> String {
        complex_label(&self.species, &self.complexes[id])
    }

    pub fn reaction_label(&self, id: ReactionId) -> String {
        let r = &self.reactions[id];
        format!("{}->{}", self.complex_label(r.source), self.complex_label(r.product))
    }
}

pub(crate) fn complex_label(species: &[Species], c: &Complex) -> String {
    if c.is_zero() {
        return "0".to_string();
    }
    let mut parts = Vec::new();
    for (s, &k) in species.iter().zip(c.coeffs()) {
        match k {
            0 => {}
            1 => parts.push(s.name.clone()),
            k => parts.push(format!("{k}{}", s.name)),
        }
    }
    parts.join("+")
}

/// A reaction network with one positive rate constant per reaction.
#[derive(Debug, Clone)]
pub struct MassActionSystem {
    network: ReactionNetwork,
    kappa: Vec<f64>,
}

impl MassActionSystem {
    /// `kappa[i]` is the rate constant of reaction `i`.
    pub fn new(network: ReactionNetwork, kappa: Vec<f64>) -> Result<Self> {
        if kappa.len() != network.num_reactions() {
            return Err(Error::RateCountMismatch {
                expected: network.num_reactions(),
                found: kappa.len(),
            });
        }
        if let Some((reaction, &value)) =
            kappa.iter().enumerate().find(|(_, &k)| !(k.is_finite() && k > 0.0))
        {
            return Err(Error::InvalidRate { reaction, value });
        }
        Ok(MassActionSystem { network, kappa })
    }

    /// Same network with every rate constant equal to one.
    pub fn with_unit_rates(network: ReactionNetwork) -> Self {
        let kappa = vec![1.0; network.num_reactions()];
        MassActionSystem { network, kappa }
    }

    pub fn network(&self) -> &ReactionNetwork {
        &self.network
    }

    pub fn kappa(&self) -> &[f64] {
        &self.kappa
    }

    pub fn rate_constant(&self, id: ReactionId) -> Result<f64> {
        self.kappa.get(id).copied().ok_or(Error::UnknownReaction(id))
    }

    fn reaction_map(&self) -> BTreeMap<(&Complex, &Complex), u64> {
        (0..self.network.num_reactions())
            .map(|i| ((self.network.source(i), self.network.product(i)), self.kappa[i].to_bits()))
            .collect()
    }
}

/// Two systems are equal when they have the same ordered species list and
/// the same set of reactions with identical rate constants. Declaration
/// order of reactions and complexes is irrelevant.
impl PartialEq for MassActionSystem {
    fn eq(&self, other: &Self) -> bool {
        let names = |s: &Self| s.network.species.iter().map(|x| x.name.clone()).collect::<Vec<_>>();
        names(self) == names(other)
            && self.network.num_reactions() == other.network.num_reactions()
            && self.reaction_map() == other.reaction_map()
    }
}
