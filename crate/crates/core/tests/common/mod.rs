#![allow(dead_code)]

use std::collections::BTreeSet;

use crn_core::tiers::{Coordinate, Exponent, ParametricSequence};
use crn_core::{Complex, MassActionSystem, ReactionNetwork};
use rand::seq::SliceRandom;
use rand::Rng;

pub const NAMES: [&str; 6] = ["A", "B", "C", "D", "E", "F"];

pub fn names(d: usize) -> Vec<String> {
    NAMES[..d].iter().map(|s| s.to_string()).collect()
}

fn unit(d: usize, i: usize, k: u32) -> Complex {
    let mut v = vec![0; d];
    v[i] = k;
    Complex::new(v)
}

fn random_binary_complex<R: Rng>(rng: &mut R, d: usize) -> Complex {
    let mut v = vec![0; d];
    match rng.random_range(0..4) {
        0 => {}
        1 => v[rng.random_range(0..d)] = 1,
        2 => v[rng.random_range(0..d)] = 2,
        _ => {
            let i = rng.random_range(0..d);
            let j = rng.random_range(0..d);
            v[i] += 1;
            v[j] += 1;
        }
    }
    Complex::new(v)
}

/// Weakly reversible, single linkage class, binary, and each species has
/// `S` or `2S` among the complexes: a directed cycle through all complexes
/// plus random chords.
pub fn random_theorem_system<R: Rng>(rng: &mut R, d: usize) -> MassActionSystem {
    let mut set = BTreeSet::new();
    for i in 0..d {
        set.insert(unit(d, i, if rng.random_bool(0.5) { 1 } else { 2 }));
    }
    for _ in 0..rng.random_range(0..=3) {
        set.insert(random_binary_complex(rng, d));
    }
    if set.len() < 2 {
        set.insert(Complex::zero(d));
    }
    let mut cs: Vec<Complex> = set.into_iter().collect();
    cs.shuffle(rng);
    let m = cs.len();
    let mut edges: BTreeSet<(usize, usize)> = (0..m).map(|i| (i, (i + 1) % m)).collect();
    for _ in 0..rng.random_range(0..=3) {
        let (a, b) = (rng.random_range(0..m), rng.random_range(0..m));
        if a != b {
            edges.insert((a, b));
        }
    }
    let mut pairs: Vec<(Complex, Complex)> = edges.into_iter().map(|(a, b)| (cs[a].clone(), cs[b].clone())).collect();
    pairs.shuffle(rng);
    let kappa = (0..pairs.len()).map(|_| rng.random_range(0.5..3.0)).collect();
    let net = ReactionNetwork::new(names(d), pairs).expect("valid network");
    MassActionSystem::new(net, kappa).expect("valid rates")
}

/// Any network with up to 3 species, coefficients up to 3 and 1..=6
/// reactions.
pub fn random_system<R: Rng>(rng: &mut R) -> MassActionSystem {
    let d = rng.random_range(1..=3);
    let mut pairs = BTreeSet::new();
    let target = rng.random_range(1..=6);
    while pairs.len() < target {
        let a = Complex::new((0..d).map(|_| rng.random_range(0..=3)).collect());
        let b = Complex::new((0..d).map(|_| rng.random_range(0..=3)).collect());
        if a != b {
            pairs.insert((a, b));
        }
    }
    let pairs: Vec<_> = pairs.into_iter().collect();
    let kappa = (0..pairs.len()).map(|_| rng.random_range(0.1..5.0)).collect();
    MassActionSystem::new(ReactionNetwork::new(names(d), pairs).unwrap(), kappa).unwrap()
}

pub fn random_sequence<R: Rng>(rng: &mut R, d: usize) -> ParametricSequence {
    loop {
        let coords: Vec<Coordinate> = (0..d)
            .map(|_| {
                if rng.random_bool(0.5) {
                    Coordinate::Const(rng.random_range(0..5))
                } else {
                    Coordinate::Grow {
                        coef: rng.random_range(1..4) as f64 * 0.5,
                        exp: Exponent::new(rng.random_range(1..7), rng.random_range(1..4)),
                    }
                }
            })
            .collect();
        if let Ok(s) = ParametricSequence::from_coords(coords) {
            return s;
        }
    }
}
