mod common;

use crn_core::kinetics::{intensity, lyapunov, lyapunov_increment};
use crn_core::par::Exec;
use crn_core::parse::{parse, serialize};
use crn_core::sim::{drift_estimate_mc_with, ssa_simulate, truncated_stationary, CensoredGenerator, StopRule};
use crn_core::structure::{is_weakly_reversible, linkage_classes, reachable_states, theorem_verdict};
use crn_core::tiers::{
    d_partition, exact_kstep_drift_with, hypothesis_check_with, pattern_family, s_partition, Coordinate,
    ParametricSequence, DEFAULT_DRIFT_BUDGET,
};
use crn_core::{Complex, MassActionSystem, ReactionNetwork, State};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_state<R: Rng>(rng: &mut R, d: usize, max: u64) -> State {
    State::from((0..d).map(|_| rng.random_range(0..=max)).collect::<Vec<_>>())
}

fn jump_between(a: &State, b: &State) -> Vec<i64> {
    b.counts().iter().zip(a.counts()).map(|(x, y)| *x as i64 - *y as i64).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn step_distribution_is_normalized(seed in any::<u64>()) {
        let mut r = rng(seed);
        let sys = common::random_system(&mut r);
        let x = random_state(&mut r, sys.network().dim(), 8);
        if !sys.is_absorbing(&x) {
            let total: f64 = sys.embedded_step_distribution(&x).unwrap().values().sum();
            prop_assert!((total - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn generator_matches_transition_sum(seed in any::<u64>()) {
        let mut r = rng(seed);
        let sys = common::random_system(&mut r);
        let x = random_state(&mut r, sys.network().dim(), 50);
        let direct: f64 = sys
            .transition_rates(&x)
            .iter()
            .map(|(h, q)| q * (lyapunov(&x.offset(h).unwrap()) - lyapunov(&x)))
            .sum();
        let gen = sys.generator_applied(&x);
        let scale = 1.0 + sys.total_rate(&x) * (1.0 + lyapunov(&x));
        prop_assert!((gen - direct).abs() <= 1e-12 * scale, "{gen} vs {direct}");
    }

    #[test]
    fn path_probability_chain_rule(seed in any::<u64>(), split in 0usize..4) {
        let mut r = rng(seed);
        let sys = common::random_system(&mut r);
        let net = sys.network();
        let x = random_state(&mut r, net.dim(), 6);
        let path: Vec<usize> = (0..4).map(|_| r.random_range(0..net.num_reactions())).collect();
        let (a, b) = path.split_at(split);
        let pa = sys.path_probability(&x, a).unwrap();
        prop_assume!(pa > 0.0);
        let mid = a.iter().fold(x.clone(), |z, &i| z.offset(net.jump(i)).unwrap());
        let pb = sys.path_probability(&mid, b).unwrap();
        let whole = sys.path_probability(&x, &path).unwrap();
        prop_assert!((whole - pa * pb).abs() <= 1e-15);
    }

    #[test]
    fn intensity_vanishes_exactly_when_not_dominated(
        y in prop::collection::vec(0u32..4, 3),
        x in prop::collection::vec(0u64..5, 3),
    ) {
        let (y, x) = (Complex::new(y), State::from(x));
        prop_assert_eq!(intensity(&y, &x).unwrap() == 0.0, !x.dominates(&y));
    }

    #[test]
    fn lyapunov_nonnegative_and_zero_at_ones(x in prop::collection::vec(0u64..1000, 1..5)) {
        let ones = x.iter().all(|&v| v == 1);
        let v = lyapunov(&State::from(x));
        prop_assert!(v >= 0.0);
        prop_assert_eq!(v == 0.0, ones);
    }

    #[test]
    fn stable_increment_matches_difference(x in prop::collection::vec(0u64..10_000, 1..4), seed in any::<u64>()) {
        let mut r = rng(seed);
        let x = State::from(x);
        let h: Vec<i64> = x.counts().iter().map(|&c| r.random_range(-(c.min(3) as i64)..=3)).collect();
        let y = x.offset(&h).unwrap();
        let inc = lyapunov_increment(&x, &h);
        let direct = lyapunov(&y) - lyapunov(&x);
        prop_assert!((inc - direct).abs() <= 1e-9 * (1.0 + lyapunov(&x)));
    }

    #[test]
    fn serialize_parse_roundtrip(seed in any::<u64>()) {
        let mut r = rng(seed);
        let sys = common::random_system(&mut r);
        let text = serialize(&sys);
        let back = parse(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(back, sys);
    }

    #[test]
    fn parse_never_panics(s in "[ABC02 +<\\->;k=,.:#\\nspecies1e]{0,60}") {
        if let Err(e) = parse(&s) {
            prop_assert!(e.span.line >= 1 && e.span.column >= 1);
        }
    }

    #[test]
    fn weak_reversibility_matches_closure_oracle(seed in any::<u64>()) {
        let mut r = rng(seed);
        let sys = common::random_system(&mut r);
        let net = sys.network();
        let n = net.complexes().len();
        prop_assume!(n <= 8);
        let mut reach = vec![vec![false; n]; n];
        for (i, row) in reach.iter_mut().enumerate() {
            row[i] = true;
        }
        for rx in net.reactions() {
            reach[rx.source][rx.product] = true;
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if reach[i][k] && reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
        // complexes in the same class must reach each other
        let oracle = linkage_classes(net).classes.iter().all(|c| {
            c.complexes.iter().all(|&a| c.complexes.iter().all(|&b| reach[a][b]))
        });
        // and the classes themselves are undirected components
        let linked = |a: usize, b: usize| reach[a][b] || reach[b][a];
        let mut comp: Vec<usize> = (0..n).collect();
        for _ in 0..n {
            for a in 0..n {
                for b in 0..n {
                    if linked(a, b) {
                        let m = comp[a].min(comp[b]);
                        comp[a] = m;
                        comp[b] = m;
                    }
                }
            }
        }
        let mut distinct = comp.clone();
        distinct.sort();
        distinct.dedup();
        prop_assert_eq!(distinct.len(), linkage_classes(net).len());
        prop_assert_eq!(is_weakly_reversible(net), oracle);
    }

    #[test]
    fn weakly_reversible_min_rate_positive(seed in any::<u64>()) {
        let mut r = rng(seed);
        let d = r.random_range(1..=4);
        let sys = common::random_theorem_system(&mut r, d);
        let x0 = random_state(&mut r, d, 3);
        prop_assume!(!sys.is_absorbing(&x0));
        let rep = reachable_states(&sys, &x0, 2_000);
        prop_assert!(rep.absorbing.is_empty());
        prop_assert!(rep.min_total_rate.unwrap() > 0.0);
    }

    #[test]
    fn verdict_invariant_under_relabeling_and_scaling(seed in any::<u64>()) {
        let mut r = rng(seed);
        let sys = if r.random_bool(0.5) {
            let d = r.random_range(1..=4);
            common::random_theorem_system(&mut r, d)
        } else {
            common::random_system(&mut r)
        };
        let net = sys.network();
        let d = net.dim();
        let mut perm: Vec<usize> = (0..d).collect();
        perm.shuffle(&mut r);
        let names: Vec<String> = perm.iter().map(|&i| net.species()[i].name.clone()).collect();
        let permute = |c: &Complex| Complex::new(perm.iter().map(|&i| c.coeffs()[i]).collect());
        let mut pairs: Vec<(Complex, Complex)> =
            (0..net.num_reactions()).map(|i| (permute(net.source(i)), permute(net.product(i)))).collect();
        pairs.shuffle(&mut r);
        let scale = r.random_range(0.01..100.0);
        let kappa: Vec<f64> = sys.kappa().iter().map(|k| k * scale).collect();
        let other = MassActionSystem::new(ReactionNetwork::new(names, pairs).unwrap(), kappa).unwrap();
        let (a, b) = (theorem_verdict(net), theorem_verdict(other.network()));
        prop_assert_eq!(a.verdict, b.verdict);
        prop_assert_eq!(a.reasons, b.reasons);
    }

    #[test]
    fn d_partition_shift_invariant(seed in any::<u64>()) {
        let mut r = rng(seed);
        let sys = common::random_system(&mut r);
        let net = sys.network();
        let seq = common::random_sequence(&mut r, net.dim());
        let w: Vec<i64> = seq.coords().iter().map(|c| match c {
            Coordinate::Const(v) => r.random_range(-(*v as i64)..=4),
            Coordinate::Grow { .. } => r.random_range(-4..=4),
        }).collect();
        prop_assert_eq!(d_partition(net, &seq.shift(&w).unwrap()), d_partition(net, &seq));
    }

    #[test]
    fn both_partitions_exist_after_normalization(seed in any::<u64>()) {
        let mut r = rng(seed);
        let sys = common::random_system(&mut r);
        let net = sys.network();
        let seq = common::random_sequence(&mut r, net.dim()).tail_normalized(net);
        prop_assert!(seq.is_tail_normalized(net));
        let s = s_partition(net, &seq).unwrap();
        let d = d_partition(net, &seq);
        let count = s.tiers.iter().map(Vec::len).sum::<usize>() + s.infinite_tier.len();
        prop_assert_eq!(count, net.complexes().len());
        prop_assert_eq!(d.tiers.iter().map(Vec::len).sum::<usize>(), net.complexes().len());
    }

    #[test]
    fn product_of_top_d_tier_is_top_s_tier_after_jump(seed in any::<u64>()) {
        let mut r = rng(seed);
        let sys = common::random_system(&mut r);
        let net = sys.network();
        let seq = common::random_sequence(&mut r, net.dim()).tail_normalized(net);
        let d = d_partition(net, &seq);
        let s = s_partition(net, &seq).unwrap();
        for (i, rx) in net.reactions().iter().enumerate() {
            if s.infinite_tier.contains(&rx.source) || !d.in_top(rx.product) {
                continue;
            }
            let shifted = seq.shift(net.jump(i)).unwrap().tail_normalized(net);
            let s2 = s_partition(net, &shifted).unwrap();
            prop_assert!(s2.in_top(rx.product), "reaction {}", net.reaction_label(i));
        }
    }

    #[test]
    fn increment_bounded_by_log_monomial(seed in any::<u64>()) {
        let mut r = rng(seed);
        let d = r.random_range(1..=3);
        let seq = common::random_sequence(&mut r, d);
        let eta: Vec<i64> = seq.coords().iter().map(|c| match c {
            Coordinate::Const(v) => r.random_range(-(*v as i64)..=3),
            Coordinate::Grow { .. } => r.random_range(-3..=3),
        }).collect();
        let seq = seq.shift(&vec![0; d]).unwrap();
        // coordinates growing: at most eta^2 + 2|eta| once x >= 2|eta| + 1
        let f = |t: f64| if t == 0.0 { 1.0 } else { t * (t.ln() - 1.0) + 1.0 };
        let x0 = seq.evaluate(seq.n0()).unwrap();
        let mut bound = 0.0;
        for (i, c) in seq.coords().iter().enumerate() {
            let e = eta[i] as f64;
            match c {
                Coordinate::Const(_) => {
                    let x = x0.counts()[i] as f64;
                    bound += f(x + e) - f(x) - e * x.max(1.0).ln();
                }
                Coordinate::Grow { .. } => bound += e * e + 2.0 * e.abs(),
            }
        }
        let mut n = seq.n0();
        while n <= 1_000_000 {
            let x = seq.evaluate(n).unwrap();
            let grown = seq.coords().iter().enumerate().all(|(i, c)| {
                !c.is_grow() || x.counts()[i] as i64 > 2 * eta[i].abs()
            });
            if grown {
                let log_mono: f64 = x.counts().iter().zip(&eta).map(|(&c, &e)| e as f64 * (c.max(1) as f64).ln()).sum();
                let g = lyapunov_increment(&x, &eta) - log_mono;
                prop_assert!(g <= bound + 1e-9, "n={n}: {g} > {bound}");
            }
            n = (n * 3).max(n + 1);
        }
    }

    #[test]
    fn weighted_increment_does_not_grow(seed in any::<u64>()) {
        let mut r = rng(seed);
        let d = r.random_range(1..=3);
        let sys = common::random_theorem_system(&mut r, d);
        let net = sys.network();
        let patterns: Vec<_> = pattern_family(d).collect();
        let (_, seq) = patterns[r.random_range(0..patterns.len())].clone();
        let seq = seq.tail_normalized(net);
        let path: Vec<usize> = (0..r.random_range(1..=3)).map(|_| r.random_range(0..net.num_reactions())).collect();
        let total: Vec<i64> = path.iter().fold(vec![0; d], |mut acc, &i| {
            acc.iter_mut().zip(net.jump(i)).for_each(|(a, b)| *a += b);
            acc
        });
        let h = |n: u64| -> f64 {
            let x = seq.evaluate(n).unwrap();
            let p = sys.path_probability(&x, &path).unwrap();
            if p == 0.0 { 0.0 } else { p * lyapunov_increment(&x, &total) }
        };
        let (a, b) = (h(10_000), h(1_000_000));
        prop_assert!(b - a <= 0.1, "{a} -> {b}");
    }

    #[test]
    fn one_step_drift_is_step_distribution_sum(seed in any::<u64>()) {
        let mut r = rng(seed);
        let sys = common::random_system(&mut r);
        let x = random_state(&mut r, sys.network().dim(), 20);
        prop_assume!(!sys.is_absorbing(&x));
        let oracle: f64 = sys
            .embedded_step_distribution(&x)
            .unwrap()
            .iter()
            .map(|(y, p)| p * lyapunov_increment(&x, &jump_between(&x, y)))
            .sum();
        let exact = exact_kstep_drift_with(&sys, &x, 1, DEFAULT_DRIFT_BUDGET, Exec::Sequential).unwrap().drift;
        prop_assert!((exact - oracle).abs() <= 1e-12 * (1.0 + oracle.abs()));
    }

    #[test]
    fn kstep_drift_total_probability(seed in any::<u64>(), k in 1usize..4) {
        let mut r = rng(seed);
        let sys = common::random_system(&mut r);
        let x = random_state(&mut r, sys.network().dim(), 10);
        prop_assume!(!sys.is_absorbing(&x));
        let a = exact_kstep_drift_with(&sys, &x, k, DEFAULT_DRIFT_BUDGET, Exec::Sequential).unwrap();
        let b = exact_kstep_drift_with(&sys, &x, k, DEFAULT_DRIFT_BUDGET, Exec::Parallel).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(a.absorbed_mass >= 0.0 && a.absorbed_mass <= 1.0 + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn theorem_networks_have_no_scan_violation(seed in any::<u64>()) {
        let mut r = rng(seed);
        let d = r.random_range(1..=4);
        let sys = common::random_theorem_system(&mut r, d);
        let a = hypothesis_check_with(sys.network(), 10_000, Exec::Sequential).unwrap();
        let b = hypothesis_check_with(sys.network(), 10_000, Exec::Parallel).unwrap();
        prop_assert!(a.violation.is_none());
        prop_assert_eq!(a, b);
    }

    /// A theorem network containing the zero complex has no nonnegative
    /// conservation law, so along every pattern some reaction crosses
    /// D-tiers. In general, when none does, the growth weights are
    /// conserved by every reaction.
    #[test]
    fn some_reaction_crosses_d_tiers(seed in any::<u64>()) {
        let mut r = rng(seed);
        let d = r.random_range(1..=4);
        let sys = common::random_theorem_system(&mut r, d);
        let net = sys.network();
        let has_zero = net.complex_index(&Complex::zero(d)).is_some();
        for (_, seq) in pattern_family(d) {
            let dp = d_partition(net, &seq);
            let crosses = net.reactions().iter().any(|rx| dp.tier_of(rx.source) != dp.tier_of(rx.product));
            if has_zero {
                prop_assert!(crosses, "{}", seq.describe(&common::names(d)));
            } else if !crosses {
                for i in 0..net.num_reactions() {
                    prop_assert_eq!(seq.degree(net.source(i)), seq.degree(net.product(i)));
                }
            }
        }
    }

    #[test]
    fn trajectories_are_deterministic_and_conserve(seed in any::<u64>(), which in 0usize..3) {
        let (text, invariants): (&str, Vec<Vec<i64>>) = match which {
            0 => ("A <-> B ; k=1, 2", vec![vec![1, 1]]),
            1 => ("A + B <-> C ; k=0.5, 1", vec![vec![1, 0, 1], vec![0, 1, 1]]),
            _ => ("2 A <-> B ; k=0.1, 1", vec![vec![1, 2]]),
        };
        let sys = parse(text).unwrap();
        let d = sys.network().dim();
        let mut r = rng(seed);
        let x0 = random_state(&mut r, d, 12);
        let a = ssa_simulate(&sys, &x0, StopRule::MaxJumps(300), seed).unwrap();
        let b = ssa_simulate(&sys, &x0, StopRule::MaxJumps(300), seed).unwrap();
        prop_assert_eq!(&a, &b);
        for c in &invariants {
            let dot = |x: &State| x.counts().iter().zip(c).map(|(&v, &w)| v as i64 * w).sum::<i64>();
            prop_assert!(a.states.iter().all(|x| dot(x) == dot(&x0)));
        }
    }

    #[test]
    fn censored_balance_residual(seed in any::<u64>()) {
        let mut r = rng(seed);
        let sys = common::random_system(&mut r);
        let d = sys.network().dim();
        let hi = r.random_range(1..=6u64);
        let mut region = vec![State::zeros(d)];
        while region.len() < (hi as usize + 1).pow(d as u32).min(200) {
            let x = random_state(&mut r, d, hi);
            if !region.contains(&x) {
                region.push(x);
            }
        }
        if let Ok(est) = truncated_stationary(&sys, &region) {
            let gen = CensoredGenerator::new(&sys, &region).unwrap();
            let pi: Vec<f64> = gen.states.iter().map(|s| est.probability(s)).collect();
            prop_assert!(gen.residual(&pi) <= 1e-10);
            let total: f64 = est.distribution.iter().map(|e| e.1).sum();
            prop_assert!((total - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn mc_drift_modes_agree(seed in any::<u64>()) {
        let sys = crn_core::networks::five_cycle();
        let x = State::from([20, 3, 1]);
        let a = drift_estimate_mc_with(&sys, &x, 3, 200, seed, Exec::Sequential).unwrap();
        let b = drift_estimate_mc_with(&sys, &x, 3, 200, seed, Exec::Parallel).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn sequence_coordinate_constructors() {
    let s = ParametricSequence::from_coords(vec![Coordinate::grow(2.0, 1)]).unwrap();
    assert_eq!(s.evaluate(5).unwrap(), State::from([10]));
}
