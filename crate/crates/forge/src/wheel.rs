//! Wheel amplifiers: a Hamiltonian cycle on `7d` vertices plus a uniform
//! random perfect matching on the vertices whose number is not a multiple
//! of 7. Contacts are the multiples of 7, checkers the rest.
//!
//! The amplifier condition asks that every non-empty proper subset U of the
//! vertices satisfies `|E(U, V\U)| >= min(|U ∩ X|, |(V\U) ∩ X|)` where X is
//! the contact set. Small wheels are checked exhaustively; larger ones by
//! randomized subset sampling with an explicitly flagged verdict.

use crate::rng::SplitMix64;
use serde::{Deserialize, Serialize};

/// Wheel vertices are numbered `1..=7d` as in the construction; edges are
/// stored on those 1-based numbers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WheelAmplifier {
    /// Total number of vertices, always `7 * contacts`.
    pub size: usize,
    pub cycle_edges: Vec<(usize, usize)>,
    pub matching_edges: Vec<(usize, usize)>,
    /// The multiples of 7, in increasing order.
    pub contacts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum AmplifierVerdict {
    /// Exhaustively verified over every non-empty proper subset.
    Holds,
    /// A witness subset violating the condition.
    Violated { witness: Vec<usize> },
    /// Too large for exhaustive checking; the stated number of random
    /// subsets were tried without finding a violation.
    SampledHolds { trials: usize },
}

impl AmplifierVerdict {
    pub fn holds(&self) -> bool {
        !matches!(self, AmplifierVerdict::Violated { .. })
    }
}

impl WheelAmplifier {
    pub fn num_contacts(&self) -> usize {
        self.contacts.len()
    }

    pub fn is_contact(&self, v: usize) -> bool {
        v.is_multiple_of(7)
    }

    /// Adjacency over cycle plus matching edges, 1-based.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.cycle_edges
            .iter()
            .chain(self.matching_edges.iter())
            .copied()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges()
            .filter(|&(a, b)| a == v || b == v)
            .count()
    }

    /// The matching partner of a checker vertex.
    pub fn matching_partner(&self, v: usize) -> Option<usize> {
        self.matching_edges.iter().find_map(|&(a, b)| {
            if a == v {
                Some(b)
            } else if b == v {
                Some(a)
            } else {
                None
            }
        })
    }
}

/// Builds a wheel with `d` contacts on `7d` vertices: the cycle
/// `1-2-...-7d-1` plus a uniform random perfect matching of the `6d`
/// non-multiples of 7. This is the raw draw; no amplifier check is applied.
pub fn build_wheel(d: usize, rng: &mut SplitMix64) -> WheelAmplifier {
    assert!(d >= 1, "wheel needs at least one contact");
    let n = 7 * d;
    let cycle_edges: Vec<(usize, usize)> = (1..=n)
        .map(|i| (i, if i == n { 1 } else { i + 1 }))
        .collect();
    let contacts: Vec<usize> = (1..=d).map(|i| 7 * i).collect();

    // Uniform perfect matching: repeatedly match the smallest unmatched
    // checker with a uniformly random other unmatched checker.
    let mut pool: Vec<usize> = (1..=n).filter(|v| v % 7 != 0).collect();
    let mut matching_edges = Vec::with_capacity(pool.len() / 2);
    while !pool.is_empty() {
        let a = pool.remove(0);
        let idx = rng.below(pool.len());
        let b = pool.remove(idx);
        matching_edges.push((a.min(b), a.max(b)));
    }
    matching_edges.sort_unstable();

    WheelAmplifier {
        size: n,
        cycle_edges,
        matching_edges,
        contacts,
    }
}

/// Redraws the matching until the amplifier condition holds, up to
/// `max_retries` attempts. Returns the wheel and the number of draws used.
pub fn build_wheel_checked(
    d: usize,
    rng: &mut SplitMix64,
    max_retries: usize,
    exhaustive_limit: usize,
    sample_trials: usize,
) -> (WheelAmplifier, usize) {
    let mut draws = 0;
    loop {
        draws += 1;
        let w = build_wheel(d, rng);
        let verdict = check_amplifier(&w, exhaustive_limit, sample_trials, rng.next_u64());
        if verdict.holds() || draws > max_retries {
            return (w, draws);
        }
    }
}

fn cut_and_contacts(w: &WheelAmplifier, in_set: &[bool]) -> (usize, usize, usize) {
    let mut cut = 0;
    for (a, b) in w.edges() {
        if in_set[a - 1] != in_set[b - 1] {
            cut += 1;
        }
    }
    let mut inside = 0;
    let mut outside = 0;
    for &c in &w.contacts {
        if in_set[c - 1] {
            inside += 1;
        } else {
            outside += 1;
        }
    }
    (cut, inside, outside)
}

fn subset_ok(w: &WheelAmplifier, in_set: &[bool]) -> bool {
    let (cut, inside, outside) = cut_and_contacts(w, in_set);
    cut >= inside.min(outside)
}

/// Verifies the amplifier condition. Wheels with at most `exhaustive_limit`
/// vertices are checked over all `2^n - 2` non-empty proper subsets; larger
/// wheels are sampled (`sample_trials` random subsets) and the verdict is
/// flagged as sampled.
pub fn check_amplifier(
    w: &WheelAmplifier,
    exhaustive_limit: usize,
    sample_trials: usize,
    sample_seed: u64,
) -> AmplifierVerdict {
    let n = w.size;
    if n <= exhaustive_limit {
        let mut in_set = vec![false; n];
        for mask in 1..((1u64 << n) - 1) {
            for (i, flag) in in_set.iter_mut().enumerate() {
                *flag = mask & (1 << i) != 0;
            }
            if !subset_ok(w, &in_set) {
                let witness = (1..=n).filter(|&v| in_set[v - 1]).collect();
                return AmplifierVerdict::Violated { witness };
            }
        }
        AmplifierVerdict::Holds
    } else {
        let mut rng = SplitMix64::new(sample_seed);
        let mut in_set = vec![false; n];
        for _ in 0..sample_trials {
            loop {
                let mut any = false;
                let mut all = true;
                for flag in in_set.iter_mut() {
                    *flag = rng.next_u64() & 1 == 1;
                    any |= *flag;
                    all &= *flag;
                }
                if any && !all {
                    break;
                }
            }
            if !subset_ok(w, &in_set) {
                let witness = (1..=n).filter(|&v| in_set[v - 1]).collect();
                return AmplifierVerdict::Violated { witness };
            }
        }
        AmplifierVerdict::SampledHolds {
            trials: sample_trials,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    #[test]
    fn d1_wheel_shape() {
        let mut rng = SplitMix64::new(1);
        let w = build_wheel(1, &mut rng);
        assert_eq!(w.size, 7);
        assert_eq!(w.contacts, vec![7]);
        assert_eq!(w.matching_edges.len(), 3);
        let covered: Vec<usize> = w
            .matching_edges
            .iter()
            .flat_map(|&(a, b)| [a, b])
            .collect();
        let mut sorted = covered.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, vec![1, 2, 3, 4, 5, 6]);
    }

    #[test]
    fn d2_wheel_shape() {
        let mut rng = SplitMix64::new(2);
        let w = build_wheel(2, &mut rng);
        assert_eq!(w.size, 14);
        assert_eq!(w.contacts, vec![7, 14]);
        assert_eq!(w.matching_edges.len(), 6);
    }

    #[test]
    fn degree_invariant() {
        // Contacts have degree 2, checkers degree 3 in C(W) ∪ M(W).
        let mut rng = SplitMix64::new(3);
        for d in 1..=3 {
            let w = build_wheel(d, &mut rng);
            for v in 1..=w.size {
                let expect = if w.is_contact(v) { 2 } else { 3 };
                assert_eq!(w.degree(v), expect, "vertex {v} of d={d} wheel");
                if w.is_contact(v) {
                    assert_eq!(w.matching_partner(v), None);
                } else {
                    let p = w.matching_partner(v).unwrap();
                    assert_eq!(w.matching_partner(p), Some(v));
                }
            }
        }
    }

    #[test]
    fn matching_distribution_uniform() {
        // d=1: the matching is one of the 15 perfect matchings of 6
        // elements, uniformly. Chi-square style sanity over 15000 draws.
        let mut rng = SplitMix64::new(99);
        let mut counts: BTreeMap<Vec<(usize, usize)>, usize> = BTreeMap::new();
        let trials = 15000;
        for _ in 0..trials {
            let w = build_wheel(1, &mut rng);
            *counts.entry(w.matching_edges).or_insert(0) += 1;
        }
        assert_eq!(counts.len(), 15);
        let expected = trials / 15;
        for (m, c) in counts {
            assert!(
                c > expected * 8 / 10 && c < expected * 12 / 10,
                "matching {m:?} count {c} deviates from {expected}"
            );
        }
    }

    #[test]
    fn exhaustive_check_small_wheel() {
        // Fixed matching {1,2},{3,4},{5,6} on the 7-wheel.
        let w = WheelAmplifier {
            size: 7,
            cycle_edges: (1..=7).map(|i| (i, if i == 7 { 1 } else { i + 1 })).collect(),
            matching_edges: vec![(1, 2), (3, 4), (5, 6)],
            contacts: vec![7],
        };
        let v = check_amplifier(&w, 21, 0, 0);
        // With a single contact the minimum side is always 0 or 1; every
        // non-empty proper subset has a positive cut in a connected graph.
        assert_eq!(v, AmplifierVerdict::Holds);
    }

    #[test]
    fn d2_exhaustive_fast() {
        let mut rng = SplitMix64::new(5);
        let w = build_wheel(2, &mut rng);
        let v = check_amplifier(&w, 21, 0, 0);
        assert!(matches!(
            v,
            AmplifierVerdict::Holds | AmplifierVerdict::Violated { .. }
        ));
    }

    #[test]
    fn checked_builder_returns_amplifier() {
        let mut rng = SplitMix64::new(11);
        for d in 1..=2 {
            let (w, _draws) = build_wheel_checked(d, &mut rng, 100, 21, 2000);
            assert!(check_amplifier(&w, 21, 0, 0).holds());
        }
    }
}
