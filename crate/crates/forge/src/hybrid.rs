//! The E3-LIN to Hybrid reduction: one wheel amplifier per variable, a
//! matching equation per matching edge, a cycle equation per cycle edge
//! (one of them tagged as the cycle border), and the original three-variable
//! equations rewritten onto contact variables.
//!
//! For an input with `2ν` equations (after duplication) the output has `42ν`
//! variables, `60ν` two-variable equations and `2ν` three-variable
//! equations, and every variable occurs in exactly three equations.

use crate::linsys::{Assignment, Equation, EqKind, LinError, LinSystem};
use crate::rng::SplitMix64;
use crate::wheel::{build_wheel_checked, WheelAmplifier};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum HybridError {
    #[error("input system is invalid: {0}")]
    BadInput(#[from] LinError),
    #[error("equation {0} has {1} variables; the reduction needs exactly 3")]
    NotThreeVar(usize, usize),
    #[error("copies parameter must be at least 1")]
    BadCopies,
}

/// Where one original-variable occurrence landed: wheel, 1-based contact
/// position (a multiple of 7), the hybrid variable id and the literal's
/// negation flag after rhs normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OccurrenceRef {
    pub wheel: usize,
    pub position: usize,
    pub hybrid_var: usize,
    pub negated: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WheelInfo {
    /// Index of the original variable this wheel simulates.
    pub orig_var: usize,
    /// Number of contacts = occurrences of the original variable.
    pub d: usize,
    /// Hybrid variable id of wheel vertex 1; vertex `v` maps to `base+v-1`.
    pub base: usize,
    pub amplifier: WheelAmplifier,
}

impl WheelInfo {
    pub fn var_count(&self) -> usize {
        7 * self.d
    }

    pub fn hybrid_var(&self, position: usize) -> usize {
        debug_assert!(position >= 1 && position <= self.var_count());
        self.base + position - 1
    }
}

/// Book-keeping produced alongside the Hybrid instance; the reduction
/// engine consumes it to wire gadgets.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContactMap {
    pub wheels: Vec<WheelInfo>,
    /// For each three-variable equation of the Hybrid system (in order),
    /// its three literal bindings.
    pub occurrences: Vec<[OccurrenceRef; 3]>,
    /// Original variables that occurred in no equation and were dropped.
    pub dropped_vars: Vec<usize>,
    /// Duplication factor the source system was expanded by.
    pub copies: usize,
}

impl ContactMap {
    /// The wheel that owns a hybrid variable, with its 1-based position.
    pub fn locate(&self, hybrid_var: usize) -> (usize, usize) {
        for (wi, w) in self.wheels.iter().enumerate() {
            if hybrid_var >= w.base && hybrid_var < w.base + w.var_count() {
                return (wi, hybrid_var - w.base + 1);
            }
        }
        panic!("hybrid variable {hybrid_var} outside all wheel blocks");
    }
}

/// Runs the reduction. Every equation of `e3` must have exactly three
/// variables; the system is duplicated `copies` times, all equations are
/// normalized to right-hand side `b` by flipping a literal where needed,
/// and each occurrence of a variable is replaced by the contact variable at
/// position `7j` of its wheel.
pub fn reduce_to_hybrid(
    e3: &LinSystem,
    b: bool,
    copies: usize,
    seed: u64,
) -> Result<(LinSystem, Vec<WheelAmplifier>, ContactMap), HybridError> {
    e3.validate()?;
    if copies == 0 {
        return Err(HybridError::BadCopies);
    }
    for (i, eq) in e3.equations.iter().enumerate() {
        if eq.vars.len() != 3 {
            return Err(HybridError::NotThreeVar(i, eq.vars.len()));
        }
    }

    // Duplicate the system `copies` times.
    let mut duplicated: Vec<Equation> = Vec::with_capacity(e3.equations.len() * copies);
    for _ in 0..copies {
        duplicated.extend(e3.equations.iter().cloned());
    }

    // Occurrence counts over the duplicated system.
    let mut counts = vec![0usize; e3.num_vars];
    for eq in &duplicated {
        for &v in &eq.vars {
            counts[v] += 1;
        }
    }
    let dropped_vars: Vec<usize> = (0..e3.num_vars).filter(|&v| counts[v] == 0).collect();

    // One wheel per surviving variable; matchings are redrawn until the
    // amplifier condition holds (bounded retries).
    let mut rng = SplitMix64::new(seed);
    let mut wheels = Vec::new();
    let mut wheel_of_var = vec![usize::MAX; e3.num_vars];
    let mut base = 0usize;
    for v in 0..e3.num_vars {
        if counts[v] == 0 {
            continue;
        }
        let d = counts[v];
        let (amplifier, _draws) = build_wheel_checked(d, &mut rng, 100, 21, 2000);
        wheel_of_var[v] = wheels.len();
        wheels.push(WheelInfo {
            orig_var: v,
            d,
            base,
            amplifier,
        });
        base += 7 * d;
    }
    let num_hybrid_vars = base;

    let mut hybrid = LinSystem::new(num_hybrid_vars);

    // Two-variable equations, wheel by wheel: cycle equations for edges
    // {i, i+1} with i in 2..alpha-1 and the edge {1, alpha}, the border
    // equation for edge {1, 2}, then one matching equation per matching
    // edge.
    for w in &wheels {
        let alpha = w.var_count();
        for i in 2..alpha {
            hybrid.equations.push(Equation::two(
                w.hybrid_var(i),
                w.hybrid_var(i + 1),
                false,
                EqKind::Cycle,
            ));
        }
        hybrid.equations.push(Equation::two(
            w.hybrid_var(1),
            w.hybrid_var(alpha),
            false,
            EqKind::Cycle,
        ));
        hybrid.equations.push(Equation::two(
            w.hybrid_var(1),
            w.hybrid_var(2),
            false,
            EqKind::CycleBorder,
        ));
        for &(a, c) in &w.amplifier.matching_edges {
            hybrid.equations.push(Equation::two(
                w.hybrid_var(a),
                w.hybrid_var(c),
                false,
                EqKind::Matching,
            ));
        }
    }

    // Three-variable equations: the j-th occurrence of x goes to contact
    // position 7j of x's wheel. Rhs is normalized to `b` by flipping the
    // last literal when the original rhs differs.
    let mut occurrence_counter = vec![0usize; e3.num_vars];
    let mut occurrences = Vec::with_capacity(duplicated.len());
    for eq in &duplicated {
        let mut vars = [0usize; 3];
        let mut neg = [false; 3];
        let mut refs = [OccurrenceRef {
            wheel: 0,
            position: 0,
            hybrid_var: 0,
            negated: false,
        }; 3];
        let flip_last = eq.rhs != b;
        for (slot, (&v, &n)) in eq.vars.iter().zip(&eq.neg).enumerate() {
            occurrence_counter[v] += 1;
            let j = occurrence_counter[v];
            let wi = wheel_of_var[v];
            let position = 7 * j;
            let hybrid_var = wheels[wi].hybrid_var(position);
            let negated = n ^ (flip_last && slot == 2);
            vars[slot] = hybrid_var;
            neg[slot] = negated;
            refs[slot] = OccurrenceRef {
                wheel: wi,
                position,
                hybrid_var,
                negated,
            };
        }
        hybrid.equations.push(Equation::three(vars, neg, b));
        occurrences.push(refs);
    }

    let amplifiers = wheels.iter().map(|w| w.amplifier.clone()).collect();
    let map = ContactMap {
        wheels,
        occurrences,
        dropped_vars,
        copies,
    };
    Ok((hybrid, amplifiers, map))
}

/// Sets every variable of each wheel to the wheel's majority contact value
/// (ties toward 0). For wheels satisfying the amplifier condition this
/// never decreases the number of satisfied equations.
pub fn make_consistent(map: &ContactMap, a: &Assignment) -> Assignment {
    let mut out = a.clone();
    for w in &map.wheels {
        let ones = w
            .amplifier
            .contacts
            .iter()
            .filter(|&&c| a.bits[w.hybrid_var(c)])
            .count();
        let majority = 2 * ones > w.d;
        for pos in 1..=w.var_count() {
            out.bits[w.hybrid_var(pos)] = majority;
        }
    }
    out
}

/// True iff all variables of each wheel share one value under `a`.
pub fn is_consistent(map: &ContactMap, a: &Assignment) -> bool {
    map.wheels.iter().all(|w| {
        let first = a.bits[w.hybrid_var(1)];
        (2..=w.var_count()).all(|pos| a.bits[w.hybrid_var(pos)] == first)
    })
}

/// The per-wheel value of a consistent assignment.
pub fn wheel_values(map: &ContactMap, a: &Assignment) -> Vec<bool> {
    map.wheels.iter().map(|w| a.bits[w.hybrid_var(1)]).collect()
}

/// Builds the consistent assignment taking `values[i]` on wheel `i`.
pub fn assignment_from_wheel_values(map: &ContactMap, values: &[bool]) -> Assignment {
    let total: usize = map.wheels.iter().map(|w| w.var_count()).sum();
    let mut bits = vec![false; total];
    for (w, &val) in map.wheels.iter().zip(values) {
        for pos in 1..=w.var_count() {
            bits[w.hybrid_var(pos)] = val;
        }
    }
    Assignment::from_bits(bits)
}
