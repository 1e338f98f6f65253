//! Systems of linear equations mod 2 with two or three variables per
//! equation. Houses both plain E3-LIN systems and the Hybrid instances
//! produced by the wheel-amplifier reduction.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LinError {
    #[error("equation {0} has {1} variables; expected 2 or 3")]
    BadArity(usize, usize),
    #[error("equation {0} repeats a variable")]
    RepeatedVariable(usize),
    #[error("equation {0} references variable {1} out of range")]
    VarOutOfRange(usize, usize),
    #[error("assignment has {0} bits but the system has {1} variables")]
    AssignmentLength(usize, usize),
}

/// Role tags for equations of a Hybrid instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EqKind {
    Matching,
    Cycle,
    CycleBorder,
    ThreeVar,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Equation {
    /// Variable ids, 2 or 3 of them, pairwise distinct.
    pub vars: Vec<usize>,
    /// Per-literal negation flags, same length as `vars`.
    pub neg: Vec<bool>,
    /// Right-hand side bit.
    pub rhs: bool,
    pub kind: EqKind,
}

impl Equation {
    pub fn two(u: usize, v: usize, rhs: bool, kind: EqKind) -> Self {
        Equation {
            vars: vec![u, v],
            neg: vec![false, false],
            rhs,
            kind,
        }
    }

    pub fn three(vars: [usize; 3], neg: [bool; 3], rhs: bool) -> Self {
        Equation {
            vars: vars.to_vec(),
            neg: neg.to_vec(),
            rhs,
            kind: EqKind::ThreeVar,
        }
    }

    /// XOR of the literals under `bits`.
    pub fn eval(&self, bits: &[bool]) -> bool {
        self.vars
            .iter()
            .zip(&self.neg)
            .fold(false, |acc, (&v, &n)| acc ^ bits[v] ^ n)
    }

    pub fn satisfied(&self, bits: &[bool]) -> bool {
        self.eval(bits) == self.rhs
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinSystem {
    pub num_vars: usize,
    pub equations: Vec<Equation>,
}

impl LinSystem {
    pub fn new(num_vars: usize) -> Self {
        LinSystem {
            num_vars,
            equations: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<(), LinError> {
        for (i, eq) in self.equations.iter().enumerate() {
            if eq.vars.len() < 2 || eq.vars.len() > 3 || eq.neg.len() != eq.vars.len() {
                return Err(LinError::BadArity(i, eq.vars.len()));
            }
            for (a, &v) in eq.vars.iter().enumerate() {
                if v >= self.num_vars {
                    return Err(LinError::VarOutOfRange(i, v));
                }
                if eq.vars[a + 1..].contains(&v) {
                    return Err(LinError::RepeatedVariable(i));
                }
            }
        }
        Ok(())
    }

    /// Number of occurrences of each variable across all equations.
    pub fn occurrence_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.num_vars];
        for eq in &self.equations {
            for &v in &eq.vars {
                counts[v] += 1;
            }
        }
        counts
    }

    pub fn count_by_arity(&self) -> (usize, usize) {
        let two = self.equations.iter().filter(|e| e.vars.len() == 2).count();
        let three = self.equations.iter().filter(|e| e.vars.len() == 3).count();
        (two, three)
    }
}

/// A total assignment of bits to variables.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub bits: Vec<bool>,
}

impl Assignment {
    pub fn zeros(n: usize) -> Self {
        Assignment {
            bits: vec![false; n],
        }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Assignment { bits }
    }
}

/// Number of equations whose XOR (with negations) differs from the rhs.
pub fn count_unsatisfied(sys: &LinSystem, a: &Assignment) -> Result<usize, LinError> {
    if a.bits.len() != sys.num_vars {
        return Err(LinError::AssignmentLength(a.bits.len(), sys.num_vars));
    }
    Ok(sys
        .equations
        .iter()
        .filter(|eq| !eq.satisfied(&a.bits))
        .count())
}

/// JSON wire format: `{"vars": n, "eqs": [{"v": [...], "neg": [...],
/// "rhs": 0|1, "kind": "..."}]}`.
#[derive(Debug, Serialize, Deserialize)]
pub struct LinSystemJson {
    pub vars: usize,
    pub eqs: Vec<EquationJson>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EquationJson {
    pub v: Vec<usize>,
    pub neg: Vec<u8>,
    pub rhs: u8,
    pub kind: EqKind,
}

impl LinSystem {
    pub fn to_json(&self) -> LinSystemJson {
        LinSystemJson {
            vars: self.num_vars,
            eqs: self
                .equations
                .iter()
                .map(|e| EquationJson {
                    v: e.vars.clone(),
                    neg: e.neg.iter().map(|&b| b as u8).collect(),
                    rhs: e.rhs as u8,
                    kind: e.kind,
                })
                .collect(),
        }
    }

    pub fn from_json(j: &LinSystemJson) -> Result<Self, LinError> {
        let sys = LinSystem {
            num_vars: j.vars,
            equations: j
                .eqs
                .iter()
                .map(|e| Equation {
                    vars: e.v.clone(),
                    neg: e.neg.iter().map(|&b| b != 0).collect(),
                    rhs: e.rhs != 0,
                    kind: e.kind,
                })
                .collect(),
        };
        sys.validate()?;
        Ok(sys)
    }
}
