//! End-to-end orchestration: the full reduction pipeline with a
//! verification manifest, and the regression harness covering every
//! gadget law, amplifier sampling, and the round-trip cost identities.

use crate::gadgets::{catalog, verify_gadget};
use crate::graph::degree_profile;
use crate::hybrid::{assignment_from_wheel_values, reduce_to_hybrid, ContactMap};
use crate::linsys::{count_unsatisfied, Assignment, Equation, LinSystem};
use crate::oracle::{cross_check_graphic, exhaustive_subsets, CrossCheckVerdict, EnumerationBudget};
use crate::reduction::{
    assign_to_tour, build_instance, tour_to_assignment, unsatisfied_count, BuiltInstance,
    Variant,
};
use crate::rng::SplitMix64;
use crate::wheel::{build_wheel, check_amplifier, WheelAmplifier};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub ok: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub ok: bool,
    pub checks: Vec<CheckResult>,
}

impl Manifest {
    fn push(&mut self, name: impl Into<String>, ok: bool, detail: impl Into<String>) {
        let name = name.into();
        let detail = detail.into();
        self.ok &= ok;
        self.checks.push(CheckResult { name, ok, detail });
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            out.push_str(&format!(
                "[{}] {} - {}\n",
                if c.ok { "PASS" } else { "FAIL" },
                c.name,
                c.detail
            ));
        }
        out.push_str(&format!(
            "overall: {}\n",
            if self.ok { "PASS" } else { "FAIL" }
        ));
        out
    }
}

fn empty_manifest() -> Manifest {
    Manifest {
        ok: true,
        checks: Vec::new(),
    }
}

/// Everything the pipeline produces for one run.
#[derive(Debug, Serialize, Deserialize)]
pub struct Bundle {
    pub hybrid: crate::linsys::LinSystemJson,
    pub wheels: Vec<WheelAmplifier>,
    pub map: ContactMap,
    pub instance: BuiltInstance,
    pub assignment: Assignment,
    pub tour: crate::graph::Tour,
    pub manifest: Manifest,
}

/// Runs reduce -> build -> tour -> extract and records every invariant
/// check in the manifest.
pub fn run_pipeline(
    e3: &LinSystem,
    b: bool,
    copies: usize,
    seed: u64,
    variant: Variant,
    assignment: Option<Assignment>,
) -> Result<Bundle, String> {
    let mut manifest = empty_manifest();
    let (hybrid, wheels, map) =
        reduce_to_hybrid(e3, b, copies, seed).map_err(|e| format!("reduce_to_hybrid: {e}"))?;

    let nu2 = map.occurrences.len();
    let (two, three) = hybrid.count_by_arity();
    let occs_ok = hybrid.occurrence_counts().iter().all(|&c| c == 3);
    manifest.push(
        "hybrid-shape",
        hybrid.num_vars == 21 * nu2 && two == 30 * nu2 && three == nu2 && occs_ok,
        format!(
            "{} vars, {two} two-var, {three} three-var equations, occurrences-of-3: {occs_ok}",
            hybrid.num_vars
        ),
    );

    let instance =
        build_instance(&hybrid, &map, variant).map_err(|e| format!("build_instance: {e}"))?;
    let profile = degree_profile(&instance.graph);
    let degree_ok = match variant {
        Variant::Max5 => profile.max_degree == 5,
        Variant::Subcubic | Variant::GraphicSubcubic => profile.max_degree == 3,
        Variant::Cubic | Variant::GraphicCubic => profile.is_regular && profile.max_degree == 3,
    };
    manifest.push(
        "degree-profile",
        degree_ok,
        format!(
            "variant {} has max degree {} (regular: {})",
            variant.name(),
            profile.max_degree,
            profile.is_regular
        ),
    );

    let assignment = assignment.unwrap_or_else(|| Assignment::zeros(hybrid.num_vars));
    let (tour, ledger) =
        assign_to_tour(&instance, &assignment).map_err(|e| format!("assign_to_tour: {e}"))?;
    let measured = instance
        .tour_cost(&tour)
        .map_err(|e| format!("tour_cost: {e}"))?;
    manifest.push(
        "cost-identity",
        measured == ledger.total(),
        format!(
            "measured {measured}, predicted base {} + delta {}",
            ledger.base, ledger.delta
        ),
    );

    let (extracted, bound, anomalous) =
        tour_to_assignment(&instance, &tour).map_err(|e| format!("tour_to_assignment: {e}"))?;
    let u_in = unsatisfied_count(&instance, &assignment).map_err(|e| e.to_string())?;
    let u_out = unsatisfied_count(&instance, &extracted).map_err(|e| e.to_string())?;
    manifest.push(
        "round-trip",
        !anomalous && u_out <= u_in && bound as usize >= u_out,
        format!("unsatisfied in {u_in}, out {u_out}, certified bound {bound}"),
    );
    let hybrid_unsat = count_unsatisfied(&hybrid, &extracted).map_err(|e| e.to_string())?;
    manifest.push(
        "two-var-equations-satisfied",
        hybrid_unsat == u_out,
        format!("hybrid unsatisfied total {hybrid_unsat} equals three-var count {u_out}"),
    );

    Ok(Bundle {
        hybrid: hybrid.to_json(),
        wheels,
        map,
        instance,
        assignment,
        tour,
        manifest,
    })
}

/// The regression harness behind `forge verify`: gadget laws, amplifier
/// sampling, shape and cost identities, oracle cross-checks.
pub fn verify_all(quick: bool, seed: u64, budget: &EnumerationBudget) -> Manifest {
    let mut m = empty_manifest();

    for b in catalog() {
        match verify_gadget(&b, budget) {
            Ok(report) => m.push(
                format!("gadget/{}", report.name),
                report.ok,
                if report.ok {
                    "traversal table matches brute force".to_string()
                } else {
                    format!("missing {:?}, extra {:?}", report.missing, report.extra)
                },
            ),
            Err(e) => m.push(format!("gadget/{}", b.name), false, e.to_string()),
        }
    }

    let trials = if quick { 10 } else { 40 };
    let mut rng = SplitMix64::new(seed);
    let mut agree = true;
    let mut holds = 0usize;
    for i in 0..trials {
        let d = 1 + i % 2;
        let w = build_wheel(d, &mut rng);
        let a = check_amplifier(&w, 21, 2000, rng.next_u64());
        let b = exhaustive_subsets(&w, budget);
        match b {
            Ok(b) => {
                agree &= a.holds() == b.holds();
                if a.holds() {
                    holds += 1;
                }
            }
            Err(e) => {
                m.push("amplifier/cross-check", false, e.to_string());
                agree = false;
            }
        }
    }
    m.push(
        "amplifier/cross-check",
        agree,
        format!("two implementations agree on {trials} wheels"),
    );
    m.push(
        "amplifier/raw-success",
        holds * 10 >= trials * 9,
        format!("{holds}/{trials} raw draws satisfy the amplifier condition"),
    );

    let copies_list: &[usize] = if quick { &[1] } else { &[1, 2] };
    for &copies in copies_list {
        let mut e3 = LinSystem::new(3);
        e3.equations
            .push(Equation::three([0, 1, 2], [false; 3], false));
        e3.equations
            .push(Equation::three([0, 1, 2], [false; 3], true));
        match reduce_to_hybrid(&e3, false, copies, seed ^ copies as u64) {
            Ok((hybrid, _, map)) => {
                let nu2 = map.occurrences.len();
                for variant in Variant::ALL {
                    let name = format!("identity/{}/nu2={nu2}", variant.name());
                    let r = (|| -> Result<(u64, u64), String> {
                        let inst =
                            build_instance(&hybrid, &map, variant).map_err(|e| e.to_string())?;
                        let a = assignment_from_wheel_values(&map, &[false; 3]);
                        let (tour, ledger) =
                            assign_to_tour(&inst, &a).map_err(|e| e.to_string())?;
                        let measured = inst.tour_cost(&tour).map_err(|e| e.to_string())?;
                        Ok((measured, ledger.total()))
                    })();
                    match r {
                        Ok((measured, predicted)) => m.push(
                            name,
                            measured == predicted,
                            format!("measured {measured}, predicted {predicted}"),
                        ),
                        Err(e) => m.push(name, false, e),
                    }
                }
            }
            Err(e) => m.push("identity/reduce", false, e.to_string()),
        }
    }

    if !quick {
        // Oracle consistency on a small census of connected graphs.
        let mut checked = 0usize;
        let mut ok = true;
        for n in 2..=5usize {
            let pairs: Vec<(usize, usize)> = (0..n)
                .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
                .collect();
            for mask in 0u32..(1 << pairs.len()) {
                let mut g = crate::graph::WeightedGraph::new(n);
                for (i, &(u, v)) in pairs.iter().enumerate() {
                    if mask & (1 << i) != 0 {
                        g.add_edge(u, v).unwrap();
                    }
                }
                if !g.is_connected() {
                    continue;
                }
                checked += 1;
                match cross_check_graphic(&g, budget) {
                    Ok(CrossCheckVerdict::Agree { .. }) => {}
                    other => {
                        ok = false;
                        m.push(
                            "oracle/graphic-cross-check",
                            false,
                            format!("mismatch on n={n} mask={mask}: {other:?}"),
                        );
                    }
                }
            }
        }
        if ok {
            m.push(
                "oracle/graphic-cross-check",
                true,
                format!("Eulerian optimum equals permutation optimum on {checked} graphs"),
            );
        }
    }

    m
}
