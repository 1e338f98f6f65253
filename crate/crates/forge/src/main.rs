//! `forge`: build Hybrid instances from E3-linear systems, compile them
//! into bounded-degree (1,2)-TSP and Graphic TSP instances, convert
//! assignments to tours and back, and verify every gadget against its
//! brute-force oracle.

use clap::{Args, Parser, Subcommand};
use forge::graph::{GraphJson, Tour, WeightedGraph};
use forge::hybrid::reduce_to_hybrid;
use forge::linsys::{Assignment, LinSystem, LinSystemJson};
use forge::oracle::{
    cross_check_graphic, enum_spanning_paths, exact_graphic_tsp, exact_tsp12,
    exhaustive_subsets, EnumerationBudget,
};
use forge::pipeline::{run_pipeline, verify_all, Bundle};
use forge::reduction::{
    assign_to_tour, build_instance, gap_report, tour_to_assignment, BuiltInstance, Variant,
};
use forge::wheel::WheelAmplifier;
use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "forge", version, about = "gadget reduction toolkit for bounded-degree TSP instances")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct SeedArg {
    /// Seed for all randomized construction.
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Subcommand)]
enum Cmd {
    /// Reduce an E3-linear system (JSON) to a Hybrid instance with wheels.
    GenHybrid {
        /// Input system: {"vars": n, "eqs": [{"v": [..3 ids], "neg": [..], "rhs": 0|1, "kind": "three-var"}]}
        #[arg(long = "in")]
        input: PathBuf,
        /// Right-hand side all equations are normalized to.
        #[arg(long, default_value_t = 0)]
        b: u8,
        /// Number of copies of each equation.
        #[arg(long, default_value_t = 1)]
        copies: usize,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compile a Hybrid bundle into a TSP instance.
    Build {
        #[arg(long, value_parser = parse_variant)]
        variant: Variant,
        /// Hybrid bundle produced by gen-hybrid.
        #[arg(long = "in")]
        input: PathBuf,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the canonical tour for a consistent assignment.
    #[command(name = "tour")]
    #[allow(clippy::enum_variant_names)]
    TourCmd {
        #[arg(long)]
        inst: PathBuf,
        /// Assignment JSON {"bits": [...]}; omitted = all-zero.
        #[arg(long)]
        assign: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract an assignment from a tour.
    Extract {
        #[arg(long)]
        inst: PathBuf,
        #[arg(long)]
        tour: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the full regression harness over gadget laws and identities.
    Verify {
        /// Skip the nu=2 sweep and the graphic census.
        #[arg(long)]
        quick: bool,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Brute-force ground-truth oracles.
    Oracle {
        #[command(subcommand)]
        which: OracleCmd,
    },
    /// Export a graph or instance as JSON, DOT or TSPLIB.
    Export {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_parser = ["json", "dot", "tsplib", "text"])]
        format: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Emit the gadget catalog as JSON or per-gadget DOT files.
    Catalog {
        #[arg(long, value_parser = ["json", "dot"], default_value = "json")]
        format: String,
        /// Output file (json) or directory (dot).
        #[arg(long)]
        out: PathBuf,
    },
    /// Limiting inapproximability ratio arithmetic.
    Gap {
        #[arg(long, value_parser = parse_variant)]
        variant: Variant,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        tau: f64,
    },
    /// End-to-end: reduce, build, tour, extract, with a manifest.
    Pipeline {
        /// E3-linear system JSON.
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_parser = parse_variant)]
        variant: Variant,
        #[arg(long, default_value_t = 0)]
        b: u8,
        #[arg(long, default_value_t = 1)]
        copies: usize,
        #[command(flatten)]
        seed: SeedArg,
        /// Assignment JSON; omitted = all-zero.
        #[arg(long)]
        assign: Option<PathBuf>,
        /// Directory for the artifact bundle.
        #[arg(long)]
        out_dir: PathBuf,
    },
}

#[derive(Subcommand)]
enum OracleCmd {
    /// Exact minimum (1,2)-tour.
    Tsp12 {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Exact Graphic TSP cost (smallest Eulerian spanning multi-subgraph).
    Graphic {
        #[arg(long = "in")]
        input: PathBuf,
        /// Also sweep all permutations and cross-check.
        #[arg(long)]
        cross_check: bool,
    },
    /// All spanning paths between two vertices.
    Paths {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        from: usize,
        #[arg(long)]
        to: usize,
    },
    /// Amplifier condition over every subset.
    Amplifier {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    Variant::parse(s).ok_or_else(|| format!("unknown variant `{s}`"))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), String> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| format!("serialize: {e}"))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))
}

/// Hybrid artifact: the system plus the wheels and contact map the
/// reduction engine needs.
#[derive(serde::Serialize, serde::Deserialize)]
struct HybridBundle {
    system: LinSystemJson,
    wheels: Vec<WheelAmplifier>,
    map: forge::hybrid::ContactMap,
}

fn load_graph(path: &Path) -> Result<WeightedGraph, String> {
    // Accept either a bare graph or a built instance.
    if let Ok(inst) = read_json::<BuiltInstance>(path) {
        return Ok(inst.graph);
    }
    let j: GraphJson = read_json(path)?;
    WeightedGraph::from_json(&j).map_err(|e| e.to_string())
}

fn run() -> Result<(), String> {
    let cli = Cli::parse();
    let budget = EnumerationBudget::from_env();
    match cli.cmd {
        Cmd::GenHybrid {
            input,
            b,
            copies,
            seed,
            out,
        } => {
            let sys_json: LinSystemJson = read_json(&input)?;
            let e3 = LinSystem::from_json(&sys_json).map_err(|e| e.to_string())?;
            let (hybrid, wheels, map) = reduce_to_hybrid(&e3, b != 0, copies, seed.seed)
                .map_err(|e| format!("reduce_to_hybrid: {e}"))?;
            if !map.dropped_vars.is_empty() {
                eprintln!(
                    "warning: dropped zero-occurrence variables {:?}",
                    map.dropped_vars
                );
            }
            let bundle = HybridBundle {
                system: hybrid.to_json(),
                wheels,
                map,
            };
            write_json(&out, &bundle)?;
            let (two, three) = LinSystem::from_json(&bundle.system)
                .map_err(|e| e.to_string())?
                .count_by_arity();
            println!(
                "hybrid: {} variables, {two} two-variable and {three} three-variable equations, {} wheels",
                bundle.system.vars,
                bundle.map.wheels.len()
            );
            Ok(())
        }
        Cmd::Build {
            variant,
            input,
            seed: _,
            out,
        } => {
            let bundle: HybridBundle = read_json(&input)?;
            let hybrid = LinSystem::from_json(&bundle.system).map_err(|e| e.to_string())?;
            let inst = build_instance(&hybrid, &bundle.map, variant)
                .map_err(|e| format!("build_instance: {e}"))?;
            println!(
                "built {} instance: {} vertices, {} edges, base cost {}",
                variant.name(),
                inst.graph.vertex_count(),
                inst.graph.edge_count(),
                inst.base_cost()
            );
            write_json(&out, &inst)
        }
        Cmd::TourCmd { inst, assign, out } => {
            let instance: BuiltInstance = read_json(&inst)?;
            let a = match assign {
                Some(p) => read_json::<Assignment>(&p)?,
                None => Assignment::zeros(instance.hybrid_var_count()),
            };
            let (tour, ledger) =
                assign_to_tour(&instance, &a).map_err(|e| format!("assign_to_tour: {e}"))?;
            let measured = instance.tour_cost(&tour).map_err(|e| e.to_string())?;
            println!(
                "tour: predicted {} (base {} + {}), measured {measured}",
                ledger.total(),
                ledger.base,
                ledger.delta
            );
            write_json(&out, &tour)?;
            if measured != ledger.total() {
                return Err("cost identity violated".into());
            }
            Ok(())
        }
        Cmd::Extract { inst, tour, out } => {
            let instance: BuiltInstance = read_json(&inst)?;
            let t: Tour = read_json(&tour)?;
            let (a, bound, anomalous) =
                tour_to_assignment(&instance, &t).map_err(|e| format!("extract: {e}"))?;
            if anomalous {
                eprintln!("warning: tour costs less than the instance base; bound clamped to 0");
            }
            println!("extracted assignment with certified unsatisfied bound {bound}");
            write_json(&out, &a)
        }
        Cmd::Verify { quick, seed } => {
            let manifest = verify_all(quick, seed.seed, &budget);
            print!("{}", manifest.render_text());
            if manifest.ok {
                Ok(())
            } else {
                Err("verification failed".into())
            }
        }
        Cmd::Oracle { which } => match which {
            OracleCmd::Tsp12 { input } => {
                let g = load_graph(&input)?;
                let (cost, tour) = exact_tsp12(&g, &budget).map_err(|e| e.to_string())?;
                println!("optimal (1,2) tour cost {cost}");
                println!("{}", serde_json::to_string(&tour).unwrap());
                Ok(())
            }
            OracleCmd::Graphic { input, cross_check } => {
                let g = load_graph(&input)?;
                let cost = exact_graphic_tsp(&g, &budget).map_err(|e| e.to_string())?;
                println!("optimal graphic tour cost {cost}");
                if cross_check {
                    let verdict = cross_check_graphic(&g, &budget).map_err(|e| e.to_string())?;
                    println!("{}", serde_json::to_string(&verdict).unwrap());
                }
                Ok(())
            }
            OracleCmd::Paths { input, from, to } => {
                let g = load_graph(&input)?;
                let paths =
                    enum_spanning_paths(&g, from, to, &budget).map_err(|e| e.to_string())?;
                println!("{} spanning paths from {from} to {to}", paths.len());
                for p in paths {
                    println!("{}", serde_json::to_string(&p).unwrap());
                }
                Ok(())
            }
            OracleCmd::Amplifier { input } => {
                let w: WheelAmplifier = read_json(&input)?;
                let verdict = exhaustive_subsets(&w, &budget).map_err(|e| e.to_string())?;
                println!("{}", serde_json::to_string(&verdict).unwrap());
                Ok(())
            }
        },
        Cmd::Export { input, format, out } => {
            let g = load_graph(&input)?;
            let name = input
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("graph")
                .replace(['-', '.'], "_");
            let text = match format.as_str() {
                "json" => {
                    let mut t = serde_json::to_string_pretty(&g.to_json()).unwrap();
                    t.push('\n');
                    t
                }
                "dot" => g.to_dot(&name, &BTreeSet::new()),
                "tsplib" => g.to_tsplib(&name, 1000).map_err(|e| e.to_string())?,
                _ => format!(
                    "{name}: {} vertices, {} edges\n",
                    g.vertex_count(),
                    g.edge_count()
                ),
            };
            fs::write(&out, text).map_err(|e| format!("{}: {e}", out.display()))
        }
        Cmd::Catalog { format, out } => {
            let cat = forge::gadgets::catalog();
            if format == "json" {
                write_json(&out, &cat)?;
            } else {
                fs::create_dir_all(&out).map_err(|e| e.to_string())?;
                for b in &cat {
                    let path = out.join(format!("{}.dot", b.name));
                    fs::write(&path, b.to_dot()).map_err(|e| format!("{}: {e}", path.display()))?;
                }
            }
            println!("wrote {} blueprints", cat.len());
            Ok(())
        }
        Cmd::Gap { variant, eps, tau } => {
            let r = gap_report(variant, eps, tau).map_err(|e| e.to_string())?;
            println!("{}", serde_json::to_string_pretty(&r).unwrap());
            Ok(())
        }
        Cmd::Pipeline {
            input,
            variant,
            b,
            copies,
            seed,
            assign,
            out_dir,
        } => {
            let sys_json: LinSystemJson = read_json(&input)?;
            let e3 = LinSystem::from_json(&sys_json).map_err(|e| e.to_string())?;
            let a = match assign {
                Some(p) => Some(read_json::<Assignment>(&p)?),
                None => None,
            };
            let bundle: Bundle = run_pipeline(&e3, b != 0, copies, seed.seed, variant, a)?;
            fs::create_dir_all(&out_dir).map_err(|e| e.to_string())?;
            write_json(&out_dir.join("hybrid.json"), &bundle.hybrid)?;
            write_json(&out_dir.join("wheels.json"), &bundle.wheels)?;
            write_json(&out_dir.join("instance.json"), &bundle.instance)?;
            write_json(&out_dir.join("assignment.json"), &bundle.assignment)?;
            write_json(&out_dir.join("tour.json"), &bundle.tour)?;
            write_json(&out_dir.join("manifest.json"), &bundle.manifest)?;
            print!("{}", bundle.manifest.render_text());
            if bundle.manifest.ok {
                Ok(())
            } else {
                Err("pipeline manifest reports failures".into())
            }
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
