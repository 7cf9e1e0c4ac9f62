//! `reconet` — reconcile event-labeled gene trees with species
//! networks and MUL-trees from the command line.
//!
//! Exit codes: 0 success, 1 negative verdict (verification failed, no
//! map exists, incompatible, not displayed), 2 usage or parse error,
//! 3 resource limit exceeded.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use reconet::axioms::{
    check_folding, check_mul, check_relaxed_tree, check_treenet, exists_mul_map,
    exists_treenet_map, SearchLimits,
};
use reconet::construct::{fold_mul_to_network, network_from_triples, pipeline};
use reconet::gen::{gen_gene_tree, GeneTreeParams};
use reconet::io::dot::{export_gene_tree, export_mul_tree, export_network};
use reconet::io::map::{parse_folding, parse_map, serialize_folding, serialize_map, MapTarget};
use reconet::io::newick::{
    parse_gene_tree, parse_mul_tree, parse_network, parse_sigma, parse_triples,
    serialize_gene_tree, serialize_mul_tree, serialize_network, serialize_triples,
};
use reconet::phylo::{GeneTree, MULTree, Network};
use reconet::triples::{displays, informative_triples, is_compatible, DisplayLimits};
use reconet::unfold::{lift_mu, suppress_d1, unfold_star};
use reconet::{Error, DEFAULT_UNFOLD_LIMIT};

#[derive(Parser)]
#[command(name = "reconet", version, about = "Gene tree / species network reconciliation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VerifyKind {
    /// TreeNet reconciliation into a network (R1, R2, R3).
    Treenet,
    /// Relaxed tree reconciliation into a species tree (R2.i*).
    Relaxed,
    /// Full tree reconciliation (relaxed plus R2.iii).
    Tree,
    /// MUL-reconciliation into a (pseudo-)MUL-tree (M1-M3).
    Mul,
    /// Folding map from a MUL-tree onto a network (F1-F3).
    Folding,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TargetKindArg {
    Network,
    Mul,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Newick,
    Enewick,
    Dot,
    Tsv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ExportKind {
    GeneTree,
    Network,
    MulTree,
}

#[derive(Args)]
struct GeneInput {
    /// Input gene tree (Newick with gene@species leaves, S/D labels).
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    /// Optional gene<TAB>species sidecar for bare leaf names.
    #[arg(long, value_name = "FILE")]
    sigma: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full construction: MUL-tree, fold, and (for
    /// well-behaved input) the multi-arc free network with its map.
    Reconcile {
        #[command(flatten)]
        gene: GeneInput,
        /// Output directory (default: current directory).
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Associate the MUL-tree and fold it into a network, stopping
    /// before multi-arc elimination.
    Fold {
        #[command(flatten)]
        gene: GeneInput,
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Unfold a network into its path tree U*(N) and MUL-tree U(N).
    Unfold {
        /// Input network (eNewick).
        #[arg(long = "in", value_name = "FILE")]
        input: PathBuf,
        /// Cap on the number of path vertices.
        #[arg(long, default_value_t = DEFAULT_UNFOLD_LIMIT)]
        limit: usize,
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Lift a TreeNet reconciliation onto the unfolding of its
    /// multi-arc free target network.
    Lift {
        #[command(flatten)]
        gene: GeneInput,
        /// Target network (eNewick, multi-arc free).
        #[arg(long, value_name = "FILE")]
        target: PathBuf,
        /// Reconciliation map (TSV).
        #[arg(long, value_name = "FILE")]
        map: PathBuf,
        #[arg(long, default_value_t = DEFAULT_UNFOLD_LIMIT)]
        limit: usize,
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Verify a reconciliation or folding map against its axioms.
    Verify {
        #[arg(long, value_enum)]
        kind: VerifyKind,
        /// Gene tree (required for every kind except folding).
        #[arg(long = "in", value_name = "FILE")]
        input: Option<PathBuf>,
        /// Optional gene<TAB>species sidecar for bare leaf names.
        #[arg(long, value_name = "FILE")]
        sigma: Option<PathBuf>,
        /// Target document: network/species tree, or MUL-tree for
        /// --kind mul; for --kind folding the MUL-tree source.
        #[arg(long, value_name = "FILE")]
        target: PathBuf,
        /// For --kind folding: the network folded onto.
        #[arg(long, value_name = "FILE")]
        network: Option<PathBuf>,
        /// Map file (reconciliation TSV, or folding V/E records).
        #[arg(long, value_name = "FILE")]
        map: PathBuf,
        /// With --kind relaxed: also require (R2.iii).
        #[arg(long)]
        strict: bool,
    },
    /// Exhaustively search for a reconciliation map (desk scale).
    Exists {
        #[command(flatten)]
        gene: GeneInput,
        #[arg(long, value_name = "FILE")]
        target: PathBuf,
        #[arg(long, value_enum, default_value = "network")]
        kind: TargetKindArg,
        /// Cap on target size (vertices plus arcs).
        #[arg(long, default_value_t = 40)]
        limit: usize,
        /// Write the witness map here when one exists.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Rooted-triple tools.
    Triples {
        #[command(subcommand)]
        action: TriplesAction,
    },
    /// Build a multi-arc free network displaying a set of triples.
    NetFromTriples {
        /// Triple set, one `a b | c` per line.
        #[arg(long = "in", value_name = "FILE")]
        input: PathBuf,
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Emit random gene-tree corpora.
    Gen {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, default_value_t = 10)]
        leaves: usize,
        #[arg(long, default_value_t = 4)]
        species: usize,
        #[arg(long, default_value_t = 0.3)]
        dup_prob: f64,
        #[arg(long)]
        well_behaved: bool,
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Export a document as Graphviz DOT.
    Export {
        #[arg(long = "in", value_name = "FILE")]
        input: PathBuf,
        #[arg(long, value_enum)]
        kind: ExportKind,
        /// Gene<TAB>species sidecar when the input is a gene tree.
        #[arg(long, value_name = "FILE")]
        sigma: Option<PathBuf>,
        /// Annotate with a reconciliation map (needs --tree).
        #[arg(long, value_name = "FILE")]
        map: Option<PathBuf>,
        /// Gene tree the map comes from.
        #[arg(long, value_name = "FILE")]
        tree: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "dot")]
        format: Format,
        /// Output file (default: standard output).
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum TriplesAction {
    /// Informative species triples of a gene tree.
    Extract {
        #[command(flatten)]
        gene: GeneInput,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// BUILD compatibility of a triple set.
    CheckCompat {
        #[arg(long = "in", value_name = "FILE")]
        input: PathBuf,
    },
    /// Construct a species tree displaying a compatible triple set.
    BuildSpeciesTree {
        #[arg(long = "in", value_name = "FILE")]
        input: PathBuf,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Check which triples a network displays.
    CheckDisplay {
        #[arg(long = "in", value_name = "FILE")]
        input: PathBuf,
        /// Network (eNewick).
        #[arg(long, value_name = "FILE")]
        target: PathBuf,
        /// Cap on network size for the embedding search.
        #[arg(long, default_value_t = 200)]
        limit: usize,
    },
}

/// 0 success, 1 negative verdict, 2 usage, 3 resource.
struct Outcome(u8);

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Resource(_) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(Outcome(code)) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn read(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| {
        Error::Argument(format!("cannot read {}: {e}", path.display()))
    })
}

fn write_out(dir: &Option<PathBuf>, name: &str, content: &str) -> Result<PathBuf, Error> {
    let dir = dir.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir)?;
    let path = dir.join(name);
    fs::write(&path, content)?;
    Ok(path)
}

fn load_gene(input: &GeneInput) -> Result<GeneTree, Error> {
    let text = read(&input.input)?;
    let sigma = match &input.sigma {
        Some(path) => Some(parse_sigma(&read(path)?)?),
        None => None,
    };
    parse_gene_tree(&text, sigma.as_ref())
}

fn load_network(path: &Path) -> Result<Network, Error> {
    let (network, warnings) = parse_network(&read(path)?)?;
    for w in warnings {
        eprintln!("warning: {}: {w}", path.display());
    }
    Ok(network)
}

fn load_mul(path: &Path) -> Result<MULTree, Error> {
    let (m, warnings) = parse_mul_tree(&read(path)?)?;
    for w in warnings {
        eprintln!("warning: {}: {w}", path.display());
    }
    Ok(m)
}

fn run(command: Command) -> Result<Outcome, Error> {
    match command {
        Command::Reconcile { gene, out } => {
            let t = load_gene(&gene)?;
            let result = pipeline(&t)?;
            println!("well_behaved\t{}", result.well_behaved);
            let (network, map, net_name) = match &result.multiarc_free {
                Some((nstar, _, mu_star)) => (nstar, mu_star, "nstar.enwk"),
                None => (&result.fold.network, &result.mu, "n.enwk"),
            };
            let net_path = write_out(&out, net_name, &serialize_network(network))?;
            let map_path = write_out(
                &out,
                "map.tsv",
                &serialize_map(map, &t, MapTarget::Network(network)),
            )?;
            println!("network\t{}", net_path.display());
            println!("map\t{}", map_path.display());
            println!("species\t{}", network.num_species());
            println!("hybrids\t{}", network.hybrid_vertices().len());
            println!("multi_arc_free\t{}", network.is_multi_arc_free());
            println!("status\tok");
            Ok(Outcome(0))
        }
        Command::Fold { gene, out } => {
            let t = load_gene(&gene)?;
            let (mul, _) = reconet::construct::associate_mul(&t)?;
            let arts = fold_mul_to_network(&mul)?;
            let mul_path = write_out(&out, "mul.nwk", &serialize_mul_tree(&arts.mul))?;
            let sub_path = write_out(&out, "msub.nwk", &serialize_mul_tree(&arts.subdivided))?;
            let net_path = write_out(&out, "n.enwk", &serialize_network(&arts.network))?;
            let fold_path = write_out(
                &out,
                "folding.tsv",
                &serialize_folding(&arts.folding, &arts.subdivided, &arts.network),
            )?;
            println!("mul\t{}", mul_path.display());
            println!("subdivision\t{}", sub_path.display());
            println!("network\t{}", net_path.display());
            println!("folding\t{}", fold_path.display());
            println!("multi_arc_free\t{}", arts.network.is_multi_arc_free());
            println!("status\tok");
            Ok(Outcome(0))
        }
        Command::Unfold { input, limit, out } => {
            let n = load_network(&input)?;
            let star = unfold_star(&n, limit)?;
            let star_path = write_out(&out, "ustar.mul", &serialize_mul_tree(&star.mul))?;
            let plain = suppress_d1(&star.mul)?;
            let plain_path = write_out(&out, "u.mul", &serialize_mul_tree(&plain))?;
            println!("ustar\t{}", star_path.display());
            println!("u\t{}", plain_path.display());
            println!("path_vertices\t{}", star.mul.graph().num_vertices());
            println!("status\tok");
            Ok(Outcome(0))
        }
        Command::Lift {
            gene,
            target,
            map,
            limit,
            out,
        } => {
            let t = load_gene(&gene)?;
            let n = load_network(&target)?;
            let mu = parse_map(&read(&map)?, &t, MapTarget::Network(&n))?;
            let (star, kappa) = lift_mu(&t, &n, &mu, limit)?;
            let star_path = write_out(&out, "ustar.mul", &serialize_mul_tree(&star.mul))?;
            let kappa_path = write_out(
                &out,
                "kappa.tsv",
                &serialize_map(&kappa, &t, MapTarget::Mul(&star.mul)),
            )?;
            println!("ustar\t{}", star_path.display());
            println!("kappa\t{}", kappa_path.display());
            println!("status\tok");
            Ok(Outcome(0))
        }
        Command::Verify {
            kind,
            input,
            sigma,
            target,
            network,
            map,
            strict,
        } => {
            let gene_input = || -> Result<GeneInput, Error> {
                Ok(GeneInput {
                    input: input
                        .clone()
                        .ok_or_else(|| Error::Argument("this kind needs --in".into()))?,
                    sigma: sigma.clone(),
                })
            };
            let report = match kind {
                VerifyKind::Treenet => {
                    let t = load_gene(&gene_input()?)?;
                    let n = load_network(&target)?;
                    let mu = parse_map(&read(&map)?, &t, MapTarget::Network(&n))?;
                    check_treenet(&t, &n, &mu)?
                }
                VerifyKind::Relaxed | VerifyKind::Tree => {
                    let t = load_gene(&gene_input()?)?;
                    let s = load_network(&target)?;
                    let mu = parse_map(&read(&map)?, &t, MapTarget::Network(&s))?;
                    let strict = strict || kind == VerifyKind::Tree;
                    check_relaxed_tree(&t, &s, &mu, strict)?
                }
                VerifyKind::Mul => {
                    let t = load_gene(&gene_input()?)?;
                    let m = load_mul(&target)?;
                    let kappa = parse_map(&read(&map)?, &t, MapTarget::Mul(&m))?;
                    check_mul(&t, &m, &kappa)?
                }
                VerifyKind::Folding => {
                    let m = load_mul(&target)?;
                    let n_path = network.ok_or_else(|| {
                        Error::Argument("--kind folding needs --network".into())
                    })?;
                    let n = load_network(&n_path)?;
                    let f = parse_folding(&read(&map)?, &m, &n)?;
                    check_folding(&m, &n, &f)?
                }
            };
            if report.ok() {
                println!("verdict\tok");
                Ok(Outcome(0))
            } else {
                println!("verdict\tviolations");
                for v in &report.violations {
                    println!("violation\t{v}");
                }
                Ok(Outcome(1))
            }
        }
        Command::Exists {
            gene,
            target,
            kind,
            limit,
            out,
        } => {
            let t = load_gene(&gene)?;
            let limits = SearchLimits {
                max_target: limit,
                ..Default::default()
            };
            let found = match kind {
                TargetKindArg::Network => {
                    let n = load_network(&target)?;
                    let witness = exists_treenet_map(&t, &n, &limits)?;
                    witness.map(|mu| serialize_map(&mu, &t, MapTarget::Network(&n)))
                }
                TargetKindArg::Mul => {
                    let m = load_mul(&target)?;
                    let witness = exists_mul_map(&t, &m, &limits)?;
                    witness.map(|mu| serialize_map(&mu, &t, MapTarget::Mul(&m)))
                }
            };
            match found {
                Some(text) => {
                    println!("verdict\tmap_exists");
                    if let Some(path) = out {
                        fs::write(&path, &text)?;
                        println!("map\t{}", path.display());
                    } else {
                        print!("{text}");
                    }
                    Ok(Outcome(0))
                }
                None => {
                    println!("verdict\tno_map");
                    Ok(Outcome(1))
                }
            }
        }
        Command::Triples { action } => run_triples(action),
        Command::NetFromTriples { input, out } => {
            let set = parse_triples(&read(&input)?)?;
            match network_from_triples(&set)? {
                Some(n) => {
                    let path = write_out(&out, "nstar.enwk", &serialize_network(&n))?;
                    println!("network\t{}", path.display());
                    println!("species\t{}", n.num_species());
                    println!("status\tok");
                    Ok(Outcome(0))
                }
                None => {
                    println!("status\tempty_set");
                    Ok(Outcome(0))
                }
            }
        }
        Command::Gen {
            seed,
            count,
            leaves,
            species,
            dup_prob,
            well_behaved,
            out,
        } => {
            let params = GeneTreeParams {
                max_leaves: leaves,
                species_count: species,
                dup_prob,
                force_well_behaved: well_behaved,
                binary: false,
            };
            for i in 0..count {
                let t = gen_gene_tree(seed + i as u64, &params)?;
                let name = format!("t{:04}.nwk", i);
                let path = write_out(&out, &name, &serialize_gene_tree(&t))?;
                println!("tree\t{}", path.display());
            }
            println!("status\tok");
            Ok(Outcome(0))
        }
        Command::Export {
            input,
            kind,
            sigma,
            map,
            tree,
            format,
            out,
        } => {
            if format != Format::Dot {
                return Err(Error::Argument("export supports --format dot".into()));
            }
            let annotation_tree = match &tree {
                Some(path) => Some(load_gene(&GeneInput {
                    input: path.clone(),
                    sigma: sigma.clone(),
                })?),
                None => None,
            };
            let text = match kind {
                ExportKind::GeneTree => {
                    let t = load_gene(&GeneInput {
                        input: input.clone(),
                        sigma: sigma.clone(),
                    })?;
                    export_gene_tree(&t)
                }
                ExportKind::Network => {
                    let n = load_network(&input)?;
                    let mu = match (&map, &annotation_tree) {
                        (Some(map_path), Some(t)) => {
                            Some(parse_map(&read(map_path)?, t, MapTarget::Network(&n))?)
                        }
                        (Some(_), None) => {
                            return Err(Error::Argument("--map needs --tree".into()))
                        }
                        _ => None,
                    };
                    export_network(&n, annotation_tree.as_ref().zip(mu.as_ref()))
                }
                ExportKind::MulTree => {
                    let m = load_mul(&input)?;
                    let mu = match (&map, &annotation_tree) {
                        (Some(map_path), Some(t)) => {
                            Some(parse_map(&read(map_path)?, t, MapTarget::Mul(&m))?)
                        }
                        (Some(_), None) => {
                            return Err(Error::Argument("--map needs --tree".into()))
                        }
                        _ => None,
                    };
                    export_mul_tree(&m, annotation_tree.as_ref().zip(mu.as_ref()))
                }
            };
            match out {
                Some(path) => {
                    fs::write(&path, &text)?;
                    println!("dot\t{}", path.display());
                }
                None => print!("{text}"),
            }
            Ok(Outcome(0))
        }
    }
}

fn run_triples(action: TriplesAction) -> Result<Outcome, Error> {
    match action {
        TriplesAction::Extract { gene, out } => {
            let t = load_gene(&gene)?;
            let set = informative_triples(&t)?;
            let text = serialize_triples(&set);
            match out {
                Some(path) => {
                    fs::write(&path, &text)?;
                    println!("triples\t{}", path.display());
                }
                None => print!("{text}"),
            }
            println!("count\t{}", set.len());
            Ok(Outcome(0))
        }
        TriplesAction::CheckCompat { input } => {
            let set = parse_triples(&read(&input)?)?;
            match is_compatible(&set)? {
                Some(witness) => {
                    println!("verdict\tcompatible");
                    println!("witness\t{}", serialize_network(&witness));
                    Ok(Outcome(0))
                }
                None => {
                    println!("verdict\tincompatible");
                    Ok(Outcome(1))
                }
            }
        }
        TriplesAction::BuildSpeciesTree { input, out } => {
            let set = parse_triples(&read(&input)?)?;
            match is_compatible(&set)? {
                Some(witness) => {
                    let text = serialize_network(&witness);
                    match out {
                        Some(path) => {
                            fs::write(&path, &text)?;
                            println!("species_tree\t{}", path.display());
                        }
                        None => println!("species_tree\t{text}"),
                    }
                    Ok(Outcome(0))
                }
                None => {
                    println!("verdict\tincompatible");
                    Ok(Outcome(1))
                }
            }
        }
        TriplesAction::CheckDisplay {
            input,
            target,
            limit,
        } => {
            let set = parse_triples(&read(&input)?)?;
            let n = load_network(&target)?;
            let limits = DisplayLimits {
                max_vertices: limit,
            };
            let mut all = true;
            for t in &set.triples {
                let shown = displays(&n, t, &limits)?;
                all &= shown;
                println!("display\t{t}\t{shown}");
            }
            Ok(Outcome(u8::from(!all)))
        }
    }
}
