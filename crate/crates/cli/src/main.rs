use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qga_core::assembler::{
    brute_force_oracle, format_instance, parse_dimacs, parse_instance, random_instance,
    reduce_3sat, InstanceShape, DEFAULT_ORACLE_CAP,
};
use qga_core::embedding::{load_table, save_table, train_transe};
use qga_core::lexicon::build_lexicon;
use qga_core::pipeline::{bench_lower_bounds, explain, BENCH_EDGE_SETS, BENCH_VERTEX_SETS};
use qga_core::sparql::QueryForm;
use qga_core::store::{load_triples, DEFAULT_TYPE_PREDICATE};
use qga_core::{
    answer_keywords, solve_qga, tokenize, Error, LowerBound, PipelineConfig, TrainConfig,
};

#[derive(Parser)]
#[command(
    name = "qga",
    version,
    about = "Keyword search over RDF graphs by query graph assembly"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct StoreArgs {
    /// Triples file, one `subject<TAB>predicate<TAB>object` per line.
    #[arg(long)]
    kb: PathBuf,
    #[arg(long, default_value = DEFAULT_TYPE_PREDICATE)]
    type_predicate: String,
}

#[derive(Subcommand)]
enum Command {
    /// Answer a keyword query.
    Query {
        keywords: String,
        #[command(flatten)]
        store: StoreArgs,
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        paraphrases: Option<PathBuf>,
        /// Vector file from `qga train`; trained on the fly with defaults if absent.
        #[arg(long)]
        vectors: Option<PathBuf>,
        #[arg(long, default_value = "greedy")]
        bound: LowerBound,
        #[arg(long, default_value_t = 5)]
        top_n: usize,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long)]
        no_predict: bool,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(0..=1))]
        fuzzy: u8,
        #[arg(long)]
        explain: bool,
        /// Write the SPARQL text here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train translation embeddings for a store.
    Train {
        #[command(flatten)]
        store: StoreArgs,
        #[arg(long, default_value_t = 32)]
        dim: usize,
        #[arg(long, default_value_t = 200)]
        epochs: usize,
        #[arg(long, default_value_t = 0.01)]
        lr: f64,
        #[arg(long, default_value_t = 1.0)]
        margin: f64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve a dumped assembly instance.
    Solve {
        instance: PathBuf,
        #[arg(long, default_value = "greedy")]
        bound: LowerBound,
        #[arg(long)]
        stats: bool,
    },
    /// Write a random assembly instance.
    GenInstance {
        #[arg(long, default_value_t = 3)]
        vertex_sets: usize,
        #[arg(long, default_value_t = 2)]
        edge_sets: usize,
        #[arg(long, default_value_t = 4)]
        k: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare every bound against exhaustive search on random instances.
    OracleCheck {
        #[arg(long, default_value_t = 200)]
        instances: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Decide a 3-CNF formula through the assembly reduction.
    SatCheck {
        #[arg(long)]
        cnf: PathBuf,
        #[arg(long, default_value = "greedy")]
        bound: LowerBound,
    },
    /// Mean search states per lower bound on random instances.
    Bench {
        #[arg(long, default_value_t = 100)]
        instances: usize,
        #[arg(long, value_delimiter = ',', default_value = "5,10")]
        k: Vec<usize>,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn read(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<(), Error> {
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Error> {
    match out {
        Some(p) => write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Query {
            keywords,
            store,
            labels,
            paraphrases,
            vectors,
            bound,
            top_n,
            k,
            no_predict,
            fuzzy,
            explain: show,
            out,
        } => {
            let kg = load_triples(&store.kb, &store.type_predicate)?;
            let lexicon = build_lexicon(&kg, labels.as_deref(), paraphrases.as_deref())?;
            let table = match vectors {
                Some(p) => load_table(&p, &kg)?,
                None => train_transe(&kg, &TrainConfig::default())?.0,
            };
            let config = PipelineConfig {
                k,
                top_n,
                bound,
                predict: !no_predict,
                fuzzy: fuzzy == 1,
                ..PipelineConfig::default()
            };
            let answer = answer_keywords(&tokenize(&keywords), &kg, &lexicon, &table, &config)?;
            if show {
                eprint!("{}", explain(&answer.diagnostics, &kg));
            }
            emit(out.as_deref(), &answer.sparql.text)?;
            match answer.sparql.form {
                QueryForm::Select => print!("{}", answer.bindings.to_tsv(&kg)?),
                QueryForm::Ask => println!("{}", answer.answers(&kg)?.join("\t")),
            }
            Ok(())
        }
        Command::Train {
            store,
            dim,
            epochs,
            lr,
            margin,
            seed,
            out,
        } => {
            let kg = load_triples(&store.kb, &store.type_predicate)?;
            let config = TrainConfig {
                dim,
                epochs,
                learning_rate: lr,
                margin,
                seed,
                ..TrainConfig::default()
            };
            let (table, report) = train_transe(&kg, &config)?;
            save_table(&table, &kg, &out)?;
            eprintln!(
                "trained {} vectors, dim {dim}, {} epochs, final loss {:.6}",
                table.len(),
                report.epochs,
                report.final_loss
            );
            Ok(())
        }
        Command::Solve {
            instance,
            bound,
            stats,
        } => {
            let graph = parse_instance(&read(&instance)?)?;
            let outcome = solve_qga(&graph, bound);
            match &outcome.solution {
                Some(sol) => {
                    println!("cost\t{}", sol.cost);
                    for e in &sol.query.edges {
                        println!(
                            "edge\tV{} {}\t{}\tV{} {}\t{}",
                            e.from,
                            sol.query.vertices[e.from].vertex,
                            e.predicate.0,
                            e.to,
                            sol.query.vertices[e.to].vertex,
                            e.weight
                        );
                    }
                }
                None => println!("infeasible"),
            }
            if stats {
                let s = outcome.stats;
                println!(
                    "states_popped\t{}\nstates_pushed\t{}\nstates_pruned\t{}",
                    s.states_popped, s.states_pushed, s.states_pruned
                );
            }
            if outcome.solution.is_none() {
                return Err(Error::Infeasible {
                    reasons: vec!["no conflict-free matching covers every edge set".into()],
                });
            }
            Ok(())
        }
        Command::GenInstance {
            vertex_sets,
            edge_sets,
            k,
            seed,
            out,
        } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let shape = InstanceShape::new(vertex_sets..=vertex_sets, edge_sets..=edge_sets, k);
            emit(
                out.as_deref(),
                &format_instance(&random_instance(&mut rng, &shape)),
            )
        }
        Command::OracleCheck { instances, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let shape = InstanceShape::new(2..=4, 1..=3, 4);
            let mut mismatches = 0;
            for i in 0..instances {
                let graph = random_instance(&mut rng, &shape);
                let oracle = brute_force_oracle(&graph, DEFAULT_ORACLE_CAP)?.cost;
                for bound in LowerBound::ALL {
                    let got = solve_qga(&graph, bound).solution.map(|s| s.cost);
                    let agree = match (oracle, got) {
                        (Some(a), Some(b)) => (a - b).abs() <= 1e-9 * a.abs().max(1.0),
                        (None, None) => true,
                        _ => false,
                    };
                    if !agree {
                        mismatches += 1;
                        println!("instance {i}: {bound} gave {got:?}, oracle {oracle:?}");
                    }
                }
            }
            println!("{instances} instances, {mismatches} mismatches");
            if mismatches > 0 {
                return Err(Error::Invalid(format!(
                    "{mismatches} solver/oracle mismatches"
                )));
            }
            Ok(())
        }
        Command::SatCheck { cnf, bound } => {
            let formula = parse_dimacs(&read(&cnf)?)?;
            let graph = reduce_3sat(&formula)?;
            let outcome = solve_qga(&graph, bound);
            let sol = outcome.solution.expect("reduced instances always assemble");
            if sol.cost == 0.0 {
                let assignment = formula.decode_assignment(&sol.query);
                println!("SATISFIABLE");
                let lits: Vec<String> = assignment
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| {
                        if v {
                            format!("{}", i + 1)
                        } else {
                            format!("-{}", i + 1)
                        }
                    })
                    .collect();
                println!("v {} 0", lits.join(" "));
            } else {
                println!("UNSATISFIABLE");
            }
            Ok(())
        }
        Command::Bench {
            instances,
            k,
            seed,
            out,
        } => {
            let report =
                bench_lower_bounds(instances, BENCH_VERTEX_SETS, BENCH_EDGE_SETS, &k, seed)?;
            emit(out.as_deref(), &report.to_tsv())?;
            eprint!("{}", report.summary());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::FAILURE
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Uninterpretable(_) => 2,
                Error::Infeasible { .. } => 3,
                _ => 1,
            })
        }
    }
}
