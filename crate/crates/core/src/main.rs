use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ontoalign::align::AlignParams;
use ontoalign::cluster::{self, AffinityParams, Algorithm, ClusterParams, DbscanParams, HdbscanParams};
use ontoalign::distance::{build_distance_matrix, DistanceMatrix, DistanceMetricId};
use ontoalign::embedding::{embed_corpus, write_embeddings, IdfTable, WordVectorTable};
use ontoalign::external::{annotate_external, compare, AnnotatorConfig};
use ontoalign::normalize::{self, build_corpus, read_corpus_csv, write_corpus_csv};
use ontoalign::ontology::{extract_labels_ntriples, ParseMode, TermIndex};
use ontoalign::pipeline::{align_from_artifacts, run_pipeline, AlignInputs, RunConfig};
use ontoalign::serve::{serve, AppState};
use ontoalign::similarity::EditSimilarity;

#[derive(Parser)]
#[command(name = "ontoalign", version, about = "Align metadata field names with ontology terms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Normalize raw field names into corpus.csv
    Normalize {
        #[arg(long)]
        input: PathBuf,
        /// Read the input as CSV and take names from this column
        #[arg(long)]
        column: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pairwise distance matrix over a corpus
    Distances {
        #[arg(long)]
        metric: DistanceMetricId,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Word vectors, for the cosine_embedding metric
        #[arg(long)]
        vectors: Option<PathBuf>,
        #[arg(long)]
        idf: Option<PathBuf>,
    },
    /// Cluster a distance matrix
    Cluster {
        #[arg(long)]
        algorithm: Algorithm,
        #[arg(long)]
        matrix: PathBuf,
        #[command(flatten)]
        opts: ClusterOpts,
        #[arg(long)]
        out: PathBuf,
    },
    /// Embed labels from a corpus CSV, a labels CSV or a term table
    Embed {
        #[arg(long)]
        vectors: PathBuf,
        #[arg(long)]
        idf: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract rdfs:label / skos:prefLabel terms from N-Triples
    Ingest {
        #[arg(long)]
        ntriples: PathBuf,
        #[arg(long)]
        ontology_id: String,
        #[arg(long)]
        strict: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Align fields with terms from stored artifacts
    Align {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        clusters: PathBuf,
        #[arg(long)]
        field_embeddings: PathBuf,
        #[arg(long)]
        term_embeddings: PathBuf,
        #[arg(long)]
        terms: PathBuf,
        #[arg(long, default_value_t = 0.85)]
        threshold: f64,
        #[arg(long, default_value_t = 10)]
        top_k: usize,
        #[arg(long)]
        cosine_floor: Option<f64>,
        #[arg(long, value_enum, default_value = "levenshtein")]
        edit_similarity: EditSim,
        #[arg(long)]
        out: PathBuf,
    },
    /// Full pipeline from a TOML config
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Serve the curation API over a run directory
    Serve {
        #[arg(long)]
        run_dir: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        /// Decision journal; defaults to decisions.jsonl in the run directory
        #[arg(long)]
        journal: Option<PathBuf>,
    },
    /// Annotate corpus fields with an external annotator service
    Annotate {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        endpoint: String,
        #[arg(long)]
        api_key: Option<String>,
        /// Extra query parameters as key=value
        #[arg(long = "option", value_parser = parse_kv)]
        options: Vec<(String, String)>,
        /// alignments.json to compare against
        #[arg(long)]
        compare: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(clap::Args)]
struct ClusterOpts {
    #[arg(long)]
    damping: Option<f64>,
    #[arg(long)]
    preference: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    min_pts: Option<usize>,
    #[arg(long)]
    min_cluster_size: Option<usize>,
    #[arg(long)]
    min_samples: Option<usize>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum EditSim {
    Levenshtein,
    JaroWinkler,
}

fn parse_kv(s: &str) -> Result<(String, String), String> {
    s.split_once('=')
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .ok_or_else(|| format!("expected key=value, got {s:?}"))
}

type Res = Result<(), Box<dyn std::error::Error>>;

fn create(path: &Path) -> std::io::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn load_labels(path: &Path) -> Result<Vec<String>, Box<dyn std::error::Error>> {
    let mut first = String::new();
    BufReader::new(File::open(path)?).read_line(&mut first)?;
    if first.trim_end() == "iri\tlabel\tontology_id" {
        let index = TermIndex::load(path)?;
        return Ok(index.normalized_labels().into_iter().map(String::from).collect());
    }
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    if let Some(col) = headers.iter().position(|h| h == "normalized") {
        return Ok(rdr.records().map(|r| Ok(r?[col].to_string())).collect::<Result<_, csv::Error>>()?);
    }
    let col = headers
        .iter()
        .position(|h| h == "label")
        .ok_or("labels CSV needs a `normalized` or `label` column")?;
    let mut out = Vec::new();
    for r in rdr.records() {
        let raw = r?[col].to_string();
        match normalize::normalize(&raw) {
            Some(n) => out.push(n),
            None => log::warn!("skipping label {raw:?}: too short after normalization"),
        }
    }
    Ok(out)
}

fn cluster_params(algorithm: Algorithm, o: ClusterOpts) -> ClusterParams {
    match algorithm {
        Algorithm::AffinityPropagation => {
            let d = AffinityParams::default();
            ClusterParams::AffinityPropagation(AffinityParams {
                damping: o.damping.unwrap_or(d.damping),
                max_iter: o.max_iter.unwrap_or(d.max_iter),
                preference: o.preference,
                ..d
            })
        }
        Algorithm::Dbscan => {
            let d = DbscanParams::default();
            ClusterParams::Dbscan(DbscanParams {
                eps: o.eps.unwrap_or(d.eps),
                min_pts: o.min_pts.unwrap_or(d.min_pts),
            })
        }
        Algorithm::Hdbscan => {
            let d = HdbscanParams::default();
            ClusterParams::Hdbscan(HdbscanParams {
                min_cluster_size: o.min_cluster_size.unwrap_or(d.min_cluster_size),
                min_samples: o.min_samples.unwrap_or(d.min_samples),
            })
        }
    }
}

fn execute(command: Command) -> Res {
    match command {
        Command::Normalize { input, column, out } => {
            let reader = BufReader::new(File::open(&input)?);
            let source = input.display().to_string();
            let raws = match column {
                Some(c) => normalize::read_raw_csv(reader, &c, &source)?,
                None => normalize::read_raw_lines(reader, &source)?,
            };
            let corpus = build_corpus(raws)?;
            write_corpus_csv(&corpus, create(&out)?)?;
            eprintln!("{} field names", corpus.len());
        }
        Command::Distances {
            metric,
            corpus,
            out,
            vectors,
            idf,
        } => {
            let corpus = read_corpus_csv(File::open(&corpus)?)?;
            let names: Vec<&str> = corpus.iter().map(|f| f.normalized.as_str()).collect();
            let store = match (vectors, idf) {
                (Some(v), Some(i)) => Some(ontoalign::embedding::TermEmbedder::new(
                    WordVectorTable::load(&v)?,
                    IdfTable::load(&i)?,
                )),
                _ => None,
            };
            build_distance_matrix(&names, metric, store.as_ref())?.save(&out)?;
        }
        Command::Cluster {
            algorithm,
            matrix,
            opts,
            out,
        } => {
            let d = DistanceMatrix::load(&matrix)?;
            let params = cluster_params(algorithm, opts);
            let cs = cluster::run(&d, &params)?;
            fs::write(&out, cs.to_json()?)?;
            eprintln!("{} clusters, {} noise", cs.num_clusters(), cs.noise().len());
        }
        Command::Embed {
            vectors,
            idf,
            labels,
            out,
        } => {
            let table = WordVectorTable::load(&vectors)?;
            let idf = IdfTable::load(&idf)?;
            let labels = load_labels(&labels)?;
            let embs = embed_corpus(&labels, &table, &idf)?;
            let mut w = create(&out)?;
            write_embeddings(&embs, table.dimension(), &mut w)?;
            w.flush()?;
        }
        Command::Ingest {
            ntriples,
            ontology_id,
            strict,
            out,
        } => {
            let mode = if strict { ParseMode::Strict } else { ParseMode::Lenient };
            let ex = extract_labels_ntriples(&ntriples, &ontology_id, mode)?;
            ex.index.save(&out)?;
            eprintln!(
                "{} terms from {} lines ({} skipped)",
                ex.index.len(),
                ex.stats.lines,
                ex.stats.skipped_lines
            );
        }
        Command::Align {
            corpus,
            clusters,
            field_embeddings,
            term_embeddings,
            terms,
            threshold,
            top_k,
            cosine_floor,
            edit_similarity,
            out,
        } => {
            let params = AlignParams {
                threshold,
                top_k,
                cosine_floor,
                edit_similarity: match edit_similarity {
                    EditSim::Levenshtein => EditSimilarity::Levenshtein,
                    EditSim::JaroWinkler => EditSimilarity::JaroWinkler,
                },
            };
            let inputs = AlignInputs {
                corpus,
                clusters,
                field_embeddings,
                term_embeddings,
                terms,
            };
            let report = align_from_artifacts(&inputs, &params)?;
            fs::write(&out, report.to_json()?)?;
        }
        Command::Serve {
            run_dir,
            addr,
            journal,
        } => {
            let state = AppState::open(&run_dir, journal.as_deref())?;
            tokio::runtime::Runtime::new()?.block_on(serve(state, addr))?;
        }
        Command::Annotate {
            corpus,
            endpoint,
            api_key,
            options,
            compare: against,
            out,
        } => {
            let corpus = read_corpus_csv(File::open(&corpus)?)?;
            let texts: Vec<String> = corpus.iter().map(|f| f.normalized.clone()).collect();
            let mut config = AnnotatorConfig::new(endpoint);
            config.api_key = api_key;
            config.options = options.into_iter().collect();
            let results = annotate_external(config, &texts)?;
            let comparison = match against {
                Some(p) => Some(compare(
                    &ontoalign::align::AlignmentReport::from_json(&fs::read_to_string(p)?)?,
                    &results,
                )),
                None => None,
            };
            let body = serde_json::json!({ "results": results, "comparison": comparison });
            fs::write(&out, serde_json::to_string_pretty(&body)?)?;
        }
        Command::Run { .. } => unreachable!(),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Command::Run { config } = &cli.command {
        let result = RunConfig::load(config).and_then(|c| run_pipeline(&c));
        return match result {
            Ok(report) => {
                println!("{}", serde_json::to_string_pretty(&report.counts).unwrap_or_default());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(e.exit_code() as u8)
            }
        };
    }
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
