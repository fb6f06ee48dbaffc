use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use serde_json::json;

use srlb::harness::{
    csv_writer_with_banner, fit_csv, format_significant, run_bench, verify_instance, ExperimentPlan, TRule,
    DEFAULT_SAMPLE_LIMIT,
};
use srlb::incidence::{bound_report, implied_query_bound, DEFAULT_PAIR_BUDGET};
use srlb::range::{load_query_batch, DEFAULT_LEAF_CAPACITY};
use srlb::{normalize_params, Error, Instance};

#[derive(Parser)]
#[command(
    name = "srlb",
    version,
    about = "Grid instances, incidence verifiers and kd-tree benchmarks for simplex range reporting"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance and write it as JSON.
    Gen {
        #[arg(short = 'd')]
        d: u32,
        #[arg(short = 'n')]
        n: u64,
        #[arg(short = 't')]
        t: u64,
        #[arg(long)]
        out: PathBuf,
        /// Write only the parameters; points and hyperplanes are regenerated on load.
        #[arg(long)]
        params_only: bool,
        /// Also store the incidence adjacency.
        #[arg(long)]
        with_adjacency: bool,
    },
    /// Check an instance file: exact richness, pair coverage, containment.
    Verify {
        instance: PathBuf,
        #[arg(long, env = "SRLB_BUDGET", default_value_t = DEFAULT_PAIR_BUDGET)]
        budget: u64,
    },
    /// Benchmark slab queries on a kd-tree over a series of instance sizes.
    Bench {
        #[arg(short = 'd')]
        d: u32,
        /// Comma-separated, strictly increasing point counts.
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<u64>,
        #[arg(long, default_value = "auto")]
        t_rule: TRule,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_LEAF_CAPACITY)]
        leaf_capacity: usize,
        #[arg(long, default_value_t = DEFAULT_SAMPLE_LIMIT)]
        sample_limit: usize,
        /// Run this JSON query batch on every size instead of slab queries.
        #[arg(long)]
        queries: Option<PathBuf>,
        /// Per-query stats CSV.
        #[arg(long)]
        out: PathBuf,
        /// Per-size aggregate CSV [default: <out>.summary.csv]
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Fit log2(mean nodes visited) against log2(n) from a bench CSV.
    Fit { csv: PathBuf },
    /// Evaluate the space/query trade-off certified by an instance.
    Bound {
        #[arg(short = 'd')]
        d: u32,
        #[arg(short = 'n')]
        n: u64,
        #[arg(short = 't')]
        t: u64,
        /// Hypothetical space usage S [default: n]
        #[arg(long)]
        space: Option<f64>,
    },
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        e if e.is_budget() => 3,
        Error::Io(_) | Error::Csv(_) => 1,
        _ => 2,
    }
}

fn summary_path(out: &Path) -> PathBuf {
    let mut name = out.file_stem().unwrap_or_default().to_os_string();
    name.push(".summary.csv");
    out.with_file_name(name)
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Gen {
            d,
            n,
            t,
            out,
            params_only,
            with_adjacency,
        } => {
            let params = normalize_params(d, n, t)?;
            let mut instance = if params_only {
                Instance::params_only(params)
            } else {
                Instance::generate(params)
            };
            if with_adjacency {
                let graph = srlb::harness::incidence_graph_for(&instance)?;
                instance.adjacency = Some(graph.into_adjacency());
            }
            instance.save(&out)?;
            println!("{}", json!({ "params": params, "bound": bound_report(&params) }));
            eprintln!("wrote {}", out.display());
            Ok(0)
        }
        Command::Verify { instance, budget } => {
            let instance = Instance::load(&instance)?;
            let report = verify_instance(&instance, budget)?;
            println!("{}", serde_json::to_string(&report)?);
            Ok(if report.passed() { 0 } else { 2 })
        }
        Command::Bench {
            d,
            sizes,
            t_rule,
            seed,
            leaf_capacity,
            sample_limit,
            queries,
            out,
            summary,
        } => {
            let mut plan = ExperimentPlan::new(d, sizes, t_rule, seed)?;
            plan.leaf_capacity = leaf_capacity;
            plan.sample_limit = sample_limit;
            let batch = queries.map(load_query_batch).transpose()?;
            let banner = format!(
                "srlb bench d={d} t_rule={t_rule} seed={seed} leaf_capacity={leaf_capacity} generated_unix={}",
                unix_now()
            );
            let summary = summary.unwrap_or_else(|| summary_path(&out));
            let mut stats_out = csv_writer_with_banner(BufWriter::new(File::create(&out)?), &banner)?;
            let mut summary_out = csv_writer_with_banner(BufWriter::new(File::create(&summary)?), &banner)?;
            let rows = run_bench(&plan, batch.as_deref(), &mut stats_out, &mut summary_out)?;
            for row in &rows {
                println!(
                    "n={} t={} m={} queries={} mean_nodes_visited={:.2} max_nodes_visited={} k=[{}, {}]",
                    row.n,
                    row.t,
                    row.m,
                    row.queries,
                    row.mean_nodes_visited,
                    row.max_nodes_visited,
                    row.min_k,
                    row.max_k
                );
            }
            eprintln!("wrote {} and {}", out.display(), summary.display());
            Ok(0)
        }
        Command::Fit { csv } => {
            let fit = fit_csv(&csv)?;
            println!("{}", serde_json::to_string(&fit)?);
            Ok(0)
        }
        Command::Bound { d, n, t, space } => {
            let params = normalize_params(d, n, t)?;
            let report = bound_report(&params);
            let space = space.unwrap_or(params.n as f64);
            let fom = report.figure_of_merit;
            let fom_value = *fom.numer() as f64 / *fom.denom() as f64;
            println!("{}", serde_json::to_string(&report)?);
            println!("figure_of_merit = {fom} ({})", format_significant(fom_value, 6));
            println!("exponent = {}", report.exponent);
            println!(
                "implied_query_bound(n = {}, S = {}) = {}",
                params.n,
                format_significant(space, 6),
                format_significant(implied_query_bound(d, params.n, space), 6)
            );
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
