use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hpmc_bench::output::{encode_rows, series_csv, PendingFile};
use hpmc_bench::{
    audit_experiment, run_experiment, run_sweep, thread_pool, BenchError, ExperimentSpec, Format,
    Result,
};

#[derive(Parser)]
#[command(
    name = "hpmc-bench",
    version,
    about = "Replicated benchmarks of adaptive importance samplers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every variant of an experiment and write the result table.
    Run(Common),
    /// Run one replicate per variant and check its evaluation counters.
    Audit(Common),
    /// Repeat an experiment over target dimensions and write the series.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated dimensions; overrides the spec's `dims`.
        #[arg(long, value_delimiter = ',')]
        dims: Option<Vec<usize>>,
    },
}

#[derive(Args)]
struct Common {
    /// Experiment spec file.
    #[arg(long)]
    spec: PathBuf,
    /// Seed base; replicate r uses a child stream of it.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicates: Option<usize>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<Format>,
    /// Per-dimension MSE series file.
    #[arg(long)]
    plot_data: Option<PathBuf>,
    /// Worker threads for replicates.
    #[arg(long, env = "HPMC_BENCH_THREADS")]
    threads: Option<usize>,
}

impl Common {
    fn load(&self) -> Result<ExperimentSpec> {
        let mut spec = ExperimentSpec::load(&self.spec)?;
        if let Some(s) = self.seed {
            spec.seed_base = s;
        }
        if let Some(r) = self.replicates {
            spec.replicates = r;
        }
        if let Some(o) = &self.out {
            spec.out = Some(o.clone());
        }
        if let Some(f) = self.format {
            spec.format = f;
        }
        if let Some(p) = &self.plot_data {
            spec.plot_data = Some(p.clone());
        }
        spec.validate()?;
        Ok(spec)
    }
}

fn prepare(path: &Option<PathBuf>) -> Result<Option<PendingFile>> {
    path.as_deref().map(PendingFile::create).transpose()
}

fn deliver(file: Option<PendingFile>, bytes: Vec<u8>) -> Result<()> {
    match file {
        Some(f) => {
            let path: &Path = f.path();
            eprintln!("wrote {}", path.display());
            f.commit(&bytes)
        }
        None => {
            print!("{}", String::from_utf8_lossy(&bytes));
            Ok(())
        }
    }
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(common) => {
            let spec = common.load()?;
            let (out, plot) = (prepare(&spec.out)?, prepare(&spec.plot_data)?);
            let rows = thread_pool(common.threads)?.install(|| run_experiment(&spec))?;
            if let Some(p) = plot {
                p.commit(&series_csv(&rows)?)?;
            }
            deliver(out, encode_rows(&rows, spec.format)?)
        }
        Command::Audit(common) => {
            let spec = common.load()?;
            let out = prepare(&spec.out)?;
            let report = thread_pool(common.threads)?.install(|| audit_experiment(&spec))?;
            for line in report.lines() {
                eprintln!("{line}");
            }
            let mut json =
                serde_json::to_vec_pretty(&report).map_err(|e| BenchError::Spec(e.to_string()))?;
            json.push(b'\n');
            deliver(out, json)
        }
        Command::Sweep { common, dims } => {
            let mut spec = common.load()?;
            if let Some(d) = dims {
                spec.dims = d;
                spec.validate()?;
            }
            let (out, plot) = (prepare(&spec.out)?, prepare(&spec.plot_data)?);
            let rows = thread_pool(common.threads)?.install(|| run_sweep(&spec))?;
            if let Some(p) = plot {
                p.commit(&series_csv(&rows)?)?;
            }
            deliver(out, encode_rows(&rows, spec.format)?)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
