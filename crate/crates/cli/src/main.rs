use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dedact::decompose::{DEFAULT_DECOMPOSITION_ORDERS, DEFAULT_SAGE_ORDERS};
use dedact::scm::sample_scm;
use dedact_cli::config::{Format, OutputConfig};
use dedact_cli::demo::{biomarker_demo_config, census_demo_config, DEFAULT_DEMO_ROWS, DEFAULT_PFI_ORDERS};
use dedact_cli::error::{CliError, EXIT_CONFIG};
use dedact_cli::report::{render_bundle, report};
use dedact_cli::run::{builtin_scm, fmt_f64, load_scm_file, run};
use dedact_cli::{Result, RunConfig};

#[derive(Parser)]
#[command(name = "dedact", version, about = "Direct and associative feature-importance decompositions")]
struct Cli {
    /// Cap on worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a linear SCM to CSV (observed variables, then the target).
    Simulate {
        /// `biomarker`, `census`, or a path to an SCM TOML document.
        #[arg(long)]
        scm: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a config: measures and decompositions.
    Run(RunArgs),
    /// Run only the config's measures.
    Importance(RunArgs),
    /// Run only the config's decompositions.
    Decompose(RunArgs),
    /// Reproduce a reference experiment.
    Demo {
        #[command(subcommand)]
        which: Demo,
    },
    /// Pretty-print a written bundle.
    Report {
        dir: PathBuf,
        /// Include per-context rows of SAGE decompositions.
        #[arg(long)]
        contexts: bool,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config's).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Demo {
    Biomarker {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_DEMO_ROWS)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    Census {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_DEMO_ROWS)]
        n: usize,
        #[arg(long, default_value_t = DEFAULT_SAGE_ORDERS)]
        sage_orders: usize,
        #[arg(long, default_value_t = DEFAULT_DECOMPOSITION_ORDERS)]
        decomp_orders: usize,
        #[arg(long, default_value_t = DEFAULT_PFI_ORDERS)]
        pfi_orders: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn simulate(scm: &str, n: usize, seed: u64, out: &PathBuf) -> Result<()> {
    let model = match scm {
        "biomarker" | "census" => builtin_scm(scm)?,
        path => load_scm_file(path.as_ref())?,
    };
    let s = sample_scm::<f64>(&model, n, seed).map_err(CliError::block("simulate"))?;
    let mut w = csv::Writer::from_path(out).map_err(|e| CliError::Data(format!("{}: {e}", out.display())))?;
    let err = |e: csv::Error| CliError::Data(format!("{}: {e}", out.display()));
    let mut header = s.data.column_names().to_vec();
    header.push(s.target_name.clone());
    w.write_record(&header).map_err(err)?;
    for i in 0..n {
        let mut rec: Vec<String> = s.data.row(i).iter().map(|&v| fmt_f64(v)).collect();
        rec.push(fmt_f64(s.target.values()[i]));
        w.write_record(&rec).map_err(err)?;
    }
    w.flush().map_err(CliError::io(out))
}

fn execute(mut cfg: RunConfig, out: Option<PathBuf>) -> Result<()> {
    if let Some(dir) = out {
        let formats = cfg.output.take().map_or_else(|| vec![Format::Csv, Format::Json], |o| o.formats);
        cfg.output = Some(OutputConfig { directory: dir, formats });
    }
    let bundle = run(&cfg)?;
    match &cfg.output {
        Some(o) => println!("wrote {}", o.directory.display()),
        None => print!("{}", render_bundle(&bundle, false)),
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }
    match cli.command {
        Command::Simulate { scm, n, seed, out } => simulate(&scm, n, seed, &out),
        Command::Run(a) => execute(RunConfig::load(&a.config)?, a.out),
        Command::Importance(a) => {
            let mut cfg = RunConfig::load(&a.config)?;
            cfg.decompositions.clear();
            execute(cfg, a.out)
        }
        Command::Decompose(a) => {
            let mut cfg = RunConfig::load(&a.config)?;
            cfg.measures.clear();
            execute(cfg, a.out)
        }
        Command::Demo { which } => match which {
            Demo::Biomarker { seed, n, out } => execute(biomarker_demo_config(seed, n), out),
            Demo::Census { seed, n, sage_orders, decomp_orders, pfi_orders, out } => {
                execute(census_demo_config(seed, n, sage_orders, decomp_orders, pfi_orders), out)
            }
        },
        Command::Report { dir, contexts } => {
            print!("{}", report(&dir, contexts)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG as u8 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
