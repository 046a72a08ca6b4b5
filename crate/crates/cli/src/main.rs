use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use weh_cli::config::{RunConfig, SpaceSource};
use weh_cli::pipeline::{self, csv_tables, load, witness_dump};
use weh_cli::report::Report;
use weh_core::dirichlet::FormFile;
use weh_core::mmspace::{vd_constant, SpaceFile};
use weh_core::spaces::GeneratorSpec;
use weh_core::{Error, Result};

#[derive(Parser)]
#[command(
    name = "weh",
    version,
    about = "Condition constants and weak elliptic Harnack checks on finite spaces"
)]
struct Cli {
    /// Worker threads; reports do not depend on this value.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write space.json and form.json from a generator spec.
    Generate {
        /// GeneratorSpec JSON file.
        #[arg(long, conflicts_with = "config", required_unless_present = "config")]
        spec: Option<PathBuf>,
        /// Run config whose space source is a generator.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print a summary of the configured space.
    Inspect {
        #[arg(long)]
        config: PathBuf,
    },
    /// (VD)(RVD)(PI)(FK)(TJ)(Cap)(Gcap)(Nash) pipelines.
    Conditions(RunArgs),
    /// Certificate, chained variants and lemma suites.
    Harnack(RunArgs),
    /// Mean exit time bounds.
    ExitTime(RunArgs),
    /// Oscillation decay of harmonic functions.
    Holder(RunArgs),
    /// Merge reports and write CSV plot tables.
    Report {
        #[arg(long)]
        out: PathBuf,
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; the report goes to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write replay data for every witness.
    #[arg(long)]
    witness_dump: bool,
    /// Check allowed to fail (repeatable), e.g. `--expect-fail PI`.
    #[arg(long = "expect-fail", value_name = "CHECK")]
    expect_fail: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, text)?;
    Ok(())
}

fn run(cmd: Command) -> Result<bool> {
    match cmd {
        Command::Generate { spec, config, out } => {
            let g: GeneratorSpec = match (spec, config) {
                (Some(p), _) => serde_json::from_str(&std::fs::read_to_string(p)?)?,
                (None, Some(p)) => match RunConfig::load(&p)?.space {
                    SpaceSource::Generator(g) => g,
                    SpaceSource::Files { .. } => {
                        return Err(Error::Invalid("config space is not a generator".into()))
                    }
                },
                (None, None) => unreachable!("clap requires one of --spec, --config"),
            };
            let (space, form) = g.build()?;
            write(
                &out.join("space.json"),
                &serde_json::to_string(&SpaceFile::from_space(&space))?,
            )?;
            write(
                &out.join("form.json"),
                &serde_json::to_string(&FormFile::from_form(&form))?,
            )?;
            eprintln!(
                "{}: {} points written to {}",
                g.label(),
                space.n(),
                out.display()
            );
            Ok(true)
        }
        Command::Inspect { config } => {
            let cfg = RunConfig::load(&config)?;
            let loaded = load(&cfg)?;
            let vd = vd_constant(loaded.space());
            let v = serde_json::json!({
                "space": loaded.summary(),
                "ultrametric": loaded.space().is_ultrametric(),
                "c_mu": vd.c_mu,
                "radius_grid": loaded.space().radius_grid().len(),
            });
            println!("{}", serde_json::to_string_pretty(&v)?);
            Ok(true)
        }
        Command::Conditions(a) => run_suite(a, pipeline::run_conditions),
        Command::Harnack(a) => run_suite(a, pipeline::run_harnack),
        Command::ExitTime(a) => run_suite(a, pipeline::run_exit_time),
        Command::Holder(a) => run_suite(a, pipeline::run_holder),
        Command::Report { out, inputs } => {
            let reports = inputs
                .iter()
                .map(|p| Report::load(p))
                .collect::<Result<Vec<_>>>()?;
            let merged = pipeline::run_report(reports)?;
            write(&out.join("report.json"), &merged.to_json())?;
            for (name, body) in csv_tables(&merged)? {
                write(&out.join(name), &body)?;
            }
            Ok(merged.pass)
        }
    }
}

fn run_suite(a: RunArgs, suite: fn(&RunConfig) -> Result<Report>) -> Result<bool> {
    let mut cfg = RunConfig::load(&a.config)?;
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    for name in a.expect_fail {
        if !cfg.expect_fail.contains(&name) {
            cfg.expect_fail.push(name);
        }
    }
    if let Some(o) = a.out {
        cfg.output.dir = Some(o);
    }
    cfg.output.witness_dump |= a.witness_dump;
    cfg.validate()?;
    let rep = suite(&cfg)?;
    for c in &rep.checks {
        let consts: Vec<String> = c
            .constants
            .iter()
            .map(|(k, v)| format!("{k}={v:.6}"))
            .collect();
        eprintln!(
            "{:<12} {:<16} {}",
            c.name,
            format!("{:?}", c.verdict),
            consts.join(" ")
        );
    }
    match &cfg.output.dir {
        Some(dir) => {
            write(&dir.join(format!("{}.json", rep.kind)), &rep.to_json())?;
            if cfg.output.witness_dump {
                let dump = witness_dump(&cfg, &rep)?;
                write(
                    &dir.join(format!("{}-witnesses.json", rep.kind)),
                    &serde_json::to_string_pretty(&dump)?,
                )?;
            }
        }
        None => print!("{}", rep.to_json()),
    }
    Ok(rep.pass)
}
