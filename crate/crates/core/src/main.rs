use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use tunneltime::config::{RunConfig, Source, PRESET_NAMES};
use tunneltime::propagator::Precision;
use tunneltime::run::{self, RunOutput};

#[derive(Parser)]
#[command(
    name = "tunneltime",
    version,
    about = "Dirac tunneling-time distributions and first-click statistics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Flat TOML config whose keys match the run configuration fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in parameter set.
    #[arg(long, value_parser = PRESET_NAMES)]
    preset: Option<String>,
    #[arg(long, value_parser = ["std", "ext"])]
    precision: Option<String>,
    /// Output directory (overrides `out_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Exact flux P(t), C(t), C_trans and floor.
    Exact(Common),
    /// Steepest-descent flux and τ♯ traces.
    Sda(Common),
    /// Frozen Gaussian model and large-N first-click analytics.
    Frozen(Common),
    /// First-click densities for N particles.
    Firstclick {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = ["exact", "sda", "frozen", "photon"])]
        source: Option<String>,
    },
    /// Re τ(p) contour field with the saddle path.
    Taumap(Common),
    /// Re-check output headers against content.
    Verify(Common),
    /// Print the built-in presets.
    Presets,
}

impl Common {
    fn resolve(&self) -> anyhow::Result<(RunConfig, PathBuf)> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(_), Some(_)) => bail!("give either --config or --preset, not both"),
            (Some(path), None) => {
                RunConfig::load(path).with_context(|| format!("loading {}", path.display()))?
            }
            (None, Some(name)) => RunConfig::preset(name)?,
            (None, None) => RunConfig::fig1_bottom(),
        };
        if let Some(p) = &self.precision {
            cfg.precision = p.parse::<Precision>()?;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        let out = self
            .out
            .clone()
            .unwrap_or_else(|| PathBuf::from(&cfg.out_dir));
        Ok((cfg, out))
    }
}

fn report(out: &RunOutput) {
    for (k, v) in &out.summary {
        println!("{k}: {v}");
    }
    for f in &out.files {
        println!("wrote {}", f.display());
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn real_main() -> anyhow::Result<ExitCode> {
    let cli = Cli::parse();
    let out = match cli.command {
        Command::Exact(c) => {
            let (cfg, dir) = c.resolve()?;
            run::run_exact(&cfg, &dir).context("exact run")?
        }
        Command::Sda(c) => {
            let (cfg, dir) = c.resolve()?;
            run::run_sda(&cfg, &dir).context("steepest-descent run")?
        }
        Command::Frozen(c) => {
            let (cfg, dir) = c.resolve()?;
            run::run_frozen(&cfg, &dir).context("frozen-model run")?
        }
        Command::Firstclick { common, source } => {
            let (mut cfg, dir) = common.resolve()?;
            if let Some(s) = source {
                cfg.source = s.parse::<Source>()?;
            }
            run::run_firstclick(&cfg, &dir).context("first-click run")?
        }
        Command::Taumap(c) => {
            let (cfg, dir) = c.resolve()?;
            run::run_taumap(&cfg, &dir).context("contour-map run")?
        }
        Command::Verify(c) => {
            let explicit = c.config.is_some() || c.preset.is_some();
            let (cfg, dir) = c.resolve()?;
            let checks = run::verify(&dir, explicit.then_some(&cfg))?;
            let mut failed = false;
            for v in &checks {
                if v.ok() {
                    println!("ok   {}", v.file);
                } else {
                    failed = true;
                    for p in &v.problems {
                        println!("FAIL {}: {p}", v.file);
                    }
                }
            }
            if checks.is_empty() {
                println!("no CSV files in {}", dir.display());
            }
            return Ok(if failed {
                ExitCode::FAILURE
            } else {
                ExitCode::SUCCESS
            });
        }
        Command::Presets => {
            for name in PRESET_NAMES {
                println!("# {name}\n{}", RunConfig::preset(name)?.to_toml_string());
            }
            return Ok(ExitCode::SUCCESS);
        }
    };
    report(&out);
    Ok(ExitCode::SUCCESS)
}
