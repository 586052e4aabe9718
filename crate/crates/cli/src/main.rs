use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use corb::config::ExperimentConfig;
use corb::experiments::{run_experiment, EXPERIMENTS};
use corb::fitstat::{fit_records, irb_extract, DecayFit};
use corb::gatesets::check_condition;
use corb::io::{read_records, records_to_csv, records_to_json, write_records, OutputFormat};
use corb::noise::avg_gate_fidelity;
use corb::rbsim::{run, Mode};
use corb::specs::parse_set;

/// Coherent randomized benchmarking simulator.
#[derive(Parser)]
#[command(name = "corb", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the twirl condition of a gate set.
    CheckSet {
        /// Set spec, e.g. `pauli:d=2,n=1`.
        set: String,
        #[arg(long)]
        json: bool,
    },
    /// Simulate a benchmarking run and write its records.
    Run(Box<RunArgs>),
    /// Fit `A·χ^m` to a record file, or extract an interleaved gate estimate.
    Fit {
        /// Record file (CSV or JSON); with `--irb`, the reference file.
        file: PathBuf,
        /// Interleaved record file.
        #[arg(long, value_name = "INTERLEAVED")]
        irb: Option<PathBuf>,
        /// Register dimension for the gate fidelity when the file has no config.
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        json: bool,
    },
    /// Run a canned scenario and write its verdict and plot series.
    Experiment {
        /// One of fig5a, fig5b, fig5c, fig5d, control-noise, irb-demo.
        name: String,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// JSON config file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    set: Option<String>,
    #[arg(long)]
    channel: Option<String>,
    #[arg(long)]
    final_channel: Option<String>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    eps_prep: Option<f64>,
    #[arg(long)]
    eps_meas: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    /// Comma-separated sequence lengths.
    #[arg(long, value_delimiter = ',')]
    lengths: Option<Vec<usize>>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    mode: Option<Mode>,
    /// Interleaved gate: a named gate or a matrix file.
    #[arg(long)]
    gate: Option<String>,
    #[arg(long)]
    gate_channel: Option<String>,
    #[arg(long)]
    control_noise_after_inverse: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<OutputFormat>,
}

impl RunArgs {
    fn resolve(self) -> anyhow::Result<(ExperimentConfig, PathBuf)> {
        let (mut cfg, base) = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
                (ExperimentConfig::from_json(&text)?, base)
            }
            None => (ExperimentConfig::default(), PathBuf::from(".")),
        };
        macro_rules! set_if {
            ($($field:ident <- $arg:expr),* $(,)?) => {
                $(if let Some(v) = $arg { cfg.$field = v; })*
            };
        }
        set_if! {
            set <- self.set,
            channel <- self.channel,
            q <- self.q,
            eps_prep <- self.eps_prep,
            eps_meas <- self.eps_meas,
            k <- self.k,
            lengths <- self.lengths,
            repetitions <- self.reps,
            shots <- self.shots,
            seed <- self.seed,
            mode <- self.mode,
            format <- self.format,
        }
        if self.final_channel.is_some() {
            cfg.final_channel = self.final_channel;
        }
        if self.gate.is_some() {
            cfg.gate = self.gate;
        }
        if self.gate_channel.is_some() {
            cfg.gate_channel = self.gate_channel;
        }
        if self.out.is_some() {
            cfg.out = self.out;
        }
        cfg.control_noise_after_inverse |= self.control_noise_after_inverse;
        if self.format.is_none() && self.config.is_none() {
            if let Some(ext) = cfg.out.as_ref().and_then(|p| p.extension()) {
                if ext == "json" {
                    cfg.format = OutputFormat::Json;
                }
            }
        }
        Ok((cfg, base))
    }
}

/// Failure classes mapped onto exit codes.
enum Failure {
    Usage(anyhow::Error),
    Semantic(String),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Usage(e)
    }
}

impl From<corb::Error> for Failure {
    fn from(e: corb::Error) -> Self {
        Failure::Usage(e.into())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(1);
    }
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Semantic(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(2)
        }
    }
}

fn configure_threads() -> anyhow::Result<()> {
    let Ok(raw) = std::env::var("CORB_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .with_context(|| format!("CORB_THREADS must be a positive integer, got `{raw}`"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::CheckSet { set, json } => check_set(&set, json),
        Command::Run(args) => run_cmd(*args),
        Command::Fit { file, irb, dim, json } => fit_cmd(&file, irb.as_deref(), dim, json),
        Command::Experiment { name, out } => experiment_cmd(&name, &out),
    }
}

fn check_set(spec: &str, as_json: bool) -> Result<(), Failure> {
    let set = parse_set(spec)?;
    let report = check_condition(&set)?;
    if as_json {
        let body = json!({
            "set": spec,
            "size": set.len(),
            "passed": report.passed,
            "worst_label": report.worst_label.to_string(),
            "worst_residual": report.worst_residual,
            "tolerance": report.tolerance,
        });
        println!("{}", serde_json::to_string_pretty(&body).map_err(anyhow::Error::from)?);
    } else {
        println!("set: {spec} ({} elements)", set.len());
        println!("condition: {}", if report.passed { "pass" } else { "fail" });
        println!("worst label: {}", report.worst_label);
        println!("worst residual: {:.3e} (tolerance {:.3e})", report.worst_residual, report.tolerance);
    }
    if report.passed {
        Ok(())
    } else {
        Err(Failure::Semantic(format!(
            "condition fails at {} (residual {:.3e})",
            report.worst_label, report.worst_residual
        )))
    }
}

fn run_cmd(args: RunArgs) -> Result<(), Failure> {
    let (cfg, base) = args.resolve()?;
    let run_cfg = cfg.build_in(&base)?;
    let records = run(&run_cfg)?;
    match &cfg.out {
        Some(path) => {
            write_records(path, cfg.format, Some(&cfg), &records)
                .with_context(|| format!("writing {}", path.display()))?;
            eprintln!("wrote {} records to {}", records.len(), path.display());
        }
        None => {
            let text = match cfg.format {
                OutputFormat::Csv => records_to_csv(Some(&cfg), &records)?,
                OutputFormat::Json => records_to_json(Some(&cfg), &records)?,
            };
            print!("{text}");
        }
    }
    Ok(())
}

/// Register dimension from an embedded config, or the explicit flag.
fn register_dim(file: &corb::io::RecordFile, flag: Option<usize>) -> anyhow::Result<usize> {
    if let Some(d) = flag {
        return Ok(d);
    }
    match &file.config {
        Some(cfg) => Ok(parse_set(&cfg.set)?.dim()),
        None => Ok(2),
    }
}

fn fit_file(path: &Path) -> Result<(corb::io::RecordFile, DecayFit), Failure> {
    let file = read_records(path).with_context(|| format!("reading {}", path.display()))?;
    let fit = fit_records(&file.records).with_context(|| format!("fitting {}", path.display()))?;
    Ok((file, fit))
}

fn fit_cmd(path: &Path, irb: Option<&Path>, dim: Option<usize>, as_json: bool) -> Result<(), Failure> {
    let (file, fit) = fit_file(path)?;
    let d = register_dim(&file, dim)?;
    let fidelity = avg_gate_fidelity(fit.chi00, d)?;
    let diverged = |fit: &DecayFit, p: &Path| {
        Failure::Semantic(format!("fit of {} did not converge after {} iterations", p.display(), fit.iterations))
    };
    match irb {
        None => {
            if as_json {
                let body = json!({ "fit": fit, "avg_gate_fidelity": fidelity, "dim": d });
                println!("{}", serde_json::to_string_pretty(&body).map_err(anyhow::Error::from)?);
            } else {
                println!("A: {:.10} ± {:.3e}", fit.amplitude, fit.amplitude_se);
                println!("chi00: {:.10} ± {:.3e}", fit.chi00, fit.chi00_se);
                println!("avg gate fidelity: {fidelity:.10}");
                println!("residual rms: {:.3e} over {} points", fit.residual_rms, fit.points_used);
            }
            if !fit.converged {
                return Err(diverged(&fit, path));
            }
        }
        Some(int_path) => {
            let (_, int_fit) = fit_file(int_path)?;
            let estimate = irb_extract(&fit, &int_fit)?;
            let gate_fidelity = estimate.gate_fidelity(d)?;
            if as_json {
                let body = json!({
                    "reference": fit,
                    "interleaved": int_fit,
                    "estimate": estimate,
                    "gate_fidelity": gate_fidelity,
                });
                println!("{}", serde_json::to_string_pretty(&body).map_err(anyhow::Error::from)?);
            } else {
                println!("reference chi00: {:.10}", estimate.chi00_ref);
                println!("interleaved chi00: {:.10}", estimate.chi00_combined);
                println!("gate chi00: {:.10} ± {:.3e}", estimate.chi00_gate, estimate.bound_e);
                println!("gate fidelity: {gate_fidelity:.10}");
            }
            if !fit.converged {
                return Err(diverged(&fit, path));
            }
            if !int_fit.converged {
                return Err(diverged(&int_fit, int_path));
            }
        }
    }
    Ok(())
}

fn experiment_cmd(name: &str, out: &Path) -> Result<(), Failure> {
    if !EXPERIMENTS.contains(&name) {
        return Err(Failure::Usage(anyhow::anyhow!(
            "unknown experiment `{name}` (known: {})",
            EXPERIMENTS.join(", ")
        )));
    }
    let output = run_experiment(name)?;
    let files = output.write_to(out)?;
    for f in &files {
        println!("{}", f.display());
    }
    if output.verdict.passed() {
        eprintln!("{name}: verdict pass");
        Ok(())
    } else {
        Err(Failure::Semantic(format!("{name}: verdict fail")))
    }
}
