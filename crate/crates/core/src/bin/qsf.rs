use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qsf::bench::{emit_csv, emit_table, run_experiment, Algorithm, ExperimentConfig, SingleRun};
use qsf::optimizer::StepSchedule;
use qsf::qgaussian::{analytic_moment, sample_standard, MomentSpec};
use qsf::rng::{derive_stream_id, tag, RngStream};
use qsf::{Error, Preset};

const EXIT_CONFIG: u8 = 2;
const EXIT_DIVERGED: u8 = 3;

#[derive(Parser)]
#[command(
    name = "qsf",
    version,
    about = "q-Gaussian smoothed-functional optimization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment grid from a TOML file.
    Run {
        config: PathBuf,
        /// Worker threads (0 = all cores).
        #[arg(long, default_value_t = 0)]
        workers: usize,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Override `base_seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Fill the `seconds` column (makes output run-dependent).
        #[arg(long)]
        timings: bool,
        /// Print the mean±std table to stderr.
        #[arg(long)]
        table: bool,
    },
    /// One optimization run on a preset; prints the final distance and the trajectory.
    Single {
        #[arg(long)]
        q: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value_t = 0.75)]
        gamma: f64,
        #[arg(long, default_value = "gqsf2")]
        algo: String,
        #[arg(long, default_value = "tandem4")]
        preset: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long = "outer", short = 'M', default_value_t = 10_000)]
        outer: usize,
        #[arg(long = "inner", short = 'L', default_value_t = 100)]
        inner: usize,
        /// Record theta every this many outer iterations.
        #[arg(long, default_value_t = 100)]
        every: usize,
        #[arg(long)]
        crn: bool,
    },
    /// Draw standard q-Gaussian samples as CSV.
    Sample {
        #[arg(long)]
        q: f64,
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Closed-form moments next to Monte Carlo estimates.
    Moments {
        #[arg(long)]
        q: f64,
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 200_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::InvalidArgument(_) | Error::Domain { .. } => {
                    ExitCode::from(EXIT_CONFIG)
                }
                _ => ExitCode::FAILURE,
            }
        }
    }
}

fn dispatch(command: Command) -> qsf::Result<ExitCode> {
    match command {
        Command::Run {
            config,
            workers,
            output,
            seed,
            timings,
            table,
        } => {
            let text = fs::read_to_string(&config)
                .map_err(|e| Error::Config(format!("{}: {e}", config.display())))?;
            let mut cfg = ExperimentConfig::from_toml(&text)?;
            if let Some(s) = seed {
                cfg.base_seed = s;
            }
            let exp = cfg.resolve()?;
            let results = run_experiment(&exp, workers)?;
            let csv = emit_csv(&results, timings);
            match output {
                Some(path) => fs::write(&path, csv)
                    .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?,
                None => print!("{csv}"),
            }
            if table {
                eprint!("{}", emit_table(&results, exp.dim()));
            }
            for c in results.iter().filter(|c| c.failures > 0) {
                eprintln!(
                    "{} q={} beta={}: {} of {} runs failed ({})",
                    c.algorithm.name(),
                    c.q,
                    c.beta,
                    c.failures,
                    c.replications,
                    c.failure_messages.first().map(String::as_str).unwrap_or("")
                );
            }
            if results.iter().any(|c| c.failures > 0) {
                return Ok(ExitCode::from(EXIT_DIVERGED));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Single {
            q,
            beta,
            gamma,
            algo,
            preset,
            seed,
            outer,
            inner,
            every,
            crn,
        } => {
            let algorithm: Algorithm = algo.parse()?;
            let p = Preset::by_name(&preset)
                .ok_or_else(|| Error::Config(format!("unknown preset '{preset}'")))?;
            let schedule = StepSchedule::new(gamma).map_err(|e| Error::Config(e.to_string()))?;
            let run = SingleRun {
                algorithm,
                q,
                beta,
                schedule,
                outer_iterations: outer,
                inner_iterations: inner,
                network: &p.network,
                bounds: &p.bounds,
                theta0: &p.theta0,
                seed,
                stream_labels: vec![],
                crn,
                trajectory_every: Some(every.max(1)),
            };
            let result = match run.run() {
                Ok(r) => r,
                Err(e @ Error::Diverged { .. }) => {
                    eprintln!("error: {e}");
                    return Ok(ExitCode::from(EXIT_DIVERGED));
                }
                Err(e) => return Err(e),
            };
            let out = std::io::stdout();
            let mut out = out.lock();
            let _ = writeln!(
                out,
                "# distance = {:.6e}",
                result.distance.unwrap_or(f64::NAN)
            );
            let _ = writeln!(
                out,
                "# wall_seconds = {:.3}",
                result.wall_time.as_secs_f64()
            );
            let header: Vec<String> = (1..=p.theta0.len()).map(|i| format!("theta_{i}")).collect();
            let _ = writeln!(out, "n,{},distance", header.join(","));
            for t in &result.trajectory {
                let theta: Vec<String> = t.theta.iter().map(|x| format!("{x:.6}")).collect();
                let _ = writeln!(
                    out,
                    "{},{},{:.6e}",
                    t.n,
                    theta.join(","),
                    t.distance.unwrap_or(f64::NAN)
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Sample {
            q,
            dim,
            count,
            seed,
        } => {
            let mut stream = RngStream::new(seed, derive_stream_id(&[tag::SAMPLER]));
            let out = std::io::stdout();
            let mut out = out.lock();
            let header: Vec<String> = (1..=dim).map(|i| format!("eta_{i}")).collect();
            let _ = writeln!(out, "{},rho", header.join(","));
            for _ in 0..count {
                let p = sample_standard(q, dim, &mut stream)?;
                let eta: Vec<String> = p.eta().iter().map(|x| format!("{x:.8}")).collect();
                let _ = writeln!(out, "{},{:.8}", eta.join(","), p.rho());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Moments {
            q,
            dim,
            samples,
            seed,
        } => {
            let specs = [
                ("E[eta_1^2]", MomentSpec::single(0, dim, 0, 2)),
                ("E[eta_1^4]", MomentSpec::single(0, dim, 0, 4)),
                ("E[eta_1^2 / rho]", MomentSpec::single(1, dim, 0, 2)),
                ("E[eta_1^4 / rho^2]", MomentSpec::single(2, dim, 0, 4)),
                ("E[1 / rho^2]", MomentSpec::new(2, vec![0; dim])),
            ];
            let mut draws = Vec::with_capacity(samples);
            let mut stream = RngStream::new(seed, derive_stream_id(&[tag::SAMPLER]));
            for _ in 0..samples {
                draws.push(sample_standard(q, dim, &mut stream)?);
            }
            println!(
                "{:<20} {:>14} {:>14} {:>12}",
                "moment", "closed form", "monte carlo", "std err"
            );
            for (name, spec) in specs {
                let exact = match analytic_moment(&spec, q, dim) {
                    Ok(v) => format!("{v:.6}"),
                    Err(_) => "infinite".into(),
                };
                let vals: Vec<f64> = draws
                    .iter()
                    .map(|p| spec.integrand(p.eta(), p.rho()))
                    .collect();
                let (m, s) = qsf::bench::mean_std(&vals);
                let se = s / (vals.len() as f64).sqrt();
                println!("{name:<20} {exact:>14} {m:>14.6} {se:>12.2e}");
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
