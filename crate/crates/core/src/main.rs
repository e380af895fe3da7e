use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use vibronic_transport::cli::{cmd_iv, cmd_map, cmd_params, cmd_sample, cmd_verify, RunConfig};
use vibronic_transport::Error;

/// Simulates electron transport through single-molecule junctions from
/// vibrational data: gate-parameter derivation, vibronic spectrum sampling,
/// and current/conductance output.
#[derive(Parser)]
#[command(name = "vibronic-transport", version, about)]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum VerifyScale {
    Small,
}

#[derive(Subcommand)]
enum Command {
    /// Derive gate parameters from a molecule file for both processes.
    Params {
        /// Molecule description (JSON).
        #[arg(long)]
        molecule: PathBuf,
        /// Output directory for the parameter files.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Sample vibronic transition energies and write histograms.
    Sample {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Compute a current–voltage curve and the underlying rates.
    Iv {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Compute a differential-conductance map.
    Map {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run the self-verification suites.
    Verify {
        #[arg(long, value_enum, default_value = "small")]
        scale: VerifyScale,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    /// Run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Override the RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the sample count.
    #[arg(long)]
    samples: Option<usize>,
    /// Override the histogram bin count.
    #[arg(long)]
    bins: Option<usize>,
    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn load(&self) -> Result<RunConfig, Error> {
        let mut config = RunConfig::from_path(&self.config)?;
        if let Some(seed) = self.seed {
            config.sampler.seed = seed;
        }
        if let Some(samples) = self.samples {
            config.sampler.sample_count = samples;
        }
        if let Some(bins) = self.bins {
            config.histogram.bins = bins;
        }
        if let Some(out) = &self.out {
            config.output_dir = out.clone();
        }
        Ok(config)
    }
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Input(_) | Error::Io { .. } | Error::Parse { .. } => 2,
        Error::Numerical(_)
        | Error::CutoffTooSmall { .. }
        | Error::UnsupportedState(_)
        | Error::Resource(_) => 3,
        Error::Verification(_) => 4,
    }
}

fn run() -> Result<(), Error> {
    let args = Args::parse();
    match args.command {
        Command::Params { molecule, out } => {
            let output = cmd_params(&molecule, &out)?;
            for d in &output.diagnostics {
                println!(
                    "{}: {} modes, |U_D U_Dᵀ − I|max = {:.3e}, det U_D = {:+.6}, \
                     cond(J) = {:.6}, max|α| = {:.4}, max|r| = {:.4}",
                    d.direction,
                    d.mode_count,
                    d.duschinsky_orthogonality_deviation,
                    d.duschinsky_determinant,
                    d.j_condition_number,
                    d.max_abs_alpha,
                    d.max_abs_squeeze
                );
            }
            for f in &output.files {
                println!("wrote {}", f.display());
            }
            Ok(())
        }
        Command::Sample { run } => {
            let config = run.load()?;
            let output = cmd_sample(&config)?;
            for r in &output.runs {
                println!(
                    "{:?}: captured_mass = {:.9}, frozen bound = {:.3e}, {} samples, \
                     {} out of range",
                    r.direction,
                    r.captured_mass,
                    r.frozen_mass_bound,
                    r.histogram.total_samples,
                    r.histogram.out_of_range
                );
            }
            for f in &output.files {
                println!("wrote {}", f.display());
            }
            Ok(())
        }
        Command::Iv { run } => {
            let config = run.load()?;
            let output = cmd_iv(&config)?;
            for f in &output.files {
                println!("wrote {}", f.display());
            }
            Ok(())
        }
        Command::Map { run } => {
            let config = run.load()?;
            let output = cmd_map(&config)?;
            for f in &output.files {
                println!("wrote {}", f.display());
            }
            Ok(())
        }
        Command::Verify { scale: _ } => {
            let report = cmd_verify();
            print!("{}", report.render());
            if report.passed() {
                Ok(())
            } else {
                Err(Error::Verification(
                    "one or more checks exceeded tolerance".into(),
                ))
            }
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
