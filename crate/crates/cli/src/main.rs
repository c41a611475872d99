use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ota_cli::{CliError, Format, Overrides};

#[derive(Parser)]
#[command(name = "ota-sim", version, about = "Analog vs digital estimation over a Gaussian MAC")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate and evaluate the grid; write rows plus a metadata sidecar.
    Run(CommonArgs),
    /// Print achievability against both lower bounds.
    Compare(CommonArgs),
    /// Check a config file and exit.
    Validate(CommonArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args)]
struct CommonArgs {
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    #[arg(long)]
    parallel_width: Option<usize>,
}

impl CommonArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            trials: self.trials,
            out_dir: self.out_dir.clone(),
            format: self.format.map(|f| match f {
                FormatArg::Csv => Format::Csv,
                FormatArg::Json => Format::Json,
            }),
            parallel_width: self.parallel_width,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run(args) => {
            let cfg = ota_cli::load_config(&args.config, &args.overrides())?;
            let report = ota_cli::run(&cfg, &args.config)?;
            println!(
                "wrote {} rows to {} (metadata {})",
                report.rows.len(),
                report.output.display(),
                report.sidecar.display()
            );
        }
        Command::Compare(args) => {
            let cfg = ota_cli::load_config(&args.config, &args.overrides())?;
            print!("{}", ota_cli::compare(&cfg)?);
        }
        Command::Validate(args) => {
            let cfg = ota_cli::load_config(&args.config, &args.overrides())?;
            print!("{}", ota_cli::describe(&cfg));
        }
    }
    Ok(())
}
