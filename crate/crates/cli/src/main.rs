use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use preciseum_cli::{
    cmd_arcsin, cmd_matmul_bounds, cmd_nn_train, cmd_quadratic, BoundsOptions, CliError,
    DemoReport, Dist, Method,
};

#[derive(Parser)]
#[command(name = "preciseum", version, about = "Exact-bit tracking demos")]
struct Cli {
    /// Print JSON instead of a text table.
    #[arg(long, global = true)]
    json: bool,
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Roots of a·x² + b·x + c with unreliable digits masked.
    Quadratic {
        #[arg(long, default_value = "1", allow_hyphen_values = true)]
        a: String,
        #[arg(long, default_value = "1000", allow_hyphen_values = true)]
        b: String,
        #[arg(long, default_value = "-2e-11", allow_hyphen_values = true)]
        c: String,
        #[arg(long, value_enum, default_value_t = Method::Stable)]
        method: Method,
    },
    /// asin of a value known to a number of decimal digits.
    Arcsin {
        #[arg(long, default_value = "0.999999", allow_hyphen_values = true)]
        x: String,
        #[arg(long, default_value_t = 6)]
        digits: u32,
    },
    /// Tightness and timing of the matrix-product bounds.
    MatmulBounds {
        #[arg(long, default_value_t = 8)]
        n: usize,
        #[arg(long, value_enum, default_value_t = Dist::Uniform)]
        dist: Dist,
        /// Hölder exponents, comma separated.
        #[arg(long, value_delimiter = ',', default_values_t = [2.0, 4.0, 8.0])]
        p: Vec<f64>,
        /// Write the generated operands as XARR1.
        #[arg(long)]
        save: Option<PathBuf>,
        /// Read the operands from an XARR1 file instead of generating them.
        #[arg(long)]
        load: Option<PathBuf>,
    },
    /// Train a small network and log loss precision per epoch.
    NnTrain {
        #[arg(long, default_value_t = 200)]
        epochs: usize,
        #[arg(long, default_value_t = 8)]
        width: usize,
    },
}

fn run(cli: &Cli) -> Result<DemoReport, CliError> {
    match &cli.command {
        Command::Quadratic { a, b, c, method } => cmd_quadratic(a, b, c, *method),
        Command::Arcsin { x, digits } => cmd_arcsin(x, *digits),
        Command::MatmulBounds { n, dist, p, save, load } => cmd_matmul_bounds(&BoundsOptions {
            n: *n,
            dist: *dist,
            seed: cli.seed,
            p_list: p.clone(),
            save: save.clone(),
            load: load.clone(),
        }),
        Command::NnTrain { epochs, width } => cmd_nn_train(*epochs, *width, cli.seed),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(report) => {
            if cli.json {
                println!("{}", report.to_json());
            } else {
                print!("{}", report.to_table());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
