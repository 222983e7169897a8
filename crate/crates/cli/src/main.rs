use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand as ClapSubcommand};
use gaugelink::config::{self, Params, Subcommand};
use gaugelink::{recipes, AppError};

#[derive(Parser)]
#[command(name = "gaugelink", version, about = "Impurity-mediated tunneling, quantum link models and condensate transfer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// JSON config; omitted means all defaults
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides `output_dir` from the config
    #[arg(long)]
    output: Option<PathBuf>,
    /// Print the filled-in default parameters and exit
    #[arg(long)]
    print_defaults: bool,
}

#[derive(ClapSubcommand)]
enum Command {
    /// Double-well eigenvalues
    Spectrum(RunArgs),
    /// Four-level correlated-hopping dynamics
    Fourlevel(RunArgs),
    /// Particle-impurity Schrodinger dynamics
    Tdse(RunArgs),
    /// Lowest levels of the quantum link chain
    LatticeSpectrum(RunArgs),
    /// Quench dynamics of the quantum link chain
    LatticeQuench(RunArgs),
    /// Two-mode product-state residuals
    Josephson(RunArgs),
    /// Condensate mean-field dynamics
    Meanfield(RunArgs),
    /// List bundled recipes, print one, or run one
    Recipes {
        /// Print the recipe's config
        #[arg(long)]
        show: Option<String>,
        /// Run the recipe
        #[arg(long)]
        run: Option<String>,
        #[arg(long, default_value = "output")]
        output: PathBuf,
    },
}

fn run_subcommand(sub: Subcommand, args: RunArgs) -> Result<(), AppError> {
    if args.print_defaults {
        let doc = serde_json::json!({
            "subcommand": sub,
            "parameters": Params::defaults(sub).to_value(),
            "sweep": [],
            "output_dir": "output",
        });
        println!("{}", serde_json::to_string_pretty(&doc).expect("json"));
        return Ok(());
    }
    let mut cfg = match &args.config {
        Some(path) => config::parse_config(path, Some(sub))?,
        None => config::parse_config_str("{}", Some(sub))?,
    };
    if let Some(dir) = args.output {
        cfg.output_dir = dir;
    }
    report(gaugelink::execute(&cfg)?);
    Ok(())
}

fn report(m: gaugelink::output::RunManifest) {
    for o in &m.outputs {
        println!("{}/{}  rows={}  sha256={}", m.config.output_dir.display(), o.file, o.rows, o.sha256);
    }
    println!("wall time {:.2} s", m.wall_time_seconds);
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Spectrum(a) => run_subcommand(Subcommand::Spectrum, a),
        Command::Fourlevel(a) => run_subcommand(Subcommand::Fourlevel, a),
        Command::Tdse(a) => run_subcommand(Subcommand::Tdse, a),
        Command::LatticeSpectrum(a) => run_subcommand(Subcommand::LatticeSpectrum, a),
        Command::LatticeQuench(a) => run_subcommand(Subcommand::LatticeQuench, a),
        Command::Josephson(a) => run_subcommand(Subcommand::Josephson, a),
        Command::Meanfield(a) => run_subcommand(Subcommand::Meanfield, a),
        Command::Recipes { show, run, output } => match (show, run) {
            (Some(name), _) => match recipes::find(&name) {
                Some(r) => {
                    print!("{}", r.text);
                    Ok(())
                }
                None => Err(gaugelink::recipe_config(&name, &output).unwrap_err().into()),
            },
            (None, Some(name)) => gaugelink::recipe_config(&name, &output)
                .map_err(AppError::from)
                .and_then(|cfg| gaugelink::execute(&cfg))
                .map(report),
            (None, None) => {
                for r in recipes::RECIPES {
                    println!("{:<18} {}", r.name, r.target);
                }
                Ok(())
            }
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
