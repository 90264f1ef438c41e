use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use baffle_cli::service::DEFAULT_CACHE_BYTES;
use baffle_cli::pipeline::HemoSpec;
use baffle_cli::{cmd_plan, cmd_report, fixtures, report, service};
use baffle_core::phantom::{VentricleParams, VENTRICLE_REFERENCE_AREA};

#[derive(Parser)]
#[command(name = "baffle", version, about = "Intraventricular baffle planning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline and write the final mesh, CSVs, report and manifest.
    Plan {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Summarize a finished run and check its output digests.
    Report {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Write a synthetic ventricle phantom case (meshes, points, config) into a directory.
    Phantom {
        #[arg(long)]
        out: PathBuf,
        /// Target area in cm2; the phantom is scaled to it.
        #[arg(long, default_value_t = VENTRICLE_REFERENCE_AREA)]
        a_target: f64,
    },
    /// Serve the replanning API.
    Serve {
        #[arg(long)]
        port: u16,
        /// Session cache budget in bytes.
        #[arg(long, default_value_t = DEFAULT_CACHE_BYTES)]
        cache_bytes: usize,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("BAFFLE_LOG", "warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Plan { config, out } => match cmd_plan(&config, &out) {
            Ok(manifest) => {
                println!(
                    "wrote {} (watertight {}, min area {:.6} cm2, dp {:.4} mmHg)",
                    out.display(),
                    manifest.topology.watertight,
                    manifest.area_profile.min_area(),
                    manifest.dp_estimate.dp_total
                );
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error [{}]: {}", e.stage, e.message);
                eprintln!("{}", serde_json::to_string_pretty(&e.diagnostics).unwrap_or_default());
                ExitCode::from(e.exit_code() as u8)
            }
        },
        Command::Report { manifest, json } => match cmd_report(&manifest) {
            Ok(summary) => {
                for w in &summary.integrity_warnings {
                    log::warn!("integrity: {w}");
                }
                if json {
                    println!("{}", serde_json::to_string_pretty(&summary).expect("serializable"));
                } else {
                    print!("{}", report::render_text(&summary));
                }
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error [input]: {e}");
                ExitCode::from(2)
            }
        },
        Command::Phantom { out, a_target } => {
            let hemo = HemoSpec {
                cardiac_output: 3.89,
                map: 64.0,
            };
            match fixtures::write_phantom_case(&out, VentricleParams::default(), a_target, &hemo) {
                Ok(config) => {
                    println!("wrote {}", config.display());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error [input]: {e}");
                    ExitCode::from(2)
                }
            }
        }
        Command::Serve { port, cache_bytes } => {
            let runtime = match tokio::runtime::Runtime::new() {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: cannot start runtime: {e}");
                    return ExitCode::from(1);
                }
            };
            match runtime.block_on(service::serve(port, cache_bytes)) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                }
            }
        }
    }
}
