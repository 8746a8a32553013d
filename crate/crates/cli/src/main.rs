use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::error;

use wfdrift_cli::{report, run, CliError, RunConfig};

#[derive(Parser)]
#[command(
    name = "wfdrift",
    version,
    about = "Particle solver for Wright-Fisher genetic drift"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one or more configurations; independent runs execute in parallel.
    Run {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
    },
    /// Print a summary table of finished runs as CSV.
    Report {
        configs: Vec<PathBuf>,
        /// Write the table here instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Check configurations without running them.
    Validate {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
    },
}

fn fail(e: &CliError) -> u8 {
    error!("{e}");
    eprintln!("error: {e}");
    if let Some(report) = e.newton_report() {
        if let Ok(json) = serde_json::to_string_pretty(report) {
            eprintln!("{json}");
        }
    }
    e.exit_code() as u8
}

fn load_all(paths: &[PathBuf]) -> Result<Vec<RunConfig>, CliError> {
    paths.iter().map(|p| RunConfig::load(p)).collect()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Validate { configs } => match load_all(&configs) {
            Ok(_) => {
                for p in &configs {
                    println!("{}: ok", p.display());
                }
                0
            }
            Err(e) => fail(&e),
        },
        Command::Run { configs } => match load_all(&configs) {
            Err(e) => fail(&e),
            Ok(cfgs) => {
                let results: Vec<_> = std::thread::scope(|scope| {
                    let handles: Vec<_> =
                        cfgs.iter().map(|c| scope.spawn(move || run(c))).collect();
                    handles
                        .into_iter()
                        .map(|h| h.join().expect("run panicked"))
                        .collect()
                });
                let mut code = 0;
                for (cfg, r) in cfgs.iter().zip(results) {
                    match r {
                        Ok(s) => println!(
                            "{}: {} steps in {:.2} s{}",
                            cfg.output_dir.display(),
                            s.steps,
                            s.wall_time_seconds,
                            if s.steady { " (steady)" } else { "" }
                        ),
                        Err(e) => code = code.max(fail(&e)),
                    }
                }
                code
            }
        },
        Command::Report { configs, output } => match load_all(&configs) {
            Err(e) => fail(&e),
            Ok(cfgs) => {
                // skipped runs are logged as warnings by report_table
                let (rows, _skipped) = wfdrift_cli::report_table(&cfgs);
                let table = report::render(&rows);
                match output {
                    Some(path) => match std::fs::write(&path, table) {
                        Ok(()) => 0,
                        Err(source) => fail(&CliError::Io { path, source }),
                    },
                    None => {
                        print!("{table}");
                        0
                    }
                }
            }
        },
    };
    ExitCode::from(code)
}
