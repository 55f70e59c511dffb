mod config;
mod output;
mod run;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use serde_json::json;

use config::Experiment;
use output::Output;
use run::RunError;

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

/// Runs one QFI experiment on the long-range iXY chain and writes CSV/JSON outputs.
#[derive(Parser, Debug)]
#[command(name = "ixy", version)]
struct Args {
    /// Experiment to run; may instead be given by the config's "experiment" key.
    experiment: Option<Experiment>,

    /// JSON config file.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output directory (overrides "output_dir").
    #[arg(long)]
    out: Option<PathBuf>,

    /// Override one config key; the value is parsed as JSON, else taken as a string.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,

    /// Worker threads (0 uses all cores).
    #[arg(long, default_value_t = 0)]
    threads: usize,

    /// Print the resolved config as JSON and exit.
    #[arg(long)]
    print_config: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let cfg = match config::resolve(args.experiment, args.config.as_deref(), &args.sets, args.out.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if args.print_config {
        let text = serde_json::to_string_pretty(&cfg).expect("config serializes");
        // Ignore a closed pipe (e.g. `| head`).
        let _ = writeln!(std::io::stdout(), "{text}");
        return ExitCode::SUCCESS;
    }
    if args.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(args.threads).build_global() {
            eprintln!("cannot configure thread pool: {e}");
        }
    }

    let mut out = match Output::create(&cfg.output_dir) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let start = Instant::now();
    let result = run::run(&cfg, &mut out);
    let wall = start.elapsed().as_secs_f64();

    let (status, summary, code) = match result {
        Ok(s) => ("ok", s, ExitCode::SUCCESS),
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                RunError::Model(ixy_core::Error::Domain(_)) => EXIT_CONFIG,
                _ => EXIT_NUMERICAL,
            };
            ("failed", json!({ "error": e.to_string() }), ExitCode::from(code))
        }
    };
    for w in &out.warnings {
        eprintln!("warning: {w}");
    }
    let manifest = json!({
        "tool": "ixy",
        "version": env!("CARGO_PKG_VERSION"),
        "experiment": cfg.experiment().name(),
        "status": status,
        "config": cfg,
        "wall_time_s": wall,
        "threads": rayon::current_num_threads(),
        "warnings": out.warnings,
        "outputs": out.files,
        "summary": summary,
    });
    let path = cfg.output_dir.join("manifest.json");
    if let Err(e) = std::fs::write(
        &path,
        serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n",
    ) {
        eprintln!("error: {}: {e}", path.display());
        return ExitCode::from(EXIT_NUMERICAL);
    }
    code
}
