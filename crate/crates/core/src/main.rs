use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use deltadrift::cli::{self, FailureKind, Format, Mode, RunError};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Analytic,
    Oracle,
    Compare,
    Sweep,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Analytic => Mode::Analytic,
            ModeArg::Oracle => Mode::Oracle,
            ModeArg::Compare => Mode::Compare,
            ModeArg::Sweep => Mode::Sweep,
        }
    }
}

/// Non-adiabatic transition probabilities with a moving delta coupling.
#[derive(Debug, Parser)]
#[command(name = "deltadrift", version)]
struct Args {
    /// What to run.
    #[arg(value_enum)]
    mode: ModeArg,

    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,

    /// Override a configuration key (`key=value`, dotted keys allowed). Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Output format (overrides the configuration).
    #[arg(long, value_parser = ["csv", "json"])]
    format: Option<String>,

    /// Worker threads for sweeps.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

fn summary_path(out: &Path) -> PathBuf {
    out.with_extension("summary.json")
}

fn execute(args: &Args) -> Result<Option<RunError>, RunError> {
    let io = |e: std::io::Error, what: &Path| RunError::new(FailureKind::Io, format!("{}: {e}", what.display()));
    let text = fs::read_to_string(&args.config).map_err(|e| io(e, &args.config))?;

    let mut overrides = Vec::with_capacity(args.overrides.len() + 3);
    for item in &args.overrides {
        let (key, value) = item.split_once('=').ok_or_else(|| {
            RunError::new(FailureKind::Validation, format!("--set expects key=value, got `{item}`"))
        })?;
        overrides.push((key.trim().to_string(), value.to_string()));
    }
    overrides.push(("mode".into(), Mode::from(args.mode).to_string()));
    if let Some(out) = &args.out {
        overrides.push(("out".into(), out.display().to_string()));
    }
    if let Some(format) = &args.format {
        overrides.push(("format".into(), format.clone()));
    }

    let config = cli::parse_config_with(&text, &overrides)?;
    let report = cli::run(&config, args.jobs)?;
    let body = report.render(config.format)?;

    match &config.out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|e| io(e, dir))?;
            }
            fs::write(path, body).map_err(|e| io(e, path))?;
            if let (Format::Csv, Some(summary)) = (config.format, &report.summary) {
                let path = summary_path(path);
                let mut text = serde_json::to_string_pretty(summary)
                    .map_err(|e| RunError::new(FailureKind::Internal, e.to_string()))?;
                text.push('\n');
                fs::write(&path, text).map_err(|e| io(e, &path))?;
            }
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(body.as_bytes())
                .map_err(|e| io(e, Path::new("<stdout>")))?;
            if let (Format::Csv, Some(summary)) = (config.format, &report.summary) {
                eprintln!("{summary}");
            }
        }
    }
    Ok(report.integrity_failure)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let failure = match execute(&args) {
        Ok(None) => return ExitCode::SUCCESS,
        Ok(Some(err)) | Err(err) => err,
    };
    eprintln!("{}", failure.record());
    ExitCode::from(failure.kind.exit_code() as u8)
}
