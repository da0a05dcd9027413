// SPDX-License-Identifier: Apache-2.0

//! `cpmr`: validate, format, change and compare process models, run redesign
//! requests through a backend, evaluate survey directories and serve the
//! session API.
//!
//! Exit status: 0 on success, 1 when the input is rejected or a run fails,
//! 2 on bad usage.

use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use cpmr_core::evaluation::{aggregate_records, render_text, write_csv_reports};
use cpmr_core::pipeline::{Approach, Backend, BackendConfig, BackendKind, Expected, MockBackend, Pipeline, Wording};
use cpmr_core::{
    apply_pattern, load_survey, models_equal, parse_dsl, run_evaluation, serialize_dsl, similarity, DslError,
    ProcessModel, StructuredMeaning,
};
use serde_json::{json, Value};

#[derive(Parser, Debug)]
#[command(name = "cpmr", version, about = "Conversational process-model redesign")]
struct Cli {
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a model file against the structural rules.
    Validate { file: PathBuf },
    /// Print the canonical form of a model file.
    Fmt {
        file: PathBuf,
        /// Rewrite the file in place.
        #[arg(long, conflicts_with = "check")]
        write: bool,
        /// Fail when the file is not already canonical.
        #[arg(long)]
        check: bool,
    },
    /// Apply one change pattern deterministically.
    ApplyPattern {
        file: PathBuf,
        /// Structured meaning as JSON, or `@path` to read it from a file.
        #[arg(long)]
        meaning: String,
    },
    /// Run a natural-language change request through a backend.
    Redesign {
        file: PathBuf,
        #[arg(long)]
        request: String,
        #[arg(long, value_enum, default_value_t = Mode::Cpmr)]
        mode: Mode,
        #[arg(long, value_enum, default_value_t = BackendArg::Mock)]
        backend: BackendArg,
        /// Write the prompt/response transcript as JSON lines.
        #[arg(long)]
        transcript: Option<PathBuf>,
    },
    /// Similarity of two models and whether they are equal.
    Compare { a: PathBuf, b: PathBuf },
    /// Run a survey directory and write the report tables.
    Eval {
        dir: PathBuf,
        /// Repeat or comma-separate to run several backends.
        #[arg(long, value_enum, value_delimiter = ',', default_value = "mock")]
        backend: Vec<BackendArg>,
        #[arg(long, value_enum, default_value_t = EvalMode::Both)]
        mode: EvalMode,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        /// Report directory for csv; file for text (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write every run's transcript as JSON lines.
        #[arg(long)]
        transcripts: Option<PathBuf>,
    },
    /// Serve the session API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
        /// Keep session histories in this directory.
        #[arg(long)]
        persist: Option<PathBuf>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Mode {
    Baseline,
    Cpmr,
}

impl From<Mode> for Approach {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Baseline => Approach::Baseline,
            Mode::Cpmr => Approach::Cpmr,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum EvalMode {
    Baseline,
    Cpmr,
    Both,
}

impl EvalMode {
    fn approaches(self) -> Vec<Approach> {
        match self {
            EvalMode::Baseline => vec![Approach::Baseline],
            EvalMode::Cpmr => vec![Approach::Cpmr],
            EvalMode::Both => vec![Approach::Baseline, Approach::Cpmr],
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum BackendArg {
    Mock,
    Llm,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Csv,
    Text,
}

/// A rejected input or failed run; printed to stderr, exit status 1.
#[derive(Debug)]
struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Outcome {
    let json = cli.json;
    match cli.command {
        Command::Validate { file } => validate(&file, json),
        Command::Fmt { file, write, check } => fmt(&file, write, check, json),
        Command::ApplyPattern { file, meaning } => apply(&file, &meaning, json),
        Command::Redesign { file, request, mode, backend, transcript } => {
            redesign(&file, &request, mode.into(), backend, transcript.as_deref(), json)
        }
        Command::Compare { a, b } => compare(&a, &b, json),
        Command::Eval { dir, backend, mode, format, out, transcripts } => {
            eval(&dir, &backend, mode, format, out.as_deref(), transcripts.as_deref(), json)
        }
        Command::Serve { port, host, persist } => serve(SocketAddr::new(host, port), persist),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn load_model(path: &Path) -> Result<ProcessModel, Failure> {
    parse_dsl(&read(path)?).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn print_json(value: &Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("values always serialize"));
}

fn validate(file: &Path, json: bool) -> Outcome {
    let text = read(file)?;
    let (syntax, diagnostics) = match parse_dsl(&text) {
        Ok(_) => (None, Vec::new()),
        Err(e @ DslError::Syntax { .. }) => (Some(e.to_string()), Vec::new()),
        Err(DslError::Invalid(d)) => (None, d),
    };
    let valid = syntax.is_none() && diagnostics.is_empty();
    if json {
        print_json(&json!({
            "file": file.display().to_string(),
            "valid": valid,
            "syntax_error": syntax,
            "diagnostics": diagnostics
                .iter()
                .map(|d| json!({"code": d.code.as_str(), "path": d.path.to_string(), "message": d.message}))
                .collect::<Vec<_>>(),
        }));
    } else if valid {
        println!("{}: ok", file.display());
    } else {
        for d in &diagnostics {
            eprintln!("{}: {d}", file.display());
        }
    }
    match (valid, syntax) {
        (true, _) => Ok(()),
        (false, Some(s)) => Err(Failure(format!("{}: {s}", file.display()))),
        (false, None) => Err(Failure(format!("{}: {} violation(s)", file.display(), diagnostics.len()))),
    }
}

fn fmt(file: &Path, write: bool, check: bool, json: bool) -> Outcome {
    let text = read(file)?;
    let canonical = serialize_dsl(&parse_dsl(&text).map_err(|e| Failure(format!("{}: {e}", file.display())))?);
    let changed = canonical != text;
    if write && changed {
        std::fs::write(file, &canonical).map_err(|e| Failure(format!("{}: {e}", file.display())))?;
    }
    if json {
        print_json(&json!({"file": file.display().to_string(), "changed": changed, "model": canonical}));
    } else if !write && !check {
        print!("{canonical}");
    }
    if check && changed {
        return Err(Failure(format!("{} is not in canonical form", file.display())));
    }
    Ok(())
}

fn apply(file: &Path, meaning: &str, json: bool) -> Outcome {
    let model = load_model(file)?;
    let meaning_text = match meaning.strip_prefix('@') {
        Some(path) => read(Path::new(path))?,
        None => meaning.to_string(),
    };
    let meaning = StructuredMeaning::from_json(&meaning_text)?;
    let changed = apply_pattern(&model, &meaning)?;
    let dsl = serialize_dsl(&changed);
    if json {
        print_json(&json!({"pattern": meaning.pattern(), "model": dsl}));
    } else {
        print!("{dsl}");
    }
    Ok(())
}

fn build_backend(kind: BackendArg) -> Result<Box<dyn Backend>, Failure> {
    match kind {
        BackendArg::Mock => Ok(Box::new(MockBackend::new())),
        BackendArg::Llm => Ok(BackendConfig::from_env(BackendKind::Llm)?.build()?),
    }
}

fn redesign(
    file: &Path,
    request: &str,
    approach: Approach,
    backend: BackendArg,
    transcript: Option<&Path>,
    json: bool,
) -> Outcome {
    let model = load_model(file)?;
    let wording = Wording::new(request).map_err(|_| Failure("the request must not be empty".into()))?;
    let backend = build_backend(backend)?;
    let trace = Pipeline::new(backend.as_ref())
        .run(approach, &model, &wording, &Expected::default())
        .map_err(|f| Failure(f.error.to_string()))?;
    if let Some(path) = transcript {
        std::fs::write(path, trace.transcript_lines()).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
    }
    let dsl = trace.aao.as_ref().map(serialize_dsl);
    if json {
        print_json(&json!({
            "approach": trace.approach,
            "flags": trace.flags(),
            "identified": trace.identified,
            "meaning": trace.meaning,
            "error": trace.error,
            "model": dsl,
        }));
    } else {
        match trace.identified {
            Some(p) => println!("{} {} {}", trace.flags(), p, p.name()),
            None => println!("{}", trace.flags()),
        }
        if let Some(dsl) = &dsl {
            print!("{dsl}");
        }
    }
    match dsl {
        Some(_) => Ok(()),
        None => Err(Failure(trace.error.unwrap_or_else(|| "no model was produced".into()))),
    }
}

fn compare(a: &Path, b: &Path, json: bool) -> Outcome {
    let (ma, mb) = (load_model(a)?, load_model(b)?);
    let score = similarity(&ma, &mb).value();
    let equal = models_equal(&ma, &mb);
    if json {
        print_json(&json!({"similarity": score, "equal": equal}));
    } else {
        println!("{score:?} {}", if equal { "equal" } else { "different" });
    }
    Ok(())
}

fn eval(
    dir: &Path,
    backends: &[BackendArg],
    mode: EvalMode,
    format: Format,
    out: Option<&Path>,
    transcripts: Option<&Path>,
    json: bool,
) -> Outcome {
    let records = load_survey(dir)?;
    let mut kinds = backends.to_vec();
    kinds.dedup();
    let built = kinds.iter().map(|k| build_backend(*k)).collect::<Result<Vec<_>, _>>()?;
    let handles: Vec<&dyn Backend> = built.iter().map(|b| b.as_ref()).collect();
    let runs = run_evaluation(&records, &handles, &mode.approaches())?;
    if let Some(path) = transcripts {
        let lines: String = runs
            .iter()
            .flat_map(|r| &r.runs)
            .flat_map(|run| run.baseline.iter().chain(&run.cpmr))
            .map(|t| t.transcript_lines())
            .collect();
        std::fs::write(path, lines).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
    }
    let report = aggregate_records(&runs)?;

    let written = match format {
        Format::Csv => {
            let out = out.map(Path::to_path_buf).unwrap_or_else(|| dir.join("reports"));
            write_csv_reports(&report, &out).map_err(|e| Failure(format!("{}: {e}", out.display())))?
        }
        Format::Text => match out {
            Some(path) => {
                std::fs::write(path, render_text(&report)).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
                vec![path.to_path_buf()]
            }
            None if !json => {
                print!("{}", render_text(&report));
                Vec::new()
            }
            None => Vec::new(),
        },
    };
    if json {
        print_json(&json!({
            "records": records.len(),
            "written": written.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
            "report": report,
        }));
    } else {
        for path in &written {
            eprintln!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn serve(addr: SocketAddr, persist: Option<PathBuf>) -> Outcome {
    let store = cpmr_service::open_store(persist)?;
    let mut state = cpmr_service::AppState::new(store).with_backend("mock", Arc::new(MockBackend::new()));
    match BackendConfig::from_env(BackendKind::Llm).and_then(|c| c.build()) {
        Ok(llm) => state = state.with_backend("llm", Arc::from(llm)),
        Err(e) => eprintln!("llm backend disabled: {e}"),
    }
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    eprintln!("listening on http://{addr}");
    runtime.block_on(cpmr_service::serve(addr, state))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use clap::CommandFactory;

    use super::*;

    #[test]
    fn command_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn eval_mode_approaches() {
        assert_eq!(EvalMode::Both.approaches(), [Approach::Baseline, Approach::Cpmr]);
        assert_eq!(EvalMode::Cpmr.approaches(), [Approach::Cpmr]);
    }
}
