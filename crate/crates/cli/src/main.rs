use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qhv_cli::{atom_cap_from_env, demos, emit, parse_scenario, run, Format, RunOptions};

#[derive(Parser)]
#[command(name = "qhv", version, about = "Check symmetrized-measure hidden-variable scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every query in a scenario file.
    Run {
        file: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Parse and validate a scenario file without running it.
    Validate { file: PathBuf },
    /// Run a bundled scenario. `qhv demo list` prints the names.
    Demo {
        name: String,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Human)]
    format: Format,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

const USAGE_ERROR: u8 = 2;

fn fail(message: impl std::fmt::Display) -> ExitCode {
    eprintln!("qhv: {message}");
    ExitCode::from(USAGE_ERROR)
}

fn execute(text: &str, output: &OutputArgs) -> ExitCode {
    let doc = match parse_scenario(text) {
        Ok(d) => d,
        Err(e) => return fail(e),
    };
    let atom_cap = match atom_cap_from_env() {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    let report = match run(&doc, &RunOptions { seed: output.seed, atom_cap }) {
        Ok(r) => r,
        Err(e) => return fail(e),
    };
    let rendered = emit(&report, output.format);
    match &output.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, rendered) {
                return fail(format_args!("{}: {e}", path.display()));
            }
        }
        None => print!("{rendered}"),
    }
    ExitCode::from(report.exit_code() as u8)
}

fn read(path: &PathBuf) -> Result<String, ExitCode> {
    std::fs::read_to_string(path).map_err(|e| fail(format_args!("{}: {e}", path.display())))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { file, output } => match read(&file) {
            Ok(text) => execute(&text, &output),
            Err(code) => code,
        },
        Command::Validate { file } => match read(&file).map(|t| parse_scenario(&t)) {
            Ok(Ok(doc)) => {
                println!("{}: ok, {} queries", file.display(), doc.queries.len());
                ExitCode::SUCCESS
            }
            Ok(Err(e)) => fail(e),
            Err(code) => code,
        },
        Command::Demo { name, output } => {
            if name == "list" {
                for n in demos::demo_names() {
                    println!("{n}");
                }
                return ExitCode::SUCCESS;
            }
            match demos::demo(&name) {
                Some(text) => execute(text, &output),
                None => fail(format_args!(
                    "unknown demo {name:?}; available: {}",
                    demos::demo_names().collect::<Vec<_>>().join(", ")
                )),
            }
        }
    }
}
