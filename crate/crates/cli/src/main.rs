mod commands;
mod failure;
mod pipeline;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lata_core::ids::Level;
use lata_core::model::Role;


#[derive(Parser)]
#[command(name = "lata", version, about = "Parallel-corpus alignment and annotation")]
struct Cli {
    /// Workspace directory holding the project database.
    #[arg(long, global = true, env = "LATA_WORKSPACE")]
    workspace: Option<PathBuf>,
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum RoleArg {
    Source,
    Target,
}

impl From<RoleArg> for Role {
    fn from(r: RoleArg) -> Role {
        match r {
            RoleArg::Source => Role::Source,
            RoleArg::Target => Role::Target,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum LevelArg {
    Paragraph,
    Sentence,
}

impl From<LevelArg> for Level {
    fn from(l: LevelArg) -> Level {
        match l {
            LevelArg::Paragraph => Level::Paragraph,
            LevelArg::Sentence => Level::Sentence,
        }
    }
}

#[derive(Args)]
#[group(multiple = false)]
struct SegmentMode {
    /// Segment with the rule-based segmenter (default).
    #[arg(long)]
    rules: bool,
    /// Ask the configured model, falling back to the rules.
    #[arg(long)]
    llm: bool,
}

#[derive(Args)]
#[group(multiple = false)]
struct AlignMode {
    /// Length-based alignment (default).
    #[arg(long)]
    baseline: bool,
    /// Ask the configured model, falling back to the baseline.
    #[arg(long)]
    llm: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Create a project.
    Init {
        name: String,
        #[arg(long = "src-lang")]
        src_lang: String,
        #[arg(long = "tgt-lang")]
        tgt_lang: String,
    },
    /// List projects.
    List,
    /// Load a plain-text document into one side of a project.
    Import {
        project: String,
        #[arg(long, value_enum)]
        role: RoleArg,
        #[arg(long)]
        file: PathBuf,
        /// JSON file with document metadata.
        #[arg(long)]
        meta: Option<PathBuf>,
        /// Overwrite an already imported document.
        #[arg(long)]
        replace: bool,
    },
    /// Split every paragraph into sentences.
    Segment {
        project: String,
        #[command(flatten)]
        mode: SegmentMode,
    },
    /// Create alignment links at one level.
    Align {
        project: String,
        #[arg(long, value_enum)]
        level: LevelArg,
        #[command(flatten)]
        mode: AlignMode,
    },
    /// Write the project as a zipped XML bundle.
    Export {
        project: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a bundle or a stored project.
    Validate { target: String },
    /// Revert the last change.
    Undo { project: String },
    /// Re-apply the last reverted change.
    Redo { project: String },
    /// Manage the translation-technique taxonomy.
    Techniques {
        #[command(subcommand)]
        command: TechniqueCommand,
    },
    /// Start the local HTTP API.
    Serve {
        #[arg(long, default_value_t = lata_server::DEFAULT_PORT)]
        port: u16,
        /// Directory with a built editor bundle to serve at `/`.
        #[arg(long)]
        ui_dir: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum TechniqueCommand {
    /// Add a technique, or update the one with the same name.
    Add {
        project: String,
        #[arg(long)]
        name: String,
        #[arg(long, default_value = "")]
        desc: String,
        #[arg(long = "example")]
        examples: Vec<String>,
    },
    List {
        project: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let workspace = lata_store::workspace_dir(cli.workspace.as_deref());
    let result = commands::run(&workspace, cli.command);
    match result {
        Ok(out) => {
            if cli.json {
                println!("{}", serde_json::to_string_pretty(&out.json).expect("json serializes"));
            } else if !out.text.is_empty() {
                println!("{}", out.text);
            }
            ExitCode::from(out.exit)
        }
        Err(f) => {
            if cli.json {
                println!("{}", serde_json::to_string_pretty(&f.to_json()).expect("json serializes"));
            } else {
                eprintln!("error: {}", f.message);
            }
            ExitCode::from(f.exit)
        }
    }
}
