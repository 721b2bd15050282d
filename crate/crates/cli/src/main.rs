//! Command-line surface over the pipeline: collect (or simulate) a plan into
//! datasets, extract and validate views, check policy, and emit reports.
//!
//! Exit codes: 0 success, 1 usage error, 2 policy denial, 3 data or storage
//! error. Diagnostics go to standard error; machine output goes to files or
//! standard output only.

mod commands;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

use poliview_core::analytics::report::ReportFormat;
use poliview_core::policy::Purpose;

use commands::Usage;

#[derive(Parser)]
#[command(name = "poliview", version, about = "Political web data pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a collection plan and store the harvest.
    Collect(CollectArgs),
    /// Run a plan as a deterministic simulation: virtual clock, scripted
    /// providers only.
    Simulate(CollectArgs),
    /// Build, annotate, or inspect dataset views.
    #[command(subcommand)]
    View(ViewCommand),
    /// Evaluate policy rules over a dataset.
    #[command(subcommand)]
    Policy(PolicyCommand),
    /// Emit campaign reports.
    #[command(subcommand)]
    Report(ReportCommand),
}

#[derive(Args)]
struct CollectArgs {
    /// Collection plan (JSON). Scripts resolve relative to this file.
    #[arg(long)]
    plan: PathBuf,
    /// Directory receiving one dataset subdirectory per task dataset, plus
    /// run_report.json and cost_ledger.csv.
    #[arg(long)]
    out_root: PathBuf,
}

#[derive(Subcommand)]
enum ViewCommand {
    /// Profile a dataset into a view file.
    Extract {
        /// Dataset directory.
        #[arg(long)]
        dataset: PathBuf,
        /// View configuration (JSON); defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Where to write the view.
        #[arg(long)]
        out: PathBuf,
        /// Fold newly collected documents into the existing view at --out
        /// instead of starting over.
        #[arg(long)]
        merge: bool,
    },
    /// Record an analyst annotation on a view.
    Validate {
        #[arg(long)]
        view: PathBuf,
        /// Confirm this attribute path.
        #[arg(long, group = "action")]
        confirm: Option<String>,
        /// Confirm every attribute path in one pass.
        #[arg(long, group = "action")]
        confirm_all: bool,
        /// Override an attribute's type, as path=type.
        #[arg(long, group = "action", value_name = "PATH=TYPE")]
        override_type: Option<String>,
        /// Attach a free-text note, as path=text.
        #[arg(long, group = "action", value_name = "PATH=TEXT")]
        note: Option<String>,
        /// Who is annotating.
        #[arg(long)]
        analyst: String,
        /// Annotation timestamp (RFC 3339); defaults to now.
        #[arg(long)]
        at: Option<String>,
        /// Write here instead of back onto --view.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a view as a table.
    Show {
        #[arg(long)]
        view: PathBuf,
    },
}

#[derive(Subcommand)]
enum PolicyCommand {
    /// Evaluate every collected document for a purpose and summarize the
    /// outcomes. Exits 2 when anything is denied.
    Check {
        #[arg(long)]
        dataset: PathBuf,
        /// Ruleset (JSON list); the built-in default applies when omitted.
        #[arg(long)]
        ruleset: Option<PathBuf>,
        #[arg(long)]
        purpose: Purpose,
        /// View configuration supplying provider privacy levels.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write the audit trail here (JSON lines).
        #[arg(long)]
        audit: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ReportCommonArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Candidate roster (JSON).
    #[arg(long)]
    roster: PathBuf,
    /// View configuration supplying attribution paths and privacy levels.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    format: ReportFormat,
    /// Directory receiving the report files.
    #[arg(long)]
    out: PathBuf,
    /// Ruleset gating the emission; the built-in default applies when
    /// omitted.
    #[arg(long)]
    ruleset: Option<PathBuf>,
    /// Purpose the emission is gated for.
    #[arg(long, default_value = "analyze")]
    purpose: Purpose,
}

#[derive(Subcommand)]
enum ReportCommand {
    /// Per-candidate campaign profiles.
    Profile {
        #[command(flatten)]
        common: ReportCommonArgs,
        /// Restrict to one candidate.
        #[arg(long)]
        candidate: Option<String>,
    },
    /// Party-level aggregates.
    Party {
        #[command(flatten)]
        common: ReportCommonArgs,
        /// Restrict to one party.
        #[arg(long)]
        party: Option<String>,
    },
    /// Cross-country comparison: countries, parties, profiles, topics,
    /// timelines, and the reconciliation tally.
    Compare {
        #[command(flatten)]
        common: ReportCommonArgs,
        /// How many top hashtags each platform contributes.
        #[arg(long)]
        top_n: Option<usize>,
    },
}

fn main() {
    let filter = tracing_subscriber::EnvFilter::try_from_default_env()
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("warn"));
    tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .init();
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests land here too; only real parse
            // failures are usage errors.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            exit_code(&err)
        }
    }
}

fn exit_code(err: &anyhow::Error) -> i32 {
    if err.downcast_ref::<Usage>().is_some() {
        return 1;
    }
    if let Some(poliview_core::Error::PolicyDenied { .. }) =
        err.downcast_ref::<poliview_core::Error>()
    {
        return 2;
    }
    3
}

fn dispatch(cli: Cli) -> anyhow::Result<i32> {
    match cli.command {
        Command::Collect(args) => commands::collect(&args.plan, &args.out_root, false)?,
        Command::Simulate(args) => commands::collect(&args.plan, &args.out_root, true)?,
        Command::View(cmd) => match cmd {
            ViewCommand::Extract {
                dataset,
                config,
                out,
                merge,
            } => commands::view_extract(&dataset, config.as_deref(), &out, merge)?,
            ViewCommand::Validate {
                view,
                confirm,
                confirm_all,
                override_type,
                note,
                analyst,
                at,
                out,
            } => commands::view_validate(commands::ValidateRequest {
                view: &view,
                confirm: confirm.as_deref(),
                confirm_all,
                override_type: override_type.as_deref(),
                note: note.as_deref(),
                analyst: &analyst,
                at: at.as_deref(),
                out: out.as_deref(),
            })?,
            ViewCommand::Show { view } => commands::view_show(&view)?,
        },
        Command::Policy(PolicyCommand::Check {
            dataset,
            ruleset,
            purpose,
            config,
            audit,
        }) => {
            return commands::policy_check(
                &dataset,
                ruleset.as_deref(),
                purpose,
                config.as_deref(),
                audit.as_deref(),
            );
        }
        Command::Report(cmd) => match cmd {
            ReportCommand::Profile { common, candidate } => {
                commands::report_profile(&common.into(), candidate.as_deref())?
            }
            ReportCommand::Party { common, party } => {
                commands::report_party(&common.into(), party.as_deref())?
            }
            ReportCommand::Compare { common, top_n } => {
                commands::report_compare(&common.into(), top_n)?
            }
        },
    }
    Ok(0)
}

impl From<ReportCommonArgs> for commands::ReportRequest {
    fn from(args: ReportCommonArgs) -> commands::ReportRequest {
        commands::ReportRequest {
            dataset: args.dataset,
            roster: args.roster,
            config: args.config,
            format: args.format,
            out: args.out,
            ruleset: args.ruleset,
            purpose: args.purpose,
        }
    }
}
