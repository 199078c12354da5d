//! Command-line surface for CI use.
//!
//! Exit codes are a stable contract: 0 success, 2 input error, 3
//! verification failure.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::diff::diff;
use crate::error::{Error, Result};
use crate::frontend::parse_tree;
use crate::graph::{build_static, export_dot, impact_relation, load_coverage, CoverageMap};
use crate::oracle::check_safety;
use crate::replay::replay;
use crate::select::affected_tests;
use crate::snapshot::{load, save, Snapshot};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT_ERROR: i32 = 2;
pub const EXIT_VERIFICATION_FAILED: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Text,
}

#[derive(Debug, Parser)]
#[command(
    name = "ada-impact",
    about = "Change impact analysis and safe regression test selection for Ada",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a source tree and write its snapshot.
    Snapshot {
        /// Directory of .ads/.adb files.
        tree: PathBuf,
        /// Output path; stdout when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Compare two program versions and emit the change-set.
    Diff {
        /// Baseline: snapshot file or source tree.
        base: PathBuf,
        /// Modified version: snapshot file or source tree.
        new: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
        format: OutputFormat,
    },
    /// Select the tests affected by the changes between two versions.
    Select {
        /// Baseline: snapshot file or source tree.
        base: PathBuf,
        /// Modified version: snapshot file or source tree.
        new: PathBuf,
        /// Per-test coverage file.
        #[arg(long)]
        coverage: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
        format: OutputFormat,
        /// Audit the selection with the brute-force oracle; exit 3 on any
        /// violation.
        #[arg(long)]
        verify: bool,
    },
    /// Export the dependency graph in DOT form.
    Graph {
        /// Snapshot file or source tree.
        input: PathBuf,
        /// Optional coverage file; adds dashed dynamic coupling edges.
        #[arg(long)]
        coverage: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Replay a subprogram-by-subprogram change experiment over a tree.
    Replay {
        /// Directory of .ads/.adb files.
        tree: PathBuf,
        /// Per-test coverage file.
        #[arg(long)]
        coverage: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
        format: OutputFormat,
        /// Audit every per-change selection with the oracle.
        #[arg(long)]
        verify: bool,
    },
}

/// Load a snapshot from either a snapshot file or a source tree directory.
fn load_input(path: &Path) -> Result<Snapshot> {
    let meta = std::fs::metadata(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    if meta.is_dir() {
        parse_tree(path)
    } else {
        load(path)
    }
}

fn emit(output: Option<&Path>, content: &str) -> Result<()> {
    match output {
        Some(path) => std::fs::write(path, content).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        }),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn report_error(error: &Error) -> i32 {
    eprintln!("error: {error}");
    if let Error::ParseErrors(_) = error {
        for line in error.detail_lines() {
            eprintln!("  {line}");
        }
    }
    EXIT_INPUT_ERROR
}

fn warn_snapshot(snapshot: &Snapshot) {
    for (name, pkg) in &snapshot.packages {
        if pkg.has_body() && !pkg.has_spec() {
            eprintln!("warning: package `{name}` has a body but no spec");
        }
    }
    let relations = build_static(snapshot);
    for ext in relations.external_packages() {
        eprintln!("warning: withed package `{ext}` is not in the tree (kept as external)");
    }
}

fn warn_coverage(coverage: &CoverageMap, snapshot: &Snapshot) {
    let relations = build_static(snapshot);
    for sub in coverage.unknown_subprograms(&relations) {
        eprintln!("warning: coverage references unknown subprogram `{sub}`");
    }
}

pub fn run(cli: Cli) -> i32 {
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => report_error(&e),
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Snapshot { tree, output } => {
            let snapshot = parse_tree(&tree)?;
            warn_snapshot(&snapshot);
            match output {
                Some(path) => save(&snapshot, &path)?,
                None => print!("{}", snapshot.to_canonical_string()),
            }
            Ok(EXIT_OK)
        }
        Command::Diff {
            base,
            new,
            output,
            format,
        } => {
            let old_snapshot = load_input(&base)?;
            let new_snapshot = load_input(&new)?;
            let changes = diff(&old_snapshot, &new_snapshot)?;
            let content = match format {
                OutputFormat::Json => changes.to_json_string(),
                OutputFormat::Text => {
                    let mut s = String::new();
                    for c in &changes.changes {
                        s.push_str(&format!("{c}\n"));
                    }
                    s
                }
            };
            emit(output.as_deref(), &content)?;
            Ok(EXIT_OK)
        }
        Command::Select {
            base,
            new,
            coverage,
            output,
            format,
            verify,
        } => {
            let old_snapshot = load_input(&base)?;
            let new_snapshot = load_input(&new)?;
            warn_snapshot(&new_snapshot);
            let cov = load_coverage(&coverage)?;
            warn_coverage(&cov, &old_snapshot);
            let changes = diff(&old_snapshot, &new_snapshot)?;
            // Removals are evaluated against the old graph and additions
            // against the new one; the union carries both.
            let union = build_static(&old_snapshot).union(&build_static(&new_snapshot));
            let impact = impact_relation(&union)?;
            let selection = affected_tests(&changes, &impact, &cov);
            for w in &selection.warnings {
                eprintln!("warning: {w}");
            }
            let content = match format {
                OutputFormat::Json => selection.to_json_string(),
                OutputFormat::Text => {
                    let mut s = format!(
                        "changes: {}\naffected subprograms: {}\nselected {} of {} tests (reduction {:.4})\n",
                        changes.changes.len(),
                        selection.affected_subprograms.len(),
                        selection.stats.selected_size,
                        selection.stats.baseline_size,
                        selection.stats.reduction_ratio,
                    );
                    for t in &selection.selected_tests {
                        s.push_str(&format!("  {t}\n"));
                    }
                    s
                }
            };
            emit(output.as_deref(), &content)?;
            if verify {
                let verdict = check_safety(&selection, &changes, &impact, &cov);
                eprint!("{verdict}");
                if !verdict.is_safe() {
                    return Ok(EXIT_VERIFICATION_FAILED);
                }
            }
            Ok(EXIT_OK)
        }
        Command::Graph {
            input,
            coverage,
            output,
        } => {
            let snapshot = load_input(&input)?;
            warn_snapshot(&snapshot);
            let cov = match coverage {
                Some(path) => {
                    let cov = load_coverage(&path)?;
                    warn_coverage(&cov, &snapshot);
                    cov
                }
                None => CoverageMap::default(),
            };
            let impact = impact_relation(&build_static(&snapshot))?;
            emit(output.as_deref(), &export_dot(&impact, &cov))?;
            Ok(EXIT_OK)
        }
        Command::Replay {
            tree,
            coverage,
            output,
            format,
            verify,
        } => {
            let cov = load_coverage(&coverage)?;
            let report = replay(&tree, &cov, verify)?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            let content = match format {
                OutputFormat::Json => report.to_json_string(),
                OutputFormat::Text => report.to_text_table(),
            };
            emit(output.as_deref(), &content)?;
            if verify && !report.violations.is_empty() {
                for v in &report.violations {
                    eprintln!("violation: {v}");
                }
                return Ok(EXIT_VERIFICATION_FAILED);
            }
            Ok(EXIT_OK)
        }
    }
}
