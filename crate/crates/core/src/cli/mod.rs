//! Command-line front end.

pub mod model;
pub mod report;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::belief::Bba;
use crate::emr::{
    emr_feasible_with, emr_fuse_approx_n_with, emr_fuse_n_with, EmrOptions, FusionResult,
    Rejection, SolverDiagnostics,
};
use crate::rules::{conjunctive, dempster_fuse, free_dsmt_fuse, tbm_fuse};

pub use model::{Model, Source};
pub use report::Report;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_REJECTED: i32 = 2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{origin}: {message}")]
    Toml { origin: String, message: String },
    #[error("{origin}:{line}:{column}: {message}")]
    Model {
        origin: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Library(#[from] crate::Error),
}

#[derive(Debug, Parser)]
#[command(
    name = "emrfuse",
    version,
    about = "Evidence fusion over pre-Boolean algebras"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Optimality certificate tolerance of the entropy solver.
    #[arg(long, global = true, value_name = "TOL")]
    pub tol: Option<f64>,
    /// Iteration cap of the entropy solver.
    #[arg(long = "max-iter", global = true, value_name = "N")]
    pub max_iter: Option<usize>,
    /// Rescale sources whose masses do not sum to one.
    #[arg(long, global = true)]
    pub renormalize: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List the lattice of the model's algebra.
    Algebra {
        model: PathBuf,
        /// Report whether no two non-bot members meet to bot.
        #[arg(long)]
        check_insulation: bool,
    },
    /// Fuse sources and write a JSON report.
    Fuse {
        model: PathBuf,
        #[arg(long, value_enum)]
        rule: Rule,
        /// Comma-separated source names (default: all, in file order).
        #[arg(long, value_delimiter = ',')]
        sources: Vec<String>,
        /// Write the report here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Include the belief of every lattice member.
        #[arg(long)]
        beliefs: bool,
    },
    /// Print fused masses of several rules side by side.
    Compare {
        model: PathBuf,
        #[arg(long, value_enum, value_delimiter = ',', required = true)]
        rules: Vec<Rule>,
        #[arg(long, value_delimiter = ',')]
        sources: Vec<String>,
    },
    /// Decide whether entropy-maximizing fusion of the sources exists.
    Check {
        model: PathBuf,
        #[arg(long, value_delimiter = ',')]
        sources: Vec<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Rule {
    Conjunctive,
    Tbm,
    Free,
    Dempster,
    Emr,
    EmrApprox,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::Conjunctive => "conjunctive",
            Rule::Tbm => "tbm",
            Rule::Free => "free",
            Rule::Dempster => "dempster",
            Rule::Emr => "emr",
            Rule::EmrApprox => "emr-approx",
        }
    }
}

/// Result of applying a rule to a list of sources.
#[derive(Debug, Clone)]
pub enum Applied {
    Fused {
        bba: Bba,
        diagnostics: Option<SolverDiagnostics>,
    },
    Rejected(Rejection),
}

/// Entropy rules take all sources at once; the others fold left pairwise.
pub fn apply(rule: Rule, sources: &[&Bba], opts: &EmrOptions) -> Result<Applied, crate::Error> {
    if sources.len() < 2 {
        return Err(crate::EmrError::TooFewSources.into());
    }
    let outcome = match rule {
        Rule::Emr => emr_fuse_n_with(sources, opts)?,
        Rule::EmrApprox => emr_fuse_approx_n_with(sources, opts)?,
        _ => {
            let mut acc = sources[0].clone();
            for b in &sources[1..] {
                acc = match rule {
                    Rule::Conjunctive => conjunctive(&acc, b)?.into_bba(),
                    Rule::Tbm => tbm_fuse(&acc, b)?,
                    Rule::Free => free_dsmt_fuse(&acc, b)?,
                    Rule::Dempster => dempster_fuse(&acc, b)?,
                    Rule::Emr | Rule::EmrApprox => unreachable!(),
                };
            }
            return Ok(Applied::Fused {
                bba: acc,
                diagnostics: None,
            });
        }
    };
    Ok(match outcome.result {
        FusionResult::Fused(bba) => Applied::Fused {
            bba,
            diagnostics: Some(outcome.diagnostics),
        },
        FusionResult::Rejected(r) => Applied::Rejected(r),
    })
}

impl Cli {
    fn options(&self) -> Result<EmrOptions, CliError> {
        let mut opts = EmrOptions::default();
        if let Some(tol) = self.tol {
            opts.solver.certificate_tol = tol;
        }
        if let Some(n) = self.max_iter {
            opts.solver.max_iterations = n;
        }
        opts.solver
            .check()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(opts)
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match execute(cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_INPUT
        }
    }
}

fn load(path: &Path, cli: &Cli, err: &mut dyn Write) -> Result<Model, CliError> {
    let model = Model::load(path, cli.renormalize)?;
    for w in &model.warnings {
        let _ = writeln!(err, "warning: {w}");
    }
    Ok(model)
}

fn selected<'a>(
    model: &'a Model,
    names: &[String],
) -> Result<(Vec<String>, Vec<&'a Bba>), CliError> {
    let chosen = model.select(names)?;
    if chosen.len() < 2 {
        return Err(CliError::Usage(format!(
            "at least two sources are required, got {}",
            chosen.len()
        )));
    }
    Ok((
        chosen.iter().map(|s| s.name.clone()).collect(),
        chosen.iter().map(|s| &s.bba).collect(),
    ))
}

fn io(path: &str) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io {
        path: path.to_string(),
        message: e.to_string(),
    }
}

fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let opts = cli.options()?;
    match &cli.command {
        Command::Algebra {
            model,
            check_insulation,
        } => {
            let model = load(model, cli, err)?;
            algebra_listing(&model, *check_insulation, out).map_err(io("<stdout>"))?;
            Ok(EXIT_OK)
        }
        Command::Fuse {
            model,
            rule,
            sources,
            out: path,
            beliefs,
        } => {
            let model = load(model, cli, err)?;
            let (names, bbas) = selected(&model, sources)?;
            let applied = apply(*rule, &bbas, &opts)?;
            let report = build_report(&model, *rule, names, &applied, *beliefs);
            let mut text = serde_json::to_string_pretty(&report).expect("reports serialize");
            text.push('\n');
            match path {
                Some(p) => {
                    let shown = p.display().to_string();
                    std::fs::write(p, text).map_err(io(&shown))?;
                }
                None => out.write_all(text.as_bytes()).map_err(io("<stdout>"))?,
            }
            Ok(match applied {
                Applied::Fused { .. } => EXIT_OK,
                Applied::Rejected(_) => EXIT_REJECTED,
            })
        }
        Command::Compare {
            model,
            rules,
            sources,
        } => {
            let model = load(model, cli, err)?;
            let (_, bbas) = selected(&model, sources)?;
            let columns: Vec<(Rule, Result<Applied, crate::Error>)> =
                rules.iter().map(|&r| (r, apply(r, &bbas, &opts))).collect();
            for (rule, res) in &columns {
                if let Err(e) = res {
                    let _ = writeln!(err, "{}: {e}", rule.name());
                }
            }
            comparison_table(&model, &columns, out).map_err(io("<stdout>"))?;
            Ok(EXIT_OK)
        }
        Command::Check { model, sources } => {
            let model = load(model, cli, err)?;
            let (_, bbas) = selected(&model, sources)?;
            let report = emr_feasible_with(&bbas, &opts).map_err(crate::Error::from)?;
            let alg = &model.algebra;
            let mut w = || -> std::io::Result<()> {
                writeln!(
                    out,
                    "feasible: {}",
                    if report.feasible { "yes" } else { "no" }
                )?;
                writeln!(out, "phase-I objective: {:.6e}", report.phase_one_objective)?;
                if report.violations.is_empty() {
                    writeln!(out, "enhancement bound violations: none")?;
                } else {
                    writeln!(out, "enhancement bound violations:")?;
                    for v in &report.violations {
                        let family: Vec<String> =
                            v.family.iter().map(|p| alg.canonical_label(p)).collect();
                        writeln!(out, "  {{{}}}: {}", family.join(", "), v.bound)?;
                    }
                }
                Ok(())
            };
            w().map_err(io("<stdout>"))?;
            Ok(if report.feasible {
                EXIT_OK
            } else {
                EXIT_REJECTED
            })
        }
    }
}

fn algebra_listing(
    model: &Model,
    check_insulation: bool,
    out: &mut dyn Write,
) -> std::io::Result<()> {
    let alg = &model.algebra;
    writeln!(out, "{} elements", alg.len())?;
    let keys: Vec<String> = alg.lattice().iter().map(|p| p.hex_key()).collect();
    let width = keys.iter().map(String::len).max().unwrap_or(1);
    for (p, key) in alg.lattice().iter().zip(&keys) {
        writeln!(out, "  {key:>width$}  {}", alg.canonical_label(p))?;
    }
    if check_insulation {
        writeln!(out, "insulation: {}", alg.is_insulated())?;
    }
    Ok(())
}

pub fn build_report(
    model: &Model,
    rule: Rule,
    sources: Vec<String>,
    applied: &Applied,
    beliefs: bool,
) -> Report {
    use report::*;
    match applied {
        Applied::Fused { bba, diagnostics } => Report {
            rule: rule.name().to_string(),
            sources,
            outcome: Outcome::Fused,
            masses: Some(mass_entries(bba)),
            rejection: None,
            diagnostics: diagnostics.as_ref().map(diagnostics_report),
            beliefs: beliefs.then(|| belief_entries(bba)),
        },
        Applied::Rejected(r) => Report {
            rule: rule.name().to_string(),
            sources,
            outcome: Outcome::Rejected,
            masses: None,
            rejection: Some(rejection_report(&model.algebra, r)),
            diagnostics: None,
            beliefs: None,
        },
    }
}

fn comparison_table(
    model: &Model,
    columns: &[(Rule, Result<Applied, crate::Error>)],
    out: &mut dyn Write,
) -> std::io::Result<()> {
    let alg = &model.algebra;
    let rows: Vec<_> = alg
        .lattice()
        .iter()
        .filter(|p| {
            columns.iter().any(|(_, res)| match res {
                Ok(Applied::Fused { bba, .. }) => bba.mass(p) != 0.0,
                _ => false,
            })
        })
        .collect();

    let mut table: Vec<Vec<String>> = Vec::new();
    let mut header = vec!["proposition".to_string(), "key".to_string()];
    header.extend(columns.iter().map(|(r, _)| r.name().to_string()));
    table.push(header);
    for p in &rows {
        let mut line = vec![alg.canonical_label(p), p.hex_key()];
        for (_, res) in columns {
            line.push(match res {
                Ok(Applied::Fused { bba, .. }) => format!("{:.6}", bba.mass(p)),
                Ok(Applied::Rejected(_)) => "REJECTED".to_string(),
                Err(_) => "ERROR".to_string(),
            });
        }
        table.push(line);
    }
    if rows.is_empty() {
        let mut line = vec!["-".to_string(), "-".to_string()];
        for (_, res) in columns {
            line.push(match res {
                Ok(Applied::Rejected(_)) => "REJECTED".to_string(),
                Err(_) => "ERROR".to_string(),
                Ok(Applied::Fused { .. }) => "-".to_string(),
            });
        }
        table.push(line);
    }

    let ncols = table[0].len();
    let widths: Vec<usize> = (0..ncols)
        .map(|c| {
            table
                .iter()
                .map(|row| row[c].chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    for row in &table {
        let cells: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(c, s)| {
                if c < 2 {
                    format!("{s:<w$}", w = widths[c])
                } else {
                    format!("{s:>w$}", w = widths[c])
                }
            })
            .collect();
        writeln!(out, "{}", cells.join("  ").trim_end())?;
    }
    Ok(())
}
