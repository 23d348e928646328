//! Model files.
//!
//! ```toml
//! atoms = ["a", "b", "c"]
//! constraints = ["a & b = bot", "a | b | c = top"]
//!
//! [[sources]]
//! name = "m1"
//! masses = { "a" = 0.3, "c" = 0.1, "top" = 0.6 }
//!
//! [[sources]]
//! name = "m2"
//! coherent = true
//! masses = { "b" = 0.3, "c" = 0.1, "top" = 0.6 }
//! ```
//!
//! Mass values are TOML numbers or decimal strings. `coherent = false` marks
//! a TBM-like source that may put mass on `bot`.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;
use toml::Spanned;

use crate::algebra::{Atom, ConstraintSet, Equation, PreBooleanAlgebra, Proposition};
use crate::belief::{Bba, Issue};

use super::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    atoms: Vec<Spanned<String>>,
    #[serde(default)]
    constraints: Vec<Spanned<String>>,
    #[serde(default)]
    sources: Vec<RawSource>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSource {
    name: Spanned<String>,
    #[serde(default = "default_coherent")]
    coherent: bool,
    masses: BTreeMap<Spanned<String>, Spanned<MassValue>>,
}

fn default_coherent() -> bool {
    true
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum MassValue {
    Int(i64),
    Float(f64),
    Text(String),
}

#[derive(Debug, Clone)]
pub struct Source {
    pub name: String,
    pub bba: Bba,
}

#[derive(Debug, Clone)]
pub struct Model {
    pub algebra: Arc<PreBooleanAlgebra>,
    pub sources: Vec<Source>,
    /// Non-fatal findings, one line each.
    pub warnings: Vec<String>,
}

struct Text<'a> {
    origin: &'a str,
    text: &'a str,
}

impl Text<'_> {
    fn position(&self, offset: usize) -> (usize, usize) {
        let before = &self.text[..offset.min(self.text.len())];
        let line = before.matches('\n').count() + 1;
        let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        (line, col)
    }

    /// Error at a string literal; `column` is a 1-based column inside it.
    fn error_in<T>(
        &self,
        item: &Spanned<T>,
        column: Option<usize>,
        message: impl Into<String>,
    ) -> CliError {
        // Skip the opening quote.
        let offset = item.span().start + column.map_or(0, |c| c);
        let (line, col) = self.position(offset);
        CliError::Model {
            origin: self.origin.to_string(),
            line,
            column: col,
            message: message.into(),
        }
    }
}

impl Model {
    pub fn load(path: &Path, renormalize: bool) -> Result<Model, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Model::parse(&text, &path.display().to_string(), renormalize)
    }

    pub fn parse(text: &str, origin: &str, renormalize: bool) -> Result<Model, CliError> {
        let raw: RawModel = toml::from_str(text).map_err(|e| CliError::Toml {
            origin: origin.to_string(),
            message: e.to_string(),
        })?;
        let src = Text { origin, text };
        let mut warnings = Vec::new();

        let mut atoms = Vec::with_capacity(raw.atoms.len());
        for a in &raw.atoms {
            atoms.push(
                Atom::new(a.get_ref().as_str())
                    .map_err(|e| src.error_in(a, None, e.to_string()))?,
            );
        }
        let mut constraints = ConstraintSet::new();
        for c in &raw.constraints {
            let eq = Equation::parse(c.get_ref()).map_err(|e| {
                let column = match &e {
                    crate::expr::ParseError::Syntax { column, .. } => Some(*column),
                    _ => None,
                };
                src.error_in(c, column, format!("constraint: {e}"))
            })?;
            let unknown = eq
                .lhs
                .atoms()
                .into_iter()
                .chain(eq.rhs.atoms())
                .find(|n| !atoms.iter().any(|a| a.name() == *n))
                .map(str::to_string);
            if let Some(n) = unknown {
                return Err(src.error_in(c, None, format!("constraint: unknown atom '{n}'")));
            }
            constraints.push(eq.lhs, eq.rhs);
        }
        let algebra = Arc::new(
            PreBooleanAlgebra::build(atoms, &constraints)
                .map_err(|e| CliError::Library(e.into()))?,
        );
        for w in algebra.warnings() {
            warnings.push(format!("algebra: {w}"));
        }

        let mut sources: Vec<Source> = Vec::new();
        for s in &raw.sources {
            let name = s.name.get_ref().clone();
            if sources.iter().any(|o| o.name == name) {
                return Err(src.error_in(&s.name, None, format!("duplicate source name '{name}'")));
            }
            let mut seen: BTreeMap<Proposition, &Spanned<String>> = BTreeMap::new();
            let mut masses = Vec::new();
            for (key, value) in &s.masses {
                let p = algebra.parse(key.get_ref()).map_err(|e| {
                    let column = match &e {
                        crate::AlgebraError::Parse(crate::expr::ParseError::Syntax {
                            column,
                            ..
                        }) => Some(*column),
                        _ => None,
                    };
                    src.error_in(key, column, format!("source '{name}': {e}"))
                })?;
                if let Some(prev) = seen.get(&p) {
                    return Err(src.error_in(
                        key,
                        None,
                        format!(
                            "source '{name}': '{}' and '{}' denote the same proposition",
                            prev.get_ref(),
                            key.get_ref()
                        ),
                    ));
                }
                let m = match value.get_ref() {
                    MassValue::Int(i) => *i as f64,
                    MassValue::Float(f) => *f,
                    MassValue::Text(t) => t.trim().parse::<f64>().map_err(|_| {
                        src.error_in(
                            value,
                            None,
                            format!("source '{name}': '{t}' is not a number"),
                        )
                    })?,
                };
                seen.insert(p.clone(), key);
                masses.push((p, m));
            }
            let mut bba = Bba::from_masses(algebra.clone(), masses, s.coherent);
            let mut diag = bba.validate();
            let only_scale = !diag.errors.is_empty()
                && diag
                    .errors
                    .iter()
                    .all(|e| matches!(e, Issue::NotNormalized { .. }));
            if renormalize && only_scale {
                bba = bba
                    .renormalized()
                    .map_err(|e| src.error_in(&s.name, None, format!("source '{name}': {e}")))?;
                warnings.push(format!(
                    "source '{name}': renormalized from total {}",
                    bba_total(&diag)
                ));
                diag = bba.validate();
            }
            if !diag.is_valid() {
                let hint = if only_scale {
                    " (use --renormalize to rescale)"
                } else {
                    ""
                };
                return Err(src.error_in(&s.name, None, format!("source '{name}': {diag}{hint}")));
            }
            for w in &diag.warnings {
                warnings.push(format!("source '{name}': {w}"));
            }
            sources.push(Source { name, bba });
        }
        Ok(Model {
            algebra,
            sources,
            warnings,
        })
    }

    /// Sources by name, in the requested order; all of them when `names` is
    /// empty.
    pub fn select(&self, names: &[String]) -> Result<Vec<&Source>, CliError> {
        if names.is_empty() {
            return Ok(self.sources.iter().collect());
        }
        names
            .iter()
            .map(|n| {
                self.sources
                    .iter()
                    .find(|s| &s.name == n)
                    .ok_or_else(|| CliError::Usage(format!("no source named '{n}'")))
            })
            .collect()
    }
}

fn bba_total(diag: &crate::belief::Diagnostics) -> f64 {
    diag.errors
        .iter()
        .find_map(|e| match e {
            Issue::NotNormalized { sum } => Some(*sum),
            _ => None,
        })
        .unwrap_or(1.0)
}
