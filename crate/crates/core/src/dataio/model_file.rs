//! Text model format, version 1:
//!
//! ```text
//! format-version 1
//! variables x1,x2,x3,x4,x5,x6
//! gene ((x3 + x4) + (x5 + x6))
//! gene x1
//! weights 0.0000000000000000e0 1.0000000000000000e0 2.5000000000000000e-1
//! train_rmse 1.2345678901234567e-15
//! ```
//!
//! Weights are written with 17 significant digits so they read back to the
//! same doubles.

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::expr_tree::{parse_infix, TreeError};
use crate::regression::FittedModel;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("unsupported model format version {found} (expected {FORMAT_VERSION})")]
    VersionMismatch { found: String },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: {source}")]
    Gene { line: usize, source: TreeError },
    #[error("line {line}: {found} weights for {genes} genes (expected {expected})", expected = genes + 1)]
    WeightCount { line: usize, found: usize, genes: usize },
    #[error("variable name `{0}` cannot be written to a model file")]
    InvalidName(String),
}

fn valid_name(name: &str) -> bool {
    !name.is_empty()
        && !name
            .chars()
            .any(|c| c == ',' || crate::expr_tree::is_reserved(c))
}

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Fails on the first name the model file cannot hold.
pub fn check_names(names: &[String]) -> Result<(), ModelError> {
    match names.iter().find(|n| !valid_name(n)) {
        Some(bad) => Err(ModelError::InvalidName(bad.clone())),
        None => Ok(()),
    }
}

pub fn write_model<W: Write>(model: &FittedModel, out: &mut W) -> Result<(), ModelError> {
    check_names(&model.var_names)?;
    let mut text = String::new();
    text.push_str(&format!("format-version {FORMAT_VERSION}\n"));
    text.push_str(&format!("variables {}\n", model.var_names.join(",")));
    for g in &model.genes {
        text.push_str(&format!("gene {}\n", g.to_infix(&model.var_names)));
    }
    let weights: Vec<String> = model.weights.iter().map(|&w| fmt17(w)).collect();
    text.push_str(&format!("weights {}\n", weights.join(" ")));
    text.push_str(&format!("train_rmse {}\n", fmt17(model.train_rmse)));
    out.write_all(text.as_bytes()).map_err(|source| ModelError::Io {
        path: PathBuf::new(),
        source,
    })
}

pub fn save_model(model: &FittedModel, path: &Path) -> Result<(), ModelError> {
    let mut buf = Vec::new();
    write_model(model, &mut buf)?;
    fs::write(path, buf).map_err(|source| ModelError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_model(path: &Path) -> Result<FittedModel, ModelError> {
    let file = fs::File::open(path).map_err(|source| ModelError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_model(file)
}

struct Lines<'a> {
    items: Vec<(usize, &'a str)>,
    next: usize,
    end_line: usize,
}

impl<'a> Lines<'a> {
    /// Next non-blank line split into `(line number, key, rest)`.
    fn take(&mut self, wanted: &str) -> Result<(usize, &'a str, String), ModelError> {
        let &(line, content) = self.items.get(self.next).ok_or_else(|| ModelError::Parse {
            line: self.end_line,
            message: format!("missing `{wanted}` line"),
        })?;
        self.next += 1;
        let (k, rest) = content.split_once(' ').unwrap_or((content, ""));
        Ok((line, k, rest.trim().to_string()))
    }
}

pub fn read_model<R: Read>(mut reader: R) -> Result<FittedModel, ModelError> {
    let mut text = String::new();
    reader.read_to_string(&mut text).map_err(|source| ModelError::Io {
        path: PathBuf::new(),
        source,
    })?;

    let mut lines = Lines {
        items: text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty())
            .collect(),
        next: 0,
        end_line: text.lines().count() + 1,
    };
    let expect = |lines: &mut Lines, key: &str| -> Result<(usize, String), ModelError> {
        let (line, k, rest) = lines.take(key)?;
        if k != key {
            return Err(ModelError::Parse {
                line,
                message: format!("expected `{key}`, found `{k}`"),
            });
        }
        Ok((line, rest))
    };

    let (_, version) = expect(&mut lines, "format-version")?;
    if version != FORMAT_VERSION.to_string() {
        return Err(ModelError::VersionMismatch { found: version });
    }
    let (line, vars) = expect(&mut lines, "variables")?;
    let var_names: Vec<String> = vars.split(',').map(|s| s.trim().to_string()).collect();
    if var_names.iter().any(|n| !valid_name(n)) {
        return Err(ModelError::Parse {
            line,
            message: "malformed variable list".into(),
        });
    }

    let mut genes = Vec::new();
    let (weights_line, weights_text) = loop {
        let (line, k, rest) = lines.take("weights")?;
        match k {
            "gene" => genes.push(parse_infix(&rest, &var_names).map_err(|source| ModelError::Gene { line, source })?),
            "weights" => break (line, rest),
            other => {
                return Err(ModelError::Parse {
                    line,
                    message: format!("expected `gene` or `weights`, found `{other}`"),
                })
            }
        }
    };
    if genes.is_empty() {
        return Err(ModelError::Parse {
            line: weights_line,
            message: "model has no genes".into(),
        });
    }
    let weights = weights_text
        .split_whitespace()
        .map(|w| {
            w.parse::<f64>().map_err(|_| ModelError::Parse {
                line: weights_line,
                message: format!("`{w}` is not a number"),
            })
        })
        .collect::<Result<Vec<f64>, _>>()?;
    if weights.len() != genes.len() + 1 {
        return Err(ModelError::WeightCount {
            line: weights_line,
            found: weights.len(),
            genes: genes.len(),
        });
    }
    let (rmse_line, rmse_text) = expect(&mut lines, "train_rmse")?;
    let train_rmse = rmse_text.parse::<f64>().map_err(|_| ModelError::Parse {
        line: rmse_line,
        message: format!("`{rmse_text}` is not a number"),
    })?;
    if let Some(&(line, extra)) = lines.items.get(lines.next) {
        return Err(ModelError::Parse {
            line,
            message: format!("unexpected trailing line `{extra}`"),
        });
    }
    Ok(FittedModel {
        var_names,
        genes,
        weights,
        train_rmse,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr_tree::ExprTree;

    fn sample() -> FittedModel {
        let names: Vec<String> = (1..=6).map(|i| format!("x{i}")).collect();
        FittedModel {
            genes: vec![
                parse_infix("((x3 + x4) + (x5 + x6))", &names).unwrap(),
                ExprTree::var(0),
            ],
            var_names: names,
            weights: vec![0.1, 1.0 / 3.0, -2.5e-7],
            train_rmse: 1.0 / 7.0,
        }
    }

    fn to_text(m: &FittedModel) -> String {
        let mut buf = Vec::new();
        write_model(m, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let m = sample();
        let back = read_model(to_text(&m).as_bytes()).unwrap();
        assert_eq!(back, m);
        for (a, b) in back.weights.iter().zip(&m.weights) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn layout() {
        let text = to_text(&sample());
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "format-version 1");
        assert_eq!(lines[1], "variables x1,x2,x3,x4,x5,x6");
        assert_eq!(lines[2], "gene ((x3 + x4) + (x5 + x6))");
        assert_eq!(lines[3], "gene x1");
        assert!(lines[4].starts_with("weights 1.0000000000000001e-1 "));
        assert_eq!(lines.len(), 6);
    }

    #[test]
    fn version_mismatch() {
        let text = to_text(&sample()).replace("format-version 1", "format-version 99");
        assert!(matches!(read_model(text.as_bytes()), Err(ModelError::VersionMismatch { found }) if found == "99"));
    }

    #[test]
    fn weight_count_mismatch() {
        let text = "format-version 1\nvariables x1\ngene x1\nweights 1 2 3\ntrain_rmse 0\n";
        assert!(matches!(
            read_model(text.as_bytes()),
            Err(ModelError::WeightCount { line: 4, found: 3, genes: 1 })
        ));
    }

    #[test]
    fn gene_errors_report_line() {
        let text = "format-version 1\nvariables x1\ngene (x1 + x9)\nweights 1 2\ntrain_rmse 0\n";
        assert!(matches!(read_model(text.as_bytes()), Err(ModelError::Gene { line: 3, .. })));
        let text = "format-version 1\nvariables x1\nweights 1\ntrain_rmse 0\n";
        assert!(matches!(read_model(text.as_bytes()), Err(ModelError::Parse { line: 3, .. })));
    }

    #[test]
    fn unwritable_names_are_rejected() {
        let mut m = sample();
        m.var_names[0] = "EXAM SCORE".into();
        assert!(matches!(write_model(&m, &mut Vec::new()), Err(ModelError::InvalidName(_))));
    }
}
