//! Least-squares gene weighting and RMSE fitness.
//!
//! A multigene model predicts `d0 + d1 * gene_1(x) + ... + dM * gene_M(x)`.
//! The weights come from a minimum-norm least-squares fit of the design
//! matrix `[1, gene_1, ..., gene_M]` to the response.

pub mod qr;

use thiserror::Error;

use crate::expr_tree::{ExprTree, Node, Op, TreeError};
use crate::genetic_ops::Individual;
use qr::{lstsq, Matrix};

/// Fitness assigned to individuals whose numerics overflow.
pub const WORST_FITNESS: f64 = f64::INFINITY;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegressionError {
    #[error("length mismatch: {predictions} predictions vs {targets} targets")]
    LengthMismatch { predictions: usize, targets: usize },
    #[error("cannot compute error over zero rows")]
    Empty,
    #[error("model needs at least one gene")]
    NoGenes,
    #[error("non-finite value in the design matrix")]
    NonFinite,
    #[error("dataset has no response column")]
    NoResponse,
    #[error("model variable `{0}` is not present in the dataset")]
    MissingVariable(String),
    #[error(transparent)]
    Tree(#[from] TreeError),
}

/// Column-major predictor matrix with an optional response column. Data loaded
/// for prediction only carries no response.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    columns: Vec<Vec<f64>>,
    response: Option<Vec<f64>>,
    var_names: Vec<String>,
    response_name: Option<String>,
    rows: usize,
}

impl Dataset {
    /// Panics if column lengths disagree or names are not unique; loaders
    /// validate first.
    pub fn new(
        var_names: Vec<String>,
        columns: Vec<Vec<f64>>,
        response_name: Option<String>,
        response: Option<Vec<f64>>,
    ) -> Self {
        assert_eq!(var_names.len(), columns.len(), "one name per column");
        let rows = columns
            .first()
            .map(Vec::len)
            .or_else(|| response.as_ref().map(Vec::len))
            .unwrap_or(0);
        assert!(columns.iter().all(|c| c.len() == rows), "ragged columns");
        if let Some(r) = &response {
            assert_eq!(r.len(), rows, "response length");
        }
        for (i, n) in var_names.iter().enumerate() {
            assert!(!var_names[..i].contains(n), "duplicate column name `{n}`");
        }
        Dataset {
            columns,
            response,
            var_names,
            response_name,
            rows,
        }
    }

    /// Builds a labelled dataset from row-major predictors.
    pub fn from_rows(var_names: Vec<String>, rows: &[Vec<f64>], response_name: &str, response: Vec<f64>) -> Self {
        let cols = var_names.len();
        let columns = (0..cols).map(|c| rows.iter().map(|r| r[c]).collect()).collect();
        Dataset::new(var_names, columns, Some(response_name.to_string()), Some(response))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn num_vars(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.var_index(name).map(|i| self.columns[i].as_slice())
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[i]).collect()
    }

    pub fn var_names(&self) -> &[String] {
        &self.var_names
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.var_names.iter().position(|n| n == name)
    }

    pub fn response(&self) -> Result<&[f64], RegressionError> {
        self.response.as_deref().ok_or(RegressionError::NoResponse)
    }

    pub fn response_name(&self) -> Option<&str> {
        self.response_name.as_deref()
    }
}

/// A trained multigene model: genes over `var_names`, bias first in `weights`.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedModel {
    pub var_names: Vec<String>,
    pub genes: Vec<ExprTree>,
    pub weights: Vec<f64>,
    pub train_rmse: f64,
}

impl FittedModel {
    /// Variable names referenced by at least one gene, in column order.
    pub fn used_variables(&self) -> Vec<&str> {
        let mut idx: Vec<usize> = self.genes.iter().flat_map(ExprTree::variables).collect();
        idx.sort_unstable();
        idx.dedup();
        idx.into_iter().map(|i| self.var_names[i].as_str()).collect()
    }

    pub fn complexity(&self) -> usize {
        self.genes.iter().map(ExprTree::node_count).sum()
    }

    /// Simplifies every gene and drops genes that reduce to exactly zero
    /// (together with their weights). Predictions are unchanged.
    pub fn simplified(&self) -> FittedModel {
        let mut genes = Vec::new();
        let mut weights = vec![self.weights[0]];
        for (g, &w) in self.genes.iter().zip(&self.weights[1..]) {
            let s = g.simplify();
            if !s.is_zero() {
                genes.push(s);
                weights.push(w);
            }
        }
        FittedModel {
            var_names: self.var_names.clone(),
            genes,
            weights,
            train_rmse: self.train_rmse,
        }
    }

    /// Human-readable `y = d0 + d1 * (...) + ...`, with addition chains inside
    /// each gene flattened.
    pub fn expression(&self, response_name: &str) -> String {
        let mut s = format!("{response_name} = {}", fmt_weight(self.weights[0]));
        for (g, &w) in self.genes.iter().zip(&self.weights[1..]) {
            let body = g.to_pretty(&self.var_names);
            let sign = if w.is_sign_negative() { '-' } else { '+' };
            let body = if matches!(g.root(), Node::Op(Op::Add, ..)) { format!("({body})") } else { body };
            s.push_str(&format!(" {sign} {} * {body}", fmt_weight(w.abs())));
        }
        s
    }
}

fn fmt_weight(w: f64) -> String {
    let s = format!("{w:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".to_string() } else { s.to_string() }
}

/// Design matrix `[1, gene_1, ..., gene_M]` over `data`.
pub fn design_matrix(genes: &[ExprTree], data: &Dataset) -> Result<Matrix, RegressionError> {
    let rows = data.rows();
    let mut cols = Vec::with_capacity(genes.len() + 1);
    cols.push(vec![1.0; rows]);
    for g in genes {
        cols.push(g.evaluate_columns(data.columns(), rows)?);
    }
    Ok(Matrix::from_columns(rows, &cols))
}

/// Minimum-norm least-squares weights `[d0, d1, ..., dM]`.
pub fn fit_weights(genes: &[ExprTree], data: &Dataset) -> Result<Vec<f64>, RegressionError> {
    if genes.is_empty() {
        return Err(RegressionError::NoGenes);
    }
    let y = data.response()?;
    if data.rows() == 0 {
        return Err(RegressionError::Empty);
    }
    let phi = design_matrix(genes, data)?;
    if (0..phi.cols()).any(|c| phi.column(c).iter().any(|v| !v.is_finite())) {
        return Err(RegressionError::NonFinite);
    }
    Ok(lstsq(&phi, y).coefficients)
}

fn predict_columns(genes: &[ExprTree], weights: &[f64], columns: &[Vec<f64>], rows: usize) -> Result<Vec<f64>, RegressionError> {
    let mut out = vec![weights[0]; rows];
    for (g, &w) in genes.iter().zip(&weights[1..]) {
        let col = g.evaluate_columns(columns, rows)?;
        for (o, v) in out.iter_mut().zip(col) {
            *o += w * v;
        }
    }
    Ok(out)
}

/// Predictions of `model` on `data`. Variables are matched by name, so the
/// dataset may order (or add) columns freely.
pub fn predict(model: &FittedModel, data: &Dataset) -> Result<Vec<f64>, RegressionError> {
    let mut mapping = vec![usize::MAX; model.var_names.len()];
    for name in model.used_variables() {
        let src = model.var_names.iter().position(|n| n == name).unwrap();
        mapping[src] = data
            .var_index(name)
            .ok_or_else(|| RegressionError::MissingVariable(name.to_string()))?;
    }
    let genes: Vec<ExprTree> = model.genes.iter().map(|g| g.remap_vars(|i| mapping[i])).collect();
    predict_columns(&genes, &model.weights, data.columns(), data.rows())
}

pub fn rmse(predictions: &[f64], targets: &[f64]) -> Result<f64, RegressionError> {
    if predictions.len() != targets.len() {
        return Err(RegressionError::LengthMismatch {
            predictions: predictions.len(),
            targets: targets.len(),
        });
    }
    if predictions.is_empty() {
        return Err(RegressionError::Empty);
    }
    let sse: f64 = predictions.iter().zip(targets).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok((sse / predictions.len() as f64).sqrt())
}

/// Fits weights and scores `ind` on `data`. Numeric failure (overflow in a
/// gene or in the residuals) yields [`WORST_FITNESS`] with no weights.
pub fn evaluate_individual(ind: &Individual, data: &Dataset) -> Individual {
    let mut out = ind.clone();
    let scored = fit_weights(ind.genes(), data).and_then(|w| {
        let p = predict_columns(ind.genes(), &w, data.columns(), data.rows())?;
        let e = rmse(&p, data.response()?)?;
        Ok((w, e))
    });
    match scored {
        Ok((w, e)) if e.is_finite() && w.iter().all(|x| x.is_finite()) => out.set_evaluation(Some(w), e),
        _ => out.set_evaluation(None, WORST_FITNESS),
    }
    out
}

/// Converts an evaluated individual into a model over `data`'s variables.
pub fn to_fitted_model(ind: &Individual, data: &Dataset) -> Option<FittedModel> {
    let weights = ind.weights()?.to_vec();
    Some(FittedModel {
        var_names: data.var_names().to_vec(),
        genes: ind.genes().to_vec(),
        weights,
        train_rmse: ind.fitness()?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::table1;
    use crate::expr_tree::parse_infix;

    fn gene(s: &str, data: &Dataset) -> ExprTree {
        parse_infix(s, data.var_names()).unwrap()
    }

    fn with_response(data: &Dataset, y: Vec<f64>) -> Dataset {
        Dataset::new(data.var_names().to_vec(), data.columns().to_vec(), Some("y".into()), Some(y))
    }

    #[test]
    fn exact_linear_target() {
        let t = table1();
        let y: Vec<f64> = t.column("x6").unwrap().iter().map(|v| 2.0 * v).collect();
        let d = with_response(&t, y);
        let w = fit_weights(&[gene("x6", &d)], &d).unwrap();
        assert!(w[0].abs() < 1e-9 && (w[1] - 2.0).abs() < 1e-9, "{w:?}");
    }

    #[test]
    fn duplicate_genes_still_reproduce_target() {
        let t = table1();
        let y: Vec<f64> = t.column("x1").unwrap().iter().map(|v| 3.0 * v).collect();
        let d = with_response(&t, y.clone());
        let genes = [gene("x1", &d), gene("x1", &d)];
        let w = fit_weights(&genes, &d).unwrap();
        let p = predict_columns(&genes, &w, d.columns(), d.rows()).unwrap();
        for (a, b) in p.iter().zip(&y) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn full_sum_gene_reproduces_total() {
        let t = table1();
        let g = gene("(((x1 + x2) + (x3 + x4)) + (x5 + x6))", &t);
        let w = fit_weights(std::slice::from_ref(&g), &t).unwrap();
        let p = predict_columns(&[g], &w, t.columns(), t.rows()).unwrap();
        for (a, b) in p.iter().zip(t.response().unwrap()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn predict_identity_and_constant() {
        let t = table1();
        let model = FittedModel {
            var_names: t.var_names().to_vec(),
            genes: vec![gene("x6", &t)],
            weights: vec![0.0, 1.0],
            train_rmse: 0.0,
        };
        assert_eq!(predict(&model, &t).unwrap(), t.column("x6").unwrap());
        let constant = FittedModel { weights: vec![7.0, 0.0], ..model };
        assert!(predict(&constant, &t).unwrap().iter().all(|&v| v == 7.0));
    }

    #[test]
    fn predict_names_missing_variable() {
        let t = table1();
        let model = FittedModel {
            var_names: vec!["x6".into(), "x7".into()],
            genes: vec![ExprTree::new(Node::op(Op::Add, Node::Var(0), Node::Var(1)))],
            weights: vec![0.0, 1.0],
            train_rmse: 0.0,
        };
        assert_eq!(predict(&model, &t), Err(RegressionError::MissingVariable("x7".into())));
    }

    #[test]
    fn rmse_basics() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(rmse(&[1.0, 1.0], &[0.0, 2.0]).unwrap(), 1.0);
        assert!(matches!(rmse(&[1.0], &[1.0, 2.0]), Err(RegressionError::LengthMismatch { .. })));
        assert_eq!(rmse(&[], &[]), Err(RegressionError::Empty));
    }

    #[test]
    fn single_gene_fitness_matches_simple_regression() {
        let t = table1();
        let ind = Individual::new(vec![gene("x6", &t)]);
        let ev = evaluate_individual(&ind, &t);
        // closed-form simple linear regression of TOTAL on x6
        let x = t.column("x6").unwrap();
        let y = t.response().unwrap();
        let n = x.len() as f64;
        let mx = x.iter().sum::<f64>() / n;
        let my = y.iter().sum::<f64>() / n;
        let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
        let slope = sxy / sxx;
        let icpt = my - slope * mx;
        let expected = (x.iter().zip(y).map(|(a, b)| (icpt + slope * a - b).powi(2)).sum::<f64>() / n).sqrt();
        let f = ev.fitness().unwrap();
        assert!(f > 0.0);
        assert!((f - expected).abs() < 1e-10, "{f} vs {expected}");
        assert_eq!(ev.complexity(), 1);
    }

    #[test]
    fn spanning_genes_fit_exactly() {
        let t = table1();
        let genes = ["(x1 + x2)", "(x3 - x4)", "x4", "(x5 + x6)"].map(|s| gene(s, &t)).to_vec();
        let ev = evaluate_individual(&Individual::new(genes), &t);
        assert!(ev.fitness().unwrap() <= 1e-9, "{:?}", ev.fitness());
    }

    #[test]
    fn constant_response_fits_with_bias() {
        let t = table1();
        let d = with_response(&t, vec![5.0; t.rows()]);
        let ev = evaluate_individual(&Individual::new(vec![gene("(x2 * x3)", &d)]), &d);
        assert!(ev.fitness().unwrap() < 1e-12);
    }

    #[test]
    fn overflow_gets_worst_fitness() {
        let big = vec![1e200, 1e200];
        let d = Dataset::new(vec!["a".into()], vec![big], Some("y".into()), Some(vec![1.0, 2.0]));
        let g = parse_infix("(a * a)", d.var_names()).unwrap();
        let ev = evaluate_individual(&Individual::new(vec![g]), &d);
        assert_eq!(ev.fitness(), Some(WORST_FITNESS));
        assert_eq!(ev.weights(), None);
        assert_eq!(ev.complexity(), 3);
    }

    #[test]
    fn simplified_model_drops_zero_genes() {
        let t = table1();
        let model = FittedModel {
            var_names: t.var_names().to_vec(),
            genes: vec![gene("((x1 - x1) + x6)", &t), gene("(x2 - x2)", &t)],
            weights: vec![1.0, 2.0, 3.0],
            train_rmse: 0.0,
        };
        let s = model.simplified();
        assert_eq!(s.genes, vec![gene("x6", &t)]);
        assert_eq!(s.weights, vec![1.0, 2.0]);
        assert_eq!(predict(&s, &t).unwrap(), predict(&model, &t).unwrap());
        assert_eq!(s.expression("TOTAL"), "TOTAL = 1 + 2 * x6");
    }

    #[test]
    fn expression_formats_signs_and_sums() {
        let t = table1();
        let model = FittedModel {
            var_names: t.var_names().to_vec(),
            genes: vec![gene("((x6 + x5) + (x3 + x4))", &t), gene("(x1 * x2)", &t)],
            weights: vec![-0.5, 1.0, -0.25],
            train_rmse: 0.0,
        };
        assert_eq!(
            model.expression("y"),
            "y = -0.5 + 1 * (x6 + x5 + x3 + x4) - 0.25 * (x1 * x2)"
        );
    }
}
