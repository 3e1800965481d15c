//! Multigene genetic programming for symbolic regression.
//!
//! An individual is a weighted sum of expression trees,
//! `y = d0 + d1 * gene_1 + ... + dM * gene_M`, with the weights fitted by
//! least squares and fitness measured as training RMSE. Evolution uses
//! lexicographic tournament selection (fitness, then node count), subtree
//! and gene crossover, and subtree mutation. Evolved models can be saved,
//! reloaded, and used to classify rows into grade bands and compute a
//! failure rate.

pub mod classify;
pub mod cli;
pub mod dataio;
pub mod evolution;
pub mod expr_tree;
pub mod genetic_ops;
pub mod regression;

pub use classify::{classify_rows, failure_rate, ClassificationReport, GradeBands};
pub use evolution::{pareto_front, run, Evolution, ParetoPoint, RunConfig, RunLog, RunResult};
pub use expr_tree::{parse_infix, ExprTree, InitMethod, Node, Op};
pub use genetic_ops::{Individual, VariationRates};
pub use regression::{evaluate_individual, fit_weights, predict, rmse, Dataset, FittedModel};
