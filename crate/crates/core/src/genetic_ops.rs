//! Multigene individuals, lexicographic tournament selection, and the
//! variation operators (subtree crossover, gene crossover, subtree mutation).

use std::cmp::Ordering;

use rand::Rng;
use thiserror::Error;

use crate::expr_tree::{ExprTree, InitMethod, NodeInfo};

/// Probability of picking an operator node (rather than a terminal) as a
/// crossover or mutation point, when the gene has both.
pub const OPERATOR_NODE_BIAS: f64 = 0.9;

/// Extra node-selection attempts before subtree crossover gives up and copies
/// the parent genes.
pub const CROSSOVER_RETRIES: usize = 10;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GeneticError {
    #[error("cannot select from an empty population")]
    EmptyPopulation,
    #[error("tournament size must be positive")]
    EmptyTournament,
}

/// One or more genes plus the least-squares weights and RMSE fitness once
/// evaluated. Structural edits always produce a fresh, unevaluated individual.
#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    genes: Vec<ExprTree>,
    weights: Option<Vec<f64>>,
    fitness: Option<f64>,
    complexity: usize,
}

impl Individual {
    pub fn new(genes: Vec<ExprTree>) -> Self {
        assert!(!genes.is_empty(), "an individual needs at least one gene");
        let complexity = genes.iter().map(ExprTree::node_count).sum();
        Individual {
            genes,
            weights: None,
            fitness: None,
            complexity,
        }
    }

    pub fn genes(&self) -> &[ExprTree] {
        &self.genes
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    /// `None` until evaluated.
    pub fn fitness(&self) -> Option<f64> {
        self.fitness
    }

    pub fn is_evaluated(&self) -> bool {
        self.fitness.is_some()
    }

    /// Total node count over all genes.
    pub fn complexity(&self) -> usize {
        self.complexity
    }

    pub fn max_depth(&self) -> usize {
        self.genes.iter().map(ExprTree::depth).max().unwrap_or(0)
    }

    pub(crate) fn set_evaluation(&mut self, weights: Option<Vec<f64>>, fitness: f64) {
        if let Some(w) = &weights {
            debug_assert_eq!(w.len(), self.genes.len() + 1);
        }
        self.weights = weights;
        self.fitness = Some(fitness);
    }

    /// Fitness used for ranking; unevaluated individuals rank last.
    fn rank_fitness(&self) -> f64 {
        self.fitness.unwrap_or(f64::INFINITY)
    }

    /// One line per gene in infix, then weights and fitness as raw bits.
    /// Used to diff populations in determinism checks.
    pub fn serialize(&self, var_names: &[String]) -> String {
        let mut s = String::new();
        for g in &self.genes {
            s.push_str(&g.to_infix(var_names));
            s.push('\n');
        }
        match &self.weights {
            Some(w) => {
                let bits: Vec<String> = w.iter().map(|x| format!("{:016x}", x.to_bits())).collect();
                s.push_str(&format!("weights {}\n", bits.join(" ")));
            }
            None => s.push_str("weights -\n"),
        }
        match self.fitness {
            Some(f) => s.push_str(&format!("fitness {:016x}\n", f.to_bits())),
            None => s.push_str("fitness -\n"),
        }
        s
    }
}

/// Fitness tie test: `|a - b| <= 1e-12 * max(1, |a|)`; two infinities tie.
pub fn fitness_ties(a: f64, b: f64) -> bool {
    if a.is_infinite() || b.is_infinite() {
        return a == b;
    }
    (a - b).abs() <= 1e-12 * a.abs().max(1.0)
}

/// True when `challenger` beats `incumbent`: lower fitness, or tied fitness
/// and lower complexity.
pub fn lexicographically_better(challenger: &Individual, incumbent: &Individual) -> bool {
    let (fc, fi) = (challenger.rank_fitness(), incumbent.rank_fitness());
    if fitness_ties(fc, fi) {
        challenger.complexity < incumbent.complexity
    } else {
        fc < fi
    }
}

/// Exact total order by fitness then complexity. Used where ties must not
/// blur (elitism, best-so-far tracking) so logged best fitness is monotone.
pub fn exact_order(a: &Individual, b: &Individual) -> Ordering {
    a.rank_fitness()
        .total_cmp(&b.rank_fitness())
        .then(a.complexity.cmp(&b.complexity))
}

/// Index of the tournament winner among `tournament_size` entrants drawn
/// uniformly with replacement. Ties on fitness and complexity go to the
/// earlier draw.
pub fn tournament_select<R: Rng + ?Sized>(
    population: &[Individual],
    tournament_size: usize,
    rng: &mut R,
) -> Result<usize, GeneticError> {
    if population.is_empty() {
        return Err(GeneticError::EmptyPopulation);
    }
    if tournament_size == 0 {
        return Err(GeneticError::EmptyTournament);
    }
    let entrants: Vec<usize> = (0..tournament_size)
        .map(|_| rng.gen_range(0..population.len()))
        .collect();
    Ok(tournament_winner(population, &entrants))
}

/// Winner among the given entrant indices, in draw order.
pub fn tournament_winner(population: &[Individual], entrants: &[usize]) -> usize {
    let mut best = entrants[0];
    for &e in &entrants[1..] {
        if lexicographically_better(&population[e], &population[best]) {
            best = e;
        }
    }
    best
}

/// Picks a crossover/mutation point with the operator-node bias.
fn pick_node<R: Rng + ?Sized>(tree: &ExprTree, rng: &mut R) -> NodeInfo {
    let nodes = tree.nodes();
    let (ops, terms): (Vec<NodeInfo>, Vec<NodeInfo>) = nodes.into_iter().partition(|n| !n.is_terminal);
    let pool = if ops.is_empty() {
        &terms
    } else if terms.is_empty() || rng.gen_bool(OPERATOR_NODE_BIAS) {
        &ops
    } else {
        &terms
    };
    pool[rng.gen_range(0..pool.len())]
}

/// Swaps random subtrees between one random gene of each parent. When no
/// depth-respecting pair turns up within the retry budget the children are
/// copies of the parents.
pub fn subtree_crossover<R: Rng + ?Sized>(
    a: &Individual,
    b: &Individual,
    rng: &mut R,
    max_depth: usize,
) -> (Individual, Individual) {
    let ga = rng.gen_range(0..a.genes.len());
    let gb = rng.gen_range(0..b.genes.len());
    let (ta, tb) = (&a.genes[ga], &b.genes[gb]);

    let mut genes_a = a.genes.clone();
    let mut genes_b = b.genes.clone();
    for _ in 0..=CROSSOVER_RETRIES {
        let na = pick_node(ta, rng);
        let nb = pick_node(tb, rng);
        if na.depth + nb.height <= max_depth && nb.depth + na.height <= max_depth {
            let sa = ta.subtree(na.index).expect("picked node exists").clone();
            let sb = tb.subtree(nb.index).expect("picked node exists").clone();
            genes_a[ga] = ta.with_subtree(na.index, sb);
            genes_b[gb] = tb.with_subtree(nb.index, sa);
            break;
        }
    }
    (Individual::new(genes_a), Individual::new(genes_b))
}

/// Exchanges non-empty random subsets of whole genes, then trims each child
/// back to `max_genes` by dropping random genes.
pub fn gene_crossover<R: Rng + ?Sized>(
    a: &Individual,
    b: &Individual,
    rng: &mut R,
    max_genes: usize,
) -> (Individual, Individual) {
    let take_a = random_subset(a.genes.len(), rng);
    let take_b = random_subset(b.genes.len(), rng);

    let mut child_a: Vec<ExprTree> = keep(&a.genes, &take_a);
    child_a.extend(pick(&b.genes, &take_b));
    let mut child_b: Vec<ExprTree> = keep(&b.genes, &take_b);
    child_b.extend(pick(&a.genes, &take_a));

    truncate_random(&mut child_a, max_genes, rng);
    truncate_random(&mut child_b, max_genes, rng);
    (Individual::new(child_a), Individual::new(child_b))
}

fn random_subset<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<bool> {
    let mut mask: Vec<bool> = (0..len).map(|_| rng.gen_bool(0.5)).collect();
    if !mask.contains(&true) {
        mask[rng.gen_range(0..len)] = true;
    }
    mask
}

fn keep(genes: &[ExprTree], mask: &[bool]) -> Vec<ExprTree> {
    genes.iter().zip(mask).filter(|(_, &m)| !m).map(|(g, _)| g.clone()).collect()
}

fn pick(genes: &[ExprTree], mask: &[bool]) -> Vec<ExprTree> {
    genes.iter().zip(mask).filter(|(_, &m)| m).map(|(g, _)| g.clone()).collect()
}

fn truncate_random<R: Rng + ?Sized>(genes: &mut Vec<ExprTree>, max_genes: usize, rng: &mut R) {
    let max_genes = max_genes.max(1);
    while genes.len() > max_genes {
        let i = rng.gen_range(0..genes.len());
        genes.remove(i);
    }
}

/// Replaces a random subtree of one random gene with a fresh GROW tree sized
/// to the remaining depth budget.
pub fn subtree_mutation<R: Rng + ?Sized>(
    a: &Individual,
    rng: &mut R,
    max_depth: usize,
    num_vars: usize,
) -> Individual {
    let gi = rng.gen_range(0..a.genes.len());
    let gene = &a.genes[gi];
    let node = pick_node(gene, rng);
    let budget = max_depth.saturating_sub(node.depth);
    let fresh = ExprTree::random(budget, InitMethod::Grow, num_vars, rng);
    let mut genes = a.genes.clone();
    genes[gi] = gene.with_subtree(node.index, fresh.into_root());
    Individual::new(genes)
}

/// Crossover/mutation/reproduction probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariationRates {
    pub p_crossover: f64,
    pub p_mutation: f64,
    pub p_reproduction: f64,
    /// Within crossover: chance of gene crossover instead of subtree crossover.
    pub p_gene_crossover: f64,
}

impl Default for VariationRates {
    fn default() -> Self {
        VariationRates {
            p_crossover: 0.85,
            p_mutation: 0.10,
            p_reproduction: 0.05,
            p_gene_crossover: 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variation {
    SubtreeCrossover,
    GeneCrossover,
    Mutation,
    Reproduction,
}

impl VariationRates {
    /// Problems with the rates, if any.
    pub fn validate(&self) -> Result<(), String> {
        let all = [
            ("p_crossover", self.p_crossover),
            ("p_mutation", self.p_mutation),
            ("p_reproduction", self.p_reproduction),
            ("p_gene_crossover", self.p_gene_crossover),
        ];
        for (name, p) in all {
            if !(0.0..=1.0).contains(&p) {
                return Err(format!("{name} = {p} is not a probability"));
            }
        }
        let sum = self.p_crossover + self.p_mutation + self.p_reproduction;
        if (sum - 1.0).abs() > 1e-12 {
            return Err(format!(
                "p_crossover + p_mutation + p_reproduction = {sum}, expected 1"
            ));
        }
        Ok(())
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Variation {
        let u: f64 = rng.gen();
        if u < self.p_crossover {
            if rng.gen::<f64>() < self.p_gene_crossover {
                Variation::GeneCrossover
            } else {
                Variation::SubtreeCrossover
            }
        } else if u < self.p_crossover + self.p_mutation {
            Variation::Mutation
        } else {
            Variation::Reproduction
        }
    }
}
