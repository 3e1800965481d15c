//! Single-gene expression trees over the operator set `{+, -, *}` and the
//! input variables of a dataset.
//!
//! Depth convention: a lone terminal has depth 0, so a full binary tree of
//! depth `d` has `2^(d+1) - 1` nodes.

mod parse;
mod simplify;

use std::fmt;

use rand::Rng;
use thiserror::Error;

pub use parse::parse_infix;
pub(crate) use parse::is_reserved;

/// Probability that GROW stops with a terminal at a node above the depth limit.
pub const GROW_TERMINAL_PROBABILITY: f64 = 0.3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TreeError {
    #[error("variable index {index} out of range for a row of {len} values")]
    VarOutOfRange { index: usize, len: usize },
    #[error("syntax error at position {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Op {
    Add,
    Sub,
    Mul,
}

impl Op {
    pub const ALL: [Op; 3] = [Op::Add, Op::Sub, Op::Mul];

    #[inline]
    pub fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            Op::Add => a + b,
            Op::Sub => a - b,
            Op::Mul => a * b,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Op::Add => '+',
            Op::Sub => '-',
            Op::Mul => '*',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Node {
    Op(Op, Box<Node>, Box<Node>),
    Var(usize),
}

impl Node {
    pub fn op(op: Op, left: Node, right: Node) -> Node {
        Node::Op(op, Box::new(left), Box::new(right))
    }

    pub fn count(&self) -> usize {
        match self {
            Node::Var(_) => 1,
            Node::Op(_, l, r) => 1 + l.count() + r.count(),
        }
    }

    /// Height of the subtree rooted here (a terminal has height 0).
    pub fn height(&self) -> usize {
        match self {
            Node::Var(_) => 0,
            Node::Op(_, l, r) => 1 + l.height().max(r.height()),
        }
    }

    pub fn is_terminal(&self) -> bool {
        matches!(self, Node::Var(_))
    }

    fn max_var(&self) -> usize {
        match self {
            Node::Var(i) => *i,
            Node::Op(_, l, r) => l.max_var().max(r.max_var()),
        }
    }

    fn eval_unchecked(&self, row: &[f64]) -> f64 {
        match self {
            Node::Var(i) => row[*i],
            Node::Op(op, l, r) => op.apply(l.eval_unchecked(row), r.eval_unchecked(row)),
        }
    }

    fn eval_columns(&self, columns: &[Vec<f64>]) -> Vec<f64> {
        match self {
            Node::Var(i) => columns[*i].clone(),
            Node::Op(op, l, r) => {
                let mut a = l.eval_columns(columns);
                let b = r.eval_columns(columns);
                for (x, y) in a.iter_mut().zip(&b) {
                    *x = op.apply(*x, *y);
                }
                a
            }
        }
    }

    fn collect_vars(&self, out: &mut Vec<usize>) {
        match self {
            Node::Var(i) => out.push(*i),
            Node::Op(_, l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
        }
    }

    fn map_vars(&self, f: &impl Fn(usize) -> usize) -> Node {
        match self {
            Node::Var(i) => Node::Var(f(*i)),
            Node::Op(op, l, r) => Node::op(*op, l.map_vars(f), r.map_vars(f)),
        }
    }

    fn write_infix(&self, names: &[String], out: &mut String) {
        match self {
            Node::Var(i) => out.push_str(&names[*i]),
            Node::Op(op, l, r) => {
                out.push('(');
                l.write_infix(names, out);
                out.push(' ');
                out.push(op.symbol());
                out.push(' ');
                r.write_infix(names, out);
                out.push(')');
            }
        }
    }

    /// Like `write_infix`, but a chain of additions prints without inner
    /// parentheses.
    fn write_pretty(&self, names: &[String], out: &mut String, in_sum: bool) {
        match self {
            Node::Var(i) => out.push_str(&names[*i]),
            Node::Op(Op::Add, l, r) => {
                if !in_sum {
                    out.push('(');
                }
                l.write_pretty(names, out, true);
                out.push_str(" + ");
                r.write_pretty(names, out, true);
                if !in_sum {
                    out.push(')');
                }
            }
            Node::Op(op, l, r) => {
                out.push('(');
                l.write_pretty(names, out, false);
                out.push(' ');
                out.push(op.symbol());
                out.push(' ');
                r.write_pretty(names, out, false);
                out.push(')');
            }
        }
    }
}

/// Description of one node, addressed by its preorder index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeInfo {
    pub index: usize,
    pub depth: usize,
    pub height: usize,
    pub is_terminal: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitMethod {
    Grow,
    Full,
}

/// A single gene. Immutable once built; structural edits return new trees.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ExprTree {
    root: Node,
    node_count: usize,
    depth: usize,
}

impl ExprTree {
    pub fn new(root: Node) -> Self {
        let node_count = root.count();
        let depth = root.height();
        ExprTree {
            root,
            node_count,
            depth,
        }
    }

    pub fn var(index: usize) -> Self {
        ExprTree::new(Node::Var(index))
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn into_root(self) -> Node {
        self.root
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// `(node_count, depth)`.
    pub fn measure(&self) -> (usize, usize) {
        (self.node_count, self.depth)
    }

    /// Builds a random tree no deeper than `max_depth` over variables
    /// `0..num_vars`.
    pub fn random<R: Rng + ?Sized>(
        max_depth: usize,
        method: InitMethod,
        num_vars: usize,
        rng: &mut R,
    ) -> Self {
        assert!(num_vars >= 1, "random_tree needs at least one variable");
        ExprTree::new(random_node(max_depth, method, num_vars, rng))
    }

    pub fn evaluate(&self, row: &[f64]) -> Result<f64, TreeError> {
        let max = self.root.max_var();
        if max >= row.len() {
            return Err(TreeError::VarOutOfRange {
                index: max,
                len: row.len(),
            });
        }
        Ok(self.root.eval_unchecked(row))
    }

    /// Evaluates the tree over column-major data with `rows` rows.
    pub fn evaluate_columns(&self, columns: &[Vec<f64>], rows: usize) -> Result<Vec<f64>, TreeError> {
        let max = self.root.max_var();
        if max >= columns.len() {
            return Err(TreeError::VarOutOfRange {
                index: max,
                len: columns.len(),
            });
        }
        debug_assert!(columns.iter().all(|c| c.len() == rows));
        Ok(self.root.eval_columns(columns))
    }

    /// Sorted, de-duplicated variable indices referenced by the tree.
    pub fn variables(&self) -> Vec<usize> {
        let mut v = Vec::new();
        self.root.collect_vars(&mut v);
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn max_var_index(&self) -> usize {
        self.root.max_var()
    }

    pub fn remap_vars(&self, f: impl Fn(usize) -> usize) -> ExprTree {
        ExprTree::new(self.root.map_vars(&f))
    }

    /// Fully parenthesized infix; inverse of [`parse_infix`].
    pub fn to_infix(&self, var_names: &[String]) -> String {
        let mut s = String::new();
        self.root.write_infix(var_names, &mut s);
        s
    }

    /// Display form: addition chains are flattened (`x6 + x5 + x3`).
    /// Not guaranteed to re-parse.
    pub fn to_pretty(&self, var_names: &[String]) -> String {
        let mut s = String::new();
        self.root.write_pretty(var_names, &mut s, true);
        s
    }

    /// Every node in preorder with its depth and subtree height.
    pub fn nodes(&self) -> Vec<NodeInfo> {
        fn walk(node: &Node, depth: usize, out: &mut Vec<NodeInfo>) -> usize {
            let slot = out.len();
            out.push(NodeInfo {
                index: slot,
                depth,
                height: 0,
                is_terminal: node.is_terminal(),
            });
            let height = match node {
                Node::Var(_) => 0,
                Node::Op(_, l, r) => {
                    let hl = walk(l, depth + 1, out);
                    let hr = walk(r, depth + 1, out);
                    1 + hl.max(hr)
                }
            };
            out[slot].height = height;
            height
        }
        let mut out = Vec::with_capacity(self.node_count);
        walk(&self.root, 0, &mut out);
        out
    }

    /// Subtree at preorder position `index`.
    pub fn subtree(&self, index: usize) -> Option<&Node> {
        fn find<'a>(node: &'a Node, target: usize, next: &mut usize) -> Option<&'a Node> {
            if *next == target {
                return Some(node);
            }
            *next += 1;
            match node {
                Node::Var(_) => None,
                Node::Op(_, l, r) => find(l, target, next).or_else(|| find(r, target, next)),
            }
        }
        find(&self.root, index, &mut 0)
    }

    /// Returns a copy of this tree with the subtree at preorder position
    /// `index` replaced by `replacement`.
    pub fn with_subtree(&self, index: usize, replacement: Node) -> ExprTree {
        fn rebuild(node: &Node, target: usize, next: &mut usize, repl: &mut Option<Node>) -> Node {
            if *next == target {
                *next += node.count();
                return repl.take().expect("replacement used once");
            }
            *next += 1;
            match node {
                Node::Var(i) => Node::Var(*i),
                Node::Op(op, l, r) => {
                    let l = rebuild(l, target, next, repl);
                    let r = rebuild(r, target, next, repl);
                    Node::op(*op, l, r)
                }
            }
        }
        assert!(index < self.node_count, "node index {index} out of range");
        let mut repl = Some(replacement);
        ExprTree::new(rebuild(&self.root, index, &mut 0, &mut repl))
    }

    /// Applies the structural simplification rules to a fixpoint. The result
    /// evaluates identically to `self` on finite inputs.
    pub fn simplify(&self) -> ExprTree {
        simplify::simplify(self)
    }

    /// True when the tree is the canonical zero `(x - x)` left behind by
    /// simplification.
    pub fn is_zero(&self) -> bool {
        simplify::is_zero_node(&self.root)
    }

    /// Number of structurally distinct subtrees.
    pub fn distinct_subtrees(&self) -> usize {
        simplify::distinct_subtrees(&self.root)
    }
}

impl From<Node> for ExprTree {
    fn from(root: Node) -> Self {
        ExprTree::new(root)
    }
}

impl fmt::Display for ExprTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = (0..=self.max_var_index())
            .map(|i| format!("x{}", i + 1))
            .collect();
        f.write_str(&self.to_infix(&names))
    }
}

fn random_node<R: Rng + ?Sized>(depth_left: usize, method: InitMethod, num_vars: usize, rng: &mut R) -> Node {
    let terminal = depth_left == 0
        || (method == InitMethod::Grow && rng.gen_bool(GROW_TERMINAL_PROBABILITY));
    if terminal {
        Node::Var(rng.gen_range(0..num_vars))
    } else {
        let op = Op::ALL[rng.gen_range(0..Op::ALL.len())];
        let l = random_node(depth_left - 1, method, num_vars, rng);
        let r = random_node(depth_left - 1, method, num_vars, rng);
        Node::op(op, l, r)
    }
}
