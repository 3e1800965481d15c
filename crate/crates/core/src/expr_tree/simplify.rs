use std::collections::HashSet;

use super::{ExprTree, Node, Op};

/// Intermediate form: a subtree is either known to be exactly zero or a
/// plain node.
enum Term {
    Zero,
    Tree(Node),
}

/// Rules, applied bottom-up until nothing changes:
///
/// * `t - t` becomes zero;
/// * `a + 0`, `0 + a` and `a - 0` become `a`;
/// * `a * 0` and `0 * a` become zero.
///
/// A zero that cannot be absorbed (at the root, or as the left operand of a
/// subtraction) is written back as `(x - x)` using the variable of the
/// cancellation that produced it.
pub(super) fn simplify(tree: &ExprTree) -> ExprTree {
    let mut current = tree.root().clone();
    loop {
        let next = materialize(reduce(&current), &current);
        if next == current {
            return ExprTree::new(next);
        }
        current = next;
    }
}

fn reduce(node: &Node) -> Term {
    match node {
        Node::Var(i) => Term::Tree(Node::Var(*i)),
        Node::Op(op, l, r) => {
            let left = reduce(l);
            let right = reduce(r);
            match (op, left, right) {
                (Op::Sub, Term::Tree(a), Term::Tree(b)) if a == b => Term::Zero,
                (Op::Add, Term::Zero, Term::Zero) | (Op::Sub, Term::Zero, Term::Zero) => Term::Zero,
                (Op::Add, Term::Tree(a), Term::Zero)
                | (Op::Add, Term::Zero, Term::Tree(a))
                | (Op::Sub, Term::Tree(a), Term::Zero) => Term::Tree(a),
                (Op::Mul, Term::Zero, _) | (Op::Mul, _, Term::Zero) => Term::Zero,
                (Op::Sub, Term::Zero, Term::Tree(b)) => {
                    Term::Tree(Node::op(Op::Sub, zero_like(l), b))
                }
                (op, Term::Tree(a), Term::Tree(b)) => Term::Tree(Node::op(*op, a, b)),
            }
        }
    }
}

fn materialize(term: Term, original: &Node) -> Node {
    match term {
        Term::Tree(n) => n,
        Term::Zero => zero_like(original),
    }
}

/// `(x - x)` with `x` the first variable appearing in `node`.
fn zero_like(node: &Node) -> Node {
    let mut n = node;
    let var = loop {
        match n {
            Node::Var(i) => break *i,
            Node::Op(_, l, _) => n = l,
        }
    };
    Node::op(Op::Sub, Node::Var(var), Node::Var(var))
}

pub(super) fn is_zero_node(node: &Node) -> bool {
    matches!(node, Node::Op(Op::Sub, l, r) if l == r)
}

pub(super) fn distinct_subtrees(node: &Node) -> usize {
    fn walk<'a>(node: &'a Node, seen: &mut HashSet<&'a Node>) {
        if seen.insert(node) {
            if let Node::Op(_, l, r) = node {
                walk(l, seen);
                walk(r, seen);
            }
        }
    }
    let mut seen = HashSet::new();
    walk(node, &mut seen);
    seen.len()
}

#[cfg(test)]
mod tests {
    use crate::expr_tree::parse_infix;

    fn names() -> Vec<String> {
        (1..=6).map(|i| format!("x{i}")).collect()
    }

    fn simp(s: &str) -> String {
        let n = names();
        parse_infix(s, &n).unwrap().simplify().to_infix(&n)
    }

    #[test]
    fn cancellation_is_absorbed_by_addition() {
        assert_eq!(simp("((x1 - x1) + x2)"), "x2");
        assert_eq!(simp("(x2 + (x1 - x1))"), "x2");
        assert_eq!(simp("(x2 - ((x3 * x4) - (x3 * x4)))"), "x2");
    }

    #[test]
    fn minimal_tree_is_a_fixpoint() {
        assert_eq!(simp("(x5 + x6)"), "(x5 + x6)");
        assert_eq!(simp("x4"), "x4");
    }

    #[test]
    fn zero_product_collapses() {
        assert_eq!(simp("((x1 - x1) * (x2 + x3))"), "(x1 - x1)");
        assert_eq!(simp("(((x2 * x3) - (x2 * x3)) + x5)"), "x5");
    }

    #[test]
    fn cascading_cancellation_reaches_fixpoint() {
        // (x2 + (x1 - x1)) - x2  ->  x2 - x2  ->  zero
        assert_eq!(simp("((x2 + (x1 - x1)) - x2)"), "(x2 - x2)");
    }

    #[test]
    fn leading_zero_in_subtraction_is_kept() {
        assert_eq!(simp("(((x3 - x3) * x1) - x4)"), "((x3 - x3) - x4)");
    }

    #[test]
    fn counts_distinct_subtrees() {
        let t = parse_infix("((x1 + x2) * (x1 + x2))", &names()).unwrap();
        assert_eq!(t.node_count(), 7);
        assert_eq!(t.distinct_subtrees(), 4);
    }
}
