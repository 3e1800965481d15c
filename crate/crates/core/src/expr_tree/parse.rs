use super::{ExprTree, Node, Op, TreeError};

/// Parses a fully parenthesized infix expression such as `((x1 * x2) - x3)`
/// or a bare variable name. Positions in errors are byte offsets.
pub fn parse_infix(text: &str, var_names: &[String]) -> Result<ExprTree, TreeError> {
    let mut p = Parser {
        src: text,
        pos: 0,
        names: var_names,
    };
    let node = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(ExprTree::new(node))
}

/// Characters that terminate a variable name.
pub(crate) fn is_reserved(c: char) -> bool {
    c.is_whitespace() || matches!(c, '(' | ')' | '+' | '-' | '*')
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    names: &'a [String],
}

impl Parser<'_> {
    fn error(&self, message: &str) -> TreeError {
        TreeError::Syntax {
            pos: self.pos,
            message: message.to_string(),
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if !c.is_whitespace() {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    fn expr(&mut self) -> Result<Node, TreeError> {
        self.skip_ws();
        match self.peek() {
            None => Err(self.error("unexpected end of input")),
            Some('(') => {
                self.pos += 1;
                let left = self.expr()?;
                self.skip_ws();
                let op = match self.peek() {
                    Some('+') => Op::Add,
                    Some('-') => Op::Sub,
                    Some('*') => Op::Mul,
                    _ => return Err(self.error("expected one of `+`, `-`, `*`")),
                };
                self.pos += 1;
                let right = self.expr()?;
                self.skip_ws();
                if self.peek() != Some(')') {
                    return Err(self.error("expected `)`"));
                }
                self.pos += 1;
                Ok(Node::op(op, left, right))
            }
            Some(c) if is_reserved(c) => Err(self.error(&format!("unexpected `{c}`"))),
            Some(_) => {
                let start = self.pos;
                while let Some(c) = self.peek() {
                    if is_reserved(c) {
                        break;
                    }
                    self.pos += c.len_utf8();
                }
                let name = &self.src[start..self.pos];
                self.names
                    .iter()
                    .position(|n| n == name)
                    .map(Node::Var)
                    .ok_or_else(|| TreeError::UnknownVariable(name.to_string()))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: usize) -> Vec<String> {
        (1..=n).map(|i| format!("x{i}")).collect()
    }

    #[test]
    fn parses_sum() {
        let t = parse_infix("(x5 + x6)", &names(6)).unwrap();
        assert_eq!(t.root(), &Node::op(Op::Add, Node::Var(4), Node::Var(5)));
    }

    #[test]
    fn parses_nested() {
        let t = parse_infix("((x1 * x2) - x3)", &names(6)).unwrap();
        assert_eq!(
            t.root(),
            &Node::op(Op::Sub, Node::op(Op::Mul, Node::Var(0), Node::Var(1)), Node::Var(2))
        );
    }

    #[test]
    fn parses_bare_variable_and_loose_spacing() {
        assert_eq!(parse_infix("  x3 ", &names(6)).unwrap(), ExprTree::var(2));
        assert_eq!(
            parse_infix("(x1*x2)", &names(6)).unwrap().root(),
            &Node::op(Op::Mul, Node::Var(0), Node::Var(1))
        );
    }

    #[test]
    fn unknown_variable_is_named() {
        assert_eq!(
            parse_infix("(x9 + x1)", &names(6)),
            Err(TreeError::UnknownVariable("x9".into()))
        );
    }

    #[test]
    fn syntax_errors_carry_position() {
        let n = names(3);
        assert!(matches!(parse_infix("(x1 + x2", &n), Err(TreeError::Syntax { pos: 8, .. })));
        assert!(matches!(parse_infix("(x1 x2)", &n), Err(TreeError::Syntax { pos: 4, .. })));
        assert!(matches!(parse_infix("x1 + x2", &n), Err(TreeError::Syntax { pos: 3, .. })));
        assert!(matches!(parse_infix("", &n), Err(TreeError::Syntax { pos: 0, .. })));
        assert!(matches!(parse_infix(")", &n), Err(TreeError::Syntax { pos: 0, .. })));
    }
}
