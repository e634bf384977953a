//! Prefix s-expression text form for trees, e.g.
//! `(sub (mul x3 0.412) (pdiv x0 x7))`.
//!
//! Features print as `x<index>`. Constants print in positional decimal with
//! 17 significant digits (trailing zeros trimmed), which round-trips every
//! `f64` and `f32` exactly.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tree::{ExprTree, Node, Op};

pub fn to_sexpr<T: Scalar>(tree: &ExprTree<T>) -> String {
    let mut out = String::new();
    write_node(&tree.root, &mut out);
    out
}

fn write_node<T: Scalar>(node: &Node<T>, out: &mut String) {
    match node {
        Node::Func { op, args } => {
            out.push('(');
            out.push_str(op.name());
            out.push(' ');
            write_node(&args[0], out);
            out.push(' ');
            write_node(&args[1], out);
            out.push(')');
        }
        Node::Feature(i) => {
            out.push('x');
            out.push_str(&i.to_string());
        }
        Node::Const(c) => out.push_str(&format_constant(c.as_f64())),
    }
}

pub fn format_constant(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let exponent = v.abs().log10().floor() as i32;
    let precision = (16 - exponent).max(0) as usize;
    let s = format!("{v:.precision$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

#[derive(Debug, PartialEq)]
enum Token<'a> {
    Open,
    Close,
    Atom(&'a str),
}

fn tokenize(text: &str) -> Vec<(usize, Token<'_>)> {
    let mut tokens = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'(' => {
                tokens.push((i, Token::Open));
                i += 1;
            }
            b')' => {
                tokens.push((i, Token::Close));
                i += 1;
            }
            c if c.is_ascii_whitespace() => i += 1,
            _ => {
                let start = i;
                while i < bytes.len()
                    && !bytes[i].is_ascii_whitespace()
                    && bytes[i] != b'('
                    && bytes[i] != b')'
                {
                    i += 1;
                }
                tokens.push((start, Token::Atom(&text[start..i])));
            }
        }
    }
    tokens
}

struct Parser<'a> {
    tokens: Vec<(usize, Token<'a>)>,
    pos: usize,
    len: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, message: &str) -> Error {
        let (offset, token) = match self.tokens.get(self.pos) {
            Some((off, Token::Open)) => (*off, "(".to_string()),
            Some((off, Token::Close)) => (*off, ")".to_string()),
            Some((off, Token::Atom(a))) => (*off, a.to_string()),
            None => (self.len, "<end of input>".to_string()),
        };
        Error::SExpr {
            offset,
            token,
            message: message.to_string(),
        }
    }

    fn node<T: Scalar>(&mut self) -> Result<Node<T>> {
        match self.tokens.get(self.pos) {
            None => Err(self.err("unexpected end of input")),
            Some((_, Token::Close)) => Err(self.err("unexpected ')'")),
            Some((_, Token::Atom(atom))) => {
                let node = parse_atom(atom).ok_or_else(|| self.err("unknown terminal"))?;
                self.pos += 1;
                Ok(node)
            }
            Some((_, Token::Open)) => {
                self.pos += 1;
                let op = match self.tokens.get(self.pos) {
                    Some((_, Token::Atom(name))) => {
                        Op::from_name(name).ok_or_else(|| self.err("unknown primitive"))?
                    }
                    _ => return Err(self.err("expected primitive name")),
                };
                self.pos += 1;
                let a = self.node()?;
                let b = self.node()?;
                match self.tokens.get(self.pos) {
                    Some((_, Token::Close)) => {
                        self.pos += 1;
                        Ok(Node::func(op, a, b))
                    }
                    _ => Err(self.err("expected ')' after two arguments")),
                }
            }
        }
    }
}

fn parse_atom<T: Scalar>(atom: &str) -> Option<Node<T>> {
    if let Some(index) = atom.strip_prefix('x') {
        if index.is_empty() || !index.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        return index.parse().ok().map(Node::Feature);
    }
    let first = atom.as_bytes()[0];
    if !(first.is_ascii_digit() || matches!(first, b'-' | b'+' | b'.')) {
        return None;
    }
    let v: f64 = atom.parse().ok()?;
    if !v.is_finite() {
        return None;
    }
    T::from_f64(v).filter(|c| c.is_finite()).map(Node::Const)
}

pub fn parse<T: Scalar>(text: &str) -> Result<ExprTree<T>> {
    let mut parser = Parser {
        tokens: tokenize(text),
        pos: 0,
        len: text.len(),
    };
    let root = parser.node()?;
    if parser.pos != parser.tokens.len() {
        return Err(parser.err("trailing input after expression"));
    }
    Ok(ExprTree::new(root))
}

impl<T: Scalar> std::str::FromStr for ExprTree<T> {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prints_prefix_form() {
        let tree: ExprTree<f64> = ExprTree::new(Node::sub(
            Node::mul(Node::Feature(3), Node::Const(0.412)),
            Node::pdiv(Node::Feature(0), Node::Feature(7)),
        ));
        assert_eq!(
            to_sexpr(&tree),
            "(sub (mul x3 0.41199999999999998) (pdiv x0 x7))"
        );
    }

    #[test]
    fn parses_spec_style_example() {
        let tree: ExprTree<f64> = parse("(sub (mul x3 0.412) (pdiv x0 x7))").unwrap();
        assert_eq!(tree.size(), 7);
        assert_eq!(tree.max_feature(), Some(7));
        assert_eq!(tree.subtree(2).unwrap().0, &Node::Feature(3));
        assert_eq!(tree.subtree(3).unwrap().0, &Node::Const(0.412));
    }

    #[test]
    fn constant_formatting() {
        assert_eq!(format_constant(0.0), "0");
        assert_eq!(format_constant(-0.0), "0");
        assert_eq!(format_constant(0.5), "0.5");
        assert_eq!(format_constant(-1.0), "-1");
        assert_eq!(format_constant(1e12), "1000000000000");
        for v in [
            0.1,
            -0.7316,
            1.0 / 3.0,
            2.5e-9,
            123456.789,
            f64::MIN_POSITIVE,
        ] {
            let s = format_constant(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
        }
    }

    #[test]
    fn whitespace_is_free_form() {
        let a: ExprTree<f64> = parse("( add\n x0\t-1 )").unwrap();
        let b: ExprTree<f64> = parse("(add x0 -1)").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_malformed_input() {
        let cases = [
            ("", "<end of input>"),
            ("(add x0)", ")"),
            ("(add x0 x1 x2)", "x2"),
            ("(pow x0 x1)", "pow"),
            ("(add x0 y1)", "y1"),
            ("(add x0 x1", "<end of input>"),
            ("x0 x1", "x1"),
            (")", ")"),
            ("(add x0 nan)", "nan"),
            ("(add x0 inf)", "inf"),
            ("(add x0 x)", "x"),
        ];
        for (text, token) in cases {
            match parse::<f64>(text) {
                Err(Error::SExpr { token: t, .. }) => assert_eq!(t, token, "{text}"),
                other => panic!("{text}: expected s-expression error, got {other:?}"),
            }
        }
    }

    #[test]
    fn f32_round_trip() {
        let tree: ExprTree<f32> = ExprTree::new(Node::add(Node::Const(0.1f32), Node::Feature(2)));
        let back: ExprTree<f32> = parse(&to_sexpr(&tree)).unwrap();
        assert_eq!(back, tree);
    }
}
