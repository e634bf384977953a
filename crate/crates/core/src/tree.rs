//! Expression trees over binary arithmetic primitives, feature terminals and
//! constants.
//!
//! Depth counts edges: a lone terminal has depth 0, a single primitive over
//! two terminals has depth 1. Subtree positions are preorder indices with the
//! root at 0.

use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::{Scalar, CLAMP};

/// Binary primitive. All primitives take exactly two arguments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Op {
    Add,
    Sub,
    Mul,
    /// Protected division: a divisor of exactly zero yields 1.
    PDiv,
}

impl Op {
    pub const ALL: [Op; 4] = [Op::Add, Op::Sub, Op::Mul, Op::PDiv];

    pub fn name(self) -> &'static str {
        match self {
            Op::Add => "add",
            Op::Sub => "sub",
            Op::Mul => "mul",
            Op::PDiv => "pdiv",
        }
    }

    pub fn from_name(name: &str) -> Option<Op> {
        Op::ALL.into_iter().find(|op| op.name() == name)
    }

    /// Applies the primitive and clamps the result to `[-1e12, 1e12]`.
    #[inline]
    pub fn apply<T: Scalar>(self, a: T, b: T) -> T {
        let v = match self {
            Op::Add => a + b,
            Op::Sub => a - b,
            Op::Mul => a * b,
            Op::PDiv => {
                if b == T::zero() {
                    T::one()
                } else {
                    a / b
                }
            }
        };
        clamp(v)
    }
}

#[inline]
fn clamp<T: Scalar>(v: T) -> T {
    let bound = T::lit(CLAMP);
    if v > bound {
        bound
    } else if v < -bound {
        -bound
    } else {
        v
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Node<T> {
    Func {
        op: Op,
        args: Box<[Node<T>; 2]>,
    },
    /// 0-based attribute index.
    Feature(usize),
    Const(T),
}

#[allow(clippy::should_implement_trait)]
impl<T: Scalar> Node<T> {
    pub fn func(op: Op, a: Node<T>, b: Node<T>) -> Self {
        Node::Func {
            op,
            args: Box::new([a, b]),
        }
    }

    pub fn add(a: Node<T>, b: Node<T>) -> Self {
        Self::func(Op::Add, a, b)
    }

    pub fn sub(a: Node<T>, b: Node<T>) -> Self {
        Self::func(Op::Sub, a, b)
    }

    pub fn mul(a: Node<T>, b: Node<T>) -> Self {
        Self::func(Op::Mul, a, b)
    }

    pub fn pdiv(a: Node<T>, b: Node<T>) -> Self {
        Self::func(Op::PDiv, a, b)
    }

    pub fn is_terminal(&self) -> bool {
        !matches!(self, Node::Func { .. })
    }

    pub fn depth(&self) -> usize {
        match self {
            Node::Func { args, .. } => 1 + args[0].depth().max(args[1].depth()),
            _ => 0,
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Node::Func { args, .. } => 1 + args[0].size() + args[1].size(),
            _ => 1,
        }
    }

    fn max_feature(&self) -> Option<usize> {
        match self {
            Node::Func { args, .. } => match (args[0].max_feature(), args[1].max_feature()) {
                (Some(a), Some(b)) => Some(a.max(b)),
                (a, b) => a.or(b),
            },
            Node::Feature(i) => Some(*i),
            Node::Const(_) => None,
        }
    }

    fn eval_row(&self, x: &[T]) -> T {
        match self {
            Node::Func { op, args } => op.apply(args[0].eval_row(x), args[1].eval_row(x)),
            Node::Feature(i) => x[*i],
            Node::Const(c) => *c,
        }
    }

    fn eval_columns(&self, columns: &[Vec<T>], rows: usize) -> Vec<T> {
        match self {
            Node::Func { op, args } => {
                let mut left = args[0].eval_columns(columns, rows);
                let right = args[1].eval_columns(columns, rows);
                for (a, b) in left.iter_mut().zip(&right) {
                    *a = op.apply(*a, *b);
                }
                left
            }
            Node::Feature(i) => columns[*i].clone(),
            Node::Const(c) => vec![*c; rows],
        }
    }

    /// Preorder walk; `index` counts nodes visited so far.
    fn locate(&self, target: usize, index: &mut usize, depth: usize) -> Option<(&Node<T>, usize)> {
        if *index == target {
            return Some((self, depth));
        }
        *index += 1;
        if let Node::Func { args, .. } = self {
            for child in args.iter() {
                if let Some(found) = child.locate(target, index, depth + 1) {
                    return Some(found);
                }
            }
        }
        None
    }

    fn replace_at(&mut self, target: usize, index: &mut usize, replacement: &mut Option<Node<T>>) {
        if *index == target {
            if let Some(r) = replacement.take() {
                *self = r;
            }
            return;
        }
        *index += 1;
        if let Node::Func { args, .. } = self {
            for child in args.iter_mut() {
                if replacement.is_none() {
                    return;
                }
                child.replace_at(target, index, replacement);
            }
        }
    }
}

/// A parse tree whose evaluated output (GPout) classifies by sign.
#[derive(Clone, Debug, PartialEq)]
pub struct ExprTree<T> {
    pub root: Node<T>,
}

impl<T: Scalar> ExprTree<T> {
    pub fn new(root: Node<T>) -> Self {
        ExprTree { root }
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    pub fn size(&self) -> usize {
        self.root.size()
    }

    /// Largest feature index referenced, if any.
    pub fn max_feature(&self) -> Option<usize> {
        self.root.max_feature()
    }

    /// Number of attributes a feature vector needs for this tree to evaluate.
    pub fn required_features(&self) -> usize {
        self.max_feature().map_or(0, |m| m + 1)
    }

    pub fn check_features(&self, available: usize) -> Result<()> {
        match self.max_feature() {
            Some(m) if m >= available => Err(Error::Structure(format!(
                "tree references feature x{m} but only {available} attributes are available"
            ))),
            _ => Ok(()),
        }
    }

    /// Evaluates the tree on one feature vector.
    pub fn eval(&self, x: &[T]) -> Result<T> {
        self.check_features(x.len())?;
        Ok(self.root.eval_row(x))
    }

    /// Evaluates the tree on every row of a column-major matrix.
    ///
    /// Produces bit-identical values to calling [`ExprTree::eval`] row by row.
    pub fn eval_columns(&self, columns: &[Vec<T>], rows: usize) -> Result<Vec<T>> {
        self.check_features(columns.len())?;
        Ok(self.root.eval_columns(columns, rows))
    }

    /// The subtree at preorder position `index` and its depth below the root.
    pub fn subtree(&self, index: usize) -> Option<(&Node<T>, usize)> {
        self.root.locate(index, &mut 0, 0)
    }

    /// A copy of this tree with the subtree at `index` replaced.
    pub fn with_replaced(&self, index: usize, replacement: Node<T>) -> Self {
        let mut out = self.clone();
        out.root.replace_at(index, &mut 0, &mut Some(replacement));
        out
    }
}

impl<T: Scalar> fmt::Display for ExprTree<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::sexpr::to_sexpr(self))
    }
}
