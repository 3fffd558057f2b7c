//! Scalar expressions in `q1`, `q2`, `u` with forward-mode derivative jets.
//!
//! Grammar (EBNF), whitespace insignificant:
//!
//! ```text
//! expr    = term , { ( "+" | "-" ) , term } ;
//! term    = unary , { ( "*" | "/" ) , unary } ;
//! unary   = "-" , unary | power ;
//! power   = atom , [ "^" , unary ] ;          (* right-associative *)
//! atom    = number | var | func , "(" , expr , ")" | "(" , expr , ")" ;
//! var     = "q1" | "q2" | "u" ;
//! func    = "sin" | "cos" | "tan" | "exp" | "log" | "sqrt" | "atan" ;
//! number  = digits , [ "." , digits ] , [ ( "e" | "E" ) , [ "+" | "-" ] , digits ] ;
//! ```
//!
//! `^` binds tighter than unary minus, so `-q1^2` is `-(q1^2)`. Angles are in
//! radians and `log` is the natural logarithm.

mod eval;
mod parse;
pub mod scalar;

use std::collections::BTreeSet;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

pub use eval::{EvalError, Jet};
pub use parse::ParseError;
pub use scalar::{Dual, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    Q1,
    Q2,
    U,
}

impl Var {
    pub fn name(self) -> &'static str {
        match self {
            Var::Q1 => "q1",
            Var::Q2 => "q2",
            Var::U => "u",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Atan,
}

impl UnaryOp {
    fn function_name(self) -> Option<&'static str> {
        Some(match self {
            UnaryOp::Neg => return None,
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Tan => "tan",
            UnaryOp::Exp => "exp",
            UnaryOp::Log => "log",
            UnaryOp::Sqrt => "sqrt",
            UnaryOp::Atan => "atan",
        })
    }

    fn from_function_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => UnaryOp::Sin,
            "cos" => UnaryOp::Cos,
            "tan" => UnaryOp::Tan,
            "exp" => UnaryOp::Exp,
            "log" => UnaryOp::Log,
            "sqrt" => UnaryOp::Sqrt,
            "atan" => UnaryOp::Atan,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinaryOp {
    fn symbol(self) -> char {
        match self {
            BinaryOp::Add => '+',
            BinaryOp::Sub => '-',
            BinaryOp::Mul => '*',
            BinaryOp::Div => '/',
            BinaryOp::Pow => '^',
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    Var(Var),
    Unary(UnaryOp, Box<Node>),
    Binary(BinaryOp, Box<Node>, Box<Node>),
}

/// An immutable expression tree.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    root: Node,
    /// Presence of q1, q2, u, cached for the jet evaluator.
    uses: [bool; 3],
}

impl Expression {
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        parse::parse(text).map(Self::from_node)
    }

    pub fn from_node(root: Node) -> Self {
        let mut uses = [false; 3];
        fn walk(n: &Node, uses: &mut [bool; 3]) {
            match n {
                Node::Const(_) => {}
                Node::Var(v) => uses[*v as usize] = true,
                Node::Unary(_, a) => walk(a, uses),
                Node::Binary(_, a, b) => {
                    walk(a, uses);
                    walk(b, uses);
                }
            }
        }
        walk(&root, &mut uses);
        Expression { root, uses }
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn constant(v: f64) -> Self {
        Self::from_node(Node::Const(v))
    }

    pub fn var(v: Var) -> Self {
        Self::from_node(Node::Var(v))
    }

    pub fn q1() -> Self {
        Self::var(Var::Q1)
    }

    pub fn q2() -> Self {
        Self::var(Var::Q2)
    }

    pub fn u() -> Self {
        Self::var(Var::U)
    }

    fn unary(op: UnaryOp, a: Expression) -> Self {
        Self::from_node(Node::Unary(op, Box::new(a.root)))
    }

    fn binary(op: BinaryOp, a: Expression, b: Expression) -> Self {
        Self::from_node(Node::Binary(op, Box::new(a.root), Box::new(b.root)))
    }

    pub fn sin(self) -> Self {
        Self::unary(UnaryOp::Sin, self)
    }

    pub fn cos(self) -> Self {
        Self::unary(UnaryOp::Cos, self)
    }

    pub fn exp(self) -> Self {
        Self::unary(UnaryOp::Exp, self)
    }

    pub fn sqrt(self) -> Self {
        Self::unary(UnaryOp::Sqrt, self)
    }

    pub fn pow(self, e: Expression) -> Self {
        Self::binary(BinaryOp::Pow, self, e)
    }

    /// Variables referenced anywhere in the tree.
    pub fn variables(&self) -> BTreeSet<Var> {
        fn walk(n: &Node, out: &mut BTreeSet<Var>) {
            match n {
                Node::Const(_) => {}
                Node::Var(v) => {
                    out.insert(*v);
                }
                Node::Unary(_, a) => walk(a, out),
                Node::Binary(_, a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
            }
        }
        let mut out = BTreeSet::new();
        walk(&self.root, &mut out);
        out
    }

    pub fn is_constant(&self) -> bool {
        self.uses == [false; 3]
    }

    pub fn uses(&self, v: Var) -> bool {
        self.uses[v as usize]
    }

    /// Replace every occurrence of `var` by `with`.
    pub fn substitute(&self, var: Var, with: &Expression) -> Expression {
        fn walk(n: &Node, var: Var, with: &Node) -> Node {
            match n {
                Node::Var(v) if *v == var => with.clone(),
                Node::Const(_) | Node::Var(_) => n.clone(),
                Node::Unary(op, a) => Node::Unary(*op, Box::new(walk(a, var, with))),
                Node::Binary(op, a, b) => {
                    Node::Binary(*op, Box::new(walk(a, var, with)), Box::new(walk(b, var, with)))
                }
            }
        }
        Self::from_node(walk(&self.root, var, &with.root))
    }

    /// Number of constant and variable leaves.
    pub fn leaf_count(&self) -> usize {
        fn walk(n: &Node) -> usize {
            match n {
                Node::Const(_) | Node::Var(_) => 1,
                Node::Unary(_, a) => walk(a),
                Node::Binary(_, a, b) => walk(a) + walk(b),
            }
        }
        walk(&self.root)
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Const(v) if *v < 0.0 => write!(f, "(-{})", -v),
            Node::Const(v) => write!(f, "{v}"),
            Node::Var(v) => f.write_str(v.name()),
            Node::Unary(UnaryOp::Neg, a) => write!(f, "(-{a})"),
            Node::Unary(op, a) => write!(f, "{}({a})", op.function_name().unwrap_or("?")),
            Node::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
        }
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}

impl std::str::FromStr for Expression {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Expression::parse(s)
    }
}

macro_rules! binop_impl {
    ($tr:ident, $m:ident, $op:expr) => {
        impl $tr for Expression {
            type Output = Expression;
            fn $m(self, o: Expression) -> Expression {
                Expression::binary($op, self, o)
            }
        }
        impl $tr<f64> for Expression {
            type Output = Expression;
            fn $m(self, o: f64) -> Expression {
                Expression::binary($op, self, Expression::constant(o))
            }
        }
        impl $tr<Expression> for f64 {
            type Output = Expression;
            fn $m(self, o: Expression) -> Expression {
                Expression::binary($op, Expression::constant(self), o)
            }
        }
    };
}

binop_impl!(Add, add, BinaryOp::Add);
binop_impl!(Sub, sub, BinaryOp::Sub);
binop_impl!(Mul, mul, BinaryOp::Mul);
binop_impl!(Div, div, BinaryOp::Div);

impl Neg for Expression {
    type Output = Expression;
    fn neg(self) -> Expression {
        Expression::unary(UnaryOp::Neg, self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn printing_then_parsing_is_stable() {
        for text in [
            "cos(u)",
            "q1^2 + q2^2",
            "1 + 2*q1*cos(u) + 2*q2*sin(u)",
            "-q1^2^3 / (u - 0.25e-3)",
            "atan(q2) * sqrt(exp(q1)) - log(2 + tan(u))",
        ] {
            let e = Expression::parse(text).unwrap();
            let printed = e.to_string();
            let again = Expression::parse(&printed).unwrap();
            assert_eq!(e, again, "{text} -> {printed}");
        }
    }

    #[test]
    fn substitution_replaces_only_the_named_variable() {
        let e = Expression::parse("u * q1 + cos(u)").unwrap();
        let shifted = e.substitute(Var::U, &(Expression::u() + 0.5));
        assert_eq!(shifted.to_string(), "(((u + 0.5) * q1) + cos((u + 0.5)))");
        assert_eq!(shifted.variables(), [Var::Q1, Var::U].into_iter().collect());
    }

    #[test]
    fn builders_compose_trees() {
        let e = Expression::u().cos() * Expression::q1() + 2.0;
        assert_eq!(e.to_string(), "((cos(u) * q1) + 2)");
        assert_eq!(e.leaf_count(), 3);
    }
}
