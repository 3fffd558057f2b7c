use super::{BinaryOp, Node, UnaryOp, Var};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("`{name}` at byte {offset} takes {expected} argument(s), got {found}")]
    Arity { name: String, offset: usize, expected: usize, found: usize },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
    End,
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => i += 1,
            b'0'..=b'9' | b'.' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let lit = &text[start..i];
                let v: f64 = lit.parse().map_err(|_| ParseError::Syntax {
                    offset: start,
                    message: format!("malformed number `{lit}`"),
                })?;
                out.push((Tok::Num(v), start));
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(text[start..i].to_string()), start));
            }
            b'+' | b'-' | b'*' | b'/' | b'^' => {
                out.push((Tok::Op(c as char), i));
                i += 1;
            }
            b'(' => {
                out.push((Tok::LParen, i));
                i += 1;
            }
            b')' => {
                out.push((Tok::RParen, i));
                i += 1;
            }
            b',' => {
                out.push((Tok::Comma, i));
                i += 1;
            }
            _ => {
                let ch = text[i..].chars().next().unwrap_or('?');
                return Err(ParseError::Syntax { offset: i, message: format!("unexpected character `{ch}`") });
            }
        }
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn syntax<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax { offset: self.offset(), message: message.into() })
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Op('+') => BinaryOp::Add,
                Tok::Op('-') => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Op('*') => BinaryOp::Mul,
                Tok::Op('/') => BinaryOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        if let Tok::Op('-') = self.peek() {
            self.bump();
            let inner = self.unary()?;
            return Ok(Node::Unary(UnaryOp::Neg, Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.atom()?;
        if let Tok::Op('^') = self.peek() {
            self.bump();
            let exponent = self.unary()?;
            return Ok(Node::Binary(BinaryOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, ParseError> {
        let (tok, offset) = self.bump();
        match tok {
            Tok::Num(v) => Ok(Node::Const(v)),
            Tok::LParen => {
                let inner = self.expr()?;
                match self.peek() {
                    Tok::RParen => {
                        self.bump();
                        Ok(inner)
                    }
                    _ => self.syntax("expected `)`"),
                }
            }
            Tok::Ident(name) => self.identifier(name, offset),
            Tok::End => Err(ParseError::Syntax { offset, message: "unexpected end of input".into() }),
            other => Err(ParseError::Syntax { offset, message: format!("unexpected token {other:?}") }),
        }
    }

    fn identifier(&mut self, name: String, offset: usize) -> Result<Node, ParseError> {
        let var = match name.as_str() {
            "q1" => Some(Var::Q1),
            "q2" => Some(Var::Q2),
            "u" => Some(Var::U),
            _ => None,
        };
        if let Some(v) = var {
            if let Tok::LParen = self.peek() {
                return self.syntax(format!("variable `{name}` cannot be called"));
            }
            return Ok(Node::Var(v));
        }
        let Some(op) = UnaryOp::from_function_name(&name) else {
            return Err(ParseError::UnknownIdentifier { name, offset });
        };
        match self.peek() {
            Tok::LParen => {
                self.bump();
            }
            _ => return self.syntax(format!("expected `(` after `{name}`")),
        }
        let mut args = Vec::new();
        if let Tok::RParen = self.peek() {
            self.bump();
        } else {
            loop {
                args.push(self.expr()?);
                match self.bump() {
                    (Tok::Comma, _) => continue,
                    (Tok::RParen, _) => break,
                    (_, at) => {
                        return Err(ParseError::Syntax { offset: at, message: "expected `,` or `)`".into() })
                    }
                }
            }
        }
        if args.len() != 1 {
            return Err(ParseError::Arity { name, offset, expected: 1, found: args.len() });
        }
        Ok(Node::Unary(op, Box::new(args.pop().expect("one argument"))))
    }
}

pub(super) fn parse(text: &str) -> Result<Node, ParseError> {
    let mut p = Parser { toks: tokenize(text)?, pos: 0 };
    let node = p.expr()?;
    match p.peek() {
        Tok::End => Ok(node),
        _ => p.syntax("trailing input"),
    }
}

#[cfg(test)]
mod tests {
    use super::super::Expression;
    use super::*;

    fn p(s: &str) -> Node {
        parse(s).unwrap()
    }

    fn var(v: Var) -> Box<Node> {
        Box::new(Node::Var(v))
    }

    #[test]
    fn single_function() {
        assert_eq!(p("cos(u)"), Node::Unary(UnaryOp::Cos, var(Var::U)));
    }

    #[test]
    fn sum_of_squares() {
        let sq = |v| Box::new(Node::Binary(BinaryOp::Pow, var(v), Box::new(Node::Const(2.0))));
        assert_eq!(p("q1^2 + q2^2"), Node::Binary(BinaryOp::Add, sq(Var::Q1), sq(Var::Q2)));
    }

    #[test]
    fn precedence_of_the_closing_example_indicatrix() {
        let e = Expression::parse("1 + 2*q1*cos(u) + 2*q2*sin(u)").unwrap();
        assert_eq!(e.leaf_count(), 7);
        assert_eq!(e.to_string(), "((1 + ((2 * q1) * cos(u))) + ((2 * q2) * sin(u)))");
    }

    #[test]
    fn power_binds_tighter_than_negation_and_is_right_associative() {
        assert_eq!(Expression::parse("-q1^2").unwrap().to_string(), "(-(q1 ^ 2))");
        assert_eq!(Expression::parse("q1^2^3").unwrap().to_string(), "(q1 ^ (2 ^ 3))");
        assert_eq!(Expression::parse("2^-u").unwrap().to_string(), "(2 ^ (-u))");
        assert_eq!(Expression::parse("-2*u").unwrap().to_string(), "((-2) * u)");
    }

    #[test]
    fn errors_carry_offsets() {
        assert_eq!(
            parse("q1 + $"),
            Err(ParseError::Syntax { offset: 5, message: "unexpected character `$`".into() })
        );
        assert_eq!(parse("x + 1"), Err(ParseError::UnknownIdentifier { name: "x".into(), offset: 0 }));
        assert_eq!(
            parse("1 + sin(u, q1)"),
            Err(ParseError::Arity { name: "sin".into(), offset: 4, expected: 1, found: 2 })
        );
        assert!(matches!(parse("sin()"), Err(ParseError::Arity { found: 0, .. })));
        assert!(matches!(parse("(q1 + 2"), Err(ParseError::Syntax { offset: 7, .. })));
        assert!(matches!(parse("q1 q2"), Err(ParseError::Syntax { offset: 3, .. })));
        assert!(matches!(parse(""), Err(ParseError::Syntax { offset: 0, .. })));
        assert!(matches!(parse("u(2)"), Err(ParseError::Syntax { .. })));
        assert!(matches!(parse("sin u"), Err(ParseError::Syntax { .. })));
    }

    #[test]
    fn scientific_literals() {
        assert_eq!(p("1.5e-3"), Node::Const(1.5e-3));
        assert_eq!(p("2E+2"), Node::Const(200.0));
    }
}
