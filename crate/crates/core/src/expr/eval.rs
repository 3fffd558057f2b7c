use super::scalar::{Dual, Scalar};
use super::{BinaryOp, Expression, Node, UnaryOp, Var};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("domain error in `{subexpr}`: {reason}")]
    Domain { subexpr: String, reason: &'static str },
}

fn domain<T>(node: &Node, reason: &'static str) -> Result<T, EvalError> {
    Err(EvalError::Domain { subexpr: node.to_string(), reason })
}

/// Value of a variable-free subtree, if it is one.
fn constant_value(n: &Node) -> Option<f64> {
    match n {
        Node::Const(v) => Some(*v),
        Node::Var(_) => None,
        Node::Unary(UnaryOp::Neg, a) => constant_value(a).map(|v| -v),
        Node::Unary(..) | Node::Binary(..) => {
            let e = Expression::from_node(n.clone());
            if e.is_constant() {
                e.eval(0.0, 0.0, 0.0).ok()
            } else {
                None
            }
        }
    }
}

fn eval_node<T: Scalar>(n: &Node, q1: T, q2: T, u: T) -> Result<T, EvalError> {
    Ok(match n {
        Node::Const(v) => T::from_f64(*v),
        Node::Var(Var::Q1) => q1,
        Node::Var(Var::Q2) => q2,
        Node::Var(Var::U) => u,
        Node::Unary(op, a) => {
            let x = eval_node(a, q1, q2, u)?;
            match op {
                UnaryOp::Neg => -x,
                UnaryOp::Sin => x.sin(),
                UnaryOp::Cos => x.cos(),
                UnaryOp::Tan => {
                    if x.value().cos() == 0.0 {
                        return domain(n, "tangent pole");
                    }
                    x.tan()
                }
                UnaryOp::Exp => x.exp(),
                UnaryOp::Log => {
                    if x.value() <= 0.0 {
                        return domain(n, "logarithm of a non-positive number");
                    }
                    x.ln()
                }
                UnaryOp::Sqrt => {
                    if x.value() < 0.0 {
                        return domain(n, "square root of a negative number");
                    }
                    x.sqrt()
                }
                UnaryOp::Atan => x.atan(),
            }
        }
        Node::Binary(op, a, b) => {
            let x = eval_node(a, q1, q2, u)?;
            if *op == BinaryOp::Pow {
                if let Some(e) = constant_value(b) {
                    if e.fract() == 0.0 && e.abs() <= i32::MAX as f64 {
                        if e < 0.0 && x.value() == 0.0 {
                            return domain(n, "zero raised to a negative power");
                        }
                        return Ok(x.powi(e as i32));
                    }
                }
                let y = eval_node(b, q1, q2, u)?;
                if x.value() < 0.0 || (x.value() == 0.0 && y.value() <= 0.0) {
                    return domain(n, "non-integer power of a non-positive base");
                }
                return Ok(x.powf(y));
            }
            let y = eval_node(b, q1, q2, u)?;
            match op {
                BinaryOp::Add => x + y,
                BinaryOp::Sub => x - y,
                BinaryOp::Mul => x * y,
                BinaryOp::Div => {
                    if y.value() == 0.0 {
                        return domain(n, "division by zero");
                    }
                    x / y
                }
                BinaryOp::Pow => unreachable!("handled above"),
            }
        }
    })
}

/// Value and partial derivatives of a scalar expression at one point.
///
/// u-derivatives go to third order; q-derivatives are first order, alone and
/// mixed with one u-derivative.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet {
    pub value: f64,
    pub du: f64,
    pub duu: f64,
    pub duuu: f64,
    pub dq1: f64,
    pub dq2: f64,
    pub dq1_du: f64,
    pub dq2_du: f64,
}

impl Jet {
    pub fn constant(value: f64) -> Self {
        Jet { value, ..Default::default() }
    }

    /// Gradient in q.
    pub fn dq(&self) -> [f64; 2] {
        [self.dq1, self.dq2]
    }

    /// Gradient in q of the first u-derivative.
    pub fn dq_du(&self) -> [f64; 2] {
        [self.dq1_du, self.dq2_du]
    }
}

type D2 = Dual<Dual<f64>>;
type D3 = Dual<Dual<Dual<f64>>>;

impl Expression {
    /// Evaluate with any scalar type; derivatives follow from the seeding of
    /// the arguments.
    pub fn eval_generic<T: Scalar>(&self, q1: T, q2: T, u: T) -> Result<T, EvalError> {
        eval_node(&self.root, q1, q2, u)
    }

    pub fn eval(&self, q1: f64, q2: f64, u: f64) -> Result<f64, EvalError> {
        eval_node(&self.root, q1, q2, u)
    }

    /// Forward-mode jet. Three nested perturbations of `u` give the
    /// u-derivatives; one perturbation of `q_j` over one of `u` gives the
    /// first-order and mixed q-derivatives.
    pub fn eval_jet(&self, q1: f64, q2: f64, u: f64) -> Result<Jet, EvalError> {
        let mut jet = self.eval_u_jet(q1, q2, u)?;
        let u_seed = Dual::variable(u);
        let cst = |x: f64| D2::from_f64(x);
        let q_seed = |x: f64| D2::new(Dual::constant(x), Dual::constant(1.0));
        let lift_u = D2::constant(u_seed);
        if self.uses(Var::Q1) {
            let r = eval_node(&self.root, q_seed(q1), cst(q2), lift_u)?;
            jet.dq1 = r.eps.re;
            jet.dq1_du = r.eps.eps;
        }
        if self.uses(Var::Q2) {
            let r = eval_node(&self.root, cst(q1), q_seed(q2), lift_u)?;
            jet.dq2 = r.eps.re;
            jet.dq2_du = r.eps.eps;
        }
        Ok(jet)
    }

    /// Value and u-derivatives only; the q-slots are left at zero.
    pub fn eval_u_jet(&self, q1: f64, q2: f64, u: f64) -> Result<Jet, EvalError> {
        let mut jet = Jet::default();
        if self.uses(Var::U) {
            let seed = D3::new(
                Dual::new(Dual::variable(u), Dual::constant(1.0)),
                Dual::new(Dual::constant(1.0), Dual::constant(0.0)),
            );
            let c = |x: f64| D3::from_f64(x);
            let r = eval_node(&self.root, c(q1), c(q2), seed)?;
            jet.value = r.re.re.re;
            jet.du = r.re.re.eps;
            jet.duu = r.re.eps.eps;
            jet.duuu = r.eps.eps.eps;
        } else {
            jet.value = eval_node(&self.root, q1, q2, u)?;
        }
        Ok(jet)
    }
}
