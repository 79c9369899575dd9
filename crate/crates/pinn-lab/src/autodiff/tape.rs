//! Reverse-mode tape for gradients w.r.t. network parameters.
//!
//! The tape records elementary operations with enough information to both
//! replay the forward pass and run reverse accumulation. Variables are
//! lightweight copies; constants live inline in the operations and never
//! allocate tape slots.

use std::cell::RefCell;
use std::ops::{Add, Div, Mul, Neg, Sub};

use super::scalar::Scalar;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
enum Operand {
    None,
    Node(u32),
    Const(f64),
}

#[derive(Clone, Copy, Debug)]
enum Op {
    Input,
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Tanh,
    Sigmoid,
    Sin,
    Cos,
    Exp,
    Powi(i32),
}

#[derive(Clone, Copy, Debug)]
struct Node {
    op: Op,
    a: Operand,
    b: Operand,
    value: f64,
}

/// Recorded forward computation, replayable and reverse-accumulable.
#[derive(Default)]
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// A differentiable input variable.
    pub fn input(&self, value: f64) -> Var<'_> {
        let idx = self.push(Node {
            op: Op::Input,
            a: Operand::None,
            b: Operand::None,
            value,
        });
        Var {
            value,
            node: Some((self, idx)),
        }
    }

    fn push(&self, node: Node) -> u32 {
        let mut nodes = self.nodes.borrow_mut();
        let idx = nodes.len() as u32;
        nodes.push(node);
        idx
    }

    fn operand_value(nodes: &[Node], o: Operand) -> f64 {
        match o {
            Operand::None => f64::NAN,
            Operand::Node(i) => nodes[i as usize].value,
            Operand::Const(c) => c,
        }
    }

    fn eval(op: Op, a: f64, b: f64) -> f64 {
        match op {
            Op::Input => a,
            Op::Add => a + b,
            Op::Sub => a - b,
            Op::Mul => a * b,
            Op::Div => a / b,
            Op::Neg => -a,
            Op::Tanh => a.tanh(),
            Op::Sigmoid => Scalar::sigmoid(a),
            Op::Sin => a.sin(),
            Op::Cos => a.cos(),
            Op::Exp => a.exp(),
            Op::Powi(n) => a.powi(n),
        }
    }

    /// Recompute every node from its recorded operation, in order.
    /// The result must agree with the stored values bit-for-bit.
    pub fn replay(&self) -> Vec<f64> {
        let nodes = self.nodes.borrow();
        let mut values = Vec::with_capacity(nodes.len());
        for node in nodes.iter() {
            let a = match node.a {
                Operand::None => node.value, // inputs replay to themselves
                Operand::Node(i) => values[i as usize],
                Operand::Const(c) => c,
            };
            let b = match node.b {
                Operand::None => f64::NAN,
                Operand::Node(i) => values[i as usize],
                Operand::Const(c) => c,
            };
            values.push(Self::eval(node.op, a, b));
        }
        values
    }

    /// Reverse accumulation from `output`. Returns one adjoint per node.
    pub fn backward(&self, output: &Var<'_>) -> Result<Gradients> {
        let nodes = self.nodes.borrow();
        let mut adj = vec![0.0f64; nodes.len()];
        let Some((tape, out_idx)) = output.node else {
            // Constant output: zero gradient everywhere.
            return Ok(Gradients { adj });
        };
        assert!(std::ptr::eq(tape, self), "output recorded on another tape");
        adj[out_idx as usize] = 1.0;

        for (i, node) in nodes.iter().enumerate().rev() {
            if !node.value.is_finite() {
                return Err(Error::Numerical(format!(
                    "non-finite value at tape node {i} ({:?})",
                    node.op
                )));
            }
            let go = adj[i];
            if go == 0.0 {
                continue;
            }
            let av = Self::operand_value(&nodes, node.a);
            let bv = Self::operand_value(&nodes, node.b);
            let (da, db) = match node.op {
                Op::Input => (0.0, 0.0),
                Op::Add => (1.0, 1.0),
                Op::Sub => (1.0, -1.0),
                Op::Mul => (bv, av),
                Op::Div => (1.0 / bv, -av / (bv * bv)),
                Op::Neg => (-1.0, 0.0),
                Op::Tanh => (1.0 - node.value * node.value, 0.0),
                Op::Sigmoid => (node.value * (1.0 - node.value), 0.0),
                Op::Sin => (av.cos(), 0.0),
                Op::Cos => (-av.sin(), 0.0),
                Op::Exp => (node.value, 0.0),
                Op::Powi(n) => {
                    let p = if n == 0 { 0.0 } else { n as f64 * av.powi(n - 1) };
                    (p, 0.0)
                }
            };
            if let Operand::Node(ai) = node.a {
                adj[ai as usize] += go * da;
            }
            if let Operand::Node(bi) = node.b {
                adj[bi as usize] += go * db;
            }
        }
        Ok(Gradients { adj })
    }
}

/// Adjoints produced by [`Tape::backward`].
pub struct Gradients {
    adj: Vec<f64>,
}

impl Gradients {
    pub fn get(&self, var: &Var<'_>) -> f64 {
        match var.node {
            Some((_, idx)) => self.adj[idx as usize],
            None => 0.0,
        }
    }
}

/// A scalar recorded on a [`Tape`], or a free constant when created via
/// [`Scalar::from_f64`].
#[derive(Clone, Copy)]
pub struct Var<'t> {
    value: f64,
    node: Option<(&'t Tape, u32)>,
}

impl std::fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Var({})", self.value)
    }
}

impl<'t> Var<'t> {
    fn tape_of(a: &Var<'t>, b: &Var<'t>) -> Option<&'t Tape> {
        match (a.node, b.node) {
            (Some((ta, _)), Some((tb, _))) => {
                assert!(std::ptr::eq(ta, tb), "variables from different tapes");
                Some(ta)
            }
            (Some((t, _)), None) | (None, Some((t, _))) => Some(t),
            (None, None) => None,
        }
    }

    fn operand(&self) -> Operand {
        match self.node {
            Some((_, idx)) => Operand::Node(idx),
            None => Operand::Const(self.value),
        }
    }

    fn binary(self, rhs: Self, op: Op, value: f64) -> Self {
        match Self::tape_of(&self, &rhs) {
            None => Var { value, node: None },
            Some(tape) => {
                let idx = tape.push(Node {
                    op,
                    a: self.operand(),
                    b: rhs.operand(),
                    value,
                });
                Var {
                    value,
                    node: Some((tape, idx)),
                }
            }
        }
    }

    fn unary(self, op: Op, value: f64) -> Self {
        match self.node {
            None => Var { value, node: None },
            Some((tape, _)) => {
                let idx = tape.push(Node {
                    op,
                    a: self.operand(),
                    b: Operand::None,
                    value,
                });
                Var {
                    value,
                    node: Some((tape, idx)),
                }
            }
        }
    }
}

impl<'t> Add for Var<'t> {
    type Output = Var<'t>;
    fn add(self, rhs: Self) -> Self::Output {
        self.binary(rhs, Op::Add, self.value + rhs.value)
    }
}

impl<'t> Sub for Var<'t> {
    type Output = Var<'t>;
    fn sub(self, rhs: Self) -> Self::Output {
        self.binary(rhs, Op::Sub, self.value - rhs.value)
    }
}

impl<'t> Mul for Var<'t> {
    type Output = Var<'t>;
    fn mul(self, rhs: Self) -> Self::Output {
        self.binary(rhs, Op::Mul, self.value * rhs.value)
    }
}

impl<'t> Div for Var<'t> {
    type Output = Var<'t>;
    fn div(self, rhs: Self) -> Self::Output {
        self.binary(rhs, Op::Div, self.value / rhs.value)
    }
}

impl<'t> Neg for Var<'t> {
    type Output = Var<'t>;
    fn neg(self) -> Self::Output {
        self.unary(Op::Neg, -self.value)
    }
}

impl<'t> Scalar for Var<'t> {
    fn from_f64(c: f64) -> Self {
        Var {
            value: c,
            node: None,
        }
    }
    fn value(self) -> f64 {
        self.value
    }
    fn tanh(self) -> Self {
        self.unary(Op::Tanh, self.value.tanh())
    }
    fn sigmoid(self) -> Self {
        self.unary(Op::Sigmoid, Scalar::sigmoid(self.value))
    }
    fn sin(self) -> Self {
        self.unary(Op::Sin, self.value.sin())
    }
    fn cos(self) -> Self {
        self.unary(Op::Cos, self.value.cos())
    }
    fn exp(self) -> Self {
        self.unary(Op::Exp, self.value.exp())
    }
    fn powi(self, n: i32) -> Self {
        self.unary(Op::Powi(n), self.value.powi(n))
    }
}

/// Gradient of a scalar-valued function of a flat parameter slice.
///
/// The closure receives the parameters as tape variables and must build the
/// loss from tape-supported primitives. Returns ∂loss/∂θ with the same
/// length and layout as `params`.
pub fn loss_gradient<F>(params: &[f64], f: F) -> Result<Vec<f64>>
where
    F: for<'t> FnOnce(&'t Tape, &[Var<'t>]) -> Result<Var<'t>>,
{
    let tape = Tape::new();
    let vars: Vec<Var<'_>> = params.iter().map(|&p| tape.input(p)).collect();
    let loss = f(&tape, &vars)?;
    if !loss.value().is_finite() {
        return Err(Error::Numerical(format!(
            "non-finite loss value {}",
            loss.value()
        )));
    }
    let grads = tape.backward(&loss)?;
    let g: Vec<f64> = vars.iter().map(|v| grads.get(v)).collect();
    if let Some(i) = g.iter().position(|x| !x.is_finite()) {
        return Err(Error::Numerical(format!(
            "non-finite gradient component at parameter {i}"
        )));
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_gradient() {
        // loss = θ0² at θ0 = 3 → gradient 6.
        let g = loss_gradient(&[3.0], |_, p| Ok(p[0] * p[0])).unwrap();
        assert_eq!(g, vec![6.0]);
    }

    #[test]
    fn constant_loss_zero_gradient() {
        let g = loss_gradient(&[1.0, -2.0], |_, _| Ok(Var::from_f64(4.2))).unwrap();
        assert_eq!(g, vec![0.0, 0.0]);
    }

    #[test]
    fn mixed_expression_gradient() {
        // loss = sin(a)·exp(b) + a/b at (a, b) = (0.3, 1.7)
        let (a, b) = (0.3f64, 1.7f64);
        let g = loss_gradient(&[a, b], |_, p| {
            Ok(p[0].sin() * p[1].exp() + p[0] / p[1])
        })
        .unwrap();
        let da = a.cos() * b.exp() + 1.0 / b;
        let db = a.sin() * b.exp() - a / (b * b);
        assert!((g[0] - da).abs() < 1e-14);
        assert!((g[1] - db).abs() < 1e-14);
    }

    #[test]
    fn powi_and_division() {
        // loss = a³ / b at (2, 4) → d/da = 3a²/b = 3, d/db = -a³/b² = -0.5
        let g = loss_gradient(&[2.0, 4.0], |_, p| Ok(p[0].powi(3) / p[1])).unwrap();
        assert_eq!(g, vec![3.0, -0.5]);
    }

    #[test]
    fn fan_out_accumulates() {
        // loss = a·a + a → 2a + 1
        let g = loss_gradient(&[5.0], |_, p| Ok(p[0] * p[0] + p[0])).unwrap();
        assert_eq!(g, vec![11.0]);
    }

    #[test]
    fn constants_fold_off_tape() {
        let tape = Tape::new();
        let a = Var::from_f64(2.0);
        let b = Var::from_f64(3.0);
        let c = a * b;
        assert_eq!(c.value(), 6.0);
        assert!(tape.is_empty());
    }

    #[test]
    fn replay_is_bit_exact() {
        let tape = Tape::new();
        let x = tape.input(0.37);
        let y = tape.input(-1.2);
        let expr = (x.tanh() * y.exp() + x / y).sin() - Var::from_f64(0.5) * x.powi(4);
        let replayed = tape.replay();
        let nodes_len = tape.len();
        assert_eq!(replayed.len(), nodes_len);
        // compare stored values against replayed ones, bit for bit
        let stored: Vec<f64> = {
            let n = tape.nodes.borrow();
            n.iter().map(|nd| nd.value).collect()
        };
        for (s, r) in stored.iter().zip(&replayed) {
            assert_eq!(s.to_bits(), r.to_bits());
        }
        assert!(expr.value().is_finite());
    }

    #[test]
    fn non_finite_loss_reported() {
        let err = loss_gradient(&[0.0], |_, p| Ok(p[0] / p[0])).unwrap_err();
        assert!(matches!(err, Error::Numerical(_)));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let f = |x: &[f64]| (x[0] * x[1]).sin() + (-x[0]).exp() * x[1];
        let at = [0.8, -0.6];
        let g = loss_gradient(&at, |_, p| {
            Ok((p[0] * p[1]).sin() + (-p[0]).exp() * p[1])
        })
        .unwrap();
        let h = 1e-6;
        for i in 0..2 {
            let mut up = at;
            let mut dn = at;
            up[i] += h;
            dn[i] -= h;
            let fd = (f(&up) - f(&dn)) / (2.0 * h);
            assert!((g[i] - fd).abs() < 1e-8, "component {i}: {} vs {fd}", g[i]);
        }
    }
}
