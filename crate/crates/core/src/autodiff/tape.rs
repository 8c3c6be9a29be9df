use std::cell::{Cell, RefCell};
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use super::scalar::{wrap_margin, wrap_offset, Scalar};

const NONE: u32 = u32::MAX;

/// Primitive operation recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Op {
    Input,
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    AddConst,
    MulConst,
    DivConst,
    ConstDiv,
    Sin,
    Cos,
    Tanh,
    Exp,
    Sqrt,
    Powi(i32),
    Powf,
    Min,
    Max,
    Clamp,
    Wrap,
}

#[derive(Debug, Clone, Copy)]
struct Node {
    op: Op,
    args: [u32; 2],
    partials: [f64; 2],
    value: f64,
}

/// Append-only record of primitive operations.
///
/// Operand indices always point at earlier nodes, so the node list is already
/// in topological order for both sweeps. A tape belongs to one evaluation on
/// one thread.
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
    inputs: RefCell<Vec<u32>>,
    domain_error: Cell<Option<&'static str>>,
    kink_margin: Cell<f64>,
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

impl fmt::Debug for Tape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tape")
            .field("nodes", &self.len())
            .field("inputs", &self.input_count())
            .finish()
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::with_capacity(64)
    }

    pub fn with_capacity(cap: usize) -> Self {
        Self {
            nodes: RefCell::new(Vec::with_capacity(cap)),
            inputs: RefCell::new(Vec::new()),
            domain_error: Cell::new(None),
            kink_margin: Cell::new(f64::INFINITY),
        }
    }

    /// Registers a new independent variable.
    pub fn var(&self, value: f64) -> Var<'_> {
        let idx = self.push(Node {
            op: Op::Input,
            args: [NONE, NONE],
            partials: [0.0, 0.0],
            value,
        });
        self.inputs.borrow_mut().push(idx);
        Var {
            value,
            index: idx,
            tape: Some(self),
        }
    }

    pub fn vars(&self, values: &[f64]) -> Vec<Var<'_>> {
        values.iter().map(|v| self.var(*v)).collect()
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn input_count(&self) -> usize {
        self.inputs.borrow().len()
    }

    /// Opcode sequence of the recording.
    pub fn ops(&self) -> Vec<Op> {
        self.nodes.borrow().iter().map(|n| n.op).collect()
    }

    /// First primitive evaluated outside its domain, if any.
    pub fn domain_error(&self) -> Option<&'static str> {
        self.domain_error.get()
    }

    /// Smallest distance of any non-smooth primitive's argument to its switching
    /// point during the recording. Infinite when no such primitive ran.
    pub fn kink_margin(&self) -> f64 {
        self.kink_margin.get()
    }

    /// Re-evaluates every node from the recorded input values and partial-free
    /// opcodes; returns the recomputed node values.
    pub fn replay(&self) -> Vec<f64> {
        let nodes = self.nodes.borrow();
        let mut vals = Vec::with_capacity(nodes.len());
        for n in nodes.iter() {
            let a = |k: usize| -> f64 {
                let i = n.args[k];
                if i == NONE {
                    f64::NAN
                } else {
                    vals[i as usize]
                }
            };
            let binary = matches!(n.op, Op::Add | Op::Sub | Op::Mul | Op::Div);
            let v = match n.op {
                Op::Input => n.value,
                // one operand was a constant, which is not stored
                _ if binary && n.args[1] == NONE => n.value,
                Op::Add => a(0) + a(1),
                Op::Sub => a(0) - a(1),
                Op::Mul => a(0) * a(1),
                Op::Div => a(0) / a(1),
                Op::Neg => -a(0),
                Op::Sin => a(0).sin(),
                Op::Cos => a(0).cos(),
                Op::Tanh => a(0).tanh(),
                Op::Exp => a(0).exp(),
                Op::Sqrt => a(0).sqrt(),
                Op::Powi(k) => a(0).powi(k),
                Op::Wrap => a(0) - wrap_offset(a(0)),
                // Nodes mixing in constants keep the recorded value; the
                // constant operand is not stored.
                Op::AddConst
                | Op::MulConst
                | Op::DivConst
                | Op::ConstDiv
                | Op::Powf
                | Op::Min
                | Op::Max
                | Op::Clamp => n.value,
            };
            vals.push(v);
        }
        vals
    }

    pub fn values(&self) -> Vec<f64> {
        self.nodes.borrow().iter().map(|n| n.value).collect()
    }

    fn push(&self, node: Node) -> u32 {
        let mut nodes = self.nodes.borrow_mut();
        let idx = nodes.len() as u32;
        nodes.push(node);
        idx
    }

    fn flag_domain(&self, op: &'static str) {
        if self.domain_error.get().is_none() {
            self.domain_error.set(Some(op));
        }
    }

    fn note_kink(&self, distance: f64) {
        if distance < self.kink_margin.get() {
            self.kink_margin.set(distance);
        }
    }

    /// Adjoint sweep: gradient of `output` with respect to every registered
    /// input, in registration order.
    pub fn adjoint(&self, output: Var<'_>) -> Vec<f64> {
        let n_inputs = self.input_count();
        if output.index == NONE {
            return vec![0.0; n_inputs];
        }
        let nodes = self.nodes.borrow();
        let mut bar = vec![0.0; output.index as usize + 1];
        bar[output.index as usize] = 1.0;
        for i in (0..=output.index as usize).rev() {
            let b = bar[i];
            if b == 0.0 {
                continue;
            }
            let n = &nodes[i];
            for k in 0..2 {
                let a = n.args[k];
                if a != NONE {
                    bar[a as usize] += b * n.partials[k];
                }
            }
        }
        self.inputs
            .borrow()
            .iter()
            .map(|&i| bar.get(i as usize).copied().unwrap_or(0.0))
            .collect()
    }

    /// Tangent sweep seeded with direction `dir` over the inputs; returns the
    /// directional derivative of every node.
    pub fn tangent(&self, dir: &[f64]) -> Vec<f64> {
        let nodes = self.nodes.borrow();
        let inputs = self.inputs.borrow();
        assert_eq!(dir.len(), inputs.len(), "tangent seed dimension");
        let mut dot = vec![0.0; nodes.len()];
        for (k, &i) in inputs.iter().enumerate() {
            dot[i as usize] = dir[k];
        }
        for (i, n) in nodes.iter().enumerate() {
            if n.op == Op::Input {
                continue;
            }
            let mut d = 0.0;
            for k in 0..2 {
                let a = n.args[k];
                if a != NONE {
                    d += n.partials[k] * dot[a as usize];
                }
            }
            dot[i] = d;
        }
        dot
    }
}

/// Value recorded on a tape, or a constant when `tape` is `None`.
#[derive(Clone, Copy)]
pub struct Var<'t> {
    value: f64,
    index: u32,
    tape: Option<&'t Tape>,
}

impl fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.index == NONE {
            write!(f, "Var(const {})", self.value)
        } else {
            write!(f, "Var(#{} = {})", self.index, self.value)
        }
    }
}

impl<'t> Var<'t> {
    pub fn index(&self) -> Option<usize> {
        (self.index != NONE).then_some(self.index as usize)
    }

    pub fn is_constant(&self) -> bool {
        self.index == NONE
    }

    fn unary(self, op: Op, value: f64, partial: f64) -> Self {
        match self.tape {
            Some(t) if self.index != NONE => {
                let index = t.push(Node {
                    op,
                    args: [self.index, NONE],
                    partials: [partial, 0.0],
                    value,
                });
                Var {
                    value,
                    index,
                    tape: Some(t),
                }
            }
            _ => Var {
                value,
                index: NONE,
                tape: None,
            },
        }
    }

    fn binary(self, other: Self, op: Op, value: f64, da: f64, db: f64) -> Self {
        let tape = match (self.index != NONE, other.index != NONE) {
            (true, _) => self.tape,
            (false, true) => other.tape,
            (false, false) => None,
        };
        match tape {
            Some(t) => {
                let (args, partials) = match (self.index != NONE, other.index != NONE) {
                    (true, true) => ([self.index, other.index], [da, db]),
                    (true, false) => ([self.index, NONE], [da, 0.0]),
                    _ => ([other.index, NONE], [db, 0.0]),
                };
                let index = t.push(Node {
                    op,
                    args,
                    partials,
                    value,
                });
                Var {
                    value,
                    index,
                    tape: Some(t),
                }
            }
            None => Var {
                value,
                index: NONE,
                tape: None,
            },
        }
    }

    fn flag(&self, op: &'static str) {
        if let Some(t) = self.tape {
            t.flag_domain(op);
        }
    }

    fn kink(&self, distance: f64) {
        if let Some(t) = self.tape {
            if self.index != NONE {
                t.note_kink(distance);
            }
        }
    }
}

impl<'t> Add for Var<'t> {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        self.binary(rhs, Op::Add, self.value + rhs.value, 1.0, 1.0)
    }
}

impl<'t> Sub for Var<'t> {
    type Output = Self;

    fn sub(self, rhs: Self) -> Self {
        self.binary(rhs, Op::Sub, self.value - rhs.value, 1.0, -1.0)
    }
}

impl<'t> Mul for Var<'t> {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        self.binary(rhs, Op::Mul, self.value * rhs.value, rhs.value, self.value)
    }
}

impl<'t> Div for Var<'t> {
    type Output = Self;

    fn div(self, rhs: Self) -> Self {
        if rhs.value == 0.0 {
            rhs.flag("div");
            self.flag("div");
        }
        let q = self.value / rhs.value;
        self.binary(rhs, Op::Div, q, 1.0 / rhs.value, -q / rhs.value)
    }
}

impl<'t> Neg for Var<'t> {
    type Output = Self;

    fn neg(self) -> Self {
        self.unary(Op::Neg, -self.value, -1.0)
    }
}

impl<'t> Add<f64> for Var<'t> {
    type Output = Self;

    fn add(self, rhs: f64) -> Self {
        self.unary(Op::AddConst, self.value + rhs, 1.0)
    }
}

impl<'t> Sub<f64> for Var<'t> {
    type Output = Self;

    fn sub(self, rhs: f64) -> Self {
        self.unary(Op::AddConst, self.value - rhs, 1.0)
    }
}

impl<'t> Mul<f64> for Var<'t> {
    type Output = Self;

    fn mul(self, rhs: f64) -> Self {
        self.unary(Op::MulConst, self.value * rhs, rhs)
    }
}

impl<'t> Div<f64> for Var<'t> {
    type Output = Self;

    fn div(self, rhs: f64) -> Self {
        if rhs == 0.0 {
            self.flag("div");
        }
        self.unary(Op::DivConst, self.value / rhs, 1.0 / rhs)
    }
}

impl<'t> Scalar for Var<'t> {
    fn constant(v: f64) -> Self {
        Var {
            value: v,
            index: NONE,
            tape: None,
        }
    }

    fn value(self) -> f64 {
        self.value
    }

    fn sin(self) -> Self {
        self.unary(Op::Sin, self.value.sin(), self.value.cos())
    }

    fn cos(self) -> Self {
        self.unary(Op::Cos, self.value.cos(), -self.value.sin())
    }

    fn tanh(self) -> Self {
        let t = self.value.tanh();
        self.unary(Op::Tanh, t, 1.0 - t * t)
    }

    fn exp(self) -> Self {
        let e = self.value.exp();
        self.unary(Op::Exp, e, e)
    }

    fn sqrt(self) -> Self {
        if self.value < 0.0 {
            self.flag("sqrt");
        }
        let s = self.value.sqrt();
        self.unary(Op::Sqrt, s, 0.5 / s)
    }

    fn powi(self, n: i32) -> Self {
        if n < 0 && self.value == 0.0 {
            self.flag("powi");
        }
        let d = if n == 0 {
            0.0
        } else {
            f64::from(n) * self.value.powi(n - 1)
        };
        self.unary(Op::Powi(n), self.value.powi(n), d)
    }

    fn powf(self, p: f64) -> Self {
        if (self.value < 0.0 && p.fract() != 0.0) || (self.value == 0.0 && p < 1.0) {
            self.flag("powf");
        }
        self.unary(Op::Powf, self.value.powf(p), p * self.value.powf(p - 1.0))
    }

    fn min(self, other: Self) -> Self {
        self.kink((self.value - other.value).abs());
        other.kink((self.value - other.value).abs());
        if self.value < other.value {
            self.binary(other, Op::Min, self.value, 1.0, 0.0)
        } else {
            self.binary(other, Op::Min, other.value, 0.0, 1.0)
        }
    }

    fn max(self, other: Self) -> Self {
        self.kink((self.value - other.value).abs());
        other.kink((self.value - other.value).abs());
        if self.value > other.value {
            self.binary(other, Op::Max, self.value, 1.0, 0.0)
        } else {
            self.binary(other, Op::Max, other.value, 0.0, 1.0)
        }
    }

    fn clamp(self, lo: f64, hi: f64) -> Self {
        self.kink((self.value - lo).abs().min((self.value - hi).abs()));
        let v = self.value;
        if v < lo {
            self.unary(Op::Clamp, lo, 0.0)
        } else if v > hi {
            self.unary(Op::Clamp, hi, 0.0)
        } else if v == lo || v == hi {
            self.unary(Op::Clamp, v, 0.0)
        } else {
            self.unary(Op::Clamp, v, 1.0)
        }
    }

    fn wrap_angle(self) -> Self {
        self.kink(wrap_margin(self.value));
        self.unary(Op::Wrap, self.value - wrap_offset(self.value), 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_rule() {
        let tape = Tape::new();
        let x = tape.var(3.0);
        let y = tape.var(-2.0);
        let f = x * y + x.sin();
        let g = tape.adjoint(f);
        assert_eq!(g, vec![-2.0 + 3f64.cos(), 3.0]);
    }

    #[test]
    fn constants_are_not_recorded() {
        let tape = Tape::new();
        let x = tape.var(1.0);
        let c = Var::constant(2.0) * Var::constant(3.0);
        assert!(c.is_constant());
        let _ = x * c;
        assert_eq!(tape.len(), 2);
    }

    #[test]
    fn sqrt_of_negative_flags_domain() {
        let tape = Tape::new();
        let x = tape.var(-1.0);
        let _ = x.sqrt();
        assert_eq!(tape.domain_error(), Some("sqrt"));
    }

    #[test]
    fn clamp_boundary_has_zero_derivative() {
        let tape = Tape::new();
        let x = tape.var(1.0);
        let y = x.clamp(-1.0, 1.0);
        assert_eq!(tape.adjoint(y), vec![0.0]);
        let tape = Tape::new();
        let x = tape.var(0.5);
        let y = x.clamp(-1.0, 1.0);
        assert_eq!(tape.adjoint(y), vec![1.0]);
        assert_eq!(tape.kink_margin(), 0.5);
    }

    #[test]
    fn replay_matches_recording() {
        let tape = Tape::new();
        let x = tape.var(0.7);
        let y = tape.var(1.3);
        let _ = (x * y).tanh() - (x / y).exp() + y.powi(3).sqrt();
        assert_eq!(tape.replay(), tape.values());
    }
}
