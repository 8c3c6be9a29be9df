//! Automatic differentiation of dynamics, costs and policies.
//!
//! Functions are written once against [`Scalar`] and evaluated three ways:
//! on plain `f64` (simulation, finite differences), on [`Var`] (recorded on a
//! [`Tape`], then swept in adjoint or tangent mode) and on [`Dual`] (a single
//! forward tangent). A fresh tape is recorded for every evaluation.

mod dual;
mod scalar;
mod tape;

pub use dual::Dual;
pub use scalar::{constants, dot, values, Scalar};
pub use tape::{Op, Tape, Var};

use crate::error::{dim_mismatch, Error, Result};
use crate::linalg::Matrix;

/// Vector-valued function `ℝⁿ → ℝᵏ` expressed over [`Scalar`] primitives.
/// The output dimension must not depend on the input values.
pub trait DiffFunction {
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S>;
}

impl<F: DiffFunction + ?Sized> DiffFunction for &F {
    fn input_dim(&self) -> usize {
        (**self).input_dim()
    }

    fn output_dim(&self) -> usize {
        (**self).output_dim()
    }

    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        (**self).eval(x)
    }
}

/// Which sweep direction [`jacobian_with`] uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JacobianMode {
    /// Tangent when `n ≤ k`, adjoint otherwise.
    Auto,
    Tangent,
    Adjoint,
}

/// Jacobian together with the work it took: one recorded evaluation plus
/// `sweeps` derivative passes over the tape.
#[derive(Debug, Clone)]
pub struct JacobianReport {
    pub value: Vec<f64>,
    pub jacobian: Matrix,
    pub sweeps: usize,
    pub mode: JacobianMode,
}

fn check_input<F: DiffFunction>(f: &F, x: &[f64]) -> Result<()> {
    if x.len() != f.input_dim() {
        return Err(dim_mismatch(format!(
            "function takes {} inputs, got {}",
            f.input_dim(),
            x.len()
        )));
    }
    Ok(())
}

fn record<'t, F: DiffFunction>(tape: &'t Tape, f: &F, x: &[f64]) -> Result<(Vec<Var<'t>>, Vec<Var<'t>>)> {
    let inputs = tape.vars(x);
    let out = f.eval(&inputs);
    if out.len() != f.output_dim() {
        return Err(dim_mismatch(format!(
            "function declared {} outputs, produced {}",
            f.output_dim(),
            out.len()
        )));
    }
    if let Some(op) = tape.domain_error() {
        return Err(Error::Domain { op });
    }
    Ok((inputs, out))
}

/// Value and adjoint-mode gradient of a scalar-output function.
pub fn grad<F: DiffFunction>(f: &F, x: &[f64]) -> Result<(f64, Vec<f64>)> {
    check_input(f, x)?;
    if f.output_dim() != 1 {
        return Err(dim_mismatch(format!(
            "grad needs a scalar function, output dimension is {}",
            f.output_dim()
        )));
    }
    let tape = Tape::with_capacity(16 * x.len() + 64);
    let (_, out) = record(&tape, f, x)?;
    Ok((out[0].value(), tape.adjoint(out[0])))
}

pub fn jacobian<F: DiffFunction>(f: &F, x: &[f64]) -> Result<Matrix> {
    jacobian_with(f, x, JacobianMode::Auto).map(|r| r.jacobian)
}

/// Records `f` once and extracts its Jacobian by tangent or adjoint sweeps.
pub fn jacobian_with<F: DiffFunction>(f: &F, x: &[f64], mode: JacobianMode) -> Result<JacobianReport> {
    check_input(f, x)?;
    let n = f.input_dim();
    let k = f.output_dim();
    let mode = match mode {
        JacobianMode::Auto if n <= k => JacobianMode::Tangent,
        JacobianMode::Auto => JacobianMode::Adjoint,
        m => m,
    };
    let tape = Tape::with_capacity(64);
    let (_, out) = record(&tape, f, x)?;
    let mut jac = Matrix::zeros(k, n);
    let sweeps = match mode {
        JacobianMode::Tangent => {
            let mut seed = vec![0.0; n];
            for j in 0..n {
                seed.iter_mut().for_each(|s| *s = 0.0);
                seed[j] = 1.0;
                let dot = tape.tangent(&seed);
                for (i, o) in out.iter().enumerate() {
                    jac[(i, j)] = o.index().map_or(0.0, |idx| dot[idx]);
                }
            }
            n
        }
        _ => {
            for (i, o) in out.iter().enumerate() {
                let row = tape.adjoint(*o);
                for (j, v) in row.into_iter().enumerate() {
                    jac[(i, j)] = v;
                }
            }
            k
        }
    };
    Ok(JacobianReport {
        value: values(&out),
        jacobian: jac,
        sweeps,
        mode,
    })
}

/// Directional derivative `J(x)·v` evaluated with dual numbers.
pub fn jvp<F: DiffFunction>(f: &F, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    check_input(f, x)?;
    if v.len() != x.len() {
        return Err(dim_mismatch("direction and point differ in length"));
    }
    let duals: Vec<Dual> = x.iter().zip(v).map(|(a, b)| Dual::new(*a, *b)).collect();
    Ok(f.eval(&duals).into_iter().map(|d| d.tangent).collect())
}

/// Smallest distance to a non-smooth switching point met while evaluating
/// `f` at `x`.
pub fn kink_margin<F: DiffFunction>(f: &F, x: &[f64]) -> f64 {
    let tape = Tape::new();
    let inputs = tape.vars(x);
    let _ = f.eval(&inputs);
    tape.kink_margin()
}

/// Central-difference Jacobian and the number of function evaluations used.
#[derive(Debug, Clone)]
pub struct FdJacobian {
    pub jacobian: Matrix,
    pub evaluations: usize,
}

/// Column `j` is `[f(x + ε·eⱼ) − f(x − ε·eⱼ)] / 2ε`; exactly `2n` calls to `f`.
pub fn finite_difference_jacobian<F>(mut f: F, x: &[f64], eps: f64) -> FdJacobian
where
    F: FnMut(&[f64]) -> Vec<f64>,
{
    assert!(eps > 0.0, "finite-difference step must be positive");
    let n = x.len();
    let mut probe = x.to_vec();
    let mut columns = Vec::with_capacity(n);
    let mut evaluations = 0;
    for j in 0..n {
        probe[j] = x[j] + eps;
        let plus = f(&probe);
        probe[j] = x[j] - eps;
        let minus = f(&probe);
        probe[j] = x[j];
        evaluations += 2;
        columns.push(
            plus.iter()
                .zip(&minus)
                .map(|(p, m)| (p - m) / (2.0 * eps))
                .collect::<Vec<f64>>(),
        );
    }
    let k = columns.first().map_or(0, |c| c.len());
    let mut jac = Matrix::zeros(k, n);
    for (j, col) in columns.iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            jac[(i, j)] = *v;
        }
    }
    FdJacobian {
        jacobian: jac,
        evaluations,
    }
}

/// Central-difference gradient of a scalar function.
pub fn finite_difference_gradient<F>(mut f: F, x: &[f64], eps: f64) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    finite_difference_jacobian(|p| vec![f(p)], x, eps)
        .jacobian
        .into_data()
}

/// Outcome of comparing an analytic gradient with central differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientCheck {
    pub max_rel_error: f64,
    pub passed: bool,
}

/// Largest entrywise discrepancy relative to the gradient's scale
/// `max(‖a‖∞, ‖b‖∞)`; the scale is floored at `1e-8` so near-zero gradients
/// fall back to an absolute comparison.
pub fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let scale = analytic
        .iter()
        .chain(numeric)
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1e-8);
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, b)| (a - b).abs() / scale)
        .fold(0.0, f64::max)
}

/// Checks a supplied analytic gradient against central differences of `f`.
pub fn gradient_check_with<F>(analytic: &[f64], f: F, x: &[f64], eps: f64, tol: f64) -> GradientCheck
where
    F: FnMut(&[f64]) -> f64,
{
    let numeric = finite_difference_gradient(f, x, eps);
    let err = if analytic.len() == numeric.len() {
        relative_error(analytic, &numeric)
    } else {
        f64::INFINITY
    };
    GradientCheck {
        max_rel_error: err,
        passed: err <= tol,
    }
}

/// Compares the adjoint-mode gradient of `f` against central differences.
pub fn gradient_check<F: DiffFunction>(f: &F, x: &[f64], eps: f64, tol: f64) -> GradientCheck {
    match grad(f, x) {
        Ok((_, g)) => gradient_check_with(&g, |p| f.eval(p)[0], x, eps, tol),
        Err(_) => GradientCheck {
            max_rel_error: f64::INFINITY,
            passed: false,
        },
    }
}
