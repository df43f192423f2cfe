use super::EmpiricalMeasure;
use crate::error::{Error, Result};
use crate::scalar::{dist2, dot, norm2, Scalar};

/// A test function with a known Lipschitz constant.
///
/// Any witness with constant at most one gives a lower bound on `W₁` by
/// Kantorovich–Rubinstein duality.
pub trait Witness<T: Scalar> {
    fn eval(&self, x: &[T]) -> T;
    fn lipschitz_bound(&self) -> T;
    fn dim(&self) -> usize;
}

/// `x ↦ ⟨ξ, x⟩`, Lipschitz constant `‖ξ‖₂`.
#[derive(Debug, Clone)]
pub struct LinearWitness<T> {
    pub direction: Vec<T>,
}

impl<T: Scalar> Witness<T> for LinearWitness<T> {
    fn eval(&self, x: &[T]) -> T {
        dot(&self.direction, x)
    }
    fn lipschitz_bound(&self) -> T {
        norm2(&self.direction)
    }
    fn dim(&self) -> usize {
        self.direction.len()
    }
}

/// `x ↦ s‖x − z‖₂`, Lipschitz constant `|s|`.
#[derive(Debug, Clone)]
pub struct DistanceWitness<T> {
    pub center: Vec<T>,
    pub scale: T,
}

impl<T: Scalar> Witness<T> for DistanceWitness<T> {
    fn eval(&self, x: &[T]) -> T {
        self.scale * dist2(x, &self.center)
    }
    fn lipschitz_bound(&self) -> T {
        self.scale.abs()
    }
    fn dim(&self) -> usize {
        self.center.len()
    }
}

/// One hidden layer: `x ↦ Σ_k a_k σ(⟨w_k, x⟩ − b_k)`.
///
/// The bound `Σ |a_k| ‖w_k‖₂` is crude but always valid.
#[derive(Debug, Clone)]
pub struct ReluWitness<T> {
    pub dim: usize,
    /// Row-major `k × dim`.
    pub weights: Vec<T>,
    pub biases: Vec<T>,
    pub outer: Vec<T>,
}

impl<T: Scalar> Witness<T> for ReluWitness<T> {
    fn eval(&self, x: &[T]) -> T {
        self.weights
            .chunks_exact(self.dim)
            .zip(&self.biases)
            .zip(&self.outer)
            .map(|((w, &b), &a)| a * (dot(w, x) - b).relu())
            .sum()
    }
    fn lipschitz_bound(&self) -> T {
        self.weights
            .chunks_exact(self.dim)
            .zip(&self.outer)
            .map(|(w, &a)| a.abs() * norm2(w))
            .sum()
    }
    fn dim(&self) -> usize {
        self.dim
    }
}

/// `max_ψ |∫ψ dμ − ∫ψ dν|` over the supplied 1-Lipschitz witnesses.
///
/// Every witness must have Lipschitz bound at most one (up to `1e-12`) and
/// match the measures' dimension. An empty witness list gives zero.
pub fn kr_lower_bound<T: Scalar>(
    mu: &EmpiricalMeasure<T>,
    nu: &EmpiricalMeasure<T>,
    witnesses: &[&dyn Witness<T>],
) -> Result<T> {
    if mu.dim() != nu.dim() {
        return Err(Error::Shape("measures have different dimensions".into()));
    }
    let limit = T::one() + T::lit(1e-12);
    let mut best = T::zero();
    for (k, w) in witnesses.iter().enumerate() {
        if w.dim() != mu.dim() {
            return Err(Error::Shape(format!("witness {k} has dimension {}", w.dim())));
        }
        let lip = w.lipschitz_bound();
        if !(lip <= limit) {
            return Err(Error::Parameter(format!(
                "witness {k} has Lipschitz bound {lip} > 1"
            )));
        }
        let gap = (mu.integrate(|x| w.eval(x)) - nu.integrate(|x| w.eval(x))).abs();
        best = best.max(gap);
    }
    Ok(best)
}
