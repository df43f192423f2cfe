use super::assignment::solve_assignment;
use super::simplex::solve_transportation;
use super::EmpiricalMeasure;
use crate::error::{Error, Result};
use crate::scalar::{dist2, Scalar};

/// Largest atom count accepted on either side.
pub const MAX_SUPPORT: usize = 512;

/// Unequal sizes are expanded to a common size up to this bound; beyond it
/// the transportation LP is solved directly.
pub const MAX_EXPANDED: usize = 4096;

/// Optimal coupling between two equal-weight empirical measures.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan<T> {
    /// `Σ π_ij ‖x_i − y_j‖₂^p`, i.e. `W_p^p`.
    pub cost: T,
    /// Row-major `rows × cols` coupling.
    pub coupling: Vec<T>,
    pub rows: usize,
    pub cols: usize,
    pub order: u32,
}

impl<T: Scalar> TransportPlan<T> {
    pub fn distance(&self) -> T {
        match self.order {
            1 => self.cost,
            p => self.cost.powf(T::one() / T::lit(f64::from(p))),
        }
    }

    pub fn at(&self, i: usize, j: usize) -> T {
        self.coupling[i * self.cols + j]
    }
}

fn ground_cost<T: Scalar>(x: &[T], y: &[T], p: u32) -> T {
    let d = dist2(x, y);
    if p == 1 {
        d
    } else {
        d.powi(p as i32)
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Exact optimal transport plan of order `p ∈ {1, 2}`.
///
/// Equal atom counts are solved as an assignment problem. Unequal counts
/// whose least common multiple is at most [`MAX_EXPANDED`] are expanded to
/// that common size and solved the same way; anything larger goes to the
/// network simplex on the transportation polytope.
pub fn transport_plan<T: Scalar>(
    mu: &EmpiricalMeasure<T>,
    nu: &EmpiricalMeasure<T>,
    p: u32,
) -> Result<TransportPlan<T>> {
    if p != 1 && p != 2 {
        return Err(Error::Parameter(format!("unsupported order p={p}; use 1 or 2")));
    }
    if mu.dim() != nu.dim() {
        return Err(Error::Shape(format!(
            "dimension mismatch {} vs {}",
            mu.dim(),
            nu.dim()
        )));
    }
    let (n, m) = (mu.len(), nu.len());
    if n > MAX_SUPPORT || m > MAX_SUPPORT {
        return Err(Error::Capacity(format!(
            "support sizes {n} and {m}; at most {MAX_SUPPORT} atoms each"
        )));
    }
    let c = |i: usize, j: usize| ground_cost(mu.atom(i), nu.atom(j), p);
    let mut coupling = vec![T::zero(); n * m];

    let lcm = n / gcd(n, m) * m;
    if lcm <= MAX_EXPANDED {
        let (a, b) = (lcm / n, lcm / m);
        let perm = solve_assignment(lcm, |i, j| c(i / a, j / b));
        let w = T::one() / T::from_usize_lossy(lcm);
        for (i, &j) in perm.iter().enumerate() {
            let k = (i / a) * m + j / b;
            coupling[k] = coupling[k] + w;
        }
    } else {
        let cost: Vec<T> = (0..n * m).map(|k| c(k / m, k % m)).collect();
        // masses 1/n and 1/m scaled by n·m
        let flow = solve_transportation(&cost, &vec![m as i64; n], &vec![n as i64; m]);
        let total = T::from_usize_lossy(n) * T::from_usize_lossy(m);
        for (slot, f) in coupling.iter_mut().zip(flow) {
            *slot = T::lit(f as f64) / total;
        }
    }

    let mut cost = T::zero();
    for i in 0..n {
        for j in 0..m {
            let w = coupling[i * m + j];
            if w > T::zero() {
                cost = cost + w * c(i, j);
            }
        }
    }
    Ok(TransportPlan {
        cost,
        coupling,
        rows: n,
        cols: m,
        order: p,
    })
}

/// `W_p(μ, ν)` for `p ∈ {1, 2}`.
pub fn wasserstein<T: Scalar>(
    mu: &EmpiricalMeasure<T>,
    nu: &EmpiricalMeasure<T>,
    p: u32,
) -> Result<T> {
    transport_plan(mu, nu, p).map(|plan| plan.distance())
}
