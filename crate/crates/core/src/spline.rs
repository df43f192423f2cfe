//! Uniform-mesh ReLU splines: the second-difference coefficient operator and
//! the quasi-interpolant built from it.
//!
//! With knots `t_i = −1 + (i−2)/N`, `i = 1..2N+3`, the function
//! `(N/B) Σ_i ℒ_N(ζ)_i σ(x − B t_i)` is the piecewise-linear interpolant of
//! `ζ_k` at `B t_k` on `[−B, B]`.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Uniform mesh `t_1..t_{2N+3}` on `[−1 − 1/N, 1 + 1/N]` together with the
/// half-width `B` of the target interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mesh<T> {
    n: usize,
    half_width: T,
}

impl<T: Scalar> Mesh<T> {
    pub fn new(n: usize, half_width: T) -> Result<Self> {
        if n == 0 {
            return Err(Error::Parameter("mesh resolution must be at least 1".into()));
        }
        if !(half_width > T::zero() && half_width.is_finite()) {
            return Err(Error::Parameter(format!(
                "half-width {half_width} must be positive and finite"
            )));
        }
        Ok(Self { n, half_width })
    }

    pub fn resolution(&self) -> usize {
        self.n
    }

    pub fn half_width(&self) -> T {
        self.half_width
    }

    /// `2N + 3`.
    pub fn len(&self) -> usize {
        2 * self.n + 3
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Dimensionless knot `t_i` for 1-based `i`.
    pub fn knot(&self, i: usize) -> T {
        debug_assert!((1..=self.len()).contains(&i));
        T::lit(-1.0) + (T::from_usize_lossy(i) - T::lit(2.0)) / T::from_usize_lossy(self.n)
    }

    /// `t_1..t_{2N+3}`.
    pub fn knots(&self) -> Vec<T> {
        (1..=self.len()).map(|i| self.knot(i)).collect()
    }

    /// `B t_1..B t_{2N+3}`.
    pub fn scaled_knots(&self) -> Vec<T> {
        self.knots().into_iter().map(|t| t * self.half_width).collect()
    }

    /// `g(B t_k)` for `k = 2..2N+2`, the samples fed to [`diff_operator`].
    pub fn samples<G: Fn(T) -> T>(&self, g: G) -> Vec<T> {
        (2..=2 * self.n + 2)
            .map(|k| g(self.half_width * self.knot(k)))
            .collect()
    }
}

/// Second-difference operator `ℒ_N : ℝ^{2N+1} → ℝ^{2N+3}`.
///
/// The input holds `ζ_2..ζ_{2N+2}`; the output is
/// `(ζ_2, ζ_3 − 2ζ_2, …, ζ_{i−1} − 2ζ_i + ζ_{i+1}, …, ζ_{2N+1} − 2ζ_{2N+2}, ζ_{2N+2})`.
pub fn diff_operator<T: Scalar>(zeta: &[T]) -> Result<Vec<T>> {
    let len = zeta.len();
    if len < 3 || len % 2 == 0 {
        return Err(Error::Shape(format!(
            "difference operator needs an odd length >= 3, got {len}"
        )));
    }
    let two = T::lit(2.0);
    let mut out = Vec::with_capacity(len + 2);
    out.push(zeta[0]);
    out.push(zeta[1] - two * zeta[0]);
    for w in zeta.windows(3) {
        out.push(w[0] - two * w[1] + w[2]);
    }
    out.push(zeta[len - 2] - two * zeta[len - 1]);
    out.push(zeta[len - 1]);
    Ok(out)
}

/// `x ↦ (N/B) Σ_i a_i σ(x − B t_i)` with `a = ℒ_N({g(B t_k)})`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuasiInterpolant<T> {
    mesh: Mesh<T>,
    coeffs: Vec<T>,
}

impl<T: Scalar> QuasiInterpolant<T> {
    pub fn mesh(&self) -> &Mesh<T> {
        &self.mesh
    }

    /// `ℒ_N` output, without the `N/B` factor.
    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    /// `(N/B) ℒ_N(…)`: the outer weights of the ReLU sum.
    pub fn outer_weights(&self) -> Vec<T> {
        let s = T::from_usize_lossy(self.mesh.n) / self.mesh.half_width;
        self.coeffs.iter().map(|&a| s * a).collect()
    }

    pub fn eval(&self, x: T) -> T {
        let b = self.mesh.half_width;
        let s = T::from_usize_lossy(self.mesh.n) / b;
        let sum: T = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, &a)| a * (x - b * self.mesh.knot(k + 1)).relu())
            .sum();
        s * sum
    }

    /// `max |L(g)(x) − g(x)|` over `points ≥ 2` equispaced grid points on
    /// `[−B, B]`. A necessary-condition estimate of the sup norm.
    pub fn grid_error<G: Fn(T) -> T>(&self, g: G, points: usize) -> T {
        grid(self.mesh.half_width, points)
            .map(|x| (self.eval(x) - g(x)).abs())
            .fold(T::zero(), T::max)
    }

    /// Fixture table with columns `x, g, L` on an equispaced grid.
    pub fn fixture_csv<G: Fn(T) -> T>(&self, g: G, points: usize) -> String {
        let mut out = String::from("x,g,L\n");
        for x in grid(self.mesh.half_width, points) {
            let _ = writeln!(out, "{x},{},{}", g(x), self.eval(x));
        }
        out
    }
}

fn grid<T: Scalar>(b: T, points: usize) -> impl Iterator<Item = T> {
    let points = points.max(2);
    let step = (b + b) / T::from_usize_lossy(points - 1);
    (0..points).map(move |k| (-b + step * T::from_usize_lossy(k)).min(b))
}

/// Builds `L_t(g)` on the given mesh. Only `g(B t_2)..g(B t_{2N+2})` are used.
pub fn quasi_interpolant<T: Scalar, G: Fn(T) -> T>(g: G, mesh: Mesh<T>) -> QuasiInterpolant<T> {
    let coeffs = diff_operator(&mesh.samples(g)).expect("mesh sample count is odd and >= 3");
    QuasiInterpolant { mesh, coeffs }
}
