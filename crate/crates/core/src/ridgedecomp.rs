//! Ridge decompositions of multivariate polynomials:
//! `Q(x) = Q(0) + Σ_k Σ_ℓ γ_{k,ℓ} (ξ_k · x)^ℓ` with unit directions `ξ_k`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::MAX_DIM;
use crate::scalar::{dot, norm2};

/// Direction draws attempted before giving up on a rank-deficient set.
pub const MAX_RETRIES: usize = 50;

/// Relative singular-value threshold for the spanning check.
pub const RANK_TOL: f64 = 1e-10;

/// Points used to measure the reconstruction residual.
pub const RESIDUAL_POINTS: usize = 512;

/// `C(d − 1 + q, q)`, the dimension of homogeneous degree-`q` polynomials
/// in `d` variables.
pub fn n_q(d: usize, q: usize) -> Result<u64> {
    if d == 0 || q == 0 {
        return Err(Error::Parameter(format!("n_q needs d, q >= 1 (got d={d}, q={q})")));
    }
    let overflow = || Error::Capacity(format!("C({}, {q}) does not fit in 64 bits", d - 1 + q));
    let k = q.min(d - 1) as u128;
    let top = (d - 1 + q) as u128;
    let mut acc: u128 = 1;
    for i in 1..=k {
        // acc = C(top − k + i, i) stays integral at every step
        acc = acc.checked_mul(top - k + i).ok_or_else(overflow)? / i;
    }
    u64::try_from(acc).map_err(|_| overflow())
}

/// One monomial `c · x^α`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub powers: Vec<u32>,
    pub coeff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RawPolynomial {
    dim: usize,
    terms: Vec<Term>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sup_norm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gradient_sup: Option<f64>,
}

/// Polynomial in the monomial basis. Optional analytic values of
/// `‖Q‖_{C(Ω)}` and `sup_Ω ‖∇Q‖₂` may be attached; otherwise conservative
/// bounds from the coefficients are used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPolynomial", into = "RawPolynomial")]
pub struct PolynomialSpec {
    dim: usize,
    terms: BTreeMap<Vec<u32>, f64>,
    sup_norm: Option<f64>,
    gradient_sup: Option<f64>,
}

impl TryFrom<RawPolynomial> for PolynomialSpec {
    type Error = Error;
    fn try_from(raw: RawPolynomial) -> Result<Self> {
        let mut p = Self::new(raw.dim, raw.terms.into_iter().map(|t| (t.powers, t.coeff)))?;
        if let Some(s) = raw.sup_norm {
            p = p.with_sup_norm(s)?;
        }
        if let Some(s) = raw.gradient_sup {
            p = p.with_gradient_sup(s)?;
        }
        Ok(p)
    }
}

impl From<PolynomialSpec> for RawPolynomial {
    fn from(p: PolynomialSpec) -> Self {
        Self {
            dim: p.dim,
            terms: p
                .terms
                .into_iter()
                .map(|(powers, coeff)| Term { powers, coeff })
                .collect(),
            sup_norm: p.sup_norm,
            gradient_sup: p.gradient_sup,
        }
    }
}

impl PolynomialSpec {
    /// Repeated multi-indices are summed; zero coefficients are dropped.
    pub fn new<I: IntoIterator<Item = (Vec<u32>, f64)>>(dim: usize, terms: I) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::Parameter(format!("dimension {dim} outside 1..={MAX_DIM}")));
        }
        let mut map = BTreeMap::new();
        for (powers, coeff) in terms {
            if powers.len() != dim {
                return Err(Error::Shape(format!(
                    "multi-index {powers:?} does not have {dim} entries"
                )));
            }
            if !coeff.is_finite() {
                return Err(Error::Parameter("polynomial coefficient is not finite".into()));
            }
            *map.entry(powers).or_insert(0.0) += coeff;
        }
        map.retain(|_, c| *c != 0.0);
        Ok(Self {
            dim,
            terms: map,
            sup_norm: None,
            gradient_sup: None,
        })
    }

    /// `⟨ξ, x⟩`.
    pub fn linear(xi: &[f64]) -> Result<Self> {
        let d = xi.len();
        Self::new(
            d,
            xi.iter().enumerate().map(|(i, &c)| {
                let mut p = vec![0; d];
                p[i] = 1;
                (p, c)
            }),
        )
    }

    /// `‖x‖₂²`, with its exact sup (1) and gradient sup (2) on the ball.
    pub fn squared_norm(d: usize) -> Result<Self> {
        Self::new(
            d,
            (0..d).map(|i| {
                let mut p = vec![0; d];
                p[i] = 2;
                (p, 1.0)
            }),
        )?
        .with_sup_norm(1.0)?
        .with_gradient_sup(2.0)
    }

    pub fn with_sup_norm(mut self, s: f64) -> Result<Self> {
        if !(s >= 0.0 && s.is_finite()) {
            return Err(Error::Parameter(format!("sup norm {s} must be finite and >= 0")));
        }
        self.sup_norm = Some(s);
        Ok(self)
    }

    pub fn with_gradient_sup(mut self, s: f64) -> Result<Self> {
        if !(s >= 0.0 && s.is_finite()) {
            return Err(Error::Parameter(format!("gradient sup {s} must be finite and >= 0")));
        }
        self.gradient_sup = Some(s);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Total degree of the highest nonzero term; 0 for constants.
    pub fn degree(&self) -> usize {
        self.terms
            .keys()
            .map(|p| p.iter().sum::<u32>() as usize)
            .max()
            .unwrap_or(0)
    }

    pub fn constant(&self) -> f64 {
        self.terms.get(&vec![0; self.dim]).copied().unwrap_or(0.0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], f64)> {
        self.terms.iter().map(|(p, &c)| (p.as_slice(), c))
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(p, &c)| c * monomial(p, x))
            .sum()
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        for (p, &c) in &self.terms {
            for i in 0..self.dim {
                if p[i] == 0 {
                    continue;
                }
                let mut q = p.clone();
                q[i] -= 1;
                g[i] += c * f64::from(p[i]) * monomial(&q, x);
            }
        }
        g
    }

    /// Coefficients of the degree-`ell` homogeneous component.
    pub fn homogeneous(&self, ell: usize) -> BTreeMap<Vec<u32>, f64> {
        self.terms
            .iter()
            .filter(|(p, _)| p.iter().sum::<u32>() as usize == ell)
            .map(|(p, &c)| (p.clone(), c))
            .collect()
    }

    /// `‖Q‖_{C(Ω)}`: the attached analytic value, else `Σ |c_α|`, which
    /// bounds it on the unit ball.
    pub fn sup_norm_bound(&self) -> f64 {
        self.sup_norm
            .unwrap_or_else(|| self.terms.values().map(|c| c.abs()).sum())
    }

    pub fn has_exact_sup(&self) -> bool {
        self.sup_norm.is_some()
    }

    /// `sup_Ω ‖∇Q‖₂`: the attached analytic value, else
    /// `(Σ_i (Σ_α α_i |c_α|)²)^{1/2}`.
    pub fn gradient_sup_bound(&self) -> f64 {
        self.gradient_sup.unwrap_or_else(|| {
            (0..self.dim)
                .map(|i| {
                    let s: f64 = self
                        .terms
                        .iter()
                        .map(|(p, c)| f64::from(p[i]) * c.abs())
                        .sum();
                    s * s
                })
                .sum::<f64>()
                .sqrt()
        })
    }
}

fn monomial(powers: &[u32], x: &[f64]) -> f64 {
    powers
        .iter()
        .zip(x)
        .map(|(&k, &v)| v.powi(k as i32))
        .product()
}

/// All multi-indices of total degree `ell` in `d` variables, in
/// lexicographically decreasing order.
pub fn multi_indices(d: usize, ell: u32) -> Vec<Vec<u32>> {
    fn rec(d: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == d - 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for k in (0..=left).rev() {
            cur.push(k);
            rec(d, left - k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(d, ell, &mut Vec::with_capacity(d), &mut out);
    out
}

fn multinomial(powers: &[u32]) -> f64 {
    let mut acc = 1.0;
    let mut n = 0u32;
    for &k in powers {
        for i in 1..=k {
            n += 1;
            acc *= f64::from(n) / f64::from(i);
        }
    }
    acc
}

/// Directions and coefficients reproducing a polynomial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeDecomposition {
    pub dim: usize,
    pub degree: usize,
    pub constant: f64,
    /// Unit vectors `ξ_k`.
    pub directions: Vec<Vec<f64>>,
    /// `gamma[k][ℓ − 1] = γ_{k,ℓ}`.
    pub gamma: Vec<Vec<f64>>,
    /// Max reconstruction error over the verification points.
    pub residual: f64,
}

impl RidgeDecomposition {
    /// `‖x‖₂² = Σ_k (e_k · x)²` over the standard basis.
    pub fn radial(d: usize) -> Result<Self> {
        if d == 0 || d > MAX_DIM {
            return Err(Error::Parameter(format!("dimension {d} outside 1..={MAX_DIM}")));
        }
        let directions = (0..d)
            .map(|k| {
                let mut e = vec![0.0; d];
                e[k] = 1.0;
                e
            })
            .collect();
        Ok(Self {
            dim: d,
            degree: 2,
            constant: 0.0,
            directions,
            gamma: vec![vec![0.0, 1.0]; d],
            residual: 0.0,
        })
    }

    pub fn n_directions(&self) -> usize {
        self.directions.len()
    }

    /// `‖γ_Q‖₁`.
    pub fn gamma_l1(&self) -> f64 {
        self.gamma.iter().flatten().map(|g| g.abs()).sum()
    }

    /// Degrees `ℓ` with at least one nonzero `γ_{k,ℓ}`.
    pub fn degrees_used(&self) -> Vec<usize> {
        (1..=self.degree)
            .filter(|&l| self.gamma.iter().any(|row| row[l - 1] != 0.0))
            .collect()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant
            + self
                .directions
                .iter()
                .zip(&self.gamma)
                .map(|(xi, row)| {
                    let s = dot(xi, x);
                    let mut p = 1.0;
                    row.iter()
                        .map(|&g| {
                            p *= s;
                            g * p
                        })
                        .sum::<f64>()
                })
                .sum::<f64>()
    }

    /// `k, ell, gamma` rows (1-based `k` and `ell`).
    pub fn gamma_csv(&self) -> String {
        let mut out = String::from("k,ell,gamma\n");
        for (k, row) in self.gamma.iter().enumerate() {
            for (l, g) in row.iter().enumerate() {
                let _ = writeln!(out, "{},{},{g}", k + 1, l + 1);
            }
        }
        out
    }

    /// `k, xi0..xi{d−1}` rows.
    pub fn directions_csv(&self) -> String {
        let mut out = String::from("k");
        for i in 0..self.dim {
            let _ = write!(out, ",xi{i}");
        }
        out.push('\n');
        for (k, xi) in self.directions.iter().enumerate() {
            let _ = write!(out, "{}", k + 1);
            for v in xi {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }
}

fn random_unit<R: Rng>(rng: &mut R, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let r = norm2(&v);
        if r > 1e-300 {
            return v.into_iter().map(|x| x / r).collect();
        }
    }
}

/// Uniform draw from the unit ball.
fn random_in_ball<R: Rng>(rng: &mut R, d: usize) -> Vec<f64> {
    let u: f64 = rng.gen();
    let r = u.powf(1.0 / d as f64);
    random_unit(rng, d).into_iter().map(|x| x * r).collect()
}

/// `(ξ·x)^ℓ = Σ_α multinomial(ℓ; α) ξ^α x^α`: one row per monomial, one
/// column per direction.
fn power_matrix(directions: &[Vec<f64>], monos: &[Vec<u32>]) -> DMatrix<f64> {
    DMatrix::from_fn(monos.len(), directions.len(), |r, k| {
        multinomial(&monos[r]) * monomial(&monos[r], &directions[k])
    })
}

/// Finds `n_q(d, q)` unit directions whose powers span every homogeneous
/// degree `1..=q`, then the minimum-norm `γ` for each degree.
pub fn decompose(q_poly: &PolynomialSpec, seed: u64) -> Result<RidgeDecomposition> {
    let q = q_poly.degree();
    if q == 0 {
        return Err(Error::Parameter("decomposition needs degree >= 1".into()));
    }
    let d = q_poly.dim();
    let count = usize::try_from(n_q(d, q)?)
        .map_err(|_| Error::Capacity("too many directions".into()))?;
    if count > 4096 {
        return Err(Error::Capacity(format!("{count} directions exceed 4096")));
    }
    let monos: Vec<Vec<Vec<u32>>> = (1..=q as u32).map(|l| multi_indices(d, l)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    for _ in 0..MAX_RETRIES {
        let directions: Vec<Vec<f64>> = (0..count).map(|_| random_unit(&mut rng, d)).collect();
        let mut gamma = vec![vec![0.0; q]; count];
        let mut spans = true;
        for (l, ms) in monos.iter().enumerate() {
            let a = power_matrix(&directions, ms);
            let svd = a.svd(true, true);
            let smax = svd.singular_values.max();
            let rank = svd
                .singular_values
                .iter()
                .filter(|&&s| s > RANK_TOL * smax)
                .count();
            if rank < ms.len() {
                spans = false;
                break;
            }
            let target = q_poly.homogeneous(l + 1);
            let rhs = DVector::from_iterator(
                ms.len(),
                ms.iter().map(|m| target.get(m).copied().unwrap_or(0.0)),
            );
            let sol = svd
                .solve(&rhs, RANK_TOL * smax)
                .map_err(|e| Error::Parameter(format!("least squares failed: {e}")))?;
            for k in 0..count {
                gamma[k][l] = sol[k];
            }
        }
        if !spans {
            continue;
        }
        let mut dec = RidgeDecomposition {
            dim: d,
            degree: q,
            constant: q_poly.constant(),
            directions,
            gamma,
            residual: 0.0,
        };
        dec.residual = (0..RESIDUAL_POINTS)
            .map(|_| {
                let x = random_in_ball(&mut rng, d);
                (q_poly.eval(&x) - dec.eval(&x)).abs()
            })
            .fold(0.0, f64::max);
        return Ok(dec);
    }
    Err(Error::DegenerateDirections {
        retries: MAX_RETRIES,
    })
}

fn halton(mut index: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while index > 0 {
        f /= base as f64;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

const PRIMES: [u64; MAX_DIM] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Lower estimate of `‖Q‖_{C(Ω)}`: the max of `|Q|` over `grid_size`
/// Halton points mapped radially from the cube onto the ball, plus their
/// projections onto the sphere. `grid_size` is raised to at least 1000.
pub fn poly_sup_norm(q_poly: &PolynomialSpec, grid_size: usize) -> f64 {
    let d = q_poly.dim();
    let mut best = q_poly.constant().abs();
    for i in 1..=grid_size.max(1000) as u64 {
        let cube: Vec<f64> = (0..d).map(|k| 2.0 * halton(i, PRIMES[k]) - 1.0).collect();
        let r2 = norm2(&cube);
        if r2 == 0.0 {
            continue;
        }
        let rinf = cube.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let inside: Vec<f64> = cube.iter().map(|v| v * rinf / r2).collect();
        let sphere: Vec<f64> = cube.iter().map(|v| v / r2).collect();
        best = best.max(q_poly.eval(&inside).abs()).max(q_poly.eval(&sphere).abs());
    }
    best
}
