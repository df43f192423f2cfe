use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::EmpiricalMeasure;
use crate::ridgedecomp::{PolynomialSpec, RidgeDecomposition};
use crate::scalar::{dot, norm2};

/// Univariate function with analytic regularity constants on symmetric
/// intervals `[−b, b]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "fn", rename_all = "kebab-case")]
pub enum ScalarFunction {
    Identity,
    Linear { slope: f64 },
    Constant { value: f64 },
    /// `e^{rate·x}`.
    Exp { rate: f64 },
    /// `sin(freq·x + phase)`.
    Sin { freq: f64, phase: f64 },
    Tanh,
    /// `|x|^exponent` with exponent in `(0, 1]`.
    AbsPow { exponent: f64 },
}

impl ScalarFunction {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Self::Identity => x,
            Self::Linear { slope } => slope * x,
            Self::Constant { value } => value,
            Self::Exp { rate } => (rate * x).exp(),
            Self::Sin { freq, phase } => (freq * x + phase).sin(),
            Self::Tanh => x.tanh(),
            Self::AbsPow { exponent } => x.abs().powf(exponent),
        }
    }

    /// Lipschitz constant on `[−b, b]`; `None` when not Lipschitz.
    pub fn lipschitz(&self, b: f64) -> Option<f64> {
        match *self {
            Self::Identity | Self::Tanh => Some(1.0),
            Self::Linear { slope } => Some(slope.abs()),
            Self::Constant { .. } => Some(0.0),
            Self::Exp { rate } => Some(rate.abs() * (rate.abs() * b).exp()),
            Self::Sin { freq, .. } => Some(freq.abs()),
            Self::AbsPow { exponent } => (exponent == 1.0).then_some(1.0),
        }
    }

    /// A constant `H` with `|f(x) − f(y)| ≤ H|x − y|^β` on `[−b, b]`;
    /// `None` when the function is rougher than `β`.
    pub fn holder(&self, beta: f64, b: f64) -> Option<f64> {
        match *self {
            // ||x|^p − |y|^p| ≤ |x − y|^p by subadditivity, so the p-seminorm
            // is 1 and |x − y|^{p−β} ≤ (2b)^{p−β} covers β < p
            Self::AbsPow { exponent } if exponent < 1.0 => {
                (beta <= exponent).then(|| (2.0 * b).powf(exponent - beta))
            }
            _ => self.lipschitz(b).map(|l| l * (2.0 * b).powf(1.0 - beta)),
        }
    }

    /// `sup_{[−b, b]} |f|`.
    pub fn sup_abs(&self, b: f64) -> f64 {
        match *self {
            Self::Identity => b,
            Self::Linear { slope } => slope.abs() * b,
            Self::Constant { value } => value.abs(),
            Self::Exp { rate } => (rate.abs() * b).exp(),
            Self::Sin { freq, phase } => {
                let (lo, hi) = (phase - freq.abs() * b, phase + freq.abs() * b);
                let k = ((lo - FRAC_PI_2) / PI).ceil();
                if FRAC_PI_2 + k * PI <= hi {
                    1.0
                } else {
                    lo.sin().abs().max(hi.sin().abs())
                }
            }
            Self::Tanh => b.tanh(),
            Self::AbsPow { exponent } => b.powf(exponent),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::Identity | Self::Tanh => true,
            Self::Linear { slope } => slope.is_finite(),
            Self::Constant { value } => value.is_finite(),
            Self::Exp { rate } => rate.is_finite(),
            Self::Sin { freq, phase } => freq.is_finite() && phase.is_finite(),
            Self::AbsPow { exponent } => exponent > 0.0 && exponent <= 1.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Parameter(format!("invalid scalar function {self:?}")))
        }
    }
}

/// Inner structure of a target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Feature {
    /// `g(ξ·x)`.
    Ridge { xi: Vec<f64> },
    /// `e^{−ξ·x}`; `f` and `g` are fixed.
    Laplace { xi: Vec<f64> },
    /// `g(Q(x))` with `Q` decomposed along random directions drawn from `seed`.
    PolyComposite {
        poly: PolynomialSpec,
        #[serde(default)]
        seed: u64,
    },
    /// `g(‖x‖₂²)` with the standard-basis decomposition.
    Radial { dim: usize },
}

/// `μ ↦ f(∫ G dμ)` with `G = g∘(inner feature)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetFunctional {
    pub id: String,
    pub beta: f64,
    pub f: ScalarFunction,
    pub g: ScalarFunction,
    pub feature: Feature,
}

impl TargetFunctional {
    pub fn ridge(id: &str, xi: Vec<f64>, g: ScalarFunction, f: ScalarFunction, beta: f64) -> Result<Self> {
        Self {
            id: id.into(),
            beta,
            f,
            g,
            feature: Feature::Ridge { xi },
        }
        .validated()
    }

    pub fn laplace(id: &str, xi: Vec<f64>) -> Result<Self> {
        Self {
            id: id.into(),
            beta: 1.0,
            f: ScalarFunction::Identity,
            g: ScalarFunction::Exp { rate: -1.0 },
            feature: Feature::Laplace { xi },
        }
        .validated()
    }

    pub fn poly(
        id: &str,
        poly: PolynomialSpec,
        seed: u64,
        g: ScalarFunction,
        f: ScalarFunction,
        beta: f64,
    ) -> Result<Self> {
        Self {
            id: id.into(),
            beta,
            f,
            g,
            feature: Feature::PolyComposite { poly, seed },
        }
        .validated()
    }

    pub fn radial(id: &str, dim: usize, g: ScalarFunction, f: ScalarFunction, beta: f64) -> Result<Self> {
        Self {
            id: id.into(),
            beta,
            f,
            g,
            feature: Feature::Radial { dim },
        }
        .validated()
    }

    /// Checks everything that does not need a decomposition. Ridge-type
    /// targets also get their full constants checked here.
    pub fn validated(self) -> Result<Self> {
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::Parameter(format!("β = {} not in (0, 1]", self.beta)));
        }
        self.f.validate()?;
        self.g.validate()?;
        let d = self.dim();
        if d == 0 || d > crate::measure::MAX_DIM {
            return Err(Error::Parameter(format!("dimension {d} outside 1..=16")));
        }
        match &self.feature {
            Feature::Ridge { xi } | Feature::Laplace { xi } => {
                if xi.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Parameter("feature vector is not finite".into()));
                }
                RidgeConstants::new(&self)?;
            }
            Feature::PolyComposite { poly, .. } => {
                if poly.degree() == 0 {
                    return Err(Error::Parameter("composite polynomial needs degree >= 1".into()));
                }
            }
            Feature::Radial { .. } => {
                CompositeConstants::new(&self, &RidgeDecomposition::radial(d)?)?;
            }
        }
        Ok(self)
    }

    pub fn kind(&self) -> &'static str {
        match self.feature {
            Feature::Ridge { .. } => "ridge",
            Feature::Laplace { .. } => "laplace",
            Feature::PolyComposite { .. } => "poly-composite",
            Feature::Radial { .. } => "radial",
        }
    }

    pub fn dim(&self) -> usize {
        match &self.feature {
            Feature::Ridge { xi } | Feature::Laplace { xi } => xi.len(),
            Feature::PolyComposite { poly, .. } => poly.dim(),
            Feature::Radial { dim } => *dim,
        }
    }

    /// The inner feature at a point: `ξ·x`, `Q(x)` or `‖x‖²`.
    pub fn inner(&self, x: &[f64]) -> f64 {
        match &self.feature {
            Feature::Ridge { xi } | Feature::Laplace { xi } => dot(xi, x),
            Feature::PolyComposite { poly, .. } => poly.eval(x),
            Feature::Radial { .. } => x.iter().map(|v| v * v).sum(),
        }
    }

    /// `L_G(μ) = ∫ g(inner(x)) dμ(x)`.
    pub fn inner_functional(&self, mu: &EmpiricalMeasure<f64>) -> f64 {
        mu.integrate(|x| self.g.eval(self.inner(x)))
    }

    /// Exact value `f(L_G(μ))` on an empirical measure.
    pub fn eval(&self, mu: &EmpiricalMeasure<f64>) -> f64 {
        self.f.eval(self.inner_functional(mu))
    }

    /// `sup_Ω |inner|`: `‖ξ‖₂`, the polynomial's sup bound, or 1.
    pub fn inner_sup(&self) -> f64 {
        match &self.feature {
            Feature::Ridge { xi } | Feature::Laplace { xi } => norm2(xi),
            Feature::PolyComposite { poly, .. } => poly.sup_norm_bound(),
            Feature::Radial { .. } => 1.0,
        }
    }

    /// An upper bound on `sup_μ |f(L_G(μ))|`: `L_G(μ)` lies in
    /// `[−sup|G|, sup|G|]`.
    pub fn output_sup(&self) -> f64 {
        self.f.sup_abs(self.g.sup_abs(self.inner_sup()))
    }

    /// The polynomial of a composite or radial target.
    pub fn polynomial(&self) -> Result<PolynomialSpec> {
        match &self.feature {
            Feature::PolyComposite { poly, .. } => Ok(poly.clone()),
            Feature::Radial { dim } => PolynomialSpec::squared_norm(*dim),
            _ => Err(Error::Kind {
                expected: "poly-composite or radial",
                got: self.kind().into(),
            }),
        }
    }
}

fn holder_or_err(f: &ScalarFunction, beta: f64, b: f64) -> Result<f64> {
    f.holder(beta, b)
        .ok_or_else(|| Error::Parameter(format!("outer function {f:?} is not {beta}-Hölder")))
}

fn lipschitz_or_err(g: &ScalarFunction, b: f64) -> Result<f64> {
    g.lipschitz(b)
        .ok_or_else(|| Error::Parameter(format!("inner function {g:?} is not Lipschitz")))
}

fn check_outer(f_sup: f64, b_big_g: f64) -> Result<()> {
    if !(b_big_g > 0.0) {
        return Err(Error::Parameter("B_G must be positive (g vanishes identically)".into()));
    }
    if !(f_sup > 0.0) {
        return Err(Error::Parameter("outer function vanishes identically".into()));
    }
    Ok(())
}

/// Constants of a ridge or Laplace target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RidgeConstants {
    pub beta: f64,
    /// `‖ξ·x‖_{C(Ω)} = ‖ξ‖₂`, or 1 when `ξ = 0`.
    pub b_xi: f64,
    pub g_lip: f64,
    pub b_g: f64,
    /// `B_g + 2B_ξ|g|`.
    pub b_big_g: f64,
    pub f_holder: f64,
    pub f_sup: f64,
    /// Laplace target with `‖ξ‖₂ ≤ 1`: the bound is reported as `8e/N`.
    pub in_ball_laplace: bool,
}

impl RidgeConstants {
    pub fn new(target: &TargetFunctional) -> Result<Self> {
        let (xi, laplace) = match &target.feature {
            Feature::Ridge { xi } => (xi, false),
            Feature::Laplace { xi } => (xi, true),
            _ => {
                return Err(Error::Kind {
                    expected: "ridge",
                    got: target.kind().into(),
                })
            }
        };
        let norm = norm2(xi);
        let b_xi = if norm > 0.0 { norm } else { 1.0 };
        let g_lip = lipschitz_or_err(&target.g, b_xi)?;
        let b_g = target.g.sup_abs(b_xi);
        let b_big_g = b_g + 2.0 * b_xi * g_lip;
        let f_holder = holder_or_err(&target.f, target.beta, b_big_g)?;
        let f_sup = target.f.sup_abs(b_big_g);
        check_outer(f_sup, b_big_g)?;
        Ok(Self {
            beta: target.beta,
            b_xi,
            g_lip,
            b_g,
            b_big_g,
            f_holder,
            f_sup,
            in_ball_laplace: laplace && norm <= 1.0,
        })
    }

    /// `(2B_G^β|f| + (2B_ξ|g|)^β|f|)/N^β`, or `8e/N` for in-ball Laplace.
    pub fn bound(&self, n: usize) -> f64 {
        let nf = n as f64;
        if self.in_ball_laplace {
            return 8.0 * std::f64::consts::E / nf;
        }
        let b = self.beta;
        (2.0 * self.b_big_g.powf(b) * self.f_holder
            + (2.0 * self.b_xi * self.g_lip).powf(b) * self.f_holder)
            / nf.powf(b)
    }
}

/// Terms of the parameter radius `R`; its value is the maximum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiusTerms {
    /// `2√d`
    pub dim: f64,
    /// `20‖γ‖₁`
    pub gamma: f64,
    /// `3B_Q`
    pub b_q: f64,
    /// `20B_G/B_Q`
    pub ratio: f64,
    /// `2B_G`
    pub b_big_g: f64,
    /// `4‖f‖_∞/B_G`
    pub outer: f64,
}

impl RadiusTerms {
    pub fn value(&self) -> f64 {
        [self.dim, self.gamma, self.b_q, self.ratio, self.b_big_g, self.outer]
            .into_iter()
            .fold(0.0, f64::max)
    }

    /// Name of the largest term.
    pub fn dominant(&self) -> &'static str {
        let r = self.value();
        [
            ("2sqrt(d)", self.dim),
            ("20|gamma|", self.gamma),
            ("3B_Q", self.b_q),
            ("20B_G/B_Q", self.ratio),
            ("2B_G", self.b_big_g),
            ("4|f|/B_G", self.outer),
        ]
        .into_iter()
        .find(|(_, v)| *v == r)
        .map_or("", |(n, _)| n)
    }
}

/// Constants of a composite target under a given decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompositeConstants {
    pub dim: usize,
    pub beta: f64,
    /// Polynomial degree `q`.
    pub degree: usize,
    /// `‖Q‖_{C(Ω)}` (exact when attached to the polynomial, else an upper bound).
    pub b_hat_q: f64,
    pub gamma_l1: f64,
    /// `B̂_Q + 2q‖γ‖₁`.
    pub b_q: f64,
    pub g_lip: f64,
    pub b_g: f64,
    /// `B_g + 3B_Q|g|`.
    pub b_big_g: f64,
    pub f_holder: f64,
    pub f_sup: f64,
}

impl CompositeConstants {
    pub fn new(target: &TargetFunctional, dec: &RidgeDecomposition) -> Result<Self> {
        let poly = target.polynomial()?;
        let degree = dec.degree;
        let b_hat_q = poly.sup_norm_bound();
        let gamma_l1 = dec.gamma_l1();
        let b_q = b_hat_q + 2.0 * degree as f64 * gamma_l1;
        if !(b_q > 0.0) {
            return Err(Error::Parameter("B_Q must be positive".into()));
        }
        let g_lip = lipschitz_or_err(&target.g, b_q)?;
        let b_g = target.g.sup_abs(b_q);
        let b_big_g = b_g + 3.0 * b_q * g_lip;
        let f_holder = holder_or_err(&target.f, target.beta, b_big_g)?;
        let f_sup = target.f.sup_abs(b_big_g);
        check_outer(f_sup, b_big_g)?;
        Ok(Self {
            dim: dec.dim,
            beta: target.beta,
            degree,
            b_hat_q,
            gamma_l1,
            b_q,
            g_lip,
            b_g,
            b_big_g,
            f_holder,
            f_sup,
        })
    }

    /// `C₁ = 2B_G^β|f| + (3B_Q|g|)^β|f|`.
    pub fn c1(&self) -> f64 {
        let b = self.beta;
        2.0 * self.b_big_g.powf(b) * self.f_holder + (3.0 * self.b_q * self.g_lip).powf(b) * self.f_holder
    }

    /// `C₁/N^β`.
    pub fn bound(&self, n: usize) -> f64 {
        self.c1() / (n as f64).powf(self.beta)
    }

    /// `2q‖γ‖₁/N`, the inner polynomial reconstruction bound.
    pub fn inner_bound(&self, n: usize) -> f64 {
        2.0 * self.degree as f64 * self.gamma_l1 / n as f64
    }

    pub fn radius_terms(&self) -> RadiusTerms {
        RadiusTerms {
            dim: 2.0 * (self.dim as f64).sqrt(),
            gamma: 20.0 * self.gamma_l1,
            b_q: 3.0 * self.b_q,
            ratio: 20.0 * self.b_big_g / self.b_q,
            b_big_g: 2.0 * self.b_big_g,
            outer: 4.0 * self.f_sup / self.b_big_g,
        }
    }

    pub fn radius(&self) -> f64 {
        self.radius_terms().value()
    }
}
