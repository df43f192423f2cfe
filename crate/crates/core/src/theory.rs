//! Closed-form evaluators for covering-number bounds, the oracle
//! inequality's right-hand side and the learning-rate schedule.

use serde::{Deserialize, Serialize};

use crate::construct::CompositeConstants;
use crate::dfnn::HypothesisSpaceSpec;
use crate::error::{Error, Result};
use crate::ridgedecomp::n_q;

/// Which value of `R̂` to use. The stated bound and the one its derivation
/// actually produces differ by a factor of five; the derived (larger) value
/// is the default.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RHatVariant {
    /// `15R⁴(10n_q + d + 18)`
    #[default]
    Proof,
    /// `3R⁴(10n_q + d + 18)`
    Statement,
}

pub fn t1(d: usize, q: usize, nq: usize) -> f64 {
    ((d + q) * nq + 5 * q + 5) as f64
}

pub fn t2(d: usize, q: usize, nq: usize) -> f64 {
    (9 * (d + q) * nq + 45 * q + 190) as f64
}

pub fn r_hat(r: f64, d: usize, nq: usize, variant: RHatVariant) -> f64 {
    let k = match variant {
        RHatVariant::Proof => 15.0,
        RHatVariant::Statement => 3.0,
    };
    k * r.powi(4) * (10 * nq + d + 18) as f64
}

fn nq_usize(d: usize, q: usize) -> Result<usize> {
    usize::try_from(n_q(d, q)?).map_err(|_| Error::Capacity("n_q exceeds usize".into()))
}

/// A covering-number bound (natural log). `clamped` is set when `ε ≥ R̂`
/// made the formula negative and the value was raised to 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverBound {
    pub value: f64,
    pub raw: f64,
    pub clamped: bool,
}

fn check_cover_args(spec: &HypothesisSpaceSpec, eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Parameter(format!("ε = {eps} must be positive")));
    }
    if spec.r < 1.0 {
        return Err(Error::Precondition(format!("covering bounds need R >= 1, got {}", spec.r)));
    }
    Ok(())
}

fn simplified_cover(spec: &HypothesisSpaceSpec, d: usize, q: usize, eps: f64, variant: RHatVariant) -> Result<CoverBound> {
    check_cover_args(spec, eps)?;
    let nq = nq_usize(d, q)?;
    let n = spec.n as f64;
    let raw = t1(d, q, nq) * n * (r_hat(spec.r, d, nq, variant) / eps).ln() + t2(d, q, nq) * n * n.ln();
    Ok(CoverBound {
        value: raw.max(0.0),
        raw,
        clamped: raw < 0.0,
    })
}

/// `log 𝒩(𝓗_{(2,3),R,N}, ε) ≤ T₁N log(R̂/ε) + T₂N log N`.
pub fn covering_bound(spec: &HypothesisSpaceSpec, d: usize, q: usize, eps: f64, variant: RHatVariant) -> Result<CoverBound> {
    simplified_cover(spec, d, q, eps, variant)
}

/// The same form for the class of first-coordinate two-layer features
/// `x ↦ σ(F²σ(F¹x − b¹) − b²)₁`.
pub fn h2_covering_bound(spec: &HypothesisSpaceSpec, d: usize, q: usize, eps: f64, variant: RHatVariant) -> Result<CoverBound> {
    simplified_cover(spec, d, q, eps, variant)
}

/// Parameter-grid count before simplification: with grid step
/// `δ = ε/(5(10n_q+d+22)R³N⁷)`,
/// `e₁ log⌈2RN²/δ⌉ + (6N+9) log⌈2R/δ⌉ + (2N+3) log⌈2RN/δ⌉`,
/// `e₁ = n_q d + q n_q + q(2N+3) + 2N+3`.
pub fn grid_log_cover(spec: &HypothesisSpaceSpec, d: usize, q: usize, eps: f64) -> Result<f64> {
    check_cover_args(spec, eps)?;
    let nq = nq_usize(d, q)? as f64;
    let (r, n) = (spec.r, spec.n as f64);
    let (df, qf) = (d as f64, q as f64);
    let delta = eps / (5.0 * (10.0 * nq + df + 22.0) * r.powi(3) * n.powi(7));
    let e1 = nq * df + qf * nq + qf * (2.0 * n + 3.0) + 2.0 * n + 3.0;
    let lc = |x: f64| x.ceil().ln();
    Ok(e1 * lc(2.0 * r * n * n / delta) + (6.0 * n + 9.0) * lc(2.0 * r / delta) + (2.0 * n + 3.0) * lc(2.0 * r * n / delta))
}

/// Grid count for the two-layer feature class:
/// `δ = ε/((10n_q+d+2)RN³)`,
/// `(n_q d + q n_q + q(2N+3)) log⌈2RN²/δ⌉ + (4N+6) log⌈2R/δ⌉`.
pub fn h2_grid_log_cover(spec: &HypothesisSpaceSpec, d: usize, q: usize, eps: f64) -> Result<f64> {
    check_cover_args(spec, eps)?;
    let nq = nq_usize(d, q)? as f64;
    let (r, n) = (spec.r, spec.n as f64);
    let (df, qf) = (d as f64, q as f64);
    let delta = eps / ((10.0 * nq + df + 2.0) * r * n.powi(3));
    let e1 = nq * df + qf * nq + qf * (2.0 * n + 3.0);
    let lc = |x: f64| x.ceil().ln();
    Ok(e1 * lc(2.0 * r * n * n / delta) + (4.0 * n + 6.0) * lc(2.0 * r / delta))
}

/// Every constant of the learning-rate analysis for one target class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryConstants {
    pub d: usize,
    pub q: usize,
    pub n_q: usize,
    pub t1: f64,
    pub t2: f64,
    pub r: f64,
    pub r_hat: f64,
    /// Output bound `M`.
    pub m_bound: f64,
    pub beta: f64,
    pub c1: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
    pub a5: f64,
    pub a6: f64,
    pub a7: f64,
    pub variant: RHatVariant,
}

/// `A₇ = 18C₁²2^{2β}A₄^{−2β}(log A₄ + 1/(2β+1)) + 2304(4M + C₁)²`.
pub fn a7_from(c1: f64, beta: f64, a4: f64, m_bound: f64) -> f64 {
    18.0 * c1 * c1 * 2f64.powf(2.0 * beta) * a4.powf(-2.0 * beta) * (a4.ln() + 1.0 / (2.0 * beta + 1.0))
        + 2304.0 * (4.0 * m_bound + c1).powi(2)
}

impl TheoryConstants {
    pub fn new(d: usize, q: usize, r: f64, m_bound: f64, beta: f64, c1: f64, variant: RHatVariant) -> Result<Self> {
        if r < 1.0 || !r.is_finite() {
            return Err(Error::Precondition(format!("R = {r} must be >= 1")));
        }
        if !(m_bound > 0.0 && m_bound.is_finite()) {
            return Err(Error::Parameter(format!("M = {m_bound} must be positive")));
        }
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(Error::Parameter(format!("β = {beta} not in (0, 1]")));
        }
        if !(c1 > 0.0 && c1.is_finite()) {
            return Err(Error::Parameter(format!("C₁ = {c1} must be positive")));
        }
        let nq = nq_usize(d, q)?;
        let (t1, t2) = (t1(d, q, nq), t2(d, q, nq));
        let r_hat = r_hat(r, d, nq, variant);
        let m2 = m_bound * m_bound;
        let c2 = c1 * c1;
        let a1 = t1 * ((8.0 * m_bound * r_hat / c2).ln() + 2.0 * beta) + t2;
        let a2 = t1 * ((40.0 * m_bound * r_hat * r * r / c2).ln() + 2.0 * beta + 4.0) + t2;
        if !(a1 > 0.0 && a2 > 0.0) {
            return Err(Error::Parameter(format!("A₁ = {a1}, A₂ = {a2} must be positive")));
        }
        let a3 = 115_200.0 * (m_bound + c1).powi(2) * r.powi(8);
        let inv = 1.0 / (2.0 * beta + 1.0);
        let a4 = (3.0 * c2 / (2048.0 * m2 * a1))
            .min(3.0 * c2 / (4096.0 * m2 * a2))
            .powf(inv);
        let a5 = 3.0 * a3 * a4.powf(2.0 * beta + 16.0) / (4096.0 * m2 * c2);
        let a6 = 3.0 * c2 * a4.powf(-2.0 * beta) / (4096.0 * m2);
        let a7 = a7_from(c1, beta, a4, m_bound);
        Ok(Self {
            d,
            q,
            n_q: nq,
            t1,
            t2,
            r,
            r_hat,
            m_bound,
            beta,
            c1,
            a1,
            a2,
            a3,
            a4,
            a5,
            a6,
            a7,
            variant,
        })
    }

    /// Constants of a composite construction: `R` from its radius terms and
    /// `C₁` from its approximation bound. `R` is raised to 1 if smaller.
    pub fn from_composite(c: &CompositeConstants, m_bound: f64, variant: RHatVariant) -> Result<Self> {
        Self::new(c.dim, c.degree, c.radius().max(1.0), m_bound, c.beta, c.c1(), variant)
    }

    /// `A₇ m^{−2β/(2β+1)} log m`.
    pub fn excess_risk_bound(&self, m: u64) -> f64 {
        let mf = m as f64;
        self.a7 * mf.powf(-2.0 * self.beta / (2.0 * self.beta + 1.0)) * mf.ln()
    }
}

/// The three exponential terms bounding the failure probability, each
/// capped at 1 in `log` space, and their sum clamped to 3.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleTerms {
    pub terms: [f64; 3],
    /// Exponents before `exp`.
    pub exponents: [f64; 3],
    pub total: f64,
}

/// Right-hand side of the oracle inequality for `‖π_M f̂ − f_ρ‖² > 2‖h − f_ρ‖² + 8ε`.
pub fn oracle_rhs(
    m: u64,
    n: u64,
    big_n: usize,
    eps: f64,
    c: &TheoryConstants,
    h_norm: f64,
    h_dist: f64,
) -> Result<OracleTerms> {
    if m == 0 || n == 0 || big_n == 0 || !(eps > 0.0) || !(h_norm >= 0.0) || !(h_dist >= 0.0) {
        return Err(Error::Parameter("oracle arguments must be positive".into()));
    }
    let (mf, nf, bn) = (m as f64, n as f64, big_n as f64);
    let mm = c.m_bound;
    let cover = |scale: f64| c.t1 * bn * scale.ln() + c.t2 * bn * bn.ln();
    let e1 = cover(16.0 * mm * c.r_hat / eps) - 3.0 * mf * eps / (2048.0 * mm * mm);
    let e2 = -mf * eps * eps / (2.0 * (3.0 * mm + h_norm).powi(2) * (h_dist + 2.0 * eps / 3.0));
    let e3 = (4.0 * mf).ln() + cover(80.0 * mm * c.r_hat * c.r * c.r * bn.powi(4) / eps)
        - nf * eps * eps / (115_200.0 * h_norm.powi(2).max(mm * mm) * c.r.powi(8) * bn.powi(16));
    let exponents = [e1, e2, e3];
    let terms = exponents.map(|e| e.exp().min(1.0));
    let total = exponents.iter().map(|e| e.exp()).sum::<f64>().min(3.0);
    Ok(OracleTerms {
        terms,
        exponents,
        total,
    })
}

/// `N`, `n` and the admissibility check for a first-stage size `m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateSchedule {
    pub m: u64,
    /// `A₄ m^{1/(2β+1)}` before flooring.
    pub n_target: f64,
    /// `max(1, ⌊n_target⌋)`.
    pub big_n: usize,
    /// Set when the floor fell below 1.
    pub clamped: bool,
    /// `⌈A₅ m^{(4β+17)/(2β+1)}⌉` as a real number (may exceed `u64`).
    pub n_min_real: f64,
    /// The same as an integer when representable.
    pub n_min: Option<u64>,
    /// `log(4m) ≤ A₆ m^{1/(2β+1)}`.
    pub restriction_holds: bool,
}

pub fn rate_schedule(m: u64, c: &TheoryConstants) -> Result<RateSchedule> {
    if m == 0 {
        return Err(Error::Parameter("m must be at least 1".into()));
    }
    let mf = m as f64;
    let b = c.beta;
    let e_n = 1.0 / (2.0 * b + 1.0);
    let n_target = c.a4 * mf.powf(e_n);
    let floor = n_target.floor();
    let n_min_real = (c.a5 * mf.powf((4.0 * b + 17.0) / (2.0 * b + 1.0))).ceil();
    Ok(RateSchedule {
        m,
        n_target,
        big_n: if floor >= 1.0 { floor as usize } else { 1 },
        clamped: floor < 1.0,
        n_min_real,
        n_min: (n_min_real < u64::MAX as f64).then_some(n_min_real.max(1.0) as u64),
        restriction_holds: (4.0 * mf).ln() <= c.a6 * mf.powf(e_n),
    })
}
