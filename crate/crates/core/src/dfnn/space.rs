use super::DistributionNet;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Max-row-ℓ₁ norm of every weight matrix, sup norm of every bias and of
/// the output coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamNorms<T> {
    pub weights: Vec<T>,
    pub biases: Vec<T>,
    pub coeffs: T,
}

fn sup<T: Scalar>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |acc, x| acc.max(x.abs()))
}

impl<T: Scalar> DistributionNet<T> {
    pub fn param_norms(&self) -> ParamNorms<T> {
        ParamNorms {
            weights: self
                .layers
                .iter()
                .map(|l| {
                    l.weights
                        .chunks_exact(l.cols)
                        .map(|row| row.iter().map(|v| v.abs()).sum::<T>())
                        .fold(T::zero(), T::max)
                })
                .collect(),
            biases: self.layers.iter().map(|l| sup(&l.bias)).collect(),
            coeffs: sup(&self.coeffs),
        }
    }
}

/// One failed norm constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    /// `F1`, `b2`, `c`, …
    pub location: String,
    pub value: f64,
    pub limit: f64,
}

/// The norm-constrained class of type-`(2,3)` networks:
/// `‖F^(j)‖_∞ ≤ RN²`, `‖b^(j)‖_∞ ≤ R`, `‖c‖_∞ ≤ RN`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct HypothesisSpaceSpec {
    pub r: f64,
    pub n: usize,
}

/// Relative slack on every membership constraint.
const SLACK: f64 = 1e-12;

impl HypothesisSpaceSpec {
    pub fn new(r: f64, n: usize) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::Parameter(format!("R = {r} must be positive")));
        }
        if n == 0 {
            return Err(Error::Precondition("N must be at least 1".into()));
        }
        Ok(Self { r, n })
    }

    fn nf(&self) -> f64 {
        self.n as f64
    }

    pub fn weight_limit(&self) -> f64 {
        self.r * self.nf() * self.nf()
    }

    pub fn bias_limit(&self) -> f64 {
        self.r
    }

    pub fn coeff_limit(&self) -> f64 {
        self.r * self.nf()
    }

    fn check_shape<T: Scalar>(net: &DistributionNet<T>) -> Result<()> {
        if net.depth() != 3 || net.realizing_level() != 2 {
            return Err(Error::Shape(format!(
                "hypothesis space holds (J₁, J) = (2, 3) networks, got ({}, {})",
                net.realizing_level(),
                net.depth()
            )));
        }
        Ok(())
    }

    /// Every violated constraint, empty when the network is a member.
    pub fn violations<T: Scalar>(&self, net: &DistributionNet<T>) -> Result<Vec<Violation>> {
        Self::check_shape(net)?;
        let norms = net.param_norms();
        let mut out = Vec::new();
        let mut check = |location: String, value: T, limit: f64| {
            let value = value.as_f64();
            if !(value <= limit + SLACK * limit.max(1.0)) {
                out.push(Violation {
                    location,
                    value,
                    limit,
                });
            }
        };
        for (j, &w) in norms.weights.iter().enumerate() {
            check(format!("F{}", j + 1), w, self.weight_limit());
        }
        for (j, &b) in norms.biases.iter().enumerate() {
            check(format!("b{}", j + 1), b, self.bias_limit());
        }
        check("c".into(), norms.coeffs, self.coeff_limit());
        Ok(out)
    }

    pub fn contains<T: Scalar>(&self, net: &DistributionNet<T>) -> Result<bool> {
        Ok(self.violations(net)?.is_empty())
    }

    /// Errors with [`Error::Membership`] naming the first violation.
    pub fn ensure_contains<T: Scalar>(&self, net: &DistributionNet<T>) -> Result<()> {
        match self.violations(net)?.first() {
            None => Ok(()),
            Some(v) => Err(Error::Membership(format!(
                "{} norm {} exceeds {}",
                v.location, v.value, v.limit
            ))),
        }
    }

    /// `L` with `|f(μ) − f(ν)| ≤ L · W₁(μ, ν)` for a member `f`:
    /// `d_J ‖c‖_∞ Π_j ‖F^(j)‖_∞`. At most `(2N+3) R⁴ N⁷` when `d_J = 2N+3`.
    pub fn lipschitz_certificate<T: Scalar>(&self, net: &DistributionNet<T>) -> Result<f64> {
        self.ensure_contains(net)?;
        let norms = net.param_norms();
        let width = net.coeffs().len() as f64;
        Ok(norms
            .weights
            .iter()
            .fold(width * norms.coeffs.as_f64(), |acc, w| acc * w.as_f64()))
    }

    /// `(2N+3)(2R⁴ + R³ + R²)N⁷`, a bound on `sup_μ |f(μ)|` for members with
    /// output width `2N+3`.
    pub fn uniform_bound(&self) -> f64 {
        let (r, n) = (self.r, self.nf());
        (2.0 * n + 3.0) * (2.0 * r.powi(4) + r.powi(3) + r * r) * n.powi(7)
    }

    /// `(2N+3) R⁴ N⁷`.
    pub fn lipschitz_limit(&self) -> f64 {
        let n = self.nf();
        (2.0 * n + 3.0) * self.r.powi(4) * n.powi(7)
    }
}

/// `π_M`: clamps to `[−M, M]`. `m` must be positive.
pub fn project_m<T: Scalar>(value: T, m: T) -> T {
    debug_assert!(m > T::zero());
    value.max(-m).min(m)
}

#[cfg(test)]
mod tests {
    use super::super::Layer;
    use super::*;

    fn boundary_net(r: f64, n: usize) -> DistributionNet<f64> {
        // every constraint active
        let w = 2 * n + 3;
        let nn = n as f64;
        let row = |cols: usize| {
            let mut v = vec![0.0; cols];
            v[0] = r * nn * nn;
            v
        };
        let layer = |rows: usize, cols: usize| {
            Layer::new(rows, cols, (0..rows).flat_map(|_| row(cols)).collect(), vec![-r; rows]).unwrap()
        };
        DistributionNet::new(2, vec![layer(w, 2), layer(w, w), layer(w, w)], vec![r * nn; w]).unwrap()
    }

    #[test]
    fn row_norm_example() {
        let l = Layer::new(2, 2, vec![1.0, -2.0, 3.0, 0.0], vec![0.0, 0.0]).unwrap();
        let net = DistributionNet::new(1, vec![l], vec![0.0, 0.0]).unwrap();
        assert_eq!(net.param_norms().weights, vec![3.0]);
        let zero = DistributionNet::<f64>::zeros(1, &[2, 2]).unwrap();
        assert_eq!(zero.param_norms().weights, vec![0.0]);
    }

    #[test]
    fn boundary_membership_and_certificate() {
        let spec = HypothesisSpaceSpec::new(1.5, 2).unwrap();
        let net = boundary_net(1.5, 2);
        assert!(spec.contains(&net).unwrap());
        let cert = spec.lipschitz_certificate(&net).unwrap();
        assert!((cert - spec.lipschitz_limit()).abs() <= 1e-12 * cert);
        let tighter = HypothesisSpaceSpec::new(0.75, 2).unwrap();
        assert!(!tighter.contains(&net).unwrap());
        assert!(matches!(tighter.lipschitz_certificate(&net), Err(Error::Membership(_))));
    }

    #[test]
    fn zero_net_is_member_for_any_radius() {
        let net = DistributionNet::<f64>::zeros(2, &[3, 7, 7, 7]).unwrap();
        for r in [1e-9, 0.5, 100.0] {
            let spec = HypothesisSpaceSpec::new(r, 2).unwrap();
            assert!(spec.contains(&net).unwrap());
            assert_eq!(spec.lipschitz_certificate(&net).unwrap(), 0.0);
        }
    }

    #[test]
    fn wrong_type_is_a_shape_error() {
        let net = DistributionNet::<f64>::zeros(1, &[3, 7, 7]).unwrap();
        let spec = HypothesisSpaceSpec::new(1.0, 2).unwrap();
        assert!(matches!(spec.contains(&net), Err(Error::Shape(_))));
    }

    #[test]
    fn uniform_bound_value() {
        assert_eq!(HypothesisSpaceSpec::new(1.0, 1).unwrap().uniform_bound(), 20.0);
        assert!(matches!(HypothesisSpaceSpec::new(1.0, 0), Err(Error::Precondition(_))));
    }

    #[test]
    fn projection() {
        assert_eq!(project_m(1.5, 1.0), 1.0);
        assert_eq!(project_m(-3.0, 2.0), -2.0);
        assert_eq!(project_m(0.3, 1.0), 0.3);
    }

    #[test]
    fn membership_is_monotone_in_radius() {
        let net = boundary_net(1.0, 3);
        let mut was_member = false;
        for k in 1..40 {
            let spec = HypothesisSpaceSpec::new(0.05 * k as f64, 3).unwrap();
            let member = spec.contains(&net).unwrap();
            assert!(member || !was_member);
            was_member = member;
        }
        assert!(was_member);
    }
}
