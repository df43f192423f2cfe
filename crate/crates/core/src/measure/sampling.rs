use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{EmpiricalMeasure, MAX_DIM};
use crate::error::{Error, Result};
use crate::scalar::norm2;

/// Rejection attempts per atom before a truncated-Gaussian draw falls back
/// to radial projection.
const MAX_REJECTIONS: usize = 100_000;

/// Parametric family that generates atoms inside the unit ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum DistributionSpec {
    /// Uniform on the centered ball of the given radius (≤ 1).
    UniformBall { dim: usize, radius: f64 },
    /// `N(mean, scale² I)` conditioned on the unit ball.
    TruncatedGaussian { mean: Vec<f64>, scale: f64 },
    /// Mixture of uniform balls; draws that leave the unit ball are
    /// projected radially onto the sphere.
    SphereMixture {
        centers: Vec<Vec<f64>>,
        radii: Vec<f64>,
        weights: Vec<f64>,
    },
    Dirac { point: Vec<f64> },
}

impl DistributionSpec {
    pub fn dim(&self) -> usize {
        match self {
            Self::UniformBall { dim, .. } => *dim,
            Self::TruncatedGaussian { mean, .. } => mean.len(),
            Self::SphereMixture { centers, .. } => centers.first().map_or(0, Vec::len),
            Self::Dirac { point } => point.len(),
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            Self::UniformBall { .. } => "uniform-ball",
            Self::TruncatedGaussian { .. } => "truncated-gaussian",
            Self::SphereMixture { .. } => "sphere-mixture",
            Self::Dirac { .. } => "dirac",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if d == 0 || d > MAX_DIM {
            return Err(Error::Parameter(format!(
                "dimension {d} outside 1..={MAX_DIM}"
            )));
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match self {
            Self::UniformBall { radius, .. } => {
                if !(*radius > 0.0 && *radius <= 1.0) {
                    return Err(Error::Parameter(format!("radius {radius} not in (0, 1]")));
                }
            }
            Self::TruncatedGaussian { mean, scale } => {
                if !finite(mean) {
                    return Err(Error::Parameter("mean is not finite".into()));
                }
                if !(*scale > 0.0 && scale.is_finite()) {
                    return Err(Error::Parameter(format!("scale {scale} must be positive")));
                }
            }
            Self::SphereMixture {
                centers,
                radii,
                weights,
            } => {
                if centers.is_empty()
                    || centers.len() != radii.len()
                    || centers.len() != weights.len()
                {
                    return Err(Error::Parameter(
                        "mixture needs matching nonempty centers, radii and weights".into(),
                    ));
                }
                if centers.iter().any(|c| c.len() != d || !finite(c) || norm2(c) > 1.0) {
                    return Err(Error::Parameter(
                        "mixture centers must lie in the unit ball".into(),
                    ));
                }
                if radii.iter().any(|r| !(*r >= 0.0 && r.is_finite())) {
                    return Err(Error::Parameter("mixture radii must be nonnegative".into()));
                }
                if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite()))
                    || weights.iter().sum::<f64>() <= 0.0
                {
                    return Err(Error::Parameter(
                        "mixture weights must be nonnegative with positive sum".into(),
                    ));
                }
            }
            Self::Dirac { point } => {
                if !finite(point) || norm2(point) > 1.0 + super::BALL_SLACK {
                    return Err(Error::Parameter("dirac point outside the unit ball".into()));
                }
            }
        }
        Ok(())
    }

    /// Draws `n` atoms from an existing generator.
    pub fn sample_with<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<EmpiricalMeasure<f64>> {
        self.validate()?;
        if n == 0 {
            return Err(Error::Parameter("sample size must be at least 1".into()));
        }
        let d = self.dim();
        let mut atoms = Vec::with_capacity(n * d);
        match self {
            Self::UniformBall { radius, .. } => {
                for _ in 0..n {
                    atoms.extend(uniform_in_ball(rng, d, *radius));
                }
            }
            Self::TruncatedGaussian { mean, scale } => {
                for _ in 0..n {
                    atoms.extend(truncated_gaussian(rng, mean, *scale));
                }
            }
            Self::SphereMixture {
                centers,
                radii,
                weights,
            } => {
                let pick = WeightedIndex::new(weights)
                    .map_err(|e| Error::Parameter(format!("mixture weights: {e}")))?;
                for _ in 0..n {
                    let k = pick.sample(rng);
                    let offset = uniform_in_ball(rng, d, radii[k]);
                    let x: Vec<f64> = centers[k].iter().zip(&offset).map(|(c, o)| c + o).collect();
                    atoms.extend(project_to_ball(x));
                }
            }
            Self::Dirac { point } => {
                let p = project_to_ball(point.clone());
                for _ in 0..n {
                    atoms.extend_from_slice(&p);
                }
            }
        }
        EmpiricalMeasure::new(d, atoms)
    }
}

/// Draws an `n`-atom empirical measure; deterministic in `seed`.
pub fn sample_measure(spec: &DistributionSpec, n: usize, seed: u64) -> Result<EmpiricalMeasure<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    spec.sample_with(n, &mut rng)
}

fn gaussian_vec<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

fn uniform_in_ball<R: Rng + ?Sized>(rng: &mut R, d: usize, radius: f64) -> Vec<f64> {
    let mut dir = gaussian_vec(rng, d);
    let mut r = norm2(&dir);
    while r == 0.0 {
        dir = gaussian_vec(rng, d);
        r = norm2(&dir);
    }
    let u: f64 = rng.gen();
    let scale = radius * u.powf(1.0 / d as f64) / r;
    project_to_ball(dir.into_iter().map(|v| v * scale).collect())
}

fn truncated_gaussian<R: Rng + ?Sized>(rng: &mut R, mean: &[f64], scale: f64) -> Vec<f64> {
    let mut last = Vec::new();
    for _ in 0..MAX_REJECTIONS {
        let z = gaussian_vec(rng, mean.len());
        let x: Vec<f64> = mean.iter().zip(&z).map(|(m, z)| m + scale * z).collect();
        if norm2(&x) <= 1.0 {
            return x;
        }
        last = x;
    }
    project_to_ball(last)
}

fn project_to_ball(mut x: Vec<f64>) -> Vec<f64> {
    let r = norm2(&x);
    if r > 1.0 {
        x.iter_mut().for_each(|v| *v /= r);
        // rounding can leave the norm a hair above one
        while norm2(&x) > 1.0 {
            x.iter_mut().for_each(|v| *v *= 1.0 - f64::EPSILON);
        }
    }
    x
}
