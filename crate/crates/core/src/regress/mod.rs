//! Two-stage distribution regression: a synthetic meta-distribution over
//! input measures, dataset generation, projected-gradient ERM over the
//! norm-constrained class and the two-stage error decomposition.

mod decompose;
mod io;
mod train;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::construct::TargetFunctional;
use crate::dfnn::{project_m, DistributionNet};
use crate::error::{Error, Result};
use crate::measure::{DistributionSpec, EmpiricalMeasure};

pub use decompose::{decompose_error, excess_risk, ErrorDecomposition, RiskEstimate};
pub use train::{erm_train, project_l1, project_onto_space, warm_start, EpochRecord, Init, ParamMask, TrainOptions, TrainOutcome};

/// Atoms in the reference sample standing in for each abstract `μ_i`.
pub const N_REF: usize = 4096;

fn default_n_ref() -> usize {
    N_REF
}

/// Sampler over the parameters of the input measures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "prior", rename_all = "kebab-case")]
pub enum ParamPrior {
    /// Centered ball with radius uniform in `[min_radius, max_radius]`.
    UniformBall { dim: usize, min_radius: f64, max_radius: f64 },
    /// Mean uniform in the ball of radius `mean_radius`, scale uniform in
    /// `[min_scale, max_scale]`.
    TruncatedGaussian {
        dim: usize,
        mean_radius: f64,
        min_scale: f64,
        max_scale: f64,
    },
    /// One of the inner priors, chosen uniformly.
    Mixed { priors: Vec<ParamPrior> },
}

fn uniform_in_ball<R: Rng + ?Sized>(rng: &mut R, dim: usize, radius: f64) -> Vec<f64> {
    DistributionSpec::UniformBall { dim, radius }
        .sample_with(1, rng)
        .map(|m| m.atom(0).to_vec())
        .unwrap_or_else(|_| vec![0.0; dim])
}

impl ParamPrior {
    /// A prior mixing uniform balls and truncated Gaussians in `ℝ^dim`.
    pub fn standard(dim: usize) -> Self {
        Self::Mixed {
            priors: vec![
                Self::UniformBall {
                    dim,
                    min_radius: 0.2,
                    max_radius: 1.0,
                },
                Self::TruncatedGaussian {
                    dim,
                    mean_radius: 0.8,
                    min_scale: 0.1,
                    max_scale: 0.5,
                },
            ],
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::UniformBall { dim, .. } | Self::TruncatedGaussian { dim, .. } => *dim,
            Self::Mixed { priors } => priors.first().map_or(0, Self::dim),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let interval = |lo: f64, hi: f64, name: &str| {
            if lo > 0.0 && lo <= hi && hi <= 1.0 {
                Ok(())
            } else {
                Err(Error::Parameter(format!("{name} range [{lo}, {hi}] must lie in (0, 1]")))
            }
        };
        match self {
            Self::UniformBall {
                min_radius, max_radius, ..
            } => interval(*min_radius, *max_radius, "radius"),
            Self::TruncatedGaussian {
                mean_radius,
                min_scale,
                max_scale,
                ..
            } => {
                if !(0.0..=1.0).contains(mean_radius) {
                    return Err(Error::Parameter(format!("mean radius {mean_radius} not in [0, 1]")));
                }
                if !(*min_scale > 0.0 && min_scale <= max_scale && max_scale.is_finite()) {
                    return Err(Error::Parameter(format!("scale range [{min_scale}, {max_scale}] invalid")));
                }
                Ok(())
            }
            Self::Mixed { priors } => {
                if priors.is_empty() {
                    return Err(Error::Parameter("mixed prior needs at least one component".into()));
                }
                let d = self.dim();
                for p in priors {
                    p.validate()?;
                    if p.dim() != d {
                        return Err(Error::Shape(format!("prior components disagree on dimension: {} vs {d}", p.dim())));
                    }
                }
                Ok(())
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DistributionSpec {
        match self {
            Self::UniformBall {
                dim,
                min_radius,
                max_radius,
            } => DistributionSpec::UniformBall {
                dim: *dim,
                radius: rng.gen_range(*min_radius..=*max_radius),
            },
            Self::TruncatedGaussian {
                dim,
                mean_radius,
                min_scale,
                max_scale,
            } => DistributionSpec::TruncatedGaussian {
                mean: uniform_in_ball(rng, *dim, *mean_radius),
                scale: rng.gen_range(*min_scale..=*max_scale),
            },
            Self::Mixed { priors } => {
                let k = rng.gen_range(0..priors.len());
                priors[k].sample(rng)
            }
        }
    }
}

/// The synthetic meta-distribution `ρ`: `μ` from the prior, then
/// `y = f_ρ(μ) + ε` with `ε` uniform on `[−s, s]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaDistribution {
    pub prior: ParamPrior,
    pub target: TargetFunctional,
    /// Noise half-width `s`.
    pub noise: f64,
    #[serde(default = "default_n_ref")]
    pub n_ref: usize,
}

impl MetaDistribution {
    pub fn new(prior: ParamPrior, target: TargetFunctional, noise: f64) -> Result<Self> {
        let meta = Self {
            prior,
            target,
            noise,
            n_ref: N_REF,
        };
        meta.validate()?;
        Ok(meta)
    }

    pub fn validate(&self) -> Result<()> {
        self.prior.validate()?;
        if self.prior.dim() != self.target.dim() {
            return Err(Error::Shape(format!(
                "prior dimension {} differs from target dimension {}",
                self.prior.dim(),
                self.target.dim()
            )));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(Error::Parameter(format!("noise half-width {} must be >= 0", self.noise)));
        }
        if self.n_ref == 0 {
            return Err(Error::Parameter("reference sample size must be positive".into()));
        }
        Ok(())
    }

    /// `M = sup|f_ρ| + s`.
    pub fn output_bound(&self) -> f64 {
        self.target.output_sup() + self.noise
    }

    pub fn dim(&self) -> usize {
        self.target.dim()
    }
}

/// One first-stage draw `(μ_i, y_i)` with its reference sample.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstStageDraw {
    pub spec: DistributionSpec,
    pub reference: EmpiricalMeasure<f64>,
    /// `f_ρ(μ_i)` evaluated on the reference sample.
    pub f_ref: f64,
    pub y: f64,
}

const STREAMS_PER_ENTRY: u64 = 3;

fn entry_rng(seed: u64, i: usize, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i as u64 * STREAMS_PER_ENTRY + stream);
    rng
}

impl MetaDistribution {
    /// Draw `i` of the stream seeded by `seed`; independent of every other
    /// index, so datasets regenerate bit-exactly in any order.
    pub fn draw(&self, seed: u64, i: usize) -> Result<FirstStageDraw> {
        let mut rng = entry_rng(seed, i, 0);
        let spec = self.prior.sample(&mut rng);
        let noise = if self.noise > 0.0 {
            rng.gen_range(-self.noise..=self.noise)
        } else {
            0.0
        };
        let reference = spec.sample_with(self.n_ref, &mut entry_rng(seed, i, 1))?;
        let f_ref = self.target.eval(&reference);
        let m = self.output_bound();
        Ok(FirstStageDraw {
            spec,
            reference,
            f_ref,
            y: (f_ref + noise).clamp(-m, m),
        })
    }
}

/// First-stage record of a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirstStageEntry {
    pub spec: DistributionSpec,
    pub y: f64,
    pub f_ref: f64,
}

/// `D̂ = {({x_{i,j}}_j, y_i)}` together with the first-stage data it came
/// from.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoStageDataset {
    pub meta: MetaDistribution,
    pub seed: u64,
    /// Second-stage sample size per entry.
    pub n: usize,
    pub entries: Vec<FirstStageEntry>,
    /// `μ̂_i^n`.
    pub second_stage: Vec<EmpiricalMeasure<f64>>,
    /// Reference samples standing in for `μ_i`.
    pub reference: Vec<EmpiricalMeasure<f64>>,
}

/// Draws `m` first-stage pairs and `n` second-stage atoms for each.
pub fn generate(meta: &MetaDistribution, m: usize, n: usize, seed: u64) -> Result<TwoStageDataset> {
    meta.validate()?;
    if m == 0 || n == 0 {
        return Err(Error::Parameter(format!("m = {m} and n = {n} must be positive")));
    }
    let rows: Vec<(FirstStageDraw, EmpiricalMeasure<f64>)> = (0..m)
        .into_par_iter()
        .map(|i| {
            let draw = meta.draw(seed, i)?;
            let atoms = draw.spec.sample_with(n, &mut entry_rng(seed, i, 2))?;
            Ok((draw, atoms))
        })
        .collect::<Result<_>>()?;
    let mut data = TwoStageDataset {
        meta: meta.clone(),
        seed,
        n,
        entries: Vec::with_capacity(m),
        second_stage: Vec::with_capacity(m),
        reference: Vec::with_capacity(m),
    };
    for (draw, atoms) in rows {
        data.entries.push(FirstStageEntry {
            spec: draw.spec,
            y: draw.y,
            f_ref: draw.f_ref,
        });
        data.second_stage.push(atoms);
        data.reference.push(draw.reference);
    }
    Ok(data)
}

/// Which inputs an empirical error is evaluated on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    /// `𝓔_D`: the reference samples of `μ_i`.
    FirstStageReference,
    /// `𝓔_D̂`: the second-stage empirical measures.
    SecondStage,
}

impl TwoStageDataset {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ys(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.y).collect()
    }

    pub fn inputs(&self, which: Stage) -> &[EmpiricalMeasure<f64>] {
        match which {
            Stage::FirstStageReference => &self.reference,
            Stage::SecondStage => &self.second_stage,
        }
    }

    /// Network outputs on every input of a stage, optionally truncated by
    /// `π_M`.
    pub fn predictions(&self, net: &DistributionNet<f64>, which: Stage, truncate: bool) -> Result<Vec<f64>> {
        let m = self.meta.output_bound();
        self.inputs(which)
            .par_iter()
            .map(|mu| {
                let v = net.forward(mu)?;
                Ok(if truncate { project_m(v, m) } else { v })
            })
            .collect()
    }
}

pub(crate) fn mean_sq_error(pred: &[f64], ys: &[f64]) -> f64 {
    pred.iter().zip(ys).map(|(p, y)| (p - y) * (p - y)).sum::<f64>() / pred.len() as f64
}

/// `(1/m) Σ (f(input_i) − y_i)²`, with `f` replaced by `π_M f` when
/// `truncate` is set.
pub fn empirical_error(net: &DistributionNet<f64>, data: &TwoStageDataset, which: Stage, truncate: bool) -> Result<f64> {
    if net.input_dim() != data.meta.dim() {
        return Err(Error::Shape(format!(
            "network input dimension {} differs from data dimension {}",
            net.input_dim(),
            data.meta.dim()
        )));
    }
    let pred = data.predictions(net, which, truncate)?;
    Ok(mean_sq_error(&pred, &data.ys()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construct::{shipped_target, ScalarFunction};
    use crate::dfnn::Layer;

    fn meta(noise: f64) -> MetaDistribution {
        let mut m = MetaDistribution::new(
            ParamPrior::standard(2),
            shipped_target("poly-quadratic").unwrap(),
            noise,
        )
        .unwrap();
        m.n_ref = 256;
        m
    }

    #[test]
    fn noiseless_labels_equal_reference_values() {
        let data = generate(&meta(0.0), 5, 3, 1).unwrap();
        for e in &data.entries {
            assert_eq!(e.y, e.f_ref);
        }
        for (e, r) in data.entries.iter().zip(&data.reference) {
            assert_eq!(e.f_ref, data.meta.target.eval(r));
        }
    }

    #[test]
    fn labels_bounded_and_atoms_in_ball() {
        let data = generate(&meta(0.4), 40, 7, 2).unwrap();
        let m = data.meta.output_bound();
        assert!(data.entries.iter().all(|e| e.y.abs() <= m));
        for mu in &data.second_stage {
            assert_eq!(mu.len(), 7);
            assert!(mu.atoms().all(|x| x.iter().map(|v| v * v).sum::<f64>() <= 1.0 + 1e-12));
        }
    }

    #[test]
    fn generation_is_reproducible_and_prefix_stable() {
        let a = generate(&meta(0.1), 6, 4, 9).unwrap();
        let b = generate(&meta(0.1), 6, 4, 9).unwrap();
        assert_eq!(a, b);
        let c = generate(&meta(0.1), 3, 4, 9).unwrap();
        assert_eq!(&a.entries[..3], &c.entries[..]);
        assert_ne!(a, generate(&meta(0.1), 6, 4, 10).unwrap());
    }

    #[test]
    fn zero_net_error_is_mean_square_label() {
        let mut mt = meta(0.0);
        mt.target = TargetFunctional::ridge("one", vec![0.0, 0.0], ScalarFunction::Constant { value: 1.0 }, ScalarFunction::Identity, 1.0).unwrap();
        let data = generate(&mt, 4, 2, 0).unwrap();
        let net = DistributionNet::zeros(2, &[2, 3, 3, 3]).unwrap();
        assert_eq!(empirical_error(&net, &data, Stage::SecondStage, false).unwrap(), 1.0);
        assert_eq!(empirical_error(&net, &data, Stage::FirstStageReference, true).unwrap(), 1.0);
    }

    #[test]
    fn truncation_clamps_to_output_bound() {
        let data = generate(&meta(0.0), 4, 2, 3).unwrap();
        let m = data.meta.output_bound();
        // constant output 100 through a bias-free chain: σ(0 − (−1)) = 1
        let l1 = Layer::new(1, 2, vec![0.0, 0.0], vec![-1.0]).unwrap();
        let l2 = Layer::new(1, 1, vec![1.0], vec![0.0]).unwrap();
        let l3 = Layer::new(1, 1, vec![1.0], vec![0.0]).unwrap();
        let net = DistributionNet::new(2, vec![l1, l2, l3], vec![100.0]).unwrap();
        let want: f64 = data.ys().iter().map(|y| (m - y) * (m - y)).sum::<f64>() / 4.0;
        let got = empirical_error(&net, &data, Stage::SecondStage, true).unwrap();
        assert!((got - want).abs() < 1e-12);
        assert!(got <= empirical_error(&net, &data, Stage::SecondStage, false).unwrap());
    }

    #[test]
    fn mixed_prior_rejects_dimension_mismatch() {
        let p = ParamPrior::Mixed {
            priors: vec![
                ParamPrior::UniformBall { dim: 2, min_radius: 0.5, max_radius: 1.0 },
                ParamPrior::UniformBall { dim: 3, min_radius: 0.5, max_radius: 1.0 },
            ],
        };
        assert!(matches!(p.validate(), Err(Error::Shape(_))));
    }
}
