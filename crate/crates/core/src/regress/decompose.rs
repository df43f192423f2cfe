use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{mean_sq_error, MetaDistribution, Stage, TwoStageDataset};
use crate::dfnn::{project_m, DistributionNet};
use crate::error::{Error, Result};

/// A Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

impl RiskEstimate {
    fn from_samples(v: &[f64]) -> Self {
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = if v.len() > 1 {
            v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self {
            mean,
            stderr: (var / n).sqrt(),
            samples: v.len(),
        }
    }
}

/// Terms of the two-stage error decomposition for a trained `f` and a
/// comparison network `h`:
///
/// * `I₁ = {𝓔(π_M f) − 𝓔(f_ρ)} − {𝓔_D(π_M f) − 𝓔_D(f_ρ)}`
/// * `I₂ = {𝓔_D(h) − 𝓔_D(f_ρ)} − {𝓔(h) − 𝓔(f_ρ)}`
/// * `I₃ = 𝓔_D(π_M f) − 𝓔_D̂(π_M f)`
/// * `I₄ = 𝓔_D̂(h) − 𝓔_D(h)`
/// * `R(𝓗) = 𝓔(h) − 𝓔(f_ρ)`
///
/// `𝓔` is estimated on fresh meta-draws; `𝓔_D` uses the reference samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorDecomposition {
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    pub i4: f64,
    pub r_h: f64,
    /// `𝓔(π_M f) − 𝓔(f_ρ)`.
    pub excess: f64,
    pub se_excess: f64,
    pub se_r: f64,
    pub mc_size: usize,
}

impl ErrorDecomposition {
    /// `I₁ + I₂ + |I₃| + |I₄| + R(𝓗)`.
    pub fn rhs(&self) -> f64 {
        self.i1 + self.i2 + self.i3.abs() + self.i4.abs() + self.r_h
    }

    /// `I₁` carries the error of the excess estimate, `I₂` and `R(𝓗)` that
    /// of `𝓔(h) − 𝓔(f_ρ)`; the first-stage terms are exact given the data.
    pub fn combined_stderr(&self) -> f64 {
        (2.0 * self.se_excess * self.se_excess + 2.0 * self.se_r * self.se_r).sqrt()
    }

    /// `excess ≤ rhs + 3·combined standard error`.
    pub fn holds(&self) -> bool {
        self.excess <= self.rhs() + 3.0 * self.combined_stderr() + 1e-12
    }

    /// `rhs − excess`; nonnegative whenever the ERM step did not lose to `h`.
    pub fn slack(&self) -> f64 {
        self.rhs() - self.excess
    }
}

struct FreshValues {
    f: Vec<f64>,
    h: Vec<f64>,
    f_rho: Vec<f64>,
    y: Vec<f64>,
}

const FRESH_SEED_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

fn fresh_values(
    net: &DistributionNet<f64>,
    h: Option<&DistributionNet<f64>>,
    meta: &MetaDistribution,
    mc_size: usize,
    seed: u64,
) -> Result<FreshValues> {
    let m = meta.output_bound();
    let rows: Vec<(f64, f64, f64, f64)> = (0..mc_size)
        .into_par_iter()
        .map(|k| {
            let draw = meta.draw(seed ^ FRESH_SEED_SALT, k)?;
            let fv = project_m(net.forward(&draw.reference)?, m);
            let hv = match h {
                Some(h) => h.forward(&draw.reference)?,
                None => 0.0,
            };
            Ok((fv, hv, draw.f_ref, draw.y))
        })
        .collect::<Result<_>>()?;
    Ok(FreshValues {
        f: rows.iter().map(|r| r.0).collect(),
        h: rows.iter().map(|r| r.1).collect(),
        f_rho: rows.iter().map(|r| r.2).collect(),
        y: rows.iter().map(|r| r.3).collect(),
    })
}

fn check_dims(net: &DistributionNet<f64>, meta: &MetaDistribution) -> Result<()> {
    if net.input_dim() != meta.dim() {
        return Err(Error::Shape(format!(
            "network input dimension {} differs from data dimension {}",
            net.input_dim(),
            meta.dim()
        )));
    }
    Ok(())
}

/// `‖π_M f − f_ρ‖²_ρ` by Monte Carlo over `mc_size` fresh meta-draws.
pub fn excess_risk(net: &DistributionNet<f64>, meta: &MetaDistribution, mc_size: usize, seed: u64) -> Result<RiskEstimate> {
    check_dims(net, meta)?;
    if mc_size == 0 {
        return Err(Error::Parameter("Monte Carlo size must be positive".into()));
    }
    let v = fresh_values(net, None, meta, mc_size, seed)?;
    let sq: Vec<f64> = v.f.iter().zip(&v.f_rho).map(|(a, b)| (a - b) * (a - b)).collect();
    Ok(RiskEstimate::from_samples(&sq))
}

/// Estimates every term of the decomposition for the trained `net` and a
/// comparison `h`, which must lie in the hypothesis space the ERM ran over.
pub fn decompose_error(
    net: &DistributionNet<f64>,
    h: &DistributionNet<f64>,
    data: &TwoStageDataset,
    mc_size: usize,
    seed: u64,
) -> Result<ErrorDecomposition> {
    check_dims(net, &data.meta)?;
    check_dims(h, &data.meta)?;
    if mc_size < 2 {
        return Err(Error::Parameter("Monte Carlo size must be at least 2".into()));
    }
    let fresh = fresh_values(net, Some(h), &data.meta, mc_size, seed)?;
    let sq = |pred: &[f64]| -> Vec<f64> { pred.iter().zip(&fresh.y).map(|(p, y)| (p - y) * (p - y)).collect() };
    let (ef, eh, erho) = (sq(&fresh.f), sq(&fresh.h), sq(&fresh.f_rho));
    let diff = |a: &[f64]| -> Vec<f64> { a.iter().zip(&erho).map(|(x, y)| x - y).collect() };
    let excess = RiskEstimate::from_samples(&diff(&ef));
    let r_h = RiskEstimate::from_samples(&diff(&eh));

    let ys = data.ys();
    let f_rho_d: Vec<f64> = data.entries.iter().map(|e| e.f_ref).collect();
    let ed_rho = mean_sq_error(&f_rho_d, &ys);
    let ed_f = mean_sq_error(&data.predictions(net, Stage::FirstStageReference, true)?, &ys);
    let edhat_f = mean_sq_error(&data.predictions(net, Stage::SecondStage, true)?, &ys);
    let ed_h = mean_sq_error(&data.predictions(h, Stage::FirstStageReference, false)?, &ys);
    let edhat_h = mean_sq_error(&data.predictions(h, Stage::SecondStage, false)?, &ys);

    Ok(ErrorDecomposition {
        i1: excess.mean - (ed_f - ed_rho),
        i2: (ed_h - ed_rho) - r_h.mean,
        i3: ed_f - edhat_f,
        i4: edhat_h - ed_h,
        r_h: r_h.mean,
        excess: excess.mean,
        se_excess: excess.stderr,
        se_r: r_h.stderr,
        mc_size,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{erm_train, generate, warm_start, Init, ParamPrior, TrainOptions};
    use super::*;
    use crate::construct::shipped_target;

    fn setup(noise: f64, m: usize, n: usize) -> TwoStageDataset {
        let mut meta = MetaDistribution::new(ParamPrior::standard(2), shipped_target("poly-quadratic").unwrap(), noise).unwrap();
        meta.n_ref = 512;
        generate(&meta, m, n, 21).unwrap()
    }

    #[test]
    fn identical_networks_give_consistent_terms() {
        let data = setup(0.1, 20, 16);
        let (h, _) = warm_start(&data.meta.target, 3).unwrap();
        let dec = decompose_error(&h, &h, &data, 64, 5).unwrap();
        // π_M is inactive on the construction, so I₃ = −I₄ and I₁ = −I₂
        assert!((dec.i3 + dec.i4).abs() < 1e-12);
        assert!((dec.i1 + dec.i2).abs() < 1e-12);
        assert!(dec.holds());
    }

    #[test]
    fn trained_net_satisfies_decomposition() {
        let data = setup(0.2, 24, 16);
        let (h, spec) = warm_start(&data.meta.target, 3).unwrap();
        let opts = TrainOptions {
            epochs: 5,
            step: 0.05,
            ..Default::default()
        };
        let out = erm_train(&data, &spec, Init::Net(h.clone()), &opts).unwrap();
        let dec = decompose_error(&out.net, &h, &data, 128, 6).unwrap();
        assert!(dec.slack() >= -1e-12, "{dec:?}");
        assert!(dec.holds());
    }

    #[test]
    fn excess_risk_of_truth_proxy_is_small() {
        let data = setup(0.0, 2, 2);
        let (h, _) = warm_start(&data.meta.target, 8).unwrap();
        let r = excess_risk(&h, &data.meta, 32, 1).unwrap();
        assert!(r.mean >= 0.0 && r.stderr >= 0.0 && r.samples == 32);
        let bound = crate::construct::build(&data.meta.target, 8).unwrap().claimed_bound;
        assert!(r.mean <= bound * bound);
    }
}
