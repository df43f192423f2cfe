use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{mean_sq_error, Stage, TwoStageDataset};
use crate::construct::{build, TargetFunctional};
use crate::dfnn::{DistributionNet, Gradient, HypothesisSpaceSpec};
use crate::error::{Error, Result};

/// Smallest step size tried before training stops.
pub const MIN_STEP: f64 = 1e-12;

/// Starting point of training.
#[derive(Debug, Clone)]
pub enum Init {
    Net(DistributionNet<f64>),
    /// The analytic construction for the data's target at resolution `N`.
    WarmStart,
}

/// Which parameter groups move during training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamMask {
    pub weights: bool,
    pub biases: bool,
    pub coeffs: bool,
}

impl Default for ParamMask {
    fn default() -> Self {
        Self {
            weights: true,
            biases: true,
            coeffs: true,
        }
    }
}

impl ParamMask {
    pub fn coeffs_only() -> Self {
        Self {
            weights: false,
            biases: false,
            coeffs: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    pub epochs: usize,
    /// Initial step size.
    pub step: f64,
    /// Selects mini-batches; unused for full-batch training.
    pub seed: u64,
    /// Mini-batch size for the gradient; `None` is full batch. Acceptance
    /// always uses the full empirical error.
    pub batch: Option<usize>,
    pub mask: ParamMask,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            epochs: 50,
            step: 1e-2,
            seed: 0,
            batch: None,
            mask: ParamMask::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// `𝓔_D̂` after the epoch.
    pub loss: f64,
    /// Step size the epoch ended with.
    pub step: f64,
    pub accepted: bool,
    pub in_space: bool,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub net: DistributionNet<f64>,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub history: Vec<EpochRecord>,
    /// Set when the step size fell below [`MIN_STEP`].
    pub stalled: bool,
}

/// Euclidean projection of `v` onto the ℓ₁ ball of the given radius:
/// soft-thresholding of `|v|` at the simplex threshold, signs restored.
/// Ties in the sort keep index order.
pub fn project_l1(v: &mut [f64], radius: f64) {
    let norm: f64 = v.iter().map(|x| x.abs()).sum();
    if norm <= radius {
        return;
    }
    if radius <= 0.0 {
        v.iter_mut().for_each(|x| *x = 0.0);
        return;
    }
    let mut u: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    u.sort_by(|a, b| b.total_cmp(a));
    let (mut cum, mut theta) = (0.0, 0.0);
    for (j, &uj) in u.iter().enumerate() {
        cum += uj;
        let t = (cum - radius) / (j + 1) as f64;
        if uj > t {
            theta = t;
        } else {
            break;
        }
    }
    for x in v.iter_mut() {
        *x = x.signum() * (x.abs() - theta).max(0.0);
    }
}

/// Maps a network into `𝓗_{(2,3),R,N}`: rows of every `F^(j)` projected
/// onto the ℓ₁ ball of radius `RN²`, biases clamped to `[−R, R]` and `c`
/// to `[−RN, RN]`.
pub fn project_onto_space(net: &mut DistributionNet<f64>, spec: &HypothesisSpaceSpec) {
    let (wl, bl, cl) = (spec.weight_limit(), spec.bias_limit(), spec.coeff_limit());
    for layer in net.layers_mut() {
        let cols = layer.cols();
        for row in layer.weights_mut().chunks_exact_mut(cols) {
            project_l1(row, wl);
        }
        layer.bias_mut().iter_mut().for_each(|b| *b = b.clamp(-bl, bl));
    }
    net.coeffs_mut().iter_mut().for_each(|c| *c = c.clamp(-cl, cl));
}

/// The analytic construction for `target` at resolution `n` and the
/// hypothesis space it certifiably belongs to.
pub fn warm_start(target: &TargetFunctional, n: usize) -> Result<(DistributionNet<f64>, HypothesisSpaceSpec)> {
    let report = build(target, n)?;
    let r = report.radius().ok_or_else(|| Error::Kind {
        expected: "poly-composite or radial",
        got: target.kind().into(),
    })?;
    Ok((report.net, HypothesisSpaceSpec::new(r, n)?))
}

fn loss(net: &DistributionNet<f64>, data: &TwoStageDataset, ys: &[f64]) -> Result<f64> {
    Ok(mean_sq_error(&data.predictions(net, Stage::SecondStage, false)?, ys))
}

/// Gradient of `(1/|I|) Σ_{i∈I} (f(μ̂_i) − y_i)²`; per-sample terms are
/// computed in parallel and summed in index order.
fn batch_gradient(net: &DistributionNet<f64>, data: &TwoStageDataset, idx: &[usize]) -> Result<Gradient<f64>> {
    let scale = 2.0 / idx.len() as f64;
    let parts: Vec<Gradient<f64>> = idx
        .par_iter()
        .map(|&i| {
            let mu = &data.second_stage[i];
            let residual = net.forward(mu)? - data.entries[i].y;
            let mut g = Gradient::zeros_like(net);
            net.accumulate_gradient(mu, scale * residual, &mut g)?;
            Ok(g)
        })
        .collect::<Result<_>>()?;
    let mut total = Gradient::zeros_like(net);
    for g in &parts {
        total.add_scaled(1.0, g);
    }
    Ok(total)
}

fn apply_step(net: &DistributionNet<f64>, grad: &Gradient<f64>, step: f64, mask: ParamMask) -> DistributionNet<f64> {
    let mut out = net.clone();
    for (j, layer) in out.layers_mut().iter_mut().enumerate() {
        if mask.weights {
            for (w, g) in layer.weights_mut().iter_mut().zip(&grad.weights[j]) {
                *w -= step * g;
            }
        }
        if mask.biases {
            for (b, g) in layer.bias_mut().iter_mut().zip(&grad.biases[j]) {
                *b -= step * g;
            }
        }
    }
    if mask.coeffs {
        for (c, g) in out.coeffs_mut().iter_mut().zip(&grad.coeffs) {
            *c -= step * g;
        }
    }
    out
}

/// Projected gradient descent on `𝓔_D̂(f) = (1/m) Σ (f(μ̂_i^n) − y_i)²`
/// over `𝓗_{(2,3),R,N}`.
///
/// A step that would increase the empirical error is rejected and the step
/// size halved, so the loss is monotone and never ends above the initial
/// network's. Training stops early once the step size drops below
/// [`MIN_STEP`].
pub fn erm_train(data: &TwoStageDataset, spec: &HypothesisSpaceSpec, init: Init, opts: &TrainOptions) -> Result<TrainOutcome> {
    if !(opts.step > 0.0 && opts.step.is_finite()) {
        return Err(Error::Parameter(format!("step {} must be positive", opts.step)));
    }
    if data.is_empty() {
        return Err(Error::Parameter("empty dataset".into()));
    }
    let mut net = match init {
        Init::Net(net) => net,
        Init::WarmStart => {
            let (net, own) = warm_start(&data.meta.target, spec.n)?;
            if own.r > spec.r {
                return Err(Error::Precondition(format!(
                    "construction needs R = {}, hypothesis space has R = {}",
                    own.r, spec.r
                )));
            }
            net
        }
    };
    if net.input_dim() != data.meta.dim() {
        return Err(Error::Shape(format!(
            "network input dimension {} differs from data dimension {}",
            net.input_dim(),
            data.meta.dim()
        )));
    }
    if let Some(v) = spec.violations(&net)?.first() {
        return Err(Error::Precondition(format!(
            "initial network outside the hypothesis space: {} norm {} exceeds {}",
            v.location, v.value, v.limit
        )));
    }

    let ys = data.ys();
    let m = data.len();
    let initial_loss = loss(&net, data, &ys)?;
    let mut current = initial_loss;
    let mut step = opts.step;
    let mut history = Vec::with_capacity(opts.epochs);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let all: Vec<usize> = (0..m).collect();
    let mut stalled = false;

    for epoch in 0..opts.epochs {
        let idx = match opts.batch {
            Some(b) if b < m => {
                let mut v = sample(&mut rng, m, b.max(1)).into_vec();
                v.sort_unstable();
                v
            }
            _ => all.clone(),
        };
        let grad = batch_gradient(&net, data, &idx)?;
        let mut accepted = false;
        while step >= MIN_STEP {
            let mut cand = apply_step(&net, &grad, step, opts.mask);
            project_onto_space(&mut cand, spec);
            let l = loss(&cand, data, &ys)?;
            if l <= current {
                net = cand;
                current = l;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        history.push(EpochRecord {
            epoch,
            loss: current,
            step,
            accepted,
            in_space: spec.contains(&net)?,
        });
        if !accepted {
            stalled = true;
            break;
        }
    }
    Ok(TrainOutcome {
        net,
        initial_loss,
        final_loss: current,
        history,
        stalled,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{empirical_error, generate, MetaDistribution, ParamPrior};
    use super::*;
    use crate::construct::shipped_target;
    use proptest::prelude::*;

    fn small_data(noise: f64, m: usize, n: usize) -> TwoStageDataset {
        let mut meta = MetaDistribution::new(ParamPrior::standard(2), shipped_target("poly-quadratic").unwrap(), noise).unwrap();
        meta.n_ref = 256;
        generate(&meta, m, n, 4).unwrap()
    }

    #[test]
    fn l1_projection_examples() {
        let mut v = vec![3.0, -1.0, 0.5];
        project_l1(&mut v, 2.0);
        assert_eq!(v, vec![2.0, 0.0, 0.0]);
        let mut v = vec![1.0, -1.0];
        project_l1(&mut v, 1.0);
        assert_eq!(v, vec![0.5, -0.5]);
        let mut v = vec![0.2, -0.3];
        project_l1(&mut v, 1.0);
        assert_eq!(v, vec![0.2, -0.3]);
    }

    proptest! {
        #[test]
        fn l1_projection_is_feasible_and_nearest(v in prop::collection::vec(-5.0f64..5.0, 1..12), r in 0.1f64..4.0, probe in prop::collection::vec(-1.0f64..1.0, 12)) {
            let mut p = v.clone();
            project_l1(&mut p, r);
            let n1: f64 = p.iter().map(|x| x.abs()).sum();
            prop_assert!(n1 <= r * (1.0 + 1e-12));
            // any other feasible point is at least as far from v
            let mut z: Vec<f64> = probe[..v.len()].to_vec();
            let zn: f64 = z.iter().map(|x| x.abs()).sum();
            if zn > r {
                z.iter_mut().for_each(|x| *x *= r / zn);
            }
            let d = |a: &[f64]| a.iter().zip(&v).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
            prop_assert!(d(&p) <= d(&z) + 1e-9);
            for (a, b) in p.iter().zip(&v) {
                prop_assert!(a * b >= 0.0);
            }
        }
    }

    #[test]
    fn zero_epochs_return_init() {
        let data = small_data(0.0, 8, 8);
        let (net, spec) = warm_start(&data.meta.target, 2).unwrap();
        let out = erm_train(&data, &spec, Init::Net(net.clone()), &TrainOptions { epochs: 0, ..Default::default() }).unwrap();
        assert_eq!(out.net, net);
        assert!(out.history.is_empty());
    }

    #[test]
    fn warm_start_training_is_monotone_and_stays_in_space() {
        let data = small_data(0.1, 24, 16);
        let (_, spec) = warm_start(&data.meta.target, 3).unwrap();
        let opts = TrainOptions {
            epochs: 15,
            step: 0.05,
            ..Default::default()
        };
        let out = erm_train(&data, &spec, Init::WarmStart, &opts).unwrap();
        let mut prev = out.initial_loss;
        for rec in &out.history {
            assert!(rec.loss <= prev);
            assert!(rec.in_space);
            prev = rec.loss;
        }
        assert!(out.final_loss <= out.initial_loss + 1e-9);
        assert_eq!(out.final_loss, empirical_error(&out.net, &data, Stage::SecondStage, false).unwrap());
    }

    #[test]
    fn init_outside_space_is_rejected() {
        let data = small_data(0.0, 4, 4);
        let (net, _) = warm_start(&data.meta.target, 2).unwrap();
        let tiny = HypothesisSpaceSpec::new(0.5, 2).unwrap();
        let err = erm_train(&data, &tiny, Init::Net(net), &TrainOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
        assert!(matches!(erm_train(&data, &tiny, Init::WarmStart, &TrainOptions::default()), Err(Error::Precondition(_))));
    }

    #[test]
    fn minibatch_training_is_deterministic() {
        let data = small_data(0.2, 16, 8);
        let (net, spec) = warm_start(&data.meta.target, 2).unwrap();
        let opts = TrainOptions {
            epochs: 5,
            step: 0.1,
            seed: 3,
            batch: Some(5),
            ..Default::default()
        };
        let a = erm_train(&data, &spec, Init::Net(net.clone()), &opts).unwrap();
        let b = erm_train(&data, &spec, Init::Net(net), &opts).unwrap();
        assert_eq!(a.net, b.net);
        assert_eq!(a.history, b.history);
    }
}
