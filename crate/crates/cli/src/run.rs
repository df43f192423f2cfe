//! One function per subcommand. Each returns the CSV table it produced and
//! fails with [`CliError::BoundViolation`] only after the table is complete,
//! so callers can still write it out.

use distreg_core::construct::{build, decompose_target, CompositeConstants, ConstructionReport, TargetFunctional};
use distreg_core::dfnn::HypothesisSpaceSpec;
use distreg_core::regress::{
    decompose_error, erm_train, excess_risk, generate, warm_start, Init, MetaDistribution, ParamMask, ParamPrior,
    TrainOptions, TwoStageDataset,
};
use distreg_core::theory::{covering_bound, h2_covering_bound, rate_schedule, TheoryConstants};
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::output::Table;

/// Result of a run: the table and, if any row broke its bound, the
/// violation to report after writing it.
pub struct RunOutput {
    pub table: Table,
    pub violation: Option<String>,
}

impl RunOutput {
    fn ok(table: Table) -> Self {
        Self { table, violation: None }
    }
}

pub const APPROX_N_GRID: [usize; 5] = [2, 4, 8, 16, 32];
pub const LEARN_M_GRID: [usize; 5] = [64, 128, 256, 512, 1024];
pub const EPS_GRID: [f64; 3] = [1e-3, 1e-2, 1e-1];

fn meta_for(cfg: &ExperimentConfig, target: TargetFunctional) -> Result<MetaDistribution, CliError> {
    let prior = ParamPrior::standard(target.dim());
    Ok(MetaDistribution::new(prior, target, cfg.noise()?)?)
}

fn train_options(cfg: &ExperimentConfig, seed: u64) -> Result<TrainOptions, CliError> {
    Ok(TrainOptions {
        epochs: cfg.epochs.unwrap_or(20),
        step: cfg.step(0.05)?,
        seed,
        batch: cfg.batch,
        mask: ParamMask::default(),
    })
}

fn composite_constants(target: &TargetFunctional) -> Result<CompositeConstants, CliError> {
    let dec = decompose_target(target)?;
    Ok(CompositeConstants::new(target, &dec)?)
}

/// Warm start and the hypothesis space: the construction's radius unless
/// the config sets one.
fn start(cfg: &ExperimentConfig, target: &TargetFunctional, n: usize) -> Result<(distreg_core::Net, HypothesisSpaceSpec), CliError> {
    let (net, spec) = warm_start(target, n)?;
    match cfg.radius {
        Some(r) => Ok((net, HypothesisSpaceSpec::new(r, n)?)),
        None => Ok((net, spec)),
    }
}

fn reports(cfg: &ExperimentConfig) -> Result<Vec<ConstructionReport>, CliError> {
    let targets = cfg.targets()?;
    let ns = cfg.n_grid(&APPROX_N_GRID)?;
    let jobs: Vec<(&TargetFunctional, usize)> = targets.iter().flat_map(|t| ns.iter().map(move |&n| (t, n))).collect();
    jobs.par_iter()
        .map(|(t, n)| build(t, *n).map_err(CliError::from))
        .collect()
}

/// `construct`: one construction report per (target, N).
pub fn run_construct(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let mut table = Table::new(&ConstructionReport::CSV_HEADER.split(',').collect::<Vec<_>>());
    let mut failed = Vec::new();
    for r in reports(cfg)? {
        table.rows.push(r.csv_row().split(',').map(str::to_string).collect());
        if !r.passes() {
            failed.push(format!("{} N={}", r.target_id, r.n));
        }
    }
    Ok(RunOutput {
        table,
        violation: (!failed.is_empty()).then(|| format!("construction checks failed: {}", failed.join(", "))),
    })
}

/// `approx-rate`: measured sup error against the theoretical bound.
pub fn run_approx_rate(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let mut table = Table::new(&["target", "N", "measured", "bound", "ratio"]);
    let mut failed = Vec::new();
    for r in reports(cfg)? {
        table.push([
            r.target_id.clone(),
            r.n.to_string(),
            r.measured_error.to_string(),
            r.claimed_bound.to_string(),
            (r.measured_error / r.claimed_bound).to_string(),
        ]);
        if r.measured_error > r.claimed_bound + 1e-9 {
            failed.push(format!("{} N={}", r.target_id, r.n));
        }
    }
    Ok(RunOutput {
        table,
        violation: (!failed.is_empty()).then(|| format!("measured error above bound: {}", failed.join(", "))),
    })
}

/// `cover-bound`: covering-number bounds over an (N, ε) grid.
pub fn run_cover_bound(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let (d, q, r) = match (cfg.dim, cfg.degree, cfg.radius) {
        (Some(d), Some(q), Some(r)) => (d, q, r),
        _ => {
            let c = composite_constants(&cfg.target()?)?;
            (cfg.dim.unwrap_or(c.dim), cfg.degree.unwrap_or(c.degree), cfg.radius.unwrap_or_else(|| c.radius().max(1.0)))
        }
    };
    let variant = cfg.r_hat.unwrap_or_default();
    let mut table = Table::new(&["N", "eps", "bound", "h2_bound", "clamped"]);
    table.notes.push(format!("d={d} q={q} R={r} r_hat={variant:?}"));
    for n in cfg.n_grid(&APPROX_N_GRID)? {
        let spec = HypothesisSpaceSpec::new(r, n)?;
        for eps in cfg.eps_grid(&EPS_GRID)? {
            let b = covering_bound(&spec, d, q, eps, variant)?;
            let b2 = h2_covering_bound(&spec, d, q, eps, variant)?;
            table.push([n.to_string(), eps.to_string(), b.value.to_string(), b2.value.to_string(), b.clamped.to_string()]);
        }
    }
    Ok(RunOutput::ok(table))
}

/// Least-squares slope of `y` on `x` with its 95% confidence half-width.
pub fn fit_slope(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let k = x.len();
    if k < 3 || y.len() != k {
        return None;
    }
    let kf = k as f64;
    let (mx, my) = (x.iter().sum::<f64>() / kf, y.iter().sum::<f64>() / kf);
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let resid: f64 = x.iter().zip(y).map(|(a, b)| (b - my - slope * (a - mx)).powi(2)).sum();
    let se = (resid / (kf - 2.0) / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, kf - 2.0).ok()?.inverse_cdf(0.975);
    Some((slope, t * se))
}

/// `N` and `n` for one first-stage size: the theoretical schedule, with
/// `A₄`/`A₅` replaced when the config supplies coefficients and `n` capped.
pub fn schedule(cfg: &ExperimentConfig, m: usize, constants: &TheoryConstants) -> Result<(usize, usize, bool), CliError> {
    let s = rate_schedule(m as u64, constants)?;
    let b = constants.beta;
    let mf = m as f64;
    let big_n = match cfg.big_n_coef {
        Some(k) => ((k * mf.powf(1.0 / (2.0 * b + 1.0))).floor() as usize).max(1),
        None => s.big_n,
    };
    let n_real = match cfg.n_coef {
        Some(k) => (k * mf.powf((4.0 * b + 17.0) / (2.0 * b + 1.0))).ceil(),
        None => s.n_min_real,
    };
    let cap = cfg.positive("n_cap", cfg.n_cap, 256)?;
    let capped = !(n_real <= cap as f64);
    let n = if capped { cap } else { (n_real as usize).max(1) };
    Ok((big_n, n, capped))
}

/// `learn-rate`: for each `m`, generate data, warm-start and train, then
/// estimate the excess risk; fits the log-log slope over `m`.
pub fn run_learn_rate(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let target = cfg.target()?;
    let meta = meta_for(cfg, target.clone())?;
    let constants = TheoryConstants::from_composite(&composite_constants(&target)?, meta.output_bound(), cfg.r_hat.unwrap_or_default())?;
    let ms = cfg.m_grid(&LEARN_M_GRID)?;
    let mc = cfg.positive("mc_size", cfg.mc_size, 200)?;
    let seed = cfg.seed();

    let mut table = Table::new(&["m", "N", "n", "excess_risk", "stderr", "n_capped"]);
    let (mut lx, mut ly) = (Vec::new(), Vec::new());
    for (k, &m) in ms.iter().enumerate() {
        let (big_n, n, capped) = schedule(cfg, m, &constants)?;
        let run_seed = seed.wrapping_add(k as u64);
        let data = generate(&meta, m, n, run_seed)?;
        let (init, spec) = start(cfg, &target, big_n)?;
        let out = erm_train(&data, &spec, Init::Net(init), &train_options(cfg, run_seed)?)?;
        let risk = excess_risk(&out.net, &meta, mc, run_seed)?;
        table.push([
            m.to_string(),
            big_n.to_string(),
            n.to_string(),
            risk.mean.to_string(),
            risk.stderr.to_string(),
            capped.to_string(),
        ]);
        lx.push((m as f64).ln());
        ly.push(risk.mean.ln());
    }

    let span = ms.iter().max().unwrap() / ms.iter().min().unwrap();
    let fit = (ms.len() >= 4 && span >= 8).then(|| fit_slope(&lx, &ly)).flatten();
    match fit {
        Some((slope, half)) => {
            table.columns.extend(["slope".to_string(), "slope_halfwidth".to_string()]);
            for r in &mut table.rows {
                r.extend([slope.to_string(), half.to_string()]);
            }
            table.notes.push(format!("target rate -2β/(2β+1) = {}", -2.0 * constants.beta / (2.0 * constants.beta + 1.0)));
        }
        None => table.notes.push("slope not fitted: m grid needs >= 4 points spanning >= 8x".into()),
    }
    Ok(RunOutput::ok(table))
}

/// Slope column of a learn-rate table, if fitted.
pub fn learn_rate_slope(table: &Table) -> Option<(f64, f64)> {
    let s = table.column("slope")?;
    let h = table.column("slope_halfwidth")?;
    Some((s.first()?.parse().ok()?, h.first()?.parse().ok()?))
}

/// `decompose`: repeated train-and-decompose runs.
pub fn run_decompose(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let target = cfg.target()?;
    let meta = meta_for(cfg, target.clone())?;
    let n_res = cfg.n_grid(&[4])?[0];
    let m = cfg.positive("m", cfg.m, 64)?;
    let n = cfg.positive("n", cfg.n, 32)?;
    let runs = cfg.positive("runs", cfg.runs, 20)?;
    let mc = cfg.positive("mc_size", cfg.mc_size, 200)?;
    let seed = cfg.seed();
    let (h, spec) = start(cfg, &target, n_res)?;

    let rows: Vec<_> = (0..runs)
        .into_par_iter()
        .map(|k| {
            let run_seed = seed.wrapping_add(k as u64);
            let data = generate(&meta, m, n, run_seed)?;
            let out = erm_train(&data, &spec, Init::Net(h.clone()), &train_options(cfg, run_seed)?)?;
            Ok(decompose_error(&out.net, &h, &data, mc, run_seed)?)
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    let mut table = Table::new(&["run", "I1", "I2", "I3", "I4", "R_H", "excess", "combined_se", "rhs", "holds"]);
    let mut failed = Vec::new();
    for (k, d) in rows.iter().enumerate() {
        table.push([
            k.to_string(),
            d.i1.to_string(),
            d.i2.to_string(),
            d.i3.to_string(),
            d.i4.to_string(),
            d.r_h.to_string(),
            d.excess.to_string(),
            d.combined_stderr().to_string(),
            d.rhs().to_string(),
            d.holds().to_string(),
        ]);
        if !d.holds() {
            failed.push(k.to_string());
        }
    }
    Ok(RunOutput {
        table,
        violation: (!failed.is_empty()).then(|| format!("decomposition fails on runs {}", failed.join(", "))),
    })
}

fn dataset(cfg: &ExperimentConfig) -> Result<TwoStageDataset, CliError> {
    match &cfg.data {
        Some(dir) => Ok(TwoStageDataset::read_dir(dir)?),
        None => {
            let meta = meta_for(cfg, cfg.target()?)?;
            let m = cfg.positive("m", cfg.m, 64)?;
            let n = cfg.positive("n", cfg.n, 32)?;
            Ok(generate(&meta, m, n, cfg.seed())?)
        }
    }
}

/// `gen-data`: writes the dataset directory to `out` and returns a summary
/// of the first stage.
pub fn run_gen_data(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let dir = cfg
        .out
        .as_ref()
        .ok_or_else(|| CliError::config("out", "gen-data needs an output directory"))?;
    let mut cfg = cfg.clone();
    cfg.data = None;
    let data = dataset(&cfg)?;
    data.write_dir(dir)?;
    let mut table = Table::new(&["i", "family", "y", "f_ref"]);
    for (i, e) in data.entries.iter().enumerate() {
        table.push([i.to_string(), e.spec.family().to_string(), e.y.to_string(), e.f_ref.to_string()]);
    }
    table.notes.push(format!("m={} n={} M={}", data.len(), data.n, data.meta.output_bound()));
    Ok(RunOutput::ok(table))
}

/// `train`: warm-started ERM on a generated or stored dataset; the epoch
/// history is the table, the network goes to `net_out`.
pub fn run_train(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let data = dataset(cfg)?;
    let n_res = cfg.n_grid(&[4])?[0];
    let (init, spec) = start(cfg, &data.meta.target, n_res)?;
    let out = erm_train(&data, &spec, Init::Net(init), &train_options(cfg, cfg.seed())?)?;
    if let Some(path) = &cfg.net_out {
        std::fs::write(path, out.net.to_json()?)?;
    }
    let mut table = Table::new(&["epoch", "loss", "step", "accepted", "in_space"]);
    for r in &out.history {
        table.push([r.epoch.to_string(), r.loss.to_string(), r.step.to_string(), r.accepted.to_string(), r.in_space.to_string()]);
    }
    table.notes.push(format!("R={} N={} initial_loss={} final_loss={}", spec.r, spec.n, out.initial_loss, out.final_loss));
    Ok(RunOutput::ok(table))
}
