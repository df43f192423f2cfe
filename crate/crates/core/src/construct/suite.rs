use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::measure::{DistributionSpec, EmpiricalMeasure};
use crate::scalar::norm2;

/// Atoms per random-family measure in the suite.
const FAMILY_ATOMS: usize = 48;

fn unit<R: Rng>(rng: &mut R, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let r = norm2(&v);
        if r > 1e-12 {
            return v.into_iter().map(|x| x / r).collect();
        }
    }
}

fn scaled(v: &[f64], s: f64) -> Vec<f64> {
    v.iter().map(|x| x * s).collect()
}

/// Deterministic test measures on the unit ball of `ℝ^d`: Dirac masses
/// (extreme points of the measure space), uniform grids along segments and
/// on lattices, two-point measures and draws from every parametric family.
/// Always at least 200 measures.
pub fn test_measures(d: usize, seed: u64) -> Result<Vec<EmpiricalMeasure<f64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(256);

    // Diracs: origin, ± basis vectors, ± diagonal, sphere and interior points
    out.push(EmpiricalMeasure::dirac(&vec![0.0; d])?);
    for k in 0..d {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; d];
            e[k] = s;
            out.push(EmpiricalMeasure::dirac(&e)?);
        }
    }
    let diag = 1.0 / (d as f64).sqrt();
    out.push(EmpiricalMeasure::dirac(&vec![diag; d])?);
    out.push(EmpiricalMeasure::dirac(&vec![-diag; d])?);
    for _ in 0..60 {
        let u = unit(&mut rng, d);
        out.push(EmpiricalMeasure::dirac(&u)?);
    }
    for _ in 0..40 {
        let u = unit(&mut rng, d);
        let r: f64 = rng.gen::<f64>().powf(1.0 / d as f64);
        out.push(EmpiricalMeasure::dirac(&scaled(&u, r))?);
    }

    // uniform grids on random chords
    for _ in 0..20 {
        let u = unit(&mut rng, d);
        let a: f64 = rng.gen_range(-1.0..0.5);
        let b: f64 = rng.gen_range(a + 0.1..=1.0f64.min(a + 1.5));
        let pts: Vec<Vec<f64>> = (0..32)
            .map(|i| scaled(&u, a + (b - a) * i as f64 / 31.0))
            .collect();
        out.push(EmpiricalMeasure::from_points(&pts)?);
    }
    // lattice grids intersected with the ball
    if d <= 3 {
        for steps in [2usize, 4] {
            let h = 1.0 / steps as f64;
            let side = 2 * steps + 1;
            let mut pts = Vec::new();
            for idx in 0..side.pow(d as u32) {
                let mut rem = idx;
                let p: Vec<f64> = (0..d)
                    .map(|_| {
                        let c = rem % side;
                        rem /= side;
                        -1.0 + h * c as f64
                    })
                    .collect();
                if norm2(&p) <= 1.0 {
                    pts.push(p);
                }
            }
            out.push(EmpiricalMeasure::from_points(&pts)?);
        }
    }

    // two-point measures
    for _ in 0..20 {
        let x = unit(&mut rng, d);
        let y = scaled(&unit(&mut rng, d), rng.gen_range(0.0..1.0));
        out.push(EmpiricalMeasure::from_points(&[x, y])?);
    }

    // parametric families
    for i in 0..30 {
        let spec = DistributionSpec::UniformBall {
            dim: d,
            radius: 0.05 + 0.95 * i as f64 / 29.0,
        };
        out.push(spec.sample_with(FAMILY_ATOMS, &mut rng)?);
    }
    for _ in 0..30 {
        let c = scaled(&unit(&mut rng, d), rng.gen_range(0.0..1.0));
        let spec = DistributionSpec::TruncatedGaussian {
            mean: c,
            scale: rng.gen_range(0.05..0.6),
        };
        out.push(spec.sample_with(FAMILY_ATOMS, &mut rng)?);
    }
    for _ in 0..20 {
        let k = rng.gen_range(2..=3);
        let centers: Vec<Vec<f64>> = (0..k)
            .map(|_| scaled(&unit(&mut rng, d), rng.gen_range(0.3..1.0)))
            .collect();
        let spec = DistributionSpec::SphereMixture {
            centers,
            radii: (0..k).map(|_| rng.gen_range(0.02..0.3)).collect(),
            weights: (0..k).map(|_| rng.gen_range(0.1..1.0)).collect(),
        };
        out.push(spec.sample_with(FAMILY_ATOMS, &mut rng)?);
    }
    Ok(out)
}
