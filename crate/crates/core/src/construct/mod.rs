//! Explicit weight constructions for ridge and polynomial-composite
//! functionals, with measured-versus-claimed error reports and
//! parameter-norm certification.

mod suite;
mod target;

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use suite::test_measures;
pub use target::{
    CompositeConstants, Feature, RadiusTerms, RidgeConstants, ScalarFunction, TargetFunctional,
};

use crate::dfnn::{DistributionNet, HypothesisSpaceSpec, Layer, ParamNorms};
use crate::error::{Error, Result};
use crate::measure::EmpiricalMeasure;
use crate::ridgedecomp::{decompose, PolynomialSpec, RidgeDecomposition};
use crate::scalar::norm2;
use crate::spline::{diff_operator, quasi_interpolant, Mesh};

/// Seed of the default test-measure suite.
pub const SUITE_SEED: u64 = 0x5eed_2024;

/// Slack allowed between measured error and claimed bound.
pub const BOUND_SLACK: f64 = 1e-9;

/// Points used for the inner polynomial reconstruction check.
const INNER_POINTS: usize = 4096;

/// Named group of independently chosen weights in a structured network.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamGroup {
    pub name: String,
    pub count: usize,
}

/// Free parameters of a construction, counted per structural group
/// (repeated rows and tiled vectors are counted once).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FreeParameters {
    pub groups: Vec<ParamGroup>,
}

impl FreeParameters {
    fn new(groups: &[(&str, usize)]) -> Self {
        Self {
            groups: groups
                .iter()
                .map(|&(name, count)| ParamGroup {
                    name: name.into(),
                    count,
                })
                .collect(),
        }
    }

    pub fn total(&self) -> usize {
        self.groups.iter().map(|g| g.count).sum()
    }
}

/// `8N + d + 12`.
pub fn ridge_param_formula(n: usize, d: usize) -> usize {
    8 * n + d + 12
}

/// `(2q + 10)N + (d + q)n_q + 3q + 15`.
pub fn poly_param_formula(n: usize, d: usize, q: usize, n_q: usize) -> usize {
    (2 * q + 10) * n + (d + q) * n_q + 3 * q + 15
}

/// `12N + d² + d + 18`.
pub fn radial_param_formula(n: usize, d: usize) -> usize {
    12 * n + d * d + d + 18
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Constants {
    Ridge(RidgeConstants),
    Composite(CompositeConstants),
}

/// `sup |Q̃ − Q|` over sample points of the ball against `2q‖γ‖₁/N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InnerCheck {
    pub error: f64,
    pub bound: f64,
}

impl InnerCheck {
    pub fn passes(&self) -> bool {
        self.error <= self.bound + BOUND_SLACK
    }
}

/// Per-layer norms of a net checked against a radius `R`.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub r: f64,
    pub n: usize,
    pub norms: ParamNorms<f64>,
}

/// Result of one construction at one resolution.
#[derive(Debug, Clone)]
pub struct ConstructionReport {
    pub target_id: String,
    pub kind: &'static str,
    pub n: usize,
    pub net: DistributionNet<f64>,
    pub claimed_bound: f64,
    pub measured_error: f64,
    pub suite_size: usize,
    pub free_parameters: FreeParameters,
    pub constants: Constants,
    pub decomposition: Option<RidgeDecomposition>,
    pub inner: Option<InnerCheck>,
    pub certificate: Option<Certificate>,
}

impl ConstructionReport {
    pub fn param_count(&self) -> usize {
        self.free_parameters.total()
    }

    /// Radius `R` that places a composite construction in its hypothesis space.
    pub fn radius(&self) -> Option<f64> {
        match &self.constants {
            Constants::Composite(c) => Some(c.radius()),
            Constants::Ridge(_) => None,
        }
    }

    pub fn passes(&self) -> bool {
        self.measured_error <= self.claimed_bound + BOUND_SLACK
            && self.inner.map_or(true, |i| i.passes())
            && (self.radius().is_none() || self.certificate.is_some())
    }

    pub const CSV_HEADER: &'static str = "target-id,N,claimed_bound,measured_error,param_count,R,pass";

    pub fn csv_row(&self) -> String {
        let mut row = format!(
            "{},{},{},{},{},",
            self.target_id,
            self.n,
            self.claimed_bound,
            self.measured_error,
            self.param_count()
        );
        if let Some(r) = self.radius() {
            let _ = write!(row, "{r}");
        }
        let _ = write!(row, ",{}", self.passes());
        row
    }
}

fn suite_for(d: usize) -> Result<Vec<EmpiricalMeasure<f64>>> {
    test_measures(d, SUITE_SEED)
}

/// `max_μ |net(μ) − target(μ)|` over a measure suite.
pub fn measure_error(
    net: &DistributionNet<f64>,
    target: &TargetFunctional,
    suite: &[EmpiricalMeasure<f64>],
) -> Result<f64> {
    let errs: Result<Vec<f64>> = suite
        .par_iter()
        .map(|mu| Ok((net.forward(mu)? - target.eval(mu)).abs()))
        .collect();
    Ok(errs?.into_iter().fold(0.0, f64::max))
}

/// `(N/B) ℒ_N({h(B t_k)})`, the outer weights of the interpolant of `h`
/// on `[−B, B]`.
fn spline_weights<H: Fn(f64) -> f64>(h: H, n: usize, b: f64) -> Result<Vec<f64>> {
    Ok(quasi_interpolant(h, Mesh::new(n, b)?).outer_weights())
}

fn tiled_layer(rows: usize, row: &[f64], bias: Vec<f64>) -> Result<Layer<f64>> {
    Layer::new(rows, row.len(), row.repeat(rows), bias)
}

fn scaled_knots(n: usize, b: f64) -> Result<Vec<f64>> {
    Ok(Mesh::new(n, b)?.scaled_knots())
}

pub fn build_ridge(target: &TargetFunctional, n: usize) -> Result<ConstructionReport> {
    build_ridge_on(target, n, &suite_for(target.dim())?)
}

/// Type-(1,2) network of width `2N+3` for `f(∫ g(ξ·x) dμ)`.
pub fn build_ridge_on(
    target: &TargetFunctional,
    n: usize,
    suite: &[EmpiricalMeasure<f64>],
) -> Result<ConstructionReport> {
    let xi = match &target.feature {
        Feature::Ridge { xi } | Feature::Laplace { xi } => xi,
        _ => {
            return Err(Error::Kind {
                expected: "ridge",
                got: target.kind().into(),
            })
        }
    };
    if n == 0 {
        return Err(Error::Parameter("N must be at least 1".into()));
    }
    let c = RidgeConstants::new(target)?;
    let m = 2 * n + 3;
    let d = xi.len();

    let l1 = tiled_layer(m, xi, scaled_knots(n, c.b_xi)?)?;
    let g_row = spline_weights(|x| target.g.eval(x), n, c.b_xi)?;
    let l2 = tiled_layer(m, &g_row, scaled_knots(n, c.b_big_g)?)?;
    let coeffs = spline_weights(|x| target.f.eval(x), n, c.b_big_g)?;
    let net = DistributionNet::new(1, vec![l1, l2], coeffs)?;

    let measured_error = measure_error(&net, target, suite)?;
    Ok(ConstructionReport {
        target_id: target.id.clone(),
        kind: target.kind(),
        n,
        claimed_bound: c.bound(n),
        measured_error,
        suite_size: suite.len(),
        free_parameters: FreeParameters::new(&[
            ("F1 feature", d),
            ("b1 knots", m),
            ("F2 row", m),
            ("b2 knots", m),
            ("c", m),
        ]),
        constants: Constants::Ridge(c),
        decomposition: None,
        inner: None,
        certificate: None,
        net,
    })
}

/// The Laplace functional `μ ↦ ∫ e^{−ξ·x} dμ(x)`.
pub fn build_laplace(xi: &[f64], n: usize) -> Result<ConstructionReport> {
    let target = TargetFunctional::laplace("laplace", xi.to_vec())?;
    build_ridge_on(&target, n, &suite_for(xi.len())?)
}

/// Decomposes the polynomial of a composite target with the target's seed.
pub fn decompose_target(target: &TargetFunctional) -> Result<RidgeDecomposition> {
    match &target.feature {
        Feature::PolyComposite { poly, seed } => decompose(poly, *seed),
        Feature::Radial { dim } => RidgeDecomposition::radial(*dim),
        _ => Err(Error::Kind {
            expected: "poly-composite or radial",
            got: target.kind().into(),
        }),
    }
}

pub fn build_poly(target: &TargetFunctional, n: usize) -> Result<ConstructionReport> {
    let dec = decompose_target(target)?;
    build_poly_on(target, &dec, n, &suite_for(target.dim())?)
}

/// Type-(2,3) network for `f(∫ g(Q(x)) dμ)` using every degree `1..=q`
/// of the decomposition.
pub fn build_poly_on(
    target: &TargetFunctional,
    dec: &RidgeDecomposition,
    n: usize,
    suite: &[EmpiricalMeasure<f64>],
) -> Result<ConstructionReport> {
    if !matches!(target.feature, Feature::PolyComposite { .. }) {
        return Err(Error::Kind {
            expected: "poly-composite",
            got: target.kind().into(),
        });
    }
    let degrees: Vec<usize> = (1..=dec.degree).collect();
    build_composite(target, dec, &degrees, n, suite)
}

pub fn build_radial(target: &TargetFunctional, n: usize) -> Result<ConstructionReport> {
    build_radial_on(target, n, &suite_for(target.dim())?)
}

/// Radial case: the standard-basis decomposition of `‖x‖²`, which only
/// needs the degree-2 spline block.
pub fn build_radial_on(
    target: &TargetFunctional,
    n: usize,
    suite: &[EmpiricalMeasure<f64>],
) -> Result<ConstructionReport> {
    let Feature::Radial { dim } = target.feature else {
        return Err(Error::Kind {
            expected: "radial",
            got: target.kind().into(),
        });
    };
    let dec = RidgeDecomposition::radial(dim)?;
    build_composite(target, &dec, &[2], n, suite)
}

/// Any target kind at resolution `n` on the default suite.
pub fn build(target: &TargetFunctional, n: usize) -> Result<ConstructionReport> {
    match target.feature {
        Feature::Ridge { .. } | Feature::Laplace { .. } => build_ridge(target, n),
        Feature::PolyComposite { .. } => build_poly(target, n),
        Feature::Radial { .. } => build_radial(target, n),
    }
}

fn build_composite(
    target: &TargetFunctional,
    dec: &RidgeDecomposition,
    degrees: &[usize],
    n: usize,
    suite: &[EmpiricalMeasure<f64>],
) -> Result<ConstructionReport> {
    if n == 0 {
        return Err(Error::Parameter("N must be at least 1".into()));
    }
    if dec.dim != target.dim() {
        return Err(Error::Shape(format!(
            "decomposition is {}-dimensional, target is {}-dimensional",
            dec.dim,
            target.dim()
        )));
    }
    let c = CompositeConstants::new(target, dec)?;
    let m = 2 * n + 3;
    let k_dirs = dec.n_directions();
    let d = dec.dim;
    let nf = n as f64;
    let knots = Mesh::<f64>::new(n, 1.0)?.knots();

    // layer 1: σ(ξ_k·x − t_j), direction-major
    let mut w1 = Vec::with_capacity(k_dirs * m * d);
    for xi in &dec.directions {
        for _ in 0..m {
            w1.extend_from_slice(xi);
        }
    }
    let l1 = Layer::new(k_dirs * m, d, w1, knots.repeat(k_dirs))?;

    // layer 2: every row is N Σ_ℓ γ_{k,ℓ} v^[ℓ]_j, so F2 h1 = Q̃(x) − Q(0)
    let mesh1 = Mesh::<f64>::new(n, 1.0)?;
    let v_rows: Vec<Vec<f64>> = degrees
        .iter()
        .map(|&l| diff_operator(&mesh1.samples(|t| t.powi(l as i32))))
        .collect::<Result<_>>()?;
    let mut row2 = Vec::with_capacity(k_dirs * m);
    for gk in &dec.gamma {
        for j in 0..m {
            row2.push(
                nf * degrees
                    .iter()
                    .zip(&v_rows)
                    .map(|(&l, v)| gk[l - 1] * v[j])
                    .sum::<f64>(),
            );
        }
    }
    let b2: Vec<f64> = knots.iter().map(|t| -dec.constant + c.b_q * t).collect();
    let l2 = tiled_layer(m, &row2, b2)?;

    let g_row = spline_weights(|x| target.g.eval(x), n, c.b_q)?;
    let l3 = tiled_layer(m, &g_row, scaled_knots(n, c.b_big_g)?)?;
    let coeffs = spline_weights(|x| target.f.eval(x), n, c.b_big_g)?;
    let net = DistributionNet::new(2, vec![l1, l2, l3], coeffs)?;

    let poly = target.polynomial()?;
    let inner = InnerCheck {
        error: inner_error(&net, &poly, dec.constant, n as u64)?,
        bound: c.inner_bound(n),
    };
    let certificate = certify_with_radius(&net, c.radius(), n).ok();
    let measured_error = measure_error(&net, target, suite)?;
    let nd = degrees.len();
    Ok(ConstructionReport {
        target_id: target.id.clone(),
        kind: target.kind(),
        n,
        claimed_bound: c.bound(n),
        measured_error,
        suite_size: suite.len(),
        free_parameters: FreeParameters::new(&[
            ("F1 directions", k_dirs * d),
            ("b1 knots", m),
            ("gamma", k_dirs * nd),
            ("V spline rows", nd * m),
            ("b2 knots", m),
            ("F3 row", m),
            ("b3 knots", m),
            ("c", m),
        ]),
        constants: Constants::Composite(c),
        decomposition: Some(dec.clone()),
        inner: Some(inner),
        certificate,
        net,
    })
}

/// `Q̃(x) = Q(0) + (F2 σ(F1 x − b1))₁` read off the first two layers.
pub fn inner_polynomial(net: &DistributionNet<f64>, q0: f64, x: &[f64]) -> f64 {
    let layers = net.layers();
    let h1 = layers[0].apply(x);
    q0 + layers[1].row(0).iter().zip(&h1).map(|(a, b)| a * b).sum::<f64>()
}

fn inner_error(net: &DistributionNet<f64>, poly: &PolynomialSpec, q0: f64, seed: u64) -> Result<f64> {
    let d = poly.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x1eaf);
    let mut worst = 0.0f64;
    for i in 0..INNER_POINTS {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let r = norm2(&v).max(1e-300);
        // a quarter of the points on the sphere, the rest uniform in the ball
        let rad = if i % 4 == 0 {
            1.0
        } else {
            rng.gen::<f64>().powf(1.0 / d as f64)
        };
        let x: Vec<f64> = v.iter().map(|c| c * rad / r).collect();
        worst = worst.max((inner_polynomial(net, q0, &x) - poly.eval(&x)).abs());
    }
    Ok(worst)
}

/// Checks a type-(2,3) net against radius `r` at resolution `n`; the error
/// names the first offending layer.
pub fn certify_with_radius(net: &DistributionNet<f64>, r: f64, n: usize) -> Result<Certificate> {
    let spec = HypothesisSpaceSpec::new(r, n)?;
    if let Some(v) = spec.violations(net)?.into_iter().next() {
        return Err(Error::Certification {
            location: v.location,
            value: v.value,
            limit: v.limit,
        });
    }
    Ok(Certificate {
        r,
        n,
        norms: net.param_norms(),
    })
}

/// Certifies a composite report with its own radius.
pub fn certify_bounds(report: &ConstructionReport) -> Result<Certificate> {
    let r = report.radius().ok_or_else(|| Error::Kind {
        expected: "poly-composite or radial",
        got: report.kind.into(),
    })?;
    certify_with_radius(&report.net, r, report.n)
}

fn unit(v: &[f64]) -> Vec<f64> {
    let r = norm2(v);
    v.iter().map(|x| x / r).collect()
}

/// Targets used by the acceptance suite and the CLI.
pub fn shipped_targets() -> Vec<TargetFunctional> {
    use ScalarFunction as S;
    let ridge = |id: &str, xi: Vec<f64>, g, f, beta| TargetFunctional::ridge(id, xi, g, f, beta);
    let poly = |d: usize, terms: &[(&[u32], f64)]| {
        PolynomialSpec::new(d, terms.iter().map(|(p, c)| (p.to_vec(), *c)))
    };
    let out: Result<Vec<TargetFunctional>> = (|| {
        Ok(vec![
            ridge(
                "ridge-sin",
                vec![0.6, 0.8],
                S::Sin { freq: 3.0, phase: 0.0 },
                S::Identity,
                1.0,
            )?,
            ridge(
                "ridge-tanh-sqrt",
                vec![1.0, 0.0],
                S::Linear { slope: 2.0 },
                S::AbsPow { exponent: 0.5 },
                0.5,
            )?,
            ridge(
                "ridge-wave-tanh",
                unit(&[0.2, -0.9]),
                S::Sin { freq: 4.0, phase: 1.0 },
                S::Tanh,
                1.0,
            )?,
            ridge(
                "ridge-exp-sin",
                vec![-0.5, -0.5],
                S::Exp { rate: 1.0 },
                S::Sin { freq: 2.0, phase: 0.0 },
                1.0,
            )?,
            TargetFunctional::laplace("laplace-unit", vec![0.6, 0.8])?,
            TargetFunctional::laplace("laplace-inner", vec![0.3, -0.2])?,
            TargetFunctional::radial("poly-radial", 3, S::Sin { freq: 1.0, phase: 0.0 }, S::Identity, 1.0)?,
            TargetFunctional::poly(
                "poly-bilinear",
                poly(2, &[(&[0, 0], 2.0), (&[1, 1], 3.0)])?.with_sup_norm(3.5)?,
                17,
                S::Tanh,
                S::Identity,
                1.0,
            )?,
            TargetFunctional::poly(
                "poly-cubic",
                poly(
                    3,
                    &[(&[3, 0, 0], 1.0), (&[1, 1, 1], -2.0), (&[0, 2, 0], 1.0), (&[0, 0, 1], 0.5)],
                )?,
                23,
                S::Sin { freq: 1.0, phase: 0.0 },
                S::AbsPow { exponent: 0.5 },
                0.5,
            )?,
            TargetFunctional::poly(
                "poly-quadratic",
                poly(2, &[(&[2, 0], 2.0), (&[1, 1], -1.0), (&[0, 1], 1.0), (&[0, 0], -1.0)])?,
                5,
                S::Identity,
                S::Identity,
                1.0,
            )?,
        ])
    })();
    out.expect("shipped targets are valid")
}

pub fn shipped_target(id: &str) -> Option<TargetFunctional> {
    shipped_targets().into_iter().find(|t| t.id == id)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ridgedecomp::n_q;

    fn ids(kind: &str) -> Vec<TargetFunctional> {
        shipped_targets().into_iter().filter(|t| t.kind() == kind).collect()
    }

    #[test]
    fn ridge_counts_and_width() {
        for t in ids("ridge") {
            for n in [1, 3, 8] {
                let r = build_ridge(&t, n).unwrap();
                assert_eq!(r.param_count(), ridge_param_formula(n, 2));
                assert_eq!(r.net.dims(), vec![2, 2 * n + 3, 2 * n + 3]);
                assert!(r.passes(), "{} N={n}: {} > {}", t.id, r.measured_error, r.claimed_bound);
            }
        }
    }

    #[test]
    fn ridge_coefficient_norm_bound() {
        for t in ids("ridge") {
            let Constants::Ridge(c) = build_ridge(&t, 4).unwrap().constants else { unreachable!() };
            for n in [2, 8, 32] {
                let r = build_ridge(&t, n).unwrap();
                let sup = r.net.param_norms().coeffs;
                assert!(sup <= 4.0 * c.f_sup * n as f64 / c.b_big_g + 1e-12);
            }
        }
    }

    #[test]
    fn linear_inner_and_outer() {
        let t = TargetFunctional::ridge(
            "lin",
            vec![0.3, -0.4],
            ScalarFunction::Identity,
            ScalarFunction::Identity,
            1.0,
        )
        .unwrap();
        for n in [4, 8, 16, 32] {
            let r = build_ridge(&t, n).unwrap();
            assert!(r.measured_error <= r.claimed_bound);
            // interpolation of linear functions is exact
            assert!(r.measured_error < 1e-12, "{}", r.measured_error);
        }
    }

    #[test]
    fn constant_outer_function() {
        let t = TargetFunctional::ridge(
            "const",
            vec![1.0],
            ScalarFunction::Sin { freq: 1.0, phase: 0.0 },
            ScalarFunction::Constant { value: 2.5 },
            1.0,
        )
        .unwrap();
        let r = build_ridge(&t, 5).unwrap();
        assert_eq!(r.claimed_bound, 0.0);
        assert!(r.measured_error < 1e-12);
    }

    #[test]
    fn kind_errors() {
        let radial = shipped_target("poly-radial").unwrap();
        assert!(matches!(build_ridge(&radial, 2), Err(Error::Kind { .. })));
        let ridge = shipped_target("ridge-sin").unwrap();
        assert!(matches!(build_poly(&ridge, 2), Err(Error::Kind { .. })));
        assert!(matches!(build_radial(&ridge, 2), Err(Error::Kind { .. })));
        assert!(matches!(certify_bounds(&build_ridge(&ridge, 2).unwrap()), Err(Error::Kind { .. })));
    }

    #[test]
    fn laplace_zero_feature_is_constant_one() {
        let r = build_laplace(&[0.0, 0.0], 4).unwrap();
        let mu = EmpiricalMeasure::from_points(&[vec![0.3, 0.1], vec![-0.9, 0.2]]).unwrap();
        assert!((r.net.forward(&mu).unwrap() - 1.0).abs() <= r.claimed_bound);
        assert!(r.measured_error < 1e-12);
    }

    #[test]
    fn laplace_one_dimensional_grid() {
        let r = build_laplace(&[1.0], 16).unwrap();
        let pts: Vec<Vec<f64>> = (0..101).map(|i| vec![-1.0 + 0.02 * i as f64]).collect();
        let mu = EmpiricalMeasure::from_points(&pts).unwrap();
        let exact = mu.integrate(|x| (-x[0]).exp());
        let bound = 8.0 * std::f64::consts::E / 16.0;
        assert!((r.claimed_bound - bound).abs() < 1e-15);
        assert!((r.net.forward(&mu).unwrap() - exact).abs() <= bound);
    }

    #[test]
    fn laplace_outside_ball_uses_general_bound() {
        let r = build_laplace(&[0.0, 2.0], 8).unwrap();
        let e2 = 2f64.exp();
        assert!((r.claimed_bound - (2.0 * e2 + 12.0 * e2) / 8.0).abs() < 1e-12);
        assert!(r.passes());
    }

    #[test]
    fn poly_count_example() {
        assert_eq!(poly_param_formula(4, 2, 2, 3), 89);
        assert_eq!(radial_param_formula(5, 3), 90);
        let t = shipped_target("poly-bilinear").unwrap();
        let r = build_poly(&t, 4).unwrap();
        assert_eq!(r.param_count(), 89);
        assert_eq!(r.net.dims(), vec![2, 3 * 11, 11, 11]);
    }

    #[test]
    fn composite_targets_pass_everything() {
        for t in ids("poly-composite").into_iter().chain(ids("radial")) {
            for n in [2, 5] {
                let r = build(&t, n).unwrap();
                assert!(r.passes(), "{} N={n}: {r:?}", t.id);
                let cert = certify_bounds(&r).unwrap();
                assert_eq!(cert.r, r.radius().unwrap());
            }
        }
    }

    #[test]
    fn poly_counts_follow_formula() {
        for t in ids("poly-composite") {
            let Feature::PolyComposite { poly, .. } = &t.feature else { unreachable!() };
            let (d, q) = (poly.dim(), poly.degree());
            let nq = n_q(d, q).unwrap() as usize;
            for n in [1, 3, 7] {
                assert_eq!(build_poly(&t, n).unwrap().param_count(), poly_param_formula(n, d, q, nq));
            }
        }
    }

    #[test]
    fn radial_structure() {
        let t = shipped_target("poly-radial").unwrap();
        let r = build_radial(&t, 5).unwrap();
        assert_eq!(r.param_count(), 90);
        assert_eq!(r.net.dims()[1], 13 * 3);
        let Constants::Composite(c) = r.constants else { unreachable!() };
        assert!(c.b_q <= 1.0 + 4.0 * 3.0);
        // Dirac: output near f(g(‖x‖²))
        let x = [0.2, -0.5, 0.4];
        let mu = EmpiricalMeasure::dirac(&x).unwrap();
        let exact = (0.04f64 + 0.25 + 0.16).sin();
        assert!((r.net.forward(&mu).unwrap() - exact).abs() <= r.claimed_bound);
    }

    #[test]
    fn degree_one_polynomial_tracks_linear_functional() {
        let xi = [0.3, -0.5, 0.1];
        let t = TargetFunctional::poly(
            "lin",
            PolynomialSpec::linear(&xi).unwrap(),
            3,
            ScalarFunction::Identity,
            ScalarFunction::Identity,
            1.0,
        )
        .unwrap();
        let r = build_poly(&t, 6).unwrap();
        assert!(r.passes());
        let mu = EmpiricalMeasure::from_points(&[vec![0.1, 0.2, 0.3], vec![-0.4, 0.0, 0.5]]).unwrap();
        let exact = mu.integrate(|x| xi.iter().zip(x).map(|(a, b)| a * b).sum());
        assert!((r.net.forward(&mu).unwrap() - exact).abs() <= r.claimed_bound);
    }

    #[test]
    fn tenth_radius_fails_certification() {
        let t = shipped_target("poly-bilinear").unwrap();
        let r = build_poly(&t, 4).unwrap();
        let err = certify_with_radius(&r.net, r.radius().unwrap() / 10.0, 4).unwrap_err();
        assert!(matches!(err, Error::Certification { .. }));
    }

    #[test]
    fn shipped_composites_are_dominated_by_outer_knot_term() {
        // ‖b3‖ = B_G(1 + 1/N) > R/2 exactly when R = 2B_G
        for t in ids("poly-composite").into_iter().chain(ids("radial")) {
            let dec = decompose_target(&t).unwrap();
            let c = CompositeConstants::new(&t, &dec).unwrap();
            assert_eq!(c.radius_terms().dominant(), "2B_G", "{}", t.id);
        }
    }

    #[test]
    fn halved_radius_can_still_certify_when_another_term_dominates() {
        // d = 2 radial: B_Q = 9 < 10, so R = 20B_G/B_Q and at N = 16 every
        // realized norm already sits below R/2
        let t = TargetFunctional::radial(
            "r2",
            2,
            ScalarFunction::Sin { freq: 1.0, phase: 0.0 },
            ScalarFunction::Identity,
            1.0,
        )
        .unwrap();
        let r = build_radial(&t, 16).unwrap();
        let radius = r.radius().unwrap();
        assert!(certify_with_radius(&r.net, radius, 16).is_ok());
        assert!(certify_with_radius(&r.net, radius / 2.0, 16).is_ok());
    }

    #[test]
    fn csv_row_shape() {
        let r = build(&shipped_target("poly-radial").unwrap(), 2).unwrap();
        let row = r.csv_row();
        assert_eq!(row.split(',').count(), ConstructionReport::CSV_HEADER.split(',').count());
        assert!(row.starts_with("poly-radial,2,") && row.ends_with(",true"));
        let ridge = build(&shipped_target("ridge-sin").unwrap(), 2).unwrap();
        assert!(ridge.csv_row().contains(",,true"));
    }

    #[test]
    fn deterministic_given_seed() {
        let t = shipped_target("poly-cubic").unwrap();
        let a = build_poly(&t, 3).unwrap();
        let b = build_poly(&t, 3).unwrap();
        assert_eq!(a.net, b.net);
        assert_eq!(a.measured_error, b.measured_error);
    }
}
