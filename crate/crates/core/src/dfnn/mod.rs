//! Fully connected ReLU networks that take an empirical measure as input.
//!
//! Layers `1..=J₁` run on every atom separately; their outputs are averaged
//! (integrated against the measure), and layers `J₁+1..=J` run on the
//! average. The output is `c · h^(J)`.

mod grad;
mod io;
mod space;

use crate::error::{Error, Result};
use crate::measure::EmpiricalMeasure;
use crate::scalar::Scalar;

pub use grad::Gradient;
pub use io::NetDocument;
pub use space::{project_m, HypothesisSpaceSpec, ParamNorms, Violation};

/// Widest layer accepted.
pub const MAX_WIDTH: usize = 4096;

/// `h ↦ σ(F h − b)` with a row-major `rows × cols` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer<T> {
    rows: usize,
    cols: usize,
    weights: Vec<T>,
    bias: Vec<T>,
}

impl<T: Scalar> Layer<T> {
    pub fn new(rows: usize, cols: usize, weights: Vec<T>, bias: Vec<T>) -> Result<Self> {
        if rows == 0 || cols == 0 || rows > MAX_WIDTH || cols > MAX_WIDTH {
            return Err(Error::Capacity(format!(
                "layer {rows}×{cols}: widths must be in 1..={MAX_WIDTH}"
            )));
        }
        if weights.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} weights for a {rows}×{cols} layer",
                weights.len()
            )));
        }
        if bias.len() != rows {
            return Err(Error::Shape(format!(
                "bias has length {}, layer has {rows} rows",
                bias.len()
            )));
        }
        Ok(Self {
            rows,
            cols,
            weights,
            bias,
        })
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Self::new(rows, cols, vec![T::zero(); rows * cols], vec![T::zero(); rows])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [T] {
        &mut self.weights
    }

    pub fn bias(&self) -> &[T] {
        &self.bias
    }

    pub fn bias_mut(&mut self) -> &mut [T] {
        &mut self.bias
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.weights[i * self.cols..(i + 1) * self.cols]
    }

    /// Pre-activation `F h − b` into `out`.
    #[inline]
    pub(crate) fn affine_into(&self, h: &[T], out: &mut [T]) {
        for ((o, row), &b) in out
            .iter_mut()
            .zip(self.weights.chunks_exact(self.cols))
            .zip(&self.bias)
        {
            let mut acc = T::zero();
            for (&w, &x) in row.iter().zip(h) {
                acc = acc + w * x;
            }
            *o = acc - b;
        }
    }

    /// `σ(F h − b)`.
    pub fn apply(&self, h: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.rows];
        self.affine_into(h, &mut out);
        out.iter_mut().for_each(|v| *v = v.relu());
        out
    }

    fn cast<U: Scalar>(&self) -> Layer<U> {
        Layer {
            rows: self.rows,
            cols: self.cols,
            weights: self.weights.iter().map(|v| U::lit(v.as_f64())).collect(),
            bias: self.bias.iter().map(|v| U::lit(v.as_f64())).collect(),
        }
    }
}

/// Network of type `(J₁, J)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionNet<T> {
    realizing_level: usize,
    layers: Vec<Layer<T>>,
    coeffs: Vec<T>,
}

impl<T: Scalar> DistributionNet<T> {
    pub fn new(realizing_level: usize, layers: Vec<Layer<T>>, coeffs: Vec<T>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Shape("network needs at least one layer".into()));
        }
        if realizing_level > layers.len() {
            return Err(Error::Shape(format!(
                "realizing level {realizing_level} exceeds depth {}",
                layers.len()
            )));
        }
        if layers[0].cols > crate::measure::MAX_DIM {
            return Err(Error::Shape(format!(
                "input dimension {} exceeds {}",
                layers[0].cols,
                crate::measure::MAX_DIM
            )));
        }
        for (j, pair) in layers.windows(2).enumerate() {
            if pair[1].cols != pair[0].rows {
                return Err(Error::Shape(format!(
                    "layer {} expects width {}, layer {} produces {}",
                    j + 2,
                    pair[1].cols,
                    j + 1,
                    pair[0].rows
                )));
            }
        }
        let last = layers[layers.len() - 1].rows;
        if coeffs.len() != last {
            return Err(Error::Shape(format!(
                "{} output coefficients for final width {last}",
                coeffs.len()
            )));
        }
        Ok(Self {
            realizing_level,
            layers,
            coeffs,
        })
    }

    /// All-zero network with widths `dims = [d₀, d₁, …, d_J]`.
    pub fn zeros(realizing_level: usize, dims: &[usize]) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::Shape("need input and at least one layer width".into()));
        }
        let layers = dims
            .windows(2)
            .map(|w| Layer::zeros(w[1], w[0]))
            .collect::<Result<Vec<_>>>()?;
        Self::new(realizing_level, layers, vec![T::zero(); dims[dims.len() - 1]])
    }

    /// `J`.
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    /// `J₁`.
    pub fn realizing_level(&self) -> usize {
        self.realizing_level
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].cols
    }

    /// `[d₀, d₁, …, d_J]`.
    pub fn dims(&self) -> Vec<usize> {
        std::iter::once(self.input_dim())
            .chain(self.layers.iter().map(|l| l.rows))
            .collect()
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer<T>] {
        &mut self.layers
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [T] {
        &mut self.coeffs
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum::<usize>()
            + self.coeffs.len()
    }

    /// Output of the per-atom branch (layers `1..=J₁`) at one point.
    fn atom_features(&self, x: &[T]) -> Vec<T> {
        let mut h = x.to_vec();
        for layer in &self.layers[..self.realizing_level] {
            h = layer.apply(&h);
        }
        h
    }

    fn head(&self, mut h: Vec<T>) -> T {
        for layer in &self.layers[self.realizing_level..] {
            h = layer.apply(&h);
        }
        self.coeffs.iter().zip(&h).map(|(&c, &v)| c * v).sum()
    }

    /// `h^(J₁)(μ) = ∫ σ(…σ(F^(1)x − b^(1))…) dμ(x)`.
    pub fn integrated_features(&self, mu: &EmpiricalMeasure<T>) -> Result<Vec<T>> {
        self.check_input(mu)?;
        let width = if self.realizing_level == 0 {
            self.input_dim()
        } else {
            self.layers[self.realizing_level - 1].rows
        };
        // summing over the canonical support makes the result bitwise
        // invariant to atom order and uniform duplication
        let (support, total) = mu.support();
        let mut sum = vec![T::zero(); width];
        for &(i, count) in support {
            let k = T::from_usize_lossy(count);
            for (s, v) in sum.iter_mut().zip(self.atom_features(mu.atom(i))) {
                *s = *s + k * v;
            }
        }
        let n = T::from_usize_lossy(total);
        sum.iter_mut().for_each(|v| *v = *v / n);
        Ok(sum)
    }

    /// Network output on an empirical measure.
    pub fn forward(&self, mu: &EmpiricalMeasure<T>) -> Result<T> {
        Ok(self.head(self.integrated_features(mu)?))
    }

    /// The same weights read as a plain vector network, no averaging step.
    /// Agrees exactly with `forward` on a Dirac measure.
    pub fn forward_vector(&self, x: &[T]) -> Result<T> {
        if x.len() != self.input_dim() {
            return Err(Error::Shape(format!(
                "input has dimension {}, network expects {}",
                x.len(),
                self.input_dim()
            )));
        }
        let mut h = x.to_vec();
        for layer in &self.layers {
            h = layer.apply(&h);
        }
        Ok(self.coeffs.iter().zip(&h).map(|(&c, &v)| c * v).sum())
    }

    fn check_input(&self, mu: &EmpiricalMeasure<T>) -> Result<()> {
        if mu.dim() != self.input_dim() {
            return Err(Error::Shape(format!(
                "measure has dimension {}, network expects {}",
                mu.dim(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    pub fn cast<U: Scalar>(&self) -> DistributionNet<U> {
        DistributionNet {
            realizing_level: self.realizing_level,
            layers: self.layers.iter().map(Layer::cast).collect(),
            coeffs: self.coeffs.iter().map(|v| U::lit(v.as_f64())).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn identity_net() -> DistributionNet<f64> {
        let l1 = Layer::new(1, 1, vec![1.0], vec![0.0]).unwrap();
        let l2 = Layer::new(1, 1, vec![1.0], vec![0.0]).unwrap();
        DistributionNet::new(1, vec![l1, l2], vec![1.0]).unwrap()
    }

    #[test]
    fn hand_evaluated_average() {
        let mu = EmpiricalMeasure::from_points(&[vec![1.0], vec![-1.0]]).unwrap();
        assert_eq!(identity_net().forward(&mu).unwrap(), 0.5);
    }

    #[test]
    fn dirac_matches_vector_network() {
        let l1 = Layer::new(3, 2, vec![0.5, -1.0, 2.0, 0.25, -0.3, 0.7], vec![0.1, -0.2, 0.0]).unwrap();
        let l2 = Layer::new(2, 3, vec![1.0, -1.0, 0.5, 0.2, 0.3, -0.4], vec![0.0, 0.05]).unwrap();
        let net = DistributionNet::new(1, vec![l1, l2], vec![1.5, -2.0]).unwrap();
        for x in [[0.3, -0.4], [0.0, 0.0], [-0.6, 0.8]] {
            let mu = EmpiricalMeasure::dirac(&x).unwrap();
            assert_eq!(net.forward(&mu).unwrap(), net.forward_vector(&x).unwrap());
        }
    }

    #[test]
    fn shape_errors() {
        let net = identity_net();
        let mu = EmpiricalMeasure::dirac(&[0.1, 0.2]).unwrap();
        assert!(matches!(net.forward(&mu), Err(Error::Shape(_))));
        let l1 = Layer::<f64>::zeros(2, 1).unwrap();
        let l2 = Layer::<f64>::zeros(1, 3).unwrap();
        assert!(DistributionNet::new(1, vec![l1.clone(), l2], vec![0.0]).is_err());
        assert!(DistributionNet::new(3, vec![l1.clone()], vec![0.0, 0.0]).is_err());
        assert!(DistributionNet::new(1, vec![l1], vec![0.0]).is_err());
        assert!(matches!(Layer::<f64>::zeros(MAX_WIDTH + 1, 1), Err(Error::Capacity(_))));
    }

    #[test]
    fn realizing_level_at_depth_and_zero() {
        // J₁ = J averages the last hidden layer; J₁ = 0 averages the input
        let l1 = Layer::new(1, 1, vec![1.0], vec![0.0]).unwrap();
        let at_depth = DistributionNet::new(1, vec![l1.clone()], vec![2.0]).unwrap();
        let at_input = DistributionNet::new(0, vec![l1], vec![2.0]).unwrap();
        let mu = EmpiricalMeasure::from_points(&[vec![1.0], vec![-1.0]]).unwrap();
        assert_eq!(at_depth.forward(&mu).unwrap(), 1.0);
        assert_eq!(at_input.forward(&mu).unwrap(), 0.0);
    }

    #[test]
    fn dims_and_counts() {
        let net = DistributionNet::<f64>::zeros(2, &[2, 5, 3, 3]).unwrap();
        assert_eq!(net.dims(), vec![2, 5, 3, 3]);
        assert_eq!(net.depth(), 3);
        assert_eq!(net.param_count(), 10 + 5 + 15 + 3 + 9 + 3 + 3);
        let single: DistributionNet<f32> = net.cast();
        assert_eq!(single.dims(), net.dims());
    }

    fn layer_strategy(rows: usize, cols: usize) -> impl Strategy<Value = Layer<f64>> {
        (prop::collection::vec(-2.0f64..2.0, rows * cols), prop::collection::vec(-1.0f64..1.0, rows))
            .prop_map(move |(w, b)| Layer::new(rows, cols, w, b).unwrap())
    }

    fn net_strategy() -> impl Strategy<Value = DistributionNet<f64>> {
        (layer_strategy(4, 2), layer_strategy(3, 4), layer_strategy(5, 3), prop::collection::vec(-3.0f64..3.0, 5))
            .prop_map(|(a, b, c, coeffs)| DistributionNet::new(2, vec![a, b, c], coeffs).unwrap())
    }

    proptest! {
        #[test]
        fn forward_is_exactly_invariant(
            net in net_strategy(),
            pts in prop::collection::vec(prop::collection::vec(-0.7f64..0.7, 2), 1..9),
            k in 1usize..5,
            rot in 0usize..9,
        ) {
            let mu = EmpiricalMeasure::from_points(&pts).unwrap();
            let f = net.forward(&mu).unwrap();
            let mut perm: Vec<usize> = (0..mu.len()).rev().collect();
            perm.rotate_left(rot % mu.len());
            prop_assert_eq!(net.forward(&mu.permuted(&perm).unwrap()).unwrap(), f);
            prop_assert_eq!(net.forward(&mu.repeated(k)).unwrap(), f);
            let x = mu.atom(0);
            prop_assert_eq!(net.forward(&EmpiricalMeasure::dirac(x).unwrap()).unwrap(), net.forward_vector(x).unwrap());
        }
    }
}
