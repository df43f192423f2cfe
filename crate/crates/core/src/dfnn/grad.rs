use super::DistributionNet;
use crate::error::Result;
use crate::measure::EmpiricalMeasure;
use crate::scalar::Scalar;

/// Parameter-shaped buffer for derivatives of a scalar with respect to a
/// network's weights, biases and output coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient<T> {
    pub weights: Vec<Vec<T>>,
    pub biases: Vec<Vec<T>>,
    pub coeffs: Vec<T>,
}

impl<T: Scalar> Gradient<T> {
    pub fn zeros_like(net: &DistributionNet<T>) -> Self {
        Self {
            weights: net.layers.iter().map(|l| vec![T::zero(); l.weights.len()]).collect(),
            biases: net.layers.iter().map(|l| vec![T::zero(); l.bias.len()]).collect(),
            coeffs: vec![T::zero(); net.coeffs.len()],
        }
    }

    fn buffers(&self) -> impl Iterator<Item = &Vec<T>> {
        self.weights.iter().chain(&self.biases).chain(std::iter::once(&self.coeffs))
    }

    fn buffers_mut(&mut self) -> impl Iterator<Item = &mut Vec<T>> {
        self.weights
            .iter_mut()
            .chain(self.biases.iter_mut())
            .chain(std::iter::once(&mut self.coeffs))
    }

    /// `self += s · other`.
    pub fn add_scaled(&mut self, s: T, other: &Self) {
        for (a, b) in self.buffers_mut().zip(other.buffers()) {
            for (x, &y) in a.iter_mut().zip(b) {
                *x = *x + s * y;
            }
        }
    }

    pub fn scale(&mut self, s: T) {
        for buf in self.buffers_mut() {
            buf.iter_mut().for_each(|v| *v = *v * s);
        }
    }

    pub fn norm_sq(&self) -> T {
        self.buffers().flat_map(|b| b.iter()).map(|&v| v * v).sum()
    }
}

impl<T: Scalar> DistributionNet<T> {
    /// Adds `scale · ∂f(μ)/∂θ` to `grad` by reverse-mode accumulation and
    /// returns `f(μ)`.
    ///
    /// The averaging step distributes the upstream derivative equally over
    /// the atoms. ReLU's derivative at zero is taken as zero.
    pub fn accumulate_gradient(
        &self,
        mu: &EmpiricalMeasure<T>,
        scale: T,
        grad: &mut Gradient<T>,
    ) -> Result<T> {
        self.check_input(mu)?;
        let j1 = self.realizing_level;
        let depth = self.layers.len();
        // same canonical support as `forward`, so the value returned here
        // matches it bitwise
        let (support, total) = mu.support();
        let total = T::from_usize_lossy(total);

        // per-atom branch: activations[a][j] is h_j at atom a (h_0 = x)
        let mut per_atom: Vec<(T, Vec<Vec<T>>)> = Vec::with_capacity(support.len());
        let avg_width = if j1 == 0 { self.input_dim() } else { self.layers[j1 - 1].rows };
        let mut avg = vec![T::zero(); avg_width];
        for &(i, count) in support {
            let k = T::from_usize_lossy(count);
            let mut acts = Vec::with_capacity(j1 + 1);
            acts.push(mu.atom(i).to_vec());
            for layer in &self.layers[..j1] {
                let next = layer.apply(acts.last().unwrap());
                acts.push(next);
            }
            for (s, &v) in avg.iter_mut().zip(acts.last().unwrap()) {
                *s = *s + k * v;
            }
            per_atom.push((k / total, acts));
        }
        avg.iter_mut().for_each(|v| *v = *v / total);

        // shared head
        let mut head = Vec::with_capacity(depth - j1 + 1);
        head.push(avg);
        for layer in &self.layers[j1..] {
            let next = layer.apply(head.last().unwrap());
            head.push(next);
        }
        let top = head.last().unwrap();
        let out: T = self.coeffs.iter().zip(top).map(|(&c, &v)| c * v).sum();

        for (g, &v) in grad.coeffs.iter_mut().zip(top) {
            *g = *g + scale * v;
        }
        let mut upstream: Vec<T> = self.coeffs.iter().map(|&c| scale * c).collect();
        for j in (j1..depth).rev() {
            upstream = self.backprop_layer(j, &head[j - j1], &head[j - j1 + 1], &upstream, grad);
        }

        // upstream is now ∂/∂(average); each distinct atom receives its mass
        for (w, acts) in &per_atom {
            let mut up: Vec<T> = upstream.iter().map(|&v| v * *w).collect();
            for j in (0..j1).rev() {
                up = self.backprop_layer(j, &acts[j], &acts[j + 1], &up, grad);
            }
        }
        Ok(out)
    }

    /// Layer `j` (0-based) mapped `input → output = σ(F input − b)`;
    /// accumulates its parameter derivatives and returns `∂/∂input`.
    fn backprop_layer(
        &self,
        j: usize,
        input: &[T],
        output: &[T],
        upstream: &[T],
        grad: &mut Gradient<T>,
    ) -> Vec<T> {
        let layer = &self.layers[j];
        let mut down = vec![T::zero(); layer.cols];
        let gw = &mut grad.weights[j];
        let gb = &mut grad.biases[j];
        for i in 0..layer.rows {
            // σ(z) > 0 exactly when z > 0
            if !(output[i] > T::zero()) {
                continue;
            }
            let dz = upstream[i];
            if dz == T::zero() {
                continue;
            }
            gb[i] = gb[i] - dz;
            let row = layer.row(i);
            let grow = &mut gw[i * layer.cols..(i + 1) * layer.cols];
            for k in 0..layer.cols {
                grow[k] = grow[k] + dz * input[k];
                down[k] = down[k] + dz * row[k];
            }
        }
        down
    }
}

#[cfg(test)]
mod tests {
    use super::super::Layer;
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_net(rng: &mut ChaCha8Rng, j1: usize, dims: &[usize]) -> DistributionNet<f64> {
        let layers = dims
            .windows(2)
            .map(|w| {
                Layer::new(
                    w[1],
                    w[0],
                    (0..w[0] * w[1]).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                    (0..w[1]).map(|_| rng.gen_range(-0.3..0.3)).collect(),
                )
                .unwrap()
            })
            .collect();
        let coeffs = (0..dims[dims.len() - 1]).map(|_| rng.gen_range(-1.0..1.0)).collect();
        DistributionNet::new(j1, layers, coeffs).unwrap()
    }

    fn perturb(net: &DistributionNet<f64>, which: (usize, usize, usize), h: f64) -> DistributionNet<f64> {
        let mut out = net.clone();
        match which {
            (0, j, k) => out.layers_mut()[j].weights_mut()[k] += h,
            (1, j, k) => out.layers_mut()[j].bias_mut()[k] += h,
            (_, _, k) => out.coeffs_mut()[k] += h,
        }
        out
    }

    #[test]
    fn matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for j1 in 0..=3 {
            let net = random_net(&mut rng, j1, &[2, 4, 3, 3]);
            let mu = EmpiricalMeasure::new(
                2,
                (0..10).map(|_| rng.gen_range(-0.7..0.7)).collect(),
            )
            .unwrap();
            let mut grad = Gradient::zeros_like(&net);
            let out = net.accumulate_gradient(&mu, 1.0, &mut grad).unwrap();
            assert_eq!(out, net.forward(&mu).unwrap());
            let h = 1e-6;
            let mut slots = Vec::new();
            for (j, l) in net.layers().iter().enumerate() {
                slots.extend((0..l.weights().len()).map(|k| (0, j, k)));
                slots.extend((0..l.bias().len()).map(|k| (1, j, k)));
            }
            slots.extend((0..net.coeffs().len()).map(|k| (2, 0, k)));
            for slot in slots {
                let fd = (perturb(&net, slot, h).forward(&mu).unwrap()
                    - perturb(&net, slot, -h).forward(&mu).unwrap())
                    / (2.0 * h);
                let an = match slot {
                    (0, j, k) => grad.weights[j][k],
                    (1, j, k) => grad.biases[j][k],
                    (_, _, k) => grad.coeffs[k],
                };
                assert!((fd - an).abs() < 1e-6, "J1={j1} slot {slot:?}: fd {fd} vs {an}");
            }
        }
    }

    #[test]
    fn buffer_arithmetic() {
        let net = DistributionNet::<f64>::zeros(1, &[1, 2]).unwrap();
        let mut a = Gradient::zeros_like(&net);
        a.coeffs = vec![1.0, 2.0];
        let mut b = a.clone();
        b.add_scaled(2.0, &a);
        assert_eq!(b.coeffs, vec![3.0, 6.0]);
        b.scale(0.5);
        assert_eq!(b.norm_sq(), 1.5 * 1.5 + 9.0);
    }
}
