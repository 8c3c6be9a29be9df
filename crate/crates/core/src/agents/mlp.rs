use crate::autodiff::Scalar;
use crate::error::{dim_mismatch, Result};
use crate::linalg::Matrix;
use crate::random::keyed_normal;

/// Map applied to the last layer's pre-activation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OutputMap {
    Linear,
    /// `u_max · tanh(z)`.
    TanhScaled(f64),
    /// `(1 + tanh(z)) / 2`, into `[0, 1]`.
    UnitInterval,
}

impl OutputMap {
    fn apply<S: Scalar>(self, z: S) -> S {
        match self {
            OutputMap::Linear => z,
            OutputMap::TanhScaled(u_max) => z.tanh() * u_max,
            OutputMap::UnitInterval => (z.tanh() + 1.0) * 0.5,
        }
    }
}

/// Fully connected tanh network stored as one flat parameter vector.
///
/// Layer `l` maps `sizes[l]` to `sizes[l + 1]`; its block holds the
/// row-major weight matrix (`out × in`) followed by the bias.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    sizes: Vec<usize>,
    params: Vec<f64>,
    pub output: OutputMap,
}

fn check_sizes(sizes: &[usize]) -> Result<()> {
    if sizes.len() < 2 || sizes.contains(&0) {
        return Err(dim_mismatch(format!("invalid layer sizes {sizes:?}")));
    }
    Ok(())
}

/// Number of parameters of a network with the given layer sizes.
pub fn mlp_param_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

/// Forward pass with parameters supplied by `weight(i)` for flat index `i`.
///
/// Hidden layers use tanh. Generic over the scalar of both parameters and
/// inputs, so the same code yields derivatives with respect to either.
pub fn mlp_forward<S: Scalar>(
    sizes: &[usize],
    weight: impl Fn(usize) -> S,
    input: &[S],
    output: OutputMap,
) -> Vec<S> {
    let layers = sizes.len() - 1;
    let mut h = input.to_vec();
    let mut offset = 0;
    for l in 0..layers {
        let (n_in, n_out) = (sizes[l], sizes[l + 1]);
        let bias = offset + n_in * n_out;
        let mut next = Vec::with_capacity(n_out);
        for j in 0..n_out {
            let row = offset + j * n_in;
            let mut acc = weight(bias + j);
            for (i, x) in h.iter().enumerate() {
                acc = acc + weight(row + i) * *x;
            }
            next.push(if l + 1 == layers {
                output.apply(acc)
            } else {
                acc.tanh()
            });
        }
        offset = bias + n_out;
        h = next;
    }
    h
}

impl MlpParams {
    /// All-zero parameters.
    pub fn zeros(sizes: &[usize], output: OutputMap) -> Result<Self> {
        check_sizes(sizes)?;
        Ok(Self {
            sizes: sizes.to_vec(),
            params: vec![0.0; mlp_param_count(sizes)],
            output,
        })
    }

    /// Weights `N(0, 1/fan_in)` keyed on `(seed, stream, index)`, zero biases.
    pub fn random(sizes: &[usize], output: OutputMap, seed: u64, stream: u64) -> Result<Self> {
        let mut mlp = Self::zeros(sizes, output)?;
        let mut offset = 0;
        for w in sizes.windows(2) {
            let scale = 1.0 / (w[0] as f64).sqrt();
            for i in offset..offset + w[0] * w[1] {
                mlp.params[i] = scale * keyed_normal(seed, stream, i as u64);
            }
            offset += w[0] * w[1] + w[1];
        }
        Ok(mlp)
    }

    /// Builds a network from `(weight, bias)` pairs.
    pub fn from_layers(layers: &[(Matrix, Vec<f64>)], output: OutputMap) -> Result<Self> {
        let Some((first, _)) = layers.first() else {
            return Err(dim_mismatch("network needs at least one layer"));
        };
        let mut sizes = vec![first.cols()];
        let mut params = Vec::new();
        for (w, b) in layers {
            if w.cols() != *sizes.last().unwrap() || b.len() != w.rows() {
                return Err(dim_mismatch(format!(
                    "layer {:?} with bias {} does not chain after width {}",
                    w.shape(),
                    b.len(),
                    sizes.last().unwrap()
                )));
            }
            params.extend_from_slice(w.data());
            params.extend_from_slice(b);
            sizes.push(w.rows());
        }
        check_sizes(&sizes)?;
        Ok(Self {
            sizes,
            params,
            output,
        })
    }

    pub fn with_params(mut self, params: Vec<f64>) -> Result<Self> {
        if params.len() != self.params.len() {
            return Err(dim_mismatch(format!(
                "network has {} parameters, got {}",
                self.params.len(),
                params.len()
            )));
        }
        self.params = params;
        Ok(self)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Forward pass with these (constant) parameters.
    pub fn forward<S: Scalar>(&self, input: &[S]) -> Vec<S> {
        mlp_forward(&self.sizes, |i| S::constant(self.params[i]), input, self.output)
    }

    /// Forward pass with externally supplied parameters of the same shape.
    pub fn forward_with<S: Scalar>(&self, params: &[S], input: &[S]) -> Vec<S> {
        mlp_forward(&self.sizes, |i| params[i], input, self.output)
    }

    /// Checked action on a plain observation.
    pub fn act(&self, obs: &[f64]) -> Result<Vec<f64>> {
        if obs.len() != self.input_dim() {
            return Err(dim_mismatch(format!(
                "network takes {} inputs, got {}",
                self.input_dim(),
                obs.len()
            )));
        }
        Ok(self.forward(obs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::{gradient_check, DiffFunction};

    struct ParamLoss<'a> {
        mlp: &'a MlpParams,
        input: Vec<f64>,
    }

    impl DiffFunction for ParamLoss<'_> {
        fn input_dim(&self) -> usize {
            self.mlp.param_count()
        }

        fn output_dim(&self) -> usize {
            1
        }

        fn eval<S: Scalar>(&self, p: &[S]) -> Vec<S> {
            let x: Vec<S> = self.input.iter().map(|v| S::constant(*v)).collect();
            let out = self.mlp.forward_with(p, &x);
            let mut s = S::zero();
            for (k, o) in out.into_iter().enumerate() {
                s = s + o * (k as f64 + 1.0);
            }
            vec![s]
        }
    }

    #[test]
    fn zero_params_give_zero() {
        let mlp = MlpParams::zeros(&[3, 4, 2], OutputMap::Linear).unwrap();
        assert_eq!(mlp.act(&[1.0, -2.0, 3.0]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(mlp.param_count(), 3 * 4 + 4 + 4 * 2 + 2);
    }

    #[test]
    fn identity_layer() {
        let mlp = MlpParams::from_layers(&[(Matrix::identity(3), vec![0.0; 3])], OutputMap::Linear).unwrap();
        assert_eq!(mlp.act(&[0.5, -1.5, 2.0]).unwrap(), vec![0.5, -1.5, 2.0]);
    }

    #[test]
    fn layers_must_chain() {
        let bad = [
            (Matrix::zeros(4, 3), vec![0.0; 4]),
            (Matrix::zeros(2, 5), vec![0.0; 2]),
        ];
        assert!(MlpParams::from_layers(&bad, OutputMap::Linear).is_err());
        let mlp = MlpParams::zeros(&[3, 2], OutputMap::Linear).unwrap();
        assert!(mlp.act(&[1.0]).is_err());
    }

    #[test]
    fn output_maps() {
        let layer = [(Matrix::from_rows(&[[1.0]]), vec![0.0])];
        let tanh = MlpParams::from_layers(&layer, OutputMap::TanhScaled(10.0)).unwrap();
        assert!((tanh.act(&[100.0]).unwrap()[0] - 10.0).abs() < 1e-12);
        let unit = MlpParams::from_layers(&layer, OutputMap::UnitInterval).unwrap();
        assert_eq!(unit.act(&[0.0]).unwrap(), vec![0.5]);
    }

    #[test]
    fn param_gradient_matches_fd() {
        for output in [OutputMap::Linear, OutputMap::TanhScaled(2.0), OutputMap::UnitInterval] {
            let mlp = MlpParams::random(&[3, 5, 4, 2], output, 7, 0).unwrap();
            let mut p = mlp.params().to_vec();
            for (i, v) in p.iter_mut().enumerate() {
                *v += 0.1 * keyed_normal(8, 0, i as u64);
            }
            let mlp = mlp.with_params(p.clone()).unwrap();
            let f = ParamLoss {
                mlp: &mlp,
                input: vec![0.3, -0.7, 1.1],
            };
            let check = gradient_check(&f, &p, 1e-5, 1e-4);
            assert!(check.passed, "{output:?}: {}", check.max_rel_error);
        }
    }
}
