use super::{Architecture, NUM_FEATURES};
use crate::error::{Result, VfmError};

/// Conditional mean flow rate `z = f(x, phi)` for one standardized input.
pub fn forward_mean(x: &[f64], weights: &[f64], arch: &Architecture) -> Result<f64> {
    if x.len() != NUM_FEATURES {
        return Err(VfmError::dim("network input", NUM_FEATURES, x.len()));
    }
    let mut input = [0.0; NUM_FEATURES];
    input.copy_from_slice(x);
    Ok(Network::new(arch, weights)?.forward(&input))
}

/// A ReLU network bound to a weight slice, with scratch space for reverse-mode gradients.
///
/// `forward` keeps every layer's post-activation output so that a following
/// `backward` can push `dL/dz` back onto the weights. The ReLU subgradient at 0 is 0.
pub struct Network<'a> {
    arch: &'a Architecture,
    weights: &'a [f64],
    activations: Vec<Vec<f64>>,
    delta: Vec<f64>,
    delta_prev: Vec<f64>,
}

impl<'a> Network<'a> {
    pub fn new(arch: &'a Architecture, weights: &'a [f64]) -> Result<Self> {
        if weights.len() != arch.num_params() {
            return Err(VfmError::dim("network weights", arch.num_params(), weights.len()));
        }
        let activations = arch.widths().iter().map(|&w| vec![0.0; w]).collect();
        let width = arch.max_width();
        Ok(Network {
            arch,
            weights,
            activations,
            delta: vec![0.0; width],
            delta_prev: vec![0.0; width],
        })
    }

    pub fn forward(&mut self, x: &[f64; NUM_FEATURES]) -> f64 {
        self.activations[0].copy_from_slice(x);
        let last = self.arch.num_layers() - 1;
        for layer in self.arch.layers() {
            let (done, rest) = self.activations.split_at_mut(layer.index + 1);
            let input = &done[layer.index];
            let output = &mut rest[0];
            let w = &self.weights[layer.weight_offset..layer.bias_offset];
            let b = &self.weights[layer.bias_offset..layer.bias_offset + layer.n_out];
            for (j, out) in output.iter_mut().enumerate() {
                let row = &w[j * layer.n_in..(j + 1) * layer.n_in];
                let pre = row.iter().zip(input).map(|(a, b)| a * b).sum::<f64>() + b[j];
                *out = if layer.index == last { pre } else { pre.max(0.0) };
            }
        }
        self.activations[last + 1][0]
    }

    /// Accumulates `dz * dz/dphi` into `grad` for the input of the most recent `forward`.
    pub fn backward(&mut self, dz: f64, grad: &mut [f64]) {
        debug_assert_eq!(grad.len(), self.weights.len());
        let layers: Vec<_> = self.arch.layers().collect();
        self.delta[0] = dz;
        for layer in layers.iter().rev() {
            let input = &self.activations[layer.index];
            let delta = &self.delta[..layer.n_out];
            let w = &self.weights[layer.weight_offset..layer.bias_offset];
            {
                let (gw, gb) = grad[layer.weight_offset..layer.bias_offset + layer.n_out]
                    .split_at_mut(layer.n_in * layer.n_out);
                for (j, &d) in delta.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    let row = &mut gw[j * layer.n_in..(j + 1) * layer.n_in];
                    for (g, &a) in row.iter_mut().zip(input) {
                        *g += d * a;
                    }
                    gb[j] += d;
                }
            }
            if layer.index == 0 {
                break;
            }
            let prev = &mut self.delta_prev[..layer.n_in];
            prev.iter_mut().for_each(|p| *p = 0.0);
            for (j, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                let row = &w[j * layer.n_in..(j + 1) * layer.n_in];
                for (p, &wij) in prev.iter_mut().zip(row) {
                    *p += d * wij;
                }
            }
            for (p, &a) in prev.iter_mut().zip(input) {
                if a <= 0.0 {
                    *p = 0.0;
                }
            }
            std::mem::swap(&mut self.delta, &mut self.delta_prev);
        }
    }
}
