use serde::{Deserialize, Serialize};

/// Bias-corrected Adam moments for a flat parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        AdamState {
            m: vec![0.0; len],
            v: vec![0.0; len],
            step: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// One Adam step that descends along `grads`.
///
/// # Panics
/// If `params`, `grads` and the state moments differ in length.
pub fn adam_update(params: &mut [f64], grads: &[f64], state: &mut AdamState, lr: f64) {
    assert_eq!(params.len(), grads.len(), "parameter and gradient lengths differ");
    assert_eq!(params.len(), state.m.len(), "optimizer state has the wrong length");
    state.step += 1;
    let t = state.step as i32;
    let (b1, b2) = (state.beta1, state.beta2);
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);
    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * g;
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g;
        let m_hat = state.m[i] / c1;
        let v_hat = state.v[i] / c2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + state.eps);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = vec![1.0, -2.0, 3.5];
        let mut s = AdamState::new(3);
        for _ in 0..10 {
            adam_update(&mut p, &[0.0; 3], &mut s, 0.001);
        }
        assert_eq!(p, vec![1.0, -2.0, 3.5]);
    }

    #[test]
    fn constant_gradient_step_tends_to_lr() {
        // With bias correction, m_hat = g and v_hat = g^2 exactly, so the step is
        // lr * |g| / (|g| + eps).
        let lr = 0.001;
        let g = 0.37;
        let mut p = vec![0.0];
        let mut s = AdamState::new(1);
        let mut prev = 0.0;
        for _ in 0..5000 {
            adam_update(&mut p, &[g], &mut s, lr);
            let step = prev - p[0];
            prev = p[0];
            assert!((step - lr * g / (g + 1e-8)).abs() < 1e-12);
        }
    }

    #[test]
    fn descends_a_quadratic() {
        let mut p = vec![3.0, -4.0];
        let mut s = AdamState::new(2);
        for _ in 0..20_000 {
            let g = [2.0 * p[0], 2.0 * p[1]];
            adam_update(&mut p, &g, &mut s, 0.01);
        }
        assert!(p[0].abs() < 1e-2 && p[1].abs() < 1e-2, "{p:?}");
    }
}
