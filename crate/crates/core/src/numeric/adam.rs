use crate::error::{Error, Result};
use crate::numeric::Matrix;

/// Adam hyperparameters; `Default` gives the values from the original Adam
/// formulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Moment estimates for one parameter matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Matrix,
    pub v: Matrix,
    pub t: u64,
    pub config: AdamConfig,
}

impl AdamState {
    pub fn new(rows: usize, cols: usize, config: AdamConfig) -> Self {
        Self {
            m: Matrix::zeros(rows, cols),
            v: Matrix::zeros(rows, cols),
            t: 0,
            config,
        }
    }

    pub fn for_param(param: &Matrix, config: AdamConfig) -> Self {
        Self::new(param.rows(), param.cols(), config)
    }
}

/// One bias-corrected Adam update of `param` in place.
pub fn adam_step(param: &mut Matrix, grad: &Matrix, state: &mut AdamState) -> Result<()> {
    if param.shape() != grad.shape() || param.shape() != state.m.shape() {
        return Err(Error::Shape {
            op: "adam_step",
            left: param.shape(),
            right: grad.shape(),
        });
    }
    if grad.as_slice().iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite("adam gradient"));
    }
    let AdamConfig {
        lr,
        beta1,
        beta2,
        eps,
    } = state.config;
    state.t += 1;
    let t = state.t as f64;
    let bias1 = 1.0 - libm::pow(beta1, t);
    let bias2 = 1.0 - libm::pow(beta2, t);
    let m = state.m.as_mut_slice();
    let v = state.v.as_mut_slice();
    for (((p, &g), m), v) in param
        .as_mut_slice()
        .iter_mut()
        .zip(grad.as_slice())
        .zip(m.iter_mut())
        .zip(v.iter_mut())
    {
        *m = beta1 * *m + (1.0 - beta1) * g;
        *v = beta2 * *v + (1.0 - beta2) * g * g;
        let m_hat = *m / bias1;
        let v_hat = *v / bias2;
        *p -= lr * m_hat / (libm::sqrt(v_hat) + eps);
    }
    Ok(())
}
