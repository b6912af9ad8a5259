use crate::error::{Error, Result};
use crate::numeric::Matrix;

pub const DEFAULT_STEP: f64 = 1e-5;

/// Central-difference gradient of `f` at `param`, one entry at a time.
pub fn finite_diff_grad<F>(mut f: F, param: &Matrix, h: f64) -> Result<Matrix>
where
    F: FnMut(&Matrix) -> Result<f64>,
{
    if !(h > 0.0) {
        return Err(Error::Config(alloc::format!("finite difference step {h}")));
    }
    let mut probe = param.clone();
    let mut grad = Matrix::zeros(param.rows(), param.cols());
    for idx in 0..param.as_slice().len() {
        let orig = probe.as_slice()[idx];
        probe.as_mut_slice()[idx] = orig + h;
        let plus = f(&probe)?;
        probe.as_mut_slice()[idx] = orig - h;
        let minus = f(&probe)?;
        probe.as_mut_slice()[idx] = orig;
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::NonFinite("finite difference objective"));
        }
        grad.as_mut_slice()[idx] = (plus - minus) / (2.0 * h);
    }
    Ok(grad)
}

/// Largest relative error between two gradients. Entries where the analytic
/// value is below `abs_floor` in magnitude are compared absolutely.
pub fn max_relative_error(analytic: &Matrix, numeric: &Matrix, abs_floor: f64) -> f64 {
    analytic
        .as_slice()
        .iter()
        .zip(numeric.as_slice())
        .map(|(&a, &n)| {
            let diff = (a - n).abs();
            if a.abs() < abs_floor {
                diff
            } else {
                diff / a.abs().max(n.abs())
            }
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_has_unit_gradient() {
        let p = Matrix::from_fn(3, 2, |r, c| r as f64 - c as f64);
        let g = finite_diff_grad(|m| Ok(m.as_slice().iter().sum()), &p, DEFAULT_STEP).unwrap();
        for v in g.as_slice() {
            assert!((v - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn half_square_norm_gradient_is_identity() {
        let p = Matrix::from_fn(2, 4, |r, c| 0.3 * r as f64 - 0.7 * c as f64 + 0.1);
        let g = finite_diff_grad(|m| Ok(0.5 * m.squared_norm()), &p, DEFAULT_STEP).unwrap();
        for (a, b) in g.as_slice().iter().zip(p.as_slice()) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn non_finite_objective_is_an_error() {
        let p = Matrix::zeros(1, 1);
        assert!(finite_diff_grad(|_| Ok(f64::NAN), &p, DEFAULT_STEP).is_err());
        assert!(finite_diff_grad(|_| Ok(0.0), &p, 0.0).is_err());
    }
}
