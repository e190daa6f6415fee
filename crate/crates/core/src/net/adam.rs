use crate::error::{dim_mismatch, Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig<T> {
    pub lr: T,
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
}

impl<T: Real> AdamConfig<T> {
    pub fn with_lr(lr: T) -> Self {
        Self { lr, beta1: T::of(0.9), beta2: T::of(0.999), eps: T::of(1e-8) }
    }

    fn validate(&self) -> Result<()> {
        let valid_beta = |b: T| b >= T::zero() && b < T::one();
        if !(self.lr > T::zero()) || !valid_beta(self.beta1) || !valid_beta(self.beta2) {
            return Err(Error::Config(format!("invalid Adam settings {self:?}")));
        }
        Ok(())
    }
}

/// First and second moment estimates for one parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub m: Vec<T>,
    pub v: Vec<T>,
    pub t: u64,
}

impl<T: Real> AdamState<T> {
    pub fn new(len: usize) -> Self {
        Self { m: vec![T::zero(); len], v: vec![T::zero(); len], t: 0 }
    }
}

/// One bias-corrected Adam step, applied in place.
pub fn adam_step<T: Real>(
    params: &mut [T],
    grads: &[T],
    state: &mut AdamState<T>,
    cfg: &AdamConfig<T>,
) -> Result<()> {
    cfg.validate()?;
    if grads.len() != params.len() {
        return Err(dim_mismatch("Adam gradient", params.len(), grads.len()));
    }
    if state.m.len() != params.len() || state.v.len() != params.len() {
        return Err(dim_mismatch("Adam moments", params.len(), state.m.len()));
    }
    state.t += 1;
    let t = state.t as i32;
    let one = T::one();
    let bc1 = one - cfg.beta1.powi(t);
    let bc2 = one - cfg.beta2.powi(t);
    for (((p, &g), m), v) in params.iter_mut().zip(grads).zip(&mut state.m).zip(&mut state.v) {
        *m = cfg.beta1 * *m + (one - cfg.beta1) * g;
        *v = cfg.beta2 * *v + (one - cfg.beta2) * g * g;
        let m_hat = *m / bc1;
        let v_hat = *v / bc2;
        *p -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_lr_against_the_sign() {
        let cfg = AdamConfig { lr: 0.01, beta1: 0.9, beta2: 0.999, eps: 1e-14 };
        for g in [3.0, -0.002] {
            let mut p = vec![1.0];
            let mut st = AdamState::new(1);
            adam_step(&mut p, &[g], &mut st, &cfg).unwrap();
            let delta: f64 = p[0] - 1.0;
            assert!((delta + 0.01 * f64::signum(g)).abs() < 1e-10, "delta {delta}");
            assert_eq!(st.t, 1);
        }
    }

    #[test]
    fn zero_gradient_leaves_params_unchanged() {
        let cfg = AdamConfig::with_lr(0.1);
        let mut p = vec![0.5, -2.0];
        let mut st = AdamState::new(2);
        adam_step(&mut p, &[0.0, 0.0], &mut st, &cfg).unwrap();
        assert_eq!(p, vec![0.5, -2.0]);
        assert_eq!(st.t, 1);
    }

    /// Scalar Adam written out longhand for f(w) = w^2.
    fn reference_trace(w0: f64, lr: f64, steps: usize) -> Vec<f64> {
        let (b1, b2, eps) = (0.9f64, 0.999f64, 1e-8);
        let (mut w, mut m, mut v) = (w0, 0.0, 0.0);
        let mut out = vec![];
        for k in 1..=steps {
            let g = 2.0 * w;
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            let mh = m / (1.0 - b1.powi(k as i32));
            let vh = v / (1.0 - b2.powi(k as i32));
            w -= lr * mh / (vh.sqrt() + eps);
            out.push(w);
        }
        out
    }

    #[test]
    fn quadratic_descent_matches_reference_trace() {
        let expected = reference_trace(1.0, 0.1, 3);
        let cfg = AdamConfig::with_lr(0.1);
        let mut w = vec![1.0];
        let mut st = AdamState::new(1);
        let mut prev = 1.0;
        for e in expected {
            let g = 2.0 * w[0];
            adam_step(&mut w, &[g], &mut st, &cfg).unwrap();
            assert!(w[0] < prev);
            assert!((w[0] - e).abs() < 1e-15);
            prev = w[0];
        }
    }

    #[test]
    fn length_mismatch_is_an_input_error() {
        let mut p = vec![0.0; 3];
        let mut st = AdamState::new(3);
        let r = adam_step(&mut p, &[1.0], &mut st, &AdamConfig::with_lr(0.1));
        assert!(matches!(r, Err(Error::Input(_))));
    }
}
