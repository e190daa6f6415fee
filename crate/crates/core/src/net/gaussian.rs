//! Tanh-squashed diagonal Gaussian policy head with reparameterized sampling.

use crate::scalar::Real;

pub const LOG_STD_MIN: f64 = -20.0;
pub const LOG_STD_MAX: f64 = 2.0;

/// Per-dimension box bounds of an action space.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionBounds<T> {
    pub low: Vec<T>,
    pub high: Vec<T>,
}

impl<T: Real> ActionBounds<T> {
    pub fn new(low: Vec<T>, high: Vec<T>) -> Self {
        assert_eq!(low.len(), high.len(), "bounds of unequal length");
        assert!(low.iter().zip(&high).all(|(l, h)| l < h), "empty action interval");
        Self { low, high }
    }

    pub fn symmetric(dim: usize, limit: T) -> Self {
        Self::new(vec![-limit; dim], vec![limit; dim])
    }

    pub fn dim(&self) -> usize {
        self.low.len()
    }

    pub fn center(&self, k: usize) -> T {
        (self.high[k] + self.low[k]) / T::of(2.0)
    }

    pub fn half_range(&self, k: usize) -> T {
        (self.high[k] - self.low[k]) / T::of(2.0)
    }

    /// Maps `y` in `[-1, 1]` affinely onto `[low, high]`.
    pub fn scale(&self, k: usize, y: T) -> T {
        self.center(k) + self.half_range(k) * y
    }

    pub fn clip(&self, action: &mut [T]) {
        for (k, a) in action.iter_mut().enumerate() {
            *a = a.max(self.low[k]).min(self.high[k]);
        }
    }

    pub fn contains(&self, action: &[T]) -> bool {
        action.len() == self.dim()
            && action.iter().enumerate().all(|(k, &a)| a >= self.low[k] && a <= self.high[k])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianHeadOutput<T> {
    pub mean: Vec<T>,
    pub log_std: Vec<T>,
}

impl<T: Real> GaussianHeadOutput<T> {
    /// Splits a raw network output `[mean.., log_std..]` and clamps the log
    /// standard deviations. The returned mask marks entries that were clamped
    /// (their gradient is zero).
    pub fn from_raw(raw: &[T]) -> (Self, Vec<bool>) {
        assert!(raw.len() % 2 == 0, "Gaussian head needs an even number of outputs");
        let d = raw.len() / 2;
        let (lo, hi) = (T::of(LOG_STD_MIN), T::of(LOG_STD_MAX));
        let mut clamped = Vec::with_capacity(d);
        let log_std = raw[d..]
            .iter()
            .map(|&v| {
                clamped.push(v < lo || v > hi);
                v.max(lo).min(hi)
            })
            .collect();
        (Self { mean: raw[..d].to_vec(), log_std }, clamped)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// `log(1 - tanh(u)^2)` without cancellation for large `|u|`.
pub fn log_one_minus_tanh_sq<T: Real>(u: T) -> T {
    let two = T::of(2.0);
    let x = -two * u;
    let softplus = x.max(T::zero()) + (-x.abs()).exp().ln_1p();
    two * (T::of(std::f64::consts::LN_2) - u - softplus)
}

/// A reparameterized draw together with what is needed to differentiate it.
#[derive(Debug, Clone, PartialEq)]
pub struct SquashedSample<T> {
    pub action: Vec<T>,
    pub log_prob: T,
    squashed: Vec<T>,
    std: Vec<T>,
    noise: Vec<T>,
    half_range: Vec<T>,
}

/// `u = mean + exp(log_std) * noise`, `action = scale(tanh(u))`, and the
/// log-density of `action` including the tanh and affine change of variables.
pub fn gaussian_sample<T: Real>(
    head: &GaussianHeadOutput<T>,
    noise: &[T],
    bounds: &ActionBounds<T>,
) -> SquashedSample<T> {
    let d = head.dim();
    assert_eq!(noise.len(), d, "noise dimension");
    assert_eq!(bounds.dim(), d, "bounds dimension");
    let half_log_two_pi = T::of(0.5 * (2.0 * std::f64::consts::PI).ln());
    let half = T::of(0.5);
    let mut action = Vec::with_capacity(d);
    let mut squashed = Vec::with_capacity(d);
    let mut std = Vec::with_capacity(d);
    let mut half_range = Vec::with_capacity(d);
    let mut log_prob = T::zero();
    for k in 0..d {
        let s = head.log_std[k].exp();
        let u = head.mean[k] + s * noise[k];
        let y = u.tanh();
        let h = bounds.half_range(k);
        log_prob += -half * noise[k] * noise[k] - head.log_std[k] - half_log_two_pi;
        log_prob -= h.ln() + log_one_minus_tanh_sq(u);
        action.push(bounds.center(k) + h * y);
        squashed.push(y);
        std.push(s);
        half_range.push(h);
    }
    SquashedSample { action, log_prob, squashed, std, noise: noise.to_vec(), half_range }
}

impl<T: Real> SquashedSample<T> {
    /// Chain rule from `dL/d action` and `dL/d log_prob` back to the head's
    /// mean and (clamped) log standard deviation, noise held fixed.
    pub fn backprop(&self, d_action: &[T], d_log_prob: T) -> (Vec<T>, Vec<T>) {
        let two = T::of(2.0);
        let mut d_mean = Vec::with_capacity(self.action.len());
        let mut d_log_std = Vec::with_capacity(self.action.len());
        for k in 0..self.action.len() {
            let y = self.squashed[k];
            // d action / d u and d log_prob / d u
            let da_du = self.half_range[k] * (T::one() - y * y);
            let dlp_du = two * y;
            let d_u = d_action[k] * da_du + d_log_prob * dlp_du;
            let du_dls = self.std[k] * self.noise[k];
            d_mean.push(d_u);
            d_log_std.push(d_u * du_dls - d_log_prob);
        }
        (d_mean, d_log_std)
    }
}

/// Deterministic action: the squashed and scaled mean.
pub fn squashed_mean<T: Real>(head: &GaussianHeadOutput<T>, bounds: &ActionBounds<T>) -> Vec<T> {
    head.mean.iter().enumerate().map(|(k, &m)| bounds.scale(k, m.tanh())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_bounds(d: usize) -> ActionBounds<f64> {
        ActionBounds::symmetric(d, 1.0)
    }

    #[test]
    fn zero_noise_gives_scaled_tanh_of_mean() {
        let head = GaussianHeadOutput { mean: vec![0.3, -1.2], log_std: vec![0.1, -0.5] };
        let bounds = ActionBounds::new(vec![-2.0, 0.0], vec![2.0, 1.0]);
        let s = gaussian_sample(&head, &[0.0, 0.0], &bounds);
        assert!((s.action[0] - 2.0 * 0.3f64.tanh()).abs() < 1e-15);
        assert!((s.action[1] - (0.5 + 0.5 * (-1.2f64).tanh())).abs() < 1e-15);
        assert_eq!(s.action, squashed_mean(&head, &bounds));
    }

    #[test]
    fn standard_normal_at_origin() {
        let d = 3;
        let head = GaussianHeadOutput { mean: vec![0.0; d], log_std: vec![0.0; d] };
        let s = gaussian_sample(&head, &[0.0; 3], &unit_bounds(d));
        assert_eq!(s.action, vec![0.0; d]);
        let expected = -0.5 * d as f64 * (2.0 * std::f64::consts::PI).ln();
        assert!((s.log_prob - expected).abs() < 1e-14);
    }

    #[test]
    fn log_std_is_clamped() {
        let (head, mask) = GaussianHeadOutput::from_raw(&[0.0, 0.0, -50.0, 7.0]);
        assert_eq!(head.log_std, vec![LOG_STD_MIN, LOG_STD_MAX]);
        assert_eq!(mask, vec![true, true]);
        let (head, mask) = GaussianHeadOutput::from_raw(&[1.0, 0.5]);
        assert_eq!(head.log_std, vec![0.5]);
        assert_eq!(mask, vec![false]);
    }

    #[test]
    fn stable_log_one_minus_tanh_sq() {
        for u in [-3.0f64, -0.4, 0.0, 0.7, 2.5] {
            let direct = (1.0 - u.tanh().powi(2)).ln();
            assert!((log_one_minus_tanh_sq(u) - direct).abs() < 1e-12);
        }
        // Stays finite where the direct formula gives -inf.
        assert!(log_one_minus_tanh_sq(40.0f64).is_finite());
    }

    /// Density of the squashed action integrates to one over the action interval.
    #[test]
    fn density_integrates_to_one() {
        let bounds = ActionBounds::new(vec![-0.5], vec![1.5]);
        for (mean, log_std) in [(0.0, 0.0), (0.8, -0.7), (-1.5, 0.6)] {
            let head = GaussianHeadOutput { mean: vec![mean], log_std: vec![log_std] };
            let n = 400_000;
            let (lo, hi) = (-0.5f64, 1.5f64);
            let width = (hi - lo) / n as f64;
            let mut total = 0.0;
            // midpoint rule on the action grid; each grid action is mapped back to its noise
            for i in 0..n {
                let a = lo + (i as f64 + 0.5) * width;
                let y: f64 = (a - 0.5) / 1.0;
                let u = y.atanh();
                let noise = (u - mean) / log_std.exp();
                let s = gaussian_sample(&head, &[noise], &bounds);
                assert!((s.action[0] - a).abs() < 1e-9);
                total += s.log_prob.exp() * width;
            }
            assert!((total - 1.0).abs() < 1e-3, "integral {total}");
        }
    }

    #[test]
    fn backprop_matches_finite_differences() {
        let bounds = ActionBounds::new(vec![-1.0, -0.2], vec![3.0, 0.2]);
        let mean = [0.4, -0.9];
        let log_std = [-0.3, 0.2];
        let noise = [0.7, -1.1];
        let d_action = [0.3, -2.0];
        let d_lp = 0.25;
        let objective = |m: &[f64], ls: &[f64]| {
            let head = GaussianHeadOutput { mean: m.to_vec(), log_std: ls.to_vec() };
            let s = gaussian_sample(&head, &noise, &bounds);
            s.action.iter().zip(&d_action).map(|(a, g)| a * g).sum::<f64>() + d_lp * s.log_prob
        };
        let head = GaussianHeadOutput { mean: mean.to_vec(), log_std: log_std.to_vec() };
        let (gm, gs) = gaussian_sample(&head, &noise, &bounds).backprop(&d_action, d_lp);
        let h = 1e-6;
        for k in 0..2 {
            let (mut mp, mut mm) = (mean, mean);
            mp[k] += h;
            mm[k] -= h;
            let num = (objective(&mp, &log_std) - objective(&mm, &log_std)) / (2.0 * h);
            assert!((num - gm[k]).abs() < 1e-7, "mean {k}: {num} vs {}", gm[k]);
            let (mut sp, mut sm) = (log_std, log_std);
            sp[k] += h;
            sm[k] -= h;
            let num = (objective(&mean, &sp) - objective(&mean, &sm)) / (2.0 * h);
            assert!((num - gs[k]).abs() < 1e-7, "log_std {k}: {num} vs {}", gs[k]);
        }
    }
}
