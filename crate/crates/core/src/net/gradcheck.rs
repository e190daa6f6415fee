use crate::scalar::Real;

/// Largest relative disagreement between an analytic gradient and a
/// five-point central difference (truncation error of order `h^4`).
///
/// `loss_and_grad` returns the loss at the given parameters together with its
/// analytic gradient; the gradient is only requested once, at `params`.
/// Per coordinate the error is `|analytic - numeric| / max(|analytic|, |numeric|, 1e-12)`.
pub fn finite_diff_check<T, F>(params: &[T], mut loss_and_grad: F, h: T) -> T
where
    T: Real,
    F: FnMut(&[T]) -> (T, Vec<T>),
{
    assert!(h > T::zero(), "finite-difference step must be positive");
    let (_, analytic) = loss_and_grad(params);
    assert_eq!(analytic.len(), params.len(), "gradient length");
    let floor = T::of(1e-12);
    let twelve_h = T::of(12.0) * h;
    let eight = T::of(8.0);
    let mut probe = params.to_vec();
    let mut worst = T::zero();
    for k in 0..params.len() {
        let orig = probe[k];
        let mut at = |x: T| {
            probe[k] = x;
            loss_and_grad(&probe).0
        };
        let numeric = (eight * (at(orig + h) - at(orig - h)) - (at(orig + h + h) - at(orig - h - h))) / twelve_h;
        probe[k] = orig;
        let err = (analytic[k] - numeric).abs() / analytic[k].abs().max(numeric.abs()).max(floor);
        if err > worst {
            worst = err;
        }
    }
    worst
}
