use super::model::{Model, ModelVector};
use super::FlError;
use crate::datagen::Sample;

/// One regularized mini-batch step:
/// `w - eta * (1/B) * sum(grad f(w; x) + 2 rho (w - w_global))`.
pub fn local_sgd_step(
    model: &dyn Model,
    w: &ModelVector,
    batch: &[&Sample],
    eta: f64,
    rho: f64,
    w_global: &ModelVector,
) -> Result<ModelVector, FlError> {
    if batch.is_empty() {
        return Err(FlError::EmptyBatch);
    }
    w.check_dim(w_global)?;
    if w.dim() != model.dim() {
        return Err(FlError::DimMismatch {
            expected: model.dim(),
            got: w.dim(),
        });
    }
    let mut grad = vec![0.0; w.dim()];
    for s in batch {
        model.accumulate_grad(&w.weights, s, &mut grad);
    }
    let inv_b = 1.0 / batch.len() as f64;
    let mut next = w.clone();
    for ((nw, g), wg) in next.weights.iter_mut().zip(&grad).zip(&w_global.weights) {
        let full = g * inv_b + 2.0 * rho * (*nw - wg);
        if !full.is_finite() {
            return Err(FlError::NonFinite);
        }
        *nw -= eta * full;
    }
    Ok(next)
}
