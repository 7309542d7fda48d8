use serde::Serialize;

use super::model::ModelParams;
use super::train::{loss_and_grad, EncodedExample, TrainError};

/// Analytic against central-difference gradient for one tensor.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TensorCheck {
    pub name: String,
    pub len: usize,
    /// ||fd - analytic|| / ||max(|fd|, |analytic|)||, NaN when both vanish.
    pub rel_error: f64,
    pub max_abs_error: f64,
    /// Key biases: softmax is shift invariant, so their true gradient is
    /// zero and only `max_abs_error` is meaningful.
    pub zero_gradient: bool,
}

impl TensorCheck {
    pub fn passes(&self, rel_tol: f64, abs_tol: f64) -> bool {
        if self.zero_gradient {
            self.max_abs_error < abs_tol
        } else {
            self.rel_error < rel_tol
        }
    }
}

pub fn gradient_check(
    params: &ModelParams,
    batch: &[EncodedExample],
    h: f64,
) -> Result<Vec<TensorCheck>, TrainError> {
    let (_, grad) = loss_and_grad(params, batch)?;
    let layout = params.layout();
    let mut out = Vec::with_capacity(layout.tensors.len());
    let mut probe = params.clone();
    for info in &layout.tensors {
        let (mut num, mut den, mut worst) = (0.0f64, 0.0f64, 0.0f64);
        for i in info.offset..info.offset + info.len() {
            let orig = probe.data[i];
            probe.data[i] = orig + h;
            let up = loss_and_grad(&probe, batch)?.0;
            probe.data[i] = orig - h;
            let down = loss_and_grad(&probe, batch)?.0;
            probe.data[i] = orig;
            let fd = (up - down) / (2.0 * h);
            let diff = fd - grad[i];
            num += diff * diff;
            den += fd.abs().max(grad[i].abs()).powi(2);
            worst = worst.max(diff.abs());
        }
        out.push(TensorCheck {
            name: info.name.clone(),
            len: info.len(),
            rel_error: num.sqrt() / den.sqrt(),
            max_abs_error: worst,
            zero_gradient: info.name.ends_with(".bk"),
        });
    }
    Ok(out)
}
