//! Fisher-weighted parameter consolidation.
//!
//! The diagonal empirical Fisher is estimated from replay memory and anchors
//! the parameters to the previous step with the penalty
//! `λ Σ_i F_i (θ_i − θ*_i)²`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gnn::{loss_and_grad, GnnParams, Gradients, TrainItem};
use crate::memory::Memory;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegularizerKind {
    None,
    /// Every `F_i = 1`.
    L2,
    #[default]
    Ewc,
}

impl FromStr for RegularizerKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(RegularizerKind::None),
            "l2" => Ok(RegularizerKind::L2),
            "ewc" => Ok(RegularizerKind::Ewc),
            other => Err(Error::Config(format!("unknown regularizer `{other}`"))),
        }
    }
}

impl fmt::Display for RegularizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RegularizerKind::None => "none",
            RegularizerKind::L2 => "l2",
            RegularizerKind::Ewc => "ewc",
        })
    }
}

/// Per-parameter importance paired with the parameters it anchors to.
#[derive(Clone, Debug, PartialEq)]
pub struct FisherDiag {
    values: Gradients,
    anchor: GnnParams,
}

impl FisherDiag {
    pub fn new(values: Gradients, anchor: GnnParams) -> Result<Self> {
        if !anchor.same_shape(&values) {
            return Err(Error::Dimension {
                expected: anchor.num_params(),
                got: values.len(),
            });
        }
        if values.values().any(|f| !(f >= 0.0 && f.is_finite())) {
            return Err(Error::NonFinite("fisher"));
        }
        Ok(FisherDiag { values, anchor })
    }

    /// All-zero importance: the penalty is inert.
    pub fn zeros(anchor: &GnnParams) -> Self {
        FisherDiag {
            values: Gradients::zeros_like(anchor),
            anchor: anchor.clone(),
        }
    }

    /// Constant importance `value` for every parameter.
    pub fn uniform(anchor: &GnnParams, value: f64) -> Self {
        let mut values = Gradients::zeros_like(anchor);
        values.values_mut().for_each(|f| *f = value);
        FisherDiag {
            values,
            anchor: anchor.clone(),
        }
    }

    pub fn values(&self) -> &Gradients {
        &self.values
    }

    pub fn anchor(&self) -> &GnnParams {
        &self.anchor
    }

    pub fn is_zero(&self) -> bool {
        self.values.values().all(|f| f == 0.0)
    }

    /// Grows the anchor and the importance with zero rows for new classes.
    pub fn grow_classes(&mut self, classes: usize) {
        self.anchor.grow_classes(classes);
        self.values.0.last_mut().unwrap().grow_rows(classes);
    }
}

/// `F_i = (1/m) Σ_v g_i(θ; v)²` over the given items, using each item's own
/// label. An empty item list gives zero importance.
pub fn fisher_from_items<R: Rng + ?Sized>(
    params: &GnnParams,
    items: &[TrainItem<'_>],
    fanout: &[usize],
    rng: &mut R,
) -> Result<FisherDiag> {
    let mut values = Gradients::zeros_like(params);
    if items.is_empty() {
        return Ok(FisherDiag {
            values,
            anchor: params.clone(),
        });
    }
    for item in items {
        let (_, g) = loss_and_grad(params, std::slice::from_ref(item), fanout, rng)?;
        for (f, gi) in values.values_mut().zip(g.values()) {
            *f += gi * gi;
        }
    }
    let scale = 1.0 / items.len() as f64;
    values.values_mut().for_each(|f| *f *= scale);
    FisherDiag::new(values, params.clone())
}

/// Diagonal empirical Fisher over the replay memory.
pub fn estimate_fisher<R: Rng + ?Sized>(
    params: &GnnParams,
    mem: &Memory,
    fanout: &[usize],
    rng: &mut R,
) -> Result<FisherDiag> {
    fisher_from_items(params, &mem.replay_batch(), fanout, rng)
}

fn check_penalty_args(params: &GnnParams, fisher: &FisherDiag, lambda: f64) -> Result<()> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::Config(format!("lambda must be nonnegative, got {lambda}")));
    }
    if !params.same_shape(&fisher.values) {
        return Err(Error::Dimension {
            expected: fisher.values.len(),
            got: params.num_params(),
        });
    }
    Ok(())
}

/// `λ Σ_i F_i (θ_i − θ*_i)²` and its gradient `2λ F_i (θ_i − θ*_i)`.
pub fn ewc_penalty(params: &GnnParams, fisher: &FisherDiag, lambda: f64) -> Result<(f64, Gradients)> {
    check_penalty_args(params, fisher, lambda)?;
    let mut grads = Gradients::zeros_like(params);
    let mut total = 0.0;
    let triples = params.values().zip(fisher.anchor.values()).zip(fisher.values.values());
    for (g, ((theta, anchor), f)) in grads.values_mut().zip(triples) {
        let d = theta - anchor;
        total += f * d * d;
        *g = 2.0 * lambda * f * d;
    }
    Ok((lambda * total, grads))
}

/// One descent step on `data_loss + λ Σ F_i (θ_i − θ*_i)²`, explicit in the
/// data gradient and implicit in the quadratic:
///
/// `θ_i ← (θ_i − lr·g_i + c_i θ*_i) / (1 + c_i)`, `c_i = 2·lr·λ·F_i`.
///
/// Stable for any `λ`; with `c_i = 0` it is exactly `θ_i − lr·g_i`.
pub fn penalized_step(
    params: &mut GnnParams,
    data_grads: &Gradients,
    fisher: &FisherDiag,
    lambda: f64,
    lr: f64,
) -> Result<()> {
    check_penalty_args(params, fisher, lambda)?;
    params.apply_sgd(data_grads, lr)?;
    if lambda == 0.0 {
        return Ok(());
    }
    let pairs = fisher.anchor.values().zip(fisher.values.values());
    for (w, (anchor, f)) in params.weights_mut().iter_mut().flat_map(|m| m.as_mut_slice()).zip(pairs) {
        let c = 2.0 * lr * lambda * f;
        if c != 0.0 {
            *w = (*w + c * anchor) / (1.0 + c);
        }
    }
    if params.values().any(|w| !w.is_finite()) {
        return Err(Error::NonFinite("weights"));
    }
    Ok(())
}
