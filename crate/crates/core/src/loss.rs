//! Four-term hybrid Huber objective.
//!
//! `total = λ_rec·H(sr, hr) + λ_spatial·H(spatial, hr) + λ_low·H(LL*, LL(hr)) + λ_high·H(D*, D(hr))`
//! where `D` stacks the three detail subbands and every `H` is a mean
//! Huber loss. The detail term pools all three subbands into one mean.

use crate::autograd::{Graph, Var};
use crate::error::{shape_err, Error, Result};
use crate::model::{ForwardOutputs, ForwardVars};
use crate::tensor::{Real, Tensor};

pub const DEFAULT_DELTA: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossWeights {
    pub rec: f64,
    pub spatial: f64,
    pub low: f64,
    pub high: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self { rec: 0.35, spatial: 0.35, low: 0.35, high: 0.35 }
    }
}

impl LossWeights {
    /// Plain reconstruction loss, the "without hybrid loss" ablation.
    pub fn reconstruction_only() -> Self {
        Self { rec: 1.0, spatial: 0.0, low: 0.0, high: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, w) in [("rec", self.rec), ("spatial", self.spatial), ("low", self.low), ("high", self.high)] {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::InvalidArgument(format!("loss weight {name} = {w} must be finite and ≥ 0")));
            }
        }
        Ok(())
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self { rec: self.rec * k, spatial: self.spatial * k, low: self.low * k, high: self.high * k }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossBreakdown {
    pub total: f64,
    pub rec: f64,
    pub spatial: f64,
    pub low: f64,
    pub high: f64,
}

impl LossBreakdown {
    /// `self + other * k`, component-wise.
    pub fn add_scaled(&self, other: &Self, k: f64) -> Self {
        Self {
            total: self.total + other.total * k,
            rec: self.rec + other.rec * k,
            spatial: self.spatial + other.spatial * k,
            low: self.low + other.low * k,
            high: self.high + other.high * k,
        }
    }
}

/// Graph handles of each loss term.
#[derive(Clone, Copy, Debug)]
pub struct LossVars {
    pub total: Var,
    pub rec: Var,
    pub spatial: Var,
    pub low: Var,
    pub high: Var,
}

impl LossVars {
    pub fn breakdown<T: Real>(&self, g: &Graph<T>) -> LossBreakdown {
        let v = |var| g.value(var).item().as_f64();
        LossBreakdown { total: v(self.total), rec: v(self.rec), spatial: v(self.spatial), low: v(self.low), high: v(self.high) }
    }
}

/// Record the hybrid loss of a forward pass against the high-resolution
/// target `hr`.
pub fn hybrid_loss_graph<T: Real>(
    g: &mut Graph<T>,
    out: &ForwardVars,
    hr: Var,
    weights: &LossWeights,
    delta: f64,
) -> Result<LossVars> {
    weights.validate()?;
    if g.value(hr).shape() != g.value(out.sr).shape() {
        return shape_err(format!(
            "target shape {} does not match prediction {}",
            g.value(hr).shape(),
            g.value(out.sr).shape()
        ));
    }
    let delta = T::from_f64_lossy(delta);
    let [gt_ll, gt_lh, gt_hl, gt_hh] = g.dwt(hr)?;

    let rec = g.huber(out.sr, hr, delta)?;
    let spatial = g.huber(out.spatial, hr, delta)?;
    let low = g.huber(out.ll_refined, gt_ll, delta)?;
    // Equal-sized subbands: the pooled mean is the mean of per-band means.
    let per_band = [
        g.huber(out.high_refined[0], gt_lh, delta)?,
        g.huber(out.high_refined[1], gt_hl, delta)?,
        g.huber(out.high_refined[2], gt_hh, delta)?,
    ];
    let high_sum = g.sum(&per_band)?;
    let high = g.scale(high_sum, T::from_f64_lossy(1.0 / 3.0));

    let terms = [
        g.scale(rec, T::from_f64_lossy(weights.rec)),
        g.scale(spatial, T::from_f64_lossy(weights.spatial)),
        g.scale(low, T::from_f64_lossy(weights.low)),
        g.scale(high, T::from_f64_lossy(weights.high)),
    ];
    let total = g.sum(&terms)?;
    Ok(LossVars { total, rec, spatial, low, high })
}

/// Evaluate the hybrid loss of already-computed outputs.
pub fn hybrid_loss<T: Real>(
    out: &ForwardOutputs<T>,
    hr: &Tensor<T>,
    weights: &LossWeights,
    delta: f64,
) -> Result<LossBreakdown> {
    let mut g = Graph::new();
    let vars = ForwardVars {
        sr: g.input(out.sr.clone()),
        spatial: g.input(out.spatial.clone()),
        ll_refined: g.input(out.ll_refined.clone()),
        high_refined: [
            g.input(out.high_refined[0].clone()),
            g.input(out.high_refined[1].clone()),
            g.input(out.high_refined[2].clone()),
        ],
    };
    let hr = g.input(hr.clone());
    Ok(hybrid_loss_graph(&mut g, &vars, hr, weights, delta)?.breakdown(&g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::ops::huber;
    use crate::wavelet::dwt2_haar;

    fn target() -> Tensor<f64> {
        Tensor::from_fn([2, 3, 4, 6], |[b, c, y, x]| ((b * 5 + c * 3 + y * 7 + x) % 9) as f64 / 9.0)
    }

    fn perfect(hr: &Tensor<f64>) -> ForwardOutputs<f64> {
        let p = dwt2_haar(hr).unwrap();
        ForwardOutputs { sr: hr.clone(), spatial: hr.clone(), ll_refined: p.ll, high_refined: p.high }
    }

    fn perturbed(hr: &Tensor<f64>) -> ForwardOutputs<f64> {
        let mut out = perfect(hr);
        out.sr = hr.map(|v| v + 0.3 * v * v);
        out.spatial = hr.map(|v| 1.5 - 2.0 * v);
        out.ll_refined = out.ll_refined.map(|v| v * 0.5);
        out.high_refined[1] = out.high_refined[1].map(|v| v + 0.25);
        out
    }

    #[test]
    fn perfect_prediction_is_zero() {
        let hr = target();
        let b = hybrid_loss(&perfect(&hr), &hr, &LossWeights::default(), 1.0).unwrap();
        assert_eq!(b, LossBreakdown::default());
    }

    #[test]
    fn weights_scale_total_only() {
        let hr = target();
        let out = perturbed(&hr);
        let w = LossWeights::default();
        let one = hybrid_loss(&out, &hr, &w, 1.0).unwrap();
        let two = hybrid_loss(&out, &hr, &w.scaled(2.0), 1.0).unwrap();
        assert!((two.total - 2.0 * one.total).abs() < 1e-12);
        assert_eq!((one.rec, one.spatial, one.low, one.high), (two.rec, two.spatial, two.low, two.high));
        let recombined = w.rec * one.rec + w.spatial * one.spatial + w.low * one.low + w.high * one.high;
        assert!((one.total - recombined).abs() < 1e-15);
        assert!(one.rec > 0.0 && one.spatial > 0.0 && one.low > 0.0 && one.high > 0.0);
    }

    #[test]
    fn reconstruction_only_matches_single_huber() {
        let hr = target();
        let out = perturbed(&hr);
        let b = hybrid_loss(&out, &hr, &LossWeights::reconstruction_only(), 1.0).unwrap();
        let oracle = huber(&out.sr, &hr, 1.0).unwrap();
        assert_eq!(b.total.to_bits(), oracle.to_bits());
    }

    #[test]
    fn pooled_detail_term_matches_stacked_oracle() {
        let hr = target();
        let out = perturbed(&hr);
        let b = hybrid_loss(&out, &hr, &LossWeights::default(), 1.0).unwrap();
        let gt = dwt2_haar(&hr).unwrap();
        let (mut acc, mut n) = (0.0, 0usize);
        for k in 0..3 {
            for (p, t) in out.high_refined[k].data().iter().zip(gt.high[k].data()) {
                let e: f64 = (p - t).abs();
                acc += if e <= 1.0 { 0.5 * e * e } else { e - 0.5 };
                n += 1;
            }
        }
        assert!((b.high - acc / n as f64).abs() < 1e-15);
    }

    #[test]
    fn shape_mismatch_and_negative_weights_rejected() {
        let hr = target();
        let out = perfect(&hr);
        let small = Tensor::<f64>::zeros([2, 3, 2, 6]);
        assert!(hybrid_loss(&out, &small, &LossWeights::default(), 1.0).is_err());
        let bad = LossWeights { low: -0.1, ..Default::default() };
        assert!(hybrid_loss(&out, &hr, &bad, 1.0).is_err());
    }
}
