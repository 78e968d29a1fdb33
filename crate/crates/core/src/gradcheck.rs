//! Central-difference verification of analytic gradients.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::autograd::{Graph, ParamStore, Var};
use crate::error::{Error, Result};
use crate::loss::{hybrid_loss_graph, LossWeights};
use crate::model::DdsrParams;
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug)]
pub struct GradCheckOptions {
    /// Finite-difference step.
    pub step: f64,
    /// Coordinates to sample; all coordinates when `None` or larger than the
    /// parameter count.
    pub samples: Option<usize>,
    pub seed: u64,
    /// Relative disagreement between the forward and backward one-sided
    /// differences above which a coordinate is treated as sitting on a
    /// ReLU kink and is replaced by another.
    pub kink_tolerance: f64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        Self { step: 1e-5, samples: Some(200), seed: 0, kink_tolerance: 1e-3 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Flat index of the worst coordinate.
    pub worst_index: usize,
    pub checked: usize,
    pub skipped_kinks: usize,
}

impl GradCheckReport {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_rel_error < tolerance
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-8)
}

/// Compare `analytic` against central differences of `loss` around `x0`.
pub fn check_gradient(
    x0: &[f64],
    analytic: &[f64],
    mut loss: impl FnMut(&[f64]) -> Result<f64>,
    opts: &GradCheckOptions,
) -> Result<GradCheckReport> {
    if analytic.len() != x0.len() {
        return Err(Error::Shape(format!(
            "{} analytic gradients for {} coordinates",
            analytic.len(),
            x0.len()
        )));
    }
    let n = x0.len();
    let wanted = opts.samples.unwrap_or(n).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let order: Vec<usize> = sample(&mut rng, n, n).into_vec();

    let base = loss(x0)?;
    if !base.is_finite() {
        return Err(Error::Numeric(format!("loss is not finite at the check point: {base}")));
    }

    let h = opts.step;
    let mut x = x0.to_vec();
    let mut report = GradCheckReport { max_rel_error: 0.0, worst_index: 0, checked: 0, skipped_kinks: 0 };
    for idx in order {
        if report.checked == wanted {
            break;
        }
        x[idx] = x0[idx] + h;
        let plus = loss(&x)?;
        x[idx] = x0[idx] - h;
        let minus = loss(&x)?;
        x[idx] = x0[idx];
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::Numeric(format!("loss became non-finite perturbing coordinate {idx}")));
        }
        let forward = (plus - base) / h;
        let backward = (base - minus) / h;
        if relative_error(forward, backward) > opts.kink_tolerance
            && (forward - backward).abs() > 1e-6
        {
            report.skipped_kinks += 1;
            continue;
        }
        let numeric = (plus - minus) / (2.0 * h);
        let err = relative_error(analytic[idx], numeric);
        if err > report.max_rel_error {
            report.max_rel_error = err;
            report.worst_index = idx;
        }
        report.checked += 1;
    }
    Ok(report)
}

/// Check the gradients of every parameter in `store` for a loss recorded
/// by `build`.
pub fn grad_check(
    store: &ParamStore<f64>,
    mut build: impl FnMut(&ParamStore<f64>) -> Result<(Graph<f64>, Var)>,
    opts: &GradCheckOptions,
) -> Result<GradCheckReport> {
    let mut work = store.clone();
    work.zero_grad();
    let (graph, loss) = build(&work)?;
    let value = graph.value(loss).item();
    if !value.is_finite() {
        return Err(Error::Numeric(format!("loss is not finite: {value}")));
    }
    graph.backward(loss, &mut work)?;
    let analytic = work.flat_grads();
    let x0 = work.flat_values();

    check_gradient(
        &x0,
        &analytic,
        |x| {
            work.set_flat_values(x)?;
            let (g, l) = build(&work)?;
            Ok(g.value(l).item())
        },
        opts,
    )
}

/// Gradient check of the whole network under the hybrid loss for one
/// `(lr, hr)` pair.
pub fn check_model(
    params: &DdsrParams<f64>,
    lr: &Tensor<f64>,
    hr: &Tensor<f64>,
    weights: &LossWeights,
    delta: f64,
    opts: &GradCheckOptions,
) -> Result<GradCheckReport> {
    let config = *params.config();
    grad_check(
        params.store(),
        |store| {
            let p = DdsrParams::from_store(config, store.clone())?;
            let mut g = Graph::new();
            let x = g.input(lr.clone());
            let y = g.input(hr.clone());
            let out = p.forward_graph(&mut g, x)?;
            let loss = hybrid_loss_graph(&mut g, &out, y, weights, delta)?.total;
            Ok((g, loss))
        },
        opts,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_model_is_exact() {
        let x0 = [0.7, -1.3, 2.0];
        let coeffs = [1.5, 0.25, -3.0];
        let loss = |x: &[f64]| Ok(x.iter().zip(coeffs).map(|(a, c)| a * c).sum());
        let report = check_gradient(&x0, &coeffs, loss, &GradCheckOptions::default()).unwrap();
        assert_eq!(report.checked, 3);
        assert!(report.max_rel_error < 1e-9, "{report:?}");
    }

    #[test]
    fn doubled_gradient_reports_one_third() {
        let x0 = [0.4, -0.9];
        let doubled: Vec<f64> = x0.iter().map(|v| 2.0 * v).collect();
        let loss = |x: &[f64]| Ok(x.iter().map(|v| 0.5 * v * v).sum());
        let report = check_gradient(&x0, &doubled, loss, &GradCheckOptions::default()).unwrap();
        assert!((report.max_rel_error - 1.0 / 3.0).abs() < 1e-6);
        assert!(!report.passes(1e-4));
    }

    #[test]
    fn non_finite_loss_rejected() {
        let loss = |_: &[f64]| Ok(f64::NAN);
        let err = check_gradient(&[1.0], &[0.0], loss, &GradCheckOptions::default());
        assert!(matches!(err, Err(Error::Numeric(_))));
    }

    #[test]
    fn kink_coordinates_are_skipped() {
        // |x| at x = 0 has disagreeing one-sided slopes
        let loss = |x: &[f64]| Ok(x[0].abs() + x[1] * x[1]);
        let report = check_gradient(&[0.0, 1.0], &[0.0, 2.0], loss, &GradCheckOptions::default()).unwrap();
        assert_eq!(report.skipped_kinks, 1);
        assert_eq!(report.checked, 1);
    }

    #[test]
    fn two_path_shared_parameter() {
        // loss = huber(w * a + w * b, t): shared w used by two scale paths
        let mut store = ParamStore::new();
        store.add("w", Tensor::from_vec([1, 1, 1, 3], vec![0.2, -0.1, 0.4]).unwrap()).unwrap();
        let report = grad_check(
            &store,
            |s| {
                let mut g = Graph::new();
                let w = g.param(s, s.find("w").unwrap());
                let a = g.scale(w, 1.7);
                let b = g.scale(w, -0.6);
                let r = g.relu(w);
                let sum = g.sum(&[a, b, r])?;
                let t = g.input(Tensor::from_vec([1, 1, 1, 3], vec![0.5, 0.5, -2.0])?);
                let loss = g.huber(sum, t, 1.0)?;
                Ok((g, loss))
            },
            &GradCheckOptions { samples: None, ..Default::default() },
        )
        .unwrap();
        assert!(report.passes(1e-8), "{report:?}");
    }
}
