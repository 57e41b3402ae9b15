use ndarray::{Array2, ArrayView2, Zip};
use rand_distr::{Distribution, StandardNormal};

use super::model::SngpModel;
use super::VarianceAggregator;
use crate::error::{Error, Result};
use crate::rng::{derive, seeded, Rng};
use crate::signal::Dataset;

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// Mean-field approximation of the expected softmax.
    pub class_probs: Vec<f64>,
    pub logit_means: Vec<f64>,
    pub logit_vars: Vec<f64>,
    pub predicted_label: usize,
    /// Monte-Carlo variance of the predicted probabilities.
    pub prob_variance: f64,
}

/// Seed of the Monte-Carlo stream for one input: a function of the base
/// seed and the exact bits of the input, so equal inputs always draw the
/// same samples.
pub fn sample_seed(seed: u64, x: &[f64]) -> u64 {
    let bits: Vec<u64> = x.iter().map(|v| v.to_bits()).collect();
    derive(seed, &bits)
}

fn softmax_into(z: &[f64], out: &mut [f64]) {
    let max = z.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let mut sum = 0.0;
    for (o, &v) in out.iter_mut().zip(z) {
        *o = (v - max).exp();
        sum += *o;
    }
    out.iter_mut().for_each(|o| *o /= sum);
}

/// `softmax(m_k / sqrt(1 + lambda v_k))`.
pub fn mean_field_probs(means: &[f64], vars: &[f64], lambda: f64) -> Vec<f64> {
    let scaled: Vec<f64> = means
        .iter()
        .zip(vars)
        .map(|(m, v)| m / (1.0 + lambda * v).sqrt())
        .collect();
    let mut out = vec![0.0; scaled.len()];
    softmax_into(&scaled, &mut out);
    out
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |b, (i, &x)| if x > b.1 { (i, x) } else { b })
        .0
}

/// Variance of softmax probabilities when each logit `k` is drawn
/// independently from `N(m_k, v_k)`, estimated from `samples` draws and
/// reduced over classes by `aggregator`.
pub fn mc_prob_variance_from_moments(
    means: &[f64],
    vars: &[f64],
    samples: usize,
    aggregator: VarianceAggregator,
    lambda: f64,
    rng: &mut Rng,
) -> f64 {
    let k = means.len();
    let sd: Vec<f64> = vars.iter().map(|v| v.max(0.0).sqrt()).collect();
    let mut z = vec![0.0; k];
    let mut p = vec![0.0; k];
    let mut sum = vec![0.0; k];
    let mut sum_sq = vec![0.0; k];
    for _ in 0..samples {
        for c in 0..k {
            let e: f64 = StandardNormal.sample(rng);
            z[c] = means[c] + sd[c] * e;
        }
        softmax_into(&z, &mut p);
        for c in 0..k {
            sum[c] += p[c];
            sum_sq[c] += p[c] * p[c];
        }
    }
    let s = samples as f64;
    let per_class: Vec<f64> = (0..k)
        .map(|c| {
            let mean = sum[c] / s;
            (sum_sq[c] / s - mean * mean).max(0.0)
        })
        .collect();
    match aggregator {
        VarianceAggregator::MeanOverClasses => per_class.iter().sum::<f64>() / k as f64,
        VarianceAggregator::MaxOverClasses => per_class.iter().fold(0.0, |m, &v| m.max(v)),
        VarianceAggregator::PredictedClass => per_class[argmax(&mean_field_probs(means, vars, lambda))],
    }
}

/// Logit means `phi^T beta_k` and variances `phi^T H_k^{-1} phi` for a batch.
pub(crate) fn logit_moments(model: &SngpModel, x: &ArrayView2<f64>) -> Result<(Array2<f64>, Array2<f64>)> {
    let phi = model.phi(x)?;
    let means = phi.dot(&model.beta);
    let mut vars = Array2::zeros(means.raw_dim());
    for (k, cov) in model.covariance.iter().enumerate() {
        let proj = phi.dot(cov);
        let mut col = vars.column_mut(k);
        Zip::from(&mut col)
            .and(proj.rows())
            .and(phi.rows())
            .for_each(|v, a, b| *v = a.dot(&b).max(0.0));
    }
    Ok((means, vars))
}

fn as_row(x: &[f64]) -> ArrayView2<'_, f64> {
    ArrayView2::from_shape((1, x.len()), x).expect("contiguous slice")
}

pub fn mc_prob_variance(model: &SngpModel, x: &[f64], samples: usize, seed: u64) -> Result<f64> {
    if samples < 2 {
        return Err(Error::InvalidValue("need at least 2 Monte-Carlo samples".into()));
    }
    let (m, v) = logit_moments(model, &as_row(x))?;
    let mut rng = seeded(sample_seed(seed, x));
    Ok(mc_prob_variance_from_moments(
        m.row(0).as_slice().unwrap(),
        v.row(0).as_slice().unwrap(),
        samples,
        model.config.variance_aggregator,
        model.config.mean_field_lambda,
        &mut rng,
    ))
}

/// Predictions for every row of `x`; Monte-Carlo draws use `seed`.
pub fn predict_batch(model: &SngpModel, x: &ArrayView2<f64>, seed: u64) -> Result<Vec<Prediction>> {
    let (means, vars) = logit_moments(model, x)?;
    let cfg = &model.config;
    Ok(means
        .rows()
        .into_iter()
        .zip(vars.rows())
        .zip(x.rows())
        .map(|((m, v), xi)| {
            let m = m.to_vec();
            let v = v.to_vec();
            let probs = mean_field_probs(&m, &v, cfg.mean_field_lambda);
            let xi = xi.to_vec();
            let mut rng = seeded(sample_seed(seed, &xi));
            let prob_variance = mc_prob_variance_from_moments(
                &m,
                &v,
                cfg.mc_samples,
                cfg.variance_aggregator,
                cfg.mean_field_lambda,
                &mut rng,
            );
            Prediction {
                predicted_label: argmax(&probs),
                class_probs: probs,
                logit_means: m,
                logit_vars: v,
                prob_variance,
            }
        })
        .collect())
}

pub fn predict(model: &SngpModel, x: &[f64]) -> Result<Prediction> {
    Ok(predict_batch(model, &as_row(x), model.config.seed)?.remove(0))
}

/// Mean Monte-Carlo probability variance over every sample of `ds`.
pub fn dataset_variance(model: &SngpModel, ds: &Dataset, seed: u64) -> Result<f64> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let x = ds.feature_matrix();
    let (means, vars) = logit_moments(model, &x.view())?;
    let cfg = &model.config;
    let total: f64 = ds
        .samples()
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let mut rng = seeded(sample_seed(seed, s.features()));
            mc_prob_variance_from_moments(
                means.row(i).as_slice().unwrap(),
                vars.row(i).as_slice().unwrap(),
                cfg.mc_samples,
                cfg.variance_aggregator,
                cfg.mean_field_lambda,
                &mut rng,
            )
        })
        .sum();
    Ok(total / ds.len() as f64)
}
