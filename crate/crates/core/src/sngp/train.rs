use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::seq::SliceRandom;

use super::model::{Dense, SngpModel};
use super::posterior::recompute_precision;
use super::check_labels;
use crate::error::{Error, Result};
use crate::rng::seeded;
use crate::signal::Dataset;

/// Gradient of the training loss with respect to each trainable tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub projection_weight: Array2<f64>,
    pub projection_bias: Array1<f64>,
    pub block_weights: Vec<Array2<f64>>,
    pub block_biases: Vec<Array1<f64>>,
    pub beta: Array2<f64>,
}

impl Gradients {
    /// Flattened in the same order as [`SngpModel::flat_parameters`].
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        out.extend(self.projection_weight.iter());
        out.extend(self.projection_bias.iter());
        for (w, b) in self.block_weights.iter().zip(&self.block_biases) {
            out.extend(w.iter());
            out.extend(b.iter());
        }
        out.extend(self.beta.iter());
        out
    }
}

fn softmax_rows(logits: &Array2<f64>) -> Array2<f64> {
    let mut p = logits.clone();
    for mut row in p.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row /= sum;
    }
    p
}

/// Mean cross-entropy of `softmax(phi beta)` over the batch plus
/// `||beta||^2 / (2 n_total)`, and its gradient.
pub fn loss_and_gradients(
    model: &SngpModel,
    x: &ArrayView2<f64>,
    labels: &[usize],
    n_total: usize,
) -> Result<(f64, Gradients)> {
    let batch = x.nrows();
    if batch == 0 || labels.len() != batch {
        return Err(Error::shape(format!("{batch} labels"), labels.len()));
    }
    check_labels(labels, model.num_classes())?;
    let n_total = n_total.max(1) as f64;
    let cache = model.forward(x)?;
    let probs = softmax_rows(&cache.logits);

    let mut loss = 0.0;
    for (i, &y) in labels.iter().enumerate() {
        let row = cache.logits.row(i);
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let lse = max + row.mapv(|v| (v - max).exp()).sum().ln();
        loss += lse - row[y];
    }
    loss /= batch as f64;
    loss += 0.5 * model.beta.iter().map(|b| b * b).sum::<f64>() / n_total;

    // d loss / d logits
    let mut d_logits = probs;
    for (i, &y) in labels.iter().enumerate() {
        d_logits[[i, y]] -= 1.0;
    }
    d_logits /= batch as f64;

    let mut d_beta = cache.phi.t().dot(&d_logits);
    d_beta.scaled_add(1.0 / n_total, &model.beta);

    // phi = s cos(arg), arg = -h W_L^T + b_L
    let d_phi = d_logits.dot(&model.beta.t());
    let scale = (2.0 / model.config.rff_dim as f64).sqrt();
    let mut d_arg = d_phi;
    Zip::from(&mut d_arg)
        .and(&cache.rff_arg)
        .for_each(|g, &a| *g *= -scale * a.sin());
    let mut d_u = d_arg.dot(&model.rff_weight);
    d_u.mapv_inplace(|v| -v);

    let n_blocks = model.blocks.len();
    let mut block_weights = vec![Array2::zeros((0, 0)); n_blocks];
    let mut block_biases = vec![Array1::zeros(0); n_blocks];
    for l in (0..n_blocks).rev() {
        let mut d_pre = d_u.clone();
        Zip::from(&mut d_pre)
            .and(&cache.block_pre[l])
            .for_each(|g, &a| {
                if a <= 0.0 {
                    *g = 0.0
                }
            });
        block_weights[l] = d_pre.t().dot(&cache.block_inputs[l]);
        block_biases[l] = d_pre.sum_axis(Axis(0));
        d_u += &d_pre.dot(&model.blocks[l].weight);
    }

    let grads = Gradients {
        projection_weight: d_u.t().dot(x),
        projection_bias: d_u.sum_axis(Axis(0)),
        block_weights,
        block_biases,
        beta: d_beta,
    };
    Ok((loss, grads))
}

fn sgd_step(layer: &mut Dense, dw: &Array2<f64>, db: &Array1<f64>, lr: f64) {
    layer.weight.scaled_add(-lr, dw);
    layer.bias.scaled_add(-lr, db);
}

/// Mini-batch SGD over `ds` for `epochs` passes, re-imposing the spectral
/// bound after every step, then rebuilding the Laplace precision on `ds`.
pub fn train_epochs(model: &mut SngpModel, ds: &Dataset, epochs: usize, lr: f64, seed: u64) -> Result<()> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let labels = ds.labels();
    check_labels(&labels, model.num_classes())?;
    let x = ds.feature_matrix();
    let n = ds.len();
    let batch = model.config.batch_size.min(n);
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = seeded(seed);

    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(batch) {
            let bx = x.select(Axis(0), chunk);
            let by: Vec<usize> = chunk.iter().map(|&i| labels[i]).collect();
            let (_, g) = loss_and_gradients(model, &bx.view(), &by, n)?;
            sgd_step(&mut model.projection, &g.projection_weight, &g.projection_bias, lr);
            for (l, block) in model.blocks.iter_mut().enumerate() {
                sgd_step(block, &g.block_weights[l], &g.block_biases[l], lr);
            }
            model.beta.scaled_add(-lr, &g.beta);
            model.normalize_weights(1);
        }
    }
    recompute_precision(model, ds)
}
