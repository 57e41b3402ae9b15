use ndarray::{Array1, Array2, ArrayView2, Zip};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::spectral::spectral_normalize;
use super::SngpConfig;
use crate::error::{Error, Result};
use crate::rng::{derive, seeded};

/// A fully connected layer `y = W x + b` with `W` stored `out x in`, plus
/// the warm-started power-iteration vector used to bound its spectral norm.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
    pub power_u: Array1<f64>,
}

impl Dense {
    fn init(out: usize, inp: usize, seed: u64) -> Self {
        let mut rng = seeded(seed);
        let bound = 1.0 / (inp as f64).sqrt();
        let weight = Array2::from_shape_fn((out, inp), |_| rng.random_range(-bound..bound));
        let mut power_u: Array1<f64> = Array1::from_shape_fn(out, |_| StandardNormal.sample(&mut rng));
        let norm = power_u.dot(&power_u).sqrt();
        power_u /= norm;
        Self {
            weight,
            bias: Array1::zeros(out),
            power_u,
        }
    }

    /// `X W^T + b` for a batch `X` of row vectors.
    pub fn apply(&self, x: &ArrayView2<f64>) -> Array2<f64> {
        let mut y = x.dot(&self.weight.t());
        y += &self.bias;
        y
    }

    pub fn normalize(&mut self, bound: f64, iterations: usize) -> f64 {
        spectral_normalize(&mut self.weight, &mut self.power_u, bound, iterations)
    }

    fn len(&self) -> usize {
        self.weight.len() + self.bias.len()
    }
}

/// Activations retained by a batched forward pass for backpropagation.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Input of each residual block; the last entry is the final hidden `h`.
    pub block_inputs: Vec<Array2<f64>>,
    /// Pre-activations `W u + b` of each block.
    pub block_pre: Vec<Array2<f64>>,
    /// Cosine arguments `-W_L h + b_L`.
    pub rff_arg: Array2<f64>,
    pub phi: Array2<f64>,
    pub logits: Array2<f64>,
}

impl ForwardCache {
    pub fn hidden(&self) -> &Array2<f64> {
        self.block_inputs.last().expect("at least the projection output")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SngpModel {
    pub config: SngpConfig,
    pub projection: Dense,
    pub blocks: Vec<Dense>,
    /// Frozen random-feature weights, `rff_dim x hidden_dim`, i.i.d. N(0, 1).
    pub rff_weight: Array2<f64>,
    /// Frozen random-feature phases, i.i.d. Uniform(0, pi).
    pub rff_bias: Array1<f64>,
    /// Output weights, `rff_dim x num_classes`.
    pub beta: Array2<f64>,
    /// Laplace precision of each class's output weights.
    pub precision: Vec<Array2<f64>>,
    /// Cached inverses of `precision`.
    pub covariance: Vec<Array2<f64>>,
}

impl SngpModel {
    pub fn init(config: &SngpConfig) -> Result<Self> {
        config.validate()?;
        let c = config;
        let seed = |tag: u64| derive(c.seed, &[crate::rng::stream::MODEL_INIT, tag]);

        let mut projection = Dense::init(c.hidden_dim, c.input_dim, seed(0));
        let mut blocks: Vec<Dense> = (0..c.num_blocks)
            .map(|l| Dense::init(c.hidden_dim, c.hidden_dim, seed(1 + l as u64)))
            .collect();
        projection.normalize(c.spectral_norm_bound, c.init_power_iterations);
        for b in &mut blocks {
            b.normalize(c.spectral_norm_bound, c.init_power_iterations);
        }

        let mut rng = seeded(seed(1000));
        let rff_weight: Array2<f64> =
            Array2::from_shape_fn((c.rff_dim, c.hidden_dim), |_| StandardNormal.sample(&mut rng));
        let rff_bias = Array1::from_shape_fn(c.rff_dim, |_| rng.random_range(0.0..std::f64::consts::PI));
        let eye = Array2::eye(c.rff_dim);

        Ok(Self {
            config: c.clone(),
            projection,
            blocks,
            rff_weight,
            rff_bias,
            beta: Array2::zeros((c.rff_dim, c.num_classes)),
            precision: vec![eye.clone(); c.num_classes],
            covariance: vec![eye; c.num_classes],
        })
    }

    pub fn num_classes(&self) -> usize {
        self.config.num_classes
    }

    fn check_input(&self, x: &ArrayView2<f64>) -> Result<()> {
        if x.ncols() != self.config.input_dim {
            return Err(Error::shape(
                format!("{} input features", self.config.input_dim),
                x.ncols(),
            ));
        }
        Ok(())
    }

    /// Batched forward pass keeping every intermediate activation.
    pub fn forward(&self, x: &ArrayView2<f64>) -> Result<ForwardCache> {
        self.check_input(x)?;
        let mut u = self.projection.apply(x);
        let mut block_inputs = Vec::with_capacity(self.blocks.len() + 1);
        let mut block_pre = Vec::with_capacity(self.blocks.len());
        for block in &self.blocks {
            let pre = block.apply(&u.view());
            let next = &u + &pre.mapv(|a| a.max(0.0));
            block_inputs.push(u);
            block_pre.push(pre);
            u = next;
        }
        block_inputs.push(u);
        let h = block_inputs.last().unwrap();
        let rff_arg = self.rff_argument(&h.view());
        let phi = self.rff_from_argument(&rff_arg);
        let logits = phi.dot(&self.beta);
        Ok(ForwardCache {
            block_inputs,
            block_pre,
            rff_arg,
            phi,
            logits,
        })
    }

    /// Hidden representation `h(x)` for a batch.
    pub fn features(&self, x: &ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_input(x)?;
        let mut u = self.projection.apply(x);
        for block in &self.blocks {
            let pre = block.apply(&u.view());
            Zip::from(&mut u).and(&pre).for_each(|u, &a| *u += a.max(0.0));
        }
        Ok(u)
    }

    /// Input projection `P x` (before any residual block) for a batch.
    pub fn project(&self, x: &ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_input(x)?;
        Ok(self.projection.apply(x))
    }

    /// `h(x)` for a single input vector.
    pub fn forward_features(&self, x: &[f64]) -> Result<Array1<f64>> {
        let view = ArrayView2::from_shape((1, x.len()), x).expect("contiguous slice");
        Ok(self.features(&view)?.row(0).to_owned())
    }

    fn rff_argument(&self, h: &ArrayView2<f64>) -> Array2<f64> {
        let mut arg = h.dot(&self.rff_weight.t());
        arg.mapv_inplace(|a| -a);
        arg += &self.rff_bias;
        arg
    }

    fn rff_from_argument(&self, arg: &Array2<f64>) -> Array2<f64> {
        let scale = (2.0 / self.config.rff_dim as f64).sqrt();
        arg.mapv(|a| scale * a.cos())
    }

    /// Random Fourier features `sqrt(2/D) cos(-W_L h + b_L)` for a batch of hidden vectors.
    pub fn rff_batch(&self, h: &ArrayView2<f64>) -> Result<Array2<f64>> {
        if h.ncols() != self.config.hidden_dim {
            return Err(Error::shape(self.config.hidden_dim, h.ncols()));
        }
        Ok(self.rff_from_argument(&self.rff_argument(h)))
    }

    pub fn rff(&self, h: &[f64]) -> Result<Array1<f64>> {
        let view = ArrayView2::from_shape((1, h.len()), h).map_err(|e| Error::shape("row vector", e))?;
        Ok(self.rff_batch(&view)?.row(0).to_owned())
    }

    /// Random features of a batch of inputs.
    pub fn phi(&self, x: &ArrayView2<f64>) -> Result<Array2<f64>> {
        let h = self.features(x)?;
        self.rff_batch(&h.view())
    }

    /// Re-apply the spectral bound to the projection and every block.
    pub fn normalize_weights(&mut self, iterations: usize) {
        let c = self.config.spectral_norm_bound;
        self.projection.normalize(c, iterations);
        for b in &mut self.blocks {
            b.normalize(c, iterations);
        }
    }

    /// All trainable parameters in a fixed order: projection weight
    /// (row-major), projection bias, then weight and bias of each block, then
    /// `beta` (row-major). Frozen random features and the Laplace precision
    /// are not included.
    pub fn flat_parameters(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.config.num_parameters());
        for d in std::iter::once(&self.projection).chain(&self.blocks) {
            out.extend(d.weight.iter());
            out.extend(d.bias.iter());
        }
        out.extend(self.beta.iter());
        out
    }

    /// Inverse of [`flat_parameters`](Self::flat_parameters).
    pub fn set_flat_parameters(&mut self, flat: &[f64]) -> Result<()> {
        let expected = self.config.num_parameters();
        if flat.len() != expected {
            return Err(Error::shape(format!("{expected} parameters"), flat.len()));
        }
        let mut off = 0;
        let mut take = |n: usize| {
            let s = &flat[off..off + n];
            off += n;
            s
        };
        for d in std::iter::once(&mut self.projection).chain(self.blocks.iter_mut()) {
            let w = take(d.weight.len());
            d.weight.iter_mut().zip(w).for_each(|(a, b)| *a = *b);
            let b = take(d.bias.len());
            d.bias.iter_mut().zip(b).for_each(|(a, b)| *a = *b);
        }
        let b = take(self.beta.len());
        self.beta.iter_mut().zip(b).for_each(|(a, b)| *a = *b);
        Ok(())
    }

    /// Trainable parameter count, as laid out by `flat_parameters`.
    pub fn num_parameters(&self) -> usize {
        self.projection.len() + self.blocks.iter().map(Dense::len).sum::<usize>() + self.beta.len()
    }
}

#[cfg(test)]
mod tests {
    use ndarray::Array2;
    use rand::Rng;

    use super::*;
    use crate::rng::seeded;

    fn config() -> SngpConfig {
        SngpConfig {
            rff_dim: 256,
            num_classes: 3,
            seed: 5,
            ..SngpConfig::default()
        }
    }

    #[test]
    fn init_shapes() {
        let m = SngpModel::init(&config()).unwrap();
        assert_eq!(m.beta.dim(), (256, 3));
        assert!(m.beta.iter().all(|v| *v == 0.0));
        assert_eq!(m.precision.len(), 3);
        assert_eq!(m.precision[0].dim(), (256, 256));
        assert_eq!(m.blocks.len(), 3);
        assert!(m.blocks.iter().all(|b| b.weight.dim() == (64, 64)));
        assert_eq!(m.projection.weight.dim(), (64, 512));
        assert!(m.rff_bias.iter().all(|b| (0.0..std::f64::consts::PI).contains(b)));
    }

    #[test]
    fn init_is_deterministic() {
        assert_eq!(SngpModel::init(&config()).unwrap(), SngpModel::init(&config()).unwrap());
    }

    #[test]
    fn flat_parameter_layout() {
        let m = SngpModel::init(&config()).unwrap();
        let flat = m.flat_parameters();
        assert_eq!(flat.len(), 512 * 64 + 64 + 3 * (64 * 64 + 64) + 256 * 3);
        let mut other = SngpModel::init(&SngpConfig { seed: 99, ..config() }).unwrap();
        other.set_flat_parameters(&flat).unwrap();
        assert_eq!(other.flat_parameters(), flat);
        assert_eq!(other.projection.weight, m.projection.weight);
        assert!(other.set_flat_parameters(&flat[1..]).is_err());
    }

    #[test]
    fn zero_blocks_pass_projection_through() {
        let mut m = SngpModel::init(&config()).unwrap();
        for b in &mut m.blocks {
            b.weight.fill(0.0);
            b.bias.fill(0.0);
        }
        let mut rng = seeded(1);
        let x = Array2::from_shape_fn((4, 512), |_| rng.random_range(0.0..1.0));
        assert_eq!(m.features(&x.view()).unwrap(), m.project(&x.view()).unwrap());
    }

    #[test]
    fn rff_matches_scalar_loop() {
        let m = SngpModel::init(&config()).unwrap();
        let mut rng = seeded(2);
        let h: Vec<f64> = (0..64).map(|_| rng.random_range(-2.0..2.0)).collect();
        let phi = m.rff(&h).unwrap();
        let d = 256.0f64;
        for i in 0..256 {
            let mut arg = m.rff_bias[i];
            for (j, hj) in h.iter().enumerate() {
                arg -= m.rff_weight[[i, j]] * hj;
            }
            let expect = (2.0 / d).sqrt() * arg.cos();
            assert!((phi[i] - expect).abs() < 1e-9);
            assert!(phi[i].abs() <= (2.0 / d).sqrt());
        }
        let zero = m.rff(&[0.0; 64]).unwrap();
        for i in 0..256 {
            assert!((zero[i] - (2.0 / d).sqrt() * m.rff_bias[i].cos()).abs() < 1e-15);
        }
    }

    #[test]
    fn wrong_input_width_is_shape_error() {
        let m = SngpModel::init(&config()).unwrap();
        assert!(matches!(m.forward_features(&[0.0; 10]), Err(Error::Shape { .. })));
    }

    #[test]
    fn feature_distance_is_bounded_by_projected_distance() {
        let m = SngpModel::init(&config()).unwrap();
        let c = m.config.spectral_norm_bound;
        let lip = (1.0 + c).powi(m.config.num_blocks as i32);
        let mut rng = seeded(8);
        for _ in 0..200 {
            let x = Array2::from_shape_fn((2, 512), |_| rng.random_range(0.0..1.0));
            let h = m.features(&x.view()).unwrap();
            let p = m.project(&x.view()).unwrap();
            let dh = (&h.row(0) - &h.row(1)).mapv(|v| v * v).sum().sqrt();
            let dp = (&p.row(0) - &p.row(1)).mapv(|v| v * v).sum().sqrt();
            assert!(dh <= lip * dp + 1e-12, "{dh} > {lip} * {dp}");
        }
    }

    #[test]
    fn feature_distance_tracks_input_distance() {
        let m = SngpModel::init(&config()).unwrap();
        let mut rng = seeded(9);
        let (mut din, mut dout) = (Vec::new(), Vec::new());
        for _ in 0..1000 {
            let a: Vec<f64> = (0..512).map(|_| rng.random_range(0.0..1.0)).collect();
            let r = rng.random_range(0.0..2.0);
            let b: Vec<f64> = a.iter().map(|v| v + r * rng.random_range(-1.0..1.0)).collect();
            let (ha, hb) = (m.forward_features(&a).unwrap(), m.forward_features(&b).unwrap());
            din.push(a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt());
            dout.push((&ha - &hb).mapv(|v| v * v).sum().sqrt());
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let (mi, mo) = (mean(&din), mean(&dout));
        let cov: f64 = din.iter().zip(&dout).map(|(a, b)| (a - mi) * (b - mo)).sum();
        let vi: f64 = din.iter().map(|a| (a - mi) * (a - mi)).sum();
        let vo: f64 = dout.iter().map(|b| (b - mo) * (b - mo)).sum();
        let corr = cov / (vi * vo).sqrt();
        assert!(corr > 0.5, "correlation {corr}");
    }
}
