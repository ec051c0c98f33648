//! Network definition, forward and backward passes.

use std::fmt::Debug;

use ndarray::{s, Array1, Array2, ArrayView2, Axis as NdAxis, LinalgScalar, ScalarOperand};
use num_traits::{Float, FromPrimitive, NumAssign};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Examples;
use crate::error::{NnError, Result};

pub trait Real:
    Float + FromPrimitive + NumAssign + LinalgScalar + ScalarOperand + Debug + Default + Send + Sync + std::iter::Sum + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

#[inline]
pub(crate) fn real<T: Real>(v: f64) -> T {
    T::from_f64(v).expect("representable")
}

pub const K1: usize = 4;
pub const K2: usize = 3;
/// Smallest image side the conv chain accepts with valid padding.
pub const MIN_SIDE: usize = K1 + K2 - 1;

/// Architecture hyperparameters and derived shapes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Input image as given (window depth × width).
    pub rows: usize,
    pub cols: usize,
    /// After zero padding to at least `MIN_SIDE` (bottom/right).
    pub in_rows: usize,
    pub in_cols: usize,
    pub filters: usize,
    pub dense_units: usize,
    pub dropout: f64,
    /// Training-set size the dense width was chosen for.
    pub n_t: usize,
}

impl ModelConfig {
    pub fn new(rows: usize, cols: usize, n_t: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(NnError::Shape(format!("window {rows}x{cols} is empty")));
        }
        Ok(ModelConfig {
            rows,
            cols,
            in_rows: rows.max(MIN_SIDE),
            in_cols: cols.max(MIN_SIDE),
            filters: (cols / 2).max(1),
            dense_units: dense_units_for(n_t),
            dropout: 0.2,
            n_t,
        })
    }

    pub fn conv1_out(&self) -> (usize, usize) {
        (self.in_rows - K1 + 1, self.in_cols - K1 + 1)
    }

    pub fn conv2_out(&self) -> (usize, usize) {
        let (r, c) = self.conv1_out();
        (r - K2 + 1, c - K2 + 1)
    }

    /// Odd sides are padded by one before pooling.
    pub fn pool_out(&self) -> (usize, usize) {
        let (r, c) = self.conv2_out();
        (r.div_ceil(2), c.div_ceil(2))
    }

    pub fn flat_len(&self) -> usize {
        let (r, c) = self.pool_out();
        r * c * self.filters
    }

    pub fn param_count(&self) -> usize {
        let f = self.filters;
        let n = self.dense_units;
        (K1 * K1 * f + f) + (K2 * K2 * f * f + f) + (self.flat_len() * n + n) + (n + 1)
    }
}

/// `N_n = 512·(1 + 2⌊N_t/2000⌋)`.
pub fn dense_units_for(n_t: usize) -> usize {
    512 * (1 + 2 * (n_t / 2000))
}

/// All trainable tensors. Weight matrices are `fan_in × fan_out`; conv
/// kernels are unrolled with row index `(dr·k + dc)·C_in + c_in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Params<T> {
    pub conv1_w: Array2<T>,
    pub conv1_b: Array1<T>,
    pub conv2_w: Array2<T>,
    pub conv2_b: Array1<T>,
    pub dense1_w: Array2<T>,
    pub dense1_b: Array1<T>,
    pub dense2_w: Array2<T>,
    pub dense2_b: Array1<T>,
}

impl<T: Real> Params<T> {
    pub fn zeros(cfg: &ModelConfig) -> Self {
        let f = cfg.filters;
        let n = cfg.dense_units;
        Params {
            conv1_w: Array2::zeros((K1 * K1, f)),
            conv1_b: Array1::zeros(f),
            conv2_w: Array2::zeros((K2 * K2 * f, f)),
            conv2_b: Array1::zeros(f),
            dense1_w: Array2::zeros((cfg.flat_len(), n)),
            dense1_b: Array1::zeros(n),
            dense2_w: Array2::zeros((n, 1)),
            dense2_b: Array1::zeros(1),
        }
    }

    /// Tensors in checkpoint order.
    pub fn slices(&self) -> [&[T]; 8] {
        [
            self.conv1_w.as_slice().unwrap(),
            self.conv1_b.as_slice().unwrap(),
            self.conv2_w.as_slice().unwrap(),
            self.conv2_b.as_slice().unwrap(),
            self.dense1_w.as_slice().unwrap(),
            self.dense1_b.as_slice().unwrap(),
            self.dense2_w.as_slice().unwrap(),
            self.dense2_b.as_slice().unwrap(),
        ]
    }

    pub fn slices_mut(&mut self) -> [&mut [T]; 8] {
        [
            self.conv1_w.as_slice_mut().unwrap(),
            self.conv1_b.as_slice_mut().unwrap(),
            self.conv2_w.as_slice_mut().unwrap(),
            self.conv2_b.as_slice_mut().unwrap(),
            self.dense1_w.as_slice_mut().unwrap(),
            self.dense1_b.as_slice_mut().unwrap(),
            self.dense2_w.as_slice_mut().unwrap(),
            self.dense2_b.as_slice_mut().unwrap(),
        ]
    }

    pub fn len(&self) -> usize {
        self.slices().iter().map(|s| s.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, mut i: usize) -> T {
        for s in self.slices() {
            if i < s.len() {
                return s[i];
            }
            i -= s.len();
        }
        panic!("parameter index out of range")
    }

    pub fn set(&mut self, mut i: usize, v: T) {
        for s in self.slices_mut() {
            if i < s.len() {
                s[i] = v;
                return;
            }
            i -= s.len();
        }
        panic!("parameter index out of range")
    }

    pub fn cast<U: Real>(&self) -> Params<U> {
        let c = |v: &T| U::from_f64(v.to_f64().unwrap()).unwrap();
        Params {
            conv1_w: self.conv1_w.map(c),
            conv1_b: self.conv1_b.map(c),
            conv2_w: self.conv2_w.map(c),
            conv2_b: self.conv2_b.map(c),
            dense1_w: self.dense1_w.map(c),
            dense1_b: self.dense1_b.map(c),
            dense2_w: self.dense2_w.map(c),
            dense2_b: self.dense2_b.map(c),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cnn<T> {
    pub config: ModelConfig,
    pub params: Params<T>,
}

/// Forward-pass mode. Training mode draws inverted-dropout masks from the
/// given generator unless `dropout` is false.
pub enum Mode<'a> {
    Inference,
    Train { rng: &'a mut ChaCha8Rng, dropout: bool },
}

/// Everything the backward pass needs.
pub struct Tape<T> {
    batch: usize,
    cols1: Array2<T>,
    z1: Array2<T>,
    cols2: Array2<T>,
    z2: Array2<T>,
    /// Per pooled cell and filter: flat row index into `z2`.
    argmax: Vec<usize>,
    mask1: Option<Array2<T>>,
    h: Array2<T>,
    z3: Array2<T>,
    mask2: Option<Array2<T>>,
    a3: Array2<T>,
    pub logits: Array1<T>,
}

impl<T> Tape<T> {
    /// Input of the first dense layer after dropout.
    pub fn dense_input(&self) -> &Array2<T> {
        &self.h
    }

    /// Pre-activation of the first dense layer.
    pub fn dense_pre_activation(&self) -> &Array2<T> {
        &self.z3
    }
}

fn uniform<T: Real>(rng: &mut ChaCha8Rng, shape: (usize, usize), limit: f64) -> Array2<T> {
    Array2::from_shape_simple_fn(shape, || real(rng.gen_range(-limit..limit)))
}

fn relu<T: Real>(z: &Array2<T>) -> Array2<T> {
    z.mapv(|v| if v > T::zero() { v } else { T::zero() })
}

fn relu_grad<T: Real>(d: &mut Array2<T>, z: &Array2<T>) {
    ndarray::Zip::from(d).and(z).for_each(|d, &z| {
        if z <= T::zero() {
            *d = T::zero();
        }
    });
}

pub fn sigmoid<T: Real>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

/// Binary cross-entropy of a logit against a {0, 1} target.
pub fn bce_with_logit<T: Real>(z: T, y: T) -> T {
    z.max(T::zero()) - z * y + (T::one() + (-z.abs()).exp()).ln()
}

impl<T: Real> Cnn<T> {
    /// He-uniform weights for ReLU layers, Glorot-uniform for the output
    /// layer, zero biases.
    pub fn new(config: ModelConfig, init_seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(init_seed);
        let mut p = Params::zeros(&config);
        let f = config.filters;
        let n = config.dense_units;
        let he = |fan_in: usize| (6.0 / fan_in as f64).sqrt();
        p.conv1_w = uniform(&mut rng, (K1 * K1, f), he(K1 * K1));
        p.conv2_w = uniform(&mut rng, (K2 * K2 * f, f), he(K2 * K2 * f));
        p.dense1_w = uniform(&mut rng, (config.flat_len(), n), he(config.flat_len()));
        p.dense2_w = uniform(&mut rng, (n, 1), (6.0 / (n + 1) as f64).sqrt());
        Cnn { config, params: p }
    }

    /// Input matrix for the given examples, zero padded to the network's
    /// input size.
    pub fn input_batch(&self, ex: &Examples, idx: &[usize]) -> Result<Array2<T>> {
        let c = &self.config;
        if ex.rows != c.rows || ex.cols != c.cols {
            return Err(NnError::Shape(format!(
                "model expects {}x{} images, got {}x{}",
                c.rows, c.cols, ex.rows, ex.cols
            )));
        }
        let mut x = Array2::zeros((idx.len(), c.in_rows * c.in_cols));
        for (b, &i) in idx.iter().enumerate() {
            let img = ex.image(i);
            for r in 0..c.rows {
                for col in 0..c.cols {
                    x[[b, r * c.in_cols + col]] = real(img[r * c.cols + col] as f64);
                }
            }
        }
        Ok(x)
    }

    pub fn forward(&self, x: ArrayView2<T>, mode: Mode) -> Tape<T> {
        let c = &self.config;
        let p = &self.params;
        let bsz = x.nrows();
        let f = c.filters;
        let (r1, c1) = c.conv1_out();
        let (r2, c2) = c.conv2_out();
        let (pr, pc) = c.pool_out();

        let mut cols1 = Array2::zeros((bsz * r1 * c1, K1 * K1));
        for b in 0..bsz {
            for i in 0..r1 {
                for j in 0..c1 {
                    let row = (b * r1 + i) * c1 + j;
                    for di in 0..K1 {
                        for dj in 0..K1 {
                            cols1[[row, di * K1 + dj]] = x[[b, (i + di) * c.in_cols + j + dj]];
                        }
                    }
                }
            }
        }
        let z1 = cols1.dot(&p.conv1_w) + &p.conv1_b;
        let a1 = relu(&z1);

        let mut cols2 = Array2::zeros((bsz * r2 * c2, K2 * K2 * f));
        for b in 0..bsz {
            for i in 0..r2 {
                for j in 0..c2 {
                    let row = (b * r2 + i) * c2 + j;
                    for di in 0..K2 {
                        for dj in 0..K2 {
                            let src = (b * r1 + i + di) * c1 + j + dj;
                            let dst = (di * K2 + dj) * f;
                            cols2.slice_mut(s![row, dst..dst + f]).assign(&a1.row(src));
                        }
                    }
                }
            }
        }
        let z2 = cols2.dot(&p.conv2_w) + &p.conv2_b;

        // max-pool over ReLU outputs; padding cells hold 0 and never win
        let mut h = Array2::zeros((bsz, pr * pc * f));
        let mut argmax = vec![0usize; bsz * pr * pc * f];
        for b in 0..bsz {
            for i in 0..pr {
                for j in 0..pc {
                    for k in 0..f {
                        let mut best = T::neg_infinity();
                        let mut at = 0;
                        for di in 0..2 {
                            for dj in 0..2 {
                                let (ii, jj) = (2 * i + di, 2 * j + dj);
                                if ii < r2 && jj < c2 {
                                    let row = (b * r2 + ii) * c2 + jj;
                                    let v = z2[[row, k]].max(T::zero());
                                    if v > best {
                                        best = v;
                                        at = row;
                                    }
                                }
                            }
                        }
                        let col = (i * pc + j) * f + k;
                        h[[b, col]] = best;
                        argmax[b * pr * pc * f + col] = at;
                    }
                }
            }
        }

        let (mut rng, dropout) = match mode {
            Mode::Inference => (None, false),
            Mode::Train { rng, dropout } => (Some(rng), dropout),
        };
        let mut mask = |shape: (usize, usize)| -> Option<Array2<T>> {
            if !dropout || c.dropout == 0.0 {
                return None;
            }
            let rng = rng.as_mut().expect("training mode");
            let keep = real::<T>(1.0 / (1.0 - c.dropout));
            Some(Array2::from_shape_simple_fn(shape, || {
                if rng.gen::<f64>() < c.dropout {
                    T::zero()
                } else {
                    keep
                }
            }))
        };
        let mask1 = mask(h.dim());
        if let Some(m) = &mask1 {
            h *= m;
        }
        let z3 = h.dot(&p.dense1_w) + &p.dense1_b;
        let mut a3 = relu(&z3);
        let mask2 = mask(a3.dim());
        if let Some(m) = &mask2 {
            a3 *= m;
        }
        let logits = (a3.dot(&p.dense2_w) + &p.dense2_b).column(0).to_owned();
        Tape { batch: bsz, cols1, z1, cols2, z2, argmax, mask1, h, z3, mask2, a3, logits }
    }

    /// Gradients of `Σ_b weight · dloss/dlogit_b` given `dlogits`.
    pub fn backward(&self, tape: &Tape<T>, dlogits: &Array1<T>) -> Params<T> {
        let c = &self.config;
        let p = &self.params;
        let f = c.filters;
        let (r1, c1) = c.conv1_out();
        let (r2, c2) = c.conv2_out();
        let mut g = Params::zeros(c);

        let dz4 = dlogits.view().insert_axis(NdAxis(1));
        g.dense2_w = tape.a3.t().dot(&dz4);
        g.dense2_b = dz4.sum_axis(NdAxis(0));
        let mut da3 = dz4.dot(&p.dense2_w.t());
        if let Some(m) = &tape.mask2 {
            da3 *= m;
        }
        relu_grad(&mut da3, &tape.z3);
        g.dense1_w = tape.h.t().dot(&da3);
        g.dense1_b = da3.sum_axis(NdAxis(0));
        let mut dh = da3.dot(&p.dense1_w.t());
        if let Some(m) = &tape.mask1 {
            dh *= m;
        }

        let mut dz2 = Array2::zeros(tape.z2.dim());
        let per = dh.ncols();
        for b in 0..tape.batch {
            for col in 0..per {
                let row = tape.argmax[b * per + col];
                dz2[[row, col % f]] += dh[[b, col]];
            }
        }
        relu_grad(&mut dz2, &tape.z2);
        g.conv2_w = tape.cols2.t().dot(&dz2);
        g.conv2_b = dz2.sum_axis(NdAxis(0));
        let dcols2 = dz2.dot(&p.conv2_w.t());

        let mut dz1 = Array2::zeros(tape.z1.dim());
        for b in 0..tape.batch {
            for i in 0..r2 {
                for j in 0..c2 {
                    let row = (b * r2 + i) * c2 + j;
                    for di in 0..K2 {
                        for dj in 0..K2 {
                            let dst = (b * r1 + i + di) * c1 + j + dj;
                            let src = (di * K2 + dj) * f;
                            let mut d = dz1.row_mut(dst);
                            d += &dcols2.slice(s![row, src..src + f]);
                        }
                    }
                }
            }
        }
        relu_grad(&mut dz1, &tape.z1);
        g.conv1_w = tape.cols1.t().dot(&dz1);
        g.conv1_b = dz1.sum_axis(NdAxis(0));
        for w in [&mut g.conv1_w, &mut g.conv2_w, &mut g.dense1_w, &mut g.dense2_w] {
            if !w.is_standard_layout() {
                *w = w.as_standard_layout().into_owned();
            }
        }
        g
    }

    /// Probability of label +1 for every example, in inference mode.
    pub fn predict_proba(&self, ex: &Examples) -> Result<Vec<T>> {
        let mut out = Vec::with_capacity(ex.len());
        let idx: Vec<usize> = (0..ex.len()).collect();
        for chunk in idx.chunks(256) {
            let x = self.input_batch(ex, chunk)?;
            let tape = self.forward(x.view(), Mode::Inference);
            out.extend(tape.logits.iter().map(|&z| sigmoid(z)));
        }
        Ok(out)
    }

    /// Hard ±1 decisions; probability exactly 1/2 maps to +1.
    pub fn predict(&self, ex: &Examples) -> Result<Vec<i8>> {
        Ok(self
            .predict_proba(ex)?
            .into_iter()
            .map(|p| if p >= real(0.5) { 1 } else { -1 })
            .collect())
    }

    /// Mean BCE over `idx` in inference mode.
    pub fn loss(&self, ex: &Examples, idx: &[usize]) -> Result<T> {
        let mut total = T::zero();
        for chunk in idx.chunks(256) {
            let x = self.input_batch(ex, chunk)?;
            let tape = self.forward(x.view(), Mode::Inference);
            for (&z, &i) in tape.logits.iter().zip(chunk) {
                total += bce_with_logit(z, target(ex.labels[i]));
            }
        }
        Ok(total / real(idx.len().max(1) as f64))
    }
}

/// {−1, +1} → {0, 1}.
pub fn target<T: Real>(label: i8) -> T {
    if label > 0 {
        T::one()
    } else {
        T::zero()
    }
}
