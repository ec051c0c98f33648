use mipt_nn::model::{sigmoid, Mode, K1, K2};
use mipt_nn::{Cnn, Examples, ModelConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Scalar forward pass written directly from the layer definitions.
fn naive_forward(m: &Cnn<f64>, img: &[i8]) -> f64 {
    let c = &m.config;
    let p = &m.params;
    let f = c.filters;
    let mut x = vec![vec![0.0; c.in_cols]; c.in_rows];
    for r in 0..c.rows {
        for k in 0..c.cols {
            x[r][k] = img[r * c.cols + k] as f64;
        }
    }
    let (r1, c1) = (c.in_rows - K1 + 1, c.in_cols - K1 + 1);
    let mut a1 = vec![vec![vec![0.0; f]; c1]; r1];
    for i in 0..r1 {
        for j in 0..c1 {
            for o in 0..f {
                let mut s = p.conv1_b[o];
                for di in 0..K1 {
                    for dj in 0..K1 {
                        s += x[i + di][j + dj] * p.conv1_w[[di * K1 + dj, o]];
                    }
                }
                a1[i][j][o] = s.max(0.0);
            }
        }
    }
    let (r2, c2) = (r1 - K2 + 1, c1 - K2 + 1);
    let mut a2 = vec![vec![vec![0.0; f]; c2]; r2];
    for i in 0..r2 {
        for j in 0..c2 {
            for o in 0..f {
                let mut s = p.conv2_b[o];
                for di in 0..K2 {
                    for dj in 0..K2 {
                        for ci in 0..f {
                            s += a1[i + di][j + dj][ci] * p.conv2_w[[(di * K2 + dj) * f + ci, o]];
                        }
                    }
                }
                a2[i][j][o] = s.max(0.0);
            }
        }
    }
    let (pr, pc) = (r2.div_ceil(2), c2.div_ceil(2));
    let mut flat = Vec::new();
    for i in 0..pr {
        for j in 0..pc {
            for o in 0..f {
                let mut best = 0.0f64;
                for di in 0..2 {
                    for dj in 0..2 {
                        if 2 * i + di < r2 && 2 * j + dj < c2 {
                            best = best.max(a2[2 * i + di][2 * j + dj][o]);
                        }
                    }
                }
                flat.push(best);
            }
        }
    }
    let mut out = p.dense2_b[0];
    for u in 0..c.dense_units {
        let mut s = p.dense1_b[u];
        for (k, v) in flat.iter().enumerate() {
            s += v * p.dense1_w[[k, u]];
        }
        out += s.max(0.0) * p.dense2_w[[u, 0]];
    }
    sigmoid(out)
}

#[test]
fn vectorized_forward_matches_scalar_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for trial in 0..20 {
        let rows = rng.gen_range(1..12);
        let cols = rng.gen_range(1..14);
        let mut cfg = ModelConfig::new(rows, cols, 100).unwrap();
        cfg.dense_units = 40;
        let mut m = Cnn::<f64>::new(cfg, trial);
        for s in m.params.slices_mut() {
            for v in s.iter_mut() {
                *v = rng.gen_range(-0.5..0.5);
            }
        }
        let n = 5;
        let images: Vec<i8> = (0..n * rows * cols).map(|_| rng.gen_range(-1..=1)).collect();
        let ex = Examples::new(rows, cols, images, vec![1; n]).unwrap();
        let fast = m.predict_proba(&ex).unwrap();
        for (i, &p) in fast.iter().enumerate() {
            let slow = naive_forward(&m, ex.image(i));
            assert!((p - slow).abs() <= 1e-6 * slow.abs(), "trial {trial}: {p} vs {slow}");
        }
    }
}

#[test]
fn constant_image_pools_to_constant() {
    // positive constant input, identity-like kernels: every pooled cell equal
    let mut cfg = ModelConfig::new(9, 9, 10).unwrap();
    cfg.dense_units = 1;
    let mut m = Cnn::<f64>::new(cfg, 0);
    m.params.conv1_w.fill(0.1);
    m.params.conv2_w.fill(0.1);
    let ex = Examples::new(9, 9, vec![1; 81], vec![1]).unwrap();
    let x = m.input_batch(&ex, &[0]).unwrap();
    let tape = m.forward(x.view(), Mode::Inference);
    let h = tape.dense_input();
    assert!(h.iter().all(|&v| (v - h[[0, 0]]).abs() < 1e-12));
    assert!(h[[0, 0]] > 0.0);
}
