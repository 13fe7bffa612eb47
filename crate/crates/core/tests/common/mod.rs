#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sazig::{Link, ModelState, Side, SideParams, SparseCountMatrix};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_vec(rng: &mut ChaCha8Rng, len: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(lo..hi)).collect()
}

/// Random parameters. Canonical states get negative Gamma biases so every
/// predictor stays well below zero.
pub fn random_state(rng: &mut ChaCha8Rng, n_rows: usize, n_cols: usize, d: usize, link: Link) -> ModelState {
    let (e_lo, e_hi) = match link {
        Link::Log => (-0.5, 0.5),
        Link::Canonical => (-2.0, -1.0),
    };
    let side = |rng: &mut ChaCha8Rng, n: usize| {
        SideParams::new(
            d,
            uniform_vec(rng, n * d, -0.4, 0.4),
            uniform_vec(rng, n, -0.5, 0.5),
            uniform_vec(rng, n, e_lo, e_hi),
        )
        .unwrap()
    };
    let rows = side(rng, n_rows);
    let cols = side(rng, n_cols);
    let shape = rng.random_range(0.5..5.0);
    ModelState::new(rows, cols, link, shape).unwrap()
}

/// Random zero pattern with positive values spread over a few orders of
/// magnitude.
pub fn random_matrix(rng: &mut ChaCha8Rng, n_rows: usize, n_cols: usize, density: f64) -> SparseCountMatrix {
    let mut triples = Vec::new();
    for i in 0..n_rows {
        for j in 0..n_cols {
            if rng.random::<f64>() < density {
                triples.push((i, j, 10f64.powf(rng.random_range(-1.0..1.0))));
            }
        }
    }
    SparseCountMatrix::from_triples(triples, n_rows, n_cols).unwrap()
}

/// Copy of `state` with the parameters of one index replaced.
pub fn with_theta(state: &ModelState, side: Side, index: usize, theta: &[f64]) -> ModelState {
    let mut s = state.clone();
    s.side_mut(side).set_theta(index, theta);
    s
}

pub fn loglik(y: &SparseCountMatrix, state: &ModelState, side: Side, index: usize) -> f64 {
    match side {
        Side::Row => sazig::likelihood::row_loglik(y, state, index).unwrap().total,
        Side::Col => sazig::likelihood::col_loglik(y, state, index).unwrap().total,
    }
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(1.0)
}

/// Brute-force co-occurrence: every position pair `p < q` of a sentence.
pub fn brute_force_cooccur(sentences: &[Vec<String>], vocab: &sazig::cooccur::Vocabulary, k: usize) -> Vec<Vec<f64>> {
    let v = vocab.len();
    let mut y = vec![vec![0.0; v]; v];
    for s in sentences {
        for p in 0..s.len() {
            for q in p + 1..s.len() {
                let sep = q - p;
                if sep > k {
                    continue;
                }
                let (Some(a), Some(b)) = (vocab.index_of(&s[p]), vocab.index_of(&s[q])) else {
                    continue;
                };
                if a != b {
                    y[a][b] += 1.0 / sep as f64;
                    y[b][a] += 1.0 / sep as f64;
                }
            }
        }
    }
    y
}

/// Random corpus over a skewed vocabulary of `n_words` words.
pub fn random_corpus(rng: &mut ChaCha8Rng, n_words: usize, max_tokens: usize) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    let mut total = 0;
    while total < max_tokens {
        let len = rng.random_range(0..40usize).min(max_tokens - total);
        let s: Vec<String> = (0..len)
            .map(|_| {
                // squaring a uniform favors low word ids
                let u: f64 = rng.random();
                format!("w{}", (u * u * n_words as f64) as usize)
            })
            .collect();
        total += len.max(1);
        out.push(s);
    }
    out
}

/// Random orthogonal matrix from the QR factorization of a Gaussian-ish matrix.
pub fn random_rotation(rng: &mut ChaCha8Rng, d: usize) -> nalgebra::DMatrix<f64> {
    let a = nalgebra::DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
    a.qr().q()
}

/// Applies `q` to every latent vector of both sides.
pub fn rotate(state: &ModelState, q: &nalgebra::DMatrix<f64>) -> ModelState {
    let mut s = state.clone();
    let d = state.dim();
    for side in [Side::Row, Side::Col] {
        let params = s.side_mut(side);
        for i in 0..params.len() {
            let v = nalgebra::DVector::from_column_slice(params.vector(i));
            let r = q.transpose() * v;
            params.vector_mut(i).copy_from_slice(&r.as_slice()[..d]);
        }
    }
    s
}
