//! Score vectors and expected information for one index's parameters.
//!
//! Coordinates are ordered `(w_1..w_d, b, e)`. The Bernoulli part sums over
//! every opposite index; the Gamma part only over positive cells, where the
//! information is the expectation conditional on the cell being positive.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::likelihood::{check_index, check_shapes, invalid, line_of};
use crate::model::{dot, prob, Link, ModelState, Side, SideParams};
use crate::sparse::{Line, SparseCountMatrix};

/// Number of ridge escalations attempted by [`fisher_solve`].
pub const RIDGE_RETRIES: usize = 4;

/// Score `u` and expected information `s` for one index.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreBlock {
    pub u: DVector<f64>,
    pub s: DMatrix<f64>,
    /// Number of positive cells behind the Gamma terms.
    pub n_positive: usize,
}

impl ScoreBlock {
    pub fn dim(&self) -> usize {
        self.u.len() - 2
    }

    /// Default ridge: `1e-8 * trace(s) / (d + 2)`.
    pub fn default_ridge(&self) -> f64 {
        1e-8 * self.s.trace() / self.s.nrows() as f64
    }
}

/// Score and information of `theta` for one row/column against the fixed
/// opposite side.
pub fn index_score(
    line: Line<'_>,
    theta: &[f64],
    other: &SideParams,
    link: Link,
    shape: f64,
    side: Side,
    index: usize,
) -> Result<ScoreBlock> {
    let d = other.dim();
    let k = d + 2;
    let (w, b, e) = (&theta[..d], theta[d], theta[d + 1]);
    let (ib, ie) = (d, d + 1);
    let ob = other.bias_b();
    let oe = other.bias_e();
    let mut u = DVector::<f64>::zeros(k);
    let mut s = DMatrix::<f64>::zeros(k, k);

    for (j, y) in line.dense_iter() {
        let wt = other.vector(j);
        let dp = dot(w, wt);
        let p = prob(dp + b + ob[j]);
        let g = if y > 0.0 { 1.0 } else { 0.0 };

        let resid = g - p;
        let var = p * (1.0 - p);
        for a in 0..d {
            u[a] += resid * wt[a];
            s[(ib, a)] += var * wt[a];
            for c in 0..=a {
                s[(a, c)] += var * wt[a] * wt[c];
            }
        }
        u[ib] += resid;
        s[(ib, ib)] += var;

        if y > 0.0 {
            let tau = dp + e + oe[j];
            let (r2, c2) = match link {
                Link::Canonical => {
                    if tau >= 0.0 {
                        return Err(invalid(side, index, j, tau));
                    }
                    (shape * (1.0 / tau + y), shape / (tau * tau))
                }
                Link::Log => {
                    let mu = tau.exp();
                    if !mu.is_finite() || mu <= 0.0 {
                        return Err(invalid(side, index, j, tau));
                    }
                    (shape * (y - mu) / mu, shape)
                }
            };
            for a in 0..d {
                u[a] += r2 * wt[a];
                s[(ie, a)] += c2 * wt[a];
                for c in 0..=a {
                    s[(a, c)] += c2 * wt[a] * wt[c];
                }
            }
            u[ie] += r2;
            s[(ie, ie)] += c2;
        }
    }

    // only the lower triangle was accumulated
    for a in 0..k {
        for c in 0..a {
            s[(c, a)] = s[(a, c)];
        }
    }

    Ok(ScoreBlock {
        u,
        s,
        n_positive: line.nnz(),
    })
}

pub fn score_side(y: &SparseCountMatrix, state: &ModelState, side: Side, index: usize) -> Result<ScoreBlock> {
    check_shapes(y, state)?;
    check_index(state, side, index)?;
    let theta = state.side(side).theta(index);
    index_score(
        line_of(y, side, index),
        &theta,
        state.side(side.other()),
        state.link,
        state.shape,
        side,
        index,
    )
}

pub fn score_row(y: &SparseCountMatrix, state: &ModelState, i: usize) -> Result<ScoreBlock> {
    score_side(y, state, Side::Row, i)
}

pub fn score_col(y: &SparseCountMatrix, state: &ModelState, j: usize) -> Result<ScoreBlock> {
    score_side(y, state, Side::Col, j)
}

/// Solves `(s + ridge I) delta = u` by Cholesky. On failure the ridge is
/// multiplied by ten, up to [`RIDGE_RETRIES`] times.
pub fn fisher_solve(block: &ScoreBlock, ridge: f64) -> Result<DVector<f64>> {
    solve_spd(&block.s, &block.u, ridge)
}

/// Like [`fisher_solve`] but with the Gamma bias coordinate held fixed
/// (its step is zero). Used for indices without positive cells, where that
/// coordinate is unidentified.
pub fn fisher_solve_frozen_e(block: &ScoreBlock, ridge: f64) -> Result<DVector<f64>> {
    let k = block.u.len() - 1;
    let s = block.s.view((0, 0), (k, k)).into_owned();
    let u = block.u.rows(0, k).into_owned();
    let reduced = solve_spd(&s, &u, ridge)?;
    let mut step = DVector::zeros(k + 1);
    step.rows_mut(0, k).copy_from(&reduced);
    Ok(step)
}

fn solve_spd(s: &DMatrix<f64>, u: &DVector<f64>, ridge: f64) -> Result<DVector<f64>> {
    let k = s.nrows();
    let floor = f64::EPSILON * (1.0 + s.diagonal().amax());
    let mut lambda = ridge.max(0.0);
    for attempt in 0..=RIDGE_RETRIES {
        let mut m = s.clone();
        for a in 0..k {
            m[(a, a)] += lambda;
        }
        if let Some(chol) = m.cholesky() {
            let delta = chol.solve(u);
            if delta.iter().all(|v| v.is_finite()) {
                return Ok(delta);
            }
        }
        if attempt < RIDGE_RETRIES {
            lambda = (lambda * 10.0).max(floor);
        }
    }
    Err(Error::SingularInformation)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn block(s: DMatrix<f64>, u: DVector<f64>) -> ScoreBlock {
        ScoreBlock { u, s, n_positive: 0 }
    }

    #[test]
    fn identity_solve() {
        let b = block(DMatrix::identity(4, 4), DVector::from_element(4, 1.0));
        let delta = fisher_solve(&b, 0.0).unwrap();
        assert_eq!(delta, DVector::from_element(4, 1.0));
    }

    #[test]
    fn zero_information_uses_ridge() {
        let u = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let b = block(DMatrix::zeros(3, 3), u.clone());
        let delta = fisher_solve(&b, 1e-8).unwrap();
        for (got, want) in delta.iter().zip((u / 1e-8).iter()) {
            assert!((got - want).abs() <= 1e-6 * want.abs());
        }
    }

    #[test]
    fn zero_information_zero_ridge_escalates() {
        let b = block(DMatrix::zeros(3, 3), DVector::from_element(3, 1.0));
        assert!(fisher_solve(&b, 0.0).is_ok());
    }

    #[test]
    fn indefinite_matrix_is_singular() {
        let mut s = DMatrix::identity(3, 3);
        s[(0, 0)] = -1e6;
        let b = block(s, DVector::from_element(3, 1.0));
        assert!(matches!(fisher_solve(&b, 0.0), Err(Error::SingularInformation)));
    }

    #[test]
    fn random_spd_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let k = rng.random_range(2..9);
            let a = DMatrix::from_fn(k, k, |_, _| rng.random_range(-1.0..1.0));
            let s = &a * a.transpose() + DMatrix::identity(k, k) * 0.1;
            let u = DVector::from_fn(k, |_, _| rng.random_range(-1.0..1.0));
            let delta = fisher_solve(&block(s.clone(), u.clone()), 0.0).unwrap();
            let resid = (&s * &delta - &u).norm() / u.norm();
            assert!(resid < 1e-10, "{resid}");
        }
    }

    #[test]
    fn frozen_e_leaves_last_coordinate() {
        let s = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 4.0, 0.0]));
        let b = block(s, DVector::from_vec(vec![2.0, 2.0, 5.0]));
        let step = fisher_solve_frozen_e(&b, 0.0).unwrap();
        for (got, want) in step.iter().zip([1.0, 0.5, 0.0]) {
            assert!((got - want).abs() < 1e-15);
        }
        assert_eq!(step[2], 0.0);
    }

    #[test]
    fn calibrated_row_has_zero_score() {
        // Two columns with p = 0.5 whose Bernoulli residuals cancel.
        let y = SparseCountMatrix::from_triples([(0, 0, 1.0)], 1, 2).unwrap();
        let mut rows = SideParams::zeros(1, 1);
        rows.set_theta(0, &[0.0, 0.0, 0.0]);
        let mut cols = SideParams::zeros(2, 1);
        cols.set_theta(0, &[0.0, 0.0, 0.0]);
        cols.set_theta(1, &[0.0, 0.0, 0.0]);
        let state = ModelState::new(rows, cols, Link::Log, 2.0).unwrap();
        // y = mu = 1 at tau = 0, so the Gamma residual is zero too.
        let sb = score_row(&y, &state, 0).unwrap();
        assert!(sb.u.iter().all(|v| v.abs() < 1e-15), "{:?}", sb.u);
    }

    #[test]
    fn log_link_zero_residual_cell() {
        let y = SparseCountMatrix::from_triples([(0, 0, 0.5f64.exp())], 1, 1).unwrap();
        let mut rows = SideParams::zeros(1, 2);
        rows.set_theta(0, &[0.5, 0.25, 0.1, 0.2]);
        let mut cols = SideParams::zeros(1, 2);
        cols.set_theta(0, &[1.0, -2.0, 0.3, 0.3]);
        let state = ModelState::new(rows, cols, Link::Log, 3.0).unwrap();
        assert!((state.tau_at(0, 0) - 0.5).abs() < 1e-15);
        let sb = score_row(&y, &state, 0).unwrap();
        let p = prob(state.eta_at(0, 0));
        let wt = [1.0, -2.0];
        // Gamma part of u is zero, so u equals the Bernoulli part alone.
        for (a, w) in wt.iter().enumerate() {
            assert!((sb.u[a] - (1.0 - p) * w).abs() < 1e-12);
        }
        assert!(sb.u[3].abs() < 1e-12);
        // Gamma S_ww block = nu * w~ w~^T, on top of p(1-p) w~ w~^T.
        for a in 0..2 {
            for c in 0..2 {
                let want = (3.0 + p * (1.0 - p)) * wt[a] * wt[c];
                assert!((sb.s[(a, c)] - want).abs() < 1e-12);
            }
        }
        assert_eq!(sb.s[(2, 3)], 0.0);
        assert_eq!(sb.s[(3, 2)], 0.0);
    }

    #[test]
    fn canonical_rejects_nonnegative_tau() {
        let y = SparseCountMatrix::from_triples([(0, 0, 1.0)], 1, 1).unwrap();
        let state = ModelState::new(SideParams::zeros(1, 1), SideParams::zeros(1, 1), Link::Canonical, 1.0).unwrap();
        assert!(matches!(score_row(&y, &state, 0), Err(Error::InvalidMean { .. })));
    }
}
