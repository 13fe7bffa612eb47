//! Zero-inflated Gamma log density, per-index log likelihoods and the overall
//! loss.

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::model::{dot, mean_from_tau, prob, Link, ModelState, Side, SideParams};
use crate::sparse::{Line, SparseCountMatrix};

/// Probabilities are clamped to `[PROB_EPS, 1 - PROB_EPS]` before logs.
pub const PROB_EPS: f64 = 1e-12;

/// Lower and upper clamp for moment estimates of the shape.
pub const SHAPE_BOUNDS: (f64, f64) = (0.1, 1e4);

/// Log likelihood split into its Bernoulli and Gamma parts.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossBreakdown {
    pub bern: f64,
    pub gamma: f64,
    pub total: f64,
}

impl LossBreakdown {
    fn new(bern: f64, gamma: f64) -> Self {
        Self {
            bern,
            gamma,
            total: bern + gamma,
        }
    }
}

#[inline]
pub fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_EPS, 1.0 - PROB_EPS)
}

/// Gamma log density with mean `mu` and shape `nu`, constants included.
#[inline]
pub fn gamma_logpdf(y: f64, mu: f64, nu: f64) -> f64 {
    let ratio = nu * y / mu;
    -ln_gamma(nu) + nu * ratio.ln() - y.ln() - ratio
}

/// Log density of one zero-inflated Gamma observation.
pub fn zig_logpdf(y: f64, p: f64, mu: f64, nu: f64) -> Result<f64> {
    if !(y >= 0.0) || !y.is_finite() {
        return Err(Error::Config(format!("observation must be non-negative, got {y}")));
    }
    if !(mu > 0.0) || !(nu > 0.0) {
        return Err(Error::Config(format!(
            "mean and shape must be positive, got mu={mu} nu={nu}"
        )));
    }
    if y == 0.0 {
        Ok((-p).ln_1p())
    } else {
        Ok(p.ln() + gamma_logpdf(y, mu, nu))
    }
}

/// Log likelihood of one row (or column) given a candidate parameter vector
/// `theta` for that index and the fixed opposite side.
///
/// `side`/`index` only label the cell in an invalid-mean error.
pub fn index_loglik(
    line: Line<'_>,
    theta: &[f64],
    other: &SideParams,
    link: Link,
    shape: f64,
    side: Side,
    index: usize,
) -> Result<LossBreakdown> {
    let d = other.dim();
    let (w, b, e) = (&theta[..d], theta[d], theta[d + 1]);
    let ob = other.bias_b();
    let oe = other.bias_e();
    let mut bern = 0.0;
    let mut gamma = 0.0;
    for (j, y) in line.dense_iter() {
        let wt = other.vector(j);
        let s = dot(w, wt);
        let p = clamp_prob(prob(s + b + ob[j]));
        if y > 0.0 {
            bern += p.ln();
            let tau = s + e + oe[j];
            let mu = mean_from_tau(link, tau).ok_or_else(|| invalid(side, index, j, tau))?;
            gamma += gamma_logpdf(y, mu, shape);
        } else {
            bern += (-p).ln_1p();
        }
    }
    Ok(LossBreakdown::new(bern, gamma))
}

pub(crate) fn invalid(side: Side, index: usize, other: usize, tau: f64) -> Error {
    let (row, col) = match side {
        Side::Row => (index, other),
        Side::Col => (other, index),
    };
    Error::InvalidMean { row, col, tau }
}

pub(crate) fn line_of(y: &SparseCountMatrix, side: Side, index: usize) -> Line<'_> {
    match side {
        Side::Row => y.row(index),
        Side::Col => y.col(index),
    }
}

pub(crate) fn check_index(state: &ModelState, side: Side, index: usize) -> Result<()> {
    let len = state.side(side).len();
    if index >= len {
        return Err(Error::BadIndex { side, index, len });
    }
    Ok(())
}

pub(crate) fn check_shapes(y: &SparseCountMatrix, state: &ModelState) -> Result<()> {
    if state.rows.len() != y.n_rows() {
        return Err(Error::DimensionMismatch {
            expected: y.n_rows(),
            found: state.rows.len(),
        });
    }
    if state.cols.len() != y.n_cols() {
        return Err(Error::DimensionMismatch {
            expected: y.n_cols(),
            found: state.cols.len(),
        });
    }
    Ok(())
}

/// Log likelihood contributed by one index of either side at the current
/// state.
pub fn side_loglik(y: &SparseCountMatrix, state: &ModelState, side: Side, index: usize) -> Result<LossBreakdown> {
    check_shapes(y, state)?;
    check_index(state, side, index)?;
    let theta = state.side(side).theta(index);
    index_loglik(
        line_of(y, side, index),
        &theta,
        state.side(side.other()),
        state.link,
        state.shape,
        side,
        index,
    )
}

pub fn row_loglik(y: &SparseCountMatrix, state: &ModelState, i: usize) -> Result<LossBreakdown> {
    side_loglik(y, state, Side::Row, i)
}

pub fn col_loglik(y: &SparseCountMatrix, state: &ModelState, j: usize) -> Result<LossBreakdown> {
    side_loglik(y, state, Side::Col, j)
}

/// Total negative log likelihood, summed over rows.
pub fn total_loss(y: &SparseCountMatrix, state: &ModelState) -> Result<f64> {
    total_loss_threaded(y, state, 1)
}

/// [`total_loss`] with the per-row pass spread over `threads` workers. The
/// final sum runs in index order, so the result does not depend on `threads`.
pub fn total_loss_threaded(y: &SparseCountMatrix, state: &ModelState, threads: usize) -> Result<f64> {
    check_shapes(y, state)?;
    let per_row = crate::par::map_indices(y.n_rows(), threads, |i| row_loglik(y, state, i));
    let mut sum = 0.0;
    for r in per_row {
        sum += r?.total;
    }
    Ok(-sum)
}

/// Negative log likelihood summed over columns instead of rows.
pub fn total_loss_by_cols(y: &SparseCountMatrix, state: &ModelState) -> Result<f64> {
    check_shapes(y, state)?;
    let mut sum = 0.0;
    for j in 0..y.n_cols() {
        sum += col_loglik(y, state, j)?.total;
    }
    Ok(-sum)
}

fn moment_shape(ratios: &[f64]) -> Result<f64> {
    if ratios.len() < 2 {
        return Err(Error::TooFewPositives);
    }
    let n = ratios.len() as f64;
    let mean = ratios.iter().sum::<f64>() / n;
    let var = ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0);
    if !(var > 0.0) {
        return Err(Error::ZeroVariance);
    }
    Ok((mean * mean / var).clamp(SHAPE_BOUNDS.0, SHAPE_BOUNDS.1))
}

/// Method-of-moments shape estimate that needs no fitted model.
///
/// Each positive entry is divided by its row's positive-entry mean and the
/// pooled ratios give `nu = mean^2 / variance`. Rows with a single positive
/// entry carry no spread information and are skipped.
pub fn estimate_shape(y: &SparseCountMatrix) -> Result<f64> {
    if y.nnz() < 2 {
        return Err(Error::TooFewPositives);
    }
    let mut ratios = Vec::with_capacity(y.nnz());
    for i in 0..y.n_rows() {
        let line = y.row(i);
        if line.nnz() < 2 {
            continue;
        }
        let mean = line.values.iter().sum::<f64>() / line.nnz() as f64;
        ratios.extend(line.values.iter().map(|v| v / mean));
    }
    moment_shape(&ratios)
}

/// Moment estimate of the shape from `y / mu_hat` at the current state's
/// fitted means.
pub fn estimate_shape_fitted(y: &SparseCountMatrix, state: &ModelState) -> Result<f64> {
    check_shapes(y, state)?;
    let mut ratios = Vec::with_capacity(y.nnz());
    for (i, j, v) in y.triples() {
        let tau = state.tau_at(i, j);
        let mu = mean_from_tau(state.link, tau).ok_or(Error::InvalidMean { row: i, col: j, tau })?;
        ratios.push(v / mu);
    }
    moment_shape(&ratios)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SideParams;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Gamma};

    /// Textbook Gamma(shape k, rate k/mu) density through statrs.
    fn oracle_gamma_ln_pdf(y: f64, mu: f64, nu: f64) -> f64 {
        use statrs::distribution::{Continuous, Gamma as SGamma};
        SGamma::new(nu, nu / mu).unwrap().ln_pdf(y)
    }

    #[test]
    fn zero_branch() {
        assert!((zig_logpdf(0.0, 0.5, 1.0, 1.0).unwrap() - 0.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn exponential_unit_case() {
        let p = 1.0 - PROB_EPS;
        let v = zig_logpdf(1.0, p, 1.0, 1.0).unwrap();
        assert!((v - (-1.0 + p.ln())).abs() < 1e-15);
    }

    #[test]
    fn matches_textbook_gamma_density() {
        let v = zig_logpdf(2.0, 0.3, 1.5, 4.0).unwrap();
        let expected = 0.3f64.ln() + oracle_gamma_ln_pdf(2.0, 1.5, 4.0);
        assert!((v - expected).abs() < 1e-12, "{v} vs {expected}");
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(zig_logpdf(-1.0, 0.5, 1.0, 1.0).is_err());
        assert!(zig_logpdf(1.0, 0.5, 0.0, 1.0).is_err());
        assert!(zig_logpdf(1.0, 0.5, 1.0, -2.0).is_err());
    }

    #[test]
    fn density_integrates_to_one() {
        // Simpson's rule on [0, 50 mu] with the y^(nu-1) singularity avoided
        // by choosing nu >= 2.
        for &(p, mu, nu) in &[(0.3, 1.5, 4.0), (0.8, 0.2, 2.0), (0.5, 3.0, 7.5)] {
            let upper = 50.0 * mu;
            let n = 200_000;
            let h = upper / n as f64;
            let f = |y: f64| {
                if y == 0.0 {
                    0.0
                } else {
                    zig_logpdf(y, p, mu, nu).unwrap().exp()
                }
            };
            let mut s = f(0.0) + f(upper);
            for k in 1..n {
                let w = if k % 2 == 1 { 4.0 } else { 2.0 };
                s += w * f(k as f64 * h);
            }
            let mass = (1.0 - p) + s * h / 3.0;
            assert!((mass - 1.0).abs() < 1e-6, "mass {mass}");
        }
    }

    fn zero_state(n: usize, d: usize) -> ModelState {
        ModelState::new(SideParams::zeros(n, d), SideParams::zeros(n, d), Link::Log, 1.0).unwrap()
    }

    #[test]
    fn all_zero_row_is_bernoulli_only() {
        let y = SparseCountMatrix::from_triples([], 4, 4).unwrap();
        let state = zero_state(4, 2);
        let r = row_loglik(&y, &state, 0).unwrap();
        assert!((r.bern - 4.0 * 0.5f64.ln()).abs() < 1e-14);
        assert_eq!(r.gamma, 0.0);
    }

    #[test]
    fn one_by_one_matches_logpdf() {
        let y = SparseCountMatrix::from_triples([(0, 0, 2.0)], 1, 1).unwrap();
        let mut state = zero_state(1, 1);
        state.shape = 3.0;
        state.rows.set_theta(0, &[0.4, 0.1, 0.2]);
        state.cols.set_theta(0, &[-0.3, 0.2, 0.1]);
        let r = row_loglik(&y, &state, 0).unwrap();
        let p = prob(-0.12 + 0.3);
        let mu = (-0.12f64 + 0.3).exp();
        let expected = zig_logpdf(2.0, p, mu, 3.0).unwrap();
        assert!((r.total - expected).abs() < 1e-13);
    }

    #[test]
    fn empty_matrix_loss() {
        let n = 6;
        let y = SparseCountMatrix::from_triples([], n, n).unwrap();
        let loss = total_loss(&y, &zero_state(n, 3)).unwrap();
        assert!((loss - (n * n) as f64 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn canonical_invalid_mean_reports_cell() {
        let y = SparseCountMatrix::from_triples([(1, 0, 1.0)], 2, 2).unwrap();
        let mut state = zero_state(2, 1);
        state.link = Link::Canonical;
        let err = total_loss(&y, &state).unwrap_err();
        assert!(matches!(err, Error::InvalidMean { row: 1, col: 0, .. }));
    }

    #[test]
    fn shape_recovered_from_one_row() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g = Gamma::new(4.0, 2.5 / 4.0).unwrap();
        let n = 100_000;
        let triples: Vec<_> = (0..n).map(|j| (0, j, g.sample(&mut rng))).collect();
        let y = SparseCountMatrix::from_triples(triples, 1, n).unwrap();
        let nu = estimate_shape(&y).unwrap();
        assert!((3.6..=4.4).contains(&nu), "nu = {nu}");
    }

    #[test]
    fn shape_errors() {
        let constant = SparseCountMatrix::from_triples([(0, 0, 2.0), (0, 1, 2.0)], 1, 2).unwrap();
        assert!(matches!(estimate_shape(&constant), Err(Error::ZeroVariance)));
        let single = SparseCountMatrix::from_triples([(0, 0, 2.0)], 1, 2).unwrap();
        assert!(matches!(estimate_shape(&single), Err(Error::TooFewPositives)));
    }
}
