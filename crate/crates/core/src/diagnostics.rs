//! Non-convergence diagnostics for the logistic half of the model.
//!
//! When the opposite side's vectors, augmented with a constant for the bias,
//! can be split by a hyperplane into the cells observed positive and the cells
//! observed zero, the index's logistic likelihood has no finite maximizer and
//! its fitted probabilities drift towards 0/1. Two checks are provided:
//!
//! * [`saturation_monitor`] watches the largest fitted probability of an index
//!   across outer iterations;
//! * [`separation_probe`] searches for a separating direction directly.
//!
//! A probe score of 1.0 is reported as suspected separation. The search is a
//! heuristic and never a proof.

use std::fmt;

use serde::Serialize;

use crate::error::Result;
use crate::likelihood::{check_index, check_shapes, line_of};
use crate::model::{dot, prob, ModelState, Side};
use crate::sparse::SparseCountMatrix;

/// Default number of iterations inspected by the saturation monitor.
pub const SATURATION_WINDOW: usize = 5;
/// A probability of at least `1 - SATURATION_GAP` counts as saturated.
pub const SATURATION_GAP: f64 = 1e-6;
/// Largest latent dimension for which the direction grid fallback runs.
pub const GRID_MAX_DIM: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeparationFlag {
    None,
    SaturationWarning,
    SuspectedSeparation,
}

impl fmt::Display for SeparationFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SeparationFlag::None => "none",
            SeparationFlag::SaturationWarning => "saturation",
            SeparationFlag::SuspectedSeparation => "suspected-separation",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparationReport {
    pub side: Side,
    pub index: usize,
    pub max_p_history: Vec<f64>,
    pub flag: SeparationFlag,
    /// Fraction of cells correctly signed by the best direction found, when
    /// the probe ran.
    pub direction_score: Option<f64>,
    pub window: usize,
    pub saturation_gap: f64,
}

impl SeparationReport {
    /// Warning token `sep:<side>:<index>:<flag>`.
    pub fn token(&self) -> String {
        format!("sep:{}:{}:{}", self.side, self.index, self.flag)
    }
}

/// Fires when the last `window` values strictly increase and the latest one
/// reaches `1 - SATURATION_GAP`.
pub fn saturation_monitor(history: &[f64], window: usize) -> SeparationFlag {
    let window = window.max(1);
    if history.len() < window {
        return SeparationFlag::None;
    }
    let tail = &history[history.len() - window..];
    let increasing = tail.windows(2).all(|w| w[1] > w[0]);
    let last = *tail.last().unwrap();
    if increasing && last >= 1.0 - SATURATION_GAP {
        SeparationFlag::SaturationWarning
    } else {
        SeparationFlag::None
    }
}

/// Largest fitted Bernoulli probability over the index's cells.
pub fn max_prob(y: &SparseCountMatrix, state: &ModelState, side: Side, index: usize) -> f64 {
    let own = state.side(side);
    let other = state.side(side.other());
    let w = own.vector(index);
    let b = own.bias_b()[index];
    let len = match side {
        Side::Row => y.n_cols(),
        Side::Col => y.n_rows(),
    };
    (0..len)
        .map(|j| prob(dot(w, other.vector(j)) + b + other.bias_b()[j]))
        .fold(0.0, f64::max)
}

/// Searches for a direction separating the positive cells of an index from
/// its zero cells, using the opposite side's vectors augmented with a
/// constant 1. Returns the best fraction of strictly correctly signed cells.
/// An index with no zeros or no positives is trivially separated (1.0).
pub fn separation_probe(y: &SparseCountMatrix, state: &ModelState, index: usize, side: Side) -> Result<f64> {
    check_shapes(y, state)?;
    check_index(state, side, index)?;
    let other = state.side(side.other());
    let line = line_of(y, side, index);
    let points: Vec<&[f64]> = (0..line.len).map(|j| other.vector(j)).collect();
    let mut labels = vec![false; line.len];
    for (j, _) in line.iter() {
        labels[j] = true;
    }
    Ok(probe_points(&points, &labels))
}

/// [`separation_probe`] on explicit points and labels (`true` = positive).
pub fn probe_points(points: &[&[f64]], labels: &[bool]) -> f64 {
    assert_eq!(points.len(), labels.len());
    let n = points.len();
    let n_pos = labels.iter().filter(|&&l| l).count();
    if n == 0 || n_pos == 0 || n_pos == n {
        return 1.0;
    }
    let best = perceptron(points, labels);
    if best >= 1.0 {
        return 1.0;
    }
    let d = points[0].len();
    if d <= GRID_MAX_DIM {
        best.max(grid_search(points, labels))
    } else {
        best
    }
}

fn signed_fraction(points: &[&[f64]], labels: &[bool], w: &[f64], c0: f64) -> f64 {
    let correct = points
        .iter()
        .zip(labels)
        .filter(|(x, &l)| {
            let z = dot(x, w) + c0;
            if l {
                z > 0.0
            } else {
                z < 0.0
            }
        })
        .count();
    correct as f64 / points.len() as f64
}

/// Capped perceptron (10 n passes) over augmented points; keeps the best
/// direction seen at the end of each pass.
fn perceptron(points: &[&[f64]], labels: &[bool]) -> f64 {
    let n = points.len();
    let d = points[0].len();
    let mut w = vec![0.0; d];
    let mut c0 = 0.0;
    let mut best = 0.0f64;
    for _ in 0..10 * n {
        let mut mistakes = 0;
        for (x, &l) in points.iter().zip(labels) {
            let s = if l { 1.0 } else { -1.0 };
            if s * (dot(x, &w) + c0) <= 0.0 {
                for (wa, xa) in w.iter_mut().zip(x.iter()) {
                    *wa += s * xa;
                }
                c0 += s;
                mistakes += 1;
            }
        }
        if mistakes == 0 {
            return 1.0;
        }
        best = best.max(signed_fraction(points, labels, &w, c0));
    }
    best
}

/// Best correctly-signed fraction over a grid of unit directions, with the
/// intercept chosen optimally for each direction.
fn grid_search(points: &[&[f64]], labels: &[bool]) -> f64 {
    let d = points[0].len();
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n = labels.len();
    // intercept-only direction
    let mut best = n_pos.max(n - n_pos) as f64 / n as f64;
    let mut eval = |u: &[f64]| {
        best = best.max(best_threshold(points, labels, u));
    };
    match d {
        0 => {}
        1 => {
            eval(&[1.0]);
            eval(&[-1.0]);
        }
        2 => {
            for k in 0..3600 {
                let a = k as f64 * std::f64::consts::TAU / 3600.0;
                eval(&[a.cos(), a.sin()]);
            }
        }
        3 => {
            for i in 0..=180 {
                let theta = i as f64 * std::f64::consts::PI / 180.0;
                for k in 0..360 {
                    let phi = k as f64 * std::f64::consts::TAU / 360.0;
                    eval(&[theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]);
                }
            }
        }
        _ => unreachable!("grid search only runs for d <= {GRID_MAX_DIM}"),
    }
    best
}

/// For projections `z = u . x`, the best count of `z > t` on positives plus
/// `z < t` on zeros over all thresholds `t`.
fn best_threshold(points: &[&[f64]], labels: &[bool], u: &[f64]) -> f64 {
    let n = points.len();
    let mut z: Vec<(f64, bool)> = points.iter().zip(labels).map(|(x, &l)| (dot(x, u), l)).collect();
    z.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n_pos = labels.iter().filter(|&&l| l).count();
    // threshold below everything: all positives correct, no zeros
    let mut best = n_pos;
    let mut zeros_below = 0;
    let mut pos_below = 0;
    let mut k = 0;
    while k < n {
        // consume one group of equal projections, then place t just above it
        let v = z[k].0;
        let mut zeros_at = 0;
        let mut pos_at = 0;
        while k < n && z[k].0 == v {
            if z[k].1 {
                pos_at += 1;
            } else {
                zeros_at += 1;
            }
            k += 1;
        }
        zeros_below += zeros_at;
        pos_below += pos_at;
        best = best.max(zeros_below + (n_pos - pos_below));
    }
    best as f64 / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn saturation_examples() {
        assert_eq!(
            saturation_monitor(&[0.9, 0.99, 0.999, 0.9999, 0.999999], 5),
            SeparationFlag::SaturationWarning
        );
        assert_eq!(
            saturation_monitor(&[0.999999, 0.5, 0.999999, 0.5, 0.999999], 5),
            SeparationFlag::None
        );
        assert_eq!(saturation_monitor(&[0.3, 0.4, 0.5, 0.6, 0.7], 5), SeparationFlag::None);
        assert_eq!(saturation_monitor(&[0.9999999], 5), SeparationFlag::None);
    }

    #[test]
    fn separable_line() {
        let pts: Vec<Vec<f64>> = vec![vec![1.0], vec![1.0], vec![-1.0], vec![-1.0]];
        let refs: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
        assert_eq!(probe_points(&refs, &[true, true, false, false]), 1.0);
    }

    #[test]
    fn identical_points_overlap() {
        let pts: Vec<Vec<f64>> = vec![vec![0.3, 0.1], vec![0.3, 0.1], vec![-1.0, 2.0]];
        let refs: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
        assert!(probe_points(&refs, &[true, false, false]) < 1.0);
    }

    #[test]
    fn single_class_is_trivially_separated() {
        let pts: Vec<Vec<f64>> = vec![vec![0.3], vec![-0.2]];
        let refs: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
        assert_eq!(probe_points(&refs, &[true, true]), 1.0);
        assert_eq!(probe_points(&refs, &[false, false]), 1.0);
    }

    #[test]
    fn threshold_scan_counts_ties_once() {
        let pts: Vec<Vec<f64>> = vec![vec![0.0], vec![0.0], vec![1.0]];
        let refs: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
        // zero and positive share a projection; best split gets 2 of 3
        let f = best_threshold(&refs, &[false, true, true], &[1.0]);
        assert!((f - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn token_format() {
        let r = SeparationReport {
            side: Side::Col,
            index: 7,
            max_p_history: vec![],
            flag: SeparationFlag::SuspectedSeparation,
            direction_score: Some(1.0),
            window: 5,
            saturation_gap: SATURATION_GAP,
        };
        assert_eq!(r.token(), "sep:col:7:suspected-separation");
    }
}
