//! The saturation monitor and the separation probe on a row whose zeros and
//! positives can be split by a hyperplane, and on one where they cannot.

use sazig::diagnostics::{probe_points, saturation_monitor, SATURATION_WINDOW};

fn main() {
    // column vectors on a line; the row is positive exactly where x > 0
    let points: Vec<Vec<f64>> = (-5..=5).filter(|&k| k != 0).map(|k| vec![k as f64 / 5.0]).collect();
    let refs: Vec<&[f64]> = points.iter().map(Vec::as_slice).collect();
    let separable: Vec<bool> = points.iter().map(|p| p[0] > 0.0).collect();
    let mut mixed = separable.clone();
    mixed.swap(0, 9);
    println!("probe on separable labels: {:.3}", probe_points(&refs, &separable));
    println!("probe on overlapping labels: {:.3}", probe_points(&refs, &mixed));

    // max fitted probability as it approaches 1 during a diverging fit
    let history: Vec<f64> = (1..=8).map(|t| 1.0 - 10f64.powi(-t)).collect();
    for end in SATURATION_WINDOW..=history.len() {
        let flag = saturation_monitor(&history[..end], SATURATION_WINDOW);
        println!(
            "after {end} iterations (max p = 1 - {:.0e}): {flag}",
            1.0 - history[end - 1]
        );
    }
}
