//! A canonical-link update whose raw Fisher step would push the predictor
//! past zero. The step is halved until every mean stays positive.

use sazig::scoring::{fisher_solve, score_row};
use sazig::trainer::{update_index, FitConfig, LrSchedule};
use sazig::{Link, ModelState, Side, SideParams, SparseCountMatrix};

fn main() -> sazig::Result<()> {
    // tau = -10 at every cell while every observation equals 1
    let side = || SideParams::new(1, vec![0.0; 3], vec![0.0; 3], vec![-5.0; 3]);
    let mut state = ModelState::new(side()?, side()?, Link::Canonical, 2.0)?;
    let y = SparseCountMatrix::from_triples((0..9).map(|k| (k / 3, k % 3, 1.0)), 3, 3)?;

    let raw = fisher_solve(&score_row(&y, &state, 0)?, 0.0)?;
    println!(
        "raw Gamma-bias step: {:+.3} (tau would reach {:+.3})",
        raw[2],
        state.tau_at(0, 0) + raw[2]
    );

    let config = FitConfig {
        link: Link::Canonical,
        inner_epochs: 5,
        lr_schedule: LrSchedule::None,
        ..FitConfig::default()
    };
    let update = update_index(&y, &mut state, Side::Row, 0, 1, &config)?;
    println!(
        "epochs {}, halvings {}, rejected {}",
        update.epochs, update.halvings, update.rejected
    );
    for (k, ll) in update.loglik_path.iter().enumerate() {
        println!("  step {k}: local log likelihood {ll:.6}");
    }
    println!("tau after update: {:.6}", state.tau_at(0, 0));
    Ok(())
}
