//! Fits simulated data from a start that is true except for the column
//! vectors, and prints the trace.

use sazig::likelihood::total_loss;
use sazig::simulate::{generate, make_init, InitSetting, SimConfig, SimSeeds};
use sazig::trainer::{FitConfig, LrSchedule, ShapeMode};
use sazig::{fit, Init, Link};

fn main() -> sazig::Result<()> {
    let sim = SimConfig {
        n: 40,
        d: 4,
        seeds: SimSeeds::from_base(5),
        ..SimConfig::default()
    };
    let (y, truth) = generate(&sim)?;
    let init = make_init(InitSetting::TrueExceptWtilde, &truth, &sim)?;

    let config = FitConfig {
        link: Link::Log,
        lr: 0.1,
        lr_schedule: LrSchedule::PowerQuarter,
        max_iterations: 25,
        shape_mode: ShapeMode::FromInit,
        ..FitConfig::default()
    };
    let result = fit(&y, &config, Init::State(init))?;

    println!("iter        loss   |u_theta|  |u_thetat|");
    println!("{:>4} {:>11.3}", 0, result.initial_loss);
    for r in &result.trace.records {
        println!(
            "{:>4} {:>11.3} {:>11.4} {:>11.4}",
            r.iter, r.loss, r.u_theta_norm, r.u_thetat_norm
        );
    }
    println!("converged: {}", result.converged);
    println!("loss at the truth: {:.3}", total_loss(&y, &truth)?);
    for report in &result.reports {
        println!("diagnostic: {}", report.token());
    }
    Ok(())
}
