//! Runs undamped and `lr / t^(1/4)` damped fits from random starts and
//! compares how the loss and score norms evolve.

use sazig::simulate::{generate, make_init, InitSetting, SimConfig, SimSeeds};
use sazig::trainer::{FitConfig, FitResult, LrSchedule, ShapeMode};
use sazig::{fit, Init};

fn run(schedule: LrSchedule, seed: u64) -> sazig::Result<FitResult> {
    let sim = SimConfig {
        n: 60,
        d: 8,
        seeds: SimSeeds::from_base(seed),
        ..SimConfig::default()
    };
    let (y, truth) = generate(&sim)?;
    let init = make_init(InitSetting::AllRandom, &truth, &sim)?;
    let config = FitConfig {
        lr: 0.1,
        lr_schedule: schedule,
        max_iterations: 60,
        epsilon: 0.0,
        shape_mode: ShapeMode::FromInit,
        diagnostics: false,
        ..FitConfig::default()
    };
    fit(&y, &config, Init::State(init))
}

fn summary(result: &sazig::Result<FitResult>) -> String {
    match result {
        Err(e) => format!("aborted: {e}"),
        Ok(r) => {
            let norms: Vec<f64> = r
                .trace
                .records
                .iter()
                .map(|x| x.u_theta_norm.hypot(x.u_thetat_norm))
                .collect();
            let min = norms.iter().cloned().fold(f64::INFINITY, f64::min);
            let ups = r.trace.losses().windows(2).filter(|w| w[1] > w[0]).count();
            format!(
                "loss {:.1} -> {:.1}, {ups} increases, final norm {:.1} ({:.1}x its minimum)",
                r.initial_loss,
                r.final_loss(),
                norms.last().unwrap(),
                norms.last().unwrap() / min
            )
        }
    }
}

fn main() -> sazig::Result<()> {
    for seed in 1..=3 {
        println!("seed {seed}");
        println!("  undamped:      {}", summary(&run(LrSchedule::None, seed)));
        println!("  power-quarter: {}", summary(&run(LrSchedule::PowerQuarter, seed)));
    }
    Ok(())
}
