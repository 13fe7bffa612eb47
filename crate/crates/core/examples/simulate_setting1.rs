//! Simulates a small dataset and reports what it looks like.
//!
//! ```text
//! cargo run --example simulate_setting1 -- [n] [d] [seed]
//! ```

use sazig::likelihood::{estimate_shape, total_loss};
use sazig::simulate::{generate, make_init, InitSetting, SimConfig, SimSeeds};

fn main() -> sazig::Result<()> {
    let mut args = std::env::args()
        .skip(1)
        .map(|a| a.parse::<u64>().expect("integer argument"));
    let n = args.next().unwrap_or(60) as usize;
    let d = args.next().unwrap_or(8) as usize;
    let seed = args.next().unwrap_or(1);

    let config = SimConfig {
        n,
        d,
        seeds: SimSeeds::from_base(seed),
        ..SimConfig::default()
    };
    let (y, truth) = generate(&config)?;
    println!(
        "{n} x {n} matrix, d = {d}, {} positive cells ({:.1}%)",
        y.nnz(),
        100.0 * y.density()?
    );

    let values: Vec<f64> = y.triples().map(|t| t.2).collect();
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let max = values.iter().cloned().fold(0.0, f64::max);
    println!("positive values: mean {mean:.3}, max {max:.3}");
    println!(
        "moment estimate of the shape: {:.3} (true {})",
        estimate_shape(&y)?,
        config.shape
    );

    for setting in [InitSetting::TrueExceptWtilde, InitSetting::AllRandom] {
        let init = make_init(setting, &truth, &config)?;
        println!("loss at {setting:?} start: {:.3}", total_loss(&y, &init)?);
    }
    println!("loss at the truth: {:.3}", total_loss(&y, &truth)?);
    Ok(())
}
