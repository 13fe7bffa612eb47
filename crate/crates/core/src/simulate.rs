//! Synthetic log-link datasets with known parameters.
//!
//! Parameters are drawn from independent uniforms, then every cell draws a
//! Bernoulli indicator with `p = logistic(w_i . w~_j + b_i + b~_j)` and, when
//! positive, a Gamma value with shape `nu` and mean `exp(w_i . w~_j + e_i + e~_j)`.

use rand::distr::{Distribution, Uniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Gamma;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{check_shape, Link, ModelState, SideParams};
use crate::sparse::SparseCountMatrix;

/// Named seeds, one per random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SimSeeds {
    /// True parameter values.
    pub params: u64,
    /// Bernoulli indicators and Gamma draws.
    pub data: u64,
    /// Random initial values.
    pub init: u64,
}

impl SimSeeds {
    pub fn from_base(seed: u64) -> Self {
        Self {
            params: seed,
            data: seed.wrapping_add(1),
            init: seed.wrapping_add(2),
        }
    }
}

impl Default for SimSeeds {
    fn default() -> Self {
        Self::from_base(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimConfig {
    pub n: usize,
    pub d: usize,
    pub shape: f64,
    pub w_range: (f64, f64),
    pub b_range: (f64, f64),
    pub e_range: (f64, f64),
    /// Use the same vectors for rows and columns.
    pub tie_sides: bool,
    pub seeds: SimSeeds,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n: 300,
            d: 50,
            shape: 4.0,
            w_range: (-0.25, 0.25),
            b_range: (0.0, 0.05),
            e_range: (0.1, 0.35),
            tie_sides: true,
            seeds: SimSeeds::default(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.d == 0 {
            return Err(Error::Config("n and d must be at least 1".into()));
        }
        check_shape(self.shape)?;
        for (name, (lo, hi)) in [("w", self.w_range), ("b", self.b_range), ("e", self.e_range)] {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::Config(format!(
                    "{name} range ({lo}, {hi}) is not a valid interval"
                )));
            }
        }
        Ok(())
    }
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64), len: usize) -> Vec<f64> {
    let u = Uniform::new(lo, hi).expect("validated range");
    (0..len).map(|_| u.sample(rng)).collect()
}

/// Draws true parameters and a matrix from them.
pub fn generate(config: &SimConfig) -> Result<(SparseCountMatrix, ModelState)> {
    config.validate()?;
    let (n, d) = (config.n, config.d);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seeds.params);
    let w = uniform(&mut rng, config.w_range, n * d);
    let wt = if config.tie_sides {
        w.clone()
    } else {
        uniform(&mut rng, config.w_range, n * d)
    };
    let b = uniform(&mut rng, config.b_range, n);
    let bt = uniform(&mut rng, config.b_range, n);
    let e = uniform(&mut rng, config.e_range, n);
    let et = uniform(&mut rng, config.e_range, n);
    let truth = ModelState::new(
        SideParams::new(d, w, b, e)?,
        SideParams::new(d, wt, bt, et)?,
        Link::Log,
        config.shape,
    )?;
    let y = sample_matrix(&truth, config.seeds.data)?;
    Ok((y, truth))
}

/// Draws a matrix from a log-link state.
pub fn sample_matrix(state: &ModelState, seed: u64) -> Result<SparseCountMatrix> {
    if state.link != Link::Log {
        return Err(Error::Config("only log-link data can be simulated".into()));
    }
    let (n_rows, n_cols) = (state.rows.len(), state.cols.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut triples = Vec::new();
    for i in 0..n_rows {
        for j in 0..n_cols {
            let p = crate::model::prob(state.eta_at(i, j));
            if rng.random::<f64>() >= p {
                continue;
            }
            let mu = state.tau_at(i, j).exp();
            if !mu.is_finite() {
                return Err(Error::SimulationOverflow { row: i, col: j });
            }
            let gamma =
                Gamma::new(state.shape, mu / state.shape).map_err(|_| Error::SimulationOverflow { row: i, col: j })?;
            let mut v = gamma.sample(&mut rng);
            // a draw can underflow to zero for tiny means; keep the cell positive
            if v <= 0.0 {
                v = f64::MIN_POSITIVE;
            }
            triples.push((i, j, v));
        }
    }
    SparseCountMatrix::from_triples(triples, n_rows, n_cols)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitSetting {
    /// Truth everywhere except the column vectors, which are redrawn.
    TrueExceptWtilde,
    /// Every block drawn from its range.
    AllRandom,
}

/// Initial state for a fit of data simulated with `config`.
pub fn make_init(setting: InitSetting, truth: &ModelState, config: &SimConfig) -> Result<ModelState> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seeds.init);
    let (n_rows, n_cols, d) = (truth.rows.len(), truth.cols.len(), truth.dim());
    match setting {
        InitSetting::TrueExceptWtilde => {
            let mut init = truth.clone();
            init.cols
                .vectors_mut()
                .copy_from_slice(&uniform(&mut rng, config.w_range, n_cols * d));
            init.iteration = 0;
            Ok(init)
        }
        InitSetting::AllRandom => {
            let w = uniform(&mut rng, config.w_range, n_rows * d);
            let wt = uniform(&mut rng, config.w_range, n_cols * d);
            let b = uniform(&mut rng, config.b_range, n_rows);
            let bt = uniform(&mut rng, config.b_range, n_cols);
            let e = uniform(&mut rng, config.e_range, n_rows);
            let et = uniform(&mut rng, config.e_range, n_cols);
            ModelState::new(
                SideParams::new(d, w, b, e)?,
                SideParams::new(d, wt, bt, et)?,
                Link::Log,
                truth.shape,
            )
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(n: usize, seed: u64) -> SimConfig {
        SimConfig {
            n,
            d: 3,
            seeds: SimSeeds::from_base(seed),
            ..SimConfig::default()
        }
    }

    #[test]
    fn saturated_probabilities_fill_matrix() {
        let config = SimConfig {
            b_range: (10.0, 10.05),
            ..small(5, 1)
        };
        let (y, _) = generate(&config).unwrap();
        assert_eq!(y.nnz(), 25);
    }

    #[test]
    fn vanishing_probabilities_empty_matrix() {
        let config = SimConfig {
            b_range: (-10.0, -9.95),
            ..small(5, 1)
        };
        let (y, _) = generate(&config).unwrap();
        assert!(y.nnz() <= 1);
    }

    #[test]
    fn default_dimensions() {
        let c = SimConfig::default();
        assert_eq!((c.n, c.d, c.shape), (300, 50, 4.0));
        let (y, truth) = generate(&SimConfig { n: 30, ..c }).unwrap();
        assert_eq!((y.n_rows(), y.n_cols(), truth.dim()), (30, 30, 50));
        assert_eq!(truth.rows.vectors(), truth.cols.vectors());
    }

    #[test]
    fn overflow_is_reported() {
        let config = SimConfig {
            e_range: (800.0, 801.0),
            ..small(3, 1)
        };
        assert!(matches!(generate(&config), Err(Error::SimulationOverflow { .. })));
    }

    #[test]
    fn init_settings() {
        let config = small(8, 4);
        let (_, truth) = generate(&config).unwrap();
        let s1 = make_init(InitSetting::TrueExceptWtilde, &truth, &config).unwrap();
        assert_eq!(s1.rows, truth.rows);
        assert_ne!(s1.cols.vectors(), truth.cols.vectors());
        assert_eq!(s1.cols.bias_e(), truth.cols.bias_e());
        let s2 = make_init(InitSetting::AllRandom, &truth, &config).unwrap();
        assert_eq!(s2, make_init(InitSetting::AllRandom, &truth, &config).unwrap());
        for v in s2.rows.bias_e().iter().chain(s2.cols.bias_e()) {
            assert!((0.1..0.35).contains(v));
        }
    }

    #[test]
    fn invalid_configs() {
        assert!(generate(&SimConfig {
            shape: -1.0,
            ..small(3, 0)
        })
        .is_err());
        assert!(generate(&SimConfig { n: 0, ..small(3, 0) }).is_err());
        assert!(generate(&SimConfig {
            w_range: (1.0, 1.0),
            ..small(3, 0)
        })
        .is_err());
    }

    #[test]
    fn positive_fraction_matches_mean_probability() {
        let config = SimConfig {
            b_range: (-1.0, 1.0),
            ..small(120, 9)
        };
        let (y, truth) = generate(&config).unwrap();
        let mut mean_p = 0.0;
        let mut var = 0.0;
        for i in 0..config.n {
            for j in 0..config.n {
                let p = crate::model::prob(truth.eta_at(i, j));
                mean_p += p;
                var += p * (1.0 - p);
            }
        }
        let observed = y.nnz() as f64;
        assert!((observed - mean_p).abs() < 3.0 * var.sqrt(), "{observed} vs {mean_p}");
    }

    #[test]
    fn positive_values_track_mean() {
        let config = SimConfig {
            b_range: (5.0, 6.0),
            e_range: (-1.0, 1.5),
            ..small(100, 21)
        };
        let (y, truth) = generate(&config).unwrap();
        assert!(y.nnz() >= 9_900);
        let pairs: Vec<(f64, f64)> = y.triples().map(|(i, j, v)| (truth.tau_at(i, j).exp(), v)).collect();
        let n = pairs.len() as f64;
        let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pairs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pairs.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let slope = sxy / sxx;
        assert!((slope - 1.0).abs() < 0.1, "{slope}");
    }
}
