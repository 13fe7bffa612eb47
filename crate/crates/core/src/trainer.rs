//! Alternating Fisher-scoring fit.
//!
//! Each outer iteration `t` visits every row and column index. For one index
//! the opposite side is held fixed and its parameters take `inner_epochs`
//! damped Fisher steps `theta += lr_factor(t) * S^-1 U`, with score and
//! information recomputed after every step. Steps that leave the valid mean
//! region (or give a non-finite likelihood) are halved until they do not.
//! After the sweep the overall loss and the stacked score norms are recomputed
//! from scratch and appended to the trace.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::diagnostics::{
    max_prob, saturation_monitor, separation_probe, SeparationFlag, SeparationReport, SATURATION_GAP, SATURATION_WINDOW,
};
use crate::error::{Error, Result};
use crate::io::fmt17;
use crate::likelihood::{self, estimate_shape, estimate_shape_fitted, index_loglik, line_of, LossBreakdown};
use crate::model::{check_shape, Link, ModelState, Side, SideParams};
use crate::scoring::{fisher_solve, fisher_solve_frozen_e, index_score};
use crate::sparse::SparseCountMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LrSchedule {
    /// Undamped Fisher steps.
    None,
    /// Steps scaled by `lr / t^(1/4)`.
    PowerQuarter,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShapeMode {
    Fixed(f64),
    /// Keep the shape stored in the initial state.
    FromInit,
    /// Moment estimate from the data once, before the first sweep.
    EstimateOnce,
    /// Moment estimate before the first sweep, then re-estimated from the
    /// fitted means after every sweep.
    Reestimate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepOrder {
    /// Row `i` then column `i`, for `i = 0..n`. Rectangular matrices fall back
    /// to [`SweepOrder::RowsThenColumns`].
    Interleaved,
    RowsThenColumns,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitConfig {
    pub link: Link,
    pub max_iterations: usize,
    pub inner_epochs: usize,
    pub lr: f64,
    pub lr_schedule: LrSchedule,
    /// Relative loss change below which the fit stops; 0 never stops early.
    pub epsilon: f64,
    /// Ridge added to the information is `ridge_scale * trace(S) / (d + 2)`.
    pub ridge_scale: f64,
    pub max_halvings: usize,
    pub shape_mode: ShapeMode,
    pub sweep_order: SweepOrder,
    pub seed: u64,
    /// Workers for the read-only pass after each sweep.
    pub threads: usize,
    /// Run the saturation monitor / separation probe after each sweep.
    pub diagnostics: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            link: Link::Log,
            max_iterations: 60,
            inner_epochs: 20,
            lr: 0.5,
            lr_schedule: LrSchedule::PowerQuarter,
            epsilon: 1e-6,
            ridge_scale: 1e-8,
            max_halvings: 30,
            shape_mode: ShapeMode::EstimateOnce,
            sweep_order: SweepOrder::Interleaved,
            seed: 0,
            threads: 1,
            diagnostics: true,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.inner_epochs == 0 {
            return Err(Error::Config("inner_epochs must be at least 1".into()));
        }
        if !(self.lr > 0.0) || !self.lr.is_finite() {
            return Err(Error::Config(format!("lr must be positive, got {}", self.lr)));
        }
        if !(self.epsilon >= 0.0) {
            return Err(Error::Config(format!(
                "epsilon must be non-negative, got {}",
                self.epsilon
            )));
        }
        if !(self.ridge_scale >= 0.0) {
            return Err(Error::Config("ridge_scale must be non-negative".into()));
        }
        if let ShapeMode::Fixed(nu) = self.shape_mode {
            check_shape(nu)?;
        }
        Ok(())
    }
}

/// Step multiplier at outer iteration `t >= 1`.
pub fn lr_factor(config: &FitConfig, t: usize) -> Result<f64> {
    if t == 0 {
        return Err(Error::Config("iteration numbers start at 1".into()));
    }
    Ok(match config.lr_schedule {
        LrSchedule::None => 1.0,
        LrSchedule::PowerQuarter => config.lr / (t as f64).powf(0.25),
    })
}

/// One trace row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub loss: f64,
    pub u_theta_norm: f64,
    pub u_thetat_norm: f64,
    pub halvings: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct FitTrace {
    pub records: Vec<IterationRecord>,
}

const TRACE_HEADER: &str = "iter,loss,u_theta_norm,u_thetat_norm,halvings,warnings";

impl FitTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn losses(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.loss).collect()
    }

    /// Writes the `sazig-trace-v1` CSV. Warnings are joined with `;`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let mut buf = String::new();
        writeln!(buf, "{TRACE_HEADER}").unwrap();
        for r in &self.records {
            writeln!(
                buf,
                "{},{},{},{},{},{}",
                r.iter,
                fmt17(r.loss),
                fmt17(r.u_theta_norm),
                fmt17(r.u_thetat_norm),
                r.halvings,
                r.warnings.join(";")
            )
            .unwrap();
        }
        out.write_all(buf.as_bytes())?;
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        use crate::io::parse_field;
        let mut lines = input.lines();
        match lines.next() {
            Some(Ok(h)) if h.trim() == TRACE_HEADER => {}
            _ => {
                return Err(Error::Parse {
                    line: 1,
                    msg: format!("expected header '{TRACE_HEADER}'"),
                })
            }
        }
        let mut records = Vec::new();
        for (k, line) in lines.enumerate() {
            let line = line?;
            let lineno = k + 2;
            let mut f = line.splitn(6, ',');
            let iter = parse_field(f.next(), lineno, "iter")?;
            let loss = parse_field(f.next(), lineno, "loss")?;
            let u_theta_norm = parse_field(f.next(), lineno, "u_theta_norm")?;
            let u_thetat_norm = parse_field(f.next(), lineno, "u_thetat_norm")?;
            let halvings = parse_field(f.next(), lineno, "halvings")?;
            let warnings = f
                .next()
                .unwrap_or("")
                .split(';')
                .filter(|s| !s.is_empty())
                .map(str::to_string)
                .collect();
            records.push(IterationRecord {
                iter,
                loss,
                u_theta_norm,
                u_thetat_norm,
                halvings,
                warnings,
            });
        }
        Ok(Self { records })
    }
}

/// What happened while updating one index.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IndexUpdate {
    pub epochs: usize,
    pub halvings: usize,
    /// A step was still invalid after the maximum number of halvings.
    pub rejected: bool,
    /// The information matrix could not be factorized.
    pub skipped: bool,
    /// Local log likelihood before and after each accepted step.
    pub loglik_path: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Runs `inner_epochs` damped Fisher steps on one index's parameters with the
/// opposite side held fixed, writing the result back into `state`.
///
/// The final step of the loop plays the role of the outer update. Indices with
/// no positive cell keep their Gamma bias fixed.
pub fn update_index(
    y: &SparseCountMatrix,
    state: &mut ModelState,
    side: Side,
    index: usize,
    t: usize,
    config: &FitConfig,
) -> Result<IndexUpdate> {
    likelihood::check_shapes(y, state)?;
    likelihood::check_index(state, side, index)?;
    let factor = lr_factor(config, t)?;
    let line = line_of(y, side, index);
    let frozen_e = line.nnz() == 0;
    let (link, shape) = (state.link, state.shape);
    let other = state.side(side.other());
    let mut theta = state.side(side).theta(index);
    let mut out = IndexUpdate::default();

    let loglik =
        |theta: &[f64]| -> Result<LossBreakdown> { index_loglik(line, theta, other, link, shape, side, index) };
    let mut current = loglik(&theta)?.total;
    out.loglik_path.push(current);

    for _ in 0..config.inner_epochs {
        let block = index_score(line, &theta, other, link, shape, side, index)?;
        let ridge = config.ridge_scale * block.s.trace() / block.s.nrows() as f64;
        let solved = if frozen_e {
            fisher_solve_frozen_e(&block, ridge)
        } else {
            fisher_solve(&block, ridge)
        };
        let mut step = match solved {
            Ok(step) => step * factor,
            Err(Error::SingularInformation) => {
                out.skipped = out.epochs == 0;
                out.warnings.push(format!("singular:{side}:{index}"));
                break;
            }
            Err(e) => return Err(e),
        };
        out.epochs += 1;

        let mut halvings = 0;
        let accepted = loop {
            let candidate: Vec<f64> = theta.iter().zip(step.iter()).map(|(a, s)| a + s).collect();
            match loglik(&candidate) {
                Ok(ll) if ll.total.is_finite() => break Some((candidate, ll.total)),
                Ok(_) | Err(Error::InvalidMean { .. }) => {}
                Err(e) => return Err(e),
            }
            if halvings == config.max_halvings {
                break None;
            }
            step *= 0.5;
            halvings += 1;
        };
        out.halvings += halvings;
        match accepted {
            Some((candidate, ll)) => {
                theta = candidate;
                current = ll;
                out.loglik_path.push(current);
            }
            None => {
                out.rejected = true;
                out.warnings.push(format!("rejected:{side}:{index}"));
                break;
            }
        }
    }
    debug_assert!(current.is_finite());

    state.side_mut(side).set_theta(index, &theta);
    Ok(out)
}

/// Starting point for [`fit`].
#[derive(Debug, Clone)]
pub enum Init {
    State(ModelState),
    /// Random initial values of dimension `d`, drawn with `FitConfig::seed`.
    Random {
        d: usize,
    },
}

/// Seed offsets for the six parameter blocks of a random initialization.
const INIT_STREAMS: [u64; 6] = [0, 1, 2, 3, 4, 5];

/// Random initial state: vectors uniform on `+-0.5 / (n d)`, Bernoulli biases
/// on `(-0.1, 0.1)`, Gamma biases on `(0.1, 0.6)` for the log link and on
/// `(-0.6, -0.1)` for the canonical link (which needs negative predictors).
pub fn default_init(n_rows: usize, n_cols: usize, d: usize, link: Link, shape: f64, seed: u64) -> Result<ModelState> {
    let n = n_rows.max(n_cols).max(1);
    let half = 0.5 / (n * d.max(1)) as f64;
    let e_range = match link {
        Link::Log => (0.1, 0.6),
        Link::Canonical => (-0.6, -0.1),
    };
    let draw = |stream: u64, len: usize, lo: f64, hi: f64| -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15)));
        let u = Uniform::new(lo, hi).expect("valid range");
        (0..len).map(|_| u.sample(&mut rng)).collect()
    };
    let rows = SideParams::new(
        d,
        draw(INIT_STREAMS[0], n_rows * d, -half, half),
        draw(INIT_STREAMS[2], n_rows, -0.1, 0.1),
        draw(INIT_STREAMS[4], n_rows, e_range.0, e_range.1),
    )?;
    let cols = SideParams::new(
        d,
        draw(INIT_STREAMS[1], n_cols * d, -half, half),
        draw(INIT_STREAMS[3], n_cols, -0.1, 0.1),
        draw(INIT_STREAMS[5], n_cols, e_range.0, e_range.1),
    )?;
    ModelState::new(rows, cols, link, shape)
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub state: ModelState,
    pub trace: FitTrace,
    /// Loss of the starting state.
    pub initial_loss: f64,
    pub converged: bool,
    /// Latest diagnostic report for every index whose flag is not `None`.
    pub reports: Vec<SeparationReport>,
}

impl FitResult {
    pub fn final_loss(&self) -> f64 {
        self.trace.records.last().map_or(self.initial_loss, |r| r.loss)
    }
}

/// Loss and stacked score norms of a state, recomputed from scratch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub loss: f64,
    pub u_theta_norm: f64,
    pub u_thetat_norm: f64,
}

/// Read-only pass: total loss plus the L2 norms of the stacked row and column
/// score vectors. Summation runs in index order for any `threads`.
pub fn evaluate(y: &SparseCountMatrix, state: &ModelState, threads: usize) -> Result<Evaluation> {
    likelihood::check_shapes(y, state)?;
    let rows = crate::par::map_indices(y.n_rows(), threads, |i| -> Result<(f64, f64)> {
        let ll = likelihood::row_loglik(y, state, i)?.total;
        let u = crate::scoring::score_row(y, state, i)?.u.norm_squared();
        Ok((ll, u))
    });
    let cols = crate::par::map_indices(y.n_cols(), threads, |j| -> Result<f64> {
        Ok(crate::scoring::score_col(y, state, j)?.u.norm_squared())
    });
    let mut ll = 0.0;
    let mut u_rows = 0.0;
    for r in rows {
        let (a, b) = r?;
        ll += a;
        u_rows += b;
    }
    let mut u_cols = 0.0;
    for c in cols {
        u_cols += c?;
    }
    Ok(Evaluation {
        loss: -ll,
        u_theta_norm: u_rows.sqrt(),
        u_thetat_norm: u_cols.sqrt(),
    })
}

fn sweep_plan(n_rows: usize, n_cols: usize, order: SweepOrder) -> Vec<(Side, usize)> {
    let mut plan = Vec::with_capacity(n_rows + n_cols);
    if order == SweepOrder::Interleaved && n_rows == n_cols {
        for i in 0..n_rows {
            plan.push((Side::Row, i));
            plan.push((Side::Col, i));
        }
    } else {
        plan.extend((0..n_rows).map(|i| (Side::Row, i)));
        plan.extend((0..n_cols).map(|j| (Side::Col, j)));
    }
    plan
}

struct Monitor {
    history: Vec<Vec<f64>>,
    side: Side,
}

impl Monitor {
    fn new(side: Side, n: usize) -> Self {
        Self {
            history: vec![Vec::new(); n],
            side,
        }
    }

    fn observe(&mut self, y: &SparseCountMatrix, state: &ModelState, threads: usize) -> Result<Vec<SeparationReport>> {
        let side = self.side;
        let maxima = crate::par::map_indices(self.history.len(), threads, |k| max_prob(y, state, side, k));
        let mut reports = Vec::new();
        for (k, p) in maxima.into_iter().enumerate() {
            let hist = &mut self.history[k];
            hist.push(p);
            if hist.len() > SATURATION_WINDOW {
                hist.remove(0);
            }
            let mut flag = saturation_monitor(hist, SATURATION_WINDOW);
            let mut score = None;
            if flag == SeparationFlag::SaturationWarning {
                let s = separation_probe(y, state, k, side)?;
                if s >= 1.0 {
                    flag = SeparationFlag::SuspectedSeparation;
                }
                score = Some(s);
            }
            if flag != SeparationFlag::None {
                reports.push(SeparationReport {
                    side,
                    index: k,
                    max_p_history: hist.clone(),
                    flag,
                    direction_score: score,
                    window: SATURATION_WINDOW,
                    saturation_gap: SATURATION_GAP,
                });
            }
        }
        Ok(reports)
    }
}

/// Alternating fit of `y` from `init`.
///
/// Stops after `max_iterations` sweeps or once the relative change of the
/// loss between consecutive sweeps (the first compared against the starting
/// loss) falls below `epsilon`. Iteration numbers continue from
/// `init.iteration`, so a resumed fit keeps its learning-rate schedule.
pub fn fit(y: &SparseCountMatrix, config: &FitConfig, init: Init) -> Result<FitResult> {
    config.validate()?;
    if y.nnz() == 0 {
        return Err(Error::Config("matrix has no positive entries".into()));
    }
    let initial_shape = match config.shape_mode {
        ShapeMode::Fixed(nu) => Some(nu),
        ShapeMode::FromInit => None,
        ShapeMode::EstimateOnce | ShapeMode::Reestimate => Some(estimate_shape(y)?),
    };
    let mut state = match init {
        Init::State(mut s) => {
            s.link = config.link;
            s
        }
        Init::Random { d } => default_init(
            y.n_rows(),
            y.n_cols(),
            d,
            config.link,
            initial_shape.unwrap_or(1.0),
            config.seed,
        )?,
    };
    if let Some(nu) = initial_shape {
        state.shape = nu;
    }
    likelihood::check_shapes(y, &state)?;

    let initial_loss = likelihood::total_loss_threaded(y, &state, config.threads)?;
    let plan = sweep_plan(y.n_rows(), y.n_cols(), config.sweep_order);
    let mut row_monitor = Monitor::new(Side::Row, y.n_rows());
    let mut col_monitor = Monitor::new(Side::Col, y.n_cols());
    let mut trace = FitTrace::default();
    let mut reports = Vec::new();
    let mut previous = initial_loss;
    let mut converged = false;

    for _ in 0..config.max_iterations {
        let t = state.iteration + 1;
        let mut halvings = 0;
        let mut skipped = 0;
        let mut warnings = Vec::new();
        for &(side, index) in &plan {
            let upd = update_index(y, &mut state, side, index, t, config)?;
            halvings += upd.halvings;
            skipped += usize::from(upd.skipped);
            warnings.extend(upd.warnings);
        }
        if skipped == plan.len() {
            return Err(Error::AllIndicesSkipped { iteration: t });
        }
        state.iteration = t;
        if config.shape_mode == ShapeMode::Reestimate {
            state.shape = estimate_shape_fitted(y, &state)?;
        }

        let eval = evaluate(y, &state, config.threads)?;
        if config.diagnostics {
            reports = row_monitor.observe(y, &state, config.threads)?;
            reports.extend(col_monitor.observe(y, &state, config.threads)?);
            warnings.extend(reports.iter().map(SeparationReport::token));
        }
        trace.records.push(IterationRecord {
            iter: t,
            loss: eval.loss,
            u_theta_norm: eval.u_theta_norm,
            u_thetat_norm: eval.u_thetat_norm,
            halvings,
            warnings,
        });

        let change = (eval.loss - previous).abs() / previous.abs();
        previous = eval.loss;
        if change < config.epsilon {
            converged = true;
            break;
        }
    }

    Ok(FitResult {
        state,
        trace,
        initial_loss,
        converged,
        reports,
    })
}
