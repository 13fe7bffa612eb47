//! Parameter containers and link functions.
//!
//! A row index `i` owns `theta_i = (w_i, b_i, e_i)` and a column index `j` owns
//! `theta~_j = (w~_j, b~_j, e~_j)`. Both are stored as [`SideParams`]. Flat
//! parameter slices used throughout the crate follow the same layout:
//! the `d` latent coordinates, then the Bernoulli bias, then the Gamma bias.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which side of the factorization an index belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Row,
    Col,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::Row => Side::Col,
            Side::Col => Side::Row,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Row => "row",
            Side::Col => "col",
        })
    }
}

/// Link between the Gamma mean and the linear predictor `tau`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Link {
    /// `-1/mu = tau`, valid only for `tau < 0`.
    Canonical,
    /// `log mu = tau`.
    Log,
}

impl fmt::Display for Link {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Link::Canonical => "canonical",
            Link::Log => "log",
        })
    }
}

impl FromStr for Link {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "canonical" => Ok(Link::Canonical),
            "log" => Ok(Link::Log),
            other => Err(Error::Config(format!("unknown link '{other}'"))),
        }
    }
}

/// One side's parameters: `n` latent vectors of length `d` plus two bias
/// columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SideParams {
    d: usize,
    vectors: Vec<f64>,
    bias_b: Vec<f64>,
    bias_e: Vec<f64>,
}

impl SideParams {
    /// `vectors` is row-major `n x d`.
    pub fn new(d: usize, vectors: Vec<f64>, bias_b: Vec<f64>, bias_e: Vec<f64>) -> Result<Self> {
        let n = bias_b.len();
        if bias_e.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: bias_e.len(),
            });
        }
        if vectors.len() != n * d {
            return Err(Error::DimensionMismatch {
                expected: n * d,
                found: vectors.len(),
            });
        }
        if let Some(bad) = vectors.iter().chain(&bias_b).chain(&bias_e).find(|v| !v.is_finite()) {
            return Err(Error::Config(format!("non-finite parameter {bad}")));
        }
        Ok(Self {
            d,
            vectors,
            bias_b,
            bias_e,
        })
    }

    pub fn zeros(n: usize, d: usize) -> Self {
        Self {
            d,
            vectors: vec![0.0; n * d],
            bias_b: vec![0.0; n],
            bias_e: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.bias_b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bias_b.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.vectors[i * self.d..(i + 1) * self.d]
    }

    pub fn vector_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.vectors[i * self.d..(i + 1) * self.d]
    }

    pub fn vectors(&self) -> &[f64] {
        &self.vectors
    }

    pub fn vectors_mut(&mut self) -> &mut [f64] {
        &mut self.vectors
    }

    pub fn bias_b(&self) -> &[f64] {
        &self.bias_b
    }

    pub fn bias_b_mut(&mut self) -> &mut [f64] {
        &mut self.bias_b
    }

    pub fn bias_e(&self) -> &[f64] {
        &self.bias_e
    }

    pub fn bias_e_mut(&mut self) -> &mut [f64] {
        &mut self.bias_e
    }

    /// Flat `(w, b, e)` parameter vector of index `i`.
    pub fn theta(&self, i: usize) -> Vec<f64> {
        let mut t = Vec::with_capacity(self.d + 2);
        t.extend_from_slice(self.vector(i));
        t.push(self.bias_b[i]);
        t.push(self.bias_e[i]);
        t
    }

    pub fn set_theta(&mut self, i: usize, theta: &[f64]) {
        debug_assert_eq!(theta.len(), self.d + 2);
        let d = self.d;
        self.vector_mut(i).copy_from_slice(&theta[..d]);
        self.bias_b[i] = theta[d];
        self.bias_e[i] = theta[d + 1];
    }
}

/// Complete model: both sides, the Gamma link and the global shape `nu`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub rows: SideParams,
    pub cols: SideParams,
    pub link: Link,
    pub shape: f64,
    /// Number of completed outer iterations.
    pub iteration: usize,
}

impl ModelState {
    pub fn new(rows: SideParams, cols: SideParams, link: Link, shape: f64) -> Result<Self> {
        if rows.dim() != cols.dim() {
            return Err(Error::DimensionMismatch {
                expected: rows.dim(),
                found: cols.dim(),
            });
        }
        check_shape(shape)?;
        Ok(Self {
            rows,
            cols,
            link,
            shape,
            iteration: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.rows.dim()
    }

    pub fn side(&self, side: Side) -> &SideParams {
        match side {
            Side::Row => &self.rows,
            Side::Col => &self.cols,
        }
    }

    pub fn side_mut(&mut self, side: Side) -> &mut SideParams {
        match side {
            Side::Row => &mut self.rows,
            Side::Col => &mut self.cols,
        }
    }

    pub fn eta_at(&self, i: usize, j: usize) -> f64 {
        dot(self.rows.vector(i), self.cols.vector(j)) + self.rows.bias_b()[i] + self.cols.bias_b()[j]
    }

    pub fn tau_at(&self, i: usize, j: usize) -> f64 {
        dot(self.rows.vector(i), self.cols.vector(j)) + self.rows.bias_e()[i] + self.cols.bias_e()[j]
    }
}

pub(crate) fn check_shape(shape: f64) -> Result<()> {
    if shape.is_finite() && shape > 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("shape must be positive, got {shape}")))
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_pair(theta_i: &[f64], thetat_j: &[f64]) -> Result<usize> {
    if theta_i.len() != thetat_j.len() {
        return Err(Error::DimensionMismatch {
            expected: theta_i.len(),
            found: thetat_j.len(),
        });
    }
    if theta_i.len() < 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: theta_i.len(),
        });
    }
    Ok(theta_i.len() - 2)
}

/// Logit-scale predictor `w_i . w~_j + b_i + b~_j` for two flat parameter
/// vectors.
pub fn eta(theta_i: &[f64], thetat_j: &[f64]) -> Result<f64> {
    let d = check_pair(theta_i, thetat_j)?;
    Ok(dot(&theta_i[..d], &thetat_j[..d]) + theta_i[d] + thetat_j[d])
}

/// Gamma-side predictor `w_i . w~_j + e_i + e~_j`.
pub fn tau(theta_i: &[f64], thetat_j: &[f64]) -> Result<f64> {
    let d = check_pair(theta_i, thetat_j)?;
    Ok(dot(&theta_i[..d], &thetat_j[..d]) + theta_i[d + 1] + thetat_j[d + 1])
}

/// Inverse logit, evaluated without overflow for any finite input.
#[inline]
pub fn prob(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let z = eta.exp();
        z / (1.0 + z)
    }
}

/// Gamma mean implied by `tau`, or `None` when `tau` lies outside the link's
/// valid range (canonical `tau >= 0`, log overflow).
#[inline]
pub fn mean_from_tau(link: Link, tau: f64) -> Option<f64> {
    match link {
        Link::Canonical if tau < 0.0 => Some(-1.0 / tau),
        Link::Canonical => None,
        Link::Log => {
            let mu = tau.exp();
            (mu.is_finite() && mu > 0.0).then_some(mu)
        }
    }
}
