//! Cosine-similarity queries and export over fitted vectors.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::fmt9;
use crate::model::{dot, ModelState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ViewSource {
    /// Row vectors `w`.
    #[default]
    Row,
    /// Column vectors `w~`.
    Col,
    /// `w + w~`; needs a square model.
    Sum,
}

impl fmt::Display for ViewSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ViewSource::Row => "row",
            ViewSource::Col => "col",
            ViewSource::Sum => "sum",
        })
    }
}

impl FromStr for ViewSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "row" => Ok(ViewSource::Row),
            "col" => Ok(ViewSource::Col),
            "sum" => Ok(ViewSource::Sum),
            other => Err(Error::Config(format!(
                "unknown view '{other}' (expected row, col or sum)"
            ))),
        }
    }
}

/// An `n x d` set of vectors taken from a model.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingView {
    pub source: ViewSource,
    d: usize,
    data: Vec<f64>,
}

impl EmbeddingView {
    pub fn from_state(state: &ModelState, source: ViewSource) -> Result<Self> {
        let data = match source {
            ViewSource::Row => state.rows.vectors().to_vec(),
            ViewSource::Col => state.cols.vectors().to_vec(),
            ViewSource::Sum => {
                if state.rows.len() != state.cols.len() {
                    return Err(Error::DimensionMismatch {
                        expected: state.rows.len(),
                        found: state.cols.len(),
                    });
                }
                let (r, c) = (state.rows.vectors(), state.cols.vectors());
                r.iter().zip(c).map(|(a, b)| a + b).collect()
            }
        };
        Ok(Self {
            source,
            d: state.dim(),
            data,
        })
    }

    /// View over explicit row-major vectors.
    pub fn from_vectors(d: usize, data: Vec<f64>) -> Result<Self> {
        if d == 0 || !data.len().is_multiple_of(d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: data.len(),
            });
        }
        Ok(Self {
            source: ViewSource::Row,
            d,
            data,
        })
    }

    pub fn len(&self) -> usize {
        self.data.len().checked_div(self.d).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    /// Writes `embeddings.tsv`: a label then the vector, 9 significant digits.
    /// Labels default to the index when `tokens` is `None`.
    pub fn write_tsv<W: Write>(&self, tokens: Option<&[String]>, mut out: W) -> Result<()> {
        let mut buf = String::new();
        for i in 0..self.len() {
            match tokens {
                Some(t) => buf.push_str(&t[i]),
                None => buf.push_str(&i.to_string()),
            }
            for v in self.vector(i) {
                buf.push('\t');
                buf.push_str(&fmt9(*v));
            }
            buf.push('\n');
        }
        out.write_all(buf.as_bytes())?;
        Ok(())
    }
}

/// Cosine similarity, clamped to `[-1, 1]`.
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            found: v.len(),
        });
    }
    let uu = dot(u, u);
    let vv = dot(v, v);
    if !(uu > 0.0 && vv > 0.0) {
        return Err(Error::ZeroNorm);
    }
    // one square root keeps cosine(u, u) exactly 1
    Ok((dot(u, v) / (uu * vv).sqrt()).clamp(-1.0, 1.0))
}

/// The `k` most similar other vectors to `index`, best first, ties by
/// ascending index. Returns at most `n - 1` results.
pub fn top_k(view: &EmbeddingView, index: usize, k: usize) -> Result<Vec<(usize, f64)>> {
    let n = view.len();
    if index >= n {
        return Err(Error::Config(format!("index {index} out of range for {n} vectors")));
    }
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    let q = view.vector(index);
    let mut sims = Vec::with_capacity(n.saturating_sub(1));
    for j in (0..n).filter(|&j| j != index) {
        sims.push((j, cosine(q, view.vector(j))?));
    }
    sims.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    sims.truncate(k);
    Ok(sims)
}

/// Neighbor table with header `rank<TAB>index<TAB>token<TAB>similarity`.
pub fn write_neighbors<W: Write>(neighbors: &[(usize, f64)], tokens: Option<&[String]>, mut out: W) -> Result<()> {
    let mut buf = String::from("rank\tindex\ttoken\tsimilarity\n");
    for (r, (j, s)) in neighbors.iter().enumerate() {
        let token = tokens.map_or_else(|| j.to_string(), |t| t[*j].clone());
        buf.push_str(&format!("{}\t{j}\t{token}\t{}\n", r + 1, fmt9(*s)));
    }
    out.write_all(buf.as_bytes())?;
    Ok(())
}
