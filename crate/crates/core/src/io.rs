//! Text formats shared by the library and the command line tool.
//!
//! * `triples-v1` matrix files live in [`crate::sparse`].
//! * `sazig-model-v1` checkpoints are written and read here.
//! * `sazig-trace-v1` traces live in [`crate::trainer`].

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{Link, ModelState, SideParams};

/// Decimal text with 17 significant digits; parses back to the same bits.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Decimal text with 9 significant digits.
pub fn fmt9(v: f64) -> String {
    format!("{v:.8e}")
}

pub(crate) fn parse_field<T: FromStr>(field: Option<&str>, line: usize, what: &str) -> Result<T> {
    let raw = field.ok_or_else(|| Error::Parse {
        line,
        msg: format!("missing {what}"),
    })?;
    raw.trim().parse().map_err(|_| Error::Parse {
        line,
        msg: format!("bad {what} '{raw}'"),
    })
}

/// Hex SHA-256 of a file's bytes.
pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

const MODEL_MAGIC: &str = "#sazig-model-v1";
const BLOCKS: [&str; 6] = [
    "rows.vectors",
    "rows.bias_b",
    "rows.bias_e",
    "cols.vectors",
    "cols.bias_b",
    "cols.bias_e",
];

/// Writes a `sazig-model-v1` checkpoint.
///
/// Layout: magic line, `key value` header lines (`n_rows`, `n_cols`, `d`,
/// `link`, `shape`, `iteration`), then six `[block]` sections. Vector blocks
/// hold one tab-separated row per index; bias blocks one value per line.
pub fn write_model<W: Write>(state: &ModelState, mut out: W) -> Result<()> {
    let mut buf = String::new();
    let d = state.dim();
    writeln!(buf, "{MODEL_MAGIC}").unwrap();
    writeln!(buf, "n_rows {}", state.rows.len()).unwrap();
    writeln!(buf, "n_cols {}", state.cols.len()).unwrap();
    writeln!(buf, "d {d}").unwrap();
    writeln!(buf, "link {}", state.link).unwrap();
    writeln!(buf, "shape {}", fmt17(state.shape)).unwrap();
    writeln!(buf, "iteration {}", state.iteration).unwrap();
    for (name, side) in [("rows", &state.rows), ("cols", &state.cols)] {
        writeln!(buf, "[{name}.vectors]").unwrap();
        for i in 0..side.len() {
            let row: Vec<String> = side.vector(i).iter().map(|v| fmt17(*v)).collect();
            writeln!(buf, "{}", row.join("\t")).unwrap();
        }
        writeln!(buf, "[{name}.bias_b]").unwrap();
        for v in side.bias_b() {
            writeln!(buf, "{}", fmt17(*v)).unwrap();
        }
        writeln!(buf, "[{name}.bias_e]").unwrap();
        for v in side.bias_e() {
            writeln!(buf, "{}", fmt17(*v)).unwrap();
        }
    }
    out.write_all(buf.as_bytes())?;
    Ok(())
}

/// Reads a `sazig-model-v1` checkpoint.
pub fn read_model<R: BufRead>(input: R) -> Result<ModelState> {
    let lines: Vec<String> = input.lines().collect::<std::io::Result<_>>()?;
    let mut it = lines.iter().enumerate().map(|(k, l)| (k + 1, l.as_str()));

    let (_, magic) = it.next().ok_or(Error::Parse {
        line: 1,
        msg: "empty checkpoint".into(),
    })?;
    if magic.trim() != MODEL_MAGIC {
        return Err(Error::Parse {
            line: 1,
            msg: format!("expected '{MODEL_MAGIC}'"),
        });
    }

    let mut header = |key: &str| -> Result<(usize, String)> {
        let (lineno, line) = it.next().ok_or(Error::Parse {
            line: 0,
            msg: format!("missing header '{key}'"),
        })?;
        let mut parts = line.split_whitespace();
        if parts.next() != Some(key) {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected header '{key}'"),
            });
        }
        Ok((lineno, parts.next().unwrap_or("").to_string()))
    };
    let (l, v) = header("n_rows")?;
    let n_rows: usize = parse_field(Some(&v), l, "n_rows")?;
    let (l, v) = header("n_cols")?;
    let n_cols: usize = parse_field(Some(&v), l, "n_cols")?;
    let (l, v) = header("d")?;
    let d: usize = parse_field(Some(&v), l, "d")?;
    let (_, v) = header("link")?;
    let link: Link = v.parse()?;
    let (l, v) = header("shape")?;
    let shape: f64 = parse_field(Some(&v), l, "shape")?;
    let (l, v) = header("iteration")?;
    let iteration: usize = parse_field(Some(&v), l, "iteration")?;

    let mut blocks: Vec<Vec<f64>> = Vec::with_capacity(6);
    for (b, name) in BLOCKS.iter().enumerate() {
        let (lineno, line) = it.next().ok_or(Error::Parse {
            line: lines.len(),
            msg: format!("missing block [{name}]"),
        })?;
        if line.trim() != format!("[{name}]") {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected block [{name}]"),
            });
        }
        let n = if b < 3 { n_rows } else { n_cols };
        let is_vectors = b % 3 == 0;
        let mut values = Vec::with_capacity(if is_vectors { n * d } else { n });
        for _ in 0..n {
            let (lineno, line) = it.next().ok_or(Error::Parse {
                line: lines.len(),
                msg: format!("block [{name}] is truncated"),
            })?;
            if is_vectors {
                if d == 0 {
                    continue;
                }
                let before = values.len();
                for field in line.split('\t') {
                    values.push(parse_field(Some(field), lineno, "value")?);
                }
                if values.len() - before != d {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: format!("expected {d} values"),
                    });
                }
            } else {
                values.push(parse_field(Some(line), lineno, "value")?);
            }
        }
        blocks.push(values);
    }
    let mut blocks = blocks.into_iter();
    let mut next = || blocks.next().unwrap();
    let rows = SideParams::new(d, next(), next(), next())?;
    let cols = SideParams::new(d, next(), next(), next())?;
    let mut state = ModelState::new(rows, cols, link, shape)?;
    state.iteration = iteration;
    Ok(state)
}

pub fn save_model(state: &ModelState, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_model(state, std::io::BufWriter::new(file))
}

pub fn load_model(path: &Path) -> Result<ModelState> {
    let file = std::fs::File::open(path)?;
    read_model(std::io::BufReader::new(file))
}
