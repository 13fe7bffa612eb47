//! Distance-weighted co-occurrence counts from pre-tokenized text.
//!
//! Two in-vocabulary tokens at positions `p < q` of the same sentence with
//! `q - p <= k` add `1 / (q - p)` to both `Y[a][b]` and `Y[b][a]`. Positions
//! count every token, including ones outside the vocabulary. Pairs of the same
//! word are skipped.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::io::parse_field;
use crate::sparse::SparseCountMatrix;

/// Default window size.
pub const DEFAULT_WINDOW: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Builds from `(token, count)` pairs already in index order.
    pub fn from_entries(entries: Vec<(String, u64)>) -> Result<Self> {
        let mut index = HashMap::with_capacity(entries.len());
        for (k, (t, _)) in entries.iter().enumerate() {
            if t.is_empty() || t.chars().any(char::is_whitespace) {
                return Err(Error::Config(format!("invalid token {t:?}")));
            }
            if index.insert(t.clone(), k).is_some() {
                return Err(Error::Config(format!("duplicate token {t:?}")));
            }
        }
        let (tokens, counts) = entries.into_iter().unzip();
        Ok(Self { tokens, counts, index })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, index: usize) -> &str {
        &self.tokens[index]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn count(&self, index: usize) -> u64 {
        self.counts[index]
    }

    /// Writes `vocab.tsv`: `token<TAB>index<TAB>count` per line.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        let mut buf = String::new();
        for (k, (t, c)) in self.tokens.iter().zip(&self.counts).enumerate() {
            buf.push_str(&format!("{t}\t{k}\t{c}\n"));
        }
        out.write_all(buf.as_bytes())?;
        Ok(())
    }

    pub fn read_tsv<R: BufRead>(input: R) -> Result<Self> {
        let mut entries = Vec::new();
        for (k, line) in input.lines().enumerate() {
            let line = line?;
            let lineno = k + 1;
            if line.is_empty() {
                continue;
            }
            let mut f = line.split('\t');
            let token: String = parse_field(f.next(), lineno, "token")?;
            let index: usize = parse_field(f.next(), lineno, "index")?;
            let count: u64 = parse_field(f.next(), lineno, "count")?;
            if index != entries.len() {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("expected index {}, found {index}", entries.len()),
                });
            }
            entries.push((token, count));
        }
        Self::from_entries(entries)
    }
}

/// Reads one sentence per line, tokens split on whitespace.
pub fn read_sentences<R: BufRead>(input: R) -> Result<Vec<Vec<String>>> {
    input
        .lines()
        .map(|l| Ok(l?.split_whitespace().map(str::to_string).collect()))
        .collect()
}

/// The `size` most frequent tokens, ties broken lexicographically. Fewer
/// distinct tokens than `size` gives a smaller vocabulary; check
/// [`Vocabulary::len`].
pub fn build_vocab<S: AsRef<str>>(sentences: &[Vec<S>], size: usize) -> Result<Vocabulary> {
    if size == 0 {
        return Err(Error::Config("vocabulary size must be at least 1".into()));
    }
    let mut freq: BTreeMap<&str, u64> = BTreeMap::new();
    for s in sentences {
        for t in s {
            *freq.entry(t.as_ref()).or_default() += 1;
        }
    }
    let mut ranked: Vec<(&str, u64)> = freq.into_iter().collect();
    // stable sort keeps lexicographic order among equal counts
    ranked.sort_by_key(|e| std::cmp::Reverse(e.1));
    ranked.truncate(size);
    Vocabulary::from_entries(ranked.into_iter().map(|(t, c)| (t.to_string(), c)).collect())
}

/// Symmetric co-occurrence matrix over `vocab` with window `k`.
pub fn build_matrix<S: AsRef<str>>(sentences: &[Vec<S>], vocab: &Vocabulary, k: usize) -> Result<SparseCountMatrix> {
    if k == 0 {
        return Err(Error::Config("window must be at least 1".into()));
    }
    let mut acc: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for s in sentences {
        let ids: Vec<Option<usize>> = s.iter().map(|t| vocab.index_of(t.as_ref())).collect();
        for p in 0..ids.len() {
            let Some(a) = ids[p] else { continue };
            for (gap, b) in ids[p + 1..].iter().take(k).enumerate() {
                let Some(b) = *b else { continue };
                if a == b {
                    continue;
                }
                *acc.entry((a.min(b), a.max(b))).or_default() += 1.0 / (gap + 1) as f64;
            }
        }
    }
    let triples = acc.into_iter().flat_map(|((a, b), v)| [(a, b, v), (b, a, v)]);
    SparseCountMatrix::from_triples(triples, vocab.len(), vocab.len())
}
