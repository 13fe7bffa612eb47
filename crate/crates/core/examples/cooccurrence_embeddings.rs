//! Builds a co-occurrence matrix from a tiny corpus, fits it, and lists the
//! nearest neighbors of a few words.
//!
//! ```text
//! cargo run --example cooccurrence_embeddings -- [corpus.txt]
//! ```

use std::fs::File;
use std::io::BufReader;

use sazig::cooccur::{build_matrix, build_vocab, read_sentences, DEFAULT_WINDOW};
use sazig::embed::{top_k, EmbeddingView, ViewSource};
use sazig::trainer::{FitConfig, ShapeMode};
use sazig::{fit, Init};

const CORPUS: &str = "\
the king rules the land and the queen rules the court
the queen and the king sit on the throne
a man walks to the market and a woman walks to the field
the woman sells bread and the man sells fish
the king and the queen watch the man and the woman
a dog runs in the field and a cat sleeps in the court
the cat and the dog eat fish and bread
";

fn main() -> sazig::Result<()> {
    let sentences = match std::env::args().nth(1) {
        Some(path) => read_sentences(BufReader::new(File::open(path)?))?,
        None => read_sentences(CORPUS.as_bytes())?,
    };
    let vocab = build_vocab(&sentences, 30)?;
    let y = build_matrix(&sentences, &vocab, DEFAULT_WINDOW)?;
    println!("{} words, {} nonzero pairs", vocab.len(), y.nnz());

    let config = FitConfig {
        max_iterations: 30,
        lr: 0.3,
        shape_mode: ShapeMode::EstimateOnce,
        seed: 3,
        ..FitConfig::default()
    };
    let result = fit(&y, &config, Init::Random { d: 4 })?;
    println!("loss {:.2} -> {:.2}", result.initial_loss, result.final_loss());

    let view = EmbeddingView::from_state(&result.state, ViewSource::Sum)?;
    for word in ["king", "man", "dog", "bread"] {
        let Some(i) = vocab.index_of(word) else { continue };
        let near: Vec<String> = top_k(&view, i, 3)?
            .into_iter()
            .map(|(j, s)| format!("{} ({s:.2})", vocab.token(j)))
            .collect();
        println!("{word:>6}: {}", near.join(", "));
    }
    Ok(())
}
