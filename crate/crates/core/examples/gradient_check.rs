//! Compares analytic scores with central finite differences of the local log
//! likelihood for both links.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sazig::likelihood::row_loglik;
use sazig::scoring::score_row;
use sazig::{Link, ModelState, Side, SideParams, SparseCountMatrix};

fn random_side(rng: &mut ChaCha8Rng, n: usize, d: usize, e: (f64, f64)) -> sazig::Result<SideParams> {
    SideParams::new(
        d,
        (0..n * d).map(|_| rng.random_range(-0.4..0.4)).collect(),
        (0..n).map(|_| rng.random_range(-0.5..0.5)).collect(),
        (0..n).map(|_| rng.random_range(e.0..e.1)).collect(),
    )
}

fn main() -> sazig::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (n, d, h) = (8, 3, 1e-5);
    let mut triples = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if rng.random_bool(0.5) {
                triples.push((i, j, rng.random_range(0.1..10.0)));
            }
        }
    }
    let y = SparseCountMatrix::from_triples(triples, n, n)?;

    for (link, e) in [(Link::Log, (-0.5, 0.5)), (Link::Canonical, (-2.0, -1.0))] {
        let rows = random_side(&mut rng, n, d, e)?;
        let cols = random_side(&mut rng, n, d, e)?;
        let state = ModelState::new(rows, cols, link, 2.5)?;
        let u = score_row(&y, &state, 0)?.u;
        let theta = state.rows.theta(0);
        println!("{link:?} link, row 0");
        for a in 0..theta.len() {
            let at = |delta: f64| -> sazig::Result<f64> {
                let mut s = state.clone();
                let mut t = theta.clone();
                t[a] += delta;
                s.side_mut(Side::Row).set_theta(0, &t);
                Ok(row_loglik(&y, &s, 0)?.total)
            };
            let fd = (at(h)? - at(-h)?) / (2.0 * h);
            println!(
                "  coord {a}: analytic {:+.8}  numeric {fd:+.8}  diff {:.1e}",
                u[a],
                (u[a] - fd).abs()
            );
        }
    }
    Ok(())
}
