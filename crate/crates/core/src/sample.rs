//! Samplers for the block model, the fixed-size variant and Erdős–Rényi graphs.
//!
//! Edges are drawn by geometric skipping over pair indices, so a sample costs
//! `O(n + m)` rather than `O(n^2)`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{GraphSample, Labeling, ModelTag};
use crate::params::ModelParams;

/// Deterministic generator for `(seed, stream)`.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Calls `emit(i, j)` with `i > j` for each pair of `0..len` kept independently with probability `p`.
fn skip_pairs<R: Rng>(len: usize, p: f64, rng: &mut R, mut emit: impl FnMut(usize, usize)) {
    if len < 2 || p <= 0.0 {
        return;
    }
    if p >= 1.0 {
        for i in 1..len {
            for j in 0..i {
                emit(i, j);
            }
        }
        return;
    }
    let log_q = (-p).ln_1p();
    let (mut v, mut w) = (1usize, -1i64);
    loop {
        let r: f64 = rng.gen();
        let skip = ((-r).ln_1p() / log_q).floor();
        if !skip.is_finite() || skip > 1e18 {
            return;
        }
        w += 1 + skip as i64;
        while w >= v as i64 && v < len {
            w -= v as i64;
            v += 1;
        }
        if v >= len {
            return;
        }
        emit(v, w as usize);
    }
}

/// Edges for a planted labeling: probability `p_in` within a community and `p_out` across.
fn planted_edges<R: Rng>(labels: &[u32], q: usize, p_in: f64, p_out: f64, rng: &mut R) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    let mut blocks: Vec<Vec<usize>> = vec![Vec::new(); q];
    for (v, &l) in labels.iter().enumerate() {
        blocks[l as usize].push(v);
    }
    for block in &blocks {
        skip_pairs(block.len(), p_in, rng, |i, j| edges.push((block[j], block[i])));
    }
    skip_pairs(labels.len(), p_out, rng, |i, j| {
        if labels[i] != labels[j] {
            edges.push((j, i));
        }
    });
    edges
}

/// Block model with i.i.d. uniform labels.
pub fn sample_sbm(p: &ModelParams, seed: u64) -> GraphSample {
    let mut rng = rng_for(seed, 0);
    let labels: Vec<u32> = (0..p.n).map(|_| rng.gen_range(0..p.q as u32)).collect();
    let edges = planted_edges(&labels, p.q, p.p_in(), p.p_out(), &mut rng);
    let truth = Labeling::from_total(p.q, labels).expect("labels drawn in range");
    GraphSample::from_edges(p.n, edges, truth, ModelTag::Sbm, seed).expect("sampled edges are valid")
}

/// Block model on a uniformly random partition with prescribed community sizes.
pub fn sample_tilde_sbm(n_prime: usize, sizes: &[usize], a_over_n: f64, b_over_n: f64, seed: u64) -> Result<GraphSample> {
    let total: usize = sizes.iter().sum();
    if total != n_prime {
        return Err(Error::SizeMismatch { expected: n_prime, got: total });
    }
    for (name, p) in [("a/n", a_over_n), ("b/n", b_over_n)] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParams(format!("{name} = {p} is not a probability")));
        }
    }
    let mut rng = rng_for(seed, 0);
    let mut labels: Vec<u32> = sizes
        .iter()
        .enumerate()
        .flat_map(|(c, &s)| std::iter::repeat(c as u32).take(s))
        .collect();
    labels.shuffle(&mut rng);
    let q = sizes.len();
    let edges = planted_edges(&labels, q, a_over_n, b_over_n, &mut rng);
    let truth = Labeling::from_total(q, labels)?;
    GraphSample::from_edges(n_prime, edges, truth, ModelTag::TildeSbm, seed)
}

/// `G(n, d/n)` with an empty truth labeling.
pub fn sample_er(n: usize, d: f64, seed: u64) -> Result<GraphSample> {
    let p = if n == 0 { 0.0 } else { d / n as f64 };
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParams(format!("d/n = {p} is not a probability")));
    }
    let mut rng = rng_for(seed, 0);
    let mut edges = Vec::new();
    skip_pairs(n, p, &mut rng, |i, j| edges.push((j, i)));
    GraphSample::from_edges(n, edges, Labeling::unassigned(n, 0), ModelTag::Er, seed)
}
