//! Exponential-time recovery: split the edges in two, find a partition with
//! many within-community edges on the first half, then sharpen it with one
//! belief-propagation step over the second half.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{GraphSample, Labeling};
use crate::params::ModelParams;
use crate::sample::rng_for;

const STREAM_SPLIT: u64 = 11;
const STREAM_TIES: u64 = 12;
const STREAM_RESTART_BASE: u64 = 1 << 20;

pub const EXHAUSTIVE_MAX_N: usize = 14;
pub const EXHAUSTIVE_MAX_STATES: f64 = 5e7;
pub const HEURISTIC_MAX_N: usize = 10_000;

/// A probability vector over the `q` labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefVector {
    pub probs: Vec<f64>,
}

impl BeliefVector {
    pub fn uniform(q: usize) -> Self {
        Self { probs: vec![1.0 / q as f64; q] }
    }

    /// Mass `beta` on `label`, the rest spread evenly.
    pub fn peaked(q: usize, label: u32, beta: f64) -> Self {
        let rest = if q > 1 { (1.0 - beta) / (q as f64 - 1.0) } else { 0.0 };
        let mut probs = vec![rest; q];
        probs[label as usize] = if q > 1 { beta } else { 1.0 };
        Self { probs }
    }

    pub fn argmax_ties(&self) -> Vec<u32> {
        let max = self.probs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (0..self.probs.len() as u32).filter(|&j| self.probs[j as usize] == max).collect()
    }
}

/// One belief-propagation update at a vertex from its neighbours' beliefs:
/// `X(j) ∝ prod_i [1 + lambda q (X_i(j) - 1/q)]`, evaluated in log space.
pub fn bp_step(neighbors: &[BeliefVector], lambda: f64, q: usize) -> Result<BeliefVector> {
    if q == 0 {
        return Err(Error::InvalidParams("q must be positive".into()));
    }
    let qf = q as f64;
    let mut logw = vec![0.0f64; q];
    for x in neighbors {
        if x.probs.len() != q {
            return Err(Error::LengthMismatch(x.probs.len(), q));
        }
        for (j, lw) in logw.iter_mut().enumerate() {
            let factor = 1.0 + lambda * qf * (x.probs[j] - 1.0 / qf);
            if factor < 0.0 {
                return Err(Error::InvalidParams(format!("negative BP factor {factor}")));
            }
            *lw += factor.ln();
        }
    }
    let max = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::NumericalUnderflow);
    }
    let w: Vec<f64> = logw.iter().map(|&l| (l - max).exp()).collect();
    let total: f64 = w.iter().sum();
    Ok(BeliefVector { probs: w.into_iter().map(|x| x / total).collect() })
}

/// Splits the edges by independent fair coins.
pub fn split_edges(g: &GraphSample, seed: u64) -> Result<(GraphSample, GraphSample)> {
    let mut rng = rng_for(seed, STREAM_SPLIT);
    let (mut e1, mut e2) = (Vec::new(), Vec::new());
    for &(u, v) in g.edges() {
        if rng.gen::<bool>() {
            e1.push((u as usize, v as usize));
        } else {
            e2.push((u as usize, v as usize));
        }
    }
    Ok((g.with_edges(e1)?, g.with_edges(e2)?))
}

/// Allowed community sizes: `n/q ± 2 sqrt(n/q)`, and never empty.
pub fn balance_window(n: usize, q: usize) -> (usize, usize) {
    let m = n as f64 / q as f64;
    let slack = 2.0 * m.sqrt();
    let lo = ((m - slack).ceil().max(1.0)) as usize;
    let hi = ((m + slack).floor() as usize).max(m.ceil() as usize).min(n);
    (lo.min(hi), hi)
}

pub fn within_edges(g: &GraphSample, labels: &[u32]) -> u64 {
    g.edges().iter().filter(|&&(u, v)| labels[u as usize] == labels[v as usize]).count() as u64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SearchMode {
    Exhaustive,
    Heuristic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub labeling: Labeling,
    pub objective: u64,
    pub evaluations: u64,
}

fn search_exhaustive(g: &GraphSample, q: usize) -> Result<SearchResult> {
    let n = g.n();
    if n > EXHAUSTIVE_MAX_N || (q as f64).powi(n as i32) > EXHAUSTIVE_MAX_STATES {
        return Err(Error::TooLarge(format!("{q}^{n} labelings")));
    }
    let (lo, hi) = balance_window(n, q);
    let mut labels = vec![0u32; n];
    let mut sizes = vec![0usize; q];
    sizes[0] = n;
    let mut best: Option<(u64, Vec<u32>)> = None;
    let mut evaluations = 0u64;
    loop {
        if sizes.iter().all(|&s| s >= lo && s <= hi) {
            evaluations += 1;
            let obj = within_edges(g, &labels);
            if best.as_ref().map_or(true, |(b, _)| obj > *b) {
                best = Some((obj, labels.clone()));
            }
        }
        let mut i = 0;
        loop {
            if i == n {
                let (objective, labels) = best.ok_or_else(|| Error::InvalidParams("no balanced labeling".into()))?;
                return Ok(SearchResult { labeling: Labeling::from_total(q, labels)?, objective, evaluations });
            }
            sizes[labels[i] as usize] -= 1;
            labels[i] += 1;
            if (labels[i] as usize) < q {
                sizes[labels[i] as usize] += 1;
                break;
            }
            labels[i] = 0;
            sizes[0] += 1;
            i += 1;
        }
    }
}

/// Greedy single-vertex label moves to a local optimum from a random balanced start.
/// Returns `None` if the evaluation budget ran out first.
fn greedy_restart(g: &GraphSample, q: usize, seed: u64, restart: u64, budget: u64, evals: &mut u64) -> (Option<u64>, Vec<u32>) {
    let n = g.n();
    let (lo, hi) = balance_window(n, q);
    let mut rng = rng_for(seed, STREAM_RESTART_BASE + restart);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut labels = vec![0u32; n];
    let mut sizes = vec![0usize; q];
    for (i, &v) in order.iter().enumerate() {
        labels[v] = (i % q) as u32;
        sizes[i % q] += 1;
    }
    let mut obj = within_edges(g, &labels);
    let mut tally = vec![0u32; q];
    loop {
        let mut improved = false;
        order.shuffle(&mut rng);
        for &v in &order {
            if *evals >= budget {
                return (None, labels);
            }
            *evals += 1;
            let x = labels[v] as usize;
            if sizes[x] <= lo {
                continue;
            }
            for &u in g.neighbors(v) {
                tally[labels[u as usize] as usize] += 1;
            }
            let here = tally[x];
            let mut best = (0u32, x);
            for &u in g.neighbors(v) {
                let y = labels[u as usize] as usize;
                if y != x && sizes[y] < hi && tally[y] > here && tally[y] - here > best.0 {
                    best = (tally[y] - here, y);
                }
            }
            for &u in g.neighbors(v) {
                tally[labels[u as usize] as usize] = 0;
            }
            if best.1 != x {
                labels[v] = best.1 as u32;
                sizes[x] -= 1;
                sizes[best.1] += 1;
                obj += best.0 as u64;
                improved = true;
            }
        }
        if !improved {
            return (Some(obj), labels);
        }
    }
}

fn search_heuristic(g: &GraphSample, q: usize, budget: u64, seed: u64) -> Result<SearchResult> {
    if g.n() > HEURISTIC_MAX_N {
        return Err(Error::TooLarge(format!("n = {} exceeds {HEURISTIC_MAX_N}", g.n())));
    }
    let mut evals = 0u64;
    let mut best: Option<(u64, Vec<u32>)> = None;
    let mut restart = 0u64;
    loop {
        let (done, labels) = greedy_restart(g, q, seed, restart, budget, &mut evals);
        restart += 1;
        match done {
            Some(obj) => {
                if best.as_ref().map_or(true, |(b, _)| obj > *b) {
                    best = Some((obj, labels));
                }
            }
            None => {
                return match best {
                    Some((objective, labels)) => Ok(SearchResult {
                        labeling: Labeling::from_total(q, labels)?,
                        objective,
                        evaluations: evals,
                    }),
                    None => {
                        let objective = within_edges(g, &labels);
                        Err(Error::BudgetExceeded {
                            evaluations: evals,
                            best: Labeling::from_total(q, labels)?,
                            objective,
                        })
                    }
                };
            }
        }
    }
}

/// Searches balanced labelings for the most within-community edges.
pub fn search_good_partition(g: &GraphSample, q: usize, mode: SearchMode, budget: u64, seed: u64) -> Result<SearchResult> {
    if q == 0 || q > g.n() {
        return Err(Error::InvalidParams(format!("need 1 <= q <= n, got q = {q}")));
    }
    match mode {
        SearchMode::Exhaustive => search_exhaustive(g, q),
        SearchMode::Heuristic => search_heuristic(g, q, budget, seed),
    }
}

#[derive(Debug, Clone)]
pub struct InefficientOutcome {
    pub labeling: Labeling,
    pub search: SearchResult,
    /// Belief mass placed on the searched label.
    pub beta: f64,
    /// `q^(-2/(d lambda))`, for comparison only.
    pub analytic_beta: f64,
    /// Fraction of vertices whose BP label differs from the searched label.
    pub bp_flip_fraction: f64,
}

/// Split, search on the first half, one BP step on the second half.
pub fn recover_inefficient(g: &GraphSample, p: &ModelParams, mode: SearchMode, budget: u64, seed: u64) -> Result<InefficientOutcome> {
    let q = p.q;
    let (g1, g2) = split_edges(g, seed)?;
    let search = search_good_partition(&g1, q, mode, budget, seed)?;
    let tau = search.labeling.to_total()?;
    let beta = if g1.m() == 0 {
        1.0 / q as f64
    } else {
        (search.objective as f64 / g1.m() as f64).clamp(1.0 / q as f64, 1.0 - 1e-9)
    };
    let lambda = p.lambda();
    let beliefs: Vec<BeliefVector> = tau.iter().map(|&l| BeliefVector::peaked(q, l, beta)).collect();
    // `None` marks a vertex without E2 neighbours; it keeps its search label.
    let posteriors: Vec<Option<BeliefVector>> = (0..g.n())
        .into_par_iter()
        .map(|v| {
            let nb: Vec<BeliefVector> = g2.neighbors(v).iter().map(|&u| beliefs[u as usize].clone()).collect();
            if nb.is_empty() {
                Ok(None)
            } else {
                bp_step(&nb, lambda, q).map(Some)
            }
        })
        .collect::<Result<_>>()?;
    let mut rng = rng_for(seed, STREAM_TIES);
    let mut out = Vec::with_capacity(g.n());
    let mut flips = 0usize;
    for (v, post) in posteriors.iter().enumerate() {
        let l = match post {
            None => tau[v],
            Some(post) => {
                let ties = post.argmax_ties();
                if ties.len() == 1 { ties[0] } else { ties[rng.gen_range(0..ties.len())] }
            }
        };
        flips += usize::from(l != tau[v]);
        out.push(l);
    }
    let dl = p.d() * lambda;
    Ok(InefficientOutcome {
        labeling: Labeling::from_total(q, out)?,
        search,
        beta,
        analytic_beta: if dl > 0.0 { (q as f64).powf(-2.0 / dl) } else { f64::NAN },
        bp_flip_fraction: flips as f64 / g.n().max(1) as f64,
    })
}

/// A labelled root with its labelled children.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BroadcastTree {
    pub root_label: u32,
    pub child_labels: Vec<u32>,
}

impl BroadcastTree {
    pub fn same_label_children(&self) -> usize {
        self.child_labels.iter().filter(|&&l| l == self.root_label).count()
    }
}

/// Depth-1 broadcast tree: `Bin(n - 1, d/n)` children, each sharing the root's
/// label with probability `1/q + lambda (q-1)/q` and uniform over the other
/// labels otherwise.
pub fn sample_broadcast_tree<R: Rng>(d: f64, lambda: f64, q: usize, n: usize, rng: &mut R) -> Result<BroadcastTree> {
    if q < 1 || n < 1 {
        return Err(Error::InvalidParams("need q >= 1 and n >= 1".into()));
    }
    let p = d / n as f64;
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParams(format!("d/n = {p} is not a probability")));
    }
    let qf = q as f64;
    let same = 1.0 / qf + lambda * (qf - 1.0) / qf;
    if !(0.0..=1.0 + 1e-12).contains(&same) {
        return Err(Error::NegativeRate { lambda, q });
    }
    let root_label = rng.gen_range(0..q as u32);
    let children = Binomial::new((n - 1) as u64, p).expect("valid binomial").sample(rng);
    let child_labels = (0..children)
        .map(|_| {
            if q == 1 || rng.gen::<f64>() < same {
                root_label
            } else {
                let other = rng.gen_range(0..q as u32 - 1);
                if other >= root_label {
                    other + 1
                } else {
                    other
                }
            }
        })
        .collect();
    Ok(BroadcastTree { root_label, child_labels })
}
