//! Efficient recovery by thresholding weighted non-backtracking walk sums
//! against a set of community representatives.
//!
//! Both algorithms share one pipeline: pick representatives from a random
//! vertex set `U`, split `V \ U` into `M` parts, and for every representative
//! `u_l` and part `V_i` sum the walk counts started from `N(u_l) ∩ V_i`. A
//! vertex keeps `l` as a candidate when the sum clears the threshold in every
//! part. The above-threshold variant is the special case `M = 1`.

use std::time::Instant;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::align::alignment;
use crate::error::{Error, Result};
use crate::graph::{GraphSample, Labeling};
use crate::nbwalk::{z_statistic_all, MAX_WALK_LENGTH};
use crate::params::{classify_regime, ModelParams};
use crate::sample::rng_for;

const STREAM_REPS: u64 = 1;
const STREAM_PARTS: u64 = 2;
const STREAM_FILL: u64 = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepresentativeSet {
    /// Sorted.
    pub u: Vec<usize>,
    /// `u_star[l]` represents label `l`.
    pub u_star: Vec<usize>,
    pub degree_floor: usize,
}

impl RepresentativeSet {
    pub fn in_u_mask(&self, n: usize) -> Vec<bool> {
        let mut mask = vec![false; n];
        for &v in &self.u {
            mask[v] = true;
        }
        mask
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoveryConfig {
    pub k: usize,
    pub m_parts: usize,
    pub beta: f64,
    pub threshold_factor: f64,
    /// Divide each part's statistic by `s_i^k / n_i` before thresholding.
    /// When false, raw sums are compared to the threshold.
    pub normalize: bool,
}

impl RecoveryConfig {
    pub fn new(k: usize, m_parts: usize) -> Self {
        Self { k, m_parts, beta: f64::NAN, threshold_factor: 0.25, normalize: true }
    }

    fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::BadLength(self.k));
        }
        if self.k > MAX_WALK_LENGTH {
            return Err(Error::RangeError(format!("walk length {} exceeds {MAX_WALK_LENGTH}", self.k)));
        }
        if self.m_parts < 1 {
            return Err(Error::InvalidParams("need at least one part".into()));
        }
        if !(self.threshold_factor > 0.0 && self.threshold_factor < 1.0) {
            return Err(Error::InvalidParams(format!("threshold factor {} not in (0, 1)", self.threshold_factor)));
        }
        Ok(())
    }
}

/// `max(1, ceil(ln ln n))`.
pub fn degree_floor(n: usize) -> usize {
    let ll = (n as f64).ln().ln();
    if ll.is_finite() && ll > 1.0 {
        ll.ceil() as usize
    } else {
        1
    }
}

/// Draws `U` of size `ceil(sqrt(n q))` and then `q` representatives among the
/// members of `U` with at least `floor` neighbours outside `U`.
pub fn select_representatives_with_floor(g: &GraphSample, q: usize, floor: usize, seed: u64) -> Result<RepresentativeSet> {
    let n = g.n();
    if q >= n {
        return Err(Error::InvalidParams(format!("need n > q, got n = {n}, q = {q}")));
    }
    let mut rng = rng_for(seed, STREAM_REPS);
    let size = ((n as f64 * q as f64).sqrt().ceil() as usize).clamp(q, n);
    let mut u = index::sample(&mut rng, n, size).into_vec();
    u.sort_unstable();
    let mut in_u = vec![false; n];
    for &v in &u {
        in_u[v] = true;
    }
    let candidates: Vec<usize> = u
        .iter()
        .copied()
        .filter(|&v| g.neighbors(v).iter().filter(|&&x| !in_u[x as usize]).count() >= floor)
        .collect();
    if candidates.len() < q {
        return Err(Error::InsufficientCandidates { found: candidates.len(), q, floor });
    }
    let u_star = index::sample(&mut rng, candidates.len(), q).into_iter().map(|i| candidates[i]).collect();
    Ok(RepresentativeSet { u, u_star, degree_floor: floor })
}

pub fn select_representatives(g: &GraphSample, q: usize, seed: u64) -> Result<RepresentativeSet> {
    select_representatives_with_floor(g, q, degree_floor(g.n()), seed)
}

fn k_for(beta: f64, n_part: f64) -> usize {
    ((beta * n_part.ln()).floor().max(1.0) as usize).min(MAX_WALK_LENGTH)
}

/// The partitioned schedule. The walk-length exponent lies strictly inside
/// `((1 - chi)/ln s, (2 chi - 1)/ln(d/s^2))`; when `s^2 >= d` the upper end is
/// vacuous and the exponent is pushed above both `(1 - chi)/ln s` and
/// `2/ln(s^2/d)` with a 10% margin.
pub fn choose_partitioned_schedule(p: &ModelParams) -> Result<RecoveryConfig> {
    let (d, s, chi) = (p.d(), p.s(), p.chi());
    if !(s > 1.0) {
        return Err(Error::EmptyInterval { lower: f64::INFINITY, upper: f64::NAN });
    }
    let lower = (1.0 - chi) / s.ln();
    let beta = if s * s >= d {
        let ks = if s * s > d { 2.0 / (s * s / d).ln() } else { f64::INFINITY };
        let b = 1.1 * lower.max(ks);
        if !b.is_finite() {
            return Err(Error::EmptyInterval { lower, upper: f64::INFINITY });
        }
        b
    } else {
        let upper = (2.0 * chi - 1.0) / (d / (s * s)).ln();
        if !(lower < upper) {
            return Err(Error::EmptyInterval { lower, upper });
        }
        0.5 * (lower + upper)
    };
    let m_parts = (d.ln().ceil() as usize).max(1);
    let k = k_for(beta, p.n as f64 / m_parts as f64);
    Ok(RecoveryConfig { k, m_parts, beta, threshold_factor: 0.25, normalize: true })
}

/// The unpartitioned schedule: exponent `1.1 * 2/ln(s^2/d)`, one part.
pub fn choose_whole_graph_schedule(p: &ModelParams) -> Result<RecoveryConfig> {
    let (d, s) = (p.d(), p.s());
    if !(s * s > d) {
        return Err(Error::EmptyInterval { lower: f64::INFINITY, upper: f64::INFINITY });
    }
    let beta = 2.2 / (s * s / d).ln();
    Ok(RecoveryConfig { k: k_for(beta, p.n as f64), m_parts: 1, beta, threshold_factor: 0.25, normalize: true })
}

/// Picks the schedule matching the instance's regime.
pub fn choose_schedule(p: &ModelParams) -> Result<RecoveryConfig> {
    if p.ks_snr() > 1.0 {
        choose_whole_graph_schedule(p)
    } else {
        choose_partitioned_schedule(p)
    }
}

/// A random split of `V \ U` into `m` parts whose sizes differ by at most one.
pub fn random_parts(n: usize, in_u: &[bool], m: usize, seed: u64) -> Vec<Vec<bool>> {
    let mut rest: Vec<usize> = (0..n).filter(|&v| !in_u[v]).collect();
    let mut rng = rng_for(seed, STREAM_PARTS);
    rest.shuffle(&mut rng);
    let mut parts = vec![vec![false; n]; m];
    for (i, v) in rest.into_iter().enumerate() {
        parts[i % m][v] = true;
    }
    parts
}

struct Pipeline<'a> {
    g: &'a GraphSample,
    p: &'a ModelParams,
    cfg: RecoveryConfig,
    reps: RepresentativeSet,
    in_u: Vec<bool>,
    parts: Vec<Vec<bool>>,
}

impl<'a> Pipeline<'a> {
    fn new(g: &'a GraphSample, p: &'a ModelParams, cfg: RecoveryConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        if p.n != g.n() {
            return Err(Error::LengthMismatch(p.n, g.n()));
        }
        if cfg.normalize && !(p.s() > 0.0) {
            return Err(Error::InvalidParams("normalized thresholds need s = (a - b)/q > 0".into()));
        }
        let reps = select_representatives(g, p.q, seed)?;
        let in_u = reps.in_u_mask(g.n());
        let parts = if cfg.m_parts == 1 {
            vec![in_u.iter().map(|&x| !x).collect()]
        } else {
            random_parts(g.n(), &in_u, cfg.m_parts, seed)
        };
        Ok(Self { g, p, cfg, reps, in_u, parts })
    }

    /// Per-label pass masks over all vertices: `out[w]` is true when the
    /// statistic for label `l` clears the threshold in every part.
    fn passes(&self, l: usize, factor: f64) -> Result<Vec<bool>> {
        let n = self.g.n();
        let rep = self.reps.u_star[l];
        let frac = self.p.a / (self.p.a + (self.p.q as f64 - 1.0) * self.p.b);
        let level = self.p.q as f64 * factor * frac;
        let mut ok = vec![true; n];
        for part in &self.parts {
            let n_i = part.iter().filter(|&&x| x).count();
            let deg_i = self.g.neighbors(rep).iter().filter(|&&u| part[u as usize]).count() as f64;
            let z = z_statistic_all(self.g, rep, part, self.cfg.k, self.p.d())?;
            let scale = if self.cfg.normalize {
                let s_i = self.p.s() * n_i as f64 / n as f64;
                s_i.powi(self.cfg.k as i32) / n_i as f64
            } else {
                1.0
            };
            let threshold = level * deg_i;
            for w in 0..n {
                ok[w] &= z[w] / scale > threshold;
            }
        }
        Ok(ok)
    }

    fn candidate_counts(&self) -> Result<(Vec<u32>, Vec<u32>)> {
        let n = self.g.n();
        let factor = self.cfg.threshold_factor;
        let (count, label) = (0..self.p.q)
            .into_par_iter()
            .map(|l| self.passes(l, factor).map(|ok| (l, ok)))
            .try_fold(
                || (vec![0u32; n], vec![u32::MAX; n]),
                |(mut count, mut label), res| {
                    let (l, ok) = res?;
                    for w in 0..n {
                        if ok[w] {
                            count[w] += 1;
                            label[w] = l as u32;
                        }
                    }
                    Ok::<_, Error>((count, label))
                },
            )
            .try_reduce(
                || (vec![0u32; n], vec![u32::MAX; n]),
                |(mut c1, mut l1), (c2, l2)| {
                    for w in 0..n {
                        c1[w] += c2[w];
                        if l2[w] != u32::MAX {
                            l1[w] = l2[w];
                        }
                    }
                    Ok((c1, l1))
                },
            )?;
        Ok((count, label))
    }

    fn run(self, seed: u64) -> Result<RecoveryOutcome> {
        let n = self.g.n();
        let q = self.p.q;
        let (count, label) = self.candidate_counts()?;
        let mut rng = rng_for(seed, STREAM_FILL);
        let mut out = vec![0u32; n];
        let (mut multi, mut zero, mut outside) = (0usize, 0usize, 0usize);
        for w in 0..n {
            if self.in_u[w] {
                out[w] = rng.gen_range(0..q as u32);
                continue;
            }
            outside += 1;
            match count[w] {
                1 => out[w] = label[w],
                c => {
                    if c == 0 {
                        zero += 1;
                    } else {
                        multi += 1;
                    }
                    out[w] = rng.gen_range(0..q as u32);
                }
            }
        }
        for (l, &u) in self.reps.u_star.iter().enumerate() {
            out[u] = l as u32;
        }
        let denom = outside.max(1) as f64;
        Ok(RecoveryOutcome {
            labeling: Labeling::from_total(q, out)?,
            reps: self.reps,
            cfg: self.cfg,
            fraction_multi_candidate: multi as f64 / denom,
            fraction_zero_candidate: zero as f64 / denom,
        })
    }
}

#[derive(Debug, Clone)]
pub struct RecoveryOutcome {
    pub labeling: Labeling,
    pub reps: RepresentativeSet,
    pub cfg: RecoveryConfig,
    pub fraction_multi_candidate: f64,
    pub fraction_zero_candidate: f64,
}

/// Partitioned recovery. Vertices with zero or several surviving candidates,
/// and the non-representative members of `U`, get uniform random labels.
pub fn recover_below_ks(g: &GraphSample, p: &ModelParams, cfg: &RecoveryConfig, seed: u64) -> Result<RecoveryOutcome> {
    Pipeline::new(g, p, *cfg, seed)?.run(seed)
}

/// Whole-graph recovery: walks avoid `U`, one part.
pub fn recover_above_ks(g: &GraphSample, p: &ModelParams, cfg: &RecoveryConfig, seed: u64) -> Result<RecoveryOutcome> {
    let cfg = RecoveryConfig { m_parts: 1, ..*cfg };
    Pipeline::new(g, p, cfg, seed)?.run(seed)
}

/// Candidate label sets for every vertex at the given threshold factor,
/// using the same representatives and parts as a recovery run with `seed`.
pub fn candidate_sets(g: &GraphSample, p: &ModelParams, cfg: &RecoveryConfig, factor: f64, seed: u64) -> Result<Vec<Vec<u32>>> {
    let pipe = Pipeline::new(g, p, *cfg, seed)?;
    let mut sets = vec![Vec::new(); g.n()];
    for l in 0..p.q {
        let ok = pipe.passes(l, factor)?;
        for (w, set) in sets.iter_mut().enumerate() {
            if ok[w] && !pipe.in_u[w] {
                set.push(l as u32);
            }
        }
    }
    Ok(sets)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecoveryTrial {
    pub seed: u64,
    pub params: ModelParams,
    pub regime: String,
    pub k: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub alignment: f64,
    pub fraction_multi_candidate: f64,
    pub fraction_zero_candidate: f64,
    pub wall_time_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algo {
    BelowKs,
    AboveKs,
}

/// Runs one algorithm on `g` and scores it against the planted labels.
pub fn run_trial(g: &GraphSample, p: &ModelParams, algo: Algo, cfg: &RecoveryConfig, seed: u64) -> Result<RecoveryTrial> {
    let start = Instant::now();
    let out = match algo {
        Algo::BelowKs => recover_below_ks(g, p, cfg, seed)?,
        Algo::AboveKs => recover_above_ks(g, p, cfg, seed)?,
    };
    let alignment = alignment(&out.labeling, &g.truth, p.q)?;
    Ok(RecoveryTrial {
        seed,
        params: *p,
        regime: classify_regime(p).kind.to_string(),
        k: out.cfg.k,
        m: out.cfg.m_parts,
        alignment,
        fraction_multi_candidate: out.fraction_multi_candidate,
        fraction_zero_candidate: out.fraction_zero_candidate,
        wall_time_ms: start.elapsed().as_millis() as u64,
    })
}
