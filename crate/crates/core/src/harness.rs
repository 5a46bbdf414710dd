//! Seeded parameter sweeps and phase-diagram tables.
//!
//! A sweep is described by a small TOML file:
//!
//! ```toml
//! base_seed = 7
//! trials = 3
//! algorithms = ["above_ks", "detect", "lowdeg_bound"]
//! n = [2000]
//! d = [5.0, 10.0]
//! chi = [0.3]        # or q = [...]
//! kappa = [0.25]     # or lambda = [...]
//! lowdeg_degree = 10
//! search_budget = 2000000
//! above_ks_fallback_k = 12
//! ```
//!
//! With `chi`/`kappa` the grid uses `q = round(n^chi)` and `lambda = d^-kappa`.

use std::io::Write;
use std::time::Instant;

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::align::alignment;
use crate::detection::{detect_triangle, Verdict};
use crate::error::{Error, Result};
use crate::it_recovery::{recover_inefficient, SearchMode, EXHAUSTIVE_MAX_N, EXHAUSTIVE_MAX_STATES};
use crate::lowdeg::corr_bound;
use crate::params::{classify_regime, ModelParams};
use crate::recovery::{choose_partitioned_schedule, choose_whole_graph_schedule, recover_above_ks, recover_below_ks, RecoveryConfig};
use crate::sample::{rng_for, sample_er, sample_sbm};

pub const WORKERS_ENV: &str = "SBM_LAB_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgoName {
    BelowKs,
    AboveKs,
    Inefficient,
    Detect,
    LowdegBound,
}

fn default_lowdeg_degree() -> usize {
    10
}

fn default_budget() -> u64 {
    2_000_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub base_seed: u64,
    pub trials: usize,
    #[serde(default)]
    pub algorithms: Vec<AlgoName>,
    pub n: Vec<usize>,
    pub d: Vec<f64>,
    #[serde(default)]
    pub q: Vec<usize>,
    #[serde(default)]
    pub chi: Vec<f64>,
    #[serde(default)]
    pub lambda: Vec<f64>,
    #[serde(default)]
    pub kappa: Vec<f64>,
    /// Degree `D` for the low-degree bound column.
    #[serde(default = "default_lowdeg_degree")]
    pub lowdeg_degree: usize,
    /// Vertex evaluations allowed to the partition search.
    #[serde(default = "default_budget")]
    pub search_budget: u64,
    /// Walk length for `above_ks` where neither schedule is defined.
    #[serde(default)]
    pub above_ks_fallback_k: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub index: usize,
    pub n: usize,
    pub q: usize,
    pub d: f64,
    pub lambda: f64,
    pub chi: Option<f64>,
    pub kappa: Option<f64>,
}

impl SweepSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let spec: SweepSpec = toml::from_str(text).map_err(|e| Error::ConfigError(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::ConfigError(m.into()));
        if self.trials == 0 {
            return bad("trials must be at least 1");
        }
        if self.n.is_empty() || self.d.is_empty() {
            return bad("n and d must be nonempty");
        }
        if self.q.is_empty() == self.chi.is_empty() {
            return bad("give exactly one of q or chi");
        }
        if self.lambda.is_empty() == self.kappa.is_empty() {
            return bad("give exactly one of lambda or kappa");
        }
        if self.chi.iter().chain(&self.kappa).chain(&self.d).chain(&self.lambda).any(|x| !x.is_finite()) {
            return bad("grid values must be finite");
        }
        let mut algos = self.algorithms.clone();
        algos.sort();
        algos.dedup();
        if algos.len() != self.algorithms.len() {
            return bad("algorithms must not repeat");
        }
        Ok(())
    }

    /// Grid points in row-major order over `n`, `q`/`chi`, `d`, `lambda`/`kappa`.
    pub fn points(&self) -> Vec<GridPoint> {
        let qs: Vec<(usize, Option<f64>)> = if self.q.is_empty() {
            Vec::new()
        } else {
            self.q.iter().map(|&q| (q, None)).collect()
        };
        let mut out = Vec::new();
        for &n in &self.n {
            let qs_here: Vec<(usize, Option<f64>)> = if qs.is_empty() {
                self.chi.iter().map(|&c| (((n as f64).powf(c).round() as usize).max(1), Some(c))).collect()
            } else {
                qs.clone()
            };
            for &(q, chi) in &qs_here {
                for &d in &self.d {
                    let lams: Vec<(f64, Option<f64>)> = if self.lambda.is_empty() {
                        self.kappa.iter().map(|&k| (d.powf(-k), Some(k))).collect()
                    } else {
                        self.lambda.iter().map(|&l| (l, None)).collect()
                    };
                    for (lambda, kappa) in lams {
                        out.push(GridPoint { index: out.len(), n, q, d, lambda, chi, kappa });
                    }
                }
            }
        }
        out
    }
}

/// Seed for one trial, mixed from the base seed and the grid coordinates.
pub fn trial_seed(base: u64, point: usize, trial: usize) -> u64 {
    rng_for(base, ((point as u64) << 32) | trial as u64).next_u64()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub point: usize,
    pub trial: usize,
    pub seed: u64,
    pub n: usize,
    pub q: usize,
    pub d: f64,
    pub lambda: f64,
    pub chi: Option<f64>,
    pub kappa: Option<f64>,
    pub algorithms: Vec<AlgoName>,
    pub regime: Option<String>,
    pub below_ks: Option<f64>,
    pub above_ks: Option<f64>,
    pub inefficient: Option<f64>,
    pub detect_sbm_correct: Option<bool>,
    pub detect_er_correct: Option<bool>,
    pub lowdeg_bound: Option<f64>,
    pub errors: Vec<String>,
    pub wall_time_ms: u64,
}

impl TrialRecord {
    pub fn is_error(&self) -> bool {
        !self.errors.is_empty()
    }
}

fn note<T>(errors: &mut Vec<String>, algo: &str, r: Result<T>) -> Option<T> {
    r.map_err(|e| errors.push(format!("{algo}: {e}"))).ok()
}

pub fn run_point_trial(spec: &SweepSpec, pt: &GridPoint, trial: usize) -> TrialRecord {
    let start = Instant::now();
    let seed = trial_seed(spec.base_seed, pt.index, trial);
    let mut rec = TrialRecord {
        point: pt.index,
        trial,
        seed,
        n: pt.n,
        q: pt.q,
        d: pt.d,
        lambda: pt.lambda,
        chi: pt.chi,
        kappa: pt.kappa,
        algorithms: spec.algorithms.clone(),
        regime: None,
        below_ks: None,
        above_ks: None,
        inefficient: None,
        detect_sbm_correct: None,
        detect_er_correct: None,
        lowdeg_bound: None,
        errors: Vec::new(),
        wall_time_ms: 0,
    };
    let Some(p) = note(&mut rec.errors, "params", ModelParams::from_degree(pt.n, pt.q, pt.d, pt.lambda)) else {
        return rec;
    };
    rec.regime = Some(classify_regime(&p).kind.to_string());
    let needs_graph = spec.algorithms.iter().any(|a| *a != AlgoName::LowdegBound);
    let g = needs_graph.then(|| sample_sbm(&p, seed));
    for algo in &spec.algorithms {
        let g = g.as_ref();
        match algo {
            AlgoName::BelowKs => {
                let r = choose_partitioned_schedule(&p)
                    .and_then(|cfg| recover_below_ks(g.unwrap(), &p, &cfg, seed))
                    .and_then(|o| alignment(&o.labeling, &g.unwrap().truth, p.q));
                rec.below_ks = note(&mut rec.errors, "below_ks", r);
            }
            AlgoName::AboveKs => {
                // Below the KS line the whole-graph schedule is undefined; fall
                // back to the partitioned walk length, then to the configured one.
                let r = choose_whole_graph_schedule(&p)
                    .or_else(|_| choose_partitioned_schedule(&p))
                    .or_else(|e| spec.above_ks_fallback_k.map(|k| RecoveryConfig::new(k, 1)).ok_or(e))
                    .and_then(|cfg| recover_above_ks(g.unwrap(), &p, &cfg, seed))
                    .and_then(|o| alignment(&o.labeling, &g.unwrap().truth, p.q));
                rec.above_ks = note(&mut rec.errors, "above_ks", r);
            }
            AlgoName::Inefficient => {
                let states = (p.q as f64).powi(p.n as i32);
                let mode = if p.n <= EXHAUSTIVE_MAX_N && states <= EXHAUSTIVE_MAX_STATES {
                    SearchMode::Exhaustive
                } else {
                    SearchMode::Heuristic
                };
                let r = recover_inefficient(g.unwrap(), &p, mode, spec.search_budget, seed)
                    .and_then(|o| alignment(&o.labeling, &g.unwrap().truth, p.q));
                rec.inefficient = note(&mut rec.errors, "inefficient", r);
            }
            AlgoName::Detect => {
                let null_seed = rng_for(seed, 1).next_u64();
                let r = detect_triangle(g.unwrap(), &p).and_then(|v| {
                    let er = sample_er(p.n, p.d(), null_seed)?;
                    Ok((v.verdict == Verdict::Sbm, detect_triangle(&er, &p)?.verdict == Verdict::Er))
                });
                if let Some((s, e)) = note(&mut rec.errors, "detect", r) {
                    rec.detect_sbm_correct = Some(s);
                    rec.detect_er_correct = Some(e);
                }
            }
            AlgoName::LowdegBound => {
                let rep = corr_bound(spec.lowdeg_degree, &p);
                rec.lowdeg_bound = Some(rep.bound_item1.unwrap_or(rep.bound_item2));
            }
        }
    }
    rec.wall_time_ms = start.elapsed().as_millis() as u64;
    rec
}

fn workers_from_env() -> Option<usize> {
    std::env::var(WORKERS_ENV).ok()?.trim().parse().ok().filter(|&w| w > 0)
}

/// Runs every `(point, trial)` pair. Failures become error rows; the output
/// is ordered by point then trial regardless of scheduling.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<TrialRecord>> {
    spec.validate()?;
    let jobs: Vec<(GridPoint, usize)> = spec.points().into_iter().flat_map(|pt| (0..spec.trials).map(move |t| (pt, t))).collect();
    let run = || jobs.par_iter().map(|(pt, t)| run_point_trial(spec, pt, *t)).collect::<Vec<_>>();
    match workers_from_env() {
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(w).build().map_err(|e| Error::ConfigError(e.to_string()))?;
            Ok(pool.install(run))
        }
        None => Ok(run()),
    }
}

pub fn write_jsonl<W: Write>(records: &[TrialRecord], mut w: W) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r).map_err(|e| Error::Io(e.into()))?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Column order of the phase table.
pub const PHASE_COLUMNS: [&str; 15] = [
    "point",
    "n",
    "q",
    "d",
    "lambda",
    "chi",
    "kappa",
    "regime",
    "trials",
    "error_rows",
    "align_below_ks",
    "align_above_ks",
    "align_inefficient",
    "detect_power",
    "lowdeg_bound",
];

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, c) = xs.fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
    (c > 0).then(|| s / c as f64)
}

fn cell(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// One row per grid point: mean alignment per algorithm over the trials that
/// produced one, detection power averaged over both hypotheses, the bound and
/// the regime label. Columns follow `PHASE_COLUMNS`.
pub fn emit_phase_csv(records: &[TrialRecord]) -> Result<String> {
    if let Some(first) = records.first() {
        if let Some(r) = records.iter().find(|r| r.algorithms != first.algorithms) {
            return Err(Error::SchemaMismatch(format!(
                "record ({}, {}) ran {:?}, expected {:?}",
                r.point, r.trial, r.algorithms, first.algorithms
            )));
        }
    }
    let mut groups: Vec<Vec<&TrialRecord>> = Vec::new();
    for r in records {
        match groups.iter_mut().find(|g| g[0].point == r.point) {
            Some(g) => {
                let h = g[0];
                if (h.n, h.q, h.d.to_bits(), h.lambda.to_bits()) != (r.n, r.q, r.d.to_bits(), r.lambda.to_bits()) {
                    return Err(Error::SchemaMismatch(format!("point {} has inconsistent coordinates", r.point)));
                }
                g.push(r);
            }
            None => groups.push(vec![r]),
        }
    }
    groups.sort_by_key(|g| g[0].point);
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(PHASE_COLUMNS).map_err(csv_err)?;
    for g in groups {
        let h = g[0];
        let power = mean(g.iter().flat_map(|r| {
            [r.detect_sbm_correct, r.detect_er_correct].into_iter().flatten().map(|b| f64::from(u8::from(b)))
        }));
        let row = [
            h.point.to_string(),
            h.n.to_string(),
            h.q.to_string(),
            h.d.to_string(),
            h.lambda.to_string(),
            cell(h.chi),
            cell(h.kappa),
            h.regime.clone().unwrap_or_default(),
            g.len().to_string(),
            g.iter().filter(|r| r.is_error()).count().to_string(),
            cell(mean(g.iter().filter_map(|r| r.below_ks))),
            cell(mean(g.iter().filter_map(|r| r.above_ks))),
            cell(mean(g.iter().filter_map(|r| r.inefficient))),
            cell(power),
            cell(mean(g.iter().filter_map(|r| r.lowdeg_bound))),
        ];
        w.write_record(&row).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(std::io::Error::other(e)))
}
