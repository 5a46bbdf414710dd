//! Telling a block model apart from an Erdős–Rényi graph of the same average
//! degree, and the pairwise common-neighbour test.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::GraphSample;
use crate::params::ModelParams;

/// Number of triangles, by merging sorted neighbour lists along each edge.
pub fn count_triangles(g: &GraphSample) -> u64 {
    let mut count = 0u64;
    for &(u, v) in g.edges() {
        let (a, b) = (g.neighbors(u as usize), g.neighbors(v as usize));
        // Only count the apex above v so each triangle is seen once.
        let (mut i, mut j) = (a.partition_point(|&x| x <= v), b.partition_point(|&x| x <= v));
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    count += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
    }
    count
}

fn choose2(x: f64) -> f64 {
    x * (x - 1.0) / 2.0
}

fn choose3(x: f64) -> f64 {
    x * (x - 1.0) * (x - 2.0) / 6.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TriangleModel {
    /// `G(n, d/n)`.
    Er,
    /// Block model with `q` communities of exactly `n/q` vertices each
    /// (real-valued `n/q`).
    Sbm,
    /// Block model with i.i.d. uniform labels, as produced by `sample_sbm`.
    SbmIid,
}

/// Expected triangle count under the given model.
pub fn expected_triangles(p: &ModelParams, model: TriangleModel) -> f64 {
    let n = p.n as f64;
    let q = p.q as f64;
    let (pa, pb) = (p.p_in(), p.p_out());
    match model {
        TriangleModel::Er => choose3(n) * (p.d() / n).powi(3),
        TriangleModel::Sbm => {
            let m = n / q;
            q * choose3(m) * pa.powi(3) + q * (q - 1.0) * choose2(m) * m * pa * pb * pb + choose3(q) * m.powi(3) * pb.powi(3)
        }
        TriangleModel::SbmIid => {
            let q2 = q * q;
            choose3(n) * (pa.powi(3) / q2 + 3.0 * (q - 1.0) / q2 * pa * pb * pb + (q - 1.0) * (q - 2.0) / q2 * pb.powi(3))
        }
    }
}

/// Leading-order variance of the block-model triangle count:
/// the mean plus the contribution of pairs of within-community triangles
/// sharing an edge.
pub fn triangle_variance_sbm(p: &ModelParams) -> f64 {
    let n = p.n as f64;
    let q = p.q as f64;
    let m = n / q;
    let pa = p.p_in();
    let choose4 = m * (m - 1.0) * (m - 2.0) * (m - 3.0) / 24.0;
    expected_triangles(p, TriangleModel::Sbm) + q * 4.0 * choose4 * (pa.powi(5) - pa.powi(6))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "SBM")]
    Sbm,
    #[serde(rename = "ER")]
    Er,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionVerdict {
    pub statistic: f64,
    pub threshold: f64,
    pub verdict: Verdict,
    pub expected_er: f64,
    pub expected_sbm: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

/// Triangle test with the threshold at the geometric mean of the two expected counts.
pub fn detect_triangle(g: &GraphSample, p: &ModelParams) -> Result<DetectionVerdict> {
    let expected_er = expected_triangles(p, TriangleModel::Er);
    let expected_sbm = expected_triangles(p, TriangleModel::Sbm);
    let gap = (expected_sbm - expected_er).abs();
    if gap < 1.0 {
        return Err(Error::DegenerateGap { gap });
    }
    let threshold = (expected_er * expected_sbm).sqrt();
    let statistic = count_triangles(g) as f64;
    let ql3 = p.q as f64 * p.lambda().powi(3);
    let warning = ((ql3 - 1.0).abs() < 0.5)
        .then(|| format!("q lambda^3 = {ql3:.3} is close to 1; the two expectations nearly coincide"));
    let verdict = if statistic > threshold { Verdict::Sbm } else { Verdict::Er };
    Ok(DetectionVerdict { statistic, threshold, verdict, expected_er, expected_sbm, warning })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PairVerdict {
    Same,
    Different,
}

pub fn common_neighbors(g: &GraphSample, u: usize, v: usize) -> usize {
    let (a, b) = (g.neighbors(u), g.neighbors(v));
    let (mut i, mut j, mut c) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                c += 1;
                i += 1;
                j += 1;
            }
        }
    }
    c
}

/// Threshold on the common-neighbour count: the different-community mean
/// plus half the gap between the two means.
pub fn common_neighbor_threshold(p: &ModelParams) -> f64 {
    let (n, q, a, b) = (p.n as f64, p.q as f64, p.a, p.b);
    let mu_diff = 2.0 * a * b / (n * q) + b * b * (1.0 - 2.0 / q) / n;
    mu_diff + (a - b).powi(2) / (2.0 * n * q)
}

pub fn common_neighbor_test(g: &GraphSample, u: usize, v: usize, p: &ModelParams) -> Result<PairVerdict> {
    if u == v {
        return Err(Error::InvalidParams("common-neighbour test needs two distinct vertices".into()));
    }
    let x = common_neighbors(g, u, v) as f64;
    Ok(if x >= common_neighbor_threshold(p) { PairVerdict::Same } else { PairVerdict::Different })
}
