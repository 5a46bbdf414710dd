//! Weighted non-backtracking walk sums over the centered weights
//! `W_uv = 1{uv edge} - d/n` (and `W_vv = 0`).
//!
//! The fast path is a message-passing recurrence over directed edges. Walks
//! through non-edges all carry the same weight `-d/n`, so their messages only
//! ever enter through two aggregated per-vertex sums; one step therefore costs
//! `O(m + n)` even though the weight matrix is dense.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::graph::GraphSample;

/// Walk lengths beyond this are rejected.
pub const MAX_WALK_LENGTH: usize = 200;

/// Exhaustive enumeration limits.
pub const BRUTE_MAX_N: usize = 12;
pub const BRUTE_MAX_K: usize = 7;

/// The centered weight matrix restricted to allowed vertices, applied
/// implicitly.
pub struct WeightOperator<'g> {
    g: &'g GraphSample,
    c: f64,
    allowed: Vec<bool>,
}

impl<'g> WeightOperator<'g> {
    pub fn new(g: &'g GraphSample, d: f64, avoid: &[usize]) -> Self {
        let allowed = allowed_mask(g.n(), avoid);
        Self { g, c: -d / g.n() as f64, allowed }
    }

    pub fn weight(&self, u: usize, v: usize) -> f64 {
        if u == v || !self.allowed[u] || !self.allowed[v] {
            0.0
        } else if self.g.has_edge(u, v) {
            1.0 + self.c
        } else {
            self.c
        }
    }

    /// `W x` as `A x - (d/n)(sum(x) 1 - x)` on allowed coordinates.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.g.n();
        let xs: Vec<f64> = (0..n).map(|v| if self.allowed[v] { x[v] } else { 0.0 }).collect();
        let total: f64 = xs.iter().sum();
        (0..n)
            .map(|v| {
                if !self.allowed[v] {
                    return 0.0;
                }
                let ax: f64 = self.g.neighbors(v).iter().map(|&u| xs[u as usize]).sum();
                ax + self.c * (total - xs[v])
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WalkKind {
    NonBacktracking,
    SelfAvoidingOracle,
}

impl WalkKind {
    fn as_str(&self) -> &'static str {
        match self {
            WalkKind::NonBacktracking => "NonBacktracking",
            WalkKind::SelfAvoidingOracle => "SelfAvoidingOracle",
        }
    }
}

/// Walk sums of one length from one source to every target.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkStatVector {
    pub source: usize,
    pub k: usize,
    pub kind: WalkKind,
    pub values: Vec<f64>,
}

impl WalkStatVector {
    pub fn to_csv(&self) -> String {
        let mut s = format!("# source={},k={},kind={}\ntarget,value\n", self.source, self.k, self.kind.as_str());
        for (v, x) in self.values.iter().enumerate() {
            writeln!(s, "{v},{x:e}").unwrap();
        }
        s
    }
}

fn allowed_mask(n: usize, avoid: &[usize]) -> Vec<bool> {
    let mut allowed = vec![true; n];
    for &v in avoid {
        if v < n {
            allowed[v] = false;
        }
    }
    allowed
}

/// Walk sums weighted by a start vector: entry `v` of the result is
/// `sum_u x0[u] N_{u,v}`, where `N_{u,v}` sums the weights of non-backtracking
/// walks of length exactly `k` from `u` to `v` whose interior vertices are all
/// allowed. Start and end points are exempt from the mask.
pub fn nbw_from_start_vector(g: &GraphSample, x0: &[f64], k: usize, d: f64, allowed: Option<&[bool]>) -> Result<Vec<f64>> {
    let n = g.n();
    if k < 1 {
        return Err(Error::BadLength(k));
    }
    if k > MAX_WALK_LENGTH {
        return Err(Error::RangeError(format!("walk length {k} exceeds {MAX_WALK_LENGTH}")));
    }
    if x0.len() != n {
        return Err(Error::LengthMismatch(x0.len(), n));
    }
    let c = -d / n as f64;
    let offsets = g.slot_offsets();
    let rev = g.reverse_slots();
    let slots = offsets[n];

    let interior = |v: usize| allowed.map_or(true, |a| a[v]);
    let n_allowed = allowed.map_or(n, |a| a.iter().filter(|&&x| x).count());
    // Allowed non-neighbours y != z of each z.
    let kappa_interior: Vec<f64> = (0..n)
        .map(|z| {
            let nb = g.neighbors(z).iter().filter(|&&y| interior(y as usize)).count();
            (n_allowed - nb - usize::from(interior(z))) as f64
        })
        .collect();
    let kappa_end: Vec<f64> = (0..n).map(|z| (n - 1 - g.degree(z)) as f64).collect();

    let mut m_prev = x0.to_vec();
    let mut em_prev = vec![0.0f64; slots];
    let mut ni_prev = vec![0.0f64; n];
    let mut no_prev = vec![0.0f64; n];
    let mut m = vec![0.0f64; n];
    let mut em = vec![0.0f64; slots];
    let mut ni = vec![0.0f64; n];
    let mut no = vec![0.0f64; n];

    for s in 1..=k {
        let last = s == k;
        let mask = |v: usize| last || interior(v);
        let total: f64 = m_prev.iter().sum();

        // Non-edge messages arriving at step s-1, restricted to senders the
        // current mask admits. Only the first step can carry messages from
        // masked-out senders (the exempt start point), so only then does the
        // restriction differ from `ni_prev`.
        let restricted_ni: Option<Vec<f64>> = if s == 2 && !last && allowed.is_some() {
            let xm: Vec<f64> = (0..n).map(|v| if interior(v) { x0[v] } else { 0.0 }).collect();
            let tm: f64 = xm.iter().sum();
            Some(
                (0..n)
                    .map(|z| {
                        if !interior(z) {
                            return 0.0;
                        }
                        let nb: f64 = g.neighbors(z).iter().map(|&y| xm[y as usize]).sum();
                        c * (tm - xm[z] - nb)
                    })
                    .collect(),
            )
        } else {
            None
        };

        for z in 0..n {
            let keep = mask(z);
            let kappa = if last { kappa_end[z] } else { kappa_interior[z] };
            let incoming = restricted_ni.as_ref().map_or(ni_prev[z], |r| r[z]);
            no[z] = c * (kappa * m_prev[z] - incoming);
            if !keep {
                // Edge slots of a masked vertex are only ever written on the
                // final step, so both buffers still hold zeros here.
                ni[z] = 0.0;
                m[z] = 0.0;
                continue;
            }
            let mut acc = 0.0;
            let mut nb_sum = 0.0;
            for p in offsets[z]..offsets[z + 1] {
                let y = g.neighbors(z)[p - offsets[z]] as usize;
                nb_sum += m_prev[y];
                let msg = (1.0 + c) * (m_prev[y] - em_prev[rev[p]]);
                em[p] = msg;
                acc += msg;
            }
            ni[z] = c * ((total - m_prev[z] - nb_sum) - no_prev[z]);
            m[z] = acc + ni[z];
        }

        if m.iter().any(|x| !x.is_finite() || x.abs() > 1e300) {
            return Err(Error::RangeError(format!("walk sums overflowed at step {s}")));
        }
        std::mem::swap(&mut m, &mut m_prev);
        std::mem::swap(&mut em, &mut em_prev);
        std::mem::swap(&mut ni, &mut ni_prev);
        std::mem::swap(&mut no, &mut no_prev);
    }
    Ok(m_prev)
}

/// `N^U_{u,v}` for every target `v`, where `U = avoid`.
pub fn nbw_vector(g: &GraphSample, u: usize, k: usize, d: f64, avoid: &[usize]) -> Result<WalkStatVector> {
    if u >= g.n() {
        return Err(Error::InvalidParams(format!("source {u} out of range")));
    }
    let mut x0 = vec![0.0; g.n()];
    x0[u] = 1.0;
    let allowed = allowed_mask(g.n(), avoid);
    let values = nbw_from_start_vector(g, &x0, k, d, Some(&allowed))?;
    Ok(WalkStatVector { source: u, k, kind: WalkKind::NonBacktracking, values })
}

/// `sum_{u in N(rep) ∩ part} N_{u,w}` for every `w`, with walk interiors kept inside `part`.
pub fn z_statistic_all(g: &GraphSample, rep: usize, part: &[bool], k: usize, d: f64) -> Result<Vec<f64>> {
    let mut x0 = vec![0.0; g.n()];
    let mut any = false;
    for &u in g.neighbors(rep) {
        if part[u as usize] {
            x0[u as usize] = 1.0;
            any = true;
        }
    }
    if !any {
        return Ok(vec![0.0; g.n()]);
    }
    nbw_from_start_vector(g, &x0, k, d, Some(part))
}

pub fn z_statistic(g: &GraphSample, w: usize, rep: usize, part: &[usize], k: usize, d: f64) -> Result<f64> {
    let mut mask = vec![false; g.n()];
    for &v in part {
        mask[v] = true;
    }
    Ok(z_statistic_all(g, rep, &mask, k, d)?[w])
}

fn check_brute(g: &GraphSample, k: usize) -> Result<()> {
    if k < 1 {
        return Err(Error::BadLength(k));
    }
    if g.n() > BRUTE_MAX_N || k > BRUTE_MAX_K {
        return Err(Error::TooLarge(format!(
            "n = {}, k = {} (limits {BRUTE_MAX_N}, {BRUTE_MAX_K})",
            g.n(),
            k
        )));
    }
    Ok(())
}

/// Enumerates walks of length `k` from `u` and adds `X_gamma` into `out[end]`.
fn enumerate(g: &GraphSample, u: usize, k: usize, d: f64, avoid: &[usize], self_avoiding: bool, out: &mut [f64]) {
    let n = g.n();
    let c = -d / n as f64;
    let allowed = allowed_mask(n, avoid);
    let mut path = vec![u];
    fn rec(
        g: &GraphSample,
        c: f64,
        k: usize,
        allowed: &[bool],
        sa: bool,
        path: &mut Vec<usize>,
        weight: f64,
        out: &mut [f64],
    ) {
        let len = path.len() - 1;
        let cur = *path.last().unwrap();
        if len == k {
            out[cur] += weight;
            return;
        }
        if len >= 1 && !allowed[cur] {
            return;
        }
        for next in 0..g.n() {
            if next == cur || (len >= 1 && next == path[len - 1]) || (sa && path.contains(&next)) {
                continue;
            }
            let w = if g.has_edge(cur, next) { 1.0 + c } else { c };
            if w == 0.0 {
                continue;
            }
            path.push(next);
            rec(g, c, k, allowed, sa, path, weight * w, out);
            path.pop();
        }
    }
    rec(g, c, k, &allowed, self_avoiding, &mut path, 1.0, out);
}

/// Exhaustive non-backtracking walk sum, for checking the recurrence.
pub fn nbw_bruteforce(g: &GraphSample, u: usize, v: usize, k: usize, d: f64, avoid: &[usize]) -> Result<f64> {
    Ok(nbw_bruteforce_all(g, u, k, d, avoid)?[v])
}

pub fn nbw_bruteforce_all(g: &GraphSample, u: usize, k: usize, d: f64, avoid: &[usize]) -> Result<Vec<f64>> {
    check_brute(g, k)?;
    let mut out = vec![0.0; g.n()];
    enumerate(g, u, k, d, avoid, false, &mut out);
    Ok(out)
}

/// Exhaustive self-avoiding walk sum `S^U_{u,v}`.
pub fn saw_bruteforce(g: &GraphSample, u: usize, v: usize, k: usize, d: f64, avoid: &[usize]) -> Result<f64> {
    check_brute(g, k)?;
    let mut out = vec![0.0; g.n()];
    enumerate(g, u, k, d, avoid, true, &mut out);
    Ok(out[v])
}
