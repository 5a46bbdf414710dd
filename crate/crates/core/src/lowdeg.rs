//! Low-degree correlation audit on tiny instances.
//!
//! Vertices are 0-based, so the distinguished pair whose same-community
//! indicator is being estimated is `{0, 1}`. Edge sets over `[n]` are stored
//! as bitmasks over the pairs `(i, j)`, `i < j`, in lexicographic order.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ModelParams;

/// Largest vertex count whose pairs fit in a 64-bit mask.
pub const MAX_INDEX_N: usize = 11;
pub const F_MAX_EDGES: usize = 8;
pub const BUILD_U_MAX_N: usize = 6;
pub const BUILD_U_MAX_D: usize = 4;
pub const EXACT_MAX_STATES: f64 = 1e8;

fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

pub fn pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
}

/// An edge set over `[n]`, viewed as a graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PolyIndex {
    n: usize,
    mask: u64,
}

impl PolyIndex {
    pub fn empty(n: usize) -> Self {
        PolyIndex { n, mask: 0 }
    }

    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n > MAX_INDEX_N {
            return Err(Error::TooLarge(format!("index over {n} vertices")));
        }
        let mut mask = 0u64;
        for &(u, v) in edges {
            let (i, j) = (u.min(v), u.max(v));
            if i == j || j >= n {
                return Err(Error::InvalidParams(format!("pair ({u}, {v}) is not an edge of K_{n}")));
            }
            mask |= 1 << pair_index(n, i, j);
        }
        Ok(PolyIndex { n, mask })
    }

    pub fn from_mask(n: usize, mask: u64) -> Self {
        debug_assert!(n <= MAX_INDEX_N && (n * (n - 1) / 2 == 64 || mask >> (n * n.saturating_sub(1) / 2) == 0));
        PolyIndex { n, mask }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mask(&self) -> u64 {
        self.mask
    }

    /// `|α|`, the number of edges.
    pub fn len(&self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.mask == 0
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        pairs(self.n).into_iter().enumerate().filter(|(k, _)| self.mask >> k & 1 == 1).map(|(_, e)| e).collect()
    }

    /// Non-isolated vertices as a bitmask.
    pub fn vertex_mask(&self) -> u64 {
        self.edges().iter().fold(0, |m, &(i, j)| m | 1 << i | 1 << j)
    }

    /// `V(α)`, sorted.
    pub fn vertices(&self) -> Vec<usize> {
        let vm = self.vertex_mask();
        (0..self.n).filter(|v| vm >> v & 1 == 1).collect()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges().iter().filter(|&&(i, j)| i == v || j == v).count()
    }

    /// Whether the graph on `V(α)` is connected; the empty index counts as connected.
    pub fn is_connected(&self) -> bool {
        components(&self.edges()).len() <= 1
    }

    pub fn is_subset_of(&self, other: &PolyIndex) -> bool {
        self.n == other.n && self.mask & !other.mask == 0
    }

    pub fn minus(&self, other: &PolyIndex) -> PolyIndex {
        PolyIndex { n: self.n, mask: self.mask & !other.mask }
    }

    /// Sub-indices `β ≤ α`, including `∅` and `α`.
    pub fn subsets(&self) -> impl Iterator<Item = PolyIndex> + '_ {
        let full = self.mask;
        let mut sub = full;
        let mut done = false;
        std::iter::from_fn(move || {
            if done {
                return None;
            }
            let out = PolyIndex { n: self.n, mask: sub };
            if sub == 0 {
                done = true;
            } else {
                sub = (sub - 1) & full;
            }
            Some(out)
        })
    }
}

/// Vertex sets of the connected components spanned by `edges`.
fn components(edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut comps: Vec<Vec<usize>> = Vec::new();
    for &(i, j) in edges {
        let hit: Vec<usize> = (0..comps.len()).filter(|&c| comps[c].contains(&i) || comps[c].contains(&j)).collect();
        let mut merged = vec![i, j];
        for &c in hit.iter().rev() {
            merged.extend(comps.swap_remove(c));
        }
        merged.sort_unstable();
        merged.dedup();
        comps.push(merged);
    }
    comps
}

/// An edge set together with a community label for each of its vertices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabeledIndex {
    pub beta: PolyIndex,
    /// Labels aligned with `beta.vertices()`.
    pub gamma: Vec<u32>,
}

impl LabeledIndex {
    pub fn new(beta: PolyIndex, gamma: Vec<u32>) -> Result<Self> {
        let nv = beta.vertices().len();
        if gamma.len() != nv {
            return Err(Error::SizeMismatch { expected: nv, got: gamma.len() });
        }
        Ok(LabeledIndex { beta, gamma })
    }

    pub fn label(&self, v: usize) -> Option<u32> {
        self.beta.vertices().iter().position(|&w| w == v).map(|k| self.gamma[k])
    }

    /// `ℓ(β, γ)`: edges of `β` whose endpoints share a label.
    pub fn monochromatic(&self) -> usize {
        let verts = self.beta.vertices();
        let lab = |v: usize| self.gamma[verts.binary_search(&v).unwrap()];
        self.beta.edges().iter().filter(|&&(i, j)| lab(i) == lab(j)).count()
    }

    /// All labelings of `β` with `q` labels; a single empty labeling for `β = ∅`.
    pub fn all(beta: PolyIndex, q: usize) -> Vec<LabeledIndex> {
        let nv = beta.vertices().len();
        let mut out = Vec::with_capacity(q.pow(nv as u32));
        let mut gamma = vec![0u32; nv];
        loop {
            out.push(LabeledIndex { beta, gamma: gamma.clone() });
            let mut k = 0;
            loop {
                if k == nv {
                    return out;
                }
                gamma[k] += 1;
                if (gamma[k] as usize) < q {
                    break;
                }
                gamma[k] = 0;
                k += 1;
            }
        }
    }
}

pub fn is_informative(alpha: &PolyIndex) -> bool {
    if alpha.is_empty() {
        return true;
    }
    let vm = alpha.vertex_mask();
    vm & 0b11 == 0b11 && alpha.vertices().iter().all(|&v| v < 2 || alpha.degree(v) >= 2) && alpha.is_connected()
}

/// Complexity recursion: `f(∅) = 1` and `f(α)` sums `f` over informative `β ⪇ α`.
pub fn f_complexity(alpha: &PolyIndex) -> Result<u64> {
    if alpha.len() > F_MAX_EDGES {
        return Err(Error::TooLarge(format!("|alpha| = {} exceeds {F_MAX_EDGES}", alpha.len())));
    }
    if !is_informative(alpha) {
        return Err(Error::InvalidParams("f is defined on informative indices only".into()));
    }
    let mut memo = HashMap::new();
    Ok(f_memo(alpha, &mut memo))
}

fn f_memo(alpha: &PolyIndex, memo: &mut HashMap<u64, u64>) -> u64 {
    if alpha.is_empty() {
        return 1;
    }
    if let Some(&v) = memo.get(&alpha.mask) {
        return v;
    }
    let total = alpha.subsets().filter(|b| b.mask != alpha.mask && is_informative(b)).map(|b| f_memo(&b, memo)).sum();
    memo.insert(alpha.mask, total);
    total
}

/// `c_α = E[φ_α x]` for informative `α`; zero for `α = ∅`.
pub fn c_entry(alpha: &PolyIndex, p: &ModelParams) -> f64 {
    if alpha.is_empty() {
        return 0.0;
    }
    let q = p.q as f64;
    let nv = alpha.vertices().len() as i32;
    (q - 1.0) * q.powi(-nv) * ((p.a - p.b) / p.n as f64).powi(alpha.len() as i32)
}

fn edge_variances(p: &ModelParams) -> (f64, f64) {
    let n = p.n as f64;
    (p.a / n * (1.0 - p.a / n), p.b / n * (1.0 - p.b / n))
}

/// `M_{βγ,α} = E[φ_α ψ_{βγ}]`, zero unless `β ≤ α`.
pub fn m_entry(beta: &LabeledIndex, alpha: &PolyIndex, p: &ModelParams) -> f64 {
    if !beta.beta.is_subset_of(alpha) {
        return 0.0;
    }
    let q = p.q as f64;
    let (va, vb) = edge_variances(p);
    let nb = beta.beta.len() as i32;
    let ell = beta.monochromatic() as i32;
    let verts_b = beta.beta.vertices();
    let head = q.powf(-(verts_b.len() as f64) / 2.0)
        * va.powf(ell as f64 / 2.0)
        * vb.powf((nb - ell) as f64 / 2.0)
        * ((p.a - p.b) / p.n as f64).powi(alpha.len() as i32 - nb);
    // Each component of α - β must be monochromatic: anchored components need
    // their labelled vertices to agree, and each free vertex matches w.p. 1/q.
    let mut exponent = 0i32;
    for comp in components(&alpha.minus(&beta.beta).edges()) {
        let anchors: Vec<u32> = comp.iter().filter_map(|&v| beta.label(v)).collect();
        let free = (comp.len() - anchors.len()) as i32;
        if anchors.is_empty() {
            exponent += free - 1;
        } else if anchors.iter().all(|&l| l == anchors[0]) {
            exponent += free;
        } else {
            return 0.0;
        }
    }
    head * q.powi(-exponent)
}

/// Informative indices over `[n]` with `1 ≤ |α| ≤ max_len`, by increasing size.
pub fn informative_indices(n: usize, max_len: usize) -> Vec<PolyIndex> {
    let np = n * n.saturating_sub(1) / 2;
    let mut out = Vec::new();
    // Grow edge sets one pair at a time in increasing pair order.
    fn rec(n: usize, np: usize, start: usize, mask: u64, left: usize, out: &mut Vec<PolyIndex>) {
        for k in start..np {
            let m = mask | 1 << k;
            let idx = PolyIndex { n, mask: m };
            if is_informative(&idx) {
                out.push(idx);
            }
            if left > 1 {
                rec(n, np, k + 1, m, left - 1, out);
            }
        }
    }
    if max_len > 0 && n >= 2 {
        rec(n, np, 0, 0, max_len, &mut out);
    }
    out.sort_by_key(|a| (a.len(), a.mask));
    out
}

/// One informative `α` in the `u` construction.
#[derive(Debug, Clone)]
pub struct AlphaTerm {
    pub alpha: PolyIndex,
    pub c: f64,
    pub d: f64,
    /// `Σ_γ M²_{αγ,α}`.
    pub gram: f64,
    /// `u_{αγ}` for every `γ`, in `LabeledIndex::all` order.
    pub u: Vec<(LabeledIndex, f64)>,
}

#[derive(Debug, Clone)]
pub struct UConstruction {
    pub params: ModelParams,
    pub degree: usize,
    pub terms: Vec<AlphaTerm>,
}

pub fn x_second_moment(q: usize) -> f64 {
    let q = q as f64;
    (1.0 / q) * (1.0 - 1.0 / q)
}

impl UConstruction {
    pub fn norm_sq(&self) -> f64 {
        self.terms.iter().flat_map(|t| t.u.iter()).map(|(_, v)| v * v).sum()
    }

    /// `‖u‖² / E[x²]`, an upper bound on `Corr²_{≤D}`.
    pub fn corr_sq_bound(&self) -> f64 {
        self.norm_sq() / x_second_moment(self.params.q)
    }

    /// Largest `|Σ_{βγ} u_{βγ} M_{βγ,α} - c_α|` over the informative `α`.
    pub fn max_residual(&self) -> f64 {
        let p = &self.params;
        self.terms
            .iter()
            .map(|t| {
                let lhs: f64 = self
                    .terms
                    .iter()
                    .filter(|s| s.alpha.is_subset_of(&t.alpha))
                    .flat_map(|s| s.u.iter())
                    .map(|(b, u)| u * m_entry(b, &t.alpha, p))
                    .sum();
                (lhs - t.c).abs()
            })
            .fold(0.0, f64::max)
    }
}

fn check_tiny_params(p: &ModelParams) -> Result<()> {
    let n = p.n as f64;
    if !(p.a > 0.0 && p.a < n && p.b > 0.0 && p.b < n) {
        return Err(Error::InvalidParams("edge probabilities a/n and b/n must lie strictly inside (0, 1)".into()));
    }
    Ok(())
}

/// Runs the two-step recursion for `u` over informative `α` with `|α| ≤ D`.
pub fn build_u(degree: usize, p: &ModelParams) -> Result<UConstruction> {
    if p.n > BUILD_U_MAX_N || degree > BUILD_U_MAX_D {
        return Err(Error::TooLarge(format!("build_u needs n <= {BUILD_U_MAX_N} and D <= {BUILD_U_MAX_D}")));
    }
    check_tiny_params(p)?;
    let mut terms: Vec<AlphaTerm> = Vec::new();
    for alpha in informative_indices(p.n, degree) {
        let c = c_entry(&alpha, p);
        let carried: f64 = terms
            .iter()
            .filter(|s| s.alpha.is_subset_of(&alpha))
            .flat_map(|s| s.u.iter())
            .map(|(b, u)| u * m_entry(b, &alpha, p))
            .sum();
        let d = c - carried;
        let labeled = LabeledIndex::all(alpha, p.q);
        let diag: Vec<f64> = labeled.iter().map(|l| m_entry(l, &alpha, p)).collect();
        let gram: f64 = diag.iter().map(|m| m * m).sum();
        let u = labeled.into_iter().zip(&diag).map(|(l, m)| (l, m / gram * d)).collect();
        terms.push(AlphaTerm { alpha, c, d, gram, u });
    }
    Ok(UConstruction { params: *p, degree, terms })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    #[serde(rename = "D")]
    pub degree: usize,
    /// Bound on `Corr²_{≤D}` from the `ξ`-based estimate; absent when `ξ = 0`.
    pub bound_item1: Option<f64>,
    /// Bound on `Corr²_{≤D}` from the `a`-based estimate.
    pub bound_item2: f64,
    pub corr_exact: Option<f64>,
    /// The universal constant both bounds are evaluated at.
    pub constant: f64,
    /// `D ≤ ξn/(Cq²)` with exponent 1.
    pub guard_item1: bool,
    /// `D ≤ n/(Cq)` with exponent 1.
    pub guard_item2: bool,
    pub params: ModelParams,
}

/// Both closed-form bounds on `Corr²_{≤D}` with the universal constants set to 1.
pub fn corr_bound(degree: usize, p: &ModelParams) -> BoundReport {
    let n = p.n as f64;
    let q = p.q as f64;
    let r = p.circ_snr();
    let geometric = |ratio: f64| (1..=degree).map(|l| ratio.powi(l as i32)).sum::<f64>();
    let xi = p.xi();
    let (va, vb) = (p.a * (1.0 - p.a / n), p.b * (1.0 - p.b / n));
    let boost = if va > 0.0 { 1.0 + (q - 1.0) * vb / va } else { f64::INFINITY };
    let d = degree as f64;
    BoundReport {
        degree,
        bound_item1: (xi > 0.0).then(|| q / n * geometric(r)),
        bound_item2: if degree == 0 { 0.0 } else { q / n * geometric(boost * r) },
        corr_exact: None,
        constant: 1.0,
        guard_item1: xi > 0.0 && d <= xi * n / (q * q),
        guard_item2: d <= n / q,
        params: *p,
    }
}

#[derive(Default, Clone, Copy)]
struct Kahan {
    sum: f64,
    comp: f64,
}

impl Kahan {
    fn add(&mut self, x: f64) {
        let y = x - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }
}

/// Exact `Corr_{≤D}` by enumerating every labeling and solving the normal
/// equations over all multilinear edge monomials of degree at most `D`.
pub fn corr_exact(n: usize, q: usize, a: f64, b: f64, degree: usize) -> Result<f64> {
    let p = ModelParams::new(n, q, a, b)?;
    if n < 2 {
        return Err(Error::InvalidParams("need at least two vertices".into()));
    }
    let np = n * (n - 1) / 2;
    let states = 2f64.powi(np as i32) * (q as f64).powi(n as i32);
    if states > EXACT_MAX_STATES {
        return Err(Error::TooLarge(format!("{states:.3e} graph-labeling pairs")));
    }
    if degree == 0 || a == b {
        return Ok(0.0);
    }
    let (pa, pb) = (p.p_in(), p.p_out());
    let prs = pairs(n);
    let size = 1usize << np;
    // E[Y^S] and E[Y^S x] for every edge set S.
    let mut mom = vec![Kahan::default(); size];
    let mut momx = vec![Kahan::default(); size];
    let mut prod = vec![0.0f64; size];
    let w = (q as f64).powi(-(n as i32));
    let qinv = 1.0 / q as f64;
    let mut sigma = vec![0usize; n];
    loop {
        let pe: Vec<f64> = prs.iter().map(|&(i, j)| if sigma[i] == sigma[j] { pa } else { pb }).collect();
        let x = if sigma[0] == sigma[1] { 1.0 - qinv } else { -qinv };
        prod[0] = 1.0;
        for s in 1..size {
            prod[s] = prod[s & (s - 1)] * pe[s.trailing_zeros() as usize];
        }
        for s in 0..size {
            mom[s].add(w * prod[s]);
            momx[s].add(w * x * prod[s]);
        }
        let mut k = 0;
        loop {
            if k == n {
                return finish_corr(&mom, &momx, np, degree, q);
            }
            sigma[k] += 1;
            if sigma[k] < q {
                break;
            }
            sigma[k] = 0;
            k += 1;
        }
    }
}

fn finish_corr(mom: &[Kahan], momx: &[Kahan], np: usize, degree: usize, q: usize) -> Result<f64> {
    let monos: Vec<usize> = (0..1usize << np).filter(|s| s.count_ones() as usize <= degree).collect();
    let k = monos.len();
    let gram = DMatrix::from_fn(k, k, |i, j| mom[monos[i] | monos[j]].sum);
    let cvec = DVector::from_iterator(k, monos.iter().map(|&s| momx[s].sum));
    let svd = gram.svd(true, true);
    let tol = 1e-10 * svd.singular_values.max();
    let sol = svd.solve(&cvec, tol).map_err(|e| Error::InvalidParams(e.to_string()))?;
    let corr_sq = cvec.dot(&sol) / x_second_moment(q);
    Ok(corr_sq.clamp(0.0, 1.0).sqrt())
}

/// `((p₂-p₁)²/q)(1-1/q)(1-corr²)`: the low-degree risk floor for a two-level
/// graphon with levels `p₁ < p₂`.
pub fn graphon_risk(p1: f64, p2: f64, q: usize, corr_sq: f64) -> f64 {
    let q = q as f64;
    (p2 - p1).powi(2) / q * (1.0 - 1.0 / q) * (1.0 - corr_sq)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphonBound {
    pub value: f64,
    pub p1: f64,
    pub p2: f64,
    /// Bound on `Corr²_{≤D}` plugged into the risk, clipped to `[0, 1]`.
    pub corr_sq_bound: f64,
    /// `q/(8n)`, the stated asymptotic rate.
    pub reference: f64,
    pub ratio_to_reference: f64,
}

/// Risk floor at `p₂ = 1/2`, `p₁ = 1/2 - √(q²/n)/4`, with the correlation
/// bound evaluated on the matching dense block model.
pub fn graphon_lower_bound(n: usize, q: usize, degree: usize) -> Result<GraphonBound> {
    if q < 2 || (q * q) > n {
        return Err(Error::RangeError(format!("need 2 <= q <= sqrt(n), got q = {q}, n = {n}")));
    }
    let nf = n as f64;
    let p2 = 0.5;
    let p1 = 0.5 - 0.25 * ((q * q) as f64 / nf).sqrt();
    let p = ModelParams::new(n, q, nf * p2, nf * p1)?;
    let rep = corr_bound(degree, &p);
    let corr_sq_bound = rep.bound_item1.unwrap_or(rep.bound_item2).clamp(0.0, 1.0);
    let value = graphon_risk(p1, p2, q, corr_sq_bound);
    let reference = q as f64 / (8.0 * nf);
    Ok(GraphonBound { value, p1, p2, corr_sq_bound, reference, ratio_to_reference: value / reference })
}

/// `φ_α(Y) = Π_{(i,j)∈α} (Y_ij - b/n)`; `y` is indexed by pair.
pub fn phi_value(alpha: &PolyIndex, y: &[bool], p: &ModelParams) -> f64 {
    let pb = p.p_out();
    (0..y.len()).filter(|k| alpha.mask >> k & 1 == 1).map(|k| f64::from(u8::from(y[k])) - pb).product()
}

/// `ψ_{βγ}(Y, σ)`.
pub fn psi_value(beta: &LabeledIndex, y: &[bool], sigma: &[u32], p: &ModelParams) -> f64 {
    let verts = beta.beta.vertices();
    if verts.iter().zip(&beta.gamma).any(|(&v, &g)| sigma[v] != g) {
        return 0.0;
    }
    let (pa, pb) = (p.p_in(), p.p_out());
    let (va, vb) = edge_variances(p);
    let n = beta.beta.n;
    let mut out = (p.q as f64).powf(verts.len() as f64 / 2.0);
    for (i, j) in beta.beta.edges() {
        let yv = f64::from(u8::from(y[pair_index(n, i, j)]));
        out *= if sigma[i] == sigma[j] { (yv - pa) / va.sqrt() } else { (yv - pb) / vb.sqrt() };
    }
    out
}

/// Calls `f(Y, σ, P(Y, σ))` for every graph and labeling of a tiny instance.
pub fn for_each_joint(p: &ModelParams, mut f: impl FnMut(&[bool], &[u32], f64)) -> Result<()> {
    let n = p.n;
    let np = n * n.saturating_sub(1) / 2;
    if 2f64.powi(np as i32) * (p.q as f64).powi(n as i32) > EXACT_MAX_STATES {
        return Err(Error::TooLarge("joint enumeration".into()));
    }
    let prs = pairs(n);
    let (pa, pb) = (p.p_in(), p.p_out());
    let w = (p.q as f64).powi(-(n as i32));
    let mut sigma = vec![0u32; n];
    let mut y = vec![false; np];
    loop {
        for g in 0..1u64 << np {
            let mut prob = w;
            for (k, &(i, j)) in prs.iter().enumerate() {
                y[k] = g >> k & 1 == 1;
                let pe = if sigma[i] == sigma[j] { pa } else { pb };
                prob *= if y[k] { pe } else { 1.0 - pe };
            }
            f(&y, &sigma, prob);
        }
        let mut k = 0;
        loop {
            if k == n {
                return Ok(());
            }
            sigma[k] += 1;
            if (sigma[k] as usize) < p.q {
                break;
            }
            sigma[k] = 0;
            k += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn idx(n: usize, e: &[(usize, usize)]) -> PolyIndex {
        PolyIndex::new(n, e).unwrap()
    }

    #[test]
    fn pair_indexing_is_lexicographic() {
        for n in 2..=MAX_INDEX_N {
            for (k, (i, j)) in pairs(n).into_iter().enumerate() {
                assert_eq!(pair_index(n, i, j), k);
            }
        }
    }

    #[test]
    fn informative_examples() {
        assert!(is_informative(&PolyIndex::empty(5)));
        assert!(is_informative(&idx(5, &[(0, 1)])));
        assert!(is_informative(&idx(5, &[(0, 2), (2, 1)])));
        assert!(!is_informative(&idx(5, &[(0, 2)])));
        // Pendant vertex 3.
        assert!(!is_informative(&idx(5, &[(0, 1), (1, 3)])));
        // Disconnected triangle.
        assert!(!is_informative(&idx(6, &[(0, 1), (2, 3), (3, 4), (2, 4)])));
        assert!(PolyIndex::new(3, &[(1, 1)]).is_err());
        assert!(PolyIndex::new(3, &[(0, 3)]).is_err());
    }

    #[test]
    fn f_examples() {
        assert_eq!(f_complexity(&PolyIndex::empty(4)).unwrap(), 1);
        assert_eq!(f_complexity(&idx(4, &[(0, 1)])).unwrap(), 1);
        // Path 0-2-1: only ∅ is an informative proper subset.
        assert_eq!(f_complexity(&idx(4, &[(0, 2), (2, 1)])).unwrap(), 1);
        // Triangle 0-1-2: ∅, {01}, {02,21}.
        assert_eq!(f_complexity(&idx(4, &[(0, 1), (0, 2), (1, 2)])).unwrap(), 3);
        assert!(f_complexity(&idx(4, &[(0, 2)])).is_err());
        let big: Vec<(usize, usize)> = pairs(5).into_iter().take(9).collect();
        assert!(matches!(f_complexity(&idx(5, &big)), Err(Error::TooLarge(_))));
    }

    #[test]
    fn f_bound_holds_up_to_six_edges() {
        let all = informative_indices(7, 6);
        assert!(all.len() > 1000);
        let mut memo = HashMap::new();
        for alpha in &all {
            let f = f_memo(alpha, &mut memo) as f64;
            let e = alpha.len() as i32;
            let v = alpha.vertices().len() as i32;
            assert!(f <= (2.0 * e as f64).powi(e - v + 1), "{:?}: f = {f}", alpha.edges());
        }
    }

    #[test]
    fn c_examples() {
        let p = ModelParams::new(10, 2, 6.0, 2.0).unwrap();
        assert_eq!(c_entry(&PolyIndex::empty(10), &p), 0.0);
        assert!((c_entry(&idx(10, &[(0, 1)]), &p) - 0.1).abs() < 1e-15);
        let flat = ModelParams::new(10, 3, 4.0, 4.0).unwrap();
        assert_eq!(c_entry(&idx(10, &[(0, 2), (1, 2)]), &flat), 0.0);
    }

    fn expect(p: &ModelParams, f: impl Fn(&[bool], &[u32]) -> f64) -> f64 {
        let mut acc = Kahan::default();
        for_each_joint(p, |y, s, w| acc.add(w * f(y, s))).unwrap();
        acc.sum
    }

    fn indices_up_to(n: usize, len: usize) -> Vec<PolyIndex> {
        let np = n * (n - 1) / 2;
        (0..1u64 << np).filter(|m| m.count_ones() as usize <= len).map(|m| PolyIndex::from_mask(n, m)).collect()
    }

    #[test]
    fn m_entry_matches_enumeration() {
        let p = ModelParams::new(4, 2, 2.0, 1.0).unwrap();
        let all = indices_up_to(4, 2);
        for alpha in &all {
            for beta in &all {
                for lab in LabeledIndex::all(*beta, 2) {
                    let direct = expect(&p, |y, s| phi_value(alpha, y, &p) * psi_value(&lab, y, s, &p));
                    let closed = m_entry(&lab, alpha, &p);
                    assert!((direct - closed).abs() < 1e-12, "{:?} {:?}: {direct} vs {closed}", alpha.edges(), lab);
                }
            }
        }
    }

    #[test]
    fn c_entry_matches_enumeration() {
        let p = ModelParams::new(4, 3, 3.0, 1.0).unwrap();
        for alpha in informative_indices(4, 3) {
            let direct = expect(&p, |y, s| phi_value(&alpha, y, &p) * (f64::from(u8::from(s[0] == s[1])) - 1.0 / 3.0));
            assert!((direct - c_entry(&alpha, &p)).abs() < 1e-12);
        }
    }

    #[test]
    fn psi_is_orthonormal() {
        let p = ModelParams::new(4, 2, 3.0, 1.0).unwrap();
        let labeled: Vec<LabeledIndex> = indices_up_to(4, 2).into_iter().flat_map(|b| LabeledIndex::all(b, 2)).collect();
        for (i, l1) in labeled.iter().enumerate() {
            for l2 in &labeled[i..] {
                let e = expect(&p, |y, s| psi_value(l1, y, s, &p) * psi_value(l2, y, s, &p));
                let want = if l1 == l2 { 1.0 } else { 0.0 };
                assert!((e - want).abs() < 1e-12, "{l1:?} {l2:?}: {e}");
            }
        }
    }

    fn tiny_params() -> Vec<(ModelParams, usize)> {
        let mut out = Vec::new();
        for n in 3..=5 {
            for q in 2..=3 {
                for (a, b) in [(2.0, 1.0), (0.8 * n as f64, 0.2 * n as f64), (1.0, 2.0)] {
                    for d in 1..=3 {
                        out.push((ModelParams::new(n, q, a, b).unwrap(), d));
                    }
                }
            }
        }
        out
    }

    #[test]
    fn u_construction_contract() {
        for (p, d) in tiny_params() {
            let u = build_u(d, &p).unwrap();
            assert!(u.max_residual() <= 1e-10, "{p:?} D={d}");
            let (n, q) = (p.n as f64, p.q as f64);
            let (va, _) = edge_variances(&p);
            for t in &u.terms {
                let e = t.alpha.len() as i32;
                let v = t.alpha.vertices().len() as i32;
                let f = f_complexity(&t.alpha).unwrap() as f64;
                let d_bound = q.powi(1 - v) * ((p.a - p.b).abs() / n).powi(e) * f;
                assert!(t.d.abs() <= d_bound * (1.0 + 1e-9), "{:?}", t.alpha.edges());
                let g1 = (p.d_circ() / n).powi(e) * p.xi().powi(e - v + 1);
                let g2 = va.powi(e) * q.powi(1 - v);
                assert!(t.gram >= g1.max(g2) * (1.0 - 1e-9));
            }
            let closed: f64 = u.terms.iter().map(|t| t.d * t.d / t.gram).sum::<f64>() * q / (1.0 - 1.0 / q);
            assert!((closed - u.corr_sq_bound()).abs() <= 1e-9 * closed.max(1e-300));
        }
    }

    #[test]
    fn m_vanishes_off_the_order_and_obeys_bound() {
        let p = ModelParams::new(5, 3, 2.5, 0.5).unwrap();
        let alphas = informative_indices(5, 3);
        for alpha in &alphas {
            for beta in &alphas {
                for lab in LabeledIndex::all(*beta, 3) {
                    let m = m_entry(&lab, alpha, &p);
                    if !beta.is_subset_of(alpha) {
                        assert_eq!(m, 0.0);
                        continue;
                    }
                    let shift = alpha.vertices().len() as i32 - beta.vertices().len() as i32;
                    let bound = m_entry(&lab, beta, &p) * ((p.a - p.b).abs() / 5.0).powi((alpha.len() - beta.len()) as i32) * 3f64.powi(-shift);
                    assert!(m.abs() <= bound * (1.0 + 1e-12));
                }
            }
        }
    }

    #[test]
    fn sandwich_on_tiny_instances() {
        for (p, d) in tiny_params() {
            let exact = corr_exact(p.n, p.q, p.a, p.b, d).unwrap();
            let u = build_u(d, &p).unwrap();
            assert!(exact * exact <= u.corr_sq_bound() * (1.0 + 1e-9) + 1e-12, "{p:?} D={d}: {exact} vs {}", u.corr_sq_bound().sqrt());
        }
    }

    #[test]
    fn corr_exact_trivial_cases() {
        assert_eq!(corr_exact(4, 2, 2.0, 2.0, 2).unwrap(), 0.0);
        assert_eq!(corr_exact(4, 2, 3.0, 1.0, 0).unwrap(), 0.0);
        assert!(matches!(corr_exact(8, 3, 3.0, 1.0, 1), Err(Error::TooLarge(_))));
    }

    #[test]
    fn corr_exact_single_edge_least_squares() {
        // With D = 1 the only useful monomial is Y_01, so the best estimator is
        // an affine function of that edge.
        let (n, q, a, b) = (4usize, 2usize, 3.0, 1.0);
        let (pa, pb) = (a / n as f64, b / n as f64);
        let mean = pa / 2.0 + pb / 2.0;
        let var_y = mean * (1.0 - mean);
        let cov = 0.5 * pa * 0.5 + 0.5 * pb * (-0.5);
        let var_x = 0.25;
        let oracle = (cov * cov / (var_y * var_x)).sqrt();
        let got = corr_exact(n, q, a, b, 1).unwrap();
        assert!((got - oracle).abs() < 1e-10, "{got} vs {oracle}");
    }

    #[test]
    fn corr_exact_grows_with_degree() {
        let mut prev = 0.0;
        for d in 1..=3 {
            let c = corr_exact(4, 2, 3.5, 0.5, d).unwrap();
            assert!(c >= prev - 1e-12);
            prev = c;
        }
        assert!(prev > 0.0 && prev <= 1.0);
    }

    #[test]
    fn bound_examples() {
        let p = ModelParams::from_degree(1_000_000, 100, 5.0, 0.3).unwrap();
        assert_eq!(corr_bound(0, &p).bound_item1, Some(0.0));
        assert_eq!(corr_bound(0, &p).bound_item2, 0.0);
        let r = corr_bound(20, &p);
        let oracle: f64 = 100.0 / 1e6 * (1..=20).map(|l| 0.45f64.powi(l)).sum::<f64>();
        assert!((r.bound_item1.unwrap() - 8.2e-5).abs() < 1e-6);
        assert!((r.bound_item1.unwrap() - oracle).abs() / oracle < 1e-4);
        assert!(r.bound_item2 >= r.bound_item1.unwrap());
        assert!(r.guard_item2);
        // Ratio one: bisect on a until the adjusted SNR is 1, then the sum is D.
        let snr = |a: f64| ModelParams::new(1000, 10, a, 10.0).unwrap().circ_snr() - 1.0;
        let (mut lo, mut hi) = (10.0, 500.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if snr(mid) < 0.0 { lo = mid } else { hi = mid }
        }
        let p = ModelParams::new(1000, 10, lo, 10.0).unwrap();
        let b = corr_bound(7, &p).bound_item1.unwrap();
        assert!((b - 10.0 * 7.0 / 1000.0).abs() < 1e-12, "{b}");
        assert!(corr_bound(3, &ModelParams::new(100, 4, 5.0, 0.0).unwrap()).bound_item1.is_none());
    }

    #[test]
    fn graphon_examples() {
        let g = graphon_lower_bound(64, 2, 1).unwrap();
        let p1 = 0.5 - 0.25 * (4.0f64 / 64.0).sqrt();
        assert_eq!(g.p1, p1);
        let want = (4.0 / (16.0 * 64.0)) / 2.0 * 0.5 * (1.0 - g.corr_sq_bound);
        assert!((g.value - want).abs() < 1e-15);
        assert!((graphon_risk(0.3, 0.5, 4, 0.0) - 0.04 / 4.0 * 0.75).abs() < 1e-17);
        let edge = graphon_lower_bound(100, 10, 1).unwrap();
        assert_eq!(edge.p1, 0.25);
        assert!(matches!(graphon_lower_bound(100, 11, 1), Err(Error::RangeError(_))));
        assert!(matches!(graphon_lower_bound(100, 1, 1), Err(Error::RangeError(_))));
        // The chain evaluates to q/(16n) (1 - 1/q)(1 - corr²), below q/(8n).
        assert!(g.ratio_to_reference < 1.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]
        #[test]
        fn bounds_nonnegative(n in 10usize..100_000, q in 2usize..40, d in 0.5f64..20.0, l in -0.5f64..1.0, deg in 0usize..30) {
            prop_assume!(q * 2 < n);
            if let Ok(p) = ModelParams::from_degree(n, q, d, l) {
                let r = corr_bound(deg, &p);
                prop_assert!(r.bound_item2 >= 0.0);
                prop_assert!(r.bound_item1.map_or(true, |b| b >= 0.0));
            }
        }
    }
}
