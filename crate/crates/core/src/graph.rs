//! Simple undirected graphs with a hidden ground-truth labeling.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A (possibly partial) assignment of vertices to communities `0..q`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Labeling {
    pub q: usize,
    pub labels: Vec<Option<u32>>,
}

impl Labeling {
    pub fn unassigned(n: usize, q: usize) -> Self {
        Self { q, labels: vec![None; n] }
    }

    pub fn from_total(q: usize, labels: Vec<u32>) -> Result<Self> {
        if let Some(&l) = labels.iter().find(|&&l| l as usize >= q) {
            return Err(Error::LabelOutOfRange { label: l, q });
        }
        Ok(Self { q, labels: labels.into_iter().map(Some).collect() })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, v: usize) -> Option<u32> {
        self.labels[v]
    }

    pub fn is_total(&self) -> bool {
        self.labels.iter().all(Option::is_some)
    }

    /// The labels as a dense vector; fails on the first unassigned or out-of-range vertex.
    pub fn to_total(&self) -> Result<Vec<u32>> {
        self.labels
            .iter()
            .enumerate()
            .map(|(v, l)| match l {
                None => Err(Error::Unassigned(v)),
                Some(l) if *l as usize >= self.q => Err(Error::LabelOutOfRange { label: *l, q: self.q }),
                Some(l) => Ok(*l),
            })
            .collect()
    }

    /// Community sizes of the assigned vertices.
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.q];
        for l in self.labels.iter().flatten() {
            sizes[*l as usize] += 1;
        }
        sizes
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelTag {
    #[serde(rename = "SBM")]
    Sbm,
    #[serde(rename = "TildeSBM")]
    TildeSbm,
    #[serde(rename = "ER")]
    Er,
}

impl ModelTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelTag::Sbm => "SBM",
            ModelTag::TildeSbm => "TildeSBM",
            ModelTag::Er => "ER",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "SBM" => Some(ModelTag::Sbm),
            "TildeSBM" => Some(ModelTag::TildeSbm),
            "ER" => Some(ModelTag::Er),
            _ => None,
        }
    }
}

/// An immutable sampled graph: CSR adjacency with sorted neighbor lists, the
/// sorted edge list, and the labeling it was planted with.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSample {
    n: usize,
    offsets: Vec<usize>,
    targets: Vec<u32>,
    rev: Vec<usize>,
    edges: Vec<(u32, u32)>,
    pub truth: Labeling,
    pub model: ModelTag,
    pub seed: u64,
}

impl GraphSample {
    /// Builds a graph from an edge list. Self-loops are rejected, duplicate
    /// pairs (in either orientation) are merged.
    pub fn from_edges(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
        truth: Labeling,
        model: ModelTag,
        seed: u64,
    ) -> Result<Self> {
        let mut list: Vec<(u32, u32)> = Vec::new();
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidParams(format!("edge ({u}, {v}) out of range for n = {n}")));
            }
            if u == v {
                return Err(Error::InvalidParams(format!("self-loop at {u}")));
            }
            let (x, y) = if u < v { (u, v) } else { (v, u) };
            list.push((x as u32, y as u32));
        }
        list.sort_unstable();
        list.dedup();
        if truth.len() != n && !(model == ModelTag::Er && truth.is_empty()) {
            return Err(Error::LengthMismatch(truth.len(), n));
        }
        let mut deg = vec![0usize; n];
        for &(u, v) in &list {
            deg[u as usize] += 1;
            deg[v as usize] += 1;
        }
        let mut offsets = vec![0usize; n + 1];
        for v in 0..n {
            offsets[v + 1] = offsets[v] + deg[v];
        }
        let mut fill = offsets.clone();
        let mut targets = vec![0u32; offsets[n]];
        for &(u, v) in &list {
            targets[fill[u as usize]] = v;
            fill[u as usize] += 1;
            targets[fill[v as usize]] = u;
            fill[v as usize] += 1;
        }
        for v in 0..n {
            targets[offsets[v]..offsets[v + 1]].sort_unstable();
        }
        let mut rev = vec![0usize; targets.len()];
        for z in 0..n {
            for p in offsets[z]..offsets[z + 1] {
                let y = targets[p] as usize;
                let j = targets[offsets[y]..offsets[y + 1]]
                    .binary_search(&(z as u32))
                    .expect("adjacency is symmetric");
                rev[p] = offsets[y] + j;
            }
        }
        let truth = if truth.is_empty() { Labeling::unassigned(n, 0) } else { truth };
        Ok(Self { n, offsets, targets, rev, edges: list, truth, model, seed })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }

    /// CSR offsets: the neighbours of `v` occupy slots `offsets[v]..offsets[v + 1]`.
    pub fn slot_offsets(&self) -> &[usize] {
        &self.offsets
    }

    /// For slot `p` of `z` holding `y`, the slot of `y` holding `z`.
    pub fn reverse_slots(&self) -> &[usize] {
        &self.rev
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u != v && self.neighbors(u).binary_search(&(v as u32)).is_ok()
    }

    pub fn mean_degree(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            2.0 * self.m() as f64 / self.n as f64
        }
    }

    /// Same vertex set and truth with a different edge set.
    pub fn with_edges(&self, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        Self::from_edges(self.n, edges, self.truth.clone(), self.model, self.seed)
    }

    /// Serializes to the line format
    /// `n q model seed`, then `v label` for every vertex (`-` when unassigned),
    /// then `u v` for every edge.
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{} {} {} {}", self.n, self.truth.q, self.model.as_str(), self.seed)?;
        for v in 0..self.n {
            match self.truth.get(v) {
                Some(l) => writeln!(w, "{v} {l}")?,
                None => writeln!(w, "{v} -")?,
            }
        }
        for &(u, v) in &self.edges {
            writeln!(w, "{u} {v}")?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_text(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("ascii output")
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().enumerate();
        let parse_err = |line: usize, msg: String| Error::Parse { line: line + 1, msg };
        let (i, header) = lines.next().ok_or_else(|| parse_err(0, "empty input".into()))?;
        let header = header?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(parse_err(i, format!("header needs 4 fields, got {}", fields.len())));
        }
        let num = |s: &str, what: &str| -> Result<u64> {
            s.parse::<u64>().map_err(|e| parse_err(i, format!("bad {what} '{s}': {e}")))
        };
        let n = num(fields[0], "n")? as usize;
        let q = num(fields[1], "q")? as usize;
        let model = ModelTag::parse(fields[2]).ok_or_else(|| parse_err(i, format!("unknown model '{}'", fields[2])))?;
        let seed = num(fields[3], "seed")?;

        let mut labels = vec![None; n];
        let mut edges = Vec::new();
        let mut seen = 0usize;
        for (i, line) in lines {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let (x, y) = match (it.next(), it.next(), it.next()) {
                (Some(x), Some(y), None) => (x, y),
                _ => return Err(parse_err(i, format!("expected two fields: '{line}'"))),
            };
            let x: usize = x.parse().map_err(|e| parse_err(i, format!("bad vertex '{x}': {e}")))?;
            if seen < n {
                if x != seen {
                    return Err(parse_err(i, format!("expected vertex line for {seen}, got {x}")));
                }
                labels[x] = if y == "-" {
                    None
                } else {
                    let l: u32 = y.parse().map_err(|e| parse_err(i, format!("bad label '{y}': {e}")))?;
                    if l as usize >= q {
                        return Err(Error::LabelOutOfRange { label: l, q });
                    }
                    Some(l)
                };
                seen += 1;
            } else {
                let y: usize = y.parse().map_err(|e| parse_err(i, format!("bad vertex '{y}': {e}")))?;
                edges.push((x, y));
            }
        }
        if seen != n {
            return Err(parse_err(0, format!("expected {n} vertex lines, found {seen}")));
        }
        Self::from_edges(n, edges, Labeling { q, labels }, model, seed)
    }
}

/// Renders a labeling as one label per line (`-` for unassigned).
pub fn labeling_to_text(l: &Labeling) -> String {
    let mut s = String::new();
    for (v, x) in l.labels.iter().enumerate() {
        match x {
            Some(x) => writeln!(s, "{v} {x}").unwrap(),
            None => writeln!(s, "{v} -").unwrap(),
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> GraphSample {
        let truth = Labeling::from_total(2, vec![0, 0, 1]).unwrap();
        GraphSample::from_edges(3, [(0, 1), (2, 1), (0, 2), (1, 0)], truth, ModelTag::Sbm, 7).unwrap()
    }

    #[test]
    fn dedups_and_sorts() {
        let g = triangle();
        assert_eq!(g.m(), 3);
        assert_eq!(g.edges(), &[(0, 1), (0, 2), (1, 2)]);
        assert_eq!(g.neighbors(1), &[0, 2]);
        assert!(g.has_edge(2, 0));
        assert!(!g.has_edge(0, 0));
    }

    #[test]
    fn rejects_self_loops() {
        let truth = Labeling::from_total(1, vec![0, 0]).unwrap();
        assert!(GraphSample::from_edges(2, [(1, 1)], truth, ModelTag::Sbm, 0).is_err());
    }

    #[test]
    fn text_round_trip() {
        let g = triangle();
        let text = g.to_text();
        assert!(text.starts_with("3 2 SBM 7\n0 0\n1 0\n2 1\n0 1\n"));
        let back = GraphSample::read_text(text.as_bytes()).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn text_round_trip_er() {
        let g = GraphSample::from_edges(4, [(0, 3)], Labeling::unassigned(4, 0), ModelTag::Er, 1).unwrap();
        let back = GraphSample::read_text(g.to_text().as_bytes()).unwrap();
        assert_eq!(back, g);
        assert!(!back.truth.is_total());
    }

    #[test]
    fn text_rejects_bad_label() {
        let err = GraphSample::read_text("2 2 SBM 0\n0 0\n1 5\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::LabelOutOfRange { label: 5, q: 2 }));
    }

    #[test]
    fn labeling_validation() {
        assert!(Labeling::from_total(2, vec![0, 2]).is_err());
        let l = Labeling { q: 3, labels: vec![Some(0), None] };
        assert!(matches!(l.to_total(), Err(Error::Unassigned(1))));
    }
}
