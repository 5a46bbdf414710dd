//! Agreement between two labelings up to a relabeling of communities.

use pathfinding::kuhn_munkres::kuhn_munkres;
use pathfinding::matrix::Matrix;

use crate::error::{Error, Result};
use crate::graph::Labeling;

/// `q x q` confusion counts: entry `(i, j)` counts vertices with `sigma = i` and `tau = j`.
pub fn confusion(sigma: &[u32], tau: &[u32], q: usize) -> Result<Vec<Vec<u64>>> {
    if sigma.len() != tau.len() {
        return Err(Error::LengthMismatch(sigma.len(), tau.len()));
    }
    let mut c = vec![vec![0u64; q]; q];
    for (&s, &t) in sigma.iter().zip(tau) {
        for l in [s, t] {
            if l as usize >= q {
                return Err(Error::LabelOutOfRange { label: l, q });
            }
        }
        c[s as usize][t as usize] += 1;
    }
    Ok(c)
}

/// Fraction of vertices on which `sigma` and `tau` agree under the best
/// permutation of labels, found as a maximum-weight matching on the
/// confusion matrix.
pub fn alignment_labels(sigma: &[u32], tau: &[u32], q: usize) -> Result<f64> {
    let c = confusion(sigma, tau, q)?;
    if sigma.is_empty() {
        return Ok(1.0);
    }
    if q == 0 {
        return Ok(0.0);
    }
    let weights = Matrix::from_rows(c.iter().map(|row| row.iter().map(|&x| x as i64)))
        .expect("square confusion matrix");
    let (total, _) = kuhn_munkres(&weights);
    Ok(total as f64 / sigma.len() as f64)
}

pub fn alignment(sigma: &Labeling, tau: &Labeling, q: usize) -> Result<f64> {
    if sigma.len() != tau.len() {
        return Err(Error::LengthMismatch(sigma.len(), tau.len()));
    }
    alignment_labels(&sigma.to_total()?, &tau.to_total()?, q)
}

/// `q 1{x = y} - 1`.
pub fn alignment_weight(x: u32, y: u32, q: usize) -> f64 {
    if x == y {
        q as f64 - 1.0
    } else {
        -1.0
    }
}
