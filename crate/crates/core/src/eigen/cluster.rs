//! Grouping of nearly equal eigenvalues and interval counting.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    /// Index of the first eigenvalue of the cluster.
    pub start: usize,
    pub len: usize,
    pub min: f64,
    pub max: f64,
}

/// Splits an ascending list wherever consecutive values differ by at least
/// `gap_tol · max(1, |λ_i|, |λ_{i+1}|)`.
pub fn multiplicity_cluster(eigenvalues: &[f64], gap_tol: f64) -> Vec<Cluster> {
    let mut out: Vec<Cluster> = Vec::new();
    for (i, &v) in eigenvalues.iter().enumerate() {
        if let Some(last) = out.last_mut() {
            let scale = 1.0f64.max(last.max.abs()).max(v.abs());
            if v - last.max < gap_tol * scale {
                last.len += 1;
                last.max = last.max.max(v);
                last.min = last.min.min(v);
                continue;
            }
        }
        out.push(Cluster {
            start: i,
            len: 1,
            min: v,
            max: v,
        });
    }
    out
}

/// Eigenvalues counted as `≤ level`: whole clusters whose smallest member is
/// within `slack` of the level.
pub fn count_at_most(clusters: &[Cluster], level: f64, slack: f64) -> usize {
    clusters
        .iter()
        .filter(|c| c.min <= level + slack)
        .map(|c| c.len)
        .sum()
}

/// Eigenvalues counted as `< level`: whole clusters lying below
/// `level − slack`.
pub fn count_below(clusters: &[Cluster], level: f64, slack: f64) -> usize {
    clusters
        .iter()
        .filter(|c| c.max < level - slack)
        .map(|c| c.len)
        .sum()
}
