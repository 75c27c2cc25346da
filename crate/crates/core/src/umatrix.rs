//! U-matrix computation, cluster extraction, and image/CSV export.
//!
//! The U-matrix assigns each lattice unit the mean codebook-space distance
//! to its immediate lattice neighbors: low values mark cluster interiors,
//! high ridges mark boundaries. This is the compact width×height variant
//! (one value per unit), not the expanded (2W−1)×(2H−1) form.

use std::io::{self, Write};

use crate::som::{SomMap, SomTopology, TopologyKind};

/// Lattice neighbors of unit `i`: up/down/left/right on a rectangular
/// grid (≤4), the six-neighborhood on the hexagonal offset grid (≤6).
/// Border units have fewer.
pub fn immediate_neighbors(topology: &SomTopology, i: usize) -> Vec<usize> {
    let (col, row) = topology.col_row(i);
    let col = col as isize;
    let row = row as isize;
    let offsets: &[(isize, isize)] = match topology.kind {
        TopologyKind::Rectangular => &[(1, 0), (-1, 0), (0, 1), (0, -1)],
        // odd-r offset layout: odd rows sit +0.5 to the right, so the
        // diagonal neighbor columns depend on row parity
        TopologyKind::Hexagonal if row % 2 == 0 => {
            &[(1, 0), (-1, 0), (0, -1), (-1, -1), (0, 1), (-1, 1)]
        }
        TopologyKind::Hexagonal => &[(1, 0), (-1, 0), (1, -1), (0, -1), (1, 1), (0, 1)],
    };
    let mut out = Vec::with_capacity(offsets.len());
    for &(dc, dr) in offsets {
        let (nc, nr) = (col + dc, row + dr);
        if nc >= 0 && nr >= 0 && (nc as usize) < topology.width && (nr as usize) < topology.height {
            out.push(nr as usize * topology.width + nc as usize);
        }
    }
    out
}

/// Per-unit mean neighbor distance over a trained codebook.
#[derive(Debug, Clone, PartialEq)]
pub struct UMatrix {
    topology: SomTopology,
    values: Vec<f64>,
}

impl UMatrix {
    pub fn topology(&self) -> &SomTopology {
        &self.topology
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, unit: usize) -> f64 {
        self.values[unit]
    }
}

/// Computes the U-matrix: `value(i)` is the mean Euclidean distance from
/// `m_i` to the reference vectors of `i`'s immediate lattice neighbors.
/// A 1×1 map has no neighbors; its single value is defined as 0.
pub fn compute_umatrix(map: &SomMap) -> UMatrix {
    let topology = *map.topology();
    let values = (0..topology.unit_count())
        .map(|i| {
            let neighbors = immediate_neighbors(&topology, i);
            if neighbors.is_empty() {
                return 0.0;
            }
            let sum: f64 = neighbors
                .iter()
                .map(|&j| {
                    map.unit_vector(i)
                        .iter()
                        .zip(map.unit_vector(j))
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                        .sqrt()
                })
                .sum();
            sum / neighbors.len() as f64
        })
        .collect();
    UMatrix { topology, values }
}

/// Per-unit cluster ids. Foreground units carry a contiguous id starting
/// at 0; boundary units (U-value above the threshold) carry −1.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    pub unit_cluster: Vec<i32>,
    pub cluster_count: usize,
}

impl ClusterAssignment {
    /// Number of units in each cluster, indexed by cluster id.
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.cluster_count];
        for &c in &self.unit_cluster {
            if c >= 0 {
                sizes[c as usize] += 1;
            }
        }
        sizes
    }

    /// Unit indices belonging to a cluster.
    pub fn members(&self, cluster: usize) -> Vec<usize> {
        self.unit_cluster
            .iter()
            .enumerate()
            .filter(|&(_, &c)| c == cluster as i32)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Thresholds the U-matrix at the given quantile of its values and labels
/// connected components of the low-value foreground.
///
/// Units with `value ≤ threshold` form the foreground; components connect
/// through [`immediate_neighbors`]. Ids are assigned by decreasing
/// component size (ties: the component containing the smallest unit index
/// first). Everything above the threshold gets −1.
pub fn extract_clusters(u: &UMatrix, quantile: f64) -> ClusterAssignment {
    assert!(
        quantile > 0.0 && quantile < 1.0,
        "quantile must lie in (0,1)"
    );
    let threshold = quantile_value(&u.values, quantile);
    let n = u.values.len();
    let foreground: Vec<bool> = u.values.iter().map(|&v| v <= threshold).collect();

    // breadth-first component labeling over foreground units
    let mut component = vec![-1i32; n];
    let mut components: Vec<Vec<usize>> = Vec::new();
    for start in 0..n {
        if !foreground[start] || component[start] >= 0 {
            continue;
        }
        let id = components.len() as i32;
        let mut members = Vec::new();
        let mut queue = std::collections::VecDeque::from([start]);
        component[start] = id;
        while let Some(unit) = queue.pop_front() {
            members.push(unit);
            for next in immediate_neighbors(&u.topology, unit) {
                if foreground[next] && component[next] < 0 {
                    component[next] = id;
                    queue.push_back(next);
                }
            }
        }
        components.push(members);
    }

    // renumber by decreasing size; equal sizes keep discovery order, which
    // is ascending in the smallest contained unit index
    let mut order: Vec<usize> = (0..components.len()).collect();
    order.sort_by_key(|&c| std::cmp::Reverse(components[c].len()));
    let mut unit_cluster = vec![-1i32; n];
    for (new_id, &old_id) in order.iter().enumerate() {
        for &unit in &components[old_id] {
            unit_cluster[unit] = new_id as i32;
        }
    }
    ClusterAssignment {
        unit_cluster,
        cluster_count: components.len(),
    }
}

/// Linear-interpolation quantile (the common "type 7" rule): with sorted
/// values v and h = (n−1)q, returns v[⌊h⌋] + (h−⌊h⌋)·(v[⌊h⌋+1] − v[⌊h⌋]).
fn quantile_value(values: &[f64], q: f64) -> f64 {
    assert!(!values.is_empty());
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite U-values"));
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    if lo + 1 >= sorted.len() {
        return sorted[sorted.len() - 1];
    }
    sorted[lo] + (h - lo as f64) * (sorted[lo + 1] - sorted[lo])
}

/// Renders the U-matrix as a binary PGM (P5) image, min-max scaled to
/// 0–255 (a constant matrix renders all 0), one pixel per unit, row-major.
pub fn export_pgm(u: &UMatrix) -> Vec<u8> {
    let (w, h) = (u.topology.width, u.topology.height);
    let mut bytes = format!("P5\n{w} {h}\n255\n").into_bytes();
    let min = u.values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = u.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let range = max - min;
    for &v in &u.values {
        let pixel = if range == 0.0 {
            0u8
        } else {
            ((v - min) / range * 255.0).round() as u8
        };
        bytes.push(pixel);
    }
    bytes
}

/// Writes the U-matrix and cluster ids as CSV with header
/// `col,row,u_value,cluster_id`, one row per unit in unit order.
pub fn write_umatrix_csv<W: Write>(
    w: &mut W,
    u: &UMatrix,
    clusters: &ClusterAssignment,
) -> io::Result<()> {
    writeln!(w, "col,row,u_value,cluster_id")?;
    for i in 0..u.values.len() {
        let (col, row) = u.topology.col_row(i);
        writeln!(
            w,
            "{},{},{},{}",
            col, row, u.values[i], clusters.unit_cluster[i]
        )?;
    }
    Ok(())
}
