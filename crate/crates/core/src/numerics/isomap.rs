// SPDX-License-Identifier: MIT OR Apache-2.0

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use nalgebra::DMatrix;

use super::linalg::symmetric_eigen;
use super::{descending_order, fix_column_signs};
use crate::error::{Error, Result};

/// Classical Isomap: symmetric k-NN graph on Euclidean distances, all-pairs
/// geodesics by Dijkstra, then classical MDS. Output is `n × out_dim`,
/// centred, with each axis signed so its largest-magnitude entry is positive.
pub fn isomap(rows: &DMatrix<f64>, n_neighbors: usize, out_dim: usize) -> Result<DMatrix<f64>> {
    let n = rows.nrows();
    if out_dim == 0 {
        return Err(Error::InvalidArgument("isomap out_dim must be >= 1".into()));
    }
    if n < out_dim + 1 {
        return Err(Error::TooFewSamples {
            needed: out_dim + 1,
            got: n,
        });
    }
    if n_neighbors == 0 {
        return Err(Error::InvalidArgument(
            "isomap needs n_neighbors >= 1".into(),
        ));
    }
    let geo = geodesic_distances(rows, n_neighbors)?;
    classical_mds(&geo, out_dim)
}

#[derive(PartialEq)]
struct Frontier {
    dist: f64,
    node: usize,
}

impl Eq for Frontier {}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on distance, ties on node index
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Shortest-path distances over the symmetrised k-NN graph.
pub fn geodesic_distances(rows: &DMatrix<f64>, n_neighbors: usize) -> Result<DMatrix<f64>> {
    let n = rows.nrows();
    let euclid = DMatrix::from_fn(n, n, |i, j| (rows.row(i) - rows.row(j)).norm());

    let k = n_neighbors.min(n.saturating_sub(1));
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut linked = vec![false; n * n];
    for i in 0..n {
        let mut others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        others.sort_by(|&a, &b| euclid[(i, a)].total_cmp(&euclid[(i, b)]).then(a.cmp(&b)));
        for &j in others.iter().take(k) {
            if !linked[i * n + j] {
                linked[i * n + j] = true;
                linked[j * n + i] = true;
                adj[i].push((j, euclid[(i, j)]));
                adj[j].push((i, euclid[(i, j)]));
            }
        }
    }

    let sizes = component_sizes(&adj);
    if sizes.len() > 1 {
        return Err(Error::DisconnectedGraph {
            component_sizes: sizes,
        });
    }

    let mut geo = DMatrix::from_element(n, n, f64::INFINITY);
    for src in 0..n {
        let mut heap = BinaryHeap::new();
        geo[(src, src)] = 0.0;
        heap.push(Frontier {
            dist: 0.0,
            node: src,
        });
        while let Some(Frontier { dist, node }) = heap.pop() {
            if dist > geo[(src, node)] {
                continue;
            }
            for &(next, w) in &adj[node] {
                let cand = dist + w;
                if cand < geo[(src, next)] {
                    geo[(src, next)] = cand;
                    heap.push(Frontier {
                        dist: cand,
                        node: next,
                    });
                }
            }
        }
    }
    // Dijkstra from each end can differ in the last ulp; average for exact symmetry.
    let sym = (&geo + geo.transpose()) * 0.5;
    Ok(sym)
}

fn component_sizes(adj: &[Vec<(usize, f64)>]) -> Vec<usize> {
    let n = adj.len();
    let mut seen = vec![false; n];
    let mut sizes = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        let mut size = 0;
        while let Some(u) = queue.pop_front() {
            size += 1;
            for &(v, _) in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        sizes.push(size);
    }
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    sizes
}

/// Classical (Torgerson) MDS of a distance matrix. Negative eigenvalues of
/// the double-centred Gram matrix are treated as zero.
pub fn classical_mds(dist: &DMatrix<f64>, out_dim: usize) -> Result<DMatrix<f64>> {
    let n = dist.nrows();
    let sq = dist.map(|x| x * x);
    let row_means: Vec<f64> = (0..n).map(|i| sq.row(i).mean()).collect();
    let grand = sq.mean();
    let gram = DMatrix::from_fn(n, n, |i, j| {
        -0.5 * (sq[(i, j)] - row_means[i] - row_means[j] + grand)
    });

    let (eigenvalues, eigenvectors) = symmetric_eigen(&gram)?;
    let order = descending_order(eigenvalues.as_slice());
    let dims = out_dim.min(n);
    let mut coords = DMatrix::zeros(n, out_dim);
    for (j, &src) in order.iter().take(dims).enumerate() {
        let scale = eigenvalues[src].max(0.0).sqrt();
        for i in 0..n {
            coords[(i, j)] = eigenvectors[(i, src)] * scale;
        }
    }
    fix_column_signs(&mut coords);
    Ok(coords)
}
