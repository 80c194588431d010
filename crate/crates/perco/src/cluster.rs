//! Connectivity clusters of a point configuration at radius R.
//!
//! Two points are adjacent when their distance lies in (0, R]. Free reports
//! use plain Euclidean distances inside the box; periodic reports use the
//! minimal-image metric and additionally detect components that wrap around
//! the torus, the finite-volume stand-in for an infinite cluster. Wrapping
//! is found by tracking an integer lattice shift per union-find edge: a
//! component wraps exactly when two fusion paths to a common root disagree
//! by a nonzero shift.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::geometry::{BoxConfiguration, GeometryError, Metric, MAX_DIM};

/// Boundary rule a cluster report was computed under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Free,
    Periodic,
}

/// Cluster decomposition of one configuration at one radius.
#[derive(Debug, Clone, Serialize)]
pub struct ClusterReport {
    pub r: f64,
    pub boundary: Boundary,
    /// Component id per point, compacted to 0..num_components in order of
    /// first appearance.
    pub labels: Vec<usize>,
    /// Component sizes, indexed by component id.
    pub sizes: Vec<usize>,
    /// Per-component wrap flags; absent for free reports.
    pub wrapped: Option<Vec<bool>>,
    /// Box volume used for the densities.
    pub volume: f64,
    /// k -> rho_k, number of non-wrapping k-clusters per unit volume.
    pub rho: BTreeMap<usize, f64>,
    /// Total mass density carried by wrapping components; 0 for free
    /// reports.
    pub wrapped_mass: f64,
}

impl ClusterReport {
    pub fn num_components(&self) -> usize {
        self.sizes.len()
    }

    /// Integer particle counts: (particles in non-wrapping components,
    /// particles in wrapping components). Their sum is exactly n.
    pub fn particle_split(&self) -> (usize, usize) {
        match &self.wrapped {
            None => (self.sizes.iter().sum(), 0),
            Some(flags) => {
                let mut finite = 0;
                let mut wrapped = 0;
                for (size, &w) in self.sizes.iter().zip(flags) {
                    if w {
                        wrapped += size;
                    } else {
                        finite += size;
                    }
                }
                (finite, wrapped)
            }
        }
    }

    /// Exact mass balance on counts: sum_k k * (#k-clusters) plus wrapped
    /// particles equals the particle number.
    pub fn assert_mass_balance(&self, n: usize) {
        let (finite, wrapped) = self.particle_split();
        assert_eq!(
            finite + wrapped,
            n,
            "cluster mass balance violated: {finite} + {wrapped} != {n}"
        );
    }
}

/// Dense rho vector (rho_1, ..., rho_k_max), zero-padded.
pub fn rho_vector(report: &ClusterReport, k_max: usize) -> Vec<f64> {
    let mut out = vec![0.0; k_max];
    for (&k, &rho) in &report.rho {
        if k >= 1 && k <= k_max {
            out[k - 1] = rho;
        }
    }
    out
}

/// Union-find over points whose edges carry integer lattice shifts; detects
/// cycles with nonzero winding. Also used for lattice-gas site percolation.
pub(crate) struct WrapUnionFind {
    dim: usize,
    parent: Vec<u32>,
    size: Vec<u32>,
    /// shift[i] = winding of node i relative to its parent, flat stride dim.
    shift: Vec<i32>,
    wrapped: Vec<bool>,
}

impl WrapUnionFind {
    pub fn new(n: usize, dim: usize) -> Self {
        assert!(dim <= MAX_DIM);
        Self {
            dim,
            parent: (0..n as u32).collect(),
            size: vec![1; n],
            shift: vec![0; n * dim],
            wrapped: vec![false; n],
        }
    }

    /// Root of i; afterwards every node on the walked path hangs directly
    /// off the root with its shift re-anchored accordingly.
    pub fn find(&mut self, i: usize) -> usize {
        let mut path = Vec::new();
        let mut node = i;
        while self.parent[node] as usize != node {
            path.push(node);
            node = self.parent[node] as usize;
        }
        let root = node;
        // Re-anchor nearest-root first so each node can fold its parent's
        // already-rebased shift into its own.
        for &u in path.iter().rev() {
            let p = self.parent[u] as usize;
            if p != root {
                for k in 0..self.dim {
                    self.shift[u * self.dim + k] += self.shift[p * self.dim + k];
                }
            }
            self.parent[u] = root as u32;
        }
        root
    }

    /// Join i and j given the edge constraint w(j) = w(i) + s. A
    /// redundant edge whose windings disagree marks the component wrapped.
    pub fn union(&mut self, i: usize, j: usize, s: &[i32]) {
        let ri = self.find(i);
        let rj = self.find(j);
        let d = self.dim;
        if ri == rj {
            let consistent = (0..d).all(|k| {
                self.shift[i * d + k] + s[k] == self.shift[j * d + k]
            });
            if !consistent {
                self.wrapped[ri] = true;
            }
            return;
        }
        let (big, small, sign) = if self.size[ri] >= self.size[rj] {
            (ri, rj, 1)
        } else {
            (rj, ri, -1)
        };
        // Winding of the absorbed root relative to the surviving root.
        for (k, &sk) in s.iter().enumerate() {
            let rel = self.shift[i * d + k] + sk - self.shift[j * d + k];
            self.shift[small * d + k] = sign * rel;
        }
        self.parent[small] = big as u32;
        self.size[big] += self.size[small];
        self.wrapped[big] |= self.wrapped[small];
    }

    pub fn is_wrapped_root(&self, root: usize) -> bool {
        self.wrapped[root]
    }
}

const ZERO_SHIFT: [i32; MAX_DIM] = [0; MAX_DIM];

/// Clusters under the free (non-wrapping Euclidean) adjacency rule.
pub fn free_clusters(config: &BoxConfiguration, r: f64) -> Result<ClusterReport, GeometryError> {
    build_report(config, r, Metric::Free)
}

/// Clusters under the minimal-image adjacency rule with wrap detection.
/// Requires r <= L/2, otherwise minimal images are ambiguous.
pub fn periodic_clusters(
    config: &BoxConfiguration,
    r: f64,
) -> Result<ClusterReport, GeometryError> {
    build_report(config, r, Metric::Periodic)
}

fn build_report(
    config: &BoxConfiguration,
    r: f64,
    metric: Metric,
) -> Result<ClusterReport, GeometryError> {
    // Surface the radius errors eagerly even for empty configurations.
    let probe = vec![0.0; config.dim()];
    config.neighbors_within(&probe, r, metric)?;

    let n = config.len();
    let d = config.dim();
    let mut uf = WrapUnionFind::new(n, d);
    let mut disp = [0.0f64; MAX_DIM];
    let mut shift = [0i32; MAX_DIM];
    let mut edges: Vec<usize> = Vec::new();
    for i in 0..n {
        edges.clear();
        config.for_neighbors(config.point(i), r, metric, i, |j, _| {
            if j > i {
                edges.push(j);
            }
        });
        for &j in &edges {
            match metric {
                Metric::Free => uf.union(i, j, &ZERO_SHIFT[..d]),
                Metric::Periodic => {
                    // Borrow juggling: copy point i out before the query.
                    let xi = config.point(i);
                    let xj = config.point(j);
                    config
                        .bbox()
                        .min_image_shift(xi, xj, &mut disp[..d], &mut shift[..d]);
                    uf.union(i, j, &shift[..d]);
                }
            }
        }
    }

    let mut label_of_root: BTreeMap<usize, usize> = BTreeMap::new();
    let mut labels = vec![0usize; n];
    let mut sizes: Vec<usize> = Vec::new();
    let mut wrapped_flags: Vec<bool> = Vec::new();
    for (i, slot) in labels.iter_mut().enumerate() {
        let root = uf.find(i);
        let label = *label_of_root.entry(root).or_insert_with(|| {
            sizes.push(0);
            wrapped_flags.push(uf.is_wrapped_root(root));
            sizes.len() - 1
        });
        *slot = label;
        sizes[label] += 1;
    }

    let volume = config.bbox().volume();
    let mut rho: BTreeMap<usize, f64> = BTreeMap::new();
    let mut wrapped_particles = 0usize;
    for (label, &size) in sizes.iter().enumerate() {
        if wrapped_flags[label] {
            wrapped_particles += size;
        } else {
            *rho.entry(size).or_insert(0.0) += 1.0;
        }
    }
    for v in rho.values_mut() {
        *v /= volume;
    }

    let report = ClusterReport {
        r,
        boundary: match metric {
            Metric::Free => Boundary::Free,
            Metric::Periodic => Boundary::Periodic,
        },
        labels,
        sizes,
        wrapped: match metric {
            Metric::Free => None,
            Metric::Periodic => Some(wrapped_flags),
        },
        volume,
        rho,
        wrapped_mass: wrapped_particles as f64 / volume,
    };
    report.assert_mass_balance(n);
    Ok(report)
}
