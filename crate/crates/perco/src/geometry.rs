//! Periodic simulation boxes and point configurations with a cell-list
//! neighbor index.
//!
//! Coordinates live in the base cell `[0, L)^d` and are flat-packed
//! (`coords[i*d..(i+1)*d]` is point `i`). The cell list is sized by a fixed
//! `cutoff`; one index serves both the interaction range and the
//! connectivity radius when it is built with `max(r1, R)`.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Hard cap on the spatial dimension; keeps neighbor-cell enumeration on the
/// stack. Everything in practice runs at d = 2 or 3.
pub const MAX_DIM: usize = 8;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("dimension must be in 1..={MAX_DIM}, got {0}")]
    BadDimension(usize),
    #[error("box side must be positive and finite, got {0}")]
    BadSide(f64),
    #[error("cell cutoff must be positive and at most the box side, got {cutoff} (side {side})")]
    BadCutoff { cutoff: f64, side: f64 },
    #[error("query radius {r} exceeds cell index cutoff {cutoff}")]
    RadiusExceedsCutoff { r: f64, cutoff: f64 },
    #[error("periodic query radius {r} exceeds half the box side {half}")]
    RadiusExceedsHalfBox { r: f64, half: f64 },
    #[error("snapshot parse error: {0}")]
    BadSnapshot(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Distance rule for neighbor queries and cluster graphs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Plain Euclidean distance inside the base cell (no wrapping).
    Free,
    /// Minimal-image distance on the torus.
    Periodic,
}

/// Cubic box `[0, L)^d` with periodic boundary conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodicBox {
    dim: usize,
    side: f64,
}

impl PeriodicBox {
    pub fn new(dim: usize, side: f64) -> Result<Self, GeometryError> {
        if dim == 0 || dim > MAX_DIM {
            return Err(GeometryError::BadDimension(dim));
        }
        if !(side.is_finite() && side > 0.0) {
            return Err(GeometryError::BadSide(side));
        }
        Ok(Self { dim, side })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn volume(&self) -> f64 {
        self.side.powi(self.dim as i32)
    }

    /// Canonicalize coordinates into `[0, L)` componentwise.
    pub fn wrap(&self, x: &mut [f64]) {
        for xi in x.iter_mut() {
            *xi = xi.rem_euclid(self.side);
            // rem_euclid can return `side` itself for tiny negative inputs.
            if *xi >= self.side {
                *xi = 0.0;
            }
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim && x.iter().all(|&xi| (0.0..self.side).contains(&xi))
    }

    /// Minimal-image distance between two points of the base cell.
    pub fn min_image_dist(&self, x: &[f64], y: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(y.len(), self.dim);
        let mut d2 = 0.0;
        for i in 0..self.dim {
            let mut dx = x[i] - y[i];
            dx -= self.side * (dx / self.side).round();
            d2 += dx * dx;
        }
        d2.sqrt()
    }

    /// Minimal-image displacement `y - x + L s` with its integer lattice
    /// shift `s`. Each displacement component lands in `[-L/2, L/2]`.
    pub fn min_image_shift(&self, x: &[f64], y: &[f64], disp: &mut [f64], shift: &mut [i32]) {
        for i in 0..self.dim {
            let raw = y[i] - x[i];
            let s = -(raw / self.side).round();
            disp[i] = raw + self.side * s;
            shift[i] = s as i32;
        }
    }
}

/// Euclidean distance, no wrapping.
pub fn euclidean_dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// Volume of the d-ball of radius `r`: closed form via the two-step
/// recursion V_d = (2 pi r^2 / d) V_{d-2}, V_0 = 1, V_1 = 2r.
pub fn ball_volume(dim: usize, r: f64) -> f64 {
    assert!(r >= 0.0, "ball radius must be non-negative");
    let mut v = if dim.is_multiple_of(2) { 1.0 } else { 2.0 * r };
    let mut d = if dim.is_multiple_of(2) { 2 } else { 3 };
    while d <= dim {
        v *= 2.0 * std::f64::consts::PI * r * r / d as f64;
        d += 2;
    }
    v
}

/// Point set in a periodic box with a cell-list index of fixed cutoff.
///
/// Mutations keep the index consistent; removals swap the last point into
/// the vacated slot, so indices other than the removed one are stable except
/// for that last point.
#[derive(Debug, Clone)]
pub struct BoxConfiguration {
    bbox: PeriodicBox,
    cutoff: f64,
    coords: Vec<f64>,
    cells_per_side: usize,
    cell_side: f64,
    buckets: Vec<Vec<u32>>,
    cell_of: Vec<u32>,
}

impl BoxConfiguration {
    pub fn new(bbox: PeriodicBox, cutoff: f64) -> Result<Self, GeometryError> {
        if !(cutoff.is_finite() && cutoff > 0.0 && cutoff <= bbox.side()) {
            return Err(GeometryError::BadCutoff {
                cutoff,
                side: bbox.side(),
            });
        }
        let cells_per_side = (bbox.side() / cutoff).floor().max(1.0) as usize;
        let n_cells = cells_per_side.pow(bbox.dim() as u32);
        Ok(Self {
            bbox,
            cutoff,
            coords: Vec::new(),
            cells_per_side,
            cell_side: bbox.side() / cells_per_side as f64,
            buckets: vec![Vec::new(); n_cells],
            cell_of: Vec::new(),
        })
    }

    pub fn with_points(
        bbox: PeriodicBox,
        cutoff: f64,
        points: &[f64],
    ) -> Result<Self, GeometryError> {
        let mut cfg = Self::new(bbox, cutoff)?;
        assert!(
            points.len().is_multiple_of(bbox.dim()),
            "flat coordinate slice must be a multiple of the dimension"
        );
        for p in points.chunks_exact(bbox.dim()) {
            cfg.insert_point(p);
        }
        Ok(cfg)
    }

    pub fn bbox(&self) -> &PeriodicBox {
        &self.bbox
    }

    pub fn dim(&self) -> usize {
        self.bbox.dim()
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn len(&self) -> usize {
        self.cell_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cell_of.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.coords[i * d..(i + 1) * d]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim())
    }

    /// Rebuild the index with a new cutoff (e.g. a larger connectivity
    /// radius).
    pub fn set_cutoff(&mut self, cutoff: f64) -> Result<(), GeometryError> {
        let coords = std::mem::take(&mut self.coords);
        let mut fresh = Self::new(self.bbox, cutoff)?;
        fresh.coords = coords;
        fresh.cell_of = Vec::with_capacity(self.cell_of.len());
        for i in 0..fresh.coords.len() / fresh.dim() {
            let cell = fresh.cell_index(&fresh.coords[i * fresh.dim()..(i + 1) * fresh.dim()]);
            fresh.buckets[cell].push(i as u32);
            fresh.cell_of.push(cell as u32);
        }
        *self = fresh;
        Ok(())
    }

    fn cell_coord(&self, xi: f64) -> usize {
        ((xi / self.cell_side) as usize).min(self.cells_per_side - 1)
    }

    fn cell_index(&self, x: &[f64]) -> usize {
        let mut idx = 0;
        for &xi in x.iter().rev() {
            idx = idx * self.cells_per_side + self.cell_coord(xi);
        }
        idx
    }

    fn assert_in_box(&self, x: &[f64]) {
        assert!(
            self.bbox.contains(x),
            "coordinates out of the box [0, {})^{}: {:?}",
            self.bbox.side(),
            self.dim(),
            x
        );
    }

    /// Insert a point; returns its index. Panics on out-of-box coordinates
    /// or an exact coincidence with an existing point.
    pub fn insert_point(&mut self, x: &[f64]) -> usize {
        self.assert_in_box(x);
        let cell = self.cell_index(x);
        for &j in &self.buckets[cell] {
            assert!(
                self.point(j as usize) != x,
                "exact coincidence with point {j}"
            );
        }
        let idx = self.len();
        self.coords.extend_from_slice(x);
        self.buckets[cell].push(idx as u32);
        self.cell_of.push(cell as u32);
        idx
    }

    /// Remove point `i`. The last point takes over index `i`.
    pub fn remove_point(&mut self, i: usize) {
        let n = self.len();
        assert!(i < n, "point index {i} out of range (n = {n})");
        let d = self.dim();
        self.bucket_remove(self.cell_of[i] as usize, i as u32);
        let last = n - 1;
        if i != last {
            let (head, tail) = self.coords.split_at_mut(last * d);
            head[i * d..(i + 1) * d].copy_from_slice(&tail[..d]);
            let cell = self.cell_of[last] as usize;
            self.bucket_remove(cell, last as u32);
            self.buckets[cell].push(i as u32);
            self.cell_of[i] = cell as u32;
        }
        self.coords.truncate(last * d);
        self.cell_of.truncate(last);
    }

    /// Move point `i` to `x`, updating its cell registration.
    pub fn move_point(&mut self, i: usize, x: &[f64]) {
        assert!(i < self.len(), "point index {i} out of range");
        self.assert_in_box(x);
        let new_cell = self.cell_index(x);
        for &j in &self.buckets[new_cell] {
            assert!(
                j as usize == i || self.point(j as usize) != x,
                "exact coincidence with point {j}"
            );
        }
        let old_cell = self.cell_of[i] as usize;
        if old_cell != new_cell {
            self.bucket_remove(old_cell, i as u32);
            self.buckets[new_cell].push(i as u32);
            self.cell_of[i] = new_cell as u32;
        }
        let d = self.dim();
        self.coords[i * d..(i + 1) * d].copy_from_slice(x);
    }

    fn bucket_remove(&mut self, cell: usize, entry: u32) {
        let bucket = &mut self.buckets[cell];
        let pos = bucket
            .iter()
            .position(|&e| e == entry)
            .expect("cell index out of sync");
        bucket.swap_remove(pos);
    }

    /// All points at distance in `(0, r]` of `x` under `metric`, with their
    /// distances. `x` itself (an exact-coincidence hit) is never reported.
    pub fn neighbors_within(
        &self,
        x: &[f64],
        r: f64,
        metric: Metric,
    ) -> Result<Vec<(usize, f64)>, GeometryError> {
        self.check_radius(r, metric)?;
        let mut out = Vec::new();
        self.for_neighbors(x, r, metric, usize::MAX, |j, dist| out.push((j, dist)));
        Ok(out)
    }

    fn check_radius(&self, r: f64, metric: Metric) -> Result<(), GeometryError> {
        if r > self.cutoff {
            return Err(GeometryError::RadiusExceedsCutoff {
                r,
                cutoff: self.cutoff,
            });
        }
        if metric == Metric::Periodic && r > self.bbox.side() / 2.0 {
            return Err(GeometryError::RadiusExceedsHalfBox {
                r,
                half: self.bbox.side() / 2.0,
            });
        }
        Ok(())
    }

    /// Visitor form of the neighbor query; `exclude` skips one index
    /// (pass `usize::MAX` for none). Preconditions are debug-checked only,
    /// callers on the hot path guarantee `r <= cutoff` by construction.
    pub(crate) fn for_neighbors(
        &self,
        x: &[f64],
        r: f64,
        metric: Metric,
        exclude: usize,
        mut f: impl FnMut(usize, f64),
    ) {
        debug_assert!(self.check_radius(r, metric).is_ok());
        debug_assert_eq!(x.len(), self.dim());
        let r2 = r * r;
        let d = self.dim();
        let mut visit = |j: usize| {
            if j == exclude {
                return;
            }
            let y = self.point(j);
            let mut d2 = 0.0;
            match metric {
                Metric::Free => {
                    for k in 0..d {
                        let dx = x[k] - y[k];
                        d2 += dx * dx;
                    }
                }
                Metric::Periodic => {
                    for k in 0..d {
                        let mut dx = x[k] - y[k];
                        dx -= self.bbox.side() * (dx / self.bbox.side()).round();
                        d2 += dx * dx;
                    }
                }
            }
            if d2 > 0.0 && d2 <= r2 {
                f(j, d2.sqrt());
            }
        };

        // With fewer than 3 cells per side the 3^d stencil would revisit
        // cells after wrapping; just scan everything.
        if self.cells_per_side < 3 {
            for j in 0..self.len() {
                visit(j);
            }
            return;
        }

        let m = self.cells_per_side as i64;
        let mut base = [0i64; MAX_DIM];
        for k in 0..d {
            base[k] = self.cell_coord(x[k]) as i64;
        }
        // Mixed-radix walk over the 3^d offset block.
        let mut off = [-1i64; MAX_DIM];
        loop {
            let mut cell = 0usize;
            let mut in_range = true;
            for k in (0..d).rev() {
                let mut c = base[k] + off[k];
                match metric {
                    Metric::Periodic => c = c.rem_euclid(m),
                    Metric::Free => {
                        if c < 0 || c >= m {
                            in_range = false;
                            break;
                        }
                    }
                }
                cell = cell * self.cells_per_side + c as usize;
            }
            if in_range {
                for &j in &self.buckets[cell] {
                    visit(j as usize);
                }
            }
            // advance offsets
            let mut k = 0;
            loop {
                if k == d {
                    return;
                }
                off[k] += 1;
                if off[k] <= 1 {
                    break;
                }
                off[k] = -1;
                k += 1;
            }
        }
    }

    /// Write the plain-text snapshot: a header `# d=<d> L=<L> n=<N>` then one
    /// line of space-separated coordinates per point.
    pub fn dump_snapshot<W: Write>(&self, mut w: W) -> Result<(), GeometryError> {
        writeln!(
            w,
            "# d={} L={} n={}",
            self.dim(),
            self.bbox.side(),
            self.len()
        )?;
        let mut line = String::new();
        for p in self.points() {
            line.clear();
            for (k, xi) in p.iter().enumerate() {
                if k > 0 {
                    line.push(' ');
                }
                let _ = write!(line, "{xi}");
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    /// Parse a snapshot written by [`dump_snapshot`](Self::dump_snapshot).
    pub fn load_snapshot<R: BufRead>(r: R, cutoff: f64) -> Result<Self, GeometryError> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| GeometryError::BadSnapshot("empty file".into()))??;
        let mut dim = None;
        let mut side = None;
        let mut n = None;
        for tok in header.trim_start_matches('#').split_whitespace() {
            let (key, value) = tok
                .split_once('=')
                .ok_or_else(|| GeometryError::BadSnapshot(format!("bad header token {tok:?}")))?;
            match key {
                "d" => dim = value.parse::<usize>().ok(),
                "L" => side = value.parse::<f64>().ok(),
                "n" => n = value.parse::<usize>().ok(),
                _ => return Err(GeometryError::BadSnapshot(format!("unknown key {key:?}"))),
            }
        }
        let (Some(dim), Some(side), Some(n)) = (dim, side, n) else {
            return Err(GeometryError::BadSnapshot(format!(
                "header must carry d, L and n: {header:?}"
            )));
        };
        let bbox = PeriodicBox::new(dim, side)?;
        let mut cfg = Self::new(bbox, cutoff)?;
        let mut count = 0usize;
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let coords: Result<Vec<f64>, _> =
                line.split_whitespace().map(|t| t.parse::<f64>()).collect();
            let coords = coords
                .map_err(|e| GeometryError::BadSnapshot(format!("bad coordinate: {e}")))?;
            if coords.len() != dim {
                return Err(GeometryError::BadSnapshot(format!(
                    "expected {dim} coordinates per line, got {}",
                    coords.len()
                )));
            }
            if !bbox.contains(&coords) {
                return Err(GeometryError::BadSnapshot(format!(
                    "point {coords:?} outside [0, {side})"
                )));
            }
            cfg.insert_point(&coords);
            count += 1;
        }
        if count != n {
            return Err(GeometryError::BadSnapshot(format!(
                "header claims n={n}, file has {count} points"
            )));
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bbox(dim: usize, side: f64) -> PeriodicBox {
        PeriodicBox::new(dim, side).unwrap()
    }

    #[test]
    fn ball_volumes_match_closed_forms() {
        assert!((ball_volume(1, 2.0) - 4.0).abs() < 1e-14);
        assert!((ball_volume(2, 1.5) - std::f64::consts::PI * 2.25).abs() < 1e-14);
        assert!((ball_volume(3, 1.0) - 4.0 * std::f64::consts::PI / 3.0).abs() < 1e-14);
        // V_4(r) = pi^2 r^4 / 2
        let pi = std::f64::consts::PI;
        assert!((ball_volume(4, 1.0) - pi * pi / 2.0).abs() < 1e-14);
    }

    #[test]
    fn min_image_basics() {
        let b = bbox(2, 10.0);
        // Straight-line distance within the cell.
        assert!((b.min_image_dist(&[1.0, 1.0], &[4.0, 5.0]) - 5.0).abs() < 1e-12);
        // Wrap across the boundary: 9.5 vs 0.5 is distance 1.
        assert!((b.min_image_dist(&[9.5, 2.0], &[0.5, 2.0]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn min_image_shift_reports_crossings() {
        let b = bbox(2, 10.0);
        let mut disp = [0.0; 2];
        let mut shift = [0i32; 2];
        b.min_image_shift(&[9.5, 2.0], &[0.5, 2.0], &mut disp, &mut shift);
        assert_eq!(shift, [1, 0]);
        assert!((disp[0] - 1.0).abs() < 1e-12);
        b.min_image_shift(&[0.5, 2.0], &[9.5, 2.0], &mut disp, &mut shift);
        assert_eq!(shift, [-1, 0]);
    }

    #[test]
    fn wrap_canonicalizes() {
        let b = bbox(2, 10.0);
        let mut x = [12.5, -0.25];
        b.wrap(&mut x);
        assert!((x[0] - 2.5).abs() < 1e-12);
        assert!((x[1] - 9.75).abs() < 1e-12);
        assert!(b.contains(&x));
    }

    #[test]
    fn insert_remove_move_keep_index_consistent() {
        let mut cfg = BoxConfiguration::new(bbox(2, 10.0), 2.0).unwrap();
        assert!(cfg.is_empty());
        let a = cfg.insert_point(&[0.5, 0.5]);
        assert_eq!(a, 0);
        assert_eq!(cfg.len(), 1);
        cfg.insert_point(&[5.0, 5.0]);
        cfg.insert_point(&[9.9, 0.1]);

        // Move and move back restores the original coordinates.
        let orig = cfg.point(1).to_vec();
        cfg.move_point(1, &[1.7, 8.2]);
        cfg.move_point(1, &orig);
        assert_eq!(cfg.point(1), &orig[..]);

        // Removing swaps the last point into the hole.
        cfg.remove_point(0);
        assert_eq!(cfg.len(), 2);
        assert_eq!(cfg.point(0), &[9.9, 0.1]);

        cfg.remove_point(1);
        cfg.remove_point(0);
        assert!(cfg.is_empty());
    }

    #[test]
    #[should_panic(expected = "out of the box")]
    fn insert_rejects_out_of_box() {
        let mut cfg = BoxConfiguration::new(bbox(2, 10.0), 2.0).unwrap();
        cfg.insert_point(&[10.0, 0.0]);
    }

    #[test]
    #[should_panic(expected = "coincidence")]
    fn insert_rejects_exact_coincidence() {
        let mut cfg = BoxConfiguration::new(bbox(2, 10.0), 2.0).unwrap();
        cfg.insert_point(&[1.0, 2.0]);
        cfg.insert_point(&[1.0, 2.0]);
    }

    #[test]
    fn neighbor_query_rejects_oversized_radius() {
        let cfg = BoxConfiguration::new(bbox(2, 10.0), 2.0).unwrap();
        assert!(matches!(
            cfg.neighbors_within(&[0.0, 0.0], 2.5, Metric::Free),
            Err(GeometryError::RadiusExceedsCutoff { .. })
        ));
        let wide = BoxConfiguration::new(bbox(2, 10.0), 8.0).unwrap();
        assert!(matches!(
            wide.neighbors_within(&[0.0, 0.0], 6.0, Metric::Periodic),
            Err(GeometryError::RadiusExceedsHalfBox { .. })
        ));
    }

    #[test]
    fn neighbor_query_straddles_boundary() {
        let mut cfg = BoxConfiguration::new(bbox(2, 10.0), 1.5).unwrap();
        cfg.insert_point(&[0.2, 5.0]);
        cfg.insert_point(&[9.8, 5.0]); // distance 0.4 across the seam
        cfg.insert_point(&[5.0, 5.0]);
        let per = cfg
            .neighbors_within(&[0.2, 5.0], 1.0, Metric::Periodic)
            .unwrap();
        assert_eq!(per.len(), 1);
        assert_eq!(per[0].0, 1);
        assert!((per[0].1 - 0.4).abs() < 1e-12);
        // Under the free metric the seam does not exist.
        let free = cfg.neighbors_within(&[0.2, 5.0], 1.0, Metric::Free).unwrap();
        assert!(free.is_empty());
    }

    fn random_config(
        rng: &mut ChaCha8Rng,
        dim: usize,
        side: f64,
        n: usize,
        cutoff: f64,
    ) -> BoxConfiguration {
        let mut cfg = BoxConfiguration::new(bbox(dim, side), cutoff).unwrap();
        for _ in 0..n {
            let x: Vec<f64> = (0..dim).map(|_| rng.random_range(0.0..side)).collect();
            cfg.insert_point(&x);
        }
        cfg
    }

    #[test]
    fn neighbors_match_brute_force_over_random_queries() {
        // 1000 random queries against the O(n^2) scan, both metrics,
        // including a box small enough to force the full-scan path.
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for &(side, n, cutoff) in &[(10.0, 120usize, 1.5), (3.5, 40, 1.6), (10.0, 0, 2.0)] {
            let cfg = random_config(&mut rng, 2, side, n, cutoff);
            for _ in 0..(if n == 0 { 50 } else { 500 }) {
                let x = [rng.random_range(0.0..side), rng.random_range(0.0..side)];
                let r = rng.random_range(0.05..cutoff.min(side / 2.0));
                for metric in [Metric::Free, Metric::Periodic] {
                    let mut got = cfg.neighbors_within(&x, r, metric).unwrap();
                    got.sort_by_key(|&(j, _)| j);
                    let mut want: Vec<(usize, f64)> = (0..cfg.len())
                        .filter_map(|j| {
                            let d = match metric {
                                Metric::Free => euclidean_dist(&x, cfg.point(j)),
                                Metric::Periodic => cfg.bbox().min_image_dist(&x, cfg.point(j)),
                            };
                            (d > 0.0 && d <= r).then_some((j, d))
                        })
                        .collect();
                    want.sort_by_key(|&(j, _)| j);
                    assert_eq!(got.len(), want.len());
                    for (g, w) in got.iter().zip(&want) {
                        assert_eq!(g.0, w.0);
                        assert!((g.1 - w.1).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn neighbors_consistent_after_mutations() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut cfg = random_config(&mut rng, 2, 8.0, 60, 1.5);
        for _ in 0..2000 {
            match rng.random_range(0..3u32) {
                0 => {
                    let x = [rng.random_range(0.0..8.0), rng.random_range(0.0..8.0)];
                    cfg.insert_point(&x);
                }
                1 if !cfg.is_empty() => {
                    let i = rng.random_range(0..cfg.len());
                    cfg.remove_point(i);
                }
                _ if !cfg.is_empty() => {
                    let i = rng.random_range(0..cfg.len());
                    let x = [rng.random_range(0.0..8.0), rng.random_range(0.0..8.0)];
                    cfg.move_point(i, &x);
                }
                _ => {}
            }
        }
        // Index still answers exactly.
        let x = [4.0, 4.0];
        let got = cfg.neighbors_within(&x, 1.2, Metric::Periodic).unwrap();
        let want: Vec<usize> = (0..cfg.len())
            .filter(|&j| {
                let d = cfg.bbox().min_image_dist(&x, cfg.point(j));
                d > 0.0 && d <= 1.2
            })
            .collect();
        let mut got_idx: Vec<usize> = got.iter().map(|&(j, _)| j).collect();
        got_idx.sort_unstable();
        assert_eq!(got_idx, want);
    }

    #[test]
    fn snapshot_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cfg = random_config(&mut rng, 2, 10.0, 25, 1.5);
        let mut buf = Vec::new();
        cfg.dump_snapshot(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# d=2 L=10 n=25"));
        let back = BoxConfiguration::load_snapshot(&buf[..], 1.5).unwrap();
        assert_eq!(back.len(), cfg.len());
        for i in 0..cfg.len() {
            assert_eq!(back.point(i), cfg.point(i), "exact round trip");
        }
    }

    #[test]
    fn snapshot_rejects_malformed_input() {
        let bad_header = b"# d=2 L=10\n0.0 0.0\n";
        assert!(BoxConfiguration::load_snapshot(&bad_header[..], 1.5).is_err());
        let bad_count = b"# d=2 L=10 n=2\n0.0 0.0\n";
        assert!(BoxConfiguration::load_snapshot(&bad_count[..], 1.5).is_err());
        let bad_coord = b"# d=2 L=10 n=1\n0.0 nope\n";
        assert!(BoxConfiguration::load_snapshot(&bad_coord[..], 1.5).is_err());
        let out_of_box = b"# d=2 L=10 n=1\n12.0 0.0\n";
        assert!(BoxConfiguration::load_snapshot(&out_of_box[..], 1.5).is_err());
    }

    proptest! {
        #[test]
        fn min_image_is_a_metric(
            xs in proptest::collection::vec(0.0f64..10.0, 6),
            side in 5.0f64..20.0,
        ) {
            let b = bbox(2, side);
            let scale = side / 10.0;
            let p: Vec<f64> = xs.iter().map(|v| (v * scale).min(side * 0.999)).collect();
            let (x, y, z) = (&p[0..2], &p[2..4], &p[4..6]);
            let dxy = b.min_image_dist(x, y);
            let dyx = b.min_image_dist(y, x);
            prop_assert!((dxy - dyx).abs() < 1e-12);
            prop_assert!(dxy >= 0.0);
            // Bounded by half the main diagonal.
            prop_assert!(dxy <= (side / 2.0) * (2.0f64).sqrt() + 1e-9);
            // Triangle inequality.
            let dxz = b.min_image_dist(x, z);
            let dzy = b.min_image_dist(z, y);
            prop_assert!(dxy <= dxz + dzy + 1e-9);
        }

        #[test]
        fn wrap_is_idempotent(x0 in -50.0f64..50.0, x1 in -50.0f64..50.0) {
            let b = bbox(2, 7.5);
            let mut x = [x0, x1];
            b.wrap(&mut x);
            prop_assert!(b.contains(&x));
            let once = x;
            b.wrap(&mut x);
            prop_assert_eq!(once, x);
        }
    }
}
