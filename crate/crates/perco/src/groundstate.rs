//! Numerical ground-state energies and the quantities derived from them.
//!
//! E_1 := 0 and, for k >= 2, E_k is the infimum of the total energy over k
//! points in free space. The estimates here are best-of-candidates upper
//! bounds on the true E_k: lattice fragments (triangular in d = 2,
//! hypercubic in any d) over a grid of spacings, random restarts refined by
//! local search, and far-apart unions of smaller minimizers. The per-particle
//! proxy is e_inf_hat = min_{k <= K} E_k / k, optionally replaced by a
//! user-supplied lattice value; the surcharge is
//! nu_star_hat = min_{k <= K} (E_k - k e_inf_hat).
//!
//! Square wells have piecewise-constant landscapes with zero gradient almost
//! everywhere, so descent is useless; those are refined by random jitter and
//! relocation probes that accept strict improvements. Smooth wells use a
//! coordinate pattern search with a shrinking step. Neither carries an
//! optimality proof; the table records honest upper bounds.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::mix_seed;
use crate::potential::{total_energy, PairPotential, WellShape};

/// Best configuration found for one particle count.
#[derive(Debug, Clone, Serialize)]
pub struct GroundStateRecord {
    pub k: usize,
    pub dim: usize,
    /// Best total energy found; an upper bound on the true E_k.
    pub energy: f64,
    /// Flat row-major coordinates of the best configuration.
    pub coords: Vec<f64>,
    /// Smallest pairwise distance; infinite for k = 1.
    pub min_pair_dist: f64,
    pub diameter: f64,
    pub restarts_used: usize,
}

/// Which value `e_inf_hat` carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EInfSource {
    /// min over the computed k <= K of E_k / k.
    ComputedMin,
    /// Caller-supplied (e.g. a periodic lattice sum); the computed minimum
    /// is still available through the records.
    Override,
}

#[derive(Debug, Clone, Serialize)]
pub struct GroundStateTable {
    pub records: Vec<GroundStateRecord>,
    pub e_inf_hat: f64,
    pub e_inf_source: EInfSource,
    /// min_k (E_k - k e_inf_hat) over the computed range.
    pub nu_star_hat: f64,
    /// Smallest k attaining the minimum above.
    pub nu_star_argmin_k: usize,
    /// The minimum sits at k = K: the truncation is visibly too short for
    /// a stable surcharge, and downstream uses should treat it as such.
    pub nu_star_at_boundary: bool,
}

/// Assumption checks for one record against claimed constants.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AssumptionReport {
    pub k: usize,
    pub min_pair_dist: f64,
    pub r_min_claim: f64,
    pub min_dist_ok: bool,
    pub diameter: f64,
    /// The bound actually tested: c_claim * k^{1/d}.
    pub diameter_bound: f64,
    pub c_claim: f64,
    pub diameter_ok: bool,
}

fn pair_extremes(dim: usize, coords: &[f64]) -> (f64, f64) {
    let k = coords.len() / dim;
    let mut min_d = f64::INFINITY;
    let mut max_d = 0.0f64;
    for i in 0..k {
        for j in (i + 1)..k {
            let d = crate::geometry::euclidean_dist(
                &coords[i * dim..(i + 1) * dim],
                &coords[j * dim..(j + 1) * dim],
            );
            min_d = min_d.min(d);
            max_d = max_d.max(d);
        }
    }
    (min_d, max_d)
}

fn make_record(v: &PairPotential, k: usize, coords: Vec<f64>, restarts_used: usize) -> GroundStateRecord {
    let energy = total_energy(v, &coords);
    let (min_pair_dist, diameter) = pair_extremes(v.dim(), &coords);
    GroundStateRecord {
        k,
        dim: v.dim(),
        energy,
        coords,
        min_pair_dist,
        diameter,
        restarts_used,
    }
}

/// Spacings worth trying for lattice fragments: a coarse sweep of the well
/// plus the flat-bottom midpoint and the largest spacing whose cube/square
/// diagonal still lands inside the well.
fn spacing_grid(v: &PairPotential) -> Vec<f64> {
    let r_hc = v.hard_core();
    let r1 = v.range();
    let width = r1 - r_hc;
    let mut out: Vec<f64> = [0.02, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6]
        .iter()
        .map(|f| r_hc + f * width)
        .collect();
    let (_, mid) = v.tail_min().expect("spacing grid needs a tail");
    out.push(mid);
    let diag_sweet = 0.5 * (r_hc + r1 / std::f64::consts::SQRT_2);
    if diag_sweet > r_hc {
        out.push(diag_sweet);
    }
    out.retain(|&s| s > r_hc && s < r1);
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

/// The k sites of an infinite lattice closest to `center`, ties broken by
/// coordinates so the choice is deterministic. Different centers (a site, a
/// bond midpoint, a cell center) yield differently shaped compact fragments;
/// nearest-to-a-site alone produces stars instead of blocks at small k.
fn nearest_fragment(sites: &mut [Vec<f64>], k: usize, center: &[f64]) -> Vec<f64> {
    sites.sort_by(|a, b| {
        let na: f64 = a.iter().zip(center).map(|(x, c)| (x - c) * (x - c)).sum();
        let nb: f64 = b.iter().zip(center).map(|(x, c)| (x - c) * (x - c)).sum();
        na.total_cmp(&nb).then_with(|| {
            for (x, y) in a.iter().zip(b) {
                let c = x.total_cmp(y);
                if c != std::cmp::Ordering::Equal {
                    return c;
                }
            }
            std::cmp::Ordering::Equal
        })
    });
    sites.iter().take(k).flatten().copied().collect()
}

/// All fragments of k triangular-lattice sites nearest to a site, an edge
/// midpoint, and a face barycenter.
fn triangular_fragments(k: usize, spacing: f64) -> Vec<Vec<f64>> {
    let reach = (k as f64).sqrt() as i64 + 2;
    let mut sites = Vec::new();
    for n in -reach..=reach {
        for m in -reach..=reach {
            sites.push(vec![
                spacing * (n as f64 + 0.5 * m as f64),
                spacing * (m as f64) * 3f64.sqrt() / 2.0,
            ]);
        }
    }
    let centers = [
        vec![0.0, 0.0],
        vec![0.5 * spacing, 0.0],
        vec![0.5 * spacing, spacing * 3f64.sqrt() / 6.0],
    ];
    centers
        .iter()
        .map(|c| nearest_fragment(&mut sites, k, c))
        .collect()
}

/// Hypercubic analogue: fragments nearest to a site, a bond midpoint, and a
/// cell center.
fn hypercubic_fragments(dim: usize, k: usize, spacing: f64) -> Vec<Vec<f64>> {
    let reach = (k as f64).powf(1.0 / dim as f64).ceil() as i64 + 1;
    let mut sites = Vec::new();
    let width = 2 * reach + 1;
    let total = width.pow(dim as u32);
    for flat in 0..total {
        let mut site = Vec::with_capacity(dim);
        let mut rest = flat;
        for _ in 0..dim {
            site.push(spacing * ((rest % width) - reach) as f64);
            rest /= width;
        }
        sites.push(site);
    }
    let mut bond = vec![0.0; dim];
    bond[0] = 0.5 * spacing;
    let centers = [vec![0.0; dim], bond, vec![0.5 * spacing; dim]];
    centers
        .iter()
        .map(|c| nearest_fragment(&mut sites, k, c))
        .collect()
}

/// Standard-normal draw (Box-Muller); good enough for isotropic directions.
fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn random_unit(dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| gaussian(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.iter().map(|x| x / norm).collect();
        }
    }
}

/// Sequential random placement in a free-space box, rejecting overlaps.
fn random_start(v: &PairPotential, k: usize, rng: &mut ChaCha8Rng) -> Option<Vec<f64>> {
    let d = v.dim();
    let side = 1.5 * v.range().max(1.0) * (k as f64).powf(1.0 / d as f64);
    let mut coords: Vec<f64> = Vec::with_capacity(k * d);
    'outer: for _ in 0..k {
        for _ in 0..2_000 {
            let x: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..side)).collect();
            let clear = coords.chunks_exact(d).all(|p| {
                crate::geometry::euclidean_dist(p, &x) > v.hard_core()
            });
            if clear {
                coords.extend_from_slice(&x);
                continue 'outer;
            }
        }
        return None;
    }
    Some(coords)
}

/// Jitter/relocation probes for piecewise-constant landscapes. Accepts
/// strict improvements only, so the result never regresses.
fn probe_refine(v: &PairPotential, coords: &mut [f64], rng: &mut ChaCha8Rng, iters: usize) -> f64 {
    let d = v.dim();
    let k = coords.len() / d;
    let mut energy = total_energy(v, coords);
    if k < 2 {
        return energy;
    }
    let width = v.range() - v.hard_core();
    for _ in 0..iters {
        let i = rng.random_range(0..k);
        let old: Vec<f64> = coords[i * d..(i + 1) * d].to_vec();
        if rng.random::<f64>() < 0.5 {
            for c in 0..d {
                coords[i * d + c] += rng.random_range(-0.5 * width..=0.5 * width);
            }
        } else {
            // Re-anchor next to another particle at a well distance.
            let mut j = rng.random_range(0..k - 1);
            if j >= i {
                j += 1;
            }
            let dir = random_unit(d, rng);
            let dist = rng.random_range(v.hard_core() + 0.01 * width..v.range() - 0.01 * width);
            for c in 0..d {
                coords[i * d + c] = coords[j * d + c] + dist * dir[c];
            }
        }
        let trial = total_energy(v, coords);
        if trial < energy - 1e-12 {
            energy = trial;
        } else {
            coords[i * d..(i + 1) * d].copy_from_slice(&old);
        }
    }
    energy
}

/// Coordinate pattern search with shrinking step, for shapes with usable
/// slopes. Stops once the step falls below `1e-6 * range`.
fn pattern_search(v: &PairPotential, coords: &mut [f64]) -> f64 {
    let n = coords.len();
    let mut energy = total_energy(v, coords);
    let mut step = 0.2 * v.range();
    let tol = 1e-6 * v.range();
    while step >= tol {
        let mut improved = false;
        for idx in 0..n {
            for sgn in [1.0, -1.0] {
                coords[idx] += sgn * step;
                let trial = total_energy(v, coords);
                if trial < energy {
                    energy = trial;
                    improved = true;
                } else {
                    coords[idx] -= sgn * step;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    energy
}

fn refine(v: &PairPotential, coords: &mut [f64], rng: &mut ChaCha8Rng) -> f64 {
    match v.shape() {
        WellShape::SquareWell { .. } => probe_refine(v, coords, rng, 400),
        WellShape::SmoothWell { .. } => {
            // Probes first escape flat plateaus, then descent polishes.
            probe_refine(v, coords, rng, 150);
            pattern_search(v, coords)
        }
    }
}

/// Best-of-candidates estimate of E_k. Deterministic given `seed`, and the
/// candidate set only grows with `restarts`, so the estimate is
/// non-increasing in the restart budget.
pub fn minimize_energy(
    v: &PairPotential,
    k: usize,
    restarts: usize,
    seed: u64,
) -> GroundStateRecord {
    assert!(k >= 1, "need at least one particle");
    let d = v.dim();
    if k == 1 {
        // E_1 := 0 by definition.
        return GroundStateRecord {
            k: 1,
            dim: d,
            energy: 0.0,
            coords: vec![0.0; d],
            min_pair_dist: f64::INFINITY,
            diameter: 0.0,
            restarts_used: 0,
        };
    }
    if !v.has_tail() {
        // Nothing to gain from proximity: spread points on a sparse line.
        let gap = 2.0 * v.hard_core().max(0.5);
        let mut coords = vec![0.0; k * d];
        for i in 0..k {
            coords[i * d] = i as f64 * gap;
        }
        return make_record(v, k, coords, 0);
    }

    let mut best: Option<Vec<f64>> = None;
    let mut best_energy = f64::INFINITY;
    let mut consider = |coords: Vec<f64>, energy: f64| {
        if energy < best_energy {
            best_energy = energy;
            best = Some(coords);
        }
    };

    // Lattice fragments, refined with a fixed per-spacing stream that does
    // not depend on the restart budget.
    for (si, spacing) in spacing_grid(v).into_iter().enumerate() {
        let mut fragments = hypercubic_fragments(d, k, spacing);
        if d == 2 {
            fragments.extend(triangular_fragments(k, spacing));
        }
        for (fi, mut coords) in fragments.into_iter().enumerate() {
            let mut rng =
                ChaCha8Rng::seed_from_u64(mix_seed(seed, 0x4C41_0000 + (si * 8 + fi) as u64));
            let energy = refine(v, &mut coords, &mut rng);
            consider(coords, energy);
        }
    }

    // Random restarts, one derived stream each.
    for r in 0..restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, r as u64));
        if let Some(mut coords) = random_start(v, k, &mut rng) {
            let energy = refine(v, &mut coords, &mut rng);
            consider(coords, energy);
        }
    }

    let coords = best.expect("lattice candidates always exist for tailed potentials");
    let record = make_record(v, k, coords, restarts);
    debug_assert!(
        (record.energy - best_energy).abs() <= 1e-9 * record.energy.abs().max(1.0),
        "refinement bookkeeping drifted from a fresh evaluation"
    );
    record
}

/// Translate `b` along the first axis until every cross pair is out of
/// range, and return the concatenation.
fn far_union(dim: usize, range: f64, a: &[f64], b: &[f64]) -> Vec<f64> {
    let a_max = a
        .chunks_exact(dim)
        .map(|p| p[0])
        .fold(f64::NEG_INFINITY, f64::max);
    let b_min = b.chunks_exact(dim).map(|p| p[0]).fold(f64::INFINITY, f64::min);
    let offset = a_max - b_min + range + 1.0;
    let mut out = a.to_vec();
    for p in b.chunks_exact(dim) {
        out.push(p[0] + offset);
        out.extend_from_slice(&p[1..]);
    }
    out
}

/// Records for k = 1..=k_max plus the derived e_inf_hat and nu_star_hat.
///
/// Besides the per-k minimization, every split j + (k-j) contributes a
/// far-apart union of the two smaller records as a candidate, so the table
/// satisfies E_{j+k} <= E_j + E_k by construction (the union is a feasible
/// configuration, not a patched number).
///
/// `e_inf_override` replaces the computed min_k E_k/k as e_inf_hat. The
/// truncated minimum is an upper bound on the true e_inf (an infimum over
/// all k), so overriding with a trusted bulk lattice value is often the
/// only way to get a meaningful surcharge out of a short table.
pub fn build_table(
    v: &PairPotential,
    k_max: usize,
    restarts: usize,
    seed: u64,
    e_inf_override: Option<f64>,
) -> GroundStateTable {
    assert!(k_max >= 1, "need at least one record");
    let mut records: Vec<GroundStateRecord> = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let mut record = minimize_energy(v, k, restarts, mix_seed(seed, k as u64));
        for j in 1..k {
            let (a, b) = (&records[j - 1], &records[k - j - 1]);
            let union = far_union(v.dim(), v.range(), &a.coords, &b.coords);
            let candidate = make_record(v, k, union, record.restarts_used);
            debug_assert!(
                (candidate.energy - (a.energy + b.energy)).abs() < 1e-9,
                "far-apart union energy must be additive"
            );
            if candidate.energy < record.energy {
                record = candidate;
            }
        }
        records.push(record);
    }
    let computed_min = records
        .iter()
        .map(|r| r.energy / r.k as f64)
        .fold(f64::INFINITY, f64::min);
    let (e_inf_hat, e_inf_source) = match e_inf_override {
        Some(val) => (val, EInfSource::Override),
        None => (computed_min, EInfSource::ComputedMin),
    };
    let mut nu_star_hat = f64::INFINITY;
    let mut nu_star_argmin_k = 1;
    for r in &records {
        let surcharge = r.energy - r.k as f64 * e_inf_hat;
        if surcharge < nu_star_hat - 1e-12 {
            nu_star_hat = surcharge;
            nu_star_argmin_k = r.k;
        }
    }
    GroundStateTable {
        records,
        e_inf_hat,
        e_inf_source,
        nu_star_hat,
        nu_star_argmin_k,
        nu_star_at_boundary: nu_star_argmin_k == k_max,
    }
}

/// Check a record against claimed separation and diameter constants.
pub fn assumption_diagnostics(
    record: &GroundStateRecord,
    r_min_claim: f64,
    c_claim: f64,
) -> AssumptionReport {
    let diameter_bound = c_claim * (record.k as f64).powf(1.0 / record.dim as f64);
    AssumptionReport {
        k: record.k,
        min_pair_dist: record.min_pair_dist,
        r_min_claim,
        min_dist_ok: record.min_pair_dist >= r_min_claim,
        diameter: record.diameter,
        diameter_bound,
        c_claim,
        diameter_ok: record.diameter <= diameter_bound,
    }
}

/// CSV rendering of a table, one row per k.
pub fn table_to_csv(table: &GroundStateTable) -> String {
    let mut out = String::from("k,E_k,E_k_over_k,min_pair_dist,diameter\n");
    for r in &table.records {
        out.push_str(&format!(
            "{},{:.8e},{:.8e},{:.8e},{:.8e}\n",
            r.k,
            r.energy,
            r.energy / r.k as f64,
            r.min_pair_dist,
            r.diameter
        ));
    }
    out
}
