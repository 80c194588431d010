//! Empty-region scaling: how fast P(region of c cells is empty) decays in
//! the region size. In the percolating regime the decay rate per cell is
//! what the contour-counting argument needs, so the fitted slope is the
//! empirical counterpart of the alpha_d constant.
//!
//! The box is cut into an exact grid of cells of side ell. A fixed family
//! of connected shapes (straight segments of every size, plus an L-shape
//! per size from 3 up) is slid over all anchor translations of every
//! recorded sample, and log P-hat is regressed on the cell count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::config::ExperimentConfig;
use super::sweep::{grid_points, ParamKind};
use crate::mcmc::{self, RunOptions};
use crate::mix_seed;
use crate::stats;

/// Seed stream tag: keeps decay chains off the sweep chains' streams.
const DECAY_STREAM: u64 = 0x00DE_CA00_0000_0000;

#[derive(Debug, Error)]
pub enum DecayError {
    #[error("config has no [decay] section")]
    MissingSection,
    #[error("chain at (beta={beta}, param={param}) failed: {message}")]
    ChainFailed {
        beta: f64,
        param: f64,
        message: String,
    },
    #[error("fewer than two region sizes observed empty; cannot fit a decay rate")]
    Degenerate,
}

/// One shape of the fixed region family, as cell offsets.
#[derive(Debug, Clone)]
struct Shape {
    label: String,
    size: usize,
    cells: Vec<Vec<usize>>,
}

/// Straight segments of sizes 1..=n_max along axis 0; for dim >= 2 also an
/// L-shape per size >= 3 (a segment of size-1 cells with the last cell's
/// neighbor along axis 1 attached).
fn shape_family(dim: usize, n_max: usize) -> Vec<Shape> {
    let mut shapes = Vec::new();
    for s in 1..=n_max {
        let cells: Vec<Vec<usize>> = (0..s)
            .map(|i| {
                let mut c = vec![0; dim];
                c[0] = i;
                c
            })
            .collect();
        shapes.push(Shape {
            label: format!("segment_{s}"),
            size: s,
            cells,
        });
    }
    if dim >= 2 {
        for s in 3..=n_max {
            let mut cells: Vec<Vec<usize>> = (0..s - 1)
                .map(|i| {
                    let mut c = vec![0; dim];
                    c[0] = i;
                    c
                })
                .collect();
            let mut bend = vec![0; dim];
            bend[0] = s - 2;
            bend[1] = 1;
            cells.push(bend);
            shapes.push(Shape {
                label: format!("lshape_{s}"),
                size: s,
                cells,
            });
        }
    }
    shapes
}

/// Per-(shape, batch) accumulator of one chain: the sum over samples of
/// the fraction of anchors at which the region was empty.
struct ChainAccum {
    dim: usize,
    m: usize,
    ell: f64,
    n_batches: usize,
    total_samples: usize,
    seen: usize,
    occupied: Vec<bool>,
    /// weight[shape][batch] = sum of per-sample empty-anchor fractions.
    weight: Vec<Vec<f64>>,
    /// samples[batch]
    samples: Vec<usize>,
    shapes: Vec<Shape>,
}

impl ChainAccum {
    fn new(dim: usize, m: usize, ell: f64, shapes: Vec<Shape>, total_samples: usize) -> Self {
        let n_batches = (total_samples / 2).clamp(1, 10);
        ChainAccum {
            dim,
            m,
            ell,
            n_batches,
            total_samples,
            seen: 0,
            occupied: vec![false; m.pow(dim as u32)],
            weight: vec![vec![0.0; n_batches]; shapes.len()],
            samples: vec![0; n_batches],
            shapes,
        }
    }

    fn record(&mut self, coords: &[f64]) {
        let batch = (self.seen * self.n_batches / self.total_samples.max(1))
            .min(self.n_batches - 1);
        self.seen += 1;
        self.samples[batch] += 1;

        self.occupied.fill(false);
        let d = self.dim;
        for p in coords.chunks_exact(d) {
            let mut idx = 0usize;
            for &x in p {
                // Coordinates live in [0, L); the min guards the float
                // edge x/ell == m.
                let c = ((x / self.ell) as usize).min(self.m - 1);
                idx = idx * self.m + c;
            }
            self.occupied[idx] = true;
        }

        let anchors = self.m.pow(d as u32);
        let mut anchor = vec![0usize; d];
        for (si, shape) in self.shapes.iter().enumerate() {
            let mut empties = 0usize;
            anchor.fill(0);
            loop {
                let empty = shape.cells.iter().all(|cell| {
                    let mut idx = 0usize;
                    for a in 0..d {
                        idx = idx * self.m + (anchor[a] + cell[a]) % self.m;
                    }
                    !self.occupied[idx]
                });
                empties += usize::from(empty);
                // Next anchor (mixed-radix odometer).
                let mut a = d;
                loop {
                    if a == 0 {
                        break;
                    }
                    a -= 1;
                    anchor[a] += 1;
                    if anchor[a] < self.m {
                        break;
                    }
                    anchor[a] = 0;
                }
                if anchor.iter().all(|&c| c == 0) {
                    break;
                }
            }
            self.weight[si][batch] += empties as f64 / anchors as f64;
        }
    }
}

/// Pooled occupancy statistics of one shape.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ShapeStat {
    pub label: String,
    /// Cell count of the region.
    pub size: usize,
    /// Empirical P(region empty), pooled over chains and anchors.
    pub p_hat: f64,
    pub samples: usize,
    /// No empty occurrence was ever observed; the point cannot enter the
    /// log fit and is reported as censored instead.
    pub censored: bool,
}

/// The decay fit at one grid point.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DecayReport {
    pub beta: f64,
    pub param_kind: ParamKind,
    pub param: f64,
    pub ell: f64,
    pub cells_per_side: usize,
    pub n_max: usize,
    pub shapes: Vec<ShapeStat>,
    /// Decay rate per cell: minus the OLS slope of log p_hat on size.
    pub alpha_hat: f64,
    /// Spread of per-batch refits.
    pub alpha_se: f64,
    pub fit_points: usize,
    /// The alpha_d the config carries, echoed for side-by-side reading.
    pub alpha_d_config: f64,
}

fn fit_alpha(sizes: &[f64], log_ps: &[f64]) -> Option<f64> {
    if sizes.len() < 2 {
        return None;
    }
    let first = sizes[0];
    if sizes.iter().all(|&s| s == first) {
        return None;
    }
    let (slope, _) = stats::ols(sizes, log_ps);
    Some(-slope)
}

/// Run the grid and fit the empty-region decay rate at every point.
pub fn empty_region_decay(config: &ExperimentConfig) -> Result<Vec<DecayReport>, DecayError> {
    let decay = config.decay.as_ref().ok_or(DecayError::MissingSection)?;
    let dim = config.potential.dimension;
    let m = (config.bbox.side / decay.ell).round() as usize;
    let shapes = shape_family(dim, decay.n_max);
    let points = grid_points(config);
    let chains = config.mcmc.chains;
    let kind = if config.grid.mu.is_some() {
        ParamKind::Mu
    } else if config.grid.z.is_some() {
        ParamKind::Z
    } else {
        ParamKind::N
    };

    let accums: Vec<Result<ChainAccum, mcmc::McmcError>> = (0..points.len() * chains)
        .into_par_iter()
        .map(|t| {
            let (beta, param) = points[t / chains];
            let potential = config.potential();
            let cutoff = potential.range().max(config.grid.r);
            let mut state = mcmc::init_chain(
                config.periodic_box(),
                potential,
                beta,
                config.ensemble_at(beta, param),
                mix_seed(config.mcmc.seed, DECAY_STREAM | t as u64),
                config.mcmc.init.into(),
                cutoff,
            )?;
            let opts = RunOptions {
                sweeps: config.mcmc.sweeps,
                burn_in: config.mcmc.burn_in,
                thin: config.mcmc.thin,
                connectivity_r: config.grid.r,
                k_max: config.grid.k_max,
                tune: config.mcmc.tune,
            };
            let total = (config.mcmc.sweeps / config.mcmc.thin.max(1)) as usize;
            let mut accum =
                ChainAccum::new(dim, m, decay.ell, shapes.clone(), total);
            mcmc::run_with(&mut state, &opts, |st| accum.record(st.config.coords()));
            Ok(accum)
        })
        .collect();

    points
        .iter()
        .enumerate()
        .map(|(pi, &(beta, param))| {
            let slot = &accums[pi * chains..(pi + 1) * chains];
            if let Some(err) = slot.iter().find_map(|r| r.as_ref().err()) {
                return Err(DecayError::ChainFailed {
                    beta,
                    param,
                    message: err.to_string(),
                });
            }
            let slot: Vec<&ChainAccum> = slot
                .iter()
                .map(|r| r.as_ref().expect("no failures in this slot"))
                .collect();

            // Pooled p_hat per shape.
            let total_samples: usize = slot.iter().map(|a| a.seen).sum();
            let mut shape_stats = Vec::with_capacity(shapes.len());
            for (si, shape) in shapes.iter().enumerate() {
                let weight: f64 = slot.iter().map(|a| a.weight[si].iter().sum::<f64>()).sum();
                let p_hat = if total_samples == 0 {
                    f64::NAN
                } else {
                    weight / total_samples as f64
                };
                // Zero counts and the NaN of an empty run both censor.
                let observed = p_hat > 0.0;
                shape_stats.push(ShapeStat {
                    label: shape.label.clone(),
                    size: shape.size,
                    p_hat,
                    samples: total_samples,
                    censored: !observed,
                });
            }

            // Overall fit on the uncensored points.
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for s in &shape_stats {
                if !s.censored {
                    xs.push(s.size as f64);
                    ys.push(s.p_hat.ln());
                }
            }
            let alpha_hat = fit_alpha(&xs, &ys).ok_or(DecayError::Degenerate)?;

            // Batch refits across all chains for the error bar; batches
            // where censoring leaves fewer than two distinct sizes are
            // dropped.
            let mut alphas = Vec::new();
            for a in slot.iter() {
                for b in 0..a.n_batches {
                    if a.samples[b] == 0 {
                        continue;
                    }
                    let mut bx = Vec::new();
                    let mut by = Vec::new();
                    for (si, shape) in shapes.iter().enumerate() {
                        let p = a.weight[si][b] / a.samples[b] as f64;
                        if p > 0.0 {
                            bx.push(shape.size as f64);
                            by.push(p.ln());
                        }
                    }
                    if let Some(alpha) = fit_alpha(&bx, &by) {
                        alphas.push(alpha);
                    }
                }
            }
            let alpha_se = if alphas.len() >= 2 {
                (stats::variance(&alphas) / alphas.len() as f64).sqrt()
            } else {
                f64::NAN
            };

            Ok(DecayReport {
                beta,
                param_kind: kind,
                param,
                ell: decay.ell,
                cells_per_side: m,
                n_max: decay.n_max,
                shapes: shape_stats,
                alpha_hat,
                alpha_se,
                fit_points: xs.len(),
                alpha_d_config: config.constants.alpha_d,
            })
        })
        .collect()
}
