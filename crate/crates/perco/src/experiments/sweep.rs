//! Grid sweeps: one Markov chain ensemble per (beta, parameter) point,
//! several independent chains per point, pooled into cluster-density and
//! percolation estimates with batch-means errors.
//!
//! Chains are seeded by (point index, chain index) only, so results do not
//! depend on thread scheduling and a sweep is reproducible from the config
//! alone.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{EnsembleChoice, ExperimentConfig};
use crate::integrals::decay_bound_rhs;
use crate::mcmc::{self, MeasurementSeries, RunOptions};
use crate::mix_seed;
use crate::stats::{self, SeriesSummary};

/// Which physical knob the sweep parameter is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamKind {
    Mu,
    Z,
    N,
}

/// Decay-bound audit of one grid point: the rhs of k rho_k <= rhs per k,
/// and which k exceeded it by more than three standard errors. Only
/// attached when the bound applies (mu grid, mu < e_inf, e_inf supplied).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DecayAudit {
    pub e_inf: f64,
    pub rhs: Vec<f64>,
    pub exceeded_k: Vec<usize>,
}

/// Pooled estimates of one grid point. Absent entirely when every chain
/// failed to initialize (see `SweepPoint::status`).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PointEstimates {
    /// Number density N / |box|.
    pub rho: f64,
    pub rho_se: f64,
    /// Wrapped fraction theta = wrapped mass / rho, batched ratio.
    pub theta: f64,
    pub theta_se: f64,
    pub wrapped_mass: f64,
    pub wrapped_mass_se: f64,
    pub energy: f64,
    pub energy_se: f64,
    /// Periodic-boundary cluster densities rho_k, k = 1..k_max.
    pub rho_k_per: Vec<f64>,
    pub rho_k_per_se: Vec<f64>,
    /// Free-boundary cluster densities.
    pub rho_k_free: Vec<f64>,
    pub rho_k_free_se: Vec<f64>,
    /// Effective sample sizes summed over chains.
    pub ess_n: f64,
    pub ess_energy: f64,
    pub ess_wrapped_mass: f64,
    /// Displacement acceptance rate over all chains.
    pub acceptance_displace: f64,
    pub mean_step_size: f64,
    pub audit: Option<DecayAudit>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SweepPoint {
    pub beta: f64,
    pub param_kind: ParamKind,
    pub param: f64,
    /// "ok", or "failed: ..." when chain initialization was impossible.
    pub status: String,
    pub estimates: Option<PointEstimates>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SweepResult {
    pub ensemble: EnsembleChoice,
    pub k_max: usize,
    pub chains: usize,
    pub points: Vec<SweepPoint>,
}

fn param_kind(config: &ExperimentConfig) -> ParamKind {
    if config.grid.mu.is_some() {
        ParamKind::Mu
    } else if config.grid.z.is_some() {
        ParamKind::Z
    } else {
        ParamKind::N
    }
}

fn param_values(config: &ExperimentConfig) -> Vec<f64> {
    if let Some(mu) = &config.grid.mu {
        mu.clone()
    } else if let Some(z) = &config.grid.z {
        z.clone()
    } else {
        config
            .grid
            .n
            .as_ref()
            .expect("validated at load")
            .iter()
            .map(|&n| n as f64)
            .collect()
    }
}

/// Beta-major grid enumeration; the on-disk row order.
pub fn grid_points(config: &ExperimentConfig) -> Vec<(f64, f64)> {
    let params = param_values(config);
    config
        .grid
        .beta
        .iter()
        .flat_map(|&beta| params.iter().map(move |&p| (beta, p)))
        .collect()
}

fn run_one_chain(
    config: &ExperimentConfig,
    beta: f64,
    param: f64,
    seed: u64,
) -> Result<MeasurementSeries, mcmc::McmcError> {
    let potential = config.potential();
    let cutoff = potential.range().max(config.grid.r);
    let mut state = mcmc::init_chain(
        config.periodic_box(),
        potential,
        beta,
        config.ensemble_at(beta, param),
        seed,
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
    Ok(mcmc::run(&mut state, &opts))
}

fn summarize_field(series: &[MeasurementSeries], f: impl Fn(&mcmc::MeasurementRecord) -> f64) -> SeriesSummary {
    let per_chain: Vec<SeriesSummary> = series
        .iter()
        .map(|s| stats::summarize(&s.records.iter().map(&f).collect::<Vec<f64>>()))
        .collect();
    stats::pool_chains(&per_chain)
}

fn aggregate_point(
    config: &ExperimentConfig,
    beta: f64,
    param: f64,
    series: &[MeasurementSeries],
) -> PointEstimates {
    let volume = config.periodic_box().volume();
    let k_max = config.grid.k_max;

    let rho = summarize_field(series, |r| r.n as f64 / volume);
    let wrapped = summarize_field(series, |r| r.wrapped_mass);
    let energy = summarize_field(series, |r| r.energy);

    let theta_chains: Vec<SeriesSummary> = series
        .iter()
        .map(|s| {
            let num: Vec<f64> = s.records.iter().map(|r| r.wrapped_mass).collect();
            let den: Vec<f64> = s.records.iter().map(|r| r.n as f64 / volume).collect();
            stats::batched_ratio(&num, &den)
        })
        .collect();
    let theta = stats::pool_chains(&theta_chains);

    let mut rho_k_per = Vec::with_capacity(k_max);
    let mut rho_k_per_se = Vec::with_capacity(k_max);
    let mut rho_k_free = Vec::with_capacity(k_max);
    let mut rho_k_free_se = Vec::with_capacity(k_max);
    for k in 0..k_max {
        let per = summarize_field(series, |r| r.rho[k]);
        rho_k_per.push(per.mean);
        rho_k_per_se.push(per.se);
        let free = summarize_field(series, |r| r.rho_free[k]);
        rho_k_free.push(free.mean);
        rho_k_free_se.push(free.se);
    }

    let (acc, prop) = series.iter().fold((0u64, 0u64), |(a, p), s| {
        (a + s.stats.displace.accepted, p + s.stats.displace.proposed)
    });
    let acceptance_displace = if prop == 0 { f64::NAN } else { acc as f64 / prop as f64 };
    let mean_step_size = stats::mean(
        &series.iter().map(|s| s.final_step_size).collect::<Vec<f64>>(),
    );

    // The decay bound holds for mu < e_inf; audit it whenever a trusted
    // e_inf is supplied and the sweep is over mu in that regime.
    let audit = match (param_kind(config), config.constants.e_inf_override) {
        (ParamKind::Mu, Some(e_inf)) if param < e_inf => {
            let dim = config.potential.dimension;
            let rhs: Vec<f64> = (1..=k_max)
                .map(|k| decay_bound_rhs(k, beta, param, e_inf, config.grid.r, dim))
                .collect();
            let exceeded_k: Vec<usize> = (1..=k_max)
                .filter(|&k| {
                    let lhs = k as f64 * rho_k_per[k - 1];
                    let se = k as f64 * rho_k_per_se[k - 1];
                    lhs - rhs[k - 1] > 3.0 * se
                })
                .collect();
            Some(DecayAudit {
                e_inf,
                rhs,
                exceeded_k,
            })
        }
        _ => None,
    };

    PointEstimates {
        rho: rho.mean,
        rho_se: rho.se,
        theta: theta.mean,
        theta_se: theta.se,
        wrapped_mass: wrapped.mean,
        wrapped_mass_se: wrapped.se,
        energy: energy.mean,
        energy_se: energy.se,
        rho_k_per,
        rho_k_per_se,
        rho_k_free,
        rho_k_free_se,
        ess_n: series.iter().map(|s| s.ess.n).sum(),
        ess_energy: series.iter().map(|s| s.ess.energy).sum(),
        ess_wrapped_mass: series.iter().map(|s| s.ess.wrapped_mass).sum(),
        acceptance_displace,
        mean_step_size,
        audit,
    }
}

/// Run the whole grid. Chains run in parallel; estimates and row order are
/// independent of the thread count. Points whose chains cannot even be
/// initialized (canonical over-packing) are reported with a failure status
/// instead of aborting the sweep.
pub fn run_sweep(config: &ExperimentConfig) -> SweepResult {
    let points = grid_points(config);
    let chains = config.mcmc.chains;
    let kind = param_kind(config);

    let tasks: Vec<Result<MeasurementSeries, mcmc::McmcError>> = (0..points.len() * chains)
        .into_par_iter()
        .map(|t| {
            let (beta, param) = points[t / chains];
            run_one_chain(config, beta, param, mix_seed(config.mcmc.seed, t as u64))
        })
        .collect();

    let out = points
        .iter()
        .enumerate()
        .map(|(pi, &(beta, param))| {
            let slot = &tasks[pi * chains..(pi + 1) * chains];
            match slot.iter().find_map(|r| r.as_ref().err()) {
                Some(err) => SweepPoint {
                    beta,
                    param_kind: kind,
                    param,
                    status: format!("failed: {err}"),
                    estimates: None,
                },
                None => {
                    let series: Vec<MeasurementSeries> = slot
                        .iter()
                        .map(|r| r.as_ref().expect("no failures in this slot").clone())
                        .collect();
                    SweepPoint {
                        beta,
                        param_kind: kind,
                        param,
                        status: "ok".into(),
                        estimates: Some(aggregate_point(config, beta, param, &series)),
                    }
                }
            }
        })
        .collect();

    SweepResult {
        ensemble: config.grid.ensemble,
        k_max: config.grid.k_max,
        chains,
        points: out,
    }
}

/// Grand-canonical sweep over an activity-like grid (mu or z).
pub fn sweep_mu(config: &ExperimentConfig) -> SweepResult {
    assert_eq!(
        config.grid.ensemble,
        EnsembleChoice::GrandCanonical,
        "sweep_mu runs grand-canonical grids"
    );
    run_sweep(config)
}

/// Canonical sweep over a particle-number grid.
pub fn sweep_canonical(config: &ExperimentConfig) -> SweepResult {
    assert_eq!(
        config.grid.ensemble,
        EnsembleChoice::Canonical,
        "sweep_canonical runs canonical grids"
    );
    run_sweep(config)
}
