//! Deterministic result serialization.
//!
//! Every writer returns the full file contents as a string; byte-identical
//! output for identical inputs is part of the contract (reruns of a seeded
//! experiment must diff clean). CSV files start with `#`-prefixed comment
//! lines echoing the tool version, the seed, and the whole config as one
//! line of JSON; floats are printed as `{:.8e}`.

use std::fmt::Write as _;

use super::config::ExperimentConfig;
use super::decay::DecayReport;
use super::sweep::{ParamKind, SweepResult};
use crate::groundstate::GroundStateTable;
use crate::integrals::ClusterIntegralEstimate;
use crate::lattice::IsingSeries;
use crate::mcmc::MeasurementSeries;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

fn comment_header(config: &ExperimentConfig, seed: u64) -> String {
    let echo = serde_json::to_string(config).expect("config serializes");
    format!("# version = {VERSION}\n# seed = {seed}\n# config = {echo}\n")
}

fn fmt_f(x: f64) -> String {
    format!("{x:.8e}")
}

fn kind_str(kind: ParamKind) -> &'static str {
    match kind {
        ParamKind::Mu => "mu",
        ParamKind::Z => "z",
        ParamKind::N => "n",
    }
}

/// Sweep CSV: one row per grid point, fixed columns first, then the per-k
/// blocks `rho{k}_per,rho{k}_per_se` and `rho{k}_free,rho{k}_free_se` for
/// k = 1..k_max, then the audit column (semicolon-joined k values that
/// exceeded the decay bound; empty when the audit does not apply or
/// nothing exceeded). Failed points keep their row with NaN estimates.
pub fn sweep_csv(result: &SweepResult, config: &ExperimentConfig, seed: u64) -> String {
    let mut out = comment_header(config, seed);
    out.push_str(
        "beta,param_kind,param,status,rho,rho_se,theta,theta_se,\
         wrapped_mass,wrapped_mass_se,energy,energy_se,\
         ess_n,ess_energy,ess_wrapped_mass,acceptance_displace,mean_step_size",
    );
    for k in 1..=result.k_max {
        write!(out, ",rho{k}_per,rho{k}_per_se").unwrap();
    }
    for k in 1..=result.k_max {
        write!(out, ",rho{k}_free,rho{k}_free_se").unwrap();
    }
    out.push_str(",audit_exceeded_k\n");

    for p in &result.points {
        write!(
            out,
            "{},{},{},{}",
            fmt_f(p.beta),
            kind_str(p.param_kind),
            fmt_f(p.param),
            p.status.replace(',', ";")
        )
        .unwrap();
        match &p.estimates {
            Some(e) => {
                for x in [
                    e.rho,
                    e.rho_se,
                    e.theta,
                    e.theta_se,
                    e.wrapped_mass,
                    e.wrapped_mass_se,
                    e.energy,
                    e.energy_se,
                    e.ess_n,
                    e.ess_energy,
                    e.ess_wrapped_mass,
                    e.acceptance_displace,
                    e.mean_step_size,
                ] {
                    write!(out, ",{}", fmt_f(x)).unwrap();
                }
                for k in 0..result.k_max {
                    write!(
                        out,
                        ",{},{}",
                        fmt_f(e.rho_k_per[k]),
                        fmt_f(e.rho_k_per_se[k])
                    )
                    .unwrap();
                }
                for k in 0..result.k_max {
                    write!(
                        out,
                        ",{},{}",
                        fmt_f(e.rho_k_free[k]),
                        fmt_f(e.rho_k_free_se[k])
                    )
                    .unwrap();
                }
                let audit = e
                    .audit
                    .as_ref()
                    .map(|a| {
                        a.exceeded_k
                            .iter()
                            .map(|k| k.to_string())
                            .collect::<Vec<_>>()
                            .join(";")
                    })
                    .unwrap_or_default();
                writeln!(out, ",{audit}").unwrap();
            }
            None => {
                for _ in 0..(13 + 4 * result.k_max) {
                    out.push_str(",NaN");
                }
                out.push_str(",\n");
            }
        }
    }
    out
}

/// The whole sweep as pretty JSON with the config echoed alongside.
pub fn sweep_json(result: &SweepResult, config: &ExperimentConfig, seed: u64) -> String {
    let doc = serde_json::json!({
        "version": VERSION,
        "seed": seed,
        "config": config,
        "result": result,
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("sweep serializes");
    s.push('\n');
    s
}

/// Per-sample JSON-lines stream: a header record with the full parameter
/// echo, then one record per measurement.
pub fn series_jsonl(series: &MeasurementSeries, config: &ExperimentConfig) -> String {
    let header = serde_json::json!({
        "type": "header",
        "version": VERSION,
        "seed": series.seed,
        "beta": series.beta,
        "ensemble": series.ensemble,
        "connectivity_r": series.connectivity_r,
        "k_max": series.k_max,
        "final_step_size": series.final_step_size,
        "stats": series.stats,
        "ess": series.ess,
        "config": config,
    });
    let mut out = serde_json::to_string(&header).expect("header serializes");
    out.push('\n');
    for r in &series.records {
        let line = serde_json::json!({
            "type": "sample",
            "sweep": r.sweep,
            "n": r.n,
            "energy": r.energy,
            "rho": r.rho,
            "wrapped_mass": r.wrapped_mass,
            "rho_free": r.rho_free,
        });
        out.push_str(&serde_json::to_string(&line).expect("record serializes"));
        out.push('\n');
    }
    out
}

/// Empty-region decay CSV: one row per (grid point, shape); the fitted
/// rate columns repeat on every row of the same point.
pub fn decay_csv(reports: &[DecayReport], config: &ExperimentConfig, seed: u64) -> String {
    let mut out = comment_header(config, seed);
    out.push_str(
        "beta,param_kind,param,ell,cells_per_side,shape,size,p_hat,samples,censored,\
         alpha_hat,alpha_se,fit_points,alpha_d_config\n",
    );
    for rep in reports {
        for s in &rep.shapes {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                fmt_f(rep.beta),
                kind_str(rep.param_kind),
                fmt_f(rep.param),
                fmt_f(rep.ell),
                rep.cells_per_side,
                s.label,
                s.size,
                fmt_f(s.p_hat),
                s.samples,
                s.censored,
                fmt_f(rep.alpha_hat),
                fmt_f(rep.alpha_se),
                rep.fit_points,
                fmt_f(rep.alpha_d_config),
            )
            .unwrap();
        }
    }
    out
}

pub fn decay_json(reports: &[DecayReport], config: &ExperimentConfig, seed: u64) -> String {
    let doc = serde_json::json!({
        "version": VERSION,
        "seed": seed,
        "config": config,
        "reports": reports,
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("decay serializes");
    s.push('\n');
    s
}

/// Ground-state table CSV, config echo on top of the bare table.
pub fn groundstate_csv(table: &GroundStateTable, config: &ExperimentConfig, seed: u64) -> String {
    let mut out = comment_header(config, seed);
    out.push_str(&crate::groundstate::table_to_csv(table));
    out
}

pub fn groundstate_json(table: &GroundStateTable, config: &ExperimentConfig, seed: u64) -> String {
    let doc = serde_json::json!({
        "version": VERSION,
        "seed": seed,
        "config": config,
        "table": table,
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("table serializes");
    s.push('\n');
    s
}

/// Cluster-integral CSV: the estimate and the rigorous upper bound side by
/// side (bound NaN when no trusted e_inf is configured).
pub fn integrals_csv(
    rows: &[(ClusterIntegralEstimate, f64)],
    config: &ExperimentConfig,
    seed: u64,
) -> String {
    let mut out = comment_header(config, seed);
    out.push_str("beta,k,method,value,std_err,samples,zk_upper\n");
    for (est, upper) in rows {
        let method = match est.method {
            crate::integrals::EstimateMethod::ClosedForm => "closed_form",
            crate::integrals::EstimateMethod::HitOrMiss => "hit_or_miss",
        };
        writeln!(
            out,
            "{},{},{method},{},{},{},{}",
            fmt_f(est.beta),
            est.k,
            fmt_f(est.value),
            fmt_f(est.std_err),
            est.samples,
            fmt_f(*upper),
        )
        .unwrap();
    }
    out
}

/// Lattice-gas JSON-lines stream, same shape as the continuum one.
pub fn ising_jsonl(series: &IsingSeries, config: &ExperimentConfig) -> String {
    let header = serde_json::json!({
        "type": "header",
        "version": VERSION,
        "seed": series.seed,
        "n": series.n,
        "coupling": series.coupling,
        "field": series.field,
        "beta": series.beta,
        "config": config,
    });
    let mut out = serde_json::to_string(&header).expect("header serializes");
    out.push('\n');
    for r in &series.records {
        let line = serde_json::json!({
            "type": "sample",
            "sweep": r.sweep,
            "m": r.m,
            "energy": r.energy,
            "occupied_fraction": r.occupied_fraction,
            "wrapped": r.wrapped,
        });
        out.push_str(&serde_json::to_string(&line).expect("record serializes"));
        out.push('\n');
    }
    out
}
