//! Sampling and bound-evaluation toolkit for continuum percolation in
//! Gibbsian point processes with a hard core and an attractive finite-range
//! tail.
//!
//! The crate has three layers:
//!
//! * model primitives: [`potential`], [`geometry`], [`cluster`];
//! * samplers and solvers: [`mcmc`], [`groundstate`], [`lattice`];
//! * numerics on top: [`integrals`] (cluster partition functions and the
//!   rigorous bound formulas) and [`experiments`] (config-driven sweeps,
//!   percolation diagnostics and report files).
//!
//! Everything downstream of a seed is deterministic: identical configs and
//! seeds produce byte-identical output files.

pub mod cluster;
pub mod experiments;
pub mod geometry;
pub mod groundstate;
pub mod integrals;
pub mod lattice;
pub mod mcmc;
pub mod potential;
pub mod stats;

mod quad;

/// SplitMix64 step, used to derive independent stream seeds from a base seed.
///
/// Standard constants from Steele et al.; the point is only that distinct
/// (base, index) pairs map to well-separated seeds deterministically.
pub fn mix_seed(base: u64, index: u64) -> u64 {
    let mut z = base
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
