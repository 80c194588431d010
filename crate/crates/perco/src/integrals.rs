//! Cluster partition functions and the explicit threshold bounds.
//!
//! Z_k^cl(beta) is the k-point cluster partition function with one point
//! pinned at the origin:
//!
//! Z_k^cl = (1/k!) \int dx_2 .. dx_k e^{-beta U(0, x_2, .., x_k)}
//!          1{connected at radius R}.
//!
//! k = 1 is the empty product, k = 2 a radial closed form, and 3 <= k <= 5
//! plain hit-or-miss Monte Carlo over the bounding cube. Crude but unbiased;
//! anything fancier trades auditability for variance we do not need at
//! these k. The bound calculators below are straight arithmetic on their
//! formulas and are cross-checked to 1e-12 in tests.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::geometry::ball_volume;
use crate::potential::{total_energy, PairPotential, WellShape};
use crate::quad;

#[derive(Debug, Error, PartialEq)]
pub enum IntegralError {
    #[error("cluster integrals are implemented for 1 <= k <= 5, got {0}")]
    UnsupportedK(usize),
    #[error("connectivity radius {r} must cover the interaction range {r1}")]
    RadiusBelowRange { r: f64, r1: f64 },
    #[error("need at least one sample")]
    NoSamples,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateMethod {
    ClosedForm,
    HitOrMiss,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterIntegralEstimate {
    pub k: usize,
    pub beta: f64,
    pub value: f64,
    /// Zero exactly when the method is closed form.
    pub std_err: f64,
    pub samples: u64,
    pub method: EstimateMethod,
}

fn check_radius(v: &PairPotential, r: f64) -> Result<(), IntegralError> {
    if r < v.range() {
        return Err(IntegralError::RadiusBelowRange { r, r1: v.range() });
    }
    Ok(())
}

/// \int_0^R e^{-beta v(r)} r^{d-1} dr. The hard core contributes zero by
/// convention regardless of beta (even beta = 0, where the literal
/// exponent would be NaN). Square wells use per-piece closed forms because
/// the integrand jumps at the piece boundaries; smooth wells have a
/// continuous integrand and use knot-split Simpson.
fn boltzmann_radial_integral(v: &PairPotential, beta: f64, r: f64) -> f64 {
    let d = v.dim() as i32;
    let df = v.dim() as f64;
    let r_hc = v.hard_core();
    if !v.has_tail() {
        return (r.powi(d) - r_hc.powi(d)) / df;
    }
    let r1 = v.range();
    match v.shape() {
        WellShape::SquareWell { depth } => {
            (beta * depth).exp() * (r1.powi(d) - r_hc.powi(d)) / df
                + (r.powi(d) - r1.powi(d)) / df
        }
        WellShape::SmoothWell { .. } => {
            let mut knots = v.knots();
            knots.push(r);
            quad::simpson_knotted(
                |x| (-beta * v.evaluate(x)).exp() * x.powi(d - 1),
                &knots,
                256,
            )
        }
    }
}

/// Connectivity of a small free-space configuration under the closed rule
/// 0 < |x - y| <= r.
fn connected_at(coords: &[f64], dim: usize, r: f64) -> bool {
    let k = coords.len() / dim;
    if k <= 1 {
        return true;
    }
    let r2 = r * r;
    let mut seen = vec![false; k];
    let mut stack = vec![0usize];
    seen[0] = true;
    let mut reached = 1;
    while let Some(i) = stack.pop() {
        for j in 0..k {
            if seen[j] {
                continue;
            }
            let d2: f64 = (0..dim)
                .map(|c| {
                    let dx = coords[i * dim + c] - coords[j * dim + c];
                    dx * dx
                })
                .sum();
            if d2 > 0.0 && d2 <= r2 {
                seen[j] = true;
                reached += 1;
                stack.push(j);
            }
        }
    }
    reached == k
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Hit-or-miss estimate over the bounding cube for 2 <= k <= 5. The cube
/// [-(k-1)R, (k-1)R]^{d(k-1)} contains every connected configuration with
/// one point at the origin, so the indicator truncates nothing.
pub fn zk_hit_or_miss(
    v: &PairPotential,
    k: usize,
    beta: f64,
    r: f64,
    samples: u64,
    seed: u64,
) -> Result<ClusterIntegralEstimate, IntegralError> {
    if !(2..=5).contains(&k) {
        return Err(IntegralError::UnsupportedK(k));
    }
    check_radius(v, r)?;
    if samples == 0 {
        return Err(IntegralError::NoSamples);
    }
    let d = v.dim();
    let half = (k - 1) as f64 * r;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coords = vec![0.0f64; k * d];
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..samples {
        for x in coords.iter_mut().skip(d) {
            *x = rng.random_range(-half..half);
        }
        let u = total_energy(v, &coords);
        // Overlap first: at beta = 0 the exponent of +inf would be NaN.
        let w = if u == f64::INFINITY || !connected_at(&coords, d, r) {
            0.0
        } else {
            (-beta * u).exp()
        };
        sum += w;
        sum_sq += w * w;
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0) / (n - 1.0).max(1.0) * n;
    let scale = (2.0 * half).powi((d * (k - 1)) as i32) / factorial(k);
    Ok(ClusterIntegralEstimate {
        k,
        beta,
        value: scale * mean,
        std_err: scale * (var / n).sqrt(),
        samples,
        method: EstimateMethod::HitOrMiss,
    })
}

/// Z_k^cl(beta) at connectivity radius `r` (>= the interaction range).
/// k = 1 and k = 2 are exact; 3 <= k <= 5 Monte Carlo; larger k rejected.
pub fn zk_cluster_integral(
    v: &PairPotential,
    k: usize,
    beta: f64,
    r: f64,
    samples: u64,
    seed: u64,
) -> Result<ClusterIntegralEstimate, IntegralError> {
    match k {
        0 | 6.. => Err(IntegralError::UnsupportedK(k)),
        1 => Ok(ClusterIntegralEstimate {
            k: 1,
            beta,
            value: 1.0,
            std_err: 0.0,
            samples: 0,
            method: EstimateMethod::ClosedForm,
        }),
        2 => {
            check_radius(v, r)?;
            let d = v.dim() as f64;
            let surface = d * ball_volume(v.dim(), 1.0);
            Ok(ClusterIntegralEstimate {
                k: 2,
                beta,
                value: 0.5 * surface * boltzmann_radial_integral(v, beta, r),
                std_err: 0.0,
                samples: 0,
                method: EstimateMethod::ClosedForm,
            })
        }
        _ => zk_hit_or_miss(v, k, beta, r, samples, seed),
    }
}

/// e^{-beta k e_inf} e^k |B(0,R)|^{k-1}.
pub fn zk_upper_bound(k: usize, beta: f64, e_inf: f64, r: f64, d: usize) -> f64 {
    (-beta * k as f64 * e_inf).exp()
        * (k as f64).exp()
        * ball_volume(d, r).powi(k as i32 - 1)
}

/// exp(beta e_inf) / (beta |||v|||), a lower bound on the Mayer radius.
pub fn mayer_radius_lb(beta: f64, e_inf: f64, triple_norm: f64) -> f64 {
    assert!(beta > 0.0, "beta must be positive, got {beta}");
    assert!(
        triple_norm > 0.0,
        "the potential norm must be positive, got {triple_norm}"
    );
    (beta * e_inf).exp() / (beta * triple_norm)
}

/// k e^k |B(0,R)|^{k-1} exp(-beta k (e_inf - mu)): the cluster-density
/// decay rate at chemical potential mu.
pub fn decay_bound_rhs(k: usize, beta: f64, mu: f64, e_inf: f64, r: f64, d: usize) -> f64 {
    k as f64
        * (k as f64).exp()
        * ball_volume(d, r).powi(k as i32 - 1)
        * (-beta * k as f64 * (e_inf - mu)).exp()
}

/// -m + delta - log|B(0,eps)| / beta + alpha_d / beta: the chemical
/// potential beyond which percolation is guaranteed.
pub fn mu_plus_rhs(m: f64, delta: f64, eps: f64, beta: f64, alpha_d: f64, d: usize) -> f64 {
    assert!(eps > 0.0, "eps must be positive, got {eps}");
    assert!(alpha_d > 0.0, "alpha_d must be positive, got {alpha_d}");
    assert!(beta > 0.0, "beta must be positive, got {beta}");
    -m + delta - ball_volume(d, eps).ln() / beta + alpha_d / beta
}

/// Largest distance between particles in adjacent mesh cubes of side ell.
pub fn adjacency_distance(ell: f64, d: usize) -> f64 {
    assert!(ell > 0.0, "cube side must be positive, got {ell}");
    ((d + 3) as f64).sqrt() * ell
}

/// Flat bundle of every bound at one parameter point, inputs echoed.
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub dim: usize,
    pub beta: f64,
    pub mu: f64,
    pub e_inf: f64,
    pub r: f64,
    pub triple_norm: f64,
    pub tail_depth_m: f64,
    pub delta: f64,
    pub eps: f64,
    pub alpha_d: f64,
    pub ell: f64,
    pub k_max: usize,
    /// zk_upper[k - 1] is the bound for k.
    pub zk_upper: Vec<f64>,
    pub mayer_radius_lb: f64,
    /// decay_rhs[k - 1] is the right-hand side for k.
    pub decay_rhs: Vec<f64>,
    pub mu_plus_rhs: f64,
    pub adjacency_distance: f64,
}

pub struct BoundInputs {
    pub dim: usize,
    pub beta: f64,
    pub mu: f64,
    pub e_inf: f64,
    pub r: f64,
    pub triple_norm: f64,
    pub tail_depth_m: f64,
    pub delta: f64,
    pub eps: f64,
    pub alpha_d: f64,
    pub ell: f64,
    pub k_max: usize,
}

pub fn bound_report(inputs: &BoundInputs) -> BoundReport {
    let ks = 1..=inputs.k_max;
    let report = BoundReport {
        dim: inputs.dim,
        beta: inputs.beta,
        mu: inputs.mu,
        e_inf: inputs.e_inf,
        r: inputs.r,
        triple_norm: inputs.triple_norm,
        tail_depth_m: inputs.tail_depth_m,
        delta: inputs.delta,
        eps: inputs.eps,
        alpha_d: inputs.alpha_d,
        ell: inputs.ell,
        k_max: inputs.k_max,
        zk_upper: ks
            .clone()
            .map(|k| zk_upper_bound(k, inputs.beta, inputs.e_inf, inputs.r, inputs.dim))
            .collect(),
        mayer_radius_lb: mayer_radius_lb(inputs.beta, inputs.e_inf, inputs.triple_norm),
        decay_rhs: ks
            .map(|k| {
                decay_bound_rhs(k, inputs.beta, inputs.mu, inputs.e_inf, inputs.r, inputs.dim)
            })
            .collect(),
        mu_plus_rhs: mu_plus_rhs(
            inputs.tail_depth_m,
            inputs.delta,
            inputs.eps,
            inputs.beta,
            inputs.alpha_d,
            inputs.dim,
        ),
        adjacency_distance: adjacency_distance(inputs.ell, inputs.dim),
    };
    let all = report
        .zk_upper
        .iter()
        .chain(&report.decay_rhs)
        .chain([&report.mayer_radius_lb, &report.adjacency_distance]);
    for x in all {
        assert!(x.is_finite() && *x > 0.0, "bound left its domain: {x}");
    }
    assert!(report.mu_plus_rhs.is_finite());
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn p0() -> PairPotential {
        PairPotential::new(2, 1.0, 1.0, 1.5, WellShape::SquareWell { depth: 1.0 }).unwrap()
    }

    #[test]
    fn z1_is_exactly_one() {
        let est = zk_cluster_integral(&p0(), 1, 3.7, 1.5, 10, 1).unwrap();
        assert_eq!(est.value, 1.0);
        assert_eq!(est.std_err, 0.0);
        assert_eq!(est.method, EstimateMethod::ClosedForm);
    }

    #[test]
    fn z2_square_well_closed_form() {
        // (1/2) * e^beta * pi (r1^2 - r_hc^2) at R = r1.
        let est = zk_cluster_integral(&p0(), 2, 1.0, 1.5, 0, 0).unwrap();
        let want = 0.625 * PI * 1f64.exp();
        assert!(
            (est.value - want).abs() < 1e-12 * want,
            "{} vs {want}",
            est.value
        );
        assert_eq!(est.std_err, 0.0);
        // R beyond the range adds the non-interacting annulus.
        let wide = zk_cluster_integral(&p0(), 2, 1.0, 2.0, 0, 0).unwrap();
        let want_wide = want + 0.5 * PI * (4.0 - 2.25);
        assert!((wide.value - want_wide).abs() < 1e-12 * want_wide);
        // beta = 0 with a hard core: annulus area only, no NaN.
        let cold = zk_cluster_integral(&p0(), 2, 0.0, 1.5, 0, 0).unwrap();
        assert!((cold.value - 0.625 * PI).abs() < 1e-12);
    }

    #[test]
    fn z2_ideal_gas_is_half_ball() {
        let v = PairPotential::ideal_gas(2);
        let est = zk_cluster_integral(&v, 2, 1.0, 1.5, 0, 0).unwrap();
        assert!((est.value - 0.5 * PI * 2.25).abs() < 1e-12);
    }

    #[test]
    fn z2_smooth_well_matches_brute_force() {
        let v = PairPotential::new(
            2,
            1.0,
            1.1,
            1.5,
            WellShape::SmoothWell {
                depth: 2.0,
                inner_width: 0.1,
            },
        )
        .unwrap();
        let beta = 0.7;
        let est = zk_cluster_integral(&v, 2, beta, 1.8, 0, 0).unwrap();
        // Midpoint-rule oracle on the radial integral.
        let n = 400_000;
        let (a, b) = (1.0, 1.8);
        let h = (b - a) / n as f64;
        let mut acc = 0.0;
        for i in 0..n {
            let r: f64 = a + (i as f64 + 0.5) * h;
            acc += (-beta * v.evaluate(r)).exp() * r * h;
        }
        let want = 0.5 * 2.0 * PI * acc;
        assert!(
            (est.value - want).abs() < 1e-6 * want,
            "{} vs {want}",
            est.value
        );
    }

    #[test]
    fn z2_hit_or_miss_agrees_with_closed_form() {
        let exact = zk_cluster_integral(&p0(), 2, 1.0, 1.5, 0, 0).unwrap();
        let mc = zk_hit_or_miss(&p0(), 2, 1.0, 1.5, 200_000, 77).unwrap();
        assert!(mc.std_err > 0.0);
        assert_eq!(mc.method, EstimateMethod::HitOrMiss);
        assert!(
            (mc.value - exact.value).abs() < 3.0 * mc.std_err,
            "{} vs {} (se {})",
            mc.value,
            exact.value,
            mc.std_err
        );
    }

    #[test]
    fn z3_matches_grid_quadrature_oracle() {
        // Deterministic midpoint quadrature over [-3,3]^4 at h = 0.1, with
        // an independent inline connectivity rule (a 3-vertex graph is
        // connected iff it has >= 2 edges). The indicator makes the
        // integrand discontinuous, so the rule converges at O(h): refining
        // h from 0.1 to 0.05 moves the oracle by 3.5% relative, and the
        // tolerance pads for that measured bias.
        let v = p0();
        let beta = 0.5;
        let r = 1.5;
        let n = 60;
        let h = 6.0 / n as f64;
        let mut acc = 0.0;
        for i2 in 0..n {
            let x2 = -3.0 + (i2 as f64 + 0.5) * h;
            for j2 in 0..n {
                let y2 = -3.0 + (j2 as f64 + 0.5) * h;
                let d12 = (x2 * x2 + y2 * y2).sqrt();
                let v12 = v.evaluate(d12);
                for i3 in 0..n {
                    let x3 = -3.0 + (i3 as f64 + 0.5) * h;
                    for j3 in 0..n {
                        let y3 = -3.0 + (j3 as f64 + 0.5) * h;
                        let d13 = (x3 * x3 + y3 * y3).sqrt();
                        let d23 = ((x3 - x2) * (x3 - x2) + (y3 - y2) * (y3 - y2)).sqrt();
                        let edges = (d12 > 0.0 && d12 <= r) as u32
                            + (d13 > 0.0 && d13 <= r) as u32
                            + (d23 > 0.0 && d23 <= r) as u32;
                        if edges < 2 {
                            continue;
                        }
                        let u = v12 + v.evaluate(d13) + v.evaluate(d23);
                        if u == f64::INFINITY {
                            continue;
                        }
                        acc += (-beta * u).exp();
                    }
                }
            }
        }
        let oracle = acc * h.powi(4) / 6.0;
        let mc = zk_cluster_integral(&v, 3, beta, r, 400_000, 4242).unwrap();
        assert_eq!(mc.method, EstimateMethod::HitOrMiss);
        let pad = 0.04 * oracle;
        assert!(
            (mc.value - oracle).abs() < 3.0 * mc.std_err + pad,
            "mc {} +- {} vs oracle {oracle}",
            mc.value,
            mc.std_err
        );
    }

    #[test]
    fn zk_rejects_out_of_scope_inputs() {
        let v = p0();
        assert_eq!(
            zk_cluster_integral(&v, 0, 1.0, 1.5, 10, 0),
            Err(IntegralError::UnsupportedK(0))
        );
        assert_eq!(
            zk_cluster_integral(&v, 6, 1.0, 1.5, 10, 0),
            Err(IntegralError::UnsupportedK(6))
        );
        assert!(matches!(
            zk_cluster_integral(&v, 2, 1.0, 1.2, 10, 0),
            Err(IntegralError::RadiusBelowRange { .. })
        ));
        assert_eq!(
            zk_hit_or_miss(&v, 3, 1.0, 1.5, 0, 0),
            Err(IntegralError::NoSamples)
        );
    }

    #[test]
    fn estimates_sit_below_the_upper_bound() {
        // With e_inf = -3 (a bound on the true per-particle ground energy
        // at these k), the explicit inequality must hold with slack.
        let v = p0();
        for k in 1..=4usize {
            for beta in [0.5, 1.0, 2.0] {
                let est = zk_cluster_integral(&v, k, beta, 1.5, 60_000, 9 + k as u64).unwrap();
                let ub = zk_upper_bound(k, beta, -3.0, 1.5, 2);
                assert!(
                    est.value <= ub + 3.0 * est.std_err,
                    "k = {k}, beta = {beta}: {} vs {ub}",
                    est.value
                );
            }
        }
    }

    #[test]
    fn zk_upper_bound_arithmetic() {
        let got = zk_upper_bound(2, 1.0, -3.0, 1.5, 2);
        let want = 8f64.exp() * 2.25 * PI;
        assert!((got - want).abs() < 1e-12 * want, "{got}");
        // k = 1: no volume factor, still above Z_1 = 1 for e_inf <= 0.
        assert!((zk_upper_bound(1, 1.0, -3.0, 1.5, 2) - 4f64.exp()).abs() < 1e-12);
        assert!(zk_upper_bound(1, 2.0, 0.0, 1.5, 2) >= 1.0);
        // beta = 0 degenerate case.
        assert!((zk_upper_bound(2, 0.0, 0.0, 1.5, 2) - 2f64.exp() * 2.25 * PI).abs() < 1e-12);
    }

    #[test]
    fn mayer_radius_lb_arithmetic_and_asymptotics() {
        assert!((mayer_radius_lb(1.0, 0.0, 1.0) - 1.0).abs() < 1e-15);
        let got = mayer_radius_lb(1.0, -3.0, 2.25 * PI);
        let want = (-3f64).exp() / (2.25 * PI);
        assert!((got - want).abs() < 1e-15, "{got}");
        assert!((want - 0.007043).abs() < 1e-6);
        // log(R^May lb)/beta -> e_inf up to the log(beta |||v|||)/beta term.
        // (beta |e_inf| must stay below ~708 or the formula underflows f64.)
        for beta in [50.0, 100.0, 200.0] {
            let out = mayer_radius_lb(beta, -3.0, 2.25 * PI);
            let correction = (beta * 2.25 * PI).ln() / beta;
            assert!((out.ln() / beta - (-3.0)).abs() <= correction + 1e-12);
        }
    }

    #[test]
    fn decay_bound_rhs_arithmetic() {
        // k = 1 at mu = e_inf: the exponent vanishes and only e remains.
        assert!((decay_bound_rhs(1, 3.0, -2.0, -2.0, 1.5, 2) - 1f64.exp()).abs() < 1e-12);
        let got = decay_bound_rhs(2, 2.0, -4.0, -3.0, 1.5, 2);
        let want = 2.0 * 2f64.exp() * 2.25 * PI * (-4f64).exp();
        assert!((got - want).abs() < 1e-12 * want, "{got}");
        assert!((got - 1.91327).abs() < 1e-4, "{got}");
        // Decreasing in beta when mu < e_inf.
        let mut prev = f64::INFINITY;
        for beta in [0.5, 1.0, 2.0, 4.0, 8.0] {
            let rhs = decay_bound_rhs(3, beta, -4.0, -3.0, 1.5, 2);
            assert!(rhs < prev);
            prev = rhs;
        }
    }

    #[test]
    fn mu_plus_rhs_arithmetic() {
        let got = mu_plus_rhs(1.0, 0.1, 0.2, 10.0, 50.0, 2);
        let want = -1.0 + 0.1 - (0.04 * PI).ln() / 10.0 + 5.0;
        assert!((got - want).abs() < 1e-12, "{got}");
        assert!((got - 4.30741).abs() < 2e-4, "{got}");
        // Large beta: the 1/beta terms vanish.
        let frozen = mu_plus_rhs(1.0, 0.1, 0.2, 1e9, 50.0, 2);
        assert!((frozen - (-0.9)).abs() < 1e-6);
        // Linear in alpha_d with slope 1/beta.
        let lo = mu_plus_rhs(1.0, 0.1, 0.2, 10.0, 50.0, 2);
        let hi = mu_plus_rhs(1.0, 0.1, 0.2, 10.0, 100.0, 2);
        assert!((hi - lo - 5.0).abs() < 1e-12);
    }

    #[test]
    fn adjacency_distance_formula() {
        assert!((adjacency_distance(1.0, 2) - 5f64.sqrt()).abs() < 1e-15);
        assert!((adjacency_distance(1.0, 3) - 6f64.sqrt()).abs() < 1e-15);
        assert!((adjacency_distance(2.5, 2) - 2.5 * 5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn bound_report_is_flat_and_positive() {
        let v = p0();
        let report = bound_report(&BoundInputs {
            dim: 2,
            beta: 1.0,
            mu: -3.5,
            e_inf: -3.0,
            r: 1.5,
            triple_norm: v.triple_norm(64),
            tail_depth_m: 1.0,
            delta: 0.1,
            eps: 0.2,
            alpha_d: 50.0,
            ell: 1.0,
            k_max: 4,
        });
        assert_eq!(report.zk_upper.len(), 4);
        assert_eq!(report.decay_rhs.len(), 4);
        let json = serde_json::to_value(&report).unwrap();
        let obj = json.as_object().unwrap();
        for key in [
            "zk_upper",
            "mayer_radius_lb",
            "decay_rhs",
            "mu_plus_rhs",
            "adjacency_distance",
            "beta",
            "alpha_d",
        ] {
            assert!(obj.contains_key(key), "missing {key}");
        }
    }
}
