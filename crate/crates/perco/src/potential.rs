//! Pair potentials: hard core plus an attractive tail of finite range.
//!
//! The admissible class is v(r) = +inf for r < r_hc, v finite on [r_hc, r1)
//! with v < 0 on the tail interval (r0, r1), and v = 0 beyond r1. Two
//! degenerate instances are allowed because the samplers need them as
//! reference systems: a pure hard core (depth 0, r0 = r1 = r_hc) and the
//! ideal gas (all radii 0, v identically zero).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{ball_volume, BoxConfiguration, Metric, PeriodicBox};
use crate::quad;

#[derive(Debug, Error, PartialEq)]
pub enum PotentialError {
    #[error("dimension must be in 1..={}", crate::geometry::MAX_DIM)]
    BadDimension(usize),
    #[error("radii must satisfy 0 <= r_hc <= r0 <= r1 and be finite, got r_hc={r_hc}, r0={r0}, r1={r1}")]
    BadRadii { r_hc: f64, r0: f64, r1: f64 },
    #[error("attractive tail (r0 < r1) requires depth > 0, got depth={0}")]
    ZeroDepthTail(f64),
    #[error("depth {0} > 0 requires a non-empty tail interval r0 < r1")]
    DepthWithoutTail(f64),
    #[error("smooth well ramp width must satisfy 0 < width <= (r1 - r0)/2, got {0}")]
    BadRampWidth(f64),
    #[error("potential has no attractive tail")]
    NoTail,
}

/// Functional form of the finite part of the well.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WellShape {
    /// Constant value -depth on [r_hc, r1). The value at r_hc itself is the
    /// well value (left-closed well).
    SquareWell { depth: f64 },
    /// C^1 well: zero on [r_hc, r0], a piecewise-quadratic ramp down over
    /// [r0, r0+w], flat bottom -depth, and a symmetric ramp back to 0 at r1.
    /// Each ramp is two parabolas glued at mid-height so the slope vanishes
    /// at both ends.
    SmoothWell { depth: f64, inner_width: f64 },
}

impl WellShape {
    pub fn depth(&self) -> f64 {
        match *self {
            WellShape::SquareWell { depth } => depth,
            WellShape::SmoothWell { depth, .. } => depth,
        }
    }
}

/// An admissible pair potential in dimension `dim`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairPotential {
    dim: usize,
    r_hc: f64,
    r0: f64,
    r1: f64,
    shape: WellShape,
}

/// Derived quantities attached to a potential for the bound formulas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialNorms {
    /// |B(0, r_hc)| + integral of |v| outside the core.
    pub triple_norm: f64,
    /// Depth of the tail: M = -inf_{r > r0} v(r) > 0.
    pub tail_depth: f64,
    /// A radius where the tail depth is attained.
    pub tail_argmin: f64,
    /// Stability constant b with U >= -bN; an input, not something this
    /// crate derives.
    pub stability_b: f64,
}

impl PairPotential {
    pub fn new(
        dim: usize,
        r_hc: f64,
        r0: f64,
        r1: f64,
        shape: WellShape,
    ) -> Result<Self, PotentialError> {
        if dim == 0 || dim > crate::geometry::MAX_DIM {
            return Err(PotentialError::BadDimension(dim));
        }
        let ordered = 0.0 <= r_hc && r_hc <= r0 && r0 <= r1;
        if !(ordered && r_hc.is_finite() && r0.is_finite() && r1.is_finite()) {
            return Err(PotentialError::BadRadii { r_hc, r0, r1 });
        }
        let depth = shape.depth();
        if !depth.is_finite() || depth < 0.0 {
            return Err(PotentialError::ZeroDepthTail(depth));
        }
        if r0 < r1 && depth == 0.0 {
            return Err(PotentialError::ZeroDepthTail(depth));
        }
        if r0 == r1 && depth > 0.0 {
            return Err(PotentialError::DepthWithoutTail(depth));
        }
        if let WellShape::SmoothWell { inner_width, .. } = shape {
            if r0 < r1 && !(inner_width > 0.0 && 2.0 * inner_width <= r1 - r0) {
                return Err(PotentialError::BadRampWidth(inner_width));
            }
        }
        Ok(Self {
            dim,
            r_hc,
            r0,
            r1,
            shape,
        })
    }

    /// The non-interacting reference system: v identically zero.
    pub fn ideal_gas(dim: usize) -> Self {
        Self::new(dim, 0.0, 0.0, 0.0, WellShape::SquareWell { depth: 0.0 })
            .expect("ideal gas parameters are always admissible")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hard_core(&self) -> f64 {
        self.r_hc
    }

    pub fn tail_start(&self) -> f64 {
        self.r0
    }

    /// Interaction range: v vanishes at and beyond this radius.
    pub fn range(&self) -> f64 {
        self.r1
    }

    pub fn shape(&self) -> WellShape {
        self.shape
    }

    pub fn has_tail(&self) -> bool {
        self.r0 < self.r1
    }

    /// Evaluate v(r). Negative distances are rejected.
    pub fn evaluate(&self, r: f64) -> f64 {
        assert!(r >= 0.0, "pair distance must be non-negative, got {r}");
        if r < self.r_hc {
            return f64::INFINITY;
        }
        if r >= self.r1 {
            return 0.0;
        }
        match self.shape {
            WellShape::SquareWell { depth } => -depth,
            WellShape::SmoothWell { depth, inner_width } => {
                if r <= self.r0 {
                    0.0
                } else if r < self.r0 + inner_width {
                    -depth * ramp((r - self.r0) / inner_width)
                } else if r <= self.r1 - inner_width {
                    -depth
                } else {
                    -depth * ramp((self.r1 - r) / inner_width)
                }
            }
        }
    }

    /// Breakpoints of the functional form inside [r_hc, r1]; quadratures
    /// split here.
    pub(crate) fn knots(&self) -> Vec<f64> {
        let mut ks = vec![self.r_hc, self.r0, self.r1];
        if let WellShape::SmoothWell { inner_width, .. } = self.shape {
            if self.has_tail() {
                ks.push(self.r0 + inner_width);
                ks.push(self.r1 - inner_width);
            }
        }
        ks.sort_by(f64::total_cmp);
        ks.dedup();
        ks
    }

    /// Tail depth M = -inf_{r > r0} v and a radius attaining it. Both shapes
    /// have a flat bottom containing the midpoint of (r0, r1), so the
    /// midpoint is the reported witness.
    pub fn tail_min(&self) -> Result<(f64, f64), PotentialError> {
        if !self.has_tail() {
            return Err(PotentialError::NoTail);
        }
        Ok((self.shape.depth(), 0.5 * (self.r0 + self.r1)))
    }

    /// The norm |B(0, r_hc)| + \int_{|x| > r_hc} |v(|x|)| dx controlling the
    /// Mayer expansion radius. The radial integral runs over knot-split
    /// pieces with `quad_points` Simpson panels each; for these shapes the
    /// pieces are polynomials of low degree, so the default is far inside
    /// the 1e-6 relative target.
    pub fn triple_norm(&self, quad_points: usize) -> f64 {
        let core = ball_volume(self.dim, self.r_hc);
        if !self.has_tail() {
            return core;
        }
        let surface = self.dim as f64 * ball_volume(self.dim, 1.0);
        let d = self.dim as i32;
        let tail = match self.shape {
            // |v| = depth on the left-closed well [r_hc, r1): closed form.
            // Simpson through `evaluate` would sample the wrong one-sided
            // value at the jump r1.
            WellShape::SquareWell { depth } => {
                depth * (self.r1.powi(d) - self.r_hc.powi(d)) / self.dim as f64
            }
            // Continuous integrand: knot-split Simpson is fourth-order.
            WellShape::SmoothWell { .. } => quad::simpson_knotted(
                |r| self.evaluate(r).abs() * r.powi(d - 1),
                &self.knots(),
                quad_points.max(2),
            ),
        };
        core + surface * tail
    }

    /// Bundle the derived norms; `stability_b` is caller-supplied.
    pub fn norms(&self, quad_points: usize, stability_b: f64) -> Result<PotentialNorms, PotentialError> {
        let (tail_depth, tail_argmin) = self.tail_min()?;
        Ok(PotentialNorms {
            triple_norm: self.triple_norm(quad_points),
            tail_depth,
            tail_argmin,
            stability_b,
        })
    }
}

/// Two-parabola C^1 ramp: 0 at t=0, 1 at t=1, zero slope at both ends.
fn ramp(t: f64) -> f64 {
    if t <= 0.5 {
        2.0 * t * t
    } else {
        let u = 1.0 - t;
        1.0 - 2.0 * u * u
    }
}

/// Total energy of a free-space configuration (flat coords, stride = dim).
/// Short-circuits to +inf on the first hard-core overlap.
pub fn total_energy(v: &PairPotential, coords: &[f64]) -> f64 {
    pair_energy_by(v, coords, crate::geometry::euclidean_dist)
}

/// Total energy under the minimal-image metric of `bbox`.
pub fn total_energy_periodic(v: &PairPotential, coords: &[f64], bbox: &PeriodicBox) -> f64 {
    assert_eq!(bbox.dim(), v.dim());
    pair_energy_by(v, coords, |x, y| bbox.min_image_dist(x, y))
}

fn pair_energy_by(v: &PairPotential, coords: &[f64], dist: impl Fn(&[f64], &[f64]) -> f64) -> f64 {
    let d = v.dim();
    assert!(coords.len().is_multiple_of(d), "coords must have stride dim");
    let n = coords.len() / d;
    let mut u = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let e = v.evaluate(dist(&coords[i * d..(i + 1) * d], &coords[j * d..(j + 1) * d]));
            if e == f64::INFINITY {
                return f64::INFINITY;
            }
            u += e;
        }
    }
    u
}

/// A single-configuration update whose energy cost is wanted.
#[derive(Debug, Clone, Copy)]
pub enum ConfigChange<'a> {
    Insert(&'a [f64]),
    Delete(usize),
    Move(usize, &'a [f64]),
}

/// Energy difference of applying `change` to `config` under the periodic
/// metric, using the cell index (cost O(neighbors), never O(n)).
///
/// May return +inf when the new position overlaps a hard core; the
/// ambiguous inf - inf case cannot arise because valid states carry no
/// overlap, so the removed-side sum is always finite.
pub fn interaction_delta(v: &PairPotential, config: &BoxConfiguration, change: ConfigChange) -> f64 {
    assert_eq!(config.dim(), v.dim());
    let range = v.range();
    if range == 0.0 {
        return 0.0; // ideal gas
    }
    debug_assert!(
        range <= config.cutoff(),
        "cell index cutoff must cover the interaction range"
    );
    let sum_at = |x: &[f64], exclude: usize| -> f64 {
        let mut s = 0.0;
        config.for_neighbors(x, range, Metric::Periodic, exclude, |_, dist| {
            s += v.evaluate(dist);
        });
        s
    };
    match change {
        ConfigChange::Insert(x) => sum_at(x, usize::MAX),
        ConfigChange::Delete(i) => {
            let e = sum_at(config.point(i), i);
            debug_assert!(e.is_finite(), "valid states carry no hard-core overlap");
            -e
        }
        ConfigChange::Move(i, x) => {
            let new = sum_at(x, i);
            if new == f64::INFINITY {
                return f64::INFINITY;
            }
            let old = sum_at(config.point(i), i);
            debug_assert!(old.is_finite(), "valid states carry no hard-core overlap");
            new - old
        }
    }
}
