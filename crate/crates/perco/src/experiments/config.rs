//! TOML experiment configuration and load-time validation.
//!
//! The file is sectioned as `[potential] [box] [grid] [mcmc] [constants]
//! [output]`, plus optional `[groundstate] [integrals] [ising] [decay]`
//! blocks consumed by the matching subcommands. Everything that can be
//! rejected at load time is: inter-field constraints live in `validate`,
//! not scattered across the runners.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::PeriodicBox;
use crate::mcmc::{Ensemble, InitScheme};
use crate::potential::{PairPotential, WellShape};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("bad potential: {0}")]
    Potential(#[from] crate::potential::PotentialError),
    #[error("bad box: {0}")]
    Geometry(#[from] crate::geometry::GeometryError),
    #[error("smooth_well requires inner_width")]
    MissingInnerWidth,
    #[error("connectivity radius {r} must be >= the interaction range {r1}")]
    RadiusBelowRange { r: f64, r1: f64 },
    #[error("connectivity radius {r} must be <= half the box side {side}")]
    RadiusBeyondHalfBox { r: f64, side: f64 },
    #[error("{0} grid must be nonempty")]
    EmptyGrid(&'static str),
    #[error("grand-canonical grids take exactly one of `mu` or `z`, canonical grids take `n`")]
    EnsembleParamMismatch,
    #[error("beta values must be finite and >= 0")]
    BadBeta,
    #[error("{what} must be >= 1")]
    ZeroCount { what: &'static str },
    #[error("k_max for rho_k must be >= 1")]
    BadKMax,
    #[error("groundstate k_max must stay within 1..=14, got {0}")]
    GroundstateKTooLarge(usize),
    #[error("cluster-integral k_max must stay within 1..=5, got {0}")]
    IntegralsKTooLarge(usize),
    #[error("empty-region decay needs n_max >= 3, got {0}")]
    DecayTooShort(usize),
    #[error("decay cell side {ell} must partition the box side {side} into >= 2 cells")]
    DecayCellMismatch { ell: f64, side: f64 },
    #[error("ising block takes exactly one of `h` or `mu`")]
    IsingFieldMismatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeChoice {
    SquareWell,
    SmoothWell,
    Ideal,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSection {
    pub dimension: usize,
    pub shape: ShapeChoice,
    #[serde(default)]
    pub r_hc: f64,
    #[serde(default)]
    pub r0: f64,
    #[serde(default)]
    pub r1: f64,
    #[serde(default)]
    pub depth: f64,
    pub inner_width: Option<f64>,
}

impl PotentialSection {
    pub fn build(&self) -> Result<PairPotential, ConfigError> {
        match self.shape {
            ShapeChoice::Ideal => Ok(PairPotential::ideal_gas(self.dimension)),
            ShapeChoice::SquareWell => Ok(PairPotential::new(
                self.dimension,
                self.r_hc,
                self.r0,
                self.r1,
                WellShape::SquareWell { depth: self.depth },
            )?),
            ShapeChoice::SmoothWell => {
                let inner_width = self.inner_width.ok_or(ConfigError::MissingInnerWidth)?;
                Ok(PairPotential::new(
                    self.dimension,
                    self.r_hc,
                    self.r0,
                    self.r1,
                    WellShape::SmoothWell {
                        depth: self.depth,
                        inner_width,
                    },
                )?)
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSection {
    pub side: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleChoice {
    GrandCanonical,
    Canonical,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub ensemble: EnsembleChoice,
    pub beta: Vec<f64>,
    pub mu: Option<Vec<f64>>,
    pub z: Option<Vec<f64>>,
    pub n: Option<Vec<usize>>,
    /// Connectivity radius for cluster observables.
    pub r: f64,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
}

fn default_k_max() -> usize {
    8
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitChoice {
    RandomSequential,
    Lattice,
    Empty,
}

impl From<InitChoice> for InitScheme {
    fn from(c: InitChoice) -> Self {
        match c {
            InitChoice::RandomSequential => InitScheme::RandomSequential,
            InitChoice::Lattice => InitScheme::Lattice,
            InitChoice::Empty => InitScheme::Empty,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McmcSection {
    #[serde(default = "default_chains")]
    pub chains: usize,
    pub sweeps: u64,
    pub burn_in: u64,
    #[serde(default = "default_thin")]
    pub thin: u64,
    pub seed: u64,
    #[serde(default = "default_init")]
    pub init: InitChoice,
    /// Tune the displacement step during burn-in (then freeze it).
    #[serde(default = "default_true")]
    pub tune: bool,
}

fn default_chains() -> usize {
    2
}
fn default_thin() -> u64 {
    1
}
fn default_init() -> InitChoice {
    InitChoice::RandomSequential
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConstantsSection {
    /// Contour-count constant of the percolation lower bound; no numeric
    /// value exists in the source material, so it is always an input.
    pub alpha_d: f64,
    /// Trusted bulk energy per particle (e.g. a periodic lattice sum).
    pub e_inf_override: Option<f64>,
    /// Superstability constant b with U >= -bN.
    pub stability_b: Option<f64>,
    /// Margin delta of the mu_plus bound.
    pub delta: f64,
    /// Core-scale radius eps of the mu_plus bound.
    pub eps: f64,
    /// Mesh-cube side for adjacency_distance / mu_plus reporting.
    pub ell: f64,
}

impl Default for ConstantsSection {
    fn default() -> Self {
        Self {
            alpha_d: 50.0,
            e_inf_override: None,
            stability_b: None,
            delta: 0.1,
            eps: 0.2,
            ell: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: String,
    #[serde(default = "default_formats")]
    pub formats: Vec<String>,
}

fn default_formats() -> Vec<String> {
    vec!["csv".into(), "json".into()]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundstateSection {
    pub k_max: usize,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
}

fn default_restarts() -> usize {
    4
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegralsSection {
    #[serde(default = "default_integrals_k")]
    pub k_max: usize,
    #[serde(default = "default_samples")]
    pub samples: u64,
}

impl Default for IntegralsSection {
    fn default() -> Self {
        Self {
            k_max: default_integrals_k(),
            samples: default_samples(),
        }
    }
}

fn default_integrals_k() -> usize {
    4
}
fn default_samples() -> u64 {
    1_000_000
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpinInit {
    Plus,
    Minus,
    Random,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IsingSection {
    pub n: usize,
    #[serde(default = "default_j_gas")]
    pub j_gas: f64,
    /// Exactly one of `h` (Ising field) or `mu` (gas chemical potential).
    pub h: Option<f64>,
    pub mu: Option<f64>,
    pub beta: f64,
    pub sweeps: u64,
    pub burn_in: u64,
    #[serde(default = "default_thin")]
    pub thin: u64,
    #[serde(default = "default_spin_init")]
    pub init: SpinInit,
}

fn default_j_gas() -> f64 {
    1.0
}
fn default_spin_init() -> SpinInit {
    SpinInit::Random
}

impl IsingSection {
    /// The Ising field, through the dictionary when given as mu.
    pub fn field(&self) -> f64 {
        match (self.h, self.mu) {
            (Some(h), None) => h,
            (None, Some(mu)) => crate::lattice::mu_to_h(mu, self.j_gas, 2),
            _ => unreachable!("validated at load"),
        }
    }

    pub fn coupling(&self) -> f64 {
        crate::lattice::gas_to_ising_coupling(self.j_gas)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecaySection {
    /// Cell side; must partition the box side exactly.
    pub ell: f64,
    /// Largest region size in cells.
    pub n_max: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub potential: PotentialSection,
    #[serde(rename = "box")]
    pub bbox: BoxSection,
    pub grid: GridSection,
    pub mcmc: McmcSection,
    #[serde(default)]
    pub constants: ConstantsSection,
    pub output: OutputSection,
    pub groundstate: Option<GroundstateSection>,
    pub integrals: Option<IntegralsSection>,
    pub ising: Option<IsingSection>,
    pub decay: Option<DecaySection>,
}

impl ExperimentConfig {
    pub fn potential(&self) -> PairPotential {
        self.potential.build().expect("validated at load")
    }

    pub fn periodic_box(&self) -> PeriodicBox {
        PeriodicBox::new(self.potential.dimension, self.bbox.side).expect("validated at load")
    }

    /// The grand-canonical activity at one grid value, z = e^{beta mu}
    /// when the grid is given in mu.
    pub fn activity(&self, beta: f64, param: f64) -> f64 {
        if self.grid.mu.is_some() {
            (beta * param).exp()
        } else {
            param
        }
    }

    pub fn ensemble_at(&self, beta: f64, param: f64) -> Ensemble {
        match self.grid.ensemble {
            EnsembleChoice::GrandCanonical => Ensemble::GrandCanonical {
                z: self.activity(beta, param),
            },
            EnsembleChoice::Canonical => Ensemble::Canonical {
                n: param as usize,
            },
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let v = self.potential.build()?;
        let bbox = PeriodicBox::new(self.potential.dimension, self.bbox.side)?;
        let r = self.grid.r;
        if r < v.range() {
            return Err(ConfigError::RadiusBelowRange { r, r1: v.range() });
        }
        if r > bbox.side() / 2.0 {
            return Err(ConfigError::RadiusBeyondHalfBox {
                r,
                side: bbox.side(),
            });
        }
        if self.grid.beta.is_empty() {
            return Err(ConfigError::EmptyGrid("beta"));
        }
        if !self.grid.beta.iter().all(|b| b.is_finite() && *b >= 0.0) {
            return Err(ConfigError::BadBeta);
        }
        match self.grid.ensemble {
            EnsembleChoice::GrandCanonical => match (&self.grid.mu, &self.grid.z, &self.grid.n) {
                (Some(mu), None, None) => {
                    if mu.is_empty() {
                        return Err(ConfigError::EmptyGrid("mu"));
                    }
                }
                (None, Some(z), None) => {
                    if z.is_empty() {
                        return Err(ConfigError::EmptyGrid("z"));
                    }
                }
                _ => return Err(ConfigError::EnsembleParamMismatch),
            },
            EnsembleChoice::Canonical => match (&self.grid.mu, &self.grid.z, &self.grid.n) {
                (None, None, Some(n)) => {
                    if n.is_empty() {
                        return Err(ConfigError::EmptyGrid("n"));
                    }
                }
                _ => return Err(ConfigError::EnsembleParamMismatch),
            },
        }
        if self.grid.k_max == 0 {
            return Err(ConfigError::BadKMax);
        }
        if self.mcmc.chains == 0 {
            return Err(ConfigError::ZeroCount { what: "chains" });
        }
        if self.mcmc.thin == 0 {
            return Err(ConfigError::ZeroCount { what: "thin" });
        }
        if let Some(gs) = &self.groundstate {
            if gs.k_max == 0 || gs.k_max > 14 {
                return Err(ConfigError::GroundstateKTooLarge(gs.k_max));
            }
        }
        if let Some(ints) = &self.integrals {
            if ints.k_max == 0 || ints.k_max > 5 {
                return Err(ConfigError::IntegralsKTooLarge(ints.k_max));
            }
        }
        if let Some(ising) = &self.ising {
            if ising.h.is_some() == ising.mu.is_some() {
                return Err(ConfigError::IsingFieldMismatch);
            }
        }
        if let Some(decay) = &self.decay {
            if decay.n_max < 3 {
                return Err(ConfigError::DecayTooShort(decay.n_max));
            }
            let cells = (self.bbox.side / decay.ell).round();
            let exact = (cells * decay.ell - self.bbox.side).abs() < 1e-9 * self.bbox.side;
            if !(decay.ell > 0.0 && exact && cells >= 2.0) {
                return Err(ConfigError::DecayCellMismatch {
                    ell: decay.ell,
                    side: self.bbox.side,
                });
            }
        }
        Ok(())
    }
}

/// Parse and validate a config file.
pub fn load_config(path: &std::path::Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path)?;
    load_config_str(&text)
}

/// Parse and validate config text.
pub fn load_config_str(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let config: ExperimentConfig = toml::from_str(text)?;
    config.validate()?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_toml() -> String {
        r#"
            [potential]
            dimension = 2
            shape = "square_well"
            r_hc = 1.0
            r0 = 1.0
            r1 = 1.5
            depth = 1.0

            [box]
            side = 10.0

            [grid]
            ensemble = "grand_canonical"
            beta = [1.0, 2.0]
            mu = [-3.5, -3.0]
            r = 1.5

            [mcmc]
            sweeps = 100
            burn_in = 10
            seed = 7

            [output]
            dir = "out"
        "#
        .to_string()
    }

    fn parse(text: &str) -> Result<ExperimentConfig, ConfigError> {
        load_config_str(text)
    }

    #[test]
    fn base_config_parses_with_defaults() {
        let cfg = parse(&base_toml()).unwrap();
        assert_eq!(cfg.grid.k_max, 8);
        assert_eq!(cfg.mcmc.chains, 2);
        assert_eq!(cfg.mcmc.thin, 1);
        assert_eq!(cfg.constants.alpha_d, 50.0);
        assert!(cfg.mcmc.tune);
        assert_eq!(cfg.potential().range(), 1.5);
        assert_eq!(cfg.periodic_box().side(), 10.0);
        // mu grid: z = e^{beta mu}.
        assert!((cfg.activity(2.0, -1.0) - (-2f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn radius_constraints_are_enforced() {
        let below = base_toml().replace("r = 1.5", "r = 1.2");
        assert!(matches!(
            parse(&below),
            Err(ConfigError::RadiusBelowRange { .. })
        ));
        let beyond = base_toml().replace("r = 1.5", "r = 5.5");
        assert!(matches!(
            parse(&beyond),
            Err(ConfigError::RadiusBeyondHalfBox { .. })
        ));
    }

    #[test]
    fn ensemble_and_params_must_match() {
        let canonical_with_mu = base_toml().replace("grand_canonical", "canonical");
        assert!(matches!(
            parse(&canonical_with_mu),
            Err(ConfigError::EnsembleParamMismatch)
        ));
        let both = base_toml().replace("mu = [-3.5, -3.0]", "mu = [-3.5]\nz = [0.1]");
        assert!(matches!(
            parse(&both),
            Err(ConfigError::EnsembleParamMismatch)
        ));
        let canonical = base_toml()
            .replace("grand_canonical", "canonical")
            .replace("mu = [-3.5, -3.0]", "n = [10, 20]");
        let cfg = parse(&canonical).unwrap();
        assert!(matches!(
            cfg.ensemble_at(1.0, 10.0),
            crate::mcmc::Ensemble::Canonical { n: 10 }
        ));
    }

    #[test]
    fn empty_grids_are_rejected() {
        let empty = base_toml().replace("beta = [1.0, 2.0]", "beta = []");
        assert!(matches!(parse(&empty), Err(ConfigError::EmptyGrid("beta"))));
        let empty_mu = base_toml().replace("mu = [-3.5, -3.0]", "mu = []");
        assert!(matches!(parse(&empty_mu), Err(ConfigError::EmptyGrid("mu"))));
    }

    #[test]
    fn optional_sections_are_validated() {
        let gs = format!("{}\n[groundstate]\nk_max = 15\n", base_toml());
        assert!(matches!(
            parse(&gs),
            Err(ConfigError::GroundstateKTooLarge(15))
        ));
        let ints = format!("{}\n[integrals]\nk_max = 6\n", base_toml());
        assert!(matches!(
            parse(&ints),
            Err(ConfigError::IntegralsKTooLarge(6))
        ));
        let decay = format!("{}\n[decay]\nell = 3.0\nn_max = 6\n", base_toml());
        assert!(matches!(
            parse(&decay),
            Err(ConfigError::DecayCellMismatch { .. })
        ));
        let short = format!("{}\n[decay]\nell = 1.0\nn_max = 2\n", base_toml());
        assert!(matches!(parse(&short), Err(ConfigError::DecayTooShort(2))));
        let ok = format!(
            "{}\n[groundstate]\nk_max = 10\n\n[decay]\nell = 1.0\nn_max = 6\n",
            base_toml()
        );
        assert!(parse(&ok).is_ok());
    }

    #[test]
    fn ising_field_exclusivity() {
        let neither = format!(
            "{}\n[ising]\nn = 3\nbeta = 0.6\nsweeps = 10\nburn_in = 1\n",
            base_toml()
        );
        assert!(matches!(
            parse(&neither),
            Err(ConfigError::IsingFieldMismatch)
        ));
        let with_mu = format!(
            "{}\n[ising]\nn = 3\nmu = -2.0\nbeta = 0.6\nsweeps = 10\nburn_in = 1\n",
            base_toml()
        );
        let cfg = parse(&with_mu).unwrap();
        let ising = cfg.ising.unwrap();
        // mu = -dJ maps to zero field.
        assert!((ising.field() - 0.0).abs() < 1e-15);
        assert_eq!(ising.coupling(), 0.25);
    }

    #[test]
    fn smooth_well_requires_inner_width() {
        let smooth = base_toml().replace("shape = \"square_well\"", "shape = \"smooth_well\"");
        assert!(matches!(
            parse(&smooth),
            Err(ConfigError::MissingInnerWidth)
        ));
        let ideal = base_toml().replace("shape = \"square_well\"", "shape = \"ideal\"");
        let cfg = parse(&ideal).unwrap();
        assert!(!cfg.potential().has_tail());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let typo = base_toml().replace("side = 10.0", "side = 10.0\nsids = 3.0");
        assert!(matches!(parse(&typo), Err(ConfigError::Parse(_))));
    }
}
