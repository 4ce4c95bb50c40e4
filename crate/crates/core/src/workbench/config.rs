//! Flat key-value configuration for the workbench and the CLI verbs.
//!
//! A config file is TOML with top-level keys only. Positional overrides
//! `key=value` are parsed as TOML values (bare words fall back to strings) and
//! replace the file's entries. Unknown keys are rejected. Every key not given
//! takes the default of the selected experiment, or the generic default when
//! no experiment is selected.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dynamics::{CombustionShape, DiffusionTensor, Nonlinearity};
use crate::fronts::Method;
use crate::geometry::{
    build_disc_lattice, build_free_plane, build_holes_domain, build_slant_domain, PeriodicCellMask,
    SlantParams,
};
use crate::subsolution::{construct, default_levels, SubsolutionBump};
use crate::{Error, Result};

/// Built-in experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentId {
    FreeKpp,
    Anisotropic,
    HolesKpp,
    SlantCombustion,
    MonostableSandwich,
    Symmetry,
    HeatAudit,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 7] = [
        ExperimentId::FreeKpp,
        ExperimentId::Anisotropic,
        ExperimentId::HolesKpp,
        ExperimentId::SlantCombustion,
        ExperimentId::MonostableSandwich,
        ExperimentId::Symmetry,
        ExperimentId::HeatAudit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentId::FreeKpp => "free-kpp",
            ExperimentId::Anisotropic => "anisotropic",
            ExperimentId::HolesKpp => "holes-kpp",
            ExperimentId::SlantCombustion => "slant-combustion",
            ExperimentId::MonostableSandwich => "monostable-sandwich",
            ExperimentId::Symmetry => "symmetry",
            ExperimentId::HeatAudit => "heat-audit",
        }
    }

    pub fn summary(self) -> &'static str {
        match self {
            ExperimentId::FreeKpp => {
                "KPP on the free plane: eigenvalue and spreading speeds equal 2 sqrt(f'(0))"
            }
            ExperimentId::Anisotropic => "closed-form c* for A = diag(a, b) and its Wulff shape",
            ExperimentId::HolesKpp => {
                "perforated cell where c*(e_x) exceeds the geodesic bound on w(e_d)"
            }
            ExperimentId::SlantCombustion => {
                "combustion in slanted slabs: w(e_x) stays positive, w(e_y) shrinks with alpha"
            }
            ExperimentId::MonostableSandwich => {
                "monostable speeds bracketed by a combustion and a KPP reaction"
            }
            ExperimentId::Symmetry => "reflection-symmetric disc lattice: c*(e_x) = w(e_x)",
            ExperimentId::HeatAudit => "Gaussian upper bound of the Neumann heat kernel",
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentId::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = ExperimentId::ALL.iter().map(|id| id.name()).collect();
                Error::config(format!(
                    "unknown experiment {s:?}; expected one of {}",
                    names.join(", ")
                ))
            })
    }
}

/// Periodic domain family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Domain {
    Free,
    Holes,
    Slant,
    Disc,
}

/// Reaction family; `rate`, `theta` and `sigma` set its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reaction {
    /// `rate u (1 - u)`
    Kpp,
    /// `rate (u - theta)(1 - u)` above `theta`
    Combustion,
    /// `rate (u - theta) u (1 - u)` above `theta`
    Cubic,
    /// `rate u^2 (1 - u)`
    Degenerate,
}

/// Every knob, resolved.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Settings {
    pub domain: Domain,
    pub reaction: Reaction,
    pub method: Method,
    /// Cell size of the main computation.
    pub dx: f64,
    /// Holes: half-width parameter; slant: slope; sandwich: slope.
    pub alpha: f64,
    /// Holes: wall half-thickness.
    pub beta: f64,
    /// Slopes swept by slant-combustion.
    pub alphas: Vec<f64>,
    /// Slant layer parameter `R`; `None` uses the bump radius `R3` rounded up to a multiple of `dx`.
    pub slant_r: Option<f64>,
    pub disc_radius: f64,
    pub rate: f64,
    pub theta: f64,
    /// The reaction is multiplied by `sigma^2`.
    pub sigma: f64,
    /// Plateau level `C` of the subsolution; `None` uses the default.
    pub plateau: Option<f64>,
    /// Matching level `K` of the subsolution; `None` uses the default.
    pub matching: Option<f64>,
    /// Diagonal of the diffusion matrix.
    pub diffusion: [f64; 2],
    /// Directions of a speed profile.
    pub directions: usize,
    /// Directions at which the Wulff shape is read off.
    pub wulff_directions: usize,
    /// Tail length of the cone coefficient, in periods.
    pub n_max: usize,
    pub spread_dx: f64,
    pub spread_horizon: f64,
    /// Number of equally spaced spreading measurement times.
    pub spread_times: usize,
    /// Level of the measured spreading set.
    pub eta: f64,
    /// Relative tolerance of the main comparison.
    pub tolerance: f64,
    /// Relative tolerance of comparisons involving spreading measurements.
    pub spread_tolerance: f64,
    /// Required margin of a strict inequality.
    pub margin: f64,
    pub epsilon: f64,
    /// Slant-combustion horizon is `slant_time / alpha`.
    pub slant_time: f64,
    /// Sandwich horizon is `periods` vertical periods at the free speed.
    pub periods: f64,
    pub output: PathBuf,
}

/// Settings with the experiment they drive.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentId,
    #[serde(flatten)]
    pub settings: Settings,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: Option<String>,
    domain: Option<Domain>,
    reaction: Option<Reaction>,
    method: Option<Method>,
    dx: Option<f64>,
    alpha: Option<f64>,
    beta: Option<f64>,
    alphas: Option<Vec<f64>>,
    slant_r: Option<f64>,
    disc_radius: Option<f64>,
    rate: Option<f64>,
    theta: Option<f64>,
    sigma: Option<f64>,
    plateau: Option<f64>,
    matching: Option<f64>,
    diffusion: Option<[f64; 2]>,
    directions: Option<usize>,
    wulff_directions: Option<usize>,
    n_max: Option<usize>,
    spread_dx: Option<f64>,
    spread_horizon: Option<f64>,
    spread_times: Option<usize>,
    eta: Option<f64>,
    tolerance: Option<f64>,
    spread_tolerance: Option<f64>,
    margin: Option<f64>,
    epsilon: Option<f64>,
    slant_time: Option<f64>,
    periods: Option<f64>,
    output: Option<PathBuf>,
}

impl Settings {
    /// Defaults when no experiment is selected.
    pub fn generic() -> Self {
        Settings {
            domain: Domain::Free,
            reaction: Reaction::Kpp,
            method: Method::Eigenvalue,
            dx: 0.05,
            alpha: 0.9,
            beta: 0.05,
            alphas: vec![0.4, 0.2, 0.1],
            slant_r: None,
            disc_radius: 0.3,
            rate: 1.0,
            theta: 0.25,
            sigma: 1.0,
            plateau: None,
            matching: None,
            diffusion: [1.0, 1.0],
            directions: 16,
            wulff_directions: 256,
            n_max: 16,
            spread_dx: 0.25,
            spread_horizon: 40.0,
            spread_times: 20,
            eta: 0.5,
            tolerance: 0.02,
            spread_tolerance: 0.05,
            margin: 0.05,
            epsilon: 0.5,
            slant_time: 400.0,
            periods: 4.0,
            output: PathBuf::from("out"),
        }
    }

    /// Defaults of one experiment.
    pub fn for_experiment(id: ExperimentId) -> Self {
        let mut s = Settings::generic();
        s.output = PathBuf::from("out").join(id.name());
        match id {
            ExperimentId::FreeKpp => {}
            ExperimentId::Anisotropic => {
                s.method = Method::ClosedForm;
                s.diffusion = [4.0, 1.0];
                s.tolerance = 0.01;
            }
            ExperimentId::HolesKpp => {
                s.domain = Domain::Holes;
                s.dx = 0.01;
                s.spread_dx = 0.05;
                s.spread_horizon = 10.0;
            }
            ExperimentId::SlantCombustion => {
                s.domain = Domain::Slant;
                s.reaction = Reaction::Combustion;
                s.method = Method::Empirical;
                s.dx = 1.5;
                s.spread_dx = 1.5;
                s.spread_times = 40;
                s.eta = 0.8;
            }
            ExperimentId::MonostableSandwich => {
                s.domain = Domain::Slant;
                s.reaction = Reaction::Degenerate;
                s.method = Method::Empirical;
                s.alpha = 0.4;
                s.dx = 1.5;
                s.spread_dx = 1.5;
                s.spread_times = 40;
                s.eta = 0.8;
            }
            ExperimentId::Symmetry => {
                s.domain = Domain::Disc;
                s.dx = 0.025;
                s.directions = 32;
            }
            ExperimentId::HeatAudit => {
                s.domain = Domain::Holes;
                s.dx = 0.05;
            }
        }
        s
    }

    fn overlay(mut self, raw: RawConfig) -> Self {
        macro_rules! take {
            ($($field:ident),*) => {
                $(if let Some(v) = raw.$field { self.$field = v; })*
            };
        }
        take!(
            domain,
            reaction,
            method,
            dx,
            alpha,
            beta,
            alphas,
            disc_radius,
            rate,
            theta,
            sigma,
            diffusion,
            directions,
            wulff_directions,
            n_max,
            spread_dx,
            spread_horizon,
            spread_times,
            eta,
            tolerance,
            spread_tolerance,
            margin,
            epsilon,
            slant_time,
            periods,
            output
        );
        if raw.slant_r.is_some() {
            self.slant_r = raw.slant_r;
        }
        if raw.plateau.is_some() {
            self.plateau = raw.plateau;
        }
        if raw.matching.is_some() {
            self.matching = raw.matching;
        }
        self
    }

    /// Range checks that do not depend on the experiment.
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dx", self.dx),
            ("spread_dx", self.spread_dx),
            ("spread_horizon", self.spread_horizon),
            ("rate", self.rate),
            ("sigma", self.sigma),
            ("tolerance", self.tolerance),
            ("spread_tolerance", self.spread_tolerance),
            ("epsilon", self.epsilon),
            ("slant_time", self.slant_time),
            ("periods", self.periods),
            ("diffusion[0]", self.diffusion[0]),
            ("diffusion[1]", self.diffusion[1]),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!("{name} = {v} must be positive")));
            }
        }
        if !(self.margin >= 0.0) {
            return Err(Error::config(format!(
                "margin = {} must be nonnegative",
                self.margin
            )));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(Error::config(format!(
                "eta = {} must lie in (0, 1)",
                self.eta
            )));
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(Error::config(format!(
                "theta = {} must lie in (0, 1)",
                self.theta
            )));
        }
        if self.directions < 4 || self.wulff_directions < 8 {
            return Err(Error::config(
                "directions must be at least 4 and wulff_directions at least 8",
            ));
        }
        if self.spread_times < 4 {
            return Err(Error::config("spread_times must be at least 4"));
        }
        if self.alphas.is_empty() || self.alphas.iter().any(|&a| !(a > 0.0)) {
            return Err(Error::config(
                "alphas must be a nonempty list of positive slopes",
            ));
        }
        Ok(())
    }

    pub fn diffusion_tensor(&self) -> Result<DiffusionTensor> {
        DiffusionTensor::new(self.diffusion[0], self.diffusion[1])
    }

    /// The configured reaction, multiplied by `sigma^2`.
    pub fn nonlinearity(&self) -> Result<Nonlinearity> {
        self.reaction_of(self.reaction)
    }

    /// Another reaction family with the configured parameters.
    pub fn reaction_of(&self, reaction: Reaction) -> Result<Nonlinearity> {
        let f = match reaction {
            Reaction::Kpp => Nonlinearity::kpp(self.rate)?,
            Reaction::Combustion => {
                Nonlinearity::combustion(self.theta, CombustionShape::Quadratic, self.rate)?
            }
            Reaction::Cubic => {
                Nonlinearity::combustion(self.theta, CombustionShape::Cubic, self.rate)?
            }
            Reaction::Degenerate => Nonlinearity::degenerate(self.rate)?,
        };
        if self.sigma == 1.0 {
            Ok(f)
        } else {
            f.scaled(self.sigma)
        }
    }

    /// Subsolution bump of a combustion reaction with the configured levels.
    pub fn bump_for(&self, f: &Nonlinearity) -> Result<SubsolutionBump> {
        let (c, _) = default_levels(f)?;
        let c = self.plateau.unwrap_or(c);
        let theta = f.theta().unwrap_or(0.0);
        construct(f, c, self.matching.unwrap_or(0.5 * (theta + c)))
    }

    /// Slant layer parameter: explicit `slant_r`, or `R3` of `bump` rounded up to a multiple of `dx`.
    pub fn slant_r_for(&self, bump: Option<&SubsolutionBump>, dx: f64) -> Result<f64> {
        match (self.slant_r, bump) {
            (Some(r), _) => Ok(r),
            (None, Some(b)) => Ok((b.r3 / dx).ceil() * dx),
            (None, None) => Err(Error::config(
                "slant_r is required without a combustion bump",
            )),
        }
    }

    /// The configured domain at cell size `dx`.
    pub fn mask_at(&self, dx: f64) -> Result<PeriodicCellMask> {
        match self.domain {
            Domain::Free => build_free_plane((1.0, 1.0), dx),
            Domain::Holes => build_holes_domain(self.alpha, self.beta, dx),
            Domain::Disc => build_disc_lattice(self.disc_radius, dx),
            Domain::Slant => {
                let bump = match self.slant_r {
                    Some(_) => None,
                    None => Some(self.bump_for(&self.slant_bump_reaction()?)?),
                };
                let r = self.slant_r_for(bump.as_ref(), dx)?;
                build_slant_domain(SlantParams::new(self.alpha, r), dx)
            }
        }
    }

    /// Reaction whose bump sizes the slant domain: the configured one when it is
    /// of combustion type, otherwise the cubic combustion lower bound.
    pub fn slant_bump_reaction(&self) -> Result<Nonlinearity> {
        match self.reaction {
            Reaction::Combustion | Reaction::Cubic => self.nonlinearity(),
            Reaction::Kpp | Reaction::Degenerate => self.reaction_of(Reaction::Cubic),
        }
    }
}

/// Overlay of a config text and overrides, as a TOML table.
fn merged_table(text: Option<&str>, overrides: &[String]) -> Result<toml::Table> {
    let mut table = match text {
        Some(t) => t
            .parse::<toml::Table>()
            .map_err(|e| Error::Parse(format!("config: {e}")))?,
        None => toml::Table::new(),
    };
    for item in overrides {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("override {item:?} is not key=value")))?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(Error::Parse(format!("override {item:?} has an empty key")));
        }
        let parsed = format!("v = {value}")
            .parse::<toml::Table>()
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(value.to_string()));
        table.insert(key.to_string(), parsed);
    }
    Ok(table)
}

fn raw_from(text: Option<&str>, overrides: &[String]) -> Result<RawConfig> {
    merged_table(text, overrides)?
        .try_into()
        .map_err(|e: toml::de::Error| Error::Parse(format!("config: {}", e.message())))
}

/// Settings from an optional config text and overrides, with the defaults of
/// the `experiment` key when present. Returns the experiment too.
pub fn parse_settings(
    text: Option<&str>,
    overrides: &[String],
) -> Result<(Option<ExperimentId>, Settings)> {
    let mut raw = raw_from(text, overrides)?;
    let id = raw.experiment.take().map(|s| s.parse()).transpose()?;
    let base = match id {
        Some(id) => Settings::for_experiment(id),
        None => Settings::generic(),
    };
    let settings = base.overlay(raw);
    settings.validate()?;
    Ok((id, settings))
}

/// Reads an optional config file and applies overrides.
pub fn load_settings(
    path: Option<&Path>,
    overrides: &[String],
) -> Result<(Option<ExperimentId>, Settings)> {
    let text = path
        .map(|p| std::fs::read_to_string(p).map_err(|e| Error::io(p, e)))
        .transpose()?;
    parse_settings(text.as_deref(), overrides)
}

impl ExperimentConfig {
    /// Defaults of `id`.
    pub fn new(id: ExperimentId) -> Self {
        ExperimentConfig {
            experiment: id,
            settings: Settings::for_experiment(id),
        }
    }

    /// Parses a config text; the `experiment` key is required.
    pub fn parse(text: &str, overrides: &[String]) -> Result<Self> {
        Self::from_parts(parse_settings(Some(text), overrides)?)
    }

    /// Reads an optional config file; the experiment comes from the file or the overrides.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        Self::from_parts(load_settings(path, overrides)?)
    }

    fn from_parts((id, settings): (Option<ExperimentId>, Settings)) -> Result<Self> {
        let experiment = id.ok_or_else(|| Error::config("the experiment key is required"))?;
        Ok(ExperimentConfig {
            experiment,
            settings,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn experiment_defaults_and_overrides() {
        let cfg = ExperimentConfig::parse(
            "experiment = \"holes-kpp\"\nalpha = 0.85\n",
            &[
                "dx=0.02".into(),
                "output=runs/h".into(),
                "alphas=[0.3, 0.2]".into(),
            ],
        )
        .unwrap();
        assert_eq!(cfg.experiment, ExperimentId::HolesKpp);
        assert_eq!(cfg.settings.domain, Domain::Holes);
        assert_eq!(cfg.settings.alpha, 0.85);
        assert_eq!(cfg.settings.dx, 0.02);
        assert_eq!(cfg.settings.alphas, vec![0.3, 0.2]);
        assert_eq!(cfg.settings.output, PathBuf::from("runs/h"));
        assert_eq!(cfg.settings.spread_dx, 0.05);
    }

    #[test]
    fn integers_are_accepted_for_reals() {
        let cfg = ExperimentConfig::parse("experiment = \"free-kpp\"\nspread_horizon = 30\n", &[])
            .unwrap();
        assert_eq!(cfg.settings.spread_horizon, 30.0);
    }

    #[test]
    fn rejects_unknown_keys_and_values() {
        assert!(ExperimentConfig::parse("experiment = \"free-kpp\"\nspeed = 2\n", &[]).is_err());
        assert!(ExperimentConfig::parse("experiment = \"nope\"\n", &[]).is_err());
        assert!(ExperimentConfig::parse("dx = 0.1\n", &[]).is_err());
        assert!(ExperimentConfig::parse("experiment = \"free-kpp\"\n", &["dx=-1".into()]).is_err());
        assert!(ExperimentConfig::parse("experiment = \"free-kpp\"\n", &["dx".into()]).is_err());
        assert!(ExperimentConfig::parse("[table]\nexperiment = \"free-kpp\"\n", &[]).is_err());
    }

    #[test]
    fn lists_seven_experiments() {
        for id in ExperimentId::ALL {
            assert_eq!(id.name().parse::<ExperimentId>().unwrap(), id);
            Settings::for_experiment(id).validate().unwrap();
        }
    }

    #[test]
    fn slant_radius_follows_the_bump() {
        let (_, s) = parse_settings(
            None,
            &[
                "domain=\"slant\"".into(),
                "reaction=\"combustion\"".into(),
                "dx=1.5".into(),
            ],
        )
        .unwrap();
        let f = s.nonlinearity().unwrap();
        let b = s.bump_for(&f).unwrap();
        let r = s.slant_r_for(Some(&b), 1.5).unwrap();
        assert!(r >= b.r3 && r < b.r3 + 1.5);
        assert_eq!(s.mask_at(1.5).unwrap().periods(), (3.0 * r, 3.0 * r));
    }
}
