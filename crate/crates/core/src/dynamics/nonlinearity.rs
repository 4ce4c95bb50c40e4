use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Grid step of the dense scans used to classify a reaction term.
pub const SCAN_STEP: f64 = 1e-4;

/// Shape of a combustion reaction above its ignition threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CombustionShape {
    /// `(u - theta)(1 - u)`
    Quadratic,
    /// `(u - theta) u (1 - u)`
    Cubic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Kind {
    /// `rate * u (1 - u)`
    Kpp { rate: f64 },
    /// `rate * shape(u)` for `u > theta`, zero below.
    Combustion {
        theta: f64,
        shape: CombustionShape,
        rate: f64,
    },
    /// `rate * u^2 (1 - u)`: monostable with a degenerate linearization at zero.
    Degenerate { rate: f64 },
    /// `f = 0`: pure diffusion.
    Zero,
    /// Piecewise-linear interpolation of samples at equispaced nodes of `[0, 1]`.
    Table { values: Vec<f64> },
}

/// Class of a reaction term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Class {
    /// The zero term.
    Inert,
    Kpp,
    Monostable,
    Combustion,
}

/// A reaction term `f` on `[0, 1]` with the quantities derived from it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Nonlinearity {
    kind: Kind,
    /// Multiplier `sigma^2` applied to the base term.
    scale: f64,
    class: Class,
    theta: Option<f64>,
    linear_rate: f64,
    decay_threshold: f64,
    max_ratio: f64,
    /// Bound on `max(0, -f')`, used for the order-preserving time step.
    lipschitz_down: f64,
}

impl Nonlinearity {
    pub fn kpp(rate: f64) -> Result<Self> {
        Self::new(Kind::Kpp { rate }, 1.0)
    }

    pub fn combustion(theta: f64, shape: CombustionShape, rate: f64) -> Result<Self> {
        Self::new(Kind::Combustion { theta, shape, rate }, 1.0)
    }

    pub fn degenerate(rate: f64) -> Result<Self> {
        Self::new(Kind::Degenerate { rate }, 1.0)
    }

    /// The zero reaction, for pure heat evolution.
    pub fn heat() -> Self {
        Nonlinearity {
            kind: Kind::Zero,
            scale: 1.0,
            class: Class::Inert,
            theta: None,
            linear_rate: 0.0,
            decay_threshold: 0.0,
            max_ratio: 0.0,
            lipschitz_down: 0.0,
        }
    }

    pub fn table(values: Vec<f64>) -> Result<Self> {
        Self::new(Kind::Table { values }, 1.0)
    }

    /// Validates `kind` and classifies it by dense scans on `[0, 1]`.
    pub fn new(kind: Kind, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::config(format!("scale {scale} must be positive")));
        }
        match &kind {
            Kind::Kpp { rate } | Kind::Degenerate { rate } => {
                if !(*rate > 0.0) {
                    return Err(Error::config(format!("rate {rate} must be positive")));
                }
            }
            Kind::Combustion { theta, rate, .. } => {
                if !(*theta > 0.0 && *theta < 1.0) {
                    return Err(Error::config(format!(
                        "ignition {theta} must lie in (0, 1)"
                    )));
                }
                if !(*rate > 0.0) {
                    return Err(Error::config(format!("rate {rate} must be positive")));
                }
            }
            Kind::Zero => return Ok(Self::heat()),
            Kind::Table { values } => {
                if values.len() < 3 {
                    return Err(Error::config("a table needs at least three samples"));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::config("table samples must be finite"));
                }
            }
        }
        let mut f = Nonlinearity {
            kind,
            scale,
            class: Class::Monostable,
            theta: None,
            linear_rate: 0.0,
            decay_threshold: 0.0,
            max_ratio: 0.0,
            lipschitz_down: 0.0,
        };
        f.classify()?;
        Ok(f)
    }

    /// The same term multiplied by `sigma^2`.
    pub fn scaled(&self, sigma: f64) -> Result<Self> {
        Self::new(self.kind.clone(), self.scale * sigma * sigma)
    }

    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        self.scale * base_eval(&self.kind, u)
    }

    pub fn kind(&self) -> &Kind {
        &self.kind
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn class(&self) -> Class {
        self.class
    }

    /// Ignition threshold of a combustion term.
    pub fn theta(&self) -> Option<f64> {
        self.theta
    }

    /// `f'(0)`.
    pub fn linear_rate(&self) -> f64 {
        self.linear_rate
    }

    /// Smallest grid point `S` such that `f` is nonincreasing on `[S, 1]`.
    pub fn decay_threshold(&self) -> f64 {
        self.decay_threshold
    }

    /// `max_{u in (0, 1]} f(u) / u`.
    pub fn max_ratio(&self) -> f64 {
        self.max_ratio
    }

    pub fn lipschitz_down(&self) -> f64 {
        self.lipschitz_down
    }

    /// Degenerate terms with `f'(0) = 0` have no eigenvalue characterization.
    pub fn is_degenerate(&self) -> bool {
        matches!(self.class, Class::Kpp | Class::Monostable) && self.linear_rate == 0.0
    }

    fn analytic_rate(&self) -> Option<f64> {
        match self.kind {
            Kind::Kpp { rate } => Some(self.scale * rate),
            Kind::Degenerate { .. } | Kind::Combustion { .. } | Kind::Zero => Some(0.0),
            Kind::Table { .. } => None,
        }
    }

    fn classify(&mut self) -> Result<()> {
        let n = (1.0 / SCAN_STEP).round() as usize;
        let grid: Vec<f64> = (0..=n).map(|k| self.eval(k as f64 / n as f64)).collect();
        if grid[0].abs() > 1e-12 || grid[n].abs() > 1e-12 {
            return Err(Error::config("f must vanish at 0 and 1"));
        }
        if let Some(k) = grid.iter().position(|&v| v < -1e-12) {
            return Err(Error::config(format!(
                "f is negative at u = {}",
                k as f64 / n as f64
            )));
        }
        if !grid.iter().any(|&v| v > 0.0) {
            return Err(Error::config("f vanishes identically"));
        }
        let mut s_index = n;
        while s_index > 0 && grid[s_index - 1] >= grid[s_index] {
            s_index -= 1;
        }
        self.decay_threshold = s_index as f64 / n as f64;
        if self.decay_threshold >= 1.0 || self.decay_threshold <= 0.0 {
            return Err(Error::config("decay threshold S must lie in (0, 1)"));
        }

        let mut max_ratio = 0.0f64;
        for (k, &v) in grid.iter().enumerate().skip(1) {
            max_ratio = max_ratio.max(v / (k as f64 / n as f64));
        }
        let slope0 = (grid[1] - grid[0]) / SCAN_STEP;
        self.linear_rate = self.analytic_rate().unwrap_or(slope0.max(0.0));
        self.max_ratio = max_ratio.max(self.linear_rate);

        let mut min_slope = 0.0f64;
        for w in grid.windows(2) {
            min_slope = min_slope.min((w[1] - w[0]) / SCAN_STEP);
        }
        // Secant slopes under-estimate the derivative of smooth terms by O(step).
        self.lipschitz_down = -min_slope * 1.01 + 1e-9;

        self.theta = match self.kind {
            Kind::Combustion { theta, .. } => Some(theta),
            Kind::Table { .. } => {
                let last_zero = grid
                    .iter()
                    .position(|&v| v > 0.0)
                    .map(|k| k.saturating_sub(1));
                match last_zero {
                    Some(k) if k > 0 => Some(k as f64 / n as f64),
                    _ => None,
                }
            }
            _ => None,
        };
        self.class = if let Some(theta) = self.theta {
            let ignited = grid
                .iter()
                .enumerate()
                .take_while(|(k, _)| (*k as f64 / n as f64) <= theta)
                .all(|(_, &v)| v == 0.0);
            if !ignited {
                return Err(Error::config("combustion term must vanish on [0, theta]"));
            }
            Class::Combustion
        } else if self.linear_rate > 0.0
            && grid.iter().enumerate().all(|(k, &v)| {
                v <= self.linear_rate * (k as f64 / n as f64) * (1.0 + 1e-12) + 1e-15
            })
        {
            Class::Kpp
        } else {
            Class::Monostable
        };
        Ok(())
    }
}

#[inline]
fn base_eval(kind: &Kind, u: f64) -> f64 {
    match *kind {
        Kind::Kpp { rate } => rate * u * (1.0 - u),
        Kind::Combustion { theta, shape, rate } => {
            if u <= theta {
                0.0
            } else {
                match shape {
                    CombustionShape::Quadratic => rate * (u - theta) * (1.0 - u),
                    CombustionShape::Cubic => rate * (u - theta) * u * (1.0 - u),
                }
            }
        }
        Kind::Degenerate { rate } => rate * u * u * (1.0 - u),
        Kind::Zero => 0.0,
        Kind::Table { ref values } => {
            let n = values.len() - 1;
            let x = u.clamp(0.0, 1.0) * n as f64;
            let k = (x.floor() as usize).min(n - 1);
            let t = x - k as f64;
            values[k] * (1.0 - t) + values[k + 1] * t
        }
    }
}
