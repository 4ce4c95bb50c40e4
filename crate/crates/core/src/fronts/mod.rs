//! Critical front speeds `c*(e)`.
//!
//! Three routes: the principal eigenvalue formula `min_l k(l e) / l` for KPP
//! reactions, the drift of the level set `u = 1/2` on a co-moving strip for any
//! reaction, and the closed form `2 sqrt(r e.Ae)` on the free plane.

mod eigen;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use serde::Serialize;

pub use eigen::{kpp_eigenvalue, EigenEstimate, EigenSolver};

use crate::dynamics::{
    evolve, initial_half_space, AxisMode, Class, DiffusionTensor, FieldState, Integrator,
    Nonlinearity, Window, WindowSpec,
};
use crate::geometry::PeriodicCellMask;
use crate::lattice::{primitive, rational_direction};
use crate::{Error, Result};

const GOLDEN: f64 = 0.618_033_988_749_894_8;

/// Result of the minimization of `k(l e) / l` over `l > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalSpeed {
    pub speed: f64,
    /// Minimizing decay rate.
    pub lambda: f64,
    pub evaluations: usize,
    /// Whether the prescan had to widen `log l` from `[-4, 4]` to `[-8, 8]`.
    pub widened: bool,
}

/// Minimizes `k(l e) / l` with a 64-point prescan of `log l` followed by a
/// golden-section refinement to relative width `1e-6` in `l`.
pub fn minimize_speed(solver: &mut EigenSolver, e: (f64, f64)) -> Result<CriticalSpeed> {
    let n = e.0.hypot(e.1);
    if !(n > 0.0) {
        return Err(Error::config("direction must be nonzero"));
    }
    let e = (e.0 / n, e.1 / n);
    let mut evaluations = 0;
    let mut best = (f64::INFINITY, 0.0);
    let mut quotient = |x: f64, solver: &mut EigenSolver| -> Result<f64> {
        let lambda = x.exp();
        let g = solver.eigenvalue(e, lambda)?.k / lambda;
        evaluations += 1;
        if g < best.0 {
            best = (g, x);
        }
        Ok(g)
    };

    let mut widened = false;
    let (mut a, mut b) = loop {
        let half = if widened { 8.0 } else { 4.0 };
        let xs: Vec<f64> = (0..64)
            .map(|i| -half + 2.0 * half * i as f64 / 63.0)
            .collect();
        solver.reset();
        let mut gs = Vec::with_capacity(64);
        for &x in &xs {
            gs.push(quotient(x, solver)?);
        }
        let imin = (0..64).fold(0, |m, i| if gs[i] < gs[m] { i } else { m });
        if imin > 0 && imin < 63 {
            break (xs[imin - 1], xs[imin + 1]);
        }
        if widened {
            return Err(Error::NonConvergence(format!(
                "minimizer of k(l e)/l at the edge of log l in [-8, 8] for e = ({}, {})",
                e.0, e.1
            )));
        }
        widened = true;
    };

    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let mut gc = quotient(c, solver)?;
    let mut gd = quotient(d, solver)?;
    while b - a > 1e-6 {
        if gc <= gd {
            b = d;
            d = c;
            gd = gc;
            c = b - GOLDEN * (b - a);
            gc = quotient(c, solver)?;
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + GOLDEN * (b - a);
            gd = quotient(d, solver)?;
        }
    }
    Ok(CriticalSpeed {
        speed: best.0,
        lambda: best.1.exp(),
        evaluations,
        widened,
    })
}

fn require_kpp(f: &Nonlinearity) -> Result<f64> {
    if f.class() != Class::Kpp {
        return Err(Error::config(format!(
            "the eigenvalue route needs a KPP reaction, got {:?}",
            f.class()
        )));
    }
    Ok(f.linear_rate())
}

/// `c*(e) = min_l k(l e) / l` for a KPP reaction.
pub fn kpp_front_speed(
    mask: &PeriodicCellMask,
    f: &Nonlinearity,
    diffusion: &DiffusionTensor,
    e: (f64, f64),
) -> Result<CriticalSpeed> {
    let rate = require_kpp(f)?;
    let mut solver = EigenSolver::new(mask, diffusion, rate)?;
    minimize_speed(&mut solver, e)
}

/// `2 sqrt(r e.Ae)`, the critical speed on the free plane.
pub fn closed_form_speed(diffusion: &DiffusionTensor, r: f64, e: (f64, f64)) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::config(format!("rate {r} must be positive")));
    }
    let n = e.0.hypot(e.1);
    if !(n > 0.0) {
        return Err(Error::config("direction must be nonzero"));
    }
    Ok(2.0 * (r * diffusion.quad((e.0 / n, e.1 / n))).sqrt())
}

/// Strip geometry and duration of an empirical speed run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrontOptions {
    pub horizon: f64,
    /// Interval between front position samples.
    pub sample_dt: f64,
    /// Length kept behind the front.
    pub behind: f64,
    /// Length kept ahead of the front.
    pub ahead: f64,
    /// Level whose position defines the front.
    pub level: f64,
}

impl Default for FrontOptions {
    fn default() -> Self {
        FrontOptions {
            horizon: 40.0,
            sample_dt: 0.5,
            behind: 15.0,
            ahead: 25.0,
            level: 0.5,
        }
    }
}

/// Level-set drift measured on a co-moving strip.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalSpeed {
    pub direction: (i64, i64),
    pub speed: f64,
    /// Standard error of the fitted slope.
    pub stderr: f64,
    /// `(t, rho(t))` samples of the front position along the direction.
    pub positions: Vec<(f64, f64)>,
    /// No measurable motion: the direction looks blocked.
    pub stalled: bool,
    /// The strip had to be lengthened once.
    pub extended: bool,
}

/// Along coordinate of the farthest window column holding a value above `level`.
fn front_position(state: &FieldState, level: f64) -> Option<f64> {
    let w = state.window();
    let e = w.unit_direction();
    let mut rho: Option<f64> = None;
    for (k, &v) in state.values().iter().enumerate() {
        if v > level {
            let (x, y) = w.position(k);
            let s = x * e.0 + y * e.1;
            rho = Some(rho.map_or(s, |r: f64| r.max(s)));
        }
    }
    rho
}

/// Along coordinate of window column `a`.
fn column_coordinate(w: &Window, a: usize) -> f64 {
    let e = w.unit_direction();
    let (i, j) = w.global(a, 0);
    let dx = w.dx();
    (i as f64 + 0.5) * dx * e.0 + (j as f64 + 0.5) * dx * e.1
}

/// Same origin, `along` columns; new columns take zero.
fn lengthen(state: &mut FieldState, mask: &PeriodicCellMask, along: usize) -> Result<()> {
    let old = state.window().clone();
    let mut spec = *old.spec();
    spec.along = along;
    let window = Arc::new(Window::new(mask, spec)?);
    let (na_old, na) = (old.spec().along, along);
    let mut values = vec![0.0; na * spec.across];
    for b in 0..spec.across {
        for a in 0..na_old.min(na) {
            values[b * na + a] = state.values()[b * na_old + a];
        }
    }
    let t = state.t;
    *state = FieldState::zeros(window);
    state.set_values(values)?;
    state.t = t;
    Ok(())
}

/// Least-squares slope of `(t, y)` and its standard error.
pub fn fit_slope(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    let n = points.len();
    if n < 3 {
        return None;
    }
    let nf = n as f64;
    let mt = points.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = points.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = points.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    if !(sxx > 0.0) {
        return None;
    }
    let slope = sxy / sxx;
    let ssr: f64 = points
        .iter()
        .map(|p| (p.1 - my - slope * (p.0 - mt)).powi(2))
        .sum();
    Some((slope, (ssr / (nf - 2.0) / sxx).sqrt()))
}

/// Speed of the level set `u = level` started from a half-space on a strip
/// aligned with the integer direction `(p, q)`.
///
/// The strip is periodic across the direction and clamped along it; it is
/// translated with the front so that `behind` and `ahead` lengths are kept.
/// The speed is the least-squares slope of the front position over the last
/// half of the run.
pub fn empirical_front_speed(
    mask: &PeriodicCellMask,
    f: &Nonlinearity,
    diffusion: &DiffusionTensor,
    direction: (i64, i64),
    opts: &FrontOptions,
) -> Result<EmpiricalSpeed> {
    let (p, q) = direction;
    if (p, q) == (0, 0) || p.abs() > 8 || q.abs() > 8 {
        return Err(Error::config(format!(
            "direction ({p}, {q}) must be a nonzero integer vector with entries in [-8, 8]"
        )));
    }
    let direction = primitive(p, q);
    if !(opts.horizon > 0.0 && opts.sample_dt > 0.0 && opts.behind > 0.0 && opts.ahead > 0.0) {
        return Err(Error::config(
            "front run lengths and times must be positive",
        ));
    }
    if !(opts.level > 0.0 && opts.level < 1.0) {
        return Err(Error::config(format!(
            "level {} outside (0, 1)",
            opts.level
        )));
    }
    let dx = mask.dx();
    let across = Window::across_period(mask, direction);
    let probe = Window::new(
        mask,
        WindowSpec {
            direction,
            origin: (0, 0),
            along: 1,
            across,
            along_mode: AxisMode::Clamped,
            across_mode: AxisMode::Periodic,
        },
    )?;
    let step = probe.along_step();
    let along = ((opts.behind + opts.ahead) / step).ceil() as usize + 1;
    let rear = (opts.behind / step).round() as i64;
    let spec = WindowSpec {
        along,
        ..*probe.spec()
    };
    let window = Window::new(mask, spec)?.shifted(mask, -rear)?;
    let e = window.unit_direction();
    let mut state = initial_half_space(Arc::new(window), e, 0.0)?;

    // Cap the sampling interval so the front cannot cross a quarter of the
    // lead length between two samples.
    let bound = 2.0 * (f.max_ratio() * diffusion.a.max(diffusion.b)).sqrt();
    let sample_dt = opts.sample_dt.min(0.25 * opts.ahead / bound.max(1e-12));
    let mut integrator = Integrator::stable(f.clone(), *diffusion, dx)?;
    let mut positions = Vec::new();
    let mut extended = false;
    let level = opts.level;
    let n_samples = (opts.horizon / sample_dt).ceil() as usize;
    for s in 1..=n_samples {
        let target = (s as f64 * sample_dt).min(opts.horizon);
        let span = target - state.t;
        evolve(&mut state, &mut integrator, span, &[], |_| Ok(true))?;
        let rho = front_position(&state, level)
            .ok_or_else(|| Error::NonConvergence(format!("front vanished at t = {}", state.t)))?;
        positions.push((state.t, rho));
        let w = state.window().clone();
        let (s_rear, s_far) = (
            column_coordinate(&w, 0),
            column_coordinate(&w, w.spec().along - 1),
        );
        if s_far - rho < 0.25 * opts.ahead {
            if extended {
                return Err(Error::FrontHitsEdge { t: state.t });
            }
            let longer = w.spec().along + w.spec().along / 2;
            lengthen(&mut state, mask, longer)?;
            extended = true;
            continue;
        }
        if rho - s_rear < 0.25 * opts.behind {
            return Err(Error::FrontHitsEdge { t: state.t });
        }
        // Recenter so that `behind` is kept.
        let shift = ((rho - s_rear - opts.behind) / step).floor() as i64;
        if s_far - rho < 0.75 * opts.ahead && shift > 0 {
            state.shift_window(mask, shift, 0.0)?;
        }
    }
    let tail: Vec<(f64, f64)> = positions
        .iter()
        .copied()
        .filter(|&(t, _)| t >= 0.5 * opts.horizon)
        .collect();
    let (speed, stderr) = fit_slope(&tail).ok_or_else(|| {
        Error::NonConvergence("too few front samples in the last half of the run".into())
    })?;
    // Motion below one cell over the fitted interval counts as no motion.
    let stalled = speed * 0.5 * opts.horizon < dx;
    Ok(EmpiricalSpeed {
        direction,
        speed,
        stderr,
        positions,
        stalled,
        extended,
    })
}

/// Route used for a speed profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Eigenvalue,
    Empirical,
    ClosedForm,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Eigenvalue => "eigenvalue",
            Method::Empirical => "empirical",
            Method::ClosedForm => "closed_form",
        }
    }
}

/// `c*` sampled on a set of directions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpeedProfile {
    /// Angles in `[0, 2 pi)`, strictly increasing.
    angles: Vec<f64>,
    speeds: Vec<f64>,
    stderr: Vec<Option<f64>>,
    /// Entries filled from neighbors rather than measured.
    interpolated: Vec<bool>,
    method: Method,
    pub metadata: BTreeMap<String, String>,
}

impl SpeedProfile {
    pub fn new(angles: Vec<f64>, speeds: Vec<f64>, method: Method) -> Result<Self> {
        let n = angles.len();
        Self::with_details(angles, speeds, vec![None; n], vec![false; n], method)
    }

    pub fn with_details(
        angles: Vec<f64>,
        speeds: Vec<f64>,
        stderr: Vec<Option<f64>>,
        interpolated: Vec<bool>,
        method: Method,
    ) -> Result<Self> {
        let n = angles.len();
        if n == 0 || speeds.len() != n || stderr.len() != n || interpolated.len() != n {
            return Err(Error::config(
                "profile columns must be nonempty and of equal length",
            ));
        }
        if angles
            .iter()
            .any(|&a| !(0.0..std::f64::consts::TAU).contains(&a))
            || angles.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(Error::config(
                "profile angles must be strictly increasing in [0, 2 pi)",
            ));
        }
        if let Some(s) = speeds.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
            return Err(Error::config(format!("profile speed {s} is not positive")));
        }
        Ok(SpeedProfile {
            angles,
            speeds,
            stderr,
            interpolated,
            method,
            metadata: BTreeMap::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn speeds(&self) -> &[f64] {
        &self.speeds
    }

    pub fn stderr(&self) -> &[Option<f64>] {
        &self.stderr
    }

    pub fn interpolated(&self) -> &[bool] {
        &self.interpolated
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn direction(&self, i: usize) -> (f64, f64) {
        let a = self.angles[i];
        (a.cos(), a.sin())
    }

    /// Rows `theta,ex,ey,speed,method,stderr`; interpolated rows carry the
    /// method `interpolated` and no standard error.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("theta,ex,ey,speed,method,stderr\n");
        for i in 0..self.len() {
            let (ex, ey) = self.direction(i);
            let method = if self.interpolated[i] {
                "interpolated"
            } else {
                self.method.name()
            };
            let err = self.stderr[i].map(|s| s.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{ex},{ey},{},{method},{err}",
                self.angles[i], self.speeds[i]
            );
        }
        out
    }

    pub fn metadata_json(&self) -> Result<String> {
        let mut meta = self.metadata.clone();
        meta.insert("method".into(), self.method.name().into());
        meta.insert("directions".into(), self.len().to_string());
        Ok(serde_json::to_string_pretty(&meta)?)
    }
}

/// `n` equally spaced angles starting at zero.
pub fn uniform_angles(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| std::f64::consts::TAU * i as f64 / n as f64)
        .collect()
}

/// Knobs for [`sample_profile`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ProfileOptions {
    pub front: FrontOptions,
    /// Eigen solver tolerance; `None` keeps the default `1e-8`.
    pub eigen_tolerance: Option<f64>,
}

/// Critical speeds on the directions `angles` (radians, strictly increasing in
/// `[0, 2 pi)`).
///
/// The empirical route only measures directions proportional to integer
/// vectors with entries up to 8; the others are filled with the smaller of
/// the two neighboring measured values and flagged as interpolated. Those
/// entries are placeholders, not speed claims.
pub fn sample_profile(
    mask: &PeriodicCellMask,
    f: &Nonlinearity,
    diffusion: &DiffusionTensor,
    angles: &[f64],
    method: Method,
    opts: &ProfileOptions,
) -> Result<SpeedProfile> {
    let n = angles.len();
    let mut speeds = vec![f64::NAN; n];
    let mut stderr = vec![None; n];
    let mut interpolated = vec![false; n];
    let mut metadata = BTreeMap::new();
    metadata.insert("mask".to_string(), mask.id());
    metadata.insert("nonlinearity".to_string(), format!("{:?}", f.kind()));
    metadata.insert("scale".to_string(), f.scale().to_string());
    metadata.insert("dx".to_string(), mask.dx().to_string());
    metadata.insert(
        "diffusion".to_string(),
        format!("diag({}, {})", diffusion.a, diffusion.b),
    );
    metadata.insert(
        "lower_semicontinuity".to_string(),
        "not checked: finitely many directions".to_string(),
    );
    match method {
        Method::ClosedForm => {
            if mask.obstacle_count() > 0 {
                return Err(Error::config(
                    "the closed form holds on the free plane only",
                ));
            }
            let r = require_kpp(f)?;
            for (i, &a) in angles.iter().enumerate() {
                speeds[i] = closed_form_speed(diffusion, r, (a.cos(), a.sin()))?;
            }
        }
        Method::Eigenvalue => {
            let rate = require_kpp(f)?;
            let mut solver = EigenSolver::new(mask, diffusion, rate)?;
            let tol = opts.eigen_tolerance.unwrap_or(solver.tolerance);
            solver.tolerance = tol;
            metadata.insert("eigen_tolerance".to_string(), tol.to_string());
            metadata.insert("lambda_relative_width".to_string(), "1e-6".to_string());
            for (i, &a) in angles.iter().enumerate() {
                speeds[i] = minimize_speed(&mut solver, (a.cos(), a.sin()))?.speed;
            }
        }
        Method::Empirical => {
            metadata.insert("horizon".to_string(), opts.front.horizon.to_string());
            metadata.insert("level".to_string(), opts.front.level.to_string());
            for (i, &a) in angles.iter().enumerate() {
                let Some(dir) = rational_direction((a.cos(), a.sin()), 8, 1e-9) else {
                    interpolated[i] = true;
                    continue;
                };
                let run = empirical_front_speed(mask, f, diffusion, dir, &opts.front)?;
                if run.stalled {
                    return Err(Error::NonConvergence(format!(
                        "no front motion in direction ({}, {})",
                        dir.0, dir.1
                    )));
                }
                speeds[i] = run.speed;
                stderr[i] = Some(run.stderr);
            }
            if interpolated.iter().all(|&b| b) {
                return Err(Error::config(
                    "no direction is proportional to an integer vector with entries up to 8",
                ));
            }
            for i in 0..n {
                if !interpolated[i] {
                    continue;
                }
                let prev = (1..n)
                    .map(|k| (i + n - k) % n)
                    .find(|&k| !interpolated[k])
                    .map(|k| speeds[k]);
                let next = (1..n)
                    .map(|k| (i + k) % n)
                    .find(|&k| !interpolated[k])
                    .map(|k| speeds[k]);
                speeds[i] = match (prev, next) {
                    (Some(a), Some(b)) => a.min(b),
                    (Some(a), None) | (None, Some(a)) => a,
                    (None, None) => unreachable!("at least one direction was measured"),
                };
            }
        }
    }
    let mut profile =
        SpeedProfile::with_details(angles.to_vec(), speeds, stderr, interpolated, method)?;
    profile.metadata = metadata;
    Ok(profile)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_free_plane, build_holes_domain};
    use approx::assert_relative_eq;

    #[test]
    fn free_plane_eigen_speed() {
        let m = build_free_plane((1.0, 1.0), 0.1).unwrap();
        let f = Nonlinearity::kpp(1.0).unwrap();
        let c = kpp_front_speed(&m, &f, &DiffusionTensor::IDENTITY, (1.0, 0.0)).unwrap();
        assert_relative_eq!(c.speed, 2.0, epsilon = 1e-8);
        assert_relative_eq!(c.lambda, 1.0, epsilon = 1e-5);
        assert!(!c.widened);
    }

    #[test]
    fn anisotropic_eigen_speed_matches_dense_scan() {
        let m = build_free_plane((1.0, 1.0), 0.1).unwrap();
        let f = Nonlinearity::kpp(1.0).unwrap();
        let a = DiffusionTensor::new(4.0, 1.0).unwrap();
        let dense = |q: f64| {
            (1..200_000)
                .map(|i| i as f64 * 1e-4)
                .map(|l| (l * l * q + 1.0) / l)
                .fold(f64::INFINITY, f64::min)
        };
        let cx = kpp_front_speed(&m, &f, &a, (1.0, 0.0)).unwrap().speed;
        let cy = kpp_front_speed(&m, &f, &a, (0.0, 1.0)).unwrap().speed;
        assert_relative_eq!(cx, dense(4.0), epsilon = 1e-6);
        assert_relative_eq!(cy, dense(1.0), epsilon = 1e-6);
    }

    #[test]
    fn eigen_speed_requires_kpp() {
        let m = build_free_plane((1.0, 1.0), 0.1).unwrap();
        let f = Nonlinearity::combustion(0.25, crate::dynamics::CombustionShape::Quadratic, 1.0)
            .unwrap();
        assert!(kpp_front_speed(&m, &f, &DiffusionTensor::IDENTITY, (1.0, 0.0)).is_err());
    }

    #[test]
    fn holes_lower_the_speed() {
        let m = build_holes_domain(0.8, 0.2, 0.05).unwrap();
        let f = Nonlinearity::kpp(1.0).unwrap();
        let c = kpp_front_speed(&m, &f, &DiffusionTensor::IDENTITY, (1.0, 0.0)).unwrap();
        assert!(c.speed < 2.0 * 1.01 && c.speed > 1.0, "{}", c.speed);
    }

    #[test]
    fn closed_forms() {
        let a = DiffusionTensor::new(4.0, 1.0).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert_relative_eq!(
            closed_form_speed(&a, 1.0, (s, s)).unwrap(),
            2.0 * 2.5f64.sqrt()
        );
        assert_relative_eq!(
            closed_form_speed(&DiffusionTensor::IDENTITY, 4.0, (0.3, 0.1)).unwrap(),
            4.0
        );
        assert!(closed_form_speed(&a, 0.0, (1.0, 0.0)).is_err());
    }

    #[test]
    fn slope_fit_recovers_line() {
        let pts: Vec<_> = (0..10).map(|i| (i as f64, 3.0 * i as f64 - 1.0)).collect();
        let (s, e) = fit_slope(&pts).unwrap();
        assert_relative_eq!(s, 3.0, epsilon = 1e-12);
        assert!(e < 1e-10);
    }

    #[test]
    fn empirical_kpp_speed_on_free_plane() {
        let m = build_free_plane((1.0, 1.0), 0.1).unwrap();
        let f = Nonlinearity::kpp(1.0).unwrap();
        let run = empirical_front_speed(
            &m,
            &f,
            &DiffusionTensor::IDENTITY,
            (1, 0),
            &FrontOptions::default(),
        )
        .unwrap();
        assert!((run.speed - 2.0).abs() < 0.1, "{}", run.speed);
        assert!(!run.stalled);
    }

    #[test]
    fn empirical_diagonal_strip_matches_axis_strip() {
        let m = build_free_plane((1.0, 1.0), 0.1).unwrap();
        let f = Nonlinearity::combustion(0.25, crate::dynamics::CombustionShape::Quadratic, 1.0)
            .unwrap();
        let opts = FrontOptions {
            horizon: 30.0,
            ..FrontOptions::default()
        };
        let a = DiffusionTensor::IDENTITY;
        let x = empirical_front_speed(&m, &f, &a, (1, 0), &opts).unwrap();
        let d = empirical_front_speed(&m, &f, &a, (1, 1), &opts).unwrap();
        // the 5-point scheme is mildly anisotropic at this resolution
        assert!(
            (x.speed - d.speed).abs() < 0.05 * x.speed,
            "{} {}",
            x.speed,
            d.speed
        );
    }

    #[test]
    fn profile_invariants() {
        assert!(SpeedProfile::new(vec![0.0, 0.0], vec![1.0, 1.0], Method::Empirical).is_err());
        assert!(SpeedProfile::new(vec![0.0, 1.0], vec![1.0, 0.0], Method::Empirical).is_err());
        let m = build_free_plane((1.0, 1.0), 0.1).unwrap();
        let f = Nonlinearity::kpp(1.0).unwrap();
        let a = DiffusionTensor::new(4.0, 1.0).unwrap();
        let p = sample_profile(
            &m,
            &f,
            &a,
            &uniform_angles(8),
            Method::ClosedForm,
            &Default::default(),
        )
        .unwrap();
        for i in 0..8 {
            let t = p.angles()[i];
            assert_relative_eq!(
                p.speeds()[i],
                2.0 * (4.0 * t.cos().powi(2) + t.sin().powi(2)).sqrt(),
                epsilon = 1e-12
            );
        }
        assert!(p.to_csv().lines().count() == 9);
    }
}
