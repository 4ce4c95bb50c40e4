//! Explicit monotone integrator for `u_t = a u_xx + b u_yy + f(u)` with zero-flux
//! obstacles, plus builders for initial data.

mod nonlinearity;
mod window;

use std::fmt::Write as _;
use std::sync::Arc;

pub use nonlinearity::{Class, CombustionShape, Kind, Nonlinearity, SCAN_STEP};
pub use window::{AxisMode, Window, WindowSpec, NEIGHBOR_STEPS};

use crate::geometry::PeriodicCellMask;
use crate::{Error, Result};

/// Constant diagonal diffusion `diag(a, b)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DiffusionTensor {
    pub a: f64,
    pub b: f64,
}

impl DiffusionTensor {
    pub const IDENTITY: DiffusionTensor = DiffusionTensor { a: 1.0, b: 1.0 };

    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::config(format!(
                "diffusion entries ({a}, {b}) must be positive"
            )));
        }
        Ok(DiffusionTensor { a, b })
    }

    /// `e . A e`
    pub fn quad(&self, e: (f64, f64)) -> f64 {
        self.a * e.0 * e.0 + self.b * e.1 * e.1
    }

    /// `e . A^{-1} e`
    pub fn inverse_quad(&self, e: (f64, f64)) -> f64 {
        e.0 * e.0 / self.a + e.1 * e.1 / self.b
    }
}

/// Largest step accepted by [`step`]: `0.95 dx^2 / (2 (a + b))`.
pub fn cfl_dt(dx: f64, diffusion: &DiffusionTensor) -> f64 {
    dx * dx / (2.0 * (diffusion.a + diffusion.b)) * 0.95
}

/// Step used by [`evolve`]: the CFL step, further reduced when the reaction's
/// decreasing part would otherwise break order preservation.
pub fn stable_dt(dx: f64, diffusion: &DiffusionTensor, f: &Nonlinearity) -> f64 {
    let diag = 2.0 * (diffusion.a + diffusion.b) / (dx * dx);
    cfl_dt(dx, diffusion).min(1.0 / (diag + f.lipschitz_down()))
}

/// Values of `u` on a window at time `t`. Obstacle cells hold zero.
#[derive(Debug, Clone)]
pub struct FieldState {
    pub t: f64,
    window: Arc<Window>,
    values: Vec<f64>,
}

impl FieldState {
    pub fn zeros(window: Arc<Window>) -> Self {
        let n = window.len();
        FieldState {
            t: 0.0,
            window,
            values: vec![0.0; n],
        }
    }

    /// Builds a field from a function of the cell center, evaluated on fluid cells.
    pub fn from_fn(window: Arc<Window>, g: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let mut state = FieldState::zeros(window);
        for k in 0..state.values.len() {
            if state.window.is_fluid(k) {
                let (x, y) = state.window.position(k);
                let v = g(x, y);
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::config(format!("initial value {v} outside [0, 1]")));
                }
                state.values[k] = v;
            }
        }
        Ok(state)
    }

    pub fn window(&self) -> &Arc<Window> {
        &self.window
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Sets fluid values; obstacle entries must stay zero.
    pub fn set_values(&mut self, values: Vec<f64>) -> Result<()> {
        if values.len() != self.values.len() {
            return Err(Error::config("value count does not match the window"));
        }
        if values
            .iter()
            .enumerate()
            .any(|(k, &v)| !self.window.is_fluid(k) && v != 0.0)
        {
            return Err(Error::config("obstacle cells must hold zero"));
        }
        self.values = values;
        Ok(())
    }

    /// `sum u dx^2` over the window.
    pub fn mass(&self) -> f64 {
        let dx = self.window.dx();
        self.values.iter().sum::<f64>() * dx * dx
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Value at the window cell containing `(x, y)`.
    pub fn value_at(&self, x: f64, y: f64) -> Option<f64> {
        self.window.index_at(x, y).map(|k| self.values[k])
    }

    /// Snapshot as CSV rows `x,y,u` over fluid cells in window order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,u\n");
        for (k, &v) in self.values.iter().enumerate() {
            if self.window.is_fluid(k) {
                let (x, y) = self.window.position(k);
                let _ = writeln!(out, "{x},{y},{v}");
            }
        }
        out
    }

    /// Moves the window `shift` columns along its direction; cells entering the
    /// window take `fill`.
    pub fn shift_window(&mut self, mask: &PeriodicCellMask, shift: i64, fill: f64) -> Result<()> {
        let new_window = Arc::new(self.window.shifted(mask, shift)?);
        let (na, nb) = (new_window.spec().along, new_window.spec().across);
        let mut values = vec![0.0; na * nb];
        for b in 0..nb {
            for a in 0..na {
                let k = b * na + a;
                if !new_window.is_fluid(k) {
                    continue;
                }
                let src = a as i64 + shift;
                values[k] = if (0..na as i64).contains(&src) {
                    self.values[b * na + src as usize]
                } else {
                    fill
                };
            }
        }
        self.window = new_window;
        self.values = values;
        Ok(())
    }
}

/// Reusable double-buffered stepper.
#[derive(Debug, Clone)]
pub struct Integrator {
    f: Nonlinearity,
    cx: f64,
    cy: f64,
    dt: f64,
    /// Values below this are flushed to zero, which keeps the arithmetic out of
    /// the subnormal range. The map is monotone.
    floor: f64,
    scratch: Vec<f64>,
}

impl Integrator {
    /// Fails when `dt` exceeds [`cfl_dt`].
    pub fn new(f: Nonlinearity, diffusion: DiffusionTensor, dx: f64, dt: f64) -> Result<Self> {
        let limit = cfl_dt(dx, &diffusion);
        if !(dt > 0.0) || dt > limit * (1.0 + 1e-12) {
            return Err(Error::config(format!(
                "time step {dt} violates the CFL bound {limit}"
            )));
        }
        Ok(Integrator {
            f,
            cx: diffusion.a / (dx * dx),
            cy: diffusion.b / (dx * dx),
            dt,
            floor: 1e-200,
            scratch: Vec::new(),
        })
    }

    /// Integrator with [`stable_dt`].
    pub fn stable(f: Nonlinearity, diffusion: DiffusionTensor, dx: f64) -> Result<Self> {
        let dt = stable_dt(dx, &diffusion, &f);
        Self::new(f, diffusion, dx, dt)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.f
    }

    pub fn set_floor(&mut self, floor: f64) {
        self.floor = floor;
    }

    /// Advances by the default step.
    pub fn advance(&mut self, state: &mut FieldState) {
        let dt = self.dt;
        self.advance_by(state, dt);
    }

    /// Advances by `dt <= self.dt()`.
    pub fn advance_by(&mut self, state: &mut FieldState, dt: f64) {
        debug_assert!(dt <= self.dt * (1.0 + 1e-12));
        let f = self.f.clone();
        let s = f.scale();
        match *f.kind() {
            Kind::Kpp { rate } => {
                let r = s * rate;
                self.sweep(state, dt, move |u| r * u * (1.0 - u))
            }
            Kind::Degenerate { rate } => {
                let r = s * rate;
                self.sweep(state, dt, move |u| r * u * u * (1.0 - u))
            }
            Kind::Combustion {
                theta,
                shape: CombustionShape::Quadratic,
                rate,
            } => {
                let r = s * rate;
                self.sweep(state, dt, move |u| {
                    if u > theta {
                        r * (u - theta) * (1.0 - u)
                    } else {
                        0.0
                    }
                })
            }
            Kind::Combustion {
                theta,
                shape: CombustionShape::Cubic,
                rate,
            } => {
                let r = s * rate;
                self.sweep(state, dt, move |u| {
                    if u > theta {
                        r * (u - theta) * u * (1.0 - u)
                    } else {
                        0.0
                    }
                })
            }
            Kind::Zero => self.sweep(state, dt, |_| 0.0),
            Kind::Table { .. } => self.sweep(state, dt, |u| f.eval(u)),
        }
        state.t += dt;
    }

    #[inline(always)]
    fn sweep(&mut self, state: &mut FieldState, dt: f64, reaction: impl Fn(f64) -> f64) {
        let window = Arc::clone(&state.window);
        let u = &state.values;
        if self.scratch.len() != u.len() {
            self.scratch = vec![0.0; u.len()];
        }
        let out = &mut self.scratch;
        let (cx, cy, floor) = (self.cx, self.cy, self.floor);
        for (&k, nb) in window.active().iter().zip(window.neighbors()) {
            let k = k as usize;
            let uk = u[k];
            let lap = cx * ((u[nb[0] as usize] - uk) + (u[nb[1] as usize] - uk))
                + cy * ((u[nb[2] as usize] - uk) + (u[nb[3] as usize] - uk));
            let v = uk + dt * (lap + reaction(uk));
            out[k] = if v < floor { 0.0 } else { v };
        }
        for &k in window.frozen() {
            out[k as usize] = u[k as usize];
        }
        std::mem::swap(&mut state.values, &mut self.scratch);
    }
}

/// One explicit Euler step. Rejects `dt` above [`cfl_dt`].
pub fn step(
    state: &FieldState,
    f: &Nonlinearity,
    diffusion: &DiffusionTensor,
    dt: f64,
) -> Result<FieldState> {
    let mut integrator = Integrator::new(f.clone(), *diffusion, state.window.dx(), dt)?;
    let mut next = state.clone();
    integrator.advance(&mut next);
    Ok(next)
}

/// Advances `state` to `state.t + horizon` with [`stable_dt`], calling
/// `observer` after landing exactly on each of `sample_times` (absolute times,
/// increasing). The observer may stop the run early by returning `Ok(false)`.
pub fn evolve(
    state: &mut FieldState,
    integrator: &mut Integrator,
    horizon: f64,
    sample_times: &[f64],
    mut observer: impl FnMut(&FieldState) -> Result<bool>,
) -> Result<()> {
    if !(horizon > 0.0) {
        return Err(Error::config(format!("horizon {horizon} must be positive")));
    }
    if sample_times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::config("sample times must be increasing"));
    }
    let t_end = state.t + horizon;
    let tol = 1e-12 * t_end.abs().max(1.0);
    let mut stops: Vec<(f64, bool)> = sample_times
        .iter()
        .filter(|&&t| t > state.t + tol && t <= t_end + tol)
        .map(|&t| (t.min(t_end), true))
        .collect();
    if stops.last().is_none_or(|&(t, _)| t < t_end - tol) {
        stops.push((t_end, false));
    }
    let dt = integrator.dt();
    for (stop, observe) in stops {
        while state.t < stop - tol {
            let remaining = stop - state.t;
            if remaining <= dt * (1.0 + 1e-9) {
                integrator.advance_by(state, remaining);
                state.t = stop;
            } else {
                integrator.advance(state);
            }
        }
        if observe && !observer(state)? {
            return Ok(());
        }
    }
    Ok(())
}

/// `u0 = eta` on fluid cells of the disc `B_r(center)`, zero elsewhere.
pub fn initial_bump(
    window: Arc<Window>,
    mask: &PeriodicCellMask,
    eta: f64,
    r: f64,
    center: (f64, f64),
) -> Result<FieldState> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::config(format!("level {eta} outside [0, 1]")));
    }
    check_fluid_point(mask, center)?;
    FieldState::from_fn(window, |x, y| {
        if (x - center.0).hypot(y - center.1) <= r {
            eta
        } else {
            0.0
        }
    })
}

/// `u0 = 1` where `x . e <= offset`, zero elsewhere.
pub fn initial_half_space(window: Arc<Window>, e: (f64, f64), offset: f64) -> Result<FieldState> {
    let n = e.0.hypot(e.1);
    if !(n > 0.0) {
        return Err(Error::config("half-space normal must be nonzero"));
    }
    let e = (e.0 / n, e.1 / n);
    FieldState::from_fn(window, |x, y| {
        if x * e.0 + y * e.1 <= offset {
            1.0
        } else {
            0.0
        }
    })
}

pub(crate) fn check_fluid_point(mask: &PeriodicCellMask, p: (f64, f64)) -> Result<()> {
    let (i, j) = mask.cell_of(p.0, p.1);
    if mask.is_fluid(i, j) {
        Ok(())
    } else {
        Err(Error::InObstacle { x: p.0, y: p.1 })
    }
}
