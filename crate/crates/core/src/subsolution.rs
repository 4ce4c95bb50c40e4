//! Explicit radial subsolution for combustion reactions.
//!
//! The profile `h` is constant `C` on `[0, R1]`, the parabola
//! `C - alpha/2 (r - R1)^2` on `[R1, R2]`, and `beta (exp(-ct (r - R3)) - 1)` on
//! `[R2, R3]`, with `ct = c + 1/R1`. It satisfies
//! `h'' + ct h' + f(h) >= 0`, so `phi(x) = h(|x|)` satisfies
//! `Delta phi + c d_x phi + f(phi) >= 0` on `B_R3`.

use std::fmt::Write as _;
use std::sync::Arc;

use serde::Serialize;

use crate::dynamics::{Class, FieldState, Nonlinearity, Window};
use crate::geometry::PeriodicCellMask;
use crate::{Error, Result};

/// Step of the grid scan in [`infimum_f`].
pub const SCAN_STEP: f64 = 1e-5;

/// Radii beyond which a bump is flagged as impractical to simulate.
pub const IMPRACTICAL_RADIUS: f64 = 1e4;

/// `inf_{s in (K, C)} f(s)` by a grid scan of step `1e-5` including both ends.
pub fn infimum_f(f: &Nonlinearity, k: f64, c: f64) -> Result<f64> {
    let theta = combustion_theta(f)?;
    if !(theta < k && k < c && c < 1.0) {
        return Err(Error::config(format!(
            "need theta < K < C < 1, got theta = {theta}, K = {k}, C = {c}"
        )));
    }
    let n = ((c - k) / SCAN_STEP).ceil() as usize;
    let inf = (0..=n)
        .map(|i| f.eval(if i == n { c } else { k + i as f64 * SCAN_STEP }))
        .fold(f64::INFINITY, f64::min);
    if !(inf > 0.0) {
        return Err(Error::config(format!(
            "f vanishes on [{k}, {c}] (infimum {inf})"
        )));
    }
    Ok(inf)
}

fn combustion_theta(f: &Nonlinearity) -> Result<f64> {
    match (f.class(), f.theta()) {
        (Class::Combustion, Some(t)) => Ok(t),
        _ => Err(Error::config(format!(
            "the subsolution needs a combustion reaction, got {:?}",
            f.class()
        ))),
    }
}

/// Parameters and profile of the radial subsolution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsolutionBump {
    pub theta: f64,
    #[serde(rename = "C")]
    pub plateau: f64,
    #[serde(rename = "K")]
    pub matching: f64,
    #[serde(rename = "F")]
    pub f_inf: f64,
    pub alpha: f64,
    pub c: f64,
    pub beta: f64,
    #[serde(rename = "R1")]
    pub r1: f64,
    #[serde(rename = "R2")]
    pub r2: f64,
    #[serde(rename = "R3")]
    pub r3: f64,
    #[serde(skip)]
    pub c_tilde: f64,
    /// `R2 - R1` and `R3 - R2`, kept exactly rather than recovered by subtraction.
    #[serde(skip)]
    widths: (f64, f64),
    /// Radii too large for a desk-scale simulation.
    #[serde(skip)]
    pub impractical: bool,
    #[serde(skip)]
    f: Nonlinearity,
}

/// Default plateau `C = (theta + 1 + S) / 2` and matching level `K = (theta + C) / 2`.
pub fn default_levels(f: &Nonlinearity) -> Result<(f64, f64)> {
    let theta = combustion_theta(f)?;
    let s = f.decay_threshold();
    let c = (0.5 * (theta + 1.0 + s)).clamp(theta + 1e-9, 1.0 - 1e-9);
    Ok((c, 0.5 * (theta + c)))
}

/// Builds the bump for plateau `C` and matching level `K`.
///
/// `beta` is fixed by the slope match at `R2`,
/// `alpha (R2 - R1) = beta ct exp(ct (R3 - R2)) = ct (beta + K)`, that is
/// `beta = alpha (R2 - R1) / ct - K`.
pub fn construct(f: &Nonlinearity, plateau: f64, matching: f64) -> Result<SubsolutionBump> {
    let theta = combustion_theta(f)?;
    let (cc, k) = (plateau, matching);
    let big_f = infimum_f(f, k, cc)?;
    let alpha = big_f / (1.0 + (cc - k) / (2.0 * k));
    let c = (2.0 * alpha * (cc - k)).sqrt() / (8.0 * k);
    let r1 = 1.0 / c;
    let c_tilde = c + 1.0 / r1;
    let d12 = (2.0 * (cc - k) / alpha).sqrt();
    let r2 = d12 + r1;
    let beta = alpha * d12 / c_tilde - k;
    if !(beta > 0.0) {
        return Err(Error::config(format!(
            "beta = {beta} is not positive: alpha (R2 - R1) = {} does not exceed ct K = {}",
            alpha * d12,
            c_tilde * k
        )));
    }
    let d23 = (1.0 + k / beta).ln() / (2.0 * c);
    let r3 = d23 + r2;
    let bump = SubsolutionBump {
        theta,
        plateau: cc,
        matching: k,
        f_inf: big_f,
        alpha,
        c,
        beta,
        r1,
        r2,
        r3,
        c_tilde,
        widths: (d12, d23),
        impractical: r3 > IMPRACTICAL_RADIUS,
        f: f.clone(),
    };
    let res = bump.residuals();
    if let Some((i, r)) = res.iter().enumerate().find(|(_, r)| !(r.abs() <= 1e-12)) {
        return Err(Error::NonConvergence(format!(
            "relation {} of the algebraic system has residual {r}",
            i + 1
        )));
    }
    if !(0.0 < r1 && r1 < r2 && r2 < r3) {
        return Err(Error::config(format!(
            "radii out of order: R1 = {r1}, R2 = {r2}, R3 = {r3}"
        )));
    }
    Ok(bump)
}

/// Junction and per-piece checks of a bump.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub h_step: f64,
    /// Worst `h'' + ct h' + f(h)` on the plateau, parabola and exponential pieces.
    pub worst_margin: [f64; 3],
    /// Radius of each worst margin.
    pub worst_at: [f64; 3],
    /// `|h(R2) - K|`.
    pub matching_error: f64,
    /// Value jumps at `R1`, `R2`, `R3` (the last against zero).
    pub continuity_error: [f64; 3],
    /// Slope jumps at `R1` and `R2`.
    pub slope_error: [f64; 2],
    pub residuals: [f64; 4],
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.worst_margin.iter().all(|&m| m >= -1e-8)
            && self.matching_error <= 1e-12
            && self.continuity_error.iter().all(|&e| e <= 1e-12)
            && self.slope_error.iter().all(|&e| e <= 1e-12)
            && self.residuals.iter().all(|r| r.abs() <= 1e-12)
    }
}

impl SubsolutionBump {
    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.f
    }

    /// Relative residuals of the four relations; the fourth is the equality
    /// `F = alpha (1 + ct (R2 - R1))`.
    pub fn residuals(&self) -> [f64; 4] {
        let (a, b, ct, k, cc) = (
            self.alpha,
            self.beta,
            self.c_tilde,
            self.matching,
            self.plateau,
        );
        let (d, d23) = self.widths;
        let e = (ct * d23).exp();
        [
            (b * (e - 1.0) - k) / k,
            (0.5 * a * d * d - (cc - k)) / (cc - k),
            (a * d - b * ct * e) / (a * d),
            (self.f_inf - a * (1.0 + ct * d)) / self.f_inf,
        ]
    }

    fn piece(&self, r: f64) -> usize {
        if r <= self.r1 {
            0
        } else if r <= self.r2 {
            1
        } else {
            2
        }
    }

    fn eval_piece(&self, piece: usize, r: f64) -> (f64, f64, f64) {
        match piece {
            0 => (self.plateau, 0.0, 0.0),
            1 => {
                let s = r - self.r1;
                (
                    self.plateau - 0.5 * self.alpha * s * s,
                    -self.alpha * s,
                    -self.alpha,
                )
            }
            _ => {
                let ct = self.c_tilde;
                let e = (-ct * (r - self.r3)).exp();
                (
                    self.beta * (e - 1.0),
                    -self.beta * ct * e,
                    self.beta * ct * ct * e,
                )
            }
        }
    }

    /// `h(r)`, zero beyond `R3`.
    pub fn h(&self, r: f64) -> f64 {
        if r >= self.r3 {
            0.0
        } else {
            self.eval_piece(self.piece(r), r).0
        }
    }

    /// `(h, h', h'')` from the piece containing `r` (left piece at junctions).
    pub fn derivatives(&self, r: f64) -> (f64, f64, f64) {
        self.eval_piece(self.piece(r), r)
    }

    /// Checks the differential inequality on a grid of step `h_step` with the
    /// exact piecewise derivatives, and the junction conditions.
    pub fn verify(&self, h_step: f64) -> Result<VerifyReport> {
        if !(h_step > 0.0 && h_step <= self.r1 / 100.0) {
            return Err(Error::config(format!(
                "grid step {h_step} must lie in (0, R1 / 100 = {}]",
                self.r1 / 100.0
            )));
        }
        let mut worst = [f64::INFINITY; 3];
        let mut worst_at = [0.0; 3];
        let n = (self.r3 / h_step).ceil() as usize;
        for i in 1..n {
            let r = i as f64 * h_step;
            let p = self.piece(r);
            let (h, d1, d2) = self.eval_piece(p, r);
            let m = d2 + self.c_tilde * d1 + self.f.eval(h);
            if m < worst[p] {
                worst[p] = m;
                worst_at[p] = r;
            }
        }
        let at = |p: usize, r: f64| self.eval_piece(p, r);
        let (r1, r2, r3) = (self.r1, self.r2, self.r3);
        Ok(VerifyReport {
            h_step,
            worst_margin: worst,
            worst_at,
            matching_error: (at(1, r2).0 - self.matching).abs(),
            continuity_error: [
                (at(0, r1).0 - at(1, r1).0).abs(),
                (at(1, r2).0 - at(2, r2).0).abs(),
                at(2, r3).0.abs(),
            ],
            slope_error: [
                (at(0, r1).1 - at(1, r1).1).abs(),
                (at(1, r2).1 - at(2, r2).1).abs() / self.alpha / (r2 - r1),
            ],
            residuals: self.residuals(),
        })
    }

    /// Parameters as JSON `{theta, C, K, F, alpha, c, beta, R1, R2, R3}`.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Profile as CSV rows `r,h` on `[0, R3]`.
    pub fn profile_csv(&self, step: f64) -> String {
        let mut out = String::from("r,h\n");
        let n = (self.r3 / step).ceil() as usize;
        for i in 0..=n {
            let r = (i as f64 * step).min(self.r3);
            let _ = writeln!(out, "{r},{}", self.h(r));
        }
        out
    }
}

/// `u0(x) = h(|x - center|)` on `window`.
///
/// Fails with the first obstacle cell met by the closed disc `B_R3(center)`.
pub fn plant(
    bump: &SubsolutionBump,
    mask: &PeriodicCellMask,
    center: (f64, f64),
    window: Arc<Window>,
) -> Result<FieldState> {
    if let Err((i, j)) = mask.disc_clear(center, bump.r3) {
        let (x, y) = mask.cell_center(i, j);
        return Err(Error::InObstacle { x, y });
    }
    FieldState::from_fn(window, |x, y| bump.h((x - center.0).hypot(y - center.1)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{CombustionShape, DiffusionTensor, Integrator};
    use crate::geometry::{build_free_plane, build_slant_domain, SlantParams};
    use approx::assert_relative_eq;

    fn f() -> Nonlinearity {
        Nonlinearity::combustion(0.25, CombustionShape::Quadratic, 1.0).unwrap()
    }

    #[test]
    fn infimum_examples() {
        assert_relative_eq!(infimum_f(&f(), 0.5, 0.9).unwrap(), 0.065, epsilon = 1e-15);
        assert!(infimum_f(&f(), 0.25, 0.9).is_err());
        assert!(infimum_f(&f(), 0.2, 0.9).is_err());
        assert!(infimum_f(&Nonlinearity::kpp(1.0).unwrap(), 0.5, 0.9).is_err());
    }

    #[test]
    fn construct_example_values() {
        let b = construct(&f(), 0.9, 0.5).unwrap();
        assert_relative_eq!(b.f_inf, 0.065, epsilon = 1e-15);
        assert_relative_eq!(b.alpha, 0.065 / 1.4, max_relative = 1e-14);
        assert_relative_eq!(b.c_tilde, 2.0 * b.c, max_relative = 1e-14);
        assert_relative_eq!(b.beta, 3.0 * 0.5, max_relative = 1e-12);
        assert!(b.residuals().iter().all(|r| r.abs() <= 1e-12));
        assert!(b.r1 < b.r2 && b.r2 < b.r3);
        assert!(!b.impractical);
    }

    #[test]
    fn verify_margins_and_junctions() {
        let b = construct(&f(), 0.9, 0.5).unwrap();
        let rep = b.verify(1e-3).unwrap();
        assert!(rep.passed(), "{rep:?}");
        // plateau margin is f(C)
        assert_relative_eq!(rep.worst_margin[0], f().eval(0.9), epsilon = 1e-15);
        // the parabola bound is attained at R2 with value f(h) - F >= 0
        assert!(rep.worst_margin[1] >= 0.0);
        assert!(b.verify(b.r1).is_err());
    }

    #[test]
    fn exponential_piece_is_homogeneous() {
        let b = construct(&f(), 0.9, 0.5).unwrap();
        for k in 1..10 {
            let r = b.r2 + (b.r3 - b.r2) * k as f64 / 10.0;
            let (_, d1, d2) = b.derivatives(r);
            assert!((d2 + b.c_tilde * d1).abs() <= 1e-12 * d2.abs());
        }
    }

    #[test]
    fn scaling_by_sigma() {
        let sigma = 3.0;
        let b = construct(&f(), 0.9, 0.5).unwrap();
        let s = construct(&f().scaled(sigma).unwrap(), 0.9, 0.5).unwrap();
        assert_relative_eq!(s.alpha, b.alpha * sigma * sigma, max_relative = 1e-12);
        assert_relative_eq!(s.f_inf, b.f_inf * sigma * sigma, max_relative = 1e-12);
        assert_relative_eq!(s.c, b.c * sigma, max_relative = 1e-12);
        assert_relative_eq!(s.r3, b.r3 / sigma, max_relative = 1e-12);
    }

    #[test]
    fn small_gap_is_flagged_not_rejected() {
        let b = construct(&f(), 0.9, 0.9 - 1e-9).unwrap();
        assert!(b.impractical);
    }

    #[test]
    fn defaults() {
        let (c, k) = default_levels(&f()).unwrap();
        assert_relative_eq!(c, 0.9375, epsilon = 1e-12);
        assert_relative_eq!(k, 0.59375, epsilon = 1e-12);
        let b = construct(&f(), c, k).unwrap();
        let json: serde_json::Value = serde_json::from_str(&b.to_json().unwrap()).unwrap();
        for key in [
            "theta", "C", "K", "F", "alpha", "c", "beta", "R1", "R2", "R3",
        ] {
            assert!(json.get(key).is_some(), "{key}");
        }
        assert!(b.profile_csv(1.0).starts_with("r,h\n0,0.9375\n"));
    }

    #[test]
    fn planting() {
        let (c, k) = default_levels(&f()).unwrap();
        let b = construct(&f(), c, k).unwrap();
        let r = (b.r3 / 0.5).ceil() * 0.5;
        let slant = build_slant_domain(SlantParams::new(0.4, r), 0.5).unwrap();
        let w = Arc::new(Window::centered(&slant, (0.0, 3.0 * r), (r + 2.0, r + 2.0)).unwrap());
        assert!(plant(&b, &slant, (0.0, 3.0 * r), w.clone()).is_ok());
        assert!(matches!(
            plant(&b, &slant, (0.0, 1.5 * r), w),
            Err(Error::InObstacle { .. })
        ));
    }

    #[test]
    fn planted_bump_grows_monotonically() {
        let (c, k) = default_levels(&f()).unwrap();
        let b = construct(&f(), c, k).unwrap();
        let m = build_free_plane((1.0, 1.0), 0.5).unwrap();
        let w = Arc::new(Window::centered(&m, (0.25, 0.25), (b.r3 + 5.0, b.r3 + 5.0)).unwrap());
        let mut s = plant(&b, &m, (0.25, 0.25), w).unwrap();
        let mut it = Integrator::stable(f(), DiffusionTensor::IDENTITY, 0.5).unwrap();
        for _ in 0..200 {
            let before = s.values().to_vec();
            it.advance(&mut s);
            assert!(s.values().iter().zip(&before).all(|(a, b)| a >= b));
        }
    }
}
