//! Wulff shapes of speed profiles, measured spreading sets, and the
//! structural tests on `c*` profiles.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt::Write as _;
use std::sync::Arc;

use serde::Serialize;

use crate::dynamics::{
    evolve, Class, DiffusionTensor, FieldState, Integrator, Nonlinearity, Window,
};
use crate::fronts::{fit_slope, SpeedProfile};
use crate::geometry::PeriodicCellMask;
use crate::{Error, Result};

/// Intersection of the half-planes `{x : x . e_i <= c*(e_i)}` over the
/// directions of a profile.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WulffPolygon {
    /// Counterclockwise, origin strictly inside.
    vertices: Vec<(f64, f64)>,
    angles: Vec<f64>,
    /// `w` at `angles`.
    radial: Vec<f64>,
    support_angles: Vec<f64>,
    support_values: Vec<f64>,
}

fn unit(a: f64) -> (f64, f64) {
    (a.cos(), a.sin())
}

fn dot(a: (f64, f64), b: (f64, f64)) -> f64 {
    a.0 * b.0 + a.1 * b.1
}

/// Clips a convex polygon by `x . n <= h`.
fn clip(poly: &[(f64, f64)], n: (f64, f64), h: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(poly.len() + 1);
    for (k, &p) in poly.iter().enumerate() {
        let q = poly[(k + 1) % poly.len()];
        let (dp, dq) = (dot(p, n) - h, dot(q, n) - h);
        if dp <= 0.0 {
            out.push(p);
        }
        if (dp < 0.0 && dq > 0.0) || (dp > 0.0 && dq < 0.0) {
            let s = dp / (dp - dq);
            out.push((p.0 + s * (q.0 - p.0), p.1 + s * (q.1 - p.1)));
        }
    }
    out
}

fn polygon_from_support(angles: &[f64], values: &[f64]) -> Vec<(f64, f64)> {
    let big = 8.0 * values.iter().copied().fold(0.0, f64::max);
    let mut poly = vec![(-big, -big), (big, -big), (big, big), (-big, big)];
    for (&a, &c) in angles.iter().zip(values) {
        poly = clip(&poly, unit(a), c);
    }
    // Merge vertices produced twice by lines through an existing vertex.
    let tol = 1e-12 * big;
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(poly.len());
    for p in poly {
        if merged
            .last()
            .is_none_or(|q| (p.0 - q.0).hypot(p.1 - q.1) > tol)
        {
            merged.push(p);
        }
    }
    while merged.len() > 1 {
        let (a, b) = (merged[0], merged[merged.len() - 1]);
        if (a.0 - b.0).hypot(a.1 - b.1) > tol {
            break;
        }
        merged.pop();
    }
    merged
}

/// Largest angular gap between consecutive directions on the circle.
fn max_gap(angles: &[f64]) -> f64 {
    let n = angles.len();
    (0..n)
        .map(|i| {
            let next = if i + 1 < n {
                angles[i + 1]
            } else {
                angles[0] + TAU
            };
            next - angles[i]
        })
        .fold(0.0, f64::max)
}

/// `min_{e_i . u > 0} c_i / (e_i . u)` over the support data.
fn radial_from_support(angles: &[f64], values: &[f64], u: (f64, f64)) -> f64 {
    angles
        .iter()
        .zip(values)
        .filter_map(|(&a, &c)| {
            let d = dot(unit(a), u);
            (d > 0.0).then(|| c / d)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Freidlin-Gartner transform of a sampled profile, read off at `m` equally
/// spaced directions.
///
/// The transform of the sampled data is exact: `w(u)` is the distance from the
/// origin to the first supporting line met by the ray along `u`.
pub fn fg_transform(profile: &SpeedProfile, m: usize) -> Result<WulffPolygon> {
    let angles = crate::fronts::uniform_angles(m);
    fg_transform_at(profile, &angles)
}

/// [`fg_transform`] read off at given directions.
pub fn fg_transform_at(profile: &SpeedProfile, angles: &[f64]) -> Result<WulffPolygon> {
    let support_angles = profile.angles().to_vec();
    let support_values = profile.speeds().to_vec();
    let gap = max_gap(&support_angles);
    if gap >= TAU / 8.0 {
        return Err(Error::config(format!(
            "profile leaves an angular gap of {gap:.4} rad (limit 2 pi / 8)"
        )));
    }
    if angles.is_empty() {
        return Err(Error::config("no output directions"));
    }
    if let Some(c) = support_values.iter().find(|c| !(**c > 0.0)) {
        return Err(Error::config(format!("non-positive speed {c} in profile")));
    }
    let vertices = polygon_from_support(&support_angles, &support_values);
    let radial = angles
        .iter()
        .map(|&a| radial_from_support(&support_angles, &support_values, unit(a)))
        .collect();
    Ok(WulffPolygon {
        vertices,
        angles: angles.to_vec(),
        radial,
        support_angles,
        support_values,
    })
}

impl WulffPolygon {
    pub fn vertices(&self) -> &[(f64, f64)] {
        &self.vertices
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn radial(&self) -> &[f64] {
        &self.radial
    }

    /// `w` in the direction of angle `a`.
    pub fn w_at(&self, a: f64) -> f64 {
        radial_from_support(&self.support_angles, &self.support_values, unit(a))
    }

    /// `max_{v in W} v . e`.
    pub fn support(&self, e: (f64, f64)) -> f64 {
        self.vertices
            .iter()
            .map(|&v| dot(v, e))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `w` sampled at the profile's own directions, as a profile.
    pub fn radial_profile(&self, like: &SpeedProfile) -> Result<SpeedProfile> {
        let w = like.angles().iter().map(|&a| self.w_at(a)).collect();
        let mut p = SpeedProfile::new(like.angles().to_vec(), w, like.method())?;
        p.metadata = like.metadata.clone();
        p.metadata
            .insert("transform".into(), "freidlin-gartner".into());
        Ok(p)
    }

    /// Polygon rebuilt from its own support function at the profile directions.
    pub fn from_own_support(&self) -> Vec<(f64, f64)> {
        let values: Vec<f64> = self
            .support_angles
            .iter()
            .map(|&a| self.support(unit(a)))
            .collect();
        polygon_from_support(&self.support_angles, &values)
    }

    /// Descriptions of every failed structural invariant, at relative tolerance `tol`.
    pub fn invariant_violations(&self, tol: f64) -> Vec<String> {
        let mut out = Vec::new();
        let n = self.vertices.len();
        if n < 3 {
            out.push(format!("degenerate polygon with {n} vertices"));
            return out;
        }
        let scale = self.support_values.iter().copied().fold(0.0, f64::max);
        for k in 0..n {
            let (a, b, c) = (
                self.vertices[k],
                self.vertices[(k + 1) % n],
                self.vertices[(k + 2) % n],
            );
            let cross = (b.0 - a.0) * (c.1 - b.1) - (b.1 - a.1) * (c.0 - b.0);
            if cross < -tol * scale * scale {
                out.push(format!("not convex at vertex {}", (k + 1) % n));
            }
            // origin strictly left of every edge
            let side = a.0 * b.1 - a.1 * b.0;
            if side <= 0.0 {
                out.push(format!("origin not strictly inside edge {k}"));
            }
        }
        let (sa, sc) = (&self.support_angles, &self.support_values);
        for (i, (&a, &c)) in sa.iter().zip(sc).enumerate() {
            let w = self.w_at(a);
            if w > c * (1.0 + tol) {
                out.push(format!("w > c* at direction {i}: {w} > {c}"));
            }
        }
        for (i, &a0) in sa.iter().enumerate() {
            let w0 = self.w_at(a0);
            for (j, &a1) in sa.iter().enumerate() {
                let d = dot(unit(a0), unit(a1));
                if d > 0.0 && w0 * d > sc[j] * (1.0 + tol) {
                    out.push(format!(
                        "pair ({i}, {j}): w(xi0) xi0.xi1 = {} > {}",
                        w0 * d,
                        sc[j]
                    ));
                }
            }
        }
        let imin = (0..sc.len()).fold(0, |m, i| if sc[i] < sc[m] { i } else { m });
        let gap = (self.w_at(sa[imin]) - sc[imin]).abs();
        if gap > 1e-9 {
            out.push(format!("w(e_min) differs from c*(e_min) by {gap}"));
        }
        out
    }

    /// Vertex list as CSV rows `x,y`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y\n");
        for &(x, y) in &self.vertices {
            let _ = writeln!(out, "{x},{y}");
        }
        out
    }

    /// 800 x 800 polar plot of the `c*` curve, the `w` curve and the polygon.
    pub fn to_svg(&self) -> String {
        let size = 800.0;
        let mid = size / 2.0;
        let reach = self
            .support_values
            .iter()
            .chain(&self.radial)
            .copied()
            .fold(0.0, f64::max);
        let s = 0.45 * size / reach.max(1e-12);
        let pt = |r: f64, a: f64| (mid + s * r * a.cos(), mid - s * r * a.sin());
        let path = |pts: &mut dyn Iterator<Item = (f64, f64)>| {
            let mut d = String::new();
            for (k, (x, y)) in pts.enumerate() {
                let _ = write!(d, "{}{x:.3},{y:.3} ", if k == 0 { "M" } else { "L" });
            }
            d.push('Z');
            d
        };
        let mut svg = String::new();
        let _ = writeln!(
            svg,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"800\" viewBox=\"0 0 800 800\">"
        );
        let _ = writeln!(svg, "<rect width=\"800\" height=\"800\" fill=\"white\"/>");
        for k in 1..=4 {
            let r = reach * k as f64 / 4.0;
            let _ = writeln!(
                svg,
                "<circle cx=\"400\" cy=\"400\" r=\"{:.3}\" fill=\"none\" stroke=\"#ddd\"/>",
                s * r
            );
        }
        let _ = writeln!(
            svg,
            "<line x1=\"20\" y1=\"400\" x2=\"780\" y2=\"400\" stroke=\"#999\"/>"
        );
        let _ = writeln!(
            svg,
            "<line x1=\"400\" y1=\"20\" x2=\"400\" y2=\"780\" stroke=\"#999\"/>"
        );
        let c_path = path(
            &mut self
                .support_angles
                .iter()
                .zip(&self.support_values)
                .map(|(&a, &c)| pt(c, a)),
        );
        let w_path = path(
            &mut self
                .angles
                .iter()
                .zip(&self.radial)
                .map(|(&a, &w)| pt(w, a)),
        );
        let v_path = path(
            &mut self
                .vertices
                .iter()
                .map(|&(x, y)| (mid + s * x, mid - s * y)),
        );
        let _ = writeln!(
            svg,
            "<path d=\"{c_path}\" fill=\"none\" stroke=\"#c0392b\" stroke-width=\"2\"><title>c*</title></path>"
        );
        let _ = writeln!(
            svg,
            "<path d=\"{w_path}\" fill=\"none\" stroke=\"#2471a3\" stroke-width=\"2\"><title>w</title></path>"
        );
        let _ = writeln!(
            svg,
            "<path d=\"{v_path}\" fill=\"#2471a3\" fill-opacity=\"0.1\" stroke=\"#2471a3\" stroke-dasharray=\"4 3\"><title>Wulff polygon</title></path>"
        );
        let _ = writeln!(
            svg,
            "<text x=\"20\" y=\"30\" font-family=\"monospace\" font-size=\"14\" fill=\"#c0392b\">c*</text>"
        );
        let _ = writeln!(
            svg,
            "<text x=\"20\" y=\"50\" font-family=\"monospace\" font-size=\"14\" fill=\"#2471a3\">w</text>"
        );
        let _ = writeln!(
            svg,
            "<text x=\"20\" y=\"780\" font-family=\"monospace\" font-size=\"12\" fill=\"#555\">ring spacing {:.4}</text>",
            reach / 4.0
        );
        svg.push_str("</svg>\n");
        svg
    }
}

/// Outcome of [`constancy_dichotomy`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Dichotomy {
    Constant {
        value: f64,
    },
    /// Direction (angle) maximizing `c* - w`, with the gap.
    Witness {
        angle: f64,
        gap: f64,
    },
}

/// Either `c*` is constant within `tol`, or a direction where `c* - w` is largest.
pub fn constancy_dichotomy(c: &SpeedProfile, w: &SpeedProfile, tol: f64) -> Result<Dichotomy> {
    if c.angles() != w.angles() {
        return Err(Error::config("profiles must share directions"));
    }
    let s = c.speeds();
    let (lo, hi) = s
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| {
            (l.min(v), h.max(v))
        });
    if hi - lo <= tol {
        return Ok(Dichotomy::Constant {
            value: 0.5 * (lo + hi),
        });
    }
    let i = (0..s.len()).fold(0, |m, i| {
        if s[i] - w.speeds()[i] > s[m] - w.speeds()[m] {
            i
        } else {
            m
        }
    });
    Ok(Dichotomy::Witness {
        angle: c.angles()[i],
        gap: s[i] - w.speeds()[i],
    })
}

/// A direction `e` strictly inside the cone of `xi1, xi2` with
/// `c*(e) > max_i c*(xi_i) / (e . xi_i)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConeViolation {
    pub e: f64,
    pub xi1: f64,
    pub xi2: f64,
    /// `c*(e) - max_i c*(xi_i) / (e . xi_i)`.
    pub excess: f64,
}

/// Audits `c*(e) <= max(c*(xi1) / (e . xi1), c*(xi2) / (e . xi2))` over all
/// sampled triples with `e` strictly between `xi1` and `xi2` and both inner
/// products positive.
///
/// For a fixed `e` the best pair takes the smallest quotient on each side, so
/// the audit is quadratic in the number of directions. Excesses up to
/// `tol * c*(e)` are ignored.
pub fn cone_inequality_audit(profile: &SpeedProfile, tol: f64) -> Vec<ConeViolation> {
    let a = profile.angles();
    let c = profile.speeds();
    let n = a.len();
    let mut out = Vec::new();
    for k in 0..n {
        let e = unit(a[k]);
        let mut left: Option<(f64, usize)> = None;
        let mut right: Option<(f64, usize)> = None;
        for i in 0..n {
            if i == k {
                continue;
            }
            // signed angle from e to xi_i in (-pi, pi]
            let mut d = a[i] - a[k];
            if d > PI {
                d -= TAU;
            } else if d <= -PI {
                d += TAU;
            }
            let ed = dot(e, unit(a[i]));
            if d.abs() >= FRAC_PI_2 || ed <= 0.0 {
                continue;
            }
            let g = c[i] / ed;
            let side = if d > 0.0 { &mut left } else { &mut right };
            if side.is_none_or(|(v, _)| g < v) {
                *side = Some((g, i));
            }
        }
        if let (Some((gl, il)), Some((gr, ir))) = (left, right) {
            let bound = gl.max(gr);
            if c[k] > bound * (1.0 + tol) {
                out.push(ConeViolation {
                    e: a[k],
                    xi1: a[il],
                    xi2: a[ir],
                    excess: c[k] - bound,
                });
            }
        }
    }
    out
}

/// Verdict of [`ellipse_feasibility`]. Only infeasibility is a proven claim.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum EllipseVerdict {
    FeasibleUnderAudit,
    Infeasible { witness: ConeViolation },
}

impl EllipseVerdict {
    pub fn is_infeasible(&self) -> bool {
        matches!(self, EllipseVerdict::Infeasible { .. })
    }
}

/// Whether the radial function of the ellipse with semi-axes `a >= b` passes
/// the cone inequality audit at `m` directions.
pub fn ellipse_feasibility(a: f64, b: f64, m: usize) -> Result<EllipseVerdict> {
    if !(b > 0.0 && a >= b && a.is_finite()) {
        return Err(Error::config(format!(
            "semi-axes need a >= b > 0, got {a}, {b}"
        )));
    }
    let angles = crate::fronts::uniform_angles(m);
    let speeds = angles
        .iter()
        .map(|&t| 1.0 / ((t.cos() / a).powi(2) + (t.sin() / b).powi(2)).sqrt())
        .collect();
    let profile = SpeedProfile::new(angles, speeds, crate::fronts::Method::ClosedForm)?;
    Ok(match cone_inequality_audit(&profile, 1e-9).first() {
        Some(&witness) => EllipseVerdict::Infeasible { witness },
        None => EllipseVerdict::FeasibleUnderAudit,
    })
}

/// Bracket `(feasible, infeasible)` of eccentricities around the audit
/// threshold at `m` directions, after `iterations` bisection steps.
pub fn ellipse_threshold(m: usize, iterations: usize) -> Result<(f64, f64)> {
    let verdict = |ecc: f64| ellipse_feasibility(1.0, (1.0 - ecc * ecc).sqrt(), m);
    let (mut lo, mut hi) = (0.0, 0.99);
    if verdict(lo)?.is_infeasible() || !verdict(hi)?.is_infeasible() {
        return Err(Error::NonConvergence(
            "ellipse audit does not change verdict on [0, 0.99]".into(),
        ));
    }
    for _ in 0..iterations {
        let mid = 0.5 * (lo + hi);
        if verdict(mid)?.is_infeasible() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((lo, hi))
}

/// Placement and sampling of a spreading measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct SpreadingOptions {
    /// Center of the initial datum and of the measuring rays.
    pub center: (f64, f64),
    /// Level `eta` of the measured set.
    pub eta: f64,
    /// Measurement times, increasing.
    pub times: Vec<f64>,
    /// Ray directions (radians).
    pub angles: Vec<f64>,
    /// Initial half-widths of the window; `None` derives them from a speed bound.
    pub half_extent: Option<(f64, f64)>,
    /// Value in the edge band that makes the window grow; `None` picks
    /// `1e-20` for KPP reactions, whose pulled fronts feel the far tail, and
    /// `1e-6` otherwise.
    pub edge_level: Option<f64>,
    /// Largest window, in cells, before the run fails with `FrontHitsEdge`.
    pub max_cells: usize,
}

impl SpreadingOptions {
    pub fn new(center: (f64, f64), eta: f64, times: Vec<f64>, angles: Vec<f64>) -> Self {
        SpreadingOptions {
            center,
            eta,
            times,
            angles,
            half_extent: None,
            edge_level: None,
            max_cells: 30_000_000,
        }
    }
}

/// Radii of the level set `u > eta` along rays, and their fitted speeds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpreadingMeasurement {
    pub eta: f64,
    pub times: Vec<f64>,
    pub angles: Vec<f64>,
    /// `radii[d][s]` at direction `d` and time `s`.
    pub radii: Vec<Vec<f64>>,
    pub speeds: Vec<f64>,
    pub stderr: Vec<f64>,
    /// First measurement time with `u > 1 - 1e-3` at the center cell.
    pub invaded_at: f64,
    /// The window grew at least once.
    pub extended: bool,
    /// Final window size in cells `(x, y)`.
    pub window_cells: (usize, usize),
}

impl SpreadingMeasurement {
    /// Rows `t,direction,radius` with the direction as an angle.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,direction,radius\n");
        for (d, &a) in self.angles.iter().enumerate() {
            for (s, &t) in self.times.iter().enumerate() {
                let _ = writeln!(out, "{t},{a},{}", self.radii[d][s]);
            }
        }
        out
    }

    pub fn speed_at(&self, angle: f64) -> Option<f64> {
        self.angles
            .iter()
            .position(|&a| (a - angle).abs() < 1e-12)
            .map(|d| self.speeds[d])
    }
}

/// Width in cells of the band along each clamped edge that is watched for the
/// leading tail.
const EDGE_BAND: usize = 8;

/// Measures the spreading of the solution started from `u0`.
///
/// `u0` builds the initial field on a given window. The window is clamped on
/// all sides with its outer ring frozen at zero; whenever `u` exceeds the edge
/// level within [`EDGE_BAND`] cells of a side, that side is pushed out and the
/// new cells start at zero. Along each ray the radius is advanced in steps of
/// `dx / 2`; a sample counts when its nearest fluid cell within `2 dx` holds
/// `u > eta`, samples without a fluid cell nearby are skipped, and the radius
/// stops at the first failing sample.
pub fn empirical_spreading(
    mask: &PeriodicCellMask,
    f: &Nonlinearity,
    diffusion: &DiffusionTensor,
    u0: &dyn Fn(Arc<Window>) -> Result<FieldState>,
    opts: &SpreadingOptions,
) -> Result<SpreadingMeasurement> {
    let eta = opts.eta;
    // Combustion level sets are only meaningful above the decay threshold.
    let floor = if f.class() == Class::Combustion {
        f.decay_threshold()
    } else {
        0.0
    };
    if !(eta > floor && eta < 1.0) {
        return Err(Error::config(format!(
            "level {eta} must lie in ({floor}, 1)"
        )));
    }
    let times = &opts.times;
    if times.len() < 4 || times[0] <= 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::config(
            "spreading needs at least 4 increasing positive measurement times",
        ));
    }
    if opts.angles.is_empty() {
        return Err(Error::config("no measurement directions"));
    }
    let edge_level = opts.edge_level.unwrap_or(match f.class() {
        Class::Kpp => 1e-20,
        _ => 1e-6,
    });
    if !(edge_level > 0.0 && edge_level < eta) {
        return Err(Error::config(format!(
            "edge level {edge_level} must lie in (0, eta)"
        )));
    }
    let bound = 2.0 * (f.max_ratio() * diffusion.a.max(diffusion.b)).sqrt();
    let half = match opts.half_extent {
        Some(h) => h,
        None => {
            let r = bound * times[times.len() - 1] + 8.0;
            (r, r)
        }
    };
    let dx = mask.dx();
    let mut state = u0(Arc::new(Window::centered(mask, opts.center, half)?))?;
    let mut probe = Probe::new(mask, &state, opts)?;
    let mut integrator = Integrator::stable(f.clone(), *diffusion, dx)?;
    // The tail crosses at most half the band between checks.
    let check_dt = (0.5 * EDGE_BAND as f64 * dx / bound.max(1e-12)).max(integrator.dt());

    let mut radii = vec![Vec::with_capacity(times.len()); opts.angles.len()];
    let mut invaded_at = None;
    let mut extended = false;
    for &t_sample in times {
        while state.t < t_sample {
            let target = (state.t + check_dt).min(t_sample);
            let span = target - state.t;
            evolve(&mut state, &mut integrator, span, &[], |_| Ok(true))?;
            state.t = target;
            let sides = probe.touched(&state, edge_level);
            if sides.iter().any(|&s| s) {
                grow(&mut state, mask, sides, opts.max_cells)?;
                probe = Probe::new(mask, &state, opts)?;
                extended = true;
            }
        }
        let u = state.values();
        if invaded_at.is_none() && u[probe.center] > 1.0 - 1e-3 {
            invaded_at = Some(state.t);
        }
        for (d, ray) in probe.rays.iter().enumerate() {
            let mut radius = 0.0;
            for &(r, k) in ray {
                if u[k] > eta {
                    radius = r;
                } else {
                    break;
                }
            }
            radii[d].push(radius);
        }
    }
    let horizon = times[times.len() - 1];
    let invaded_at = invaded_at.ok_or_else(|| {
        Error::NotInvading(format!(
            "u at the center stayed below 1 - 1e-3 up to t = {horizon}"
        ))
    })?;
    let first = times.len() / 2;
    let mut speeds = Vec::with_capacity(radii.len());
    let mut stderr = Vec::with_capacity(radii.len());
    for r in &radii {
        let pts: Vec<(f64, f64)> = times[first..]
            .iter()
            .copied()
            .zip(r[first..].iter().copied())
            .collect();
        let (s, e) = fit_slope(&pts)
            .ok_or_else(|| Error::config("too few measurement times in the last half"))?;
        speeds.push(s);
        stderr.push(e);
    }
    let spec = state.window().spec();
    Ok(SpreadingMeasurement {
        eta,
        times: times.clone(),
        angles: opts.angles.clone(),
        radii,
        speeds,
        stderr,
        invaded_at,
        extended,
        window_cells: (spec.along, spec.across),
    })
}

/// Window-dependent lookup tables of a spreading run.
struct Probe {
    /// Fluid cells of the edge bands: left, right, bottom, top.
    bands: [Vec<usize>; 4],
    center: usize,
    /// Window cells sampled along each ray up to the window edge, with their radius.
    rays: Vec<Vec<(f64, usize)>>,
}

impl Probe {
    fn new(mask: &PeriodicCellMask, state: &FieldState, opts: &SpreadingOptions) -> Result<Self> {
        let window = state.window();
        let dx = mask.dx();
        let spec = window.spec();
        let (na, nb) = (spec.along, spec.across);
        let mut bands: [Vec<usize>; 4] = Default::default();
        for k in (0..na * nb).filter(|&k| window.is_fluid(k)) {
            let (a, b) = (k % na, k / na);
            if a < EDGE_BAND {
                bands[0].push(k);
            }
            if a + EDGE_BAND >= na {
                bands[1].push(k);
            }
            if b < EDGE_BAND {
                bands[2].push(k);
            }
            if b + EDGE_BAND >= nb {
                bands[3].push(k);
            }
        }
        let (ci, cj) = mask.cell_of(opts.center.0, opts.center.1);
        let center = window
            .index_of(ci, cj)
            .filter(|&k| window.is_fluid(k))
            .ok_or(Error::InObstacle {
                x: opts.center.0,
                y: opts.center.1,
            })?;
        let (i0, j0) = spec.origin;
        let lo = (i0 as f64 * dx, j0 as f64 * dx);
        let hi = ((i0 + na as i64) as f64 * dx, (j0 + nb as i64) as f64 * dx);
        let c = opts.center;
        let rays = opts
            .angles
            .iter()
            .map(|&angle| {
                let e = unit(angle);
                let reach_x = if e.0 > 0.0 {
                    (hi.0 - c.0) / e.0
                } else if e.0 < 0.0 {
                    (lo.0 - c.0) / e.0
                } else {
                    f64::INFINITY
                };
                let reach_y = if e.1 > 0.0 {
                    (hi.1 - c.1) / e.1
                } else if e.1 < 0.0 {
                    (lo.1 - c.1) / e.1
                } else {
                    f64::INFINITY
                };
                let reach = reach_x.min(reach_y);
                let mut ray = Vec::new();
                let mut r = 0.0;
                while r <= reach {
                    let p = (c.0 + r * e.0, c.1 + r * e.1);
                    if let Some(k) = mask
                        .nearest_fluid_cell(p.0, p.1, 2.0 * dx)
                        .and_then(|(i, j)| window.index_of(i, j))
                    {
                        ray.push((r, k));
                    }
                    r += 0.5 * dx;
                }
                ray
            })
            .collect();
        Ok(Probe {
            bands,
            center,
            rays,
        })
    }

    fn touched(&self, state: &FieldState, level: f64) -> [bool; 4] {
        let u = state.values();
        let mut sides = [false; 4];
        for (side, band) in sides.iter_mut().zip(&self.bands) {
            *side = band.iter().any(|&k| u[k] > level);
        }
        sides
    }
}

/// Pushes out the `sides` (left, right, bottom, top) of the state's window by a
/// quarter of its extent, at least two bands; new cells start at zero.
fn grow(
    state: &mut FieldState,
    mask: &PeriodicCellMask,
    sides: [bool; 4],
    max_cells: usize,
) -> Result<()> {
    let old = Arc::clone(state.window());
    let spec = *old.spec();
    let step_a = (spec.along / 4).max(2 * EDGE_BAND) as i64;
    let step_b = (spec.across / 4).max(2 * EDGE_BAND) as i64;
    let grow_by = |on: bool, step: i64| if on { step } else { 0 };
    let (l, r) = (grow_by(sides[0], step_a), grow_by(sides[1], step_a));
    let (b, t) = (grow_by(sides[2], step_b), grow_by(sides[3], step_b));
    let mut new_spec = spec;
    new_spec.origin = (spec.origin.0 - l, spec.origin.1 - b);
    new_spec.along = spec.along + (l + r) as usize;
    new_spec.across = spec.across + (b + t) as usize;
    if new_spec.along * new_spec.across > max_cells {
        return Err(Error::FrontHitsEdge { t: state.t });
    }
    let window = Arc::new(Window::new(mask, new_spec)?);
    let mut values = vec![0.0; window.len()];
    for (k, &v) in state.values().iter().enumerate() {
        if v != 0.0 {
            let (i, j) = old.global_of(k);
            let nk = window
                .index_of(i, j)
                .expect("the grown window covers the old one");
            values[nk] = v;
        }
    }
    let t = state.t;
    *state = FieldState::zeros(window);
    state.set_values(values)?;
    state.t = t;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::initial_bump;
    use crate::fronts::{uniform_angles, Method};
    use crate::geometry::build_free_plane;
    use approx::assert_relative_eq;

    fn aniso(n: usize) -> SpeedProfile {
        let a = uniform_angles(n);
        let s = a
            .iter()
            .map(|t| 2.0 * (4.0 * t.cos().powi(2) + t.sin().powi(2)).sqrt())
            .collect();
        SpeedProfile::new(a, s, Method::ClosedForm).unwrap()
    }

    #[test]
    fn constant_profile_gives_disc() {
        let n = 64;
        let p = SpeedProfile::new(uniform_angles(n), vec![2.0; n], Method::ClosedForm).unwrap();
        let w = fg_transform(&p, 256).unwrap();
        let err = (1.0 / (PI / n as f64).cos() - 1.0) * 2.0;
        for &r in w.radial() {
            assert!(r >= 2.0 - 1e-12 && r <= 2.0 + err + 1e-12, "{r}");
        }
        assert_eq!(w.vertices().len(), n);
        assert!(w.invariant_violations(1e-9).is_empty());
    }

    #[test]
    fn anisotropic_transform_matches_dense_scan() {
        let p = aniso(256);
        let w = fg_transform(&p, 8).unwrap();
        // dense oracle: min over 1e5 xi of c*(xi) / (e . xi)
        let oracle = |e: f64| {
            (0..100_000)
                .map(|i| TAU * i as f64 / 1e5)
                .filter_map(|t| {
                    let d = (t - e).cos();
                    (d > 0.0).then(|| 2.0 * (4.0 * t.cos().powi(2) + t.sin().powi(2)).sqrt() / d)
                })
                .fold(f64::INFINITY, f64::min)
        };
        assert_relative_eq!(w.w_at(0.0), 4.0, max_relative = 1e-9);
        assert_relative_eq!(w.w_at(FRAC_PI_2), 2.0, max_relative = 1e-9);
        for &a in w.angles() {
            assert_relative_eq!(w.w_at(a), oracle(a), max_relative = 1e-3);
        }
        assert!(w.invariant_violations(1e-9).is_empty());
    }

    #[test]
    fn region_is_reproduced_by_its_support() {
        let w = fg_transform(&aniso(48), 64).unwrap();
        let again = w.from_own_support();
        assert_eq!(again.len(), w.vertices().len());
        for (a, b) in again.iter().zip(w.vertices()) {
            assert!((a.0 - b.0).hypot(a.1 - b.1) < 1e-9);
        }
    }

    #[test]
    fn gap_is_rejected() {
        let a = vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0];
        let p = SpeedProfile::new(a, vec![1.0; 6], Method::Empirical).unwrap();
        assert!(fg_transform(&p, 16).is_err());
    }

    #[test]
    fn dichotomy_cases() {
        let n = 64;
        let c = SpeedProfile::new(uniform_angles(n), vec![2.0; n], Method::ClosedForm).unwrap();
        let w = fg_transform(&c, 16).unwrap().radial_profile(&c).unwrap();
        match constancy_dichotomy(&c, &w, 1e-9).unwrap() {
            Dichotomy::Constant { value } => assert_relative_eq!(value, 2.0),
            other => panic!("{other:?}"),
        }
        let c = aniso(256);
        let w = fg_transform(&c, 16).unwrap().radial_profile(&c).unwrap();
        // oracle: dense scan of the difference of the two closed forms
        let (best_angle, best_gap) = (0..200_000)
            .map(|i| TAU * i as f64 / 2e5)
            .map(|t| {
                let c = 2.0 * (4.0 * t.cos().powi(2) + t.sin().powi(2)).sqrt();
                let w = 2.0 / (t.cos().powi(2) / 4.0 + t.sin().powi(2)).sqrt();
                (t, c - w)
            })
            .fold(
                (0.0, f64::NEG_INFINITY),
                |b, x| if x.1 > b.1 { x } else { b },
            );
        match constancy_dichotomy(&c, &w, 1e-9).unwrap() {
            Dichotomy::Witness { angle, gap } => {
                assert_relative_eq!(gap, best_gap, max_relative = 1e-3);
                let folded = |a: f64| a.cos().abs().acos();
                assert!((folded(angle) - folded(best_angle)).abs() < 0.03, "{angle}");
            }
            other => panic!("{other:?}"),
        }
        // gap at the diagonal
        let i = c
            .angles()
            .iter()
            .position(|&a| (a - PI / 4.0).abs() < 1e-12)
            .unwrap();
        assert_relative_eq!(
            c.speeds()[i] - w.speeds()[i],
            2.0 * 2.5f64.sqrt() - 2.0 / 0.625f64.sqrt(),
            max_relative = 1e-3
        );
    }

    #[test]
    fn cone_audit_cases() {
        let n = 128;
        let p = SpeedProfile::new(uniform_angles(n), vec![1.5; n], Method::ClosedForm).unwrap();
        assert!(cone_inequality_audit(&p, 1e-9).is_empty());
        assert!(cone_inequality_audit(&aniso(256), 1e-9).is_empty());
        assert!(ellipse_feasibility(1.0, 1.0, 256).unwrap() == EllipseVerdict::FeasibleUnderAudit);
        let b = (1.0f64 - 0.81).sqrt();
        assert!(ellipse_feasibility(1.0, b, 256).unwrap().is_infeasible());
        assert!(ellipse_feasibility(1.0, 2.0, 16).is_err());
    }

    #[test]
    fn free_plane_spreading_speed() {
        let m = build_free_plane((1.0, 1.0), 0.25).unwrap();
        let f = Nonlinearity::kpp(1.0).unwrap();
        let mut opts = SpreadingOptions::new(
            (0.5, 0.5),
            0.5,
            (1..=12).map(|k| 2.0 * k as f64).collect(),
            vec![0.0, PI / 4.0, FRAC_PI_2],
        );
        opts.half_extent = Some((80.0, 80.0));
        let u0 = |w: Arc<Window>| initial_bump(w, &m, 0.9, 2.0, (0.5, 0.5));
        let s = empirical_spreading(&m, &f, &DiffusionTensor::IDENTITY, &u0, &opts).unwrap();
        for &v in &s.speeds {
            assert!((v - 2.0).abs() < 0.15, "{v}");
        }
        assert!(s.to_csv().lines().count() == 1 + 36);
    }

    #[test]
    fn growing_window_matches_a_large_one() {
        let m = build_free_plane((1.0, 1.0), 0.25).unwrap();
        let f = Nonlinearity::kpp(1.0).unwrap();
        let mut opts = SpreadingOptions::new(
            (0.5, 0.5),
            0.5,
            (1..=12).map(|k| k as f64).collect(),
            vec![0.0, PI],
        );
        opts.half_extent = Some((70.0, 70.0));
        let u0 = |w: Arc<Window>| initial_bump(w, &m, 0.9, 2.0, (0.5, 0.5));
        let large = empirical_spreading(&m, &f, &DiffusionTensor::IDENTITY, &u0, &opts).unwrap();
        assert!(!large.extended);
        opts.half_extent = Some((6.0, 6.0));
        let grown = empirical_spreading(&m, &f, &DiffusionTensor::IDENTITY, &u0, &opts).unwrap();
        assert!(grown.extended);
        assert!(grown.window_cells.0 < large.window_cells.0);
        for (a, b) in grown
            .radii
            .iter()
            .flatten()
            .zip(large.radii.iter().flatten())
        {
            assert!((a - b).abs() <= 0.25, "{a} vs {b}");
        }
        opts.max_cells = 10_000;
        assert!(matches!(
            empirical_spreading(&m, &f, &DiffusionTensor::IDENTITY, &u0, &opts),
            Err(Error::FrontHitsEdge { .. })
        ));
    }
}
