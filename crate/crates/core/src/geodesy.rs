//! Geodesic distances in the tiled domain, the obstruction coefficient
//! `C(e) = liminf lambda / d(0, lambda e)`, the speed bound it implies and an
//! audit of the Gaussian heat-kernel bound.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt::Write as _;
use std::sync::Arc;

use serde::Serialize;

use crate::dynamics::{evolve, DiffusionTensor, FieldState, Integrator, Nonlinearity, Window};
use crate::geometry::PeriodicCellMask;
use crate::{Error, Result};

/// Neighborhood of the shortest-path graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Stencil {
    Eight,
    #[default]
    Sixteen,
}

impl Stencil {
    /// Worst ratio of graph length to Euclidean length on the free plane, minus one:
    /// `1 / cos(phi / 2) - 1` for the widest angle `phi` between adjacent moves.
    pub fn metric_error(self) -> f64 {
        let phi = match self {
            Stencil::Eight => std::f64::consts::FRAC_PI_4,
            Stencil::Sixteen => 0.5f64.atan(),
        };
        1.0 / (0.5 * phi).cos() - 1.0
    }

    /// Cell offsets of the graph edges.
    pub fn moves(self) -> &'static [(i64, i64)] {
        const EIGHT: [(i64, i64); 8] = [
            (1, 0),
            (-1, 0),
            (0, 1),
            (0, -1),
            (1, 1),
            (1, -1),
            (-1, 1),
            (-1, -1),
        ];
        const SIXTEEN: [(i64, i64); 16] = [
            (1, 0),
            (-1, 0),
            (0, 1),
            (0, -1),
            (1, 1),
            (1, -1),
            (-1, 1),
            (-1, -1),
            (2, 1),
            (2, -1),
            (-2, 1),
            (-2, -1),
            (1, 2),
            (1, -2),
            (-1, 2),
            (-1, -2),
        ];
        match self {
            Stencil::Eight => &EIGHT,
            Stencil::Sixteen => &SIXTEEN,
        }
    }
}

/// Whether the straight move from fluid cell `(i, j)` by `(di, dj)` stays in the
/// domain: the target and every cell the segment crosses must be fluid, so paths
/// never cut an obstacle corner.
pub fn move_allowed(mask: &PeriodicCellMask, (i, j): (i64, i64), (di, dj): (i64, i64)) -> bool {
    if !mask.is_fluid(i + di, j + dj) {
        return false;
    }
    let (sx, sy) = (di.signum(), dj.signum());
    match (di.abs(), dj.abs()) {
        (1, 0) | (0, 1) => true,
        (1, 1) => mask.is_fluid(i + sx, j) && mask.is_fluid(i, j + sy),
        (2, 1) => mask.is_fluid(i + sx, j) && mask.is_fluid(i + sx, j + sy),
        (1, 2) => mask.is_fluid(i, j + sy) && mask.is_fluid(i + sx, j + sy),
        _ => false,
    }
}

/// Shortest-path lengths from one fluid cell over a box of the tiled domain.
#[derive(Debug, Clone)]
pub struct GeodesicField {
    source: (i64, i64),
    origin: (i64, i64),
    width: usize,
    height: usize,
    dx: f64,
    stencil: Stencil,
    dist: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct HeapEntry {
    d: f64,
    k: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .d
            .total_cmp(&self.d)
            .then_with(|| other.k.cmp(&self.k))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl GeodesicField {
    /// Dijkstra from `source` over the cells `lo..=hi` (inclusive corners).
    pub fn over_box(
        mask: &PeriodicCellMask,
        source: (i64, i64),
        lo: (i64, i64),
        hi: (i64, i64),
        stencil: Stencil,
    ) -> Result<Self> {
        if !mask.is_fluid(source.0, source.1) {
            let (x, y) = mask.cell_center(source.0, source.1);
            return Err(Error::InObstacle { x, y });
        }
        if !(lo.0 <= source.0 && source.0 <= hi.0 && lo.1 <= source.1 && source.1 <= hi.1) {
            return Err(Error::config("source lies outside the distance box"));
        }
        let width = (hi.0 - lo.0 + 1) as usize;
        let height = (hi.1 - lo.1 + 1) as usize;
        let dx = mask.dx();
        let moves = stencil.moves();
        let weights: Vec<f64> = moves
            .iter()
            .map(|&(a, b)| dx * (a as f64).hypot(b as f64))
            .collect();
        let mut dist = vec![f64::INFINITY; width * height];
        let index = |i: i64, j: i64| ((j - lo.1) as usize) * width + (i - lo.0) as usize;
        let s = index(source.0, source.1);
        dist[s] = 0.0;
        let mut heap = BinaryHeap::new();
        heap.push(HeapEntry { d: 0.0, k: s });
        while let Some(HeapEntry { d, k }) = heap.pop() {
            if d > dist[k] {
                continue;
            }
            let i = lo.0 + (k % width) as i64;
            let j = lo.1 + (k / width) as i64;
            for (&mv, &w) in moves.iter().zip(&weights) {
                let (ni, nj) = (i + mv.0, j + mv.1);
                if ni < lo.0 || ni > hi.0 || nj < lo.1 || nj > hi.1 {
                    continue;
                }
                if !move_allowed(mask, (i, j), mv) {
                    continue;
                }
                let nk = index(ni, nj);
                let nd = d + w;
                if nd < dist[nk] {
                    dist[nk] = nd;
                    heap.push(HeapEntry { d: nd, k: nk });
                }
            }
        }
        Ok(GeodesicField {
            source,
            origin: lo,
            width,
            height,
            dx,
            stencil,
            dist,
        })
    }

    pub fn source(&self) -> (i64, i64) {
        self.source
    }

    pub fn stencil(&self) -> Stencil {
        self.stencil
    }

    /// Bounds `(lo, hi)` of the box, inclusive.
    pub fn bounds(&self) -> ((i64, i64), (i64, i64)) {
        (
            self.origin,
            (
                self.origin.0 + self.width as i64 - 1,
                self.origin.1 + self.height as i64 - 1,
            ),
        )
    }

    /// Distance to the global cell `(i, j)`; `None` outside the box,
    /// infinite when unreachable.
    pub fn at(&self, i: i64, j: i64) -> Option<f64> {
        let (a, b) = (i - self.origin.0, j - self.origin.1);
        if a < 0 || b < 0 || a >= self.width as i64 || b >= self.height as i64 {
            return None;
        }
        Some(self.dist[b as usize * self.width + a as usize])
    }

    /// CSV rows `x,y,d` for reachable cells.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,d\n");
        for (k, &d) in self.dist.iter().enumerate() {
            if d.is_finite() {
                let i = self.origin.0 + (k % self.width) as i64;
                let j = self.origin.1 + (k / self.width) as i64;
                let _ = writeln!(
                    out,
                    "{},{},{}",
                    (i as f64 + 0.5) * self.dx,
                    (j as f64 + 0.5) * self.dx,
                    d
                );
            }
        }
        out
    }
}

/// Distances from `source` over the square of `radius_periods` periods around it.
pub fn geodesic_distance(
    mask: &PeriodicCellMask,
    source: (i64, i64),
    radius_periods: usize,
    stencil: Stencil,
) -> Result<GeodesicField> {
    if radius_periods < 1 {
        return Err(Error::config("unfold radius must be at least one period"));
    }
    let (nx, ny) = mask.dims();
    let (rx, ry) = ((radius_periods * nx) as i64, (radius_periods * ny) as i64);
    GeodesicField::over_box(
        mask,
        source,
        (source.0 - rx, source.1 - ry),
        (source.0 + rx, source.1 + ry),
        stencil,
    )
}

#[derive(Debug, Clone, Serialize)]
pub struct ConeSample {
    pub lambda: f64,
    pub target: (f64, f64),
    pub distance: f64,
    pub ratio: f64,
}

/// Tail-window estimate of `C(e)`.
#[derive(Debug, Clone, Serialize)]
pub struct ObstructionCoefficient {
    pub direction: (f64, f64),
    pub value: f64,
    pub lambda_window: (f64, f64),
    /// `max - min` of the ratios in the window.
    pub spread: f64,
    /// Set when no target was reachable (`value` is then zero).
    pub unreachable: bool,
    pub samples: Vec<ConeSample>,
}

/// Minimum of `lambda_k / d(0, x_k)` over `k = ceil(n_max/2)..=n_max`, with
/// `lambda_k = k max(L1, L2)` and `x_k` the fluid cell nearest to `lambda_k e`
/// (measured from the center of the origin cell).
pub fn cone_coefficient(
    mask: &PeriodicCellMask,
    e: (f64, f64),
    n_max: usize,
    stencil: Stencil,
) -> Result<ObstructionCoefficient> {
    if n_max < 4 {
        return Err(Error::config("n_max must be at least 4"));
    }
    let norm = e.0.hypot(e.1);
    if !(norm > 0.0) {
        return Err(Error::config("direction must be nonzero"));
    }
    let e = (e.0 / norm, e.1 / norm);
    let (l1, l2) = mask.periods();
    let period = l1.max(l2);
    let source = (0, 0);
    let p0 = mask.cell_center(0, 0);
    let k0 = n_max.div_ceil(2);
    let mut targets = Vec::new();
    for k in k0..=n_max {
        let lambda = k as f64 * period;
        let point = (p0.0 + lambda * e.0, p0.1 + lambda * e.1);
        let cell = mask
            .nearest_fluid_cell(point.0, point.1, period)
            .ok_or_else(|| Error::config(format!("no fluid cell near {point:?}")))?;
        targets.push((lambda, cell));
    }
    let lambda_max = n_max as f64 * period;
    let margin = ((2.0 * period).max(0.5 * lambda_max) / mask.dx()).ceil() as i64;
    let (mut lo, mut hi) = (source, source);
    for &(_, (i, j)) in &targets {
        lo = (lo.0.min(i), lo.1.min(j));
        hi = (hi.0.max(i), hi.1.max(j));
    }
    let lo = (lo.0 - margin, lo.1 - margin);
    let hi = (hi.0 + margin, hi.1 + margin);
    let field = GeodesicField::over_box(mask, source, lo, hi, stencil)?;

    let mut samples = Vec::new();
    for (lambda, (i, j)) in targets {
        let d = field.at(i, j).expect("targets lie in the box");
        samples.push(ConeSample {
            lambda,
            target: mask.cell_center(i, j),
            distance: d,
            ratio: if d.is_finite() { lambda / d } else { 0.0 },
        });
    }
    let reachable: Vec<f64> = samples
        .iter()
        .filter(|s| s.distance.is_finite())
        .map(|s| s.ratio)
        .collect();
    let unreachable = reachable.is_empty();
    let value = reachable.iter().copied().fold(f64::INFINITY, f64::min);
    let max = reachable.iter().copied().fold(0.0, f64::max);
    Ok(ObstructionCoefficient {
        direction: e,
        value: if unreachable { 0.0 } else { value },
        lambda_window: (k0 as f64 * period, lambda_max),
        spread: if unreachable { 0.0 } else { max - value },
        unreachable,
        samples,
    })
}

/// `2 C sqrt(max f(u)/u)`.
pub fn speed_upper_bound(c: f64, f: &Nonlinearity) -> f64 {
    2.0 * c * f.max_ratio().sqrt()
}

/// Result of [`heat_bound_audit`].
#[derive(Debug, Clone, Serialize)]
pub struct HeatAudit {
    pub epsilon: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub delta: f64,
    pub violations: usize,
    pub samples: Vec<HeatSample>,
}

#[derive(Debug, Clone, Serialize)]
pub struct HeatSample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub distance: f64,
    /// `u(t, x) / mass`
    pub kernel: f64,
}

impl HeatAudit {
    /// Right-hand side of the fitted bound.
    pub fn bound(&self, t: f64, distance: f64) -> f64 {
        self.c * (1.0 + self.delta / t) * (-distance * distance / ((4.0 + self.epsilon) * t)).exp()
    }
}

/// Fits `p(t, z, x) <= C (1 + delta / t) exp(-d(z, x)^2 / ((4 + eps) t))`.
///
/// The kernel is replaced by the heat evolution of a normalized 3dx-wide bump at
/// `z`. Among admissible `(C, delta)` with `delta <= max t`, the fit minimizes
/// the bound's envelope `C (1 + delta / t_ref)` at the geometric mean `t_ref` of
/// the sampled times; the fitted bound therefore has no violations up to
/// rounding, which the returned count checks.
pub fn heat_bound_audit(
    mask: &PeriodicCellMask,
    epsilon: f64,
    t_grid: &[f64],
    z: (f64, f64),
    sample_points: &[(f64, f64)],
) -> Result<HeatAudit> {
    if !(epsilon > 0.0) {
        return Err(Error::config(format!(
            "epsilon = {epsilon} must be positive"
        )));
    }
    if t_grid.is_empty() || sample_points.is_empty() {
        return Err(Error::config("audit needs times and sample points"));
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::config("audit times must be increasing"));
    }
    let dx = mask.dx();
    let t_min = t_grid[0];
    let t_max = *t_grid.last().expect("nonempty");
    if t_min < 36.0 * dx * dx {
        return Err(Error::config(format!(
            "time {t_min} is too small to resolve the kernel at dx = {dx}"
        )));
    }
    let (si, sj) = mask.cell_of(z.0, z.1);
    if !mask.is_fluid(si, sj) {
        return Err(Error::InObstacle { x: z.0, y: z.1 });
    }
    let zc = mask.cell_center(si, sj);

    let mut cells = Vec::with_capacity(sample_points.len());
    let mut reach = 0.0f64;
    for &(x, y) in sample_points {
        let cell = mask
            .nearest_fluid_cell(x, y, 4.0 * dx)
            .ok_or(Error::InObstacle { x, y })?;
        let c = mask.cell_center(cell.0, cell.1);
        reach = reach.max((c.0 - zc.0).abs()).max((c.1 - zc.1).abs());
        cells.push(cell);
    }
    let half = reach + 8.0 * t_max.sqrt() + 4.0 * dx;
    let window = Arc::new(Window::centered(mask, zc, (half, half))?);
    let mut state = FieldState::from_fn(Arc::clone(&window), |x, y| {
        if (x - zc.0).hypot(y - zc.1) <= 1.5 * dx * (1.0 + 1e-9) {
            1.0
        } else {
            0.0
        }
    })?;
    let mass = state.mass();

    let margin = (8.0 * t_max.sqrt() / dx).ceil() as i64 + 2;
    let span = (reach / dx).ceil() as i64 + margin;
    let field = GeodesicField::over_box(
        mask,
        (si, sj),
        (si - span, sj - span),
        (si + span, sj + span),
        Stencil::Sixteen,
    )?;
    let distances: Vec<f64> = cells
        .iter()
        .map(|&(i, j)| field.at(i, j).unwrap_or(f64::INFINITY))
        .collect();
    let indices: Vec<usize> = cells
        .iter()
        .map(|&(i, j)| window.index_of(i, j).expect("samples lie in the window"))
        .collect();

    let mut integrator = Integrator::stable(Nonlinearity::heat(), DiffusionTensor::IDENTITY, dx)?;
    let mut samples = Vec::new();
    evolve(&mut state, &mut integrator, t_max, t_grid, |s| {
        for ((&k, &d), &(i, j)) in indices.iter().zip(&distances).zip(&cells) {
            let (x, y) = mask.cell_center(i, j);
            samples.push(HeatSample {
                t: s.t,
                x,
                y,
                distance: d,
                kernel: s.values()[k] / mass,
            });
        }
        Ok(true)
    })?;

    let (c, delta) = fit_heat_bound(&samples, epsilon, t_grid);
    let mut audit = HeatAudit {
        epsilon,
        c,
        delta,
        violations: 0,
        samples,
    };
    audit.violations = audit
        .samples
        .iter()
        .filter(|s| s.kernel > audit.bound(s.t, s.distance))
        .count();
    Ok(audit)
}

/// Two-variable LP over `A = C`, `B = C delta`: minimize `A + B / t_ref` subject to
/// `A + B / t_s >= g_s`, `A, B >= 0`, `B <= t_max A`.
fn fit_heat_bound(samples: &[HeatSample], epsilon: f64, t_grid: &[f64]) -> (f64, f64) {
    let mut need: Vec<(f64, f64)> = t_grid.iter().map(|&t| (t, 0.0)).collect();
    for s in samples {
        if !s.distance.is_finite() {
            continue;
        }
        let g = s.kernel * (s.distance * s.distance / ((4.0 + epsilon) * s.t)).exp();
        if let Some(slot) = need
            .iter_mut()
            .find(|(t, _)| (*t - s.t).abs() <= 1e-9 * t.max(1.0))
        {
            slot.1 = slot.1.max(g);
        }
    }
    let t_max = *t_grid.last().expect("nonempty");
    let t_ref = (t_grid.iter().map(|t| t.ln()).sum::<f64>() / t_grid.len() as f64).exp();
    if need.iter().all(|&(_, g)| g <= 0.0) {
        return (0.0, 0.0);
    }
    // Lines a A + b B = c.
    let mut lines: Vec<(f64, f64, f64)> = need.iter().map(|&(t, g)| (1.0, 1.0 / t, g)).collect();
    lines.push((0.0, 1.0, 0.0));
    lines.push((-t_max, 1.0, 0.0));
    let feasible = |a: f64, b: f64| {
        let tol = 1e-12;
        a >= -tol
            && b >= -tol
            && b <= t_max * a * (1.0 + tol) + tol
            && need.iter().all(|&(t, g)| a + b / t >= g * (1.0 - tol))
    };
    let mut best: Option<(f64, f64, f64)> = None;
    for (x, l1) in lines.iter().enumerate() {
        for l2 in &lines[x + 1..] {
            let det = l1.0 * l2.1 - l1.1 * l2.0;
            if det.abs() < 1e-300 {
                continue;
            }
            let a = (l1.2 * l2.1 - l1.1 * l2.2) / det;
            let b = (l1.0 * l2.2 - l1.2 * l2.0) / det;
            if !feasible(a, b) {
                continue;
            }
            let obj = a + b / t_ref;
            if best.is_none_or(|(o, _, _)| obj < o) {
                best = Some((obj, a.max(0.0), b.max(0.0)));
            }
        }
    }
    let (_, a, b) = best.expect("the LP is bounded and feasible");
    // Absorb the rounding of the vertex computation.
    let a = a * (1.0 + 1e-9);
    let delta = if a > 0.0 { b / a } else { 0.0 };
    (a, delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_free_plane, build_holes_domain};
    use approx::assert_relative_eq;

    #[test]
    fn free_plane_distance_is_euclidean() {
        let m = build_free_plane((1.0, 1.0), 0.05).unwrap();
        let g = geodesic_distance(&m, (0, 0), 5, Stencil::Sixteen).unwrap();
        let d = g.at(60, 80).unwrap();
        assert!((5.0 - 1e-12..=5.0 * 1.0275).contains(&d), "d = {d}");
        let g8 = geodesic_distance(&m, (0, 0), 5, Stencil::Eight).unwrap();
        let d8 = g8.at(60, 80).unwrap();
        assert!(d8 >= d && d8 <= 5.0 * 1.0824);
        assert_eq!(g.at(0, 0), Some(0.0));
    }

    #[test]
    fn metric_error_bounds_hold_on_the_plane() {
        let m = build_free_plane((1.0, 1.0), 0.1).unwrap();
        for stencil in [Stencil::Eight, Stencil::Sixteen] {
            let g = geodesic_distance(&m, (0, 0), 3, stencil).unwrap();
            let ((i0, j0), (i1, j1)) = g.bounds();
            for j in j0..=j1 {
                for i in i0..=i1 {
                    if (i, j) == (0, 0) {
                        continue;
                    }
                    let e = 0.1 * (i as f64).hypot(j as f64);
                    let ratio = g.at(i, j).unwrap() / e;
                    assert!(ratio >= 1.0 - 1e-12);
                    assert!(ratio <= 1.0 + stencil.metric_error() + 1e-12, "{ratio}");
                }
            }
        }
    }

    #[test]
    fn source_in_obstacle_is_rejected() {
        let m = build_holes_domain(0.9, 0.05, 0.05).unwrap();
        assert!(matches!(
            geodesic_distance(&m, (10, 10), 1, Stencil::Sixteen),
            Err(Error::InObstacle { .. })
        ));
    }

    #[test]
    fn diagonal_detour_in_holes_domain() {
        let m = build_holes_domain(0.9, 0.05, 0.05).unwrap();
        let g = geodesic_distance(&m, (0, 0), 9, Stencil::Sixteen).unwrap();
        for n in [2i64, 4, 8] {
            let d = g.at(20 * n, 20 * n).unwrap();
            assert!(d >= 2.0 * n as f64 * 0.85, "n = {n}: d = {d}");
        }
    }

    #[test]
    fn free_plane_cone_coefficient() {
        let m = build_free_plane((1.0, 1.0), 0.05).unwrap();
        let theta: f64 = 0.7;
        let c = cone_coefficient(&m, (theta.cos(), theta.sin()), 8, Stencil::Sixteen).unwrap();
        assert!(
            c.value <= 1.0 + 1e-9 && c.value >= 1.0 / 1.0275,
            "{}",
            c.value
        );
        assert!(cone_coefficient(&m, (1.0, 0.0), 3, Stencil::Sixteen).is_err());
    }

    #[test]
    fn upper_bound_scaling() {
        let f = Nonlinearity::kpp(1.0).unwrap();
        assert_relative_eq!(speed_upper_bound(1.0, &f), 2.0);
        assert_eq!(speed_upper_bound(0.0, &f), 0.0);
        let g = Nonlinearity::combustion(0.25, crate::dynamics::CombustionShape::Quadratic, 1.0)
            .unwrap();
        assert_relative_eq!(speed_upper_bound(0.3, &g), 0.6 * 0.5, epsilon = 1e-12);
    }

    #[test]
    fn lp_fit_of_pure_short_time_kernel() {
        // kernel 1/(4 pi t) at the source only: the fit puts all weight on delta
        let times = [0.5, 1.0, 2.0, 4.0];
        let samples: Vec<HeatSample> = times
            .iter()
            .map(|&t| HeatSample {
                t,
                x: 0.0,
                y: 0.0,
                distance: 0.0,
                kernel: 1.0 / (4.0 * std::f64::consts::PI * t),
            })
            .collect();
        let (c, delta) = fit_heat_bound(&samples, 0.5, &times);
        assert_relative_eq!(c, 1.0 / (4.0 * std::f64::consts::PI * 4.5), epsilon = 1e-9);
        assert_relative_eq!(delta, 4.0, epsilon = 1e-6);
    }

    #[test]
    fn audit_rejects_bad_inputs() {
        let m = build_free_plane((1.0, 1.0), 0.05).unwrap();
        assert!(heat_bound_audit(&m, 0.0, &[1.0], (0.0, 0.0), &[(0.5, 0.0)]).is_err());
        assert!(heat_bound_audit(&m, 0.5, &[0.01], (0.0, 0.0), &[(0.5, 0.0)]).is_err());
    }
}
