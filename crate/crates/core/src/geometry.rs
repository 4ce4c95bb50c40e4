//! Rasterized periodic perforated domains.
//!
//! A [`PeriodicCellMask`] stores the occupancy of one periodicity cell
//! `[0, L1) x [0, L2)` on a uniform grid of step `dx`. Cell `(i, j)` has its
//! center at `((i + 0.5) dx, (j + 0.5) dx)` and is classified by a point test
//! at that center. Every consumer unfolds the tiling on demand through
//! [`PeriodicCellMask::is_fluid`], which accepts any global cell index.

use std::collections::{HashSet, VecDeque};
use std::fmt::Write as _;
use std::path::Path;

use crate::lattice::sublattice_index;
use crate::{Error, Result};

const DIVIDE_TOL: f64 = 1e-9;

/// Occupancy of one periodicity cell of a perforated periodic 2-D domain.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicCellMask {
    periods: (f64, f64),
    dx: f64,
    nx: usize,
    ny: usize,
    /// Row-major, `j * nx + i`; `true` is a point of the domain.
    fluid: Vec<bool>,
    obstacle_count: usize,
}

impl PeriodicCellMask {
    /// Builds a mask by classifying every cell center with `is_fluid(x, y)`.
    ///
    /// The mask must be connected once tiled and its origin cell must be fluid.
    pub fn from_fn(
        periods: (f64, f64),
        dx: f64,
        is_fluid: impl Fn(f64, f64) -> bool,
    ) -> Result<Self> {
        let nx = cells_per_period(periods.0, dx)?;
        let ny = cells_per_period(periods.1, dx)?;
        let mut fluid = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            let y = (j as f64 + 0.5) * dx;
            for i in 0..nx {
                fluid.push(is_fluid((i as f64 + 0.5) * dx, y));
            }
        }
        Self::from_occupancy(periods, dx, fluid)
    }

    /// Builds a mask from a row-major occupancy grid (`j * nx + i`).
    pub fn from_occupancy(periods: (f64, f64), dx: f64, fluid: Vec<bool>) -> Result<Self> {
        let nx = cells_per_period(periods.0, dx)?;
        let ny = cells_per_period(periods.1, dx)?;
        if fluid.len() != nx * ny {
            return Err(Error::config(format!(
                "occupancy has {} cells, expected {nx} x {ny}",
                fluid.len()
            )));
        }
        if !fluid.iter().any(|&f| f) {
            return Err(Error::config("mask has no fluid cell"));
        }
        if !fluid[0] {
            return Err(Error::config("origin cell (0, 0) is not fluid"));
        }
        let mut mask = PeriodicCellMask {
            periods,
            dx,
            nx,
            ny,
            fluid,
            obstacle_count: 0,
        };
        mask.obstacle_count = mask.count_obstacles();
        if !check_connected(&mask) {
            return Err(Error::Disconnected(
                "the tiled fluid set has more than one component".into(),
            ));
        }
        Ok(mask)
    }

    pub fn periods(&self) -> (f64, f64) {
        self.periods
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Grid dimensions of one periodicity cell.
    pub fn dims(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    /// Number of connected obstacles per periodicity cell.
    pub fn obstacle_count(&self) -> usize {
        self.obstacle_count
    }

    /// Short identifier `nx x ny @ dx` plus an FNV-1a hash of the occupancy.
    pub fn id(&self) -> String {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for &f in &self.fluid {
            h ^= f as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        format!("{}x{}@{}-{h:016x}", self.nx, self.ny, self.dx)
    }

    pub fn fluid_cells(&self) -> usize {
        self.fluid.iter().filter(|&&f| f).count()
    }

    /// Occupancy of the global cell `(i, j)` of the tiled plane.
    #[inline]
    pub fn is_fluid(&self, i: i64, j: i64) -> bool {
        let ii = i.rem_euclid(self.nx as i64) as usize;
        let jj = j.rem_euclid(self.ny as i64) as usize;
        self.fluid[jj * self.nx + ii]
    }

    /// Center of the global cell `(i, j)`.
    #[inline]
    pub fn cell_center(&self, i: i64, j: i64) -> (f64, f64) {
        ((i as f64 + 0.5) * self.dx, (j as f64 + 0.5) * self.dx)
    }

    /// Global cell containing the point `(x, y)`.
    #[inline]
    pub fn cell_of(&self, x: f64, y: f64) -> (i64, i64) {
        ((x / self.dx).floor() as i64, (y / self.dx).floor() as i64)
    }

    /// Fluid cell whose center is nearest to `(x, y)`, searched within `max_dist`.
    pub fn nearest_fluid_cell(&self, x: f64, y: f64, max_dist: f64) -> Option<(i64, i64)> {
        let (ci, cj) = self.cell_of(x, y);
        let reach = (max_dist / self.dx).ceil() as i64 + 1;
        let mut best: Option<((i64, i64), f64)> = None;
        for dj in -reach..=reach {
            for di in -reach..=reach {
                let (i, j) = (ci + di, cj + dj);
                if !self.is_fluid(i, j) {
                    continue;
                }
                let (cx, cy) = self.cell_center(i, j);
                let d = (cx - x).hypot(cy - y);
                if d <= max_dist && best.is_none_or(|(_, bd)| d < bd) {
                    best = Some(((i, j), d));
                }
            }
        }
        best.map(|(c, _)| c)
    }

    /// True when every cell whose center lies within `radius` of `center` is fluid.
    /// On failure returns the first offending cell in scan order.
    pub fn disc_clear(
        &self,
        center: (f64, f64),
        radius: f64,
    ) -> std::result::Result<(), (i64, i64)> {
        let (i0, j0) = self.cell_of(center.0 - radius, center.1 - radius);
        let (i1, j1) = self.cell_of(center.0 + radius, center.1 + radius);
        for j in j0..=j1 {
            for i in i0..=i1 {
                let (x, y) = self.cell_center(i, j);
                if (x - center.0).hypot(y - center.1) <= radius && !self.is_fluid(i, j) {
                    return Err((i, j));
                }
            }
        }
        Ok(())
    }

    /// True when the horizontal band `|y - center_y| <= radius` is free of obstacles,
    /// i.e. a disc of that radius can translate along `e_x` without touching them.
    pub fn horizontal_corridor_clear(&self, center_y: f64, radius: f64) -> bool {
        let (_, j0) = self.cell_of(0.0, center_y - radius);
        let (_, j1) = self.cell_of(0.0, center_y + radius);
        (j0..=j1).all(|j| {
            let y = (j as f64 + 0.5) * self.dx;
            (y - center_y).abs() > radius || (0..self.nx as i64).all(|i| self.is_fluid(i, j))
        })
    }

    /// Image of the mask under a lattice-compatible isometry.
    pub fn transformed(&self, iso: &Isometry2D) -> Result<Self> {
        let mut fluid = vec![false; self.nx * self.ny];
        for j in 0..self.ny as i64 {
            for i in 0..self.nx as i64 {
                let (ti, tj) = self.image_cell(iso, i, j)?;
                let ti = ti.rem_euclid(self.nx as i64) as usize;
                let tj = tj.rem_euclid(self.ny as i64) as usize;
                fluid[tj * self.nx + ti] = self.is_fluid(i, j);
            }
        }
        // The image of the origin may be an obstacle; shifting keeps the designated
        // origin fluid without changing the tiled set up to translation.
        let mut out = PeriodicCellMask {
            periods: self.periods,
            dx: self.dx,
            nx: self.nx,
            ny: self.ny,
            fluid,
            obstacle_count: self.obstacle_count,
        };
        if !out.fluid[0] {
            return Err(Error::IncompatibleIsometry(
                "image of the domain does not contain the origin cell".into(),
            ));
        }
        out.obstacle_count = out.count_obstacles();
        Ok(out)
    }

    fn image_cell(&self, iso: &Isometry2D, i: i64, j: i64) -> Result<(i64, i64)> {
        let (x, y) = self.cell_center(i, j);
        let (tx, ty) = iso.apply((x, y))?;
        let fi = tx / self.dx - 0.5;
        let fj = ty / self.dx - 0.5;
        let (ri, rj) = (fi.round(), fj.round());
        if (fi - ri).abs() > 1e-6 || (fj - rj).abs() > 1e-6 {
            return Err(Error::IncompatibleIsometry(format!(
                "cell center ({x}, {y}) maps off the grid to ({tx}, {ty})"
            )));
        }
        Ok((ri as i64, rj as i64))
    }

    fn count_obstacles(&self) -> usize {
        let (nx, ny) = (self.nx as i64, self.ny as i64);
        let mut seen = vec![false; self.fluid.len()];
        let mut count = 0;
        for start in 0..self.fluid.len() {
            if self.fluid[start] || seen[start] {
                continue;
            }
            count += 1;
            seen[start] = true;
            let mut queue = VecDeque::from([start]);
            while let Some(k) = queue.pop_front() {
                let (i, j) = ((k % self.nx) as i64, (k / self.nx) as i64);
                for (di, dj) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                    let ni = (i + di).rem_euclid(nx) as usize;
                    let nj = (j + dj).rem_euclid(ny) as usize;
                    let nk = nj * self.nx + ni;
                    if !self.fluid[nk] && !seen[nk] {
                        seen[nk] = true;
                        queue.push_back(nk);
                    }
                }
            }
        }
        count
    }

    /// Serializes to the `PMASK2` text format.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity((self.nx + 1) * self.ny + 64);
        let _ = writeln!(
            out,
            "PMASK2 {} {} {}",
            self.periods.0, self.periods.1, self.dx
        );
        for j in 0..self.ny {
            for i in 0..self.nx {
                out.push(if self.fluid[j * self.nx + i] {
                    '1'
                } else {
                    '0'
                });
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty mask file".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 4 || fields[0] != "PMASK2" {
            return Err(Error::Parse(format!("bad mask header {header:?}")));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| Error::Parse(format!("bad number {s:?} in header: {e}")))
        };
        let periods = (num(fields[1])?, num(fields[2])?);
        let dx = num(fields[3])?;
        let nx = cells_per_period(periods.0, dx)?;
        let mut fluid = Vec::new();
        for (row, line) in lines.enumerate() {
            if line.len() != nx {
                return Err(Error::Parse(format!(
                    "row {row} has {} columns, expected {nx}",
                    line.len()
                )));
            }
            for ch in line.chars() {
                fluid.push(match ch {
                    '1' => true,
                    '0' => false,
                    other => return Err(Error::Parse(format!("bad cell character {other:?}"))),
                });
            }
        }
        Self::from_occupancy(periods, dx, fluid)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

fn cells_per_period(length: f64, dx: f64) -> Result<usize> {
    if !(length > 0.0 && dx > 0.0) || !length.is_finite() || !dx.is_finite() {
        return Err(Error::config(format!(
            "period {length} and grid step {dx} must be positive"
        )));
    }
    let n = (length / dx).round();
    if n < 1.0 || (n * dx - length).abs() > DIVIDE_TOL * length {
        return Err(Error::config(format!(
            "grid step {dx} does not divide the period {length}"
        )));
    }
    Ok(n as usize)
}

/// Lattice-compatible isometries of the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Isometry2D {
    /// Reflection about the line through `through` directed by `axis`.
    Reflection {
        axis: (f64, f64),
        through: (f64, f64),
    },
    /// Rotation by pi about `center`.
    RotationPi { center: (f64, f64) },
}

impl Isometry2D {
    /// Reflection about the horizontal axis `y = 0` (direction `e_x`).
    pub fn reflect_about_x_axis() -> Self {
        Isometry2D::Reflection {
            axis: (1.0, 0.0),
            through: (0.0, 0.0),
        }
    }

    /// Reflection about the line directed by `e` through the origin.
    pub fn reflection(e: (f64, f64)) -> Self {
        Isometry2D::Reflection {
            axis: e,
            through: (0.0, 0.0),
        }
    }

    pub fn apply(&self, p: (f64, f64)) -> Result<(f64, f64)> {
        match *self {
            Isometry2D::Reflection { axis, through } => {
                let norm = axis.0.hypot(axis.1);
                if norm == 0.0 {
                    return Err(Error::IncompatibleIsometry("zero reflection axis".into()));
                }
                let (ex, ey) = (axis.0 / norm, axis.1 / norm);
                let (rx, ry) = (p.0 - through.0, p.1 - through.1);
                let along = rx * ex + ry * ey;
                Ok((
                    through.0 + 2.0 * along * ex - rx,
                    through.1 + 2.0 * along * ey - ry,
                ))
            }
            Isometry2D::RotationPi { center } => Ok((2.0 * center.0 - p.0, 2.0 * center.1 - p.1)),
        }
    }

    /// Linear part applied to a direction.
    pub fn apply_direction(&self, e: (f64, f64)) -> Result<(f64, f64)> {
        let o = self.apply((0.0, 0.0))?;
        let p = self.apply(e)?;
        Ok((p.0 - o.0, p.1 - o.1))
    }
}

/// Whether the tiled fluid set is connected.
///
/// Flood fill on the torus while recording, for every cell, the lattice tile in
/// which it was first reached. Every edge closing a loop contributes the tile
/// difference of its endpoints; the tiling is connected iff the torus is
/// connected and those differences generate the whole period lattice.
pub fn check_connected(mask: &PeriodicCellMask) -> bool {
    let (nx, ny) = (mask.nx as i64, mask.ny as i64);
    let Some(start) = mask.fluid.iter().position(|&f| f) else {
        return false;
    };
    let mut lift: Vec<Option<(i64, i64)>> = vec![None; mask.fluid.len()];
    let mut generators: HashSet<(i64, i64)> = HashSet::new();
    lift[start] = Some((0, 0));
    let mut queue = VecDeque::from([start]);
    let mut reached = 1usize;
    while let Some(k) = queue.pop_front() {
        let (i, j) = ((k % mask.nx) as i64, (k / mask.nx) as i64);
        let (ti, tj) = lift[k].expect("queued cells are lifted");
        for (di, dj) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
            let (gi, gj) = (i + di, j + dj);
            let (ni, nj) = (gi.rem_euclid(nx), gj.rem_euclid(ny));
            let nk = (nj * nx + ni) as usize;
            if !mask.fluid[nk] {
                continue;
            }
            let tile = (ti + gi.div_euclid(nx), tj + gj.div_euclid(ny));
            match lift[nk] {
                None => {
                    lift[nk] = Some(tile);
                    reached += 1;
                    queue.push_back(nk);
                }
                Some(existing) => {
                    let diff = (tile.0 - existing.0, tile.1 - existing.1);
                    if diff != (0, 0) && diff.0 >= 0 {
                        generators.insert(diff);
                    } else if diff != (0, 0) {
                        generators.insert((-diff.0, -diff.1));
                    }
                }
            }
        }
    }
    if reached != mask.fluid_cells() {
        return false;
    }
    let gens: Vec<(i64, i64)> = generators.into_iter().collect();
    sublattice_index(&gens) == 1
}

/// Whether the mask is invariant under `iso`, cell by cell.
pub fn symmetry_holds(mask: &PeriodicCellMask, iso: &Isometry2D) -> Result<bool> {
    for j in 0..mask.ny as i64 {
        for i in 0..mask.nx as i64 {
            let (ti, tj) = mask.image_cell(iso, i, j)?;
            if mask.is_fluid(ti, tj) != mask.is_fluid(i, j) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// The whole plane, sampled with periods `L` and step `dx`.
pub fn build_free_plane(periods: (f64, f64), dx: f64) -> Result<PeriodicCellMask> {
    PeriodicCellMask::from_fn(periods, dx, |_, _| true)
}

/// 1-periodic plane with rectangular holes `(1 - alpha, alpha) x [beta, 1 - beta]`.
///
/// Leaves a horizontal channel of height `2 beta` and a vertical channel of width
/// `2 (1 - alpha)` through every cell.
pub fn build_holes_domain(alpha: f64, beta: f64, dx: f64) -> Result<PeriodicCellMask> {
    if !(alpha > 0.5 && alpha < 1.0) {
        return Err(Error::config(format!(
            "alpha = {alpha} must lie in (1/2, 1)"
        )));
    }
    if !(beta > 0.0 && beta < 0.5) {
        return Err(Error::config(format!("beta = {beta} must lie in (0, 1/2)")));
    }
    let hole_w = 2.0 * alpha - 1.0;
    let hole_h = 1.0 - 2.0 * beta;
    if hole_w < 2.0 * dx || hole_h < 2.0 * dx {
        return Err(Error::config(format!(
            "hole {hole_w} x {hole_h} is under-resolved at dx = {dx}"
        )));
    }
    if 2.0 * beta < dx || 2.0 * (1.0 - alpha) < dx {
        return Err(Error::config(format!(
            "free channels ({}, {}) are under-resolved at dx = {dx}",
            2.0 * beta,
            2.0 * (1.0 - alpha)
        )));
    }
    PeriodicCellMask::from_fn((1.0, 1.0), dx, |x, y| {
        let in_hole = x > 1.0 - alpha && x < alpha && y >= beta && y <= 1.0 - beta;
        !in_hole
    })
}

/// Parameters of the slanted-slab domain family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlantParams {
    pub alpha: f64,
    pub radius: f64,
    /// Shrinkage of the slab, in `(0, alpha R / 4]`.
    pub epsilon: f64,
}

impl SlantParams {
    pub fn new(alpha: f64, radius: f64) -> Self {
        SlantParams {
            alpha,
            radius,
            epsilon: alpha * radius / 8.0,
        }
    }

    pub fn period(&self) -> f64 {
        3.0 * self.radius
    }

    /// Point test for the slab `alpha x + R + eps <= y <= alpha x + (1 + alpha) R - eps`,
    /// `y in [R, 2R]`, repeated with period `3R`.
    pub fn in_slab(&self, x: f64, y: f64, eps: f64) -> bool {
        let (a, r) = (self.alpha, self.radius);
        let period = 3.0 * r;
        let y = y.rem_euclid(period);
        if !(r..=2.0 * r).contains(&y) {
            return false;
        }
        // Horizontal translates by 3R shift the slab vertically by 3 alpha R.
        let s = y - r - a * x - eps;
        let s = s.rem_euclid(3.0 * a * r);
        s <= a * r - 2.0 * eps
    }
}

/// `3R`-periodic domain whose obstacles are thin slabs of slope `alpha` inside the
/// band `y in [R, 2R]`, leaving the free corridor `y in (2R, 4R)`.
pub fn build_slant_domain(params: SlantParams, dx: f64) -> Result<PeriodicCellMask> {
    let SlantParams {
        alpha,
        radius,
        epsilon,
    } = params;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::config(format!("alpha = {alpha} must lie in (0, 1)")));
    }
    if !(radius > 0.0) {
        return Err(Error::config(format!("R = {radius} must be positive")));
    }
    if !(epsilon > 0.0 && epsilon <= alpha * radius / 4.0) {
        return Err(Error::config(format!(
            "slab shrinkage {epsilon} must lie in (0, alpha R / 4]"
        )));
    }
    let thickness = alpha * radius - 2.0 * epsilon;
    if thickness < 2.0 * dx {
        return Err(Error::config(format!(
            "slab thickness {thickness} is under-resolved at dx = {dx}"
        )));
    }
    let mask = PeriodicCellMask::from_fn((3.0 * radius, 3.0 * radius), dx, |x, y| {
        !params.in_slab(x, y, epsilon)
    })?;
    Ok(mask)
}

/// 1-periodic plane with closed discs of radius `r` centered in every cell.
pub fn build_disc_lattice(r: f64, dx: f64) -> Result<PeriodicCellMask> {
    if !(r > 0.0 && r < 0.5 - dx) {
        return Err(Error::config(format!(
            "disc radius {r} must lie in (0, 1/2 - dx)"
        )));
    }
    PeriodicCellMask::from_fn((1.0, 1.0), dx, |x, y| (x - 0.5).hypot(y - 0.5) > r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_plane_dimensions() {
        let m = build_free_plane((1.0, 1.0), 0.05).unwrap();
        assert_eq!(m.dims(), (20, 20));
        assert_eq!(m.fluid_cells(), 400);
        assert_eq!(m.obstacle_count(), 0);
        let m = build_free_plane((3.0, 3.0), 0.1).unwrap();
        assert_eq!(m.dims(), (30, 30));
        assert!(check_connected(&m));
    }

    #[test]
    fn free_plane_rejects_non_dividing_step() {
        assert!(matches!(
            build_free_plane((1.0, 1.0), 0.3),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn holes_domain_rectangle() {
        let m = build_holes_domain(0.9, 0.05, 0.01).unwrap();
        assert_eq!(m.dims(), (100, 100));
        assert_eq!(m.obstacle_count(), 1);
        // obstacle spans 80 columns and 90 rows
        assert_eq!(m.fluid_cells(), 100 * 100 - 80 * 90);
        // horizontal channel y in (-0.05, 0.05) mod 1 is free
        for i in 0..100 {
            for j in [-5, -1, 0, 4] {
                assert!(m.is_fluid(i, j));
            }
        }
        assert!(!m.is_fluid(50, 50));
        assert!(check_connected(&m));
    }

    #[test]
    fn holes_domain_degenerate_and_invalid() {
        let m = build_holes_domain(0.51, 0.49, 0.005).unwrap();
        assert_eq!(m.fluid_cells(), 200 * 200 - 4 * 4);
        assert!(build_holes_domain(0.9, 0.05, 0.5).is_err());
        assert!(build_holes_domain(0.4, 0.05, 0.01).is_err());
        assert!(build_holes_domain(0.9, 0.5, 0.01).is_err());
    }

    #[test]
    fn slant_domain_corridor_and_sandwich() {
        let p = SlantParams::new(0.4, 5.0);
        let m = build_slant_domain(p, 0.05).unwrap();
        assert_eq!(m.dims(), (300, 300));
        assert!(m.horizontal_corridor_clear(15.0, 5.0));
        assert!(!m.horizontal_corridor_clear(7.5, 5.0));
        let (nx, ny) = m.dims();
        for j in 0..ny as i64 {
            for i in 0..nx as i64 {
                let (x, y) = m.cell_center(i, j);
                if !m.is_fluid(i, j) {
                    assert!(p.in_slab(x, y, 0.0), "obstacle cell outside tilde-K^0");
                }
                if p.in_slab(x, y, p.alpha * p.radius / 4.0) {
                    assert!(!m.is_fluid(i, j), "tilde-K^(aR/4) cell is fluid");
                }
            }
        }
    }

    #[test]
    fn slant_domain_steep_and_shallow() {
        let m = build_slant_domain(SlantParams::new(0.99, 2.0), 0.05).unwrap();
        assert!(check_connected(&m));
        let m = build_slant_domain(SlantParams::new(0.1, 5.0), 0.05).unwrap();
        assert!(check_connected(&m));
        assert!(build_slant_domain(SlantParams::new(0.1, 5.0), 0.5).is_err());
    }

    #[test]
    fn disc_lattice() {
        let m = build_disc_lattice(0.3, 0.01).unwrap();
        assert!(symmetry_holds(&m, &Isometry2D::reflect_about_x_axis()).unwrap());
        assert!(symmetry_holds(&m, &Isometry2D::reflection((0.0, 1.0))).unwrap());
        assert!(build_disc_lattice(0.5, 0.01).is_err());
    }

    #[test]
    fn narrow_throats_stay_connected() {
        let m = build_disc_lattice(0.49, 0.001).unwrap();
        assert!(check_connected(&m));
        // every fluid cell is reached by a plain flood fill over a 3x3 tile block
        let (nx, ny) = m.dims();
        let (w, h) = (3 * nx as i64, 3 * ny as i64);
        let mut seen = vec![false; (w * h) as usize];
        let start = (nx as i64, ny as i64);
        let mut queue = VecDeque::from([start]);
        seen[(start.1 * w + start.0) as usize] = true;
        while let Some((i, j)) = queue.pop_front() {
            for (di, dj) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                let (a, b) = (i + di, j + dj);
                if a < 0 || b < 0 || a >= w || b >= h {
                    continue;
                }
                let k = (b * w + a) as usize;
                if !seen[k] && m.is_fluid(a, b) {
                    seen[k] = true;
                    queue.push_back((a, b));
                }
            }
        }
        for j in ny as i64..2 * ny as i64 {
            for i in nx as i64..2 * nx as i64 {
                if m.is_fluid(i, j) {
                    assert!(seen[(j * w + i) as usize]);
                }
            }
        }
    }

    #[test]
    fn horizontal_wall_disconnects() {
        let m = build_free_plane((1.0, 1.0), 0.1).unwrap();
        let mut occ: Vec<bool> = (0..100).map(|_| true).collect();
        for i in 0..10 {
            occ[5 * 10 + i] = false;
        }
        assert!(matches!(
            PeriodicCellMask::from_occupancy(m.periods(), m.dx(), occ.clone()),
            Err(Error::Disconnected(_))
        ));
        // a wall on the seam row disconnects too, although the cell itself is one piece
        let mut occ: Vec<bool> = vec![true; 100];
        for i in 0..10 {
            occ[9 * 10 + i] = false;
        }
        assert!(PeriodicCellMask::from_occupancy((1.0, 1.0), 0.1, occ).is_err());
    }

    #[test]
    fn slant_domain_is_not_reflection_symmetric() {
        let m = build_slant_domain(SlantParams::new(0.4, 5.0), 0.05).unwrap();
        assert!(!symmetry_holds(&m, &Isometry2D::reflect_about_x_axis()).unwrap());
    }

    #[test]
    fn rotation_by_pi_on_free_plane_and_twice_identity() {
        let m = build_free_plane((1.0, 1.0), 0.05).unwrap();
        let rot = Isometry2D::RotationPi { center: (0.0, 0.0) };
        assert!(symmetry_holds(&m, &rot).unwrap());
        let holes = build_holes_domain(0.8, 0.1, 0.02).unwrap();
        let twice = holes.transformed(&rot).unwrap().transformed(&rot).unwrap();
        assert_eq!(twice, holes);
    }

    #[test]
    fn text_round_trip_is_bit_exact() {
        let m = build_holes_domain(0.9, 0.05, 0.05).unwrap();
        let text = m.to_text();
        assert!(text.starts_with("PMASK2 1 1 0.05\n"));
        let back = PeriodicCellMask::from_text(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn text_parse_errors() {
        assert!(PeriodicCellMask::from_text("").is_err());
        assert!(PeriodicCellMask::from_text("PMASK1 1 1 0.5\n11\n11\n").is_err());
        assert!(PeriodicCellMask::from_text("PMASK2 1 1 0.5\n1x\n11\n").is_err());
        assert!(PeriodicCellMask::from_text("PMASK2 1 1 0.5\n111\n11\n").is_err());
    }
}
