//! Finite windows of the tiled domain on which fields live.
//!
//! A window is a rectangular array of cells in a lattice basis adapted to a
//! rational direction `(p, q)`. With `u1 = (p', q')` chosen so that
//! `p p' + q q' = 1` and `v0 = (-q, p)`, the window cell `(a, b)` is the global
//! cell `origin + a u1 + b v0`. Moving one step in `a` advances the along
//! coordinate `x . e` by `dx / |(p, q)|`; moving in `b` keeps it fixed. The
//! axis-aligned case `(p, q) = (1, 0)` is the ordinary grid.

use crate::geometry::PeriodicCellMask;
use crate::lattice::{ext_gcd, gcd, lcm, primitive};
use crate::{Error, Result};

/// Treatment of one window axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisMode {
    /// Wraps around; the extent must be a multiple of the tiling period.
    Periodic,
    /// Edge cells whose stencil leaves the window hold their current value.
    Clamped,
}

/// Placement of a window in the tiled plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowSpec {
    pub direction: (i64, i64),
    pub origin: (i64, i64),
    pub along: usize,
    pub across: usize,
    pub along_mode: AxisMode,
    pub across_mode: AxisMode,
}

/// Order of the neighbor slots: `+x, -x, +y, -y`.
pub const NEIGHBOR_STEPS: [(i64, i64); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];

#[derive(Debug, Clone)]
pub struct Window {
    spec: WindowSpec,
    dx: f64,
    u1: (i64, i64),
    v0: (i64, i64),
    fluid: Vec<bool>,
    /// Fluid cells updated by the integrator.
    active: Vec<u32>,
    /// Neighbor slots of each active cell; a blocked face points back to the cell.
    neighbors: Vec<[u32; 4]>,
    /// Fluid cells held fixed.
    frozen: Vec<u32>,
    across_period: usize,
}

impl Window {
    pub fn new(mask: &PeriodicCellMask, spec: WindowSpec) -> Result<Self> {
        let (p, q) = spec.direction;
        if (p, q) == (0, 0) || primitive(p, q) != (p, q) {
            return Err(Error::config(format!(
                "window direction ({p}, {q}) must be a primitive integer vector"
            )));
        }
        if spec.along == 0 || spec.across == 0 {
            return Err(Error::config("window extents must be positive"));
        }
        let (_, pp, qq) = ext_gcd(p, q);
        let u1 = (pp, qq);
        let v0 = (-q, p);
        let (nx, ny) = mask.dims();
        let (nx, ny) = (nx as i64, ny as i64);
        let across_period = lcm(nx / gcd(nx, q), ny / gcd(ny, p)) as usize;
        if spec.across_mode == AxisMode::Periodic && !spec.across.is_multiple_of(across_period) {
            return Err(Error::config(format!(
                "periodic across extent {} is not a multiple of the period {across_period}",
                spec.across
            )));
        }
        if spec.along_mode == AxisMode::Periodic {
            let along_period = match (p.abs(), q.abs()) {
                (1, 0) => nx,
                (0, 1) => ny,
                _ => {
                    return Err(Error::config(
                        "periodic along mode needs an axis-aligned window",
                    ))
                }
            } as usize;
            if !spec.along.is_multiple_of(along_period) {
                return Err(Error::config(format!(
                    "periodic along extent {} is not a multiple of the period {along_period}",
                    spec.along
                )));
            }
        }
        let n_cells = spec.along * spec.across;
        if n_cells >= u32::MAX as usize {
            return Err(Error::config("window too large"));
        }

        // Offsets in (a, b) of the four physical neighbors.
        let steps: Vec<(i64, i64)> = NEIGHBOR_STEPS
            .iter()
            .map(|&(di, dj)| (di * p + dj * q, -di * qq + dj * pp))
            .collect();
        debug_assert!(NEIGHBOR_STEPS
            .iter()
            .zip(&steps)
            .all(|(&(di, dj), &(da, db))| {
                da * u1.0 + db * v0.0 == di && da * u1.1 + db * v0.1 == dj
            }));

        let mut w = Window {
            spec,
            dx: mask.dx(),
            u1,
            v0,
            fluid: vec![false; n_cells],
            active: Vec::new(),
            neighbors: Vec::new(),
            frozen: Vec::new(),
            across_period,
        };
        for b in 0..spec.across {
            for a in 0..spec.along {
                let (i, j) = w.global(a, b);
                w.fluid[b * spec.along + a] = mask.is_fluid(i, j);
            }
        }
        for b in 0..spec.across {
            for a in 0..spec.along {
                let k = b * spec.along + a;
                if !w.fluid[k] {
                    continue;
                }
                let (i, j) = w.global(a, b);
                let mut slots = [k as u32; 4];
                let mut inside = true;
                for (s, (&(da, db), &(di, dj))) in steps.iter().zip(&NEIGHBOR_STEPS).enumerate() {
                    if !mask.is_fluid(i + di, j + dj) {
                        continue;
                    }
                    match w.wrap(a as i64 + da, b as i64 + db) {
                        Some(nk) => slots[s] = nk as u32,
                        None => inside = false,
                    }
                }
                if inside {
                    w.active.push(k as u32);
                    w.neighbors.push(slots);
                } else {
                    w.frozen.push(k as u32);
                }
            }
        }
        Ok(w)
    }

    /// Axis-aligned window with clamped edges covering the box
    /// `[center - half, center + half]`.
    pub fn centered(
        mask: &PeriodicCellMask,
        center: (f64, f64),
        half_extent: (f64, f64),
    ) -> Result<Self> {
        let (i0, j0) = mask.cell_of(center.0 - half_extent.0, center.1 - half_extent.1);
        let (i1, j1) = mask.cell_of(center.0 + half_extent.0, center.1 + half_extent.1);
        Window::new(
            mask,
            WindowSpec {
                direction: (1, 0),
                origin: (i0, j0),
                along: (i1 - i0 + 1) as usize,
                across: (j1 - j0 + 1) as usize,
                along_mode: AxisMode::Clamped,
                across_mode: AxisMode::Clamped,
            },
        )
    }

    /// Axis-aligned periodic window of `reps` periodicity cells per axis.
    pub fn periodic(mask: &PeriodicCellMask, reps: (usize, usize)) -> Result<Self> {
        let (nx, ny) = mask.dims();
        Window::new(
            mask,
            WindowSpec {
                direction: (1, 0),
                origin: (0, 0),
                along: nx * reps.0,
                across: ny * reps.1,
                along_mode: AxisMode::Periodic,
                across_mode: AxisMode::Periodic,
            },
        )
    }

    /// Smallest periodic across extent for this direction and mask.
    pub fn across_period(mask: &PeriodicCellMask, direction: (i64, i64)) -> usize {
        let (nx, ny) = mask.dims();
        let (nx, ny) = (nx as i64, ny as i64);
        let (p, q) = direction;
        lcm(nx / gcd(nx, q), ny / gcd(ny, p)) as usize
    }

    fn wrap(&self, a: i64, b: i64) -> Option<usize> {
        let (na, nb) = (self.spec.along as i64, self.spec.across as i64);
        let a = match self.spec.along_mode {
            AxisMode::Periodic => a.rem_euclid(na),
            AxisMode::Clamped if (0..na).contains(&a) => a,
            AxisMode::Clamped => return None,
        };
        let b = match self.spec.across_mode {
            AxisMode::Periodic => b.rem_euclid(nb),
            AxisMode::Clamped if (0..nb).contains(&b) => b,
            AxisMode::Clamped => return None,
        };
        Some((b * na + a) as usize)
    }

    #[inline]
    pub fn global(&self, a: usize, b: usize) -> (i64, i64) {
        let (a, b) = (a as i64, b as i64);
        (
            self.spec.origin.0 + a * self.u1.0 + b * self.v0.0,
            self.spec.origin.1 + a * self.u1.1 + b * self.v0.1,
        )
    }

    /// Global cell of the flat index `k`.
    #[inline]
    pub fn global_of(&self, k: usize) -> (i64, i64) {
        self.global(k % self.spec.along, k / self.spec.along)
    }

    /// Physical center of the flat index `k`.
    #[inline]
    pub fn position(&self, k: usize) -> (f64, f64) {
        let (i, j) = self.global_of(k);
        ((i as f64 + 0.5) * self.dx, (j as f64 + 0.5) * self.dx)
    }

    /// Flat index of the global cell `(i, j)` if the window covers it.
    pub fn index_of(&self, i: i64, j: i64) -> Option<usize> {
        // Invert the unimodular basis [u1 v0].
        let (di, dj) = (i - self.spec.origin.0, j - self.spec.origin.1);
        let (p, q) = self.spec.direction;
        let a = di * p + dj * q;
        let b = -di * self.u1.1 + dj * self.u1.0;
        let (na, nb) = (self.spec.along as i64, self.spec.across as i64);
        if (0..na).contains(&a) && (0..nb).contains(&b) {
            Some((b * na + a) as usize)
        } else {
            None
        }
    }

    /// Flat index of the window cell containing the point, if any.
    pub fn index_at(&self, x: f64, y: f64) -> Option<usize> {
        self.index_of((x / self.dx).floor() as i64, (y / self.dx).floor() as i64)
    }

    pub fn spec(&self) -> &WindowSpec {
        &self.spec
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn len(&self) -> usize {
        self.fluid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fluid.is_empty()
    }

    #[inline]
    pub fn is_fluid(&self, k: usize) -> bool {
        self.fluid[k]
    }

    pub fn active(&self) -> &[u32] {
        &self.active
    }

    pub fn neighbors(&self) -> &[[u32; 4]] {
        &self.neighbors
    }

    pub fn frozen(&self) -> &[u32] {
        &self.frozen
    }

    /// Unit vector of the window direction.
    pub fn unit_direction(&self) -> (f64, f64) {
        let (p, q) = self.spec.direction;
        let n = (p as f64).hypot(q as f64);
        (p as f64 / n, q as f64 / n)
    }

    /// Along coordinate `x . e` of window column `a`, up to the origin offset.
    pub fn along_step(&self) -> f64 {
        let (p, q) = self.spec.direction;
        self.dx / (p as f64).hypot(q as f64)
    }

    pub fn across_period_cells(&self) -> usize {
        self.across_period
    }

    /// Same window translated by `shift` columns along the direction.
    pub fn shifted(&self, mask: &PeriodicCellMask, shift: i64) -> Result<Self> {
        let mut spec = self.spec;
        spec.origin = (
            spec.origin.0 + shift * self.u1.0,
            spec.origin.1 + shift * self.u1.1,
        );
        Window::new(mask, spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_free_plane, build_holes_domain};

    #[test]
    fn axis_window_neighbors() {
        let m = build_free_plane((1.0, 1.0), 0.1).unwrap();
        let w = Window::centered(&m, (0.0, 0.0), (0.5, 0.5)).unwrap();
        assert_eq!(w.spec().along, 11);
        // all interior cells active, the boundary ring frozen
        assert_eq!(w.active().len(), 9 * 9);
        assert_eq!(w.frozen().len(), 11 * 11 - 81);
        let k = w.index_of(0, 0).unwrap();
        let slot = w.active().iter().position(|&c| c as usize == k).unwrap();
        let nb = w.neighbors()[slot];
        assert_eq!(w.global_of(nb[0] as usize), (1, 0));
        assert_eq!(w.global_of(nb[1] as usize), (-1, 0));
        assert_eq!(w.global_of(nb[2] as usize), (0, 1));
        assert_eq!(w.global_of(nb[3] as usize), (0, -1));
    }

    #[test]
    fn skew_window_maps_physical_neighbors() {
        let m = build_holes_domain(0.8, 0.2, 0.05).unwrap();
        for dir in [(1, 1), (2, -1), (-3, 2), (0, 1)] {
            let n = Window::across_period(&m, dir);
            let w = Window::new(
                &m,
                WindowSpec {
                    direction: dir,
                    origin: (3, -2),
                    along: 40,
                    across: n,
                    along_mode: AxisMode::Clamped,
                    across_mode: AxisMode::Periodic,
                },
            )
            .unwrap();
            for (slot, &k) in w.active().iter().enumerate() {
                let (i, j) = w.global_of(k as usize);
                for (s, &(di, dj)) in NEIGHBOR_STEPS.iter().enumerate() {
                    let nk = w.neighbors()[slot][s] as usize;
                    if m.is_fluid(i + di, j + dj) {
                        let (ni, nj) = w.global_of(nk);
                        // same cell up to a period of the tiling
                        let (nx, ny) = m.dims();
                        assert_eq!((ni - i - di).rem_euclid(nx as i64), 0);
                        assert_eq!((nj - j - dj).rem_euclid(ny as i64), 0);
                    } else {
                        assert_eq!(nk, k as usize);
                    }
                }
            }
        }
    }

    #[test]
    fn index_round_trip() {
        let m = build_free_plane((1.0, 1.0), 0.05).unwrap();
        let w = Window::new(
            &m,
            WindowSpec {
                direction: (2, 3),
                origin: (5, 7),
                along: 30,
                across: 20,
                along_mode: AxisMode::Clamped,
                across_mode: AxisMode::Clamped,
            },
        )
        .unwrap();
        for k in 0..w.len() {
            let (i, j) = w.global_of(k);
            assert_eq!(w.index_of(i, j), Some(k));
        }
        assert_eq!(w.index_of(-100, 0), None);
    }

    #[test]
    fn rejects_incompatible_extents() {
        let m = build_free_plane((1.0, 1.0), 0.1).unwrap();
        let spec = WindowSpec {
            direction: (1, 1),
            origin: (0, 0),
            along: 10,
            across: 7,
            along_mode: AxisMode::Clamped,
            across_mode: AxisMode::Periodic,
        };
        assert!(Window::new(&m, spec).is_err());
        let spec = WindowSpec {
            across: 10,
            along_mode: AxisMode::Periodic,
            ..spec
        };
        assert!(Window::new(&m, spec).is_err());
        let spec = WindowSpec {
            direction: (2, 2),
            ..spec
        };
        assert!(Window::new(&m, spec).is_err());
    }
}
