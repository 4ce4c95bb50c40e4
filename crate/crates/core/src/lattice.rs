//! Integer lattice helpers shared by the geometry and the strip windows.

pub fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

pub fn lcm(a: i64, b: i64) -> i64 {
    if a == 0 || b == 0 {
        return 0;
    }
    (a / gcd(a, b) * b).abs()
}

/// Returns `(g, x, y)` with `a*x + b*y = g = gcd(a, b)`.
pub fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    let (mut old_r, mut r) = (a, b);
    let (mut old_s, mut s) = (1i64, 0i64);
    let (mut old_t, mut t) = (0i64, 1i64);
    while r != 0 {
        let q = old_r.div_euclid(r);
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
        (old_t, t) = (t, old_t - q * t);
    }
    if old_r < 0 {
        (-old_r, -old_s, -old_t)
    } else {
        (old_r, old_s, old_t)
    }
}

/// Index of the sublattice of Z^2 generated by `vectors` (0 when rank < 2).
///
/// The index equals the gcd of all 2x2 minors.
pub fn sublattice_index(vectors: &[(i64, i64)]) -> i64 {
    let mut g = 0;
    for (k, &(a, b)) in vectors.iter().enumerate() {
        for &(c, d) in &vectors[k + 1..] {
            g = gcd(g, a * d - b * c);
            if g == 1 {
                return 1;
            }
        }
    }
    g
}

/// Reduces a rational direction `(p, q)` to lowest terms.
pub fn primitive(p: i64, q: i64) -> (i64, i64) {
    let g = gcd(p, q);
    if g == 0 {
        (0, 0)
    } else {
        (p / g, q / g)
    }
}

/// Finds a small integer vector `(p, q)` with `|p|, |q| <= max_entry` parallel to
/// `dir` within `tol` in angle, if one exists.
pub fn rational_direction(dir: (f64, f64), max_entry: i64, tol: f64) -> Option<(i64, i64)> {
    let theta = dir.1.atan2(dir.0);
    let mut best: Option<((i64, i64), f64)> = None;
    for p in -max_entry..=max_entry {
        for q in -max_entry..=max_entry {
            if (p, q) == (0, 0) || gcd(p, q) != 1 {
                continue;
            }
            let phi = (q as f64).atan2(p as f64);
            let mut diff = (theta - phi).abs() % std::f64::consts::TAU;
            if diff > std::f64::consts::PI {
                diff = std::f64::consts::TAU - diff;
            }
            if diff <= tol && best.is_none_or(|(_, d)| diff < d) {
                best = Some(((p, q), diff));
            }
        }
    }
    best.map(|(v, _)| v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ext_gcd_bezout() {
        for a in -12..=12 {
            for b in -12..=12 {
                let (g, x, y) = ext_gcd(a, b);
                assert_eq!(g, gcd(a, b));
                assert_eq!(a * x + b * y, g);
            }
        }
    }

    #[test]
    fn index_of_standard_lattices() {
        assert_eq!(sublattice_index(&[(1, 0), (0, 1)]), 1);
        assert_eq!(sublattice_index(&[(2, 0), (0, 1)]), 2);
        assert_eq!(sublattice_index(&[(1, 0)]), 0);
        assert_eq!(sublattice_index(&[(2, 0), (0, 2), (1, 1)]), 2);
        assert_eq!(sublattice_index(&[(2, 0), (3, 0), (0, 1)]), 1);
    }

    #[test]
    fn rational_directions() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(rational_direction((1.0, 0.0), 8, 1e-12), Some((1, 0)));
        assert_eq!(rational_direction((s, s), 8, 1e-12), Some((1, 1)));
        assert_eq!(rational_direction((-2.0, 1.0), 8, 1e-12), Some((-2, 1)));
        let t: f64 = 0.3;
        assert_eq!(rational_direction((t.cos(), t.sin()), 8, 1e-12), None);
    }
}
