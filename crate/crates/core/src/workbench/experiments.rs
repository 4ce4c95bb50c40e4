//! The built-in experiments.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4};
use std::fmt::Write as _;
use std::sync::Arc;
use std::time::Instant;

use super::config::{Domain, ExperimentConfig, Reaction, Settings};
use super::report::{Clause, ExperimentReport, Relation};
use crate::dynamics::{initial_bump, Class, DiffusionTensor, Nonlinearity, Window};
use crate::fronts::{
    closed_form_speed, empirical_front_speed, kpp_front_speed, sample_profile, uniform_angles,
    FrontOptions, Method, ProfileOptions,
};
use crate::geodesy::{cone_coefficient, heat_bound_audit, speed_upper_bound, Stencil};
use crate::geometry::{
    build_free_plane, build_holes_domain, build_slant_domain, symmetry_holds, Isometry2D,
    PeriodicCellMask, SlantParams,
};
use crate::subsolution::plant;
use crate::wulff::{
    constancy_dichotomy, empirical_spreading, fg_transform, fg_transform_at, Dichotomy,
    SpreadingMeasurement, SpreadingOptions,
};
use crate::{Error, Result};

/// Fitted heat-kernel constant of the free-plane audit at its defaults, as
/// first recorded. Later runs must stay within 10% of it.
pub const HEAT_REFERENCE_C: f64 = 0.017_644_547_684_872_246;

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn sample_times(horizon: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|k| horizon * k as f64 / n as f64).collect()
}

fn require_domain(s: &Settings, domain: Domain) -> Result<()> {
    if s.domain != domain {
        return Err(Error::config(format!(
            "this experiment runs on the {domain:?} domain, not {:?}",
            s.domain
        )));
    }
    Ok(())
}

fn require_class(f: &Nonlinearity, class: Class) -> Result<()> {
    if f.class() != class {
        return Err(Error::config(format!(
            "this experiment needs a {class:?} reaction, got {:?}",
            f.class()
        )));
    }
    Ok(())
}

/// Free-plane speed of `f` in direction `e_x`, from a one-cell-wide strip.
fn free_speed(f: &Nonlinearity, a: &DiffusionTensor, dx: f64) -> Result<(f64, f64)> {
    let mask = build_free_plane((dx, dx), dx)?;
    let opts = FrontOptions {
        horizon: 200.0,
        sample_dt: 1.0,
        behind: 30.0,
        ahead: 30.0,
        level: 0.5,
    };
    let run = empirical_front_speed(&mask, f, a, (1, 0), &opts)?;
    Ok((run.speed, run.stderr))
}

fn speeds_csv(m: &SpreadingMeasurement) -> String {
    let mut out = String::from("theta,speed,stderr\n");
    for ((a, s), e) in m.angles.iter().zip(&m.speeds).zip(&m.stderr) {
        let _ = writeln!(out, "{a},{s},{e}");
    }
    out
}

fn degrees(a: f64) -> String {
    format!("{}", (a.to_degrees() * 1e6).round() / 1e6)
}

pub(super) fn free_kpp(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let s = &cfg.settings;
    require_domain(s, Domain::Free)?;
    let f = s.nonlinearity()?;
    require_class(&f, Class::Kpp)?;
    let a = s.diffusion_tensor()?;
    let r = f.linear_rate();
    let mut report = ExperimentReport::new(cfg.clone());
    let angles = uniform_angles(s.directions);

    let start = Instant::now();
    let mask = s.mask_at(s.dx)?;
    let profile = sample_profile(
        &mask,
        &f,
        &a,
        &angles,
        Method::Eigenvalue,
        &ProfileOptions::default(),
    )?;
    let mut worst: f64 = 0.0;
    for (i, &c) in profile.speeds().iter().enumerate() {
        let exact = closed_form_speed(&a, r, profile.direction(i))?;
        worst = worst.max(relative(c, exact));
    }
    report.quantity("c_eig_max_rel_error", worst);
    report.check(
        Clause::Acc1,
        "eigenvalue c* max relative error to 2 sqrt(r e.Ae)",
        worst,
        Relation::AtMost,
        s.tolerance,
    );
    report.attach("c_eig.csv", profile.to_csv())?;
    let wulff = fg_transform(&profile, s.wulff_directions)?;
    report.attach("wulff.csv", wulff.to_csv())?;
    report.attach("wulff.svg", wulff.to_svg())?;
    report.time("eigenvalue_profile", start);

    let start = Instant::now();
    let smask = build_free_plane((1.0, 1.0), s.spread_dx)?;
    let center = smask.cell_center(0, 0);
    let u0 = |w: Arc<Window>| initial_bump(w, &smask, 0.9, 2.0, center);
    let opts = SpreadingOptions::new(
        center,
        s.eta,
        sample_times(s.spread_horizon, s.spread_times),
        angles.clone(),
    );
    let m = empirical_spreading(&smask, &f, &a, &u0, &opts)?;
    let mut worst: f64 = 0.0;
    for (d, &angle) in m.angles.iter().enumerate() {
        let exact = closed_form_speed(&a, r, (angle.cos(), angle.sin()))?;
        worst = worst.max(relative(m.speeds[d], exact));
        report.measured(
            format!("w_emp_{}deg", degrees(angle)),
            m.speeds[d],
            m.stderr[d],
        );
    }
    report.quantity("w_emp_max_rel_error", worst);
    report.check(
        Clause::Acc1,
        "spreading w max relative error to 2 sqrt(r e.Ae)",
        worst,
        Relation::AtMost,
        s.spread_tolerance,
    );
    report.attach("spreading.csv", m.to_csv())?;
    report.attach("w_emp.csv", speeds_csv(&m))?;
    report.time("spreading", start);
    Ok(report)
}

pub(super) fn anisotropic(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let s = &cfg.settings;
    require_domain(s, Domain::Free)?;
    let f = s.nonlinearity()?;
    require_class(&f, Class::Kpp)?;
    let a = s.diffusion_tensor()?;
    let r = f.linear_rate();
    let mut report = ExperimentReport::new(cfg.clone());
    let start = Instant::now();

    let angles = uniform_angles(s.wulff_directions);
    let mask = build_free_plane((1.0, 1.0), s.dx)?;
    let profile = sample_profile(
        &mask,
        &f,
        &a,
        &angles,
        Method::ClosedForm,
        &ProfileOptions::default(),
    )?;
    let wulff = fg_transform_at(&profile, &angles)?;
    let c_of = |e: (f64, f64)| 2.0 * (r * a.quad(e)).sqrt();
    let w_exact = |e: (f64, f64)| 2.0 * r.sqrt() / a.inverse_quad(e).sqrt();

    // Dense scan of min over xi of c(xi) / (xi . e), independent of the polygon.
    let scan = 20_000;
    let dense = |e: (f64, f64)| {
        (0..scan)
            .map(|k| std::f64::consts::TAU * k as f64 / scan as f64)
            .filter_map(|t| {
                let xi = (t.cos(), t.sin());
                let d = xi.0 * e.0 + xi.1 * e.1;
                (d > 1e-12).then(|| c_of(xi) / d)
            })
            .fold(f64::INFINITY, f64::min)
    };
    let (mut err_exact, mut err_dense, mut min_gap_off_axis) = (0.0f64, 0.0f64, f64::INFINITY);
    for (i, &angle) in angles.iter().enumerate() {
        let e = (angle.cos(), angle.sin());
        let w = wulff.radial()[i];
        err_exact = err_exact.max(relative(w, w_exact(e)));
        err_dense = err_dense.max(relative(w, dense(e)));
        let on_axis = (angle / FRAC_PI_2 - (angle / FRAC_PI_2).round()).abs() < 1e-9;
        if !on_axis {
            min_gap_off_axis = min_gap_off_axis.min(profile.speeds()[i] - w);
        }
    }
    report.quantity("w_max_rel_error_closed_form", err_exact);
    report.quantity("w_max_rel_error_dense_scan", err_dense);
    report.check(
        Clause::Acc2,
        "Wulff radius max relative error to 2 sqrt(r) / sqrt(e.A^-1 e)",
        err_exact,
        Relation::AtMost,
        s.tolerance,
    );
    report.check(
        Clause::Acc2,
        "Wulff radius max relative error to the dense xi-scan",
        err_dense,
        Relation::AtMost,
        s.tolerance,
    );

    let ed = (FRAC_1_SQRT_2, FRAC_1_SQRT_2);
    let gap = closed_form_speed(&a, r, ed)? - wulff.w_at(FRAC_PI_4);
    let gap_exact = c_of(ed) - w_exact(ed);
    report.quantity("gap_e_d", gap);
    report.quantity("gap_e_d_closed_form", gap_exact);
    report.check(
        Clause::Acc2,
        "relative error of c*(e_d) - w(e_d)",
        relative(gap, gap_exact),
        Relation::AtMost,
        s.tolerance,
    );
    if a.a != a.b {
        report.quantity("min_gap_off_axis", min_gap_off_axis);
        report.check(
            Clause::Acc2,
            "min of c* - w away from the axes",
            min_gap_off_axis,
            Relation::Above,
            0.0,
        );
    }
    let w_profile = wulff.radial_profile(&profile)?;
    if let Dichotomy::Witness { angle, gap } = constancy_dichotomy(&profile, &w_profile, 1e-9)? {
        report.quantity("dichotomy_witness_deg", angle.to_degrees());
        report.quantity("dichotomy_gap", gap);
    }
    report.quantity(
        "wulff_invariant_violations",
        wulff.invariant_violations(1e-9).len() as f64,
    );
    report.attach("c_star.csv", profile.to_csv())?;
    report.attach("w.csv", w_profile.to_csv())?;
    report.attach("wulff.csv", wulff.to_csv())?;
    report.attach("wulff.svg", wulff.to_svg())?;
    report.time("total", start);
    Ok(report)
}

pub(super) fn holes_kpp(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let s = &cfg.settings;
    require_domain(s, Domain::Holes)?;
    let f = s.nonlinearity()?;
    require_class(&f, Class::Kpp)?;
    let a = s.diffusion_tensor()?;
    if a != DiffusionTensor::IDENTITY {
        return Err(Error::config("the geodesic bound assumes A = I"));
    }
    let mut report = ExperimentReport::new(cfg.clone());
    let ed = (FRAC_1_SQRT_2, FRAC_1_SQRT_2);

    let start = Instant::now();
    let mask = build_holes_domain(s.alpha, s.beta, s.dx)?;
    let c_star = kpp_front_speed(&mask, &f, &a, (1.0, 0.0))?;
    report.quantity("c_star_e_x", c_star.speed);
    report.quantity("c_star_e_x_lambda", c_star.lambda);
    report.time("eigenvalue_speed", start);

    let start = Instant::now();
    let cone = cone_coefficient(&mask, ed, s.n_max, Stencil::Sixteen)?;
    let analytic = 1.0 / (std::f64::consts::SQRT_2 * (s.alpha - s.beta));
    report.measured("C_e_d", cone.value, cone.spread);
    report.quantity("C_e_d_analytic_bound", analytic);
    report.check(
        Clause::Acc3,
        "C(e_d) against 1/(sqrt2 (alpha - beta)) with the stencil tolerance",
        cone.value,
        Relation::AtMost,
        analytic * (1.0 + Stencil::Sixteen.metric_error()),
    );
    let bound = speed_upper_bound(cone.value, &f);
    report.quantity("geodesic_bound_w_e_d", bound);
    report.check(
        Clause::Acc3,
        "c*(e_x) - 2 C(e_d) sqrt(max f/u)",
        c_star.speed - bound,
        Relation::AtLeast,
        s.margin,
    );
    report.time("cone_coefficient", start);

    let start = Instant::now();
    let smask = build_holes_domain(s.alpha, s.beta, s.spread_dx)?;
    let center = smask.cell_center(0, 0);
    if !smask.is_fluid(0, 0) {
        return Err(Error::InObstacle {
            x: center.0,
            y: center.1,
        });
    }
    let u0 = |w: Arc<Window>| initial_bump(w, &smask, 1.0, 3.0, center);
    let opts = SpreadingOptions::new(
        center,
        s.eta,
        sample_times(s.spread_horizon, s.spread_times),
        vec![0.0, FRAC_PI_4, FRAC_PI_2],
    );
    let m = empirical_spreading(&smask, &f, &a, &u0, &opts)?;
    for (d, &angle) in m.angles.iter().enumerate() {
        report.measured(
            format!("w_emp_{}deg", degrees(angle)),
            m.speeds[d],
            m.stderr[d],
        );
    }
    report.check(
        Clause::Acc3,
        "w_emp(e_d) against the geodesic bound plus tolerance",
        m.speeds[1],
        Relation::AtMost,
        bound * (1.0 + s.spread_tolerance),
    );
    report.attach("spreading.csv", m.to_csv())?;
    report.attach("w_emp.csv", speeds_csv(&m))?;
    report.time("spreading", start);

    // Coarse eigenvalue profile for the dichotomy; informational.
    let start = Instant::now();
    let profile = sample_profile(
        &smask,
        &f,
        &a,
        &uniform_angles(s.directions),
        Method::Eigenvalue,
        &ProfileOptions::default(),
    )?;
    let wulff = fg_transform(&profile, s.wulff_directions)?;
    let w_profile = wulff.radial_profile(&profile)?;
    match constancy_dichotomy(&profile, &w_profile, 1e-6)? {
        Dichotomy::Witness { angle, gap } => {
            report.quantity("dichotomy_witness_deg", angle.to_degrees());
            report.quantity("dichotomy_gap", gap);
        }
        Dichotomy::Constant { value } => report.quantity("dichotomy_constant", value),
    }
    report.attach("c_eig_coarse.csv", profile.to_csv())?;
    report.attach("wulff.svg", wulff.to_svg())?;
    report.time("coarse_profile", start);
    Ok(report)
}

/// Spreading from the planted subsolution bump on a slant domain.
fn slant_spreading(
    mask: &PeriodicCellMask,
    f: &Nonlinearity,
    bump: &crate::subsolution::SubsolutionBump,
    r: f64,
    eta: f64,
    horizon: f64,
    n_times: usize,
) -> Result<SpreadingMeasurement> {
    let center = (0.0, 3.0 * r);
    let u0 = |w: Arc<Window>| plant(bump, mask, center, w);
    let mut opts = SpreadingOptions::new(
        center,
        eta,
        sample_times(horizon, n_times),
        vec![0.0, FRAC_PI_2],
    );
    opts.half_extent = Some((1.5 * r, 1.5 * r));
    empirical_spreading(mask, f, &DiffusionTensor::IDENTITY, &u0, &opts)
}

pub(super) fn slant_combustion(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let s = &cfg.settings;
    require_domain(s, Domain::Slant)?;
    let f = s.nonlinearity()?;
    require_class(&f, Class::Combustion)?;
    let a = s.diffusion_tensor()?;
    if a != DiffusionTensor::IDENTITY {
        return Err(Error::config("slant experiments use A = I"));
    }
    let mut report = ExperimentReport::new(cfg.clone());

    let start = Instant::now();
    let bump = s.bump_for(&f)?;
    let r = s.slant_r_for(Some(&bump), s.dx)?;
    report.quantity("c_sub", bump.c);
    report.quantity("R3", bump.r3);
    report.quantity("R", r);
    report.quantity("sigma", s.sigma);
    report.attach("bump.json", bump.to_json()?)?;
    let (c_free, c_free_err) = free_speed(&f, &a, s.dx)?;
    report.measured("c_free", c_free, c_free_err);
    report.time("setup", start);

    let y_bound_factor = 6.0 * f.max_ratio().sqrt();
    let mut alphas = s.alphas.clone();
    alphas.sort_by(|x, y| y.total_cmp(x));
    alphas.dedup();
    let mut w_y = Vec::new();
    for &alpha in &alphas {
        let start = Instant::now();
        let mask = build_slant_domain(SlantParams::new(alpha, r), s.dx)?;
        let m = slant_spreading(
            &mask,
            &f,
            &bump,
            r,
            s.eta,
            s.slant_time / alpha,
            s.spread_times,
        )
        .map_err(|e| Error::Experiment {
            experiment: format!("slant-combustion alpha = {alpha}"),
            source: Box::new(e),
        })?;
        report.measured(format!("w_e_x_alpha_{alpha}"), m.speeds[0], m.stderr[0]);
        report.measured(format!("w_e_y_alpha_{alpha}"), m.speeds[1], m.stderr[1]);
        report.check(
            Clause::Acc4,
            format!("w(e_x) at alpha = {alpha} against 0.95 c_sub"),
            m.speeds[0],
            Relation::AtLeast,
            0.95 * bump.c,
        );
        let bound = y_bound_factor * alpha;
        report.quantity(format!("w_e_y_bound_alpha_{alpha}"), bound);
        report.check(
            Clause::Acc4,
            format!("w(e_y) at alpha = {alpha} against 6 alpha sqrt(max f/u) plus tolerance"),
            m.speeds[1],
            Relation::AtMost,
            bound * (1.0 + s.spread_tolerance),
        );
        report.attach(format!("spreading_alpha_{alpha}.csv"), m.to_csv())?;
        w_y.push(m.speeds[1]);
        report.time(format!("alpha_{alpha}"), start);
    }
    for (pair, w) in alphas.windows(2).zip(w_y.windows(2)) {
        report.check(
            Clause::Acc4,
            format!(
                "w(e_y) drop from alpha = {} to alpha = {}",
                pair[0], pair[1]
            ),
            w[0] - w[1],
            Relation::Above,
            0.0,
        );
    }
    Ok(report)
}

pub(super) fn monostable_sandwich(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let s = &cfg.settings;
    require_domain(s, Domain::Slant)?;
    let f = s.nonlinearity()?;
    require_class(&f, Class::Monostable)?;
    let lower = s.reaction_of(Reaction::Cubic)?;
    let upper = s.reaction_of(Reaction::Kpp)?;
    let a = DiffusionTensor::IDENTITY;
    let mut report = ExperimentReport::new(cfg.clone());

    let start = Instant::now();
    let ordering = (0..=10_000)
        .map(|k| {
            let u = k as f64 / 10_000.0;
            (lower.eval(u) - f.eval(u)).max(f.eval(u) - upper.eval(u))
        })
        .fold(f64::NEG_INFINITY, f64::max);
    if ordering > 0.0 {
        return Err(Error::config(format!(
            "reactions are not ordered: excess {ordering}"
        )));
    }
    let bump = s.bump_for(&lower)?;
    let r = s.slant_r_for(Some(&bump), s.dx)?;
    let mask = build_slant_domain(SlantParams::new(s.alpha, r), s.dx)?;
    report.quantity("R3_lower", bump.r3);
    report.quantity("R", r);
    report.time("setup", start);

    let mut speeds = Vec::new();
    for (name, g) in [("lower", &lower), ("middle", &f), ("upper", &upper)] {
        let start = Instant::now();
        let (c_free, c_err) = free_speed(g, &a, s.dx)?;
        report.measured(format!("c_free_{name}"), c_free, c_err);
        let horizon = s.periods * 3.0 * r / c_free;
        let m =
            slant_spreading(&mask, g, &bump, r, s.eta, horizon, s.spread_times).map_err(|e| {
                Error::Experiment {
                    experiment: format!("monostable-sandwich {name} reaction"),
                    source: Box::new(e),
                }
            })?;
        report.measured(format!("w_e_x_{name}"), m.speeds[0], m.stderr[0]);
        report.measured(format!("w_e_y_{name}"), m.speeds[1], m.stderr[1]);
        report.attach(format!("spreading_{name}.csv"), m.to_csv())?;
        speeds.push([m.speeds[0], m.speeds[1]]);
        report.time(name, start);
    }
    let tol = s.spread_tolerance;
    for (d, dir) in ["e_x", "e_y"].iter().enumerate() {
        report.check(
            Clause::Acc5,
            format!("w({dir}) against the combustion speed minus tolerance"),
            speeds[1][d],
            Relation::AtLeast,
            speeds[0][d] * (1.0 - tol),
        );
        report.check(
            Clause::Acc5,
            format!("w({dir}) against the KPP speed plus tolerance"),
            speeds[1][d],
            Relation::AtMost,
            speeds[2][d] * (1.0 + tol),
        );
    }
    Ok(report)
}

pub(super) fn symmetry(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let s = &cfg.settings;
    let f = s.nonlinearity()?;
    require_class(&f, Class::Kpp)?;
    let a = s.diffusion_tensor()?;
    let mut report = ExperimentReport::new(cfg.clone());
    let start = Instant::now();
    let mask = s.mask_at(s.dx)?;
    let symmetric = symmetry_holds(&mask, &Isometry2D::reflect_about_x_axis())?;
    report.check(
        Clause::Acc6,
        "mask invariant under the reflection fixing e_x",
        if symmetric { 1.0 } else { 0.0 },
        Relation::AtLeast,
        1.0,
    );
    let angles = uniform_angles(s.directions);
    let profile = sample_profile(
        &mask,
        &f,
        &a,
        &angles,
        Method::Eigenvalue,
        &ProfileOptions::default(),
    )?;
    let wulff = fg_transform_at(&profile, &angles)?;
    let (c, w) = (profile.speeds()[0], wulff.w_at(0.0));
    report.quantity("c_star_e_x", c);
    report.quantity("w_e_x", w);
    report.check(
        Clause::Acc6,
        "|c*(e_x) - w(e_x)| / c*(e_x)",
        relative(w, c),
        Relation::AtMost,
        s.tolerance,
    );
    report.attach("c_eig.csv", profile.to_csv())?;
    report.attach("w.csv", wulff.radial_profile(&profile)?.to_csv())?;
    report.attach("wulff.svg", wulff.to_svg())?;
    report.time("total", start);
    Ok(report)
}

/// Grid of points around `z` that have a fluid cell within `4 dx`.
fn audit_points(mask: &PeriodicCellMask, z: (f64, f64)) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for j in -6..=6 {
        for i in -6..=6 {
            let p = (z.0 + 0.5 * i as f64, z.1 + 0.5 * j as f64);
            if mask.nearest_fluid_cell(p.0, p.1, 4.0 * mask.dx()).is_some() {
                out.push(p);
            }
        }
    }
    out
}

pub(super) fn heat_audit(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let s = &cfg.settings;
    let mut report = ExperimentReport::new(cfg.clone());
    let times: Vec<f64> = (1..=8).map(|k| 0.5 * k as f64).collect();

    let start = Instant::now();
    let free = build_free_plane((1.0, 1.0), s.dx)?;
    let z = free.cell_center(0, 0);
    let audit = heat_bound_audit(&free, s.epsilon, &times, z, &audit_points(&free, z))?;
    report.quantity("free_C", audit.c);
    report.quantity("free_delta", audit.delta);
    report.quantity("free_reference_C", HEAT_REFERENCE_C);
    report.check(
        Clause::Acc9,
        "free-plane violations of the fitted bound",
        audit.violations as f64,
        Relation::AtMost,
        0.0,
    );
    report.check(
        Clause::Acc9,
        "free-plane C relative to its recorded value",
        relative(audit.c, HEAT_REFERENCE_C),
        Relation::AtMost,
        0.10,
    );
    report.attach("heat_free.json", serde_json::to_string_pretty(&audit)?)?;
    report.time("free_plane", start);

    let start = Instant::now();
    let mask = s.mask_at(s.dx)?;
    let z = (0..mask.dims().0 as i64)
        .find(|&i| mask.is_fluid(i, 0))
        .map(|i| mask.cell_center(i, 0))
        .ok_or_else(|| Error::config("no fluid cell on the first row"))?;
    let audit = heat_bound_audit(&mask, s.epsilon, &times, z, &audit_points(&mask, z))?;
    report.quantity("perforated_C", audit.c);
    report.quantity("perforated_delta", audit.delta);
    report.check(
        Clause::Acc9,
        "perforated-domain violations of the fitted bound",
        audit.violations as f64,
        Relation::AtMost,
        0.0,
    );
    report.attach(
        "heat_perforated.json",
        serde_json::to_string_pretty(&audit)?,
    )?;
    report.time("perforated", start);
    Ok(report)
}
