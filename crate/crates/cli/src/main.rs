use std::f64::consts::FRAC_1_SQRT_2;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use frontlab::fronts::{sample_profile, uniform_angles, ProfileOptions, SpeedProfile};
use frontlab::geodesy::{cone_coefficient, speed_upper_bound, Stencil};
use frontlab::geometry::check_connected;
use frontlab::workbench::config::load_settings;
use frontlab::workbench::{self, emit, ExperimentConfig, Format, Settings};
use frontlab::wulff::fg_transform;

/// Fronts in periodic perforated domains.
#[derive(Parser)]
#[command(name = "frontlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML config file with flat `key = value` pairs.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `key=value` overrides applied after the config file.
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Build the configured mask and save it as text.
    Mask(Common),
    /// Obstruction coefficient C(e) at e_x, e_d and e_y.
    Geodesy(Common),
    /// Front speed profile c*(e) by the configured method.
    Speed(Common),
    /// Speed profile and its Wulff shape.
    Wulff(Common),
    /// Compactly supported subsolution of the configured reaction.
    Subsolution(Common),
    /// Run a built-in experiment, or `list` them.
    Experiment {
        /// Experiment name or `list`.
        id: String,
        #[command(flatten)]
        common: Common,
    },
}

fn settings(common: &Common) -> Result<Settings> {
    let (_, s) = load_settings(common.config.as_deref(), &common.overrides)?;
    Ok(s)
}

fn write(dir: &Path, name: &str, content: impl AsRef<[u8]>) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    std::fs::write(&path, content).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn profile(s: &Settings) -> Result<SpeedProfile> {
    let mask = s.mask_at(s.dx)?;
    let f = s.nonlinearity()?;
    let a = s.diffusion_tensor()?;
    let angles = uniform_angles(s.directions);
    Ok(sample_profile(
        &mask,
        &f,
        &a,
        &angles,
        s.method,
        &ProfileOptions::default(),
    )?)
}

fn print_profile(p: &SpeedProfile) {
    println!("theta_deg  c*");
    for (a, c) in p.angles().iter().zip(p.speeds()) {
        println!("{:9.3}  {c:.6}", a.to_degrees());
    }
}

fn run(command: Command) -> Result<bool> {
    match command {
        Command::Mask(c) => {
            let s = settings(&c)?;
            let mask = s.mask_at(s.dx)?;
            let (nx, ny) = mask.dims();
            println!("mask {}", mask.id());
            println!("cells {nx} x {ny}, fluid {}", mask.fluid_cells());
            println!("connected {}", check_connected(&mask));
            write(&s.output, "mask.txt", mask.to_text())?;
        }
        Command::Geodesy(c) => {
            let s = settings(&c)?;
            let mask = s.mask_at(s.dx)?;
            let f = s.nonlinearity()?;
            let mut csv = String::from("direction,C,spread,bound\n");
            for (name, e) in [
                ("e_x", (1.0, 0.0)),
                ("e_d", (FRAC_1_SQRT_2, FRAC_1_SQRT_2)),
                ("e_y", (0.0, 1.0)),
            ] {
                let cone = cone_coefficient(&mask, e, s.n_max, Stencil::Sixteen)?;
                let bound = speed_upper_bound(cone.value, &f);
                println!(
                    "C({name}) = {:.6} (spread {:.2e}), w({name}) <= {bound:.6}",
                    cone.value, cone.spread
                );
                csv.push_str(&format!("{name},{},{},{bound}\n", cone.value, cone.spread));
            }
            write(&s.output, "cone.csv", csv)?;
        }
        Command::Speed(c) => {
            let s = settings(&c)?;
            let p = profile(&s)?;
            print_profile(&p);
            write(&s.output, "c_star.csv", p.to_csv())?;
        }
        Command::Wulff(c) => {
            let s = settings(&c)?;
            let p = profile(&s)?;
            let w = fg_transform(&p, s.wulff_directions)?;
            let wp = w.radial_profile(&p)?;
            println!("theta_deg  c*  w");
            for ((a, c), w) in p.angles().iter().zip(p.speeds()).zip(wp.speeds()) {
                println!("{:9.3}  {c:.6}  {w:.6}", a.to_degrees());
            }
            write(&s.output, "c_star.csv", p.to_csv())?;
            write(&s.output, "wulff.csv", w.to_csv())?;
            write(&s.output, "wulff.svg", w.to_svg())?;
        }
        Command::Subsolution(c) => {
            let s = settings(&c)?;
            let f = s.slant_bump_reaction()?;
            let bump = s.bump_for(&f)?;
            println!("c = {:.6}, R3 = {:.6}", bump.c, bump.r3);
            println!("residuals {:?}", bump.residuals());
            let check = bump.verify(1e-3)?;
            println!("differential inequalities hold: {}", check.passed());
            write(&s.output, "bump.json", bump.to_json()?)?;
            write(
                &s.output,
                "bump_profile.csv",
                bump.profile_csv(bump.r3 / 1000.0),
            )?;
            return Ok(check.passed());
        }
        Command::Experiment { id, common } => {
            if id == "list" {
                for (name, summary) in workbench::list() {
                    println!("{name:22} {summary}");
                }
                return Ok(true);
            }
            let mut overrides = vec![format!("experiment=\"{id}\"")];
            overrides.extend(common.overrides.iter().cloned());
            let cfg = ExperimentConfig::load(common.config.as_deref(), &overrides)?;
            let report = workbench::run(&cfg)?;
            for path in emit(&report, &cfg.settings.output, &Format::ALL)? {
                println!("wrote {}", path.display());
            }
            print!("{}", report.summary());
            return Ok(report.passed());
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse().command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            let mut msg = e.to_string();
            for cause in e.chain().skip(1) {
                let cause = cause.to_string();
                if !msg.contains(&cause) {
                    msg = format!("{msg}: {cause}");
                }
            }
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
