//! Command execution: runs the selected analysis and writes its output
//! files plus a run manifest into the output directory.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use escape_lab_core::criteria::{self, BakerCertificate, CurveCheck, Disc, SurroundCondition};
use escape_lab_core::grid::{self, GridSpec, MaskKind};
use escape_lab_core::profile;
use escape_lab_core::FunctionSpec64;
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::config::{Command, GridParams, OrderParams, RunConfig};

/// Failure classes mapped to process exit codes (2: validation, 3:
/// computation or I/O).
#[derive(Debug)]
pub enum RunError {
    Validation(String),
    Computation(String),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Validation(m) => write!(f, "validation error: {m}"),
            RunError::Computation(m) => write!(f, "computation error: {m}"),
        }
    }
}

fn io_err(e: std::io::Error) -> RunError {
    RunError::Computation(format!("i/o: {e}"))
}

/// Execute a validated configuration. Returns the list of files written.
pub fn run(config: &RunConfig, threads: usize, verbose: bool) -> Result<Vec<PathBuf>, RunError> {
    config.validate().map_err(RunError::Validation)?;
    let started = Instant::now();
    let out = &config.output_dir;
    fs::create_dir_all(out).map_err(io_err)?;
    let mut written = Vec::new();

    let f = &config.function;
    match config.command {
        Command::Profile => {
            let p = build_profile(f, config)?;
            written.push(write_bytes(out, "profile.csv", p.to_csv().as_bytes())?);
        }
        Command::Order => {
            let p = build_profile(f, config)?;
            written.push(write_bytes(out, "profile.csv", p.to_csv().as_bytes())?);
            let report = growth_report(&p, &config.order.unwrap_or_default())?;
            written.push(write_json(out, "growth_report.json", &report)?);
        }
        Command::Certify => {
            let cert = certify(f, config)?;
            written.push(write_json(
                out,
                "certificate.json",
                &certificate_json(&cert),
            )?);
        }
        Command::Curves => {
            let cert = certify(f, config)?;
            written.push(write_json(
                out,
                "certificate.json",
                &certificate_json(&cert),
            )?);
            let curves = curve_check(f, config, &cert)?;
            written.push(write_json(out, "curves.json", &curves_json(&curves))?);
        }
        Command::Grid => {
            let (g, report) = run_grid(f, config.grid.as_ref().unwrap(), verbose)?;
            written.push(write_bytes(
                out,
                "class.ppm",
                &grid::write_ppm(&g, MaskKind::Class),
            )?);
            written.push(write_bytes(
                out,
                "julia.ppm",
                &grid::write_ppm(&g, MaskKind::JuliaBoundary),
            )?);
            if g.meta.fast.is_some() {
                written.push(write_bytes(
                    out,
                    "fast.ppm",
                    &grid::write_ppm(&g, MaskKind::Fast),
                )?);
            }
            if g.meta.bd.is_some() {
                written.push(write_bytes(
                    out,
                    "bd.ppm",
                    &grid::write_ppm(&g, MaskKind::Bd),
                )?);
            }
            written.push(write_json(out, "connectivity.json", &report)?);
        }
        Command::Report => {
            let p = build_profile(f, config)?;
            written.push(write_bytes(out, "profile.csv", p.to_csv().as_bytes())?);
            let order = growth_report(&p, &config.order.unwrap_or_default())?;
            written.push(write_json(out, "growth_report.json", &order)?);
            let cert = certify(f, config)?;
            written.push(write_json(
                out,
                "certificate.json",
                &certificate_json(&cert),
            )?);
            let curves = if config.curves.is_some() && cert.verified {
                let c = curve_check(f, config, &cert)?;
                written.push(write_json(out, "curves.json", &curves_json(&c))?);
                Some(c)
            } else {
                None
            };
            let label = match &curves {
                Some(c) => criteria::certification_label(&cert, c),
                None if cert.verified => {
                    "certificate verified on tested range (curve check not run)"
                }
                None => "certificate not verified on tested range",
            };
            let summary = json!({
                "function": config.function,
                "order": order,
                "certificate": certificate_json(&cert),
                "curves": curves.as_ref().map(curves_json),
                "label": label,
            });
            written.push(write_json(out, "summary.json", &summary)?);
        }
    }

    let manifest = json!({
        "config": config,
        "tool_version": env!("CARGO_PKG_VERSION"),
        "threads": threads,
        "wall_time_s": started.elapsed().as_secs_f64(),
    });
    written.push(write_json(out, "manifest.json", &manifest)?);
    if verbose {
        for w in &written {
            eprintln!("wrote {}", w.display());
        }
    }
    Ok(written)
}

fn build_profile(
    f: &FunctionSpec64,
    config: &RunConfig,
) -> Result<profile::RadialProfile<f64>, RunError> {
    let p = config.profile.unwrap();
    profile::build_profile(f, p.r_min, p.r_max, p.points_per_decade)
        .map_err(|e| RunError::Computation(e.to_string()))
}

fn growth_report(
    p: &profile::RadialProfile<f64>,
    params: &OrderParams,
) -> Result<profile::GrowthReport<f64>, RunError> {
    profile::growth_report(p, params.tail_fraction, params.epsilon, params.r_threshold)
        .map_err(|e| RunError::Computation(e.to_string()))
}

fn certify(f: &FunctionSpec64, config: &RunConfig) -> Result<BakerCertificate<f64>, RunError> {
    let p = config.certify.as_ref().unwrap();
    // an unverified certificate (NoCandidate) is a successful negative
    // result, not an error
    criteria::build_baker_sequences(f, p.log_r1, &p.c_schedule, p.n_max)
        .map_err(|e| RunError::Computation(e.to_string()))
}

fn curve_check(
    f: &FunctionSpec64,
    config: &RunConfig,
    cert: &BakerCertificate<f64>,
) -> Result<CurveCheck<f64>, RunError> {
    let p = config.curves.unwrap();
    let disc = Disc {
        center: Complex64::new(p.disc.center[0], p.disc.center[1]),
        radius: p.disc.radius,
    };
    criteria::verify_surrounding_curves(f, disc, cert, p.attestation.into())
        .map_err(|e| RunError::Computation(e.to_string()))
}

fn run_grid(
    f: &FunctionSpec64,
    p: &GridParams,
    verbose: bool,
) -> Result<(grid::EscapeGrid<f64>, grid::ConnectivityReport), RunError> {
    let spec = GridSpec {
        center_re: p.center[0],
        center_im: p.center[1],
        width: p.width,
        height: p.height,
        nx: p.nx,
        ny: p.ny,
        max_iter: p.max_iter,
        bailout: p.bailout,
        confirm_steps: p.confirm_steps,
    };
    let budget = p.pixel_budget.unwrap_or(grid::DEFAULT_PIXEL_BUDGET);
    let mut g = grid::classify_grid_with_budget(f, &spec, budget)
        .map_err(|e| RunError::Computation(e.to_string()))?;
    if verbose {
        eprintln!("classified {} pixels", g.classes.len());
    }
    if let Some(fast) = &p.fast {
        grid::classify_fast(f, &mut g, fast.log_r, fast.l_max)
            .map_err(|e| RunError::Computation(e.to_string()))?;
    }
    if let Some(bd) = &p.bd {
        if p.fast.is_none() {
            return Err(RunError::Validation(
                "grid.bd requires grid.fast (the B_D mask is clipped by the fast mask)".into(),
            ));
        }
        grid::classify_bd(
            f,
            &mut g,
            Complex64::new(bd.disc.center[0], bd.disc.center[1]),
            bd.disc.radius,
            bd.include_n0,
        )
        .map_err(|e| RunError::Computation(e.to_string()))?;
    }
    let report = grid::connectivity(&g);
    Ok((g, report))
}

/// Certificate JSON in the documented schema (natural logs).
pub fn certificate_json(cert: &BakerCertificate<f64>) -> Value {
    json!({
        "log_base": "e",
        "logR": cert.log_r,
        "logrho": cert.log_rho,
        "c": cert.c_schedule,
        "margins": cert.margins,
        "verified": cert.verified,
        "extrapolated_from": cert.extrapolated_from,
    })
}

pub fn curves_json(check: &CurveCheck<f64>) -> Value {
    json!({
        "circle_log_radii": check.family.circle_log_radii,
        "image_log_radii": check.family.image_log_radii,
        "disc": {
            "center": [check.family.disc.center.re, check.family.disc.center.im],
            "radius": check.family.disc.radius,
        },
        "circle_surrounds_image": check.circle_surrounds_image,
        "image_surrounds_next": check.image_surrounds_next,
        "winding_around_zero": check.winding_around_zero,
        "all_ok": check.all_ok(),
        "first_failure": check.first_failure.map(|(step, cond)| {
            json!({
                "step": step,
                "condition": match cond {
                    SurroundCondition::CircleSurroundsImage => 1,
                    SurroundCondition::ImageSurroundsNextCircle => 2,
                },
            })
        }),
        "attestation": check.attestation.as_str(),
    })
}

fn write_bytes(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf, RunError> {
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(io_err)?;
    Ok(path)
}

fn write_json<S: serde::Serialize>(dir: &Path, name: &str, value: &S) -> Result<PathBuf, RunError> {
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| RunError::Computation(format!("json: {e}")))?;
    text.push('\n');
    fs::write(&path, text).map_err(io_err)?;
    Ok(path)
}
