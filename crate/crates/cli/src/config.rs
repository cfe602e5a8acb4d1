//! Run configuration: a single JSON document selects the function, the
//! command, and the command's parameter block.

use std::path::PathBuf;

use escape_lab_core::criteria::JuliaAttestation;
use escape_lab_core::FunctionSpec64;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Profile,
    Order,
    Certify,
    Curves,
    Grid,
    Report,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ProfileParams {
    pub r_min: f64,
    pub r_max: f64,
    pub points_per_decade: u32,
}

fn default_tail_fraction() -> f64 {
    0.25
}

fn default_epsilon() -> f64 {
    0.5
}

fn default_r_threshold() -> f64 {
    // e^e, the smallest radius where log log r > 1
    std::f64::consts::E.exp()
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct OrderParams {
    #[serde(default = "default_tail_fraction")]
    pub tail_fraction: f64,
    /// Epsilon for the (log r)^{1/2}/(log log r)^epsilon growth bound.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(rename = "R", default = "default_r_threshold")]
    pub r_threshold: f64,
}

impl Default for OrderParams {
    fn default() -> Self {
        OrderParams {
            tail_fraction: default_tail_fraction(),
            epsilon: default_epsilon(),
            r_threshold: default_r_threshold(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CertifyParams {
    #[serde(rename = "logR1")]
    pub log_r1: f64,
    pub c_schedule: Vec<f64>,
    pub n_max: usize,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DiscParams {
    /// [re, im]
    pub center: [f64; 2],
    pub radius: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Attestation {
    #[default]
    UserAsserted,
    EscapeBoundaryWitnessed,
}

impl From<Attestation> for JuliaAttestation {
    fn from(a: Attestation) -> Self {
        match a {
            Attestation::UserAsserted => JuliaAttestation::UserAsserted,
            Attestation::EscapeBoundaryWitnessed => JuliaAttestation::EscapeBoundaryWitnessed,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CurvesParams {
    pub disc: DiscParams,
    #[serde(default)]
    pub attestation: Attestation,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct FastParams {
    #[serde(rename = "logR")]
    pub log_r: f64,
    #[serde(rename = "L_max")]
    pub l_max: u32,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct BdParams {
    pub disc: DiscParams,
    #[serde(default)]
    pub include_n0: bool,
}

fn default_confirm_steps() -> u32 {
    3
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GridParams {
    /// [re, im]
    pub center: [f64; 2],
    pub width: f64,
    pub height: f64,
    pub nx: u32,
    pub ny: u32,
    pub max_iter: u32,
    pub bailout: f64,
    #[serde(default = "default_confirm_steps")]
    pub confirm_steps: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pixel_budget: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fast: Option<FastParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bd: Option<BdParams>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("escape-lab-out")
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    pub function: FunctionSpec64,
    pub command: Command,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<ProfileParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<OrderParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certify: Option<CertifyParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curves: Option<CurvesParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridParams>,
}

impl RunConfig {
    /// Validate before any computation: the function spec's invariants plus
    /// the presence and sanity of the active command's parameter block.
    pub fn validate(&self) -> Result<(), String> {
        self.function.validate().map_err(|e| e.to_string())?;
        match self.command {
            Command::Profile => {
                let p = self
                    .profile
                    .ok_or("profile command needs a `profile` block")?;
                validate_profile(&p)
            }
            Command::Order => {
                let p = self
                    .profile
                    .ok_or("order command needs a `profile` block")?;
                validate_profile(&p)?;
                validate_order(&self.order.unwrap_or_default())
            }
            Command::Certify => validate_certify(
                self.certify
                    .as_ref()
                    .ok_or("certify command needs a `certify` block")?,
            ),
            Command::Curves => {
                validate_certify(
                    self.certify
                        .as_ref()
                        .ok_or("curves command needs a `certify` block")?,
                )?;
                validate_curves(&self.curves.ok_or("curves command needs a `curves` block")?)
            }
            Command::Grid => validate_grid(&self.grid.ok_or("grid command needs a `grid` block")?),
            Command::Report => {
                let p = self
                    .profile
                    .ok_or("report command needs a `profile` block")?;
                validate_profile(&p)?;
                validate_order(&self.order.unwrap_or_default())?;
                validate_certify(
                    self.certify
                        .as_ref()
                        .ok_or("report command needs a `certify` block")?,
                )?;
                if let Some(c) = &self.curves {
                    validate_curves(c)?;
                }
                Ok(())
            }
        }
    }
}

fn validate_profile(p: &ProfileParams) -> Result<(), String> {
    if !(p.r_min > 0.0 && p.r_min < p.r_max) {
        return Err("profile: need 0 < r_min < r_max".into());
    }
    if p.points_per_decade < 4 {
        return Err("profile: points_per_decade must be >= 4".into());
    }
    Ok(())
}

fn validate_order(p: &OrderParams) -> Result<(), String> {
    if !(p.tail_fraction > 0.0 && p.tail_fraction <= 1.0) {
        return Err("order: tail_fraction must lie in (0, 1]".into());
    }
    if !(p.epsilon > 0.0 && p.epsilon < 1.0) {
        return Err("order: epsilon must lie in (0, 1)".into());
    }
    Ok(())
}

fn validate_certify(p: &CertifyParams) -> Result<(), String> {
    if p.n_max == 0 {
        return Err("certify: n_max must be at least 1".into());
    }
    if p.c_schedule.len() < p.n_max + 1 {
        return Err(format!(
            "certify: c_schedule needs at least n_max + 1 = {} entries",
            p.n_max + 1
        ));
    }
    if p.c_schedule.iter().any(|&c| !(c > 1.0)) {
        return Err("certify: every c(n) must exceed 1".into());
    }
    if !p.log_r1.is_finite() || p.log_r1 <= 0.0 {
        return Err("certify: logR1 must be finite and positive".into());
    }
    Ok(())
}

fn validate_curves(p: &CurvesParams) -> Result<(), String> {
    if !(p.disc.radius > 0.0) {
        return Err("curves: disc radius must be positive".into());
    }
    Ok(())
}

fn validate_grid(p: &GridParams) -> Result<(), String> {
    let budget = p
        .pixel_budget
        .unwrap_or(escape_lab_core::grid::DEFAULT_PIXEL_BUDGET);
    let pixels = p.nx as usize * p.ny as usize;
    if pixels == 0 {
        return Err("grid: nx and ny must be positive".into());
    }
    if pixels > budget {
        return Err(format!(
            "grid: nx*ny = {pixels} exceeds pixel budget {budget}"
        ));
    }
    if !(p.width > 0.0 && p.height > 0.0) {
        return Err("grid: width and height must be positive".into());
    }
    if !(p.bailout >= 1e3) {
        return Err("grid: bailout must be at least 1e3".into());
    }
    if p.confirm_steps == 0 || p.max_iter == 0 {
        return Err("grid: confirm_steps and max_iter must be positive".into());
    }
    if let Some(f) = &p.fast {
        if f.l_max == 0 {
            return Err("grid.fast: L_max must be at least 1".into());
        }
    }
    if let Some(b) = &p.bd {
        if !(b.disc.radius > 0.0) {
            return Err("grid.bd: disc radius must be positive".into());
        }
    }
    Ok(())
}
