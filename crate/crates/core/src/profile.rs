//! Maximum/minimum modulus profiling over radius ladders, order estimation,
//! and the growth conditions used by the connectedness criteria.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{CatalogError, FunctionSpec};
use crate::scalar::Real;

/// Default angular sample count used by [`build_profile`].
pub const DEFAULT_ANGULAR_SAMPLES: u32 = 256;

/// Angular bracket width at which extremum refinement stops (radians).
pub const REFINE_BRACKET: f64 = 1e-6;

/// How a profile entry (or modulus value) was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModulusMethod {
    AngularSampled,
    PositiveAxisShortcut,
    NegativeAxisShortcut,
    LogDomain,
}

impl std::fmt::Display for ModulusMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ModulusMethod::AngularSampled => "AngularSampled",
            ModulusMethod::PositiveAxisShortcut => "PositiveAxisShortcut",
            ModulusMethod::NegativeAxisShortcut => "NegativeAxisShortcut",
            ModulusMethod::LogDomain => "LogDomain",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ProfileEntry<T> {
    pub r: T,
    pub log_max: T,
    pub log_min: T,
    pub method: ModulusMethod,
    /// Set when the radius had to be nudged off a zero radius.
    pub perturbed: bool,
}

/// Sampled log M(r), log m(r) over a radius ladder.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RadialProfile<T> {
    pub entries: Vec<ProfileEntry<T>>,
    pub angular_resolution: u32,
}

#[derive(Clone, Copy, Debug)]
pub struct MaxModulus<T> {
    pub log_max: T,
    pub arg_max: T,
    pub method: ModulusMethod,
}

#[derive(Clone, Copy, Debug)]
pub struct MinModulus<T> {
    pub log_min: T,
    pub arg_min: T,
    pub method: ModulusMethod,
}

#[derive(Clone, Copy, Debug)]
pub struct OrderEstimate<T> {
    pub rho: T,
    /// Two regression standard errors of the slope.
    pub ci: T,
}

/// Verdict for the slow-growth bound
/// log log M(r) < (log r)^{1/2} / (log log r)^epsilon, for r > R.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SlowGrowthReport<T> {
    pub holds: bool,
    pub epsilon: T,
    #[serde(rename = "R")]
    pub r_threshold: T,
    pub first_violation_r: Option<T>,
}

/// Verdict for the regularity condition log M(2r)/log M(r) -> c.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DoublingReport<T> {
    pub holds: bool,
    pub c_estimate: T,
    pub dispersion: T,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RatioSample<T> {
    pub r: T,
    pub value: T,
}

/// Combined growth report (order, doubling ratios, both conditions).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GrowthReport<T> {
    pub order_estimate: T,
    pub order_ci_halfwidth: T,
    pub ratio_c_samples: Vec<RatioSample<T>>,
    pub cond_1_5: SlowGrowthReport<T>,
    pub cond_1_6: DoublingReport<T>,
}

#[derive(Error, Debug, Clone, PartialEq)]
pub enum ProfileError {
    #[error("direct sampling overflowed; use the log-domain path")]
    OverflowDomain,
    #[error("radius coincides with zero radius #{index} (relative 1e-12)")]
    AtZero { index: u64 },
    #[error("log M <= 1 throughout the requested tail; order not estimable")]
    InsufficientGrowth,
    #[error("profile ladder has no r/2r pairs")]
    MissingPairs,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
}

/// Maximum modulus on |z| = r.
///
/// Kinds with nonnegative power-series coefficients use M(r) = f(r)
/// (method `PositiveAxisShortcut`, or `LogDomain` once f(r) is past the
/// saturation modulus). FatouBaker is sampled at `k` angles and refined by
/// iterated trisection; if a direct sample saturates, `OverflowDomain` is
/// returned and the caller should use [`log_max_modulus`].
pub fn max_modulus<T: Real>(
    f: &FunctionSpec<T>,
    r: T,
    k: u32,
) -> Result<MaxModulus<T>, ProfileError> {
    if k < 16 {
        return Err(ProfileError::InvalidInput(format!(
            "k must be >= 16, got {k}"
        )));
    }
    if !(r > T::zero() && r.is_finite()) {
        return Err(ProfileError::InvalidInput(
            "r must be positive and finite".into(),
        ));
    }
    if f.has_nonneg_coefficients() {
        let log_max = f.evaluate_log_on_ray(r, T::zero())?;
        let method = if log_max < T::log_saturation() {
            ModulusMethod::PositiveAxisShortcut
        } else {
            ModulusMethod::LogDomain
        };
        return Ok(MaxModulus {
            log_max,
            arg_max: T::zero(),
            method,
        });
    }
    let (value, arg) = sampled_extremum(f, r, k, Extremum::Max, true)?;
    Ok(MaxModulus {
        log_max: value,
        arg_max: arg,
        method: ModulusMethod::AngularSampled,
    })
}

/// Maximum modulus from a log radius, always on the log-domain path.
pub fn log_max_modulus<T: Real>(
    f: &FunctionSpec<T>,
    log_r: T,
    k: u32,
) -> Result<MaxModulus<T>, ProfileError> {
    if f.has_nonneg_coefficients() {
        let log_max = f.log_modulus_from_log_radius(log_r, T::zero())?;
        return Ok(MaxModulus {
            log_max,
            arg_max: T::zero(),
            method: ModulusMethod::LogDomain,
        });
    }
    let r = log_r.exp();
    if !r.is_finite() {
        return Err(ProfileError::Catalog(
            CatalogError::RadiusNotRepresentable {
                log_r: log_r.to_f64().unwrap_or(f64::INFINITY),
            },
        ));
    }
    let (value, arg) = sampled_extremum(f, r, k.max(16), Extremum::Max, false)?;
    Ok(MaxModulus {
        log_max: value,
        arg_max: arg,
        method: ModulusMethod::LogDomain,
    })
}

/// Minimum modulus on |z| = r.
///
/// Product kinds (all zeros on the negative real axis) and the scaled
/// exponential take the shortcut m(r) = |f(-r)|; radii within relative
/// 1e-12 of a zero radius are rejected with `AtZero`.
pub fn min_modulus<T: Real>(
    f: &FunctionSpec<T>,
    r: T,
    k: u32,
) -> Result<MinModulus<T>, ProfileError> {
    if k < 64 {
        return Err(ProfileError::InvalidInput(format!(
            "k must be >= 64, got {k}"
        )));
    }
    if !(r > T::zero() && r.is_finite()) {
        return Err(ProfileError::InvalidInput(
            "r must be positive and finite".into(),
        ));
    }
    if f.min_on_negative_axis() {
        let log_min = match f.evaluate_log_on_ray(r, T::PI()) {
            Ok(v) => v,
            Err(CatalogError::NearZero { index, .. }) => {
                return Err(ProfileError::AtZero { index })
            }
            Err(e) => return Err(e.into()),
        };
        let method = if log_min.abs() < T::log_saturation() {
            ModulusMethod::NegativeAxisShortcut
        } else {
            ModulusMethod::LogDomain
        };
        return Ok(MinModulus {
            log_min,
            arg_min: T::PI(),
            method,
        });
    }
    let (value, arg) = sampled_extremum(f, r, k, Extremum::Min, false)?;
    Ok(MinModulus {
        log_min: value,
        arg_min: arg,
        method: ModulusMethod::AngularSampled,
    })
}

enum Extremum {
    Max,
    Min,
}

/// Sample log|f| at k equispaced angles and refine around the best sample by
/// iterated trisection until the bracket is below [`REFINE_BRACKET`].
///
/// `direct` makes the sampling go through direct evaluation and report
/// `OverflowDomain` on saturation; otherwise the log-domain ray evaluation
/// is used throughout. Brackets are widened x4 when the function has known
/// zero radii (minima are cusp-like near zeros).
fn sampled_extremum<T: Real>(
    f: &FunctionSpec<T>,
    r: T,
    k: u32,
    which: Extremum,
    direct: bool,
) -> Result<(T, T), ProfileError> {
    let tau = T::cst(2.0) * T::PI();
    let eval = |theta: T| -> Result<T, ProfileError> {
        if direct {
            let res = f.evaluate(num_complex::Complex::from_polar(r, theta))?;
            if res.log_abs >= T::log_saturation() {
                return Err(ProfileError::OverflowDomain);
            }
            Ok(res.log_abs)
        } else {
            match f.log_modulus_from_log_radius(r.ln(), theta) {
                Ok(v) => Ok(v),
                // a sampled angle can graze a zero; the extremum search only
                // needs a finite stand-in there
                Err(CatalogError::NearZero { .. }) => Ok(-T::log_saturation()),
                Err(e) => Err(e.into()),
            }
        }
    };
    let better = |a: T, b: T| match which {
        Extremum::Max => a > b,
        Extremum::Min => a < b,
    };

    let mut best = (eval(T::zero())?, T::zero());
    for j in 1..k {
        let theta = tau * T::cst(j as f64) / T::cst(k as f64);
        let v = eval(theta)?;
        if better(v, best.0) {
            best = (v, theta);
        }
    }

    let widen = if f.zeros().is_some() {
        T::cst(4.0)
    } else {
        T::one()
    };
    let mut lo = best.1 - widen * tau / T::cst(k as f64);
    let mut hi = best.1 + widen * tau / T::cst(k as f64);
    let third = T::cst(3.0).recip();
    while hi - lo > T::cst(REFINE_BRACKET) {
        let m1 = lo + (hi - lo) * third;
        let m2 = hi - (hi - lo) * third;
        let v1 = eval(m1)?;
        let v2 = eval(m2)?;
        if better(v1, v2) {
            hi = m2;
            if better(v1, best.0) {
                best = (v1, m1);
            }
        } else {
            lo = m1;
            if better(v2, best.0) {
                best = (v2, m2);
            }
        }
    }
    Ok(best)
}

/// Build a geometric radius ladder profile on [r_min, r_max].
///
/// Every base radius r also contributes the doubled radius 2r, so that the
/// log M(2r)/log M(r) ratio is testable without interpolation. Entries that
/// land on a zero radius are perturbed by relative 1e-6 and flagged.
pub fn build_profile<T: Real>(
    f: &FunctionSpec<T>,
    r_min: T,
    r_max: T,
    points_per_decade: u32,
) -> Result<RadialProfile<T>, ProfileError> {
    if !(r_min > T::zero() && r_min < r_max) {
        return Err(ProfileError::InvalidInput("need 0 < r_min < r_max".into()));
    }
    if points_per_decade < 4 {
        return Err(ProfileError::InvalidInput(
            "points_per_decade must be >= 4".into(),
        ));
    }
    let decades = (r_max / r_min).log10();
    let steps = (decades * T::cst(points_per_decade as f64))
        .ceil()
        .to_f64()
        .unwrap() as usize;
    let mut radii: Vec<T> = Vec::with_capacity(2 * (steps + 1));
    let ln10 = T::cst(std::f64::consts::LN_10);
    for i in 0..=steps {
        let frac = T::cst(i as f64) / T::cst(points_per_decade as f64);
        let r = ((r_min.log10() + frac) * ln10).exp().min(r_max);
        radii.push(r);
        radii.push(r * T::cst(2.0));
    }
    radii.sort_by(|a, b| a.partial_cmp(b).unwrap());
    radii.dedup_by(|a, b| (*a - *b).abs() <= *b * T::cst(1e-12));

    let k = DEFAULT_ANGULAR_SAMPLES;
    let entries: Result<Vec<ProfileEntry<T>>, ProfileError> = radii
        .par_iter()
        .map(|&r0| {
            let mut r = r0;
            let mut perturbed = false;
            for _ in 0..4 {
                match profile_entry(f, r, k, perturbed) {
                    Err(ProfileError::AtZero { .. }) => {
                        r = r * T::cst(1.0 + 1e-6);
                        perturbed = true;
                    }
                    other => return other,
                }
            }
            profile_entry(f, r, k, perturbed)
        })
        .collect();

    Ok(RadialProfile {
        entries: entries?,
        angular_resolution: k,
    })
}

fn profile_entry<T: Real>(
    f: &FunctionSpec<T>,
    r: T,
    k: u32,
    perturbed: bool,
) -> Result<ProfileEntry<T>, ProfileError> {
    let max = match max_modulus(f, r, k) {
        Ok(m) => m,
        Err(ProfileError::OverflowDomain) => log_max_modulus(f, r.ln(), k)?,
        Err(e) => return Err(e),
    };
    let min = min_modulus(f, r, k.max(64))?;
    let method = if max.method == ModulusMethod::LogDomain || min.method == ModulusMethod::LogDomain
    {
        ModulusMethod::LogDomain
    } else {
        max.method
    };
    Ok(ProfileEntry {
        r,
        log_max: max.log_max,
        log_min: min.log_min,
        method,
        perturbed,
    })
}

impl<T: Real> RadialProfile<T> {
    /// Assemble a profile from raw samples (synthetic ladders in tests and
    /// condition checks take this route).
    pub fn from_samples(samples: Vec<(T, T, T)>, angular_resolution: u32) -> Self {
        let entries = samples
            .into_iter()
            .map(|(r, log_max, log_min)| ProfileEntry {
                r,
                log_max,
                log_min,
                method: ModulusMethod::LogDomain,
                perturbed: false,
            })
            .collect();
        RadialProfile {
            entries,
            angular_resolution,
        }
    }

    /// Check the structural invariants (radii strictly increasing,
    /// log m <= log M, log M nondecreasing up to `slack`).
    pub fn check_invariants(&self, slack: T) -> Result<(), ProfileError> {
        for w in self.entries.windows(2) {
            if !(w[1].r > w[0].r) {
                return Err(ProfileError::InvalidInput(
                    "radii not strictly increasing".into(),
                ));
            }
            if w[1].log_max < w[0].log_max - slack {
                return Err(ProfileError::InvalidInput(format!(
                    "log M decreasing at r = {}",
                    w[1].r
                )));
            }
        }
        for e in &self.entries {
            if e.log_min > e.log_max + slack {
                return Err(ProfileError::InvalidInput(format!(
                    "log m > log M at r = {}",
                    e.r
                )));
            }
        }
        Ok(())
    }

    /// CSV rendering: header `r,logM,logm,method`, floats at 17 significant
    /// digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,logM,logm,method\n");
        for e in &self.entries {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{}\n",
                e.r.to_f64().unwrap(),
                e.log_max.to_f64().unwrap(),
                e.log_min.to_f64().unwrap(),
                e.method
            ));
        }
        out
    }
}

/// Least-squares estimate of the order rho from the tail of a profile:
/// slope of log(log M) against log r over the last `tail_fraction` of
/// entries with log M > 1.
pub fn estimate_order<T: Real>(
    profile: &RadialProfile<T>,
    tail_fraction: T,
) -> Result<OrderEstimate<T>, ProfileError> {
    if !(tail_fraction > T::zero() && tail_fraction <= T::one()) {
        return Err(ProfileError::InvalidInput(
            "tail_fraction must lie in (0, 1]".into(),
        ));
    }
    let n = profile.entries.len();
    let start = n - ((T::cst(n as f64) * tail_fraction).ceil().to_f64().unwrap() as usize).min(n);
    let pts: Vec<(T, T)> = profile.entries[start..]
        .iter()
        .filter(|e| e.log_max > T::one())
        .map(|e| (e.r.ln(), e.log_max.ln()))
        .collect();
    if pts.len() < 8 {
        return Err(ProfileError::InsufficientGrowth);
    }
    let m = T::cst(pts.len() as f64);
    let mean_x = pts.iter().fold(T::zero(), |s, p| s + p.0) / m;
    let mean_y = pts.iter().fold(T::zero(), |s, p| s + p.1) / m;
    let sxx = pts
        .iter()
        .fold(T::zero(), |s, p| s + (p.0 - mean_x) * (p.0 - mean_x));
    let sxy = pts
        .iter()
        .fold(T::zero(), |s, p| s + (p.0 - mean_x) * (p.1 - mean_y));
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res = pts.iter().fold(T::zero(), |s, p| {
        let resid = p.1 - (intercept + slope * p.0);
        s + resid * resid
    });
    let se = (ss_res / (m - T::cst(2.0)) / sxx).sqrt();
    Ok(OrderEstimate {
        rho: slope.max(T::zero()),
        ci: se * T::cst(2.0),
    })
}

/// Check log log M(r) < (log r)^{1/2} / (log log r)^epsilon strictly at
/// every profile entry with r > max(R, e^e); the verdict is over the
/// sampled ladder only.
pub fn check_slow_growth_bound<T: Real>(
    profile: &RadialProfile<T>,
    epsilon: T,
    r_threshold: T,
) -> SlowGrowthReport<T> {
    let e_e = T::E().exp();
    let cutoff = r_threshold.max(e_e);
    let mut first_violation = None;
    for e in &profile.entries {
        if e.r <= cutoff {
            continue;
        }
        let log_r = e.r.ln();
        let rhs = log_r.sqrt() / log_r.ln().powf(epsilon);
        // log M <= 1 makes the left side nonpositive: trivially below rhs
        if e.log_max > T::one() && e.log_max.ln() >= rhs {
            first_violation = Some(e.r);
            break;
        }
    }
    SlowGrowthReport {
        holds: first_violation.is_none(),
        epsilon,
        r_threshold,
        first_violation_r: first_violation,
    }
}

/// Doubling-ratio samples log M(2r)/log M(r) over the ladder's r/2r pairs.
pub fn doubling_ratios<T: Real>(profile: &RadialProfile<T>) -> Vec<RatioSample<T>> {
    let entries = &profile.entries;
    let mut samples = Vec::new();
    for (i, e) in entries.iter().enumerate() {
        if e.log_max <= T::zero() {
            continue;
        }
        let target = e.r * T::cst(2.0);
        for other in entries[i..].iter() {
            if (other.r - target).abs() <= target * T::cst(1e-9) {
                samples.push(RatioSample {
                    r: e.r,
                    value: other.log_max / e.log_max,
                });
                break;
            }
            if other.r > target * T::cst(1.0 + 1e-6) {
                break;
            }
        }
    }
    samples
}

/// Check log M(2r)/log M(r) -> c over the top two decades of the ladder:
/// c is the mean ratio there, `holds` iff the maximum deviation stays below
/// 2% of c.
pub fn check_doubling_ratio<T: Real>(
    profile: &RadialProfile<T>,
) -> Result<DoublingReport<T>, ProfileError> {
    let samples = doubling_ratios(profile);
    if samples.is_empty() {
        return Err(ProfileError::MissingPairs);
    }
    let r_top = samples.iter().fold(T::zero(), |m, s| m.max(s.r));
    let cutoff = r_top / T::cst(100.0);
    let top: Vec<&RatioSample<T>> = samples.iter().filter(|s| s.r >= cutoff).collect();
    let m = T::cst(top.len() as f64);
    let c_estimate = top.iter().fold(T::zero(), |s, x| s + x.value) / m;
    let dispersion = top
        .iter()
        .fold(T::zero(), |d, x| d.max((x.value - c_estimate).abs()));
    Ok(DoublingReport {
        holds: dispersion < T::cst(0.02) * c_estimate,
        c_estimate,
        dispersion,
    })
}

/// Assemble the full growth report for a profile.
pub fn growth_report<T: Real>(
    profile: &RadialProfile<T>,
    tail_fraction: T,
    epsilon: T,
    r_threshold: T,
) -> Result<GrowthReport<T>, ProfileError> {
    let order = estimate_order(profile, tail_fraction)?;
    let cond_1_5 = check_slow_growth_bound(profile, epsilon, r_threshold);
    let cond_1_6 = check_doubling_ratio(profile)?;
    Ok(GrowthReport {
        order_estimate: order.rho,
        order_ci_halfwidth: order.ci,
        ratio_c_samples: doubling_ratios(profile),
        cond_1_5,
        cond_1_6,
    })
}
