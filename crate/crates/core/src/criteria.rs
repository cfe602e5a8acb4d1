//! Baker-sequence certificates and Jordan-curve checks, entirely in log
//! domain.
//!
//! A certificate consists of radii R_{n+1} = M(R_n, f) together with
//! companion radii rho_n in [R_n, R_n^{c(n)}] at which the minimum modulus
//! exceeds R_{n+1}^{c(n+1)}. A fully verified certificate (every margin
//! positive) witnesses, on the tested range, the hypotheses under which
//! B_D(f), B(f) and I(f) are connected and F(f) has no unbounded
//! components.

use num_complex::Complex;
use rayon::prelude::*;
use thiserror::Error;

use crate::catalog::{CatalogError, FunctionSpec};
use crate::profile::{self, ProfileError};
use crate::scalar::Real;

/// Candidates per step in the companion-radius search (one coarse pass plus
/// one refinement pass of the same width around the best candidate).
pub const RHO_CANDIDATES: usize = 64;

/// Term budget for product evaluations inside certificate construction:
/// past this, evaluation switches to the integral regime, which is cheaper
/// by orders of magnitude at large radii and accurate to ~1e-11 relative.
const SEARCH_MAX_TERMS: u64 = 200_000;

/// Sequences R_n, rho_n, c(n) with per-step verification margins, all in
/// natural-log domain.
#[derive(Clone, Debug)]
pub struct BakerCertificate<T> {
    /// log R_1, ..., log R_{k+1} where k is the number of completed steps.
    pub log_r: Vec<T>,
    /// log rho_1, ..., log rho_k.
    pub log_rho: Vec<T>,
    /// c(1), ..., c(n_max + 1) as supplied.
    pub c_schedule: Vec<T>,
    /// margin_n = log m(rho_n, f) - c(n+1) log R_{n+1}.
    pub margins: Vec<T>,
    /// First step (1-based) whose log M came from the fitted asymptotic
    /// model rather than evaluation; `None` when everything was evaluated.
    pub extrapolated_from: Option<usize>,
    /// Step at which no candidate produced a positive margin (1-based).
    pub failed_step: Option<usize>,
    pub verified: bool,
}

/// Disc in the plane.
#[derive(Clone, Copy, Debug)]
pub struct Disc<T> {
    pub center: Complex<T>,
    pub radius: T,
}

/// How the requirement that the disc D meets the Julia set was attested;
/// recorded verbatim in reports, never claimed as proof.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JuliaAttestation {
    UserAsserted,
    EscapeBoundaryWitnessed,
}

impl JuliaAttestation {
    pub fn as_str(&self) -> &'static str {
        match self {
            JuliaAttestation::UserAsserted => "user-asserted",
            JuliaAttestation::EscapeBoundaryWitnessed => "escape-boundary-witnessed",
        }
    }
}

/// The circles gamma_n = {|z| = rho_n} and the iterated-M bounds on f^n(D).
#[derive(Clone, Debug)]
pub struct CurveFamily<T> {
    pub circle_log_radii: Vec<T>,
    pub disc: Disc<T>,
    pub image_log_radii: Vec<T>,
}

/// Which of the two surrounding conditions failed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SurroundCondition {
    /// gamma_n surrounds f^n(D): iterated-M bound below the circle radius.
    CircleSurroundsImage,
    /// f(gamma_n) surrounds the bounded component of gamma_{n+1}^c:
    /// recomputed log m(rho_n) above the next circle radius.
    ImageSurroundsNextCircle,
}

/// Outcome of the surrounding-curve verification.
#[derive(Clone, Debug)]
pub struct CurveCheck<T> {
    pub family: CurveFamily<T>,
    /// Condition 1 per step.
    pub circle_surrounds_image: Vec<bool>,
    /// Condition 2 per step (the last step checks against
    /// c(n+1) log R_{n+1}, the ceiling for any admissible next circle).
    pub image_surrounds_next: Vec<bool>,
    /// Winding of f(gamma_n) around 0: the zero count inside the circle
    /// for product kinds (a real number, since the count at certificate
    /// radii can exceed any integer type); confirmed by [`check_winding`]
    /// where the values on the image curve are representable.
    pub winding_around_zero: Vec<T>,
    pub first_failure: Option<(usize, SurroundCondition)>,
    pub attestation: JuliaAttestation,
}

impl<T> CurveCheck<T> {
    pub fn all_ok(&self) -> bool {
        self.first_failure.is_none()
    }
}

/// Verdict of the regularity condition r f'(r)/f(r) >= C log f(r)/log r.
#[derive(Clone, Copy, Debug)]
pub struct LogDerivativeReport<T> {
    pub holds_on_grid: bool,
    pub min_ratio: T,
}

#[derive(Error, Debug, Clone, PartialEq)]
pub enum CriteriaError {
    #[error("expansion not started: log M(R_1) = {log_m_r1} <= log R_1 = {log_r1}")]
    ExpansionNotStarted { log_r1: f64, log_m_r1: f64 },
    #[error("c_schedule needs {needed} entries (n_max + 1), got {got}")]
    ScheduleTooShort { needed: usize, got: usize },
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("log-domain range exhausted at step {step}: log M no longer fits the scalar")]
    LogRangeExceeded { step: usize },
    #[error("certificate is not verified; curve check requires verified = true")]
    UnverifiedCertificate,
    #[error("closure of D touches zero radius #{index}")]
    DiscTouchesZeros { index: u64 },
    #[error("target {target_index} lies on (or within 1e-6 scale of) the image curve")]
    TargetOnCurve { target_index: usize },
    #[error("angular mesh exhausted (2^20 samples) refining target {target_index}")]
    MeshExhausted { target_index: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
}

/// Fitted asymptotic growth model log M(r) = a r^rho, used only when a
/// closed-form kind is asked for log M beyond its representable radius.
#[derive(Clone, Copy, Debug)]
struct GrowthModel<T> {
    ln_a: T,
    rho: T,
}

fn fit_growth_model<T: Real>(f: &FunctionSpec<T>) -> Result<GrowthModel<T>, CriteriaError> {
    let p = profile::build_profile(f, T::cst(1e2), T::cst(1e6), 8)?;
    let est = profile::estimate_order(&p, T::cst(0.5))?;
    let tail: Vec<_> = p.entries.iter().filter(|e| e.log_max > T::one()).collect();
    let m = T::cst(tail.len() as f64);
    let ln_a = tail
        .iter()
        .fold(T::zero(), |s, e| s + (e.log_max.ln() - est.rho * e.r.ln()))
        / m;
    Ok(GrowthModel { ln_a, rho: est.rho })
}

/// log M as a function of log radius, with extrapolation fallback.
/// Returns (log M, extrapolated?).
fn log_max_at<T: Real>(
    f: &FunctionSpec<T>,
    log_r: T,
    model: &mut Option<GrowthModel<T>>,
    step: usize,
) -> Result<(T, bool), CriteriaError> {
    let evaluated = if f.has_nonneg_coefficients() {
        f.log_modulus_budgeted(log_r, T::zero(), SEARCH_MAX_TERMS)
            .map_err(ProfileError::from)
    } else {
        profile::log_max_modulus(f, log_r, 64).map(|m| m.log_max)
    };
    match evaluated {
        Ok(v) if v.is_finite() => Ok((v, false)),
        Ok(_) => Err(CriteriaError::LogRangeExceeded { step }),
        Err(ProfileError::Catalog(CatalogError::RadiusNotRepresentable { .. })) => {
            if model.is_none() {
                *model = Some(fit_growth_model(f)?);
            }
            let gm = model.as_ref().unwrap();
            let v = (gm.ln_a + gm.rho * log_r).exp();
            if v.is_finite() {
                Ok((v, true))
            } else {
                Err(CriteriaError::LogRangeExceeded { step })
            }
        }
        Err(e) => Err(e.into()),
    }
}

/// log m at a log radius; `None` when the point is unusable (at a zero, or
/// out of the representable range for sampled kinds).
fn log_min_at<T: Real>(f: &FunctionSpec<T>, log_rho: T) -> Option<T> {
    if f.min_on_negative_axis() {
        match f.log_modulus_budgeted(log_rho, T::PI(), SEARCH_MAX_TERMS) {
            Ok(v) if v.is_finite() => Some(v),
            _ => None,
        }
    } else {
        // sampled kinds: a sampled minimum at representable radii only
        let r = log_rho.exp();
        if !r.is_finite() {
            return None;
        }
        profile::min_modulus(f, r, 64).ok().map(|m| m.log_min)
    }
}

/// Build the Baker sequences of radii and companion radii.
///
/// For each step, log R_{n+1} = log M(R_n) is computed on the log-domain
/// path, and log rho_n is searched over `RHO_CANDIDATES` log-equispaced
/// candidates in [log R_n, c(n) log R_n] (plus one refinement pass around
/// the best), maximizing log m. A step where every candidate yields a
/// nonpositive margin leaves the certificate unverified with `failed_step`
/// set (the expected outcome for the exponential).
pub fn build_baker_sequences<T: Real>(
    f: &FunctionSpec<T>,
    log_r1: T,
    c_schedule: &[T],
    n_max: usize,
) -> Result<BakerCertificate<T>, CriteriaError> {
    if n_max == 0 {
        return Err(CriteriaError::InvalidInput(
            "n_max must be at least 1".into(),
        ));
    }
    if c_schedule.len() < n_max + 1 {
        return Err(CriteriaError::ScheduleTooShort {
            needed: n_max + 1,
            got: c_schedule.len(),
        });
    }
    if let Some(bad) = c_schedule.iter().find(|&&c| !(c > T::one())) {
        return Err(CriteriaError::InvalidSchedule(format!(
            "every c(n) must exceed 1, got {bad}"
        )));
    }
    if !(log_r1.is_finite() && log_r1 > T::zero()) {
        return Err(CriteriaError::InvalidInput(
            "log_r1 must be finite and positive".into(),
        ));
    }

    let mut model: Option<GrowthModel<T>> = None;
    let mut extrapolated_from: Option<usize> = None;

    // expansion precondition: M(R_1) > R_1
    let (log_r2, ex) = log_max_at(f, log_r1, &mut model, 1)?;
    if !(log_r2 > log_r1) {
        return Err(CriteriaError::ExpansionNotStarted {
            log_r1: log_r1.to_f64().unwrap_or(f64::NAN),
            log_m_r1: log_r2.to_f64().unwrap_or(f64::NAN),
        });
    }
    if ex {
        extrapolated_from = Some(1);
    }

    let mut log_r = vec![log_r1, log_r2];
    let mut log_rho = Vec::with_capacity(n_max);
    let mut margins = Vec::with_capacity(n_max);
    let mut failed_step = None;

    for n in 1..=n_max {
        let here = log_r[n - 1];
        let next = log_r[n];
        let c_here = c_schedule[n - 1];
        let c_next = c_schedule[n];

        let (best_rho, best_margin) =
            search_companion_radius(f, here, c_here * here, c_next * next);

        match best_rho {
            Some(rho) if best_margin > T::zero() => {
                log_rho.push(rho);
                margins.push(best_margin);
            }
            Some(rho) => {
                log_rho.push(rho);
                margins.push(best_margin);
                failed_step = Some(n);
                break;
            }
            None => {
                // every candidate unusable; report the step as failed with
                // the worst possible margin
                log_rho.push(here);
                margins.push(T::neg_infinity());
                failed_step = Some(n);
                break;
            }
        }

        if n < n_max {
            let (v, ex) = log_max_at(f, next, &mut model, n + 1)?;
            if !v.is_finite() {
                return Err(CriteriaError::LogRangeExceeded { step: n + 1 });
            }
            if ex && extrapolated_from.is_none() {
                extrapolated_from = Some(n + 1);
            }
            log_r.push(v);
        }
    }

    let verified = failed_step.is_none() && margins.iter().all(|m| *m > T::zero());
    Ok(BakerCertificate {
        log_r,
        log_rho,
        c_schedule: c_schedule.to_vec(),
        margins,
        extrapolated_from,
        failed_step,
        verified,
    })
}

/// One coarse pass of log-equispaced candidates over [lo, hi] plus a
/// refinement pass around the best, maximizing
/// margin = log m(rho) - rhs. Candidates at zero radii are skipped.
fn search_companion_radius<T: Real>(f: &FunctionSpec<T>, lo: T, hi: T, rhs: T) -> (Option<T>, T) {
    let pass = |a: T, b: T| -> Option<(T, T)> {
        let k = RHO_CANDIDATES;
        let evals: Vec<Option<(T, T)>> = (0..k)
            .into_par_iter()
            .map(|j| {
                let frac = T::cst(j as f64) / T::cst((k - 1) as f64);
                let rho = a + (b - a) * frac;
                log_min_at(f, rho).map(|m| (rho, m - rhs))
            })
            .collect();
        let mut best: Option<(T, T)> = None;
        for e in evals.into_iter().flatten() {
            match best {
                Some((_, bm)) if e.1 <= bm => {}
                _ => best = Some(e),
            }
        }
        best
    };

    let Some((rho0, m0)) = pass(lo, hi) else {
        return (None, T::neg_infinity());
    };
    let width = (hi - lo) / T::cst((RHO_CANDIDATES - 1) as f64);
    let (a, b) = ((rho0 - width).max(lo), (rho0 + width).min(hi));
    match pass(a, b) {
        Some((rho1, m1)) if m1 > m0 => (Some(rho1), m1),
        _ => (Some(rho0), m0),
    }
}

#[allow(clippy::needless_range_loop)] // steps index several parallel arrays
/// Verify the surrounding-curve hypotheses against a verified certificate:
/// gamma_n = {|z| = rho_n} must surround the iterated-M bound on f^n(D),
/// and the image f(gamma_n) (which winds around 0 with modulus at least
/// m(rho_n)) must surround the disc bounded by gamma_{n+1}.
pub fn verify_surrounding_curves<T: Real>(
    f: &FunctionSpec<T>,
    disc: Disc<T>,
    cert: &BakerCertificate<T>,
    attestation: JuliaAttestation,
) -> Result<CurveCheck<T>, CriteriaError> {
    if !cert.verified {
        return Err(CriteriaError::UnverifiedCertificate);
    }
    if !(disc.radius > T::zero()) {
        return Err(CriteriaError::InvalidInput(
            "disc radius must be positive".into(),
        ));
    }
    // the closure of D must avoid the zeros of f
    if let Some(zeros) = f.zeros() {
        let reach = disc.center.norm() + disc.radius;
        let mut n = 1u64;
        loop {
            let r_n = zeros.radius(n);
            if r_n > reach * T::cst(2.0) + T::cst(10.0) {
                break;
            }
            let dist = (disc.center - Complex::new(-r_n, T::zero())).norm();
            if dist <= disc.radius {
                return Err(CriteriaError::DiscTouchesZeros { index: n });
            }
            n += 1;
        }
    }

    let steps = cert.log_rho.len();
    let mut model: Option<GrowthModel<T>> = None;

    // iterated-M bounds on f^n(D) from s = |center| + radius
    let mut image_log_radii = Vec::with_capacity(steps);
    let mut bound = (disc.center.norm() + disc.radius).ln();
    for n in 1..=steps {
        bound = log_max_at(f, bound, &mut model, n)?.0;
        image_log_radii.push(bound);
    }

    let mut circle_surrounds_image = Vec::with_capacity(steps);
    let mut image_surrounds_next = Vec::with_capacity(steps);
    let mut winding_around_zero = Vec::with_capacity(steps);
    let mut first_failure = None;

    for n in 0..steps {
        let cond1 = image_log_radii[n] < cert.log_rho[n];
        // recompute log m rather than trusting the stored margin
        let log_m = log_min_at(f, cert.log_rho[n]).unwrap_or_else(T::neg_infinity);
        let next_circle = if n + 1 < steps {
            cert.log_rho[n + 1]
        } else {
            cert.c_schedule[n + 1] * cert.log_r[n + 1]
        };
        let cond2 = log_m > next_circle;
        if first_failure.is_none() {
            if !cond1 {
                first_failure = Some((n + 1, SurroundCondition::CircleSurroundsImage));
            } else if !cond2 {
                first_failure = Some((n + 1, SurroundCondition::ImageSurroundsNextCircle));
            }
        }
        circle_surrounds_image.push(cond1);
        image_surrounds_next.push(cond2);

        // winding of f(gamma_n) around 0 = number of zeros inside gamma_n
        let count = f
            .zeros()
            .map(|z| z.count_below_log(cert.log_rho[n]))
            .unwrap_or_else(T::zero);
        winding_around_zero.push(count);
    }

    // numerical confirmation of the winding where the image curve is
    // representable (direct samples of f on the circle stay finite)
    for n in 0..steps {
        let log_rho = cert.log_rho[n];
        let representable = log_rho.exp().is_finite()
            && log_max_at(f, log_rho, &mut model, n + 1)
                .map(|(v, _)| v < T::log_saturation())
                .unwrap_or(false);
        if representable && f.zeros().is_some() {
            let w = check_winding(f, log_rho, &[Complex::new(T::zero(), T::zero())])?;
            if T::cst(w[0] as f64) != winding_around_zero[n] {
                return Err(CriteriaError::InvalidInput(format!(
                    "winding mismatch at step {}: argument principle gives {}, zero count {}",
                    n + 1,
                    w[0],
                    winding_around_zero[n]
                )));
            }
        }
    }

    Ok(CurveCheck {
        family: CurveFamily {
            circle_log_radii: cert.log_rho.clone(),
            disc,
            image_log_radii,
        },
        circle_surrounds_image,
        image_surrounds_next,
        winding_around_zero,
        first_failure,
        attestation,
    })
}

/// Winding numbers of theta -> f(r e^{i theta}) - w around 0, one per
/// target, by summed argument increments over an adaptively refined
/// angular mesh (each increment below pi/2).
pub fn check_winding<T: Real>(
    f: &FunctionSpec<T>,
    log_r: T,
    targets: &[Complex<T>],
) -> Result<Vec<i64>, CriteriaError> {
    let r = log_r.exp();
    if !r.is_finite() {
        return Err(CriteriaError::InvalidInput(
            "circle radius not representable".into(),
        ));
    }
    let tau = T::cst(2.0) * T::PI();
    let eval = |theta: T| -> Result<Complex<T>, CriteriaError> {
        Ok(f.evaluate(Complex::from_polar(r, theta))?.value)
    };

    // initial mesh, shared across targets for the on-curve precheck
    const INITIAL: usize = 256;
    let mut base = Vec::with_capacity(INITIAL + 1);
    for j in 0..=INITIAL {
        let theta = tau * T::cst(j as f64) / T::cst(INITIAL as f64);
        base.push((theta, eval(theta)?));
    }
    let mut out = Vec::with_capacity(targets.len());
    for (ti, &w) in targets.iter().enumerate() {
        // on-curve precheck against the local magnitude: the global curve
        // maximum would dwarf legitimately small values near the minimum
        // modulus (M/m is astronomic for these functions)
        for (_, v) in &base {
            if (*v - w).norm() <= T::cst(1e-6) * (w.norm() + v.norm()) {
                return Err(CriteriaError::TargetOnCurve { target_index: ti });
            }
        }
        let scale = w.norm();
        let mut budget: i64 = 1 << 20;
        let mut total = T::zero();
        for seg in base.windows(2) {
            let ((ta, fa), (tb, fb)) = (seg[0], seg[1]);
            total = total
                + segment_arg(f, r, w, ta, fa - w, tb, fb - w, &mut budget, scale).map_err(
                    |e| match e {
                        SegmentError::Exhausted => {
                            CriteriaError::MeshExhausted { target_index: ti }
                        }
                        SegmentError::TooClose => CriteriaError::TargetOnCurve { target_index: ti },
                        SegmentError::Eval(ce) => ce.into(),
                    },
                )?;
        }
        let winding = total / tau;
        let rounded = winding.round();
        if (winding - rounded).abs() > T::cst(1e-3) {
            return Err(CriteriaError::MeshExhausted { target_index: ti });
        }
        out.push(rounded.to_f64().unwrap() as i64);
    }
    Ok(out)
}

enum SegmentError {
    Exhausted,
    TooClose,
    Eval(CatalogError),
}

/// Argument increment of f(. ) - w over [ta, tb], recursively bisected
/// until each increment is below pi/2.
#[allow(clippy::too_many_arguments)]
fn segment_arg<T: Real>(
    f: &FunctionSpec<T>,
    r: T,
    w: Complex<T>,
    ta: T,
    ga: Complex<T>,
    tb: T,
    gb: Complex<T>,
    budget: &mut i64,
    scale: T,
) -> Result<T, SegmentError> {
    let cross = gb * ga.conj();
    let inc = cross.arg();
    if inc.abs() < T::FRAC_PI_2() {
        return Ok(inc);
    }
    if *budget <= 0 {
        return Err(SegmentError::Exhausted);
    }
    *budget -= 1;
    let tm = (ta + tb) * T::cst(0.5);
    let gm = f
        .evaluate(Complex::from_polar(r, tm))
        .map_err(SegmentError::Eval)?
        .value
        - w;
    if gm.norm() <= T::cst(1e-12) * scale {
        return Err(SegmentError::TooClose);
    }
    Ok(segment_arg(f, r, w, ta, ga, tm, gm, budget, scale)?
        + segment_arg(f, r, w, tm, gm, tb, gb, budget, scale)?)
}

/// Check r f'(r)/f(r) >= C log f(r)/log r over a grid of radii.
pub fn check_log_derivative_bound<T: Real>(
    f: &FunctionSpec<T>,
    r_grid: &[T],
    c_big: T,
) -> Result<LogDerivativeReport<T>, CriteriaError> {
    if r_grid.is_empty() {
        return Err(CriteriaError::InvalidInput(
            "r_grid must be nonempty".into(),
        ));
    }
    if !(c_big > T::one()) {
        return Err(CriteriaError::InvalidInput("C must exceed 1".into()));
    }
    let first_zero = f.zeros().map(|z| z.radius(1));
    let mut min_ratio = T::infinity();
    for &r in r_grid {
        // the evaluation lives on the positive axis, where f has no zeros;
        // only radii at or below the first zero radius are rejected (for
        // r = r_1 = 1 the right side would also divide by log r = 0)
        if let Some(r1) = first_zero {
            if r <= r1 {
                return Err(CriteriaError::Catalog(CatalogError::NearZero {
                    index: 1,
                    rel: crate::catalog::NEAR_ZERO_REL,
                }));
            }
        }
        if !(r > T::one()) {
            return Err(CriteriaError::InvalidInput(format!(
                "grid radius {r} must exceed 1 (log r must be positive)"
            )));
        }
        let lhs = f.log_derivative_on_ray(r)?;
        let rhs = c_big * f.evaluate_log_on_ray(r, T::zero())? / r.ln();
        min_ratio = min_ratio.min(lhs / rhs);
    }
    Ok(LogDerivativeReport {
        holds_on_grid: min_ratio >= T::one(),
        min_ratio,
    })
}

/// Report label for a fully verified certificate + curve check; a report
/// string, never a mathematical claim beyond the tested range.
pub fn certification_label<T: Real>(
    cert: &BakerCertificate<T>,
    curves: &CurveCheck<T>,
) -> &'static str {
    if cert.verified && curves.all_ok() {
        "no unbounded Fatou components certified numerically on tested range; \
         B_D(f), B(f), I(f) connected on tested range"
    } else {
        "certificate not verified on tested range"
    }
}
