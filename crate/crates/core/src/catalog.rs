//! The function catalog: declarative specs for the entire functions under
//! study, with direct (complex-valued) and log-domain evaluation.
//!
//! Catalog members:
//!
//! * `FatouBaker` — f(z) = z + 1 + e^{-z}, Fatou's example with a Baker
//!   domain;
//! * `ScaledExp` — f(z) = lambda e^z, lambda > 0;
//! * `QuarterCosh` — f(z) = (cos z^{1/4} + cosh z^{1/4})/2, an order-1/4
//!   function with zeros at -4 pi^4 (n - 1/2)^4;
//! * `CanonicalProduct` — f(z) = c prod (1 + z / n^{1/rho}), 0 < rho < 1/2;
//! * `GeneralProduct` — f(z) = c prod (1 + z / r_n) with a caller-supplied
//!   power rule r_n = scale * n^exponent, exponent > 2.

pub mod products;

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{complex_from_log, Real};
use products::{LogSum, PowerZeros, SumRegime};

pub use products::DEFAULT_MAX_TERMS;

/// Relative distance to a zero radius below which log-modulus evaluation on
/// a ray is refused as unreliable.
pub const NEAR_ZERO_REL: f64 = 1e-12;

/// |z| above which QuarterCosh switches from its power series to the
/// principal-branch closed form.
pub const QUARTER_COSH_CROSSOVER: f64 = 100.0;

/// Zero radii for `GeneralProduct`: r_n = scale * n^exponent.
///
/// `exponent > 2` certifies genus-zero convergence with order 1/exponent
/// below 1/2; monotonicity and growth are additionally checked on a prefix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct ZeroRadiiRule<T> {
    pub scale: T,
    pub exponent: T,
}

/// Declarative description of an entire function from the catalog.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub enum FunctionSpec<T> {
    FatouBaker,
    ScaledExp {
        lambda: T,
    },
    QuarterCosh,
    CanonicalProduct {
        rho: T,
        c: T,
        truncation_tol: T,
    },
    GeneralProduct {
        c: T,
        zero_radii_rule: ZeroRadiiRule<T>,
        truncation_tol: T,
    },
}

/// Result of a direct evaluation.
#[derive(Clone, Copy, Debug)]
pub struct EvalResult<T> {
    /// f(z), saturated in modulus at `exp(Real::log_saturation())`.
    pub value: Complex<T>,
    /// Natural log of |f(z)|; finite unless f(z) = 0, and valid far beyond
    /// the saturation modulus.
    pub log_abs: T,
    /// Rigorous bound on the truncation error in `log_abs` (zero for
    /// closed-form kinds).
    pub trunc_bound: T,
    /// Set when z lies on the negative real axis for QuarterCosh (the
    /// principal branch of z^{1/4} sits on its cut there; the value is
    /// still the entire function's, by the i-rotation symmetry of
    /// cos + cosh).
    pub branch_cut_warning: bool,
}

/// Why an orbit stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OrbitExit {
    Bailout,
    MaxSteps,
    Overflow,
}

/// Forward orbit prefix under iteration of f.
#[derive(Clone, Debug)]
pub struct Orbit<T> {
    /// z_0, f(z_0), f^2(z_0), ... up to and including the exit point.
    pub points: Vec<Complex<T>>,
    pub exit: OrbitExit,
    /// Index of the first point past the bailout (or overflow) threshold;
    /// `None` when the orbit ran to `max_steps`.
    pub exit_step: Option<u32>,
}

#[derive(Error, Debug, Clone, PartialEq)]
pub enum CatalogError {
    #[error("invalid function spec: {0}")]
    InvalidSpec(String),
    #[error("product tail needs {required_terms} terms, budget is {max_terms}")]
    NonConvergentProduct { required_terms: u64, max_terms: u64 },
    #[error("evaluation point within relative {rel:e} of zero radius #{index}")]
    NearZero { index: u64, rel: f64 },
    #[error("radius with log r = {log_r} not representable for direct evaluation")]
    RadiusNotRepresentable { log_r: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl<T: Real> FunctionSpec<T> {
    /// Check the declared invariants (field ranges, rule monotonicity on a
    /// 64-term prefix).
    pub fn validate(&self) -> Result<(), CatalogError> {
        let fail = |m: String| Err(CatalogError::InvalidSpec(m));
        match *self {
            FunctionSpec::FatouBaker | FunctionSpec::QuarterCosh => Ok(()),
            FunctionSpec::ScaledExp { lambda } => {
                if lambda > T::zero() && lambda.is_finite() {
                    Ok(())
                } else {
                    fail(format!("lambda must be positive and finite, got {lambda}"))
                }
            }
            FunctionSpec::CanonicalProduct {
                rho,
                c,
                truncation_tol,
            } => {
                if !(rho > T::zero() && rho < T::cst(0.5)) {
                    return fail(format!("rho must lie strictly in (0, 1/2), got {rho}"));
                }
                if !(c > T::zero()) {
                    return fail(format!("c must be positive, got {c}"));
                }
                if !(truncation_tol > T::zero()) {
                    return fail(format!(
                        "truncation_tol must be positive, got {truncation_tol}"
                    ));
                }
                Ok(())
            }
            FunctionSpec::GeneralProduct {
                c,
                zero_radii_rule,
                truncation_tol,
            } => {
                if !(c > T::zero()) {
                    return fail(format!("c must be positive, got {c}"));
                }
                if !(truncation_tol > T::zero()) {
                    return fail(format!(
                        "truncation_tol must be positive, got {truncation_tol}"
                    ));
                }
                if !(zero_radii_rule.scale > T::zero()) {
                    return fail(format!(
                        "zero_radii_rule.scale must be positive, got {}",
                        zero_radii_rule.scale
                    ));
                }
                if !(zero_radii_rule.exponent > T::cst(2.0)) {
                    return fail(format!(
                        "zero_radii_rule.exponent must exceed 2, got {}",
                        zero_radii_rule.exponent
                    ));
                }
                // prefix check: strictly increasing and actually growing
                let zeros = self.zeros().expect("general product has zeros");
                let mut prev = zeros.radius(1);
                for n in 2..=64u64 {
                    let r = zeros.radius(n);
                    if !(r > prev) {
                        return fail(format!("zero radii not strictly increasing at n = {n}"));
                    }
                    prev = r;
                }
                if !(zeros.radius(64) > zeros.radius(1) * T::cst(2.0)) {
                    return fail("zero radii do not grow on the checked prefix".into());
                }
                Ok(())
            }
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            FunctionSpec::FatouBaker => "FatouBaker",
            FunctionSpec::ScaledExp { .. } => "ScaledExp",
            FunctionSpec::QuarterCosh => "QuarterCosh",
            FunctionSpec::CanonicalProduct { .. } => "CanonicalProduct",
            FunctionSpec::GeneralProduct { .. } => "GeneralProduct",
        }
    }

    /// True for kinds whose power series has nonnegative coefficients, so
    /// that M(r) = f(r). FatouBaker does not qualify: its series alternates
    /// beyond z^2 and its maximum modulus sits near theta = pi, where the
    /// e^{-z} term dominates.
    pub fn has_nonneg_coefficients(&self) -> bool {
        !matches!(self, FunctionSpec::FatouBaker)
    }

    /// True when min |f| on circles is attained on the negative real axis
    /// (all zeros there, or no zeros at all and the leading term decays).
    pub fn min_on_negative_axis(&self) -> bool {
        !matches!(self, FunctionSpec::FatouBaker)
    }

    /// Zero radii as a power rule, for the kinds that are genus-zero
    /// products of their zeros.
    pub fn zeros(&self) -> Option<PowerZeros<T>> {
        match *self {
            FunctionSpec::CanonicalProduct { rho, .. } => Some(PowerZeros {
                alpha: T::one(),
                beta: T::zero(),
                q: rho.recip(),
            }),
            FunctionSpec::GeneralProduct {
                zero_radii_rule, ..
            } => Some(PowerZeros {
                alpha: zero_radii_rule.scale,
                beta: T::zero(),
                q: zero_radii_rule.exponent,
            }),
            FunctionSpec::QuarterCosh => Some(PowerZeros {
                // zeros at -4 pi^4 (n - 1/2)^4
                alpha: T::cst(4.0) * T::PI().powi(4),
                beta: T::cst(0.5),
                q: T::cst(4.0),
            }),
            _ => None,
        }
    }

    fn product_params(&self) -> Option<(T, T)> {
        match *self {
            FunctionSpec::CanonicalProduct {
                c, truncation_tol, ..
            }
            | FunctionSpec::GeneralProduct {
                c, truncation_tol, ..
            } => Some((c, truncation_tol)),
            _ => None,
        }
    }

    /// Stable 64-bit hash of the function description (FNV-1a over the
    /// debug rendering);
    /// used to tag grid outputs with the function they were computed for.
    pub fn stable_hash(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in format!("{self:?}").bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x1000_0000_01b3);
        }
        h
    }

    /// Evaluate f(z). Products are truncated under the rigorous tail policy;
    /// the returned `trunc_bound` is below the configured `truncation_tol`.
    pub fn evaluate(&self, z: Complex<T>) -> Result<EvalResult<T>, CatalogError> {
        if !z.re.is_finite() || !z.im.is_finite() {
            return Err(CatalogError::InvalidParameter("z must be finite".into()));
        }
        match *self {
            FunctionSpec::FatouBaker => {
                let w = fatou_baker_log(z);
                Ok(closed_form_result(w))
            }
            FunctionSpec::ScaledExp { lambda } => {
                let w = z + Complex::new(lambda.ln(), T::zero());
                Ok(closed_form_result(w))
            }
            FunctionSpec::QuarterCosh => {
                if z.norm() <= T::cst(QUARTER_COSH_CROSSOVER) {
                    let value = quarter_cosh_series(z);
                    Ok(EvalResult {
                        value,
                        log_abs: value.norm().ln(),
                        trunc_bound: T::zero(),
                        branch_cut_warning: on_negative_axis(z),
                    })
                } else {
                    let root = Complex::from_polar(z.norm().sqrt().sqrt(), z.arg() / T::cst(4.0));
                    let (log_abs, arg) = quarter_cosh_log(root);
                    Ok(EvalResult {
                        value: complex_from_log(log_abs, arg),
                        log_abs,
                        trunc_bound: T::zero(),
                        branch_cut_warning: on_negative_axis(z),
                    })
                }
            }
            FunctionSpec::CanonicalProduct { .. } | FunctionSpec::GeneralProduct { .. } => {
                let (c, tol) = self.product_params().unwrap();
                let zeros = self.zeros().unwrap();
                let needed = zeros.terms_for_tol(z.norm().ln(), tol);
                let max = T::cst(DEFAULT_MAX_TERMS as f64);
                if !(needed <= max) {
                    return Err(CatalogError::NonConvergentProduct {
                        required_terms: needed.to_f64().map(|v| v as u64).unwrap_or(u64::MAX),
                        max_terms: DEFAULT_MAX_TERMS,
                    });
                }
                let n = needed.to_f64().unwrap() as u64;
                let mut w = Complex::new(c.ln(), T::zero());
                for k in 1..=n {
                    let factor = Complex::new(T::one(), T::zero()) + z / zeros.radius(k);
                    w = w + factor.ln();
                }
                let bound = zeros.tail_bound(z.norm().ln(), needed);
                Ok(EvalResult {
                    value: complex_from_log(w.re, w.im),
                    log_abs: w.re,
                    trunc_bound: bound,
                    branch_cut_warning: false,
                })
            }
        }
    }

    /// log |f(r e^{i theta})| for r = exp(log_r), valid far beyond the
    /// overflow radius of direct evaluation.
    ///
    /// For product kinds the sum of log-factors is used, switching to the
    /// Euler-Maclaurin integral regime when the term budget is exceeded.
    /// Refuses points within `NEAR_ZERO_REL` of a zero radius.
    pub fn log_modulus_from_log_radius(&self, log_r: T, theta: T) -> Result<T, CatalogError> {
        self.log_modulus_budgeted(log_r, theta, DEFAULT_MAX_TERMS)
    }

    /// As [`log_modulus_from_log_radius`](Self::log_modulus_from_log_radius)
    /// but with an explicit term budget for the exact product regime.
    /// Smaller budgets push evaluation into the integral regime earlier,
    /// which is much cheaper at large radii and accurate to ~1e-11
    /// relative; certificate searches use this.
    pub fn log_modulus_budgeted(
        &self,
        log_r: T,
        theta: T,
        max_terms: u64,
    ) -> Result<T, CatalogError> {
        match *self {
            FunctionSpec::ScaledExp { lambda } => {
                let r = log_r.exp();
                if !r.is_finite() {
                    return Err(CatalogError::RadiusNotRepresentable {
                        log_r: log_r.to_f64().unwrap_or(f64::INFINITY),
                    });
                }
                Ok(lambda.ln() + r * theta.cos())
            }
            FunctionSpec::FatouBaker => {
                let r = log_r.exp();
                if !r.is_finite() {
                    return Err(CatalogError::RadiusNotRepresentable {
                        log_r: log_r.to_f64().unwrap_or(f64::INFINITY),
                    });
                }
                Ok(fatou_baker_log(Complex::from_polar(r, theta)).re)
            }
            FunctionSpec::QuarterCosh => {
                let root_abs = (log_r / T::cst(4.0)).exp();
                if !root_abs.is_finite() {
                    return Err(CatalogError::RadiusNotRepresentable {
                        log_r: log_r.to_f64().unwrap_or(f64::INFINITY),
                    });
                }
                self.guard_near_zero(log_r, theta)?;
                let root = Complex::from_polar(root_abs, normalize_angle(theta) / T::cst(4.0));
                Ok(quarter_cosh_log(root).0)
            }
            FunctionSpec::CanonicalProduct { .. } | FunctionSpec::GeneralProduct { .. } => {
                let (c, tol) = self.product_params().unwrap();
                self.guard_near_zero(log_r, theta)?;
                let zeros = self.zeros().unwrap();
                let sum: LogSum<T> = zeros
                    .log_abs_sum(log_r, normalize_angle(theta), tol, max_terms, true)
                    .map_err(|e| CatalogError::NonConvergentProduct {
                        required_terms: e.required_terms,
                        max_terms,
                    })?;
                debug_assert!(
                    sum.regime == SumRegime::Exact
                        || sum.err <= sum.value.abs().max(T::one()) * T::cst(1e-6),
                    "integral regime error estimate unexpectedly large"
                );
                Ok(c.ln() + sum.value)
            }
        }
    }

    /// log |f(r e^{i theta})| (overflow-safe log-domain path).
    pub fn evaluate_log_on_ray(&self, r: T, theta: T) -> Result<T, CatalogError> {
        if !(r > T::zero() && r.is_finite()) {
            return Err(CatalogError::InvalidParameter(
                "r must be positive and finite".into(),
            ));
        }
        self.log_modulus_from_log_radius(r.ln(), theta)
    }

    /// r f'(r) / f(r) on the positive real axis.
    pub fn log_derivative_on_ray(&self, r: T) -> Result<T, CatalogError> {
        if !(r > T::zero() && r.is_finite()) {
            return Err(CatalogError::InvalidParameter(
                "r must be positive and finite".into(),
            ));
        }
        match *self {
            FunctionSpec::ScaledExp { .. } => Ok(r),
            FunctionSpec::FatouBaker => {
                // r (1 - e^{-r}) / (r + 1 + e^{-r})
                let e = (-r).exp();
                Ok(r * (T::one() - e) / (r + T::one() + e))
            }
            FunctionSpec::QuarterCosh => {
                if r <= T::cst(QUARTER_COSH_CROSSOVER) {
                    // series ratio: f'(r)/f(r) with f = sum r^k/(4k)!
                    let (f, fd) = quarter_cosh_series_with_derivative(r);
                    Ok(r * fd / f)
                } else {
                    // r f'/f = (w/4) (sinh w - sin w)/(cosh w + cos w), w = r^{1/4}
                    let w = r.sqrt().sqrt();
                    let ratio = if w > T::cst(500.0) {
                        T::one()
                    } else {
                        (w.sinh() - w.sin()) / (w.cosh() + w.cos())
                    };
                    Ok(w / T::cst(4.0) * ratio)
                }
            }
            FunctionSpec::CanonicalProduct { .. } | FunctionSpec::GeneralProduct { .. } => {
                let (_, tol) = self.product_params().unwrap();
                let zeros = self.zeros().unwrap();
                let sum = zeros
                    .log_derivative_sum(r.ln(), tol, DEFAULT_MAX_TERMS)
                    .map_err(|e| CatalogError::NonConvergentProduct {
                        required_terms: e.required_terms,
                        max_terms: DEFAULT_MAX_TERMS,
                    })?;
                Ok(sum.value)
            }
        }
    }

    /// Iterate z0 under f until the modulus exceeds `bailout`, the value
    /// saturates, or `max_steps` is reached.
    pub fn iterate_orbit(
        &self,
        z0: Complex<T>,
        max_steps: u32,
        bailout: T,
    ) -> Result<Orbit<T>, CatalogError> {
        if !(bailout > T::zero()) {
            return Err(CatalogError::InvalidParameter(
                "bailout must be positive".into(),
            ));
        }
        let mut points = Vec::with_capacity(16.min(max_steps as usize + 1));
        let mut z = z0;
        points.push(z);
        if z.norm() > bailout {
            return Ok(Orbit {
                points,
                exit: OrbitExit::Bailout,
                exit_step: Some(0),
            });
        }
        for step in 1..=max_steps {
            let next = match self.evaluate(z) {
                Ok(res) => {
                    if res.log_abs >= T::log_saturation() {
                        points.push(res.value);
                        return Ok(Orbit {
                            points,
                            exit: OrbitExit::Overflow,
                            exit_step: Some(step),
                        });
                    }
                    res.value
                }
                Err(CatalogError::NonConvergentProduct { .. }) => {
                    // the argument is so large that even the truncated
                    // product is out of budget; the image is far past any
                    // bailout
                    points.push(complex_from_log(T::log_saturation(), T::zero()));
                    return Ok(Orbit {
                        points,
                        exit: OrbitExit::Overflow,
                        exit_step: Some(step),
                    });
                }
                Err(e) => return Err(e),
            };
            points.push(next);
            if next.norm() > bailout {
                return Ok(Orbit {
                    points,
                    exit: OrbitExit::Bailout,
                    exit_step: Some(step),
                });
            }
            z = next;
        }
        Ok(Orbit {
            points,
            exit: OrbitExit::MaxSteps,
            exit_step: None,
        })
    }

    fn guard_near_zero(&self, log_r: T, theta: T) -> Result<(), CatalogError> {
        let Some(zeros) = self.zeros() else {
            return Ok(());
        };
        let th = normalize_angle(theta);
        let off_axis = (th.abs() - T::PI()).abs();
        if off_axis > T::cst(NEAR_ZERO_REL) {
            return Ok(());
        }
        if let Some((index, log_dist)) = zeros.nearest_zero(log_r) {
            // relative distance ~ sqrt(radial^2 + angular^2) near the zero
            let d = (log_dist * log_dist + off_axis * off_axis).sqrt();
            if d < T::cst(NEAR_ZERO_REL) {
                return Err(CatalogError::NearZero {
                    index,
                    rel: NEAR_ZERO_REL,
                });
            }
        }
        Ok(())
    }
}

fn on_negative_axis<T: Real>(z: Complex<T>) -> bool {
    z.im == T::zero() && z.re < T::zero()
}

/// Map an angle into (-pi, pi].
pub fn normalize_angle<T: Real>(theta: T) -> T {
    let tau = T::cst(2.0) * T::PI();
    let mut t = theta % tau;
    if t > T::PI() {
        t = t - tau;
    } else if t <= -T::PI() {
        t = t + tau;
    }
    t
}

fn closed_form_result<T: Real>(w: Complex<T>) -> EvalResult<T> {
    EvalResult {
        value: complex_from_log(w.re, w.im),
        log_abs: w.re,
        trunc_bound: T::zero(),
        branch_cut_warning: false,
    }
}

/// Complex log of z + 1 + e^{-z}, organized around whichever of the two
/// candidate dominant terms (e^{-z} or z + 1) is larger, so neither branch
/// can overflow.
fn fatou_baker_log<T: Real>(z: Complex<T>) -> Complex<T> {
    let one = Complex::new(T::one(), T::zero());
    let a = -z.re;
    let b = (z + one).norm().ln();
    if a >= b {
        // f = e^{-z} (1 + (z + 1) e^{z})
        -z + (one + (z + one) * z.exp()).ln()
    } else {
        // f = (z + 1) (1 + e^{-z}/(z + 1))
        (z + one).ln() + (one + (-z).exp() / (z + one)).ln()
    }
}

/// Power series sum_k z^k / (4k)!, converging rapidly for |z| <= ~100.
fn quarter_cosh_series<T: Real>(z: Complex<T>) -> Complex<T> {
    let mut term = Complex::new(T::one(), T::zero());
    let mut sum = term;
    for k in 1..200u32 {
        let k4 = 4.0 * k as f64;
        let denom = (k4 - 3.0) * (k4 - 2.0) * (k4 - 1.0) * k4;
        term = term * z / T::cst(denom);
        sum = sum + term;
        if term.norm() <= sum.norm() * T::epsilon() {
            break;
        }
    }
    sum
}

/// Series values of f(r) and f'(r) for real r in the series range.
fn quarter_cosh_series_with_derivative<T: Real>(r: T) -> (T, T) {
    let mut term = T::one();
    let mut f = term;
    let mut fd = T::zero();
    for k in 1..200u32 {
        let k4 = 4.0 * k as f64;
        let denom = (k4 - 3.0) * (k4 - 2.0) * (k4 - 1.0) * k4;
        term = term * r / T::cst(denom);
        f = f + term;
        fd = fd + term * T::cst(k as f64) / r;
        if term <= f * T::epsilon() {
            break;
        }
    }
    (f, fd)
}

/// (log |f|, arg f) for f = (cos w + cosh w)/2 with w = z^{1/4} principal,
/// via the four exponentials e^{±w}, e^{±iw} factored by the largest real
/// part. Stable for |w| up to the full exponent range of the scalar.
fn quarter_cosh_log<T: Real>(w: Complex<T>) -> (T, T) {
    let a = w.re.max(w.im.abs());
    let iw = Complex::new(-w.im, w.re);
    let shift = Complex::new(a, T::zero());
    let s = ((w - shift).exp() + (-w - shift).exp() + (iw - shift).exp() + (-iw - shift).exp())
        / T::cst(4.0);
    (a + s.norm().ln(), s.arg())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn canonical_quarter() -> FunctionSpec<f64> {
        FunctionSpec::CanonicalProduct {
            rho: 0.25,
            c: 1.0,
            truncation_tol: 1e-9,
        }
    }

    #[test]
    fn quarter_cosh_at_zero_is_one() {
        let f = FunctionSpec::<f64>::QuarterCosh;
        let r = f.evaluate(Complex64::new(0.0, 0.0)).unwrap();
        assert!((r.value.re - 1.0).abs() < 1e-15);
        assert!(r.value.im.abs() < 1e-15);
    }

    #[test]
    fn fatou_baker_at_zero_is_two() {
        let f = FunctionSpec::<f64>::FatouBaker;
        let r = f.evaluate(Complex64::new(0.0, 0.0)).unwrap();
        assert!((r.value.re - 2.0).abs() < 1e-15);
    }

    #[test]
    fn quarter_cosh_first_zero() {
        // first zero at -4 pi^4 (1/2)^4 = -pi^4/4
        let f = FunctionSpec::<f64>::QuarterCosh;
        let z = Complex64::new(-std::f64::consts::PI.powi(4) / 4.0, 0.0);
        let r = f.evaluate(z).unwrap();
        // compare against a local modulus scale M(|z|) = f(|z|)
        let scale = f
            .evaluate(Complex64::new(z.re.abs(), 0.0))
            .unwrap()
            .value
            .norm();
        assert!(
            r.value.norm() < 1e-6 * scale,
            "|f| = {}, scale = {scale}",
            r.value.norm()
        );
    }

    #[test]
    fn quarter_cosh_zero_witnesses_one_to_five() {
        let f = FunctionSpec::<f64>::QuarterCosh;
        let zeros = f.zeros().unwrap();
        for n in 1..=5u64 {
            let r_n = zeros.radius(n);
            let expected = 4.0 * std::f64::consts::PI.powi(4) * (n as f64 - 0.5).powi(4);
            assert!((r_n - expected).abs() < 1e-6 * expected);
            let v = f.evaluate(Complex64::new(-r_n, 0.0)).unwrap();
            let scale = f.evaluate(Complex64::new(r_n, 0.0)).unwrap().value.norm();
            assert!(
                v.value.norm() < 1e-6 * scale,
                "n = {n}: |f| = {} vs scale {scale}",
                v.value.norm()
            );
            assert!(v.branch_cut_warning);
        }
    }

    #[test]
    fn quarter_cosh_series_matches_branch_form_at_crossover() {
        for &(re, im) in &[(90.0, 30.0), (-80.0, 50.0), (20.0, -99.0)] {
            let z = Complex64::new(re, im);
            let series = quarter_cosh_series(z);
            let root = Complex64::from_polar(z.norm().sqrt().sqrt(), z.arg() / 4.0);
            let (log_abs, arg) = quarter_cosh_log(root);
            let branch = Complex64::from_polar(log_abs.exp(), arg);
            assert!((series - branch).norm() < 1e-9 * series.norm(), "z = {z}");
        }
    }

    #[test]
    fn canonical_product_positive_on_positive_axis() {
        let f = canonical_quarter();
        for &r in &[0.1, 1.0, 17.0, 1234.5] {
            let v = f.evaluate(Complex64::new(r, 0.0)).unwrap();
            assert!(v.value.im.abs() < 1e-12 * v.value.re);
            assert!(v.value.re > 1.0);
        }
    }

    #[test]
    fn scaled_exp_log_ray_is_r_cos_theta() {
        let f = FunctionSpec::ScaledExp { lambda: 1.0 };
        for &r in &[0.5f64, 3.0, 1e4, 1e8] {
            assert!((f.evaluate_log_on_ray(r, 0.0).unwrap() - r).abs() < 1e-9 * r);
            assert!((f.evaluate_log_on_ray(r, std::f64::consts::PI).unwrap() + r).abs() < 1e-9 * r);
        }
    }

    #[test]
    fn canonical_quarter_matches_section_constant_at_1e8() {
        // log M(r)/r^{1/4} ~ pi/sin(pi/4) = pi sqrt(2) ~ 4.4429
        let f = canonical_quarter();
        let v = f.evaluate_log_on_ray(1e8, 0.0).unwrap();
        let ratio = v / 1e8f64.powf(0.25);
        let target = std::f64::consts::PI * std::f64::consts::SQRT_2;
        assert!(
            (ratio - target).abs() < 0.05 * target,
            "ratio {ratio} vs {target}"
        );
    }

    #[test]
    fn negative_ray_below_positive_ray() {
        let f = canonical_quarter();
        for &r in &[7.5, 300.0, 4.6e5] {
            let pos = f.evaluate_log_on_ray(r, 0.0).unwrap();
            let neg = f.evaluate_log_on_ray(r, std::f64::consts::PI).unwrap();
            assert!(neg < pos, "r = {r}");
        }
    }

    #[test]
    fn log_derivative_of_exp_is_r() {
        let f = FunctionSpec::ScaledExp { lambda: 1.0 };
        assert_eq!(f.log_derivative_on_ray(12.5).unwrap(), 12.5);
    }

    #[test]
    fn log_derivative_canonical_quarter_asymptote() {
        // r f'(r)/f(r) / r^{1/4} ~ (pi/4)/sin(pi/4)
        let f = canonical_quarter();
        let v = f.log_derivative_on_ray(1e8).unwrap();
        let ratio = v / 1e8f64.powf(0.25);
        let target = std::f64::consts::PI / 4.0 / (std::f64::consts::PI / 4.0).sin();
        assert!(
            (ratio - target).abs() < 0.05 * target,
            "ratio {ratio} vs {target}"
        );
    }

    #[test]
    fn log_derivative_positive_for_all_kinds() {
        let specs: Vec<FunctionSpec<f64>> = vec![
            FunctionSpec::FatouBaker,
            FunctionSpec::ScaledExp { lambda: 0.3 },
            FunctionSpec::QuarterCosh,
            canonical_quarter(),
            FunctionSpec::GeneralProduct {
                c: 2.0,
                zero_radii_rule: ZeroRadiiRule {
                    scale: 1.5,
                    exponent: 3.0,
                },
                truncation_tol: 1e-9,
            },
        ];
        for f in &specs {
            for &r in &[0.5, 10.0, 1e3] {
                assert!(
                    f.log_derivative_on_ray(r).unwrap() > 0.0,
                    "{f:?} at r = {r}"
                );
            }
        }
    }

    #[test]
    fn exp_orbit_bails_at_step_three() {
        let f = FunctionSpec::ScaledExp { lambda: 1.0 };
        let orbit = f.iterate_orbit(Complex64::new(1.0, 0.0), 10, 1e6).unwrap();
        assert_eq!(orbit.exit, OrbitExit::Bailout);
        assert_eq!(orbit.exit_step, Some(3));
        assert_eq!(orbit.points.len(), 4);
        assert!((orbit.points[2].re - 1f64.exp().exp()).abs() < 1e-9);
    }

    #[test]
    fn fatou_baker_gains_at_least_one_on_positive_axis() {
        let f = FunctionSpec::<f64>::FatouBaker;
        for &x in &[0.1, 1.0, 5.0, 40.0] {
            let v = f.evaluate(Complex64::new(x, 0.0)).unwrap();
            assert!(v.value.norm() > x + 1.0);
        }
    }

    #[test]
    fn small_lambda_orbit_converges_to_fixed_point() {
        // independent fixed-point oracle for p = 0.2 e^p on the real line
        let mut p = 0.0f64;
        for _ in 0..200 {
            p = 0.2 * p.exp();
        }
        assert!((p - 0.2592).abs() < 1e-3, "oracle fixed point {p}");

        let f = FunctionSpec::ScaledExp { lambda: 0.2 };
        let orbit = f.iterate_orbit(Complex64::new(0.0, 0.0), 200, 1e6).unwrap();
        assert_eq!(orbit.exit, OrbitExit::MaxSteps);
        let last = orbit.points.last().unwrap();
        assert!((last.re - p).abs() < 1e-9);
        assert!(last.im.abs() < 1e-12);
    }

    #[test]
    fn orbit_overflow_recorded() {
        let f = FunctionSpec::ScaledExp { lambda: 1.0 };
        // from 1000 the next point is e^1000, past saturation
        let orbit = f
            .iterate_orbit(Complex64::new(1000.0, 0.0), 10, 1e305)
            .unwrap();
        assert_eq!(orbit.exit, OrbitExit::Overflow);
        assert_eq!(orbit.exit_step, Some(1));
    }

    #[test]
    fn product_ray_and_direct_evaluation_agree() {
        let f = canonical_quarter();
        for &r in &[0.7, 5.0, 130.0, 9.9e4] {
            let direct = f.evaluate(Complex64::new(r, 0.0)).unwrap();
            let ray = f.evaluate_log_on_ray(r, 0.0).unwrap();
            assert!(
                (direct.log_abs - ray).abs() <= direct.trunc_bound + 1e-10 * ray.abs().max(1.0),
                "r = {r}"
            );
        }
    }

    #[test]
    fn evaluate_rejects_arguments_past_the_term_budget() {
        let f = canonical_quarter();
        let err = f.evaluate(Complex64::new(1e40, 0.0)).unwrap_err();
        assert!(matches!(err, CatalogError::NonConvergentProduct { .. }));
        // the log-domain ray path handles the same radius via the integral
        // regime
        assert!(f.evaluate_log_on_ray(1e40, 0.0).is_ok());
    }

    #[test]
    fn near_zero_guard_fires() {
        let f = canonical_quarter();
        // r_2 = 16 exactly
        let err = f
            .evaluate_log_on_ray(16.0, std::f64::consts::PI)
            .unwrap_err();
        assert!(matches!(err, CatalogError::NearZero { index: 2, .. }));
        // slightly off the zero is fine
        assert!(f
            .evaluate_log_on_ray(16.0 * (1.0 + 1e-6), std::f64::consts::PI)
            .is_ok());
    }

    #[test]
    fn validation_catches_bad_specs() {
        assert!(FunctionSpec::CanonicalProduct {
            rho: 0.5,
            c: 1.0,
            truncation_tol: 1e-9
        }
        .validate()
        .is_err());
        assert!(FunctionSpec::CanonicalProduct {
            rho: 0.25,
            c: -1.0,
            truncation_tol: 1e-9
        }
        .validate()
        .is_err());
        assert!(FunctionSpec::ScaledExp { lambda: 0.0 }.validate().is_err());
        assert!(FunctionSpec::GeneralProduct {
            c: 1.0,
            zero_radii_rule: ZeroRadiiRule {
                scale: 1.0,
                exponent: 2.0
            },
            truncation_tol: 1e-9
        }
        .validate()
        .is_err());
        assert!(canonical_quarter().validate().is_ok());
    }

    #[test]
    fn spec_json_round_trip_uses_spec_field_names() {
        let f = canonical_quarter();
        let json = serde_json::to_string(&f).unwrap();
        assert!(json.contains("\"kind\":\"CanonicalProduct\""));
        assert!(json.contains("\"rho\""));
        assert!(json.contains("\"truncation_tol\""));
        let back: FunctionSpec<f64> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, f);

        let g: FunctionSpec<f64> =
            serde_json::from_str(r#"{"kind":"ScaledExp","lambda":0.2}"#).unwrap();
        assert_eq!(g, FunctionSpec::ScaledExp { lambda: 0.2 });
    }

    #[test]
    fn generic_scalar_smoke_f32() {
        let f = FunctionSpec::ScaledExp { lambda: 1.0f32 };
        let v = f.evaluate(Complex::new(2.0f32, 0.0)).unwrap();
        assert!((v.value.re - 2.0f32.exp()).abs() < 1e-3);
    }
}
