//! Log-domain evaluation of genus-zero canonical products c·prod(1 + z/r_n).
//!
//! All zero sequences in the catalog have the power-law form
//! r_n = alpha (n - beta)^q with q > 1, which keeps both the truncation
//! analysis and the large-radius machinery uniform.
//!
//! Two regimes:
//!
//! * exact: term-by-term summation of log-factors with a rigorous tail
//!   bound, used whenever the required term count fits the budget;
//! * integral: for radii so large that the zero count near r exceeds any
//!   term budget, the sum over n is evaluated through the Euler-Maclaurin
//!   formula, with the integral term reduced by substitution to a weighted
//!   one-dimensional integral of the factor kernel. This is numerical
//!   evaluation of the same series (not a fitted growth model) and stays
//!   accurate while the *output* log-modulus fits the scalar type.

use crate::scalar::{log_abs_one_plus_exp, Real};

/// Zero radii r_n = alpha (n - beta)^q, n = 1, 2, ...
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerZeros<T> {
    pub alpha: T,
    pub beta: T,
    pub q: T,
}

/// Which evaluation regime produced a value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SumRegime {
    Exact,
    Integral,
}

/// A log-domain sum together with an error bound (exact regime: rigorous
/// truncation bound; integral regime: error estimate).
#[derive(Clone, Copy, Debug)]
pub struct LogSum<T> {
    pub value: T,
    pub err: T,
    pub regime: SumRegime,
}

/// Raised when the exact regime cannot meet the tolerance in budget and the
/// caller did not allow the integral regime.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OverBudget {
    pub required_terms: u64,
}

pub const DEFAULT_MAX_TERMS: u64 = 10_000_000;

/// Head length always summed exactly in the integral regime.
const INTEGRAL_HEAD: u64 = 1024;

impl<T: Real> PowerZeros<T> {
    /// Natural log of r_n; `n` is passed as a real so that indices beyond
    /// 2^53 (which occur as *analytic* quantities at huge radii) stay usable.
    pub fn log_radius(&self, n: T) -> T {
        self.alpha.ln() + self.q * (n - self.beta).ln()
    }

    pub fn radius(&self, n: u64) -> T {
        self.log_radius(T::cst(n as f64)).exp()
    }

    /// Number of zeros with |z| <= r, from log r. Clamped at zero.
    pub fn count_below_log(&self, log_r: T) -> T {
        let x = ((log_r - self.alpha.ln()) / self.q).exp() + self.beta;
        if x < T::one() {
            T::zero()
        } else {
            x.floor()
        }
    }

    /// Index of the zero radius closest to log r (1-based), with the
    /// relative log-distance |log r - log r_n|. Only meaningful while the
    /// index is exactly representable; returns None beyond 2^52.
    pub fn nearest_zero(&self, log_r: T) -> Option<(u64, T)> {
        let x = ((log_r - self.alpha.ln()) / self.q).exp() + self.beta;
        if x > T::cst(4.5e15) {
            return None;
        }
        let n = x.round().max(T::one());
        let idx = n.to_f64().unwrap() as u64;
        let dist = (log_r - self.log_radius(n)).abs();
        Some((idx.max(1), dist))
    }

    /// Smallest term count N such that the truncated tail of
    /// sum log|1 + z/r_n| is provably below `tol` for |z| = exp(log_r).
    ///
    /// Uses |log(1 + w)| <= |w| / (1 - |w|) together with
    /// sum_{n>N} 1/r_n <= (N - beta)^{1-q} / (alpha (q - 1)), and keeps the
    /// head long enough that r_{N+1} >= 2|z| (so the prefactor is <= 2).
    pub(crate) fn terms_for_tol(&self, log_r: T, tol: T) -> T {
        let one = T::one();
        let q1 = self.q - one;
        // r_{N+1} >= 2 r  =>  N + 1 >= beta + exp((ln 2 + log_r - ln alpha)/q)
        let n_geom = self.beta - one
            + ((T::cst(std::f64::consts::LN_2) + log_r - self.alpha.ln()) / self.q).exp();
        // 2 r (N - beta)^{1-q} / (alpha (q-1)) <= tol
        let ln_n =
            (T::cst(std::f64::consts::LN_2) + log_r - self.alpha.ln() - q1.ln() - tol.ln()) / q1;
        let n_tol = self.beta + ln_n.exp();
        n_geom.max(n_tol).max(T::cst(8.0)).ceil()
    }

    /// Rigorous tail bound for truncation after N terms (valid when
    /// r_{N+1} >= 2 exp(log_r)).
    pub(crate) fn tail_bound(&self, log_r: T, n_terms: T) -> T {
        let q1 = self.q - T::one();
        (T::cst(std::f64::consts::LN_2) + log_r - self.alpha.ln() - q1.ln()
            + (T::one() - self.q) * (n_terms - self.beta).ln())
        .exp()
    }

    /// sum_n log|1 + e^{i theta} r / r_n| for r = exp(log_r).
    ///
    /// `allow_integral` enables the Euler-Maclaurin fallback when the exact
    /// regime exceeds `max_terms`.
    pub fn log_abs_sum(
        &self,
        log_r: T,
        theta: T,
        tol: T,
        max_terms: u64,
        allow_integral: bool,
    ) -> Result<LogSum<T>, OverBudget> {
        let needed = self.terms_for_tol(log_r, tol);
        if needed <= T::cst(max_terms as f64) {
            let n = needed.to_f64().unwrap() as u64;
            let shifted = log_r - self.alpha.ln();
            let mut sum = T::zero();
            for k in 1..=n {
                let t = shifted - self.q * (T::cst(k as f64) - self.beta).ln();
                sum = sum + log_abs_one_plus_exp(t, theta);
            }
            Ok(LogSum {
                value: sum,
                err: self.tail_bound(log_r, needed),
                regime: SumRegime::Exact,
            })
        } else if allow_integral {
            Ok(self.log_abs_sum_integral(log_r, theta))
        } else {
            Err(OverBudget {
                required_terms: needed.to_f64().map(|v| v as u64).unwrap_or(u64::MAX),
            })
        }
    }

    /// r f'(r)/f(r) = sum_n r/(r + r_n) = sum_n sigmoid(log_r - log r_n),
    /// exact regime only.
    pub fn log_derivative_sum(
        &self,
        log_r: T,
        tol: T,
        max_terms: u64,
    ) -> Result<LogSum<T>, OverBudget> {
        let needed = self.terms_for_tol(log_r, tol);
        if needed > T::cst(max_terms as f64) {
            return Err(OverBudget {
                required_terms: needed.to_f64().map(|v| v as u64).unwrap_or(u64::MAX),
            });
        }
        let n = needed.to_f64().unwrap() as u64;
        let shifted = log_r - self.alpha.ln();
        let mut sum = T::zero();
        for k in 1..=n {
            let t = shifted - self.q * (T::cst(k as f64) - self.beta).ln();
            sum = sum + sigmoid(t);
        }
        Ok(LogSum {
            value: sum,
            err: self.tail_bound(log_r, needed),
            regime: SumRegime::Exact,
        })
    }

    /// Euler-Maclaurin evaluation of sum_{n>=1} g(log_r - log r_n) with
    /// g(u) = log|1 + e^{u + i theta}|.
    ///
    /// Head terms up to INTEGRAL_HEAD are summed exactly; the remainder is
    ///   sum_{n>=a} h(n) = int_a^inf h + h(a)/2 - h'(a)/12 + ...
    /// and the integral becomes, with u = log_r - q ln(x - beta),
    ///   int_a^inf h(x) dx = (e^P / q) int_{-inf}^{u_a} g(u) e^{-u/q} du,
    /// where P = (log_r - ln alpha)/q. e^P is the zero-count scale of the
    /// answer itself, so it is representable whenever the answer is.
    fn log_abs_sum_integral(&self, log_r: T, theta: T) -> LogSum<T> {
        let one = T::one();
        let head_n = INTEGRAL_HEAD;
        let a = T::cst(head_n as f64) + one;

        let mut head = T::zero();
        for k in 1..=head_n {
            let t = log_r - self.log_radius(T::cst(k as f64));
            head = head + log_abs_one_plus_exp(t, theta);
        }

        let p = (log_r - self.alpha.ln()) / self.q;
        let u_a = log_r - self.log_radius(a);
        let (w, quad_err) = factor_weighted_integral(theta, self.q, u_a);
        let integral = (p.exp() / self.q) * w;

        // Euler-Maclaurin boundary terms at n = a.
        let g_a = log_abs_one_plus_exp(u_a, theta);
        let slope = factor_kernel_derivative(u_a, theta) * self.q / (a - self.beta);
        let value = head + integral + g_a * T::cst(0.5) + slope / T::cst(12.0);

        // Error estimate: quadrature tolerance (scaled) plus the magnitude
        // of the next Euler-Maclaurin correction.
        let em_next = (slope / (a - self.beta) * self.q).abs() / T::cst(720.0);
        LogSum {
            value,
            err: (p.exp() / self.q) * quad_err + em_next,
            regime: SumRegime::Integral,
        }
    }
}

/// 1/(1 + e^{-t}), stable.
pub fn sigmoid<T: Real>(t: T) -> T {
    if t >= T::zero() {
        ((-t).exp() + T::one()).recip()
    } else {
        let e = t.exp();
        e / (e + T::one())
    }
}

/// d/du log|1 + e^{u + i theta}|, stable for any u.
fn factor_kernel_derivative<T: Real>(u: T, theta: T) -> T {
    let one = T::one();
    let two = T::cst(2.0);
    let c = theta.cos();
    if u > T::zero() {
        let e = (-u).exp();
        (c * e + one) / (e * e + two * c * e + one)
    } else {
        let e = u.exp();
        e * (c + e) / (one + e * (two * c + e))
    }
}

/// int_{-inf}^{u_a} log|1 + e^{u + i theta}| e^{-u/q} du, with an error
/// estimate. The integrand decays like e^{u(1 - 1/q)} to the left and like
/// u e^{-u/q} to the right; outside a central window both tails are handled
/// analytically. At theta = pi the integrand has an integrable log
/// singularity at u = 0, which gets a small analytic window.
fn factor_weighted_integral<T: Real>(theta: T, q: T, u_a: T) -> (T, T) {
    let one = T::one();
    let iq = q.recip();

    // Left cutoff: e^{u (1 - 1/q)} below ~1e-26 relative.
    let u_lo = -T::cst(60.0) / (one - iq);
    // Right cutoff where the analytic asymptote g(u) ~ u + cos(theta) e^{-u}
    // is accurate to ~e^{-40}.
    let u_hi_window = T::cst(40.0);
    let u_hi = u_hi_window.min(u_a);

    let g = |u: T| log_abs_one_plus_exp(u, theta) * (-u * iq).exp();

    let singular = theta.cos() < T::cst(-1.0 + 1e-12);
    let quad_tol = T::cst(1e-11);
    let mut total = T::zero();
    let mut err = T::zero();

    if singular && u_lo < T::zero() && u_hi > T::zero() {
        let delta = T::cst(1e-3);
        // int_{-d}^{d} (ln|u| + u/2 + ...) e^{-u/q} du expanded to O(d^3).
        let d3 = delta * delta * delta;
        let sing =
            T::cst(2.0) * delta * (delta.ln() - one) - d3 / (T::cst(3.0) * q) + d3 / T::cst(36.0);
        total = total + sing;
        err = err + d3 * (delta.ln().abs() + one);
        let (v1, e1) = adaptive_simpson(&g, u_lo, -delta, quad_tol);
        let (v2, e2) = adaptive_simpson(&g, delta, u_hi, quad_tol);
        total = total + v1 + v2;
        err = err + e1 + e2;
    } else {
        let (v, e) = adaptive_simpson(&g, u_lo, u_hi, quad_tol);
        total = total + v;
        err = err + e;
    }

    // Analytic remainder over [u_hi, u_a] where g(u) ~= u + cos(theta) e^{-u}:
    //   int u e^{-u/q} du = q e^{-u/q} (u + q),
    //   int e^{-u(1+1/q)} du = e^{-u(1+1/q)} / (1 + 1/q).
    if u_a > u_hi {
        let linear = q * ((-u_hi * iq).exp() * (u_hi + q) - (-u_a * iq).exp() * (u_a + q));
        let ip = one + iq;
        let corr = theta.cos() * ((-u_hi * ip).exp() - (-u_a * ip).exp()) / ip;
        total = total + linear + corr;
        err = err + (-u_hi).exp() * T::cst(2.0);
    }

    (total, err)
}

/// Adaptive Simpson quadrature returning (value, error estimate).
///
/// The per-leaf tolerance halves with depth but is floored at the rounding
/// noise of the integrand scale, otherwise log-singular integrands force a
/// full binary tree once the requested tolerance drops below what f64
/// cancellation can resolve.
fn adaptive_simpson<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T, tol: T) -> (T, T) {
    fn simpson<T: Real, F: Fn(T) -> T>(f: &F, a: T, fa: T, b: T, fb: T) -> (T, T, T) {
        let m = (a + b) * T::cst(0.5);
        let fm = f(m);
        let s = (b - a) / T::cst(6.0) * (fa + T::cst(4.0) * fm + fb);
        (m, fm, s)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse<T: Real, F: Fn(T) -> T>(
        f: &F,
        a: T,
        fa: T,
        b: T,
        fb: T,
        whole: T,
        m: T,
        fm: T,
        tol: T,
        floor: T,
        depth: u32,
    ) -> (T, T) {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= T::cst(15.0) * tol {
            (
                left + right + delta / T::cst(15.0),
                delta.abs() / T::cst(15.0),
            )
        } else {
            let half_tol = (tol * T::cst(0.5)).max(floor);
            let (lv, le) = recurse(f, a, fa, m, fm, left, lm, flm, half_tol, floor, depth - 1);
            let (rv, re) = recurse(f, m, fm, b, fb, right, rm, frm, half_tol, floor, depth - 1);
            (lv + rv, le + re)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    let floor = (whole.abs() + (b - a).abs()) * T::epsilon() * T::cst(8.0);
    recurse(f, a, fa, b, fb, whole, m, fm, tol.max(floor), floor, 28)
}
