//! Young functions: construction, evaluation, inversion and the two
//! structural constants used throughout the crate (the nontriviality
//! constant `C_beta` and the doubling constant `K`).
//!
//! Every family is evaluated both directly and in logarithmic form
//! (`ln phi(e^u)` as a function of `u`). The log form never under- or
//! overflows on the scan ranges used by the analysis routines, so tails near
//! `s = 0` and exponential growth at large `t` are handled without special
//! casing.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize, Serializer};

use crate::error::{invalid, Error, Result};
use crate::quadrature;

/// Names accepted by [`make_young`], in catalog order.
pub const FAMILIES: [&str; 5] = ["power", "power_log", "power_max", "power_exp", "exp_minus_taylor"];

/// Built-in families of Young functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum YoungFamily {
    /// `t^p`
    Power { p: f64 },
    /// `t^p ln(1+t)^alpha`
    PowerLog { p: f64, alpha: f64 },
    /// `max(t^p, t^(p+delta))`
    PowerMax { p: f64, delta: f64 },
    /// `t^p exp(c t^alpha)`
    PowerExp { p: f64, c: f64, alpha: f64 },
    /// `exp(c t^alpha) - sum_{j<=m} (c t^alpha)^j / j!` with `m = floor(n/alpha)`
    ExpMinusTaylor { c: f64, alpha: f64, m: u32 },
}

impl YoungFamily {
    pub fn name(&self) -> &'static str {
        match self {
            YoungFamily::Power { .. } => "power",
            YoungFamily::PowerLog { .. } => "power_log",
            YoungFamily::PowerMax { .. } => "power_max",
            YoungFamily::PowerExp { .. } => "power_exp",
            YoungFamily::ExpMinusTaylor { .. } => "exp_minus_taylor",
        }
    }

    #[inline]
    fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match *self {
            YoungFamily::Power { p } => powr(t, p),
            YoungFamily::PowerLog { p, alpha } => powr(t, p) * powr(t.ln_1p(), alpha),
            YoungFamily::PowerMax { p, delta } => {
                if t <= 1.0 {
                    powr(t, p)
                } else {
                    powr(t, p + delta)
                }
            }
            YoungFamily::PowerExp { p, c, alpha } => powr(t, p) * (c * powr(t, alpha)).exp(),
            YoungFamily::ExpMinusTaylor { c, alpha, m } => exp_tail(c * powr(t, alpha), m),
        }
    }

    /// `ln phi(e^u)`.
    fn ln_eval_log(&self, u: f64) -> f64 {
        match *self {
            YoungFamily::Power { p } => p * u,
            YoungFamily::PowerLog { p, alpha } => p * u + alpha * ln_ln1p_exp(u),
            YoungFamily::PowerMax { p, delta } => {
                if u <= 0.0 {
                    p * u
                } else {
                    (p + delta) * u
                }
            }
            YoungFamily::PowerExp { p, c, alpha } => p * u + c * (alpha * u).exp(),
            YoungFamily::ExpMinusTaylor { c, alpha, m } => {
                let ln_x = c.ln() + alpha * u;
                ln_exp_tail(ln_x, m)
            }
        }
    }
}

#[inline]
fn powr(t: f64, p: f64) -> f64 {
    if p == 1.0 {
        t
    } else if p == 2.0 {
        t * t
    } else if p.fract() == 0.0 && p.abs() < 64.0 {
        t.powi(p as i32)
    } else {
        t.powf(p)
    }
}

/// `ln(ln(1 + e^u))` without cancellation at either end.
fn ln_ln1p_exp(u: f64) -> f64 {
    if u < -30.0 {
        // ln(1+x) = x - x^2/2 + ..., so ln ln(1+x) = u + ln(1 - x/2 + x^2/3)
        let x = u.exp();
        u + (-0.5 * x).ln_1p()
    } else if u > 30.0 {
        (u + (-u).exp().ln_1p()).ln()
    } else {
        u.exp().ln_1p().ln()
    }
}

/// Series `sum_{k>=0} x^k (m+1)! / (m+1+k)!`, i.e. the exponential tail
/// divided by its leading term.
fn tail_series(x: f64, m: u32) -> f64 {
    let mut term = 1.0;
    let mut acc = 1.0;
    let mut k = 0u32;
    loop {
        k += 1;
        term *= x / f64::from(m + 1 + k);
        acc += term;
        if term < 1e-17 * acc || k > 500 {
            return acc;
        }
    }
}

fn ln_factorial(m: u32) -> f64 {
    (1..=m).map(|j| f64::from(j).ln()).sum()
}

/// `e^x - sum_{j<=m} x^j/j!`.
fn exp_tail(x: f64, m: u32) -> f64 {
    if x <= 30.0 {
        let lead = (f64::from(m + 1) * x.ln() - ln_factorial(m + 1)).exp();
        lead * tail_series(x, m)
    } else {
        let poly: f64 = (0..=m).map(|j| (f64::from(j) * x.ln() - ln_factorial(j)).exp()).sum();
        x.exp() - poly
    }
}

fn ln_exp_tail(ln_x: f64, m: u32) -> f64 {
    let x = ln_x.exp();
    if x <= 30.0 {
        f64::from(m + 1) * ln_x - ln_factorial(m + 1) + tail_series(x, m).ln()
    } else {
        let poly: f64 = (0..=m).map(|j| (f64::from(j) * ln_x - ln_factorial(j) - x).exp()).sum();
        x + (-poly).ln_1p()
    }
}

/// A Young function: a built-in family optionally raised to a power `q >= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct YoungFunction {
    family: YoungFamily,
    exponent: f64,
}

impl YoungFunction {
    pub fn family(&self) -> YoungFamily {
        self.family
    }

    /// Outer exponent applied by [`power_compose`]; 1 for a plain family.
    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn name(&self) -> String {
        if self.exponent == 1.0 {
            self.family.name().to_string()
        } else {
            format!("{}^{}", self.family.name(), self.exponent)
        }
    }

    /// Parameters as `(name, value)` pairs, for reports.
    pub fn params(&self) -> BTreeMap<String, f64> {
        let mut out = BTreeMap::new();
        let mut put = |k: &str, v: f64| {
            out.insert(k.to_string(), v);
        };
        match self.family {
            YoungFamily::Power { p } => put("p", p),
            YoungFamily::PowerLog { p, alpha } => {
                put("p", p);
                put("alpha", alpha);
            }
            YoungFamily::PowerMax { p, delta } => {
                put("p", p);
                put("delta", delta);
            }
            YoungFamily::PowerExp { p, c, alpha } => {
                put("p", p);
                put("c", c);
                put("alpha", alpha);
            }
            YoungFamily::ExpMinusTaylor { c, alpha, m } => {
                put("c", c);
                put("alpha", alpha);
                put("m", f64::from(m));
            }
        }
        if self.exponent != 1.0 {
            put("q", self.exponent);
        }
        out
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        let v = self.family.eval(t);
        if self.exponent == 1.0 {
            v
        } else {
            powr(v, self.exponent)
        }
    }

    /// `ln phi(e^u)`; finite for every finite `u`.
    pub fn ln_eval_log(&self, u: f64) -> f64 {
        self.exponent * self.family.ln_eval_log(u)
    }

    /// `y^(1/p)` for the power family (and its compositions).
    pub fn closed_inverse(&self, y: f64) -> Option<f64> {
        match self.family {
            YoungFamily::Power { p } => Some(y.max(0.0).powf(1.0 / (p * self.exponent))),
            _ => None,
        }
    }

    /// Exponent `r` such that `phi(t) = t^r` identically, if any.
    pub fn pure_power(&self) -> Option<f64> {
        match self.family {
            YoungFamily::Power { p } => Some(p * self.exponent),
            _ => None,
        }
    }
}

impl fmt::Display for YoungFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.name())?;
        let mut first = true;
        for (k, v) in self.params() {
            if !first {
                write!(f, ", ")?;
            }
            first = false;
            write!(f, "{k}={v}")?;
        }
        write!(f, ")")
    }
}

/// Config-file form of a Young function: `family` plus numeric parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YoungSpec {
    pub family: String,
    #[serde(flatten)]
    pub params: BTreeMap<String, f64>,
}

impl YoungSpec {
    pub fn build(&self) -> Result<YoungFunction> {
        make_young(&self.family, &self.params)
    }
}

fn param(params: &BTreeMap<String, f64>, key: &str, default: Option<f64>) -> Result<f64> {
    match params.get(key) {
        Some(&v) if v.is_finite() => Ok(v),
        Some(&v) => Err(invalid(key, v, "must be finite")),
        None => default.ok_or_else(|| Error::MissingParameter(key.to_string())),
    }
}

/// Build a Young function from a family name and its parameters.
///
/// Recognized parameters: `p >= 1` (power families), `alpha >= 1` (default 1),
/// `delta > 0` (default 1), `c > 0` (default 1) and, for `exp_minus_taylor`,
/// the dimension `n` (default 2) that fixes the number of subtracted terms.
pub fn make_young(name: &str, params: &BTreeMap<String, f64>) -> Result<YoungFunction> {
    let p = || -> Result<f64> {
        let p = param(params, "p", None)?;
        if p < 1.0 {
            return Err(invalid("p", p, "must be >= 1"));
        }
        Ok(p)
    };
    let alpha = || -> Result<f64> {
        let a = param(params, "alpha", Some(1.0))?;
        if a < 1.0 {
            return Err(invalid("alpha", a, "must be >= 1"));
        }
        Ok(a)
    };
    let c = || -> Result<f64> {
        let c = param(params, "c", Some(1.0))?;
        if c <= 0.0 {
            return Err(invalid("c", c, "must be > 0"));
        }
        Ok(c)
    };
    let family = match name {
        "power" => YoungFamily::Power { p: p()? },
        "power_log" => YoungFamily::PowerLog {
            p: p()?,
            alpha: alpha()?,
        },
        "power_max" => {
            let delta = param(params, "delta", Some(1.0))?;
            if delta <= 0.0 {
                return Err(invalid("delta", delta, "must be > 0"));
            }
            YoungFamily::PowerMax { p: p()?, delta }
        }
        "power_exp" => YoungFamily::PowerExp {
            p: p()?,
            c: c()?,
            alpha: alpha()?,
        },
        "exp_minus_taylor" => {
            let alpha = alpha()?;
            let n = param(params, "n", Some(2.0))?;
            if n < 1.0 || n.fract() != 0.0 {
                return Err(invalid("n", n, "must be a positive integer"));
            }
            YoungFamily::ExpMinusTaylor {
                c: c()?,
                alpha,
                m: (n / alpha).floor() as u32,
            }
        }
        other => {
            return Err(Error::UnknownName {
                kind: "young family",
                name: other.to_string(),
            })
        }
    };
    Ok(YoungFunction {
        family,
        exponent: 1.0,
    })
}

/// Shorthand for `t^p`.
pub fn power(p: f64) -> YoungFunction {
    YoungFunction {
        family: YoungFamily::Power { p },
        exponent: 1.0,
    }
}

/// Shorthand for `t^p ln(1+t)^alpha`.
pub fn power_log(p: f64, alpha: f64) -> YoungFunction {
    YoungFunction {
        family: YoungFamily::PowerLog { p, alpha },
        exponent: 1.0,
    }
}

/// `t -> phi(t)^q`.
pub fn power_compose(phi: &YoungFunction, q: f64) -> Result<YoungFunction> {
    if !(q >= 1.0) || !q.is_finite() {
        return Err(invalid("q", q, "must be >= 1"));
    }
    Ok(YoungFunction {
        family: phi.family,
        exponent: phi.exponent * q,
    })
}

/// Generalized inverse `phi^{-1}(y)` by monotone bracketing and bisection.
///
/// The upper bracket is doubled (or the lower one halved) from `t = 1` until
/// it straddles `y`; bisection then runs to machine precision.
pub fn inverse(phi: &YoungFunction, y: f64) -> f64 {
    if y <= 0.0 || y.is_nan() {
        return 0.0;
    }
    if y.is_infinite() {
        return f64::INFINITY;
    }
    let (mut lo, mut hi) = (0.5, 1.0);
    if phi.eval(hi) < y {
        while phi.eval(hi) < y {
            lo = hi;
            hi *= 2.0;
        }
    } else {
        lo = 1.0;
        while phi.eval(lo) >= y && lo > f64::MIN_POSITIVE {
            hi = lo;
            lo *= 0.5;
        }
        if phi.eval(lo) >= y {
            return 0.0;
        }
    }
    // invariant: phi(lo) < y <= phi(hi)
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if phi.eval(mid) < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if (phi.eval(lo) - y).abs() < (phi.eval(hi) - y).abs() {
        lo
    } else {
        hi
    }
}

/// A scalar that may be flagged infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Estimate {
    Finite(f64),
    Infinite,
}

impl Estimate {
    pub fn finite(self) -> Option<f64> {
        match self {
            Estimate::Finite(v) => Some(v),
            Estimate::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Estimate::Infinite)
    }

    pub fn as_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }
}

impl fmt::Display for Estimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Estimate::Finite(v) => write!(f, "{v}"),
            Estimate::Infinite => write!(f, "inf"),
        }
    }
}

impl Serialize for Estimate {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Estimate::Finite(v) => s.serialize_f64(*v),
            Estimate::Infinite => s.serialize_str("inf"),
        }
    }
}

/// Log-spaced scan `[t_min, t_max]` with `points` samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanSpec {
    pub t_min: f64,
    pub t_max: f64,
    pub points: usize,
}

impl ScanSpec {
    /// Default scan for `C_beta`: `[1e-4, 1e4]`, 241 points.
    pub fn c_beta() -> Self {
        Self {
            t_min: 1e-4,
            t_max: 1e4,
            points: 241,
        }
    }

    /// Default scan for the doubling constant: `[1e-6, 1e6]`, 481 points.
    pub fn doubling() -> Self {
        Self {
            t_min: 1e-6,
            t_max: 1e6,
            points: 481,
        }
    }

    /// Same range with `factor` times as many intervals.
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            points: (self.points - 1) * factor + 1,
            ..*self
        }
    }

    /// Log-coordinates `ln t_k`.
    pub fn log_points(&self) -> Vec<f64> {
        let (a, b) = (self.t_min.ln(), self.t_max.ln());
        let n = self.points.max(2);
        (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
    }
}

const TAIL_PANEL: f64 = 2.0;
const LOG_FLOOR: f64 = -700.0;

/// `C_beta = sup_t (t^beta / phi(t)) int_0^t phi(s) s^{-beta} ds/s` over a scan.
///
/// The inner integral is taken in `u = ln s`. The tail below `t_min` is summed
/// panel by panel; panels that stop shrinking signal a divergent integral and
/// yield [`Estimate::Infinite`]. A tail that shrinks but has not settled by
/// `s = e^-700` is reported as a quadrature failure instead. Returns the
/// estimate together with the per-point profile `(t, ratio)`.
pub fn c_beta_profile(phi: &YoungFunction, beta: f64, scan: &ScanSpec) -> Result<(Estimate, Vec<(f64, f64)>)> {
    if !(beta > 0.0) {
        return Err(invalid("beta", beta, "must be > 0"));
    }
    let f = |u: f64| phi.ln_eval_log(u) - beta * u;
    let us = scan.log_points();
    let u0 = us[0];
    let f0 = f(u0);

    // tail: int_{-inf}^{u0} exp(f(u) - f(u0)) du
    let mut tail = 0.0;
    let mut prev_panel = f64::NAN;
    let mut stalled = 0;
    let mut k = 0usize;
    loop {
        let hi = u0 - TAIL_PANEL * k as f64;
        let lo = hi - TAIL_PANEL;
        if lo < LOG_FLOOR {
            return Err(Error::QuadratureNonConvergence(format!(
                "C_beta tail for {} not settled at s = e^{LOG_FLOOR}",
                phi.name()
            )));
        }
        let r = quadrature::integrate(|u| (f(u) - f0).exp(), lo, hi, 1e-12, 1e-300);
        if !r.converged {
            return Err(Error::QuadratureNonConvergence(format!("C_beta tail panel [{lo}, {hi}]")));
        }
        let panel = r.value;
        tail += panel;
        if k > 0 {
            if panel >= prev_panel * (1.0 - 1e-9) {
                stalled += 1;
                if stalled >= 3 {
                    return Ok((Estimate::Infinite, Vec::new()));
                }
            } else {
                stalled = 0;
            }
        }
        if panel <= 1e-15 * tail && k > 0 && panel < prev_panel {
            break;
        }
        if !tail.is_finite() {
            return Ok((Estimate::Infinite, Vec::new()));
        }
        prev_panel = panel;
        k += 1;
    }

    let mut profile = Vec::with_capacity(us.len());
    let mut ratio = tail;
    profile.push((u0.exp(), ratio));
    let mut sup = ratio;
    for w in us.windows(2) {
        let (ua, ub) = (w[0], w[1]);
        let fb = f(ub);
        let seg = quadrature::integrate(|u| (f(u) - fb).exp(), ua, ub, 1e-12, 1e-300);
        if !seg.converged {
            return Err(Error::QuadratureNonConvergence(format!("C_beta segment [{ua}, {ub}]")));
        }
        ratio = ratio * (f(ua) - fb).exp() + seg.value;
        profile.push((ub.exp(), ratio));
        sup = sup.max(ratio);
    }
    if !sup.is_finite() {
        return Ok((Estimate::Infinite, profile));
    }
    Ok((Estimate::Finite(sup), profile))
}

/// Scan estimate of `C_beta`; see [`c_beta_profile`].
pub fn estimate_c_beta(phi: &YoungFunction, beta: f64, scan: &ScanSpec) -> Result<Estimate> {
    c_beta_profile(phi, beta, scan).map(|(e, _)| e)
}

/// Ratio above which the doubling constant is declared infinite.
pub const DOUBLING_CAP: f64 = 1e6;

/// `K = sup_t phi(2t)/phi(t)` over a scan.
///
/// Flags [`Estimate::Infinite`] when the ratio exceeds [`DOUBLING_CAP`] or is
/// still strictly increasing over the last 5% of the scan. Both are
/// heuristics: a finite scan cannot certify the global supremum.
pub fn estimate_doubling(phi: &YoungFunction, scan: &ScanSpec) -> Estimate {
    let ratios: Vec<f64> = scan
        .log_points()
        .into_iter()
        .map(|u| (phi.ln_eval_log(u + std::f64::consts::LN_2) - phi.ln_eval_log(u)).exp())
        .collect();
    let sup = ratios.iter().copied().fold(0.0, f64::max);
    if !(sup <= DOUBLING_CAP) {
        return Estimate::Infinite;
    }
    let edge = (ratios.len() / 20).max(3);
    let tail = &ratios[ratios.len() - edge..];
    let growing = tail.windows(2).all(|w| w[1] > w[0] * (1.0 + 1e-9));
    if growing {
        return Estimate::Infinite;
    }
    Estimate::Finite(sup)
}

/// Constants of one Young function at one `beta`, with the scans that produced them.
#[derive(Debug, Clone, Serialize)]
pub struct YoungAnalysis {
    pub name: String,
    pub params: BTreeMap<String, f64>,
    pub beta: f64,
    pub c_beta: Estimate,
    pub k_doubling: Estimate,
    pub c_beta_scan: ScanSpec,
    pub doubling_scan: ScanSpec,
}

pub fn analyze(phi: &YoungFunction, beta: f64) -> Result<YoungAnalysis> {
    let c_beta_scan = ScanSpec::c_beta();
    let doubling_scan = ScanSpec::doubling();
    Ok(YoungAnalysis {
        name: phi.name(),
        params: phi.params(),
        beta,
        c_beta: estimate_c_beta(phi, beta, &c_beta_scan)?,
        k_doubling: estimate_doubling(phi, &doubling_scan),
        c_beta_scan,
        doubling_scan,
    })
}

/// Sampled midpoint-convexity check on log-spaced pairs in `[1e-6, 1e6]`.
///
/// Returns the worst violation `phi((s+t)/2) - (phi(s)+phi(t))/2` relative to
/// the right-hand side; non-positive means the samples are convex.
pub fn midpoint_convexity_defect(phi: &YoungFunction, samples: usize) -> f64 {
    let scan = ScanSpec {
        t_min: 1e-6,
        t_max: 1e6,
        points: samples,
    };
    let ts: Vec<f64> = scan.log_points().into_iter().map(f64::exp).collect();
    let mut worst = f64::NEG_INFINITY;
    for (i, &s) in ts.iter().enumerate() {
        for &t in &ts[i..] {
            let (fs, ft) = (phi.eval(s), phi.eval(t));
            let rhs = 0.5 * (fs + ft);
            if !rhs.is_finite() || rhs == 0.0 {
                continue;
            }
            let mid = phi.eval(0.5 * (s + t));
            worst = worst.max((mid - rhs) / rhs);
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(kv: &[(&str, f64)]) -> BTreeMap<String, f64> {
        kv.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn catalog_examples() {
        let sq = make_young("power", &params(&[("p", 2.0)])).unwrap();
        assert_eq!(sq.eval(3.0), 9.0);
        let pl = make_young("power_log", &params(&[("p", 2.0), ("alpha", 1.0)])).unwrap();
        assert!((pl.eval(1.0) - std::f64::consts::LN_2).abs() < 1e-15);
        let pm = make_young("power_max", &params(&[("p", 1.0), ("delta", 1.0)])).unwrap();
        assert_eq!(pm.eval(0.5), 0.5);
        assert_eq!(pm.eval(2.0), 4.0);
    }

    #[test]
    fn rejects_bad_names_and_params() {
        assert!(matches!(
            make_young("torus", &BTreeMap::new()),
            Err(Error::UnknownName { .. })
        ));
        assert!(make_young("power", &params(&[("p", 0.5)])).is_err());
        assert!(make_young("power_log", &params(&[("p", 2.0), ("alpha", 0.5)])).is_err());
        assert!(make_young("power_max", &params(&[("p", 2.0), ("delta", 0.0)])).is_err());
        assert!(make_young("power_exp", &params(&[("p", 2.0), ("c", -1.0)])).is_err());
        assert!(matches!(
            make_young("power", &BTreeMap::new()),
            Err(Error::MissingParameter(_))
        ));
    }

    #[test]
    fn log_form_matches_direct_evaluation() {
        let all = [
            power(2.5),
            power_log(2.0, 1.0),
            make_young("power_max", &params(&[("p", 1.0), ("delta", 0.5)])).unwrap(),
            make_young("power_exp", &params(&[("p", 2.0), ("c", 1.0), ("alpha", 1.0)])).unwrap(),
            make_young("exp_minus_taylor", &params(&[("c", 1.0), ("alpha", 1.0)])).unwrap(),
            power_compose(&power_log(2.0, 1.0), 2.0).unwrap(),
        ];
        for phi in &all {
            for &t in &[1e-5, 0.01, 0.3, 1.0, 2.5, 17.0, 300.0] {
                let direct = phi.eval(t);
                if !direct.is_finite() {
                    continue;
                }
                let via_log = phi.ln_eval_log(t.ln()).exp();
                assert!(
                    (direct - via_log).abs() <= 1e-11 * direct,
                    "{phi} at {t}: {direct} vs {via_log}"
                );
            }
        }
    }

    #[test]
    fn exp_minus_taylor_has_no_cancellation_near_zero() {
        // n = 2, alpha = 1 subtracts 1 + x + x^2/2, leaving ~ x^3/6
        let phi = make_young("exp_minus_taylor", &params(&[("c", 1.0), ("alpha", 1.0)])).unwrap();
        let t = 1e-4;
        assert!((phi.eval(t) / (t * t * t / 6.0) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(inverse(&power(2.0), 4.0), 2.0);
        assert_eq!(inverse(&power_log(2.0, 1.0), 0.0), 0.0);
        // independent oracle: plain bisection on t^2 ln(1+t) = 1
        let (mut a, mut b) = (0.0f64, 2.0f64);
        while b - a > 1e-12 {
            let m = 0.5 * (a + b);
            if m * m * m.ln_1p() < 1.0 {
                a = m;
            } else {
                b = m;
            }
        }
        let t = inverse(&power_log(2.0, 1.0), 1.0);
        assert!((t - 0.5 * (a + b)).abs() < 1e-11);
        assert!((power_log(2.0, 1.0).eval(t) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn closed_inverse_cross_check() {
        let phi = power(3.0);
        for &y in &[1e-6, 0.5, 8.0, 1e6] {
            let c = phi.closed_inverse(y).unwrap();
            assert!((inverse(&phi, y) - c).abs() <= 1e-13 * c.max(1.0));
        }
    }

    #[test]
    fn c_beta_closed_forms() {
        let scan = ScanSpec::c_beta();
        let est = estimate_c_beta(&power(2.0), 1.0, &scan).unwrap();
        assert!((est.as_f64() - 1.0).abs() < 1e-9);
        assert!(estimate_c_beta(&power(1.0), 2.0, &scan).unwrap().is_infinite());
        assert!(estimate_c_beta(&power(1.5), 1.5, &scan).unwrap().is_infinite());
    }

    #[test]
    fn c_beta_rejects_nonpositive_beta() {
        assert!(estimate_c_beta(&power(2.0), 0.0, &ScanSpec::c_beta()).is_err());
    }

    #[test]
    fn doubling_of_power_and_exponential() {
        let k = estimate_doubling(&power(2.0), &ScanSpec::doubling());
        assert!((k.as_f64() - 4.0).abs() < 1e-6);
        let pe = make_young("power_exp", &params(&[("p", 2.0), ("c", 1.0), ("alpha", 1.0)])).unwrap();
        assert!(estimate_doubling(&pe, &ScanSpec::doubling()).is_infinite());
        let et = make_young("exp_minus_taylor", &params(&[("c", 1.0), ("alpha", 1.0)])).unwrap();
        assert!(estimate_doubling(&et, &ScanSpec::doubling()).is_infinite());
    }

    #[test]
    fn doubling_of_power_log_is_below_four() {
        let phi = power_log(1.0, 1.0);
        let k = estimate_doubling(&phi, &ScanSpec::doubling()).as_f64();
        // oracle: dense scan at 10x resolution, computed directly
        let dense = ScanSpec::doubling().refined(10);
        let direct = dense
            .log_points()
            .into_iter()
            .map(|u| {
                let t = u.exp();
                phi.eval(2.0 * t) / phi.eval(t)
            })
            .fold(0.0, f64::max);
        assert!(k > 2.0 && k <= 4.0, "{k}");
        assert!((k - direct).abs() < 1e-4, "{k} vs {direct}");
    }

    #[test]
    fn compose_examples() {
        let sq = power_compose(&power(2.0), 2.0).unwrap();
        assert_eq!(sq.eval(3.0), 81.0);
        let id = power_compose(&power_log(2.0, 1.0), 1.0).unwrap();
        assert_eq!(id, power_log(2.0, 1.0));
        assert!(power_compose(&power(2.0), 0.9).is_err());
        let c = power_compose(&power_log(2.0, 1.0), 2.0).unwrap();
        assert!(midpoint_convexity_defect(&c, 80) <= 1e-12);
        assert_eq!(c.closed_inverse(1.0), None);
        assert_eq!(sq.closed_inverse(16.0), Some(2.0));
    }
}
