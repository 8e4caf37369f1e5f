//! Complex q-arithmetic and q-special functions.
//!
//! Every power of `q` is taken as `q^s = exp(s log q)` for one fixed branch of
//! `log q`, carried by [`DeformationParameter`]. The classical limit `q = 1` is
//! a separate mode in which q-numbers are replaced by their arguments and all
//! powers of `q` are 1.

use crate::{Complex64, Error, Result, DIVISOR_TOLERANCE};

/// Largest exponent checked by the root-of-unity test.
pub const ROOT_OF_UNITY_ORDER: u32 = 64;
/// `|q^k - 1|` must exceed this for every checked `k`.
pub const ROOT_OF_UNITY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// `q = 1`; coefficients `[x]_q` become `x`.
    Classical,
    Quantum,
}

/// The deformation parameter `q` together with a fixed branch of `log q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeformationParameter {
    q: Complex64,
    log_q: Complex64,
    mode: Mode,
}

impl DeformationParameter {
    pub fn classical() -> Self {
        Self {
            q: Complex64::new(1.0, 0.0),
            log_q: Complex64::new(0.0, 0.0),
            mode: Mode::Classical,
        }
    }

    /// Quantum parameter with the principal branch of `log q`.
    pub fn quantum(q: Complex64) -> Result<Self> {
        if q.norm() == 0.0 || !q.is_finite() {
            return Err(Error::InvalidDeformation(format!("q = {q} must be finite and nonzero")));
        }
        Self::from_log(q, q.ln())
    }

    /// Quantum parameter with an explicitly chosen branch of `log q`.
    pub fn with_log(q: Complex64, log_q: Complex64) -> Result<Self> {
        if q.norm() == 0.0 || !q.is_finite() || !log_q.is_finite() {
            return Err(Error::InvalidDeformation(format!("q = {q} must be finite and nonzero")));
        }
        if (log_q.exp() - q).norm() > 1e-12 * q.norm().max(1.0) {
            return Err(Error::InvalidDeformation(format!(
                "exp(log_q) = {} does not reproduce q = {q}",
                log_q.exp()
            )));
        }
        Self::from_log(q, log_q)
    }

    fn from_log(q: Complex64, log_q: Complex64) -> Result<Self> {
        for k in 1..=ROOT_OF_UNITY_ORDER {
            let qk = (log_q * k as f64).exp();
            if (qk - 1.0).norm() <= ROOT_OF_UNITY_TOLERANCE {
                return Err(Error::InvalidDeformation(format!(
                    "q = {q} is within {ROOT_OF_UNITY_TOLERANCE:e} of a root of unity of order {k}"
                )));
            }
        }
        Ok(Self { q, log_q, mode: Mode::Quantum })
    }

    pub fn q(&self) -> Complex64 {
        self.q
    }

    pub fn log_q(&self) -> Complex64 {
        self.log_q
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn is_classical(&self) -> bool {
        self.mode == Mode::Classical
    }

    /// `q^2` on the branch `2 log q`.
    pub fn squared(&self) -> Result<Self> {
        match self.mode {
            Mode::Classical => Ok(*self),
            Mode::Quantum => Self::from_log(self.q * self.q, self.log_q * 2.0),
        }
    }

    /// `q^s`; identically 1 in classical mode.
    pub fn power(&self, s: Complex64) -> Complex64 {
        (s * self.log_q).exp()
    }

    /// The structure coefficient `[x]_q` in quantum mode and `x` in classical
    /// mode. This is the single switch between the two branches.
    pub fn bracket(&self, x: Complex64) -> Result<Complex64> {
        match self.mode {
            Mode::Classical => Ok(x),
            Mode::Quantum => q_number(self, x),
        }
    }
}

/// Stopping rule for the infinite products.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationPolicy {
    pub term_cutoff: usize,
    pub tail_tolerance: f64,
}

/// Products always run at least this many factors.
const MIN_TERMS: usize = 8;

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self {
            term_cutoff: 10_000,
            tail_tolerance: 1e-17,
        }
    }
}

impl TruncationPolicy {
    pub fn new(term_cutoff: usize, tail_tolerance: f64) -> Result<Self> {
        if term_cutoff == 0 || tail_tolerance.is_nan() || tail_tolerance <= 0.0 {
            return Err(Error::Domain(format!(
                "truncation policy needs term_cutoff >= 1 and tail_tolerance > 0, got {term_cutoff}, {tail_tolerance}"
            )));
        }
        Ok(Self { term_cutoff, tail_tolerance })
    }
}

/// `q^s = exp(s log q)`.
pub fn q_power(dp: &DeformationParameter, s: Complex64) -> Result<Complex64> {
    let v = dp.power(s);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite("q_power"))
    }
}

/// The q-number `[x]_q = (q^x - q^-x) / (q - q^-1)` at complex `x`.
///
/// Evaluated as `sinh(x log q) / sinh(log q)`, which is the same quantity on
/// the fixed branch and stays accurate as `q -> 1`.
pub fn q_number(dp: &DeformationParameter, x: Complex64) -> Result<Complex64> {
    if dp.is_classical() {
        return Err(Error::ClassicalMode);
    }
    let h = dp.log_q;
    let v = (x * h).sinh() / h.sinh();
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite("q_number"))
    }
}

/// Bound on `|log((a; q)_inf / (a; q)_N)|`-sized tails: `|a| |q|^N / (1 - |q|)`.
pub fn tail_estimate(a_abs: f64, q_abs: f64, terms: usize) -> f64 {
    a_abs * q_abs.powi(terms as i32) / (1.0 - q_abs)
}

fn require_inside_unit_disk(dp: &DeformationParameter, what: &str) -> Result<()> {
    if dp.is_classical() || dp.q.norm() >= 1.0 {
        return Err(Error::Domain(format!("{what} requires |q| < 1, got q = {}", dp.q)));
    }
    Ok(())
}

/// Runs `f(k, a q^k)` over the factors of `(a; q)_inf` until the stopping rule
/// is met.
fn for_each_factor(
    dp: &DeformationParameter,
    a: Complex64,
    tp: &TruncationPolicy,
    mut f: impl FnMut(usize, Complex64) -> Result<()>,
) -> Result<()> {
    let mut term = a;
    let q = dp.q;
    for k in 0..tp.term_cutoff {
        if k >= MIN_TERMS && term.norm() < tp.tail_tolerance {
            return Ok(());
        }
        f(k, term)?;
        term *= q;
    }
    if term.norm() < tp.tail_tolerance {
        return Ok(());
    }
    Err(Error::Truncation {
        terms: tp.term_cutoff,
        tail_bound: tail_estimate(a.norm(), q.norm(), tp.term_cutoff),
    })
}

/// The q-Pochhammer symbol `(a; q)_inf = prod_{k >= 0} (1 - a q^k)` for `|q| < 1`.
pub fn q_pochhammer_inf(dp: &DeformationParameter, a: Complex64, tp: &TruncationPolicy) -> Result<Complex64> {
    require_inside_unit_disk(dp, "q_pochhammer_inf")?;
    let mut acc = Complex64::new(1.0, 0.0);
    for_each_factor(dp, a, tp, |_, t| {
        acc *= Complex64::new(1.0, 0.0) - t;
        Ok(())
    })?;
    if acc.is_finite() {
        Ok(acc)
    } else {
        Err(Error::NonFinite("q_pochhammer_inf"))
    }
}

/// Sum of principal logarithms of the factors of `(a; q)_inf`. Agrees with
/// `ln (a; q)_inf` modulo `2 pi i`. Factors within [`DIVISOR_TOLERANCE`] of
/// zero are reported as a pole with their index.
fn ln_q_pochhammer_inf(dp: &DeformationParameter, a: Complex64, tp: &TruncationPolicy) -> Result<Complex64> {
    let mut acc = Complex64::new(0.0, 0.0);
    for_each_factor(dp, a, tp, |k, t| {
        let factor = Complex64::new(1.0, 0.0) - t;
        if factor.norm() < DIVISOR_TOLERANCE {
            return Err(Error::Pole { index: k });
        }
        acc += factor.ln();
        Ok(())
    })?;
    Ok(acc)
}

/// `ln Gamma_q(x)` modulo `2 pi i`.
pub fn ln_q_gamma(dp: &DeformationParameter, x: Complex64, tp: &TruncationPolicy) -> Result<Complex64> {
    require_inside_unit_disk(dp, "q_gamma")?;
    let one = Complex64::new(1.0, 0.0);
    let qx = dp.power(x);
    if !qx.is_finite() {
        return Err(Error::NonFinite("q_gamma"));
    }
    let denominator = ln_q_pochhammer_inf(dp, qx, tp)?;
    let numerator = ln_q_pochhammer_inf(dp, dp.q, tp)?;
    Ok((one - x) * (one - dp.q).ln() + numerator - denominator)
}

/// The q-Gamma function `Gamma_q(x) = (1 - q)^(1-x) (q; q)_inf / (q^x; q)_inf`, `|q| < 1`.
pub fn q_gamma(dp: &DeformationParameter, x: Complex64, tp: &TruncationPolicy) -> Result<Complex64> {
    let v = ln_q_gamma(dp, x, tp)?.exp();
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite("q_gamma"))
    }
}

/// `ln phi(x)` modulo `2 pi i`; see [`phi`].
pub fn ln_phi(dp: &DeformationParameter, x: Complex64, tp: &TruncationPolicy) -> Result<Complex64> {
    let q2 = dp.squared()?;
    let gauge = -(x * x - x * 3.0) * 0.5 * dp.log_q;
    Ok(gauge + ln_q_gamma(&q2, x, tp)?)
}

/// `phi(x) = q^(-(x^2 - 3x)/2) Gamma_{q^2}(x)`, a solution of
/// `phi(x + 1) = [x]_q phi(x)` for `|q| < 1`.
pub fn phi(dp: &DeformationParameter, x: Complex64, tp: &TruncationPolicy) -> Result<Complex64> {
    let v = ln_phi(dp, x, tp)?.exp();
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite("phi"))
    }
}
