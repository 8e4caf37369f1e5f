//! Principal-series modules `M(s, eps)` and `M_q(s, eps)`.
//!
//! The module has basis `v_n`, `n = eps mod 2`, with
//!
//! ```text
//! K v_n = q^n v_n,  E v_n = [(s + n + 1)/2]_q v_{n+2},  F v_n = [(s - n + 1)/2]_q v_{n-2}
//! ```
//!
//! and the classical module is the same formula with `[x]_q` replaced by `x`
//! (and `K` by the identity). Tensor products use the coproduct
//! `E -> E (x) 1 + K (x) E`, `F -> F (x) K^-1 + 1 (x) F`.

use std::collections::BTreeMap;

use crate::qspecial::{ln_phi, DeformationParameter, Mode, TruncationPolicy};
use crate::{Complex64, Error, Result, DIVISOR_TOLERANCE};

/// Odd shifts `k` with `|k| <= IRREDUCIBILITY_RANGE` are checked by
/// [`ModuleParams::irreducible`].
pub const IRREDUCIBILITY_RANGE: i32 = 64;
/// Distance from the excluded set below which a module counts as reducible.
pub const IRREDUCIBILITY_TOLERANCE: f64 = 1e-10;

/// Parameters `(s, eps)` of one principal-series module.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModuleParams {
    pub s: Complex64,
    pub epsilon: u8,
}

impl ModuleParams {
    pub fn new(s: Complex64, epsilon: u8) -> Result<Self> {
        if epsilon > 1 {
            return Err(Error::InvalidModule(format!("epsilon must be 0 or 1, got {epsilon}")));
        }
        if !s.is_finite() {
            return Err(Error::InvalidModule(format!("s = {s} is not finite")));
        }
        Ok(Self { s, epsilon })
    }

    /// The same module with `s` replaced by `-s`.
    pub fn reflected(&self) -> Self {
        Self { s: -self.s, epsilon: self.epsilon }
    }

    /// Distance from `s - eps` to the nearest odd integer `k`, `|k| <= 64`.
    /// Infinite when `s` is further than that from the real axis.
    pub fn distance_to_reducible(&self) -> f64 {
        let shifted = self.s - self.epsilon as f64;
        if shifted.im.abs() > IRREDUCIBILITY_RANGE as f64 {
            return f64::INFINITY;
        }
        (-IRREDUCIBILITY_RANGE..=IRREDUCIBILITY_RANGE)
            .filter(|k| k.rem_euclid(2) == 1)
            .map(|k| (shifted - k as f64).norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// `s - eps` is not an odd integer (within [`IRREDUCIBILITY_TOLERANCE`]).
    pub fn irreducible(&self) -> bool {
        self.distance_to_reducible() > IRREDUCIBILITY_TOLERANCE
    }

    pub fn is_weight(&self, n: i32) -> bool {
        (n - self.epsilon as i32).rem_euclid(2) == 0
    }

    pub fn check_weight(&self, n: i32) -> Result<()> {
        if self.is_weight(n) {
            Ok(())
        } else {
            Err(Error::InvalidWeight { n, epsilon: self.epsilon })
        }
    }
}

/// Three modules whose tensor product carries the functional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripleParams {
    pub modules: [ModuleParams; 3],
}

impl TripleParams {
    pub fn new(modules: [ModuleParams; 3]) -> Self {
        Self { modules }
    }

    pub fn from_parts(s: [Complex64; 3], eps: [u8; 3]) -> Result<Self> {
        Ok(Self {
            modules: [
                ModuleParams::new(s[0], eps[0])?,
                ModuleParams::new(s[1], eps[1])?,
                ModuleParams::new(s[2], eps[2])?,
            ],
        })
    }

    pub fn s(&self) -> [Complex64; 3] {
        [self.modules[0].s, self.modules[1].s, self.modules[2].s]
    }

    pub fn epsilons(&self) -> [u8; 3] {
        [self.modules[0].epsilon, self.modules[1].epsilon, self.modules[2].epsilon]
    }

    /// `eps3 = eps1 + eps2 (mod 2)`: weight-zero triples exist.
    pub fn parity_compatible(&self) -> bool {
        let [e1, e2, e3] = self.epsilons();
        (e1 + e2 + e3) % 2 == 0
    }

    pub fn irreducible(&self) -> bool {
        self.modules.iter().all(ModuleParams::irreducible)
    }

    /// Smallest distance of any `s_i - eps_i` from the odd integers.
    pub fn distance_to_reducible(&self) -> f64 {
        self.modules
            .iter()
            .map(ModuleParams::distance_to_reducible)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Coefficient of `v_{n+2}` in `E v_n`.
pub fn e_coeff(dp: &DeformationParameter, mp: &ModuleParams, n: i32) -> Result<Complex64> {
    mp.check_weight(n)?;
    dp.bracket((mp.s + (n + 1) as f64) * 0.5)
}

/// Coefficient of `v_{n-2}` in `F v_n`.
pub fn f_coeff(dp: &DeformationParameter, mp: &ModuleParams, n: i32) -> Result<Complex64> {
    mp.check_weight(n)?;
    dp.bracket((mp.s + (1 - n) as f64) * 0.5)
}

/// `[n]_q` (or `n`), the eigenvalue of `(K - K^-1)/(q - q^-1)` (or `H`) on `v_n`.
pub fn weight_bracket(dp: &DeformationParameter, n: i32) -> Result<Complex64> {
    dp.bracket(Complex64::new(n as f64, 0.0))
}

/// `|(EF - FE) v_n - [n]_q v_n|`, the defect of the commutation relation on `v_n`.
pub fn commutator_check_module(dp: &DeformationParameter, mp: &ModuleParams, n: i32) -> Result<f64> {
    let ef = e_coeff(dp, mp, n - 2)? * f_coeff(dp, mp, n)?;
    let fe = f_coeff(dp, mp, n + 2)? * e_coeff(dp, mp, n)?;
    Ok((ef - fe - weight_bracket(dp, n)?).norm())
}

fn check_triple_weights(triple: &TripleParams, weights: [i32; 3]) -> Result<()> {
    for (mp, &w) in triple.modules.iter().zip(weights.iter()) {
        mp.check_weight(w)?;
    }
    Ok(())
}

/// Coefficients `(c1, c2, c3)` of
/// `E(v_n (x) v_m (x) v_k) = c1 v_{n+2} v_m v_k + c2 v_n v_{m+2} v_k + c3 v_n v_m v_{k+2}`.
pub fn triple_e_coeffs(dp: &DeformationParameter, triple: &TripleParams, weights: [i32; 3]) -> Result<[Complex64; 3]> {
    check_triple_weights(triple, weights)?;
    let [n, m, k] = weights;
    let [m1, m2, m3] = &triple.modules;
    Ok([
        e_coeff(dp, m1, n)?,
        dp.power(Complex64::new(n as f64, 0.0)) * e_coeff(dp, m2, m)?,
        dp.power(Complex64::new((n + m) as f64, 0.0)) * e_coeff(dp, m3, k)?,
    ])
}

/// Coefficients `(c1, c2, c3)` of
/// `F(v_n (x) v_m (x) v_k) = c1 v_{n-2} v_m v_k + c2 v_n v_{m-2} v_k + c3 v_n v_m v_{k-2}`.
pub fn triple_f_coeffs(dp: &DeformationParameter, triple: &TripleParams, weights: [i32; 3]) -> Result<[Complex64; 3]> {
    check_triple_weights(triple, weights)?;
    let [n, m, k] = weights;
    let [m1, m2, m3] = &triple.modules;
    Ok([
        dp.power(Complex64::new((-m - k) as f64, 0.0)) * f_coeff(dp, m1, n)?,
        dp.power(Complex64::new(-k as f64, 0.0)) * f_coeff(dp, m2, m)?,
        f_coeff(dp, m3, k)?,
    ])
}

/// Which first-order relation generates reflection coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Recurrence {
    /// Commutation with `E`: `r_{n+2} e(s, n) = e(-s, n) r_n`.
    E,
    /// Commutation with `F`: `r_{n-2} f(s, n) = f(-s, n) r_n`.
    F,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReflectionConstruction {
    PhiRatio,
    Recurrence(Recurrence),
}

/// The diagonal intertwiner `R(s): M(s, eps) -> M(-s, eps)`, `v_n -> r_n v_n`,
/// tabulated for `|n| <= window`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionMap {
    pub source: ModuleParams,
    pub dp: DeformationParameter,
    pub construction: ReflectionConstruction,
    pub anchor: i32,
    pub coefficients: BTreeMap<i32, Complex64>,
}

impl ReflectionMap {
    pub fn anchor_value(&self) -> Complex64 {
        self.coefficients[&self.anchor]
    }

    pub fn get(&self, n: i32) -> Option<Complex64> {
        self.coefficients.get(&n).copied()
    }

    /// Max over adjacent pairs of the relative defects of commutation with
    /// `E` and with `F`.
    pub fn intertwining_residual(&self) -> Result<(f64, f64)> {
        let source = self.source;
        let target = source.reflected();
        let mut e_res: f64 = 0.0;
        let mut f_res: f64 = 0.0;
        for (&n, &rn) in &self.coefficients {
            let Some(&rn2) = self.coefficients.get(&(n + 2)) else {
                continue;
            };
            let lhs = rn2 * e_coeff(&self.dp, &source, n)?;
            let rhs = e_coeff(&self.dp, &target, n)? * rn;
            e_res = e_res.max(relative_defect(lhs, rhs));
            let lhs = rn * f_coeff(&self.dp, &source, n + 2)?;
            let rhs = f_coeff(&self.dp, &target, n + 2)? * rn2;
            f_res = f_res.max(relative_defect(lhs, rhs));
        }
        Ok((e_res, f_res))
    }
}

fn relative_defect(a: Complex64, b: Complex64) -> f64 {
    let scale = a.norm().max(b.norm());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).norm() / scale
    }
}

fn reflection_weights(mp: &ModuleParams, window: u32) -> impl Iterator<Item = i32> {
    let w = window as i32;
    let eps = mp.epsilon as i32;
    (-w..=w).filter(move |n| (n - eps).rem_euclid(2) == 0)
}

/// Reflection coefficients from the first-order recurrence, anchored at
/// `r_eps = 1`.
pub fn reflection_by_recurrence(
    dp: &DeformationParameter,
    mp: &ModuleParams,
    window: u32,
    recurrence: Recurrence,
) -> Result<ReflectionMap> {
    let anchor = mp.epsilon as i32;
    let w = window as i32;
    if anchor > w {
        return Err(Error::InvalidWindow(format!("window {window} does not contain the anchor weight {anchor}")));
    }
    let target = mp.reflected();
    let mut coefficients = BTreeMap::new();
    coefficients.insert(anchor, Complex64::new(1.0, 0.0));

    let divide = |num: Complex64, den: Complex64, n: i32| -> Result<Complex64> {
        if den.norm() < DIVISOR_TOLERANCE {
            Err(Error::NearSingular { n })
        } else {
            Ok(num / den)
        }
    };

    // Ratio r_{n+2} / r_n expressed through the chosen relation, and its inverse.
    let ratio_up = |n: i32| -> Result<(Complex64, Complex64)> {
        match recurrence {
            Recurrence::E => Ok((e_coeff(dp, &target, n)?, e_coeff(dp, mp, n)?)),
            Recurrence::F => Ok((f_coeff(dp, mp, n + 2)?, f_coeff(dp, &target, n + 2)?)),
        }
    };

    let mut n = anchor;
    let mut r = Complex64::new(1.0, 0.0);
    while n + 2 <= w {
        let (num, den) = ratio_up(n)?;
        r = divide(num * r, den, n)?;
        n += 2;
        coefficients.insert(n, r);
    }
    let mut n = anchor;
    let mut r = Complex64::new(1.0, 0.0);
    while n - 2 >= -w {
        let (num, den) = ratio_up(n - 2)?;
        r = divide(den * r, num, n - 2)?;
        n -= 2;
        coefficients.insert(n, r);
    }
    Ok(ReflectionMap {
        source: *mp,
        dp: *dp,
        construction: ReflectionConstruction::Recurrence(recurrence),
        anchor,
        coefficients,
    })
}

/// Reflection coefficients `r_n = phi((-s+n+1)/2) / phi((s+n+1)/2)`, `|q| < 1`.
pub fn reflection_by_phi(
    dp: &DeformationParameter,
    mp: &ModuleParams,
    window: u32,
    tp: &TruncationPolicy,
) -> Result<ReflectionMap> {
    let anchor = mp.epsilon as i32;
    if anchor > window as i32 {
        return Err(Error::InvalidWindow(format!("window {window} does not contain the anchor weight {anchor}")));
    }
    let mut coefficients = BTreeMap::new();
    for n in reflection_weights(mp, window) {
        let shift = (n + 1) as f64;
        let num = ln_phi(dp, (-mp.s + shift) * 0.5, tp)?;
        let den = ln_phi(dp, (mp.s + shift) * 0.5, tp)?;
        let r = (num - den).exp();
        if !r.is_finite() {
            return Err(Error::NonFinite("reflection_by_phi"));
        }
        coefficients.insert(n, r);
    }
    Ok(ReflectionMap {
        source: *mp,
        dp: *dp,
        construction: ReflectionConstruction::PhiRatio,
        anchor,
        coefficients,
    })
}

/// `R(s)` on `|n| <= window`: the phi-ratio when `|q| < 1`, otherwise the
/// E-recurrence anchored at `r_eps = 1`.
pub fn reflection_build(
    dp: &DeformationParameter,
    mp: &ModuleParams,
    window: u32,
    tp: &TruncationPolicy,
) -> Result<ReflectionMap> {
    match dp.mode() {
        Mode::Quantum if dp.q().norm() < 1.0 => reflection_by_phi(dp, mp, window, tp),
        _ => reflection_by_recurrence(dp, mp, window, Recurrence::E),
    }
}

/// `max_n |r_n(-s) r_n(s) - 1|`, the defect of `R(-s) R(s) = Id`.
pub fn unitarity_residual(forward: &ReflectionMap, backward: &ReflectionMap) -> f64 {
    forward
        .coefficients
        .iter()
        .filter_map(|(n, a)| backward.get(*n).map(|b| (a * b - 1.0).norm()))
        .fold(0.0, f64::max)
}

/// Entrywise relative deviation of two tables after each is divided by its
/// anchor value.
pub fn anchored_deviation(a: &ReflectionMap, b: &ReflectionMap) -> f64 {
    let a0 = a.anchor_value();
    let b0 = b.anchor_value();
    a.coefficients
        .iter()
        .filter_map(|(n, x)| b.get(*n).map(|y| relative_defect(x / a0, y / b0)))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn q(v: f64) -> DeformationParameter {
        DeformationParameter::quantum(c(v, 0.0)).unwrap()
    }

    #[test]
    fn irreducibility_predicate() {
        assert!(!ModuleParams::new(c(1.0, 0.0), 0).unwrap().irreducible());
        assert!(!ModuleParams::new(c(-3.0, 0.0), 0).unwrap().irreducible());
        assert!(!ModuleParams::new(c(2.0, 0.0), 1).unwrap().irreducible());
        assert!(ModuleParams::new(c(1.0, 0.0), 1).unwrap().irreducible());
        assert!(ModuleParams::new(c(1.0, 1e-6), 0).unwrap().irreducible());
        assert!(ModuleParams::new(c(0.5, 0.0), 0).unwrap().irreducible());
        assert!(ModuleParams::new(c(1.0, 0.0), 2).is_err());
    }

    #[test]
    fn parity_compatibility() {
        let t = |e: [u8; 3]| TripleParams::from_parts([c(0.3, 0.0); 3], e).unwrap();
        assert!(t([0, 0, 0]).parity_compatible());
        assert!(t([1, 1, 0]).parity_compatible());
        assert!(t([0, 1, 1]).parity_compatible());
        assert!(!t([0, 0, 1]).parity_compatible());
        assert!(!t([1, 1, 1]).parity_compatible());
    }

    #[test]
    fn action_coefficient_examples() {
        let cl = DeformationParameter::classical();
        let m3 = ModuleParams::new(c(3.0, 0.0), 0).unwrap();
        assert_eq!(e_coeff(&cl, &m3, 0).unwrap(), c(2.0, 0.0));
        assert_eq!(f_coeff(&cl, &m3, 0).unwrap(), c(2.0, 0.0));

        let dp = q(0.5);
        let m = ModuleParams::new(c(-1.0, 0.0), 0).unwrap();
        assert_eq!(e_coeff(&dp, &m, 0).unwrap(), c(0.0, 0.0));
        let m = ModuleParams::new(c(1.0, 0.0), 0).unwrap();
        assert_eq!(f_coeff(&dp, &m, 2).unwrap(), c(0.0, 0.0));

        let m = ModuleParams::new(c(2.0, 0.0), 0).unwrap();
        let direct = |x: f64| (0.5f64.powf(x) - 0.5f64.powf(-x)) / (0.5 - 2.0);
        assert_relative_eq!(e_coeff(&dp, &m, 0).unwrap().re, direct(1.5), epsilon = 1e-14);
        assert_relative_eq!(f_coeff(&dp, &m, 2).unwrap().re, direct(0.5), epsilon = 1e-14);

        assert!(matches!(e_coeff(&dp, &m, 1), Err(Error::InvalidWeight { n: 1, epsilon: 0 })));
    }

    #[test]
    fn commutator_on_single_module() {
        let m = ModuleParams::new(c(2.3, 1.0), 0).unwrap();
        assert!(commutator_check_module(&q(0.7), &m, 4).unwrap() < 1e-12);
        assert!(commutator_check_module(&DeformationParameter::classical(), &m, 4).unwrap() < 1e-12);
    }

    #[test]
    fn triple_coefficients_follow_the_coproduct() {
        let dp = q(0.5);
        let t = TripleParams::from_parts([c(1.0, 0.0); 3], [0, 0, 0]).unwrap();
        let e = triple_e_coeffs(&dp, &t, [0, 0, -2]).unwrap();
        assert_eq!(e[2], c(0.0, 0.0));
        let f = triple_f_coeffs(&dp, &t, [2, 0, -2]).unwrap();
        let expected = 0.25 * f_coeff(&dp, &t.modules[0], 2).unwrap();
        assert!((f[0] - expected).norm() < 1e-15);
        // (s3 - k + 1)/2 = 0 at k = 2.
        let f = triple_f_coeffs(&dp, &t, [0, -2, 2]).unwrap();
        assert_eq!(f[2], c(0.0, 0.0));

        let cl = DeformationParameter::classical();
        let t = TripleParams::from_parts([c(0.3, 0.1), c(1.7, 0.0), c(-0.4, 0.2)], [1, 0, 1]).unwrap();
        let e = triple_e_coeffs(&cl, &t, [3, 2, -5]).unwrap();
        assert_eq!(e[0], (c(0.3, 0.1) + 4.0) * 0.5);
        assert_eq!(e[1], (c(1.7, 0.0) + 3.0) * 0.5);
        assert_eq!(e[2], (c(-0.4, 0.2) - 4.0) * 0.5);
        assert!(triple_e_coeffs(&cl, &t, [2, 2, -4]).is_err());
    }

    /// Builds `Delta(E)` and `Delta(F)` on a two-fold product as explicit
    /// operators and applies them twice, comparing with the closed-form
    /// three-fold coefficients.
    #[test]
    fn triple_coefficients_match_iterated_coproduct() {
        let dp = DeformationParameter::quantum(Complex64::from_polar(0.6, 0.2)).unwrap();
        let t = TripleParams::from_parts([c(0.3, 0.4), c(-1.2, 0.1), c(2.2, -0.5)], [0, 1, 1]).unwrap();
        let k = |n: i32| dp.power(c(n as f64, 0.0));
        for (n, m, kk) in [(0, 1, -1), (2, -3, 1), (-4, 5, -1)] {
            // (Delta (x) 1) Delta(E) = E11 + K E 1 + K K E
            let e1 = e_coeff(&dp, &t.modules[0], n).unwrap();
            let e2 = k(n) * e_coeff(&dp, &t.modules[1], m).unwrap();
            let e3 = k(n) * k(m) * e_coeff(&dp, &t.modules[2], kk).unwrap();
            let got = triple_e_coeffs(&dp, &t, [n, m, kk]).unwrap();
            for (a, b) in got.iter().zip([e1, e2, e3]) {
                assert!((a - b).norm() < 1e-14 * b.norm().max(1.0));
            }
            // (Delta (x) 1) Delta(F) = F K^-1 K^-1 + 1 F K^-1 + 1 1 F
            let f1 = k(-m) * k(-kk) * f_coeff(&dp, &t.modules[0], n).unwrap();
            let f2 = k(-kk) * f_coeff(&dp, &t.modules[1], m).unwrap();
            let f3 = f_coeff(&dp, &t.modules[2], kk).unwrap();
            let got = triple_f_coeffs(&dp, &t, [n, m, kk]).unwrap();
            for (a, b) in got.iter().zip([f1, f2, f3]) {
                assert!((a - b).norm() < 1e-14 * b.norm().max(1.0));
            }
        }
    }

    #[test]
    fn reflection_at_zero_is_constant() {
        let tp = TruncationPolicy::default();
        let m = ModuleParams::new(c(0.0, 0.0), 0).unwrap();
        for dp in [DeformationParameter::classical(), q(0.5), q(1.7)] {
            let r = reflection_build(&dp, &m, 10, &tp).unwrap();
            let r0 = r.anchor_value();
            assert!(r.coefficients.values().all(|v| (v - r0).norm() < 1e-14));
        }
    }

    #[test]
    fn phi_table_matches_formula_entrywise() {
        let dp = q(0.5);
        let tp = TruncationPolicy::default();
        let m = ModuleParams::new(c(0.4, 0.0), 0).unwrap();
        let r = reflection_build(&dp, &m, 10, &tp).unwrap();
        assert_eq!(r.construction, ReflectionConstruction::PhiRatio);
        for (n, v) in &r.coefficients {
            let x = (*n + 1) as f64;
            let direct = crate::qspecial::phi(&dp, c((x - 0.4) / 2.0, 0.0), &tp).unwrap()
                / crate::qspecial::phi(&dp, c((x + 0.4) / 2.0, 0.0), &tp).unwrap();
            assert!((v - direct).norm() < 1e-10 * direct.norm());
        }
        let (e, f) = r.intertwining_residual().unwrap();
        assert!(e < 1e-10 && f < 1e-10);
    }

    #[test]
    fn reflection_near_singular() {
        // s = -3, eps = 0: e(s, 2) = (-3 + 2 + 1)/2 = 0 on the way up.
        let m = ModuleParams::new(c(-3.0, 0.0), 0).unwrap();
        let err = reflection_by_recurrence(&DeformationParameter::classical(), &m, 10, Recurrence::E).unwrap_err();
        assert!(matches!(err, Error::NearSingular { .. }));
    }

    #[test]
    fn e_and_f_recurrences_agree_and_are_unitary() {
        let tp = TruncationPolicy::default();
        for dp in [DeformationParameter::classical(), q(0.6), q(1.8)] {
            for (s, eps) in [(c(0.37, 0.2), 0u8), (c(-1.4, -0.6), 1)] {
                let m = ModuleParams::new(s, eps).unwrap();
                let re = reflection_by_recurrence(&dp, &m, 20, Recurrence::E).unwrap();
                let rf = reflection_by_recurrence(&dp, &m, 20, Recurrence::F).unwrap();
                assert!(anchored_deviation(&re, &rf) < 1e-10);
                let back = reflection_build(&dp, &m.reflected(), 20, &tp).unwrap();
                let fwd = reflection_build(&dp, &m, 20, &tp).unwrap();
                assert!(unitarity_residual(&fwd, &back) < 1e-10);
                let (e, f) = re.intertwining_residual().unwrap();
                assert!(e < 1e-10 && f < 1e-10);
            }
        }
    }

    proptest! {
        #[test]
        fn module_commutator_identity(sr in -6.0f64..6.0, si in -2.0f64..2.0, half in -10i32..10, eps in 0u8..2, qr in 0.3f64..0.95) {
            let m = ModuleParams::new(c(sr, si), eps).unwrap();
            let n = 2 * half + eps as i32;
            let cl = commutator_check_module(&DeformationParameter::classical(), &m, n).unwrap();
            prop_assert!(cl < 1e-12 * (1.0 + (n as f64).abs()));
            let dp = q(qr);
            let scale = weight_bracket(&dp, n).unwrap().norm().max(1.0);
            prop_assert!(commutator_check_module(&dp, &m, n).unwrap() < 1e-12 * scale);
        }
    }
}
