//! Difference operators on the lattice `X = {(n, m) : n = eps1, m = eps2 (mod 2)}`.
//!
//! ```text
//! L+ a(n,m) = (p+n) a(n+2,m) + (s+m) a(n,m+2) + (r-n-m) a(n,m)
//! L- a(n,m) = (p-n) a(n-2,m) + (s-m) a(n,m-2) + (r+n+m) a(n,m)
//! ```
//!
//! with `p = s1 + 1`, `s = s2 + 1`, `r = s3 - 1`, so the classical kernel
//! equations read `L+ a = L- a = 0`. The middle coefficients are sometimes
//! written `(s+n)` and `(s-n)`; [`Reading::AsPrinted`] selects that variant
//! for comparison.

use std::collections::BTreeMap;

use crate::kernel::KernelTable;
use crate::repr::TripleParams;
use crate::{Complex64, Error, LatticePoint, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffOpParams {
    pub p: Complex64,
    pub s: Complex64,
    pub r: Complex64,
}

impl DiffOpParams {
    pub fn new(p: Complex64, s: Complex64, r: Complex64) -> Self {
        Self { p, s, r }
    }

    pub fn from_triple(triple: &TripleParams) -> Self {
        let [s1, s2, s3] = triple.s();
        Self { p: s1 + 1.0, s: s2 + 1.0, r: s3 - 1.0 }
    }
}

/// Which variant of two coefficient formulas to use.
///
/// `Consistent`: middle coefficients `(s +- m)` in `L+-`, and constant term
/// `(p+s+r)(p+s-r-2)` in the diagonal equation. Both agree with the kernel
/// equations. `AsPrinted`: `(s +- n)` and `-r(r-2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Reading {
    #[default]
    Consistent,
    AsPrinted,
}

/// Finitely supported function on the parity lattice.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LatticeFunction {
    eps: [u8; 2],
    values: BTreeMap<LatticePoint, Complex64>,
}

impl LatticeFunction {
    pub fn new(eps1: u8, eps2: u8) -> Result<Self> {
        if eps1 > 1 || eps2 > 1 {
            return Err(Error::InvalidModule("parities must be 0 or 1".into()));
        }
        Ok(Self { eps: [eps1, eps2], values: BTreeMap::new() })
    }

    pub fn from_values(eps1: u8, eps2: u8, values: impl IntoIterator<Item = (LatticePoint, Complex64)>) -> Result<Self> {
        let mut f = Self::new(eps1, eps2)?;
        for (p, v) in values {
            f.insert(p, v)?;
        }
        Ok(f)
    }

    pub fn from_table(table: &KernelTable) -> Self {
        Self { eps: table.window.parities(), values: table.values.clone() }
    }

    pub fn parities(&self) -> [u8; 2] {
        self.eps
    }

    fn on_lattice(&self, (n, m): LatticePoint) -> bool {
        (n - self.eps[0] as i32).rem_euclid(2) == 0 && (m - self.eps[1] as i32).rem_euclid(2) == 0
    }

    pub fn insert(&mut self, p: LatticePoint, v: Complex64) -> Result<()> {
        if !self.on_lattice(p) {
            return Err(Error::Parity(p));
        }
        self.values.insert(p, v);
        Ok(())
    }

    /// Value at `p`, zero off the support.
    pub fn get(&self, p: LatticePoint) -> Complex64 {
        self.values.get(&p).copied().unwrap_or_default()
    }

    pub fn support(&self) -> impl Iterator<Item = (&LatticePoint, &Complex64)> {
        self.values.iter()
    }

    /// Smallest `R` with the support inside `|n|, |m|, |n+m| <= R`.
    pub fn support_radius(&self) -> i32 {
        self.values.keys().map(|&(n, m)| n.abs().max(m.abs()).max((n + m).abs())).max().unwrap_or(0)
    }

    pub fn max_norm(&self) -> f64 {
        self.values.values().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Pointwise map over the support grown by the given stencil offsets.
    fn stencil_map(&self, offsets: &[LatticePoint], mut at: impl FnMut(LatticePoint) -> Complex64) -> Self {
        let mut targets: Vec<LatticePoint> = Vec::new();
        for &(n, m) in self.values.keys() {
            for &(dn, dm) in offsets {
                targets.push((n - dn, m - dm));
            }
        }
        targets.sort_unstable();
        targets.dedup();
        Self { eps: self.eps, values: targets.into_iter().map(|p| (p, at(p))).collect() }
    }

    fn combine(&self, other: &Self, weight: f64) -> Self {
        let mut values = self.values.clone();
        for (p, v) in &other.values {
            *values.entry(*p).or_default() += v * weight;
        }
        Self { eps: self.eps, values }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.combine(other, -1.0)
    }

    pub fn add_scaled(&self, other: &Self, weight: f64) -> Self {
        self.combine(other, weight)
    }
}

const FORWARD: [LatticePoint; 3] = [(0, 0), (2, 0), (0, 2)];
const BACKWARD: [LatticePoint; 3] = [(0, 0), (-2, 0), (0, -2)];

fn middle(params: &DiffOpParams, n: i32, m: i32, reading: Reading) -> Complex64 {
    match reading {
        Reading::Consistent => params.s + m as f64,
        Reading::AsPrinted => params.s + n as f64,
    }
}

pub fn apply_l_plus_with(params: &DiffOpParams, a: &LatticeFunction, reading: Reading) -> LatticeFunction {
    a.stencil_map(&FORWARD, |(n, m)| {
        let (nf, mf) = (n as f64, m as f64);
        (params.p + nf) * a.get((n + 2, m))
            + middle(params, n, m, reading) * a.get((n, m + 2))
            + (params.r - nf - mf) * a.get((n, m))
    })
}

pub fn apply_l_minus_with(params: &DiffOpParams, a: &LatticeFunction, reading: Reading) -> LatticeFunction {
    a.stencil_map(&BACKWARD, |(n, m)| {
        let (nf, mf) = (n as f64, m as f64);
        (params.p - nf) * a.get((n - 2, m))
            + middle(params, -n, -m, reading) * a.get((n, m - 2))
            + (params.r + nf + mf) * a.get((n, m))
    })
}

pub fn apply_l_plus(params: &DiffOpParams, a: &LatticeFunction) -> LatticeFunction {
    apply_l_plus_with(params, a, Reading::Consistent)
}

pub fn apply_l_minus(params: &DiffOpParams, a: &LatticeFunction) -> LatticeFunction {
    apply_l_minus_with(params, a, Reading::Consistent)
}

/// Which argument a discrete derivative acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    N,
    M,
}

fn shift(axis: Axis, step: i32) -> LatticePoint {
    match axis {
        Axis::N => (step, 0),
        Axis::M => (0, step),
    }
}

/// `Delta a(p) = a(p + 2e) - a(p)`.
pub fn forward_difference(a: &LatticeFunction, axis: Axis) -> LatticeFunction {
    let (dn, dm) = shift(axis, 2);
    a.stencil_map(&[(0, 0), (dn, dm)], |(n, m)| a.get((n + dn, m + dm)) - a.get((n, m)))
}

/// `Nabla a(p) = a(p) - a(p - 2e)`.
pub fn backward_difference(a: &LatticeFunction, axis: Axis) -> LatticeFunction {
    let (dn, dm) = shift(axis, 2);
    a.stencil_map(&[(0, 0), (-dn, -dm)], |(n, m)| a.get((n, m)) - a.get((n - dn, m - dm)))
}

fn relative(diff: f64, scale: f64) -> f64 {
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

/// Max-norm of `[L+, L-] a - 2 (L+ - L-) a`, divided by the largest
/// intermediate value.
pub fn commutator_residual_with(params: &DiffOpParams, a: &LatticeFunction, reading: Reading) -> f64 {
    let lp = apply_l_plus_with(params, a, reading);
    let lm = apply_l_minus_with(params, a, reading);
    let lplm = apply_l_plus_with(params, &lm, reading);
    let lmlp = apply_l_minus_with(params, &lp, reading);
    let residual = lplm.sub(&lmlp).add_scaled(&lp, -2.0).add_scaled(&lm, 2.0);
    let scale = [&lp, &lm, &lplm, &lmlp, a].iter().map(|f| f.max_norm()).fold(0.0, f64::max);
    relative(residual.max_norm(), scale)
}

pub fn commutator_residual(params: &DiffOpParams, a: &LatticeFunction) -> f64 {
    commutator_residual_with(params, a, Reading::Consistent)
}

/// Compares `L+- a` with the discrete-derivative forms
///
/// ```text
/// L+ a = ((n+p) Dn + (m+s) Dm) a + (p+s+r) a
/// L- a = ((n-p) Nn + (m-s) Nm) a + (p+s+r) a
/// ```
///
/// Returns the two relative max-norm differences.
pub fn gradient_form_residual(params: &DiffOpParams, a: &LatticeFunction) -> (f64, f64) {
    let lp = apply_l_plus(params, a);
    let lm = apply_l_minus(params, a);
    let (dn, dm) = (forward_difference(a, Axis::N), forward_difference(a, Axis::M));
    let (bn, bm) = (backward_difference(a, Axis::N), backward_difference(a, Axis::M));
    let total = params.p + params.s + params.r;
    let compare = |lhs: &LatticeFunction, form: &dyn Fn(LatticePoint) -> Complex64| {
        let mut diff: f64 = 0.0;
        let mut scale: f64 = lhs.max_norm();
        for (&p, v) in lhs.support() {
            let f = form(p);
            diff = diff.max((v - f).norm());
            scale = scale.max(f.norm());
        }
        relative(diff, scale)
    };
    let plus = compare(&lp, &|(n, m)| {
        (params.p + n as f64) * dn.get((n, m)) + (params.s + m as f64) * dm.get((n, m)) + total * a.get((n, m))
    });
    let minus = compare(&lm, &|(n, m)| {
        (n as f64 - params.p) * bn.get((n, m)) + (m as f64 - params.s) * bm.get((n, m)) + total * a.get((n, m))
    });
    (plus, minus)
}

/// Residual of
///
/// ```text
/// (n+p)(n+s-k) Nabla Delta b + 2(pn + sn - pk) Nabla b + C b = 0,   b(n) = a(n, k-n)
/// ```
///
/// on every `n` with `b(n-2), b(n), b(n+2)` in the table, each divided by its
/// largest term. `C = (p+s+r)(p+s-r-2)` under [`Reading::Consistent`] and
/// `-r(r-2)` under [`Reading::AsPrinted`].
pub fn diagonal_hypergeometric_residual_with(
    params: &DiffOpParams,
    table: &KernelTable,
    k: i32,
    reading: Reading,
) -> Result<f64> {
    if !table.dp.is_classical() {
        return Err(Error::Domain("the diagonal equation applies to classical kernels".into()));
    }
    let [e1, e2] = table.window.parities();
    if (k - (e1 + e2) as i32).rem_euclid(2) != 0 {
        return Err(Error::Parity((k, 0)));
    }
    let diagonal = table.window.level_points(k);
    if diagonal.len() < 3 {
        return Err(Error::InvalidWindow(format!("diagonal n + m = {k} has fewer than 3 window points")));
    }
    if table.trivial {
        return Ok(0.0);
    }
    let (p, s, r) = (params.p, params.s, params.r);
    let constant = match reading {
        Reading::Consistent => (p + s + r) * (p + s - r - 2.0),
        Reading::AsPrinted => -r * (r - 2.0),
    };
    let b = |n: i32| table.values.get(&(n, k - n)).copied();
    let mut worst: f64 = 0.0;
    for &(n, _) in &diagonal {
        let (Some(lo), Some(mid), Some(hi)) = (b(n - 2), b(n), b(n + 2)) else {
            continue;
        };
        let nf = n as f64;
        let kf = k as f64;
        let second = (nf + p) * (nf + s - kf);
        let first = (p * nf + s * nf - p * kf) * 2.0;
        let terms = [second * hi, (first + constant - second * 2.0) * mid, (second - first) * lo];
        let sum: Complex64 = terms.iter().sum();
        let scale = terms.iter().map(|t| t.norm()).fold(0.0, f64::max);
        worst = worst.max(relative(sum.norm(), scale));
    }
    Ok(worst)
}

pub fn diagonal_hypergeometric_residual(params: &DiffOpParams, table: &KernelTable, k: i32) -> Result<f64> {
    diagonal_hypergeometric_residual_with(params, table, k, Reading::Consistent)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::build_kernel;
    use crate::qspecial::DeformationParameter;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn params() -> DiffOpParams {
        DiffOpParams::new(c(1.3, 0.2), c(-0.4, 0.7), c(2.2, -0.1))
    }

    fn random_function(seed: u64) -> LatticeFunction {
        // Small deterministic generator, enough for fixed test data.
        let mut x = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut next = || {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((x >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        let mut f = LatticeFunction::new(0, 0).unwrap();
        for n in (-6..=6).step_by(2) {
            for m in (-6..=6).step_by(2) {
                f.insert((n, m), c(next(), next())).unwrap();
            }
        }
        f
    }

    fn classical_table(eps: [u8; 3], w: u32) -> KernelTable {
        let t = TripleParams::from_parts([c(2.1, 0.3), c(1.3, 0.5), c(0.7, -0.2)], eps).unwrap();
        build_kernel(&DeformationParameter::classical(), &t, w, c(1.0, 0.0)).unwrap()
    }

    #[test]
    fn operators_on_simple_functions() {
        let zero = LatticeFunction::new(0, 0).unwrap();
        assert_eq!(apply_l_plus(&params(), &zero).max_norm(), 0.0);
        assert_eq!(apply_l_minus(&params(), &zero).max_norm(), 0.0);
        let delta = LatticeFunction::from_values(0, 0, [((0, 0), c(1.0, 0.0))]).unwrap();
        assert_eq!(apply_l_plus(&params(), &delta).get((0, 0)), params().r);
        assert_eq!(apply_l_minus(&params(), &delta).get((0, 0)), params().r);
        assert_eq!(apply_l_plus(&params(), &delta).get((-2, 0)), params().p - 2.0);
        assert_eq!(apply_l_plus(&params(), &delta).get((0, -2)), params().s - 2.0);
        assert!(LatticeFunction::from_values(0, 0, [((1, 0), c(1.0, 0.0))]).is_err());
    }

    #[test]
    fn operators_match_direct_stencil_sum() {
        let a = random_function(7);
        let pr = params();
        let lp = apply_l_plus(&pr, &a);
        let lm = apply_l_minus(&pr, &a);
        for n in (-8..=8).step_by(2) {
            for m in (-8..=8).step_by(2) {
                let (nf, mf) = (n as f64, m as f64);
                let mut plus = c(0.0, 0.0);
                let mut minus = c(0.0, 0.0);
                for (&(i, j), v) in a.support() {
                    if (i, j) == (n + 2, m) {
                        plus += (pr.p + nf) * v;
                    }
                    if (i, j) == (n, m + 2) {
                        plus += (pr.s + mf) * v;
                    }
                    if (i, j) == (n, m) {
                        plus += (pr.r - nf - mf) * v;
                        minus += (pr.r + nf + mf) * v;
                    }
                    if (i, j) == (n - 2, m) {
                        minus += (pr.p - nf) * v;
                    }
                    if (i, j) == (n, m - 2) {
                        minus += (pr.s - mf) * v;
                    }
                }
                assert!((lp.get((n, m)) - plus).norm() < 1e-13);
                assert!((lm.get((n, m)) - minus).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn commutator_identity() {
        let delta = LatticeFunction::from_values(0, 0, [((0, 0), c(1.0, 0.0))]).unwrap();
        assert!(commutator_residual(&params(), &delta) < 1e-12);
        assert_eq!(commutator_residual(&params(), &LatticeFunction::new(0, 0).unwrap()), 0.0);
        for seed in 0..20 {
            assert!(commutator_residual(&params(), &random_function(seed)) < 1e-12);
        }
        // The (s+n) variant breaks the identity.
        assert!(commutator_residual_with(&params(), &random_function(3), Reading::AsPrinted) > 1e-3);
    }

    #[test]
    fn differences_commute() {
        let a = random_function(11);
        for axis in [Axis::N, Axis::M] {
            let nd = backward_difference(&forward_difference(&a, axis), axis);
            let dn = forward_difference(&backward_difference(&a, axis), axis);
            let diff = nd.sub(&dn);
            assert_eq!(diff.max_norm(), 0.0);
        }
        let d = forward_difference(&a, Axis::N);
        assert_eq!(d.get((0, 0)), a.get((2, 0)) - a.get((0, 0)));
        let b = backward_difference(&a, Axis::M);
        assert_eq!(b.get((0, 0)), a.get((0, 0)) - a.get((0, -2)));
    }

    #[test]
    fn gradient_forms() {
        assert_eq!(gradient_form_residual(&params(), &LatticeFunction::new(0, 0).unwrap()), (0.0, 0.0));
        for seed in 0..10 {
            let (plus, minus) = gradient_form_residual(&params(), &random_function(seed));
            assert!(plus < 1e-12 && minus < 1e-12, "{plus} {minus}");
        }
    }

    #[test]
    fn classical_kernel_is_annihilated() {
        for eps in [[0, 0, 0], [1, 1, 0], [0, 1, 1]] {
            let table = classical_table(eps, 12);
            let pr = DiffOpParams::from_triple(&table.triple);
            let a = LatticeFunction::from_table(&table);
            let scale = a.max_norm();
            // Interior only: points whose stencil stays in the table.
            let lp = apply_l_plus(&pr, &a);
            let lm = apply_l_minus(&pr, &a);
            for &p in table.values.keys() {
                let (n, m) = p;
                if table.window.contains((n + 2, m)) && table.window.contains((n, m + 2)) {
                    assert!(lp.get(p).norm() < 1e-9 * scale, "{p:?}");
                }
                if table.window.contains((n - 2, m)) && table.window.contains((n, m - 2)) {
                    assert!(lm.get(p).norm() < 1e-9 * scale, "{p:?}");
                }
            }
        }
    }

    #[test]
    fn diagonal_equation_on_classical_kernels() {
        for eps in [[0, 0, 0], [1, 1, 0], [0, 1, 1], [1, 0, 1]] {
            let table = classical_table(eps, 12);
            let pr = DiffOpParams::from_triple(&table.triple);
            let base = (eps[0] + eps[1]) as i32 % 2;
            for k in [base - 4, base, base + 4] {
                let r = diagonal_hypergeometric_residual(&pr, &table, k).unwrap();
                assert!(r < 1e-9, "{eps:?} k={k}: {r}");
            }
            let printed = diagonal_hypergeometric_residual_with(&pr, &table, base, Reading::AsPrinted).unwrap();
            assert!(printed > 1e-3);
        }
    }

    #[test]
    fn diagonal_equation_errors_and_sensitivity() {
        let mut table = classical_table([0, 0, 0], 8);
        let pr = DiffOpParams::from_triple(&table.triple);
        assert!(diagonal_hypergeometric_residual(&pr, &table, 1).is_err());
        assert!(diagonal_hypergeometric_residual(&pr, &table, 10).is_err());
        let v = table.values[&(2, -2)];
        table.values.insert((2, -2), v * 1.01 + c(1e-3, 0.0));
        assert!(diagonal_hypergeometric_residual(&pr, &table, 0).unwrap() >= 1e-4);

        let dp = DeformationParameter::quantum(c(0.5, 0.0)).unwrap();
        let t = table.triple;
        let quantum = build_kernel(&dp, &t, 8, c(1.0, 0.0)).unwrap();
        assert!(matches!(diagonal_hypergeometric_residual(&pr, &quantum, 0), Err(Error::Domain(_))));
    }

    fn arb_complex() -> impl Strategy<Value = Complex64> {
        (-3.0..3.0f64, -3.0..3.0f64).prop_map(|(re, im)| c(re, im))
    }

    proptest! {
        #[test]
        fn commutator_holds_for_random_data(
            p in arb_complex(), s in arb_complex(), r in arb_complex(),
            vals in proptest::collection::vec(arb_complex(), 1..30),
        ) {
            let mut a = LatticeFunction::new(1, 0).unwrap();
            for (i, v) in vals.into_iter().enumerate() {
                let i = i as i32;
                a.insert((2 * (i % 5) - 3, 2 * (i / 5) - 4), v).unwrap();
            }
            let pr = DiffOpParams::new(p, s, r);
            prop_assert!(commutator_residual(&pr, &a) < 1e-12);
            let (plus, minus) = gradient_form_residual(&pr, &a);
            prop_assert!(plus < 1e-12 && minus < 1e-12);
        }
    }
}
