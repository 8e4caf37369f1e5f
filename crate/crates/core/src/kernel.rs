//! Inductive construction of the kernel of an invariant trilinear functional.
//!
//! An invariant functional `f` on `M1 (x) M2 (x) M3` vanishes off weight zero,
//! so it is determined by `a(n, m) = f(v_n (x) v_m (x) v_{-n-m})`. Invariance
//! under `E` and `F` gives, at every lattice point,
//!
//! ```text
//! E-inv:  c1 a(n+2, m) + c2 a(n, m+2) + c3 a(n, m) = 0    (E applied to v_n v_m v_{-n-m-2})
//! F-inv:  d1 a(n-2, m) + d2 a(n, m-2) + d3 a(n, m) = 0    (F applied to v_n v_m v_{-n-m+2})
//! ```
//!
//! with the coefficients of [`triple_e_coeffs`] / [`triple_f_coeffs`], and the
//! sign-flip involution adds `a(n, m) = a(-n, -m)`. Eliminating the two
//! off-diagonal unknowns of `F-inv` with `E-inv` at `(n-2, m)` and `(n, m-2)`
//! gives the three-term "bonbon" relation along the antidiagonal `n + m = const`.
//!
//! [`build_kernel`] seeds the lowest non-negative level, walks the bonbon
//! relation along it, mirrors it with the involution, raises levels with
//! `F-inv` and mirrors the result to negative levels. The classical kernel is
//! the same algorithm with classical coefficients.

use std::collections::BTreeMap;
use std::fmt;

use crate::qspecial::DeformationParameter;
use crate::repr::{triple_e_coeffs, triple_f_coeffs};
use crate::{Complex64, Error, LatticePoint, Result, DIVISOR_TOLERANCE};

pub use crate::repr::TripleParams;

/// Diamond `|n|, |m|, |n + m| <= W` of lattice points with
/// `n = eps1`, `m = eps2 (mod 2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatticeWindow {
    radius: u32,
    eps: [u8; 2],
}

impl LatticeWindow {
    pub fn new(radius: u32, eps1: u8, eps2: u8) -> Result<Self> {
        if radius == 0 || !radius.is_multiple_of(2) {
            return Err(Error::InvalidWindow(format!("W must be a positive even integer, got {radius}")));
        }
        if eps1 > 1 || eps2 > 1 {
            return Err(Error::InvalidWindow("parities must be 0 or 1".into()));
        }
        Ok(Self { radius, eps: [eps1, eps2] })
    }

    pub fn for_triple(radius: u32, triple: &TripleParams) -> Result<Self> {
        let [e1, e2, _] = triple.epsilons();
        Self::new(radius, e1, e2)
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn parities(&self) -> [u8; 2] {
        self.eps
    }

    pub fn on_lattice(&self, (n, m): LatticePoint) -> bool {
        (n - self.eps[0] as i32).rem_euclid(2) == 0 && (m - self.eps[1] as i32).rem_euclid(2) == 0
    }

    pub fn contains(&self, p: LatticePoint) -> bool {
        let w = self.radius as i32;
        let (n, m) = p;
        self.on_lattice(p) && n.abs() <= w && m.abs() <= w && (n + m).abs() <= w
    }

    /// Smallest non-negative level `n + m` on the lattice.
    pub fn base_level(&self) -> i32 {
        ((self.eps[0] + self.eps[1]) % 2) as i32
    }

    /// Points of level `n + m = level`, sorted by `n`.
    pub fn level_points(&self, level: i32) -> Vec<LatticePoint> {
        let w = self.radius as i32;
        (-w..=w).map(|n| (n, level - n)).filter(|&p| self.contains(p)).collect()
    }

    /// All points, sorted.
    pub fn points(&self) -> Vec<LatticePoint> {
        let w = self.radius as i32;
        let mut out = Vec::new();
        for n in -w..=w {
            for m in -w..=w {
                if self.contains((n, m)) {
                    out.push((n, m));
                }
            }
        }
        out
    }
}

/// The defining relations of the kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Equation {
    Symmetry,
    EInvariance,
    FInvariance,
    Bonbon,
}

impl Equation {
    pub const ALL: [Equation; 4] = [
        Equation::Symmetry,
        Equation::EInvariance,
        Equation::FInvariance,
        Equation::Bonbon,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            Equation::Symmetry => "symmetry",
            Equation::EInvariance => "E-inv",
            Equation::FInvariance => "F-inv",
            Equation::Bonbon => "bonbon",
        }
    }

    pub fn from_id(id: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.id() == id)
    }
}

impl fmt::Display for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// A homogeneous three-term relation `sum coeffs[i] * a(points[i]) = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stencil {
    pub points: [LatticePoint; 3],
    pub coeffs: [Complex64; 3],
}

impl Stencil {
    /// `(|sum|, max |term|)` when every stencil point has a value.
    pub fn evaluate(&self, values: &BTreeMap<LatticePoint, Complex64>) -> Option<(f64, f64)> {
        let mut sum = Complex64::new(0.0, 0.0);
        let mut scale: f64 = 0.0;
        for (p, c) in self.points.iter().zip(self.coeffs.iter()) {
            let term = c * values.get(p)?;
            sum += term;
            scale = scale.max(term.norm());
        }
        Some((sum.norm(), scale))
    }

    /// Value at `points[slot]` that makes the relation hold.
    fn solve_for(&self, slot: usize, known: [Complex64; 2], equation: &'static str, at: LatticePoint) -> Result<Complex64> {
        let divisor = self.coeffs[slot];
        if divisor.norm() < DIVISOR_TOLERANCE {
            return Err(Error::Breakdown { equation, at, divisor: divisor.norm() });
        }
        let mut others = (0..3).filter(|&i| i != slot);
        let (i, j) = (others.next().unwrap(), others.next().unwrap());
        Ok(-(self.coeffs[i] * known[0] + self.coeffs[j] * known[1]) / divisor)
    }
}

/// E-invariance at `(n, m)`: points `(n+2, m)`, `(n, m+2)`, `(n, m)`.
pub fn e_stencil(dp: &DeformationParameter, triple: &TripleParams, (n, m): LatticePoint) -> Result<Stencil> {
    let coeffs = triple_e_coeffs(dp, triple, [n, m, -n - m - 2])?;
    Ok(Stencil { points: [(n + 2, m), (n, m + 2), (n, m)], coeffs })
}

/// F-invariance at `(n, m)`: points `(n-2, m)`, `(n, m-2)`, `(n, m)`.
pub fn f_stencil(dp: &DeformationParameter, triple: &TripleParams, (n, m): LatticePoint) -> Result<Stencil> {
    let coeffs = triple_f_coeffs(dp, triple, [n, m, -n - m + 2])?;
    Ok(Stencil { points: [(n - 2, m), (n, m - 2), (n, m)], coeffs })
}

/// Bonbon relation at `(n, m)`: points `(n-2, m+2)`, `(n, m)`, `(n+2, m-2)`.
///
/// Obtained from F-inv at `(n, m)` after eliminating `a(n-2, m)` with E-inv at
/// `(n-2, m)` and `a(n, m-2)` with E-inv at `(n, m-2)`; both E relations share
/// the diagonal coefficient `tau` of the lower level.
pub fn bonbon_stencil(dp: &DeformationParameter, triple: &TripleParams, (n, m): LatticePoint) -> Result<Stencil> {
    let [f1, f2, f3] = f_stencil(dp, triple, (n, m))?.coeffs;
    // E at (n-2, m): e1 a(n, m) + e2 a(n-2, m+2) + tau a(n-2, m)
    let [e1_left, e2_left, tau] = e_stencil(dp, triple, (n - 2, m))?.coeffs;
    // E at (n, m-2): e1 a(n+2, m-2) + e2 a(n, m) + tau a(n, m-2)
    let [e1_right, e2_right, _] = e_stencil(dp, triple, (n, m - 2))?.coeffs;
    Ok(Stencil {
        points: [(n - 2, m + 2), (n, m), (n + 2, m - 2)],
        coeffs: [
            -f1 * e2_left,
            f3 * tau - f1 * e1_left - f2 * e2_right,
            -f2 * e1_right,
        ],
    })
}

/// How the seed values on the lowest level were chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedCase {
    /// `eps1 = eps2 = 0`: `a(0, 0)` given, `a(2, -2)` from the bonbon relation
    /// at the origin with `a(-2, 2) = a(2, -2)`.
    Origin,
    /// `eps1 = eps2 = 1`: `a(1, -1) = a(-1, 1)` given.
    SymmetricPair,
    /// `eps1 != eps2`: the lowest level is `n + m = 1`. The point of smallest
    /// `|n|` is given and its neighbour follows from E-inv on level `-1`
    /// folded back by the involution.
    OddLevel,
    /// No weight-zero triples: the kernel is identically zero.
    Trivial,
}

impl SeedCase {
    pub fn id(&self) -> &'static str {
        match self {
            SeedCase::Origin => "origin",
            SeedCase::SymmetricPair => "symmetric-pair",
            SeedCase::OddLevel => "odd-level",
            SeedCase::Trivial => "trivial",
        }
    }

    pub fn from_id(id: &str) -> Option<Self> {
        [SeedCase::Origin, SeedCase::SymmetricPair, SeedCase::OddLevel, SeedCase::Trivial]
            .into_iter()
            .find(|c| c.id() == id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Seed {
    pub case: SeedCase,
    pub point: LatticePoint,
    pub value: Complex64,
}

/// Two consecutive points `p, p + (2, -2)` on the lowest level, with values.
pub type SeedPair = [(LatticePoint, Complex64); 2];

/// Seed point for a parity class.
pub fn seed_point(triple: &TripleParams) -> (SeedCase, LatticePoint) {
    if !triple.parity_compatible() {
        return (SeedCase::Trivial, (0, 0));
    }
    match triple.epsilons() {
        [0, 0, _] => (SeedCase::Origin, (0, 0)),
        [1, 1, _] => (SeedCase::SymmetricPair, (1, -1)),
        [0, 1, _] => (SeedCase::OddLevel, (0, 1)),
        _ => (SeedCase::OddLevel, (1, 0)),
    }
}

/// Origin seed ratio `a(2, -2) / a(0, 0)`:
///
/// ```text
/// ([(s3+1)/2][(s3-1)/2] - [(s1+1)/2][(s1-1)/2] - [(s2+1)/2][(s2-1)/2]) a(0,0)
///     = 2 [(s1+1)/2][(s2+1)/2] a(2,-2)
/// ```
pub fn origin_seed_ratio(dp: &DeformationParameter, triple: &TripleParams) -> Result<Complex64> {
    let [s1, s2, s3] = triple.s();
    let b = |x: Complex64| dp.bracket(x * 0.5);
    let lhs = b(s3 + 1.0)? * b(s3 - 1.0)? - b(s1 + 1.0)? * b(s1 - 1.0)? - b(s2 + 1.0)? * b(s2 - 1.0)?;
    let rhs = b(s1 + 1.0)? * b(s2 + 1.0)? * 2.0;
    if rhs.norm() < DIVISOR_TOLERANCE {
        return Err(Error::Degenerate(format!(
            "seed divisor 2[(s1+1)/2][(s2+1)/2] = {rhs} vanishes"
        )));
    }
    Ok(lhs / rhs)
}

/// Seed values (with unit normalization) on the lowest non-negative level.
pub fn seed_diagonal(dp: &DeformationParameter, triple: &TripleParams) -> Result<(SeedCase, SeedPair)> {
    let one = Complex64::new(1.0, 0.0);
    let (case, point) = seed_point(triple);
    let degenerate = |what: &str, c: Complex64| {
        Error::Degenerate(format!("seed divisor {what} = {c} vanishes"))
    };
    match case {
        SeedCase::Trivial => Err(Error::Degenerate(
            "eps3 != eps1 + eps2 (mod 2): no weight-zero triples to seed".into(),
        )),
        SeedCase::Origin => {
            let ratio = origin_seed_ratio(dp, triple)?;
            Ok((case, [((0, 0), one), ((2, -2), ratio)]))
        }
        SeedCase::SymmetricPair => Ok((case, [((-1, 1), one), ((1, -1), one)])),
        SeedCase::OddLevel if point == (0, 1) => {
            // E at (0, -1): c1 a(2, -1) + c2 a(0, 1) + c3 a(0, -1), a(0, -1) = a(0, 1).
            let [c1, c2, c3] = e_stencil(dp, triple, (0, -1))?.coeffs;
            if c1.norm() < DIVISOR_TOLERANCE {
                return Err(degenerate("c1", c1));
            }
            Ok((case, [((0, 1), one), ((2, -1), -(c2 + c3) / c1)]))
        }
        SeedCase::OddLevel => {
            // E at (-1, 0): c1 a(1, 0) + c2 a(-1, 2) + c3 a(-1, 0), a(-1, 0) = a(1, 0).
            let [c1, c2, c3] = e_stencil(dp, triple, (-1, 0))?.coeffs;
            if c2.norm() < DIVISOR_TOLERANCE {
                return Err(degenerate("c2", c2));
            }
            Ok((case, [((-1, 2), -(c1 + c3) / c2), ((1, 0), one)]))
        }
    }
}

/// `a(n+2, m-2)` from `a(n-2, m+2)` and `a(n, m)` by the bonbon relation at `(n, m)`.
pub fn step_antidiagonal(
    dp: &DeformationParameter,
    triple: &TripleParams,
    previous: Complex64,
    current: Complex64,
    at: LatticePoint,
) -> Result<Complex64> {
    bonbon_stencil(dp, triple, at)?.solve_for(2, [previous, current], "bonbon", at)
}

/// `a(n-2, m+2)` from `a(n+2, m-2)` and `a(n, m)` by the bonbon relation at `(n, m)`.
pub fn step_antidiagonal_back(
    dp: &DeformationParameter,
    triple: &TripleParams,
    next: Complex64,
    current: Complex64,
    at: LatticePoint,
) -> Result<Complex64> {
    bonbon_stencil(dp, triple, at)?.solve_for(0, [current, next], "bonbon", at)
}

/// New entries of one level, and the window points that could not be reached.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LevelExtension {
    pub entries: BTreeMap<LatticePoint, Complex64>,
    pub omitted: Vec<LatticePoint>,
}

/// Entries of level `level + 2` from level `level`, solving F-inv for its
/// diagonal term.
pub fn extend_up(
    dp: &DeformationParameter,
    triple: &TripleParams,
    window: &LatticeWindow,
    lower: &BTreeMap<LatticePoint, Complex64>,
    level: i32,
) -> Result<LevelExtension> {
    let mut out = LevelExtension::default();
    for target in window.level_points(level + 2) {
        let (n, m) = target;
        let (Some(&left), Some(&down)) = (lower.get(&(n - 2, m)), lower.get(&(n, m - 2))) else {
            out.omitted.push(target);
            continue;
        };
        let value = f_stencil(dp, triple, target)?.solve_for(2, [left, down], "F-inv", target)?;
        out.entries.insert(target, value);
    }
    Ok(out)
}

/// Walks the bonbon relation in both directions along the level of `pair`,
/// staying inside `window`.
fn fill_level(
    dp: &DeformationParameter,
    triple: &TripleParams,
    window: &LatticeWindow,
    pair: &SeedPair,
    forward_only: bool,
) -> Result<BTreeMap<LatticePoint, Complex64>> {
    let mut level = BTreeMap::new();
    let [(lo, lo_v), (hi, hi_v)] = *pair;
    level.insert(lo, lo_v);
    level.insert(hi, hi_v);

    let (mut prev, mut cur) = ((lo, lo_v), (hi, hi_v));
    loop {
        let next = (cur.0 .0 + 2, cur.0 .1 - 2);
        if !window.contains(next) {
            break;
        }
        let v = step_antidiagonal(dp, triple, prev.1, cur.1, cur.0)?;
        level.insert(next, v);
        prev = cur;
        cur = (next, v);
    }
    if !forward_only {
        let (mut next, mut cur) = ((hi, hi_v), (lo, lo_v));
        loop {
            let before = (cur.0 .0 - 2, cur.0 .1 + 2);
            if !window.contains(before) {
                break;
            }
            let v = step_antidiagonal_back(dp, triple, next.1, cur.1, cur.0)?;
            level.insert(before, v);
            next = cur;
            cur = (before, v);
        }
    }
    Ok(level)
}

/// Kernel values on a window, with the parameters that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable {
    pub triple: TripleParams,
    pub dp: DeformationParameter,
    pub window: LatticeWindow,
    pub seed: Seed,
    /// Set when the triple is parity-incompatible and the kernel is zero.
    pub trivial: bool,
    /// Set when some module has `s - eps` at an odd integer. The construction
    /// still runs; uniqueness is not guaranteed.
    pub reducible: bool,
    pub values: BTreeMap<LatticePoint, Complex64>,
    /// Window points whose construction stencil left the window.
    pub omitted: Vec<LatticePoint>,
}

impl KernelTable {
    pub fn get(&self, p: LatticePoint) -> Complex64 {
        self.values.get(&p).copied().unwrap_or_default()
    }

    /// Largest entry magnitude.
    pub fn max_norm(&self) -> f64 {
        self.values.values().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Builds the kernel on the diamond of radius `radius`, scaled so the seed
/// point carries `seed_scale`.
pub fn build_kernel(
    dp: &DeformationParameter,
    triple: &TripleParams,
    radius: u32,
    seed_scale: Complex64,
) -> Result<KernelTable> {
    if radius < 4 {
        return Err(Error::InvalidWindow(format!("kernel construction needs W >= 4, got {radius}")));
    }
    let window = LatticeWindow::for_triple(radius, triple)?;
    let (case, point) = seed_point(triple);
    if case == SeedCase::Trivial {
        return Ok(KernelTable {
            triple: *triple,
            dp: *dp,
            window,
            seed: Seed { case, point, value: Complex64::new(0.0, 0.0) },
            trivial: true,
            reducible: !triple.irreducible(),
            values: BTreeMap::new(),
            omitted: Vec::new(),
        });
    }
    let (_, mut pair) = seed_diagonal(dp, triple)?;
    for entry in pair.iter_mut() {
        entry.1 *= seed_scale;
    }

    let base = window.base_level();
    // Level 0 is its own mirror image: walk forward and reflect. Level 1 is
    // walked both ways and reflected onto level -1.
    let mut values = fill_level(dp, triple, &window, &pair, base == 0)?;
    if base == 0 {
        let positive: Vec<_> = values.iter().filter(|(p, _)| p.0 > 0).map(|(p, v)| (*p, *v)).collect();
        for ((n, m), v) in positive {
            values.insert((-n, -m), v);
        }
    }

    let mut omitted = Vec::new();
    let mut level = base;
    while level + 2 <= radius as i32 {
        let ext = extend_up(dp, triple, &window, &values, level)?;
        omitted.extend(ext.omitted);
        values.extend(ext.entries);
        level += 2;
    }
    let upper: Vec<_> = values.iter().filter(|(p, _)| p.0 + p.1 > 0).map(|(p, v)| (*p, *v)).collect();
    for ((n, m), v) in upper {
        values.insert((-n, -m), v);
    }

    let value = values[&point];
    Ok(KernelTable {
        triple: *triple,
        dp: *dp,
        window,
        seed: Seed { case, point, value },
        trivial: false,
        reducible: !triple.irreducible(),
        values,
        omitted,
    })
}

/// The construction without the involution: both lowest-level values are
/// given, the bonbon relation is walked both ways along that level and F-inv
/// raises levels. Only non-negative levels are produced.
pub fn build_upper_half(
    dp: &DeformationParameter,
    triple: &TripleParams,
    radius: u32,
    pair: SeedPair,
) -> Result<BTreeMap<LatticePoint, Complex64>> {
    let window = LatticeWindow::for_triple(radius, triple)?;
    let base = window.base_level();
    let [(lo, _), (hi, _)] = pair;
    if lo.0 + lo.1 != base || hi != (lo.0 + 2, lo.1 - 2) || !window.contains(lo) || !window.contains(hi) {
        return Err(Error::InvalidWindow(format!(
            "seed points {lo:?}, {hi:?} must be consecutive window points on level {base}"
        )));
    }
    let mut values = fill_level(dp, triple, &window, &pair, false)?;
    let mut level = base;
    while level + 2 <= radius as i32 {
        let ext = extend_up(dp, triple, &window, &values, level)?;
        values.extend(ext.entries);
        level += 2;
    }
    Ok(values)
}

/// Residual statistics of one equation family.
#[derive(Debug, Clone, PartialEq)]
pub struct EquationResidual {
    pub equation: Equation,
    /// Largest normalized residual.
    pub max_abs: f64,
    pub mean_abs: f64,
    /// Largest term magnitude used to normalize a residual.
    pub normalization: f64,
    pub worst: Option<LatticePoint>,
    pub evaluated: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResidualReport {
    pub entries: Vec<EquationResidual>,
}

impl ResidualReport {
    pub fn get(&self, equation: Equation) -> Option<&EquationResidual> {
        self.entries.iter().find(|e| e.equation == equation)
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|e| e.max_abs).fold(0.0, f64::max)
    }

    pub fn passes(&self, tolerance: f64) -> bool {
        self.entries.iter().all(|e| e.max_abs < tolerance)
    }
}

struct Accumulator {
    equation: Equation,
    max: f64,
    sum: f64,
    norm: f64,
    worst: Option<LatticePoint>,
    count: usize,
}

impl Accumulator {
    fn new(equation: Equation) -> Self {
        Self { equation, max: 0.0, sum: 0.0, norm: 0.0, worst: None, count: 0 }
    }

    fn push(&mut self, at: LatticePoint, (abs, scale): (f64, f64)) {
        let r = if scale == 0.0 { 0.0 } else { abs / scale };
        self.count += 1;
        self.sum += r;
        self.norm = self.norm.max(scale);
        if r > self.max || self.worst.is_none() {
            self.max = self.max.max(r);
            self.worst = Some(at);
        }
    }

    fn finish(self) -> EquationResidual {
        EquationResidual {
            equation: self.equation,
            max_abs: self.max,
            mean_abs: if self.count == 0 { 0.0 } else { self.sum / self.count as f64 },
            normalization: self.norm,
            worst: self.worst,
            evaluated: self.count,
        }
    }
}

/// Evaluates every equation at every point of `values` whose whole stencil
/// carries a value. Each residual is divided by the largest term magnitude of
/// its equation at that point.
pub fn residuals_of(
    dp: &DeformationParameter,
    triple: &TripleParams,
    values: &BTreeMap<LatticePoint, Complex64>,
) -> Result<ResidualReport> {
    let mut sym = Accumulator::new(Equation::Symmetry);
    let mut e = Accumulator::new(Equation::EInvariance);
    let mut f = Accumulator::new(Equation::FInvariance);
    let mut b = Accumulator::new(Equation::Bonbon);
    for (&p, &v) in values {
        let (n, m) = p;
        if (n, m) < (-n, -m) {
            if let Some(&w) = values.get(&(-n, -m)) {
                sym.push(p, ((v - w).norm(), v.norm().max(w.norm())));
            }
        }
        if let Some(r) = e_stencil(dp, triple, p)?.evaluate(values) {
            e.push(p, r);
        }
        if let Some(r) = f_stencil(dp, triple, p)?.evaluate(values) {
            f.push(p, r);
        }
        if let Some(r) = bonbon_stencil(dp, triple, p)?.evaluate(values) {
            b.push(p, r);
        }
    }
    Ok(ResidualReport {
        entries: vec![sym.finish(), e.finish(), f.finish(), b.finish()],
    })
}

/// [`residuals_of`] on a built table.
pub fn residuals(dp: &DeformationParameter, triple: &TripleParams, table: &KernelTable) -> Result<ResidualReport> {
    residuals_of(dp, triple, &table.values)
}

/// `max |a/a(p) - b/b(p)| / max |b/b(p)|` over the common points of two value
/// maps, after normalizing both at `p`.
pub fn normalized_deviation(
    a: &BTreeMap<LatticePoint, Complex64>,
    b: &BTreeMap<LatticePoint, Complex64>,
    at: LatticePoint,
) -> Result<f64> {
    let a0 = a.get(&at).copied().unwrap_or_default();
    let b0 = b.get(&at).copied().unwrap_or_default();
    if a0.norm() == 0.0 || b0.norm() == 0.0 {
        return Err(Error::Degenerate(format!("cannot normalize at {at:?}: value is zero")));
    }
    let mut diff: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for (p, x) in a {
        if let Some(y) = b.get(p) {
            let y = y / b0;
            diff = diff.max((x / a0 - y).norm());
            scale = scale.max(y.norm());
        }
    }
    Ok(diff / scale)
}

/// One row of a `q -> 1` sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitRow {
    pub j: i32,
    pub q: f64,
    pub deviation: f64,
}

/// Deviation of the kernel at `q = 1 - 10^-j` from the classical kernel, both
/// normalized at the seed point, for each `j` in `exponents`.
pub fn limit_sweep(
    triple: &TripleParams,
    radius: u32,
    exponents: impl IntoIterator<Item = i32>,
) -> Result<Vec<LimitRow>> {
    let one = Complex64::new(1.0, 0.0);
    let classical = build_kernel(&DeformationParameter::classical(), triple, radius, one)?;
    if classical.trivial {
        return Err(Error::Degenerate("limit sweep needs a parity-compatible triple".into()));
    }
    exponents
        .into_iter()
        .map(|j| {
            let q = 1.0 - 10f64.powi(-j);
            let dp = DeformationParameter::quantum(Complex64::new(q, 0.0))?;
            let table = build_kernel(&dp, triple, radius, one)?;
            let deviation = normalized_deviation(&table.values, &classical.values, classical.seed.point)?;
            Ok(LimitRow { j, q, deviation })
        })
        .collect()
}
