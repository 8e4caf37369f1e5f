//! Brute-force check of the kernel: assemble every invariance equation on a
//! window as one homogeneous linear system and read its nullspace off a
//! singular value decomposition.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::kernel::{bonbon_stencil, e_stencil, f_stencil, normalized_deviation, Equation, KernelTable, LatticeWindow};
use crate::qspecial::DeformationParameter;
use crate::repr::TripleParams;
use crate::{Complex64, Error, LatticePoint, Result};

/// Equations assembled by [`assemble`].
pub const DEFAULT_EQUATIONS: [Equation; 3] = [Equation::Symmetry, Equation::EInvariance, Equation::FInvariance];

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub equation: Equation,
    pub at: LatticePoint,
    /// `(column, coefficient)` pairs.
    pub entries: Vec<(usize, Complex64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssembledSystem {
    pub window: LatticeWindow,
    pub unknowns: Vec<LatticePoint>,
    pub rows: Vec<Row>,
}

impl AssembledSystem {
    pub fn column(&self, p: LatticePoint) -> Option<usize> {
        self.unknowns.binary_search(&p).ok()
    }

    pub fn count(&self, equation: Equation) -> usize {
        self.rows.iter().filter(|r| r.equation == equation).count()
    }

    /// Largest `|row . a| / max_i |row_i a_i|` over all rows.
    pub fn max_row_residual(&self, values: &BTreeMap<LatticePoint, Complex64>) -> f64 {
        let mut worst: f64 = 0.0;
        for row in &self.rows {
            let mut sum = Complex64::new(0.0, 0.0);
            let mut scale: f64 = 0.0;
            for &(j, c) in &row.entries {
                let term = c * values.get(&self.unknowns[j]).copied().unwrap_or_default();
                sum += term;
                scale = scale.max(term.norm());
            }
            if scale > 0.0 {
                worst = worst.max(sum.norm() / scale);
            }
        }
        worst
    }

    fn to_matrix(&self) -> DMatrix<Complex64> {
        let cols = self.unknowns.len();
        let rows = self.rows.len().max(cols);
        let mut m = DMatrix::<Complex64>::zeros(rows, cols);
        for (i, row) in self.rows.iter().enumerate() {
            let scale = row.entries.iter().map(|(_, c)| c.norm()).fold(0.0, f64::max);
            if scale == 0.0 {
                continue;
            }
            for &(j, c) in &row.entries {
                m[(i, j)] += c / scale;
            }
        }
        m
    }
}

/// Symmetry, E-inv and F-inv rows on the diamond of radius `radius`.
pub fn assemble(dp: &DeformationParameter, triple: &TripleParams, radius: u32) -> Result<AssembledSystem> {
    assemble_with(dp, triple, radius, &DEFAULT_EQUATIONS)
}

/// Rows of the selected equations at every window point whose stencil lies in
/// the window. Parity-incompatible triples give a system with no unknowns.
pub fn assemble_with(
    dp: &DeformationParameter,
    triple: &TripleParams,
    radius: u32,
    equations: &[Equation],
) -> Result<AssembledSystem> {
    let window = LatticeWindow::for_triple(radius, triple)?;
    if !triple.parity_compatible() {
        return Ok(AssembledSystem { window, unknowns: Vec::new(), rows: Vec::new() });
    }
    let unknowns = window.points();
    let mut sys = AssembledSystem { window, unknowns, rows: Vec::new() };
    let mut rows = Vec::new();
    for equation in equations {
        for &p in &sys.unknowns {
            let stencil = match equation {
                Equation::Symmetry => {
                    let q = (-p.0, -p.1);
                    if p < q {
                        let (i, j) = (sys.column(p).unwrap(), sys.column(q).unwrap());
                        let one = Complex64::new(1.0, 0.0);
                        rows.push(Row { equation: *equation, at: p, entries: vec![(i, one), (j, -one)] });
                    }
                    continue;
                }
                Equation::EInvariance => e_stencil(dp, triple, p)?,
                Equation::FInvariance => f_stencil(dp, triple, p)?,
                Equation::Bonbon => bonbon_stencil(dp, triple, p)?,
            };
            let cols: Option<Vec<usize>> = stencil.points.iter().map(|&q| sys.column(q)).collect();
            if let Some(cols) = cols {
                let entries = cols.into_iter().zip(stencil.coeffs).collect();
                rows.push(Row { equation: *equation, at: p, entries });
            }
        }
    }
    sys.rows = rows;
    Ok(sys)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NullspaceResult {
    /// Singular values of the row-normalized matrix, descending.
    pub singular_values: Vec<f64>,
    pub nullity: usize,
    pub threshold: f64,
    /// Orthonormal nullspace basis.
    pub basis: Vec<BTreeMap<LatticePoint, Complex64>>,
}

impl NullspaceResult {
    /// Smallest retained singular value over the largest null one.
    pub fn gap(&self) -> f64 {
        let k = self.singular_values.len() - self.nullity;
        if self.nullity == 0 || k == 0 {
            return f64::INFINITY;
        }
        let null = self.singular_values[k];
        if null == 0.0 {
            f64::INFINITY
        } else {
            self.singular_values[k - 1] / null
        }
    }
}

/// Numerical nullspace: singular values below `threshold * sigma_max` count
/// as zero. Rows are scaled to unit max-norm first.
pub fn nullspace(sys: &AssembledSystem, threshold: f64) -> Result<NullspaceResult> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::Domain(format!("threshold must lie in (0, 1), got {threshold}")));
    }
    if sys.unknowns.is_empty() {
        return Ok(NullspaceResult { singular_values: Vec::new(), nullity: 0, threshold, basis: Vec::new() });
    }
    let matrix = sys.to_matrix();
    let svd = nalgebra::SVD::try_new(matrix, false, true, f64::EPSILON, 0).ok_or(Error::NoConvergence)?;
    let v_t = svd.v_t.ok_or(Error::NoConvergence)?;

    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let singular_values: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let cutoff = threshold * singular_values[0];
    let nullity = singular_values.iter().filter(|&&s| s < cutoff).count();

    let basis = order[order.len() - nullity..]
        .iter()
        .rev()
        .map(|&i| {
            sys.unknowns
                .iter()
                .enumerate()
                .map(|(j, &p)| (p, v_t[(i, j)].conj()))
                .collect::<BTreeMap<_, _>>()
        })
        .collect();
    Ok(NullspaceResult { singular_values, nullity, threshold, basis })
}

/// Deviation between the first basis vector and a recursive table, both
/// normalized at the table's seed point.
pub fn compare_with_table(result: &NullspaceResult, table: &KernelTable) -> Result<f64> {
    let basis = result
        .basis
        .first()
        .ok_or_else(|| Error::Degenerate("nullspace is empty; nothing to compare".into()))?;
    normalized_deviation(basis, &table.values, table.seed.point)
}

/// `v(to) / v(from)` for the first basis vector.
pub fn basis_ratio(result: &NullspaceResult, from: LatticePoint, to: LatticePoint) -> Result<Complex64> {
    let basis = result
        .basis
        .first()
        .ok_or_else(|| Error::Degenerate("nullspace is empty".into()))?;
    let a = basis.get(&from).copied().unwrap_or_default();
    let b = basis.get(&to).copied().unwrap_or_default();
    if a.norm() == 0.0 {
        return Err(Error::Degenerate(format!("basis vanishes at {from:?}")));
    }
    Ok(b / a)
}
