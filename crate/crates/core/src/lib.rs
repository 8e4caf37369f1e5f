//! Invariant trilinear functionals on triple tensor products of
//! principal-series modules over `sl2` and its quantum deformation
//! `Uq(sl2)`.
//!
//! The crate is organised bottom-up:
//!
//! - [`qspecial`]: complex q-arithmetic, q-Pochhammer symbols, the q-Gamma
//!   function and the auxiliary function `phi` with `phi(x+1) = [x]_q phi(x)`.
//! - [`repr`]: the modules `M(s, eps)` / `M_q(s, eps)`, their E/F/K action
//!   coefficients, the action on triple tensors and the reflection
//!   intertwiners `R(s): M(s) -> M(-s)`.
//! - [`kernel`]: the inductive construction of the kernel `a(n, m)` of an
//!   invariant functional on a finite lattice window, and residual evaluation
//!   of every defining equation.
//! - [`diffops`]: the classical difference operators `L+`, `L-` on lattice
//!   functions.
//! - [`oracle`]: brute-force assembly of the invariance system and its
//!   numerical nullspace.
//! - [`io`]: stable JSON / CSV encodings.
//! - [`cli`]: the `uqtri` command-line driver.

pub mod cli;
pub mod diffops;
mod error;
pub mod io;
pub mod kernel;
pub mod oracle;
pub mod qspecial;
pub mod repr;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// A point `(n, m)` of the weight lattice; the third weight is `-n - m`.
pub type LatticePoint = (i32, i32);

/// Magnitude below which a divisor is treated as zero.
pub const DIVISOR_TOLERANCE: f64 = 1e-12;
