//! Numerical tolerances shared by every module.

/// Relative tolerance for identities between computed quantities.
pub const REL: f64 = 1e-9;

/// Absolute floor added to relative comparisons.
pub const ABS: f64 = 1e-12;

/// Residual bound for linear solves, relative to the right-hand side scale.
pub const SOLVE_RESIDUAL: f64 = 1e-10;

/// Eigenvalues below this fraction of the spectral radius count as zero.
pub const NULL_EIG: f64 = 1e-10;

/// Matrix size above which eigenvalues come from iteration instead of a dense solver.
pub const DENSE_LIMIT: usize = 2000;

/// `a >= b` up to the shared relative tolerance.
pub fn ge(a: f64, b: f64) -> bool {
    a >= b - REL * a.abs().max(b.abs()) - ABS
}

/// `a <= b` up to the shared relative tolerance.
pub fn le(a: f64, b: f64) -> bool {
    ge(b, a)
}
