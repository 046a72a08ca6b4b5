//! Thin wrappers over dense nalgebra routines with residual checks.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::tol;

/// Solve `K x = b` for symmetric positive definite `K`; falls back to LU when Cholesky fails.
pub fn solve_spd(k: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let x = match k.clone().cholesky() {
        Some(c) => c.solve(b),
        None => k
            .clone()
            .lu()
            .solve(b)
            .ok_or_else(|| Error::Numerical("singular linear system".into()))?,
    };
    let scale = b.amax().max(k.amax() * x.amax()).max(1.0);
    let res = (k * &x - b).amax();
    if !res.is_finite() || res > tol::SOLVE_RESIDUAL * scale {
        return Err(Error::Numerical(format!(
            "solve residual {res:e} exceeds tolerance"
        )));
    }
    Ok(x)
}

/// Eigen-decomposition with eigenvalues sorted ascending and matching eigenvector columns.
pub fn sorted_eigen(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let e = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| e.eigenvalues[a].total_cmp(&e.eigenvalues[b]));
    let vals = order.iter().map(|&i| e.eigenvalues[i]).collect();
    let mut vecs = DMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vecs.set_column(k, &e.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// Smallest eigenvalue of a symmetric matrix given only as a matrix-vector product.
///
/// Power iteration on `s I - A` where `s` bounds the spectrum from above (Gershgorin), stopped once
/// the Rayleigh residual drops below `tol::NULL_EIG * s`.
pub fn smallest_eig_iterative<F>(n: usize, upper: f64, apply: F, max_iter: usize) -> Result<f64>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let mut v = DVector::from_fn(n, |i, _| 1.0 + ((i * 7919) % 13) as f64 / 13.0);
    v /= v.norm();
    let mut lambda = 0.0;
    for _ in 0..max_iter {
        let av = apply(&v);
        lambda = v.dot(&av);
        let res = (&av - &v * lambda).norm();
        if res <= tol::NULL_EIG * upper.max(1.0) {
            return Ok(lambda);
        }
        let mut next = &v * upper - av;
        let nrm = next.norm();
        if nrm == 0.0 {
            return Ok(upper);
        }
        next /= nrm;
        v = next;
    }
    Err(Error::Numerical(format!(
        "power iteration did not converge (last estimate {lambda:e})"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spd_solve_and_residual() {
        let k = DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0]);
        let x = solve_spd(&k, &DVector::from_vec(vec![1.0, 1.0])).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
        let sing = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(solve_spd(&sing, &DVector::from_vec(vec![1.0, 0.0])).is_err());
    }

    #[test]
    fn iterative_matches_dense() {
        let n = 12;
        let m = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                2.0
            } else if i.abs_diff(j) == 1 {
                -1.0
            } else {
                0.0
            }
        });
        let (vals, _) = sorted_eigen(m.clone());
        let it = smallest_eig_iterative(n, 4.0, |v| &m * v, 200_000).unwrap();
        assert!((it - vals[0]).abs() < 1e-8, "{it} vs {}", vals[0]);
    }
}
