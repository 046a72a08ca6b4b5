//! Eigenvalue-based conditions: Dirichlet eigenvalues, Faber–Krahn, Poincaré, Nash and heat kernels.

mod heat;

pub use heat::{chained_a, dirichlet_heat_kernel, heat_bound_fit, HeatBound, HeatKernel};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dirichlet::DirichletForm;
use crate::error::{Error, Result};
use crate::linalg;
use crate::mmspace::{Ball, PointSet};
use crate::tol;

/// `μ^{-1/2} K_D μ^{-1/2}`, whose spectrum is the Dirichlet spectrum of `D`.
pub(crate) fn weighted_dirichlet(form: &DirichletForm, d: &PointSet) -> DMatrix<f64> {
    let mu = form.space().mu();
    let k = form.dirichlet_matrix(d);
    let s: Vec<f64> = d.iter().map(|i| mu[i].sqrt().recip()).collect();
    DMatrix::from_fn(d.len(), d.len(), |a, b| k[(a, b)] * s[a] * s[b])
}

/// Smallest Dirichlet eigenvalue `λ1(D) = min E(u,u)/‖u‖²` over `u` supported in `D`.
pub fn lambda1(form: &DirichletForm, d: &PointSet) -> Result<f64> {
    lambda1_with_limit(form, d, tol::DENSE_LIMIT)
}

/// As [`lambda1`], switching to power iteration when `|D|` exceeds `dense_limit`.
pub fn lambda1_with_limit(form: &DirichletForm, d: &PointSet, dense_limit: usize) -> Result<f64> {
    if d.is_empty() {
        return Err(Error::Invalid("lambda1 of an empty set".into()));
    }
    if d.len() <= dense_limit {
        let (vals, _) = linalg::sorted_eigen(weighted_dirichlet(form, d));
        return Ok(vals[0].max(0.0));
    }
    let mu = form.space().mu();
    let idx = d.indices().to_vec();
    let pos = d.positions();
    let scale: Vec<f64> = idx.iter().map(|&i| mu[i].sqrt().recip()).collect();
    let upper = idx
        .iter()
        .map(|&x| 2.0 * form.degree(x) / mu[x])
        .fold(0.0, f64::max);
    let apply = |v: &DVector<f64>| {
        DVector::from_iterator(
            idx.len(),
            idx.iter().enumerate().map(|(a, &x)| {
                let mut acc = form.degree(x) * scale[a] * v[a];
                for l in form.links(x) {
                    if let Some(b) = pos[l.to] {
                        acc -= l.weight() * scale[b] * v[b];
                    }
                }
                acc * scale[a]
            }),
        )
    };
    Ok(linalg::smallest_eig_iterative(idx.len(), upper, apply, 2_000_000)?.max(0.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FkReport {
    /// `C_F^{-1}`.
    pub c_f_inv: f64,
    pub nu: f64,
    /// Raw least-squares slope before normalization into `(0,1)`.
    pub nu_fit: f64,
    pub note: Option<String>,
    pub pass: bool,
    pub witness: Option<(Ball, Vec<usize>)>,
    pub pairs: usize,
}

/// Fits `ν` by least squares on `ln(λ1(D) w(B))` against `ln(μ(B)/μ(D))`, then the largest
/// `C_F^{-1}` with `λ1(D) >= C_F^{-1}/w(B) (μ(B)/μ(D))^ν` over all pairs.
pub fn fk_constants(form: &DirichletForm, pairs: &[(Ball, PointSet)]) -> Result<FkReport> {
    if pairs.is_empty() {
        return Err(Error::Invalid(
            "Faber–Krahn fit needs at least one (B, D) pair".into(),
        ));
    }
    let s = form.space();
    let pts: Vec<(f64, f64)> = pairs
        .par_iter()
        .map(|(b, d)| {
            let l = lambda1(form, d)?;
            let bs = s.ball_points(b);
            Ok((l * s.w_ball(b), s.mass(&bs) / s.mass(d)))
        })
        .collect::<Result<_>>()?;
    let zero = |y: f64| y <= tol::NULL_EIG;
    let good: Vec<(f64, f64)> = pts
        .iter()
        .filter(|p| !zero(p.0))
        .map(|&(y, x)| (x.ln(), y.ln()))
        .collect();
    let nu_fit = if good.len() >= 2 {
        let n = good.len() as f64;
        let mx = good.iter().map(|p| p.0).sum::<f64>() / n;
        let my = good.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = good.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = good.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        if sxx > 0.0 {
            sxy / sxx
        } else {
            f64::NAN
        }
    } else {
        f64::NAN
    };
    let (nu, note) = if !nu_fit.is_finite() {
        (
            0.5,
            Some("volume ratios do not vary; nu set to 0.5".to_string()),
        )
    } else if nu_fit >= 1.0 {
        (
            0.99,
            Some(format!("fitted nu {nu_fit:.4} >= 1 clamped to 0.99")),
        )
    } else if nu_fit <= 0.0 {
        (
            0.01,
            Some(format!("fitted nu {nu_fit:.4} <= 0 raised to 0.01")),
        )
    } else {
        (nu_fit, None)
    };
    let mut best = (f64::INFINITY, 0usize);
    for (k, &(y, x)) in pts.iter().enumerate() {
        let c = if zero(y) { 0.0 } else { y / x.powf(nu) };
        if c < best.0 {
            best = (c, k);
        }
    }
    let (b, d) = &pairs[best.1];
    Ok(FkReport {
        c_f_inv: best.0,
        nu,
        nu_fit,
        note,
        pass: best.0 > 0.0,
        witness: Some((*b, d.indices().to_vec())),
        pairs: pairs.len(),
    })
}

/// Energy matrix of `E` on `κB`: local edges inside `κB` and jump pairs inside `κB × κB`.
fn pi_matrices(form: &DirichletForm, b: &Ball, kappa: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let s = form.space();
    let big = s.ball_points(&b.scaled(kappa));
    let small = s.ball_points(b);
    let e = form.neumann_matrix(&big);
    let m_b = s.mass(&small);
    let mu = s.mu();
    let idx = big.indices();
    // Variance form: Σ_B μ u² - (Σ_B μ u)² / μ(B).
    let v = DMatrix::from_fn(idx.len(), idx.len(), |a, c| {
        let (x, y) = (idx[a], idx[c]);
        if !small.contains(x) || !small.contains(y) {
            return 0.0;
        }
        let diag = if a == c { mu[x] } else { 0.0 };
        diag - mu[x] * mu[y] / m_b
    });
    (v, e)
}

/// Best constant in `∫_B (u - u_B)² <= C w(B) E_{κB}(u)`; `+∞` when the energy on `κB` vanishes
/// on a function that is not constant on `B`.
pub fn poincare_constant(form: &DirichletForm, b: &Ball, kappa: f64) -> Result<f64> {
    if kappa < 1.0 {
        return Err(Error::Param(format!("kappa = {kappa} must be >= 1")));
    }
    let (v, e) = pi_matrices(form, b, kappa);
    let (evals, evecs) = linalg::sorted_eigen(e);
    let top = evals.last().copied().unwrap_or(0.0).abs();
    let vscale = v.amax().max(tol::ABS);
    let cut = tol::NULL_EIG * top.max(1e-300);
    let mut range = Vec::new();
    for (k, &lam) in evals.iter().enumerate() {
        let q = evecs.column(k);
        if lam <= cut {
            let var = (q.transpose() * &v * q)[(0, 0)];
            if var > 1e-9 * vscale {
                return Ok(f64::INFINITY);
            }
        } else {
            range.push(k);
        }
    }
    if range.is_empty() {
        return Ok(0.0);
    }
    let m = v.nrows();
    let basis = DMatrix::from_fn(m, range.len(), |i, c| {
        evecs[(i, range[c])] / evals[range[c]].sqrt()
    });
    let reduced = basis.transpose() * &v * &basis;
    let (rv, _) = linalg::sorted_eigen(reduced);
    let w = form.space().w_ball(b);
    Ok(rv.last().copied().unwrap_or(0.0).max(0.0) / w)
}

/// Rayleigh quotient `∫_B (u-u_B)² / (w(B) E_{κB}(u))` for one function.
pub fn poincare_ratio(form: &DirichletForm, b: &Ball, kappa: f64, u: &[f64]) -> f64 {
    let s = form.space();
    let big = s.ball_points(&b.scaled(kappa));
    let (v, e) = pi_matrices(form, b, kappa);
    let x = DVector::from_iterator(big.len(), big.iter().map(|i| u[i]));
    let num = x.dot(&(&v * &x));
    let den = x.dot(&(&e * &x)) * s.w_ball(b);
    num / den
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NashReport {
    pub constant: f64,
    pub worst_sample: usize,
}

/// `max ‖u‖₂^{2+2ν} μ(B)^ν / (‖u‖₁^{2ν} (‖u‖₂² + w(B) E(u,u)))` over samples supported in `B`.
pub fn nash_check(
    form: &DirichletForm,
    b: &Ball,
    samples: &[Vec<f64>],
    nu: f64,
) -> Result<NashReport> {
    let s = form.space();
    let bs = s.ball_points(b);
    let mb = s.mass(&bs);
    let w = s.w_ball(b);
    let mut rep = NashReport {
        constant: 0.0,
        worst_sample: 0,
    };
    for (k, u) in samples.iter().enumerate() {
        if let Some(i) = (0..u.len()).find(|&i| u[i] != 0.0 && !bs.contains(i)) {
            return Err(Error::Invalid(format!(
                "Nash sample {k} is nonzero at {i} outside the ball"
            )));
        }
        let l1: f64 = bs.iter().map(|i| u[i].abs() * s.mu()[i]).sum();
        let l2sq: f64 = bs.iter().map(|i| u[i] * u[i] * s.mu()[i]).sum();
        if l1 == 0.0 {
            return Err(Error::Invalid(format!(
                "Nash sample {k} is identically zero"
            )));
        }
        let ratio =
            l2sq.powf(1.0 + nu) * mb.powf(nu) / (l1.powf(2.0 * nu) * (l2sq + w * form.quad(u)));
        if ratio > rep.constant {
            rep = NashReport {
                constant: ratio,
                worst_sample: k,
            };
        }
    }
    Ok(rep)
}
