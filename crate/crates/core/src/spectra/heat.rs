use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::weighted_dirichlet;
use crate::dirichlet::DirichletForm;
use crate::error::{Error, Result};
use crate::linalg;
use crate::mmspace::Ball;

/// Dirichlet heat kernel of a ball: `table[(a, b)] = p_t^B(points[a], points[b])`.
#[derive(Clone, Debug)]
pub struct HeatKernel {
    pub points: Vec<usize>,
    pub table: DMatrix<f64>,
}

struct Spectral {
    points: Vec<usize>,
    vals: Vec<f64>,
    vecs: DMatrix<f64>,
    inv_sqrt_mu: Vec<f64>,
}

impl Spectral {
    fn new(form: &DirichletForm, b: &Ball) -> Self {
        let s = form.space();
        let set = s.ball_points(b);
        let (vals, vecs) = linalg::sorted_eigen(weighted_dirichlet(form, &set));
        let inv_sqrt_mu = set.iter().map(|i| s.mu()[i].sqrt().recip()).collect();
        Spectral {
            points: set.indices().to_vec(),
            vals,
            vecs,
            inv_sqrt_mu,
        }
    }

    fn kernel(&self, t: f64) -> DMatrix<f64> {
        let m = self.points.len();
        let decay = DMatrix::from_fn(m, m, |i, j| {
            self.vecs[(i, j)] * (-t * self.vals[j].max(0.0)).exp()
        });
        let core = decay * self.vecs.transpose();
        DMatrix::from_fn(m, m, |a, b| {
            core[(a, b)] * self.inv_sqrt_mu[a] * self.inv_sqrt_mu[b]
        })
    }
}

/// `p_t^B(x,y) = exp(-t L_B)[x][y] / μ(y)`, computed from the symmetric eigen-decomposition.
pub fn dirichlet_heat_kernel(form: &DirichletForm, b: &Ball, t: f64) -> Result<HeatKernel> {
    if !(t > 0.0) {
        return Err(Error::Param(format!(
            "heat kernel time t = {t} must be positive"
        )));
    }
    let sp = Spectral::new(form, b);
    Ok(HeatKernel {
        table: sp.kernel(t),
        points: sp.points,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatBound {
    /// Smallest `C` with `sup p_t^B <= C/μ(B) (w(B)/t)^{1/ν}` over the tested balls and times.
    pub c: f64,
    pub nu: f64,
    pub witness: Option<(Ball, f64)>,
    pub evaluated: usize,
}

/// Fits the on-diagonal constant over balls and times `t = w(B) * factor`.
pub fn heat_bound_fit(form: &DirichletForm, balls: &[Ball], nu: f64, factors: &[f64]) -> HeatBound {
    let s = form.space();
    let per: Vec<(f64, Ball, f64)> = balls
        .par_iter()
        .map(|b| {
            let sp = Spectral::new(form, b);
            let mb: f64 = sp.points.iter().map(|&i| s.mu()[i]).sum();
            let wb = s.w_ball(b);
            let mut best = (0.0, *b, 0.0);
            for &f in factors {
                let t = wb * f;
                let sup = sp.kernel(t).max();
                let c = sup * mb * (t / wb).powf(1.0 / nu);
                if c > best.0 {
                    best = (c, *b, t);
                }
            }
            best
        })
        .collect();
    let mut out = HeatBound {
        c: 0.0,
        nu,
        witness: None,
        evaluated: per.len() * factors.len(),
    };
    for (c, b, t) in per {
        if c > out.c {
            out.c = c;
            out.witness = Some((b, t));
        }
    }
    out
}

/// Radius shrink `A = C_d^{-1/d1} (2C)^{1/(ν d1)}` chained from the reverse-doubling and Nash constants.
pub fn chained_a(c_d: f64, d1: f64, nu: f64, c: f64) -> f64 {
    c_d.powf(-1.0 / d1) * (2.0 * c).powf(1.0 / (nu * d1))
}
