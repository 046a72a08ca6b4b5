use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{solve_f_harmonic, BoundaryValueProblem};
use crate::dirichlet::DirichletForm;
use crate::error::Result;
use crate::mmspace::Ball;
use crate::seed;

/// Mean exit time `E^B`: the solution of `E(E^B, φ) = (1, φ)` on `B`, zero outside.
pub fn mean_exit_time(form: &DirichletForm, b: &Ball) -> Result<Vec<f64>> {
    let n = form.n();
    let domain = form.space().ball_points(b);
    solve_f_harmonic(
        form,
        &BoundaryValueProblem {
            domain,
            f: vec![1.0; n],
            g: vec![0.0; n],
        },
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExitReport {
    /// `min_B (min_{δB} E^B) / w(B)`; `None` for an empty sweep.
    pub c_lower: Option<f64>,
    /// `max_B (max E^B) / w(B)`.
    pub c_upper: Option<f64>,
    pub lower_witness: Option<Ball>,
    pub upper_witness: Option<Ball>,
    pub balls: usize,
}

pub fn exit_time_bounds_check(
    form: &DirichletForm,
    balls: &[Ball],
    delta: f64,
) -> Result<ExitReport> {
    let s = form.space();
    let vals: Vec<(f64, f64)> = balls
        .par_iter()
        .map(|b| {
            let e = mean_exit_time(form, b)?;
            let w = s.w_ball(b);
            let inner = s.ball_points(&b.scaled(delta));
            let lo = inner.iter().map(|i| e[i]).fold(f64::INFINITY, f64::min);
            let hi = e.iter().copied().fold(0.0, f64::max);
            Ok((lo / w, hi / w))
        })
        .collect::<Result<_>>()?;
    let mut rep = ExitReport {
        c_lower: None,
        c_upper: None,
        lower_witness: None,
        upper_witness: None,
        balls: balls.len(),
    };
    for (b, &(lo, hi)) in balls.iter().zip(&vals) {
        if rep.c_lower.map_or(true, |c| lo < c) {
            rep.c_lower = Some(lo);
            rep.lower_witness = Some(*b);
        }
        if rep.c_upper.map_or(true, |c| hi > c) {
            rep.c_upper = Some(hi);
            rep.upper_witness = Some(*b);
        }
    }
    Ok(rep)
}

/// Monte Carlo estimate of `E^B(start)` from the continuous-time chain with jump rates
/// `k_xy / μ(x)`. Cross-validation only.
pub fn monte_carlo_exit_time(
    form: &DirichletForm,
    b: &Ball,
    start: usize,
    walks: usize,
    base_seed: u64,
) -> f64 {
    let s = form.space();
    let inside = s.ball_points(b);
    let chunks = 64usize;
    let per = walks.div_ceil(chunks);
    let total: f64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = seed::rng(base_seed, &[c as u64]);
            let mut acc = 0.0;
            for _ in 0..per {
                let mut x = start;
                while inside.contains(x) {
                    let links = form.links(x);
                    let rate: f64 = links.iter().map(|l| l.weight()).sum();
                    acc += s.mu()[x] / rate;
                    let mut pick = rng.gen::<f64>() * rate;
                    let mut next = links[links.len() - 1].to;
                    for l in links {
                        pick -= l.weight();
                        if pick < 0.0 {
                            next = l.to;
                            break;
                        }
                    }
                    x = next;
                }
            }
            acc
        })
        .sum();
    total / (per * chunks) as f64
}
