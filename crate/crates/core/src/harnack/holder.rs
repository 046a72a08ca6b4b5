use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::distance_classes;
use crate::dirichlet::DirichletForm;
use crate::error::{Error, Result};
use crate::mmspace::Ball;
use crate::solvers::{solve_f_harmonic, BoundaryValueProblem};
use crate::{seed, tol};

/// A function harmonic in `B(center, radius)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderSample {
    pub center: usize,
    pub radius: f64,
    pub u: Vec<f64>,
}

/// Harmonic functions in each ball with exterior data drawn uniformly from `[-1, 1]`.
pub fn harmonic_samples(
    form: &DirichletForm,
    balls: &[Ball],
    per_ball: usize,
    seed_base: u64,
) -> Result<Vec<HolderSample>> {
    let n = form.n();
    let jobs: Vec<(usize, usize)> = (0..balls.len())
        .flat_map(|b| (0..per_ball).map(move |k| (b, k)))
        .collect();
    jobs.par_iter()
        .map(|&(bi, k)| {
            let b = balls[bi];
            let mut rng = seed::rng(seed_base, &[0x40, bi as u64, k as u64]);
            let domain = form.space().ball_points(&b);
            let g: Vec<f64> = (0..n)
                .map(|x| {
                    if domain.contains(x) {
                        0.0
                    } else {
                        rng.gen_range(-1.0..=1.0)
                    }
                })
                .collect();
            let u = solve_f_harmonic(
                form,
                &BoundaryValueProblem {
                    domain,
                    f: vec![0.0; n],
                    g,
                },
            )?;
            Ok(HolderSample {
                center: b.center,
                radius: b.radius,
                u,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HolderConfig {
    pub betas: Vec<f64>,
    /// Largest admissible uniform constant.
    pub c_max: f64,
}

impl Default for HolderConfig {
    fn default() -> Self {
        HolderConfig {
            betas: (1..=19).map(|k| k as f64 / 20.0).collect(),
            c_max: 4.0,
        }
    }
}

/// Oscillation on the inner ball `{d(x0,·) <= rho}` relative to `‖u‖_∞`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OscRow {
    pub sample: usize,
    pub rho: f64,
    pub radius: f64,
    pub osc: f64,
    pub norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderReport {
    /// Largest grid exponent admitting the uniform constant.
    pub beta: Option<f64>,
    /// Constant at the fitted exponent.
    pub c: f64,
    /// Constant of the pointwise form on `B(x0, r/4)` with `θ = β`.
    pub pointwise_c: Option<f64>,
    pub rows: Vec<OscRow>,
    pub pass: bool,
}

/// Fit `osc_{B(x0,ρ)} u <= C ‖u‖_∞ (ρ/r)^β` over all samples and `0 < ρ <= r`.
///
/// `osc` over the open ball is constant while `ρ` stays in one distance class and the bound is
/// smallest at the bottom of the class, so each class contributes its closed ball with `ρ` equal
/// to the class distance.
pub fn holder_decay_check(
    form: &DirichletForm,
    samples: &[HolderSample],
    cfg: &HolderConfig,
) -> Result<HolderReport> {
    let s = form.space();
    let mut rows = Vec::new();
    let mut pairs: Vec<(usize, f64, f64, f64)> = Vec::new();
    for (i, smp) in samples.iter().enumerate() {
        let row = s.dist_row(smp.center);
        for x in (0..s.n()).filter(|&x| row[x] < smp.radius) {
            if form.energy_at(&smp.u, x).abs() > tol::SOLVE_RESIDUAL * (1.0 + form.degree(x)) {
                return Err(Error::NotSuperharmonic(-form.energy_at(&smp.u, x).abs(), x));
            }
        }
        let norm = smp.u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for &d in distance_classes(&row)
            .iter()
            .filter(|&&d| d > 0.0 && d < smp.radius)
        {
            let vals = (0..s.n()).filter(|&x| row[x] <= d).map(|x| smp.u[x]);
            let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| {
                (l.min(v), h.max(v))
            });
            rows.push(OscRow {
                sample: i,
                rho: d,
                radius: smp.radius,
                osc: hi - lo,
                norm,
            });
        }
        let quarter: Vec<usize> = (0..s.n()).filter(|&x| row[x] < smp.radius / 4.0).collect();
        for (a, &x) in quarter.iter().enumerate() {
            for &y in &quarter[a + 1..] {
                pairs.push((
                    i,
                    s.dist(x, y) / smp.radius,
                    (smp.u[x] - smp.u[y]).abs(),
                    norm,
                ));
            }
        }
    }
    let constant = |beta: f64| {
        rows.iter()
            .filter(|r| r.norm > 0.0)
            .map(|r| r.osc / r.norm * (r.radius / r.rho).powf(beta))
            .fold(0.0, f64::max)
    };
    let beta = cfg
        .betas
        .iter()
        .copied()
        .filter(|&b| constant(b) <= cfg.c_max)
        .fold(None, |m: Option<f64>, b| Some(m.map_or(b, |m| m.max(b))));
    let c = beta.map_or(f64::INFINITY, constant);
    let pointwise_c = beta.map(|b| {
        pairs
            .iter()
            .filter(|p| p.3 > 0.0)
            .map(|&(_, t, diff, norm)| diff / (norm * t.powf(b)))
            .fold(0.0, f64::max)
    });
    Ok(HolderReport {
        beta,
        c,
        pointwise_c,
        rows,
        pass: beta.is_some(),
    })
}
