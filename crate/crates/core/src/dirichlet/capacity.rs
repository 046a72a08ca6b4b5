use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::DirichletForm;
use crate::error::{Error, Result};
use crate::linalg;
use crate::mmspace::{Ball, PointSet};
use crate::tol;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Capacity {
    pub value: f64,
    /// Equilibrium potential: 1 on `A`, 0 off `Ω`.
    pub potential: Vec<f64>,
}

/// `cap(A, Ω) = min { E(φ) : φ = 1 on A, φ = 0 off Ω }` and its minimizer.
pub fn capacity(form: &DirichletForm, a: &PointSet, omega: &PointSet) -> Result<Capacity> {
    if a.is_empty() {
        return Err(Error::Invalid("capacity of an empty set".into()));
    }
    if let Some(x) = a.first_outside(omega) {
        return Err(Error::NotSubset(x));
    }
    let n = form.n();
    let mut phi: Vec<f64> = (0..n)
        .map(|i| if a.contains(i) { 1.0 } else { 0.0 })
        .collect();
    let free = omega.difference(a);
    if !free.is_empty() {
        form.check_solvable(&free)?;
        let k = form.dirichlet_matrix(&free);
        let b = form.boundary_load(&free, &phi);
        let x = linalg::solve_spd(&k, &b)?;
        for (p, i) in free.iter().enumerate() {
            phi[i] = x[p];
        }
        if let Some(i) = free
            .iter()
            .find(|&i| !(tol::ge(phi[i], 0.0) && tol::le(phi[i], 1.0)))
        {
            return Err(Error::Numerical(format!(
                "equilibrium potential {} at point {i} leaves [0,1]",
                phi[i]
            )));
        }
    }
    Ok(Capacity {
        value: form.quad(&phi),
        potential: phi,
    })
}

/// A measured constant with the ball that realizes it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantReport {
    pub constant: f64,
    pub witness: Option<Ball>,
    pub evaluated: usize,
}

/// `max_B cap(⅔B, B) w(B) / μ(B)` over the given balls.
pub fn cap_le_constant(form: &DirichletForm, balls: &[Ball]) -> Result<ConstantReport> {
    let s = form.space();
    let vals: Vec<f64> = balls
        .par_iter()
        .map(|b| {
            let outer = s.ball_points(b);
            let inner = s.ball_points(&b.scaled(2.0 / 3.0));
            let c = capacity(form, &inner, &outer)?;
            Ok(c.value * s.w_ball(b) / s.mass(&outer))
        })
        .collect::<Result<_>>()?;
    Ok(argmax(&vals, balls))
}

pub(crate) fn argmax(vals: &[f64], balls: &[Ball]) -> ConstantReport {
    let mut best: Option<(f64, Ball)> = None;
    for (v, b) in vals.iter().zip(balls) {
        if best.map_or(true, |(bv, _)| *v > bv) {
            best = Some((*v, *b));
        }
    }
    ConstantReport {
        constant: best.map_or(0.0, |b| b.0),
        witness: best.map(|b| b.1),
        evaluated: vals.len(),
    }
}

/// Candidate cutoff functions for `B0 ⊂ B` concentric: powers of the radial ramp across the
/// annulus, indicators of the intermediate balls, and the equilibrium potential of `(B0, B)`.
pub fn cutoff_family(form: &DirichletForm, b0: &Ball, b: &Ball) -> Result<Vec<Vec<f64>>> {
    let s = form.space();
    if b0.center != b.center || b.radius <= b0.radius {
        return Err(Error::Param(
            "cutoff family needs concentric balls with B0 strictly inside B".into(),
        ));
    }
    let inner = s.ball_points(b0);
    let outer = s.ball_points(b);
    if inner == outer {
        return Err(Error::EmptyAnnulus);
    }
    let (r0, r1) = (b0.radius, b.radius);
    let row = s.dist_row(b.center);
    let ramp = |d: f64| ((r1 - d) / (r1 - r0)).clamp(0.0, 1.0);
    let mut fam = Vec::new();
    for gamma in [0.5, 1.0, 2.0] {
        fam.push(
            row.iter()
                .map(|&d| if d < r0 { 1.0 } else { ramp(d).powf(gamma) })
                .collect(),
        );
    }
    for &rho in s
        .distances()
        .iter()
        .filter(|&&d| d > r0 && d < r1)
        .chain([r1].iter())
    {
        fam.push(
            row.iter()
                .map(|&d| if d < rho { 1.0 } else { 0.0 })
                .collect(),
        );
    }
    if let Ok(c) = capacity(form, &inner, &outer) {
        fam.push(c.potential);
    }
    Ok(fam)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GcapReport {
    pub constant: f64,
    pub worst_sample: Option<usize>,
    pub family_size: usize,
    pub samples_used: usize,
}

/// Best `C` in `E(u²φ, φ) <= C/w(x0,r) ∫_B u²` over the candidate cutoff family, for each sample.
pub fn gcap_check(
    form: &DirichletForm,
    b0: &Ball,
    b: &Ball,
    samples: &[Vec<f64>],
) -> Result<GcapReport> {
    let s = form.space();
    let fam = cutoff_family(form, b0, b)?;
    let outer = s.ball_points(b);
    let w = s.w(b.center, b.radius - b0.radius);
    let mut rep = GcapReport {
        constant: 0.0,
        worst_sample: None,
        family_size: fam.len(),
        samples_used: 0,
    };
    for (k, u) in samples.iter().enumerate() {
        let mass: f64 = outer.iter().map(|i| u[i] * u[i] * s.mu()[i]).sum();
        if mass <= 0.0 {
            continue;
        }
        rep.samples_used += 1;
        let best = fam
            .iter()
            .map(|phi| {
                let u2phi: Vec<f64> = u.iter().zip(phi).map(|(a, p)| a * a * p).collect();
                w * form.energy(&u2phi, phi).total / mass
            })
            .fold(f64::INFINITY, f64::min);
        if rep.worst_sample.is_none() || best > rep.constant {
            rep.constant = best;
            rep.worst_sample = Some(k);
        }
    }
    Ok(rep)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpReport {
    pub worst_slack: f64,
    pub worst_sample: Option<usize>,
    pub pass: bool,
}

struct EpTerms {
    lhs: f64,
    cross: f64,
    jump_out: f64,
    mass: f64,
}

fn ep_terms(form: &DirichletForm, u: &[f64], phi: &[f64], omega: &PointSet) -> EpTerms {
    let s = form.space();
    let uphi: Vec<f64> = u.iter().zip(phi).map(|(a, p)| a * p).collect();
    let uphi2: Vec<f64> = u.iter().zip(phi).map(|(a, p)| a * p * p).collect();
    let jump_out: f64 = omega
        .iter()
        .map(|x| {
            form.links(x)
                .iter()
                .filter(|l| l.jump > 0.0 && !omega.contains(l.to))
                .map(|l| u[x] * u[l.to] * phi[x] * phi[x] * l.jump)
                .sum::<f64>()
        })
        .sum();
    EpTerms {
        lhs: form.quad(&uphi),
        cross: form.energy(u, &uphi2).total,
        jump_out,
        mass: omega.iter().map(|i| u[i] * u[i] * s.mu()[i]).sum(),
    }
}

fn ep_geometry(b0: &Ball, b: &Ball, omega: &Ball) -> Result<(f64, f64)> {
    if omega.center != b.center || omega.radius < b.radius {
        return Err(Error::Param("EP needs B ⊂ Ω concentric".into()));
    }
    Ok((b.radius - b0.radius, omega.radius))
}

/// Slack of `E(uφ) <= 3/2 E(u,uφ²) + C/w(x0,r) (R'/r)^{C0} ∫_Ω u² + 3 ∬_{Ω×Ω^c} u(x)u(y)φ²(x) J`,
/// maximized over the cutoff family per sample and minimized over samples.
pub fn ep_check(
    form: &DirichletForm,
    b0: &Ball,
    b: &Ball,
    omega: &Ball,
    samples: &[Vec<f64>],
    c: f64,
    c0: f64,
) -> Result<EpReport> {
    let s = form.space();
    let (r, big_r) = ep_geometry(b0, b, omega)?;
    let fam = cutoff_family(form, b0, b)?;
    let om = s.ball_points(omega);
    let coef = c / s.w(b.center, r) * (big_r / r).powf(c0);
    let mut rep = EpReport {
        worst_slack: f64::INFINITY,
        worst_sample: None,
        pass: true,
    };
    for (k, u) in samples.iter().enumerate() {
        let best = fam
            .iter()
            .map(|phi| {
                let t = ep_terms(form, u, phi, &om);
                1.5 * t.cross + coef * t.mass + 3.0 * t.jump_out - t.lhs
            })
            .fold(f64::NEG_INFINITY, f64::max);
        if best < rep.worst_slack {
            rep.worst_slack = best;
            rep.worst_sample = Some(k);
        }
    }
    rep.pass = rep.worst_slack >= -1e-9;
    Ok(rep)
}

/// Smallest `C` making every sample's best-cutoff EP slack nonnegative, for fixed `C0`.
pub fn fit_ep_constant(
    form: &DirichletForm,
    b0: &Ball,
    b: &Ball,
    omega: &Ball,
    samples: &[Vec<f64>],
    c0: f64,
) -> Result<f64> {
    let s = form.space();
    let (r, big_r) = ep_geometry(b0, b, omega)?;
    let fam = cutoff_family(form, b0, b)?;
    let om = s.ball_points(omega);
    let unit = (big_r / r).powf(c0) / s.w(b.center, r);
    let mut need: f64 = 0.0;
    for u in samples {
        let best = fam
            .iter()
            .map(|phi| {
                let t = ep_terms(form, u, phi, &om);
                let deficit = t.lhs - 1.5 * t.cross - 3.0 * t.jump_out;
                if deficit <= 0.0 {
                    0.0
                } else if t.mass > 0.0 {
                    deficit / (unit * t.mass)
                } else {
                    f64::INFINITY
                }
            })
            .fold(f64::INFINITY, f64::min);
        need = need.max(best);
    }
    Ok(need)
}
