use rand::Rng;
use serde::{Deserialize, Serialize};

use super::weh::Sample;
use super::{closed_ball, distance_classes, negative_part, open_ball, sup_on};
use crate::dirichlet::{tail_unchecked, DirichletForm};
use crate::error::{Error, Result};
use crate::mmspace::{Ball, MetricMeasureSpace, PointSet};
use crate::{seed, tol};

/// Crossover threshold `λ = w(B_R)(T_{¾B_R,B_R}(u₋) + ‖f‖_{∞,B_R})`.
pub fn threshold_lambda(form: &DirichletForm, big: &Ball, smp: &Sample) -> f64 {
    let s = form.space();
    let omega = s.ball_points(big);
    let three_q = s.ball_points(&big.scaled(0.75));
    s.w_ball(big)
        * (tail_unchecked(form, &negative_part(&smp.u), &three_q, &omega) + sup_on(&smp.f, &omega))
}

fn power_mean(space: &MetricMeasureSpace, s: &PointSet, v: &[f64], p: f64) -> f64 {
    let mu = space.mu();
    (s.iter().map(|x| mu[x] * v[x].powf(p)).sum::<f64>() / space.mass(s)).powf(1.0 / p)
}

/// `(⨍ u^p)^{1/p} (⨍ u^{-p})^{1/p}` on `s`; `1` when `u` is constant there.
fn crossover_product(space: &MetricMeasureSpace, s: &PointSet, v: &[f64], p: f64) -> f64 {
    let first = v[s.indices()[0]];
    if s.iter().all(|x| v[x] == first) {
        return 1.0;
    }
    if s.iter().any(|x| v[x] <= 0.0) {
        return f64::INFINITY;
    }
    power_mean(space, s, v, p) * power_mean(space, s, v, -p)
}

/// One radius per distinct inner ball `B_r` with `0 < r <= R / (16(4κ+1))`.
pub fn crossover_radii(space: &MetricMeasureSpace, big: &Ball, kappa: f64) -> Vec<f64> {
    let rmax = big.radius / (16.0 * (4.0 * kappa + 1.0));
    let classes = distance_classes(&space.dist_row(big.center));
    (0..classes.len())
        .filter(|&k| classes[k] < rmax)
        .map(|k| classes.get(k + 1).map_or(rmax, |&d| d.min(rmax)))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossoverReport {
    pub worst_product: f64,
    /// `(sample index, r)` of the worst product.
    pub witness: Option<(usize, f64)>,
    pub evaluated: usize,
    pub cap: f64,
    pub pass: bool,
}

/// Worst crossover product over samples and radii, with `λ` at its threshold value.
pub fn crossover_check(
    form: &DirichletForm,
    big: &Ball,
    kappa: f64,
    r_sweep: &[f64],
    samples: &[Sample],
    p: f64,
    cap: f64,
) -> Result<CrossoverReport> {
    let rmax = big.radius / (16.0 * (4.0 * kappa + 1.0));
    if let Some(&r) = r_sweep
        .iter()
        .find(|&&r| !(r > 0.0 && r <= rmax * (1.0 + tol::REL)))
    {
        return Err(Error::Param(format!(
            "r = {r} outside (0, R/(16(4κ+1))] = (0, {rmax}]"
        )));
    }
    let s = form.space();
    let row = s.dist_row(big.center);
    let mut rep = CrossoverReport {
        worst_product: 0.0,
        witness: None,
        evaluated: 0,
        cap,
        pass: true,
    };
    for (i, smp) in samples.iter().enumerate() {
        let lambda = threshold_lambda(form, big, smp);
        let ul: Vec<f64> = smp.u.iter().map(|v| v + lambda).collect();
        for &r in r_sweep {
            let prod = crossover_product(s, &open_ball(&row, r), &ul, p);
            rep.evaluated += 1;
            if prod > rep.worst_product {
                rep.worst_product = prod;
                rep.witness = Some((i, r));
            }
        }
    }
    rep.pass = rep.worst_product <= cap;
    Ok(rep)
}

/// Sorted `(distance, point)` pairs from `x`.
fn by_distance(space: &MetricMeasureSpace, x: usize) -> Vec<(f64, usize)> {
    let mut v: Vec<(f64, usize)> = space
        .dist_row(x)
        .into_iter()
        .enumerate()
        .map(|(i, d)| (d, i))
        .collect();
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    v
}

/// Every distinct ball `{d(x,·) <= t}` inside `omega`, as point lists; `admit(x, t)` filters.
fn balls_within(
    space: &MetricMeasureSpace,
    omega: &PointSet,
    admit: impl Fn(usize, f64) -> bool,
) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for x in omega.iter() {
        let order = by_distance(space, x);
        let mut k = 0;
        while k < order.len() {
            let t = order[k].0;
            let mut end = k;
            while end < order.len() && order[end].0 == t {
                end += 1;
            }
            if order[k..end].iter().any(|&(_, y)| !omega.contains(y)) {
                break;
            }
            if admit(x, t) {
                out.push(order[..end].iter().map(|p| p.1).collect());
            }
            k = end;
        }
    }
    out
}

fn mean_on(space: &MetricMeasureSpace, pts: &[usize], v: &[f64]) -> f64 {
    let mu = space.mu();
    pts.iter().map(|&x| mu[x] * v[x]).sum::<f64>() / pts.iter().map(|&x| mu[x]).sum::<f64>()
}

/// `sup_{B ⊆ Ω} ⨍_B |u - u_B|`, over every ball contained in `Ω` as a point set.
pub fn bmo_norm(space: &MetricMeasureSpace, u: &[f64], omega: &Ball) -> f64 {
    let om = space.ball_points(omega);
    balls_within(space, &om, |_, _| true)
        .iter()
        .map(|b| {
            let m = mean_on(space, b, u);
            let dev: Vec<f64> = u.iter().map(|v| (v - m).abs()).collect();
            mean_on(space, b, &dev)
        })
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JnReport {
    /// Smallest `c_1` with `ω_B(|u - u_B| >= s) <= c_1 e^{-c_2 s / b}` on every tested ball.
    pub c1: f64,
    pub c2: f64,
    pub worst_product: f64,
    /// `(1 + c_1)^2`.
    pub bound: f64,
    pub balls: usize,
    pub pass: bool,
}

/// Exponential integrability on every ball `B` with `12B ⊆ B_0`.
///
/// `c_1` is fitted from the sub-level inequality and the product of exponential means is then
/// checked against `(1 + c_1)^2`.
pub fn john_nirenberg_check(
    space: &MetricMeasureSpace,
    u: &[f64],
    b0: &Ball,
    b: f64,
    c2: f64,
) -> Result<JnReport> {
    let norm = bmo_norm(space, u, b0);
    if !(b > 0.0) || b < norm * (1.0 - tol::REL) {
        return Err(Error::Param(format!(
            "b = {b} must be positive and >= the BMO norm {norm}"
        )));
    }
    if !(c2 > 0.0) {
        return Err(Error::Param(format!("c2 = {c2} must be positive")));
    }
    let om = space.ball_points(b0);
    let balls = balls_within(space, &om, |x, t| {
        closed_ball(&space.dist_row(x), 12.0 * t).is_subset(&om)
    });
    let mu = space.mu();
    let k = c2 / (2.0 * b);
    let mut rep = JnReport {
        c1: 0.0,
        c2,
        worst_product: 1.0,
        bound: 1.0,
        balls: balls.len(),
        pass: true,
    };
    for ball in &balls {
        let m = mean_on(space, ball, u);
        let mass: f64 = ball.iter().map(|&x| mu[x]).sum();
        let mut dev: Vec<(f64, f64)> = ball.iter().map(|&x| ((u[x] - m).abs(), mu[x])).collect();
        dev.sort_by(|a, c| c.0.total_cmp(&a.0));
        // Walk levels from the top: `above` is μ(|v| >= s) at the current distinct value s.
        let mut above = 0.0;
        let mut i = 0;
        while i < dev.len() && dev[i].0 > 0.0 {
            let s = dev[i].0;
            while i < dev.len() && dev[i].0 == s {
                above += dev[i].1;
                i += 1;
            }
            rep.c1 = rep.c1.max(above / mass * (c2 * s / b).exp());
        }
        let plus = ball
            .iter()
            .map(|&x| mu[x] * (k * (u[x] - m)).exp())
            .sum::<f64>()
            / mass;
        let minus = ball
            .iter()
            .map(|&x| mu[x] * (-k * (u[x] - m)).exp())
            .sum::<f64>()
            / mass;
        rep.worst_product = rep.worst_product.max(plus * minus);
    }
    rep.bound = (1.0 + rep.c1).powi(2);
    rep.pass = tol::le(rep.worst_product, rep.bound);
    Ok(rep)
}

/// `RHS - LHS` of the log-energy inequality for `E^J(u, φ² u_λ^{-1})`, jump part only.
pub fn log_energy_slack(
    form: &DirichletForm,
    b: &PointSet,
    u: &[f64],
    phi: &[f64],
    lambda: f64,
) -> f64 {
    let ul: Vec<f64> = u.iter().map(|v| v + lambda).collect();
    let test: Vec<f64> = (0..u.len())
        .map(|x| {
            if b.contains(x) {
                phi[x] * phi[x] / ul[x]
            } else {
                0.0
            }
        })
        .collect();
    let mut lhs = 0.0;
    let mut log_term = 0.0;
    let mut phi_energy = 0.0;
    let mut cross = 0.0;
    for &(x, y, m) in form.jump_pairs() {
        lhs += 2.0 * m * (u[x] - u[y]) * (test[x] - test[y]);
        phi_energy += 2.0 * m * (phi[x] - phi[y]).powi(2);
        match (b.contains(x), b.contains(y)) {
            (true, true) => {
                let w = (phi[x] * phi[x]).min(phi[y] * phi[y]);
                log_term += 2.0 * m * w * (ul[y] / ul[x]).ln().powi(2);
            }
            (true, false) => cross += m * ul[y] * phi[x] * phi[x] / ul[x],
            (false, true) => cross += m * ul[x] * phi[y] * phi[y] / ul[y],
            (false, false) => {}
        }
    }
    let rhs = -0.5 * log_term + 3.0 * phi_energy - 2.0 * cross;
    rhs - lhs
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogEnergyReport {
    pub trials: usize,
    pub worst_slack: f64,
    pub worst_trial: Option<usize>,
    pub pass: bool,
}

/// Random `(u >= 0 on B, φ supported in B, λ > 0)` triples.
pub fn log_energy_check(
    form: &DirichletForm,
    b: &Ball,
    trials: usize,
    seed_base: u64,
) -> LogEnergyReport {
    let n = form.n();
    let bs = form.space().ball_points(b);
    let mut rep = LogEnergyReport {
        trials,
        worst_slack: f64::INFINITY,
        worst_trial: None,
        pass: true,
    };
    for t in 0..trials {
        let mut rng = seed::rng(seed_base, &[0x1e, t as u64]);
        let sparse = rng.gen_bool(0.3);
        let mut u = vec![0.0; n];
        let mut phi = vec![0.0; n];
        for x in 0..n {
            if bs.contains(x) {
                u[x] = if sparse && rng.gen_bool(0.5) {
                    0.0
                } else {
                    rng.gen_range(0.0..3.0)
                };
                phi[x] = if sparse && rng.gen_bool(0.5) {
                    0.0
                } else {
                    rng.gen_range(-1.0..1.0)
                };
            } else {
                u[x] = rng.gen_range(-1.0..3.0);
            }
        }
        let lambda = 10f64.powf(rng.gen_range(-3.0..1.0));
        let slack = log_energy_slack(form, &bs, &u, &phi, lambda);
        if slack < rep.worst_slack {
            rep.worst_slack = slack;
            rep.worst_trial = Some(t);
        }
    }
    rep.pass = rep.worst_slack >= -1e-9;
    rep
}
