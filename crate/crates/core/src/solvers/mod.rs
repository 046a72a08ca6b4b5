//! Harmonic and superharmonic functions, samplers and mean exit times.

mod exit;

pub use exit::{exit_time_bounds_check, mean_exit_time, monte_carlo_exit_time, ExitReport};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dirichlet::DirichletForm;
use crate::error::{Error, Result};
use crate::linalg;
use crate::mmspace::PointSet;
use crate::seed;
use crate::tol;

/// Find `u` with `u = g` off `Ω` and `E(u, φ) = (f, φ)` for every `φ` supported in `Ω`.
#[derive(Clone, Debug)]
pub struct BoundaryValueProblem {
    pub domain: PointSet,
    /// Right-hand side; only entries in the domain are read.
    pub f: Vec<f64>,
    /// Exterior data; only entries outside the domain are read.
    pub g: Vec<f64>,
}

pub fn solve_f_harmonic(form: &DirichletForm, bvp: &BoundaryValueProblem) -> Result<Vec<f64>> {
    let d = &bvp.domain;
    if d.is_empty() {
        return Err(Error::Invalid(
            "boundary value problem with empty domain".into(),
        ));
    }
    form.check_solvable(d)?;
    let mu = form.space().mu();
    let k = form.dirichlet_matrix(d);
    let mut rhs = form.boundary_load(d, &bvp.g);
    for (a, x) in d.iter().enumerate() {
        rhs[a] += bvp.f[x] * mu[x];
    }
    let sol = linalg::solve_spd(&k, &rhs)?;
    let mut u = bvp.g.clone();
    for (a, x) in d.iter().enumerate() {
        u[x] = sol[a];
    }
    Ok(u)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuperharmonicVerdict {
    pub holds: bool,
    /// `min_{x∈Ω} E(u, e_x) - f(x) μ(x)`.
    pub min_slack: f64,
    pub worst_point: Option<usize>,
}

/// Checks `E(u, e_x) >= f(x) μ(x)` at every `x ∈ Ω`; point indicators generate the nonnegative cone.
pub fn is_f_superharmonic(
    form: &DirichletForm,
    u: &[f64],
    omega: &PointSet,
    f: &[f64],
) -> SuperharmonicVerdict {
    let mu = form.space().mu();
    let mut out = SuperharmonicVerdict {
        holds: true,
        min_slack: f64::INFINITY,
        worst_point: None,
    };
    for x in omega.iter() {
        let slack = form.energy_at(u, x) - f[x] * mu[x];
        let scale: f64 = form
            .links(x)
            .iter()
            .map(|l| l.weight() * (u[x].abs() + u[l.to].abs()))
            .sum::<f64>()
            + f[x].abs() * mu[x];
        if slack < -(tol::REL * scale + tol::ABS) {
            out.holds = false;
        }
        if slack < out.min_slack {
            out.min_slack = slack;
            out.worst_point = Some(x);
        }
    }
    out
}

/// Sampler knobs for [`sample_superharmonic`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    /// Scale of the nonnegative noise added to `f`; defaults to `mean|f| + 1`.
    pub noise_scale: Option<f64>,
    /// Scale of the nonnegative exterior data.
    pub exterior_scale: f64,
    /// Probability that an exterior point carries negative data.
    pub negative_fraction: f64,
    /// Magnitude of negative exterior data before it is damped to keep `u >= 0` on `Ω`.
    pub negative_scale: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            noise_scale: None,
            exterior_scale: 1.0,
            negative_fraction: 0.0,
            negative_scale: 1.0,
        }
    }
}

/// Draw an `f`-superharmonic function on `Ω` that is nonnegative on `Ω`.
///
/// The solve uses `g = f + noise >= f` inside `Ω` and random nonnegative exterior data of one of
/// three shapes (dense, sparse, single spike). Optional negative exterior data is damped by the
/// largest factor that keeps the solution nonnegative on `Ω`, so that tails of `u₋` are exercised.
pub fn sample_superharmonic(
    form: &DirichletForm,
    omega: &PointSet,
    f: &[f64],
    seed: u64,
    cfg: &SamplerConfig,
) -> Result<Vec<f64>> {
    let n = form.n();
    let mut rng = seed::rng(seed, &[0x5a]);
    let noise = cfg.noise_scale.unwrap_or_else(|| {
        let m = omega.len().max(1) as f64;
        omega.iter().map(|i| f[i].abs()).sum::<f64>() / m + 1.0
    });
    let harmonic = rng.gen_bool(0.25);
    let mut rhs = vec![0.0; n];
    for x in omega.iter() {
        rhs[x] = f[x]
            + if harmonic {
                0.0
            } else {
                noise * rng.gen::<f64>()
            };
    }
    let outside: Vec<usize> = (0..n).filter(|&i| !omega.contains(i)).collect();
    let mut ext = vec![0.0; n];
    match rng.gen_range(0..3) {
        0 => outside
            .iter()
            .for_each(|&y| ext[y] = cfg.exterior_scale * rng.gen::<f64>()),
        1 => outside.iter().for_each(|&y| {
            if rng.gen_bool(0.1) {
                ext[y] = cfg.exterior_scale * rng.gen::<f64>();
            }
        }),
        _ => {
            if !outside.is_empty() {
                ext[outside[rng.gen_range(0..outside.len())]] = cfg.exterior_scale;
            }
        }
    }
    let mut u = solve_f_harmonic(
        form,
        &BoundaryValueProblem {
            domain: omega.clone(),
            f: rhs,
            g: ext.clone(),
        },
    )?;
    if cfg.negative_fraction > 0.0 && !outside.is_empty() {
        let mut neg = vec![0.0; n];
        for &y in &outside {
            if rng.gen_bool(cfg.negative_fraction.min(1.0)) {
                neg[y] = -cfg.negative_scale * rng.gen::<f64>();
            }
        }
        let resp = solve_f_harmonic(
            form,
            &BoundaryValueProblem {
                domain: omega.clone(),
                f: vec![0.0; n],
                g: neg.clone(),
            },
        )?;
        let mut t: f64 = 1.0;
        for x in omega.iter() {
            if resp[x] < 0.0 {
                t = t.min(0.5 * u[x].max(0.0) / -resp[x]);
            }
        }
        for i in 0..n {
            u[i] += t * resp[i];
        }
    }
    let lo = omega.iter().map(|x| u[x]).fold(f64::INFINITY, f64::min);
    if lo < 0.0 {
        u.iter_mut().for_each(|v| *v -= lo);
    }
    let ver = is_f_superharmonic(form, &u, omega, f);
    if !ver.holds {
        return Err(Error::NotSuperharmonic(
            ver.min_slack,
            ver.worst_point.unwrap_or(0),
        ));
    }
    if let Some(x) = omega.iter().find(|&x| u[x] < 0.0) {
        return Err(Error::NegativeInDomain(x));
    }
    Ok(u)
}
