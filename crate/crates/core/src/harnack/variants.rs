use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::weh::{admissible_radii, HarnackParams, SampleFamily};
use super::{distance_classes, min_on, negative_part, occupation_ge, open_ball, sup_on};
use crate::dirichlet::tail_unchecked;
use crate::error::{Error, Result};
use crate::mmspace::{center_sample, Ball};
use crate::{seed, tol};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Measure-to-point form on `B_{4r}`, constants taken directly from (wEH).
    Weh1,
    /// Exponential form.
    Weh2,
    /// Threshold-map form.
    Weh3,
    /// Half-density form.
    Weh4,
    /// Measure-to-point form with constants routed through the threshold map.
    Weh1FromWeh3,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::Weh1,
        Variant::Weh2,
        Variant::Weh3,
        Variant::Weh4,
        Variant::Weh1FromWeh3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Weh1 => "wEH1",
            Variant::Weh2 => "wEH2",
            Variant::Weh3 => "wEH3",
            Variant::Weh4 => "wEH4",
            Variant::Weh1FromWeh3 => "wEH1<-wEH3",
        }
    }
}

/// Geometric constants the translations need: `C_2, β_2` of the scaling envelope and `C_μ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainAux {
    pub c2: f64,
    pub beta2: f64,
    pub c_mu: f64,
}

/// Constants of one variant, derived from a (wEH) parameter set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Translated {
    pub variant: Variant,
    pub sigma: f64,
    /// `δ_1`, `δ_2`, `δ_3` or `δ_4`.
    pub delta: f64,
    pub p: f64,
    pub c_h: f64,
    /// `C = ln C_H + 1/p`.
    pub c: f64,
    pub aux: ChainAux,
}

impl Translated {
    /// Level function of the variant: `ε_1(η)`, `exp(-C/η)`, `F(η)` or the constant `ε_4`.
    pub fn level(&self, eta: f64) -> f64 {
        let ChainAux { c2, beta2, c_mu } = self.aux;
        let f = |e: f64| 0.5 * (-self.c / e).exp();
        match self.variant {
            Variant::Weh1 => {
                (eta / (c_mu * c_mu)).powf(1.0 / self.p) / (c2 * 4f64.powf(beta2) * self.c_h)
            }
            Variant::Weh2 => (-self.c / eta).exp(),
            Variant::Weh3 => f(eta),
            Variant::Weh4 => f(0.5),
            Variant::Weh1FromWeh3 => f(eta / c_mu.powi(3)) / (c2 * 8f64.powf(beta2)),
        }
    }
}

/// Pure translation of (wEH) constants into the constants of `target`.
pub fn constants_translate(
    params: &HarnackParams,
    target: Variant,
    aux: &ChainAux,
) -> Result<Translated> {
    let ok = params.p > 0.0
        && params.p <= 1.0
        && params.delta > 0.0
        && params.delta < 1.0
        && params.sigma > 0.0
        && params.sigma <= 1.0
        && params.c_h >= 1.0;
    if !ok {
        return Err(Error::Param(format!(
            "Harnack constants out of range: {params:?}"
        )));
    }
    if !(aux.c2 >= 1.0 && aux.beta2 > 0.0 && aux.c_mu >= 1.0) {
        return Err(Error::Param(format!(
            "need C_2 >= 1, beta_2 > 0, C_mu >= 1: {aux:?}"
        )));
    }
    let delta = match target {
        Variant::Weh1 => params.delta / 4.0,
        Variant::Weh1FromWeh3 => params.delta / 8.0,
        Variant::Weh2 | Variant::Weh3 | Variant::Weh4 => params.delta,
    };
    Ok(Translated {
        variant: target,
        sigma: params.sigma,
        delta,
        p: params.p,
        c_h: params.c_h,
        c: params.c_h.ln() + 1.0 / params.p,
        aux: *aux,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VariantConfig {
    pub trials: usize,
    pub seed: u64,
    /// Draws per ball available in the family (match the certificate).
    pub samples: usize,
    pub max_centers: Option<usize>,
    /// Below this share of non-vacuous trials the check is inconclusive.
    pub min_non_vacuous: f64,
}

impl Default for VariantConfig {
    fn default() -> Self {
        VariantConfig {
            trials: 1000,
            seed: 0,
            samples: 16,
            max_centers: Some(8),
            min_non_vacuous: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariantWitness {
    pub trial: usize,
    pub center: usize,
    pub big_radius: f64,
    pub r: f64,
    pub sample: usize,
    pub a: f64,
    pub eta: f64,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariantReport {
    pub variant: Variant,
    pub trials: usize,
    pub non_vacuous: usize,
    pub failures: usize,
    /// Smallest `lhs - rhs` over non-vacuous trials.
    pub worst_margin: f64,
    pub worst: Option<VariantWitness>,
    pub inconclusive: bool,
    pub pass: bool,
}

enum Outcome {
    Vacuous,
    Checked(VariantWitness),
}

fn trial(
    t: &Translated,
    family: &SampleFamily,
    cfg: &VariantConfig,
    centers: &[usize],
    i: usize,
) -> Result<Outcome> {
    let form = family.form();
    let s = form.space();
    let mut rng = seed::rng(cfg.seed, &[t.variant as u64, i as u64]);
    let center = centers[rng.gen_range(0..centers.len())];
    let radii = admissible_radii(s, center, t.sigma);
    if radii.is_empty() {
        return Ok(Outcome::Vacuous);
    }
    let (ri, big_r) = radii[rng.gen_range(0..radii.len())];
    let sample = rng.gen_range(0..cfg.samples.max(1));
    let big = Ball::new(center, big_r);
    let smp = family.draw(&big, ri, sample)?;
    let u = &smp.u;
    let row = s.dist_row(center);
    let omega = s.ball_points(&big);
    let tail = tail_unchecked(
        form,
        &negative_part(u),
        &open_ball(&row, 0.75 * big_r),
        &omega,
    );
    let load = tail + sup_on(&smp.f, &omega);

    let cap = t.delta * big_r;
    let r = if t.variant == Variant::Weh4 {
        cap
    } else {
        let classes: Vec<f64> = distance_classes(&row);
        let valid: Vec<usize> = (0..classes.len()).filter(|&k| classes[k] < cap).collect();
        let k = valid[rng.gen_range(0..valid.len())];
        let hi = classes
            .get(k + 1)
            .copied()
            .unwrap_or(f64::INFINITY)
            .min(cap);
        let frac: f64 = rng.gen_range(0.001..0.999);
        // wEH1 needs r strictly below δ_1 R; the others allow r = δ R.
        let frac = if matches!(t.variant, Variant::Weh1 | Variant::Weh1FromWeh3) || hi < cap {
            frac
        } else {
            1.0
        };
        classes[k] + frac * (hi - classes[k])
    };
    let inner = open_ball(&row, r);
    let pts = inner.indices();
    let (lo, hi) = (min_on(u, &inner), sup_on(u, &inner));
    let a = if t.variant == Variant::Weh2 && hi > lo {
        // Levels outside (min, max] give ω ∈ {0, 1}, where wEH2 holds trivially.
        lo + rng.gen_range(0.001..=1.0) * (hi - lo)
    } else {
        u[pts[rng.gen_range(0..pts.len())]] * rng.gen_range(0.5..=1.0)
    };
    if !(a > 0.0) {
        return Ok(Outcome::Vacuous);
    }
    let omega_a = occupation_ge(s, &inner, u, a);
    let wl = s.w(center, r) * load;
    let (eta, lhs, rhs) = match t.variant {
        Variant::Weh1 | Variant::Weh1FromWeh3 => {
            if omega_a <= 0.0 {
                return Ok(Outcome::Vacuous);
            }
            let lhs = min_on(u, &open_ball(&row, 4.0 * r));
            (omega_a, lhs, t.level(omega_a) * a - wl)
        }
        Variant::Weh2 => {
            if omega_a <= 0.0 || omega_a >= 1.0 {
                return Ok(Outcome::Vacuous);
            }
            (omega_a, min_on(u, &inner), a * t.level(omega_a) - wl)
        }
        Variant::Weh3 => {
            if omega_a <= 0.0 || wl > t.level(omega_a) * a {
                return Ok(Outcome::Vacuous);
            }
            (omega_a, min_on(u, &inner), t.level(omega_a) * a)
        }
        Variant::Weh4 => {
            if omega_a < 0.5 || wl > t.level(0.5) * a {
                return Ok(Outcome::Vacuous);
            }
            (0.5, min_on(u, &open_ball(&row, 0.5 * r)), t.level(0.5) * a)
        }
    };
    Ok(Outcome::Checked(VariantWitness {
        trial: i,
        center,
        big_radius: big_r,
        r,
        sample,
        a,
        eta,
        lhs,
        rhs,
    }))
}

/// Sample the hypothesis of a variant and check its conclusion.
///
/// Trials reuse the certificate's superharmonic family, so with constants chained from a passing
/// certificate every non-vacuous trial is predicted to hold.
pub fn check_weh_variant(
    t: &Translated,
    family: &SampleFamily,
    cfg: &VariantConfig,
) -> Result<VariantReport> {
    let centers = center_sample(family.form().n(), cfg.max_centers);
    let outcomes: Vec<Outcome> = (0..cfg.trials)
        .into_par_iter()
        .map(|i| trial(t, family, cfg, &centers, i))
        .collect::<Result<_>>()?;
    let mut rep = VariantReport {
        variant: t.variant,
        trials: cfg.trials,
        non_vacuous: 0,
        failures: 0,
        worst_margin: f64::INFINITY,
        worst: None,
        inconclusive: false,
        pass: false,
    };
    for o in outcomes {
        if let Outcome::Checked(w) = o {
            rep.non_vacuous += 1;
            if !tol::ge(w.lhs, w.rhs) {
                rep.failures += 1;
            }
            if w.lhs - w.rhs < rep.worst_margin {
                rep.worst_margin = w.lhs - w.rhs;
                rep.worst = Some(w);
            }
        }
    }
    rep.inconclusive = (rep.non_vacuous as f64) < cfg.min_non_vacuous * cfg.trials as f64;
    rep.pass = rep.failures == 0 && !rep.inconclusive;
    Ok(rep)
}
