use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::weh::{admissible_radii, HarnackParams, SampleFamily};
use super::{min_on, negative_part, occupation_ge, open_ball, sup_on};
use crate::dirichlet::tail_unchecked;
use crate::error::{Error, Result};
use crate::mmspace::{center_sample, Ball};
use crate::{seed, tol};

/// Constants `(ε_0, θ, C_L, σ)` of the lemma of growth.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LgParams {
    pub epsilon0: f64,
    pub theta: f64,
    pub c_l: f64,
    pub sigma: f64,
}

impl LgParams {
    /// `θ = 1/ν`, `C_L = C_0 + β_2 + d_2` and
    /// `ε_0 = 2^{-λq/(q-1)^2 - 1} C^{-1/(q-1)}` with `q = 1 + ν`, `λ = 2 + C_L`.
    ///
    /// `c` is the constant of the one-step occupation estimate, which is not computed here.
    pub fn chained(nu: f64, c0: f64, beta2: f64, d2: f64, c: f64, sigma: f64) -> Result<Self> {
        if !(nu > 0.0 && c > 0.0) {
            return Err(Error::Param(format!(
                "need nu > 0 and C > 0, got {nu}, {c}"
            )));
        }
        let c_l = c0 + beta2 + d2;
        let q = 1.0 + nu;
        let lambda = 2.0 + c_l;
        let epsilon0 = (-(lambda * q / (nu * nu)) - 1.0).exp2() * c.powf(-1.0 / nu);
        Ok(LgParams {
            epsilon0,
            theta: 1.0 / nu,
            c_l,
            sigma,
        })
    }

    /// Right-hand side of the occupation hypothesis.
    pub fn threshold(&self, eps: f64, delta: f64, load: f64, a: f64) -> f64 {
        self.epsilon0
            * (1.0 - eps).powf(2.0 * self.theta)
            * (1.0 - delta).powf(self.c_l * self.theta)
            * (1.0 + load / (eps * a)).powf(-self.theta)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GrowthConfig {
    pub eps: f64,
    pub delta: f64,
    pub trials: usize,
    pub seed: u64,
    pub samples: usize,
    pub max_centers: Option<usize>,
    pub min_non_vacuous: f64,
}

impl Default for GrowthConfig {
    fn default() -> Self {
        GrowthConfig {
            eps: 0.5,
            delta: 0.5,
            trials: 1000,
            seed: 0,
            samples: 16,
            max_centers: Some(8),
            min_non_vacuous: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialWitness {
    pub trial: usize,
    pub center: usize,
    pub radius: f64,
    pub sample: usize,
    pub a: f64,
    /// Conclusion value `min u`.
    pub lhs: f64,
    /// Required lower bound.
    pub rhs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub trials: usize,
    pub non_vacuous: usize,
    pub failures: usize,
    pub worst: Option<TrialWitness>,
    pub inconclusive: bool,
    pub pass: bool,
}

fn summarize(trials: usize, checked: Vec<Option<TrialWitness>>, min_share: f64) -> GrowthReport {
    let mut rep = GrowthReport {
        trials,
        non_vacuous: 0,
        failures: 0,
        worst: None,
        inconclusive: false,
        pass: false,
    };
    let mut margin = f64::INFINITY;
    for w in checked.into_iter().flatten() {
        rep.non_vacuous += 1;
        if !tol::ge(w.lhs, w.rhs) {
            rep.failures += 1;
        }
        if w.lhs - w.rhs < margin {
            margin = w.lhs - w.rhs;
            rep.worst = Some(w);
        }
    }
    rep.inconclusive = (rep.non_vacuous as f64) < min_share * trials as f64;
    rep.pass = rep.failures == 0 && !rep.inconclusive;
    rep
}

/// Sample `(B, f, u, a)`; when the occupation of `{u < a}` in `B` is below the threshold, require
/// `min_{δB} u >= εa`.
pub fn lemma_of_growth_check(
    family: &SampleFamily,
    lg: &LgParams,
    cfg: &GrowthConfig,
) -> Result<GrowthReport> {
    let unit = |v: f64| v > 0.0 && v < 1.0;
    if !(unit(cfg.eps) && unit(cfg.delta)) {
        return Err(Error::Param(format!(
            "eps = {}, delta = {} must lie in (0,1)",
            cfg.eps, cfg.delta
        )));
    }
    let form = family.form();
    let s = form.space();
    let centers = center_sample(s.n(), cfg.max_centers);
    let checked = (0..cfg.trials)
        .into_par_iter()
        .map(|i| -> Result<Option<TrialWitness>> {
            let mut rng = seed::rng(cfg.seed, &[0x16, i as u64]);
            let center = centers[rng.gen_range(0..centers.len())];
            let radii = admissible_radii(s, center, lg.sigma);
            if radii.is_empty() {
                return Ok(None);
            }
            let (ri, r) = radii[rng.gen_range(0..radii.len())];
            let sample = rng.gen_range(0..cfg.samples.max(1));
            let big = Ball::new(center, r);
            let smp = family.draw(&big, ri, sample)?;
            let u = &smp.u;
            let row = s.dist_row(center);
            let b = s.ball_points(&big);
            // Half the levels sit at or below min_B u, the rest at a random value of u on B.
            let a = if rng.gen_bool(0.5) {
                min_on(u, &b) * rng.gen_range(0.5..=1.0)
            } else {
                let p = b.indices();
                u[p[rng.gen_range(0..p.len())]] * rng.gen_range(1.0..2.0)
            };
            if !(a > 0.0) {
                return Ok(None);
            }
            let m0 = 1.0 - occupation_ge(s, &b, u, a);
            let u_set = open_ball(&row, (3.0 + cfg.delta) / 4.0 * r);
            let load = s.w(center, r)
                * (tail_unchecked(form, &negative_part(u), &u_set, &b) + sup_on(&smp.f, &b));
            if m0 > lg.threshold(cfg.eps, cfg.delta, load, a) {
                return Ok(None);
            }
            let lhs = min_on(u, &open_ball(&row, cfg.delta * r));
            Ok(Some(TrialWitness {
                trial: i,
                center,
                radius: r,
                sample,
                a,
                lhs,
                rhs: cfg.eps * a,
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(cfg.trials, checked, cfg.min_non_vacuous))
}

/// Majorant sequence of `m_k <= D A 2^{λk} m_{k-1}^q` and its closed-form bound, in log space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeGiorgi {
    /// `ln m_k`, `k = 0..=kmax`; `-∞` for zero.
    pub log_iterates: Vec<f64>,
    /// `ln ((DA)^{1/(q-1)} 2^{λq/(q-1)^2} m_0)^{q^k}`.
    pub log_majorant: Vec<f64>,
    /// `2^{λq/(q-1)^2} (DA)^{1/(q-1)} m_0 <= 1/2`.
    pub small: bool,
    pub bounded: bool,
    /// `m_k → 0`, read off the majorant when `small` holds.
    pub limit_zero: bool,
}

/// Run the De Giorgi recursion with equality and compare with the closed-form majorant.
///
/// The majorant needs `DA >= 1` and `λ >= 0`; other parameters are rejected.
pub fn degiorgi_iteration(
    m0: f64,
    a: f64,
    d: f64,
    lambda: f64,
    q: f64,
    kmax: usize,
) -> Result<DeGiorgi> {
    if !(q > 1.0) {
        return Err(Error::Param(format!("q = {q} must exceed 1")));
    }
    if !(m0 >= 0.0 && m0.is_finite()) {
        return Err(Error::Param(format!(
            "m0 = {m0} must be finite and nonnegative"
        )));
    }
    if !(d * a >= 1.0 && lambda >= 0.0 && (d * a).is_finite() && lambda.is_finite()) {
        return Err(Error::Param(format!(
            "need DA >= 1 and lambda >= 0, got DA = {}, lambda = {lambda}",
            d * a
        )));
    }
    let ln2 = std::f64::consts::LN_2;
    let lda = (d * a).ln();
    let base = lda / (q - 1.0) + lambda * q / (q - 1.0).powi(2) * ln2 + m0.ln();
    let mut log_iterates = vec![m0.ln()];
    let mut log_majorant = vec![base];
    for k in 1..=kmax {
        let prev = log_iterates[k - 1];
        log_iterates.push(if prev == f64::NEG_INFINITY {
            prev
        } else {
            lda + lambda * k as f64 * ln2 + q * prev
        });
        log_majorant.push(if base == f64::NEG_INFINITY {
            base
        } else {
            q.powi(k as i32) * base
        });
    }
    // Both sides are about q^k |ln m0| in size while their exact gap is O(k), so the comparison
    // allows rounding proportional to the size of the summed terms.
    let scale = lda.abs() / (q - 1.0) + lambda * q / (q - 1.0).powi(2) * ln2 + m0.ln().abs();
    let bounded = log_iterates
        .iter()
        .zip(&log_majorant)
        .enumerate()
        .all(|(k, (&l, &m))| {
            l == f64::NEG_INFINITY
                || l <= m + 4.0 * (k + 2) as f64 * f64::EPSILON * q.powi(k as i32) * scale
        });
    let small = base <= -ln2;
    Ok(DeGiorgi {
        log_iterates,
        log_majorant,
        small,
        bounded,
        limit_zero: small && bounded,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Lg0Config {
    pub eps0: f64,
    pub trials: usize,
    pub seed: u64,
    pub samples: usize,
    pub max_centers: Option<usize>,
    /// Draws attempted per trial before it counts as vacuous.
    pub attempts: usize,
    pub min_non_vacuous: f64,
}

impl Default for Lg0Config {
    fn default() -> Self {
        Lg0Config {
            eps0: 0.25,
            trials: 500,
            seed: 0,
            samples: 16,
            max_centers: Some(8),
            attempts: 24,
            min_non_vacuous: 0.1,
        }
    }
}

/// For globally nonnegative superharmonic `u` with `μ(δB ∩ {u<a}) <= ε_0 μ(δB)`, require
/// `min_{δB} u >= C_H^{-1} (1-ε_0)^{1/p} a`.
pub fn lg0_check(
    family: &SampleFamily,
    params: &HarnackParams,
    cfg: &Lg0Config,
) -> Result<GrowthReport> {
    params.validate()?;
    if !(cfg.eps0 >= 0.0 && cfg.eps0 < 1.0) {
        return Err(Error::Param(format!("eps0 = {} outside [0,1)", cfg.eps0)));
    }
    let s = family.form().space();
    let eta = (1.0 - cfg.eps0).powf(1.0 / params.p) / params.c_h;
    let centers = center_sample(s.n(), cfg.max_centers);
    let checked = (0..cfg.trials)
        .into_par_iter()
        .map(|i| -> Result<Option<TrialWitness>> {
            let mut rng = seed::rng(cfg.seed, &[0x10, i as u64]);
            for _ in 0..cfg.attempts {
                let center = centers[rng.gen_range(0..centers.len())];
                let radii = admissible_radii(s, center, params.sigma);
                if radii.is_empty() {
                    continue;
                }
                let (ri, r) = radii[rng.gen_range(0..radii.len())];
                let sample = rng.gen_range(0..cfg.samples.max(1));
                let smp = family.draw(&Ball::new(center, r), ri, sample)?;
                if !(smp.f_zero && smp.nonneg) {
                    continue;
                }
                let u = &smp.u;
                let db = open_ball(&s.dist_row(center), params.delta * r);
                let mut vals: Vec<f64> = db.iter().map(|x| u[x]).collect();
                vals.sort_by(f64::total_cmp);
                let a = vals[rng.gen_range(0..vals.len())] * rng.gen_range(0.5..=1.0);
                if !(a > 0.0) || 1.0 - occupation_ge(s, &db, u, a) > cfg.eps0 {
                    continue;
                }
                let lhs = min_on(u, &db);
                return Ok(Some(TrialWitness {
                    trial: i,
                    center,
                    radius: r,
                    sample,
                    a,
                    lhs,
                    rhs: eta * a,
                }));
            }
            Ok(None)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(cfg.trials, checked, cfg.min_non_vacuous))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harnack::{certify_weh, CertifyConfig, FamilyConfig};
    use crate::spaces;
    use rand::SeedableRng;

    #[test]
    fn degiorgi_zero_start() {
        let g = degiorgi_iteration(0.0, 3.0, 2.0, 1.0, 1.5, 10).unwrap();
        assert!(g.log_iterates.iter().all(|&l| l == f64::NEG_INFINITY));
        assert!(g.small && g.limit_zero);
    }

    #[test]
    fn degiorgi_closed_form_case() {
        let g = degiorgi_iteration(0.25, 1.0, 1.0, 0.0, 2.0, 6).unwrap();
        for (k, &l) in g.log_iterates.iter().enumerate() {
            let want = 2f64.powi(k as i32) * 0.25f64.ln();
            assert!((l - want).abs() <= 1e-12 * want.abs());
        }
        assert!(g.small && g.limit_zero);
    }

    #[test]
    fn degiorgi_rejects_bad_parameters() {
        assert!(degiorgi_iteration(0.1, 1.0, 1.0, 0.0, 1.0, 5).is_err());
        assert!(degiorgi_iteration(-0.1, 1.0, 1.0, 0.0, 2.0, 5).is_err());
        assert!(degiorgi_iteration(0.1, 0.5, 1.0, 0.0, 2.0, 5).is_err());
    }

    #[test]
    fn degiorgi_random_draws_stay_below_majorant() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..1000 {
            let q = rng.gen_range(1.01..3.0);
            let d = rng.gen_range(1.0..50.0);
            let a = rng.gen_range(1.0..10.0);
            let lambda = rng.gen_range(0.0..12.0);
            let m0 = rng.gen_range(0.0..1.0f64).powi(8);
            let g = degiorgi_iteration(m0, a, d, lambda, q, 50).unwrap();
            assert!(g.bounded);
            if g.small {
                assert!(g.limit_zero);
            }
        }
    }

    #[test]
    fn chained_lg_constants() {
        let lg = LgParams::chained(0.5, 1.0, 2.0, 1.0, 1.0, 0.5).unwrap();
        assert_eq!(lg.theta, 2.0);
        assert_eq!(lg.c_l, 4.0);
        // λ = 6, q = 1.5: ε0 = 2^{-6·1.5/0.25 - 1}.
        assert!((lg.epsilon0 - 2f64.powi(-37)).abs() < 1e-25);
        assert!(lg.epsilon0 < 0.5);
    }

    #[test]
    fn constant_level_trivially_passes() {
        let lg = LgParams {
            epsilon0: 0.1,
            theta: 2.0,
            c_l: 3.0,
            sigma: 0.5,
        };
        // u ≡ a: occupation of {u < a} is zero.
        assert!(0.0 <= lg.threshold(0.5, 0.5, 0.0, 1.0));
        assert_eq!(lg.threshold(0.5, 0.5, 1e300, 1e-300), 0.0);
    }

    #[test]
    fn growth_and_lg0_on_torus() {
        let (_, f) = spaces::make_torus(24, 2.0).unwrap();
        let fam_cfg = FamilyConfig {
            seed: 4,
            ..Default::default()
        };
        let fam = SampleFamily::new(&f, fam_cfg.clone());
        let lg = LgParams::chained(0.5, 1.0, 2.0, 1.0, 1.0, 0.5).unwrap();
        let rep = lemma_of_growth_check(
            &fam,
            &lg,
            &GrowthConfig {
                trials: 200,
                samples: 6,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(rep.failures, 0);
        assert!(!rep.inconclusive, "{rep:?}");
        let cert = certify_weh(
            &f,
            &CertifyConfig {
                delta: 0.5,
                sigma: 0.5,
                samples: 6,
                max_centers: Some(8),
                family: fam_cfg,
                ..Default::default()
            },
        )
        .unwrap();
        let rep0 = lg0_check(
            &fam,
            &cert.params,
            &Lg0Config {
                trials: 200,
                samples: 6,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(rep0.failures, 0, "{:?}", rep0.worst);
        assert!(!rep0.inconclusive, "{rep0:?}");
    }

    #[test]
    fn lg0_zero_eps_requires_full_level() {
        let (_, f) = spaces::make_path(9, 2.0).unwrap();
        let fam = SampleFamily::new(&f, FamilyConfig::default());
        let p = HarnackParams {
            p: 0.5,
            delta: 0.5,
            sigma: 0.9,
            c_h: 1.0,
        };
        let rep = lg0_check(
            &fam,
            &p,
            &Lg0Config {
                eps0: 0.0,
                trials: 50,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(rep.failures, 0);
    }
}
