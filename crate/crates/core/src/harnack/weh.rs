use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{closed_ball, distance_classes, min_on, negative_part, quotient, sup_on};
use crate::dirichlet::{tail, tail_unchecked, DirichletForm};
use crate::error::{Error, Result};
use crate::mmspace::{center_sample, Ball, MetricMeasureSpace, PointSet};
use crate::seed;
use crate::solvers::{is_f_superharmonic, sample_superharmonic, SamplerConfig};

/// Constants `(p, δ, σ, C_H)` of the weak elliptic Harnack inequality.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarnackParams {
    pub p: f64,
    pub delta: f64,
    pub sigma: f64,
    pub c_h: f64,
}

impl HarnackParams {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| v > 0.0 && v < 1.0;
        if !(unit(self.p) && unit(self.delta) && self.sigma > 0.0 && self.sigma <= 1.0) {
            return Err(Error::Param(format!(
                "need p, delta in (0,1) and sigma in (0,1]: {self:?}"
            )));
        }
        if !(self.c_h >= 1.0) {
            return Err(Error::Param(format!("C_H = {} must be >= 1", self.c_h)));
        }
        Ok(())
    }
}

/// `δ = 1 / (32 (4κ + 1))`.
pub fn default_delta(kappa: f64) -> f64 {
    1.0 / (32.0 * (4.0 * kappa + 1.0))
}

fn lp_mean(space: &MetricMeasureSpace, s: &PointSet, u: &[f64], p: f64) -> f64 {
    let mu = space.mu();
    let m: f64 = s.iter().map(|x| mu[x] * u[x].max(0.0).powf(p)).sum::<f64>() / space.mass(s);
    m.powf(1.0 / p)
}

/// `(⨍_{B_r} u^p)^{1/p} / (min_{B_r} u + w(B_r)(T_{¾B_R,B_R}(u₋) + ‖f‖_{∞,B_R}))`.
///
/// `u` must be nonnegative and `f`-superharmonic in `B_R`; this is checked.
pub fn weh_ratio(
    form: &DirichletForm,
    u: &[f64],
    f: &[f64],
    big: &Ball,
    small: &Ball,
    p: f64,
) -> Result<f64> {
    if big.center != small.center || !(small.radius > 0.0 && small.radius <= big.radius) {
        return Err(Error::Param(format!(
            "{small:?} is not a concentric sub-ball of {big:?}"
        )));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Param(format!("p = {p} outside (0, 1]")));
    }
    let s = form.space();
    let omega = s.ball_points(big);
    let ver = is_f_superharmonic(form, u, &omega, f);
    if !ver.holds {
        return Err(Error::NotSuperharmonic(
            ver.min_slack,
            ver.worst_point.unwrap_or(big.center),
        ));
    }
    if let Some(x) = omega.iter().find(|&x| u[x] < 0.0) {
        return Err(Error::NegativeInDomain(x));
    }
    let inner = s.ball_points(small);
    let three_q = s.ball_points(&big.scaled(0.75));
    let t = tail(form, &negative_part(u), &three_q, &omega)?;
    let den = min_on(u, &inner) + s.w_ball(small) * (t + sup_on(f, &omega));
    Ok(quotient(lp_mean(s, &inner, u, p), den))
}

/// Knobs of the deterministic superharmonic family used by every Harnack-type sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FamilyConfig {
    pub seed: u64,
    /// `f` is drawn uniformly from `[-f_scale, f_scale]` on the ball.
    pub f_scale: f64,
    pub exterior_scale: f64,
    /// Fraction of exterior points carrying negative data in the signed draws.
    pub negative_fraction: f64,
    pub negative_scale: f64,
}

impl Default for FamilyConfig {
    fn default() -> Self {
        FamilyConfig {
            seed: 0,
            f_scale: 1.0,
            exterior_scale: 1.0,
            negative_fraction: 0.3,
            negative_scale: 4.0,
        }
    }
}

/// One draw: `u` is `f`-superharmonic and nonnegative in the ball.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub f: Vec<f64>,
    pub u: Vec<f64>,
    pub f_zero: bool,
    /// `u >= 0` on the whole space.
    pub nonneg: bool,
}

/// Superharmonic functions indexed by `(ball center, radius index, sample index)`.
///
/// A draw depends only on its index and the family seed, so sweeps over different sample counts
/// see nested families.
#[derive(Clone, Debug)]
pub struct SampleFamily<'a> {
    form: &'a DirichletForm,
    cfg: FamilyConfig,
}

impl<'a> SampleFamily<'a> {
    pub fn new(form: &'a DirichletForm, cfg: FamilyConfig) -> Self {
        SampleFamily { form, cfg }
    }

    pub fn form(&self) -> &DirichletForm {
        self.form
    }

    /// Draw for ball `big`; `r_index` is the position of `big.radius` in the radius grid.
    ///
    /// A third of the draws have `f = 0` and nonnegative exterior data, a third have random `f`,
    /// and a third also carry negative exterior data.
    pub fn draw(&self, big: &Ball, r_index: usize, sample: usize) -> Result<Sample> {
        let n = self.form.n();
        let omega = self.form.space().ball_points(big);
        let key = [big.center as u64, r_index as u64, sample as u64];
        let mut rng = seed::rng(self.cfg.seed, &key);
        let kind = rng.gen_range(0..3u8);
        let mut f = vec![0.0; n];
        if kind > 0 {
            for x in omega.iter() {
                f[x] = self.cfg.f_scale * rng.gen_range(-1.0..=1.0);
            }
        }
        let sampler = SamplerConfig {
            noise_scale: None,
            exterior_scale: self.cfg.exterior_scale,
            negative_fraction: if kind == 2 {
                self.cfg.negative_fraction
            } else {
                0.0
            },
            negative_scale: self.cfg.negative_scale,
        };
        let u = sample_superharmonic(
            self.form,
            &omega,
            &f,
            seed::derive(self.cfg.seed, &key),
            &sampler,
        )?;
        let nonneg = u.iter().all(|&v| v >= 0.0);
        Ok(Sample {
            f,
            u,
            f_zero: kind == 0,
            nonneg,
        })
    }
}

/// Grid radii `R < σ R̄` around `center` whose ball is a proper subset of the space, with their
/// index in the radius grid.
pub fn admissible_radii(
    space: &MetricMeasureSpace,
    center: usize,
    sigma: f64,
) -> Vec<(usize, f64)> {
    let reach = space.dist_row(center).into_iter().fold(0.0, f64::max);
    space
        .radius_grid()
        .iter()
        .copied()
        .enumerate()
        .filter(|&(_, r)| r < sigma * space.horizon() && r <= reach)
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CertifyConfig {
    pub p: f64,
    pub delta: f64,
    pub sigma: f64,
    /// Superharmonic draws per outer ball.
    pub samples: usize,
    pub max_centers: Option<usize>,
    pub family: FamilyConfig,
    /// Certificates with a larger worst ratio fail.
    pub c_h_max: Option<f64>,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        CertifyConfig {
            p: 0.5,
            delta: default_delta(1.0),
            sigma: 0.5,
            samples: 16,
            max_centers: Some(8),
            family: FamilyConfig::default(),
            c_h_max: None,
        }
    }
}

/// Where the worst ratio was found; replay with [`SampleFamily::draw`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WehWitness {
    pub center: usize,
    pub big_radius: f64,
    pub r_index: usize,
    pub sample: usize,
    /// Largest distance inside the inner ball.
    pub inner_radius: f64,
    pub family_seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarnackCertificate {
    pub params: HarnackParams,
    pub worst_ratio: f64,
    pub witness: Option<WehWitness>,
    pub sample_count: usize,
    /// Inner distance classes evaluated across all samples.
    pub pairs: usize,
    pub pass: bool,
    pub note: Option<String>,
}

/// Supremum of the ratio over all concentric pairs `B_r ⊂ B_{R'}` with `r <= δR'` and `R' <= R`,
/// for one `u` superharmonic in `B(x0, R)`.
///
/// The inner ball only depends on which distance class `r` falls in. Within the class
/// `(d_{k-1}, d_k]` the ratio grows as `r` and `R'` shrink, and the exterior sum of `u₋` does not
/// depend on `R'` because `u₋` vanishes on `B(x0, R)`. The supremum is therefore the limit
/// `r ↓ d_{k-1}`, `R' ↓ d_{k-1}/δ`, where `¾B_{R'}` and `B_{R'}` shrink to closed balls.
fn class_sup(
    form: &DirichletForm,
    u: &[f64],
    f: &[f64],
    big: &Ball,
    delta: f64,
    p: f64,
) -> (f64, f64, usize) {
    let s = form.space();
    let row = s.dist_row(big.center);
    let omega = s.ball_points(big);
    let neg = negative_part(u);
    let mut best = (f64::NEG_INFINITY, 0.0, 0);
    for &d in distance_classes(&row)
        .iter()
        .take_while(|&&d| d < delta * big.radius)
    {
        let inner = closed_ball(&row, d);
        let num = lp_mean(s, &inner, u, p);
        let mut den = min_on(u, &inner);
        if d > 0.0 {
            let t = tail_unchecked(form, &neg, &closed_ball(&row, 0.75 * d / delta), &omega);
            den += s.w(big.center, d) * (t + sup_on(f, &closed_ball(&row, d / delta)));
        }
        let q = quotient(num, den);
        if q > best.0 {
            best.0 = q;
            best.1 = d;
        }
        best.2 += 1;
    }
    best
}

/// Worst Harnack ratio over sampled superharmonic functions and all admissible ball pairs.
pub fn certify_weh(form: &DirichletForm, cfg: &CertifyConfig) -> Result<HarnackCertificate> {
    let probe = HarnackParams {
        p: cfg.p,
        delta: cfg.delta,
        sigma: cfg.sigma,
        c_h: 1.0,
    };
    probe.validate()?;
    let s = form.space();
    let family = SampleFamily::new(form, cfg.family.clone());
    let jobs: Vec<(usize, usize, f64)> = center_sample(s.n(), cfg.max_centers)
        .into_iter()
        .flat_map(|c| {
            admissible_radii(s, c, cfg.sigma)
                .into_iter()
                .map(move |(i, r)| (c, i, r))
        })
        .collect();
    let per_job: Vec<(f64, Option<WehWitness>, usize)> = jobs
        .par_iter()
        .map(|&(c, ri, r)| {
            let big = Ball::new(c, r);
            let mut best: (f64, Option<WehWitness>, usize) = (f64::NEG_INFINITY, None, 0);
            for k in 0..cfg.samples {
                let smp = family.draw(&big, ri, k)?;
                let (q, d, m) = class_sup(form, &smp.u, &smp.f, &big, cfg.delta, cfg.p);
                best.2 += m;
                if m > 0 && q > best.0 {
                    best.0 = q;
                    best.1 = Some(WehWitness {
                        center: c,
                        big_radius: r,
                        r_index: ri,
                        sample: k,
                        inner_radius: d,
                        family_seed: cfg.family.seed,
                    });
                }
            }
            Ok(best)
        })
        .collect::<Result<_>>()?;
    let mut worst = f64::NEG_INFINITY;
    let mut witness = None;
    let mut pairs = 0;
    for (q, w, m) in per_job {
        pairs += m;
        if q > worst {
            worst = q;
            witness = w;
        }
    }
    let sample_count = jobs.len() * cfg.samples;
    if pairs == 0 {
        return Ok(HarnackCertificate {
            params: probe,
            worst_ratio: 0.0,
            witness: None,
            sample_count,
            pairs,
            pass: false,
            note: Some("no admissible ball pairs".into()),
        });
    }
    let pass = worst.is_finite() && cfg.c_h_max.map_or(true, |m| worst <= m);
    Ok(HarnackCertificate {
        params: HarnackParams {
            c_h: worst.max(1.0),
            ..probe
        },
        worst_ratio: worst,
        witness,
        sample_count,
        pairs,
        pass,
        note: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces;

    #[test]
    fn constant_has_ratio_one() {
        let (_, f) = spaces::make_torus(16, 2.0).unwrap();
        let u = vec![3.0; 16];
        let r = weh_ratio(
            &f,
            &u,
            &[0.0; 16],
            &Ball::new(0, 6.0),
            &Ball::new(0, 2.0),
            0.5,
        )
        .unwrap();
        assert!((r - 1.0).abs() < 1e-14);
    }

    #[test]
    fn path_linear_harmonic_matches_direct_evaluation() {
        let (_, f) = spaces::make_path(11, 2.0).unwrap();
        let u: Vec<f64> = (0..11).map(|k| k as f64).collect();
        let big = Ball::new(5, 5.0);
        let small = Ball::new(5, 2.5);
        let r = weh_ratio(&f, &u, &[0.0; 11], &big, &small, 0.5).unwrap();
        // B_r = {3..7}; u >= 0 everywhere so the tail vanishes.
        let mean = (3..=7).map(|k| (k as f64).sqrt()).sum::<f64>() / 5.0;
        assert!((r - mean * mean / 3.0).abs() < 1e-12);
    }

    #[test]
    fn ratio_is_homogeneous() {
        let (_, f) = spaces::make_stable_torus(&spaces::StableTorusSpec {
            n: 24,
            beta: 1.0,
            local: false,
        })
        .unwrap();
        let fam = SampleFamily::new(
            &f,
            FamilyConfig {
                seed: 3,
                ..Default::default()
            },
        );
        let big = Ball::new(4, 6.0);
        for k in 0..9 {
            let smp = fam.draw(&big, 0, k).unwrap();
            let r1 = weh_ratio(&f, &smp.u, &smp.f, &big, &Ball::new(4, 2.0), 0.5).unwrap();
            let u2: Vec<f64> = smp.u.iter().map(|v| 4.0 * v).collect();
            let f2: Vec<f64> = smp.f.iter().map(|v| 4.0 * v).collect();
            let r2 = weh_ratio(&f, &u2, &f2, &big, &Ball::new(4, 2.0), 0.5).unwrap();
            assert!((r1 - r2).abs() <= 1e-12 * r1.max(1.0), "{r1} {r2}");
        }
    }

    #[test]
    fn ratio_rejects_bad_input() {
        let (_, f) = spaces::make_path(7, 2.0).unwrap();
        let u: Vec<f64> = (0..7).map(|k| (k as f64 - 3.0).powi(2)).collect();
        let z = [0.0; 7];
        assert!(matches!(
            weh_ratio(&f, &u, &z, &Ball::new(3, 3.0), &Ball::new(3, 1.0), 0.5),
            Err(Error::NotSuperharmonic(..))
        ));
        let lin: Vec<f64> = (0..7).map(|k| k as f64 - 2.0).collect();
        assert!(matches!(
            weh_ratio(&f, &lin, &z, &Ball::new(3, 3.0), &Ball::new(3, 1.0), 0.5),
            Err(Error::NegativeInDomain(1))
        ));
        assert!(weh_ratio(&f, &lin, &z, &Ball::new(3, 3.0), &Ball::new(2, 1.0), 0.5).is_err());
    }

    #[test]
    fn quotient_conventions() {
        assert_eq!(quotient(0.0, 0.0), 0.0);
        assert!(quotient(1.0, 0.0).is_infinite());
        assert_eq!(quotient(1.0, 4.0), 0.25);
    }

    #[test]
    fn class_sup_dominates_explicit_pairs() {
        let (_, f) = spaces::make_ultrametric_product(&spaces::UltrametricSpec {
            q: 2,
            depths: vec![3, 3],
            ..Default::default()
        })
        .unwrap();
        let s = f.space();
        let fam = SampleFamily::new(
            &f,
            FamilyConfig {
                seed: 11,
                ..Default::default()
            },
        );
        let delta = 0.5;
        for (ri, r) in admissible_radii(s, 5, 0.9) {
            let big = Ball::new(5, r);
            for k in 0..6 {
                let smp = fam.draw(&big, ri, k).unwrap();
                let (sup, _, _) = class_sup(&f, &smp.u, &smp.f, &big, delta, 0.5);
                for &rr in s.radius_grid().iter().filter(|&&rr| rr <= delta * r) {
                    let direct =
                        weh_ratio(&f, &smp.u, &smp.f, &big, &Ball::new(5, rr), 0.5).unwrap();
                    assert!(direct <= sup * (1.0 + 1e-12), "{direct} > {sup}");
                }
            }
        }
    }

    #[test]
    fn single_pair_constant_gives_one() {
        let (_, f) = spaces::make_path(3, 2.0).unwrap();
        let cfg = CertifyConfig {
            delta: 0.5,
            sigma: 1.0,
            samples: 4,
            ..Default::default()
        };
        let c = certify_weh(&f, &cfg).unwrap();
        assert!((c.worst_ratio - 1.0).abs() < 1e-12);
        assert!(c.pass);
    }

    #[test]
    fn empty_sweep_is_explicit() {
        let (_, f) = spaces::make_path(4, 2.0).unwrap();
        let cfg = CertifyConfig {
            sigma: 0.01,
            ..Default::default()
        };
        let c = certify_weh(&f, &cfg).unwrap();
        assert!(!c.pass);
        assert_eq!(c.pairs, 0);
        assert!(c.note.is_some());
    }

    #[test]
    fn more_samples_never_lower_the_ratio() {
        let (_, f) = spaces::make_stable_torus(&spaces::StableTorusSpec {
            n: 32,
            beta: 1.0,
            local: false,
        })
        .unwrap();
        let base = CertifyConfig {
            delta: 0.5,
            sigma: 0.5,
            samples: 3,
            max_centers: Some(2),
            ..Default::default()
        };
        let a = certify_weh(&f, &base).unwrap();
        let b = certify_weh(&f, &CertifyConfig { samples: 9, ..base }).unwrap();
        assert!(b.worst_ratio >= a.worst_ratio);
        assert!(a.worst_ratio > 1.0 && a.worst_ratio.is_finite());
    }

    #[test]
    fn family_draws_are_reproducible_and_superharmonic() {
        let (_, f) = spaces::make_torus(20, 2.0).unwrap();
        let fam = SampleFamily::new(&f, FamilyConfig::default());
        let big = Ball::new(3, 5.0);
        let omega = f.space().ball_points(&big);
        let mut kinds = [0usize; 2];
        for k in 0..30 {
            let a = fam.draw(&big, 2, k).unwrap();
            assert_eq!(a, fam.draw(&big, 2, k).unwrap());
            assert!(is_f_superharmonic(&f, &a.u, &omega, &a.f).holds);
            kinds[a.f_zero as usize] += 1;
        }
        assert!(kinds[0] > 0 && kinds[1] > 0);
    }
}
