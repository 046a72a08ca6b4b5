use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde_json::{json, Value};
use weh_core::dirichlet::{cap_le_constant, gcap_check, tj_constant, FormFile};
use weh_core::harnack::{
    bmo_norm, certify_weh, check_weh_variant, constants_translate, crossover_check,
    crossover_radii, default_delta, harmonic_samples, holder_decay_check, john_nirenberg_check,
    lemma_of_growth_check, lg0_check, log_energy_check, threshold_lambda, CertifyConfig, ChainAux,
    GrowthConfig, HarnackCertificate, Lg0Config, LgParams, Sample, SampleFamily, Variant,
    VariantConfig,
};
use weh_core::mmspace::{
    center_sample, rvd_constants, scaling_envelope, sweep_balls, vd_constant, SpaceFile,
};
use weh_core::solvers::exit_time_bounds_check;
use weh_core::spectra::{fk_constants, nash_check, poincare_constant};
use weh_core::{seed, Ball, DirichletForm, Error, MetricMeasureSpace, PointSet, Result};

use crate::config::{ConditionsSection, RunConfig, SpaceSource};
use crate::report::{check, Report, SpaceSummary};

// Seed streams, one per pipeline stage.
const FAMILY: u64 = 1;
const VARIANTS: u64 = 2;
const GROWTH: u64 = 3;
const GROWTH0: u64 = 4;
const LOG_ENERGY: u64 = 5;
const GCAP: u64 = 6;
const NASH: u64 = 7;
const HOLDER: u64 = 8;

/// The space and form a run operates on.
pub struct Loaded {
    pub form: DirichletForm,
    pub label: String,
}

impl Loaded {
    pub fn space(&self) -> &MetricMeasureSpace {
        self.form.space()
    }

    pub fn summary(&self) -> SpaceSummary {
        let s = self.space();
        SpaceSummary {
            label: self.label.clone(),
            n: s.n(),
            diam: s.diam(),
            beta: s.scaling().beta,
            local_edges: self.form.local_edges().len(),
            jump_pairs: self.form.jump_pairs().len(),
        }
    }
}

pub fn load(cfg: &RunConfig) -> Result<Loaded> {
    let form = match &cfg.space {
        SpaceSource::Generator(g) => g.build()?.1,
        SpaceSource::Files { space, form } => {
            let sf: SpaceFile = serde_json::from_str(&std::fs::read_to_string(space)?)?;
            let ff: FormFile = serde_json::from_str(&std::fs::read_to_string(form)?)?;
            ff.into_form(Arc::new(sf.into_space()?))?
        }
    };
    Ok(Loaded {
        form,
        label: cfg.label(),
    })
}

fn proper(s: &MetricMeasureSpace, b: &Ball) -> bool {
    s.ball_points(b).len() < s.n()
}

fn condition_balls(s: &MetricMeasureSpace, c: &ConditionsSection) -> Vec<Ball> {
    let centers = center_sample(s.n(), c.max_centers);
    sweep_balls(s, &centers, c.sigma * s.horizon())
}

/// First index attaining the maximum; ties keep the earliest entry so results do not depend on
/// evaluation order.
fn argmax(vals: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in vals.iter().enumerate() {
        if best.map_or(true, |b| v > vals[b] || (vals[b].is_nan() && !v.is_nan())) {
            best = Some(i);
        }
    }
    best
}

/// Poincaré sweep: the largest constant over `balls` with enlargement `kappa`.
pub fn poincare_sweep(
    form: &DirichletForm,
    balls: &[Ball],
    kappa: f64,
) -> Result<(f64, Option<Ball>)> {
    let vals: Vec<f64> = balls
        .par_iter()
        .map(|b| poincare_constant(form, b, kappa))
        .collect::<Result<_>>()?;
    Ok(match argmax(&vals) {
        Some(i) => (vals[i], Some(balls[i])),
        None => (0.0, None),
    })
}

/// `κ` and its Poincaré constant: the configured value, or the smallest candidate whose sweep
/// constant is finite (the last candidate if none is).
pub fn select_kappa(
    form: &DirichletForm,
    c: &ConditionsSection,
) -> Result<(f64, f64, Option<Ball>)> {
    let balls = condition_balls(form.space(), c);
    if let Some(k) = c.kappa {
        let (v, w) = poincare_sweep(form, &balls, k)?;
        return Ok((k, v, w));
    }
    let mut last = (0.0, 0.0, None);
    for &k in &c.kappa_candidates {
        let (v, w) = poincare_sweep(form, &balls, k)?;
        if v.is_finite() {
            return Ok((k, v, w));
        }
        last = (k, v, w);
    }
    Ok(last)
}

/// `(B, D)` pairs for Faber–Krahn: `D ∈ {B, ½B, ¼B}` restricted to nonempty proper subsets.
fn fk_pairs(s: &MetricMeasureSpace, balls: &[Ball]) -> Vec<(Ball, PointSet)> {
    let mut out: Vec<(Ball, PointSet)> = Vec::new();
    for b in balls {
        let mut seen: Vec<PointSet> = Vec::new();
        for f in [1.0, 0.5, 0.25] {
            let d = s.ball_points(&b.scaled(f));
            if d.is_empty() || d.len() == s.n() || seen.contains(&d) {
                continue;
            }
            seen.push(d.clone());
            out.push((*b, d));
        }
    }
    out
}

fn random_samples(
    n: usize,
    count: usize,
    base: u64,
    support: Option<&PointSet>,
    lo: f64,
) -> Vec<Vec<f64>> {
    use rand::Rng;
    (0..count)
        .map(|k| {
            let mut rng = seed::rng(base, &[k as u64]);
            (0..n)
                .map(|x| match support {
                    Some(s) if !s.contains(x) => 0.0,
                    _ => rng.gen_range(lo..=1.0),
                })
                .collect()
        })
        .collect()
}

/// Runs the enabled (VD)(RVD)(PI)(FK)(TJ)(Cap≤)(Gcap)(Nash) pipelines.
pub fn run_conditions(cfg: &RunConfig) -> Result<Report> {
    cfg.validate()?;
    let c = &cfg.conditions;
    let loaded = load(cfg)?;
    let mut rep = Report::new("conditions", cfg, loaded.summary());
    if !c.any_enabled() {
        return Ok(rep);
    }
    let form = &loaded.form;
    let s = form.space();
    let balls = condition_balls(s, c);
    let proper_balls: Vec<Ball> = balls.iter().copied().filter(|b| proper(s, b)).collect();

    if c.vd {
        let vd = vd_constant(s);
        rep.push(
            check("VD", vd.c_mu <= c.vd_max)
                .with("c_mu", vd.c_mu)
                .with("d2", vd.d2)
                .with("max", c.vd_max)
                .witness(&json!({"center": vd.witness_center, "radius": vd.witness_radius})),
        );
    }
    if c.rvd {
        let r = rvd_constants(s, s.horizon())?;
        rep.push(
            check("RVD", r.pass)
                .with("c_d", r.c_d)
                .with("d1", r.d1)
                .with("pairs", r.pairs as f64)
                .witness(&json!({"center": r.witness_center, "r": r.witness_r, "big_r": r.witness_big_r})),
        );
    }
    if c.pi {
        let (kappa, value, witness) = select_kappa(form, c)?;
        rep.push(
            check("PI", value <= c.pi_max)
                .with("constant", value)
                .with("kappa", kappa)
                .with("max", c.pi_max)
                .with("balls", balls.len() as f64)
                .witness(&witness),
        );
    }
    let mut nu = None;
    if c.fk {
        let pairs = fk_pairs(s, &proper_balls);
        if pairs.is_empty() {
            rep.push(check("FK", false).note(Some("no proper (B, D) pairs".into())));
        } else {
            let fk = fk_constants(form, &pairs)?;
            nu = Some(fk.nu);
            rep.push(
                check("FK", fk.pass)
                    .with("c_f_inv", fk.c_f_inv)
                    .with("nu", fk.nu)
                    .with("nu_fit", fk.nu_fit)
                    .with("pairs", fk.pairs as f64)
                    .witness(&fk.witness)
                    .note(fk.note),
            );
        }
    }
    if c.tj {
        let (v, x, r) = tj_constant(form);
        let mut ch = check("TJ", v <= c.tj_max)
            .with("constant", v)
            .with("max", c.tj_max);
        if x != usize::MAX && v > 0.0 {
            ch = ch.witness(&json!({"center": x, "radius": r}));
        }
        rep.push(ch);
    }
    if c.cap_le {
        let eligible: Vec<Ball> = proper_balls
            .iter()
            .copied()
            .filter(|b| !s.ball_points(&b.scaled(2.0 / 3.0)).is_empty())
            .collect();
        let r = cap_le_constant(form, &eligible)?;
        rep.push(
            check("Cap", r.constant <= c.cap_max)
                .with("constant", r.constant)
                .with("max", c.cap_max)
                .with("balls", r.evaluated as f64)
                .witness(&r.witness),
        );
    }
    if c.gcap {
        let samples = random_samples(
            s.n(),
            c.samples,
            seed::derive(cfg.seed, &[GCAP]),
            None,
            -1.0,
        );
        let pairs: Vec<(Ball, Ball)> = proper_balls
            .iter()
            .map(|b| (b.scaled(0.5), *b))
            .filter(|(b0, b)| s.ball_points(b0) != s.ball_points(b))
            .collect();
        let vals: Vec<(f64, Option<usize>)> = pairs
            .par_iter()
            .map(|(b0, b)| gcap_check(form, b0, b, &samples).map(|r| (r.constant, r.worst_sample)))
            .collect::<Result<_>>()?;
        let consts: Vec<f64> = vals.iter().map(|v| v.0).collect();
        let (value, witness) = match argmax(&consts) {
            Some(i) => (
                consts[i],
                Some(json!({"ball": pairs[i].1, "inner": pairs[i].0, "sample": vals[i].1})),
            ),
            None => (0.0, None),
        };
        rep.push(
            check("Gcap", value <= c.gcap_max)
                .with("constant", value)
                .with("max", c.gcap_max)
                .with("balls", pairs.len() as f64)
                .witness(&witness),
        );
    }
    if c.nash {
        let nu = nu.unwrap_or(0.5);
        let base = seed::derive(cfg.seed, &[NASH]);
        let vals: Vec<f64> = proper_balls
            .par_iter()
            .enumerate()
            .map(|(i, b)| {
                let support = s.ball_points(b);
                let samples = random_samples(
                    s.n(),
                    c.samples,
                    seed::derive(base, &[i as u64]),
                    Some(&support),
                    0.0,
                );
                nash_check(form, b, &samples, nu).map(|r| r.constant)
            })
            .collect::<Result<_>>()?;
        let (value, witness) = match argmax(&vals) {
            Some(i) => (vals[i], Some(proper_balls[i])),
            None => (0.0, None),
        };
        rep.push(
            check("Nash", value <= c.nash_max)
                .with("constant", value)
                .with("nu", nu)
                .with("max", c.nash_max)
                .witness(&witness),
        );
    }
    Ok(rep)
}

/// Everything a Harnack run derives before sampling.
struct Geometry {
    kappa: f64,
    aux: ChainAux,
    d2: f64,
    nu: f64,
}

fn geometry(cfg: &RunConfig, form: &DirichletForm) -> Result<Geometry> {
    let s = form.space();
    let kappa = match cfg.conditions.kappa {
        Some(k) => k,
        None if cfg.harnack.delta.is_some() && !cfg.harnack.crossover => {
            cfg.conditions.kappa_candidates[0]
        }
        None => select_kappa(form, &cfg.conditions)?.0,
    };
    let vd = vd_constant(s);
    let env = scaling_envelope(s);
    let nu = if cfg.harnack.lg {
        let balls: Vec<Ball> = condition_balls(s, &cfg.conditions)
            .into_iter()
            .filter(|b| proper(s, b))
            .collect();
        let pairs = fk_pairs(s, &balls);
        if pairs.is_empty() {
            0.5
        } else {
            fk_constants(form, &pairs)?.nu
        }
    } else {
        0.5
    };
    Ok(Geometry {
        kappa,
        aux: ChainAux {
            c2: env.c2,
            beta2: env.beta2,
            c_mu: vd.c_mu,
        },
        d2: vd.d2,
        nu,
    })
}

pub fn certify_config(cfg: &RunConfig, kappa: f64) -> CertifyConfig {
    let h = &cfg.harnack;
    CertifyConfig {
        p: h.p,
        delta: h.delta.unwrap_or_else(|| default_delta(kappa)),
        sigma: h.sigma,
        samples: h.samples,
        max_centers: h.max_centers,
        family: h.family.with_seed(seed::derive(cfg.seed, &[FAMILY])),
        c_h_max: h.c_h_max,
    }
}

fn certificate_check(cert: &HarnackCertificate) -> crate::report::Check {
    check("wEH", cert.pass)
        .with("worst_ratio", cert.worst_ratio)
        .with("c_h", cert.params.c_h)
        .with("p", cert.params.p)
        .with("delta", cert.params.delta)
        .with("sigma", cert.params.sigma)
        .with("pairs", cert.pairs as f64)
        .with("samples", cert.sample_count as f64)
        .witness(&cert.witness)
        .note(cert.note.clone())
}

/// Largest admissible radius around each sampled center, with its grid index.
fn outer_balls(
    s: &MetricMeasureSpace,
    max_centers: Option<usize>,
    sigma: f64,
) -> Vec<(Ball, usize)> {
    center_sample(s.n(), max_centers)
        .into_iter()
        .filter_map(|c| {
            weh_core::harnack::admissible_radii(s, c, sigma)
                .last()
                .map(|&(i, r)| (Ball::new(c, r), i))
        })
        .collect()
}

/// Certificate, chained variants and the toggled lemma suites.
pub fn run_harnack(cfg: &RunConfig) -> Result<Report> {
    cfg.validate()?;
    let h = &cfg.harnack;
    let loaded = load(cfg)?;
    let form = &loaded.form;
    let s = form.space();
    let mut rep = Report::new("harnack", cfg, loaded.summary());
    if !h.certificate && !h.log_energy {
        return Ok(rep);
    }
    let geo = geometry(cfg, form)?;
    let ccfg = certify_config(cfg, geo.kappa);
    let family = SampleFamily::new(form, ccfg.family.clone());

    let cert = if h.certificate {
        let cert = certify_weh(form, &ccfg)?;
        rep.push(certificate_check(&cert).with("kappa", geo.kappa));
        rep.tables
            .entry("worst_ratio".into())
            .or_default()
            .push(BTreeMap::from([
                ("n".to_string(), s.n() as f64),
                ("worst_ratio".to_string(), cert.worst_ratio),
            ]));
        Some(cert)
    } else {
        None
    };
    let certified = cert.as_ref().filter(|c| c.pass);
    let blocked =
        |name: &str| check(name, false).note(Some("certificate failed; check not run".into()));

    if h.variants {
        for v in Variant::ALL {
            let Some(cert) = certified else {
                rep.push(blocked(v.name()));
                continue;
            };
            let t = constants_translate(&cert.params, v, &geo.aux)?;
            let vcfg = VariantConfig {
                trials: h.variant_trials,
                seed: seed::derive(cfg.seed, &[VARIANTS, v as u64]),
                samples: h.samples,
                max_centers: h.max_centers,
                min_non_vacuous: h.min_non_vacuous,
            };
            let r = check_weh_variant(&t, &family, &vcfg)?;
            rep.push(
                check(v.name(), r.pass)
                    .with("trials", r.trials as f64)
                    .with("non_vacuous", r.non_vacuous as f64)
                    .with("failures", r.failures as f64)
                    .with("worst_margin", r.worst_margin)
                    .with("delta", t.delta)
                    .with("c", t.c)
                    .vacuous(r.non_vacuous, r.trials)
                    .witness(&r.worst)
                    .note(
                        r.inconclusive
                            .then(|| "inconclusive: too few non-vacuous trials".to_string()),
                    ),
            );
        }
    }
    if h.lg {
        match certified {
            None => rep.push(blocked("LG")),
            Some(cert) => {
                let lg =
                    LgParams::chained(geo.nu, 0.0, geo.aux.beta2, geo.d2, 1.0, cert.params.sigma)?;
                let gcfg = GrowthConfig {
                    trials: h.growth_trials,
                    seed: seed::derive(cfg.seed, &[GROWTH]),
                    samples: h.samples,
                    max_centers: h.max_centers,
                    min_non_vacuous: h.min_non_vacuous,
                    ..GrowthConfig::default()
                };
                let r = lemma_of_growth_check(&family, &lg, &gcfg)?;
                rep.push(
                    growth_check("LG", &r)
                        .with("epsilon0", lg.epsilon0)
                        .with("theta", lg.theta)
                        .with("c_l", lg.c_l),
                );
            }
        }
    }
    if h.lg0 {
        match certified {
            None => rep.push(blocked("LG0")),
            Some(cert) => {
                let lcfg = Lg0Config {
                    trials: h.growth_trials,
                    seed: seed::derive(cfg.seed, &[GROWTH0]),
                    samples: h.samples,
                    max_centers: h.max_centers,
                    min_non_vacuous: h.min_non_vacuous,
                    ..Lg0Config::default()
                };
                let r = lg0_check(&family, &cert.params, &lcfg)?;
                rep.push(growth_check("LG0", &r).with("eps0", lcfg.eps0));
            }
        }
    }
    if h.crossover {
        if certified.is_none() {
            rep.push(blocked("Crossover"));
            if h.john_nirenberg {
                rep.push(blocked("JN"));
            }
        } else {
            crossover_suite(cfg, form, &family, geo.kappa, &mut rep)?;
        }
    }
    if h.log_energy {
        let b = Ball::new(0, 0.5 * s.diam());
        let r = log_energy_check(
            form,
            &b,
            h.log_energy_trials,
            seed::derive(cfg.seed, &[LOG_ENERGY]),
        );
        rep.push(
            check("LogEnergy", r.pass)
                .with("worst_slack", r.worst_slack)
                .with("trials", r.trials as f64)
                .witness(&r.worst_trial.map(|t| json!({"trial": t, "ball": b}))),
        );
    }
    Ok(rep)
}

fn growth_check(name: &str, r: &weh_core::harnack::GrowthReport) -> crate::report::Check {
    check(name, r.pass)
        .with("trials", r.trials as f64)
        .with("non_vacuous", r.non_vacuous as f64)
        .with("failures", r.failures as f64)
        .vacuous(r.non_vacuous, r.trials)
        .witness(&r.worst)
        .note(
            r.inconclusive
                .then(|| "inconclusive: too few non-vacuous trials".to_string()),
        )
}

fn crossover_suite(
    cfg: &RunConfig,
    form: &DirichletForm,
    family: &SampleFamily,
    kappa: f64,
    rep: &mut Report,
) -> Result<()> {
    let h = &cfg.harnack;
    let s = form.space();
    let outer = outer_balls(s, h.max_centers, h.sigma);
    if outer.is_empty() {
        rep.push(check("Crossover", false).note(Some("no admissible outer balls".into())));
        if h.john_nirenberg {
            rep.push(check("JN", false).note(Some("no admissible outer balls".into())));
        }
        return Ok(());
    }
    let per = h.crossover_samples.div_ceil(outer.len());
    struct BallRun {
        ball: Ball,
        cross: weh_core::harnack::CrossoverReport,
        radii: usize,
        jn: Vec<(usize, Option<weh_core::harnack::JnReport>)>,
    }
    let runs: Vec<BallRun> = outer
        .par_iter()
        .enumerate()
        .map(|(bi, &(big, ri))| {
            let count = per.min(h.crossover_samples - (bi * per).min(h.crossover_samples));
            let samples: Vec<Sample> = (0..count)
                .map(|k| family.draw(&big, ri, k))
                .collect::<Result<_>>()?;
            let radii = crossover_radii(s, &big, kappa);
            let cross = crossover_check(form, &big, kappa, &radii, &samples, h.p, h.crossover_cap)?;
            let mut jn = Vec::new();
            if h.john_nirenberg {
                let omega = s.ball_points(&big);
                for (k, smp) in samples.iter().enumerate() {
                    let lambda = threshold_lambda(form, &big, smp);
                    if omega.iter().any(|x| smp.u[x] + lambda <= 0.0) {
                        jn.push((k, None));
                        continue;
                    }
                    let v: Vec<f64> = (0..s.n())
                        .map(|x| {
                            if omega.contains(x) {
                                (smp.u[x] + lambda).ln()
                            } else {
                                0.0
                            }
                        })
                        .collect();
                    let b = bmo_norm(s, &v, &big);
                    if b <= 0.0 {
                        jn.push((k, None));
                        continue;
                    }
                    jn.push((k, Some(john_nirenberg_check(s, &v, &big, b, 1.0)?)));
                }
            }
            Ok(BallRun {
                ball: big,
                cross,
                radii: radii.len(),
                jn,
            })
        })
        .collect::<Result<_>>()?;

    let products: Vec<f64> = runs.iter().map(|r| r.cross.worst_product).collect();
    let worst = argmax(&products).map(|i| &runs[i]);
    let evaluated: usize = runs.iter().map(|r| r.cross.evaluated).sum();
    let radii: usize = runs.iter().map(|r| r.radii).sum();
    let pass = runs.iter().all(|r| r.cross.pass) && evaluated > 0;
    rep.push(
        check("Crossover", pass)
            .with(
                "worst_product",
                worst.map_or(0.0, |r| r.cross.worst_product),
            )
            .with("cap", h.crossover_cap)
            .with("evaluated", evaluated as f64)
            .with("radii", radii as f64)
            .witness(&worst.map(|r| json!({"ball": r.ball, "sample_radius": r.cross.witness})))
            .note((evaluated == 0).then(|| "no radii in range".to_string())),
    );
    if h.john_nirenberg {
        let mut skipped = 0usize;
        let mut checked = 0usize;
        let mut all_pass = true;
        let mut c1: f64 = 0.0;
        let mut worst_ratio = (0.0, Value::Null);
        for r in &runs {
            for (k, j) in &r.jn {
                let Some(j) = j else {
                    skipped += 1;
                    continue;
                };
                checked += 1;
                all_pass &= j.pass;
                c1 = c1.max(j.c1);
                let q = j.worst_product / j.bound;
                if q > worst_ratio.0 {
                    worst_ratio = (
                        q,
                        json!({"ball": r.ball, "sample": k, "c1": j.c1, "product": j.worst_product}),
                    );
                }
            }
        }
        rep.push(
            check("JN", all_pass && checked > 0)
                .with("c1_max", c1)
                .with("c2", 1.0)
                .with("worst_product_over_bound", worst_ratio.0)
                .with("checked", checked as f64)
                .with("skipped", skipped as f64)
                .witness(&worst_ratio.1),
        );
    }
    Ok(())
}

/// Mean exit time bounds over the sweep of proper balls.
pub fn run_exit_time(cfg: &RunConfig) -> Result<Report> {
    cfg.validate()?;
    let e = &cfg.exit_time;
    let loaded = load(cfg)?;
    let form = &loaded.form;
    let s = form.space();
    let mut rep = Report::new("exit_time", cfg, loaded.summary());
    let centers = center_sample(s.n(), e.max_centers);
    let balls: Vec<Ball> = sweep_balls(s, &centers, e.sigma * s.horizon())
        .into_iter()
        .filter(|b| proper(s, b))
        .collect();
    let r = exit_time_bounds_check(form, &balls, e.delta)?;
    let (lo, hi) = (r.c_lower.unwrap_or(f64::NAN), r.c_upper.unwrap_or(f64::NAN));
    rep.push(
        check("Exit", lo >= e.lower_min && hi <= e.upper_max)
            .with("c_lower", lo)
            .with("c_upper", hi)
            .with("lower_min", e.lower_min)
            .with("upper_max", e.upper_max)
            .with("balls", r.balls as f64)
            .witness(&json!({"lower": r.lower_witness, "upper": r.upper_witness})),
    );
    rep.tables
        .entry("exit_time".into())
        .or_default()
        .push(BTreeMap::from([
            ("n".to_string(), s.n() as f64),
            ("c_lower".to_string(), lo),
            ("c_upper".to_string(), hi),
        ]));
    Ok(rep)
}

/// Oscillation decay of harmonic functions.
pub fn run_holder(cfg: &RunConfig) -> Result<Report> {
    cfg.validate()?;
    let hs = &cfg.holder;
    let loaded = load(cfg)?;
    let form = &loaded.form;
    let s = form.space();
    let mut rep = Report::new("holder", cfg, loaded.summary());
    let balls: Vec<Ball> = outer_balls(s, hs.max_centers, hs.sigma)
        .into_iter()
        .map(|b| b.0)
        .collect();
    if balls.is_empty() {
        rep.push(check("Holder", false).note(Some("no admissible balls".into())));
        return Ok(rep);
    }
    let per = hs.samples.div_ceil(balls.len());
    let mut samples = harmonic_samples(form, &balls, per, seed::derive(cfg.seed, &[HOLDER]))?;
    samples.truncate(hs.samples);
    let r = holder_decay_check(form, &samples, &hs.fit)?;
    let beta = r.beta.unwrap_or(0.0);
    rep.push(
        check("Holder", r.pass && beta >= hs.beta_min)
            .with("beta", beta)
            .with("c", r.c)
            .with("pointwise_c", r.pointwise_c.unwrap_or(f64::NAN))
            .with("beta_min", hs.beta_min)
            .with("samples", samples.len() as f64)
            .with("rows", r.rows.len() as f64),
    );
    let rows = rep.tables.entry("oscillation".into()).or_default();
    for row in &r.rows {
        rows.push(BTreeMap::from([
            ("sample".to_string(), row.sample as f64),
            ("rho".to_string(), row.rho),
            ("radius".to_string(), row.radius),
            ("osc".to_string(), row.osc),
            ("norm".to_string(), row.norm),
        ]));
    }
    Ok(rep)
}

/// Replay data for witnesses: the certificate's worst sample is redrawn from its family.
pub fn witness_dump(cfg: &RunConfig, rep: &Report) -> Result<Value> {
    let mut out = serde_json::Map::new();
    for c in &rep.checks {
        if let Some(w) = &c.witness {
            out.insert(c.name.clone(), w.clone());
        }
    }
    if let Some(w) = rep.check("wEH").and_then(|c| c.witness.clone()) {
        let loaded = load(cfg)?;
        let get = |k: &str| {
            w.get(k)
                .cloned()
                .ok_or_else(|| Error::Invalid(format!("witness lacks {k}")))
        };
        let center: usize = serde_json::from_value(get("center")?)?;
        let radius: f64 = serde_json::from_value(get("big_radius")?)?;
        let r_index: usize = serde_json::from_value(get("r_index")?)?;
        let sample: usize = serde_json::from_value(get("sample")?)?;
        let family_seed: u64 = serde_json::from_value(get("family_seed")?)?;
        let fam = SampleFamily::new(&loaded.form, cfg.harnack.family.with_seed(family_seed));
        let smp = fam.draw(&Ball::new(center, radius), r_index, sample)?;
        out.insert(
            "wEH_replay".into(),
            json!({"witness": w, "u": smp.u, "f": smp.f}),
        );
    }
    Ok(Value::Object(out))
}

/// Merges report fragments. A single input passes through unchanged.
pub fn run_report(inputs: Vec<Report>) -> Result<Report> {
    let mut inputs = inputs;
    match inputs.len() {
        0 => return Err(Error::Invalid("report needs at least one input".into())),
        1 => return Ok(inputs.pop().expect("one input")),
        _ => {}
    }
    let mut by_label: BTreeMap<String, &RunConfig> = BTreeMap::new();
    for r in &inputs {
        let (Some(cfg), Some(sp)) = (&r.config, &r.space) else {
            continue;
        };
        if let Some(prev) = by_label.get(&sp.label) {
            if prev.seed != cfg.seed || prev.space != cfg.space {
                return Err(Error::Invalid(format!(
                    "conflicting config echoes for '{}'",
                    sp.label
                )));
            }
        } else {
            by_label.insert(sp.label.clone(), cfg);
        }
    }
    let pass = inputs.iter().all(|r| r.pass);
    Ok(Report {
        schema_version: crate::config::SCHEMA_VERSION,
        kind: "merged".into(),
        environment: crate::report::Environment::current(),
        config: None,
        space: None,
        checks: Vec::new(),
        tables: BTreeMap::new(),
        fragments: inputs,
        pass,
    })
}

/// Leaf reports of a possibly merged report.
pub fn leaves(r: &Report) -> Vec<&Report> {
    if r.fragments.is_empty() {
        vec![r]
    } else {
        r.fragments.iter().flat_map(leaves).collect()
    }
}

/// CSV plot tables as `(file name, contents)`, rows sorted by `(n, label)`.
pub fn csv_tables(r: &Report) -> Result<Vec<(String, String)>> {
    let mut ratio: Vec<(f64, String, f64)> = Vec::new();
    let mut pi: Vec<(f64, String, f64, f64)> = Vec::new();
    let mut exit: Vec<(f64, String, f64, f64)> = Vec::new();
    let mut osc: Vec<(String, BTreeMap<String, f64>)> = Vec::new();
    for leaf in leaves(r) {
        let Some(sp) = &leaf.space else { continue };
        let n = sp.n as f64;
        if let Some(v) = leaf.check("wEH").and_then(|c| c.constant("worst_ratio")) {
            ratio.push((n, sp.label.clone(), v));
        }
        if let Some(v) = leaf.check("PI").and_then(|c| c.constant("constant")) {
            let eps = match leaf.config.as_ref().map(|c| &c.space) {
                Some(SpaceSource::Generator(weh_core::spaces::GeneratorSpec::Dumbbell {
                    eps,
                    ..
                })) => *eps,
                _ => f64::NAN,
            };
            pi.push((n, sp.label.clone(), eps, v));
        }
        if let Some(c) = leaf.check("Exit") {
            exit.push((
                n,
                sp.label.clone(),
                c.constant("c_lower").unwrap_or(f64::NAN),
                c.constant("c_upper").unwrap_or(f64::NAN),
            ));
        }
        for row in leaf.tables.get("oscillation").into_iter().flatten() {
            osc.push((sp.label.clone(), row.clone()));
        }
    }
    let key = |n: f64, l: &String| (n, l.clone());
    ratio.sort_by(|a, b| {
        key(a.0, &a.1)
            .partial_cmp(&key(b.0, &b.1))
            .expect("finite sizes")
    });
    pi.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.1.cmp(&b.1)));
    exit.sort_by(|a, b| {
        key(a.0, &a.1)
            .partial_cmp(&key(b.0, &b.1))
            .expect("finite sizes")
    });

    let mut out = Vec::new();
    let mut emit = |name: &str, header: &[&str], rows: Vec<Vec<String>>| -> Result<()> {
        if rows.is_empty() {
            return Ok(());
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| Error::Invalid(format!("csv: {e}"));
        w.write_record(header).map_err(err)?;
        for row in rows {
            w.write_record(&row).map_err(err)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::Invalid(format!("csv: {e}")))?;
        out.push((
            name.to_string(),
            String::from_utf8(bytes).expect("csv is utf-8"),
        ));
        Ok(())
    };
    let f = |v: f64| format!("{v}");
    emit(
        "worst_ratio.csv",
        &["label", "n", "worst_ratio"],
        ratio
            .iter()
            .map(|(n, l, v)| vec![l.clone(), f(*n), f(*v)])
            .collect(),
    )?;
    emit(
        "pi_constant.csv",
        &["label", "n", "eps", "pi_constant"],
        pi.iter()
            .map(|(n, l, e, v)| vec![l.clone(), f(*n), f(*e), f(*v)])
            .collect(),
    )?;
    emit(
        "exit_time.csv",
        &["label", "n", "c_lower", "c_upper"],
        exit.iter()
            .map(|(n, l, a, b)| vec![l.clone(), f(*n), f(*a), f(*b)])
            .collect(),
    )?;
    emit(
        "oscillation.csv",
        &["label", "sample", "rho", "radius", "osc", "norm"],
        osc.iter()
            .map(|(l, r)| {
                let g = |k: &str| f(r.get(k).copied().unwrap_or(f64::NAN));
                vec![
                    l.clone(),
                    g("sample"),
                    g("rho"),
                    g("radius"),
                    g("osc"),
                    g("norm"),
                ]
            })
            .collect(),
    )?;
    Ok(out)
}
