//! Acceptance harness: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::Rng;
use weh_cli::pipeline::{load, run_conditions, run_exit_time, run_harnack, run_holder};
use weh_cli::{Report, RunConfig, SpaceSource};
use weh_core::dirichlet::tail;
use weh_core::harnack::{degiorgi_iteration, krylov_safonov_enlarge, log_energy_check, Variant};
use weh_core::solvers::{mean_exit_time, solve_f_harmonic};
use weh_core::spaces::{self, GeneratorSpec, StableTorusSpec, UltrametricSpec};
use weh_core::spectra::lambda1;
use weh_core::{seed, Ball, BoundaryValueProblem, PointSet};

type Outcome = Result<(bool, String), Box<dyn std::error::Error>>;

const SEED: u64 = 0xacce;

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn config(name: &str) -> Result<RunConfig, Box<dyn std::error::Error>> {
    Ok(RunConfig::load(&configs().join(name))?)
}

fn constant(rep: &Report, check: &str, key: &str) -> f64 {
    rep.check(check)
        .and_then(|c| c.constant(key))
        .unwrap_or(f64::NAN)
}

fn passed(rep: &Report, check: &str) -> bool {
    rep.check(check).is_some_and(|c| c.pass)
}

fn failing(rep: &Report) -> Vec<String> {
    rep.checks
        .iter()
        .filter(|c| !c.pass)
        .map(|c| c.name.clone())
        .collect()
}

fn c1_exact_solves() -> Outcome {
    let (_, form) = spaces::make_path(5, 2.0)?;
    let e = mean_exit_time(&form, &Ball::new(2, 1.5))?;
    let exit_err = [(1, 1.5), (2, 2.0), (3, 1.5)]
        .iter()
        .map(|&(x, v)| (e[x] - v).abs())
        .fold(0.0, f64::max);
    let interior = PointSet::from_indices(5, [1, 2, 3]);
    let lam = lambda1(&form, &interior)?;
    let lam_err = (lam - (2.0 - 2f64.sqrt())).abs();
    let g = vec![0.0, 0.0, 0.0, 0.0, 1.0];
    let u = solve_f_harmonic(
        &form,
        &BoundaryValueProblem {
            domain: interior,
            f: vec![0.0; 5],
            g,
        },
    )?;
    let lin_err = (0..5)
        .map(|x| (u[x] - x as f64 / 4.0).abs())
        .fold(0.0, f64::max);
    let ok = exit_err <= 1e-10 && lam_err <= 1e-9 && lin_err <= 1e-10;
    Ok((
        ok,
        format!(
            "exit err {exit_err:.1e}, lambda1 err {lam_err:.1e}, interpolation err {lin_err:.1e}"
        ),
    ))
}

/// Random jump forms: stable tori and ultrametric products of varying size and exponent.
fn random_form(rng: &mut impl Rng) -> Result<weh_core::DirichletForm, Box<dyn std::error::Error>> {
    Ok(if rng.gen_bool(0.5) {
        let spec = StableTorusSpec {
            n: rng.gen_range(12..=40),
            beta: rng.gen_range(0.3..1.8),
            local: rng.gen_bool(0.3),
        };
        spaces::make_stable_torus(&spec)?.1
    } else {
        let spec = UltrametricSpec {
            depths: vec![rng.gen_range(1..=3), rng.gen_range(1..=3)],
            beta: rng.gen_range(0.5..2.0),
            a_range: rng.gen_range(1.0..3.0),
            seed: rng.gen(),
            ..Default::default()
        };
        spaces::make_ultrametric_product(&spec)?.1
    })
}

fn c2_tail_monotonicity() -> Outcome {
    let mut violations = 0;
    let mut nonzero = 0;
    let mut worst = f64::NEG_INFINITY;
    for i in 0..200u64 {
        let mut rng = seed::rng(SEED, &[2, i]);
        let form = random_form(&mut rng)?;
        let s = form.space();
        let n = s.n();
        let x0 = rng.gen_range(0..n);
        let grid = s.radius_grid();
        let big = Ball::new(x0, grid[rng.gen_range(0..grid.len())]);
        let b_r = s.ball_points(&big);
        let three_quarter = s.ball_points(&big.scaled(0.75));
        let v: Vec<f64> = (0..n)
            .map(|x| {
                if b_r.contains(x) {
                    rng.gen_range(0.0..1.0)
                } else {
                    rng.gen_range(-1.0..1.0)
                }
            })
            .collect();
        let neg: Vec<f64> = v.iter().map(|&t| (-t).max(0.0)).collect();
        // B = B(y, ρ) with its point set inside ¾B_R; shrink ρ until it fits.
        let pts = three_quarter.indices();
        let y = pts[rng.gen_range(0..pts.len())];
        let mut rho = rng.gen_range(0.0..1.0) * big.radius;
        while rho > 0.0 && !s.ball_points(&Ball::new(y, rho)).is_subset(&three_quarter) {
            rho *= 0.5;
        }
        if rho == 0.0 {
            rho = f64::MIN_POSITIVE;
        }
        let small = Ball::new(y, rho);
        let lhs = tail(
            &form,
            &neg,
            &s.ball_points(&small.scaled(0.75)),
            &s.ball_points(&small),
        )?;
        let rhs = tail(&form, &neg, &three_quarter, &b_r)?;
        worst = worst.max(lhs - rhs);
        nonzero += usize::from(lhs > 0.0);
        if lhs > rhs + 1e-12 {
            violations += 1;
        }
    }
    Ok((violations == 0, format!("{violations} violations in 200 instances ({nonzero} with nonzero tail), max lhs - rhs {worst:.2e}")))
}

fn c3_log_energy() -> Outcome {
    let ultra = load(&config("ultrametric_d4.json")?)?.form;
    let stable = spaces::make_stable_torus(&StableTorusSpec {
        n: 64,
        beta: 1.0,
        local: false,
    })?
    .1;
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, form) in [("ultrametric", &ultra), ("stable torus", &stable)] {
        let s = form.space();
        let r = log_energy_check(form, &Ball::new(0, s.diam() / 2.0), 100, SEED);
        ok &= r.worst_slack >= -1e-9;
        parts.push(format!("{name} worst slack {:.3e}", r.worst_slack));
    }
    Ok((ok, parts.join(", ")))
}

fn ultra45() -> Result<RunConfig, Box<dyn std::error::Error>> {
    let mut cfg = config("ultrametric_d4.json")?;
    if let SpaceSource::Generator(GeneratorSpec::UltrametricProduct(u)) = &mut cfg.space {
        u.depths = vec![4, 5];
    }
    Ok(cfg)
}

fn c4_theorem_pipeline() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    let pairs = [
        ("torus", config("torus64.json")?, config("torus128.json")?),
        ("ultrametric", config("ultrametric_d4.json")?, ultra45()?),
    ];
    for (name, small, doubled) in pairs {
        let cond = run_conditions(&small)?;
        let mut c_h = [0.0; 2];
        for (k, cfg) in [&small, &doubled].into_iter().enumerate() {
            let mut cfg = cfg.clone();
            cfg.harnack.p = 0.5;
            cfg.harnack.delta = None;
            let rep = run_harnack(&cfg)?;
            c_h[k] = constant(&rep, "wEH", "c_h");
        }
        let ratio = c_h[0].max(c_h[1]) / c_h[0].min(c_h[1]);
        let good = cond.pass && c_h.iter().all(|c| c.is_finite()) && ratio <= 2.0;
        ok &= good;
        parts.push(format!(
            "{name}: conditions {} (failing {:?}), C_H {:.4} -> {:.4}",
            if cond.pass { "pass" } else { "fail" },
            failing(&cond),
            c_h[0],
            c_h[1]
        ));
    }
    Ok((ok, parts.join("; ")))
}

fn full_harnack() -> Result<Vec<(String, Report)>, Box<dyn std::error::Error>> {
    [
        "torus64_full.json",
        "ultrametric_d4_full.json",
        "stable_torus64_full.json",
    ]
    .iter()
    .map(|f| {
        let mut cfg = config(f)?;
        cfg.harnack.variant_trials = 1000;
        cfg.harnack.crossover_samples = 50;
        Ok((cfg.label(), run_harnack(&cfg)?))
    })
    .collect()
}

fn c5_variants(runs: &[(String, Report)]) -> Outcome {
    let mut ok = true;
    let mut certified = 0;
    let mut parts = Vec::new();
    for (label, rep) in runs {
        if !passed(rep, "wEH") {
            parts.push(format!("{label}: certificate failed"));
            continue;
        }
        certified += 1;
        let mut line = Vec::new();
        for v in Variant::ALL {
            let c = rep.check(v.name());
            let good = c.is_some_and(|c| {
                c.pass
                    && c.constant("failures") == Some(0.0)
                    && c.constant("trials") == Some(1000.0)
            });
            ok &= good;
            let nv = c.and_then(|c| c.constant("non_vacuous")).unwrap_or(0.0);
            line.push(format!(
                "{} {}{}",
                v.name(),
                nv,
                if good { "" } else { " FAIL" }
            ));
        }
        parts.push(format!(
            "{label}: non-vacuous of 1000 [{}]",
            line.join(", ")
        ));
    }
    Ok((ok && certified > 0, parts.join("; ")))
}

fn c6_degiorgi() -> Outcome {
    let mut rng = seed::rng(SEED, &[6]);
    let (mut unbounded, mut small, mut not_zero) = (0, 0, 0);
    for _ in 0..1000 {
        let d = 10f64.powf(rng.gen_range(-1.0..1.5));
        let a = 10f64.powf(rng.gen_range(0.0..2.0)) / d;
        let lambda = rng.gen_range(0.0..4.0);
        let q = rng.gen_range(1.05..3.0);
        let m0 = 10f64.powf(rng.gen_range(-14.0..0.0));
        let r = degiorgi_iteration(m0, a.max(1.0 / d), d, lambda, q, 50)?;
        unbounded += usize::from(!r.bounded);
        if r.small {
            small += 1;
            not_zero += usize::from(!r.limit_zero);
        }
    }
    let ok = unbounded == 0 && not_zero == 0 && small > 0;
    Ok((ok, format!("{unbounded} majorant violations in 1000 draws; {small} small draws, {not_zero} without limit 0")))
}

fn c7_krylov_safonov() -> Outcome {
    let (space, _) = spaces::make_torus(64, 2.0)?;
    let mut violations = 0;
    let mut full = 0;
    for i in 0..200u64 {
        let mut rng = seed::rng(SEED, &[7, i]);
        let b = Ball::new(
            rng.gen_range(0..64),
            rng.gen_range(1.0..space.horizon() / 5.0),
        );
        let br = space.ball_points(&b);
        let density = rng.gen_range(0.05..0.9);
        let mut e: Vec<usize> = br.iter().filter(|_| rng.gen_bool(density)).collect();
        if e.is_empty() {
            e.push(br.indices()[0]);
        }
        let eta = rng.gen_range(0.01..0.99);
        let r = krylov_safonov_enlarge(&space, &PointSet::from_indices(64, e), &b, eta)?;
        violations += usize::from(!r.holds);
        full += usize::from(r.full);
    }
    Ok((
        violations == 0,
        format!("{violations} violations in 200 draws ({full} with [E] = B_r)"),
    ))
}

fn c8_crossover(runs: &[(String, Report)]) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (label, rep) in runs {
        let good = passed(rep, "Crossover") && passed(rep, "JN");
        ok &= good;
        parts.push(format!(
            "{label}: worst product {:.4}, JN product/bound {:.4}{}",
            constant(rep, "Crossover", "worst_product"),
            constant(rep, "JN", "worst_product_over_bound"),
            if good { "" } else { " FAIL" }
        ));
    }
    Ok((ok, parts.join("; ")))
}

fn c9_holder() -> Outcome {
    let stable = run_holder(&config("stable_torus64_full.json")?)?;
    let path = run_holder(&config("path33.json")?)?;
    let (bs, bp) = (
        constant(&stable, "Holder", "beta"),
        constant(&path, "Holder", "beta"),
    );
    let ok = passed(&stable, "Holder") && bs >= 0.2 && passed(&path, "Holder") && bp >= 0.9;
    Ok((
        ok,
        format!(
            "stable torus beta {bs:.3} (C {:.3}), path beta {bp:.3}",
            constant(&stable, "Holder", "c")
        ),
    ))
}

fn c10_exit_time() -> Outcome {
    let a = run_exit_time(&config("torus64.json")?)?;
    let b = run_exit_time(&config("torus128.json")?)?;
    let lo = [
        constant(&a, "Exit", "c_lower"),
        constant(&b, "Exit", "c_lower"),
    ];
    let hi = [
        constant(&a, "Exit", "c_upper"),
        constant(&b, "Exit", "c_upper"),
    ];
    let inside = lo
        .iter()
        .chain(&hi)
        .all(|&c| (1.0 / 16.0..=16.0).contains(&c));
    let spread = |v: [f64; 2]| v[0].max(v[1]) / v[0].min(v[1]);
    let ok = inside && spread(lo) <= 2.0 && spread(hi) <= 2.0;
    Ok((
        ok,
        format!(
            "lower {:.4} / {:.4}, upper {:.4} / {:.4}",
            lo[0], lo[1], hi[0], hi[1]
        ),
    ))
}

fn weh(args: &[&str]) -> Result<std::process::Output, Box<dyn std::error::Error>> {
    Ok(Command::new(env!("CARGO_BIN_EXE_weh"))
        .args(args)
        .output()?)
}

fn c11_negative_control() -> Outcome {
    let mut pi = Vec::new();
    for eps in ["1", "0.1", "0.01"] {
        let mut cfg = config(&format!("dumbbell_eps{eps}.json"))?;
        cfg.conditions = weh_cli::config::ConditionsSection {
            pi: true,
            ..weh_cli::config::ConditionsSection::none()
        };
        pi.push(constant(&run_conditions(&cfg)?, "PI", "constant"));
    }
    let growth = pi.windows(2).all(|w| w[1] >= 5.0 * w[0]);
    let cfg = configs().join("dumbbell_eps0.01.json");
    let cfg = cfg.to_str().ok_or("config path is not UTF-8")?;
    let plain = weh(&["conditions", "--config", cfg])?.status;
    let flagged = weh(&["conditions", "--config", cfg, "--expect-fail", "PI"])?.status;
    let ok = growth && !plain.success() && flagged.success();
    Ok((
        ok,
        format!(
            "PI {:.3} -> {:.3} -> {:.3}; exit {:?} plain, {:?} with --expect-fail PI",
            pi[0],
            pi[1],
            pi[2],
            plain.code(),
            flagged.code()
        ),
    ))
}

fn c12_determinism() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (suite, file) in [
        ("harnack", "ultrametric_d4_full.json"),
        ("conditions", "torus64.json"),
        ("holder", "stable_torus64_full.json"),
    ] {
        let cfg = configs().join(file);
        let cfg = cfg.to_str().ok_or("config path is not UTF-8")?;
        let one = weh(&["--threads", "1", suite, "--config", cfg])?;
        let eight = weh(&["--threads", "8", suite, "--config", cfg])?;
        let again = weh(&["--threads", "8", suite, "--config", cfg])?;
        let same =
            !one.stdout.is_empty() && one.stdout == eight.stdout && eight.stdout == again.stdout;
        ok &= same;
        parts.push(format!(
            "{suite} on {file}: {} bytes {}",
            one.stdout.len(),
            if same { "identical" } else { "DIFFER" }
        ));
    }
    Ok((ok, parts.join("; ")))
}

fn main() -> ExitCode {
    let mut all = true;
    let mut report = |n: usize, start: Instant, out: Outcome| {
        let (ok, detail) = out.unwrap_or_else(|e| (false, format!("error: {e}")));
        all &= ok;
        println!(
            "criterion {n}: {} | {detail} [{:.1}s]",
            if ok { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    };
    let t = Instant::now();
    report(1, t, c1_exact_solves());
    let t = Instant::now();
    report(2, t, c2_tail_monotonicity());
    let t = Instant::now();
    report(3, t, c3_log_energy());
    let t = Instant::now();
    report(4, t, c4_theorem_pipeline());
    let t = Instant::now();
    let runs = full_harnack().map_err(|e| e.to_string());
    let with_runs = |f: fn(&[(String, Report)]) -> Outcome| match &runs {
        Ok(r) => f(r),
        Err(e) => Err(e.clone().into()),
    };
    report(5, t, with_runs(c5_variants));
    let t = Instant::now();
    report(6, t, c6_degiorgi());
    let t = Instant::now();
    report(7, t, c7_krylov_safonov());
    let t = Instant::now();
    report(8, t, with_runs(c8_crossover));
    let t = Instant::now();
    report(9, t, c9_holder());
    let t = Instant::now();
    report(10, t, c10_exit_time());
    let t = Instant::now();
    report(11, t, c11_negative_control());
    let t = Instant::now();
    report(12, t, c12_determinism());
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
