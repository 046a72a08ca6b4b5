use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::DirichletForm;
use crate::error::{Error, Result};
use crate::mmspace::{scaling_envelope, vd_constant, PointSet};

/// `T_{U,Ω}(v) = max_{x∈U} Σ_{y∉Ω} |v(y)| Jm[x][y] / μ(x)`.
pub fn tail(form: &DirichletForm, v: &[f64], u: &PointSet, omega: &PointSet) -> Result<f64> {
    if let Some(x) = u.first_outside(omega) {
        return Err(Error::NotSubset(x));
    }
    Ok(tail_unchecked(form, v, u, omega))
}

pub(crate) fn tail_unchecked(
    form: &DirichletForm,
    v: &[f64],
    u: &PointSet,
    omega: &PointSet,
) -> f64 {
    let mu = form.space().mu();
    u.iter()
        .map(|x| {
            form.links(x)
                .iter()
                .filter(|l| l.jump > 0.0 && !omega.contains(l.to))
                .map(|l| v[l.to].abs() * l.jump)
                .sum::<f64>()
                / mu[x]
        })
        .fold(0.0, f64::max)
}

/// `Tail_w(v; x0, R) = Σ_{z∉B(x0,R)} |v(z)| μ(z) / (V(x0, d(x0,z)) w(x0, d(x0,z)))`.
pub fn tail_w(form: &DirichletForm, v: &[f64], center: usize, r: f64) -> f64 {
    let s = form.space();
    let prof = s.volume_profile(center);
    let row = s.dist_row(center);
    (0..s.n())
        .filter(|&z| row[z] >= r && v[z] != 0.0)
        .map(|z| v[z].abs() * s.mu()[z] / (prof.volume(row[z]) * s.w(center, row[z])))
        .sum()
}

/// `sup_{x,R} w(x,R) J(x, B(x,R)^c)`, exact over all `R > 0`.
///
/// The complement mass is constant for `R` between consecutive neighbor distances and `w` is
/// increasing, so the supremum is attained at a neighbor distance.
pub fn tj_constant(form: &DirichletForm) -> (f64, usize, f64) {
    let s = form.space();
    (0..s.n())
        .into_par_iter()
        .map(|x| {
            let mut nb: Vec<(f64, f64)> = form
                .links(x)
                .iter()
                .filter(|l| l.jump > 0.0)
                .map(|l| (s.dist(x, l.to), l.jump / s.mu()[x]))
                .collect();
            nb.sort_by(|a, b| b.0.total_cmp(&a.0));
            let mut best = (0.0, x, 0.0);
            let mut acc = 0.0;
            for (k, &(d, m)) in nb.iter().enumerate() {
                acc += m;
                if k + 1 < nb.len() && nb[k + 1].0 == d {
                    continue;
                }
                let val = s.w(x, d) * acc;
                if val > best.0 {
                    best = (val, x, d);
                }
            }
            best
        })
        .reduce(
            || (0.0, usize::MAX, 0.0),
            |a, b| {
                if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                    b
                } else {
                    a
                }
            },
        )
}

/// Smallest `C` with `J(x,y) <= C / (V(x,d) w(x,d))`, where `J(x,y) = Jm[x][y] / (μ(x) μ(y))`.
pub fn j_upper_constant(form: &DirichletForm) -> f64 {
    let s = form.space();
    (0..s.n())
        .into_par_iter()
        .map(|x| {
            let prof = s.volume_profile(x);
            form.links(x)
                .iter()
                .filter(|l| l.jump > 0.0)
                .map(|l| {
                    let d = s.dist(x, l.to);
                    l.jump / (s.mu()[x] * s.mu()[l.to]) * prof.volume(d) * s.w(x, d)
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

/// Constant in `T_{¾B_R,B_R}(v) <= C' Tail_w(v; x0, R)` built as `C C_μ 7^{d2} C2 4^{β2}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailCompare {
    pub c_j: f64,
    pub c_mu: f64,
    pub d2: f64,
    pub c2: f64,
    pub beta2: f64,
    pub c_prime: f64,
}

impl TailCompare {
    pub fn measure(form: &DirichletForm) -> Self {
        let vd = vd_constant(form.space());
        let env = scaling_envelope(form.space());
        let c_j = j_upper_constant(form);
        let c_prime = c_j * vd.c_mu * 7f64.powf(vd.d2) * env.c2 * 4f64.powf(env.beta2);
        TailCompare {
            c_j,
            c_mu: vd.c_mu,
            d2: vd.d2,
            c2: env.c2,
            beta2: env.beta2,
            c_prime,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mmspace::Ball;
    use crate::spaces;
    use rand::Rng;

    #[test]
    fn trivial_tails() {
        let (_, f) = spaces::make_stable_torus(&spaces::StableTorusSpec {
            n: 12,
            beta: 1.0,
            local: false,
        })
        .unwrap();
        let s = f.space();
        let om = s.ball_points(&Ball::new(0, 3.0));
        let u = s.ball_points(&Ball::new(0, 2.0));
        assert_eq!(tail(&f, &[0.0; 12], &u, &om).unwrap(), 0.0);
        let inside: Vec<f64> = (0..12)
            .map(|i| if om.contains(i) { 1.0 } else { 0.0 })
            .collect();
        assert_eq!(tail(&f, &inside, &u, &om).unwrap(), 0.0);
        assert!(matches!(
            tail(&f, &inside, &om, &u),
            Err(Error::NotSubset(_))
        ));
        assert_eq!(tail_w(&f, &[0.0; 12], 0, 2.0), 0.0);
    }

    #[test]
    fn tail_of_one_is_kernel_mass_outside() {
        let (_, f) = spaces::make_stable_torus(&spaces::StableTorusSpec {
            n: 16,
            beta: 1.0,
            local: false,
        })
        .unwrap();
        let s = f.space();
        let ones = vec![1.0; 16];
        for x in 0..16 {
            for &r in &[1.0, 2.5, 4.0] {
                let b = s.ball_points(&Ball::new(x, r));
                let direct: f64 = (0..16)
                    .filter(|&y| s.dist(x, y) >= r)
                    .map(|y| {
                        let d = s.dist(x, y);
                        d.powf(-2.0)
                    })
                    .sum();
                let t = tail(&f, &ones, &PointSet::from_indices(16, [x]), &b).unwrap();
                assert!((t - direct).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn single_far_atom_tail_w() {
        let (_, f) = spaces::make_stable_torus(&spaces::StableTorusSpec {
            n: 16,
            beta: 1.0,
            local: false,
        })
        .unwrap();
        let mut v = vec![0.0; 16];
        v[5] = -2.0;
        // d(0,5) = 5, V(0,5) = 9 open-ball points, w = 5.
        assert!((tail_w(&f, &v, 0, 3.0) - 2.0 / (9.0 * 5.0)).abs() < 1e-15);
        assert_eq!(tail_w(&f, &v, 0, 6.0), 0.0);
    }

    #[test]
    fn tj_zero_without_jumps() {
        let (_, f) = spaces::make_torus(10, 2.0).unwrap();
        assert_eq!(tj_constant(&f).0, 0.0);
    }

    #[test]
    fn stable_torus_tj_matches_direct_sum() {
        let (_, f) = spaces::make_stable_torus(&spaces::StableTorusSpec {
            n: 64,
            beta: 1.0,
            local: false,
        })
        .unwrap();
        // Direct oracle: w(R) * Σ_{d>=R} (#points at distance d) d^-2 at integer R.
        let mut oracle: f64 = 0.0;
        for r in 1..=32u32 {
            let sum: f64 = (r..=32)
                .map(|d| if d == 32 { 1.0 } else { 2.0 } / (d as f64).powi(2))
                .sum();
            oracle = oracle.max(r as f64 * sum);
        }
        let (c, _, _) = tj_constant(&f);
        assert!((c - oracle).abs() < 1e-12, "{c} vs {oracle}");
        // Geometric-series bound 2R(1/R² + 1/R) <= 4.
        assert!(c <= 4.0);
    }

    #[test]
    fn stable_torus_j_upper_bound() {
        let (_, f) = spaces::make_stable_torus(&spaces::StableTorusSpec {
            n: 32,
            beta: 1.0,
            local: false,
        })
        .unwrap();
        let c = j_upper_constant(&f);
        assert!(c > 0.0 && c < 2.0, "{c}");
    }

    #[test]
    fn tail_bounded_by_weighted_tail() {
        let spec = spaces::UltrametricSpec {
            q: 2,
            depths: vec![3, 3],
            beta: 1.0,
            a_range: 2.0,
            ..Default::default()
        };
        let (_, f) = spaces::make_ultrametric_product(&spec).unwrap();
        let tc = TailCompare::measure(&f);
        let s = f.space();
        let mut rng = crate::seed::rng(3, &[]);
        for _ in 0..200 {
            let x0 = rng.gen_range(0..s.n());
            let r = s.radius_grid()[rng.gen_range(0..s.radius_grid().len())];
            let v: Vec<f64> = (0..s.n()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let big = s.ball_points(&Ball::new(x0, r));
            let small = s.ball_points(&Ball::new(x0, 0.75 * r));
            let t = tail(&f, &v, &small, &big).unwrap();
            assert!(t <= tc.c_prime * tail_w(&f, &v, x0, r) * (1.0 + 1e-12) + 1e-15);
        }
    }
}
