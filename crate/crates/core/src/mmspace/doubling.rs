use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Ball, MetricMeasureSpace, PointSet};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoublingReport {
    /// `sup V(x,2r)/V(x,r)` over all centers and all `r > 0`.
    pub c_mu: f64,
    /// `log2 c_mu`.
    pub d2: f64,
    pub witness_center: usize,
    pub witness_radius: f64,
}

/// Exact doubling constant of the open-ball volume function.
///
/// `V(x,r)` and `V(x,2r)` are both constant on the intervals between consecutive points of
/// `{d_k} ∪ {d_k / 2}` (left-open, right-closed), so evaluating at those breakpoints gives the
/// supremum over every `r > 0`.
pub fn vd_constant(space: &MetricMeasureSpace) -> DoublingReport {
    let mut breaks: Vec<f64> = space
        .distances()
        .iter()
        .flat_map(|&d| [d, 0.5 * d])
        .collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let best = (0..space.n())
        .into_par_iter()
        .map(|x| {
            let prof = space.volume_profile(x);
            let mut best = (1.0, x, space.diam().max(1.0));
            for &r in &breaks {
                let ratio = prof.volume(2.0 * r) / prof.volume(r);
                if ratio > best.0 {
                    best = (ratio, x, r);
                }
            }
            best
        })
        .reduce(|| (1.0, usize::MAX, 0.0), pick_max);
    let (c_mu, x, r) = best;
    DoublingReport {
        c_mu,
        d2: c_mu.log2(),
        witness_center: x,
        witness_radius: r,
    }
}

fn pick_max(a: (f64, usize, f64), b: (f64, usize, f64)) -> (f64, usize, f64) {
    // Ties resolve to the smaller center so the witness is schedule independent.
    if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
        b
    } else {
        a
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReverseDoublingReport {
    pub c_d: f64,
    pub d1: f64,
    pub pass: bool,
    pub pairs: usize,
    pub witness_center: usize,
    pub witness_r: f64,
    pub witness_big_r: f64,
}

/// Least-squares exponent `d1` and the largest `C_d <= 1` with
/// `V(x,R)/V(x,r) >= C_d (R/r)^d1` over grid radii `r <= R < horizon`.
pub fn rvd_constants(space: &MetricMeasureSpace, horizon: f64) -> Result<ReverseDoublingReport> {
    let radii: Vec<f64> = space
        .radius_grid()
        .iter()
        .copied()
        .filter(|&r| r < horizon)
        .collect();
    if radii.len() < 2 {
        return Err(Error::DegenerateGrid {
            horizon,
            found: radii.len(),
        });
    }
    let vols: Vec<Vec<f64>> = (0..space.n())
        .into_par_iter()
        .map(|x| {
            let p = space.volume_profile(x);
            radii.iter().map(|&r| p.volume(r)).collect()
        })
        .collect();
    let (mut sxy, mut sxx, mut pairs) = (0.0, 0.0, 0usize);
    for v in &vols {
        for i in 0..radii.len() {
            for j in i + 1..radii.len() {
                let lx = (radii[j] / radii[i]).ln();
                let ly = (v[j] / v[i]).ln();
                sxy += lx * ly;
                sxx += lx * lx;
                pairs += 1;
            }
        }
    }
    let d1 = sxy / sxx;
    let mut best = (1.0, 0, radii[0], radii[0]);
    for (x, v) in vols.iter().enumerate() {
        for i in 0..radii.len() {
            for j in i + 1..radii.len() {
                let c = (v[j] / v[i]) / (radii[j] / radii[i]).powf(d1);
                if c < best.0 {
                    best = (c, x, radii[i], radii[j]);
                }
            }
        }
    }
    Ok(ReverseDoublingReport {
        c_d: best.0,
        d1,
        pass: d1 > 0.0 && best.0 > 0.0,
        pairs,
        witness_center: best.1,
        witness_r: best.2,
        witness_big_r: best.3,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingEnvelope {
    pub c1: f64,
    pub c2: f64,
    pub beta1: f64,
    pub beta2: f64,
}

/// Tightest `(C1, C2)` with `C1 (R/r)^beta <= w(x,R)/w(y,r) <= C2 (R/r)^beta`.
///
/// Every pair of points is admissible once `R` reaches the diameter, so the prefactor ratio ranges
/// over all of `a(x)/a(y)`.
pub fn scaling_envelope(space: &MetricMeasureSpace) -> ScalingEnvelope {
    let a = &space.scaling().a;
    let lo = a.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = a.iter().copied().fold(0.0, f64::max);
    let beta = space.scaling().beta;
    ScalingEnvelope {
        c1: lo / hi,
        c2: hi / lo,
        beta1: beta,
        beta2: beta,
    }
}

/// `ω_B(A) = μ(A ∩ B) / μ(B)`.
pub fn occupation_measure(space: &MetricMeasureSpace, a: &PointSet, b: &Ball) -> Result<f64> {
    let bs = space.ball_points(b);
    if bs.is_empty() {
        return Err(Error::EmptyBall {
            center: b.center,
            radius: b.radius,
        });
    }
    Ok(space.mass(&a.intersection(&bs)) / space.mass(&bs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mmspace::{Metric, Scaling};
    use crate::spaces;

    /// Brute-force doubling sup over a fine radius grid, independent of the breakpoint argument.
    fn vd_oracle(space: &MetricMeasureSpace, steps: usize) -> f64 {
        let top = space.diam() * 1.25;
        let mut best: f64 = 1.0;
        for x in 0..space.n() {
            for k in 1..=steps {
                let r = top * k as f64 / steps as f64;
                best = best.max(space.volume(x, 2.0 * r) / space.volume(x, r));
            }
        }
        best
    }

    #[test]
    fn torus8_doubling_matches_fine_grid() {
        let (s, _) = spaces::make_torus(8, 2.0).unwrap();
        let vd = vd_constant(&s);
        assert_eq!(vd.c_mu, 3.0);
        assert_eq!(vd_oracle(&s, 4000), 3.0);
    }

    #[test]
    fn single_point_doubling_is_one() {
        let m = Metric::Dense {
            n: 1,
            table: vec![0.0],
        };
        let s = MetricMeasureSpace::new(m, vec![2.0], Scaling::uniform(1, 1.0), false).unwrap();
        assert_eq!(vd_constant(&s).c_mu, 1.0);
    }

    #[test]
    fn dumbbell_doubling_exceeds_torus() {
        let (d, _) = spaces::make_dumbbell(20, 10, 1.0).unwrap();
        let (t, _) = spaces::make_torus(64, 2.0).unwrap();
        let (cd, ct) = (vd_constant(&d).c_mu, vd_constant(&t).c_mu);
        assert!(cd > 5.0 * ct, "{cd} vs {ct}");
        assert!((cd - vd_oracle(&d, 3000)).abs() < 1e-12);
    }

    #[test]
    fn torus64_reverse_doubling_slope() {
        let (s, _) = spaces::make_torus(64, 2.0).unwrap();
        let r = rvd_constants(&s, s.horizon()).unwrap();
        assert!((r.d1 - 1.0).abs() < 0.2, "d1 = {}", r.d1);
        assert!(r.pass && r.c_d > 0.0 && r.c_d <= 1.0);
    }

    #[test]
    fn two_points_reverse_doubling_degenerate() {
        let (s, _) = spaces::make_path(2, 1.0).unwrap();
        assert!(matches!(
            rvd_constants(&s, s.horizon()),
            Err(Error::DegenerateGrid { .. })
        ));
    }

    #[test]
    fn ultrametric_reverse_doubling_slope() {
        let spec = spaces::UltrametricSpec {
            q: 3,
            depths: vec![4, 4],
            ..Default::default()
        };
        let (s, _) = spaces::make_ultrametric_product(&spec).unwrap();
        let r = rvd_constants(&s, s.horizon()).unwrap();
        assert!((r.d1 - 2.0).abs() < 0.3, "d1 = {}", r.d1);
    }

    #[test]
    fn envelope_examples() {
        let (s, _) = spaces::make_torus(6, 2.0).unwrap();
        assert_eq!(
            scaling_envelope(&s),
            ScalingEnvelope {
                c1: 1.0,
                c2: 1.0,
                beta1: 2.0,
                beta2: 2.0
            }
        );
        let m = s.metric().clone();
        let a = vec![1.0, 2.0, 1.5, 1.0, 1.2, 2.0];
        let s2 = MetricMeasureSpace::new(m, vec![1.0; 6], Scaling { a, beta: 1.0 }, false).unwrap();
        let e = scaling_envelope(&s2);
        assert_eq!((e.c1, e.c2), (0.5, 2.0));
    }

    #[test]
    fn occupation_examples() {
        let (s, _) = spaces::make_path(5, 2.0).unwrap();
        let b = Ball::new(2, 1.5);
        let a = PointSet::from_indices(5, [0, 1]);
        assert!((occupation_measure(&s, &a, &b).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(occupation_measure(&s, &s.ball_points(&b), &b).unwrap(), 1.0);
        assert_eq!(
            occupation_measure(&s, &PointSet::from_indices(5, [4]), &b).unwrap(),
            0.0
        );
    }
}
