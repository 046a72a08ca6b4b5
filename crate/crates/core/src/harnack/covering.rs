use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mmspace::{Ball, MetricMeasureSpace, PointSet};
use crate::tol;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KsReport {
    pub enlarged: PointSet,
    /// `[E]_η = B_r`.
    pub full: bool,
    pub mass_e: f64,
    pub mass_enlarged: f64,
    /// `[E]_η = B_r` or `μ([E]_η) >= μ(E)/η`.
    pub holds: bool,
}

/// `[E]_η = ∪ { B_{5ρ}(x) ∩ B_r : x ∈ B_r, 0 < ρ < r, μ(E ∩ B_{5ρ}(x)) > η μ(B_ρ(x)) }`.
///
/// Both balls are constant for `ρ` between consecutive points of `{d, d/5}` over distances `d`
/// from `x`, so it is enough to test those points below `r` and `ρ = r` for the last stretch.
pub fn krylov_safonov_enlarge(
    space: &MetricMeasureSpace,
    e: &PointSet,
    b: &Ball,
    eta: f64,
) -> Result<KsReport> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::Param(format!("eta = {eta} outside (0,1)")));
    }
    if !(b.radius > 0.0 && b.radius < space.horizon() / 5.0) {
        return Err(Error::Param(format!(
            "r = {} must lie in (0, R̄/5)",
            b.radius
        )));
    }
    let br = space.ball_points(b);
    if let Some(x) = e.first_outside(&br) {
        return Err(Error::NotSubset(x));
    }
    let mu = space.mu();
    let mut mask = vec![false; space.n()];
    for x in br.iter() {
        let row = space.dist_row(x);
        let mut rhos: Vec<f64> = row
            .iter()
            .flat_map(|&d| [d, d / 5.0])
            .filter(|&t| t > 0.0 && t < b.radius)
            .chain(std::iter::once(b.radius))
            .collect();
        rhos.sort_by(f64::total_cmp);
        rhos.dedup();
        for rho in rhos {
            let small: f64 = (0..space.n())
                .filter(|&y| row[y] < rho)
                .map(|y| mu[y])
                .sum();
            let hit: f64 = e
                .iter()
                .filter(|&y| row[y] < 5.0 * rho)
                .map(|y| mu[y])
                .sum();
            if hit > eta * small {
                for y in br.iter().filter(|&y| row[y] < 5.0 * rho) {
                    mask[y] = true;
                }
            }
        }
    }
    let enlarged = PointSet::from_mask(mask);
    let full = enlarged == br;
    let mass_e = space.mass(e);
    let mass_enlarged = space.mass(&enlarged);
    let holds = full || tol::ge(mass_enlarged, mass_e / eta);
    Ok(KsReport {
        enlarged,
        full,
        mass_e,
        mass_enlarged,
        holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces;

    #[test]
    fn whole_ball_and_empty_set() {
        let (s, _) = spaces::make_torus(64, 2.0).unwrap();
        let b = Ball::new(10, 5.0);
        let br = s.ball_points(&b);
        let full = krylov_safonov_enlarge(&s, &br, &b, 0.3).unwrap();
        assert!(full.full && full.holds);
        let none = krylov_safonov_enlarge(&s, &PointSet::empty(64), &b, 0.3).unwrap();
        assert!(none.enlarged.is_empty() && none.holds);
    }

    #[test]
    fn errors() {
        let (s, _) = spaces::make_torus(64, 2.0).unwrap();
        let b = Ball::new(0, 3.0);
        assert!(krylov_safonov_enlarge(&s, &PointSet::from_indices(64, [10]), &b, 0.5).is_err());
        assert!(krylov_safonov_enlarge(&s, &PointSet::empty(64), &Ball::new(0, 7.0), 0.5).is_err());
        assert!(krylov_safonov_enlarge(&s, &PointSet::empty(64), &b, 1.0).is_err());
    }

    #[test]
    fn set_is_inside_its_enlargement() {
        let (s, _) = spaces::make_torus(64, 2.0).unwrap();
        let b = Ball::new(0, 6.0);
        let e = PointSet::from_indices(64, [0, 2, 61]);
        let k = krylov_safonov_enlarge(&s, &e, &b, 0.5).unwrap();
        assert!(e.is_subset(&k.enlarged));
        assert!(k.holds);
    }
}
