//! Weak elliptic Harnack inequality: certification, equivalent variants, and the lemmas that feed
//! or follow from it.

mod covering;
mod crossover;
mod growth;
mod holder;
mod variants;
mod weh;

pub use covering::{krylov_safonov_enlarge, KsReport};
pub use crossover::{
    bmo_norm, crossover_check, crossover_radii, john_nirenberg_check, log_energy_check,
    log_energy_slack, threshold_lambda, CrossoverReport, JnReport, LogEnergyReport,
};
pub use growth::{
    degiorgi_iteration, lemma_of_growth_check, lg0_check, DeGiorgi, GrowthConfig, GrowthReport,
    Lg0Config, LgParams, TrialWitness,
};
pub use holder::{
    harmonic_samples, holder_decay_check, HolderConfig, HolderReport, HolderSample, OscRow,
};
pub use variants::{
    check_weh_variant, constants_translate, ChainAux, Translated, Variant, VariantConfig,
    VariantReport,
};
pub use weh::{
    admissible_radii, certify_weh, default_delta, weh_ratio, CertifyConfig, FamilyConfig,
    HarnackCertificate, HarnackParams, Sample, SampleFamily, WehWitness,
};

use crate::mmspace::{MetricMeasureSpace, PointSet};

/// `u₋ = max(0, -u)`.
pub(crate) fn negative_part(u: &[f64]) -> Vec<f64> {
    u.iter().map(|&v| (-v).max(0.0)).collect()
}

pub(crate) fn sup_on(v: &[f64], s: &PointSet) -> f64 {
    s.iter().map(|x| v[x].abs()).fold(0.0, f64::max)
}

pub(crate) fn min_on(v: &[f64], s: &PointSet) -> f64 {
    s.iter().map(|x| v[x]).fold(f64::INFINITY, f64::min)
}

/// Points at distance `<= t` from `x0`, given the distance row.
pub(crate) fn closed_ball(row: &[f64], t: f64) -> PointSet {
    PointSet::from_mask(row.iter().map(|&d| d <= t).collect())
}

/// Points at distance `< t` from `x0`, given the distance row.
pub(crate) fn open_ball(row: &[f64], t: f64) -> PointSet {
    PointSet::from_mask(row.iter().map(|&d| d < t).collect())
}

/// Distinct distances from a point, ascending; the first entry is 0.
pub(crate) fn distance_classes(row: &[f64]) -> Vec<f64> {
    let mut d = row.to_vec();
    d.sort_by(f64::total_cmp);
    d.dedup();
    d
}

/// `μ(S ∩ {u >= a}) / μ(S)`.
pub(crate) fn occupation_ge(space: &MetricMeasureSpace, s: &PointSet, u: &[f64], a: f64) -> f64 {
    let mu = space.mu();
    s.iter().filter(|&x| u[x] >= a).map(|x| mu[x]).sum::<f64>() / space.mass(s)
}

/// `num / den` with `0/0 = 0` and `x/0 = +∞`.
pub(crate) fn quotient(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else if num > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}
