//! Finite metric measure spaces: balls, volumes, doubling constants and the scaling function.

mod doubling;
mod io;
mod metric;
mod set;

pub use doubling::{
    occupation_measure, rvd_constants, scaling_envelope, vd_constant, DoublingReport,
    ReverseDoublingReport, ScalingEnvelope,
};
pub use io::{DistSpec, SpaceFile, SpaceFlags, WSpec};
pub use metric::{Metric, UltrametricCode};
pub use set::PointSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scaling function `w(x, r) = a(x) r^beta`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    pub a: Vec<f64>,
    pub beta: f64,
}

impl Scaling {
    pub fn uniform(n: usize, beta: f64) -> Self {
        Scaling {
            a: vec![1.0; n],
            beta,
        }
    }

    pub fn eval(&self, x: usize, r: f64) -> f64 {
        self.a[x] * r.powf(self.beta)
    }
}

/// Open ball `{y : d(center, y) < radius}`. Identity is the pair, not the point set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: usize,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: usize, radius: f64) -> Self {
        Ball { center, radius }
    }

    pub fn scaled(&self, lambda: f64) -> Ball {
        Ball {
            center: self.center,
            radius: lambda * self.radius,
        }
    }
}

/// A finite metric measure space with a scaling function.
#[derive(Clone, Debug)]
pub struct MetricMeasureSpace {
    metric: Metric,
    mu: Vec<f64>,
    scaling: Scaling,
    ultrametric: bool,
    diam: f64,
    distances: Vec<f64>,
    grid: Vec<f64>,
}

impl MetricMeasureSpace {
    /// Validates every invariant, including the triangle inequality over all triples.
    pub fn new(metric: Metric, mu: Vec<f64>, scaling: Scaling, ultrametric: bool) -> Result<Self> {
        metric.validate_basic()?;
        if let Metric::Dense { .. } = metric {
            metric.validate_triangle()?;
        }
        let space = Self::assemble(metric, mu, scaling, ultrametric)?;
        if space.ultrametric
            && matches!(space.metric, Metric::Dense { .. })
            && !space.metric.is_ultrametric()
        {
            return Err(Error::Invalid(
                "flagged ultrametric but the max-triangle inequality fails".into(),
            ));
        }
        Ok(space)
    }

    /// Skips the cubic triangle-inequality scan; for generators that build metrics by construction.
    pub(crate) fn new_trusted(
        metric: Metric,
        mu: Vec<f64>,
        scaling: Scaling,
        ultrametric: bool,
    ) -> Result<Self> {
        metric.validate_basic()?;
        Self::assemble(metric, mu, scaling, ultrametric)
    }

    fn assemble(metric: Metric, mu: Vec<f64>, scaling: Scaling, ultrametric: bool) -> Result<Self> {
        let n = metric.n();
        if n == 0 {
            return Err(Error::Invalid("space has no points".into()));
        }
        if mu.len() != n {
            return Err(Error::Invalid(format!(
                "mu has {} entries, expected {n}",
                mu.len()
            )));
        }
        if let Some(i) = mu.iter().position(|m| !(m.is_finite() && *m > 0.0)) {
            return Err(Error::Invalid(format!(
                "mu[{i}] = {} is not positive",
                mu[i]
            )));
        }
        if scaling.a.len() != n {
            return Err(Error::Invalid(format!(
                "w.a has {} entries, expected {n}",
                scaling.a.len()
            )));
        }
        if let Some(i) = scaling.a.iter().position(|a| !(a.is_finite() && *a > 0.0)) {
            return Err(Error::Invalid(format!(
                "w.a[{i}] = {} is not positive",
                scaling.a[i]
            )));
        }
        if !(scaling.beta.is_finite() && scaling.beta > 0.0) {
            return Err(Error::Invalid(format!(
                "w.beta = {} is not positive",
                scaling.beta
            )));
        }
        let distances = metric.distinct_distances();
        let diam = distances.last().copied().unwrap_or(0.0);
        let mut grid = distances.clone();
        grid.extend(distances.windows(2).map(|w| 0.5 * (w[0] + w[1])));
        grid.sort_by(f64::total_cmp);
        Ok(MetricMeasureSpace {
            metric,
            mu,
            scaling,
            ultrametric,
            diam,
            distances,
            grid,
        })
    }

    pub fn n(&self) -> usize {
        self.mu.len()
    }

    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    pub fn dist(&self, x: usize, y: usize) -> f64 {
        self.metric.dist(x, y)
    }

    pub fn dist_row(&self, x: usize) -> Vec<f64> {
        self.metric.row(x)
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn scaling(&self) -> &Scaling {
        &self.scaling
    }

    pub fn is_ultrametric(&self) -> bool {
        self.ultrametric
    }

    pub fn diam(&self) -> f64 {
        self.diam
    }

    /// Sorted distinct positive distances.
    pub fn distances(&self) -> &[f64] {
        &self.distances
    }

    /// Distinct distances plus midpoints between consecutive values.
    pub fn radius_grid(&self) -> &[f64] {
        &self.grid
    }

    /// Default test horizon `R̄`.
    pub fn horizon(&self) -> f64 {
        self.diam
    }

    pub fn w(&self, x: usize, r: f64) -> f64 {
        self.scaling.eval(x, r)
    }

    pub fn w_ball(&self, b: &Ball) -> f64 {
        self.w(b.center, b.radius)
    }

    pub fn ball_points(&self, b: &Ball) -> PointSet {
        let row = self.dist_row(b.center);
        PointSet::from_mask(row.iter().map(|&d| d < b.radius).collect())
    }

    pub fn mass(&self, s: &PointSet) -> f64 {
        s.iter().map(|i| self.mu[i]).sum()
    }

    pub fn volume(&self, center: usize, r: f64) -> f64 {
        let row = self.dist_row(center);
        row.iter()
            .zip(&self.mu)
            .filter(|(d, _)| **d < r)
            .map(|(_, m)| m)
            .sum()
    }

    /// Distances from `center` sorted ascending, with cumulative masses.
    pub fn volume_profile(&self, center: usize) -> VolumeProfile {
        let row = self.dist_row(center);
        let mut order: Vec<usize> = (0..row.len()).collect();
        order.sort_by(|&a, &b| row[a].total_cmp(&row[b]));
        let mut cum = Vec::with_capacity(order.len());
        let mut acc = 0.0;
        for &i in &order {
            acc += self.mu[i];
            cum.push(acc);
        }
        VolumeProfile {
            dist: order.iter().map(|&i| row[i]).collect(),
            cum,
        }
    }

    /// Mean over a set, `⨍_S u dμ`.
    pub fn average(&self, s: &PointSet, u: &[f64]) -> f64 {
        let m = self.mass(s);
        s.iter().map(|i| u[i] * self.mu[i]).sum::<f64>() / m
    }

    /// `∫_S u dμ`.
    pub fn integral(&self, s: &PointSet, u: &[f64]) -> f64 {
        s.iter().map(|i| u[i] * self.mu[i]).sum()
    }
}

/// Sorted distances from a fixed center with cumulative masses, for repeated volume queries.
#[derive(Clone, Debug)]
pub struct VolumeProfile {
    dist: Vec<f64>,
    cum: Vec<f64>,
}

impl VolumeProfile {
    /// `V(center, r)` for the open ball.
    pub fn volume(&self, r: f64) -> f64 {
        let k = self.dist.partition_point(|&d| d < r);
        if k == 0 {
            0.0
        } else {
            self.cum[k - 1]
        }
    }

    /// Mass of the closed ball `{d <= r}`.
    pub fn closed_volume(&self, r: f64) -> f64 {
        let k = self.dist.partition_point(|&d| d <= r);
        if k == 0 {
            0.0
        } else {
            self.cum[k - 1]
        }
    }
}

/// Evenly spaced deterministic subset of at most `max` centers.
pub fn center_sample(n: usize, max: Option<usize>) -> Vec<usize> {
    match max {
        Some(m) if m > 0 && m < n => (0..m).map(|k| k * n / m).collect(),
        _ => (0..n).collect(),
    }
}

/// All balls with the given centers and grid radii strictly below `limit`.
pub fn sweep_balls(space: &MetricMeasureSpace, centers: &[usize], limit: f64) -> Vec<Ball> {
    centers
        .iter()
        .flat_map(|&c| {
            space
                .radius_grid()
                .iter()
                .filter(move |&&r| r < limit)
                .map(move |&r| Ball::new(c, r))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces;

    #[test]
    fn path_ball_and_volume() {
        let (s, _) = spaces::make_path(5, 2.0).unwrap();
        assert_eq!(s.ball_points(&Ball::new(2, 1.5)).indices(), &[1, 2, 3]);
        assert_eq!(s.volume(2, 1.5), 3.0);
        assert_eq!(s.ball_points(&Ball::new(0, 10.0)).len(), 5);
    }

    #[test]
    fn torus_ball_and_volume() {
        let (s, _) = spaces::make_torus(8, 2.0).unwrap();
        assert_eq!(
            s.ball_points(&Ball::new(0, 2.5)).indices(),
            &[0, 1, 2, 6, 7]
        );
        assert_eq!(s.volume(0, 4.5), 8.0);
        assert_eq!(s.radius_grid(), &[1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0]);
        let p = s.volume_profile(3);
        for &r in &[0.5, 1.0, 1.2, 2.5, 4.0, 9.0] {
            assert_eq!(p.volume(r), s.volume(3, r));
        }
        assert_eq!(p.closed_volume(1.0), 3.0);
    }

    #[test]
    fn scaled_ball_contains_original() {
        let (s, _) = spaces::make_torus(12, 2.0).unwrap();
        let b = Ball::new(4, 2.5);
        assert!(s.ball_points(&b).is_subset(&s.ball_points(&b.scaled(1.7))));
    }

    #[test]
    fn rejects_bad_mu_with_index() {
        let m = Metric::Dense {
            n: 2,
            table: vec![0.0, 1.0, 1.0, 0.0],
        };
        let err = MetricMeasureSpace::new(m, vec![1.0, 0.0], Scaling::uniform(2, 1.0), false)
            .unwrap_err()
            .to_string();
        assert!(err.contains("mu[1]"), "{err}");
    }

    #[test]
    fn center_sample_is_spread() {
        assert_eq!(center_sample(10, Some(4)), vec![0, 2, 5, 7]);
        assert_eq!(center_sample(3, Some(8)), vec![0, 1, 2]);
    }
}
