use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Compact description of a product of ultrametric trees.
///
/// Factor `i` consists of the `q^depths[i]` leaves of a `q`-ary tree; two leaves whose deepest
/// common ancestor sits `l` levels above them are at distance `q^(l / alphas[i])`. The product
/// carries the max metric. A point index stores factor coordinates in mixed radix, factor 0 least
/// significant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UltrametricCode {
    pub q: usize,
    pub depths: Vec<u32>,
    #[serde(default)]
    pub alphas: Vec<f64>,
}

impl UltrametricCode {
    pub fn validate(&self) -> Result<()> {
        if self.q < 2 {
            return Err(Error::Param(format!(
                "ultrametric q = {} must be >= 2",
                self.q
            )));
        }
        if self.depths.is_empty() || self.depths.contains(&0) {
            return Err(Error::Param(
                "ultrametric depths must be non-empty and >= 1".into(),
            ));
        }
        if !self.alphas.is_empty() && self.alphas.len() != self.depths.len() {
            return Err(Error::Param("one alpha per factor expected".into()));
        }
        if self.alphas.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
            return Err(Error::Param("alphas must be positive".into()));
        }
        let mut n: usize = 1;
        for &l in &self.depths {
            n = (self.q as u32)
                .checked_pow(l)
                .and_then(|m| n.checked_mul(m as usize))
                .filter(|&m| m <= 1 << 24)
                .ok_or_else(|| Error::Param("ultrametric product too large".into()))?;
        }
        Ok(())
    }

    pub fn alpha(&self, i: usize) -> f64 {
        self.alphas.get(i).copied().unwrap_or(1.0)
    }

    pub fn factor_size(&self, i: usize) -> usize {
        self.q.pow(self.depths[i])
    }

    pub fn n(&self) -> usize {
        (0..self.depths.len())
            .map(|i| self.factor_size(i))
            .product()
    }

    pub fn coords(&self, x: usize) -> Vec<usize> {
        let mut rest = x;
        (0..self.depths.len())
            .map(|i| {
                let m = self.factor_size(i);
                let c = rest % m;
                rest /= m;
                c
            })
            .collect()
    }

    pub fn index(&self, coords: &[usize]) -> usize {
        let mut x = 0;
        for i in (0..self.depths.len()).rev() {
            x = x * self.factor_size(i) + coords[i];
        }
        x
    }

    /// Levels above the leaves of the deepest common ancestor of two leaves.
    pub fn split_level(&self, a: usize, b: usize) -> u32 {
        let (mut a, mut b, mut l) = (a, b, 0);
        while a != b {
            a /= self.q;
            b /= self.q;
            l += 1;
        }
        l
    }

    pub fn level_distance(&self, factor: usize, level: u32) -> f64 {
        if level == 0 {
            0.0
        } else {
            (self.q as f64).powf(level as f64 / self.alpha(factor))
        }
    }

    pub fn factor_distance(&self, factor: usize, a: usize, b: usize) -> f64 {
        self.level_distance(factor, self.split_level(a, b))
    }

    /// Sorted distinct positive distances realized by the product.
    pub fn distinct_distances(&self) -> Vec<f64> {
        let mut d: Vec<f64> = (0..self.depths.len())
            .flat_map(|i| (1..=self.depths[i]).map(move |l| (i, l)))
            .map(|(i, l)| self.level_distance(i, l))
            .collect();
        d.sort_by(f64::total_cmp);
        d.dedup();
        d
    }
}

/// Distance table of a finite space.
#[derive(Clone, Debug, PartialEq)]
pub enum Metric {
    /// Row-major `n x n` table.
    Dense { n: usize, table: Vec<f64> },
    /// Distances computed on demand from the tree coordinates.
    Ultrametric(UltrametricCode),
}

impl Metric {
    pub fn n(&self) -> usize {
        match self {
            Metric::Dense { n, .. } => *n,
            Metric::Ultrametric(c) => c.n(),
        }
    }

    pub fn dist(&self, x: usize, y: usize) -> f64 {
        match self {
            Metric::Dense { n, table } => table[x * n + y],
            Metric::Ultrametric(c) => {
                if x == y {
                    return 0.0;
                }
                let (mut rx, mut ry) = (x, y);
                let mut d: f64 = 0.0;
                for i in 0..c.depths.len() {
                    let m = c.factor_size(i);
                    d = d.max(c.factor_distance(i, rx % m, ry % m));
                    rx /= m;
                    ry /= m;
                }
                d
            }
        }
    }

    pub fn row(&self, x: usize) -> Vec<f64> {
        match self {
            Metric::Dense { n, table } => table[x * n..(x + 1) * n].to_vec(),
            Metric::Ultrametric(_) => (0..self.n()).map(|y| self.dist(x, y)).collect(),
        }
    }

    /// Sorted distinct positive distances.
    pub fn distinct_distances(&self) -> Vec<f64> {
        match self {
            Metric::Dense { n, table } => {
                let mut d: Vec<f64> = (0..*n)
                    .flat_map(|i| (i + 1..*n).map(move |j| table[i * n + j]))
                    .filter(|&v| v > 0.0)
                    .collect();
                d.sort_by(f64::total_cmp);
                d.dedup();
                d
            }
            Metric::Ultrametric(c) => c.distinct_distances(),
        }
    }

    /// Checks zero diagonal, symmetry, positivity off the diagonal and finiteness.
    pub fn validate_basic(&self) -> Result<()> {
        let Metric::Dense { n, table } = self else {
            return match self {
                Metric::Ultrametric(c) => c.validate(),
                Metric::Dense { .. } => unreachable!(),
            };
        };
        if table.len() != n * n {
            return Err(Error::Invalid(format!(
                "distance table has {} entries, expected {}",
                table.len(),
                n * n
            )));
        }
        for i in 0..*n {
            if table[i * n + i] != 0.0 {
                return Err(Error::Invalid(format!("dist[{i}][{i}] is not zero")));
            }
            for j in 0..*n {
                let d = table[i * n + j];
                if !d.is_finite() || d < 0.0 {
                    return Err(Error::Invalid(format!(
                        "dist[{i}][{j}] = {d} is not a finite nonnegative number"
                    )));
                }
                if i != j && d == 0.0 {
                    return Err(Error::Invalid(format!(
                        "dist[{i}][{j}] = 0 for distinct points"
                    )));
                }
                if d != table[j * n + i] {
                    return Err(Error::Invalid(format!("dist[{i}][{j}] != dist[{j}][{i}]")));
                }
            }
        }
        Ok(())
    }

    /// Triangle inequality over all triples, with a relative slack for rounding.
    pub fn validate_triangle(&self) -> Result<()> {
        use rayon::prelude::*;
        let n = self.n();
        let bad = (0..n).into_par_iter().find_map_first(|i| {
            let ri = self.row(i);
            for j in 0..n {
                let rj = self.row(j);
                for k in 0..n {
                    if ri[k] > ri[j] + rj[k] + 1e-12 * ri[k] {
                        return Some((i, j, k));
                    }
                }
            }
            None
        });
        match bad {
            Some((i, j, k)) => Err(Error::Invalid(format!(
                "triangle inequality fails: dist[{i}][{k}] > dist[{i}][{j}] + dist[{j}][{k}]"
            ))),
            None => Ok(()),
        }
    }

    /// Max-form triangle inequality over all triples.
    pub fn is_ultrametric(&self) -> bool {
        let n = self.n();
        (0..n).all(|i| {
            let ri = self.row(i);
            (0..n).all(|j| {
                let rj = self.row(j);
                (0..n).all(|k| ri[k] <= ri[j].max(rj[k]))
            })
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ultrametric_split_levels() {
        let c = UltrametricCode {
            q: 3,
            depths: vec![2],
            alphas: vec![],
        };
        assert_eq!(c.split_level(0, 0), 0);
        assert_eq!(c.split_level(0, 2), 1);
        assert_eq!(c.split_level(0, 3), 2);
        assert_eq!(c.factor_distance(0, 4, 8), 9.0);
        assert_eq!(c.distinct_distances(), vec![3.0, 9.0]);
    }

    #[test]
    fn product_uses_max_metric() {
        let c = UltrametricCode {
            q: 2,
            depths: vec![2, 1],
            alphas: vec![],
        };
        let m = Metric::Ultrametric(c.clone());
        assert_eq!(m.n(), 8);
        let x = c.index(&[0, 0]);
        let y = c.index(&[1, 1]);
        let z = c.index(&[3, 0]);
        assert_eq!(m.dist(x, y), 2.0);
        assert_eq!(m.dist(x, z), 4.0);
        assert_eq!(c.coords(c.index(&[3, 1])), vec![3, 1]);
        assert!(m.is_ultrametric());
    }

    #[test]
    fn dense_validation_reports_index() {
        let m = Metric::Dense {
            n: 2,
            table: vec![0.0, 1.0, 2.0, 0.0],
        };
        let err = m.validate_basic().unwrap_err().to_string();
        assert!(err.contains("dist[0][1]"), "{err}");
        let m = Metric::Dense {
            n: 3,
            table: vec![0., 1., 5., 1., 0., 1., 5., 1., 0.],
        };
        assert!(m.validate_basic().is_ok());
        assert!(m.validate_triangle().is_err());
    }
}
