//! Mixed local and jump Dirichlet forms on a finite space.

mod capacity;
mod tail;

pub use capacity::{
    cap_le_constant, capacity, cutoff_family, ep_check, fit_ep_constant, gcap_check, Capacity,
    ConstantReport, EpReport, GcapReport,
};
pub(crate) use tail::tail_unchecked;
pub use tail::{j_upper_constant, tail, tail_w, tj_constant, TailCompare};

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mmspace::{MetricMeasureSpace, PointSet};

/// Coupling between a point and one neighbor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Link {
    pub to: usize,
    /// Local conductance `c_xy`.
    pub cond: f64,
    /// Pair mass `Jm[x][y]` of the jump measure.
    pub jump: f64,
}

impl Link {
    /// Total weight `c_xy + 2 Jm[x][y]` entering the quadratic form.
    pub fn weight(&self) -> f64 {
        self.cond + 2.0 * self.jump
    }
}

/// Energy split into its local and jump parts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Energy {
    pub local: f64,
    pub jump: f64,
    pub total: f64,
}

/// `E = E^L + E^J` with `E^L(u,v) = Σ_edges c (u_i-u_j)(v_i-v_j)` and
/// `E^J(u,v) = Σ_{i<j} 2 Jm_ij (u_i-u_j)(v_i-v_j)`.
#[derive(Clone, Debug)]
pub struct DirichletForm {
    space: Arc<MetricMeasureSpace>,
    local: Vec<(usize, usize, f64)>,
    jump: Vec<(usize, usize, f64)>,
    adj: Vec<Vec<Link>>,
}

impl DirichletForm {
    /// Each unordered pair may appear at most once per list; conductances must be positive and
    /// jump masses nonnegative.
    pub fn new(
        space: Arc<MetricMeasureSpace>,
        local_edges: Vec<(usize, usize, f64)>,
        jump: Vec<(usize, usize, f64)>,
    ) -> Result<Self> {
        let n = space.n();
        let local = normalize(n, local_edges, "local edge", true)?;
        let jump = normalize(n, jump, "jump pair", false)?;
        let mut adj: Vec<Vec<Link>> = vec![Vec::new(); n];
        let mut slot: Vec<std::collections::HashMap<usize, usize>> = vec![Default::default(); n];
        let mut add = |x: usize, y: usize, c: f64, j: f64| {
            let k = *slot[x].entry(y).or_insert_with(|| {
                adj[x].push(Link {
                    to: y,
                    cond: 0.0,
                    jump: 0.0,
                });
                adj[x].len() - 1
            });
            adj[x][k].cond += c;
            adj[x][k].jump += j;
        };
        for &(i, j, c) in &local {
            add(i, j, c, 0.0);
            add(j, i, c, 0.0);
        }
        for &(i, j, m) in &jump {
            add(i, j, 0.0, m);
            add(j, i, 0.0, m);
        }
        for a in &mut adj {
            a.sort_by_key(|l| l.to);
        }
        Ok(DirichletForm {
            space,
            local,
            jump,
            adj,
        })
    }

    pub fn space(&self) -> &MetricMeasureSpace {
        &self.space
    }

    pub fn space_arc(&self) -> &Arc<MetricMeasureSpace> {
        &self.space
    }

    pub fn n(&self) -> usize {
        self.space.n()
    }

    pub fn local_edges(&self) -> &[(usize, usize, f64)] {
        &self.local
    }

    pub fn jump_pairs(&self) -> &[(usize, usize, f64)] {
        &self.jump
    }

    pub fn links(&self, x: usize) -> &[Link] {
        &self.adj[x]
    }

    pub fn has_jump(&self) -> bool {
        !self.jump.is_empty()
    }

    pub fn energy(&self, u: &[f64], v: &[f64]) -> Energy {
        let local: f64 = self
            .local
            .iter()
            .map(|&(i, j, c)| c * (u[i] - u[j]) * (v[i] - v[j]))
            .sum();
        let jump: f64 = self
            .jump
            .iter()
            .map(|&(i, j, m)| 2.0 * m * (u[i] - u[j]) * (v[i] - v[j]))
            .sum();
        Energy {
            local,
            jump,
            total: local + jump,
        }
    }

    /// `E(u, u)`.
    pub fn quad(&self, u: &[f64]) -> f64 {
        self.energy(u, u).total
    }

    /// `E^J(u, v)` as the sum over ordered pairs restricted to `filter(x, y)`.
    pub fn jump_energy_where(
        &self,
        u: &[f64],
        v: &[f64],
        filter: impl Fn(usize, usize) -> bool,
    ) -> f64 {
        self.jump
            .iter()
            .map(|&(i, j, m)| {
                let both = filter(i, j) as u8 as f64 + filter(j, i) as u8 as f64;
                both * m * (u[i] - u[j]) * (v[i] - v[j])
            })
            .sum()
    }

    /// `E(u, e_x) = Σ_y k_xy (u_x - u_y)`.
    pub fn energy_at(&self, u: &[f64], x: usize) -> f64 {
        self.adj[x]
            .iter()
            .map(|l| l.weight() * (u[x] - u[l.to]))
            .sum()
    }

    /// Generator `L` with `Σ (Lu) φ μ = -E(u, φ)` for every `φ`.
    pub fn apply_generator(&self, u: &[f64]) -> Vec<f64> {
        let mu = self.space.mu();
        (0..self.n())
            .map(|x| -self.energy_at(u, x) / mu[x])
            .collect()
    }

    /// Total escape weight `Σ_y k_xy`.
    pub fn degree(&self, x: usize) -> f64 {
        self.adj[x].iter().map(Link::weight).sum()
    }

    /// Matrix of `E` on functions supported in `d` (Dirichlet condition outside `d`).
    pub fn dirichlet_matrix(&self, d: &PointSet) -> DMatrix<f64> {
        let pos = d.positions();
        let m = d.len();
        let mut k = DMatrix::zeros(m, m);
        for (a, x) in d.iter().enumerate() {
            k[(a, a)] = self.degree(x);
            for l in &self.adj[x] {
                if let Some(b) = pos[l.to] {
                    k[(a, b)] -= l.weight();
                }
            }
        }
        k
    }

    /// Matrix of the energy counting only couplings with both endpoints in `s`.
    pub fn neumann_matrix(&self, s: &PointSet) -> DMatrix<f64> {
        let pos = s.positions();
        let m = s.len();
        let mut k = DMatrix::zeros(m, m);
        for (a, x) in s.iter().enumerate() {
            for l in &self.adj[x] {
                if let Some(b) = pos[l.to] {
                    k[(a, b)] -= l.weight();
                    k[(a, a)] += l.weight();
                }
            }
        }
        k
    }

    /// Errors if some connected component of `d` (under couplings inside `d`) has no coupling to
    /// the complement, which makes the Dirichlet matrix singular.
    pub fn check_solvable(&self, d: &PointSet) -> Result<()> {
        let mut seen = vec![false; self.n()];
        for start in d.iter() {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut stack = vec![start];
            let mut escapes = false;
            while let Some(x) = stack.pop() {
                for l in &self.adj[x] {
                    if l.weight() <= 0.0 {
                        continue;
                    }
                    if !d.contains(l.to) {
                        escapes = true;
                    } else if !seen[l.to] {
                        seen[l.to] = true;
                        stack.push(l.to);
                    }
                }
            }
            if !escapes {
                return Err(Error::SingularDomain(start));
            }
        }
        Ok(())
    }

    /// Right-hand side contribution `Σ_{y ∉ d} k_xy g_y` for `x ∈ d`.
    pub fn boundary_load(&self, d: &PointSet, g: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            d.len(),
            d.iter().map(|x| {
                self.adj[x]
                    .iter()
                    .filter(|l| !d.contains(l.to))
                    .map(|l| l.weight() * g[l.to])
                    .sum::<f64>()
            }),
        )
    }
}

fn normalize(
    n: usize,
    pairs: Vec<(usize, usize, f64)>,
    what: &str,
    strict: bool,
) -> Result<Vec<(usize, usize, f64)>> {
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::with_capacity(pairs.len());
    for (k, (i, j, c)) in pairs.into_iter().enumerate() {
        if i >= n || j >= n {
            return Err(Error::Invalid(format!(
                "{what} {k}: index out of range ({i}, {j})"
            )));
        }
        if i == j {
            return Err(Error::Invalid(format!("{what} {k}: diagonal entry at {i}")));
        }
        let ok = c.is_finite() && if strict { c > 0.0 } else { c >= 0.0 };
        if !ok {
            return Err(Error::Invalid(format!(
                "{what} {k}: weight {c} out of range"
            )));
        }
        let key = (i.min(j), i.max(j));
        if !seen.insert(key) {
            return Err(Error::Invalid(format!(
                "{what} {k}: duplicate pair ({i}, {j})"
            )));
        }
        if c > 0.0 {
            out.push((key.0, key.1, c));
        }
    }
    out.sort_by_key(|e| (e.0, e.1));
    Ok(out)
}

/// On-disk form of a Dirichlet form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormFile {
    #[serde(default)]
    pub local_edges: Vec<(usize, usize, f64)>,
    #[serde(default)]
    pub jump: Vec<(usize, usize, f64)>,
}

impl FormFile {
    pub fn from_form(f: &DirichletForm) -> Self {
        FormFile {
            local_edges: f.local.clone(),
            jump: f.jump.clone(),
        }
    }

    pub fn into_form(self, space: Arc<MetricMeasureSpace>) -> Result<DirichletForm> {
        DirichletForm::new(space, self.local_edges, self.jump)
    }
}
