//! Generators: paths, tori, stable-like tori, dumbbells, Sierpinski gaskets and ultrametric products.

use std::collections::{HashMap, VecDeque};
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dirichlet::DirichletForm;
use crate::error::{Error, Result};
use crate::mmspace::{Metric, MetricMeasureSpace, Scaling, UltrametricCode};
use crate::seed;

pub type Generated = (MetricMeasureSpace, DirichletForm);

/// Serializable description of any generator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorSpec {
    Path {
        n: usize,
        #[serde(default = "two")]
        beta: f64,
    },
    Torus {
        n: usize,
        #[serde(default = "two")]
        beta: f64,
    },
    StableTorus(StableTorusSpec),
    UltrametricProduct(UltrametricSpec),
    Dumbbell {
        clique: usize,
        path: usize,
        eps: f64,
        #[serde(default = "two")]
        beta: f64,
    },
    Gasket {
        level: u32,
        #[serde(default)]
        beta: Option<f64>,
    },
}

fn two() -> f64 {
    2.0
}

impl GeneratorSpec {
    pub fn build(&self) -> Result<Generated> {
        match self {
            GeneratorSpec::Path { n, beta } => make_path(*n, *beta),
            GeneratorSpec::Torus { n, beta } => make_torus(*n, *beta),
            GeneratorSpec::StableTorus(s) => make_stable_torus(s),
            GeneratorSpec::UltrametricProduct(s) => make_ultrametric_product(s),
            GeneratorSpec::Dumbbell {
                clique,
                path,
                eps,
                beta,
            } => make_dumbbell_with(*clique, *path, *eps, *beta),
            GeneratorSpec::Gasket { level, beta } => {
                make_gasket_with(*level, beta.unwrap_or_else(gasket_beta))
            }
        }
    }

    /// Short human-readable label.
    pub fn label(&self) -> String {
        match self {
            GeneratorSpec::Path { n, .. } => format!("path-{n}"),
            GeneratorSpec::Torus { n, .. } => format!("torus-{n}"),
            GeneratorSpec::StableTorus(s) => format!("stable-torus-{}", s.n),
            GeneratorSpec::UltrametricProduct(s) => {
                format!(
                    "ultrametric-q{}-d{}",
                    s.q,
                    s.depths
                        .iter()
                        .map(u32::to_string)
                        .collect::<Vec<_>>()
                        .join("x")
                )
            }
            GeneratorSpec::Dumbbell {
                clique, path, eps, ..
            } => format!("dumbbell-{clique}-{path}-eps{eps}"),
            GeneratorSpec::Gasket { level, .. } => format!("gasket-{level}"),
        }
    }
}

fn finish(
    metric: Metric,
    mu: Vec<f64>,
    scaling: Scaling,
    ultra: bool,
    local: Vec<(usize, usize, f64)>,
    jump: Vec<(usize, usize, f64)>,
) -> Result<Generated> {
    let space = MetricMeasureSpace::new_trusted(metric, mu, scaling, ultra)?;
    let form = DirichletForm::new(Arc::new(space.clone()), local, jump)?;
    Ok((space, form))
}

fn check_beta(beta: f64) -> Result<()> {
    if beta.is_finite() && beta > 0.0 {
        Ok(())
    } else {
        Err(Error::Param(format!("beta = {beta} must be positive")))
    }
}

/// Path `0..n` with unit spacing, unit masses and unit nearest-neighbor conductances; `w = r^beta`.
pub fn make_path(n: usize, beta: f64) -> Result<Generated> {
    if n < 2 {
        return Err(Error::Param("path needs n >= 2".into()));
    }
    check_beta(beta)?;
    let table = (0..n * n).map(|k| (k / n).abs_diff(k % n) as f64).collect();
    let edges = (0..n - 1).map(|i| (i, i + 1, 1.0)).collect();
    finish(
        Metric::Dense { n, table },
        vec![1.0; n],
        Scaling::uniform(n, beta),
        false,
        edges,
        vec![],
    )
}

fn cycle_table(n: usize) -> Vec<f64> {
    (0..n * n)
        .map(|k| {
            let d = (k / n).abs_diff(k % n);
            d.min(n - d) as f64
        })
        .collect()
}

/// Cycle of `n` points with geodesic metric and unit nearest-neighbor conductances.
pub fn make_torus(n: usize, beta: f64) -> Result<Generated> {
    if n < 2 {
        return Err(Error::Param("torus needs n >= 2".into()));
    }
    check_beta(beta)?;
    let edges: Vec<_> = if n == 2 {
        vec![(0, 1, 1.0)]
    } else {
        (0..n)
            .map(|i| (i.min((i + 1) % n), i.max((i + 1) % n), 1.0))
            .collect()
    };
    finish(
        Metric::Dense {
            n,
            table: cycle_table(n),
        },
        vec![1.0; n],
        Scaling::uniform(n, beta),
        false,
        edges,
        vec![],
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StableTorusSpec {
    pub n: usize,
    pub beta: f64,
    /// Add unit nearest-neighbor conductances.
    #[serde(default)]
    pub local: bool,
}

/// Cycle with jump masses `d(x,y)^{-(1+beta)}` between every pair; `w = r^beta`.
pub fn make_stable_torus(spec: &StableTorusSpec) -> Result<Generated> {
    let n = spec.n;
    if n < 4 {
        return Err(Error::Param("stable torus needs n >= 4".into()));
    }
    check_beta(spec.beta)?;
    let table = cycle_table(n);
    let jump = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .map(|(i, j)| (i, j, table[i * n + j].powf(-(1.0 + spec.beta))))
        .collect();
    let local = if spec.local {
        (0..n)
            .map(|i| (i.min((i + 1) % n), i.max((i + 1) % n), 1.0))
            .collect()
    } else {
        vec![]
    };
    finish(
        Metric::Dense { n, table },
        vec![1.0; n],
        Scaling::uniform(n, spec.beta),
        false,
        local,
        jump,
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UltrametricSpec {
    pub q: usize,
    pub depths: Vec<u32>,
    /// Per-factor Ahlfors exponents; empty means all 1.
    pub alphas: Vec<f64>,
    pub beta: f64,
    /// `a(x)` is drawn uniformly from `[1/a_range, a_range]`.
    pub a_range: f64,
    pub seed: u64,
}

impl Default for UltrametricSpec {
    fn default() -> Self {
        UltrametricSpec {
            q: 2,
            depths: vec![3, 3],
            alphas: vec![],
            beta: 1.0,
            a_range: 1.0,
            seed: 0,
        }
    }
}

/// Product of ultrametric trees with fiber-supported jump masses.
///
/// A pair carries jump mass only when it differs in exactly one coordinate `i`, and then the mass
/// is `J_i(x_i, y_i) μ_i(y_i) μ(x)` with `J_i = d_i^{-(α_i + β)}` and counting measures. Pairs that
/// differ in several coordinates carry nothing, so the jump measure is supported on the fibers.
pub fn make_ultrametric_product(spec: &UltrametricSpec) -> Result<Generated> {
    let code = UltrametricCode {
        q: spec.q,
        depths: spec.depths.clone(),
        alphas: spec.alphas.clone(),
    };
    code.validate()?;
    check_beta(spec.beta)?;
    if !(spec.a_range >= 1.0) {
        return Err(Error::Param("a_range must be >= 1".into()));
    }
    let n = code.n();
    let mut jump = Vec::new();
    for x in 0..n {
        let cx = code.coords(x);
        for i in 0..code.depths.len() {
            for yi in cx[i] + 1..code.factor_size(i) {
                let mut cy = cx.clone();
                cy[i] = yi;
                let d = code.factor_distance(i, cx[i], yi);
                jump.push((x, code.index(&cy), d.powf(-(code.alpha(i) + spec.beta))));
            }
        }
    }
    let mut rng = seed::rng(spec.seed, &[0xa]);
    let a: Vec<f64> = (0..n)
        .map(|_| {
            if spec.a_range > 1.0 {
                rng.gen_range(spec.a_range.recip()..=spec.a_range)
            } else {
                1.0
            }
        })
        .collect();
    finish(
        Metric::Ultrametric(code),
        vec![1.0; n],
        Scaling { a, beta: spec.beta },
        true,
        vec![],
        jump,
    )
}

/// Two `clique`-cliques joined by a path of `path` intermediate vertices; every neck edge has
/// conductance `eps`. Shortest-path metric, unit masses, `w = r^2`.
pub fn make_dumbbell(clique: usize, path: usize, eps: f64) -> Result<Generated> {
    make_dumbbell_with(clique, path, eps, 2.0)
}

pub fn make_dumbbell_with(clique: usize, path: usize, eps: f64, beta: f64) -> Result<Generated> {
    if clique < 3 {
        return Err(Error::Param(
            "dumbbell cliques need at least 3 vertices".into(),
        ));
    }
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::Param(format!(
            "neck conductance {eps} must be positive"
        )));
    }
    check_beta(beta)?;
    let n = 2 * clique + path;
    let mut edges = Vec::new();
    for base in [0, clique + path] {
        for i in 0..clique {
            for j in i + 1..clique {
                edges.push((base + i, base + j, 1.0));
            }
        }
    }
    for v in clique - 1..clique + path {
        edges.push((v, v + 1, eps));
    }
    let table = hop_metric(n, &edges);
    finish(
        Metric::Dense { n, table },
        vec![1.0; n],
        Scaling::uniform(n, beta),
        false,
        edges,
        vec![],
    )
}

/// All-pairs hop distances by breadth-first search.
fn hop_metric(n: usize, edges: &[(usize, usize, f64)]) -> Vec<f64> {
    let mut adj = vec![Vec::new(); n];
    for &(i, j, _) in edges {
        adj[i].push(j);
        adj[j].push(i);
    }
    let mut table = vec![f64::INFINITY; n * n];
    for s in 0..n {
        let row = &mut table[s * n..(s + 1) * n];
        row[s] = 0.0;
        let mut q = VecDeque::from([s]);
        while let Some(x) = q.pop_front() {
            for &y in &adj[x] {
                if row[y].is_infinite() {
                    row[y] = row[x] + 1.0;
                    q.push_back(y);
                }
            }
        }
    }
    table
}

/// Walk dimension exponent `log 5 / log 2` of the gasket.
pub fn gasket_beta() -> f64 {
    5f64.ln() / 2f64.ln()
}

pub const MAX_GASKET_LEVEL: u32 = 7;

/// Level-`level` Sierpinski gasket graph: unit conductances, graph metric, `μ = degree`.
pub fn make_gasket(level: u32) -> Result<Generated> {
    make_gasket_with(level, gasket_beta())
}

pub fn make_gasket_with(level: u32, beta: f64) -> Result<Generated> {
    if level > MAX_GASKET_LEVEL {
        return Err(Error::Param(format!(
            "gasket level {level} exceeds {MAX_GASKET_LEVEL}"
        )));
    }
    check_beta(beta)?;
    let mut ids: HashMap<(i64, i64), usize> = HashMap::new();
    let mut edges = Vec::new();
    let mut stack = vec![(level, 0i64, 0i64, 1i64 << level)];
    while let Some((l, x, y, size)) = stack.pop() {
        if l == 0 {
            let corners = [(x, y), (x + size, y), (x, y + size)];
            let mut idx = [0usize; 3];
            for (k, c) in corners.iter().enumerate() {
                let next = ids.len();
                idx[k] = *ids.entry(*c).or_insert(next);
            }
            for (a, b) in [(0, 1), (1, 2), (0, 2)] {
                edges.push((idx[a].min(idx[b]), idx[a].max(idx[b]), 1.0));
            }
        } else {
            let h = size / 2;
            // Reverse push order keeps vertex numbering stable and readable.
            stack.push((l - 1, x, y + h, h));
            stack.push((l - 1, x + h, y, h));
            stack.push((l - 1, x, y, h));
        }
    }
    let n = ids.len();
    let mut mu = vec![0.0; n];
    for &(i, j, _) in &edges {
        mu[i] += 1.0;
        mu[j] += 1.0;
    }
    let table = hop_metric(n, &edges);
    finish(
        Metric::Dense { n, table },
        mu,
        Scaling::uniform(n, beta),
        false,
        edges,
        vec![],
    )
}

/// Smallest `C` with `C^{-1} r^α <= V(x,r) <= C r^α` over all centers and grid radii.
pub fn ahlfors_constant(space: &MetricMeasureSpace, alpha: f64) -> f64 {
    let mut c: f64 = 1.0;
    for x in 0..space.n() {
        let p = space.volume_profile(x);
        for &r in space.radius_grid() {
            let ratio = p.volume(r) / r.powf(alpha);
            c = c.max(ratio).max(ratio.recip());
        }
    }
    c
}
