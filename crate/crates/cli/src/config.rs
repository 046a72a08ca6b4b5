use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use weh_core::harnack::{FamilyConfig, HolderConfig};
use weh_core::spaces::GeneratorSpec;
use weh_core::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Where the space and form come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceSource {
    Generator(GeneratorSpec),
    /// JSON files written by `weh generate`; relative paths resolve against the config file.
    Files {
        space: PathBuf,
        form: PathBuf,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    #[serde(default)]
    pub name: Option<String>,
    /// Base seed; every random draw in a run is derived from it.
    pub seed: u64,
    pub space: SpaceSource,
    #[serde(default)]
    pub conditions: ConditionsSection,
    #[serde(default)]
    pub harnack: HarnackSection,
    #[serde(default)]
    pub exit_time: ExitSection,
    #[serde(default)]
    pub holder: HolderSection,
    /// Check names whose failure does not fail the run (negative controls).
    #[serde(default)]
    pub expect_fail: Vec<String>,
    #[serde(default)]
    pub output: OutputSection,
}

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConditionsSection {
    pub vd: bool,
    pub rvd: bool,
    pub pi: bool,
    pub fk: bool,
    pub tj: bool,
    pub cap_le: bool,
    pub gcap: bool,
    pub nash: bool,
    /// Balls with radius below `sigma * diam` enter the sweeps.
    pub sigma: f64,
    pub max_centers: Option<usize>,
    /// Fixed enlargement factor for (PI); the smallest entry of `kappa_candidates` with a finite
    /// constant is used when unset.
    pub kappa: Option<f64>,
    pub kappa_candidates: Vec<f64>,
    /// Random test functions per ball for (Gcap) and (Nash).
    pub samples: usize,
    pub vd_max: f64,
    pub pi_max: f64,
    pub tj_max: f64,
    pub cap_max: f64,
    pub gcap_max: f64,
    pub nash_max: f64,
}

impl Default for ConditionsSection {
    fn default() -> Self {
        ConditionsSection {
            vd: true,
            rvd: true,
            pi: true,
            fk: true,
            tj: true,
            cap_le: true,
            gcap: true,
            nash: true,
            sigma: 1.0,
            max_centers: Some(8),
            kappa: None,
            kappa_candidates: vec![1.0, 2.0, 4.0],
            samples: 8,
            vd_max: 64.0,
            pi_max: 25.0,
            tj_max: 64.0,
            cap_max: 64.0,
            gcap_max: 64.0,
            nash_max: 64.0,
        }
    }
}

impl ConditionsSection {
    pub fn none() -> Self {
        ConditionsSection {
            vd: false,
            rvd: false,
            pi: false,
            fk: false,
            tj: false,
            cap_le: false,
            gcap: false,
            nash: false,
            ..Default::default()
        }
    }

    pub fn any_enabled(&self) -> bool {
        self.vd
            || self.rvd
            || self.pi
            || self.fk
            || self.tj
            || self.cap_le
            || self.gcap
            || self.nash
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarnackSection {
    pub certificate: bool,
    pub p: f64,
    /// Defaults to `1/(32(4κ+1))` with κ from the Poincaré sweep (1 when that is disabled).
    pub delta: Option<f64>,
    pub sigma: f64,
    pub samples: usize,
    pub max_centers: Option<usize>,
    pub c_h_max: Option<f64>,
    pub family: FamilyOverrides,
    pub variants: bool,
    pub variant_trials: usize,
    pub lg: bool,
    pub lg0: bool,
    pub growth_trials: usize,
    pub crossover: bool,
    pub crossover_samples: usize,
    pub crossover_cap: f64,
    pub john_nirenberg: bool,
    pub log_energy: bool,
    pub log_energy_trials: usize,
    pub min_non_vacuous: f64,
}

impl Default for HarnackSection {
    fn default() -> Self {
        HarnackSection {
            certificate: true,
            p: 0.5,
            delta: None,
            sigma: 0.5,
            samples: 16,
            max_centers: Some(8),
            c_h_max: None,
            family: FamilyOverrides::default(),
            variants: false,
            variant_trials: 1000,
            lg: false,
            lg0: false,
            growth_trials: 1000,
            crossover: false,
            crossover_samples: 50,
            crossover_cap: 1e6,
            john_nirenberg: false,
            log_energy: false,
            log_energy_trials: 100,
            min_non_vacuous: 0.1,
        }
    }
}

/// Sampling knobs of the superharmonic family; the family seed is derived from the run seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FamilyOverrides {
    pub f_scale: f64,
    pub exterior_scale: f64,
    pub negative_fraction: f64,
    pub negative_scale: f64,
}

impl Default for FamilyOverrides {
    fn default() -> Self {
        let d = FamilyConfig::default();
        FamilyOverrides {
            f_scale: d.f_scale,
            exterior_scale: d.exterior_scale,
            negative_fraction: d.negative_fraction,
            negative_scale: d.negative_scale,
        }
    }
}

impl FamilyOverrides {
    pub fn with_seed(&self, seed: u64) -> FamilyConfig {
        FamilyConfig {
            seed,
            f_scale: self.f_scale,
            exterior_scale: self.exterior_scale,
            negative_fraction: self.negative_fraction,
            negative_scale: self.negative_scale,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExitSection {
    pub sigma: f64,
    pub max_centers: Option<usize>,
    /// Inner ball fraction for the lower bound.
    pub delta: f64,
    pub lower_min: f64,
    pub upper_max: f64,
}

impl Default for ExitSection {
    fn default() -> Self {
        ExitSection {
            sigma: 0.5,
            max_centers: Some(8),
            delta: 0.5,
            lower_min: 1.0 / 16.0,
            upper_max: 16.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HolderSection {
    pub samples: usize,
    pub sigma: f64,
    pub max_centers: Option<usize>,
    pub beta_min: f64,
    pub fit: HolderConfig,
}

impl Default for HolderSection {
    fn default() -> Self {
        HolderSection {
            samples: 50,
            sigma: 0.5,
            max_centers: Some(5),
            beta_min: 0.2,
            fit: HolderConfig::default(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    pub witness_dump: bool,
}

impl RunConfig {
    pub fn new(seed: u64, space: SpaceSource) -> Self {
        RunConfig {
            schema_version: SCHEMA_VERSION,
            name: None,
            seed,
            space,
            conditions: ConditionsSection::default(),
            harnack: HarnackSection::default(),
            exit_time: ExitSection::default(),
            holder: HolderSection::default(),
            expect_fail: Vec::new(),
            output: OutputSection::default(),
        }
    }

    /// Parses and validates; relative file paths are rebased onto `base`.
    pub fn from_json(text: &str, base: Option<&Path>) -> Result<Self> {
        let mut cfg: RunConfig = serde_json::from_str(text)?;
        if let (Some(base), SpaceSource::Files { space, form }) = (base, &mut cfg.space) {
            for p in [space, form] {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text, path.parent())
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::SchemaVersion {
                expected: SCHEMA_VERSION,
                found: self.schema_version,
            });
        }
        let h = &self.harnack;
        let needs_cert = [
            (h.variants, "variants"),
            (h.lg, "lg"),
            (h.lg0, "lg0"),
            (h.crossover, "crossover"),
            (h.john_nirenberg, "john_nirenberg"),
        ];
        if !h.certificate {
            if let Some((_, name)) = needs_cert.iter().find(|c| c.0) {
                return Err(Error::Invalid(format!(
                    "harnack.{name} depends on harnack.certificate, which is disabled"
                )));
            }
        }
        if h.john_nirenberg && !h.crossover {
            return Err(Error::Invalid(
                "harnack.john_nirenberg depends on harnack.crossover, which is disabled".into(),
            ));
        }
        let unit = |v: f64| v > 0.0 && v <= 1.0;
        if !unit(self.conditions.sigma)
            || !unit(h.sigma)
            || !unit(self.exit_time.sigma)
            || !unit(self.holder.sigma)
        {
            return Err(Error::Param("sweep sigma values must lie in (0, 1]".into()));
        }
        if self.conditions.kappa_candidates.is_empty()
            || self.conditions.kappa_candidates.iter().any(|&k| k < 1.0)
        {
            return Err(Error::Param(
                "kappa candidates must be non-empty and >= 1".into(),
            ));
        }
        if let Some(k) = self.conditions.kappa {
            if k < 1.0 {
                return Err(Error::Param(format!("kappa = {k} must be >= 1")));
            }
        }
        for name in &self.expect_fail {
            if !CHECK_NAMES.contains(&name.as_str()) {
                return Err(Error::Invalid(format!(
                    "unknown check '{name}' in expect_fail; known: {}",
                    CHECK_NAMES.join(", ")
                )));
            }
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        match (&self.name, &self.space) {
            (Some(n), _) => n.clone(),
            (None, SpaceSource::Generator(g)) => g.label(),
            (None, SpaceSource::Files { space, .. }) => space.display().to_string(),
        }
    }
}

/// Names used in reports and accepted by `expect_fail`.
pub const CHECK_NAMES: &[&str] = &[
    "VD",
    "RVD",
    "PI",
    "FK",
    "TJ",
    "Cap",
    "Gcap",
    "Nash",
    "wEH",
    "wEH1",
    "wEH2",
    "wEH3",
    "wEH4",
    "wEH1<-wEH3",
    "LG",
    "LG0",
    "Crossover",
    "JN",
    "LogEnergy",
    "Exit",
    "Holder",
];
