use serde::{Deserialize, Serialize};

use super::{Metric, MetricMeasureSpace, Scaling, UltrametricCode};
use crate::error::{Error, Result};

/// On-disk form of a space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceFile {
    pub n: usize,
    pub dist: DistSpec,
    pub mu: Vec<f64>,
    pub w: WSpec,
    #[serde(default)]
    pub flags: SpaceFlags,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DistSpec {
    Dense(Vec<Vec<f64>>),
    Code { ultrametric_code: UltrametricCode },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WSpec {
    pub a: Vec<f64>,
    pub beta: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SpaceFlags {
    #[serde(default)]
    pub ultrametric: bool,
}

impl SpaceFile {
    pub fn from_space(s: &MetricMeasureSpace) -> Self {
        let dist = match s.metric() {
            Metric::Dense { n, table } => {
                DistSpec::Dense(table.chunks(*n).map(|r| r.to_vec()).collect())
            }
            Metric::Ultrametric(c) => DistSpec::Code {
                ultrametric_code: c.clone(),
            },
        };
        SpaceFile {
            n: s.n(),
            dist,
            mu: s.mu().to_vec(),
            w: WSpec {
                a: s.scaling().a.clone(),
                beta: s.scaling().beta,
            },
            flags: SpaceFlags {
                ultrametric: s.is_ultrametric(),
            },
        }
    }

    /// Validates all invariants and builds the space; the first violation is reported with indices.
    pub fn into_space(self) -> Result<MetricMeasureSpace> {
        let metric = match self.dist {
            DistSpec::Dense(rows) => {
                if rows.len() != self.n {
                    return Err(Error::Invalid(format!(
                        "dist has {} rows, expected {}",
                        rows.len(),
                        self.n
                    )));
                }
                if let Some(i) = rows.iter().position(|r| r.len() != self.n) {
                    return Err(Error::Invalid(format!(
                        "dist row {i} has {} entries, expected {}",
                        rows[i].len(),
                        self.n
                    )));
                }
                Metric::Dense {
                    n: self.n,
                    table: rows.concat(),
                }
            }
            DistSpec::Code { ultrametric_code } => {
                ultrametric_code.validate()?;
                if ultrametric_code.n() != self.n {
                    return Err(Error::Invalid(format!(
                        "ultrametric code describes {} points, n = {}",
                        ultrametric_code.n(),
                        self.n
                    )));
                }
                Metric::Ultrametric(ultrametric_code)
            }
        };
        if matches!(metric, Metric::Ultrametric(_)) && !self.flags.ultrametric {
            return Err(Error::Invalid(
                "ultrametric_code requires flags.ultrametric = true".into(),
            ));
        }
        MetricMeasureSpace::new(
            metric,
            self.mu,
            Scaling {
                a: self.w.a,
                beta: self.w.beta,
            },
            self.flags.ultrametric,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces;

    #[test]
    fn round_trip_dense_and_code() {
        let (t, _) = spaces::make_torus(7, 2.0).unwrap();
        let spec = spaces::UltrametricSpec {
            q: 2,
            depths: vec![2, 2],
            ..Default::default()
        };
        let (u, _) = spaces::make_ultrametric_product(&spec).unwrap();
        for s in [t, u] {
            let json = serde_json::to_string(&SpaceFile::from_space(&s)).unwrap();
            let back: SpaceFile = serde_json::from_str(&json).unwrap();
            let s2 = back.into_space().unwrap();
            assert_eq!(s2.metric(), s.metric());
            assert_eq!(s2.mu(), s.mu());
            assert_eq!(s2.scaling(), s.scaling());
        }
    }

    #[test]
    fn loader_rejects_asymmetric_table() {
        let json = r#"{"n":2,"dist":[[0,1],[2,0]],"mu":[1,1],"w":{"a":[1,1],"beta":2}}"#;
        let f: SpaceFile = serde_json::from_str(json).unwrap();
        let err = f.into_space().unwrap_err().to_string();
        assert!(err.contains("dist[0][1]"), "{err}");
    }

    #[test]
    fn loader_rejects_false_ultrametric_flag() {
        let json = r#"{"n":3,"dist":[[0,1,2],[1,0,1],[2,1,0]],"mu":[1,1,1],"w":{"a":[1,1,1],"beta":1},"flags":{"ultrametric":true}}"#;
        let f: SpaceFile = serde_json::from_str(json).unwrap();
        assert!(f.into_space().is_err());
    }
}
