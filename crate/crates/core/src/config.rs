//! Run configuration: JSON, schema-checked before any computation.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::algebra::Series;
use crate::error::{Error, Result};
use crate::flows::{Coefficient, FlowSide, GradedLagrangian, InitialFactor};
use crate::mappings::{DtSign, MapKind};
use crate::numerics::Grid2D;
use crate::solitons::{ChainDomain, FrameSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub algebra: AlgebraSpec,
    #[serde(default)]
    pub depths: Depths,
    /// Terms overriding the unit flows (unit grade 1, unit top grade).
    #[serde(default)]
    pub coefficients: Coefficients,
    /// K₀ as an ordered product of exponentials.
    #[serde(default)]
    pub k0: Vec<InitialFactor>,
    pub grid: Grid2D,
    #[serde(default = "default_substeps")]
    pub substeps: usize,
    #[serde(default)]
    pub time_flow: Option<TimeFlowSpec>,
    #[serde(default)]
    pub gtoda: Option<PatternSpec>,
    #[serde(default)]
    pub map: Option<MapSpec>,
    #[serde(default)]
    pub identities: Option<IdentitySpec>,
    /// Suites to run; empty means every suite of the subcommand.
    #[serde(default)]
    pub tasks: Vec<String>,
    #[serde(default)]
    pub seed: u64,
    /// Overrides every suite tolerance.
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub output: Option<String>,
}

fn default_substeps() -> usize {
    4
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraSpec {
    pub series: Series,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Depths {
    pub m1: usize,
    pub m2: usize,
}

impl Default for Depths {
    fn default() -> Self {
        Depths { m1: 1, m2: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub grade: usize,
    pub site: usize,
    pub coef: Coefficient,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Coefficients {
    #[serde(default)]
    pub minus: Vec<TermSpec>,
    #[serde(default)]
    pub plus: Vec<TermSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeAxis {
    pub t0: f64,
    pub ht: f64,
    pub nt: usize,
}

impl TimeAxis {
    pub fn nodes(&self) -> Vec<f64> {
        (0..self.nt).map(|i| self.t0 + self.ht * i as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeFlowSpec {
    pub frame: FrameSpec,
    /// Site of the DS pair u = ⟨i−1⟩/⟨i⟩, v = ⟨i+1⟩/⟨i⟩.
    #[serde(default = "one")]
    pub site: usize,
    /// Time slices of the DS pair.
    #[serde(default = "ds_axis")]
    pub ds: TimeAxis,
    /// Time axis of the (x, t̄) kernel; x is taken from the grid.
    #[serde(default = "xt_axis")]
    pub xt: TimeAxis,
    /// Fixed y of the (x, t̄) kernel.
    #[serde(default = "xt_y")]
    pub xt_y: f64,
    /// (y, t̄) domain of the chain check; baseline at the centre.
    #[serde(default)]
    pub chain: Option<Grid2D>,
}

fn one() -> usize {
    1
}

fn ds_axis() -> TimeAxis {
    TimeAxis { t0: -0.03, ht: 0.01, nt: 7 }
}

fn xt_axis() -> TimeAxis {
    TimeAxis { t0: -0.1, ht: 0.002, nt: 101 }
}

fn xt_y() -> f64 {
    0.1
}

impl TimeFlowSpec {
    pub fn chain_domain(&self) -> ChainDomain {
        match self.chain {
            Some(grid) => ChainDomain { grid, baseline: grid.nx / 2 },
            None => ChainDomain::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternSpec {
    pub s: Vec<f64>,
    pub sbar: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    pub kind: MapKind,
    #[serde(default = "one")]
    pub iterations: usize,
    #[serde(default = "one")]
    pub site: usize,
    #[serde(default = "derived")]
    pub sign: DtSign,
}

fn derived() -> DtSign {
    DtSign::Derived
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentitySpec {
    pub max_rank: usize,
    pub samples: usize,
}

/// JSON pointer for a serde path ("a.b[2]" → "/a/b/2").
fn pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } => out.push_str(&format!("/{key}")),
            Segment::Enum { variant } => out.push_str(&format!("/{variant}")),
            Segment::Unknown => out.push_str("/?"),
        }
    }
    out
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let mut path = pointer(e.path());
            let msg = e.inner().to_string();
            // missing fields are reported at the parent; point at the field
            if let Some(rest) = msg.strip_prefix("missing field `") {
                if let Some(name) = rest.split('`').next() {
                    path = format!("{path}/{name}");
                }
            }
            if path.is_empty() {
                path = "/".into();
            }
            Error::config(path, msg)
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::config("/", format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.algebra.series != Series::A {
            return Err(Error::config("/algebra/series", "flows and lattices are implemented for series A only"));
        }
        if self.algebra.n == 0 {
            return Err(Error::config("/algebra/n", "rank must be at least 1"));
        }
        self.grid.validate()?;
        if self.depths.m1 == 0 || self.depths.m2 == 0 {
            return Err(Error::config("/depths", "flow depths must be at least 1"));
        }
        if self.substeps == 0 {
            return Err(Error::config("/substeps", "must be at least 1"));
        }
        for (idx, f) in self.k0.iter().enumerate() {
            if f.site == 0 || f.site > self.algebra.n {
                return Err(Error::config(format!("/k0/{idx}/site"), format!("site outside 1..={}", self.algebra.n)));
            }
        }
        self.lagrangians()?;
        if let Some(t) = self.tol {
            if !(t > 0.0) {
                return Err(Error::config("/tol", "tolerance must be positive"));
            }
        }
        if let Some(tf) = &self.time_flow {
            if tf.ds.nt < 5 || !(tf.ds.ht > 0.0) {
                return Err(Error::config("/time_flow/ds", "need at least 5 increasing time slices"));
            }
            if tf.xt.nt < 5 || !(tf.xt.ht > 0.0) {
                return Err(Error::config("/time_flow/xt", "need at least 5 increasing time nodes"));
            }
        }
        Ok(())
    }

    /// Minus and plus Lagrangians: unit flows of the configured depths with
    /// the listed terms substituted.
    pub fn lagrangians(&self) -> Result<(GradedLagrangian, GradedLagrangian)> {
        let n = self.algebra.n;
        let mut m = GradedLagrangian::unit(FlowSide::Minus, n, self.depths.m1);
        let mut p = GradedLagrangian::unit(FlowSide::Plus, n, self.depths.m2);
        for (idx, t) in self.coefficients.minus.iter().enumerate() {
            m = m.set(t.grade, t.site, t.coef.clone()).map_err(|e| Error::config(format!("/coefficients/minus/{idx}"), e.to_string()))?;
        }
        for (idx, t) in self.coefficients.plus.iter().enumerate() {
            p = p.set(t.grade, t.site, t.coef.clone()).map_err(|e| Error::config(format!("/coefficients/plus/{idx}"), e.to_string()))?;
        }
        Ok((m, p))
    }

    /// Suites to run among `known`; unknown names are configuration errors.
    pub fn selected(&self, known: &[&str]) -> Result<Vec<String>> {
        if self.tasks.is_empty() {
            return Ok(known.iter().map(|s| s.to_string()).collect());
        }
        for (idx, t) in self.tasks.iter().enumerate() {
            if !known.contains(&t.as_str()) {
                return Err(Error::config(format!("/tasks/{idx}"), format!("unknown task {t:?}; expected one of {known:?}")));
            }
        }
        Ok(self.tasks.clone())
    }

    /// SHA-256 of the canonical JSON of the effective configuration.
    pub fn hash(&self) -> String {
        hash_json(&serde_json::to_value(self).expect("config serializes"))
    }
}

pub fn hash_json(v: &serde_json::Value) -> String {
    let bytes = serde_json::to_vec(v).expect("value serializes");
    hex::encode(Sha256::digest(&bytes))
}
