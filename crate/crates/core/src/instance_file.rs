//! JSON instance files.
//!
//! ```json
//! {
//!   "m": 1,
//!   "T": 100,
//!   "capacities": [1.0],
//!   "resource_independent": true,
//!   "classes": [
//!     {"p": 1.0, "r": [1.0], "b": [1.0],
//!      "dist": {"family": "uniform", "params": {"lo": 0.0, "hi": 1.0}}}
//!   ]
//! }
//! ```

use serde::{Deserialize, Serialize};

use crate::distributions::{Family, SizeDistribution};
use crate::error::{Error, Result};
use crate::model::{Instance, RequestClass};

/// Size law as written in a file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistSpec {
    Uniform {
        #[serde(default)]
        lo: f64,
        hi: f64,
    },
    Exponential {
        rate: f64,
    },
    TruncatedNormal {
        mean: f64,
        sd: f64,
        hi: f64,
    },
    Power {
        #[serde(rename = "A")]
        a: f64,
        alpha: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        hi: Option<f64>,
    },
    Mixture {
        weights: Vec<f64>,
        components: Vec<DistFile>,
    },
    PointMass {
        at: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistFile {
    #[serde(flatten)]
    pub spec: DistSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_bar: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassFile {
    pub p: f64,
    pub r: Vec<f64>,
    pub b: Vec<f64>,
    pub dist: DistFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub m: usize,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub capacities: Vec<f64>,
    pub classes: Vec<ClassFile>,
    #[serde(default)]
    pub resource_independent: bool,
}

impl DistFile {
    pub fn build(&self) -> Result<SizeDistribution> {
        let d = match &self.spec {
            DistSpec::Uniform { lo, hi } => SizeDistribution::uniform(*lo, *hi)?,
            DistSpec::Exponential { rate } => SizeDistribution::exponential(*rate)?,
            DistSpec::TruncatedNormal { mean, sd, hi } => SizeDistribution::truncated_normal(*mean, *sd, *hi)?,
            DistSpec::Power { a, alpha, hi } => SizeDistribution::power(*a, *alpha, *hi)?,
            DistSpec::Mixture { weights, components } => {
                let comps = components.iter().map(DistFile::build).collect::<Result<Vec<_>>>()?;
                SizeDistribution::mixture(weights.clone(), comps)?
            }
            DistSpec::PointMass { at } => SizeDistribution::point_mass(*at)?,
        };
        match self.omega_bar {
            Some(w) => d.with_omega_bar(w),
            None => Ok(d),
        }
    }

    pub fn from_distribution(d: &SizeDistribution) -> Self {
        let spec = match d.family() {
            Family::Uniform { lo, hi } => DistSpec::Uniform { lo: *lo, hi: *hi },
            Family::Exponential { rate } => DistSpec::Exponential { rate: *rate },
            Family::TruncatedNormal(tn) => DistSpec::TruncatedNormal { mean: tn.mean_param(), sd: tn.sd(), hi: tn.hi() },
            Family::Power { alpha, hi } => DistSpec::Power { a: hi.powf(-alpha), alpha: *alpha, hi: Some(*hi) },
            Family::Mixture { weights, components } => DistSpec::Mixture {
                weights: weights.clone(),
                components: components.iter().map(DistFile::from_distribution).collect(),
            },
            Family::PointMass { at } => DistSpec::PointMass { at: *at },
        };
        DistFile { spec, omega_bar: Some(d.omega_bar()) }
    }
}

impl InstanceFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Validates the file and builds the instance. Every failure is
    /// reported as [`Error::Parse`].
    pub fn build(&self) -> Result<Instance> {
        let wrap = |e: Error| match e {
            Error::Parse(_) => e,
            other => Error::Parse(other.to_string()),
        };
        if self.capacities.len() != self.m {
            return Err(Error::Parse(format!("m = {} but {} capacities given", self.m, self.capacities.len())));
        }
        let mut classes = Vec::with_capacity(self.classes.len());
        for (i, c) in self.classes.iter().enumerate() {
            if c.r.len() != self.m || c.b.len() != self.m {
                return Err(Error::Parse(format!("class {i}: r and b must have length m = {}", self.m)));
            }
            let dist = c.dist.build().map_err(|e| Error::Parse(format!("class {i}: {e}")))?;
            let class = RequestClass::new(c.p, c.r.clone(), c.b.clone(), dist)
                .map_err(|e| Error::Parse(format!("class {i}: {e}")))?;
            classes.push(class);
        }
        let instance = Instance::new(self.capacities.clone(), classes, self.horizon).map_err(wrap)?;
        if self.resource_independent && !instance.is_resource_independent() {
            return Err(Error::Parse(
                "resource_independent is set but some class has unequal rewards or non-unit weights".into(),
            ));
        }
        Ok(instance)
    }

    pub fn from_instance(instance: &Instance) -> Self {
        InstanceFile {
            m: instance.num_resources(),
            horizon: instance.horizon(),
            capacities: instance.capacities().to_vec(),
            classes: instance
                .classes()
                .iter()
                .map(|c| ClassFile {
                    p: c.probability,
                    r: c.rewards.clone(),
                    b: c.weights.clone(),
                    dist: DistFile::from_distribution(&c.dist),
                })
                .collect(),
            resource_independent: instance.is_resource_independent(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance files always serialize")
    }
}

/// Parses and validates an instance file in one go.
pub fn parse_instance(text: &str) -> Result<Instance> {
    InstanceFile::parse(text)?.build()
}
