//! JSON model files: `{"variant": ..., "params": {...}, "expansion": [[c, gamma], ...]}`.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::levy::{JumpLaw, LevyModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub variant: String,
    #[serde(default)]
    pub params: Map<String, Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expansion: Option<Vec<(f64, f64)>>,
}

struct Params<'a> {
    variant: &'a str,
    map: &'a Map<String, Value>,
}

impl Params<'_> {
    fn num(&self, key: &str) -> Result<f64> {
        self.map
            .get(key)
            .and_then(Value::as_f64)
            .ok_or_else(|| Error::Domain(format!("{}: missing numeric parameter '{key}'", self.variant)))
    }

    fn num_or(&self, key: &str, default: f64) -> Result<f64> {
        if self.map.contains_key(key) { self.num(key) } else { Ok(default) }
    }

    fn only(&self, keys: &[&str]) -> Result<()> {
        for k in self.map.keys() {
            if !keys.contains(&k.as_str()) {
                return Err(Error::Domain(format!("{}: unknown parameter '{k}'", self.variant)));
            }
        }
        Ok(())
    }
}

fn obj(pairs: &[(&str, Value)]) -> Map<String, Value> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

impl ModelSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Keys sorted, no whitespace: the form that is hashed.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("model spec serialises")
    }

    /// SHA-256 of the canonical JSON, hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_json().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn to_model(&self) -> Result<LevyModel> {
        let p = Params { variant: &self.variant, map: &self.params };
        let no_expansion = |m: LevyModel| -> Result<LevyModel> {
            if self.expansion.is_some() {
                return Err(Error::Domain(format!("{}: takes no expansion", self.variant)));
            }
            Ok(m)
        };
        let model = match self.variant.as_str() {
            "stable" => {
                p.only(&["alpha"])?;
                no_expansion(LevyModel::Stable { alpha: p.num("alpha")? })?
            }
            "gamma" => {
                p.only(&[])?;
                no_expansion(LevyModel::GammaSub)?
            }
            "abc" => {
                p.only(&["a", "b", "c"])?;
                no_expansion(LevyModel::Abc { a: p.num("a")?, b: p.num("b")?, c: p.num("c")? })?
            }
            "compound_poisson" => {
                p.only(&["mass", "jump"])?;
                let jump: JumpLaw = match self.params.get("jump") {
                    Some(v) => serde_json::from_value(v.clone())?,
                    None => JumpLaw::Exponential { rate: 1.0 },
                };
                LevyModel::CompoundPoisson { mass: p.num_or("mass", 1.0)?, jump, lower_expansion: self.expansion.clone() }
            }
            "infinite_power_tail" => {
                p.only(&["remainder_order"])?;
                let coeffs = self
                    .expansion
                    .clone()
                    .ok_or_else(|| Error::Domain("infinite_power_tail: 'expansion' is required".into()))?;
                LevyModel::InfinitePowerTail { coeffs, remainder_order: p.num_or("remainder_order", 1.0)? }
            }
            "beta_coalescent" => {
                p.only(&["alpha", "beta"])?;
                no_expansion(LevyModel::BetaCoalescent { alpha: p.num("alpha")?, beta: p.num("beta")? })?
            }
            "barrier_walk" => {
                p.only(&["c"])?;
                no_expansion(LevyModel::BarrierWalk { c: p.num("c")? })?
            }
            other => return Err(Error::Domain(format!("unknown model variant '{other}'"))),
        };
        model.validate()?;
        Ok(model)
    }

    pub fn from_model(model: &LevyModel) -> Self {
        let (params, expansion) = match model {
            LevyModel::Stable { alpha } => (obj(&[("alpha", (*alpha).into())]), None),
            LevyModel::GammaSub => (Map::new(), None),
            LevyModel::Abc { a, b, c } => (obj(&[("a", (*a).into()), ("b", (*b).into()), ("c", (*c).into())]), None),
            LevyModel::CompoundPoisson { mass, jump, lower_expansion } => (
                obj(&[("mass", (*mass).into()), ("jump", serde_json::to_value(jump).expect("jump law serialises"))]),
                lower_expansion.clone(),
            ),
            LevyModel::InfinitePowerTail { coeffs, remainder_order } => {
                (obj(&[("remainder_order", (*remainder_order).into())]), Some(coeffs.clone()))
            }
            LevyModel::BetaCoalescent { alpha, beta } => (obj(&[("alpha", (*alpha).into()), ("beta", (*beta).into())]), None),
            LevyModel::BarrierWalk { c } => (obj(&[("c", (*c).into())]), None),
        };
        ModelSpec { variant: model.name().to_string(), params, expansion }
    }
}
