//! Run configuration: a single TOML file plus `key=value` overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::models::{QuadratureSpec, SpacetimeModel, Summation};
use crate::sigop::BorelFunction;
use crate::solutions::Basis;

/// Quadrature orders; unset orders follow the resolution rule for the truncation.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadConfig {
    pub surface_order: Option<usize>,
    pub volume_order: Option<usize>,
    pub summation: Summation,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Outputs {
    pub matrix: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub summary: Option<PathBuf>,
    pub spectrum: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// `drum` or `slab`.
    pub model: String,
    pub mass: f64,
    pub slab_lifetime: f64,
    /// `N` for the drum, `K` for the slab.
    pub truncation: usize,
    pub quad: QuadConfig,
    /// Symmetry names to check; empty means every symmetry the model carries.
    pub symmetries: Vec<String>,
    /// Borel functions for the state checks.
    pub w: Vec<String>,
    /// Per-check tolerance overrides, keyed by check name.
    pub tolerances: BTreeMap<String, f64>,
    /// Overrides every upper-bound tolerance.
    pub tol: Option<f64>,
    pub generator_step: f64,
    /// Lower bound for the drum commutator.
    pub counterexample_threshold: f64,
    pub seed: u64,
    pub cache_dir: Option<PathBuf>,
    pub outputs: Outputs,
    pub inject_fault: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: "drum".into(),
            mass: 0.0,
            slab_lifetime: 2.0,
            truncation: 8,
            quad: QuadConfig::default(),
            symmetries: Vec::new(),
            w: vec!["indicator_negative".into(), "smooth_step:10".into()],
            tolerances: BTreeMap::new(),
            tol: None,
            generator_step: 1e-3,
            counterexample_threshold: 0.04,
            seed: 20_161_018,
            cache_dir: None,
            outputs: Outputs::default(),
            inject_fault: false,
        }
    }
}

impl RunConfig {
    pub fn drum(truncation: usize) -> Self {
        Self {
            truncation,
            ..Self::default()
        }
    }

    pub fn slab(mass: f64, lifetime: f64, truncation: usize) -> Self {
        Self {
            model: "slab".into(),
            mass,
            slab_lifetime: lifetime,
            truncation,
            ..Self::default()
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Applies a dotted `key=value` override; the value is read as a TOML
    /// literal, falling back to a bare string.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override `{assignment}` is not key=value")))?;
        let value = parse_literal(raw.trim());
        let mut root = toml::Value::try_from(&*self).map_err(|e| Error::Config(e.to_string()))?;
        let mut node = &mut root;
        let parts: Vec<&str> = key.trim().split('.').collect();
        for (i, part) in parts.iter().enumerate() {
            let table = node
                .as_table_mut()
                .ok_or_else(|| Error::Config(format!("`{key}` does not name a table entry")))?;
            if i + 1 == parts.len() {
                table.insert((*part).to_string(), value);
                break;
            }
            node = table.entry((*part).to_string()).or_insert_with(|| toml::Value::Table(Default::default()));
        }
        *self = root.try_into().map_err(|e: toml::de::Error| Error::Config(format!("override `{assignment}`: {e}")))?;
        Ok(())
    }

    pub fn model(&self) -> Result<SpacetimeModel> {
        match self.model.as_str() {
            "drum" => {
                if self.mass != 0.0 {
                    return Err(Error::Config(format!("the drum is massless, got mass = {}", self.mass)));
                }
                Ok(SpacetimeModel::drum())
            }
            "slab" => SpacetimeModel::slab(self.mass, self.slab_lifetime),
            other => Err(Error::Config(format!("unknown model `{other}` (expected drum or slab)"))),
        }
    }

    /// Quadrature orders for a given truncation, validated against the
    /// resolution rule.
    pub fn quad_for(&self, truncation: usize) -> Result<QuadratureSpec> {
        let base = QuadratureSpec::for_truncation(truncation);
        let spec = QuadratureSpec {
            surface_order: self.quad.surface_order.unwrap_or(base.surface_order),
            volume_order: self.quad.volume_order.unwrap_or(base.volume_order),
            summation: self.quad.summation,
        };
        spec.validate(truncation)?;
        Ok(spec)
    }

    pub fn quad(&self) -> Result<QuadratureSpec> {
        self.quad_for(self.truncation)
    }

    pub fn basis(&self) -> Result<Basis> {
        self.basis_at(self.truncation)
    }

    pub fn basis_at(&self, truncation: usize) -> Result<Basis> {
        let model = self.model()?;
        let quad = self.quad_for(truncation)?;
        match model.kind() {
            crate::models::ModelKind::Drum => Basis::drum(truncation, &quad),
            crate::models::ModelKind::Slab => Basis::slab(&model, truncation, &quad),
        }
    }

    pub fn borel_functions(&self) -> Result<Vec<BorelFunction>> {
        self.w.iter().map(|s| BorelFunction::parse(s)).collect()
    }

    /// Tolerance for a named check: per-check override, then the global
    /// override, then the default.
    pub fn tolerance(&self, check: &str, default: f64) -> f64 {
        self.tolerances
            .get(check)
            .copied()
            .or(self.tol)
            .unwrap_or(default)
    }

    /// Cache location: `SIGOP_CACHE_DIR`, then the config, then `.sigop-cache`.
    pub fn cache_dir(&self) -> PathBuf {
        std::env::var_os("SIGOP_CACHE_DIR")
            .map(PathBuf::from)
            .or_else(|| self.cache_dir.clone())
            .unwrap_or_else(|| PathBuf::from(".sigop-cache"))
    }

    /// SHA-256 of the canonical (key-sorted) JSON of the whole config.
    pub fn content_hash(&self) -> String {
        canonical_hash(self)
    }

    /// Hash of the fields that determine an assembled matrix.
    pub fn assembly_hash(&self) -> Result<String> {
        let quad = self.quad()?;
        let model = self.model()?;
        Ok(canonical_hash(&serde_json::json!({
            "model": model.kind(),
            "mass": model.mass(),
            "lifetime": model.lifetime(),
            "truncation": self.truncation,
            "quad": quad,
        })))
    }
}

fn parse_literal(raw: &str) -> toml::Value {
    toml::from_str::<BTreeMap<String, toml::Value>>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

/// SHA-256 hex digest of a value's JSON with object keys sorted.
pub fn canonical_hash<T: Serialize + ?Sized>(value: &T) -> String {
    // serde_json::Value stores objects in a BTreeMap, so keys come out sorted.
    let canonical = serde_json::to_value(value).and_then(|v| serde_json::to_vec(&v)).expect("config serializes");
    hex::encode(Sha256::digest(&canonical))
}
