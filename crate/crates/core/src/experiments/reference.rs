use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::coeff::ParametricField;
use crate::error::{Error, Result};
use crate::estimators::{direct_estimate, tensor_estimate, Axis, RuleFamily};
use crate::qmc::PointSet;

use super::config::{hex_digest, ExperimentConfig, ReferenceRule};
use super::setup::{preset_fields, RandomSetup};
use super::write_atomic;

/// Bumped whenever a change alters reference values for an unchanged key.
const CACHE_VERSION: u32 = 1;

/// Settings that determine a reference value; the cache is keyed by the
/// SHA-256 of its JSON form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ReferenceKey {
    version: u32,
    mu: ParametricField,
    lambda: ParametricField,
    degree: usize,
    subdivisions: usize,
    b: u32,
    p: f64,
    q: f64,
    weight_budget: f64,
    rule: ReferenceRule,
    seed: u64,
    probes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CacheEntry {
    key: ReferenceKey,
    value: f64,
    /// Bit pattern of `value`, so the round trip is exact.
    value_bits: String,
    solves: usize,
    wall_time: f64,
    /// SHA-256 of the key JSON and `value_bits`.
    checksum: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceOutcome {
    pub value: f64,
    pub cache_hit: bool,
    /// Solves performed by this call.
    pub solves: usize,
    pub path: PathBuf,
}

fn reference_key(config: &ExperimentConfig) -> Result<ReferenceKey> {
    let rule = config
        .reference
        .ok_or_else(|| Error::Config(format!("preset {} has no reference rule", config.preset)))?;
    let (mu, lambda) = preset_fields(config);
    Ok(ReferenceKey {
        version: CACHE_VERSION,
        mu,
        lambda,
        degree: config.degree,
        subdivisions: config.subdivisions,
        b: config.b,
        p: config.p,
        q: config.q,
        weight_budget: config.weight_budget,
        rule,
        seed: config.seed,
        probes: config.probes,
    })
}

fn checksum(key_json: &str, bits: &str) -> String {
    hex_digest(format!("{key_json}:{bits}").as_bytes())
}

/// Path of the cache entry for `config`.
pub fn reference_path(config: &ExperimentConfig) -> Result<PathBuf> {
    let key = serde_json::to_string(&reference_key(config)?)?;
    Ok(config.cache_dir.join(format!("reference-{}.json", &hex_digest(key.as_bytes())[..32])))
}

fn read_entry(path: &Path, key: &ReferenceKey) -> Result<Option<f64>> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    let corrupt = |message: String| Error::CacheCorrupt {
        path: path.to_path_buf(),
        message,
    };
    let entry: CacheEntry = serde_json::from_str(&text).map_err(|e| corrupt(e.to_string()))?;
    let key_json = serde_json::to_string(&entry.key)?;
    if entry.checksum != checksum(&key_json, &entry.value_bits) {
        return Err(corrupt("checksum mismatch".into()));
    }
    let bits = u64::from_str_radix(&entry.value_bits, 16).map_err(|e| corrupt(e.to_string()))?;
    if f64::from_bits(bits).to_bits() != entry.value.to_bits() {
        return Err(corrupt("value does not match its bit pattern".into()));
    }
    if &entry.key != key {
        return Err(corrupt("entry belongs to a different configuration".into()));
    }
    Ok(Some(entry.value))
}

/// Evaluates the reference rule of `config` on `setup`.
pub fn compute_reference(config: &ExperimentConfig, setup: &RandomSetup) -> Result<(f64, usize)> {
    let rule = config
        .reference
        .ok_or_else(|| Error::Config(format!("preset {} has no reference rule", config.preset)))?;
    let rules = &setup.rules;
    let est = match rule {
        ReferenceRule::Axis { m } => {
            let (ry, rz) = if config.s1 > 0 {
                (rules.rule(Axis::Y, m)?, std::sync::Arc::new(PointSet::origin(0, config.b)))
            } else {
                (std::sync::Arc::new(PointSet::origin(0, config.b)), rules.rule(Axis::Z, m)?)
            };
            tensor_estimate(&setup.integrand, &ry, &rz, config.workers)?
        }
        ReferenceRule::Direct { m } => {
            direct_estimate(&setup.integrand, &*rules.direct(m)?, &rules.layout(), config.workers)?
        }
        ReferenceRule::Tensor { m1, m2 } => tensor_estimate(
            &setup.integrand,
            &*rules.rule(Axis::Y, m1)?,
            &*rules.rule(Axis::Z, m2)?,
            config.workers,
        )?,
    };
    Ok((est.value, est.fresh_solves))
}

/// Returns the cached reference value of `config`, computing and storing it
/// on a miss or when `rebuild` is set. `setup` is built on demand when not
/// supplied.
pub fn build_reference(config: &ExperimentConfig, setup: Option<&RandomSetup>, rebuild: bool) -> Result<ReferenceOutcome> {
    config.validate()?;
    let key = reference_key(config)?;
    let path = reference_path(config)?;
    if !rebuild {
        if let Some(value) = read_entry(&path, &key)? {
            return Ok(ReferenceOutcome {
                value,
                cache_hit: true,
                solves: 0,
                path,
            });
        }
    }
    let owned;
    let setup = match setup {
        Some(s) => s,
        None => {
            owned = RandomSetup::new(config)?;
            &owned
        }
    };
    let start = std::time::Instant::now();
    let (value, solves) = compute_reference(config, setup)?;
    let key_json = serde_json::to_string(&key)?;
    let bits = format!("{:016x}", value.to_bits());
    let entry = CacheEntry {
        checksum: checksum(&key_json, &bits),
        key,
        value,
        value_bits: bits,
        solves,
        wall_time: start.elapsed().as_secs_f64(),
    };
    std::fs::create_dir_all(&config.cache_dir)?;
    write_atomic(&path, serde_json::to_string_pretty(&entry)?.as_bytes())?;
    Ok(ReferenceOutcome {
        value,
        cache_hit: false,
        solves,
        path,
    })
}
