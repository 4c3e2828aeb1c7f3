use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::coeff::interlacing_order;
use crate::error::{Error, Result};
use crate::estimators::{Axis, SparseSchedule};
use crate::qmc::{is_prime, MAX_MANTISSA_BITS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PresetId {
    /// Deterministic coefficients, mesh refinement against a manufactured
    /// solution.
    #[serde(rename = "1")]
    Example1,
    /// Random shear modulus, rules in `y` only.
    #[serde(rename = "2")]
    Example2,
    /// Random first Lamé parameter, rules in `z` only.
    #[serde(rename = "3")]
    Example3,
    /// Both random, one rule over all parameters.
    #[serde(rename = "4a")]
    Example4Direct,
    /// Both random, sparse combination of tensor rules.
    #[serde(rename = "4b")]
    Example4Sparse,
}

impl PresetId {
    pub const ALL: [PresetId; 5] = [
        PresetId::Example1,
        PresetId::Example2,
        PresetId::Example3,
        PresetId::Example4Direct,
        PresetId::Example4Sparse,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PresetId::Example1 => "1",
            PresetId::Example2 => "2",
            PresetId::Example3 => "3",
            PresetId::Example4Direct => "4a",
            PresetId::Example4Sparse => "4b",
        }
    }
}

impl fmt::Display for PresetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PresetId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PresetId::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown preset `{s}` (expected one of 1, 2, 3, 4a, 4b)")))
    }
}

/// The resolution sweep of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Study {
    /// Mesh refinement over subdivision counts.
    Mesh { subdivisions: Vec<usize> },
    /// Rules with `b^m` points on one parameter axis, one point on the other.
    Axis { axis: Axis, exponents: Vec<u32> },
    /// One rule with `b^m` points over all `s1 + s2` parameters.
    Direct { exponents: Vec<u32> },
    /// Sparse combinations at the given levels.
    Sparse { levels: Vec<u32>, theta: f64 },
}

/// Rule producing the reference value of a random example.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReferenceRule {
    Axis { m: u32 },
    Direct { m: u32 },
    Tensor { m1: u32, m2: u32 },
}

impl ReferenceRule {
    pub fn points(&self, b: u32) -> usize {
        let b = b as usize;
        match *self {
            ReferenceRule::Axis { m } | ReferenceRule::Direct { m } => b.pow(m),
            ReferenceRule::Tensor { m1, m2 } => b.pow(m1) * b.pow(m2),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub preset: PresetId,
    pub paper_scale: bool,
    /// Polynomial degree of the finite elements.
    pub degree: usize,
    /// Mesh subdivisions for the random examples.
    pub subdivisions: usize,
    pub s1: usize,
    pub s2: usize,
    pub b: u32,
    pub p: f64,
    pub q: f64,
    /// Cap on the sum of the SPOD sequence fed to the CBC construction;
    /// larger sequences are scaled down to it.
    pub weight_budget: f64,
    pub study: Study,
    pub reference: Option<ReferenceRule>,
    pub workers: usize,
    /// Seed of the random probes that validate the coefficient bounds.
    pub seed: u64,
    pub probes: usize,
    pub output_dir: PathBuf,
    pub cache_dir: PathBuf,
}

/// On-disk form: a preset plus optional overrides of its fields.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    preset: Option<PresetId>,
    paper_scale: Option<bool>,
    degree: Option<usize>,
    subdivisions: Option<usize>,
    s1: Option<usize>,
    s2: Option<usize>,
    b: Option<u32>,
    p: Option<f64>,
    q: Option<f64>,
    weight_budget: Option<f64>,
    study: Option<Study>,
    reference: Option<ReferenceRule>,
    workers: Option<usize>,
    seed: Option<u64>,
    probes: Option<usize>,
    output_dir: Option<PathBuf>,
    cache_dir: Option<PathBuf>,
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

impl ExperimentConfig {
    /// Preset defaults. Desk scale keeps every run on a workstation; paper
    /// scale uses the published truncation, mesh and reference sizes.
    pub fn preset(id: PresetId, paper_scale: bool) -> Self {
        let (j, s, reference_m) = if paper_scale { (128, 256, 10) } else { (32, 64, 12) };
        let four_reference = if paper_scale {
            ReferenceRule::Tensor { m1: 11, m2: 11 }
        } else {
            ReferenceRule::Direct { m: 16 }
        };
        let mut c = ExperimentConfig {
            preset: id,
            paper_scale,
            degree: 2,
            subdivisions: j,
            s1: 0,
            s2: 0,
            b: 2,
            p: 0.5,
            q: 0.5,
            weight_budget: 0.5,
            study: Study::Mesh { subdivisions: Vec::new() },
            reference: None,
            workers: default_workers(),
            seed: 20240229,
            probes: 1000,
            output_dir: PathBuf::from("results"),
            cache_dir: PathBuf::from(".qmcfem-cache"),
        };
        match id {
            PresetId::Example1 => {
                c.degree = 1;
                c.subdivisions = 0;
                c.study = Study::Mesh {
                    subdivisions: vec![8, 16, 32, 64, 128],
                };
            }
            PresetId::Example2 | PresetId::Example3 => {
                let axis = if id == PresetId::Example2 { Axis::Y } else { Axis::Z };
                match axis {
                    Axis::Y => c.s1 = s,
                    Axis::Z => c.s2 = s,
                }
                c.study = Study::Axis {
                    axis,
                    exponents: (3..=8).collect(),
                };
                c.reference = Some(ReferenceRule::Axis { m: reference_m });
            }
            PresetId::Example4Direct => {
                c.s1 = s;
                c.s2 = s;
                c.study = Study::Direct {
                    exponents: (8..=13).collect(),
                };
                c.reference = Some(four_reference);
            }
            PresetId::Example4Sparse => {
                c.s1 = s;
                c.s2 = s;
                c.study = Study::Sparse {
                    levels: if paper_scale { (9..=15).collect() } else { (5..=9).collect() },
                    theta: 2.0,
                };
                c.reference = Some(four_reference);
            }
        }
        c
    }

    /// Parses a TOML configuration: `preset` (required) and `paper_scale`
    /// select the defaults, every other key overrides one field.
    pub fn from_toml(text: &str) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let id = file
            .preset
            .ok_or_else(|| Error::Config("missing `preset`".into()))?;
        let mut c = ExperimentConfig::preset(id, file.paper_scale.unwrap_or(false));
        macro_rules! apply {
            ($($f:ident),*) => {$(
                if let Some(v) = file.$f {
                    c.$f = v;
                }
            )*};
        }
        apply!(degree, subdivisions, s1, s2, b, p, q, weight_budget, study, workers, seed, probes, output_dir, cache_dir);
        if file.reference.is_some() {
            c.reference = file.reference;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            e => e,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Interlacing order of the rules on `axis` (`None` for the combined rule).
    pub fn alpha(&self, axis: Option<Axis>) -> u32 {
        match axis {
            Some(Axis::Y) => interlacing_order(self.p) as u32,
            Some(Axis::Z) => interlacing_order(self.q) as u32,
            None => interlacing_order(self.p).min(interlacing_order(self.q)) as u32,
        }
    }

    fn check_digits(&self, axis: Option<Axis>, m: u32) -> Result<()> {
        let bits = (self.alpha(axis) * m) as f64 * (self.b as f64).log2();
        if bits.ceil() as u32 > MAX_MANTISSA_BITS {
            return Err(Error::Config(format!(
                "rule with b^{m} points and interlacing order {} needs {} bits, more than double precision holds",
                self.alpha(axis),
                bits.ceil()
            )));
        }
        if m == 0 {
            return Err(Error::Config("rule exponents must be positive".into()));
        }
        Ok(())
    }

    /// Checks every module precondition that can be decided before solving.
    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(Error::Config(m));
        if !(1..=2).contains(&self.degree) {
            return err(format!("degree must be 1 or 2, got {}", self.degree));
        }
        if !is_prime(self.b) {
            return err(format!("base {} is not prime", self.b));
        }
        for (name, v) in [("p", self.p), ("q", self.q)] {
            if !(v > 0.0 && v <= 1.0) {
                return err(format!("{name} must lie in (0, 1], got {v}"));
            }
        }
        if !(self.weight_budget > 0.0 && self.weight_budget.is_finite()) {
            return err(format!("weight_budget must be positive, got {}", self.weight_budget));
        }
        if self.workers == 0 {
            return err("workers must be at least 1".into());
        }
        let increasing = |v: &[u64]| !v.is_empty() && v.windows(2).all(|w| w[0] < w[1]);
        let random = self.preset != PresetId::Example1;
        if random && self.subdivisions == 0 {
            return err("subdivisions must be positive".into());
        }
        let (need_y, need_z) = match self.preset {
            PresetId::Example1 => (false, false),
            PresetId::Example2 => (true, false),
            PresetId::Example3 => (false, true),
            _ => (true, true),
        };
        if need_y != (self.s1 > 0) || need_z != (self.s2 > 0) {
            return err(format!(
                "preset {} needs s1 {} 0 and s2 {} 0",
                self.preset,
                if need_y { ">" } else { "=" },
                if need_z { ">" } else { "=" }
            ));
        }
        match (&self.study, self.preset) {
            (Study::Mesh { subdivisions }, PresetId::Example1) => {
                if !increasing(&subdivisions.iter().map(|&v| v as u64).collect::<Vec<_>>()) || subdivisions[0] == 0 {
                    return err("subdivisions must be positive and strictly increasing".into());
                }
            }
            (Study::Axis { axis, exponents }, PresetId::Example2 | PresetId::Example3) => {
                let expected = if self.preset == PresetId::Example2 { Axis::Y } else { Axis::Z };
                if *axis != expected {
                    return err(format!("preset {} varies the {expected:?} axis", self.preset));
                }
                if !increasing(&exponents.iter().map(|&v| v as u64).collect::<Vec<_>>()) {
                    return err("exponents must be strictly increasing".into());
                }
                for &m in exponents {
                    self.check_digits(Some(*axis), m)?;
                }
            }
            (Study::Direct { exponents }, PresetId::Example4Direct) => {
                if !increasing(&exponents.iter().map(|&v| v as u64).collect::<Vec<_>>()) {
                    return err("exponents must be strictly increasing".into());
                }
                for &m in exponents {
                    self.check_digits(None, m)?;
                }
            }
            (Study::Sparse { levels, theta }, PresetId::Example4Sparse) => {
                if !increasing(&levels.iter().map(|&v| v as u64).collect::<Vec<_>>()) || levels[0] < 2 {
                    return err("levels must be at least 2 and strictly increasing".into());
                }
                let schedule = SparseSchedule::new(self.b, self.p, self.q, *theta)
                    .map_err(|e| Error::Config(e.to_string()))?;
                let top = *levels.last().expect("nonempty");
                self.check_digits(Some(Axis::Y), schedule.y_digits(top - 1))?;
                self.check_digits(Some(Axis::Z), schedule.z_digits(top - 1))?;
            }
            (study, preset) => {
                let kind = match study {
                    Study::Mesh { .. } => "mesh",
                    Study::Axis { .. } => "axis",
                    Study::Direct { .. } => "direct",
                    Study::Sparse { .. } => "sparse",
                };
                return err(format!("study kind `{kind}` does not fit preset {preset}"));
            }
        }
        match (self.reference, self.preset) {
            (None, PresetId::Example1) => {}
            (Some(_), PresetId::Example1) => return err("preset 1 has an exact solution and takes no reference".into()),
            (None, _) => return err(format!("preset {} needs a reference rule", self.preset)),
            (Some(ReferenceRule::Axis { m }), PresetId::Example2) => self.check_digits(Some(Axis::Y), m)?,
            (Some(ReferenceRule::Axis { m }), PresetId::Example3) => self.check_digits(Some(Axis::Z), m)?,
            (Some(ReferenceRule::Direct { m }), PresetId::Example4Direct | PresetId::Example4Sparse) => {
                self.check_digits(None, m)?
            }
            (Some(ReferenceRule::Tensor { m1, m2 }), PresetId::Example4Direct | PresetId::Example4Sparse) => {
                self.check_digits(Some(Axis::Y), m1)?;
                self.check_digits(Some(Axis::Z), m2)?;
            }
            (Some(r), preset) => return err(format!("reference {r:?} does not fit preset {preset}")),
        }
        Ok(())
    }

    /// SHA-256 of the settings that determine the numbers in a report;
    /// worker count and paths are excluded.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.workers = 0;
        c.output_dir = PathBuf::new();
        c.cache_dir = PathBuf::new();
        hex_digest(serde_json::to_string(&c).expect("config serializes").as_bytes())
    }

    pub fn csv_path(&self) -> PathBuf {
        self.output_dir.join(format!("example{}.csv", self.preset))
    }
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
