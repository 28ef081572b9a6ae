//! Run configuration: one JSON document with a shared part and an optional
//! section per command.

use std::path::{Path, PathBuf};

use semithermo::branches::{FamilyParams, TailSource, TrackParams};
use semithermo::measures::{DEFAULT_MAX_ITER, DEFAULT_SAMPLES_PER_CELL, DEFAULT_TOL};
use semithermo::semigroup::BackwardSampling;
use semithermo::transfer::DEFAULT_NODE_BUDGET;
use semithermo::{Complex64, ExtComplex, GeneratorSet, Mode, Potential};
use serde::Deserialize;
use serde_json::Value;

use crate::error::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    semigroup: Value,
    #[serde(default)]
    potential: Option<Value>,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    out: Option<PathBuf>,
    #[serde(default)]
    sampling: SamplingSection,
    #[serde(default)]
    julia: JuliaSection,
    #[serde(default)]
    pressure: PressureSection,
    #[serde(default)]
    spectrum: SpectrumSection,
    #[serde(default)]
    check: CheckSection,
    #[serde(default)]
    branches: Option<BranchesSection>,
}

/// Backward sampling of the Julia set, shared by every command that needs
/// a cloud.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplingSection {
    pub samples: usize,
    pub burn_in: usize,
    pub seed_point: [f64; 2],
}

impl Default for SamplingSection {
    fn default() -> Self {
        let d = BackwardSampling::default();
        let z = d.seed_point.finite().unwrap_or_default();
        SamplingSection {
            samples: d.samples,
            burn_in: d.burn_in,
            seed_point: [z.re, z.im],
        }
    }
}

impl SamplingSection {
    pub fn params(&self, samples: usize) -> BackwardSampling {
        BackwardSampling {
            seed_point: ExtComplex::new(self.seed_point[0], self.seed_point[1]),
            burn_in: self.burn_in,
            samples,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct JuliaSection {
    pub center: [f64; 2],
    pub half_width: f64,
    pub resolution: usize,
}

impl Default for JuliaSection {
    fn default() -> Self {
        JuliaSection {
            center: [0.0, 0.0],
            half_width: 2.0,
            resolution: 512,
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum ModeName {
    Exact,
    Montecarlo,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PressureSection {
    pub n_max: usize,
    pub points: usize,
    pub mode: ModeName,
    pub paths: usize,
    pub budget: u64,
}

impl Default for PressureSection {
    fn default() -> Self {
        PressureSection {
            n_max: 12,
            points: 10,
            mode: ModeName::Exact,
            paths: 100_000,
            budget: DEFAULT_NODE_BUDGET,
        }
    }
}

impl PressureSection {
    pub fn mode(&self, seed: u64) -> Mode {
        match self.mode {
            ModeName::Exact => Mode::Exact { budget: self.budget },
            ModeName::Montecarlo => Mode::MonteCarlo {
                paths: self.paths,
                seed,
            },
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumSection {
    pub cells: usize,
    pub cloud_samples: usize,
    pub samples_per_cell: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub jacobian_pairs: usize,
    pub invariance_quanta: usize,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        SpectrumSection {
            cells: 1024,
            cloud_samples: 50_000,
            samples_per_cell: DEFAULT_SAMPLES_PER_CELL,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            jacobian_pairs: 4096,
            invariance_quanta: 1_000_000,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CheckSection {
    pub orbit_length: usize,
    pub n_max: usize,
    pub points: usize,
}

impl Default for CheckSection {
    fn default() -> Self {
        CheckSection {
            orbit_length: 6,
            n_max: 10,
            points: 5,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "lowercase")]
pub enum TailSpec {
    Constant(usize),
    Periodic(Vec<usize>),
    /// seeded by the run seed when no seed is given
    Random(Option<u64>),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchesSection {
    pub z: [f64; 2],
    pub r: f64,
    pub lambda: f64,
    #[serde(default = "one")]
    pub q: usize,
    pub n_max: usize,
    #[serde(default)]
    pub tail: Option<TailSpec>,
    #[serde(default)]
    pub spokes: Option<usize>,
    #[serde(default)]
    pub steps: Option<usize>,
    #[serde(default)]
    pub max_candidates: Option<usize>,
}

fn one() -> usize {
    1
}

impl BranchesSection {
    pub fn params(&self, seed: u64) -> FamilyParams {
        let mut p = FamilyParams::new(Complex64::new(self.z[0], self.z[1]), self.r, self.lambda, self.q, self.n_max);
        p.tail = match &self.tail {
            None => TailSource::Constant(0),
            Some(TailSpec::Constant(j)) => TailSource::Constant(*j),
            Some(TailSpec::Periodic(v)) => TailSource::Periodic(v.clone()),
            Some(TailSpec::Random(s)) => TailSource::Random { seed: s.unwrap_or(seed) },
        };
        let d = TrackParams::default();
        p.track = TrackParams {
            spokes: self.spokes.unwrap_or(d.spokes),
            steps: self.steps.unwrap_or(d.steps),
        };
        if let Some(c) = self.max_candidates {
            p.max_candidates = c;
        }
        p
    }
}

/// A loaded configuration with the semigroup and potential resolved.
#[derive(Debug)]
pub struct RunConfig {
    pub gens: GeneratorSet,
    pub potential: Potential,
    pub seed: u64,
    pub out: PathBuf,
    pub sampling: SamplingSection,
    pub julia: JuliaSection,
    pub pressure: PressureSection,
    pub spectrum: SpectrumSection,
    pub check: CheckSection,
    pub branches: Option<BranchesSection>,
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Inline JSON, or a string naming a file relative to the config's directory.
fn inline_or_file(v: Value, base: &Path, field: &str) -> Result<String, CliError> {
    match v {
        Value::String(p) => read(&base.join(p)),
        Value::Object(_) => Ok(v.to_string()),
        _ => Err(CliError::Config(format!("`{field}` must be an object or a file path"))),
    }
}

impl RunConfig {
    pub fn load(path: &Path, seed: Option<u64>, out: Option<PathBuf>) -> Result<Self, CliError> {
        let text = read(path)?;
        let raw: RawConfig =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let gens = GeneratorSet::from_json(&inline_or_file(raw.semigroup, base, "semigroup")?)
            .map_err(|e| CliError::Config(format!("`semigroup`: {e}")))?;
        let potential = match raw.potential {
            None => Potential::zero(),
            Some(v) => Potential::from_json(&inline_or_file(v, base, "potential")?)
                .map_err(|e| CliError::Config(format!("`potential`: {e}")))?,
        };
        potential
            .validate(&gens)
            .map_err(|e| CliError::Config(format!("`potential`: {e}")))?;
        Ok(RunConfig {
            gens,
            potential,
            seed: seed.unwrap_or(raw.seed),
            out: out.or(raw.out).unwrap_or_else(|| PathBuf::from(".")),
            sampling: raw.sampling,
            julia: raw.julia,
            pressure: raw.pressure,
            spectrum: raw.spectrum,
            check: raw.check,
            branches: raw.branches,
        })
    }
}
