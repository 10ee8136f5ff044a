//! Experiment configuration: a versioned TOML file with a strict schema
//! (unknown keys are rejected), plus CLI-flag overrides layered on top.

use pinn_darts::pde::PdeProblem;
use pinn_darts::profile::Profile;
use pinn_darts::search::DartsVariant;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Current config schema version.
pub const CONFIG_VERSION: u32 = 1;

/// A parsed method selector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Method {
    Grid,
    /// Uniform random search with k draws.
    Random(usize),
    /// Parzen-estimator search with k draws.
    Bayes(usize),
    Darts(DartsVariant),
}

impl Method {
    pub fn parse(s: &str) -> Result<Method, String> {
        if s == "grid" {
            return Ok(Method::Grid);
        }
        if let Some(k) = s.strip_prefix("random@") {
            let k: usize = k.parse().map_err(|e| format!("bad k in {s:?}: {e}"))?;
            return Ok(Method::Random(k));
        }
        if let Some(k) = s.strip_prefix("bayes@").or_else(|| s.strip_prefix("tpe@")) {
            let k: usize = k.parse().map_err(|e| format!("bad k in {s:?}: {e}"))?;
            return Ok(Method::Bayes(k));
        }
        DartsVariant::from_name(s).map(Method::Darts).map_err(|_| {
            format!(
                "unknown method {s:?} (grid | random@k | bayes@k | darts | darts+ | sdarts | sdarts+)"
            )
        })
    }

    pub fn label(&self) -> String {
        match self {
            Method::Grid => "grid".into(),
            Method::Random(k) => format!("random@{k}"),
            Method::Bayes(k) => format!("bayes@{k}"),
            Method::Darts(v) => v.name().into(),
        }
    }
}

/// Raw on-disk schema.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub version: u32,
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub reference: ReferenceSection,
    #[serde(default)]
    pub overrides: OverridesSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    /// Problem name, e.g. "poisson-simple", "heat-complex", "burgers".
    pub problem: String,
    /// Method selectors; see [`Method::parse`].
    pub methods: Vec<String>,
    /// Network-initialization seeds (default 1..=5, i.e. Init1–Init5).
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// "paper" or "small".
    pub profile: String,
    pub output_dir: PathBuf,
}

fn default_seeds() -> Vec<u64> {
    vec![1, 2, 3, 4, 5]
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSection {
    /// Cache directory; flag and PINN_DARTS_CACHE_DIR take precedence.
    pub cache_dir: Option<PathBuf>,
    /// Chebyshev degree override for the Burgers reference.
    pub degree: Option<usize>,
    /// Build the reference if the cache misses (default true); with false a
    /// missing cache is a hard error (exit code 3).
    #[serde(default = "default_true")]
    pub auto_build: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverridesSection {
    pub eval_iterations: Option<usize>,
    pub search_max_iterations: Option<usize>,
    pub sampling_seed: Option<u64>,
    /// Seed stream for random/bayes draw sequences.
    pub method_rng_seed: Option<u64>,
    /// Write timing fields as zero so report files are bit-comparable
    /// across runs.
    #[serde(default)]
    pub redact_timings: bool,
}

/// Fully resolved experiment configuration.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub problem: PdeProblem,
    pub methods: Vec<Method>,
    pub seeds: Vec<u64>,
    pub profile: Profile,
    pub output_dir: PathBuf,
    pub reference_cache: Option<PathBuf>,
    pub reference_auto_build: bool,
    pub method_rng_seed: u64,
    pub redact_timings: bool,
    /// Canonical serialized form, hashed into artifact metadata.
    pub canonical: String,
}

impl ExperimentConfig {
    /// Parse and validate a TOML config string.
    pub fn from_toml(text: &str) -> Result<ExperimentConfig, String> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| format!("config: {e}"))?;
        ExperimentConfig::from_file(file)
    }

    pub fn load(path: &Path) -> Result<ExperimentConfig, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("reading {}: {e}", path.display()))?;
        ExperimentConfig::from_toml(&text)
    }

    pub fn from_file(file: ConfigFile) -> Result<ExperimentConfig, String> {
        if file.version != CONFIG_VERSION {
            return Err(format!(
                "config version {} unsupported (expected {CONFIG_VERSION})",
                file.version
            ));
        }
        let problem = PdeProblem::from_name(&file.experiment.problem)?;
        if file.experiment.methods.is_empty() {
            return Err("no methods selected".into());
        }
        let methods = file
            .experiment
            .methods
            .iter()
            .map(|s| Method::parse(s))
            .collect::<Result<Vec<_>, _>>()?;
        if file.experiment.seeds.is_empty() {
            return Err("seed list is empty".into());
        }
        let mut sorted = file.experiment.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != file.experiment.seeds.len() {
            return Err("seed list contains duplicates".into());
        }
        let mut profile = Profile::by_name(&file.experiment.profile)?;
        if let Some(it) = file.overrides.eval_iterations {
            if it == 0 {
                return Err("eval_iterations must be positive".into());
            }
            profile.eval_iterations = it;
        }
        if let Some(it) = file.overrides.search_max_iterations {
            profile.search_max_iterations = it;
        }
        if let Some(s) = file.overrides.sampling_seed {
            profile.sampling_seed = s;
        }
        if let Some(d) = file.reference.degree {
            profile.reference_degree = d;
        }
        let canonical = toml::to_string(&file).expect("re-serializing config");
        Ok(ExperimentConfig {
            problem,
            methods,
            seeds: file.experiment.seeds,
            profile,
            output_dir: file.experiment.output_dir,
            reference_cache: file.reference.cache_dir,
            reference_auto_build: file.reference.auto_build,
            method_rng_seed: file.overrides.method_rng_seed.unwrap_or(2024),
            redact_timings: file.overrides.redact_timings,
            canonical,
        })
    }

    /// FNV-1a hash of the canonical config text, stamped into artifacts.
    pub fn hash(&self) -> String {
        format!("{:016x}", fnv1a(self.canonical.as_bytes()))
    }
}

pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = r#"
version = 1

[experiment]
problem = "poisson-simple"
methods = ["grid", "random@2", "bayes@5", "darts+"]
seeds = [1, 2, 3]
profile = "small"
output_dir = "out"
"#;

    #[test]
    fn parses_valid_config() {
        let cfg = ExperimentConfig::from_toml(GOOD).unwrap();
        assert_eq!(cfg.problem.name(), "poisson-simple");
        assert_eq!(cfg.methods.len(), 4);
        assert_eq!(cfg.methods[1], Method::Random(2));
        assert_eq!(cfg.seeds, vec![1, 2, 3]);
        assert_eq!(cfg.profile.name, "small");
        assert!(!cfg.redact_timings);
        assert_eq!(cfg.hash().len(), 16);
    }

    #[test]
    fn default_seeds_are_five_inits() {
        let text = GOOD.replace("seeds = [1, 2, 3]\n", "");
        let cfg = ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(cfg.seeds, vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn rejects_unknown_keys() {
        let text = format!("{GOOD}\n[experiment2]\nx = 1\n");
        assert!(ExperimentConfig::from_toml(&text).is_err());
        let text = GOOD.replace("output_dir", "output_dirs");
        assert!(ExperimentConfig::from_toml(&text).is_err());
    }

    #[test]
    fn rejects_bad_method_and_problem() {
        let text = GOOD.replace("\"grid\"", "\"annealing\"");
        let err = ExperimentConfig::from_toml(&text).unwrap_err();
        assert!(err.contains("unknown method"), "{err}");
        let text = GOOD.replace("poisson-simple", "poisson");
        assert!(ExperimentConfig::from_toml(&text).is_err());
    }

    #[test]
    fn rejects_bad_version_and_seeds() {
        let text = GOOD.replace("version = 1", "version = 9");
        assert!(ExperimentConfig::from_toml(&text).is_err());
        let text = GOOD.replace("[1, 2, 3]", "[1, 1, 2]");
        assert!(ExperimentConfig::from_toml(&text).is_err());
        let text = GOOD.replace("[1, 2, 3]", "[]");
        assert!(ExperimentConfig::from_toml(&text).is_err());
    }

    #[test]
    fn overrides_apply() {
        let text = format!(
            "{GOOD}\n[overrides]\neval_iterations = 50\nsearch_max_iterations = 20\nredact_timings = true\n"
        );
        let cfg = ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(cfg.profile.eval_iterations, 50);
        assert_eq!(cfg.profile.search_max_iterations, 20);
        assert!(cfg.redact_timings);
    }

    #[test]
    fn hash_is_stable_and_content_sensitive() {
        let a = ExperimentConfig::from_toml(GOOD).unwrap();
        let b = ExperimentConfig::from_toml(GOOD).unwrap();
        assert_eq!(a.hash(), b.hash());
        let c = ExperimentConfig::from_toml(&GOOD.replace("[1, 2, 3]", "[1, 2, 4]")).unwrap();
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn tpe_alias() {
        assert_eq!(Method::parse("tpe@2").unwrap(), Method::Bayes(2));
        assert_eq!(Method::parse("bayes@2").unwrap(), Method::Bayes(2));
    }
}
