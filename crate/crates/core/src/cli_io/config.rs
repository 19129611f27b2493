//! Run configuration: JSON schema, defaults, validation, canonical echo.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::files::{load_chemistry, read_file};
use crate::chemistry::{Alphabet, Chemistry, ChemistryParams, Species};
use crate::engine::{KineticParams, ReactorConfig, RunOptions};
use crate::error::{Error, Result};
use crate::experiments::{EnsembleOptions, Scenario};

pub const FORMAT_VERSION: u32 = 1;

/// Everything a CLI invocation needs. Chemistry is given either by its
/// generation parameters (flat keys) or by `chemistry_path`, never both.
/// Omitted keys take the defaults of the bundled reference scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "format_version")]
    pub format_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chemistry_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chem_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphabet: Option<Alphabet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_max_product: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_max_len: Option<usize>,
    #[serde(default = "defaults::reactor")]
    pub reactor: ReactorConfig,
    /// Second arm of `compare`.
    #[serde(default = "defaults::compare_reactor")]
    pub compare_reactor: ReactorConfig,
    #[serde(default = "defaults::kinetics")]
    pub kinetics: KineticParams,
    #[serde(default = "defaults::initial_counts")]
    pub initial_counts: BTreeMap<Species, u64>,
    #[serde(default = "defaults::t_end")]
    pub t_end: f64,
    #[serde(default = "defaults::dt_obs")]
    pub dt_obs: f64,
    /// `run` uses the first seed; `ensemble` and `compare` use all.
    #[serde(default = "defaults::seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "defaults::output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub event_ledger: bool,
    /// Also write a wide per-species count table.
    #[serde(default)]
    pub record_counts: bool,
}

fn format_version() -> u32 {
    FORMAT_VERSION
}

/// Reference-scenario defaults.
pub mod defaults {
    use super::*;

    pub const P: f64 = 0.02;
    pub const CHEM_SEED: u64 = 1;
    pub const INITIAL_MAX_LEN: usize = 3;
    pub const L_MAX_PRODUCT: usize = 16;
    pub const FEED_LEVEL: u64 = 50;
    pub const INITIAL_COUNT: u64 = 5;
    pub const K_TRANSPORT: f64 = 0.02;
    pub const L_PERM: usize = 2;

    fn nutrients() -> BTreeMap<Species, u64> {
        Alphabet::binary()
            .all_up_to(1)
            .into_iter()
            .map(|s| (s, FEED_LEVEL))
            .collect()
    }

    pub fn reactor() -> ReactorConfig {
        ReactorConfig::cstr(K_TRANSPORT, nutrients())
    }

    pub fn compare_reactor() -> ReactorConfig {
        ReactorConfig::protocell(L_PERM, K_TRANSPORT, nutrients())
    }

    pub fn kinetics() -> KineticParams {
        KineticParams {
            k_complex: 0.001,
            k_release: 0.001,
            k_cleave: 0.001,
            k_diss: 0.1,
        }
    }

    pub fn initial_counts() -> BTreeMap<Species, u64> {
        Alphabet::binary()
            .all_up_to(INITIAL_MAX_LEN)
            .into_iter()
            .map(|s| (s, INITIAL_COUNT))
            .collect()
    }

    pub fn t_end() -> f64 {
        1e4
    }

    pub fn dt_obs() -> f64 {
        10.0
    }

    pub fn seeds() -> Vec<u64> {
        (1..=20).collect()
    }

    pub fn output_dir() -> PathBuf {
        PathBuf::from("out")
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str::<RunConfig>("{}")
            .expect("empty config takes every default")
            .normalized()
    }
}

impl RunConfig {
    /// Parses and validates a config document. A relative `chemistry_path`
    /// is resolved against `base_dir`.
    pub fn from_json(text: &str, origin: &Path, base_dir: &Path) -> Result<Self> {
        let mut cfg: RunConfig = serde_json::from_str(text).map_err(|source| Error::Json {
            path: origin.to_path_buf(),
            source,
        })?;
        if let Some(p) = &cfg.chemistry_path {
            if p.is_relative() {
                let joined = base_dir.join(p);
                cfg.chemistry_path = Some(std::path::absolute(&joined).unwrap_or(joined));
            }
        }
        let cfg = cfg.normalized();
        cfg.validate()?;
        Ok(cfg)
    }

    /// Fills generation parameters with their defaults unless the chemistry
    /// comes from a file.
    fn normalized(mut self) -> Self {
        if self.chemistry_path.is_none() {
            let base = ChemistryParams::new(defaults::P, defaults::CHEM_SEED);
            self.p.get_or_insert(base.p);
            self.chem_seed.get_or_insert(base.chem_seed);
            self.alphabet.get_or_insert(base.alphabet);
            self.l_max_product.get_or_insert(defaults::L_MAX_PRODUCT);
            self.initial_max_len
                .get_or_insert(defaults::INITIAL_MAX_LEN);
        }
        self
    }

    fn flat_chemistry_keys(&self) -> Vec<&'static str> {
        let mut keys = Vec::new();
        for (key, set) in [
            ("p", self.p.is_some()),
            ("chem_seed", self.chem_seed.is_some()),
            ("alphabet", self.alphabet.is_some()),
            ("l_max_product", self.l_max_product.is_some()),
            ("initial_max_len", self.initial_max_len.is_some()),
        ] {
            if set {
                keys.push(key);
            }
        }
        keys
    }

    /// Generation parameters; `None` when the chemistry comes from a file.
    pub fn chemistry_params(&self) -> Option<ChemistryParams> {
        if self.chemistry_path.is_some() {
            return None;
        }
        let base = ChemistryParams::new(defaults::P, defaults::CHEM_SEED);
        Some(ChemistryParams {
            p: self.p.unwrap_or(base.p),
            chem_seed: self.chem_seed.unwrap_or(base.chem_seed),
            alphabet: self.alphabet.clone().unwrap_or(base.alphabet),
            l_max_product: self.l_max_product.unwrap_or(defaults::L_MAX_PRODUCT),
            initial_max_len: self.initial_max_len.unwrap_or(defaults::INITIAL_MAX_LEN),
        })
    }

    /// Generates or loads the chemistry.
    pub fn chemistry(&self) -> Result<Chemistry> {
        match (&self.chemistry_path, self.chemistry_params()) {
            (Some(path), _) => load_chemistry(path),
            (None, Some(params)) => Chemistry::generate(params),
            (None, None) => unreachable!("params exist without a path"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::config(
                "format_version",
                format!("expected {FORMAT_VERSION}, got {}", self.format_version),
            ));
        }
        let alphabet = match &self.chemistry_path {
            Some(path) => {
                let flat = self.flat_chemistry_keys();
                if !flat.is_empty() {
                    return Err(Error::config(
                        "chemistry_path",
                        format!("cannot be combined with generation keys {flat:?}"),
                    ));
                }
                load_chemistry(path)?.params().alphabet.clone()
            }
            None => {
                let params = self.chemistry_params().expect("no chemistry path");
                params.validate()?;
                params.alphabet
            }
        };
        self.reactor.validate(&alphabet, "reactor")?;
        self.compare_reactor
            .validate(&alphabet, "compare_reactor")?;
        self.kinetics.validate()?;
        for s in self.initial_counts.keys() {
            alphabet
                .parse(s.as_str())
                .map_err(|e| Error::config("initial_counts", e.to_string()))?;
        }
        RunOptions::new(self.t_end, self.dt_obs, 0).validate()?;
        if self.seeds.is_empty() {
            return Err(Error::config("seeds", "at least one seed is required"));
        }
        Ok(())
    }

    /// Applies a `--seed` override: `gen-chem` takes it as the chemistry
    /// seed; the simulation commands take it as the first of a run of
    /// consecutive simulation seeds, keeping the seed count.
    pub fn override_seed(&mut self, seed: u64, chemistry_seed: bool) -> Result<()> {
        if chemistry_seed {
            if self.chemistry_path.is_some() {
                return Err(Error::config(
                    "chem_seed",
                    "--seed cannot reseed a chemistry loaded from chemistry_path",
                ));
            }
            self.chem_seed = Some(seed);
        } else {
            let n = self.seeds.len() as u64;
            self.seeds = (0..n)
                .map(|i| seed.checked_add(i))
                .collect::<Option<_>>()
                .ok_or_else(|| Error::config("seeds", format!("seed {seed} + {n} overflows")))?;
        }
        Ok(())
    }

    /// Canonical JSON form; loading it yields an equal config.
    pub fn to_canonical_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    pub fn scenario(&self) -> Result<Scenario> {
        Ok(Scenario {
            chemistry: self.chemistry()?,
            kinetics: self.kinetics.clone(),
            initial_counts: self.initial_counts.clone(),
            t_end: self.t_end,
            dt_obs: self.dt_obs,
        })
    }

    pub fn run_options(&self, seed: u64) -> RunOptions {
        let mut opts = RunOptions::new(self.t_end, self.dt_obs, seed);
        opts.record_events = self.event_ledger;
        opts.record_counts = self.record_counts;
        opts
    }

    pub fn ensemble_options(&self) -> EnsembleOptions {
        EnsembleOptions {
            record_events: self.event_ledger,
            record_counts: self.record_counts,
            keep_trajectories: true,
            ..EnsembleOptions::default()
        }
    }
}

/// Reads, parses, and validates a config file.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = read_file(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    RunConfig::from_json(&text, path, base)
}
