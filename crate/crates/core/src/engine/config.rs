use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::chemistry::{Alphabet, Species};
use crate::error::{Error, Result};

/// Stochastic rate constants, per count (no volume scaling).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KineticParams {
    /// catalyst + first substrate -> complex
    pub k_complex: f64,
    /// complex + second substrate -> product + catalyst
    pub k_release: f64,
    /// catalyst + substrate -> fragments + catalyst
    pub k_cleave: f64,
    /// complex -> catalyst + first substrate
    #[serde(default)]
    pub k_diss: f64,
}

impl KineticParams {
    pub fn validate(&self) -> Result<()> {
        for (key, v) in [
            ("kinetics.k_complex", self.k_complex),
            ("kinetics.k_release", self.k_release),
            ("kinetics.k_cleave", self.k_cleave),
            ("kinetics.k_diss", self.k_diss),
        ] {
            check_rate(key, v)?;
        }
        Ok(())
    }
}

impl Default for KineticParams {
    fn default() -> Self {
        KineticParams {
            k_complex: 0.001,
            k_release: 0.001,
            k_cleave: 0.001,
            k_diss: 0.0,
        }
    }
}

fn check_rate(key: &str, v: f64) -> Result<()> {
    if !v.is_finite() || v < 0.0 {
        return Err(Error::config(
            key,
            format!("rate {v} must be finite and non-negative"),
        ));
    }
    Ok(())
}

/// Transport regime of the reactor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReactorMode {
    /// Flow reactor: nutrient influx and first-order outflow of every entity.
    Cstr {
        #[serde(default = "default_k_in")]
        k_in: f64,
        k_out: f64,
        #[serde(default)]
        feed: BTreeMap<Species, u64>,
    },
    /// Membrane-bounded cell: entities longer than `l_perm` bricks cannot cross.
    Protocell {
        l_perm: usize,
        k_mem: f64,
        #[serde(default)]
        external: BTreeMap<Species, u64>,
    },
}

fn default_k_in() -> f64 {
    1.0
}

fn default_hybrid() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReactorConfig {
    pub mode: ReactorMode,
    /// Clamp feed (CSTR) or external (protocell) species to their configured
    /// levels instead of simulating their influx as a stochastic channel.
    #[serde(default = "default_hybrid")]
    pub hybrid_buffered: bool,
}

impl ReactorConfig {
    pub fn cstr(k_out: f64, feed: BTreeMap<Species, u64>) -> Self {
        ReactorConfig {
            mode: ReactorMode::Cstr {
                k_in: default_k_in(),
                k_out,
                feed,
            },
            hybrid_buffered: true,
        }
    }

    pub fn protocell(l_perm: usize, k_mem: f64, external: BTreeMap<Species, u64>) -> Self {
        ReactorConfig {
            mode: ReactorMode::Protocell {
                l_perm,
                k_mem,
                external,
            },
            hybrid_buffered: true,
        }
    }

    /// A sealed vessel: no transport at all.
    pub fn closed() -> Self {
        ReactorConfig {
            mode: ReactorMode::Protocell {
                l_perm: 0,
                k_mem: 0.0,
                external: BTreeMap::new(),
            },
            hybrid_buffered: false,
        }
    }

    pub fn validate(&self, alphabet: &Alphabet, key: &str) -> Result<()> {
        match &self.mode {
            ReactorMode::Cstr { k_in, k_out, feed } => {
                check_rate(&format!("{key}.k_in"), *k_in)?;
                check_rate(&format!("{key}.k_out"), *k_out)?;
                for s in feed.keys() {
                    alphabet
                        .parse(s.as_str())
                        .map_err(|e| Error::config(format!("{key}.feed"), e.to_string()))?;
                }
            }
            ReactorMode::Protocell {
                l_perm,
                k_mem,
                external,
            } => {
                check_rate(&format!("{key}.k_mem"), *k_mem)?;
                for s in external.keys() {
                    alphabet
                        .parse(s.as_str())
                        .map_err(|e| Error::config(format!("{key}.external"), e.to_string()))?;
                    if s.len() > *l_perm {
                        return Err(Error::config(
                            format!("{key}.external"),
                            format!(
                                "species {s} (length {}) cannot cross a membrane with l_perm {l_perm}",
                                s.len()
                            ),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// Feed (CSTR) or external (protocell) levels.
    pub fn supply(&self) -> &BTreeMap<Species, u64> {
        match &self.mode {
            ReactorMode::Cstr { feed, .. } => feed,
            ReactorMode::Protocell { external, .. } => external,
        }
    }

    /// Species whose counts are clamped, with their levels.
    pub fn buffered(&self) -> impl Iterator<Item = (&Species, u64)> {
        self.supply()
            .iter()
            .filter(move |_| self.hybrid_buffered)
            .map(|(s, &n)| (s, n))
    }

    pub fn is_buffered(&self, s: &Species) -> bool {
        self.hybrid_buffered && self.supply().contains_key(s)
    }

    /// First-order outflow constant for an entity of `len` bricks, or `None`
    /// when it cannot leave.
    pub fn efflux_rate(&self, len: usize) -> Option<f64> {
        match &self.mode {
            ReactorMode::Cstr { k_out, .. } => Some(*k_out),
            ReactorMode::Protocell { l_perm, k_mem, .. } => (len <= *l_perm).then_some(*k_mem),
        }
    }

    /// Zeroth-order influx propensity for `s`, present only when influx is
    /// simulated stochastically.
    pub fn influx_propensity(&self, s: &Species) -> Option<f64> {
        if self.hybrid_buffered {
            return None;
        }
        match &self.mode {
            ReactorMode::Cstr { k_in, feed, .. } => feed.get(s).map(|&n| k_in * n as f64),
            ReactorMode::Protocell {
                k_mem, external, ..
            } => external.get(s).map(|&n| k_mem * n as f64),
        }
    }

    pub fn l_perm(&self) -> Option<usize> {
        match &self.mode {
            ReactorMode::Protocell { l_perm, .. } => Some(*l_perm),
            ReactorMode::Cstr { .. } => None,
        }
    }
}
