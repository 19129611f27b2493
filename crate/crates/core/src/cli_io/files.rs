//! File formats: chemistry JSON, trajectory CSVs, atomic writes.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::chemistry::{Chemistry, ChemistryParams, ReactionTemplate, Species};
use crate::engine::{Entity, Trajectory};
use crate::error::{Error, Result};

pub const CHEMISTRY_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CatalysisKind {
    Condensation,
    Cleavage,
}

/// One stored catalysis. `fields` are (first, second, product) for a
/// condensation and (substrate, left, right) for a cleavage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalysisEntry {
    pub kind: CatalysisKind,
    pub fields: [Species; 3],
    pub catalyst: Species,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChemistryFile {
    pub format_version: u32,
    pub params: ChemistryParams,
    /// Registered species, sorted.
    pub species: Vec<Species>,
    /// Sorted by canonical encoding.
    pub catalyses: Vec<CatalysisEntry>,
}

impl ChemistryFile {
    pub fn from_chemistry(chem: &Chemistry) -> Self {
        let catalyses = chem
            .sorted_catalyses()
            .into_iter()
            .map(|(template, catalyst)| {
                let (kind, fields) = match template {
                    ReactionTemplate::Condensation {
                        first,
                        second,
                        product,
                    } => (CatalysisKind::Condensation, [first, second, product]),
                    ReactionTemplate::Cleavage {
                        substrate,
                        left,
                        right,
                        ..
                    } => (CatalysisKind::Cleavage, [substrate, left, right]),
                };
                CatalysisEntry {
                    kind,
                    fields,
                    catalyst,
                }
            })
            .collect();
        ChemistryFile {
            format_version: CHEMISTRY_FORMAT_VERSION,
            params: chem.params().clone(),
            species: chem.sorted_registry(),
            catalyses,
        }
    }

    pub fn into_chemistry(self) -> Result<Chemistry> {
        if self.format_version != CHEMISTRY_FORMAT_VERSION {
            return Err(Error::ChemistryFormat(format!(
                "format_version {} is not supported (expected {CHEMISTRY_FORMAT_VERSION})",
                self.format_version
            )));
        }
        self.params.validate()?;
        let mut parts = Vec::with_capacity(self.catalyses.len());
        for (pos, entry) in self.catalyses.into_iter().enumerate() {
            let [a, b, c] = entry.fields;
            let template = match entry.kind {
                CatalysisKind::Condensation => ReactionTemplate::Condensation {
                    first: a,
                    second: b,
                    product: c,
                },
                CatalysisKind::Cleavage => {
                    if b.is_empty() || c.is_empty() || a.len() != b.len() + c.len() {
                        return Err(Error::ChemistryFormat(format!(
                            "catalyses[{pos}]: {a} cannot split into {b} + {c}"
                        )));
                    }
                    ReactionTemplate::Cleavage {
                        cut: b.len(),
                        substrate: a,
                        left: b,
                        right: c,
                    }
                }
            };
            parts.push((template, entry.catalyst));
        }
        Chemistry::from_parts(self.params, &self.species, &parts)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("chemistry serializes");
        s.push('\n');
        s
    }
}

pub fn chemistry_to_json(chem: &Chemistry) -> String {
    ChemistryFile::from_chemistry(chem).to_json()
}

pub fn chemistry_from_json(text: &str, origin: &Path) -> Result<Chemistry> {
    let file: ChemistryFile = serde_json::from_str(text).map_err(|source| Error::Json {
        path: origin.to_path_buf(),
        source,
    })?;
    file.into_chemistry()
}

pub fn save_chemistry(chem: &Chemistry, path: &Path) -> Result<()> {
    write_atomic(path, chemistry_to_json(chem).as_bytes())
}

pub fn load_chemistry(path: &Path) -> Result<Chemistry> {
    chemistry_from_json(&read_file(path)?, path)
}

pub(crate) fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn partial_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".partial");
    PathBuf::from(name)
}

/// Writes `<path>.partial`, then renames it over `path`. On failure the
/// target is untouched and at most the `.partial` file remains.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io)?;
    }
    let tmp = partial_path(path);
    fs::write(&tmp, bytes).map_err(io)?;
    fs::rename(&tmp, path).map_err(io)
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<Vec<u8>> {
    w.into_inner()
        .map_err(|e| Error::Csv(e.into_error().into()))
}

/// `t,total_mass,richness,max_len`, one row per observation.
pub fn trajectory_csv(tr: &Trajectory) -> Result<Vec<u8>> {
    let mut w = csv_writer();
    w.write_record(["t", "total_mass", "richness", "max_len"])?;
    for o in &tr.observations {
        w.write_record([
            o.t.to_string(),
            o.total_mass.to_string(),
            o.richness.to_string(),
            o.max_len.to_string(),
        ])?;
    }
    finish(w)
}

/// Wide table: `t` plus one column per species ever observed, zero-filled.
/// Empty unless the run recorded counts.
pub fn species_csv(tr: &Trajectory) -> Result<Vec<u8>> {
    let mut columns: BTreeSet<&Species> = BTreeSet::new();
    for o in &tr.observations {
        for e in o.counts.iter().flat_map(|c| c.keys()) {
            if let Entity::Species(s) = e {
                columns.insert(s);
            }
        }
    }
    let mut w = csv_writer();
    let mut header = vec!["t".to_string()];
    header.extend(columns.iter().map(|s| s.to_string()));
    w.write_record(&header)?;
    for o in &tr.observations {
        let mut row = vec![o.t.to_string()];
        for s in &columns {
            let n = o
                .counts
                .as_ref()
                .and_then(|c| c.get(&Entity::Species((*s).clone())))
                .copied()
                .unwrap_or(0);
            row.push(n.to_string());
        }
        w.write_record(&row)?;
    }
    finish(w)
}

pub fn write_trajectory_csv(tr: &Trajectory, path: &Path) -> Result<()> {
    write_atomic(path, &trajectory_csv(tr)?)
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

/// Event ledger as JSON lines.
pub fn write_event_ledger(tr: &Trajectory, path: &Path) -> Result<()> {
    let mut out = String::new();
    for ev in tr.events.iter().flatten() {
        out.push_str(&serde_json::to_string(ev).expect("event serializes"));
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}
