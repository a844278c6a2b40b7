//! Run directories: a JSON manifest plus one `.varm` file per (epoch, layer).
//!
//! ```text
//! <dir>/<run_id>/manifest.json
//! <dir>/<run_id>/epoch_<k>/<layer file stem>.varm
//! ```
//!
//! A baseline is stored as a reference `{run_id, epoch}` and resolved from
//! the sibling directory `<dir>/<baseline run_id>/` when the run is read.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, OpenOptions};
use std::path::{Component, Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::matrix::{read_matrix, write_matrix, DTYPE_F64_LE};
use crate::analysis::{Baseline, Epoch, WeightRun};
use crate::error::{validation, Error, Result};

pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST_NAME: &str = "manifest.json";
const LOCK_NAME: &str = ".lock";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerEntry {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub dtype: u32,
    /// Filesystem-safe stem used for this layer's files.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file_stem: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpochEntry {
    pub index: usize,
    /// Paths relative to the manifest, one per layer in `layers` order.
    pub files: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaselineEntry {
    pub run_id: String,
    pub epoch: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format_version: u32,
    pub run_id: String,
    pub layers: Vec<LayerEntry>,
    pub epochs: Vec<EpochEntry>,
    #[serde(default)]
    pub baseline: Option<BaselineEntry>,
    #[serde(default)]
    pub provenance: BTreeMap<String, String>,
}

fn portable(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '-')
}

/// Maps a layer name onto `[A-Za-z0-9_.-]`, never starting with a dot.
pub fn sanitize(name: &str) -> String {
    let mut s: String = name
        .chars()
        .map(|c| if portable(c) { c } else { '_' })
        .collect();
    if s.is_empty() {
        s.push_str("layer");
    }
    if s.starts_with('.') {
        s.replace_range(0..1, "_");
    }
    s
}

/// Unique file stems for the given layer names, in order.
pub fn file_stems<'a>(names: impl IntoIterator<Item = &'a str>) -> Vec<String> {
    let mut used = BTreeSet::new();
    names
        .into_iter()
        .map(|n| {
            let base = sanitize(n);
            let mut stem = base.clone();
            let mut k = 2;
            while !used.insert(stem.to_ascii_lowercase()) {
                stem = format!("{base}_{k}");
                k += 1;
            }
            stem
        })
        .collect()
}

fn check_run_id(run_id: &str) -> Result<()> {
    if run_id.is_empty() || !run_id.chars().all(portable) || run_id.starts_with('.') {
        return Err(validation(format!(
            "run id {run_id:?} must be non-empty, use only [A-Za-z0-9_.-], and not start with '.'"
        )));
    }
    Ok(())
}

pub fn run_dir(directory: &Path, run_id: &str) -> PathBuf {
    directory.join(run_id)
}

pub fn manifest_path(directory: &Path, run_id: &str) -> PathBuf {
    run_dir(directory, run_id).join(MANIFEST_NAME)
}

#[derive(Debug, Clone, Default)]
pub struct WriteOptions {
    pub force: bool,
    pub provenance: BTreeMap<String, String>,
}

struct LockGuard(PathBuf);

impl LockGuard {
    fn acquire(path: PathBuf) -> Result<Self> {
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(LockGuard(path)),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(Error::Conflict(path)),
            Err(e) => Err(Error::io(path, e)),
        }
    }
}

impl Drop for LockGuard {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

fn mkdir(p: &Path) -> Result<()> {
    fs::create_dir_all(p).map_err(|e| Error::io(p, e))
}

/// Writes `run` under `directory/<run_id>/`. Fails with a conflict if a
/// manifest already exists there unless `force` is set, in which case the
/// run directory is replaced.
pub fn write_run(run: &WeightRun, directory: &Path, opts: &WriteOptions) -> Result<RunManifest> {
    run.validate()?;
    check_run_id(&run.run_id)?;
    if let Some(b) = &run.baseline {
        check_run_id(&b.run_id)?;
    }
    let root = run_dir(directory, &run.run_id);
    let manifest_file = root.join(MANIFEST_NAME);
    if manifest_file.exists() && !opts.force {
        return Err(Error::Conflict(manifest_file));
    }
    mkdir(&root)?;
    let _lock = LockGuard::acquire(root.join(LOCK_NAME))?;
    if opts.force {
        let entries = fs::read_dir(&root).map_err(|e| Error::io(&root, e))?;
        for entry in entries {
            let entry = entry.map_err(|e| Error::io(&root, e))?;
            let path = entry.path();
            let name = entry.file_name();
            if name == LOCK_NAME {
                continue;
            }
            let res = if path.is_dir() {
                fs::remove_dir_all(&path)
            } else {
                fs::remove_file(&path)
            };
            res.map_err(|e| Error::io(&path, e))?;
        }
    }

    let first = &run.epochs[0];
    let stems = file_stems(first.layers.iter().map(|m| m.layer_name()));
    let layers: Vec<LayerEntry> = first
        .layers
        .iter()
        .zip(&stems)
        .map(|(m, stem)| LayerEntry {
            name: m.layer_name().to_owned(),
            rows: m.rows(),
            cols: m.cols(),
            dtype: DTYPE_F64_LE,
            file_stem: (stem != m.layer_name()).then(|| stem.clone()),
        })
        .collect();

    let mut epochs = Vec::with_capacity(run.epochs.len());
    for e in &run.epochs {
        let sub = format!("epoch_{}", e.index);
        mkdir(&root.join(&sub))?;
        let mut files = Vec::with_capacity(e.layers.len());
        for (m, stem) in e.layers.iter().zip(&stems) {
            let rel = format!("{sub}/{stem}.varm");
            write_matrix(&root.join(&rel), m)?;
            files.push(rel);
        }
        epochs.push(EpochEntry {
            index: e.index,
            files,
        });
    }

    let manifest = RunManifest {
        format_version: FORMAT_VERSION,
        run_id: run.run_id.clone(),
        layers,
        epochs,
        baseline: run.baseline.as_ref().map(|b| BaselineEntry {
            run_id: b.run_id.clone(),
            epoch: b.epoch,
        }),
        provenance: opts.provenance.clone(),
    };
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    let tmp = root.join(format!("{MANIFEST_NAME}.tmp"));
    fs::write(&tmp, text).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, &manifest_file).map_err(|e| Error::io(&manifest_file, e))?;
    Ok(manifest)
}

/// Parses and checks a manifest without touching the matrix files.
pub fn read_manifest(path: &Path) -> Result<RunManifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.into(),
        source,
    })?;
    match value
        .get("format_version")
        .and_then(serde_json::Value::as_u64)
    {
        Some(v) if v == u64::from(FORMAT_VERSION) => {}
        Some(v) => {
            return Err(Error::Version {
                path: path.into(),
                detail: format!("manifest format_version {v}"),
            })
        }
        None => {
            return Err(Error::corrupt(
                path,
                "manifest has no integer format_version",
            ))
        }
    }
    let manifest: RunManifest = serde_json::from_value(value).map_err(|source| Error::Json {
        path: path.into(),
        source,
    })?;
    for layer in &manifest.layers {
        if layer.dtype != DTYPE_F64_LE {
            return Err(Error::Version {
                path: path.into(),
                detail: format!(
                    "layer {:?} has unknown dtype tag {}",
                    layer.name, layer.dtype
                ),
            });
        }
    }
    if manifest.epochs.is_empty() || manifest.layers.is_empty() {
        return Err(Error::corrupt(
            path,
            "manifest lists no epochs or no layers",
        ));
    }
    for e in &manifest.epochs {
        if e.files.len() != manifest.layers.len() {
            return Err(Error::corrupt(
                path,
                format!(
                    "epoch {} lists {} files for {} layers",
                    e.index,
                    e.files.len(),
                    manifest.layers.len()
                ),
            ));
        }
        for f in &e.files {
            let ok = Path::new(f)
                .components()
                .all(|c| matches!(c, Component::Normal(_)));
            if !ok {
                return Err(Error::corrupt(
                    path,
                    format!("file path {f:?} escapes the run directory"),
                ));
            }
        }
    }
    Ok(manifest)
}

fn load_epoch(root: &Path, manifest: &RunManifest, entry: &EpochEntry) -> Result<Epoch> {
    let layers = manifest
        .layers
        .iter()
        .zip(&entry.files)
        .map(|(l, f)| read_matrix(&root.join(f), &l.name, Some((l.rows, l.cols))))
        .collect::<Result<Vec<_>>>()?;
    Ok(Epoch {
        index: entry.index,
        layers,
    })
}

fn manifest_root(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

/// Reads a run, validating every matrix header against the manifest and
/// resolving the baseline reference from the sibling run directory.
pub fn read_run(path: &Path) -> Result<WeightRun> {
    let manifest = read_manifest(path)?;
    let root = manifest_root(path);
    let epochs = manifest
        .epochs
        .iter()
        .map(|e| load_epoch(&root, &manifest, e))
        .collect::<Result<Vec<_>>>()?;

    let baseline = match &manifest.baseline {
        None => None,
        Some(b) => {
            check_run_id(&b.run_id).map_err(|e| Error::corrupt(path, e.to_string()))?;
            let base_path = if b.run_id == manifest.run_id {
                path.to_path_buf()
            } else {
                root.parent()
                    .map(|p| manifest_path(p, &b.run_id))
                    .unwrap_or_else(|| manifest_path(Path::new(".."), &b.run_id))
            };
            if !base_path.exists() {
                return Err(Error::corrupt(
                    path,
                    format!("baseline run manifest {} not found", base_path.display()),
                ));
            }
            let base = read_manifest(&base_path)?;
            let entry = base
                .epochs
                .iter()
                .find(|e| e.index == b.epoch)
                .ok_or_else(|| {
                    Error::corrupt(
                        path,
                        format!("baseline run {:?} has no epoch {}", b.run_id, b.epoch),
                    )
                })?;
            let epoch = load_epoch(&manifest_root(&base_path), &base, entry)?;
            Some(Baseline {
                run_id: b.run_id.clone(),
                epoch: b.epoch,
                layers: epoch.layers,
            })
        }
    };

    let run = WeightRun {
        run_id: manifest.run_id.clone(),
        epochs,
        baseline,
    };
    run.validate()
        .map_err(|e| Error::corrupt(path, e.to_string()))?;
    Ok(run)
}
