//! On-disk project description: `manifest.json` naming the source files of a
//! sketch, plus optional tests and reference completion.
//!
//! ```json
//! { "name": "emojipaint",
//!   "files": ["types.sl", "helpers.sl", "sketch.sl"],
//!   "tests": "tests.sl",
//!   "reference": "reference.sl" }
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("malformed manifest {path}: {detail}")]
    Malformed { path: PathBuf, detail: String },
    #[error("missing file {0}")]
    MissingFile(PathBuf),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestJson {
    name: Option<String>,
    files: Vec<String>,
    tests: Option<String>,
    reference: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub name: String,
    pub dir: PathBuf,
    /// (file name as listed, contents), in manifest order.
    pub sources: Vec<(String, String)>,
    pub tests: Option<(String, String)>,
    pub reference: Option<String>,
}

fn read(dir: &Path, rel: &str) -> Result<String, ManifestError> {
    let p = dir.join(rel);
    std::fs::read_to_string(&p).map_err(|_| ManifestError::MissingFile(p))
}

/// Loads a `manifest.json`, or a directory containing one. A path ending in
/// `.sl` is treated as a single-file manifest.
pub fn load_manifest(path: &Path) -> Result<Manifest, ManifestError> {
    let path = if path.is_dir() { path.join("manifest.json") } else { path.to_path_buf() };
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    if path.extension().is_some_and(|e| e == "sl") {
        let name = path.file_name().unwrap_or_default().to_string_lossy().into_owned();
        let text = std::fs::read_to_string(&path).map_err(|_| ManifestError::MissingFile(path.clone()))?;
        return Ok(Manifest {
            name: name.clone(),
            dir,
            sources: vec![(name, text)],
            tests: None,
            reference: None,
        });
    }
    let text = std::fs::read_to_string(&path).map_err(|_| ManifestError::MissingFile(path.clone()))?;
    let json: ManifestJson = serde_json::from_str(&text).map_err(|e| ManifestError::Malformed {
        path: path.clone(),
        detail: e.to_string(),
    })?;
    if json.files.is_empty() {
        return Err(ManifestError::Malformed {
            path,
            detail: "no source files listed".into(),
        });
    }
    let sources = json
        .files
        .iter()
        .map(|f| Ok((f.clone(), read(&dir, f)?)))
        .collect::<Result<Vec<_>, ManifestError>>()?;
    let tests = match &json.tests {
        Some(t) => Some((t.clone(), read(&dir, t)?)),
        None => None,
    };
    let reference = match &json.reference {
        Some(r) => Some(read(&dir, r)?),
        None => None,
    };
    let name = json.name.unwrap_or_else(|| {
        dir.file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "project".into())
    });
    Ok(Manifest {
        name,
        dir,
        sources,
        tests,
        reference,
    })
}
