//! Snapshot persistence.
//!
//! A snapshot captures the parsed state of a whole source tree so the
//! original program can be recorded once and diffed later against modified
//! trees. The on-disk form is canonical JSON: keys sorted lexicographically,
//! arrays in source order, so identical snapshots serialize to identical
//! bytes. The `created` timestamp is informational only; it sits on its own
//! line and comparisons skip it.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frontend::{content_hash, PackageModel, HASH_ALGORITHM};

pub const FORMAT_VERSION: u32 = 1;

/// Parsed state of one source tree, keyed by canonical package name.
///
/// Fields are declared in canonical (sorted) key order; equality ignores
/// `created`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Snapshot {
    pub created: String,
    pub format_version: u32,
    pub hash_algorithm: String,
    pub packages: BTreeMap<String, PackageModel>,
}

impl PartialEq for Snapshot {
    fn eq(&self, other: &Self) -> bool {
        self.format_version == other.format_version
            && self.hash_algorithm == other.hash_algorithm
            && self.packages == other.packages
    }
}

impl Eq for Snapshot {}

impl Snapshot {
    pub fn new(packages: BTreeMap<String, PackageModel>) -> Self {
        Snapshot {
            created: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            format_version: FORMAT_VERSION,
            hash_algorithm: HASH_ALGORITHM.to_string(),
            packages,
        }
    }

    /// Canonical serialized form, one trailing newline.
    pub fn to_canonical_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("snapshot serializes");
        s.push('\n');
        s
    }

    /// Content identifier: hash of the canonical bytes minus the timestamp
    /// line, truncated to 16 hex digits.
    pub fn content_id(&self) -> String {
        let canon = strip_created_line(&self.to_canonical_string());
        content_hash(&canon)[..16].to_string()
    }
}

/// Drop the `"created"` header line so byte comparisons ignore timestamps.
pub fn strip_created_line(serialized: &str) -> String {
    serialized
        .lines()
        .filter(|line| !line.trim_start().starts_with("\"created\""))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Write the canonical form. The file appears atomically: content goes to a
/// sibling temp file first, then renames over the target.
pub fn save(snapshot: &Snapshot, path: &Path) -> Result<()> {
    let data = snapshot.to_canonical_string();
    let tmp: PathBuf = {
        let mut os = path.as_os_str().to_owned();
        os.push(".tmp");
        PathBuf::from(os)
    };
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    std::fs::write(&tmp, data.as_bytes()).map_err(io_err)?;
    if let Err(e) = std::fs::rename(&tmp, path) {
        let _ = std::fs::remove_file(&tmp);
        return Err(io_err(e));
    }
    Ok(())
}

pub fn load(path: &Path) -> Result<Snapshot> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    load_str(&text, path)
}

fn load_str(text: &str, path: &Path) -> Result<Snapshot> {
    // Read the version first so an unknown version is reported as such even
    // when the rest of the layout has since changed.
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::SnapshotFormat {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
    match value.get("format_version") {
        Some(v) => {
            let found = v.as_u64().ok_or_else(|| Error::SnapshotFormat {
                path: path.to_path_buf(),
                message: "format_version: expected an integer".to_string(),
            })?;
            if found != u64::from(FORMAT_VERSION) {
                return Err(Error::VersionMismatch {
                    found,
                    expected: FORMAT_VERSION,
                });
            }
        }
        None => {
            return Err(Error::SnapshotFormat {
                path: path.to_path_buf(),
                message: "missing field `format_version`".to_string(),
            })
        }
    }
    let snapshot: Snapshot = serde_json::from_value(value).map_err(|e| Error::SnapshotFormat {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    if snapshot.hash_algorithm != HASH_ALGORITHM {
        return Err(Error::UnsupportedHashAlgorithm {
            found: snapshot.hash_algorithm,
            expected: HASH_ALGORITHM,
        });
    }
    for (key, pkg) in &snapshot.packages {
        if *key != pkg.name {
            return Err(Error::SnapshotFormat {
                path: path.to_path_buf(),
                message: format!("packages: key `{key}` does not match name `{}`", pkg.name),
            });
        }
    }
    Ok(snapshot)
}
