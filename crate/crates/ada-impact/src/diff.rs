//! Change-set construction: classify the differences between two snapshots
//! at the spec, body and subprogram levels. One edit may yield several
//! change records; the classifications are independent.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::snapshot::Snapshot;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ChangeKind {
    SpecChanged,
    BodyChanged,
    SubprogramChanged,
    SubprogramAdded,
    SubprogramRemoved,
    PackageAdded,
    PackageRemoved,
}

impl ChangeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ChangeKind::SpecChanged => "SpecChanged",
            ChangeKind::BodyChanged => "BodyChanged",
            ChangeKind::SubprogramChanged => "SubprogramChanged",
            ChangeKind::SubprogramAdded => "SubprogramAdded",
            ChangeKind::SubprogramRemoved => "SubprogramRemoved",
            ChangeKind::PackageAdded => "PackageAdded",
            ChangeKind::PackageRemoved => "PackageRemoved",
        }
    }
}

/// One classified difference. Package-level kinds carry package names;
/// subprogram-level kinds carry qualified subprogram names.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Change {
    pub kind: ChangeKind,
    pub target: String,
}

impl std::fmt::Display for Change {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}({})", self.kind.as_str(), self.target)
    }
}

/// All differences between two snapshots, deterministically ordered by kind
/// rank then target name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChangeSet {
    pub base_id: String,
    pub new_id: String,
    pub changes: Vec<Change>,
}

impl ChangeSet {
    pub fn is_empty(&self) -> bool {
        self.changes.is_empty()
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("changeset serializes");
        s.push('\n');
        s
    }
}

/// Compare two snapshots of the same tree.
pub fn diff(old: &Snapshot, new: &Snapshot) -> Result<ChangeSet> {
    if old.hash_algorithm != new.hash_algorithm {
        return Err(Error::HashAlgorithmMismatch {
            base: old.hash_algorithm.clone(),
            new: new.hash_algorithm.clone(),
        });
    }

    let mut changes: BTreeSet<Change> = BTreeSet::new();
    let mut push = |kind: ChangeKind, target: &str| {
        changes.insert(Change {
            kind,
            target: target.to_string(),
        });
    };

    for (name, old_pkg) in &old.packages {
        let Some(new_pkg) = new.packages.get(name) else {
            push(ChangeKind::PackageRemoved, name);
            continue;
        };
        if old_pkg.spec_residue_hash != new_pkg.spec_residue_hash
            || old_pkg.spec_withs != new_pkg.spec_withs
        {
            push(ChangeKind::SpecChanged, name);
        }
        if old_pkg.body_residue_hash != new_pkg.body_residue_hash
            || old_pkg.body_withs != new_pkg.body_withs
        {
            push(ChangeKind::BodyChanged, name);
        }
        let old_subs: std::collections::BTreeMap<&str, &str> = old_pkg
            .subprograms
            .iter()
            .map(|s| (s.qualified_name.as_str(), s.normalized_hash.as_str()))
            .collect();
        let new_subs: std::collections::BTreeMap<&str, &str> = new_pkg
            .subprograms
            .iter()
            .map(|s| (s.qualified_name.as_str(), s.normalized_hash.as_str()))
            .collect();
        for (sub, old_hash) in &old_subs {
            match new_subs.get(sub) {
                Some(new_hash) if new_hash != old_hash => {
                    push(ChangeKind::SubprogramChanged, sub);
                }
                Some(_) => {}
                None => {
                    push(ChangeKind::SubprogramRemoved, sub);
                    push(ChangeKind::BodyChanged, name);
                }
            }
        }
        for sub in new_subs.keys() {
            if !old_subs.contains_key(sub) {
                push(ChangeKind::SubprogramAdded, sub);
                push(ChangeKind::BodyChanged, name);
            }
        }
    }
    for name in new.packages.keys() {
        if !old.packages.contains_key(name) {
            push(ChangeKind::PackageAdded, name);
        }
    }

    Ok(ChangeSet {
        base_id: old.content_id(),
        new_id: new.content_id(),
        changes: changes.into_iter().collect(),
    })
}
