//! Independent brute-force checks.
//!
//! The worklist in `select` is validated against a dense-matrix
//! reflexive-transitive closure, and whole selection runs are audited by a
//! retest-all-style safety comparator. The oracle ships in the library (not
//! only in tests) and backs the CLI's `--verify` flag, so any run can be
//! self-checked. It is deliberately naive; scale is bounded by precondition.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use crate::diff::ChangeSet;
use crate::graph::{CoverageMap, Entity, ImpactRelation};
use crate::select::{entity, SelectionResult};

const MAX_ORACLE_ENTITIES: usize = 10_000;

/// Dense reflexive-transitive closure of the one-step impact matrix,
/// computed by the triple loop of Warshall's algorithm — no worklist.
#[derive(Debug, Clone)]
pub struct DenseClosure {
    pub entities: Vec<Entity>,
    pub matrix: Vec<Vec<bool>>,
    pub closure: Vec<Vec<bool>>,
}

pub fn brute_closure(impact: &ImpactRelation) -> DenseClosure {
    let entities: Vec<Entity> = impact.entities().cloned().collect();
    let n = entities.len();
    assert!(
        n <= MAX_ORACLE_ENTITIES,
        "oracle scale exceeded: {n} entities"
    );
    let index: BTreeMap<&Entity, usize> = entities.iter().zip(0..).collect();

    let mut matrix = vec![vec![false; n]; n];
    for (e, succs) in &impact.impact {
        let i = index[e];
        for s in succs {
            matrix[i][index[s]] = true;
        }
    }

    let mut closure = matrix.clone();
    for (i, row) in closure.iter_mut().enumerate() {
        row[i] = true;
    }
    for k in 0..n {
        let via = closure[k].clone();
        for row in closure.iter_mut() {
            if row[k] {
                for (dst, &src) in row.iter_mut().zip(&via) {
                    *dst = *dst || src;
                }
            }
        }
    }

    DenseClosure {
        entities,
        matrix,
        closure,
    }
}

impl DenseClosure {
    fn index_of(&self, entity: &Entity) -> Option<usize> {
        self.entities.iter().position(|e| e == entity)
    }

    /// Entities reachable from `from` (reflexively).
    pub fn reachable(&self, from: &Entity) -> BTreeSet<Entity> {
        let Some(i) = self.index_of(from) else {
            return BTreeSet::new();
        };
        self.closure[i]
            .iter()
            .zip(&self.entities)
            .filter(|(reached, _)| **reached)
            .map(|(_, e)| e.clone())
            .collect()
    }

    /// Subprograms reachable from `from`, the dense counterpart of the
    /// worklist's affected-subprogram set.
    pub fn affected_subprograms(&self, from: &Entity) -> BTreeSet<String> {
        self.reachable(from)
            .into_iter()
            .filter_map(|e| match e {
                Entity::Subprogram(name) => Some(name),
                _ => None,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// A baseline test was not selected although its coverage intersects the
    /// oracle-computed affected set (or it has no coverage at all while the
    /// change-set is non-empty).
    MissedTest { test: String, reason: String },
    /// A selected test has no attribution: no per-change entry selects it and
    /// no conservative rule applies.
    UnattributedTest { test: String },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::MissedTest { test, reason } => {
                write!(f, "missed test `{test}`: {reason}")
            }
            Violation::UnattributedTest { test } => {
                write!(f, "selected test `{test}` has no attribution")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Verdict {
    pub violations: Vec<Violation>,
}

impl Verdict {
    pub fn is_safe(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn missed_tests(&self) -> usize {
        self.violations
            .iter()
            .filter(|v| matches!(v, Violation::MissedTest { .. }))
            .count()
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.violations.is_empty() {
            writeln!(f, "verify: ok ({} violations)", self.violations.len())
        } else {
            writeln!(f, "verify: FAILED ({} violations)", self.violations.len())?;
            for v in &self.violations {
                writeln!(f, "  {v}")?;
            }
            Ok(())
        }
    }
}

/// Recompute the affected set with the dense closure and audit a selection
/// result against it. A verdict with violations is a normal return, not an
/// error.
pub fn check_safety(
    selection: &SelectionResult,
    changes: &ChangeSet,
    impact: &ImpactRelation,
    coverage: &CoverageMap,
) -> Verdict {
    let dense = brute_closure(impact);
    let mut affected: BTreeSet<String> = BTreeSet::new();
    for change in &changes.changes {
        affected.extend(dense.affected_subprograms(&entity(change)));
    }

    let selected: BTreeSet<&String> = selection.selected_tests.iter().collect();
    let any_change = !changes.changes.is_empty();
    let mut violations = Vec::new();

    for test in &coverage.baseline {
        let covers = coverage.covers_of(test);
        let is_selected = selected.contains(test);
        if !is_selected {
            if let Some(subs) = covers {
                let overlap: Vec<&String> = subs.intersection(&affected).collect();
                if !overlap.is_empty() {
                    violations.push(Violation::MissedTest {
                        test: test.clone(),
                        reason: format!(
                            "covers affected subprogram(s) {}",
                            overlap
                                .iter()
                                .map(|s| s.as_str())
                                .collect::<Vec<_>>()
                                .join(", ")
                        ),
                    });
                    continue;
                }
                if subs.is_empty() && any_change {
                    violations.push(Violation::MissedTest {
                        test: test.clone(),
                        reason: "has no coverage data; conservative rule requires selection"
                            .to_string(),
                    });
                }
            }
        } else {
            let attributed = selection
                .per_change
                .values()
                .any(|tests| tests.iter().any(|t| t == test));
            let empty_rule = any_change && covers.is_none_or(|s| s.is_empty());
            if !attributed && !empty_rule {
                violations.push(Violation::UnattributedTest { test: test.clone() });
            }
        }
    }

    Verdict { violations }
}
