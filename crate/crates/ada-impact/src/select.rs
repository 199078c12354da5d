//! Test selection.
//!
//! `affected_subprograms` is a worklist walk computing the reflexive
//! transitive closure of the impact relation from a changed entity and
//! collecting every subprogram it reaches. `affected_tests` aggregates those
//! closures over a whole change-set and selects each test whose coverage
//! intersects the union, in baseline order.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use serde::Serialize;

use crate::diff::{Change, ChangeKind, ChangeSet};
use crate::graph::{CoverageMap, Entity, ImpactRelation};

/// Map a classified change onto the entity the closure starts from.
/// Removed entities only exist in the old graph and added ones only in the
/// new graph, so callers hand this walk the union of both.
pub fn entity(change: &Change) -> Entity {
    match change.kind {
        ChangeKind::SpecChanged | ChangeKind::PackageAdded | ChangeKind::PackageRemoved => {
            Entity::Spec(change.target.clone())
        }
        ChangeKind::BodyChanged => Entity::Body(change.target.clone()),
        ChangeKind::SubprogramChanged
        | ChangeKind::SubprogramAdded
        | ChangeKind::SubprogramRemoved => Entity::Subprogram(change.target.clone()),
    }
}

/// Worklist transitive closure from `change`, returning every subprogram in
/// the reflexive-transitive impact closure. Each entity is processed once;
/// the found-set guarantees termination. An entity unknown to the relation
/// yields the empty set (the caller reports a warning).
pub fn affected_subprograms(change: &Entity, impact: &ImpactRelation) -> BTreeSet<String> {
    let mut impacted: BTreeSet<String> = BTreeSet::new();
    if !impact.contains_entity(change) {
        return impacted;
    }
    let mut found: BTreeSet<Entity> = BTreeSet::new();
    let mut work: Vec<Entity> = vec![change.clone()];
    while let Some(next) = work.pop() {
        if !found.insert(next.clone()) {
            continue;
        }
        if let Entity::Subprogram(name) = &next {
            impacted.insert(name.clone());
        }
        if let Some(successors) = impact.successors(&next) {
            for s in successors {
                if !found.contains(s) {
                    work.push(s.clone());
                }
            }
        }
    }
    impacted
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionStats {
    pub baseline_size: usize,
    pub selected_size: usize,
    /// 1 - selected/baseline; 1.0 for an empty baseline.
    pub reduction_ratio: f64,
    /// Tests force-selected because they have no recorded coverage at all.
    pub empty_coverage_selected: usize,
}

/// Result of selecting tests for a change-set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionResult {
    pub affected_subprograms: BTreeSet<String>,
    /// Subset of the baseline, in baseline order.
    pub selected_tests: Vec<String>,
    pub stats: SelectionStats,
    /// Which tests each individual change selects, keyed by the change's
    /// display form.
    pub per_change: BTreeMap<String, Vec<String>>,
    #[serde(skip)]
    pub warnings: Vec<String>,
}

impl SelectionResult {
    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("selection serializes");
        s.push('\n');
        s
    }
}

/// Aggregate selection over a change-set: compute the affected-subprogram
/// closure per change, take the union, and select every baseline test whose
/// coverage intersects it. Tests with no coverage at all tell us nothing, so
/// any change selects them; they are counted separately in the stats.
pub fn affected_tests(
    changes: &ChangeSet,
    impact: &ImpactRelation,
    coverage: &CoverageMap,
) -> SelectionResult {
    let mut warnings = Vec::new();
    let mut total_affected: BTreeSet<String> = BTreeSet::new();
    let mut per_change: BTreeMap<String, Vec<String>> = BTreeMap::new();

    for change in &changes.changes {
        let start = entity(change);
        if !impact.contains_entity(&start) {
            warnings.push(format!("unknown entity for change {change}: {start}"));
        }
        let affected = affected_subprograms(&start, impact);
        let selected_here: Vec<String> = coverage
            .baseline
            .iter()
            .filter(|t| {
                coverage
                    .covers_of(t)
                    .is_some_and(|subs| !subs.is_disjoint(&affected))
            })
            .cloned()
            .collect();
        per_change.insert(change.to_string(), selected_here);
        total_affected.extend(affected);
    }

    let any_change = !changes.changes.is_empty();
    let mut empty_coverage_selected = 0usize;
    let selected_tests: Vec<String> = coverage
        .baseline
        .iter()
        .filter(|t| {
            let covers = coverage.covers_of(t);
            let empty = covers.is_none_or(|s| s.is_empty());
            if empty && any_change {
                empty_coverage_selected += 1;
                return true;
            }
            covers.is_some_and(|subs| !subs.is_disjoint(&total_affected))
        })
        .cloned()
        .collect();

    let baseline_size = coverage.baseline.len();
    let selected_size = selected_tests.len();
    let reduction_ratio = if baseline_size > 0 {
        1.0 - selected_size as f64 / baseline_size as f64
    } else {
        1.0
    };

    SelectionResult {
        affected_subprograms: total_affected,
        selected_tests,
        stats: SelectionStats {
            baseline_size,
            selected_size,
            reduction_ratio,
            empty_coverage_selected,
        },
        per_change,
        warnings,
    }
}
