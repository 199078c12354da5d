//! Experiment replay: for every subprogram in a tree, synthesize the
//! canonical `null;`-insertion edit at the start of its body, run the whole
//! pipeline on the edited copy, and tabulate how many tests each change
//! selects against the retest-all baseline. Edits happen on in-memory copies
//! only; the tree on disk is never touched.

use std::collections::BTreeSet;
use std::path::Path;

use serde::Serialize;

use crate::diff::diff;
use crate::error::Result;
use crate::frontend::{
    assemble_snapshot, body_begin_offset, parse_source, parse_units, ParsedUnit, UnitKind,
};
use crate::graph::{build_static, impact_relation, CoverageMap};
use crate::oracle::check_safety;
use crate::select::affected_tests;

#[derive(Debug, Clone, Serialize)]
pub struct ReplayRow {
    pub subprogram: String,
    pub package: String,
    pub tests_selected: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReplayReport {
    /// One row per replayed subprogram, ordered by qualified name.
    pub rows: Vec<ReplayRow>,
    pub baseline_size: usize,
    pub units_changed: usize,
    pub subprograms_changed: usize,
    /// Total selected test executions across all changes.
    pub tests_with_cbt: usize,
    /// Retest-all total: baseline size times number of changes.
    pub tests_without_cbt: usize,
    pub reduction_ratio: f64,
    /// Safety violations found when verification was requested.
    #[serde(skip)]
    pub violations: Vec<String>,
    #[serde(skip)]
    pub warnings: Vec<String>,
}

impl ReplayReport {
    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_text_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "replay: {} subprograms across {} packages, baseline {} tests\n\n",
            self.subprograms_changed, self.units_changed, self.baseline_size
        ));
        let width = self
            .rows
            .iter()
            .map(|r| r.subprogram.len())
            .chain(["subprogram".len()])
            .max()
            .unwrap_or(10);
        out.push_str(&format!("{:<width$}  tests\n", "subprogram"));
        for row in &self.rows {
            out.push_str(&format!(
                "{:<width$}  {:>5}\n",
                row.subprogram, row.tests_selected
            ));
        }
        out.push('\n');
        out.push_str("mode         units changed  subprograms changed  tests executed\n");
        out.push_str(&format!(
            "without-cbt  {:>13}  {:>19}  {:>14}\n",
            self.units_changed, self.subprograms_changed, self.tests_without_cbt
        ));
        out.push_str(&format!(
            "with-cbt     {:>13}  {:>19}  {:>14}\n",
            self.units_changed, self.subprograms_changed, self.tests_with_cbt
        ));
        out.push_str(&format!("\nreduction ratio: {:.4}\n", self.reduction_ratio));
        out
    }
}

/// Run the replay over every subprogram under `root`, each change processed
/// separately. With `verify`, every per-change selection is audited by the
/// brute-force oracle.
pub fn replay(root: &Path, coverage: &CoverageMap, verify: bool) -> Result<ReplayReport> {
    let units = parse_units(root)?;
    let old_snapshot = assemble_snapshot(&units)?;
    let old_static = build_static(&old_snapshot);

    // Qualified subprogram name -> (package, span, body unit index).
    let mut targets: Vec<(String, String, (usize, usize), usize)> = Vec::new();
    for (pkg_name, pkg) in &old_snapshot.packages {
        let Some(unit_idx) = units.iter().position(|u| {
            u.contribution.kind == UnitKind::Body && u.contribution.package_name == *pkg_name
        }) else {
            continue;
        };
        for sub in &pkg.subprograms {
            targets.push((
                sub.qualified_name.clone(),
                pkg_name.clone(),
                sub.body_span,
                unit_idx,
            ));
        }
    }
    targets.sort();

    let mut rows = Vec::new();
    let mut violations = Vec::new();
    let mut warnings = Vec::new();
    let mut packages_touched: BTreeSet<&str> = BTreeSet::new();

    for (qualified, pkg_name, span, unit_idx) in &targets {
        let unit = &units[*unit_idx];
        let Some(insert_at) = body_begin_offset(&unit.unit.text, *span) else {
            warnings.push(format!("{qualified}: could not locate body begin; skipped"));
            continue;
        };
        let mut edited = String::with_capacity(unit.unit.text.len() + 6);
        edited.push_str(&unit.unit.text[..insert_at]);
        edited.push_str(" null;");
        edited.push_str(&unit.unit.text[insert_at..]);

        let edited_unit = parse_source(unit.unit.path.clone(), edited)?;
        let mut new_units: Vec<ParsedUnit> = units.clone();
        new_units[*unit_idx] = edited_unit;
        let new_snapshot = assemble_snapshot(&new_units)?;

        let changes = diff(&old_snapshot, &new_snapshot)?;
        let union = old_static.union(&build_static(&new_snapshot));
        let impact = impact_relation(&union)?;
        let selection = affected_tests(&changes, &impact, coverage);
        if verify {
            let verdict = check_safety(&selection, &changes, &impact, coverage);
            for v in &verdict.violations {
                violations.push(format!("{qualified}: {v}"));
            }
        }
        packages_touched.insert(pkg_name);
        rows.push(ReplayRow {
            subprogram: qualified.clone(),
            package: pkg_name.clone(),
            tests_selected: selection.selected_tests.len(),
        });
    }

    let baseline_size = coverage.baseline.len();
    let subprograms_changed = rows.len();
    let tests_with_cbt: usize = rows.iter().map(|r| r.tests_selected).sum();
    let tests_without_cbt = baseline_size * subprograms_changed;
    let reduction_ratio = if tests_without_cbt > 0 {
        1.0 - tests_with_cbt as f64 / tests_without_cbt as f64
    } else {
        1.0
    };

    Ok(ReplayReport {
        rows,
        baseline_size,
        units_changed: packages_touched.len(),
        subprograms_changed,
        tests_with_cbt,
        tests_without_cbt,
        reduction_ratio,
        violations,
        warnings,
    })
}
