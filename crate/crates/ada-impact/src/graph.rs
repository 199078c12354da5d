//! The intermediate representation: static `Contains`/`Uses` relations
//! extracted from a snapshot, per-test `Covers` data from a coverage file,
//! and the entity-level impact relation (the inverse of one-step dependency)
//! that the selection walk traverses.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::de::{MapAccess, Visitor};
use serde::{Deserialize, Deserializer};

use crate::error::{Error, Result};
use crate::frontend::UnitKind;
use crate::snapshot::Snapshot;

/// A specification, body or subprogram. Ordering is kind rank then name, so
/// iteration over entity sets is deterministic.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Entity {
    Spec(String),
    Body(String),
    Subprogram(String),
}

impl Entity {
    pub fn name(&self) -> &str {
        match self {
            Entity::Spec(n) | Entity::Body(n) | Entity::Subprogram(n) => n,
        }
    }
}

impl fmt::Display for Entity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Entity::Spec(n) => write!(f, "spec {n}"),
            Entity::Body(n) => write!(f, "body {n}"),
            Entity::Subprogram(n) => write!(f, "subprogram {n}"),
        }
    }
}

/// Static data: `Contains` maps a package to the subprograms its body
/// defines; `Uses` maps a package's spec or body to the packages it withs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StaticRelations {
    /// Packages present in the snapshot.
    pub packages: BTreeSet<String>,
    pub contains: BTreeMap<String, BTreeSet<String>>,
    pub uses: BTreeMap<(String, UnitKind), BTreeSet<String>>,
}

impl StaticRelations {
    pub fn uses_of(&self, package: &str, kind: UnitKind) -> Option<&BTreeSet<String>> {
        self.uses.get(&(package.to_string(), kind))
    }

    /// Withed packages that are absent from the snapshot. Kept as synthetic
    /// spec-only entities; flagged in reports.
    pub fn external_packages(&self) -> BTreeSet<String> {
        self.uses
            .values()
            .flatten()
            .filter(|p| !self.packages.contains(*p))
            .cloned()
            .collect()
    }

    /// Union of two relation sets, used to evaluate removals against the old
    /// graph and additions against the new one in a single walk.
    pub fn union(&self, other: &StaticRelations) -> StaticRelations {
        let mut out = self.clone();
        out.packages.extend(other.packages.iter().cloned());
        for (pkg, subs) in &other.contains {
            out.contains
                .entry(pkg.clone())
                .or_default()
                .extend(subs.iter().cloned());
        }
        for (key, pkgs) in &other.uses {
            out.uses
                .entry(key.clone())
                .or_default()
                .extend(pkgs.iter().cloned());
        }
        out
    }
}

/// Extract `Contains` and `Uses` from a snapshot. The implicit dependency of
/// each body on its own spec is added later, when the impact relation is
/// built; it is not stored in `uses`.
pub fn build_static(snapshot: &Snapshot) -> StaticRelations {
    let mut relations = StaticRelations::default();
    for (name, pkg) in &snapshot.packages {
        relations.packages.insert(name.clone());
        relations.contains.insert(
            name.clone(),
            pkg.subprograms
                .iter()
                .map(|s| s.qualified_name.clone())
                .collect(),
        );
        relations.uses.insert(
            (name.clone(), UnitKind::Spec),
            pkg.spec_withs
                .iter()
                .filter(|w| *w != name)
                .cloned()
                .collect(),
        );
        relations.uses.insert(
            (name.clone(), UnitKind::Body),
            pkg.body_withs
                .iter()
                .filter(|w| *w != name)
                .cloned()
                .collect(),
        );
    }
    relations
}

/// Entity-level impact: maps each entity to the entities that depend on it
/// in one step.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ImpactRelation {
    pub impact: BTreeMap<Entity, BTreeSet<Entity>>,
}

impl ImpactRelation {
    pub fn contains_entity(&self, entity: &Entity) -> bool {
        self.impact.contains_key(entity)
    }

    pub fn successors(&self, entity: &Entity) -> Option<&BTreeSet<Entity>> {
        self.impact.get(entity)
    }

    pub fn entities(&self) -> impl Iterator<Item = &Entity> {
        self.impact.keys()
    }
}

/// Build the one-step impact relation:
///
/// - a spec impacts its own body, every body that withs it, and every spec
///   that withs it;
/// - a body impacts the subprograms it contains;
/// - a subprogram has no static impact successors (dynamic effect flows
///   through `Covers`).
///
/// With-cycles between specs are rejected; they cannot occur in legal Ada.
pub fn impact_relation(relations: &StaticRelations) -> Result<ImpactRelation> {
    check_spec_cycles(relations)?;

    let mut impact: BTreeMap<Entity, BTreeSet<Entity>> = BTreeMap::new();
    for pkg in &relations.packages {
        impact.entry(Entity::Spec(pkg.clone())).or_default();
        impact.entry(Entity::Body(pkg.clone())).or_default();
    }
    for ext in relations.external_packages() {
        impact.entry(Entity::Spec(ext)).or_default();
    }
    for subs in relations.contains.values() {
        for sub in subs {
            impact.entry(Entity::Subprogram(sub.clone())).or_default();
        }
    }

    for pkg in &relations.packages {
        impact
            .get_mut(&Entity::Spec(pkg.clone()))
            .expect("spec entity present")
            .insert(Entity::Body(pkg.clone()));
        if let Some(withed) = relations.uses_of(pkg, UnitKind::Body) {
            for w in withed {
                impact
                    .entry(Entity::Spec(w.clone()))
                    .or_default()
                    .insert(Entity::Body(pkg.clone()));
            }
        }
        if let Some(withed) = relations.uses_of(pkg, UnitKind::Spec) {
            for w in withed {
                impact
                    .entry(Entity::Spec(w.clone()))
                    .or_default()
                    .insert(Entity::Spec(pkg.clone()));
            }
        }
        if let Some(subs) = relations.contains.get(pkg) {
            let body = impact
                .get_mut(&Entity::Body(pkg.clone()))
                .expect("body entity present");
            for sub in subs {
                body.insert(Entity::Subprogram(sub.clone()));
            }
        }
    }

    Ok(ImpactRelation { impact })
}

fn check_spec_cycles(relations: &StaticRelations) -> Result<()> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        White,
        Grey,
        Black,
    }
    fn visit(
        pkg: &str,
        relations: &StaticRelations,
        marks: &mut BTreeMap<String, Mark>,
        path: &mut Vec<String>,
    ) -> Result<()> {
        marks.insert(pkg.to_string(), Mark::Grey);
        path.push(pkg.to_string());
        if let Some(withed) = relations.uses_of(pkg, UnitKind::Spec) {
            for next in withed {
                if !relations.packages.contains(next) {
                    continue;
                }
                match marks.get(next).copied().unwrap_or(Mark::White) {
                    Mark::Grey => {
                        let start = path.iter().position(|p| p == next).unwrap_or(0);
                        let mut cycle: Vec<String> = path[start..].to_vec();
                        cycle.push(next.clone());
                        return Err(Error::SpecWithCycle(cycle));
                    }
                    Mark::White => visit(next, relations, marks, path)?,
                    Mark::Black => {}
                }
            }
        }
        path.pop();
        marks.insert(pkg.to_string(), Mark::Black);
        Ok(())
    }

    let mut marks = BTreeMap::new();
    for pkg in &relations.packages {
        if marks.get(pkg).copied().unwrap_or(Mark::White) == Mark::White {
            visit(pkg, relations, &mut marks, &mut Vec::new())?;
        }
    }
    Ok(())
}

/// Dynamic data: test id to the set of qualified subprograms covered when
/// that test last executed, plus the ordered test baseline.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CoverageMap {
    /// Baseline in file order; selection output preserves this order.
    pub baseline: Vec<String>,
    pub covers: BTreeMap<String, BTreeSet<String>>,
}

impl CoverageMap {
    pub fn covers_of(&self, test: &str) -> Option<&BTreeSet<String>> {
        self.covers.get(test)
    }

    /// Coverage entries naming subprograms that the relation does not know.
    /// Kept selectable (a removed subprogram's tests must still be picked
    /// up), but flagged in reports.
    pub fn unknown_subprograms(&self, relations: &StaticRelations) -> BTreeSet<String> {
        let known: BTreeSet<&String> = relations.contains.values().flatten().collect();
        self.covers
            .values()
            .flatten()
            .filter(|s| !known.contains(s))
            .cloned()
            .collect()
    }
}

struct TestEntries(Vec<(String, Vec<String>)>);

impl<'de> Deserialize<'de> for TestEntries {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = TestEntries;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a map from test id to an array of subprogram names")
            }
            fn visit_map<A: MapAccess<'de>>(
                self,
                mut map: A,
            ) -> std::result::Result<Self::Value, A::Error> {
                let mut entries = Vec::new();
                while let Some((key, value)) = map.next_entry::<String, Vec<String>>()? {
                    entries.push((key, value));
                }
                Ok(TestEntries(entries))
            }
        }
        deserializer.deserialize_map(V)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CoverageFile {
    tests: TestEntries,
}

/// Load a coverage file of the form `{"tests": {"<test-id>": ["pkg.sub", ...]}}`.
pub fn load_coverage(path: &Path) -> Result<CoverageMap> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let file: CoverageFile = serde_json::from_str(&text).map_err(|e| Error::CoverageFormat {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let mut map = CoverageMap::default();
    for (test, subs) in file.tests.0 {
        if map.covers.contains_key(&test) {
            return Err(Error::DuplicateTest { id: test });
        }
        map.baseline.push(test.clone());
        map.covers.insert(test, subs.into_iter().collect());
    }
    Ok(map)
}

fn dot_id(entity: &Entity) -> String {
    let (prefix, name) = match entity {
        Entity::Spec(n) => ("spec", n),
        Entity::Body(n) => ("body", n),
        Entity::Subprogram(n) => ("sub", n),
    };
    let sanitized: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect();
    format!("{prefix}_{sanitized}")
}

fn dot_label(entity: &Entity) -> String {
    match entity {
        Entity::Spec(n) => format!("spec {n}"),
        Entity::Body(n) => format!("body {n}"),
        Entity::Subprogram(n) => n.clone(),
    }
}

/// Render the dependency graph in DOT form. Static dependencies are solid
/// and drawn in the dependency direction (the inverse of impact); dynamic
/// call couplings observed in the coverage data are dashed.
pub fn export_dot(relation: &ImpactRelation, coverage: &CoverageMap) -> String {
    // Package of each known subprogram, recovered from body -> subprogram
    // impact edges.
    let mut sub_package: BTreeMap<&str, &str> = BTreeMap::new();
    for (entity, succs) in &relation.impact {
        if let Entity::Body(pkg) = entity {
            for s in succs {
                if let Entity::Subprogram(name) = s {
                    sub_package.insert(name, pkg);
                }
            }
        }
    }

    // Dependency adjacency: the inverse of impact.
    let mut depends: BTreeMap<&Entity, BTreeSet<&Entity>> = BTreeMap::new();
    for (entity, succs) in &relation.impact {
        for dependant in succs {
            depends.entry(dependant).or_default().insert(entity);
        }
    }

    let reaches = |from: &Entity, goals: &[Entity]| -> bool {
        let mut seen: BTreeSet<&Entity> = BTreeSet::new();
        let mut work: Vec<&Entity> = vec![from];
        while let Some(e) = work.pop() {
            if goals.contains(e) {
                return true;
            }
            if !seen.insert(e) {
                continue;
            }
            if let Some(next) = depends.get(e) {
                work.extend(next.iter());
            }
        }
        false
    };

    // Dynamic couplings: u -> v when some test covers both and a static
    // dependency path leads from u into v's package.
    let mut dynamic: BTreeSet<(String, String)> = BTreeSet::new();
    for subs in coverage.covers.values() {
        for u in subs {
            for v in subs {
                if u == v {
                    continue;
                }
                let (Some(_), Some(v_pkg)) =
                    (sub_package.get(u.as_str()), sub_package.get(v.as_str()))
                else {
                    continue;
                };
                let goals = [
                    Entity::Spec((*v_pkg).to_string()),
                    Entity::Body((*v_pkg).to_string()),
                ];
                if reaches(&Entity::Subprogram(u.clone()), &goals) {
                    dynamic.insert((u.clone(), v.clone()));
                }
            }
        }
    }

    let mut out = String::new();
    out.push_str("digraph impact {\n");
    out.push_str("  rankdir=LR;\n");
    out.push_str("  node [shape=box];\n");
    for entity in relation.impact.keys() {
        out.push_str(&format!(
            "  {} [label=\"{}\"];\n",
            dot_id(entity),
            dot_label(entity)
        ));
    }
    let mut solid: BTreeSet<(String, String)> = BTreeSet::new();
    for (entity, succs) in &relation.impact {
        for dependant in succs {
            solid.insert((dot_id(dependant), dot_id(entity)));
        }
    }
    for (from, to) in solid {
        out.push_str(&format!("  {from} -> {to};\n"));
    }
    for (u, v) in &dynamic {
        out.push_str(&format!(
            "  {} -> {} [style=dashed];\n",
            dot_id(&Entity::Subprogram(u.clone())),
            dot_id(&Entity::Subprogram(v.clone()))
        ));
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{assemble_snapshot, parse_source, ParsedUnit};
    use std::path::PathBuf;

    pub(crate) fn snap(units: &[(&str, &str)]) -> Snapshot {
        let parsed: Vec<ParsedUnit> = units
            .iter()
            .map(|(p, t)| parse_source(PathBuf::from(p), t.to_string()).unwrap())
            .collect();
        assemble_snapshot(&parsed).unwrap()
    }

    pub(crate) fn fig3_snapshot() -> Snapshot {
        snap(&[
            ("a.ads", "package A is function Foo return Integer; end A;"),
            (
                "a.adb",
                "with B;\npackage body A is function Foo return Integer is begin return B.Bar; end Foo; end A;",
            ),
            ("b.ads", "package B is function Bar return Integer; end B;"),
            (
                "b.adb",
                "package body B is function Bar return Integer is begin return 42; end Bar; end B;",
            ),
        ])
    }

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn fig3_contains_and_uses() {
        let relations = build_static(&fig3_snapshot());
        assert_eq!(relations.contains["a"], set(&["a.foo"]));
        assert_eq!(relations.contains["b"], set(&["b.bar"]));
        assert_eq!(
            relations.uses[&("a".to_string(), UnitKind::Body)],
            set(&["b"])
        );
        assert!(relations.uses[&("a".to_string(), UnitKind::Spec)].is_empty());
        assert!(relations.uses[&("b".to_string(), UnitKind::Body)].is_empty());
        assert!(relations.uses[&("b".to_string(), UnitKind::Spec)].is_empty());
        assert!(relations.external_packages().is_empty());
    }

    #[test]
    fn chain_of_withs_stores_only_direct_edges() {
        let snapshot = snap(&[
            ("a.adb", "with B;\npackage body A is end A;"),
            ("b.adb", "with C;\npackage body B is end B;"),
            ("c.adb", "package body C is end C;"),
        ]);
        let relations = build_static(&snapshot);
        assert_eq!(
            relations.uses[&("a".to_string(), UnitKind::Body)],
            set(&["b"])
        );
        assert_eq!(
            relations.uses[&("b".to_string(), UnitKind::Body)],
            set(&["c"])
        );
        assert!(!relations.uses[&("a".to_string(), UnitKind::Body)].contains("c"));
    }

    #[test]
    fn fig3_impact_edges() {
        let relations = build_static(&fig3_snapshot());
        let impact = impact_relation(&relations).unwrap();
        let spec_b: BTreeSet<Entity> = impact.impact[&Entity::Spec("b".into())].clone();
        assert_eq!(
            spec_b,
            [Entity::Body("a".into()), Entity::Body("b".into())]
                .into_iter()
                .collect()
        );
        assert_eq!(
            impact.impact[&Entity::Body("b".into())],
            [Entity::Subprogram("b.bar".into())].into_iter().collect()
        );
        assert_eq!(
            impact.impact[&Entity::Body("a".into())],
            [Entity::Subprogram("a.foo".into())].into_iter().collect()
        );
        assert!(impact.impact[&Entity::Subprogram("a.foo".into())].is_empty());
    }

    #[test]
    fn spec_with_creates_spec_to_spec_impact() {
        let snapshot = snap(&[
            ("base.ads", "package Base is end Base;"),
            ("derived.ads", "with Base;\npackage Derived is end Derived;"),
        ]);
        let impact = impact_relation(&build_static(&snapshot)).unwrap();
        assert!(
            impact.impact[&Entity::Spec("base".into())].contains(&Entity::Spec("derived".into()))
        );
    }

    #[test]
    fn external_with_becomes_synthetic_spec() {
        let snapshot = snap(&[("a.adb", "with Text_IO;\npackage body A is end A;")]);
        let relations = build_static(&snapshot);
        assert_eq!(relations.external_packages(), set(&["text_io"]));
        let impact = impact_relation(&relations).unwrap();
        assert!(impact.impact[&Entity::Spec("text_io".into())].contains(&Entity::Body("a".into())));
        assert!(!impact.contains_entity(&Entity::Body("text_io".into())));
    }

    #[test]
    fn spec_with_cycle_is_rejected_and_named() {
        let snapshot = snap(&[
            ("a.ads", "with B;\npackage A is end A;"),
            ("b.ads", "with A;\npackage B is end B;"),
        ]);
        match impact_relation(&build_static(&snapshot)) {
            Err(Error::SpecWithCycle(cycle)) => {
                assert!(cycle.contains(&"a".to_string()));
                assert!(cycle.contains(&"b".to_string()));
            }
            other => panic!("expected cycle error, got {other:?}"),
        }
    }

    #[test]
    fn body_with_cycle_is_legal() {
        let snapshot = snap(&[
            ("a.adb", "with B;\npackage body A is end A;"),
            ("b.adb", "with A;\npackage body B is end B;"),
        ]);
        assert!(impact_relation(&build_static(&snapshot)).is_ok());
    }

    #[test]
    fn coverage_round_trip_and_duplicates() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cov.json");
        std::fs::write(
            &path,
            r#"{"tests": {"t2": ["b.bar"], "t1": ["a.foo", "b.bar"], "t_empty": []}}"#,
        )
        .unwrap();
        let cov = load_coverage(&path).unwrap();
        assert_eq!(cov.baseline, vec!["t2", "t1", "t_empty"]);
        assert_eq!(cov.covers["t1"], set(&["a.foo", "b.bar"]));
        assert!(cov.covers["t_empty"].is_empty());

        std::fs::write(&path, r#"{"tests": {"t": ["a.foo"], "t": ["b.bar"]}}"#).unwrap();
        assert!(matches!(
            load_coverage(&path),
            Err(Error::DuplicateTest { .. })
        ));

        std::fs::write(&path, r#"{"wrong": {}}"#).unwrap();
        assert!(matches!(
            load_coverage(&path),
            Err(Error::CoverageFormat { .. })
        ));
    }

    #[test]
    fn empty_coverage_object_has_empty_baseline() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cov.json");
        std::fs::write(&path, r#"{"tests": {}}"#).unwrap();
        let cov = load_coverage(&path).unwrap();
        assert!(cov.baseline.is_empty());
        assert!(cov.covers.is_empty());
    }

    #[test]
    fn unknown_coverage_subprograms_are_flagged_not_dropped() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cov.json");
        std::fs::write(&path, r#"{"tests": {"t": ["ghost.gone"]}}"#).unwrap();
        let cov = load_coverage(&path).unwrap();
        let relations = build_static(&fig3_snapshot());
        assert_eq!(cov.unknown_subprograms(&relations), set(&["ghost.gone"]));
        assert_eq!(cov.covers["t"], set(&["ghost.gone"]));
    }

    #[test]
    fn dot_export_shows_fig3_shape() {
        let relations = build_static(&fig3_snapshot());
        let impact = impact_relation(&relations).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cov.json");
        std::fs::write(&path, r#"{"tests": {"t": ["a.foo", "b.bar"]}}"#).unwrap();
        let cov = load_coverage(&path).unwrap();
        let dot = export_dot(&impact, &cov);
        assert!(dot.contains("body_a -> spec_b;"), "{dot}");
        assert!(dot.contains("sub_a_foo [label=\"a.foo\"];"), "{dot}");
        assert!(dot.contains("sub_b_bar [label=\"b.bar\"];"), "{dot}");
        // Foo dynamically couples to Bar; the reverse has no static path.
        assert!(
            dot.contains("sub_a_foo -> sub_b_bar [style=dashed];"),
            "{dot}"
        );
        assert!(!dot.contains("sub_b_bar -> sub_a_foo"), "{dot}");
    }

    #[test]
    fn dot_export_is_deterministic_and_valid_when_empty() {
        let empty = ImpactRelation::default();
        let dot = export_dot(&empty, &CoverageMap::default());
        assert!(dot.starts_with("digraph impact {"));
        assert!(dot.ends_with("}\n"));
        let relations = build_static(&fig3_snapshot());
        let impact = impact_relation(&relations).unwrap();
        let a = export_dot(&impact, &CoverageMap::default());
        let b = export_dot(&impact, &CoverageMap::default());
        assert_eq!(a, b);
    }
}
