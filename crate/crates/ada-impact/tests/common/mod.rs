//! Shared helpers for the integration and acceptance suites: fixture paths,
//! a structured random source-tree generator with semantic edit injection,
//! trivia mutators, and random coverage maps.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rand::prelude::*;

use ada_impact::frontend::UnitKind;
use ada_impact::frontend::{assemble_snapshot, parse_source, ParsedUnit};
use ada_impact::graph::{CoverageMap, StaticRelations};
use ada_impact::snapshot::Snapshot;

pub fn fixture_dir(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

/// Build a snapshot from in-memory (file name, text) pairs.
pub fn snapshot_of(files: &[(String, String)]) -> Snapshot {
    let units: Vec<ParsedUnit> = files
        .iter()
        .map(|(name, text)| parse_source(PathBuf::from(name), text.clone()).unwrap())
        .collect();
    assemble_snapshot(&units).unwrap()
}

/// Read a fixture tree into (file name, text) pairs, sorted by name.
pub fn read_tree(dir: &Path) -> Vec<(String, String)> {
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
        if ext == "ads" || ext == "adb" {
            files.push((
                path.file_name().unwrap().to_string_lossy().to_string(),
                std::fs::read_to_string(&path).unwrap(),
            ));
        }
    }
    files.sort();
    files
}

/// Copy a fixture tree into `dest` applying `edit` to the named file.
pub fn copy_tree_with_edit(src: &Path, dest: &Path, file: &str, edit: impl Fn(&str) -> String) {
    for (name, text) in read_tree(src) {
        let out = if name == file { edit(&text) } else { text };
        std::fs::write(dest.join(name), out).unwrap();
    }
}

pub fn coverage_from(entries: &[(&str, &[&str])]) -> CoverageMap {
    let mut cov = CoverageMap::default();
    for (test, subs) in entries {
        cov.baseline.push(test.to_string());
        cov.covers.insert(
            test.to_string(),
            subs.iter().map(|s| s.to_string()).collect(),
        );
    }
    cov
}

// ---------------------------------------------------------------------------
// Structured random source trees
// ---------------------------------------------------------------------------

/// A generatable package: renders to one spec and one body file. Spec withs
/// only point at lower-numbered packages so spec with-graphs stay acyclic.
#[derive(Debug, Clone)]
pub struct GenPackage {
    pub name: String,
    pub spec_withs: BTreeSet<String>,
    pub body_withs: BTreeSet<String>,
    /// (subprogram name, body constant) — the constant makes body edits easy.
    pub subs: Vec<(String, u32)>,
    pub body_var: u32,
}

#[derive(Debug, Clone, Default)]
pub struct GenTree {
    pub packages: Vec<GenPackage>,
}

impl GenTree {
    pub fn render(&self) -> Vec<(String, String)> {
        let mut files = Vec::new();
        for pkg in &self.packages {
            let mut spec = String::new();
            for w in &pkg.spec_withs {
                spec.push_str(&format!("with {};\n", capitalize(w)));
            }
            spec.push_str(&format!("package {} is\n", capitalize(&pkg.name)));
            for (sub, _) in &pkg.subs {
                spec.push_str(&format!(
                    "   function {} return Integer;\n",
                    capitalize(sub)
                ));
            }
            spec.push_str(&format!("end {};\n", capitalize(&pkg.name)));
            files.push((format!("{}.ads", pkg.name), spec));

            let mut body = String::new();
            for w in &pkg.body_withs {
                body.push_str(&format!("with {};\n", capitalize(w)));
            }
            body.push_str(&format!("package body {} is\n", capitalize(&pkg.name)));
            body.push_str(&format!(
                "   Seed : constant Integer := {};\n",
                pkg.body_var
            ));
            for (sub, value) in &pkg.subs {
                body.push_str(&format!(
                    "   function {} return Integer is\n   begin\n      return Seed + {};\n   end {};\n",
                    capitalize(sub),
                    value,
                    capitalize(sub)
                ));
            }
            body.push_str(&format!("end {};\n", capitalize(&pkg.name)));
            files.push((format!("{}.adb", pkg.name), body));
        }
        files
    }

    pub fn snapshot(&self) -> Snapshot {
        snapshot_of(&self.render())
    }

    pub fn all_subprograms(&self) -> Vec<String> {
        self.packages
            .iter()
            .flat_map(|p| p.subs.iter().map(move |(s, _)| format!("{}.{}", p.name, s)))
            .collect()
    }
}

fn capitalize(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut upper = true;
    for c in s.chars() {
        if upper && c.is_ascii_alphabetic() {
            out.push(c.to_ascii_uppercase());
            upper = false;
        } else {
            out.push(c);
        }
        if c == '_' || c == '.' {
            upper = true;
        }
    }
    out
}

pub fn random_gen_tree(rng: &mut impl Rng) -> GenTree {
    let npkg = rng.gen_range(2..=6);
    let mut packages = Vec::new();
    for p in 0..npkg {
        let name = format!("pk{p}");
        let mut spec_withs = BTreeSet::new();
        for q in 0..p {
            if rng.gen_bool(0.3) {
                spec_withs.insert(format!("pk{q}"));
            }
        }
        let mut body_withs = BTreeSet::new();
        for q in 0..npkg {
            if q != p && rng.gen_bool(0.3) {
                body_withs.insert(format!("pk{q}"));
            }
        }
        let nsubs = rng.gen_range(1..=5);
        let subs = (0..nsubs)
            .map(|s| (format!("s{s}"), rng.gen_range(0..1000)))
            .collect();
        packages.push(GenPackage {
            name,
            spec_withs,
            body_withs,
            subs,
            body_var: rng.gen_range(0..1000),
        });
    }
    GenTree { packages }
}

/// Kinds of semantic edit the fuzzers inject.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EditKind {
    TweakSubprogramBody,
    AddSubprogram,
    RemoveSubprogram,
    TouchBodyResidue,
    AddSpecWith,
    AddPackage,
    RemovePackage,
}

/// Apply one random semantic edit to a generated tree; returns a description.
pub fn apply_random_edit(rng: &mut impl Rng, tree: &mut GenTree) -> EditKind {
    use EditKind::*;
    loop {
        let kind = *[
            TweakSubprogramBody,
            AddSubprogram,
            RemoveSubprogram,
            TouchBodyResidue,
            AddSpecWith,
            AddPackage,
            RemovePackage,
        ]
        .choose(rng)
        .unwrap();
        let npkg = tree.packages.len();
        match kind {
            TweakSubprogramBody => {
                let pkg = tree.packages.choose_mut(rng).unwrap();
                if pkg.subs.is_empty() {
                    continue;
                }
                let sub = pkg.subs.choose_mut(rng).unwrap();
                sub.1 = sub.1.wrapping_add(1);
                return kind;
            }
            AddSubprogram => {
                let pkg = tree.packages.choose_mut(rng).unwrap();
                let next = pkg.subs.len();
                pkg.subs.push((format!("s{next}"), rng.gen_range(0..1000)));
                return kind;
            }
            RemoveSubprogram => {
                let pkg = tree.packages.choose_mut(rng).unwrap();
                if pkg.subs.len() < 2 {
                    continue;
                }
                let idx = rng.gen_range(0..pkg.subs.len());
                pkg.subs.remove(idx);
                return kind;
            }
            TouchBodyResidue => {
                let pkg = tree.packages.choose_mut(rng).unwrap();
                pkg.body_var = pkg.body_var.wrapping_add(1);
                return kind;
            }
            AddSpecWith => {
                let p = rng.gen_range(0..npkg);
                if p == 0 {
                    continue;
                }
                let q = rng.gen_range(0..p);
                let target = format!("pk{q}");
                if tree.packages[p].spec_withs.insert(target) {
                    return kind;
                }
                continue;
            }
            AddPackage => {
                let next = (0..)
                    .find(|i| !tree.packages.iter().any(|p| p.name == format!("pk{i}")))
                    .unwrap();
                let name = format!("pk{next}");
                tree.packages.push(GenPackage {
                    name,
                    spec_withs: BTreeSet::new(),
                    body_withs: BTreeSet::new(),
                    subs: vec![("s0".to_string(), rng.gen_range(0..1000))],
                    body_var: rng.gen_range(0..1000),
                });
                return kind;
            }
            RemovePackage => {
                if npkg < 2 {
                    continue;
                }
                let idx = rng.gen_range(0..npkg);
                let gone = tree.packages.remove(idx).name;
                // Withs pointing at the removed package become external
                // references; that is a supported (flagged) state.
                let _ = gone;
                return kind;
            }
        }
    }
}

/// Random coverage over the subprograms of a snapshot: some focused tests,
/// some broad, a few empty, occasionally an unknown name.
pub fn random_coverage(rng: &mut impl Rng, subprograms: &[String]) -> CoverageMap {
    let mut cov = CoverageMap::default();
    let ntests = rng.gen_range(3..=10);
    for t in 0..ntests {
        let test = format!("t{t}");
        let mut subs: BTreeSet<String> = BTreeSet::new();
        if !rng.gen_bool(0.15) {
            for s in subprograms {
                if rng.gen_bool(0.25) {
                    subs.insert(s.clone());
                }
            }
            if rng.gen_bool(0.1) {
                subs.insert("ghost.gone".to_string());
            }
        }
        cov.baseline.push(test.clone());
        cov.covers.insert(test, subs);
    }
    cov
}

// ---------------------------------------------------------------------------
// Trivia mutants
// ---------------------------------------------------------------------------

/// Mutations that must not change any hash: comments, whitespace, identifier
/// case.
pub fn trivia_mutants(text: &str, rng: &mut impl Rng) -> Vec<String> {
    use ada_impact::frontend::lexer::{lex, TokenKind};
    let tokens = lex(text).unwrap();
    let mut mutants = Vec::new();

    // Insert a comment after a random newline.
    let newlines: Vec<usize> = text
        .char_indices()
        .filter(|(_, c)| *c == '\n')
        .map(|(i, _)| i)
        .collect();
    if let Some(&pos) = newlines.choose(rng) {
        let mut m = text.to_string();
        m.insert_str(pos + 1, "-- inserted remark, should be invisible\n");
        mutants.push(m);
    }

    // Insert extra whitespace at a random token boundary.
    if let Some(t) = tokens.choose(rng) {
        let mut m = text.to_string();
        m.insert_str(t.offset, "  \t ");
        mutants.push(m);
    }

    // Uppercase every identifier (string/char literals untouched).
    {
        let mut m = String::with_capacity(text.len());
        let mut last = 0;
        for t in &tokens {
            m.push_str(&text[last..t.offset]);
            let original = &text[t.offset..t.offset + t.len];
            if t.kind == TokenKind::Ident {
                m.push_str(&original.to_uppercase());
            } else {
                m.push_str(original);
            }
            last = t.offset + t.len;
        }
        m.push_str(&text[last..]);
        mutants.push(m);
    }

    // Blank lines before a random token at line start.
    if let Some(&pos) = newlines.choose(rng) {
        let mut m = text.to_string();
        m.insert_str(pos + 1, "\n\n");
        mutants.push(m);
    }

    mutants
}

/// Candidate positions for single-token semantic mutations: identifiers
/// (excluding reserved words), numbers, and string literals.
pub fn mutate_one_token(text: &str, rng: &mut impl Rng) -> Option<String> {
    use ada_impact::frontend::lexer::{is_reserved, lex, TokenKind};
    let tokens = lex(text).ok()?;
    let candidates: Vec<usize> = tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| match t.kind {
            TokenKind::Ident => !is_reserved(&t.text),
            TokenKind::Number | TokenKind::Str => true,
            _ => false,
        })
        .map(|(i, _)| i)
        .collect();
    let &idx = candidates.choose(rng)?;
    let t = &tokens[idx];
    let original = &text[t.offset..t.offset + t.len];
    let replacement = match t.kind {
        TokenKind::Ident => format!("{original}z"),
        TokenKind::Number => format!("{original}1"),
        TokenKind::Str => {
            let inner = &original[..original.len() - 1];
            format!("{inner}x\"")
        }
        _ => return None,
    };
    let mut m = text.to_string();
    m.replace_range(t.offset..t.offset + t.len, &replacement);
    Some(m)
}

/// True when the uses relation of `relations` has a spec-level edge for every
/// package in `tree` — sanity helper for generator tests.
pub fn relations_cover_tree(relations: &StaticRelations, tree: &GenTree) -> bool {
    tree.packages.iter().all(|p| {
        relations
            .uses
            .contains_key(&(p.name.clone(), UnitKind::Spec))
    })
}
