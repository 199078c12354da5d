//! Parsing of the supported Ada subset.
//!
//! The frontend extracts exactly what the analysis needs from a source tree:
//! package structure, `with` dependencies, and the extent of every top-level
//! subprogram body. Everything else inside a unit (types, objects, tasks,
//! nested packages) is swallowed into a residue hash, so an edit there still
//! surfaces as a spec- or body-level change.
//!
//! Supported: package specs and bodies, `with` clauses, procedures and
//! functions (including nested ones, folded into their enclosing top-level
//! subprogram), generic packages and instantiations. Not supported: library
//! level subprogram units and `separate` subunits.

pub mod lexer;
mod scan;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use walkdir::WalkDir;

use crate::error::{Error, Result, UnitError};
use crate::snapshot::Snapshot;
use lexer::{lex, normalized_text, Token, TokenKind};
use scan::{opens_end_construct, scan_balanced};

/// Name of the content hash recorded in snapshot headers.
pub const HASH_ALGORITHM: &str = "sha-256";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum UnitKind {
    Spec,
    Body,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SubprogramKind {
    Procedure,
    Function,
}

/// One `.ads`/`.adb` file, classified by its top-level construct.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceUnit {
    pub path: PathBuf,
    pub kind: UnitKind,
    /// Canonical (lowercased, dot-separated) package name.
    pub package_name: String,
    pub text: String,
}

/// A top-level subprogram body found in a package body.
///
/// Field order matches the canonical snapshot serialization.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubprogramDecl {
    /// Byte range of the body in the unit, from the introducing keyword
    /// through the terminating `;`.
    pub body_span: (usize, usize),
    pub kind: SubprogramKind,
    /// Hash of the normalized body text (comments stripped, whitespace
    /// collapsed, identifiers lowercased).
    pub normalized_hash: String,
    /// `package.subprogram`, with `#<ordinal>` appended to overloads.
    pub qualified_name: String,
}

/// Merged view of one package across its spec and body units.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PackageModel {
    /// Hash of the body text with all top-level subprogram bodies removed,
    /// or None when the package has no body unit.
    pub body_residue_hash: Option<String>,
    pub body_withs: Vec<String>,
    pub name: String,
    /// Hash of the whole normalized spec text, or None without a spec unit.
    pub spec_residue_hash: Option<String>,
    pub spec_withs: Vec<String>,
    /// Body subprograms in source order.
    pub subprograms: Vec<SubprogramDecl>,
}

impl PackageModel {
    pub fn has_spec(&self) -> bool {
        self.spec_residue_hash.is_some()
    }

    pub fn has_body(&self) -> bool {
        self.body_residue_hash.is_some()
    }
}

/// What a single unit contributes to its package's model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnitContribution {
    pub kind: UnitKind,
    pub package_name: String,
    /// Context-clause withs plus generic instantiation targets, own name
    /// excluded.
    pub withs: Vec<String>,
    /// Top-level subprogram bodies, source order, unqualified names.
    pub subprograms: Vec<RawSubprogram>,
    pub residue_hash: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawSubprogram {
    pub name: String,
    pub kind: SubprogramKind,
    pub span: (usize, usize),
    pub hash: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedUnit {
    pub unit: SourceUnit,
    pub contribution: UnitContribution,
}

pub fn content_hash(text: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for byte in digest {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

fn hash_tokens(tokens: &[Token]) -> String {
    content_hash(&normalized_text(tokens))
}

fn unit_error(path: &Path, line: u32, message: impl Into<String>) -> UnitError {
    UnitError {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn scan_err_to_unit(path: &Path, tokens: &[Token], e: scan::ScanError, context: &str) -> UnitError {
    let line =
        e.at.and_then(|i| tokens.get(i))
            .or_else(|| tokens.last())
            .map_or(1, |t| t.line);
    let message = if context.is_empty() {
        e.message
    } else {
        format!("{context}: {}", e.message)
    };
    unit_error(path, line, message)
}

/// Parse a dotted name starting at `i`; returns the lowercased name and the
/// index just past it.
fn parse_dotted(
    path: &Path,
    tokens: &[Token],
    mut i: usize,
) -> std::result::Result<(String, usize), UnitError> {
    let first = tokens
        .get(i)
        .filter(|t| t.kind == TokenKind::Ident && !lexer::is_reserved(&t.text))
        .ok_or_else(|| {
            let line = tokens
                .get(i)
                .or_else(|| tokens.last())
                .map_or(1, |t| t.line);
            unit_error(path, line, "expected an identifier")
        })?;
    let mut name = first.text.clone();
    i += 1;
    while tokens.get(i).is_some_and(|t| t.is_punct("."))
        && tokens
            .get(i + 1)
            .is_some_and(|t| t.kind == TokenKind::Ident && !lexer::is_reserved(&t.text))
    {
        name.push('.');
        name.push_str(&tokens[i + 1].text);
        i += 2;
    }
    Ok((name, i))
}

/// Skip to just past the next `;` at parenthesis depth zero.
fn skip_simple_item(tokens: &[Token], mut i: usize) -> usize {
    let mut paren = 0usize;
    while i < tokens.len() {
        let t = &tokens[i];
        if t.is_punct("(") {
            paren += 1;
        } else if t.is_punct(")") {
            paren = paren.saturating_sub(1);
        } else if paren == 0 && t.is_punct(";") {
            return i + 1;
        }
        i += 1;
    }
    i
}

/// If the declaration starting at `j` (`package`/`procedure`/`function`) is a
/// generic instantiation, record the instantiated unit's name.
fn record_instantiation(path: &Path, tokens: &[Token], j: usize, withs: &mut Vec<String>) {
    let mut paren = 0usize;
    let mut i = j + 1;
    while i < tokens.len() {
        let t = &tokens[i];
        if t.is_punct("(") {
            paren += 1;
        } else if t.is_punct(")") {
            paren = paren.saturating_sub(1);
        } else if paren == 0 {
            if t.is_punct(";") {
                return;
            }
            if t.is_ident("is") {
                if tokens.get(i + 1).is_some_and(|n| n.is_ident("new")) {
                    if let Ok((target, _)) = parse_dotted(path, tokens, i + 2) {
                        withs.push(target);
                    }
                }
                return;
            }
        }
        i += 1;
    }
}

/// Scan a whole unit's tokens for generic instantiations at any level.
fn collect_instantiations(path: &Path, tokens: &[Token], withs: &mut Vec<String>) {
    for (i, t) in tokens.iter().enumerate() {
        if t.is_ident("package") || t.is_ident("procedure") || t.is_ident("function") {
            record_instantiation(path, tokens, i, withs);
        }
    }
}

/// Parse one unit's text into its package contribution.
pub fn parse_source(path: PathBuf, text: String) -> Result<ParsedUnit> {
    match parse_text(&path, &text) {
        Ok((kind, package_name, contribution)) => Ok(ParsedUnit {
            unit: SourceUnit {
                path,
                kind,
                package_name,
                text,
            },
            contribution,
        }),
        Err(e) => Err(Error::Parse(e)),
    }
}

/// Re-extract the contribution of an already classified unit.
pub fn parse_unit(unit: &SourceUnit) -> Result<UnitContribution> {
    parse_text(&unit.path, &unit.text)
        .map(|(_, _, c)| c)
        .map_err(Error::Parse)
}

type ParseOutput = (UnitKind, String, UnitContribution);

fn parse_text(path: &Path, text: &str) -> std::result::Result<ParseOutput, UnitError> {
    let tokens = lex(text).map_err(|e| unit_error(path, e.line, e.message))?;
    let mut withs: Vec<String> = Vec::new();
    let mut i = 0usize;

    // Context clause: with/use/pragma before the unit itself.
    loop {
        let Some(t) = tokens.get(i) else {
            return Err(unit_error(path, 1, "missing package declaration"));
        };
        if t.is_ident("with") {
            i += 1;
            loop {
                let (name, ni) = parse_dotted(path, &tokens, i)?;
                withs.push(name);
                i = ni;
                match tokens.get(i) {
                    Some(t) if t.is_punct(",") => i += 1,
                    Some(t) if t.is_punct(";") => {
                        i += 1;
                        break;
                    }
                    other => {
                        let line = other.or_else(|| tokens.last()).map_or(1, |t| t.line);
                        return Err(unit_error(path, line, "malformed with clause"));
                    }
                }
            }
        } else if (t.is_ident("limited") || t.is_ident("private"))
            && tokens.get(i + 1).is_some_and(|n| n.is_ident("with"))
        {
            i += 1;
        } else if t.is_ident("use") || t.is_ident("pragma") {
            i = skip_simple_item(&tokens, i);
        } else {
            break;
        }
    }

    // Generic formal part, for generic packages.
    if tokens.get(i).is_some_and(|t| t.is_ident("generic")) {
        i += 1;
        loop {
            let Some(t) = tokens.get(i) else {
                return Err(unit_error(
                    path,
                    tokens.last().map_or(1, |t| t.line),
                    "unterminated generic formal part",
                ));
            };
            if t.is_ident("package") || t.is_ident("procedure") || t.is_ident("function") {
                break;
            }
            i = skip_simple_item(&tokens, i);
        }
    }

    // Private child units: `private package A.B is ...`.
    if tokens.get(i).is_some_and(|t| t.is_ident("private")) {
        i += 1;
    }

    let Some(t) = tokens.get(i) else {
        return Err(unit_error(path, 1, "missing package declaration"));
    };
    if !t.is_ident("package") {
        let msg = if t.is_ident("procedure") || t.is_ident("function") {
            "library-level subprogram units are not supported"
        } else if t.is_ident("separate") {
            "subunits (`separate`) are not supported"
        } else {
            "expected `package`"
        };
        return Err(unit_error(path, t.line, msg));
    }
    let unit_start = i;
    i += 1;
    let kind = if tokens.get(i).is_some_and(|t| t.is_ident("body")) {
        i += 1;
        UnitKind::Body
    } else {
        UnitKind::Spec
    };
    let (package_name, ni) = parse_dotted(path, &tokens, i)?;
    i = ni;
    // Skip an aspect list (`package P with Pure is ...`) up to the `is`.
    if tokens.get(i).is_some_and(|t| t.is_ident("with")) {
        let mut paren = 0usize;
        while let Some(t) = tokens.get(i) {
            if t.is_punct("(") {
                paren += 1;
            } else if t.is_punct(")") {
                paren = paren.saturating_sub(1);
            } else if paren == 0 && (t.is_ident("is") || t.is_punct(";")) {
                break;
            }
            i += 1;
        }
    }
    if !tokens.get(i).is_some_and(|t| t.is_ident("is")) {
        let line = tokens
            .get(i)
            .or_else(|| tokens.last())
            .map_or(1, |t| t.line);
        return Err(unit_error(path, line, "expected `is` after package name"));
    }

    let subprograms = match kind {
        UnitKind::Spec => {
            let out = scan_balanced(&tokens, unit_start, 0)
                .map_err(|e| scan_err_to_unit(path, &tokens, e, ""))?;
            if out.end != tokens.len() {
                return Err(unit_error(
                    path,
                    tokens[out.end].line,
                    "unexpected tokens after end of unit",
                ));
            }
            collect_instantiations(path, &tokens, &mut withs);
            Vec::new()
        }
        UnitKind::Body => parse_body_declarations(path, &tokens, i + 1, &mut withs)?,
    };

    // Residue: every token outside top-level subprogram body spans.
    let residue_hash = {
        let mut parts: Vec<&str> = Vec::new();
        let mut idx = 0usize;
        'outer: while idx < tokens.len() {
            let off = tokens[idx].offset;
            for sub in &subprograms {
                if off >= sub.span.0 && off < sub.span.1 {
                    while idx < tokens.len() && tokens[idx].offset < sub.span.1 {
                        idx += 1;
                    }
                    continue 'outer;
                }
            }
            parts.push(&tokens[idx].text);
            idx += 1;
        }
        content_hash(&parts.join(" "))
    };

    let mut withs: Vec<String> = withs;
    withs.sort();
    withs.dedup();
    withs.retain(|w| w != &package_name);

    let contribution = UnitContribution {
        kind,
        package_name: package_name.clone(),
        withs,
        subprograms,
        residue_hash,
    };
    Ok((kind, package_name, contribution))
}

/// Walk a package body's declarative part and optional initialization
/// statements, collecting top-level subprogram bodies.
fn parse_body_declarations(
    path: &Path,
    tokens: &[Token],
    mut i: usize,
    withs: &mut Vec<String>,
) -> std::result::Result<Vec<RawSubprogram>, UnitError> {
    let mut subs = Vec::new();
    loop {
        let Some(t) = tokens.get(i) else {
            return Err(unit_error(
                path,
                tokens.last().map_or(1, |t| t.line),
                "missing `end` for package body",
            ));
        };
        if t.is_ident("end") {
            i = skip_simple_item(tokens, i);
            break;
        }
        if t.is_ident("begin") {
            // Package initialization; the matching `end` closes the unit.
            let out = scan_balanced(tokens, i + 1, 1)
                .map_err(|e| scan_err_to_unit(path, tokens, e, "in package initialization"))?;
            i = out.end;
            break;
        }
        // Skip overriding indicators in front of subprogram bodies.
        let mut j = i;
        while tokens
            .get(j)
            .is_some_and(|t| t.is_ident("not") || t.is_ident("overriding"))
        {
            j += 1;
        }
        let head = tokens.get(j);
        let is_subprogram = head.is_some_and(|t| t.is_ident("procedure") || t.is_ident("function"));
        if is_subprogram && opens_end_construct(tokens, j + 1) {
            let kind = if tokens[j].is_ident("function") {
                SubprogramKind::Function
            } else {
                SubprogramKind::Procedure
            };
            let name_tok = tokens
                .get(j + 1)
                .ok_or_else(|| unit_error(path, tokens[j].line, "missing subprogram name"))?;
            let name = match name_tok.kind {
                TokenKind::Ident if !lexer::is_reserved(&name_tok.text) => name_tok.text.clone(),
                // Operator bodies: `function "+" (...)`.
                TokenKind::Str => name_tok.text.clone(),
                _ => return Err(unit_error(path, name_tok.line, "expected subprogram name")),
            };
            let out = scan_balanced(tokens, i, 0).map_err(|e| {
                scan_err_to_unit(path, tokens, e, &format!("in subprogram `{name}`"))
            })?;
            let span = (tokens[i].offset, tokens[out.end - 1].end());
            let hash = hash_tokens(&tokens[i..out.end]);
            subs.push(RawSubprogram {
                name,
                kind,
                span,
                hash,
            });
            i = out.end;
            continue;
        }
        if is_subprogram || head.is_some_and(|t| t.is_ident("package")) {
            record_instantiation(path, tokens, j, withs);
        }
        let out = scan_balanced(tokens, i, 0)
            .map_err(|e| scan_err_to_unit(path, tokens, e, "in package body"))?;
        i = out.end;
    }
    if i != tokens.len() {
        return Err(unit_error(
            path,
            tokens[i.min(tokens.len() - 1)].line,
            "unexpected tokens after end of unit",
        ));
    }
    Ok(subs)
}

/// Byte offset just after the `begin` keyword opening the statement part of
/// the subprogram body at `span`, for synthesizing edits.
pub fn body_begin_offset(text: &str, span: (usize, usize)) -> Option<usize> {
    let tokens = lex(text).ok()?;
    let start = tokens.iter().position(|t| t.offset == span.0)?;
    let out = scan_balanced(&tokens, start, 0).ok()?;
    out.body_begin.map(|bi| tokens[bi].end())
}

/// Proper ancestor package names of a (possibly child) package, outermost
/// first: `a.b.c` has ancestors `a` and `a.b`.
pub fn ancestor_packages(name: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut acc = String::new();
    let parts: Vec<&str> = name.split('.').collect();
    for part in &parts[..parts.len().saturating_sub(1)] {
        if !acc.is_empty() {
            acc.push('.');
        }
        acc.push_str(part);
        out.push(acc.clone());
    }
    out
}

/// Parse every `.ads`/`.adb` under `root`, in path order.
pub fn parse_units(root: &Path) -> Result<Vec<ParsedUnit>> {
    let mut paths: Vec<PathBuf> = Vec::new();
    for entry in WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| Error::Io {
            path: root.to_path_buf(),
            source: e.into(),
        })?;
        if !entry.file_type().is_file() {
            continue;
        }
        let ext = entry
            .path()
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_lowercase());
        if matches!(ext.as_deref(), Some("ads") | Some("adb")) {
            paths.push(entry.path().to_path_buf());
        }
    }
    paths.sort();

    let mut parsed = Vec::new();
    let mut failures: Vec<UnitError> = Vec::new();
    for path in paths {
        let bytes = std::fs::read(&path).map_err(|e| Error::Io {
            path: path.clone(),
            source: e,
        })?;
        let text = match String::from_utf8(bytes) {
            Ok(t) => t,
            Err(_) => {
                failures.push(unit_error(&path, 1, "file is not valid UTF-8"));
                continue;
            }
        };
        match parse_source(path, text) {
            Ok(pu) => parsed.push(pu),
            Err(Error::Parse(e)) => failures.push(e),
            Err(other) => return Err(other),
        }
    }
    if !failures.is_empty() {
        return Err(Error::ParseErrors(failures));
    }
    Ok(parsed)
}

/// Merge unit contributions into a snapshot. Rejects duplicate spec or body
/// units for one package.
pub fn assemble_snapshot(units: &[ParsedUnit]) -> Result<Snapshot> {
    struct Build<'a> {
        spec: Option<&'a ParsedUnit>,
        body: Option<&'a ParsedUnit>,
    }
    let mut builds: BTreeMap<String, Build> = BTreeMap::new();
    for pu in units {
        let entry = builds
            .entry(pu.contribution.package_name.clone())
            .or_insert(Build {
                spec: None,
                body: None,
            });
        let (slot, kind_name) = match pu.contribution.kind {
            UnitKind::Spec => (&mut entry.spec, "spec"),
            UnitKind::Body => (&mut entry.body, "body"),
        };
        if let Some(existing) = slot {
            return Err(Error::DuplicateUnit {
                package: pu.contribution.package_name.clone(),
                kind: kind_name,
                first: existing.unit.path.clone(),
                second: pu.unit.path.clone(),
            });
        }
        *slot = Some(pu);
    }

    let mut packages = BTreeMap::new();
    for (name, build) in builds {
        let mut spec_withs: Vec<String> = build
            .spec
            .map(|u| u.contribution.withs.clone())
            .unwrap_or_default();
        spec_withs.extend(ancestor_packages(&name));
        spec_withs.sort();
        spec_withs.dedup();
        spec_withs.retain(|w| w != &name);

        let body_withs = build
            .body
            .map(|u| u.contribution.withs.clone())
            .unwrap_or_default();

        let mut subprograms = Vec::new();
        if let Some(body) = build.body {
            let raws = &body.contribution.subprograms;
            let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
            for raw in raws {
                *counts.entry(raw.name.as_str()).or_insert(0) += 1;
            }
            let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
            for raw in raws {
                let qualified_name = if counts[raw.name.as_str()] > 1 {
                    let ordinal = seen.entry(raw.name.as_str()).or_insert(0);
                    *ordinal += 1;
                    format!("{name}.{}#{}", raw.name, ordinal)
                } else {
                    format!("{name}.{}", raw.name)
                };
                subprograms.push(SubprogramDecl {
                    body_span: raw.span,
                    kind: raw.kind,
                    normalized_hash: raw.hash.clone(),
                    qualified_name,
                });
            }
        }

        packages.insert(
            name.clone(),
            PackageModel {
                body_residue_hash: build.body.map(|u| u.contribution.residue_hash.clone()),
                body_withs,
                name,
                spec_residue_hash: build.spec.map(|u| u.contribution.residue_hash.clone()),
                spec_withs,
                subprograms,
            },
        );
    }

    Ok(Snapshot::new(packages))
}

/// Parse a source tree into a snapshot.
pub fn parse_tree(root: &Path) -> Result<Snapshot> {
    assemble_snapshot(&parse_units(root)?)
}
