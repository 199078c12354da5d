//! Bracket matching over the token stream.
//!
//! Ada closes many constructs with `end`, so finding the extent of a
//! subprogram body means tracking every construct that will consume one:
//! nested subprograms, blocks, `if`/`case`/`loop` statements, record
//! definitions, task and protected bodies. Constructs are only tracked at
//! parenthesis depth zero; conditional and quantified *expressions* are
//! always parenthesized and never see an `end`.
//!
//! Closers are validated the way Ada requires (`end if` for an `if`, a
//! matching name for a named unit), which is what turns a missing `end`
//! inside a subprogram into an error naming that subprogram instead of a
//! silently misparsed tree.

use super::lexer::{is_reserved, Token, TokenKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScanError {
    /// Index of the offending token, or None at end of input.
    pub at: Option<usize>,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum FrameKind {
    /// Subprogram, package, task, protected, entry, block, declare, or
    /// accept/extended-return body: closed by `end [name];`.
    Unit,
    If,
    Case,
    Loop,
    Record,
    Select,
}

impl FrameKind {
    fn describe(self) -> &'static str {
        match self {
            FrameKind::Unit => "end",
            FrameKind::If => "end if",
            FrameKind::Case => "end case",
            FrameKind::Loop => "end loop",
            FrameKind::Record => "end record",
            FrameKind::Select => "end select",
        }
    }
}

#[derive(Debug, Clone)]
struct Frame {
    kind: FrameKind,
    /// Defining name for named units, used to validate `end <name>;`.
    name: Option<String>,
    /// The construct's own `begin` has not been seen yet; the next `begin`
    /// at this level belongs to it rather than opening a block.
    awaiting_begin: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct ScanOutcome {
    /// Token index just past the terminating `;`.
    pub end: usize,
    /// Token index of the `begin` starting the outermost construct's
    /// statement part, when the item scanned is a body with one.
    pub body_begin: Option<usize>,
}

/// Keywords that may introduce an `end`-terminated unit, decided by lookahead.
fn is_unit_keyword(text: &str) -> bool {
    matches!(
        text,
        "procedure" | "function" | "package" | "task" | "protected" | "entry"
    )
}

/// Decide whether the declaration whose introducing keyword sits just before
/// `from` opens a construct that will be closed by `end`. Declarations,
/// renamings, instantiations, null procedures and expression functions all
/// terminate at a `;` without one.
pub fn opens_end_construct(tokens: &[Token], from: usize) -> bool {
    let mut paren = 0usize;
    let mut i = from;
    while i < tokens.len() {
        let t = &tokens[i];
        if t.is_punct("(") {
            paren += 1;
        } else if t.is_punct(")") {
            paren = paren.saturating_sub(1);
        } else if paren == 0 {
            if t.is_punct(";") {
                return false;
            }
            if t.is_ident("is") {
                return match tokens.get(i + 1) {
                    Some(next) if next.is_ident("new") => false,
                    Some(next) if next.is_ident("abstract") => false,
                    Some(next) if next.is_ident("separate") => false,
                    Some(next) if next.is_ident("null") => false,
                    Some(next) if next.is_punct("(") => false,
                    _ => true,
                };
            }
            if t.is_ident("do") {
                return true;
            }
        }
        i += 1;
    }
    false
}

/// Defining name of the unit introduced at `kw_idx`, skipping `body`/`type`.
fn unit_name(tokens: &[Token], kw_idx: usize) -> Option<String> {
    let mut j = kw_idx + 1;
    while tokens
        .get(j)
        .is_some_and(|t| t.is_ident("body") || t.is_ident("type"))
    {
        j += 1;
    }
    read_name(tokens, j).map(|(name, _)| name)
}

/// Read a dotted name (or operator string) at `i`.
fn read_name(tokens: &[Token], mut i: usize) -> Option<(String, usize)> {
    let first = tokens.get(i)?;
    match first.kind {
        TokenKind::Str => Some((first.text.clone(), i + 1)),
        TokenKind::Ident if !is_reserved(&first.text) => {
            let mut name = first.text.clone();
            i += 1;
            while tokens.get(i).is_some_and(|t| t.is_punct("."))
                && tokens
                    .get(i + 1)
                    .is_some_and(|t| t.kind == TokenKind::Ident && !is_reserved(&t.text))
            {
                name.push('.');
                name.push_str(&tokens[i + 1].text);
                i += 2;
            }
            Some((name, i))
        }
        _ => None,
    }
}

/// Scan one declarative item or statement sequence starting at `start`,
/// matching nested constructs, until the construct stack is empty and a
/// terminating `;` has been consumed. `open_frames` pre-seeds the stack for
/// scanning a statement part whose opener has already been consumed; with
/// `open_frames == 0` this consumes exactly one declarative item or body.
pub fn scan_balanced(
    tokens: &[Token],
    start: usize,
    open_frames: usize,
) -> Result<ScanOutcome, ScanError> {
    let mut stack: Vec<Frame> = (0..open_frames)
        .map(|_| Frame {
            kind: FrameKind::Unit,
            name: None,
            awaiting_begin: false,
        })
        .collect();
    let mut paren = 0usize;
    let mut body_begin = None;
    let mut i = start;

    while i < tokens.len() {
        let t = &tokens[i];
        if t.is_punct("(") {
            paren += 1;
            i += 1;
            continue;
        }
        if t.is_punct(")") {
            paren = paren.saturating_sub(1);
            i += 1;
            continue;
        }
        if paren > 0 {
            i += 1;
            continue;
        }
        if t.is_punct(";") {
            i += 1;
            if stack.is_empty() {
                return Ok(ScanOutcome { end: i, body_begin });
            }
            continue;
        }
        if t.kind != TokenKind::Ident {
            i += 1;
            continue;
        }
        match t.text.as_str() {
            kw if is_unit_keyword(kw) => {
                if opens_end_construct(tokens, i + 1) {
                    stack.push(Frame {
                        kind: FrameKind::Unit,
                        name: unit_name(tokens, i),
                        awaiting_begin: true,
                    });
                }
                i += 1;
            }
            "if" => {
                stack.push(Frame {
                    kind: FrameKind::If,
                    name: None,
                    awaiting_begin: false,
                });
                i += 1;
            }
            "case" => {
                stack.push(Frame {
                    kind: FrameKind::Case,
                    name: None,
                    awaiting_begin: false,
                });
                i += 1;
            }
            "loop" => {
                stack.push(Frame {
                    kind: FrameKind::Loop,
                    name: None,
                    awaiting_begin: false,
                });
                i += 1;
            }
            "select" => {
                stack.push(Frame {
                    kind: FrameKind::Select,
                    name: None,
                    awaiting_begin: false,
                });
                i += 1;
            }
            "record" => {
                // `null record` has no `end record`; `end record` is consumed
                // by the `end` branch and never reaches here.
                let after_null = i > 0 && tokens[i - 1].is_ident("null");
                if !after_null {
                    stack.push(Frame {
                        kind: FrameKind::Record,
                        name: None,
                        awaiting_begin: false,
                    });
                }
                i += 1;
            }
            "declare" => {
                stack.push(Frame {
                    kind: FrameKind::Unit,
                    name: None,
                    awaiting_begin: true,
                });
                i += 1;
            }
            "do" => {
                // Extended return or accept statement body.
                stack.push(Frame {
                    kind: FrameKind::Unit,
                    name: None,
                    awaiting_begin: false,
                });
                i += 1;
            }
            "begin" => {
                match stack.last_mut() {
                    Some(top) if top.awaiting_begin => {
                        top.awaiting_begin = false;
                        if stack.len() == 1 && body_begin.is_none() {
                            body_begin = Some(i);
                        }
                    }
                    _ => stack.push(Frame {
                        kind: FrameKind::Unit,
                        name: None,
                        awaiting_begin: false,
                    }),
                }
                i += 1;
            }
            "end" => {
                let end_idx = i;
                let Some(frame) = stack.pop() else {
                    return Err(ScanError {
                        at: Some(i),
                        message: "unbalanced `end`".to_string(),
                    });
                };
                i += 1;
                let mut closer_kw: Option<&str> = None;
                let mut closer_name: Option<String> = None;
                if let Some(next) = tokens.get(i) {
                    if next.kind == TokenKind::Ident
                        && matches!(
                            next.text.as_str(),
                            "if" | "case" | "loop" | "record" | "select" | "return"
                        )
                    {
                        closer_kw = Some(match next.text.as_str() {
                            "if" => "if",
                            "case" => "case",
                            "loop" => "loop",
                            "record" => "record",
                            "select" => "select",
                            _ => "return",
                        });
                        i += 1;
                    } else if let Some((name, ni)) = read_name(tokens, i) {
                        closer_name = Some(name);
                        i = ni;
                    }
                }
                let matches_kind = match frame.kind {
                    FrameKind::If => closer_kw == Some("if"),
                    FrameKind::Case => closer_kw == Some("case"),
                    FrameKind::Loop => closer_kw == Some("loop"),
                    FrameKind::Record => closer_kw == Some("record"),
                    FrameKind::Select => closer_kw == Some("select"),
                    FrameKind::Unit => {
                        closer_kw.is_none() || (closer_kw == Some("return") && frame.name.is_none())
                    }
                };
                if !matches_kind {
                    return Err(ScanError {
                        at: Some(end_idx),
                        message: format!(
                            "expected `{}` to close the construct",
                            frame.kind.describe()
                        ),
                    });
                }
                if let (Some(expected), Some(found)) = (&frame.name, &closer_name) {
                    if expected != found {
                        return Err(ScanError {
                            at: Some(end_idx),
                            message: format!(
                                "`end {found};` does not match the unit name `{expected}`"
                            ),
                        });
                    }
                }
                while i < tokens.len() && !tokens[i].is_punct(";") {
                    i += 1;
                }
                if i >= tokens.len() {
                    return Err(ScanError {
                        at: None,
                        message: "missing `;` after `end`".to_string(),
                    });
                }
                i += 1;
                if stack.is_empty() {
                    return Ok(ScanOutcome { end: i, body_begin });
                }
            }
            _ => {
                i += 1;
            }
        }
    }

    Err(ScanError {
        at: None,
        message: "unexpected end of input inside construct".to_string(),
    })
}
