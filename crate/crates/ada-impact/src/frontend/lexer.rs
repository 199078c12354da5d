//! Tokenizer for the supported Ada subset.
//!
//! Comments are dropped, identifiers are lowercased (Ada identifiers are
//! case-insensitive), and string/character literals are kept verbatim as
//! single tokens so that `--` inside a string never starts a comment.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    /// Identifier or reserved word, lowercased.
    Ident,
    /// Numeric literal, lowercased (Ada numeric literals are case-insensitive).
    Number,
    /// String literal including the surrounding quotes, verbatim.
    Str,
    /// Character literal including the surrounding ticks, verbatim.
    Char,
    /// Operator or delimiter.
    Punct,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    /// Normalized text (lowercased except string/char literals).
    pub text: String,
    /// Byte offset of the token start in the original source.
    pub offset: usize,
    /// Byte length of the token in the original source.
    pub len: usize,
    pub line: u32,
}

impl Token {
    pub fn is(&self, text: &str) -> bool {
        self.text == text
    }

    pub fn is_punct(&self, text: &str) -> bool {
        self.kind == TokenKind::Punct && self.text == text
    }

    pub fn is_ident(&self, text: &str) -> bool {
        self.kind == TokenKind::Ident && self.text == text
    }

    /// End byte offset (exclusive) in the original source.
    pub fn end(&self) -> usize {
        self.offset + self.len
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexError {
    pub line: u32,
    pub message: String,
}

/// Ada 2012 reserved words, sorted for binary search.
const RESERVED: &[&str] = &[
    "abort",
    "abs",
    "abstract",
    "accept",
    "access",
    "aliased",
    "all",
    "and",
    "array",
    "at",
    "begin",
    "body",
    "case",
    "constant",
    "declare",
    "delay",
    "delta",
    "digits",
    "do",
    "else",
    "elsif",
    "end",
    "entry",
    "exception",
    "exit",
    "for",
    "function",
    "generic",
    "goto",
    "if",
    "in",
    "interface",
    "is",
    "limited",
    "loop",
    "mod",
    "new",
    "not",
    "null",
    "of",
    "or",
    "others",
    "out",
    "overriding",
    "package",
    "pragma",
    "private",
    "procedure",
    "protected",
    "raise",
    "range",
    "record",
    "rem",
    "renames",
    "requeue",
    "return",
    "reverse",
    "select",
    "separate",
    "some",
    "subtype",
    "synchronized",
    "tagged",
    "task",
    "terminate",
    "then",
    "type",
    "until",
    "use",
    "when",
    "while",
    "with",
    "xor",
];

pub fn is_reserved(word: &str) -> bool {
    RESERVED.binary_search(&word).is_ok()
}

const TWO_CHAR_OPS: &[&str] = &[":=", "=>", "..", "**", "/=", ">=", "<=", "<<", ">>", "<>"];

/// Tokenize Ada source text.
pub fn lex(text: &str) -> Result<Vec<Token>, LexError> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let n = chars.len();
    let mut tokens = Vec::new();
    let mut line: u32 = 1;
    let mut i = 0;

    // Whether the previous token can end a value expression. A tick after
    // such a token is an attribute/qualification tick, not a character
    // literal, which disambiguates `Foo'Image` from `'a'`.
    let prev_is_value = |tokens: &[Token]| -> bool {
        match tokens.last() {
            Some(t) => match t.kind {
                TokenKind::Ident => !is_reserved(&t.text) || t.text == "all",
                TokenKind::Number | TokenKind::Str | TokenKind::Char => true,
                TokenKind::Punct => t.text == ")",
            },
            None => false,
        }
    };

    while i < n {
        let (off, c) = chars[i];
        if c == '\n' {
            line += 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        // Comment: `--` to end of line.
        if c == '-' && i + 1 < n && chars[i + 1].1 == '-' {
            while i < n && chars[i].1 != '\n' {
                i += 1;
            }
            continue;
        }
        // String literal. A doubled quote is an embedded quote.
        if c == '"' {
            let start_line = line;
            let mut j = i + 1;
            loop {
                if j >= n || chars[j].1 == '\n' {
                    return Err(LexError {
                        line: start_line,
                        message: "unterminated string literal".to_string(),
                    });
                }
                if chars[j].1 == '"' {
                    if j + 1 < n && chars[j + 1].1 == '"' {
                        j += 2;
                        continue;
                    }
                    break;
                }
                j += 1;
            }
            let end = byte_end(&chars, j, text);
            tokens.push(Token {
                kind: TokenKind::Str,
                text: text[off..end].to_string(),
                offset: off,
                len: end - off,
                line: start_line,
            });
            i = j + 1;
            continue;
        }
        // Character literal: a tick enclosing exactly one character, unless
        // the previous token makes this an attribute tick.
        if c == '\'' && i + 2 < n && chars[i + 2].1 == '\'' && !prev_is_value(&tokens) {
            let end = byte_end(&chars, i + 2, text);
            tokens.push(Token {
                kind: TokenKind::Char,
                text: text[off..end].to_string(),
                offset: off,
                len: end - off,
                line,
            });
            i += 3;
            continue;
        }
        // Identifier or reserved word.
        if c.is_alphabetic() {
            let mut j = i + 1;
            while j < n && (chars[j].1.is_alphanumeric() || chars[j].1 == '_') {
                j += 1;
            }
            let end = byte_end(&chars, j - 1, text);
            tokens.push(Token {
                kind: TokenKind::Ident,
                text: text[off..end].to_lowercase(),
                offset: off,
                len: end - off,
                line,
            });
            i = j;
            continue;
        }
        // Numeric literal, including based (16#FF#) and exponent forms.
        if c.is_ascii_digit() {
            let mut j = i + 1;
            while j < n && (chars[j].1.is_ascii_digit() || chars[j].1 == '_') {
                j += 1;
            }
            if j < n && chars[j].1 == '#' {
                j += 1;
                while j < n && chars[j].1 != '#' && chars[j].1 != '\n' {
                    j += 1;
                }
                if j < n && chars[j].1 == '#' {
                    j += 1;
                }
            } else if j + 1 < n && chars[j].1 == '.' && chars[j + 1].1.is_ascii_digit() {
                j += 1;
                while j < n && (chars[j].1.is_ascii_digit() || chars[j].1 == '_') {
                    j += 1;
                }
            }
            if j < n && (chars[j].1 == 'e' || chars[j].1 == 'E') {
                let mut k = j + 1;
                if k < n && (chars[k].1 == '+' || chars[k].1 == '-') {
                    k += 1;
                }
                if k < n && chars[k].1.is_ascii_digit() {
                    j = k;
                    while j < n && (chars[j].1.is_ascii_digit() || chars[j].1 == '_') {
                        j += 1;
                    }
                }
            }
            let end = byte_end(&chars, j - 1, text);
            tokens.push(Token {
                kind: TokenKind::Number,
                text: text[off..end].to_lowercase(),
                offset: off,
                len: end - off,
                line,
            });
            i = j;
            continue;
        }
        // Operators and delimiters.
        let two = if i + 1 < n {
            let end = byte_end(&chars, i + 1, text);
            Some(&text[off..end])
        } else {
            None
        };
        if let Some(op) = two.filter(|s| TWO_CHAR_OPS.contains(s)) {
            tokens.push(Token {
                kind: TokenKind::Punct,
                text: op.to_string(),
                offset: off,
                len: op.len(),
                line,
            });
            i += 2;
            continue;
        }
        let end = byte_end(&chars, i, text);
        tokens.push(Token {
            kind: TokenKind::Punct,
            text: text[off..end].to_string(),
            offset: off,
            len: end - off,
            line,
        });
        i += 1;
    }

    Ok(tokens)
}

/// Byte offset just past the char at `chars[idx]`.
fn byte_end(chars: &[(usize, char)], idx: usize, text: &str) -> usize {
    if idx + 1 < chars.len() {
        chars[idx + 1].0
    } else {
        text.len()
    }
}

/// Join normalized token texts with single spaces. Hashing this string makes
/// comment, whitespace and identifier-case edits invisible.
pub fn normalized_text(tokens: &[Token]) -> String {
    let mut out = String::new();
    for (i, t) in tokens.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(&t.text);
    }
    out
}
