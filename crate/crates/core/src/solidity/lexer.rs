//! Tolerant Solidity tokenizer.
//!
//! Produces a flat token stream plus the comment list (comments feed the
//! placeholder lint). Never fails: unterminated strings and comments are
//! closed at end of line / end of input so arbitrary byte input cannot
//! derail the structural parser.

/// Token category.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokKind {
    Ident,
    Number,
    Str,
    /// Structural punctuation: `( ) { } [ ] ; , .`
    Punct,
    /// Everything else: operators, possibly multi-character.
    Op,
}

#[derive(Debug, Clone)]
pub struct Token {
    pub kind: TokKind,
    pub text: String,
    /// 1-based source line of the token start.
    pub line: u32,
}

impl Token {
    pub fn is(&self, text: &str) -> bool {
        self.text == text
    }

    pub fn is_ident(&self, text: &str) -> bool {
        self.kind == TokKind::Ident && self.text == text
    }
}

#[derive(Debug, Clone)]
pub struct Comment {
    pub line: u32,
    pub text: String,
}

#[derive(Debug, Default)]
pub struct LexOutput {
    pub tokens: Vec<Token>,
    pub comments: Vec<Comment>,
}

const MULTI_OPS: [&str; 26] = [
    ">>=", "<<=", "**", "==", "!=", "<=", ">=", "&&", "||", "+=", "-=", "*=", "/=", "%=", "^=",
    "|=", "&=", "<<", ">>", "=>", "->", "++", "--", ":=", "=:", "?.",
];

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_' || c == '$'
}

fn is_ident_body(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '$'
}

/// Tokenize Solidity source. Total: any UTF-8 input yields a token stream.
pub fn lex(source: &str) -> LexOutput {
    let chars: Vec<char> = source.chars().collect();
    let mut out = LexOutput::default();
    let mut i = 0usize;
    let mut line: u32 = 1;
    let n = chars.len();

    while i < n {
        let c = chars[i];
        if c == '\n' {
            line += 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        // Comments.
        if c == '/' && i + 1 < n {
            if chars[i + 1] == '/' {
                let start_line = line;
                let mut j = i + 2;
                while j < n && chars[j] != '\n' {
                    j += 1;
                }
                out.comments.push(Comment {
                    line: start_line,
                    text: chars[i + 2..j].iter().collect(),
                });
                i = j;
                continue;
            }
            if chars[i + 1] == '*' {
                let start_line = line;
                let mut j = i + 2;
                while j + 1 < n && !(chars[j] == '*' && chars[j + 1] == '/') {
                    if chars[j] == '\n' {
                        line += 1;
                    }
                    j += 1;
                }
                let end = j.min(n);
                out.comments.push(Comment {
                    line: start_line,
                    text: chars[i + 2..end].iter().collect(),
                });
                i = if j + 1 < n { j + 2 } else { n };
                continue;
            }
        }
        // Strings. Solidity string literals do not span lines; an
        // unterminated literal is closed at the line end.
        if c == '"' || c == '\'' {
            let quote = c;
            let start_line = line;
            let mut j = i + 1;
            let mut text = String::new();
            while j < n && chars[j] != quote && chars[j] != '\n' {
                if chars[j] == '\\' && j + 1 < n {
                    text.push(chars[j + 1]);
                    j += 2;
                } else {
                    text.push(chars[j]);
                    j += 1;
                }
            }
            i = if j < n && chars[j] == quote { j + 1 } else { j };
            out.tokens.push(Token {
                kind: TokKind::Str,
                text,
                line: start_line,
            });
            continue;
        }
        // Identifiers and keywords.
        if is_ident_start(c) {
            let mut j = i + 1;
            while j < n && is_ident_body(chars[j]) {
                j += 1;
            }
            out.tokens.push(Token {
                kind: TokKind::Ident,
                text: chars[i..j].iter().collect(),
                line,
            });
            i = j;
            continue;
        }
        // Numbers: decimal, hex, scientific, underscore separators.
        if c.is_ascii_digit() {
            let mut j = i + 1;
            if c == '0' && j < n && (chars[j] == 'x' || chars[j] == 'X') {
                j += 1;
                while j < n && (chars[j].is_ascii_hexdigit() || chars[j] == '_') {
                    j += 1;
                }
            } else {
                let mut seen_dot = false;
                while j < n {
                    let d = chars[j];
                    if d.is_ascii_digit() || d == '_' {
                        j += 1;
                    } else if d == '.' && !seen_dot && j + 1 < n && chars[j + 1].is_ascii_digit() {
                        seen_dot = true;
                        j += 1;
                    } else if (d == 'e' || d == 'E')
                        && j + 1 < n
                        && (chars[j + 1].is_ascii_digit()
                            || ((chars[j + 1] == '+' || chars[j + 1] == '-')
                                && j + 2 < n
                                && chars[j + 2].is_ascii_digit()))
                    {
                        j += if chars[j + 1] == '+' || chars[j + 1] == '-' {
                            2
                        } else {
                            1
                        };
                    } else {
                        break;
                    }
                }
            }
            out.tokens.push(Token {
                kind: TokKind::Number,
                text: chars[i..j].iter().collect(),
                line,
            });
            i = j;
            continue;
        }
        // Punctuation and operators.
        if matches!(c, '(' | ')' | '{' | '}' | '[' | ']' | ';' | ',' | '.') {
            out.tokens.push(Token {
                kind: TokKind::Punct,
                text: c.to_string(),
                line,
            });
            i += 1;
            continue;
        }
        let mut matched = None;
        for op in MULTI_OPS {
            let len = op.chars().count();
            if i + len <= n && chars[i..i + len].iter().collect::<String>() == op {
                matched = Some((op.to_string(), len));
                break;
            }
        }
        if let Some((text, len)) = matched {
            out.tokens.push(Token {
                kind: TokKind::Op,
                text,
                line,
            });
            i += len;
        } else {
            out.tokens.push(Token {
                kind: TokKind::Op,
                text: c.to_string(),
                line,
            });
            i += 1;
        }
    }
    out
}

/// Split an identifier into lowercase word tokens on underscores, `$`, and
/// camelCase boundaries: `payRentNow` -> ["pay", "rent", "now"].
pub fn split_ident_tokens(ident: &str) -> Vec<String> {
    let mut words = Vec::new();
    let mut current = String::new();
    let chars: Vec<char> = ident.chars().collect();
    for (idx, &c) in chars.iter().enumerate() {
        if !c.is_ascii_alphanumeric() {
            if !current.is_empty() {
                words.push(std::mem::take(&mut current));
            }
            continue;
        }
        let boundary = if c.is_ascii_uppercase() {
            match chars.get(idx.wrapping_sub(1)) {
                Some(p) if idx > 0 => {
                    p.is_ascii_lowercase()
                        || p.is_ascii_digit()
                        || (p.is_ascii_uppercase()
                            && chars.get(idx + 1).is_some_and(|nx| nx.is_ascii_lowercase()))
                }
                _ => false,
            }
        } else {
            false
        };
        if boundary && !current.is_empty() {
            words.push(std::mem::take(&mut current));
        }
        current.push(c.to_ascii_lowercase());
    }
    if !current.is_empty() {
        words.push(current);
    }
    words
}
