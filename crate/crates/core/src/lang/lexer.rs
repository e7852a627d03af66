use thiserror::Error;

use super::token::{Token, TokenKind};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LexError {
    #[error("line {line}:{col}: unrecognized character {ch:?}")]
    UnrecognizedChar { ch: char, line: u32, col: u32 },
    #[error("line {line}:{col}: unterminated string literal")]
    UnterminatedString { line: u32, col: u32 },
    #[error("line {line}:{col}: invalid escape sequence '\\{ch}'")]
    BadEscape { ch: char, line: u32, col: u32 },
    #[error("line {line}:{col}: numeric literal {text:?} out of range")]
    NumberOutOfRange { text: String, line: u32, col: u32 },
}

struct Scanner<'a> {
    src: &'a [u8],
    pos: usize,
    line: u32,
    col: u32,
}

impl<'a> Scanner<'a> {
    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn peek2(&self) -> Option<u8> {
        self.src.get(self.pos + 1).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let b = self.peek()?;
        self.pos += 1;
        if b == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(b)
    }
}

/// Scans source text into tokens. Whitespace and `#` line comments are
/// dropped; tokens carry 1-based line and column of their first
/// character.
pub fn tokenize(source: &str) -> Result<Vec<Token>, LexError> {
    let mut s = Scanner { src: source.as_bytes(), pos: 0, line: 1, col: 1 };
    let mut tokens = Vec::new();

    while let Some(b) = s.peek() {
        let (line, col) = (s.line, s.col);
        let simple = |kind| Token { kind, lexeme: String::new(), line, col };
        match b {
            b' ' | b'\t' | b'\r' | b'\n' => {
                s.bump();
            }
            b'#' => {
                while let Some(c) = s.peek() {
                    if c == b'\n' {
                        break;
                    }
                    s.bump();
                }
            }
            b'0'..=b'9' => {
                let start = s.pos;
                while matches!(s.peek(), Some(b'0'..=b'9')) {
                    s.bump();
                }
                let mut kind = TokenKind::Int;
                if s.peek() == Some(b'.') && matches!(s.peek2(), Some(b'0'..=b'9')) {
                    kind = TokenKind::Float;
                    s.bump();
                    while matches!(s.peek(), Some(b'0'..=b'9')) {
                        s.bump();
                    }
                }
                let text = &source[start..s.pos];
                let valid = match kind {
                    TokenKind::Int => text.parse::<i64>().is_ok(),
                    _ => text.parse::<f64>().map(f64::is_finite).unwrap_or(false),
                };
                if !valid {
                    return Err(LexError::NumberOutOfRange { text: text.into(), line, col });
                }
                tokens.push(Token { kind, lexeme: text.into(), line, col });
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let start = s.pos;
                while matches!(s.peek(), Some(b'a'..=b'z' | b'A'..=b'Z' | b'0'..=b'9' | b'_')) {
                    s.bump();
                }
                let text = &source[start..s.pos];
                match TokenKind::keyword(text) {
                    Some(kind) => tokens.push(Token { kind, lexeme: String::new(), line, col }),
                    None => tokens.push(Token { kind: TokenKind::Ident, lexeme: text.into(), line, col }),
                }
            }
            b'"' => {
                s.bump();
                let mut text = String::new();
                loop {
                    match s.bump() {
                        None | Some(b'\n') => {
                            return Err(LexError::UnterminatedString { line, col });
                        }
                        Some(b'"') => break,
                        Some(b'\\') => match s.bump() {
                            Some(b'"') => text.push('"'),
                            Some(b'\\') => text.push('\\'),
                            Some(b'n') => text.push('\n'),
                            Some(b't') => text.push('\t'),
                            Some(other) => {
                                return Err(LexError::BadEscape {
                                    ch: other as char,
                                    line: s.line,
                                    col: s.col,
                                })
                            }
                            None => return Err(LexError::UnterminatedString { line, col }),
                        },
                        Some(other) if other < 0x80 => text.push(other as char),
                        Some(_) => {
                            // Re-decode the UTF-8 sequence starting one byte back.
                            let rest = &source[s.pos - 1..];
                            let ch = rest.chars().next().unwrap();
                            text.push(ch);
                            for _ in 1..ch.len_utf8() {
                                s.bump();
                            }
                        }
                    }
                }
                tokens.push(Token { kind: TokenKind::Str, lexeme: text, line, col });
            }
            b':' => {
                s.bump();
                if s.peek() == Some(b'=') {
                    s.bump();
                    tokens.push(simple(TokenKind::Declare));
                } else {
                    tokens.push(simple(TokenKind::Colon));
                }
            }
            b'<' => {
                s.bump();
                match s.peek() {
                    Some(b'<') => {
                        s.bump();
                        tokens.push(simple(TokenKind::EmitOp));
                    }
                    Some(b'=') => {
                        s.bump();
                        tokens.push(simple(TokenKind::Le));
                    }
                    _ => tokens.push(simple(TokenKind::Lt)),
                }
            }
            b'>' => {
                s.bump();
                if s.peek() == Some(b'=') {
                    s.bump();
                    tokens.push(simple(TokenKind::Ge));
                } else {
                    tokens.push(simple(TokenKind::Gt));
                }
            }
            b'=' => {
                s.bump();
                if s.peek() == Some(b'=') {
                    s.bump();
                    tokens.push(simple(TokenKind::EqEq));
                } else {
                    tokens.push(simple(TokenKind::Assign));
                }
            }
            b'!' => {
                s.bump();
                if s.peek() == Some(b'=') {
                    s.bump();
                    tokens.push(simple(TokenKind::Ne));
                } else {
                    return Err(LexError::UnrecognizedChar { ch: '!', line, col });
                }
            }
            b'+' => {
                s.bump();
                if s.peek() == Some(b'+') {
                    s.bump();
                    tokens.push(simple(TokenKind::PlusPlus));
                } else {
                    tokens.push(simple(TokenKind::Plus));
                }
            }
            b'-' => {
                s.bump();
                if s.peek() == Some(b'>') {
                    s.bump();
                    tokens.push(simple(TokenKind::Arrow));
                } else {
                    tokens.push(simple(TokenKind::Minus));
                }
            }
            b'*' => {
                s.bump();
                tokens.push(simple(TokenKind::Star));
            }
            b'/' => {
                s.bump();
                tokens.push(simple(TokenKind::Slash));
            }
            b';' => {
                s.bump();
                tokens.push(simple(TokenKind::Semi));
            }
            b'.' => {
                s.bump();
                tokens.push(simple(TokenKind::Dot));
            }
            b',' => {
                s.bump();
                tokens.push(simple(TokenKind::Comma));
            }
            b'(' => {
                s.bump();
                tokens.push(simple(TokenKind::LParen));
            }
            b')' => {
                s.bump();
                tokens.push(simple(TokenKind::RParen));
            }
            b'{' => {
                s.bump();
                tokens.push(simple(TokenKind::LBrace));
            }
            b'}' => {
                s.bump();
                tokens.push(simple(TokenKind::RBrace));
            }
            b'[' => {
                s.bump();
                tokens.push(simple(TokenKind::LBracket));
            }
            b']' => {
                s.bump();
                tokens.push(simple(TokenKind::RBracket));
            }
            _ => {
                let ch = source[s.pos..].chars().next().unwrap();
                return Err(LexError::UnrecognizedChar { ch, line, col });
            }
        }
    }
    Ok(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<TokenKind> {
        tokenize(src).unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn input_declaration() {
        use TokenKind::*;
        assert_eq!(
            kinds("p: County = input;"),
            vec![Ident, Colon, Ident, Assign, KwInput, Semi]
        );
    }

    #[test]
    fn empty_source_yields_no_tokens() {
        assert_eq!(tokenize("").unwrap(), vec![]);
    }

    #[test]
    fn unrecognized_character_reports_position() {
        let err = tokenize("speed << 3.5 @").unwrap_err();
        assert_eq!(err, LexError::UnrecognizedChar { ch: '@', line: 1, col: 14 });
    }

    #[test]
    fn comments_and_whitespace_dropped() {
        let toks = tokenize("# heading\n  x := 1; # trailing\n").unwrap();
        assert_eq!(toks.len(), 4);
        assert_eq!(toks[0].line, 2);
        assert_eq!(toks[0].col, 3);
    }

    #[test]
    fn compound_operators_take_maximal_munch() {
        use TokenKind::*;
        assert_eq!(kinds("a << b < c <= d := e == f != g++ -> -"), vec![
            Ident, EmitOp, Ident, Lt, Ident, Le, Ident, Declare, Ident, EqEq, Ident, Ne, Ident,
            PlusPlus, Arrow, Minus,
        ]);
    }

    #[test]
    fn string_literals_decode_escapes() {
        let toks = tokenize(r#"d := "5-11-2017"; s := "a\"b";"#).unwrap();
        assert_eq!(toks[2].lexeme, "5-11-2017");
        assert_eq!(toks[6].lexeme, "a\"b");
    }

    #[test]
    fn floats_need_digits_on_both_sides() {
        assert_eq!(kinds("1.5"), vec![TokenKind::Float]);
        // `1.` scans as an integer followed by a field-access dot.
        assert_eq!(kinds("1."), vec![TokenKind::Int, TokenKind::Dot]);
        assert_eq!(kinds("p.grid"), vec![TokenKind::Ident, TokenKind::Dot, TokenKind::Ident]);
    }
}
