use std::fmt;

use super::{ParseError, SourceSpan};

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    /// Integer or decimal literal, sign included.
    Number(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Colon,
    Semi,
    Tilde,
    Equals,
    Arrow,
    Slash,
    Pipe,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Number(s) => write!(f, "number `{s}`"),
            Tok::LBrace => write!(f, "`{{`"),
            Tok::RBrace => write!(f, "`}}`"),
            Tok::LParen => write!(f, "`(`"),
            Tok::RParen => write!(f, "`)`"),
            Tok::LBracket => write!(f, "`[`"),
            Tok::RBracket => write!(f, "`]`"),
            Tok::Comma => write!(f, "`,`"),
            Tok::Colon => write!(f, "`:`"),
            Tok::Semi => write!(f, "`;`"),
            Tok::Tilde => write!(f, "`~`"),
            Tok::Equals => write!(f, "`=`"),
            Tok::Arrow => write!(f, "`->`"),
            Tok::Slash => write!(f, "`/`"),
            Tok::Pipe => write!(f, "`|`"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub span: SourceSpan,
}

pub(crate) fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < bytes.len() {
        let c = bytes[i];
        let start = (i, line, col);
        let span = |len: usize| SourceSpan { line: start.1, column: start.2, offset: start.0, length: len };
        match c {
            b'\n' => {
                i += 1;
                line += 1;
                col = 1;
                continue;
            }
            b' ' | b'\t' | b'\r' => {
                i += 1;
                col += 1;
                continue;
            }
            b'#' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
                continue;
            }
            _ => {}
        }
        let single = match c {
            b'{' => Some(Tok::LBrace),
            b'}' => Some(Tok::RBrace),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            b'[' => Some(Tok::LBracket),
            b']' => Some(Tok::RBracket),
            b',' => Some(Tok::Comma),
            b':' => Some(Tok::Colon),
            b';' => Some(Tok::Semi),
            b'~' => Some(Tok::Tilde),
            b'=' => Some(Tok::Equals),
            b'/' => Some(Tok::Slash),
            b'|' => Some(Tok::Pipe),
            _ => None,
        };
        if let Some(tok) = single {
            out.push(Token { tok, span: span(1) });
            i += 1;
            col += 1;
            continue;
        }
        if c == b'-' && bytes.get(i + 1) == Some(&b'>') {
            out.push(Token { tok: Tok::Arrow, span: span(2) });
            i += 2;
            col += 2;
            continue;
        }
        let starts_number = c.is_ascii_digit()
            || (c == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit))
            || (c == b'-' && bytes.get(i + 1).is_some_and(|b| b.is_ascii_digit() || *b == b'.'));
        if starts_number {
            let mut j = i + 1;
            let mut seen_dot = c == b'.';
            while j < bytes.len() && (bytes[j].is_ascii_digit() || (bytes[j] == b'.' && !seen_dot)) {
                seen_dot |= bytes[j] == b'.';
                j += 1;
            }
            out.push(Token { tok: Tok::Number(text[i..j].to_string()), span: span(j - i) });
            col += j - i;
            i = j;
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let mut j = i + 1;
            while j < bytes.len() && (bytes[j].is_ascii_alphanumeric() || bytes[j] == b'_') {
                j += 1;
            }
            out.push(Token { tok: Tok::Ident(text[i..j].to_string()), span: span(j - i) });
            col += j - i;
            i = j;
            continue;
        }
        let ch = text[i..].chars().next().expect("in bounds");
        return Err(ParseError {
            span: span(ch.len_utf8()),
            message: format!("unexpected character `{ch}`"),
            expected: Vec::new(),
        });
    }
    out.push(Token { tok: Tok::Eof, span: SourceSpan { line, column: col, offset: text.len(), length: 0 } });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokens_and_positions() {
        let toks = tokenize("exo U ~ bernoulli(0.4) # c\nvar X").unwrap();
        let kinds: Vec<&Tok> = toks.iter().map(|t| &t.tok).collect();
        assert_eq!(kinds[0], &Tok::Ident("exo".into()));
        assert_eq!(kinds[5], &Tok::Number("0.4".into()));
        let var = &toks[7];
        assert_eq!((var.span.line, var.span.column), (2, 1));
    }

    #[test]
    fn arrow_versus_negative_number() {
        let toks = tokenize("(0) -> -1").unwrap();
        assert_eq!(toks[3].tok, Tok::Arrow);
        assert_eq!(toks[4].tok, Tok::Number("-1".into()));
    }

    #[test]
    fn bad_character_has_span() {
        let e = tokenize("var X @").unwrap_err();
        assert_eq!(e.span.column, 7);
    }
}
