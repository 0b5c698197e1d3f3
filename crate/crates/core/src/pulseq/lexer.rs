use alloc::string::String;
use alloc::vec::Vec;

use super::{ParseError, Span};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Int(usize),
    Num(f64),
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Newline,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        use alloc::format;
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(i) => format!("`{i}`"),
            Tok::Num(v) => format!("`{v}`"),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Newline => "end of line".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub span: Span,
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
    line_start: usize,
}

impl Cursor<'_> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek2(&self) -> Option<char> {
        let mut it = self.src[self.pos..].chars();
        it.next();
        it.next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn span_from(&self, start: usize, line: usize, line_start: usize) -> Span {
        Span {
            offset: start,
            len: self.pos - start,
            line,
            col: self.src[line_start..start].chars().count() + 1,
        }
    }
}

pub(crate) fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let mut cur = Cursor {
        src,
        pos: 0,
        line: 1,
        line_start: 0,
    };
    let mut out = Vec::new();
    while let Some(c) = cur.peek() {
        let start = cur.pos;
        let (line, line_start) = (cur.line, cur.line_start);
        let simple = match c {
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '/' => Some(Tok::Slash),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            ',' => Some(Tok::Comma),
            ';' => Some(Tok::Semi),
            _ => None,
        };
        if let Some(tok) = simple {
            cur.bump();
            out.push(Token {
                tok,
                span: cur.span_from(start, line, line_start),
            });
            continue;
        }
        match c {
            '\n' => {
                cur.bump();
                out.push(Token {
                    tok: Tok::Newline,
                    span: cur.span_from(start, line, line_start),
                });
                cur.line += 1;
                cur.line_start = cur.pos;
            }
            '#' => {
                while let Some(c) = cur.peek() {
                    if c == '\n' {
                        break;
                    }
                    cur.bump();
                }
            }
            c if c.is_whitespace() => {
                cur.bump();
            }
            c if c.is_ascii_digit() || (c == '.' && cur.peek2().is_some_and(|d| d.is_ascii_digit())) => {
                let tok = lex_number(&mut cur)
                    .map_err(|m| ParseError::new(cur.span_from(start, line, line_start), m))?;
                out.push(Token {
                    tok,
                    span: cur.span_from(start, line, line_start),
                });
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                while cur
                    .peek()
                    .is_some_and(|c| c.is_ascii_alphanumeric() || c == '_')
                {
                    cur.bump();
                }
                out.push(Token {
                    tok: Tok::Ident(String::from(&src[start..cur.pos])),
                    span: cur.span_from(start, line, line_start),
                });
            }
            other => {
                cur.bump();
                return Err(ParseError::new(
                    cur.span_from(start, line, line_start),
                    alloc::format!("unexpected character {other:?}"),
                ));
            }
        }
    }
    let end = cur.pos;
    out.push(Token {
        tok: Tok::Eof,
        span: Span {
            offset: end,
            len: 0,
            line: cur.line,
            col: src[cur.line_start..].chars().count() + 1,
        },
    });
    Ok(out)
}

fn lex_number(cur: &mut Cursor<'_>) -> Result<Tok, &'static str> {
    let start = cur.pos;
    let mut is_int = true;
    while cur.peek().is_some_and(|c| c.is_ascii_digit()) {
        cur.bump();
    }
    if cur.peek() == Some('.') {
        is_int = false;
        cur.bump();
        while cur.peek().is_some_and(|c| c.is_ascii_digit()) {
            cur.bump();
        }
    }
    if matches!(cur.peek(), Some('e' | 'E')) {
        let sign_then_digit = matches!(cur.peek2(), Some('+' | '-'))
            && cur.src[cur.pos + 2..]
                .chars()
                .next()
                .is_some_and(|c| c.is_ascii_digit());
        if cur.peek2().is_some_and(|c| c.is_ascii_digit()) || sign_then_digit {
            is_int = false;
            cur.bump();
            if matches!(cur.peek(), Some('+' | '-')) {
                cur.bump();
            }
            while cur.peek().is_some_and(|c| c.is_ascii_digit()) {
                cur.bump();
            }
        } else {
            return Err("malformed exponent in number");
        }
    }
    if cur
        .peek()
        .is_some_and(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
    {
        while cur
            .peek()
            .is_some_and(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
        {
            cur.bump();
        }
        return Err("malformed number");
    }
    let text = &cur.src[start..cur.pos];
    if is_int {
        if let Ok(i) = text.parse::<usize>() {
            return Ok(Tok::Int(i));
        }
    }
    match text.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Tok::Num(v)),
        _ => Err("number out of range"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        tokenize(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn numbers() {
        assert_eq!(toks("3.5e-3"), [Tok::Num(3.5e-3), Tok::Eof]);
        assert_eq!(toks("12"), [Tok::Int(12), Tok::Eof]);
        assert_eq!(toks(".5"), [Tok::Num(0.5), Tok::Eof]);
        assert_eq!(toks("1e3"), [Tok::Num(1000.0), Tok::Eof]);
        assert!(tokenize("1e").is_err());
        assert!(tokenize("1e999").is_err());
        assert!(tokenize("1.2.3").is_err());
        assert!(tokenize("3x").is_err());
    }

    #[test]
    fn comments_and_spans() {
        let t = tokenize("# hi\n  pulse").unwrap();
        assert_eq!(t[0].tok, Tok::Newline);
        assert_eq!(t[1].tok, Tok::Ident("pulse".into()));
        assert_eq!((t[1].span.line, t[1].span.col), (2, 3));
    }

    #[test]
    fn bad_character() {
        let e = tokenize("pulse x pi @").unwrap_err();
        assert_eq!((e.span.line, e.span.col), (1, 12));
    }
}
