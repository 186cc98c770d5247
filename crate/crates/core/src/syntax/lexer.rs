use super::ast::Span;
use super::ParseError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Var(String),
    Ident(String),
    Int(i64),
    LParen,
    RParen,
    LBrack,
    RBrack,
    LBrace,
    RBrace,
    Comma,
    Slash,
    Bar,
    Colon,
    Dot,
    Amp,
    Eq,
    Le,
    Lt,
    Ge,
    Gt,
    ColonDash,
    Plus,
    Minus,
    Star,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Var(v) => format!("variable `{v}`"),
            Tok::Ident(i) => format!("`{i}`"),
            Tok::Int(n) => format!("integer `{n}`"),
            other => format!("`{}`", other.text()),
        }
    }

    fn text(&self) -> &'static str {
        match self {
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrack => "[",
            Tok::RBrack => "]",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::Comma => ",",
            Tok::Slash => "/",
            Tok::Bar => "|",
            Tok::Colon => ":",
            Tok::Dot => ".",
            Tok::Amp => "&",
            Tok::Eq => "=",
            Tok::Le => "=<",
            Tok::Lt => "<",
            Tok::Ge => ">=",
            Tok::Gt => ">",
            Tok::ColonDash => ":-",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Var(_) | Tok::Ident(_) | Tok::Int(_) => "",
        }
    }
}

pub fn tokenize(src: &str) -> Result<Vec<(Tok, Span)>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    while i < chars.len() {
        let c = chars[i];
        let span = Span { line, col };
        let advance = |n: usize, i: &mut usize, col: &mut u32| {
            *i += n;
            *col += n as u32;
        };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            advance(1, &mut i, &mut col);
            continue;
        }
        if c == '%' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            col += (i - start) as u32;
            if c == '_' {
                return Err(ParseError::at(
                    span,
                    format!("identifier `{word}` uses the reserved `_` prefix"),
                ));
            }
            out.push((
                if c.is_ascii_uppercase() {
                    Tok::Var(word)
                } else {
                    Tok::Ident(word)
                },
                span,
            ));
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let digits: String = chars[start..i].iter().collect();
            col += (i - start) as u32;
            let n = digits
                .parse::<i64>()
                .map_err(|_| ParseError::at(span, format!("integer `{digits}` out of range")))?;
            out.push((Tok::Int(n), span));
            continue;
        }
        let next = chars.get(i + 1).copied();
        let (tok, len) = match (c, next) {
            ('=', Some('<')) => (Tok::Le, 2),
            ('>', Some('=')) => (Tok::Ge, 2),
            (':', Some('-')) => (Tok::ColonDash, 2),
            ('(', _) => (Tok::LParen, 1),
            (')', _) => (Tok::RParen, 1),
            ('[', _) => (Tok::LBrack, 1),
            (']', _) => (Tok::RBrack, 1),
            ('{', _) => (Tok::LBrace, 1),
            ('}', _) => (Tok::RBrace, 1),
            (',', _) => (Tok::Comma, 1),
            ('/', _) => (Tok::Slash, 1),
            ('|', _) => (Tok::Bar, 1),
            (':', _) => (Tok::Colon, 1),
            ('.', _) => (Tok::Dot, 1),
            ('&', _) => (Tok::Amp, 1),
            ('=', _) => (Tok::Eq, 1),
            ('<', _) => (Tok::Lt, 1),
            ('>', _) => (Tok::Gt, 1),
            ('+', _) => (Tok::Plus, 1),
            ('-', _) => (Tok::Minus, 1),
            ('*', _) => (Tok::Star, 1),
            _ => return Err(ParseError::at(span, format!("unexpected character {c:?}"))),
        };
        out.push((tok, span));
        advance(len, &mut i, &mut col);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexes_operators_and_words() {
        let toks: Vec<Tok> = tokenize("X =< 3 & a :- {Y / S}. % c\n")
            .unwrap()
            .into_iter()
            .map(|(t, _)| t)
            .collect();
        assert_eq!(
            toks,
            vec![
                Tok::Var("X".into()),
                Tok::Le,
                Tok::Int(3),
                Tok::Amp,
                Tok::Ident("a".into()),
                Tok::ColonDash,
                Tok::LBrace,
                Tok::Var("Y".into()),
                Tok::Slash,
                Tok::Var("S".into()),
                Tok::RBrace,
                Tok::Dot,
            ]
        );
    }

    #[test]
    fn rejects_reserved_prefix() {
        let err = tokenize("X = _N1").unwrap_err();
        assert!(err.to_string().contains("reserved"));
        assert_eq!((err.line, err.col), (1, 5));
    }

    #[test]
    fn tracks_lines() {
        let toks = tokenize("a\n  B").unwrap();
        assert_eq!(toks[1].1, Span { line: 2, col: 3 });
        assert_eq!((toks[1].1.line, toks[1].1.col), (2, 3));
    }
}
