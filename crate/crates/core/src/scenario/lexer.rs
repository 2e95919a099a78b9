use super::types::{Diagnostic, Pos};

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Colon,
    Comma,
    Number(f64),
    Str(String),
    Ident(String),
    Var(String),
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Number(n) => format!("number {n}"),
            Tok::Str(s) => format!("string {s:?}"),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Var(s) => format!("`${s}`"),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    src: &'a str,
    line: u32,
    column: u32,
}

impl<'a> Cursor<'a> {
    fn new(src: &'a str) -> Self {
        Self { chars: src.char_indices().peekable(), src, line: 1, column: 1 }
    }

    fn pos(&self) -> Pos {
        Pos::new(self.line, self.column)
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().map(|&(_, c)| c)
    }

    fn peek2(&self) -> Option<char> {
        let mut it = self.chars.clone();
        it.next();
        it.next().map(|(_, c)| c)
    }

    fn offset(&mut self) -> usize {
        self.chars.peek().map(|&(i, _)| i).unwrap_or(self.src.len())
    }

    fn bump(&mut self) -> Option<char> {
        let (_, c) = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '.'
}

/// Splits scenario text into tokens. The final token is always [`Tok::Eof`],
/// positioned just past the last character.
pub fn tokenize(src: &str) -> Result<Vec<Token>, Diagnostic> {
    let mut cur = Cursor::new(src);
    let mut out = Vec::new();
    loop {
        // whitespace and comments
        while let Some(c) = cur.peek() {
            if c.is_whitespace() {
                cur.bump();
            } else if c == '#' {
                while let Some(c) = cur.peek() {
                    if c == '\n' {
                        break;
                    }
                    cur.bump();
                }
            } else {
                break;
            }
        }
        let pos = cur.pos();
        let Some(c) = cur.peek() else {
            out.push(Token { tok: Tok::Eof, pos: eof_pos(src) });
            return Ok(out);
        };
        let tok = match c {
            '{' => single(&mut cur, Tok::LBrace),
            '}' => single(&mut cur, Tok::RBrace),
            '[' => single(&mut cur, Tok::LBracket),
            ']' => single(&mut cur, Tok::RBracket),
            ':' => single(&mut cur, Tok::Colon),
            ',' => single(&mut cur, Tok::Comma),
            '"' => lex_string(&mut cur, pos)?,
            '$' => {
                cur.bump();
                match cur.peek() {
                    Some(c) if is_ident_start(c) => {}
                    _ => return Err(Diagnostic::error(pos, "expected variable name after `$`")),
                }
                let mut name = String::new();
                while let Some(c) = cur.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        name.push(c);
                        cur.bump();
                    } else {
                        break;
                    }
                }
                Tok::Var(name)
            }
            c if c.is_ascii_digit() || c == '-' || c == '+' || c == '.' => lex_number(&mut cur, pos)?,
            c if is_ident_start(c) => {
                let mut name = String::new();
                while let Some(c) = cur.peek() {
                    if is_ident_continue(c) {
                        name.push(c);
                        cur.bump();
                    } else {
                        break;
                    }
                }
                Tok::Ident(name)
            }
            other => return Err(Diagnostic::error(pos, format!("unexpected character {other:?}"))),
        };
        out.push(Token { tok, pos });
    }
}

fn single(cur: &mut Cursor<'_>, tok: Tok) -> Tok {
    cur.bump();
    tok
}

fn lex_string(cur: &mut Cursor<'_>, pos: Pos) -> Result<Tok, Diagnostic> {
    cur.bump();
    let mut s = String::new();
    loop {
        match cur.bump() {
            None => return Err(Diagnostic::error(pos, "unterminated string")),
            Some('"') => return Ok(Tok::Str(s)),
            Some('\\') => {
                let esc_pos = cur.pos();
                match cur.bump() {
                    Some('"') => s.push('"'),
                    Some('\\') => s.push('\\'),
                    Some('n') => s.push('\n'),
                    Some('t') => s.push('\t'),
                    Some('r') => s.push('\r'),
                    _ => return Err(Diagnostic::error(esc_pos, "invalid escape sequence")),
                }
            }
            Some(c) => s.push(c),
        }
    }
}

fn lex_number(cur: &mut Cursor<'_>, pos: Pos) -> Result<Tok, Diagnostic> {
    let start = cur.offset();
    if matches!(cur.peek(), Some('-' | '+')) {
        cur.bump();
    }
    let mut digits = 0;
    while matches!(cur.peek(), Some(c) if c.is_ascii_digit()) {
        cur.bump();
        digits += 1;
    }
    if cur.peek() == Some('.') {
        cur.bump();
        while matches!(cur.peek(), Some(c) if c.is_ascii_digit()) {
            cur.bump();
            digits += 1;
        }
    }
    if digits == 0 {
        return Err(Diagnostic::error(pos, "malformed number"));
    }
    // exponent only when followed by a digit, so `5em` reads as 5 with unit `em`
    if matches!(cur.peek(), Some('e' | 'E')) {
        let next = cur.peek2();
        let exp_follows = match next {
            Some(c) if c.is_ascii_digit() => true,
            Some('-' | '+') => {
                let mut it = cur.chars.clone();
                it.next();
                it.next();
                matches!(it.next(), Some((_, c)) if c.is_ascii_digit())
            }
            _ => false,
        };
        if exp_follows {
            cur.bump();
            if matches!(cur.peek(), Some('-' | '+')) {
                cur.bump();
            }
            while matches!(cur.peek(), Some(c) if c.is_ascii_digit()) {
                cur.bump();
            }
        }
    }
    let end = cur.offset();
    let text = &cur.src[start..end];
    let value: f64 = text.parse().map_err(|_| Diagnostic::error(pos, format!("malformed number `{text}`")))?;
    if !value.is_finite() {
        return Err(Diagnostic::error(pos, format!("number `{text}` is out of range")));
    }
    // unit suffix, ignored
    if matches!(cur.peek(), Some(c) if c.is_ascii_alphabetic()) {
        while matches!(cur.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '/' || c == '^' || c == '_') {
            cur.bump();
        }
    }
    Ok(Tok::Number(value))
}

/// Position just past the last character of `src`.
pub fn eof_pos(src: &str) -> Pos {
    let mut line = 1u32;
    let mut column = 1u32;
    for c in src.chars() {
        if c == '\n' {
            line += 1;
            column = 1;
        } else {
            column += 1;
        }
    }
    Pos::new(line, column)
}
