//! SMT-LIB v2 tokens and s-expressions with source positions.

use super::ParseError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl std::fmt::Display for Pos {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Atom {
    /// Simple or `|quoted|` symbol, bars removed.
    Symbol(String),
    Keyword(String),
    Numeral(String),
    Decimal(String),
    /// Digits of `#x…`.
    Hex(String),
    /// Digits of `#b…`.
    Binary(String),
    Str(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Sexp {
    Atom(Atom, Pos),
    List(Vec<Sexp>, Pos),
}

impl Sexp {
    pub fn pos(&self) -> Pos {
        match self {
            Sexp::Atom(_, p) | Sexp::List(_, p) => *p,
        }
    }

    pub fn symbol(&self) -> Option<&str> {
        match self {
            Sexp::Atom(Atom::Symbol(s), _) => Some(s),
            _ => None,
        }
    }

    pub fn list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List(l, _) => Some(l),
            _ => None,
        }
    }
}

impl std::fmt::Display for Sexp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Sexp::Atom(a, _) => match a {
                Atom::Symbol(s) => {
                    let mut out = String::new();
                    crate::term::term_write_symbol(&mut out, s)?;
                    f.write_str(&out)
                }
                Atom::Keyword(s) | Atom::Numeral(s) | Atom::Decimal(s) => f.write_str(s),
                Atom::Hex(s) => write!(f, "#x{s}"),
                Atom::Binary(s) => write!(f, "#b{s}"),
                Atom::Str(s) => write!(f, "\"{}\"", s.replace('"', "\"\"")),
            },
            Sexp::List(items, _) => {
                f.write_str("(")?;
                for (i, x) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{x}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Open,
    Close,
    Atom(Atom),
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    pos: Pos,
}

fn is_symbol_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || "~!@$%^&*_-+=<>.?/'".contains(c)
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Lexer { chars: text.chars().peekable(), pos: Pos { line: 1, col: 1 } }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.pos.line += 1;
            self.pos.col = 1;
        } else {
            self.pos.col += 1;
        }
        Some(c)
    }

    fn err(&self, at: Pos, msg: impl Into<String>) -> ParseError {
        ParseError { line: at.line, col: at.col, message: msg.into() }
    }

    fn take_while(&mut self, out: &mut String, f: impl Fn(char) -> bool) {
        while let Some(&c) = self.chars.peek() {
            if !f(c) {
                break;
            }
            out.push(c);
            self.bump();
        }
    }

    fn next(&mut self) -> Result<Option<(Tok, Pos)>, ParseError> {
        loop {
            match self.chars.peek() {
                None => return Ok(None),
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some(';') => {
                    while let Some(c) = self.bump() {
                        if c == '\n' {
                            break;
                        }
                    }
                }
                Some(_) => break,
            }
        }
        let start = self.pos;
        let c = self.bump().unwrap();
        let tok = match c {
            '(' => Tok::Open,
            ')' => Tok::Close,
            '|' => {
                let mut s = String::new();
                loop {
                    match self.bump() {
                        None => return Err(self.err(start, "unterminated quoted symbol")),
                        Some('|') => break,
                        Some('\\') => return Err(self.err(start, "backslash in quoted symbol")),
                        Some(c) => s.push(c),
                    }
                }
                Tok::Atom(Atom::Symbol(s))
            }
            '"' => {
                let mut s = String::new();
                loop {
                    match self.bump() {
                        None => return Err(self.err(start, "unterminated string literal")),
                        Some('"') => {
                            if self.chars.peek() == Some(&'"') {
                                self.bump();
                                s.push('"');
                            } else {
                                break;
                            }
                        }
                        Some(c) => s.push(c),
                    }
                }
                Tok::Atom(Atom::Str(s))
            }
            '#' => {
                let mut s = String::new();
                match self.bump() {
                    Some('x') => {
                        self.take_while(&mut s, |c| c.is_ascii_hexdigit());
                        if s.is_empty() {
                            return Err(self.err(start, "empty hexadecimal literal"));
                        }
                        Tok::Atom(Atom::Hex(s))
                    }
                    Some('b') => {
                        self.take_while(&mut s, |c| c == '0' || c == '1');
                        if s.is_empty() {
                            return Err(self.err(start, "empty binary literal"));
                        }
                        Tok::Atom(Atom::Binary(s))
                    }
                    _ => return Err(self.err(start, "expected #x or #b literal")),
                }
            }
            ':' => {
                let mut s = String::from(":");
                self.take_while(&mut s, is_symbol_char);
                Tok::Atom(Atom::Keyword(s))
            }
            c if c.is_ascii_digit() => {
                let mut s = String::from(c);
                self.take_while(&mut s, |c| c.is_ascii_digit());
                if self.chars.peek() == Some(&'.') {
                    s.push('.');
                    self.bump();
                    let before = s.len();
                    self.take_while(&mut s, |c| c.is_ascii_digit());
                    if s.len() == before {
                        return Err(self.err(start, "malformed decimal literal"));
                    }
                    Tok::Atom(Atom::Decimal(s))
                } else {
                    if s.len() > 1 && s.starts_with('0') {
                        return Err(self.err(start, "numeral with leading zero"));
                    }
                    Tok::Atom(Atom::Numeral(s))
                }
            }
            c if is_symbol_char(c) => {
                let mut s = String::from(c);
                self.take_while(&mut s, is_symbol_char);
                Tok::Atom(Atom::Symbol(s))
            }
            c => return Err(self.err(start, format!("unexpected character `{c}`"))),
        };
        Ok(Some((tok, start)))
    }
}

/// Reads every top-level s-expression of a script.
pub fn parse_sexps(text: &str) -> Result<Vec<Sexp>, ParseError> {
    let mut lx = Lexer::new(text);
    let mut stack: Vec<(Vec<Sexp>, Pos)> = Vec::new();
    let mut out = Vec::new();
    while let Some((tok, pos)) = lx.next()? {
        match tok {
            Tok::Open => stack.push((Vec::new(), pos)),
            Tok::Close => {
                let (items, start) = stack.pop().ok_or_else(|| lx.err(pos, "unbalanced parenthesis: unexpected `)`"))?;
                let e = Sexp::List(items, start);
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(e),
                    None => out.push(e),
                }
            }
            Tok::Atom(a) => {
                let e = Sexp::Atom(a, pos);
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(e),
                    None => out.push(e),
                }
            }
        }
    }
    if let Some((_, start)) = stack.pop() {
        return Err(lx.err(start, "unbalanced parenthesis: missing `)`"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nested_lists_and_atoms() {
        let es = parse_sexps("; c\n(a |b c| #x1F :k 12 1.5 \"s\"\"t\")").unwrap();
        assert_eq!(es.len(), 1);
        let l = es[0].list().unwrap();
        assert_eq!(l[1], Sexp::Atom(Atom::Symbol("b c".into()), Pos { line: 2, col: 4 }));
        assert!(matches!(&l[2], Sexp::Atom(Atom::Hex(h), _) if h == "1F"));
        assert!(matches!(&l[6], Sexp::Atom(Atom::Str(s), _) if s == "s\"t"));
    }

    #[test]
    fn unbalanced_reports_position() {
        let e = parse_sexps("(assert true").unwrap_err();
        assert_eq!((e.line, e.col), (1, 1));
        assert!(e.message.contains("unbalanced"));
        assert!(parse_sexps("())").unwrap_err().message.contains("unbalanced"));
    }
}
