//! S-expression reader with source positions.

use crate::error::PddlError;

#[derive(Clone, Debug)]
pub(crate) enum SExpr {
    Sym { text: String, line: usize, col: usize },
    List { items: Vec<SExpr>, line: usize, col: usize },
}

impl SExpr {
    pub fn pos(&self) -> (usize, usize) {
        match self {
            SExpr::Sym { line, col, .. } | SExpr::List { line, col, .. } => (*line, *col),
        }
    }

    pub fn sym(&self) -> Option<&str> {
        match self {
            SExpr::Sym { text, .. } => Some(text),
            SExpr::List { .. } => None,
        }
    }

    pub fn list(&self) -> Option<&[SExpr]> {
        match self {
            SExpr::List { items, .. } => Some(items),
            SExpr::Sym { .. } => None,
        }
    }

    pub fn err(&self, msg: impl Into<String>) -> PddlError {
        let (line, col) = self.pos();
        PddlError::syntax(line, col, msg)
    }

    pub fn expect_list(&self, what: &str) -> Result<&[SExpr], PddlError> {
        self.list().ok_or_else(|| self.err(format!("expected {what}")))
    }

    pub fn expect_sym(&self, what: &str) -> Result<&str, PddlError> {
        self.sym().ok_or_else(|| self.err(format!("expected {what}")))
    }

    /// Head symbol of a list, lowercased.
    pub fn head(&self) -> Option<String> {
        self.list().and_then(|l| l.first()).and_then(|h| h.sym()).map(|s| s.to_ascii_lowercase())
    }
}

/// Read every top-level expression in `text`. `;` starts a line comment.
pub(crate) fn read_all(text: &str) -> Result<Vec<SExpr>, PddlError> {
    let mut reader = Reader { chars: text.chars().peekable(), line: 1, col: 1 };
    let mut out = Vec::new();
    loop {
        reader.skip_ws();
        match reader.chars.peek() {
            None => return Ok(out),
            Some(')') => return Err(PddlError::syntax(reader.line, reader.col, "unbalanced `)`")),
            Some(_) => out.push(reader.read()?),
        }
    }
}

/// Read exactly one expression.
pub(crate) fn read_one(text: &str) -> Result<SExpr, PddlError> {
    let mut all = read_all(text)?;
    match all.len() {
        1 => Ok(all.remove(0)),
        0 => Err(PddlError::syntax(1, 1, "empty input")),
        _ => {
            let (line, col) = all[1].pos();
            Err(PddlError::syntax(line, col, "trailing input after expression"))
        }
    }
}

struct Reader<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    col: usize,
}

impl Reader<'_> {
    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_ws(&mut self) {
        while let Some(&c) = self.chars.peek() {
            if c == ';' {
                while let Some(&c) = self.chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
            } else if c.is_whitespace() {
                self.bump();
            } else {
                break;
            }
        }
    }

    fn read(&mut self) -> Result<SExpr, PddlError> {
        self.skip_ws();
        let (line, col) = (self.line, self.col);
        match self.chars.peek() {
            None => Err(PddlError::syntax(line, col, "unexpected end of input")),
            Some('(') => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_ws();
                    match self.chars.peek() {
                        None => return Err(PddlError::syntax(line, col, "unclosed `(`")),
                        Some(')') => {
                            self.bump();
                            return Ok(SExpr::List { items, line, col });
                        }
                        Some(_) => items.push(self.read()?),
                    }
                }
            }
            Some(')') => Err(PddlError::syntax(line, col, "unexpected `)`")),
            Some(_) => {
                let mut text = String::new();
                while let Some(&c) = self.chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                        break;
                    }
                    text.push(c);
                    self.bump();
                }
                Ok(SExpr::Sym { text, line, col })
            }
        }
    }
}
