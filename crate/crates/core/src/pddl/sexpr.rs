//! Minimal s-expression reader used by the PDDL parser.
//!
//! Symbols are lower-cased on read. `;` starts a comment that runs to the end
//! of the line.

use std::fmt;

use super::PddlError;

/// 1-based source position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Loc {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Sexpr {
    Sym(String, Loc),
    List(Vec<Sexpr>, Loc),
}

impl Sexpr {
    pub fn loc(&self) -> Loc {
        match self {
            Sexpr::Sym(_, l) | Sexpr::List(_, l) => *l,
        }
    }

    pub fn as_sym(&self) -> Option<&str> {
        match self {
            Sexpr::Sym(s, _) => Some(s),
            Sexpr::List(..) => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Sexpr]> {
        match self {
            Sexpr::List(items, _) => Some(items),
            Sexpr::Sym(..) => None,
        }
    }

    /// Head symbol of a list, if it has one.
    pub fn head(&self) -> Option<&str> {
        self.as_list()
            .and_then(|l| l.first())
            .and_then(Sexpr::as_sym)
    }

    pub fn expect_sym(&self, what: &str) -> Result<&str, PddlError> {
        self.as_sym().ok_or_else(|| PddlError::Syntax {
            loc: self.loc(),
            msg: format!("expected {what}, found a list"),
        })
    }

    pub fn expect_list(&self, what: &str) -> Result<&[Sexpr], PddlError> {
        self.as_list().ok_or_else(|| PddlError::Syntax {
            loc: self.loc(),
            msg: format!(
                "expected {what}, found symbol `{}`",
                self.as_sym().unwrap_or("")
            ),
        })
    }
}

fn is_delim(c: char) -> bool {
    c.is_whitespace() || c == '(' || c == ')' || c == ';'
}

/// Read exactly one top-level expression; trailing non-comment text is an error.
pub fn read_one(text: &str) -> Result<Sexpr, PddlError> {
    let mut reader = Reader::new(text);
    reader.skip_trivia();
    if reader.peek().is_none() {
        return Err(PddlError::Syntax {
            loc: reader.loc(),
            msg: "empty input".into(),
        });
    }
    let expr = reader.read()?;
    reader.skip_trivia();
    if reader.peek().is_some() {
        return Err(PddlError::Syntax {
            loc: reader.loc(),
            msg: "unexpected text after top-level expression".into(),
        });
    }
    Ok(expr)
}

struct Reader<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    col: usize,
}

impl<'a> Reader<'a> {
    fn new(text: &'a str) -> Self {
        Reader {
            chars: text.chars().peekable(),
            line: 1,
            col: 1,
        }
    }

    fn loc(&self) -> Loc {
        Loc {
            line: self.line,
            col: self.col,
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

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

    fn skip_trivia(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == ';' {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn read(&mut self) -> Result<Sexpr, PddlError> {
        self.skip_trivia();
        let start = self.loc();
        match self.peek() {
            None => Err(PddlError::Syntax {
                loc: start,
                msg: "unexpected end of input".into(),
            }),
            Some(')') => Err(PddlError::Syntax {
                loc: start,
                msg: "unbalanced `)`".into(),
            }),
            Some('(') => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_trivia();
                    match self.peek() {
                        None => {
                            return Err(PddlError::Syntax {
                                loc: start,
                                msg: "unclosed `(`".into(),
                            })
                        }
                        Some(')') => {
                            self.bump();
                            return Ok(Sexpr::List(items, start));
                        }
                        Some(_) => items.push(self.read()?),
                    }
                }
            }
            Some(_) => {
                let mut sym = String::new();
                while let Some(c) = self.peek() {
                    if is_delim(c) {
                        break;
                    }
                    sym.push(c);
                    self.bump();
                }
                Ok(Sexpr::Sym(sym.to_lowercase(), start))
            }
        }
    }
}
