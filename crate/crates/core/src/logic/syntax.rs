//! ASCII rule syntax.
//!
//! ```text
//! rule    := concept "=>" NAME
//! concept := conj ("OR" conj)*
//! conj    := unary ("AND" unary)*
//! unary   := "NOT" unary | primary
//! primary := "TOP" | NAME | "(" concept ")"
//!          | "EXISTS" ROLE "(" concept ")"
//!          | "FORALL" ROLE "(" concept ")"
//!          | "ATLEAST" INT ROLE "(" concept ")"
//!          | "ATMOST" INT ROLE "(" concept ")"
//!          | "EXISTSU" INT ROLE "(" concept (";" concept)* ")" "MAXDEG" INT
//! ROLE    := NAME "." | NAME "^-" "."
//! ```
//!
//! Whitespace is insignificant. Names may contain any characters other than
//! whitespace, parentheses, `;` and the sequence `=>`.

use crate::error::{Error, Result};
use crate::logic::concept::{Concept, Role};
use crate::logic::rule::Rule;

const KEYWORDS: [&str; 10] = [
    "TOP", "AND", "OR", "NOT", "EXISTS", "FORALL", "ATLEAST", "ATMOST", "EXISTSU", "MAXDEG",
];

#[derive(Clone, Debug, PartialEq)]
enum Tok<'a> {
    Open,
    Close,
    Semi,
    Arrow,
    Word(&'a str),
    Role(&'a str),
}

fn lex(s: &str) -> Vec<(usize, Tok<'_>)> {
    let mut out = Vec::new();
    let bytes = s.as_bytes();
    let mut i = 0;
    let next_non_space = |mut j: usize| {
        while j < s.len() && s[j..].starts_with(char::is_whitespace) {
            j += s[j..].chars().next().unwrap().len_utf8();
        }
        j
    };
    while i < s.len() {
        let c = s[i..].chars().next().unwrap();
        if c.is_whitespace() {
            i += c.len_utf8();
            continue;
        }
        let start = i;
        match c {
            '(' => {
                out.push((start, Tok::Open));
                i += 1;
            }
            ')' => {
                out.push((start, Tok::Close));
                i += 1;
            }
            ';' => {
                out.push((start, Tok::Semi));
                i += 1;
            }
            '=' if bytes.get(i + 1) == Some(&b'>') => {
                out.push((start, Tok::Arrow));
                i += 2;
            }
            _ => {
                while i < s.len() {
                    let c = s[i..].chars().next().unwrap();
                    if c.is_whitespace() || matches!(c, '(' | ')' | ';') || s[i..].starts_with("=>") {
                        break;
                    }
                    i += c.len_utf8();
                }
                let word = &s[start..i];
                let j = next_non_space(i);
                if word.len() > 1 && word.ends_with('.') && bytes.get(j) == Some(&b'(') {
                    out.push((start, Tok::Role(&word[..word.len() - 1])));
                } else {
                    out.push((start, Tok::Word(word)));
                }
            }
        }
    }
    out
}

struct Parser<'a> {
    toks: Vec<(usize, Tok<'a>)>,
    pos: usize,
    end: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok<'a>> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(p, _)| *p)
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::RuleSyntax {
            position: self.offset(),
            message: message.into(),
        })
    }

    fn bump(&mut self) -> Option<Tok<'a>> {
        let t = self.toks.get(self.pos).map(|(_, t)| t.clone());
        self.pos += 1;
        t
    }

    fn keyword(&mut self, kw: &str) -> bool {
        if self.peek() == Some(&Tok::Word(kw)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok<'static>, what: &str) -> Result<()> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            self.error(format!("expected {what}"))
        }
    }

    fn name(&mut self, what: &str) -> Result<String> {
        match self.peek() {
            Some(Tok::Word(w)) if !KEYWORDS.contains(w) => {
                let w = w.to_string();
                self.pos += 1;
                Ok(w)
            }
            _ => self.error(format!("expected {what}")),
        }
    }

    fn int(&mut self, min: u32) -> Result<u32> {
        let value = match self.peek() {
            Some(Tok::Word(w)) => w.parse::<u32>().ok(),
            _ => None,
        };
        match value {
            Some(n) if n >= min => {
                self.pos += 1;
                Ok(n)
            }
            Some(_) => self.error(format!("count must be at least {min}")),
            None => self.error("expected a count"),
        }
    }

    fn role(&mut self) -> Result<Role> {
        match self.peek() {
            Some(Tok::Role(r)) => {
                let r = *r;
                self.pos += 1;
                Ok(match r.strip_suffix("^-") {
                    Some(p) if !p.is_empty() => Role::inverse(p),
                    _ => Role::new(r),
                })
            }
            _ => self.error("expected a role followed by `.(`"),
        }
    }

    fn filler(&mut self) -> Result<Concept> {
        self.expect(Tok::Open, "`(`")?;
        let c = self.concept()?;
        self.expect(Tok::Close, "`)`")?;
        Ok(c)
    }

    fn concept(&mut self) -> Result<Concept> {
        let mut parts = vec![self.conj()?];
        while self.keyword("OR") {
            parts.push(self.conj()?);
        }
        Ok(Concept::or(parts))
    }

    fn conj(&mut self) -> Result<Concept> {
        let mut parts = vec![self.unary()?];
        while self.keyword("AND") {
            parts.push(self.unary()?);
        }
        Ok(Concept::and(parts))
    }

    fn unary(&mut self) -> Result<Concept> {
        if self.keyword("NOT") {
            return Ok(Concept::Not(Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Concept> {
        if self.keyword("TOP") {
            return Ok(Concept::Top);
        }
        if self.keyword("EXISTS") {
            let r = self.role()?;
            return Ok(Concept::Exists(r, Box::new(self.filler()?)));
        }
        if self.keyword("FORALL") {
            let r = self.role()?;
            return Ok(Concept::ForAll(r, Box::new(self.filler()?)));
        }
        if self.keyword("ATLEAST") {
            let n = self.int(1)?;
            let r = self.role()?;
            return Ok(Concept::AtLeast(n, r, Box::new(self.filler()?)));
        }
        if self.keyword("ATMOST") {
            let n = self.int(0)?;
            let r = self.role()?;
            return Ok(Concept::AtMost(n, r, Box::new(self.filler()?)));
        }
        if self.keyword("EXISTSU") {
            return self.exists_unique();
        }
        if self.peek() == Some(&Tok::Open) {
            return self.filler();
        }
        Ok(Concept::Atomic(self.name("a concept")?))
    }

    fn exists_unique(&mut self) -> Result<Concept> {
        let at = self.offset();
        let n = self.int(1)?;
        let role = self.role()?;
        self.expect(Tok::Open, "`(`")?;
        let mut fillers = vec![self.concept()?];
        while self.peek() == Some(&Tok::Semi) {
            self.pos += 1;
            fillers.push(self.concept()?);
        }
        self.expect(Tok::Close, "`)`")?;
        if !self.keyword("MAXDEG") {
            return self.error("expected `MAXDEG`");
        }
        let max = self.int(1)?;
        if fillers.len() != n as usize {
            return Err(Error::RuleSyntax {
                position: at,
                message: format!("EXISTSU {n} lists {} concepts", fillers.len()),
            });
        }
        if max < n {
            return Err(Error::RuleSyntax {
                position: at,
                message: format!("MAXDEG {max} is below the count {n}"),
            });
        }
        Ok(Concept::ExistsUnique { role, fillers, max })
    }
}

fn parser(text: &str) -> Parser<'_> {
    Parser {
        toks: lex(text),
        pos: 0,
        end: text.len(),
    }
}

/// Parses a concept in the ASCII grammar.
pub fn parse_concept(text: &str) -> Result<Concept> {
    let mut p = parser(text);
    let c = p.concept()?;
    if p.peek().is_some() {
        return p.error("unexpected trailing input");
    }
    Ok(c)
}

/// Parses `body => Head`.
pub fn parse_rule(text: &str) -> Result<Rule> {
    let mut p = parser(text);
    let body = p.concept()?;
    p.expect(Tok::Arrow, "`=>`")?;
    let head = p.name("a head predicate")?;
    if p.bump().is_some() {
        p.pos -= 1;
        return p.error("unexpected input after the head");
    }
    Ok(Rule::new(body, head))
}

/// Parses one rule per non-empty line; `#` starts a comment line.
pub fn parse_rules(text: &str) -> Result<Vec<Rule>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(i, l)| {
            parse_rule(l).map_err(|e| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

fn precedence(c: &Concept) -> u8 {
    match c {
        Concept::Or(ps) if ps.len() > 1 => 0,
        Concept::And(ps) if ps.len() > 1 => 1,
        _ => 2,
    }
}

fn write_at(c: &Concept, min: u8, out: &mut String) {
    if precedence(c) < min {
        out.push('(');
        write(c, out);
        out.push(')');
    } else {
        write(c, out);
    }
}

fn write_filler(role: &Role, c: &Concept, out: &mut String) {
    out.push_str(&role.to_text());
    out.push_str(".(");
    write(c, out);
    out.push(')');
}

fn write(c: &Concept, out: &mut String) {
    match c {
        Concept::Top => out.push_str("TOP"),
        Concept::Atomic(a) => out.push_str(a),
        Concept::Not(inner) => {
            out.push_str("NOT ");
            write_at(inner, 2, out);
        }
        Concept::And(ps) | Concept::Or(ps) if ps.len() <= 1 => match ps.first() {
            Some(p) => write(p, out),
            None if matches!(c, Concept::And(_)) => out.push_str("TOP"),
            None => out.push_str("NOT TOP"),
        },
        Concept::And(ps) | Concept::Or(ps) => {
            let (sep, min) = if matches!(c, Concept::And(_)) {
                (" AND ", 2)
            } else {
                (" OR ", 1)
            };
            for (i, p) in ps.iter().enumerate() {
                if i > 0 {
                    out.push_str(sep);
                }
                write_at(p, min, out);
            }
        }
        Concept::Exists(r, f) => {
            out.push_str("EXISTS ");
            write_filler(r, f, out);
        }
        Concept::ForAll(r, f) => {
            out.push_str("FORALL ");
            write_filler(r, f, out);
        }
        Concept::AtLeast(n, r, f) => {
            out.push_str(&format!("ATLEAST {n} "));
            write_filler(r, f, out);
        }
        Concept::AtMost(n, r, f) => {
            out.push_str(&format!("ATMOST {n} "));
            write_filler(r, f, out);
        }
        Concept::ExistsUnique { role, fillers, max } => {
            out.push_str(&format!("EXISTSU {} {}.(", fillers.len(), role.to_text()));
            for (i, f) in fillers.iter().enumerate() {
                if i > 0 {
                    out.push_str("; ");
                }
                write(f, out);
            }
            out.push_str(&format!(") MAXDEG {max}"));
        }
    }
}

pub fn print_concept(c: &Concept) -> String {
    let mut out = String::new();
    write(c, &mut out);
    out
}

pub fn print_rule(r: &Rule) -> String {
    format!("{} => {}", print_concept(&r.body), r.head)
}
