//! Line-oriented parser for the rule language.
//!
//! ```text
//! rule   := NAME ":" cond ("&" cond)* "->" "(" move "," recolor ")"
//! cond   := "myC=" ("A"|"B")                      (first position only)
//!         | "#" ["!"] region ("|" region)* cmp
//!         | "lookcs=" ("0"|"1")
//!         | "myloc" ("="|"!=") "target"
//! region := "(" xcons "," ycons "," ("A"|"B"|"*") ")"
//! xcons  := "x" ("="|"<="|">=") term | "x:any" | "x in [" term "," term "]"
//! term   := linear expression over integers and the symbol m, e.g. -m+1
//! cmp    := ("="|"<="|">=") INT | "in [" INT "," INT "]"
//! move   := "x+" | "x-" | "y+" | "y-" | "_"
//! recolor:= "A" | "B" | "_"
//! ```
//!
//! Blank lines and `//` comments are skipped; `@phase N` tags the rules that
//! follow it.

use std::collections::HashSet;

use super::ast::*;
use crate::error::Error;
use crate::geometry::Color;

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(i64),
    Sym(&'static str),
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    col: usize,
}

const SYMBOLS: &[&str] = &[
    "->", "<=", ">=", "!=", ":", "&", "#", "!", "|", "(", ")", ",", "[", "]", "=", "+", "-", "*", "_",
    "@",
];

fn lex(line: &str, lineno: usize) -> Result<Vec<Token>, Error> {
    let bytes = line.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let col = i + 1;
        if c.is_ascii_alphabetic() || (c == b'_' && bytes.get(i + 1).is_some_and(|b| b.is_ascii_alphanumeric())) {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token { tok: Tok::Ident(line[start..i].to_string()), col });
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let v = line[start..i].parse::<i64>().map_err(|_| Error::Syntax {
                line: lineno,
                col,
                msg: "integer out of range".into(),
            })?;
            out.push(Token { tok: Tok::Int(v), col });
            continue;
        }
        match SYMBOLS.iter().find(|s| line[i..].starts_with(**s)) {
            Some(s) => {
                out.push(Token { tok: Tok::Sym(s), col });
                i += s.len();
            }
            None => {
                let ch = line[i..].chars().next().unwrap_or('?');
                return Err(Error::Syntax { line: lineno, col, msg: format!("unexpected character '{ch}'") });
            }
        }
    }
    Ok(out)
}

struct Cursor<'a> {
    toks: &'a [Token],
    pos: usize,
    line: usize,
    end_col: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<&'a Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_col, |t| t.col)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, Error> {
        Err(Error::Syntax { line: self.line, col: self.col(), msg: msg.into() })
    }

    fn describe(&self) -> String {
        match self.peek() {
            None => "end of line".into(),
            Some(Tok::Ident(s)) => format!("'{s}'"),
            Some(Tok::Int(v)) => format!("'{v}'"),
            Some(Tok::Sym(s)) => format!("'{s}'"),
        }
    }

    fn bump(&mut self) -> Option<&'a Tok> {
        let t = self.toks.get(self.pos).map(|t| &t.tok);
        self.pos += 1;
        t
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Sym(x)) if *x == s) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> Result<(), Error> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.err(format!("expected '{s}', found {}", self.describe()))
        }
    }

    fn at_ident(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(x)) if x == s)
    }

    fn expect_ident(&mut self, s: &str) -> Result<(), Error> {
        if self.at_ident(s) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected '{s}', found {}", self.describe()))
        }
    }

    fn expect_uint(&mut self) -> Result<u32, Error> {
        match self.peek() {
            Some(Tok::Int(v)) if *v <= u32::MAX as i64 => {
                let v = *v as u32;
                self.pos += 1;
                Ok(v)
            }
            _ => self.err(format!("expected a count, found {}", self.describe())),
        }
    }
}

/// Parses a rule file into an ordered rule set.
pub fn parse_ruleset(text: &str) -> Result<RuleSet, Error> {
    let mut rules = Vec::new();
    let mut phase = None;
    let mut names = HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = strip_comment(raw);
        if line.trim().is_empty() {
            continue;
        }
        let toks = lex(line, lineno)?;
        let mut cur = Cursor { toks: &toks, pos: 0, line: lineno, end_col: line.len() + 1 };
        if cur.eat_sym("@") {
            phase = parse_phase(&mut cur)?;
            continue;
        }
        let mut rule = parse_rule_tokens(&mut cur)?;
        rule.phase = phase;
        if !names.insert(rule.name.clone()) {
            return Err(Error::Syntax { line: lineno, col: 1, msg: format!("duplicate rule name {}", rule.name) });
        }
        rules.push(rule);
    }
    Ok(RuleSet { rules })
}

/// Parses a single rule line (no phase tag).
pub fn parse_rule(line: &str) -> Result<Rule, Error> {
    let line = strip_comment(line);
    let toks = lex(line, 1)?;
    let mut cur = Cursor { toks: &toks, pos: 0, line: 1, end_col: line.len() + 1 };
    parse_rule_tokens(&mut cur)
}

pub fn format_ruleset(rs: &RuleSet) -> String {
    rs.to_string()
}

fn strip_comment(line: &str) -> &str {
    match line.find("//") {
        Some(i) => &line[..i],
        None => line,
    }
}

fn parse_phase(cur: &mut Cursor<'_>) -> Result<Option<u8>, Error> {
    cur.expect_ident("phase")?;
    let phase = match cur.bump() {
        Some(Tok::Int(v)) if (0..=255).contains(v) => Some(*v as u8),
        Some(Tok::Ident(s)) if s == "none" => None,
        _ => {
            cur.pos -= 1;
            return cur.err("expected a phase number or 'none'");
        }
    };
    if cur.peek().is_some() {
        return cur.err(format!("unexpected {} after phase", cur.describe()));
    }
    Ok(phase)
}

fn parse_rule_tokens(cur: &mut Cursor<'_>) -> Result<Rule, Error> {
    let name = match cur.peek() {
        Some(Tok::Ident(s)) => {
            cur.pos += 1;
            s.clone()
        }
        _ => return cur.err(format!("expected a rule name, found {}", cur.describe())),
    };
    cur.expect_sym(":")?;

    let mut guard = None;
    let mut atoms = Vec::new();
    loop {
        if cur.at_ident("myC") {
            if guard.is_some() || !atoms.is_empty() {
                return cur.err("myC guard must come first");
            }
            cur.pos += 1;
            cur.expect_sym("=")?;
            guard = Some(parse_color(cur)?);
        } else {
            atoms.push(parse_atom(cur)?);
        }
        if !cur.eat_sym("&") {
            break;
        }
    }
    cur.expect_sym("->")?;
    cur.expect_sym("(")?;
    let mv = if cur.eat_sym("_") {
        None
    } else {
        let axis = match cur.bump() {
            Some(Tok::Ident(s)) if s == "x" || s == "y" => s.clone(),
            _ => {
                cur.pos -= 1;
                return cur.err(format!("expected a move, found {}", cur.describe()));
            }
        };
        let dir = if cur.eat_sym("+") {
            "+"
        } else if cur.eat_sym("-") {
            "-"
        } else {
            return cur.err("expected '+' or '-' after move axis");
        };
        Move::parse(&format!("{axis}{dir}"))
    };
    cur.expect_sym(",")?;
    let recolor = if cur.eat_sym("_") { None } else { Some(parse_color(cur)?) };
    cur.expect_sym(")")?;
    if cur.peek().is_some() {
        return cur.err(format!("unexpected {} after action", cur.describe()));
    }
    if mv.is_none() && recolor.is_none() {
        return Err(Error::Syntax { line: cur.line, col: 1, msg: format!("rule {name} neither moves nor recolors") });
    }
    Ok(Rule { name, phase: None, guard, atoms, action: Action { mv, recolor } })
}

fn parse_color(cur: &mut Cursor<'_>) -> Result<Color, Error> {
    match cur.peek() {
        Some(Tok::Ident(s)) if s == "A" => {
            cur.pos += 1;
            Ok(Color::A)
        }
        Some(Tok::Ident(s)) if s == "B" => {
            cur.pos += 1;
            Ok(Color::B)
        }
        _ => cur.err(format!("expected a color, found {}", cur.describe())),
    }
}

fn parse_atom(cur: &mut Cursor<'_>) -> Result<Atom, Error> {
    if cur.at_ident("lookcs") {
        cur.pos += 1;
        cur.expect_sym("=")?;
        return match cur.bump() {
            Some(Tok::Int(0)) => Ok(Atom::LookCs(false)),
            Some(Tok::Int(1)) => Ok(Atom::LookCs(true)),
            _ => {
                cur.pos -= 1;
                cur.err("lookcs compares against 0 or 1")
            }
        };
    }
    if cur.at_ident("myloc") {
        cur.pos += 1;
        let eq = if cur.eat_sym("=") {
            true
        } else if cur.eat_sym("!=") {
            false
        } else {
            return cur.err("expected '=' or '!=' after myloc");
        };
        cur.expect_ident("target")?;
        return Ok(Atom::AtTarget(eq));
    }
    if !cur.eat_sym("#") {
        return cur.err(format!("expected a condition, found {}", cur.describe()));
    }
    let negated = cur.eat_sym("!");
    let start_col = cur.col();
    let mut regions = vec![parse_region(cur)?];
    while cur.eat_sym("|") {
        regions.push(parse_region(cur)?);
    }
    if regions.iter().any(|r| r.color != regions[0].color) {
        return Err(Error::Syntax {
            line: cur.line,
            col: start_col,
            msg: "regions of one count must share a color".into(),
        });
    }
    let cmp = if cur.eat_sym("=") {
        Comparator::Eq(cur.expect_uint()?)
    } else if cur.eat_sym("<=") {
        Comparator::Le(cur.expect_uint()?)
    } else if cur.eat_sym(">=") {
        Comparator::Ge(cur.expect_uint()?)
    } else if cur.at_ident("in") {
        cur.pos += 1;
        cur.expect_sym("[")?;
        let lo = cur.expect_uint()?;
        cur.expect_sym(",")?;
        let hi = cur.expect_uint()?;
        cur.expect_sym("]")?;
        if lo > hi {
            return cur.err("empty count range");
        }
        Comparator::Between(lo, hi)
    } else {
        return cur.err(format!("expected a comparison, found {}", cur.describe()));
    };
    Ok(Atom::Count(CountAtom { regions, negated, cmp }))
}

fn parse_region(cur: &mut Cursor<'_>) -> Result<Region, Error> {
    cur.expect_sym("(")?;
    let x = parse_axis(cur, "x")?;
    cur.expect_sym(",")?;
    let y = parse_axis(cur, "y")?;
    cur.expect_sym(",")?;
    let color = if cur.eat_sym("*") {
        ColorSel::Any
    } else {
        match parse_color(cur)? {
            Color::A => ColorSel::A,
            Color::B => ColorSel::B,
        }
    };
    cur.expect_sym(")")?;
    Ok(Region { x, y, color })
}

fn parse_axis(cur: &mut Cursor<'_>, axis: &str) -> Result<AxisConstraint, Error> {
    cur.expect_ident(axis)?;
    if cur.eat_sym(":") {
        cur.expect_ident("any")?;
        return Ok(AxisConstraint::Any);
    }
    if cur.eat_sym("=") {
        return Ok(AxisConstraint::Eq(parse_term(cur)?));
    }
    if cur.eat_sym("<=") {
        return Ok(AxisConstraint::Le(parse_term(cur)?));
    }
    if cur.eat_sym(">=") {
        return Ok(AxisConstraint::Ge(parse_term(cur)?));
    }
    if cur.at_ident("in") {
        cur.pos += 1;
        cur.expect_sym("[")?;
        let lo = parse_term(cur)?;
        cur.expect_sym(",")?;
        let hi = parse_term(cur)?;
        cur.expect_sym("]")?;
        if !lo.uses_m() && !hi.uses_m() && lo.offset > hi.offset {
            return cur.err("empty coordinate range");
        }
        return Ok(AxisConstraint::Between(lo, hi));
    }
    cur.err(format!("expected a constraint on {axis}, found {}", cur.describe()))
}

fn parse_term(cur: &mut Cursor<'_>) -> Result<Term, Error> {
    let mut term = Term::int(0);
    let mut sign = if cur.eat_sym("-") {
        -1
    } else {
        cur.eat_sym("+");
        1
    };
    loop {
        let (coef, offset) = match cur.bump() {
            Some(Tok::Int(v)) => {
                if cur.eat_sym("*") {
                    match cur.bump() {
                        Some(Tok::Ident(s)) if s == "m" => (*v, 0),
                        Some(Tok::Ident(s)) => {
                            let s = s.clone();
                            cur.pos -= 1;
                            return cur.err(format!("unknown symbol '{s}'"));
                        }
                        _ => {
                            cur.pos -= 1;
                            return cur.err("expected 'm' after '*'");
                        }
                    }
                } else {
                    (0, *v)
                }
            }
            Some(Tok::Ident(s)) if s == "m" => (1, 0),
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                cur.pos -= 1;
                return cur.err(format!("unknown symbol '{s}'"));
            }
            _ => {
                cur.pos -= 1;
                return cur.err(format!("expected a bound, found {}", cur.describe()));
            }
        };
        term.coef = term.coef.checked_add(sign * coef).ok_or_else(overflow(cur))?;
        term.offset = term.offset.checked_add(sign * offset).ok_or_else(overflow(cur))?;
        sign = if cur.eat_sym("+") {
            1
        } else if cur.eat_sym("-") {
            -1
        } else {
            return Ok(term);
        };
    }
}

fn overflow<'a>(cur: &'a Cursor<'_>) -> impl FnOnce() -> Error + 'a {
    move || Error::Syntax { line: cur.line, col: cur.col(), msg: "bound out of range".into() }
}
