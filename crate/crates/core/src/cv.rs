//! The complete-visibility algorithm itself: the shipped rule set, the
//! reference frame robots rebuild from what they see, prime arithmetic for
//! the final placement, and classifiers for the named milestone
//! configurations.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Color, Configuration, LocalView, Point};
use crate::rules::{parse_rule, parse_ruleset, EvalContext, ReferenceFrame, Rule, RuleSet};

/// The rules exactly as published.
pub const BUILTIN_RULES: &str = include_str!("../rules/cv26.rules");
/// Corrections applied on top of [`BUILTIN_RULES`].
pub const BUILTIN_ERRATA: &str = include_str!("../rules/cv26.errata");

/// Smallest number of robots the algorithm handles.
pub const MIN_ROBOTS: usize = 4;

pub fn is_prime(n: i64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    if n % 3 == 0 {
        return n == 3;
    }
    let mut d = 5;
    while d * d <= n {
        if n % d == 0 || n % (d + 2) == 0 {
            return false;
        }
        d += 6;
    }
    true
}

pub fn smallest_prime_geq(n: i64) -> Result<i64> {
    if n < 2 {
        return Err(Error::usage(format!("smallest_prime_geq needs n >= 2, got {n}")));
    }
    Ok((n..).find(|&k| is_prime(k)).expect("primes are unbounded"))
}

/// `(υ² mod m, υ)`.
pub fn target_point(upsilon: i64, m: i64) -> Result<Point> {
    if m < 1 || !(0..m).contains(&upsilon) {
        return Err(Error::usage(format!("upsilon {upsilon} outside [0, {}]", m - 1)));
    }
    Ok(Point::new((upsilon * upsilon).rem_euclid(m), upsilon))
}

/// `{(i² mod m, i) : i ∈ iset}` in the order given.
pub fn roth_points(m: i64, iset: &[i64]) -> Result<Vec<Point>> {
    if !is_prime(m) {
        return Err(Error::usage(format!("{m} is not prime")));
    }
    let mut seen = std::collections::HashSet::new();
    iset.iter()
        .map(|&i| {
            if !seen.insert(i) {
                return Err(Error::usage(format!("index {i} repeated")));
            }
            target_point(i, m)
        })
        .collect()
}

/// Recognizes the reference robots in a view: a B robot `b0` with B robots
/// at `b0+(1,1)` and `b0+(1,k)`, `k >= 3`. The frame then has `m = k+1`.
/// Several candidates can only arise from a bug elsewhere; the lowest one
/// wins and the audit reports the mismatch.
pub fn find_frame(view: &LocalView) -> Option<ReferenceFrame> {
    frame_candidates(view).into_iter().next()
}

/// Every `(b0, k)` pattern match in the view, lowest `b0` first.
pub fn frame_candidates(view: &LocalView) -> Vec<ReferenceFrame> {
    let bs: Vec<Point> = view.entries().iter().filter(|e| e.color == Color::B).map(|e| e.pos).collect();
    let mut out = Vec::new();
    let mut sorted = bs.clone();
    sorted.sort_by_key(|p| (p.y, p.x));
    for &b0 in &sorted {
        if !view.contains(b0 + Point::new(1, 1), Color::B) {
            continue;
        }
        let mut ks: Vec<i64> = bs.iter().filter(|p| p.x == b0.x + 1 && p.y - b0.y >= 3).map(|p| p.y - b0.y).collect();
        ks.sort_unstable();
        for k in ks.into_iter().rev() {
            out.push(ReferenceFrame { origin: b0, m: k + 1 });
        }
    }
    out
}

/// What a robot can work out from its snapshot beyond raw counts.
pub fn derive_context(view: &LocalView) -> EvalContext {
    match find_frame(view) {
        Some(frame) => EvalContext { m_hat: Some(frame.m), frame: Some(frame) },
        None => {
            let n = view.len() as i64 + 1;
            EvalContext { m_hat: smallest_prime_geq(n).ok(), frame: None }
        }
    }
}

/// One corrected rule and the reason for it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Erratum {
    pub rule: Rule,
    pub why: String,
}

/// Parses an errata file: `<rule line> ;; <justification>` per line.
pub fn parse_errata(text: &str) -> Result<Vec<Erratum>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with("//") {
            continue;
        }
        let (rule_text, why) = line.split_once(";;").ok_or_else(|| Error::Syntax {
            line: idx + 1,
            col: raw.len() + 1,
            msg: "expected ';;' followed by a justification".into(),
        })?;
        let why = why.trim();
        if why.is_empty() {
            return Err(Error::Syntax { line: idx + 1, col: raw.len() + 1, msg: "empty justification".into() });
        }
        let rule = parse_rule(rule_text).map_err(|e| match e {
            Error::Syntax { col, msg, .. } => Error::Syntax { line: idx + 1, col, msg },
            other => other,
        })?;
        out.push(Erratum { rule, why: why.to_string() });
    }
    Ok(out)
}

/// Replaces rules by name. The replacement keeps the original's position
/// and phase tag.
pub fn apply_errata(base: &RuleSet, errata: &[Erratum]) -> Result<RuleSet> {
    let mut out = base.clone();
    for e in errata {
        let idx = out
            .position(&e.rule.name)
            .ok_or_else(|| Error::RuleSet(format!("erratum for unknown rule {}", e.rule.name)))?;
        let phase = out.rules[idx].phase;
        out.rules[idx] = Rule { phase, ..e.rule.clone() };
    }
    Ok(out)
}

/// The published rules, without corrections.
pub fn literal_ruleset() -> Result<RuleSet> {
    let rs = parse_ruleset(BUILTIN_RULES)?;
    validate_cv26(&rs)?;
    Ok(rs)
}

/// The published rules with the shipped errata applied.
pub fn builtin_ruleset() -> Result<RuleSet> {
    let rs = apply_errata(&literal_ruleset()?, &parse_errata(BUILTIN_ERRATA)?)?;
    validate_cv26(&rs)?;
    Ok(rs)
}

pub fn builtin_errata() -> Result<Vec<Erratum>> {
    parse_errata(BUILTIN_ERRATA)
}

/// Reads a rule file. A sibling file with the `.errata` extension, when
/// present, is applied on top.
pub fn load_ruleset(path: &Path) -> Result<RuleSet> {
    let text = std::fs::read_to_string(path)?;
    let rs = parse_ruleset(&text)?;
    let errata_path = path.with_extension("errata");
    if errata_path.is_file() && errata_path != path {
        let errata = parse_errata(&std::fs::read_to_string(&errata_path)?)?;
        return apply_errata(&rs, &errata);
    }
    Ok(rs)
}

/// Shape check for the 26-rule algorithm: names `R1..R26` in order and
/// phases 1, 2, 3 covering 15, 8 and 3 rules.
pub fn validate_cv26(rs: &RuleSet) -> Result<()> {
    if rs.len() != 26 {
        return Err(Error::RuleSet(format!("expected 26 rules, found {}", rs.len())));
    }
    for (i, r) in rs.rules.iter().enumerate() {
        let want_name = format!("R{}", i + 1);
        if r.name != want_name {
            return Err(Error::RuleSet(format!("rule {} is named {}, expected {want_name}", i + 1, r.name)));
        }
        let want_phase = match i {
            0..=14 => 1,
            15..=22 => 2,
            _ => 3,
        };
        if r.phase != Some(want_phase) {
            return Err(Error::RuleSet(format!("{} should carry phase {want_phase}", r.name)));
        }
    }
    Ok(())
}

/// Preconditions for running the shipped algorithm: at least four robots,
/// all of color A.
pub fn check_initial(config: &Configuration) -> Result<()> {
    if config.len() < MIN_ROBOTS {
        return Err(Error::usage(format!(
            "the algorithm needs at least {MIN_ROBOTS} robots, got {}",
            config.len()
        )));
    }
    if config.count_color(Color::B) > 0 {
        return Err(Error::usage("every robot must start with color A"));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Milestone {
    #[serde(rename = "C_A")]
    CA,
    #[serde(rename = "C_B")]
    CB,
    #[serde(rename = "C_C")]
    CC,
    #[serde(rename = "C_D")]
    CD,
    #[serde(rename = "C_E")]
    CE,
    #[serde(rename = "C_F")]
    CF,
    #[serde(rename = "none")]
    None,
}

impl Milestone {
    pub const ORDERED: [Milestone; 6] =
        [Milestone::CA, Milestone::CB, Milestone::CC, Milestone::CD, Milestone::CE, Milestone::CF];

    /// Position in the intended progression; `None` for the untagged case.
    pub fn rank(self) -> Option<usize> {
        Self::ORDERED.iter().position(|&m| m == self)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Milestone::CA => "C_A",
            Milestone::CB => "C_B",
            Milestone::CC => "C_C",
            Milestone::CD => "C_D",
            Milestone::CE => "C_E",
            Milestone::CF => "C_F",
            Milestone::None => "none",
        }
    }
}

impl fmt::Display for Milestone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Tags a configuration with the first milestone whose definition it meets.
pub fn classify(config: &Configuration) -> Milestone {
    if config.len() < MIN_ROBOTS {
        return Milestone::None;
    }
    type Check = fn(&Configuration) -> bool;
    let checks: [(Milestone, Check); 6] = [
        (Milestone::CA, is_ca),
        (Milestone::CB, is_cb),
        (Milestone::CC, is_cc),
        (Milestone::CD, is_cd),
        (Milestone::CE, is_ce),
        (Milestone::CF, is_cf),
    ];
    checks.iter().find(|(_, f)| f(config)).map_or(Milestone::None, |(m, _)| *m)
}

fn colored(config: &Configuration, c: Color) -> Vec<Point> {
    config.robots().iter().filter(|r| r.color == c).map(|r| r.pos).collect()
}

/// One B robot, strictly lowest, and no robot to its right.
fn is_ca(config: &Configuration) -> bool {
    let bs = colored(config, Color::B);
    let [b] = bs[..] else { return false };
    config.positions().filter(|&p| p != b).all(|p| p.y > b.y && p.x <= b.x)
}

/// Two B robots on one vertical line with nothing between them, neither
/// above any A robot.
fn is_cb(config: &Configuration) -> bool {
    let bs = colored(config, Color::B);
    let [b1, b2] = bs[..] else { return false };
    if b1.x != b2.x {
        return false;
    }
    let (lo, hi) = (b1.y.min(b2.y), b1.y.max(b2.y));
    let between = config.positions().any(|p| p.x == b1.x && lo < p.y && p.y < hi);
    !between && colored(config, Color::A).iter().all(|a| a.y >= hi)
}

fn one_column(config: &Configuration) -> Option<Vec<(i64, Color)>> {
    let x = config.robots()[0].pos.x;
    if config.positions().any(|p| p.x != x) {
        return None;
    }
    let mut col: Vec<(i64, Color)> = config.robots().iter().map(|r| (r.pos.y, r.color)).collect();
    col.sort();
    Some(col)
}

/// One column, B at both ends, A in between.
fn is_cc(config: &Configuration) -> bool {
    let Some(col) = one_column(config) else { return false };
    let last = col.len() - 1;
    col.iter().enumerate().all(|(i, &(_, c))| (c == Color::B) == (i == 0 || i == last))
}

/// One gap-free column of B robots.
fn is_cd(config: &Configuration) -> bool {
    let Some(col) = one_column(config) else { return false };
    col.iter().all(|&(_, c)| c == Color::B) && col.windows(2).all(|w| w[1].0 == w[0].0 + 1)
}

/// The B robot with the smallest y, or `None` if that is ambiguous.
fn lowest_b(config: &Configuration) -> Option<Point> {
    let bs = colored(config, Color::B);
    let min_y = bs.iter().map(|p| p.y).min()?;
    let lowest: Vec<Point> = bs.into_iter().filter(|p| p.y == min_y).collect();
    match lowest[..] {
        [p] => Some(p),
        _ => None,
    }
}

/// References at `(0,0)`, `(1,1)`, `(1,m-1)` and A robots filling
/// `(2,2)..(2,n-2)`.
fn is_ce(config: &Configuration) -> bool {
    let n = config.len() as i64;
    let Ok(m) = smallest_prime_geq(n) else { return false };
    let Some(o) = lowest_b(config) else { return false };
    let mut want: Vec<(Point, Color)> = vec![
        (Point::new(0, 0), Color::B),
        (Point::new(1, 1), Color::B),
        (Point::new(1, m - 1), Color::B),
    ];
    want.extend((2..=n - 2).map(|y| (Point::new(2, y), Color::A)));
    let mut have: Vec<(Point, Color)> = config.robots().iter().map(|r| (r.pos - o, r.color)).collect();
    want.sort();
    have.sort();
    want == have
}

/// All B, each at `(i² mod m, i)` relative to the lowest robot, distinct i.
fn is_cf(config: &Configuration) -> bool {
    if config.count_color(Color::A) > 0 {
        return false;
    }
    let Ok(m) = smallest_prime_geq(config.len() as i64) else { return false };
    let Some(o) = lowest_b(config) else { return false };
    let rel: Vec<Point> = config.positions().map(|p| p - o).collect();
    let iset: Vec<i64> = rel.iter().map(|p| p.y).collect();
    let Ok(mut want) = roth_points(m, &iset) else { return false };
    let mut have = rel;
    want.sort();
    have.sort();
    want == have
}

/// The reference frame as the simulator knows it: the robot at the frame
/// origin and the true `m`, when the three reference robots are in place.
pub fn ground_truth_frames(config: &Configuration) -> Vec<ReferenceFrame> {
    let Ok(m) = smallest_prime_geq(config.len() as i64) else { return Vec::new() };
    let is_b = |p: Point| config.occupant(p).is_some_and(|id| config.robot(id).color == Color::B);
    colored(config, Color::B)
        .into_iter()
        .filter(|&b0| is_b(b0 + Point::new(1, 1)) && is_b(b0 + Point::new(1, m - 1)))
        .map(|origin| ReferenceFrame { origin, m })
        .collect()
}
