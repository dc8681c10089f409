use std::fmt;

use crate::geometry::Color;

/// A bound of the form `coef·m + offset`, where `m` is resolved at
/// evaluation time. Plain integers have `coef == 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Term {
    pub coef: i64,
    pub offset: i64,
}

impl Term {
    pub const fn int(v: i64) -> Self {
        Term { coef: 0, offset: v }
    }

    pub const fn of_m(coef: i64, offset: i64) -> Self {
        Term { coef, offset }
    }

    pub fn uses_m(&self) -> bool {
        self.coef != 0
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coef == 0 {
            return write!(f, "{}", self.offset);
        }
        match self.coef {
            1 => f.write_str("m")?,
            -1 => f.write_str("-m")?,
            k => write!(f, "{k}*m")?,
        }
        match self.offset {
            0 => Ok(()),
            c if c > 0 => write!(f, "+{c}"),
            c => write!(f, "{c}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AxisConstraint {
    Any,
    Eq(Term),
    Le(Term),
    Ge(Term),
    Between(Term, Term),
}

impl AxisConstraint {
    pub fn uses_m(&self) -> bool {
        match self {
            AxisConstraint::Any => false,
            AxisConstraint::Eq(t) | AxisConstraint::Le(t) | AxisConstraint::Ge(t) => t.uses_m(),
            AxisConstraint::Between(a, b) => a.uses_m() || b.uses_m(),
        }
    }

    fn write(&self, axis: char, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AxisConstraint::Any => write!(f, "{axis}:any"),
            AxisConstraint::Eq(t) => write!(f, "{axis}={t}"),
            AxisConstraint::Le(t) => write!(f, "{axis}<={t}"),
            AxisConstraint::Ge(t) => write!(f, "{axis}>={t}"),
            AxisConstraint::Between(a, b) => write!(f, "{axis} in [{a},{b}]"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ColorSel {
    A,
    B,
    Any,
}

impl ColorSel {
    pub fn matches(self, c: Color) -> bool {
        match self {
            ColorSel::Any => true,
            ColorSel::A => c == Color::A,
            ColorSel::B => c == Color::B,
        }
    }
}

impl fmt::Display for ColorSel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ColorSel::A => "A",
            ColorSel::B => "B",
            ColorSel::Any => "*",
        })
    }
}

/// One `(X, Y, C)` triplet.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Region {
    pub x: AxisConstraint,
    pub y: AxisConstraint,
    pub color: ColorSel,
}

impl Region {
    pub fn new(x: AxisConstraint, y: AxisConstraint, color: ColorSel) -> Self {
        Region { x, y, color }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        self.x.write('x', f)?;
        f.write_str(",")?;
        self.y.write('y', f)?;
        write!(f, ",{})", self.color)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Comparator {
    Eq(u32),
    Le(u32),
    Ge(u32),
    Between(u32, u32),
}

impl Comparator {
    pub fn holds(self, n: u32) -> bool {
        match self {
            Comparator::Eq(k) => n == k,
            Comparator::Le(k) => n <= k,
            Comparator::Ge(k) => n >= k,
            Comparator::Between(lo, hi) => lo <= n && n <= hi,
        }
    }
}

impl fmt::Display for Comparator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Comparator::Eq(k) => write!(f, "={k}"),
            Comparator::Le(k) => write!(f, "<={k}"),
            Comparator::Ge(k) => write!(f, ">={k}"),
            Comparator::Between(lo, hi) => write!(f, " in [{lo},{hi}]"),
        }
    }
}

/// `#(...)|(...) cmp k`. When `negated`, the counted set is every visible
/// robot of the shared color that lies in none of the regions.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CountAtom {
    pub regions: Vec<Region>,
    pub negated: bool,
    pub cmp: Comparator,
}

impl CountAtom {
    pub fn color(&self) -> ColorSel {
        self.regions[0].color
    }
}

impl fmt::Display for CountAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("#")?;
        if self.negated {
            f.write_str("!")?;
        }
        for (i, r) in self.regions.iter().enumerate() {
            if i > 0 {
                f.write_str("|")?;
            }
            write!(f, "{r}")?;
        }
        write!(f, "{}", self.cmp)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Atom {
    Count(CountAtom),
    /// `lookcs=1` / `lookcs=0`: whether the observer recognizes the three
    /// reference robots.
    LookCs(bool),
    /// `myloc=target` / `myloc!=target`: whether the observer already sits on
    /// its goal cell in the reference frame. Never holds without a frame.
    AtTarget(bool),
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Count(c) => write!(f, "{c}"),
            Atom::LookCs(b) => write!(f, "lookcs={}", u8::from(*b)),
            Atom::AtTarget(true) => f.write_str("myloc=target"),
            Atom::AtTarget(false) => f.write_str("myloc!=target"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Move {
    XPlus,
    XMinus,
    YPlus,
    YMinus,
}

impl Move {
    pub fn delta(self) -> crate::geometry::Point {
        use crate::geometry::Point;
        match self {
            Move::XPlus => Point::new(1, 0),
            Move::XMinus => Point::new(-1, 0),
            Move::YPlus => Point::new(0, 1),
            Move::YMinus => Point::new(0, -1),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Move::XPlus => "x+",
            Move::XMinus => "x-",
            Move::YPlus => "y+",
            Move::YMinus => "y-",
        }
    }

    pub fn parse(s: &str) -> Option<Move> {
        Some(match s {
            "x+" => Move::XPlus,
            "x-" => Move::XMinus,
            "y+" => Move::YPlus,
            "y-" => Move::YMinus,
            _ => return None,
        })
    }
}

impl serde::Serialize for Move {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> serde::Deserialize<'de> for Move {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Move::parse(&s).ok_or_else(|| serde::de::Error::custom(format!("unknown move {s:?}")))
    }
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Action {
    pub mv: Option<Move>,
    pub recolor: Option<Color>,
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.mv {
            Some(m) => write!(f, "({m}, ")?,
            None => f.write_str("(_, ")?,
        }
        match self.recolor {
            Some(c) => write!(f, "{c})"),
            None => f.write_str("_)"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Rule {
    pub name: String,
    pub phase: Option<u8>,
    pub guard: Option<Color>,
    pub atoms: Vec<Atom>,
    pub action: Action,
}

impl Rule {
    /// Whether any bound mentions `m`.
    pub fn uses_m(&self) -> bool {
        self.atoms.iter().any(|a| match a {
            Atom::Count(c) => c.regions.iter().any(|r| r.x.uses_m() || r.y.uses_m()),
            _ => false,
        })
    }

    /// Whether the rule can only fire with a recognized reference frame.
    pub fn needs_frame(&self) -> bool {
        self.atoms.iter().any(|a| matches!(a, Atom::LookCs(true) | Atom::AtTarget(_)))
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:", self.name)?;
        let mut first = true;
        if let Some(c) = self.guard {
            write!(f, " myC={c}")?;
            first = false;
        }
        for a in &self.atoms {
            if !first {
                f.write_str(" &")?;
            }
            write!(f, " {a}")?;
            first = false;
        }
        write!(f, " -> {}", self.action)
    }
}

/// Ordered rules; the first rule whose conditions hold wins.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct RuleSet {
    pub rules: Vec<Rule>,
}

impl RuleSet {
    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| r.name == name)
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.rules.iter().position(|r| r.name == name)
    }
}

/// Canonical text: one rule per line, `@phase N` whenever the phase tag
/// changes.
impl fmt::Display for RuleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut phase = None;
        for r in &self.rules {
            if r.phase != phase {
                if let Some(p) = r.phase {
                    writeln!(f, "@phase {p}")?;
                } else {
                    writeln!(f, "@phase none")?;
                }
                phase = r.phase;
            }
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}
