//! Lattice geometry: points, colored robots, configurations and the
//! occlusion-filtered local view a robot obtains when it looks.
//!
//! Everything here is exact integer arithmetic. Robots agree on both axes,
//! so a local view is the global configuration translated so that the
//! observer sits at the origin; there is never a rotation or reflection.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::ops::{Add, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Point {
    pub x: i64,
    pub y: i64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0, y: 0 };

    pub const fn new(x: i64, y: i64) -> Self {
        Point { x, y }
    }

    pub fn manhattan(self, other: Point) -> i64 {
        (self.x - other.x).abs() + (self.y - other.y).abs()
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

/// Light color. Exactly two exist.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Color {
    A,
    B,
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Color::A => "A",
            Color::B => "B",
        })
    }
}

/// Simulator-side handle for a robot. Rules and views never see it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RobotId(pub usize);

impl fmt::Display for RobotId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RobotRecord {
    pub pos: Point,
    pub color: Color,
}

/// Global truth: the positions and lights of every robot. The robot with
/// handle `RobotId(i)` is stored at index `i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Configuration {
    robots: Vec<RobotRecord>,
}

impl Configuration {
    pub fn new(robots: Vec<RobotRecord>) -> Result<Self, Error> {
        if robots.is_empty() {
            return Err(Error::usage("a configuration needs at least one robot"));
        }
        let mut seen = HashSet::with_capacity(robots.len());
        for r in &robots {
            if !seen.insert(r.pos) {
                return Err(Error::usage(format!("two robots share the point {}", r.pos)));
            }
        }
        Ok(Configuration { robots })
    }

    pub fn from_points(points: &[(i64, i64)], color: Color) -> Result<Self, Error> {
        Self::new(
            points
                .iter()
                .map(|&(x, y)| RobotRecord { pos: Point::new(x, y), color })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.robots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.robots.is_empty()
    }

    pub fn robots(&self) -> &[RobotRecord] {
        &self.robots
    }

    pub fn ids(&self) -> impl Iterator<Item = RobotId> {
        (0..self.robots.len()).map(RobotId)
    }

    pub fn get(&self, id: RobotId) -> Option<&RobotRecord> {
        self.robots.get(id.0)
    }

    pub fn robot(&self, id: RobotId) -> &RobotRecord {
        &self.robots[id.0]
    }

    pub fn positions(&self) -> impl Iterator<Item = Point> + '_ {
        self.robots.iter().map(|r| r.pos)
    }

    pub fn is_occupied(&self, p: Point) -> bool {
        self.robots.iter().any(|r| r.pos == p)
    }

    pub fn occupant(&self, p: Point) -> Option<RobotId> {
        self.robots.iter().position(|r| r.pos == p).map(RobotId)
    }

    /// Overwrites a robot's record. Occupancy is the caller's problem; the
    /// simulator checks it after every event.
    pub(crate) fn set(&mut self, id: RobotId, rec: RobotRecord) {
        self.robots[id.0] = rec;
    }

    pub fn translated(&self, by: Point) -> Configuration {
        Configuration {
            robots: self
                .robots
                .iter()
                .map(|r| RobotRecord { pos: r.pos + by, color: r.color })
                .collect(),
        }
    }

    pub fn min_corner(&self) -> Point {
        let x = self.robots.iter().map(|r| r.pos.x).min().unwrap_or(0);
        let y = self.robots.iter().map(|r| r.pos.y).min().unwrap_or(0);
        Point::new(x, y)
    }

    pub fn max_corner(&self) -> Point {
        let x = self.robots.iter().map(|r| r.pos.x).max().unwrap_or(0);
        let y = self.robots.iter().map(|r| r.pos.y).max().unwrap_or(0);
        Point::new(x, y)
    }

    pub fn count_color(&self, c: Color) -> usize {
        self.robots.iter().filter(|r| r.color == c).count()
    }

    /// Set of (position, color) pairs, ignoring handles.
    pub fn point_set(&self) -> Vec<(Point, Color)> {
        let mut v: Vec<_> = self.robots.iter().map(|r| (r.pos, r.color)).collect();
        v.sort();
        v
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&ConfigFile::from(self)).expect("configuration serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, Error> {
        let file: ConfigFile = serde_json::from_str(text)?;
        file.try_into()
    }
}

/// Wire form: `{"robots":[{"x":0,"y":0,"color":"A"}, ...]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub robots: Vec<RobotEntry>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotEntry {
    pub x: i64,
    pub y: i64,
    pub color: Color,
}

impl From<&Configuration> for ConfigFile {
    fn from(c: &Configuration) -> Self {
        ConfigFile {
            robots: c
                .robots
                .iter()
                .map(|r| RobotEntry { x: r.pos.x, y: r.pos.y, color: r.color })
                .collect(),
        }
    }
}

impl TryFrom<ConfigFile> for Configuration {
    type Error = Error;
    fn try_from(f: ConfigFile) -> Result<Self, Error> {
        Configuration::new(
            f.robots
                .into_iter()
                .map(|e| RobotRecord { pos: Point::new(e.x, e.y), color: e.color })
                .collect(),
        )
    }
}

impl Serialize for Configuration {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        ConfigFile::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Configuration {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let file = ConfigFile::deserialize(d)?;
        Configuration::try_from(file).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ViewEntry {
    pub pos: Point,
    pub color: Color,
}

/// What a robot sees: every unoccluded robot, relative to itself, plus its
/// own light. Entries are kept sorted so equal views compare equal.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LocalView {
    entries: Vec<ViewEntry>,
    pub my_color: Color,
}

impl LocalView {
    /// Builds a view from raw entries, dropping the origin and any entry that
    /// another entry occludes.
    pub fn new(entries: impl IntoIterator<Item = ViewEntry>, my_color: Color) -> Self {
        let raw: Vec<ViewEntry> = entries.into_iter().filter(|e| e.pos != Point::ORIGIN).collect();
        let mut entries = nearest_per_ray(Point::ORIGIN, raw.iter().map(|e| (e.pos, *e)));
        entries.sort();
        LocalView { entries, my_color }
    }

    pub fn entries(&self) -> &[ViewEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, pos: Point, color: Color) -> bool {
        self.entries.binary_search(&ViewEntry { pos, color }).is_ok()
    }

    pub fn occupied(&self, pos: Point) -> bool {
        self.entries.iter().any(|e| e.pos == pos)
    }
}

/// `(p2 - p1) x (p3 - p1) == 0`.
pub fn collinear(p1: Point, p2: Point, p3: Point) -> bool {
    cross(p2 - p1, p3 - p1) == 0
}

fn cross(u: Point, v: Point) -> i128 {
    u.x as i128 * v.y as i128 - u.y as i128 * v.x as i128
}

/// True iff `c` lies strictly inside the open segment from `a` to `b`.
pub fn blocks(a: Point, b: Point, c: Point) -> bool {
    if c == a || c == b || !collinear(a, b, c) {
        return false;
    }
    let within = |lo: i64, hi: i64, v: i64| lo.min(hi) <= v && v <= lo.max(hi);
    within(a.x, b.x, c.x) && within(a.y, b.y, c.y)
}

fn gcd(mut a: i64, mut b: i64) -> i64 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Primitive direction and step count of `d` (which must be nonzero).
fn ray(d: Point) -> (Point, i64) {
    let g = gcd(d.x, d.y);
    (Point::new(d.x / g, d.y / g), g)
}

/// Keeps, for every primitive direction from `from`, only the closest item.
/// On a lattice, `q` is occluded from `from` exactly when another robot sits
/// on the same primitive ray at a smaller multiple.
fn nearest_per_ray<T: Copy>(from: Point, items: impl Iterator<Item = (Point, T)>) -> Vec<T> {
    let mut best: HashMap<Point, (i64, T)> = HashMap::new();
    for (p, item) in items {
        let (dir, steps) = ray(p - from);
        match best.get(&dir) {
            Some(&(s, _)) if s <= steps => {}
            _ => {
                best.insert(dir, (steps, item));
            }
        }
    }
    best.into_values().map(|(_, t)| t).collect()
}

/// The occlusion-filtered, observer-centered view of `observer`.
pub fn visible_set(config: &Configuration, observer: RobotId) -> Result<LocalView, Error> {
    let me = config
        .get(observer)
        .ok_or_else(|| Error::usage(format!("unknown robot {observer}")))?;
    let others = config
        .robots()
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != observer.0)
        .map(|(_, r)| {
            let rel = r.pos - me.pos;
            (r.pos, ViewEntry { pos: rel, color: r.color })
        });
    let mut entries = nearest_per_ray(me.pos, others);
    entries.sort();
    Ok(LocalView { entries, my_color: me.color })
}

/// Whether robots `u` and `v` can see each other.
pub fn mutually_visible(config: &Configuration, u: RobotId, v: RobotId) -> bool {
    let (a, b) = (config.robot(u).pos, config.robot(v).pos);
    !config.positions().any(|c| blocks(a, b, c))
}

/// Maximum pairwise Manhattan distance.
pub fn diameter(config: &Configuration) -> i64 {
    let pts: Vec<Point> = config.positions().collect();
    let mut best = 0;
    for (i, p) in pts.iter().enumerate() {
        for q in &pts[i + 1..] {
            best = best.max(p.manhattan(*q));
        }
    }
    best
}

/// Cells in the smallest axis-aligned rectangle that contains every robot.
pub fn bounding_area(config: &Configuration) -> i64 {
    let lo = config.min_corner();
    let hi = config.max_corner();
    (hi.x - lo.x + 1) * (hi.y - lo.y + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: i64, y: i64) -> Point {
        Point::new(x, y)
    }

    /// Interior lattice points of a segment, enumerated directly.
    fn interior_lattice_points(a: Point, b: Point) -> Vec<Point> {
        let d = b - a;
        let g = gcd(d.x, d.y);
        (1..g).map(|t| p(a.x + d.x / g * t, a.y + d.y / g * t)).collect()
    }

    #[test]
    fn collinear_examples() {
        assert!(collinear(p(0, 0), p(1, 1), p(2, 2)));
        assert!(!collinear(p(0, 0), p(1, 1), p(4, 2)));
        assert!(collinear(p(0, 0), p(0, 1), p(0, 5)));
    }

    #[test]
    fn blocks_examples() {
        assert!(blocks(p(0, 0), p(4, 2), p(2, 1)));
        assert!(!blocks(p(0, 0), p(2, 2), p(1, 0)));
        assert!(!blocks(p(0, 0), p(0, 3), p(0, 3)));
        assert!(!blocks(p(0, 0), p(0, 3), p(0, 4)));
        assert!(!blocks(p(0, 0), p(0, 3), p(0, -1)));
    }

    #[test]
    fn column_occludes_beyond_nearest() {
        let c = Configuration::from_points(&[(0, 0), (0, 1), (0, 2)], Color::A).unwrap();
        let v = visible_set(&c, RobotId(0)).unwrap();
        assert_eq!(v.entries(), &[ViewEntry { pos: p(0, 1), color: Color::A }]);
        assert_eq!(v.my_color, Color::A);
    }

    #[test]
    fn two_robots_see_each_other() {
        let c = Configuration::from_points(&[(3, -2), (-7, 11)], Color::B).unwrap();
        assert_eq!(visible_set(&c, RobotId(0)).unwrap().len(), 1);
        assert_eq!(visible_set(&c, RobotId(1)).unwrap().len(), 1);
    }

    fn ce_n9() -> Configuration {
        let mut robots = vec![
            RobotRecord { pos: p(0, 0), color: Color::B },
            RobotRecord { pos: p(1, 1), color: Color::B },
            RobotRecord { pos: p(1, 10), color: Color::B },
        ];
        for y in 2..=7 {
            robots.push(RobotRecord { pos: p(2, y), color: Color::A });
        }
        Configuration::new(robots).unwrap()
    }

    #[test]
    fn ce_n9_observer_sees_beta() {
        let c = ce_n9();
        let obs = c.occupant(p(2, 2)).unwrap();
        let v = visible_set(&c, obs).unwrap();
        assert!(v.contains(p(-1, 8), Color::B));
        assert!(interior_lattice_points(p(2, 2), p(1, 10)).is_empty());
        // (1,1) sits between (2,2) and the origin.
        assert!(!v.occupied(p(-2, -2)));
    }

    #[test]
    fn diameter_and_area() {
        let one = Configuration::from_points(&[(5, 5)], Color::A).unwrap();
        assert_eq!(diameter(&one), 0);
        assert_eq!(bounding_area(&one), 1);
        let two = Configuration::from_points(&[(0, 0), (3, 4)], Color::A).unwrap();
        assert_eq!(diameter(&two), 7);
        let tall = Configuration::from_points(&[(0, 0), (1, 10)], Color::A).unwrap();
        assert_eq!(bounding_area(&tall), 22);
        assert_eq!(diameter(&ce_n9()), 11);
    }

    #[test]
    fn unknown_observer_is_usage_error() {
        let c = Configuration::from_points(&[(0, 0)], Color::A).unwrap();
        assert!(matches!(visible_set(&c, RobotId(3)), Err(Error::Usage(_))));
    }

    #[test]
    fn duplicate_positions_rejected() {
        assert!(Configuration::from_points(&[(1, 1), (1, 1)], Color::A).is_err());
        assert!(Configuration::new(vec![]).is_err());
    }

    #[test]
    fn json_shape() {
        let c = Configuration::from_points(&[(0, 0), (2, -1)], Color::A).unwrap();
        assert_eq!(
            c.to_json(),
            r#"{"robots":[{"x":0,"y":0,"color":"A"},{"x":2,"y":-1,"color":"A"}]}"#
        );
        assert_eq!(Configuration::from_json(&c.to_json()).unwrap(), c);
        assert!(Configuration::from_json(r#"{"robots":[{"x":0,"y":0,"color":"C"}]}"#).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn config_strategy() -> impl Strategy<Value = Configuration> {
            proptest::collection::hash_set((-6i64..6, -6i64..6), 1..14).prop_map(|pts| {
                let v: Vec<_> = pts.into_iter().collect();
                let robots = v
                    .iter()
                    .enumerate()
                    .map(|(i, &(x, y))| RobotRecord {
                        pos: Point::new(x, y),
                        color: if i % 3 == 0 { Color::B } else { Color::A },
                    })
                    .collect();
                Configuration::new(robots).unwrap()
            })
        }

        proptest! {
            #[test]
            fn blocks_matches_lattice_enumeration(
                ax in -9i64..9, ay in -9i64..9, bx in -9i64..9, by in -9i64..9,
                cx in -9i64..9, cy in -9i64..9,
            ) {
                let (a, b, c) = (p(ax, ay), p(bx, by), p(cx, cy));
                prop_assume!(a != b);
                let oracle = interior_lattice_points(a, b).contains(&c);
                prop_assert_eq!(blocks(a, b, c), oracle);
                prop_assert_eq!(blocks(a, b, c), blocks(b, a, c));
            }

            #[test]
            fn visible_set_matches_brute_force(c in config_strategy()) {
                for obs in c.ids() {
                    let me = c.robot(obs).pos;
                    let mut want: Vec<ViewEntry> = c.ids()
                        .filter(|&q| q != obs)
                        .filter(|&q| {
                            let qp = c.robot(q).pos;
                            !c.positions().any(|r| blocks(me, qp, r))
                        })
                        .map(|q| ViewEntry { pos: c.robot(q).pos - me, color: c.robot(q).color })
                        .collect();
                    want.sort();
                    let got = visible_set(&c, obs).unwrap();
                    prop_assert_eq!(got.entries(), &want[..]);
                    prop_assert!(!got.occupied(Point::ORIGIN));
                    for e in got.entries() {
                        for f in got.entries() {
                            prop_assert!(!blocks(Point::ORIGIN, e.pos, f.pos));
                        }
                    }
                }
            }

            #[test]
            fn occlusion_is_symmetric(c in config_strategy()) {
                for u in c.ids() {
                    for v in c.ids() {
                        if u == v { continue; }
                        let uv = visible_set(&c, u).unwrap().occupied(c.robot(v).pos - c.robot(u).pos);
                        let vu = visible_set(&c, v).unwrap().occupied(c.robot(u).pos - c.robot(v).pos);
                        prop_assert_eq!(uv, vu);
                    }
                }
            }

            #[test]
            fn views_are_translation_invariant(c in config_strategy(), dx in -50i64..50, dy in -50i64..50) {
                let t = c.translated(p(dx, dy));
                for id in c.ids() {
                    prop_assert_eq!(visible_set(&c, id).unwrap(), visible_set(&t, id).unwrap());
                }
            }

            #[test]
            fn local_view_new_filters_occluded(c in config_strategy()) {
                let id = RobotId(0);
                let me = c.robot(id);
                let raw = c.robots().iter().map(|r| ViewEntry { pos: r.pos - me.pos, color: r.color });
                prop_assert_eq!(LocalView::new(raw, me.color), visible_set(&c, id).unwrap());
            }
        }
    }
}
