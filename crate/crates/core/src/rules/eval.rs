use thiserror::Error;

use super::ast::*;
use crate::cv::target_point;
use crate::geometry::{LocalView, Point};

/// Shared coordinate frame recovered from the reference robots.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ReferenceFrame {
    /// Position of the frame origin, in the observer's local coordinates.
    pub origin: Point,
    pub m: i64,
}

/// Quantities a rule may need beyond the raw view.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct EvalContext {
    /// Value substituted for the symbol `m`.
    pub m_hat: Option<i64>,
    pub frame: Option<ReferenceFrame>,
}

impl EvalContext {
    pub fn look_cs(&self) -> bool {
        self.frame.is_some()
    }

    /// The observer's own position in the reference frame.
    pub fn my_location(&self) -> Option<Point> {
        self.frame.map(|f| -f.origin)
    }

    pub fn upsilon(&self) -> Option<i64> {
        self.my_location().map(|p| p.y)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("bound uses m but no value of m is known")]
    UnresolvedM,
    #[error("range [{0},{1}] is empty")]
    EmptyRange(i64, i64),
    #[error("no reference frame")]
    NoFrame,
    #[error("own y coordinate {0} lies outside [0, m-1]")]
    UpsilonOutOfRange(i64),
}

fn resolve(t: Term, ctx: &EvalContext) -> Result<i64, EvalError> {
    if t.coef == 0 {
        return Ok(t.offset);
    }
    let m = ctx.m_hat.ok_or(EvalError::UnresolvedM)?;
    Ok(t.coef * m + t.offset)
}

#[derive(Clone, Copy)]
enum Bounds {
    Any,
    Range(i64, i64),
}

impl Bounds {
    fn contains(self, v: i64) -> bool {
        match self {
            Bounds::Any => true,
            Bounds::Range(lo, hi) => lo <= v && v <= hi,
        }
    }
}

fn bounds(c: AxisConstraint, ctx: &EvalContext) -> Result<Bounds, EvalError> {
    Ok(match c {
        AxisConstraint::Any => Bounds::Any,
        AxisConstraint::Eq(t) => {
            let v = resolve(t, ctx)?;
            Bounds::Range(v, v)
        }
        AxisConstraint::Le(t) => Bounds::Range(i64::MIN, resolve(t, ctx)?),
        AxisConstraint::Ge(t) => Bounds::Range(resolve(t, ctx)?, i64::MAX),
        AxisConstraint::Between(a, b) => {
            let (lo, hi) = (resolve(a, ctx)?, resolve(b, ctx)?);
            if lo > hi {
                return Err(EvalError::EmptyRange(lo, hi));
            }
            Bounds::Range(lo, hi)
        }
    })
}

/// Number of visible robots the atom counts: those inside the union of its
/// regions, or, for a negated atom, those outside all of them. Only robots
/// of the atom's color selector are counted either way.
pub fn count_matching(view: &LocalView, atom: &CountAtom, ctx: &EvalContext) -> Result<u32, EvalError> {
    let boxes = atom
        .regions
        .iter()
        .map(|r| Ok((bounds(r.x, ctx)?, bounds(r.y, ctx)?)))
        .collect::<Result<Vec<_>, EvalError>>()?;
    let color = atom.color();
    let n = view
        .entries()
        .iter()
        .filter(|e| color.matches(e.color))
        .filter(|e| {
            let inside = boxes.iter().any(|(bx, by)| bx.contains(e.pos.x) && by.contains(e.pos.y));
            inside != atom.negated
        })
        .count();
    Ok(n as u32)
}

fn atom_holds(view: &LocalView, atom: &Atom, ctx: &EvalContext) -> Result<bool, EvalError> {
    match atom {
        Atom::Count(c) => Ok(c.cmp.holds(count_matching(view, c, ctx)?)),
        Atom::LookCs(want) => Ok(ctx.look_cs() == *want),
        Atom::AtTarget(want) => {
            let frame = ctx.frame.ok_or(EvalError::NoFrame)?;
            let me = -frame.origin;
            let target = target_point(me.y, frame.m).map_err(|_| EvalError::UpsilonOutOfRange(me.y))?;
            Ok((me == target) == *want)
        }
    }
}

/// The rule's action if its guard and every condition hold. Conditions that
/// cannot be evaluated count as false.
pub fn eval_rule(view: &LocalView, rule: &Rule, ctx: &EvalContext) -> Option<Action> {
    if rule.guard.is_some_and(|g| g != view.my_color) {
        return None;
    }
    for atom in &rule.atoms {
        match atom_holds(view, atom, ctx) {
            Ok(true) => {}
            Ok(false) | Err(_) => return None,
        }
    }
    Some(rule.action)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Selected<'a> {
    pub index: usize,
    pub name: &'a str,
    pub action: Action,
}

/// First matching rule in order, or `None` when the robot waits.
pub fn select_action<'a>(view: &LocalView, ruleset: &'a RuleSet, ctx: &EvalContext) -> Option<Selected<'a>> {
    ruleset.rules.iter().enumerate().find_map(|(index, rule)| {
        eval_rule(view, rule, ctx).map(|action| Selected { index, name: &rule.name, action })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Color, ViewEntry};
    use crate::rules::parse::{parse_rule, parse_ruleset};

    fn view(entries: &[(i64, i64, Color)], me: Color) -> LocalView {
        LocalView::new(
            entries.iter().map(|&(x, y, color)| ViewEntry { pos: Point::new(x, y), color }),
            me,
        )
    }

    fn atom(text: &str) -> CountAtom {
        let r = parse_rule(&format!("T: {text} -> (x+,_)")).unwrap();
        match r.atoms.into_iter().next().unwrap() {
            Atom::Count(c) => c,
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn counting_examples() {
        use Color::*;
        let v = view(&[(-1, 2, A), (0, 3, B), (2, -1, A)], A);
        let ctx = EvalContext::default();
        assert_eq!(count_matching(&v, &atom("#(x<=-1,y>=1,A)=0"), &ctx), Ok(1));
        assert_eq!(count_matching(&v, &atom("#!(x<=-1,y>=1,*)=0"), &ctx), Ok(2));
        let empty = view(&[], A);
        assert_eq!(count_matching(&empty, &atom("#(x:any,y:any,*)=0"), &ctx), Ok(0));
    }

    #[test]
    fn negated_union_is_complement_of_union() {
        use Color::*;
        let v = view(&[(-2, -1, B), (0, 1, A), (3, 3, A)], A);
        let ctx = EvalContext::default();
        assert_eq!(count_matching(&v, &atom("#!(x=-2,y=-1,*)|(x=0,y=1,*)=0"), &ctx), Ok(1));
        assert_eq!(count_matching(&v, &atom("#(x=-2,y=-1,*)|(x=0,y=1,*)=0"), &ctx), Ok(2));
    }

    #[test]
    fn unresolved_m_fails_the_rule() {
        use Color::*;
        let v = view(&[(0, -4, B)], A);
        let a = atom("#(x=0,y=-m+1,B)=1");
        assert_eq!(count_matching(&v, &a, &EvalContext::default()), Err(EvalError::UnresolvedM));
        let ctx = EvalContext { m_hat: Some(5), frame: None };
        assert_eq!(count_matching(&v, &a, &ctx), Ok(1));
        let r = parse_rule("R: #(x=0,y=-m+1,B)=1 -> (x+,_)").unwrap();
        assert_eq!(eval_rule(&v, &r, &EvalContext::default()), None);
        assert!(eval_rule(&v, &r, &ctx).is_some());
    }

    #[test]
    fn guard_mismatch_never_fires() {
        let r = parse_rule("R: myC=B & #(x:any,y:any,*)>=0 -> (x+,_)").unwrap();
        assert_eq!(eval_rule(&view(&[], Color::A), &r, &EvalContext::default()), None);
        assert!(eval_rule(&view(&[], Color::B), &r, &EvalContext::default()).is_some());
    }

    #[test]
    fn first_match_wins() {
        let rs = parse_ruleset(
            "P: #(x:any,y:any,*)>=1 -> (y+,_)\nQ: #(x:any,y:any,*)>=1 -> (y-,_)\nZ: #(x:any,y:any,*)=0 -> (_,B)",
        )
        .unwrap();
        let ctx = EvalContext::default();
        let s = select_action(&view(&[(1, 1, Color::A)], Color::A), &rs, &ctx).unwrap();
        assert_eq!((s.index, s.name), (0, "P"));
        assert_eq!(s.action.mv, Some(Move::YPlus));
        let s = select_action(&view(&[], Color::A), &rs, &ctx).unwrap();
        assert_eq!(s.name, "Z");
        let none = parse_ruleset("P: #(x:any,y:any,*)>=5 -> (y+,_)").unwrap();
        assert_eq!(select_action(&view(&[], Color::A), &none, &ctx), None);
    }

    #[test]
    fn at_target_uses_frame() {
        let r = parse_rule("R: lookcs=1 & myloc=target -> (_,B)").unwrap();
        let v = view(&[], Color::A);
        // Observer at (3,5) in the frame with m=11: target is (3,5).
        let ctx = EvalContext { m_hat: Some(11), frame: Some(ReferenceFrame { origin: Point::new(-3, -5), m: 11 }) };
        assert!(eval_rule(&v, &r, &ctx).is_some());
        let off = EvalContext { frame: Some(ReferenceFrame { origin: Point::new(-2, -5), m: 11 }), ..ctx };
        assert!(eval_rule(&v, &r, &off).is_none());
        assert!(eval_rule(&v, &r, &EvalContext::default()).is_none());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_view() -> impl Strategy<Value = LocalView> {
            proptest::collection::vec((-6i64..=6, -6i64..=6, any::<bool>()), 0..25).prop_map(|v| {
                LocalView::new(
                    v.into_iter().map(|(x, y, b)| ViewEntry {
                        pos: Point::new(x, y),
                        color: if b { Color::B } else { Color::A },
                    }),
                    Color::A,
                )
            })
        }

        fn arb_axis() -> impl Strategy<Value = AxisConstraint> {
            prop_oneof![
                Just(AxisConstraint::Any),
                (-5i64..=5).prop_map(|k| AxisConstraint::Eq(Term::int(k))),
                (-5i64..=5).prop_map(|k| AxisConstraint::Le(Term::int(k))),
                (-5i64..=5).prop_map(|k| AxisConstraint::Ge(Term::int(k))),
                (-5i64..=5, 0i64..5).prop_map(|(a, w)| AxisConstraint::Between(Term::int(a), Term::int(a + w))),
            ]
        }

        fn arb_regions(color: ColorSel) -> impl Strategy<Value = Vec<Region>> {
            proptest::collection::vec((arb_axis(), arb_axis()), 1..4)
                .prop_map(move |v| v.into_iter().map(|(x, y)| Region::new(x, y, color)).collect())
        }

        proptest! {
            #[test]
            fn complement_consistency(v in arb_view(), regions in arb_regions(ColorSel::Any)) {
                let ctx = EvalContext::default();
                let pos = CountAtom { regions: regions.clone(), negated: false, cmp: Comparator::Eq(0) };
                let neg = CountAtom { regions, negated: true, cmp: Comparator::Eq(0) };
                let total = count_matching(&v, &pos, &ctx).unwrap() + count_matching(&v, &neg, &ctx).unwrap();
                prop_assert_eq!(total as usize, v.len());
            }

            #[test]
            fn adding_an_inside_entry_never_decreases(v in arb_view(), regions in arb_regions(ColorSel::A),
                                                       x in -6i64..=6, y in -6i64..=6) {
                let ctx = EvalContext::default();
                let a = CountAtom { regions, negated: false, cmp: Comparator::Eq(0) };
                let before = count_matching(&v, &a, &ctx).unwrap();
                let mut entries = v.entries().to_vec();
                entries.push(ViewEntry { pos: Point::new(x, y), color: Color::A });
                let grown = LocalView::new(entries, v.my_color);
                // Only compare when the new entry neither hides nor is hidden.
                prop_assume!(grown.len() == v.len() + 1);
                prop_assert!(count_matching(&grown, &a, &ctx).unwrap() >= before);
            }
        }
    }
}
