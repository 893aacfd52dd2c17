//! Factored logic expressions over region literals.
//!
//! [`translate`] turns a set of final states into an AND/OR tree by
//! repeatedly pulling out the region shared by the most states. The result
//! is true on exactly the states that are supersets of some member of the
//! input set.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::state::StateVector;

/// Largest region count [`equivalent`] will enumerate.
pub const MAX_EQUIVALENCE_REGIONS: usize = 20;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LogicError {
    #[error("cannot translate an empty state set")]
    EmptySet,
    #[error("literal I{region} is outside 1..={regions}")]
    LiteralOutOfRange { region: u32, regions: usize },
    #[error("truth-table check over {0} regions exceeds the limit of {MAX_EQUIVALENCE_REGIONS}")]
    TooManyRegions(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum LogicExpr {
    True,
    /// 1-based region id.
    Literal(u32),
    And(Vec<LogicExpr>),
    Or(Vec<LogicExpr>),
}

impl LogicExpr {
    /// Conjunction with nested ANDs flattened and `True` operands dropped.
    /// Collapses to the single operand, or to `True` when none remain.
    pub fn and(children: impl IntoIterator<Item = LogicExpr>) -> Self {
        let mut flat = Vec::new();
        for child in children {
            match child {
                LogicExpr::True => {}
                LogicExpr::And(grand) => flat.extend(grand),
                other => flat.push(other),
            }
        }
        match flat.len() {
            0 => LogicExpr::True,
            1 => flat.pop().unwrap(),
            _ => LogicExpr::And(flat),
        }
    }

    /// Disjunction with nested ORs flattened and operands put in canonical
    /// order. Any `True` operand makes the whole disjunction `True`.
    pub fn or(children: impl IntoIterator<Item = LogicExpr>) -> Self {
        let mut flat = Vec::new();
        for child in children {
            match child {
                LogicExpr::True => return LogicExpr::True,
                LogicExpr::Or(grand) => flat.extend(grand),
                other => flat.push(other),
            }
        }
        match flat.len() {
            // an empty disjunction has no satisfying state; it cannot arise
            // from the builders above with non-empty input
            0 => panic!("empty disjunction"),
            1 => flat.pop().unwrap(),
            _ => {
                flat.sort_by(canonical_order);
                LogicExpr::Or(flat)
            }
        }
    }

    pub fn literal(region: u32) -> Self {
        LogicExpr::Literal(region)
    }

    /// Smallest region id referenced, `None` for `True`.
    pub fn min_literal(&self) -> Option<u32> {
        self.literals().min()
    }

    pub fn max_literal(&self) -> Option<u32> {
        self.literals().max()
    }

    /// Number of literal occurrences.
    pub fn literal_count(&self) -> usize {
        self.literals().count()
    }

    /// Every literal occurrence, depth first.
    pub fn literals(&self) -> impl Iterator<Item = u32> + '_ {
        let mut stack = vec![self];
        std::iter::from_fn(move || {
            while let Some(node) = stack.pop() {
                match node {
                    LogicExpr::True => {}
                    LogicExpr::Literal(r) => return Some(*r),
                    LogicExpr::And(c) | LogicExpr::Or(c) => stack.extend(c.iter().rev()),
                }
            }
            None
        })
    }

    /// Evaluates against a state. Literals must lie in `1..=state.len()`.
    pub fn eval(&self, state: &StateVector) -> Result<bool, LogicError> {
        self.check_range(state.len())?;
        Ok(self.eval_with(&|region| state.contains(region as usize - 1)))
    }

    /// Evaluates with an arbitrary region-presence oracle.
    pub fn eval_with(&self, present: &impl Fn(u32) -> bool) -> bool {
        match self {
            LogicExpr::True => true,
            LogicExpr::Literal(r) => present(*r),
            LogicExpr::And(c) => c.iter().all(|e| e.eval_with(present)),
            LogicExpr::Or(c) => c.iter().any(|e| e.eval_with(present)),
        }
    }

    pub fn check_range(&self, regions: usize) -> Result<(), LogicError> {
        match self.literals().find(|&r| r == 0 || r as usize > regions) {
            Some(region) => Err(LogicError::LiteralOutOfRange { region, regions }),
            None => Ok(()),
        }
    }

    /// Infix text such as `I1 & (I2 | I3)`.
    pub fn render(&self) -> String {
        self.to_string()
    }

    fn fmt_child(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LogicExpr::And(_) | LogicExpr::Or(_) => write!(f, "({self})"),
            _ => write!(f, "{self}"),
        }
    }
}

fn canonical_order(a: &LogicExpr, b: &LogicExpr) -> Ordering {
    a.min_literal()
        .cmp(&b.min_literal())
        .then_with(|| a.literal_count().cmp(&b.literal_count()))
        .then_with(|| a.to_string().cmp(&b.to_string()))
}

impl fmt::Display for LogicExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (children, sep) = match self {
            LogicExpr::True => return f.write_str("TRUE"),
            LogicExpr::Literal(r) => return write!(f, "I{r}"),
            LogicExpr::And(c) => (c, " & "),
            LogicExpr::Or(c) => (c, " | "),
        };
        for (i, child) in children.iter().enumerate() {
            if i > 0 {
                f.write_str(sep)?;
            }
            child.fmt_child(f)?;
        }
        Ok(())
    }
}

/// Factors a set of final states into a logic expression.
///
/// At each step the region contained in the most states (lowest id on ties)
/// is pulled out: states holding it form `region & T(rest)`, the others are
/// factored separately and OR-ed in. Duplicate states are ignored.
pub fn translate(states: &[StateVector]) -> Result<LogicExpr, LogicError> {
    if states.is_empty() {
        return Err(LogicError::EmptySet);
    }
    Ok(factor(states.iter().map(StateVector::region_ids).collect()))
}

fn factor(mut sets: Vec<Vec<u32>>) -> LogicExpr {
    sets.sort();
    sets.dedup();
    // an empty state is a subset of everything
    if sets.iter().any(Vec::is_empty) {
        return LogicExpr::True;
    }
    if sets.len() == 1 {
        return LogicExpr::and(sets[0].iter().map(|&r| LogicExpr::Literal(r)));
    }

    let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
    for &r in sets.iter().flatten() {
        *counts.entry(r).or_default() += 1;
    }
    // BTreeMap iterates ascending, so the first maximum is the lowest id
    let shared = counts
        .iter()
        .fold(
            (0u32, 0usize),
            |best, (&r, &c)| if c > best.1 { (r, c) } else { best },
        )
        .0;

    let (mut with, without): (Vec<_>, Vec<_>) = sets
        .into_iter()
        .partition(|s| s.binary_search(&shared).is_ok());
    for s in &mut with {
        s.retain(|&r| r != shared);
    }
    let branch = LogicExpr::and([LogicExpr::Literal(shared), factor(with)]);
    if without.is_empty() {
        branch
    } else {
        LogicExpr::or([branch, factor(without)])
    }
}

/// Whether `a` and `b` agree on all `2^regions` states.
pub fn equivalent(a: &LogicExpr, b: &LogicExpr, regions: usize) -> Result<bool, LogicError> {
    if regions > MAX_EQUIVALENCE_REGIONS {
        return Err(LogicError::TooManyRegions(regions));
    }
    a.check_range(regions)?;
    b.check_range(regions)?;
    Ok((0u64..1 << regions).all(|mask| {
        let present = |r: u32| mask >> (r - 1) & 1 == 1;
        a.eval_with(&present) == b.eval_with(&present)
    }))
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Op {
    And,
    Or,
    Lit,
    True,
}

#[derive(Serialize, Deserialize)]
struct Node {
    op: Op,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    children: Vec<LogicExpr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    region: Option<u32>,
}

impl Serialize for LogicExpr {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let node = match self {
            LogicExpr::True => Node {
                op: Op::True,
                children: Vec::new(),
                region: None,
            },
            LogicExpr::Literal(r) => Node {
                op: Op::Lit,
                children: Vec::new(),
                region: Some(*r),
            },
            LogicExpr::And(c) => Node {
                op: Op::And,
                children: c.clone(),
                region: None,
            },
            LogicExpr::Or(c) => Node {
                op: Op::Or,
                children: c.clone(),
                region: None,
            },
        };
        node.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for LogicExpr {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let node = Node::deserialize(deserializer)?;
        match node.op {
            Op::True => Ok(LogicExpr::True),
            Op::Lit => match node.region {
                Some(r) if r >= 1 => Ok(LogicExpr::Literal(r)),
                _ => Err(D::Error::custom("\"lit\" needs a region >= 1")),
            },
            Op::And if !node.children.is_empty() => Ok(LogicExpr::and(node.children)),
            Op::Or if !node.children.is_empty() => Ok(LogicExpr::or(node.children)),
            _ => Err(D::Error::custom("\"and\"/\"or\" need at least one child")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lit(r: u32) -> LogicExpr {
        LogicExpr::Literal(r)
    }

    fn states(m: usize, sets: &[&[u32]]) -> Vec<StateVector> {
        sets.iter()
            .map(|ids| StateVector::from_region_ids(m, ids).unwrap())
            .collect()
    }

    /// I1 & (I4 | (I2 & I3 & (I5 | I6)))
    fn worked_example() -> LogicExpr {
        LogicExpr::and([
            lit(1),
            LogicExpr::or([
                lit(4),
                LogicExpr::and([lit(2), lit(3), LogicExpr::or([lit(5), lit(6)])]),
            ]),
        ])
    }

    #[test]
    fn translate_worked_example() {
        let v = states(6, &[&[1, 2, 3, 5], &[1, 2, 3, 6], &[1, 4]]);
        let t = translate(&v).unwrap();
        assert!(equivalent(&t, &worked_example(), 6).unwrap());
        assert_eq!(t.render(), "I1 & ((I2 & I3 & (I5 | I6)) | I4)");
    }

    #[test]
    fn translate_two_states() {
        let t = translate(&states(3, &[&[1, 2], &[1, 3]])).unwrap();
        assert_eq!(t, LogicExpr::and([lit(1), LogicExpr::or([lit(2), lit(3)])]));
        assert_eq!(t.render(), "I1 & (I2 | I3)");
    }

    #[test]
    fn translate_singletons() {
        assert_eq!(translate(&states(3, &[&[2]])).unwrap(), lit(2));
        assert_eq!(translate(&states(3, &[&[]])).unwrap(), LogicExpr::True);
        assert_eq!(translate(&[]), Err(LogicError::EmptySet));
    }

    #[test]
    fn translate_ignores_duplicates() {
        let t = translate(&states(3, &[&[1, 2], &[1, 2]])).unwrap();
        assert_eq!(t.render(), "I1 & I2");
    }

    #[test]
    fn eval_cases() {
        let s = StateVector::full(3);
        assert!(LogicExpr::True.eval(&s).unwrap());
        assert!(!lit(2).eval(&StateVector::empty(3)).unwrap());
        let e = worked_example();
        assert!(e
            .eval(&StateVector::from_region_ids(6, &[1, 4]).unwrap())
            .unwrap());
        assert!(!e
            .eval(&StateVector::from_region_ids(6, &[1, 2, 3]).unwrap())
            .unwrap());
        assert_eq!(
            lit(4).eval(&s),
            Err(LogicError::LiteralOutOfRange {
                region: 4,
                regions: 3
            })
        );
    }

    #[test]
    fn equivalence_cases() {
        let a = LogicExpr::or([lit(2), lit(3)]);
        let b = LogicExpr::Or(vec![lit(3), lit(2)]);
        assert!(equivalent(&a, &b, 3).unwrap());
        let and = LogicExpr::and([lit(1), lit(2)]);
        let or = LogicExpr::or([lit(1), lit(2)]);
        assert!(!equivalent(&and, &or, 2).unwrap());
        assert_eq!(
            equivalent(&and, &or, 21),
            Err(LogicError::TooManyRegions(21))
        );
    }

    #[test]
    fn render_cases() {
        assert_eq!(LogicExpr::True.render(), "TRUE");
        assert_eq!(
            LogicExpr::and([lit(1), LogicExpr::or([lit(2), lit(3)])]).render(),
            "I1 & (I2 | I3)"
        );
    }

    #[test]
    fn builders_flatten_and_collapse() {
        assert_eq!(LogicExpr::and([lit(1), LogicExpr::True]), lit(1));
        assert_eq!(LogicExpr::or([lit(1), LogicExpr::True]), LogicExpr::True);
        assert_eq!(
            LogicExpr::and([lit(1), LogicExpr::and([lit(2), lit(3)])]),
            LogicExpr::And(vec![lit(1), lit(2), lit(3)])
        );
        assert_eq!(
            LogicExpr::or([lit(3), LogicExpr::or([lit(2), lit(1)])]),
            LogicExpr::Or(vec![lit(1), lit(2), lit(3)])
        );
    }

    #[test]
    fn json_shape() {
        let e = LogicExpr::and([lit(1), LogicExpr::or([lit(2), lit(3)])]);
        let json = serde_json::to_string(&e).unwrap();
        assert_eq!(
            json,
            r#"{"op":"and","children":[{"op":"lit","region":1},{"op":"or","children":[{"op":"lit","region":2},{"op":"lit","region":3}]}]}"#
        );
        assert_eq!(serde_json::from_str::<LogicExpr>(&json).unwrap(), e);
        assert_eq!(
            serde_json::from_str::<LogicExpr>(r#"{"op":"true"}"#).unwrap(),
            LogicExpr::True
        );
        assert!(serde_json::from_str::<LogicExpr>(r#"{"op":"lit"}"#).is_err());
        assert!(serde_json::from_str::<LogicExpr>(r#"{"op":"or","children":[]}"#).is_err());
    }
}
