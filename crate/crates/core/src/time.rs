//! Per-level time models, the union time model and consistency queries.
//!
//! Every instant is an exact rational [`Timestamp`]. A level's time model is
//! an explicit, strictly increasing list of ticks; the simulation time model
//! is the sorted union of all level tick lists, and every level must share
//! the same first and last tick.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use num_rational::Rational64;
use num_traits::{CheckedAdd, CheckedSub, Signed};
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::state::LevelId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TimeError {
    #[error("{0} is the final tick and has no successor")]
    QueryAtFinalTick(Timestamp),
    #[error("{0} is not a tick of the time model")]
    NotATick(Timestamp),
    #[error("{t} lies outside the simulation bounds [{min}, {max}]")]
    OutOfBounds {
        t: Timestamp,
        min: Timestamp,
        max: Timestamp,
    },
    #[error("level {0} needs at least two ticks")]
    TooFewTicks(LevelId),
    #[error("ticks of level {level} are not strictly increasing at {at}")]
    NotIncreasing { level: LevelId, at: Timestamp },
    #[error("level {level} spans [{min}, {max}] but the simulation spans [{expected_min}, {expected_max}]")]
    MismatchedBounds {
        level: LevelId,
        min: Timestamp,
        max: Timestamp,
        expected_min: Timestamp,
        expected_max: Timestamp,
    },
    #[error("a simulation needs at least one level")]
    NoLevels,
    #[error("level {0} is declared twice")]
    DuplicateLevel(LevelId),
    #[error("unknown level {0}")]
    UnknownLevel(LevelId),
    #[error("periodic time model needs a positive step and an end reachable from the start")]
    BadPeriod,
    #[error("invalid timestamp {0:?}")]
    Parse(String),
}

/// An exact rational instant, kept in reduced form with a positive denominator.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Timestamp(Rational64);

impl Timestamp {
    pub fn new(numer: i64, denom: i64) -> Result<Self, TimeError> {
        if denom == 0 {
            return Err(TimeError::Parse(format!("{numer}/0")));
        }
        Ok(Timestamp(Rational64::new(numer, denom)))
    }

    pub const fn from_integer(value: i64) -> Self {
        Timestamp(Rational64::new_raw(value, 1))
    }

    pub fn numer(&self) -> i64 {
        *self.0.numer()
    }

    pub fn denom(&self) -> i64 {
        *self.0.denom()
    }

    pub fn as_ratio(&self) -> Rational64 {
        self.0
    }

    pub fn checked_add(self, rhs: Timestamp) -> Option<Timestamp> {
        self.0.checked_add(&rhs.0).map(Timestamp)
    }

    pub fn checked_sub(self, rhs: Timestamp) -> Option<Timestamp> {
        self.0.checked_sub(&rhs.0).map(Timestamp)
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }
}

impl From<i64> for Timestamp {
    fn from(value: i64) -> Self {
        Timestamp::from_integer(value)
    }
}

impl From<Rational64> for Timestamp {
    fn from(value: Rational64) -> Self {
        Timestamp(value)
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numer(), self.denom())
    }
}

impl fmt::Debug for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Timestamp {
    type Err = TimeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parse = |part: &str| {
            part.trim()
                .parse::<i64>()
                .map_err(|_| TimeError::Parse(s.to_string()))
        };
        match s.split_once('/') {
            Some((n, d)) => Timestamp::new(parse(n)?, parse(d)?),
            None => Ok(Timestamp::from_integer(parse(s)?)),
        }
    }
}

impl Serialize for Timestamp {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Timestamp {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct Visitor;

        impl de::Visitor<'_> for Visitor {
            type Value = Timestamp;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("an integer or a \"num/den\" rational")
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Timestamp, E> {
                Ok(Timestamp::from_integer(v))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Timestamp, E> {
                i64::try_from(v)
                    .map(Timestamp::from_integer)
                    .map_err(|_| E::custom("timestamp out of range"))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Timestamp, E> {
                v.parse().map_err(E::custom)
            }
        }

        deserializer.deserialize_any(Visitor)
    }
}

/// An open interval `]lower, upper[`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Interval {
    pub lower: Timestamp,
    pub upper: Timestamp,
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "]{}, {}[", self.lower, self.upper)
    }
}

/// The open interval `]lower, upper[` between two consecutive ticks of a level.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TransitoryPeriod {
    pub level: LevelId,
    pub lower: Timestamp,
    pub upper: Timestamp,
}

impl TransitoryPeriod {
    pub fn contains(&self, t: Timestamp) -> bool {
        self.lower < t && t < self.upper
    }

    pub fn interval(&self) -> Interval {
        Interval {
            lower: self.lower,
            upper: self.upper,
        }
    }
}

impl fmt::Display for TransitoryPeriod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "]{}, {}[_{}", self.lower, self.upper, self.level)
    }
}

fn successor_in(ticks: &[Timestamp], t: Timestamp) -> Result<Timestamp, TimeError> {
    let idx = ticks.binary_search(&t).map_err(|_| TimeError::NotATick(t))?;
    ticks
        .get(idx + 1)
        .copied()
        .ok_or(TimeError::QueryAtFinalTick(t))
}

fn predecessor_in(ticks: &[Timestamp], t: Timestamp) -> Result<Option<Timestamp>, TimeError> {
    let idx = ticks.binary_search(&t).map_err(|_| TimeError::NotATick(t))?;
    Ok(idx.checked_sub(1).map(|i| ticks[i]))
}

/// The ordered, finite set of instants at which one level is consistent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LevelTimeModel {
    level: LevelId,
    ticks: Vec<Timestamp>,
}

impl LevelTimeModel {
    pub fn new(level: LevelId, ticks: Vec<Timestamp>) -> Result<Self, TimeError> {
        if ticks.len() < 2 {
            return Err(TimeError::TooFewTicks(level));
        }
        if let Some(w) = ticks.windows(2).find(|w| w[0] >= w[1]) {
            return Err(TimeError::NotIncreasing { level, at: w[1] });
        }
        Ok(LevelTimeModel { level, ticks })
    }

    /// Ticks `start, start + step, ...` up to and including `end`, which must be
    /// reached exactly.
    pub fn periodic(
        level: LevelId,
        start: Timestamp,
        step: Timestamp,
        end: Timestamp,
    ) -> Result<Self, TimeError> {
        if !step.is_positive() || end <= start {
            return Err(TimeError::BadPeriod);
        }
        let mut ticks = vec![start];
        let mut t = start;
        while t < end {
            t = t.checked_add(step).ok_or(TimeError::BadPeriod)?;
            ticks.push(t);
        }
        if t != end {
            return Err(TimeError::BadPeriod);
        }
        LevelTimeModel::new(level, ticks)
    }

    /// Integer ticks `0, step, 2*step, ..., end`.
    pub fn every(level: impl Into<LevelId>, step: i64, end: i64) -> Result<Self, TimeError> {
        LevelTimeModel::periodic(
            level.into(),
            Timestamp::from_integer(0),
            Timestamp::from_integer(step),
            Timestamp::from_integer(end),
        )
    }

    pub fn level(&self) -> &LevelId {
        &self.level
    }

    pub fn ticks(&self) -> &[Timestamp] {
        &self.ticks
    }

    pub fn min(&self) -> Timestamp {
        self.ticks[0]
    }

    pub fn max(&self) -> Timestamp {
        self.ticks[self.ticks.len() - 1]
    }

    pub fn contains(&self, t: Timestamp) -> bool {
        self.ticks.binary_search(&t).is_ok()
    }

    pub fn successor(&self, t: Timestamp) -> Result<Timestamp, TimeError> {
        successor_in(&self.ticks, t)
    }

    pub fn predecessor(&self, t: Timestamp) -> Result<Option<Timestamp>, TimeError> {
        predecessor_in(&self.ticks, t)
    }

    /// Most recent tick at or before `t`; `None` when `t` precedes the first tick.
    pub fn floor(&self, t: Timestamp) -> Option<Timestamp> {
        let n = self.ticks.partition_point(|u| *u <= t);
        n.checked_sub(1).map(|i| self.ticks[i])
    }

    /// The transitory period opened by tick `t`.
    pub fn period_from(&self, t: Timestamp) -> Result<TransitoryPeriod, TimeError> {
        Ok(TransitoryPeriod {
            level: self.level.clone(),
            lower: t,
            upper: self.successor(t)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Consistency {
    Consistent,
    HalfConsistent,
    Transitory,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConsistencyClass {
    pub kind: Consistency,
    /// Levels that hold a consistent state at the queried instant.
    pub consistent_levels: BTreeSet<LevelId>,
}

/// The union of all level time models.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnionTimeModel {
    levels: BTreeMap<LevelId, LevelTimeModel>,
    ticks: Vec<Timestamp>,
}

impl UnionTimeModel {
    pub fn new(models: impl IntoIterator<Item = LevelTimeModel>) -> Result<Self, TimeError> {
        let mut levels = BTreeMap::new();
        for model in models {
            if levels.contains_key(&model.level) {
                return Err(TimeError::DuplicateLevel(model.level));
            }
            levels.insert(model.level.clone(), model);
        }
        let first = levels.values().next().ok_or(TimeError::NoLevels)?;
        let (min, max) = (first.min(), first.max());
        for model in levels.values() {
            if model.min() != min || model.max() != max {
                return Err(TimeError::MismatchedBounds {
                    level: model.level.clone(),
                    min: model.min(),
                    max: model.max(),
                    expected_min: min,
                    expected_max: max,
                });
            }
        }
        let ticks: BTreeSet<Timestamp> = levels
            .values()
            .flat_map(|m| m.ticks.iter().copied())
            .collect();
        Ok(UnionTimeModel {
            levels,
            ticks: ticks.into_iter().collect(),
        })
    }

    pub fn ticks(&self) -> &[Timestamp] {
        &self.ticks
    }

    pub fn min(&self) -> Timestamp {
        self.ticks[0]
    }

    pub fn max(&self) -> Timestamp {
        self.ticks[self.ticks.len() - 1]
    }

    pub fn level_ids(&self) -> impl Iterator<Item = &LevelId> {
        self.levels.keys()
    }

    pub fn levels(&self) -> impl Iterator<Item = &LevelTimeModel> {
        self.levels.values()
    }

    pub fn level(&self, id: &LevelId) -> Result<&LevelTimeModel, TimeError> {
        self.levels
            .get(id)
            .ok_or_else(|| TimeError::UnknownLevel(id.clone()))
    }

    pub fn contains(&self, t: Timestamp) -> bool {
        self.ticks.binary_search(&t).is_ok()
    }

    pub fn successor(&self, t: Timestamp) -> Result<Timestamp, TimeError> {
        successor_in(&self.ticks, t)
    }

    pub fn predecessor(&self, t: Timestamp) -> Result<Option<Timestamp>, TimeError> {
        predecessor_in(&self.ticks, t)
    }

    fn check_bounds(&self, t: Timestamp) -> Result<(), TimeError> {
        if t < self.min() || t > self.max() {
            return Err(TimeError::OutOfBounds {
                t,
                min: self.min(),
                max: self.max(),
            });
        }
        Ok(())
    }

    /// `max{u in T_l | u <= period_start}`: the last instant at which `level`
    /// was consistent for a period starting at `period_start`.
    pub fn floor_level(
        &self,
        level: &LevelId,
        period_start: Timestamp,
    ) -> Result<Timestamp, TimeError> {
        let model = self.level(level)?;
        model.floor(period_start).ok_or(TimeError::OutOfBounds {
            t: period_start,
            min: self.min(),
            max: self.max(),
        })
    }

    pub fn classify(&self, t: Timestamp) -> Result<ConsistencyClass, TimeError> {
        self.check_bounds(t)?;
        let consistent_levels: BTreeSet<LevelId> = self
            .levels
            .values()
            .filter(|m| m.contains(t))
            .map(|m| m.level.clone())
            .collect();
        let kind = if consistent_levels.len() == self.levels.len() {
            Consistency::Consistent
        } else if consistent_levels.is_empty() {
            Consistency::Transitory
        } else {
            Consistency::HalfConsistent
        };
        Ok(ConsistencyClass {
            kind,
            consistent_levels,
        })
    }

    /// Levels that open a transitory period at `t`.
    pub fn levels_starting_at(&self, t: Timestamp) -> Result<BTreeSet<LevelId>, TimeError> {
        self.check_bounds(t)?;
        if !self.contains(t) {
            return Err(TimeError::NotATick(t));
        }
        if t == self.max() {
            return Err(TimeError::QueryAtFinalTick(t));
        }
        Ok(self
            .levels
            .values()
            .filter(|m| m.contains(t))
            .map(|m| m.level.clone())
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ts(v: i64) -> Timestamp {
        Timestamp::from_integer(v)
    }

    fn ab() -> UnionTimeModel {
        UnionTimeModel::new([
            LevelTimeModel::every("A", 1, 4).unwrap(),
            LevelTimeModel::every("B", 2, 4).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn canonical_form() {
        let a = Timestamp::new(2, 4).unwrap();
        let b = Timestamp::new(-1, -2).unwrap();
        assert_eq!(a, b);
        assert_eq!((a.numer(), a.denom()), (1, 2));
        assert_eq!(a.to_string(), "1/2");
        assert_eq!("3".parse::<Timestamp>().unwrap(), ts(3));
        assert_eq!("6/-4".parse::<Timestamp>().unwrap(), Timestamp::new(-3, 2).unwrap());
        assert!("1/0".parse::<Timestamp>().is_err());
        assert!("x".parse::<Timestamp>().is_err());
    }

    #[test]
    fn serde_accepts_integers_and_rationals() {
        let v: Vec<Timestamp> = serde_json::from_str(r#"[0, "3/2", "4"]"#).unwrap();
        assert_eq!(v, vec![ts(0), Timestamp::new(3, 2).unwrap(), ts(4)]);
        assert_eq!(serde_json::to_string(&v).unwrap(), r#"["0/1","3/2","4/1"]"#);
    }

    #[test]
    fn level_model_validation() {
        assert_eq!(
            LevelTimeModel::new("A".into(), vec![ts(0)]),
            Err(TimeError::TooFewTicks("A".into()))
        );
        assert!(matches!(
            LevelTimeModel::new("A".into(), vec![ts(0), ts(2), ts(2)]),
            Err(TimeError::NotIncreasing { .. })
        ));
        assert_eq!(LevelTimeModel::periodic("A".into(), ts(0), ts(3), ts(7)), Err(TimeError::BadPeriod));
        assert_eq!(LevelTimeModel::periodic("A".into(), ts(0), ts(0), ts(7)), Err(TimeError::BadPeriod));
        let half = LevelTimeModel::periodic("A".into(), ts(0), Timestamp::new(1, 2).unwrap(), ts(1)).unwrap();
        assert_eq!(half.ticks().len(), 3);
    }

    #[test]
    fn successor_examples() {
        let l = LevelTimeModel::every("L", 1, 2).unwrap();
        assert_eq!(l.successor(ts(1)), Ok(ts(2)));
        assert_eq!(ab().successor(ts(1)), Ok(ts(2)));
        let b = LevelTimeModel::every("B", 2, 4).unwrap();
        assert_eq!(b.successor(ts(4)), Err(TimeError::QueryAtFinalTick(ts(4))));
        assert_eq!(b.successor(ts(3)), Err(TimeError::NotATick(ts(3))));
    }

    #[test]
    fn floor_examples() {
        let u = ab();
        let b = LevelId::from("B");
        assert_eq!(u.floor_level(&b, ts(3)), Ok(ts(2)));
        assert_eq!(u.floor_level(&b, ts(2)), Ok(ts(2)));
        assert_eq!(u.floor_level(&b, ts(0)), Ok(ts(0)));
        assert!(matches!(u.floor_level(&b, ts(-1)), Err(TimeError::OutOfBounds { .. })));
        assert!(matches!(u.floor_level(&"Z".into(), ts(1)), Err(TimeError::UnknownLevel(_))));
    }

    #[test]
    fn classification() {
        let u = ab();
        let c = u.classify(ts(2)).unwrap();
        assert_eq!(c.kind, Consistency::Consistent);
        assert_eq!(c.consistent_levels.len(), 2);
        let c = u.classify(ts(1)).unwrap();
        assert_eq!(c.kind, Consistency::HalfConsistent);
        assert_eq!(c.consistent_levels, BTreeSet::from(["A".into()]));
        let c = u.classify(Timestamp::new(1, 2).unwrap()).unwrap();
        assert_eq!(c.kind, Consistency::Transitory);
        assert!(c.consistent_levels.is_empty());
        assert!(matches!(u.classify(ts(5)), Err(TimeError::OutOfBounds { .. })));
    }

    #[test]
    fn starting_levels() {
        let u = ab();
        let names = |t| -> Vec<String> {
            u.levels_starting_at(ts(t)).unwrap().into_iter().map(|l| l.to_string()).collect()
        };
        assert_eq!(names(1), vec!["A"]);
        assert_eq!(names(0), vec!["A", "B"]);
        assert_eq!(names(2), vec!["A", "B"]);
        assert_eq!(u.levels_starting_at(ts(4)), Err(TimeError::QueryAtFinalTick(ts(4))));
        assert!(u.levels_starting_at(ts(9)).is_err());
    }

    #[test]
    fn union_validation() {
        let r = UnionTimeModel::new([
            LevelTimeModel::every("A", 1, 4).unwrap(),
            LevelTimeModel::every("B", 1, 3).unwrap(),
        ]);
        assert!(matches!(r, Err(TimeError::MismatchedBounds { .. })));
        let r = UnionTimeModel::new([
            LevelTimeModel::every("A", 1, 4).unwrap(),
            LevelTimeModel::every("A", 2, 4).unwrap(),
        ]);
        assert_eq!(r, Err(TimeError::DuplicateLevel("A".into())));
        assert_eq!(UnionTimeModel::new([]), Err(TimeError::NoLevels));
        // identical time models on distinct levels are allowed
        assert!(UnionTimeModel::new([
            LevelTimeModel::every("A", 2, 4).unwrap(),
            LevelTimeModel::every("B", 2, 4).unwrap(),
        ])
        .is_ok());
    }
}
