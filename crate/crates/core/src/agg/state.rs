use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use super::{ScalarValue, TableRow};

/// Aggregation algorithm attached to an output variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AggKind {
    Mean,
    Stdev,
    Maximum,
    Minimum,
    Top,
    Quantile,
}

impl AggKind {
    /// Aggregator names are ordinary identifiers resolved at type
    /// check, not keywords.
    pub fn from_name(name: &str) -> Option<AggKind> {
        match name {
            "mean" => Some(AggKind::Mean),
            "stdev" => Some(AggKind::Stdev),
            "maximum" => Some(AggKind::Maximum),
            "minimum" => Some(AggKind::Minimum),
            "top" => Some(AggKind::Top),
            "quantile" => Some(AggKind::Quantile),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AggKind::Mean => "mean",
            AggKind::Stdev => "stdev",
            AggKind::Maximum => "maximum",
            AggKind::Minimum => "minimum",
            AggKind::Top => "top",
            AggKind::Quantile => "quantile",
        }
    }

    pub fn takes_argument(self) -> bool {
        !matches!(self, AggKind::Mean | AggKind::Stdev)
    }
}

impl fmt::Display for AggKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Kind plus its integer argument (bound size or quantile count).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AggSpec {
    pub kind: AggKind,
    pub arg: Option<u64>,
}

impl AggSpec {
    pub fn new(kind: AggKind, arg: Option<u64>) -> Result<AggSpec, AggError> {
        match (kind, arg) {
            (AggKind::Mean | AggKind::Stdev, None) => Ok(()),
            (AggKind::Mean | AggKind::Stdev, Some(_)) => {
                Err(AggError::BadArgument { kind, detail: "takes no argument".into() })
            }
            (AggKind::Maximum | AggKind::Minimum | AggKind::Top, Some(n)) if n >= 1 => Ok(()),
            (AggKind::Quantile, Some(n)) if n >= 2 => Ok(()),
            (AggKind::Quantile, Some(_)) => {
                Err(AggError::BadArgument { kind, detail: "argument must be at least 2".into() })
            }
            (_, Some(_)) => {
                Err(AggError::BadArgument { kind, detail: "argument must be at least 1".into() })
            }
            (_, None) => Err(AggError::BadArgument { kind, detail: "argument required".into() }),
        }?;
        Ok(AggSpec { kind, arg })
    }

    fn bound(&self) -> usize {
        self.arg.unwrap_or(0) as usize
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AggError {
    #[error("{kind} aggregator: {detail}")]
    BadArgument { kind: AggKind, detail: String },
    #[error("cannot merge {left} state into {right} state")]
    KindMismatch { left: String, right: String },
    #[error("{kind} aggregator received {detail}")]
    BadEmission { kind: AggKind, detail: String },
}

/// Mergeable reduction state for one output variable. Indexed outputs
/// keep one sub-state per string key.
#[derive(Debug, Clone)]
pub struct AggregatorState {
    spec: AggSpec,
    groups: Groups,
}

#[derive(Debug, Clone)]
enum Groups {
    Plain(GroupState),
    Indexed(BTreeMap<String, GroupState>),
}

#[derive(Debug, Clone)]
enum GroupState {
    /// Single-pass (count, mean, M2) moments for mean/stdev.
    Moments { count: u64, mean: f64, m2: f64 },
    /// The n best (value, weight) emissions for maximum/minimum, kept
    /// in rank order.
    Extremes { entries: Vec<(ScalarValue, ScalarValue)> },
    /// Exact rendered-value → (first value, accumulated weight) map for top.
    Totals { totals: BTreeMap<String, (ScalarValue, i64)> },
    /// Exact multiset of values for quantile.
    Samples { values: Vec<ScalarValue> },
}

impl GroupState {
    fn empty(kind: AggKind) -> GroupState {
        match kind {
            AggKind::Mean | AggKind::Stdev => GroupState::Moments { count: 0, mean: 0.0, m2: 0.0 },
            AggKind::Maximum | AggKind::Minimum => GroupState::Extremes { entries: Vec::new() },
            AggKind::Top => GroupState::Totals { totals: BTreeMap::new() },
            AggKind::Quantile => GroupState::Samples { values: Vec::new() },
        }
    }
}

/// Rank order for maximum/minimum entries: by weight (descending for
/// maximum, ascending for minimum), ties broken by lexicographically
/// smaller rendered value.
fn rank_cmp(kind: AggKind, a: &(ScalarValue, ScalarValue), b: &(ScalarValue, ScalarValue)) -> Ordering {
    let wa = a.1.as_f64().unwrap_or(f64::NAN);
    let wb = b.1.as_f64().unwrap_or(f64::NAN);
    let by_weight = match kind {
        AggKind::Maximum => wb.total_cmp(&wa),
        _ => wa.total_cmp(&wb),
    };
    by_weight.then_with(|| a.0.render().cmp(&b.0.render()))
}

impl AggregatorState {
    pub fn new(spec: AggSpec, indexed: bool) -> AggregatorState {
        let groups =
            if indexed { Groups::Indexed(BTreeMap::new()) } else { Groups::Plain(GroupState::empty(spec.kind)) };
        AggregatorState { spec, groups }
    }

    pub fn spec(&self) -> AggSpec {
        self.spec
    }

    pub fn is_indexed(&self) -> bool {
        matches!(self.groups, Groups::Indexed(_))
    }

    /// Folds one emission into the state. Type discipline (numeric
    /// values for moments, integer weights for top, index presence
    /// matching indexedness) is the type checker's job; violations
    /// here indicate an engine bug.
    pub fn emit(
        &mut self,
        index: Option<&str>,
        value: ScalarValue,
        weight: Option<ScalarValue>,
    ) -> Result<(), AggError> {
        let spec = self.spec;
        let group = match (&mut self.groups, index) {
            (Groups::Plain(g), None) => g,
            (Groups::Indexed(map), Some(key)) => {
                map.entry(key.to_string()).or_insert_with(|| GroupState::empty(spec.kind))
            }
            (Groups::Plain(_), Some(_)) => {
                return Err(AggError::BadEmission {
                    kind: spec.kind,
                    detail: "an index on a non-indexed output".into(),
                })
            }
            (Groups::Indexed(_), None) => {
                return Err(AggError::BadEmission {
                    kind: spec.kind,
                    detail: "no index on an indexed output".into(),
                })
            }
        };
        match group {
            GroupState::Moments { count, mean, m2 } => {
                let v = value.as_f64().ok_or_else(|| AggError::BadEmission {
                    kind: spec.kind,
                    detail: "a non-numeric value".into(),
                })?;
                *count += 1;
                let delta = v - *mean;
                *mean += delta / *count as f64;
                *m2 += delta * (v - *mean);
            }
            GroupState::Extremes { entries } => {
                let weight = weight.ok_or_else(|| AggError::BadEmission {
                    kind: spec.kind,
                    detail: "no weight".into(),
                })?;
                let entry = (value, weight);
                let pos = entries
                    .binary_search_by(|e| rank_cmp(spec.kind, e, &entry))
                    .unwrap_or_else(|p| p);
                if pos < spec.bound() {
                    entries.insert(pos, entry);
                    entries.truncate(spec.bound());
                }
            }
            GroupState::Totals { totals } => {
                let w = match weight {
                    None => 1,
                    Some(ScalarValue::Int(w)) => w,
                    Some(_) => {
                        return Err(AggError::BadEmission {
                            kind: spec.kind,
                            detail: "a non-integer weight".into(),
                        })
                    }
                };
                let slot = totals.entry(value.render()).or_insert((value, 0));
                slot.1 += w;
            }
            GroupState::Samples { values } => values.push(value),
        }
        Ok(())
    }

    /// Order-insensitive combination of two states of the same shape.
    pub fn merge(&mut self, other: AggregatorState) -> Result<(), AggError> {
        if self.spec != other.spec || self.is_indexed() != other.is_indexed() {
            return Err(AggError::KindMismatch {
                left: describe(&other),
                right: describe(self),
            });
        }
        let spec = self.spec;
        match (&mut self.groups, other.groups) {
            (Groups::Plain(a), Groups::Plain(b)) => merge_group(spec, a, b),
            (Groups::Indexed(a), Groups::Indexed(b)) => {
                for (key, sub) in b {
                    match a.entry(key) {
                        std::collections::btree_map::Entry::Vacant(e) => {
                            e.insert(sub);
                        }
                        std::collections::btree_map::Entry::Occupied(mut e) => {
                            merge_group(spec, e.get_mut(), sub)
                        }
                    }
                }
            }
            _ => unreachable!("indexedness checked above"),
        }
        Ok(())
    }

    /// Deterministic finalization into table rows. Empty states (and
    /// moments over zero emissions) produce no rows rather than NaN.
    pub fn finalize(self) -> Vec<TableRow> {
        match self.groups {
            Groups::Plain(g) => finalize_group(self.spec, None, g),
            Groups::Indexed(map) => map
                .into_iter()
                .flat_map(|(key, g)| finalize_group(self.spec, Some(key), g))
                .collect(),
        }
    }
}

fn describe(s: &AggregatorState) -> String {
    match s.spec.arg {
        Some(n) => format!("{}({})", s.spec.kind, n),
        None => s.spec.kind.to_string(),
    }
}

fn merge_group(spec: AggSpec, a: &mut GroupState, b: GroupState) {
    match (a, b) {
        (GroupState::Moments { count, mean, m2 }, GroupState::Moments { count: cb, mean: mb, m2: m2b }) => {
            // Standard pairwise update for (count, mean, M2).
            let total = *count + cb;
            if total == 0 {
                return;
            }
            let delta = mb - *mean;
            let new_mean = *mean + delta * (cb as f64 / total as f64);
            *m2 += m2b + delta * delta * (*count as f64 * cb as f64 / total as f64);
            *mean = new_mean;
            *count = total;
        }
        (GroupState::Extremes { entries }, GroupState::Extremes { entries: eb }) => {
            entries.extend(eb);
            entries.sort_by(|x, y| rank_cmp(spec.kind, x, y));
            entries.truncate(spec.bound());
        }
        (GroupState::Totals { totals }, GroupState::Totals { totals: tb }) => {
            for (key, (value, w)) in tb {
                let slot = totals.entry(key).or_insert((value, 0));
                slot.1 += w;
            }
        }
        (GroupState::Samples { values }, GroupState::Samples { values: vb }) => values.extend(vb),
        _ => unreachable!("spec equality checked before merge"),
    }
}

fn finalize_group(spec: AggSpec, index: Option<String>, group: GroupState) -> Vec<TableRow> {
    let row = |value, weight| TableRow { index: index.clone(), value, weight };
    match group {
        GroupState::Moments { count, mean, m2 } => {
            if count == 0 {
                return Vec::new();
            }
            let value = match spec.kind {
                AggKind::Mean => mean,
                _ => (m2.max(0.0) / count as f64).sqrt(), // population stdev
            };
            vec![row(ScalarValue::Float(value), None)]
        }
        GroupState::Extremes { entries } => {
            entries.into_iter().map(|(v, w)| row(v, Some(w))).collect()
        }
        GroupState::Totals { totals } => {
            let mut items: Vec<(ScalarValue, i64)> = totals.into_values().collect();
            // Weight descending, ties by rendered value ascending; the
            // map already yields key-ascending order, so the sort only
            // has to be stable on weights.
            items.sort_by(|a, b| b.1.cmp(&a.1));
            items.truncate(spec.bound());
            items.into_iter().map(|(v, w)| row(v, Some(ScalarValue::Int(w)))).collect()
        }
        GroupState::Samples { mut values } => {
            values.sort_by(ScalarValue::cmp_values);
            let n = spec.bound() as u64;
            let total = values.len() as u64;
            if total == 0 {
                return Vec::new();
            }
            // Nearest-rank boundaries: the value at position ⌈k·N/n⌉
            // (1-based) of the sorted multiset, for k = 1..n-1.
            (1..n)
                .map(|k| {
                    let rank = (k * total).div_ceil(n).max(1);
                    row(values[(rank - 1) as usize].clone(), None)
                })
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fresh(kind: AggKind, arg: Option<u64>, indexed: bool) -> AggregatorState {
        AggregatorState::new(AggSpec::new(kind, arg).unwrap(), indexed)
    }

    fn emit_num(state: &mut AggregatorState, v: f64) {
        state.emit(None, ScalarValue::Float(v), None).unwrap();
    }

    fn emit_weighted(state: &mut AggregatorState, v: &str, w: f64) {
        state.emit(None, ScalarValue::Str(v.into()), Some(ScalarValue::Float(w))).unwrap();
    }

    #[test]
    fn argument_rules() {
        assert!(AggSpec::new(AggKind::Maximum, Some(1)).is_ok());
        assert!(AggSpec::new(AggKind::Maximum, Some(0)).is_err());
        assert!(AggSpec::new(AggKind::Maximum, None).is_err());
        assert!(AggSpec::new(AggKind::Quantile, Some(0)).is_err());
        assert!(AggSpec::new(AggKind::Quantile, Some(1)).is_err());
        assert!(AggSpec::new(AggKind::Quantile, Some(2)).is_ok());
        assert!(AggSpec::new(AggKind::Mean, None).is_ok());
        assert!(AggSpec::new(AggKind::Mean, Some(3)).is_err());
    }

    #[test]
    fn every_kind_finalizes_empty_to_no_rows() {
        for (kind, arg) in [
            (AggKind::Mean, None),
            (AggKind::Stdev, None),
            (AggKind::Maximum, Some(3)),
            (AggKind::Minimum, Some(3)),
            (AggKind::Top, Some(3)),
            (AggKind::Quantile, Some(4)),
        ] {
            assert!(fresh(kind, arg, false).finalize().is_empty(), "{kind}");
            assert!(fresh(kind, arg, true).finalize().is_empty(), "{kind} indexed");
        }
    }

    #[test]
    fn mean_of_one_two_three() {
        let mut s = fresh(AggKind::Mean, None, false);
        for v in [1.0, 2.0, 3.0] {
            emit_num(&mut s, v);
        }
        assert_eq!(s.finalize(), vec![TableRow { index: None, value: ScalarValue::Float(2.0), weight: None }]);
    }

    #[test]
    fn stdev_of_constant_stream_is_zero() {
        let mut s = fresh(AggKind::Stdev, None, false);
        for _ in 0..3 {
            emit_num(&mut s, 2.0);
        }
        assert_eq!(s.finalize()[0].value, ScalarValue::Float(0.0));
    }

    #[test]
    fn maximum_one_keeps_heaviest() {
        let mut s = fresh(AggKind::Maximum, Some(1), false);
        emit_weighted(&mut s, "A", 3.5);
        emit_weighted(&mut s, "B", 7.2);
        emit_weighted(&mut s, "C", 1.0);
        let rows = s.finalize();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].value, ScalarValue::Str("B".into()));
        assert_eq!(rows[0].weight, Some(ScalarValue::Float(7.2)));
    }

    #[test]
    fn minimum_breaks_weight_ties_lexicographically() {
        let mut s = fresh(AggKind::Minimum, Some(2), false);
        emit_weighted(&mut s, "A", 5.0);
        emit_weighted(&mut s, "C", 2.0);
        emit_weighted(&mut s, "B", 2.0);
        let rows = s.finalize();
        let values: Vec<_> = rows.iter().map(|r| r.value.render()).collect();
        assert_eq!(values, ["B", "C"]);
    }

    #[test]
    fn split_stdev_matches_two_pass_oracle() {
        // Two-pass oracle over the concatenated stream {1,2,3,4}:
        // mean 2.5, M2 = 2.25+0.25+0.25+2.25 = 5, population var 1.25.
        let expected = 1.25f64.sqrt();

        let mut whole = fresh(AggKind::Stdev, None, false);
        for v in [1.0, 2.0, 3.0, 4.0] {
            emit_num(&mut whole, v);
        }
        let mut left = fresh(AggKind::Stdev, None, false);
        emit_num(&mut left, 1.0);
        emit_num(&mut left, 2.0);
        let mut right = fresh(AggKind::Stdev, None, false);
        emit_num(&mut right, 3.0);
        emit_num(&mut right, 4.0);
        left.merge(right).unwrap();

        let from_whole = whole.finalize()[0].value.as_f64().unwrap();
        let from_split = left.finalize()[0].value.as_f64().unwrap();
        assert!((from_whole - expected).abs() < 1e-12);
        assert!((from_split - expected).abs() < 1e-12);
        assert!((from_whole - from_split).abs() < 1e-12);
    }

    #[test]
    fn merge_with_empty_is_identity() {
        let mut s = fresh(AggKind::Maximum, Some(2), false);
        emit_weighted(&mut s, "A", 1.0);
        let before = s.clone().finalize();
        s.merge(fresh(AggKind::Maximum, Some(2), false)).unwrap();
        assert_eq!(s.finalize(), before);
    }

    #[test]
    fn top_merge_adds_weight_maps() {
        let int = ScalarValue::Int;
        let mut a = fresh(AggKind::Top, Some(2), false);
        a.emit(None, ScalarValue::Str("x".into()), Some(int(5))).unwrap();
        let mut b = fresh(AggKind::Top, Some(2), false);
        b.emit(None, ScalarValue::Str("x".into()), Some(int(1))).unwrap();
        b.emit(None, ScalarValue::Str("y".into()), Some(int(4))).unwrap();
        a.merge(b).unwrap();
        let rows = a.finalize();
        assert_eq!(rows.len(), 2);
        assert_eq!((rows[0].value.render(), rows[0].weight.clone()), ("x".into(), Some(int(6))));
        assert_eq!((rows[1].value.render(), rows[1].weight.clone()), ("y".into(), Some(int(4))));
    }

    #[test]
    fn top_weight_defaults_to_one() {
        let mut s = fresh(AggKind::Top, Some(1), false);
        for _ in 0..3 {
            s.emit(None, ScalarValue::Str("road".into()), None).unwrap();
        }
        assert_eq!(s.finalize()[0].weight, Some(ScalarValue::Int(3)));
    }

    #[test]
    fn quantile_boundaries_match_sort_index_oracle() {
        // Oracle: sorted {1..8}, boundaries at ⌈k·8/4⌉ for k=1..3 →
        // positions 2, 4, 6 → values 2, 4, 6.
        let data: Vec<f64> = (1..=8).map(|v| v as f64).collect();
        let oracle: Vec<f64> = (1..4u64)
            .map(|k| {
                let rank = (k * 8).div_ceil(4);
                data[(rank - 1) as usize]
            })
            .collect();
        assert_eq!(oracle, [2.0, 4.0, 6.0]);

        let mut s = fresh(AggKind::Quantile, Some(4), false);
        for v in &data {
            emit_num(&mut s, *v);
        }
        let rows = s.finalize();
        let got: Vec<f64> = rows.iter().map(|r| r.value.as_f64().unwrap()).collect();
        assert_eq!(got, oracle);
    }

    #[test]
    fn indexed_states_merge_per_key() {
        let mut a = fresh(AggKind::Mean, None, true);
        a.emit(Some("Polk"), ScalarValue::Float(10.0), None).unwrap();
        let mut b = fresh(AggKind::Mean, None, true);
        b.emit(Some("Polk"), ScalarValue::Float(20.0), None).unwrap();
        b.emit(Some("Story"), ScalarValue::Float(5.0), None).unwrap();
        a.merge(b).unwrap();
        let rows = a.finalize();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].index.as_deref(), Some("Polk"));
        assert_eq!(rows[0].value, ScalarValue::Float(15.0));
        assert_eq!(rows[1].index.as_deref(), Some("Story"));
    }

    #[test]
    fn kind_mismatch_is_an_error() {
        let mut a = fresh(AggKind::Mean, None, false);
        let b = fresh(AggKind::Stdev, None, false);
        assert!(matches!(a.merge(b), Err(AggError::KindMismatch { .. })));
        let mut c = fresh(AggKind::Maximum, Some(2), false);
        let d = fresh(AggKind::Maximum, Some(3), false);
        assert!(matches!(c.merge(d), Err(AggError::KindMismatch { .. })));
    }
}
