//! Score assignment functions: piecewise maps from a metric value to 0..=4.

use serde::{Deserialize, Serialize};

use super::PolicyError;
use crate::metrics::Metric;
use crate::num::f64_or_inf;

pub const MAX_SCORE: u8 = 4;

/// One interval `[lo, hi)` and its score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Piece(pub f64, #[serde(with = "f64_or_inf")] pub f64, pub u8);

impl Piece {
    pub fn lo(&self) -> f64 {
        self.0
    }
    pub fn hi(&self) -> f64 {
        self.1
    }
    pub fn score(&self) -> u8 {
        self.2
    }
}

/// Contiguous half-open intervals starting at 0. If the last interval has a
/// finite upper bound, that bound is included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Piece>", into = "Vec<Piece>")]
pub struct ScoreAssignment {
    pieces: Vec<Piece>,
}

impl ScoreAssignment {
    /// Sorts the pieces by lower bound and checks that they tile the domain.
    pub fn new(mut pieces: Vec<Piece>) -> Result<Self, String> {
        if pieces.is_empty() {
            return Err("no intervals".into());
        }
        pieces.sort_by(|a, b| a.lo().total_cmp(&b.lo()));
        if pieces[0].lo() != 0.0 {
            return Err(format!("first interval starts at {}, expected 0", pieces[0].lo()));
        }
        for p in &pieces {
            if p.lo().is_nan() || p.hi().is_nan() || p.lo().is_infinite() || p.hi() <= p.lo() {
                return Err(format!("interval [{}, {}) is empty or malformed", p.lo(), p.hi()));
            }
            if p.score() > MAX_SCORE {
                return Err(format!("score {} is above {MAX_SCORE}", p.score()));
            }
        }
        for pair in pieces.windows(2) {
            if pair[0].hi() != pair[1].lo() {
                return Err(format!(
                    "intervals [{}, {}) and [{}, {}) leave a gap or overlap",
                    pair[0].lo(),
                    pair[0].hi(),
                    pair[1].lo(),
                    pair[1].hi()
                ));
            }
        }
        Ok(ScoreAssignment { pieces })
    }

    /// Checks that the function covers every value `metric` can take.
    pub fn check_domain(&self, metric: Metric) -> Result<(), PolicyError> {
        let top = self.upper_bound();
        let ok = match metric {
            Metric::M8 => top >= 10.0,
            _ => top.is_infinite(),
        };
        if ok {
            Ok(())
        } else {
            Err(PolicyError::Saf {
                metric,
                reason: format!("intervals end at {top} and do not cover the metric's range"),
            })
        }
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn upper_bound(&self) -> f64 {
        self.pieces.last().map_or(0.0, |p| p.hi())
    }

    /// Score of the interval containing `value`. `+inf` falls in an unbounded
    /// top interval. Values outside the domain score 0.
    pub fn apply(&self, value: f64) -> u8 {
        if value.is_nan() || value < 0.0 {
            return 0;
        }
        for (i, p) in self.pieces.iter().enumerate() {
            let last = i + 1 == self.pieces.len();
            if value >= p.lo() && (value < p.hi() || (last && (p.hi().is_infinite() || value == p.hi()))) {
                return p.score();
            }
        }
        0
    }

    /// One interval `[0, inf)` with a fixed score.
    pub fn constant(score: u8) -> Self {
        ScoreAssignment::new(vec![Piece(0.0, f64::INFINITY, score)]).expect("valid constant")
    }
}

impl TryFrom<Vec<Piece>> for ScoreAssignment {
    type Error = String;
    fn try_from(pieces: Vec<Piece>) -> Result<Self, Self::Error> {
        ScoreAssignment::new(pieces)
    }
}

impl From<ScoreAssignment> for Vec<Piece> {
    fn from(s: ScoreAssignment) -> Vec<Piece> {
        s.pieces
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const INF: f64 = f64::INFINITY;

    fn m4() -> ScoreAssignment {
        ScoreAssignment::new(vec![
            Piece(0.0, 20.0, 4),
            Piece(20.0, 40.0, 3),
            Piece(40.0, 60.0, 2),
            Piece(60.0, 120.0, 1),
            Piece(120.0, INF, 0),
        ])
        .unwrap()
    }

    fn m5() -> ScoreAssignment {
        // listed highest first, as in the evaluation settings
        ScoreAssignment::new(vec![
            Piece(10.0, INF, 4),
            Piece(5.0, 10.0, 3),
            Piece(2.0, 5.0, 2),
            Piece(0.45, 2.0, 1),
            Piece(0.0, 0.45, 0),
        ])
        .unwrap()
    }

    fn m8() -> ScoreAssignment {
        ScoreAssignment::new(vec![
            Piece(8.0, 10.0, 4),
            Piece(6.0, 8.0, 3),
            Piece(4.0, 6.0, 2),
            Piece(2.0, 4.0, 1),
            Piece(0.0, 2.0, 0),
        ])
        .unwrap()
    }

    #[test]
    fn evaluation_examples() {
        assert_eq!(m4().apply(14.0), 4);
        assert_eq!(m5().apply(5.74), 3);
        assert_eq!(m4().apply(INF), 0);
    }

    #[test]
    fn boundaries_belong_to_the_upper_interval() {
        let s = m4();
        assert_eq!(s.apply(0.0), 4);
        assert_eq!(s.apply(20.0), 3);
        assert_eq!(s.apply(40.0), 2);
        assert_eq!(s.apply(60.0), 1);
        assert_eq!(s.apply(120.0), 0);
        assert_eq!(s.apply(f64::from_bits(20f64.to_bits() - 1)), 4);
    }

    #[test]
    fn reputation_top_is_closed() {
        let s = m8();
        assert_eq!(s.apply(10.0), 4);
        assert_eq!(s.apply(8.0), 4);
        assert_eq!(s.apply(7.0), 3);
        assert_eq!(s.apply(0.0), 0);
        assert!(s.check_domain(Metric::M8).is_ok());
        assert!(s.check_domain(Metric::M4).is_err());
    }

    #[test]
    fn malformed_functions_are_rejected() {
        assert!(ScoreAssignment::new(vec![]).is_err());
        assert!(ScoreAssignment::new(vec![Piece(1.0, INF, 1)]).is_err());
        assert!(ScoreAssignment::new(vec![Piece(0.0, 5.0, 1), Piece(6.0, INF, 2)]).is_err());
        assert!(ScoreAssignment::new(vec![Piece(0.0, 5.0, 1), Piece(4.0, INF, 2)]).is_err());
        assert!(ScoreAssignment::new(vec![Piece(0.0, INF, 5)]).is_err());
    }

    #[test]
    fn json_triples() {
        let s: ScoreAssignment = serde_json::from_str(r#"[[0, 20, 4], [20, "inf", 0]]"#).unwrap();
        assert_eq!(s.apply(1e300), 0);
        assert_eq!(serde_json::to_string(&s).unwrap(), r#"[[0.0,20.0,4],[20.0,"inf",0]]"#);
    }

    proptest! {
        #[test]
        fn every_value_has_exactly_one_interval(
            cuts in proptest::collection::btree_set(1u32..10_000, 0..8),
            scores in proptest::collection::vec(0u8..=4, 9),
            value in 0.0f64..20_000.0,
        ) {
            let mut bounds = vec![0.0];
            bounds.extend(cuts.iter().map(|c| *c as f64 / 10.0));
            bounds.push(INF);
            let pieces: Vec<Piece> = bounds.windows(2).zip(&scores).map(|(w, s)| Piece(w[0], w[1], *s)).collect();
            let saf = ScoreAssignment::new(pieces.clone()).unwrap();
            let hits: Vec<&Piece> = pieces.iter().filter(|p| value >= p.lo() && value < p.hi()).collect();
            prop_assert_eq!(hits.len(), 1);
            prop_assert_eq!(saf.apply(value), hits[0].score());
            for p in &pieces {
                prop_assert_eq!(saf.apply(p.lo()), p.score());
            }
        }
    }
}
