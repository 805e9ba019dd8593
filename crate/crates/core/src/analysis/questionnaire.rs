//! SSQ and IEQ scoring.

use core::fmt;

use serde::{Deserialize, Serialize};

pub const SSQ_ITEMS: usize = 16;
/// Highest rating on the 5-point scale (0 = least severe).
pub const MAX_RATING: u8 = 4;

/// Standard 16-item SSQ order.
pub const SSQ_ITEM_NAMES: [&str; SSQ_ITEMS] = [
    "general discomfort",
    "fatigue",
    "headache",
    "eyestrain",
    "difficulty focusing",
    "increased salivation",
    "sweating",
    "nausea",
    "difficulty concentrating",
    "fullness of head",
    "blurred vision",
    "dizzy (eyes open)",
    "dizzy (eyes closed)",
    "vertigo",
    "stomach awareness",
    "burping",
];

// Zero-based item indices per sub-scale; groups overlap.
pub const NAUSEA_ITEMS: [usize; 7] = [0, 5, 6, 7, 8, 14, 15];
pub const OCULOMOTOR_ITEMS: [usize; 7] = [0, 1, 2, 3, 4, 8, 10];
pub const DISORIENTATION_ITEMS: [usize; 7] = [4, 7, 9, 10, 11, 12, 13];

/// Sub-scale weighting. `Raw` sums ratings; `Kennedy` applies the
/// standard multipliers (9.54, 7.58, 13.92; Total 3.74 x raw N+O+D).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SsqWeighting {
    #[default]
    Raw,
    Kennedy,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SsqScores {
    pub nausea: f64,
    pub oculomotor: f64,
    pub disorientation: f64,
    pub total: f64,
}

impl SsqScores {
    pub const NAMES: [&'static str; 4] = ["Nausea", "Oculomotor", "Disorientation", "Total"];

    pub fn values(&self) -> [f64; 4] {
        [self.nausea, self.oculomotor, self.disorientation, self.total]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ScoreError {
    ItemCount { expected: usize, got: usize },
    OutOfRange { item: usize, rating: u8 },
    Empty,
}

impl fmt::Display for ScoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScoreError::ItemCount { expected, got } => write!(f, "expected {expected} items, got {got}"),
            ScoreError::OutOfRange { item, rating } => {
                write!(f, "item_{} rating {rating} is outside 0..={MAX_RATING}", item + 1)
            }
            ScoreError::Empty => write!(f, "questionnaire has no items"),
        }
    }
}

impl core::error::Error for ScoreError {}

fn check(ratings: &[u8]) -> Result<(), ScoreError> {
    match ratings.iter().position(|&r| r > MAX_RATING) {
        Some(item) => Err(ScoreError::OutOfRange { item, rating: ratings[item] }),
        None => Ok(()),
    }
}

fn group_sum(ratings: &[u8], group: &[usize]) -> u32 {
    group.iter().map(|&i| ratings[i] as u32).sum()
}

pub fn score_ssq(ratings: &[u8], weighting: SsqWeighting) -> Result<SsqScores, ScoreError> {
    if ratings.len() != SSQ_ITEMS {
        return Err(ScoreError::ItemCount { expected: SSQ_ITEMS, got: ratings.len() });
    }
    check(ratings)?;
    let n = group_sum(ratings, &NAUSEA_ITEMS) as f64;
    let o = group_sum(ratings, &OCULOMOTOR_ITEMS) as f64;
    let d = group_sum(ratings, &DISORIENTATION_ITEMS) as f64;
    Ok(match weighting {
        SsqWeighting::Raw => SsqScores {
            nausea: n,
            oculomotor: o,
            disorientation: d,
            total: ratings.iter().map(|&r| r as u32).sum::<u32>() as f64,
        },
        SsqWeighting::Kennedy => SsqScores {
            nausea: 9.54 * n,
            oculomotor: 7.58 * o,
            disorientation: 13.92 * d,
            total: 3.74 * (n + o + d),
        },
    })
}

/// Immersion total: unweighted sum over any number of items.
pub fn score_ieq(ratings: &[u8]) -> Result<u32, ScoreError> {
    if ratings.is_empty() {
        return Err(ScoreError::Empty);
    }
    check(ratings)?;
    Ok(ratings.iter().map(|&r| r as u32).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn extremes() {
        let zero = score_ssq(&[0; 16], SsqWeighting::Raw).unwrap();
        assert_eq!(zero.values(), [0.0; 4]);
        let four = score_ssq(&[4; 16], SsqWeighting::Raw).unwrap();
        assert_eq!(four.values(), [28.0, 28.0, 28.0, 64.0]);
    }

    #[test]
    fn every_item_counted_by_some_group() {
        let mut hits = [0; SSQ_ITEMS];
        for g in [&NAUSEA_ITEMS, &OCULOMOTOR_ITEMS, &DISORIENTATION_ITEMS] {
            for &i in g.iter() {
                hits[i] += 1;
            }
        }
        assert!(hits.iter().all(|&h| h >= 1));
        // 21 group slots over 16 items: five items load on two scales.
        assert_eq!(hits.iter().filter(|&&h| h == 2).count(), 5);
    }

    #[test]
    fn one_hot_items() {
        // Nausea-only item (sweating).
        let mut r = [0u8; 16];
        r[6] = 2;
        let s = score_ssq(&r, SsqWeighting::Raw).unwrap();
        assert_eq!(s.values(), [2.0, 0.0, 0.0, 2.0]);
        // "nausea" itself loads on Nausea and Disorientation.
        let mut r = [0u8; 16];
        r[7] = 2;
        let s = score_ssq(&r, SsqWeighting::Raw).unwrap();
        assert_eq!(s.values(), [2.0, 0.0, 2.0, 2.0]);
    }

    #[test]
    fn kennedy_weights() {
        let s = score_ssq(&[1; 16], SsqWeighting::Kennedy).unwrap();
        assert!((s.nausea - 66.78).abs() < 1e-9);
        assert!((s.oculomotor - 53.06).abs() < 1e-9);
        assert!((s.disorientation - 97.44).abs() < 1e-9);
        assert!((s.total - 78.54).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_input() {
        let mut r = [0u8; 16];
        r[3] = 5;
        assert_eq!(score_ssq(&r, SsqWeighting::Raw), Err(ScoreError::OutOfRange { item: 3, rating: 5 }));
        assert_eq!(
            score_ssq(&[0; 15], SsqWeighting::Raw),
            Err(ScoreError::ItemCount { expected: 16, got: 15 })
        );
        assert_eq!(score_ieq(&[]), Err(ScoreError::Empty));
        assert!(score_ieq(&[1, 9]).is_err());
    }

    #[test]
    fn ieq_sums() {
        assert_eq!(score_ieq(&[0; 7]), Ok(0));
        assert_eq!(score_ieq(&[4; 10]), Ok(40));
        // Moderate ratings over ten items land near the reported
        // immersion means (about 25).
        assert_eq!(score_ieq(&[2, 3, 2, 3, 2, 3, 2, 3, 2, 3]), Ok(25));
    }

    proptest! {
        #[test]
        fn scoring_is_linear(a in prop::array::uniform16(0u8..=2), b in prop::array::uniform16(0u8..=2)) {
            let mut sum = [0u8; 16];
            for i in 0..16 {
                sum[i] = a[i] + b[i];
            }
            let sa = score_ssq(&a, SsqWeighting::Raw).unwrap().values();
            let sb = score_ssq(&b, SsqWeighting::Raw).unwrap().values();
            let ss = score_ssq(&sum, SsqWeighting::Raw).unwrap().values();
            for k in 0..4 {
                prop_assert_eq!(ss[k], sa[k] + sb[k]);
            }
        }
    }
}
