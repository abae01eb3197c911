//! Growth tables and the flat/diverging classifiers.
//!
//! On a finite space every characteristic is finite, so membership in a class
//! is read off from how a characteristic evolves along a refinement axis
//! (lattice depth, tooth index, resolution).

use std::fmt;

/// Values of a characteristic along a refinement axis.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GrowthTable {
    /// `(axis value, characteristic)` pairs in axis order.
    pub rows: Vec<(f64, f64)>,
}

impl GrowthTable {
    pub fn new(rows: Vec<(f64, f64)>) -> Self {
        GrowthTable { rows }
    }

    pub fn values(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.1).collect()
    }

    /// Rows with axis value in `[lo, hi]`.
    pub fn window(&self, lo: f64, hi: f64) -> GrowthTable {
        GrowthTable { rows: self.rows.iter().copied().filter(|r| r.0 >= lo && r.0 <= hi).collect() }
    }

    pub fn last_over_first(&self) -> f64 {
        match (self.rows.first(), self.rows.last()) {
            (Some(a), Some(b)) => b.1 / a.1,
            _ => 1.0,
        }
    }

    pub fn to_csv(&self, axis: &str, value: &str) -> String {
        let mut s = format!("{axis},{value}\n");
        for (x, v) in &self.rows {
            s.push_str(&format!("{},{}\n", crate::io::fmt_f64(*x), crate::io::fmt_f64(*v)));
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Growth {
    Flat,
    /// Neither flat nor diverging under the threshold rule.
    Undecided,
    Diverging,
}

impl fmt::Display for Growth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Growth::Flat => "flat",
            Growth::Undecided => "undecided",
            Growth::Diverging => "diverging",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Classifier {
    /// Flat when last/first is below `flat`, diverging when above `diverging`.
    RatioThresholds { flat: f64, diverging: f64 },
    /// Looks at the increments of `value^power` along the table. A bounded
    /// characteristic has increments shrinking geometrically; an unbounded
    /// one has increments that hold steady or grow. The geometric mean of the
    /// ratios of consecutive increments over the second half of the table
    /// decides: below 1 is flat, 1 or more is diverging.
    IncrementTrend { power: f64 },
}

impl Classifier {
    pub const DEFAULT_THRESHOLDS: Classifier = Classifier::RatioThresholds { flat: 1.5, diverging: 10.0 };

    pub fn classify(&self, table: &GrowthTable) -> Growth {
        let v = table.values();
        if v.len() < 2 || v.iter().any(|x| x.is_infinite()) {
            return if v.iter().any(|x| x.is_infinite()) { Growth::Diverging } else { Growth::Flat };
        }
        match *self {
            Classifier::RatioThresholds { flat, diverging } => {
                let r = table.last_over_first();
                if r < flat {
                    Growth::Flat
                } else if r > diverging {
                    Growth::Diverging
                } else {
                    Growth::Undecided
                }
            }
            Classifier::IncrementTrend { power } => match increment_rate(&v, power) {
                Some(rate) if rate >= 1.0 => Growth::Diverging,
                _ => Growth::Flat,
            },
        }
    }
}

/// Geometric mean of consecutive increment ratios of `v^power` over the
/// second half of the table. `None` when the increments vanish or change sign
/// (a saturated or oscillating table).
pub fn increment_rate(v: &[f64], power: f64) -> Option<f64> {
    let powered: Vec<f64> = v.iter().map(|x| x.powf(power)).collect();
    let inc: Vec<f64> = powered.windows(2).map(|w| w[1] - w[0]).collect();
    if inc.len() < 2 {
        return None;
    }
    let scale = powered.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let tail = &inc[(inc.len() / 2).min(inc.len() - 2)..];
    if tail.iter().any(|&d| !(d > 1e-12 * scale)) {
        return None;
    }
    let logs: f64 = tail.windows(2).map(|w| (w[1] / w[0]).ln()).sum();
    Some((logs / (tail.len() - 1) as f64).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(v: &[f64]) -> GrowthTable {
        GrowthTable::new(v.iter().enumerate().map(|(i, &x)| (i as f64, x)).collect())
    }

    #[test]
    fn thresholds() {
        let c = Classifier::DEFAULT_THRESHOLDS;
        assert_eq!(c.classify(&table(&[1.0, 1.2, 1.3])), Growth::Flat);
        assert_eq!(c.classify(&table(&[1.0, 5.0, 11.0])), Growth::Diverging);
        assert_eq!(c.classify(&table(&[1.0, 3.0])), Growth::Undecided);
    }

    #[test]
    fn geometric_increments() {
        let c = Classifier::IncrementTrend { power: 1.0 };
        let converging: Vec<f64> = (0..8).map(|i| 2.0 - 0.5f64.powi(i)).collect();
        assert_eq!(c.classify(&table(&converging)), Growth::Flat);
        let linear: Vec<f64> = (0..8).map(|i| 1.0 + i as f64).collect();
        assert_eq!(c.classify(&table(&linear)), Growth::Diverging);
        let rate = increment_rate(&converging, 1.0).unwrap();
        assert!((rate - 0.5).abs() < 1e-12);
    }

    #[test]
    fn saturated_table_is_flat() {
        let c = Classifier::IncrementTrend { power: 2.0 };
        assert_eq!(c.classify(&table(&[1.0, 1.0, 1.0, 1.0])), Growth::Flat);
        assert_eq!(c.classify(&table(&[1.0, 1.5, 1.2, 1.6])), Growth::Flat);
    }

    #[test]
    fn power_changes_the_verdict() {
        // v^2 has growing increments, v^1.5 shrinking ones
        let v: Vec<f64> = (1..10).map(|i| (i as f64).powf(0.6)).collect();
        assert_eq!(Classifier::IncrementTrend { power: 2.0 }.classify(&table(&v)), Growth::Diverging);
        assert_eq!(Classifier::IncrementTrend { power: 1.5 }.classify(&table(&v)), Growth::Flat);
    }
}
