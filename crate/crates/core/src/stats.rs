//! Pearson chi-square tests for winner histograms.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Bins whose expected count falls below this are pooled into one.
pub const MIN_EXPECTED_COUNT: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareTest {
    #[serde(with = "unbounded")]
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Number of original bins merged into the pooled bin.
    pub pooled_bins: usize,
}

impl ChiSquareTest {
    fn degenerate() -> Self {
        ChiSquareTest {
            statistic: 0.0,
            dof: 0,
            p_value: 1.0,
            pooled_bins: 0,
        }
    }
}

/// Serde adapter writing an infinite statistic as `null`, which JSON can
/// carry.
pub(crate) mod unbounded {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &f64, s: S) -> Result<S::Ok, S::Error> {
        if value.is_finite() {
            s.serialize_f64(*value)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

fn survival(statistic: f64, dof: usize) -> f64 {
    if statistic.is_infinite() {
        return 0.0;
    }
    ChiSquared::new(dof as f64)
        .expect("degrees of freedom are positive")
        .sf(statistic)
}

/// Goodness of fit of `counts` to the probabilities `expected`.
///
/// Bins with expected count below [`MIN_EXPECTED_COUNT`] are merged into a
/// single pooled bin. Counts landing on a bin of probability zero make the
/// statistic infinite. With fewer than two usable bins, or no counts, the
/// test is degenerate and reports `p = 1`.
pub fn pearson_chi_square(counts: &[u64], expected: &[f64]) -> ChiSquareTest {
    assert_eq!(counts.len(), expected.len(), "one probability per bin");
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return ChiSquareTest::degenerate();
    }
    let n = total as f64;
    let mut impossible = false;
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let mut pooled = (0.0, 0.0);
    let mut pooled_bins = 0;
    for (&c, &p) in counts.iter().zip(expected) {
        let e = p * n;
        if p <= 0.0 {
            impossible |= c > 0;
        } else if e < MIN_EXPECTED_COUNT {
            pooled.0 += c as f64;
            pooled.1 += e;
            pooled_bins += 1;
        } else {
            bins.push((c as f64, e));
        }
    }
    if pooled_bins > 0 {
        bins.push(pooled);
    }
    if bins.len() < 2 {
        let mut t = ChiSquareTest::degenerate();
        if impossible {
            t.statistic = f64::INFINITY;
            t.p_value = 0.0;
        }
        return t;
    }
    let statistic = if impossible {
        f64::INFINITY
    } else {
        bins.iter().map(|(o, e)| (o - e) * (o - e) / e).sum()
    };
    let dof = bins.len() - 1;
    ChiSquareTest {
        statistic,
        dof,
        p_value: survival(statistic, dof),
        pooled_bins,
    }
}

/// Homogeneity test of two histograms over the same bins, on the 2×K
/// contingency table. Bins empty in both samples are dropped; bins whose
/// smaller expected cell is below [`MIN_EXPECTED_COUNT`] are pooled.
pub fn two_sample_chi_square(a: &[u64], b: &[u64]) -> ChiSquareTest {
    assert_eq!(a.len(), b.len(), "histograms must share their bins");
    let na: u64 = a.iter().sum();
    let nb: u64 = b.iter().sum();
    if na == 0 || nb == 0 {
        return ChiSquareTest::degenerate();
    }
    let total = (na + nb) as f64;
    let (fa, fb) = (na as f64 / total, nb as f64 / total);
    let mut columns: Vec<(f64, f64)> = Vec::new();
    let mut pooled = (0.0, 0.0);
    let mut pooled_bins = 0;
    for (&x, &y) in a.iter().zip(b) {
        let col = (x + y) as f64;
        if col == 0.0 {
            continue;
        }
        if col * fa.min(fb) < MIN_EXPECTED_COUNT {
            pooled.0 += x as f64;
            pooled.1 += y as f64;
            pooled_bins += 1;
        } else {
            columns.push((x as f64, y as f64));
        }
    }
    if pooled_bins > 0 {
        columns.push(pooled);
    }
    if columns.len() < 2 {
        return ChiSquareTest::degenerate();
    }
    let statistic = columns
        .iter()
        .map(|&(x, y)| {
            let col = x + y;
            let (ea, eb) = (col * fa, col * fb);
            (x - ea).powi(2) / ea + (y - eb).powi(2) / eb
        })
        .sum();
    let dof = columns.len() - 1;
    ChiSquareTest {
        statistic,
        dof,
        p_value: survival(statistic, dof),
        pooled_bins,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_fit_has_p_one() {
        let t = pearson_chi_square(&[25, 25, 50], &[0.25, 0.25, 0.5]);
        assert_eq!(t.statistic, 0.0);
        assert_eq!(t.dof, 2);
        assert!((t.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn known_statistic() {
        // (60-50)²/50 + (40-50)²/50 = 4, one degree of freedom.
        let t = pearson_chi_square(&[60, 40], &[0.5, 0.5]);
        assert!((t.statistic - 4.0).abs() < 1e-12);
        assert!((t.p_value - 0.04550026389635842).abs() < 1e-9);
    }

    #[test]
    fn single_outcome_is_degenerate() {
        let t = pearson_chi_square(&[0, 7, 0], &[0.0, 1.0, 0.0]);
        assert_eq!(t.p_value, 1.0);
        assert_eq!(pearson_chi_square(&[0, 0], &[0.5, 0.5]).p_value, 1.0);
    }

    #[test]
    fn impossible_outcome_rejects() {
        let t = pearson_chi_square(&[5, 5, 1], &[0.5, 0.5, 0.0]);
        assert_eq!(t.p_value, 0.0);
    }

    #[test]
    fn rare_bins_are_pooled() {
        let t = pearson_chi_square(&[50, 48, 1, 1], &[0.5, 0.48, 0.01, 0.01]);
        assert_eq!(t.pooled_bins, 2);
        assert_eq!(t.dof, 2);
    }

    #[test]
    fn identical_samples_have_p_one() {
        let h = [10, 20, 30, 0];
        let t = two_sample_chi_square(&h, &h);
        assert_eq!(t.statistic, 0.0);
        assert!((t.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_sample_matches_hand_computation() {
        // Column totals 100 and 100, equal sample sizes: expected 50 each.
        let t = two_sample_chi_square(&[60, 40], &[40, 60]);
        assert!((t.statistic - 8.0).abs() < 1e-12);
        assert_eq!(t.dof, 1);
    }
}
