//! Fisher exact and G² conditional-independence tests on binary data, plus
//! multiple-testing adjustment.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::factorial::ln_factorial;

use super::DiscoveryError;
use crate::dataset::{BinaryData, ContingencyTable, EventMatrix};

/// Strata with fewer rows are left out of the G² statistic and its df.
pub const MIN_STRATUM_ROWS: u64 = 5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CiTestResult {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    /// Every stratum was skipped; `p_value` is 1.
    pub degenerate: bool,
}

/// Per stratum: counts indexed `2·x + y`.
pub(crate) fn g2_from_counts(strata: &[[u64; 4]]) -> CiTestResult {
    let mut stat = 0.0;
    let mut df = 0usize;
    for s in strata {
        let n: u64 = s.iter().sum();
        if n < MIN_STRATUM_ROWS {
            continue;
        }
        df += 1;
        let n = n as f64;
        let rows = [(s[0] + s[1]) as f64, (s[2] + s[3]) as f64];
        let cols = [(s[0] + s[2]) as f64, (s[1] + s[3]) as f64];
        for (cell, &o) in s.iter().enumerate() {
            if o == 0 {
                continue;
            }
            let o = o as f64;
            let e = rows[cell / 2] * cols[cell % 2] / n;
            stat += 2.0 * o * (o / e).ln();
        }
    }
    if df == 0 {
        return CiTestResult {
            statistic: 0.0,
            df: 0,
            p_value: 1.0,
            degenerate: true,
        };
    }
    let stat = stat.max(0.0);
    let chi = ChiSquared::new(df as f64).expect("positive degrees of freedom");
    CiTestResult {
        statistic: stat,
        df,
        p_value: chi.sf(stat).clamp(0.0, 1.0),
        degenerate: false,
    }
}

/// G² test of `x ⟂ y | z` over rows where x, y and z are all observed.
pub fn ci_test_g2(data: &EventMatrix, x: &str, y: &str, z: &[&str]) -> Result<CiTestResult, DiscoveryError> {
    let xi = data.column_index(x)?;
    let yi = data.column_index(y)?;
    let zi = z.iter().map(|l| data.column_index(l)).collect::<Result<Vec<_>, _>>()?;
    if xi == yi || zi.contains(&xi) || zi.contains(&yi) {
        return Err(DiscoveryError::InvalidTest);
    }
    let mut strata = vec![[0u64; 4]; 1 << zi.len()];
    'rows: for row in data.rows() {
        let (Some(a), Some(b)) = (row[xi].value(), row[yi].value()) else {
            continue;
        };
        let mut cfg = 0usize;
        for &c in &zi {
            match row[c].value() {
                Some(v) => cfg = (cfg << 1) | usize::from(v),
                None => continue 'rows,
            }
        }
        strata[cfg][2 * usize::from(a) + usize::from(b)] += 1;
    }
    Ok(g2_from_counts(&strata))
}

pub(crate) fn g2_binary(data: &BinaryData, x: usize, y: usize, z: &[usize]) -> CiTestResult {
    let mut strata = vec![[0u64; 4]; 1 << z.len()];
    let cx = data.column(x);
    let cy = data.column(y);
    let cz: Vec<&[u8]> = z.iter().map(|&c| data.column(c)).collect();
    for r in 0..data.n_rows() {
        let mut cfg = 0usize;
        for col in &cz {
            cfg = (cfg << 1) | usize::from(col[r]);
        }
        strata[cfg][2 * usize::from(cx[r]) + usize::from(cy[r])] += 1;
    }
    g2_from_counts(&strata)
}

/// Two-sided Fisher exact test: total probability of all tables with the
/// observed margins that are no more likely than the observed one.
pub fn fisher_exact(t: &ContingencyTable) -> Result<f64, DiscoveryError> {
    let n = t.total();
    if n == 0 {
        return Err(DiscoveryError::EmptyTable);
    }
    let row0 = t.n00 + t.n01;
    let col0 = t.n00 + t.n10;
    let lo = row0.saturating_sub(n - col0);
    let hi = row0.min(col0);
    let log_p = |a: u64| {
        let b = row0 - a;
        let c = col0 - a;
        let d = n - row0 - c;
        ln_factorial(row0) + ln_factorial(n - row0) + ln_factorial(col0) + ln_factorial(n - col0)
            - ln_factorial(n)
            - ln_factorial(a)
            - ln_factorial(b)
            - ln_factorial(c)
            - ln_factorial(d)
    };
    let observed = log_p(t.n00);
    // Relative slack so tables tied with the observed one are counted.
    let cutoff = observed + 1e-7;
    let p: f64 = (lo..=hi)
        .map(log_p)
        .filter(|&lp| lp <= cutoff)
        .map(f64::exp)
        .sum();
    Ok(p.min(1.0))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Correction {
    #[default]
    #[serde(rename = "bh")]
    BenjaminiHochberg,
    Bonferroni,
}

impl std::str::FromStr for Correction {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bh" => Ok(Self::BenjaminiHochberg),
            "bonferroni" => Ok(Self::Bonferroni),
            other => Err(format!("unknown correction {other:?} (expected bh|bonferroni)")),
        }
    }
}

/// Adjusted p-values in input order.
pub fn adjust_p_values(p: &[f64], correction: Correction) -> Vec<f64> {
    let m = p.len() as f64;
    match correction {
        Correction::Bonferroni => p.iter().map(|&x| (x * m).min(1.0)).collect(),
        Correction::BenjaminiHochberg => {
            let mut order: Vec<usize> = (0..p.len()).collect();
            order.sort_by(|&a, &b| p[a].total_cmp(&p[b]).then(a.cmp(&b)));
            let mut adjusted = vec![0.0; p.len()];
            let mut running = 1.0f64;
            for (rank, &i) in order.iter().enumerate().rev() {
                running = running.min(p[i] * m / (rank + 1) as f64);
                adjusted[i] = running.min(1.0);
            }
            adjusted
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn table(n00: u64, n01: u64, n10: u64, n11: u64) -> ContingencyTable {
        ContingencyTable {
            a: "a".into(),
            b: "b".into(),
            n00,
            n01,
            n10,
            n11,
        }
    }

    /// Direct hypergeometric sum with exact binomials (small n only).
    fn fisher_oracle(t: &ContingencyTable) -> f64 {
        fn choose(n: u64, k: u64) -> f64 {
            (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
        }
        let n = t.total();
        let r0 = t.n00 + t.n01;
        let c0 = t.n00 + t.n10;
        let prob = |a: u64| choose(r0, a) * choose(n - r0, c0 - a) / choose(n, c0);
        let obs = prob(t.n00);
        (r0.saturating_sub(n - c0)..=r0.min(c0))
            .map(prob)
            .filter(|&p| p <= obs * (1.0 + 1e-9))
            .sum()
    }

    #[test]
    fn fisher_closed_form() {
        // 2 / C(20, 10)
        let p = fisher_exact(&table(10, 0, 0, 10)).unwrap();
        assert_relative_eq!(p, 2.0 / 184_756.0, max_relative = 1e-9);
        assert_relative_eq!(fisher_exact(&table(5, 5, 5, 5)).unwrap(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn fisher_matches_hypergeometric_oracle() {
        for t in [table(3, 1, 1, 3), table(8, 2, 1, 5), table(0, 4, 6, 2), table(12, 5, 7, 9)] {
            assert_relative_eq!(fisher_exact(&t).unwrap(), fisher_oracle(&t), max_relative = 1e-9);
        }
    }

    #[test]
    fn fisher_rejects_empty() {
        assert!(matches!(fisher_exact(&table(0, 0, 0, 0)), Err(DiscoveryError::EmptyTable)));
    }

    #[test]
    fn g2_identical_columns_and_degenerate_strata() {
        let rows: Vec<Vec<u8>> = (0..100).map(|i| vec![(i % 2) as u8, (i % 2) as u8]).collect();
        let m = EventMatrix::from_bits(vec!["x".into(), "y".into()], &rows).unwrap();
        let r = ci_test_g2(&m, "x", "y", &[]).unwrap();
        assert!(r.p_value < 1e-10);
        assert_eq!(r.df, 1);

        let tiny = EventMatrix::from_bits(vec!["x".into(), "y".into()], &[vec![1, 0], vec![0, 1]]).unwrap();
        let r = ci_test_g2(&tiny, "x", "y", &[]).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn g2_statistic_hand_value() {
        // table [[20, 10], [10, 20]]: E = 15 everywhere
        let s = g2_from_counts(&[[20, 10, 10, 20]]);
        let expected = 2.0 * (2.0 * 20.0 * (20.0f64 / 15.0).ln() + 2.0 * 10.0 * (10.0f64 / 15.0).ln());
        assert_relative_eq!(s.statistic, expected, max_relative = 1e-12);
    }

    #[test]
    fn bh_and_bonferroni() {
        let p = [0.01, 0.04, 0.03, 0.5];
        let bh = adjust_p_values(&p, Correction::BenjaminiHochberg);
        assert_relative_eq!(bh[0], 0.04, max_relative = 1e-12);
        assert_relative_eq!(bh[1], 0.04 * 4.0 / 3.0, max_relative = 1e-12);
        assert_relative_eq!(bh[2], 0.04 * 4.0 / 3.0, max_relative = 1e-12);
        assert_relative_eq!(bh[3], 0.5, max_relative = 1e-12);
        let bonf = adjust_p_values(&p, Correction::Bonferroni);
        assert_eq!(bonf, vec![0.04, 0.16, 0.12, 1.0]);
    }
}
