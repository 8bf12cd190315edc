//! Friedman rank test with the Nemenyi critical difference.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

/// Studentized-range quantiles divided by √2 for k = 2..=20 methods.
const Q_05: [f64; 19] = [
    1.959964, 2.343701, 2.569032, 2.727774, 2.849705, 2.94832, 3.030878, 3.10173, 3.163684, 3.218654, 3.268004,
    3.312739, 3.353618, 3.39123, 3.426041, 3.458425, 3.488685, 3.517073, 3.543799,
];
const Q_10: [f64; 19] = [
    1.644854, 2.052293, 2.291341, 2.459516, 2.588521, 2.692732, 2.779884, 2.854606, 2.919889, 2.977768, 3.029694,
    3.076733, 3.119693, 3.159199, 3.195743, 3.229723, 3.261461, 3.291224, 3.319233,
];

/// Nemenyi `q_α` for `k` methods; α ∈ {0.05, 0.10}.
pub fn nemenyi_q(k: usize, alpha: f64) -> Result<f64> {
    let table = if alpha == 0.05 {
        &Q_05
    } else if alpha == 0.10 {
        &Q_10
    } else {
        return Err(Error::Stats(format!("no Nemenyi constants for alpha {alpha}; use 0.05 or 0.10")));
    };
    if !(2..=20).contains(&k) {
        return Err(Error::Stats(format!("Nemenyi constants cover 2..=20 methods, got {k}")));
    }
    Ok(table[k - 2])
}

/// Ranks with 1 for the highest score; tied scores share their mean rank.
pub fn rank_descending(scores: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut ranks = vec![0.0; scores.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // positions i..=j hold ranks i+1..=j+1
        let mean = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = mean;
        }
        i = j + 1;
    }
    ranks
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodRank {
    pub method: String,
    pub median: f64,
    /// Median absolute deviation from the median.
    pub mad: f64,
    pub mean_rank: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankSummary {
    pub methods: Vec<MethodRank>,
    pub n_datasets: usize,
    pub alpha: f64,
    pub friedman_statistic: f64,
    pub p_value: f64,
    pub critical_difference: f64,
}

/// `scores[i][j]` is method `j`'s score on dataset `i`.
pub fn friedman_nemenyi(scores: &[Vec<f64>], methods: &[String], alpha: f64) -> Result<RankSummary> {
    let n = scores.len();
    let k = methods.len();
    if k < 3 {
        return Err(Error::Stats(format!("the Friedman test needs >= 3 methods, got {k}")));
    }
    if n < 2 {
        return Err(Error::Stats(format!("the Friedman test needs >= 2 datasets, got {n}")));
    }
    for (i, row) in scores.iter().enumerate() {
        if row.len() != k {
            return Err(Error::Stats(format!("dataset {i} has {} scores for {k} methods", row.len())));
        }
        if let Some(j) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::Stats(format!("missing score for method `{}` on dataset {i}", methods[j])));
        }
    }
    let q = nemenyi_q(k, alpha)?;
    let mut rank_sums = vec![0.0; k];
    for row in scores {
        for (s, r) in rank_sums.iter_mut().zip(rank_descending(row)) {
            *s += r;
        }
    }
    let (kf, nf) = (k as f64, n as f64);
    let mean_ranks: Vec<f64> = rank_sums.iter().map(|s| s / nf).collect();
    let sum_sq: f64 = mean_ranks.iter().map(|r| r * r).sum();
    let statistic = (12.0 * nf / (kf * (kf + 1.0)) * (sum_sq - kf * (kf + 1.0).powi(2) / 4.0)).max(0.0);
    let chi = ChiSquared::new(kf - 1.0).map_err(|e| Error::Stats(e.to_string()))?;
    let p_value = 1.0 - chi.cdf(statistic);
    let critical_difference = q * (kf * (kf + 1.0) / (6.0 * nf)).sqrt();
    let methods = methods
        .iter()
        .enumerate()
        .map(|(j, m)| {
            let col: Vec<f64> = scores.iter().map(|r| r[j]).collect();
            let med = median(&col);
            let dev: Vec<f64> = col.iter().map(|v| (v - med).abs()).collect();
            MethodRank { method: m.clone(), median: med, mad: median(&dev), mean_rank: mean_ranks[j] }
        })
        .collect();
    Ok(RankSummary { methods, n_datasets: n, alpha, friedman_statistic: statistic, p_value, critical_difference })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(k: usize) -> Vec<String> {
        (0..k).map(|j| format!("m{j}")).collect()
    }

    #[test]
    fn ranks_with_ties() {
        assert_eq!(rank_descending(&[0.9, 0.5, 0.9, 0.1]), vec![1.5, 3.0, 1.5, 4.0]);
        assert_eq!(rank_descending(&[1.0, 1.0, 1.0]), vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn all_tied_gives_zero() {
        let s = friedman_nemenyi(&vec![vec![0.5; 4]; 5], &names(4), 0.05).unwrap();
        assert_eq!(s.friedman_statistic, 0.0);
        assert!(s.methods.iter().all(|m| m.mean_rank == 2.5));
        assert!((s.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn consistent_winner() {
        // m0 > m1 > m2 on all four datasets: ranks 1,2,3 => statistic 8
        let scores = vec![vec![0.9, 0.5, 0.1], vec![0.8, 0.6, 0.2], vec![0.7, 0.4, 0.3], vec![0.95, 0.9, 0.85]];
        let s = friedman_nemenyi(&scores, &names(3), 0.05).unwrap();
        assert!((s.friedman_statistic - 8.0).abs() < 1e-12);
        assert!((s.critical_difference - 2.343701 * (12.0f64 / 24.0).sqrt()).abs() < 1e-12);
        assert!(s.p_value < 0.05);
    }

    #[test]
    fn reference_critical_difference() {
        // k = 8, N = 27 with the standard constant
        let cd = nemenyi_q(8, 0.05).unwrap() * (8.0f64 * 9.0 / (6.0 * 27.0)).sqrt();
        assert!((cd - 2.020585).abs() < 1e-6);
    }

    #[test]
    fn input_checks() {
        assert!(friedman_nemenyi(&vec![vec![0.1, 0.2]; 3], &names(2), 0.05).is_err());
        assert!(friedman_nemenyi(&[vec![0.1, 0.2, 0.3]], &names(3), 0.05).is_err());
        assert!(friedman_nemenyi(&[vec![0.1, f64::NAN, 0.3], vec![0.1, 0.2, 0.3]], &names(3), 0.05).is_err());
        assert!(nemenyi_q(3, 0.01).is_err());
        assert!(nemenyi_q(21, 0.05).is_err());
    }

    #[test]
    fn mad_and_median() {
        let s = friedman_nemenyi(&[vec![1.0, 0.0, 0.5], vec![3.0, 0.0, 0.5], vec![2.0, 0.0, 0.5]], &names(3), 0.05)
            .unwrap();
        assert_eq!((s.methods[0].median, s.methods[0].mad), (2.0, 1.0));
    }
}
