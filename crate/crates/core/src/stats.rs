//! Descriptive statistics, correlation and Kolmogorov-Smirnov tests.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Population standard deviation (divides by n).
pub fn std_pop(x: &[f64]) -> f64 {
    let m = mean(x);
    (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64).sqrt()
}

/// Sample standard deviation (divides by n - 1).
pub fn std_sample(x: &[f64]) -> f64 {
    let m = mean(x);
    (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() as f64 - 1.0)).sqrt()
}

/// Standardize to mean 0 and population standard deviation 1.
pub fn zscore(x: &[f64]) -> Result<Vec<f64>> {
    let m = mean(x);
    let s = std_pop(x);
    if !(s > 0.0) {
        return Err(Error::Numerical("cannot standardize a constant vector".into()));
    }
    Ok(x.iter().map(|v| (v - m) / s).collect())
}

/// Sample Pearson correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Validation("pearson needs two equal-length vectors of length >= 2".into()));
    }
    let mx = mean(x);
    let my = mean(y);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Validation("pearson correlation of a constant vector".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Linear-interpolation quantile (type 7) of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeMethod {
    ExactCount,
    Histogram,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionSummary {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub mode: f64,
    pub iqr: f64,
    pub skew: f64,
    pub kurtosis: f64,
    pub min: f64,
    pub max: f64,
    pub mode_method: ModeMethod,
}

fn exact_mode(sorted: &[f64]) -> f64 {
    let (mut best, mut best_count) = (sorted[0], 0usize);
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        if j - i > best_count {
            best = sorted[i];
            best_count = j - i;
        }
        i = j;
    }
    best
}

/// Mean, median, mode, IQR, Fisher skew and excess kurtosis (both the biased
/// moment estimators; zero for constant data). The mode uses exact counts
/// for integer-valued data and the peak of a Freedman-Diaconis histogram
/// otherwise.
pub fn summary_stats(values: &[f64]) -> Result<DistributionSummary> {
    if values.is_empty() {
        return Err(Error::Validation("summary of an empty vector".into()));
    }
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    let m = mean(&s);
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in &s {
        let d = v - m;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= n as f64;
    m3 /= n as f64;
    m4 /= n as f64;
    let degenerate = m2 <= 1e-300 || s[0] == s[n - 1];
    let (skew, kurtosis) = if degenerate { (0.0, 0.0) } else { (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0) };
    let q1 = quantile_sorted(&s, 0.25);
    let q3 = quantile_sorted(&s, 0.75);
    let iqr = q3 - q1;

    let integer = s.iter().all(|v| v.fract() == 0.0);
    let width = 2.0 * iqr / (n as f64).cbrt();
    let (mode, mode_method) = if integer || !(width > 0.0) {
        (exact_mode(&s), ModeMethod::ExactCount)
    } else {
        let lo = s[0];
        let bins = (((s[n - 1] - lo) / width).ceil() as usize).clamp(1, 100_000);
        let w = (s[n - 1] - lo) / bins as f64;
        let mut counts = vec![0usize; bins];
        for v in &s {
            let b = (((v - lo) / w) as usize).min(bins - 1);
            counts[b] += 1;
        }
        let best = (0..bins).fold(0, |b, i| if counts[i] > counts[b] { i } else { b });
        (lo + (best as f64 + 0.5) * w, ModeMethod::Histogram)
    };

    Ok(DistributionSummary {
        n,
        mean: m,
        median: quantile_sorted(&s, 0.5),
        mode,
        iqr,
        skew,
        kurtosis,
        min: s[0],
        max: s[n - 1],
        mode_method,
    })
}

/// Survival function of the Kolmogorov distribution, `P(K > lambda)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // small-lambda series for the CDF
        let c = std::f64::consts::PI * std::f64::consts::PI / (8.0 * lambda * lambda);
        let mut cdf = 0.0;
        for k in 1..=50 {
            let j = (2 * k - 1) as f64;
            cdf += (-j * j * c).exp();
        }
        let cdf = (2.0 * std::f64::consts::PI).sqrt() / lambda * cdf;
        (1.0 - cdf).clamp(0.0, 1.0)
    } else {
        let mut sf = 0.0;
        for k in 1..=100 {
            let kf = k as f64;
            let term = (-2.0 * kf * kf * lambda * lambda).exp();
            sf += if k % 2 == 1 { term } else { -term };
            if term < 1e-18 {
                break;
            }
        }
        (2.0 * sf).clamp(0.0, 1.0)
    }
}

/// Two-sample KS statistic and its asymptotic p-value with effective size
/// `n_a n_b / (n_a + n_b)`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Validation("KS test needs two non-empty samples".into()));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let ne = na * nb / (na + nb);
    Ok((d, kolmogorov_sf(ne.sqrt() * d)))
}

/// One-sample KS statistic against a CDF, with its asymptotic p-value.
pub fn ks_one_sample(values: &[f64], cdf: impl Fn(f64) -> f64) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::Validation("KS test needs a non-empty sample".into()));
    }
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    for (i, x) in s.iter().enumerate() {
        let f = cdf(*x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    Ok((d, kolmogorov_sf(n.sqrt() * d)))
}

/// Critical two-sample KS distance at significance `alpha`.
pub fn ks_critical(alpha: f64, na: usize, nb: usize) -> f64 {
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    c * ((na + nb) as f64 / (na as f64 * nb as f64)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_of_small_integers() {
        let s = summary_stats(&[1.0, 2.0, 2.0, 3.0]).unwrap();
        assert_eq!(s.mean, 2.0);
        assert_eq!(s.median, 2.0);
        assert_eq!(s.mode, 2.0);
        assert_eq!(s.mode_method, ModeMethod::ExactCount);
        // type-7 quartiles 1.75 and 2.25
        assert!((s.iqr - 0.5).abs() < 1e-15);
        assert!(s.skew.abs() < 1e-15);
    }

    #[test]
    fn summary_of_constant_vector() {
        let s = summary_stats(&[0.3; 7]).unwrap();
        assert_eq!((s.skew, s.kurtosis, s.iqr), (0.0, 0.0, 0.0));
        assert_eq!(s.mode, 0.3);
    }

    #[test]
    fn summary_continuous_uses_histogram() {
        let v: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.001).powi(2) + 0.0001).collect();
        let s = summary_stats(&v).unwrap();
        assert_eq!(s.mode_method, ModeMethod::Histogram);
        assert!(s.min <= s.median && s.median <= s.max);
        assert!(s.skew > 0.0);
        assert!(summary_stats(&[]).is_err());
    }

    #[test]
    fn pearson_fixtures() {
        let x = [1.0, 2.0, 3.0, 5.0];
        let y2: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let yn: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson(&x, &y2).unwrap() - 1.0).abs() < 1e-15);
        assert!((pearson(&x, &yn).unwrap() + 1.0).abs() < 1e-15);
        assert!(pearson(&x, &[1.0; 4]).is_err());
    }

    #[test]
    fn ks_fixtures() {
        let a = [0.1, 0.5, 0.9];
        assert_eq!(ks_two_sample(&a, &a).unwrap().0, 0.0);
        let (d, p) = ks_two_sample(&[0.0; 3], &[1.0; 3]).unwrap();
        assert_eq!(d, 1.0);
        assert!(p < 0.2);
        assert!((ks_critical(0.05, 1000, 1000) - 0.0607).abs() < 1e-4);
        assert!((ks_critical(0.05, 1000, 1000) - 1.358 * (2.0f64 / 1000.0).sqrt()).abs() < 1e-4);
    }

    #[test]
    fn kolmogorov_branches_agree() {
        // both series are valid around the switch point
        let lam: f64 = 1.18;
        let mut alt = 0.0;
        for k in 1..=100 {
            let kf = k as f64;
            let t = (-2.0 * kf * kf * lam * lam).exp();
            alt += if k % 2 == 1 { t } else { -t };
        }
        assert!((kolmogorov_sf(lam - 1e-12) - 2.0 * alt).abs() < 1e-10);
        // 95% quantile of the Kolmogorov distribution
        assert!((kolmogorov_sf(1.3581) - 0.05).abs() < 1e-4);
    }
}
