//! Error bars for correlated Markov chain output.
//!
//! Standard errors come from batch means with the batch length tied to the
//! integrated autocorrelation time (Sokal's self-consistent window), with a
//! direct IAT-corrected fallback when too few batches remain.

use serde::Serialize;

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Integrated autocorrelation time 1 + 2 sum rho(t), cut at the first
/// window W with W >= c tau(W) (c = 5). Returns at least 1; NaN-free for
/// constant series (tau = 1).
pub fn integrated_autocorr_time(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 4 {
        return 1.0;
    }
    let m = mean(xs);
    let c0: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n as f64;
    if c0 <= 0.0 {
        return 1.0; // constant series
    }
    let mut tau = 1.0;
    let max_lag = n / 4;
    for t in 1..=max_lag {
        let ct: f64 = (0..n - t).map(|i| (xs[i] - m) * (xs[i + t] - m)).sum::<f64>() / n as f64;
        tau += 2.0 * ct / c0;
        if (t as f64) >= 5.0 * tau {
            break;
        }
    }
    tau.max(1.0)
}

/// Effective number of independent samples.
pub fn effective_sample_size(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.len() as f64 / integrated_autocorr_time(xs)
}

/// Mean, standard error and ESS of one observable series.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SeriesSummary {
    pub mean: f64,
    pub se: f64,
    pub ess: f64,
    pub n: usize,
}

/// Summarize a correlated series. Batch length is ceil(3 tau); if fewer
/// than 8 batches fit, fall back to the direct tau-inflated standard error.
pub fn summarize(xs: &[f64]) -> SeriesSummary {
    let n = xs.len();
    if n == 0 {
        return SeriesSummary {
            mean: f64::NAN,
            se: f64::NAN,
            ess: 0.0,
            n: 0,
        };
    }
    let m = mean(xs);
    if n == 1 {
        return SeriesSummary {
            mean: m,
            se: f64::NAN,
            ess: 1.0,
            n,
        };
    }
    let tau = integrated_autocorr_time(xs);
    let ess = n as f64 / tau;
    let batch_len = (3.0 * tau).ceil().max(1.0) as usize;
    let n_batches = n / batch_len;
    let se = if n_batches >= 8 {
        let batch_means: Vec<f64> = (0..n_batches)
            .map(|b| mean(&xs[b * batch_len..(b + 1) * batch_len]))
            .collect();
        (variance(&batch_means) / n_batches as f64).sqrt()
    } else {
        (variance(xs) * tau / n as f64).sqrt()
    };
    SeriesSummary { mean: m, se, ess, n }
}

/// Combine independent per-chain estimates of the same quantity: plain
/// average with errors added in quadrature.
pub fn pool_chains(summaries: &[SeriesSummary]) -> SeriesSummary {
    let usable: Vec<&SeriesSummary> = summaries.iter().filter(|s| s.n > 0).collect();
    if usable.is_empty() {
        return SeriesSummary {
            mean: f64::NAN,
            se: f64::NAN,
            ess: 0.0,
            n: 0,
        };
    }
    let c = usable.len() as f64;
    let mean = usable.iter().map(|s| s.mean).sum::<f64>() / c;
    let var_sum: f64 = usable.iter().map(|s| s.se * s.se).sum();
    SeriesSummary {
        mean,
        se: var_sum.sqrt() / c,
        ess: usable.iter().map(|s| s.ess).sum(),
        n: usable.iter().map(|s| s.n).sum(),
    }
}

/// Ratio-of-means estimator with batch-means error bars: the series is cut
/// into up to 20 equal batches, each batch contributes sum(num)/sum(den)
/// with the convention 0/0 := 0, and the spread of the batch ratios gives
/// the standard error. Intended for theta = wrapped mass / density, where
/// the per-sample ratio is undefined on empty configurations.
pub fn batched_ratio(num: &[f64], den: &[f64]) -> SeriesSummary {
    assert_eq!(num.len(), den.len());
    let n = num.len();
    if n == 0 {
        return SeriesSummary {
            mean: f64::NAN,
            se: f64::NAN,
            ess: 0.0,
            n: 0,
        };
    }
    let n_batches = (n / 2).clamp(1, 20);
    let batch_len = n / n_batches;
    let ratios: Vec<f64> = (0..n_batches)
        .map(|b| {
            let lo = b * batch_len;
            let hi = if b + 1 == n_batches { n } else { lo + batch_len };
            let top: f64 = num[lo..hi].iter().sum();
            let bot: f64 = den[lo..hi].iter().sum();
            if bot == 0.0 { 0.0 } else { top / bot }
        })
        .collect();
    SeriesSummary {
        mean: mean(&ratios),
        se: if n_batches >= 2 {
            (variance(&ratios) / n_batches as f64).sqrt()
        } else {
            f64::NAN
        },
        ess: n_batches as f64,
        n,
    }
}

/// Ordinary least squares fit y = intercept + slope x.
pub fn ols(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2, "need at least two points for a line");
    let mx = mean(xs);
    let my = mean(ys);
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn iid_series_has_tau_near_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let xs: Vec<f64> = (0..20_000).map(|_| rng.random::<f64>()).collect();
        let tau = integrated_autocorr_time(&xs);
        assert!(tau < 1.3, "tau = {tau}");
        let s = summarize(&xs);
        // Uniform(0,1): mean 1/2, sd of the mean ~ sqrt(1/12/n).
        let want_se = (1.0f64 / 12.0 / xs.len() as f64).sqrt();
        assert!((s.mean - 0.5).abs() < 4.0 * want_se);
        assert!(s.se < 2.0 * want_se && s.se > 0.5 * want_se, "se = {}", s.se);
    }

    #[test]
    fn ar1_series_tau_matches_theory() {
        // AR(1) with coefficient a has tau = (1+a)/(1-a).
        let a: f64 = 0.8;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut x = 0.0;
        let xs: Vec<f64> = (0..200_000)
            .map(|_| {
                x = a * x + rng.random::<f64>() - 0.5;
                x
            })
            .collect();
        let tau = integrated_autocorr_time(&xs);
        let want = (1.0 + a) / (1.0 - a);
        assert!(
            (tau - want).abs() < 0.2 * want,
            "tau = {tau}, theory {want}"
        );
        let s = summarize(&xs);
        assert!(s.ess < xs.len() as f64 / 5.0);
    }

    #[test]
    fn constant_series_is_degenerate_but_finite() {
        let xs = vec![3.0; 100];
        let s = summarize(&xs);
        assert_eq!(s.mean, 3.0);
        assert_eq!(s.se, 0.0);
        assert_eq!(s.ess, 100.0);
    }

    #[test]
    fn pooling_averages_means_and_shrinks_errors() {
        let a = SeriesSummary { mean: 1.0, se: 0.2, ess: 50.0, n: 100 };
        let b = SeriesSummary { mean: 2.0, se: 0.2, ess: 50.0, n: 100 };
        let p = pool_chains(&[a, b]);
        assert!((p.mean - 1.5).abs() < 1e-12);
        // Independent chains: se = sqrt(se_a^2 + se_b^2) / 2.
        assert!((p.se - 0.2 / (2f64).sqrt()).abs() < 1e-12);
        assert_eq!(p.ess, 100.0);
    }

    #[test]
    fn batched_ratio_recovers_constants_and_handles_empty_batches() {
        // num = 2 den exactly: ratio 2 with zero spread.
        let den: Vec<f64> = (0..200).map(|i| 1.0 + (i % 7) as f64).collect();
        let num: Vec<f64> = den.iter().map(|d| 2.0 * d).collect();
        let s = batched_ratio(&num, &den);
        assert!((s.mean - 2.0).abs() < 1e-12);
        assert!(s.se < 1e-12);

        // All-zero denominator: 0/0 := 0 batch ratios.
        let zeros = vec![0.0; 50];
        let z = batched_ratio(&zeros, &zeros);
        assert_eq!(z.mean, 0.0);
        assert_eq!(z.se, 0.0);

        // Noisy case stays within a few se of the true ratio.
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let den: Vec<f64> = (0..4000).map(|_| 5.0 + rng.random::<f64>()).collect();
        let num: Vec<f64> = den
            .iter()
            .map(|d| 0.3 * d + (rng.random::<f64>() - 0.5))
            .collect();
        let s = batched_ratio(&num, &den);
        assert!(s.se > 0.0);
        assert!((s.mean - 0.3).abs() < 4.0 * s.se, "{} +- {}", s.mean, s.se);
    }

    #[test]
    fn ols_recovers_exact_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.5 * x - 0.7).collect();
        let (slope, intercept) = ols(&xs, &ys);
        assert!((slope - 2.5).abs() < 1e-12);
        assert!((intercept + 0.7).abs() < 1e-12);
    }
}
