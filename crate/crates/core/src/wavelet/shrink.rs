//! Coefficient shrinkage rules and their data-driven parameter selectors.

/// `sign(c) max(|c| - t, 0)` componentwise.
pub fn soft_threshold(c: &[f64], t: f64) -> Vec<f64> {
    c.iter().map(|&v| soft(v, t)).collect()
}

#[inline]
pub(crate) fn soft(v: f64, t: f64) -> f64 {
    v.signum() * (v.abs() - t).max(0.0)
}

/// `c 1{|c| > t}` componentwise.
pub fn hard_threshold(c: &[f64], t: f64) -> Vec<f64> {
    c.iter().map(|&v| if v.abs() > t { v } else { 0.0 }).collect()
}

/// Universal threshold `sigma sqrt(2 ln n)`.
pub fn universal_threshold(sigma: f64, n: usize) -> f64 {
    sigma * (2.0 * (n.max(1) as f64).ln()).sqrt()
}

/// Classical SURE of soft thresholding at `t` under iid `N(0, sigma^2)` noise:
/// `n sigma^2 - 2 sigma^2 #{|c_i| <= t} + sum min(c_i^2, t^2)`.
pub fn soft_sure(c: &[f64], sigma: f64, t: f64) -> f64 {
    let s2 = sigma * sigma;
    let mut total = c.len() as f64 * s2;
    for &v in c {
        if v.abs() <= t {
            total += v * v - 2.0 * s2;
        } else {
            total += t * t;
        }
    }
    total
}

/// SureShrink threshold: minimizer of [`soft_sure`] over `{0} ∪ {|c_i|}`.
///
/// With `cap` set this is the hybrid rule: the SURE threshold is limited to
/// the universal threshold, and a band whose excess energy
/// `(|c|^2/sigma^2 - n)/n` falls below `log2(n)^1.5 / sqrt(n)` is treated as
/// sparse and thresholded at the universal value outright.
pub fn sure_soft_select(c: &[f64], sigma: f64, cap: bool) -> f64 {
    assert!(sigma > 0.0, "sigma must be positive");
    let n = c.len();
    if n == 0 {
        return 0.0;
    }
    let s2 = sigma * sigma;
    let universal = universal_threshold(sigma, n);
    if cap && is_sparse_band(c, sigma) {
        return universal;
    }
    let mut sq: Vec<f64> = c.iter().map(|v| v * v).collect();
    sq.sort_by(f64::total_cmp);
    // Candidate t = |c|_(k): the k+1 smallest (and ties) are at or below t.
    let mut best_t = 0.0;
    let mut best = soft_sure_sorted_zero(&sq, s2);
    let mut below = 0.0;
    let mut k = 0;
    while k < n {
        let t2 = sq[k];
        let mut j = k;
        while j < n && sq[j] == t2 {
            below += sq[j];
            j += 1;
        }
        let score = n as f64 * s2 - 2.0 * s2 * j as f64 + below + (n - j) as f64 * t2;
        if score < best {
            best = score;
            best_t = t2.sqrt();
        }
        k = j;
    }
    if cap {
        best_t.min(universal)
    } else {
        best_t
    }
}

fn is_sparse_band(c: &[f64], sigma: f64) -> bool {
    let n = c.len() as f64;
    let excess = (c.iter().map(|v| v * v).sum::<f64>() / (sigma * sigma) - n) / n;
    excess <= n.log2().powf(1.5) / n.sqrt()
}

fn soft_sure_sorted_zero(sq: &[f64], s2: f64) -> f64 {
    // At t = 0 only exact zeros count as thresholded.
    let zeros = sq.iter().take_while(|&&v| v == 0.0).count();
    sq.len() as f64 * s2 - 2.0 * s2 * zeros as f64
}

/// Threshold minimizing `|soft(c, t) - theta|^2` exactly over `t >= 0`.
///
/// Between consecutive sorted magnitudes the loss is a quadratic in `t`, so
/// each interval contributes its clipped vertex; the result is never worse
/// than the best of `{0} ∪ {|c_i|}`.
pub fn oracle_soft_select(c: &[f64], theta: &[f64]) -> f64 {
    assert_eq!(c.len(), theta.len());
    let n = c.len();
    if n == 0 {
        return 0.0;
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| c[a].abs().total_cmp(&c[b].abs()));
    let mags: Vec<f64> = idx.iter().map(|&i| c[i].abs()).collect();
    // Active coefficient i contributes (d_i - t)^2 with d_i = |c_i| - sign(c_i) theta_i.
    let d: Vec<f64> = idx.iter().map(|&i| c[i].abs() - c[i].signum() * theta[i]).collect();

    // Suffix sums over the active tail.
    let mut sum_d = vec![0.0; n + 1];
    let mut sum_d2 = vec![0.0; n + 1];
    for k in (0..n).rev() {
        sum_d[k] = sum_d[k + 1] + d[k];
        sum_d2[k] = sum_d2[k + 1] + d[k] * d[k];
    }
    let mut inactive = 0.0; // sum of theta^2 over thresholded coefficients

    let loss = |k: usize, t: f64, inactive: f64| {
        let cnt = (n - k) as f64;
        inactive + sum_d2[k] - 2.0 * t * sum_d[k] + cnt * t * t
    };

    let mut best_t = 0.0;
    let mut best = f64::INFINITY;
    let mut lo = 0.0;
    let mut k = 0;
    loop {
        // Coefficients k.. are active for t in [lo, mags[k]).
        let hi = if k < n { mags[k] } else { f64::INFINITY };
        let vertex = if k < n { sum_d[k] / (n - k) as f64 } else { lo };
        let t = if k < n { vertex.clamp(lo, hi) } else { lo };
        let val = loss(k, t, inactive);
        if val < best {
            best = val;
            best_t = t;
        }
        if k == n {
            break;
        }
        // Step past every coefficient whose magnitude equals hi.
        while k < n && mags[k] == hi {
            inactive += theta[idx[k]] * theta[idx[k]];
            k += 1;
        }
        lo = hi;
    }
    best_t
}

/// RSURE zero threshold `(lambda + sqrt(lambda^2 + 4 sigma^2)) / 2`: gains
/// vanish exactly for `|c| <= t`.
pub fn rsure_threshold(sigma2: f64, lambda: f64) -> f64 {
    (lambda + (lambda * lambda + 4.0 * sigma2).sqrt()) / 2.0
}

/// Gains `alpha_i = [1 - (sigma^2 + lambda |c_i|)/c_i^2]_+` and the shrunken
/// coefficients `alpha_i c_i`.
pub fn rsure_coeffs(c: &[f64], sigma2: f64, lambda: f64) -> (Vec<f64>, Vec<f64>) {
    let t = rsure_threshold(sigma2, lambda);
    let alpha: Vec<f64> = c
        .iter()
        .map(|&v| {
            if v.abs() <= t {
                0.0
            } else {
                (1.0 - (sigma2 + lambda * v.abs()) / (v * v)).max(0.0)
            }
        })
        .collect();
    let est = alpha.iter().zip(c).map(|(a, v)| a * v).collect();
    (alpha, est)
}

/// Per-coefficient SURE of an active RSURE coefficient with magnitude `a`:
/// `h^2 - 2 h a + 2 sigma^2 (1 + sigma^2/a^2)` with `h = a - sigma^2/a - lambda`.
#[inline]
fn rsure_active_term(a: f64, sigma2: f64, lambda: f64) -> f64 {
    let s4 = sigma2 * sigma2;
    3.0 * s4 / (a * a) + 2.0 * lambda * sigma2 / a + lambda * lambda - a * a + 2.0 * sigma2
}

/// Analytic divergence of the RSURE map: `sum_{|c_i| > t} (1 + sigma^2/c_i^2)`.
pub fn rsure_divergence(c: &[f64], sigma2: f64, lambda: f64) -> f64 {
    let t = rsure_threshold(sigma2, lambda);
    c.iter()
        .filter(|v| v.abs() > t)
        .map(|v| 1.0 + sigma2 / (v * v))
        .sum()
}

/// iid-Gaussian SURE (without the `|theta|^2` constant) of the RSURE estimate:
/// `|h|^2 + 2 sigma^2 div - 2 h'c`.
pub fn rsure_sure_of_lambda(c: &[f64], sigma2: f64, lambda: f64) -> f64 {
    let t = rsure_threshold(sigma2, lambda);
    c.iter()
        .filter(|v| v.abs() > t)
        .map(|v| rsure_active_term(v.abs(), sigma2, lambda))
        .sum()
}

/// Outcome of the RSURE parameter search on one band.
#[derive(Debug, Clone, PartialEq)]
pub struct RsureSelection {
    pub lambda: f64,
    pub score: f64,
    pub alpha: Vec<f64>,
    pub estimate: Vec<f64>,
}

/// Exact minimizer of [`rsure_sure_of_lambda`] over `lambda >= 0`.
///
/// Coefficient `i` is active exactly for `lambda < b_i = (c_i^2 - sigma^2)/|c_i|`.
/// Between consecutive breakpoints the active set is fixed and the score is
/// `|A| lambda^2 + 2 lambda sigma^2 sum 1/a + const`, increasing for
/// `lambda >= 0`; the minimum therefore sits at `0` or at a breakpoint. Ties
/// resolve to the smallest `lambda`.
pub fn rsure_select_lambda(c: &[f64], sigma2: f64) -> RsureSelection {
    assert!(sigma2 > 0.0, "sigma^2 must be positive");
    let mut active: Vec<(f64, f64)> = c
        .iter()
        .map(|v| v.abs())
        .filter(|&a| a * a > sigma2)
        .map(|a| ((a * a - sigma2) / a, a))
        .collect();
    active.sort_by(|x, y| x.0.total_cmp(&y.0));

    let m = active.len();
    // Suffix sums of the per-coefficient quadratic coefficients.
    let mut inv = vec![0.0; m + 1];
    let mut cst = vec![0.0; m + 1];
    for k in (0..m).rev() {
        let a = active[k].1;
        inv[k] = inv[k + 1] + 1.0 / a;
        cst[k] = cst[k + 1] + 3.0 * sigma2 * sigma2 / (a * a) - a * a + 2.0 * sigma2;
    }
    let score_at = |k: usize, lambda: f64| {
        (m - k) as f64 * lambda * lambda + 2.0 * lambda * sigma2 * inv[k] + cst[k]
    };

    let mut best_lambda = 0.0;
    let mut best = score_at(0, 0.0);
    let mut best_mag = None;
    let mut k = 0;
    while k < m {
        let (lambda, a) = active[k];
        while k < m && active[k].0 <= lambda {
            k += 1;
        }
        let s = score_at(k, lambda);
        if s < best {
            best = s;
            best_lambda = lambda;
            best_mag = Some(a);
        }
    }
    // At a breakpoint the coefficient sits exactly on the zero threshold;
    // nudge up by a few ulps so rounding in t(lambda) keeps it zeroed.
    if let Some(a) = best_mag {
        while rsure_threshold(sigma2, best_lambda) < a {
            best_lambda = best_lambda.next_up();
        }
    }
    let (alpha, estimate) = rsure_coeffs(c, sigma2, best_lambda);
    RsureSelection {
        lambda: best_lambda,
        score: rsure_sure_of_lambda(c, sigma2, best_lambda),
        alpha,
        estimate,
    }
}

/// Componentwise positive-part shrinkage `[1 - sigma^2/c_i^2]_+ c_i`.
pub fn scalar_shrink(c: &[f64], sigma2: f64) -> Vec<f64> {
    c.iter()
        .map(|&v| if v == 0.0 { 0.0 } else { (1.0 - sigma2 / (v * v)).max(0.0) * v })
        .collect()
}

/// Positive-part Stein shrinkage of the whole band: `[1 - n sigma^2/|c|^2]_+ c`.
pub fn stein_shrink(c: &[f64], sigma2: f64) -> Vec<f64> {
    let n2: f64 = c.iter().map(|v| v * v).sum();
    if n2 == 0.0 {
        return vec![0.0; c.len()];
    }
    let alpha = (1.0 - c.len() as f64 * sigma2 / n2).max(0.0);
    c.iter().map(|v| alpha * v).collect()
}

/// Median absolute deviation noise estimate `median(|c|) / 0.6745`.
pub fn mad_sigma(c: &[f64]) -> f64 {
    if c.is_empty() {
        return 0.0;
    }
    let mut a: Vec<f64> = c.iter().map(|v| v.abs()).collect();
    a.sort_by(f64::total_cmp);
    let n = a.len();
    let med = if n % 2 == 1 {
        a[n / 2]
    } else {
        0.5 * (a[n / 2 - 1] + a[n / 2])
    };
    med / 0.6745
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;

    #[test]
    fn soft_and_hard_examples() {
        assert_eq!(soft_threshold(&[3.0, -0.5], 1.0), vec![2.0, 0.0]);
        assert_eq!(soft_threshold(&[3.0, -0.5], 0.0), vec![3.0, -0.5]);
        assert_eq!(hard_threshold(&[3.0, 0.5], 1.0), vec![3.0, 0.0]);
        assert_eq!(hard_threshold(&[3.0, 0.5], 0.0), vec![3.0, 0.5]);
    }

    #[test]
    fn soft_matches_scalar_definition() {
        let mut rng = SeededRng::new(17);
        let c: Vec<f64> = (0..10_000).map(|_| 3.0 * rng.normal()).collect();
        let t = 1.3;
        let out = soft_threshold(&c, t);
        for (o, v) in out.iter().zip(&c) {
            let expected = if *v > t {
                v - t
            } else if *v < -t {
                v + t
            } else {
                0.0
            };
            assert_eq!(*o, expected);
        }
    }

    #[test]
    fn sure_select_large_signal_picks_zero() {
        let c = [15.0, -12.0, 20.0, 11.0, -30.0];
        assert_eq!(sure_soft_select(&c, 1.0, false), 0.0);
    }

    #[test]
    fn sure_select_two_points_matches_dense_scan() {
        let mut rng = SeededRng::new(4);
        for _ in 0..50 {
            let c = [2.0 * rng.normal(), 2.0 * rng.normal()];
            let t = sure_soft_select(&c, 1.0, false);
            let best_scan = (0..=100_000)
                .map(|i| soft_sure(&c, 1.0, i as f64 * 1e-4))
                .fold(f64::INFINITY, f64::min);
            assert!(soft_sure(&c, 1.0, t) <= best_scan + 1e-12);
        }
    }

    #[test]
    fn sure_select_pure_noise_near_universal() {
        let n = 1024;
        let mut ts: Vec<f64> = (0..100)
            .map(|s| {
                let mut rng = SeededRng::derive(77, s);
                sure_soft_select(&rng.normal_vec(n), 1.0, true)
            })
            .collect();
        ts.sort_by(f64::total_cmp);
        let median = 0.5 * (ts[49] + ts[50]);
        let u = universal_threshold(1.0, n);
        assert!((median - u).abs() <= 0.2 * u, "{median} vs {u}");
    }

    #[test]
    fn oracle_examples_and_dense_scan() {
        let c = [1.0, -2.0, 0.5, 3.0];
        assert_eq!(oracle_soft_select(&c, &c), 0.0);
        assert!(oracle_soft_select(&c, &[0.0; 4]) >= 3.0);
        let mut rng = SeededRng::new(9);
        for _ in 0..30 {
            let theta: Vec<f64> = (0..12).map(|_| 2.0 * rng.normal()).collect();
            let c: Vec<f64> = theta.iter().map(|t| t + rng.normal()).collect();
            let loss = |t: f64| -> f64 {
                soft_threshold(&c, t).iter().zip(&theta).map(|(a, b)| (a - b).powi(2)).sum()
            };
            let t = oracle_soft_select(&c, &theta);
            let scan = (0..=20_000).map(|i| loss(i as f64 * 5e-4)).fold(f64::INFINITY, f64::min);
            assert!(loss(t) <= scan + 1e-9);
        }
    }

    #[test]
    fn rsure_scalar_example() {
        let (alpha, est) = rsure_coeffs(&[2.0], 1.0, 1.0);
        assert!((alpha[0] - 0.25).abs() < 1e-15);
        assert!((est[0] - 0.5).abs() < 1e-15);
        assert_eq!(rsure_threshold(1.0, 0.0), 1.0);
        assert!((rsure_threshold(4.0, 1.0) - (1.0 + 17f64.sqrt()) / 2.0).abs() < 1e-15);
        assert!((rsure_threshold(1.0, 1e6) / 1e6 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rsure_lambda_zero_is_scalar_shrink() {
        let c = [0.3, -2.0, 5.0, 1.0, -1.0];
        let (_, est) = rsure_coeffs(&c, 1.0, 0.0);
        assert_eq!(est, scalar_shrink(&c, 1.0));
    }

    #[test]
    fn rsure_select_matches_dense_grid() {
        let mut rng = SeededRng::new(31);
        for _ in 0..20 {
            let c: Vec<f64> = (0..64)
                .map(|i| if i % 5 == 0 { 6.0 * rng.normal() } else { 0.0 } + rng.normal())
                .collect();
            let sel = rsure_select_lambda(&c, 1.0);
            let lmax = c.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let scan = (0..=20_000)
                .map(|i| rsure_sure_of_lambda(&c, 1.0, lmax * i as f64 / 20_000.0))
                .fold(f64::INFINITY, f64::min);
            assert!(sel.score <= scan + 1e-9);
            assert!((sel.score - rsure_sure_of_lambda(&c, 1.0, sel.lambda)).abs() < 1e-9);
        }
    }

    #[test]
    fn rsure_large_signal_and_noise() {
        let big: Vec<f64> = (0..32).map(|i| 50.0 + i as f64).collect();
        assert_eq!(rsure_select_lambda(&big, 1.0).lambda, 0.0);
        let mut rng = SeededRng::new(2);
        let noise = rng.normal_vec(1024);
        let sel = rsure_select_lambda(&noise, 1.0);
        let zeros = sel.alpha.iter().filter(|a| **a == 0.0).count();
        assert!(zeros as f64 > 0.9 * 1024.0, "{zeros}");
    }

    #[test]
    fn mad_of_gaussian_noise() {
        let mut rng = SeededRng::new(12);
        let c: Vec<f64> = (0..100_000).map(|_| 2.0 * rng.normal()).collect();
        assert!((mad_sigma(&c) - 2.0).abs() < 0.05);
    }
}
