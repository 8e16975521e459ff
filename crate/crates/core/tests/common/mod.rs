#![allow(dead_code)]

/// Weighted antitonic regression by pool-adjacent-violators. Returns one
/// fitted value per input.
pub fn pava_decreasing(values: &[f64], weights: &[f64]) -> Vec<f64> {
    // blocks of (weighted mean, total weight, length)
    let mut blocks: Vec<(f64, f64, usize)> = Vec::new();
    for (&v, &w) in values.iter().zip(weights) {
        blocks.push((v, w, 1));
        while blocks.len() >= 2 {
            let (m2, w2, l2) = blocks[blocks.len() - 1];
            let (m1, w1, l1) = blocks[blocks.len() - 2];
            if m1 < m2 {
                blocks.pop();
                blocks.pop();
                blocks.push(((m1 * w1 + m2 * w2) / (w1 + w2), w1 + w2, l1 + l2));
            } else {
                break;
            }
        }
    }
    blocks.iter().flat_map(|&(m, _, l)| std::iter::repeat(m).take(l)).collect()
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

/// 99% critical value of the two-sample statistic.
pub fn ks_critical_99(n: usize, m: usize) -> f64 {
    let (n, m) = (n as f64, m as f64);
    1.628 * ((n + m) / (n * m)).sqrt()
}

/// Sup distance between the empirical CDF of `sample` and `cdf`.
pub fn ks_one_sample(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            f64::max(((i + 1) as f64 / n - f).abs(), (f - i as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn sample_variance(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
}

/// Root of an increasing function by bisection.
pub fn bisect(f: impl Fn(f64) -> f64, target: f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Squared normal-consistent interquartile scale.
pub fn iqr_variance(values: &[f64]) -> f64 {
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let pos = p * (s.len() - 1) as f64;
        let i = pos.floor() as usize;
        let j = (i + 1).min(s.len() - 1);
        s[i] + (pos - i as f64) * (s[j] - s[i])
    };
    ((q(0.75) - q(0.25)) / 1.3489795003921634).powi(2)
}

/// Writes one result line and fails the test when `pass` is false.
pub fn verdict(id: u32, pass: bool, detail: &str) {
    // straight to stderr so the line shows up even when the harness captures output
    let line = format!("acceptance {id}: {} | {detail}\n", if pass { "PASS" } else { "FAIL" });
    let _ = std::io::Write::write_all(&mut std::io::stderr().lock(), line.as_bytes());
    assert!(pass, "acceptance {id} failed: {detail}");
}

#[test]
fn pava_pools_violators() {
    let fit = pava_decreasing(&[3.0, 1.0, 2.0, 0.0], &[1.0, 1.0, 1.0, 1.0]);
    assert_eq!(fit, vec![3.0, 1.5, 1.5, 0.0]);
    let fit = pava_decreasing(&[1.0, 2.0], &[3.0, 1.0]);
    assert_eq!(fit, vec![1.25, 1.25]);
}
