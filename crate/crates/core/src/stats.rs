//! Kolmogorov-Smirnov tests and small summary statistics.

#[allow(unused_imports)] // inherent methods win once std is in the crate graph
use num_traits::Float;

/// Outcome of a Kolmogorov-Smirnov test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    /// Effective sample size `nm/(n+m)` (or `n` for one-sample tests).
    pub effective_n: f64,
}

impl KsResult {
    pub fn passes(&self, level: f64) -> bool {
        self.p_value >= level
    }
}

/// `P(K > x)` for the Kolmogorov distribution.
pub fn kolmogorov_survival(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * x * x).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// Asymptotic p-value with Stephens' small-sample correction.
pub fn ks_p_value(d: f64, ne: f64) -> f64 {
    let sq = ne.sqrt();
    kolmogorov_survival((sq + 0.12 + 0.11 / sq) * d)
}

fn sort(xs: &mut [f64]) {
    xs.sort_unstable_by(|a, b| a.total_cmp(b));
}

/// Two-sample test. Sorts both slices in place. Ties are handled by
/// stepping both empirical CDFs past each distinct value together.
pub fn ks_two_sample(a: &mut [f64], b: &mut [f64]) -> KsResult {
    assert!(!a.is_empty() && !b.is_empty(), "KS needs nonempty samples");
    sort(a);
    sort(b);
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < n && j < m {
        let v = a[i].min(b[j]);
        while i < n && a[i] <= v {
            i += 1;
        }
        while j < m && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n * m) as f64 / (n + m) as f64;
    KsResult {
        statistic: d,
        p_value: ks_p_value(d, ne),
        effective_n: ne,
    }
}

/// One-sample test against a continuous distribution function.
pub fn ks_one_sample(xs: &mut [f64], cdf: impl Fn(f64) -> f64) -> KsResult {
    assert!(!xs.is_empty(), "KS needs a nonempty sample");
    sort(xs);
    let n = xs.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d
            .max((f - i as f64 / n).abs())
            .max(((i + 1) as f64 / n - f).abs());
    }
    KsResult {
        statistic: d,
        p_value: ks_p_value(d, n),
        effective_n: n,
    }
}

/// Running mean and variance (Welford).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, o: &Moments) {
        if o.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *o;
            return;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        self.mean += d * o.n as f64 / n as f64;
        self.m2 += o.m2 + d * d * (self.n as f64 * o.n as f64) / n as f64;
        self.n = n;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn std_error(&self) -> f64 {
        (self.variance() / self.n as f64).sqrt()
    }
}

impl FromIterator<f64> for Moments {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut m = Moments::default();
        for x in iter {
            m.push(x);
        }
        m
    }
}

/// Standard error of a proportion estimate.
pub fn binomial_se(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}
