use crate::error::{Error, Result};
use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, PI};
#[allow(unused_imports)] // inherent methods win once std is in the crate graph
use num_traits::Float;

/// Largest |x| accepted by the unscaled modified Bessel functions.
pub const I_OVERFLOW_GUARD: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BesselKind {
    J0,
    J1,
    I0,
    I1,
}

/// Checked evaluation of one of the four Bessel functions.
pub fn bessel(kind: BesselKind, x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::InvalidParameter {
            name: "x",
            value: x,
            reason: "must be finite",
        });
    }
    match kind {
        BesselKind::J0 => Ok(j0(x)),
        BesselKind::J1 => Ok(j1(x)),
        BesselKind::I0 | BesselKind::I1 if x.abs() > I_OVERFLOW_GUARD => Err(Error::Overflow {
            x,
            limit: I_OVERFLOW_GUARD,
        }),
        BesselKind::I0 => Ok(i0(x)),
        BesselKind::I1 => Ok(i1(x)),
    }
}

// ---- J0, J1 ----------------------------------------------------------------

fn j_series(x: f64, order1: bool) -> f64 {
    let q = 0.25 * x * x;
    let mut term = if order1 { 0.5 * x } else { 1.0 };
    let mut sum = term;
    let nu = if order1 { 1.0 } else { 0.0 };
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= -q / (k * (k + nu));
        sum += term;
        if term.abs() < 1e-18 {
            break;
        }
    }
    sum
}

/// Miller backward recurrence, normalised by 1 = J0 + 2 sum J_{2k}.
fn j_miller(x: f64) -> (f64, f64) {
    let start = 2 * (((1.5 * x + 40.0) / 2.0) as usize + 1);
    let mut next = 0.0; // J_{n+1}
    let mut cur = 1e-30; // J_n
    let mut norm = 0.0;
    let mut j0 = 0.0;
    let mut j1 = 0.0;
    let mut n = start;
    while n > 0 {
        // J_{n-1} = (2n/x) J_n - J_{n+1}
        let prev = 2.0 * n as f64 / x * cur - next;
        next = cur;
        cur = prev;
        let m = n - 1;
        if m % 2 == 0 && m > 0 {
            norm += 2.0 * cur;
        }
        if m == 1 {
            j1 = cur;
        }
        if m == 0 {
            j0 = cur;
        }
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            next *= 1e-250;
            norm *= 1e-250;
            j1 *= 1e-250;
        }
        n -= 1;
    }
    norm += j0;
    (j0 / norm, j1 / norm)
}

/// Hankel asymptotic P, Q for order nu at large x.
fn hankel_pq(nu: f64, x: f64) -> (f64, f64) {
    let mu = 4.0 * nu * nu;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..200 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        term *= (mu - odd * odd) / (kf * 8.0 * x);
        let a = term.abs();
        if a > last {
            break;
        }
        last = a;
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
        if a < 1e-17 {
            break;
        }
    }
    (p, q)
}

fn j_asymptotic(x: f64) -> (f64, f64) {
    let (s, c) = x.sin_cos();
    let amp = (2.0 / (PI * x)).sqrt();
    // chi0 = x - pi/4, chi1 = x - 3pi/4
    let (c0, s0) = ((c + s) * FRAC_1_SQRT_2, (s - c) * FRAC_1_SQRT_2);
    let (c1, s1) = ((s - c) * FRAC_1_SQRT_2, -(s + c) * FRAC_1_SQRT_2);
    let (p0, q0) = hankel_pq(0.0, x);
    let (p1, q1) = hankel_pq(1.0, x);
    (amp * (p0 * c0 - q0 * s0), amp * (p1 * c1 - q1 * s1))
}

fn j01(x: f64) -> (f64, f64) {
    let a = x.abs();
    let (v0, v1) = if a <= 8.0 {
        (j_series(a, false), j_series(a, true))
    } else if a <= 30.0 {
        j_miller(a)
    } else {
        j_asymptotic(a)
    };
    (v0, if x < 0.0 { -v1 } else { v1 })
}

pub fn j0(x: f64) -> f64 {
    let a = x.abs();
    if a <= 8.0 {
        j_series(a, false)
    } else {
        j01(a).0
    }
}

pub fn j1(x: f64) -> f64 {
    let a = x.abs();
    let v = if a <= 8.0 {
        j_series(a, true)
    } else {
        j01(a).1
    };
    if x < 0.0 {
        -v
    } else {
        v
    }
}

// ---- I0, I1 ----------------------------------------------------------------

const I_SERIES_LIMIT: f64 = 20.0;

fn i_series(x: f64, order1: bool) -> f64 {
    let q = 0.25 * x * x;
    let mut term = if order1 { 0.5 * x } else { 1.0 };
    let mut sum = term;
    let nu = if order1 { 1.0 } else { 0.0 };
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= q / (k * (k + nu));
        sum += term;
        if term <= 1e-17 * sum {
            break;
        }
    }
    sum
}

/// e^{-x} I_nu(x) for large positive x.
fn i_asymptotic_scaled(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..200 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        term *= -(mu - odd * odd) / (kf * 8.0 * x);
        let a = term.abs();
        if a > last {
            break;
        }
        last = a;
        sum += term;
        if a < 1e-17 {
            break;
        }
    }
    sum / (2.0 * PI * x).sqrt()
}

/// e^{-|x|} I0(x).
pub fn i0e(x: f64) -> f64 {
    let a = x.abs();
    if a <= I_SERIES_LIMIT {
        i_series(a, false) * (-a).exp()
    } else {
        i_asymptotic_scaled(0.0, a)
    }
}

/// e^{-|x|} I1(x).
pub fn i1e(x: f64) -> f64 {
    let a = x.abs();
    let v = if a <= I_SERIES_LIMIT {
        i_series(a, true) * (-a).exp()
    } else {
        i_asymptotic_scaled(1.0, a)
    };
    if x < 0.0 {
        -v
    } else {
        v
    }
}

pub fn i0(x: f64) -> f64 {
    let a = x.abs();
    if a <= I_SERIES_LIMIT {
        i_series(a, false)
    } else {
        i_asymptotic_scaled(0.0, a) * a.exp()
    }
}

pub fn i1(x: f64) -> f64 {
    let a = x.abs();
    let v = if a <= I_SERIES_LIMIT {
        i_series(a, true)
    } else {
        i_asymptotic_scaled(1.0, a) * a.exp()
    };
    if x < 0.0 {
        -v
    } else {
        v
    }
}

// ---- zeros of J0 -------------------------------------------------------------

/// The first K positive zeros of J0, ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct BesselZeroTable {
    zeros: Vec<f64>,
}

impl BesselZeroTable {
    pub fn zeros(&self) -> &[f64] {
        &self.zeros
    }

    pub fn len(&self) -> usize {
        self.zeros.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zeros.is_empty()
    }

    /// k-th zero, counting from 1.
    pub fn get(&self, k: usize) -> f64 {
        self.zeros[k - 1]
    }
}

fn j0_zero(k: usize) -> Result<f64> {
    let kf = k as f64;
    let mut lo = (kf - 0.5) * PI;
    let mut hi = kf * PI;
    let (flo, fhi) = (j0(lo), j0(hi));
    if flo * fhi >= 0.0 {
        return Err(Error::Bracket { lo, hi });
    }
    let b = (kf - 0.25) * PI;
    let mut x = b + 1.0 / (8.0 * b) - 31.0 / (384.0 * b * b * b);
    if !(x > lo && x < hi) {
        x = 0.5 * (lo + hi);
    }
    for _ in 0..100 {
        let f = j0(x);
        if f == 0.0 {
            return Ok(x);
        }
        if (f > 0.0) == (flo > 0.0) {
            lo = x;
        } else {
            hi = x;
        }
        // J0' = -J1
        let mut next = x + f / j1(x);
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let step = (next - x).abs();
        x = next;
        if step < 1e-15 * x || hi - lo < 1e-15 * x {
            return Ok(x);
        }
    }
    Err(Error::NonConvergence {
        what: "J0 zero refinement",
        achieved: hi - lo,
        required: 1e-13,
    })
}

/// First `count` positive zeros of J0, each bracketed in ((k - 1/2) pi, k pi)
/// and refined by safeguarded Newton.
pub fn j0_zeros(count: usize) -> Result<BesselZeroTable> {
    if count == 0 {
        return Err(Error::InvalidInput("zero count must be at least 1"));
    }
    let zeros = (1..=count).map(j0_zero).collect::<Result<Vec<_>>>()?;
    Ok(BesselZeroTable { zeros })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// (1/pi) * integral over [0, pi] by the trapezoid rule, exponentially
    /// accurate for these periodic integrands.
    fn trapezoid_pi(f: impl Fn(f64) -> f64, n: usize) -> f64 {
        let h = PI / n as f64;
        let mut s = 0.5 * (f(0.0) + f(PI));
        for i in 1..n {
            s += f(i as f64 * h);
        }
        s * h / PI
    }

    fn j0_ref(x: f64) -> f64 {
        trapezoid_pi(|t| (x * t.sin()).cos(), 4000)
    }
    fn j1_ref(x: f64) -> f64 {
        trapezoid_pi(|t| (t - x * t.sin()).cos(), 4000)
    }
    fn i0_ref(x: f64) -> f64 {
        trapezoid_pi(|t| (x * t.cos()).exp(), 4000)
    }
    fn i1_ref(x: f64) -> f64 {
        trapezoid_pi(|t| (x * t.cos()).exp() * t.cos(), 4000)
    }

    #[test]
    fn constant_terms() {
        assert_eq!(j0(0.0), 1.0);
        assert_eq!(j1(0.0), 0.0);
        assert_eq!(i0(0.0), 1.0);
        assert_eq!(i1(0.0), 0.0);
    }

    #[test]
    fn j_matches_integral_representation() {
        let mut x = -60.0;
        while x <= 200.0 {
            assert!((j0(x) - j0_ref(x)).abs() < 1e-12, "J0({x})");
            assert!((j1(x) - j1_ref(x)).abs() < 1e-12, "J1({x})");
            x += 0.173;
        }
        for &x in &[7.999, 8.0, 8.001, 29.999, 30.0, 30.001, 650.0] {
            assert!((j0(x) - j0_ref(x)).abs() < 1e-12, "J0({x})");
            assert!((j1(x) - j1_ref(x)).abs() < 1e-12, "J1({x})");
        }
    }

    #[test]
    fn i_matches_integral_representation() {
        let mut x = -50.0;
        while x <= 50.0 {
            let r0 = i0_ref(x);
            let r1 = i1_ref(x);
            assert!((i0(x) - r0).abs() <= 1e-13 * r0.abs(), "I0({x})");
            assert!((i1(x) - r1).abs() <= 1e-13 * r0.abs(), "I1({x})");
            assert!((i0e(x) - r0 * (-x.abs()).exp()).abs() < 1e-14, "I0e({x})");
            x += 0.37;
        }
    }

    #[test]
    fn i_ratio_tends_to_one() {
        // I1/I0 = 1 - 1/(2x) - 1/(8x^2) + O(x^-3)
        let x = 40.0;
        let r = i1(x) / i0(x);
        assert!((r - (1.0 - 0.5 / x - 0.125 / (x * x))).abs() < 1e-5);
        assert!((r - 1.0).abs() < 1.3e-2);
        assert!((i1e(600.0) / i0e(600.0) - (1.0 - 0.5 / 600.0)).abs() < 1e-5);
    }

    #[test]
    fn overflow_guard() {
        assert!(bessel(BesselKind::I0, 701.0).is_err());
        assert!(bessel(BesselKind::I1, -701.0).is_err());
        assert!(bessel(BesselKind::J0, 701.0).is_ok());
    }

    fn j0_power_series(x: f64) -> f64 {
        let q = 0.25 * x * x;
        let mut t = 1.0;
        let mut s = 1.0;
        for k in 1..60 {
            t *= -q / (k as f64 * k as f64);
            s += t;
        }
        s
    }

    #[test]
    fn first_zero_against_bisection_on_power_series() {
        let (mut lo, mut hi) = (2.0f64, 3.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if j0_power_series(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let oracle = 0.5 * (lo + hi);
        let table = j0_zeros(3).unwrap();
        assert!((table.get(1) - oracle).abs() < 1e-12);
        assert!((table.get(1) - 2.404825557695773).abs() < 1e-12);
        assert!(j0(2.404825557695773).abs() < 1e-12);
    }

    #[test]
    fn zero_table_properties() {
        let t = j0_zeros(200).unwrap();
        for w in t.zeros().windows(2) {
            assert!(w[1] > w[0]);
        }
        for &z in t.zeros() {
            assert!(j0(z).abs() < 1e-12, "J0({z}) = {}", j0(z));
        }
        assert!((t.get(51) - t.get(50) - PI).abs() < 1e-3);
        assert!(j0_zeros(0).is_err());
    }
}
