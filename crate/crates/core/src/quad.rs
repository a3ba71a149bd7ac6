//! Adaptive composite Gauss-Legendre quadrature with interval halving.

use crate::error::{Error, Result};
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)] // inherent methods win once std is in the crate graph
use num_traits::Float;

/// n-point Gauss-Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = alloc::vec![0.0; n];
        let mut weights = alloc::vec![0.0; n];
        let m = n.div_ceil(2);
        let nf = n as f64;
        for i in 0..m {
            let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let mut p1 = 1.0;
                let mut p2 = 0.0;
                for j in 0..n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = ((2.0 * jf + 1.0) * z * p2 - jf * p3) / (jf + 1.0);
                }
                dp = nf * (z * p1 - p2) / (z * z - 1.0);
                let z1 = z;
                z = z1 - p1 / dp;
                if (z - z1).abs() < 1e-16 {
                    break;
                }
            }
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Returns (integral of f, integral of |f|) over [a, b].
    fn apply2(&self, f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let mut s = 0.0;
        let mut sa = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            let v = f(c + h * x);
            s += w * v;
            sa += w * v.abs();
        }
        (s * h, sa * h.abs())
    }

    pub fn apply(&self, mut f: impl FnMut(f64) -> f64, a: f64, b: f64) -> f64 {
        self.apply2(&mut f, a, b).0
    }
}

/// Adaptive integrator. A subinterval is accepted when its halved estimate
/// agrees with the whole-interval estimate to within its share of
/// `max(rel_tol * integral of |f|, abs_tol)`.
#[derive(Debug, Clone)]
pub struct AdaptiveQuad {
    rule: GaussLegendre,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_depth: usize,
}

impl Default for AdaptiveQuad {
    fn default() -> Self {
        Self::new(1e-10, 1e-300)
    }
}

impl AdaptiveQuad {
    pub fn new(rel_tol: f64, abs_tol: f64) -> Self {
        AdaptiveQuad {
            rule: GaussLegendre::new(16),
            rel_tol,
            abs_tol,
            max_depth: 40,
        }
    }

    pub fn integrate(&self, f: impl FnMut(f64) -> f64, a: f64, b: f64) -> Result<f64> {
        self.integrate_panels(f, a, b, 1)
    }

    /// Integrates over `panels` equal panels, each refined adaptively.
    /// Useful for oscillatory integrands whose period is known.
    pub fn integrate_panels(
        &self,
        mut f: impl FnMut(f64) -> f64,
        a: f64,
        b: f64,
        panels: usize,
    ) -> Result<f64> {
        if a == b {
            return Ok(0.0);
        }
        let panels = panels.max(1);
        let width = (b - a) / panels as f64;
        let mut stack: Vec<(f64, f64, f64, usize)> = Vec::with_capacity(64);
        let mut reference = 0.0;
        for k in 0..panels {
            let lo = a + k as f64 * width;
            let hi = if k + 1 == panels { b } else { lo + width };
            let (v, va) = self.rule.apply2(&mut f, lo, hi);
            reference += va;
            stack.push((lo, hi, v, 0));
        }
        let total_len = (b - a).abs();
        let mut total = 0.0;
        let mut worst = 0.0f64;
        while let Some((lo, hi, whole, depth)) = stack.pop() {
            let mid = 0.5 * (lo + hi);
            let (l, la) = self.rule.apply2(&mut f, lo, mid);
            let (r, ra) = self.rule.apply2(&mut f, mid, hi);
            let err = (l + r - whole).abs();
            let budget = (self.rel_tol * reference).max(self.abs_tol) * (hi - lo).abs() / total_len;
            if err <= budget || (la + ra) <= 1e-300 {
                total += l + r;
            } else if depth >= self.max_depth {
                worst = worst.max(err);
                total += l + r;
            } else {
                stack.push((lo, mid, l, depth + 1));
                stack.push((mid, hi, r, depth + 1));
            }
        }
        if worst > 0.0 {
            return Err(Error::NonConvergence {
                what: "adaptive quadrature",
                achieved: worst,
                required: (self.rel_tol * reference).max(self.abs_tol),
            });
        }
        if !total.is_finite() {
            return Err(Error::NonConvergence {
                what: "adaptive quadrature (non-finite integrand)",
                achieved: total,
                required: 0.0,
            });
        }
        Ok(total)
    }

    /// Integral over [a, inf) through x = a + s * u / (1 - u); `s` sets the
    /// length scale of the integrand.
    pub fn integrate_to_infinity(
        &self,
        mut f: impl FnMut(f64) -> f64,
        a: f64,
        s: f64,
    ) -> Result<f64> {
        self.integrate(
            |u| {
                if u >= 1.0 {
                    return 0.0;
                }
                let d = 1.0 - u;
                let x = a + s * u / d;
                let v = f(x);
                if v == 0.0 {
                    0.0
                } else {
                    v * s / (d * d)
                }
            },
            0.0,
            1.0,
        )
    }

    /// Integral over the whole real line, split at `c`.
    pub fn integrate_line(&self, mut f: impl FnMut(f64) -> f64, c: f64, s: f64) -> Result<f64> {
        let right = self.integrate_to_infinity(&mut f, c, s)?;
        let left = self.integrate_to_infinity(|x| f(2.0 * c - x), c, s)?;
        Ok(left + right)
    }
}
