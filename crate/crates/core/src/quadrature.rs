//! Gauss-Legendre quadrature.

use crate::error::{IgaError, Result};
use crate::scalar::Scalar;

pub const MAX_GAUSS_POINTS: usize = 32;

/// Gauss-Legendre points and weights on `[-1, 1]`, points ascending.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussRule<T> {
    pub points: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Scalar> GaussRule<T> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Points and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: T, b: T) -> impl Iterator<Item = (T, T)> + '_ {
        let half = (b - a) * T::lit(0.5);
        let mid = (a + b) * T::lit(0.5);
        self.points
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }
}

/// `n`-point rule, exact for polynomials up to degree `2n - 1`.
pub fn gauss_rule<T: Scalar>(n: usize) -> Result<GaussRule<T>> {
    if n == 0 || n > MAX_GAUSS_POINTS {
        return Err(IgaError::input(format!(
            "number of Gauss points must be in 1..={MAX_GAUSS_POINTS}, got {n}"
        )));
    }
    // Newton iteration on P_n in f64, then cast
    let mut pts = vec![0.0f64; n];
    let mut wts = vec![0.0f64; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        pts[i] = -x;
        pts[n - 1 - i] = x;
        wts[i] = w;
        wts[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        pts[n / 2] = 0.0;
    }
    Ok(GaussRule {
        points: pts.into_iter().map(T::lit).collect(),
        weights: wts.into_iter().map(T::lit).collect(),
    })
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_rule() {
        let g = gauss_rule::<f64>(2).unwrap();
        let s = 1.0 / 3f64.sqrt();
        assert!((g.points[0] + s).abs() < 1e-15 && (g.points[1] - s).abs() < 1e-15);
        assert!((g.weights[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn exactness_degree_2n_minus_1() {
        for n in 1..=16 {
            let g = gauss_rule::<f64>(n).unwrap();
            for k in 0..(2 * n) {
                let num: f64 = g
                    .points
                    .iter()
                    .zip(&g.weights)
                    .map(|(x, w)| w * x.powi(k as i32))
                    .sum();
                let exact = if k % 2 == 1 {
                    0.0
                } else {
                    2.0 / (k as f64 + 1.0)
                };
                assert!((num - exact).abs() < 1e-13, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn rejects_zero_points() {
        assert!(gauss_rule::<f64>(0).is_err());
    }
}
