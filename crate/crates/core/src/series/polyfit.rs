//! Least-squares polynomial fits of degree 0..=10, selected by SMAPE.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::forecasting::smape;

pub const MAX_DEGREE: usize = 10;

/// Degrees whose SMAPE lies within this of the minimum count as tied.
pub const SMAPE_TIE_TOLERANCE: f64 = 1e-9;

/// Polynomial in the scaled abscissa `u = (x - center) / scale`, where `x` is
/// the 0-based month ordinal. Scaling keeps high-degree fits well conditioned.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    pub center: f64,
    pub scale: f64,
    /// Coefficients of `u^0, u^1, ...`.
    pub coefficients: Vec<f64>,
}

impl Polynomial {
    pub fn degree(&self) -> usize {
        self.coefficients.len().saturating_sub(1)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let u = (x - self.center) / self.scale;
        self.coefficients.iter().rev().fold(0.0, |acc, c| acc * u + c)
    }

    /// Coefficients `a_0..a_d` in the raw month ordinal `x`.
    pub fn monomial_coefficients(&self) -> Vec<f64> {
        // expand Σ c_k ((x - center)/scale)^k
        let d = self.coefficients.len();
        let mut out = vec![0.0; d];
        let s = 1.0 / self.scale;
        let t = -self.center / self.scale;
        for (k, c) in self.coefficients.iter().enumerate() {
            // (s x + t)^k = Σ_j C(k,j) s^j x^j t^(k-j)
            let mut binom = 1.0;
            for j in 0..=k {
                if j > 0 {
                    binom = binom * (k - j + 1) as f64 / j as f64;
                }
                out[j] += c * binom * s.powi(j as i32) * t.powi((k - j) as i32);
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegreeFit {
    pub degree: usize,
    /// `None` when the design was rank deficient and the degree was skipped.
    pub smape: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyFit {
    pub degree: usize,
    pub polynomial: Polynomial,
    pub smape: f64,
    pub per_degree: Vec<DegreeFit>,
}

impl PolyFit {
    pub fn fitted(&self, n: usize) -> Vec<f64> {
        (0..n).map(|i| self.polynomial.eval(i as f64)).collect()
    }
}

/// Least-squares polynomial of the given degree, or `None` if the design is
/// rank deficient.
pub fn fit_polynomial(values: &[f64], degree: usize) -> Option<Polynomial> {
    let n = values.len();
    if n == 0 || degree + 1 > n {
        return None;
    }
    let center = (n - 1) as f64 / 2.0;
    let scale = if n > 1 { center } else { 1.0 };
    let design = DMatrix::from_fn(n, degree + 1, |i, j| ((i as f64 - center) / scale).powi(j as i32));
    let svd = design.svd(true, true);
    let sv = &svd.singular_values;
    let max = sv.max();
    let min = sv.min();
    if max == 0.0 || min / max < 1e-12 {
        return None;
    }
    let rhs = DVector::from_column_slice(values);
    let sol = svd.solve(&rhs, 0.0).ok()?;
    Some(Polynomial { center, scale, coefficients: sol.iter().copied().collect() })
}

/// Fits every degree 0..=10 and keeps the one with the lowest SMAPE against
/// `values`; the lowest degree wins among ties.
pub fn fit_best_polynomial(values: &[f64]) -> Option<PolyFit> {
    let mut per_degree = Vec::with_capacity(MAX_DEGREE + 1);
    let mut fits: Vec<(usize, Polynomial, f64)> = Vec::new();
    for degree in 0..=MAX_DEGREE {
        match fit_polynomial(values, degree) {
            Some(poly) => {
                let fitted: Vec<f64> = (0..values.len()).map(|i| poly.eval(i as f64)).collect();
                let s = smape(values, &fitted).ok()?;
                per_degree.push(DegreeFit { degree, smape: Some(s) });
                fits.push((degree, poly, s));
            }
            None => per_degree.push(DegreeFit { degree, smape: None }),
        }
    }
    let best = fits.iter().map(|f| f.2).fold(f64::INFINITY, f64::min);
    let (degree, polynomial, smape) = fits.into_iter().find(|f| f.2 <= best + SMAPE_TIE_TOLERANCE)?;
    Some(PolyFit { degree, polynomial, smape, per_degree })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_a_line() {
        let v: Vec<f64> = (0..60).map(|x| 2.0 * x as f64 + 1.0).collect();
        let fit = fit_best_polynomial(&v).unwrap();
        assert_eq!(fit.degree, 1);
        assert!(fit.smape < 1e-9);
        let raw = fit.polynomial.monomial_coefficients();
        assert!((raw[0] - 1.0).abs() < 1e-9 && (raw[1] - 2.0).abs() < 1e-9, "{raw:?}");
    }

    #[test]
    fn constant_series() {
        let fit = fit_best_polynomial(&[5.0; 24]).unwrap();
        assert_eq!(fit.degree, 0);
        assert!((fit.polynomial.coefficients[0] - 5.0).abs() < 1e-12);
        assert!((fit.polynomial.monomial_coefficients()[0] - 5.0).abs() < 1e-12);
    }

    #[test]
    fn quartic_selected() {
        let p = |x: f64| {
            let u = x / 100.0;
            3.0 + u - 2.0 * u * u + 0.5 * u.powi(3) + 4.0 * u.powi(4)
        };
        let v: Vec<f64> = (0..120).map(|x| p(x as f64)).collect();
        let fit = fit_best_polynomial(&v).unwrap();
        assert_eq!(fit.degree, 4);
        for d in &fit.per_degree {
            if d.degree < 4 {
                assert!(d.smape.unwrap() > 1e-6);
            }
        }
    }

    #[test]
    fn short_series_skips_high_degrees() {
        let fit = fit_best_polynomial(&[1.0, 3.0, 2.0]).unwrap();
        assert!(fit.per_degree[3..].iter().all(|d| d.smape.is_none()));
        assert_eq!(fit.degree, 2);
    }

    #[test]
    fn all_zero_series() {
        let fit = fit_best_polynomial(&[0.0; 10]).unwrap();
        assert_eq!(fit.degree, 0);
        assert_eq!(fit.smape, 0.0);
    }
}
