//! Roots of real cubics by the trigonometric / Cardano formulas, polished
//! with Newton steps.

use num_complex::Complex64;

use super::{NumericsError, RootSet};

/// Horner evaluation; `coeffs` run from the highest power down.
pub fn poly_eval(coeffs: &[f64], x: Complex64) -> Complex64 {
    coeffs.iter().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * x + c)
}

fn poly_deriv(coeffs: &[f64], x: Complex64) -> Complex64 {
    let n = coeffs.len() - 1;
    coeffs[..n].iter().enumerate().fold(Complex64::new(0.0, 0.0), |acc, (i, &c)| acc * x + c * (n - i) as f64)
}

fn polish(coeffs: &[f64], mut x: Complex64) -> Complex64 {
    let mut fx = poly_eval(coeffs, x).norm();
    for _ in 0..8 {
        let d = poly_deriv(coeffs, x);
        if d.norm() == 0.0 || fx == 0.0 {
            break;
        }
        let cand = x - poly_eval(coeffs, x) / d;
        let fc = poly_eval(coeffs, cand).norm();
        if fc < fx {
            x = cand;
            fx = fc;
        } else {
            break;
        }
    }
    x
}

fn quadratic(s: f64, p: f64) -> [Complex64; 2] {
    // x^2 - s x + p = 0
    let half = 0.5 * s;
    let disc = half * half - p;
    if disc < 0.0 {
        let im = (-disc).sqrt();
        [Complex64::new(half, -im), Complex64::new(half, im)]
    } else {
        let big = if half >= 0.0 { half + disc.sqrt() } else { half - disc.sqrt() };
        if big == 0.0 {
            [Complex64::new(0.0, 0.0); 2]
        } else {
            let (a, b) = (big, p / big);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            [Complex64::new(lo, 0.0), Complex64::new(hi, 0.0)]
        }
    }
}

/// All three complex roots of `c3 x^3 + c2 x^2 + c1 x + c0`.
///
/// `tolerance` on the returned set is `1e-12 * max|c_i| * max(1, |x|)^3`
/// with `|x|` the largest root modulus.
pub fn cubic_roots(c3: f64, c2: f64, c1: f64, c0: f64) -> Result<RootSet<Complex64>, NumericsError> {
    if ![c3, c2, c1, c0].iter().all(|c| c.is_finite()) {
        return Err(NumericsError::InvalidArgument("non-finite cubic coefficient".into()));
    }
    if c3 == 0.0 {
        return Err(NumericsError::ZeroLeadingCoefficient);
    }
    let coeffs = [c3, c2, c1, c0];
    let a = c2 / c3;
    let b = c1 / c3;
    let c = c0 / c3;
    let shift = a / 3.0;
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);

    let mut roots: Vec<Complex64> = if p == 0.0 && q == 0.0 {
        vec![Complex64::new(-shift, 0.0); 3]
    } else if disc > 0.0 {
        let sq = disc.sqrt();
        let big = -(q.signum()) * (q.abs() / 2.0 + sq).cbrt();
        let t = if big != 0.0 { big - p / (3.0 * big) } else { 0.0 };
        let r = polish(&coeffs, Complex64::new(t - shift, 0.0)).re;
        // Remaining pair from sum and product; pick the better-conditioned product.
        let s = -a - r;
        let prod = if r.abs() > 1.0 { -c / r } else { b - r * s };
        let [x1, x2] = quadratic(s, prod);
        vec![Complex64::new(r, 0.0), x1, x2]
    } else {
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        (0..3)
            .map(|k| {
                let t = m * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos();
                Complex64::new(t - shift, 0.0)
            })
            .collect()
    };
    for r in roots.iter_mut() {
        *r = polish(&coeffs, *r);
    }
    roots.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));

    let cmax = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let rmax = roots.iter().fold(1.0f64, |m, r| m.max(r.norm()));
    let residuals = roots.iter().map(|r| poly_eval(&coeffs, *r).norm()).collect();
    Ok(RootSet { roots, residuals, tolerance: 1e-12 * cmax * rmax.powi(3) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distinct_real_roots() {
        let set = cubic_roots(1.0, -6.0, 11.0, -6.0).unwrap();
        for (r, w) in set.roots.iter().zip([1.0, 2.0, 3.0]) {
            assert!((r - Complex64::new(w, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn complex_pair() {
        // (x - 2)(x^2 + 1)
        let set = cubic_roots(1.0, -2.0, 1.0, -2.0).unwrap();
        let want = [Complex64::new(0.0, -1.0), Complex64::new(0.0, 1.0), Complex64::new(2.0, 0.0)];
        for (r, w) in set.roots.iter().zip(want) {
            assert!((r - w).norm() < 1e-12, "{r} vs {w}");
        }
    }

    #[test]
    fn triple_root() {
        let set = cubic_roots(2.0, -6.0, 6.0, -2.0).unwrap();
        assert!(set.roots.iter().all(|r| (r - 1.0).norm() < 1e-5));
    }

    #[test]
    fn zero_leading_coefficient() {
        assert_eq!(cubic_roots(0.0, 1.0, 1.0, 1.0), Err(NumericsError::ZeroLeadingCoefficient));
    }
}
