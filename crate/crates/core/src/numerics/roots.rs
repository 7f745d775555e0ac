//! Sign-change scan followed by bisection.

use super::{NumericsError, RootSet};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootOptions {
    /// Number of equally spaced samples used to look for sign changes.
    pub scan_points: usize,
    /// Accept a point once |f| drops to this value.
    pub tol: f64,
}

impl Default for RootOptions {
    fn default() -> Self {
        Self { scan_points: 2000, tol: 1e-12 }
    }
}

/// All roots of `f` on `[a, b]` that show up as sign changes on the scan grid.
///
/// Returns an empty set when no sign change is seen. Brackets that collapse to
/// adjacent floats without |f| reaching `tol` are jump discontinuities, not
/// roots, and are dropped.
pub fn find_roots_bracketed<F>(mut f: F, a: f64, b: f64, opts: &RootOptions) -> Result<RootSet<f64>, NumericsError>
where
    F: FnMut(f64) -> f64,
{
    if !(a.is_finite() && b.is_finite()) || b <= a {
        return Err(NumericsError::InvalidArgument(format!("bad interval [{a}, {b}]")));
    }
    if opts.scan_points < 2 {
        return Err(NumericsError::InvalidArgument("scan_points must be at least 2".into()));
    }
    let n = opts.scan_points;
    let mut eval = |x: f64| -> Result<f64, NumericsError> {
        let y = f(x);
        if y.is_nan() {
            Err(NumericsError::NanEncountered { x })
        } else {
            Ok(y)
        }
    };

    let xs: Vec<f64> = (0..n).map(|i| if i == n - 1 { b } else { a + (b - a) * i as f64 / (n - 1) as f64 }).collect();
    let mut ys = Vec::with_capacity(n);
    for &x in &xs {
        ys.push(eval(x)?);
    }

    let mut set = RootSet { roots: Vec::new(), residuals: Vec::new(), tolerance: opts.tol };
    for i in 0..n {
        if ys[i] == 0.0 {
            set.roots.push(xs[i]);
            set.residuals.push(0.0);
            continue;
        }
        if i + 1 < n && ys[i + 1] != 0.0 && (ys[i] < 0.0) != (ys[i + 1] < 0.0) {
            if let Some((x, r)) = bisect(&mut eval, xs[i], xs[i + 1], ys[i], ys[i + 1], opts.tol)? {
                set.roots.push(x);
                set.residuals.push(r);
            }
        }
    }
    Ok(set)
}

fn bisect<E>(
    eval: &mut E,
    mut lo: f64,
    mut hi: f64,
    mut flo: f64,
    mut fhi: f64,
    tol: f64,
) -> Result<Option<(f64, f64)>, NumericsError>
where
    E: FnMut(f64) -> Result<f64, NumericsError>,
{
    if flo.abs() <= tol {
        return Ok(Some((lo, flo.abs())));
    }
    if fhi.abs() <= tol {
        return Ok(Some((hi, fhi.abs())));
    }
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            let (x, r) = if flo.abs() <= fhi.abs() { (lo, flo.abs()) } else { (hi, fhi.abs()) };
            return Ok(if r <= tol { Some((x, r)) } else { None });
        }
        let fm = eval(mid)?;
        if fm.abs() <= tol {
            return Ok(Some((mid, fm.abs())));
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
            fhi = fm;
        }
    }
}
