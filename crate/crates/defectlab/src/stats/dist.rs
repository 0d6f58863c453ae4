//! Survival functions backing the p-values: chi-square via the regularized
//! upper incomplete gamma, Student-t via the regularized incomplete beta,
//! normal via the complementary error function, and the studentized range
//! (infinite df) via its single-integral form with adaptive quadrature.

use crate::error::{Error, Result};
use statrs::function::{beta, erf, gamma};

/// P(X > x) for a chi-square variable with `df` degrees of freedom.
pub fn chisq_sf(x: f64, df: usize) -> Result<f64> {
    if x < 0.0 || !x.is_finite() {
        return Err(Error::Numeric(format!("chisq_sf: invalid x = {x}")));
    }
    if df == 0 {
        return Err(Error::Numeric("chisq_sf: df must be >= 1".into()));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    Ok(gamma::gamma_ur(df as f64 / 2.0, x / 2.0))
}

/// Two-tailed helper base: P(T > t) for Student-t with `df` degrees of freedom.
pub fn student_t_sf(t: f64, df: usize) -> Result<f64> {
    if !t.is_finite() {
        return Err(Error::Numeric(format!("student_t_sf: invalid t = {t}")));
    }
    if df == 0 {
        return Err(Error::Numeric("student_t_sf: df must be >= 1".into()));
    }
    let v = df as f64;
    let x = v / (v + t * t);
    let tail = 0.5 * beta::beta_reg(v / 2.0, 0.5, x);
    Ok(if t >= 0.0 { tail } else { 1.0 - tail })
}

/// P(Z > z) for a standard normal variable.
pub fn normal_sf(z: f64) -> f64 {
    0.5 * erf::erfc(z / std::f64::consts::SQRT_2)
}

fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * erf::erfc(-z / std::f64::consts::SQRT_2)
}

/// P(Q > q) for the studentized range of `k` iid standard normals
/// (infinite denominator df):
/// 1 - k * integral phi(z) * (Phi(z) - Phi(z - q))^(k-1) dz.
pub fn studentized_range_sf(q: f64, k: usize) -> Result<f64> {
    if k < 2 {
        return Err(Error::Numeric("studentized_range_sf: k must be >= 2".into()));
    }
    if !q.is_finite() {
        return Err(Error::Numeric(format!("studentized_range_sf: invalid q = {q}")));
    }
    if q <= 0.0 {
        return Ok(1.0);
    }
    // survival form: k * integral phi(z) * (Phi(z)^(k-1) - (Phi(z)-Phi(z-q))^(k-1));
    // avoids the 1 - cdf cancellation in the far tail
    let e = k as i32 - 1;
    let f = |z: f64| {
        let lo = normal_cdf(z);
        let hi = (lo - normal_cdf(z - q)).max(0.0);
        normal_pdf(z) * (lo.powi(e) - hi.powi(e)).max(0.0)
    };
    // integrand is bounded by phi(z); +-9 leaves ~1e-19 outside
    let sf = k as f64 * adaptive_simpson(&f, -9.0, 9.0 + q, 1e-10, 40);
    Ok(sf.clamp(0.0, 1.0))
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson(a, b, fa, fm, fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn chisq_textbook_critical_value() {
        assert!((chisq_sf(3.841459, 1).unwrap() - 0.05).abs() < 1e-5);
        assert!((chisq_sf(7.814728, 3).unwrap() - 0.05).abs() < 1e-5);
    }

    #[test]
    fn chisq_domain_checks() {
        assert!(chisq_sf(-1.0, 1).is_err());
        assert!(chisq_sf(1.0, 0).is_err());
        assert_eq!(chisq_sf(0.0, 2).unwrap(), 1.0);
    }

    #[test]
    fn student_t_symmetry_and_values() {
        // t table: P(T > 2.085963) = 0.025 at df 20
        assert!((student_t_sf(2.085963, 20).unwrap() - 0.025).abs() < 1e-5);
        let p = student_t_sf(1.3, 7).unwrap();
        let q = student_t_sf(-1.3, 7).unwrap();
        assert_relative_eq!(p + q, 1.0, epsilon = 1e-12);
        assert_relative_eq!(student_t_sf(0.0, 5).unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn normal_sf_values() {
        assert_eq!(normal_sf(0.0), 0.5);
        assert!((normal_sf(1.959964) - 0.025).abs() < 1e-6);
        assert!((normal_sf(1.644854) - 0.05).abs() < 1e-6);
    }

    #[test]
    fn studentized_range_published_critical_values() {
        // Tukey tables, alpha = 0.05, df = infinity
        for (k, q) in [(3, 3.314), (4, 3.633), (5, 3.858)] {
            let p = studentized_range_sf(q, k).unwrap();
            assert!((p - 0.05).abs() < 5e-4, "k={k} q={q}: {p}");
        }
    }

    #[test]
    fn studentized_range_limits() {
        assert_eq!(studentized_range_sf(0.0, 3).unwrap(), 1.0);
        assert_eq!(studentized_range_sf(-1.0, 3).unwrap(), 1.0);
        assert!(studentized_range_sf(1e-9, 4).unwrap() > 1.0 - 1e-6);
        assert!(studentized_range_sf(50.0, 3).unwrap() < 1e-8);
        assert!(studentized_range_sf(1.0, 2).is_ok());
    }
}
