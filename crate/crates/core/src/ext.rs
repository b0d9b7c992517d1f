//! Extended-real arithmetic conventions for divergence values.
//!
//! Divergences are `f64` with `+inf` as an in-band value. The one rule
//! that matters everywhere: a zero weight absorbs an infinite value,
//! `0 * inf = 0`, so that a zero-probability cell never contributes an
//! infinite term.

/// `w * v` with the convention `0 * inf = 0` (for `w >= 0`).
pub fn weighted(w: f64, v: f64) -> f64 {
    if w == 0.0 {
        0.0
    } else {
        w * v
    }
}

/// Difference `lhs - rhs` where equal infinities cancel to zero.
pub fn gap(lhs: f64, rhs: f64) -> f64 {
    if lhs.is_infinite() && rhs.is_infinite() && lhs == rhs {
        0.0
    } else {
        lhs - rhs
    }
}

/// Strict violation of `lhs >= rhs` at tolerance `tol`.
pub fn violates(lhs: f64, rhs: f64, tol: f64) -> bool {
    gap(lhs, rhs) < -tol
}

/// Equality at tolerance; two equal infinities are equal.
pub fn approx_eq(a: f64, b: f64, tol: f64) -> bool {
    gap(a, b).abs() <= tol
}

/// Renders a value for CSV output; infinities print as `inf` / `-inf`.
pub fn render(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".to_string()
    } else if v == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{v}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_weight_absorbs_infinity() {
        assert_eq!(weighted(0.0, f64::INFINITY), 0.0);
        assert_eq!(weighted(0.5, f64::INFINITY), f64::INFINITY);
        assert_eq!(weighted(2.0, 3.0), 6.0);
    }

    #[test]
    fn infinite_gaps() {
        assert_eq!(gap(f64::INFINITY, f64::INFINITY), 0.0);
        assert_eq!(gap(1.0, f64::INFINITY), f64::NEG_INFINITY);
        assert!(violates(1.0, f64::INFINITY, 1e-9));
        assert!(!violates(f64::INFINITY, 1.0, 1e-9));
        assert!(approx_eq(f64::INFINITY, f64::INFINITY, 1e-9));
        assert!(!approx_eq(1.0, f64::INFINITY, 1e-9));
    }

    #[test]
    fn rendering() {
        assert_eq!(render(f64::INFINITY), "inf");
        assert_eq!(render(-1.0), "-1");
        assert_eq!(render(0.5208333333333333), "0.5208333333333333");
    }
}
