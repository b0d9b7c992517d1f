//! Convex test functions on `[0, inf)`.
//!
//! Every [`ConvexFn`] carries its limit slope `lim f(l)/l` (which weights
//! probability mass escaping the support of the second argument of a
//! divergence) and an operator-convexity flag. The flag is trusted on
//! built-ins and Loewner-representation outputs; it gates access to the
//! closed formula for the maximal quantum f-divergence. Deciding operator
//! convexity for arbitrary user functions is out of scope, so
//! [`witness_fn`] conservatively reports `false`.

use std::fmt;
use std::sync::Arc;

use crate::linalg::{eigh, HermitianOp};
use crate::{Error, Result};

/// A convex function on `[0, inf)` with extended-real values.
#[derive(Clone)]
pub struct ConvexFn {
    label: String,
    eval: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    slope_at_infinity: f64,
    operator_convex: bool,
}

impl fmt::Debug for ConvexFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConvexFn")
            .field("label", &self.label)
            .field("slope_at_infinity", &self.slope_at_infinity)
            .field("operator_convex", &self.operator_convex)
            .finish()
    }
}

impl ConvexFn {
    /// Wraps an arbitrary convex function. The caller vouches for
    /// convexity and for the operator-convexity flag.
    pub fn new(
        label: impl Into<String>,
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
        slope_at_infinity: f64,
        operator_convex: bool,
    ) -> Self {
        ConvexFn {
            label: label.into(),
            eval: Arc::new(eval),
            slope_at_infinity,
            operator_convex,
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, lambda: f64) -> f64 {
        (self.eval)(lambda)
    }

    /// `lim_{l -> inf} f(l) / l`; may be infinite.
    pub fn slope_at_infinity(&self) -> f64 {
        self.slope_at_infinity
    }

    pub fn operator_convex(&self) -> bool {
        self.operator_convex
    }
}

/// `f(l) = -l^s` for `0 < s <= 1`; operator convex, slope 0 for `s < 1`
/// and -1 at `s = 1`.
pub fn power_family(s: f64) -> Result<ConvexFn> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::InvalidParameter(format!("power exponent {s} not in (0, 1]")));
    }
    let slope = if s < 1.0 { 0.0 } else { -1.0 };
    Ok(ConvexFn::new(
        format!("power:{s}"),
        move |l: f64| -l.powf(s),
        slope,
        true,
    ))
}

/// `f(l) = 1/(t + l)` for `t >= 0`; operator convex with slope 0. At
/// `t = 0` the value at the origin is `+inf`.
pub fn resolvent_family(t: f64) -> Result<ConvexFn> {
    if t < 0.0 {
        return Err(Error::InvalidParameter(format!("resolvent shift {t} < 0")));
    }
    Ok(ConvexFn::new(
        format!("resolvent:{t}"),
        move |l: f64| {
            let den = t + l;
            if den <= 0.0 {
                f64::INFINITY
            } else {
                1.0 / den
            }
        },
        0.0,
        true,
    ))
}

/// `f(l) = l^2`; operator convex with infinite slope.
pub fn square_fn() -> ConvexFn {
    ConvexFn::new("square", |l: f64| l * l, f64::INFINITY, true)
}

/// `f(l) = l^4`: convex but *not* operator convex. Used to probe the
/// operator-Jensen dichotomy.
pub fn quartic_fn() -> ConvexFn {
    ConvexFn::new("power4", |l: f64| l.powi(4), f64::INFINITY, false)
}

/// Integral representation data of an operator convex function:
/// `f(l) = f0 + alpha l + beta l^2 + sum w_k (l/(1+t_k) - l/(l+t_k))`.
#[derive(Clone, Debug)]
pub struct LownerRep {
    pub f0: f64,
    pub alpha: f64,
    pub beta: f64,
    /// atoms `(t_k > 0, w_k >= 0)` of the measure, pairwise distinct `t_k`
    pub measure: Vec<(f64, f64)>,
}

impl LownerRep {
    pub fn validate(&self) -> Result<()> {
        if self.beta < 0.0 {
            return Err(Error::InvalidParameter(format!("beta {} < 0", self.beta)));
        }
        for &(t, w) in &self.measure {
            if t <= 0.0 || w < 0.0 {
                return Err(Error::InvalidParameter(format!("bad atom (t={t}, w={w})")));
            }
        }
        for (i, &(ti, _)) in self.measure.iter().enumerate() {
            for &(tj, _) in &self.measure[i + 1..] {
                if ti == tj {
                    return Err(Error::InvalidParameter(format!("duplicate atom t={ti}")));
                }
            }
        }
        Ok(())
    }
}

/// Builds the operator convex function described by a [`LownerRep`].
pub fn from_lowner(rep: &LownerRep) -> Result<ConvexFn> {
    rep.validate()?;
    let slope = if rep.beta > 0.0 {
        f64::INFINITY
    } else {
        rep.alpha + rep.measure.iter().map(|&(t, w)| w / (1.0 + t)).sum::<f64>()
    };
    let rep = rep.clone();
    Ok(ConvexFn::new(
        format!(
            "lowner:f0={},alpha={},beta={},atoms={}",
            rep.f0,
            rep.alpha,
            rep.beta,
            rep.measure.len()
        ),
        move |l: f64| {
            let mut v = rep.f0 + rep.alpha * l + rep.beta * l * l;
            for &(t, w) in &rep.measure {
                v += w * (l / (1.0 + t) - l / (l + t));
            }
            v
        },
        slope,
        true,
    ))
}

/// `f(l) = r_max(l W0 + W1)`, the largest eigenvalue of an affine
/// Hermitian pencil. Convex as a pointwise max of affine maps; slope at
/// infinity is `r_max(W0)`. Not asserted operator convex.
pub fn witness_fn(w0: &HermitianOp, w1: &HermitianOp) -> Result<ConvexFn> {
    if w0.dim() != w1.dim() {
        return Err(Error::DimMismatch(w0.dim(), w1.dim()));
    }
    let slope = eigh(w0).max_eigenvalue();
    let w0 = w0.clone();
    let w1 = w1.clone();
    Ok(ConvexFn::new(
        "witness",
        move |l: f64| eigh(&w0.scale(l).add(&w1)).max_eigenvalue(),
        slope,
        false,
    ))
}

// ---------------------------------------------------------------------------
// Cauchy interpolation
// ---------------------------------------------------------------------------

/// Solves the Cauchy system `sum_j c_j / (node_i + pole_j) = value_i`.
///
/// Values on finitely many nodes are always matched by a combination of
/// resolvents at pairwise distinct positive poles; this returns the
/// coefficients. Fails when the system is singular beyond tolerance
/// (duplicated nodes or poles).
pub fn cauchy_interpolate(nodes: &[f64], poles: &[f64], values: &[f64]) -> Result<Vec<f64>> {
    let n = nodes.len();
    if poles.len() != n || values.len() != n {
        return Err(Error::DimMismatch(poles.len().max(values.len()), n));
    }
    for &t in poles {
        if t <= 0.0 {
            return Err(Error::InvalidParameter(format!("pole {t} <= 0")));
        }
    }
    let mut a = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in 0..n {
            a[i][j] = 1.0 / (nodes[i] + poles[j]);
        }
    }
    let c = solve_dense(a.clone(), values.to_vec())?;
    // residual gate
    let mut worst = 0.0f64;
    for i in 0..n {
        let mut acc = 0.0;
        for j in 0..n {
            acc += a[i][j] * c[j];
        }
        worst = worst.max((acc - values[i]).abs());
    }
    if worst > 1e-8 {
        return Err(Error::SingularSystem(worst));
    }
    Ok(c)
}

/// Dense real solve by Gaussian elimination with partial pivoting.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let (pivot_row, pivot_abs) = (col..n)
            .map(|r| (r, a[r][col].abs()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        if pivot_abs < 1e-300 {
            return Err(Error::SingularSystem(pivot_abs));
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        for r in (col + 1)..n {
            let factor = a[r][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            for c in col..n {
                a[r][c] -= factor * a[col][c];
            }
            b[r] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for c in (row + 1)..n {
            acc -= a[row][c] * x[c];
        }
        x[row] = acc / a[row][row];
    }
    Ok(x)
}

/// Parses a function spec string: `power:S`, `resolvent:T`, `square`,
/// `power4`, or `lowner:{json}`.
pub fn parse_fn_spec(spec: &str) -> Result<ConvexFn> {
    if spec == "square" {
        return Ok(square_fn());
    }
    if spec == "power4" {
        return Ok(quartic_fn());
    }
    if let Some(arg) = spec.strip_prefix("power:") {
        let s: f64 = arg
            .parse()
            .map_err(|_| Error::Parse(format!("bad power exponent `{arg}`")))?;
        return power_family(s);
    }
    if let Some(arg) = spec.strip_prefix("resolvent:") {
        let t: f64 = arg
            .parse()
            .map_err(|_| Error::Parse(format!("bad resolvent shift `{arg}`")))?;
        return resolvent_family(t);
    }
    if let Some(arg) = spec.strip_prefix("lowner:") {
        #[derive(serde::Deserialize)]
        struct RawRep {
            #[serde(default)]
            f0: f64,
            #[serde(default)]
            alpha: f64,
            #[serde(default)]
            beta: f64,
            #[serde(default)]
            atoms: Vec<(f64, f64)>,
        }
        let raw: RawRep =
            serde_json::from_str(arg).map_err(|e| Error::Parse(format!("lowner spec: {e}")))?;
        return from_lowner(&LownerRep {
            f0: raw.f0,
            alpha: raw.alpha,
            beta: raw.beta,
            measure: raw.atoms,
        });
    }
    Err(Error::Parse(format!("unknown function spec `{spec}`")))
}

/// Midpoint convexity on a sampled grid over `[0, hi]`; test helper for
/// the registry invariant.
pub fn midpoint_convex_on_grid(f: &ConvexFn, hi: f64, steps: usize) -> bool {
    let pts: Vec<f64> = (0..=steps).map(|k| hi * k as f64 / steps as f64).collect();
    for (i, &x) in pts.iter().enumerate() {
        for &y in &pts[i..] {
            let fx = f.eval(x);
            let fy = f.eval(y);
            if fx.is_infinite() || fy.is_infinite() {
                continue;
            }
            let mid = f.eval(0.5 * (x + y));
            if mid > 0.5 * (fx + fy) + 1e-9 {
                return false;
            }
        }
    }
    true
}
