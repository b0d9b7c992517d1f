//! The three-point construction showing that the divergence inequalities
//! for all operator convex test functions do not certify convertibility,
//! plus the randomized operator-Jensen violation search.
//!
//! Both families live on a 3-point alphabet with uniform second
//! coordinates. The source first coordinate is a triple
//! `(a0, b0, c0)`, the target first coordinate a point `(a, b, 1-a-b)`.
//! Because the uniform distribution is fixed, admissible maps are doubly
//! stochastic, so the truly reachable region `C1` is the hexagon of
//! points majorized by the triple. The region `C2` cut out by the
//! operator convex constraints is strictly larger: along the line
//! `b = 1 - 2a` the constraint curves `g_t = 0` all cross strictly above
//! the hexagon's top edge `b = c0`, leaving a whole segment of points
//! that pass every operator convex test yet are unreachable.

use crate::convexfn::ConvexFn;
use crate::criteria::necessary_scan;
use crate::divergence::{ClassicalPair, ProbVector};
use crate::feasibility::{classical_feasible, majorization_feasible, FeasibilityStatus};
use crate::linalg::{eigh, spectral_apply, CMat, HermitianOp};
use crate::sampling::{self, Rng};
use crate::{Error, Result};

/// The source triple `p0 = (a0, b0, c0)` with `0 < a0 < b0 < c0`,
/// summing to one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TriplePoint {
    pub a0: f64,
    pub b0: f64,
    pub c0: f64,
}

impl TriplePoint {
    pub fn new(a0: f64, b0: f64, c0: f64) -> Result<Self> {
        if !(a0 > 0.0 && a0 < b0 && b0 < c0) {
            return Err(Error::InvalidTriple(format!(
                "need 0 < a0 < b0 < c0, got ({a0}, {b0}, {c0})"
            )));
        }
        if (a0 + b0 + c0 - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidTriple(format!(
                "coordinates sum to {}",
                a0 + b0 + c0
            )));
        }
        Ok(TriplePoint { a0, b0, c0 })
    }

    pub fn coords(&self) -> [f64; 3] {
        [self.a0, self.b0, self.c0]
    }

    /// `a0^2 + b0^2 + c0^2`.
    pub fn sum_of_squares(&self) -> f64 {
        self.a0 * self.a0 + self.b0 * self.b0 + self.c0 * self.c0
    }

    /// Vertices of the hexagon `C1` in the `(a, b)` plane, in boundary
    /// order.
    pub fn hexagon_vertices(&self) -> [(f64, f64); 6] {
        let (a0, b0, c0) = (self.a0, self.b0, self.c0);
        [
            (a0, c0),
            (b0, c0),
            (c0, b0),
            (c0, a0),
            (b0, a0),
            (a0, b0),
        ]
    }
}

/// Index of one constraint curve: a resolvent shift `t >= 0`, or the
/// dedicated tag for the square constraint.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CurveTag {
    Resolvent(f64),
    Square,
}

impl std::fmt::Display for CurveTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CurveTag::Resolvent(t) => write!(f, "resolvent t={t}"),
            CurveTag::Square => write!(f, "square"),
        }
    }
}

/// Intersection of one constraint curve with the line `b = 1 - 2a`.
#[derive(Clone, Copy, Debug)]
pub struct CurveSample {
    pub tag: CurveTag,
    pub a_t: f64,
    pub b_t: f64,
}

/// The constraint function: difference of divergence sums between the
/// point `(a, b, 1-a-b)` and the triple, for the resolvent at shift `t`
/// or for the square.
pub fn g_t(a: f64, b: f64, tag: CurveTag, triple: &TriplePoint) -> f64 {
    let c = 1.0 - a - b;
    match tag {
        CurveTag::Square => {
            a * a + b * b + c * c - triple.sum_of_squares()
        }
        CurveTag::Resolvent(t) => {
            let mut acc = 0.0;
            for x in [a, b, c] {
                let den = x + t;
                if den.abs() < 1e-14 {
                    return f64::INFINITY;
                }
                acc += 1.0 / den;
            }
            for x in triple.coords() {
                acc -= 1.0 / (x + t);
            }
            acc
        }
    }
}

/// Whether `(a, b, 1-a-b)` lies in the hexagon `C1`, i.e. is majorized
/// by the triple.
pub fn hexagon_contains(a: f64, b: f64, triple: &TriplePoint) -> bool {
    let c = 1.0 - a - b;
    if a < -1e-12 || b < -1e-12 || c < -1e-12 {
        return false;
    }
    let point = match ProbVector::new(vec![a.max(0.0), b.max(0.0), c.max(0.0)]) {
        Ok(p) => p,
        Err(_) => return false,
    };
    let src = ProbVector::new(triple.coords().to_vec()).expect("valid triple");
    matches!(
        majorization_feasible(&src, &point).map(|r| r.status),
        Ok(FeasibilityStatus::Feasible)
    )
}

/// Direct 2D point-in-convex-hexagon test; cross-check oracle for
/// [`hexagon_contains`].
pub fn hexagon_contains_geometric(a: f64, b: f64, triple: &TriplePoint) -> bool {
    let verts = triple.hexagon_vertices();
    for i in 0..6 {
        let (x1, y1) = verts[i];
        let (x2, y2) = verts[(i + 1) % 6];
        // vertices run clockwise in (a, b); inside means every cross
        // product keeps the same sign
        let cross = (x2 - x1) * (b - y1) - (y2 - y1) * (a - x1);
        if cross > 1e-12 {
            return false;
        }
    }
    true
}

/// The auxiliary quantity `e_t` defined by
/// `(1/t)(3 - 1/t + e_t/t^2) = sum_i 1/(x_i + t)`.
///
/// Evaluated in the algebraically equivalent form
/// `e_t = E0 - sum_i x_i^3 / (x_i + t)` (with `E0` the sum of squares),
/// which is stable for large `t` where the direct
/// `t^3 S(t) - 3t^2 + t` cancels catastrophically.
pub fn e_t(triple: &TriplePoint, t: f64) -> Result<f64> {
    if t <= 0.0 {
        return Err(Error::InvalidParameter(format!("e_t needs t > 0, got {t}")));
    }
    let mut acc = triple.sum_of_squares();
    for x in triple.coords() {
        acc -= x * x * x / (x + t);
    }
    Ok(acc)
}

/// `g` restricted to the line `b = 1 - 2a`, written as paired
/// differences so large shifts keep full precision:
/// each resolvent term is `(x0 - x) / ((x + t)(x0 + t))`.
fn g_on_line(b: f64, tag: CurveTag, triple: &TriplePoint) -> f64 {
    let a = 0.5 * (1.0 - b);
    match tag {
        CurveTag::Square => g_t(a, b, CurveTag::Square, triple),
        CurveTag::Resolvent(t) => {
            let point = [a, b, a];
            let mut acc = 0.0;
            for (x, x0) in point.iter().zip(triple.coords()) {
                acc += (x0 - x) / ((x + t) * (x0 + t));
            }
            acc
        }
    }
}

/// The paper-form closed expression for the upper root on the line, for
/// `t > 0`: the quadratic `A b^2 + B b + C = 0` with coefficients in
/// `e_t`, solved by the numerically stable quadratic formula.
pub fn b_t_closed_form(triple: &TriplePoint, t: f64) -> Result<f64> {
    let e = e_t(triple, t)?;
    let a = 3.0 * t * t - t + e;
    let b = -(2.0 * t * t + (e - 1.0) * t + e);
    let c = t * t - e * t - 2.0 * e * t * t;
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Err(Error::NoUpperRoot(format!("negative discriminant at t={t}")));
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let r1 = q / a;
    let r2 = if q != 0.0 { c / q } else { f64::NAN };
    Ok(r1.max(r2))
}

/// Expanded-polynomial discriminant as displayed in the closed form;
/// kept for transcription cross-checks at moderate shifts.
pub fn b_t_discriminant_expanded(triple: &TriplePoint, t: f64) -> Result<f64> {
    let e = e_t(triple, t)?;
    Ok((24.0 * e - 8.0) * t.powi(4)
        + 8.0 * e * t.powi(3)
        + (9.0 * e * e - 6.0 * e + 1.0) * t * t
        + (6.0 * e * e - 2.0 * e) * t
        + e * e)
}

/// Intersection of a constraint curve with the line `b = 1 - 2a`, upper
/// branch `b > c0`.
///
/// Primary route is bracketing plus bisection on the paired-difference
/// form of `g`; for resolvents with `t > 0` the result is cross-checked
/// against the closed-form quadratic, and for the square tag against the
/// directly solved quadratic.
pub fn b_t_root(triple: &TriplePoint, tag: CurveTag) -> Result<CurveSample> {
    let c0 = triple.c0;
    const SCAN_STEPS: usize = 4096;
    let f = |b: f64| g_on_line(b, tag, triple);

    // scan upward from c0 for the first sign change
    let hi_end = 1.0 - 1e-9;
    let mut prev_b = c0;
    let mut prev_v = f(prev_b);
    let mut bracket = None;
    for k in 1..=SCAN_STEPS {
        let b = c0 + (hi_end - c0) * k as f64 / SCAN_STEPS as f64;
        let v = f(b);
        if prev_v <= 0.0 && v > 0.0 {
            bracket = Some((prev_b, b));
            break;
        }
        prev_b = b;
        prev_v = v;
    }
    let (mut lo, mut hi) = bracket.ok_or_else(|| Error::NoUpperRoot(tag.to_string()))?;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    let b = 0.5 * (lo + hi);

    match tag {
        CurveTag::Resolvent(t) if t > 0.0 => {
            let closed = b_t_closed_form(triple, t)?;
            debug_assert!(
                (closed - b).abs() < 1e-8,
                "closed form {closed} vs bisection {b} at t={t}"
            );
            if (closed - b).abs() >= 1e-8 {
                return Err(Error::SearchFailure(format!(
                    "closed form {closed} and bisection {b} disagree at t={t}"
                )));
            }
        }
        CurveTag::Square => {
            // 3b^2 - 2b + (1 - 2 E0) = 0, upper branch
            let e0 = triple.sum_of_squares();
            let closed = (1.0 + (6.0 * e0 - 2.0).max(0.0).sqrt()) / 3.0;
            if (closed - b).abs() >= 1e-8 {
                return Err(Error::SearchFailure(format!(
                    "square root {closed} and bisection {b} disagree"
                )));
            }
        }
        _ => {}
    }

    Ok(CurveSample { tag, a_t: 0.5 * (1.0 - b), b_t: b })
}

/// Limit of the upper intersection as the shift grows:
/// `(1 + sqrt(6 E0 - 2)) / 3` with `E0` the sum of squares. Strictly
/// above `c0` for every valid (non-uniform) triple.
pub fn b_infinity(triple: &TriplePoint) -> Result<f64> {
    let disc = 6.0 * triple.sum_of_squares() - 2.0;
    if disc < 0.0 {
        return Err(Error::InvalidTriple(format!("negative discriminant {disc}")));
    }
    Ok((1.0 + disc.sqrt()) / 3.0)
}

/// Sweep outcome: the infimum of the upper intersections and where it
/// was attained.
#[derive(Clone, Debug)]
pub struct BStar {
    pub b_star: f64,
    pub t_star: CurveTag,
    pub samples: Vec<CurveSample>,
    pub b_infinity: f64,
}

/// Minimum of `b_t` over `t_grid + {0} + square`, with the large-shift
/// tail bounded by [`b_infinity`].
pub fn b_star(triple: &TriplePoint, t_grid: &[f64]) -> Result<BStar> {
    if t_grid.is_empty() {
        return Err(Error::InvalidParameter("empty t grid".into()));
    }
    let mut samples = Vec::with_capacity(t_grid.len() + 2);
    if !t_grid.contains(&0.0) {
        samples.push(b_t_root(triple, CurveTag::Resolvent(0.0))?);
    }
    for &t in t_grid {
        samples.push(b_t_root(triple, CurveTag::Resolvent(t))?);
    }
    samples.push(b_t_root(triple, CurveTag::Square)?);

    let binf = b_infinity(triple)?;
    let mut best = samples[samples.len() - 1]; // square sample
    for s in &samples {
        if s.b_t < best.b_t {
            best = *s;
        }
    }
    // the tail beyond the grid is governed by the limit value
    let b_star = best.b_t.min(binf);
    let margin = b_star - triple.c0;
    if margin <= 0.0 {
        return Err(Error::SearchFailure(format!(
            "sweep infimum {b_star} does not clear c0 = {}",
            triple.c0
        )));
    }
    Ok(BStar { b_star, t_star: best.tag, samples, b_infinity: binf })
}

/// Everything the separating point certifies.
#[derive(Clone, Debug)]
pub struct SeparationReport {
    /// the point `(a, b)` on the line `b = 1 - 2a`
    pub point: (f64, f64),
    pub b_star: f64,
    pub t_star: CurveTag,
    pub b_infinity: f64,
    /// max over the constraint grid of `g` at the point (inside `C2`
    /// means <= tol)
    pub max_g: f64,
    pub in_hexagon: bool,
    pub majorization: FeasibilityStatus,
    pub lp: FeasibilityStatus,
    pub scan_violations: usize,
    pub scan_worst_gap: f64,
}

/// Produces a point of `C2 \ C1` on the line `b = 1 - 2a` and verifies
/// the full contradiction end to end:
/// every sampled operator convex constraint holds at the point, yet the
/// point is outside the hexagon and both the majorization and LP oracles
/// refuse it, while the divergence scan reports zero violations.
pub fn find_separating_point(
    triple: &TriplePoint,
    t_grid: &[f64],
    tol: f64,
) -> Result<SeparationReport> {
    let sweep = b_star(triple, t_grid)?;
    let b = 0.5 * (triple.c0 + sweep.b_star);
    let a = 0.5 * (1.0 - b);

    let mut max_g = g_t(a, b, CurveTag::Square, triple);
    let mut tags: Vec<CurveTag> = vec![CurveTag::Resolvent(0.0)];
    tags.extend(t_grid.iter().map(|&t| CurveTag::Resolvent(t)));
    for tag in tags {
        max_g = max_g.max(g_t(a, b, tag, triple));
    }
    if max_g > tol {
        return Err(Error::SearchFailure(format!(
            "point ({a}, {b}) violates a constraint by {max_g:.3e}"
        )));
    }

    let in_hexagon = hexagon_contains(a, b, triple);
    let source = ProbVector::new(triple.coords().to_vec())?;
    let target = ProbVector::new(vec![a, b, 1.0 - a - b])?;
    let majorization = majorization_feasible(&source, &target)?.status;

    let uniform = ProbVector::uniform(3);
    let from = ClassicalPair::new(source, uniform.clone())?;
    let to_classical = ClassicalPair::new(target, uniform)?;
    let lp = classical_feasible(&from, &to_classical, 1e-9)?.status;

    let to_quantum = to_classical.embed_diagonal();
    let scan = necessary_scan(
        &from,
        &to_quantum,
        &crate::grids::default_t_grid(),
        &crate::grids::default_s_grid(),
        1e-9,
    )?;

    let report = SeparationReport {
        point: (a, b),
        b_star: sweep.b_star,
        t_star: sweep.t_star,
        b_infinity: sweep.b_infinity,
        max_g,
        in_hexagon,
        majorization,
        lp,
        scan_violations: scan.violations(),
        scan_worst_gap: scan.worst_gap,
    };

    if in_hexagon {
        return Err(Error::SearchFailure(format!(
            "point ({a}, {b}) is majorized by the triple"
        )));
    }
    if majorization != FeasibilityStatus::Infeasible || lp != FeasibilityStatus::Infeasible {
        return Err(Error::SearchFailure(
            "oracles failed to refuse the separating point".into(),
        ));
    }
    if report.scan_violations != 0 {
        return Err(Error::SearchFailure(format!(
            "scan found {} violations at the separating point",
            report.scan_violations
        )));
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// Operator-Jensen violation search
// ---------------------------------------------------------------------------

/// A found violation of `V^dag f(d') V >= f(V^dag d' V)`.
#[derive(Clone, Debug)]
pub struct JensenViolation {
    pub trial: usize,
    pub min_gap_eigenvalue: f64,
    /// spectrum of the sampled positive operator `d'`
    pub spectrum: Vec<f64>,
    /// the sampled isometry, columns of length `dims.1`
    pub isometry: Vec<Vec<crate::linalg::C64>>,
}

/// Samples random isometries `V` (QR of complex Gaussians) from
/// dimension `dims.0` into `dims.1` and random PSD operators `d'`,
/// hunting for an eigenvalue of `V^dag f(d') V - f(V^dag d' V)` below
/// `-1e-6`. Returns the first hit, or `None` after `trials` attempts.
///
/// Operator convex functions never produce a hit; convex functions that
/// are not operator convex (the quartic, say) produce one quickly.
pub fn jensen_violation_search(
    f: &ConvexFn,
    dims: (usize, usize),
    trials: usize,
    rng_seed: u64,
) -> Result<Option<JensenViolation>> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    let (d_small, d_large) = dims;
    if d_small == 0 || d_large < d_small {
        return Err(Error::InvalidParameter(format!(
            "need 0 < d_small <= d_large, got {dims:?}"
        )));
    }
    let mut rng: Rng = sampling::seeded(rng_seed);
    for trial in 0..trials {
        let v = sampling::random_isometry(&mut rng, d_large, d_small);
        let dprime = sampling::random_psd(&mut rng, d_large, d_large, d_large as f64);
        if let Some(gap) = jensen_gap_min_eigenvalue(f, &v, &dprime)? {
            if gap < -1e-6 {
                return Ok(Some(JensenViolation {
                    trial,
                    min_gap_eigenvalue: gap,
                    spectrum: eigh(&dprime).eigenvalues,
                    isometry: v,
                }));
            }
        }
    }
    Ok(None)
}

/// Min eigenvalue of the operator-Jensen gap for one sampled pair;
/// `None` when `f` is infinite somewhere on the sampled spectra.
pub fn jensen_gap_min_eigenvalue(
    f: &ConvexFn,
    isometry: &[Vec<crate::linalg::C64>],
    dprime: &HermitianOp,
) -> Result<Option<f64>> {
    let d_small = isometry.len();
    let g = |l: f64| f.eval(l.max(0.0));

    let f_dprime = match spectral_apply(dprime, g) {
        Ok(m) => m,
        Err(Error::InfiniteSpectrum(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    let compressed_f = crate::linalg::compress(f_dprime.mat(), isometry);
    let compressed_d = HermitianOp::hermitize(&crate::linalg::compress(dprime.mat(), isometry));
    let f_compressed = match spectral_apply(&compressed_d, g) {
        Ok(m) => m,
        Err(Error::InfiniteSpectrum(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    let mut gap = CMat::zeros(d_small);
    for i in 0..d_small {
        for j in 0..d_small {
            gap[(i, j)] = compressed_f[(i, j)] - f_compressed.mat()[(i, j)];
        }
    }
    Ok(Some(eigh(&HermitianOp::hermitize(&gap)).eigenvalues[0]))
}
