//! Classical f-divergence, its maximal quantum extension in closed form,
//! and the reverse test attaining that closed form.
//!
//! The classical divergence of a pair `(p0, p1)` under a convex `f` is
//!
//! ```text
//! D_f(p0 || p1) = sum_{x in supp p1} p1(x) f(p0(x) / p1(x))
//!               + (mass of p0 outside supp p1) * lim f(l)/l
//! ```
//!
//! The maximal quantum f-divergence of `(sigma0, sigma1)` is the smallest
//! classical divergence among all classical pairs that map onto the
//! quantum pair through one channel. For operator convex `f` it has the
//! closed form
//!
//! ```text
//! tr sigma1 f(X) + (1 - tr tilde0) * lim f(l)/l,
//! X = sigma1^{-1/2} tilde0 sigma1^{-1/2}  (on supp sigma1),
//! ```
//!
//! with `tilde0` the Schur reduction of `sigma0` relative to the support
//! of `sigma1`. [`reverse_test`] constructs a classical pair and a
//! classical-to-quantum channel that reproduce the quantum pair exactly
//! and achieve the closed-form value for *every* convex function
//! simultaneously, operator convex or not.

use crate::convexfn::ConvexFn;
use crate::ext;
use crate::feasibility::CQChannel;
use crate::linalg::{
    self, eigh, schur_tilde, select_columns, CMat, DensityOp, HermitianOp, C64,
    DEFAULT_SUPPORT_TOL,
};
use crate::{Error, Result};

/// Relative cutoff deciding which weights count as support.
pub const SUPPORT_TOL: f64 = 1e-9;

// ---------------------------------------------------------------------------
// Probability vectors and pairs
// ---------------------------------------------------------------------------

/// A probability vector over a finite alphabet.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbVector {
    weights: Vec<f64>,
}

impl ProbVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        for &w in &weights {
            if w < -1e-12 || !w.is_finite() {
                return Err(Error::InvalidProbability(format!("weight {w}")));
            }
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidProbability(format!("weights sum to {sum}")));
        }
        Ok(ProbVector { weights })
    }

    pub fn uniform(n: usize) -> Self {
        ProbVector { weights: vec![1.0 / n as f64; n] }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, x: usize) -> f64 {
        self.weights[x].max(0.0)
    }

    /// Indices with weight above the relative support cutoff.
    pub fn support(&self) -> Vec<usize> {
        let max = self.weights.iter().cloned().fold(0.0, f64::max);
        let cutoff = SUPPORT_TOL * max;
        (0..self.len()).filter(|&x| self.weights[x] > cutoff).collect()
    }

    /// Sorted-descending partial sums, the majorization fingerprint.
    pub fn descending_partial_sums(&self) -> Vec<f64> {
        let mut w: Vec<f64> = self.weights.iter().map(|&x| x.max(0.0)).collect();
        w.sort_by(|a, b| b.total_cmp(a));
        let mut acc = 0.0;
        w.iter()
            .map(|&x| {
                acc += x;
                acc
            })
            .collect()
    }
}

/// The classical family `{p_0, p_1}` on a common alphabet.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalPair {
    pub p0: ProbVector,
    pub p1: ProbVector,
}

impl ClassicalPair {
    pub fn new(p0: ProbVector, p1: ProbVector) -> Result<Self> {
        if p0.len() != p1.len() {
            return Err(Error::DimMismatch(p0.len(), p1.len()));
        }
        Ok(ClassicalPair { p0, p1 })
    }

    pub fn alphabet(&self) -> usize {
        self.p0.len()
    }

    /// Embeds the pair as a pair of diagonal density operators.
    pub fn embed_diagonal(&self) -> QuantumPair {
        let s0 = DensityOp::from_real_diag(self.p0.weights()).expect("valid probability");
        let s1 = DensityOp::from_real_diag(self.p1.weights()).expect("valid probability");
        QuantumPair::new(s0, s1).expect("same dimension")
    }
}

/// The quantum family `{sigma_0, sigma_1}` on a common dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumPair {
    pub sigma0: DensityOp,
    pub sigma1: DensityOp,
}

impl QuantumPair {
    pub fn new(sigma0: DensityOp, sigma1: DensityOp) -> Result<Self> {
        if sigma0.dim() != sigma1.dim() {
            return Err(Error::DimMismatch(sigma0.dim(), sigma1.dim()));
        }
        Ok(QuantumPair { sigma0, sigma1 })
    }

    pub fn dim(&self) -> usize {
        self.sigma0.dim()
    }
}

// ---------------------------------------------------------------------------
// Reductions: precomputed spectral data reused across many test functions
// ---------------------------------------------------------------------------

/// Classical pair reduced to the data a divergence needs: per-support
/// `(weight of p1, likelihood ratio)` cells plus the escaping p0 mass.
#[derive(Clone, Debug)]
pub struct ClassicalReduction {
    cells: Vec<(f64, f64)>,
    deficit: f64,
}

impl ClassicalReduction {
    pub fn of(pair: &ClassicalPair) -> Self {
        let support = pair.p1.support();
        let cells: Vec<(f64, f64)> = support
            .iter()
            .map(|&x| {
                let w = pair.p1.weight(x);
                (w, pair.p0.weight(x) / w)
            })
            .collect();
        let on_mass: f64 = support.iter().map(|&x| pair.p0.weight(x)).sum();
        let deficit = (1.0 - on_mass).max(0.0);
        // treat rounding residue as exact zero so a finite pair never
        // picks up an infinite slope term
        let deficit = if deficit < 1e-12 { 0.0 } else { deficit };
        ClassicalReduction { cells, deficit }
    }

    pub fn value(&self, f: &ConvexFn) -> f64 {
        let mut acc = 0.0f64;
        for &(w, ratio) in &self.cells {
            acc += ext::weighted(w, f.eval(ratio));
            if acc.is_infinite() {
                return acc;
            }
        }
        acc + ext::weighted(self.deficit, f.slope_at_infinity())
    }

    /// Mass of p0 on the support of p1.
    pub fn on_support_mass(&self) -> f64 {
        1.0 - self.deficit
    }
}

/// Quantum pair reduced through the Schur complement: the spectrum of
/// `X = sigma1^{-1/2} tilde0 sigma1^{-1/2}` restricted to `supp sigma1`,
/// the sigma1 weight carried by each eigenvector, and the trace deficit.
#[derive(Clone, Debug)]
pub struct QuantumReduction {
    /// `(weight, eigenvalue)` cells: weight is `<v_i| sigma1 |v_i>`
    cells: Vec<(f64, f64)>,
    deficit: f64,
    trace_tilde: f64,
    /// spectral data kept for the reverse-test construction
    dim: usize,
    support_cols: Vec<Vec<C64>>,
    sqrt_weights: Vec<f64>,
    x_vectors: CMat,
}

impl QuantumReduction {
    pub fn of(pair: &QuantumPair) -> Result<Self> {
        let tol = DEFAULT_SUPPORT_TOL;
        let d = pair.dim();
        let s1 = eigh(pair.sigma1.op());
        let max = s1.max_eigenvalue();
        let support: Vec<usize> = (0..d)
            .filter(|&i| s1.eigenvalues[i] > tol * max.max(0.0) && s1.eigenvalues[i] > 0.0)
            .collect();
        if support.is_empty() {
            return Err(Error::InvalidDensity("sigma1 has empty support".into()));
        }
        let cols = select_columns(&s1.vectors, &support);
        let lam: Vec<f64> = support.iter().map(|&i| s1.eigenvalues[i]).collect();

        let tilde = schur_tilde(pair.sigma0.op(), pair.sigma1.op(), tol)?;
        let trace_tilde = tilde.trace_re().clamp(0.0, 1.0);

        // X_r = D^{-1/2} Q^dag tilde Q D^{-1/2} on the support basis
        let mut xr = linalg::compress(tilde.mat(), &cols);
        let r = support.len();
        let inv_sqrt: Vec<f64> = lam.iter().map(|&l| 1.0 / l.sqrt()).collect();
        for i in 0..r {
            for j in 0..r {
                xr[(i, j)] *= inv_sqrt[i] * inv_sqrt[j];
            }
        }
        let xd = eigh(&HermitianOp::hermitize(&xr));
        let radius = xd.eigenvalues.iter().fold(0.0f64, |m, &v| m.max(v.abs()));

        // weight of sigma1 on each eigenvector of X: (V^dag D V)_jj
        let mut cells = Vec::with_capacity(r);
        for j in 0..r {
            let mut w = 0.0;
            for (i, &l) in lam.iter().enumerate() {
                w += l * xd.vectors[(i, j)].norm_sqr();
            }
            let eig = if xd.eigenvalues[j] < 0.0 && xd.eigenvalues[j] > -1e-9 * radius.max(1.0) {
                0.0
            } else {
                xd.eigenvalues[j]
            };
            cells.push((w, eig));
        }

        let deficit_raw = 1.0 - trace_tilde;
        let deficit = if deficit_raw < 1e-12 { 0.0 } else { deficit_raw };
        Ok(QuantumReduction {
            cells,
            deficit,
            trace_tilde,
            dim: d,
            support_cols: cols,
            sqrt_weights: lam.iter().map(|&l| l.sqrt()).collect(),
            x_vectors: xd.vectors,
        })
    }

    /// The closed-form value for a test function. Meaningful as the
    /// maximal quantum f-divergence only when `f` is operator convex;
    /// for arbitrary convex `f` it is the value attained by the
    /// reverse-test pair.
    pub fn value(&self, f: &ConvexFn) -> f64 {
        let mut acc = 0.0f64;
        for &(w, x) in &self.cells {
            acc += ext::weighted(w, f.eval(x.max(0.0)));
            if acc.is_infinite() {
                return acc;
            }
        }
        acc + ext::weighted(self.deficit, f.slope_at_infinity())
    }

    pub fn trace_tilde(&self) -> f64 {
        self.trace_tilde
    }

    pub fn deficit(&self) -> f64 {
        self.deficit
    }
}

// ---------------------------------------------------------------------------
// Divergences
// ---------------------------------------------------------------------------

/// Classical f-divergence `D_f(p0 || p1)`; extended-real valued.
pub fn f_divergence(f: &ConvexFn, pair: &ClassicalPair) -> f64 {
    ClassicalReduction::of(pair).value(f)
}

/// Maximal quantum f-divergence via the closed formula.
///
/// Requires `f` flagged operator convex: the closed form is only a
/// divergence under that hypothesis.
pub fn max_f_divergence(f: &ConvexFn, pair: &QuantumPair) -> Result<f64> {
    if !f.operator_convex() {
        return Err(Error::NotOperatorConvex(f.label().to_string()));
    }
    Ok(QuantumReduction::of(pair)?.value(f))
}

/// `D^max` for the power family member `-l^s`; approaches
/// `-tr tilde0` as `s` tends up to 1.
pub fn power_limit_check(pair: &QuantumPair, s: f64) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidParameter(format!("s = {s} not in (0, 1)")));
    }
    max_f_divergence(&crate::convexfn::power_family(s)?, pair)
}

/// Witness-functional divergence
/// `D_W(p0 || p1) = sum_x r_max(p0(x) W0 + p1(x) W1)`.
pub fn dw_classical(w0: &HermitianOp, w1: &HermitianOp, pair: &ClassicalPair) -> Result<f64> {
    if w0.dim() != w1.dim() {
        return Err(Error::DimMismatch(w0.dim(), w1.dim()));
    }
    let mut acc = 0.0;
    for x in 0..pair.alphabet() {
        let m = w0.scale(pair.p0.weight(x)).add(&w1.scale(pair.p1.weight(x)));
        acc += eigh(&m).max_eigenvalue();
    }
    Ok(acc)
}

// ---------------------------------------------------------------------------
// Reverse test
// ---------------------------------------------------------------------------

/// A classical pair plus a classical-to-quantum channel generating a
/// given quantum pair. The optimal one returned by [`reverse_test`]
/// attains the closed-form divergence for all convex functions at once.
#[derive(Clone, Debug)]
pub struct ReverseTest {
    pub q: ClassicalPair,
    pub channel: CQChannel,
}

/// Relative tolerance for merging near-degenerate eigenvalues of `X`
/// into a single spectral projector.
pub const EIGENVALUE_MERGE_TOL: f64 = 1e-9;

/// Builds the optimal reverse test of a quantum pair.
///
/// The output alphabet is one symbol per distinct eigenvalue of `X`,
/// plus a residue symbol carrying `sigma0 - tilde0` when the trace
/// deficit is positive. The channel maps symbol `i` to
/// `sigma1^{1/2} P_i sigma1^{1/2} / q1(i)` with `P_i` the spectral
/// projector, and the residue symbol to `(sigma0 - tilde0) / deficit`.
pub fn reverse_test(pair: &QuantumPair) -> Result<ReverseTest> {
    let red = QuantumReduction::of(pair)?;
    let r = red.cells.len();
    let radius = red.cells.iter().fold(0.0f64, |m, &(_, x)| m.max(x.abs()));

    // group indices by eigenvalue within the merge tolerance
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&a, &b| red.cells[a].1.total_cmp(&red.cells[b].1));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for &j in &order {
        match groups.last_mut() {
            Some(g)
                if (red.cells[j].1 - red.cells[g[0]].1).abs()
                    <= EIGENVALUE_MERGE_TOL * radius.max(1.0) =>
            {
                g.push(j)
            }
            _ => groups.push(vec![j]),
        }
    }

    let d = red.dim;
    let mut q0 = Vec::new();
    let mut q1 = Vec::new();
    let mut states = Vec::new();
    for g in &groups {
        let weight: f64 = g.iter().map(|&j| red.cells[j].0).sum();
        let eig: f64 = g.iter().map(|&j| red.cells[j].1 * red.cells[j].0).sum::<f64>() / weight;
        // state = S^{1/2} P S^{1/2} / weight with P = sum_j v_j v_j^dag,
        // assembled in the support basis then embedded
        let rdim = red.support_cols.len();
        let mut block = CMat::zeros(rdim);
        for &j in g {
            for a in 0..rdim {
                let va = red.x_vectors[(a, j)];
                for b in 0..rdim {
                    block[(a, b)] += va * red.x_vectors[(b, j)].conj();
                }
            }
        }
        for a in 0..rdim {
            for b in 0..rdim {
                block[(a, b)] *= red.sqrt_weights[a] * red.sqrt_weights[b] / weight;
            }
        }
        let state = HermitianOp::hermitize(&linalg::embed(&block, &red.support_cols, d));
        states.push(DensityOp::new(state)?);
        q1.push(weight);
        q0.push(eig.max(0.0) * weight);
    }

    if red.deficit > 0.0 {
        let tilde = schur_tilde(pair.sigma0.op(), pair.sigma1.op(), DEFAULT_SUPPORT_TOL)?;
        let residue = pair.sigma0.op().sub(&tilde).scale(1.0 / red.deficit);
        let clipped = linalg::psd_project(&residue);
        states.push(DensityOp::new(clipped.scale(1.0 / clipped.trace_re()))?);
        q1.push(0.0);
        q0.push(red.deficit);
    }

    // normalize away rounding drift so the pair passes validation
    let s0: f64 = q0.iter().sum();
    let q0: Vec<f64> = q0.iter().map(|&v| v / s0).collect();
    let s1: f64 = q1.iter().sum();
    let q1: Vec<f64> = q1.iter().map(|&v| v / s1).collect();

    Ok(ReverseTest {
        q: ClassicalPair::new(ProbVector::new(q0)?, ProbVector::new(q1)?)?,
        channel: CQChannel::new(states)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convexfn::{power_family, quartic_fn, resolvent_family, square_fn, witness_fn};
    use crate::sampling;

    fn pair_diag(p0: &[f64], p1: &[f64]) -> ClassicalPair {
        ClassicalPair::new(ProbVector::new(p0.to_vec()).unwrap(), ProbVector::new(p1.to_vec()).unwrap())
            .unwrap()
    }

    fn qpair_diag(s0: &[f64], s1: &[f64]) -> QuantumPair {
        QuantumPair::new(
            DensityOp::from_real_diag(s0).unwrap(),
            DensityOp::from_real_diag(s1).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn divergence_of_identical_pair_is_f_of_one() {
        let p = pair_diag(&[0.2, 0.5, 0.3], &[0.2, 0.5, 0.3]);
        for f in [resolvent_family(1.0).unwrap(), square_fn(), power_family(0.5).unwrap()] {
            assert!((f_divergence(&f, &p) - f.eval(1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn power_one_gives_minus_one_classically() {
        let f1 = power_family(1.0).unwrap();
        let p = pair_diag(&[0.2, 0.8, 0.0], &[0.0, 0.5, 0.5]);
        assert!((f_divergence(&f1, &p) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn entropy_style_hand_value() {
        // f(l) = l ln l, p0 = (1,0), p1 = (1/2,1/2) -> ln 2
        let f = ConvexFn::new("xlnx", |l: f64| if l == 0.0 { 0.0 } else { l * l.ln() }, f64::INFINITY, false);
        let p = pair_diag(&[1.0, 0.0], &[0.5, 0.5]);
        assert!((f_divergence(&f, &p) - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn max_divergence_commuting_hand_value() {
        let q = qpair_diag(&[0.7, 0.3], &[0.5, 0.5]);
        let f = resolvent_family(1.0).unwrap();
        let v = max_f_divergence(&f, &q).unwrap();
        assert!((v - (0.5 / 2.4 + 0.5 / 1.6)).abs() < 1e-12, "{v}");
    }

    #[test]
    fn max_divergence_rejects_non_operator_convex() {
        let q = qpair_diag(&[0.7, 0.3], &[0.5, 0.5]);
        assert!(matches!(
            max_f_divergence(&quartic_fn(), &q),
            Err(Error::NotOperatorConvex(_))
        ));
    }

    #[test]
    fn max_divergence_pure_target_closed_form() {
        // pure sigma1: D^max = f(gamma) + (1 - gamma) * slope
        let mut rng = sampling::seeded(31);
        for _ in 0..20 {
            let s1 = sampling::random_pure_density(&mut rng, 3);
            let s0 = sampling::random_density(&mut rng, 3, 3);
            let pair = QuantumPair::new(s0, s1).unwrap();
            let red = QuantumReduction::of(&pair).unwrap();
            let gamma = red.trace_tilde();
            for f in [resolvent_family(0.7).unwrap(), power_family(0.6).unwrap()] {
                let direct = max_f_divergence(&f, &pair).unwrap();
                let closed = f.eval(gamma) + (1.0 - gamma) * f.slope_at_infinity();
                assert!((direct - closed).abs() < 1e-9, "{direct} vs {closed}");
            }
        }
    }

    #[test]
    fn power_one_gives_minus_one_quantum() {
        let mut rng = sampling::seeded(32);
        let f1 = power_family(1.0).unwrap();
        for _ in 0..20 {
            let pair = sampling::random_quantum_pair(&mut rng, 3);
            let v = max_f_divergence(&f1, &pair).unwrap();
            assert!((v + 1.0).abs() < 1e-12, "{v}");
        }
        // rank-deficient sigma1 exercises the deficit term
        for _ in 0..20 {
            let s0 = sampling::random_density(&mut rng, 3, 3);
            let s1 = sampling::random_density(&mut rng, 3, 2);
            let pair = QuantumPair::new(s0, s1).unwrap();
            let v = max_f_divergence(&f1, &pair).unwrap();
            assert!((v + 1.0).abs() < 1e-12, "{v}");
        }
    }

    #[test]
    fn power_limit_examples() {
        // commuting example: tr tilde0 = 1
        let q = qpair_diag(&[0.7, 0.3], &[0.5, 0.5]);
        let v = power_limit_check(&q, 0.999).unwrap();
        assert!((v + 1.0).abs() < 1e-2, "{v}");

        // pure sigma1 = diag(1,0), sigma0 = diag(0.6, 0.4): limit -0.6
        let q2 = qpair_diag(&[0.6, 0.4], &[1.0, 0.0]);
        let v2 = power_limit_check(&q2, 0.999).unwrap();
        assert!((v2 + 0.6f64.powf(0.999)).abs() < 1e-12);
        assert!((v2 + 0.6).abs() < 1e-2);

        // identical states: value is f(1) = -1 for every s
        let q3 = qpair_diag(&[0.5, 0.5], &[0.5, 0.5]);
        let v3 = power_limit_check(&q3, 0.5).unwrap();
        assert!((v3 + 1.0).abs() < 1e-12);
    }

    #[test]
    fn commutative_reduction_matches_classical() {
        let mut rng = sampling::seeded(33);
        for trial in 0..100 {
            let n = 2 + trial % 4;
            let p = sampling::random_classical_pair(&mut rng, n);
            let q = p.embed_diagonal();
            for f in [
                resolvent_family(0.0).unwrap(),
                resolvent_family(1.0).unwrap(),
                power_family(0.7).unwrap(),
                square_fn(),
            ] {
                let c = f_divergence(&f, &p);
                let m = max_f_divergence(&f, &q).unwrap();
                assert!(ext::approx_eq(c, m, 1e-9), "{}: {c} vs {m}", f.label());
            }
        }
    }

    #[test]
    fn dw_matches_witness_divergence() {
        let one = HermitianOp::identity(1);
        let p = pair_diag(&[0.7, 0.3], &[0.5, 0.5]);
        assert!((dw_classical(&one, &one, &p).unwrap() - 2.0).abs() < 1e-12);

        let w0 = HermitianOp::from_real_diag(&[1.0, 0.0]);
        let w1 = HermitianOp::from_real_diag(&[0.0, 1.0]);
        let v = dw_classical(&w0, &w1, &p).unwrap();
        assert!((v - 1.2).abs() < 1e-12);

        let mut rng = sampling::seeded(34);
        for _ in 0..100 {
            let w0 = sampling::random_hermitian(&mut rng, 3);
            let w1 = sampling::random_hermitian(&mut rng, 3);
            let pair = sampling::random_classical_pair(&mut rng, 4);
            let direct = dw_classical(&w0, &w1, &pair).unwrap();
            let via_fn = f_divergence(&witness_fn(&w0, &w1).unwrap(), &pair);
            assert!((direct - via_fn).abs() < 1e-9);
        }
    }

    #[test]
    fn reverse_test_commuting_full_support() {
        let q = qpair_diag(&[0.7, 0.3], &[0.5, 0.5]);
        let rt = reverse_test(&q).unwrap();
        assert_eq!(rt.q.alphabet(), 2);
        let mut q0 = rt.q.p0.weights().to_vec();
        q0.sort_by(f64::total_cmp);
        assert!((q0[0] - 0.3).abs() < 1e-12 && (q0[1] - 0.7).abs() < 1e-12);
        assert!(rt.q.p1.weights().iter().all(|&w| (w - 0.5).abs() < 1e-12));
        verify_reverse_test(&q, &rt);
    }

    #[test]
    fn reverse_test_identical_states_single_symbol() {
        let mut rng = sampling::seeded(35);
        let s = sampling::random_density(&mut rng, 3, 3);
        let q = QuantumPair::new(s.clone(), s.clone()).unwrap();
        let rt = reverse_test(&q).unwrap();
        assert_eq!(rt.q.alphabet(), 1);
        assert!(rt.channel.states()[0].mat().sub(s.mat()).fro_norm() < 1e-9);
    }

    #[test]
    fn reverse_test_pure_sigma1_structure() {
        let q = qpair_diag(&[0.6, 0.4], &[1.0, 0.0]);
        let rt = reverse_test(&q).unwrap();
        assert_eq!(rt.q.alphabet(), 2);
        // symbol order: X-spectrum symbol then residue
        assert!((rt.q.p1.weight(0) - 1.0).abs() < 1e-12);
        assert!(rt.q.p1.weight(1).abs() < 1e-15);
        assert!((rt.q.p0.weight(0) - 0.6).abs() < 1e-12);
        assert!((rt.q.p0.weight(1) - 0.4).abs() < 1e-12);
        let expect_residue = CMat::from_real_diag(&[0.0, 1.0]);
        assert!(rt.channel.states()[1].mat().sub(&expect_residue).fro_norm() < 1e-9);
        verify_reverse_test(&q, &rt);
    }

    fn verify_reverse_test(pair: &QuantumPair, rt: &ReverseTest) {
        // channel reproduces the pair
        let out0 = rt.channel.apply(&rt.q.p0);
        let out1 = rt.channel.apply(&rt.q.p1);
        assert!(out0.mat().sub(pair.sigma0.mat()).fro_norm() < 1e-9);
        assert!(out1.mat().sub(pair.sigma1.mat()).fro_norm() < 1e-9);
        // classical divergence of q equals the closed-form value for
        // convex functions of both kinds
        let red = QuantumReduction::of(pair).unwrap();
        for f in [
            resolvent_family(0.3).unwrap(),
            power_family(0.5).unwrap(),
            square_fn(),
            quartic_fn(),
        ] {
            let lhs = f_divergence(&f, &rt.q);
            let rhs = red.value(&f);
            // absolute at desk scale, relative once the values themselves
            // outgrow f64 resolution at 1e-9
            let tol = 1e-9 * lhs.abs().max(rhs.abs()).max(1.0);
            assert!(ext::approx_eq(lhs, rhs, tol), "{}: {lhs} vs {rhs}", f.label());
        }
    }

    #[test]
    fn reverse_test_random_targets() {
        let mut rng = sampling::seeded(36);
        for trial in 0..60 {
            let dim = 2 + trial % 3;
            let rank1 = 1 + trial % dim;
            let s0 = sampling::random_density(&mut rng, dim, dim);
            let s1 = sampling::random_density(&mut rng, dim, rank1);
            let pair = QuantumPair::new(s0, s1).unwrap();
            let rt = reverse_test(&pair).unwrap();
            verify_reverse_test(&pair, &rt);
        }
    }

    #[test]
    fn monotone_under_random_channels() {
        let mut rng = sampling::seeded(37);
        let fns = [
            resolvent_family(0.0).unwrap(),
            resolvent_family(1.0).unwrap(),
            power_family(0.5).unwrap(),
            power_family(0.9).unwrap(),
            square_fn(),
        ];
        for _ in 0..40 {
            let pair = sampling::random_quantum_pair(&mut rng, 3);
            let ch = sampling::StinespringChannel::random(&mut rng, 3, 2, 2);
            let mapped = QuantumPair::new(
                ch.apply_density(&pair.sigma0),
                ch.apply_density(&pair.sigma1),
            )
            .unwrap();
            for f in &fns {
                let before = max_f_divergence(f, &pair).unwrap();
                let after = max_f_divergence(f, &mapped).unwrap();
                assert!(
                    ext::gap(after, before) <= 1e-8,
                    "{} increased: {before} -> {after}",
                    f.label()
                );
            }
        }
    }

    #[test]
    fn maximality_over_generating_pairs() {
        let mut rng = sampling::seeded(38);
        let fns = [
            resolvent_family(0.5).unwrap(),
            power_family(0.7).unwrap(),
            square_fn(),
        ];
        for _ in 0..40 {
            let q = sampling::random_classical_pair(&mut rng, 4);
            let ch = sampling::random_cq_channel(&mut rng, 4, 3);
            let pair = QuantumPair::new(
                DensityOp::new(ch.apply(&q.p0)).unwrap(),
                DensityOp::new(ch.apply(&q.p1)).unwrap(),
            )
            .unwrap();
            for f in &fns {
                let classical = f_divergence(f, &q);
                let quantum = max_f_divergence(f, &pair).unwrap();
                assert!(
                    ext::gap(classical, quantum) >= -1e-8,
                    "{}: classical {classical} < quantum {quantum}",
                    f.label()
                );
            }
        }
    }

    #[test]
    fn prob_vector_validation() {
        assert!(ProbVector::new(vec![0.5, 0.5]).is_ok());
        assert!(ProbVector::new(vec![0.6, 0.5]).is_err());
        assert!(ProbVector::new(vec![1.5, -0.5]).is_err());
        assert!(ClassicalPair::new(
            ProbVector::new(vec![1.0]).unwrap(),
            ProbVector::new(vec![0.5, 0.5]).unwrap()
        )
        .is_err());
    }
}
