//! Dense Hermitian linear algebra on small complex matrices.
//!
//! Everything here is sized for desk-scale problems (dimension <= 32):
//! the eigensolver is a self-contained cyclic Jacobi iteration, support
//! projectors and pseudo-inverses go through the spectral decomposition,
//! and the Schur complement `schur_tilde` reduces one positive operator
//! relative to the support of another.
//!
//! Support cutoffs are relative: a `tol` parameter keeps eigenvalues
//! strictly above `tol * lambda_max`. The default is
//! [`DEFAULT_SUPPORT_TOL`].

use num_complex::Complex64;

use crate::{Error, Result};

/// Complex scalar used throughout: a pair of 64-bit floats.
pub type C64 = Complex64;

/// Relative support / pseudo-inverse cutoff used when no explicit
/// tolerance is supplied.
pub const DEFAULT_SUPPORT_TOL: f64 = 1e-9;

/// Hermitian symmetry tolerance enforced on construction.
pub const HERMITIAN_TOL: f64 = 1e-12;

const JACOBI_OFF_TOL: f64 = 1e-13;
const JACOBI_MAX_SWEEPS: usize = 64;

// ---------------------------------------------------------------------------
// Dense square complex matrix
// ---------------------------------------------------------------------------

/// Dense square complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CMat {
    dim: usize,
    data: Vec<C64>,
}

impl CMat {
    pub fn zeros(dim: usize) -> Self {
        CMat { dim, data: vec![C64::new(0.0, 0.0); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let dim = rows.len();
        let mut m = Self::zeros(dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::DimMismatch(row.len(), dim));
            }
            for (j, &v) in row.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        Ok(m)
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(v, 0.0);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn adjoint(&self) -> CMat {
        let mut out = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn add(&self, other: &CMat) -> CMat {
        assert_eq!(self.dim, other.dim);
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(other.data.iter()) {
            *a += *b;
        }
        out
    }

    pub fn sub(&self, other: &CMat) -> CMat {
        assert_eq!(self.dim, other.dim);
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(other.data.iter()) {
            *a -= *b;
        }
        out
    }

    pub fn scale(&self, s: f64) -> CMat {
        let mut out = self.clone();
        for a in out.data.iter_mut() {
            *a *= s;
        }
        out
    }

    pub fn matmul(&self, other: &CMat) -> CMat {
        assert_eq!(self.dim, other.dim);
        let d = self.dim;
        let mut out = Self::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let a = self[(i, k)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..d {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn fro_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest elementwise deviation from `conj(transpose)`.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in i..self.dim {
                let d = (self[(i, j)] - self[(j, i)].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// `(M + M^dagger) / 2`.
    pub fn symmetrized(&self) -> CMat {
        let mut out = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                out[(i, j)] = (self[(i, j)] + self[(j, i)].conj()) * 0.5;
            }
        }
        out
    }
}

impl std::ops::Index<(usize, usize)> for CMat {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

// ---------------------------------------------------------------------------
// Domain newtypes
// ---------------------------------------------------------------------------

/// A Hermitian matrix, validated on construction.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOp(CMat);

impl HermitianOp {
    /// Wraps a matrix after checking Hermitian symmetry elementwise.
    pub fn new(m: CMat) -> Result<Self> {
        let defect = m.hermitian_defect();
        if defect > HERMITIAN_TOL {
            return Err(Error::NotHermitian(defect));
        }
        // Store the exactly symmetrized matrix so downstream spectral
        // calculus never sees the residual asymmetry.
        Ok(HermitianOp(m.symmetrized()))
    }

    /// Symmetrizes unconditionally. For internal numeric paths whose
    /// result is Hermitian by algebra but carries rounding noise.
    pub fn hermitize(m: &CMat) -> Self {
        HermitianOp(m.symmetrized())
    }

    pub fn zeros(dim: usize) -> Self {
        HermitianOp(CMat::zeros(dim))
    }

    pub fn identity(dim: usize) -> Self {
        HermitianOp(CMat::identity(dim))
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        HermitianOp(CMat::from_real_diag(diag))
    }

    pub fn mat(&self) -> &CMat {
        &self.0
    }

    pub fn into_mat(self) -> CMat {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn trace_re(&self) -> f64 {
        self.0.trace().re
    }

    pub fn add(&self, other: &HermitianOp) -> HermitianOp {
        HermitianOp(self.0.add(&other.0))
    }

    pub fn sub(&self, other: &HermitianOp) -> HermitianOp {
        HermitianOp(self.0.sub(&other.0))
    }

    pub fn scale(&self, s: f64) -> HermitianOp {
        HermitianOp(self.0.scale(s))
    }

    /// Real inner product `tr(A B)` (real because both are Hermitian).
    pub fn inner(&self, other: &HermitianOp) -> f64 {
        self.0.matmul(&other.0).trace().re
    }
}

/// A density operator: Hermitian, positive semidefinite, unit trace.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOp(HermitianOp);

impl DensityOp {
    pub const MIN_EIG_TOL: f64 = 1e-10;
    pub const TRACE_TOL: f64 = 1e-9;

    pub fn new(op: HermitianOp) -> Result<Self> {
        let tr = op.mat().trace();
        if (tr.re - 1.0).abs() > Self::TRACE_TOL {
            return Err(Error::InvalidDensity(format!("trace {} != 1", tr.re)));
        }
        if tr.im.abs() > 1e-12 {
            return Err(Error::InvalidDensity(format!("trace has imaginary part {}", tr.im)));
        }
        let min_eig = eigh(&op).eigenvalues[0];
        if min_eig < -Self::MIN_EIG_TOL {
            return Err(Error::InvalidDensity(format!("min eigenvalue {min_eig:.3e}")));
        }
        Ok(DensityOp(op))
    }

    pub fn from_real_diag(diag: &[f64]) -> Result<Self> {
        Self::new(HermitianOp::from_real_diag(diag))
    }

    pub fn op(&self) -> &HermitianOp {
        &self.0
    }

    pub fn mat(&self) -> &CMat {
        self.0.mat()
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Eigenvalues are ascending; `vectors` holds the corresponding
/// orthonormal eigenvectors as columns.
#[derive(Clone, Debug)]
pub struct SpectralDecomp {
    pub eigenvalues: Vec<f64>,
    pub vectors: CMat,
}

impl SpectralDecomp {
    /// `U diag(g(lambda)) U^dagger`.
    pub fn assemble(&self, g: impl Fn(f64) -> f64) -> CMat {
        let d = self.vectors.dim();
        let mut out = CMat::zeros(d);
        for (k, &lam) in self.eigenvalues.iter().enumerate() {
            let glam = g(lam);
            if glam == 0.0 {
                continue;
            }
            for i in 0..d {
                let ui = self.vectors[(i, k)];
                for j in 0..d {
                    out[(i, j)] += ui * self.vectors[(j, k)].conj() * glam;
                }
            }
        }
        out
    }

    pub fn max_eigenvalue(&self) -> f64 {
        *self.eigenvalues.last().expect("empty decomposition")
    }
}

// ---------------------------------------------------------------------------
// Jacobi eigensolver
// ---------------------------------------------------------------------------

fn off_diag_norm(m: &CMat) -> f64 {
    let d = m.dim();
    let mut s = 0.0;
    for i in 0..d {
        for j in 0..d {
            if i != j {
                s += m[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Eigendecomposition by cyclic Jacobi rotations.
///
/// Each pivot first removes the phase of the off-diagonal entry, then
/// applies the classical symmetric rotation; sweeps stop once the
/// off-diagonal Frobenius mass falls below `1e-13` relative to the
/// matrix scale.
pub fn eigh(m: &HermitianOp) -> SpectralDecomp {
    let d = m.dim();
    let mut a = m.mat().clone();
    let mut u = CMat::identity(d);
    let scale = a.fro_norm().max(1e-300);

    for _sweep in 0..JACOBI_MAX_SWEEPS {
        if off_diag_norm(&a) <= JACOBI_OFF_TOL * scale {
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                let apq = a[(p, q)];
                let b = apq.norm();
                if b == 0.0 {
                    continue;
                }
                let w = apq / b; // unit phase
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let tau = (aqq - app) / (2.0 * b);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                // Combined unitary J restricted to {p,q}:
                //   J_pp = c, J_pq = s, J_qp = -conj(w) s, J_qq = conj(w) c.
                let jpp = C64::new(c, 0.0);
                let jpq = C64::new(s, 0.0);
                let jqp = -w.conj() * s;
                let jqq = w.conj() * c;

                // A <- A J (columns p, q)
                for i in 0..d {
                    let aip = a[(i, p)];
                    let aiq = a[(i, q)];
                    a[(i, p)] = aip * jpp + aiq * jqp;
                    a[(i, q)] = aip * jpq + aiq * jqq;
                }
                // A <- J^dagger A (rows p, q)
                for j in 0..d {
                    let apj = a[(p, j)];
                    let aqj = a[(q, j)];
                    a[(p, j)] = jpp.conj() * apj + jqp.conj() * aqj;
                    a[(q, j)] = jpq.conj() * apj + jqq.conj() * aqj;
                }
                // U <- U J
                for i in 0..d {
                    let uip = u[(i, p)];
                    let uiq = u[(i, q)];
                    u[(i, p)] = uip * jpp + uiq * jqp;
                    u[(i, q)] = uip * jpq + uiq * jqq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..d).collect();
    let eig_raw: Vec<f64> = (0..d).map(|i| a[(i, i)].re).collect();
    order.sort_by(|&i, &j| eig_raw[i].total_cmp(&eig_raw[j]));

    let mut vectors = CMat::zeros(d);
    let mut eigenvalues = Vec::with_capacity(d);
    for (k, &idx) in order.iter().enumerate() {
        eigenvalues.push(eig_raw[idx]);
        for i in 0..d {
            vectors[(i, k)] = u[(i, idx)];
        }
    }
    SpectralDecomp { eigenvalues, vectors }
}

// ---------------------------------------------------------------------------
// Spectral calculus
// ---------------------------------------------------------------------------

/// Applies a scalar function to a Hermitian matrix through its spectrum.
///
/// A NaN value of `g` at an eigenvalue is a domain error; an infinite
/// value is signalled as [`Error::InfiniteSpectrum`] so the caller can
/// fall back to eigenvalue-level extended arithmetic.
pub fn spectral_apply(m: &HermitianOp, g: impl Fn(f64) -> f64) -> Result<HermitianOp> {
    let decomp = eigh(m);
    for &lam in &decomp.eigenvalues {
        let v = g(lam);
        if v.is_nan() {
            return Err(Error::Domain(lam));
        }
        if v.is_infinite() {
            return Err(Error::InfiniteSpectrum(lam));
        }
    }
    Ok(HermitianOp::hermitize(&decomp.assemble(g)))
}

fn psd_gate(decomp: &SpectralDecomp, tol: f64) -> Result<()> {
    let min = decomp.eigenvalues[0];
    let max = decomp.max_eigenvalue();
    if min < -tol * max.max(1.0) {
        return Err(Error::NotPsd(min));
    }
    Ok(())
}

/// Orthogonal projector onto the span of eigenvectors with eigenvalue
/// above `tol * lambda_max`.
pub fn support_projector(m: &HermitianOp, tol: f64) -> Result<HermitianOp> {
    let decomp = eigh(m);
    psd_gate(&decomp, tol)?;
    let cutoff = support_cutoff(&decomp, tol);
    Ok(HermitianOp::hermitize(
        &decomp.assemble(|lam| if lam > cutoff { 1.0 } else { 0.0 }),
    ))
}

fn support_cutoff(decomp: &SpectralDecomp, tol: f64) -> f64 {
    let max = decomp.max_eigenvalue();
    if max <= 0.0 {
        f64::INFINITY // nothing counts as support
    } else {
        tol * max
    }
}

/// Moore-Penrose pseudo-inverse of a PSD matrix via spectral calculus:
/// eigenvalues above the relative cutoff are inverted, the rest zeroed.
pub fn pinv(m: &HermitianOp, tol: f64) -> Result<HermitianOp> {
    let decomp = eigh(m);
    psd_gate(&decomp, tol)?;
    let cutoff = support_cutoff(&decomp, tol);
    Ok(HermitianOp::hermitize(
        &decomp.assemble(|lam| if lam > cutoff { 1.0 / lam } else { 0.0 }),
    ))
}

/// Nearest PSD matrix in Frobenius norm: negative eigenvalues clipped.
pub fn psd_project(m: &HermitianOp) -> HermitianOp {
    let decomp = eigh(m);
    HermitianOp::hermitize(&decomp.assemble(|lam| lam.max(0.0)))
}

/// Schur-complement reduction of `sigma0` relative to the support of
/// `sigma1`.
///
/// With `pi` the support projector of `sigma1` and blocks
/// `s11 = pi sigma0 pi`, `s12 = pi sigma0 (1-pi)`, `s21 = s12^dagger`,
/// `s22 = (1-pi) sigma0 (1-pi)`, the result is
/// `s11 - s12 pinv(s22) s21`. The pseudo-inverse is exact here: for PSD
/// `sigma0` the column space of `s21` lies inside the support of `s22`.
///
/// Assembled as a Gram matrix: with `G = sigma0^{1/2}`, `A = pi G`,
/// `B = (1-pi) G` and `P` the projector onto the genuine range of
/// `B^dagger`, the same value is `A (1 - P) A^dagger`. That form keeps
/// both the result and the gap `sigma0 - result` positive semidefinite
/// down at rounding scale, where the block form loses several digits to
/// the inverted near-null eigenvalues of `s22`.
pub fn schur_tilde(sigma0: &HermitianOp, sigma1: &HermitianOp, tol: f64) -> Result<HermitianOp> {
    if sigma0.dim() != sigma1.dim() {
        return Err(Error::DimMismatch(sigma0.dim(), sigma1.dim()));
    }
    let d = sigma0.dim();
    let dec0 = eigh(sigma0);
    psd_gate(&dec0, tol)?;
    let pi = support_projector(sigma1, tol)?.into_mat();
    let one_minus_pi = CMat::identity(d).sub(&pi);

    let g = dec0.assemble(|lam| lam.max(0.0).sqrt());
    let a = pi.matmul(&g);
    let b = one_minus_pi.matmul(&g);

    // projector onto range(B^dagger), cut at the scale of sigma0 so the
    // rounding-level null directions of B never enter
    let btb = HermitianOp::hermitize(&b.adjoint().matmul(&b));
    let cutoff = tol * dec0.max_eigenvalue().max(0.0);
    let btb_dec = eigh(&btb);
    let p = btb_dec.assemble(|lam| if lam > cutoff { 1.0 } else { 0.0 });

    let reduced = a.sub(&a.matmul(&p));
    Ok(HermitianOp::hermitize(&reduced.matmul(&a.adjoint())))
}

// ---------------------------------------------------------------------------
// Basis compression helpers
// ---------------------------------------------------------------------------

/// Columns of `vectors` restricted to `indices`, as a `dim x k` array of
/// column vectors.
pub(crate) fn select_columns(vectors: &CMat, indices: &[usize]) -> Vec<Vec<C64>> {
    let d = vectors.dim();
    indices
        .iter()
        .map(|&k| (0..d).map(|i| vectors[(i, k)]).collect())
        .collect()
}

/// `Q^dagger M Q` for an isometry given by columns `q` (each length d).
pub(crate) fn compress(m: &CMat, q: &[Vec<C64>]) -> CMat {
    let d = m.dim();
    let r = q.len();
    // tmp = M Q  (d x r)
    let mut tmp = vec![vec![C64::new(0.0, 0.0); r]; d];
    for i in 0..d {
        for (c, col) in q.iter().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..d {
                acc += m[(i, k)] * col[k];
            }
            tmp[i][c] = acc;
        }
    }
    let mut out = CMat::zeros(r);
    for (rr, col) in q.iter().enumerate() {
        for c in 0..r {
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..d {
                acc += col[i].conj() * tmp[i][c];
            }
            out[(rr, c)] = acc;
        }
    }
    out
}

/// `Q M Q^dagger` embedding an `r x r` matrix back into dimension d.
pub(crate) fn embed(m: &CMat, q: &[Vec<C64>], dim: usize) -> CMat {
    let r = q.len();
    let mut out = CMat::zeros(dim);
    for a in 0..r {
        for b in 0..r {
            let v = m[(a, b)];
            if v == C64::new(0.0, 0.0) {
                continue;
            }
            for i in 0..dim {
                let qa = q[a][i];
                for j in 0..dim {
                    out[(i, j)] += qa * v * q[b][j].conj();
                }
            }
        }
    }
    out
}

/// Joint eigenbasis of two commuting Hermitian matrices.
///
/// Diagonalizes `b`, groups its eigenvalues into clusters, and
/// diagonalizes the compression of `a` inside each cluster. Returns the
/// joint basis (columns) with the two diagonals aligned to it, or `None`
/// when the cross-cluster blocks of `a` show the pair does not commute
/// within `tol` (relative to the scale of `a`).
pub fn commuting_eigenbasis(
    a: &HermitianOp,
    b: &HermitianOp,
    tol: f64,
) -> Option<(CMat, Vec<f64>, Vec<f64>)> {
    if a.dim() != b.dim() {
        return None;
    }
    let d = a.dim();
    let db = eigh(b);
    let scale_a = a.mat().fro_norm().max(1e-300);

    // cluster indices of near-equal eigenvalues of b
    let scale_b = db.eigenvalues.iter().fold(0.0f64, |m, &v| m.max(v.abs())).max(1e-300);
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for i in 0..d {
        match clusters.last_mut() {
            Some(c) if (db.eigenvalues[i] - db.eigenvalues[c[0]]).abs() <= 1e-9 * scale_b => {
                c.push(i)
            }
            _ => clusters.push(vec![i]),
        }
    }

    // rotate a into b's eigenbasis
    let cols = select_columns(&db.vectors, &(0..d).collect::<Vec<_>>());
    let a_rot = compress(a.mat(), &cols);

    // cross-cluster blocks must vanish
    for (ci, cl_i) in clusters.iter().enumerate() {
        for cl_j in clusters.iter().skip(ci + 1) {
            for &i in cl_i {
                for &j in cl_j {
                    if a_rot[(i, j)].norm() > tol * scale_a {
                        return None;
                    }
                }
            }
        }
    }

    // diagonalize a inside each cluster and rotate the basis with it
    let mut basis = db.vectors.clone();
    let mut diag_a = vec![0.0; d];
    let mut diag_b = vec![0.0; d];
    for cl in &clusters {
        let k = cl.len();
        let mut block = CMat::zeros(k);
        for (ii, &i) in cl.iter().enumerate() {
            for (jj, &j) in cl.iter().enumerate() {
                block[(ii, jj)] = a_rot[(i, j)];
            }
        }
        let sub = eigh(&HermitianOp::hermitize(&block));
        for (ii, &i) in cl.iter().enumerate() {
            diag_a[i] = sub.eigenvalues[ii];
            diag_b[i] = db.eigenvalues[i];
        }
        // columns of the cluster mix by the sub-rotation
        for row in 0..d {
            let old: Vec<C64> = cl.iter().map(|&j| db.vectors[(row, j)]).collect();
            for (jj, &j) in cl.iter().enumerate() {
                let mut acc = C64::new(0.0, 0.0);
                for (ii, &o) in old.iter().enumerate() {
                    acc += o * sub.vectors[(ii, jj)];
                }
                basis[(row, j)] = acc;
            }
        }
    }
    Some((basis, diag_a, diag_b))
}
