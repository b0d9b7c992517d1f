//! Seeded random generation of matrices, states, probability vectors and
//! channels, plus the Stinespring machinery used by the property suites.
//!
//! All randomness flows through an explicitly seeded ChaCha stream so
//! that every search and sweep is reproducible bit for bit.

use num_complex::Complex64;
use rand::Rng as _;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::divergence::{ClassicalPair, ProbVector, QuantumPair};
use crate::feasibility::CQChannel;
use crate::linalg::{CMat, DensityOp, HermitianOp, C64};

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard normal via Box-Muller; keeps the dependency surface small
/// and the stream stable across `rand` versions.
pub fn standard_normal(rng: &mut Rng) -> f64 {
    loop {
        let u1: f64 = rng.gen();
        if u1 <= f64::MIN_POSITIVE {
            continue;
        }
        let u2: f64 = rng.gen();
        return (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
    }
}

pub fn standard_complex(rng: &mut Rng) -> C64 {
    Complex64::new(standard_normal(rng), standard_normal(rng))
}

/// Random Hermitian matrix with entries of order one.
pub fn random_hermitian(rng: &mut Rng, dim: usize) -> HermitianOp {
    let mut m = CMat::zeros(dim);
    for i in 0..dim {
        for j in 0..dim {
            m[(i, j)] = standard_complex(rng);
        }
    }
    HermitianOp::hermitize(&m)
}

/// Random PSD matrix `G G^dagger / dim` with `G` a `dim x rank` complex
/// Gaussian, scaled by `scale`.
pub fn random_psd(rng: &mut Rng, dim: usize, rank: usize, scale: f64) -> HermitianOp {
    let g: Vec<Vec<C64>> = (0..dim)
        .map(|_| (0..rank).map(|_| standard_complex(rng)).collect())
        .collect();
    let mut m = CMat::zeros(dim);
    for i in 0..dim {
        for j in 0..dim {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..rank {
                acc += g[i][k] * g[j][k].conj();
            }
            m[(i, j)] = acc * (scale / dim as f64);
        }
    }
    HermitianOp::hermitize(&m)
}

/// Random density operator of the given rank (Hilbert-Schmidt style).
pub fn random_density(rng: &mut Rng, dim: usize, rank: usize) -> DensityOp {
    let m = random_psd(rng, dim, rank, 1.0);
    let tr = m.trace_re();
    DensityOp::new(m.scale(1.0 / tr)).expect("normalized PSD is a density")
}

/// Random pure state as a rank-1 density.
pub fn random_pure_density(rng: &mut Rng, dim: usize) -> DensityOp {
    random_density(rng, dim, 1)
}

/// Haar-ish random unit vector.
pub fn random_unit_vector(rng: &mut Rng, dim: usize) -> Vec<C64> {
    let mut v: Vec<C64> = (0..dim).map(|_| standard_complex(rng)).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in v.iter_mut() {
        *z /= norm;
    }
    v
}

/// Columns of an isometry from `cols`-dim into `rows`-dim (`rows >= cols`),
/// from QR of a complex Gaussian via modified Gram-Schmidt.
pub fn random_isometry(rng: &mut Rng, rows: usize, cols: usize) -> Vec<Vec<C64>> {
    assert!(rows >= cols);
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(cols);
    while basis.len() < cols {
        let mut v: Vec<C64> = (0..rows).map(|_| standard_complex(rng)).collect();
        for _ in 0..2 {
            for b in &basis {
                let ip: C64 = b.iter().zip(v.iter()).map(|(bi, vi)| bi.conj() * vi).sum();
                for (vi, bi) in v.iter_mut().zip(b.iter()) {
                    *vi -= ip * bi;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-8 {
            continue; // resample a degenerate draw
        }
        for z in v.iter_mut() {
            *z /= norm;
        }
        basis.push(v);
    }
    basis
}

/// Random unitary as a square matrix (columns orthonormal).
pub fn random_unitary(rng: &mut Rng, dim: usize) -> CMat {
    let cols = random_isometry(rng, dim, dim);
    let mut u = CMat::zeros(dim);
    for (c, col) in cols.iter().enumerate() {
        for i in 0..dim {
            u[(i, c)] = col[i];
        }
    }
    u
}

/// Random probability vector; optionally with a forced zero pattern.
pub fn random_prob(rng: &mut Rng, n: usize) -> ProbVector {
    let mut w: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() + 1e-3).collect();
    let s: f64 = w.iter().sum();
    for x in w.iter_mut() {
        *x /= s;
    }
    ProbVector::new(w).expect("normalized weights")
}

/// Random probability vector with roughly `zeros` entries pinned to 0.
pub fn random_prob_with_zeros(rng: &mut Rng, n: usize, zeros: usize) -> ProbVector {
    let mut w: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() + 1e-3).collect();
    let mut killed = 0;
    while killed < zeros.min(n - 1) {
        let i = rng.gen_range(0..n);
        if w[i] != 0.0 {
            w[i] = 0.0;
            killed += 1;
        }
    }
    let s: f64 = w.iter().sum();
    for x in w.iter_mut() {
        *x /= s;
    }
    ProbVector::new(w).expect("normalized weights")
}

pub fn random_classical_pair(rng: &mut Rng, n: usize) -> ClassicalPair {
    ClassicalPair::new(random_prob(rng, n), random_prob(rng, n)).expect("same alphabet")
}

pub fn random_quantum_pair(rng: &mut Rng, dim: usize) -> QuantumPair {
    QuantumPair::new(random_density(rng, dim, dim), random_density(rng, dim, dim))
        .expect("same dimension")
}

/// Random classical-to-quantum channel: one random state per symbol.
pub fn random_cq_channel(rng: &mut Rng, alphabet: usize, dim: usize) -> CQChannel {
    let states = (0..alphabet).map(|_| random_density(rng, dim, dim)).collect();
    CQChannel::new(states).expect("consistent dimensions")
}

// ---------------------------------------------------------------------------
// CPTP maps via Stinespring dilation
// ---------------------------------------------------------------------------

/// Partial trace over the second (environment) factor of a state on a
/// `d_sys x d_env` tensor product.
pub fn partial_trace_env(m: &CMat, d_sys: usize, d_env: usize) -> CMat {
    assert_eq!(m.dim(), d_sys * d_env);
    let mut out = CMat::zeros(d_sys);
    for i in 0..d_sys {
        for j in 0..d_sys {
            let mut acc = Complex64::new(0.0, 0.0);
            for e in 0..d_env {
                acc += m[(i * d_env + e, j * d_env + e)];
            }
            out[(i, j)] = acc;
        }
    }
    out
}

/// A CPTP map `rho -> tr_env(V rho V^dagger)` given by an isometry `V`
/// from `d_in` into `d_out * d_env`, stored column-wise.
pub struct StinespringChannel {
    pub isometry: Vec<Vec<C64>>, // d_in columns of length d_out*d_env
    pub d_in: usize,
    pub d_out: usize,
    pub d_env: usize,
}

impl StinespringChannel {
    pub fn random(rng: &mut Rng, d_in: usize, d_out: usize, d_env: usize) -> Self {
        let isometry = random_isometry(rng, d_out * d_env, d_in);
        StinespringChannel { isometry, d_in, d_out, d_env }
    }

    pub fn apply(&self, rho: &CMat) -> CMat {
        assert_eq!(rho.dim(), self.d_in);
        let big = self.d_out * self.d_env;
        // V rho V^dagger
        let mut lifted = CMat::zeros(big);
        for a in 0..self.d_in {
            for b in 0..self.d_in {
                let v = rho[(a, b)];
                if v == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for i in 0..big {
                    let va = self.isometry[a][i];
                    for j in 0..big {
                        lifted[(i, j)] += va * v * self.isometry[b][j].conj();
                    }
                }
            }
        }
        partial_trace_env(&lifted, self.d_out, self.d_env)
    }

    pub fn apply_density(&self, rho: &DensityOp) -> DensityOp {
        let out = HermitianOp::hermitize(&self.apply(rho.mat()));
        DensityOp::new(out).expect("CPTP image of a density is a density")
    }
}
