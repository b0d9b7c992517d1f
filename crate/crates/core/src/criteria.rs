//! Divergence-based decision procedures.
//!
//! A channel taking the classical pair onto the quantum pair exists iff
//! `D_f(classical) >= D_f^max(quantum)` for every closed proper convex
//! `f`. That quantifier is not finitely checkable, so:
//!
//! - [`necessary_scan`] evaluates the inequality on resolvent, power and
//!   square families over finite grids; any violation *proves* no
//!   channel exists.
//! - [`sufficient_equality`] checks the equality version on the same
//!   families, which (over all shifts and exponents) implies a channel
//!   exists; on a finite grid a `true` is a numerically supported
//!   assertion, not a certificate.
//! - [`sufficient_via_reverse_test`] is constructive: build the optimal
//!   reverse test of the target, ask the LP for a transition matrix onto
//!   its classical pair, and compose.
//! - [`decide`] chains the pure-target oracle, the scan, the reverse-test
//!   route, an exact classical reduction for commuting targets, and the
//!   projection oracle, recording which stage decided.

use crate::convexfn::{power_family, resolvent_family, square_fn, ConvexFn};
use crate::divergence::{
    reverse_test, ClassicalPair, ClassicalReduction, QuantumPair, QuantumReduction,
};
use crate::ext;
use crate::feasibility::{
    classical_feasible, cq_feasible, pure_target_feasible, CQChannel,
    FeasibilityReport, FeasibilityStatus, Violation, Witness,
};
use crate::linalg::{commuting_eigenbasis, eigh, CMat, DensityOp, HermitianOp, DEFAULT_SUPPORT_TOL};
use crate::{ProbVector, Result};

/// One scan row: a test function, both divergence values, the verdict.
#[derive(Clone, Debug)]
pub struct ScanEntry {
    pub label: String,
    pub lhs: f64,
    pub rhs: f64,
    pub violated: bool,
}

/// Outcome of a necessary scan over the test-function grids.
#[derive(Clone, Debug)]
pub struct ScanResult {
    pub entries: Vec<ScanEntry>,
    /// min over entries of `lhs - rhs`; negative means some inequality
    /// is close to (or past) violation
    pub worst_gap: f64,
}

impl ScanResult {
    pub fn violations(&self) -> usize {
        self.entries.iter().filter(|e| e.violated).count()
    }

    pub fn first_violation(&self) -> Option<Violation> {
        self.entries.iter().find(|e| e.violated).map(|e| Violation {
            label: e.label.clone(),
            lhs: e.lhs,
            rhs: e.rhs,
        })
    }

    /// CSV dump with a fixed header, one row per entry.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("label,lhs,rhs,gap,violated\n");
        for e in &self.entries {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                e.label,
                ext::render(e.lhs),
                ext::render(e.rhs),
                ext::render(ext::gap(e.lhs, e.rhs)),
                e.violated
            ));
        }
        out
    }
}

fn scan_functions(t_grid: &[f64], s_grid: &[f64]) -> Result<Vec<ConvexFn>> {
    let mut fns = Vec::with_capacity(t_grid.len() + s_grid.len() + 3);
    if !t_grid.contains(&0.0) {
        fns.push(resolvent_family(0.0)?);
    }
    for &t in t_grid {
        fns.push(resolvent_family(t)?);
    }
    for &s in s_grid {
        fns.push(power_family(s)?);
    }
    if !s_grid.contains(&1.0) {
        fns.push(power_family(1.0)?);
    }
    fns.push(square_fn());
    Ok(fns)
}

/// Evaluates `D_f(from) >= D_f^max(to)` for resolvents over
/// `t_grid + {0}`, powers over `s_grid + {1}`, and the square. Any
/// violation proves no channel exists.
pub fn necessary_scan(
    from: &ClassicalPair,
    to: &QuantumPair,
    t_grid: &[f64],
    s_grid: &[f64],
    tol: f64,
) -> Result<ScanResult> {
    let classical = ClassicalReduction::of(from);
    let quantum = QuantumReduction::of(to)?;
    let mut entries = Vec::new();
    let mut worst = f64::INFINITY;
    for f in scan_functions(t_grid, s_grid)? {
        let lhs = classical.value(&f);
        let rhs = quantum.value(&f);
        let gap = ext::gap(lhs, rhs);
        worst = worst.min(gap);
        entries.push(ScanEntry {
            label: f.label().to_string(),
            lhs,
            rhs,
            violated: ext::violates(lhs, rhs, tol),
        });
    }
    Ok(ScanResult { entries, worst_gap: worst })
}

/// Checks the equality `D_f(from) = D_f^max(to)` on the resolvent and
/// power grids. Equality over *all* shifts and exponents implies a
/// channel exists.
pub fn sufficient_equality(
    from: &ClassicalPair,
    to: &QuantumPair,
    t_grid: &[f64],
    s_grid: &[f64],
    tol: f64,
) -> Result<bool> {
    let classical = ClassicalReduction::of(from);
    let quantum = QuantumReduction::of(to)?;
    for f in scan_functions(t_grid, s_grid)? {
        if f.label() == "square" {
            continue; // the sufficiency route needs resolvents and powers only
        }
        if !ext::approx_eq(classical.value(&f), quantum.value(&f), tol) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Constructive sufficiency: LP from `from` onto the reverse-test pair
/// of `to`, composed with the reverse-test channel.
///
/// `Feasible` comes with the composed, re-verified channel. An
/// infeasible LP is *not* a proof of infeasibility (the reverse-test
/// pair is one particular generator), so that outcome reports
/// `Undetermined` carrying the LP residual.
pub fn sufficient_via_reverse_test(
    from: &ClassicalPair,
    to: &QuantumPair,
    tol: f64,
) -> Result<FeasibilityReport> {
    let rt = reverse_test(to)?;
    let lp = classical_feasible(from, &rt.q, tol)?;
    match lp.status {
        FeasibilityStatus::Feasible => {
            let Some(Witness::Transition(p)) = &lp.witness else {
                unreachable!("feasible LP always carries a transition matrix")
            };
            let channel = compose_transition_then_channel(p.cols(), p, &rt.channel)?;
            let res = channel.reproduction_residual(from, to);
            Ok(FeasibilityReport::feasible(Witness::Channel(channel), res))
        }
        _ => Ok(FeasibilityReport::undetermined(lp.residual)),
    }
}

fn compose_transition_then_channel(
    n: usize,
    p: &crate::feasibility::TransitionMatrix,
    channel: &CQChannel,
) -> Result<CQChannel> {
    let d = channel.dim();
    let mut states = Vec::with_capacity(n);
    for x in 0..n {
        let mut acc = CMat::zeros(d);
        for y in 0..p.rows() {
            let w = p.get(y, x);
            if w > 0.0 {
                acc = acc.add(&channel.states()[y].mat().scale(w));
            }
        }
        states.push(DensityOp::new(HermitianOp::hermitize(&acc))?);
    }
    CQChannel::new(states)
}

/// Configuration for the [`decide`] pipeline.
#[derive(Clone, Debug)]
pub struct DecisionConfig {
    pub tol: f64,
    pub t_grid: Vec<f64>,
    pub s_grid: Vec<f64>,
    pub max_iter: usize,
}

impl Default for DecisionConfig {
    fn default() -> Self {
        DecisionConfig {
            tol: crate::feasibility::DEFAULT_TOL,
            t_grid: crate::grids::default_t_grid(),
            s_grid: crate::grids::default_s_grid(),
            max_iter: crate::feasibility::DEFAULT_MAX_ITER,
        }
    }
}

/// Full decision pipeline.
///
/// 1. `pure-target`: exact oracle when `sigma1` has rank 1.
/// 2. `scan`: refute through a divergence violation.
/// 3. `reverse-test`: accept through LP onto the reverse-test pair.
/// 4. `oracle`: exact classical reduction when the targets commute
///    (the conversion is then classical-to-classical), otherwise the
///    Dykstra projection search.
pub fn decide(
    from: &ClassicalPair,
    to: &QuantumPair,
    config: &DecisionConfig,
) -> Result<FeasibilityReport> {
    // pure-target fast path
    let s1_dec = eigh(to.sigma1.op());
    let rank1 = s1_dec
        .eigenvalues
        .iter()
        .filter(|&&l| l > DEFAULT_SUPPORT_TOL * s1_dec.max_eigenvalue())
        .count()
        == 1;
    if rank1 {
        return Ok(pure_target_feasible(from, to, config.tol)?.with_stage("pure-target"));
    }

    let scan = necessary_scan(from, to, &config.t_grid, &config.s_grid, config.tol)?;
    if let Some(v) = scan.first_violation() {
        return Ok(FeasibilityReport::infeasible(-scan.worst_gap)
            .with_violation(v)
            .with_stage("scan"));
    }

    let corollary = sufficient_via_reverse_test(from, to, config.tol)?;
    if corollary.status == FeasibilityStatus::Feasible {
        return Ok(corollary.with_stage("reverse-test"));
    }

    // commuting targets reduce exactly to a classical LP; a feasible
    // transition matrix composes with the joint eigenbasis into a
    // channel witness
    if let Some((basis, diag0, diag1)) = commuting_eigenbasis(to.sigma0.op(), to.sigma1.op(), 1e-10)
    {
        let to_classical = ClassicalPair::new(
            ProbVector::new(diag0.iter().map(|&v| v.max(0.0)).collect())?,
            ProbVector::new(diag1.iter().map(|&v| v.max(0.0)).collect())?,
        )?;
        let lp = classical_feasible(from, &to_classical, config.tol)?;
        return Ok(match lp.status {
            FeasibilityStatus::Feasible => {
                let Some(Witness::Transition(p)) = &lp.witness else {
                    unreachable!("feasible LP always carries a transition matrix")
                };
                let d = to.dim();
                let mut eigenstates = Vec::with_capacity(d);
                for y in 0..d {
                    let mut m = CMat::zeros(d);
                    for i in 0..d {
                        for j in 0..d {
                            m[(i, j)] = basis[(i, y)] * basis[(j, y)].conj();
                        }
                    }
                    eigenstates.push(DensityOp::new(HermitianOp::hermitize(&m))?);
                }
                let channel =
                    compose_transition_then_channel(p.cols(), p, &CQChannel::new(eigenstates)?)?;
                let res = channel.reproduction_residual(from, to);
                FeasibilityReport::feasible(Witness::Channel(channel), res).with_stage("oracle")
            }
            _ => FeasibilityReport::infeasible(lp.residual).with_stage("oracle"),
        });
    }

    Ok(cq_feasible(from, to, config.tol, config.max_iter)?.with_stage("oracle"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divergence::ProbVector;
    use crate::sampling;

    fn cpair(p0: &[f64], p1: &[f64]) -> ClassicalPair {
        ClassicalPair::new(
            ProbVector::new(p0.to_vec()).unwrap(),
            ProbVector::new(p1.to_vec()).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn scan_clean_on_diagonal_embedding() {
        let from = cpair(&[0.2, 0.5, 0.3], &[0.4, 0.4, 0.2]);
        let to = from.embed_diagonal();
        let scan = necessary_scan(
            &from,
            &to,
            &crate::grids::default_t_grid(),
            &crate::grids::default_s_grid(),
            1e-9,
        )
        .unwrap();
        assert_eq!(scan.violations(), 0);
        assert!(scan.worst_gap.abs() < 1e-9, "{}", scan.worst_gap);
    }

    #[test]
    fn scan_detects_hand_violation() {
        // resolvent t=1: lhs = 0.5, rhs = 0.5/2.8 + 0.5/1.2
        let from = cpair(&[0.5, 0.5], &[0.5, 0.5]);
        let to = cpair(&[0.9, 0.1], &[0.5, 0.5]).embed_diagonal();
        let scan = necessary_scan(&from, &to, &[1.0], &[0.9], 1e-9).unwrap();
        let entry = scan
            .entries
            .iter()
            .find(|e| e.label == "resolvent:1")
            .unwrap();
        assert!((entry.lhs - 0.5).abs() < 1e-12);
        assert!((entry.rhs - (0.5 / 2.8 + 0.5 / 1.2)).abs() < 1e-12);
        assert!(entry.violated);
    }

    #[test]
    fn refining_grids_only_accumulates_violations() {
        let mut rng = sampling::seeded(51);
        let base_t: Vec<f64> = crate::grids::log_grid(1e-2, 1e2, 8);
        let mut fine_t = base_t.clone();
        for w in base_t.windows(2) {
            fine_t.push((w[0] * w[1]).sqrt());
        }
        let base_s = crate::grids::lin_grid(0.5, 0.99, 6);
        let mut fine_s = base_s.clone();
        for w in base_s.windows(2) {
            fine_s.push(0.5 * (w[0] + w[1]));
        }
        for _ in 0..30 {
            let from = sampling::random_classical_pair(&mut rng, 3);
            let to = sampling::random_quantum_pair(&mut rng, 2);
            let coarse = necessary_scan(&from, &to, &base_t, &base_s, 1e-9).unwrap();
            let fine = necessary_scan(&from, &to, &fine_t, &fine_s, 1e-9).unwrap();
            if coarse.violations() > 0 {
                assert!(fine.violations() >= coarse.violations());
            }
        }
    }

    #[test]
    fn equality_holds_for_reverse_test_pairs() {
        let mut rng = sampling::seeded(52);
        let t_grid = crate::grids::log_grid(1e-2, 1e2, 16);
        let s_grid = crate::grids::lin_grid(0.5, 0.999, 8);
        for trial in 0..500 {
            let dim = 2 + trial % 3;
            let to = sampling::random_quantum_pair(&mut rng, dim);
            let rt = reverse_test(&to).unwrap();
            assert!(sufficient_equality(&rt.q, &to, &t_grid, &s_grid, 1e-7).unwrap());
        }
    }

    #[test]
    fn equality_for_diagonal_embedding_but_not_noisy_pairs() {
        let from = cpair(&[0.2, 0.5, 0.3], &[0.4, 0.4, 0.2]);
        let to = from.embed_diagonal();
        let t_grid = crate::grids::log_grid(1e-2, 1e2, 16);
        let s_grid = crate::grids::lin_grid(0.5, 0.999, 8);
        assert!(sufficient_equality(&from, &to, &t_grid, &s_grid, 1e-7).unwrap());

        // strictly more informative source: a refined pair vs its merge
        let refined = cpair(&[0.2, 0.3, 0.2, 0.3], &[0.4, 0.0, 0.4, 0.2]);
        let merged = cpair(&[0.5, 0.5], &[0.4, 0.6]).embed_diagonal();
        assert!(!sufficient_equality(&refined, &merged, &t_grid, &s_grid, 1e-7).unwrap());
    }

    #[test]
    fn corollary_route_accepts_reverse_test_pair_itself() {
        let mut rng = sampling::seeded(53);
        let to = sampling::random_quantum_pair(&mut rng, 3);
        let rt = reverse_test(&to).unwrap();
        let r = sufficient_via_reverse_test(&rt.q, &to, 1e-9).unwrap();
        assert_eq!(r.status, FeasibilityStatus::Feasible);
        assert!(r.residual < 1e-7);
    }

    #[test]
    fn corollary_route_accepts_refinements() {
        let mut rng = sampling::seeded(54);
        let to = sampling::random_quantum_pair(&mut rng, 2);
        let rt = reverse_test(&to).unwrap();
        // refine the first symbol into two halves
        let mut p0 = vec![rt.q.p0.weight(0) / 2.0, rt.q.p0.weight(0) / 2.0];
        let mut p1 = vec![rt.q.p1.weight(0) / 2.0, rt.q.p1.weight(0) / 2.0];
        for x in 1..rt.q.alphabet() {
            p0.push(rt.q.p0.weight(x));
            p1.push(rt.q.p1.weight(x));
        }
        let refined = cpair(&p0, &p1);
        let r = sufficient_via_reverse_test(&refined, &to, 1e-9).unwrap();
        assert_eq!(r.status, FeasibilityStatus::Feasible);
        assert!(r.residual < 1e-6);
    }

    #[test]
    fn corollary_route_reports_undetermined_for_uninformative_source() {
        let from = cpair(&[0.5, 0.5], &[0.5, 0.5]);
        let mut rng = sampling::seeded(55);
        let to = sampling::random_quantum_pair(&mut rng, 2);
        let r = sufficient_via_reverse_test(&from, &to, 1e-9).unwrap();
        assert_eq!(r.status, FeasibilityStatus::Undetermined);
    }

    #[test]
    fn decide_pure_target_stage() {
        let from = cpair(&[0.2, 0.3, 0.5], &[0.5, 0.5, 0.0]);
        let to = QuantumPair::new(
            DensityOp::from_real_diag(&[0.6, 0.4]).unwrap(),
            DensityOp::from_real_diag(&[1.0, 0.0]).unwrap(),
        )
        .unwrap();
        let r = decide(&from, &to, &DecisionConfig::default()).unwrap();
        assert_eq!(r.status, FeasibilityStatus::Feasible);
        assert_eq!(r.stage, "pure-target");
        let direct = pure_target_feasible(&from, &to, 1e-7).unwrap();
        assert_eq!(direct.status, r.status);
    }

    #[test]
    fn decide_counterexample_instance_refuted_by_oracle() {
        // the three-point construction: scan clean, oracle refutes
        let point = crate::counterexample::find_separating_point(
            &crate::counterexample::TriplePoint::new(0.1, 0.3, 0.6).unwrap(),
            &crate::grids::default_curve_t_grid(),
            1e-10,
        )
        .unwrap();
        let (a, b) = point.point;
        let from = cpair(&[0.1, 0.3, 0.6], &[1.0 / 3.0; 3]);
        let to = cpair(&[a, b, 1.0 - a - b], &[1.0 / 3.0; 3]).embed_diagonal();
        let r = decide(&from, &to, &DecisionConfig::default()).unwrap();
        assert_eq!(r.status, FeasibilityStatus::Infeasible);
        assert_eq!(r.stage, "oracle");
        // and the scan alone would not have caught it
        let scan = necessary_scan(
            &from,
            &to,
            &crate::grids::default_t_grid(),
            &crate::grids::default_s_grid(),
            1e-9,
        )
        .unwrap();
        assert_eq!(scan.violations(), 0);
    }

    #[test]
    fn decide_forward_instances_accepted_with_verified_channel() {
        let mut rng = sampling::seeded(56);
        for _ in 0..10 {
            let from = sampling::random_classical_pair(&mut rng, 4);
            let ch = sampling::random_cq_channel(&mut rng, 4, 2);
            let to = QuantumPair::new(
                DensityOp::new(ch.apply(&from.p0)).unwrap(),
                DensityOp::new(ch.apply(&from.p1)).unwrap(),
            )
            .unwrap();
            let r = decide(&from, &to, &DecisionConfig::default()).unwrap();
            assert_eq!(r.status, FeasibilityStatus::Feasible, "stage {}", r.stage);
            match &r.witness {
                Some(Witness::Channel(w)) => {
                    assert!(w.reproduction_residual(&from, &to) <= 1e-6)
                }
                _ => panic!("feasible without channel witness"),
            }
        }
    }

    #[test]
    fn decide_commuting_feasible_carries_channel_witness() {
        // feasible diagonal targets are caught by the reverse-test stage
        // (the reverse-test pair coarse-grains the eigenbasis pair, so
        // its LP is never harder); the verdict must carry a channel
        let from = cpair(&[0.1, 0.3, 0.6], &[1.0 / 3.0; 3]);
        let to = cpair(&[0.2, 0.3, 0.5], &[1.0 / 3.0; 3]).embed_diagonal();
        let r = decide(&from, &to, &DecisionConfig::default()).unwrap();
        assert_eq!(r.status, FeasibilityStatus::Feasible);
        match &r.witness {
            Some(Witness::Channel(w)) => {
                assert!(w.reproduction_residual(&from, &to) <= 1e-7)
            }
            _ => panic!("expected channel witness"),
        }
    }

    #[test]
    fn decide_never_refutes_forward_instances() {
        let mut rng = sampling::seeded(57);
        for trial in 0..1000 {
            let n = 2 + trial % 4;
            let d = 2 + trial % 2;
            let from = sampling::random_classical_pair(&mut rng, n);
            let ch = sampling::random_cq_channel(&mut rng, n, d);
            let to = QuantumPair::new(
                DensityOp::new(ch.apply(&from.p0)).unwrap(),
                DensityOp::new(ch.apply(&from.p1)).unwrap(),
            )
            .unwrap();
            let r = decide(&from, &to, &DecisionConfig::default()).unwrap();
            assert_ne!(r.status, FeasibilityStatus::Infeasible, "trial {trial}");
        }
    }
}
