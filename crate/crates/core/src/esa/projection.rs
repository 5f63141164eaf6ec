//! The post-selected projection for one detection pattern.
//!
//! Bras are stored as kets; the bra is their adjoint. A photon in time-bin
//! `t` entering QFT port `s` reaches detector `D_t` with amplitude
//! `ω^{s·D_t}/√d`, so the configuration "port `s` holds time-bin `t_s`"
//! carries the phase `ω^{Σ_s s·D_{t_s}}`.

use std::collections::BTreeSet;

use num_complex::Complex;
use num_traits::Zero;

use super::aux::{check_even, AuxSpec};
use super::pattern::DetectionPattern;
use super::{A_PORT, AUX_OFFSET, B_PORT};
use crate::error::{Error, Result};
use crate::fock::{drop_modes, partial_project, FockState, OccupationConfig};
use crate::interferometer::{qft_matrix, ModeUnitary};
use crate::scalar::{root_of_unity, Scalar};

/// `⟨P_D|` over ports `(a, b, x_0, …, x_{d-3})`, one photon per port.
#[derive(Clone, Debug)]
pub struct ProjectionBra<T> {
    /// Ket whose adjoint is the bra; amplitudes already include
    /// `global_factor`.
    pub bra: FockState<T>,
    pub pattern: DetectionPattern,
    /// `1/d^{d/2}`, the modulus shared by every term.
    pub global_factor: Complex<T>,
}

fn check_pattern(d: usize, pattern: &DetectionPattern) -> Result<()> {
    if pattern.d() != d {
        return Err(Error::Pattern(format!(
            "pattern has {} entries for d={d}",
            pattern.d()
        )));
    }
    Ok(())
}

/// Steps `v` to its lexicographic successor; false after the last one.
fn next_permutation(v: &mut [usize]) -> bool {
    let Some(i) = (1..v.len()).rev().find(|&i| v[i - 1] < v[i]) else {
        return false;
    };
    let j = (i..v.len()).rev().find(|&j| v[j] > v[i - 1]).unwrap();
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// Sum over all `d!` one-photon-per-port configurations, each amplitude
/// built as a product of QFT matrix entries.
pub fn projection_bra<T: Scalar>(d: usize, pattern: &DetectionPattern) -> Result<ProjectionBra<T>> {
    check_even(d)?;
    check_pattern(d, pattern)?;
    let u = qft_matrix::<T>(d)?;
    let mut bra = FockState::zero(d, d);
    let mut perm: Vec<usize> = (0..d).collect();
    loop {
        let amp = perm
            .iter()
            .enumerate()
            .fold(Complex::new(T::one(), T::zero()), |acc, (s, &t)| {
                acc * u.get(pattern.detector(t), s)
            });
        bra.add_term(OccupationConfig::from_timebins(0, &perm), amp.conj())?;
        if !next_permutation(&mut perm) {
            break;
        }
    }
    let global = inv_sqrt_d_pow_d::<T>(d);
    Ok(ProjectionBra {
        bra,
        pattern: pattern.clone(),
        global_factor: Complex::new(global, T::zero()),
    })
}

/// `Σ_k (k+2)·D_{a_k}`: the phase exponent contributed by one auxiliary
/// branch.
pub(crate) fn branch_exponent(a_row: &[usize], pattern: &DetectionPattern) -> i64 {
    a_row
        .iter()
        .enumerate()
        .map(|(k, &t)| ((k + AUX_OFFSET) * pattern.detector(t)) as i64)
        .sum()
}

/// Contracts the projection with the auxiliary photons, leaving a bra on
/// `(a, b)` with exactly two terms per branch.
///
/// The term `⟨p q|` of a branch with amplitude `α` has coefficient
/// `α·ω^{D_q + Σ_k (k+2)·D_{a_k}} / d^{d/2}`. Works for any auxiliary
/// amplitudes, including the signed states the emitter produces.
pub fn project_ab<T: Scalar>(aux: &FockState<T>, pattern: &DetectionPattern) -> Result<FockState<T>> {
    check_pattern(aux.dim(), pattern)?;
    let (spec, amps) = AuxSpec::from_state(aux)?;
    project_with_spec(&spec, &amps, pattern, aux.pruning())
}

pub(crate) fn project_with_spec<T: Scalar>(
    spec: &AuxSpec,
    amps: &[Complex<T>],
    pattern: &DetectionPattern,
    prune: Option<T>,
) -> Result<FockState<T>> {
    let d = spec.d();
    let scale = inv_sqrt_d_pow_d::<T>(d);
    let mut out = FockState::zero(d, 2).with_pruning(prune);
    for (branch, &alpha) in spec.branches().iter().zip(amps) {
        let f = branch_exponent(&branch.a_row, pattern);
        let (y, z) = branch.excluded;
        for (p, q) in [(z, y), (y, z)] {
            let phase: Complex<T> = root_of_unity(d, (B_PORT * pattern.detector(q)) as i64 + f);
            let coeff = alpha * phase * scale;
            out.add_term(OccupationConfig::from_timebins(A_PORT, &[p, q]), coeff.conj())?;
        }
    }
    Ok(out)
}

/// `1/d^{d/2}`.
pub(crate) fn inv_sqrt_d_pow_d<T: Scalar>(d: usize) -> T {
    T::from_f64_lossy((d as f64).powf(-(d as f64) / 2.0))
}

/// The same contraction computed by brute force: the full permutation-sum
/// bra partially projected onto the auxiliary state.
pub fn project_ab_generic<T: Scalar>(
    aux: &FockState<T>,
    pattern: &DetectionPattern,
) -> Result<FockState<T>> {
    let d = aux.dim();
    let p = projection_bra::<T>(d, pattern)?;
    let aux_modes: BTreeSet<usize> = (AUX_OFFSET..d).collect();
    let aux_on_ports = aux.shifted(AUX_OFFSET, d)?;
    let rest = partial_project(&aux_on_ports, &p.bra.with_pruning(aux.pruning()), &aux_modes)?;
    drop_modes(&rest, &aux_modes)
}

/// Diagonal phase correction on Bob's qudit for the canonical auxiliary
/// state of `spec`: entry `q` cancels the phase of the term with `q` on
/// port `b`.
pub fn correction_unitary<T: Scalar>(spec: &AuxSpec, pattern: &DetectionPattern) -> Result<ModeUnitary<T>> {
    let d = spec.d();
    check_pattern(d, pattern)?;
    let mut diag = vec![Complex::new(T::one(), T::zero()); d];
    for b in spec.branches() {
        let f = branch_exponent(&b.a_row, pattern);
        for q in [b.excluded.0, b.excluded.1] {
            diag[q] = root_of_unity(d, -((B_PORT * pattern.detector(q)) as i64 + f));
        }
    }
    Ok(ModeUnitary::diagonal(diag))
}

/// Reads the correction off a projected bra (as returned by
/// [`project_ab`]): entry `q` is the conjugate phase of the term with `q` on
/// port `b`. Also strips any sign carried by the auxiliary branches.
pub fn correction_from_projection<T: Scalar>(projection: &FockState<T>) -> Result<ModeUnitary<T>> {
    let d = projection.dim();
    let mut diag: Vec<Option<Complex<T>>> = vec![None; d];
    for (c, &k) in projection.iter() {
        let q = c.single_timebin(B_PORT).ok_or_else(|| {
            Error::Input(format!("projection term {c} lacks a single photon on port b"))
        })?;
        if k.is_zero() {
            continue;
        }
        // the bra coefficient is conj(k); its inverse phase is k/|k|
        let entry = k / k.norm();
        if diag[q].replace(entry).is_some() {
            return Err(Error::Input(format!(
                "time-bin {q} appears twice on port b; no diagonal correction exists"
            )));
        }
    }
    Ok(ModeUnitary::diagonal(
        diag.into_iter()
            .map(|e| e.unwrap_or(Complex::new(T::one(), T::zero())))
            .collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::esa::aux::{build_aux, AuxFamily};

    fn omega(d: usize, k: i64) -> Complex<f64> {
        let th = 2.0 * std::f64::consts::PI * k as f64 / d as f64;
        Complex::new(th.cos(), th.sin())
    }

    #[test]
    fn permutations_are_complete() {
        let mut v = vec![0, 1, 2, 3];
        let mut n = 1;
        while next_permutation(&mut v) {
            n += 1;
        }
        assert_eq!(n, 24);
        assert_eq!(v, vec![3, 2, 1, 0]);
    }

    #[test]
    fn all_zero_bra_is_uniform() {
        let p = projection_bra::<f64>(4, &DetectionPattern::all_zero(4)).unwrap();
        assert_eq!(p.bra.len(), 24);
        for (_, a) in p.bra.iter() {
            assert!((a - Complex::new(1.0 / 16.0, 0.0)).norm() < 1e-15);
        }
        assert!((p.global_factor.re - 1.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn d2_bra_structure() {
        let p = projection_bra::<f64>(2, &DetectionPattern::new(2, vec![0, 1]).unwrap()).unwrap();
        // port b holds time-bin 1, which went to detector 1: phase ω = -1
        let c01 = OccupationConfig::from_timebins(0, &[0, 1]);
        let c10 = OccupationConfig::from_timebins(0, &[1, 0]);
        assert!((p.bra.amplitude(&c01).conj() - Complex::new(-0.5, 0.0)).norm() < 1e-15);
        assert!((p.bra.amplitude(&c10).conj() - Complex::new(0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn identity_term_carries_sum_of_squares() {
        for d in [2, 4, 6] {
            let pat = DetectionPattern::new(d, (0..d).collect()).unwrap();
            let p = projection_bra::<f64>(d, &pat).unwrap();
            let id: Vec<usize> = (0..d).collect();
            let amp = p.bra.amplitude(&OccupationConfig::from_timebins(0, &id)).conj();
            let e: i64 = (0..d as i64).map(|i| i * i).sum();
            let want = omega(d, e) * p.global_factor;
            assert!((amp - want).norm() < 1e-13, "d={d}");
        }
    }

    #[test]
    fn project_ab_all_zero_d4() {
        let aux = build_aux::<f64>(4, &AuxFamily::RotatedPairs).unwrap();
        let q = project_ab(&aux, &DetectionPattern::all_zero(4)).unwrap();
        let want = 1.0 / (16.0 * 2f64.sqrt());
        assert_eq!(q.len(), 4);
        for bins in [[0, 1], [1, 0], [2, 3], [3, 2]] {
            let a = q.amplitude(&OccupationConfig::from_timebins(0, &bins));
            assert!((a - Complex::new(want, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn d6_all_zero_modulus() {
        let aux = build_aux::<f64>(6, &AuxFamily::RotatedPairs).unwrap();
        let q = project_ab(&aux, &DetectionPattern::all_zero(6)).unwrap();
        assert_eq!(q.len(), 6);
        let want = 1.0 / (216.0 * 3f64.sqrt());
        for (_, a) in q.iter() {
            assert!((a.norm() - want).abs() < 1e-15);
        }
    }

    #[test]
    fn closed_form_matches_generic_on_d4_patterns() {
        let aux = build_aux::<f64>(4, &AuxFamily::RotatedPairs).unwrap();
        for i in 0..256 {
            let pat = DetectionPattern::from_index(4, i);
            let a = project_ab(&aux, &pat).unwrap();
            let b = project_ab_generic(&aux, &pat).unwrap();
            assert_eq!(a.len(), b.len());
            for (c, x) in a.iter() {
                assert!((x - b.amplitude(c)).norm() < 1e-12, "pattern {pat}");
            }
        }
    }

    #[test]
    fn correction_matches_projection_phases() {
        let spec = AuxSpec::rotated_pairs(6).unwrap();
        let aux = spec.to_state::<f64>();
        for i in [0u64, 1, 777, 4242, 46655] {
            let pat = DetectionPattern::from_index(6, i);
            let c1: ModeUnitary<f64> = correction_unitary(&spec, &pat).unwrap();
            let c2 = correction_from_projection(&project_ab(&aux, &pat).unwrap()).unwrap();
            assert!(c1.max_diff(&c2) < 1e-12);
            assert!(c1.is_unitary());
        }
        let id: ModeUnitary<f64> = correction_unitary(&spec, &DetectionPattern::all_zero(6)).unwrap();
        assert!(id.max_diff(&ModeUnitary::identity(6)) < 1e-15);
    }
}
