//! Entanglement swapping and teleportation through the analyzer, plus
//! dimension sweeps.

use std::time::Instant;

use num_complex::Complex;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::esa::{
    build_aux, AuxFamily, EnumerationMode, EnumerationOptions, ProtocolResult, Recovery,
};
use crate::fock::{FockState, OccupationConfig, QuditVector};
use crate::scalar::Scalar;

/// Largest dimension a sweep will touch unless overridden.
pub const DEFAULT_MAX_DIM: usize = 8;

/// `(1/d) Σ_{i,k} |i⟩_a |k⟩_b |i⟩_A |k⟩_B` on modes `(a, b, A, B)`.
pub fn swap_input<T: Scalar>(d: usize) -> Result<FockState<T>> {
    let amp = Complex::new(T::one() / T::from_usize(d).unwrap(), T::zero());
    FockState::from_terms(
        d,
        4,
        (0..d).flat_map(|i| {
            (0..d).map(move |k| (OccupationConfig::from_timebins(0, &[i, k, i, k]), amp))
        }),
    )
}

/// `|ψ⟩_a ⊗ (1/√d) Σ_k |k⟩_{b0} |k⟩_{b1}` on modes `(a, b0, b1)`.
pub fn teleport_input<T: Scalar>(input: &QuditVector<T>) -> Result<FockState<T>> {
    let d = input.dim();
    let s = T::one() / T::from_usize(d).unwrap().sqrt();
    let mut terms = Vec::with_capacity(d * d);
    for (p, &c) in input.coeffs().iter().enumerate() {
        for k in 0..d {
            terms.push((OccupationConfig::from_timebins(0, &[p, k, k]), c * s));
        }
    }
    FockState::from_terms(d, 3, terms)
}

fn check_protocol_dim(d: usize) -> Result<()> {
    if d < 2 || d % 2 == 1 {
        return Err(Error::UnsupportedDimension {
            d,
            reason: "the analyzer needs an even dimension".into(),
        });
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct SwapResult<T> {
    pub d: usize,
    pub total_success: T,
    pub expected: T,
    pub fidelity_min: T,
    pub fidelity_max: T,
    /// Uncorrected `(A, B)` state for the all-zero pattern, unnormalized.
    pub output_state: FockState<T>,
    /// `1/(d·√(d^d)·√(d/2))`, the modulus of every term of `output_state`.
    pub normalization: T,
    /// Whether `output_state` has exactly `d` terms `|y⟩|z⟩, |z⟩|y⟩` of
    /// modulus `normalization`.
    pub matches_closed_form: bool,
    pub protocol: ProtocolResult<T>,
}

impl<T: Scalar> SwapResult<T> {
    pub fn to_json(&self) -> serde_json::Value {
        let mut v = self.protocol.to_json();
        v["expected"] = json!(self.expected.to_f64_lossy());
        v["normalization"] = json!(self.normalization.to_f64_lossy());
        v["matches_closed_form"] = json!(self.matches_closed_form);
        v["output_state"] = self.output_state.to_json();
        v
    }
}

fn options(family: &AuxFamily, mode: EnumerationMode, recovery: Recovery) -> EnumerationOptions {
    EnumerationOptions {
        mode,
        recovery,
        family: Some(family.name()),
        ..Default::default()
    }
}

pub fn entanglement_swap<T: Scalar>(
    d: usize,
    family: &AuxFamily,
    mode: EnumerationMode,
) -> Result<SwapResult<T>> {
    check_protocol_dim(d)?;
    let aux = build_aux::<T>(d, family)?;
    entanglement_swap_with(&aux, &options(family, mode, Recovery::PhaseOnly))
}

/// Swap with a caller-supplied auxiliary state (for example one produced
/// by the emitter).
pub fn entanglement_swap_with<T: Scalar>(
    aux: &FockState<T>,
    opts: &EnumerationOptions,
) -> Result<SwapResult<T>> {
    let d = aux.dim();
    check_protocol_dim(d)?;
    let input = swap_input::<T>(d)?;
    let protocol = crate::esa::enumerate_success(&input, aux, opts)?;
    let df = T::from_usize(d).unwrap();
    let normalization = T::one()
        / (df * df.powf(df / (T::one() + T::one())) * (df / (T::one() + T::one())).sqrt());
    let output_state = protocol.reference.output.clone();
    let spec = crate::esa::AuxSpec::from_state(aux)?.0;
    let matches_closed_form = output_state.len() == d
        && spec.branches().iter().all(|b| {
            let (y, z) = b.excluded;
            [[y, z], [z, y]].iter().all(|bins| {
                let a = output_state.amplitude(&OccupationConfig::from_timebins(0, bins));
                (a.norm() - normalization).abs() <= T::eq_tol() * normalization
            })
        });
    Ok(SwapResult {
        d,
        total_success: protocol.total_success,
        expected: (T::one() + T::one()) / (df * df),
        fidelity_min: protocol.fidelity_min,
        fidelity_max: protocol.fidelity_max,
        output_state,
        normalization,
        matches_closed_form,
        protocol,
    })
}

#[derive(Clone, Debug)]
pub struct TeleportResult<T> {
    pub d: usize,
    pub input: QuditVector<T>,
    pub total_success: T,
    /// Worst fidelity with the input over the evaluated patterns.
    pub corrected_fidelity: T,
    pub protocol: ProtocolResult<T>,
}

impl<T: Scalar> TeleportResult<T> {
    pub fn to_json(&self) -> serde_json::Value {
        let mut v = self.protocol.to_json();
        v["corrected_fidelity"] = json!(self.corrected_fidelity.to_f64_lossy());
        v["input"] = json!(self
            .input
            .coeffs()
            .iter()
            .map(|c| [c.re.to_f64_lossy(), c.im.to_f64_lossy()])
            .collect::<Vec<_>>());
        v
    }
}

pub fn teleport<T: Scalar>(
    d: usize,
    input: &QuditVector<T>,
    family: &AuxFamily,
    mode: EnumerationMode,
) -> Result<TeleportResult<T>> {
    check_protocol_dim(d)?;
    if input.dim() != d {
        return Err(Error::Dimension(format!(
            "qudit of dimension {} teleported with d={d}",
            input.dim()
        )));
    }
    if !input.is_normalized() {
        return Err(Error::NotNormalized {
            norm_sqr: input.norm_sqr().to_f64_lossy(),
        });
    }
    let aux = build_aux::<T>(d, family)?;
    let state = teleport_input(input)?;
    let protocol = crate::esa::enumerate_success(&state, &aux, &options(family, mode, Recovery::PairSwap))?;
    let expected = input.to_fock(0, 1)?;
    // the analyzer's target is derived from the input; confirm it is the input
    let target_fid = crate::fock::fidelity(&protocol.target, &expected)?;
    Ok(TeleportResult {
        d,
        input: input.clone(),
        total_success: protocol.total_success,
        corrected_fidelity: protocol.fidelity_min.min(target_fid),
        protocol,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    Swap,
    Teleport,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub d: usize,
    pub p_success: f64,
    pub expected: f64,
    pub abs_error: f64,
    pub wall_time: f64,
}

/// Runs the protocol for every dimension. Teleportation uses the uniform
/// superposition as input.
pub fn sweep(
    dims: &[usize],
    protocol: Protocol,
    family: &AuxFamily,
    mode: EnumerationMode,
    max_dim: usize,
) -> Result<Vec<SweepRow>> {
    for &d in dims {
        check_protocol_dim(d)?;
        if d > max_dim {
            return Err(Error::TooLarge {
                d,
                max: max_dim,
                patterns: crate::esa::DetectionPattern::count(d),
            });
        }
    }
    dims.par_iter()
        .map(|&d| {
            let start = Instant::now();
            let p = match protocol {
                Protocol::Swap => entanglement_swap::<f64>(d, family, mode)?.total_success,
                Protocol::Teleport => {
                    teleport::<f64>(d, &QuditVector::uniform(d), family, mode)?.total_success
                }
            };
            let expected = 2.0 / (d * d) as f64;
            Ok(SweepRow {
                d,
                p_success: p,
                expected,
                abs_error: (p - expected).abs(),
                wall_time: start.elapsed().as_secs_f64(),
            })
        })
        .collect()
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from("d,p_success,expected,abs_error,wall_time\n");
    for r in rows {
        s.push_str(&format!(
            "{},{:.17e},{:.17e},{:.3e},{:.6}\n",
            r.d, r.p_success, r.expected, r.abs_error, r.wall_time
        ));
    }
    s
}
