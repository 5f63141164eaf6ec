//! Post-selection over every detection pattern.

use std::collections::BTreeSet;

use num_complex::Complex;
use num_traits::Zero;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::aux::AuxSpec;
use super::pattern::DetectionPattern;
use super::projection::{correction_from_projection, project_with_spec};
use super::{A_PORT, B_PORT};
use crate::error::{Error, Result};
use crate::fock::{drop_modes, fidelity, FockState, OccupationConfig};
use crate::interferometer::ModeUnitary;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EnumerationMode {
    /// Every one of the `d^d` patterns.
    Full,
    /// The all-zero pattern times `d^d`, cross-checked on random patterns.
    Symmetry,
}

impl EnumerationMode {
    pub fn name(self) -> &'static str {
        match self {
            EnumerationMode::Full => "full",
            EnumerationMode::Symmetry => "symmetry",
        }
    }
}

/// What Bob does after the phase correction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Recovery {
    PhaseOnly,
    /// Also exchanges `y_j ↔ z_j`; needed for teleportation, where Bob's
    /// register ends up holding the partner of the input time-bin.
    PairSwap,
}

#[derive(Clone, Debug)]
pub struct EnumerationOptions {
    pub mode: EnumerationMode,
    pub recovery: Recovery,
    /// Register that receives the correction; defaults to the last one.
    pub bob_mode: Option<usize>,
    pub symmetry_checks: usize,
    pub seed: u64,
    /// Relative tolerance of the symmetry cross-check.
    pub uniformity_tol: f64,
    pub keep_table: bool,
    pub family: Option<String>,
}

impl Default for EnumerationOptions {
    fn default() -> Self {
        Self {
            mode: EnumerationMode::Full,
            recovery: Recovery::PhaseOnly,
            bob_mode: None,
            symmetry_checks: 100,
            seed: 0,
            uniformity_tol: 1e-9,
            keep_table: false,
            family: None,
        }
    }
}

/// Everything computed for one detection pattern.
#[derive(Clone, Debug)]
pub struct PatternOutcome<T> {
    pub pattern: DetectionPattern,
    /// Bra on `(a, b)` stored as its ket.
    pub projection: FockState<T>,
    /// Unnormalized register state; its squared norm is the probability.
    pub output: FockState<T>,
    pub corrected: FockState<T>,
    pub probability: T,
    pub fidelity: T,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PatternRecord {
    pub pattern: Vec<usize>,
    pub probability: f64,
    pub fidelity: f64,
}

#[derive(Clone, Debug)]
pub struct ProtocolResult<T> {
    pub d: usize,
    pub family: String,
    pub mode: EnumerationMode,
    pub pattern_count: u128,
    pub evaluated: u64,
    pub total_success: T,
    pub failure_probability: T,
    pub fidelity_min: T,
    pub fidelity_max: T,
    pub per_pattern: Option<Vec<PatternRecord>>,
    /// The all-zero pattern, kept in full.
    pub reference: PatternOutcome<T>,
    pub target: FockState<T>,
}

impl<T: Scalar> ProtocolResult<T> {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "d": self.d,
            "family": self.family,
            "mode": self.mode.name(),
            "total_success_probability": self.total_success.to_f64_lossy(),
            "failure_probability": self.failure_probability.to_f64_lossy(),
            "pattern_count": u64::try_from(self.pattern_count).unwrap_or(u64::MAX),
            "evaluated_patterns": self.evaluated,
            "per_pattern": self.per_pattern,
            "fidelity_min": self.fidelity_min.to_f64_lossy(),
            "fidelity_max": self.fidelity_max.to_f64_lossy(),
        })
    }
}

/// Input, auxiliary state and target prepared once for many patterns.
#[derive(Clone, Debug)]
pub struct Analyzer<T> {
    d: usize,
    spec: AuxSpec,
    amps: Vec<Complex<T>>,
    /// Register state left after `⟨p q|` on `(a, b)`, indexed `p·d + q`.
    residual: Vec<Option<FockState<T>>>,
    empty: FockState<T>,
    bob_mode: usize,
    recovery: Option<ModeUnitary<T>>,
    target: FockState<T>,
    prune: Option<T>,
}

impl<T: Scalar> Analyzer<T> {
    /// `input` holds one photon on port `a` (mode 0) and one on port `b`
    /// (mode 1) in every term; modes 2.. are the registers.
    pub fn new(
        input: &FockState<T>,
        aux: &FockState<T>,
        recovery: Recovery,
        bob_mode: Option<usize>,
    ) -> Result<Self> {
        let d = input.dim();
        if aux.dim() != d {
            return Err(Error::Dimension(format!(
                "input has d={d}, auxiliary state d={}",
                aux.dim()
            )));
        }
        let (spec, amps) = AuxSpec::from_state(aux)?;
        if input.spatial_count() < 3 {
            return Err(Error::Input(
                "need ports a, b and at least one register mode".into(),
            ));
        }
        let registers = input.spatial_count() - 2;
        let bob_mode = bob_mode.unwrap_or(registers - 1);
        if bob_mode >= registers {
            return Err(Error::Input(format!(
                "register {bob_mode} does not exist ({registers} registers)"
            )));
        }
        if input.is_empty() {
            return Err(Error::Input("input state is zero".into()));
        }

        let ports: BTreeSet<usize> = [A_PORT, B_PORT].into();
        let empty = drop_modes(&input.scaled(Complex::zero()), &ports)?;
        let mut residual: Vec<Option<FockState<T>>> = vec![None; d * d];
        for (c, &amp) in input.iter() {
            let single = |s: usize| c.single_timebin(s).filter(|_| c.in_spatial(s).count() == 1);
            let (Some(p), Some(q)) = (single(A_PORT), single(B_PORT)) else {
                return Err(Error::Input(format!(
                    "term {c} does not hold exactly one photon on each of ports a and b"
                )));
            };
            let (_, rest) = c.split(|s| s == A_PORT || s == B_PORT);
            let rest: OccupationConfig = rest.map_spatial(|s| Some(s - 2));
            let slot = residual[p * d + q].get_or_insert_with(|| empty.clone());
            slot.add_term(rest, amp)?;
        }

        let recovery = match recovery {
            Recovery::PhaseOnly => None,
            Recovery::PairSwap => {
                let mut perm: Vec<usize> = (0..d).collect();
                for b in spec.branches() {
                    perm[b.excluded.0] = b.excluded.1;
                    perm[b.excluded.1] = b.excluded.0;
                }
                Some(ModeUnitary::permutation(&perm))
            }
        };

        let mut an = Self {
            d,
            spec,
            amps,
            residual,
            empty,
            bob_mode,
            recovery,
            target: FockState::zero(d, 0),
            prune: input.pruning(),
        };
        // target: the phase-free projection onto every (y, z) and (z, y)
        let mut flat = FockState::zero(d, 2).with_pruning(an.prune);
        for b in an.spec.branches() {
            let (y, z) = b.excluded;
            for bins in [[y, z], [z, y]] {
                flat.add_term(OccupationConfig::from_timebins(A_PORT, &bins), Complex::new(T::one(), T::zero()))?;
            }
        }
        let out = an.register_output(&flat)?;
        let out = match &an.recovery {
            Some(u) => out.apply_qudit(an.bob_mode, u)?,
            None => out,
        };
        if out.is_empty() {
            return Err(Error::Input(
                "input has no overlap with any successful projection".into(),
            ));
        }
        an.target = out.normalized()?;
        Ok(an)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn spec(&self) -> &AuxSpec {
        &self.spec
    }

    /// Normalized state every corrected outcome should equal.
    pub fn target(&self) -> &FockState<T> {
        &self.target
    }

    /// `⟨projection|_{ab} |input⟩` on the registers.
    fn register_output(&self, projection: &FockState<T>) -> Result<FockState<T>> {
        let mut out = self.empty.clone();
        for (c, &k) in projection.iter() {
            let (Some(p), Some(q)) = (c.single_timebin(A_PORT), c.single_timebin(B_PORT)) else {
                continue;
            };
            if let Some(r) = &self.residual[p * self.d + q] {
                for (rc, &ra) in r.iter() {
                    out.add_term(rc.clone(), k.conj() * ra)?;
                }
            }
        }
        Ok(out)
    }

    pub fn evaluate(&self, pattern: &DetectionPattern) -> Result<PatternOutcome<T>> {
        let projection = project_with_spec(&self.spec, &self.amps, pattern, self.prune)?;
        let output = self.register_output(&projection)?;
        let correction = correction_from_projection(&projection)?;
        let mut corrected = output.apply_qudit(self.bob_mode, &correction)?;
        if let Some(u) = &self.recovery {
            corrected = corrected.apply_qudit(self.bob_mode, u)?;
        }
        let probability = output.norm_sqr();
        let fidelity = fidelity(&corrected, &self.target)?;
        Ok(PatternOutcome {
            pattern: pattern.clone(),
            projection,
            output,
            corrected,
            probability,
            fidelity,
        })
    }

    pub fn enumerate(&self, opts: &EnumerationOptions) -> Result<ProtocolResult<T>> {
        let d = self.d;
        let count = DetectionPattern::count(d);
        let reference = self.evaluate(&DetectionPattern::all_zero(d))?;
        let family = opts.family.clone().unwrap_or_else(|| "explicit".into());
        let (total, fmin, fmax, evaluated, table) = match opts.mode {
            EnumerationMode::Full => {
                let n = u64::try_from(count).map_err(|_| Error::TooLarge {
                    d,
                    max: d,
                    patterns: count,
                })?;
                let chunks = n.div_ceil(CHUNK);
                let parts = (0..chunks)
                    .into_par_iter()
                    .map(|c| self.chunk(c * CHUNK, ((c + 1) * CHUNK).min(n), opts.keep_table))
                    .collect::<Result<Vec<_>>>()?;
                let mut total = T::zero();
                let mut fmin = T::infinity();
                let mut fmax = T::neg_infinity();
                let mut table = opts.keep_table.then(Vec::new);
                for part in parts {
                    total += part.sum;
                    fmin = fmin.min(part.fmin);
                    fmax = fmax.max(part.fmax);
                    if let Some(t) = table.as_mut() {
                        t.extend(part.records);
                    }
                }
                (total, fmin, fmax, n, table)
            }
            EnumerationMode::Symmetry => {
                let p0 = reference.probability;
                let mut fmin = reference.fidelity;
                let mut fmax = reference.fidelity;
                let samples: Vec<DetectionPattern> = if count <= opts.symmetry_checks as u128 {
                    (0..count as u64).map(|i| DetectionPattern::from_index(d, i)).collect()
                } else {
                    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
                    (0..opts.symmetry_checks)
                        .map(|_| DetectionPattern::random(d, &mut rng))
                        .collect()
                };
                let mut table = opts.keep_table.then(Vec::new);
                for pat in &samples {
                    let o = self.evaluate(pat)?;
                    let dev = (o.probability - p0).abs().to_f64_lossy();
                    if dev > opts.uniformity_tol * p0.to_f64_lossy() {
                        return Err(Error::NonUniformPatterns {
                            pattern: pat.detectors().to_vec(),
                            found: o.probability.to_f64_lossy(),
                            reference: p0.to_f64_lossy(),
                        });
                    }
                    fmin = fmin.min(o.fidelity);
                    fmax = fmax.max(o.fidelity);
                    if let Some(t) = table.as_mut() {
                        t.push(record(&o));
                    }
                }
                let total = p0 * T::from_f64_lossy(count as f64);
                (total, fmin, fmax, samples.len() as u64 + 1, table)
            }
        };
        Ok(ProtocolResult {
            d,
            family,
            mode: opts.mode,
            pattern_count: count,
            evaluated,
            total_success: total,
            failure_probability: T::one() - total,
            fidelity_min: fmin,
            fidelity_max: fmax,
            per_pattern: table,
            reference,
            target: self.target.clone(),
        })
    }

    fn chunk(&self, start: u64, end: u64, keep: bool) -> Result<Chunk<T>> {
        let mut part = Chunk {
            sum: T::zero(),
            fmin: T::infinity(),
            fmax: T::neg_infinity(),
            records: Vec::new(),
        };
        for i in start..end {
            let o = self.evaluate(&DetectionPattern::from_index(self.d, i))?;
            part.sum += o.probability;
            part.fmin = part.fmin.min(o.fidelity);
            part.fmax = part.fmax.max(o.fidelity);
            if keep {
                part.records.push(record(&o));
            }
        }
        Ok(part)
    }
}

/// Patterns per work item; fixed so that sums do not depend on the thread
/// count.
const CHUNK: u64 = 2048;

struct Chunk<T> {
    sum: T,
    fmin: T,
    fmax: T,
    records: Vec<PatternRecord>,
}

fn record<T: Scalar>(o: &PatternOutcome<T>) -> PatternRecord {
    PatternRecord {
        pattern: o.pattern.detectors().to_vec(),
        probability: o.probability.to_f64_lossy(),
        fidelity: o.fidelity.to_f64_lossy(),
    }
}

pub fn enumerate_success<T: Scalar>(
    input: &FockState<T>,
    aux: &FockState<T>,
    opts: &EnumerationOptions,
) -> Result<ProtocolResult<T>> {
    Analyzer::new(input, aux, opts.recovery, opts.bob_mode)?.enumerate(opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::esa::aux::{build_aux, AuxFamily};

    /// `(1/d) Σ_{i,k} |i⟩_a |k⟩_b |i⟩_A |k⟩_B` on modes (a, b, A, B).
    fn swap_input(d: usize) -> FockState<f64> {
        let amp = Complex::new(1.0 / d as f64, 0.0);
        FockState::from_terms(
            d,
            4,
            (0..d).flat_map(|i| {
                (0..d).map(move |k| (OccupationConfig::from_timebins(0, &[i, k, i, k]), amp))
            }),
        )
        .unwrap()
    }

    #[test]
    fn d4_all_zero_probability() {
        let aux = build_aux(4, &AuxFamily::RotatedPairs).unwrap();
        let an = Analyzer::new(&swap_input(4), &aux, Recovery::PhaseOnly, None).unwrap();
        let o = an.evaluate(&DetectionPattern::all_zero(4)).unwrap();
        assert!((o.probability - 1.0 / 2048.0).abs() < 1e-12 / 2048.0);
        assert!((o.fidelity - 1.0).abs() < 1e-12);
    }

    #[test]
    fn d2_total_is_half() {
        let aux = build_aux(2, &AuxFamily::RotatedPairs).unwrap();
        let r = enumerate_success(&swap_input(2), &aux, &EnumerationOptions::default()).unwrap();
        assert!((r.total_success - 0.5).abs() < 1e-12);
        assert_eq!(r.pattern_count, 4);
    }

    #[test]
    fn symmetry_mode_agrees_with_full_at_d4() {
        let aux = build_aux(4, &AuxFamily::RotatedPairs).unwrap();
        let full = enumerate_success(&swap_input(4), &aux, &EnumerationOptions::default()).unwrap();
        let sym = enumerate_success(
            &swap_input(4),
            &aux,
            &EnumerationOptions {
                mode: EnumerationMode::Symmetry,
                ..Default::default()
            },
        )
        .unwrap();
        assert!((full.total_success - sym.total_success).abs() < 1e-13);
        assert_eq!(sym.evaluated, 101);
    }

    #[test]
    fn non_uniform_input_fails_symmetry_check() {
        let d = 4;
        let aux = build_aux(d, &AuxFamily::RotatedPairs).unwrap();
        // (|01⟩ + |10⟩)_{ab} against a register that cannot tell them apart:
        // the two terms interfere with pattern-dependent phases
        let h = Complex::new(0.5f64.sqrt(), 0.0);
        let input = FockState::from_terms(
            d,
            3,
            [
                (OccupationConfig::from_timebins(0, &[0, 1, 0]), h),
                (OccupationConfig::from_timebins(0, &[1, 0, 0]), h),
            ],
        )
        .unwrap();
        let err = enumerate_success(
            &input,
            &aux,
            &EnumerationOptions {
                mode: EnumerationMode::Symmetry,
                ..Default::default()
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::NonUniformPatterns { .. }));
    }

    #[test]
    fn rejects_input_without_photons_on_a_and_b() {
        let aux = build_aux::<f64>(4, &AuxFamily::RotatedPairs).unwrap();
        let bad = FockState::basis(4, 4, OccupationConfig::from_photons([(0, 0), (0, 1), (2, 0), (3, 1)]))
            .unwrap();
        assert!(matches!(
            Analyzer::new(&bad, &aux, Recovery::PhaseOnly, None),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn table_is_lexicographic_and_deterministic() {
        let aux = build_aux(4, &AuxFamily::RotatedPairs).unwrap();
        let opts = EnumerationOptions {
            keep_table: true,
            ..Default::default()
        };
        let a = enumerate_success(&swap_input(4), &aux, &opts).unwrap();
        let b = enumerate_success(&swap_input(4), &aux, &opts).unwrap();
        let t = a.per_pattern.as_ref().unwrap();
        assert_eq!(t.len(), 256);
        assert_eq!(t[1].pattern, vec![0, 0, 0, 1]);
        assert_eq!(a.total_success.to_bits(), b.total_success.to_bits());
        assert_eq!(a.per_pattern, b.per_pattern);
    }
}
