//! Deterministic generation of the rotated-pairs auxiliary state with a
//! single quantum emitter.
//!
//! The spin has a dark level `|0⟩` and a bright level `|1⟩`; exciting it
//! emits a photon only from `|1⟩`. A control register selects which branch
//! is flipped bright before each pair of excitations, a switch tree routes
//! each photon to its auxiliary mode, and per-mode delay lines bring the
//! photons of one round into the same two time slots.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::esa::AuxSpec;
use crate::fock::{FockState, OccupationConfig};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    fn sign(self) -> i32 {
        match self {
            Outcome::Plus => 1,
            Outcome::Minus => -1,
        }
    }
}

/// Optical switches needed to route to `d - 2` modes: a full binary tree.
pub fn switch_count(d: usize) -> usize {
    (d.saturating_sub(2)).next_power_of_two() - 1
}

/// `ceil(log2(d/2))`.
pub fn control_qubits(d: usize) -> usize {
    let h = d / 2;
    if h <= 1 {
        0
    } else {
        (usize::BITS - (h - 1).leading_zeros()) as usize
    }
}

/// Switch settings from the root to leaf `mode`; switches are numbered in
/// heap order (root 0, children `2i+1`, `2i+2`).
pub fn routing_path(d: usize, mode: usize) -> Vec<(usize, u8)> {
    let leaves = (d.saturating_sub(2)).next_power_of_two();
    let depth = leaves.trailing_zeros();
    let mut node = 0usize;
    let mut path = Vec::with_capacity(depth as usize);
    for level in (0..depth).rev() {
        let bit = ((mode >> level) & 1) as u8;
        path.push((node, bit));
        node = 2 * node + 1 + bit as usize;
    }
    path
}

/// Per-mode delay in time-bin units.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DelayConfig(Vec<i64>);

impl DelayConfig {
    /// Mode pair `(x_{2s}, x_{2s+1})` waits `2(d/2 - 2 - s)` bins, so every
    /// slot of a round lands at the time of the last slot.
    pub fn aligned(d: usize) -> Self {
        let h = d / 2;
        Self(
            (0..d.saturating_sub(2))
                .map(|k| 2 * (h as i64 - 2 - (k / 2) as i64))
                .collect(),
        )
    }

    pub fn new(delays: Vec<i64>) -> Self {
        Self(delays)
    }

    pub fn delays(&self) -> &[i64] {
        &self.0
    }

    pub fn get(&self, mode: usize) -> i64 {
        self.0[mode]
    }

    pub fn set(&mut self, mode: usize, delay: i64) {
        self.0[mode] = delay;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Emission {
    pub raw_bin: usize,
    pub spatial_mode: usize,
}

/// One term of the joint control ⊗ spin ⊗ photons state.
#[derive(Clone, Debug)]
pub struct EmitterTerm<T> {
    pub control: usize,
    pub bright: bool,
    pub photons: Vec<Emission>,
    pub amplitude: Complex<T>,
}

#[derive(Clone, Debug)]
pub struct EmitterState<T> {
    pub d: usize,
    pub terms: Vec<EmitterTerm<T>>,
}

impl<T: Scalar> EmitterState<T> {
    /// Raw emissions as a Fock state, one term per joint term; vacuum and
    /// partially emitted branches make it photon-number mixed.
    pub fn photonic_state(&self) -> Result<FockState<T>> {
        FockState::from_terms_mixed(
            self.d,
            self.d.saturating_sub(2),
            self.terms.iter().map(|t| {
                (
                    OccupationConfig::from_photons(t.photons.iter().map(|e| (e.spatial_mode, e.raw_bin))),
                    t.amplitude,
                )
            }),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScheduleEntry {
    pub step: usize,
    pub control_branch: Option<usize>,
    pub spin_op: &'static str,
    pub raw_bin: Option<usize>,
    pub spatial_mode: Option<usize>,
    pub delay_applied: Option<i64>,
    pub routing: Vec<(usize, u8)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Relabel {
    pub arrival: i64,
    pub timebin: usize,
}

#[derive(Clone, Debug)]
pub struct EmitterRun<T> {
    pub d: usize,
    pub state: FockState<T>,
    pub schedule: Vec<ScheduleEntry>,
    pub relabels: Vec<Relabel>,
    pub outcomes: Vec<Outcome>,
    /// Probability of the recorded measurement outcome.
    pub outcome_probability: T,
    pub switch_count: usize,
    pub control_qubits: usize,
}

impl<T> EmitterRun<T> {
    /// One JSON object per line.
    pub fn schedule_jsonl(&self) -> String {
        self.schedule
            .iter()
            .map(|e| serde_json::to_string(e).expect("plain data serializes") + "\n")
            .collect()
    }
}

#[derive(Clone, Copy, Debug)]
enum Op {
    Flip { branch: Option<usize> },
    Excite { raw_bin: usize, mode: usize },
}

struct Simulation<T> {
    state: EmitterState<T>,
    schedule: Vec<ScheduleEntry>,
    violations: Vec<String>,
}

impl<T: Scalar> Simulation<T> {
    fn run(d: usize, init: Vec<EmitterTerm<T>>, ops: &[(Op, Option<usize>)], delays: &DelayConfig) -> Self {
        let mut sim = Self {
            state: EmitterState { d, terms: init },
            schedule: Vec::new(),
            violations: Vec::new(),
        };
        for (step, &(op, branch)) in ops.iter().enumerate() {
            match op {
                Op::Flip { branch: target } => {
                    for t in &mut sim.state.terms {
                        if target.is_none_or(|j| t.control == j) {
                            t.bright = !t.bright;
                        }
                    }
                    sim.schedule.push(ScheduleEntry {
                        step,
                        control_branch: target,
                        spin_op: "flip",
                        raw_bin: None,
                        spatial_mode: None,
                        delay_applied: None,
                        routing: Vec::new(),
                    });
                }
                Op::Excite { raw_bin, mode } => {
                    if let Some(j) = branch {
                        let bright: BTreeSet<usize> = sim
                            .state
                            .terms
                            .iter()
                            .filter(|t| t.bright)
                            .map(|t| t.control)
                            .collect();
                        if bright != BTreeSet::from([j]) {
                            sim.violations.push(format!(
                                "step {step}: excitation meant for branch {j} finds branches {bright:?} bright"
                            ));
                        }
                    }
                    for t in &mut sim.state.terms {
                        if t.bright {
                            t.photons.push(Emission {
                                raw_bin,
                                spatial_mode: mode,
                            });
                        }
                    }
                    sim.schedule.push(ScheduleEntry {
                        step,
                        control_branch: branch,
                        spin_op: "excite",
                        raw_bin: Some(raw_bin),
                        spatial_mode: Some(mode),
                        delay_applied: Some(delays.get(mode)),
                        routing: routing_path(d, mode),
                    });
                }
            }
        }
        sim
    }
}

fn round_start(d: usize, r: usize) -> usize {
    r * (d - 2)
}

/// Excitation plan for general even `d`: round `r` emits pair
/// `(2r, 2r+1)` for every branch that holds it, slot by slot, longest delay
/// first.
fn general_plan(d: usize) -> Vec<(Op, Option<usize>)> {
    let h = d / 2;
    let mut ops = Vec::new();
    for r in 0..h {
        for s in 0..h - 1 {
            let j = (s + h - r % h) % h;
            let raw = round_start(d, r) + 2 * s;
            ops.push((Op::Flip { branch: Some(j) }, Some(j)));
            ops.push((Op::Excite { raw_bin: raw, mode: 2 * s }, Some(j)));
            ops.push((Op::Excite { raw_bin: raw + 1, mode: 2 * s + 1 }, Some(j)));
            ops.push((Op::Flip { branch: Some(j) }, Some(j)));
        }
    }
    ops
}

/// Arrival time of round `r`'s photons under the aligned delays, mapped to
/// the logical pair `(2r, 2r+1)`.
fn relabel_table(d: usize) -> Vec<Relabel> {
    (0..d / 2)
        .flat_map(|r| {
            (0..2).map(move |e| Relabel {
                arrival: (round_start(d, r) + d - 4 + e) as i64,
                timebin: 2 * r + e,
            })
        })
        .collect()
}

/// Applies delays and the relabeling; errors name the step and mode.
fn arrival_configs<T: Scalar>(
    sim: &Simulation<T>,
    delays: &DelayConfig,
    table: &[Relabel],
) -> std::result::Result<Vec<(usize, Vec<Option<usize>>)>, String> {
    let map: BTreeMap<i64, usize> = table.iter().map(|r| (r.arrival, r.timebin)).collect();
    let d = sim.state.d;
    let mut out = Vec::new();
    for t in &sim.state.terms {
        let mut bins = vec![None; d - 2];
        for e in &t.photons {
            let delay = delays.get(e.spatial_mode);
            if delay < 0 {
                return Err(format!(
                    "x{}: negative delay {delay}",
                    e.spatial_mode
                ));
            }
            let arrival = e.raw_bin as i64 + delay;
            let step = sim
                .schedule
                .iter()
                .find(|s| s.raw_bin == Some(e.raw_bin) && s.spatial_mode == Some(e.spatial_mode))
                .map_or(0, |s| s.step);
            let Some(&bin) = map.get(&arrival) else {
                return Err(format!(
                    "step {step}: photon on x{} emitted at {} arrives at {arrival}, outside every logical time-bin (delay on x{})",
                    e.spatial_mode, e.raw_bin, e.spatial_mode
                ));
            };
            if bins[e.spatial_mode].replace(bin).is_some() {
                return Err(format!(
                    "step {step}: second photon in x{} for branch {}",
                    e.spatial_mode, t.control
                ));
            }
        }
        out.push((t.control, bins));
    }
    Ok(out)
}

fn plus_terms<T: Scalar>(h: usize) -> Vec<EmitterTerm<T>> {
    let amp = Complex::new(T::one() / T::from_usize(h).unwrap().sqrt(), T::zero());
    (0..h)
        .map(|j| EmitterTerm {
            control: j,
            bright: false,
            photons: Vec::new(),
            amplitude: amp,
        })
        .collect()
}

/// The four-excitation sequence for `d = 4` with the spin itself as the
/// which-pair register; `outcome` is the spin's X-basis result.
pub fn generate_d4<T: Scalar>(outcome: Outcome) -> Result<EmitterRun<T>> {
    let d = 4;
    let h = Complex::new(T::one() / (T::one() + T::one()).sqrt(), T::zero());
    let init = vec![
        EmitterTerm { control: 0, bright: false, photons: Vec::new(), amplitude: h },
        EmitterTerm { control: 0, bright: true, photons: Vec::new(), amplitude: h },
    ];
    let ops = [
        (Op::Excite { raw_bin: 0, mode: 0 }, None),
        (Op::Excite { raw_bin: 1, mode: 1 }, None),
        (Op::Flip { branch: None }, None),
        (Op::Excite { raw_bin: 2, mode: 0 }, None),
        (Op::Excite { raw_bin: 3, mode: 1 }, None),
    ];
    let delays = DelayConfig::aligned(d);
    let mut sim = Simulation::run(d, init, &ops, &delays);
    sim.schedule.push(ScheduleEntry {
        step: ops.len(),
        control_branch: None,
        spin_op: "measure_x",
        raw_bin: None,
        spatial_mode: None,
        delay_applied: None,
        routing: Vec::new(),
    });
    let table = relabel_table(d);
    let configs = arrival_configs(&sim, &delays, &table).map_err(Error::Schedule)?;
    // ⟨±|_s: dark contributes 1/√2, bright ±1/√2
    let mut terms = Vec::new();
    for (t, (_, bins)) in sim.state.terms.iter().zip(configs) {
        let sign = if t.bright { outcome.sign() } else { 1 };
        let amp = t.amplitude * h * T::from_i32(sign).unwrap();
        terms.push((config_of(&bins)?, amp));
    }
    finish(d, terms, sim.schedule, table, vec![outcome])
}

fn config_of(bins: &[Option<usize>]) -> Result<OccupationConfig> {
    let b = bins
        .iter()
        .enumerate()
        .map(|(k, b)| b.ok_or_else(|| Error::Schedule(format!("x{k} received no photon"))))
        .collect::<Result<Vec<_>>>()?;
    Ok(OccupationConfig::from_timebins(0, &b))
}

fn finish<T: Scalar>(
    d: usize,
    terms: Vec<(OccupationConfig, Complex<T>)>,
    schedule: Vec<ScheduleEntry>,
    relabels: Vec<Relabel>,
    outcomes: Vec<Outcome>,
) -> Result<EmitterRun<T>> {
    let raw = FockState::from_terms(d, d - 2, terms)?;
    let p = raw.norm_sqr();
    if p.is_zero() {
        return Err(Error::Schedule("measurement outcome has zero probability".into()));
    }
    let state = raw.normalized()?;
    AuxSpec::from_state(&state)?;
    Ok(EmitterRun {
        d,
        state,
        schedule,
        relabels,
        outcomes,
        outcome_probability: p,
        switch_count: switch_count(d),
        control_qubits: control_qubits(d),
    })
}

/// Full protocol for even `d ≥ 4`. `outcomes` are the X-basis results of
/// the control qubits (missing entries count as `Plus`); branch `j` picks
/// up the sign `(-1)^{popcount(j & o)}`.
pub fn generate<T: Scalar>(d: usize, outcomes: &[Outcome]) -> Result<EmitterRun<T>> {
    generate_with(d, outcomes, &DelayConfig::aligned(d))
}

pub fn generate_with<T: Scalar>(
    d: usize,
    outcomes: &[Outcome],
    delays: &DelayConfig,
) -> Result<EmitterRun<T>> {
    if d < 4 || d % 2 == 1 {
        return Err(Error::UnsupportedDimension {
            d,
            reason: "the emitter protocol needs an even d ≥ 4".into(),
        });
    }
    if delays.delays().len() != d - 2 {
        return Err(Error::Schedule(format!(
            "{} delays for {} modes",
            delays.delays().len(),
            d - 2
        )));
    }
    let m = control_qubits(d);
    let mut outcomes = outcomes.to_vec();
    outcomes.resize(m.max(outcomes.len()), Outcome::Plus);
    let obits = outcomes
        .iter()
        .take(m)
        .enumerate()
        .fold(0usize, |acc, (i, o)| acc | (usize::from(*o == Outcome::Minus) << i));

    let plan = general_plan(d);
    let mut sim = Simulation::run(d, plus_terms::<T>(d / 2), &plan, delays);
    if let Some(v) = sim.violations.first() {
        return Err(Error::Schedule(v.clone()));
    }
    if sim.state.terms.iter().any(|t| t.bright) {
        return Err(Error::Schedule("spin left bright at the end of the sequence".into()));
    }
    sim.schedule.push(ScheduleEntry {
        step: plan.len(),
        control_branch: None,
        spin_op: "measure_control_x",
        raw_bin: None,
        spatial_mode: None,
        delay_applied: None,
        routing: Vec::new(),
    });
    let table = relabel_table(d);
    let configs = arrival_configs(&sim, delays, &table).map_err(Error::Schedule)?;
    let proj = T::one() / T::from_usize(1 << m).unwrap().sqrt();
    let mut terms = Vec::new();
    for (t, (j, bins)) in sim.state.terms.iter().zip(configs) {
        let sign = if (j & obits).count_ones() % 2 == 1 { -T::one() } else { T::one() };
        terms.push((config_of(&bins)?, t.amplitude * proj * sign));
    }
    outcomes.truncate(m);
    finish(d, terms, sim.schedule, table, outcomes)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScheduleReport {
    pub d: usize,
    pub passed: bool,
    pub branches: usize,
    pub photons_per_branch: usize,
    pub violations: Vec<String>,
}

/// Replays the schedule with the given delays and checks that each branch
/// lands on exactly its rotated-pairs row with distinct time-bins, and that
/// only the addressed branch is bright at every excitation.
pub fn verify_schedule(d: usize, delays: &DelayConfig) -> ScheduleReport {
    let mut report = ScheduleReport {
        d,
        passed: false,
        branches: d / 2,
        photons_per_branch: d.saturating_sub(2),
        violations: Vec::new(),
    };
    let spec = match AuxSpec::rotated_pairs(d) {
        Ok(s) if d >= 4 => s,
        _ => {
            report.violations.push(format!("d={d}: the protocol needs an even d ≥ 4"));
            return report;
        }
    };
    if delays.delays().len() != d - 2 {
        report
            .violations
            .push(format!("{} delays for {} modes", delays.delays().len(), d - 2));
        return report;
    }
    let sim = Simulation::run(d, plus_terms::<f64>(d / 2), &general_plan(d), delays);
    report.violations.extend(sim.violations.iter().cloned());
    match arrival_configs(&sim, delays, &relabel_table(d)) {
        Err(e) => report.violations.push(e),
        Ok(configs) => {
            for (j, bins) in configs {
                let want = &spec.branches()[j].a_row;
                let got: Vec<usize> = bins.iter().map(|b| b.unwrap_or(usize::MAX)).collect();
                let distinct: BTreeSet<_> = got.iter().collect();
                if distinct.len() != got.len() {
                    report.violations.push(format!("branch {j}: repeated time-bin in {got:?}"));
                }
                if &got != want {
                    let bad: Vec<String> = (0..d - 2)
                        .filter(|&k| got[k] != want[k])
                        .map(|k| format!("x{k}"))
                        .collect();
                    report.violations.push(format!(
                        "branch {j}: got {got:?}, expected {want:?} (mis-routed {})",
                        bad.join(", ")
                    ));
                }
            }
        }
    }
    report.passed = report.violations.is_empty();
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::esa::{build_aux, AuxFamily};
    use crate::fock::fidelity;

    #[test]
    fn counts() {
        assert_eq!(switch_count(4), 1);
        assert_eq!(switch_count(6), 3);
        assert_eq!(switch_count(8), 7);
        assert_eq!(switch_count(10), 7);
        assert_eq!(control_qubits(4), 1);
        assert_eq!(control_qubits(6), 2);
        assert_eq!(control_qubits(8), 2);
        assert_eq!(control_qubits(10), 3);
    }

    #[test]
    fn routing_paths_are_distinct_leaves() {
        let paths: BTreeSet<_> = (0..6).map(|k| routing_path(8, k)).collect();
        assert_eq!(paths.len(), 6);
        assert_eq!(routing_path(8, 0), vec![(0, 0), (1, 0), (3, 0)]);
        assert_eq!(routing_path(4, 1), vec![(0, 1)]);
    }

    #[test]
    fn d4_signs() {
        let h = 1.0 / 2f64.sqrt();
        for (o, s) in [(Outcome::Plus, 1.0), (Outcome::Minus, -1.0)] {
            let r = generate_d4::<f64>(o).unwrap();
            let a = r.state.amplitude(&OccupationConfig::from_timebins(0, &[0, 1]));
            let b = r.state.amplitude(&OccupationConfig::from_timebins(0, &[2, 3]));
            assert!((a.re - h).abs() < 1e-15);
            assert!((b.re - s * h).abs() < 1e-15);
            assert!((r.outcome_probability - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn general_matches_build_aux() {
        for d in [4, 6, 8] {
            let r = generate::<f64>(d, &[]).unwrap();
            let aux = build_aux::<f64>(d, &AuxFamily::RotatedPairs).unwrap();
            assert!((fidelity(&r.state, &aux).unwrap() - 1.0).abs() < 1e-12, "d={d}");
            assert!(verify_schedule(d, &DelayConfig::aligned(d)).passed);
        }
    }

    #[test]
    fn corrupted_delay_names_x0() {
        for d in [4, 6, 8] {
            let mut delays = DelayConfig::aligned(d);
            delays.set(0, delays.get(0) - 1);
            let rep = verify_schedule(d, &delays);
            assert!(!rep.passed);
            assert!(rep.violations.iter().any(|v| v.contains("x0")), "{:?}", rep.violations);
        }
    }

    #[test]
    fn schedule_log_is_json_lines() {
        let r = generate::<f64>(6, &[]).unwrap();
        let text = r.schedule_jsonl();
        let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        for key in ["step", "control_branch", "spin_op", "raw_bin", "spatial_mode", "delay_applied"] {
            assert!(first.get(key).is_some(), "{key}");
        }
        assert_eq!(text.lines().count(), r.schedule.len());
    }

    #[test]
    fn intermediate_state_mixes_photon_numbers() {
        let d = 6;
        let plan = general_plan(d);
        let sim = Simulation::run(d, plus_terms::<f64>(3), &plan[..2], &DelayConfig::aligned(d));
        let st = sim.state.photonic_state().unwrap();
        assert!(st.photon_number().is_none());
        for t in &sim.state.terms {
            assert!((t.amplitude.norm() - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        }
    }
}
