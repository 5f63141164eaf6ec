//! Randomized invariants.

use std::collections::BTreeSet;

use num_complex::Complex;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qesa::applications::{entanglement_swap, entanglement_swap_with, swap_input, teleport};
use qesa::emitter::{verify_schedule, DelayConfig};
use qesa::esa::{
    build_aux, correction_from_projection, project_ab, Analyzer, AuxFamily, AuxSpec,
    DetectionPattern, EnumerationMode, EnumerationOptions, Recovery,
};
use qesa::{
    drop_modes, fidelity, inner_product, partial_project, qft_matrix, schmidt_rank, FockState,
    ModeUnitary, OccupationConfig, Qudit,
};

fn amp() -> impl Strategy<Value = Complex<f64>> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(re, im)| Complex::new(re, im))
}

/// Random single-photon-per-mode state on `modes` modes of dimension `d`.
fn state(d: usize, modes: usize) -> impl Strategy<Value = FockState> {
    prop::collection::vec((prop::collection::vec(0..d, modes), amp()), 1..10).prop_map(
        move |terms| {
            let mut s = FockState::zero(d, modes);
            for (bins, a) in terms {
                s.add_term(OccupationConfig::from_timebins(0, &bins), a).unwrap();
            }
            s
        },
    )
}

fn even_dim() -> impl Strategy<Value = usize> {
    prop::sample::select(vec![4usize, 6, 8])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn self_overlap_is_real_and_non_negative(s in state(3, 2)) {
        let v = inner_product(&s, &s).unwrap();
        prop_assert!(v.re >= 0.0);
        prop_assert!(v.im.abs() <= 1e-12 * (1.0 + v.re));
    }

    #[test]
    fn full_projection_equals_overlap(a in state(3, 2), b in state(3, 2)) {
        let all: BTreeSet<usize> = (0..2).collect();
        let rest = partial_project(&a, &b, &all).unwrap();
        let vac = OccupationConfig::vacuum();
        let got = rest.amplitude(&vac);
        let want = inner_product(&a, &b).unwrap();
        prop_assert!((got - want).norm() < 1e-12);
        // tensoring with a normalized spectator leaves the overlap intact
        let spectator = FockState::basis(3, 3, OccupationConfig::from_timebins(2, &[1])).unwrap();
        let ta = a.tensor(&spectator).unwrap();
        let tb = b.tensor(&spectator).unwrap();
        prop_assert!((inner_product(&ta, &tb).unwrap() - want).norm() < 1e-12);
    }

    #[test]
    fn schmidt_rank_ignores_local_phases(s in state(3, 2), phases in prop::collection::vec(0.0..6.3f64, 3)) {
        let left = BTreeSet::from([0]);
        let diag = ModeUnitary::diagonal(phases.iter().map(|&t| Complex::from_polar(1.0, t)).collect());
        let rotated = s.apply_qudit(0, &diag).unwrap();
        prop_assert_eq!(schmidt_rank(&s, &left).unwrap(), schmidt_rank(&rotated, &left).unwrap());
    }

    #[test]
    fn unitary_round_trip_is_identity(d in prop::sample::select(vec![2usize, 4, 6]), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = ModeUnitary::haar_random(d, &mut rng);
        prop_assert!(u.mul(&u.adjoint()).max_diff(&ModeUnitary::identity(d)) < 1e-12);
        let f: ModeUnitary = qft_matrix(d).unwrap();
        prop_assert!(f.adjoint().mul(&f).max_diff(&ModeUnitary::identity(d)) < 1e-12);
        let q = Qudit::random(d, &mut rng).to_fock(0, 1).unwrap();
        let back = q.apply_qudit(0, &u).unwrap().apply_qudit(0, &u.adjoint()).unwrap();
        prop_assert!((fidelity(&q, &back).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn projection_has_d_terms_of_equal_modulus(d in even_dim(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pat = DetectionPattern::random(d, &mut rng);
        let aux = build_aux::<f64>(d, &AuxFamily::RotatedPairs).unwrap();
        let proj = project_ab(&aux, &pat).unwrap();
        let df = d as f64;
        let want = 1.0 / (df.powf(df / 2.0) * (df / 2.0).sqrt());
        prop_assert_eq!(proj.len(), d);
        for (_, a) in proj.iter() {
            prop_assert!((a.norm() - want).abs() < 1e-12 * want);
        }
    }

    #[test]
    fn shifted_family_support(half in 2usize..=4, i in 1usize..8) {
        let d = 2 * half;
        prop_assume!(i < d);
        match AuxSpec::shifted(d, i) {
            Ok(spec) => {
                let pairs: BTreeSet<(usize, usize)> = spec
                    .branches()
                    .iter()
                    .map(|b| { let (y, z) = b.excluded; (y.min(z), y.max(z)) })
                    .collect();
                prop_assert_eq!(pairs.len(), d / 2);
                for &(y, z) in &pairs {
                    let gap = z - y;
                    prop_assert!(gap == i || gap == d - i);
                }
                if i == d / 2 {
                    let literal: BTreeSet<(usize, usize)> = (0..d / 2).map(|k| (k, k + i)).collect();
                    prop_assert_eq!(pairs, literal);
                }
            }
            // cycles of odd length cannot be split into disjoint pairs
            Err(_) => prop_assert!((d / num_gcd(d, i)) % 2 == 1),
        }
    }

    #[test]
    fn teleport_fidelity_is_one(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = Qudit::random(4, &mut rng);
        let r = teleport::<f64>(4, &q, &AuxFamily::RotatedPairs, EnumerationMode::Full).unwrap();
        prop_assert!((r.total_success - 0.125).abs() < 1e-12);
        prop_assert!(r.corrected_fidelity > 1.0 - 1e-9);
    }

    #[test]
    fn uncorrected_output_differs_by_diagonal_phase(d in prop::sample::select(vec![4usize, 6]), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let aux = build_aux::<f64>(d, &AuxFamily::RotatedPairs).unwrap();
        let an = Analyzer::new(&swap_input::<f64>(d).unwrap(), &aux, Recovery::PhaseOnly, None).unwrap();
        let o = an.evaluate(&DetectionPattern::random(d, &mut rng)).unwrap();
        let out = o.output.normalized().unwrap();
        let target = an.target();
        // same support with equal moduli
        prop_assert_eq!(out.len(), target.len());
        for (c, a) in target.iter() {
            prop_assert!((out.amplitude(c).norm() - a.norm()).abs() < 1e-12);
        }
        // and a diagonal unitary on the last register removes the phases
        let fix = correction_from_projection(&o.projection).unwrap();
        prop_assert!(fix.is_diagonal());
        let fixed = out.apply_qudit(out.spatial_count() - 1, &fix).unwrap();
        prop_assert!((fidelity(&fixed, target).unwrap() - 1.0).abs() < 1e-12);
    }
}

fn num_gcd(a: usize, b: usize) -> usize {
    if b == 0 { a } else { num_gcd(b, a % b) }
}

#[test]
fn sampled_patterns_are_uniform_at_d6() {
    let d = 6;
    let aux = build_aux::<f64>(d, &AuxFamily::RotatedPairs).unwrap();
    let an = Analyzer::new(&swap_input::<f64>(d).unwrap(), &aux, Recovery::PhaseOnly, None).unwrap();
    let p0 = an.evaluate(&DetectionPattern::all_zero(d)).unwrap().probability;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..1000 {
        let o = an.evaluate(&DetectionPattern::random(d, &mut rng)).unwrap();
        assert!((o.probability - p0).abs() <= 1e-9 * p0);
        assert!(o.fidelity > 1.0 - 1e-9);
    }
    assert!((p0 * 6f64.powi(6) - 2.0 / 36.0).abs() < 1e-12);
}

#[test]
fn swap_and_teleport_succeed_equally_often() {
    for d in [2, 4, 6] {
        let s = entanglement_swap::<f64>(d, &AuxFamily::RotatedPairs, EnumerationMode::Full).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(d as u64);
        let t = teleport::<f64>(d, &Qudit::random(d, &mut rng), &AuxFamily::RotatedPairs, EnumerationMode::Full)
            .unwrap();
        assert!((s.total_success - t.total_success).abs() < 1e-12, "d={d}");
    }
}

#[test]
fn pruning_does_not_move_the_success_probability() {
    let d = 4;
    let aux = build_aux::<f64>(d, &AuxFamily::RotatedPairs).unwrap();
    let pruned = entanglement_swap_with(&aux, &EnumerationOptions::default()).unwrap();
    let exact = entanglement_swap_with(&aux.with_pruning(None), &EnumerationOptions::default()).unwrap();
    assert!((pruned.total_success - exact.total_success).abs() < 1e-9);
}

#[test]
fn single_precision_swap() {
    let r = entanglement_swap::<f32>(4, &AuxFamily::RotatedPairs, EnumerationMode::Full).unwrap();
    assert!((r.total_success - 0.125).abs() < 1e-5);
    assert!(r.fidelity_min > 0.9999);
}

#[test]
fn eight_mode_schedule_is_consistent() {
    let r = verify_schedule(8, &DelayConfig::aligned(8));
    assert!(r.passed, "{:?}", r.violations);
    assert_eq!(r.branches, 4);
    assert_eq!(r.photons_per_branch, 6);
}

#[test]
fn aux_projection_discards_ports() {
    // drop_modes after a full-support projection leaves a zero-mode scalar state
    let d = 4;
    let aux = build_aux::<f64>(d, &AuxFamily::RotatedPairs).unwrap();
    let all: BTreeSet<usize> = (0..d - 2).collect();
    let s = drop_modes(&partial_project(&aux, &aux, &all).unwrap(), &all).unwrap();
    assert!((s.amplitude(&OccupationConfig::vacuum()) - Complex::new(1.0, 0.0)).norm() < 1e-12);
}
