//! Spatial-mode unitaries: the QFT, beam-splitter netlists, and their action
//! on Fock states.
//!
//! Creation operators transform as `a†_{s,t} → Σ_{s'} U[s'][s] a†_{s',t}`;
//! time-bins are never mixed. Output port `k` of the QFT is detector `k`.
//!
//! Beam splitters use the Clements convention: on modes `(i, j)` an element
//! with parameters `(θ, φ)` acts as
//!
//! ```text
//! [ e^{iφ} cos θ   -sin θ ]
//! [ e^{iφ} sin θ    cos θ ]
//! ```
//!
//! so `θ = π/4` is a 50:50 splitter.

use std::collections::BTreeMap;

use num_complex::Complex;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::{FockState, ModeIndex, OccupationConfig};
use crate::scalar::{root_of_unity, Scalar};

pub const BEAM_SPLITTER_CONVENTION: &str =
    "clements: [[e^{i phi} cos theta, -sin theta], [e^{i phi} sin theta, cos theta]] on (i, j)";
pub const QFT_CONVENTION: &str = "U[j][k] = omega^(j k) / sqrt(d), omega = exp(+2 pi i / d)";

/// Dense `d × d` complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeUnitary<T> {
    dim: usize,
    data: Vec<Complex<T>>,
}

impl<T: Scalar> ModeUnitary<T> {
    pub fn from_rows(dim: usize, data: Vec<Complex<T>>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::Dimension(format!(
                "{} entries for a {dim}x{dim} matrix",
                data.len()
            )));
        }
        Ok(Self { dim, data })
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(vec![Complex::one(); dim])
    }

    pub fn diagonal(entries: Vec<Complex<T>>) -> Self {
        let dim = entries.len();
        let mut data = vec![Complex::zero(); dim * dim];
        for (i, e) in entries.into_iter().enumerate() {
            data[i * dim + i] = e;
        }
        Self { dim, data }
    }

    /// Maps basis vector `k` to basis vector `perm[k]`.
    pub fn permutation(perm: &[usize]) -> Self {
        let dim = perm.len();
        let mut data = vec![Complex::zero(); dim * dim];
        for (k, &p) in perm.iter().enumerate() {
            data[p * dim + k] = Complex::one();
        }
        Self { dim, data }
    }

    /// Haar-random unitary (Gram-Schmidt on complex Gaussian columns).
    pub fn haar_random<R: rand::Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        use rand_distr::{Distribution, StandardNormal};
        let mut cols: Vec<Vec<Complex<f64>>> = (0..dim)
            .map(|_| {
                (0..dim)
                    .map(|_| Complex::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
                    .collect()
            })
            .collect();
        for k in 0..dim {
            for j in 0..k {
                let (done, rest) = cols.split_at_mut(k);
                let proj: Complex<f64> = done[j]
                    .iter()
                    .zip(&rest[0])
                    .map(|(a, b)| a.conj() * b)
                    .sum();
                for (x, q) in rest[0].iter_mut().zip(&done[j]) {
                    *x -= proj * q;
                }
            }
            let n = cols[k].iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            for x in cols[k].iter_mut() {
                *x /= n;
            }
        }
        let mut data = vec![Complex::zero(); dim * dim];
        for (j, col) in cols.iter().enumerate() {
            for (i, c) in col.iter().enumerate() {
                data[i * dim + j] = Complex::new(T::from_f64_lossy(c.re), T::from_f64_lossy(c.im));
            }
        }
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> Complex<T> {
        self.data[row * self.dim + col]
    }

    pub fn rows(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        let d = self.dim;
        let mut data = vec![Complex::zero(); d * d];
        for i in 0..d {
            for j in 0..d {
                data[j * d + i] = self.data[i * d + j].conj();
            }
        }
        Self { dim: d, data }
    }

    /// `self · rhs`.
    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim);
        let d = self.dim;
        let mut data = vec![Complex::zero(); d * d];
        for i in 0..d {
            for k in 0..d {
                let a = self.data[i * d + k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..d {
                    data[i * d + j] += a * rhs.data[k * d + j];
                }
            }
        }
        Self { dim: d, data }
    }

    pub fn scaled(&self, factor: Complex<T>) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&x| x * factor).collect(),
        }
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_diff(&self, other: &Self) -> T {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(T::zero(), T::max)
    }

    /// `max |U†U - I|` entrywise.
    pub fn unitarity_deviation(&self) -> T {
        self.adjoint().mul(self).max_diff(&Self::identity(self.dim))
    }

    pub fn is_unitary(&self) -> bool {
        self.unitarity_deviation() <= T::unitary_tol()
    }

    pub fn is_diagonal(&self) -> bool {
        let d = self.dim;
        (0..d).all(|i| (0..d).all(|j| i == j || self.data[i * d + j].norm() <= T::prune_tol()))
    }

    /// Phase `γ` with `self ≈ e^{iγ}·other`, if one exists within `tol`.
    pub fn global_phase_to(&self, other: &Self, tol: T) -> Option<T> {
        let (k, pivot) = other
            .data
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().partial_cmp(&b.1.norm()).unwrap())?;
        if pivot.norm() <= tol {
            return None;
        }
        let g = self.data[k] / pivot;
        if (g.norm() - T::one()).abs() > tol {
            return None;
        }
        let g = g / g.norm();
        (self.max_diff(&other.scaled(g)) <= tol).then(|| g.arg())
    }
}

/// Spatial-mode QFT with `ω = e^{+2πi/d}`.
pub fn qft_matrix<T: Scalar>(d: usize) -> Result<ModeUnitary<T>> {
    if d < 2 {
        return Err(Error::UnsupportedDimension {
            d,
            reason: "the QFT needs at least two modes".into(),
        });
    }
    let norm = T::one() / T::from_usize(d).unwrap().sqrt();
    let mut data = Vec::with_capacity(d * d);
    for j in 0..d {
        for k in 0..d {
            data.push(root_of_unity::<T>(d, (j * k) as i64) * norm);
        }
    }
    Ok(ModeUnitary { dim: d, data })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Element<T> {
    BeamSplitter {
        modes: (usize, usize),
        theta: T,
        phi: T,
    },
    PhaseShifter {
        mode: usize,
        phase: T,
    },
    /// Passive waveguide crossing exchanging two modes.
    Crossing { modes: (usize, usize) },
}

impl<T: Scalar> Element<T> {
    /// The 2x2 (or 1x1) block acting on [`Self::modes`].
    pub fn block(&self) -> ModeUnitary<T> {
        match *self {
            Element::BeamSplitter { theta, phi, .. } => {
                let (s, c) = theta.sin_cos();
                let e = Complex::from_polar(T::one(), phi);
                let re = |x: T| Complex::new(x, T::zero());
                ModeUnitary {
                    dim: 2,
                    data: vec![e * c, re(-s), e * s, re(c)],
                }
            }
            Element::PhaseShifter { phase, .. } => ModeUnitary {
                dim: 1,
                data: vec![Complex::from_polar(T::one(), phase)],
            },
            Element::Crossing { .. } => ModeUnitary::permutation(&[1, 0]),
        }
    }

    pub fn modes(&self) -> Vec<usize> {
        match *self {
            Element::BeamSplitter { modes: (i, j), .. } | Element::Crossing { modes: (i, j) } => {
                vec![i, j]
            }
            Element::PhaseShifter { mode, .. } => vec![mode],
        }
    }

    /// The element embedded in a `d`-mode identity.
    pub fn embedded(&self, d: usize) -> ModeUnitary<T> {
        let block = self.block();
        let modes = self.modes();
        let mut m = ModeUnitary::identity(d);
        for &i in &modes {
            m.data[i * d + i] = Complex::zero();
        }
        for (bi, &i) in modes.iter().enumerate() {
            for (bj, &j) in modes.iter().enumerate() {
                m.data[i * d + j] = block.get(bi, bj);
            }
        }
        m
    }

    pub fn is_balanced_beam_splitter(&self) -> bool {
        match *self {
            Element::BeamSplitter { theta, .. } => {
                let (s, c) = theta.sin_cos();
                (s.abs() - c.abs()).abs() <= T::unitary_tol()
            }
            _ => false,
        }
    }
}

/// Ordered list of optical elements; element 0 acts first.
///
/// Composing the elements and multiplying by `e^{i·global_phase}`
/// reproduces the decomposed unitary.
#[derive(Clone, Debug, PartialEq)]
pub struct BSNetlist<T> {
    pub dim: usize,
    pub elements: Vec<Element<T>>,
    pub global_phase: T,
}

impl<T: Scalar> BSNetlist<T> {
    pub fn reconstruct(&self) -> ModeUnitary<T> {
        let mut m = ModeUnitary::identity(self.dim);
        for e in &self.elements {
            m = e.embedded(self.dim).mul(&m);
        }
        m.scaled(Complex::from_polar(T::one(), self.global_phase))
    }

    pub fn beam_splitter_count(&self) -> usize {
        self.elements
            .iter()
            .filter(|e| matches!(e, Element::BeamSplitter { .. }))
            .count()
    }

    pub fn phase_shifters(&self) -> Vec<T> {
        self.elements
            .iter()
            .filter_map(|e| match e {
                Element::PhaseShifter { phase, .. } => Some(*phase),
                _ => None,
            })
            .collect()
    }

    /// JSON: `{convention, dim, global_phase, elements: [{kind, modes, theta,
    /// phi}], reconstruction_error}`.
    pub fn to_json(&self, target: &ModeUnitary<T>) -> serde_json::Value {
        #[derive(Serialize)]
        struct El {
            kind: &'static str,
            modes: Vec<usize>,
            theta: f64,
            phi: f64,
        }
        let elements: Vec<El> = self
            .elements
            .iter()
            .map(|e| match *e {
                Element::BeamSplitter { modes, theta, phi } => El {
                    kind: "beam_splitter",
                    modes: vec![modes.0, modes.1],
                    theta: theta.to_f64_lossy(),
                    phi: phi.to_f64_lossy(),
                },
                Element::PhaseShifter { mode, phase } => El {
                    kind: "phase_shifter",
                    modes: vec![mode],
                    theta: 0.0,
                    phi: phase.to_f64_lossy(),
                },
                Element::Crossing { modes } => El {
                    kind: "crossing",
                    modes: vec![modes.0, modes.1],
                    theta: 0.0,
                    phi: 0.0,
                },
            })
            .collect();
        serde_json::json!({
            "convention": BEAM_SPLITTER_CONVENTION,
            "dim": self.dim,
            "global_phase": self.global_phase.to_f64_lossy(),
            "elements": elements,
            "beam_splitters": self.beam_splitter_count(),
            "reconstruction_error": self.reconstruct().max_diff(target).to_f64_lossy(),
        })
    }
}

/// Decomposes a unitary into beam splitters and phase shifters.
///
/// A QFT of power-of-two size gets the radix-2 butterfly network
/// (`(d/2)·log₂ d` balanced splitters, twiddle shifters, and output
/// crossings). Everything else uses triangular (Reck) nulling with
/// `d(d-1)/2` splitters at most; identity elements are omitted.
pub fn decompose<T: Scalar>(u: &ModeUnitary<T>) -> Result<BSNetlist<T>> {
    let dev = u.unitarity_deviation();
    if dev > T::unitary_tol() {
        return Err(Error::NotUnitary {
            deviation: dev.to_f64_lossy(),
        });
    }
    let d = u.dim;
    if d >= 2 && d.is_power_of_two() {
        let qft = qft_matrix::<T>(d)?;
        if let Some(g) = u.global_phase_to(&qft, T::unitary_tol()) {
            let mut net = butterfly_qft::<T>(d);
            net.global_phase = net.global_phase + g;
            if net.reconstruct().max_diff(u) <= T::unitary_tol() {
                return Ok(net);
            }
        }
    }
    Ok(reck(u))
}

/// Decimation-in-frequency QFT network for `d = 2^k`.
fn butterfly_qft<T: Scalar>(d: usize) -> BSNetlist<T> {
    let quarter = T::FRAC_PI_4();
    let pi = T::PI();
    let mut elements = Vec::new();
    let mut stages = 0usize;
    let mut half = d / 2;
    while half >= 1 {
        stages += 1;
        let mut block = 0;
        while block < d {
            for k in 0..half {
                let (i, j) = (block + k, block + k + half);
                // T(π/4, π) = -H, H the sum/difference splitter
                elements.push(Element::BeamSplitter {
                    modes: (i, j),
                    theta: quarter,
                    phi: pi,
                });
                // twiddle ω_{2h}^k on the difference port
                if k != 0 {
                    let phase = T::from_f64_lossy(
                        2.0 * std::f64::consts::PI * k as f64 / (2 * half) as f64,
                    );
                    elements.push(Element::PhaseShifter { mode: j, phase });
                }
            }
            block += 2 * half;
        }
        half /= 2;
    }
    let bits = d.trailing_zeros();
    for p in 0..d {
        let q = reverse_bits(p, bits);
        if p < q {
            elements.push(Element::Crossing { modes: (p, q) });
        }
    }
    // each stage contributes a factor -1 on every mode
    let global_phase = if stages % 2 == 1 { pi } else { T::zero() };
    BSNetlist {
        dim: d,
        elements,
        global_phase,
    }
}

fn reverse_bits(x: usize, bits: u32) -> usize {
    if bits == 0 {
        return 0;
    }
    x.reverse_bits() >> (usize::BITS - bits)
}

fn reck<T: Scalar>(u: &ModeUnitary<T>) -> BSNetlist<T> {
    let d = u.dim;
    let mut w = u.clone();
    let mut elements = Vec::new();
    let tiny = T::prune_tol();
    for r in (1..d).rev() {
        for k in 0..r {
            let (i, j) = (k, k + 1);
            let wi = w.get(r, i);
            let wj = w.get(r, j);
            if wi.norm() <= tiny {
                continue;
            }
            let (theta, phi) = if wj.norm() <= tiny {
                (T::FRAC_PI_2(), T::zero())
            } else {
                (wi.norm().atan2(wj.norm()), wi.arg() - wj.arg())
            };
            let el = Element::BeamSplitter {
                modes: (i, j),
                theta,
                phi,
            };
            // w ← w · T†
            w = w.mul(&el.embedded(d).adjoint());
            elements.push(el);
        }
    }
    for i in 0..d {
        let phase = w.get(i, i).arg();
        if phase.abs() > tiny {
            elements.push(Element::PhaseShifter { mode: i, phase });
        }
    }
    BSNetlist {
        dim: d,
        elements,
        global_phase: T::zero(),
    }
}

/// Applies `u` to the spatial modes `modes` (port `k` of `u` is
/// `modes[k]`), expanding multi-photon occupations multinomially.
pub fn apply_spatial<T: Scalar>(
    u: &ModeUnitary<T>,
    state: &FockState<T>,
    modes: &[usize],
) -> Result<FockState<T>> {
    if u.dim != modes.len() {
        return Err(Error::Dimension(format!(
            "{}-mode unitary applied to {} listed modes",
            u.dim,
            modes.len()
        )));
    }
    if let Some(&m) = modes.iter().find(|&&m| m >= state.spatial_count()) {
        return Err(Error::Dimension(format!("mode {m} outside the state")));
    }
    let port_of: BTreeMap<usize, usize> = modes.iter().enumerate().map(|(p, &m)| (m, p)).collect();
    if port_of.len() != modes.len() {
        return Err(Error::Dimension("repeated mode in the port list".into()));
    }

    let mut out: Vec<(OccupationConfig, Complex<T>)> = Vec::new();
    for (config, &amp) in state.iter() {
        let (inside, outside) = config.split(|s| port_of.contains_key(&s));
        // photons grouped by time-bin; each group transforms independently
        let mut by_bin: BTreeMap<usize, Vec<(usize, u32)>> = BTreeMap::new();
        for &(m, n) in inside.entries() {
            by_bin.entry(m.timebin).or_default().push((port_of[&m.spatial], n));
        }
        let mut partial: Vec<(Vec<(ModeIndex, u32)>, Complex<T>)> = vec![(Vec::new(), amp)];
        for (bin, ports) in by_bin {
            let expanded = expand_bin(u, &ports);
            let mut next = Vec::with_capacity(partial.len() * expanded.len());
            for (occ, a) in &partial {
                for (counts, c) in &expanded {
                    let mut o = occ.clone();
                    o.extend(
                        counts
                            .iter()
                            .enumerate()
                            .filter(|(_, &n)| n > 0)
                            .map(|(p, &n)| (ModeIndex::new(modes[p], bin), n)),
                    );
                    next.push((o, *a * c));
                }
            }
            partial = next;
        }
        for (occ, a) in partial {
            out.push((
                OccupationConfig::from_counts(occ.into_iter().chain(outside.entries().iter().copied())),
                a,
            ));
        }
    }
    let mut result = state.scaled(Complex::zero());
    for (c, a) in out {
        result.add_term(c, a)?;
    }
    Ok(result.with_pruning(state.pruning()))
}

/// Output-port distributions of one time-bin's photons, as normalized Fock
/// amplitudes keyed by per-port counts.
fn expand_bin<T: Scalar>(u: &ModeUnitary<T>, ports: &[(usize, u32)]) -> Vec<(Vec<u32>, Complex<T>)> {
    let d = u.dim;
    let mut acc: BTreeMap<Vec<u32>, Complex<T>> = BTreeMap::new();
    acc.insert(vec![0; d], Complex::one());
    let mut in_norm = 1.0f64;
    for &(p, n) in ports {
        for k in 1..=n {
            in_norm *= f64::from(k);
            let mut next: BTreeMap<Vec<u32>, Complex<T>> = BTreeMap::new();
            for (counts, c) in &acc {
                for out in 0..d {
                    let w = u.get(out, p);
                    if w.is_zero() {
                        continue;
                    }
                    let mut cn = counts.clone();
                    cn[out] += 1;
                    *next.entry(cn).or_insert_with(Complex::zero) += *c * w;
                }
            }
            acc = next;
        }
    }
    // (Π a†)|vac⟩ = Π √(m!) |m⟩
    acc.into_iter()
        .map(|(counts, c)| {
            let out_norm: f64 = counts
                .iter()
                .map(|&m| (1..=m).map(f64::from).product::<f64>())
                .product();
            let f = T::from_f64_lossy((out_norm / in_norm).sqrt());
            (counts, c * f)
        })
        .collect()
}

/// Applies a netlist element by element; each element only touches its own
/// ports.
pub fn apply_netlist<T: Scalar>(
    net: &BSNetlist<T>,
    state: &FockState<T>,
    modes: &[usize],
) -> Result<FockState<T>> {
    if net.dim != modes.len() {
        return Err(Error::Dimension(format!(
            "{}-mode netlist applied to {} listed modes",
            net.dim,
            modes.len()
        )));
    }
    let mut s = state.clone();
    for e in &net.elements {
        let ports: Vec<usize> = e.modes().iter().map(|&k| modes[k]).collect();
        s = apply_spatial(&e.block(), &s, &ports)?;
    }
    if !net.global_phase.is_zero() {
        let g = ModeUnitary::diagonal(vec![Complex::from_polar(T::one(), net.global_phase); net.dim]);
        s = apply_spatial(&g, &s, modes)?;
    }
    Ok(s)
}

impl<T: Scalar> FockState<T> {
    /// Applies a `d × d` unitary to the time-bin qudit held in `spatial`.
    ///
    /// Terms with no photon there are unchanged; more than one photon in the
    /// mode is an error.
    pub fn apply_qudit(&self, spatial: usize, u: &ModeUnitary<T>) -> Result<FockState<T>> {
        if u.dim != self.dim() {
            return Err(Error::Dimension(format!(
                "{}-level unitary on d={} qudit",
                u.dim,
                self.dim()
            )));
        }
        let mut out = self.scaled(Complex::zero());
        for (c, &a) in self.iter() {
            let n: u32 = c.in_spatial(spatial).map(|(_, n)| n).sum();
            match n {
                0 => out.add_term(c.clone(), a)?,
                1 => {
                    let t = c.single_timebin(spatial).expect("one photon");
                    let (_, rest) = c.split(|s| s == spatial);
                    for t2 in 0..self.dim() {
                        let w = u.get(t2, t);
                        if w.is_zero() {
                            continue;
                        }
                        let moved = rest.join(&OccupationConfig::from_photons([(spatial, t2)]));
                        out.add_term(moved, a * w)?;
                    }
                }
                _ => {
                    return Err(Error::Input(format!(
                        "qudit unitary on mode {spatial} holding {n} photons"
                    )))
                }
            }
        }
        Ok(out.with_pruning(self.pruning()))
    }
}
