//! Sparse multimode Fock states over (spatial mode, time-bin) pairs.
//!
//! Modes are ordered spatial-major: `(s, t) < (s', t')` iff `s < s'`, or
//! `s == s'` and `t < t'`. Every other module relies on this ordering when it
//! walks the photons of a configuration, so it is defined here only.
//!
//! Basis states are normalized Fock states `Π (a†)^n / √n! |vac⟩`. A
//! `FockState` stores ket amplitudes; a bra is represented by the ket whose
//! adjoint it is.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_complex::Complex;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ModeIndex {
    pub spatial: usize,
    pub timebin: usize,
}

impl ModeIndex {
    pub const fn new(spatial: usize, timebin: usize) -> Self {
        Self { spatial, timebin }
    }
}

/// Canonical occupation list: sorted by [`ModeIndex`], no zero counts.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OccupationConfig(Vec<(ModeIndex, u32)>);

impl OccupationConfig {
    pub fn vacuum() -> Self {
        Self(Vec::new())
    }

    /// Builds a canonical config, merging repeated modes and dropping zeros.
    pub fn from_counts<I>(counts: I) -> Self
    where
        I: IntoIterator<Item = (ModeIndex, u32)>,
    {
        let mut merged: BTreeMap<ModeIndex, u32> = BTreeMap::new();
        for (mode, n) in counts {
            *merged.entry(mode).or_default() += n;
        }
        Self(merged.into_iter().filter(|&(_, n)| n > 0).collect())
    }

    /// One photon per listed `(spatial, timebin)`.
    pub fn from_photons<I>(photons: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        Self::from_counts(
            photons
                .into_iter()
                .map(|(s, t)| (ModeIndex::new(s, t), 1)),
        )
    }

    /// Single photons where spatial mode `offset + k` holds time-bin `bins[k]`.
    pub fn from_timebins(offset: usize, bins: &[usize]) -> Self {
        Self::from_photons(bins.iter().enumerate().map(|(k, &t)| (offset + k, t)))
    }

    pub fn entries(&self) -> &[(ModeIndex, u32)] {
        &self.0
    }

    pub fn is_vacuum(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total_photons(&self) -> usize {
        self.0.iter().map(|&(_, n)| n as usize).sum()
    }

    pub fn count(&self, mode: ModeIndex) -> u32 {
        self.0
            .binary_search_by(|(m, _)| m.cmp(&mode))
            .map(|i| self.0[i].1)
            .unwrap_or(0)
    }

    /// Photons in one spatial mode as `(timebin, count)`.
    pub fn in_spatial(&self, spatial: usize) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.0
            .iter()
            .filter(move |(m, _)| m.spatial == spatial)
            .map(|&(m, n)| (m.timebin, n))
    }

    /// Time-bin of the single photon in `spatial`, if it holds exactly one.
    pub fn single_timebin(&self, spatial: usize) -> Option<usize> {
        let mut it = self.in_spatial(spatial);
        match (it.next(), it.next()) {
            (Some((t, 1)), None) => Some(t),
            _ => None,
        }
    }

    pub fn spatial_support(&self) -> BTreeSet<usize> {
        self.0.iter().map(|(m, _)| m.spatial).collect()
    }

    /// Splits into the part on spatial modes satisfying `inside` and the rest.
    pub fn split<F: Fn(usize) -> bool>(&self, inside: F) -> (Self, Self) {
        let (a, b): (Vec<_>, Vec<_>) = self.0.iter().partition(|(m, _)| inside(m.spatial));
        (Self(a), Self(b))
    }

    /// Union of two configs on disjoint spatial modes.
    pub fn join(&self, other: &Self) -> Self {
        let mut v = Vec::with_capacity(self.0.len() + other.0.len());
        v.extend_from_slice(&self.0);
        v.extend_from_slice(&other.0);
        v.sort_unstable_by_key(|&(m, _)| m);
        Self(v)
    }

    /// Relabels spatial modes; `None` from `map` drops the photons.
    pub fn map_spatial<F: Fn(usize) -> Option<usize>>(&self, map: F) -> Self {
        Self::from_counts(self.0.iter().filter_map(|&(m, n)| {
            map(m.spatial).map(|s| (ModeIndex::new(s, m.timebin), n))
        }))
    }

    /// `Π n!` over modes, the bosonic normalization of the basis state.
    pub fn factorial_product(&self) -> f64 {
        self.0
            .iter()
            .map(|&(_, n)| (1..=n).map(f64::from).product::<f64>())
            .product()
    }
}

impl fmt::Display for OccupationConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "|vac⟩");
        }
        write!(f, "|")?;
        for (i, (m, n)) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{}@s{}", m.timebin, m.spatial)?;
            if *n > 1 {
                write!(f, "^{n}")?;
            }
        }
        write!(f, "⟩")
    }
}

/// Whether a state is confined to a single photon-number sector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sectors {
    Fixed,
    /// Superpositions across photon numbers, e.g. vacuum branches during
    /// emitter simulation.
    Mixed,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FockState<T> {
    dim: usize,
    spatial_count: usize,
    terms: BTreeMap<OccupationConfig, Complex<T>>,
    sectors: Sectors,
    prune: Option<T>,
}

impl<T: Scalar> FockState<T> {
    /// The zero vector.
    pub fn zero(dim: usize, spatial_count: usize) -> Self {
        Self {
            dim,
            spatial_count,
            terms: BTreeMap::new(),
            sectors: Sectors::Fixed,
            prune: Some(T::prune_tol()),
        }
    }

    pub fn vacuum(dim: usize, spatial_count: usize) -> Self {
        let mut s = Self::zero(dim, spatial_count);
        s.terms.insert(OccupationConfig::vacuum(), Complex::one());
        s
    }

    pub fn basis(dim: usize, spatial_count: usize, config: OccupationConfig) -> Result<Self> {
        Self::from_terms(dim, spatial_count, [(config, Complex::one())])
    }

    /// Fixed-photon-number state; amplitudes of repeated configs add.
    pub fn from_terms<I>(dim: usize, spatial_count: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (OccupationConfig, Complex<T>)>,
    {
        let mut s = Self::zero(dim, spatial_count);
        for (c, a) in terms {
            s.add_term(c, a)?;
        }
        s.prune_small();
        Ok(s)
    }

    /// Like [`from_terms`](Self::from_terms) but photon numbers may differ.
    pub fn from_terms_mixed<I>(dim: usize, spatial_count: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (OccupationConfig, Complex<T>)>,
    {
        let mut s = Self::zero(dim, spatial_count);
        s.sectors = Sectors::Mixed;
        for (c, a) in terms {
            s.add_term(c, a)?;
        }
        s.prune_small();
        Ok(s)
    }

    pub fn add_term(&mut self, config: OccupationConfig, amp: Complex<T>) -> Result<()> {
        for &(m, _) in config.entries() {
            if m.spatial >= self.spatial_count || m.timebin >= self.dim {
                return Err(Error::ModeOutOfRange {
                    spatial: m.spatial,
                    timebin: m.timebin,
                    spatial_count: self.spatial_count,
                    dim: self.dim,
                });
            }
        }
        if self.sectors == Sectors::Fixed {
            // all stored terms share one photon number, so the first suffices
            if let Some(n) = self.terms.keys().next().map(OccupationConfig::total_photons) {
                let found = config.total_photons();
                if found != n {
                    return Err(Error::MixedPhotonNumber { expected: n, found });
                }
            }
        }
        *self.terms.entry(config).or_insert_with(Complex::zero) += amp;
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn spatial_count(&self) -> usize {
        self.spatial_count
    }

    pub fn sectors(&self) -> Sectors {
        self.sectors
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&OccupationConfig, &Complex<T>)> {
        self.terms.iter()
    }

    pub fn amplitude(&self, config: &OccupationConfig) -> Complex<T> {
        self.terms.get(config).copied().unwrap_or_else(Complex::zero)
    }

    /// Photon number shared by all terms; `None` for the zero state or a
    /// mixed-sector superposition.
    pub fn photon_number(&self) -> Option<usize> {
        let mut it = self.terms.keys().map(OccupationConfig::total_photons);
        let first = it.next()?;
        it.all(|n| n == first).then_some(first)
    }

    /// Union of the spatial modes touched by any term.
    pub fn spatial_support(&self) -> BTreeSet<usize> {
        self.terms
            .keys()
            .flat_map(|c| c.entries().iter().map(|(m, _)| m.spatial))
            .collect()
    }

    /// Disables (`None`) or sets the pruning threshold carried by this state.
    pub fn with_pruning(mut self, threshold: Option<T>) -> Self {
        self.prune = threshold;
        self.prune_small();
        self
    }

    pub fn pruning(&self) -> Option<T> {
        self.prune
    }

    fn prune_small(&mut self) {
        if let Some(tol) = self.prune {
            self.terms.retain(|_, a| a.norm() >= tol);
        }
    }

    fn like(&self) -> Self {
        Self {
            dim: self.dim,
            spatial_count: self.spatial_count,
            terms: BTreeMap::new(),
            sectors: self.sectors,
            prune: self.prune,
        }
    }

    pub fn norm_sqr(&self) -> T {
        self.terms.values().fold(T::zero(), |acc, a| acc + a.norm_sqr())
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - T::one()).abs() <= T::eq_tol()
    }

    pub fn scaled(&self, factor: Complex<T>) -> Self {
        let mut out = self.like();
        out.terms = self.terms.iter().map(|(c, &a)| (c.clone(), a * factor)).collect();
        out.prune_small();
        out
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_sqr();
        if n <= T::zero() {
            return Err(Error::NotNormalized {
                norm_sqr: n.to_f64_lossy(),
            });
        }
        Ok(self.scaled(Complex::new(T::one() / n.sqrt(), T::zero())))
    }

    /// Superposition `self + other`.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_space(other)?;
        let mut out = self.clone();
        if other.sectors == Sectors::Mixed {
            out.sectors = Sectors::Mixed;
        }
        for (c, &a) in &other.terms {
            out.add_term(c.clone(), a)?;
        }
        out.prune_small();
        Ok(out)
    }

    fn check_same_space(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim || self.spatial_count != other.spatial_count {
            return Err(Error::Dimension(format!(
                "(d={}, S={}) vs (d={}, S={})",
                self.dim, self.spatial_count, other.dim, other.spatial_count
            )));
        }
        Ok(())
    }

    /// Tensor product of states on disjoint spatial modes.
    ///
    /// Both factors must share `dim`; the result spans
    /// `max(S_a, S_b)` spatial modes.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::Dimension(format!(
                "tensor of d={} and d={}",
                self.dim, other.dim
            )));
        }
        let left = self.spatial_support();
        if let Some(&mode) = other.spatial_support().intersection(&left).next() {
            return Err(Error::OverlappingModes { mode });
        }
        let mut out = Self::zero(self.dim, self.spatial_count.max(other.spatial_count));
        if self.sectors == Sectors::Mixed || other.sectors == Sectors::Mixed {
            out.sectors = Sectors::Mixed;
        }
        out.prune = self.prune;
        for (ca, &a) in &self.terms {
            for (cb, &b) in &other.terms {
                *out.terms.entry(ca.join(cb)).or_insert_with(Complex::zero) += a * b;
            }
        }
        out.prune_small();
        Ok(out)
    }

    /// Moves every spatial mode `s` to `s + offset` in a space of
    /// `spatial_count` modes.
    pub fn shifted(&self, offset: usize, spatial_count: usize) -> Result<Self> {
        self.relabeled(spatial_count, |s| Some(s + offset))
    }

    /// Relabels spatial modes. Terms with photons mapped to `None` are an
    /// error; use [`partial_project`] to remove modes.
    pub fn relabeled<F: Fn(usize) -> Option<usize>>(
        &self,
        spatial_count: usize,
        map: F,
    ) -> Result<Self> {
        let mut out = self.like();
        out.spatial_count = spatial_count;
        for (c, &a) in &self.terms {
            let mapped = c.map_spatial(&map);
            if mapped.total_photons() != c.total_photons() {
                return Err(Error::Dimension(format!("relabeling drops photons of {c}")));
            }
            out.add_term(mapped, a)?;
        }
        Ok(out)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(FockStateRepr::from(self)).expect("plain data serializes")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let repr: FockStateRepr =
            serde_json::from_value(value.clone()).map_err(|e| Error::Serde(e.to_string()))?;
        repr.try_into()
    }
}

impl<T: Scalar> fmt::Display for FockState<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (c, a)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({:.6}{:+.6}i){}", a.re, a.im, c)?;
        }
        Ok(())
    }
}

/// `⟨bra|ket⟩ = Σ conj(bra_c)·ket_c`.
pub fn inner_product<T: Scalar>(bra: &FockState<T>, ket: &FockState<T>) -> Result<Complex<T>> {
    bra.check_same_space(ket)?;
    let (small, large, conj_small) = if bra.len() <= ket.len() {
        (bra, ket, true)
    } else {
        (ket, bra, false)
    };
    let mut acc = Complex::zero();
    for (c, &a) in &small.terms {
        if let Some(&b) = large.terms.get(c) {
            acc += if conj_small { a.conj() * b } else { b.conj() * a };
        }
    }
    Ok(acc)
}

/// `|⟨a|b⟩|² / (⟨a|a⟩⟨b|b⟩)`.
pub fn fidelity<T: Scalar>(a: &FockState<T>, b: &FockState<T>) -> Result<T> {
    let ov = inner_product(a, b)?;
    let den = a.norm_sqr() * b.norm_sqr();
    if den <= T::zero() {
        return Ok(T::zero());
    }
    Ok(ov.norm_sqr() / den)
}

/// Contracts `⟨bra|` over the spatial modes in `modes`, leaving an
/// unnormalized ket on the remaining modes of `ket`.
///
/// The bra's support must lie inside `modes`. Photons of `ket` on `modes`
/// are consumed; the result lives in the same `(dim, S)` space with those
/// modes empty.
pub fn partial_project<T: Scalar>(
    bra: &FockState<T>,
    ket: &FockState<T>,
    modes: &BTreeSet<usize>,
) -> Result<FockState<T>> {
    if bra.dim != ket.dim {
        return Err(Error::Dimension(format!(
            "partial projection of d={} onto d={}",
            bra.dim, ket.dim
        )));
    }
    if let Some(&mode) = bra.spatial_support().iter().find(|m| !modes.contains(m)) {
        return Err(Error::BraOutsideSubset { mode });
    }
    let mut out = ket.like();
    out.sectors = Sectors::Mixed;
    for (c, &a) in &ket.terms {
        let (on, off) = c.split(|s| modes.contains(&s));
        if let Some(&b) = bra.terms.get(&on) {
            *out.terms.entry(off).or_insert_with(Complex::zero) += b.conj() * a;
        }
    }
    out.prune_small();
    if out.photon_number().is_some() || out.is_empty() {
        out.sectors = ket.sectors;
    }
    Ok(out)
}

/// Removes the listed spatial modes (which must be empty in every term) and
/// compacts the remaining ones in order.
pub fn drop_modes<T: Scalar>(state: &FockState<T>, modes: &BTreeSet<usize>) -> Result<FockState<T>> {
    let keep: Vec<usize> = (0..state.spatial_count)
        .filter(|s| !modes.contains(s))
        .collect();
    let index: BTreeMap<usize, usize> = keep.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    state.relabeled(keep.len(), |s| index.get(&s).copied())
}

/// Schmidt rank across `left | rest`: singular values above `1e-9·σ_max`
/// (relative tolerance `T::eq_tol()`).
pub fn schmidt_rank<T: Scalar>(state: &FockState<T>, left: &BTreeSet<usize>) -> Result<usize> {
    if left.is_empty() {
        return Err(Error::Partition("left side is empty".into()));
    }
    if let Some(&m) = left.iter().find(|&&m| m >= state.spatial_count) {
        return Err(Error::Partition(format!("mode {m} out of range")));
    }
    if left.len() >= state.spatial_count {
        return Err(Error::Partition("right side is empty".into()));
    }
    if state.is_empty() {
        return Err(Error::Partition("zero state has no Schmidt decomposition".into()));
    }
    let mut rows: BTreeMap<OccupationConfig, usize> = BTreeMap::new();
    let mut cols: BTreeMap<OccupationConfig, usize> = BTreeMap::new();
    let mut entries = Vec::with_capacity(state.len());
    for (c, &a) in &state.terms {
        let (l, r) = c.split(|s| left.contains(&s));
        let nr = rows.len();
        let i = *rows.entry(l).or_insert(nr);
        let nc = cols.len();
        let j = *cols.entry(r).or_insert(nc);
        entries.push((i, j, a));
    }
    let (m, n) = (rows.len(), cols.len());
    let mut mat = vec![Complex::zero(); m * n];
    for (i, j, a) in entries {
        mat[i * n + j] = a;
    }
    let sv = linalg::singular_values(&mat, m, n);
    let max = sv.iter().copied().fold(T::zero(), T::max);
    Ok(sv.iter().filter(|&&s| s > T::eq_tol() * max).count())
}

/// Single-photon qudit `Σ α_i |i⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuditVector<T> {
    coeffs: Vec<Complex<T>>,
}

impl<T: Scalar> QuditVector<T> {
    pub fn new(coeffs: Vec<Complex<T>>) -> Self {
        Self { coeffs }
    }

    pub fn basis(dim: usize, k: usize) -> Self {
        let mut coeffs = vec![Complex::zero(); dim];
        coeffs[k] = Complex::one();
        Self { coeffs }
    }

    pub fn uniform(dim: usize) -> Self {
        let a = T::one() / T::from_usize(dim).unwrap().sqrt();
        Self {
            coeffs: vec![Complex::new(a, T::zero()); dim],
        }
    }

    /// Haar-random pure qudit from complex Gaussian entries.
    pub fn random<R: rand::Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        use rand_distr::{Distribution, StandardNormal};
        let raw: Vec<Complex<f64>> = (0..dim)
            .map(|_| Complex::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
            .collect();
        let n = raw.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        Self {
            coeffs: raw
                .into_iter()
                .map(|c| Complex::new(T::from_f64_lossy(c.re / n), T::from_f64_lossy(c.im / n)))
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    pub fn norm_sqr(&self) -> T {
        self.coeffs.iter().fold(T::zero(), |a, c| a + c.norm_sqr())
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - T::one()).abs() <= T::eq_tol()
    }

    /// The qudit as one photon in `spatial` of a `(dim, spatial_count)` space.
    pub fn to_fock(&self, spatial: usize, spatial_count: usize) -> Result<FockState<T>> {
        FockState::from_terms(
            self.dim(),
            spatial_count,
            self.coeffs
                .iter()
                .enumerate()
                .map(|(t, &a)| (OccupationConfig::from_photons([(spatial, t)]), a)),
        )
    }
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    occ: Vec<[usize; 3]>,
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct FockStateRepr {
    dim: usize,
    spatial_count: usize,
    terms: Vec<TermRepr>,
}

impl<T: Scalar> From<&FockState<T>> for FockStateRepr {
    fn from(s: &FockState<T>) -> Self {
        Self {
            dim: s.dim,
            spatial_count: s.spatial_count,
            terms: s
                .terms
                .iter()
                .map(|(c, a)| TermRepr {
                    occ: c
                        .entries()
                        .iter()
                        .map(|&(m, n)| [m.spatial, m.timebin, n as usize])
                        .collect(),
                    re: a.re.to_f64_lossy(),
                    im: a.im.to_f64_lossy(),
                })
                .collect(),
        }
    }
}

impl<T: Scalar> TryFrom<FockStateRepr> for FockState<T> {
    type Error = Error;

    fn try_from(r: FockStateRepr) -> Result<Self> {
        FockState::from_terms_mixed(
            r.dim,
            r.spatial_count,
            r.terms.into_iter().map(|t| {
                (
                    OccupationConfig::from_counts(
                        t.occ
                            .into_iter()
                            .map(|[s, tb, n]| (ModeIndex::new(s, tb), n as u32)),
                    ),
                    Complex::new(T::from_f64_lossy(t.re), T::from_f64_lossy(t.im)),
                )
            }),
        )
        .map(|mut s| {
            if s.photon_number().is_some() {
                s.sectors = Sectors::Fixed;
            }
            s
        })
    }
}
