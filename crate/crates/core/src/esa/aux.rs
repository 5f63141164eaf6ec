//! Auxiliary-state designs: which time-bins each branch places in the
//! `d - 2` auxiliary modes, and which two it leaves out.

use std::collections::BTreeSet;
use std::fmt;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{FockState, OccupationConfig};
use crate::scalar::Scalar;

/// One term of the auxiliary superposition.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuxBranch {
    /// Time-bin of the photon in auxiliary mode `x_k`.
    pub a_row: Vec<usize>,
    /// The two time-bins `(y, z)` absent from this branch.
    pub excluded: (usize, usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuxSpec {
    d: usize,
    branches: Vec<AuxBranch>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AuxFamily {
    /// Consecutive pairs `(2m, 2m+1)` rotated by one pair slot per branch;
    /// the state the single-emitter protocol produces.
    RotatedPairs,
    /// Exclusion pairs `(y, (y + shift) mod d)`.
    Shifted(usize),
    Explicit(AuxSpec),
}

impl AuxFamily {
    pub fn name(&self) -> String {
        match self {
            AuxFamily::RotatedPairs => "rotated_pairs".into(),
            AuxFamily::Shifted(i) => format!("shifted:{i}"),
            AuxFamily::Explicit(_) => "explicit".into(),
        }
    }
}

impl fmt::Display for AuxFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

pub(crate) fn check_even(d: usize) -> Result<()> {
    if d < 2 || d % 2 == 1 {
        return Err(Error::UnsupportedDimension {
            d,
            reason: "the analyzer projects onto Schmidt rank 2·(branches), so only even d ≥ 2 is supported"
                .into(),
        });
    }
    Ok(())
}

impl AuxSpec {
    pub fn new(d: usize, branches: Vec<AuxBranch>) -> Result<Self> {
        check_even(d)?;
        let spec = Self { d, branches };
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_family(d: usize, family: &AuxFamily) -> Result<Self> {
        match family {
            AuxFamily::RotatedPairs => Self::rotated_pairs(d),
            AuxFamily::Shifted(i) => Self::shifted(d, *i),
            AuxFamily::Explicit(spec) => {
                if spec.d != d {
                    return Err(Error::Dimension(format!(
                        "explicit auxiliary spec has d={}, requested d={d}",
                        spec.d
                    )));
                }
                spec.validate()?;
                Ok(spec.clone())
            }
        }
    }

    /// Branch `j` puts pair `P_{(s - j) mod d/2}` in slot `s` (modes
    /// `x_{2s}, x_{2s+1}`), where `P_m = (2m, 2m+1)`; the missing pair is
    /// `P_{(d/2 - 1 - j) mod d/2}`.
    pub fn rotated_pairs(d: usize) -> Result<Self> {
        check_even(d)?;
        let h = d / 2;
        let branches = (0..h)
            .map(|j| {
                let a_row = (0..h - 1)
                    .flat_map(|s| {
                        let m = (s + h - j) % h;
                        [2 * m, 2 * m + 1]
                    })
                    .collect();
                let m = (2 * h - 1 - j) % h;
                AuxBranch {
                    a_row,
                    excluded: (2 * m, 2 * m + 1),
                }
            })
            .collect();
        Self::new(d, branches)
    }

    /// Exclusion pairs `(y, y + shift)` along each cycle of `y ↦ y + shift`.
    ///
    /// Needs every cycle to have even length, i.e. `d / gcd(d, shift)` even.
    /// The remaining bins fill the auxiliary modes with the `x_0` photon
    /// distinct across branches.
    pub fn shifted(d: usize, shift: usize) -> Result<Self> {
        check_even(d)?;
        if shift == 0 || shift >= d {
            return Err(Error::Constraint(format!(
                "shift {shift} must lie in 1..{d}"
            )));
        }
        let cycle = d / gcd(d, shift);
        if cycle % 2 == 1 {
            return Err(Error::Constraint(format!(
                "exclusion disjointness: pairs (y, y+{shift} mod {d}) cannot partition the time-bins \
                 (cycles of odd length {cycle})"
            )));
        }
        let mut seen = vec![false; d];
        let mut pairs = Vec::with_capacity(d / 2);
        for start in 0..d {
            if seen[start] {
                continue;
            }
            let mut y = start;
            loop {
                let z = (y + shift) % d;
                if seen[y] || seen[z] {
                    break;
                }
                seen[y] = true;
                seen[z] = true;
                pairs.push((y, z));
                y = (z + shift) % d;
            }
        }
        let mut used_first = BTreeSet::new();
        let branches = pairs
            .into_iter()
            .map(|(y, z)| {
                let rest: Vec<usize> = (0..d).filter(|&t| t != y && t != z).collect();
                let first = rest.iter().copied().find(|t| !used_first.contains(t));
                let mut a_row = Vec::with_capacity(d - 2);
                if let Some(f) = first {
                    used_first.insert(f);
                    a_row.push(f);
                }
                a_row.extend(rest.iter().copied().filter(|&t| Some(t) != first));
                AuxBranch {
                    a_row,
                    excluded: (y, z),
                }
            })
            .collect();
        Self::new(d, branches)
    }

    /// Checks the permutation and exclusion constraints, naming the first
    /// violated clause.
    pub fn validate(&self) -> Result<()> {
        let d = self.d;
        check_even(d)?;
        if self.branches.len() != d / 2 {
            return Err(Error::Constraint(format!(
                "branch count: expected {} branches, found {}",
                d / 2,
                self.branches.len()
            )));
        }
        for (j, b) in self.branches.iter().enumerate() {
            if b.a_row.len() != d - 2 {
                return Err(Error::Constraint(format!(
                    "row length: branch {j} fills {} auxiliary modes, expected {}",
                    b.a_row.len(),
                    d - 2
                )));
            }
            let mut all: Vec<usize> = b.a_row.clone();
            all.push(b.excluded.0);
            all.push(b.excluded.1);
            all.sort_unstable();
            if all != (0..d).collect::<Vec<_>>() {
                return Err(Error::Constraint(format!(
                    "permutation: branch {j} (a = {:?}, y = {}, z = {}) is not a permutation of 0..{}",
                    b.a_row,
                    b.excluded.0,
                    b.excluded.1,
                    d - 1
                )));
            }
        }
        for i in 0..self.branches.len() {
            for j in 0..self.branches.len() {
                if i == j {
                    continue;
                }
                let (yi, zi) = self.branches[i].excluded;
                let (yj, zj) = self.branches[j].excluded;
                if yi == yj || zi == zj || yi == zj {
                    return Err(Error::Constraint(format!(
                        "exclusion disjointness: branches {i} and {j} exclude ({yi}, {zi}) and ({yj}, {zj})"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn branches(&self) -> &[AuxBranch] {
        &self.branches
    }

    /// Partner of time-bin `t` in its exclusion pair.
    pub fn partner(&self, t: usize) -> Option<usize> {
        self.branches.iter().find_map(|b| match b.excluded {
            (y, z) if y == t => Some(z),
            (y, z) if z == t => Some(y),
            _ => None,
        })
    }

    /// Equal-weight superposition of the branches on `d - 2` spatial modes.
    pub fn to_state<T: Scalar>(&self) -> FockState<T> {
        let amp = T::one() / T::from_usize(self.branches.len()).unwrap().sqrt();
        FockState::from_terms(
            self.d,
            self.d - 2,
            self.branches.iter().map(|b| {
                (
                    OccupationConfig::from_timebins(0, &b.a_row),
                    Complex::new(amp, T::zero()),
                )
            }),
        )
        .expect("validated spec fits its own mode space")
    }

    /// Recovers the design and per-branch amplitudes from an auxiliary
    /// state on `d - 2` modes.
    pub fn from_state<T: Scalar>(state: &FockState<T>) -> Result<(Self, Vec<Complex<T>>)> {
        let d = state.dim();
        check_even(d)?;
        if state.spatial_count() != d - 2 {
            return Err(Error::Dimension(format!(
                "auxiliary state spans {} modes, expected {}",
                state.spatial_count(),
                d - 2
            )));
        }
        let mut branches = Vec::new();
        let mut amps = Vec::new();
        for (c, &a) in state.iter() {
            let a_row = (0..d - 2)
                .map(|k| {
                    c.single_timebin(k).ok_or_else(|| {
                        Error::Constraint(format!(
                            "permutation: auxiliary mode x{k} does not hold exactly one photon in {c}"
                        ))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let missing: Vec<usize> = (0..d).filter(|t| !a_row.contains(t)).collect();
            if missing.len() != 2 {
                return Err(Error::Constraint(format!(
                    "permutation: term {c} repeats a time-bin"
                )));
            }
            branches.push(AuxBranch {
                a_row,
                excluded: (missing[0], missing[1]),
            });
            amps.push(a);
        }
        let spec = Self { d, branches };
        spec.validate()?;
        Ok((spec, amps))
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Normalized auxiliary state of the given family on `d - 2` modes.
pub fn build_aux<T: Scalar>(d: usize, family: &AuxFamily) -> Result<FockState<T>> {
    Ok(AuxSpec::from_family(d, family)?.to_state())
}
