use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `D[i]` is the detector that fired in time-bin `i`. Several time-bins may
/// share a detector.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DetectionPattern(Vec<usize>);

impl DetectionPattern {
    pub fn new(d: usize, detectors: Vec<usize>) -> Result<Self> {
        if detectors.len() != d {
            return Err(Error::Pattern(format!(
                "expected {d} detector indices, got {}",
                detectors.len()
            )));
        }
        if let Some((i, &k)) = detectors.iter().enumerate().find(|(_, &k)| k >= d) {
            return Err(Error::Pattern(format!(
                "time-bin {i} reports detector {k}, only 0..{} exist",
                d - 1
            )));
        }
        Ok(Self(detectors))
    }

    pub fn all_zero(d: usize) -> Self {
        Self(vec![0; d])
    }

    /// Lexicographic rank decoding: `D[0]` is the most significant digit.
    pub fn from_index(d: usize, mut index: u64) -> Self {
        let mut v = vec![0; d];
        for slot in v.iter_mut().rev() {
            *slot = (index % d as u64) as usize;
            index /= d as u64;
        }
        Self(v)
    }

    pub fn index(&self) -> u64 {
        let d = self.0.len() as u64;
        self.0.iter().fold(0, |acc, &k| acc * d + k as u64)
    }

    pub fn random<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Self {
        Self((0..d).map(|_| rng.random_range(0..d)).collect())
    }

    /// Parses a comma-separated list such as `0,1,0,3`.
    pub fn parse(d: usize, s: &str) -> Result<Self> {
        let v = s
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<usize>()
                    .map_err(|e| Error::Pattern(format!("'{p}': {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(d, v)
    }

    pub fn d(&self) -> usize {
        self.0.len()
    }

    pub fn detectors(&self) -> &[usize] {
        &self.0
    }

    pub fn detector(&self, timebin: usize) -> usize {
        self.0[timebin]
    }

    /// Number of patterns `d^d`.
    pub fn count(d: usize) -> u128 {
        (d as u128).pow(d as u32)
    }
}

impl fmt::Display for DetectionPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|k| k.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

impl FromStr for DetectionPattern {
    type Err = Error;

    /// Infers `d` from the number of entries.
    fn from_str(s: &str) -> Result<Self> {
        let d = s.split(',').count();
        Self::parse(d, s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_round_trip_is_lexicographic() {
        assert_eq!(DetectionPattern::from_index(4, 0).detectors(), &[0, 0, 0, 0]);
        assert_eq!(DetectionPattern::from_index(4, 1).detectors(), &[0, 0, 0, 1]);
        assert_eq!(DetectionPattern::from_index(4, 255).detectors(), &[3, 3, 3, 3]);
        for i in 0..27 {
            assert_eq!(DetectionPattern::from_index(3, i).index(), i);
        }
    }

    #[test]
    fn parse_checks_range_and_length() {
        assert_eq!(DetectionPattern::parse(4, "1, 0,0,0").unwrap().detectors(), &[1, 0, 0, 0]);
        assert!(DetectionPattern::parse(4, "1,0,0").is_err());
        assert!(DetectionPattern::parse(4, "4,0,0,0").is_err());
        assert!(DetectionPattern::parse(4, "a,0,0,0").is_err());
        let p: DetectionPattern = "0,1".parse().unwrap();
        assert_eq!(p.d(), 2);
        assert_eq!(p.to_string(), "0,1");
    }
}
