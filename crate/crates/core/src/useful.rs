//! Admissibility of a passage-time law: the "useful" condition comparing
//! the mass at the bottom of the support with bond percolation thresholds.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};

use crate::distribution::DistributionSpec;
use crate::error::{Error, Result};

/// Bond percolation thresholds for one dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct PcEntry {
    /// Unoriented bond percolation threshold `p_c`.
    pub bond: f64,
    /// Oriented bond percolation threshold.
    pub oriented: f64,
    pub source: String,
}

/// Dimension-indexed table of critical probabilities.
///
/// The shipped defaults are literature numerics: `p_c(Z^2) = 1/2` is exact,
/// the others are numerical estimates. Every entry can be overridden.
#[derive(Clone, Debug, PartialEq)]
pub struct PcTable {
    entries: BTreeMap<usize, PcEntry>,
}

impl Default for PcTable {
    fn default() -> Self {
        let mut entries = BTreeMap::new();
        entries.insert(
            2,
            PcEntry {
                bond: 0.5,
                oriented: 0.6447,
                source: "Kesten 1980 (bond, exact); oriented bond estimate ~0.6447 (approximate)"
                    .to_string(),
            },
        );
        entries.insert(
            3,
            PcEntry {
                bond: 0.2488,
                oriented: 0.3822,
                source: "numerical estimates: bond ~0.2488, oriented bond ~0.3822 (approximate)"
                    .to_string(),
            },
        );
        PcTable { entries }
    }
}

impl PcTable {
    pub fn empty() -> Self {
        PcTable {
            entries: BTreeMap::new(),
        }
    }

    pub fn get(&self, d: usize) -> Option<&PcEntry> {
        self.entries.get(&d)
    }

    pub fn set(&mut self, d: usize, entry: PcEntry) -> Result<()> {
        if !(entry.bond > 0.0 && entry.bond < 1.0 && entry.oriented > 0.0 && entry.oriented < 1.0) {
            return Err(Error::InvalidPcTable(format!(
                "thresholds for d={d} must lie in (0,1)"
            )));
        }
        if entry.oriented < entry.bond {
            return Err(Error::InvalidPcTable(format!(
                "oriented threshold {} below unoriented {} for d={d}",
                entry.oriented, entry.bond
            )));
        }
        self.entries.insert(d, entry);
        Ok(())
    }

    pub fn dimensions(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.keys().copied()
    }
}

/// Which clause of the usefulness condition applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum UsefulClause {
    /// `r = 0`: compare `F(0)` with `p_c`.
    ZeroMinimum,
    /// `r > 0`: compare `F(r)` with the oriented threshold.
    PositiveMinimum,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct UsefulnessReport {
    pub useful: bool,
    pub clause: UsefulClause,
    /// Minimum of the support.
    pub r: f64,
    /// `F(r) = P(tau <= r)`, including any atom at `r`.
    pub f_at_r: f64,
    pub threshold: f64,
    /// `threshold - F(r)`; positive iff useful.
    pub margin: f64,
}

pub fn check_useful(spec: &DistributionSpec, d: usize, table: &PcTable) -> Result<UsefulnessReport> {
    spec.validate()?;
    let entry = table.get(d).ok_or(Error::UnknownDimension(d))?;
    let r = spec.support_min();
    let f_at_r = spec.cdf(r);
    let (clause, threshold) = if r == 0.0 {
        (UsefulClause::ZeroMinimum, entry.bond)
    } else {
        (UsefulClause::PositiveMinimum, entry.oriented)
    };
    Ok(UsefulnessReport {
        useful: f_at_r < threshold,
        clause,
        r,
        f_at_r,
        threshold,
        margin: threshold - f_at_r,
    })
}
