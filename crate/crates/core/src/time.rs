use core::cmp::Ordering;
use core::fmt;

/// Extended non-negative passage time; `Infinite` is the infimum over an
/// empty set of paths.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum PassageTime {
    Finite(f64),
    Infinite,
}

impl PassageTime {
    pub fn from_distance(d: f64) -> Self {
        if d.is_finite() {
            PassageTime::Finite(d)
        } else {
            PassageTime::Infinite
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, PassageTime::Finite(_))
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            PassageTime::Finite(t) => Some(*t),
            PassageTime::Infinite => None,
        }
    }

    /// `self > bound` with `Infinite` exceeding every real.
    pub fn exceeds(&self, bound: f64) -> bool {
        match self {
            PassageTime::Finite(t) => *t > bound,
            PassageTime::Infinite => true,
        }
    }
}

impl PartialOrd for PassageTime {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (PassageTime::Finite(a), PassageTime::Finite(b)) => a.partial_cmp(b),
            (PassageTime::Finite(_), PassageTime::Infinite) => Some(Ordering::Less),
            (PassageTime::Infinite, PassageTime::Finite(_)) => Some(Ordering::Greater),
            (PassageTime::Infinite, PassageTime::Infinite) => Some(Ordering::Equal),
        }
    }
}

impl fmt::Display for PassageTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PassageTime::Finite(t) => write!(f, "{t}"),
            PassageTime::Infinite => f.write_str("inf"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infinity_dominates() {
        assert!(PassageTime::Infinite > PassageTime::Finite(1e300));
        assert!(PassageTime::Infinite.exceeds(f64::MAX));
        assert!(!PassageTime::Finite(2.0).exceeds(2.0));
        assert_eq!(PassageTime::from_distance(f64::INFINITY), PassageTime::Infinite);
    }
}
