use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{Result, SlfError};

/// Input camera density.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Dense,
    Intermediate,
    Sparse,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Dense, Split::Intermediate, Split::Sparse];

    /// Circles and cameras per circle kept as input on a ring rig.
    pub fn ring_counts(self) -> (usize, usize) {
        match self {
            Split::Dense => (5, 25),
            Split::Intermediate => (3, 13),
            Split::Sparse => (2, 7),
        }
    }

    /// Stride used on rigs without ring structure.
    pub fn stride(self) -> usize {
        match self {
            Split::Dense => 2,
            Split::Intermediate => 4,
            Split::Sparse => 8,
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Dense => "dense",
            Split::Intermediate => "intermediate",
            Split::Sparse => "sparse",
        })
    }
}

impl FromStr for Split {
    type Err = SlfError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dense" => Ok(Split::Dense),
            "intermediate" => Ok(Split::Intermediate),
            "sparse" => Ok(Split::Sparse),
            other => Err(SlfError::invalid(format!("unknown split `{other}`"))),
        }
    }
}

/// `count` indices out of `0..total`, centered in equal strata.
fn spread(count: usize, total: usize) -> Vec<usize> {
    (0..count)
        .map(|j| ((j as f64 + 0.5) * total as f64 / count as f64).floor() as usize)
        .collect()
}

/// Input and evaluation camera indices for a rig of `circles` rings with
/// `per_circle` cameras each, numbered ring after ring.
pub fn split_cameras(circles: usize, per_circle: usize, split: Split) -> Result<(Vec<usize>, Vec<usize>)> {
    let (c, k) = split.ring_counts();
    if circles < c || per_circle < k {
        return Err(SlfError::invalid(format!(
            "{split} split needs at least {c} circles of {k} cameras, rig has {circles} x {per_circle}"
        )));
    }
    let mut input = vec![false; circles * per_circle];
    for ring in spread(c, circles) {
        for cam in spread(k, per_circle) {
            input[ring * per_circle + cam] = true;
        }
    }
    Ok(partition(&input))
}

/// Every 2nd, 4th or 8th camera (in the given order) becomes input.
pub fn split_proportional(total: usize, split: Split) -> Result<(Vec<usize>, Vec<usize>)> {
    if total < 2 {
        return Err(SlfError::invalid("proportional split needs at least 2 cameras"));
    }
    let stride = split.stride();
    let input: Vec<bool> = (0..total).map(|i| i % stride == 0).collect();
    Ok(partition(&input))
}

fn partition(input: &[bool]) -> (Vec<usize>, Vec<usize>) {
    let (a, b): (Vec<usize>, Vec<usize>) = (0..input.len()).partition(|&i| input[i]);
    (a, b)
}
