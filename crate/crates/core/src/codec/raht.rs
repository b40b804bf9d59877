//! Region-adaptive hierarchical transform.
//!
//! Bottom-up over the octree, one axis at a time (x, y, z per level): two
//! occupied siblings with values `(a, b)` and weights `(w1, w2)` become
//!
//! ```text
//! DC = ( sqrt(w1) a + sqrt(w2) b) / sqrt(w1 + w2)
//! AC = (-sqrt(w2) a + sqrt(w1) b) / sqrt(w1 + w2)
//! ```
//!
//! and a lone node passes through. The output is the root DC followed by the
//! AC coefficients in generation order (step by step, Morton order within a step).

use super::voxel::VoxelCloud;
use crate::error::{Result, SlfError};

#[derive(Debug, Clone, Copy)]
enum Node {
    Pair { w1: f64, w2: f64 },
    Single,
}

/// The pairing structure of a voxel set, shared by every attribute plane.
#[derive(Debug, Clone)]
pub struct RahtPlan {
    len: usize,
    steps: Vec<Vec<Node>>,
    /// AC weight `w1 + w2` of each emitted coefficient, in output order.
    ac_weights: Vec<f64>,
}

impl RahtPlan {
    pub fn new(vox: &VoxelCloud) -> Self {
        let mut nodes: Vec<(u64, f64)> = vox.codes().into_iter().map(|c| (c, 1.0)).collect();
        let mut steps = Vec::with_capacity(3 * vox.depth as usize);
        let mut ac_weights = Vec::new();
        for _ in 0..3 * vox.depth {
            let mut plan = Vec::with_capacity(nodes.len());
            let mut next = Vec::with_capacity(nodes.len());
            let mut i = 0;
            while i < nodes.len() {
                let (code, w1) = nodes[i];
                if i + 1 < nodes.len() && nodes[i + 1].0 >> 1 == code >> 1 {
                    let w2 = nodes[i + 1].1;
                    plan.push(Node::Pair { w1, w2 });
                    ac_weights.push(w1 + w2);
                    next.push((code >> 1, w1 + w2));
                    i += 2;
                } else {
                    plan.push(Node::Single);
                    next.push((code >> 1, w1));
                    i += 1;
                }
            }
            steps.push(plan);
            nodes = next;
        }
        Self {
            len: vox.len(),
            steps,
            ac_weights,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Weight of each output coefficient: the voxel count for the root DC,
    /// then the merged weight of each AC.
    pub fn weights(&self) -> Vec<f64> {
        let mut w = Vec::with_capacity(self.len);
        if self.len > 0 {
            w.push(self.len as f64);
        }
        w.extend_from_slice(&self.ac_weights);
        w
    }

    pub fn forward(&self, plane: &[f64]) -> Result<Vec<f64>> {
        if plane.len() != self.len {
            return Err(SlfError::invalid(format!(
                "plane has {} values for {} voxels",
                plane.len(),
                self.len
            )));
        }
        if self.len == 0 {
            return Ok(Vec::new());
        }
        let mut values = plane.to_vec();
        let mut out = vec![0.0];
        for step in &self.steps {
            let mut next = Vec::with_capacity(step.len());
            let mut src = values.iter();
            for node in step {
                match *node {
                    Node::Single => next.push(*src.next().expect("plan length")),
                    Node::Pair { w1, w2 } => {
                        let a = *src.next().expect("plan length");
                        let b = *src.next().expect("plan length");
                        let (s1, s2, s) = (w1.sqrt(), w2.sqrt(), (w1 + w2).sqrt());
                        next.push((s1 * a + s2 * b) / s);
                        out.push((-s2 * a + s1 * b) / s);
                    }
                }
            }
            values = next;
        }
        debug_assert_eq!(values.len(), 1);
        out[0] = values[0];
        Ok(out)
    }

    pub fn inverse(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        if coeffs.len() != self.len {
            return Err(SlfError::invalid(format!(
                "{} coefficients for {} voxels",
                coeffs.len(),
                self.len
            )));
        }
        if self.len == 0 {
            return Ok(Vec::new());
        }
        // AC coefficients of each step occupy a contiguous run of the output.
        let mut offsets = Vec::with_capacity(self.steps.len());
        let mut at = 1;
        for step in &self.steps {
            offsets.push(at);
            at += step.iter().filter(|n| matches!(n, Node::Pair { .. })).count();
        }
        let mut values = vec![coeffs[0]];
        for (step, &offset) in self.steps.iter().zip(&offsets).rev() {
            let mut prev = Vec::with_capacity(step.len() * 2);
            let mut ac = coeffs[offset..].iter();
            for (node, dc) in step.iter().zip(&values) {
                match *node {
                    Node::Single => prev.push(*dc),
                    Node::Pair { w1, w2 } => {
                        let h = *ac.next().expect("plan length");
                        let (s1, s2, s) = (w1.sqrt(), w2.sqrt(), (w1 + w2).sqrt());
                        prev.push((s1 * dc - s2 * h) / s);
                        prev.push((s2 * dc + s1 * h) / s);
                    }
                }
            }
            values = prev;
        }
        Ok(values)
    }
}

/// Forward transform; returns `(coefficients, weights)`.
pub fn raht_forward(vox: &VoxelCloud, plane: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let plan = RahtPlan::new(vox);
    Ok((plan.forward(plane)?, plan.weights()))
}

pub fn raht_inverse(vox: &VoxelCloud, coeffs: &[f64]) -> Result<Vec<f64>> {
    RahtPlan::new(vox).inverse(coeffs)
}
