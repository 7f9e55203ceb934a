use alloc::vec;
use alloc::vec::Vec;

use crate::world::{Cell, GridSpec};

/// A nonnegative scalar field over the `(W, H, L)` cells, flat in the same
/// x-major order as [`GridSpec::cell_index`].
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionMap {
    dims: [usize; 3],
    values: Vec<f64>,
}

impl AttentionMap {
    pub fn zeros(dims: [usize; 3]) -> Self {
        AttentionMap {
            dims,
            values: vec![0.0; dims[0] * dims[1] * dims[2]],
        }
    }

    pub fn filled(dims: [usize; 3], value: f64) -> Self {
        AttentionMap {
            dims,
            values: vec![value; dims[0] * dims[1] * dims[2]],
        }
    }

    /// Panics if `values` does not have `W * H * L` entries.
    pub fn from_values(dims: [usize; 3], values: Vec<f64>) -> Self {
        assert_eq!(values.len(), dims[0] * dims[1] * dims[2], "attention size");
        AttentionMap { dims, values }
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn index(&self, cell: Cell) -> usize {
        (cell.x * self.dims[1] + cell.y) * self.dims[2] + cell.z
    }

    pub fn get(&self, cell: Cell) -> f64 {
        self.values[self.index(cell)]
    }

    pub fn set(&mut self, cell: Cell, value: f64) {
        let i = self.index(cell);
        self.values[i] = value;
    }
}

/// Softmax distribution over cells, kept together with its logits so that
/// log-probabilities stay finite when probabilities underflow.
#[derive(Debug, Clone, PartialEq)]
pub struct CellDistribution {
    dims: [usize; 3],
    logits: Vec<f64>,
    log_norm: f64,
    probs: Vec<f64>,
}

impl CellDistribution {
    pub(crate) fn from_logits(dims: [usize; 3], logits: Vec<f64>) -> Self {
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|&a| libm::exp(a - max)).collect();
        let total: f64 = exps.iter().sum();
        let probs = exps.iter().map(|e| e / total).collect();
        CellDistribution {
            dims,
            log_norm: max + libm::log(total),
            logits,
            probs,
        }
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, cell: Cell) -> f64 {
        self.probs[self.index(cell)]
    }

    pub fn log_prob(&self, cell: Cell) -> f64 {
        self.logits[self.index(cell)] - self.log_norm
    }

    fn index(&self, cell: Cell) -> usize {
        (cell.x * self.dims[1] + cell.y) * self.dims[2] + cell.z
    }

    fn cell_at(&self, i: usize) -> Cell {
        let spec = GridSpec {
            width: self.dims[0],
            height: self.dims[1],
            layers: self.dims[2],
            cell_size: 1.0,
            origin: [0.0; 3],
        };
        spec.cell_at(i)
    }

    /// Most probable cell; the first one in flat order on ties.
    pub fn argmax(&self) -> Cell {
        let mut best = 0;
        for (i, &a) in self.logits.iter().enumerate() {
            if a > self.logits[best] {
                best = i;
            }
        }
        self.cell_at(best)
    }
}
