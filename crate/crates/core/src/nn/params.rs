use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng;
use crate::vocab::Vocabulary;
use crate::world::GridSpec;

/// How fresh weights are drawn. Scales are `1/sqrt(fan_in)` in both cases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitScheme {
    /// Zero-mean uniform in `[-s, s)`.
    Symmetric,
    /// Uniform in `[0, s)`: every relu starts active on nonnegative inputs.
    #[default]
    NonNegative,
}

/// Learnable weights and Adam moments in one flat buffer.
///
/// Layout: for every word (feature index order: nouns then adjectives) a
/// Detect block `[w_0 .. w_{C-1}, b]`; then for every preposition a Shift
/// kernel of `(2W+1) * (2H+1) * (2L+1)` entries indexed by the displacement
/// `output - input`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamStore {
    grid: [usize; 3],
    channels: usize,
    prepositions: usize,
    values: Vec<f64>,
    first_moment: Vec<f64>,
    second_moment: Vec<f64>,
    step_count: u64,
}

impl ParamStore {
    pub fn zeros(vocab: &Vocabulary, grid: &GridSpec) -> Self {
        let channels = vocab.feature_width();
        let prepositions = vocab.prepositions().len();
        let dims = grid.dims();
        let len = channels * (channels + 1) + prepositions * kernel_len(dims);
        ParamStore {
            grid: dims,
            channels,
            prepositions,
            values: vec![0.0; len],
            first_moment: vec![0.0; len],
            second_moment: vec![0.0; len],
            step_count: 0,
        }
    }

    pub fn init(vocab: &Vocabulary, grid: &GridSpec, seed: u64, scheme: InitScheme) -> Self {
        let mut store = ParamStore::zeros(vocab, grid);
        let mut rng = rng::rng(seed);
        let detect_scale = 1.0 / libm::sqrt(store.channels as f64);
        let shift_scale = 1.0 / libm::sqrt(store.kernel_len() as f64);
        let detect_len = store.detect_len();
        for (i, v) in store.values.iter_mut().enumerate() {
            let scale = if i < detect_len {
                detect_scale
            } else {
                shift_scale
            };
            let u: f64 = rng.gen();
            *v = match scheme {
                InitScheme::Symmetric => (2.0 * u - 1.0) * scale,
                InitScheme::NonNegative => u * scale,
            };
        }
        store
    }

    /// Hand-set parameters that ground exactly: each Detect filter fires on
    /// its own feature, each Shift kernel is a ray along its preposition's
    /// direction.
    pub fn indicator(vocab: &Vocabulary, grid: &GridSpec) -> Self {
        let mut p = ParamStore::zeros(vocab, grid);
        let dims = grid.dims();
        for w in 0..p.channels {
            let o = w * (p.channels + 1);
            p.values[o + w] = 5.0;
        }
        let reach = dims.iter().copied().max().unwrap_or(1) as i64;
        for (i, prep) in vocab.prepositions().iter().enumerate() {
            let d = prep.direction;
            let o = p.detect_len() + i * p.kernel_len();
            for k in 1..reach {
                let disp = [d[0] as i64 * k, d[1] as i64 * k, d[2] as i64 * k];
                if disp
                    .iter()
                    .zip(dims)
                    .all(|(x, n)| (x.unsigned_abs() as usize) < n)
                {
                    let idx = kernel_index(dims, disp);
                    p.values[o + idx] = 1.0;
                }
            }
        }
        p
    }

    /// Rebuilds a store from raw buffers (used by the weight-file reader).
    pub fn from_parts(
        vocab: &Vocabulary,
        grid: &GridSpec,
        values: Vec<f64>,
        first_moment: Vec<f64>,
        second_moment: Vec<f64>,
        step_count: u64,
    ) -> Result<Self> {
        let mut store = ParamStore::zeros(vocab, grid);
        let len = store.values.len();
        if values.len() != len || first_moment.len() != len || second_moment.len() != len {
            return Err(Error::DimMismatch(
                "parameter buffers do not match the vocabulary and grid",
            ));
        }
        store.values = values;
        store.first_moment = first_moment;
        store.second_moment = second_moment;
        store.step_count = step_count;
        Ok(store)
    }

    pub fn grid_dims(&self) -> [usize; 3] {
        self.grid
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn preposition_count(&self) -> usize {
        self.prepositions
    }

    pub fn kernel_dims(&self) -> [usize; 3] {
        kernel_dims(self.grid)
    }

    pub fn kernel_len(&self) -> usize {
        kernel_len(self.grid)
    }

    fn detect_len(&self) -> usize {
        self.channels * (self.channels + 1)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn first_moment(&self) -> &[f64] {
        &self.first_moment
    }

    pub fn second_moment(&self) -> &[f64] {
        &self.second_moment
    }

    pub(crate) fn optimizer_state(&mut self) -> (&mut [f64], &mut [f64], &mut [f64], &mut u64) {
        (
            &mut self.values,
            &mut self.first_moment,
            &mut self.second_moment,
            &mut self.step_count,
        )
    }

    /// Offset of the Detect block of a word.
    pub fn detect_offset(&self, word: usize) -> Result<usize> {
        if word >= self.channels {
            return Err(Error::UnknownWord(alloc::format!("#{word}")));
        }
        Ok(word * (self.channels + 1))
    }

    /// Offset of the Shift kernel of a preposition.
    pub fn shift_offset(&self, prep: usize) -> Result<usize> {
        if prep >= self.prepositions {
            return Err(Error::UnknownWord(alloc::format!("preposition #{prep}")));
        }
        Ok(self.detect_len() + prep * self.kernel_len())
    }

    pub fn detect_filter(&self, word: usize) -> Result<(&[f64], f64)> {
        let o = self.detect_offset(word)?;
        Ok((
            &self.values[o..o + self.channels],
            self.values[o + self.channels],
        ))
    }

    pub fn detect_filter_mut(&mut self, word: usize) -> Result<(&mut [f64], &mut f64)> {
        let o = self.detect_offset(word)?;
        let (w, rest) = self.values[o..o + self.channels + 1].split_at_mut(self.channels);
        Ok((w, &mut rest[0]))
    }

    pub fn shift_kernel(&self, prep: usize) -> Result<&[f64]> {
        let o = self.shift_offset(prep)?;
        Ok(&self.values[o..o + self.kernel_len()])
    }

    pub fn shift_kernel_mut(&mut self, prep: usize) -> Result<&mut [f64]> {
        let o = self.shift_offset(prep)?;
        let k = self.kernel_len();
        Ok(&mut self.values[o..o + k])
    }

    /// Index into a Shift kernel of the displacement `d = output - input`.
    pub fn kernel_index(&self, d: [i64; 3]) -> usize {
        kernel_index(self.grid, d)
    }

    pub fn zero_gradients(&self) -> Gradients {
        Gradients {
            values: vec![0.0; self.values.len()],
        }
    }
}

pub(crate) fn kernel_dims(grid: [usize; 3]) -> [usize; 3] {
    [2 * grid[0] + 1, 2 * grid[1] + 1, 2 * grid[2] + 1]
}

pub(crate) fn kernel_len(grid: [usize; 3]) -> usize {
    let k = kernel_dims(grid);
    k[0] * k[1] * k[2]
}

pub(crate) fn kernel_index(grid: [usize; 3], d: [i64; 3]) -> usize {
    let k = kernel_dims(grid);
    let x = (d[0] + grid[0] as i64) as usize;
    let y = (d[1] + grid[1] as i64) as usize;
    let z = (d[2] + grid[2] as i64) as usize;
    (x * k[1] + y) * k[2] + z
}

/// Gradient buffer congruent with [`ParamStore::values`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub values: Vec<f64>,
}

impl Gradients {
    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .fold(0.0, |m, g| f64::max(m, libm::fabs(*g)))
    }
}
