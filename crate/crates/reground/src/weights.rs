//! Binary weight files.
//!
//! Layout, all integers and reals little-endian:
//!
//! ```text
//! magic        b"RGWT"
//! version      u32
//! vocab hash   u64
//! grid         width u64, height u64, layers u64, cell_size f64, origin 3 x f64
//! channels     u64
//! preps        u64
//! step count   u64
//! length       u64
//! values       length x f64   (Detect blocks in vocabulary order, then kernels)
//! first moment length x f64
//! second mom.  length x f64
//! ```

use std::io::{Read, Write};
use std::path::Path;

use anyhow::{bail, Context};

use reground_core::nn::ParamStore;
use reground_core::{GridSpec, Vocabulary};

const MAGIC: &[u8; 4] = b"RGWT";
pub const FORMAT_VERSION: u32 = 1;

pub fn write_weights(
    out: &mut impl Write,
    params: &ParamStore,
    vocab: &Vocabulary,
    grid: &GridSpec,
) -> anyhow::Result<()> {
    if params.grid_dims() != grid.dims() || params.channels() != vocab.feature_width() {
        bail!("parameters do not belong to this vocabulary and grid");
    }
    let mut buf = Vec::with_capacity(96 + params.len() * 24);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(&vocab.fingerprint().to_le_bytes());
    for d in grid.dims() {
        buf.extend_from_slice(&(d as u64).to_le_bytes());
    }
    buf.extend_from_slice(&grid.cell_size.to_le_bytes());
    for o in grid.origin {
        buf.extend_from_slice(&o.to_le_bytes());
    }
    buf.extend_from_slice(&(params.channels() as u64).to_le_bytes());
    buf.extend_from_slice(&(params.preposition_count() as u64).to_le_bytes());
    buf.extend_from_slice(&params.step_count().to_le_bytes());
    buf.extend_from_slice(&(params.len() as u64).to_le_bytes());
    for block in [
        params.values(),
        params.first_moment(),
        params.second_moment(),
    ] {
        for v in block {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    out.write_all(&buf)?;
    Ok(())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl Cursor<'_> {
    fn take<const N: usize>(&mut self) -> anyhow::Result<[u8; N]> {
        let end = self.at + N;
        if end > self.bytes.len() {
            bail!("weight file is truncated");
        }
        let mut a = [0u8; N];
        a.copy_from_slice(&self.bytes[self.at..end]);
        self.at = end;
        Ok(a)
    }

    fn u64(&mut self) -> anyhow::Result<u64> {
        Ok(u64::from_le_bytes(self.take()?))
    }

    fn f64(&mut self) -> anyhow::Result<f64> {
        Ok(f64::from_le_bytes(self.take()?))
    }

    fn reals(&mut self, n: usize) -> anyhow::Result<Vec<f64>> {
        (0..n).map(|_| self.f64()).collect()
    }
}

/// Reads a weight file written for `vocab`. The grid is taken from the file
/// and returned alongside the parameters.
pub fn read_weights(
    input: &mut impl Read,
    vocab: &Vocabulary,
) -> anyhow::Result<(ParamStore, GridSpec)> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    let mut c = Cursor {
        bytes: &bytes,
        at: 0,
    };
    if &c.take::<4>()? != MAGIC {
        bail!("not a weight file");
    }
    let version = u32::from_le_bytes(c.take()?);
    if version != FORMAT_VERSION {
        bail!("unsupported weight file version {version}");
    }
    let hash = c.u64()?;
    if hash != vocab.fingerprint() {
        bail!(
            "weight file was trained for a different vocabulary (hash {hash:016x}, expected {:016x})",
            vocab.fingerprint()
        );
    }
    let (w, h, l) = (c.u64()? as usize, c.u64()? as usize, c.u64()? as usize);
    let cell_size = c.f64()?;
    let mut grid = GridSpec::new(w, h, l, cell_size)?;
    grid.origin = [c.f64()?, c.f64()?, c.f64()?];
    let channels = c.u64()? as usize;
    let preps = c.u64()? as usize;
    if channels != vocab.feature_width() || preps != vocab.prepositions().len() {
        bail!("weight file layout does not match the vocabulary");
    }
    let step = c.u64()?;
    let len = c.u64()? as usize;
    let values = c.reals(len)?;
    let m = c.reals(len)?;
    let v = c.reals(len)?;
    if c.at != bytes.len() {
        bail!("trailing bytes after the weight data");
    }
    Ok((
        ParamStore::from_parts(vocab, &grid, values, m, v, step)?,
        grid,
    ))
}

pub fn save(
    path: &Path,
    params: &ParamStore,
    vocab: &Vocabulary,
    grid: &GridSpec,
) -> anyhow::Result<()> {
    let mut f =
        std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write_weights(&mut f, params, vocab, grid)?;
    f.sync_all()?;
    Ok(())
}

pub fn load(path: &Path, vocab: &Vocabulary) -> anyhow::Result<(ParamStore, GridSpec)> {
    let mut f = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_weights(&mut f, vocab).with_context(|| format!("reading {}", path.display()))
}
