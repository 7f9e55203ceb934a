use alloc::vec;
use alloc::vec::Vec;

use super::attention::{AttentionMap, CellDistribution};
use super::params::ParamStore;
use crate::error::{Error, Result};
use crate::world::GridTensor;

pub(crate) fn relu(pre: &[f64]) -> Vec<f64> {
    pre.iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect()
}

fn grid_dims(grid: &GridTensor) -> [usize; 3] {
    let d = grid.dims();
    [d[0], d[1], d[2]]
}

/// Affine response `w . x + b` of every cell, before the relu.
pub(crate) fn detect_pre(word: usize, grid: &GridTensor, params: &ParamStore) -> Result<Vec<f64>> {
    if grid.channels() != params.channels() {
        return Err(Error::DimMismatch(
            "grid feature width differs from the parameters",
        ));
    }
    if grid_dims(grid) != params.grid_dims() {
        return Err(Error::DimMismatch(
            "grid extent differs from the parameters",
        ));
    }
    let (w, b) = params.detect_filter(word)?;
    Ok((0..grid.cell_count())
        .map(|cell| {
            grid.column(cell)
                .iter()
                .zip(w)
                .fold(b, |acc, (x, wc)| acc + x * wc)
        })
        .collect())
}

/// `relu(w * x + b)` with a `(1,1,1,C)` filter: an affine map and relu per
/// cell.
pub fn detect_forward(word: usize, grid: &GridTensor, params: &ParamStore) -> Result<AttentionMap> {
    Ok(AttentionMap::from_values(
        grid_dims(grid),
        relu(&detect_pre(word, grid, params)?),
    ))
}

/// Elementwise product of two attention maps.
pub fn and_forward(a: &AttentionMap, b: &AttentionMap) -> Result<AttentionMap> {
    if a.dims() != b.dims() {
        return Err(Error::DimMismatch("and inputs differ in shape"));
    }
    Ok(AttentionMap::from_values(
        a.dims(),
        a.values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| x * y)
            .collect(),
    ))
}

/// Full 3D convolution of the zero-padded input (pad = input extent per axis)
/// with a `(2W+1, 2H+1, 2L+1)` kernel indexed by displacement:
/// `pre[p] = sum_q a[q] * k[p - q]`.
pub(crate) fn shift_pre(prep: usize, a: &AttentionMap, params: &ParamStore) -> Result<Vec<f64>> {
    let dims = a.dims();
    if dims != params.grid_dims() {
        return Err(Error::DimMismatch(
            "attention extent differs from the shift kernel",
        ));
    }
    let kernel = params.shift_kernel(prep)?;
    let [w, h, l] = dims;
    let [_, kh, kl] = params.kernel_dims();
    let mut pre = vec![0.0; w * h * l];
    for qx in 0..w {
        for qy in 0..h {
            for qz in 0..l {
                let aq = a.values()[(qx * h + qy) * l + qz];
                if aq == 0.0 {
                    continue;
                }
                for px in 0..w {
                    let kx = px + w - qx;
                    for py in 0..h {
                        let ky = py + h - qy;
                        let krow = (kx * kh + ky) * kl + l - qz;
                        let orow = (px * h + py) * l;
                        for pz in 0..l {
                            pre[orow + pz] += aq * kernel[krow + pz];
                        }
                    }
                }
            }
        }
    }
    Ok(pre)
}

pub fn shift_forward(prep: usize, a: &AttentionMap, params: &ParamStore) -> Result<AttentionMap> {
    Ok(AttentionMap::from_values(
        a.dims(),
        relu(&shift_pre(prep, a, params)?),
    ))
}

/// Softmax over all cells (max-subtracted).
pub fn locate_forward(a: &AttentionMap) -> CellDistribution {
    CellDistribution::from_logits(a.dims(), a.values().to_vec())
}
