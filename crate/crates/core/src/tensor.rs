//! Dense tensor values and the unfolding families used by the solvers.
//!
//! Storage is a flat `Vec<f64>` in first-index-fastest order: the entry at
//! 1-based multi-index `(j_1, ..., j_d)` lives at linear position
//! `1 + sum_i (j_i - 1) * prod_{m < i} n_m`. With that layout every unfolding
//! in this module is a pure permute-plus-reshape; no arithmetic ever touches
//! the stored values, so fold/unfold roundtrips are bit-exact.
//!
//! Multi-indices, modes and permutations are 1-based at the API surface.
//! Matrix entry accessors are plain 0-based Rust indices.

use crate::error::{Error, Result};

/// Dense real tensor of order `d >= 1` with explicit dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    dims: Vec<usize>,
    data: Vec<f64>,
}

/// Matrix view produced by the unfolding operations, stored column-major
/// (row index fastest) so a reshape to/from `DenseTensor` is a no-op on data.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

/// First-index-fastest strides: `strides[i] = prod_{m < i} dims[m]`.
fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = Vec::with_capacity(dims.len());
    let mut acc = 1usize;
    for &n in dims {
        s.push(acc);
        acc *= n;
    }
    s
}

fn check_dims(dims: &[usize]) -> Result<()> {
    if dims.is_empty() {
        return Err(Error::DimMismatch("tensor order must be >= 1".into()));
    }
    if dims.iter().any(|&n| n == 0) {
        return Err(Error::DimMismatch(format!("every dim must be >= 1, got {dims:?}")));
    }
    Ok(())
}

/// 1-based linear index of a 1-based multi-index under first-index-fastest
/// layout: `1 + sum_i (j_i - 1) * prod_{m < i} n_m`.
pub fn linear_index(dims: &[usize], index: &[usize]) -> Result<usize> {
    if index.len() != dims.len() {
        return Err(Error::IndexOutOfBounds { dims: dims.to_vec(), index: index.to_vec() });
    }
    let mut offset = 0usize;
    let mut stride = 1usize;
    for (&j, &n) in index.iter().zip(dims) {
        if j < 1 || j > n {
            return Err(Error::IndexOutOfBounds { dims: dims.to_vec(), index: index.to_vec() });
        }
        offset += (j - 1) * stride;
        stride *= n;
    }
    Ok(offset + 1)
}

impl DenseTensor {
    /// Builds a tensor from dims and a flat first-index-fastest buffer.
    pub fn new(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        check_dims(&dims)?;
        let n: usize = dims.iter().product();
        if data.len() != n {
            return Err(Error::DimMismatch(format!(
                "data length {} does not match dims {:?} (product {})",
                data.len(),
                dims,
                n
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn zeros(dims: &[usize]) -> Self {
        check_dims(dims).expect("invalid dims");
        let n = dims.iter().product();
        Self { dims: dims.to_vec(), data: vec![0.0; n] }
    }

    pub fn filled(dims: &[usize], value: f64) -> Self {
        check_dims(dims).expect("invalid dims");
        let n = dims.iter().product();
        Self { dims: dims.to_vec(), data: vec![value; n] }
    }

    /// Builds a tensor by evaluating `f` at every 1-based multi-index.
    pub fn from_fn(dims: &[usize], mut f: impl FnMut(&[usize]) -> f64) -> Self {
        check_dims(dims).expect("invalid dims");
        let n: usize = dims.iter().product();
        let d = dims.len();
        let mut idx = vec![1usize; d];
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            data.push(f(&idx));
            for p in 0..d {
                idx[p] += 1;
                if idx[p] <= dims[p] {
                    break;
                }
                idx[p] = 1;
            }
        }
        Self { dims: dims.to_vec(), data }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    /// Number of stored entries.
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Entry at a 1-based multi-index.
    pub fn get(&self, index: &[usize]) -> Result<f64> {
        Ok(self.data[linear_index(&self.dims, index)? - 1])
    }

    pub fn set(&mut self, index: &[usize], value: f64) -> Result<()> {
        let j = linear_index(&self.dims, index)?;
        self.data[j - 1] = value;
        Ok(())
    }

    /// Reinterprets the buffer under new dims with the same entry count.
    pub fn reshape(&self, dims: &[usize]) -> Result<Self> {
        check_dims(dims)?;
        let n: usize = dims.iter().product();
        if n != self.data.len() {
            return Err(Error::DimMismatch(format!(
                "cannot reshape {:?} into {:?}",
                self.dims, dims
            )));
        }
        Ok(Self { dims: dims.to_vec(), data: self.data.clone() })
    }

    /// Reorders modes: the result has `dims[p] = self.dims[order[p]-1]` and
    /// the entry at permuted multi-index `t` equals the source entry at `u`
    /// where `u[order[p]-1] = t[p]` (MATLAB `permute` semantics).
    pub fn permute(&self, order: &[usize]) -> Result<Self> {
        let d = self.order();
        if order.len() != d {
            return Err(Error::InvalidPermutation(order.to_vec()));
        }
        let mut seen = vec![false; d];
        for &o in order {
            if o < 1 || o > d || seen[o - 1] {
                return Err(Error::InvalidPermutation(order.to_vec()));
            }
            seen[o - 1] = true;
        }
        let src_strides = strides(&self.dims);
        let step: Vec<usize> = order.iter().map(|&o| src_strides[o - 1]).collect();
        let out_dims: Vec<usize> = order.iter().map(|&o| self.dims[o - 1]).collect();
        let mut out = Vec::with_capacity(self.data.len());
        let mut counters = vec![0usize; d];
        let mut src = 0usize;
        for _ in 0..self.data.len() {
            out.push(self.data[src]);
            for p in 0..d {
                counters[p] += 1;
                src += step[p];
                if counters[p] < out_dims[p] {
                    break;
                }
                src -= step[p] * out_dims[p];
                counters[p] = 0;
            }
        }
        Ok(Self { dims: out_dims, data: out })
    }

    /// Mode-`i` unfolding: `n_i` rows, the remaining modes flattened into
    /// columns in their natural order with the earliest remaining index
    /// fastest (standard Kolda ordering).
    pub fn mode_unfold(&self, mode: usize) -> Result<Matrix> {
        let d = self.order();
        if mode < 1 || mode > d {
            return Err(Error::InvalidMode { mode, order: d });
        }
        let mut order = Vec::with_capacity(d);
        order.push(mode);
        order.extend((1..=d).filter(|&m| m != mode));
        let permuted = self.permute(&order)?;
        let rows = self.dims[mode - 1];
        let cols = permuted.len() / rows;
        Ok(Matrix { rows, cols, data: permuted.data })
    }

    /// `i`-shifting `l`-matricization: permute modes to `[k, ..., d, 1, ..., k-1]`
    /// then flatten the first `l` permuted modes into rows and the rest into
    /// columns, both first-index-fastest.
    pub fn shift_matricize(&self, shift: usize, split: usize) -> Result<Matrix> {
        let d = self.order();
        if shift < 1 || shift > d {
            return Err(Error::InvalidMode { mode: shift, order: d });
        }
        if split < 1 || split + 1 > d {
            return Err(Error::InvalidSplit { split, max: d.saturating_sub(1) });
        }
        let order: Vec<usize> = (0..d).map(|p| (shift - 1 + p) % d + 1).collect();
        let permuted = self.permute(&order)?;
        let rows: usize = permuted.dims[..split].iter().product();
        let cols = permuted.len() / rows;
        Ok(Matrix { rows, cols, data: permuted.data })
    }

    /// Balanced unfolding: `shift_matricize` at `l = ceil(d/2)`.
    pub fn balanced_unfold(&self, shift: usize) -> Result<Matrix> {
        let d = self.order();
        if d < 2 {
            return Err(Error::InvalidSplit { split: 1, max: 0 });
        }
        self.shift_matricize(shift, d.div_ceil(2))
    }

    fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.dims != other.dims {
            return Err(Error::DimMismatch(format!(
                "operands have dims {:?} vs {:?}",
                self.dims, other.dims
            )));
        }
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { dims: self.dims.clone(), data })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a - b)
    }

    /// Entrywise (Hadamard) product.
    pub fn hadamard(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a * b)
    }

    /// Entrywise division that rejects zero divisors instead of producing
    /// non-finite values.
    pub fn safe_divide(&self, divisor: &Self) -> Result<Self> {
        if divisor.data.iter().any(|&b| b == 0.0) {
            return Err(Error::ZeroDivisor);
        }
        self.zip_map(divisor, |a, b| a / b)
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self { dims: self.dims.clone(), data: self.data.iter().map(|&a| a * factor).collect() }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { dims: self.dims.clone(), data: self.data.iter().map(|&a| f(a)).collect() }
    }

    pub fn inner(&self, other: &Self) -> Result<f64> {
        if self.dims != other.dims {
            return Err(Error::DimMismatch(format!(
                "operands have dims {:?} vs {:?}",
                self.dims, other.dims
            )));
        }
        Ok(self.data.iter().zip(&other.data).map(|(&a, &b)| a * b).sum())
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|&a| a * a).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, &a| m.max(a.abs()))
    }

    pub fn is_all_finite(&self) -> bool {
        self.data.iter().all(|a| a.is_finite())
    }

    /// Reinterprets the flat buffer as a `rows x cols` column-major matrix.
    pub fn into_matrix(self, rows: usize, cols: usize) -> Result<Matrix> {
        if rows * cols != self.data.len() || rows == 0 || cols == 0 {
            return Err(Error::DimMismatch(format!(
                "cannot view {} entries as {rows}x{cols}",
                self.data.len()
            )));
        }
        Ok(Matrix { rows, cols, data: self.data })
    }
}

/// Inverse of [`DenseTensor::mode_unfold`].
pub fn mode_fold(m: &Matrix, mode: usize, dims: &[usize]) -> Result<DenseTensor> {
    check_dims(dims)?;
    let d = dims.len();
    if mode < 1 || mode > d {
        return Err(Error::InvalidMode { mode, order: d });
    }
    if m.rows != dims[mode - 1] || m.data.len() != dims.iter().product::<usize>() {
        return Err(Error::DimMismatch(format!(
            "matrix {}x{} does not fold into dims {:?} at mode {}",
            m.rows, m.cols, dims, mode
        )));
    }
    let mut order = Vec::with_capacity(d);
    order.push(mode);
    order.extend((1..=d).filter(|&k| k != mode));
    let perm_dims: Vec<usize> = order.iter().map(|&o| dims[o - 1]).collect();
    let permuted = DenseTensor::new(perm_dims, m.data.clone())?;
    permuted.permute(&inverse_order(&order))
}

/// Inverse of [`DenseTensor::shift_matricize`].
pub fn shift_fold(m: &Matrix, shift: usize, split: usize, dims: &[usize]) -> Result<DenseTensor> {
    check_dims(dims)?;
    let d = dims.len();
    if shift < 1 || shift > d {
        return Err(Error::InvalidMode { mode: shift, order: d });
    }
    if split < 1 || split + 1 > d {
        return Err(Error::InvalidSplit { split, max: d.saturating_sub(1) });
    }
    let order: Vec<usize> = (0..d).map(|p| (shift - 1 + p) % d + 1).collect();
    let perm_dims: Vec<usize> = order.iter().map(|&o| dims[o - 1]).collect();
    let rows: usize = perm_dims[..split].iter().product();
    if m.rows != rows || m.data.len() != dims.iter().product::<usize>() {
        return Err(Error::DimMismatch(format!(
            "matrix {}x{} does not fold into dims {:?} at (k={}, l={})",
            m.rows, m.cols, dims, shift, split
        )));
    }
    let permuted = DenseTensor::new(perm_dims, m.data.clone())?;
    permuted.permute(&inverse_order(&order))
}

/// Inverse of [`DenseTensor::balanced_unfold`].
pub fn balanced_fold(m: &Matrix, shift: usize, dims: &[usize]) -> Result<DenseTensor> {
    let d = dims.len();
    if d < 2 {
        return Err(Error::InvalidSplit { split: 1, max: 0 });
    }
    shift_fold(m, shift, d.div_ceil(2), dims)
}

fn inverse_order(order: &[usize]) -> Vec<usize> {
    let mut inv = vec![0usize; order.len()];
    for (p, &o) in order.iter().enumerate() {
        inv[o - 1] = p + 1;
    }
    inv
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || rows * cols != data.len() {
            return Err(Error::DimMismatch(format!(
                "matrix {rows}x{cols} incompatible with {} entries",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Column-major flat buffer (row index fastest).
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Entry at 0-based `(row, col)`.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row + col * self.rows]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row + col * self.rows] = value;
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|&a| a * a).sum::<f64>().sqrt()
    }

    pub fn is_all_finite(&self) -> bool {
        self.data.iter().all(|a| a.is_finite())
    }

    /// Reinterprets the column-major buffer as a tensor with the given dims.
    pub fn into_tensor(self, dims: &[usize]) -> Result<DenseTensor> {
        DenseTensor::new(dims.to_vec(), self.data)
    }
}

/// Binary sampling tensor; entries are exactly 0 or 1 and the support set is
/// the positions holding 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingMask {
    tensor: DenseTensor,
    observed: usize,
}

impl SamplingMask {
    /// Validates that every entry is exactly 0 or 1.
    pub fn new(tensor: DenseTensor) -> Result<Self> {
        for &v in tensor.data() {
            if v != 0.0 && v != 1.0 {
                return Err(Error::NonBinaryMask(v));
            }
        }
        let observed = tensor.data().iter().filter(|&&v| v == 1.0).count();
        Ok(Self { tensor, observed })
    }

    /// Fully observed mask.
    pub fn ones(dims: &[usize]) -> Self {
        let tensor = DenseTensor::filled(dims, 1.0);
        let observed = tensor.len();
        Self { tensor, observed }
    }

    pub fn tensor(&self) -> &DenseTensor {
        &self.tensor
    }

    pub fn dims(&self) -> &[usize] {
        self.tensor.dims()
    }

    /// Number of observed entries `|Omega|`.
    pub fn observed_count(&self) -> usize {
        self.observed
    }

    /// Realized sampling ratio `|Omega| / prod(n_i)`.
    pub fn sampling_ratio(&self) -> f64 {
        self.observed as f64 / self.tensor.len() as f64
    }

    /// Projection onto the support: `P (*) x`.
    pub fn apply(&self, x: &DenseTensor) -> Result<DenseTensor> {
        self.tensor.hadamard(x)
    }

    /// 0-based flat offsets of the observed entries.
    pub fn observed_offsets(&self) -> Vec<usize> {
        self.tensor
            .data()
            .iter()
            .enumerate()
            .filter_map(|(i, &v)| (v == 1.0).then_some(i))
            .collect()
    }
}
