//! Dense NCHW feature maps and small row-major matrices.

use crate::error::{shape_err, Result};

/// Rank-4 `f32` array in row-major (batch, channel, row, col) order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    shape: [usize; 4],
    data: Vec<f32>,
}

impl FeatureMap {
    pub fn new(shape: [usize; 4], data: Vec<f32>) -> Result<Self> {
        let len: usize = shape.iter().product();
        if data.len() != len {
            return shape_err(format!(
                "data length {} does not match shape {:?} ({} elements)",
                data.len(),
                shape,
                len
            ));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: [usize; 4]) -> Self {
        Self::full(shape, 0.0)
    }

    pub fn full(shape: [usize; 4], value: f32) -> Self {
        Self {
            shape,
            data: vec![value; shape.iter().product()],
        }
    }

    /// Builds a map by evaluating `f(n, c, y, x)` at every element.
    pub fn from_fn(shape: [usize; 4], mut f: impl FnMut(usize, usize, usize, usize) -> f32) -> Self {
        let [n, c, h, w] = shape;
        let mut data = Vec::with_capacity(n * c * h * w);
        for b in 0..n {
            for ch in 0..c {
                for y in 0..h {
                    for x in 0..w {
                        data.push(f(b, ch, y, x));
                    }
                }
            }
        }
        Self { shape, data }
    }

    #[inline]
    pub fn shape(&self) -> [usize; 4] {
        self.shape
    }
    #[inline]
    pub fn batch(&self) -> usize {
        self.shape[0]
    }
    #[inline]
    pub fn channels(&self) -> usize {
        self.shape[1]
    }
    #[inline]
    pub fn height(&self) -> usize {
        self.shape[2]
    }
    #[inline]
    pub fn width(&self) -> usize {
        self.shape[3]
    }
    #[inline]
    pub fn plane_len(&self) -> usize {
        self.shape[2] * self.shape[3]
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn index(&self, n: usize, c: usize, y: usize, x: usize) -> usize {
        ((n * self.shape[1] + c) * self.shape[2] + y) * self.shape[3] + x
    }

    #[inline]
    pub fn at(&self, n: usize, c: usize, y: usize, x: usize) -> f32 {
        self.data[self.index(n, c, y, x)]
    }

    #[inline]
    pub fn set(&mut self, n: usize, c: usize, y: usize, x: usize, v: f32) {
        let i = self.index(n, c, y, x);
        self.data[i] = v;
    }

    /// The `h*w` slice for batch item `n`, channel `c`.
    pub fn plane(&self, n: usize, c: usize) -> &[f32] {
        let start = (n * self.shape[1] + c) * self.plane_len();
        &self.data[start..start + self.plane_len()]
    }

    /// Copy of a single batch item as a batch-of-one map.
    pub fn batch_item(&self, n: usize) -> FeatureMap {
        let len = self.shape[1] * self.plane_len();
        FeatureMap {
            shape: [1, self.shape[1], self.shape[2], self.shape[3]],
            data: self.data[n * len..(n + 1) * len].to_vec(),
        }
    }

    /// Concatenates batch-of-one maps along the batch axis.
    pub fn stack(items: &[FeatureMap]) -> Result<FeatureMap> {
        let Some(first) = items.first() else {
            return shape_err("cannot stack an empty list");
        };
        let [_, c, h, w] = first.shape;
        let mut data = Vec::with_capacity(items.len() * c * h * w);
        let mut n = 0;
        for it in items {
            if it.shape[1..] != first.shape[1..] {
                return shape_err(format!("stack: {:?} vs {:?}", it.shape, first.shape));
            }
            n += it.shape[0];
            data.extend_from_slice(&it.data);
        }
        FeatureMap::new([n, c, h, w], data)
    }

    pub fn map(&self, f: impl Fn(f32) -> f32) -> FeatureMap {
        FeatureMap {
            shape: self.shape,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &FeatureMap, f: impl Fn(f32, f32) -> f32) -> Result<FeatureMap> {
        self.expect_same_shape(other)?;
        Ok(FeatureMap {
            shape: self.shape,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn add(&self, other: &FeatureMap) -> Result<FeatureMap> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn mul(&self, other: &FeatureMap) -> Result<FeatureMap> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn scale(&self, s: f32) -> FeatureMap {
        self.map(|v| v * s)
    }

    /// Adds `bias` (shape `(1, C, H, W)`) to every batch item.
    pub fn add_broadcast_batch(&self, bias: &FeatureMap) -> Result<FeatureMap> {
        if bias.shape[0] != 1 || bias.shape[1..] != self.shape[1..] {
            return shape_err(format!(
                "broadcast add: {:?} onto {:?}",
                bias.shape, self.shape
            ));
        }
        let item = bias.data.len();
        let mut out = self.clone();
        for chunk in out.data.chunks_mut(item) {
            for (o, b) in chunk.iter_mut().zip(&bias.data) {
                *o += *b;
            }
        }
        Ok(out)
    }

    pub fn expect_same_shape(&self, other: &FeatureMap) -> Result<()> {
        if self.shape != other.shape {
            return shape_err(format!("{:?} vs {:?}", self.shape, other.shape));
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn max_abs_diff(&self, other: &FeatureMap) -> f32 {
        debug_assert_eq!(self.shape, other.shape);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f32::max)
    }
}

/// Row-major 2-D `f32` matrix; used for token sequences `(C, L)` and
/// flattened spatial features `(H*W, C)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f32>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != rows * cols {
            return shape_err(format!(
                "matrix data length {} does not match {}x{}",
                data.len(),
                rows,
                cols
            ));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f32) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }
    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }
    #[inline]
    pub fn at(&self, r: usize, c: usize) -> f32 {
        self.data[r * self.cols + c]
    }
    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f32) {
        self.data[r * self.cols + c] = v;
    }
    pub fn data(&self) -> &[f32] {
        &self.data
    }
    pub fn row(&self, r: usize) -> &[f32] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |r, c| self.at(c, r))
    }

    pub fn scale(&self, s: f32) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return shape_err(format!(
                "matrix add {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            ));
        }
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    /// `self * rhs` with 64-bit accumulation.
    pub fn matmul(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.cols != rhs.rows {
            return shape_err(format!(
                "matmul {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            ));
        }
        let (m, k, n) = (self.rows, self.cols, rhs.cols);
        let rows = crate::exec::map_indices(m, |i| {
            let mut acc = vec![0f64; n];
            let a = &self.data[i * k..(i + 1) * k];
            for (p, &av) in a.iter().enumerate() {
                let av = av as f64;
                let b = &rhs.data[p * n..(p + 1) * n];
                for (o, &bv) in acc.iter_mut().zip(b) {
                    *o += av * bv as f64;
                }
            }
            acc.into_iter().map(|v| v as f32).collect::<Vec<f32>>()
        });
        Ok(Matrix {
            rows: m,
            cols: n,
            data: rows.concat(),
        })
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f32 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f32::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_length() {
        assert!(FeatureMap::new([1, 2, 2, 2], vec![0.0; 7]).is_err());
        assert!(Matrix::new(2, 3, vec![0.0; 5]).is_err());
    }

    #[test]
    fn indexing_is_nchw() {
        let fm = FeatureMap::from_fn([2, 3, 4, 5], |n, c, y, x| (n * 1000 + c * 100 + y * 10 + x) as f32);
        assert_eq!(fm.at(1, 2, 3, 4), 1234.0);
        assert_eq!(fm.data()[fm.index(1, 2, 3, 4)], 1234.0);
        assert_eq!(fm.plane(1, 2)[3 * 5 + 4], 1234.0);
    }

    #[test]
    fn matmul_small() {
        let a = Matrix::new(2, 3, vec![1., 2., 3., 4., 5., 6.]).unwrap();
        let b = Matrix::new(3, 2, vec![7., 8., 9., 10., 11., 12.]).unwrap();
        let c = a.matmul(&b).unwrap();
        assert_eq!(c.data(), &[58., 64., 139., 154.]);
    }

    #[test]
    fn stack_and_split() {
        let a = FeatureMap::full([1, 2, 2, 2], 1.0);
        let b = FeatureMap::full([1, 2, 2, 2], 2.0);
        let s = FeatureMap::stack(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(s.shape(), [2, 2, 2, 2]);
        assert_eq!(s.batch_item(1), b);
        assert_eq!(s.batch_item(0), a);
    }
}
