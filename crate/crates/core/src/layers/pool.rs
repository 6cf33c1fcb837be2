use crate::error::{shape_err, Result};
use crate::tensor::{FeatureMap, Matrix};

/// Max pooling along the columns of a `(C, L)` sequence.
pub fn maxpool1d(seq: &Matrix, kernel: usize, stride: usize) -> Result<Matrix> {
    let len = seq.cols();
    if kernel == 0 || stride == 0 {
        return shape_err("maxpool1d: kernel and stride must be positive");
    }
    if len < kernel {
        return shape_err(format!("maxpool1d: sequence length {len} < kernel {kernel}"));
    }
    let out_len = (len - kernel) / stride + 1;
    Ok(Matrix::from_fn(seq.rows(), out_len, |r, j| {
        let row = seq.row(r);
        row[j * stride..j * stride + kernel]
            .iter()
            .copied()
            .fold(f32::NEG_INFINITY, f32::max)
    }))
}

/// Mean over `H*W` for each (batch, channel); returns an `(N, C)` matrix.
pub fn global_avg_pool(x: &FeatureMap) -> Matrix {
    let [n, c, _, _] = x.shape();
    let len = x.plane_len().max(1) as f64;
    Matrix::from_fn(n, c, |b, ch| {
        (x.plane(b, ch).iter().map(|&v| v as f64).sum::<f64>() / len) as f32
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pooled_length() {
        let m = Matrix::zeros(4, 50);
        assert_eq!(maxpool1d(&m, 3, 2).unwrap().cols(), 24);
    }

    #[test]
    fn hand_max() {
        let m = Matrix::new(1, 5, vec![1., 5., 2., 4., 3.]).unwrap();
        assert_eq!(maxpool1d(&m, 3, 2).unwrap().data(), &[5., 4.]);
    }

    #[test]
    fn too_short() {
        assert!(maxpool1d(&Matrix::zeros(1, 2), 3, 2).is_err());
    }

    #[test]
    fn gap_values() {
        let x = FeatureMap::new([1, 2, 2, 2], vec![1., 3., 5., 7., 2., 2., 2., 2.]).unwrap();
        let g = global_avg_pool(&x);
        assert_eq!(g.data(), &[4.0, 2.0]);
    }
}
