use crate::error::{shape_err, Error, Result};
use crate::exec;
use crate::tensor::FeatureMap;

/// Inference-time batch-norm statistics for `C` channels.
#[derive(Debug, Clone, PartialEq)]
pub struct BnParams {
    pub gamma: Vec<f32>,
    pub beta: Vec<f32>,
    pub running_mean: Vec<f32>,
    pub running_var: Vec<f32>,
    pub eps: f32,
}

pub const DEFAULT_BN_EPS: f32 = 1e-5;

impl BnParams {
    pub fn new(gamma: Vec<f32>, beta: Vec<f32>, running_mean: Vec<f32>, running_var: Vec<f32>, eps: f32) -> Result<Self> {
        let c = gamma.len();
        if beta.len() != c || running_mean.len() != c || running_var.len() != c {
            return Err(Error::InvalidParam("batch-norm vectors differ in length".into()));
        }
        if !(eps >= 0.0) {
            return Err(Error::InvalidParam(format!("batch-norm eps {eps} is negative")));
        }
        for (i, &v) in running_var.iter().enumerate() {
            if !(v >= 0.0) {
                return Err(Error::InvalidParam(format!("running_var[{i}] = {v} is negative")));
            }
            if v + eps <= 0.0 {
                return Err(Error::InvalidParam(format!("running_var[{i}] + eps is zero")));
            }
        }
        Ok(Self {
            gamma,
            beta,
            running_mean,
            running_var,
            eps,
        })
    }

    /// gamma=1, beta=0, mean=0, var=1, eps=0.
    pub fn identity(channels: usize) -> Self {
        Self {
            gamma: vec![1.0; channels],
            beta: vec![0.0; channels],
            running_mean: vec![0.0; channels],
            running_var: vec![1.0; channels],
            eps: 0.0,
        }
    }

    pub fn channels(&self) -> usize {
        self.gamma.len()
    }

    /// Per-channel `(scale, shift)` with `bn(x) = scale * x + shift`.
    pub fn scale_shift(&self) -> Vec<(f64, f64)> {
        (0..self.channels())
            .map(|c| {
                let scale = self.gamma[c] as f64 / (self.running_var[c] as f64 + self.eps as f64).sqrt();
                (scale, self.beta[c] as f64 - self.running_mean[c] as f64 * scale)
            })
            .collect()
    }
}

pub fn batchnorm_inference(x: &FeatureMap, p: &BnParams) -> Result<FeatureMap> {
    let c = x.channels();
    if c != p.channels() {
        return shape_err(format!("batchnorm: input has {c} channels, params have {}", p.channels()));
    }
    let mut out = x.clone();
    let plane = x.plane_len();
    exec::for_each_plane(out.data_mut(), plane, |idx, dst| {
        let ch = idx % c;
        let g = p.gamma[ch] as f64;
        let b = p.beta[ch] as f64;
        let m = p.running_mean[ch] as f64;
        let sd = (p.running_var[ch] as f64 + p.eps as f64).sqrt();
        for v in dst.iter_mut() {
            *v = (g * (*v as f64 - m) / sd + b) as f32;
        }
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_affine() {
        let x = FeatureMap::from_fn([1, 2, 3, 3], |_, c, y, xx| (c + y * 3 + xx) as f32 - 4.0);
        assert_eq!(batchnorm_inference(&x, &BnParams::identity(2)).unwrap(), x);
        let p = BnParams::new(vec![2.0], vec![1.0], vec![0.0], vec![1.0], 0.0).unwrap();
        let y = batchnorm_inference(&FeatureMap::full([1, 1, 1, 1], 3.0), &p).unwrap();
        assert_eq!(y.data(), &[7.0]);
    }

    #[test]
    fn rejects_negative_variance() {
        assert!(BnParams::new(vec![1.0], vec![0.0], vec![0.0], vec![-0.1], 1e-5).is_err());
        assert!(BnParams::new(vec![1.0], vec![0.0], vec![0.0], vec![0.0], 0.0).is_err());
    }

    #[test]
    fn rejects_channel_mismatch() {
        let x = FeatureMap::zeros([1, 3, 2, 2]);
        assert!(batchnorm_inference(&x, &BnParams::identity(2)).is_err());
    }
}
