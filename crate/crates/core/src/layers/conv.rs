use crate::error::{shape_err, Error, Result};
use crate::exec;
use crate::tensor::FeatureMap;

/// Weights `(C_out, C_in / groups, k_h, k_w)` plus optional bias.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvParams {
    pub weight: FeatureMap,
    pub bias: Option<Vec<f32>>,
    pub stride: usize,
    pub padding: usize,
    pub groups: usize,
}

impl ConvParams {
    pub fn new(
        weight: FeatureMap,
        bias: Option<Vec<f32>>,
        stride: usize,
        padding: usize,
        groups: usize,
    ) -> Result<Self> {
        let c_out = weight.batch();
        if groups == 0 || !c_out.is_multiple_of(groups) {
            return Err(Error::InvalidParam(format!(
                "groups {groups} does not divide C_out {c_out}"
            )));
        }
        if stride == 0 {
            return Err(Error::InvalidParam("stride must be positive".into()));
        }
        if let Some(b) = &bias {
            if b.len() != c_out {
                return Err(Error::InvalidParam(format!(
                    "bias length {} != C_out {c_out}",
                    b.len()
                )));
            }
        }
        Ok(Self {
            weight,
            bias,
            stride,
            padding,
            groups,
        })
    }

    /// Depthwise `k x k` convolution over `channels` channels, zero bias.
    pub fn depthwise(kernel: Vec<f32>, channels: usize, k: usize, stride: usize, padding: usize) -> Result<Self> {
        let w = FeatureMap::new([channels, 1, k, k], kernel)?;
        Self::new(w, None, stride, padding, channels)
    }

    /// Depthwise identity (centered delta) of odd size `k`.
    pub fn depthwise_identity(channels: usize, k: usize) -> Self {
        let c = k / 2;
        let w = FeatureMap::from_fn([channels, 1, k, k], |_, _, y, x| if y == c && x == c { 1.0 } else { 0.0 });
        Self::new(w, Some(vec![0.0; channels]), 1, c, channels).expect("valid identity conv")
    }

    pub fn out_channels(&self) -> usize {
        self.weight.batch()
    }

    pub fn in_channels(&self) -> usize {
        self.weight.channels() * self.groups
    }

    pub fn kernel_size(&self) -> (usize, usize) {
        (self.weight.height(), self.weight.width())
    }

    pub fn output_hw(&self, h: usize, w: usize) -> Result<(usize, usize)> {
        let (kh, kw) = self.kernel_size();
        let (ph, pw) = (h + 2 * self.padding, w + 2 * self.padding);
        if ph < kh || pw < kw {
            return shape_err(format!(
                "input {h}x{w} with padding {} is smaller than kernel {kh}x{kw}",
                self.padding
            ));
        }
        Ok(((ph - kh) / self.stride + 1, (pw - kw) / self.stride + 1))
    }
}

/// Valid output index range `[lo, hi)` along one axis for kernel tap `k`.
#[inline]
fn valid_range(k: usize, pad: usize, stride: usize, input: usize, output: usize) -> (usize, usize) {
    let lo = if pad > k { (pad - k).div_ceil(stride) } else { 0 };
    if input + pad < k + 1 {
        return (0, 0);
    }
    let hi = ((input - 1 + pad - k) / stride + 1).min(output);
    (lo.min(hi), hi)
}

/// 2-D cross-correlation with zero padding, grouped channels and 64-bit
/// accumulation.
pub fn conv2d(x: &FeatureMap, p: &ConvParams) -> Result<FeatureMap> {
    let [n, c_in, h, w] = x.shape();
    if c_in != p.in_channels() {
        return shape_err(format!(
            "conv2d: input has {c_in} channels, kernel expects {} (weight {:?}, groups {})",
            p.in_channels(),
            p.weight.shape(),
            p.groups
        ));
    }
    let (ho, wo) = p.output_hw(h, w)?;
    let c_out = p.out_channels();
    let (kh, kw) = p.kernel_size();
    let cin_g = p.weight.channels();
    let cout_g = c_out / p.groups;
    let (s, pad) = (p.stride, p.padding);

    let mut out = FeatureMap::zeros([n, c_out, ho, wo]);
    exec::for_each_plane(out.data_mut(), ho * wo, |idx, plane| {
        let (b, co) = (idx / c_out, idx % c_out);
        let g = co / cout_g;
        let mut acc = vec![0f64; ho * wo];
        for cl in 0..cin_g {
            let input = x.plane(b, g * cin_g + cl);
            for ky in 0..kh {
                let (oy_lo, oy_hi) = valid_range(ky, pad, s, h, ho);
                for kx in 0..kw {
                    let wv = p.weight.at(co, cl, ky, kx) as f64;
                    if wv == 0.0 {
                        continue;
                    }
                    let (ox_lo, ox_hi) = valid_range(kx, pad, s, w, wo);
                    for oy in oy_lo..oy_hi {
                        let iy = oy * s + ky - pad;
                        let row = &input[iy * w..(iy + 1) * w];
                        let acc_row = &mut acc[oy * wo..(oy + 1) * wo];
                        for ox in ox_lo..ox_hi {
                            acc_row[ox] += wv * row[ox * s + kx - pad] as f64;
                        }
                    }
                }
            }
        }
        let bias = p.bias.as_ref().map_or(0.0, |b| b[co] as f64);
        for (o, a) in plane.iter_mut().zip(acc) {
            *o = (a + bias) as f32;
        }
    });
    Ok(out)
}
