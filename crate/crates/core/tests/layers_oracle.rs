mod common;

use common::*;
use nanomvg::layers::{conv2d, maxpool1d, sobel, upsample, ConvParams, UpsampleMode};
use nanomvg::tensor::{FeatureMap, Matrix};
use nanomvg::tmdf::{deform_conv, deform_conv_with_offsets, eca, DeformParams, EcaParams};
use nanomvg_oracle::nn;
use proptest::prelude::*;
use rand::Rng;

fn random_conv(r: &mut rand_chacha::ChaCha8Rng, c_in: usize, c_out: usize, k: usize, stride: usize, groups: usize) -> ConvParams {
    let w = random_map(r, [c_out, c_in / groups, k, k], 0.5);
    let bias = (0..c_out).map(|_| r.gen_range(-0.5..0.5)).collect();
    ConvParams::new(w, Some(bias), stride, k / 2, groups).unwrap()
}

#[test]
fn conv_matches_reference() {
    for seed in 0..40 {
        let mut r = rng(seed);
        let groups = [1, 2][r.gen_range(0..2)];
        let c_in = groups * r.gen_range(1..5);
        let c_out = groups * r.gen_range(1..5);
        let k = [1, 3, 5][r.gen_range(0..3)];
        let stride = r.gen_range(1..3);
        let p = random_conv(&mut r, c_in, c_out, k, stride, groups);
        let (h, w) = (r.gen_range(4..11), r.gen_range(4..11));
        let x = random_map(&mut r, [2, c_in, h, w], 1.0);
        let got = conv2d(&x, &p).unwrap();
        for b in 0..2 {
            let expect = nn::conv(&vol(&x, b), &conv(&p));
            assert!(max_abs_diff(&expect, &got, b) < 1e-5, "seed {seed}");
        }
    }
}

#[test]
fn sobel_matches_reference() {
    let mut r = rng(7);
    let x = random_map(&mut r, [1, 3, 9, 6], 1.0);
    let got = sobel(&x).unwrap();
    assert!(max_abs_diff(&nn::sobel(&vol(&x, 0)), &got, 0) < 1e-5);
    assert!(sobel(&FeatureMap::zeros([1, 1, 2, 5])).is_err());
}

#[test]
fn eca_matches_reference() {
    for seed in 0..10 {
        let mut r = rng(100 + seed);
        let c = r.gen_range(1..12);
        let kernel: Vec<f32> = (0..3).map(|_| r.gen_range(-1.0..1.0)).collect();
        let x = random_map(&mut r, [1, c, 5, 7], 2.0);
        let got = eca(&x, &EcaParams::new(kernel.clone()).unwrap()).unwrap();
        let k64: Vec<f64> = kernel.iter().map(|&v| v as f64).collect();
        assert!(max_abs_diff(&nn::eca(&vol(&x, 0), &k64), &got, 0) < 1e-6);
    }
}

#[test]
fn deform_matches_reference() {
    for seed in 0..20 {
        let mut r = rng(200 + seed);
        let c = r.gen_range(1..6);
        let (h, w) = (r.gen_range(3..9), r.gen_range(3..9));
        let c_out = r.gen_range(1..6);
        let main = random_conv(&mut r, c, c_out, 3, 1, 1);
        let x = random_map(&mut r, [1, c, h, w], 1.0);
        let offsets = random_map(&mut r, [1, 18, h, w], 2.5);
        let got = deform_conv_with_offsets(&x, &offsets, &main).unwrap();
        let expect = nn::deform(&vol(&x, 0), &vol(&offsets, 0), &conv(&main));
        assert!(max_abs_diff(&expect, &got, 0) < 1e-5, "seed {seed}");
    }
}

#[test]
fn constant_offset_shifts_the_sampling_grid() {
    // offset conv with zero weights and bias (dy, dx) = (1, 0) for every tap
    let mut r = rng(300);
    let c = 2;
    let main = random_conv(&mut r, c, 3, 3, 1, 1);
    let bias: Vec<f32> = (0..18).map(|i| if i % 2 == 0 { 1.0 } else { 0.0 }).collect();
    let offset_conv = ConvParams::new(FeatureMap::zeros([18, c, 3, 3]), Some(bias), 1, 1, 1).unwrap();
    let p = DeformParams::new(offset_conv, main.clone()).unwrap();
    let x = random_map(&mut r, [1, c, 8, 6], 1.0);
    let got = deform_conv(&x, &p).unwrap();

    // same as a plain conv on the image shifted up by one row; the first
    // output row differs because the shift pulls real row 0 into the window
    let shifted = FeatureMap::from_fn([1, c, 8, 6], |_, ch, y, xx| if y + 1 < 8 { x.at(0, ch, y + 1, xx) } else { 0.0 });
    let expect = conv2d(&shifted, &main).unwrap();
    for co in 0..3 {
        for y in 1..8 {
            for xx in 0..6 {
                assert!((got.at(0, co, y, xx) - expect.at(0, co, y, xx)).abs() < 1e-5, "({co}, {y}, {xx})");
            }
        }
    }
}

#[test]
fn half_pixel_offset_interpolates_a_ramp() {
    // 1x1 identity main conv, one offset pair: samples x + 0.5 on x-ramp
    let main = ConvParams::new(FeatureMap::full([1, 1, 1, 1], 1.0), None, 1, 0, 1).unwrap();
    let x = FeatureMap::from_fn([1, 1, 3, 5], |_, _, _, xx| xx as f32);
    let mut offsets = FeatureMap::zeros([1, 2, 3, 5]);
    for y in 0..3 {
        for xx in 0..5 {
            offsets.set(0, 1, y, xx, 0.5);
        }
    }
    let got = deform_conv_with_offsets(&x, &offsets, &main).unwrap();
    for xx in 0..4 {
        assert!((got.at(0, 0, 1, xx) - (xx as f32 + 0.5)).abs() < 1e-6);
    }
    // right edge mixes in zero padding
    assert!((got.at(0, 0, 1, 4) - 2.0).abs() < 1e-6);
}

#[test]
fn upsample_matches_reference() {
    let mut r = rng(400);
    let x = random_map(&mut r, [1, 2, 3, 4], 1.0);
    for f in [2, 4] {
        let near = upsample(&x, f, UpsampleMode::Nearest).unwrap();
        assert!(max_abs_diff(&nn::upsample_nearest(&vol(&x, 0), f), &near, 0) < 1e-7);
        let bil = upsample(&x, f, UpsampleMode::Bilinear).unwrap();
        assert!(max_abs_diff(&nn::upsample_bilinear(&vol(&x, 0), f), &bil, 0) < 1e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn conv_is_linear_without_bias(seed in 0u64..10_000, a in -2.0f32..2.0, b in -2.0f32..2.0) {
        let mut r = rng(seed);
        let w = random_map(&mut r, [3, 2, 3, 3], 0.5);
        let p = ConvParams::new(w, None, 1, 1, 1).unwrap();
        let x = random_map(&mut r, [1, 2, 5, 5], 1.0);
        let y = random_map(&mut r, [1, 2, 5, 5], 1.0);
        let combo = x.scale(a).add(&y.scale(b)).unwrap();
        let lhs = conv2d(&combo, &p).unwrap();
        let rhs = conv2d(&x, &p).unwrap().scale(a).add(&conv2d(&y, &p).unwrap().scale(b)).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-4);
    }

    #[test]
    fn maxpool_never_exceeds_row_max(seed in 0u64..10_000, len in 3usize..30) {
        let mut r = rng(seed);
        let m = random_matrix(&mut r, 4, len, 3.0);
        let pooled = maxpool1d(&m, 3, 2).unwrap();
        prop_assert_eq!(pooled.cols(), (len - 3) / 2 + 1);
        for row in 0..4 {
            let top = m.row(row).iter().copied().fold(f32::MIN, f32::max);
            prop_assert!(pooled.row(row).iter().all(|&v| v <= top));
            prop_assert!(pooled.row(row).iter().any(|&v| m.row(row).contains(&v)));
        }
    }
}

#[test]
fn maxpool_rejects_short_sequences() {
    assert!(maxpool1d(&Matrix::zeros(2, 2), 3, 2).is_err());
}
