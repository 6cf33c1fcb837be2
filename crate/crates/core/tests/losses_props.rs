mod common;

use common::rng;
use nanomvg::losses::{ciou, ciou_wh_loss, dice_loss, gaussian_radius, gaussian_target, LossConfig};
use nanomvg_oracle::numeric;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

#[test]
fn target_peaks_at_centres_and_composes_by_max() {
    let mut r = rng(3);
    for _ in 0..20 {
        let (h, w) = (r.gen_range(5..20), r.gen_range(5..20));
        let n = r.gen_range(1..5);
        let centers: Vec<(usize, usize)> = (0..n).map(|_| (r.gen_range(0..w), r.gen_range(0..h))).collect();
        let sizes: Vec<(f64, f64)> = (0..n).map(|_| (r.gen_range(0.5..8.0), r.gen_range(0.5..8.0))).collect();
        let joint = gaussian_target(&centers, &sizes, h, w).unwrap();
        let singles: Vec<_> = centers
            .iter()
            .zip(&sizes)
            .map(|(c, s)| gaussian_target(&[*c], &[*s], h, w).unwrap())
            .collect();
        for i in 0..h * w {
            let m = singles.iter().map(|t| t.values[i]).fold(0.0, f64::max);
            assert_eq!(joint.values[i], m);
            assert!((0.0..=1.0).contains(&joint.values[i]));
        }
        for (k, &(cx, cy)) in centers.iter().enumerate() {
            assert_eq!(joint.values[cy * w + cx], 1.0);
            let sigma = joint.radii[k] / 3.0;
            let s = &singles[k];
            for y in 0..h {
                for x in 0..w {
                    let d2 = ((x as f64 - cx as f64).powi(2)) + ((y as f64 - cy as f64).powi(2));
                    assert!((s.values[y * w + x] - numeric::gaussian(d2, sigma)).abs() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn radius_is_symmetric_and_scales_with_size() {
    for &(w, h) in &[(4.0, 4.0), (10.0, 3.0), (2.0, 7.0), (30.0, 30.0)] {
        let r = gaussian_radius(w, h, 0.7);
        assert!(r > 0.0 && r < w.max(h));
        assert_eq!(r, gaussian_radius(h, w, 0.7));
        for k in [0.5, 2.0, 3.0] {
            assert!((gaussian_radius(k * w, k * h, 0.7) - k * r).abs() < 1e-9 * k * r);
        }
        // a looser overlap bound allows a larger radius
        assert!(gaussian_radius(w, h, 0.5) > r);
    }
}

#[test]
fn far_boxes_match_reference() {
    let (v, _) = ciou([0.0, 0.0, 1.0, 1.0], [10.0, 0.0, 1.0, 1.0]);
    assert!((v - numeric::ciou([0.0, 0.0, 1.0, 1.0], [10.0, 0.0, 1.0, 1.0])).abs() < 1e-12);
    assert!((v + 100.0 / 122.0).abs() < 1e-12);
    let loss = ciou_wh_loss(&[[0.0, 0.0, 1.0, 1.0]], &[[10.0, 0.0, 1.0, 1.0]]).unwrap();
    assert!((loss.value - (1.0 + 100.0 / 122.0)).abs() < 1e-12);
    assert!(ciou_wh_loss(&[[0.0, 0.0, 1.0, 1.0]], &[[0.0, 0.0, 0.0, 1.0]]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn dice_is_permutation_invariant(seed in 0u64..100_000, len in 1usize..64) {
        let mut r = rng(seed);
        let p: Vec<f64> = (0..len).map(|_| r.gen_range(0.0..1.0)).collect();
        let g: Vec<f64> = (0..len).map(|_| r.gen_bool(0.5) as u8 as f64).collect();
        let mut idx: Vec<usize> = (0..len).collect();
        idx.shuffle(&mut r);
        let pp: Vec<f64> = idx.iter().map(|&i| p[i]).collect();
        let gp: Vec<f64> = idx.iter().map(|&i| g[i]).collect();
        let a = dice_loss(&p, &g).unwrap().value;
        let b = dice_loss(&pp, &gp).unwrap().value;
        prop_assert!((a - b).abs() < 1e-12);
        prop_assert!((a - numeric::dice(&p, &g, 1.0)).abs() < 1e-12);
        prop_assert!((0.0..1.0).contains(&a));
    }

    #[test]
    fn ciou_matches_reference(
        cx in -5.0f64..5.0, cy in -5.0f64..5.0, w in 0.2f64..6.0, h in 0.2f64..6.0,
        gx in -5.0f64..5.0, gy in -5.0f64..5.0, gw in 0.2f64..6.0, gh in 0.2f64..6.0,
    ) {
        let (v, _) = ciou([cx, cy, w, h], [gx, gy, gw, gh]);
        prop_assert!((v - numeric::ciou([cx, cy, w, h], [gx, gy, gw, gh])).abs() < 1e-10);
        prop_assert!((-2.0..=1.0 + 1e-12).contains(&v));
    }
}

#[test]
fn config_rejects_negative_exponents() {
    assert!(LossConfig::parse("gamma_res = -1").is_err());
    let cfg = LossConfig::parse("# weights\ntau2 = 0.5\n").unwrap();
    assert_eq!(cfg.tau2, 0.5);
}
