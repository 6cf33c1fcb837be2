//! Runtime kernels checked against the brute-force references on seeded
//! random instances.

use anyhow::{bail, Result};
use nanomvg::enmoe::{enmoe_forward, EnMoeParams};
use nanomvg::heads::{decode_boxes, msrep_forward, msrep_fuse, MsRepBranches, MsRepParams, MIN_BOX_SIDE};
use nanomvg::layers::{BnParams, ConvParams};
use nanomvg::losses::{ciou_wh_loss, conf_loss, dice_loss, focal_seg_loss, gaussian_target, LossConfig};
use nanomvg::metrics::{average_precision, mask_miou, mept, EnergyRow, EnergyTrace};
use nanomvg::params::Generator;
use nanomvg::tensor::{FeatureMap, Matrix};
use nanomvg::tmdf::{tmdf_fuse, TmdfParams, TEXT_POOL_KERNEL, TEXT_POOL_STRIDE};
use nanomvg::{BinaryMask, DetectionBox, InitMode};
use nanomvg_oracle::{detect, fusion, numeric, Bn, Conv, Volume};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn f64s(v: &[f32]) -> Vec<f64> {
    v.iter().map(|&x| x as f64).collect()
}

fn vol(x: &FeatureMap) -> Volume {
    let [_, c, h, w] = x.shape();
    Volume::from_f32(c, h, w, &x.data()[..c * h * w])
}

fn conv(p: &ConvParams) -> Conv {
    let [c_out, _, k, _] = p.weight.shape();
    Conv {
        c_in: p.in_channels(),
        c_out,
        k,
        stride: p.stride,
        pad: p.padding,
        groups: p.groups,
        weight: f64s(p.weight.data()),
        bias: p.bias.as_deref().map(f64s),
    }
}

fn bn(p: &BnParams) -> Bn {
    Bn {
        gamma: f64s(&p.gamma),
        beta: f64s(&p.beta),
        mean: f64s(&p.running_mean),
        var: f64s(&p.running_var),
        eps: p.eps as f64,
    }
}

fn rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|r| f64s(m.row(r))).collect()
}

fn random_map(r: &mut ChaCha8Rng, shape: [usize; 4], scale: f32) -> FeatureMap {
    FeatureMap::from_fn(shape, |_, _, _, _| r.gen_range(-scale..scale))
}

type Check = fn(u64) -> Result<(bool, String)>;

pub fn run(seed: u64) -> Result<()> {
    let checks: [(&str, Check); 7] = [
        ("mask-head fusion", msrep_check),
        ("tri-modal fusion", tmdf_check),
        ("edge/neighbour experts", enmoe_check),
        ("peak decoding", decode_check),
        ("loss gradients", gradient_check),
        ("detection and mask metrics", metric_check),
        ("energy metric", mept_check),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        let (ok, detail) = check(seed)?;
        println!("{} {name}: {detail}", if ok { "ok  " } else { "FAIL" });
        failed += usize::from(!ok);
    }
    if failed > 0 {
        bail!("{failed} self-checks failed");
    }
    Ok(())
}

fn msrep_check(seed: u64) -> Result<(bool, String)> {
    let (mut fuse_err, mut ref_err) = (0f64, 0f64);
    for i in 0..100 {
        let mut r = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i));
        let c = r.gen_range(1..=32);
        let train = MsRepParams::load(&mut Generator::new(seed ^ i, InitMode::Random), "m", c)?;
        let x = random_map(&mut r, [1, c, 16, 16], 2.0);
        let a = msrep_forward(&x, &train)?;
        let b = msrep_forward(&x, &msrep_fuse(&train)?)?;
        fuse_err = fuse_err.max(a.max_abs_diff(&b) as f64);
        let MsRepParams::Train(MsRepBranches { dw3, bn3, dw1, bn1, bn_id }) = &train else {
            bail!("generated block is not multi-branch");
        };
        let block = fusion::MsRep {
            dw3: conv(dw3),
            bn3: bn(bn3),
            dw1: conv(dw1),
            bn1: bn(bn1),
            bn_id: bn(bn_id),
        };
        ref_err = ref_err.max(fusion::msrep(&vol(&x), &block).max_abs_diff_f32(a.data()));
    }
    Ok((
        fuse_err <= 1e-5 && ref_err <= 1e-5,
        format!("100 blocks, fused {fuse_err:.1e}, reference {ref_err:.1e}"),
    ))
}

fn tmdf_check(seed: u64) -> Result<(bool, String)> {
    let mut worst = 0f64;
    for i in 0..50 {
        let mut r = ChaCha8Rng::seed_from_u64(seed.wrapping_add(100 + i));
        let c = [4, 8][r.gen_range(0..2)];
        let (h, w, e, l) = (r.gen_range(3..8), r.gen_range(3..8), r.gen_range(4..10), r.gen_range(3..12));
        let normalize = i % 2 == 1;
        let mut g = Generator::new(seed ^ (100 + i), InitMode::Random);
        let mut p = TmdfParams::load(&mut g, "t", c, h, w, e, l, normalize)?;
        p.lpe = random_map(&mut r, [1, c, h, w], 0.5);
        let img = random_map(&mut r, [1, c, h, w], 1.0);
        let radar = random_map(&mut r, [1, c, h, w], 1.0);
        let text = Matrix::from_fn(e, l, |_, _| r.gen_range(-1.0..1.0));
        let got = tmdf_fuse(&img, &radar, std::slice::from_ref(&text), &p)?;
        let reference = fusion::Tmdf {
            w_img: conv(&p.w_img),
            w_radar: conv(&p.w_radar),
            eca: f64s(&p.eca.weights),
            offset: conv(&p.deform.offset_conv),
            main: conv(&p.deform.main),
            lpe: vol(&p.lpe),
            w_text: rows(&p.w_text),
            b_text: f64s(&p.b_text),
            ape: rows(&p.ape),
            pool_k: TEXT_POOL_KERNEL,
            pool_s: TEXT_POOL_STRIDE,
            normalize,
        };
        let expect = fusion::tmdf(&vol(&img), &vol(&radar), &rows(&text), &reference);
        worst = worst.max(expect.max_abs_diff_f32(got.data()));
    }
    Ok((worst <= 1e-5, format!("50 instances, max diff {worst:.1e}")))
}

fn enmoe_check(seed: u64) -> Result<(bool, String)> {
    let mut worst = 0f64;
    for i in 0..50 {
        let mut r = ChaCha8Rng::seed_from_u64(seed.wrapping_add(200 + i));
        let c = r.gen_range(2..12);
        let mut p = EnMoeParams::load(&mut Generator::new(seed ^ (200 + i), InitMode::Random), "e", c)?;
        p.theta1_raw = r.gen_range(-2.0..2.0);
        p.theta2_raw = r.gen_range(-2.0..2.0);
        let (h, w) = (r.gen_range(5..10), r.gen_range(5..10));
        let f = random_map(&mut r, [1, c, h, w], 1.5);
        let got = enmoe_forward(&f, &p)?;
        let reference = fusion::EnMoe {
            edge_conv: conv(&p.edge.conv),
            edge_bn: bn(&p.edge.bn),
            nbr_conv: conv(&p.neighbour.conv),
            nbr_bn: bn(&p.neighbour.bn),
            gate_h: conv(&p.gate_h),
            gate_l: conv(&p.gate_l),
            w_o: conv(&p.w_o),
            theta1_raw: p.theta1_raw as f64,
            theta2_raw: p.theta2_raw as f64,
        };
        worst = worst.max(fusion::enmoe(&vol(&f), &reference).max_abs_diff_f32(got.data()));
    }
    Ok((worst <= 1e-5, format!("50 instances, max diff {worst:.1e}")))
}

fn decode_check(seed: u64) -> Result<(bool, String)> {
    let (h, w) = (16, 16);
    let mut bad = 0;
    for i in 0..200 {
        let mut r = ChaCha8Rng::seed_from_u64(seed.wrapping_add(300 + i));
        let levels = r.gen_range(3..10);
        let heat: Vec<f32> = (0..h * w).map(|_| r.gen_range(0..=levels) as f32 / levels as f32).collect();
        let wh: Vec<f32> = (0..2 * h * w).map(|_| r.gen_range(-0.5..6.0)).collect();
        let off: Vec<f32> = (0..2 * h * w).map(|_| r.gen_range(0.0..1.0)).collect();
        let (k, thresh) = (r.gen_range(1..=10), r.gen_range(0.0..0.9f32));
        let got = decode_boxes(
            &FeatureMap::new([1, 1, h, w], heat.clone())?,
            &FeatureMap::new([1, 2, h, w], wh.clone())?,
            &FeatureMap::new([1, 2, h, w], off.clone())?,
            4,
            k,
            thresh,
        )?;
        let expect = detect::decode(
            &f64s(&heat),
            &f64s(&wh),
            &f64s(&off),
            h,
            w,
            4.0,
            k,
            thresh as f64,
            MIN_BOX_SIDE as f64,
        );
        let same = got.len() == expect.len()
            && got.iter().zip(&expect).all(|(g, e)| {
                [g.cx, g.cy, g.w, g.h].iter().zip(e).all(|(a, b)| (*a as f64 - b).abs() <= 1e-4)
                    && g.score as f64 == e[4]
            });
        bad += usize::from(!same);
    }
    Ok((bad == 0, format!("200 quantized heatmaps, {bad} mismatches")))
}

fn worst_relative(f: &dyn Fn(&[f64]) -> f64, x: &[f64], grad: &[f64]) -> f64 {
    numeric::numeric_gradient(f, x, 1e-4)
        .iter()
        .zip(grad)
        .map(|(n, a)| numeric::relative_error(*a, *n, 1e-8))
        .fold(0.0, f64::max)
}

fn gradient_check(seed: u64) -> Result<(bool, String)> {
    let cfg = LossConfig::default();
    let mut worst = 0f64;
    for i in 0..50 {
        let mut r = ChaCha8Rng::seed_from_u64(seed.wrapping_add(400 + i));
        let (h, w) = (r.gen_range(4..9), r.gen_range(4..9));
        let target = gaussian_target(&[(r.gen_range(0..w), r.gen_range(0..h))], &[(3.0, 2.5)], h, w)?.values;
        let pred: Vec<f64> = (0..h * w).map(|_| r.gen_range(0.02..0.98)).collect();
        let g = conf_loss(&pred, &target, &cfg)?.grad;
        worst = worst.max(worst_relative(&|p| conf_loss(p, &target, &cfg).map_or(f64::NAN, |l| l.value), &pred, &g));

        let p: Vec<f64> = (0..40).map(|_| r.gen_range(0.02..0.98)).collect();
        let gt: Vec<f64> = (0..40).map(|_| r.gen_bool(0.4) as u8 as f64).collect();
        let g = dice_loss(&p, &gt)?.grad;
        worst = worst.max(worst_relative(&|x| dice_loss(x, &gt).map_or(f64::NAN, |l| l.value), &p, &g));
        let g = focal_seg_loss(&p, &gt, &cfg)?.grad;
        worst = worst.max(worst_relative(&|x| focal_seg_loss(x, &gt, &cfg).map_or(f64::NAN, |l| l.value), &p, &g));

        let pb = [r.gen_range(0.0..8.0), r.gen_range(0.0..8.0), r.gen_range(0.5..5.0), r.gen_range(0.5..5.0)];
        let gb = [r.gen_range(0.0..8.0), r.gen_range(0.0..8.0), r.gen_range(0.5..5.0), r.gen_range(0.5..5.0)];
        let g = ciou_wh_loss(&[pb], &[gb])?.grad;
        let f = |x: &[f64]| ciou_wh_loss(&[[x[0], x[1], x[2], x[3]]], &[gb]).map_or(f64::NAN, |l| l.value);
        worst = worst.max(worst_relative(&f, &pb, &g));
    }
    Ok((worst <= 1e-3, format!("200 instances, worst relative error {worst:.1e}")))
}

fn metric_check(seed: u64) -> Result<(bool, String)> {
    let mut worst = 0f64;
    for i in 0..100 {
        let mut r = ChaCha8Rng::seed_from_u64(seed.wrapping_add(500 + i));
        let mut ps = Vec::new();
        let mut gs = Vec::new();
        for _ in 0..r.gen_range(1..4) {
            let mut random_box = |s: f32| {
                DetectionBox::new(
                    r.gen_range(0.0..20.0),
                    r.gen_range(0.0..20.0),
                    r.gen_range(2.0..9.0),
                    r.gen_range(2.0..9.0),
                    s,
                )
            };
            let g: Vec<_> = (0..3).map(|_| random_box(1.0)).collect();
            let p: Vec<_> = (0..4).map(|k| random_box(0.2 * k as f32 + 0.1)).collect();
            ps.push(p);
            gs.push(g);
        }
        let flat = |b: &DetectionBox| [b.cx, b.cy, b.w, b.h].map(|v| v as f64);
        let rp: Vec<Vec<_>> = ps.iter().map(|q| q.iter().map(|b| (flat(b), b.score as f64)).collect()).collect();
        let rg: Vec<Vec<_>> = gs.iter().map(|q| q.iter().map(flat).collect()).collect();
        let s = average_precision(&ps, &gs)?;
        let Some((a50, a, ar)) = detect::evaluate(&rp, &rg) else {
            bail!("reference evaluation found no queries");
        };
        worst = worst.max((s.ap50 - a50).abs()).max((s.ap50_95 - a).abs()).max((s.ar50_95 - ar).abs());

        let bits: Vec<Vec<u8>> = (0..2).map(|_| (0..64).map(|_| r.gen_bool(0.4) as u8).collect()).collect();
        let m = mask_miou(&[BinaryMask::new(8, 8, bits[0].clone())?], &[BinaryMask::new(8, 8, bits[1].clone())?])?;
        worst = worst.max((m - detect::miou(&bits[..1], &bits[1..])).abs());
    }
    Ok((worst <= 1e-9, format!("100 instances, max diff {worst:.1e}")))
}

fn mept_check(_seed: u64) -> Result<(bool, String)> {
    let rows = (0..10)
        .map(|i| EnergyRow {
            sample_id: format!("s{i}"),
            energy_trained: 40.0,
            energy_untrained: 12.0,
        })
        .collect();
    let m = mept(&[70.0], &EnergyTrace::new(rows, None)?)?;
    let reference = numeric::mept(&[70.0], &[40.0; 10], &[12.0; 10], 10.0);
    Ok(((m - 2.5).abs() <= 1e-9 && (m - reference).abs() <= 1e-12, format!("hand trace gives {m}")))
}
