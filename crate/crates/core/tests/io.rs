use nanomvg::config::RunConfig;
use nanomvg::heads::BinaryMask;
use nanomvg::params::InitMode;
use nanomvg::raster::{load_input, mask_from_raster, mask_to_raster, planar_f32_bytes, Raster};
use nanomvg::tensor::FeatureMap;
use nanomvg::{generate_archive, WeightArchive};

fn small_config() -> RunConfig {
    let mut cfg = RunConfig::default();
    for (k, v) in [
        ("input_size", "64"),
        ("stage_channels", "4,4,8,8"),
        ("fpn_channels", "8"),
        ("embed_dim", "8"),
        ("text_vocab", "32"),
    ] {
        cfg.set(k, v).unwrap();
    }
    cfg
}

#[test]
fn archive_survives_disk() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("w.nmvg");
    let archive = generate_archive(&small_config(), 5, InitMode::Random).unwrap();
    archive.save(&path).unwrap();
    let back = WeightArchive::load(&path).unwrap();
    assert_eq!(back, archive);

    let mut bytes = std::fs::read(&path).unwrap();
    bytes.truncate(bytes.len() - 3);
    assert!(WeightArchive::from_bytes(&bytes).is_err());
    assert!(WeightArchive::from_bytes(b"nope").is_err());
}

#[test]
fn rasters_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data: Vec<u8> = (0..4 * 3 * 3).map(|i| (i * 7 % 256) as u8).collect();
    let rgb = Raster::new(4, 3, 3, data).unwrap();
    let path = dir.path().join("a.ppm");
    rgb.save(&path).unwrap();
    assert_eq!(Raster::load(&path).unwrap(), rgb);

    let mask = BinaryMask::new(3, 2, vec![1, 0, 0, 1, 1, 0]).unwrap();
    let grey = mask_to_raster(&mask);
    let path = dir.path().join("m.pgm");
    grey.save(&path).unwrap();
    assert_eq!(mask_from_raster(&Raster::load(&path).unwrap()).unwrap(), mask);
}

#[test]
fn inputs_are_checked() {
    let dir = tempfile::tempdir().unwrap();
    let x = FeatureMap::from_fn([1, 3, 32, 32], |_, c, y, x| (c + y + x) as f32 / 64.0);
    let path = dir.path().join("r.rf32");
    std::fs::write(&path, planar_f32_bytes(&x)).unwrap();
    assert_eq!(load_input(&path, 32).unwrap(), x);
    assert!(load_input(&path, 64).is_err());

    let mut bad = x.clone();
    bad.set(0, 1, 2, 3, f32::NAN);
    std::fs::write(&path, planar_f32_bytes(&bad)).unwrap();
    assert!(load_input(&path, 32).is_err());

    let ppm = dir.path().join("i.ppm");
    Raster::new(32, 32, 3, vec![255; 32 * 32 * 3]).unwrap().save(&ppm).unwrap();
    let img = load_input(&ppm, 32).unwrap();
    assert!(img.data().iter().all(|&v| v == 1.0));
    assert!(load_input(dir.path().join("missing.ppm"), 32).is_err());
}
