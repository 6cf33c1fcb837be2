use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use log::info;
use nanomvg::fixtures::scene;
use nanomvg::metrics::{average_precision, mask_miou, mept as mept_metric, EnergyTrace};
use nanomvg::raster::{load_input, mask_from_raster, mask_to_raster, planar_f32_bytes, Raster};
use nanomvg::{fuse_archive, generate_archive, InitMode, NanoMvg, RunConfig, Vocabulary, WeightArchive};

use crate::records;
use crate::{EvalArgs, FuseArgs, GenArgs, InferArgs, InitArg, MeptArgs, ModelArgs};

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p).with_context(|| format!("loading config {}", p.display())),
        None => Ok(RunConfig::default()),
    }
}

fn model_config(a: &ModelArgs) -> Result<RunConfig> {
    let mut cfg = load_config(a.config.as_deref())?;
    if let Some(k) = a.topk {
        cfg.topk = k;
    }
    if let Some(t) = a.score_thresh {
        cfg.score_thresh = t;
    }
    if let Some(t) = a.mask_thresh {
        cfg.mask_thresh = t;
    }
    cfg.attention_normalize |= a.attention_normalize;
    cfg.validate()?;
    Ok(cfg)
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

pub fn infer(a: InferArgs) -> Result<()> {
    let cfg = model_config(&a.model)?;
    let archive = WeightArchive::load(&a.model.weights)
        .with_context(|| format!("loading weights {}", a.model.weights.display()))?;
    let mut model = NanoMvg::from_archive(&archive, &cfg)?;
    if a.model.fused && !model.is_fused() {
        model = model.fused()?;
    }
    if a.model.train_mode && model.is_fused() {
        bail!("--train-mode needs multi-branch mask-head weights, archive is fused");
    }
    let vocab = match &a.model.vocab {
        Some(p) => Vocabulary::load(p).with_context(|| format!("loading vocabulary {}", p.display()))?,
        None => Vocabulary::fixture(),
    };
    let prompt = std::fs::read_to_string(&a.prompt).with_context(|| format!("reading {}", a.prompt.display()))?;
    let tokens = vocab.tokenize(prompt.trim(), cfg.encoder.text_len)?;
    let image = load_input(&a.image, cfg.input_size).context("image")?;
    let radar = load_input(&a.radar, cfg.input_size).context("radar")?;

    let out = model.forward(&image, &radar, &[tokens])?;
    let pred = model.postprocess(&out)?.remove(0);
    std::fs::create_dir_all(&a.out_dir)?;
    write(&a.out_dir.join("boxes.txt"), records::format(&pred.boxes))?;
    mask_to_raster(&pred.mask).save(a.out_dir.join("mask.pgm"))?;
    write(&a.out_dir.join("logits.f32"), planar_f32_bytes(&out.mask_logits))?;
    println!(
        "{} boxes, {} mask pixels -> {}",
        pred.boxes.len(),
        pred.mask.count(),
        a.out_dir.display()
    );
    Ok(())
}

pub fn fuse_rep(a: FuseArgs) -> Result<()> {
    let cfg = load_config(a.config.as_deref())?;
    let archive =
        WeightArchive::load(&a.input).with_context(|| format!("loading weights {}", a.input.display()))?;
    let fused = fuse_archive(&archive, &cfg)?;
    fused.save(&a.output)?;
    info!("{} entries in, {} out", archive.len(), fused.len());
    println!("fused archive written to {}", a.output.display());
    Ok(())
}

pub fn eval(a: EvalArgs) -> Result<()> {
    ensure!(a.preds.len() == a.gts.len(), "{} --pred files but {} --gt files", a.preds.len(), a.gts.len());
    ensure!(
        a.pred_masks.len() == a.gt_masks.len(),
        "{} --pred-mask files but {} --gt-mask files",
        a.pred_masks.len(),
        a.gt_masks.len()
    );
    ensure!(!a.preds.is_empty() || !a.pred_masks.is_empty(), "nothing to evaluate");
    if !a.preds.is_empty() {
        let preds = a.preds.iter().map(|p| records::load(p)).collect::<Result<Vec<_>>>()?;
        let gts = a.gts.iter().map(|p| records::load(p)).collect::<Result<Vec<_>>>()?;
        let s = average_precision(&preds, &gts)?;
        println!("AP50 {:.2}", s.ap50);
        println!("AP50:95 {:.2}", s.ap50_95);
        println!("AR50:95 {:.2}", s.ar50_95);
    }
    if !a.pred_masks.is_empty() {
        let load = |p: &Path| -> Result<_> {
            let r = Raster::load(p).with_context(|| format!("reading {}", p.display()))?;
            Ok(mask_from_raster(&r)?)
        };
        let preds = a.pred_masks.iter().map(|p| load(p)).collect::<Result<Vec<_>>>()?;
        let gts = a.gt_masks.iter().map(|p| load(p)).collect::<Result<Vec<_>>>()?;
        println!("mIoU {:.2}", mask_miou(&preds, &gts)?);
    }
    Ok(())
}

pub fn mept(a: MeptArgs) -> Result<()> {
    let trace = EnergyTrace::load(&a.trace, a.tau).with_context(|| format!("reading {}", a.trace.display()))?;
    let m = mept_metric(&a.perf, &trace)?;
    info!("relative power {} over {} evaluations", trace.power_relative(), trace.tau_evals());
    println!("{m}");
    Ok(())
}

pub fn gen_fixtures(a: GenArgs) -> Result<()> {
    let mut cfg = load_config(a.config.as_deref())?;
    cfg.input_size = a.size;
    cfg.seed = a.seed;
    cfg.validate()?;
    let mode = match a.init {
        InitArg::Random => InitMode::Random,
        InitArg::Zero => InitMode::Zero,
    };
    let archive = generate_archive(&cfg, a.seed, mode)?;
    let s = scene(a.size, a.seed)?;
    let dir = &a.out_dir;
    std::fs::create_dir_all(dir)?;
    write(&dir.join("config.txt"), cfg.to_text())?;
    archive.save(dir.join("weights.nmvg"))?;
    s.image.save(dir.join("image.ppm"))?;
    write(&dir.join("radar.rf32"), planar_f32_bytes(&s.radar))?;
    write(&dir.join("prompt.txt"), format!("{}\n", s.prompt))?;
    write(&dir.join("gt_boxes.txt"), records::format(&s.boxes))?;
    mask_to_raster(&s.mask).save(dir.join("gt_mask.pgm"))?;
    println!("{} parameters, prompt \"{}\" -> {}", archive.len(), s.prompt, dir.display());
    Ok(())
}
