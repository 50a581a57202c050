use std::path::{Path, PathBuf};

use clap::Args;
use xrsynth_core::drr::{self, normalize_unit};
use xrsynth_core::enhance::{self, baseline_extract, fallback_lung_mask};
use xrsynth_core::lungseg::{lung_mask_3d, project_mask};
use xrsynth_core::metrics::{average_precision, bootstrap_ap, evaluate_pairs};
use xrsynth_core::phantom::{self, NoduleSpec, PhantomKind, PhantomOptions};
use xrsynth_core::targets::{build_dataset, discover_cases, read_case_list, DatasetConfig};
use xrsynth_core::volio::{
    read_image, read_manifest, read_mask2d, read_volume, write_image, write_mask2d, write_mask3d,
    write_nodules, write_volume, GrayImage, ImageFormat, Rating, RangeTag,
};

use crate::config::{parse_dims, parse_pair, PipelineConfig};
use crate::{DrrArgs, Failure, SegArgs};

fn ensure_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| {
        Failure::from(xrsynth_core::Error::Io {
            path: dir.to_path_buf(),
            source: e,
        })
    })
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| {
        Failure::from(xrsynth_core::Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    })
}

fn apply_drr(cfg: &mut PipelineConfig, a: &DrrArgs) {
    if let Some(v) = a.mu_water {
        cfg.drr.mu_water = v;
    }
    if let Some(v) = a.beta {
        cfg.drr.beta = v;
    }
}

fn apply_seg(cfg: &mut PipelineConfig, a: &SegArgs) -> Result<(), Failure> {
    if let Some(v) = a.threshold {
        cfg.seg.hu_threshold = v;
    }
    if let Some(c) = &a.connectivity {
        cfg.seg.connectivity = c.parse()?;
    }
    if let Some(v) = a.max_components {
        cfg.seg.max_components = v;
    }
    if a.keep_border_components {
        cfg.seg.exclude_border_components = false;
    }
    Ok(())
}

/// Display preview; constant images render black.
fn preview(img: &GrayImage) -> Result<GrayImage, Failure> {
    match normalize_unit(img) {
        Ok(u) => Ok(u),
        Err(xrsynth_core::Error::DegenerateRange) => {
            Ok(GrayImage::filled(img.width(), img.height(), 0.0, RangeTag::Unit)?)
        }
        Err(e) => Err(e.into()),
    }
}

fn parse_ratings(s: &str) -> Result<Vec<Rating>, String> {
    s.split(',')
        .map(|r| {
            let (t, u) = r
                .trim()
                .split_once(':')
                .ok_or_else(|| format!("rating `{r}` is not texture:subtlety"))?;
            let t: u8 = t.parse().map_err(|_| format!("bad texture `{t}`"))?;
            let u: u8 = u.parse().map_err(|_| format!("bad subtlety `{u}`"))?;
            if !(1..=5).contains(&t) || !(1..=5).contains(&u) {
                return Err(format!("rating `{r}` outside 1..=5"));
            }
            Ok(Rating {
                texture: t,
                subtlety: u,
            })
        })
        .collect()
}

#[derive(Debug, Args)]
pub struct PhantomArgs {
    /// air, water or two-ellipsoid.
    kind: String,
    /// Volume size as NX,NY,NZ.
    #[arg(long, default_value = "128,128,128", value_parser = parse_dims)]
    dims: [usize; 3],
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Put a water pocket inside the left lung.
    #[arg(long)]
    hole: bool,
    /// Put a dense spherical nodule inside the right lung.
    #[arg(long)]
    nodule: bool,
    #[arg(long, default_value_t = 60, allow_hyphen_values = true)]
    nodule_hu: i16,
    #[arg(long, default_value_t = 3.0)]
    nodule_radius: f64,
    /// Per-radiologist `texture:subtlety` ratings, comma separated.
    #[arg(long, default_value = "5:5,5:5,4:5")]
    nodule_ratings: String,
    /// Smallest lung semi-axis in voxels.
    #[arg(long, default_value_t = 8.0)]
    min_radius: f64,
    #[arg(short, long)]
    out: PathBuf,
}

pub fn phantom(a: PhantomArgs) -> Result<(), Failure> {
    let kind: PhantomKind = a.kind.parse()?;
    let ratings = parse_ratings(&a.nodule_ratings).map_err(Failure::usage)?;
    let opts = PhantomOptions {
        min_radius: a.min_radius,
        hole: a.hole,
        nodule: a.nodule.then(|| NoduleSpec {
            hu: a.nodule_hu,
            radius: a.nodule_radius,
            ratings: ratings.clone(),
        }),
        ..PhantomOptions::default()
    };
    let p = phantom::generate(kind, a.dims, a.seed, &opts)?;
    ensure_dir(&a.out)?;
    write_volume(&p.volume, a.out.join("volume.hdr"))?;
    write_mask3d(&p.lung_mask, a.out.join("lung_mask_gt.vol"))?;
    write_nodules(&p.nodules, a.out.join("nodules.json"))?;
    Ok(())
}

#[derive(Debug, Args)]
pub struct DrrCmdArgs {
    /// Volume header file.
    volume: PathBuf,
    #[command(flatten)]
    params: DrrArgs,
    /// Output directory.
    #[arg(short, long)]
    out: PathBuf,
}

pub fn drr(a: DrrCmdArgs, mut cfg: PipelineConfig) -> Result<(), Failure> {
    apply_drr(&mut cfg, &a.params);
    cfg.drr.validate()?;
    let loaded = read_volume(&a.volume)?;
    let img = drr::drr(&loaded.volume, &cfg.drr)?;
    ensure_dir(&a.out)?;
    write_image(&img, a.out.join("drr.f32"), ImageFormat::F32Raw)?;
    write_image(&preview(&img)?, a.out.join("drr.pgm"), ImageFormat::Pgm16)?;
    write_text(
        &a.out.join("params.txt"),
        &format!(
            "mu_water = {}\nbeta = {}\nclamped_voxels = {}\n",
            cfg.drr.mu_water, cfg.drr.beta, loaded.clamped
        ),
    )
}

#[derive(Debug, Args)]
pub struct LungsegArgs {
    /// Volume header file.
    volume: PathBuf,
    #[command(flatten)]
    params: SegArgs,
    /// Output directory.
    #[arg(short, long)]
    out: PathBuf,
}

pub fn lungseg(a: LungsegArgs, mut cfg: PipelineConfig) -> Result<(), Failure> {
    apply_seg(&mut cfg, &a.params)?;
    let vol = read_volume(&a.volume)?.volume;
    let mask = lung_mask_3d(&vol, &cfg.seg)?;
    ensure_dir(&a.out)?;
    write_mask3d(&mask, a.out.join("lung_mask_3d.vol"))?;
    write_mask2d(&project_mask(&mask), a.out.join("lung_mask_2d.pgm"))?;
    let s = &cfg.seg;
    write_text(
        &a.out.join("params.txt"),
        &format!(
            "hu_threshold = {}\nconnectivity = {}\nmax_components = {}\nexclude_border_components = {}\n",
            s.hu_threshold,
            match s.connectivity {
                xrsynth_core::lungseg::Connectivity::Four => 4,
                xrsynth_core::lungseg::Connectivity::Eight => 8,
            },
            s.max_components,
            s.exclude_border_components
        ),
    )
}

#[derive(Debug, Args)]
pub struct DatasetArgs {
    /// Directory of cases, or a case-list file.
    cases: PathBuf,
    #[command(flatten)]
    drr: DrrArgs,
    #[command(flatten)]
    seg: SegArgs,
    /// Exit with status 3 if any case fails.
    #[arg(long)]
    strict: bool,
    /// Output directory.
    #[arg(short, long)]
    out: PathBuf,
}

pub fn dataset(a: DatasetArgs, mut cfg: PipelineConfig) -> Result<(), Failure> {
    apply_drr(&mut cfg, &a.drr);
    apply_seg(&mut cfg, &a.seg)?;
    let cases = if a.cases.is_dir() {
        discover_cases(&a.cases)?
    } else {
        read_case_list(&a.cases)?
    };
    let build = build_dataset(
        &cases,
        &a.out,
        &DatasetConfig {
            drr: cfg.drr,
            seg: cfg.seg,
            filter: cfg.filter,
            workers: cfg.workers,
        },
    )?;
    println!(
        "cases={} written={} reused={} failed={}",
        build.manifest.len(),
        build.written,
        build.reused,
        build.failed
    );
    for r in build.manifest.records.iter().filter(|r| !r.is_ok()) {
        eprintln!("case {}: {}", r.case_id, r.error.as_deref().unwrap_or(""));
    }
    if a.strict && build.failed > 0 {
        return Err(Failure::integrity(
            "E_CASES_FAILED",
            format!("{} of {} cases failed", build.failed, build.manifest.len()),
        ));
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct EnhanceArgs {
    /// Input radiograph (pgm or f32raw).
    #[arg(long)]
    cxr: PathBuf,
    /// Extracted lung-structure image.
    #[arg(long, conflicts_with = "baseline", required_unless_present = "baseline")]
    lung_pred: Option<PathBuf>,
    /// Use the model-free detail extractor instead of a prediction.
    #[arg(long)]
    baseline: bool,
    /// Lung mask (pgm). Without it, `--baseline` derives one by thresholding.
    #[arg(long)]
    mask: Option<PathBuf>,
    /// Enhancement weights; one output per value.
    #[arg(short = 'w', long = "weight")]
    weights: Vec<f64>,
    /// Skip histogram equalization and CLAHE.
    #[arg(long)]
    no_preprocess: bool,
    /// CLAHE tile size as W,H [default: 40,40].
    #[arg(long, value_parser = parse_pair)]
    clahe_window: Option<(usize, usize)>,
    /// CLAHE clip limit [default: 0.01].
    #[arg(long)]
    clahe_clip: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    lung_mean: Option<f64>,
    #[arg(long)]
    lung_std: Option<f64>,
    /// Also write preprocessed, lung and lung-normalized images.
    #[arg(long)]
    emit_intermediates: bool,
    /// Output directory.
    #[arg(short, long)]
    out: PathBuf,
}

/// File name for the output at weight `w`.
pub fn enhanced_name(w: f64) -> String {
    format!("enhanced_w{w}.pgm")
}

pub fn enhance(a: EnhanceArgs, mut cfg: PipelineConfig) -> Result<(), Failure> {
    let p = &mut cfg.enhance;
    if a.no_preprocess {
        p.preprocess = false;
    }
    if let Some(v) = a.clahe_window {
        p.clahe_window = v;
    }
    if let Some(v) = a.clahe_clip {
        p.clahe_clip = v;
    }
    if let Some(v) = a.lung_mean {
        p.lung_mean = v;
    }
    if let Some(v) = a.lung_std {
        p.lung_std = v;
    }
    let weights = if !a.weights.is_empty() {
        a.weights.clone()
    } else if !cfg.weights.is_empty() {
        cfg.weights.clone()
    } else {
        vec![cfg.enhance.w]
    };
    for &w in &weights {
        cfg.enhance.w = w;
        cfg.enhance.validate()?;
    }

    let cxr = read_image(&a.cxr)?;
    let mut mask = a.mask.as_deref().map(read_mask2d).transpose()?;
    let lung_pred = match &a.lung_pred {
        Some(p) => read_image(p)?,
        None => {
            if mask.is_none() {
                mask = Some(fallback_lung_mask(&cxr)?);
            }
            baseline_extract(&normalize_unit(&cxr)?, mask.as_ref().expect("mask set above"))?
        }
    };
    let prepared = enhance::prepare(&cxr, &lung_pred, mask.as_ref(), &cfg.enhance)?;

    ensure_dir(&a.out)?;
    for &w in &weights {
        let out = prepared.fuse(w)?;
        write_image(&out, a.out.join(enhanced_name(w)), ImageFormat::Pgm16)?;
    }
    if a.emit_intermediates {
        write_image(&prepared.preprocessed, a.out.join("preprocessed.pgm"), ImageFormat::Pgm16)?;
        write_image(&prepared.lung, a.out.join("lung.pgm"), ImageFormat::Pgm16)?;
        if let Some(m) = &mask {
            write_mask2d(m, a.out.join("lung_mask.pgm"))?;
        }
        if let Some(n) = &prepared.lung_area_normalized {
            write_image(n, a.out.join("lung_area_normalized.f32"), ImageFormat::F32Raw)?;
        }
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// Dataset manifest whose targets are scored.
    #[arg(long, requires = "pred_dir", conflicts_with = "scores")]
    manifest: Option<PathBuf>,
    /// Directory of predictions: `<case>/target.f32`, `<case>.f32` or `<case>.pgm`.
    #[arg(long)]
    pred_dir: Option<PathBuf>,
    /// Score file: one `score label` pair per line, label 0 or 1.
    #[arg(long, required_unless_present = "manifest")]
    scores: Option<PathBuf>,
    /// Bootstrap replicates [default: 5000].
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

pub fn parse_scores(path: &Path) -> Result<(Vec<f64>, Vec<bool>), Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Failure::from(if e.kind() == std::io::ErrorKind::NotFound {
            xrsynth_core::Error::MissingFile(path.to_path_buf())
        } else {
            xrsynth_core::Error::Io {
                path: path.to_path_buf(),
                source: e,
            }
        })
    })?;
    let bad = |line: usize, why: &str| Failure::usage(format!("{}:{line}: {why}", path.display()));
    let (mut scores, mut labels) = (Vec::new(), Vec::new());
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split([',', ' ', '\t']).filter(|s| !s.is_empty()).collect();
        let [s, l] = fields.as_slice() else {
            return Err(bad(i + 1, "expected `score label`"));
        };
        let s: f64 = s.parse().map_err(|_| bad(i + 1, "score is not a number"))?;
        if !s.is_finite() {
            return Err(bad(i + 1, "score is not finite"));
        }
        let l = match *l {
            "0" => false,
            "1" => true,
            _ => return Err(bad(i + 1, "label must be 0 or 1")),
        };
        scores.push(s);
        labels.push(l);
    }
    if scores.is_empty() {
        return Err(Failure::usage(format!("{}: no scores", path.display())));
    }
    Ok((scores, labels))
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, bytes).map_err(|e| {
            Failure::from(xrsynth_core::Error::Io {
                path: p.to_path_buf(),
                source: e,
            })
        }),
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(bytes)
                .map_err(|e| Failure::usage(format!("stdout: {e}")))
        }
    }
}

pub fn metrics(a: MetricsArgs, cfg: PipelineConfig) -> Result<(), Failure> {
    if let Some(manifest_path) = &a.manifest {
        let pred_dir = a.pred_dir.as_deref().expect("clap enforces --pred-dir");
        let manifest = read_manifest(manifest_path)?;
        let root = manifest_path.parent().unwrap_or_else(|| Path::new(""));
        let report = evaluate_pairs(&manifest, root, pred_dir)?;
        for c in &report.cases {
            if let Err(e) = &c.result {
                eprintln!("case {}: {e}", c.case_id);
            }
        }
        return emit(a.out.as_deref(), &report.to_csv()?);
    }
    let scores_path = a.scores.as_deref().expect("clap enforces --scores");
    let seed = a
        .seed
        .or(cfg.seed)
        .ok_or_else(|| Failure::usage("--seed is required for bootstrap evaluation"))?;
    let replicates = a.replicates.unwrap_or(cfg.replicates);
    let (scores, labels) = parse_scores(scores_path)?;
    let ap = average_precision(&scores, &labels)?;
    let boot = bootstrap_ap(&scores, &labels, replicates, seed)?;
    let json = serde_json::json!({
        "ap": ap,
        "ap_mean": boot.ap_mean,
        "ap_std": boot.ap_std,
        "replicates": boot.replicates,
        "seed": boot.seed,
        "skipped": boot.skipped,
        "std_defined": boot.std_defined,
    });
    let mut bytes = serde_json::to_vec(&json).expect("json value serializes");
    bytes.push(b'\n');
    emit(a.out.as_deref(), &bytes)
}
