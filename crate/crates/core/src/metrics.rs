//! Losses and evaluation metrics over images, masks, and ranked scores.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::drr::normalize_unit;
use crate::error::{Error, Result};
use crate::exec;
use crate::volio::{read_image, DatasetManifest, GrayImage, Mask2D, Occupancy, RangeTag};

/// Extra loss weight on nodule pixels.
pub const DEFAULT_NODULE_WEIGHT: f64 = 30.0;
pub const DEFAULT_REPLICATES: usize = 5000;
pub const BCE_EPSILON: f64 = 1e-7;

fn same_dims(a: &GrayImage, b: &GrayImage) -> Result<()> {
    a.require_same_dims(b)
}

fn mask_dims(img: &GrayImage, mask: &Mask2D) -> Result<()> {
    if img.dims() != mask.dims() {
        return Err(Error::DimMismatch(format!("image {:?} vs mask {:?}", img.dims(), mask.dims())));
    }
    Ok(())
}

fn pairs<'a>(a: &'a GrayImage, b: &'a GrayImage) -> impl Iterator<Item = (f64, f64)> + 'a {
    a.pixels()
        .iter()
        .zip(b.pixels())
        .map(|(&x, &y)| (f64::from(x), f64::from(y)))
}

/// Mean of `|pred - target| * (1 + w_nodule * mask)`.
pub fn weighted_l1(pred: &GrayImage, target: &GrayImage, nodule_mask: &Mask2D, w_nodule: f64) -> Result<f64> {
    same_dims(pred, target)?;
    mask_dims(pred, nodule_mask)?;
    let sum: f64 = pairs(pred, target)
        .zip(nodule_mask.bits())
        .map(|((p, t), &m)| (p - t).abs() * if m { 1.0 + w_nodule } else { 1.0 })
        .sum();
    Ok(sum / pred.pixels().len() as f64)
}

/// Weighted binary cross entropy, averaged over pixels.
///
/// Predictions are clamped to `[eps, 1 - eps]`. With `pos_weight = None`
/// the positive class is weighted by `negatives / positives`, which fails
/// when the target holds only one class.
pub fn weighted_bce(pred: &GrayImage, target: &Mask2D, pos_weight: Option<f64>) -> Result<f64> {
    pred.require_range(RangeTag::Unit, "weighted_bce")?;
    mask_dims(pred, target)?;
    let pos_weight = match pos_weight {
        Some(w) if w >= 0.0 && w.is_finite() => w,
        Some(w) => return Err(Error::InvalidParam(format!("pos_weight must be >= 0, got {w}"))),
        None => {
            let pos = target.count();
            let neg = target.bits().len() - pos;
            if pos == 0 || neg == 0 {
                return Err(Error::InvalidParam(
                    "target has a single class; pass pos_weight explicitly".into(),
                ));
            }
            neg as f64 / pos as f64
        }
    };
    let sum: f64 = pred
        .pixels()
        .iter()
        .zip(target.bits())
        .map(|(&p, &t)| {
            let p = f64::from(p).clamp(BCE_EPSILON, 1.0 - BCE_EPSILON);
            if t {
                -pos_weight * p.ln()
            } else {
                -(1.0 - p).ln()
            }
        })
        .sum();
    Ok(sum / pred.pixels().len() as f64)
}

pub fn mae(pred: &GrayImage, target: &GrayImage) -> Result<f64> {
    same_dims(pred, target)?;
    Ok(pairs(pred, target).map(|(p, t)| (p - t).abs()).sum::<f64>() / pred.pixels().len() as f64)
}

pub fn mse(pred: &GrayImage, target: &GrayImage) -> Result<f64> {
    same_dims(pred, target)?;
    Ok(pairs(pred, target).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / pred.pixels().len() as f64)
}

/// PSNR in dB for a given mean squared error. Zero error gives `+inf`.
pub fn psnr_from_mse(mse: f64, peak: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (peak * peak / mse).log10()
    }
}

/// `10 log10(peak^2 / mse)`; identical images give `f64::INFINITY`.
pub fn psnr(pred: &GrayImage, target: &GrayImage, peak: f64) -> Result<f64> {
    if !(peak > 0.0) {
        return Err(Error::InvalidParam(format!("peak must be > 0, got {peak}")));
    }
    Ok(psnr_from_mse(mse(pred, target)?, peak))
}

/// SSIM settings: square uniform window, stability constants, dynamic range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsimParams {
    pub window: usize,
    pub k1: f64,
    pub k2: f64,
    pub dynamic_range: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        SsimParams {
            window: 8,
            k1: 0.01,
            k2: 0.03,
            dynamic_range: 1.0,
        }
    }
}

/// Mean SSIM with default parameters.
pub fn ssim(pred: &GrayImage, target: &GrayImage) -> Result<f64> {
    ssim_with(pred, target, &SsimParams::default())
}

/// Mean SSIM over every window position (stride 1), with population
/// variances and covariance inside each window.
pub fn ssim_with(a: &GrayImage, b: &GrayImage, p: &SsimParams) -> Result<f64> {
    a.require_range(RangeTag::Unit, "ssim")?;
    b.require_range(RangeTag::Unit, "ssim")?;
    same_dims(a, b)?;
    let (w, h) = a.dims();
    let k = p.window;
    if k == 0 || k > w || k > h {
        return Err(Error::InvalidParam(format!("SSIM window {k} does not fit {w}x{h}")));
    }
    let c1 = (p.k1 * p.dynamic_range).powi(2);
    let c2 = (p.k2 * p.dynamic_range).powi(2);
    let n = (k * k) as f64;
    let (nx, ny) = (w - k + 1, h - k + 1);
    let row_sums = exec::map_indexed(ny, |y0| {
        let mut acc = 0.0;
        for x0 in 0..nx {
            let (mut sa, mut sb) = (0.0, 0.0);
            for y in y0..y0 + k {
                for x in x0..x0 + k {
                    sa += f64::from(a.get(x, y));
                    sb += f64::from(b.get(x, y));
                }
            }
            let (ma, mb) = (sa / n, sb / n);
            let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
            for y in y0..y0 + k {
                for x in x0..x0 + k {
                    let da = f64::from(a.get(x, y)) - ma;
                    let db = f64::from(b.get(x, y)) - mb;
                    va += da * da;
                    vb += db * db;
                    cov += da * db;
                }
            }
            let (va, vb, cov) = (va / n, vb / n, cov / n);
            acc += ((2.0 * ma * mb + c1) * (2.0 * cov + c2))
                / ((ma * ma + mb * mb + c1) * (va + vb + c2));
        }
        acc
    });
    Ok(row_sums.iter().sum::<f64>() / (nx * ny) as f64)
}

/// `2|a ∩ b| / (|a| + |b|)`; two empty masks score 1.
pub fn dice<M: Occupancy>(a: &M, b: &M) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::DimMismatch(format!("{:?} vs {:?}", a.shape(), b.shape())));
    }
    let (mut inter, mut na, mut nb) = (0usize, 0usize, 0usize);
    for (&x, &y) in a.bits().iter().zip(b.bits()) {
        inter += usize::from(x && y);
        na += usize::from(x);
        nb += usize::from(y);
    }
    if na + nb == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * inter as f64 / (na + nb) as f64)
}

fn check_scores(scores: &[f64], labels: &[bool]) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(Error::DimMismatch(format!(
            "{} scores vs {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidData("NaN score".into()));
    }
    Ok(())
}

/// Average precision: `sum (R_k - R_{k-1}) P_k` over distinct score
/// thresholds in descending order, tied scores entering together.
pub fn average_precision(scores: &[f64], labels: &[bool]) -> Result<f64> {
    check_scores(scores, labels)?;
    let positives = labels.iter().filter(|&&l| l).count();
    if positives == 0 {
        return Err(Error::NoPositives);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&i, &j| scores[j].total_cmp(&scores[i]));
    Ok(ap_sorted(&order, scores, labels, positives))
}

fn ap_sorted(order: &[usize], scores: &[f64], labels: &[bool], positives: usize) -> f64 {
    let (mut tp, mut seen, mut ap, mut prev_recall) = (0usize, 0usize, 0.0, 0.0);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            tp += usize::from(labels[order[i]]);
            seen += 1;
            i += 1;
        }
        let recall = tp as f64 / positives as f64;
        ap += (recall - prev_recall) * (tp as f64 / seen as f64);
        prev_recall = recall;
    }
    ap
}

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapAP {
    pub ap_mean: f64,
    /// Sample standard deviation over valid replicates; 0 when undefined.
    pub ap_std: f64,
    pub replicates: usize,
    pub seed: u64,
    /// Replicates drawn without any positive label, excluded from the stats.
    pub skipped: usize,
    /// False when fewer than two replicates were valid.
    pub std_defined: bool,
}

/// Bootstrap distribution of AP: each replicate resamples cases with
/// replacement from its own stream of a seeded generator, so the result
/// depends only on `seed` and not on scheduling.
pub fn bootstrap_ap(scores: &[f64], labels: &[bool], replicates: usize, seed: u64) -> Result<BootstrapAP> {
    check_scores(scores, labels)?;
    if replicates == 0 {
        return Err(Error::InvalidParam("replicates must be >= 1".into()));
    }
    if !labels.iter().any(|&l| l) {
        return Err(Error::NoPositives);
    }
    let n = scores.len();
    let aps: Vec<Option<f64>> = exec::map_indexed(replicates, |r| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(r as u64);
        let idx: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
        let s: Vec<f64> = idx.iter().map(|&i| scores[i]).collect();
        let l: Vec<bool> = idx.iter().map(|&i| labels[i]).collect();
        average_precision(&s, &l).ok()
    });
    let valid: Vec<f64> = aps.iter().flatten().copied().collect();
    let skipped = replicates - valid.len();
    if valid.is_empty() {
        return Err(Error::NoPositives);
    }
    let m = valid.len() as f64;
    let ap_mean = valid.iter().sum::<f64>() / m;
    let std_defined = valid.len() >= 2;
    let ap_std = if std_defined {
        (valid.iter().map(|v| (v - ap_mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(BootstrapAP {
        ap_mean,
        ap_std,
        replicates,
        seed,
        skipped,
        std_defined,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageMetrics {
    pub mae: f64,
    pub mse: f64,
    pub psnr_db: f64,
    pub ssim: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseMetrics {
    pub case_id: String,
    /// Metrics, or why the case could not be scored.
    pub result: std::result::Result<ImageMetrics, String>,
}

/// Per-case metrics with mean and population standard deviation over the
/// cases that were scored.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub cases: Vec<CaseMetrics>,
    pub mean: ImageMetrics,
    pub std: ImageMetrics,
}

/// MAE, MSE, PSNR (peak 1) and SSIM of two images after min-max scaling
/// both to the unit range.
pub fn image_metrics(pred: &GrayImage, target: &GrayImage) -> Result<ImageMetrics> {
    let (p, t) = (normalize_unit(pred)?, normalize_unit(target)?);
    let mse = mse(&p, &t)?;
    Ok(ImageMetrics {
        mae: mae(&p, &t)?,
        mse,
        psnr_db: psnr_from_mse(mse, 1.0),
        ssim: ssim(&p, &t)?,
    })
}

fn aggregate(values: &[ImageMetrics]) -> (ImageMetrics, ImageMetrics) {
    let col = |f: fn(&ImageMetrics) -> f64| -> (f64, f64) {
        if values.is_empty() {
            return (f64::NAN, f64::NAN);
        }
        let n = values.len() as f64;
        let mean = values.iter().map(f).sum::<f64>() / n;
        let var = values.iter().map(|v| (f(v) - mean).powi(2)).sum::<f64>() / n;
        (mean, if var.is_nan() { f64::NAN } else { var.sqrt() })
    };
    let (mae_m, mae_s) = col(|m| m.mae);
    let (mse_m, mse_s) = col(|m| m.mse);
    let (psnr_m, psnr_s) = col(|m| m.psnr_db);
    let (ssim_m, ssim_s) = col(|m| m.ssim);
    (
        ImageMetrics { mae: mae_m, mse: mse_m, psnr_db: psnr_m, ssim: ssim_m },
        ImageMetrics { mae: mae_s, mse: mse_s, psnr_db: psnr_s, ssim: ssim_s },
    )
}

/// Where the prediction for `case_id` is looked up under `pred_dir`: first
/// mirroring the dataset layout (`<case_id>/target.f32`), then flat files
/// `<case_id>.f32` and `<case_id>.pgm`.
pub fn prediction_candidates(pred_dir: &Path, case_id: &str) -> [std::path::PathBuf; 3] {
    [
        pred_dir.join(case_id).join("target.f32"),
        pred_dir.join(format!("{case_id}.f32")),
        pred_dir.join(format!("{case_id}.pgm")),
    ]
}

/// Scores predictions in `pred_dir` against the targets of a manifest
/// located in `manifest_dir`. Cases that failed generation or lack a
/// prediction are reported with an error and left out of the aggregates.
pub fn evaluate_pairs(
    manifest: &DatasetManifest,
    manifest_dir: impl AsRef<Path>,
    pred_dir: impl AsRef<Path>,
) -> Result<MetricReport> {
    let (root, pred_dir) = (manifest_dir.as_ref(), pred_dir.as_ref());
    let cases: Vec<CaseMetrics> = exec::map_indexed(manifest.records.len(), |i| {
        let rec = &manifest.records[i];
        let result = (|| {
            if let Some(e) = &rec.error {
                return Err(format!("generation failed: {e}"));
            }
            let pred_path = prediction_candidates(pred_dir, &rec.case_id)
                .into_iter()
                .find(|p| p.is_file())
                .ok_or_else(|| "missing prediction".to_string())?;
            let pred = read_image(&pred_path).map_err(|e| e.to_string())?;
            let target = read_image(root.join(&rec.target_path)).map_err(|e| e.to_string())?;
            image_metrics(&pred, &target).map_err(|e| e.to_string())
        })();
        CaseMetrics {
            case_id: rec.case_id.clone(),
            result,
        }
    });
    let scored: Vec<ImageMetrics> = cases.iter().filter_map(|c| c.result.clone().ok()).collect();
    let (mean, std) = aggregate(&scored);
    Ok(MetricReport { cases, mean, std })
}

fn fmt_metric(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v.is_nan() {
        "NA".into()
    } else {
        format!("{v}")
    }
}

impl MetricReport {
    /// CSV with header `case_id,mae,mse,psnr_db,ssim`, one row per case
    /// (`NA` for unscored cases), then `MEAN` and `STD` rows.
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["case_id", "mae", "mse", "psnr_db", "ssim"])?;
        let row = |label: &str, m: &ImageMetrics| {
            vec![
                label.to_string(),
                fmt_metric(m.mae),
                fmt_metric(m.mse),
                fmt_metric(m.psnr_db),
                fmt_metric(m.ssim),
            ]
        };
        for c in &self.cases {
            match &c.result {
                Ok(m) => w.write_record(row(&c.case_id, m))?,
                Err(_) => w.write_record([c.case_id.as_str(), "NA", "NA", "NA", "NA"])?,
            }
        }
        w.write_record(row("MEAN", &self.mean))?;
        w.write_record(row("STD", &self.std))?;
        w.into_inner()
            .map_err(|e| Error::InvalidData(format!("csv flush: {e}")))
    }
}
