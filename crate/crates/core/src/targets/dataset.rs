use std::collections::HashSet;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::{filter_nodules, lung_xray, nodule_mask, NoduleFilter};
use crate::drr::{drr, normalize_unit, DrrParams};
use crate::error::{Error, Result};
use crate::exec;
use crate::lungseg::{lung_mask_3d, project_mask, SegParams};
use crate::volio::{
    read_all, read_manifest, read_nodules, read_volume, write_image, write_manifest, write_mask2d,
    Checksums, DatasetManifest, ImageFormat, ManifestRecord,
};

/// Recorded in every manifest record: both members of a pair are min-max
/// scaled to `[0, 1]` before writing.
pub const NORMALIZATION: &str = "unit_minmax";

const MANIFEST_NAME: &str = "manifest.jsonl";
const SOURCE_NAME: &str = "source.f32";
const TARGET_NAME: &str = "target.f32";
const LUNG_MASK_NAME: &str = "lung_mask.pgm";
const NODULE_MASK_NAME: &str = "nodule_mask.pgm";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaseSpec {
    pub case_id: String,
    pub volume_path: PathBuf,
    /// Cases without a nodule file get an empty nodule mask.
    pub nodule_path: Option<PathBuf>,
}

#[derive(Debug, Clone, Default)]
pub struct DatasetConfig {
    pub drr: DrrParams,
    pub seg: SegParams,
    pub filter: NoduleFilter,
    /// Worker threads; `None` uses every available core.
    pub workers: Option<usize>,
}

/// Manifest plus what happened to each case on this run.
#[derive(Debug, Clone)]
pub struct DatasetBuild {
    pub manifest: DatasetManifest,
    pub written: usize,
    pub reused: usize,
    pub failed: usize,
}

fn validate_case_ids(cases: &[CaseSpec]) -> Result<()> {
    let mut seen = HashSet::new();
    for c in cases {
        let id = c.case_id.as_str();
        if id.is_empty() || id == "." || id == ".." || id.contains(['/', '\\']) {
            return Err(Error::InvalidParam(format!("invalid case_id `{id}`")));
        }
        if !seen.insert(id) {
            return Err(Error::InvalidParam(format!("duplicate case_id `{id}`")));
        }
    }
    Ok(())
}

fn rel(case_id: &str, name: &str) -> String {
    format!("{case_id}/{name}")
}

fn sha256_file(path: &Path) -> Result<String> {
    Ok(hex::encode(Sha256::digest(read_all(path)?)))
}

fn checksums_for(out_dir: &Path, r: &ManifestRecord) -> Result<Checksums> {
    Ok(Checksums {
        source: sha256_file(&out_dir.join(&r.source_path))?,
        target: sha256_file(&out_dir.join(&r.target_path))?,
        lung_mask: sha256_file(&out_dir.join(&r.lung_mask_path))?,
        nodule_mask: sha256_file(&out_dir.join(&r.nodule_mask_path))?,
    })
}

fn blank_record(case_id: &str) -> ManifestRecord {
    ManifestRecord {
        case_id: case_id.to_string(),
        source_path: rel(case_id, SOURCE_NAME),
        target_path: rel(case_id, TARGET_NAME),
        lung_mask_path: rel(case_id, LUNG_MASK_NAME),
        nodule_mask_path: rel(case_id, NODULE_MASK_NAME),
        nodule_count: 0,
        normalization: NORMALIZATION.to_string(),
        checksums: None,
        error: None,
    }
}

/// True when `prev` describes this case and its files are intact on disk.
fn reusable(prev: &ManifestRecord, out_dir: &Path) -> bool {
    let expected = blank_record(&prev.case_id);
    prev.is_ok()
        && prev.source_path == expected.source_path
        && prev.target_path == expected.target_path
        && prev.lung_mask_path == expected.lung_mask_path
        && prev.nodule_mask_path == expected.nodule_mask_path
        && prev.normalization == NORMALIZATION
        && prev
            .checksums
            .as_ref()
            .is_some_and(|c| checksums_for(out_dir, prev).is_ok_and(|now| &now == c))
}

fn process_case(case: &CaseSpec, out_dir: &Path, cfg: &DatasetConfig) -> Result<ManifestRecord> {
    let vol = read_volume(&case.volume_path)?.volume;
    let [nx, _, nz] = vol.dims();
    let nodules = match &case.nodule_path {
        Some(p) => read_nodules(p, vol.dims())?,
        None => Vec::new(),
    };

    let source = normalize_unit(&drr(&vol, &cfg.drr)?)?;
    let lung3d = lung_mask_3d(&vol, &cfg.seg)?;
    let lung2d = project_mask(&lung3d);
    let target = normalize_unit(&lung_xray(&vol, &lung3d, &cfg.drr)?).map_err(|e| match e {
        Error::DegenerateRange => Error::InvalidData("lung segmentation is empty".into()),
        e => e,
    })?;
    let kept = filter_nodules(&nodules, &cfg.filter);
    let nodule2d = nodule_mask(&kept, nx, nz)?;

    let mut record = blank_record(&case.case_id);
    record.nodule_count = kept.len();
    let case_dir = out_dir.join(&case.case_id);
    std::fs::create_dir_all(&case_dir).map_err(|e| Error::io(&case_dir, e))?;
    write_image(&source, out_dir.join(&record.source_path), ImageFormat::F32Raw)?;
    write_image(&target, out_dir.join(&record.target_path), ImageFormat::F32Raw)?;
    write_mask2d(&lung2d, out_dir.join(&record.lung_mask_path))?;
    write_mask2d(&nodule2d, out_dir.join(&record.nodule_mask_path))?;
    record.checksums = Some(checksums_for(out_dir, &record)?);
    Ok(record)
}

/// Generates source/target pairs and masks for every case under `out_dir`.
///
/// Layout is `<out_dir>/<case_id>/{source.f32,target.f32,lung_mask.pgm,nodule_mask.pgm}`
/// with `manifest.jsonl` at the root. Cases whose outputs already exist with
/// matching checksums in a previous manifest are not recomputed; a manifest
/// whose bytes would not change is not rewritten. Per-case failures are
/// recorded in the record's `error` field.
pub fn build_dataset(cases: &[CaseSpec], out_dir: impl AsRef<Path>, cfg: &DatasetConfig) -> Result<DatasetBuild> {
    let out_dir = out_dir.as_ref();
    validate_case_ids(cases)?;
    cfg.drr.validate()?;
    cfg.seg.validate()?;
    cfg.filter.validate()?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let manifest_path = out_dir.join(MANIFEST_NAME);
    let previous = read_manifest(&manifest_path).unwrap_or_default();

    let outcomes: Vec<(ManifestRecord, bool)> = exec::with_workers(cfg.workers, || {
        exec::map_indexed(cases.len(), |i| {
            let case = &cases[i];
            if let Some(prev) = previous.get(&case.case_id).filter(|p| reusable(p, out_dir)) {
                return (prev.clone(), false);
            }
            let record = process_case(case, out_dir, cfg).unwrap_or_else(|e| {
                let mut r = blank_record(&case.case_id);
                r.error = Some(format!("{}: {e}", e.code()));
                r
            });
            (record, true)
        })
    });

    let mut build = DatasetBuild {
        manifest: DatasetManifest::default(),
        written: 0,
        reused: 0,
        failed: 0,
    };
    for (record, fresh) in outcomes {
        match (record.is_ok(), fresh) {
            (false, _) => build.failed += 1,
            (true, true) => build.written += 1,
            (true, false) => build.reused += 1,
        }
        build.manifest.records.push(record);
    }

    let unchanged = read_all(&manifest_path).is_ok_and(|old| old == build.manifest.to_jsonl());
    if !unchanged {
        write_manifest(&build.manifest, &manifest_path)?;
    }
    Ok(build)
}

/// Finds cases in a directory: each subdirectory holding `volume.hdr`
/// (optional `nodules.json`), and each top-level `<id>.hdr` (optional
/// `<id>.nodules.json`). Sorted by case id.
pub fn discover_cases(dir: impl AsRef<Path>) -> Result<Vec<CaseSpec>> {
    let dir = dir.as_ref();
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut cases = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()).map(str::to_string) else {
            continue;
        };
        if path.is_dir() {
            let hdr = path.join("volume.hdr");
            if hdr.is_file() {
                let nod = path.join("nodules.json");
                cases.push(CaseSpec {
                    case_id: name,
                    volume_path: hdr,
                    nodule_path: nod.is_file().then_some(nod),
                });
            }
        } else if let Some(stem) = name.strip_suffix(".hdr") {
            let nod = dir.join(format!("{stem}.nodules.json"));
            cases.push(CaseSpec {
                case_id: stem.to_string(),
                volume_path: path.clone(),
                nodule_path: nod.is_file().then_some(nod),
            });
        }
    }
    cases.sort_by(|a, b| a.case_id.cmp(&b.case_id));
    Ok(cases)
}

/// Reads a case list: one `case_id volume_path [nodule_path]` per line,
/// `#` comments allowed, paths relative to the list file.
pub fn read_case_list(path: impl AsRef<Path>) -> Result<Vec<CaseSpec>> {
    let path = path.as_ref();
    let text = String::from_utf8(read_all(path)?).map_err(|_| Error::MalformedHeader {
        path: path.to_path_buf(),
        reason: "not valid UTF-8".into(),
    })?;
    let root = path.parent().unwrap_or_else(|| Path::new(""));
    let mut cases = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if !(2..=3).contains(&fields.len()) {
            return Err(Error::MalformedHeader {
                path: path.to_path_buf(),
                reason: format!("line {}: expected `case_id volume [nodules]`", i + 1),
            });
        }
        cases.push(CaseSpec {
            case_id: fields[0].to_string(),
            volume_path: root.join(fields[1]),
            nodule_path: fields.get(2).map(|p| root.join(p)),
        });
    }
    Ok(cases)
}
