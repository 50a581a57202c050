use std::fs;
use std::path::Path;

use xrsynth_core::metrics::evaluate_pairs;
use xrsynth_core::phantom::{generate, NoduleSpec, PhantomKind, PhantomOptions};
use xrsynth_core::targets::{build_dataset, discover_cases, read_case_list, DatasetConfig};
use xrsynth_core::volio::{
    read_manifest, read_mask2d, read_mask3d, read_nodules, read_volume, write_mask2d, write_mask3d,
    write_nodules, write_volume, CtVolume, Mask2D, Mask3D,
};
use xrsynth_core::ErrorClass;

fn phantom_case(dir: &Path, seed: u64, nodule: bool) {
    let opts = PhantomOptions {
        nodule: nodule.then(NoduleSpec::default),
        ..PhantomOptions::default()
    };
    let ph = generate(PhantomKind::TwoEllipsoid, [64, 64, 64], seed, &opts).unwrap();
    fs::create_dir_all(dir).unwrap();
    write_volume(&ph.volume, dir.join("volume.hdr")).unwrap();
    write_nodules(&ph.nodules, dir.join("nodules.json")).unwrap();
}

#[test]
fn volume_errors_are_classified() {
    let tmp = tempfile::tempdir().unwrap();
    let err = read_volume(tmp.path().join("nope.hdr")).unwrap_err();
    assert_eq!((err.code(), err.class()), ("E_MISSING", ErrorClass::Input));

    let vol = CtVolume::filled([4, 3, 2], [1.0; 3], 0).unwrap();
    let hdr = tmp.path().join("v.hdr");
    write_volume(&vol, &hdr).unwrap();
    fs::write(tmp.path().join("v.raw"), [0u8; 10]).unwrap();
    let err = read_volume(&hdr).unwrap_err();
    assert_eq!((err.code(), err.class()), ("E_SIZE", ErrorClass::Integrity));

    fs::write(&hdr, "dims = 4 3\ndata = v.raw\n").unwrap();
    assert_eq!(read_volume(&hdr).unwrap_err().code(), "E_HEADER");
}

#[test]
fn out_of_range_voxels_are_clamped_and_counted() {
    let tmp = tempfile::tempdir().unwrap();
    let hdr = tmp.path().join("c.hdr");
    fs::write(&hdr, "dims = (2, 1, 1)\nspacing_mm = [1, 1, 1]\ndata = c.raw\n").unwrap();
    let raw: Vec<u8> = [-2000i16, 4000].iter().flat_map(|v| v.to_le_bytes()).collect();
    fs::write(tmp.path().join("c.raw"), raw).unwrap();
    let loaded = read_volume(&hdr).unwrap();
    assert_eq!(loaded.clamped, 2);
    assert_eq!(loaded.volume.voxels(), &[-1024, 3071]);
}

#[test]
fn masks_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let m3 = Mask3D::from_fn([5, 4, 3], |x, y, z| (x * y + z) % 3 == 0);
    write_mask3d(&m3, tmp.path().join("m.vol")).unwrap();
    assert_eq!(read_mask3d(tmp.path().join("m.vol")).unwrap(), m3);
    let m2 = Mask2D::from_fn(7, 3, |c, r| c > r);
    write_mask2d(&m2, tmp.path().join("m.pgm")).unwrap();
    assert_eq!(read_mask2d(tmp.path().join("m.pgm")).unwrap(), m2);
}

#[test]
fn nodule_annotations_are_validated() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("n.json");
    fs::write(&path, r#"[{"id": "a", "voxels": [[1, 2, 3]], "ratings": [{"texture": 4, "subtlety": 5}]}]"#).unwrap();
    assert_eq!(read_nodules(&path, [4, 4, 4]).unwrap().len(), 1);
    assert_eq!(read_nodules(&path, [4, 2, 4]).unwrap_err().code(), "E_NODULE_BOUNDS");
    fs::write(&path, r#"[{"id": "a", "voxels": [[1, 1, 1]], "ratings": [{"texture": 6, "subtlety": 5}]}]"#).unwrap();
    assert_eq!(read_nodules(&path, [4, 4, 4]).unwrap_err().code(), "E_RATING");
    fs::write(&path, "  \n").unwrap();
    assert!(read_nodules(&path, [4, 4, 4]).unwrap().is_empty());
}

#[test]
fn dataset_build_is_idempotent_and_isolates_failures() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = tmp.path().join("cases");
    phantom_case(&cases.join("a"), 1, true);
    phantom_case(&cases.join("b"), 2, false);
    fs::create_dir_all(cases.join("c")).unwrap();
    fs::write(cases.join("c/volume.hdr"), "dims = 2 2 2\nspacing_mm = 1 1 1\ndata = missing.raw\n").unwrap();

    let specs = discover_cases(&cases).unwrap();
    assert_eq!(specs.iter().map(|c| c.case_id.as_str()).collect::<Vec<_>>(), ["a", "b", "c"]);

    let out = tmp.path().join("out");
    let first = build_dataset(&specs, &out, &DatasetConfig::default()).unwrap();
    assert_eq!((first.written, first.reused, first.failed), (2, 0, 1));
    let manifest = read_manifest(out.join("manifest.jsonl")).unwrap();
    assert_eq!(manifest.len(), 3);
    assert_eq!(manifest.get("a").unwrap().nodule_count, 1);
    let err = manifest.get("c").unwrap().error.clone().unwrap();
    assert!(err.starts_with("E_MISSING"), "{err}");

    let stamp = fs::metadata(out.join("manifest.jsonl")).unwrap().modified().unwrap();
    let before = fs::read(out.join("a/target.f32")).unwrap();
    let second = build_dataset(&specs, &out, &DatasetConfig::default()).unwrap();
    assert_eq!((second.written, second.reused, second.failed), (0, 2, 1));
    assert_eq!(fs::read(out.join("a/target.f32")).unwrap(), before);
    assert_eq!(fs::metadata(out.join("manifest.jsonl")).unwrap().modified().unwrap(), stamp);

    // scoring the targets against themselves gives a perfect report
    let report = evaluate_pairs(&manifest, &out, &out).unwrap();
    let scored: Vec<_> = report.cases.iter().filter_map(|c| c.result.as_ref().ok()).collect();
    assert_eq!(scored.len(), 2);
    assert!(scored.iter().all(|m| m.mae == 0.0 && m.ssim == 1.0));
}

#[test]
fn case_list_paths_are_relative_to_the_list() {
    let tmp = tempfile::tempdir().unwrap();
    phantom_case(&tmp.path().join("v1"), 3, false);
    let list = tmp.path().join("cases.txt");
    fs::write(&list, "# id volume nodules\none v1/volume.hdr v1/nodules.json\n").unwrap();
    let specs = read_case_list(&list).unwrap();
    assert_eq!(specs.len(), 1);
    assert_eq!(specs[0].volume_path, tmp.path().join("v1/volume.hdr"));
}
