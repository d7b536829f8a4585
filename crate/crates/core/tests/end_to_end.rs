use topview_core::synthetic::dataset::GROUND_TRUTH_FILE;
use topview_core::synthetic::scripts::{prop_script, ranking_script};
use topview_core::synthetic::{load_script, read_gt_rows, reference_histograms, synthesize, write_dataset};
use topview_core::{evaluate, run_directory, run_frames, Config};

#[test]
fn directory_run_equals_in_memory_run() {
    let cfg = Config::default();
    let refs = reference_histograms(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let script = ranking_script();
    let data = write_dataset(&script, &cfg, dir.path()).unwrap();

    let mem = run_frames(data.frames.iter().cloned().map(Ok), &data.background, &cfg, &refs, true).unwrap();
    let disk = run_directory(dir.path(), &cfg, &refs, true).unwrap();
    assert_eq!(mem.detections, disk.detections);
    assert_eq!(mem.trajectories, disk.trajectories);
    assert_eq!(mem.report, disk.report);

    let rows = read_gt_rows(&dir.path().join(GROUND_TRUTH_FILE)).unwrap();
    assert_eq!(rows.len(), data.rows.len());
    let (_, back) = load_script(dir.path().join("scenario.toml")).unwrap();
    assert_eq!(back, script);
}

#[test]
fn noiseless_walk_is_located_within_ten_centimeters() {
    let cfg = Config::default();
    let refs = reference_histograms(&cfg).unwrap();
    let mut script = ranking_script();
    script.noise_sigma_mm = 0.0;
    let data = synthesize(&script, &cfg).unwrap();
    let run = run_frames(data.frames.iter().cloned().map(Ok), &data.background, &cfg, &refs, true).unwrap();
    let ev = evaluate(&run, &data.rows, Some(&data.truth));
    assert_eq!(ev.false_negatives, 0);
    assert_eq!(ev.false_positives, 0);
    assert!(ev.position_mae_m.unwrap() <= 0.1, "{ev:?}");
    assert!(ev.map_tv_distance.unwrap() <= 0.05, "{ev:?}");
    assert_eq!(ev.ranking_matches, Some(true));
}

#[test]
fn a_box_is_never_reported_as_a_head() {
    let cfg = Config::default();
    let refs = reference_histograms(&cfg).unwrap();
    let mut script = prop_script();
    script.persons.clear();
    let data = synthesize(&script, &cfg).unwrap();
    let run = run_frames(data.frames.iter().cloned().map(Ok), &data.background, &cfg, &refs, true).unwrap();
    assert!(run.detections.iter().all(|(_, d)| d.is_empty()));
    assert!(run.tracks.is_empty());
}
