use outfn::pipeline::{
    compute_rank_profile, full_complex_euler, oracle_full_complex, report_path, PipelineConfig,
};

fn some<T: Copy>(v: &[T]) -> Vec<Option<T>> {
    v.iter().map(|&x| Some(x)).collect()
}

#[test]
fn rank_four_profile_and_euler() {
    let rp = compute_rank_profile(&PipelineConfig::new(4)).unwrap();
    assert_eq!(rp.dims, some(&[1, 0, 0, 0, 1, 0]));
    assert!(rp.is_complete());
    assert_eq!(rp.euler_characteristic(), Some(2));
    assert_eq!(full_complex_euler(4).unwrap(), 2);
}

#[test]
fn rank_five_profile() {
    let rp = compute_rank_profile(&PipelineConfig::new(5)).unwrap();
    assert_eq!(rp.dims, some(&[1, 0, 0, 0, 0, 0, 0, 0]));
    assert_eq!(rp.euler_characteristic(), Some(1));
}

#[test]
fn rank_seven_low_degrees() {
    let mut cfg = PipelineConfig::new(7);
    cfg.p_values = vec![0, 1, 2];
    let rp = compute_rank_profile(&cfg).unwrap();
    assert_eq!(&rp.a[..3], &some(&[365, 3712, 23227]));
    assert_eq!(&rp.b[..3], &some(&[365, 1784, 5642]));
    assert_eq!(&rp.c[..3], &some(&[0, 364, 1420]));
    assert_eq!(rp.dims[0], Some(1));
    assert_eq!(rp.dims[1], Some(0));
    assert_eq!(rp.dims[2], None);
}

#[test]
fn oracle_matches_pipeline() {
    for n in 2..=3 {
        let rp = compute_rank_profile(&PipelineConfig::new(n)).unwrap();
        let oracle = oracle_full_complex(n).unwrap();
        assert_eq!(rp.dims, some(&oracle));
        let mut exact = PipelineConfig::new(n);
        exact.rational = true;
        assert_eq!(compute_rank_profile(&exact).unwrap().dims, rp.dims);
    }
}

#[test]
fn cached_rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = PipelineConfig::new(4);
    cfg.cache_dir = Some(dir.path().to_path_buf());
    let first = compute_rank_profile(&cfg).unwrap();
    let report = std::fs::read(report_path(dir.path(), 4)).unwrap();
    let second = compute_rank_profile(&cfg).unwrap();
    assert_eq!(std::fs::read(report_path(dir.path(), 4)).unwrap(), report);
    assert_eq!(first.to_json(false), second.to_json(false));
    assert_eq!(first, second);
    assert!(dir.path().join("basis-n4-p3.txt").exists());
    assert!(dir.path().join("graphs-n4-trivalent.txt").exists());
}
