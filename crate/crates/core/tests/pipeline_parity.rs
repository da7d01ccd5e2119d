use mscope::dataset::{generate, Family, ManifoldSpec};
use mscope::density::{knn_density, pak_density};
use mscope::id::{gride_fit, gride_scan, mu_ratios};
use mscope::neighbors::build_knn;
use mscope::peaks::cluster;
use mscope::pipeline::{array_dataset, cluster_run, id_scan, ClusterConfig, DensityMethod, IdChoice, IdScanConfig};

fn datasets() -> Vec<mscope::Dataset> {
    vec![
        generate(&ManifoldSpec::new(Family::Hypercube, 2, 1200).seed(1)).unwrap(),
        generate(&ManifoldSpec::new(Family::Sphere, 2, 1000).noise(0.01).seed(2)).unwrap(),
        generate(&ManifoldSpec::new(Family::Moebius, 2, 900).embed(5).seed(3)).unwrap(),
        generate(&ManifoldSpec::new(Family::Gaussian, 4, 700).embed(8).seed(4)).unwrap(),
        generate(&ManifoldSpec::new(Family::Spiral1d, 1, 1500).noise(1e-3).seed(5)).unwrap(),
    ]
}

#[test]
fn array_entry_reproduces_file_data() {
    for d in datasets() {
        let a = array_dataset(d.n(), d.dim(), d.points().to_vec()).unwrap();
        assert_eq!(a.points(), d.points());
    }
    let err = array_dataset(2, 3, vec![0.0; 6]).unwrap_err().to_string();
    assert!(err.contains("N too small"), "{err}");
    let mut buf = vec![0.5; 12];
    buf[7] = f64::INFINITY;
    let err = array_dataset(4, 3, buf).unwrap_err().to_string();
    assert!(err.contains("row 2") && err.contains("column 1"), "{err}");
}

#[test]
fn scan_equals_core_gride_scan() {
    for d in datasets() {
        let via = id_scan(&d, &IdScanConfig { k_max: 16, ..Default::default() }).unwrap();
        let direct = gride_scan(&build_knn(&d, 16).unwrap(), 16).unwrap();
        assert_eq!(via, direct);
    }
}

#[test]
fn cluster_equals_core_steps() {
    for d in datasets() {
        let run = cluster_run(&d, &ClusterConfig::default()).unwrap();
        let g = build_knn(&d, 30).unwrap();
        let id = gride_fit(&mu_ratios(&g, 2).unwrap()).unwrap().d_hat;
        let f = pak_density(&g, id).unwrap();
        let c = cluster(&g, &f, 30, 1.6).unwrap();
        assert_eq!(run.id_used, id);
        assert_eq!(run.density, f);
        assert_eq!(run.clustering, c);
        assert_eq!(run.clustering.labels.len(), d.n());

        let cfg = ClusterConfig { density: DensityMethod::Knn { k: 10 }, id: IdChoice::Fixed(2.0), z: 1e9, k_graph: 30 };
        let one = cluster_run(&d, &cfg).unwrap();
        assert_eq!(one.density, knn_density(&g, 10, 2.0).unwrap());
        assert_eq!(one.clustering.n_peaks(), 1);
        assert!(one.dendrogram.is_none());
    }
}

#[test]
fn runs_are_deterministic() {
    let d = &datasets()[1];
    let a = cluster_run(d, &ClusterConfig::default()).unwrap();
    let b = cluster_run(d, &ClusterConfig::default()).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}
