use std::path::Path;
use std::process::{Command, Output};

use mscope::dataset::{load, Format};
use mscope::pipeline::{cluster_run, id_scan, ClusterConfig, DensityMethod, IdChoice, IdScanConfig};

fn mscope(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mscope"))
        .args(args)
        .current_dir(dir)
        .env_remove("MSCOPE_THREADS")
        .output()
        .unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn gen_exit_codes_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let out = mscope(&["gen", "--family", "spiral1d", "--n", "20000", "--sigma", "1e-3", "--out", "a.bin"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let summary = json(&out);
    assert_eq!(summary["n"], 20000);
    assert_eq!(summary["embed"], 2);
    assert!(dir.path().join("a.bin").exists());
    mscope(&["gen", "--family", "spiral1d", "--n", "20000", "--sigma", "1e-3", "--out", "b.bin"], dir.path());
    assert_eq!(std::fs::read(dir.path().join("a.bin")).unwrap(), std::fs::read(dir.path().join("b.bin")).unwrap());

    let out = mscope(&["gen", "--n", "10", "--out", "x.csv"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    let out = mscope(&["gen", "--family", "torus", "--out", "x.csv"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    // valid flags, invalid combination: runtime error
    let out = mscope(&["gen", "--family", "moebius", "--d", "3", "--out", "x.csv"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn id_scan_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    mscope(&["gen", "--family", "hypercube", "--d", "2", "--n", "4000", "--seed", "3", "--out", "cube.csv"], p);
    let out = mscope(&["id-scan", "--input", "cube.csv", "--out", "g.csv"], p);
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&p.join("g.csv"));
    assert_eq!(rows.len(), 6);
    let plateau: f64 = rows[3][4].parse().unwrap();
    assert!((plateau - 2.0).abs() < 0.1, "{plateau}");

    let out = mscope(&["id-scan", "--input", "cube.csv", "--method", "twonn", "--fractions", "1,1/2,1/4,1/8,1/16,1/32,1/64,1/128,1/256", "--out", "t.csv"], p);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(csv_rows(&p.join("t.csv")).len(), 9);

    assert_eq!(mscope(&["id-scan", "--input", "cube.csv", "--method", "pca"], p).status.code(), Some(2));
    assert_eq!(mscope(&["id-scan", "--input", "cube.csv", "--kmax", "48"], p).status.code(), Some(2));
    assert_eq!(mscope(&["id-scan", "--input", "cube.csv", "--fractions", "1,1/3"], p).status.code(), Some(2));
    assert_eq!(mscope(&["id-scan", "--input", "missing.csv"], p).status.code(), Some(1));
}

fn two_gaussians(path: &Path) {
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = rand_pcg::Pcg64::seed_from_u64(1);
    let mut s = String::new();
    for c in [0.0, 10.0] {
        for _ in 0..500 {
            let x: f64 = StandardNormal.sample(&mut rng);
            let y: f64 = StandardNormal.sample(&mut rng);
            s.push_str(&format!("{},{}\n", c + x, y));
        }
    }
    std::fs::write(path, s).unwrap();
}

#[test]
fn cluster_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    two_gaussians(&p.join("mix.csv"));
    let out = mscope(&["cluster", "--input", "mix.csv", "--out", "run"], p);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let s = json(&out);
    assert_eq!(s["n_clusters"], 2);
    assert_eq!(s["id"], "auto");
    let labels: Vec<String> = csv_rows(&p.join("run/clusters.csv")).into_iter().map(|r| r[1].clone()).collect();
    assert_eq!(labels.len(), 1000);
    assert_eq!(labels.iter().collect::<std::collections::BTreeSet<_>>().len(), 2);
    for f in ["saddles.csv", "dendrogram.csv", "peaks_2d.csv"] {
        assert!(p.join("run").join(f).exists());
    }

    let out = mscope(&["cluster", "--input", "mix.csv", "--z", "1e9", "--density", "knn", "--k", "20", "--id", "2", "--out", "one"], p);
    let s = json(&out);
    assert_eq!(s["n_clusters"], 1);
    assert_eq!(s["id"], 2.0);
    assert_eq!(mscope(&["cluster", "--input", "mix.csv", "--id", "many"], p).status.code(), Some(2));
    assert_eq!(mscope(&["cluster", "--input", "mix.csv", "--density", "kde"], p).status.code(), Some(2));
}

#[test]
fn overlap_and_chunks() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    mscope(&["gen", "--family", "gaussian", "--d", "3", "--n", "300", "--out", "a.csv"], p);
    let out = mscope(&["overlap", "--a", "a.csv", "--b", "a.csv", "--cka"], p);
    assert_eq!(out.status.code(), Some(0));
    let s = json(&out);
    assert_eq!(s["a:a"]["chi"], 1.0);
    assert_eq!(s["a:a"]["k"], 30);

    std::fs::write(p.join("short.txt"), "0\n1\n").unwrap();
    let out = mscope(&["overlap", "--a", "a.csv", "--labels", "short.txt"], p);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("labels"));
    let lab: String = (0..300).map(|i| format!("{}\n", i % 2)).collect();
    std::fs::write(p.join("lab.txt"), lab).unwrap();
    assert_eq!(mscope(&["overlap", "--a", "a.csv", "--labels", "lab.txt", "--k", "5"], p).status.code(), Some(0));

    mscope(&["gen", "--family", "gaussian", "--d", "40", "--n", "200", "--out", "wide.csv"], p);
    let out = mscope(&["--threads", "1", "chunks", "--input", "wide.csv", "--sizes", "8,16,32", "--repeats", "2", "--out", "c.csv"], p);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(csv_rows(&p.join("c.csv")).len(), 3);
    assert_eq!(mscope(&["chunks", "--input", "wide.csv", "--sizes", "8,x"], p).status.code(), Some(2));
    assert_eq!(mscope(&["chunks", "--input", "wide.csv", "--sizes", "80"], p).status.code(), Some(1));
}

#[test]
fn cli_tables_match_library_calls() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    mscope(&["gen", "--family", "swissroll", "--d", "2", "--n", "1500", "--sigma", "0.01", "--seed", "4", "--out", "s.bin"], p);
    let data = load(p.join("s.bin"), Format::Binary).unwrap();

    mscope(&["id-scan", "--input", "s.bin", "--kmax", "32", "--out", "g.csv"], p);
    let scan = id_scan(&data, &IdScanConfig { k_max: 32, ..Default::default() }).unwrap();
    assert_eq!(std::fs::read_to_string(p.join("g.csv")).unwrap(), scan.table().to_csv());

    mscope(&["cluster", "--input", "s.bin", "--density", "knn", "--k", "15", "--out", "c"], p);
    let cfg = ClusterConfig { density: DensityMethod::Knn { k: 15 }, id: IdChoice::Auto, ..Default::default() };
    let run = cluster_run(&data, &cfg).unwrap();
    assert_eq!(
        std::fs::read_to_string(p.join("c/clusters.csv")).unwrap(),
        run.clustering.table(&run.density).to_csv()
    );
}
