//! The in-memory entry points used by host-language bindings: a raw
//! row-major buffer in, a scan and a clustering out.

use mscope::pipeline::{array_dataset, cluster_run, id_scan, ClusterConfig, IdScanConfig};

fn main() -> mscope::Result<()> {
    // two rings of radius 1 and 4 in the plane
    let n = 2000;
    let mut buf = Vec::with_capacity(2 * n);
    for i in 0..n {
        let t = i as f64 * 2.399_963;
        let r = if i % 2 == 0 { 1.0 } else { 4.0 };
        buf.extend([r * t.cos() + 0.05 * (t * 7.1).sin(), r * t.sin() + 0.05 * (t * 3.3).cos()]);
    }
    let data = array_dataset(n, 2, buf)?;

    let scan = id_scan(&data, &IdScanConfig { k_max: 32, ..Default::default() })?;
    println!("{}", serde_json::to_string(&scan.estimates.iter().map(|e| e.d_hat).collect::<Vec<_>>()).unwrap());

    let run = cluster_run(&data, &ClusterConfig::default())?;
    println!("id used {:.3}, {} clusters", run.id_used, run.clustering.n_peaks());
    println!("{}", serde_json::to_string(&run.clustering.peak_log_rho).unwrap());

    match mscope::pipeline::array_dataset(2, 2, vec![0.0; 4]) {
        Err(e) => println!("rejected: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
