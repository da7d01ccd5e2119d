//! Fixed-k against point-adaptive density on a uniform square, where the
//! true density is 1 everywhere.

use mscope::dataset::{generate, Family, ManifoldSpec};
use mscope::density::{knn_density, pak_density};
use mscope::neighbors::build_knn;

fn main() -> mscope::Result<()> {
    let data = generate(&ManifoldSpec::new(Family::Hypercube, 2, 10_000).seed(2))?;
    let graph = build_knn(&data, 100)?;
    let mean_rho = |log_rho: &[f64]| log_rho.iter().map(|l| l.exp()).sum::<f64>() / log_rho.len() as f64;

    let knn = knn_density(&graph, 30, 2.0)?;
    println!("knn k=30: mean density {:.4}, err {:.4}", mean_rho(&knn.log_rho), knn.err[0]);

    let pak = pak_density(&graph, 2.0)?;
    let mean_k = pak.k_used.iter().sum::<usize>() as f64 / pak.len() as f64;
    println!("pak:      mean density {:.4}, mean k* {mean_k:.1}", mean_rho(&pak.log_rho));
    Ok(())
}
