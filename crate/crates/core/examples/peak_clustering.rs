//! Density peaks of a three-blob mixture: merging, saddles, hierarchy and
//! the 2-D peak map.

use mscope::compare::ari;
use mscope::dataset::Dataset;
use mscope::density::pak_density;
use mscope::neighbors::build_knn;
use mscope::peaks::{cluster, embed_peaks_2d, peak_similarity, wpgma};
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

fn main() -> mscope::Result<()> {
    let centers = [(0.0, 0.0), (6.0, 0.0), (3.0, 9.0)];
    let mut rng = rand_pcg::Pcg64::seed_from_u64(5);
    let mut rows = Vec::new();
    let mut truth = Vec::new();
    for (c, &(x, y)) in centers.iter().enumerate() {
        for _ in 0..1000 {
            let dx: f64 = StandardNormal.sample(&mut rng);
            let dy: f64 = StandardNormal.sample(&mut rng);
            rows.push(vec![x + dx, y + dy]);
            truth.push(c);
        }
    }
    let data = Dataset::from_rows(&rows)?;
    let graph = build_knn(&data, 30)?;
    let density = pak_density(&graph, 2.0)?;

    for z in [0.5, 1.6, 1e9] {
        let c = cluster(&graph, &density, 30, z)?;
        println!("z = {z:<6} peaks = {}  ARI = {:.3}", c.n_peaks(), ari(&c.labels, &truth)?);
    }

    let c = cluster(&graph, &density, 30, 1.6)?;
    println!("\npeak log densities {:.3?}", c.peak_log_rho);
    print!("saddles\n{}", c.saddle_table().to_csv());
    print!("dendrogram\n{}", wpgma(&c)?.table().to_csv());
    let map = embed_peaks_2d(&peak_similarity(&c)?)?;
    for (p, xy) in map.coords.iter().enumerate() {
        println!("peak {p}: ({:+.3}, {:+.3})", xy[0], xy[1]);
    }
    Ok(())
}
