//! Exact neighbor graph, a subset graph and the binary graph format.

use mscope::dataset::{generate, Family, ManifoldSpec};
use mscope::neighbors::{build_knn, subsample_graph};
use mscope::NeighborGraph;

fn main() -> mscope::Result<()> {
    let data = generate(&ManifoldSpec::new(Family::Gaussian, 5, 5000).embed(50).seed(3))?;
    let t = std::time::Instant::now();
    let graph = build_knn(&data, 32)?;
    println!("kNN of {}x{} with k=32 in {:.2?}", data.n(), data.dim(), t.elapsed());
    println!("point 0: neighbors {:?}", &graph.neighbors(0)[..5]);
    println!("         distances {:.4?}", &graph.distances(0)[..5]);

    let subset: Vec<usize> = (0..data.n()).step_by(4).collect();
    let sub = subsample_graph(&data, &subset, 8)?;
    println!("subset graph: {} points, first neighbor of 0 is original point {}", sub.n(), sub.origin().unwrap()[sub.neighbor(0, 1)]);

    let path = std::env::temp_dir().join("graph.msg");
    graph.write_binary(&path)?;
    println!("binary round trip equal: {}", NeighborGraph::read_binary(&path)? == graph);
    Ok(())
}
