//! Intrinsic dimension across scales: Gride on one graph against TwoNN and
//! MLE on random subsets.

use mscope::dataset::{generate, Family, ManifoldSpec};
use mscope::id::{decimation_scan, gride_scan, halving_fractions, DecimationEstimator};
use mscope::neighbors::build_knn;

fn main() -> mscope::Result<()> {
    let data = generate(&ManifoldSpec::new(Family::Hypercube, 5, 8000).embed(20).seed(1))?;

    let gride = gride_scan(&build_knn(&data, 128)?, 128)?;
    let twonn = decimation_scan(&data, &halving_fractions(7), None, DecimationEstimator::TwoNn, 1)?;
    let mle = decimation_scan(&data, &halving_fractions(5), Some(4), DecimationEstimator::Mle { k: 10 }, 1)?;

    for (name, scan) in [("gride", &gride), ("twonn", &twonn), ("mle", &mle)] {
        println!("{name}");
        for e in scan.estimates() {
            println!("  N/k = {:8.1}  d = {:6.3}  [{:.3}, {:.3}]", e.scale_param, e.d_hat, e.ci_low, e.ci_high);
        }
    }
    print!("\n{}", gride.table().to_csv());
    Ok(())
}
