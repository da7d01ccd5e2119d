//! A noisy spiral looks 2-D at the noise scale and 1-D above it. The
//! posterior over integer dimensions and the CDF check show where.

use mscope::dataset::{generate, Family, ManifoldSpec};
use mscope::id::{cdf_diagnostic, gride_fit, mu_ratios, posterior};
use mscope::neighbors::build_knn;

fn main() -> mscope::Result<()> {
    let sigma = 1e-3;
    let data = generate(&ManifoldSpec::new(Family::Spiral1d, 1, 20_000).noise(sigma).seed(1))?;
    let graph = build_knn(&data, 256)?;
    println!("{:>5} {:>10} {:>8} {:>9} {:>9} {:>7}", "k", "r/sigma", "d", "p(1)", "p(2)", "KS");
    let mut k = 1;
    while 2 * k <= 256 {
        let mu = mu_ratios(&graph, k)?;
        let est = gride_fit(&mu)?;
        let p = posterior(&mu, &[1, 2, 3])?;
        let ks = cdf_diagnostic(&mu, est.d_hat)?.ks_distance;
        println!("{k:>5} {:>10.2} {:>8.3} {:>9.3e} {:>9.3e} {ks:>7.4}", mu.scale / sigma, est.d_hat, p[0], p[1]);
        k *= 2;
    }
    Ok(())
}
