//! Overlap, CKA and ARI between representations of the same points.

use mscope::compare::{ari, channel_histograms, cka, discrete_entropy, overlap, overlap_gt, CkaKernel};
use mscope::dataset::{generate, Dataset, Family, ManifoldSpec};
use mscope::neighbors::build_knn;

fn main() -> mscope::Result<()> {
    let a = generate(&ManifoldSpec::new(Family::Gaussian, 4, 1500).embed(16).seed(1))?;
    // a rotated copy plus a noisy copy
    let c = 0.6f64;
    let s = 0.8f64;
    let rotated: Vec<Vec<f64>> = (0..a.n())
        .map(|i| {
            let mut r = a.row(i).to_vec();
            let (x, y) = (r[0], r[1]);
            r[0] = c * x - s * y;
            r[1] = s * x + c * y;
            r
        })
        .collect();
    let rotated = Dataset::from_rows(&rotated)?;
    let noisy = generate(&ManifoldSpec::new(Family::Gaussian, 4, 1500).embed(16).noise(0.5).seed(1))?;

    let ga = build_knn(&a, 30)?;
    for (name, b) in [("rotated", &rotated), ("noisy", &noisy)] {
        let chi = overlap(&ga, &build_knn(b, 30)?, 30)?.chi;
        let lin = cka(&a, b, CkaKernel::Linear)?;
        let gau = cka(&a, b, CkaKernel::gaussian())?;
        println!("{name:<8} overlap {chi:.3}  linear CKA {lin:.4}  gaussian CKA {gau:.4}");
    }

    let labels: Vec<i32> = (0..a.n()).map(|i| i32::from(a.row(i)[0] > 0.0)).collect();
    println!("overlap with a sign label: {:.3}", overlap_gt(&ga, Some(&labels), 30)?.chi);
    let other: Vec<i32> = (0..a.n()).map(|i| i32::from(a.row(i)[1] > 0.0)).collect();
    println!("ARI(sign of x, sign of y) = {:.4}", ari(&labels, &other)?);

    let codes: Vec<i64> = (0..a.n()).flat_map(|i| a.row(i)[..2].iter().map(|v| (v * 2.0).round() as i64).collect::<Vec<_>>()).collect();
    println!("entropy of quantized x,y: {:.3} bits", discrete_entropy(&channel_histograms(&codes, 2)?)?);
    Ok(())
}
