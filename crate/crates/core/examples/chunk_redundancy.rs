//! Redundancy of a matrix made of noisy copies of a few features, and a
//! power-law fit of a decay curve.

use mscope::redundancy::{chunk_scan, clone_matrix, fit_power_law, reconstruct, scan_table};

fn main() -> mscope::Result<()> {
    let full = clone_matrix(5000, 16, 8, 0.01, 1)?;
    let rows = chunk_scan(&full, &[4, 8, 16, 32, 64], 5, 1)?;
    print!("{}", scan_table(&rows).to_csv());

    // two copies of every base feature
    let clone = reconstruct(&full, &(0..32).collect::<Vec<_>>())?;
    println!("clone chunk: R2 = {:.6}, mean |rho| = {:.4}", clone.r2_weighted, clone.mean_abs_offdiag_corr);
    println!("independent-noise level: {:.4}", (2.0 / (std::f64::consts::PI * 5000.0)).sqrt());

    let sizes = [16.0, 32.0, 64.0, 128.0, 256.0];
    let errors: Vec<f64> = sizes.iter().map(|w: &f64| 0.05 + 0.8 / w.sqrt()).collect();
    let fit = fit_power_law(&sizes, &errors, 0.05)?;
    println!("error - 0.05 = {:.3} * w^{:.3}  (fit R2 {:.4})", fit.amplitude, fit.exponent, fit.r2_of_fit);
    Ok(())
}
