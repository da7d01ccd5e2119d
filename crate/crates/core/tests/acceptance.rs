//! Acceptance suite. Every check prints one `ACCEPT PASS|FAIL` line with the
//! measured value and the tolerance, then the test asserts it.
//!
//! Tests take a shared lock so the timing check never overlaps other work.

use std::sync::{Mutex, MutexGuard};
use std::time::Instant;

use mscope::compare::{ari, cka, overlap, CkaKernel};
use mscope::dataset::{generate, Dataset, Family, ManifoldSpec};
use mscope::density::{density_error, knn_density, pak_density_with, PakOptions};
use mscope::id::{
    decimation_scan, gride_cdf, gride_fit, gride_loglik, gride_scan, halving_fractions, mle_fit, mu_ratios,
    posterior, sample_mu, twonn_fit, DecimationEstimator,
};
use mscope::neighbors::build_knn;
use mscope::peaks::cluster;
use mscope::pipeline::{cluster_run, ClusterConfig};
use mscope::redundancy::{clone_matrix, fit_power_law, reconstruct};
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, StandardNormal};
use rand_pcg::Pcg64;

static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

/// Prints the verdict line and returns it, so a test can check several
/// sub-criteria before failing.
fn report(criterion: &str, ok: bool, detail: String) -> bool {
    println!("ACCEPT {} {criterion}: {detail}", if ok { "PASS" } else { "FAIL" });
    ok
}

fn hypercube(n: usize, d: usize, seed: u64) -> Dataset {
    generate(&ManifoldSpec::new(Family::Hypercube, d, n).seed(seed)).unwrap()
}

#[test]
fn uniform_hypercubes() {
    let _g = serial();
    let t0 = Instant::now();
    let k_max = 256;

    let d2 = hypercube(32_000, 2, 1);
    let scan = gride_scan(&build_knn(&d2, k_max).unwrap(), k_max).unwrap();
    let low: Vec<_> = scan.estimates().iter().filter(|e| (e.k1 + e.k2) as f64 / 2.0 <= 192.0).collect();
    let vals: Vec<f64> = low.iter().map(|e| e.d_hat).collect();
    let ok2 = !vals.is_empty() && vals.iter().all(|v| (1.90..=2.05).contains(v));
    let ok2 = report("hypercube d=2 entries with k <= 192 in [1.90, 2.05]", ok2, format!("{vals:.4?}"));

    let d50 = hypercube(32_000, 50, 2);
    let scan = gride_scan(&build_knn(&d50, k_max).unwrap(), k_max).unwrap();
    let vals: Vec<f64> = scan.estimates().iter().map(|e| e.d_hat).collect();
    let first = report("hypercube d=50 at (1,2) in [30, 38]", (30.0..=38.0).contains(&vals[0]), format!("{:.3}", vals[0]));
    let mono = vals.windows(2).all(|w| w[1] <= w[0]);
    let mono = report("hypercube d=50 non-increasing across scales", mono, format!("{vals:.3?}"));

    let secs = t0.elapsed().as_secs_f64();
    let threads = rayon::current_num_threads();
    let fast = report("hypercube runtime < 180 s", secs < 180.0, format!("{secs:.1} s on {threads} threads"));
    assert!(ok2 && first && mono && fast);
}

fn spiral() -> Dataset {
    generate(&ManifoldSpec::new(Family::Spiral1d, 1, 20_000).noise(1e-3).seed(1)).unwrap()
}

#[test]
fn spiral_posterior_prefers_one_at_three_sigma() {
    let _g = serial();
    let sigma = 1e-3;
    let graph = build_knn(&spiral(), 128).unwrap();
    // integer k whose mean neighbor distance is closest to 3σ
    let (k, mu) = (1..=64)
        .map(|k| (k, mu_ratios(&graph, k).unwrap()))
        .min_by(|a, b| (a.1.scale - 3.0 * sigma).abs().total_cmp(&(b.1.scale - 3.0 * sigma).abs()))
        .unwrap();
    let p = posterior(&mu, &[1, 2, 3]).unwrap();
    let ok = report(
        "spiral p(1|mu) > p(2|mu) at mean distance ~ 3 sigma",
        p[0] > p[1],
        format!("k={k}, r/sigma={:.2}, p1={:.3e}, p2={:.3e}", mu.scale / sigma, p[0], p[1]),
    );
    assert!(ok);
}

/// Expected to fail on this generator: the plateau is only reached at
/// `N/k ≈ 200`, where the estimate settles near 1.1 (see README).
#[test]
fn spiral_plateau_at_n_over_k_500() {
    let _g = serial();
    let data = spiral();
    let graph = build_knn(&data, 64).unwrap();
    // k̄ = 3k/2 for the pair (k, 2k)
    let k = ((data.n() as f64 / 500.0) / 1.5).round() as usize;
    let est = gride_fit(&mu_ratios(&graph, k).unwrap()).unwrap();
    let ok = report(
        "spiral gride plateau at N/k ~ 500 in [0.95, 1.10]",
        (0.95..=1.10).contains(&est.d_hat),
        format!("k={k}, N/k={:.0}, d={:.4}", est.scale_param, est.d_hat),
    );
    assert!(ok);
}

#[test]
fn estimator_identities() {
    let _g = serial();
    let mut rng = Pcg64::seed_from_u64(7);

    let mut worst = 0.0f64;
    for s in 0..100 {
        let d = rng.random_range(1..=12);
        let n = rng.random_range(200..2000);
        let g = build_knn(&hypercube(n, d, 1000 + s), 2).unwrap();
        let mu = mu_ratios(&g, 1).unwrap();
        let closed = mu.values.len() as f64 / mu.values.iter().map(|m| m.ln()).sum::<f64>();
        worst = worst.max((gride_fit(&mu).unwrap().d_hat - closed).abs());
    }
    let a = report("gride k=1 equals N / sum log mu within 1e-8 (100 datasets)", worst < 1e-8, format!("max |diff| = {worst:.2e}"));

    let mut violations = 0;
    for t in 0..1000 {
        let k = 1 << rng.random_range(0..8);
        let mu = sample_mu(rng.random_range(0.5..40.0), k, 50, 5000 + t).unwrap();
        let (d1, d2): (f64, f64) = (rng.random_range(0.05..60.0), rng.random_range(0.05..60.0));
        let lam: f64 = rng.random();
        let mid = gride_loglik(&mu, lam * d1 + (1.0 - lam) * d2);
        let chord = lam * gride_loglik(&mu, d1) + (1.0 - lam) * gride_loglik(&mu, d2);
        if mid < chord - 1e-9 * chord.abs().max(1.0) {
            violations += 1;
        }
    }
    let b = report("log-likelihood chord inequality on 1000 triples", violations == 0, format!("{violations} violations"));

    let data = generate(&ManifoldSpec::new(Family::Swissroll, 2, 3000).noise(0.01).seed(3)).unwrap();
    let (mut rel, mut bitwise) = (0.0f64, true);
    for (c, exact) in [(1e3, false), (1024.0, true)] {
        let scaled = data.scaled(c).unwrap();
        let (g, h) = (build_knn(&data, 64).unwrap(), build_knn(&scaled, 64).unwrap());
        let mut pairs: Vec<(f64, f64)> = gride_scan(&g, 64)
            .unwrap()
            .estimates()
            .iter()
            .zip(gride_scan(&h, 64).unwrap().estimates())
            .map(|(x, y)| (x.d_hat, y.d_hat))
            .collect();
        pairs.push((twonn_fit(&g).unwrap().d_hat, twonn_fit(&h).unwrap().d_hat));
        pairs.push((mle_fit(&g, 10).unwrap().d_hat, mle_fit(&h, 10).unwrap().d_hat));
        let fr = halving_fractions(4);
        let da = decimation_scan(&data, &fr, None, DecimationEstimator::TwoNn, 5).unwrap();
        let db = decimation_scan(&scaled, &fr, None, DecimationEstimator::TwoNn, 5).unwrap();
        pairs.extend(da.estimates().iter().zip(db.estimates()).map(|(x, y)| (x.d_hat, y.d_hat)));
        for (x, y) in pairs {
            rel = rel.max(((x - y) / x).abs());
            if exact {
                bitwise &= x == y;
            }
        }
    }
    let c = report(
        "ID estimates invariant under x1e3 rescaling",
        rel < 1e-12 && bitwise,
        format!("max relative diff {rel:.1e}; bitwise at x1024: {bitwise}"),
    );
    assert!(a && b && c);
}

#[test]
fn ratio_distribution_and_recovery() {
    let _g = serial();
    let n = 100_000;
    let band = 1.358 / (n as f64).sqrt();
    let mut all = true;
    for (i, d) in [1.0, 2.0, 5.0, 10.0].into_iter().enumerate() {
        for (j, k) in [1usize, 16, 256].into_iter().enumerate() {
            let mut v = sample_mu(d, k, n, (10 * i + j) as u64).unwrap().values;
            v.sort_by(f64::total_cmp);
            let m = v.len() as f64;
            let ks = v
                .iter()
                .enumerate()
                .map(|(r, &x)| {
                    let f = gride_cdf(x, d, k);
                    (f - r as f64 / m).abs().max(((r + 1) as f64 / m - f).abs())
                })
                .fold(0.0, f64::max);
            all &= report(&format!("KS d={d} k={k}"), ks < band, format!("D = {ks:.5}, band {band:.5}"));
        }
    }

    // calibration of the band itself: at the nominal level about 5% of
    // exact samples fall outside it, so one miss among twelve is expected
    // about half the time
    let seeds = 200;
    let outside = (0..seeds)
        .filter(|&s| {
            let mut v = sample_mu(5.0, 16, n, 50_000 + s).unwrap().values;
            v.sort_by(f64::total_cmp);
            let m = v.len() as f64;
            v.iter()
                .enumerate()
                .map(|(r, &x)| {
                    let f = gride_cdf(x, 5.0, 16);
                    (f - r as f64 / m).abs().max(((r + 1) as f64 / m - f).abs())
                })
                .fold(0.0, f64::max)
                > band
        })
        .count();
    report(
        "KS band false-rejection rate over 200 seeds (d=5, k=16), informational",
        outside <= 18,
        format!("{outside}/{seeds} outside; binomial 99% upper bound for 5% is 18"),
    );

    let trials = 200;
    let mut hits = 0;
    for t in 0..trials {
        let d = [1.0, 2.0, 5.0, 10.0][t % 4];
        let k = [1, 16, 256][t % 3];
        let e = gride_fit(&sample_mu(d, k, 10_000, 900 + t as u64).unwrap()).unwrap();
        if (e.d_hat - d).abs() <= 5.0 * e.half_width() {
            hits += 1;
        }
    }
    let rate = hits as f64 / trials as f64;
    let rec = report("gride recovers d within 5 CI half-widths in >= 99% of 200 trials", rate >= 0.99, format!("{hits}/{trials}"));
    assert!(all && rec);
}

#[test]
fn gride_scan_is_cheaper_than_decimation() {
    let _g = serial();
    let (n, dim) = (8000, 20_000);
    let latent = 16;
    let mut rng = Pcg64::seed_from_u64(11);
    let map: Vec<f64> = (0..latent * dim).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mut buf = vec![0.0; n * dim];
    for row in buf.chunks_mut(dim) {
        let z: Vec<f64> = (0..latent).map(|_| rng.random::<f64>()).collect();
        for (l, zl) in z.iter().enumerate() {
            for (x, a) in row.iter_mut().zip(&map[l * dim..(l + 1) * dim]) {
                *x += zl * a;
            }
        }
    }
    let data = Dataset::from_row_major(n, dim, buf).unwrap();
    drop(map);

    let t0 = Instant::now();
    let g = gride_scan(&build_knn(&data, 128).unwrap(), 128).unwrap();
    let tg = t0.elapsed().as_secs_f64();
    let t0 = Instant::now();
    let dec = decimation_scan(&data, &halving_fractions(8), None, DecimationEstimator::TwoNn, 3).unwrap();
    let td = t0.elapsed().as_secs_f64();
    let ok = report(
        "gride_scan(kmax=128) <= 0.75 x decimation twonn to 1/256",
        tg <= 0.75 * td,
        format!(
            "{tg:.1} s vs {td:.1} s (ratio {:.2}); d(1,2) {:.2} vs {:.2}",
            tg / td,
            g.estimates()[0].d_hat,
            dec.estimates()[0].d_hat
        ),
    );
    assert!(ok);
}

#[test]
fn density_estimators() {
    let _g = serial();
    let exact = density_error(30) == (122.0f64 / 870.0).sqrt();
    let a = report("knn error at k=30 equals sqrt(122/870)", exact, format!("{:.17}", density_error(30)));

    let data = hypercube(10_000, 2, 4);
    let graph = build_knn(&data, 30).unwrap();
    let f = knn_density(&graph, 30, 2.0).unwrap();
    let mean = f.log_rho.iter().map(|l| l.exp()).sum::<f64>() / f.len() as f64;
    let b = report("uniform square mean density within 10% of 1", (mean - 1.0).abs() < 0.1, format!("{mean:.4}"));

    let mut c = true;
    for k in [5, 16, 30] {
        let opts = PakOptions { correction: false, fixed_k: Some(k), ..Default::default() };
        let pak = pak_density_with(&graph, 2.0, &opts).unwrap();
        c &= pak == knn_density(&graph, k, 2.0).unwrap();
    }
    let c = report("PAk without adaptation equals fixed-k estimator", c, "k in {5, 16, 30}".into());
    assert!(a && b && c);
}

fn two_gaussians(n: usize, seed: u64) -> (Dataset, Vec<usize>) {
    let mut rng = Pcg64::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let c = i % 2;
        let x: f64 = StandardNormal.sample(&mut rng);
        let y: f64 = StandardNormal.sample(&mut rng);
        rows.push(vec![x + 10.0 * c as f64, y]);
        labels.push(c);
    }
    (Dataset::from_rows(&rows).unwrap(), labels)
}

#[test]
fn peak_clustering() {
    let _g = serial();
    let (data, truth) = two_gaussians(4000, 21);
    let run = cluster_run(&data, &ClusterConfig::default()).unwrap();
    let score = ari(&run.clustering.labels, &truth).unwrap();
    let a = report(
        "two Gaussians at 10 sigma, Z=1.6: 2 peaks and ARI > 0.9",
        run.clustering.n_peaks() == 2 && score > 0.9,
        format!("{} peaks, ARI {score:.4}", run.clustering.n_peaks()),
    );

    let huge = cluster_run(&data, &ClusterConfig { z: 1e9, ..Default::default() }).unwrap();
    let b = report("Z = 1e9 leaves one peak", huge.clustering.n_peaks() == 1, format!("{} peaks", huge.clustering.n_peaks()));

    let mut perm: Vec<usize> = (0..data.n()).collect();
    perm.shuffle(&mut Pcg64::seed_from_u64(5));
    let shuffled = cluster_run(&data.select(&perm).unwrap(), &ClusterConfig::default()).unwrap();
    let back: Vec<usize> = {
        let mut v = vec![0; data.n()];
        for (pos, &i) in perm.iter().enumerate() {
            v[i] = shuffled.clustering.labels[pos];
        }
        v
    };
    // the auto ID sums over points in a different order, so densities agree
    // to rounding; the partition must agree exactly
    let drift = perm
        .iter()
        .enumerate()
        .map(|(pos, &i)| (shuffled.density.log_rho[pos] - run.density.log_rho[i]).abs())
        .fold(0.0, f64::max);
    let same_partition = shuffled.clustering.n_peaks() == run.clustering.n_peaks()
        && ari(&back, &run.clustering.labels).unwrap() == 1.0;
    let c = report(
        "permuting points changes nothing up to renaming",
        same_partition && drift < 1e-9,
        format!("{} vs {} peaks, max |d log rho| {drift:.1e}", shuffled.clustering.n_peaks(), run.clustering.n_peaks()),
    );

    // same checks on the raw graph path
    let graph = build_knn(&data, 30).unwrap();
    let f = knn_density(&graph, 20, 2.0).unwrap();
    let d = cluster(&graph, &f, 30, 1.6).unwrap();
    let d = report("knn density path also finds 2 peaks", d.n_peaks() == 2, format!("{} peaks", d.n_peaks()));
    assert!(a && b && c && d);
}

fn random_orthogonal(dim: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = Pcg64::seed_from_u64(seed);
    let m = DMatrix::from_fn(dim, dim, |_, _| StandardNormal.sample(&mut rng));
    m.qr().q()
}

#[test]
fn comparison_metrics() {
    let _g = serial();
    let data = generate(&ManifoldSpec::new(Family::Gaussian, 6, 2000).embed(10).seed(8)).unwrap();
    let g = build_knn(&data, 30).unwrap();
    let chi = overlap(&g, &g, 30).unwrap().chi;
    let a = report("overlap of a representation with itself is 1", chi == 1.0, format!("{chi}"));

    let (_, labels) = two_gaussians(4000, 1);
    let mixed: Vec<usize> = (0..4000).map(|i| (i * 7919) % 5).collect();
    let same = ari(&mixed, &mixed).unwrap();
    let b = report("ARI of identical partitions is 1", same == 1.0 && ari(&labels, &labels).unwrap() == 1.0, format!("{same}"));

    let mut worst = 0.0f64;
    for s in 0..50 {
        let mut sh = mixed.clone();
        sh.shuffle(&mut Pcg64::seed_from_u64(s));
        worst = worst.max(ari(&mixed, &sh).unwrap().abs());
    }
    let c = report("shuffled |ARI| < 0.05 over 50 seeds", worst < 0.05, format!("max {worst:.4}"));

    let x = DMatrix::from_row_slice(data.n(), data.dim(), data.points());
    let q = random_orthogonal(data.dim(), 3);
    let y = &x * &q;
    let rotated = Dataset::from_row_major(data.n(), data.dim(), y.transpose().as_slice().to_vec()).unwrap();
    let other = generate(&ManifoldSpec::new(Family::Sphere, 3, 2000).embed(7).noise(0.1).seed(9)).unwrap();
    let diff = (cka(&data, &other, CkaKernel::Linear).unwrap() - cka(&rotated, &other, CkaKernel::Linear).unwrap()).abs();
    let self_sim = cka(&data, &rotated, CkaKernel::Linear).unwrap();
    let d = report(
        "linear CKA invariant under orthogonal maps within 1e-10",
        diff < 1e-10 && (self_sim - 1.0).abs() < 1e-10,
        format!("|diff| {diff:.1e}, CKA(X, XQ) = {self_sim:.15}"),
    );
    assert!(a && b && c && d);
}

#[test]
fn redundancy_constructions() {
    let _g = serial();
    let n = 5000;
    let full = clone_matrix(n, 16, 8, 0.01, 1).unwrap();
    let baseline = 2.0 * (2.0 / (std::f64::consts::PI * n as f64)).sqrt();
    // columns 0..32 hold two copies of every base feature
    let wide = reconstruct(&full, &(0..32).collect::<Vec<_>>()).unwrap();
    let a = report(
        "clone matrix w_c=32: R2 > 0.999 and residual correlation near baseline",
        wide.r2_weighted > 0.999 && wide.mean_abs_offdiag_corr < baseline,
        format!("R2 {:.5}, |rho| {:.4} (baseline {baseline:.4})", wide.r2_weighted, wide.mean_abs_offdiag_corr),
    );
    let narrow = reconstruct(&full, &(0..8).collect::<Vec<_>>()).unwrap();
    let b = report(
        "clone matrix w_c=8: R2 < 0.9 and elevated correlation",
        narrow.r2_weighted < 0.9 && narrow.mean_abs_offdiag_corr > wide.mean_abs_offdiag_corr && narrow.mean_abs_offdiag_corr > baseline,
        format!("R2 {:.4}, |rho| {:.4}", narrow.r2_weighted, narrow.mean_abs_offdiag_corr),
    );

    let sizes: Vec<f64> = (2..=9).map(|i| 2f64.powi(i)).collect();
    let exact: Vec<f64> = sizes.iter().map(|w| 0.02 + 0.7 * w.powf(-0.5)).collect();
    let fit = fit_power_law(&sizes, &exact, 0.02).unwrap();
    let c = report("power law exponent -0.5 within 1e-8 on exact data", (fit.exponent + 0.5).abs() < 1e-8, format!("{:.12}", fit.exponent));

    let mut rng = Pcg64::seed_from_u64(2);
    let noisy: Vec<f64> = sizes
        .iter()
        .map(|w| 0.02 + 0.7 * w.powf(-0.5) * (1.0 + 0.05 * Distribution::<f64>::sample(&StandardNormal, &mut rng)))
        .collect();
    let fit = fit_power_law(&sizes, &noisy, 0.02).unwrap();
    let d = report("power law exponent within 0.05 under 5% noise", (fit.exponent + 0.5).abs() < 0.05, format!("{:.4}", fit.exponent));
    assert!(a && b && c && d);
}
