//! The null of both statistics is a weighted chi-square mixture. Compares
//! its Monte Carlo tail with the two-moment Gamma fit.
//!
//! `cargo run --release --example null_distributions`

use kcit::kernel::{gaussian_centered_kernel, median_width, DEFAULT_MEDIAN_CAP};
use kcit::null::{fit_gamma, null_mean_var, p_value_gamma, p_value_mc, simulate};
use kcit::uitest::{ui_null_spec, ui_statistic};
use kcit::DataMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn main() -> kcit::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cols: Vec<Vec<f64>> = (0..2).map(|_| (0..200).map(|_| StandardNormal.sample(&mut rng)).collect()).collect();
    let data = DataMatrix::from_columns(&cols)?.standardized();
    let kx = gaussian_centered_kernel(&data, &[0], median_width(&data, &[0], DEFAULT_MEDIAN_CAP)?)?;
    let ky = gaussian_centered_kernel(&data, &[1], median_width(&data, &[1], DEFAULT_MEDIAN_CAP)?)?;

    let spec = ui_null_spec(&kx, &ky, 1e-5)?;
    let (mean, var) = null_mean_var(&spec);
    let fit = fit_gamma(&spec);
    println!("{} mixture weights, mean {mean:.4}, variance {var:.3e}", spec.weights.len());
    println!("gamma fit: k = {:.3}, theta = {:.4}", fit.k, fit.theta);
    println!("observed T = {:.4}", ui_statistic(&kx, &ky)?);

    let draws = 100_000;
    let mut sims = simulate(&spec, draws, 1);
    sims.sort_by(f64::total_cmp);
    println!("\nquantile        t    p(gamma)    p(mc)");
    for q in [0.5, 0.9, 0.95, 0.99] {
        let t = sims[(q * draws as f64) as usize];
        println!("{q:>8} {t:>8.4} {:>11.4} {:>8.4}", p_value_gamma(&fit, t), p_value_mc(&spec, t, draws, 2));
    }
    Ok(())
}
