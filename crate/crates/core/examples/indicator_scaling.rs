//! Timing of the sort-and-scan indicator product against the double loop.
//!
//! ```text
//! cargo run --release --example indicator_scaling
//! ```

use std::time::Instant;

use rankinfer::numerics::SeededRng;
use rankinfer::rankreg::indicator_matvec;

fn naive(x: &[f64], v: &[f64], omega: f64) -> Vec<f64> {
    x.iter()
        .map(|&xi| {
            x.iter()
                .zip(v)
                .map(|(&xk, &vk)| {
                    (omega * f64::from(u8::from(xi <= xk)) + (1.0 - omega) * f64::from(u8::from(xi < xk))) * vk
                })
                .sum()
        })
        .collect()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = SeededRng::new(1);
    println!("{:>9} {:>12} {:>12}", "n", "sort+scan", "double loop");
    for n in [1_000usize, 10_000, 100_000, 1_000_000] {
        // coarse values so that ties are common
        let x: Vec<f64> = (0..n).map(|_| (rng.next_normal() * 20.0).round()).collect();
        let v: Vec<f64> = (0..n).map(|_| rng.next_normal()).collect();
        let t = Instant::now();
        let fast = indicator_matvec(&x, &v, 0.5)?;
        let fast_time = t.elapsed();
        let slow_time = if n <= 10_000 {
            let t = Instant::now();
            let slow = naive(&x, &v, 0.5);
            let elapsed = t.elapsed();
            let err = fast.iter().zip(&slow).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-8 * n as f64, "mismatch {err}");
            format!("{elapsed:.2?}")
        } else {
            "-".into()
        };
        println!("{n:>9} {:>12} {:>12}", format!("{fast_time:.2?}"), slow_time);
    }
    Ok(())
}
