//! Rank-rank regression of child on parent income with standard errors that
//! account for estimated ranks, next to the textbook OLS ones.
//!
//! ```text
//! cargo run --release --example rank_rank_regression -- [n] [rho]
//! ```

use rankinfer::numerics::{inverse_from_qr, SeededRng};
use rankinfer::rankreg::{confint, fit, summarize, RankRegressionModel};
use rankinfer::table::{Column, TableData};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(3894);
    let rho: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0.4);

    // log-normal incomes with correlated logs
    let mut rng = SeededRng::new(7);
    let (mut parent, mut child) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for _ in 0..n {
        let a = rng.next_normal();
        let b = rho * a + (1.0 - rho * rho).sqrt() * rng.next_normal();
        parent.push((10.5 + 0.8 * a).exp());
        child.push((10.7 + 0.9 * b).exp());
    }
    let data = TableData::new(vec![("child", Column::from(child)), ("parent", Column::from(parent))])?;

    let model = RankRegressionModel::parse("r(child) ~ r(parent)")?;
    let fitted = fit(&model, &data)?;
    let table = summarize(&fitted)?;
    println!("{table}");

    let resid = fitted.residuals();
    let k = fitted.coefficients().len();
    let s2 = resid.iter().map(|e| e * e).sum::<f64>() / (n - k) as f64;
    let naive = inverse_from_qr(fitted.qr())? * s2;
    println!("{:<14} {:>12} {:>12}", "", "corrected", "naive OLS");
    for (j, row) in table.rows.iter().enumerate() {
        println!(
            "{:<14} {:>12.6} {:>12.6}",
            row.name,
            row.std_error,
            naive[(j, j)].sqrt()
        );
    }
    for ci in confint(&fitted, 0.95)? {
        println!("95% interval for {}: [{:.4}, {:.4}]", ci.name, ci.lower, ci.upper);
    }
    Ok(())
}
