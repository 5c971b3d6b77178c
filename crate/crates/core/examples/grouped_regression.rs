//! Group-specific rank regressions with ranks taken in the pooled sample.
//!
//! ```text
//! cargo run --example grouped_regression
//! ```

use rankinfer::rankreg::{confint, fit, predict, summarize, RankRegressionModel};
use rankinfer::table::{Column, TableData};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = TableData::from_csv_str(include_str!("../tests/fixtures/regression.csv"))?;
    let model = RankRegressionModel::parse("r(y) ~ (r(x) + w):g")?;
    let fitted = fit(&model, &data)?;
    println!("{}", summarize(&fitted)?);
    for w in fitted.warnings() {
        println!("warning: {w}");
    }

    let east = fitted.coefficient("r(x):geast").unwrap_or(f64::NAN);
    let west = fitted.coefficient("r(x):gwest").unwrap_or(f64::NAN);
    println!("rank persistence: east {east:.3}, west {west:.3}");
    for ci in confint(&fitted, 0.9)?.iter().filter(|c| c.name.starts_with("r(x)")) {
        println!("90% interval for {}: [{:.3}, {:.3}]", ci.name, ci.lower, ci.upper);
    }

    let new = TableData::new(vec![
        ("x", Column::from(vec![-1.0, 0.0, 1.0])),
        ("w", Column::from(vec![0.0, 0.0, 0.0])),
        ("g", Column::from(vec!["east", "east", "west"])),
    ])?;
    println!("predicted ranks: {:?}", predict(&fitted, &new)?);
    Ok(())
}
