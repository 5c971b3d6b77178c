//! Formula parsing and the errors reported for malformed input.
//!
//! ```text
//! cargo run --example formula_errors
//! ```

use rankinfer::rankreg::{parse_formula, RankRegressionModel};

fn main() {
    for src in [
        "r(child) ~ r(parent) + gender",
        "r(y) ~ (r(x) + w):g",
        "y ~ r(x) - 1",
        "r(Y ~ X",
        "y ~ r(a) + r(b)",
        "y ~ x +",
    ] {
        match RankRegressionModel::parse(src) {
            Ok(m) => println!("ok      {src:<30} -> {}", m.formula()),
            Err(e) => println!("error   {src:<30}\n{e}\n"),
        }
    }
    if let Ok(parsed) = parse_formula("r(y) ~ (r(x) + w):g") {
        println!("{parsed:#?}");
    }
}
