//! Marginal and simultaneous confidence sets for the ranks of PISA
//! jurisdictions, the tau-best set, and an SVG chart.
//!
//! ```text
//! cargo run --example rank_confidence_sets -- [chart.svg]
//! ```

use rankinfer::cli::interval_chart;
use rankinfer::rankcs::{cs_ranks, cs_tau_best, cs_tau_worst, BootstrapConfig, CsMode, EstimatesWithCovariance};
use rankinfer::table::TableData;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let pisa = TableData::from_csv_str(include_str!("../tests/fixtures/pisa_head.csv"))?;
    let names = pisa.labels("jurisdiction")?;
    let est = EstimatesWithCovariance::from_standard_errors(pisa.numeric("math_score")?, &pisa.numeric("math_se")?)?;
    let cfg = BootstrapConfig::new(2000, 0.95, 20240611)?;

    let marginal = cs_ranks(&est, &cfg, CsMode::Marginal, None)?;
    let simul = cs_ranks(&est, &cfg, CsMode::Simultaneous, None)?;
    println!(
        "{:<10} {:>9} {:>5} {:>10} {:>14}",
        "", "score", "rank", "marginal", "simultaneous"
    );
    for (m, s) in marginal.intervals.iter().zip(&simul.intervals) {
        let j = m.index;
        println!(
            "{:<10} {:>9.3} {:>5} {:>10} {:>14}",
            names[j],
            est.theta_hat()[j],
            m.rank,
            format!("[{}, {}]", m.lower, m.upper),
            format!("[{}, {}]", s.lower, s.upper)
        );
    }

    let best = cs_tau_best(&est, &cfg, 1)?;
    let worst = cs_tau_worst(&est, &cfg, 2)?;
    let show = |ix: &[usize]| ix.iter().map(|&j| names[j].as_str()).collect::<Vec<_>>().join(", ");
    println!("\nmay be the best:         {}", show(&best.members));
    println!("may be among the worst 2: {}", show(&worst.members));

    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "rank_confidence_sets.svg".into());
    std::fs::write(&path, interval_chart(&simul, &names))?;
    println!("\nchart written to {path}");
    Ok(())
}
