mod common;

use common::*;
use nalgebra::DMatrix;
use std::time::Instant;

use rankinfer::numerics::SeededRng;
use rankinfer::ranking::{frank, TieRule};
use rankinfer::rankreg::{
    corrected_vcov, fit, gammas, h_terms, indicator_matvec, predict, projection_coefficients, RankRegressionModel,
};
use rankinfer::table::{Column, TableData};

fn fit_problem(p: &RankProblem) -> rankinfer::rankreg::RankRegressionFit {
    let (data, formula) = p.to_table();
    let model = RankRegressionModel::parse(&formula)
        .unwrap()
        .with_omega(p.omega)
        .unwrap();
    fit(&model, &data).unwrap()
}

#[test]
fn vcov_matches_double_loop_oracle() {
    let mut rng = SeededRng::new(11);
    for (covariates, ties, omega) in [(0, false, 1.0), (2, true, 0.5), (1, true, 1.0), (0, true, 0.0)] {
        let p = RankProblem::random(&mut rng, 150, covariates, ties, omega);
        let f = fit_problem(&p);
        let o = p.oracle();
        let v = corrected_vcov(&f).unwrap().vcov;
        assert!(
            max_rel_diff(&v, &o.vcov) < 1e-10,
            "cov={covariates} ties={ties} omega={omega}"
        );
        for j in 0..v.nrows() {
            assert!(((v[(j, j)] - o.vcov[(j, j)]) / o.vcov[(j, j)]).abs() < 1e-10);
        }
    }
}

#[test]
fn grouped_vcov_matches_oracle_and_per_group_ols() {
    let mut rng = SeededRng::new(12);
    let mut p = RankProblem::random(&mut rng, 120, 1, true, 1.0);
    let g: Vec<usize> = (0..120).map(|_| rng.next_below(3) as usize).collect();
    p.groups = Some((3, g.clone()));
    let f = fit_problem(&p);
    let o = p.oracle();
    assert!(max_rel_diff(&corrected_vcov(&f).unwrap().vcov, &o.vcov) < 1e-10);

    // per-group OLS on the pooled ranks
    let rx = o.rx.clone().unwrap();
    for lvl in 0..3 {
        let rows: Vec<usize> = (0..120).filter(|&i| g[i] == lvl).collect();
        let z = DMatrix::from_fn(rows.len(), 3, |r, c| match c {
            0 => 1.0,
            1 => rx[rows[r]],
            _ => p.w[0][rows[r]],
        });
        let y: Vec<f64> = rows.iter().map(|&i| o.ry[i]).collect();
        let b = ols(&z, &y);
        assert!((f.coefficient(&format!("g{lvl}")).unwrap() - b[0]).abs() < 1e-10);
        assert!((f.coefficient(&format!("r(x):g{lvl}")).unwrap() - b[1]).abs() < 1e-10);
        assert!((f.coefficient(&format!("w1:g{lvl}")).unwrap() - b[2]).abs() < 1e-10);
    }
}

#[test]
fn unranked_response_matches_oracle() {
    let mut rng = SeededRng::new(13);
    let mut p = RankProblem::random(&mut rng, 100, 1, false, 1.0);
    p.y_ranked = false;
    let f = fit_problem(&p);
    assert!(max_rel_diff(&corrected_vcov(&f).unwrap().vcov, &p.oracle().vcov) < 1e-10);
}

#[test]
fn plain_ols_reduces_to_hc0() {
    let mut rng = SeededRng::new(14);
    let n = 200;
    let w1 = normals(&mut rng, n);
    let w2 = normals(&mut rng, n);
    let y: Vec<f64> = (0..n)
        .map(|i| 1.0 + w1[i] - 0.5 * w2[i] + (1.0 + w1[i].abs()) * rng.next_normal())
        .collect();
    let data = TableData::new(vec![
        ("y", Column::from(y.clone())),
        ("w1", Column::from(w1.clone())),
        ("w2", Column::from(w2.clone())),
    ])
    .unwrap();
    let f = fit(&RankRegressionModel::parse("y ~ w1 + w2").unwrap(), &data).unwrap();
    let z = DMatrix::from_fn(n, 3, |i, c| [1.0, w1[i], w2[i]][c]);
    let resid: Vec<f64> = f.residuals().to_vec();
    let robust = hc0(&z, &resid);
    assert!(max_rel_diff(&corrected_vcov(&f).unwrap().vcov, &robust) < 1e-8);
}

#[test]
fn projection_coefficients_match_per_column_ols() {
    let mut rng = SeededRng::new(15);
    for _ in 0..50 {
        let n = 40 + rng.next_below(60) as usize;
        let k = 2 + rng.next_below(11) as usize;
        let mut p = RankProblem::random(&mut rng, n, k - 2, false, 1.0);
        p.w.iter_mut()
            .for_each(|w| w.iter_mut().for_each(|v| *v += 0.2 * rng.next_normal()));
        let f = fit_problem(&p);
        let proj = projection_coefficients(&f).unwrap();
        for j in 0..proj.ncols() {
            let want = per_column_gamma(f.design().z(), j);
            for (a, b) in gammas(&proj, j).iter().zip(&want) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn h_terms_match_oracle_sums_and_vanish_on_perfect_fit() {
    let mut rng = SeededRng::new(16);
    let x = normals(&mut rng, 50);
    let data = TableData::new(vec![
        ("y", Column::from(x.iter().map(|v| v.exp()).collect::<Vec<_>>())),
        ("x", Column::from(x)),
    ])
    .unwrap();
    let f = fit(&RankRegressionModel::parse("r(y) ~ r(x)").unwrap(), &data).unwrap();
    let proj = projection_coefficients(&f).unwrap();
    for j in 0..2 {
        let h = h_terms(&f, &proj, j).unwrap();
        assert!(h.h1.iter().all(|v| v.abs() < 1e-12));
        assert!(h.h3.iter().all(|v| v.abs() < 1e-12));
    }
}

#[test]
fn monotone_transform_leaves_everything_unchanged() {
    let mut rng = SeededRng::new(17);
    let p = RankProblem::random(&mut rng, 200, 1, true, 1.0);
    let mut q = p.clone();
    q.y.iter_mut().for_each(|v| *v = v.exp());
    let (a, b) = (fit_problem(&p), fit_problem(&q));
    assert_eq!(a.coefficients(), b.coefficients());
    assert_eq!(corrected_vcov(&a).unwrap(), corrected_vcov(&b).unwrap());
}

#[test]
fn indicator_product_matches_naive_with_heavy_ties() {
    let mut rng = SeededRng::new(18);
    for case in 0..300 {
        let n = 1 + rng.next_below(300) as usize;
        let levels = 1 + rng.next_below((n / 2) as u64 + 1);
        let x = tied_values(&mut rng, n, levels);
        let v = normals(&mut rng, n);
        let omega = [0.0, 0.3, 0.5, 1.0][case % 4];
        let fast = indicator_matvec(&x, &v, omega).unwrap();
        for (a, b) in fast.iter().zip(naive_matvec(&x, &v, omega)) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }
}

#[test]
fn spearman_equivalence() {
    let mut rng = SeededRng::new(19);
    let (x, y) = gaussian_pairs(&mut rng, 500, 0.6);
    let data = TableData::new(vec![("x", Column::from(x.clone())), ("y", Column::from(y.clone()))]).unwrap();
    let f = fit(&RankRegressionModel::parse("r(y) ~ r(x)").unwrap(), &data).unwrap();
    assert!((f.coefficient("r(x)").unwrap() - spearman(&x, &y)).abs() < 1e-12);
}

#[test]
fn independent_permutation_has_slope_near_zero() {
    let mut rng = SeededRng::new(20);
    let n = 10_000;
    let x: Vec<f64> = (0..n).map(|i| i as f64).collect();
    let mut y = x.clone();
    for i in (1..n).rev() {
        y.swap(i, rng.next_below(i as u64 + 1) as usize);
    }
    let data = TableData::new(vec![("x", Column::from(x)), ("y", Column::from(y))]).unwrap();
    let f = fit(&RankRegressionModel::parse("r(y) ~ r(x)").unwrap(), &data).unwrap();
    assert!(f.coefficient("r(x)").unwrap().abs() < 0.05);
}

#[test]
fn predict_ranks_new_rows_against_training_sample() {
    let x = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
    let y = vec![2.0, 1.0, 4.0, 3.0, 6.0, 5.0];
    let data = TableData::new(vec![("x", Column::from(x.clone())), ("y", Column::from(y))]).unwrap();
    let f = fit(&RankRegressionModel::parse("r(y) ~ r(x)").unwrap(), &data).unwrap();
    let fitted = predict(&f, &data).unwrap();
    for (a, b) in fitted.iter().zip(f.fitted_values()) {
        assert!((a - b).abs() < 1e-14);
    }
    let new = TableData::new(vec![("x", Column::from(vec![0.0, 3.5, 100.0]))]).unwrap();
    let b = f.coefficients();
    let want = [b[0], b[0] + b[1] * 0.5, b[0] + b[1]];
    for (a, w) in predict(&f, &new).unwrap().iter().zip(want) {
        assert!((a - w).abs() < 1e-14);
    }
}

#[test]
fn point_estimates_equal_ols_on_precomputed_ranks() {
    let mut rng = SeededRng::new(20);
    let n = 400;
    let mut p = RankProblem::random(&mut rng, n, 1, true, 0.5);
    let g: Vec<usize> = (0..n).map(|_| rng.next_below(2) as usize).collect();
    p.groups = Some((2, g.clone()));
    let rule = TieRule::increasing(0.5).unwrap();
    let rx = frank(p.x.as_ref().unwrap(), rule).unwrap().values;
    let ry = frank(&p.y, rule).unwrap().values;
    let data = TableData::new(vec![
        ("y", Column::from(p.y.clone())),
        ("x", Column::from(p.x.clone().unwrap())),
        ("w", Column::from(p.w[0].clone())),
        ("g", Column::from(g.iter().map(|&v| v as f64).collect::<Vec<_>>())),
        ("ry", Column::from(ry)),
        ("rx", Column::from(rx)),
    ])
    .unwrap();
    for (ranked, plain) in [
        ("r(y) ~ r(x)", "ry ~ rx"),
        ("r(y) ~ r(x) + w", "ry ~ rx + w"),
        ("y ~ r(x) + w", "y ~ rx + w"),
        ("r(y) ~ (r(x) + w):g", "ry ~ (rx + w):g"),
    ] {
        let a = fit(
            &RankRegressionModel::parse(ranked).unwrap().with_omega(0.5).unwrap(),
            &data,
        )
        .unwrap();
        let b = fit(&RankRegressionModel::parse(plain).unwrap(), &data).unwrap();
        let z = b.design().z();
        let want = ols(
            &DMatrix::from_fn(z.nrows(), z.ncols(), |i, j| z[(i, j)]),
            b.design().response(),
        );
        for ((x, y), w) in a.coefficients().iter().zip(b.coefficients()).zip(&want) {
            assert!((x - y).abs() <= 1e-12, "{ranked}: {x} vs {y}");
            assert!((x - w).abs() <= 1e-10, "{ranked}: {x} vs normal equations {w}");
        }
    }
}

fn vcov_seconds(n: usize) -> f64 {
    let mut rng = SeededRng::new(n as u64);
    let p = RankProblem::random(&mut rng, n, 1, false, 1.0);
    let f = fit_problem(&p);
    corrected_vcov(&f).unwrap();
    (0..3)
        .map(|_| {
            let t = Instant::now();
            corrected_vcov(&f).unwrap();
            t.elapsed().as_secs_f64()
        })
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn variance_runtime_is_linearithmic() {
    let big = vcov_seconds(1_000_000);
    let small = vcov_seconds(100_000);
    let nlogn = (1e6 * 1e6f64.ln()) / (1e5 * 1e5f64.ln());
    assert!(big < 10.0, "n = 1e6 took {big:.2} s");
    assert!(
        big / small <= 1.3 * nlogn,
        "time ratio {:.1} exceeds {:.1}",
        big / small,
        1.3 * nlogn
    );
}
