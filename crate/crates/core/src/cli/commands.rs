use std::io::{Read, Write};
use std::path::Path;

use serde_json::{json, Value};

use crate::multinomcs::{cs_ranks_multinomial, Correction, MultinomError, MultinomialCounts};
use crate::numerics::{DenseMatrix, NumericsError};
use crate::rankcs::{
    cs_ranks, cs_tau_best, cs_tau_worst, BootstrapConfig, CsMode, EstimatesWithCovariance, RankConfidenceSet,
    RankCsError, TauBestSet,
};
use crate::ranking::{frank, frank_against, irank, irank_against, Direction, RankingError, TieRule};
use crate::rankreg::{
    confint_with, corrected_vcov, fit, summarize_with, RankRegError, RankRegressionModel, DF_WARNING,
};
use crate::table::{TableData, TableError};

use super::envelope::{digest, json_real, write_atomic, OutputEnvelope};
use super::svg::interval_chart;
use super::{CliError, Command, CommonArgs, EstimateArgs, Format, MultCorr};

impl From<TableError> for CliError {
    fn from(e: TableError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<RankingError> for CliError {
    fn from(e: RankingError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<RankCsError> for CliError {
    fn from(e: RankCsError) -> Self {
        match e {
            RankCsError::DegeneratePair { .. } | RankCsError::Numerics(_) => CliError::Domain(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<MultinomError> for CliError {
    fn from(e: MultinomError) -> Self {
        match e {
            MultinomError::InsufficientCategories(_) | MultinomError::EmptySample => CliError::Domain(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<RankRegError> for CliError {
    fn from(e: RankRegError) -> Self {
        use RankRegError::*;
        match e {
            MissingValues { .. }
            | RankDeficient { .. }
            | EmptyGroup { .. }
            | TooFewObservations { .. }
            | NonFinite { .. }
            | Numerics(_) => CliError::Domain(e.to_string()),
            DimensionMismatch(_) => CliError::Internal(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

/// What a command hands back for rendering.
struct Outcome {
    procedure: &'static str,
    seed: Option<u64>,
    coverage: Option<f64>,
    results: Value,
    warnings: Vec<String>,
    csv_header: Vec<&'static str>,
    csv_rows: Vec<Vec<String>>,
}

struct Input {
    bytes: Vec<u8>,
    table: TableData,
}

fn read_input(path: &str, stdin: &mut dyn Read) -> Result<Input, CliError> {
    let mut bytes = Vec::new();
    if path == "-" {
        stdin
            .read_to_end(&mut bytes)
            .map_err(|e| CliError::Input(format!("reading standard input: {e}")))?;
    } else {
        bytes = std::fs::read(path).map_err(|e| CliError::Input(format!("reading `{path}`: {e}")))?;
    }
    let text = std::str::from_utf8(&bytes).map_err(|_| CliError::Input("input is not valid UTF-8".into()))?;
    let table = TableData::from_csv_str(text)?;
    Ok(Input { bytes, table })
}

fn check_coverage(c: f64) -> Result<f64, CliError> {
    if c > 0.0 && c < 1.0 {
        Ok(c)
    } else {
        Err(CliError::Input(format!("--coverage must lie in (0, 1), got {c}")))
    }
}

fn resolve_seed(seed: Option<u64>, warnings: &mut Vec<String>) -> u64 {
    seed.unwrap_or_else(|| {
        let s = rand::random::<u64>();
        warnings.push(format!("no --seed given; drew seed {s} from OS entropy"));
        s
    })
}

fn labels(table: &TableData, column: Option<&str>) -> Result<Vec<String>, CliError> {
    match column {
        Some(c) => Ok(table.labels(c)?),
        None => Ok((1..=table.nrows()).map(|i| i.to_string()).collect()),
    }
}

/// Converts 1-based indices to 0-based, rejecting out-of-range entries.
fn zero_based(indices: Option<&[usize]>, p: usize) -> Result<Option<Vec<usize>>, CliError> {
    indices
        .map(|ix| {
            ix.iter()
                .map(|&i| {
                    if i >= 1 && i <= p {
                        Ok(i - 1)
                    } else {
                        Err(CliError::Input(format!("--indices entry {i} is outside 1..={p}")))
                    }
                })
                .collect()
        })
        .transpose()
}

fn fmt_real(x: f64) -> String {
    if x.is_finite() {
        x.to_string()
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn emit(common: &CommonArgs, input: &Input, out: Outcome, stdout: &mut dyn Write) -> Result<(), CliError> {
    let bytes = match common.format {
        Format::Json => OutputEnvelope {
            procedure: out.procedure.into(),
            input_digest: digest(&input.bytes),
            seed: out.seed,
            coverage: out.coverage,
            results: out.results,
            warnings: out.warnings,
        }
        .to_json()
        .into_bytes(),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let internal = |e: csv::Error| CliError::Internal(e.to_string());
            w.write_record(&out.csv_header).map_err(internal)?;
            for row in &out.csv_rows {
                w.write_record(row).map_err(internal)?;
            }
            w.into_inner().map_err(|e| CliError::Internal(e.to_string()))?
        }
    };
    match &common.output {
        Some(path) => {
            write_atomic(path, &bytes).map_err(|e| CliError::Internal(format!("writing `{}`: {e}", path.display())))
        }
        None => stdout.write_all(&bytes).map_err(|e| CliError::Internal(e.to_string())),
    }
}

pub(super) fn execute(cmd: Command, stdin: &mut dyn Read, stdout: &mut dyn Write) -> Result<(), CliError> {
    let (common, outcome, input) = match cmd {
        Command::Ranks {
            common,
            column,
            omega,
            increasing,
            decreasing: _,
            against,
            label,
        } => {
            let input = read_input(&common.input, stdin)?;
            let out = ranks(
                &input.table,
                &column,
                omega,
                increasing,
                against.as_deref(),
                label.as_deref(),
            )?;
            (common, out, input)
        }
        Command::CsRanks {
            common,
            est,
            simul,
            indices,
            svg,
        } => {
            let input = read_input(&common.input, stdin)?;
            let out = cs_ranks_cmd(&common, &input.table, &est, simul, indices.as_deref(), svg.as_deref())?;
            (common, out, input)
        }
        Command::CsTaubest { common, est, tau } => {
            let input = read_input(&common.input, stdin)?;
            let out = tau_cmd(&common, &input.table, &est, tau, false)?;
            (common, out, input)
        }
        Command::CsTauworst { common, est, tau } => {
            let input = read_input(&common.input, stdin)?;
            let out = tau_cmd(&common, &input.table, &est, tau, true)?;
            (common, out, input)
        }
        Command::CsMultinom {
            common,
            counts,
            label,
            simul,
            multcorr,
            indices,
        } => {
            let input = read_input(&common.input, stdin)?;
            let out = multinom_cmd(
                &common,
                &input.table,
                &counts,
                label.as_deref(),
                simul,
                multcorr,
                indices.as_deref(),
            )?;
            (common, out, input)
        }
        Command::RankReg { common, formula, omega } => {
            let input = read_input(&common.input, stdin)?;
            let out = rankreg_cmd(&common, &input.table, &formula, omega)?;
            (common, out, input)
        }
    };
    emit(&common, &input, outcome, stdout)
}

fn ranks(
    table: &TableData,
    column: &str,
    omega: f64,
    increasing: bool,
    against: Option<&str>,
    label: Option<&str>,
) -> Result<Outcome, CliError> {
    let direction = if increasing {
        Direction::Increasing
    } else {
        Direction::Decreasing
    };
    let rule = TieRule::new(omega, direction)?;
    let values = table.numeric(column)?;
    if values.is_empty() {
        return Err(CliError::Input(format!("column `{column}` has no rows")));
    }
    let (ir, fr) = match against {
        Some(reference) => {
            let reference = table.numeric(reference)?;
            (
                irank_against(&values, &reference, rule)?,
                frank_against(&values, &reference, rule)?,
            )
        }
        None => (irank(&values, rule)?, frank(&values, rule)?),
    };
    let names = labels(table, label)?;
    let rows: Vec<Value> = (0..values.len())
        .map(|i| json!({"index": i + 1, "label": names[i], "value": values[i], "irank": ir.values[i], "frank": fr.values[i]}))
        .collect();
    let csv_rows = (0..values.len())
        .map(|i| {
            vec![
                (i + 1).to_string(),
                names[i].clone(),
                fmt_real(values[i]),
                fmt_real(ir.values[i]),
                fmt_real(fr.values[i]),
            ]
        })
        .collect();
    Ok(Outcome {
        procedure: "ranks",
        seed: None,
        coverage: None,
        results: json!({
            "column": column,
            "against": against,
            "omega": omega,
            "direction": if increasing { "increasing" } else { "decreasing" },
            "rows": rows,
        }),
        warnings: vec![],
        csv_header: vec!["index", "label", "value", "irank", "frank"],
        csv_rows,
    })
}

fn read_cov_matrix(path: &Path, p: usize) -> Result<DenseMatrix, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("reading `{}`: {e}", path.display())))?;
    let t = TableData::from_csv_str(&text)?;
    if t.names().len() != p || t.nrows() != p {
        return Err(CliError::Input(format!(
            "covariance file must be {p} x {p}, found {} rows and {} columns",
            t.nrows(),
            t.names().len()
        )));
    }
    let mut m = DenseMatrix::zeros(p, p);
    for (j, name) in t.names().iter().enumerate() {
        for (i, v) in t.numeric(name)?.into_iter().enumerate() {
            m[(i, j)] = v;
        }
    }
    Ok(m)
}

fn estimates(table: &TableData, args: &EstimateArgs) -> Result<(EstimatesWithCovariance, Vec<String>), CliError> {
    let theta = table.numeric(&args.estimates)?;
    let p = theta.len();
    let est = match (&args.se, &args.cov) {
        (Some(se), _) => EstimatesWithCovariance::from_standard_errors(theta, &table.numeric(se)?)?,
        (None, Some(path)) => EstimatesWithCovariance::new(theta, read_cov_matrix(path, p)?).map_err(|e| match e {
            RankCsError::Numerics(NumericsError::NotSymmetric { .. }) => CliError::Domain(e.to_string()),
            other => other.into(),
        })?,
        (None, None) => return Err(CliError::Input("one of --se or --cov is required".into())),
    };
    Ok((est, labels(table, args.label.as_deref())?))
}

fn interval_json(
    cs: &RankConfidenceSet,
    names: &[String],
    extra: &dyn Fn(usize) -> (&'static str, Value),
) -> Vec<Value> {
    cs.intervals
        .iter()
        .map(|iv| {
            let mut m = serde_json::Map::new();
            m.insert("index".into(), json!(iv.index + 1));
            m.insert("label".into(), json!(names[iv.index]));
            let (k, v) = extra(iv.index);
            m.insert(k.into(), v);
            m.insert("L".into(), json!(iv.lower));
            m.insert("rank".into(), json!(iv.rank));
            m.insert("U".into(), json!(iv.upper));
            Value::Object(m)
        })
        .collect()
}

fn interval_csv(cs: &RankConfidenceSet, names: &[String], extra: &dyn Fn(usize) -> String) -> Vec<Vec<String>> {
    cs.intervals
        .iter()
        .map(|iv| {
            vec![
                (iv.index + 1).to_string(),
                names[iv.index].clone(),
                extra(iv.index),
                iv.lower.to_string(),
                fmt_real(iv.rank),
                iv.upper.to_string(),
            ]
        })
        .collect()
}

fn mode_of(simul: bool) -> CsMode {
    if simul {
        CsMode::Simultaneous
    } else {
        CsMode::Marginal
    }
}

fn cs_ranks_cmd(
    common: &CommonArgs,
    table: &TableData,
    args: &EstimateArgs,
    simul: bool,
    indices: Option<&[usize]>,
    svg: Option<&Path>,
) -> Result<Outcome, CliError> {
    let coverage = check_coverage(common.coverage)?;
    let mut warnings = Vec::new();
    let seed = resolve_seed(common.seed, &mut warnings);
    let (est, names) = estimates(table, args)?;
    let targets = zero_based(indices, est.len())?;
    let cfg = BootstrapConfig::new(args.draws, coverage, seed)?;
    let mode = mode_of(simul);
    let cs = cs_ranks(&est, &cfg, mode, targets.as_deref())?;
    if let Some(path) = svg {
        write_atomic(path, interval_chart(&cs, &names).as_bytes())
            .map_err(|e| CliError::Internal(format!("writing `{}`: {e}", path.display())))?;
    }
    let theta = est.theta_hat();
    Ok(Outcome {
        procedure: "cs-ranks",
        seed: Some(seed),
        coverage: Some(coverage),
        results: json!({
            "mode": mode,
            "draws": args.draws,
            "populations": est.len(),
            "intervals": interval_json(&cs, &names, &|j| ("estimate", json!(theta[j]))),
        }),
        warnings,
        csv_header: vec!["index", "label", "estimate", "L", "rank", "U"],
        csv_rows: interval_csv(&cs, &names, &|j| fmt_real(theta[j])),
    })
}

fn tau_cmd(
    common: &CommonArgs,
    table: &TableData,
    args: &EstimateArgs,
    tau: usize,
    worst: bool,
) -> Result<Outcome, CliError> {
    let coverage = check_coverage(common.coverage)?;
    let mut warnings = Vec::new();
    let seed = resolve_seed(common.seed, &mut warnings);
    let (est, names) = estimates(table, args)?;
    let cfg = BootstrapConfig::new(args.draws, coverage, seed)?;
    let set: TauBestSet = if worst {
        cs_tau_worst(&est, &cfg, tau)?
    } else {
        cs_tau_best(&est, &cfg, tau)?
    };
    let members: Vec<Value> = set
        .members
        .iter()
        .map(|&j| json!({"index": j + 1, "label": names[j]}))
        .collect();
    Ok(Outcome {
        procedure: if worst { "cs-tauworst" } else { "cs-taubest" },
        seed: Some(seed),
        coverage: Some(coverage),
        results: json!({"tau": tau, "draws": args.draws, "populations": est.len(), "members": members}),
        warnings,
        csv_header: vec!["index", "label"],
        csv_rows: set
            .members
            .iter()
            .map(|&j| vec![(j + 1).to_string(), names[j].clone()])
            .collect(),
    })
}

fn multinom_cmd(
    common: &CommonArgs,
    table: &TableData,
    counts: &str,
    label: Option<&str>,
    simul: bool,
    multcorr: MultCorr,
    indices: Option<&[usize]>,
) -> Result<Outcome, CliError> {
    let coverage = check_coverage(common.coverage)?;
    let x = table.counts(counts)?;
    let names = labels(table, label)?;
    let data = MultinomialCounts::new(x.clone())?;
    let targets = zero_based(indices, x.len())?;
    let method = match multcorr {
        MultCorr::Holm => Correction::Holm,
        MultCorr::Bonferroni => Correction::Bonferroni,
    };
    let mode = mode_of(simul);
    let cs = cs_ranks_multinomial(&data, coverage, mode, method, targets.as_deref())?;
    let warnings = match common.seed {
        Some(_) => vec!["--seed has no effect: multinomial confidence sets are not randomized".to_string()],
        None => vec![],
    };
    Ok(Outcome {
        procedure: "cs-multinom",
        seed: common.seed,
        coverage: Some(coverage),
        results: json!({
            "mode": mode,
            "multcorr": method,
            "total": data.total(),
            "populations": x.len(),
            "intervals": interval_json(&cs, &names, &|j| ("count", json!(x[j]))),
        }),
        warnings,
        csv_header: vec!["index", "label", "count", "L", "rank", "U"],
        csv_rows: interval_csv(&cs, &names, &|j| x[j].to_string()),
    })
}

fn rankreg_cmd(common: &CommonArgs, table: &TableData, formula: &str, omega: f64) -> Result<Outcome, CliError> {
    let level = check_coverage(common.coverage)?;
    let model = RankRegressionModel::parse(formula)?.with_omega(omega)?;
    let fitted = fit(&model, table)?;
    let cov = corrected_vcov(&fitted)?;
    let summary = summarize_with(&fitted, &cov);
    let ci = confint_with(&fitted, &cov, level)?;
    let mut warnings = vec![DF_WARNING.to_string()];
    warnings.extend(fitted.warnings().iter().cloned());
    if common.seed.is_some() {
        warnings.push("--seed has no effect: rank regression is not randomized".into());
    }
    let names = fitted.column_names().to_vec();
    let coefficients: Vec<Value> = summary
        .rows
        .iter()
        .map(|r| {
            json!({
                "name": r.name,
                "estimate": r.estimate,
                "std_error": r.std_error,
                "z_value": json_real(r.z_value),
                "p_value": r.p_value,
                "stars": r.stars,
            })
        })
        .collect();
    let k = names.len();
    let vcov: Vec<Vec<f64>> = (0..k).map(|i| (0..k).map(|j| cov.vcov[(i, j)]).collect()).collect();
    let confint: Vec<Value> = ci
        .iter()
        .map(|c| json!({"name": c.name, "lower": c.lower, "upper": c.upper}))
        .collect();
    let csv_rows = summary
        .rows
        .iter()
        .zip(&ci)
        .map(|(r, c)| {
            vec![
                r.name.clone(),
                fmt_real(r.estimate),
                fmt_real(r.std_error),
                fmt_real(r.z_value),
                fmt_real(r.p_value),
                fmt_real(c.lower),
                fmt_real(c.upper),
            ]
        })
        .collect();
    Ok(Outcome {
        procedure: "rank-reg",
        seed: common.seed,
        coverage: Some(level),
        results: json!({
            "formula": model.formula(),
            "omega": omega,
            "nobs": fitted.nobs(),
            "coefficients": coefficients,
            "vcov": {"names": names, "matrix": vcov},
            "confint": confint,
        }),
        warnings,
        csv_header: vec!["name", "estimate", "std_error", "z_value", "p_value", "lower", "upper"],
        csv_rows,
    })
}
