//! Implementations behind the CLI subcommands. Each returns a [`CliError`]
//! whose category fixes the process exit code.

use std::collections::BTreeMap;
use std::path::Path;

use crate::datagen::{
    composite_case_pattern, linspace, oscillator_pattern, relative_l2_error, sample_observations,
    solve_burgers, solve_kdv, CompositeFunction, DampedOscillator, NoiseSpec, SamplingPattern,
    TruthSource, PDE_GRID_SIZE, PDE_TIME,
};
use crate::inference::fit;
use crate::kernel::MeanFunction;

use super::config::{Mode, RunConfig};
use super::model_file;
use super::observations::{
    format_float, read_observations, read_predictions, read_value_rows, write_observations,
    write_predictions, write_rle, write_value_rows,
};
use super::reproduce::{run as run_reproduce, ExampleKind, ReproduceRequest};
use super::{parse_grid_spec, parse_orders, CliError};

/// `fit`: read observations and config, maximize the likelihood, persist the
/// model, and print a fit report.
pub fn cmd_fit(data: &Path, config: Option<&Path>, out: &Path) -> Result<(), CliError> {
    let config = match config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let obs = read_observations(data)?;
    let mean = MeanFunction::polynomial(config.mean.clone());
    let model = fit(&obs, &mean, config.mode.noise_mode(), &config.fit_config())?;
    model_file::save(out, &model)?;

    let hp = model.hyperparameters();
    println!("mode:            {}", config.mode.as_str());
    println!("observations:    {}", obs.len());
    println!("max order:       {}", obs.max_order());
    println!("log-likelihood:  {}", format_float(model.log_likelihood()));
    println!("amplitude:       {}", format_float(hp.amplitude()));
    println!("length-scale:    {}", format_float(hp.length_scale()));
    if config.mode != Mode::Noiseless {
        for (order, &delta) in hp.noise().iter().enumerate() {
            if obs.count(order) > 0 {
                println!("delta[{order}]:        {}", format_float(delta));
            }
        }
    }
    if let Some(report) = model.fit_report() {
        let converged = report.restarts.iter().filter(|r| r.converged).count();
        let evals: usize = report.restarts.iter().map(|r| r.evaluations).sum();
        println!(
            "restarts:        {} ({} converged, {} evaluations, best from restart {})",
            report.restarts.len(),
            converged,
            evals,
            report.chosen_restart
        );
    }
    if model.jitter_applied() > 0.0 {
        println!("jitter applied:  {:e}", model.jitter_applied());
    }
    println!("model written to {}", out.display());
    Ok(())
}

/// `predict`: load a model and write posterior curves for the requested grid
/// and orders.
pub fn cmd_predict(model: &Path, grid: &str, orders: &str, out: &Path) -> Result<(), CliError> {
    let model = model_file::load(model)?;
    let grid = parse_grid_spec(grid)?;
    let orders = parse_orders(orders)?;
    let data_order = model.observations().max_order();
    for &order in &orders {
        if order > model.max_query_order() {
            return Err(CliError::validation(format!(
                "order {order} exceeds the model's supported maximum {}",
                model.max_query_order()
            )));
        }
        if order > data_order {
            println!(
                "note: order {order} exceeds the highest data order {data_order}; \
                 prediction extrapolates the derivative field"
            );
        }
    }
    let predictions = model.predict_curve(&grid, &orders)?;
    write_predictions(out, &predictions)?;
    println!(
        "{} predictions ({} orders x {} points) written to {}",
        predictions.len(),
        orders.len(),
        grid.len(),
        out.display()
    );
    Ok(())
}

/// `eval`: compare a prediction file against a truth file on the same grid
/// and report the relative L2 error per order.
pub fn cmd_eval(pred: &Path, truth: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let predictions = read_predictions(pred)?;
    let truth_rows = read_value_rows(truth)?;

    let mut predicted: BTreeMap<usize, Vec<(f64, f64)>> = BTreeMap::new();
    for row in &predictions {
        predicted.entry(row.order).or_default().push((row.x, row.mean));
    }
    let mut reference: BTreeMap<usize, Vec<(f64, f64)>> = BTreeMap::new();
    for &(order, x, value) in &truth_rows {
        reference.entry(order).or_default().push((x, value));
    }

    let mut rle = Vec::new();
    for (&order, pred_rows) in &predicted {
        let truth_rows = reference.get(&order).ok_or_else(|| {
            CliError::validation(format!("truth file has no rows for order {order}"))
        })?;
        if truth_rows.len() != pred_rows.len() {
            return Err(CliError::validation(format!(
                "grid mismatch for order {order}: {} predictions vs {} truth rows",
                pred_rows.len(),
                truth_rows.len()
            )));
        }
        for ((xp, _), (xt, _)) in pred_rows.iter().zip(truth_rows) {
            if xp != xt {
                return Err(CliError::validation(format!(
                    "grid mismatch for order {order}: prediction at x={xp}, truth at x={xt}"
                )));
            }
        }
        let truth_values: Vec<f64> = truth_rows.iter().map(|&(_, v)| v).collect();
        let means: Vec<f64> = pred_rows.iter().map(|&(_, m)| m).collect();
        rle.push((order, relative_l2_error(&truth_values, &means)?));
    }

    for &(order, value) in &rle {
        println!("{order},{}", format_float(value));
    }
    if let Some(path) = out {
        write_rle(path, &rle)?;
    }
    Ok(())
}

/// `datagen`: emit an observation CSV (and optionally a truth CSV) for one of
/// the benchmark problems.
#[allow(clippy::too_many_arguments)]
pub fn cmd_datagen(
    example: &str,
    case: Option<u8>,
    noise: f64,
    seed: u64,
    out: &Path,
    truth_out: Option<&Path>,
    truth_points: usize,
) -> Result<(), CliError> {
    let example: ExampleKind = example.parse().map_err(CliError::Validation)?;
    let problem: Box<dyn TruthSource> = match example {
        ExampleKind::Composite => Box::new(CompositeFunction),
        ExampleKind::Oscillator => Box::new(DampedOscillator),
        ExampleKind::Kdv => Box::new(solve_kdv(PDE_GRID_SIZE, PDE_TIME)?),
        ExampleKind::Burgers => Box::new(solve_burgers(PDE_GRID_SIZE, PDE_TIME)?),
    };
    let pattern = match example {
        ExampleKind::Composite => {
            let case = case.unwrap_or(4);
            composite_case_pattern(case).ok_or_else(|| {
                CliError::validation(format!("composite case must be 1..=4, got {case}"))
            })?
        }
        ExampleKind::Oscillator => oscillator_pattern(2),
        ExampleKind::Kdv | ExampleKind::Burgers => {
            SamplingPattern::RandomFromGrid(vec![20, 20, 20])
        }
    };
    let noise_spec = NoiseSpec::new(noise, seed.wrapping_add(0x9e37_79b9))?;
    let obs = sample_observations(problem.as_ref(), &pattern, &noise_spec, seed)?;
    write_observations(out, &obs)?;
    println!(
        "{} observations (orders 0..={}) written to {}",
        obs.len(),
        obs.max_order(),
        out.display()
    );

    if let Some(truth_path) = truth_out {
        if truth_points == 0 {
            return Err(CliError::validation("truth grid needs at least one point"));
        }
        let (lo, hi) = problem.domain();
        let grid = linspace(lo, hi, truth_points);
        let mut rows = Vec::new();
        for order in 0..=2usize {
            for &x in &grid {
                rows.push((order, x, problem.truth(x, order)?));
            }
        }
        write_value_rows(truth_path, &rows)?;
        println!(
            "truth (orders 0..=2, {} points) written to {}",
            truth_points,
            truth_path.display()
        );
    }
    Ok(())
}

/// `reproduce`: run one experiment variant into a report directory.
pub fn cmd_reproduce(
    example: &str,
    variant: &str,
    seed: u64,
    out: &Path,
    restarts: Option<usize>,
    max_evals: Option<usize>,
) -> Result<(), CliError> {
    let example: ExampleKind = example.parse().map_err(CliError::Validation)?;
    let mut request = ReproduceRequest::new(example, variant, seed, out);
    if let Some(restarts) = restarts {
        if restarts == 0 {
            return Err(CliError::validation("restarts must be positive"));
        }
        request.optimizer.restarts = restarts;
    }
    if let Some(max_evals) = max_evals {
        if max_evals == 0 {
            return Err(CliError::validation("max-evals must be positive"));
        }
        request.optimizer.max_evals = max_evals;
    }
    let outcome = run_reproduce(&request)?;
    println!(
        "{} {} (seed {seed}) -> {}",
        example.as_str(),
        variant,
        outcome.out_dir.display()
    );
    for summary in &outcome.models {
        print!(
            "{}: a={:.6} l={:.6} ll={:.4}",
            summary.label, summary.amplitude, summary.length_scale, summary.log_likelihood
        );
        if summary.mode != "noiseless" {
            let deltas: Vec<String> = summary
                .noise
                .iter()
                .map(|d| format!("{d:.6}"))
                .collect();
            print!(" delta=[{}]", deltas.join(", "));
        }
        println!();
    }
    for &(order, value) in &outcome.rle {
        println!("rle[{order}] = {value:.6}");
    }
    Ok(())
}
