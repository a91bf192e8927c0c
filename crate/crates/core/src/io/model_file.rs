//! Versioned model persistence.
//!
//! A model file is a JSON document embedding the hyperparameters, the mode,
//! the mean, the training data plus its checksum, and a few spot-check
//! predictions. Loading rebuilds the model from the embedded data and
//! verifies both the checksum and the spot checks, so a stale or corrupted
//! file is caught instead of silently producing different numbers.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::field::{Hyperparameters, ObservationSet, QuerySpec};
use crate::inference::{FittedModel, NoiseMode};
use crate::kernel::{HermiteTable, MeanFunction};

use super::config::{JitterConfig, Mode};
use super::observations::format_float;
use super::CliError;

pub const FORMAT_VERSION: u32 = 1;
const SPOT_CHECK_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ObservationRow {
    order: usize,
    x: f64,
    value: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct HyperparameterBlock {
    amplitude: f64,
    length_scale: f64,
    noise: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SpotCheck {
    order: usize,
    x: f64,
    mean: f64,
    variance: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    format_version: u32,
    mode: Mode,
    hyperparameters: HyperparameterBlock,
    mean: Vec<f64>,
    hermite_order: usize,
    jitter: JitterConfig,
    log_likelihood: f64,
    data_checksum: String,
    observations: Vec<ObservationRow>,
    spot_checks: Vec<SpotCheck>,
}

fn checksum(rows: &[ObservationRow]) -> String {
    let mut hasher = Sha256::new();
    for row in rows {
        hasher.update(row.order.to_le_bytes());
        hasher.update(row.x.to_le_bytes());
        hasher.update(row.value.to_le_bytes());
    }
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn mode_of(model: &FittedModel) -> Mode {
    match model.mode() {
        NoiseMode::Noiseless => Mode::Noiseless,
        NoiseMode::OneDelta => Mode::NoisyOneDelta,
        NoiseMode::MultiDelta => Mode::NoisyMultiDelta,
    }
}

/// Three queries across the data range used to verify a reloaded model.
fn spot_queries(model: &FittedModel) -> Vec<QuerySpec> {
    let (lo, hi) = model.observations().input_range();
    let mid = 0.5 * (lo + hi);
    vec![
        QuerySpec::new(lo, 0),
        QuerySpec::new(mid, model.observations().max_order()),
        QuerySpec::new(hi, 0),
    ]
}

pub fn save(path: &Path, model: &FittedModel) -> Result<(), CliError> {
    let rows: Vec<ObservationRow> = model
        .observations()
        .iter()
        .map(|(order, x, value)| ObservationRow { order, x, value })
        .collect();
    let spot_checks = spot_queries(model)
        .iter()
        .map(|query| {
            model.posterior(query).map(|p| SpotCheck {
                order: query.order,
                x: query.location,
                mean: p.mean,
                variance: p.variance,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let file = ModelFile {
        format_version: FORMAT_VERSION,
        mode: mode_of(model),
        hyperparameters: HyperparameterBlock {
            amplitude: model.hyperparameters().amplitude(),
            length_scale: model.hyperparameters().length_scale(),
            noise: model.hyperparameters().noise().to_vec(),
        },
        mean: model.mean().coefficients().to_vec(),
        hermite_order: model.hermite_table().max_order(),
        jitter: JitterConfig {
            initial: model.jitter_policy().initial,
            max: model.jitter_policy().cap,
        },
        log_likelihood: model.log_likelihood(),
        data_checksum: checksum(&rows),
        observations: rows,
        spot_checks,
    };
    let text = serde_json::to_string_pretty(&file)
        .map_err(|e| CliError::parse(format!("model serialization failed: {e}")))?;
    std::fs::write(path, text + "\n")
        .map_err(|e| CliError::parse(format!("{}: {e}", path.display())))?;
    Ok(())
}

pub fn load(path: &Path) -> Result<FittedModel, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::parse(format!("{}: {e}", path.display())))?;
    let file: ModelFile = serde_json::from_str(&text)
        .map_err(|e| CliError::parse(format!("{}: {e}", path.display())))?;
    if file.format_version != FORMAT_VERSION {
        return Err(CliError::validation(format!(
            "{}: unsupported model format version {} (expected {})",
            path.display(),
            file.format_version,
            FORMAT_VERSION
        )));
    }
    if checksum(&file.observations) != file.data_checksum {
        return Err(CliError::validation(format!(
            "{}: training data checksum mismatch",
            path.display()
        )));
    }
    let rows: Vec<(usize, f64, f64)> = file
        .observations
        .iter()
        .map(|r| (r.order, r.x, r.value))
        .collect();
    let obs = ObservationSet::from_rows(&rows)?;
    let hp = Hyperparameters::new(
        file.hyperparameters.amplitude,
        file.hyperparameters.length_scale,
        file.hyperparameters.noise.clone(),
    )?;
    let model = FittedModel::with_hyperparameters(
        obs,
        MeanFunction::polynomial(file.mean.clone()),
        hp,
        file.mode.noise_mode(),
        HermiteTable::new(file.hermite_order),
        &file.jitter.policy(),
    )?;
    for check in &file.spot_checks {
        let p = model.posterior(&QuerySpec::new(check.x, check.order))?;
        let mean_err = (p.mean - check.mean).abs();
        let var_err = (p.variance - check.variance).abs();
        let mean_tol = SPOT_CHECK_TOLERANCE * (1.0 + check.mean.abs());
        let var_tol = SPOT_CHECK_TOLERANCE * (1.0 + check.variance.abs());
        if mean_err > mean_tol || var_err > var_tol {
            return Err(CliError::validation(format!(
                "{}: spot-check mismatch at (x={}, order {}): mean {} vs {}, variance {} vs {}",
                path.display(),
                format_float(check.x),
                check.order,
                format_float(p.mean),
                format_float(check.mean),
                format_float(p.variance),
                format_float(check.variance),
            )));
        }
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::JitterPolicy;

    fn sample_model() -> FittedModel {
        let obs = ObservationSet::new(vec![
            (vec![0.0, 0.5, 1.0], vec![0.3, -0.1, 0.8]),
            (vec![0.25, 0.75], vec![1.0, -0.5]),
        ])
        .unwrap();
        FittedModel::with_hyperparameters(
            obs,
            MeanFunction::polynomial(vec![0.1]),
            Hyperparameters::new(1.3, 0.45, vec![0.1, 0.2]).unwrap(),
            NoiseMode::MultiDelta,
            HermiteTable::default(),
            &JitterPolicy::default(),
        )
        .unwrap()
    }

    #[test]
    fn save_load_round_trip_preserves_everything() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let model = sample_model();
        save(&path, &model).unwrap();
        let restored = load(&path).unwrap();

        assert_eq!(
            model.hyperparameters().amplitude().to_bits(),
            restored.hyperparameters().amplitude().to_bits()
        );
        assert_eq!(
            model.hyperparameters().length_scale().to_bits(),
            restored.hyperparameters().length_scale().to_bits()
        );
        assert_eq!(model.hyperparameters().noise(), restored.hyperparameters().noise());
        assert_eq!(model.observations(), restored.observations());

        for x in [0.0, 0.33, 0.8] {
            for order in 0..=2 {
                let a = model.posterior(&QuerySpec::new(x, order)).unwrap();
                let b = restored.posterior(&QuerySpec::new(x, order)).unwrap();
                assert!((a.mean - b.mean).abs() <= 1e-12 * (1.0 + a.mean.abs()));
                assert!((a.variance - b.variance).abs() <= 1e-12 * (1.0 + a.variance.abs()));
            }
        }
    }

    #[test]
    fn tampered_data_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        save(&path, &sample_model()).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let tampered = text.replace("0.3", "0.31");
        assert_ne!(text, tampered);
        std::fs::write(&path, tampered).unwrap();
        let err = load(&path).unwrap_err();
        assert_eq!(err.exit_code(), super::super::EXIT_VALIDATION);
    }

    #[test]
    fn unknown_version_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        save(&path, &sample_model()).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let bumped = text.replace("\"format_version\": 1", "\"format_version\": 99");
        std::fs::write(&path, bumped).unwrap();
        let err = load(&path).unwrap_err();
        assert_eq!(err.exit_code(), super::super::EXIT_VALIDATION);
    }
}
