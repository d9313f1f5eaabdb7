//! Datasets on disk and the targets built from them.

use std::path::Path;

use bbps_core::io::{read_matrix_file, write_matrix_file, write_vector_file};
use bbps_core::oracle::{simulate_ar_data, simulate_sv_data};
use bbps_core::targets::{ArGaussianModel, LeverageSpec, StochVolModel, SvParams, Target};
use bbps_core::{ArModel, Mat, SvModel};

use crate::config::ModelConfig;
use crate::CliError;

#[derive(Clone, Debug)]
pub struct Dataset {
    pub y: Mat<f64>,
    pub x_true: Option<Mat<f64>>,
    pub gamma: Option<Vec<f64>>,
}

pub enum Model {
    Ar(ArModel),
    Sv(SvModel),
}

impl Model {
    pub fn target(&self) -> &dyn Target<f64> {
        match self {
            Self::Ar(m) => m,
            Self::Sv(m) => m,
        }
    }
}

fn sv_params(cfg: &ModelConfig) -> Option<SvParams> {
    let ModelConfig::Sv {
        d,
        alpha,
        nu,
        eta_sd,
        eta_corr,
        leverage,
        eps_corr,
        ..
    } = cfg
    else {
        return None;
    };
    Some(SvParams {
        alpha: alpha.clone(),
        nu: *nu,
        eta_sd: *eta_sd,
        eta_corr: *eta_corr,
        leverage: LeverageSpec::Correlation {
            diag: leverage[0],
            off: leverage[1],
        },
        sigma_eps: eps_corr.map(|r| equicorrelated(*d, r)),
        gamma: None,
    })
}

fn equicorrelated(d: usize, r: f64) -> Mat<f64> {
    Mat::from_fn(d, d, |i, j| if i == j { 1.0 } else { r })
}

pub fn simulate(cfg: &ModelConfig, seed: u64) -> Result<Dataset, CliError> {
    match cfg {
        &ModelConfig::Ar { d, n, sigma2, psi } => {
            let a = ArGaussianModel::<f64>::kernel_transition(d, sigma2, psi)?;
            let data = simulate_ar_data(&a, n, seed, 1.0);
            Ok(Dataset {
                y: data.y,
                x_true: Some(data.x_true),
                gamma: None,
            })
        }
        ModelConfig::Sv { d, n, eps_corr, .. } => {
            let params = sv_params(cfg).expect("sv config");
            let sigma_eps = equicorrelated(*d, eps_corr.unwrap_or(0.5));
            let data = simulate_sv_data(&params, &sigma_eps, *n, seed, false)?;
            Ok(Dataset {
                y: data.y,
                x_true: Some(data.x_true),
                gamma: Some(data.gamma),
            })
        }
    }
}

pub fn write(dir: &Path, data: &Dataset) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    write_matrix_file(dir.join("y.csv"), &data.y, None)?;
    if let Some(x) = &data.x_true {
        write_matrix_file(dir.join("x_true.csv"), x, None)?;
    }
    if let Some(g) = &data.gamma {
        write_vector_file(dir.join("gamma.csv"), g)?;
    }
    Ok(())
}

/// Reads `y.csv` and, when present, `x_true.csv` and `gamma.csv`.
pub fn load(dir: &Path, cfg: &ModelConfig) -> Result<Dataset, CliError> {
    let y_path = dir.join("y.csv");
    if !y_path.exists() {
        return Err(CliError::Config(format!("no observations at {}", y_path.display())));
    }
    let y = read_matrix_file(&y_path)?;
    if y.shape() != cfg.dims() {
        return Err(CliError::Config(format!(
            "{} is {}x{} but the model is {}x{}",
            y_path.display(),
            y.nrows(),
            y.ncols(),
            cfg.dims().0,
            cfg.dims().1
        )));
    }
    let x_path = dir.join("x_true.csv");
    let x_true = if x_path.exists() { Some(read_matrix_file(&x_path)?) } else { None };
    let g_path = dir.join("gamma.csv");
    let gamma = if g_path.exists() && matches!(cfg, ModelConfig::Sv { .. }) {
        Some(read_matrix_file(&g_path)?.as_slice().to_vec())
    } else {
        None
    };
    Ok(Dataset { y, x_true, gamma })
}

pub fn build_model(cfg: &ModelConfig, data: &Dataset) -> Result<Model, CliError> {
    match cfg {
        &ModelConfig::Ar { sigma2, psi, .. } => Ok(Model::Ar(ArGaussianModel::build(sigma2, psi, data.y.clone())?)),
        ModelConfig::Sv { .. } => {
            let params = SvParams {
                gamma: data.gamma.clone(),
                ..sv_params(cfg).expect("sv config")
            };
            Ok(Model::Sv(StochVolModel::build(&params, data.y.clone())?))
        }
    }
}

/// FNV-1a over the shape and bit patterns of `y`; identifies a dataset across runs.
pub fn fingerprint(y: &Mat<f64>) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let (d, n) = y.shape();
    let words = [d as u64, n as u64].into_iter().chain(y.as_slice().iter().map(|v| v.to_bits()));
    for w in words {
        for b in w.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    format!("{d}x{n}-{h:016x}")
}
