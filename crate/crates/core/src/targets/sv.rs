use std::ops::Range;

use crate::error::{Error, Result};
use crate::linalg::{is_positive_definite, spd_inverse};
use crate::matrix::Mat;
use crate::scalar::Scalar;

use super::{finite_or, Capabilities, Target};

/// How the volatility/return noise cross-covariance `Σ_ρ = Cov(η, ε)` is specified.
#[derive(Clone, Debug, PartialEq)]
pub enum LeverageSpec {
    /// Entries used as covariances directly.
    Covariance { diag: f64, off: f64 },
    /// Entries are correlations, scaled by `sd(η_i) · sd(ε_j)`.
    Correlation { diag: f64, off: f64 },
    Matrix(Mat<f64>),
}

/// Parameters of the stochastic volatility model; defaults are the DJIA settings
/// (α = 0.99, ν = 15, volatility sd 0.2 with cross-correlation 0.7,
/// leverage −0.4 within an asset and −0.3 across assets).
#[derive(Clone, Debug, PartialEq)]
pub struct SvParams {
    /// Persistence per asset; a single value is broadcast.
    pub alpha: Vec<f64>,
    pub nu: f64,
    pub eta_sd: f64,
    pub eta_corr: f64,
    pub leverage: LeverageSpec,
    /// `Σ_ε`; `None` uses the empirical covariance of the observed returns.
    pub sigma_eps: Option<Mat<f64>>,
    /// Mixing sequence `γ_{1:N}`; `None` means all ones.
    pub gamma: Option<Vec<f64>>,
}

impl Default for SvParams {
    fn default() -> Self {
        Self {
            alpha: vec![0.99],
            nu: 15.0,
            eta_sd: 0.2,
            eta_corr: 0.7,
            leverage: LeverageSpec::Correlation { diag: -0.4, off: -0.3 },
            sigma_eps: None,
            gamma: None,
        }
    }
}

impl SvParams {
    pub fn alpha_vec(&self, d: usize) -> Result<Vec<f64>> {
        match self.alpha.len() {
            1 => Ok(vec![self.alpha[0]; d]),
            len if len == d => Ok(self.alpha.clone()),
            len => Err(Error::Parameter(format!("{len} persistence values for {d} assets"))),
        }
    }

    /// `Σ_η` with equal standard deviations and a common cross-correlation.
    pub fn sigma_eta(&self, d: usize) -> Mat<f64> {
        let var = self.eta_sd * self.eta_sd;
        Mat::from_fn(d, d, |i, j| if i == j { var } else { self.eta_corr * var })
    }

    pub fn sigma_rho(&self, sigma_eta: &Mat<f64>, sigma_eps: &Mat<f64>) -> Result<Mat<f64>> {
        let d = sigma_eta.nrows();
        let pick = |i: usize, j: usize, diag: f64, off: f64| if i == j { diag } else { off };
        Ok(match &self.leverage {
            LeverageSpec::Covariance { diag, off } => Mat::from_fn(d, d, |i, j| pick(i, j, *diag, *off)),
            LeverageSpec::Correlation { diag, off } => Mat::from_fn(d, d, |i, j| {
                pick(i, j, *diag, *off) * sigma_eta[(i, i)].sqrt() * sigma_eps[(j, j)].sqrt()
            }),
            LeverageSpec::Matrix(m) => {
                m.expect_shape((d, d))?;
                m.clone()
            }
        })
    }
}

/// Sample covariance of the columns of `y` (`d × N`), normalised by `N − 1`.
pub fn empirical_covariance<T: Scalar>(y: &Mat<T>) -> Mat<f64> {
    let (d, n) = y.shape();
    let mean: Vec<f64> = (0..d)
        .map(|k| (0..n).map(|c| y[(k, c)].as_f64()).sum::<f64>() / n as f64)
        .collect();
    let denom = (n.max(2) - 1) as f64;
    Mat::from_fn(d, d, |i, j| {
        (0..n)
            .map(|c| (y[(i, c)].as_f64() - mean[i]) * (y[(j, c)].as_f64() - mean[j]))
            .sum::<f64>()
            / denom
    })
}

/// Multivariate stochastic volatility with leverage and t-distributed returns,
/// conditional on the mixing sequence `γ`:
///
/// ```text
/// x_1 ~ N(0, P_0),  P_0,ij = Σ_η,ij / (1 − α_i α_j)
/// x_n | x_{n−1}, y^γ_{n−1} ~ N(A x_{n−1} + Σ_ρ Σ_ε⁻¹ Λ_{n−1}⁻¹ y^γ_{n−1}, Σ_η − Σ_ρ Σ_ε⁻¹ Σ_ρᵀ)
/// y^γ_n | x_n ~ N(0, Λ_n Σ_ε Λ_n),  Λ_n = diag(exp(x_n / 2)),  y^γ_n = √γ_n y_n
/// ```
///
/// `U` drops the Gaussian normalising constants (`log det` of the parameter
/// matrices and `2π` factors); the `½ Σ_k x_n^k` term from `det Λ_n` is kept.
#[derive(Clone, Debug)]
pub struct StochVolModel<T> {
    d: usize,
    n: usize,
    alpha: Vec<T>,
    nu: f64,
    gamma: Vec<T>,
    y: Mat<T>,
    y_gamma: Mat<T>,
    sigma_eta: Mat<T>,
    sigma_eps: Mat<T>,
    sigma_rho: Mat<T>,
    eps_precision: Mat<T>,
    /// `Σ_ρ Σ_ε⁻¹`.
    leverage_gain: Mat<T>,
    cond_precision: Mat<T>,
    initial_precision: Mat<T>,
}

impl<T: Scalar> StochVolModel<T> {
    pub fn build(params: &SvParams, y: Mat<T>) -> Result<Self> {
        let d = y.nrows();
        let alpha = params.alpha_vec(d)?;
        let sigma_eta = params.sigma_eta(d);
        let sigma_eps = match &params.sigma_eps {
            Some(m) => m.clone(),
            None => empirical_covariance(&y),
        };
        let sigma_rho = params.sigma_rho(&sigma_eta, &sigma_eps)?;
        let gamma = params.gamma.clone().unwrap_or_else(|| vec![1.0; y.ncols()]);
        Self::from_matrices(alpha, params.nu, sigma_eta, sigma_eps, sigma_rho, gamma, y)
    }

    pub fn from_matrices(
        alpha: Vec<f64>,
        nu: f64,
        sigma_eta: Mat<f64>,
        sigma_eps: Mat<f64>,
        sigma_rho: Mat<f64>,
        gamma: Vec<f64>,
        y: Mat<T>,
    ) -> Result<Self> {
        let (d, n) = y.shape();
        if d == 0 || n == 0 {
            return Err(Error::Parameter("empty observation matrix".into()));
        }
        if alpha.len() != d || alpha.iter().any(|a| !(0.0..1.0).contains(a)) {
            return Err(Error::Parameter("persistence values must lie in [0, 1), one per asset".into()));
        }
        if gamma.len() != n || gamma.iter().any(|g| !(*g > 0.0) || !g.is_finite()) {
            return Err(Error::Parameter("mixing sequence must be positive with one value per time".into()));
        }
        if !(nu > 0.0) {
            return Err(Error::Parameter(format!("degrees of freedom must be positive, got {nu}")));
        }
        for (name, m) in [("Sigma_eta", &sigma_eta), ("Sigma_eps", &sigma_eps), ("Sigma_rho", &sigma_rho)] {
            m.expect_shape((d, d))?;
            if !m.is_finite() {
                return Err(Error::Parameter(format!("{name} has non-finite entries")));
            }
        }
        if !is_positive_definite(&sigma_eta) {
            return Err(Error::Parameter("Sigma_eta is not symmetric positive definite".into()));
        }
        let eps_precision = spd_inverse(&sigma_eps)
            .filter(|_| is_positive_definite(&sigma_eps))
            .ok_or_else(|| Error::Parameter("Sigma_eps is not symmetric positive definite".into()))?;
        let leverage_gain = sigma_rho.matmul(&eps_precision);
        let mut cond = leverage_gain.matmul(&sigma_rho.transpose());
        cond.scale(-1.0);
        cond.axpy(1.0, &sigma_eta);
        crate::linalg::symmetrize(&mut cond);
        let cond_precision = spd_inverse(&cond).ok_or_else(|| {
            Error::Parameter(
                "Schur complement Sigma_eta - Sigma_rho Sigma_eps^-1 Sigma_rho^T is not positive definite".into(),
            )
        })?;
        let p0 = Mat::from_fn(d, d, |i, j| sigma_eta[(i, j)] / (1.0 - alpha[i] * alpha[j]));
        let initial_precision = spd_inverse(&p0)
            .ok_or_else(|| Error::Parameter("stationary volatility covariance is not positive definite".into()))?;

        let y_gamma = Mat::from_fn(d, n, |k, c| y[(k, c)] * T::of(gamma[c].sqrt()));
        Ok(Self {
            d,
            n,
            alpha: alpha.into_iter().map(T::of).collect(),
            nu,
            gamma: gamma.into_iter().map(T::of).collect(),
            y,
            y_gamma,
            sigma_eta: sigma_eta.cast(),
            sigma_eps: sigma_eps.cast(),
            sigma_rho: sigma_rho.cast(),
            eps_precision: eps_precision.cast(),
            leverage_gain: leverage_gain.cast(),
            cond_precision: cond_precision.cast(),
            initial_precision: initial_precision.cast(),
        })
    }

    pub fn alpha(&self) -> &[T] {
        &self.alpha
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn gamma(&self) -> &[T] {
        &self.gamma
    }

    pub fn observations(&self) -> &Mat<T> {
        &self.y
    }

    pub fn sigma_eta(&self) -> &Mat<T> {
        &self.sigma_eta
    }

    pub fn sigma_eps(&self) -> &Mat<T> {
        &self.sigma_eps
    }

    pub fn sigma_rho(&self) -> &Mat<T> {
        &self.sigma_rho
    }

    /// `Λ_n⁻¹ y^γ_n`, entrywise `exp(−x/2) y^γ`.
    fn standardized(&self, x: &Mat<T>, c: usize) -> Result<Vec<T>> {
        let half = T::of(0.5);
        let z: Vec<T> = x
            .col(c)
            .iter()
            .zip(self.y_gamma.col(c))
            .map(|(&xv, &yv)| (-half * xv).exp() * yv)
            .collect();
        if z.iter().all(|v| v.is_finite()) {
            Ok(z)
        } else {
            Err(Error::Numerical {
                term: "observation",
                index: c,
            })
        }
    }

    /// `x_n − A x_{n−1} − Σ_ρ Σ_ε⁻¹ z_{n−1}` and `z_{n−1}`.
    fn transition_residual(&self, x: &Mat<T>, c: usize) -> Result<(Vec<T>, Vec<T>)> {
        let z_prev = self.standardized(x, c - 1)?;
        let shift = self.leverage_gain.mul_vec(&z_prev);
        let prev = x.col(c - 1);
        let r = x
            .col(c)
            .iter()
            .enumerate()
            .map(|(k, &xv)| xv - self.alpha[k] * prev[k] - shift[k])
            .collect();
        Ok((r, z_prev))
    }
}

impl<T: Scalar> StochVolModel<T> {
    /// `∇U` on `rows × cols`, computing each column's standardised returns once.
    fn range_gradient(&self, x: &Mat<T>, rows: Range<usize>, cols: Range<usize>) -> Result<Mat<T>> {
        x.expect_shape((self.d, self.n))?;
        let (d, half) = (self.d, T::of(0.5));
        let (first, last) = (cols.start, cols.end);
        let stop = (last + 1).min(self.n);
        let lo = first.saturating_sub(1);
        // z_c = Λ_c⁻¹ y^γ_c and the leverage shift Σ_ρ Σ_ε⁻¹ z_c for every column touched
        let mut z = Mat::zeros(d, stop - lo);
        let mut shift = Mat::zeros(d, stop - lo);
        for c in lo..stop {
            let zc = z.col_mut(c - lo);
            for k in 0..d {
                zc[k] = (-half * x[(k, c)]).exp() * self.y_gamma[(k, c)];
            }
            if !zc.iter().all(|v| v.is_finite()) {
                return Err(Error::Numerical {
                    term: "observation",
                    index: c,
                });
            }
            self.leverage_gain.mul_vec_into(z.col(c - lo), shift.col_mut(c - lo));
        }
        let mut g = Mat::zeros(d, last - first);
        let (mut buf, mut w) = (vec![T::zero(); d], vec![T::zero(); d]);
        for c in first..stop {
            let j = c - lo;
            if c < last {
                let zc = z.col(j);
                self.eps_precision.mul_vec_into(zc, &mut buf);
                let gc = g.col_mut(c - first);
                for k in 0..d {
                    gc[k] += half - half * zc[k] * buf[k];
                }
                if c == 0 {
                    self.initial_precision.mul_vec_into(x.col(0), &mut buf);
                    super::add_into(gc, &buf);
                }
            }
            if c == 0 {
                continue;
            }
            for k in 0..d {
                buf[k] = x[(k, c)] - self.alpha[k] * x[(k, c - 1)] - shift[(k, j - 1)];
            }
            self.cond_precision.mul_vec_into(&buf, &mut w);
            if c < last {
                super::add_into(g.col_mut(c - first), &w);
            }
            if c > first {
                let zp = z.col(j - 1);
                let gp = g.col_mut(c - 1 - first);
                for k in 0..d {
                    // (Cᵀ w)_k with C = Σ_ρ Σ_ε⁻¹
                    let ctw: T = self.leverage_gain.col(k).iter().zip(&w).map(|(&a, &b)| a * b).sum();
                    gp[k] += -self.alpha[k] * w[k] + half * zp[k] * ctw;
                }
            }
        }
        if !g.is_finite() {
            return Err(Error::Numerical {
                term: "gradient",
                index: first,
            });
        }
        if rows == (0..d) {
            return Ok(g);
        }
        Ok(Mat::from_fn(rows.len(), g.ncols(), |a, b| g[(rows.start + a, b)]))
    }
}

fn quad<T: Scalar>(m: &Mat<T>, v: &[T]) -> T {
    (0..v.len()).map(|k| v[k] * m.row_dot(k, v)).sum()
}

impl<T: Scalar> Target<T> for StochVolModel<T> {
    fn dims(&self) -> (usize, usize) {
        (self.d, self.n)
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities {
            has_factors: true,
            is_quadratic: false,
        }
    }

    fn potential(&self, x: &Mat<T>) -> Result<T> {
        super::markov_potential(self, x)
    }

    fn gradient(&self, x: &Mat<T>) -> Result<Mat<T>> {
        self.range_gradient(x, 0..self.d, 0..self.n)
    }

    fn block_gradient(&self, x: &Mat<T>, block: &crate::blocking::Block) -> Result<Mat<T>> {
        self.range_gradient(x, block.rows.clone(), block.cols.clone())
    }

    fn column_halo(&self) -> Option<usize> {
        Some(1)
    }

    fn column_term(&self, x: &Mat<T>, c: usize) -> Result<T> {
        let half = T::of(0.5);
        let z = self.standardized(x, c)?;
        let mut u = half * x.col(c).iter().copied().sum::<T>() + half * quad(&self.eps_precision, &z);
        u = finite_or(u, "observation", c)?;
        if c == 0 {
            u += half * quad(&self.initial_precision, x.col(0));
            finite_or(u, "initial", 0)
        } else {
            let (r, _) = self.transition_residual(x, c)?;
            u += half * quad(&self.cond_precision, &r);
            finite_or(u, "transition", c)
        }
    }

    fn column_term_gradient(&self, x: &Mat<T>, c: usize, prev: &mut [T], cur: &mut [T]) -> Result<()> {
        let half = T::of(0.5);
        let z = self.standardized(x, c)?;
        let pz = self.eps_precision.mul_vec(&z);
        for k in 0..self.d {
            cur[k] += half - half * z[k] * pz[k];
        }
        if c == 0 {
            let px = self.initial_precision.mul_vec(x.col(0));
            super::add_into(cur, &px);
        } else {
            let (r, z_prev) = self.transition_residual(x, c)?;
            let w = self.cond_precision.mul_vec(&r);
            super::add_into(cur, &w);
            for j in 0..self.d {
                // (Cᵀ w)_j with C = Σ_ρ Σ_ε⁻¹
                let ctw: T = self.leverage_gain.col(j).iter().zip(&w).map(|(&a, &b)| a * b).sum();
                prev[j] += -self.alpha[j] * w[j] + half * z_prev[j] * ctw;
            }
        }
        if cur.iter().chain(prev.iter()).all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::Numerical {
                term: "gradient",
                index: c,
            })
        }
    }
}
