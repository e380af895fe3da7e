//! Multimode Gaussian states, the three Gaussian gates, and exact
//! photon-number probabilities.
//!
//! Conventions (fixed once, shared with the Fock oracle): ħ = 1, quadrature
//! ordering (x₁…x_M, p₁…p_M), x = (a + a†)/√2, vacuum variance 1/2.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hafnian::loop_hafnian;
use crate::molparams::DoktorovParameters;

/// Photon counts per mode for one measurement outcome.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PhotonPattern(pub Vec<u32>);

impl PhotonPattern {
    pub fn zeros(modes: usize) -> Self {
        PhotonPattern(vec![0; modes])
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn mode_count(&self) -> usize {
        self.0.len()
    }
}

/// Largest total photon number accepted by the exact probability evaluator;
/// the matching count grows factorially beyond this.
pub const MAX_PATTERN_PHOTONS: u32 = 16;

const PURITY_REL_TOL: f64 = 1e-8;

/// Gaussian state given by its quadrature mean vector (length 2M) and
/// covariance matrix (2M × 2M).
#[derive(Debug, Clone)]
pub struct GaussianState {
    mode_count: usize,
    mean: DVector<f64>,
    covariance: DMatrix<f64>,
}

impl GaussianState {
    /// Vacuum in every mode: zero mean, covariance I/2.
    pub fn vacuum(mode_count: usize) -> Result<Self> {
        if mode_count == 0 {
            return Err(Error::input("mode count must be at least 1"));
        }
        Ok(Self {
            mode_count,
            mean: DVector::zeros(2 * mode_count),
            covariance: DMatrix::identity(2 * mode_count, 2 * mode_count) * 0.5,
        })
    }

    /// Builds a state from raw moments, checking shape and symmetry.
    pub fn from_parts(mean: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        let dim = mean.len();
        if dim == 0 || !dim.is_multiple_of(2) {
            return Err(Error::input("mean vector length must be a positive even number"));
        }
        if covariance.nrows() != dim || covariance.ncols() != dim {
            return Err(Error::input("covariance shape does not match mean length"));
        }
        let asym = (&covariance - covariance.transpose()).abs().max();
        if asym > 1e-12 {
            return Err(Error::input(format!(
                "covariance is not symmetric (deviation {asym:.3e})"
            )));
        }
        Ok(Self {
            mode_count: dim / 2,
            mean,
            covariance,
        })
    }

    pub fn mode_count(&self) -> usize {
        self.mode_count
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    /// Rescales quadratures mode by mode: x_i by e^{r_i}, p_i by e^{-r_i}.
    pub fn apply_squeezing(&self, squeeze: &[f64]) -> Result<Self> {
        let m = self.mode_count;
        if squeeze.len() != m {
            return Err(Error::input(format!(
                "squeeze vector has length {}, expected {m}",
                squeeze.len()
            )));
        }
        let mut scale = DVector::<f64>::zeros(2 * m);
        for i in 0..m {
            scale[i] = squeeze[i].exp();
            scale[m + i] = (-squeeze[i]).exp();
        }
        let mut mean = self.mean.clone();
        let mut cov = self.covariance.clone();
        for a in 0..2 * m {
            mean[a] *= scale[a];
            for b in 0..2 * m {
                cov[(a, b)] *= scale[a] * scale[b];
            }
        }
        Ok(Self {
            mode_count: m,
            mean,
            covariance: cov,
        })
    }

    /// Conjugates the moments by the orthogonal symplectic matrix
    /// [[Re U, −Im U], [Im U, Re U]] of a unitary mode mixing a → U a.
    pub fn apply_interferometer(&self, u: &DMatrix<Complex64>) -> Result<Self> {
        let m = self.mode_count;
        if u.nrows() != m || u.ncols() != m {
            return Err(Error::input(format!(
                "interferometer matrix must be {m}×{m}"
            )));
        }
        let gram = u.adjoint() * u;
        let mut dev = 0.0f64;
        for r in 0..m {
            for c in 0..m {
                let target = if r == c { 1.0 } else { 0.0 };
                dev = dev.max((gram[(r, c)] - Complex64::new(target, 0.0)).norm());
            }
        }
        if dev > 1e-8 {
            return Err(Error::input(format!(
                "interferometer matrix is not unitary (deviation {dev:.3e})"
            )));
        }

        let mut sympl = DMatrix::<f64>::zeros(2 * m, 2 * m);
        for r in 0..m {
            for c in 0..m {
                let z = u[(r, c)];
                sympl[(r, c)] = z.re;
                sympl[(r, m + c)] = -z.im;
                sympl[(m + r, c)] = z.im;
                sympl[(m + r, m + c)] = z.re;
            }
        }
        let mean = &sympl * &self.mean;
        let cov = &sympl * &self.covariance * sympl.transpose();
        Ok(Self {
            mode_count: m,
            mean,
            covariance: cov,
        })
    }

    /// Shifts the mean by √2·(Re α, Im α); the covariance is untouched.
    pub fn apply_displacement(&self, alpha: &[Complex64]) -> Result<Self> {
        let m = self.mode_count;
        if alpha.len() != m {
            return Err(Error::input(format!(
                "displacement vector has length {}, expected {m}",
                alpha.len()
            )));
        }
        let mut mean = self.mean.clone();
        let root2 = std::f64::consts::SQRT_2;
        for i in 0..m {
            mean[i] += root2 * alpha[i].re;
            mean[m + i] += root2 * alpha[i].im;
        }
        Ok(Self {
            mode_count: m,
            mean,
            covariance: self.covariance.clone(),
        })
    }

    /// Total mean photon number, Σ_i (⟨x_i²⟩ + ⟨p_i²⟩ − 1)/2.
    pub fn mean_photon(&self) -> f64 {
        let m = self.mode_count;
        let mut total = 0.0;
        for i in 0..m {
            let xx = self.covariance[(i, i)] + self.mean[i] * self.mean[i];
            let pp = self.covariance[(m + i, m + i)] + self.mean[m + i] * self.mean[m + i];
            total += (xx + pp - 1.0) / 2.0;
        }
        total
    }

    /// Marginal state of a subset of modes (their x and p rows/columns).
    pub fn marginal(&self, modes: &[usize]) -> Result<Self> {
        let m = self.mode_count;
        if modes.is_empty() {
            return Err(Error::input("marginal needs at least one mode"));
        }
        if modes.iter().any(|&k| k >= m) {
            return Err(Error::input("marginal mode index out of range"));
        }
        let idx: Vec<usize> = modes
            .iter()
            .copied()
            .chain(modes.iter().map(|&k| m + k))
            .collect();
        let mean = DVector::from_fn(idx.len(), |r, _| self.mean[idx[r]]);
        let cov = DMatrix::from_fn(idx.len(), idx.len(), |r, c| {
            self.covariance[(idx[r], idx[c])]
        });
        Ok(Self {
            mode_count: modes.len(),
            mean,
            covariance: cov,
        })
    }

    /// Relative deviation of det(covariance) from the pure-state value
    /// (1/2)^{2M}.
    pub fn purity_deviation(&self) -> f64 {
        let det = self.covariance.determinant();
        let pure = 0.5f64.powi(2 * self.mode_count as i32);
        (det / pure - 1.0).abs()
    }

    /// Exact probability of observing `pattern` photons, for pure states.
    ///
    /// The state's moments are converted to its creation-operator
    /// representation c·exp(γ·a† + ½ a†ᵀB a†)|0⟩; the amplitude of a pattern
    /// is then the loop hafnian of B with rows/columns repeated per photon
    /// and the diagonal replaced by γ.
    pub fn fock_probability(&self, pattern: &PhotonPattern) -> Result<f64> {
        let m = self.mode_count;
        if pattern.mode_count() != m {
            return Err(Error::input(format!(
                "pattern has {} modes, state has {m}",
                pattern.mode_count()
            )));
        }
        let total = pattern.total();
        if total > MAX_PATTERN_PHOTONS {
            return Err(Error::Resource(format!(
                "pattern with {total} photons exceeds the cap of {MAX_PATTERN_PHOTONS}"
            )));
        }
        let purity = self.purity_deviation();
        if !(purity < PURITY_REL_TOL) {
            return Err(Error::UnsupportedState(format!(
                "photon probabilities require a pure state \
                 (determinant deviation {purity:.3e})"
            )));
        }

        let dim = 2 * m;
        let husimi = &self.covariance + DMatrix::<f64>::identity(dim, dim) * 0.5;
        let husimi_det = husimi.determinant();
        let husimi_inv = husimi.clone().try_inverse().ok_or_else(|| {
            Error::numerical("Husimi covariance is singular; state invalid")
        })?;

        let w = &husimi_inv * &self.mean;
        let vacuum_prob = (-0.5 * self.mean.dot(&w)).exp() / husimi_det.sqrt();
        if total == 0 {
            return Ok(vacuum_prob);
        }

        // K = I − H⁻¹ holds the pair correlations: B = K_xx + i·K_xp.
        let k = DMatrix::<f64>::identity(dim, dim) - &husimi_inv;
        let mut b = DMatrix::<Complex64>::zeros(m, m);
        for r in 0..m {
            for c in 0..m {
                let re = 0.5 * (k[(r, c)] + k[(c, r)]);
                let im = 0.5 * (k[(r, m + c)] + k[(c, m + r)]);
                b[(r, c)] = Complex64::new(re, im);
            }
        }
        let gamma: Vec<Complex64> = (0..m)
            .map(|i| Complex64::new(w[i], w[m + i]) / std::f64::consts::SQRT_2)
            .collect();

        let t = total as usize;
        let mut owners = Vec::with_capacity(t);
        for (mode, &count) in pattern.0.iter().enumerate() {
            for _ in 0..count {
                owners.push(mode);
            }
        }
        let mut repeated = DMatrix::<Complex64>::zeros(t, t);
        for r in 0..t {
            for c in 0..t {
                repeated[(r, c)] = if r == c {
                    gamma[owners[r]]
                } else {
                    b[(owners[r], owners[c])]
                };
            }
        }
        let amplitude = loop_hafnian(&repeated);
        let mut denom = 1.0f64;
        for &count in &pattern.0 {
            for k in 2..=count as u64 {
                denom *= k as f64;
            }
        }
        Ok(vacuum_prob * amplitude.norm_sqr() / denom)
    }
}

/// Output state of the parameterized circuit applied to the vacuum:
/// squeezing, then the left rotation, then displacement. The right rotation
/// acts trivially on the vacuum and is omitted.
pub fn prepare_doktorov_output(params: &DoktorovParameters) -> Result<GaussianState> {
    let m = params.mode_count();
    let squeeze: Vec<f64> = params.squeeze.iter().copied().collect();
    let u_complex = DMatrix::<Complex64>::from_fn(m, m, |r, c| {
        Complex64::new(params.u_left[(r, c)], 0.0)
    });
    let alpha: Vec<Complex64> = params
        .alpha
        .iter()
        .map(|&a| Complex64::new(a, 0.0))
        .collect();
    GaussianState::vacuum(m)?
        .apply_squeezing(&squeeze)?
        .apply_interferometer(&u_complex)?
        .apply_displacement(&alpha)
}
