//! Self-verification suites behind the `verify` subcommand.
//!
//! Each check compares an implementation path against an independent route
//! (closed forms, the matching-enumeration hafnian, the truncated-Fock
//! oracle) and reports its worst deviation. The perturbation hook exists so
//! tests can prove the checks actually catch convention mistakes.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::fockoracle;
use crate::gaussian::{self, GaussianState, PhotonPattern};
use crate::hafnian::{loop_hafnian, loop_hafnian_by_enumeration};
use crate::molparams::DoktorovParameters;
use crate::sampler::patterns_with_total_at_most;

/// Deliberate convention corruption for mutation testing of the checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Perturbation {
    None,
    /// Negates the squeezing parameters on the Gaussian side only.
    NegatedSqueeze,
}

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub max_deviation: f64,
    pub tolerance: f64,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.max_deviation <= self.tolerance
    }
}

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(CheckResult::passed)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            out.push_str(&format!(
                "{:<28} max deviation {:>12.3e}  (tolerance {:>8.1e})  {}\n",
                c.name,
                c.max_deviation,
                c.tolerance,
                if c.passed() { "ok" } else { "FAIL" }
            ));
        }
        out
    }
}

/// Runs the desk-scale verification suite.
pub fn run_small_checks(perturbation: Perturbation) -> VerifyReport {
    let checks = vec![
        check_coherent_closed_form(),
        check_squeezed_closed_form(),
        check_hafnian_dual_path(),
        check_oracle_agreement(perturbation),
        check_purity_preservation(),
        check_normalization(),
    ];
    VerifyReport { checks }
}

fn poisson(mean: f64, n: u32) -> f64 {
    let mut p = (-mean).exp();
    for k in 1..=n {
        p *= mean / k as f64;
    }
    p
}

fn squeezed_vacuum_prob(r: f64, n: u32) -> f64 {
    if n % 2 == 1 {
        return 0.0;
    }
    let half = n / 2;
    let mut fact_n = 1.0f64;
    for k in 2..=n as u64 {
        fact_n *= k as f64;
    }
    let mut fact_half = 1.0f64;
    for k in 2..=half as u64 {
        fact_half *= k as f64;
    }
    fact_n * r.tanh().powi(n as i32) / (4.0f64.powi(half as i32) * fact_half * fact_half * r.cosh())
}

fn check_coherent_closed_form() -> CheckResult {
    let mut worst = 0.0f64;
    for &alpha in &[0.5, 1.0] {
        let state = GaussianState::vacuum(1)
            .unwrap()
            .apply_displacement(&[Complex64::new(alpha, 0.0)])
            .unwrap();
        for n in 0..=8u32 {
            let p = state.fock_probability(&PhotonPattern(vec![n])).unwrap();
            worst = worst.max((p - poisson(alpha * alpha, n)).abs());
        }
    }
    CheckResult {
        name: "coherent-closed-form",
        max_deviation: worst,
        tolerance: 1e-9,
    }
}

fn check_squeezed_closed_form() -> CheckResult {
    let mut worst = 0.0f64;
    for &r in &[0.3, std::f64::consts::LN_2] {
        let state = GaussianState::vacuum(1)
            .unwrap()
            .apply_squeezing(&[r])
            .unwrap();
        for n in 0..=8u32 {
            let p = state.fock_probability(&PhotonPattern(vec![n])).unwrap();
            worst = worst.max((p - squeezed_vacuum_prob(r, n)).abs());
        }
    }
    CheckResult {
        name: "squeezed-closed-form",
        max_deviation: worst,
        tolerance: 1e-9,
    }
}

fn check_hafnian_dual_path() -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let mut worst = 0.0f64;
    for n in 1..=8usize {
        for _ in 0..5 {
            let mut a = DMatrix::<Complex64>::zeros(n, n);
            for i in 0..n {
                for j in i..n {
                    let z = Complex64::new(rng.gen_range(-1.0..1.0), 0.0);
                    a[(i, j)] = z;
                    a[(j, i)] = z;
                }
            }
            let fast = loop_hafnian(&a);
            let slow = loop_hafnian_by_enumeration(&a);
            worst = worst.max((fast - slow).norm() / slow.norm().max(1.0));
        }
    }
    CheckResult {
        name: "loop-hafnian-dual-path",
        max_deviation: worst,
        tolerance: 1e-10,
    }
}

fn random_orthogonal(m: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let a = DMatrix::<f64>::from_fn(m, m, |_, _| rng.gen_range(-1.0..1.0));
    a.qr().q()
}

pub(crate) fn random_doktorov(m: usize, rng: &mut ChaCha8Rng) -> DoktorovParameters {
    DoktorovParameters::from_parts(
        random_orthogonal(m, rng),
        DMatrix::identity(m, m),
        DVector::from_fn(m, |_, _| rng.gen_range(-0.6..0.6)),
        DVector::from_fn(m, |_, _| rng.gen_range(-1.2..1.2)),
        DVector::from_fn(m, |_, _| rng.gen_range(500.0..2000.0)),
        DVector::from_fn(m, |_, _| rng.gen_range(500.0..2000.0)),
    )
    .unwrap()
}

/// Gaussian-side output state, optionally with the squeeze convention
/// corrupted.
fn gaussian_state_for(params: &DoktorovParameters, perturbation: Perturbation) -> GaussianState {
    match perturbation {
        Perturbation::None => gaussian::prepare_doktorov_output(params).unwrap(),
        Perturbation::NegatedSqueeze => {
            let mut twisted = params.clone();
            twisted.squeeze = -twisted.squeeze;
            gaussian::prepare_doktorov_output(&twisted).unwrap()
        }
    }
}

fn check_oracle_agreement(perturbation: Perturbation) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    let mut worst = 0.0f64;
    for m in 1..=3usize {
        for _ in 0..2 {
            let params = random_doktorov(m, &mut rng);
            let state = gaussian_state_for(&params, perturbation);
            let oracle = fockoracle::OracleRun::new(&params).unwrap();
            for pattern in patterns_with_total_at_most(m, 4) {
                let fast = state.fock_probability(&pattern).unwrap();
                let slow = oracle.probability(&pattern).unwrap();
                worst = worst.max((fast - slow.probability).abs());
            }
        }
    }
    CheckResult {
        name: "fock-oracle-agreement",
        max_deviation: worst,
        tolerance: 1e-9,
    }
}

fn check_purity_preservation() -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0003);
    let mut worst = 0.0f64;
    for _ in 0..6 {
        let params = random_doktorov(3, &mut rng);
        let state = gaussian::prepare_doktorov_output(&params).unwrap();
        worst = worst.max(state.purity_deviation());
    }
    CheckResult {
        name: "purity-preservation",
        max_deviation: worst,
        tolerance: 1e-8,
    }
}

fn check_normalization() -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0004);
    let mut worst = 0.0f64;
    for m in 1..=2usize {
        let params = random_doktorov(m, &mut rng);
        let state = gaussian::prepare_doktorov_output(&params).unwrap();
        let mut total = 0.0;
        for pattern in patterns_with_total_at_most(m, 14) {
            total += state.fock_probability(&pattern).unwrap();
        }
        worst = worst.max((total - 1.0).max(0.0));
    }
    CheckResult {
        name: "normalization-bound",
        max_deviation: worst,
        tolerance: 1e-9,
    }
}
