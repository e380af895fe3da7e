//! Photon-pattern enumeration, seeded sampling, and the coarse-grained
//! energy histogram.
//!
//! The baseline strategy is enumerate-then-draw: every pattern up to a total
//! photon cutoff is evaluated exactly, the captured probability mass is
//! reported as an explicit truncation certificate, and samples are drawn
//! from the renormalized table. Sampling is chunked with one counter-based
//! RNG stream per chunk (stream = stream_offset + chunk index), so results
//! are reproducible bit for bit regardless of thread count.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::CM1_TO_EV;
use crate::error::{Error, Result};
use crate::gaussian::{GaussianState, PhotonPattern};
use crate::molparams::DoktorovParameters;

/// Entries below this probability are dropped from enumerated tables.
const PROBABILITY_FLOOR: f64 = 1e-14;

/// Thresholds for freezing a mode out of the enumeration.
const FREEZE_ALPHA_TOL: f64 = 1e-4;
const FREEZE_SQUEEZE_TOL: f64 = 1e-4;
const FREEZE_COUPLING_TOL: f64 = 1e-6;

/// Samples drawn per RNG stream.
const SAMPLES_PER_CHUNK: usize = 1024;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub seed: u64,
    pub sample_count: usize,
    pub max_total_photons: u32,
    #[serde(default = "default_min_captured_mass")]
    pub min_captured_mass: f64,
    /// Base RNG stream; chunk k draws from stream `stream_offset + k`.
    #[serde(default)]
    pub stream_offset: u64,
}

fn default_min_captured_mass() -> f64 {
    0.999
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sample_count == 0 {
            return Err(Error::input("sample_count must be at least 1"));
        }
        if !(self.min_captured_mass > 0.0 && self.min_captured_mass <= 1.0) {
            return Err(Error::input("min_captured_mass must lie in (0, 1]"));
        }
        Ok(())
    }
}

/// One enumerated outcome: pattern, its exact probability, and the
/// transition energy it maps to.
#[derive(Debug, Clone)]
pub struct VibronicEntry {
    pub pattern: PhotonPattern,
    pub probability: f64,
    pub energy_cm1: f64,
}

/// Explicit probability table over photon patterns with captured-mass
/// accounting.
#[derive(Debug, Clone)]
pub struct VibronicDistribution {
    pub entries: Vec<VibronicEntry>,
    /// Total probability covered by the table (≤ 1).
    pub captured_mass: f64,
    /// Upper bound on probability mass involving photons in frozen modes.
    pub frozen_mass_bound: f64,
}

/// One drawn sample.
#[derive(Debug, Clone)]
pub struct VibronicSample {
    pub pattern: PhotonPattern,
    pub energy_cm1: f64,
}

/// Energy of a vibronic transition in cm⁻¹: Σ m_k·ω'_k − Σ n_k·ω_k.
///
/// Nonzero terms are summed in sorted order so the result is independent of
/// mode ordering.
pub fn transition_energy(
    pattern_initial: &PhotonPattern,
    pattern_final: &PhotonPattern,
    omega_initial_cm1: &[f64],
    omega_final_cm1: &[f64],
) -> f64 {
    assert_eq!(pattern_initial.mode_count(), omega_initial_cm1.len());
    assert_eq!(pattern_final.mode_count(), omega_final_cm1.len());
    let mut terms: Vec<f64> = Vec::new();
    for (k, &m) in pattern_final.0.iter().enumerate() {
        if m != 0 {
            terms.push(m as f64 * omega_final_cm1[k]);
        }
    }
    for (k, &n) in pattern_initial.0.iter().enumerate() {
        if n != 0 {
            terms.push(-(n as f64 * omega_initial_cm1[k]));
        }
    }
    terms.sort_by(|a, b| a.total_cmp(b));
    terms.iter().sum()
}

/// All photon patterns over `modes` modes with total ≤ `max_total`, in
/// lexicographic order.
pub fn patterns_with_total_at_most(modes: usize, max_total: u32) -> Vec<PhotonPattern> {
    let mut out = Vec::new();
    let mut current = vec![0u32; modes];
    fill_patterns(&mut out, &mut current, 0, max_total);
    out
}

fn fill_patterns(
    out: &mut Vec<PhotonPattern>,
    current: &mut Vec<u32>,
    mode: usize,
    budget: u32,
) {
    if mode == current.len() {
        out.push(PhotonPattern(current.clone()));
        return;
    }
    for n in 0..=budget {
        current[mode] = n;
        fill_patterns(out, current, mode + 1, budget - n);
    }
    current[mode] = 0;
}

/// Modes that must participate in the enumeration, plus a bound on the
/// probability mass the frozen modes would have carried.
fn active_modes(params: &DoktorovParameters) -> (Vec<usize>, f64) {
    let m = params.mode_count();
    let mut active = Vec::new();
    let mut frozen = Vec::new();
    for j in 0..m {
        let mut coupling_sq = 0.0;
        for k in 0..m {
            if k != j {
                coupling_sq += params.u_left[(j, k)] * params.u_left[(j, k)]
                    + params.u_left[(k, j)] * params.u_left[(k, j)];
            }
        }
        let frozen_ok = params.alpha[j].abs() < FREEZE_ALPHA_TOL
            && params.squeeze[j].abs() < FREEZE_SQUEEZE_TOL
            && coupling_sq.sqrt() < FREEZE_COUPLING_TOL;
        if frozen_ok {
            frozen.push(j);
        } else {
            active.push(j);
        }
    }
    // Markov bound: P(any photon in mode j) ≤ ⟨n_j⟩ of the output state.
    let mut bound = 0.0;
    for &j in &frozen {
        let mut mean_nj = params.alpha[j] * params.alpha[j];
        for k in 0..m {
            mean_nj += params.u_left[(j, k)].powi(2) * params.squeeze[k].sinh().powi(2);
        }
        bound += mean_nj;
    }
    (active, bound)
}

/// Enumerates every pattern with total photons ≤ `config.max_total_photons`
/// on the active modes, evaluating exact probabilities on the (marginal)
/// state. Fails when the captured mass falls short of the configured floor.
pub fn enumerate_distribution(
    state: &GaussianState,
    params: &DoktorovParameters,
    config: &SamplerConfig,
) -> Result<VibronicDistribution> {
    config.validate()?;
    let m = params.mode_count();
    if state.mode_count() != m {
        return Err(Error::input("state and parameters disagree on mode count"));
    }
    let omega_final: Vec<f64> = params.omega_final_cm1.iter().copied().collect();
    let omega_initial: Vec<f64> = params.omega_initial_cm1.iter().copied().collect();
    let (active, frozen_mass_bound) = active_modes(params);

    let mut entries: Vec<VibronicEntry> = if active.is_empty() {
        // Everything frozen: the table is the single all-zeros pattern with
        // its exact vacuum probability.
        let pattern = PhotonPattern::zeros(m);
        let probability = state.fock_probability(&pattern)?;
        let energy = transition_energy(
            &PhotonPattern::zeros(m),
            &pattern,
            &omega_initial,
            &omega_final,
        );
        vec![VibronicEntry {
            pattern,
            probability,
            energy_cm1: energy,
        }]
    } else {
        let reduced = if active.len() == m {
            state.clone()
        } else {
            state.marginal(&active)?
        };
        let reduced_patterns =
            patterns_with_total_at_most(active.len(), config.max_total_photons);
        let probabilities: Vec<Result<f64>> = reduced_patterns
            .par_iter()
            .map(|pat| reduced.fock_probability(pat))
            .collect();
        let mut entries = Vec::with_capacity(reduced_patterns.len());
        for (pat, prob) in reduced_patterns.into_iter().zip(probabilities) {
            let probability = prob?;
            if probability < PROBABILITY_FLOOR {
                continue;
            }
            let mut counts = vec![0u32; m];
            for (slot, &mode) in active.iter().enumerate() {
                counts[mode] = pat.0[slot];
            }
            let pattern = PhotonPattern(counts);
            let energy = transition_energy(
                &PhotonPattern::zeros(m),
                &pattern,
                &omega_initial,
                &omega_final,
            );
            entries.push(VibronicEntry {
                pattern,
                probability,
                energy_cm1: energy,
            });
        }
        entries
    };

    // Sort by (energy, probability): deterministic and stable under mode
    // permutations, since ties in both fields cannot change drawn energies.
    entries.sort_by(|a, b| {
        a.energy_cm1
            .total_cmp(&b.energy_cm1)
            .then(a.probability.total_cmp(&b.probability))
    });

    let captured_mass: f64 = entries.iter().map(|e| e.probability).sum();
    if captured_mass < config.min_captured_mass {
        return Err(Error::CutoffTooSmall {
            achieved: captured_mass,
            required: config.min_captured_mass,
        });
    }
    Ok(VibronicDistribution {
        entries,
        captured_mass,
        frozen_mass_bound,
    })
}

/// Draws `config.sample_count` categorical samples from the table,
/// renormalized by the captured mass. Deterministic in (seed, stream_offset,
/// sample_count) and independent of thread count.
pub fn draw_samples(
    dist: &VibronicDistribution,
    config: &SamplerConfig,
) -> Result<Vec<VibronicSample>> {
    config.validate()?;
    if dist.entries.is_empty() {
        return Err(Error::input("cannot sample from an empty distribution"));
    }
    let mut cumulative = Vec::with_capacity(dist.entries.len());
    let mut acc = 0.0f64;
    for e in &dist.entries {
        acc += e.probability;
        cumulative.push(acc);
    }
    let total_mass = acc;

    let n = config.sample_count;
    let chunks = n.div_ceil(SAMPLES_PER_CHUNK);
    let samples: Vec<VibronicSample> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(config.stream_offset + chunk as u64);
            let start = chunk * SAMPLES_PER_CHUNK;
            let count = SAMPLES_PER_CHUNK.min(n - start);
            let mut out = Vec::with_capacity(count);
            for _ in 0..count {
                let u: f64 = rng.gen::<f64>() * total_mass;
                let idx = cumulative.partition_point(|&c| c <= u);
                let idx = idx.min(dist.entries.len() - 1);
                let entry = &dist.entries[idx];
                out.push(VibronicSample {
                    pattern: entry.pattern.clone(),
                    energy_cm1: entry.energy_cm1,
                });
            }
            out
        })
        .flatten()
        .collect();
    Ok(samples)
}

/// Bin geometry shared by the histogram and the transport integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramGeometry {
    pub eps_min_ev: f64,
    pub eps_max_ev: f64,
    pub bin_count: usize,
}

impl HistogramGeometry {
    pub fn new(eps_min_ev: f64, eps_max_ev: f64, bin_count: usize) -> Result<Self> {
        if !(eps_max_ev > eps_min_ev) {
            return Err(Error::input("eps_max must exceed eps_min"));
        }
        if bin_count == 0 {
            return Err(Error::input("bin_count must be at least 1"));
        }
        Ok(Self {
            eps_min_ev,
            eps_max_ev,
            bin_count,
        })
    }

    /// Full bin width (the 2Δ of the coarse-graining).
    pub fn bin_width_ev(&self) -> f64 {
        (self.eps_max_ev - self.eps_min_ev) / self.bin_count as f64
    }

    pub fn bin_center_ev(&self, i: usize) -> f64 {
        self.eps_min_ev + (i as f64 + 0.5) * self.bin_width_ev()
    }

    pub fn bin_edges_ev(&self, i: usize) -> (f64, f64) {
        let w = self.bin_width_ev();
        (
            self.eps_min_ev + i as f64 * w,
            self.eps_min_ev + (i + 1) as f64 * w,
        )
    }

    /// Bin membership: half-open bins [lo, hi), final bin closed.
    pub fn bin_index(&self, energy_ev: f64) -> Option<usize> {
        if energy_ev < self.eps_min_ev || energy_ev > self.eps_max_ev {
            return None;
        }
        if energy_ev == self.eps_max_ev {
            return Some(self.bin_count - 1);
        }
        let idx = ((energy_ev - self.eps_min_ev) / self.bin_width_ev()) as usize;
        Some(idx.min(self.bin_count - 1))
    }
}

/// Coarse-grained sample counts over an energy window.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnergyHistogram {
    pub geometry: HistogramGeometry,
    pub counts: Vec<u64>,
    pub total_samples: u64,
    pub out_of_range: u64,
}

/// Bins sample energies (converted from cm⁻¹ to eV) into the window.
/// Out-of-range samples are counted separately; they stay part of the
/// denominator.
pub fn bin_energies(
    samples: &[VibronicSample],
    eps_min_ev: f64,
    eps_max_ev: f64,
    bin_count: usize,
) -> Result<EnergyHistogram> {
    let geometry = HistogramGeometry::new(eps_min_ev, eps_max_ev, bin_count)?;
    let mut counts = vec![0u64; bin_count];
    let mut out_of_range = 0u64;
    for s in samples {
        match geometry.bin_index(s.energy_cm1 * CM1_TO_EV) {
            Some(i) => counts[i] += 1,
            None => out_of_range += 1,
        }
    }
    Ok(EnergyHistogram {
        geometry,
        counts,
        total_samples: samples.len() as u64,
        out_of_range,
    })
}

/// Per-bin probability estimate q(i) = N_i / N.
pub fn q_estimate(hist: &EnergyHistogram) -> Result<Vec<f64>> {
    if hist.total_samples == 0 {
        return Err(Error::input("histogram holds no samples"));
    }
    let n = hist.total_samples as f64;
    Ok(hist.counts.iter().map(|&c| c as f64 / n).collect())
}

/// Piecewise-constant reconstruction of the spectral density from q.
#[derive(Debug, Clone)]
pub struct DosReconstruction {
    /// (bin center, height = q/(2Δ)) pairs.
    pub levels: Vec<(f64, f64)>,
    pub bin_width_ev: f64,
}

impl DosReconstruction {
    /// Integral of the step function; equals Σ q(i).
    pub fn integral(&self) -> f64 {
        self.levels.iter().map(|(_, h)| h * self.bin_width_ev).sum()
    }
}

pub fn dos_reconstruct(q: &[f64], eps_min_ev: f64, eps_max_ev: f64) -> Result<DosReconstruction> {
    let geometry = HistogramGeometry::new(eps_min_ev, eps_max_ev, q.len())?;
    let w = geometry.bin_width_ev();
    let levels = q
        .iter()
        .enumerate()
        .map(|(i, &qi)| (geometry.bin_center_ev(i), qi / w))
        .collect();
    Ok(DosReconstruction {
        levels,
        bin_width_ev: w,
    })
}
