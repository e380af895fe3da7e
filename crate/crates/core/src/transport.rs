//! Fermi-averaged electron transfer rates, steady-state currents, and
//! conductance maps built on a coarse-grained transition-energy spectrum.
//!
//! Voltages are plain volts, energies eV, rates s⁻¹, currents A. The bias
//! splits across the junction as μ_source = +η·V_b, μ_drain = −(1−η)·V_b;
//! a gate voltage shifts every transition energy by −λ_g·(V_g + offset).

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::constants::{BOLTZMANN_EV_PER_K, ELEMENTARY_CHARGE_C, HBAR_EV_S};
use crate::error::{Error, Result};
use crate::sampler::HistogramGeometry;

/// Couplings, temperature, and the voltage-to-energy conventions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransportConfig {
    pub gamma_source_ev: f64,
    pub gamma_drain_ev: f64,
    pub temperature_k: f64,
    /// Fraction η of the bias assigned to the source side.
    #[serde(default = "default_bias_fraction")]
    pub bias_fraction: f64,
    /// Gate lever arm λ_g.
    #[serde(default = "default_gate_lever")]
    pub gate_lever: f64,
    /// Shift added to the gate voltage before the lever arm, in mV.
    #[serde(default)]
    pub gate_offset_mv: f64,
}

fn default_bias_fraction() -> f64 {
    0.5
}

fn default_gate_lever() -> f64 {
    1.0
}

impl TransportConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_source_ev > 0.0) || !(self.gamma_drain_ev > 0.0) {
            return Err(Error::input("electrode couplings must be positive"));
        }
        if !(self.temperature_k >= 0.0) {
            return Err(Error::input("temperature must be nonnegative"));
        }
        if !(0.0..=1.0).contains(&self.bias_fraction) {
            return Err(Error::input("bias_fraction must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn mu_source_ev(&self, v_bias: f64) -> f64 {
        self.bias_fraction * v_bias
    }

    pub fn mu_drain_ev(&self, v_bias: f64) -> f64 {
        -(1.0 - self.bias_fraction) * v_bias
    }

    /// Energy shift applied to every transition energy for a gate voltage.
    pub fn gate_shift_ev(&self, v_gate: f64) -> f64 {
        -self.gate_lever * (v_gate + self.gate_offset_mv * 1e-3)
    }
}

/// The four sequential-tunneling rates of the junction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateSet {
    pub k_red_source: f64,
    pub k_ox_source: f64,
    pub k_red_drain: f64,
    pub k_ox_drain: f64,
}

impl RateSet {
    pub fn total(&self) -> f64 {
        self.k_red_source + self.k_ox_source + self.k_red_drain + self.k_ox_drain
    }
}

/// Steady-state current with a flag for the all-rates-zero degenerate case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Current {
    pub amps: f64,
    pub degenerate: bool,
}

/// Electrode occupation at energy `eps_ev` for chemical potential `mu_ev`.
/// At T = 0 this is a step function with f(μ; μ) = 1/2.
pub fn fermi(eps_ev: f64, mu_ev: f64, temperature_k: f64) -> f64 {
    debug_assert!(temperature_k >= 0.0);
    if temperature_k == 0.0 {
        return match eps_ev.partial_cmp(&mu_ev) {
            Some(std::cmp::Ordering::Less) => 1.0,
            Some(std::cmp::Ordering::Greater) => 0.0,
            _ => 0.5,
        };
    }
    let x = (eps_ev - mu_ev) / (BOLTZMANN_EV_PER_K * temperature_k);
    1.0 / (1.0 + x.exp())
}

/// Average of the occupation over one energy bin, (1/2Δ)·∫ f dε.
pub fn fermi_average(
    bin: usize,
    geometry: &HistogramGeometry,
    mu_ev: f64,
    temperature_k: f64,
) -> f64 {
    let (lo, hi) = geometry.bin_edges_ev(bin);
    fermi_average_over(lo, hi, mu_ev, temperature_k)
}

/// Same average over an explicit interval.
pub fn fermi_average_over(lo: f64, hi: f64, mu_ev: f64, temperature_k: f64) -> f64 {
    debug_assert!(hi > lo);
    if temperature_k == 0.0 {
        // step function: the filled fraction of the bin
        return ((mu_ev - lo) / (hi - lo)).clamp(0.0, 1.0);
    }
    let f = |e: f64| fermi(e, mu_ev, temperature_k);
    let integral = adaptive_simpson(&f, lo, hi, 1e-10);
    integral / (hi - lo)
}

/// Adaptive Simpson quadrature with absolute tolerance `tol`.
fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let c = 0.5 * (a + b);
    let fa = f(a);
    let fb = f(b);
    let fc = f(c);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fc + fb);
    simpson_step(f, a, b, fa, fb, fc, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fb: f64,
    fc: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let c = 0.5 * (a + b);
    let lm = 0.5 * (a + c);
    let rm = 0.5 * (c + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (c - a) / 6.0 * (fa + 4.0 * flm + fc);
    let right = (b - c) / 6.0 * (fc + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_step(f, a, c, fa, fc, flm, left, tol / 2.0, depth - 1)
            + simpson_step(f, c, b, fc, fb, frm, right, tol / 2.0, depth - 1)
    }
}

/// Memo for bin-averaged occupations. The integrand depends only on the
/// distance to the chemical potential, so keys are translation-reduced.
#[derive(Debug, Default)]
pub struct FermiCache {
    map: HashMap<(u64, u64, u64), f64>,
}

impl FermiCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn average_over(&mut self, lo: f64, hi: f64, mu_ev: f64, temperature_k: f64) -> f64 {
        let key = (
            (lo - mu_ev).to_bits(),
            (hi - mu_ev).to_bits(),
            temperature_k.to_bits(),
        );
        if let Some(&v) = self.map.get(&key) {
            return v;
        }
        let v = fermi_average_over(lo - mu_ev, hi - mu_ev, 0.0, temperature_k);
        self.map.insert(key, v);
        v
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

const RATE_PREFACTOR: f64 = 2.0 * std::f64::consts::PI / HBAR_EV_S;

#[allow(clippy::too_many_arguments)]
fn weighted_rate(
    q: &[f64],
    geometry: &HistogramGeometry,
    gamma_ev: f64,
    mu_ev: f64,
    shift_ev: f64,
    temperature_k: f64,
    use_hole: bool,
    cache: &mut FermiCache,
) -> f64 {
    debug_assert_eq!(q.len(), geometry.bin_count);
    let mut acc = 0.0;
    for (i, &qi) in q.iter().enumerate() {
        if qi == 0.0 {
            continue;
        }
        let (lo, hi) = geometry.bin_edges_ev(i);
        let favg = cache.average_over(lo + shift_ev, hi + shift_ev, mu_ev, temperature_k);
        let weight = if use_hole { 1.0 - favg } else { favg };
        acc += weight * qi;
    }
    RATE_PREFACTOR * gamma_ev * acc
}

/// Electron transfer rate from the source electrode into the molecule.
pub fn rate_source(
    q_red: &[f64],
    geometry: &HistogramGeometry,
    v_bias: f64,
    v_gate: f64,
    cfg: &TransportConfig,
) -> f64 {
    let mut cache = FermiCache::new();
    weighted_rate(
        q_red,
        geometry,
        cfg.gamma_source_ev,
        cfg.mu_source_ev(v_bias),
        cfg.gate_shift_ev(v_gate),
        cfg.temperature_k,
        false,
        &mut cache,
    )
}

/// Electron transfer rate from the molecule into the drain electrode.
pub fn rate_drain(
    q_ox: &[f64],
    geometry: &HistogramGeometry,
    v_bias: f64,
    v_gate: f64,
    cfg: &TransportConfig,
) -> f64 {
    let mut cache = FermiCache::new();
    weighted_rate(
        q_ox,
        geometry,
        cfg.gamma_drain_ev,
        cfg.mu_drain_ev(v_bias),
        cfg.gate_shift_ev(v_gate),
        cfg.temperature_k,
        true,
        &mut cache,
    )
}

/// All four rates at one operating point.
pub fn full_rate_set(
    q_red: &[f64],
    q_ox: &[f64],
    geometry: &HistogramGeometry,
    v_bias: f64,
    v_gate: f64,
    cfg: &TransportConfig,
) -> RateSet {
    let mut cache = FermiCache::new();
    full_rate_set_cached(q_red, q_ox, geometry, v_bias, v_gate, cfg, &mut cache)
}

fn full_rate_set_cached(
    q_red: &[f64],
    q_ox: &[f64],
    geometry: &HistogramGeometry,
    v_bias: f64,
    v_gate: f64,
    cfg: &TransportConfig,
    cache: &mut FermiCache,
) -> RateSet {
    let shift = cfg.gate_shift_ev(v_gate);
    let t = cfg.temperature_k;
    let mu_s = cfg.mu_source_ev(v_bias);
    let mu_d = cfg.mu_drain_ev(v_bias);
    RateSet {
        k_red_source: weighted_rate(
            q_red, geometry, cfg.gamma_source_ev, mu_s, shift, t, false, cache,
        ),
        k_ox_source: weighted_rate(
            q_ox, geometry, cfg.gamma_source_ev, mu_s, shift, t, true, cache,
        ),
        k_red_drain: weighted_rate(
            q_red, geometry, cfg.gamma_drain_ev, mu_d, shift, t, false, cache,
        ),
        k_ox_drain: weighted_rate(
            q_ox, geometry, cfg.gamma_drain_ev, mu_d, shift, t, true, cache,
        ),
    }
}

/// Two-rate current e·k_S·k_D/(k_S + k_D); zero when both rates vanish.
pub fn current_simple(k_source: f64, k_drain: f64) -> f64 {
    debug_assert!(k_source >= 0.0 && k_drain >= 0.0);
    let denom = k_source + k_drain;
    if denom == 0.0 {
        return 0.0;
    }
    // grouped like the four-rate expression so the two agree bitwise when
    // the cross rates vanish
    ELEMENTARY_CHARGE_C * (k_source * k_drain) / denom
}

/// Four-rate steady-state current; flags the all-zero-rates case.
pub fn current_full(rates: &RateSet) -> Current {
    let denom = rates.total();
    if denom == 0.0 {
        return Current {
            amps: 0.0,
            degenerate: true,
        };
    }
    let numer = rates.k_red_source * rates.k_ox_drain - rates.k_ox_source * rates.k_red_drain;
    Current {
        amps: ELEMENTARY_CHARGE_C * numer / denom,
        degenerate: false,
    }
}

/// Steady-state occupation probabilities (P_ox, P_red) of the two charge
/// states.
pub fn steady_state(rates: &RateSet) -> Result<(f64, f64)> {
    let denom = rates.total();
    if denom == 0.0 {
        return Err(Error::numerical(
            "occupations are undefined when every rate vanishes",
        ));
    }
    let p_ox = (rates.k_ox_source + rates.k_ox_drain) / denom;
    Ok((p_ox, 1.0 - p_ox))
}

/// One bias point of an I–V sweep.
#[derive(Debug, Clone, Copy)]
pub struct IvPoint {
    pub v_bias: f64,
    pub rates: RateSet,
    pub current: Current,
}

/// Currents and rates over a monotone bias grid at a fixed gate voltage.
pub fn iv_points(
    q_red: &[f64],
    q_ox: &[f64],
    geometry: &HistogramGeometry,
    bias_grid: &[f64],
    v_gate: f64,
    cfg: &TransportConfig,
) -> Result<Vec<IvPoint>> {
    cfg.validate()?;
    if q_red.len() != geometry.bin_count || q_ox.len() != geometry.bin_count {
        return Err(Error::input("q vectors must match the histogram bin count"));
    }
    check_monotone(bias_grid)?;
    let mut cache = FermiCache::new();
    Ok(bias_grid
        .iter()
        .map(|&v_bias| {
            let rates =
                full_rate_set_cached(q_red, q_ox, geometry, v_bias, v_gate, cfg, &mut cache);
            IvPoint {
                v_bias,
                rates,
                current: current_full(&rates),
            }
        })
        .collect())
}

/// Current–voltage curve: (V_b, I) pairs.
pub fn iv_curve(
    q_red: &[f64],
    q_ox: &[f64],
    geometry: &HistogramGeometry,
    bias_grid: &[f64],
    v_gate: f64,
    cfg: &TransportConfig,
) -> Result<Vec<(f64, f64)>> {
    Ok(iv_points(q_red, q_ox, geometry, bias_grid, v_gate, cfg)?
        .into_iter()
        .map(|p| (p.v_bias, p.current.amps))
        .collect())
}

/// dI/dV over a (gate × bias) grid, differentiated along the bias axis.
#[derive(Debug, Clone)]
pub struct ConductanceMap {
    pub gate_grid: Vec<f64>,
    pub bias_grid: Vec<f64>,
    /// One row per gate voltage, one column per bias point, in Siemens.
    pub didv: Vec<Vec<f64>>,
}

/// Central finite differences on the bias axis, one-sided at the ends.
pub fn conductance_map(
    q_red: &[f64],
    q_ox: &[f64],
    geometry: &HistogramGeometry,
    bias_grid: &[f64],
    gate_grid: &[f64],
    cfg: &TransportConfig,
) -> Result<ConductanceMap> {
    if bias_grid.len() < 3 {
        return Err(Error::input(
            "conductance needs at least 3 bias points for finite differences",
        ));
    }
    if gate_grid.is_empty() {
        return Err(Error::input("gate grid must hold at least one point"));
    }
    check_monotone(gate_grid)?;
    let mut didv = Vec::with_capacity(gate_grid.len());
    for &v_gate in gate_grid {
        let currents: Vec<f64> = iv_curve(q_red, q_ox, geometry, bias_grid, v_gate, cfg)?
            .into_iter()
            .map(|(_, i)| i)
            .collect();
        didv.push(differentiate(bias_grid, &currents));
    }
    Ok(ConductanceMap {
        gate_grid: gate_grid.to_vec(),
        bias_grid: bias_grid.to_vec(),
        didv,
    })
}

fn differentiate(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut out = vec![0.0; n];
    out[0] = (y[1] - y[0]) / (x[1] - x[0]);
    out[n - 1] = (y[n - 1] - y[n - 2]) / (x[n - 1] - x[n - 2]);
    for i in 1..n - 1 {
        out[i] = (y[i + 1] - y[i - 1]) / (x[i + 1] - x[i - 1]);
    }
    out
}

fn check_monotone(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::input("voltage grid is empty"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::input("voltage grid must be strictly increasing"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn geometry(lo: f64, hi: f64, bins: usize) -> HistogramGeometry {
        HistogramGeometry::new(lo, hi, bins).unwrap()
    }

    fn cfg(temperature_k: f64) -> TransportConfig {
        TransportConfig {
            gamma_source_ev: 1e-6,
            gamma_drain_ev: 1e-6,
            temperature_k,
            bias_fraction: 0.5,
            gate_lever: 1.0,
            gate_offset_mv: 0.0,
        }
    }

    #[test]
    fn fermi_reference_points() {
        assert!((fermi(0.3, 0.3, 300.0) - 0.5).abs() < 1e-15);
        assert_eq!(fermi(-0.1, 0.0, 0.0), 1.0);
        assert_eq!(fermi(0.1, 0.0, 0.0), 0.0);
        assert_eq!(fermi(0.0, 0.0, 0.0), 0.5);
        let kt = BOLTZMANN_EV_PER_K * 250.0;
        let f = fermi(kt * 3.0f64.ln(), 0.0, 250.0);
        assert!((f - 0.25).abs() < 1e-13);
    }

    #[test]
    fn fermi_monotone_and_bounded() {
        let mut prev = 1.0;
        for i in 0..200 {
            let eps = -1.0 + i as f64 * 0.01;
            let f = fermi(eps, 0.0, 77.0);
            assert!((0.0..=1.0).contains(&f));
            assert!(f <= prev + 1e-15);
            prev = f;
        }
    }

    #[test]
    fn fermi_average_step_cases() {
        let g = geometry(0.0, 1.0, 10);
        // bin [0, 0.1) far below mu at T = 0
        assert_eq!(fermi_average(0, &g, 0.5, 0.0), 1.0);
        // mu at 30% through bin 0
        assert!((fermi_average(0, &g, 0.03, 0.0) - 0.3).abs() < 1e-14);
        // bin centered on mu: average 0.5 at any temperature
        let centered = fermi_average(4, &g, 0.45, 200.0);
        assert!((centered - 0.5).abs() < 1e-11, "{centered}");
        assert!((fermi_average(4, &g, 0.45, 0.0) - 0.5).abs() < 1e-14);
    }

    fn softplus(y: f64) -> f64 {
        y.max(0.0) + (-y.abs()).exp().ln_1p()
    }

    #[test]
    fn fermi_average_matches_antiderivative() {
        // closed form: ∫ f = kT·[softplus(−(lo−μ)/kT) − softplus(−(hi−μ)/kT)]
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        for _ in 0..50 {
            let lo = rng.gen_range(-0.5..0.4);
            let hi = lo + rng.gen_range(0.001..0.3);
            let mu = rng.gen_range(-0.5..0.5);
            let t = rng.gen_range(1.0..400.0);
            let kt = BOLTZMANN_EV_PER_K * t;
            let exact = kt * (softplus(-(lo - mu) / kt) - softplus(-(hi - mu) / kt)) / (hi - lo);
            let got = fermi_average_over(lo, hi, mu, t);
            assert!(
                (got - exact).abs() < 1e-9,
                "lo={lo} hi={hi} mu={mu} t={t}: got {got} exact {exact}"
            );
        }
    }

    #[test]
    fn fermi_cache_matches_direct_evaluation() {
        let mut cache = FermiCache::new();
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        for _ in 0..30 {
            let lo = rng.gen_range(-0.3..0.3);
            let hi = lo + rng.gen_range(0.001..0.2);
            let mu = rng.gen_range(-0.3..0.3);
            let t = rng.gen_range(0.5..350.0);
            let direct = fermi_average_over(lo, hi, mu, t);
            let cached = cache.average_over(lo, hi, mu, t);
            let again = cache.average_over(lo, hi, mu, t);
            assert!((cached - direct).abs() < 1e-14);
            assert_eq!(cached.to_bits(), again.to_bits());
        }
        assert!(!cache.is_empty());
    }

    #[test]
    fn rate_source_unit_conversion() {
        // one bin fully below the source potential, q = 1, Γ = 1e-6 eV
        let g = geometry(-1.0, -0.5, 1);
        let rate = rate_source(&[1.0], &g, 0.0, 0.0, &cfg(0.0));
        let expect = 2.0 * std::f64::consts::PI * 1e-6 / HBAR_EV_S;
        assert!((rate - expect).abs() / expect < 1e-14);
        assert!((rate - 9.546e9).abs() < 1e7, "rate {rate}");
    }

    #[test]
    fn rate_source_zero_in_blockade_and_linear_in_gamma() {
        // bin far above the potential window at T = 0
        let g = geometry(0.5, 1.0, 1);
        assert_eq!(rate_source(&[1.0], &g, 0.0, 0.0, &cfg(0.0)), 0.0);

        let g2 = geometry(-1.0, -0.5, 1);
        let mut c1 = cfg(0.0);
        let r1 = rate_source(&[1.0], &g2, 0.0, 0.0, &c1);
        c1.gamma_source_ev *= 2.0;
        let r2 = rate_source(&[1.0], &g2, 0.0, 0.0, &c1);
        assert!((r2 - 2.0 * r1).abs() / r2 < 1e-14);
    }

    #[test]
    fn rate_drain_pauli_blocked_and_open() {
        // bin far below the drain potential: occupied lead, no room to enter
        let g = geometry(-1.0, -0.5, 1);
        assert_eq!(rate_drain(&[1.0], &g, 0.0, 0.0, &cfg(0.0)), 0.0);
        // bin far above: completely open
        let g2 = geometry(0.5, 1.0, 1);
        let rate = rate_drain(&[1.0], &g2, 0.0, 0.0, &cfg(0.0));
        let expect = 2.0 * std::f64::consts::PI * 1e-6 / HBAR_EV_S;
        assert!((rate - expect).abs() / expect < 1e-14);
    }

    #[test]
    fn drain_mirrors_source_under_spectrum_reflection() {
        // With η = 1/2 and q_ox the energy-mirror of q_red, hole emission at
        // the drain equals electron capture at the source at the same bias:
        // 1 − f̄([a,b]; μ_D(V)) = f̄([−b,−a]; μ_S(V)).
        let bins = 8;
        let g = geometry(-0.4, 0.4, bins);
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        let q_red: Vec<f64> = (0..bins).map(|_| rng.gen_range(0.0..0.3)).collect();
        let q_ox: Vec<f64> = (0..bins).rev().map(|i| q_red[i]).collect();
        let c = cfg(120.0);
        for &v in &[-0.3, -0.1, 0.0, 0.05, 0.2, 0.35] {
            let kd = rate_drain(&q_ox, &g, v, 0.0, &c);
            let ks = rate_source(&q_red, &g, v, 0.0, &c);
            assert!(
                (kd - ks).abs() / ks.max(1e-30) < 1e-9,
                "v={v}: kd={kd} ks={ks}"
            );
        }
    }

    #[test]
    fn rates_monotone_in_bias() {
        let bins = 6;
        let g = geometry(-0.2, 0.4, bins);
        let q = vec![1.0 / bins as f64; bins];
        let c = cfg(80.0);
        let mut prev_red = 0.0f64;
        let mut prev_ox = f64::INFINITY;
        for i in 0..40 {
            let v = -0.4 + i as f64 * 0.02;
            let rs = full_rate_set(&q, &q, &g, v, 0.0, &c);
            assert!(rs.k_red_source >= prev_red - 1e-6 * prev_red.abs());
            assert!(rs.k_ox_source <= prev_ox + 1e-6 * prev_ox.abs());
            prev_red = rs.k_red_source;
            prev_ox = rs.k_ox_source;
        }
    }

    #[test]
    fn zero_bias_symmetric_rates() {
        let g = geometry(-0.2, 0.3, 5);
        let q = vec![0.2; 5];
        let mut c = cfg(150.0);
        c.gamma_drain_ev = 3e-6;
        let rs = full_rate_set(&q, &q, &g, 0.0, 0.0, &c);
        // equal chemical potentials: reduction rates differ only by Γ
        let ratio = rs.k_red_source / rs.k_red_drain;
        assert!((ratio - c.gamma_source_ev / c.gamma_drain_ev).abs() < 1e-12);
    }

    #[test]
    fn current_simple_hand_values() {
        let i = current_simple(1e9, 1e9);
        assert!((i - ELEMENTARY_CHARGE_C * 5e8).abs() / i < 1e-14);
        assert!((i - 8.011e-11).abs() < 1e-13);
        assert_eq!(current_simple(0.0, 1e9), 0.0);
        assert_eq!(current_simple(0.0, 0.0), 0.0);
        // saturation toward e·k_S as the drain opens up
        let ks = 2.5e8;
        let i_sat = current_simple(ks, 1e6 * ks);
        assert!((i_sat - ELEMENTARY_CHARGE_C * ks).abs() / (ELEMENTARY_CHARGE_C * ks) < 2e-6);
    }

    #[test]
    fn current_full_reduces_to_simple_without_cross_rates() {
        let rates = RateSet {
            k_red_source: 3.3e8,
            k_ox_source: 0.0,
            k_red_drain: 0.0,
            k_ox_drain: 1.7e9,
        };
        let full = current_full(&rates);
        let simple = current_simple(rates.k_red_source, rates.k_ox_drain);
        assert_eq!(full.amps.to_bits(), simple.to_bits());
        assert!(!full.degenerate);
    }

    #[test]
    fn current_full_cancellation_and_degenerate_flag() {
        let rates = RateSet {
            k_red_source: 5e8,
            k_ox_source: 5e8,
            k_red_drain: 5e8,
            k_ox_drain: 5e8,
        };
        assert_eq!(current_full(&rates).amps, 0.0);
        let zero = RateSet {
            k_red_source: 0.0,
            k_ox_source: 0.0,
            k_red_drain: 0.0,
            k_ox_drain: 0.0,
        };
        let c = current_full(&zero);
        assert_eq!(c.amps, 0.0);
        assert!(c.degenerate);
    }

    #[test]
    fn current_full_bound_on_random_rate_sets() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        for _ in 0..500 {
            let r = RateSet {
                k_red_source: rng.gen_range(0.0..1.0),
                k_ox_source: rng.gen_range(0.0..1.0),
                k_red_drain: rng.gen_range(0.0..1.0),
                k_ox_drain: rng.gen_range(0.0..1.0),
            };
            let i = current_full(&r).amps.abs();
            let bound = ELEMENTARY_CHARGE_C
                * (r.k_red_source + r.k_red_drain).min(r.k_ox_source + r.k_ox_drain);
            assert!(i <= bound + 1e-30);
        }
    }

    #[test]
    fn steady_state_closed_forms() {
        let equal = RateSet {
            k_red_source: 2.0,
            k_ox_source: 2.0,
            k_red_drain: 2.0,
            k_ox_drain: 2.0,
        };
        let (p_ox, p_red) = steady_state(&equal).unwrap();
        assert!((p_ox - 0.5).abs() < 1e-15);
        assert!((p_red - 0.5).abs() < 1e-15);

        let no_reduction = RateSet {
            k_red_source: 0.0,
            k_red_drain: 0.0,
            k_ox_source: 1.3,
            k_ox_drain: 0.4,
        };
        let (p_ox, _) = steady_state(&no_reduction).unwrap();
        assert_eq!(p_ox, 1.0);

        let zero = RateSet {
            k_red_source: 0.0,
            k_ox_source: 0.0,
            k_red_drain: 0.0,
            k_ox_drain: 0.0,
        };
        assert!(steady_state(&zero).is_err());
    }

    /// Explicit RK4 integration of the two-state occupation balance.
    fn occupations_by_integration(rates: &RateSet) -> (f64, f64) {
        let loss = rates.k_red_source + rates.k_red_drain;
        let gain = rates.k_ox_source + rates.k_ox_drain;
        let total = loss + gain;
        let deriv = |p: f64| -loss * p + gain * (1.0 - p);
        let mut p = 0.5;
        let t_end = 60.0 / total;
        let steps = 4000;
        let h = t_end / steps as f64;
        for _ in 0..steps {
            let k1 = deriv(p);
            let k2 = deriv(p + 0.5 * h * k1);
            let k3 = deriv(p + 0.5 * h * k2);
            let k4 = deriv(p + h * k3);
            p += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        (p, 1.0 - p)
    }

    #[test]
    fn steady_state_matches_ode_and_current_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(54);
        for _ in 0..200 {
            let r = RateSet {
                k_red_source: rng.gen_range(0.01..1.0),
                k_ox_source: rng.gen_range(0.01..1.0),
                k_red_drain: rng.gen_range(0.01..1.0),
                k_ox_drain: rng.gen_range(0.01..1.0),
            };
            let (p_ox, p_red) = steady_state(&r).unwrap();
            let (p_ox_ode, _) = occupations_by_integration(&r);
            assert!((p_ox - p_ox_ode).abs() < 1e-8, "{p_ox} vs {p_ox_ode}");

            // source-side and drain-side currents from the occupations must
            // both reproduce the closed form
            let i_source =
                ELEMENTARY_CHARGE_C * (p_ox * r.k_red_source - p_red * r.k_ox_source);
            let i_drain =
                ELEMENTARY_CHARGE_C * (p_red * r.k_ox_drain - p_ox * r.k_red_drain);
            let i_full = current_full(&r).amps;
            let scale = i_full.abs().max(1e-25);
            assert!((i_source - i_full).abs() / scale < 1e-10);
            assert!((i_drain - i_full).abs() / scale < 1e-10);
        }
    }

    #[test]
    fn iv_zero_spectrum_gives_zero_current() {
        let g = geometry(-0.1, 0.4, 5);
        let q = vec![0.0; 5];
        let grid: Vec<f64> = (0..11).map(|i| -0.2 + 0.04 * i as f64).collect();
        let curve = iv_curve(&q, &q, &g, &grid, 0.0, &cfg(10.0)).unwrap();
        assert!(curve.iter().all(|&(_, i)| i == 0.0));
    }

    #[test]
    fn iv_single_transition_steps_at_twice_energy() {
        // single populated bin centered at ε₀; at η = 1/2 and T → 0 the
        // current turns on near V_b = 2ε₀
        let g = geometry(0.0, 0.2, 10);
        let mut q = vec![0.0; 10];
        q[4] = 1.0; // bin [0.08, 0.1), center 0.09
        let eps0 = g.bin_center_ev(4);
        let grid: Vec<f64> = (0..2001).map(|i| i as f64 * 0.25e-3).collect();
        let curve = iv_curve(&q, &q, &g, &grid, 0.0, &cfg(2.0)).unwrap();
        let max_i = curve.iter().map(|&(_, i)| i).fold(0.0, f64::max);
        let onset = curve
            .iter()
            .find(|&&(_, i)| i > 0.5 * max_i)
            .map(|&(v, _)| v)
            .unwrap();
        assert!(
            (onset - 2.0 * eps0).abs() <= 2.0 * g.bin_width_ev(),
            "onset {onset} vs 2ε₀ {}",
            2.0 * eps0
        );
    }

    #[test]
    fn iv_antisymmetric_for_symmetric_configuration() {
        let bins = 8;
        let g = geometry(-0.2, 0.2, bins);
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        // energy-mirrored spectrum shared by both processes
        let mut q = vec![0.0; bins];
        for i in 0..bins / 2 {
            let v = rng.gen_range(0.0..0.25);
            q[i] = v;
            q[bins - 1 - i] = v;
        }
        let grid: Vec<f64> = (0..81).map(|i| -0.4 + 0.01 * i as f64).collect();
        let curve = iv_curve(&q, &q, &g, &grid, 0.0, &cfg(60.0)).unwrap();
        for (k, &(v, i)) in curve.iter().enumerate() {
            let (v_m, i_m) = curve[curve.len() - 1 - k];
            assert!((v + v_m).abs() < 1e-12);
            assert!(
                (i + i_m).abs() < 1e-12 * i.abs().max(1e-30).max(i_m.abs()),
                "I({v})={i} vs I({v_m})={i_m}"
            );
        }
    }

    #[test]
    fn iv_rejects_non_monotone_grid() {
        let g = geometry(0.0, 0.1, 2);
        let q = vec![0.5, 0.5];
        assert!(iv_curve(&q, &q, &g, &[0.0, -0.1], 0.0, &cfg(10.0)).is_err());
    }

    #[test]
    fn conductance_constant_current_is_zero() {
        let g = geometry(-0.5, -0.4, 1);
        // single bin far below every potential: k_red saturated, k_ox zero
        // for all biases in the window, so the current is flat at zero
        let q = vec![1.0];
        let grid: Vec<f64> = (0..21).map(|i| -0.05 + 0.005 * i as f64).collect();
        let map = conductance_map(&q, &q, &g, &grid, &[0.0], &cfg(0.0)).unwrap();
        assert!(map.didv[0].iter().all(|&gv| gv.abs() < 1e-20));
    }

    #[test]
    fn conductance_linear_current_is_exact() {
        // synthetic check of the differentiation stencil on linear data
        let grid: Vec<f64> = (0..11).map(|i| 0.1 * i as f64).collect();
        let current: Vec<f64> = grid.iter().map(|v| 3.5 * v).collect();
        let d = differentiate(&grid, &current);
        for &g in &d {
            assert!((g - 3.5).abs() < 1e-10);
        }
    }

    #[test]
    fn conductance_step_current_spikes_once() {
        let grid: Vec<f64> = (0..101).map(|i| 0.002 * i as f64).collect();
        let current: Vec<f64> = grid
            .iter()
            .map(|&v| if v > 0.1 { 1e-10 } else { 0.0 })
            .collect();
        let d = differentiate(&grid, &current);
        let spikes = d.iter().filter(|&&g| g > 1e-9).count();
        assert!((1..=3).contains(&spikes), "spikes {spikes}");
    }

    #[test]
    fn conductance_map_needs_three_bias_points_but_one_gate_is_fine() {
        let g = geometry(0.0, 0.1, 2);
        let q = vec![0.5, 0.5];
        assert!(conductance_map(&q, &q, &g, &[0.0, 0.1], &[0.0], &cfg(10.0)).is_err());
        let ok = conductance_map(&q, &q, &g, &[0.0, 0.1, 0.2], &[0.0], &cfg(10.0)).unwrap();
        assert_eq!(ok.didv.len(), 1);
        assert_eq!(ok.didv[0].len(), 3);
    }

    #[test]
    fn staircase_nondecreasing_at_low_temperature() {
        let bins = 12;
        let g = geometry(-0.05, 0.25, bins);
        let mut rng = ChaCha8Rng::seed_from_u64(56);
        let q: Vec<f64> = (0..bins).map(|_| rng.gen_range(0.0..0.2)).collect();
        let grid: Vec<f64> = (0..301).map(|i| i as f64 * 0.002).collect();
        for temperature in [0.0, 10.0] {
            let curve = iv_curve(&q, &q, &g, &grid, 0.0, &cfg(temperature)).unwrap();
            let mut prev = -1.0;
            for &(v, i) in &curve {
                assert!(i >= prev - 1e-18, "current dipped at V_b={v}, T={temperature}");
                prev = i;
            }
        }
    }
}
