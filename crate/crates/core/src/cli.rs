//! Config-driven pipeline commands behind the command-line interface.
//!
//! Every command is a pure function of its `RunConfig`, writes files with a
//! config-hash/seed header, and is byte-reproducible for a fixed (config,
//! seed) pair.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::gaussian::prepare_doktorov_output;
use crate::molparams::{Direction, DoktorovParameters, MoleculeFile, ParametersFile};
use crate::sampler::{
    bin_energies, draw_samples, enumerate_distribution, q_estimate, EnergyHistogram,
    HistogramGeometry, SamplerConfig, VibronicSample,
};
use crate::transport::{conductance_map, iv_points, TransportConfig};
use crate::verify::{run_small_checks, Perturbation, VerifyReport};
use crate::constants::CM1_TO_EV;

/// Uniform voltage grid, inclusive of both ends.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSpec {
    pub start_mv: f64,
    pub stop_mv: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn values_mv(&self) -> Result<Vec<f64>> {
        if self.points == 0 {
            return Err(Error::input("grid needs at least one point"));
        }
        if self.points == 1 {
            return Ok(vec![self.start_mv]);
        }
        if !(self.stop_mv > self.start_mv) {
            return Err(Error::input("grid stop must exceed start"));
        }
        let step = (self.stop_mv - self.start_mv) / (self.points - 1) as f64;
        Ok((0..self.points)
            .map(|i| self.start_mv + step * i as f64)
            .collect())
    }

    pub fn values_v(&self) -> Result<Vec<f64>> {
        Ok(self.values_mv()?.into_iter().map(|mv| mv * 1e-3).collect())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HistogramSpec {
    pub eps_min_ev: f64,
    pub eps_max_ev: f64,
    pub bins: usize,
}

impl HistogramSpec {
    pub fn geometry(&self) -> Result<HistogramGeometry> {
        HistogramGeometry::new(self.eps_min_ev, self.eps_max_ev, self.bins)
    }
}

/// Which transfer processes a run covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DirectionChoice {
    Reduction,
    Oxidation,
    Both,
}

impl DirectionChoice {
    fn directions(self) -> Vec<Direction> {
        match self {
            DirectionChoice::Reduction => vec![Direction::Reduction],
            DirectionChoice::Oxidation => vec![Direction::Oxidation],
            DirectionChoice::Both => vec![Direction::Reduction, Direction::Oxidation],
        }
    }
}

fn direction_name(d: Direction) -> &'static str {
    match d {
        Direction::Reduction => "reduction",
        Direction::Oxidation => "oxidation",
    }
}

/// Independent RNG stream blocks per process, so a `both` run never shares
/// streams between the two directions.
fn direction_stream_offset(d: Direction) -> u64 {
    match d {
        Direction::Reduction => 0,
        Direction::Oxidation => 1 << 32,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default)]
    pub molecule_path: Option<PathBuf>,
    /// Pre-derived gate parameters; override the molecule file per process.
    #[serde(default)]
    pub params_reduction_path: Option<PathBuf>,
    #[serde(default)]
    pub params_oxidation_path: Option<PathBuf>,
    pub direction: DirectionChoice,
    pub sampler: SamplerConfig,
    pub histogram: HistogramSpec,
    pub transport: TransportConfig,
    pub bias_grid: GridSpec,
    pub gate_grid: GridSpec,
    pub output_dir: PathBuf,
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| Error::Parse {
            path: path.display().to_string(),
            source,
        })
    }

    /// Hash of the fully resolved configuration, stamped into every output.
    /// The output directory is excluded: it names where results go, not what
    /// they are.
    pub fn config_hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = PathBuf::new();
        let text = serde_json::to_string(&canonical).expect("config serializes");
        let digest = Sha256::digest(text.as_bytes());
        let mut hex = String::with_capacity(16);
        for byte in digest.iter().take(8) {
            let _ = write!(hex, "{byte:02x}");
        }
        hex
    }

    /// Gate parameters for one process: an explicit parameters file wins,
    /// then derivation from the molecule file.
    pub fn parameters_for(&self, direction: Direction) -> Result<DoktorovParameters> {
        let explicit = match direction {
            Direction::Reduction => &self.params_reduction_path,
            Direction::Oxidation => &self.params_oxidation_path,
        };
        if let Some(path) = explicit {
            return ParametersFile::from_path(path)?.to_parameters();
        }
        if let Some(path) = &self.molecule_path {
            return MoleculeFile::from_path(path)?.doktorov(direction);
        }
        Err(Error::input(format!(
            "no parameters available for the {} process: set molecule_path or \
             params_{}_path",
            direction_name(direction),
            direction_name(direction)
        )))
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|source| Error::Io {
            path: parent.display().to_string(),
            source,
        })?;
    }
    std::fs::write(path, contents).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Full double precision for CSV cells: 17 significant digits.
fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

/// Condition diagnostics echoed by the `params` command.
#[derive(Debug, Clone, Serialize)]
pub struct DerivationDiagnostics {
    pub direction: String,
    pub mode_count: usize,
    pub duschinsky_orthogonality_deviation: f64,
    pub duschinsky_determinant: f64,
    pub j_condition_number: f64,
    pub max_abs_alpha: f64,
    pub max_abs_squeeze: f64,
}

#[derive(Debug, Clone)]
pub struct ParamsOutput {
    pub files: Vec<PathBuf>,
    pub diagnostics: Vec<DerivationDiagnostics>,
}

/// Derives gate parameters for both processes and writes one parameters
/// file per direction.
pub fn cmd_params(molecule_path: &Path, out_dir: &Path) -> Result<ParamsOutput> {
    let molecule = MoleculeFile::from_path(molecule_path)?;
    let molecule_bytes = std::fs::read(molecule_path).map_err(|source| Error::Io {
        path: molecule_path.display().to_string(),
        source,
    })?;
    let digest = Sha256::digest(&molecule_bytes);
    let mut molecule_hash = String::with_capacity(16);
    for byte in digest.iter().take(8) {
        let _ = write!(molecule_hash, "{byte:02x}");
    }
    let mut files = Vec::new();
    let mut diagnostics = Vec::new();
    for direction in [Direction::Reduction, Direction::Oxidation] {
        let (duschinsky, _, _) = molecule.duschinsky(direction)?;
        let params = molecule.doktorov(direction)?;

        let m = params.mode_count();
        let gram = &duschinsky.u_d * duschinsky.u_d.transpose();
        let mut ortho_dev = 0.0f64;
        for r in 0..m {
            for c in 0..m {
                let target = if r == c { 1.0 } else { 0.0 };
                ortho_dev = ortho_dev.max((gram[(r, c)] - target).abs());
            }
        }
        let sigmas: Vec<f64> = params.squeeze.iter().map(|r| r.exp()).collect();
        let sig_max = sigmas.iter().cloned().fold(f64::MIN, f64::max);
        let sig_min = sigmas.iter().cloned().fold(f64::MAX, f64::min);
        diagnostics.push(DerivationDiagnostics {
            direction: direction_name(direction).to_string(),
            mode_count: m,
            duschinsky_orthogonality_deviation: ortho_dev,
            duschinsky_determinant: duschinsky.u_d.determinant(),
            j_condition_number: sig_max / sig_min,
            max_abs_alpha: params.alpha.abs().max(),
            max_abs_squeeze: params.squeeze.abs().max(),
        });

        let mut file = ParametersFile::from_parameters(&params);
        file.config_hash = Some(molecule_hash.clone());
        let path = out_dir.join(format!("params_{}.json", direction_name(direction)));
        let mut text = serde_json::to_string_pretty(&file).map_err(|source| Error::Parse {
            path: path.display().to_string(),
            source,
        })?;
        text.push('\n');
        write_file(&path, &text)?;
        files.push(path);
    }
    Ok(ParamsOutput { files, diagnostics })
}

/// Histogram document written by `sample`; also the unit consumed by the
/// transport commands.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HistogramDocument {
    pub config_hash: String,
    pub seed: u64,
    pub direction: String,
    pub captured_mass: f64,
    pub frozen_mass_bound: f64,
    pub eps_min_ev: f64,
    pub eps_max_ev: f64,
    pub bins: usize,
    pub counts: Vec<u64>,
    pub total_samples: u64,
    pub out_of_range: u64,
    pub q: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct DirectionRun {
    pub direction: Direction,
    pub captured_mass: f64,
    pub frozen_mass_bound: f64,
    pub histogram: EnergyHistogram,
    pub q: Vec<f64>,
    pub samples: Vec<VibronicSample>,
}

/// Enumerate, draw, and bin one process.
fn run_direction(config: &RunConfig, direction: Direction) -> Result<DirectionRun> {
    let params = config.parameters_for(direction)?;
    let state = prepare_doktorov_output(&params)?;
    let mut sampler_cfg = config.sampler.clone();
    sampler_cfg.stream_offset = direction_stream_offset(direction);
    let dist = enumerate_distribution(&state, &params, &sampler_cfg)?;
    let samples = draw_samples(&dist, &sampler_cfg)?;
    let histogram = bin_energies(
        &samples,
        config.histogram.eps_min_ev,
        config.histogram.eps_max_ev,
        config.histogram.bins,
    )?;
    let q = q_estimate(&histogram)?;
    Ok(DirectionRun {
        direction,
        captured_mass: dist.captured_mass,
        frozen_mass_bound: dist.frozen_mass_bound,
        histogram,
        q,
        samples,
    })
}

fn samples_csv(config_hash: &str, seed: u64, samples: &[VibronicSample]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# config_hash={config_hash} seed={seed}");
    let _ = writeln!(out, "pattern,energy_cm1,energy_ev");
    for s in samples {
        let pattern = s
            .pattern
            .0
            .iter()
            .map(|n| n.to_string())
            .collect::<Vec<_>>()
            .join(";");
        let _ = writeln!(
            out,
            "{pattern},{},{}",
            fmt(s.energy_cm1),
            fmt(s.energy_cm1 * CM1_TO_EV)
        );
    }
    out
}

fn histogram_document(config: &RunConfig, run: &DirectionRun) -> HistogramDocument {
    HistogramDocument {
        config_hash: config.config_hash(),
        seed: config.sampler.seed,
        direction: direction_name(run.direction).to_string(),
        captured_mass: run.captured_mass,
        frozen_mass_bound: run.frozen_mass_bound,
        eps_min_ev: run.histogram.geometry.eps_min_ev,
        eps_max_ev: run.histogram.geometry.eps_max_ev,
        bins: run.histogram.geometry.bin_count,
        counts: run.histogram.counts.clone(),
        total_samples: run.histogram.total_samples,
        out_of_range: run.histogram.out_of_range,
        q: run.q.clone(),
    }
}

#[derive(Debug, Clone)]
pub struct SampleOutput {
    pub files: Vec<PathBuf>,
    pub runs: Vec<DirectionRun>,
}

/// Samples the configured processes and writes one samples CSV plus one
/// histogram JSON per direction.
pub fn cmd_sample(config: &RunConfig) -> Result<SampleOutput> {
    config.sampler.validate()?;
    let hash = config.config_hash();
    let mut files = Vec::new();
    let mut runs = Vec::new();
    for direction in config.direction.directions() {
        let run = run_direction(config, direction)?;
        let name = direction_name(direction);

        let csv_path = config.output_dir.join(format!("samples_{name}.csv"));
        write_file(
            &csv_path,
            &samples_csv(&hash, config.sampler.seed, &run.samples),
        )?;
        files.push(csv_path);

        let doc = histogram_document(config, &run);
        let json_path = config.output_dir.join(format!("histogram_{name}.json"));
        let mut text = serde_json::to_string_pretty(&doc).map_err(|source| Error::Parse {
            path: json_path.display().to_string(),
            source,
        })?;
        text.push('\n');
        write_file(&json_path, &text)?;
        files.push(json_path);

        runs.push(run);
    }
    Ok(SampleOutput { files, runs })
}

fn both_q_vectors(config: &RunConfig) -> Result<(Vec<f64>, Vec<f64>)> {
    let red = run_direction(config, Direction::Reduction)?;
    let ox = run_direction(config, Direction::Oxidation)?;
    Ok((red.q, ox.q))
}

#[derive(Debug, Clone)]
pub struct TransportOutput {
    pub files: Vec<PathBuf>,
}

/// Current–voltage sweep at the first gate-grid voltage; writes the I–V
/// curve and the four rates per bias point.
pub fn cmd_iv(config: &RunConfig) -> Result<TransportOutput> {
    config.transport.validate()?;
    let hash = config.config_hash();
    let (q_red, q_ox) = both_q_vectors(config)?;
    let geometry = config.histogram.geometry()?;
    let bias_mv = config.bias_grid.values_mv()?;
    let bias_v = config.bias_grid.values_v()?;
    let gate_v = config.gate_grid.values_v()?[0];

    let points = iv_points(&q_red, &q_ox, &geometry, &bias_v, gate_v, &config.transport)?;

    let mut iv = String::new();
    let _ = writeln!(iv, "# config_hash={hash} seed={}", config.sampler.seed);
    let _ = writeln!(iv, "v_bias_mV,current_A");
    let mut rates = String::new();
    let _ = writeln!(rates, "# config_hash={hash} seed={}", config.sampler.seed);
    let _ = writeln!(rates, "v_bias_mV,k_red_S,k_ox_S,k_red_D,k_ox_D");
    for (mv, p) in bias_mv.iter().zip(&points) {
        let _ = writeln!(iv, "{},{}", fmt(*mv), fmt(p.current.amps));
        let _ = writeln!(
            rates,
            "{},{},{},{},{}",
            fmt(*mv),
            fmt(p.rates.k_red_source),
            fmt(p.rates.k_ox_source),
            fmt(p.rates.k_red_drain),
            fmt(p.rates.k_ox_drain)
        );
    }

    let iv_path = config.output_dir.join("iv.csv");
    let rates_path = config.output_dir.join("rates.csv");
    write_file(&iv_path, &iv)?;
    write_file(&rates_path, &rates)?;
    Ok(TransportOutput {
        files: vec![iv_path, rates_path],
    })
}

/// Differential-conductance map over the configured gate × bias grids,
/// written in long format.
pub fn cmd_map(config: &RunConfig) -> Result<TransportOutput> {
    config.transport.validate()?;
    let hash = config.config_hash();
    let (q_red, q_ox) = both_q_vectors(config)?;
    let geometry = config.histogram.geometry()?;
    let bias_mv = config.bias_grid.values_mv()?;
    let bias_v = config.bias_grid.values_v()?;
    let gate_mv = config.gate_grid.values_mv()?;
    let gate_v = config.gate_grid.values_v()?;

    let map = conductance_map(&q_red, &q_ox, &geometry, &bias_v, &gate_v, &config.transport)?;

    let mut out = String::new();
    let _ = writeln!(out, "# config_hash={hash} seed={}", config.sampler.seed);
    let _ = writeln!(out, "v_gate_mV,v_bias_mV,dIdV_S");
    for (gi, gmv) in gate_mv.iter().enumerate() {
        for (bi, bmv) in bias_mv.iter().enumerate() {
            let _ = writeln!(out, "{},{},{}", fmt(*gmv), fmt(*bmv), fmt(map.didv[gi][bi]));
        }
    }
    let path = config.output_dir.join("map.csv");
    write_file(&path, &out)?;
    Ok(TransportOutput { files: vec![path] })
}

/// Runs the verification suite; the report decides the exit code.
pub fn cmd_verify() -> VerifyReport {
    run_small_checks(Perturbation::None)
}
