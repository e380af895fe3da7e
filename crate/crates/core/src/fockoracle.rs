//! Brute-force verification oracle on a truncated Fock space.
//!
//! Gates are represented by exponentials of their ladder-operator
//! generators on a per-mode basis truncated at `cutoff` levels, and circuits
//! are run by matrix–vector products. Nothing here is shared with the
//! loop-hafnian path in [`crate::gaussian`]; agreement between the two is
//! the main guard against convention bugs. Not a performance path: it backs
//! tests and the `verify` subcommand only.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gaussian::PhotonPattern;
use crate::linalg::{expm, log_unitary};
use crate::molparams::DoktorovParameters;

/// Hard ceiling on the state-vector length cutoff^modes.
const VECTOR_BUDGET: usize = 4_000_000;

/// Hard ceiling on the dimension of explicitly constructed multimode gate
/// matrices (the matrix itself is the square of this).
const MATRIX_BUDGET: usize = 1_024;

/// A per-mode truncation of Fock space: levels 0..cutoff−1 in each of
/// `mode_count` modes.
#[derive(Debug, Clone, Copy)]
pub struct TruncatedFockSpace {
    pub mode_count: usize,
    pub cutoff: usize,
}

impl TruncatedFockSpace {
    pub fn new(mode_count: usize, cutoff: usize) -> Result<Self> {
        if mode_count == 0 || cutoff < 2 {
            return Err(Error::input(
                "Fock space needs at least one mode and a cutoff of at least 2",
            ));
        }
        let mut dim = 1usize;
        for _ in 0..mode_count {
            dim = dim.saturating_mul(cutoff);
            if dim > VECTOR_BUDGET {
                return Err(Error::Resource(format!(
                    "Fock space {cutoff}^{mode_count} exceeds the budget of {VECTOR_BUDGET} amplitudes"
                )));
            }
        }
        Ok(Self { mode_count, cutoff })
    }

    /// Cutoff chosen for a parameter set: at least 30 levels, more when the
    /// squeezing or displacement mean photon numbers demand it.
    pub fn for_params(params: &DoktorovParameters) -> Result<Self> {
        let mut scale = 0.0f64;
        for i in 0..params.mode_count() {
            scale = scale
                .max(params.alpha[i] * params.alpha[i])
                .max(params.squeeze[i].sinh().powi(2));
        }
        let cutoff = (10.0 * scale).ceil().max(30.0) as usize;
        Self::new(params.mode_count(), cutoff)
    }

    pub fn dimension(&self) -> usize {
        self.cutoff.pow(self.mode_count as u32)
    }

    /// Basis index of a photon pattern; mode 0 is the most significant digit.
    pub fn index_of(&self, pattern: &PhotonPattern) -> Result<usize> {
        if pattern.mode_count() != self.mode_count {
            return Err(Error::input("pattern mode count does not match the space"));
        }
        let mut idx = 0usize;
        for &n in &pattern.0 {
            if n as usize >= self.cutoff {
                return Err(Error::Resource(format!(
                    "pattern entry {n} is at or above the cutoff {}",
                    self.cutoff
                )));
            }
            idx = idx * self.cutoff + n as usize;
        }
        Ok(idx)
    }

    pub fn pattern_of(&self, mut idx: usize) -> PhotonPattern {
        let mut counts = vec![0u32; self.mode_count];
        for k in (0..self.mode_count).rev() {
            counts[k] = (idx % self.cutoff) as u32;
            idx /= self.cutoff;
        }
        PhotonPattern(counts)
    }
}

/// Annihilation operator on one truncated mode, ⟨n−1|a|n⟩ = √n.
fn ladder_down(cutoff: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(cutoff, cutoff, |r, c| {
        if c == r + 1 {
            Complex64::new((c as f64).sqrt(), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// exp[r(a†² − a²)/2] on one mode.
pub fn gate_matrix_squeeze(cutoff: usize, r: f64) -> DMatrix<Complex64> {
    assert!(cutoff >= 2, "cutoff must be at least 2");
    let a = ladder_down(cutoff);
    let adag = a.adjoint();
    let gen = (&adag * &adag - &a * &a) * Complex64::new(r / 2.0, 0.0);
    expm(&gen)
}

/// exp(α a† − α* a) on one mode.
pub fn gate_matrix_displace(cutoff: usize, alpha: Complex64) -> DMatrix<Complex64> {
    assert!(cutoff >= 2, "cutoff must be at least 2");
    let a = ladder_down(cutoff);
    let adag = a.adjoint();
    let gen = &adag * alpha - &a * alpha.conj();
    expm(&gen)
}

/// exp(i Σ_jk H_jk a_j†a_k) on the full tensor space, with H = −i log U.
///
/// The generator conserves total photon number, so the exponential is taken
/// sector by sector; sectors with total photons below the cutoff carry no
/// truncation error at all.
pub fn gate_matrix_interferometer(
    cutoff: usize,
    u: &DMatrix<Complex64>,
) -> Result<DMatrix<Complex64>> {
    let modes = u.nrows();
    if u.ncols() != modes || modes == 0 {
        return Err(Error::input("interferometer matrix must be square and nonempty"));
    }
    let space = TruncatedFockSpace::new(modes, cutoff)?;
    let dim = space.dimension();
    if dim > MATRIX_BUDGET {
        return Err(Error::Resource(format!(
            "gate matrix dimension {dim} exceeds the budget of {MATRIX_BUDGET}"
        )));
    }
    check_unitary(u)?;
    let h = log_unitary(u)?;

    // Partition basis indices by total photon number.
    let max_total = modes * (cutoff - 1);
    let mut sectors: Vec<Vec<usize>> = vec![Vec::new(); max_total + 1];
    for idx in 0..dim {
        let pat = space.pattern_of(idx);
        sectors[pat.total() as usize].push(idx);
    }

    let mut out = DMatrix::<Complex64>::zeros(dim, dim);
    for sector in &sectors {
        if sector.is_empty() {
            continue;
        }
        let block = sector_generator(&space, &h, sector);
        let eblock = expm(&(block * Complex64::new(0.0, 1.0)));
        for (bc, &col) in sector.iter().enumerate() {
            for (br, &row) in sector.iter().enumerate() {
                out[(row, col)] = eblock[(br, bc)];
            }
        }
    }
    Ok(out)
}

/// Dense Σ_jk H_jk a_j†a_k restricted to one total-photon sector.
fn sector_generator(
    space: &TruncatedFockSpace,
    h: &DMatrix<Complex64>,
    sector: &[usize],
) -> DMatrix<Complex64> {
    let modes = space.mode_count;
    let pos: std::collections::HashMap<usize, usize> =
        sector.iter().enumerate().map(|(p, &i)| (i, p)).collect();
    let mut block = DMatrix::<Complex64>::zeros(sector.len(), sector.len());
    for (bc, &col) in sector.iter().enumerate() {
        let pat = space.pattern_of(col);
        for k in 0..modes {
            let nk = pat.0[k];
            if nk == 0 {
                continue;
            }
            for j in 0..modes {
                if j == k {
                    block[(bc, bc)] += h[(j, k)] * Complex64::new(nk as f64, 0.0);
                    continue;
                }
                let nj = pat.0[j];
                if nj as usize + 1 > space.cutoff - 1 {
                    continue;
                }
                let mut target = pat.clone();
                target.0[k] -= 1;
                target.0[j] += 1;
                let t_idx = space.index_of(&target).expect("target within cutoff");
                let br = pos[&t_idx];
                let amp = ((nj as f64 + 1.0) * nk as f64).sqrt();
                block[(br, bc)] += h[(j, k)] * Complex64::new(amp, 0.0);
            }
        }
    }
    block
}

fn check_unitary(u: &DMatrix<Complex64>) -> Result<()> {
    let m = u.nrows();
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
            "matrix is not unitary (deviation {dev:.3e})"
        )));
    }
    Ok(())
}

/// Probability from the oracle together with its truncation certificate.
#[derive(Debug, Clone, Copy)]
pub struct OracleProbability {
    pub probability: f64,
    /// Norm deficit 1 − ‖ψ‖² of the final truncated state.
    pub leakage: f64,
}

impl OracleProbability {
    /// True when the truncation leaked enough norm to endanger ~1e-9
    /// comparisons.
    pub fn precision_warning(&self) -> bool {
        self.leakage > 1e-6
    }
}

/// The final circuit state on the truncated space; build once, read many
/// pattern probabilities.
#[derive(Debug, Clone)]
pub struct OracleRun {
    space: TruncatedFockSpace,
    state: DVector<Complex64>,
    leakage: f64,
}

impl OracleRun {
    /// Runs D(α) R(U_L) S(r) on the vacuum by matrix–vector products.
    pub fn new(params: &DoktorovParameters) -> Result<Self> {
        let space = TruncatedFockSpace::for_params(params)?;
        Self::with_space(space, params)
    }

    /// Same with an explicit truncation choice.
    pub fn with_space(space: TruncatedFockSpace, params: &DoktorovParameters) -> Result<Self> {
        let modes = params.mode_count();
        if space.mode_count != modes {
            return Err(Error::input("Fock space mode count does not match parameters"));
        }
        let mut state = DVector::<Complex64>::zeros(space.dimension());
        state[0] = Complex64::new(1.0, 0.0);

        for k in 0..modes {
            let r = params.squeeze[k];
            if r != 0.0 {
                let gate = gate_matrix_squeeze(space.cutoff, r);
                apply_single_mode(&space, &mut state, k, &gate);
            }
        }

        let u_complex = DMatrix::<Complex64>::from_fn(modes, modes, |r, c| {
            Complex64::new(params.u_left[(r, c)], 0.0)
        });
        apply_interferometer_fock(&space, &mut state, &u_complex)?;

        for k in 0..modes {
            let a = params.alpha[k];
            if a != 0.0 {
                let gate = gate_matrix_displace(space.cutoff, Complex64::new(a, 0.0));
                apply_single_mode(&space, &mut state, k, &gate);
            }
        }

        let norm_sq: f64 = state.iter().map(|z| z.norm_sqr()).sum();
        Ok(Self {
            space,
            state,
            leakage: 1.0 - norm_sq,
        })
    }

    pub fn probability(&self, pattern: &PhotonPattern) -> Result<OracleProbability> {
        let target = self.space.index_of(pattern)?;
        Ok(OracleProbability {
            probability: self.state[target].norm_sqr(),
            leakage: self.leakage,
        })
    }
}

/// |⟨pattern| D(α) R(U_L) S(r) |0⟩|² by running the circuit on a truncated
/// Fock-space vector.
pub fn amplitude_probability(
    params: &DoktorovParameters,
    pattern: &PhotonPattern,
) -> Result<OracleProbability> {
    OracleRun::new(params)?.probability(pattern)
}

/// Applies a single-mode gate along one tensor axis.
fn apply_single_mode(
    space: &TruncatedFockSpace,
    state: &mut DVector<Complex64>,
    mode: usize,
    gate: &DMatrix<Complex64>,
) {
    let c = space.cutoff;
    let inner: usize = c.pow((space.mode_count - 1 - mode) as u32);
    let outer: usize = space.dimension() / (c * inner);
    let mut scratch = vec![Complex64::new(0.0, 0.0); c];
    for o in 0..outer {
        for i in 0..inner {
            let base = o * c * inner + i;
            for n in 0..c {
                scratch[n] = state[base + n * inner];
            }
            for n in 0..c {
                let mut acc = Complex64::new(0.0, 0.0);
                for m in 0..c {
                    acc += gate[(n, m)] * scratch[m];
                }
                state[base + n * inner] = acc;
            }
        }
    }
}

/// Applies the photon-number-conserving mode rotation via a Givens
/// decomposition: the unitary is reduced to two-mode rotations plus phases,
/// and each two-mode rotation acts exactly within its photon-number sectors.
fn apply_interferometer_fock(
    space: &TruncatedFockSpace,
    state: &mut DVector<Complex64>,
    u: &DMatrix<Complex64>,
) -> Result<()> {
    check_unitary(u)?;
    let m = space.mode_count;
    if u.nrows() != m {
        return Err(Error::input("interferometer matrix does not match mode count"));
    }

    // Reduce to diagonal: G_K…G_1 U = D.
    let mut work = u.clone();
    let mut rotations: Vec<(usize, usize, [Complex64; 4])> = Vec::new();
    for col in 0..m {
        for row in ((col + 1)..m).rev() {
            let f = work[(row - 1, col)];
            let g = work[(row, col)];
            if g.norm() < 1e-15 {
                continue;
            }
            let rho = (f.norm_sqr() + g.norm_sqr()).sqrt();
            let g00 = f.conj() / rho;
            let g01 = g.conj() / rho;
            let g10 = -g / rho;
            let g11 = f / rho;
            for c2 in 0..m {
                let top = work[(row - 1, c2)];
                let bot = work[(row, c2)];
                work[(row - 1, c2)] = g00 * top + g01 * bot;
                work[(row, c2)] = g10 * top + g11 * bot;
            }
            rotations.push((row - 1, row, [g00, g01, g10, g11]));
        }
    }
    let phases: Vec<Complex64> = (0..m).map(|k| work[(k, k)]).collect();

    // Γ(U) = Γ(G_1†)…Γ(G_K†)Γ(D): the diagonal acts first.
    apply_phases(space, state, &phases);
    for &(i, j, g) in rotations.iter().rev() {
        // adjoint of the stored elimination rotation
        let w = [g[0].conj(), g[2].conj(), g[1].conj(), g[3].conj()];
        apply_two_mode_unitary(space, state, i, j, &w);
    }
    Ok(())
}

fn apply_phases(space: &TruncatedFockSpace, state: &mut DVector<Complex64>, phases: &[Complex64]) {
    let m = space.mode_count;
    let c = space.cutoff;
    // per-mode tables of phase^n
    let mut tables: Vec<Vec<Complex64>> = Vec::with_capacity(m);
    for p in phases {
        let mut t = Vec::with_capacity(c);
        let mut acc = Complex64::new(1.0, 0.0);
        for _ in 0..c {
            t.push(acc);
            acc *= p;
        }
        tables.push(t);
    }
    for idx in 0..space.dimension() {
        let pat = space.pattern_of(idx);
        let mut factor = Complex64::new(1.0, 0.0);
        for k in 0..m {
            factor *= tables[k][pat.0[k] as usize];
        }
        state[idx] *= factor;
    }
}

/// A general two-mode unitary w (row-major 2×2) as phases · rotation ·
/// phases, each factor exact within photon-number sectors.
fn apply_two_mode_unitary(
    space: &TruncatedFockSpace,
    state: &mut DVector<Complex64>,
    mode_i: usize,
    mode_j: usize,
    w: &[Complex64; 4],
) {
    let sin_theta = (w[2].norm() + w[1].norm()) / 2.0;
    let cos_theta = (w[0].norm() + w[3].norm()) / 2.0;
    if sin_theta < 1e-15 {
        // already diagonal on the pair
        apply_pair_phases(space, state, mode_i, mode_j, w[0], w[3]);
        return;
    }
    let theta = sin_theta.atan2(cos_theta);
    // w = P1 · R(θ) · P2 with P1 = diag(e^{ia1}, e^{ia2}),
    // P2 = diag(e^{ib1}, e^{ib2}); a1 = 0 by convention.
    let (b1, b2, a2) = if cos_theta < 1e-15 {
        (0.0, w[1].arg() + std::f64::consts::PI, w[2].arg())
    } else {
        let b1 = w[0].arg();
        let b2 = w[1].arg() + std::f64::consts::PI;
        let a2 = w[2].arg() - b1;
        (b1, b2, a2)
    };
    let phase = |t: f64| Complex64::new(t.cos(), t.sin());
    apply_pair_phases(space, state, mode_i, mode_j, phase(b1), phase(b2));
    apply_pair_rotation(space, state, mode_i, mode_j, theta);
    apply_pair_phases(space, state, mode_i, mode_j, Complex64::new(1.0, 0.0), phase(a2));
}

fn apply_pair_phases(
    space: &TruncatedFockSpace,
    state: &mut DVector<Complex64>,
    mode_i: usize,
    mode_j: usize,
    pi: Complex64,
    pj: Complex64,
) {
    let c = space.cutoff;
    let mut ti = Vec::with_capacity(c);
    let mut tj = Vec::with_capacity(c);
    let mut ai = Complex64::new(1.0, 0.0);
    let mut aj = Complex64::new(1.0, 0.0);
    for _ in 0..c {
        ti.push(ai);
        tj.push(aj);
        ai *= pi;
        aj *= pj;
    }
    for idx in 0..space.dimension() {
        let pat = space.pattern_of(idx);
        state[idx] *= ti[pat.0[mode_i] as usize] * tj[pat.0[mode_j] as usize];
    }
}

/// exp[θ(a_j†a_i − a_i†a_j)] applied exactly within each two-mode sector.
fn apply_pair_rotation(
    space: &TruncatedFockSpace,
    state: &mut DVector<Complex64>,
    mode_i: usize,
    mode_j: usize,
    theta: f64,
) {
    let c = space.cutoff;
    // sector matrices B_s = expm(θ K_s), K_s tridiagonal antisymmetric
    let max_s = 2 * (c - 1);
    let mut sector_mats: Vec<DMatrix<Complex64>> = Vec::with_capacity(max_s + 1);
    for s in 0..=max_s {
        let lo = s.saturating_sub(c - 1);
        let hi = s.min(c - 1);
        let dim = hi - lo + 1;
        let mut k_s = DMatrix::<Complex64>::zeros(dim, dim);
        for ni in lo..hi {
            // transition (ni+1, nj=s-ni-1) <- (ni, nj=s-ni) carries
            // -θ√((ni+1)·(s−ni)); its transpose partner is +.
            let amp = ((ni as f64 + 1.0) * (s - ni) as f64).sqrt();
            k_s[(ni + 1 - lo, ni - lo)] = Complex64::new(-theta * amp, 0.0);
            k_s[(ni - lo, ni + 1 - lo)] = Complex64::new(theta * amp, 0.0);
        }
        sector_mats.push(expm(&k_s));
    }

    let stride_i = c.pow((space.mode_count - 1 - mode_i) as u32);
    let stride_j = c.pow((space.mode_count - 1 - mode_j) as u32);
    let dim = space.dimension();
    let mut scratch = vec![Complex64::new(0.0, 0.0); c];
    // iterate over all configurations of the remaining modes by walking all
    // indices with n_i = n_j = 0
    for base in 0..dim {
        let pat = space.pattern_of(base);
        if pat.0[mode_i] != 0 || pat.0[mode_j] != 0 {
            continue;
        }
        for s in 0..=max_s {
            let lo = s.saturating_sub(c - 1);
            let hi = s.min(c - 1);
            let mats = &sector_mats[s];
            let dim_s = hi - lo + 1;
            for ni in lo..=hi {
                scratch[ni - lo] = state[base + ni * stride_i + (s - ni) * stride_j];
            }
            for r in 0..dim_s {
                let mut acc = Complex64::new(0.0, 0.0);
                for q in 0..dim_s {
                    acc += mats[(r, q)] * scratch[q];
                }
                state[base + (r + lo) * stride_i + (s - (r + lo)) * stride_j] = acc;
            }
        }
    }
}
