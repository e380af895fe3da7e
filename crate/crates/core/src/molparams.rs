//! Molecular vibrational data and the gate parameters derived from it.
//!
//! Two electronic states of a molecule each come with normal-mode
//! eigenvectors and frequencies. The mode bases are related by a rotation
//! (the Duschinsky matrix) plus a mass-weighted displacement; those two
//! objects determine the squeezing, rotation, and displacement gates whose
//! output photon statistics reproduce the vibronic transition weights.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::constants;
use crate::error::{Error, Result};

/// Atomic masses and one Cartesian geometry, in amu and Ångström.
#[derive(Debug, Clone)]
pub struct MolecularStructure {
    masses_amu: Vec<f64>,
    geometry_angstrom: DVector<f64>,
}

impl MolecularStructure {
    pub fn new(masses_amu: Vec<f64>, geometry_angstrom: Vec<f64>) -> Result<Self> {
        if masses_amu.is_empty() {
            return Err(Error::input("molecule needs at least one atom"));
        }
        if masses_amu.iter().any(|&m| !(m > 0.0)) {
            return Err(Error::input("all atomic masses must be positive"));
        }
        if geometry_angstrom.len() != 3 * masses_amu.len() {
            return Err(Error::input(format!(
                "geometry length {} does not match 3 × {} atoms",
                geometry_angstrom.len(),
                masses_amu.len()
            )));
        }
        Ok(Self {
            masses_amu,
            geometry_angstrom: DVector::from_vec(geometry_angstrom),
        })
    }

    pub fn atom_count(&self) -> usize {
        self.masses_amu.len()
    }

    pub fn masses_amu(&self) -> &[f64] {
        &self.masses_amu
    }

    pub fn geometry_angstrom(&self) -> &DVector<f64> {
        &self.geometry_angstrom
    }
}

/// Normal-mode data of one electronic state: frequencies (cm⁻¹) and the
/// mass-weighted eigenvector matrix with one column per mode.
#[derive(Debug, Clone)]
pub struct StateVibrations {
    frequencies_cm1: DVector<f64>,
    mode_matrix: DMatrix<f64>,
}

/// Column orthonormality tolerance for ingested mode matrices.
const MODE_ORTHONORMALITY_TOL: f64 = 1e-6;

impl StateVibrations {
    pub fn new(frequencies_cm1: Vec<f64>, mode_matrix: DMatrix<f64>) -> Result<Self> {
        if frequencies_cm1.is_empty() {
            return Err(Error::input("state needs at least one vibrational mode"));
        }
        if frequencies_cm1.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::input("all vibrational frequencies must be positive"));
        }
        if mode_matrix.ncols() != frequencies_cm1.len() {
            return Err(Error::input(format!(
                "mode matrix has {} columns but {} frequencies were given",
                mode_matrix.ncols(),
                frequencies_cm1.len()
            )));
        }
        let gram = mode_matrix.transpose() * &mode_matrix;
        let dev = max_deviation_from_identity(&gram);
        if dev > MODE_ORTHONORMALITY_TOL {
            return Err(Error::input(format!(
                "mode matrix columns are not orthonormal (deviation {dev:.3e})"
            )));
        }
        Ok(Self {
            frequencies_cm1: DVector::from_vec(frequencies_cm1),
            mode_matrix,
        })
    }

    pub fn mode_count(&self) -> usize {
        self.frequencies_cm1.len()
    }

    pub fn frequencies_cm1(&self) -> &DVector<f64> {
        &self.frequencies_cm1
    }

    pub fn mode_matrix(&self) -> &DMatrix<f64> {
        &self.mode_matrix
    }
}

/// Rotation + displacement relating the normal coordinates of two states.
#[derive(Debug, Clone)]
pub struct DuschinskyData {
    /// Mode-basis rotation, final-state modes expressed in initial-state ones.
    pub u_d: DMatrix<f64>,
    /// Mass-weighted displacement in amu^{1/2}·Å.
    pub d: DVector<f64>,
}

/// Gate parameters of the mode transformation together with both frequency
/// vectors; the bridge between molecular data and the photonic circuit.
#[derive(Debug, Clone)]
pub struct DoktorovParameters {
    pub u_left: DMatrix<f64>,
    pub u_right: DMatrix<f64>,
    /// Per-mode squeezing, natural log of the singular values of J.
    pub squeeze: DVector<f64>,
    /// Dimensionless per-mode displacement amplitudes.
    pub alpha: DVector<f64>,
    pub omega_initial_cm1: DVector<f64>,
    pub omega_final_cm1: DVector<f64>,
}

const ORTHOGONALITY_TOL: f64 = 1e-8;

impl DoktorovParameters {
    /// Builds parameters from raw pieces, enforcing the orthogonality
    /// invariants on both rotation factors.
    pub fn from_parts(
        u_left: DMatrix<f64>,
        u_right: DMatrix<f64>,
        squeeze: DVector<f64>,
        alpha: DVector<f64>,
        omega_initial_cm1: DVector<f64>,
        omega_final_cm1: DVector<f64>,
    ) -> Result<Self> {
        let m = squeeze.len();
        for (name, mat) in [("U_L", &u_left), ("U_R", &u_right)] {
            if mat.nrows() != m || mat.ncols() != m {
                return Err(Error::input(format!("{name} must be {m}×{m}")));
            }
            let dev = max_deviation_from_identity(&(mat * mat.transpose()));
            if dev > ORTHOGONALITY_TOL {
                return Err(Error::input(format!(
                    "{name} is not orthogonal (deviation {dev:.3e})"
                )));
            }
        }
        for (name, v) in [
            ("alpha", &alpha),
            ("omega_initial_cm1", &omega_initial_cm1),
            ("omega_final_cm1", &omega_final_cm1),
        ] {
            if v.len() != m {
                return Err(Error::input(format!(
                    "{name} has length {} but {m} modes",
                    v.len()
                )));
            }
        }
        Ok(Self {
            u_left,
            u_right,
            squeeze,
            alpha,
            omega_initial_cm1,
            omega_final_cm1,
        })
    }

    pub fn mode_count(&self) -> usize {
        self.squeeze.len()
    }
}

/// Mode-basis rotation between two states: (L')ᵀ·L.
pub fn duschinsky_matrix(
    initial: &StateVibrations,
    final_state: &StateVibrations,
) -> Result<DMatrix<f64>> {
    if initial.mode_count() != final_state.mode_count()
        || initial.mode_matrix.nrows() != final_state.mode_matrix.nrows()
    {
        return Err(Error::input(format!(
            "state dimensions differ: {}×{} vs {}×{}",
            initial.mode_matrix.nrows(),
            initial.mode_count(),
            final_state.mode_matrix.nrows(),
            final_state.mode_count()
        )));
    }
    Ok(final_state.mode_matrix.transpose() * &initial.mode_matrix)
}

/// Mass-weighted normal-coordinate displacement (L')ᵀ·m^{1/2}·(x − x') in
/// amu^{1/2}·Å.
pub fn displacement_vector(
    initial_geom: &MolecularStructure,
    final_geom: &MolecularStructure,
    final_modes: &StateVibrations,
) -> Result<DVector<f64>> {
    if initial_geom.atom_count() != final_geom.atom_count() {
        return Err(Error::input("geometries have different atom counts"));
    }
    if initial_geom
        .masses_amu
        .iter()
        .zip(&final_geom.masses_amu)
        .any(|(a, b)| a != b)
    {
        return Err(Error::input("atomic masses differ between structures"));
    }
    let n3 = 3 * initial_geom.atom_count();
    if final_modes.mode_matrix.nrows() != n3 {
        return Err(Error::input(format!(
            "mode matrix has {} rows but geometry has {} coordinates",
            final_modes.mode_matrix.nrows(),
            n3
        )));
    }
    let mut weighted = DVector::<f64>::zeros(n3);
    for coord in 0..n3 {
        let mass = initial_geom.masses_amu[coord / 3];
        weighted[coord] = mass.sqrt()
            * (initial_geom.geometry_angstrom[coord] - final_geom.geometry_angstrom[coord]);
    }
    Ok(final_modes.mode_matrix.transpose() * weighted)
}

/// Derives the gate parameters from the Duschinsky rotation, the
/// mass-weighted displacement (amu^{1/2}·Å) and the two frequency vectors
/// (cm⁻¹).
///
/// J = Ω'·U_D·Ω⁻¹ with Ω = diag(√ω) is factored as J = U_L·Σ·U_R; squeezing
/// parameters are ln σ so that the squeezing gate rescales quadratures by
/// the singular values. Displacement amplitudes come from the final-state
/// frequencies converted to angular form and the displacement converted to
/// kg^{1/2}·m, making them dimensionless.
pub fn doktorov_params(
    u_d: &DMatrix<f64>,
    d: &DVector<f64>,
    omega_initial_cm1: &DVector<f64>,
    omega_final_cm1: &DVector<f64>,
) -> Result<DoktorovParameters> {
    let m = u_d.nrows();
    if u_d.ncols() != m {
        return Err(Error::input("Duschinsky matrix must be square"));
    }
    if d.len() != m || omega_initial_cm1.len() != m || omega_final_cm1.len() != m {
        return Err(Error::input(
            "displacement and frequency vectors must match the mode count",
        ));
    }
    if omega_initial_cm1.iter().chain(omega_final_cm1.iter()).any(|&w| !(w > 0.0)) {
        return Err(Error::input("frequencies must be strictly positive"));
    }

    let mut j = u_d.clone();
    for r in 0..m {
        for c in 0..m {
            j[(r, c)] *= (omega_final_cm1[r] / omega_initial_cm1[c]).sqrt();
        }
    }

    let svd = j.clone().svd(true, true);
    let (u_left, u_right) = match (svd.u, svd.v_t) {
        (Some(u), Some(vt)) => (u, vt),
        _ => return Err(Error::numerical("SVD of J did not produce factors")),
    };
    let mut squeeze = DVector::<f64>::zeros(m);
    for i in 0..m {
        let sigma = svd.singular_values[i];
        if sigma <= 0.0 || !sigma.is_finite() {
            return Err(Error::numerical(format!(
                "singular value {i} of J is {sigma}; frequencies degenerate?"
            )));
        }
        squeeze[i] = sigma.ln();
    }

    let mut alpha = DVector::<f64>::zeros(m);
    for i in 0..m {
        let omega_ang = constants::wavenumber_to_angular_frequency(omega_final_cm1[i]);
        let d_si = constants::mass_weighted_displacement_to_si(d[i]);
        alpha[i] = omega_ang.sqrt() * d_si / (2.0 * constants::HBAR_J_S).sqrt();
    }

    Ok(DoktorovParameters {
        u_left,
        u_right,
        squeeze,
        alpha,
        omega_initial_cm1: omega_initial_cm1.clone(),
        omega_final_cm1: omega_final_cm1.clone(),
    })
}

/// Which electron-transfer process the derived parameters describe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Electron added to the molecule: initial-state data plays the role of
    /// the starting vibrational basis.
    Reduction,
    /// Electron removed: the two states swap roles.
    Oxidation,
}

/// On-disk molecule description holding both electronic states.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MoleculeFile {
    pub atoms: usize,
    pub masses_amu: Vec<f64>,
    pub geometry_initial_angstrom: Vec<f64>,
    pub geometry_final_angstrom: Vec<f64>,
    pub initial: StateVibrationsFile,
    #[serde(rename = "final")]
    pub final_: StateVibrationsFile,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateVibrationsFile {
    pub frequencies_cm1: Vec<f64>,
    /// Row-major matrix, 3·atoms rows of mode-count entries (columns are
    /// modes).
    pub modes: Vec<Vec<f64>>,
}

impl StateVibrationsFile {
    fn to_state(&self, coords: usize) -> Result<StateVibrations> {
        let m = self.frequencies_cm1.len();
        if self.modes.len() != coords {
            return Err(Error::input(format!(
                "modes has {} rows, expected {coords}",
                self.modes.len()
            )));
        }
        let mut mat = DMatrix::<f64>::zeros(coords, m);
        for (r, row) in self.modes.iter().enumerate() {
            if row.len() != m {
                return Err(Error::input(format!(
                    "modes row {r} has {} entries, expected {m}",
                    row.len()
                )));
            }
            for (c, &v) in row.iter().enumerate() {
                mat[(r, c)] = v;
            }
        }
        StateVibrations::new(self.frequencies_cm1.clone(), mat)
    }
}

impl MoleculeFile {
    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| Error::Parse {
            path: path.display().to_string(),
            source,
        })
    }

    fn structures(&self) -> Result<(MolecularStructure, MolecularStructure)> {
        if self.masses_amu.len() != self.atoms {
            return Err(Error::input(format!(
                "masses_amu has {} entries for {} atoms",
                self.masses_amu.len(),
                self.atoms
            )));
        }
        let a = MolecularStructure::new(self.masses_amu.clone(), self.geometry_initial_angstrom.clone())?;
        let b = MolecularStructure::new(self.masses_amu.clone(), self.geometry_final_angstrom.clone())?;
        Ok((a, b))
    }

    /// Full derivation chain for one transfer direction.
    pub fn doktorov(&self, direction: Direction) -> Result<DoktorovParameters> {
        let (duschinsky, omega_initial, omega_final) = self.duschinsky(direction)?;
        doktorov_params(&duschinsky.u_d, &duschinsky.d, &omega_initial, &omega_final)
    }

    /// Duschinsky rotation/displacement plus the two frequency vectors for
    /// one direction.
    pub fn duschinsky(
        &self,
        direction: Direction,
    ) -> Result<(DuschinskyData, DVector<f64>, DVector<f64>)> {
        let coords = 3 * self.atoms;
        let (geom_initial, geom_final) = self.structures()?;
        let state_initial = self.initial.to_state(coords)?;
        let state_final = self.final_.to_state(coords)?;
        let (from, to, geom_from, geom_to) = match direction {
            Direction::Reduction => (&state_initial, &state_final, &geom_initial, &geom_final),
            Direction::Oxidation => (&state_final, &state_initial, &geom_final, &geom_initial),
        };
        let u_d = duschinsky_matrix(from, to)?;
        let d = displacement_vector(geom_from, geom_to, to)?;
        Ok((
            DuschinskyData { u_d, d },
            from.frequencies_cm1.clone(),
            to.frequencies_cm1.clone(),
        ))
    }
}

/// On-disk gate parameters, bypassing the molecular derivation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParametersFile {
    /// Hash of the molecule file these parameters came from, when derived.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
    #[serde(rename = "U_L")]
    pub u_l: Vec<Vec<f64>>,
    #[serde(rename = "U_R")]
    pub u_r: Vec<Vec<f64>>,
    pub squeeze: Vec<f64>,
    pub alpha: Vec<f64>,
    pub omega_initial_cm1: Vec<f64>,
    pub omega_final_cm1: Vec<f64>,
}

fn rows_to_matrix(rows: &[Vec<f64>], name: &str) -> Result<DMatrix<f64>> {
    let n = rows.len();
    let mut mat = DMatrix::<f64>::zeros(n, n);
    for (r, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(Error::input(format!(
                "{name} row {r} has {} entries, expected {n}",
                row.len()
            )));
        }
        for (c, &v) in row.iter().enumerate() {
            mat[(r, c)] = v;
        }
    }
    Ok(mat)
}

fn matrix_to_rows(mat: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..mat.nrows())
        .map(|r| (0..mat.ncols()).map(|c| mat[(r, c)]).collect())
        .collect()
}

impl ParametersFile {
    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| Error::Parse {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn to_parameters(&self) -> Result<DoktorovParameters> {
        DoktorovParameters::from_parts(
            rows_to_matrix(&self.u_l, "U_L")?,
            rows_to_matrix(&self.u_r, "U_R")?,
            DVector::from_vec(self.squeeze.clone()),
            DVector::from_vec(self.alpha.clone()),
            DVector::from_vec(self.omega_initial_cm1.clone()),
            DVector::from_vec(self.omega_final_cm1.clone()),
        )
    }

    pub fn from_parameters(params: &DoktorovParameters) -> Self {
        Self {
            config_hash: None,
            u_l: matrix_to_rows(&params.u_left),
            u_r: matrix_to_rows(&params.u_right),
            squeeze: params.squeeze.iter().copied().collect(),
            alpha: params.alpha.iter().copied().collect(),
            omega_initial_cm1: params.omega_initial_cm1.iter().copied().collect(),
            omega_final_cm1: params.omega_final_cm1.iter().copied().collect(),
        }
    }
}

fn max_deviation_from_identity(gram: &DMatrix<f64>) -> f64 {
    let n = gram.nrows();
    let mut dev = 0.0f64;
    for r in 0..n {
        for c in 0..n {
            let target = if r == c { 1.0 } else { 0.0 };
            dev = dev.max((gram[(r, c)] - target).abs());
        }
    }
    dev
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::random_orthonormal_columns;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn vibrations(freqs: &[f64], modes: DMatrix<f64>) -> StateVibrations {
        StateVibrations::new(freqs.to_vec(), modes).unwrap()
    }

    #[test]
    fn duschinsky_identity_when_states_share_modes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let l = random_orthonormal_columns(9, 3, &mut rng);
        let s1 = vibrations(&[100.0, 200.0, 300.0], l.clone());
        let s2 = vibrations(&[110.0, 210.0, 310.0], l);
        let u = duschinsky_matrix(&s1, &s2).unwrap();
        assert!(max_deviation_from_identity(&u) < 1e-12);
    }

    #[test]
    fn duschinsky_swapped_columns_give_permutation() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let l = random_orthonormal_columns(9, 3, &mut rng);
        let mut swapped = l.clone();
        swapped.swap_columns(0, 1);
        let s1 = vibrations(&[100.0, 200.0, 300.0], l);
        let s2 = vibrations(&[100.0, 200.0, 300.0], swapped);
        let u = duschinsky_matrix(&s1, &s2).unwrap();
        let expect =
            DMatrix::<f64>::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        assert!((u - expect).abs().max() < 1e-12);
    }

    #[test]
    fn duschinsky_matches_triple_loop_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let l = random_orthonormal_columns(9, 3, &mut rng);
        let lp = random_orthonormal_columns(9, 3, &mut rng);
        let s1 = vibrations(&[100.0, 200.0, 300.0], l.clone());
        let s2 = vibrations(&[100.0, 200.0, 300.0], lp.clone());
        let u = duschinsky_matrix(&s1, &s2).unwrap();
        // independent triple-loop multiply
        for r in 0..3 {
            for c in 0..3 {
                let mut acc = 0.0;
                for k in 0..9 {
                    acc += lp[(k, r)] * l[(k, c)];
                }
                assert!((u[(r, c)] - acc).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn duschinsky_is_orthogonal_for_orthonormal_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..5 {
            // both mode matrices must span the same subspace for the product
            // to be orthogonal, as they do for a shared vibrational space
            let l = random_orthonormal_columns(12, 4, &mut rng);
            let rot = random_orthonormal_columns(4, 4, &mut rng);
            let lp_in_span = &l * rot;
            let s1 = vibrations(&[100.0, 200.0, 300.0, 400.0], l);
            let s2 = vibrations(&[100.0, 200.0, 300.0, 400.0], lp_in_span);
            let u = duschinsky_matrix(&s1, &s2).unwrap();
            let dev = max_deviation_from_identity(&(&u * u.transpose()));
            assert!(dev < 1e-8, "deviation {dev}");
        }
    }

    #[test]
    fn duschinsky_dimension_mismatch_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s1 = vibrations(&[100.0, 200.0], random_orthonormal_columns(6, 2, &mut rng));
        let s2 = vibrations(
            &[100.0, 200.0, 300.0],
            random_orthonormal_columns(9, 3, &mut rng),
        );
        assert!(matches!(
            duschinsky_matrix(&s1, &s2),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn displacement_zero_for_identical_geometries() {
        let geom = MolecularStructure::new(vec![12.0], vec![0.1, 0.2, 0.3]).unwrap();
        let modes = vibrations(&[500.0], DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]));
        let d = displacement_vector(&geom, &geom, &modes).unwrap();
        assert!(d.abs().max() < 1e-15);
    }

    #[test]
    fn displacement_single_atom_hand_value() {
        // mass 4 amu moved by 0.5 Å along x with a mode along x:
        // d = √4 · 0.5 = 1.0
        let a = MolecularStructure::new(vec![4.0], vec![0.5, 0.0, 0.0]).unwrap();
        let b = MolecularStructure::new(vec![4.0], vec![0.0, 0.0, 0.0]).unwrap();
        let modes = vibrations(&[500.0], DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]));
        let d = displacement_vector(&a, &b, &modes).unwrap();
        assert!((d[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn displacement_scales_with_sqrt_mass() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let modes = vibrations(&[500.0, 900.0], random_orthonormal_columns(6, 2, &mut rng));
        let geom: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let shifted: Vec<f64> = geom.iter().map(|x| x + 0.1).collect();
        let masses = vec![3.0, 7.0];
        let doubled: Vec<f64> = masses.iter().map(|m| 2.0 * m).collect();
        let a1 = MolecularStructure::new(masses.clone(), geom.clone()).unwrap();
        let b1 = MolecularStructure::new(masses, shifted.clone()).unwrap();
        let a2 = MolecularStructure::new(doubled.clone(), geom).unwrap();
        let b2 = MolecularStructure::new(doubled, shifted).unwrap();
        let d1 = displacement_vector(&a1, &b1, &modes).unwrap();
        let d2 = displacement_vector(&a2, &b2, &modes).unwrap();
        let ratio = 2.0f64.sqrt();
        for i in 0..2 {
            assert!((d2[i] - ratio * d1[i]).abs() < 1e-12, "mode {i}");
        }
    }

    #[test]
    fn displacement_rejects_mismatched_masses() {
        let a = MolecularStructure::new(vec![4.0], vec![0.5, 0.0, 0.0]).unwrap();
        let b = MolecularStructure::new(vec![5.0], vec![0.0, 0.0, 0.0]).unwrap();
        let modes = vibrations(&[500.0], DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]));
        assert!(matches!(
            displacement_vector(&a, &b, &modes),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn doktorov_identity_rotation_equal_frequencies() {
        let u_d = DMatrix::<f64>::identity(2, 2);
        let d = DVector::from_vec(vec![0.05, -0.02]);
        let w = DVector::from_vec(vec![800.0, 1500.0]);
        let p = doktorov_params(&u_d, &d, &w, &w).unwrap();
        assert!(p.squeeze.abs().max() < 1e-12);
        // J = I so the rotation pair must reconstruct the identity
        let rec = &p.u_left * &p.u_right;
        assert!(max_deviation_from_identity(&rec) < 1e-12);
        assert!(p.alpha.abs().max() > 0.0);
    }

    #[test]
    fn doktorov_single_mode_squeeze_by_hand() {
        // ω = 100, ω' = 400: J = √(400/100) = 2, squeeze = ln 2
        let u_d = DMatrix::<f64>::identity(1, 1);
        let d = DVector::from_vec(vec![0.0]);
        let p = doktorov_params(
            &u_d,
            &d,
            &DVector::from_vec(vec![100.0]),
            &DVector::from_vec(vec![400.0]),
        )
        .unwrap();
        assert!((p.squeeze[0] - 2.0f64.ln()).abs() < 1e-14);
        assert!(p.alpha[0].abs() < 1e-15);
    }

    #[test]
    fn doktorov_alpha_squared_is_huang_rhys_factor() {
        // S = ω'·d²/(2ħ) in SI units must equal α².
        let u_d = DMatrix::<f64>::identity(1, 1);
        let d_amu_ang = 0.13;
        let omega = 1000.0;
        let p = doktorov_params(
            &u_d,
            &DVector::from_vec(vec![d_amu_ang]),
            &DVector::from_vec(vec![omega]),
            &DVector::from_vec(vec![omega]),
        )
        .unwrap();
        let omega_ang = constants::wavenumber_to_angular_frequency(omega);
        let d_si = constants::mass_weighted_displacement_to_si(d_amu_ang);
        let huang_rhys = omega_ang * d_si * d_si / (2.0 * constants::HBAR_J_S);
        assert!(
            (p.alpha[0] * p.alpha[0] - huang_rhys).abs() / huang_rhys < 1e-12,
            "alpha²={} S={}",
            p.alpha[0] * p.alpha[0],
            huang_rhys
        );
    }

    #[test]
    fn doktorov_reconstruction_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..10 {
            let m = rng.gen_range(1..=5);
            let u_d = random_orthonormal_columns(m, m, &mut rng);
            let d = DVector::from_fn(m, |_, _| rng.gen_range(-0.2..0.2));
            let wi = DVector::from_fn(m, |_, _| rng.gen_range(300.0..2000.0));
            let wf = DVector::from_fn(m, |_, _| rng.gen_range(300.0..2000.0));
            let p = doktorov_params(&u_d, &d, &wi, &wf).unwrap();

            let mut j = u_d.clone();
            for r in 0..m {
                for c in 0..m {
                    j[(r, c)] *= (wf[r] / wi[c]).sqrt();
                }
            }
            let sigma = DMatrix::from_diagonal(&p.squeeze.map(f64::exp));
            let rec = &p.u_left * sigma * &p.u_right;
            assert!((rec - j).abs().max() < 1e-8);
            let dev_l = max_deviation_from_identity(&(&p.u_left * p.u_left.transpose()));
            let dev_r = max_deviation_from_identity(&(&p.u_right * p.u_right.transpose()));
            assert!(dev_l < 1e-8 && dev_r < 1e-8);
        }
    }

    #[test]
    fn doktorov_rejects_nonpositive_frequency() {
        let u_d = DMatrix::<f64>::identity(1, 1);
        let d = DVector::from_vec(vec![0.0]);
        let r = doktorov_params(
            &u_d,
            &d,
            &DVector::from_vec(vec![-5.0]),
            &DVector::from_vec(vec![100.0]),
        );
        assert!(matches!(r, Err(Error::Input(_))));
    }

    #[test]
    fn parameters_file_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u_d = random_orthonormal_columns(3, 3, &mut rng);
        let d = DVector::from_vec(vec![0.1, 0.0, -0.05]);
        let wi = DVector::from_vec(vec![500.0, 900.0, 1400.0]);
        let wf = DVector::from_vec(vec![520.0, 880.0, 1390.0]);
        let p = doktorov_params(&u_d, &d, &wi, &wf).unwrap();
        let file = ParametersFile::from_parameters(&p);
        let text = serde_json::to_string(&file).unwrap();
        let back: ParametersFile = serde_json::from_str(&text).unwrap();
        let q = back.to_parameters().unwrap();
        assert!((&q.u_left - &p.u_left).abs().max() < 1e-15);
        assert!((&q.alpha - &p.alpha).abs().max() < 1e-15);
        assert!((&q.squeeze - &p.squeeze).abs().max() < 1e-15);
    }
}
