//! Vertical confinement of the surface electron and the two-ripplon decay
//! mechanism: finite-difference eigensolver for the image potential plus a
//! uniform holding field, expected positions, potential-gradient matrix
//! elements, decay rates κ_mn(E⊥), and the spin-transition detunings from a
//! linear magnetic-gradient model.
//!
//! Unit conventions: the solver works in eV and nm. Energies are reported
//! externally in ordinary frequency (GHz = E/h, negative for bound states);
//! decay rates are assembled in SI and converted once to 1/ns; detunings are
//! angular (rad/ns). Each conversion constant is derived from the SI fields
//! of [`PhysicalConstants`] and covered by a round-trip unit test.

use crate::dynamics::DetuningSet;
use crate::error::{Error, Result};
use crate::tridiag::SymTridiag;

/// Coulomb constant 1/(4πε₀), N·m²/C².
pub const COULOMB_CONSTANT: f64 = 8.987_551_792_3e9;

/// Calibrated penetration-depth parameter κ₀ (1/m). Fixed once so that the
/// first-excited-state decay rate at 100 V/cm matches the pure-decay value
/// κ^(2) = −2·ln(0.9957)/25 ns ≈ 3.447e-4 /ns of a 25 ns gate; with the
/// default grid this lands at a sub-nanometre penetration length, the scale
/// expected of the electron wavefunction tail inside the liquid.
pub const CALIBRATED_KAPPA_0: f64 = 2.321_829_392_517e9;

/// Calibrated linear magnetic-field gradient dB/dz (T/m), fixed so that the
/// n_z = 1 ↔ 3 Zeeman detuning at 100 V/cm equals 0.88 rad/ns on the default
/// grid (a field difference of about 5 mT across the level positions).
pub const CALIBRATED_DB_DZ: f64 = 1.361_777_411_608e5;

/// Default holding field, V/cm.
pub const DEFAULT_E_PERP: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// dielectric constant of liquid helium
    pub epsilon: f64,
    /// image-charge strength Λ = (ε−1)/[4(ε+1)], derived from ε
    pub lambda: f64,
    /// electron mass, kg
    pub m_e: f64,
    /// elementary charge, C
    pub e_charge: f64,
    /// reduced Planck constant, J·s
    pub hbar: f64,
    /// Landé g factor
    pub g_factor: f64,
    /// Bohr magneton, J/T
    pub mu_b: f64,
    /// surface tension of liquid helium, N/m
    pub alpha_surface: f64,
    /// liquid mass density, kg/m³
    pub rho_helium: f64,
    /// wavefunction penetration depth parameter, 1/m (calibrated)
    pub kappa_0: f64,
}

impl PhysicalConstants {
    pub fn new(epsilon: f64, kappa_0: f64) -> Self {
        Self {
            epsilon,
            lambda: (epsilon - 1.0) / (4.0 * (epsilon + 1.0)),
            m_e: 9.109_383_701_5e-31,
            e_charge: 1.602_176_634e-19,
            hbar: 1.054_571_817e-34,
            g_factor: 2.0,
            mu_b: 9.274_010_078_3e-24,
            alpha_surface: 3.78e-4,
            rho_helium: 145.0,
            kappa_0,
        }
    }

    /// ℏ²/(2mₑ) in eV·nm².
    pub fn hbar2_over_2me_ev_nm2(&self) -> f64 {
        self.hbar * self.hbar / (2.0 * self.m_e * self.e_charge) * 1e18
    }

    /// e²/(4πε₀) in eV·nm.
    pub fn coulomb_ev_nm(&self) -> f64 {
        COULOMB_CONSTANT * self.e_charge * 1e9
    }

    /// Effective Bohr radius ℏ²/(mₑΛe²) of the image potential, nm.
    pub fn image_bohr_radius_nm(&self) -> f64 {
        2.0 * self.hbar2_over_2me_ev_nm2() / (self.lambda * self.coulomb_ev_nm())
    }

    /// Hydrogen-like binding scale Λ²·Ry, eV.
    pub fn image_rydberg_ev(&self) -> f64 {
        let coulomb = self.lambda * self.coulomb_ev_nm();
        coulomb * coulomb / (4.0 * self.hbar2_over_2me_ev_nm2())
    }

    /// eV → ordinary-frequency GHz (E/h).
    pub fn ev_to_ghz(&self) -> f64 {
        self.e_charge / (2.0 * std::f64::consts::PI * self.hbar) * 1e-9
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::new(1.057, CALIBRATED_KAPPA_0)
    }
}

/// Uniform solver grid over z ∈ [z_min, z_max] nm, z_min > 0 so the image
/// singularity stays outside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub z_min: f64,
    pub z_max: f64,
    pub n_points: usize,
}

impl Grid {
    pub fn new(z_min: f64, z_max: f64, n_points: usize) -> Result<Self> {
        if !(z_min > 0.0) {
            return Err(Error::InvalidGrid(format!("z_min must be > 0, got {z_min}")));
        }
        if !(z_max > z_min) {
            return Err(Error::InvalidGrid(format!(
                "z_max {z_max} must exceed z_min {z_min}"
            )));
        }
        if n_points < 16 {
            return Err(Error::InvalidGrid(format!(
                "n_points {n_points} too small"
            )));
        }
        Ok(Self {
            z_min,
            z_max,
            n_points,
        })
    }

    pub fn spacing(&self) -> f64 {
        (self.z_max - self.z_min) / (self.n_points - 1) as f64
    }

    pub fn points(&self) -> Vec<f64> {
        let dz = self.spacing();
        (0..self.n_points).map(|i| self.z_min + i as f64 * dz).collect()
    }
}

impl Default for Grid {
    fn default() -> Self {
        Self {
            z_min: 0.01,
            z_max: 300.0,
            n_points: 6000,
        }
    }
}

/// Non-fatal solver diagnostics carried in the result.
#[derive(Debug, Clone, PartialEq)]
pub enum SolverWarning {
    /// Eigenvalue moved by more than 0.1% when the grid was refined 2×.
    GridCoarse { level: usize, relative_shift: f64 },
    /// Wavefunction amplitude at a grid boundary above 1e-6 of its peak.
    BoundaryAmplitude { level: usize, relative_amplitude: f64 },
}

/// Lowest vertical eigenstates for one holding field.
#[derive(Debug, Clone)]
pub struct EigenSolution {
    pub e_perp: f64,
    pub z: Vec<f64>,
    /// eigenenergies, eV, strictly ascending
    pub energies_ev: Vec<f64>,
    /// eigenenergies in ordinary frequency, GHz = E/h
    pub energies_ghz: Vec<f64>,
    /// wavefunctions on the grid, unit L²-norm under the trapezoid measure
    pub wavefunctions: Vec<Vec<f64>>,
    /// ⟨z⟩ per level, nm
    pub expected_z: Vec<f64>,
    /// diagonal matrix elements (∂V/∂z)_nn, eV/nm
    pub grad_elements: Vec<f64>,
    pub warnings: Vec<SolverWarning>,
}

impl EigenSolution {
    pub fn n_states(&self) -> usize {
        self.energies_ev.len()
    }

    fn check_level(&self, n: usize) -> Result<()> {
        if n < 1 || n > self.n_states() {
            return Err(Error::InvalidLevel(format!(
                "level {n} outside solved range 1..={}",
                self.n_states()
            )));
        }
        Ok(())
    }
}

/// V(z) = −Λe²/z + eE⊥·z in eV, for z in nm and E⊥ in V/cm. The liquid
/// surface is a hard wall: z ≤ 0 is out of domain.
pub fn vertical_potential(z_nm: f64, e_perp: f64, c: &PhysicalConstants) -> Result<f64> {
    if !(z_nm > 0.0) {
        return Err(Error::InvalidCoordinate(format!(
            "z must be positive, got {z_nm} nm"
        )));
    }
    Ok(-c.lambda * c.coulomb_ev_nm() / z_nm + e_perp * 1e-7 * z_nm)
}

/// ∂V/∂z = Λe²/z² + eE⊥ in eV/nm; positive everywhere.
pub fn potential_gradient(z_nm: f64, e_perp: f64, c: &PhysicalConstants) -> Result<f64> {
    if !(z_nm > 0.0) {
        return Err(Error::InvalidCoordinate(format!(
            "z must be positive, got {z_nm} nm"
        )));
    }
    Ok(c.lambda * c.coulomb_ev_nm() / (z_nm * z_nm) + e_perp * 1e-7)
}

fn trapezoid_weights(n: usize, dz: f64) -> impl Fn(usize) -> f64 {
    move |i| {
        if i == 0 || i == n - 1 {
            0.5 * dz
        } else {
            dz
        }
    }
}

/// Eigenpairs on the interior points of the grid; `z_min` and `z_max` are
/// the Dirichlet nodes where ψ = 0. Placing the wall node at `z_min` (rather
/// than one spacing outside) keeps the wall position independent of the
/// spacing, so refinement measures pure discretization error.
fn solve_on_grid(
    e_perp: f64,
    grid: &Grid,
    n_states: usize,
    c: &PhysicalConstants,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let z = grid.points();
    let dz = grid.spacing();
    let kin = c.hbar2_over_2me_ev_nm2() / (dz * dz);
    let n_interior = grid.n_points - 2;
    let mut d = Vec::with_capacity(n_interior);
    for &zi in z.iter().take(grid.n_points - 1).skip(1) {
        d.push(2.0 * kin + vertical_potential(zi, e_perp, c)?);
    }
    let e = vec![-kin; n_interior - 1];
    let tri = SymTridiag::new(d, e)?;
    let (values, interior_vecs) = tri.lowest_eigenpairs(n_states)?;
    // reattach the boundary zeros
    let vectors = interior_vecs
        .into_iter()
        .map(|v| {
            let mut full = Vec::with_capacity(grid.n_points);
            full.push(0.0);
            full.extend(v);
            full.push(0.0);
            full
        })
        .collect();
    Ok((values, vectors))
}

/// Lowest `n_states` eigenpairs of −(ℏ²/2mₑ)d²/dz² + V(z) with Dirichlet
/// boundaries, via second-order central differences on the grid. A 2×
/// refinement run flags coarse-grid drift in the warnings.
pub fn solve_vertical_states(
    e_perp: f64,
    grid: &Grid,
    n_states: usize,
    c: &PhysicalConstants,
) -> Result<EigenSolution> {
    if n_states == 0 || n_states > 5 {
        return Err(Error::InvalidLevel(format!(
            "n_states must be 1..=5, got {n_states}"
        )));
    }
    if !(e_perp >= 0.0) || !e_perp.is_finite() {
        return Err(Error::InvalidCoordinate(format!(
            "holding field must be >= 0, got {e_perp}"
        )));
    }
    let (values, vectors) = solve_on_grid(e_perp, grid, n_states, c)?;

    let mut warnings = Vec::new();
    let refined = Grid::new(grid.z_min, grid.z_max, grid.n_points * 2)?;
    let (values_fine, _) = solve_on_grid(e_perp, &refined, n_states, c)?;
    for n in 0..n_states {
        let denom = values[n].abs().max(1e-12);
        let shift = (values[n] - values_fine[n]).abs() / denom;
        if shift > 1e-3 {
            warnings.push(SolverWarning::GridCoarse {
                level: n + 1,
                relative_shift: shift,
            });
        }
    }

    let z = grid.points();
    let dz = grid.spacing();
    let w = trapezoid_weights(grid.n_points, dz);

    let mut energies_ev = Vec::with_capacity(n_states);
    let mut wavefunctions = Vec::with_capacity(n_states);
    let mut expected_z = Vec::with_capacity(n_states);
    let mut grad_elements = Vec::with_capacity(n_states);

    for (n, vec_l2) in vectors.into_iter().enumerate() {
        // convert the discrete l² eigenvector into a trapezoid-normalized
        // wavefunction on the grid
        let norm_sq: f64 = vec_l2
            .iter()
            .enumerate()
            .map(|(i, &v)| w(i) * v * v)
            .sum();
        let scale = norm_sq.sqrt();
        let mut psi: Vec<f64> = vec_l2.iter().map(|&v| v / scale).collect();
        // fix the overall sign so the first antinode is positive
        if let Some(first) = psi.iter().find(|v| v.abs() > 1e-3 * psi_peak(&psi)) {
            if *first < 0.0 {
                for v in psi.iter_mut() {
                    *v = -*v;
                }
            }
        }

        // The wall side rises linearly from its Dirichlet zero by
        // construction; only the outer tail can betray a too-small box.
        let peak = psi_peak(&psi);
        let outer = psi[grid.n_points - 2].abs();
        if peak > 0.0 && outer / peak > 1e-6 {
            warnings.push(SolverWarning::BoundaryAmplitude {
                level: n + 1,
                relative_amplitude: outer / peak,
            });
        }

        let zbar: f64 = psi
            .iter()
            .enumerate()
            .map(|(i, &v)| w(i) * z[i] * v * v)
            .sum();
        let grad: f64 = psi
            .iter()
            .enumerate()
            .map(|(i, &v)| w(i) * potential_gradient(z[i], e_perp, c).unwrap() * v * v)
            .sum();

        energies_ev.push(values[n]);
        wavefunctions.push(psi);
        expected_z.push(zbar);
        grad_elements.push(grad);
    }

    for n in 1..n_states {
        if energies_ev[n] <= energies_ev[n - 1] {
            return Err(Error::Convergence(format!(
                "eigenvalues not strictly ascending at level {}",
                n + 1
            )));
        }
    }

    let energies_ghz = energies_ev.iter().map(|&e| e * c.ev_to_ghz()).collect();
    Ok(EigenSolution {
        e_perp,
        z,
        energies_ev,
        energies_ghz,
        wavefunctions,
        expected_z,
        grad_elements,
        warnings,
    })
}

fn psi_peak(psi: &[f64]) -> f64 {
    psi.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
}

/// (∂V/∂z)_nn = ∫ |ψ_n|² (Λe²/z² + eE⊥) dz by trapezoid quadrature, eV/nm.
pub fn gradient_matrix_element(
    sol: &EigenSolution,
    n: usize,
    e_perp: f64,
    c: &PhysicalConstants,
) -> Result<f64> {
    sol.check_level(n)?;
    let dz = sol.z[1] - sol.z[0];
    let w = trapezoid_weights(sol.z.len(), dz);
    let psi = &sol.wavefunctions[n - 1];
    let mut acc = 0.0;
    for i in 0..sol.z.len() {
        acc += w(i) * potential_gradient(sol.z[i], e_perp, c)? * psi[i] * psi[i];
    }
    Ok(acc)
}

/// Two-ripplon decay rate between levels m < n (1/ns):
/// κ_mn = [mₑκ₀²/(4πℏαρ)] (ρ/4ℏ²α)^{1/3} (∂V/∂z)_mm (∂V/∂z)_nn Δ_nm^{2/3},
/// assembled in SI and converted once to 1/ns.
pub fn two_ripplon_decay_rate(
    m: usize,
    n: usize,
    sol: &EigenSolution,
    c: &PhysicalConstants,
) -> Result<f64> {
    sol.check_level(m)?;
    sol.check_level(n)?;
    if m >= n {
        return Err(Error::InvalidLevel(format!(
            "spontaneous decay requires m < n, got m={m}, n={n}"
        )));
    }
    // eV/nm → J/m and eV → J
    let grad_to_si = c.e_charge * 1e9;
    let grad_m = sol.grad_elements[m - 1] * grad_to_si;
    let grad_n = sol.grad_elements[n - 1] * grad_to_si;
    let delta_j = (sol.energies_ev[n - 1] - sol.energies_ev[m - 1]) * c.e_charge;
    let prefactor = c.m_e * c.kappa_0 * c.kappa_0
        / (4.0 * std::f64::consts::PI * c.hbar * c.alpha_surface * c.rho_helium)
        * (c.rho_helium / (4.0 * c.hbar * c.hbar * c.alpha_surface)).powf(1.0 / 3.0);
    let rate_si = prefactor * grad_m * grad_n * delta_j.max(0.0).powf(2.0 / 3.0);
    Ok(rate_si * 1e-9)
}

/// Total decay rate κ^(n) = Σ_{m<n} κ_mn (1/ns); zero for the ground state.
pub fn total_decay_rate(n: usize, sol: &EigenSolution, c: &PhysicalConstants) -> Result<f64> {
    sol.check_level(n)?;
    let mut acc = 0.0;
    for m in 1..n {
        acc += two_ripplon_decay_rate(m, n, sol, c)?;
    }
    Ok(acc)
}

/// Zeeman detunings δ_ij = gμ_B (dB/dz) |⟨z_i⟩ − ⟨z_j⟩| / ℏ in rad/ns, from
/// a linear field-gradient model (dB/dz in T/m).
pub fn transition_detunings(
    sol: &EigenSolution,
    db_dz: f64,
    c: &PhysicalConstants,
) -> Result<DetuningSet> {
    if sol.n_states() < 3 {
        return Err(Error::InvalidLevel(
            "need at least three levels for the detuning set".into(),
        ));
    }
    let delta = |i: usize, j: usize| -> f64 {
        let dz_m = (sol.expected_z[i - 1] - sol.expected_z[j - 1]).abs() * 1e-9;
        c.g_factor * c.mu_b * db_dz * dz_m / c.hbar * 1e-9
    };
    Ok(DetuningSet::new(delta(1, 3), delta(2, 3), delta(1, 2)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn constants() -> PhysicalConstants {
        PhysicalConstants::default()
    }

    /// Wide grid for the zero-field (hydrogen-like) oracle, where the n = 3
    /// state reaches out past 250 nm.
    fn hydrogenic_grid() -> Grid {
        Grid::new(0.01, 800.0, 16000).unwrap()
    }

    #[test]
    fn lambda_matches_dielectric_formula() {
        let c = constants();
        assert_abs_diff_eq!(c.lambda, 0.057 / (4.0 * 2.057), epsilon = 1e-15);
        assert_abs_diff_eq!(c.lambda, 0.00693, epsilon = 5e-6);
    }

    #[test]
    fn unit_conversions_round_trip() {
        let c = constants();
        // ℏ²/2mₑ and e²/4πε₀ in solver units
        assert_relative_eq!(c.hbar2_over_2me_ev_nm2(), 0.0380998, max_relative = 1e-5);
        assert_relative_eq!(c.coulomb_ev_nm(), 1.4399645, max_relative = 1e-6);
        // image-potential scales
        assert_relative_eq!(c.image_bohr_radius_nm(), 7.638, max_relative = 1e-3);
        assert_relative_eq!(c.image_rydberg_ev(), 6.533e-4, max_relative = 1e-3);
        // eV → GHz (ordinary frequency): 1 eV = 241798.9 GHz
        assert_relative_eq!(c.ev_to_ghz(), 241_798.92, max_relative = 1e-6);
        // rate conversion: 1/s → 1/ns is exactly 1e-9 by construction; check
        // against an independently assembled value
        let per_s = 3.447e5;
        assert_abs_diff_eq!(per_s * 1e-9, 3.447e-4, epsilon = 1e-12);
    }

    #[test]
    fn potential_shape() {
        let c = constants();
        let r_b = c.image_bohr_radius_nm();
        // E⊥ = 0 at the effective Bohr radius: pure image value
        let v = vertical_potential(r_b, 0.0, &c).unwrap();
        assert_relative_eq!(v, -c.lambda * c.coulomb_ev_nm() / r_b, max_relative = 1e-12);
        // large z with field on: linear growth
        let v1 = vertical_potential(1000.0, 500.0, &c).unwrap();
        let v2 = vertical_potential(2000.0, 500.0, &c).unwrap();
        assert_relative_eq!(v2 - v1, 500.0 * 1e-7 * 1000.0, max_relative = 1e-3);
        // gradient positive everywhere
        for z in [0.05, 1.0, 10.0, 100.0] {
            assert!(potential_gradient(z, 0.0, &c).unwrap() > 0.0);
            assert!(potential_gradient(z, 1000.0, &c).unwrap() > 0.0);
        }
        assert!(vertical_potential(0.0, 100.0, &c).is_err());
        assert!(vertical_potential(-1.0, 100.0, &c).is_err());
    }

    #[test]
    fn hydrogenic_limit_energies_and_positions() {
        // At E⊥ = 0 the spectrum is −Λ²Ry/n² with ⟨z⟩ = (3n²/2)·r_B.
        let c = constants();
        let sol = solve_vertical_states(0.0, &hydrogenic_grid(), 3, &c).unwrap();
        let ry = c.image_rydberg_ev();
        let r_b = c.image_bohr_radius_nm();
        for n in 1..=3 {
            let exact = -ry / (n * n) as f64;
            assert_relative_eq!(sol.energies_ev[n - 1], exact, max_relative = 0.01);
            let z_exact = 1.5 * (n * n) as f64 * r_b;
            assert_relative_eq!(sol.expected_z[n - 1], z_exact, max_relative = 0.01);
        }
        // ground state binding ≈ −0.653 meV
        assert_relative_eq!(sol.energies_ev[0], -6.53e-4, max_relative = 0.01);
    }

    #[test]
    fn hydrogenic_gradient_element_matches_moment() {
        // (∂V/∂z)_11 at E⊥=0 equals Λe²·⟨1/z²⟩₁ = 2Λe²/r_B². The ⟨1/z²⟩
        // moment is log-sensitive to the wall offset, so this oracle runs on
        // a finer-walled grid than the energy checks.
        let c = constants();
        let grid = Grid::new(5e-4, 800.0, 32000).unwrap();
        let sol = solve_vertical_states(0.0, &grid, 3, &c).unwrap();
        let r_b = c.image_bohr_radius_nm();
        let exact = 2.0 * c.lambda * c.coulomb_ev_nm() / (r_b * r_b);
        assert_relative_eq!(sol.grad_elements[0], exact, max_relative = 0.01);
        // higher levels live in flatter potential
        assert!(sol.grad_elements[1] < sol.grad_elements[0]);
        assert!(sol.grad_elements[2] < sol.grad_elements[1]);
        // and the cached elements agree with the standalone quadrature
        for n in 1..=3 {
            let direct = gradient_matrix_element(&sol, n, 0.0, &c).unwrap();
            assert_relative_eq!(direct, sol.grad_elements[n - 1], max_relative = 1e-12);
        }
    }

    #[test]
    fn wavefunctions_are_orthonormal_with_correct_node_count() {
        let c = constants();
        let sol = solve_vertical_states(DEFAULT_E_PERP, &Grid::default(), 3, &c).unwrap();
        let dz = sol.z[1] - sol.z[0];
        for a in 0..3 {
            for b in 0..3 {
                let overlap: f64 = sol.wavefunctions[a]
                    .iter()
                    .zip(sol.wavefunctions[b].iter())
                    .enumerate()
                    .map(|(i, (x, y))| {
                        let w = if i == 0 || i == sol.z.len() - 1 { 0.5 } else { 1.0 };
                        w * dz * x * y
                    })
                    .sum();
                let want = if a == b { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(overlap, want, epsilon = 1e-8);
            }
        }
        // node count of ψ_n is n − 1
        for n in 0..3 {
            let psi = &sol.wavefunctions[n];
            let peak = psi.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
            let mut nodes = 0;
            let mut prev = 0.0f64;
            for &v in psi.iter() {
                if v.abs() < 1e-4 * peak {
                    continue;
                }
                if prev != 0.0 && v.signum() != prev.signum() {
                    nodes += 1;
                }
                prev = v;
            }
            assert_eq!(nodes, n, "level {} node count", n + 1);
        }
    }

    #[test]
    fn operating_point_positions_are_ordered_and_compressed() {
        // At 100 V/cm the levels order ⟨z₁⟩ < ⟨z₂⟩ < ⟨z₃⟩; the reference
        // values 7.63/17.2/25.3 nm from the full electrode potential are an
        // order-of-magnitude cross-check.
        let c = constants();
        let sol = solve_vertical_states(DEFAULT_E_PERP, &Grid::default(), 3, &c).unwrap();
        assert!(sol.expected_z[0] < sol.expected_z[1]);
        assert!(sol.expected_z[1] < sol.expected_z[2]);
        assert!(sol.expected_z[0] > 2.0 && sol.expected_z[0] < 30.0);
        assert!(sol.expected_z[2] < 120.0);
        assert!(sol.warnings.is_empty(), "warnings: {:?}", sol.warnings);
    }

    #[test]
    fn grid_refinement_is_converged_at_defaults() {
        let c = constants();
        let base = solve_vertical_states(DEFAULT_E_PERP, &Grid::default(), 3, &c).unwrap();
        let fine = solve_vertical_states(
            DEFAULT_E_PERP,
            &Grid::new(0.01, 300.0, 12000).unwrap(),
            3,
            &c,
        )
        .unwrap();
        for n in 0..3 {
            let rel = (base.energies_ev[n] - fine.energies_ev[n]).abs() / base.energies_ev[n].abs();
            assert!(rel < 1e-3, "energy {n} moved {rel}");
            assert!((base.expected_z[n] - fine.expected_z[n]).abs() < 0.1);
        }
    }

    #[test]
    fn decay_rate_calibration_point() {
        let c = constants();
        let sol = solve_vertical_states(DEFAULT_E_PERP, &Grid::default(), 3, &c).unwrap();
        let target = -2.0 * (0.9957f64).ln() / 25.0;
        let kappa12 = two_ripplon_decay_rate(1, 2, &sol, &c).unwrap();
        assert_relative_eq!(kappa12, target, max_relative = 1e-6);
        assert_abs_diff_eq!(kappa12, 3.5e-4, epsilon = 1e-5);
    }

    #[test]
    fn decay_rate_is_zero_for_degenerate_levels() {
        let c = constants();
        let mut sol = solve_vertical_states(DEFAULT_E_PERP, &Grid::default(), 2, &c).unwrap();
        sol.energies_ev[1] = sol.energies_ev[0];
        let k = two_ripplon_decay_rate(1, 2, &sol, &c).unwrap();
        assert_eq!(k, 0.0);
    }

    #[test]
    fn decay_rate_rejects_upward_transitions() {
        let c = constants();
        let sol = solve_vertical_states(DEFAULT_E_PERP, &Grid::default(), 3, &c).unwrap();
        assert!(two_ripplon_decay_rate(2, 2, &sol, &c).is_err());
        assert!(two_ripplon_decay_rate(3, 1, &sol, &c).is_err());
        assert!(two_ripplon_decay_rate(1, 4, &sol, &c).is_err());
    }

    #[test]
    fn total_rate_sums_partial_rates() {
        let c = constants();
        let sol = solve_vertical_states(DEFAULT_E_PERP, &Grid::default(), 3, &c).unwrap();
        assert_eq!(total_decay_rate(1, &sol, &c).unwrap(), 0.0);
        let k13 = two_ripplon_decay_rate(1, 3, &sol, &c).unwrap();
        let k23 = two_ripplon_decay_rate(2, 3, &sol, &c).unwrap();
        assert_relative_eq!(
            total_decay_rate(3, &sol, &c).unwrap(),
            k13 + k23,
            max_relative = 1e-14
        );
    }

    #[test]
    fn rates_positions_and_gradients_are_monotone_in_the_field() {
        let c = constants();
        let mut prev_k2 = 0.0;
        let mut prev_k3 = 0.0;
        let mut prev_z1 = f64::INFINITY;
        let mut prev_grad = [0.0; 3];
        for e_perp in [0.0, 100.0, 250.0, 500.0, 750.0, 1000.0] {
            let sol = solve_vertical_states(e_perp, &Grid::default(), 3, &c).unwrap();
            let k2 = total_decay_rate(2, &sol, &c).unwrap();
            let k3 = total_decay_rate(3, &sol, &c).unwrap();
            assert!(k2 > prev_k2, "kappa2 not increasing at {e_perp}");
            assert!(k3 > prev_k3, "kappa3 not increasing at {e_perp}");
            assert!(sol.expected_z[0] < prev_z1, "z1 not decreasing at {e_perp}");
            // the field both adds to the gradient and squeezes the state
            // toward the wall, so each diagonal element grows
            for n in 0..3 {
                assert!(
                    sol.grad_elements[n] > prev_grad[n],
                    "gradient element {n} not increasing at {e_perp}"
                );
            }
            prev_k2 = k2;
            prev_k3 = k3;
            prev_z1 = sol.expected_z[0];
            prev_grad = [sol.grad_elements[0], sol.grad_elements[1], sol.grad_elements[2]];
        }
    }

    #[test]
    fn detunings_from_gradient_model() {
        let c = constants();
        let sol = solve_vertical_states(DEFAULT_E_PERP, &Grid::default(), 3, &c).unwrap();
        // zero gradient → all zero
        let det0 = transition_detunings(&sol, 0.0, &c).unwrap();
        assert_eq!(det0.delta13, 0.0);
        assert_eq!(det0.delta23, 0.0);
        assert_eq!(det0.delta12, 0.0);
        // calibrated gradient reproduces the 0.88 rad/ns scale
        let det = transition_detunings(&sol, CALIBRATED_DB_DZ, &c).unwrap();
        assert_relative_eq!(det.delta13, 0.88, max_relative = 1e-6);
        // linear-model identity δ12/δ13 = (z1−z2)/(z1−z3)
        let ratio = (sol.expected_z[0] - sol.expected_z[1]) / (sol.expected_z[0] - sol.expected_z[2]);
        assert_relative_eq!(det.delta12 / det.delta13, ratio.abs(), max_relative = 1e-12);
        // implied field difference across levels 1 and 3 is about 5 mT
        let db = CALIBRATED_DB_DZ * (sol.expected_z[2] - sol.expected_z[0]).abs() * 1e-9;
        assert_relative_eq!(db, 5.0e-3, max_relative = 0.02);
    }

    #[test]
    fn higher_level_decays_faster_in_the_operating_range() {
        // Brute-force evaluation of the rate formula at a mid-range field:
        // the second excited state loses population faster than the first.
        let c = constants();
        let sol = solve_vertical_states(400.0, &Grid::default(), 3, &c).unwrap();
        let k2 = total_decay_rate(2, &sol, &c).unwrap();
        let k3 = total_decay_rate(3, &sol, &c).unwrap();
        assert!(k3 > k2, "k3 = {k3:.3e}, k2 = {k2:.3e}");
    }

    #[test]
    fn coarse_grid_warning_fires() {
        let c = constants();
        let coarse = Grid::new(0.01, 300.0, 120).unwrap();
        let sol = solve_vertical_states(DEFAULT_E_PERP, &coarse, 3, &c).unwrap();
        assert!(
            sol.warnings
                .iter()
                .any(|w| matches!(w, SolverWarning::GridCoarse { .. })),
            "warnings: {:?}",
            sol.warnings
        );
    }

    #[test]
    fn boundary_warning_fires_on_truncated_grid() {
        // The n = 3 state at zero field does not fit in 300 nm.
        let c = constants();
        let sol = solve_vertical_states(0.0, &Grid::default(), 3, &c).unwrap();
        assert!(sol
            .warnings
            .iter()
            .any(|w| matches!(w, SolverWarning::BoundaryAmplitude { level: 3, .. })));
    }

    #[test]
    fn grid_validation() {
        assert!(Grid::new(0.0, 300.0, 100).is_err());
        assert!(Grid::new(1.0, 0.5, 100).is_err());
        assert!(Grid::new(0.01, 300.0, 4).is_err());
        assert!(solve_vertical_states(100.0, &Grid::default(), 6, &constants()).is_err());
    }
}
