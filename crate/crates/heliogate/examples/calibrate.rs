//! Dev helper: prints the raw quantities that fix the calibrated constants.

use heliogate::helium::*;

fn main() {
    let mut c = PhysicalConstants::default();
    c.kappa_0 = 1.0; // unit penetration depth to expose the raw prefactor
    let grid = Grid::default();
    let sol = solve_vertical_states(DEFAULT_E_PERP, &grid, 3, &c).unwrap();
    println!("E (eV):      {:?}", sol.energies_ev);
    println!("E (GHz):     {:?}", sol.energies_ghz);
    println!("<z> (nm):    {:?}", sol.expected_z);
    println!("dV/dz (eV/nm): {:?}", sol.grad_elements);
    println!("warnings:    {:?}", sol.warnings);

    let raw_k12 = two_ripplon_decay_rate(1, 2, &sol, &c).unwrap();
    let target = -2.0 * (0.9957f64).ln() / 25.0;
    println!("raw k12 (kappa0=1): {raw_k12:.12e}");
    println!("target k12:         {target:.12e}");
    let kappa0 = (target / raw_k12).sqrt();
    println!("kappa0 = {kappa0:.12e}  (1/m)");

    // detuning gradient: delta13 = g mu_B dBdz |z1-z3| / hbar * 1e-9 = 0.88
    let dz13_m = (sol.expected_z[0] - sol.expected_z[2]).abs() * 1e-9;
    let db_dz = 0.88e9 * c.hbar / (c.g_factor * c.mu_b * dz13_m);
    println!("dz13 = {:.6} nm", dz13_m * 1e9);
    println!("db_dz = {db_dz:.12e}  (T/m)");
    println!("implied dB13 = {:.6} mT", db_dz * dz13_m * 1e3);

    // resulting detunings with that gradient
    let det = transition_detunings(&sol, db_dz, &c).unwrap();
    println!("delta13 = {:.6} rad/ns", det.delta13);
    println!("delta23 = {:.6} rad/ns", det.delta23);
    println!("delta12 = {:.6} rad/ns", det.delta12);

    // rates at the calibrated kappa0 across the sweep
    let c2 = PhysicalConstants::new(1.057, kappa0);
    for e in [100.0, 200.0, 400.0, 700.0, 1000.0] {
        let s = solve_vertical_states(e, &grid, 3, &c2).unwrap();
        let k12 = two_ripplon_decay_rate(1, 2, &s, &c2).unwrap();
        let k13 = two_ripplon_decay_rate(1, 3, &s, &c2).unwrap();
        let k23 = two_ripplon_decay_rate(2, 3, &s, &c2).unwrap();
        println!(
            "E={e:6.0}  k12={k12:.4e}  k13={k13:.4e}  k23={k23:.4e}  k2={:.4e}  k3={:.4e}  z={:?}",
            k12, k13 + k23, s.expected_z
        );
    }
}
