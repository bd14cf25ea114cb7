//! Analytic building blocks of the holonomic gate on a Λ-type three-level
//! system: the constant coupling matrix, the dark/bright frame, the cyclic
//! single-qubit unitary, the connection matrix, gate composition, and the
//! controlled block unitary. These serve as exact references for the
//! numerically propagated dynamics.

use num_complex::Complex64 as C64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::operator::{tensor_product, Operator, StateVector};

/// Gate angles (θ, φ). The two drive amplitudes are locked to the constant
/// complex ratio Ω₁/Ω₂ = −tan(θ/2)·e^{iφ}, i.e. Ω₁ = Ω sin(θ/2) e^{iφ} and
/// Ω₂ = −Ω cos(θ/2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateParams {
    theta: f64,
    phi: f64,
}

impl GateParams {
    /// θ must lie in [0, π]; φ is wrapped into [0, 2π).
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !theta.is_finite() || !(0.0..=PI).contains(&theta) {
            return Err(Error::InvalidGate(format!(
                "theta must be in [0, pi], got {theta}"
            )));
        }
        if !phi.is_finite() {
            return Err(Error::InvalidGate("phi must be finite".into()));
        }
        Ok(Self {
            theta,
            phi: phi.rem_euclid(2.0 * PI),
        })
    }

    /// (π/2, 0): the NOT gate.
    pub fn not_gate() -> Self {
        Self {
            theta: PI / 2.0,
            phi: 0.0,
        }
    }

    /// (π/4, 0): the Hadamard gate.
    pub fn hadamard() -> Self {
        Self {
            theta: PI / 4.0,
            phi: 0.0,
        }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// Unit Bloch vector n = (sinθ cosφ, sinθ sinφ, cosθ).
    pub fn bloch_vector(&self) -> [f64; 3] {
        [
            self.theta.sin() * self.phi.cos(),
            self.theta.sin() * self.phi.sin(),
            self.theta.cos(),
        ]
    }

    fn half_angles(&self) -> (f64, f64, C64) {
        let s = (self.theta / 2.0).sin();
        let c = (self.theta / 2.0).cos();
        let phase = C64::new(0.0, self.phi).exp();
        (s, c, phase)
    }
}

/// Orthonormal dark/bright/intermediate triple of the driven Λ system over
/// the vertical levels {|1⟩, |2⟩, |3⟩}.
#[derive(Debug, Clone)]
pub struct LambdaFrame {
    pub dark: StateVector,
    pub bright: StateVector,
    pub intermediate: StateVector,
}

/// The constant coupling matrix M with H(t) = Ω(t)·M:
/// M = sin(θ/2) e^{iφ} |3⟩⟨1| − cos(θ/2) |3⟩⟨2| + h.c.
/// Hermitian with eigenvalues {0, +1, −1}.
pub fn coupling_matrix(g: &GateParams) -> Operator {
    let (s, c, phase) = g.half_angles();
    let mut m = Operator::zeros(3);
    m.set(2, 0, phase * s);
    m.set(0, 2, phase.conj() * s);
    m.set(2, 1, C64::new(-c, 0.0));
    m.set(1, 2, C64::new(-c, 0.0));
    m
}

/// Dark state cos(θ/2)|1⟩ + sin(θ/2)e^{iφ}|2⟩, bright state
/// sin(θ/2)e^{−iφ}|1⟩ − cos(θ/2)|2⟩, and the intermediate |3⟩.
pub fn lambda_frame(g: &GateParams) -> LambdaFrame {
    let (s, c, phase) = g.half_angles();
    let zero = C64::new(0.0, 0.0);
    let dark = StateVector::new(vec![C64::new(c, 0.0), phase * s, zero]).unwrap();
    let bright = StateVector::new(vec![phase.conj() * s, C64::new(-c, 0.0), zero]).unwrap();
    let intermediate = StateVector::basis_state(3, 2).unwrap();
    LambdaFrame {
        dark,
        bright,
        intermediate,
    }
}

/// The cyclic-evolution unitary on {|1⟩, |2⟩}:
/// U = [[cosθ, e^{−iφ} sinθ], [e^{iφ} sinθ, −cosθ]] = n·σ.
/// Hermitian, unitary, and involutory.
pub fn holonomic_unitary(g: &GateParams) -> Operator {
    let st = g.theta.sin();
    let ct = g.theta.cos();
    let phase = C64::new(0.0, g.phi).exp();
    Operator::from_rows(
        2,
        &[
            C64::new(ct, 0.0),
            phase.conj() * st,
            phase * st,
            C64::new(-ct, 0.0),
        ],
    )
    .unwrap()
}

/// Connection matrix per unit α̇:
/// A/α̇ = −[[sin²(θ/2), −sin(θ/2)cos(θ/2)e^{−iφ}],
///          [−sin(θ/2)cos(θ/2)e^{iφ}, cos²(θ/2)]].
/// Its trace is −1; multiplying by α̇(t) restores the physical-time connection.
pub fn connection_matrix(g: &GateParams) -> Operator {
    let (s, c, phase) = g.half_angles();
    Operator::from_rows(
        2,
        &[
            C64::new(-s * s, 0.0),
            phase.conj() * (s * c),
            phase * (s * c),
            C64::new(-c * c, 0.0),
        ],
    )
    .unwrap()
}

/// Matrix product U(g1)·U(g2) = (n·m) I − i σ·(n×m), where m, n are the Bloch
/// vectors of g1 (the later gate, left factor) and g2 (the earlier gate).
pub fn compose_holonomic(g1: &GateParams, g2: &GateParams) -> Operator {
    holonomic_unitary(g1).mul(&holonomic_unitary(g2))
}

/// Block unitary |↓⟩⟨↓| ⊗ I + |↑⟩⟨↑| ⊗ U(g) on the computational subspace
/// {|↓,1⟩, |↓,2⟩, |↑,1⟩, |↑,2⟩}. For g = (π/2, 0) this is the CNOT with the
/// spin as control.
pub fn controlled_unitary(g: &GateParams) -> Operator {
    let down = Operator::from_rows(
        2,
        &[
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
        ],
    )
    .unwrap();
    let up = Operator::from_rows(
        2,
        &[
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
        ],
    )
    .unwrap();
    tensor_product(&down, &Operator::identity(2)).add(&tensor_product(&up, &holonomic_unitary(g)))
}

/// U(g) embedded in the three-level vertical space, acting on {|1⟩, |2⟩} and
/// leaving |3⟩ untouched.
pub fn holonomic_unitary_embedded(g: &GateParams) -> Operator {
    let u = holonomic_unitary(g);
    let mut out = Operator::identity(3);
    for i in 0..2 {
        for j in 0..2 {
            out.set(i, j, u.get(i, j));
        }
    }
    out
}

/// The controlled gate on the full six-level space: identity on the
/// spin-down block, U(g) (extended by |3⟩ ↦ |3⟩) on the spin-up block.
pub fn controlled_unitary_full(g: &GateParams) -> Operator {
    let down = Operator::from_rows(
        2,
        &[
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
        ],
    )
    .unwrap();
    let up = Operator::from_rows(
        2,
        &[
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
        ],
    )
    .unwrap();
    tensor_product(&down, &Operator::identity(3))
        .add(&tensor_product(&up, &holonomic_unitary_embedded(g)))
}

/// The bright-frame state e^{iα}[cos α |b⟩ − i sin α |a⟩] at pulse area α.
pub fn bright_evolved(g: &GateParams, alpha: f64) -> StateVector {
    let frame = lambda_frame(g);
    let phase = C64::new(0.0, alpha).exp();
    let ca = C64::new(alpha.cos(), 0.0);
    let sa = C64::new(0.0, -alpha.sin());
    let amps: Vec<C64> = (0..3)
        .map(|i| phase * (ca * frame.bright.amplitude(i) + sa * frame.intermediate.amplitude(i)))
        .collect();
    StateVector::new(amps).unwrap()
}

/// Instantaneous orthogonal bases ξ₁, ξ₂ that start and end on the
/// computational states |1⟩ and |2⟩ over a cyclic evolution:
/// ξ₁ = sin(θ/2)e^{iφ}|B(α)⟩ + cos(θ/2)|D⟩,
/// ξ₂ = −cos(θ/2)|B(α)⟩ + sin(θ/2)e^{−iφ}|D⟩.
pub fn xi_bases(g: &GateParams, alpha: f64) -> (StateVector, StateVector) {
    let (s, c, phase) = g.half_angles();
    let frame = lambda_frame(g);
    let b = bright_evolved(g, alpha);
    let xi = |cb: C64, cd: C64| {
        let amps: Vec<C64> = (0..3)
            .map(|i| cb * b.amplitude(i) + cd * frame.dark.amplitude(i))
            .collect();
        StateVector::new(amps).unwrap()
    };
    let xi1 = xi(phase * s, C64::new(c, 0.0));
    let xi2 = xi(C64::new(-c, 0.0), phase.conj() * s);
    (xi1, xi2)
}
