//! Labels for the six-dimensional working space: two spin states times the
//! three lowest vertical (Rydberg) states.
//!
//! The composite basis is ordered spin-major with ascending vertical index:
//! |↓,1⟩, |↓,2⟩, |↓,3⟩, |↑,1⟩, |↑,2⟩, |↑,3⟩. Every operator and state in this
//! crate uses that ordering.

use crate::error::{Error, Result};
use std::fmt;

/// Electron spin projection along the static field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Spin {
    Down,
    Up,
}

impl Spin {
    pub const fn block_offset(self) -> usize {
        match self {
            Spin::Down => 0,
            Spin::Up => RYDBERG_LEVELS,
        }
    }
}

/// Number of vertical levels kept in the working space.
pub const RYDBERG_LEVELS: usize = 3;

/// Dimension of the composite spin ⊗ Rydberg space.
pub const DIM: usize = 2 * RYDBERG_LEVELS;

/// One basis state |spin, n_z⟩ with n_z ∈ {1, 2, 3}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BasisLabel {
    pub spin: Spin,
    pub n_z: u8,
}

impl BasisLabel {
    pub fn new(spin: Spin, n_z: u8) -> Result<Self> {
        if n_z < 1 || n_z as usize > RYDBERG_LEVELS {
            return Err(Error::InvalidLabel(format!(
                "n_z must be in 1..={RYDBERG_LEVELS}, got {n_z}"
            )));
        }
        Ok(Self { spin, n_z })
    }

    /// Flat index in the spin-major ordering.
    pub fn index(self) -> usize {
        self.spin.block_offset() + (self.n_z as usize - 1)
    }

    pub fn from_index(i: usize) -> Result<Self> {
        if i >= DIM {
            return Err(Error::InvalidLabel(format!("index {i} out of 0..{DIM}")));
        }
        let spin = if i < RYDBERG_LEVELS { Spin::Down } else { Spin::Up };
        Ok(Self {
            spin,
            n_z: (i % RYDBERG_LEVELS) as u8 + 1,
        })
    }

    pub fn all() -> impl Iterator<Item = BasisLabel> {
        (0..DIM).map(|i| BasisLabel::from_index(i).unwrap())
    }

    /// Short ASCII name, e.g. `down1`, suitable for CSV column headers.
    pub fn ascii_name(self) -> String {
        let s = match self.spin {
            Spin::Down => "down",
            Spin::Up => "up",
        };
        format!("{s}{}", self.n_z)
    }
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let arrow = match self.spin {
            Spin::Down => "↓",
            Spin::Up => "↑",
        };
        write!(f, "|{arrow},{}⟩", self.n_z)
    }
}
