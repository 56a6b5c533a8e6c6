use serde::{Deserialize, Serialize};

use super::ceil_log2;
use crate::error::{invalid, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "index")]
pub enum RegisterLabel {
    Electronic,
    Mode(usize),
    Bath,
}

impl RegisterLabel {
    pub fn name(&self) -> String {
        match self {
            RegisterLabel::Electronic => "x0".to_string(),
            RegisterLabel::Mode(j) => format!("x{}", j + 1),
            RegisterLabel::Bath => "b".to_string(),
        }
    }
}

/// One register: `levels` physical states stored in `width` qubits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Register {
    pub label: RegisterLabel,
    pub width: usize,
    pub levels: usize,
}

impl Register {
    pub fn new(label: RegisterLabel, levels: usize) -> Self {
        Self {
            label,
            width: ceil_log2(levels),
            levels,
        }
    }

    /// Dimension of the qubit register, `2^width`.
    pub fn qubit_dim(&self) -> usize {
        1 << self.width
    }
}

/// Ordered registers, most significant first.
///
/// The electronic register comes first, then the modes in order, then the bath.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegisterLayout {
    registers: Vec<Register>,
}

impl RegisterLayout {
    pub fn new(registers: Vec<Register>) -> Result<Self> {
        if registers.is_empty() {
            return Err(invalid("layout needs at least one register"));
        }
        if registers.iter().any(|r| r.levels == 0 || r.levels > r.qubit_dim()) {
            return Err(invalid("register levels must be in 1..=2^width"));
        }
        Ok(Self { registers })
    }

    /// Electronic register of `electronic` levels followed by one register per cutoff.
    pub fn vibronic(electronic: usize, cutoffs: &[usize]) -> Result<Self> {
        let mut regs = vec![Register::new(RegisterLabel::Electronic, electronic)];
        regs.extend(
            cutoffs
                .iter()
                .enumerate()
                .map(|(j, &d)| Register::new(RegisterLabel::Mode(j), d)),
        );
        Self::new(regs)
    }

    /// A layout of `n` plain qubits, labelled as modes.
    pub fn qubits(n: usize) -> Result<Self> {
        Self::new((0..n).map(|j| Register::new(RegisterLabel::Mode(j), 2)).collect())
    }

    /// Appends a bath register able to hold `blocks` block indices.
    pub fn with_bath(&self, blocks: usize) -> Result<Self> {
        if self.has_bath() {
            return Err(invalid("layout already has a bath register"));
        }
        let mut regs = self.registers.clone();
        regs.push(Register::new(RegisterLabel::Bath, blocks));
        Self::new(regs)
    }

    pub fn registers(&self) -> &[Register] {
        &self.registers
    }

    pub fn len(&self) -> usize {
        self.registers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.registers.is_empty()
    }

    pub fn has_bath(&self) -> bool {
        self.registers.iter().any(|r| r.label == RegisterLabel::Bath)
    }

    pub fn position(&self, label: RegisterLabel) -> Option<usize> {
        self.registers.iter().position(|r| r.label == label)
    }

    /// Total qubit count.
    pub fn total_qubits(&self) -> usize {
        self.registers.iter().map(|r| r.width).sum()
    }

    /// Dimension of the qubit space, `2^total_qubits`.
    pub fn dim(&self) -> usize {
        1 << self.total_qubits()
    }

    /// Dimension of the truncated physical space, the product of levels.
    pub fn fock_dim(&self) -> usize {
        self.registers.iter().map(|r| r.levels).product()
    }

    pub fn level_dims(&self) -> Vec<usize> {
        self.registers.iter().map(|r| r.levels).collect()
    }

    pub fn qubit_dims(&self) -> Vec<usize> {
        self.registers.iter().map(|r| r.qubit_dim()).collect()
    }

    /// Bit offset of register `k` counted from the least significant end.
    pub fn shift(&self, k: usize) -> usize {
        self.registers[k + 1..].iter().map(|r| r.width).sum()
    }

    /// Layout without the bath register.
    pub fn system(&self) -> Self {
        Self {
            registers: self
                .registers
                .iter()
                .copied()
                .filter(|r| r.label != RegisterLabel::Bath)
                .collect(),
        }
    }
}
