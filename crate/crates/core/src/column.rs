//! First-column propagation of a circuit unitary.
//!
//! Applying a circuit to `|0…0⟩` yields the first column of its unitary, so
//! only `N = 2^n_q` amplitudes are ever stored. Qubit `q` is bit `q` of the
//! basis index (little-endian, 0-based).

use nalgebra::DMatrix;

use crate::gateset::{u2_matrix, Circuit, Gate, Mat2};
use crate::{Error, Result, C64};

/// Largest register a state column may hold unless a caller raises the cap.
pub const DEFAULT_MAX_QUBITS: usize = 24;

/// Largest register the dense oracle accepts.
pub const ORACLE_MAX_QUBITS: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct StateColumn {
    n_qubits: usize,
    amplitudes: Vec<C64>,
}

impl StateColumn {
    /// Basis state `|0…0⟩`, subject to [`DEFAULT_MAX_QUBITS`].
    pub fn zero(n_qubits: usize) -> Result<Self> {
        Self::zero_with_cap(n_qubits, DEFAULT_MAX_QUBITS)
    }

    pub fn zero_with_cap(n_qubits: usize, max_qubits: usize) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::NoQubits);
        }
        if n_qubits > max_qubits || n_qubits >= usize::BITS as usize {
            return Err(Error::TooManyQubits { n_qubits, max: max_qubits });
        }
        let mut amplitudes = vec![C64::new(0.0, 0.0); 1 << n_qubits];
        amplitudes[0] = C64::new(1.0, 0.0);
        Ok(StateColumn { n_qubits, amplitudes })
    }

    /// Wraps raw amplitudes; the length must be a power of two.
    pub fn from_amplitudes(amplitudes: Vec<C64>) -> Result<Self> {
        let dim = amplitudes.len();
        if dim < 2 || !dim.is_power_of_two() {
            return Err(Error::InvalidParameter(format!("state length {dim} is not a power of two >= 2")));
        }
        Ok(StateColumn { n_qubits: dim.trailing_zeros() as usize, amplitudes })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit < self.n_qubits {
            Ok(())
        } else {
            Err(Error::QubitOutOfRange { qubit, n_qubits: self.n_qubits })
        }
    }

    /// Applies `m` to qubit `q`: every pair `(i, i | 2^q)` with bit `q` of `i`
    /// clear is replaced by `m · (a_i, a_{i|2^q})`.
    pub fn apply_single_qubit(&mut self, qubit: usize, m: &Mat2) -> Result<()> {
        self.check_qubit(qubit)?;
        let stride = 1usize << qubit;
        for block in self.amplitudes.chunks_exact_mut(2 * stride) {
            let (lo, hi) = block.split_at_mut(stride);
            for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x0, x1) = (*a0, *a1);
                *a0 = m[0][0] * x0 + m[0][1] * x1;
                *a1 = m[1][0] * x0 + m[1][1] * x1;
            }
        }
        Ok(())
    }

    /// Flips the target bit wherever the control bit is set: `2^(n_q−2)` swaps
    /// of amplitude pairs, nothing else moves.
    pub fn apply_cnot(&mut self, control: usize, target: usize) -> Result<()> {
        self.check_qubit(control)?;
        self.check_qubit(target)?;
        if control == target {
            return Err(Error::SameControlTarget(control));
        }
        let (low, high) = (control.min(target), control.max(target));
        let control_bit = 1usize << control;
        let target_bit = 1usize << target;
        for j in 0..self.amplitudes.len() >> 2 {
            // Insert zero bits at positions `low` and `high`.
            let base = insert_zero_bit(insert_zero_bit(j, low), high);
            let i = base | control_bit;
            self.amplitudes.swap(i, i | target_bit);
        }
        Ok(())
    }

    pub fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        match gate {
            Gate::SingleQubit { qubit, angles } => self.apply_single_qubit(*qubit, &u2_matrix(angles)),
            Gate::Cnot { control, target } => self.apply_cnot(*control, *target),
        }
    }
}

#[inline]
fn insert_zero_bit(value: usize, position: usize) -> usize {
    let low_mask = (1usize << position) - 1;
    ((value & !low_mask) << 1) | (value & low_mask)
}

/// Runs `circuit` on `|0…0⟩` and returns a snapshot at every checkpoint.
pub fn simulate_first_column(circuit: &Circuit, checkpoints: &[usize]) -> Result<Vec<StateColumn>> {
    if checkpoints.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::CheckpointsNotIncreasing);
    }
    if let Some(&last) = checkpoints.last() {
        if last > circuit.len() {
            return Err(Error::CheckpointBeyondCircuit { checkpoint: last, n_gates: circuit.len() });
        }
    }
    let mut state = StateColumn::zero_with_cap(circuit.n_qubits, usize::MAX)?;
    let mut applied = 0;
    let mut snapshots = Vec::with_capacity(checkpoints.len());
    for &checkpoint in checkpoints {
        for gate in &circuit.gates[applied..checkpoint] {
            state.apply_gate(gate)?;
        }
        applied = checkpoint;
        snapshots.push(state.clone());
    }
    Ok(snapshots)
}

/// Full-register matrix of one gate, built from Kronecker products and an
/// explicit permutation.
pub fn gate_matrix(gate: &Gate, n_qubits: usize) -> Result<DMatrix<C64>> {
    gate.validate(n_qubits)?;
    let dim = 1usize << n_qubits;
    match *gate {
        Gate::SingleQubit { qubit, angles } => {
            let m = u2_matrix(&angles);
            let small = DMatrix::from_fn(2, 2, |i, j| m[i][j]);
            let id2 = DMatrix::<C64>::identity(2, 2);
            // The most significant qubit is the leftmost Kronecker factor.
            let mut full = DMatrix::<C64>::identity(1, 1);
            for q in (0..n_qubits).rev() {
                full = full.kronecker(if q == qubit { &small } else { &id2 });
            }
            Ok(full)
        }
        Gate::Cnot { control, target } => {
            let mut full = DMatrix::<C64>::zeros(dim, dim);
            for col in 0..dim {
                let row = if (col >> control) & 1 == 1 { col ^ (1 << target) } else { col };
                full[(row, col)] = C64::new(1.0, 0.0);
            }
            Ok(full)
        }
    }
}

/// Dense unitary of a small circuit, `U = G_{n_g} ⋯ G_1`.
pub fn dense_unitary_oracle(circuit: &Circuit) -> Result<DMatrix<C64>> {
    if circuit.n_qubits > ORACLE_MAX_QUBITS {
        return Err(Error::TooManyQubits { n_qubits: circuit.n_qubits, max: ORACLE_MAX_QUBITS });
    }
    let dim = 1usize << circuit.n_qubits;
    let mut unitary = DMatrix::<C64>::identity(dim, dim);
    for gate in &circuit.gates {
        unitary = gate_matrix(gate, circuit.n_qubits)? * unitary;
    }
    Ok(unitary)
}

/// `max |(U†U − I)_ij|`.
pub fn unitarity_residual(u: &DMatrix<C64>) -> f64 {
    let product = u.adjoint() * u;
    let mut worst = 0.0f64;
    for j in 0..product.ncols() {
        for i in 0..product.nrows() {
            let expected = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((product[(i, j)] - expected).norm());
        }
    }
    worst
}
