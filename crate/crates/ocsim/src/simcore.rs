//! Dense state-vector simulation of small qubit registers.
//!
//! Conventions, fixed once and shared with the compiler and the golden files:
//!
//! - qubit `0` is the least significant bit of an amplitude index;
//! - `rotate_z(q, a)` applies `exp(-i a Z / 2)` and `rotate_x(q, a)` applies
//!   `exp(-i a X / 2)`;
//! - `apply_u(q, a, a')` is the Z-rotation followed by the X-rotation;
//! - measurement keeps the collapsed qubit in the register, so indices stay
//!   stable for callers that track per-node bookkeeping.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Hard cap on register width (16M amplitudes); larger requests are errors.
pub const MAX_QUBITS: usize = 22;

/// Tolerance for norm preservation under unitaries.
pub const NORM_TOL: f64 = 1e-12;

/// States with squared norm below this are rejected by measurement.
pub const DEGENERATE_NORM: f64 = 1e-9;

/// Default tolerance for the global-phase-insensitive equality predicate.
pub const GLOBAL_PHASE_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pauli {
    X,
    Y,
    Z,
}

/// Result of a computational-basis measurement.
#[derive(Clone, Copy, Debug)]
pub struct Measurement {
    pub outcome: u8,
    /// Born probability of the outcome that was returned.
    pub probability: f64,
}

/// Normalised amplitudes over `2^num_qubits` basis states.
#[derive(Clone, Debug)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|+>^n`: every amplitude equal to `2^(-n/2)`.
    pub fn new_plus_state(num_qubits: usize) -> Result<Self> {
        check_qubit_count(num_qubits)?;
        let dim = 1usize << num_qubits;
        let amp = Complex64::new(1.0 / (dim as f64).sqrt(), 0.0);
        Ok(Self {
            num_qubits,
            amps: vec![amp; dim],
        })
    }

    /// A single computational basis state `|index>`.
    pub fn computational_basis(num_qubits: usize, index: usize) -> Result<Self> {
        check_qubit_count(num_qubits)?;
        let dim = 1usize << num_qubits;
        assert!(index < dim, "basis index out of range");
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(Self { num_qubits, amps })
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let num_qubits = amps.len().trailing_zeros() as usize;
        if amps.len() != 1usize << num_qubits || amps.is_empty() {
            return Err(Error::QubitCountOutOfRange(0));
        }
        check_qubit_count(num_qubits)?;
        Ok(Self { num_qubits, amps })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.num_qubits {
            return Err(Error::QubitOutOfRange {
                index: q,
                num_qubits: self.num_qubits,
            });
        }
        Ok(())
    }

    /// Apply an arbitrary 2x2 matrix `[[m00, m01], [m10, m11]]` to qubit `q`.
    pub fn apply_single_qubit(&mut self, q: usize, m: [[Complex64; 2]; 2]) -> Result<&mut Self> {
        self.check_qubit(q)?;
        let step = 1usize << q;
        for base in (0..self.amps.len()).step_by(2 * step) {
            for offset in 0..step {
                let i0 = base + offset;
                let i1 = i0 + step;
                let a0 = self.amps[i0];
                let a1 = self.amps[i1];
                self.amps[i0] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[i1] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
        Ok(self)
    }

    /// `|ab> -> (-1)^(ab) |ab>`; diagonal and symmetric in its qubits.
    pub fn cphase(&mut self, a: usize, b: usize) -> Result<&mut Self> {
        self.check_qubit(a)?;
        self.check_qubit(b)?;
        if a == b {
            return Err(Error::DuplicateQubit(a));
        }
        let mask = (1usize << a) | (1usize << b);
        for (idx, amp) in self.amps.iter_mut().enumerate() {
            if idx & mask == mask {
                *amp = -*amp;
            }
        }
        Ok(self)
    }

    /// Rotation `exp(-i angle Z / 2)` on qubit `q`.
    pub fn rotate_z(&mut self, q: usize, angle: f64) -> Result<&mut Self> {
        check_angle(angle)?;
        self.apply_single_qubit(q, zrot_matrix(angle))
    }

    /// Rotation `exp(-i angle X / 2)` on qubit `q`.
    pub fn rotate_x(&mut self, q: usize, angle: f64) -> Result<&mut Self> {
        check_angle(angle)?;
        self.apply_single_qubit(q, xrot_matrix(angle))
    }

    /// The circuit-model single-qubit gate: Z-rotation by `alpha`, then
    /// X-rotation by `alpha_prime`.
    pub fn apply_u(&mut self, q: usize, alpha: f64, alpha_prime: f64) -> Result<&mut Self> {
        self.rotate_z(q, alpha)?;
        self.rotate_x(q, alpha_prime)
    }

    pub fn hadamard(&mut self, q: usize) -> Result<&mut Self> {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let m = [
            [Complex64::new(h, 0.0), Complex64::new(h, 0.0)],
            [Complex64::new(h, 0.0), Complex64::new(-h, 0.0)],
        ];
        self.apply_single_qubit(q, m)
    }

    pub fn pauli(&mut self, q: usize, which: Pauli) -> Result<&mut Self> {
        let zero = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        let m = match which {
            Pauli::X => [[zero, one], [one, zero]],
            Pauli::Y => [[zero, -i], [i, zero]],
            Pauli::Z => [[one, zero], [zero, -one]],
        };
        self.apply_single_qubit(q, m)
    }

    /// Probability of measuring `1` on qubit `q`.
    pub fn prob_one(&self, q: usize) -> Result<f64> {
        self.check_qubit(q)?;
        let mask = 1usize << q;
        Ok(self
            .amps
            .iter()
            .enumerate()
            .filter(|(idx, _)| idx & mask != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }

    /// Computational-basis measurement of qubit `q` with Born statistics.
    ///
    /// The qubit stays in the register, collapsed onto the outcome.
    pub fn measure_z(&mut self, q: usize, rng: &mut RngStream) -> Result<Measurement> {
        let norm = self.norm_sqr();
        if norm < DEGENERATE_NORM {
            return Err(Error::DegenerateState(norm));
        }
        let p_one = self.prob_one(q)? / norm;
        let outcome = u8::from(rng.gen::<f64>() < p_one);
        self.collapse(q, outcome)?;
        Ok(Measurement {
            outcome,
            probability: if outcome == 1 { p_one } else { 1.0 - p_one },
        })
    }

    /// Project qubit `q` onto a chosen outcome and renormalise. Used by
    /// exhaustive branch tests; rejects outcomes of negligible probability.
    pub fn measure_z_forced(&mut self, q: usize, outcome: u8) -> Result<Measurement> {
        let norm = self.norm_sqr();
        if norm < DEGENERATE_NORM {
            return Err(Error::DegenerateState(norm));
        }
        let p_one = self.prob_one(q)? / norm;
        let probability = if outcome == 1 { p_one } else { 1.0 - p_one };
        if probability < 1e-12 {
            return Err(Error::ImpossibleOutcome {
                outcome,
                probability,
            });
        }
        self.collapse(q, outcome)?;
        Ok(Measurement {
            outcome,
            probability,
        })
    }

    fn collapse(&mut self, q: usize, outcome: u8) -> Result<()> {
        let mask = 1usize << q;
        let want = if outcome == 1 { mask } else { 0 };
        let mut kept = 0.0;
        for (idx, amp) in self.amps.iter_mut().enumerate() {
            if idx & mask == want {
                kept += amp.norm_sqr();
            } else {
                *amp = Complex64::new(0.0, 0.0);
            }
        }
        let scale = 1.0 / kept.sqrt();
        for amp in &mut self.amps {
            *amp *= scale;
        }
        Ok(())
    }

    /// Drop qubits that are collapsed onto known outcomes, returning the
    /// state on the remaining qubits (kept in ascending original order).
    ///
    /// `collapsed` maps qubit index to its outcome bit. Weight outside the
    /// selected slice must be negligible.
    pub fn factor_collapsed(
        &self,
        collapsed: &std::collections::BTreeMap<usize, u8>,
    ) -> Result<StateVector> {
        for &q in collapsed.keys() {
            self.check_qubit(q)?;
        }
        let kept: Vec<usize> = (0..self.num_qubits)
            .filter(|q| !collapsed.contains_key(q))
            .collect();
        if kept.is_empty() {
            return Err(Error::QubitCountOutOfRange(0));
        }
        let fixed_mask: usize = collapsed.keys().map(|q| 1usize << q).sum();
        let fixed_bits: usize = collapsed
            .iter()
            .filter(|(_, &m)| m == 1)
            .map(|(q, _)| 1usize << q)
            .sum();
        let mut out = vec![Complex64::new(0.0, 0.0); 1usize << kept.len()];
        let mut selected = 0.0;
        let mut discarded = 0.0;
        for (idx, amp) in self.amps.iter().enumerate() {
            if idx & fixed_mask == fixed_bits {
                let mut reduced = 0usize;
                for (new_q, &old_q) in kept.iter().enumerate() {
                    if idx & (1usize << old_q) != 0 {
                        reduced |= 1usize << new_q;
                    }
                }
                out[reduced] = *amp;
                selected += amp.norm_sqr();
            } else {
                discarded += amp.norm_sqr();
            }
        }
        if discarded > 1e-9 || selected < DEGENERATE_NORM {
            return Err(Error::ImpossibleOutcome {
                outcome: 0,
                probability: selected,
            });
        }
        let scale = 1.0 / selected.sqrt();
        for amp in &mut out {
            *amp *= scale;
        }
        StateVector::from_amplitudes(out)
    }
}

fn check_qubit_count(n: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::QubitCountOutOfRange(n));
    }
    Ok(())
}

fn check_angle(angle: f64) -> Result<()> {
    if !angle.is_finite() {
        return Err(Error::NonFiniteAngle(angle));
    }
    Ok(())
}

/// Matrix of `exp(-i angle Z / 2)`.
pub fn zrot_matrix(angle: f64) -> [[Complex64; 2]; 2] {
    let zero = Complex64::new(0.0, 0.0);
    [
        [Complex64::from_polar(1.0, -angle / 2.0), zero],
        [zero, Complex64::from_polar(1.0, angle / 2.0)],
    ]
}

/// Matrix of `exp(-i angle X / 2)`.
pub fn xrot_matrix(angle: f64) -> [[Complex64; 2]; 2] {
    let c = Complex64::new((angle / 2.0).cos(), 0.0);
    let s = Complex64::new(0.0, -(angle / 2.0).sin());
    [[c, s], [s, c]]
}

/// `|<a|b>|^2`.
pub fn fidelity(a: &StateVector, b: &StateVector) -> Result<f64> {
    if a.num_qubits != b.num_qubits {
        return Err(Error::SizeMismatch(a.num_qubits, b.num_qubits));
    }
    let inner: Complex64 = a
        .amps
        .iter()
        .zip(&b.amps)
        .map(|(x, y)| x.conj() * y)
        .sum();
    Ok(inner.norm_sqr())
}

/// True iff the states agree up to a global phase, i.e. fidelity >= 1 - tol.
pub fn equal_up_to_global_phase(a: &StateVector, b: &StateVector, tol: f64) -> Result<bool> {
    Ok(fidelity(a, b)? >= 1.0 - tol)
}
