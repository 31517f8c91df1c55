//! The open-system specification: coupling matrix, decay rate and the
//! operators derived from them.

use crate::error::{Error, Result};
use crate::linalg::{hermitian_residual, max_abs, CMatrix};
use crate::operators::{collective_operators, hamiltonian, DeltaMatrix, QubitCount};
use crate::tol::Tolerances;

/// A collectively damped qubit array: the exchange Hamiltonian
/// H = Σ_ij Δ_ij S^i_+ S^j_- together with the single Lindblad generator
/// S_- at decay rate κ,
///
///   ρ̇ = −i[H, ρ] + κ (S_- ρ S_+ − ½{S_+ S_-, ρ}).
#[derive(Debug, Clone)]
pub struct LindbladModel {
    n: QubitCount,
    delta: DeltaMatrix,
    kappa: f64,
    h: CMatrix,
    s_minus: CMatrix,
    s_plus: CMatrix,
}

impl LindbladModel {
    pub fn new(delta: DeltaMatrix, kappa: f64) -> Result<Self> {
        let n = QubitCount::new(delta.n())?;
        Self::build(n, delta, kappa)
    }

    /// Like [`LindbladModel::new`] with a caller-chosen qubit cap.
    pub fn with_max_qubits(delta: DeltaMatrix, kappa: f64, n_max: usize) -> Result<Self> {
        let n = QubitCount::with_max(delta.n(), n_max)?;
        Self::build(n, delta, kappa)
    }

    fn build(n: QubitCount, delta: DeltaMatrix, kappa: f64) -> Result<Self> {
        if !(kappa >= 0.0) || !kappa.is_finite() {
            return Err(Error::argument(format!(
                "decay rate must be finite and nonnegative, got {kappa}"
            )));
        }
        let h = hamiltonian(n, &delta)?;
        debug_assert!(hermitian_residual(&h) <= 1e-10 * max_abs(&h).max(1.0));
        let ops = collective_operators(n);
        Ok(LindbladModel {
            n,
            delta,
            kappa,
            h,
            s_minus: ops.s_minus,
            s_plus: ops.s_plus,
        })
    }

    pub fn n(&self) -> QubitCount {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.n.dim()
    }

    pub fn delta(&self) -> &DeltaMatrix {
        &self.delta
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn hamiltonian(&self) -> &CMatrix {
        &self.h
    }

    pub fn s_minus(&self) -> &CMatrix {
        &self.s_minus
    }

    pub fn s_plus(&self) -> &CMatrix {
        &self.s_plus
    }

    /// The same bath with the coherent part scaled by `eps` (Δ → εΔ).
    pub fn with_hamiltonian_scaled(&self, eps: f64) -> Self {
        let mut out = self.clone();
        out.delta = self.delta.scaled(eps);
        out.h = &self.h * crate::linalg::cr(eps);
        out
    }

    /// The same coherent dynamics with the decay rate scaled by `eps`.
    pub fn with_kappa_scaled(&self, eps: f64) -> Self {
        let mut out = self.clone();
        out.kappa = self.kappa * eps;
        out
    }

    /// Hermiticity check of the derived Hamiltonian against the given
    /// tolerances; the constructor guarantees this for valid couplings.
    pub fn hamiltonian_is_hermitian(&self, tol: &Tolerances) -> bool {
        hermitian_residual(&self.h) <= tol.herm_rel * max_abs(&self.h).max(1.0)
    }
}
