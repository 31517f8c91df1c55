//! Operators of the collectively damped qubit array.
//!
//! The system lives on H = (C²)^⊗N with the computational basis ordered by
//! ascending integer value; qubit 1 is the most significant bit, and bit
//! value 1 marks an excited site. Single-site spin components, the
//! collective ladder operators S_± = Σ_i S^i_± and the exchange Hamiltonian
//!
//!   H = Σ_ij Δ_ij S^i_+ S^j_-
//!
//! are all built here, together with the excitation-number (weight)
//! decomposition of the Hilbert space that H leaves invariant.
//!
//! Conventions: the ladder operators lower/raise the excitation count
//! (S^i_-|…1_i…⟩ = |…0_i…⟩), the x/y/z axes return the spin-½ components
//! (half the Pauli matrices, with z = diag(1/2, −1/2) per site), and the
//! collective S_z is the weight operator Σ_b (m(b) − N/2)|b⟩⟨b| so the su(2)
//! ladder relations [S_+, S_-] = 2 S_z and [S_z, S_±] = ±S_± hold entrywise.
//! With the site z listing the ground state first, this makes the collective
//! S_z equal to −Σ_i S^i_z; every kernel and subspace computed downstream is
//! invariant under such sign and scale choices.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, cr, CMatrix};

/// Default cap on the qubit count; dim = 2^8 keeps every dense object and
/// its superoperator within ordinary memory.
pub const DEFAULT_N_MAX: usize = 8;

/// Validated number of qubits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QubitCount {
    n: usize,
}

impl QubitCount {
    /// A qubit count bounded by [`DEFAULT_N_MAX`].
    pub fn new(n: usize) -> Result<Self> {
        Self::with_max(n, DEFAULT_N_MAX)
    }

    /// A qubit count bounded by a caller-chosen limit.
    pub fn with_max(n: usize, n_max: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::argument("qubit count must be at least 1"));
        }
        if n > n_max {
            return Err(Error::argument(format!(
                "qubit count {n} exceeds the configured maximum {n_max}"
            )));
        }
        Ok(QubitCount { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Hilbert-space dimension 2^n.
    pub fn dim(&self) -> usize {
        1 << self.n
    }
}

/// Operator axis selector for [`site_operator`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
    Plus,
    Minus,
}

/// Real symmetric coupling matrix Δ parametrizing the exchange Hamiltonian.
///
/// Symmetry is enforced exactly (bitwise equality of mirrored entries) so
/// that structured ensembles keep their defining ties under serialization.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaMatrix {
    entries: DMatrix<f64>,
}

impl DeltaMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::argument(format!(
                "coupling matrix must be square, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.is_empty() {
            return Err(Error::argument("coupling matrix must be nonempty"));
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::argument("coupling matrix has nonfinite entries"));
        }
        for i in 0..entries.nrows() {
            for j in (i + 1)..entries.ncols() {
                if entries[(i, j)] != entries[(j, i)] {
                    return Err(Error::argument(format!(
                        "coupling matrix is not symmetric at ({i},{j}): {} vs {}",
                        entries[(i, j)],
                        entries[(j, i)]
                    )));
                }
            }
        }
        Ok(DeltaMatrix { entries })
    }

    /// Build from a possibly asymmetric matrix by averaging with its
    /// transpose. Escape hatch for hand-written fixtures.
    pub fn symmetrized(entries: DMatrix<f64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::argument("coupling matrix must be square"));
        }
        let sym = (&entries + entries.transpose()) * 0.5;
        Self::new(sym)
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn scaled(&self, s: f64) -> Self {
        DeltaMatrix {
            entries: &self.entries * s,
        }
    }

    pub fn max_abs(&self) -> f64 {
        crate::linalg::max_abs_real(&self.entries)
    }

    /// Three-site matrix with zero diagonal and off-diagonal couplings
    /// Δ_23 = x1, Δ_13 = x2, Δ_12 = x3 (each opposite its site index).
    pub fn three_site(x1: f64, x2: f64, x3: f64) -> Self {
        let entries = DMatrix::from_row_slice(
            3,
            3,
            &[0.0, x3, x2, x3, 0.0, x1, x2, x1, 0.0],
        );
        DeltaMatrix { entries }
    }

    /// All off-diagonal couplings equal to `x`, zero diagonal.
    pub fn all_equal(n: usize, x: f64) -> Self {
        let entries = DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { x });
        DeltaMatrix { entries }
    }

    /// Four sites on the corners of a square: nearest neighbours coupled by
    /// `side`, the two diagonals by `diagonal`, zero on-site terms. Every
    /// row sums to `2*side + diagonal`, so the all-ones vector is an
    /// eigenvector and its orthogonal complement in the single-excitation
    /// sector is invariant.
    pub fn square_lattice(side: f64, diagonal: f64) -> Self {
        let entries = DMatrix::from_row_slice(
            4,
            4,
            &[
                0.0, side, diagonal, side, //
                side, 0.0, side, diagonal, //
                diagonal, side, 0.0, side, //
                side, diagonal, side, 0.0,
            ],
        );
        DeltaMatrix { entries }
    }
}

fn pauli(axis: Axis) -> CMatrix {
    // Basis order (|0⟩, |1⟩); bit 1 is the excited state.
    match axis {
        Axis::Minus => CMatrix::from_row_slice(2, 2, &[cr(0.0), cr(1.0), cr(0.0), cr(0.0)]),
        Axis::Plus => CMatrix::from_row_slice(2, 2, &[cr(0.0), cr(0.0), cr(1.0), cr(0.0)]),
        Axis::Z => CMatrix::from_row_slice(2, 2, &[cr(0.5), cr(0.0), cr(0.0), cr(-0.5)]),
        Axis::X => CMatrix::from_row_slice(2, 2, &[cr(0.0), cr(0.5), cr(0.5), cr(0.0)]),
        Axis::Y => CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, 0.5), c(0.0, -0.5), c(0.0, 0.0)]),
    }
}

/// Single-site operator I ⊗ … ⊗ σ_axis ⊗ … ⊗ I with σ at `site` (1-based,
/// site 1 on the most significant bit).
pub fn site_operator(n: QubitCount, site: usize, axis: Axis) -> Result<CMatrix> {
    if site == 0 || site > n.n() {
        return Err(Error::argument(format!(
            "site {site} out of range for {} qubits",
            n.n()
        )));
    }
    let left = CMatrix::identity(1 << (site - 1), 1 << (site - 1));
    let right = CMatrix::identity(1 << (n.n() - site), 1 << (n.n() - site));
    Ok(left.kronecker(&pauli(axis)).kronecker(&right))
}

/// The collective ladder operators and the weight operator.
#[derive(Debug, Clone)]
pub struct Collective {
    pub s_minus: CMatrix,
    pub s_plus: CMatrix,
    pub s_z: CMatrix,
}

/// Collective operators S_- = Σ_i S^i_-, S_+ = S_-†, and S_z chosen as the
/// weight operator so that [S_+, S_-] = 2 S_z.
pub fn collective_operators(n: QubitCount) -> Collective {
    let dim = n.dim();
    let mut s_minus = CMatrix::zeros(dim, dim);
    for site in 1..=n.n() {
        s_minus += site_operator(n, site, Axis::Minus).expect("site in range");
    }
    let s_plus = s_minus.adjoint();
    let half_n = n.n() as f64 / 2.0;
    let s_z = CMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            cr(i.count_ones() as f64 - half_n)
        } else {
            cr(0.0)
        }
    });
    Collective { s_minus, s_plus, s_z }
}

/// Diagonal excitation-number operator Σ_b m(b) |b⟩⟨b|.
pub fn excitation_number(n: QubitCount) -> CMatrix {
    let dim = n.dim();
    CMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            cr(i.count_ones() as f64)
        } else {
            cr(0.0)
        }
    })
}

/// Exchange Hamiltonian H = Σ_ij Δ_ij S^i_+ S^j_-.
///
/// Hermitian for symmetric Δ and block diagonal over the weight sectors.
pub fn hamiltonian(n: QubitCount, delta: &DeltaMatrix) -> Result<CMatrix> {
    if delta.n() != n.n() {
        return Err(Error::argument(format!(
            "coupling matrix is {}x{} but the system has {} qubits",
            delta.n(),
            delta.n(),
            n.n()
        )));
    }
    let dim = n.dim();
    let mut minus_ops = Vec::with_capacity(n.n());
    for site in 1..=n.n() {
        minus_ops.push(site_operator(n, site, Axis::Minus)?);
    }
    let mut h = CMatrix::zeros(dim, dim);
    for i in 0..n.n() {
        let plus_i = minus_ops[i].adjoint();
        for j in 0..n.n() {
            let coupling = delta.as_matrix()[(i, j)];
            if coupling != 0.0 {
                h += &plus_i * &minus_ops[j] * cr(coupling);
            }
        }
    }
    Ok(h)
}

/// A fixed-weight sector V_m: the span of computational basis states with
/// exactly `m` excited sites, listed in ascending integer order.
#[derive(Debug, Clone)]
pub struct WeightSector {
    pub m: usize,
    n: QubitCount,
    pub basis_indices: Vec<usize>,
}

impl WeightSector {
    pub fn count(&self) -> usize {
        self.basis_indices.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.n.dim()
    }

    /// The dim × C(N, m) embedding with 0/1 columns; embed† · embed = I.
    pub fn embed(&self) -> CMatrix {
        let mut e = CMatrix::zeros(self.n.dim(), self.count());
        for (col, &idx) in self.basis_indices.iter().enumerate() {
            e[(idx, col)] = cr(1.0);
        }
        e
    }

    /// Orthogonal projector onto the sector.
    pub fn projector(&self) -> CMatrix {
        let dim = self.n.dim();
        let mut p = CMatrix::zeros(dim, dim);
        for &idx in &self.basis_indices {
            p[(idx, idx)] = cr(1.0);
        }
        p
    }
}

/// The m-excitation sector of an n-qubit register.
pub fn weight_sector(n: QubitCount, m: usize) -> Result<WeightSector> {
    if m > n.n() {
        return Err(Error::argument(format!(
            "excitation count {m} out of range for {} qubits",
            n.n()
        )));
    }
    let basis_indices: Vec<usize> = (0..n.dim())
        .filter(|b| b.count_ones() as usize == m)
        .collect();
    Ok(WeightSector {
        m,
        n,
        basis_indices,
    })
}

/// Compression embed† · op · embed of an operator to a weight sector.
pub fn restrict(op: &CMatrix, sector: &WeightSector) -> Result<CMatrix> {
    if op.nrows() != sector.ambient_dim() || op.ncols() != sector.ambient_dim() {
        return Err(Error::argument(format!(
            "operator is {}x{} but the sector lives in dimension {}",
            op.nrows(),
            op.ncols(),
            sector.ambient_dim()
        )));
    }
    let count = sector.count();
    let mut out = CMatrix::zeros(count, count);
    for (r, &ri) in sector.basis_indices.iter().enumerate() {
        for (s, &si) in sector.basis_indices.iter().enumerate() {
            out[(r, s)] = op[(ri, si)];
        }
    }
    Ok(out)
}
