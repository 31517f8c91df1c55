//! Lindblad dynamics and fidelity experiments.
//!
//! The master equation for the collectively damped array is
//!
//!   ρ̇ = −i[H, ρ] + κ (S_- ρ S_+ − ½{S_+ S_-, ρ}).
//!
//! With column-stacking vectorization, vec(AXB) = (Bᵀ ⊗ A) vec(X), the
//! whole generator becomes one dense matrix
//!
//!   L = −i(I ⊗ H − Hᵀ ⊗ I) + κ ( S̄_- ⊗ S_-
//!        − ½ I ⊗ S_+S_- − ½ (S_+S_-)ᵀ ⊗ I ),
//!
//! and ρ(t) = unvec(exp(Lt) vec ρ(0)). Two evolution backends are exposed:
//! the dense matrix exponential (reference) and an adaptive
//! Dormand–Prince integration of the right-hand side (cross-check).
//!
//! Deviation from unitary evolution is tracked by the fidelity
//! F²(t) = ⟨ψ(t)| ρ(t) |ψ(t)⟩ with |ψ(t)⟩ = e^{−iHt}|ψ(0)⟩, which stays at
//! 1 exactly on completely-decoherence-free states. The regime experiments
//! scale either the coherent part (H → εH) or the dissipative part
//! (κ → εκ) and fit how the deficit 1 − F² shrinks with ε; the short-time
//! experiments fit the leading power of 1 − F² in t.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{c, cr, expm, hermitian_residual, max_abs, CMatrix, CVector};
use crate::model::LindbladModel;
use crate::subspace::{full_cdfs, robust_subspace};
use crate::tol::Tolerances;

/// Densities below this floor are indistinguishable from rounding noise in
/// double precision and are excluded from power-law fits.
pub const DEFICIT_FLOOR: f64 = 1e-12;

/// Side length cap for the dense superoperator (dim² ≤ this bound squared
/// entries). 1024 corresponds to five qubits.
pub const DEFAULT_SUPEROP_MAX_SIDE: usize = 1 << 10;

/// A validated density matrix: Hermitian, unit trace, positive
/// semidefinite within tolerances.
#[derive(Debug, Clone)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    /// Strict validation for caller-provided states.
    pub fn try_new(m: CMatrix) -> Result<Self> {
        Self::try_new_with(m, 1e-10, 1e-10, 1e-10)
    }

    /// Validation with explicit trace / positivity / Hermiticity slack,
    /// used along trajectories where the integrator tolerance dominates.
    pub fn try_new_with(
        m: CMatrix,
        trace_tol: f64,
        psd_tol: f64,
        herm_tol: f64,
    ) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::argument("density matrix must be square"));
        }
        let scale = max_abs(&m).max(1.0);
        let herm = hermitian_residual(&m);
        if herm > herm_tol * scale {
            return Err(Error::numerical(format!(
                "density matrix is not Hermitian: residual {herm:.2e}"
            )));
        }
        let trace = m.trace();
        if (trace.re - 1.0).abs() > trace_tol || trace.im.abs() > trace_tol {
            return Err(Error::numerical(format!(
                "density matrix trace is {} + {}i, expected 1",
                trace.re, trace.im
            )));
        }
        let herm_part = (&m + m.adjoint()) * cr(0.5);
        let min_eig = herm_part
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -psd_tol {
            return Err(Error::numerical(format!(
                "density matrix lost positivity: min eigenvalue {min_eig:.2e}"
            )));
        }
        Ok(DensityMatrix(m))
    }

    /// The pure state |ψ⟩⟨ψ| of a normalized vector.
    pub fn pure(psi: &CVector) -> Result<Self> {
        let norm = psi.norm();
        if (norm - 1.0).abs() > 1e-8 {
            return Err(Error::argument(format!(
                "state vector must be normalized, |ψ| = {norm}"
            )));
        }
        let m = psi * psi.adjoint();
        Ok(DensityMatrix(m))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn purity(&self) -> f64 {
        (&self.0 * &self.0).trace().re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.0 + self.0.adjoint()) * cr(0.5);
        herm.symmetric_eigen()
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn expectation(&self, op: &CMatrix) -> f64 {
        (op * &self.0).trace().re
    }
}

/// The dissipative part κ(S_- ρ S_+ − ½{S_+S_-, ρ}); traceless for any ρ.
pub fn dissipator(model: &LindbladModel, rho: &CMatrix) -> CMatrix {
    let sm = model.s_minus();
    let sp = model.s_plus();
    let sps = sp * sm;
    let jump = sm * rho * sp;
    let anti = &sps * rho + rho * &sps;
    (jump - anti * cr(0.5)) * cr(model.kappa())
}

/// Full right-hand side ρ̇ = −i[H, ρ] + dissipator(ρ).
pub fn liouville_rhs(model: &LindbladModel, rho: &CMatrix) -> CMatrix {
    let h = model.hamiltonian();
    let comm = h * rho - rho * h;
    comm * c(0.0, -1.0) + dissipator(model, rho)
}

/// Dense superoperator with the default memory budget.
pub fn superoperator(model: &LindbladModel) -> Result<CMatrix> {
    superoperator_with_limit(model, DEFAULT_SUPEROP_MAX_SIDE)
}

/// Dense superoperator L with vec(ρ̇) = L vec(ρ), column stacking.
pub fn superoperator_with_limit(model: &LindbladModel, max_side: usize) -> Result<CMatrix> {
    let dim = model.dim();
    let side = dim * dim;
    if side > max_side {
        return Err(Error::resource(format!(
            "superoperator side {side} exceeds the budget {max_side}"
        )));
    }
    let id = CMatrix::identity(dim, dim);
    let h = model.hamiltonian();
    let sm = model.s_minus();
    let sp = model.s_plus();
    let sps = sp * sm;

    let mut l = id.kronecker(h) - h.transpose().kronecker(&id);
    l *= c(0.0, -1.0);
    let jump = sm.map(|z| z.conj()).kronecker(sm);
    let left = id.kronecker(&sps);
    let right = sps.transpose().kronecker(&id);
    l += (jump - (left + right) * cr(0.5)) * cr(model.kappa());
    Ok(l)
}

/// Evolution backend selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvolveBackend {
    /// Propagate vec(ρ) with matrix exponentials of the superoperator.
    MatrixExp,
    /// Adaptive Dormand–Prince integration of the right-hand side.
    AdaptiveOde,
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::argument("empty time grid"));
    }
    if times[0] < 0.0 {
        return Err(Error::argument("times must start at t >= 0"));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::argument("times must be strictly ascending"));
    }
    Ok(())
}

/// Evolve a density matrix over the given ascending time grid. Every
/// returned state is validated for trace preservation (1e-9), Hermiticity
/// and positivity (−1e-8); violations abort with diagnostics.
///
/// The matrix-exponential backend assembles the dense superoperator and
/// is subject to its memory budget (five qubits by default); the ODE
/// backend only ever forms dim × dim products and works up to the qubit
/// cap.
pub fn evolve(
    model: &LindbladModel,
    rho0: &DensityMatrix,
    times: &[f64],
    backend: EvolveBackend,
) -> Result<Vec<DensityMatrix>> {
    check_times(times)?;
    if rho0.dim() != model.dim() {
        return Err(Error::argument("state dimension does not match the model"));
    }
    let raw = match backend {
        EvolveBackend::MatrixExp => evolve_expm(model, rho0, times)?,
        EvolveBackend::AdaptiveOde => evolve_ode(model, rho0, times)?,
    };
    let mut out = Vec::with_capacity(raw.len());
    for (k, m) in raw.into_iter().enumerate() {
        let validated = DensityMatrix::try_new_with(m, 1e-9, 1e-8, 1e-8).map_err(|e| {
            Error::numerical(format!("state at t = {} failed validation: {e}", times[k]))
        })?;
        out.push(validated);
    }
    Ok(out)
}

fn evolve_expm(
    model: &LindbladModel,
    rho0: &DensityMatrix,
    times: &[f64],
) -> Result<Vec<CMatrix>> {
    let dim = model.dim();
    let l = superoperator(model)?;
    // Column-major storage means as_slice() is already the column-stacked
    // vectorization.
    let mut vec_state = CVector::from_column_slice(rho0.matrix().as_slice());
    let mut out = Vec::with_capacity(times.len());
    let mut t_prev = 0.0;
    for &t in times {
        let dt = t - t_prev;
        if dt > 0.0 {
            let step = expm(&(&l * cr(dt)));
            vec_state = step * vec_state;
        }
        t_prev = t;
        out.push(CMatrix::from_column_slice(dim, dim, vec_state.as_slice()));
    }
    Ok(out)
}

// Dormand-Prince 5(4) coefficients; the stage times are not needed for an
// autonomous right-hand side.
const DP_B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];
const DP_A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];

fn evolve_ode(
    model: &LindbladModel,
    rho0: &DensityMatrix,
    times: &[f64],
) -> Result<Vec<CMatrix>> {
    let atol = 1e-12;
    let rtol = 1e-10;
    let mut state = rho0.matrix().clone();
    let mut t = 0.0;
    let rate_scale = model.kappa().max(max_abs(model.hamiltonian())).max(1e-3);
    let mut h_step = (1e-3 / rate_scale).min(times[times.len() - 1].max(1e-12));
    let mut out = Vec::with_capacity(times.len());

    for &t_target in times {
        while t < t_target {
            let remaining = t_target - t;
            let dt = h_step.min(remaining);
            let mut k: Vec<CMatrix> = Vec::with_capacity(7);
            k.push(liouville_rhs(model, &state));
            for stage in 0..6 {
                let mut y = state.clone();
                for (j, kj) in k.iter().enumerate() {
                    let a = DP_A[stage][j];
                    if a != 0.0 {
                        y += kj * cr(a * dt);
                    }
                }
                k.push(liouville_rhs(model, &y));
            }
            let mut y5 = state.clone();
            let mut y4 = state.clone();
            for (j, kj) in k.iter().enumerate() {
                if DP_B5[j] != 0.0 {
                    y5 += kj * cr(DP_B5[j] * dt);
                }
                if DP_B4[j] != 0.0 {
                    y4 += kj * cr(DP_B4[j] * dt);
                }
            }
            let scale = atol + rtol * max_abs(&y5).max(max_abs(&state));
            let err = max_abs(&(&y5 - &y4)) / scale;
            if err <= 1.0 {
                t += dt;
                state = y5;
                let grow = if err > 0.0 {
                    0.9 * err.powf(-0.2)
                } else {
                    5.0
                };
                h_step = dt * grow.clamp(0.2, 5.0);
            } else {
                h_step = dt * (0.9 * err.powf(-0.25)).clamp(0.1, 0.9);
                if h_step < 1e-15 * (1.0 + t_target) {
                    return Err(Error::numerical(format!(
                        "adaptive step underflow at t = {t}"
                    )));
                }
            }
        }
        out.push(state.clone());
    }
    Ok(out)
}

/// Evolution regime label carried by a fidelity trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Exact,
    WeakUnitary(f64),
    StrongUnitary(f64),
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Regime::Exact => write!(f, "exact"),
            Regime::WeakUnitary(e) => write!(f, "weak_unitary({e})"),
            Regime::StrongUnitary(e) => write!(f, "strong_unitary({e})"),
        }
    }
}

/// Sampled fidelity-squared curve with provenance metadata.
#[derive(Debug, Clone)]
pub struct FidelityTrace {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub initial_state: String,
    pub regime: Regime,
}

impl FidelityTrace {
    /// CSV with header `t,F2` and 17-significant-digit floats.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,F2")?;
        for (t, v) in self.times.iter().zip(&self.values) {
            writeln!(w, "{:.16e},{:.16e}", t, v)?;
        }
        Ok(())
    }

    /// Largest deviation from unit fidelity over the trace.
    pub fn max_deficit(&self) -> f64 {
        self.values.iter().fold(0.0f64, |a, &v| a.max(1.0 - v))
    }
}

/// Unitary propagation |ψ(t)⟩ = e^{−iHt}|ψ0⟩ through the eigenbasis of H.
struct UnitaryPropagator {
    eigenvalues: Vec<f64>,
    eigenvectors: CMatrix,
    coeffs: CVector,
}

impl UnitaryPropagator {
    fn new(h: &CMatrix, psi0: &CVector) -> Self {
        let eig = h.clone().symmetric_eigen();
        let coeffs = eig.eigenvectors.adjoint() * psi0;
        UnitaryPropagator {
            eigenvalues: eig.eigenvalues.iter().cloned().collect(),
            eigenvectors: eig.eigenvectors,
            coeffs,
        }
    }

    fn at(&self, t: f64) -> CVector {
        let phased = CVector::from_fn(self.coeffs.len(), |k, _| {
            let phase = -self.eigenvalues[k] * t;
            self.coeffs[k] * c(phase.cos(), phase.sin())
        });
        &self.eigenvectors * phased
    }
}

/// F²(t) = ⟨ψ(t)|ρ(t)|ψ(t)⟩ for a pure initial state.
pub fn fidelity_trace(
    model: &LindbladModel,
    psi0: &CVector,
    times: &[f64],
    backend: EvolveBackend,
    label: impl Into<String>,
    regime: Regime,
) -> Result<FidelityTrace> {
    let rho0 = DensityMatrix::pure(psi0)?;
    let states = evolve(model, &rho0, times, backend)?;
    let propagator = UnitaryPropagator::new(model.hamiltonian(), psi0);
    let mut values = Vec::with_capacity(times.len());
    for (&t, rho) in times.iter().zip(&states) {
        let psi_t = propagator.at(t);
        let f2 = (psi_t.adjoint() * rho.matrix() * &psi_t)[(0, 0)].re;
        if f2 > 1.0 + 1e-9 {
            return Err(Error::numerical(format!(
                "fidelity exceeded one at t = {t}: F² = {f2}"
            )));
        }
        values.push(f2);
    }
    Ok(FidelityTrace {
        times: times.to_vec(),
        values,
        initial_state: label.into(),
        regime,
    })
}

/// Which part of the generator a regime experiment rescales.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegimeKind {
    /// H → εH: the coherent part is the perturbation.
    WeakUnitary,
    /// κ → εκ: the dissipator is the perturbation.
    StrongUnitary,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegimeRow {
    pub epsilon: f64,
    pub deficit: f64,
}

/// Deficit-versus-ε table with the fitted scaling exponent.
#[derive(Debug, Clone, Serialize)]
pub struct RegimeTable {
    pub rows: Vec<RegimeRow>,
    /// Slope of log deficit against log ε over rows above the noise
    /// floor; `None` when fewer than three rows survive.
    pub fitted_exponent: Option<f64>,
}

/// Scan the deficit 1 − F²(t_fixed) over a descending list of scale
/// factors ε. The initial state must be decoherence-free.
pub fn regime_experiment(
    model: &LindbladModel,
    psi0: &CVector,
    kind: RegimeKind,
    epsilons: &[f64],
    t_fixed: f64,
    backend: EvolveBackend,
) -> Result<RegimeTable> {
    if epsilons.is_empty() {
        return Err(Error::argument("empty epsilon list"));
    }
    if epsilons.iter().any(|&e| e <= 0.0) {
        return Err(Error::argument("epsilons must be positive"));
    }
    if epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::argument("epsilons must be strictly descending"));
    }
    let df_residual = (model.s_minus() * psi0).norm();
    if df_residual > 1e-8 * max_abs(model.s_minus()).max(1.0) {
        return Err(Error::argument(format!(
            "initial state is not decoherence-free: |S_- ψ| = {df_residual:.2e}"
        )));
    }
    let mut rows = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        let scaled = match kind {
            RegimeKind::WeakUnitary => model.with_hamiltonian_scaled(eps),
            RegimeKind::StrongUnitary => model.with_kappa_scaled(eps),
        };
        let regime = match kind {
            RegimeKind::WeakUnitary => Regime::WeakUnitary(eps),
            RegimeKind::StrongUnitary => Regime::StrongUnitary(eps),
        };
        let trace = fidelity_trace(&scaled, psi0, &[t_fixed], backend, "regime scan", regime)?;
        rows.push(RegimeRow {
            epsilon: eps,
            deficit: (1.0 - trace.values[0]).max(0.0),
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.epsilon).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.deficit).collect();
    let fitted_exponent = fit_power_law(&xs, &ys, DEFICIT_FLOOR).map(|f| f.exponent);
    Ok(RegimeTable {
        rows,
        fitted_exponent,
    })
}

/// Least-squares power-law fit y ≈ C xᵖ on a log-log scale.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ExponentFit {
    pub exponent: f64,
    pub std_error: f64,
    pub points_used: usize,
}

/// Fit the exponent over the samples with y above `floor`; needs at least
/// three surviving points.
pub fn fit_power_law(xs: &[f64], ys: &[f64], floor: f64) -> Option<ExponentFit> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(&x, &y)| x > 0.0 && y > floor)
        .map(|(&x, &y)| (x.ln(), y.ln()))
        .collect();
    let n = pts.len();
    if n < 3 {
        return None;
    }
    let nf = n as f64;
    let mean_x = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let mean_y = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res: f64 = pts
        .iter()
        .map(|p| (p.1 - (slope * p.0 + intercept)).powi(2))
        .sum();
    let std_error = if n > 2 {
        (ss_res / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Some(ExponentFit {
        exponent: slope,
        std_error,
        points_used: n,
    })
}

/// Log-spaced time grid, endpoints included.
pub fn log_spaced_times(t_min: f64, t_max: f64, points: usize) -> Vec<f64> {
    assert!(t_min > 0.0 && t_max > t_min && points >= 2);
    let (a, b) = (t_min.ln(), t_max.ln());
    (0..points)
        .map(|k| (a + (b - a) * k as f64 / (points - 1) as f64).exp())
        .collect()
}

/// Short-time protection order of the order-k robust subspace: pick a
/// robust state outside the exactly protected subspace, evolve it, and fit
/// the leading power of 1 − F²(t). Returns `None` when every robust state
/// is exactly protected (deficits below the noise floor, "infinite"
/// order).
pub fn robustness_order_check(
    model: &LindbladModel,
    order_k: usize,
    times: &[f64],
    backend: EvolveBackend,
    tol: &Tolerances,
) -> Result<Option<ExponentFit>> {
    let robust = robust_subspace(model, order_k, tol)?;
    if robust.dim() == 0 {
        return Err(Error::argument(format!(
            "robust subspace of order {order_k} is zero"
        )));
    }
    let exact = full_cdfs(model, tol)?;
    let decaying = robust.complement_within(&exact, tol);
    if decaying.dim() == 0 {
        return Ok(None);
    }
    let psi0 = decaying.column(0)?;
    let trace = fidelity_trace(model, &psi0, times, backend, "robust state", Regime::Exact)?;
    let deficits: Vec<f64> = trace.values.iter().map(|v| (1.0 - v).max(0.0)).collect();
    if deficits.iter().all(|&d| d <= DEFICIT_FLOOR) {
        return Ok(None);
    }
    Ok(fit_power_law(&trace.times, &deficits, DEFICIT_FLOOR))
}
