//! Algebraic existence certificate for a CDF subspace in the
//! single-excitation sector.
//!
//! A nonzero CDF subspace exists in V_1 exactly when the coupling matrix Δ
//! has an eigenvector with zero component sum. Eliminating the eigenvector
//! through the shifted leading block Γ(c) = Δ' − cI (Δ' the leading
//! (N−1)×(N−1) submatrix) turns that condition into two scalar polynomial
//! equations in the eigenvalue c,
//!
//!   f(c) = dᵀ adj(Γ(c)) d + det(Γ(c)) (c − Δ_NN),
//!   g(c) = 1ᵀ adj(Γ(c)) d + det(Γ(c)),
//!
//! with d = −(Δ_1N, …, Δ_{N−1,N})ᵀ. The sign of the det term in f makes f
//! equal to −det(Δ − cI), so its roots are precisely the eigenvalues; g
//! encodes the zero-sum constraint. The two share a root iff the resultant
//! of the pair vanishes, which yields a single polynomial relation among
//! the couplings — the certificate that such matrices form a thin
//! (measure-zero) set.
//!
//! Coefficients are recovered by evaluating both polynomials at sample
//! points and solving the interpolation system; the adjugate is never
//! expanded symbolically. Decisions are made on a scale-normalized
//! resultant with an explicit borderline band, and every reported root is
//! validated as a zero-sum eigenpair of Δ before it is believed.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::operators::DeltaMatrix;
use crate::tol::Tolerances;

/// Real polynomial with coefficients in ascending degree order, trimmed so
/// the leading coefficient is nonzero (or the polynomial is empty = zero).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    /// Trim trailing coefficients that are negligible relative to the
    /// largest one.
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        let scale = coeffs.iter().fold(0.0f64, |a, c| a.max(c.abs()));
        let cut = scale * 1e-12;
        while let Some(&last) = coeffs.last() {
            if last.abs() <= cut {
                coeffs.pop();
            } else {
                break;
            }
        }
        Polynomial { coeffs }
    }

    pub fn zero() -> Self {
        Polynomial { coeffs: Vec::new() }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree of the trimmed polynomial; zero for constants and for the
    /// zero polynomial.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn inf_norm(&self) -> f64 {
        self.coeffs.iter().fold(0.0f64, |a, c| a.max(c.abs()))
    }

    /// Monic product Π (x − r_i); handy for building test cases.
    pub fn from_roots(roots: &[f64]) -> Self {
        let mut coeffs = vec![1.0];
        for &r in roots {
            let mut next = vec![0.0; coeffs.len() + 1];
            for (k, &c) in coeffs.iter().enumerate() {
                next[k + 1] += c;
                next[k] -= r * c;
            }
            coeffs = next;
        }
        Polynomial::new(coeffs)
    }

    /// Real roots from the companion matrix of the monic normalization.
    pub fn real_roots(&self) -> Vec<f64> {
        if self.coeffs.len() < 2 {
            return Vec::new();
        }
        let deg = self.degree();
        let lead = *self.coeffs.last().expect("nonempty");
        let mut companion = DMatrix::<f64>::zeros(deg, deg);
        for i in 1..deg {
            companion[(i, i - 1)] = 1.0;
        }
        for i in 0..deg {
            companion[(i, deg - 1)] = -self.coeffs[i] / lead;
        }
        let eigen = companion.complex_eigenvalues();
        let mut roots: Vec<f64> = eigen
            .iter()
            .filter(|z| z.im.abs() <= 1e-7 * (1.0 + z.re.abs()))
            .map(|z| z.re)
            .collect();
        roots.sort_by(|a, b| a.partial_cmp(b).expect("finite roots"));
        roots
    }
}

/// The shifted leading principal block Γ(c) with entries Δ_ij − c δ_ij for
/// 1 ≤ i, j ≤ N−1.
pub fn gamma_matrix(delta: &DeltaMatrix, c: f64) -> DMatrix<f64> {
    let n = delta.n();
    let k = n.saturating_sub(1);
    DMatrix::from_fn(k, k, |i, j| {
        delta.as_matrix()[(i, j)] - if i == j { c } else { 0.0 }
    })
}

/// Evaluate f and g at a single shift using an LU factorization of Γ(c):
/// adj(Γ)·d = det(Γ)·Γ⁻¹d wherever Γ is invertible. Returns `None` at
/// (numerically) singular shifts so the caller can move the sample point.
fn eval_fg_at(delta: &DeltaMatrix, c: f64) -> Option<(f64, f64)> {
    let n = delta.n();
    let gamma = gamma_matrix(delta, c);
    let d = nalgebra::DVector::<f64>::from_fn(n - 1, |i, _| -delta.as_matrix()[(i, n - 1)]);
    let lu = gamma.lu();
    let det = lu.determinant();
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    let y = lu.solve(&d)?;
    let corner = delta.as_matrix()[(n - 1, n - 1)];
    let f = det * (d.dot(&y) + c - corner);
    let g = det * (y.sum() + 1.0);
    Some((f, g))
}

/// Recover the polynomial pair by sampling and interpolation. The degree
/// bounds are deg f ≤ N and deg g ≤ N−1.
pub fn build_fg(delta: &DeltaMatrix) -> Result<(Polynomial, Polynomial)> {
    let n = delta.n();
    if n < 2 {
        return Err(Error::argument(
            "the single-excitation certificate needs at least two sites",
        ));
    }
    let radius = 1.0 + row_sum_norm(delta);
    let f = interpolate(delta, n, radius, 0.0)?;
    let g_full = interpolate_g(delta, n - 1, radius, 0.0)?;
    Ok((f, g_full))
}

fn row_sum_norm(delta: &DeltaMatrix) -> f64 {
    let m = delta.as_matrix();
    (0..m.nrows())
        .map(|i| m.row(i).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0f64, f64::max)
}

fn chebyshev_nodes(count: usize, radius: f64, shift: f64) -> Vec<f64> {
    (0..count)
        .map(|k| shift + radius * ((k as f64 + 0.5) * std::f64::consts::PI / count as f64).cos())
        .collect()
}

fn interpolate(delta: &DeltaMatrix, degree: usize, radius: f64, shift: f64) -> Result<Polynomial> {
    interpolate_with(delta, degree, radius, shift, |vals| vals.0)
}

fn interpolate_g(delta: &DeltaMatrix, degree: usize, radius: f64, shift: f64) -> Result<Polynomial> {
    interpolate_with(delta, degree, radius, shift, |vals| vals.1)
}

fn interpolate_with(
    delta: &DeltaMatrix,
    degree: usize,
    radius: f64,
    shift: f64,
    pick: fn((f64, f64)) -> f64,
) -> Result<Polynomial> {
    let count = degree + 1;
    // det Γ has at most N−1 roots, so a shifted node set succeeds quickly.
    for attempt in 0..16 {
        let offset = shift + attempt as f64 * radius * 0.618_033_988_749_894_9e-2;
        let nodes = chebyshev_nodes(count, radius, offset);
        let mut values = Vec::with_capacity(count);
        let mut ok = true;
        for &c in &nodes {
            match eval_fg_at(delta, c) {
                Some(v) => values.push(pick(v)),
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            continue;
        }
        let vander = DMatrix::from_fn(count, count, |r, pow| nodes[r].powi(pow as i32));
        let rhs = nalgebra::DVector::from_vec(values);
        if let Some(coeffs) = vander.lu().solve(&rhs) {
            return Ok(Polynomial::new(coeffs.iter().cloned().collect()));
        }
    }
    Err(Error::numerical(
        "interpolation nodes kept hitting singular shifts",
    ))
}

/// Sylvester matrix of the pair, with descending coefficients; size
/// (deg f + deg g)². Defined for nonzero, nonconstant inputs.
pub fn sylvester_matrix(f: &Polynomial, g: &Polynomial) -> Result<DMatrix<f64>> {
    if f.is_zero() || g.is_zero() {
        return Err(Error::argument("Sylvester matrix of a zero polynomial"));
    }
    let m = f.degree();
    let n = g.degree();
    if m + n == 0 {
        return Err(Error::argument("Sylvester matrix of two constants"));
    }
    let size = m + n;
    let mut s = DMatrix::<f64>::zeros(size, size);
    // n staggered rows of f's coefficients, then m rows of g's.
    for row in 0..n {
        for (k, &c) in f.coeffs().iter().rev().enumerate() {
            s[(row, row + k)] = c;
        }
    }
    for row in 0..m {
        for (k, &c) in g.coeffs().iter().rev().enumerate() {
            s[(n + row, row + k)] = c;
        }
    }
    Ok(s)
}

/// Resultant of the pair: the determinant of their Sylvester matrix, which
/// vanishes exactly when they share a root. Constants resolve to the
/// closed-form lc^deg; a zero polynomial against anything nonzero shares
/// all of its roots, hence resultant zero; two zero polynomials are
/// rejected as degenerate input.
pub fn resultant(f: &Polynomial, g: &Polynomial) -> Result<f64> {
    if f.is_zero() && g.is_zero() {
        return Err(Error::argument("resultant of two zero polynomials"));
    }
    if f.is_zero() || g.is_zero() {
        return Ok(0.0);
    }
    let (m, n) = (f.degree(), g.degree());
    if m == 0 {
        return Ok(f.coeffs()[0].powi(n as i32));
    }
    if n == 0 {
        return Ok(g.coeffs()[0].powi(m as i32));
    }
    let s = sylvester_matrix(f, g)?;
    Ok(s.lu().determinant())
}

/// Existence decision for the single-excitation CDF subspace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    CdfsExists,
    None,
    Borderline,
}

/// Everything the certificate produced, including the polynomials and the
/// validated common roots (eigenvalues of Δ with zero-sum eigenvectors).
#[derive(Debug, Clone, Serialize)]
pub struct ResultantReport {
    pub schema: u32,
    pub f: Polynomial,
    pub g: Polynomial,
    pub resultant_value: f64,
    /// |resultant| of the max-normalized coupling matrix, divided by
    /// ‖f‖^deg g · ‖g‖^deg f; scale-free by construction.
    pub normalized_resultant: f64,
    pub decision: Decision,
    pub common_roots: Vec<f64>,
    /// The derivation assumes a simple spectrum; degenerate couplings are
    /// decided by the eigenvalue-degeneracy witness instead.
    pub degenerate_spectrum: bool,
}

/// Smallest singular value of the stacked system [Δ − cI; 1ᵀ]: near zero
/// exactly when Δ has an eigenvector with eigenvalue c and zero component
/// sum. Avoids the division hidden in the Γ⁻¹ elimination when Γ(c) is
/// singular at the candidate root.
pub fn zero_sum_root_residual(delta: &DeltaMatrix, c: f64) -> f64 {
    let n = delta.n();
    let mut stacked = DMatrix::<f64>::zeros(n + 1, n);
    for i in 0..n {
        for j in 0..n {
            stacked[(i, j)] = delta.as_matrix()[(i, j)] - if i == j { c } else { 0.0 };
        }
    }
    for j in 0..n {
        stacked[(n, j)] = 1.0;
    }
    let svd = stacked.svd(false, false);
    svd.singular_values
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// Run the full certificate on a coupling matrix.
pub fn cdfs_exists_v1(delta: &DeltaMatrix, tol: &Tolerances) -> Result<ResultantReport> {
    let n = delta.n();
    if n < 2 {
        return Err(Error::argument(
            "the single-excitation certificate needs at least two sites",
        ));
    }
    let scale = delta.max_abs();
    let (f, g) = build_fg(delta)?;
    let resultant_value = resultant(&f, &g).unwrap_or(0.0);

    if scale == 0.0 {
        // Zero coupling: every vector is an eigenvector, the zero-sum
        // hyperplane is all CDF.
        return Ok(ResultantReport {
            schema: 1,
            f,
            g,
            resultant_value,
            normalized_resultant: 0.0,
            decision: Decision::CdfsExists,
            common_roots: vec![0.0],
            degenerate_spectrum: true,
        });
    }

    // All decisions run on the max-normalized matrix so that Δ and sΔ are
    // treated identically; roots are mapped back at the end.
    let normalized = delta.scaled(1.0 / scale);
    let (fn_, gn_) = build_fg(&normalized)?;
    let res_n = resultant(&fn_, &gn_).unwrap_or(0.0);
    let denom = fn_.inf_norm().powi(gn_.degree() as i32) * gn_.inf_norm().powi(fn_.degree() as i32);
    let normalized_resultant = if denom > 0.0 {
        res_n.abs() / denom
    } else {
        0.0
    };

    let eig = normalized.as_matrix().clone().symmetric_eigen();
    let mut eigenvalues: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
    eigenvalues.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
    let radius = eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let cluster_tol = tol.cluster_threshold(radius.max(f64::MIN_POSITIVE));
    let degenerate = eigenvalues.windows(2).any(|w| w[1] - w[0] <= cluster_tol);

    if degenerate {
        // A repeated eigenvalue always leaves a zero-sum combination in
        // its eigenspace; report the clustered values as the roots.
        let mut roots = Vec::new();
        let mut i = 0;
        while i < eigenvalues.len() {
            let mut j = i + 1;
            while j < eigenvalues.len() && eigenvalues[j] - eigenvalues[j - 1] <= cluster_tol {
                j += 1;
            }
            if j - i >= 2 {
                let mean = eigenvalues[i..j].iter().sum::<f64>() / (j - i) as f64;
                if zero_sum_root_residual(&normalized, mean) <= tol.root_residual.max(cluster_tol) {
                    roots.push(mean * scale);
                }
            }
            i = j;
        }
        let decision = if roots.is_empty() {
            Decision::Borderline
        } else {
            Decision::CdfsExists
        };
        return Ok(ResultantReport {
            schema: 1,
            f,
            g,
            resultant_value,
            normalized_resultant,
            decision,
            common_roots: roots,
            degenerate_spectrum: true,
        });
    }

    let decision;
    let mut roots = Vec::new();
    if normalized_resultant <= tol.resultant {
        // Candidate common roots: real roots of g, filtered by |f| and
        // validated as zero-sum eigenpairs.
        let f_scale = fn_.inf_norm();
        for cand in gn_.real_roots() {
            let f_val = fn_.eval(cand).abs();
            if f_val > 1e-6 * f_scale * (1.0 + cand.abs()).powi(fn_.degree() as i32) {
                continue;
            }
            // Snap to the nearest eigenvalue before the residual test.
            let nearest = eigenvalues
                .iter()
                .cloned()
                .min_by(|a, b| {
                    (a - cand).abs().partial_cmp(&(b - cand).abs()).expect("finite")
                })
                .unwrap_or(cand);
            let snapped = if (nearest - cand).abs() <= 1e-4 * (1.0 + cand.abs()) {
                nearest
            } else {
                cand
            };
            if zero_sum_root_residual(&normalized, snapped) <= tol.root_residual {
                let root = snapped * scale;
                if roots
                    .iter()
                    .all(|&r: &f64| (r - root).abs() > 1e-9 * (1.0 + root.abs()))
                {
                    roots.push(root);
                }
            }
        }
        decision = if roots.is_empty() {
            Decision::Borderline
        } else {
            Decision::CdfsExists
        };
    } else if normalized_resultant <= tol.resultant_borderline {
        decision = Decision::Borderline;
    } else {
        decision = Decision::None;
    }

    roots.sort_by(|a, b| a.partial_cmp(b).expect("finite roots"));
    Ok(ResultantReport {
        schema: 1,
        f,
        g,
        resultant_value,
        normalized_resultant,
        decision,
        common_roots: roots,
        degenerate_spectrum: false,
    })
}
