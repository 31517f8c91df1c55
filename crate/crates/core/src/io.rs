//! External formats: the coupling-matrix JSON file, the initial-state
//! mini-language, and the versioned analysis report.
//!
//! Coupling matrices travel as `{"n": N, "delta": [[...], ...]}` with
//! row-major rows; symmetry is validated exactly on load unless the caller
//! asks for symmetrization. Complex amplitudes serialize as `[re, im]`
//! pairs. Report objects carry `"schema": 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, cr, CVector};
use crate::model::LindbladModel;
use crate::operators::DeltaMatrix;
use crate::subspace::{
    analyze_sectors, cdfs_invariant, degeneracy_witness, dfs_basis, robust_subspace,
    DegeneracyReport, Subspace,
};
use crate::tol::Tolerances;

#[derive(Debug, Serialize, Deserialize)]
struct DeltaFile {
    n: usize,
    delta: Vec<Vec<f64>>,
}

/// Parse a coupling matrix from its JSON form. `symmetrize` averages the
/// matrix with its transpose instead of rejecting asymmetric input.
pub fn delta_from_json(text: &str, symmetrize: bool) -> Result<DeltaMatrix> {
    let file: DeltaFile = serde_json::from_str(text)
        .map_err(|e| Error::argument(format!("malformed coupling-matrix JSON: {e}")))?;
    if file.delta.len() != file.n || file.delta.iter().any(|row| row.len() != file.n) {
        return Err(Error::argument(format!(
            "declared size {} does not match the matrix rows",
            file.n
        )));
    }
    let flat: Vec<f64> = file.delta.iter().flatten().cloned().collect();
    let m = nalgebra::DMatrix::from_row_slice(file.n, file.n, &flat);
    if symmetrize {
        DeltaMatrix::symmetrized(m)
    } else {
        DeltaMatrix::new(m)
    }
}

pub fn delta_to_json(delta: &DeltaMatrix) -> String {
    let n = delta.n();
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| delta.as_matrix()[(i, j)]).collect())
        .collect();
    serde_json::to_string_pretty(&DeltaFile { n, delta: rows }).expect("serializable")
}

pub fn load_delta(path: &std::path::Path, symmetrize: bool) -> Result<DeltaMatrix> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::argument(format!("cannot read {}: {e}", path.display())))?;
    delta_from_json(&text, symmetrize)
}

/// Resolve an initial-state specification against a model:
///
/// * `ground` — the all-zeros basis state,
/// * `basis:BITS` — a computational basis state, qubit 1 leftmost,
/// * `dfs:m:k` — the k-th DF basis vector of sector m (0-based),
/// * `cdfs:m:k` — the k-th CDF basis vector of sector m,
/// * a JSON array of amplitudes, each a number or an `[re, im]` pair,
///   normalized on load.
pub fn parse_state_spec(spec: &str, model: &LindbladModel, tol: &Tolerances) -> Result<CVector> {
    let dim = model.dim();
    if spec == "ground" {
        let mut v = CVector::zeros(dim);
        v[0] = cr(1.0);
        return Ok(v);
    }
    if let Some(bits) = spec.strip_prefix("basis:") {
        if bits.len() != model.n().n() || bits.chars().any(|ch| ch != '0' && ch != '1') {
            return Err(Error::argument(format!(
                "basis spec needs {} binary digits, got `{bits}`",
                model.n().n()
            )));
        }
        let idx = usize::from_str_radix(bits, 2).expect("validated digits");
        let mut v = CVector::zeros(dim);
        v[idx] = cr(1.0);
        return Ok(v);
    }
    if let Some(rest) = spec.strip_prefix("dfs:") {
        let (m, k) = parse_sector_index(rest)?;
        let sub = dfs_basis(model, m, tol)?;
        return subspace_column(&sub, k, "DF");
    }
    if let Some(rest) = spec.strip_prefix("cdfs:") {
        let (m, k) = parse_sector_index(rest)?;
        let dfs = dfs_basis(model, m, tol)?;
        let sub = cdfs_invariant(model, &dfs, tol)?;
        return subspace_column(&sub, k, "CDF");
    }
    if spec.trim_start().starts_with('[') {
        return parse_amplitude_vector(spec, dim);
    }
    Err(Error::argument(format!(
        "unrecognized state spec `{spec}`; expected ground, basis:BITS, dfs:m:k, cdfs:m:k or a JSON amplitude array"
    )))
}

fn parse_sector_index(rest: &str) -> Result<(usize, usize)> {
    let mut parts = rest.splitn(2, ':');
    let m = parts
        .next()
        .and_then(|s| s.parse::<usize>().ok())
        .ok_or_else(|| Error::argument(format!("malformed sector in `{rest}`")))?;
    let k = parts
        .next()
        .and_then(|s| s.parse::<usize>().ok())
        .ok_or_else(|| Error::argument(format!("malformed index in `{rest}`")))?;
    Ok((m, k))
}

fn subspace_column(sub: &Subspace, k: usize, what: &str) -> Result<CVector> {
    if k >= sub.dim() {
        return Err(Error::argument(format!(
            "{what} subspace has dimension {}, index {k} out of range",
            sub.dim()
        )));
    }
    sub.column(k)
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum AmplitudeEntry {
    Real(f64),
    Pair([f64; 2]),
}

fn parse_amplitude_vector(text: &str, dim: usize) -> Result<CVector> {
    let entries: Vec<AmplitudeEntry> = serde_json::from_str(text)
        .map_err(|e| Error::argument(format!("malformed amplitude array: {e}")))?;
    if entries.len() != dim {
        return Err(Error::argument(format!(
            "amplitude array has {} entries, the space has dimension {dim}",
            entries.len()
        )));
    }
    let mut v = CVector::from_fn(dim, |i, _| match entries[i] {
        AmplitudeEntry::Real(re) => cr(re),
        AmplitudeEntry::Pair([re, im]) => c(re, im),
    });
    let norm = v.norm();
    if norm < 1e-12 {
        return Err(Error::argument("amplitude array is numerically zero"));
    }
    v /= cr(norm);
    Ok(v)
}

/// Complex column serialized as `[re, im]` pairs.
pub fn vector_to_pairs(v: &CVector) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

/// Basis serialized column by column.
pub fn basis_to_pairs(sub: &Subspace) -> Vec<Vec<[f64; 2]>> {
    (0..sub.dim())
        .map(|k| vector_to_pairs(&sub.basis().column(k).into_owned()))
        .collect()
}

#[derive(Debug, Serialize)]
pub struct SectorReport {
    pub m: usize,
    pub sector_dim: usize,
    pub dfs_dim: usize,
    pub cdfs_dim: usize,
    pub dfs_basis: Vec<Vec<[f64; 2]>>,
    pub cdfs_basis: Vec<Vec<[f64; 2]>>,
}

#[derive(Debug, Serialize)]
pub struct RobustEntry {
    pub order: usize,
    pub dim: usize,
}

/// The `analyze` report: DF/CDF structure per sector, the eigenvalue
/// degeneracy witness, and robust-subspace dimensions up to the requested
/// order.
#[derive(Debug, Serialize)]
pub struct AnalyzeReport {
    pub schema: u32,
    pub n: usize,
    pub tolerances: Tolerances,
    pub sectors: Vec<SectorReport>,
    pub degeneracy: DegeneracyReport,
    pub robust: Vec<RobustEntry>,
}

pub fn analyze_report(
    model: &LindbladModel,
    sector: Option<usize>,
    robust_order: Option<usize>,
    tol: &Tolerances,
) -> Result<AnalyzeReport> {
    let sectors = analyze_sectors(model, sector, tol)?
        .into_iter()
        .map(|s| SectorReport {
            m: s.m,
            sector_dim: s.sector_dim,
            dfs_dim: s.dfs.dim(),
            cdfs_dim: s.cdfs.dim(),
            dfs_basis: basis_to_pairs(&s.dfs),
            cdfs_basis: basis_to_pairs(&s.cdfs),
        })
        .collect();
    let degeneracy = degeneracy_witness(model.delta(), tol);
    let mut robust = Vec::new();
    if let Some(k_max) = robust_order {
        for k in 1..=k_max {
            let sub = robust_subspace(model, k, tol)?;
            robust.push(RobustEntry {
                order: k,
                dim: sub.dim(),
            });
        }
    }
    Ok(AnalyzeReport {
        schema: 1,
        n: model.n().n(),
        tolerances: tol.clone(),
        sectors,
        degeneracy,
        robust,
    })
}
