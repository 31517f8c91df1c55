//! Monte-Carlo studies of how rare CDF-admitting coupling matrices are.
//!
//! Unstructured draws (Gaussian symmetric) essentially never admit a CDF
//! subspace at double precision, while structured families — all
//! off-diagonal couplings equal, or the square-lattice side/diagonal
//! pattern — admit one for every draw. The study runs one or both
//! detectors per sample:
//!
//! * `subspace`: the DF kernel plus maximal-invariant-subspace pipeline in
//!   the single-excitation sector,
//! * `resultant`: the polynomial certificate on the coupling matrix,
//!
//! counts hits and borderline samples, and records any disagreement
//! between detectors outside the declared borderline bands (there should
//! be none).
//!
//! All randomness flows through a seeded ChaCha (8-round) generator, so a
//! report is reproducible from its `(kind, n, scale, seed)` tuple alone.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::LindbladModel;
use crate::operators::DeltaMatrix;
use crate::resultant::{cdfs_exists_v1, Decision};
use crate::subspace::{cdfs_invariant_with_margin, dfs_basis_with_margin};
use crate::tol::Tolerances;

/// Families of coupling matrices the sampler can draw from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleKind {
    /// Independent N(0, scale²) entries on the upper triangle (diagonal
    /// included), mirrored exactly.
    GaussianSymmetric,
    /// Zero diagonal, independent off-diagonal couplings except one
    /// randomly chosen pair of slots tied to a single value.
    EqualOffdiagonalPair,
    /// Zero diagonal, every off-diagonal coupling equal to one draw.
    AllEqual,
    /// Four sites on a square: one draw for the sides, one for the
    /// diagonals (constant row sums).
    SquareLattice,
    /// Placeholder for externally supplied matrices; not sampleable.
    UserMatrix,
}

impl std::fmt::Display for EnsembleKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            EnsembleKind::GaussianSymmetric => "gaussian_symmetric",
            EnsembleKind::EqualOffdiagonalPair => "equal_offdiagonal_pair",
            EnsembleKind::AllEqual => "all_equal",
            EnsembleKind::SquareLattice => "square_lattice",
            EnsembleKind::UserMatrix => "user_matrix",
        };
        write!(f, "{name}")
    }
}

impl std::str::FromStr for EnsembleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian_symmetric" => Ok(EnsembleKind::GaussianSymmetric),
            "equal_offdiagonal_pair" => Ok(EnsembleKind::EqualOffdiagonalPair),
            "all_equal" => Ok(EnsembleKind::AllEqual),
            "square_lattice" => Ok(EnsembleKind::SquareLattice),
            "user_matrix" => Ok(EnsembleKind::UserMatrix),
            other => Err(Error::argument(format!("unknown ensemble kind `{other}`"))),
        }
    }
}

/// Sampling domain: family, size, overall scale and RNG seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub kind: EnsembleKind,
    pub n: usize,
    pub scale: f64,
    pub seed: u64,
}

impl EnsembleSpec {
    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

fn normal(rng: &mut ChaCha8Rng, scale: f64) -> f64 {
    let x: f64 = StandardNormal.sample(rng);
    scale * x
}

/// Draw one coupling matrix. Structured kinds impose their defining ties
/// bit-identically (the tied entries are the same f64).
pub fn sample_delta(spec: &EnsembleSpec, rng: &mut ChaCha8Rng) -> Result<DeltaMatrix> {
    if spec.n < 2 {
        return Err(Error::argument("ensembles need at least two sites"));
    }
    if !(spec.scale > 0.0) {
        return Err(Error::argument("ensemble scale must be positive"));
    }
    let n = spec.n;
    match spec.kind {
        EnsembleKind::GaussianSymmetric => {
            let mut m = nalgebra::DMatrix::<f64>::zeros(n, n);
            for i in 0..n {
                for j in i..n {
                    let v = normal(rng, spec.scale);
                    m[(i, j)] = v;
                    m[(j, i)] = v;
                }
            }
            DeltaMatrix::new(m)
        }
        EnsembleKind::AllEqual => Ok(DeltaMatrix::all_equal(n, normal(rng, spec.scale))),
        EnsembleKind::EqualOffdiagonalPair => {
            let slots: Vec<(usize, usize)> = (0..n)
                .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
                .collect();
            if slots.len() < 2 {
                return Err(Error::argument(
                    "tied-pair ensemble needs at least three sites",
                ));
            }
            let first = rng.random_range(0..slots.len());
            let mut second = rng.random_range(0..slots.len() - 1);
            if second >= first {
                second += 1;
            }
            let tied_value = normal(rng, spec.scale);
            let mut m = nalgebra::DMatrix::<f64>::zeros(n, n);
            for (idx, &(i, j)) in slots.iter().enumerate() {
                let v = if idx == first || idx == second {
                    tied_value
                } else {
                    normal(rng, spec.scale)
                };
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
            DeltaMatrix::new(m)
        }
        EnsembleKind::SquareLattice => {
            if n != 4 {
                return Err(Error::argument("the square-lattice ensemble is four sites"));
            }
            Ok(DeltaMatrix::square_lattice(
                normal(rng, spec.scale),
                normal(rng, spec.scale),
            ))
        }
        EnsembleKind::UserMatrix => Err(Error::argument(
            "user_matrix is not a sampleable ensemble; analyze the file directly",
        )),
    }
}

/// Which detector(s) a study runs per sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Detector {
    Subspace,
    Resultant,
    Both,
}

impl std::str::FromStr for Detector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "subspace" => Ok(Detector::Subspace),
            "resultant" => Ok(Detector::Resultant),
            "both" => Ok(Detector::Both),
            other => Err(Error::argument(format!("unknown detector `{other}`"))),
        }
    }
}

impl std::fmt::Display for Detector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Detector::Subspace => write!(f, "subspace"),
            Detector::Resultant => write!(f, "resultant"),
            Detector::Both => write!(f, "both"),
        }
    }
}

/// Per-sample verdict of one detector. `borderline` flags a numerically
/// ambiguous run (a singular value or normalized resultant inside the
/// declared bands); a confident hit stays a hit regardless.
#[derive(Debug, Clone, Copy)]
pub struct DetectorVerdict {
    pub hit: bool,
    pub borderline: bool,
    /// CDF dimension in the single-excitation sector (subspace detector).
    pub cdfs_dim: Option<usize>,
}

/// Single-excitation subspace detector: a hit is a nonzero maximal
/// invariant subspace inside the DF kernel; borderline when any retained
/// singular value sat within `borderline_factor` of the rank cut.
pub fn detect_subspace(delta: &DeltaMatrix, tol: &Tolerances) -> Result<DetectorVerdict> {
    let model = LindbladModel::new(delta.clone(), 1.0)?;
    let dfs = dfs_basis_with_margin(&model, 1, tol)?;
    let cdfs = cdfs_invariant_with_margin(&model, &dfs.subspace, tol)?;
    let margin = dfs.margin.min(cdfs.margin);
    Ok(DetectorVerdict {
        hit: cdfs.subspace.dim() > 0,
        borderline: margin < tol.borderline_factor,
        cdfs_dim: Some(cdfs.subspace.dim()),
    })
}

/// Resultant-certificate detector on the coupling matrix.
pub fn detect_resultant(delta: &DeltaMatrix, tol: &Tolerances) -> Result<DetectorVerdict> {
    let report = cdfs_exists_v1(delta, tol)?;
    Ok(DetectorVerdict {
        hit: report.decision == Decision::CdfsExists,
        borderline: report.decision == Decision::Borderline,
        cdfs_dim: None,
    })
}

/// Aggregated study outcome; serializes to the versioned report JSON.
#[derive(Debug, Clone, Serialize)]
pub struct RarityReport {
    pub schema: u32,
    pub ensemble: EnsembleSpec,
    pub samples: usize,
    pub hits: usize,
    pub hit_fraction: f64,
    /// Undecided samples: no CDF subspace found, but the computation ran
    /// inside a borderline band. Disjoint from `hits`.
    pub borderline: usize,
    pub detector: Detector,
    /// Samples where the two detectors disagreed outside their borderline
    /// bands. Anything nonzero is a bug in one of them.
    pub disagreements: usize,
    pub tolerances: Tolerances,
}

/// Run the sampling study: draw `samples` matrices, run the detector(s),
/// aggregate. Detector disagreements are recorded, never silently
/// resolved; the study still completes.
pub fn rarity_study(
    spec: &EnsembleSpec,
    samples: usize,
    detector: Detector,
    tol: &Tolerances,
) -> Result<RarityReport> {
    if samples == 0 {
        return Err(Error::argument("sample count must be at least 1"));
    }
    let mut rng = spec.rng();
    let mut hits = 0usize;
    let mut borderline = 0usize;
    let mut disagreements = 0usize;

    for _ in 0..samples {
        let delta = sample_delta(spec, &mut rng)?;
        let (verdict, second) = match detector {
            Detector::Subspace => (detect_subspace(&delta, tol)?, None),
            Detector::Resultant => (detect_resultant(&delta, tol)?, None),
            Detector::Both => (
                detect_subspace(&delta, tol)?,
                Some(detect_resultant(&delta, tol)?),
            ),
        };
        let mut ambiguous = verdict.borderline;
        if let Some(other) = second {
            ambiguous |= other.borderline;
            if !ambiguous && other.hit != verdict.hit {
                disagreements += 1;
            }
        }
        if verdict.hit {
            hits += 1;
        } else if ambiguous {
            // A confident hit is a hit whatever its margins; borderline
            // marks only the undecided misses, keeping the two counts
            // disjoint.
            borderline += 1;
        }
    }

    Ok(RarityReport {
        schema: 1,
        ensemble: spec.clone(),
        samples,
        hits,
        hit_fraction: hits as f64 / samples as f64,
        borderline,
        detector,
        disagreements,
        tolerances: tol.clone(),
    })
}
