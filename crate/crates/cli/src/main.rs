//! `dfsslab` — command-line front end for the decoherence-free subspace
//! laboratory.
//!
//! Subcommands:
//!
//! * `analyze`   — DF/CDF structure of a coupling matrix, per excitation
//!   sector, with the eigenvalue-degeneracy witness and robust-subspace
//!   dimensions (JSON report).
//! * `resultant` — the polynomial existence certificate for a CDF
//!   subspace in the single-excitation sector (JSON report).
//! * `evolve`    — integrate the master equation and emit a fidelity
//!   trace as CSV (`t,F2`), optionally sweeping a perturbative regime.
//! * `sample`    — seeded Monte-Carlo rarity study over a coupling-matrix
//!   ensemble (JSON report).
//!
//! Exit codes: 0 on success, 1 on argument or resource errors, 2 on
//! numerical failures. The qubit cap defaults to 8, can be set by the
//! `DFSSLAB_NMAX` environment variable, and is overridden by `--nmax`.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use dfsslab_core::dynamics::{fidelity_trace, EvolveBackend, Regime};
use dfsslab_core::io::{analyze_report, load_delta, parse_state_spec};
use dfsslab_core::sampling::{rarity_study, Detector, EnsembleKind, EnsembleSpec};
use dfsslab_core::{cdfs_exists_v1, Error, LindbladModel, Tolerances, DEFAULT_N_MAX};

#[derive(Parser)]
#[command(name = "dfsslab", version, about = "Decoherence-free subspace laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    tolerances: TolArgs,

    /// Maximum qubit count (overrides DFSSLAB_NMAX; default 8).
    #[arg(long, global = true)]
    nmax: Option<usize>,
}

#[derive(Args)]
struct TolArgs {
    /// Relative Hermiticity tolerance.
    #[arg(long, global = true)]
    tol_herm: Option<f64>,
    /// Absolute tolerance for structurally vanishing residuals.
    #[arg(long, global = true)]
    tol_zero: Option<f64>,
    /// Rank cut relative to the largest singular value.
    #[arg(long, global = true)]
    tol_rank: Option<f64>,
    /// Absolute eigenvalue-clustering gap.
    #[arg(long, global = true)]
    cluster_tol: Option<f64>,
    /// Normalized-resultant existence threshold.
    #[arg(long, global = true)]
    tol_resultant: Option<f64>,
    /// Upper edge of the resultant borderline band.
    #[arg(long, global = true)]
    tol_resultant_borderline: Option<f64>,
    /// Residual bound for validating common roots as zero-sum eigenpairs.
    #[arg(long, global = true)]
    tol_root: Option<f64>,
}

impl TolArgs {
    fn build(&self) -> Tolerances {
        let mut tol = Tolerances::default();
        if let Some(v) = self.tol_herm {
            tol.herm_rel = v;
        }
        if let Some(v) = self.tol_zero {
            tol.zero_abs = v;
        }
        if let Some(v) = self.tol_rank {
            tol.rank_rel = Some(v);
        }
        if let Some(v) = self.cluster_tol {
            tol.cluster_abs = Some(v);
        }
        if let Some(v) = self.tol_resultant {
            tol.resultant = v;
        }
        if let Some(v) = self.tol_resultant_borderline {
            tol.resultant_borderline = v;
        }
        if let Some(v) = self.tol_root {
            tol.root_residual = v;
        }
        tol
    }
}

#[derive(Subcommand)]
enum Command {
    /// Per-sector DF/CDF analysis of a coupling matrix.
    Analyze {
        /// Coupling-matrix JSON file ({"n": N, "delta": [[..], ..]}).
        #[arg(long)]
        delta: PathBuf,
        /// Excitation sector to analyze: an integer or `all`.
        #[arg(long, default_value = "all")]
        sector: String,
        /// Also report robust-subspace dimensions for orders 1..=K.
        #[arg(long)]
        robust_order: Option<usize>,
        /// Symmetrize the loaded matrix instead of rejecting asymmetry.
        #[arg(long)]
        symmetrize: bool,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Polynomial existence certificate for the single-excitation sector.
    Resultant {
        #[arg(long)]
        delta: PathBuf,
        #[arg(long)]
        symmetrize: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate the master equation and emit a fidelity trace (CSV).
    Evolve {
        #[arg(long)]
        delta: PathBuf,
        /// Collective decay rate κ.
        #[arg(long, default_value_t = 1.0)]
        kappa: f64,
        /// Initial state: ground | basis:BITS | dfs:m:k | cdfs:m:k | JSON amplitudes.
        #[arg(long)]
        state: String,
        /// Final time of the grid.
        #[arg(long)]
        tmax: f64,
        /// Number of grid points, including t = 0.
        #[arg(long)]
        points: usize,
        /// Sweep a perturbative regime: `weak` scales the Hamiltonian,
        /// `strong` scales the decay rate.
        #[arg(long)]
        regime: Option<String>,
        /// Comma-separated scale factors for the regime sweep.
        #[arg(long)]
        eps: Option<String>,
        /// Evolution backend: `expm` (dense exponential) or `ode`.
        #[arg(long, default_value = "expm")]
        backend: String,
        #[arg(long)]
        symmetrize: bool,
        /// Output CSV path; with a multi-value sweep, each trace goes to
        /// `<stem>_eps<value>.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte-Carlo rarity study over a coupling-matrix ensemble.
    Sample {
        /// gaussian_symmetric | equal_offdiagonal_pair | all_equal | square_lattice.
        #[arg(long)]
        ensemble: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        samples: usize,
        #[arg(long)]
        seed: u64,
        /// Standard deviation of the sampled couplings.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        /// subspace | resultant | both.
        #[arg(long, default_value = "both")]
        detector: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("dfsslab: {err}");
            match err {
                Error::Argument(_) | Error::Resource(_) => ExitCode::from(1),
                Error::Numerical(_) => ExitCode::from(2),
            }
        }
    }
}

fn resolve_nmax(flag: Option<usize>) -> Result<usize, Error> {
    if let Some(n) = flag {
        return Ok(n);
    }
    match std::env::var("DFSSLAB_NMAX") {
        Ok(text) => text.parse::<usize>().map_err(|_| {
            Error::argument(format!(
                "DFSSLAB_NMAX must be a positive integer, got `{text}`"
            ))
        }),
        Err(_) => Ok(DEFAULT_N_MAX),
    }
}

fn emit(out: Option<&PathBuf>, content: &str) -> Result<(), Error> {
    match out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| Error::argument(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{content}");
            std::io::stdout()
                .flush()
                .map_err(|e| Error::argument(format!("stdout: {e}")))
        }
    }
}

fn to_pretty_json<T: serde::Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("serializable report");
    text.push('\n');
    text
}

fn load_model(
    path: &PathBuf,
    symmetrize: bool,
    kappa: f64,
    n_max: usize,
) -> Result<LindbladModel, Error> {
    let delta = load_delta(path, symmetrize)?;
    LindbladModel::with_max_qubits(delta, kappa, n_max)
}

fn run(cli: Cli) -> Result<(), Error> {
    let tol = cli.tolerances.build();
    let n_max = resolve_nmax(cli.nmax)?;

    match cli.command {
        Command::Analyze {
            delta,
            sector,
            robust_order,
            symmetrize,
            out,
        } => {
            let model = load_model(&delta, symmetrize, 1.0, n_max)?;
            let sector = match sector.as_str() {
                "all" => None,
                text => Some(text.parse::<usize>().map_err(|_| {
                    Error::argument(format!("--sector takes an integer or `all`, got `{text}`"))
                })?),
            };
            let report = analyze_report(&model, sector, robust_order, &tol)?;
            emit(out.as_ref(), &to_pretty_json(&report))
        }

        Command::Resultant {
            delta,
            symmetrize,
            out,
        } => {
            let delta = load_delta(&delta, symmetrize)?;
            let report = cdfs_exists_v1(&delta, &tol)?;
            emit(out.as_ref(), &to_pretty_json(&report))
        }

        Command::Evolve {
            delta,
            kappa,
            state,
            tmax,
            points,
            regime,
            eps,
            backend,
            symmetrize,
            out,
        } => {
            if !(tmax > 0.0) {
                return Err(Error::argument("--tmax must be positive"));
            }
            if points < 2 {
                return Err(Error::argument("--points must be at least 2"));
            }
            let backend = match backend.as_str() {
                "expm" => EvolveBackend::MatrixExp,
                "ode" => EvolveBackend::AdaptiveOde,
                other => {
                    return Err(Error::argument(format!(
                        "--backend takes `expm` or `ode`, got `{other}`"
                    )))
                }
            };
            let model = load_model(&delta, symmetrize, kappa, n_max)?;
            let psi0 = parse_state_spec(&state, &model, &tol)?;
            let times: Vec<f64> = (0..points)
                .map(|k| tmax * k as f64 / (points - 1) as f64)
                .collect();

            match regime.as_deref() {
                None => {
                    if eps.is_some() {
                        return Err(Error::argument("--eps requires --regime"));
                    }
                    let trace =
                        fidelity_trace(&model, &psi0, &times, backend, state, Regime::Exact)?;
                    let mut csv = Vec::new();
                    trace.write_csv(&mut csv).expect("in-memory write");
                    emit(out.as_ref(), &String::from_utf8(csv).expect("ascii csv"))
                }
                Some(kind) => {
                    let eps_text =
                        eps.ok_or_else(|| Error::argument("--regime requires --eps LIST"))?;
                    let eps_items: Vec<&str> = eps_text
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .collect();
                    if eps_items.is_empty() {
                        return Err(Error::argument("--eps list is empty"));
                    }
                    if eps_items.len() > 1 && out.is_none() {
                        return Err(Error::argument(
                            "a multi-value --eps sweep needs --out to name one file per value",
                        ));
                    }
                    for item in eps_items {
                        let eps_val = f64::from_str(item).map_err(|_| {
                            Error::argument(format!("bad epsilon `{item}` in --eps"))
                        })?;
                        if !(eps_val > 0.0) {
                            return Err(Error::argument("epsilons must be positive"));
                        }
                        let (scaled, label) = match kind {
                            "weak" => (
                                model.with_hamiltonian_scaled(eps_val),
                                Regime::WeakUnitary(eps_val),
                            ),
                            "strong" => (
                                model.with_kappa_scaled(eps_val),
                                Regime::StrongUnitary(eps_val),
                            ),
                            other => {
                                return Err(Error::argument(format!(
                                    "--regime takes `weak` or `strong`, got `{other}`"
                                )))
                            }
                        };
                        let trace =
                            fidelity_trace(&scaled, &psi0, &times, backend, state.clone(), label)?;
                        let mut csv = Vec::new();
                        trace.write_csv(&mut csv).expect("in-memory write");
                        let csv = String::from_utf8(csv).expect("ascii csv");
                        match out.as_ref() {
                            Some(path) => emit(Some(&sweep_path(path, item)), &csv)?,
                            None => emit(None, &csv)?,
                        }
                    }
                    Ok(())
                }
            }
        }

        Command::Sample {
            ensemble,
            n,
            samples,
            seed,
            scale,
            detector,
            out,
        } => {
            let kind = EnsembleKind::from_str(&ensemble)?;
            let detector = Detector::from_str(&detector)?;
            if n > n_max {
                return Err(Error::argument(format!(
                    "n = {n} exceeds the qubit cap {n_max}"
                )));
            }
            let spec = EnsembleSpec {
                kind,
                n,
                scale,
                seed,
            };
            let report = rarity_study(&spec, samples, detector, &tol)?;
            emit(out.as_ref(), &to_pretty_json(&report))
        }
    }
}

fn sweep_path(base: &PathBuf, eps_text: &str) -> PathBuf {
    let stem = base
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "trace".to_string());
    let ext = base
        .extension()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "csv".to_string());
    base.with_file_name(format!("{stem}_eps{eps_text}.{ext}"))
}
