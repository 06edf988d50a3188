//! Subcommands. Each reads and writes plain files under the output directory so
//! the stages can run separately.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sigmor::balancing::{balance, balancing_residuals, gramian_spectrum, hankel_report, pq_spectrum, reduce};
use sigmor::dynamics::{test_control, training_control};
use sigmor::gramians::{gramian_ode, gramian_series, GramianMethod};
use sigmor::io::{
    column_names, format_float, read_output_matrix, read_system, write_errors_csv, write_hankel_csv, write_output_matrix,
    write_spectrum_csv, write_system, write_trajectory_csv, OutputMatrixFile,
};
use sigmor::learning::{evaluate_reduced, fit_c_streaming, model_outputs, truth_outputs, ErrorReport};
use sigmor::signature::compute_signature;
use sigmor::{BilinearSystem, ControlSignal, ReactionDiffusion, SignatureSystem, TimeGrid, Trajectory};

use crate::config::{ExperimentConfig, TruthModel};
use crate::CliError;

pub const SIMULATE_DIR: &str = "simulate";
pub const LEARN_DIR: &str = "learn";
pub const REDUCE_DIR: &str = "reduce";
pub const EVALUATE_DIR: &str = "evaluate";

pub const C_FILE: &str = "C.csv";
pub const LEARN_REPORT: &str = "report.csv";
pub const HANKEL_FILE: &str = "hankel.csv";
pub const SPECTRUM_P_FILE: &str = "spectrum_P.csv";
pub const SPECTRUM_Q_FILE: &str = "spectrum_Q.csv";
pub const BALANCING_FILE: &str = "balancing.csv";
pub const ERRORS_FILE: &str = "errors.csv";

/// Stream index reserved for the synthetic readout `C*`; training paths use `0..n_train`.
const SYNTHETIC_STREAM: u64 = u64::MAX;

pub fn simulate_file(k: u32) -> String {
    format!("output_k{k}.csv")
}

pub fn system_file(r: usize) -> String {
    format!("system_r{r:03}.txt")
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn stage_dir(cfg: &ExperimentConfig, stage: &str) -> Result<PathBuf, CliError> {
    let dir = cfg.out_dir.join(stage);
    fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
    Ok(dir)
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| io_err(path, e))
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path).map(BufReader::new).map_err(|e| io_err(path, e))
}

fn at(path: &Path) -> impl Fn(sigmor::Error) -> CliError + '_ {
    move |e| CliError::from(e).in_file(path)
}

fn grid(cfg: &ExperimentConfig) -> Result<TimeGrid<f64>, CliError> {
    Ok(TimeGrid::horizon(cfg.horizon, cfg.grid_points)?)
}

/// Ground-truth output map selected by the configuration.
pub struct Truth {
    kind: TruthKind,
}

enum TruthKind {
    ReactionDiffusion(ReactionDiffusion<f64>, sigmor::TruthIntegrator),
    Synthetic { order: usize, c: DMatrix<f64> },
}

impl Truth {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self, CliError> {
        let kind = match cfg.truth_model {
            TruthModel::ReactionDiffusion => TruthKind::ReactionDiffusion(ReactionDiffusion::new(cfg.d)?, cfg.truth_integrator()),
            TruthModel::SyntheticLinear => {
                let n = cfg.signature_dim()?;
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(SYNTHETIC_STREAM);
                let c = DMatrix::from_fn(1, n, |_, _| rng.random_range(-1.0..1.0));
                TruthKind::Synthetic { order: cfg.order, c }
            }
        };
        Ok(Truth { kind })
    }

    pub fn output(&self, u: &ControlSignal<f64>) -> sigmor::Result<Trajectory<f64>> {
        match &self.kind {
            TruthKind::ReactionDiffusion(sys, integrator) => sys.simulate_output_with(u, *integrator),
            TruthKind::Synthetic { order, c } => {
                let s = compute_signature(u, *order, u.grid())?;
                Trajectory::new(*u.grid(), s.values() * c.transpose())
            }
        }
    }

    /// The readout generating the synthetic targets, if any.
    pub fn synthetic_readout(&self) -> Option<&DMatrix<f64>> {
        match &self.kind {
            TruthKind::Synthetic { c, .. } => Some(c),
            TruthKind::ReactionDiffusion(..) => None,
        }
    }
}

fn write_config(cfg: &ExperimentConfig) -> Result<(), CliError> {
    fs::create_dir_all(&cfg.out_dir).map_err(|e| io_err(&cfg.out_dir, e))?;
    let text: String = cfg.render().lines().filter(|l| !l.starts_with("out_dir")).map(|l| format!("{l}\n")).collect();
    let path = cfg.out_dir.join("config_used.txt");
    fs::write(&path, text).map_err(|e| io_err(&path, e))
}

/// Truth outputs for the test controls listed in `sim_k`.
pub fn cmd_simulate(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>, CliError> {
    write_config(cfg)?;
    let grid = grid(cfg)?;
    let truth = Truth::new(cfg)?;
    let controls = cfg.sim_k.iter().map(|&k| test_control(k, grid)).collect::<sigmor::Result<Vec<_>>>()?;
    let outputs = truth_outputs(&controls, |u| truth.output(u))?;
    if cfg.sim_k.is_empty() {
        return Ok(Vec::new());
    }
    let dir = stage_dir(cfg, SIMULATE_DIR)?;
    let mut written = Vec::new();
    for (&k, y) in cfg.sim_k.iter().zip(&outputs) {
        let path = dir.join(simulate_file(k));
        write_trajectory_csv(create(&path)?, y, &column_names("y", y.dim())).map_err(at(&path))?;
        log::info!("k = {k}: wrote {}", path.display());
        written.push(path);
    }
    Ok(written)
}

#[derive(Clone, Debug)]
pub struct LearnSummary {
    pub n: usize,
    pub rows: usize,
    pub rank: usize,
    pub residual: f64,
    /// Relative error of the fitted readout against the synthetic `C*`.
    pub readout_error: Option<f64>,
}

/// Fits `C` on the white-noise training family and writes it with a residual report.
pub fn cmd_learn(cfg: &ExperimentConfig) -> Result<LearnSummary, CliError> {
    write_config(cfg)?;
    let grid = grid(cfg)?;
    let truth = Truth::new(cfg)?;
    let train = (0..cfg.n_train as u64)
        .map(|k| training_control(cfg.seed, k, cfg.c_w, grid, cfg.m))
        .collect::<sigmor::Result<Vec<_>>>()?;
    log::info!("fitting C on {} training controls (N = {}, n = {})", cfg.n_train, cfg.order, cfg.signature_dim()?);
    let fit = fit_c_streaming(&train, cfg.order, cfg.ridge_lambda, cfg.batch, |u| truth.output(u))?;
    let readout_error = truth.synthetic_readout().map(|c| (&fit.coefficients - c).norm() / c.norm());

    let dir = stage_dir(cfg, LEARN_DIR)?;
    let path = dir.join(C_FILE);
    let file = OutputMatrixFile { order: cfg.order, inputs: cfg.m, c: fit.coefficients.clone() };
    write_output_matrix(create(&path)?, &file).map_err(at(&path))?;

    let rows = cfg.n_train * cfg.grid_points;
    let path = dir.join(LEARN_REPORT);
    let mut report = vec![
        ("n".to_string(), fit.features.to_string()),
        ("p".to_string(), fit.coefficients.nrows().to_string()),
        ("rows".to_string(), rows.to_string()),
        ("rank".to_string(), fit.rank.to_string()),
        ("residual".to_string(), format_float(fit.residual)),
        ("rms_residual".to_string(), format_float((fit.residual / rows as f64).sqrt())),
    ];
    if let Some(err) = readout_error {
        report.push(("readout_relative_error".to_string(), format_float(err)));
    }
    write_key_values(&path, &report)?;
    log::info!("rank {} of {}, residual {:.6e}", fit.rank, fit.features, fit.residual);
    Ok(LearnSummary { n: fit.features, rows, rank: fit.rank, residual: fit.residual, readout_error })
}

fn write_key_values(path: &Path, rows: &[(String, String)]) -> Result<(), CliError> {
    let mut text = String::from("key,value\n");
    for (k, v) in rows {
        text.push_str(&format!("{k},{v}\n"));
    }
    fs::write(path, text).map_err(|e| io_err(path, e))
}

/// Reads back the learned signature system from the learn stage.
pub fn load_full_system(cfg: &ExperimentConfig) -> Result<BilinearSystem<f64>, CliError> {
    let path = cfg.out_dir.join(LEARN_DIR).join(C_FILE);
    let file: OutputMatrixFile<f64> = read_output_matrix(open(&path)?).map_err(at(&path))?;
    if (file.order, file.inputs) != (cfg.order, cfg.m) {
        return Err(CliError::Config(format!(
            "{} was learned with N = {}, m = {} but the configuration has N = {}, m = {}",
            path.display(),
            file.order,
            file.inputs,
            cfg.order,
            cfg.m
        )));
    }
    let sig = SignatureSystem::for_inputs(file.inputs, file.order)?.with_output(file.c).map_err(at(&path))?;
    Ok(sig.to_bilinear())
}

#[derive(Clone, Debug)]
pub struct ReduceSummary {
    pub sigma: Vec<f64>,
    pub rank: usize,
    pub reachable_rank: usize,
    pub reachability_residual: f64,
    pub observability_residual: f64,
    /// `max |σ_i² − λ_i(PQ)| / σ_1²` over the retained values.
    pub spectrum_deviation: f64,
    pub written: Vec<usize>,
    pub skipped: Vec<usize>,
}

/// Gramians, balancing, the Hankel report and one reduced system per admissible `r`.
pub fn cmd_reduce(cfg: &ExperimentConfig) -> Result<ReduceSummary, CliError> {
    write_config(cfg)?;
    let full = load_full_system(cfg)?;
    let gramians = match cfg.gramian_method {
        GramianMethod::Series => gramian_series(&full, cfg.order, cfg.horizon)?,
        GramianMethod::Ode => gramian_ode(&full, cfg.horizon, cfg.gramian_steps)?,
    };
    let bal = balance(&gramians.p, &gramians.q)?;
    let residuals = balancing_residuals(&gramians.p, &gramians.q, &bal);
    let pq = pq_spectrum(&gramians.p, &gramians.q);
    let s1 = bal.sigma[0] * bal.sigma[0];
    let spectrum_deviation = (0..bal.rank()).map(|i| (bal.sigma[i] * bal.sigma[i] - pq[i]).abs() / s1).fold(0.0, f64::max);
    log::info!(
        "balanced: {} Hankel values retained, rank(P) = {}, residuals {:.2e} / {:.2e}",
        bal.rank(),
        bal.reachable_rank,
        residuals.reachability,
        residuals.observability
    );

    let dir = stage_dir(cfg, REDUCE_DIR)?;
    let sigma: Vec<f64> = bal.sigma.iter().copied().collect();
    let path = dir.join(HANKEL_FILE);
    write_hankel_csv(create(&path)?, &hankel_report(&sigma)?).map_err(at(&path))?;
    for (name, x) in [(SPECTRUM_P_FILE, &gramians.p), (SPECTRUM_Q_FILE, &gramians.q)] {
        let mut values: Vec<f64> = gramian_spectrum(x)?.iter().copied().collect();
        values.reverse();
        let path = dir.join(name);
        write_spectrum_csv(create(&path)?, &values).map_err(at(&path))?;
    }
    write_key_values(
        &dir.join(BALANCING_FILE),
        &[
            ("hankel_rank".to_string(), bal.rank().to_string()),
            ("reachable_rank".to_string(), bal.reachable_rank.to_string()),
            ("reachability_residual".to_string(), format_float(residuals.reachability)),
            ("observability_residual".to_string(), format_float(residuals.observability)),
            ("inverse_residual".to_string(), format_float(residuals.inverse)),
            ("spectrum_deviation".to_string(), format_float(spectrum_deviation)),
        ],
    )?;

    let mut written = Vec::new();
    let mut skipped = Vec::new();
    for &r in &cfg.r_list {
        if r > bal.rank() {
            skipped.push(r);
            continue;
        }
        let red = reduce(&full, &bal, r)?;
        let path = dir.join(system_file(r));
        write_system(create(&path)?, &red).map_err(at(&path))?;
        written.push(r);
    }
    if !skipped.is_empty() {
        log::warn!("rank-deficient Gramian: effective rank {} < requested orders {:?}; skipped", bal.rank(), skipped);
    }
    Ok(ReduceSummary {
        sigma,
        rank: bal.rank(),
        reachable_rank: bal.reachable_rank,
        reachability_residual: residuals.reachability,
        observability_residual: residuals.observability,
        spectrum_deviation,
        written,
        skipped,
    })
}

/// Error functionals on the sinusoidal test family for every reduced system on disk.
pub fn cmd_evaluate(cfg: &ExperimentConfig) -> Result<Vec<ErrorReport<f64>>, CliError> {
    write_config(cfg)?;
    let full = load_full_system(cfg)?;
    let reduce_dir = cfg.out_dir.join(REDUCE_DIR);
    if !reduce_dir.is_dir() {
        return Err(CliError::Io(format!("{}: no reduced systems; run `reduce` first", reduce_dir.display())));
    }
    let mut reduced = Vec::new();
    let mut missing = Vec::new();
    for &r in &cfg.r_list {
        let path = reduce_dir.join(system_file(r));
        if !path.exists() {
            missing.push(r);
            continue;
        }
        let sys: BilinearSystem<f64> = read_system(open(&path)?).map_err(at(&path))?;
        if sys.dim() != r {
            return Err(CliError::Io(format!("{}: expected dimension {r}, found {}", path.display(), sys.dim())));
        }
        reduced.push(sys);
    }
    if !missing.is_empty() {
        log::warn!("no reduced system on disk for r = {missing:?}; skipping");
    }

    let grid = grid(cfg)?;
    let truth = Truth::new(cfg)?;
    let tests = (1..=cfg.n_test as u32).map(|k| test_control(k, grid)).collect::<sigmor::Result<Vec<_>>>()?;
    log::info!("simulating {} test controls", tests.len());
    let truth_out = truth_outputs(&tests, |u| truth.output(u))?;
    let full_out = model_outputs(&full, &tests)?;
    let mut reports = Vec::with_capacity(reduced.len());
    for sys in &reduced {
        let rep = evaluate_reduced(&full_out, sys, &truth_out, &tests)?;
        log::info!("r = {}: E_sig {:.4e}, E_MOR {:.4e}, E_red_sig {:.4e}", rep.r, rep.e_sig, rep.e_mor, rep.e_red_sig);
        reports.push(rep);
    }
    let dir = stage_dir(cfg, EVALUATE_DIR)?;
    let path = dir.join(ERRORS_FILE);
    write_errors_csv(create(&path)?, &reports).map_err(at(&path))?;
    Ok(reports)
}

#[derive(Clone, Debug)]
pub struct PipelineSummary {
    pub learn: LearnSummary,
    pub reduce: ReduceSummary,
    pub errors: Vec<ErrorReport<f64>>,
}

pub fn cmd_pipeline(cfg: &ExperimentConfig) -> Result<PipelineSummary, CliError> {
    cmd_simulate(cfg)?;
    let learn = cmd_learn(cfg)?;
    let reduce = cmd_reduce(cfg)?;
    let errors = cmd_evaluate(cfg)?;
    Ok(PipelineSummary { learn, reduce, errors })
}
