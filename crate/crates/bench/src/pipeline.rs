use std::sync::Arc;
use std::time::Instant;

use cauchy_core::{
    best_fit, flux_lower_bound, identify_samples, measure, oscillation_gamma1, reconstruct_gamma1, solve_direct,
    CauchyPair, DirectSolution, Error, GeneralOptions, GeneralProblem, NoiseSpec, NonlinearLaw, RegularizationConfig,
    Side, SideData, SpectralBasis, TableEval, TraceFunction, TraceSamples, TraceSpace,
};
use log::info;
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::error::{BenchError, Stage, StageExt};
use crate::report::{summary_csv, DirectSummary, IdentReport, PointReport, RunReport, TableRow, Timings};

/// Solved direct problem and its exact `Γ₁` traces.
pub struct Simulation {
    pub basis: Arc<SpectralBasis<f64>>,
    pub law: NonlinearLaw<f64>,
    pub solution: DirectSolution<f64>,
    pub exact_u: TraceFunction<f64>,
    pub exact_flux: TraceFunction<f64>,
}

/// Reconstruction method for the Cauchy stage.
pub enum Method {
    Cylinder,
    General(Box<GeneralProblem<f64>>),
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Cylinder => "cylinder",
            Method::General(_) => "general",
        }
    }
}

/// How far a run proceeds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stages {
    /// Direct solve, measurement and reconstruction.
    Cauchy,
    /// Everything, including identification.
    Full,
}

pub struct PipelineOutput {
    pub report: RunReport,
    pub timings: Timings,
}

pub struct SweepOutput {
    pub reports: Vec<RunReport>,
    /// Comma-separated summary with observed error ratios.
    pub summary: String,
    pub timings: Timings,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Noise seeds for `(ψ, g)` at level `eps`. They depend on the level, not
/// on its position in the list.
pub fn point_seeds(seed: u64, eps: f64) -> [u64; 2] {
    let base = splitmix(seed ^ splitmix(eps.to_bits()));
    [splitmix(base), splitmix(base ^ 1)]
}

pub fn simulate(cfg: &ExperimentConfig) -> Result<Simulation, BenchError> {
    cfg.validate()?;
    let basis = cfg.basis()?;
    let law = cfg.law()?;
    let g = cfg.flux(&basis)?;
    let solution = solve_direct(&law, &g, &cfg.direct_options()?).at(Stage::Direct)?;
    info!(
        "direct solve converged in {} iterations, residual {:e}",
        solution.iterations(),
        solution.residuals.last().copied().unwrap_or(0.0)
    );
    let exact_u = solution.field.trace_top();
    let exact_flux = solution.field.flux_top();
    Ok(Simulation { basis, law, solution, exact_u, exact_flux })
}

pub fn direct_summary(cfg: &ExperimentConfig, sim: &Simulation) -> Result<DirectSummary, BenchError> {
    let sol = &sim.solution;
    let lower = match flux_lower_bound(&sol.g, cfg.direct.margin) {
        Ok(m) => Some(m),
        Err(Error::EmptySupport) => None,
        Err(e) => return Err(e).at(Stage::Direct),
    };
    Ok(DirectSummary {
        iterations: sol.iterations(),
        residuals: sol.residuals.clone(),
        contraction_ratios: sol.contraction_ratios(),
        energy: sol.energy,
        fixed_point_defect: cauchy_core::fixed_point_defect(&sim.law, sol).at(Stage::Direct)?,
        oscillation_gamma1: oscillation_gamma1(sol).at(Stage::Direct)?,
        flux_lower_bound: lower,
        grid: sim.basis.cross_section().grid_points().iter().map(|p| p[0]).collect(),
        u_gamma1: sim.exact_u.samples(),
        flux_gamma1: sim.exact_flux.samples(),
    })
}

pub fn method(cfg: &ExperimentConfig) -> Result<Method, BenchError> {
    if !cfg.general.enabled {
        return Ok(Method::Cylinder);
    }
    if cfg.general.conductivity.is_some() {
        return Err(BenchError::field(
            "general.conductivity",
            "pipeline data come from the spectral direct solver, which assumes σ = I",
        ));
    }
    let opts = GeneralOptions {
        gamma_modes: cfg.general.gamma_modes,
        sigma_modes: cfg.general.sigma_modes,
        blend: cfg.general.blend,
    };
    let problem = GeneralProblem::new(cfg.grid()?, cfg.conductivity()?, cfg.partition(), opts).at(Stage::Setup)?;
    Ok(Method::General(Box::new(problem)))
}

fn general_traces(
    problem: &GeneralProblem<f64>,
    basis: &Arc<SpectralBasis<f64>>,
    pair: &CauchyPair<f64>,
    reg: &RegularizationConfig<f64>,
) -> Result<(TraceFunction<f64>, TraceFunction<f64>, usize), BenchError> {
    let coords = problem.grid().side_coords(Side::Bottom);
    let nodal = |t: &TraceFunction<f64>| -> cauchy_core::Result<Vec<f64>> {
        coords.iter().map(|&x| basis.eval_sum(t.coefficients(), &[x])).collect()
    };
    let data = SideData { psi: nodal(&pair.psi).at(Stage::Measure)?, g: nodal(&pair.g).at(Stage::Measure)? };
    let rec = problem.solve_regularized_cauchy(&[(Side::Bottom, data)], reg).at(Stage::Reconstruct)?;
    let top = rec
        .traces
        .iter()
        .find(|t| t.side == Side::Top)
        .ok_or_else(|| BenchError::field("general", "no reconstructed trace on the top side"))?;
    let u = TraceFunction::new(basis.clone(), &top.u_coefficients, TraceSpace::HalfZeroZero).at(Stage::Reconstruct)?;
    let q = TraceFunction::new(basis.clone(), &top.flux_coefficients, TraceSpace::HalfZeroZeroDual)
        .at(Stage::Reconstruct)?;
    Ok((u, q, rec.cutoff))
}

fn identification(
    cfg: &ExperimentConfig,
    sim: &Simulation,
    u: &TraceFunction<f64>,
    q: &TraceFunction<f64>,
) -> Result<IdentReport, BenchError> {
    let opts = cfg.identify_options()?;
    let samples = TraceSamples::from_traces(u, q).at(Stage::Identify)?;
    let table = identify_samples(&samples, &opts).at(Stage::Identify)?;
    let truth = |t: f64| sim.law.eval(t);
    let sup = |r: cauchy_core::Result<f64>| match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::EmptySupport) => Ok(None),
        Err(e) => Err(e).at(Stage::Identify),
    };
    let anchored = table.anchored();
    let table_rows = table
        .centers()
        .into_iter()
        .enumerate()
        .map(|(i, c)| TableRow {
            center: c,
            value: table.values[i],
            truth: truth(c),
            weight: table.binning.weight[i],
            dispersion: table.dispersion[i],
            flagged: table.binning.flagged[i],
        })
        .collect();
    Ok(IdentReport {
        bins: table.bins(),
        bin_width: table.bin_width(),
        delta: table.binning.delta,
        flagged: table.flagged().iter().filter(|&&f| f).count(),
        sup_error: sup(table.sup_error(truth))?,
        sup_error_anchored: sup(anchored.sup_error(truth))?,
        anchor_shift: anchored.anchor_shift.unwrap_or(0.0),
        misfit: best_fit(&table, &samples, TableEval::BinConstant),
        table: table_rows,
    })
}

/// Measurement, reconstruction and (optionally) identification at one
/// noise level.
pub fn run_point(
    cfg: &ExperimentConfig,
    sim: &Simulation,
    method: &Method,
    eps: f64,
    stages: Stages,
) -> Result<PointReport, BenchError> {
    let seeds = point_seeds(cfg.noise.seed, eps);
    let psi_eps = if cfg.noise.on_dirichlet { eps } else { 0.0 };
    let g_eps = if cfg.noise.on_flux { eps } else { 0.0 };
    let pair = measure(
        &sim.solution,
        &NoiseSpec::new(psi_eps, TraceSpace::HalfZeroZero, seeds[0]),
        &NoiseSpec::new(g_eps, TraceSpace::HalfZeroZeroDual, seeds[1]),
    )
    .at(Stage::Measure)?;
    let reg = cfg.regularization(eps)?;
    let (u, q, cutoff) = match method {
        Method::Cylinder => {
            let r = reconstruct_gamma1(&pair.psi, &pair.g, &reg).at(Stage::Reconstruct)?;
            (r.u_trace, r.flux_trace, r.cutoff)
        }
        Method::General(problem) => general_traces(problem, &sim.basis, &pair, &reg)?,
    };
    let trace_error = u.sub(&sim.exact_u).at(Stage::Reconstruct)?.norm();
    let flux_error = q.sub(&sim.exact_flux).at(Stage::Reconstruct)?.norm();
    let identification = match stages {
        Stages::Full => Some(identification(cfg, sim, &u, &q)?),
        Stages::Cauchy => None,
    };
    Ok(PointReport {
        eps,
        eps_regularization: reg.eps,
        seeds,
        gamma: reg.gamma,
        policy: reg.policy.name().to_string(),
        alpha: reg.alpha(),
        cutoff,
        trace_error,
        flux_error,
        u_gamma1: u.samples(),
        flux_gamma1: q.samples(),
        identification,
    })
}

fn run_points(
    cfg: &ExperimentConfig,
    sim: &Simulation,
    method: &Method,
    eps: &[f64],
    stages: Stages,
) -> Result<Vec<PointReport>, BenchError> {
    if let Method::General(problem) = method {
        problem.operator_svd().at(Stage::Svd)?;
    }
    eps.par_iter().map(|&e| run_point(cfg, sim, method, e, stages)).collect()
}

fn timed<R>(timings: &mut Timings, stage: &str, f: impl FnOnce() -> R) -> R {
    let start = Instant::now();
    let out = f();
    timings.push(stage, start.elapsed().as_secs_f64());
    out
}

/// Runs every stage for each noise level of `cfg`. Points are evaluated in
/// parallel and assembled in input order.
pub fn run_pipeline(cfg: &ExperimentConfig) -> Result<PipelineOutput, BenchError> {
    run_stages(cfg, Stages::Full)
}

pub fn run_stages(cfg: &ExperimentConfig, stages: Stages) -> Result<PipelineOutput, BenchError> {
    let mut timings = Timings::default();
    let sim = timed(&mut timings, "direct", || simulate(cfg))?;
    let direct = direct_summary(cfg, &sim)?;
    let method = timed(&mut timings, "setup", || method(cfg))?;
    let points = timed(&mut timings, "points", || run_points(cfg, &sim, &method, &cfg.noise.eps, stages))?;
    let report = RunReport { config: cfg.clone(), method: method.name().into(), direct, points };
    Ok(PipelineOutput { report, timings })
}

/// One report per noise level plus a summary table. The direct problem is
/// solved once.
pub fn sweep(cfg: &ExperimentConfig, eps: &[f64]) -> Result<SweepOutput, BenchError> {
    let mut cfg = cfg.clone();
    cfg.noise.eps = eps.to_vec();
    let mut timings = Timings::default();
    let sim = timed(&mut timings, "direct", || simulate(&cfg))?;
    let direct = direct_summary(&cfg, &sim)?;
    let method = timed(&mut timings, "setup", || method(&cfg))?;
    let points = timed(&mut timings, "points", || run_points(&cfg, &sim, &method, eps, Stages::Full))?;
    let reports: Vec<RunReport> = points
        .into_iter()
        .map(|p| {
            let mut c = cfg.clone();
            c.noise.eps = vec![p.eps];
            RunReport { config: c, method: method.name().into(), direct: direct.clone(), points: vec![p] }
        })
        .collect();
    let summary = summary_csv(&reports);
    Ok(SweepOutput { reports, summary, timings })
}
