use nalgebra::DMatrix;
use rieszcare::blockenc::{care_solution_encode, dilation_encode, BlockEncoding, PipelineConfig, PipelineReport};
use rieszcare::care::{
    build_hamiltonian, extract_solution_from_projector, require_gap, riesz_projector_exact, sign_newton, solve_care_sign, CareProblem,
    DEFAULT_RANK_RTOL, DEFAULT_SIGN_MAX_ITER, DEFAULT_SIGN_TOL,
};
use rieszcare::contour::{self, SmoothedSemicircle};
use rieszcare::gen::split_seed;
use rieszcare::linalg::{c, eye, from_real, norm2, real_part, CMat};
use rieszcare::mrpa::{self, RpaMatrices};
use rieszcare::trace_est::{estimate_energy, state_encodings, EnergyReport};
use serde_json::{json, Value};

use crate::io::{self, care_json, matrix_json, sci, Input};
use crate::{CliError, Command, Format, RunConfig};

pub fn run(cfg: &RunConfig) -> Result<String, CliError> {
    let input = io::load(&cfg.input)?;
    if cfg.format == Format::Csv && !matches!(cfg.command, Command::QuadratureStudy | Command::Estimate) {
        return Err(CliError::io("config", "CSV output exists only for quadrature-study and estimate".into()));
    }
    match cfg.command {
        Command::CareSolve => care_solve(cfg, input),
        Command::QuadratureStudy => quadrature_study(cfg, input),
        Command::RieszEncode => riesz_encode(cfg, input),
        Command::RpaEnergy => rpa_energy(cfg, input),
        Command::Estimate => estimate(cfg, input),
    }
}

fn rpa_matrices(cfg: &RunConfig, input: Input) -> Result<RpaMatrices, CliError> {
    match input {
        Input::Rpa(m) => Ok(m),
        Input::Integrals(ints) if cfg.rank == 1 => Ok(mrpa::build_rpa_m1(&ints)),
        Input::Integrals(ints) => Ok(mrpa::build_mrpa_matrices(&ints, cfg.rank).map_err(|e| e.at("build_mrpa_matrices"))?),
        Input::Care(_) => Err(CliError::io("read_input", "this command needs RPA matrices or an integral file".into())),
    }
}

/// The CARE of the input, and the RPA matrices it came from if any.
fn care_problem(cfg: &RunConfig, input: Input) -> Result<(CareProblem, Option<RpaMatrices>), CliError> {
    let (prob, mats) = match input {
        Input::Care(p) => (p, None),
        other => {
            let mats = rpa_matrices(cfg, other)?;
            (mrpa::rpa_to_care(&mats).map_err(|e| e.at("rpa_to_care"))?, Some(mats))
        }
    };
    if let Some(path) = &cfg.export_care {
        io::emit(&io::to_json(&care_json(&prob)), Some(path))?;
    }
    Ok((prob, mats))
}

struct Setup {
    h: CMat,
    delta: f64,
    alpha_h: f64,
    contour: SmoothedSemicircle,
}

/// Hamiltonian, gap, `α_H = max(1, ‖H‖)` and the default contour.
fn setup(prob: &CareProblem) -> Result<Setup, CliError> {
    let ham = build_hamiltonian(prob);
    let delta = require_gap(&ham).map_err(|e| e.at("spectral_split"))?.delta;
    let alpha_h = norm2(&ham.h).max(1.0);
    let contour = contour::select_parameters(alpha_h, delta).map_err(|e| e.at("select_parameters"))?;
    Ok(Setup { h: ham.h, delta, alpha_h, contour })
}

fn pipeline_config(cfg: &RunConfig, eps_x: f64) -> PipelineConfig {
    PipelineConfig {
        eps_x,
        eps_trap: cfg.eps_trap,
        eps_pol_pi: cfg.eps_pol_pi,
        eps_pol_plus: cfg.eps_pol_plus,
        nodes: cfg.nodes,
        ..Default::default()
    }
}

fn encode_solution(cfg: &RunConfig, s: &Setup, eps_x: f64) -> Result<(BlockEncoding, PipelineReport), CliError> {
    let be_h = dilation_encode(&s.h, s.alpha_h).map_err(|e| e.at("encode_hamiltonian"))?;
    Ok(care_solution_encode(&be_h, &s.contour, &pipeline_config(cfg, eps_x))?)
}

fn threads() -> usize {
    std::env::var("RIESZCARE_THREADS")
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&n: &usize| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// `f` over `items` on worker threads, results in input order.
fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let n = threads().min(items.len()).max(1);
    let chunk = items.len().div_ceil(n).max(1);
    std::thread::scope(|scope| {
        let handles: Vec<_> = items.chunks(chunk).map(|part| scope.spawn(|| part.iter().map(&f).collect::<Vec<R>>())).collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
    })
}

fn care_solve(cfg: &RunConfig, input: Input) -> Result<String, CliError> {
    let (prob, mats) = care_problem(cfg, input)?;
    let s = setup(&prob)?;
    let sol = solve_care_sign(&prob).map_err(|e| e.at("solve_care_sign"))?;
    let pi = riesz_projector_exact(&s.h).map_err(|e| e.at("riesz_projector_exact"))?;
    let proj = extract_solution_from_projector(&pi, prob.n, Some(&prob), DEFAULT_RANK_RTOL).map_err(|e| e.at("extract_solution_from_projector"))?;
    let sign = sign_newton(&s.h, DEFAULT_SIGN_TOL, DEFAULT_SIGN_MAX_ITER).map_err(|e| e.at("sign_newton"))?;
    let xn = norm2(&sol.x);
    let mut out = json!({
        "command": "care-solve",
        "n": prob.n,
        "gap": s.delta,
        "x": matrix_json(&sol.x),
        "residual": sol.residual_norm,
        "relative_residual": sol.residual_norm / (1.0 + xn * norm2(&s.h)),
        "stability_margin": sol.stability_margin,
        "stabilizing": sol.is_stabilizing(),
        "hermiticity_defect": sol.hermiticity_defect,
        "projector_route": {
            "residual": proj.residual_norm,
            "stability_margin": proj.stability_margin,
            "relative_difference": norm2(&(&proj.x - &sol.x)) / xn.max(1.0),
        },
        "sign_riesz_defect": norm2(&(sign - (pi * c(2.0, 0.0) - eye(2 * prob.n)))),
    });
    if let Some(m) = mats {
        out["rpa_correlation_energy"] = json!(mrpa::correlation_energy(&m.b, &real_part(&sol.x))?);
    }
    Ok(io::to_json(&out))
}

fn quadrature_study(cfg: &RunConfig, input: Input) -> Result<String, CliError> {
    let (prob, _) = care_problem(cfg, input)?;
    let s = setup(&prob)?;
    let samples = contour::default_samples(&s.contour);
    let bounds = contour::resolvent_bounds(&s.h, &s.contour, contour::admissible_eta(&s.contour), samples).map_err(|e| e.at("resolvent_bounds"))?;
    let exact = riesz_projector_exact(&s.h).map_err(|e| e.at("riesz_projector_exact"))?;
    let top = cfg.nodes.unwrap_or_else(|| contour::nodes_for_accuracy(&bounds, cfg.eps_trap.unwrap_or(1e-10)));
    let mut ms: Vec<usize> = std::iter::successors(Some(4usize), |m| Some(m * 2)).take_while(|&m| m < top).collect();
    ms.push(top);
    let rows = par_map(&ms, |&m| contour::convergence_study(&s.h, &exact, &s.contour, &bounds, &[m]));
    let rows: Vec<_> = rows.into_iter().collect::<Result<Vec<_>, _>>().map_err(|e| e.at("convergence_study"))?.into_iter().flatten().collect();
    if cfg.format == Format::Csv {
        let body: Vec<Vec<String>> =
            rows.iter().map(|r| vec![r.m.to_string(), sci(r.eps_measured), sci(r.eps_bound), sci(r.eta), sci(r.chi), sci(r.m_gamma)]).collect();
        return Ok(io::to_csv(&["m", "eps_measured", "eps_bound", "eta", "chi", "m_gamma"], &body));
    }
    let slope = contour::fit_slope(&rows.iter().map(|r| (r.m, r.eps_measured)).collect::<Vec<_>>(), 1e-10);
    Ok(io::to_json(&json!({
        "command": "quadrature-study",
        "alpha_h": s.alpha_h,
        "gap": s.delta,
        "contour": s.contour,
        "bounds": bounds,
        "samples": samples,
        "rows": rows,
        "slope": slope,
    })))
}

fn riesz_encode(cfg: &RunConfig, input: Input) -> Result<String, CliError> {
    let (prob, _) = care_problem(cfg, input)?;
    let s = setup(&prob)?;
    let (x, report) = encode_solution(cfg, &s, cfg.eps_x.unwrap_or(PipelineConfig::default().eps_x))?;
    let xs = solve_care_sign(&prob).map_err(|e| e.at("classical_reference"))?.x;
    Ok(io::to_json(&json!({
        "command": "riesz-encode",
        "alpha_h": s.alpha_h,
        "gap": s.delta,
        "contour": s.contour,
        "x_encoded": matrix_json(&x.block()),
        "x_classical": matrix_json(&xs),
        "unitarity_defect": x.unitarity_defect(),
        "report": report,
    })))
}

fn rpa_energy(cfg: &RunConfig, input: Input) -> Result<String, CliError> {
    let mats = rpa_matrices(cfg, input)?;
    let prob = mrpa::rpa_to_care(&mats).map_err(|e| e.at("rpa_to_care"))?;
    if let Some(path) = &cfg.export_care {
        io::emit(&io::to_json(&care_json(&prob)), Some(path))?;
    }
    let n = mats.dim();
    let decoupled = mats.b.iter().all(|&x| x == 0.0);
    let (e_plasmon, e_care, t) = if decoupled {
        (0.0, 0.0, DMatrix::zeros(n, n))
    } else {
        let ep = mrpa::plasmon_energy(&mats).map_err(|e| e.at("plasmon_energy"))?;
        let t = real_part(&solve_care_sign(&prob).map_err(|e| e.at("solve_care_sign"))?.x);
        (ep, mrpa::correlation_energy(&mats.b, &t)?, t)
    };
    let omegas = mrpa::excitation_energies(&mats).map_err(|e| e.at("excitation_energies"))?;
    let mut out = json!({
        "command": "rpa-energy",
        "m": mats.m,
        "basis_size": n,
        "e_plasmon": e_plasmon,
        "e_care": e_care,
        "route_difference": (e_plasmon - e_care).abs(),
        "riccati_residual": mrpa::riccati_residual_mrpa(&mats.a, &mats.b, &t),
        "excitation_energies": omegas,
        "amplitudes": matrix_json(&from_real(&t)),
        "structure": mats.structure(),
    });
    if cfg.with_estimate {
        let (energy, eps_t_required, report) = run_estimate(cfg, &mats, &prob, cfg.eps_c, cfg.seed)?;
        out["estimate"] = estimate_json(&energy, eps_t_required, report.as_ref(), e_plasmon);
    }
    Ok(io::to_json(&out))
}

/// Pipeline plus sampled estimate at `eps_c`. The encoded-solution target
/// defaults to the largest `ε_T` the estimate tolerates.
fn run_estimate(
    cfg: &RunConfig,
    mats: &RpaMatrices,
    prob: &CareProblem,
    eps_c: f64,
    seed: u64,
) -> Result<(EnergyReport, f64, Option<PipelineReport>), CliError> {
    let b = from_real(&mats.b);
    if mats.b.iter().all(|&x| x == 0.0) {
        let e = estimate_energy(&b, &rieszcare::blockenc::identity_encode(mats.dim()), eps_c, cfg.volume, cfg.pf, seed)?;
        return Ok((e, f64::INFINITY, None));
    }
    let lambda_b = state_encodings(&b).map_err(|e| e.at("state_encodings"))?.lambda_b;
    let required = 2.0 * cfg.volume * eps_c / lambda_b;
    let s = setup(prob)?;
    let (x, report) = encode_solution(cfg, &s, cfg.eps_x.unwrap_or(required))?;
    let e = estimate_energy(&b, &x, eps_c, cfg.volume, cfg.pf, seed).map_err(|e| e.at("amplitude_estimate_trace"))?;
    Ok((e, required, Some(report)))
}

fn estimate_json(e: &EnergyReport, eps_t_required: f64, pipeline: Option<&PipelineReport>, reference: f64) -> Value {
    let pipeline = pipeline.map(|r| {
        json!({
            "alpha_h": r.alpha_h,
            "nodes": r.nodes,
            "alpha_x": r.alpha_x,
            "eps_x": r.eps_x,
            "budget_met": r.budget_met,
            "oracle_error_x": r.oracle_error_x,
            "query_count_h": r.query_count_h,
            "ancilla_ledger": r.ancilla_ledger,
        })
    });
    let reference = reference / e.volume;
    json!({
        "energy": e.energy,
        "energy_imag": e.energy_imag,
        "eps_c": e.eps_c,
        "volume": e.volume,
        "eps_t_required": if eps_t_required.is_finite() { json!(eps_t_required) } else { Value::Null },
        "reference": reference,
        "abs_error": (e.energy - reference).abs(),
        "within_eps": (e.energy - reference).abs() <= e.eps_c,
        "pipeline": pipeline,
        "trace": e.trace,
    })
}

fn estimate(cfg: &RunConfig, input: Input) -> Result<String, CliError> {
    let mats = rpa_matrices(cfg, input)?;
    let prob = mrpa::rpa_to_care(&mats).map_err(|e| e.at("rpa_to_care"))?;
    if let Some(path) = &cfg.export_care {
        io::emit(&io::to_json(&care_json(&prob)), Some(path))?;
    }
    let reference = if mats.b.iter().all(|&x| x == 0.0) { 0.0 } else { mrpa::plasmon_energy(&mats).map_err(|e| e.at("plasmon_energy"))? };
    if cfg.format == Format::Json {
        let (e, required, report) = run_estimate(cfg, &mats, &prob, cfg.eps_c, cfg.seed)?;
        let mut out = estimate_json(&e, required, report.as_ref(), reference);
        out["command"] = json!("estimate");
        out["seed"] = json!(cfg.seed);
        return Ok(io::to_json(&out));
    }
    // Sweep ε_c over {8, 4, 2, 1}·eps_c with one encoding sized for the
    // smallest.
    let b = from_real(&mats.b);
    let x = if mats.b.iter().any(|&x| x != 0.0) {
        let lambda_b = state_encodings(&b)?.lambda_b;
        let s = setup(&prob)?;
        Some(encode_solution(cfg, &s, cfg.eps_x.unwrap_or(2.0 * cfg.volume * cfg.eps_c / lambda_b))?.0)
    } else {
        None
    };
    let eps: Vec<(usize, f64)> = [8.0, 4.0, 2.0, 1.0].iter().map(|f| f * cfg.eps_c).enumerate().collect();
    let rows = par_map(&eps, |&(i, ec)| -> Result<Vec<String>, CliError> {
        let seed = split_seed(cfg.seed, i as u64);
        let e = match &x {
            Some(x) => estimate_energy(&b, x, ec, cfg.volume, cfg.pf, seed)?,
            None => estimate_energy(&b, &rieszcare::blockenc::identity_encode(mats.dim()), ec, cfg.volume, cfg.pf, seed)?,
        };
        let queries = e.trace.as_ref().map_or(0, |t| t.grover_queries);
        let err = (e.energy - reference / cfg.volume).abs();
        Ok(vec![sci(4.0 * cfg.volume * ec), sci(ec), queries.to_string(), sci(err), seed.to_string()])
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(io::to_csv(&["eps", "eps_c", "queries", "error", "seed"], &rows))
}
