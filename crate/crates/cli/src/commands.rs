use std::f64::consts::PI;
use std::path::Path;
use std::time::Instant;

use qexcl::certify::{
    fidelity_condition, optimality_certificate, perm_lower_bound, witness_from_fidelity, BoundDetails, BoundReport,
    PermMode, DEFAULT_CERTIFICATE_TOL,
};
use qexcl::models::{ExclusionModel, Variant};
use qexcl::pbr::{self, PbrGame};
use qexcl::{solve as run_solver, SolveOptions, SolveReport, SolveStatus, WeightedOperators};

use crate::files::{encode_matrix, load_ensemble, load_measurement, measurement_file, operators_file, InputError};
use crate::report::{
    write_json, BoundSection, CertificateSection, PbrAnalytic, PbrSdp, PbrSection, Report, SolveSection, Timings,
};
use crate::{
    BoundArgs, CertifyArgs, Common, ConvertArgs, ConvertTarget, PbrArgs, PbrMode, SolveArgs, VariantArg, WhichBound,
};

/// `|alpha_sdp - alpha_analytic|` allowed in `pbr --mode both`.
const PBR_CONSISTENCY_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum Exit {
    Ok = 0,
    NotOptimal = 1,
    MaxIters = 2,
    Input = 3,
    NumericalFailure = 4,
    Degenerate = 5,
    ScaleCap = 6,
}

#[derive(Debug)]
pub struct CliError {
    pub code: Exit,
    pub message: String,
}

impl From<InputError> for CliError {
    fn from(e: InputError) -> Self {
        CliError {
            code: Exit::Input,
            message: e.to_string(),
        }
    }
}

impl From<qexcl::Error> for CliError {
    fn from(e: qexcl::Error) -> Self {
        use qexcl::Error::*;
        let code = match e {
            ScaleCap { .. } => Exit::ScaleCap,
            DegenerateK { .. } | BadSubsetSize { .. } | TooFewStates { .. } => Exit::Degenerate,
            _ => Exit::Input,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

type CmdResult = Result<Exit, CliError>;

fn write_report(path: &Path, report: &Report) -> Result<(), CliError> {
    write_json(path, report).map_err(|e| CliError {
        code: Exit::Input,
        message: format!("{}: {e}", path.display()),
    })
}

fn new_report(command: &str, args: Vec<String>, common: &Common) -> Report {
    Report {
        command: command.into(),
        args,
        seed: common.seed,
        solve: None,
        certificate: None,
        bound: None,
        pbr: None,
        timings: None,
    }
}

fn finish(mut report: Report, started: Instant, common: &Common, out: &Path) -> Result<(), CliError> {
    if common.timings {
        report.timings = Some(Timings {
            elapsed_seconds: started.elapsed().as_secs_f64(),
        });
    }
    write_report(out, &report)
}

fn status_exit(status: SolveStatus) -> Exit {
    match status {
        SolveStatus::Optimal => Exit::Ok,
        SolveStatus::MaxIters => Exit::MaxIters,
        SolveStatus::NumericalFailure => Exit::NumericalFailure,
    }
}

fn variant(v: VariantArg) -> Variant {
    match v {
        VariantArg::MinError => Variant::MinError,
        VariantArg::Unambiguous => Variant::Unambiguous,
        VariantArg::WorstCase => Variant::WorstCase,
    }
}

fn solve_section(
    model: &ExclusionModel,
    r: &SolveReport,
    labels: &[String],
    m: Option<usize>,
) -> Result<SolveSection, CliError> {
    let inconclusive = match model.variant() {
        Variant::Unambiguous => Some(model.inconclusive_element(&r.primal)?),
        _ => None,
    };
    Ok(SolveSection {
        variant: model.variant().name().into(),
        m,
        status: r.status.name().into(),
        alpha: r.alpha,
        beta: r.beta,
        gap: r.gap,
        iterations: r.iterations,
        primal_residual: r.primal_feasibility.max_equality_residual(),
        primal_margin: r.primal_feasibility.min_margin(),
        dual_residual: r.dual_feasibility.max_equality_residual(),
        dual_margin: r.dual_feasibility.min_margin(),
        measurement: measurement_file(labels, &r.primal.elements, inconclusive.as_ref()),
        dual_n: encode_matrix(r.dual.n.as_matrix()),
        dual_a: r.dual.a.clone(),
        lambda: r.primal.lambda,
    })
}

pub fn solve(a: &SolveArgs, args: Vec<String>) -> CmdResult {
    let started = Instant::now();
    let loaded = load_ensemble(&a.ensemble)?;
    let ops = match a.m {
        Some(m) => loaded.operators.m_state_reduction(m)?,
        None => loaded.operators,
    };
    let model = ExclusionModel::build(variant(a.variant), ops.operators().to_vec())?;
    let opts = SolveOptions {
        gap_tol: a.gap_tol,
        seed: a.common.seed,
        ..SolveOptions::default()
    };
    let r = run_solver(&model, &opts)?;
    let mut report = new_report("solve", args, &a.common);
    report.solve = Some(solve_section(&model, &r, ops.labels(), a.m)?);
    finish(report, started, &a.common, &a.out)?;
    println!(
        "{} alpha {:.12} beta {:.12} iterations {}",
        r.status.name(),
        r.alpha,
        r.beta,
        r.iterations
    );
    Ok(status_exit(r.status))
}

pub fn certify(a: &CertifyArgs, args: Vec<String>) -> CmdResult {
    let started = Instant::now();
    let loaded = load_ensemble(&a.ensemble)?;
    let m = load_measurement(&a.measurement)?;
    let cert = optimality_certificate(&loaded.operators, &m, DEFAULT_CERTIFICATE_TOL)?;
    let mut report = new_report("certify", args, &a.common);
    report.certificate = Some(CertificateSection {
        is_optimal: cert.is_optimal,
        alpha: cert.alpha,
        trace_n: cert.trace,
        n: encode_matrix(cert.n.as_matrix()),
        margins: cert.margins.clone(),
        hermiticity_residual: cert.hermiticity_residual,
        objective_match: cert.objective_match,
        tol: cert.tol,
    });
    finish(report, started, &a.common, &a.out)?;
    let verdict = if cert.is_optimal { "optimal" } else { "not optimal" };
    println!(
        "{verdict}: alpha {:.12} tr N {:.12} min margin {:.3e}",
        cert.alpha,
        cert.trace,
        cert.min_margin()
    );
    Ok(if cert.is_optimal { Exit::Ok } else { Exit::NotOptimal })
}

fn bound_section(b: &BoundReport, labels: &[String]) -> BoundSection {
    let mut s = BoundSection {
        kind: b.kind.name().into(),
        value: b.value,
        threshold: None,
        verdict: None,
        permutation: None,
        evaluated: None,
        sampled: None,
        eps: None,
        p: None,
        fidelity_sum: None,
        predicted_trace: None,
        weighted_bound: None,
        min_margin: None,
        n: None,
    };
    match &b.details {
        BoundDetails::Fidelity {
            threshold,
            exclusion_impossible,
        } => {
            s.threshold = Some(*threshold);
            s.verdict = Some(
                if *exclusion_impossible {
                    "necessary condition violated: conclusive exclusion impossible"
                } else {
                    "necessary condition met"
                }
                .into(),
            );
        }
        BoundDetails::Permutation {
            permutation,
            evaluated,
            seed,
            min_margin,
        } => {
            s.permutation = Some(permutation.iter().map(|&i| labels[i].clone()).collect());
            s.evaluated = Some(*evaluated);
            s.sampled = Some(seed.is_some());
            s.min_margin = Some(*min_margin);
        }
        BoundDetails::Witness {
            eps,
            p,
            fidelity_sum,
            min_margin,
            predicted_trace,
            weighted_bound,
        } => {
            s.eps = Some(*eps);
            s.p = Some(*p);
            s.fidelity_sum = Some(*fidelity_sum);
            s.min_margin = Some(*min_margin);
            s.predicted_trace = Some(*predicted_trace);
            s.weighted_bound = Some(*weighted_bound);
        }
    }
    s
}

pub fn bound(a: &BoundArgs, args: Vec<String>) -> CmdResult {
    let started = Instant::now();
    let loaded = load_ensemble(&a.ensemble)?;
    let labels = loaded.operators.labels().to_vec();
    let section = match a.which {
        WhichBound::Fidelity => bound_section(&fidelity_condition(&loaded.ensemble)?, &labels),
        WhichBound::Perm => bound_section(
            &perm_lower_bound(&loaded.operators, PermMode::Auto { seed: a.common.seed })?,
            &labels,
        ),
        WhichBound::Witness => {
            let (n, b) = witness_from_fidelity(&loaded.ensemble, a.eps)?;
            let mut s = bound_section(&b, &labels);
            s.n = Some(encode_matrix(n.as_matrix()));
            s
        }
    };
    println!("{} {:.12}", section.kind, section.value);
    let mut report = new_report("bound", args, &a.common);
    report.bound = Some(section);
    finish(report, started, &a.common, &a.out)?;
    Ok(Exit::Ok)
}

pub fn pbr(a: &PbrArgs, args: Vec<String>) -> CmdResult {
    let started = Instant::now();
    let theta = match (a.theta, a.theta_deg) {
        (Some(t), _) => t,
        (None, Some(deg)) => deg * PI / 180.0,
        (None, None) => unreachable!("clap requires one of --theta and --theta-deg"),
    };
    let game = PbrGame::new(a.n, theta)?;
    let analytic = (a.mode != PbrMode::Sdp).then(|| {
        let r = pbr::report(&game);
        PbrAnalytic {
            criterion_met: r.criterion_met,
            p_win_global: r.p_win_global,
            p_win_separable: r.p_win_separable,
            alpha_analytic: r.alpha_analytic,
            c_theta: r.c_theta,
            q: r.q,
        }
    });
    let mut exit = Exit::Ok;
    let sdp = if a.mode == PbrMode::Analytic {
        None
    } else {
        let opts = SolveOptions {
            seed: a.common.seed,
            ..SolveOptions::default()
        };
        let r = pbr::solve_game(&game, &opts)?;
        exit = status_exit(r.status);
        Some(PbrSdp {
            status: r.status.name().into(),
            alpha_sdp: r.alpha,
            beta: r.beta,
            gap: r.gap,
            iterations: r.iterations,
            p_win_global: 1.0 - r.alpha,
        })
    };
    let consistency = match (&analytic, &sdp) {
        (Some(an), Some(s)) => Some((s.alpha_sdp - an.alpha_analytic).abs()),
        _ => None,
    };
    if exit == Exit::Ok && consistency.is_some_and(|c| c > PBR_CONSISTENCY_TOL) {
        exit = Exit::NotOptimal;
    }
    if let Some(an) = &analytic {
        println!(
            "criterion {} p_win_global {:.12} p_win_separable {:.12}",
            an.criterion_met, an.p_win_global, an.p_win_separable
        );
    }
    if let Some(s) = &sdp {
        println!("sdp {} alpha {:.12}", s.status, s.alpha_sdp);
    }
    let mut report = new_report("pbr", args, &a.common);
    report.pbr = Some(PbrSection {
        n: a.n,
        theta,
        mode: format!("{:?}", a.mode).to_lowercase(),
        threshold_theta: pbr::threshold_theta(a.n),
        analytic,
        sdp,
        consistency,
    });
    finish(report, started, &a.common, &a.out)?;
    Ok(exit)
}

pub fn convert(a: &ConvertArgs) -> CmdResult {
    let loaded = load_ensemble(&a.ensemble)?;
    let ops: WeightedOperators = match a.to {
        ConvertTarget::Discrimination => loaded.operators.to_discrimination()?,
        ConvertTarget::MExclusion => {
            let Some(m) = a.m else {
                return Err(CliError {
                    code: Exit::Degenerate,
                    message: "--to m-exclusion requires --m".into(),
                });
            };
            loaded.operators.m_state_reduction(m)?
        }
    };
    write_json(&a.out, &operators_file(&ops)).map_err(|e| CliError {
        code: Exit::Input,
        message: format!("{}: {e}", a.out.display()),
    })?;
    println!("wrote {} operators", ops.len());
    Ok(Exit::Ok)
}
