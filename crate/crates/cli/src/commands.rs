//! The `solve`, `weights`, `verify` and `glm` subcommands.

use std::path::Path;
use std::time::Instant;

use elfving_core::elfving::{design_from_solution, ZERO_WEIGHT};
use elfving_core::linalg::{self, rank};
use elfving_core::model::{back_transform, turning_point_c, DesignSpace};
use elfving_core::oracle::{lp_elfving, sign_enumeration_for, weight_grid_for};
use elfving_core::{
    signs_and_weights, solve, DesignMeasure, GridSpec, Matrix, SupportPoint, Vector, WeightSignSolution,
};

use crate::problem::{read_problem_file, ModelSection, Problem, ProblemFile, SupportList, Target};
use crate::report::{entries, vector, ResultDocument, Timing, TransformedSection, VerifyReport, TOOL, VERSION};
use crate::{fmt_sig, round_sig, CliError, DEFAULT_PRECISION};

/// Number of samples written by `--emit-curves`.
pub const CURVE_SAMPLES: usize = 401;
/// Relative slack between a stored criterion and its recomputation; stored
/// numbers carry 12 significant digits.
pub const STORED_PSI_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Default)]
pub struct Globals {
    pub seed: Option<u64>,
    pub starts: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum VerifyMethod {
    /// Linear program over a grid of the design space.
    Lp,
    /// Exhaustive sign patterns on the stored support.
    Signs,
    /// Weight lattice on the stored support.
    Grid,
}

#[derive(Debug, Clone, Default)]
pub struct GlmArgs {
    pub theta: Vec<f64>,
    pub c: Option<Vec<f64>>,
    pub turning_point: bool,
    pub domain: Option<[f64; 2]>,
}

fn precision(file: &ProblemFile) -> usize {
    file.output.precision.unwrap_or(DEFAULT_PRECISION).clamp(1, 17)
}

/// Assembles a document for a design found in the solved space. `signs`
/// are aligned with `design`'s support.
fn document(
    file: &ProblemFile,
    command: &str,
    problem: &Problem,
    design: &DesignMeasure,
    sol: &WeightSignSolution,
    signs: &[i8],
    psi: f64,
) -> Result<ResultDocument, CliError> {
    let digits = precision(file);
    let (user_design, transformed) = match (&problem.glm, problem.base.curve_model()) {
        (Some(g), Some(base)) => {
            let back = back_transform(base, design, None)?;
            let b = g.b().row_iter().map(|r| r.iter().map(|&x| round_sig(x, digits)).collect()).collect();
            let t = TransformedSection {
                b,
                target: vector(&problem.solved.c, digits),
                design: entries(design, signs, digits),
            };
            (entries(&back, signs, digits), Some(t))
        }
        _ => (entries(design, signs, digits), None),
    };
    Ok(ResultDocument {
        tool: TOOL.into(),
        version: VERSION.into(),
        command: command.into(),
        seed: None,
        starts: None,
        input: file.clone(),
        design: user_design,
        gamma: round_sig(sol.gamma, digits),
        elfving_point: vector(&sol.elfving_point, digits),
        psi: round_sig(psi, digits),
        transformed,
        certificate: None,
        warnings: Vec::new(),
        timing: Timing { seconds: 0.0, objective_evals: None },
    })
}

pub fn cmd_solve(path: &Path, globals: &Globals) -> Result<ResultDocument, CliError> {
    solve_file(&read_problem_file(path)?, "solve", globals)
}

pub fn solve_file(file: &ProblemFile, command: &str, globals: &Globals) -> Result<ResultDocument, CliError> {
    let problem = file.build(None)?;
    let settings = file.settings(globals.seed, globals.starts)?;
    let start = Instant::now();
    let r = solve(&problem.solved, &settings)?;
    let seconds = start.elapsed().as_secs_f64();
    let mut doc = document(file, command, &problem, &r.design, &r.solution, &r.solution.signs, r.psi)?;
    doc.seed = Some(settings.seed);
    doc.starts = Some(settings.starts);
    doc.timing = Timing { seconds, objective_evals: Some(r.objective_evals) };
    Ok(doc)
}

pub fn cmd_weights(path: &Path, c: Option<&Target>) -> Result<ResultDocument, CliError> {
    let mut file = read_problem_file(path)?;
    if let Some(c) = c {
        file.c = Some(c.clone());
    }
    weights_file(&file)
}

/// Optimal weights on the file's prescribed support. A linearly dependent
/// support is reduced first; the dropped points are named in a warning.
pub fn weights_file(file: &ProblemFile) -> Result<ResultDocument, CliError> {
    let problem = file.build(None)?;
    let start = Instant::now();
    let (points, us): (Vec<Vector>, Option<Vec<f64>>) = match (&file.support, &problem.solved.space) {
        (Some(SupportList::Values(us)), DesignSpace::Curve(m)) => {
            let pts = us.iter().map(|&u| m.features(u)).collect::<Result<Vec<_>, _>>()?;
            (pts, Some(us.clone()))
        }
        (Some(SupportList::Vectors(vs)), DesignSpace::Points(_)) => {
            (vs.iter().map(|v| Vector::from_column_slice(v)).collect(), None)
        }
        (None, DesignSpace::Points(pts)) => (pts.clone(), None),
        (None, DesignSpace::Curve(_)) => return Err(CliError::input("weights: the file needs a support list")),
        (Some(SupportList::Values(_)), DesignSpace::Points(_)) => {
            return Err(CliError::input("support: a point-set model takes a list of vectors"))
        }
        (Some(SupportList::Vectors(_)), DesignSpace::Curve(_)) => {
            return Err(CliError::input("support: a curve model takes a list of design-variable values"))
        }
    };
    if points.is_empty() {
        return Err(CliError::input("support is empty"));
    }
    let k = problem.solved.dimension();
    if points.iter().any(|p| p.len() != k) {
        return Err(CliError::input(format!("support vectors must have length {k}")));
    }
    let tol = problem.solved.tol;
    let sol = signs_and_weights(&points, &problem.solved.c, None, &tol)?;

    let mut warnings = Vec::new();
    if rank(&Matrix::from_columns(&points), &tol) < points.len() {
        let dropped: Vec<String> = (0..points.len())
            .filter(|&i| sol.weights[i] <= ZERO_WEIGHT)
            .map(|i| match &us {
                Some(us) => format!("u = {}", fmt_sig(us[i], 12)),
                None => format!("#{} ({})", i + 1, points[i].iter().map(|&x| fmt_sig(x, 12)).collect::<Vec<_>>().join(", ")),
            })
            .collect();
        warnings.push(format!("support is linearly dependent; dropped {}", dropped.join("; ")));
    }

    let design = design_from_solution(&points, us.as_deref(), &sol)?;
    let signs: Vec<i8> = (0..points.len()).filter(|&i| sol.weights[i] > ZERO_WEIGHT).map(|i| sol.signs[i]).collect();
    let psi = linalg::psi(&design, &problem.solved.c, &tol)?;
    let mut doc = document(file, "weights", &problem, &design, &sol, &signs, psi)?;
    doc.warnings = warnings;
    doc.timing = Timing { seconds: start.elapsed().as_secs_f64(), objective_evals: None };
    Ok(doc)
}

/// Rebuilds the stored design in the solved space. Curve designs are
/// re-evaluated from their design variable.
fn stored_design(problem: &Problem, doc: &ResultDocument) -> Result<DesignMeasure, CliError> {
    if doc.design.is_empty() {
        return Err(CliError::input("result document has an empty design"));
    }
    let support = doc
        .design
        .iter()
        .map(|e| {
            if problem.is_curve() {
                let u = e.u.ok_or_else(|| CliError::input("design entry of a curve model has no u"))?;
                Ok(SupportPoint::with_u(problem.solved_features(u)?, u, e.weight))
            } else {
                Ok(SupportPoint::new(Vector::from_column_slice(&e.x), e.weight))
            }
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(DesignMeasure::normalized(support)?)
}

/// Points per unit of the design variable giving `n` grid points overall.
fn lp_density(problem: &Problem, n: usize) -> Result<usize, CliError> {
    match problem.solved.curve_model() {
        Some(m) => {
            if n < 2 {
                return Err(CliError::input("--grid must be at least 2"));
            }
            let width = m.domain.1 - m.domain.0;
            Ok(((n - 1) as f64 / width).round().max(1.0) as usize)
        }
        None => Ok(GridSpec::default().points_per_unit),
    }
}

pub fn cmd_verify(path: &Path, method: VerifyMethod, grid: Option<usize>) -> Result<VerifyReport, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    verify_document(&ResultDocument::parse(&text)?, method, grid)
}

/// Recomputes the criterion of the stored design and certifies it with the
/// chosen oracle. `grid` is the number of grid points on the domain for
/// `lp` and the lattice resolution for `grid`.
pub fn verify_document(doc: &ResultDocument, method: VerifyMethod, grid: Option<usize>) -> Result<VerifyReport, CliError> {
    let problem = doc.input.build(None)?;
    let design = stored_design(&problem, doc)?;
    let c = &problem.solved.c;
    let tol = problem.solved.tol;
    let recomputed = linalg::psi(&design, c, &tol)?;
    let consistent = (recomputed - doc.psi).abs() <= STORED_PSI_TOL * recomputed.abs();

    let mut spec = GridSpec::default();
    let points = design.points();
    let weights = design.weights();
    let certificate = match method {
        VerifyMethod::Lp => {
            if let Some(n) = grid {
                spec.points_per_unit = lp_density(&problem, n)?;
            }
            lp_elfving(&problem.solved, &spec, recomputed)?
        }
        VerifyMethod::Signs => {
            let signs: Vec<i8> = doc.design.iter().map(|e| e.sign).collect();
            sign_enumeration_for(&points, c, &signs, &weights, recomputed, &spec, &tol)?
        }
        VerifyMethod::Grid => {
            if let Some(n) = grid {
                spec.simplex_resolution = n;
            }
            weight_grid_for(&points, c, &weights, recomputed, &spec, &tol)?
        }
    };
    Ok(VerifyReport {
        stored_psi: doc.psi,
        recomputed_psi: round_sig(recomputed, DEFAULT_PRECISION),
        consistent,
        pass: certificate.pass && consistent,
        certificate,
    })
}

/// The problem file a `glm` invocation stands for.
pub fn glm_problem(args: &GlmArgs) -> Result<ProblemFile, CliError> {
    let c = match (&args.c, args.turning_point) {
        (Some(c), false) => c.clone(),
        (None, true) => turning_point_c(&Vector::from_column_slice(&args.theta))?.as_slice().to_vec(),
        _ => return Err(CliError::input("give exactly one of --c and --turning-point")),
    };
    Ok(ProblemFile {
        c: Some(Target::Vector(c)),
        support: None,
        model: ModelSection::Logistic { theta_hat: args.theta.clone(), domain: args.domain },
        optimizer: Default::default(),
        tolerances: Default::default(),
        output: Default::default(),
    })
}

pub fn cmd_glm(args: &GlmArgs, globals: &Globals) -> Result<(ResultDocument, ProblemFile), CliError> {
    let file = glm_problem(args)?;
    Ok((solve_file(&file, "glm", globals)?, file))
}

/// CSV samples of the curve `x(u)`, the transformed curve `g(u)` and its
/// reflection `-g(u)`, at [`CURVE_SAMPLES`] equally spaced `u`.
pub fn curves_csv(file: &ProblemFile) -> Result<String, CliError> {
    let problem = file.build(None)?;
    let (Some(base), Some(solved)) = (problem.base.curve_model(), problem.solved.curve_model()) else {
        return Err(CliError::input("curves need a curve model"));
    };
    let k = base.dimension();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["u".to_string()];
    for prefix in ["x", "g", "gm"] {
        header.extend((1..=k).map(|i| format!("{prefix}{i}")));
    }
    w.write_record(&header).expect("in-memory write");
    let (lo, hi) = base.domain;
    for i in 0..CURVE_SAMPLES {
        let u = if i + 1 == CURVE_SAMPLES { hi } else { lo + (hi - lo) * i as f64 / (CURVE_SAMPLES - 1) as f64 };
        let x = base.features(u)?;
        let g = solved.features(u)?;
        let mut row = vec![fmt_sig(u, DEFAULT_PRECISION)];
        row.extend(x.iter().chain(g.iter()).map(|&v| fmt_sig(v, DEFAULT_PRECISION)));
        row.extend(g.iter().map(|&v| fmt_sig(-v, DEFAULT_PRECISION)));
        w.write_record(&row).expect("in-memory write");
    }
    Ok(String::from_utf8(w.into_inner().expect("flush")).expect("utf8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::parse_problem;
    use crate::EXIT_ESTIMABILITY;

    fn quick() -> Globals {
        Globals { seed: Some(1), starts: Some(8) }
    }

    #[test]
    fn line_slope_design() {
        let f = parse_problem("c = \"e2\"\n[model]\ntype = \"polynomial\"\nk = 2\n", false).unwrap();
        let doc = solve_file(&f, "solve", &quick()).unwrap();
        assert_eq!(doc.psi, 1.0);
        let us: Vec<f64> = doc.design.iter().map(|e| e.u.unwrap()).collect();
        assert_eq!(us, vec![-1.0, 1.0]);
        assert_eq!(doc.design.iter().map(|e| e.sign).collect::<Vec<_>>(), vec![-1, 1]);
    }

    #[test]
    fn document_round_trips() {
        let f = parse_problem("c = \"e3\"\n[model]\ntype = \"polynomial\"\nk = 4\n", false).unwrap();
        let doc = solve_file(&f, "solve", &quick()).unwrap();
        let text = serde_json::to_string(&doc).unwrap();
        let back = ResultDocument::parse(&text).unwrap();
        assert_eq!(back, doc);
        assert_eq!(serde_json::to_string(&back).unwrap(), text);
    }

    #[test]
    fn weights_on_single_collinear_point() {
        let f = parse_problem("c = [2, 4]\n[model]\ntype = \"points\"\npoints = [[1, 2]]\n", false).unwrap();
        let doc = weights_file(&f).unwrap();
        assert_eq!(doc.design.len(), 1);
        assert_eq!(doc.design[0].weight, 1.0);
        assert!((doc.psi - 4.0).abs() < 1e-12);
    }

    #[test]
    fn weights_outside_span_is_estimability_error() {
        let f = parse_problem("c = [0, 1]\n[model]\ntype = \"points\"\npoints = [[1, 0]]\n", false).unwrap();
        assert_eq!(weights_file(&f).unwrap_err().code, EXIT_ESTIMABILITY);
    }

    #[test]
    fn dependent_support_warns_with_dropped_points() {
        let f = parse_problem(
            "c = \"e2\"\nsupport = [-1, -0.5, 0, 0.5, 1]\n[model]\ntype = \"polynomial\"\nk = 2\n",
            false,
        )
        .unwrap();
        let doc = weights_file(&f).unwrap();
        assert_eq!(doc.warnings.len(), 1);
        assert!(doc.warnings[0].contains("u = 0"), "{}", doc.warnings[0]);
        assert_eq!(doc.design.len(), 2);
        assert!((doc.psi - 1.0).abs() < 1e-9);
    }

    #[test]
    fn verify_detects_tampering() {
        let f = parse_problem("c = \"e2\"\n[model]\ntype = \"polynomial\"\nk = 3\n", false).unwrap();
        let doc = solve_file(&f, "solve", &quick()).unwrap();
        assert!(verify_document(&doc, VerifyMethod::Lp, None).unwrap().pass);
        assert!(verify_document(&doc, VerifyMethod::Signs, None).unwrap().pass);

        let mut bad = doc.clone();
        bad.design[0].weight += 0.05;
        let total: f64 = bad.design.iter().map(|e| e.weight).sum();
        bad.design.iter_mut().for_each(|e| e.weight /= total);
        let report = verify_document(&bad, VerifyMethod::Lp, None).unwrap();
        assert!(!report.pass);
        assert!(report.certificate.gap > 0.0);
        assert!(!report.consistent);
    }

    #[test]
    fn turning_point_target() {
        let args = GlmArgs { theta: vec![2.0, -6.0, -9.0], turning_point: true, ..Default::default() };
        let f = glm_problem(&args).unwrap();
        assert_eq!(f.c, Some(Target::Vector(vec![0.0, 9.0, -6.0])));
        let flat = GlmArgs { theta: vec![2.0, -6.0, 0.0], turning_point: true, ..Default::default() };
        assert_eq!(glm_problem(&flat).unwrap_err().code, crate::EXIT_MODEL);
    }

    #[test]
    fn curves_have_expected_shape() {
        let args = GlmArgs { theta: vec![2.0, -6.0, -9.0], c: Some(vec![-0.195, 0.1, -0.243]), ..Default::default() };
        let text = curves_csv(&glm_problem(&args).unwrap()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), CURVE_SAMPLES + 1);
        assert_eq!(lines[0], "u,x1,x2,x3,g1,g2,g3,gm1,gm2,gm3");
        assert!(lines[1].starts_with("-1,1,-1,1,"));
        assert!(lines[CURVE_SAMPLES].starts_with("1,1,1,1,"));
    }
}
