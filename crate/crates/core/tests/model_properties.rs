use elfving_core::model::{back_transform, logistic_weight, transformed_problem, turning_point_c};
use elfving_core::oracle::lp_elfving;
use elfving_core::{solve, CurveModel, DesignMeasure, GlmTransform, GridSpec, Matrix, ProblemSpec, SolveSettings, Vector};
use proptest::prelude::*;

fn v(xs: &[f64]) -> Vector {
    Vector::from_column_slice(xs)
}

fn settings() -> SolveSettings {
    SolveSettings { starts: 12, ..SolveSettings::default() }
}

fn solve_logistic(g: &GlmTransform, c: &Vector) -> (DesignMeasure, f64) {
    let base = ProblemSpec::curve(CurveModel::quadratic_logistic(), c.clone()).unwrap();
    let problem = transformed_problem(g, &base).unwrap();
    let r = solve(&problem, &settings()).unwrap();
    let design = back_transform(base.curve_model().unwrap(), &r.design, None).unwrap();
    (design, r.psi)
}

/// Logistic information `sum p w(eta)^2 x x'` evaluated directly in u.
fn logistic_information(theta: &Vector, design: &DesignMeasure) -> Matrix {
    let mut m = Matrix::zeros(3, 3);
    for sp in design.support() {
        let u = sp.u.unwrap();
        let x = v(&[1.0, u, u * u]);
        let eta = theta.dot(&x);
        let w2 = eta.exp() / (1.0 + eta.exp()).powi(2);
        m += &x * x.transpose() * (sp.weight * w2);
    }
    m
}

/// Completion of `theta / |theta|` to an orthonormal basis, rotated by `angle`
/// within the orthogonal complement.
fn rotated_completion(theta: &Vector, angle: f64) -> Matrix {
    let h = GlmTransform::new(theta).unwrap().orthonormal().clone();
    let (s, c) = angle.sin_cos();
    let rot = Matrix::from_row_slice(3, 3, &[c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0]);
    rot * h
}

#[test]
fn worked_logistic_transform() {
    let theta = v(&[2.0, -6.0, -9.0]);
    let g = GlmTransform::new(&theta).unwrap();
    assert_eq!(g.b().row(2).transpose(), theta);
    for i in 0..3 {
        assert!((g.b().row(i).norm() - 11.0).abs() < 1e-9);
    }
    let bc = g.transform_target(&v(&[-0.195, 0.1, -0.243]));
    assert!((bc[2] - 1.197).abs() < 1e-3);
    assert!((bc.norm() - 3.600).abs() < 2e-3);
}

#[test]
fn worked_logistic_design_is_optimal_in_dose_space() {
    let theta = v(&[2.0, -6.0, -9.0]);
    let c = v(&[-0.195, 0.1, -0.243]);
    let (design, psi) = solve_logistic(&GlmTransform::new(&theta).unwrap(), &c);
    assert!(design.len() <= 3);
    assert!(design.u_values().unwrap().iter().any(|&u| (u + 1.0).abs() < 1e-6));

    let m = logistic_information(&theta, &design);
    let m_inv = m.clone().try_inverse().unwrap();
    let direct = c.dot(&(&m_inv * &c));
    assert!((direct - psi).abs() <= 1e-6 * psi, "direct {direct} solver {psi}");

    // equivalence theorem: w(eta)^2 (x' M^-1 c)^2 <= c' M^-1 c everywhere
    let d = &m_inv * &c;
    let worst = (0..=4000)
        .map(|i| {
            let u = -1.0 + i as f64 / 2000.0;
            let x = v(&[1.0, u, u * u]);
            let eta = theta.dot(&x);
            eta.exp() / (1.0 + eta.exp()).powi(2) * x.dot(&d).powi(2)
        })
        .fold(0.0f64, f64::max);
    assert!(worst <= direct * (1.0 + 1e-6), "sensitivity {worst} exceeds {direct}");
}

#[test]
fn worked_logistic_agrees_with_lp() {
    let theta = v(&[2.0, -6.0, -9.0]);
    let g = GlmTransform::new(&theta).unwrap();
    let base = ProblemSpec::curve(CurveModel::quadratic_logistic(), v(&[-0.195, 0.1, -0.243])).unwrap();
    let problem = transformed_problem(&g, &base).unwrap();
    let r = solve(&problem, &settings()).unwrap();
    let cert = lp_elfving(&problem, &GridSpec::default(), r.psi).unwrap();
    assert!(cert.pass, "{cert:?}");
}

#[test]
fn turning_point_design() {
    let theta = v(&[2.0, -6.0, -9.0]);
    let c = turning_point_c(&theta).unwrap();
    assert_eq!(c, v(&[0.0, 9.0, -6.0]));
    let (design, psi) = solve_logistic(&GlmTransform::new(&theta).unwrap(), &c);
    let m = logistic_information(&theta, &design);
    // two-point design: M is singular, invert on its range
    let e = m.symmetric_eigen();
    let top = e.eigenvalues.amax();
    let direct: f64 = (0..3)
        .filter(|&i| e.eigenvalues[i] > 1e-12 * top)
        .map(|i| e.eigenvectors.column(i).dot(&c).powi(2) / e.eigenvalues[i])
        .sum();
    assert!((direct - psi).abs() <= 1e-6 * psi);
    assert!(matches!(turning_point_c(&v(&[1.0, 2.0, 0.0])), Err(elfving_core::Error::TurningPointUndefined)));
}

#[test]
fn completion_choice_does_not_change_design() {
    let c = v(&[-0.195, 0.1, -0.243]);
    for theta in [v(&[2.0, -6.0, -9.0]), v(&[0.5, 1.0, -3.0]), v(&[-1.0, 2.0, -2.0])] {
        let (reference, _) = solve_logistic(&GlmTransform::new(&theta).unwrap(), &c);
        for angle in [0.7, 2.1, -1.3] {
            let g = GlmTransform::with_orthonormal(&theta, rotated_completion(&theta, angle)).unwrap();
            let (other, _) = solve_logistic(&g, &c);
            assert_eq!(other.len(), reference.len(), "theta {theta:?} angle {angle}");
            for (a, b) in reference.support().iter().zip(other.support()) {
                assert!((a.u.unwrap() - b.u.unwrap()).abs() < 1e-4, "{reference:?} vs {other:?}");
                assert!((a.weight - b.weight).abs() < 1e-4, "{reference:?} vs {other:?}");
            }
        }
    }
}

#[test]
fn rounded_printed_completion_reproduces_its_target() {
    let theta = v(&[2.0, -6.0, -9.0]);
    let dir = theta.normalize();
    // rows printed to three decimals, re-orthonormalized against theta
    let mut rows = vec![v(&[10.816, 1.110, 1.664]), v(&[0.0, 9.153, -6.102])];
    for i in 0..2 {
        let mut r = rows[i].clone() - dir.scale(rows[i].dot(&dir));
        for j in 0..i {
            r -= rows[j].scale(rows[j].dot(&r));
        }
        rows[i] = r.normalize();
    }
    let u = Matrix::from_rows(&[rows[0].transpose(), rows[1].transpose(), dir.transpose()]);
    let g = GlmTransform::with_orthonormal(&theta, u).unwrap();
    let bc = g.transform_target(&v(&[-0.195, 0.1, -0.243]));
    assert!((bc - v(&[-2.403, 2.398, 1.197])).amax() < 2e-3);
}

#[test]
fn logistic_weight_identity() {
    for i in -400..=400 {
        let z = i as f64 / 20.0;
        let w = logistic_weight(z);
        assert!((w * (1.0 + z.exp()) - (z / 2.0).exp()).abs() <= 1e-12 * (z / 2.0).exp().max(1.0));
        assert!((w - logistic_weight(-z)).abs() <= 1e-15);
    }
    assert_eq!(logistic_weight(0.0), 0.5);
    assert!(logistic_weight(80.0) < 1e-16);
}

#[test]
fn orthogonal_point_is_halved() {
    let theta = v(&[2.0, -6.0, -9.0]);
    let g = GlmTransform::new(&theta).unwrap();
    let model = CurveModel::quadratic_logistic().transformed(g.clone()).unwrap();
    // eta(u) = 2 - 6u - 9u^2 has a root in [-1, 1]
    let u = (-6.0 + (36.0f64 + 72.0).sqrt()) / 18.0;
    let x = v(&[1.0, u, u * u]);
    assert!(theta.dot(&x).abs() < 1e-12);
    let expected = (g.b() * &x) * 0.5;
    assert!((model.features(u).unwrap() - expected).amax() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn distinct_nodes_give_independent_features(k in 1usize..=10, seed in prop::collection::vec(-1.0f64..1.0, 10)) {
        let mut us: Vec<f64> = seed[..k].to_vec();
        us.sort_by(f64::total_cmp);
        prop_assume!(us.windows(2).all(|w| w[1] - w[0] > 1e-2));
        let model = CurveModel::polynomial(k).unwrap();
        let x = Matrix::from_columns(&us.iter().map(|&u| model.features(u).unwrap()).collect::<Vec<_>>());
        let product: f64 = (0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j))).map(|(i, j)| us[j] - us[i]).product();
        let det = x.determinant();
        prop_assert!(det != 0.0);
        prop_assert!((det.abs() - product.abs()).abs() <= 1e-6 * product.abs());
    }
}
