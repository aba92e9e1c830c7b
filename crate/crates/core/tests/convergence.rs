//! Observed temporal orders on the manufactured solution.

use hybrid_ns::schemes::Method;
use hybrid_ns::studies::{convergence_study, ConvergenceRow, ConvergenceStudy, ParameterCoupling};

fn study(method: Method, coupling: ParameterCoupling) -> Vec<ConvergenceRow<f64>> {
    convergence_study(&ConvergenceStudy { mesh_n: 16, method, coupling, ..Default::default() }).unwrap()
}

#[test]
fn trapezoidal_velocity_is_second_order() {
    let rows = study(Method::HybridTrapezoidal, ParameterCoupling::ReciprocalDt2);
    let rates: Vec<f64> = rows.iter().filter_map(|r| r.rate_u).collect();
    assert_eq!(rates.len(), 4);
    assert!(rates.iter().all(|r| (r - 2.0).abs() <= 0.3), "{rates:?}");
}

#[test]
fn backward_euler_errors_fall_towards_first_order() {
    let rows = study(Method::HybridBeDecoupled, ParameterCoupling::ReciprocalDt2);
    assert!(rows.windows(2).all(|w| w[1].err_u < w[0].err_u && w[1].err_p < w[0].err_p));
    assert!(rows.windows(2).all(|w| w[1].div_norm < w[0].div_norm));
    let last = rows.last().unwrap().rate_u.unwrap();
    assert!((last - 1.0).abs() <= 0.25, "{last}");
}

#[test]
fn coupled_and_decoupled_tables_agree() {
    let dts = vec![0.25, 0.125];
    let run = |method| {
        convergence_study::<f64>(&ConvergenceStudy {
            mesh_n: 8,
            dts: dts.clone(),
            method,
            t_final: 0.5,
            ..Default::default()
        })
        .unwrap()
    };
    let coupled = run(Method::HybridBeCoupled);
    let projected = run(Method::HybridBeDecoupledProj);
    for (a, b) in coupled.iter().zip(&projected) {
        assert!((a.err_u - b.err_u).abs() <= 1e-8 * a.err_u, "{} vs {}", a.err_u, b.err_u);
        assert!((a.err_p - b.err_p).abs() <= 1e-6 * a.err_p, "{} vs {}", a.err_p, b.err_p);
    }
}
