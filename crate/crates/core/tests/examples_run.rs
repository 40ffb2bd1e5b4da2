#[path = "../examples/level_tori.rs"]
mod level_tori;
#[path = "../examples/averaging.rs"]
mod averaging;
#[path = "../examples/cusp_operator.rs"]
mod cusp_operator;
#[path = "../examples/ode_lemmas.rs"]
mod ode_lemmas;
#[path = "../examples/norms.rs"]
mod norms;
#[path = "../examples/poincare.rs"]
mod poincare;
#[path = "../examples/bootstrap.rs"]
mod bootstrap;
#[path = "../examples/compat_report.rs"]
mod compat_report;

#[test]
fn level_tori_runs() {
    level_tori::run_example().unwrap();
}

#[test]
fn averaging_runs() {
    averaging::run_example().unwrap();
}

#[test]
fn cusp_operator_runs() {
    cusp_operator::run_example().unwrap();
}

#[test]
fn ode_lemmas_runs() {
    ode_lemmas::run_example().unwrap();
}

#[test]
fn norms_runs() {
    norms::run_example().unwrap();
}

#[test]
fn poincare_runs() {
    poincare::run_example().unwrap();
}

#[test]
fn bootstrap_runs() {
    bootstrap::run_example().unwrap();
}

#[test]
fn compat_report_runs() {
    compat_report::run_example().unwrap();
}
