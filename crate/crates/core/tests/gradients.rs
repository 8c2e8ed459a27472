mod common;

use common::*;

fn assert_report(r: &GradReport, tol: f64) {
    assert!(r.error < tol, "{} at {}", r.error, r.at);
    assert!(
        r.kinks * 100 <= r.checked,
        "{} of {} entries straddle kinks",
        r.kinks,
        r.checked
    );
}

#[test]
fn gcn_layer_gradients() {
    assert_report(&layer_gradient_error(LayerKind::Gcn, 31, 20), 1e-4);
}

#[test]
fn gin_layer_gradients() {
    assert_report(&layer_gradient_error(LayerKind::Gin, 32, 20), 1e-4);
}

#[test]
fn mlp_gradients() {
    assert_report(&layer_gradient_error(LayerKind::Mlp, 33, 20), 1e-4);
}

#[test]
fn composed_model_gradients() {
    assert_report(&composed_gradient_error(34, 8), 1e-3);
}
