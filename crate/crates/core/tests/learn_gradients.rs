mod support;

use support::gradcheck::*;

#[test]
fn conv3d_gradients_match_finite_differences() {
    let e = conv3d_error(100);
    assert!(e < TOL, "{e}");
}

#[test]
fn dense_gradients_match_finite_differences() {
    let e = dense_error(100);
    assert!(e < TOL, "{e}");
}

#[test]
fn batch_norm_gradients_match_finite_differences() {
    let e = batch_norm_error(100);
    assert!(e < TOL, "{e}");
}

#[test]
fn dropout_gradients_match_finite_differences() {
    let e = dropout_error(100);
    assert!(e < TOL, "{e}");
}

#[test]
fn softmax_cross_entropy_gradients_match_finite_differences() {
    let e = softmax_xent_error(100);
    assert!(e < TOL, "{e}");
}

#[test]
fn whole_network_gradients_match_finite_differences() {
    let e = network_error(20);
    assert!(e < TOL, "{e}");
}

#[test]
fn conv3d_matches_loop_oracle() {
    let e = conv_oracle_error(40);
    assert!(e < 1e-5, "{e}");
}
