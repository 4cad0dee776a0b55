//! Small named models used throughout the tests, the guide and the CLI.

use crate::linalg::Mat;
use crate::model::{mat, McarmaModel};

/// `d = 2, p = 1, q = 0` with `A_1 = [[3, 1], [0, 2]]`, `B_0 = Σ_L = I`.
/// `det P(z) = (z+3)(z+2)`.
pub fn m1() -> McarmaModel {
    McarmaModel::new(1, 0, vec![mat(2, &[3.0, 1.0, 0.0, 2.0])], vec![Mat::identity(2, 2)], Mat::identity(2, 2))
        .expect("m1 is stable")
}

/// Scalar `P(z) = z² + 3z + 2`, `Q = 1`, `Σ_L = 1`.
pub fn m2() -> McarmaModel {
    McarmaModel::new(2, 0, vec![mat(1, &[3.0]), mat(1, &[2.0])], vec![mat(1, &[1.0])], mat(1, &[1.0]))
        .expect("m2 is stable")
}

/// Scalar `P(z) = (z+1)²` with a double root at `-1`.
pub fn double_root() -> McarmaModel {
    McarmaModel::new(2, 0, vec![mat(1, &[2.0]), mat(1, &[1.0])], vec![mat(1, &[1.0])], mat(1, &[1.0]))
        .expect("double_root is stable")
}

/// Scalar model with the complex pair `-1 ± i`: `P(z) = z² + 2z + 2`.
pub fn complex_pair() -> McarmaModel {
    McarmaModel::new(2, 0, vec![mat(1, &[2.0]), mat(1, &[2.0])], vec![mat(1, &[1.0])], mat(1, &[1.0]))
        .expect("complex_pair is stable")
}
