//! Published reference values, checked by `lambdagen selftest`.

use crate::term::TermClass;

/// Counts indexed by natural size, starting at size 0.
pub const SEQUENCES: [(TermClass, &[u64]); 4] = [
    (
        TermClass::ClosedTypable,
        &[
            0, 0, 1, 1, 2, 5, 13, 27, 74, 198, 508, 1371, 3809, 10477, 29116, 82419, 233748,
        ],
    ),
    (
        TermClass::PlainTypable,
        &[
            0, 1, 2, 3, 8, 17, 42, 106, 287, 747, 2069, 5732, 16012, 45283, 129232, 370761, 1069972,
        ],
    ),
    (
        TermClass::PlainNF,
        &[
            0, 1, 2, 4, 8, 17, 38, 89, 216, 539, 1374, 3562, 9360, 24871, 66706, 180340, 490912,
        ],
    ),
    (
        TermClass::ClosedTypableNF,
        &[
            0, 0, 1, 1, 2, 3, 7, 11, 25, 52, 110, 241, 537, 1219, 2767, 6439, 14945, 35253, 83214,
        ],
    ),
];

/// Largest natural size per class that the quick checks cover.
pub fn quick_limit(class: TermClass) -> usize {
    match class {
        TermClass::ClosedTypable => 13,
        TermClass::PlainTypable => 12,
        _ => 14,
    }
}

/// `(size, A, B, C, D, E)` rows of the density table.
pub const DENSITY_ROWS: [(u32, u64, f64, u64, f64, f64); 4] = [
    (5, 5, 4.400, 3, 5.666, 0.776),
    (10, 508, 6.988, 110, 12.490, 0.559),
    (15, 82419, 10.568, 6439, 28.007, 0.377),
    (20, 16019330, 15.800, 473628, 60.040, 0.263),
];

/// Calibrated parameter and thresholds for expected natural size 120.
pub const X_PLAIN: f64 = 0.29558095907;
pub const PLAIN_INDEX: f64 = 0.35700035696434995;
pub const PLAIN_LAMBDA: f64 = 0.6525813160382378;
pub const PLAIN_LEAF: f64 = 0.7044190409261122;
pub const X_NF: f64 = 0.3333158264186935;
pub const NF_INDEX: f64 = 0.5062759837493023;
pub const NF_LEAF: f64 = 0.6666841735813065;

/// Agreement required with `X_PLAIN`, which is published to 11 digits.
pub const X_PLAIN_TOLERANCE: f64 = 1e-9;
pub const CONSTANT_TOLERANCE: f64 = 1e-12;
