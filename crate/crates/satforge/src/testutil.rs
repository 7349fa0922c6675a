//! Shared helpers for unit tests: random graph generation and functional
//! equivalence checks.

pub use crate::bench::random_aig;

use crate::aig::Aig;

/// Outputs of both graphs agree on every assignment, checked exhaustively.
/// Both graphs must have the same interface and at most 14 inputs.
pub fn assert_equiv(a: &Aig, b: &Aig) {
    assert_eq!(a.num_pis(), b.num_pis(), "input count differs");
    assert_eq!(a.num_pos(), b.num_pos(), "output count differs");
    assert!(a.num_pis() <= 14, "exhaustive check needs few inputs");
    let ta = a.po_tables().unwrap();
    let tb = b.po_tables().unwrap();
    for (i, (x, y)) in ta.iter().zip(&tb).enumerate() {
        assert_eq!(x, y, "output {i} differs");
    }
}
