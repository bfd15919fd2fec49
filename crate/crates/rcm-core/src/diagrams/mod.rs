//! Diagram catalogue: weighted bubbles, triangles, squares, martinis, the
//! composite U/V quantities, psi block compositions, and the numerical
//! certification harness for the inequality chains built from them.

pub mod basic;
pub mod bigrid;
pub mod certify;
pub mod compose;
pub mod psi;
pub mod two_point;

pub use basic::{
    bubble_w, certify, composite_uv, edge_sup, square_s, tilde_tau, triangle_t, w_bar,
    weighted, CertifiedInequality, DiagramReport, TriangleReport, UvReport, WeightedEdge,
};
pub use bigrid::{BiField, DEFAULT_BUDGET_CELLS};
pub use certify::{desk_suite, mutate_lines, CertContext, CertLine, CertParams};
pub use compose::{block_composition, Composer, CompositionReport, PairState};
pub use two_point::{h_infty_certificate, h_sup, h_value, y_diagram, HReport};
