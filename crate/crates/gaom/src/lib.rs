//! Outermorphisms for high-dimensional geometric algebras with low memory
//! overhead.
//!
//! An outermorphism is fully defined by where it sends the basis vectors:
//! an m x n matrix. The usual implementation strategy precomputes the images
//! of all 2^n basis blades (here, [`CbmmTable`]) and maps by a loop over
//! nonzero input terms; its footprint grows like C(2n, n) coefficients and
//! becomes infeasible beyond n = 14 or so. The online method ([`map_obmm`])
//! instead stores only the matrix, represents the input as a binary tree
//! keyed by blade-id bits ([`BtrTree`]), and builds each needed blade image
//! incrementally on a stack while traversing, wedging one defining column per
//! 1-edge with grade-specialized kernels. Both routes are implemented and
//! cross-checked against a sparse-arithmetic oracle ([`map_oracle`]), and a
//! benchmark harness ([`mod@bench`]) reproduces the time/memory scaling study.
//!
//! ```
//! use gaom::{build_btr, map_obmm, Outermorphism, SparseMultivector, BasisBladeId};
//!
//! // Rotate the plane spanned by e0, e1 by 90 degrees: e0 -> f1, e1 -> -f0.
//! let om = Outermorphism::from_columns(2, 2, &[vec![0.0, 1.0], vec![-1.0, 0.0]]).unwrap();
//! let x = SparseMultivector::new(2, [(BasisBladeId(0b11), 2.0)]).unwrap();
//! let y = map_obmm(&om, &build_btr(&x)).unwrap().to_sparse();
//! // The bivector is invariant: t0 ^ t1 = f1 ^ (-f0) = f01.
//! assert_eq!(y, x);
//! ```

pub mod bench;
pub mod blade;
pub mod btr;
mod error;
pub mod kernels;
pub mod multivector;
pub mod outermorphism;

pub use blade::{
    binomial, blade_wedge, comb_rank, comb_unrank, BasisBladeId, FrameDescriptor, MAX_DIM,
};
pub use btr::{build_btr, child_id, path_string, BtrNode, BtrTree, NodeId};
pub use error::{Error, Result};
pub use kernels::{
    kernel_table, render_kernels, vector_wedge_kvector, KVector, KernelTable, KernelTriple,
    KERNEL_TABLE_DIM_CEILING,
};
pub use multivector::{parse_multivector, sparse_wedge, write_multivector, SparseMultivector};
pub use outermorphism::{
    cbmm_scalar_count, map_cbmm, map_cbmm_into, map_obmm, map_obmm_into, map_obmm_peak_stack,
    map_obmm_traced, map_oracle, parse_outermorphism, write_outermorphism, CbmmTable, GradedOutput,
    Outermorphism, TraceEvent, DEFAULT_CBMM_SCALAR_BUDGET,
};
