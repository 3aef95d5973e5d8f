//! Outermorphisms: definition by basis-vector images, the online
//! basis-mapping traversal (OBMM), the cached basis-mapping baseline (CBMM),
//! a sparse-arithmetic verification oracle, and matrix-level algebra
//! (compose, adjoint, inverse) on the defining columns.

use std::fmt::Write as _;
use std::io::BufRead;
use std::rc::Rc;

use crate::blade::{binomial, comb_unrank, BasisBladeId, MAX_DIM};
use crate::btr::{path_string, BtrNode, BtrTree};
use crate::error::{Error, Result};
use crate::kernels::{wedge_vector_into, KVector};
use crate::multivector::{sparse_wedge, SparseMultivector};

/// A linear map between frames, extended to all multivectors as an
/// outermorphism. Fully defined by the images of the domain basis vectors:
/// column `j` holds the codomain coefficients of the image of `e_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Outermorphism {
    domain_dim: u32,
    codomain_dim: u32,
    // Column-major m x n: column j at cols[j*m .. (j+1)*m].
    cols: Vec<f64>,
}

impl Outermorphism {
    /// Builds a map from its columns: `columns[j][i]` is the `f_i` coefficient
    /// of the image of `e_j`. Shape is the only requirement; singular maps
    /// are legal outermorphisms.
    pub fn from_columns(domain_dim: u32, codomain_dim: u32, columns: &[Vec<f64>]) -> Result<Self> {
        if domain_dim == 0 || domain_dim > MAX_DIM {
            return Err(Error::InvalidDimension(domain_dim));
        }
        if codomain_dim == 0 || codomain_dim > MAX_DIM {
            return Err(Error::InvalidDimension(codomain_dim));
        }
        if columns.len() != domain_dim as usize {
            return Err(Error::ShapeMismatch {
                expected: format!("{domain_dim} columns"),
                got: columns.len().to_string(),
            });
        }
        let mut cols = Vec::with_capacity((domain_dim * codomain_dim) as usize);
        for (j, column) in columns.iter().enumerate() {
            if column.len() != codomain_dim as usize {
                return Err(Error::ShapeMismatch {
                    expected: format!("column {j} of length {codomain_dim}"),
                    got: column.len().to_string(),
                });
            }
            cols.extend_from_slice(column);
        }
        Ok(Outermorphism {
            domain_dim,
            codomain_dim,
            cols,
        })
    }

    /// The identity map on an n-dimensional frame.
    pub fn identity(dim: u32) -> Self {
        let mut cols = vec![0.0; (dim * dim) as usize];
        for j in 0..dim as usize {
            cols[j * dim as usize + j] = 1.0;
        }
        Outermorphism {
            domain_dim: dim,
            codomain_dim: dim,
            cols,
        }
    }

    #[inline]
    pub fn domain_dim(&self) -> u32 {
        self.domain_dim
    }

    #[inline]
    pub fn codomain_dim(&self) -> u32 {
        self.codomain_dim
    }

    /// Codomain coefficients of the image of `e_j`.
    #[inline]
    pub fn column(&self, j: u32) -> &[f64] {
        let m = self.codomain_dim as usize;
        &self.cols[j as usize * m..(j as usize + 1) * m]
    }

    /// Matrix entry: `f_i` coefficient of the image of `e_j`.
    #[inline]
    pub fn entry(&self, i: u32, j: u32) -> f64 {
        self.cols[j as usize * self.codomain_dim as usize + i as usize]
    }

    /// Column `j` as a grade-1 k-vector.
    pub fn column_kvector(&self, j: u32) -> KVector {
        KVector::new(self.codomain_dim, 1, self.column(j).to_vec())
            .expect("column length equals codomain dimension")
    }

    /// Composition `self after inner`: requires `self.domain_dim ==
    /// inner.codomain_dim`. Performed on the small defining matrices.
    pub fn compose(&self, inner: &Outermorphism) -> Result<Outermorphism> {
        if self.domain_dim != inner.codomain_dim {
            return Err(Error::DimensionMismatch {
                left: self.domain_dim,
                right: inner.codomain_dim,
            });
        }
        let n = inner.domain_dim;
        let m = self.codomain_dim;
        let mut cols = vec![0.0; (n * m) as usize];
        for j in 0..n {
            let target = &mut cols[(j * m) as usize..((j + 1) * m) as usize];
            for l in 0..inner.codomain_dim {
                let weight = inner.entry(l, j);
                if weight == 0.0 {
                    continue;
                }
                for (slot, &v) in target.iter_mut().zip(self.column(l)) {
                    *slot += weight * v;
                }
            }
        }
        Ok(Outermorphism {
            domain_dim: n,
            codomain_dim: m,
            cols,
        })
    }

    /// Transpose of the defining matrix; domain and codomain swap.
    pub fn adjoint(&self) -> Outermorphism {
        let (n, m) = (self.domain_dim, self.codomain_dim);
        let mut cols = vec![0.0; (n * m) as usize];
        for i in 0..m {
            for j in 0..n {
                cols[(i * n + j) as usize] = self.entry(i, j);
            }
        }
        Outermorphism {
            domain_dim: m,
            codomain_dim: n,
            cols,
        }
    }

    /// Inverse of a square map by Gauss-Jordan elimination with partial
    /// pivoting. A pivot below `1e-12 * max row norm` reports singularity.
    pub fn inverse(&self) -> Result<Outermorphism> {
        if self.domain_dim != self.codomain_dim {
            return Err(Error::DimensionMismatch {
                left: self.domain_dim,
                right: self.codomain_dim,
            });
        }
        let n = self.domain_dim as usize;
        // Row-major working copy augmented with the identity.
        let mut a = vec![0.0; n * n];
        let mut inv = vec![0.0; n * n];
        for i in 0..n {
            inv[i * n + i] = 1.0;
            for j in 0..n {
                a[i * n + j] = self.entry(i as u32, j as u32);
            }
        }
        let max_row_norm = (0..n)
            .map(|i| a[i * n..(i + 1) * n].iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0f64, f64::max);
        let tolerance = 1e-12 * max_row_norm;
        for col in 0..n {
            let pivot_row = (col..n)
                .max_by(|&r, &s| a[r * n + col].abs().total_cmp(&a[s * n + col].abs()))
                .expect("nonempty row range");
            let pivot = a[pivot_row * n + col];
            if pivot.abs() <= tolerance {
                return Err(Error::SingularMatrix {
                    pivot: pivot.abs(),
                    tolerance,
                });
            }
            if pivot_row != col {
                for j in 0..n {
                    a.swap(col * n + j, pivot_row * n + j);
                    inv.swap(col * n + j, pivot_row * n + j);
                }
            }
            let scale = 1.0 / pivot;
            for j in 0..n {
                a[col * n + j] *= scale;
                inv[col * n + j] *= scale;
            }
            for row in 0..n {
                if row == col {
                    continue;
                }
                let factor = a[row * n + col];
                if factor == 0.0 {
                    continue;
                }
                for j in 0..n {
                    a[row * n + j] -= factor * a[col * n + j];
                    inv[row * n + j] -= factor * inv[col * n + j];
                }
            }
        }
        // inv is row-major; repack to column-major columns.
        let mut cols = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                cols[j * n + i] = inv[i * n + j];
            }
        }
        Ok(Outermorphism {
            domain_dim: self.domain_dim,
            codomain_dim: self.domain_dim,
            cols,
        })
    }
}

/// The image of a multivector, bucketed by grade: bucket `k`, when touched,
/// is a dense grade-`k` k-vector over the codomain. Untouched buckets stay
/// absent, so grade preservation is observable.
///
/// [`reset`](GradedOutput::reset) returns the value to zero while parking the
/// bucket storage for reuse, so a mapping loop over many inputs allocates
/// each grade's array once.
#[derive(Debug, Clone)]
pub struct GradedOutput {
    codomain_dim: u32,
    buckets: Vec<Option<KVector>>,
    spare: Vec<Option<KVector>>,
}

impl PartialEq for GradedOutput {
    fn eq(&self, other: &Self) -> bool {
        // The spare pool is invisible state.
        self.codomain_dim == other.codomain_dim && self.buckets == other.buckets
    }
}

impl GradedOutput {
    pub fn zero(codomain_dim: u32) -> Self {
        GradedOutput {
            codomain_dim,
            buckets: vec![None; codomain_dim as usize + 1],
            spare: vec![None; codomain_dim as usize + 1],
        }
    }

    /// Returns to the zero value: buckets become untouched again, their
    /// zeroed storage kept aside for the next use.
    pub fn reset(&mut self) {
        for (slot, spare) in self.buckets.iter_mut().zip(&mut self.spare) {
            if let Some(mut kv) = slot.take() {
                kv.coefficients_mut().fill(0.0);
                *spare = Some(kv);
            }
        }
    }

    #[inline]
    pub fn codomain_dim(&self) -> u32 {
        self.codomain_dim
    }

    /// Grade-`k` bucket, if it has been touched.
    pub fn bucket(&self, k: u32) -> Option<&KVector> {
        self.buckets.get(k as usize).and_then(Option::as_ref)
    }

    /// Accumulates `factor * kv` into the bucket of the k-vector's grade.
    pub fn add_scaled(&mut self, factor: f64, kv: &KVector) {
        debug_assert_eq!(kv.vspace_dim(), self.codomain_dim);
        let grade = kv.grade() as usize;
        let slot = &mut self.buckets[grade];
        let bucket = match slot {
            Some(bucket) => bucket,
            None => slot.insert(self.spare[grade].take().unwrap_or_else(|| {
                KVector::zeros(kv.vspace_dim(), kv.grade()).expect("grade within dimension")
            })),
        };
        let coeffs = bucket.coefficients_mut();
        for (acc, &x) in coeffs.iter_mut().zip(kv.coefficients()) {
            *acc += factor * x;
        }
    }

    /// Total coefficients held across touched buckets.
    pub fn scalar_count(&self) -> usize {
        self.buckets.iter().flatten().map(KVector::len).sum()
    }

    /// Converts to a normalized sparse multivector (zeros dropped).
    pub fn to_sparse(&self) -> SparseMultivector {
        let mut terms = Vec::new();
        for bucket in self.buckets.iter().flatten() {
            for (r, &c) in bucket.coefficients().iter().enumerate() {
                if c != 0.0 {
                    let id = comb_unrank(self.codomain_dim, bucket.grade(), r)
                        .expect("rank within C(m,k) by construction");
                    terms.push((id, c));
                }
            }
        }
        SparseMultivector::new(self.codomain_dim, terms)
            .expect("bucket blades fit the codomain dimension")
    }
}

/// One event of the online mapping traversal, for trace inspection. `factors`
/// names the wedge product on the k-vector stack: `1` for the initial scalar,
/// otherwise `t0^t2`-style ascending factor labels.
#[derive(Debug, Clone, PartialEq)]
pub enum TraceEvent {
    Push { path: String, factors: String },
    Pop { path: String, factors: String },
    Accumulate { value: f64, factors: String },
}

impl std::fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TraceEvent::Push { path, factors } => write!(f, "push ({path}, {factors})"),
            TraceEvent::Pop { path, factors } => write!(f, "pop ({path}, {factors})"),
            TraceEvent::Accumulate { value, factors } => write!(f, "Y += ({value}) * {factors}"),
        }
    }
}

/// Names the wedge factors selected by a node id: `1` when no 1-edges have
/// been taken, else `t<j>` labels joined by `^` in ascending order.
pub fn factor_label(id: BasisBladeId) -> String {
    if id.0 == 0 {
        return "1".to_string();
    }
    let mut label = String::new();
    for (count, j) in id.factor_indices().enumerate() {
        if count > 0 {
            label.push('^');
        }
        write!(label, "t{j}").expect("string write");
    }
    label
}

trait MapObserver {
    #[inline]
    fn init_push(&mut self, _id: BasisBladeId, _depth: u32) {}
    #[inline]
    fn pop(&mut self, _id: BasisBladeId, _depth: u32) {}
    #[inline]
    fn push_child(&mut self, _id: BasisBladeId, _depth: u32) {}
    #[inline]
    fn accumulate(&mut self, _value: f64, _id: BasisBladeId) {}
    #[inline]
    fn stack_scalars(&mut self, _total: usize) {}
}

struct NoObserver;
impl MapObserver for NoObserver {}

struct TraceCollector<'a> {
    dim: u32,
    events: &'a mut Vec<TraceEvent>,
}

impl MapObserver for TraceCollector<'_> {
    fn init_push(&mut self, id: BasisBladeId, depth: u32) {
        self.events.push(TraceEvent::Push {
            path: format!("X_{}", path_string(id, depth, self.dim)),
            factors: factor_label(id),
        });
    }
    fn pop(&mut self, id: BasisBladeId, depth: u32) {
        self.events.push(TraceEvent::Pop {
            path: format!("X_{}", path_string(id, depth, self.dim)),
            factors: factor_label(id),
        });
    }
    fn push_child(&mut self, id: BasisBladeId, depth: u32) {
        self.events.push(TraceEvent::Push {
            path: format!("X_{}", path_string(id, depth, self.dim)),
            factors: factor_label(id),
        });
    }
    fn accumulate(&mut self, value: f64, id: BasisBladeId) {
        self.events.push(TraceEvent::Accumulate {
            value,
            factors: factor_label(id),
        });
    }
}

/// Tracks the maximum simultaneous coefficient count on the k-vector stack.
struct PeakMeter {
    peak: usize,
}

impl MapObserver for PeakMeter {
    fn stack_scalars(&mut self, total: usize) {
        self.peak = self.peak.max(total);
    }
}

/// Online basis-mapping: maps the tree-represented multivector through the
/// outermorphism by traversing the tree with two synchronized stacks, one of
/// nodes and one of partially built k-vector images. An empty tree maps to
/// the zero output.
pub fn map_obmm(om: &Outermorphism, x: &BtrTree) -> Result<GradedOutput> {
    let mut output = GradedOutput::zero(om.codomain_dim());
    map_obmm_into(om, x, &mut output)?;
    Ok(output)
}

/// [`map_obmm`] writing into a caller-owned output, which is zeroed first;
/// reusing one output across many maps keeps the bucket storage allocated.
pub fn map_obmm_into(om: &Outermorphism, x: &BtrTree, output: &mut GradedOutput) -> Result<()> {
    map_obmm_impl(om, x, output, &mut NoObserver)
}

/// [`map_obmm`] with trace collection: returns the output together with the
/// full push/pop/accumulate event sequence.
pub fn map_obmm_traced(om: &Outermorphism, x: &BtrTree) -> Result<(GradedOutput, Vec<TraceEvent>)> {
    let mut events = Vec::new();
    let mut output = GradedOutput::zero(om.codomain_dim());
    map_obmm_impl(
        om,
        x,
        &mut output,
        &mut TraceCollector {
            dim: x.dim(),
            events: &mut events,
        },
    )?;
    Ok((output, events))
}

/// [`map_obmm`] instrumented for memory accounting: returns the output and
/// the peak total coefficient count simultaneously alive on the k-vector
/// stack (each entry counted as owned).
pub fn map_obmm_peak_stack(om: &Outermorphism, x: &BtrTree) -> Result<(GradedOutput, usize)> {
    let mut meter = PeakMeter { peak: 0 };
    let mut output = GradedOutput::zero(om.codomain_dim());
    map_obmm_impl(om, x, &mut output, &mut meter)?;
    Ok((output, meter.peak))
}

fn map_obmm_impl<Ob: MapObserver>(
    om: &Outermorphism,
    x: &BtrTree,
    output: &mut GradedOutput,
    observer: &mut Ob,
) -> Result<()> {
    if om.domain_dim() != x.dim() {
        return Err(Error::DimensionMismatch {
            left: om.domain_dim(),
            right: x.dim(),
        });
    }
    let m = om.codomain_dim();
    if output.codomain_dim() != m {
        return Err(Error::DimensionMismatch {
            left: output.codomain_dim(),
            right: m,
        });
    }
    output.reset();
    let Some(root) = x.root() else {
        return Ok(());
    };

    let mut node_stack = vec![root];
    let mut kvector_stack: Vec<Rc<KVector>> = vec![Rc::new(KVector::scalar_one(m))];
    let mut stack_scalars = 1usize;
    observer.init_push(BasisBladeId(0), x.dim());
    observer.stack_scalars(stack_scalars);

    while let Some(node_id) = node_stack.pop() {
        let t = kvector_stack.pop().expect("stacks stay synchronized");
        stack_scalars -= t.len();
        match x.node(node_id) {
            BtrNode::Leaf { id, scalar_value } => {
                observer.pop(*id, 0);
                output.add_scaled(*scalar_value, &t);
                observer.accumulate(*scalar_value, *id);
            }
            BtrNode::Internal {
                tree_depth,
                id,
                child0,
                child1,
            } => {
                observer.pop(*id, *tree_depth);
                if let Some(c0) = child0 {
                    node_stack.push(*c0);
                    stack_scalars += t.len();
                    kvector_stack.push(Rc::clone(&t));
                    observer.push_child(*id, tree_depth - 1);
                    observer.stack_scalars(stack_scalars);
                }
                if let Some(c1) = child1 {
                    let j = tree_depth - 1;
                    if t.grade() == m {
                        // Wedging past the top codomain grade yields an
                        // identically zero subtree; nothing to push.
                        continue;
                    }
                    let mut wedged = KVector::zeros(m, t.grade() + 1)?;
                    wedge_vector_into(
                        m,
                        t.grade(),
                        om.column(j),
                        t.coefficients(),
                        wedged.coefficients_mut(),
                    )?;
                    node_stack.push(*c1);
                    stack_scalars += wedged.len();
                    kvector_stack.push(Rc::new(wedged));
                    observer.push_child(crate::btr::child_id(*id, *tree_depth, 1), j);
                    observer.stack_scalars(stack_scalars);
                }
            }
        }
    }
    Ok(())
}

/// Every basis-blade image of an outermorphism, precomputed and stored in a
/// flat array indexed by blade id. Entry `i` is the grade-`grade(i)` image of
/// blade `i`; entries whose grade exceeds the codomain dimension are absent
/// (they map to zero).
#[derive(Debug, Clone)]
pub struct CbmmTable {
    base: Outermorphism,
    blades: Vec<Option<KVector>>,
}

/// Default cap on the total coefficients a cached table may hold:
/// 2^27 scalars = 1 GiB of doubles.
pub const DEFAULT_CBMM_SCALAR_BUDGET: u64 = 1 << 27;

/// Total coefficients a cached table stores for an n -> m map:
/// sum over k of C(n,k) * C(m,k); equal to C(2n,n) when m = n.
pub fn cbmm_scalar_count(domain_dim: u32, codomain_dim: u32) -> u64 {
    (0..=domain_dim.min(codomain_dim))
        .map(|k| binomial(domain_dim, k) * binomial(codomain_dim, k))
        .sum()
}

impl CbmmTable {
    /// Precomputes all 2^n blade images under the default memory budget.
    pub fn build(om: &Outermorphism) -> Result<Self> {
        CbmmTable::build_with_budget(om, DEFAULT_CBMM_SCALAR_BUDGET)
    }

    /// Precomputes all 2^n blade images, refusing when the table would hold
    /// more than `scalar_budget` coefficients.
    ///
    /// Entry `i` is built by wedging the defining columns over the set bits
    /// of `i` in descending order, each on the left, so the lowest-index
    /// column ends leftmost; equivalently, entry `i` extends entry
    /// `i` minus its lowest bit by one wedge.
    pub fn build_with_budget(om: &Outermorphism, scalar_budget: u64) -> Result<Self> {
        let n = om.domain_dim();
        let m = om.codomain_dim();
        let required = cbmm_scalar_count(n, m);
        if required > scalar_budget {
            return Err(Error::MemoryBudget {
                dim: n,
                required,
                budget: scalar_budget,
            });
        }
        let count = 1usize << n;
        let mut blades: Vec<Option<KVector>> = Vec::with_capacity(count);
        blades.push(Some(KVector::scalar_one(m)));
        for i in 1..count as u32 {
            let low = i.trailing_zeros();
            let rest = &blades[(i & (i - 1)) as usize];
            let entry = match rest {
                Some(t) if t.grade() < m => {
                    let mut wedged = KVector::zeros(m, t.grade() + 1)?;
                    wedge_vector_into(
                        m,
                        t.grade(),
                        om.column(low),
                        t.coefficients(),
                        wedged.coefficients_mut(),
                    )?;
                    Some(wedged)
                }
                // Grade would exceed the codomain dimension: identically zero.
                _ => None,
            };
            blades.push(entry);
        }
        Ok(CbmmTable {
            base: om.clone(),
            blades,
        })
    }

    #[inline]
    pub fn base(&self) -> &Outermorphism {
        &self.base
    }

    /// Image of basis blade `i`, absent when it is identically zero because
    /// the grade exceeds the codomain dimension.
    pub fn blade_image(&self, id: BasisBladeId) -> Option<&KVector> {
        self.blades.get(id.0 as usize).and_then(Option::as_ref)
    }

    /// Total stored coefficients.
    pub fn stored_scalars(&self) -> u64 {
        self.blades.iter().flatten().map(|kv| kv.len() as u64).sum()
    }
}

/// Cached basis-mapping: one scaled accumulation per nonzero input term.
pub fn map_cbmm(table: &CbmmTable, x: &SparseMultivector) -> Result<GradedOutput> {
    let mut output = GradedOutput::zero(table.base.codomain_dim());
    map_cbmm_into(table, x, &mut output)?;
    Ok(output)
}

/// [`map_cbmm`] writing into a caller-owned output, which is zeroed first.
pub fn map_cbmm_into(
    table: &CbmmTable,
    x: &SparseMultivector,
    output: &mut GradedOutput,
) -> Result<()> {
    if table.base.domain_dim() != x.dim() {
        return Err(Error::DimensionMismatch {
            left: table.base.domain_dim(),
            right: x.dim(),
        });
    }
    if output.codomain_dim() != table.base.codomain_dim() {
        return Err(Error::DimensionMismatch {
            left: output.codomain_dim(),
            right: table.base.codomain_dim(),
        });
    }
    output.reset();
    for &(id, coeff) in x.terms() {
        if let Some(image) = table.blade_image(id) {
            output.add_scaled(coeff, image);
        }
    }
    Ok(())
}

/// Verification oracle: maps a multivector by expanding every blade image as
/// sparse-multivector wedge folds of the defining columns, a code path
/// disjoint from the dense kernels. Intended for small dimensions.
pub fn map_oracle(om: &Outermorphism, x: &SparseMultivector) -> Result<SparseMultivector> {
    if om.domain_dim() != x.dim() {
        return Err(Error::DimensionMismatch {
            left: om.domain_dim(),
            right: x.dim(),
        });
    }
    let m = om.codomain_dim();
    let columns: Vec<SparseMultivector> = (0..om.domain_dim())
        .map(|j| {
            let terms = om
                .column(j)
                .iter()
                .enumerate()
                .map(|(i, &c)| (BasisBladeId(1 << i), c));
            SparseMultivector::new(m, terms)
        })
        .collect::<Result<_>>()?;

    // Blade images share sub-products: image(i) = column(low) ^ image(i - low),
    // the same left-fold association the fast paths use.
    let mut memo: std::collections::HashMap<u32, SparseMultivector> =
        std::collections::HashMap::new();
    fn blade_image(
        i: u32,
        m: u32,
        columns: &[SparseMultivector],
        memo: &mut std::collections::HashMap<u32, SparseMultivector>,
    ) -> Result<SparseMultivector> {
        if i == 0 {
            return SparseMultivector::new(m, [(BasisBladeId(0), 1.0)]);
        }
        if let Some(hit) = memo.get(&i) {
            return Ok(hit.clone());
        }
        let low = i.trailing_zeros();
        let rest = blade_image(i & (i - 1), m, columns, memo)?;
        let image = sparse_wedge(&columns[low as usize], &rest)?;
        memo.insert(i, image.clone());
        Ok(image)
    }

    let mut result = SparseMultivector::zero(m);
    for &(id, coeff) in x.terms() {
        let image = blade_image(id.0, m, &columns, &mut memo)?;
        result = result.add_scaled(&image, coeff)?;
    }
    Ok(result)
}

/// Parses the outermorphism file format: a `dims <n> <m>` header line, then
/// n lines of m whitespace-separated floats, line j being the image of `e_j`.
/// `#` lines and blank lines are ignored.
pub fn parse_outermorphism(reader: impl BufRead) -> Result<Outermorphism> {
    let mut lines = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim().to_owned();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        lines.push((lineno + 1, trimmed));
    }
    let Some((header_line, header)) = lines.first() else {
        return Err(Error::EmptyInput("outermorphism file"));
    };
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 3 || fields[0] != "dims" {
        return Err(Error::Parse {
            line: *header_line,
            message: "expected header `dims <n> <m>`".into(),
        });
    }
    let parse_dim = |s: &str| {
        s.parse::<u32>().map_err(|e| Error::Parse {
            line: *header_line,
            message: format!("dimension: {e}"),
        })
    };
    let n = parse_dim(fields[1])?;
    let m = parse_dim(fields[2])?;
    let body = &lines[1..];
    if body.len() != n as usize {
        return Err(Error::ShapeMismatch {
            expected: format!("{n} column lines"),
            got: body.len().to_string(),
        });
    }
    let mut columns = Vec::with_capacity(n as usize);
    for (lineno, line) in body {
        let column = line
            .split_whitespace()
            .map(|f| {
                f.parse::<f64>().map_err(|e| Error::Parse {
                    line: *lineno,
                    message: format!("coefficient: {e}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        columns.push(column);
    }
    Outermorphism::from_columns(n, m, &columns)
}

/// Renders an outermorphism in the format accepted by
/// [`parse_outermorphism`].
pub fn write_outermorphism(om: &Outermorphism) -> String {
    let mut out = format!("dims {} {}\n", om.domain_dim(), om.codomain_dim());
    for j in 0..om.domain_dim() {
        let mut first = true;
        for &v in om.column(j) {
            if !first {
                out.push(' ');
            }
            write!(out, "{v}").expect("string write");
            first = false;
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blade::comb_rank;
    use crate::btr::build_btr;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mv(dim: u32, terms: &[(u32, f64)]) -> SparseMultivector {
        SparseMultivector::new(dim, terms.iter().map(|&(i, c)| (BasisBladeId(i), c))).unwrap()
    }

    fn random_om(rng: &mut ChaCha8Rng, n: u32, m: u32) -> Outermorphism {
        let columns: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..m).map(|_| rng.gen_range(-1.0..=1.0)).collect())
            .collect();
        Outermorphism::from_columns(n, m, &columns).unwrap()
    }

    fn random_mv(rng: &mut ChaCha8Rng, n: u32, density: f64) -> SparseMultivector {
        let terms: Vec<_> = (0..(1u32 << n))
            .filter_map(|id| {
                if rng.gen_bool(density) {
                    Some((BasisBladeId(id), rng.gen_range(-1.0..=1.0)))
                } else {
                    None
                }
            })
            .collect();
        SparseMultivector::new(n, terms).unwrap()
    }

    fn assert_close(a: &SparseMultivector, b: &SparseMultivector, rel: f64) {
        assert_eq!(a.dim(), b.dim());
        let ids: std::collections::BTreeSet<_> = a
            .terms()
            .iter()
            .chain(b.terms())
            .map(|&(id, _)| id)
            .collect();
        for id in ids {
            let (x, y) = (a.coefficient(id), b.coefficient(id));
            assert!(
                approx::relative_eq!(x, y, max_relative = rel, epsilon = 1e-15),
                "blade {id}: {x} vs {y}"
            );
        }
    }

    #[test]
    fn from_columns_validates_shape() {
        assert!(Outermorphism::from_columns(2, 2, &[vec![1.0, 1.0]]).is_err());
        assert!(Outermorphism::from_columns(2, 2, &[vec![1.0], vec![1.0, -1.0]]).is_err());
        let om = Outermorphism::from_columns(2, 2, &[vec![1.0, 1.0], vec![1.0, -1.0]]).unwrap();
        // 2x2 determinant of the defining matrix: 1*(-1) - 1*1 = -2.
        let det = om.entry(0, 0) * om.entry(1, 1) - om.entry(0, 1) * om.entry(1, 0);
        assert_eq!(det, -2.0);
        // Rectangular maps between different frames are legal.
        let rect = Outermorphism::from_columns(
            3,
            4,
            &[vec![0.0; 4], vec![0.0; 4], vec![1.0, 2.0, 3.0, 4.0]],
        );
        assert!(rect.is_ok());
    }

    #[test]
    fn identity_map_is_identity_on_multivectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for n in 1..=6u32 {
            let om = Outermorphism::identity(n);
            let x = random_mv(&mut rng, n, 0.5);
            let y = map_obmm(&om, &build_btr(&x)).unwrap().to_sparse();
            assert_eq!(y, x);
        }
    }

    #[test]
    fn obmm_two_dimensional_hand_case() {
        // t0 = f0 + f1, t1 = f0 - f1; X = e01.
        // Y = t0 ^ t1 = (f0+f1)^(f0-f1) = -2 f01.
        let om = Outermorphism::from_columns(2, 2, &[vec![1.0, 1.0], vec![1.0, -1.0]]).unwrap();
        let x = mv(2, &[(3, 1.0)]);
        let y = map_obmm(&om, &build_btr(&x)).unwrap();
        assert_eq!(y.to_sparse(), mv(2, &[(3, -2.0)]));
        // Bucket bookkeeping: only grade 2 touched.
        assert!(y.bucket(0).is_none());
        assert!(y.bucket(1).is_none());
        assert!(y.bucket(2).is_some());
    }

    #[test]
    fn obmm_empty_tree_maps_to_zero() {
        let om = Outermorphism::identity(4);
        let tree = build_btr(&SparseMultivector::zero(4));
        let y = map_obmm(&om, &tree).unwrap();
        assert!(y.to_sparse().is_zero());
        assert_eq!(y.scalar_count(), 0);
    }

    #[test]
    fn obmm_dimension_mismatch() {
        let om = Outermorphism::identity(3);
        let tree = build_btr(&mv(4, &[(1, 1.0)]));
        assert!(matches!(
            map_obmm(&om, &tree),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn trace_event_sequence_golden() {
        // X = 2 e0 - 2 e01 + e012; the traversal visits the 1-branch first.
        let om = Outermorphism::identity(3);
        let x = mv(3, &[(1, 2.0), (3, -2.0), (7, 1.0)]);
        let (_, events) = map_obmm_traced(&om, &build_btr(&x)).unwrap();
        let rendered: Vec<String> = events.iter().map(TraceEvent::to_string).collect();
        let expected = vec![
            "push (X_---, 1)",
            "pop (X_---, 1)",
            "push (X_0--, 1)",
            "push (X_1--, t2)",
            "pop (X_1--, t2)",
            "push (X_11-, t1^t2)",
            "pop (X_11-, t1^t2)",
            "push (X_111, t0^t1^t2)",
            "pop (X_111, t0^t1^t2)",
            "Y += (1) * t0^t1^t2",
            "pop (X_0--, 1)",
            "push (X_00-, 1)",
            "push (X_01-, t1)",
            "pop (X_01-, t1)",
            "push (X_011, t0^t1)",
            "pop (X_011, t0^t1)",
            "Y += (-2) * t0^t1",
            "pop (X_00-, 1)",
            "push (X_001, t0)",
            "pop (X_001, t0)",
            "Y += (2) * t0",
        ];
        assert_eq!(rendered, expected);
        let iterations = events
            .iter()
            .filter(|e| matches!(e, TraceEvent::Pop { .. }))
            .count();
        assert_eq!(iterations, 9);
    }

    #[test]
    fn cbmm_identity_table_is_unit_kvectors() {
        let om = Outermorphism::identity(3);
        let table = CbmmTable::build(&om).unwrap();
        for i in 0..8u32 {
            let id = BasisBladeId(i);
            let image = table.blade_image(id).unwrap();
            assert_eq!(image.grade(), id.grade());
            for (r, &c) in image.coefficients().iter().enumerate() {
                let expect = if r == comb_rank(id) { 1.0 } else { 0.0 };
                assert_eq!(c, expect, "blade {i} coefficient {r}");
            }
        }
    }

    #[test]
    fn cbmm_single_bit_entries_are_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let om = random_om(&mut rng, 5, 5);
        let table = CbmmTable::build(&om).unwrap();
        for j in 0..5u32 {
            let entry = table.blade_image(BasisBladeId(1 << j)).unwrap();
            assert_eq!(entry.grade(), 1);
            assert_eq!(entry.coefficients(), om.column(j));
        }
        assert_eq!(
            table.blade_image(BasisBladeId(0)).unwrap().coefficients(),
            &[1.0]
        );
    }

    #[test]
    fn cbmm_entries_match_oracle_fold() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        for n in 1..=6u32 {
            let om = random_om(&mut rng, n, n);
            let table = CbmmTable::build(&om).unwrap();
            for i in 0..(1u32 << n) {
                let fast = table.blade_image(BasisBladeId(i)).unwrap().to_sparse();
                let slow = map_oracle(&om, &mv(n, &[(i, 1.0)])).unwrap();
                assert_close(&fast, &slow, 1e-12);
            }
        }
    }

    #[test]
    fn cbmm_scalar_accounting() {
        for n in 1..=10u32 {
            assert_eq!(cbmm_scalar_count(n, n), binomial(2 * n, n));
        }
        let om = Outermorphism::identity(6);
        let table = CbmmTable::build(&om).unwrap();
        assert_eq!(table.stored_scalars(), binomial(12, 6));
    }

    #[test]
    fn cbmm_budget_enforced() {
        let om = Outermorphism::identity(8);
        let required = cbmm_scalar_count(8, 8);
        assert!(matches!(
            CbmmTable::build_with_budget(&om, required - 1),
            Err(Error::MemoryBudget { .. })
        ));
        assert!(CbmmTable::build_with_budget(&om, required).is_ok());
    }

    #[test]
    fn map_cbmm_examples() {
        let om = Outermorphism::identity(3);
        let table = CbmmTable::build(&om).unwrap();
        let mixed = mv(3, &[(1, 2.0), (3, -2.0), (7, 1.0)]);
        assert_eq!(map_cbmm(&table, &mixed).unwrap().to_sparse(), mixed);

        // Single term: one loop iteration, c * blade image.
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let om = random_om(&mut rng, 4, 4);
        let table = CbmmTable::build(&om).unwrap();
        let single = mv(4, &[(11, -1.25)]);
        let y = map_cbmm(&table, &single).unwrap().to_sparse();
        let expect = table
            .blade_image(BasisBladeId(11))
            .unwrap()
            .to_sparse()
            .scale(-1.25);
        assert_close(&y, &expect, 1e-15);
    }

    #[test]
    fn obmm_cbmm_agree_on_random_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(59);
        for _ in 0..60 {
            let n = rng.gen_range(1..=8u32);
            let om = random_om(&mut rng, n, n);
            let x = random_mv(&mut rng, n, 0.4);
            let table = CbmmTable::build(&om).unwrap();
            let via_obmm = map_obmm(&om, &build_btr(&x)).unwrap().to_sparse();
            let via_cbmm = map_cbmm(&table, &x).unwrap().to_sparse();
            assert_close(&via_obmm, &via_cbmm, 1e-12);
        }
    }

    #[test]
    fn oracle_identity_and_rank_deficient() {
        let x = mv(3, &[(1, 2.0), (6, -0.5)]);
        assert_eq!(map_oracle(&Outermorphism::identity(3), &x).unwrap(), x);

        // t0 = t1: the image of e01 is t0 ^ t0 = 0.
        let om = Outermorphism::from_columns(2, 2, &[vec![0.7, -0.3], vec![0.7, -0.3]]).unwrap();
        let y = map_oracle(&om, &mv(2, &[(3, 1.0)])).unwrap();
        assert!(y.is_zero());
    }

    #[test]
    fn oracle_on_trace_example_with_identity_columns() {
        let om = Outermorphism::identity(3);
        let x = mv(3, &[(1, 2.0), (3, -2.0), (7, 1.0)]);
        let y = map_oracle(&om, &x).unwrap();
        assert_eq!(y, mv(3, &[(1, 2.0), (3, -2.0), (7, 1.0)]));
    }

    #[test]
    fn rectangular_map_into_smaller_codomain() {
        // n = 3 -> m = 2: grade-3 input must vanish (no grade 3 in codomain).
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let columns: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..2).map(|_| rng.gen_range(-1.0..=1.0)).collect())
            .collect();
        let om = Outermorphism::from_columns(3, 2, &columns).unwrap();
        let x = mv(3, &[(7, 1.0), (3, 2.0)]);
        let via_obmm = map_obmm(&om, &build_btr(&x)).unwrap().to_sparse();
        let table = CbmmTable::build(&om).unwrap();
        let via_cbmm = map_cbmm(&table, &x).unwrap().to_sparse();
        let via_oracle = map_oracle(&om, &x).unwrap();
        assert_close(&via_obmm, &via_oracle, 1e-12);
        assert_close(&via_cbmm, &via_oracle, 1e-12);
        assert!(table.blade_image(BasisBladeId(7)).is_none());
    }

    #[test]
    fn compose_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(67);
        let t = random_om(&mut rng, 4, 4);
        assert_eq!(Outermorphism::identity(4).compose(&t).unwrap(), t);

        // S = diag(2,3), T columns (0,1) and (1,0): composed columns (0,3), (2,0).
        let s = Outermorphism::from_columns(2, 2, &[vec![2.0, 0.0], vec![0.0, 3.0]]).unwrap();
        let t = Outermorphism::from_columns(2, 2, &[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let st = s.compose(&t).unwrap();
        assert_eq!(st.column(0), &[0.0, 3.0]);
        assert_eq!(st.column(1), &[2.0, 0.0]);

        let bad = Outermorphism::identity(3).compose(&Outermorphism::identity(4));
        assert!(matches!(bad, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn compose_is_functorial_under_mapping() {
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        for _ in 0..20 {
            let n = rng.gen_range(1..=6u32);
            let s = random_om(&mut rng, n, n);
            let t = random_om(&mut rng, n, n);
            let x = random_mv(&mut rng, n, 0.4);
            let direct = map_obmm(&s.compose(&t).unwrap(), &build_btr(&x))
                .unwrap()
                .to_sparse();
            let inner = map_obmm(&t, &build_btr(&x)).unwrap().to_sparse();
            let staged = map_obmm(&s, &build_btr(&inner)).unwrap().to_sparse();
            assert_close(&direct, &staged, 1e-11);
        }
    }

    #[test]
    fn adjoint_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(73);
        let t = random_om(&mut rng, 3, 3);
        assert_eq!(t.adjoint().adjoint(), t);
        assert_eq!(
            Outermorphism::identity(5).adjoint(),
            Outermorphism::identity(5)
        );

        let rect = random_om(&mut rng, 2, 3);
        let adj = rect.adjoint();
        assert_eq!((adj.domain_dim(), adj.codomain_dim()), (3, 2));
        for i in 0..3u32 {
            for j in 0..2u32 {
                assert_eq!(adj.entry(j, i), rect.entry(i, j));
            }
        }
    }

    #[test]
    fn inverse_examples() {
        let id = Outermorphism::identity(4);
        assert_eq!(id.inverse().unwrap(), id);

        let diag = Outermorphism::from_columns(2, 2, &[vec![2.0, 0.0], vec![0.0, 4.0]]).unwrap();
        let inv = diag.inverse().unwrap();
        assert_eq!(inv.column(0), &[0.5, 0.0]);
        assert_eq!(inv.column(1), &[0.0, 0.25]);

        let singular =
            Outermorphism::from_columns(2, 2, &[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(matches!(
            singular.inverse(),
            Err(Error::SingularMatrix { .. })
        ));

        let rect = Outermorphism::from_columns(2, 3, &[vec![1.0; 3], vec![1.0; 3]]).unwrap();
        assert!(matches!(
            rect.inverse(),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    /// Identity plus a small perturbation: well conditioned, so grade-k
    /// images do not amplify round-trip error past the tolerance.
    fn well_conditioned_om(rng: &mut ChaCha8Rng, n: u32) -> Outermorphism {
        let columns: Vec<Vec<f64>> = (0..n)
            .map(|j| {
                (0..n)
                    .map(|i| {
                        let base = if i == j { 1.0 } else { 0.0 };
                        base + 0.1 * rng.gen_range(-1.0..=1.0)
                    })
                    .collect()
            })
            .collect();
        Outermorphism::from_columns(n, n, &columns).unwrap()
    }

    #[test]
    fn inverse_round_trips_mapping() {
        let mut rng = ChaCha8Rng::seed_from_u64(79);
        let mut tested = 0;
        while tested < 20 {
            let n = rng.gen_range(1..=8u32);
            let om = well_conditioned_om(&mut rng, n);
            let Ok(inv) = om.inverse() else { continue };
            tested += 1;
            let x = random_mv(&mut rng, n, 0.4);
            let there = map_obmm(&om, &build_btr(&x)).unwrap().to_sparse();
            let back = map_obmm(&inv, &build_btr(&there)).unwrap().to_sparse();
            assert_close(&back, &x, 1e-9);
        }
    }

    #[test]
    fn graded_output_to_sparse() {
        let empty = GradedOutput::zero(4);
        assert!(empty.to_sparse().is_zero());

        let mut scalar_only = GradedOutput::zero(4);
        scalar_only.add_scaled(5.0, &KVector::scalar_one(4));
        assert_eq!(scalar_only.to_sparse(), mv(4, &[(0, 5.0)]));

        // Traced-example output: 2 f0 - 2 f01 + f012.
        let om = Outermorphism::identity(3);
        let x = mv(3, &[(1, 2.0), (3, -2.0), (7, 1.0)]);
        let y = map_obmm(&om, &build_btr(&x)).unwrap();
        assert_eq!(y.to_sparse(), mv(3, &[(1, 2.0), (3, -2.0), (7, 1.0)]));
    }

    #[test]
    fn grade_preservation_and_scalar_fixpoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(83);
        for _ in 0..20 {
            let n = rng.gen_range(1..=6u32);
            let om = random_om(&mut rng, n, n);
            let k = rng.gen_range(0..=n);
            let count = binomial(n, k) as usize;
            let terms: Vec<_> = (0..count)
                .map(|r| (comb_unrank(n, k, r).unwrap(), rng.gen_range(-1.0..=1.0)))
                .collect();
            let x = SparseMultivector::new(n, terms).unwrap();
            let y = map_obmm(&om, &build_btr(&x)).unwrap();
            for g in 0..=n {
                if g == k {
                    assert!(y.bucket(g).is_some());
                } else {
                    assert!(
                        y.bucket(g).is_none(),
                        "grade {g} touched for grade-{k} input"
                    );
                }
            }
            // Scalars are fixed points.
            let c = rng.gen_range(-3.0..=3.0f64);
            let scalar = mv(n, &[(0, c)]);
            assert_eq!(
                map_obmm(&om, &build_btr(&scalar)).unwrap().to_sparse(),
                scalar
            );
        }
    }

    /// Gaussian-elimination determinant, independent of the inverse path.
    fn det_elimination(om: &Outermorphism) -> f64 {
        let n = om.domain_dim() as usize;
        let mut a = vec![0.0f64; n * n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = om.entry(i as u32, j as u32);
            }
        }
        let mut det = 1.0;
        for col in 0..n {
            let pivot_row = (col..n)
                .max_by(|&r, &s| a[r * n + col].abs().total_cmp(&a[s * n + col].abs()))
                .unwrap();
            let pivot = a[pivot_row * n + col];
            if pivot == 0.0 {
                return 0.0;
            }
            if pivot_row != col {
                for j in 0..n {
                    a.swap(col * n + j, pivot_row * n + j);
                }
                det = -det;
            }
            det *= pivot;
            for row in (col + 1)..n {
                let factor = a[row * n + col] / pivot;
                for j in col..n {
                    a[row * n + j] -= factor * a[col * n + j];
                }
            }
        }
        det
    }

    #[test]
    fn pseudoscalar_maps_to_determinant() {
        let mut rng = ChaCha8Rng::seed_from_u64(97);
        for n in 1..=8u32 {
            for _ in 0..10 {
                let om = random_om(&mut rng, n, n);
                let top = BasisBladeId((1u32 << n) - 1);
                let x = mv(n, &[(top.0, 1.0)]);
                let y = map_obmm(&om, &build_btr(&x)).unwrap().to_sparse();
                let det = det_elimination(&om);
                assert!(
                    approx::relative_eq!(
                        y.coefficient(top),
                        det,
                        max_relative = 1e-9,
                        epsilon = 1e-15
                    ),
                    "n={n}: pseudoscalar image {} vs det {det}",
                    y.coefficient(top)
                );
            }
        }
    }

    #[test]
    fn mapping_is_safe_to_share_across_threads() {
        fn assert_shareable<T: Send + Sync>() {}
        assert_shareable::<Outermorphism>();
        assert_shareable::<CbmmTable>();
        assert_shareable::<GradedOutput>();

        let mut rng = ChaCha8Rng::seed_from_u64(101);
        let om = random_om(&mut rng, 6, 6);
        let x = random_mv(&mut rng, 6, 0.5);
        let tree = build_btr(&x);
        let table = CbmmTable::build(&om).unwrap();
        let reference = map_oracle(&om, &x).unwrap();
        std::thread::scope(|scope| {
            for _ in 0..8 {
                scope.spawn(|| {
                    let via_obmm = map_obmm(&om, &tree).unwrap().to_sparse();
                    let via_cbmm = map_cbmm(&table, &x).unwrap().to_sparse();
                    assert_close(&via_obmm, &reference, 1e-12);
                    assert_close(&via_cbmm, &reference, 1e-12);
                });
            }
        });
    }

    #[test]
    fn file_format_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(89);
        let om = random_om(&mut rng, 3, 4);
        let text = write_outermorphism(&om);
        assert!(text.starts_with("dims 3 4\n"));
        let parsed = parse_outermorphism(text.as_bytes()).unwrap();
        assert_eq!(parsed, om);
    }

    #[test]
    fn file_format_errors() {
        assert!(matches!(
            parse_outermorphism("".as_bytes()),
            Err(Error::EmptyInput(_))
        ));
        assert!(matches!(
            parse_outermorphism("dims 2\n1 0\n0 1\n".as_bytes()),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            parse_outermorphism("dims 2 2\n1 0\n".as_bytes()),
            Err(Error::ShapeMismatch { .. })
        ));
        assert!(matches!(
            parse_outermorphism("dims 2 2\n1 0\n0 x\n".as_bytes()),
            Err(Error::Parse { .. })
        ));
        let commented = "# map\ndims 2 2\n\n1 0\n0 1\n";
        assert_eq!(
            parse_outermorphism(commented.as_bytes()).unwrap(),
            Outermorphism::identity(2)
        );
    }
}
