//! Grade-specialized outer product of a vector with a k-vector, the hot
//! operation of the online mapping traversal.
//!
//! For each `(dimension, grade)` pair a [`KernelTable`] of
//! `(out, vector, kvector, sign)` triples is computed once and cached; the
//! driver then runs a straight multiply-accumulate loop with no per-call
//! searching and no allocation beyond the output array. Above the table
//! ceiling a combination-enumerating fallback computes the same products
//! without materializing a table, so every dimension up to
//! [`MAX_DIM`] stays correct.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::{Arc, OnceLock, RwLock};

use crate::blade::{binomial, comb_rank, comb_unrank, MAX_DIM};
use crate::error::{Error, Result};
use crate::multivector::SparseMultivector;

/// Largest dimension for which kernel tables are materialized and cached.
/// Above this, the generic enumeration path is used.
pub const KERNEL_TABLE_DIM_CEILING: u32 = 12;

/// Dense grade-homogeneous multivector: coefficient `r` belongs to the blade
/// `comb_unrank(vspace_dim, grade, r)`, i.e. grade-`k` blade ids in ascending
/// order.
#[derive(Debug, Clone, PartialEq)]
pub struct KVector {
    vspace_dim: u32,
    grade: u32,
    coefficients: Vec<f64>,
}

impl KVector {
    pub fn new(vspace_dim: u32, grade: u32, coefficients: Vec<f64>) -> Result<Self> {
        if vspace_dim == 0 || vspace_dim > MAX_DIM {
            return Err(Error::InvalidDimension(vspace_dim));
        }
        if grade > vspace_dim {
            return Err(Error::InvalidGrade {
                grade,
                dim: vspace_dim,
            });
        }
        let expect = binomial(vspace_dim, grade);
        if coefficients.len() as u64 != expect {
            return Err(Error::ShapeMismatch {
                expected: format!("C({vspace_dim},{grade}) = {expect} coefficients"),
                got: coefficients.len().to_string(),
            });
        }
        Ok(KVector {
            vspace_dim,
            grade,
            coefficients,
        })
    }

    /// All-zero k-vector.
    pub fn zeros(vspace_dim: u32, grade: u32) -> Result<Self> {
        KVector::new(
            vspace_dim,
            grade,
            vec![0.0; binomial(vspace_dim, grade) as usize],
        )
    }

    /// The scalar 1 as a grade-0 k-vector.
    pub fn scalar_one(vspace_dim: u32) -> Self {
        KVector {
            vspace_dim,
            grade: 0,
            coefficients: vec![1.0],
        }
    }

    #[inline]
    pub fn vspace_dim(&self) -> u32 {
        self.vspace_dim
    }

    #[inline]
    pub fn grade(&self) -> u32 {
        self.grade
    }

    #[inline]
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    #[inline]
    pub(crate) fn coefficients_mut(&mut self) -> &mut [f64] {
        &mut self.coefficients
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// Converts to the equivalent sparse multivector (zeros dropped).
    pub fn to_sparse(&self) -> SparseMultivector {
        let terms = self
            .coefficients
            .iter()
            .enumerate()
            .filter(|&(_, &c)| c != 0.0)
            .map(|(r, &c)| {
                let id = comb_unrank(self.vspace_dim, self.grade, r)
                    .expect("rank within C(m,k) by construction");
                (id, c)
            })
            .collect();
        SparseMultivector::from_normalized(self.vspace_dim, terms)
    }

    /// Builds a grade-k k-vector from a sparse multivector that contains only
    /// grade-k terms.
    pub fn from_sparse(mv: &SparseMultivector, grade: u32) -> Result<Self> {
        let mut kv = KVector::zeros(mv.dim(), grade)?;
        for &(id, c) in mv.terms() {
            if id.grade() != grade {
                return Err(Error::InvalidGrade {
                    grade: id.grade(),
                    dim: mv.dim(),
                });
            }
            kv.coefficients[comb_rank(id)] = c;
        }
        Ok(kv)
    }
}

/// One multiply-accumulate of a kernel: `out[out_index] += sign *
/// v[vector_index] * T[kvector_index]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelTriple {
    pub out_index: u32,
    pub vector_index: u32,
    pub kvector_index: u32,
    pub sign: f64,
}

/// The complete multiply-accumulate schedule for wedging a vector on the left
/// of a grade-`k` k-vector in dimension `m`. Triple count is
/// `(k+1) * C(m, k+1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable {
    vspace_dim: u32,
    grade: u32,
    triples: Vec<KernelTriple>,
}

impl KernelTable {
    #[inline]
    pub fn vspace_dim(&self) -> u32 {
        self.vspace_dim
    }

    #[inline]
    pub fn grade(&self) -> u32 {
        self.grade
    }

    #[inline]
    pub fn triples(&self) -> &[KernelTriple] {
        &self.triples
    }

    /// Runs the schedule: `out` must be zeroed, length `C(m, k+1)`.
    #[inline]
    pub fn apply(&self, vector: &[f64], kvector: &[f64], out: &mut [f64]) {
        for t in &self.triples {
            out[t.out_index as usize] +=
                t.sign * vector[t.vector_index as usize] * kvector[t.kvector_index as usize];
        }
    }

    /// Text rendering for inspection: one `out[r] += <sign> v[j] * T[s]` line
    /// per triple, in emission order.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for t in &self.triples {
            let sign = if t.sign >= 0.0 { '+' } else { '-' };
            writeln!(
                out,
                "out[{}] += {} v[{}] * T[{}]",
                t.out_index, sign, t.vector_index, t.kvector_index
            )
            .expect("string write");
        }
        out
    }
}

/// Computes the kernel schedule for dimension `m` and k-vector grade `k`.
///
/// For every (k+1)-subset S (output rank r, ascending members c_0..c_k) and
/// every member c_p, the coefficient of the output blade S picks up
/// `(-1)^p * v[c_p] * T[rank(S minus c_p)]`: moving the vector factor past
/// the p smaller members of S costs p transpositions.
pub fn kernel_table(m: u32, k: u32) -> Result<KernelTable> {
    if m == 0 || m > MAX_DIM {
        return Err(Error::InvalidDimension(m));
    }
    if k >= m {
        return Err(Error::InvalidGrade { grade: k, dim: m });
    }
    let out_len = binomial(m, k + 1);
    let mut triples = Vec::with_capacity(((k as u64 + 1) * out_len) as usize);
    let mut enumerator = SubsetEnumerator::new(m, k + 1);
    let mut r = 0u32;
    while let Some(subset) = enumerator.current() {
        let mut sign = 1.0;
        for p in 0..=(k as usize) {
            triples.push(KernelTriple {
                out_index: r,
                vector_index: subset.members[p],
                kvector_index: subset.rank_without(p) as u32,
                sign,
            });
            sign = -sign;
        }
        r += 1;
        enumerator.advance();
    }
    Ok(KernelTable {
        vspace_dim: m,
        grade: k,
        triples,
    })
}

/// Colex-order enumerator of j-subsets of {0..m-1}, tracking the combinadic
/// rank sums needed to index subsets with one member removed.
struct SubsetEnumerator {
    m: u32,
    members: Vec<u32>,
    // prefix[p] = sum_{u<p} C(members[u], u+1); suffix[p] = sum_{u>p} C(members[u], u)
    prefix: Vec<u64>,
    suffix: Vec<u64>,
    done: bool,
}

struct SubsetView<'a> {
    members: &'a [u32],
    prefix: &'a [u64],
    suffix: &'a [u64],
}

impl SubsetView<'_> {
    /// Combinadic rank of the subset with member at position `p` removed.
    #[inline]
    fn rank_without(&self, p: usize) -> u64 {
        self.prefix[p] + self.suffix[p]
    }
}

impl SubsetEnumerator {
    fn new(m: u32, j: u32) -> Self {
        let members: Vec<u32> = (0..j).collect();
        let mut e = SubsetEnumerator {
            m,
            prefix: vec![0; members.len()],
            suffix: vec![0; members.len()],
            members,
            done: j > m,
        };
        e.recompute_sums();
        e
    }

    fn recompute_sums(&mut self) {
        let j = self.members.len();
        let mut acc = 0u64;
        for p in 0..j {
            self.prefix[p] = acc;
            acc += binomial(self.members[p], p as u32 + 1);
        }
        acc = 0;
        for p in (0..j).rev() {
            self.suffix[p] = acc;
            acc += binomial(self.members[p], p as u32);
        }
    }

    fn current(&self) -> Option<SubsetView<'_>> {
        if self.done {
            None
        } else {
            Some(SubsetView {
                members: &self.members,
                prefix: &self.prefix,
                suffix: &self.suffix,
            })
        }
    }

    /// Next subset in colex (ascending blade id) order.
    fn advance(&mut self) {
        let j = self.members.len();
        if j == 0 {
            self.done = true;
            return;
        }
        let mut p = 0;
        while p < j {
            let limit = if p + 1 < j {
                self.members[p + 1]
            } else {
                self.m
            };
            if self.members[p] + 1 < limit {
                self.members[p] += 1;
                for (q, slot) in self.members.iter_mut().enumerate().take(p) {
                    *slot = q as u32;
                }
                self.recompute_sums();
                return;
            }
            p += 1;
        }
        self.done = true;
    }
}

/// The hot-path form of a schedule: the out index is implicit (entries come
/// in exact chunks of `k+1`, chunk `r` feeding `out[r]`), and the operand
/// indices are narrowed so a full traversal streams 6 bytes per
/// multiply-accumulate.
#[derive(Debug)]
pub(crate) struct PackedKernel {
    grade: u32,
    ops: Vec<PackedOp>,
}

#[derive(Debug, Clone, Copy)]
struct PackedOp {
    vector_index: u16,
    kvector_index: u16,
    sign: i8,
}

impl PackedKernel {
    fn from_table(table: &KernelTable) -> Self {
        let ops = table
            .triples()
            .iter()
            .map(|t| {
                assert!(
                    t.vector_index < u32::from(u16::MAX) && t.kvector_index < u32::from(u16::MAX),
                    "packed kernels require indices below 2^16; raise the type width before \
                     raising the table ceiling"
                );
                PackedOp {
                    vector_index: t.vector_index as u16,
                    kvector_index: t.kvector_index as u16,
                    sign: if t.sign >= 0.0 { 1 } else { -1 },
                }
            })
            .collect();
        PackedKernel {
            grade: table.grade(),
            ops,
        }
    }

    #[inline]
    fn apply(&self, vector: &[f64], kvector: &[f64], out: &mut [f64]) {
        let chunk = self.grade as usize + 1;
        for (slot, ops) in out.iter_mut().zip(self.ops.chunks_exact(chunk)) {
            let mut acc = 0.0;
            for op in ops {
                acc += f64::from(op.sign)
                    * vector[op.vector_index as usize]
                    * kvector[op.kvector_index as usize];
            }
            *slot += acc;
        }
    }
}

type KernelCache = RwLock<HashMap<(u32, u32), Arc<PackedKernel>>>;

fn kernel_cache() -> &'static KernelCache {
    static CACHE: OnceLock<KernelCache> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Cached packed schedule; computed at most once per `(m, k)` and shared.
/// Safe for concurrent lookup/insert.
pub(crate) fn cached_kernel(m: u32, k: u32) -> Result<Arc<PackedKernel>> {
    if let Some(kernel) = kernel_cache()
        .read()
        .expect("kernel cache poisoned")
        .get(&(m, k))
    {
        return Ok(Arc::clone(kernel));
    }
    let built = Arc::new(PackedKernel::from_table(&kernel_table(m, k)?));
    let mut cache = kernel_cache().write().expect("kernel cache poisoned");
    Ok(Arc::clone(cache.entry((m, k)).or_insert(built)))
}

/// Outer product of a vector (grade-1 coefficients `vector`) with a grade-`k`
/// k-vector, writing into the zeroed `out` slice of length `C(m, k+1)`.
/// The vector factor sits on the left: computes `v ^ T`.
pub(crate) fn wedge_vector_into(
    m: u32,
    k: u32,
    vector: &[f64],
    kvector: &[f64],
    out: &mut [f64],
) -> Result<()> {
    if k >= m {
        return Err(Error::InvalidGrade { grade: k, dim: m });
    }
    debug_assert_eq!(vector.len() as u64, m as u64);
    debug_assert_eq!(kvector.len() as u64, binomial(m, k));
    debug_assert_eq!(out.len() as u64, binomial(m, k + 1));
    if m <= KERNEL_TABLE_DIM_CEILING {
        cached_kernel(m, k)?.apply(vector, kvector, out);
    } else {
        wedge_generic(m, k, vector, kvector, out);
    }
    Ok(())
}

/// Table-free fallback: enumerates output subsets in colex order, computing
/// the removed-member ranks on the fly. Same products and emission order as
/// the table path.
fn wedge_generic(m: u32, k: u32, vector: &[f64], kvector: &[f64], out: &mut [f64]) {
    let mut enumerator = SubsetEnumerator::new(m, k + 1);
    let mut r = 0usize;
    while let Some(subset) = enumerator.current() {
        let mut acc = 0.0;
        let mut sign = 1.0;
        for p in 0..=(k as usize) {
            acc += sign
                * vector[subset.members[p] as usize]
                * kvector[subset.rank_without(p) as usize];
            sign = -sign;
        }
        out[r] += acc;
        r += 1;
        enumerator.advance();
    }
}

/// Outer product `v ^ T` of a vector with a k-vector as whole values.
///
/// Errors when dimensions differ, when `v` is not grade 1, or when the
/// k-vector already has the top grade `m` (the result grade would not exist).
pub fn vector_wedge_kvector(v: &KVector, t: &KVector) -> Result<KVector> {
    if v.vspace_dim() != t.vspace_dim() {
        return Err(Error::DimensionMismatch {
            left: v.vspace_dim(),
            right: t.vspace_dim(),
        });
    }
    if v.grade() != 1 {
        return Err(Error::InvalidGrade {
            grade: v.grade(),
            dim: v.vspace_dim(),
        });
    }
    let (m, k) = (t.vspace_dim(), t.grade());
    if k >= m {
        // Wedging past the top grade: the result grade does not exist.
        return Err(Error::InvalidGrade { grade: k, dim: m });
    }
    let mut out = KVector::zeros(m, k + 1)?;
    wedge_vector_into(
        m,
        k,
        v.coefficients(),
        t.coefficients(),
        &mut out.coefficients,
    )?;
    Ok(out)
}

/// Renders every kernel for dimension `m` (grades 0..m-1) in the inspection
/// text form, with a `#` header line per grade.
pub fn render_kernels(m: u32) -> Result<String> {
    if m == 0 || m > MAX_DIM {
        return Err(Error::InvalidDimension(m));
    }
    let mut out = String::new();
    writeln!(out, "# vector-wedge-kvector kernels, dimension {m}").expect("string write");
    for k in 0..m {
        let table = kernel_table(m, k)?;
        writeln!(
            out,
            "# grade {k} -> {grade_out}: {count} terms",
            grade_out = k + 1,
            count = table.triples().len()
        )
        .expect("string write");
        out.push_str(&table.render());
    }
    Ok(out)
}
