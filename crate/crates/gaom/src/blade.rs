//! Basis-blade arithmetic on bit-set blade ids, plus the combinadic
//! rank/unrank used for dense k-vector indexing.
//!
//! A blade id is an unsigned integer whose set bits select the participating
//! basis vectors: bit `i` set means `e_i` is a factor. Id 0 is the scalar
//! blade. The grade of a blade is its population count.

use crate::error::{Error, Result};

/// Largest supported frame dimension. Blade ids must fit a 32-bit word with
/// headroom, and binomial bookkeeping stays within u64 up to 2·MAX_DIM.
pub const MAX_DIM: u32 = 30;

/// Identifies a basis blade: bit `i` set means basis vector `e_i` is a factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BasisBladeId(pub u32);

impl BasisBladeId {
    /// Number of basis-vector factors (population count). Grade 0 is the
    /// scalar blade.
    #[inline]
    pub fn grade(self) -> u32 {
        self.0.count_ones()
    }

    /// Whether this id is valid for an n-dimensional frame.
    #[inline]
    pub fn fits(self, dim: u32) -> bool {
        dim <= 31 && self.0 < (1u32 << dim)
    }

    /// Set-bit positions in ascending order: the factor indices of the blade.
    pub fn factor_indices(self) -> impl Iterator<Item = u32> {
        let bits = self.0;
        (0..32).filter(move |i| bits & (1 << i) != 0)
    }
}

impl std::fmt::Display for BasisBladeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u32> for BasisBladeId {
    fn from(id: u32) -> Self {
        BasisBladeId(id)
    }
}

/// A validated frame dimension: the metric-free part of a coordinate frame.
/// Outermorphism mapping never consults a bilinear form, so the dimension is
/// all that is kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameDescriptor {
    dim: u32,
}

impl FrameDescriptor {
    pub fn new(dim: u32) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::InvalidDimension(dim));
        }
        Ok(FrameDescriptor { dim })
    }

    #[inline]
    pub fn dim(self) -> u32 {
        self.dim
    }

    /// Total number of basis blades, 2^n.
    #[inline]
    pub fn blade_count(self) -> u64 {
        1u64 << self.dim
    }
}

const BINOM_ROWS: usize = (2 * MAX_DIM + 1) as usize;

static BINOM: [[u64; BINOM_ROWS]; BINOM_ROWS] = {
    let mut table = [[0u64; BINOM_ROWS]; BINOM_ROWS];
    let mut n = 0;
    while n < BINOM_ROWS {
        table[n][0] = 1;
        let mut k = 1;
        while k <= n {
            table[n][k] = table[n - 1][k - 1] + if k < n { table[n - 1][k] } else { 0 };
            k += 1;
        }
        n += 1;
    }
    table
};

/// Binomial coefficient C(n, k); zero when k > n. Exact for n ≤ 2·MAX_DIM.
#[inline]
pub fn binomial(n: u32, k: u32) -> u64 {
    if k > n {
        return 0;
    }
    assert!((n as usize) < BINOM_ROWS, "binomial: n out of table range");
    BINOM[n as usize][k as usize]
}

/// Outer product of two basis blades.
///
/// Returns `(0, BasisBladeId(0))` when the blades share a factor (the product
/// annihilates); otherwise `(sign, a | b)` where the sign is the parity of the
/// transpositions needed to merge the two ascending factor sequences.
pub fn blade_wedge(a: BasisBladeId, b: BasisBladeId) -> (i8, BasisBladeId) {
    if a.0 & b.0 != 0 {
        return (0, BasisBladeId(0));
    }
    // Count pairs (i in a, j in b) with i > j: shifting a right by s and
    // masking with b counts the pairs at distance s.
    let mut swaps = 0u32;
    let mut shifted = a.0 >> 1;
    while shifted != 0 {
        swaps += (shifted & b.0).count_ones();
        shifted >>= 1;
    }
    let sign = if swaps & 1 == 0 { 1 } else { -1 };
    (sign, BasisBladeId(a.0 | b.0))
}

/// Rank of a blade id among all ids of the same grade, ordered by increasing
/// integer value (the combinadic / colexicographic order). Independent of the
/// frame dimension; always < C(n, grade) for any n the id fits.
pub fn comb_rank(id: BasisBladeId) -> usize {
    let mut rank = 0u64;
    let mut t = 0u32;
    for c in id.factor_indices() {
        t += 1;
        rank += binomial(c, t);
    }
    rank as usize
}

/// Inverse of [`comb_rank`]: the `rank`-th grade-`k` blade id of an
/// n-dimensional frame in increasing id order.
pub fn comb_unrank(n: u32, k: u32, rank: usize) -> Result<BasisBladeId> {
    if k > n {
        return Err(Error::InvalidGrade { grade: k, dim: n });
    }
    let count = binomial(n, k);
    let mut rank = rank as u64;
    if rank >= count {
        return Err(Error::RankOutOfRange { n, k, rank, count });
    }
    let mut id = 0u32;
    let mut t = k;
    let mut c = n;
    while t > 0 {
        // Largest c with C(c, t) <= rank; scan downward from the previous
        // factor position.
        loop {
            c -= 1;
            if binomial(c, t) <= rank {
                break;
            }
        }
        rank -= binomial(c, t);
        id |= 1 << c;
        t -= 1;
    }
    Ok(BasisBladeId(id))
}
