//! Sparse multivectors: normalized `(blade id, coefficient)` term lists, the
//! term-by-term outer product used as the verification oracle, and the line
//! oriented text format.

use std::fmt::Write as _;
use std::io::BufRead;

use crate::blade::{blade_wedge, BasisBladeId};
use crate::error::{Error, Result};

/// A multivector over an n-dimensional frame as a sparse list of
/// `(blade id, coefficient)` terms.
///
/// Normal form is enforced at construction: ids strictly ascending, no
/// duplicates, no exact-zero coefficients, every id below 2^dim.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMultivector {
    dim: u32,
    terms: Vec<(BasisBladeId, f64)>,
}

impl SparseMultivector {
    /// Builds a multivector from raw terms, normalizing: duplicate ids are
    /// summed, exact-zero coefficients dropped, terms sorted by ascending id.
    pub fn new(dim: u32, terms: impl IntoIterator<Item = (BasisBladeId, f64)>) -> Result<Self> {
        let mut terms: Vec<(BasisBladeId, f64)> = terms.into_iter().collect();
        for &(id, _) in &terms {
            if !id.fits(dim) {
                return Err(Error::BladeOutOfRange { id: id.0, dim });
            }
        }
        terms.sort_by_key(|&(id, _)| id);
        let mut merged: Vec<(BasisBladeId, f64)> = Vec::with_capacity(terms.len());
        for (id, coeff) in terms {
            match merged.last_mut() {
                Some((last_id, last_coeff)) if *last_id == id => *last_coeff += coeff,
                _ => merged.push((id, coeff)),
            }
        }
        merged.retain(|&(_, c)| c != 0.0);
        Ok(SparseMultivector { dim, terms: merged })
    }

    /// The zero multivector.
    pub fn zero(dim: u32) -> Self {
        SparseMultivector {
            dim,
            terms: Vec::new(),
        }
    }

    /// Terms assumed already in normal form (ascending, distinct, nonzero).
    /// Used by generators and conversions that produce normal form directly.
    pub(crate) fn from_normalized(dim: u32, terms: Vec<(BasisBladeId, f64)>) -> Self {
        debug_assert!(terms.windows(2).all(|w| w[0].0 < w[1].0));
        debug_assert!(terms.iter().all(|&(id, c)| id.fits(dim) && c != 0.0));
        SparseMultivector { dim, terms }
    }

    #[inline]
    pub fn dim(&self) -> u32 {
        self.dim
    }

    #[inline]
    pub fn terms(&self) -> &[(BasisBladeId, f64)] {
        &self.terms
    }

    #[inline]
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Coefficient of a blade, zero when absent.
    pub fn coefficient(&self, id: BasisBladeId) -> f64 {
        match self.terms.binary_search_by_key(&id, |&(i, _)| i) {
            Ok(pos) => self.terms[pos].1,
            Err(_) => 0.0,
        }
    }

    /// `self + factor * other`. Zero coefficients are kept until
    /// normalization so exact cancellation stays observable to callers that
    /// re-normalize.
    pub fn add_scaled(&self, other: &SparseMultivector, factor: f64) -> Result<SparseMultivector> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        let merged = self
            .terms
            .iter()
            .copied()
            .chain(other.terms.iter().map(|&(id, c)| (id, factor * c)));
        SparseMultivector::new(self.dim, merged)
    }

    pub fn scale(&self, factor: f64) -> SparseMultivector {
        SparseMultivector::new(self.dim, self.terms.iter().map(|&(id, c)| (id, factor * c)))
            .expect("scaling preserves validity")
    }
}

/// Outer product of two sparse multivectors: [`blade_wedge`] distributed over
/// all term pairs, then normalized. This is the reference route the
/// grade-specialized kernels are checked against.
pub fn sparse_wedge(a: &SparseMultivector, b: &SparseMultivector) -> Result<SparseMultivector> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    let mut products = Vec::with_capacity(a.terms().len() * b.terms().len());
    for &(ida, ca) in a.terms() {
        for &(idb, cb) in b.terms() {
            let (sign, id) = blade_wedge(ida, idb);
            if sign != 0 {
                products.push((id, f64::from(sign) * ca * cb));
            }
        }
    }
    SparseMultivector::new(a.dim(), products)
}

/// Parses the multivector text format: one `<blade_id> <coefficient>` pair
/// per line, `#` lines and blank lines ignored. The result is normalized.
pub fn parse_multivector(reader: impl BufRead, dim: u32) -> Result<SparseMultivector> {
    let mut terms = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let parse = |field: Option<&str>, what: &str| {
            field.map(str::to_owned).ok_or_else(|| Error::Parse {
                line: lineno + 1,
                message: format!("missing {what}"),
            })
        };
        let id: u32 = parse(fields.next(), "blade id")?
            .parse()
            .map_err(|e| Error::Parse {
                line: lineno + 1,
                message: format!("blade id: {e}"),
            })?;
        let coeff: f64 =
            parse(fields.next(), "coefficient")?
                .parse()
                .map_err(|e| Error::Parse {
                    line: lineno + 1,
                    message: format!("coefficient: {e}"),
                })?;
        if fields.next().is_some() {
            return Err(Error::Parse {
                line: lineno + 1,
                message: "trailing fields".into(),
            });
        }
        terms.push((BasisBladeId(id), coeff));
    }
    SparseMultivector::new(dim, terms)
}

/// Renders a multivector in the text format accepted by
/// [`parse_multivector`]. Coefficients round-trip exactly.
pub fn write_multivector(mv: &SparseMultivector) -> String {
    let mut out = String::new();
    for &(id, coeff) in mv.terms() {
        writeln!(out, "{} {}", id.0, coeff).expect("string write");
    }
    out
}
