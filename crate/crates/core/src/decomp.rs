//! Splittings of the solution space into mutually orthogonal subspaces.
//!
//! Index-block decompositions (spatial stripes, coordinate blocks) project by
//! zeroing everything outside a block. Orthogonal decompositions carry a
//! matrix `Q` and project onto the span of a block of its columns.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{check_dims, Error, Result};
use crate::grid::{Dims, GridFunction};
use crate::operators::LinearMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecompositionKind {
    Stripes1d,
    Stripes2d,
    IndexSplit,
    Orthogonal,
}

#[derive(Clone, Debug)]
pub struct SubspaceDecomposition {
    kind: DecompositionKind,
    dims: Dims,
    /// Flat index ranges; for orthogonal kinds these select columns of `q`.
    blocks: Vec<Range<usize>>,
    q: Option<DMatrix<f64>>,
}

/// Equal contiguous blocks of size `ceil(len / count)`, the last one taking
/// what is left.
fn ceil_blocks(len: usize, count: usize) -> Result<Vec<Range<usize>>> {
    if count == 0 {
        return Err(Error::InvalidDecomposition("need at least one subspace".into()));
    }
    if count > len {
        return Err(Error::InvalidDecomposition(format!(
            "{count} subspaces for {len} indices"
        )));
    }
    let s = len.div_ceil(count);
    let blocks: Vec<_> = (0..count).map(|k| (k * s).min(len)..((k + 1) * s).min(len)).collect();
    if blocks.iter().any(|b| b.is_empty()) {
        return Err(Error::InvalidDecomposition(format!(
            "{count} blocks of width {s} leave an empty block for {len} indices"
        )));
    }
    Ok(blocks)
}

/// Spatial stripes: intervals in 1D, bands of whole rows in 2D.
pub fn make_stripes(dims: Dims, count: usize) -> Result<SubspaceDecomposition> {
    let w = dims.row_len();
    let blocks = ceil_blocks(dims.rows(), count)?
        .into_iter()
        .map(|r| r.start * w..r.end * w)
        .collect();
    Ok(SubspaceDecomposition {
        kind: if dims.is_2d() {
            DecompositionKind::Stripes2d
        } else {
            DecompositionKind::Stripes1d
        },
        dims,
        blocks,
        q: None,
    })
}

/// Coordinate blocks of a flat vector (`Q = I`).
pub fn make_index_split(len: usize, count: usize) -> Result<SubspaceDecomposition> {
    Ok(SubspaceDecomposition {
        kind: DecompositionKind::IndexSplit,
        dims: Dims::D1(len),
        blocks: ceil_blocks(len, count)?,
        q: None,
    })
}

/// Orthogonal decomposition from an explicit square `Q` with orthonormal columns.
pub fn make_orthogonal(q: DMatrix<f64>, count: usize) -> Result<SubspaceDecomposition> {
    let n = q.nrows();
    if q.ncols() != n {
        return Err(Error::InvalidDecomposition("Q must be square".into()));
    }
    let gram = q.transpose() * &q;
    let defect = (gram - DMatrix::<f64>::identity(n, n)).amax();
    if defect > 1e-10 {
        return Err(Error::InvalidDecomposition(format!(
            "Q is not orthogonal (defect {defect:e})"
        )));
    }
    Ok(SubspaceDecomposition {
        kind: DecompositionKind::Orthogonal,
        dims: Dims::D1(n),
        blocks: ceil_blocks(n, count)?,
        q: Some(q),
    })
}

/// Modified Gram-Schmidt on a seeded Gaussian matrix. Columns that come out
/// numerically dependent are redrawn a bounded number of times.
pub fn make_random_orthogonal(dim: usize, count: usize, seed: u64) -> Result<SubspaceDecomposition> {
    const RETRIES: usize = 8;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q = DMatrix::<f64>::zeros(dim, dim);
    for c in 0..dim {
        let mut accepted = false;
        for _ in 0..RETRIES {
            let mut v = DVector::<f64>::from_fn(dim, |_, _| StandardNormal.sample(&mut rng));
            let original = v.norm();
            for k in 0..c {
                let qk = q.column(k);
                let d = qk.dot(&v);
                v.axpy(-d, &qk, 1.0);
            }
            let n = v.norm();
            if n > 1e-8 * original {
                q.set_column(c, &(v / n));
                accepted = true;
                break;
            }
        }
        if !accepted {
            return Err(Error::Factorization(format!(
                "rank-deficient draw for column {c} after {RETRIES} attempts"
            )));
        }
    }
    make_orthogonal(q, count)
}

/// `Q = V` from `T = U D V*`, columns ordered by descending singular value.
/// `V` comes from the symmetric eigendecomposition of `T*T`, which also
/// yields a full basis when `T` has fewer rows than columns.
pub fn make_svd_q(t: &LinearMap, count: usize) -> Result<SubspaceDecomposition> {
    let (rows, cols, data) = t
        .as_dense()
        .ok_or_else(|| Error::InvalidArgument("SVD splitting needs a dense operator".into()))?;
    let m = DMatrix::from_row_slice(rows, cols, &data);
    let gram = m.transpose() * &m;
    let eig = nalgebra::SymmetricEigen::try_new(gram, 1e-14, 10_000)
        .ok_or_else(|| Error::Factorization("eigendecomposition did not converge".into()))?;
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut q = DMatrix::<f64>::zeros(cols, cols);
    for (dst, &src) in order.iter().enumerate() {
        q.set_column(dst, &eig.eigenvectors.column(src));
    }
    make_orthogonal(q, count)
}

impl SubspaceDecomposition {
    /// A single block covering everything (no splitting).
    pub fn whole(dims: Dims) -> Self {
        SubspaceDecomposition {
            kind: if dims.is_2d() {
                DecompositionKind::Stripes2d
            } else {
                DecompositionKind::Stripes1d
            },
            dims,
            blocks: vec![0..dims.len()],
            q: None,
        }
    }

    pub fn kind(&self) -> DecompositionKind {
        self.kind
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn count(&self) -> usize {
        self.blocks.len()
    }

    pub fn block(&self, i: usize) -> Range<usize> {
        self.blocks[i].clone()
    }

    pub fn blocks(&self) -> &[Range<usize>] {
        &self.blocks
    }

    pub fn q(&self) -> Option<&DMatrix<f64>> {
        self.q.as_ref()
    }

    pub fn is_stripes(&self) -> bool {
        matches!(self.kind, DecompositionKind::Stripes1d | DecompositionKind::Stripes2d)
    }

    /// Rows covered by block `i` of a stripe decomposition.
    pub fn row_range(&self, i: usize) -> Range<usize> {
        let w = self.dims.row_len();
        self.blocks[i].start / w..self.blocks[i].end / w
    }

    pub(crate) fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.count() {
            return Err(Error::InvalidArgument(format!(
                "subspace {i} out of range for {} subspaces",
                self.count()
            )));
        }
        Ok(())
    }

    /// Orthogonal projection onto `V_i`.
    pub fn project(&self, i: usize, u: &GridFunction) -> Result<GridFunction> {
        self.check_index(i)?;
        check_dims(self.dims, u.dims())?;
        Ok(self.project_unchecked(i, u))
    }

    /// Projection onto the orthogonal complement of `V_i`.
    pub fn project_complement(&self, i: usize, u: &GridFunction) -> Result<GridFunction> {
        self.check_index(i)?;
        check_dims(self.dims, u.dims())?;
        Ok(self.complement_unchecked(i, u))
    }

    pub(crate) fn project_unchecked(&self, i: usize, u: &GridFunction) -> GridFunction {
        let b = self.blocks[i].clone();
        match &self.q {
            None => {
                let mut out = GridFunction::zeros(u.dims());
                out.values_mut()[b.clone()].copy_from_slice(&u.values()[b]);
                out
            }
            Some(q) => {
                let x = DVector::from_column_slice(u.values());
                let qb = q.columns(b.start, b.len());
                let c = qb.tr_mul(&x);
                let y = qb * c;
                GridFunction::from_raw(u.dims(), y.as_slice().to_vec())
            }
        }
    }

    pub(crate) fn complement_unchecked(&self, i: usize, u: &GridFunction) -> GridFunction {
        match &self.q {
            None => {
                let mut out = u.clone();
                out.values_mut()[self.blocks[i].clone()].fill(0.0);
                out
            }
            Some(_) => u.sub(&self.project_unchecked(i, u)),
        }
    }
}

/// Use `from` for the first `switch_after` outer iterations, then `to`.
#[derive(Clone, Debug)]
pub struct SwitchSchedule {
    pub switch_after: usize,
    pub from: SubspaceDecomposition,
    pub to: SubspaceDecomposition,
}

impl SwitchSchedule {
    pub fn decomposition_at(&self, outer_iter: usize) -> &SubspaceDecomposition {
        if outer_iter < self.switch_after {
            &self.from
        } else {
            &self.to
        }
    }

    pub fn kind_at(&self, outer_iter: usize) -> DecompositionKind {
        self.decomposition_at(outer_iter).kind()
    }
}
