//! Seeded synthetic inputs: Gaussian sparse-recovery instances, the three 1D
//! interface test signals, and a 2D image with an inpainting hole across the
//! stripe interface.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::grid::{Dims, GridFunction};
use crate::operators::LinearMap;

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

#[derive(Clone, Debug)]
pub struct L1Instance {
    pub operator: LinearMap,
    pub truth: GridFunction,
    pub data: GridFunction,
}

/// `rows x cols` Gaussian matrix scaled by `1/(sqrt(rows) + sqrt(cols))`, so
/// its norm is close to one, a sparse ground truth with `nonzeros` entries of
/// magnitude in [1, 2], and data with Gaussian noise of deviation `noise`.
pub fn gaussian_l1(rows: usize, cols: usize, nonzeros: usize, noise: f64, seed: u64) -> Result<L1Instance> {
    if rows == 0 || cols == 0 || nonzeros > cols {
        return Err(Error::InvalidArgument(format!(
            "cannot place {nonzeros} nonzeros in a {rows}x{cols} problem"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 1.0 / ((rows as f64).sqrt() + (cols as f64).sqrt());
    let data: Vec<f64> = (0..rows * cols)
        .map(|_| scale * normal(&mut rng))
        .collect();
    let operator = LinearMap::dense(rows, cols, data)?;
    let mut truth = vec![0.0; cols];
    let support = rand::seq::index::sample(&mut rng, cols, nonzeros);
    for k in support {
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        truth[k] = sign * rng.random_range(1.0..2.0);
    }
    let truth = GridFunction::from_1d(truth);
    let mut g = operator.apply(&truth)?;
    for v in g.values_mut() {
        *v += noise * normal(&mut rng);
    }
    Ok(L1Instance {
        operator,
        truth,
        data: g,
    })
}

/// A 1D signal with its observation mask (1 observed, 0 missing).
#[derive(Clone, Debug)]
pub struct Signal1d {
    pub data: GridFunction,
    pub mask: GridFunction,
}

impl Signal1d {
    /// First node of the second half, `ceil(n/2)`.
    pub fn interface(&self) -> usize {
        self.data.len().div_ceil(2)
    }

    pub fn operator(&self) -> LinearMap {
        LinearMap::Mask(self.mask.clone())
    }
}

fn check_len(n: usize) -> Result<()> {
    if n < 8 {
        return Err(Error::InvalidArgument(format!("signal length {n} below 8")));
    }
    Ok(())
}

/// Two levels with the jump directly at the interface; fully observed.
pub fn step_1d(n: usize) -> Result<Signal1d> {
    check_len(n)?;
    let m = n.div_ceil(2);
    Ok(Signal1d {
        data: GridFunction::from_1d((0..n).map(|i| if i < m { 0.0 } else { 1.0 }).collect()),
        mask: GridFunction::constant(Dims::D1(n), 1.0),
    })
}

/// Three-level staircase whose middle level straddles the interface, with a
/// missing interval inside the middle level that ends at the interface node
/// (the last node of the first half). The values in the hole are lost
/// (stored as zero).
pub fn ramp_1d(n: usize) -> Result<Signal1d> {
    check_len(n)?;
    let m = n.div_ceil(2);
    let (lo, hi) = (n * 3 / 10, n * 7 / 10);
    let hole = (m - n / 10)..m;
    let mut data = Vec::with_capacity(n);
    let mut mask = Vec::with_capacity(n);
    for i in 0..n {
        let level = if i < lo { 0.0 } else if i < hi { 0.5 } else { 1.0 };
        let missing = hole.contains(&i);
        data.push(if missing { 0.0 } else { level });
        mask.push(if missing { 0.0 } else { 1.0 });
    }
    Ok(Signal1d {
        data: GridFunction::from_1d(data),
        mask: GridFunction::from_1d(mask),
    })
}

/// A plateau across the interface with a missing interval centred on the
/// interface, so the reconstruction has equal (zero) slopes on both sides.
pub fn plateau_1d(n: usize) -> Result<Signal1d> {
    check_len(n)?;
    let m = n.div_ceil(2);
    let hole = (m - n / 10)..(m + n / 10);
    let mut data = Vec::with_capacity(n);
    let mut mask = Vec::with_capacity(n);
    for i in 0..n {
        let missing = hole.contains(&i);
        data.push(if missing { 0.0 } else { 1.0 });
        mask.push(if missing { 0.0 } else { 1.0 });
    }
    Ok(Signal1d {
        data: GridFunction::from_1d(data),
        mask: GridFunction::from_1d(mask),
    })
}

#[derive(Clone, Debug)]
pub struct Image2d {
    pub image: GridFunction,
    pub mask: GridFunction,
}

/// Piecewise-constant test image (a disc, a bar and a smooth background) with
/// mild noise and a rectangular hole centred on the interface row `ceil(rows/2)`.
pub fn image_2d(rows: usize, cols: usize, hole: usize, noise: f64, seed: u64) -> Result<Image2d> {
    if rows < 8 || cols < 8 || hole >= rows.min(cols) {
        return Err(Error::InvalidArgument(format!(
            "image {rows}x{cols} too small for a hole of {hole}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (r, c) = (rows as f64, cols as f64);
    let interface = rows.div_ceil(2);
    let row0 = interface - hole / 2;
    let col0 = (cols - hole) / 2;
    let mut image = Vec::with_capacity(rows * cols);
    let mut mask = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            let (x, y) = (i as f64 / r, j as f64 / c);
            let mut v = 0.2 + 0.2 * y;
            if (x - 0.5).powi(2) + (y - 0.35).powi(2) < 0.06 {
                v = 0.8;
            }
            if (0.15..0.85).contains(&x) && (0.68..0.78).contains(&y) {
                v = 0.55;
            }
            v += noise * normal(&mut rng);
            let missing = (row0..row0 + hole).contains(&i) && (col0..col0 + hole).contains(&j);
            image.push(if missing { 0.0 } else { v });
            mask.push(if missing { 0.0 } else { 1.0 });
        }
    }
    let dims = Dims::D2 { rows, cols };
    Ok(Image2d {
        image: GridFunction::new(dims, image)?,
        mask: GridFunction::new(dims, mask)?,
    })
}
