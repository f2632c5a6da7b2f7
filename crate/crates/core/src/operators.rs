//! The forward operator `T`: dense matrices, inpainting masks, the identity,
//! and scalar multiples of those.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{check_dims, Error, Result};
use crate::grid::{Dims, GridFunction};

#[derive(Clone, Debug, PartialEq)]
pub enum LinearMap {
    /// Row-major `rows x cols` matrix acting on 1D vectors of length `cols`.
    Dense {
        rows: usize,
        cols: usize,
        data: Vec<f64>,
    },
    /// Pointwise product with a 0/1 mask on the mask's own grid.
    Mask(GridFunction),
    Identity(Dims),
    Scaled { factor: f64, inner: Box<LinearMap> },
}

/// Spectral norm estimate returned by [`estimate_spectral_norm`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormBound {
    pub estimate: f64,
    pub iterations_used: usize,
}

impl LinearMap {
    pub fn dense(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidArgument(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix entries"));
        }
        Ok(LinearMap::Dense { rows, cols, data })
    }

    pub fn mask(mask: GridFunction) -> Result<Self> {
        if mask.values().iter().any(|&m| m != 0.0 && m != 1.0) {
            return Err(Error::InvalidArgument("mask entries must be 0 or 1".into()));
        }
        Ok(LinearMap::Mask(mask))
    }

    pub fn scaled(self, factor: f64) -> Self {
        LinearMap::Scaled {
            factor,
            inner: Box::new(self),
        }
    }

    pub fn domain(&self) -> Dims {
        match self {
            LinearMap::Dense { cols, .. } => Dims::D1(*cols),
            LinearMap::Mask(m) => m.dims(),
            LinearMap::Identity(d) => *d,
            LinearMap::Scaled { inner, .. } => inner.domain(),
        }
    }

    pub fn codomain(&self) -> Dims {
        match self {
            LinearMap::Dense { rows, .. } => Dims::D1(*rows),
            LinearMap::Mask(m) => m.dims(),
            LinearMap::Identity(d) => *d,
            LinearMap::Scaled { inner, .. } => inner.codomain(),
        }
    }

    /// `Tu`
    pub fn apply(&self, u: &GridFunction) -> Result<GridFunction> {
        check_dims(self.domain(), u.dims())?;
        Ok(self.apply_unchecked(u))
    }

    /// `T*v`
    pub fn adjoint_apply(&self, v: &GridFunction) -> Result<GridFunction> {
        check_dims(self.codomain(), v.dims())?;
        Ok(self.adjoint_unchecked(v))
    }

    pub(crate) fn apply_unchecked(&self, u: &GridFunction) -> GridFunction {
        match self {
            LinearMap::Dense { rows, cols, data } => {
                let x = u.values();
                let out = (0..*rows)
                    .map(|r| {
                        data[r * cols..(r + 1) * cols]
                            .iter()
                            .zip(x)
                            .map(|(a, b)| a * b)
                            .sum()
                    })
                    .collect();
                GridFunction::from_raw(Dims::D1(*rows), out)
            }
            LinearMap::Mask(m) => m.zip_map(u, |a, b| a * b),
            LinearMap::Identity(_) => u.clone(),
            LinearMap::Scaled { factor, inner } => {
                let mut v = inner.apply_unchecked(u);
                v.values_mut().iter_mut().for_each(|x| *x *= factor);
                v
            }
        }
    }

    pub(crate) fn adjoint_unchecked(&self, v: &GridFunction) -> GridFunction {
        match self {
            LinearMap::Dense { rows, cols, data } => {
                let mut out = vec![0.0; *cols];
                for (r, &vr) in v.values().iter().enumerate().take(*rows) {
                    if vr == 0.0 {
                        continue;
                    }
                    for (o, a) in out.iter_mut().zip(&data[r * cols..(r + 1) * cols]) {
                        *o += a * vr;
                    }
                }
                GridFunction::from_raw(Dims::D1(*cols), out)
            }
            LinearMap::Mask(m) => m.zip_map(v, |a, b| a * b),
            LinearMap::Identity(_) => v.clone(),
            LinearMap::Scaled { factor, inner } => {
                let mut u = inner.adjoint_unchecked(v);
                u.values_mut().iter_mut().for_each(|x| *x *= factor);
                u
            }
        }
    }

    /// Dense matrix form, when the map is a (scaled) dense matrix.
    pub fn as_dense(&self) -> Option<(usize, usize, Vec<f64>)> {
        match self {
            LinearMap::Dense { rows, cols, data } => Some((*rows, *cols, data.clone())),
            LinearMap::Scaled { factor, inner } => inner
                .as_dense()
                .map(|(r, c, d)| (r, c, d.into_iter().map(|x| x * factor).collect())),
            _ => None,
        }
    }
}

/// Power iteration on `T*T` from a seeded Gaussian start. Masks and the
/// identity are answered exactly.
pub fn estimate_spectral_norm(map: &LinearMap, tol: f64, max_iters: usize, seed: u64) -> NormBound {
    match map {
        LinearMap::Identity(d) => NormBound {
            estimate: if d.is_empty() { 0.0 } else { 1.0 },
            iterations_used: 0,
        },
        LinearMap::Mask(m) => NormBound {
            estimate: if m.values().iter().any(|&x| x != 0.0) { 1.0 } else { 0.0 },
            iterations_used: 0,
        },
        LinearMap::Scaled { factor, inner } => {
            let b = estimate_spectral_norm(inner, tol, max_iters, seed);
            NormBound {
                estimate: factor.abs() * b.estimate,
                iterations_used: b.iterations_used,
            }
        }
        LinearMap::Dense { .. } => power_iteration(map, tol, max_iters, seed),
    }
}

fn power_iteration(map: &LinearMap, tol: f64, max_iters: usize, seed: u64) -> NormBound {
    let dims = map.domain();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start: Vec<f64> = (0..dims.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mut v = GridFunction::from_raw(dims, start);
    let n = v.norm();
    if n == 0.0 {
        return NormBound {
            estimate: 0.0,
            iterations_used: 0,
        };
    }
    v = v.scaled(1.0 / n);
    let mut estimate = 0.0;
    for it in 1..=max_iters {
        let w = map.adjoint_unchecked(&map.apply_unchecked(&v));
        let wn = w.norm();
        if wn == 0.0 {
            return NormBound {
                estimate: 0.0,
                iterations_used: it,
            };
        }
        let next = wn.sqrt();
        v = w.scaled(1.0 / wn);
        if (next - estimate).abs() <= tol * next {
            return NormBound {
                estimate: next,
                iterations_used: it,
            };
        }
        estimate = next;
    }
    NormBound {
        estimate,
        iterations_used: max_iters,
    }
}

/// Scaled problem `(T/c, g/c, c)` with `c = ||T|| / target`. Minimizers are
/// preserved when the regularization weight is divided by `c^2`.
pub fn rescale_problem(
    map: &LinearMap,
    g: &GridFunction,
    target: f64,
) -> Result<(LinearMap, GridFunction, f64)> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "rescale target {target} outside (0, 1)"
        )));
    }
    check_dims(map.codomain(), g.dims())?;
    let bound = estimate_spectral_norm(map, 1e-6, 1000, 0);
    if bound.estimate == 0.0 {
        return Ok((map.clone(), g.clone(), 1.0));
    }
    let c = bound.estimate / target;
    Ok((map.clone().scaled(1.0 / c), g.scaled(1.0 / c), c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(x: &[f64]) -> GridFunction {
        GridFunction::from_1d(x.to_vec())
    }

    #[test]
    fn apply_examples() {
        let id = LinearMap::Identity(Dims::D1(3));
        assert_eq!(id.apply(&v(&[1., 2., 3.])).unwrap().values(), &[1., 2., 3.]);
        let m = LinearMap::mask(v(&[1., 0., 1.])).unwrap();
        assert_eq!(m.apply(&v(&[5., 7., 9.])).unwrap().values(), &[5., 0., 9.]);
        assert_eq!(m.adjoint_apply(&v(&[5., 7., 9.])).unwrap().values(), &[5., 0., 9.]);
        let d = LinearMap::dense(2, 2, vec![1., 0., 0., 2.]).unwrap();
        assert_eq!(d.apply(&v(&[3., 4.])).unwrap().values(), &[3., 8.]);
        let d = LinearMap::dense(2, 2, vec![1., 2., 0., 1.]).unwrap();
        assert_eq!(d.adjoint_apply(&v(&[1., 1.])).unwrap().values(), &[1., 3.]);
    }

    #[test]
    fn shape_and_payload_errors() {
        let d = LinearMap::dense(2, 3, vec![0.; 6]).unwrap();
        assert!(matches!(d.apply(&v(&[1., 2.])), Err(Error::ShapeMismatch { .. })));
        assert!(d.adjoint_apply(&v(&[1., 2., 3.])).is_err());
        assert!(LinearMap::mask(v(&[0.5])).is_err());
        assert!(LinearMap::dense(2, 2, vec![0.; 3]).is_err());
    }

    #[test]
    fn norm_examples() {
        let b = estimate_spectral_norm(&LinearMap::Identity(Dims::D1(8)), 1e-6, 1000, 1);
        assert_eq!(b.estimate, 1.0);
        let ones = LinearMap::mask(GridFunction::constant(Dims::D1(4), 1.0)).unwrap();
        assert_eq!(estimate_spectral_norm(&ones, 1e-6, 1000, 1).estimate, 1.0);
        let zeros = LinearMap::mask(GridFunction::zeros(Dims::D1(4))).unwrap();
        assert_eq!(estimate_spectral_norm(&zeros, 1e-6, 1000, 1).estimate, 0.0);
        let diag = LinearMap::dense(3, 3, vec![1., 0., 0., 0., 2., 0., 0., 0., 3.]).unwrap();
        let b = estimate_spectral_norm(&diag, 1e-6, 1000, 1);
        assert!((b.estimate - 3.0).abs() <= 3.0 * 1e-5, "{b:?}");
    }

    #[test]
    fn rescale_examples() {
        let g = v(&[1., 2.]);
        let (_, _, c) = rescale_problem(&LinearMap::Identity(Dims::D1(2)), &g, 0.9).unwrap();
        assert!((c - 1.0 / 0.9).abs() < 1e-15);
        let zero = LinearMap::mask(GridFunction::zeros(Dims::D1(2))).unwrap();
        let (t, g2, c) = rescale_problem(&zero, &g, 0.9).unwrap();
        assert_eq!((t, g2, c), (zero, g.clone(), 1.0));
        let diag = LinearMap::dense(3, 3, vec![1., 0., 0., 0., 2., 0., 0., 0., 3.]).unwrap();
        let (t, _, c) = rescale_problem(&diag, &v(&[1., 1., 1.]), 0.9).unwrap();
        assert!((c - 3.0 / 0.9).abs() < 1e-4);
        let b = estimate_spectral_norm(&t, 1e-6, 1000, 3);
        assert!((b.estimate - 0.9).abs() < 0.9 * 1e-5);
    }

    fn rand_vec(n: usize, rng: &mut ChaCha8Rng) -> GridFunction {
        GridFunction::from_1d((0..n).map(|_| StandardNormal.sample(rng)).collect())
    }

    proptest! {
        #[test]
        fn adjoint_consistency(rows in 1usize..8, cols in 1usize..8, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let data = rand_vec(rows * cols, &mut rng).into_values();
            let mask = rand_vec(cols, &mut rng).map(|x| if x > 0.0 { 1.0 } else { 0.0 });
            let maps = [
                LinearMap::dense(rows, cols, data).unwrap(),
                LinearMap::mask(mask).unwrap(),
                LinearMap::Identity(Dims::D1(cols)).scaled(0.3),
            ];
            for t in &maps {
                let u = rand_vec(t.domain().len(), &mut rng);
                let w = rand_vec(t.codomain().len(), &mut rng);
                let lhs = t.apply(&u).unwrap().dot(&w);
                let rhs = u.dot(&t.adjoint_apply(&w).unwrap());
                prop_assert!((lhs - rhs).abs() <= 1e-10 * u.norm() * w.norm());
            }
        }

        #[test]
        fn rescaled_dense_norm_hits_target(n in 2usize..7, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = LinearMap::dense(n, n, rand_vec(n * n, &mut rng).into_values()).unwrap();
            let g = rand_vec(n, &mut rng);
            let (ts, _, _) = rescale_problem(&t, &g, 0.9).unwrap();
            let b = estimate_spectral_norm(&ts, 1e-6, 100_000, seed ^ 1);
            // power iteration converges slowly on clustered top singular values
            prop_assert!((b.estimate - 0.9).abs() <= 0.9 * 1e-3, "{:?}", b);
        }
    }
}
