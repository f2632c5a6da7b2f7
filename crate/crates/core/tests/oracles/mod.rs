//! Independent reference solvers used by the integration and acceptance tests.
//! Everything here works on plain dense matrices and does not call into the
//! crate's grid or projection code.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

/// Difference operator with the group structure of the penalty: each group of
/// rows is penalized by its Euclidean norm.
pub struct Penalty {
    pub d: DMatrix<f64>,
    pub groups: Vec<Vec<usize>>,
}

impl Penalty {
    /// Forward differences on a line, one group per edge.
    pub fn tv_1d(n: usize) -> Self {
        let mut d = DMatrix::zeros(n.saturating_sub(1), n);
        for i in 0..n.saturating_sub(1) {
            d[(i, i)] = -1.0;
            d[(i, i + 1)] = 1.0;
        }
        let groups = (0..n.saturating_sub(1)).map(|i| vec![i]).collect();
        Penalty { d, groups }
    }

    /// Isotropic forward differences on a row-major grid; the group of a node
    /// holds its row-direction and column-direction differences.
    pub fn tv_2d(rows: usize, cols: usize) -> Self {
        let n = rows * cols;
        let mut d = DMatrix::zeros(2 * n, n);
        for i in 0..rows {
            for j in 0..cols {
                let k = i * cols + j;
                if i + 1 < rows {
                    d[(2 * k, k)] = -1.0;
                    d[(2 * k, k + cols)] = 1.0;
                }
                if j + 1 < cols {
                    d[(2 * k + 1, k)] = -1.0;
                    d[(2 * k + 1, k + 1)] = 1.0;
                }
            }
        }
        let groups = (0..n).map(|k| vec![2 * k, 2 * k + 1]).collect();
        Penalty { d, groups }
    }

    pub fn l1(n: usize) -> Self {
        Penalty {
            d: DMatrix::identity(n, n),
            groups: (0..n).map(|i| vec![i]).collect(),
        }
    }

    pub fn value(&self, u: &DVector<f64>) -> f64 {
        let du = &self.d * u;
        self.groups
            .iter()
            .map(|g| g.iter().map(|&r| du[r] * du[r]).sum::<f64>().sqrt())
            .sum()
    }

    fn shrink(&self, v: &DVector<f64>, t: f64) -> DVector<f64> {
        let mut out = v.clone();
        for g in &self.groups {
            let norm = g.iter().map(|&r| v[r] * v[r]).sum::<f64>().sqrt();
            let f = if norm > t { 1.0 - t / norm } else { 0.0 };
            for &r in g {
                out[r] = f * v[r];
            }
        }
        out
    }

    fn ball_project(&self, p: &mut DVector<f64>) {
        for g in &self.groups {
            let norm = g.iter().map(|&r| p[r] * p[r]).sum::<f64>().sqrt();
            if norm > 1.0 {
                for &r in g {
                    p[r] /= norm;
                }
            }
        }
    }
}

/// `argmin_{u in range(E)} ||u - z||^2 + 2 alpha pen(u + u2)` by ADMM on the
/// splitting `w = D(E x + u2)`. `E` has orthonormal columns. Returns `u = E x`.
pub fn constrained_prox(
    pen: &Penalty,
    e: &DMatrix<f64>,
    z: &DVector<f64>,
    u2: &DVector<f64>,
    alpha: f64,
    iters: usize,
) -> DVector<f64> {
    let rho = 1.0;
    let de = &pen.d * e;
    let du2 = &pen.d * u2;
    let lhs = e.transpose() * e * 2.0 + de.transpose() * &de * rho;
    let chol = lhs.cholesky().expect("positive definite system");
    let mut x = DVector::zeros(e.ncols());
    let mut w = DVector::zeros(pen.d.nrows());
    let mut y = DVector::zeros(pen.d.nrows());
    for _ in 0..iters {
        let rhs = e.transpose() * z * 2.0 - de.transpose() * (&du2 - &w + &y) * rho;
        x = chol.solve(&rhs);
        let dx = &de * &x + &du2;
        w = pen.shrink(&(&dx + &y), 2.0 * alpha / rho);
        y += dx - &w;
    }
    e * x
}

/// `argmin_u ||u - g||^2 + 2 alpha pen(u)`.
pub fn prox(pen: &Penalty, g: &DVector<f64>, alpha: f64, iters: usize) -> DVector<f64> {
    let n = g.len();
    constrained_prox(pen, &DMatrix::identity(n, n), g, &DVector::zeros(n), alpha, iters)
}

/// Projection of `g` onto `{-alpha D^T p : |p_group| <= 1}` as the
/// constrained least-squares problem `min_p ||alpha D^T p + g||^2` solved by
/// accelerated projected gradient.
pub fn dual_projection(pen: &Penalty, g: &DVector<f64>, alpha: f64, iters: usize) -> DVector<f64> {
    let dt = pen.d.transpose();
    let lip = 2.0 * alpha * alpha * (&pen.d * &dt).norm().max(1e-300);
    let mut p = DVector::zeros(pen.d.nrows());
    let mut q = p.clone();
    let mut t = 1.0f64;
    for _ in 0..iters {
        let r = &dt * &q * alpha + g;
        let grad = &pen.d * r * (2.0 * alpha);
        let mut next = &q - grad / lip;
        pen.ball_project(&mut next);
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        q = &next + (&next - &p) * ((t - 1.0) / t_next);
        p = next;
        t = t_next;
    }
    -(&dt * p) * alpha
}

/// Exact minimizer of `||u - g||^2 + 2 alpha TV(u)` on a line, by the taut
/// string algorithm applied to the cumulative sums.
pub fn taut_string(g: &[f64], alpha: f64) -> Vec<f64> {
    // prox of lambda*TV with the 1/2 normalisation has lambda = alpha
    let n = g.len();
    if n == 0 {
        return Vec::new();
    }
    let lambda = alpha;
    let mut cum = vec![0.0; n + 1];
    for i in 0..n {
        cum[i + 1] = cum[i] + g[i];
    }
    let lo: Vec<f64> = (0..=n)
        .map(|i| if i == 0 || i == n { cum[i] } else { cum[i] - lambda })
        .collect();
    let hi: Vec<f64> = (0..=n)
        .map(|i| if i == 0 || i == n { cum[i] } else { cum[i] + lambda })
        .collect();
    // shortest path between the tubes from (0, 0) to (n, cum[n])
    let mut out = vec![0.0; n];
    let mut start = 0usize;
    let mut y0 = cum[0];
    while start < n {
        let (mut smax, mut smin) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut kmax, mut kmin) = (start + 1, start + 1);
        let mut k = start + 1;
        let mut done = None;
        while k <= n {
            let dx = (k - start) as f64;
            let up = (hi[k] - y0) / dx;
            let down = (lo[k] - y0) / dx;
            if down > smax {
                // the lower tube forces the path above the upper slope: bend at kmax
                done = Some((kmax, smax));
                break;
            }
            if up < smin {
                done = Some((kmin, smin));
                break;
            }
            if up < smax {
                smax = up;
                kmax = k;
            }
            if down > smin {
                smin = down;
                kmin = k;
            }
            k += 1;
        }
        let (end, slope) = match done {
            Some(b) => b,
            None => {
                let slope = (cum[n] - y0) / (n - start) as f64;
                (n, slope)
            }
        };
        for v in out.iter_mut().take(end).skip(start) {
            *v = slope;
        }
        y0 += slope * (end - start) as f64;
        start = end;
    }
    out
}

pub fn to_vec(v: &DVector<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}

pub fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn l2_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}
