//! Dense complex matrices and the small spectral kernels everything else is
//! built on: Hermitian eigendecomposition (cyclic complex Jacobi), polar
//! unitarization, exponentials of Hermitian generators, eigenphases of
//! unitaries, and determinants.
//!
//! Matrices here are tiny (N ≲ 200, usually 2–8), so an O(N³)-per-sweep
//! Jacobi solver is both fast enough and — unlike LAPACK bindings — available
//! in `no_std` builds with bit-reproducible results.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::fp;

pub type C = Complex<f64>;

/// Imaginary unit.
pub const IM: C = Complex::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C {
    Complex::new(re, im)
}

pub fn cr(re: f64) -> C {
    Complex::new(re, 0.0)
}

/// Hermitian inner product `⟨a|b⟩ = Σ conj(a_i) b_i`.
pub fn dot(a: &[C], b: &[C]) -> C {
    debug_assert_eq!(a.len(), b.len());
    let mut s = C::new(0.0, 0.0);
    for (x, y) in a.iter().zip(b.iter()) {
        s += x.conj() * y;
    }
    s
}

pub fn vec_norm(a: &[C]) -> f64 {
    fp::sqrt(dot(a, a).re)
}

/// Normalize in place; returns the original norm.
pub fn normalize(a: &mut [C]) -> f64 {
    let n = vec_norm(a);
    if n > 0.0 {
        for x in a.iter_mut() {
            *x /= n;
        }
    }
    n
}

/// Column-major dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<C>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> CMat {
        CMat {
            rows,
            cols,
            data: vec![C::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> CMat {
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = cr(1.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C) -> CMat {
        let mut m = CMat::zeros(rows, cols);
        for j in 0..cols {
            for i in 0..rows {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Build from column vectors (all of equal length).
    pub fn from_columns(cols: &[Vec<C>]) -> CMat {
        let rows = cols.first().map_or(0, Vec::len);
        let mut m = CMat::zeros(rows, cols.len());
        for (j, col) in cols.iter().enumerate() {
            debug_assert_eq!(col.len(), rows);
            m.column_mut(j).copy_from_slice(col);
        }
        m
    }

    /// Row-major 2×2 convenience constructor.
    pub fn mat2(a: C, b: C, c2: C, d: C) -> CMat {
        let mut m = CMat::zeros(2, 2);
        m[(0, 0)] = a;
        m[(0, 1)] = b;
        m[(1, 0)] = c2;
        m[(1, 1)] = d;
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn column(&self, j: usize) -> &[C] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn column_mut(&mut self, j: usize) -> &mut [C] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn column_vec(&self, j: usize) -> Vec<C> {
        self.column(j).to_vec()
    }

    pub fn adjoint(&self) -> CMat {
        CMat::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn mul(&self, other: &CMat) -> CMat {
        debug_assert_eq!(self.cols, other.rows);
        let mut out = CMat::zeros(self.rows, other.cols);
        for j in 0..other.cols {
            for k in 0..self.cols {
                let b = other[(k, j)];
                if b.re == 0.0 && b.im == 0.0 {
                    continue;
                }
                let a_col = self.column(k);
                let out_col = out.column_mut(j);
                for (o, a) in out_col.iter_mut().zip(a_col.iter()) {
                    *o += *a * b;
                }
            }
        }
        out
    }

    pub fn mat_vec(&self, v: &[C]) -> Vec<C> {
        debug_assert_eq!(self.cols, v.len());
        let mut out = vec![C::new(0.0, 0.0); self.rows];
        for (k, &b) in v.iter().enumerate() {
            let a_col = self.column(k);
            for (o, a) in out.iter_mut().zip(a_col.iter()) {
                *o += *a * b;
            }
        }
        out
    }

    pub fn add(&self, other: &CMat) -> CMat {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (o, x) in out.data.iter_mut().zip(other.data.iter()) {
            *o += *x;
        }
        out
    }

    pub fn sub(&self, other: &CMat) -> CMat {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (o, x) in out.data.iter_mut().zip(other.data.iter()) {
            *o -= *x;
        }
        out
    }

    pub fn scale(&self, s: C) -> CMat {
        let mut out = self.clone();
        for o in out.data.iter_mut() {
            *o *= s;
        }
        out
    }

    pub fn fro_norm(&self) -> f64 {
        let mut s = 0.0;
        for x in &self.data {
            s += x.norm_sqr();
        }
        fp::sqrt(s)
    }

    pub fn max_abs(&self) -> f64 {
        let mut m = 0.0;
        for x in &self.data {
            m = fp::max(m, x.norm());
        }
        m
    }

    /// ‖A − A†‖_F.
    pub fn hermiticity_defect(&self) -> f64 {
        self.sub(&self.adjoint()).fro_norm()
    }

    /// (A + A†)/2.
    pub fn hermitized(&self) -> CMat {
        self.add(&self.adjoint()).scale(cr(0.5))
    }

    /// ‖A†A − 1‖_F.
    pub fn unitarity_defect(&self) -> f64 {
        self.adjoint()
            .mul(self)
            .sub(&CMat::identity(self.cols))
            .fro_norm()
    }

    pub fn trace(&self) -> C {
        let mut t = C::new(0.0, 0.0);
        for i in 0..self.rows.min(self.cols) {
            t += self[(i, i)];
        }
        t
    }

    /// Determinant by LU decomposition with partial pivoting.
    pub fn det(&self) -> C {
        debug_assert!(self.is_square());
        let n = self.rows;
        let mut a = self.clone();
        let mut det = cr(1.0);
        for k in 0..n {
            let mut pivot = k;
            let mut best = a[(k, k)].norm();
            for i in k + 1..n {
                let v = a[(i, k)].norm();
                if v > best {
                    best = v;
                    pivot = i;
                }
            }
            if best == 0.0 {
                return C::new(0.0, 0.0);
            }
            if pivot != k {
                for j in 0..n {
                    let tmp = a[(k, j)];
                    a[(k, j)] = a[(pivot, j)];
                    a[(pivot, j)] = tmp;
                }
                det = -det;
            }
            let akk = a[(k, k)];
            det *= akk;
            for i in k + 1..n {
                let f = a[(i, k)] / akk;
                for j in k + 1..n {
                    let sub = f * a[(k, j)];
                    a[(i, j)] -= sub;
                }
            }
        }
        det
    }
}

impl core::ops::Index<(usize, usize)> for CMat {
    type Output = C;
    fn index(&self, (i, j): (usize, usize)) -> &C {
        &self.data[j * self.rows + i]
    }
}

impl core::ops::IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C {
        &mut self.data[j * self.rows + i]
    }
}

/// Result of a Hermitian eigendecomposition: `H = V diag(values) V†`,
/// eigenvalues ascending, eigenvectors in the matching columns of `vectors`.
#[derive(Clone, Debug)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

fn offdiag_norm(a: &CMat) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for j in 0..n {
        for i in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    fp::sqrt(s)
}

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi
/// rotations. The input is symmetrized as (H+H†)/2 before iterating, so tiny
/// Hermiticity defects are tolerated; large ones should be rejected upstream.
pub fn eigh(h: &CMat) -> Result<Eigh> {
    debug_assert!(h.is_square());
    let n = h.rows();
    if n == 0 {
        return Ok(Eigh {
            values: Vec::new(),
            vectors: CMat::zeros(0, 0),
        });
    }
    let mut a = h.hermitized();
    let mut v = CMat::identity(n);
    let scale = fp::max(a.fro_norm(), f64::MIN_POSITIVE);
    let stop = n as f64 * 1e-15 * scale;
    let mut converged = false;
    let max_sweeps = 100;
    let mut sweeps = 0;
    for _ in 0..max_sweeps {
        sweeps += 1;
        if offdiag_norm(&a) <= stop {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let r = apq.norm();
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                // An entry negligible against its diagonal neighbors cannot
                // be reduced further in floating point; zero it directly.
                if r <= 1e-17 * (fp::abs(app) + fp::abs(aqq)) || r <= 1e-18 * scale {
                    a[(p, q)] = C::new(0.0, 0.0);
                    a[(q, p)] = C::new(0.0, 0.0);
                    continue;
                }
                let theta = (aqq - app) / (2.0 * r);
                // Small-magnitude root of t² − 2θt − 1 = 0, in the
                // cancellation-free reciprocal form.
                let t = if fp::abs(theta) > 1e100 {
                    -0.5 / theta
                } else if theta >= 0.0 {
                    -1.0 / (theta + fp::sqrt(theta * theta + 1.0))
                } else {
                    1.0 / (-theta + fp::sqrt(theta * theta + 1.0))
                };
                let cth = 1.0 / fp::sqrt(t * t + 1.0);
                let sigma = t * cth;
                let phase = apq / cr(r);
                // rotation J: J_pp = c, J_qp = s, J_pq = −conj(s), J_qq = c
                let s = phase.conj() * sigma;
                // A ← A·J (columns p, q)
                for i in 0..n {
                    let aip = a[(i, p)];
                    let aiq = a[(i, q)];
                    a[(i, p)] = aip * cth + aiq * s;
                    a[(i, q)] = aip * (-s.conj()) + aiq * cth;
                }
                // A ← J†·A (rows p, q)
                for j in 0..n {
                    let apj = a[(p, j)];
                    let aqj = a[(q, j)];
                    a[(p, j)] = apj * cth + aqj * s.conj();
                    a[(q, j)] = apj * (-s) + aqj * cth;
                }
                a[(p, q)] = C::new(0.0, 0.0);
                a[(q, p)] = C::new(0.0, 0.0);
                a[(p, p)] = cr(a[(p, p)].re);
                a[(q, q)] = cr(a[(q, q)].re);
                // V ← V·J
                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = vip * cth + viq * s;
                    v[(i, q)] = vip * (-s.conj()) + viq * cth;
                }
            }
        }
    }
    if !converged && offdiag_norm(&a) > stop {
        return Err(Error::EigenNonConvergence {
            sweeps,
            off_norm: offdiag_norm(&a),
        });
    }
    // Sort ascending (stable) and permute eigenvector columns to match.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a[(i, i)]
            .re
            .partial_cmp(&a[(j, j)].re)
            .unwrap_or(core::cmp::Ordering::Equal)
    });
    let values: Vec<f64> = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut vectors = CMat::zeros(n, n);
    for (jnew, &jold) in order.iter().enumerate() {
        let src = v.column(jold).to_vec();
        vectors.column_mut(jnew).copy_from_slice(&src);
    }
    Ok(Eigh { values, vectors })
}

/// `exp(i·t·H)` for Hermitian `H`, via eigendecomposition. Exactly unitary up
/// to the eigensolver's accuracy.
pub fn expi_hermitian(h: &CMat, t: f64) -> Result<CMat> {
    let eig = eigh(h)?;
    let n = h.rows();
    let mut out = CMat::zeros(n, n);
    for k in 0..n {
        let phase = C::from_polar(1.0, t * eig.values[k]);
        let col = eig.vectors.column(k);
        for j in 0..n {
            let w = phase * col[j].conj();
            let out_col = out.column_mut(j);
            for (o, vi) in out_col.iter_mut().zip(col.iter()) {
                *o += *vi * w;
            }
        }
    }
    Ok(out)
}

/// Unitary polar factor `U = A (A†A)^{−1/2}`, the closest unitary to `A`.
/// Also returns the smallest and largest singular values of `A` for
/// transport-breakdown diagnostics. Fails on (numerically) rank-deficient
/// input.
pub fn polar_unitary(a: &CMat) -> Result<(CMat, f64, f64)> {
    debug_assert!(a.is_square());
    let h2 = a.adjoint().mul(a);
    let eig = eigh(&h2)?;
    let n = a.rows();
    let lam_max = fp::max(eig.values[n - 1], 0.0);
    let lam_min = fp::max(eig.values[0], 0.0);
    let sigma_max = fp::sqrt(lam_max);
    let sigma_min = fp::sqrt(lam_min);
    if sigma_min <= 1e-13 * fp::max(sigma_max, f64::MIN_POSITIVE) {
        return Err(Error::Domain {
            detail: alloc::format!(
                "polar factor of a rank-deficient matrix (σ_min = {sigma_min:.3e})"
            ),
        });
    }
    // (A†A)^{−1/2} = W diag(λ^{−1/2}) W†
    let mut inv_sqrt = CMat::zeros(n, n);
    for k in 0..n {
        let w = eig.vectors.column(k);
        let f = 1.0 / fp::sqrt(eig.values[k]);
        for j in 0..n {
            let wj = cr(f) * w[j].conj();
            let col = inv_sqrt.column_mut(j);
            for (o, wi) in col.iter_mut().zip(w.iter()) {
                *o += *wi * wj;
            }
        }
    }
    Ok((a.mul(&inv_sqrt), sigma_min, sigma_max))
}

/// Eigenphases of a unitary matrix, sorted ascending in `(−π, π]`.
///
/// Uses the fact that a unitary is normal: its Hermitian part `A = (U+U†)/2`
/// and anti-Hermitian part `B = (U−U†)/2i` commute, so eigenvectors of `A`
/// (refined within degenerate clusters by diagonalizing the projected `B`)
/// are eigenvectors of `U`, and the phase is `atan2(⟨B⟩, ⟨A⟩)`.
pub fn unitary_eigenphases(u: &CMat) -> Result<Vec<f64>> {
    debug_assert!(u.is_square());
    let n = u.rows();
    let ud = u.adjoint();
    let a = u.add(&ud).scale(cr(0.5));
    let b = u.sub(&ud).scale(c(0.0, -0.5));
    let ea = eigh(&a)?;
    let mut phases: Vec<f64> = Vec::with_capacity(n);
    let cluster_tol = 1e-7;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && ea.values[end] - ea.values[end - 1] < cluster_tol {
            end += 1;
        }
        let size = end - start;
        if size == 1 {
            let v = ea.vectors.column(start);
            let bv = b.mat_vec(v);
            let av = a.mat_vec(v);
            phases.push(fp::atan2(dot(v, &bv).re, dot(v, &av).re));
        } else {
            // Diagonalize B projected onto the degenerate cluster of A.
            let cols: Vec<Vec<C>> = (start..end).map(|k| ea.vectors.column_vec(k)).collect();
            let mut bp = CMat::zeros(size, size);
            for (jj, wj) in cols.iter().enumerate() {
                let bwj = b.mat_vec(wj);
                for (ii, wi) in cols.iter().enumerate() {
                    bp[(ii, jj)] = dot(wi, &bwj);
                }
            }
            let eb = eigh(&bp)?;
            for l in 0..size {
                let mut v = vec![C::new(0.0, 0.0); n];
                for (jj, wj) in cols.iter().enumerate() {
                    let coeff = eb.vectors[(jj, l)];
                    for (vi, wji) in v.iter_mut().zip(wj.iter()) {
                        *vi += *wji * coeff;
                    }
                }
                let bv = b.mat_vec(&v);
                let av = a.mat_vec(&v);
                phases.push(fp::atan2(dot(&v, &bv).re, dot(&v, &av).re));
            }
        }
        start = end;
    }
    phases.sort_by(|x, y| x.partial_cmp(y).unwrap_or(core::cmp::Ordering::Equal));
    Ok(phases)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn random_hermitian(n: usize, rng: &mut SplitMix64) -> CMat {
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = cr(rng.normal());
            for j in i + 1..n {
                let z = c(rng.normal(), rng.normal());
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        }
        m
    }

    fn eig_residual(h: &CMat, e: &Eigh) -> f64 {
        let n = h.rows();
        let mut worst: f64 = 0.0;
        for k in 0..n {
            let v = e.vectors.column(k);
            let hv = h.mat_vec(v);
            let mut r: f64 = 0.0;
            for i in 0..n {
                r += (hv[i] - v[i] * cr(e.values[k])).norm_sqr();
            }
            worst = worst.max(fp::sqrt(r));
        }
        worst
    }

    #[test]
    fn eigh_diagonalizes_pauli_x() {
        let h = CMat::mat2(cr(0.0), cr(1.0), cr(1.0), cr(0.0));
        let e = eigh(&h).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-14);
        assert!((e.values[1] - 1.0).abs() < 1e-14);
        assert!(eig_residual(&h, &e) < 1e-14);
    }

    #[test]
    fn eigh_handles_random_hermitian_matrices() {
        let mut rng = SplitMix64::new(2024);
        for trial in 0..60 {
            let n = 2 + (rng.next_u64() % 11) as usize;
            let mut h = random_hermitian(n, &mut rng);
            // exercise extreme scales and graded (near-diagonal) matrices
            match trial % 4 {
                1 => h = h.scale(cr(1e6)),
                2 => h = h.scale(cr(1e-8)),
                3 => {
                    let mut d = CMat::zeros(n, n);
                    for i in 0..n {
                        d[(i, i)] = cr(rng.normal());
                    }
                    h = d.add(&h.scale(cr(1e-9 / h.fro_norm())));
                }
                _ => {}
            }
            let e = eigh(&h).unwrap();
            let scale = h.fro_norm();
            assert!(
                eig_residual(&h, &e) < 1e-12 * scale,
                "residual too large at n = {n}, trial {trial}"
            );
            // eigenvalues ascending
            for k in 1..n {
                assert!(e.values[k] >= e.values[k - 1]);
            }
            // columns orthonormal
            assert!(e.vectors.unitarity_defect() < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn expi_of_pauli_z_is_diagonal_phases() {
        let h = CMat::mat2(cr(1.0), cr(0.0), cr(0.0), cr(-1.0));
        let u = expi_hermitian(&h, -0.7).unwrap();
        assert!((u[(0, 0)] - C::from_polar(1.0, -0.7)).norm() < 1e-14);
        assert!((u[(1, 1)] - C::from_polar(1.0, 0.7)).norm() < 1e-14);
        assert!(u[(0, 1)].norm() < 1e-14);
        assert!(u.unitarity_defect() < 1e-13);
    }

    #[test]
    fn polar_factor_recovers_unitary_from_stretched_input() {
        let mut rng = SplitMix64::new(99);
        let h = random_hermitian(4, &mut rng);
        let u0 = expi_hermitian(&h, 1.0).unwrap();
        // stretch: multiply by a positive diagonal
        let mut d = CMat::zeros(4, 4);
        for i in 0..4 {
            d[(i, i)] = cr(0.5 + rng.uniform());
        }
        let a = u0.mul(&d);
        let (u, smin, smax) = polar_unitary(&a).unwrap();
        assert!(u.unitarity_defect() < 1e-12);
        assert!(u.sub(&u0).fro_norm() < 1e-12);
        assert!(smin > 0.4 && smax < 1.6);
    }

    #[test]
    fn polar_factor_rejects_rank_deficient_input() {
        let a = CMat::mat2(cr(1.0), cr(0.0), cr(0.0), cr(0.0));
        assert!(polar_unitary(&a).is_err());
    }

    #[test]
    fn unitary_eigenphases_match_construction() {
        let mut rng = SplitMix64::new(5);
        let h = random_hermitian(3, &mut rng);
        let e = eigh(&h).unwrap();
        let u = expi_hermitian(&h, 1.0).unwrap();
        let mut expected: Vec<f64> = e.values.iter().map(|&x| fp::principal(x)).collect();
        expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let got = unitary_eigenphases(&u).unwrap();
        for (g, x) in got.iter().zip(expected.iter()) {
            assert!(fp::angle_distance(*g, *x) < 1e-10, "{g} vs {x}");
        }
    }

    #[test]
    fn unitary_eigenphases_resolve_conjugate_pairs() {
        // diag(e^{iφ}, e^{−iφ}) conjugated by a random unitary: the Hermitian
        // part alone is doubly degenerate, the anti-Hermitian part resolves it.
        let phi = 1.1;
        let d = CMat::mat2(
            C::from_polar(1.0, phi),
            cr(0.0),
            cr(0.0),
            C::from_polar(1.0, -phi),
        );
        let mut rng = SplitMix64::new(17);
        let h = random_hermitian(2, &mut rng);
        let w = expi_hermitian(&h, 1.0).unwrap();
        let u = w.mul(&d).mul(&w.adjoint());
        let phases = unitary_eigenphases(&u).unwrap();
        assert!((phases[0] + phi).abs() < 1e-10);
        assert!((phases[1] - phi).abs() < 1e-10);
    }

    #[test]
    fn determinant_of_known_matrices() {
        let a = CMat::mat2(cr(2.0), cr(1.0), cr(1.0), cr(2.0));
        assert!((a.det() - cr(3.0)).norm() < 1e-14);
        let u = expi_hermitian(&a, 0.5).unwrap();
        // det of a unitary has unit modulus
        assert!((u.det().norm() - 1.0).abs() < 1e-13);
    }
}
