//! Parameterized Hermitian families and their gauged eigensystems.
//!
//! Everything downstream consumes the output of [`eigendecompose`]: energies
//! sorted ascending, orthonormal eigenvectors carried in columns, and a
//! deterministic gauge (largest-modulus component rotated real-positive) so
//! identical inputs reproduce bit-identical outputs.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::cmat::{c, cr, normalize, CMat, C};
use crate::error::{Error, Result};
use crate::fp;
use crate::rng::SplitMix64;
use crate::vec3::{Mat3, Vec3};

/// A point in parameter space (dimension fixed per family, `d = 3` for all
/// built-in families).
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterPoint {
    pub coords: Vec<f64>,
}

impl ParameterPoint {
    pub fn new(coords: Vec<f64>) -> Self {
        ParameterPoint { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn as_vec3(&self) -> Vec3 {
        Vec3::from_slice(&self.coords)
    }
}

impl From<Vec3> for ParameterPoint {
    fn from(v: Vec3) -> Self {
        ParameterPoint {
            coords: vec![v.x, v.y, v.z],
        }
    }
}

/// An ordered polygonal path in parameter space. For closed loops the first
/// point is repeated (exactly) as the last.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterLoop {
    pub points: Vec<ParameterPoint>,
    pub closed: bool,
}

impl ParameterLoop {
    pub fn new(points: Vec<ParameterPoint>, closed: bool) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::invalid("a parameter loop needs at least 3 points"));
        }
        if closed && points.first() != points.last() {
            return Err(Error::invalid(
                "closed loop must repeat its first point as the last",
            ));
        }
        Ok(ParameterLoop { points, closed })
    }

    /// Sample a parametric curve `r(s)`, `s ∈ [0, 1]`, at `n + 1` points with
    /// `r(1)` stored as an exact copy of `r(0)` (closed-loop convention).
    pub fn from_curve(curve: impl Fn(f64) -> ParameterPoint, n: usize) -> Result<Self> {
        let mut points: Vec<ParameterPoint> = (0..n)
            .map(|k| curve(k as f64 / n as f64))
            .collect();
        points.push(points[0].clone());
        ParameterLoop::new(points, true)
    }
}

/// A closed oriented triangulated surface in 3D parameter space.
#[derive(Debug, Clone)]
pub struct ParameterSurface {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[usize; 3]>,
}

impl ParameterSurface {
    /// Validate watertightness: every directed edge appears exactly once
    /// (equivalently, each undirected edge is shared by exactly two
    /// triangles with opposite directions — consistent orientation).
    pub fn validate(&self) -> Result<()> {
        let mut directed: Vec<(usize, usize)> = Vec::with_capacity(self.triangles.len() * 3);
        for t in &self.triangles {
            for e in 0..3 {
                let a = t[e];
                let b = t[(e + 1) % 3];
                if a >= self.vertices.len() || b >= self.vertices.len() {
                    return Err(Error::NotWatertight {
                        detail: String::from("triangle index out of range"),
                    });
                }
                directed.push((a, b));
            }
        }
        directed.sort_unstable();
        for w in directed.windows(2) {
            if w[0] == w[1] {
                return Err(Error::NotWatertight {
                    detail: alloc::format!("directed edge {:?} repeated", w[0]),
                });
            }
        }
        for &(a, b) in &directed {
            if directed.binary_search(&(b, a)).is_err() {
                return Err(Error::NotWatertight {
                    detail: alloc::format!("edge ({a}, {b}) has no partner"),
                });
            }
        }
        Ok(())
    }

    /// Icosphere of given `radius` about `center`: an icosahedron subdivided
    /// `level` times, vertices projected onto the sphere, triangles oriented
    /// outward.
    pub fn icosphere(center: Vec3, radius: f64, level: usize) -> ParameterSurface {
        let phi = (1.0 + fp::sqrt(5.0)) / 2.0;
        let mut vertices: Vec<Vec3> = [
            (-1.0, phi, 0.0),
            (1.0, phi, 0.0),
            (-1.0, -phi, 0.0),
            (1.0, -phi, 0.0),
            (0.0, -1.0, phi),
            (0.0, 1.0, phi),
            (0.0, -1.0, -phi),
            (0.0, 1.0, -phi),
            (phi, 0.0, -1.0),
            (phi, 0.0, 1.0),
            (-phi, 0.0, -1.0),
            (-phi, 0.0, 1.0),
        ]
        .iter()
        .map(|&(x, y, z)| Vec3::new(x, y, z).normalized())
        .collect();
        let mut triangles: Vec<[usize; 3]> = vec![
            [0, 11, 5],
            [0, 5, 1],
            [0, 1, 7],
            [0, 7, 10],
            [0, 10, 11],
            [1, 5, 9],
            [5, 11, 4],
            [11, 10, 2],
            [10, 7, 6],
            [7, 1, 8],
            [3, 9, 4],
            [3, 4, 2],
            [3, 2, 6],
            [3, 6, 8],
            [3, 8, 9],
            [4, 9, 5],
            [2, 4, 11],
            [6, 2, 10],
            [8, 6, 7],
            [9, 8, 1],
        ];
        for _ in 0..level {
            let mut midpoint: Vec<((usize, usize), usize)> = Vec::new();
            let mut next: Vec<[usize; 3]> = Vec::with_capacity(triangles.len() * 4);
            for t in &triangles {
                let mut mid = [0usize; 3];
                for e in 0..3 {
                    let a = t[e].min(t[(e + 1) % 3]);
                    let b = t[e].max(t[(e + 1) % 3]);
                    let key = (a, b);
                    let idx = match midpoint.iter().find(|(k, _)| *k == key) {
                        Some((_, i)) => *i,
                        None => {
                            let m = ((vertices[a] + vertices[b]) * 0.5).normalized();
                            vertices.push(m);
                            let i = vertices.len() - 1;
                            midpoint.push((key, i));
                            i
                        }
                    };
                    mid[e] = idx;
                }
                next.push([t[0], mid[0], mid[2]]);
                next.push([t[1], mid[1], mid[0]]);
                next.push([t[2], mid[2], mid[1]]);
                next.push([mid[0], mid[1], mid[2]]);
            }
            triangles = next;
        }
        let vertices = vertices
            .into_iter()
            .map(|v| center + v * radius)
            .collect();
        ParameterSurface {
            vertices,
            triangles,
        }
    }

    /// Subdivide every triangle into four at its edge midpoints (flat
    /// quadrisection — the polyhedron is unchanged, only the quadrature
    /// mesh refines).
    pub fn quadrisected(&self) -> ParameterSurface {
        let mut vertices = self.vertices.clone();
        let mut midpoint: Vec<((usize, usize), usize)> = Vec::new();
        let mut triangles: Vec<[usize; 3]> = Vec::with_capacity(self.triangles.len() * 4);
        for t in &self.triangles {
            let mut mid = [0usize; 3];
            for e in 0..3 {
                let a = t[e].min(t[(e + 1) % 3]);
                let b = t[e].max(t[(e + 1) % 3]);
                let key = (a, b);
                let idx = match midpoint.iter().find(|(k, _)| *k == key) {
                    Some((_, i)) => *i,
                    None => {
                        let m = (vertices[a] + vertices[b]) * 0.5;
                        vertices.push(m);
                        let i = vertices.len() - 1;
                        midpoint.push((key, i));
                        i
                    }
                };
                mid[e] = idx;
            }
            triangles.push([t[0], mid[0], mid[2]]);
            triangles.push([t[1], mid[1], mid[0]]);
            triangles.push([t[2], mid[2], mid[1]]);
            triangles.push([mid[0], mid[1], mid[2]]);
        }
        ParameterSurface {
            vertices,
            triangles,
        }
    }
}

/// A rule `R ↦ H(R)` mapping parameter points to Hermitian matrices.
pub trait HamiltonianFamily: Sync {
    /// Hilbert-space dimension N.
    fn dim(&self) -> usize;
    /// Parameter-space dimension d.
    fn param_dim(&self) -> usize;
    fn name(&self) -> &str;
    fn eval(&self, r: &[f64]) -> CMat;
}

/// Pauli matrices (σx, σy, σz).
pub fn pauli() -> (CMat, CMat, CMat) {
    (
        CMat::mat2(cr(0.0), cr(1.0), cr(1.0), cr(0.0)),
        CMat::mat2(cr(0.0), c(0.0, -1.0), c(0.0, 1.0), cr(0.0)),
        CMat::mat2(cr(1.0), cr(0.0), cr(0.0), cr(-1.0)),
    )
}

/// Spin matrices (Sx, Sy, Sz) for spin `j = two_j/2`, in the basis
/// `m = j, j−1, …, −j` (ħ = 1).
pub fn spin_matrices(two_j: u32) -> (CMat, CMat, CMat) {
    let dim = (two_j + 1) as usize;
    let j = two_j as f64 / 2.0;
    let m_of = |k: usize| j - k as f64;
    let mut sz = CMat::zeros(dim, dim);
    let mut sp = CMat::zeros(dim, dim); // S₊
    for k in 0..dim {
        sz[(k, k)] = cr(m_of(k));
        if k + 1 < dim {
            let m = m_of(k + 1);
            sp[(k, k + 1)] = cr(fp::sqrt(j * (j + 1.0) - m * (m + 1.0)));
        }
    }
    let sm = sp.adjoint();
    let sx = sp.add(&sm).scale(cr(0.5));
    let sy = sp.sub(&sm).scale(c(0.0, -0.5));
    (sx, sy, sz)
}

/// Zeeman spin-1/2 family `H = (μ/2) R·σ`.
#[derive(Debug, Clone)]
pub struct Zeeman {
    pub mu: f64,
}

impl HamiltonianFamily for Zeeman {
    fn dim(&self) -> usize {
        2
    }
    fn param_dim(&self) -> usize {
        3
    }
    fn name(&self) -> &str {
        "zeeman"
    }
    fn eval(&self, r: &[f64]) -> CMat {
        let f = Vec3::from_slice(r) * (self.mu / 2.0);
        two_state_field(f)
    }
}

/// `H = F·σ` for a real field 3-vector `F`.
pub fn two_state_field(f: Vec3) -> CMat {
    CMat::mat2(cr(f.z), c(f.x, -f.y), c(f.x, f.y), cr(-f.z))
}

/// Two-state family with a linear field map, `H = (M R)·σ`. The sign of
/// `det M` controls the chirality of the degeneracy at `R = 0`.
#[derive(Debug, Clone)]
pub struct TwoStateLinear {
    pub m: Mat3,
}

impl HamiltonianFamily for TwoStateLinear {
    fn dim(&self) -> usize {
        2
    }
    fn param_dim(&self) -> usize {
        3
    }
    fn name(&self) -> &str {
        "two-state-linear"
    }
    fn eval(&self, r: &[f64]) -> CMat {
        two_state_field(self.m.mat_vec(Vec3::from_slice(r)))
    }
}

/// Quadrupole family `H = ω_Q (S·n̂)²` for spin 3/2, with `n̂ = R/|R|`.
/// Spectrum `{ω_Q/4 (twice), 9ω_Q/4 (twice)}` independent of `n̂`.
#[derive(Debug, Clone)]
pub struct Quadrupole {
    pub omega_q: f64,
}

impl HamiltonianFamily for Quadrupole {
    fn dim(&self) -> usize {
        4
    }
    fn param_dim(&self) -> usize {
        3
    }
    fn name(&self) -> &str {
        "quadrupole"
    }
    fn eval(&self, r: &[f64]) -> CMat {
        let n = Vec3::from_slice(r).normalized();
        let (sx, sy, sz) = spin_matrices(3);
        let sn = sx.scale(cr(n.x)).add(&sy.scale(cr(n.y))).add(&sz.scale(cr(n.z)));
        sn.mul(&sn).scale(cr(self.omega_q))
    }
}

/// Static rotating-frame NMR field `H = ½ B_rot·σ` with
/// `B_rot = (ω₁, 0, ω₀ − ω)` — the Zeeman form in the frame rotating at the
/// drive frequency.
#[derive(Debug, Clone)]
pub struct RotatingFrameNmr;

impl HamiltonianFamily for RotatingFrameNmr {
    fn dim(&self) -> usize {
        2
    }
    fn param_dim(&self) -> usize {
        3
    }
    fn name(&self) -> &str {
        "rotating-frame-nmr"
    }
    fn eval(&self, r: &[f64]) -> CMat {
        two_state_field(Vec3::from_slice(r) * 0.5)
    }
}

/// Seeded N-level family linear in the parameters,
/// `H(R) = H₀ + x H₁ + y H₂ + z H₃`, with independent random Hermitian
/// coefficient matrices. Deterministic in `(dim, seed)`.
#[derive(Debug, Clone)]
pub struct RandomLinearFamily {
    dim: usize,
    terms: [CMat; 4],
}

impl RandomLinearFamily {
    pub fn new(dim: usize, seed: u64) -> Self {
        let mut rng = SplitMix64::new(seed);
        let mut mk = || {
            let mut m = CMat::zeros(dim, dim);
            for i in 0..dim {
                m[(i, i)] = cr(rng.normal());
                for j in i + 1..dim {
                    let z = c(rng.normal(), rng.normal());
                    m[(i, j)] = z;
                    m[(j, i)] = z.conj();
                }
            }
            m
        };
        let terms = [mk(), mk(), mk(), mk()];
        RandomLinearFamily { dim, terms }
    }
}

impl HamiltonianFamily for RandomLinearFamily {
    fn dim(&self) -> usize {
        self.dim
    }
    fn param_dim(&self) -> usize {
        3
    }
    fn name(&self) -> &str {
        "random-linear"
    }
    fn eval(&self, r: &[f64]) -> CMat {
        let mut h = self.terms[0].clone();
        for (k, &x) in r.iter().enumerate().take(3) {
            h = h.add(&self.terms[k + 1].scale(cr(x)));
        }
        h
    }
}

/// Real-symmetric planar family `H(X, Y) = X σz + Y σx` (real matrices, a
/// conical degeneracy at the origin). Loop phases are quantized to {0, π} by
/// time-reversal symmetry.
#[derive(Debug, Clone)]
pub struct RealSymmetricPlanar;

impl HamiltonianFamily for RealSymmetricPlanar {
    fn dim(&self) -> usize {
        2
    }
    fn param_dim(&self) -> usize {
        2
    }
    fn name(&self) -> &str {
        "real-symmetric-planar"
    }
    fn eval(&self, r: &[f64]) -> CMat {
        CMat::mat2(cr(r[0]), cr(r[1]), cr(r[1]), cr(-r[0]))
    }
}

/// User-defined family given as a coefficient table: a sum of dense complex
/// matrices weighted by monomials in the parameters,
/// `H(R) = Σ_t (Π_α R_α^{e_{t,α}}) M_t`. The sum must be Hermitian at every
/// evaluation (each `M_t` is not required to be).
#[derive(Debug, Clone)]
pub struct CoefficientTable {
    pub dim: usize,
    pub param_dim: usize,
    pub label: String,
    /// `(exponents per parameter, coefficient matrix)`
    pub terms: Vec<(Vec<u32>, CMat)>,
}

impl HamiltonianFamily for CoefficientTable {
    fn dim(&self) -> usize {
        self.dim
    }
    fn param_dim(&self) -> usize {
        self.param_dim
    }
    fn name(&self) -> &str {
        &self.label
    }
    fn eval(&self, r: &[f64]) -> CMat {
        let mut h = CMat::zeros(self.dim, self.dim);
        for (exps, m) in &self.terms {
            let mut w = 1.0;
            for (alpha, &e) in exps.iter().enumerate() {
                for _ in 0..e {
                    w *= r[alpha];
                }
            }
            h = h.add(&m.scale(cr(w)));
        }
        h
    }
}

/// Ad-hoc family from a closure (test and scenario plumbing).
pub struct FnFamily<F: Fn(&[f64]) -> CMat + Sync> {
    pub dim: usize,
    pub param_dim: usize,
    pub label: &'static str,
    pub f: F,
}

impl<F: Fn(&[f64]) -> CMat + Sync> HamiltonianFamily for FnFamily<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn param_dim(&self) -> usize {
        self.param_dim
    }
    fn name(&self) -> &str {
        self.label
    }
    fn eval(&self, r: &[f64]) -> CMat {
        (self.f)(r)
    }
}

/// Boxed family for dynamic catalogs.
pub type BoxedFamily = Box<dyn HamiltonianFamily + Send>;

/// Gauge-fixing rule tag carried by eigensystems.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GaugeTag {
    /// Largest-modulus component rotated real-positive (ties: lowest index).
    LargestComponentRealPositive,
}

/// Eigendecomposition of one family evaluation with a deterministic gauge.
#[derive(Debug, Clone)]
pub struct GaugedEigensystem {
    /// Energies ascending.
    pub energies: Vec<f64>,
    /// Eigenvectors in columns, matching `energies`.
    pub states: CMat,
    pub gauge: GaugeTag,
    /// Adjacent-level differences, `gaps[k] = E_{k+1} − E_k`.
    pub gaps: Vec<f64>,
}

impl GaugedEigensystem {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn state(&self, n: usize) -> &[C] {
        self.states.column(n)
    }

    /// Full spectral range `E_max − E_min`.
    pub fn spectral_range(&self) -> f64 {
        if self.energies.is_empty() {
            0.0
        } else {
            self.energies[self.energies.len() - 1] - self.energies[0]
        }
    }

    /// Isolation gap of level `n`: distance to its nearest neighbor level
    /// (one-sided at the band edges).
    pub fn isolation(&self, n: usize) -> f64 {
        let last = self.energies.len() - 1;
        if last == 0 {
            return 0.0;
        }
        if n == 0 {
            self.gaps[0]
        } else if n == last {
            self.gaps[last - 1]
        } else {
            fp::min(self.gaps[n - 1], self.gaps[n])
        }
    }

    /// Whether level `n` is (numerically) degenerate: isolation below
    /// `1e-9 ×` the spectral range.
    pub fn is_degenerate(&self, n: usize) -> bool {
        self.isolation(n) < 1e-9 * fp::max(self.spectral_range(), f64::MIN_POSITIVE)
    }

    /// Refuse degenerate levels with a diagnostic; used by abelian ops.
    pub fn require_isolated(&self, n: usize) -> Result<()> {
        if self.is_degenerate(n) {
            return Err(Error::Degenerate {
                level: n,
                gap: self.isolation(n),
                tolerance: 1e-9,
            });
        }
        Ok(())
    }
}

/// Rotate a state by a unit phase so its largest-modulus entry (lowest index
/// on ties) is real and positive. Norm-preserving and idempotent.
pub fn fix_gauge(state: &mut [C]) -> Result<()> {
    let mut best = 0usize;
    let mut best_mod = 0.0f64;
    for (i, x) in state.iter().enumerate() {
        let m = x.norm();
        if m > best_mod {
            best_mod = m;
            best = i;
        }
    }
    if best_mod == 0.0 {
        return Err(Error::domain("cannot gauge-fix the zero vector"));
    }
    let phase = state[best] / cr(best_mod);
    let rot = phase.conj();
    for x in state.iter_mut() {
        *x *= rot;
    }
    // pin the pivot exactly real (kills last-ulp imaginary residue)
    state[best] = cr(state[best].re);
    Ok(())
}

/// Largest |entry| of a matrix (∞-like norm used for Hermiticity tests).
fn max_entry(h: &CMat) -> f64 {
    h.max_abs()
}

/// Eigendecompose `family` at `r` with the deterministic gauge.
///
/// Contracts: residual ‖Hv − Ev‖ ≤ 1e-10 ‖H‖, orthonormality to 1e-12,
/// ascending energies with ties broken by lexicographic comparison of the
/// gauge-fixed eigenvectors, bitwise-deterministic output.
pub fn eigendecompose(family: &dyn HamiltonianFamily, r: &[f64]) -> Result<GaugedEigensystem> {
    if r.len() != family.param_dim() {
        return Err(Error::invalid(alloc::format!(
            "family '{}' expects {} parameters, got {}",
            family.name(),
            family.param_dim(),
            r.len()
        )));
    }
    let h = family.eval(r);
    for x in (0..h.rows()).flat_map(|i| (0..h.cols()).map(move |j| (i, j))) {
        let v = h[(x.0, x.1)];
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(Error::domain("Hamiltonian evaluation is not finite"));
        }
    }
    let scale = fp::max(max_entry(&h), f64::MIN_POSITIVE);
    let defect = h.sub(&h.adjoint()).max_abs();
    if defect > 1e-12 * scale {
        return Err(Error::NonHermitian {
            deviation: defect,
            tolerance: 1e-12 * scale,
        });
    }
    let eig = crate::cmat::eigh(&h)?;
    let n = family.dim();
    let mut states = eig.vectors;
    for k in 0..n {
        fix_gauge(states.column_mut(k))?;
    }
    // Tie-break exactly-degenerate neighbors by lexicographic comparison of
    // the gauge-fixed eigenvectors, for cross-run reproducibility.
    let mut order: Vec<usize> = (0..n).collect();
    let values = eig.values;
    order.sort_by(|&a, &b| {
        match values[a].partial_cmp(&values[b]) {
            Some(core::cmp::Ordering::Equal) | None => {}
            Some(o) => return o,
        }
        let ca = states.column(a);
        let cb = states.column(b);
        for (x, y) in ca.iter().zip(cb.iter()) {
            match x.re.partial_cmp(&y.re) {
                Some(core::cmp::Ordering::Equal) | None => {}
                Some(o) => return o,
            }
            match x.im.partial_cmp(&y.im) {
                Some(core::cmp::Ordering::Equal) | None => {}
                Some(o) => return o,
            }
        }
        core::cmp::Ordering::Equal
    });
    let energies: Vec<f64> = order.iter().map(|&k| values[k]).collect();
    let mut sorted_states = CMat::zeros(n, n);
    for (jnew, &jold) in order.iter().enumerate() {
        let col = states.column(jold).to_vec();
        sorted_states.column_mut(jnew).copy_from_slice(&col);
    }
    let gaps: Vec<f64> = energies.windows(2).map(|w| w[1] - w[0]).collect();
    Ok(GaugedEigensystem {
        energies,
        states: sorted_states,
        gauge: GaugeTag::LargestComponentRealPositive,
        gaps,
    })
}

/// Isolation gap of level `n` at `r`: `min(E_{n+1}−E_n, E_n−E_{n−1})` with
/// one-sided values at the band edges.
pub fn gap(family: &dyn HamiltonianFamily, r: &[f64], n: usize) -> Result<f64> {
    let eig = eigendecompose(family, r)?;
    if n >= eig.dim() {
        return Err(Error::invalid("level index out of range"));
    }
    Ok(eig.isolation(n))
}

/// Normalized copy of a state (helper for tests and callers).
pub fn normalized(state: &[C]) -> Vec<C> {
    let mut v = state.to_vec();
    normalize(&mut v);
    v
}
