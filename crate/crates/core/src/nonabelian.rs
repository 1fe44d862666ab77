//! Non-abelian holonomy of degenerate multiplets.
//!
//! A group of `r` mutually degenerate levels carries a matrix-valued
//! connection 𝒜 and a holonomy unitary `U(C)` obtained as the ordered
//! product of frame-overlap matrices around a loop.  For `r = 1`
//! everything reduces to the abelian machinery in [`crate::abelian`]:
//! `U = e^{iγ}` with `γ` the discrete geometric phase.
//!
//! Conventions
//! -----------
//! * Frames are gauge-fixed by column-pivoted Gram–Schmidt on the
//!   spectral projector: the pivot columns of `P = Σ|j⟩⟨j|` with the
//!   largest norms are orthonormalized in order and each resulting
//!   column is rotated so its largest-modulus component is real and
//!   positive.  The construction depends on the eigenspace only through
//!   the (gauge-invariant) projector, so it is insensitive to how the
//!   eigensolver mixes degenerate columns, and for `r = 1` it coincides
//!   exactly with the single-state gauge rule of
//!   [`crate::spectral::fix_gauge`].
//! * Finite-difference stencils reuse the pivot/phase choices of the
//!   centre point at every stencil neighbour so that the frame field is
//!   smooth across the stencil (the matrix version of the common-pivot
//!   gauge used by [`crate::abelian::berry_connection_fd`]).
//! * `A^{(α)}_{jk} = −i⟨k(R)|∂_α j(R)⟩`, Hermitized as `(A + A†)/2` with
//!   the anti-Hermitian residual reported.
//! * The curvature 𝒱 is pinned by the infinitesimal-loop identity
//!   `U(∂S) ≈ 1 + i 𝒱·dS` for a counter-clockwise square of vector area
//!   `dS`.  With the index convention above this fixes
//!   `𝒱_γ = conj(∂_β𝒜_α − ∂_α𝒜_β + i[𝒜_α, 𝒜_β])` for cyclic `(γ, α, β)`;
//!   note the global sign flip relative to the bare curl, matching the
//!   `r = 1` reduction `U = e^{iγ}`, `γ(small loop) = −Ω·dS`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::abelian;
use crate::cmat::{self, c, cr, dot, CMat, C};
use crate::error::{Error, Result};
use crate::fp;
use crate::spectral::{
    eigendecompose, GaugedEigensystem, HamiltonianFamily, ParameterLoop, ParameterPoint,
};

/// Orthonormal frame spanning a degenerate level group at one point.
#[derive(Debug, Clone)]
pub struct MultipletFrame {
    /// N×r matrix whose columns span the selected eigenspace.
    pub frame: CMat,
    /// Level indices of the group, ascending.
    pub levels: Vec<usize>,
    /// Energies of the selected levels.
    pub energies: Vec<f64>,
    /// Projector-column pivots chosen by the gauge-fixing rule.
    pub pivots: Vec<usize>,
    /// Component indices used to pin each column's phase.
    pub phase_pivots: Vec<usize>,
}

impl MultipletFrame {
    /// Multiplet rank r.
    pub fn rank(&self) -> usize {
        self.levels.len()
    }

    /// Spectral projector `P = Σ_j |j⟩⟨j|` of the group (gauge invariant).
    pub fn projector(&self) -> CMat {
        let n = self.frame.rows();
        let r = self.frame.cols();
        CMat::from_fn(n, n, |i, j| {
            let mut s = cr(0.0);
            for t in 0..r {
                s += self.frame.column(t)[i] * self.frame.column(t)[j].conj();
            }
            s
        })
    }
}

/// Matrix-valued connection of a multiplet at one point.
#[derive(Debug, Clone)]
pub struct MatrixConnection {
    /// Components `A^{(α)}`, one r×r Hermitian matrix per parameter
    /// direction (unused trailing directions are zero for d < 3).
    pub a: [CMat; 3],
    /// Frame in which the components are expressed.
    pub basis: CMat,
    /// Evaluation point.
    pub r: ParameterPoint,
    /// Largest anti-Hermitian residual removed by the symmetrization.
    pub residual: f64,
}

/// Holonomy unitary of a multiplet around a closed parameter loop.
#[derive(Debug, Clone)]
pub struct HolonomyUnitary {
    /// r×r holonomy in the frame at the loop's start point.
    pub u: CMat,
    /// The traversed loop.
    pub circuit: ParameterLoop,
    /// Number of distinct samples used at the final refinement level.
    pub samples: usize,
    /// `‖U_fine − U_coarse‖` at the last sample doubling (0 when the
    /// product was evaluated at a fixed resolution).
    pub refinement_error: f64,
}

impl HolonomyUnitary {
    /// Eigenphases of `U`, each in (−π, π].
    pub fn eigenphases(&self) -> Result<Vec<f64>> {
        cmat::unitary_eigenphases(&self.u)
    }
}

/// Matrix-valued curvature (covariant curl of the connection).
#[derive(Debug, Clone)]
pub struct CurvatureMatrix {
    /// Components 𝒱_x, 𝒱_y, 𝒱_z as r×r Hermitian matrices.
    pub v: [CMat; 3],
    /// Evaluation point.
    pub r: ParameterPoint,
    /// Largest anti-Hermitian residual removed by the symmetrization.
    pub residual: f64,
}

/// Outcome of re-deriving a holonomy in remixed frames.
#[derive(Debug, Clone)]
pub struct GaugeCovarianceReport {
    /// Holonomy in the canonical frames.
    pub u: CMat,
    /// Holonomy recomputed in the remixed frames.
    pub u_remixed: CMat,
    /// `‖U' − W₀† U W₀‖` where `W₀` is the remix at the start point.
    pub conjugation_deviation: f64,
    /// Largest distance between matched eigenvalue multisets of U and U'.
    pub eigenvalue_deviation: f64,
    /// Number of distinct samples used.
    pub samples: usize,
}

const MULTIPLET_RTOL: f64 = 1e-8;
const ALIGNMENT_RESIDUAL_TOL: f64 = 1e-6;
const BREAKDOWN_SIGMA: f64 = 1e-3;
const WILSON_TOL: f64 = 1e-9;
const WILSON_MAX_SAMPLES: usize = 200_000;

/// Validates a level group against an eigensystem: the levels must be
/// mutually degenerate and isolated from every other level, both to
/// `1e-8`·(spectral range).
fn validate_group(eig: &GaugedEigensystem, levels: &[usize]) -> Result<Vec<usize>> {
    if levels.is_empty() {
        return Err(Error::invalid("empty level group"));
    }
    let mut group = levels.to_vec();
    group.sort_unstable();
    group.dedup();
    if group.len() != levels.len() {
        return Err(Error::invalid("level group contains repeated indices"));
    }
    let n = eig.dim();
    if *group.last().unwrap() >= n {
        return Err(Error::invalid("level index out of range"));
    }
    let tol = MULTIPLET_RTOL * fp::max(eig.spectral_range(), f64::MIN_POSITIVE);
    let e_lo = eig.energies[group[0]];
    let e_hi = eig.energies[*group.last().unwrap()];
    if e_hi - e_lo > tol {
        return Err(Error::Multiplet {
            detail: format!(
                "selected levels span {:.3e} > degeneracy tolerance {:.3e}",
                e_hi - e_lo,
                tol
            ),
        });
    }
    for m in 0..n {
        if group.contains(&m) {
            continue;
        }
        let d = fp::min(fp::abs(eig.energies[m] - e_lo), fp::abs(eig.energies[m] - e_hi));
        if d <= tol {
            return Err(Error::Multiplet {
                detail: format!(
                    "level {m} lies within {d:.3e} of the group (tolerance {tol:.3e}); the multiplet is not isolated"
                ),
            });
        }
    }
    Ok(group)
}

/// Energy distance from the group to the nearest outside level.
fn boundary_gap(eig: &GaugedEigensystem, group: &[usize]) -> f64 {
    let e_lo = eig.energies[group[0]];
    let e_hi = eig.energies[*group.last().unwrap()];
    let mut gap = f64::INFINITY;
    for m in 0..eig.dim() {
        if group.contains(&m) {
            continue;
        }
        let d = fp::min(fp::abs(eig.energies[m] - e_lo), fp::abs(eig.energies[m] - e_hi));
        gap = fp::min(gap, d);
    }
    if gap.is_finite() {
        gap
    } else {
        // The group exhausts the spectrum; transport can never leave it.
        fp::max(eig.spectral_range(), 1.0)
    }
}

/// Column-pivoted Gram–Schmidt frame for the projector of `group`.
///
/// With `pins = None` the pivot columns (and per-column phase components)
/// are chosen greedily at this point; with `pins = Some(..)` the caller's
/// choices are reused so that frames at nearby points vary smoothly.
fn projector_frame(
    eig: &GaugedEigensystem,
    group: &[usize],
    pins: Option<(&[usize], &[usize])>,
) -> Result<(CMat, Vec<usize>, Vec<usize>)> {
    let n = eig.dim();
    let r = group.len();
    // Projector columns, orthogonalized in place.
    let mut cols: Vec<Vec<C>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|row| {
                    let mut s = cr(0.0);
                    for &lvl in group {
                        s += eig.state(lvl)[row] * eig.state(lvl)[i].conj();
                    }
                    s
                })
                .collect()
        })
        .collect();
    let mut frame_cols: Vec<Vec<C>> = Vec::with_capacity(r);
    let mut pivots = Vec::with_capacity(r);
    let mut phase_pivots = Vec::with_capacity(r);
    for t in 0..r {
        let pivot = match pins {
            Some((p, _)) => p[t],
            None => {
                let mut best = 0;
                let mut best_norm = -1.0;
                for (i, col) in cols.iter().enumerate() {
                    if pivots.contains(&i) {
                        continue;
                    }
                    let nrm = cmat::vec_norm(col);
                    if nrm > best_norm + 1e-14 * (1.0 + best_norm) {
                        best = i;
                        best_norm = nrm;
                    }
                }
                best
            }
        };
        let mut q = cols[pivot].clone();
        let nrm = cmat::vec_norm(&q);
        if nrm < 1e-8 {
            return Err(Error::Numerical {
                detail: format!(
                    "projector column {pivot} degenerated during frame construction (norm {nrm:.2e})"
                ),
            });
        }
        let inv = cr(1.0 / nrm);
        for x in q.iter_mut() {
            *x *= inv;
        }
        // Pin the column phase on a fixed component.
        let phase_pivot = match pins {
            Some((_, ph)) => ph[t],
            None => {
                let mut best = 0;
                let mut best_mag = -1.0;
                for (i, x) in q.iter().enumerate() {
                    if x.norm() > best_mag + 1e-14 * (1.0 + best_mag) {
                        best = i;
                        best_mag = x.norm();
                    }
                }
                best
            }
        };
        let z = q[phase_pivot];
        let mag = z.norm();
        if mag < 1e-8 {
            return Err(Error::Numerical {
                detail: format!(
                    "phase-pivot component {phase_pivot} vanished during frame construction (|c| = {mag:.2e})"
                ),
            });
        }
        let rot = z.conj() / cr(mag);
        for x in q.iter_mut() {
            *x *= rot;
        }
        q[phase_pivot] = cr(q[phase_pivot].re.max(0.0));
        // Re-orthonormalize against the accepted columns (twice is enough).
        for _ in 0..2 {
            for prev in &frame_cols {
                let ov = dot(prev, &q);
                for (x, p) in q.iter_mut().zip(prev.iter()) {
                    *x -= ov * *p;
                }
            }
        }
        let nq = cmat::vec_norm(&q);
        if nq < 1e-8 {
            return Err(Error::Numerical {
                detail: format!(
                    "frame column {t} collapsed after orthogonalization (norm {nq:.2e})"
                ),
            });
        }
        let invq = cr(1.0 / nq);
        for x in q.iter_mut() {
            *x *= invq;
        }
        // Deflate the remaining projector columns.
        for (i, col) in cols.iter_mut().enumerate() {
            if pivots.contains(&i) || i == pivot {
                continue;
            }
            let ov = dot(&q, col);
            for (x, p) in col.iter_mut().zip(q.iter()) {
                *x -= ov * *p;
            }
        }
        frame_cols.push(q);
        pivots.push(pivot);
        phase_pivots.push(phase_pivot);
    }
    Ok((CMat::from_columns(&frame_cols), pivots, phase_pivots))
}

/// Orthonormal gauge-fixed frame spanning a degenerate level group.
///
/// The levels must be mutually degenerate within `1e-8`·(spectral range)
/// and separated from every remaining level by more than the same
/// tolerance; otherwise [`Error::Multiplet`] is returned.
pub fn multiplet_basis(
    family: &dyn HamiltonianFamily,
    levels: &[usize],
    r: &ParameterPoint,
) -> Result<MultipletFrame> {
    let eig = eigendecompose(family, &r.coords)?;
    let group = validate_group(&eig, levels)?;
    let (frame, pivots, phase_pivots) = projector_frame(&eig, &group, None)?;
    let energies = group.iter().map(|&l| eig.energies[l]).collect();
    Ok(MultipletFrame {
        frame,
        levels: group,
        energies,
        pivots,
        phase_pivots,
    })
}

/// Frame at `coords` sharing the centre point's pivot/phase choices.
fn pinned_frame(
    family: &dyn HamiltonianFamily,
    group: &[usize],
    coords: &[f64],
    pins: (&[usize], &[usize]),
) -> Result<CMat> {
    let eig = eigendecompose(family, coords)?;
    validate_group(&eig, group)?;
    let (frame, _, _) = projector_frame(&eig, group, Some(pins))?;
    Ok(frame)
}

/// Stencil scale `ℓ = min(coordinate scale, boundary gap/‖∇H‖)`.
fn multiplet_scale(
    family: &dyn HamiltonianFamily,
    group: &[usize],
    coords: &[f64],
) -> Result<f64> {
    let coord = 1.0 + coords.iter().fold(0.0, |m: f64, &x| m.max(fp::abs(x)));
    let eig = eigendecompose(family, coords)?;
    let gap = boundary_gap(&eig, group);
    let dh = fp::max(
        abelian::grad_h_scale(family, coords, 1e-4 * coord),
        f64::MIN_POSITIVE,
    );
    Ok(fp::min(coord, gap / dh))
}

/// Raw connection components `−i (F₀† ∂_α F)ᵀ` at step `h` (no
/// symmetrization), in the centre frame's gauge.
fn connection_raw(
    family: &dyn HamiltonianFamily,
    group: &[usize],
    center: &MultipletFrame,
    coords: &[f64],
    h: f64,
) -> Result<Vec<CMat>> {
    let d = family.param_dim();
    let r = group.len();
    let pins = (center.pivots.as_slice(), center.phase_pivots.as_slice());
    let mut out = Vec::with_capacity(d);
    for alpha in 0..d {
        let mut rp = coords.to_vec();
        let mut rm = coords.to_vec();
        rp[alpha] += h;
        rm[alpha] -= h;
        if rp[alpha] == coords[alpha] || rm[alpha] == coords[alpha] {
            return Err(Error::StepUnderflow {
                step: h,
                context: "matrix-connection stencil",
            });
        }
        let fp_ = pinned_frame(family, group, &rp, pins)?;
        let fm = pinned_frame(family, group, &rm, pins)?;
        // G_{kj} = ⟨k | ∂_α j⟩ projected on the centre frame.
        let mut g = CMat::zeros(r, r);
        for j in 0..r {
            for k in 0..r {
                let gp = dot(center.frame.column(k), fp_.column(j));
                let gm = dot(center.frame.column(k), fm.column(j));
                g[(k, j)] = (gp - gm) / cr(2.0 * h);
            }
        }
        // A_{jk} = −i G_{kj}.
        let a = CMat::from_fn(r, r, |j, k| c(0.0, -1.0) * g[(k, j)]);
        out.push(a);
    }
    Ok(out)
}

/// Matrix-valued connection `A^{(α)}_{jk} = −i⟨k(R)|∂_α j(R)⟩` of a
/// degenerate level group, Hermitized with the anti-Hermitian residual
/// reported.
///
/// `step = None` picks a gap-adaptive stencil; the five-point Richardson
/// combination `(4·A_{h/2} − A_h)/3` removes the leading O(h²) error.
/// A residual above `1e-6` (frame field not resolved by the stencil)
/// yields [`Error::AlignmentFailure`].
pub fn connection_matrices(
    family: &dyn HamiltonianFamily,
    levels: &[usize],
    r: &ParameterPoint,
    step: Option<f64>,
) -> Result<MatrixConnection> {
    let d = family.param_dim();
    if d == 0 || d > 3 {
        return Err(Error::invalid(
            "matrix connection defined for 1-, 2- or 3-parameter families",
        ));
    }
    if r.dim() != d {
        return Err(Error::invalid("parameter point dimension mismatch"));
    }
    let center = multiplet_basis(family, levels, r)?;
    let h = match step {
        Some(s) if s > 0.0 => s,
        Some(_) => return Err(Error::invalid("step must be positive")),
        None => 1e-3 * multiplet_scale(family, &center.levels, &r.coords)?,
    };
    let coarse = connection_raw(family, &center.levels, &center, &r.coords, h)?;
    let fine = connection_raw(family, &center.levels, &center, &r.coords, 0.5 * h)?;
    let rank = center.rank();
    let mut a = [
        CMat::zeros(rank, rank),
        CMat::zeros(rank, rank),
        CMat::zeros(rank, rank),
    ];
    let mut residual = 0.0_f64;
    for alpha in 0..d {
        let rich = fine[alpha]
            .scale(cr(4.0 / 3.0))
            .sub(&coarse[alpha].scale(cr(1.0 / 3.0)));
        residual = fp::max(
            residual,
            rich.sub(&rich.adjoint()).fro_norm() / 2.0,
        );
        a[alpha] = rich.hermitized();
    }
    if residual > ALIGNMENT_RESIDUAL_TOL {
        return Err(Error::AlignmentFailure { residual });
    }
    Ok(MatrixConnection {
        a,
        basis: center.frame,
        r: r.clone(),
        residual,
    })
}

/// Distinct sample points of a closed loop (final repeat dropped).
fn distinct_points(circuit: &ParameterLoop) -> Vec<Vec<f64>> {
    let pts = &circuit.points;
    pts[..pts.len() - 1]
        .iter()
        .map(|p| p.coords.clone())
        .collect()
}

/// Ordered overlap product around `pts` (closing factor included),
/// reported in the canonical frame at `pts[0]`.  Later samples act from
/// the left, so the r = 1 case reproduces `arg Π_k ⟨ψ_{k+1}|ψ_k⟩`.
fn holonomy_product(
    family: &dyn HamiltonianFamily,
    group: &[usize],
    pts: &[Vec<f64>],
) -> Result<CMat> {
    let eig0 = eigendecompose(family, &pts[0])?;
    let g0 = validate_group(&eig0, group)?;
    let (f0, _, _) = projector_frame(&eig0, &g0, None)?;
    let rank = g0.len();
    let mut u = CMat::identity(rank);
    let mut prev = f0.clone();
    let n = pts.len();
    for k in 0..n {
        let next = if k + 1 == n {
            f0.clone()
        } else {
            let eig = eigendecompose(family, &pts[k + 1])?;
            let g = validate_group(&eig, group)?;
            let (f, _, _) = projector_frame(&eig, &g, None)?;
            f
        };
        // M_k[j, l] = ⟨j(R_{k+1}) | l(R_k)⟩.
        let m = CMat::from_fn(rank, rank, |j, l| dot(next.column(j), prev.column(l)));
        let (t, sigma_min, sigma_max) = match cmat::polar_unitary(&m) {
            Ok(x) => x,
            Err(_) => {
                return Err(Error::TransportBreakdown {
                    index: k,
                    sigma_min: 0.0,
                })
            }
        };
        if sigma_min < BREAKDOWN_SIGMA * fp::max(sigma_max, 1e-300) || sigma_max < BREAKDOWN_SIGMA {
            return Err(Error::TransportBreakdown {
                index: k,
                sigma_min,
            });
        }
        u = t.mul(&u);
        prev = next;
    }
    Ok(u)
}

/// Midpoint-doubled copy of a distinct-point list (chord midpoints).
fn doubled(pts: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = pts.len();
    let mut out = Vec::with_capacity(2 * n);
    for k in 0..n {
        let a = &pts[k];
        let b = &pts[(k + 1) % n];
        out.push(a.clone());
        out.push(
            a.iter()
                .zip(b.iter())
                .map(|(x, y)| 0.5 * (x + y))
                .collect(),
        );
    }
    out
}

/// Holonomy unitary at the loop's own resolution (no refinement).
pub fn wilson_loop_sampled(
    family: &dyn HamiltonianFamily,
    levels: &[usize],
    circuit: &ParameterLoop,
) -> Result<HolonomyUnitary> {
    let pts = distinct_points(circuit);
    let u = holonomy_product(family, levels, &pts)?;
    Ok(HolonomyUnitary {
        u,
        circuit: circuit.clone(),
        samples: pts.len(),
        refinement_error: 0.0,
    })
}

/// Holonomy unitary of a degenerate level group around a closed loop.
///
/// The ordered product of polar-unitarized overlap matrices is refined
/// by chord-midpoint sample doubling until successive refinements agree
/// to `1e-9` in Frobenius norm.  The result is expressed in the
/// canonical frame at the start point; an overlap whose smallest
/// singular value drops below `1e-3` (the multiplet rotating out of
/// itself faster than the sampling resolves) is a
/// [`Error::TransportBreakdown`].
pub fn wilson_loop(
    family: &dyn HamiltonianFamily,
    levels: &[usize],
    circuit: &ParameterLoop,
) -> Result<HolonomyUnitary> {
    let mut pts = distinct_points(circuit);
    let mut u_prev = holonomy_product(family, levels, &pts)?;
    let mut extr_prev: Option<CMat> = None;
    let mut delta = f64::INFINITY;
    while pts.len() * 2 <= WILSON_MAX_SAMPLES {
        pts = doubled(&pts);
        let u = holonomy_product(family, levels, &pts)?;
        // The discrete product approaches the continuum transport with an
        // O(1/N²) error; one Richardson step removes it, and the polar
        // factor restores exact unitarity of the combination.
        let extr_raw = u.add(&u.sub(&u_prev).scale(cr(1.0 / 3.0)));
        let (extr, _, _) = cmat::polar_unitary(&extr_raw).map_err(|_| Error::Numerical {
            detail: String::from("holonomy extrapolation lost unitarity"),
        })?;
        if let Some(prev) = &extr_prev {
            delta = extr.sub(prev).fro_norm();
            if delta < WILSON_TOL {
                return Ok(HolonomyUnitary {
                    u: extr,
                    circuit: circuit.clone(),
                    samples: pts.len(),
                    refinement_error: delta,
                });
            }
        }
        extr_prev = Some(extr);
        u_prev = u;
    }
    Err(Error::Numerical {
        detail: format!(
            "holonomy refinement stalled at {} samples (last change {delta:.3e})",
            pts.len()
        ),
    })
}

/// Entrywise complex conjugate (transpose for Hermitian arguments).
fn conj_mat(m: &CMat) -> CMat {
    CMat::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)].conj())
}

/// Matrix curvature `𝒱` of a degenerate level group at `r`.
///
/// Components are assembled from the covariant curl of
/// [`connection_matrices`] fields, with the overall sign and commutator
/// factor pinned by the infinitesimal-loop identity
/// `U(∂S) ≈ 1 + i 𝒱·dS`; for r = 1 the commutator vanishes and
/// `𝒱 = −Ω` reproduces the abelian curvature up to that pinned
/// orientation convention.
pub fn curvature_matrix(
    family: &dyn HamiltonianFamily,
    levels: &[usize],
    r: &ParameterPoint,
    step: Option<f64>,
) -> Result<CurvatureMatrix> {
    let d = family.param_dim();
    if d != 2 && d != 3 {
        return Err(Error::invalid(
            "matrix curvature defined for 2- or 3-parameter families",
        ));
    }
    if r.dim() != d {
        return Err(Error::invalid("parameter point dimension mismatch"));
    }
    let center = multiplet_basis(family, levels, r)?;
    let group = center.levels.clone();
    let rank = center.rank();
    let ell = match step {
        Some(s) if s > 0.0 => s,
        Some(_) => return Err(Error::invalid("step must be positive")),
        None => multiplet_scale(family, &group, &r.coords)?,
    };
    let h_inner = 1e-3 * ell;
    let h_outer = 1e-3 * ell;
    let pins = (center.pivots.as_slice(), center.phase_pivots.as_slice());

    // Connection field in the centre-pinned gauge, Richardson-refined.
    let conn_at = |coords: &[f64], h: f64| -> Result<Vec<CMat>> {
        let eig = eigendecompose(family, coords)?;
        validate_group(&eig, &group)?;
        let (frame, _, _) = projector_frame(&eig, &group, Some(pins))?;
        let local = MultipletFrame {
            frame,
            levels: group.clone(),
            energies: group.iter().map(|&l| eig.energies[l]).collect(),
            pivots: center.pivots.clone(),
            phase_pivots: center.phase_pivots.clone(),
        };
        let coarse = connection_raw(family, &group, &local, coords, h)?;
        let fine = connection_raw(family, &group, &local, coords, 0.5 * h)?;
        Ok((0..d)
            .map(|alpha| {
                fine[alpha]
                    .scale(cr(4.0 / 3.0))
                    .sub(&coarse[alpha].scale(cr(1.0 / 3.0)))
            })
            .collect())
    };

    // ∂_α A_β by central differences at outer step H, itself Richardson
    // combined between H and H/2.
    let grad_at = |h_out: f64| -> Result<Vec<Vec<CMat>>> {
        let mut grad = vec![vec![CMat::zeros(rank, rank); d]; d];
        for alpha in 0..d {
            let mut rp = r.coords.clone();
            let mut rm = r.coords.clone();
            rp[alpha] += h_out;
            rm[alpha] -= h_out;
            if rp[alpha] == r.coords[alpha] || rm[alpha] == r.coords[alpha] {
                return Err(Error::StepUnderflow {
                    step: h_out,
                    context: "matrix-curvature stencil",
                });
            }
            let ap = conn_at(&rp, h_inner)?;
            let am = conn_at(&rm, h_inner)?;
            for beta in 0..d {
                grad[alpha][beta] = ap[beta].sub(&am[beta]).scale(cr(1.0 / (2.0 * h_out)));
            }
        }
        Ok(grad)
    };
    let coarse = grad_at(h_outer)?;
    let fine = grad_at(0.5 * h_outer)?;
    let mut grad = vec![vec![CMat::zeros(rank, rank); d]; d];
    for alpha in 0..d {
        for beta in 0..d {
            grad[alpha][beta] = fine[alpha][beta]
                .scale(cr(4.0 / 3.0))
                .sub(&coarse[alpha][beta].scale(cr(1.0 / 3.0)));
        }
    }
    let a0 = conn_at(&r.coords, h_inner)?;

    let zero = CMat::zeros(rank, rank);
    let mut v = [zero.clone(), zero.clone(), zero];
    let pairs: &[(usize, usize, usize)] = if d == 3 {
        &[(1, 2, 0), (2, 0, 1), (0, 1, 2)]
    } else {
        &[(0, 1, 2)]
    };
    let mut residual = 0.0_f64;
    for &(alpha, beta, gamma) in pairs {
        // 𝒱_γ = conj(∂_β A_α − ∂_α A_β + i[A_α, A_β]).
        let comm = a0[alpha].mul(&a0[beta]).sub(&a0[beta].mul(&a0[alpha]));
        let raw = grad[beta][alpha]
            .sub(&grad[alpha][beta])
            .add(&comm.scale(c(0.0, 1.0)));
        let pinned = conj_mat(&raw);
        residual = fp::max(residual, pinned.sub(&pinned.adjoint()).fro_norm() / 2.0);
        v[gamma] = pinned.hermitized();
    }
    if residual > ALIGNMENT_RESIDUAL_TOL {
        return Err(Error::AlignmentFailure { residual });
    }
    Ok(CurvatureMatrix {
        v,
        r: r.clone(),
        residual,
    })
}

/// Recomputes a holonomy with every sample frame remixed by `w[k]` and
/// checks the covariance `U → W₀† U W₀` plus spectrum invariance.
///
/// `w` supplies one r×r unitary per distinct loop sample (the closing
/// repeat excluded).  Both products are evaluated at the loop's own
/// resolution so the comparison is exact rather than refinement-limited.
pub fn gauge_covariance_check(
    family: &dyn HamiltonianFamily,
    levels: &[usize],
    circuit: &ParameterLoop,
    w: &[CMat],
) -> Result<GaugeCovarianceReport> {
    let pts = distinct_points(circuit);
    if w.len() != pts.len() {
        return Err(Error::invalid(
            "need exactly one remix unitary per distinct loop sample",
        ));
    }
    let eig0 = eigendecompose(family, &pts[0])?;
    let group = validate_group(&eig0, levels)?;
    let rank = group.len();
    for (k, wk) in w.iter().enumerate() {
        if wk.rows() != rank || wk.cols() != rank {
            return Err(Error::invalid("remix unitary has the wrong shape"));
        }
        if wk.unitarity_defect() > 1e-10 {
            return Err(Error::InvalidInput {
                detail: format!("remix matrix {k} is not unitary"),
            });
        }
    }
    let n = pts.len();
    let frames: Result<Vec<CMat>> = pts
        .iter()
        .map(|p| {
            let eig = eigendecompose(family, p)?;
            let g = validate_group(&eig, &group)?;
            let (f, _, _) = projector_frame(&eig, &g, None)?;
            Ok(f)
        })
        .collect();
    let frames = frames?;
    let product = |remix: bool| -> Result<CMat> {
        let mut u = CMat::identity(rank);
        for k in 0..n {
            let kn = (k + 1) % n;
            let mut fk = frames[k].clone();
            let mut fkn = frames[kn].clone();
            if remix {
                fk = fk.mul(&w[k]);
                fkn = fkn.mul(&w[kn]);
            }
            let m = CMat::from_fn(rank, rank, |j, l| dot(fkn.column(j), fk.column(l)));
            let (t, sigma_min, sigma_max) = match cmat::polar_unitary(&m) {
                Ok(x) => x,
                Err(_) => {
                    return Err(Error::TransportBreakdown {
                        index: k,
                        sigma_min: 0.0,
                    })
                }
            };
            if sigma_min < BREAKDOWN_SIGMA * fp::max(sigma_max, 1e-300) {
                return Err(Error::TransportBreakdown {
                    index: k,
                    sigma_min,
                });
            }
            u = t.mul(&u);
        }
        Ok(u)
    };
    let u = product(false)?;
    let u_remixed = product(true)?;
    let expected = w[0].adjoint().mul(&u).mul(&w[0]);
    let conjugation_deviation = u_remixed.sub(&expected).fro_norm();
    let ph_a = cmat::unitary_eigenphases(&u)?;
    let ph_b = cmat::unitary_eigenphases(&u_remixed)?;
    let mut eigenvalue_deviation = 0.0_f64;
    for &pb in &ph_b {
        let mut best = f64::INFINITY;
        for &pa in &ph_a {
            best = fp::min(best, fp::abs(fp::angle_distance(pa, pb)));
        }
        eigenvalue_deviation = fp::max(eigenvalue_deviation, best);
    }
    Ok(GaugeCovarianceReport {
        u,
        u_remixed,
        conjugation_deviation,
        eigenvalue_deviation,
        samples: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abelian::{berry_curvature, berry_phase_of_loop, CurvatureMethod};
    use crate::rng::SplitMix64;
    use crate::spectral::{Quadrupole, Zeeman};
    use crate::vec3::Vec3;

    const TAU: f64 = fp::TAU;

    fn quad() -> Quadrupole {
        Quadrupole { omega_q: 1.0 }
    }

    fn point(x: f64, y: f64, z: f64) -> ParameterPoint {
        ParameterPoint::new(vec![x, y, z])
    }

    /// Circle of colatitude `theta` about the z-axis, radius 1, n samples.
    fn cone_loop(theta: f64, n: usize) -> ParameterLoop {
        ParameterLoop::from_curve(
            |t| {
                let phi = TAU * t;
                point(
                    fp::sin(theta) * fp::cos(phi),
                    fp::sin(theta) * fp::sin(phi),
                    fp::cos(theta),
                )
            },
            n,
        )
        .unwrap()
    }

    /// Great circle through the north pole, rotating about the x-axis.
    fn polar_great_circle(n: usize) -> ParameterLoop {
        ParameterLoop::from_curve(
            |t| {
                let a = TAU * t;
                point(0.0, -fp::sin(a), fp::cos(a))
            },
            n,
        )
        .unwrap()
    }

    /// Cone about a tilted axis, with the sample at t = 0 sitting exactly
    /// on the north pole (where the canonical frame is the spin frame).
    fn tilted_cone_through_pole(half_angle: f64, n: usize) -> ParameterLoop {
        let axis = Vec3::new(fp::sin(half_angle), 0.0, fp::cos(half_angle));
        let u = Vec3::new(fp::cos(half_angle), 0.0, -fp::sin(half_angle));
        let v = Vec3::new(0.0, 1.0, 0.0);
        ParameterLoop::from_curve(
            |t| {
                let a = TAU * t;
                let dir = axis * fp::cos(half_angle)
                    - u * (fp::sin(half_angle) * fp::cos(a))
                    - v * (fp::sin(half_angle) * fp::sin(a));
                point(dir.x, dir.y, dir.z)
            },
            n,
        )
        .unwrap()
    }

    #[test]
    fn multiplet_doublets_validate_and_reject() {
        let f = quad();
        let r = point(0.5, -0.3, 0.8);
        for group in [[0usize, 1], [2, 3]] {
            let m = multiplet_basis(&f, &group, &r).unwrap();
            assert_eq!(m.rank(), 2);
            // Orthonormal columns.
            let gram = m.frame.adjoint().mul(&m.frame);
            assert!(gram.sub(&CMat::identity(2)).fro_norm() < 1e-12);
            // Projector reproduces the eigenprojector.
            let eig = eigendecompose(&f, &r.coords).unwrap();
            let p_eig = CMat::from_fn(4, 4, |i, j| {
                let mut s = cr(0.0);
                for &lvl in &group {
                    s += eig.state(lvl)[i] * eig.state(lvl)[j].conj();
                }
                s
            });
            assert!(m.projector().sub(&p_eig).fro_norm() < 1e-12);
        }
        let err = multiplet_basis(&f, &[1, 2], &r).unwrap_err();
        assert!(matches!(err, Error::Multiplet { .. }));
        let err = multiplet_basis(&f, &[2], &r).unwrap_err();
        assert!(matches!(err, Error::Multiplet { .. }));
    }

    #[test]
    fn multiplet_rank_one_reduces_to_gauge_fixed_eigenvector() {
        let f = Zeeman { mu: 1.0 };
        let r = point(0.4, 0.7, -0.2);
        let m = multiplet_basis(&f, &[0], &r).unwrap();
        let eig = eigendecompose(&f, &r.coords).unwrap();
        let mut dev = 0.0_f64;
        for i in 0..2 {
            dev = fp::max(dev, (m.frame.column(0)[i] - eig.state(0)[i]).norm());
        }
        assert!(dev < 1e-13, "canonical r=1 frame deviates by {dev:.2e}");
    }

    #[test]
    fn multiplet_basis_is_deterministic() {
        let f = quad();
        let r = point(0.3, 0.4, 0.6);
        let a = multiplet_basis(&f, &[2, 3], &r).unwrap();
        let b = multiplet_basis(&f, &[2, 3], &r).unwrap();
        for j in 0..2 {
            for i in 0..4 {
                let za = a.frame.column(j)[i];
                let zb = b.frame.column(j)[i];
                assert!(za.re.to_bits() == zb.re.to_bits() && za.im.to_bits() == zb.im.to_bits());
            }
        }
    }

    #[test]
    fn connection_rank_one_matches_abelian_fd() {
        let fam = Zeeman { mu: 1.0 };
        let mut rng = SplitMix64::new(77);
        for _ in 0..4 {
            let r = point(
                rng.range(-1.0, 1.0),
                rng.range(-1.0, 1.0),
                rng.range(0.3, 1.2),
            );
            let h = 1e-4;
            for band in [0usize, 1] {
                let mc = connection_matrices(&fam, &[band], &r, Some(h)).unwrap();
                // Same Richardson combination built on the abelian stencil.
                let a_ab = crate::abelian::berry_connection_richardson(&fam, band, &r.coords, h)
                    .unwrap();
                for alpha in 0..3 {
                    let diff = fp::abs(mc.a[alpha][(0, 0)].re - a_ab.a[alpha]);
                    assert!(diff < 1e-11, "component {alpha}: {diff:.2e}");
                    assert!(fp::abs(mc.a[alpha][(0, 0)].im) < 1e-14);
                }
            }
        }
    }

    #[test]
    fn connection_quadrupole_doublets_off_diagonals() {
        let f = quad();
        let r = point(0.0, 0.0, 1.0);
        // ±3/2 doublet: rotations cannot connect m = +3/2 to m = −3/2.
        let upper = connection_matrices(&f, &[2, 3], &r, None).unwrap();
        for alpha in 0..3 {
            assert!(
                upper.a[alpha][(0, 1)].norm() < 1e-8,
                "±3/2 off-diagonal component {alpha} = {:.3e}",
                upper.a[alpha][(0, 1)].norm()
            );
        }
        assert!(upper.residual < 1e-8);
        // ±1/2 doublet: rotations mix the pair, so away from the pole
        // (where the projector-column gauge is momentarily parallel) the
        // off-diagonals are O(1).
        let tilted = point(
            fp::sin(0.8) * fp::cos(0.3),
            fp::sin(0.8) * fp::sin(0.3),
            fp::cos(0.8),
        );
        let lower = connection_matrices(&f, &[0, 1], &tilted, None).unwrap();
        let off = (0..3)
            .map(|alpha| lower.a[alpha][(0, 1)].norm())
            .fold(0.0_f64, fp::max);
        assert!(off > 0.3, "±1/2 off-diagonals too small: {off:.3}");
        for alpha in 0..3 {
            assert!(lower.a[alpha].hermiticity_defect() < 1e-14);
        }
    }

    #[test]
    fn wilson_rank_one_equals_discrete_phase() {
        let fam = Zeeman { mu: 1.0 };
        let circuit = cone_loop(1.1, 400);
        let hol = wilson_loop_sampled(&fam, &[0], &circuit).unwrap();
        let phase = berry_phase_of_loop(&fam, 0, &circuit).unwrap();
        assert_eq!(hol.u.rows(), 1);
        let expected = c(fp::cos(phase.phase), fp::sin(phase.phase));
        assert!(
            (hol.u[(0, 0)] - expected).norm() < 1e-10,
            "U = {:?} vs e^{{iγ}} with γ = {}",
            hol.u[(0, 0)],
            phase.phase
        );
        // Refined holonomy stays within the polygonal-limit error band of
        // the analytic cone phase −π(1 − cos θ).
        let refined = wilson_loop(&fam, &[1], &circuit).unwrap();
        let gamma = fp::atan2(refined.u[(0, 0)].im, refined.u[(0, 0)].re);
        let analytic = -fp::PI * (1.0 - fp::cos(1.1));
        assert!(fp::abs(gamma - analytic) < 1e-4);
        assert!(refined.u.unitarity_defect() < 1e-10);
    }

    #[test]
    fn wilson_nqr_doublet_great_circle_is_minus_identity() {
        let f = quad();
        let circuit = polar_great_circle(1200);
        let hol = wilson_loop(&f, &[2, 3], &circuit).unwrap();
        // Solid angle 2π → phases ∓(3/2)·2π ≡ π for both columns.
        let target = CMat::identity(2).scale(cr(-1.0));
        let dev = hol.u.sub(&target).fro_norm();
        assert!(dev < 1e-4, "‖U + 1‖ = {dev:.3e}");
        assert!(hol.u.unitarity_defect() < 1e-10);
        let off = fp::max(hol.u[(0, 1)].norm(), hol.u[(1, 0)].norm());
        assert!(off < 1e-8, "off-diagonal {off:.3e}");
    }

    #[test]
    fn wilson_nqr_doublet_cone_has_conjugate_phases() {
        let f = quad();
        let half = 0.6;
        let circuit = tilted_cone_through_pole(half, 800);
        let hol = wilson_loop(&f, &[2, 3], &circuit).unwrap();
        let off = fp::max(hol.u[(0, 1)].norm(), hol.u[(1, 0)].norm());
        assert!(off < 1e-8, "off-diagonal {off:.3e}");
        let u00 = hol.u[(0, 0)];
        let u11 = hol.u[(1, 1)];
        assert!((u00 - u11.conj()).norm() < 1e-6);
        // γ_{+3/2} = −(3/2)·Ω with Ω = 2π(1 − cos half-angle).
        let omega = TAU * (1.0 - fp::cos(half));
        let expected = fp::principal(-1.5 * omega);
        let got = fp::atan2(u00.im, u00.re);
        assert!(
            fp::abs(fp::angle_distance(got, expected)) < 1e-4,
            "phase {got:.6} vs {expected:.6}"
        );
    }

    #[test]
    fn wilson_half_doublet_has_nontrivial_mixing() {
        let f = quad();
        let circuit = tilted_cone_through_pole(0.7, 800);
        let hol = wilson_loop(&f, &[0, 1], &circuit).unwrap();
        let off = fp::max(hol.u[(0, 1)].norm(), hol.u[(1, 0)].norm());
        assert!(off > 0.05, "±1/2 holonomy unexpectedly diagonal: {off:.3e}");
        assert!(hol.u.unitarity_defect() < 1e-10);
    }

    #[test]
    fn wilson_reversal_and_composition() {
        let f = quad();
        let c1 = tilted_cone_through_pole(0.5, 240);
        // Reversal at fixed sampling is exactly the adjoint.
        let fwd = wilson_loop_sampled(&f, &[0, 1], &c1).unwrap();
        let mut rev_pts = c1.points.clone();
        rev_pts.reverse();
        let c1_rev = ParameterLoop::new(rev_pts, true).unwrap();
        let bwd = wilson_loop_sampled(&f, &[0, 1], &c1_rev).unwrap();
        assert!(bwd.u.sub(&fwd.u.adjoint()).fro_norm() < 1e-10);
        // Composition through the shared base point multiplies in
        // traversal order: U(C1∘C2) = U(C2)·U(C1).
        let c2 = polar_great_circle(240);
        let u1 = wilson_loop_sampled(&f, &[0, 1], &c1).unwrap().u;
        let u2 = wilson_loop_sampled(&f, &[0, 1], &c2).unwrap().u;
        let mut pts = c1.points[..c1.points.len() - 1].to_vec();
        pts.extend_from_slice(&c2.points[..c2.points.len() - 1]);
        pts.push(c1.points[0].clone());
        let composite = ParameterLoop::new(pts, true).unwrap();
        let u12 = wilson_loop_sampled(&f, &[0, 1], &composite).unwrap().u;
        assert!(u12.sub(&u2.mul(&u1)).fro_norm() < 1e-10);
    }

    #[test]
    fn wilson_rate_independence_of_eigenphases() {
        let f = quad();
        let uniform = tilted_cone_through_pole(0.5, 2000);
        let warped = ParameterLoop::from_curve(
            |t| {
                let s = t * t * (3.0 - 2.0 * t); // smooth nonuniform warp
                uniform_point(0.5, s)
            },
            2000,
        )
        .unwrap();
        fn uniform_point(half: f64, t: f64) -> ParameterPoint {
            let axis = Vec3::new(fp::sin(half), 0.0, fp::cos(half));
            let u = Vec3::new(fp::cos(half), 0.0, -fp::sin(half));
            let v = Vec3::new(0.0, 1.0, 0.0);
            let a = TAU * t;
            let dir = axis * fp::cos(half) - u * (fp::sin(half) * fp::cos(a))
                - v * (fp::sin(half) * fp::sin(a));
            ParameterPoint::new(vec![dir.x, dir.y, dir.z])
        }
        let ua = wilson_loop(&f, &[0, 1], &uniform).unwrap();
        let ub = wilson_loop(&f, &[0, 1], &warped).unwrap();
        let pa = ua.eigenphases().unwrap();
        let pb = ub.eigenphases().unwrap();
        for (&x, &y) in pa.iter().zip(pb.iter()) {
            assert!(
                fp::abs(fp::angle_distance(x, y)) < 1e-3,
                "eigenphases drifted: {x:.6} vs {y:.6}"
            );
        }
    }

    #[test]
    fn wilson_transport_breakdown_on_projector_jump() {
        // The occupied plane flips discontinuously between orthogonal
        // coordinate planes: no refinement can connect the frames.
        let f = crate::spectral::FnFamily {
            dim: 4,
            param_dim: 1,
            label: "projector jump",
            f: |r: &[f64]| {
            let lo = r[0] < 0.5;
            CMat::from_fn(4, 4, |i, j| {
                if i != j {
                    cr(0.0)
                } else if (lo && i < 2) || (!lo && i >= 2) {
                    cr(0.0)
                } else {
                    cr(1.0)
                }
                })
            },
        };
        let pts = vec![
            ParameterPoint::new(vec![0.0]),
            ParameterPoint::new(vec![0.3]),
            ParameterPoint::new(vec![0.8]),
            ParameterPoint::new(vec![0.3]),
            ParameterPoint::new(vec![0.0]),
        ];
        let circuit = ParameterLoop::new(pts, true).unwrap();
        let err = wilson_loop(&f, &[0, 1], &circuit).unwrap_err();
        assert!(
            matches!(err, Error::TransportBreakdown { .. }),
            "expected transport breakdown, got {err:?}"
        );
    }

    #[test]
    fn curvature_rank_one_is_minus_abelian() {
        let fam = Zeeman { mu: 1.0 };
        let r = point(0.3, -0.5, 0.8);
        for band in [0usize, 1] {
            let vm = curvature_matrix(&fam, &[band], &r, None).unwrap();
            let ab = berry_curvature(&fam, band, &r.coords, CurvatureMethod::PerturbationSum, None)
                .unwrap();
            let got = [
                vm.v[0][(0, 0)].re,
                vm.v[1][(0, 0)].re,
                vm.v[2][(0, 0)].re,
            ];
            let want = [-ab.v.x, -ab.v.y, -ab.v.z];
            for k in 0..3 {
                assert!(
                    fp::abs(got[k] - want[k]) < 1e-7,
                    "band {band} component {k}: {} vs {}",
                    got[k],
                    want[k]
                );
            }
        }
    }

    #[test]
    fn curvature_nqr_doublet_eigenvalues_at_pole() {
        let f = quad();
        let r = point(0.0, 0.0, 1.0);
        let vm = curvature_matrix(&f, &[2, 3], &r, None).unwrap();
        // Effective abelian monopoles of strength ∓m at the pole:
        // 𝒱_z = diag(−3/2, +3/2) in the (+3/2, −3/2) frame.
        assert!(fp::abs(vm.v[2][(0, 0)].re + 1.5) < 1e-6);
        assert!(fp::abs(vm.v[2][(1, 1)].re - 1.5) < 1e-6);
        assert!(vm.v[2][(0, 1)].norm() < 1e-7);
        for comp in &vm.v {
            assert!(comp.hermiticity_defect() < 1e-14);
        }
        assert!(vm.residual < 1e-6);
    }

    #[test]
    fn small_square_holonomy_matches_curvature_flux() {
        // U(∂S) ≈ 1 + i𝒱_z·h² on ccw squares in the xy-plane, with the
        // ±1/2 doublet so the commutator term is exercised.
        let f = quad();
        let r0 = [0.45, 0.2, 0.95];
        let r = ParameterPoint::new(r0.to_vec());
        let vm = curvature_matrix(&f, &[0, 1], &r, None).unwrap();
        let flux_err = |h: f64| -> f64 {
            let m = 48;
            let mut pts = Vec::new();
            let corner = [r0[0] - 0.5 * h, r0[1] - 0.5 * h, r0[2]];
            let legs: [([f64; 2], [f64; 2]); 4] = [
                ([0.0, 0.0], [1.0, 0.0]),
                ([1.0, 0.0], [1.0, 1.0]),
                ([1.0, 1.0], [0.0, 1.0]),
                ([0.0, 1.0], [0.0, 0.0]),
            ];
            for (from, to) in legs {
                for k in 0..m {
                    let s = k as f64 / m as f64;
                    let x = corner[0] + h * (from[0] + s * (to[0] - from[0]));
                    let y = corner[1] + h * (from[1] + s * (to[1] - from[1]));
                    pts.push(ParameterPoint::new(vec![x, y, corner[2]]));
                }
            }
            pts.push(pts[0].clone());
            let circuit = ParameterLoop::new(pts, true).unwrap();
            let u = wilson_loop_sampled(&f, &[0, 1], &circuit).unwrap().u;
            let pred = CMat::identity(2).add(&vm.v[2].scale(c(0.0, h * h)));
            u.sub(&pred).fro_norm()
        };
        let e1 = flux_err(0.04);
        let e2 = flux_err(0.02);
        let e3 = flux_err(0.01);
        // Cubic-order consistency: halving h divides the defect by ~8.
        assert!(
            e1 / e2 > 5.0 && e1 / e2 < 12.0,
            "first halving ratio {:.2} (errors {e1:.3e}, {e2:.3e})",
            e1 / e2
        );
        assert!(
            e2 / e3 > 5.0 && e2 / e3 < 12.0,
            "second halving ratio {:.2} (errors {e2:.3e}, {e3:.3e})",
            e2 / e3
        );
    }

    #[test]
    fn holonomy_matches_transport_equation_oracle() {
        // Integrate U' = −i(Σ_α Ṙ_α conj(A^{(α)}))·U along the loop in the
        // canonical frame field and compare with the overlap product.
        let f = quad();
        let theta = 0.3;
        let n_ode = 400;
        let gen_at = |t: f64| -> CMat {
            let phi = TAU * t;
            let r = point(
                fp::sin(theta) * fp::cos(phi),
                fp::sin(theta) * fp::sin(phi),
                fp::cos(theta),
            );
            let conn = connection_matrices(&f, &[2, 3], &r, None).unwrap();
            // Ṙ for the unit-speed-in-t parameterization.
            let rdot = [
                -TAU * fp::sin(theta) * fp::sin(phi),
                TAU * fp::sin(theta) * fp::cos(phi),
                0.0,
            ];
            let mut gen = CMat::zeros(2, 2);
            for alpha in 0..3 {
                gen = gen.add(&conj_mat(&conn.a[alpha]).scale(c(0.0, -rdot[alpha])));
            }
            gen
        };
        let mut u = CMat::identity(2);
        let dt = 1.0 / n_ode as f64;
        for k in 0..n_ode {
            let t0 = k as f64 * dt;
            let k1 = gen_at(t0).mul(&u);
            let k2 = gen_at(t0 + 0.5 * dt).mul(&u.add(&k1.scale(cr(0.5 * dt))));
            let k3 = gen_at(t0 + 0.5 * dt).mul(&u.add(&k2.scale(cr(0.5 * dt))));
            let k4 = gen_at(t0 + dt).mul(&u.add(&k3.scale(cr(dt))));
            u = u.add(
                &k1.add(&k2.scale(cr(2.0)))
                    .add(&k3.scale(cr(2.0)))
                    .add(&k4)
                    .scale(cr(dt / 6.0)),
            );
        }
        let circuit = cone_loop(theta, 800);
        let hol = wilson_loop(&f, &[2, 3], &circuit).unwrap();
        let dev = hol.u.sub(&u).fro_norm();
        assert!(dev < 1e-4, "ODE oracle deviates by {dev:.3e}");
    }

    #[test]
    fn gauge_covariance_identity_constant_and_varying() {
        let f = quad();
        let circuit = tilted_cone_through_pole(0.5, 160);
        let n = circuit.points.len() - 1;
        // W ≡ 1: identical holonomy.
        let ones = vec![CMat::identity(2); n];
        let rep = gauge_covariance_check(&f, &[0, 1], &circuit, &ones).unwrap();
        assert!(rep.u_remixed.sub(&rep.u).fro_norm() < 1e-13);
        // Constant random W: exact conjugation.
        let mut rng = SplitMix64::new(4242);
        let w0 = random_unitary(&mut rng);
        let constant = vec![w0.clone(); n];
        let rep = gauge_covariance_check(&f, &[0, 1], &circuit, &constant).unwrap();
        assert!(
            rep.conjugation_deviation < 1e-10,
            "conjugation deviation {:.3e}",
            rep.conjugation_deviation
        );
        assert!(rep.eigenvalue_deviation < 1e-10);
        // Smoothly varying W(R): the spectrum is still invariant.
        let varying: Vec<CMat> = (0..n)
            .map(|k| {
                let t = TAU * k as f64 / n as f64;
                let (sx, _, sz) = crate::spectral::pauli();
                let h = sz.scale(cr(0.3 * fp::cos(t))).add(&sx.scale(cr(0.2 * fp::sin(t))));
                cmat::expi_hermitian(&h, 1.0).unwrap()
            })
            .collect();
        let rep = gauge_covariance_check(&f, &[0, 1], &circuit, &varying).unwrap();
        assert!(
            rep.eigenvalue_deviation < 1e-10,
            "eigenphase deviation {:.3e}",
            rep.eigenvalue_deviation
        );
    }

    fn random_unitary(rng: &mut SplitMix64) -> CMat {
        let h = CMat::from_fn(2, 2, |_, _| c(rng.normal(), rng.normal()));
        let h = h.hermitized();
        cmat::expi_hermitian(&h, 1.0).unwrap()
    }

    #[test]
    fn wilson_determinant_has_unit_modulus() {
        let f = quad();
        let circuit = tilted_cone_through_pole(0.4, 300);
        for group in [[0usize, 1], [2, 3]] {
            let hol = wilson_loop_sampled(&f, &group, &circuit).unwrap();
            assert!(fp::abs(hol.u.det().norm() - 1.0) < 1e-10);
        }
    }
}
