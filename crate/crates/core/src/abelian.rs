//! Abelian geometric-phase machinery.
//!
//! Loop phases are evaluated with the gauge-invariant discrete overlap
//! product; the Berry connection and curvature are available for
//! diagnostics through three independent routes (finite-difference curl,
//! perturbation sum, density-matrix trace). The sign convention is pinned
//! by the spin-1/2 benchmark: the up state around a colatitude circle
//! acquires minus half the enclosed solid angle.

use alloc::vec;
use alloc::vec::Vec;

use crate::cmat::{cr, dot, normalize, vec_norm, CMat, C};
use crate::error::{Error, Result};
use crate::fp;
use crate::spectral::{
    eigendecompose, GaugeTag, HamiltonianFamily, ParameterLoop, ParameterPoint, ParameterSurface,
};
use crate::vec3::Vec3;

/// Sampled Berry connection value `A_n(R) = Im ⟨n|∇_R n⟩` (gauge-dependent;
/// the gauge tag records the rule in force).
#[derive(Debug, Clone)]
pub struct ConnectionSample {
    pub a: Vec<f64>,
    pub n: usize,
    pub r: ParameterPoint,
    pub gauge: GaugeTag,
}

/// Route used to evaluate the Berry curvature.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurvatureMethod {
    /// Curl of the finite-difference connection on a local stencil.
    FiniteDifference,
    /// Sum over intermediate levels with ∇H by central differences.
    PerturbationSum,
    /// Trace formula over the band projector (gauge-free).
    DensityMatrix,
}

/// Sampled Berry curvature vector `V_n(R)` (for 2-parameter families the
/// single independent component is stored in `v.z`).
#[derive(Debug, Clone)]
pub struct CurvatureSample {
    pub v: Vec3,
    pub n: usize,
    pub r: ParameterPoint,
    pub method: CurvatureMethod,
    /// Isolation gap of the level at `R` (diagnostic; sweeps emit it).
    pub gap: f64,
}

/// Result of a discrete-phase evaluation.
#[derive(Debug, Clone)]
pub struct PhaseResult {
    /// Principal value in (−π, π].
    pub phase: f64,
    /// Accumulated (winding-sensitive) phase; `exp(i·unwrapped) =
    /// exp(i·phase)` to 1e-12.
    pub unwrapped: f64,
    /// Number of distinct states entering the product.
    pub samples: usize,
    /// Difference against a stride-2 subsample of the same data (0 when too
    /// few samples to subsample).
    pub refinement_error: f64,
}

/// Monopole census through a closed surface.
#[derive(Debug, Clone)]
pub struct DegeneracyCensus {
    /// Total curvature flux through the surface.
    pub raw_flux: f64,
    /// `raw_flux / 2π` rounded to the nearest integer.
    pub charge: i64,
    /// `|raw_flux − 2π·charge|`.
    pub residual: f64,
}

/// Quantum-metric sample: `g_{αβ} = Re⟨∂_α n|(1−|n⟩⟨n|)|∂_β n⟩`, a symmetric
/// positive-semidefinite d×d matrix stored row-major.
#[derive(Debug, Clone)]
pub struct MetricSample {
    pub g: Vec<f64>,
    pub dim: usize,
}

impl MetricSample {
    pub fn entry(&self, alpha: usize, beta: usize) -> f64 {
        self.g[alpha * self.dim + beta]
    }
}

/// A transverse polarization state: normalized Jones vector plus intensity.
#[derive(Debug, Clone)]
pub struct PolarizationState {
    pub jones: [C; 2],
    pub intensity: f64,
}

impl PolarizationState {
    pub fn new(ex: C, ey: C) -> Result<Self> {
        let intensity = ex.norm_sqr() + ey.norm_sqr();
        if intensity <= 0.0 || !intensity.is_finite() {
            return Err(Error::domain("polarization state needs positive intensity"));
        }
        let s = 1.0 / fp::sqrt(intensity);
        Ok(PolarizationState {
            jones: [ex * cr(s), ey * cr(s)],
            intensity,
        })
    }
}

/// A point on the Poincaré sphere (unit 3-vector).
#[derive(Debug, Clone, Copy)]
pub struct PoincarePoint {
    pub e: Vec3,
}

/// Eigenstates of band `n` sampled along a parameter loop (for closed loops
/// the duplicated final point is dropped, so the list is cyclic).
pub fn loop_states(
    family: &dyn HamiltonianFamily,
    n: usize,
    lp: &ParameterLoop,
) -> Result<Vec<Vec<C>>> {
    let count = if lp.closed {
        lp.points.len() - 1
    } else {
        lp.points.len()
    };
    let mut states = Vec::with_capacity(count);
    for p in &lp.points[..count] {
        let eig = eigendecompose(family, &p.coords)?;
        eig.require_isolated(n)?;
        states.push(eig.state(n).to_vec());
    }
    Ok(states)
}

/// Discrete geometric phase of an ordered family of states.
///
/// Computes `arg[⟨ψ_0|ψ_{M−1}⟩ · Π_k ⟨ψ_{k+1}|ψ_k⟩]`. For a closed loop the
/// leading factor is the ordinary closing overlap; for an open path it is
/// the Pancharatnam closure, which makes the result the discrete open-path
/// geometric phase (zero for any two states, since geodesics carry no
/// phase). Invariant under independent per-state phase changes either way.
pub fn berry_phase_discrete(states: &[Vec<C>], closed: bool) -> Result<PhaseResult> {
    if states.len() < 2 {
        return Err(Error::invalid("need at least 2 states for a discrete phase"));
    }
    let mut samples: Vec<&[C]> = states.iter().map(|s| s.as_slice()).collect();
    if closed && states.len() >= 3 && states.first() == states.last() {
        samples.pop();
    }
    let unwrapped = overlap_product_phase(&samples)?;
    let phase = fp::principal(unwrapped);
    let refinement_error = if samples.len() >= 6 {
        let mut sub: Vec<&[C]> = samples.iter().copied().step_by(2).collect();
        if samples.len() % 2 == 0 {
            // keep the final state so open paths retain their endpoint
            sub.push(samples[samples.len() - 1]);
        }
        let coarse = fp::principal(overlap_product_phase(&sub)?);
        fp::angle_distance(phase, coarse)
    } else {
        0.0
    };
    Ok(PhaseResult {
        phase,
        unwrapped,
        samples: samples.len(),
        refinement_error,
    })
}

/// Sum of principal segment phases `arg⟨ψ_{k+1}|ψ_k⟩` plus the closing
/// factor `arg⟨ψ_0|ψ_{M−1}⟩`.
fn overlap_product_phase(samples: &[&[C]]) -> Result<f64> {
    let m = samples.len();
    let mut total = 0.0;
    for k in 0..m {
        let (i, j) = if k + 1 < m { (k + 1, k) } else { (0, m - 1) };
        let z = dot(samples[i], samples[j]);
        let scale = vec_norm(samples[i]) * vec_norm(samples[j]);
        let mag = z.norm();
        if mag <= 1e-8 * fp::max(scale, f64::MIN_POSITIVE) {
            return Err(Error::NearOrthogonalOverlap {
                index: j,
                index_next: i,
                magnitude: mag / fp::max(scale, f64::MIN_POSITIVE),
            });
        }
        total += fp::atan2(z.im, z.re);
    }
    Ok(total)
}

/// Discrete loop phase of band `n` along a parameter loop.
pub fn berry_phase_of_loop(
    family: &dyn HamiltonianFamily,
    n: usize,
    lp: &ParameterLoop,
) -> Result<PhaseResult> {
    let states = loop_states(family, n, lp)?;
    berry_phase_discrete(&states, lp.closed)
}

/// Stencil states `n(r ± h e_α)` for all α, rotated into the common-pivot
/// gauge of the center state (the center's largest-modulus component index
/// is made real-positive in every stencil member). Returns
/// `(center, plus[α], minus[α], isolation gap at center)`.
fn common_pivot_stencil(
    family: &dyn HamiltonianFamily,
    n: usize,
    r: &[f64],
    h: f64,
) -> Result<(Vec<C>, Vec<Vec<C>>, Vec<Vec<C>>, f64)> {
    let d = family.param_dim();
    let eig = eigendecompose(family, r)?;
    eig.require_isolated(n)?;
    let center = eig.state(n).to_vec();
    let gap = eig.isolation(n);
    let mut pivot = 0usize;
    let mut best = 0.0;
    for (i, x) in center.iter().enumerate() {
        let m = x.norm();
        if m > best {
            best = m;
            pivot = i;
        }
    }
    let mut plus = Vec::with_capacity(d);
    let mut minus = Vec::with_capacity(d);
    for alpha in 0..d {
        for sign in [1.0, -1.0] {
            let mut rp = r.to_vec();
            rp[alpha] += sign * h;
            if rp[alpha] == r[alpha] {
                return Err(Error::StepUnderflow {
                    step: h,
                    context: "finite-difference stencil",
                });
            }
            let e = eigendecompose(family, &rp)?;
            e.require_isolated(n)?;
            let mut st = e.state(n).to_vec();
            let z = st[pivot];
            let m = z.norm();
            if m < 1e-8 {
                return Err(Error::Numerical {
                    detail: alloc::format!(
                        "gauge pivot component vanished across the stencil (|c| = {m:.2e})"
                    ),
                });
            }
            let rot = z.conj() / cr(m);
            for x in st.iter_mut() {
                *x *= rot;
            }
            if sign > 0.0 {
                plus.push(st);
            } else {
                minus.push(st);
            }
        }
    }
    Ok((center, plus, minus, gap))
}

/// Berry connection `A_n(R)` by gauge-matched central differences.
pub fn berry_connection_fd(
    family: &dyn HamiltonianFamily,
    n: usize,
    r: &[f64],
    step: f64,
) -> Result<ConnectionSample> {
    if !(step > 0.0) {
        return Err(Error::invalid("finite-difference step must be positive"));
    }
    let d = family.param_dim();
    let (center, plus, minus, _gap) = common_pivot_stencil(family, n, r, step)?;
    let mut a = Vec::with_capacity(d);
    for alpha in 0..d {
        let mut deriv = 0.0;
        for i in 0..center.len() {
            let diff = (plus[alpha][i] - minus[alpha][i]) / cr(2.0 * step);
            deriv += (center[i].conj() * diff).im;
        }
        a.push(deriv);
    }
    Ok(ConnectionSample {
        a,
        n,
        r: ParameterPoint::new(r.to_vec()),
        gauge: GaugeTag::LargestComponentRealPositive,
    })
}

/// Richardson-extrapolated connection: combines steps `h` and `h/2` to
/// cancel the leading O(h²) error.
pub fn berry_connection_richardson(
    family: &dyn HamiltonianFamily,
    n: usize,
    r: &[f64],
    step: f64,
) -> Result<ConnectionSample> {
    let coarse = berry_connection_fd(family, n, r, step)?;
    let fine = berry_connection_fd(family, n, r, step / 2.0)?;
    let a = fine
        .a
        .iter()
        .zip(coarse.a.iter())
        .map(|(f, cse)| (4.0 * f - cse) / 3.0)
        .collect();
    Ok(ConnectionSample { a, ..fine })
}

/// Norm estimate of the parameter gradient of H at `r` (largest Frobenius
/// norm over directions), used to convert gaps into a distance scale.
pub(crate) fn grad_h_scale(family: &dyn HamiltonianFamily, r: &[f64], h: f64) -> f64 {
    let mut worst = 0.0;
    for alpha in 0..family.param_dim() {
        let mut rp = r.to_vec();
        let mut rm = r.to_vec();
        rp[alpha] += h;
        rm[alpha] -= h;
        let g = family
            .eval(&rp)
            .sub(&family.eval(&rm))
            .scale(cr(1.0 / (2.0 * h)));
        worst = fp::max(worst, g.fro_norm());
    }
    worst
}

/// Distance-to-degeneracy estimate `ℓ = min(coordinate scale, gap/‖∇H‖)`
/// used to scale finite-difference stencils.
fn degeneracy_distance(family: &dyn HamiltonianFamily, n: usize, r: &[f64]) -> Result<f64> {
    let coord = 1.0 + r.iter().fold(0.0, |m: f64, &x| m.max(fp::abs(x)));
    let eig = eigendecompose(family, r)?;
    eig.require_isolated(n)?;
    let gap = eig.isolation(n);
    let dh = fp::max(grad_h_scale(family, r, 1e-4 * coord), f64::MIN_POSITIVE);
    Ok(fp::min(coord, gap / dh))
}

/// Berry curvature vector of band `n` at `r` by the requested route.
///
/// `step = None` picks gap-adaptive stencil scales. For 2-parameter
/// families the single component Ω_xy is returned in `v.z`.
pub fn berry_curvature(
    family: &dyn HamiltonianFamily,
    n: usize,
    r: &[f64],
    method: CurvatureMethod,
    step: Option<f64>,
) -> Result<CurvatureSample> {
    let d = family.param_dim();
    if d != 2 && d != 3 {
        return Err(Error::invalid(
            "curvature vector defined for 2- or 3-parameter families",
        ));
    }
    let eig = eigendecompose(family, r)?;
    eig.require_isolated(n)?;
    let gap = eig.isolation(n);
    let ell = match step {
        Some(s) if s > 0.0 => s,
        Some(_) => return Err(Error::invalid("step must be positive")),
        None => degeneracy_distance(family, n, r)?,
    };
    // Richardson-extrapolated differences tolerate a generous base step,
    // which keeps the double-difference rounding noise far below 1e-6.
    let h_inner = match step {
        Some(s) => s,
        None => 5e-6 * ell,
    };
    let h_outer = 1e-3 * ell;
    // Independent 2-form components as (α, β) pairs mapped onto the vector:
    // V_x = Ω_yz, V_y = Ω_zx, V_z = Ω_xy (d=3); V_z = Ω_xy (d=2).
    let pairs: &[(usize, usize, usize)] = if d == 3 {
        &[(1, 2, 0), (2, 0, 1), (0, 1, 2)]
    } else {
        &[(0, 1, 2)]
    };
    let mut v = Vec3::ZERO;
    match method {
        CurvatureMethod::FiniteDifference => {
            // curl of the connection, Ω_αβ = ∂_α A_β − ∂_β A_α, with
            // Richardson extrapolation on both the connection stencil and
            // the outer derivative
            let h_conn = 1e-3 * ell;
            let curl_at = |h: f64| -> Result<Vec3> {
                let mut conn_p: Vec<Vec<f64>> = Vec::with_capacity(d);
                let mut conn_m: Vec<Vec<f64>> = Vec::with_capacity(d);
                for alpha in 0..d {
                    let mut rp = r.to_vec();
                    let mut rm = r.to_vec();
                    rp[alpha] += h;
                    rm[alpha] -= h;
                    if rp[alpha] == r[alpha] || rm[alpha] == r[alpha] {
                        return Err(Error::StepUnderflow {
                            step: h,
                            context: "curvature curl stencil",
                        });
                    }
                    conn_p.push(berry_connection_richardson(family, n, &rp, h_conn)?.a);
                    conn_m.push(berry_connection_richardson(family, n, &rm, h_conn)?.a);
                }
                let mut out = Vec3::ZERO;
                for &(alpha, beta, slot) in pairs {
                    let omega = (conn_p[alpha][beta] - conn_m[alpha][beta]) / (2.0 * h)
                        - (conn_p[beta][alpha] - conn_m[beta][alpha]) / (2.0 * h);
                    set_component(&mut out, slot, omega);
                }
                Ok(out)
            };
            let coarse = curl_at(h_outer)?;
            let fine = curl_at(h_outer / 2.0)?;
            v = (fine * 4.0 - coarse) * (1.0 / 3.0);
        }
        CurvatureMethod::PerturbationSum => {
            let dim = family.dim();
            let states = &eig.states;
            // matrix elements ⟨m|∂_αH|n'⟩ in the eigenbasis
            let mut grads: Vec<CMat> = Vec::with_capacity(d);
            for alpha in 0..d {
                let mut rp = r.to_vec();
                let mut rm = r.to_vec();
                rp[alpha] += h_inner;
                rm[alpha] -= h_inner;
                if rp[alpha] == r[alpha] {
                    return Err(Error::StepUnderflow {
                        step: h_inner,
                        context: "gradient stencil",
                    });
                }
                let g = family
                    .eval(&rp)
                    .sub(&family.eval(&rm))
                    .scale(cr(1.0 / (2.0 * h_inner)));
                grads.push(states.adjoint().mul(&g).mul(states));
            }
            for &(alpha, beta, slot) in pairs {
                let mut omega = 0.0;
                for m in 0..dim {
                    if m == n {
                        continue;
                    }
                    let de = eig.energies[n] - eig.energies[m];
                    let t = grads[alpha][(n, m)] * grads[beta][(m, n)];
                    omega += 2.0 * t.im / (de * de);
                }
                set_component(&mut v, slot, omega);
            }
        }
        CurvatureMethod::DensityMatrix => {
            // Ω_αβ = Im Tr(ρ [∂_αρ, ∂_βρ]) with ρ the band projector
            let dim = family.dim();
            let st = eig.state(n);
            let mut rho = CMat::zeros(dim, dim);
            for i in 0..dim {
                for j in 0..dim {
                    rho[(i, j)] = st[i] * st[j].conj();
                }
            }
            let mut drho: Vec<CMat> = Vec::with_capacity(d);
            for alpha in 0..d {
                let mut rp = r.to_vec();
                let mut rm = r.to_vec();
                rp[alpha] += h_inner;
                rm[alpha] -= h_inner;
                if rp[alpha] == r[alpha] {
                    return Err(Error::StepUnderflow {
                        step: h_inner,
                        context: "gradient stencil",
                    });
                }
                drho.push(
                    band_projector(family, n, &rp)?
                        .sub(&band_projector(family, n, &rm)?)
                        .scale(cr(1.0 / (2.0 * h_inner))),
                );
            }
            for &(alpha, beta, slot) in pairs {
                let t = rho.mul(&drho[alpha]).mul(&drho[beta]).trace();
                set_component(&mut v, slot, 2.0 * t.im);
            }
        }
    }
    Ok(CurvatureSample {
        v,
        n,
        r: ParameterPoint::new(r.to_vec()),
        method,
        gap,
    })
}

fn set_component(v: &mut Vec3, slot: usize, value: f64) {
    match slot {
        0 => v.x = value,
        1 => v.y = value,
        _ => v.z = value,
    }
}

/// Gauge-invariant band projector |n⟩⟨n| at `r`.
fn band_projector(family: &dyn HamiltonianFamily, n: usize, r: &[f64]) -> Result<CMat> {
    let eig = eigendecompose(family, r)?;
    eig.require_isolated(n)?;
    let st = eig.state(n);
    let dim = st.len();
    let mut rho = CMat::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            rho[(i, j)] = st[i] * st[j].conj();
        }
    }
    Ok(rho)
}

/// Count the degeneracy charge of band `n` enclosed by a watertight surface:
/// total curvature flux via per-triangle centroid quadrature, refined until
/// the residual against `2π·charge` drops below 0.05·2π.
pub fn degeneracy_census(
    family: &dyn HamiltonianFamily,
    n: usize,
    surface: &ParameterSurface,
) -> Result<DegeneracyCensus> {
    if family.param_dim() != 3 {
        return Err(Error::invalid("census requires a 3-parameter family"));
    }
    surface.validate()?;
    let mut mesh = surface.quadrisected();
    for extra in 0..4 {
        let mut raw_flux = 0.0;
        for t in &mesh.triangles {
            let a = mesh.vertices[t[0]];
            let b = mesh.vertices[t[1]];
            let cc = mesh.vertices[t[2]];
            let centroid = (a + b + cc) * (1.0 / 3.0);
            let area = (b - a).cross(cc - a) * 0.5;
            let sample = berry_curvature(
                family,
                n,
                &[centroid.x, centroid.y, centroid.z],
                CurvatureMethod::PerturbationSum,
                None,
            )?;
            raw_flux += sample.v.dot(area);
        }
        let charge = fp::round(raw_flux / fp::TAU) as i64;
        let residual = fp::abs(raw_flux - fp::TAU * charge as f64);
        if residual <= 0.05 * fp::TAU {
            return Ok(DegeneracyCensus {
                raw_flux,
                charge,
                residual,
            });
        }
        if extra < 3 {
            mesh = mesh.quadrisected();
        } else {
            return Err(Error::CensusNotConverged {
                residual: residual / fp::TAU,
                levels: extra + 1,
            });
        }
    }
    unreachable!()
}

/// Quantum metric of band `n` at `r` by gauge-matched central differences.
pub fn quantum_metric(
    family: &dyn HamiltonianFamily,
    n: usize,
    r: &[f64],
    step: f64,
) -> Result<MetricSample> {
    if !(step > 0.0) {
        return Err(Error::invalid("finite-difference step must be positive"));
    }
    let d = family.param_dim();
    let (center, plus, minus, _gap) = common_pivot_stencil(family, n, r, step)?;
    let dim = center.len();
    // projected derivative (1 − |n⟩⟨n|) ∂_α n
    let mut derivs: Vec<Vec<C>> = Vec::with_capacity(d);
    for alpha in 0..d {
        let mut dv: Vec<C> = (0..dim)
            .map(|i| (plus[alpha][i] - minus[alpha][i]) / cr(2.0 * step))
            .collect();
        let overlap = dot(&center, &dv);
        for i in 0..dim {
            dv[i] -= center[i] * overlap;
        }
        derivs.push(dv);
    }
    let mut g = vec![0.0; d * d];
    for alpha in 0..d {
        for beta in alpha..d {
            let val = dot(&derivs[alpha], &derivs[beta]).re;
            g[alpha * d + beta] = val;
            g[beta * d + alpha] = val;
        }
    }
    // exact symmetry by construction; verify positive semidefiniteness
    let mut gm = CMat::zeros(d, d);
    for alpha in 0..d {
        for beta in 0..d {
            gm[(alpha, beta)] = cr(g[alpha * d + beta]);
        }
    }
    let scale = fp::max(gm.max_abs(), 1.0);
    let eigs = crate::cmat::eigh(&gm)?;
    if eigs.values[0] < -1e-12 * scale {
        return Err(Error::Numerical {
            detail: alloc::format!(
                "metric lost positive semidefiniteness (λ_min = {:.3e})",
                eigs.values[0]
            ),
        });
    }
    Ok(MetricSample { g, dim: d })
}

/// Point on the constant-speed geodesic between two rays at parameter
/// `s ∈ [0, 1]`: `cos(sθ)|ψ0⟩ + sin(sθ)|ψ0^⊥⟩` with `θ = arccos|⟨ψ0|ψ1⟩|`.
pub fn geodesic_states(psi0: &[C], psi1: &[C], s: f64) -> Result<Vec<C>> {
    if psi0.len() != psi1.len() {
        return Err(Error::invalid("geodesic endpoints must share a dimension"));
    }
    let mut a = psi0.to_vec();
    let mut b = psi1.to_vec();
    normalize(&mut a);
    normalize(&mut b);
    let z = dot(&a, &b);
    let mag = z.norm();
    if mag <= 1e-12 {
        return Err(Error::NonUniqueGeodesic { magnitude: mag });
    }
    // phase-align ψ1 so the overlap is real positive
    let rot = z.conj() / cr(mag);
    for x in b.iter_mut() {
        *x *= rot;
    }
    let theta = fp::acos(fp::min(mag, 1.0));
    // orthogonal component of the aligned ψ1
    let mut perp: Vec<C> = (0..a.len()).map(|i| b[i] - a[i] * cr(mag)).collect();
    let pn = vec_norm(&perp);
    if pn > 1e-12 {
        for x in perp.iter_mut() {
            *x /= cr(pn);
        }
    } else {
        for x in perp.iter_mut() {
            *x = cr(0.0);
        }
    }
    let (cs, sn) = (fp::cos(s * theta), fp::sin(s * theta));
    let mut out: Vec<C> = (0..a.len()).map(|i| a[i] * cr(cs) + perp[i] * cr(sn)).collect();
    normalize(&mut out);
    Ok(out)
}

/// Map a polarization state onto the Poincaré sphere.
///
/// `e = (⟨σz⟩, ⟨σx⟩, −⟨σy⟩)`: circular polarizations sit at the poles,
/// linear ones on the equator, orthogonal Jones vectors map to antipodes,
/// and the handedness flip in the last component makes the Pancharatnam
/// triangle phase equal minus half the (ccw-positive) solid angle of the
/// mapped triangle.
pub fn poincare_point(p: &PolarizationState) -> PoincarePoint {
    let [ex, ey] = p.jones;
    let sz = ex.norm_sqr() - ey.norm_sqr();
    let cross = ex.conj() * ey;
    let sx = 2.0 * cross.re;
    let sy = 2.0 * cross.im;
    PoincarePoint {
        e: Vec3::new(sz, sx, -sy),
    }
}

/// Pancharatnam relative phase `arg⟨A|B⟩` between two polarizations.
pub fn pancharatnam_relative_phase(a: &PolarizationState, b: &PolarizationState) -> Result<f64> {
    let z = dot(&a.jones, &b.jones);
    if z.norm() <= 1e-8 {
        return Err(Error::UndefinedPhase { magnitude: z.norm() });
    }
    Ok(fp::atan2(z.im, z.re))
}

/// Solid angle of a closed spherical polygon of directions, positive for
/// counterclockwise traversal as seen from outside (a duplicated final
/// vertex is ignored). The representative returned is the positively
/// enclosed area: a clockwise loop reports `4π − |Ω|`, the mod-4π
/// equivalent of `−|Ω|` (indistinguishable to every phase factor
/// `e^{−iΩ/2}` and every mod-2π holonomy deficit). Planar loops through
/// the origin give 2π per winding; a doubly-traversed great circle gives
/// 4π.
pub fn solid_angle_of_loop(dirs: &[Vec3]) -> Result<f64> {
    let mut v: Vec<Vec3> = Vec::with_capacity(dirs.len());
    for d in dirs {
        let n = d.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::domain("solid angle needs nonzero direction vectors"));
        }
        v.push(*d * (1.0 / n));
    }
    if v.len() >= 2 && (v[0] - v[v.len() - 1]).norm() == 0.0 {
        v.pop();
    }
    if v.len() < 3 {
        return Err(Error::invalid("a spherical polygon needs at least 3 vertices"));
    }
    let m = v.len();
    let mut axis = Vec3::ZERO;
    let mut cross_sum = 0.0;
    for k in 0..m {
        let a = v[k];
        let b = v[(k + 1) % m];
        if a.dot(b) <= -1.0 + 1e-10 {
            return Err(Error::AntipodalSegment {
                index: k,
                index_next: (k + 1) % m,
            });
        }
        let cx = a.cross(b);
        axis = axis + cx;
        cross_sum += cx.norm();
    }
    let apex = if axis.norm() > 1e-12 * fp::max(cross_sum, f64::MIN_POSITIVE) {
        axis.normalized()
    } else {
        v[0]
    };
    // fan of spherical triangles (apex, v_k, v_{k+1}), each by the
    // tan-half-angle formula, summed with sign
    let mut total = 0.0;
    for k in 0..m {
        let a = v[k];
        let b = v[(k + 1) % m];
        let num = apex.dot(a.cross(b));
        let den = 1.0 + apex.dot(a) + a.dot(b) + b.dot(apex);
        if num == 0.0 && den == 0.0 {
            return Err(Error::AntipodalSegment {
                index: k,
                index_next: (k + 1) % m,
            });
        }
        total += 2.0 * fp::atan2(num, den);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cmat::c;
    use crate::fp::{PI, TAU};
    use crate::rng::SplitMix64;
    use crate::spectral::{
        pauli, RandomLinearFamily, RealSymmetricPlanar, TwoStateLinear, Zeeman,
    };
    use crate::vec3::Mat3;

    fn spin_up_loop(theta0: f64, n: usize) -> ParameterLoop {
        ParameterLoop::from_curve(
            |s| {
                let phi = TAU * s;
                ParameterPoint::from(Vec3::from_spherical(1.0, theta0, phi))
            },
            n,
        )
        .unwrap()
    }

    #[test]
    fn spin_half_cone_phase_is_minus_half_solid_angle() {
        let fam = Zeeman { mu: 1.0 };
        let lp = spin_up_loop(PI / 3.0, 400);
        let res = berry_phase_of_loop(&fam, 1, &lp).unwrap();
        let expect = -PI * (1.0 - fp::cos(PI / 3.0)); // = −π/2
        assert!(
            (res.phase - expect).abs() < 1e-4,
            "phase {} vs {}",
            res.phase,
            expect
        );
        assert!(res.refinement_error < 1e-3);
        // principal/unwrapped consistency
        let diff = fp::abs(
            C::from_polar(1.0, res.phase).re - C::from_polar(1.0, res.unwrapped).re,
        ) + fp::abs(
            C::from_polar(1.0, res.phase).im - C::from_polar(1.0, res.unwrapped).im,
        );
        assert!(diff < 1e-12);
    }

    #[test]
    fn discrete_phase_of_two_states_is_zero() {
        let mut rng = SplitMix64::new(11);
        for _ in 0..20 {
            let a: Vec<C> = (0..3).map(|_| c(rng.normal(), rng.normal())).collect();
            let b: Vec<C> = (0..3).map(|_| c(rng.normal(), rng.normal())).collect();
            let mut a = a;
            let mut b = b;
            normalize(&mut a);
            normalize(&mut b);
            if dot(&a, &b).norm() < 1e-3 {
                continue;
            }
            let res = berry_phase_discrete(&[a, b], false).unwrap();
            assert!(res.phase.abs() < 1e-12);
        }
    }

    #[test]
    fn discrete_phase_is_gauge_invariant() {
        let fam = Zeeman { mu: 2.0 };
        let lp = spin_up_loop(1.0, 60);
        let states = loop_states(&fam, 1, &lp).unwrap();
        let base = berry_phase_discrete(&states, true).unwrap().phase;
        let mut rng = SplitMix64::new(5);
        let rotated: Vec<Vec<C>> = states
            .iter()
            .map(|s| {
                let chi = rng.range(0.0, TAU);
                s.iter().map(|x| x * C::from_polar(1.0, chi)).collect()
            })
            .collect();
        let re = berry_phase_discrete(&rotated, true).unwrap().phase;
        assert!((base - re).abs() < 1e-12);
    }

    #[test]
    fn near_orthogonal_overlap_names_the_offending_pair() {
        let e0 = vec![cr(1.0), cr(0.0)];
        let e1 = vec![cr(0.0), cr(1.0)];
        let err = berry_phase_discrete(&[e0.clone(), e1, e0], true).unwrap_err();
        match err {
            Error::NearOrthogonalOverlap { index, index_next, .. } => {
                assert_eq!((index, index_next), (0, 1));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn zeeman_connection_matches_monopole_form() {
        // at θ = π/2, φ = 0, R = 1 the up-state connection is ½ φ̂ = ½ ŷ
        let fam = Zeeman { mu: 1.0 };
        let s = berry_connection_fd(&fam, 1, &[1.0, 0.0, 0.0], 1e-5).unwrap();
        assert!(s.a[0].abs() < 1e-8);
        assert!((s.a[1] - 0.5).abs() < 1e-8, "A_y = {}", s.a[1]);
        assert!(s.a[2].abs() < 1e-8);
    }

    #[test]
    fn real_symmetric_family_has_vanishing_connection() {
        let fam = RealSymmetricPlanar;
        for r in [[0.7, 0.3], [-0.4, 1.1], [0.05, -0.9]] {
            let s = berry_connection_fd(&fam, 0, &r, 1e-6).unwrap();
            assert!(s.a[0].abs() < 1e-12 && s.a[1].abs() < 1e-12);
        }
    }

    #[test]
    fn richardson_connection_converges_faster_than_plain() {
        let fam = RandomLinearFamily::new(3, 31);
        let r = [0.4, 0.2, -0.6];
        let exact = berry_connection_richardson(&fam, 0, &r, 1e-4).unwrap().a;
        let coarse = berry_connection_fd(&fam, 0, &r, 1e-2).unwrap().a;
        let fine = berry_connection_fd(&fam, 0, &r, 5e-3).unwrap().a;
        // O(h²): quartering of the error under halving
        for k in 0..3 {
            let e_c = (coarse[k] - exact[k]).abs();
            let e_f = (fine[k] - exact[k]).abs();
            if e_c > 1e-9 {
                let ratio = e_c / e_f.max(1e-300);
                assert!(ratio > 3.0 && ratio < 5.0, "ratio {ratio}");
            }
        }
    }

    #[test]
    fn zeeman_curvature_is_a_monopole_field_for_all_methods() {
        let fam = Zeeman { mu: 1.3 };
        let r = Vec3::new(0.5, -0.7, 0.6);
        let expect_up = r.normalized() * (0.5 / r.dot(r));
        for method in [
            CurvatureMethod::FiniteDifference,
            CurvatureMethod::PerturbationSum,
            CurvatureMethod::DensityMatrix,
        ] {
            let up = berry_curvature(&fam, 1, &[r.x, r.y, r.z], method, None).unwrap();
            let dn = berry_curvature(&fam, 0, &[r.x, r.y, r.z], method, None).unwrap();
            assert!(
                (up.v - expect_up).norm() < 1e-6 * expect_up.norm(),
                "{method:?}: {:?} vs {:?}",
                up.v,
                expect_up
            );
            assert!((dn.v + expect_up).norm() < 1e-6 * expect_up.norm());
        }
    }

    #[test]
    fn curvature_methods_agree_on_a_random_four_level_family() {
        let fam = RandomLinearFamily::new(4, 1234);
        let mut rng = SplitMix64::new(77);
        let mut tested = 0;
        while tested < 6 {
            let r = [rng.range(-1.0, 1.0), rng.range(-1.0, 1.0), rng.range(-1.0, 1.0)];
            let eig = eigendecompose(&fam, &r).unwrap();
            let n = 1;
            if eig.isolation(n) < 0.2 * eig.spectral_range() {
                continue;
            }
            tested += 1;
            let fd = berry_curvature(&fam, n, &r, CurvatureMethod::FiniteDifference, None)
                .unwrap()
                .v;
            let ps = berry_curvature(&fam, n, &r, CurvatureMethod::PerturbationSum, None)
                .unwrap()
                .v;
            let dm = berry_curvature(&fam, n, &r, CurvatureMethod::DensityMatrix, None)
                .unwrap()
                .v;
            let scale = ps.norm().max(1e-12);
            assert!((fd - ps).norm() / scale < 1e-6, "fd {fd:?} ps {ps:?}");
            assert!((dm - ps).norm() / scale < 1e-6, "dm {dm:?} ps {ps:?}");
        }
    }

    #[test]
    fn curvature_sum_rule_over_complete_basis() {
        let fam = RandomLinearFamily::new(4, 555);
        let r = [0.3, 0.9, -0.2];
        let mut total = Vec3::ZERO;
        let mut scale = 0.0f64;
        for n in 0..4 {
            let s = berry_curvature(&fam, n, &r, CurvatureMethod::PerturbationSum, None).unwrap();
            total = total + s.v;
            scale = scale.max(s.v.norm());
        }
        assert!(total.norm() < 1e-8 * scale.max(1.0), "sum {total:?}");
    }

    #[test]
    fn census_counts_the_zeeman_monopole() {
        let fam = Zeeman { mu: 1.0 };
        let sphere = ParameterSurface::icosphere(Vec3::ZERO, 1.0, 1);
        let census = degeneracy_census(&fam, 1, &sphere).unwrap();
        assert_eq!(census.charge, 1);
        assert!((census.raw_flux - TAU).abs() <= 0.05 * TAU);
        assert!(census.residual <= 0.05 * TAU);
        let lower = degeneracy_census(&fam, 0, &sphere).unwrap();
        assert_eq!(lower.charge, -1);
    }

    #[test]
    fn census_is_zero_without_an_enclosed_degeneracy() {
        let fam = Zeeman { mu: 1.0 };
        let sphere = ParameterSurface::icosphere(Vec3::new(3.0, 0.0, 0.0), 1.0, 1);
        let census = degeneracy_census(&fam, 1, &sphere).unwrap();
        assert_eq!(census.charge, 0);
        assert!(census.residual <= 0.05 * TAU);
    }

    #[test]
    fn census_charge_flips_with_field_orientation() {
        let fam = TwoStateLinear {
            m: Mat3::from_rows(
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
                Vec3::new(0.0, 0.0, -1.0),
            ),
        };
        let sphere = ParameterSurface::icosphere(Vec3::ZERO, 1.0, 1);
        let census = degeneracy_census(&fam, 1, &sphere).unwrap();
        assert_eq!(census.charge, -1);
    }

    #[test]
    fn quantum_metric_of_spin_half_is_the_round_sphere() {
        let fam = Zeeman { mu: 0.8 };
        let mut rng = SplitMix64::new(2024);
        for _ in 0..5 {
            let r = Vec3::new(rng.normal(), rng.normal(), rng.normal());
            if r.norm() < 0.3 {
                continue;
            }
            let g = quantum_metric(&fam, 1, &[r.x, r.y, r.z], 1e-5).unwrap();
            let rhat = r.normalized();
            let scale = 1.0 / (4.0 * r.dot(r));
            for alpha in 0..3 {
                for beta in 0..3 {
                    let expect = scale
                        * ((if alpha == beta { 1.0 } else { 0.0 })
                            - rhat.get(alpha) * rhat.get(beta));
                    assert!(
                        (g.entry(alpha, beta) - expect).abs() < 1e-7,
                        "g[{alpha}{beta}] = {} vs {}",
                        g.entry(alpha, beta),
                        expect
                    );
                }
            }
        }
    }

    #[test]
    fn quantum_metric_ignores_flat_directions() {
        // family constant in the second parameter
        let (sx, _sy, sz) = pauli();
        let fam = crate::spectral::FnFamily {
            dim: 2,
            param_dim: 2,
            label: "flat-y",
            f: move |r: &[f64]| sz.scale(cr(r[0])).add(&sx.scale(cr(0.7))),
        };
        let g = quantum_metric(&fam, 0, &[0.4, 0.9], 1e-5).unwrap();
        assert_eq!(g.entry(0, 1), 0.0);
        assert_eq!(g.entry(1, 0), 0.0);
        assert_eq!(g.entry(1, 1), 0.0);
        assert!(g.entry(0, 0) > 0.0);
    }

    #[test]
    fn geodesic_reproduces_endpoints_and_carries_no_phase() {
        let mut rng = SplitMix64::new(8);
        for _ in 0..10 {
            let mut a: Vec<C> = (0..4).map(|_| c(rng.normal(), rng.normal())).collect();
            let mut b: Vec<C> = (0..4).map(|_| c(rng.normal(), rng.normal())).collect();
            normalize(&mut a);
            normalize(&mut b);
            if dot(&a, &b).norm() < 0.1 {
                continue;
            }
            let start = geodesic_states(&a, &b, 0.0).unwrap();
            let end = geodesic_states(&a, &b, 1.0).unwrap();
            assert!(dot(&start, &a).norm() > 1.0 - 1e-12);
            assert!(dot(&end, &b).norm() > 1.0 - 1e-12);
            // consecutive overlaps along the geodesic are real positive
            let path: Vec<Vec<C>> = (0..=20)
                .map(|k| geodesic_states(&a, &b, k as f64 / 20.0).unwrap())
                .collect();
            for w in path.windows(2) {
                let z = dot(&w[0], &w[1]);
                assert!(z.im.abs() < 1e-12 && z.re > 0.0);
            }
        }
    }

    #[test]
    fn geodesic_between_orthogonal_states_is_refused() {
        let a = vec![cr(1.0), cr(0.0)];
        let b = vec![cr(0.0), cr(1.0)];
        assert!(matches!(
            geodesic_states(&a, &b, 0.5),
            Err(Error::NonUniqueGeodesic { .. })
        ));
    }

    #[test]
    fn open_path_phase_equals_geodesically_closed_loop_phase() {
        let fam = Zeeman { mu: 1.0 };
        // open arc: quarter of the θ0-cone
        let theta0 = 1.1;
        let arc: Vec<Vec<C>> = (0..=40)
            .map(|k| {
                let phi = 0.25 * TAU * k as f64 / 40.0;
                let r = Vec3::from_spherical(1.0, theta0, phi);
                let eig = eigendecompose(&fam, &[r.x, r.y, r.z]).unwrap();
                eig.state(1).to_vec()
            })
            .collect();
        let open = berry_phase_discrete(&arc, false).unwrap().phase;
        let mut closed_states = arc.clone();
        let last = arc.last().unwrap().clone();
        let first = arc[0].clone();
        for k in 1..40 {
            closed_states.push(geodesic_states(&last, &first, k as f64 / 40.0).unwrap());
        }
        let closed = berry_phase_discrete(&closed_states, true).unwrap().phase;
        assert!((open - closed).abs() < 1e-9, "{open} vs {closed}");
    }

    #[test]
    fn poincare_map_places_the_standard_polarizations() {
        let circ = PolarizationState::new(cr(1.0 / fp::sqrt(2.0)), c(0.0, 1.0 / fp::sqrt(2.0)))
            .unwrap();
        let e = poincare_point(&circ).e;
        assert!((e.norm() - 1.0).abs() < 1e-12);
        assert!(e.x.abs() < 1e-12 && e.y.abs() < 1e-12 && (e.z + 1.0).abs() < 1e-12);
        let lin = PolarizationState::new(cr(1.0), cr(0.0)).unwrap();
        let e = poincare_point(&lin).e;
        assert!(e.z.abs() < 1e-12 && (e.x - 1.0).abs() < 1e-12);
        // orthogonal polarizations are antipodal
        let mut rng = SplitMix64::new(3);
        for _ in 0..20 {
            let a = c(rng.normal(), rng.normal());
            let b = c(rng.normal(), rng.normal());
            let p = PolarizationState::new(a, b).unwrap();
            let q = PolarizationState::new(-b.conj(), a.conj()).unwrap();
            let s = poincare_point(&p).e + poincare_point(&q).e;
            assert!(s.norm() < 1e-12);
        }
    }

    #[test]
    fn pancharatnam_triangle_phase_is_minus_half_the_solid_angle() {
        // octant worked example
        let a = PolarizationState::new(cr(1.0), cr(0.0)).unwrap();
        let b = PolarizationState::new(cr(1.0 / fp::sqrt(2.0)), c(0.0, 1.0 / fp::sqrt(2.0)))
            .unwrap();
        let cc = PolarizationState::new(cr(1.0 / fp::sqrt(2.0)), cr(1.0 / fp::sqrt(2.0)))
            .unwrap();
        let tri = dot(&a.jones, &b.jones) * dot(&b.jones, &cc.jones) * dot(&cc.jones, &a.jones);
        let phase = fp::atan2(tri.im, tri.re);
        assert!((phase + PI / 4.0).abs() < 1e-12, "phase {phase}");
        let omega = solid_angle_of_loop(&[
            poincare_point(&a).e,
            poincare_point(&b).e,
            poincare_point(&cc).e,
        ])
        .unwrap();
        assert!((omega - PI / 2.0).abs() < 1e-12, "omega {omega}");
        assert!((phase + 0.5 * omega).abs() < 1e-12);
        // random triangles
        let mut rng = SplitMix64::new(88);
        for _ in 0..30 {
            let mk = |rng: &mut SplitMix64| {
                PolarizationState::new(c(rng.normal(), rng.normal()), c(rng.normal(), rng.normal()))
                    .unwrap()
            };
            let (p, q, s) = (mk(&mut rng), mk(&mut rng), mk(&mut rng));
            let z = dot(&p.jones, &q.jones) * dot(&q.jones, &s.jones) * dot(&s.jones, &p.jones);
            if z.norm() < 1e-3 {
                continue;
            }
            let phase = fp::atan2(z.im, z.re);
            let omega = solid_angle_of_loop(&[
                poincare_point(&p).e,
                poincare_point(&q).e,
                poincare_point(&s).e,
            ])
            .unwrap();
            assert!(
                fp::angle_distance(phase, -0.5 * omega) < 1e-6,
                "phase {phase} omega {omega}"
            );
        }
    }

    #[test]
    fn relative_phase_basics() {
        let a = PolarizationState::new(cr(0.6), c(0.0, 0.8)).unwrap();
        assert_eq!(pancharatnam_relative_phase(&a, &a).unwrap(), 0.0);
        let b = PolarizationState::new(c(0.0, 0.8), cr(-0.6)).unwrap();
        // ⟨a|b⟩ = 0.6·(0.8i) + (−0.8i)·(−0.6) = 0.96i → orthogonal? no: 0.48i+0.48i
        let z = dot(&a.jones, &b.jones);
        assert!(z.norm() > 1e-8);
        let phase = pancharatnam_relative_phase(&a, &b).unwrap();
        assert!((phase - fp::atan2(z.im, z.re)).abs() < 1e-15);
        let orth = PolarizationState::new(c(0.0, 0.8), cr(0.6)).unwrap();
        assert!(matches!(
            pancharatnam_relative_phase(&a, &orth),
            Err(Error::UndefinedPhase { .. })
        ));
    }

    #[test]
    fn solid_angle_octant_and_orientation() {
        let x = Vec3::new(1.0, 0.0, 0.0);
        let y = Vec3::new(0.0, 1.0, 0.0);
        let z = Vec3::new(0.0, 0.0, 1.0);
        let o = solid_angle_of_loop(&[x, y, z]).unwrap();
        assert!((o - PI / 2.0).abs() < 1e-12);
        // reversal encloses the complement positively: 4π − π/2, the
        // mod-4π equivalent of −π/2 (all phase consumers see e^{−iΩ/2})
        let rev = solid_angle_of_loop(&[z, y, x]).unwrap();
        assert!((rev - (4.0 * PI - PI / 2.0)).abs() < 1e-12, "rev {rev}");
    }

    #[test]
    fn solid_angle_of_colatitude_circles() {
        for theta0 in [0.3, PI / 3.0, 1.8] {
            let n = 4000;
            let dirs: Vec<Vec3> = (0..n)
                .map(|k| Vec3::from_spherical(1.0, theta0, TAU * k as f64 / n as f64))
                .collect();
            let o = solid_angle_of_loop(&dirs).unwrap();
            let expect = TAU * (1.0 - fp::cos(theta0));
            assert!((o - expect).abs() < 1e-5, "θ0={theta0}: {o} vs {expect}");
        }
    }

    #[test]
    fn solid_angle_of_great_circles_and_double_winds() {
        let n = 400;
        let equator: Vec<Vec3> = (0..n)
            .map(|k| Vec3::from_spherical(1.0, PI / 2.0, TAU * k as f64 / n as f64))
            .collect();
        let o = solid_angle_of_loop(&equator).unwrap();
        assert!((o - TAU).abs() < 1e-9, "equator {o}");
        let double: Vec<Vec3> = (0..2 * n)
            .map(|k| Vec3::from_spherical(1.0, PI / 2.0, TAU * k as f64 / n as f64))
            .collect();
        let o2 = solid_angle_of_loop(&double).unwrap();
        assert!((o2 - 2.0 * TAU).abs() < 1e-9, "double wind {o2}");
        // planar loop through the origin in the xz-plane
        let tilted: Vec<Vec3> = (0..n)
            .map(|k| {
                let t = TAU * k as f64 / n as f64;
                Vec3::new(fp::cos(t), 0.0, fp::sin(t))
            })
            .collect();
        let o3 = solid_angle_of_loop(&tilted).unwrap();
        assert!((fp::abs(o3) - TAU).abs() < 1e-9);
    }

    #[test]
    fn solid_angle_rejects_antipodal_segments() {
        let dirs = [
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(-1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
        ];
        assert!(matches!(
            solid_angle_of_loop(&dirs),
            Err(Error::AntipodalSegment { .. })
        ));
    }

    #[test]
    fn time_reversal_quantizes_loop_phases_for_real_families() {
        let fam = RealSymmetricPlanar;
        // loop encircling the planar degeneracy at the origin → π
        let enc = ParameterLoop::from_curve(
            |s| {
                let t = TAU * s;
                ParameterPoint::new(vec![fp::cos(t), fp::sin(t)])
            },
            200,
        )
        .unwrap();
        let p = berry_phase_of_loop(&fam, 0, &enc).unwrap();
        assert!(
            fp::angle_distance(p.phase, PI) < 1e-6,
            "encircling phase {}",
            p.phase
        );
        // loop avoiding the degeneracy → 0
        let avoid = ParameterLoop::from_curve(
            |s| {
                let t = TAU * s;
                ParameterPoint::new(vec![2.0 + 0.5 * fp::cos(t), 0.5 * fp::sin(t)])
            },
            200,
        )
        .unwrap();
        let q = berry_phase_of_loop(&fam, 0, &avoid).unwrap();
        assert!(q.phase.abs() < 1e-6, "avoiding phase {}", q.phase);
    }

    #[test]
    fn degenerate_points_are_refused_with_a_gap_diagnostic() {
        let fam = Zeeman { mu: 1.0 };
        let err = berry_connection_fd(&fam, 0, &[0.0, 0.0, 0.0], 1e-6).unwrap_err();
        assert!(matches!(err, Error::Degenerate { level: 0, .. }));
    }
}
