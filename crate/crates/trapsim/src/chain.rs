//! Equilibria and normal modes of a cold ion chain near the
//! linear-to-zigzag transition.
//!
//! Positions are handled in dimensionless form: lengths in units of
//!
//! ```text
//! l = (q^2 / (4 pi eps0 m omega_z^2))^(1/3)
//! ```
//!
//! and mode frequencies in units of `omega_z`. In these units the in-plane
//! potential energy of `n` ions is
//!
//! ```text
//! V = sum_i (alpha^2 y_i^2 + z_i^2) / 2 + sum_{i<j} 1 / d_ij
//! ```
//!
//! with `alpha = omega_y / omega_z`. The chain is linear for
//! `alpha > alpha_c(n)` and buckles into a zigzag below. On the linear side
//! the transverse Hessian is `alpha^2 I - B` with `B` a fixed interaction
//! matrix, so the lowest transverse branch obeys
//!
//! ```text
//! omega_zz = sqrt(omega_y^2 - omega_yc^2)
//! ```
//!
//! exactly, and its sensitivity to the transverse confinement,
//! `d omega_zz / d omega_y = omega_y / omega_zz`, diverges at the critical
//! point. That divergence is the noise-amplification mechanism probed by
//! the zigzag-mode scenarios.
//!
//! Closed forms used as anchors: two ions sit at `z = +/- (1/2)^(2/3)` with
//! transverse modes `{sqrt(omega_y^2 - omega_z^2), omega_y}`, and three
//! ions have `alpha_c = sqrt(12/5)`.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::trap::IonSpecies;
use crate::units::COULOMB_CONSTANT;

/// Dimensionless transverse displacement below which a chain counts as
/// linear (in units of the length scale `l`).
pub const LINEAR_Y_TOL: f64 = 1e-8;

/// Gradient norm (dimensionless) demanded of a converged equilibrium.
const GRAD_TOL: f64 = 1e-12;

/// Configuration label for a relaxed chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainPhase {
    Linear,
    Zigzag,
}

/// A relaxed ion chain.
#[derive(Debug, Clone)]
pub struct ChainEquilibrium {
    pub n_ions: usize,
    /// Transverse confinement, rad/s.
    pub omega_y: f64,
    /// Axial confinement, rad/s.
    pub omega_z: f64,
    /// Anisotropy `omega_y / omega_z`.
    pub alpha: f64,
    /// Length unit `l` in meters.
    pub length_scale: f64,
    /// Dimensionless positions `[y, z]`, sorted by `z`.
    pub positions: Vec<[f64; 2]>,
    pub phase: ChainPhase,
    /// Dimensionless gradient norm at the solution.
    pub gradient_norm: f64,
}

impl ChainEquilibrium {
    /// Positions in meters.
    pub fn positions_si(&self) -> Vec<[f64; 2]> {
        self.positions
            .iter()
            .map(|p| [p[0] * self.length_scale, p[1] * self.length_scale])
            .collect()
    }
}

/// Normal-mode frequencies and displacement patterns.
#[derive(Debug, Clone)]
pub struct ModeSpectrum {
    /// Mode frequencies in rad/s, ascending.
    pub frequencies: Vec<f64>,
    /// Orthonormal displacement patterns, one column per frequency. For a
    /// linear chain the rows are the transverse displacements of the ions
    /// in `z` order; in the zigzag phase transverse and axial motion mix
    /// and the rows are `[y_1..y_n, z_1..z_n]`.
    pub vectors: DMatrix<f64>,
    /// Index of the zigzag (alternating-sign) branch, when identifiable.
    pub zigzag_mode: Option<usize>,
}

/// Equilibrium plus the full in-plane mode spectrum.
#[derive(Debug, Clone)]
pub struct ChainState {
    pub equilibrium: ChainEquilibrium,
    /// All `2n` in-plane mode frequencies, rad/s ascending.
    pub mode_frequencies: Vec<f64>,
    /// Orthonormal mode vectors, rows `[y_1..y_n, z_1..z_n]`, one column
    /// per frequency.
    pub mode_vectors: DMatrix<f64>,
}

/// Critical transverse confinement for a chain of `n` ions.
#[derive(Debug, Clone, Copy)]
pub struct CriticalPoint {
    pub n_ions: usize,
    /// Critical anisotropy `alpha_c = omega_yc / omega_z`.
    pub alpha_c: f64,
    /// Critical transverse frequency, rad/s.
    pub omega_yc: f64,
    pub omega_z: f64,
}

fn validate_frequencies(omega_y: f64, omega_z: f64) -> Result<()> {
    if !(omega_y > 0.0) || !omega_y.is_finite() {
        return Err(Error::InvalidParameter { name: "omega_y", value: omega_y });
    }
    if !(omega_z > 0.0) || !omega_z.is_finite() {
        return Err(Error::InvalidParameter { name: "omega_z", value: omega_z });
    }
    Ok(())
}

/// Length unit `l` in meters for the given species and axial confinement.
pub fn length_scale(omega_z: f64, species: &IonSpecies) -> Result<f64> {
    species.validate()?;
    if !(omega_z > 0.0) || !omega_z.is_finite() {
        return Err(Error::InvalidParameter { name: "omega_z", value: omega_z });
    }
    let l3 = COULOMB_CONSTANT * species.charge * species.charge
        / (species.mass * omega_z * omega_z);
    Ok(l3.cbrt())
}

/// Dimensionless in-plane potential energy.
fn potential_energy(alpha: f64, pos: &[[f64; 2]]) -> f64 {
    let mut v = 0.0;
    for p in pos {
        v += 0.5 * (alpha * alpha * p[0] * p[0] + p[1] * p[1]);
    }
    for i in 0..pos.len() {
        for j in (i + 1)..pos.len() {
            let dy = pos[i][0] - pos[j][0];
            let dz = pos[i][1] - pos[j][1];
            let d = (dy * dy + dz * dz).sqrt();
            if d == 0.0 {
                return f64::INFINITY;
            }
            v += 1.0 / d;
        }
    }
    v
}

/// Dimensionless gradient, layout `[dV/dy_1.., dV/dz_1..]`.
fn potential_gradient(alpha: f64, pos: &[[f64; 2]]) -> DVector<f64> {
    let n = pos.len();
    let mut g = DVector::zeros(2 * n);
    for i in 0..n {
        g[i] = alpha * alpha * pos[i][0];
        g[n + i] = pos[i][1];
        for j in 0..n {
            if j == i {
                continue;
            }
            let dy = pos[i][0] - pos[j][0];
            let dz = pos[i][1] - pos[j][1];
            let d2 = dy * dy + dz * dz;
            let d3 = d2 * d2.sqrt();
            g[i] -= dy / d3;
            g[n + i] -= dz / d3;
        }
    }
    g
}

/// Dimensionless Hessian, layout `[y_1..y_n, z_1..z_n]`.
fn potential_hessian(alpha: f64, pos: &[[f64; 2]]) -> DMatrix<f64> {
    let n = pos.len();
    let mut h = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        h[(i, i)] = alpha * alpha;
        h[(n + i, n + i)] = 1.0;
    }
    for i in 0..n {
        for j in 0..n {
            if j == i {
                continue;
            }
            let dy = pos[i][0] - pos[j][0];
            let dz = pos[i][1] - pos[j][1];
            let d2 = dy * dy + dz * dz;
            let d3 = d2 * d2.sqrt();
            let d5 = d3 * d2;
            let yy = -1.0 / d3 + 3.0 * dy * dy / d5;
            let zz = -1.0 / d3 + 3.0 * dz * dz / d5;
            let yz = 3.0 * dy * dz / d5;
            // Same-ion block accumulates; cross blocks carry the opposite
            // sign of the pair curvature.
            h[(i, i)] += yy;
            h[(n + i, n + i)] += zz;
            h[(i, n + i)] += yz;
            h[(n + i, i)] += yz;
            h[(i, j)] = -yy;
            h[(n + i, n + j)] = -zz;
            h[(i, n + j)] = -yz;
            h[(n + j, i)] = -yz;
        }
    }
    h
}

/// Active coordinate indices: z only when the chain is held linear, else
/// all of y and z.
fn active_indices(n: usize, frozen_y: bool) -> Vec<usize> {
    if frozen_y {
        (n..2 * n).collect()
    } else {
        (0..2 * n).collect()
    }
}

fn apply_step(pos: &[[f64; 2]], idx: &[usize], step: &DVector<f64>, t: f64) -> Vec<[f64; 2]> {
    let n = pos.len();
    let mut out = pos.to_vec();
    for (k, &coord) in idx.iter().enumerate() {
        if coord < n {
            out[coord][0] += t * step[k];
        } else {
            out[coord - n][1] += t * step[k];
        }
    }
    out
}

/// Damped (modified) Newton descent on the potential energy. Far from the
/// solution the Hessian is shifted until positive definite and the step is
/// backtracked on energy; inside the quadratic basin plain Newton steps
/// polish the gradient norm to the 1e-12 target.
fn minimize(alpha: f64, pos: &mut Vec<[f64; 2]>, frozen_y: bool) -> Result<f64> {
    const MAX_ITER: usize = 400;
    let n = pos.len();
    let idx = active_indices(n, frozen_y);
    let dim = idx.len();

    let mut best: Option<(f64, Vec<[f64; 2]>)> = None;
    for _iter in 0..MAX_ITER {
        let g_full = potential_gradient(alpha, pos);
        let g = DVector::from_fn(dim, |k, _| g_full[idx[k]]);
        let gnorm = g.norm();
        if best.as_ref().map_or(true, |(b, _)| gnorm < *b) {
            best = Some((gnorm, pos.clone()));
        }
        if gnorm < GRAD_TOL {
            return Ok(gnorm);
        }

        let h_full = potential_hessian(alpha, pos);
        let h = DMatrix::from_fn(dim, dim, |r, c| h_full[(idx[r], idx[c])]);
        let diag_scale = h.diagonal().amax().max(1.0);
        let mut shift = 0.0;
        let step = loop {
            let trial = if shift == 0.0 {
                h.clone()
            } else {
                let mut m = h.clone();
                for k in 0..dim {
                    m[(k, k)] += shift;
                }
                m
            };
            match Cholesky::new(trial) {
                Some(ch) => break ch.solve(&(-&g)),
                None => {
                    shift = if shift == 0.0 { 1e-8 * diag_scale } else { shift * 10.0 };
                    if shift > 1e12 * diag_scale {
                        return Err(Error::NoConvergence {
                            iterations: _iter,
                            residual: gnorm,
                        });
                    }
                }
            }
        };

        if gnorm < 1e-6 {
            // Quadratic basin: take the raw Newton step. Energy differences
            // are below floating-point resolution here, so a line search
            // would stall.
            *pos = apply_step(pos, &idx, &step, 1.0);
            continue;
        }

        let e0 = potential_energy(alpha, pos);
        let slope = g.dot(&step);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let trial = apply_step(pos, &idx, &step, t);
            if potential_energy(alpha, &trial) <= e0 + 1e-4 * t * slope {
                *pos = trial;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }

    match best {
        Some((gnorm, best_pos)) if gnorm < GRAD_TOL => {
            *pos = best_pos;
            Ok(gnorm)
        }
        Some((gnorm, _)) => Err(Error::NoConvergence { iterations: MAX_ITER, residual: gnorm }),
        None => Err(Error::NoConvergence { iterations: MAX_ITER, residual: f64::NAN }),
    }
}

/// Quasi-uniform axial seed with the empirical minimum-spacing estimate.
fn linear_seed(n: usize) -> Vec<[f64; 2]> {
    let spacing = 2.018 / (n as f64).powf(0.559);
    (0..n)
        .map(|i| [0.0, spacing * (i as f64 - (n as f64 - 1.0) / 2.0)])
        .collect()
}

/// Relaxed axial positions of a chain held on the trap axis. These do not
/// depend on the transverse confinement.
fn solve_linear_positions(n: usize) -> Result<(Vec<[f64; 2]>, f64)> {
    let mut pos = linear_seed(n);
    // alpha is irrelevant while y is frozen at zero.
    let gnorm = minimize(1.0, &mut pos, true)?;
    pos.sort_by(|a, b| a[1].total_cmp(&b[1]));
    Ok((pos, gnorm))
}

/// Transverse (y) block of the Hessian for a chain on the axis.
fn transverse_block(alpha: f64, linear_pos: &[[f64; 2]]) -> DMatrix<f64> {
    let n = linear_pos.len();
    let h = potential_hessian(alpha, linear_pos);
    DMatrix::from_fn(n, n, |i, j| h[(i, j)])
}

/// Smallest eigenvalue of the transverse block (units of `omega_z^2`).
fn lowest_transverse_curvature(alpha: f64, linear_pos: &[[f64; 2]]) -> f64 {
    transverse_block(alpha, linear_pos).symmetric_eigen().eigenvalues.min()
}

/// Relax a chain of `n` ions at the given confinement.
///
/// The linear branch is solved first; if its transverse curvature is
/// negative the solver reseeds along the unstable eigenvector and relaxes
/// the full two-dimensional configuration into the zigzag minimum. The
/// returned phase is classified from the converged transverse extents
/// (`|y| < 1e-8` length units means linear), not from the seed.
pub fn equilibrium_positions(
    n: usize,
    omega_y: f64,
    omega_z: f64,
    species: &IonSpecies,
) -> Result<ChainEquilibrium> {
    if n == 0 {
        return Err(Error::InvalidParameter { name: "n_ions", value: 0.0 });
    }
    validate_frequencies(omega_y, omega_z)?;
    let scale = length_scale(omega_z, species)?;
    let alpha = omega_y / omega_z;

    if n == 1 {
        return Ok(ChainEquilibrium {
            n_ions: 1,
            omega_y,
            omega_z,
            alpha,
            length_scale: scale,
            positions: vec![[0.0, 0.0]],
            phase: ChainPhase::Linear,
            gradient_norm: 0.0,
        });
    }

    let (linear_pos, linear_gnorm) = solve_linear_positions(n)?;
    let block = transverse_block(alpha, &linear_pos);
    let eig = block.symmetric_eigen();
    let (min_idx, min_curvature) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, v)| (i, *v))
        .expect("non-empty spectrum");

    let (mut pos, gnorm) = if min_curvature >= 0.0 {
        (linear_pos, linear_gnorm)
    } else {
        // Buckle along the soft direction and relax the full plane. The
        // seed amplitude follows the pitchfork estimate sqrt(-curvature),
        // with a floor so shallow instabilities still leave the saddle.
        let mut direction: Vec<f64> = (0..n).map(|i| eig.eigenvectors[(i, min_idx)]).collect();
        if direction[0] < 0.0 {
            for d in &mut direction {
                *d = -*d;
            }
        }
        let amplitude = (-min_curvature).sqrt().max(0.05);
        let mut seeded = linear_pos.clone();
        for (i, p) in seeded.iter_mut().enumerate() {
            p[0] += amplitude * direction[i];
        }
        let mut gnorm = minimize(alpha, &mut seeded, false)?;

        // A symmetric seed relaxes on the mirror-symmetric manifold, which
        // deep in the zigzag phase (transverse softer than axial) can hold
        // a saddle rather than the minimum: the crystal would rather
        // reorient than stay z-ordered. Kick along any remaining unstable
        // direction of the full Hessian and relax again until the
        // converged point is a true minimum.
        let mut stable = false;
        for _ in 0..8 {
            let full = potential_hessian(alpha, &seeded).symmetric_eigen();
            let (soft, lambda) = full
                .eigenvalues
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .map(|(i, v)| (i, *v))
                .expect("non-empty spectrum");
            if lambda >= -1e-9 {
                stable = true;
                break;
            }
            let kick = (-lambda).sqrt().max(0.05);
            for (i, p) in seeded.iter_mut().enumerate() {
                p[0] += kick * full.eigenvectors[(i, soft)];
                p[1] += kick * full.eigenvectors[(n + i, soft)];
            }
            gnorm = minimize(alpha, &mut seeded, false)?;
        }
        if !stable {
            return Err(Error::NoConvergence { iterations: 8, residual: gnorm });
        }

        seeded.sort_by(|a, b| a[1].total_cmp(&b[1]));
        (seeded, gnorm)
    };

    // Remove the harmless fp dust on the frozen coordinates.
    for p in &mut pos {
        if p[0].abs() < 1e-300 {
            p[0] = 0.0;
        }
    }

    let max_y = pos.iter().map(|p| p[0].abs()).fold(0.0, f64::max);
    let phase = if max_y < LINEAR_Y_TOL { ChainPhase::Linear } else { ChainPhase::Zigzag };

    Ok(ChainEquilibrium {
        n_ions: n,
        omega_y,
        omega_z,
        alpha,
        length_scale: scale,
        positions: pos,
        phase,
        gradient_norm: gnorm,
    })
}

/// Fix eigenvector signs so the largest-magnitude component is positive.
fn canonicalize_columns(m: &mut DMatrix<f64>) {
    for c in 0..m.ncols() {
        let mut lead = 0;
        for r in 0..m.nrows() {
            if m[(r, c)].abs() > m[(lead, c)].abs() {
                lead = r;
            }
        }
        if m[(lead, c)] < 0.0 {
            for r in 0..m.nrows() {
                m[(r, c)] = -m[(r, c)];
            }
        }
    }
}

/// Eigen-decompose a symmetric curvature matrix into a mode spectrum.
/// Eigenvalues are in units of `omega_z^2`; tiny negatives from roundoff
/// (or the exact critical point) clamp to zero, anything below `-1e-9`
/// trips the misclassification error.
fn spectrum_from_matrix(m: DMatrix<f64>, omega_z: f64) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let eig = m.symmetric_eigen();
    let dim = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let mut freqs = Vec::with_capacity(dim);
    let mut vectors = DMatrix::zeros(dim, dim);
    for (col, &k) in order.iter().enumerate() {
        let lambda = eig.eigenvalues[k];
        if lambda < -1e-9 {
            return Err(Error::PhaseMisclassification { eigenvalue: lambda });
        }
        freqs.push(lambda.max(0.0).sqrt() * omega_z);
        for r in 0..dim {
            vectors[(r, col)] = eig.eigenvectors[(r, k)];
        }
    }
    canonicalize_columns(&mut vectors);
    Ok((freqs, vectors))
}

/// True when the components alternate in sign along the chain.
fn is_alternating(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] * w[1] < 0.0)
}

/// Transverse mode spectrum of a relaxed chain.
///
/// For a linear chain this is the `n`-mode spectrum of the transverse
/// Hessian block; the lowest branch is the zigzag mode, identified by its
/// alternating-sign pattern. A linear-labeled chain with negative
/// transverse curvature is rejected as misclassified. In the zigzag phase
/// transverse and axial motion no longer separate, so the full `2n`-mode
/// in-plane spectrum is returned and the zigzag branch is identified by
/// overlap with the buckling pattern.
pub fn transverse_mode_spectrum(eq: &ChainEquilibrium) -> Result<ModeSpectrum> {
    match eq.phase {
        ChainPhase::Linear => {
            let block = transverse_block(eq.alpha, &eq.positions);
            let (frequencies, vectors) = spectrum_from_matrix(block, eq.omega_z)?;
            let zigzag_mode = (0..vectors.ncols())
                .find(|&c| is_alternating(vectors.column(c).as_slice()));
            Ok(ModeSpectrum { frequencies, vectors, zigzag_mode })
        }
        ChainPhase::Zigzag => {
            let h = potential_hessian(eq.alpha, &eq.positions);
            let (frequencies, vectors) = spectrum_from_matrix(h, eq.omega_z)?;
            // The softened branch follows the buckling pattern: score each
            // mode by its transverse overlap with the equilibrium zigzag.
            let n = eq.n_ions;
            let norm: f64 = eq.positions.iter().map(|p| p[0] * p[0]).sum::<f64>().sqrt();
            let zigzag_mode = if norm > 0.0 {
                (0..vectors.ncols()).max_by(|&a, &b| {
                    let overlap = |c: usize| {
                        (0..n)
                            .map(|i| vectors[(i, c)] * eq.positions[i][0] / norm)
                            .sum::<f64>()
                            .abs()
                    };
                    overlap(a).total_cmp(&overlap(b))
                })
            } else {
                None
            };
            Ok(ModeSpectrum { frequencies, vectors, zigzag_mode })
        }
    }
}

/// Full in-plane state: equilibrium plus all `2n` mode frequencies.
///
/// For a linear chain the spectrum assembles the decoupled transverse and
/// axial blocks, so the transverse center-of-mass mode sits exactly at
/// `omega_y` and the axial one exactly at `omega_z`.
pub fn chain_state(
    n: usize,
    omega_y: f64,
    omega_z: f64,
    species: &IonSpecies,
) -> Result<ChainState> {
    let eq = equilibrium_positions(n, omega_y, omega_z, species)?;
    let h = potential_hessian(eq.alpha, &eq.positions);
    let (mode_frequencies, mode_vectors) = spectrum_from_matrix(h, eq.omega_z)?;
    Ok(ChainState { equilibrium: eq, mode_frequencies, mode_vectors })
}

/// Critical transverse confinement `omega_yc` below which a chain of `n`
/// ions buckles, found by root-solving the lowest transverse curvature of
/// the linear chain over the anisotropy.
pub fn critical_com_frequency(
    n: usize,
    omega_z: f64,
    species: &IonSpecies,
) -> Result<CriticalPoint> {
    if n < 2 {
        return Err(Error::InvalidParameter { name: "n_ions", value: n as f64 });
    }
    if !(omega_z > 0.0) || !omega_z.is_finite() {
        return Err(Error::InvalidParameter { name: "omega_z", value: omega_z });
    }
    species.validate()?;

    let (linear_pos, _) = solve_linear_positions(n)?;
    let f = |alpha: f64| lowest_transverse_curvature(alpha, &linear_pos);

    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut guard = 0;
    while f(hi) <= 0.0 {
        lo = hi;
        hi *= 2.0;
        guard += 1;
        if guard > 40 {
            return Err(Error::BracketingFailure { lo, hi });
        }
    }
    // The curvature is monotonically increasing in alpha, so plain
    // bisection is reliable; 80 halvings leave the bracket far below the
    // 1e-10 relative target.
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if f(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) < 1e-14 * hi {
            break;
        }
    }
    let alpha_c = 0.5 * (lo + hi);
    Ok(CriticalPoint { n_ions: n, alpha_c, omega_yc: alpha_c * omega_z, omega_z })
}

/// Zigzag mode frequency on the linear side, rad/s.
///
/// Zero exactly at the critical point; transverse confinement below the
/// critical value has no linear-side zigzag branch and is an error.
pub fn zigzag_frequency(omega_y: f64, omega_yc: f64) -> Result<f64> {
    if !(omega_y > 0.0) || !omega_y.is_finite() {
        return Err(Error::InvalidParameter { name: "omega_y", value: omega_y });
    }
    if !(omega_yc >= 0.0) || !omega_yc.is_finite() {
        return Err(Error::InvalidParameter { name: "omega_yc", value: omega_yc });
    }
    if omega_y < omega_yc {
        return Err(Error::BelowCriticalPoint { omega_y, omega_yc });
    }
    Ok((omega_y * omega_y - omega_yc * omega_yc).sqrt())
}

/// Noise amplification of the zigzag branch: a fractional wiggle of the
/// transverse confinement appears on the zigzag mode multiplied by
/// `omega_y / omega_zz`, which is also the exact slope
/// `d omega_zz / d omega_y`.
pub fn sensitivity_amplification(omega_y: f64, omega_zz: f64) -> Result<f64> {
    if !(omega_y > 0.0) || !omega_y.is_finite() {
        return Err(Error::InvalidParameter { name: "omega_y", value: omega_y });
    }
    if omega_zz == 0.0 {
        return Err(Error::CriticalPointDivergence);
    }
    if !(omega_zz > 0.0) || !omega_zz.is_finite() {
        return Err(Error::InvalidParameter { name: "omega_zz", value: omega_zz });
    }
    Ok(omega_y / omega_zz)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::angular_from_hz;
    use approx::assert_relative_eq;

    const OMEGA_Z: f64 = 2.042e6; // rad/s, a typical axial confinement

    fn yb() -> IonSpecies {
        IonSpecies::yb171()
    }

    #[test]
    fn two_ions_sit_at_the_closed_form_spacing() {
        let eq = equilibrium_positions(2, 4.0 * OMEGA_Z, OMEGA_Z, &yb()).unwrap();
        let expected = 0.5_f64.powf(2.0 / 3.0);
        assert_relative_eq!(eq.positions[0][1], -expected, max_relative = 1e-10);
        assert_relative_eq!(eq.positions[1][1], expected, max_relative = 1e-10);
        assert!(eq.gradient_norm < 1e-12);
        assert_eq!(eq.phase, ChainPhase::Linear);
    }

    #[test]
    fn three_ions_sit_at_the_closed_form_spacing() {
        let eq = equilibrium_positions(3, 4.0 * OMEGA_Z, OMEGA_Z, &yb()).unwrap();
        let expected = 1.25_f64.cbrt();
        assert_relative_eq!(eq.positions[0][1], -expected, max_relative = 1e-10);
        assert!(eq.positions[1][1].abs() < 1e-10);
        assert_relative_eq!(eq.positions[2][1], expected, max_relative = 1e-10);
    }

    #[test]
    fn equilibria_are_mirror_symmetric_in_z() {
        for n in 2..=8 {
            let eq = equilibrium_positions(n, 8.0 * OMEGA_Z, OMEGA_Z, &yb()).unwrap();
            for i in 0..n {
                assert_relative_eq!(
                    eq.positions[i][1],
                    -eq.positions[n - 1 - i][1],
                    epsilon = 1e-9
                );
            }
        }
    }

    #[test]
    fn two_ion_transverse_modes_match_closed_form() {
        let alpha = 2.5;
        let eq = equilibrium_positions(2, alpha * OMEGA_Z, OMEGA_Z, &yb()).unwrap();
        let spec = transverse_mode_spectrum(&eq).unwrap();
        let expected_low = (alpha * alpha - 1.0).sqrt() * OMEGA_Z;
        assert_relative_eq!(spec.frequencies[0], expected_low, max_relative = 1e-12);
        assert_relative_eq!(spec.frequencies[1], alpha * OMEGA_Z, max_relative = 1e-12);
        assert_eq!(spec.zigzag_mode, Some(0));
    }

    #[test]
    fn three_ion_zigzag_branch_matches_closed_form() {
        let alpha = 3.0;
        let eq = equilibrium_positions(3, alpha * OMEGA_Z, OMEGA_Z, &yb()).unwrap();
        let spec = transverse_mode_spectrum(&eq).unwrap();
        let expected = (alpha * alpha - 12.0 / 5.0).sqrt() * OMEGA_Z;
        assert_relative_eq!(spec.frequencies[0], expected, max_relative = 1e-11);
    }

    #[test]
    fn critical_anisotropy_closed_forms() {
        let two = critical_com_frequency(2, OMEGA_Z, &yb()).unwrap();
        assert_relative_eq!(two.alpha_c, 1.0, max_relative = 1e-10);
        let three = critical_com_frequency(3, OMEGA_Z, &yb()).unwrap();
        assert_relative_eq!(three.alpha_c, (12.0_f64 / 5.0).sqrt(), max_relative = 1e-10);
    }

    #[test]
    fn critical_anisotropy_grows_with_ion_number() {
        let mut last = 0.0;
        for n in 2..=8 {
            let cp = critical_com_frequency(n, OMEGA_Z, &yb()).unwrap();
            assert!(
                cp.alpha_c > last,
                "alpha_c({n}) = {} not above alpha_c({}) = {last}",
                cp.alpha_c,
                n - 1
            );
            last = cp.alpha_c;
        }
    }

    #[test]
    fn six_ion_phases_bracket_the_transition() {
        let cp = critical_com_frequency(6, OMEGA_Z, &yb()).unwrap();
        let linear = equilibrium_positions(6, 6.8 * OMEGA_Z, OMEGA_Z, &yb()).unwrap();
        assert_eq!(linear.phase, ChainPhase::Linear);
        let above = equilibrium_positions(6, 1.02 * cp.omega_yc, OMEGA_Z, &yb()).unwrap();
        assert_eq!(above.phase, ChainPhase::Linear);
        let zigzag = equilibrium_positions(6, 0.95 * cp.omega_yc, OMEGA_Z, &yb()).unwrap();
        assert_eq!(zigzag.phase, ChainPhase::Zigzag);
        // The buckled chain alternates side to side.
        for w in zigzag.positions.windows(2) {
            assert!(w[0][0] * w[1][0] < 0.0, "zigzag should alternate");
        }
    }

    #[test]
    fn soft_mode_law_matches_hessian_across_the_linear_side() {
        for &n in &[2usize, 3, 4, 6] {
            let cp = critical_com_frequency(n, OMEGA_Z, &yb()).unwrap();
            for factor in [1.002, 1.01, 1.05, 1.2, 1.5, 2.0, 3.0] {
                let omega_y = factor * cp.omega_yc;
                let eq = equilibrium_positions(n, omega_y, OMEGA_Z, &yb()).unwrap();
                assert_eq!(eq.phase, ChainPhase::Linear);
                let spec = transverse_mode_spectrum(&eq).unwrap();
                let law = zigzag_frequency(omega_y, cp.omega_yc).unwrap();
                assert_relative_eq!(spec.frequencies[0], law, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn com_modes_are_exact() {
        let omega_y = 5.0 * OMEGA_Z;
        let state = chain_state(5, omega_y, OMEGA_Z, &yb()).unwrap();
        let has = |target: f64| {
            state
                .mode_frequencies
                .iter()
                .any(|f| (f - target).abs() / target < 1e-12)
        };
        assert!(has(omega_y), "transverse center-of-mass mode must sit at omega_y");
        assert!(has(OMEGA_Z), "axial center-of-mass mode must sit at omega_z");
    }

    #[test]
    fn mode_vectors_are_orthonormal() {
        let state = chain_state(4, 3.0 * OMEGA_Z, OMEGA_Z, &yb()).unwrap();
        let v = &state.mode_vectors;
        let gram = v.transpose() * v;
        for i in 0..gram.nrows() {
            for j in 0..gram.ncols() {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((gram[(i, j)] - expected).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn zigzag_phase_spectrum_is_physical() {
        // Just below the four-ion critical point the soft mode reappears at
        // a small but real frequency.
        let cp = critical_com_frequency(4, OMEGA_Z, &yb()).unwrap();
        let eq = equilibrium_positions(4, 0.97 * cp.omega_yc, OMEGA_Z, &yb()).unwrap();
        assert_eq!(eq.phase, ChainPhase::Zigzag);
        let spec = transverse_mode_spectrum(&eq).unwrap();
        assert_eq!(spec.frequencies.len(), 8);
        assert!(spec.frequencies.iter().all(|f| *f >= 0.0));
        assert!(spec.zigzag_mode.is_some());
    }

    #[test]
    fn zigzag_frequency_domain_checks() {
        let wc = angular_from_hz(0.5e6);
        assert_eq!(zigzag_frequency(wc, wc).unwrap(), 0.0);
        assert!(matches!(
            zigzag_frequency(0.9 * wc, wc),
            Err(Error::BelowCriticalPoint { .. })
        ));
        assert!(matches!(
            sensitivity_amplification(wc, 0.0),
            Err(Error::CriticalPointDivergence)
        ));
    }

    #[test]
    fn amplification_example_near_the_measured_operating_point() {
        // 500 kHz transverse confinement with a 56 kHz zigzag mode
        // amplifies confinement noise roughly ninefold.
        let ratio = sensitivity_amplification(
            angular_from_hz(500e3),
            angular_from_hz(56e3),
        )
        .unwrap();
        assert!((ratio - 8.93).abs() < 0.01);
    }

    #[test]
    fn single_ion_is_a_degenerate_linear_chain() {
        let eq = equilibrium_positions(1, 2.0 * OMEGA_Z, OMEGA_Z, &yb()).unwrap();
        assert_eq!(eq.positions, vec![[0.0, 0.0]]);
        assert_eq!(eq.phase, ChainPhase::Linear);
    }
}
