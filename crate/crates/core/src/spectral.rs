//! Weighted Poincaré constants through the ground-state (Schrödinger) transformation.
//!
//! With `h = w e^{φ/2}`, the quadratic form `∫|∇h|² dξ` becomes `∫(|∇w|² + Φ w²) dv / Z`.
//! Both are discretized with the same face conductances as the Fokker-Planck operator,
//! so constants are exact discrete kernel elements and the constants computed here
//! are exactly the micro-coercivity constants of the discrete `L₁`.

use rand::Rng;

use crate::collision::fp_conductance;
use crate::equilibria::{build_truncated_equilibrium, Equilibrium};
use crate::error::{Error, Result};
use crate::grid::{bracket, VelocityGrid};
use crate::linalg::tridiagonal_eigenvalue;

/// Relative tolerance on the zero-mode residual of the Schrödinger discretization.
pub const ZERO_MODE_TOLERANCE: f64 = 1e-6;
/// Relative agreement required between refinements.
pub const REFINEMENT_TOLERANCE: f64 = 0.02;

/// Default resolution of the spectral grids.
pub const DEFAULT_RESOLUTION: usize = 8193;

#[derive(Debug, Clone)]
pub struct SchrodingerProblem {
    pub alpha: f64,
    pub beta: f64,
    pub domain_r: f64,
    pub resolution: usize,
    /// `Φ = ¼|∇φ|² − ½Δφ` at the nodes.
    pub potential: Vec<f64>,
    /// `ψ = c_{α,β}^{-1} <v>^{-β}`.
    pub weight: Vec<f64>,
    /// `w₀ = e^{-φ/2}`.
    pub kernel_vector: Vec<f64>,
    /// `c_{α,β} = ∫ <v>^{-β} dξ`.
    pub c_norm: f64,
    eq: Equilibrium,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralResult {
    pub c_star: f64,
    pub c_corollary: f64,
    pub sigma0: f64,
    pub converged: bool,
    /// `(R, n, C⋆)` for the base problem and its refinements.
    pub refinements: Vec<(f64, usize, f64)>,
}

/// Which average is subtracted on the right-hand side of the inequality.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Centering {
    /// `ĥ = ∫ h dν`
    Nu,
    /// `h̃ = ∫ h dξ`
    Xi,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditStats {
    pub samples: usize,
    /// Smallest `(quotient − c) / c`.
    pub min_margin: f64,
    pub min_quotient: f64,
}

/// Generalized symmetric pencil `K h = λ M h` with `K` a weighted path-graph Laplacian.
#[derive(Debug, Clone)]
pub struct PoincarePencil {
    conductance: Vec<f64>,
    mass: Vec<f64>,
}

impl PoincarePencil {
    /// `∫|∇h|² dξ` against `∫ h² ⟨v⟩^{-β} dξ / c`.
    pub fn new(eq: &Equilibrium, beta: f64, c_norm: f64) -> Self {
        let conductance = fp_conductance(eq);
        let mass = eq
            .grid()
            .weights()
            .iter()
            .zip(eq.values())
            .zip(eq.grid().nodes())
            .map(|((w, f), &v)| w * f * bracket(v).powf(-beta) / c_norm)
            .collect();
        Self { conductance, mass }
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    fn symmetric_bands(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.len();
        let c = &self.conductance;
        let m = &self.mass;
        let diag = (0..n)
            .map(|i| {
                let left = if i > 0 { c[i - 1] } else { 0.0 };
                let right = if i + 1 < n { c[i] } else { 0.0 };
                (left + right) / m[i]
            })
            .collect();
        let off = (0..n - 1).map(|i| -c[i] / (m[i].sqrt() * m[i + 1].sqrt())).collect();
        (diag, off)
    }

    pub fn dirichlet(&self, h: &[f64]) -> f64 {
        self.conductance.iter().enumerate().map(|(i, c)| c * (h[i + 1] - h[i]).powi(2)).sum()
    }

    /// `Σ M (h − c)²` with `c` the ν- or ξ-average, the latter taken with `xi_weights`.
    pub fn centered_mass(&self, h: &[f64], centering: Centering, xi_weights: &[f64]) -> f64 {
        let mean = match centering {
            Centering::Nu => self.mass.iter().zip(h).map(|(m, h)| m * h).sum::<f64>() / self.mass.iter().sum::<f64>(),
            Centering::Xi => xi_weights.iter().zip(h).map(|(m, h)| m * h).sum::<f64>() / xi_weights.iter().sum::<f64>(),
        };
        self.mass.iter().zip(h).map(|(m, h)| m * (h - mean).powi(2)).sum()
    }

    /// Smallest nonzero eigenvalue: index 1 of the spectrum, the constants being index 0.
    pub fn first_gap(&self) -> f64 {
        let (diag, off) = self.symmetric_bands();
        let off2: Vec<f64> = off.iter().map(|x| x * x).collect();
        tridiagonal_eigenvalue(&diag, &off2, 1)
    }

    /// Minimum of `K`'s Rayleigh quotient over `{h : constraint·h = 0}`, with its minimizer.
    ///
    /// Bisection on the inertia of the bordered matrix `[[T − λ, q], [qᵀ, 0]]`,
    /// `T = M^{-1/2} K M^{-1/2}`, `q = M^{-1/2} constraint`.
    pub fn constrained_minimum(&self, constraint: &[f64]) -> (f64, Vec<f64>) {
        let (diag, off) = self.symmetric_bands();
        let q: Vec<f64> = constraint.iter().zip(&self.mass).map(|(c, m)| c / m.sqrt()).collect();
        let count = |lambda: f64| -> usize {
            // LDLᵀ of T − λ: negative pivots count eigenvalues below λ; Σ z²/d = qᵀ(T − λ)^{-1} q.
            let mut neg = 0;
            let mut s = 0.0;
            let mut d_prev = 1.0;
            let mut z_prev = 0.0;
            for i in 0..diag.len() {
                let (mut d, mut z) = (diag[i] - lambda, q[i]);
                if i > 0 {
                    let l = off[i - 1] / d_prev;
                    d -= l * off[i - 1];
                    z -= l * z_prev;
                }
                if d == 0.0 {
                    d = -f64::EPSILON * (diag[i].abs() + lambda.abs() + 1.0);
                }
                if d < 0.0 {
                    neg += 1;
                }
                s += z * z / d;
                d_prev = d;
                z_prev = z;
            }
            (neg + usize::from(s > 0.0)).saturating_sub(1)
        };
        let mut lo = 0.0;
        let mut hi = self.first_gap() * (1.0 + 1e-12) + f64::MIN_POSITIVE;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if count(mid) >= 1 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let lambda = 0.5 * (lo + hi);
        let y = shifted_solve(&diag, &off, lambda, &q);
        let h: Vec<f64> = y.iter().zip(&self.mass).map(|(y, m)| y / m.sqrt()).collect();
        (lambda, h)
    }

    /// Eigenvector of `first_gap` by inverse iteration with the constants deflated.
    pub fn gap_eigenvector(&self, lambda: f64) -> Vec<f64> {
        let (diag, off) = self.symmetric_bands();
        let ground: Vec<f64> = self.mass.iter().map(|m| m.sqrt()).collect();
        let g2: f64 = ground.iter().map(|g| g * g).sum();
        let mut y: Vec<f64> = (0..self.len()).map(|i| ((i as f64) * 0.37).sin() + 0.1).collect();
        for _ in 0..6 {
            let proj: f64 = y.iter().zip(&ground).map(|(a, b)| a * b).sum::<f64>() / g2;
            y.iter_mut().zip(&ground).for_each(|(a, b)| *a -= proj * b);
            y = shifted_solve(&diag, &off, lambda * (1.0 - 1e-10), &y);
            let nrm = y.iter().map(|a| a * a).sum::<f64>().sqrt();
            y.iter_mut().for_each(|a| *a /= nrm);
        }
        y.iter().zip(&self.mass).map(|(y, m)| y / m.sqrt()).collect()
    }
}

/// Solves `(T − λ) y = b` for symmetric tridiagonal `T` without pivoting.
fn shifted_solve(diag: &[f64], off: &[f64], lambda: f64, b: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut d = vec![0.0; n];
    let mut z = vec![0.0; n];
    for i in 0..n {
        d[i] = diag[i] - lambda;
        z[i] = b[i];
        if i > 0 {
            let l = off[i - 1] / d[i - 1];
            d[i] -= l * off[i - 1];
            z[i] -= l * z[i - 1];
        }
    }
    let mut y = vec![0.0; n];
    y[n - 1] = z[n - 1] / d[n - 1];
    for i in (0..n - 1).rev() {
        y[i] = (z[i] - off[i] * y[i + 1]) / d[i];
    }
    y
}

/// Tabulates `Φ`, `ψ` and `w₀` on a line (`d = 1`) or radial grid of radius `r`.
pub fn build_schrodinger(alpha: f64, beta: f64, dim: usize, r: f64, n: usize) -> Result<SchrodingerProblem> {
    let problem = assemble(alpha, beta, dim, r, n)?;
    let residual = problem.zero_mode_residual();
    if !(residual < ZERO_MODE_TOLERANCE) {
        return Err(Error::Resolution { what: "Schrödinger zero mode".into(), residual, tol: ZERO_MODE_TOLERANCE });
    }
    Ok(problem)
}

fn assemble(alpha: f64, beta: f64, dim: usize, r: f64, n: usize) -> Result<SchrodingerProblem> {
    if !(beta >= 0.0) {
        return Err(Error::Domain(format!("beta must be nonnegative, got {beta}")));
    }
    let grid = VelocityGrid::for_dim(dim, n, r, 1.0)?;
    let eq = build_truncated_equilibrium(alpha, dim, &grid)?;
    if eq.values().iter().any(|f| *f < 1e-290) {
        return Err(Error::Domain(format!("equilibrium underflows on |v| <= {r}; use a smaller radius")));
    }
    let family = eq.potential_family();
    let c_norm = eq.nu_normalization(beta);
    let nodes = grid.nodes();
    let potential: Vec<f64> = nodes.iter().map(|&v| family.schrodinger_potential(v.abs())).collect();
    let weight: Vec<f64> = nodes.iter().map(|&v| bracket(v).powf(-beta) / c_norm).collect();
    let kernel_vector: Vec<f64> = eq.log_values().iter().map(|l| (0.5 * l).exp()).collect();
    Ok(SchrodingerProblem { alpha, beta, domain_r: r, resolution: n, potential, weight, kernel_vector, c_norm, eq })
}

impl SchrodingerProblem {
    pub fn equilibrium(&self) -> &Equilibrium {
        &self.eq
    }

    pub fn pencil(&self) -> PoincarePencil {
        PoincarePencil::new(&self.eq, self.beta, self.c_norm)
    }

    /// `‖(−Δ + Φ) w₀‖ / ‖w₀‖` with a finite-volume Laplacian, excluding the two outer cells.
    pub fn zero_mode_residual(&self) -> f64 {
        let grid = self.eq.grid();
        let w = grid.cell_volumes();
        let g = grid.face_geometry();
        let u = &self.kernel_vector;
        let n = u.len();
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..n {
            den += w[i] * u[i] * u[i];
            if i == 0 && grid.kind() == crate::grid::GridKind::Line || i + 1 == n {
                continue;
            }
            let right = g[i] * (u[i + 1] - u[i]);
            let left = if i > 0 { g[i - 1] * (u[i] - u[i - 1]) } else { 0.0 };
            let r = -(right - left) / w[i] + self.potential[i] * u[i];
            num += w[i] * r * r;
        }
        (num / den).sqrt()
    }

    /// `σ₀ ≈ inf_{|v| > r} Φ/ψ` with `r` a quarter of the domain radius.
    pub fn sigma0(&self) -> f64 {
        self.quotient_profile()
            .into_iter()
            .filter(|(r, _)| *r >= 0.25 * self.domain_r)
            .map(|(_, q)| q)
            .fold(f64::INFINITY, f64::min)
    }

    /// `q(r) = inf_{|v| >= r} Φ/ψ` at every nonnegative node `r`.
    pub fn quotient_profile(&self) -> Vec<(f64, f64)> {
        let nodes = self.eq.grid().nodes();
        let mut pts: Vec<(f64, f64)> = nodes
            .iter()
            .zip(self.potential.iter().zip(&self.weight))
            .filter(|(v, _)| **v >= 0.0)
            .map(|(&v, (p, w))| (v, p / w))
            .collect();
        let mut running = f64::INFINITY;
        for p in pts.iter_mut().rev() {
            running = running.min(p.1);
            p.1 = running;
        }
        pts
    }

    fn xi_weights(&self) -> Vec<f64> {
        self.eq.grid().weights().iter().zip(self.eq.values()).map(|(w, f)| w * f).collect()
    }

    /// Rayleigh quotient `∫|∇h|² dξ / ∫|h − avg|² dν`.
    pub fn quotient(&self, h: &[f64], centering: Centering) -> f64 {
        let p = self.pencil();
        p.dirichlet(h) / p.centered_mass(h, centering, &self.xi_weights())
    }

    /// `C⋆` alone.
    pub fn c_star(&self) -> f64 {
        self.pencil().first_gap()
    }
}

fn c_star_at(alpha: f64, beta: f64, dim: usize, r: f64, n: usize) -> Result<f64> {
    Ok(assemble(alpha, beta, dim, r, n)?.c_star())
}

/// `C⋆`, `𝒞` and `σ₀`, with an `R`- and `n`-refinement study.
pub fn compute_c_star(problem: &SchrodingerProblem) -> Result<SpectralResult> {
    let c_star = problem.c_star();
    let c_corollary = compute_c_corollary(problem)?;
    let (a, b, d, r, n) = (problem.alpha, problem.beta, problem.eq.dim(), problem.domain_r, problem.resolution);
    // doubling R at fixed mapped step keeps the resolution near the origin
    let s_ratio = (2.0 * r).asinh() / r.asinh();
    let n_wide = ((n - 1) as f64 * s_ratio).round() as usize + 1;
    let wide = c_star_at(a, b, d, 2.0 * r, n_wide)?;
    let fine = c_star_at(a, b, d, r, 2 * n - 1)?;
    let rel = |x: f64| ((x - c_star) / c_star).abs();
    let converged = rel(wide) <= REFINEMENT_TOLERANCE && rel(fine) <= REFINEMENT_TOLERANCE;
    Ok(SpectralResult {
        c_star,
        c_corollary,
        sigma0: problem.sigma0(),
        converged,
        refinements: vec![(r, n, c_star), (2.0 * r, n_wide, wide), (r, 2 * n - 1, fine)],
    })
}

/// `𝒞`: the constant with the `ξ`-average subtracted.
pub fn compute_c_corollary(problem: &SchrodingerProblem) -> Result<f64> {
    let pencil = problem.pencil();
    let (c, _) = pencil.constrained_minimum(&problem.xi_weights());
    let c_star = pencil.first_gap();
    if !(c > 0.0 && c <= c_star * (1.0 + 1e-9)) {
        return Err(Error::Numeric(format!("corollary constant {c} outside (0, C* = {c_star}]")));
    }
    Ok(c)
}

/// Minimizer of the `ξ`-centered quotient (a tightness witness for `𝒞`).
pub fn corollary_minimizer(problem: &SchrodingerProblem) -> Vec<f64> {
    problem.pencil().constrained_minimum(&problem.xi_weights()).1
}

/// Minimizer of the `ν`-centered quotient (a tightness witness for `C⋆`).
pub fn c_star_minimizer(problem: &SchrodingerProblem) -> Vec<f64> {
    let p = problem.pencil();
    p.gap_eigenvector(p.first_gap())
}

/// Smooth random test function in the mapped coordinate `s = asinh v`.
pub fn random_smooth<R: Rng>(grid: &VelocityGrid, rng: &mut R) -> Vec<f64> {
    let s_max = grid.nodes().last().map_or(1.0, |v| (v / grid.scale()).asinh());
    let terms: Vec<(f64, f64, f64)> = (1..=6)
        .map(|j| {
            (rng.gen_range(-1.0..1.0) / j as f64, j as f64 * std::f64::consts::PI / s_max, rng.gen_range(0.0..6.3))
        })
        .collect();
    grid.nodes()
        .iter()
        .map(|&v| {
            let s = (v / grid.scale()).asinh();
            terms.iter().map(|(a, k, p)| a * (k * s + p).sin()).sum()
        })
        .collect()
}

/// Checks `quotient(h) >= c` on random smooth `h`.
pub fn rayleigh_audit<R: Rng>(
    problem: &SchrodingerProblem,
    c: f64,
    centering: Centering,
    n_samples: usize,
    rng: &mut R,
) -> AuditStats {
    let mut stats = AuditStats { samples: n_samples, min_margin: f64::INFINITY, min_quotient: f64::INFINITY };
    for _ in 0..n_samples {
        let h = random_smooth(problem.eq.grid(), rng);
        let q = problem.quotient(&h, centering);
        stats.min_quotient = stats.min_quotient.min(q);
        stats.min_margin = stats.min_margin.min((q - c) / c);
    }
    stats
}

/// Micro-coercivity constant of the discrete `L₁` in the `‖·‖_{-β}` normalization:
/// `Σ K (Δg)² >= C Σ w F <v>^{-β} (g − ḡ)²` with `ḡ = Σ w F g`.
pub fn micro_constant(eq: &Equilibrium, beta: f64) -> f64 {
    let pencil = PoincarePencil::new(eq, beta, 1.0);
    let xi: Vec<f64> = eq.grid().weights().iter().zip(eq.values()).map(|(w, f)| w * f).collect();
    pencil.constrained_minimum(&xi).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, SymmetricEigen};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dense_oracle(p: &PoincarePencil, constraint: Option<&[f64]>) -> f64 {
        let (diag, off) = p.symmetric_bands();
        let n = diag.len();
        let mut t = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                diag[i]
            } else if i + 1 == j {
                off[i]
            } else if j + 1 == i {
                off[j]
            } else {
                0.0
            }
        });
        if let Some(c) = constraint {
            let q = nalgebra::DVector::from_iterator(n, c.iter().zip(p.mass()).map(|(c, m)| c / m.sqrt()));
            let q = &q / q.norm();
            let proj = DMatrix::identity(n, n) - &q * q.transpose();
            t = &proj * t * &proj;
        }
        let mut e: Vec<f64> = SymmetricEigen::new(t).eigenvalues.iter().copied().collect();
        e.sort_by(f64::total_cmp);
        e[1]
    }

    #[test]
    fn sturm_and_bordered_bisection_match_dense_eigensolves() {
        let prob = assemble(0.5, 1.0, 1, 300.0, 301).unwrap();
        let p = prob.pencil();
        let gap = p.first_gap();
        assert!((gap - dense_oracle(&p, None)).abs() < 1e-9 * gap);
        let xi = prob.xi_weights();
        let (c, h) = p.constrained_minimum(&xi);
        assert!((c - dense_oracle(&p, Some(&xi))).abs() < 1e-9 * c, "{c}");
        assert!(c <= gap);
        assert!((prob.quotient(&h, Centering::Xi) - c).abs() < 1e-7 * c);
    }

    #[test]
    fn potential_at_origin_and_zero_mode() {
        for (alpha, d) in [(0.5, 1), (1.0, 1), (2.0, 1), (0.5, 2)] {
            let r = if alpha == 2.0 { 12.0 } else { 400.0 };
            let prob = build_schrodinger(alpha, 2.0 * (1.0 - alpha).max(0.0), d, r, DEFAULT_RESOLUTION).unwrap();
            let zero = prob.equilibrium().grid().nodes().iter().position(|v| v.abs() < 1e-300).unwrap();
            assert!((prob.potential[zero] + alpha * d as f64 / 2.0).abs() < 1e-14);
            assert!(prob.zero_mode_residual() < ZERO_MODE_TOLERANCE, "{alpha} {d}: {}", prob.zero_mode_residual());
        }
    }

    #[test]
    fn gaussian_potential_is_harmonic() {
        let prob = assemble(2.0, 0.0, 1, 12.0, 801).unwrap();
        for (&v, &p) in prob.equilibrium().grid().nodes().iter().zip(&prob.potential) {
            assert!((p - (v * v - 1.0)).abs() < 1e-9 * (1.0 + v * v));
        }
    }

    #[test]
    fn classical_poincare_case_is_stable() {
        let prob = build_schrodinger(1.0, 0.0, 1, 200.0, DEFAULT_RESOLUTION).unwrap();
        let res = compute_c_star(&prob).unwrap();
        // no bound state: the truncated domain puts C* just above the essential threshold 1/4
        assert!(res.c_star > 0.0 && res.c_star < 0.26, "{}", res.c_star);
        assert!(res.converged, "{:?}", res.refinements);
        assert!(res.c_corollary <= res.c_star);
    }

    #[test]
    fn eigenvector_is_a_tightness_witness() {
        let prob = build_schrodinger(0.5, 1.0, 1, 300.0, DEFAULT_RESOLUTION).unwrap();
        let h = c_star_minimizer(&prob);
        let c = prob.c_star();
        assert!((prob.quotient(&h, Centering::Nu) - c).abs() < 1e-6 * c);
    }

    #[test]
    fn random_quotients_respect_constants() {
        let prob = build_schrodinger(0.5, 1.0, 1, 1000.0, DEFAULT_RESOLUTION).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let c_star = prob.c_star();
        let c = compute_c_corollary(&prob).unwrap();
        assert!(rayleigh_audit(&prob, c_star, Centering::Nu, 200, &mut rng).min_margin >= -1e-8);
        assert!(rayleigh_audit(&prob, c, Centering::Xi, 200, &mut rng).min_margin >= -1e-8);
        let p = prob.pencil();
        let xi = prob.xi_weights();
        for _ in 0..50 {
            let h = random_smooth(prob.equilibrium().grid(), &mut rng);
            assert!(p.centered_mass(&h, Centering::Xi, &xi) >= p.centered_mass(&h, Centering::Nu, &xi) * (1.0 - 1e-12));
        }
    }

    #[test]
    fn micro_constant_matches_normalized_corollary() {
        let prob = assemble(0.5, 1.0, 1, 1000.0, 1025).unwrap();
        let c = compute_c_corollary(&prob).unwrap();
        let cw = micro_constant(prob.equilibrium(), 1.0);
        assert!((cw - c / prob.c_norm).abs() < 1e-8 * cw);
    }
}
