//! Sub-exponential equilibria `F(v) = C_α exp(-<v>^α)`, their weights and moments.

use crate::error::{Error, Result};
use crate::grid::{bracket, GridKind, VelocityGrid};

/// Relative tolerance on the tail mass cut off by the velocity domain.
pub const TAIL_TOLERANCE: f64 = 1e-10;

/// `<v>^α` and its radial derivatives, for the potential `φ = <v>^α + log Z_α`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BracketPower {
    pub alpha: f64,
    pub dim: usize,
}

impl BracketPower {
    pub fn value(&self, r: f64) -> f64 {
        bracket(r).powf(self.alpha)
    }

    /// Radial derivative `α r <r>^{α-2}`.
    pub fn radial_derivative(&self, r: f64) -> f64 {
        let b = bracket(r);
        self.alpha * r * b.powf(self.alpha - 2.0)
    }

    /// Laplacian in `R^d` of the radial function `<v>^α`.
    pub fn laplacian(&self, r: f64) -> f64 {
        let a = self.alpha;
        let b2 = 1.0 + r * r;
        a * self.dim as f64 * b2.powf(a / 2.0 - 1.0) + a * (a - 2.0) * r * r * b2.powf(a / 2.0 - 2.0)
    }

    /// Schrödinger potential `¼|∇φ|² − ½Δφ`.
    pub fn schrodinger_potential(&self, r: f64) -> f64 {
        let g = self.radial_derivative(r);
        0.25 * g * g - 0.5 * self.laplacian(r)
    }
}

/// Discrete equilibrium on a velocity grid.
#[derive(Debug, Clone)]
pub struct Equilibrium {
    alpha: f64,
    dim: usize,
    c_alpha: f64,
    grid: VelocityGrid,
    values: Vec<f64>,
    log_values: Vec<f64>,
}

/// Θ and the bracket moments `Θ_k = ∫ <v>^k F dv`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    pub theta: f64,
    pub theta_k: Vec<(f64, f64)>,
}

impl MomentTable {
    pub fn get(&self, k: f64) -> Option<f64> {
        self.theta_k.iter().find(|(kk, _)| (*kk - k).abs() < 1e-12).map(|&(_, v)| v)
    }
}

/// Which reference measure a weighted integral is taken against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeasureKind {
    /// `dμ = dv / F`
    Mu,
    /// `dξ = e^{-φ} dv = F dv`
    Xi,
    /// `dν = ψ dξ` with `ψ = c_{α,β}^{-1} <v>^{-β}`
    Nu { beta: f64 },
}

/// A reference measure with an extra `<v>^k` weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedMeasure {
    pub kind: MeasureKind,
    pub weight_exponent: f64,
}

impl WeightedMeasure {
    pub fn new(kind: MeasureKind, weight_exponent: f64) -> Self {
        Self { kind, weight_exponent }
    }

    /// Quadrature weights of this measure on the equilibrium's grid.
    pub fn quadrature(&self, eq: &Equilibrium) -> Vec<f64> {
        let k = self.weight_exponent;
        let grid = eq.grid();
        let nrm = match self.kind {
            MeasureKind::Nu { beta } => eq.nu_normalization(beta),
            _ => 1.0,
        };
        grid.nodes()
            .iter()
            .zip(grid.weights())
            .zip(eq.values())
            .map(|((&v, &w), &f)| {
                let bk = bracket(v).powf(k);
                match self.kind {
                    MeasureKind::Mu => w * bk / f,
                    MeasureKind::Xi => w * bk * f,
                    MeasureKind::Nu { beta } => w * bk * f * bracket(v).powf(-beta) / nrm,
                }
            })
            .collect()
    }

    pub fn integrate(&self, eq: &Equilibrium, values: &[f64]) -> f64 {
        self.quadrature(eq).iter().zip(values).map(|(w, g)| w * g).sum()
    }
}

/// Asymptotic estimate of `∫_{|v|>V} <v>^k e^{-<v>^α} dv`, or infinity when
/// the cutoff is not yet in the asymptotic regime.
fn tail_estimate(alpha: f64, kind: GridKind, cutoff: f64, k: f64) -> f64 {
    let b = bracket(cutoff);
    let dim = match kind {
        GridKind::Line => 1,
        GridKind::Radial { dim } => dim,
    };
    let growth = k + dim as f64 - 1.0;
    let decay = alpha * b.powf(alpha);
    if decay <= 2.0 * growth.max(0.0) + 1.0 {
        return f64::INFINITY;
    }
    let measure = match kind {
        GridKind::Line => 2.0,
        GridKind::Radial { dim } => crate::grid::sphere_area(dim) * cutoff.powi(dim as i32 - 1),
    };
    measure * b.powf(k) * (-b.powf(alpha)).exp() * cutoff / decay / (1.0 - growth / decay)
}

/// Velocity cutoff `V` such that `F(V) <V>^{k_max} < 1e-12`.
pub fn cutoff_for(alpha: f64, dim: usize, k_max: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let z = reference_partition(alpha, dim)?;
    let excess = |v: f64| -bracket(v).powf(alpha) + k_max.max(0.0) * bracket(v).ln() - z.ln() - (1e-12f64).ln();
    let mut lo = 1.0;
    let mut j = 0;
    let mut last_bad = None;
    while j <= 800 {
        let v = 10f64.powf(j as f64 / 50.0);
        if excess(v) >= 0.0 {
            last_bad = Some(v);
        }
        j += 1;
    }
    let Some(bad) = last_bad else { return Ok(lo) };
    lo = bad;
    let mut hi = bad * 10f64.powf(1.0 / 50.0);
    if excess(hi) >= 0.0 {
        return Err(Error::Domain(format!("no cutoff below 1e16 for alpha={alpha}, k={k_max}")));
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if excess(mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// `∫ e^{-<v>^α} dv` on a generous reference grid.
fn reference_partition(alpha: f64, dim: usize) -> Result<f64> {
    let v = (90f64.powf(2.0 / alpha) - 1.0).max(1.0).sqrt();
    let grid = VelocityGrid::for_dim(dim, 4001, v, 1.0)?;
    Ok(grid.integrate_fn(|v| (-bracket(v).powf(alpha)).exp()))
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(Error::Domain(format!("alpha must lie in (0, 2], got {alpha}")));
    }
    Ok(())
}

/// Builds `F = C_α e^{-<v>^α}` normalized by the grid quadrature.
pub fn build_equilibrium(alpha: f64, dim: usize, grid: &VelocityGrid) -> Result<Equilibrium> {
    check_alpha(alpha)?;
    if grid.dim() != dim {
        return Err(Error::Shape(format!("grid dimension {} does not match d = {dim}", grid.dim())));
    }
    let z: f64 = grid.integrate_fn(|v| (-bracket(v).powf(alpha)).exp());
    let tail = tail_estimate(alpha, grid.kind(), grid.cutoff(), 0.0) / z;
    if tail > TAIL_TOLERANCE {
        return Err(Error::Truncation { what: "normalization".into(), tail, tol: TAIL_TOLERANCE });
    }
    Ok(normalized(alpha, dim, grid, z))
}

/// Equilibrium renormalized to a probability measure on the truncated ball `|v| <= cutoff`,
/// with no tail check.
pub fn build_truncated_equilibrium(alpha: f64, dim: usize, grid: &VelocityGrid) -> Result<Equilibrium> {
    check_alpha(alpha)?;
    if grid.dim() != dim {
        return Err(Error::Shape(format!("grid dimension {} does not match d = {dim}", grid.dim())));
    }
    let z: f64 = grid.integrate_fn(|v| (-bracket(v).powf(alpha)).exp());
    Ok(normalized(alpha, dim, grid, z))
}

fn normalized(alpha: f64, dim: usize, grid: &VelocityGrid, z: f64) -> Equilibrium {
    let c_alpha = 1.0 / z;
    let log_values: Vec<f64> = grid.nodes().iter().map(|&v| c_alpha.ln() - bracket(v).powf(alpha)).collect();
    let values = log_values.iter().map(|l| l.exp()).collect();
    Equilibrium { alpha, dim, c_alpha, grid: grid.clone(), values, log_values }
}

impl Equilibrium {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Normalization `C_α` with `C_α^{-1} = ∫ e^{-<v>^α} dv`.
    pub fn c_alpha(&self) -> f64 {
        self.c_alpha
    }

    pub fn grid(&self) -> &VelocityGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn log_values(&self) -> &[f64] {
        &self.log_values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn potential_family(&self) -> BracketPower {
        BracketPower { alpha: self.alpha, dim: self.dim }
    }

    /// `φ(v) = <v>^α + log Z_α`.
    pub fn phi(&self, v: f64) -> f64 {
        bracket(v).powf(self.alpha) - self.c_alpha.ln()
    }

    /// Geometric-mean face values `sqrt(F_i F_{i+1})`.
    pub fn face_values(&self) -> Vec<f64> {
        self.log_values.windows(2).map(|w| (0.5 * (w[0] + w[1])).exp()).collect()
    }

    /// `<v_i>^k` at every node.
    pub fn bracket_powers(&self, k: f64) -> Vec<f64> {
        self.grid.nodes().iter().map(|&v| bracket(v).powf(k)).collect()
    }

    /// `∫ g F dv` for a function `g` sampled at the nodes.
    pub fn average(&self, g: &[f64]) -> f64 {
        self.grid.weights().iter().zip(&self.values).zip(g).map(|((w, f), g)| w * f * g).sum()
    }

    /// `Θ_k = ∫ <v>^k F dv`.
    pub fn theta_k(&self, k: f64) -> Result<f64> {
        let z = 1.0 / self.c_alpha;
        let tail = tail_estimate(self.alpha, self.grid.kind(), self.grid.cutoff(), k.max(0.0)) / z;
        if tail > TAIL_TOLERANCE {
            return Err(Error::Truncation { what: format!("moment k={k}"), tail, tol: TAIL_TOLERANCE });
        }
        Ok(self.average(&self.bracket_powers(k)))
    }

    /// `Θ = ∫ |v·e|² F dv` along the first axis.
    pub fn theta(&self) -> f64 {
        let r2: Vec<f64> = self.grid.nodes().iter().map(|v| v * v).collect();
        self.average(&r2) / self.dim as f64
    }

    /// `c_{α,β} = ∫ <v>^{-β} dξ`.
    pub fn nu_normalization(&self, beta: f64) -> f64 {
        self.average(&self.bracket_powers(-beta))
    }

    /// Collision frequency `ν₁ = ΔF/(2F) − |∇F|²/(4F²)` at speed `|v|`.
    pub fn nu1(&self, v: f64) -> f64 {
        self.potential_family().schrodinger_potential(v.abs())
    }
}

/// Moment table for the requested weight exponents.
pub fn moments(eq: &Equilibrium, k_list: &[f64]) -> Result<MomentTable> {
    let mut theta_k = Vec::with_capacity(k_list.len());
    for &k in k_list {
        if k < 0.0 {
            return Err(Error::Domain(format!("moment exponent must be nonnegative, got {k}")));
        }
        theta_k.push((k, eq.theta_k(k)?));
    }
    Ok(MomentTable { theta: eq.theta(), theta_k })
}

/// Equilibrium on an automatically sized line or radial grid.
pub fn equilibrium_for(alpha: f64, dim: usize, k_max: f64, n: usize) -> Result<Equilibrium> {
    let v = cutoff_for(alpha, dim, k_max)?;
    let grid = VelocityGrid::for_dim(dim, n, v, 1.0)?;
    build_equilibrium(alpha, dim, &grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, PI};

    fn eq(alpha: f64, k_max: f64, n: usize) -> Equilibrium {
        equilibrium_for(alpha, 1, k_max, n).unwrap()
    }

    #[test]
    fn gaussian_normalization_is_closed_form() {
        let e = eq(2.0, 4.0, 401);
        assert!((e.c_alpha() - E / PI.sqrt()).abs() < 1e-10, "{}", e.c_alpha());
    }

    #[test]
    fn normalized_and_positive_and_symmetric() {
        for alpha in [0.3, 0.5, 1.0, 2.0] {
            let e = eq(alpha, 6.0, 301);
            assert!((e.average(&vec![1.0; e.len()]) - 1.0).abs() < 1e-12);
            assert!(e.values().iter().all(|&f| f > 0.0));
            for i in 0..e.len() {
                assert_eq!(e.values()[i], e.values()[e.grid().mirror(i)]);
            }
        }
    }

    #[test]
    fn theta_two_identity_and_gaussian_variance() {
        let e = eq(0.5, 4.0, 401);
        let m = moments(&e, &[0.0, 2.0]).unwrap();
        assert!((m.get(0.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((m.get(2.0).unwrap() - (1.0 + m.theta)).abs() < 1e-10 * m.theta);
        let g = eq(2.0, 4.0, 401);
        assert!((g.theta() - 0.5).abs() < 1e-10);
    }

    #[test]
    fn moments_increase_with_k() {
        let e = eq(0.5, 9.0, 401);
        let ks = [0.0, 0.5, 1.0, 2.0, 4.0, 6.0];
        let m = moments(&e, &ks).unwrap();
        for w in m.theta_k.windows(2) {
            assert!(w[1].1 > w[0].1);
        }
    }

    #[test]
    fn odd_moments_vanish() {
        let e = eq(0.5, 6.0, 400);
        for k in [0.0, 1.0, 3.0] {
            let g: Vec<f64> = e.grid().nodes().iter().map(|&v| v * bracket(v).powf(k)).collect();
            let scale: f64 = e.average(&g.iter().map(|x| x.abs()).collect::<Vec<_>>());
            assert!(e.average(&g).abs() < 1e-14 * scale);
        }
    }

    #[test]
    fn truncation_and_domain_errors() {
        let small = VelocityGrid::line(101, 20.0, 1.0).unwrap();
        assert!(matches!(build_equilibrium(0.5, 1, &small), Err(Error::Truncation { .. })));
        assert!(matches!(build_equilibrium(0.0, 1, &small), Err(Error::Domain(_))));
        assert!(matches!(build_equilibrium(-1.0, 1, &small), Err(Error::Domain(_))));
        let e = eq(0.5, 2.0, 301);
        assert!(matches!(e.theta_k(30.0), Err(Error::Truncation { .. })));
    }

    #[test]
    fn nu1_at_origin() {
        for (alpha, d) in [(0.5, 1), (1.0, 1), (0.5, 2), (2.0, 3)] {
            let b = BracketPower { alpha, dim: d };
            assert!((b.schrodinger_potential(0.0) + alpha * d as f64 / 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn nu1_asymptotics() {
        let e = eq(0.5, 2.0, 101);
        // the first correction is 2/sqrt(|v|), so the 5% band needs |v| > 1600
        let v: f64 = 1e4;
        let ratio = e.nu1(v) / (0.25 * 0.25 * v.powf(-1.0));
        assert!((ratio - 1.0).abs() < 0.05, "{ratio}");
        let v: f64 = 100.0;
        let ratio = e.nu1(v) / (0.0625 / v);
        assert!((ratio - (1.0 + 2.0 / v.sqrt())).abs() < 0.01, "{ratio}");
    }

    #[test]
    fn nu1_matches_finite_differences() {
        let alpha = 0.5;
        let b = BracketPower { alpha, dim: 1 };
        let f = |v: f64| (-bracket(v).powf(alpha)).exp();
        for v in [0.0, 0.3, 2.0, 7.0, 40.0] {
            let h = 1e-3 * (1.0 + v);
            let fv = f(v);
            let lap = (f(v + h) - 2.0 * fv + f(v - h)) / (h * h);
            let grad = (f(v + h) - f(v - h)) / (2.0 * h);
            let fd = lap / (2.0 * fv) - grad * grad / (4.0 * fv * fv);
            let exact = b.schrodinger_potential(v);
            assert!(((fd - exact) / exact).abs() < 1e-6, "v={v}: {fd} vs {exact}");
        }
    }

    #[test]
    fn cutoff_meets_weighted_tail_target() {
        for (alpha, k) in [(0.5, 7.0), (1.0, 4.0), (2.0, 2.0)] {
            let v = cutoff_for(alpha, 1, k).unwrap();
            let e = eq(alpha, k, 101);
            let tail = e.c_alpha() * (-bracket(v).powf(alpha)).exp() * bracket(v).powf(k);
            assert!(tail < 1.0001e-12, "alpha={alpha}: {tail}");
        }
    }

    #[test]
    fn measures_are_consistent() {
        let e = eq(0.5, 4.0, 301);
        let xi = WeightedMeasure::new(MeasureKind::Xi, 0.0);
        let nu = WeightedMeasure::new(MeasureKind::Nu { beta: 1.0 }, 0.0);
        let ones = vec![1.0; e.len()];
        assert!((xi.integrate(&e, &ones) - 1.0).abs() < 1e-12);
        assert!((nu.integrate(&e, &ones) - 1.0).abs() < 1e-12);
        let mu = WeightedMeasure::new(MeasureKind::Mu, 2.0);
        let f2: Vec<f64> = e.values().iter().map(|f| f * f).collect();
        assert!((mu.integrate(&e, &f2) - e.theta_k(2.0).unwrap()).abs() < 1e-10);
    }
}
