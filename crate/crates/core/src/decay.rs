//! Lower bounds `Φ` (macroscopic, via Nash) and `Ψ` (microscopic, via Hölder and
//! moment propagation), the resulting Grönwall bound on `H`, and power-law fits.

use rand::Rng;

use crate::diagnostics::{HypoState, Margin};
use crate::equilibria::Equilibrium;
use crate::error::{Error, Result};
use crate::grid::SpatialGrid;
use crate::transport::DistributionField;

/// Safety factor applied to the best ratio found over the test families.
pub const NASH_SAFETY: f64 = 1.5;

/// `ζ = min{d/2, k/β}`; `β = 0` gives `d/2`.
pub fn zeta(d: usize, k: f64, beta: f64) -> f64 {
    let heat = d as f64 / 2.0;
    if beta > 0.0 {
        heat.min(k / beta)
    } else {
        heat
    }
}

/// Certified Nash constant for one dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NashConstant {
    pub d: usize,
    /// Largest `‖u‖₂² / (‖u‖₁^{4/(d+2)} ‖∇u‖₂^{2d/(d+2)})` over the families.
    pub family_max: f64,
    pub value: f64,
}

/// `‖u‖₂² / (‖u‖₁^{4/(d+2)} ‖∇u‖₂^{2d/(d+2)})` from the three integrals.
pub fn nash_ratio(d: usize, l2_sq: f64, l1: f64, grad_sq: f64) -> f64 {
    if l2_sq == 0.0 {
        return 0.0;
    }
    let dd = d as f64;
    l2_sq / (l1.powf(4.0 / (dd + 2.0)) * grad_sq.powf(dd / (dd + 2.0)))
}

/// Integrals `(‖u‖₂², ‖u‖₁, ‖∇u‖₂²)` of a radial profile on `[0, r_max]`
/// (the full line when `d = 1`, by symmetry).
fn radial_integrals(
    d: usize,
    r_max: f64,
    n: usize,
    u: impl Fn(f64) -> f64,
    du: impl Fn(f64) -> f64,
) -> (f64, f64, f64) {
    let h = r_max / n as f64;
    let measure = |r: f64| if d == 1 { 2.0 } else { 2.0 * std::f64::consts::PI * r };
    let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
    for j in 0..n {
        // midpoint rule: profiles below have kinks only at nodes
        let r = (j as f64 + 0.5) * h;
        let m = measure(r) * h;
        let ur = u(r);
        a += m * ur * ur;
        b += m * ur.abs();
        c += m * du(r).powi(2);
    }
    (a, b, c)
}

type Profile = (Box<dyn Fn(f64) -> f64>, Box<dyn Fn(f64) -> f64>, f64);

fn nash_families() -> Vec<Profile> {
    let mut out: Vec<Profile> = vec![
        (Box::new(|r: f64| (-r * r).exp()), Box::new(|r: f64| -2.0 * r * (-r * r).exp()), 9.0),
        (Box::new(|r: f64| 1.0 / r.cosh()), Box::new(|r: f64| -r.tanh() / r.cosh()), 40.0),
        (Box::new(|r: f64| (-r).exp()), Box::new(|r: f64| -(-r).exp()), 40.0),
    ];
    for m in [1.0, 1.5, 2.0, 3.0] {
        out.push((
            Box::new(move |r: f64| if r < 1.0 { (1.0 - r * r).powf(m) } else { 0.0 }),
            Box::new(move |r: f64| if r < 1.0 { -2.0 * m * r * (1.0 - r * r).powf(m - 1.0) } else { 0.0 }),
            1.0,
        ));
    }
    out
}

/// Best ratio over Gaussian, sech, exponential and polynomial-bump profiles, times `NASH_SAFETY`.
/// The ratio is scale invariant, so each family contributes a single number.
pub fn nash_constant(d: usize) -> Result<NashConstant> {
    if !(d == 1 || d == 2) {
        return Err(Error::Domain(format!("Nash constant implemented for d in {{1, 2}}, got {d}")));
    }
    let family_max = nash_families()
        .into_iter()
        .map(|(u, du, r)| {
            let (a, b, c) = radial_integrals(d, r, 200_000, u, du);
            nash_ratio(d, a, b, c)
        })
        .fold(0.0, f64::max);
    Ok(NashConstant { d, family_max, value: NASH_SAFETY * family_max })
}

/// Nash margin of a periodic function from its half spectrum and nodal values.
pub fn nash_margin_periodic(c_nash: f64, x: &SpatialGrid, u_hat: &[num_complex::Complex64], nodal: &[f64]) -> Margin {
    let l2: f64 = u_hat.iter().enumerate().map(|(m, c)| x.parseval(m) * c.norm_sqr()).sum();
    let grad: f64 = u_hat.iter().enumerate().map(|(m, c)| x.parseval(m) * x.wavenumber(m).powi(2) * c.norm_sqr()).sum();
    let l1: f64 = x.dx() * nodal.iter().map(|u| u.abs()).sum::<f64>();
    Margin::new(c_nash * l1.powf(4.0 / 3.0) * grad.powf(1.0 / 3.0), l2)
}

/// Smallest relative Nash margin over random sums of bumps in dimension `d`.
pub fn nash_audit<R: Rng>(c_nash: f64, d: usize, samples: usize, rng: &mut R) -> f64 {
    let n = 4000;
    let span = 12.0;
    let h = 2.0 * span / n as f64;
    let mut worst = f64::INFINITY;
    for _ in 0..samples {
        let bumps: Vec<(f64, f64, f64, bool)> = (0..rng.gen_range(1..=4))
            .map(|_| (rng.gen_range(-4.0..4.0), rng.gen_range(0.2..2.0), rng.gen_range(-1.0..1.0), rng.gen_bool(0.5)))
            .collect();
        let eval = |x: f64, y: f64| -> (f64, f64, f64) {
            let (mut u, mut gx, mut gy) = (0.0, 0.0, 0.0);
            for &(c, w, a, smooth) in &bumps {
                let (dx, dy) = (x - c, y - 0.3 * c);
                let r2 = (dx * dx + if d == 2 { dy * dy } else { 0.0 }) / (w * w);
                let (v, dv) = if smooth {
                    let e = (-r2).exp();
                    (e, -e)
                } else if r2 < 1.0 {
                    ((1.0 - r2).powi(2), -2.0 * (1.0 - r2))
                } else {
                    (0.0, 0.0)
                };
                u += a * v;
                gx += a * dv * 2.0 * dx / (w * w);
                gy += a * dv * 2.0 * dy / (w * w);
            }
            (u, gx, gy)
        };
        let (mut l2, mut l1, mut g2) = (0.0, 0.0, 0.0);
        if d == 1 {
            for j in 0..n {
                let (u, gx, _) = eval(-span + (j as f64 + 0.5) * h, 0.0);
                l2 += h * u * u;
                l1 += h * u.abs();
                g2 += h * gx * gx;
            }
        } else {
            let m = 400;
            let hh = 2.0 * span / m as f64;
            for i in 0..m {
                for j in 0..m {
                    let (u, gx, gy) = eval(-span + (i as f64 + 0.5) * hh, -span + (j as f64 + 0.5) * hh);
                    let a = hh * hh;
                    l2 += a * u * u;
                    l1 += a * u.abs();
                    g2 += a * (gx * gx + gy * gy);
                }
            }
        }
        if l2 == 0.0 {
            continue;
        }
        let dd = d as f64;
        let rhs = c_nash * l1.powf(4.0 / (dd + 2.0)) * g2.powf(dd / (dd + 2.0));
        worst = worst.min((rhs - l2) / (rhs + l2));
    }
    worst
}

/// `Φ⁻¹(y) = 2y + (y/𝖼)^{d/(d+2)}`.
pub fn phi_inverse(y: f64, c_small: f64, d: usize) -> f64 {
    let dd = d as f64;
    2.0 * y + (y / c_small).powf(dd / (dd + 2.0))
}

/// `Φ(z)` by bisection on the increasing `Φ⁻¹`; the root lies in `[0, z/2]`.
pub fn phi(z: f64, c_small: f64, d: usize) -> Result<f64> {
    if !(z >= 0.0) || !(c_small > 0.0) {
        return Err(Error::Domain(format!("phi needs z >= 0 and c > 0, got z = {z}, c = {c_small}")));
    }
    if z == 0.0 {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0, 0.5 * z);
    if phi_inverse(hi, c_small, d) < z {
        return Err(Error::Numeric(format!("phi bracket failed at z = {z}")));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if phi_inverse(mid, c_small, d) < z {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-16 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `Ψ(y) = C₀ y^{1+β/k}`.
pub fn psi(y: f64, c0: f64, beta: f64, k: f64) -> f64 {
    c0 * y.max(0.0).powf(1.0 + beta / k)
}

/// Data from which the rate constants are assembled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateInputs {
    pub d: usize,
    pub beta: f64,
    pub k: f64,
    pub theta: f64,
    pub theta_k: f64,
    /// `𝒦_k`
    pub kk: f64,
    pub kappa: f64,
    pub delta: f64,
    /// Bound on `‖ρ_{f−f̄}(t)‖_{L¹}` valid for all `t`.
    pub l1_bound: f64,
    /// `‖f^init‖²`
    pub z0: f64,
    /// `‖f^init‖_k` (not squared)
    pub norm_k_init: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateModel {
    pub inputs: RateInputs,
    pub zeta: f64,
    pub c_nash: f64,
    /// `𝖼 = Θ C_Nash^{-(d+2)/d} ‖f‖_{L¹}^{-4/d}`
    pub c_small: f64,
    pub c0: f64,
    pub c1: f64,
    /// `min{C₀ z₀^{β/k−1/ζ}, C₁ z₀^{2/d−1/ζ}}`
    pub combined: f64,
    /// `C` of the Grönwall bound.
    pub kappa_rate: f64,
}

impl RateModel {
    pub fn assemble(inputs: RateInputs, c_nash: f64) -> Result<Self> {
        let RateInputs { d, beta, k, theta, theta_k, kk, kappa, delta, l1_bound, z0, norm_k_init } = inputs;
        let dd = d as f64;
        let zeta = zeta(d, k, beta);
        let c_small = theta * c_nash.powf(-(dd + 2.0) / dd) * l1_bound.powf(-4.0 / dd);
        let c0 = (kk * (1.0 + theta_k) * norm_k_init).powf(-2.0 * beta / k);
        let phi_z0 = phi(z0, c_small, d)?;
        let c1 = (2.0 * phi_z0.powf(2.0 / (dd + 2.0)) + c_small.powf(-dd / (dd + 2.0))).powf(-(dd + 2.0) / dd);
        let inv_zeta = 1.0 / zeta;
        let micro = if beta > 0.0 { c0 * z0.powf(beta / k - inv_zeta) } else { f64::INFINITY };
        let combined = micro.min(c1 * z0.powf(2.0 / dd - inv_zeta));
        let kappa_rate = kappa / zeta * combined * (2.0 / (1.0 + delta)).powf(1.0 + inv_zeta);
        let model = Self { inputs, zeta, c_nash, c_small, c0, c1, combined, kappa_rate };
        if ![c_small, c0, c1, kappa_rate].iter().all(|c| c.is_finite() && *c > 0.0) {
            return Err(Error::Numeric(format!("rate constants must be positive and finite: {model:?}")));
        }
        Ok(model)
    }

    pub fn phi_lower(&self, y: f64) -> Result<f64> {
        phi(y, self.c_small, self.inputs.d)
    }

    pub fn psi_lower(&self, y: f64) -> f64 {
        psi(y, self.c0, self.inputs.beta, self.inputs.k)
    }

    /// `min{…} ‖f‖^{2+2/ζ}`.
    pub fn combined_lower(&self, norm2: f64) -> f64 {
        self.combined * norm2.powf(1.0 + 1.0 / self.zeta)
    }

    pub fn bound(&self, h0: f64, t: f64) -> f64 {
        groenwall_bound(h0, self.kappa_rate, self.zeta, t)
    }
}

/// `H₀ (1 + C H₀^{1/ζ} t)^{-ζ}`.
pub fn groenwall_bound(h0: f64, c_rate: f64, zeta: f64, t: f64) -> f64 {
    h0 * (1.0 + c_rate * h0.powf(1.0 / zeta) * t).powf(-zeta)
}

/// Per-snapshot audits of the decay argument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayAudits {
    /// `⟨ATΠf, Πf⟩ >= Φ(‖Πf‖²)`
    pub phi: Margin,
    /// `‖(I−Π)f‖²_{-β} >= Ψ(‖(I−Π)f‖²)`
    pub psi: Margin,
    /// `micro² + pairing >= min{…}‖f‖^{2+2/ζ}`
    pub combined: Margin,
    /// `bound(t) >= H(t)`
    pub groenwall: Margin,
    /// `l1_bound >= ‖ρ_{f−f̄}‖_{L¹}`
    pub l1: Margin,
}

impl DecayAudits {
    pub fn all(&self) -> [(&'static str, Margin); 5] {
        [
            ("phi", self.phi),
            ("psi", self.psi),
            ("combined", self.combined),
            ("groenwall", self.groenwall),
            ("l1", self.l1),
        ]
    }

    pub fn passes(&self) -> bool {
        self.all().iter().all(|(_, m)| m.passes())
    }
}

/// `‖Πf‖² = ‖ρ‖²_{L²(dx)}` from the half spectrum.
pub fn macro_norm2(state: &HypoState, x: &SpatialGrid) -> f64 {
    state.rho_hat.iter().enumerate().map(|(m, r)| x.parseval(m) * r.norm_sqr()).sum()
}

/// Audits one snapshot; `rho_l1` is `‖ρ_{f−f̄}‖_{L¹}` at that time and `h0` is `H[f^init]`.
pub fn audit_state(model: &RateModel, state: &HypoState, x: &SpatialGrid, rho_l1: f64, h0: f64) -> Result<DecayAudits> {
    let pi2 = macro_norm2(state, x);
    let micro_l2 = (state.norm2 - pi2).max(0.0);
    Ok(DecayAudits {
        phi: Margin::new(state.pairing, model.phi_lower(pi2)?),
        psi: Margin::new(state.micro_norm2, model.psi_lower(micro_l2)),
        combined: Margin::new(state.micro_norm2 + state.pairing, model.combined_lower(state.norm2)),
        groenwall: Margin::new(model.bound(h0, state.time), state.h_entropy),
        l1: Margin::new(model.inputs.l1_bound, rho_l1),
    })
}

/// The two steps behind `Ψ` for `g = (I−Π)f` and `θ = k/(k+β)`:
/// `‖g‖_{-β}^{2θ} ‖g‖_k^{2(1−θ)} >= ‖g‖²` and `(1+Θ_k)‖f‖_k >= ‖g‖_k`.
pub fn psi_holder_margins(f: &DistributionField, eq: &Equilibrium, beta: f64, k: f64) -> Result<[Margin; 2]> {
    let mut g = f.clone();
    let rho = f.density_spectrum(eq);
    for (m, r) in rho.iter().enumerate() {
        for (c, fv) in g.mode_mut(m).iter_mut().zip(eq.values()) {
            *c -= r * *fv;
        }
    }
    let theta = k / (k + beta);
    let low = g.norm_sq_weighted(eq, -beta);
    let high = g.norm_sq_weighted(eq, k);
    Ok([
        Margin::new(low.powf(theta) * high.powf(1.0 - theta), g.norm_sq(eq)),
        Margin::new((1.0 + eq.theta_k(k)?) * f.norm_sq_weighted(eq, k).sqrt(), high.sqrt()),
    ])
}

/// Least-squares slope of `log y` against `log(1+t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub stderr: f64,
    /// 95% confidence interval of the slope.
    pub ci: (f64, f64),
    pub points: usize,
}

/// Two-sided 97.5% Student quantile (Cornish-Fisher expansion around the normal quantile).
fn student_975(dof: f64) -> f64 {
    let z: f64 = 1.959_963_984_540_054;
    z + (z.powi(3) + z) / (4.0 * dof) + (5.0 * z.powi(5) + 16.0 * z.powi(3) + 3.0 * z) / (96.0 * dof * dof)
}

/// Fits over samples with `t ∈ [window.0, window.1]`.
pub fn fit_rate(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<RateFit> {
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(t, y)| **t >= window.0 && **t <= window.1 && **y > 0.0)
        .map(|(t, y)| ((1.0 + t).ln(), y.ln()))
        .collect();
    let n = pts.len();
    if n < 3 {
        return Err(Error::Domain(format!("rate fit needs at least 3 samples in the window, got {n}")));
    }
    let nf = n as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= 0.0 {
        return Err(Error::Domain("rate fit window has no spread in time".into()));
    }
    let slope = sxy / sxx;
    let rss: f64 = pts.iter().map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2)).sum();
    let stderr = (rss / (nf - 2.0) / sxx).sqrt();
    let half = student_975(nf - 2.0) * stderr;
    Ok(RateFit { slope, stderr, ci: (slope - half, slope + half), points: n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn psi_holder_steps_hold_on_random_fields() {
        let eq = crate::equilibria::equilibrium_for(0.5, 1, 8.0, 151).unwrap();
        let x = SpatialGrid::new(16, 10.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let f = crate::sampling::random_field(&eq, x, 5, &mut rng);
            assert!(psi_holder_margins(&f, &eq, 1.0, 2.0).unwrap().iter().all(|m| m.passes()));
        }
        let rho = vec![1.0; 16];
        let macro_only = DistributionField::separable(x, &rho, eq.values()).unwrap();
        let [holder, _] = psi_holder_margins(&macro_only, &eq, 1.0, 2.0).unwrap();
        assert!(holder.value.abs() < 1e-20);
    }

    #[test]
    fn zeta_caps_at_half_the_dimension() {
        assert_eq!(zeta(1, 0.25, 1.0), 0.25);
        assert_eq!(zeta(1, 4.0, 1.0), 0.5);
        assert_eq!(zeta(2, 4.0, 0.0), 1.0);
    }

    #[test]
    fn gaussian_ratio_is_width_independent_and_below_the_constant() {
        let c = nash_constant(1).unwrap();
        let ratios: Vec<f64> = [0.3, 1.0, 4.0]
            .iter()
            .map(|&s: &f64| {
                let (a, b, g) = radial_integrals(
                    1,
                    10.0 * s,
                    200_000,
                    |r| (-(r / s).powi(2)).exp(),
                    |r| -2.0 * r / (s * s) * (-(r / s).powi(2)).exp(),
                );
                nash_ratio(1, a, b, g)
            })
            .collect();
        for r in &ratios {
            assert!((r - ratios[0]).abs() < 1e-8);
            assert!(*r < c.value);
        }
        assert_eq!(nash_ratio(1, 0.0, 0.0, 0.0), 0.0);
    }

    #[test]
    fn nash_constant_survives_random_bumps() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let c = nash_constant(1).unwrap();
        assert!(nash_audit(c.value, 1, 200, &mut rng) >= -1e-8);
        let c2 = nash_constant(2).unwrap();
        assert!(nash_audit(c2.value, 2, 10, &mut rng) >= -1e-8);
    }

    #[test]
    fn phi_inverts_its_inverse() {
        for &c in &[1e-6, 0.3, 50.0] {
            for d in [1, 2] {
                assert_eq!(phi(0.0, c, d).unwrap(), 0.0);
                for &y in &[1e-12, 1e-3, 0.7, 30.0] {
                    let z = phi_inverse(y, c, d);
                    assert!((phi(z, c, d).unwrap() - y).abs() <= 1e-12 * y.max(1e-300) + 1e-300);
                }
            }
        }
        assert_eq!(psi(0.0, 2.0, 1.0, 2.0), 0.0);
    }

    #[test]
    fn groenwall_bound_starts_at_h0_and_decays_with_zeta() {
        assert_eq!(groenwall_bound(3.0, 0.2, 0.5, 0.0), 3.0);
        let (t1, t2) = (1e10, 1e11);
        let s = (groenwall_bound(1.0, 0.2, 0.5, t2) / groenwall_bound(1.0, 0.2, 0.5, t1)).ln() / 10f64.ln();
        assert!((s + 0.5).abs() < 1e-6);
    }

    #[test]
    fn fit_recovers_exact_power_law() {
        let t: Vec<f64> = (0..50).map(|j| j as f64 * 2.0).collect();
        let y: Vec<f64> = t.iter().map(|t| 3.0 * (1.0 + t).powf(-0.75)).collect();
        let fit = fit_rate(&t, &y, (10.0, 100.0)).unwrap();
        assert!((fit.slope + 0.75).abs() < 1e-12 && fit.stderr < 1e-10);
        assert!(fit.ci.0 <= fit.slope && fit.slope <= fit.ci.1);
        assert!(fit_rate(&t, &y, (200.0, 300.0)).is_err());
    }
}
