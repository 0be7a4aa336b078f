//! Modified entropy `H`, its production `D`, and audits of the inequality chain
//! leading to `D[f] >= κ(‖(I−Π)f‖²_{-β} + ⟨ATΠf, Πf⟩)`.
//!
//! Every operator here is diagonal in the spatial Fourier modes, so each identity
//! holds mode by mode. All quantities are evaluated on the fluctuation `f − f̄`
//! around the torus equilibrium `f̄ = (M/L) F`.

use num_complex::Complex64;

use crate::collision::{scattering_micro_constant, CollisionKind, CollisionOperator};
use crate::equilibria::Equilibrium;
use crate::error::{Error, Result};
use crate::grid::{bracket, GridKind, SpatialGrid};
use crate::spectral::micro_constant;
use crate::transport::{mu_weights, DistributionField};

/// Relative slack allowed on every audited inequality.
pub const AUDIT_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepConstants {
    /// `Θ_{β+2}/Θ`
    pub c2: f64,
    /// `Θ_{β+4}/Θ`
    pub c4: f64,
    /// `‖L(vF)‖_β / √Θ`, computed with the discrete operator.
    pub cf: f64,
    /// `‖∇F‖_{L²(<v>^β dμ)} / √Θ` for Fokker-Planck.
    pub cf_analytic: Option<f64>,
    /// Micro-coercivity constant in the `‖·‖_{-β}` normalization.
    pub c_micro: f64,
}

impl StepConstants {
    pub fn compute(op: &CollisionOperator) -> Result<Self> {
        let eq = op.equilibrium();
        require_line(eq)?;
        let beta = op.spec().beta;
        let theta = eq.theta();
        let c2 = eq.theta_k(beta + 2.0)? / theta;
        let c4 = eq.theta_k(beta + 4.0)? / theta;
        let vf: Vec<f64> = eq.grid().nodes().iter().zip(eq.values()).map(|(v, f)| v * f).collect();
        let lvf = op.apply(&vf)?;
        let wb = mu_weights(eq, beta);
        let cf = (lvf.iter().zip(&wb).map(|(l, w)| w * l * l).sum::<f64>() / theta).sqrt();
        let (cf_analytic, c_micro) = match op.spec().kind {
            CollisionKind::FokkerPlanck => {
                let fam = eq.potential_family();
                let g: Vec<f64> = eq
                    .grid()
                    .nodes()
                    .iter()
                    .map(|&v| fam.radial_derivative(v.abs()).powi(2) * bracket(v).powf(beta))
                    .collect();
                (Some((eq.average(&g) / theta).sqrt()), micro_constant(eq, beta))
            }
            CollisionKind::Scattering => (None, scattering_micro_constant(op.spec(), eq)?),
        };
        let sc = Self { c2, c4, cf, cf_analytic, c_micro };
        if ![c2, c4, cf, c_micro].iter().all(|c| c.is_finite() && *c > 0.0) {
            return Err(Error::Numeric(format!("step constants must be positive and finite: {sc:?}")));
        }
        Ok(sc)
    }
}

fn require_line(eq: &Equilibrium) -> Result<()> {
    if eq.grid().kind() != GridKind::Line {
        return Err(Error::Config("diagnostics are implemented for d = 1".into()));
    }
    Ok(())
}

/// Smallest eigenvalue of `[[C − δC₂, −δ(C₄+C_F)/2], [−δ(C₄+C_F)/2, δ]]`.
pub fn q_min_eigenvalue(sc: &StepConstants, delta: f64) -> f64 {
    let a = sc.c_micro - delta * sc.c2;
    let b = -0.5 * delta * (sc.c4 + sc.cf);
    let c = delta;
    let disc = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    let mean = 0.5 * (a + c);
    if mean <= 0.0 {
        return mean - disc;
    }
    // det / λ_max avoids cancellation when δ is many orders below C
    (a * c - b * b) / (mean + disc)
}

/// `δ ∈ (0,1)` maximizing `κ(δ)`, found by golden-section search in `log10 δ`.
pub fn choose_delta(sc: &StepConstants) -> Result<(f64, f64)> {
    let f = |t: f64| q_min_eigenvalue(sc, 10f64.powf(t));
    let (mut a, mut b) = (-30.0, (0.999f64).log10());
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        }
    }
    let t = 0.5 * (a + b);
    let (delta, kappa) = (10f64.powf(t), f(t));
    if !(kappa > 0.0) {
        return Err(Error::Config(format!("no admissible delta: best kappa = {kappa:e} at delta = {delta:e}")));
    }
    Ok((delta, kappa))
}

/// Signed audit margin: the inequality holds when `value >= -AUDIT_SLACK * scale`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Margin {
    pub value: f64,
    pub scale: f64,
}

impl Margin {
    pub fn new(lhs: f64, rhs: f64) -> Self {
        // encodes lhs >= rhs
        Self { value: lhs - rhs, scale: lhs.abs() + rhs.abs() }
    }

    pub fn relative(&self) -> f64 {
        if self.scale > 0.0 {
            self.value / self.scale
        } else {
            0.0
        }
    }

    pub fn passes(&self) -> bool {
        self.value >= -AUDIT_SLACK * self.scale
    }
}

/// The five inner products of `D[f]`, before multiplication by `δ`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DTerms {
    /// `−⟨Lf, f⟩`
    pub dissipation: f64,
    /// `⟨ATΠf, Πf⟩`
    pub pairing: f64,
    /// `⟨AT(I−Π)f, Πf⟩`
    pub at_cross: f64,
    /// `⟨TA(I−Π)f, (I−Π)f⟩`
    pub ta: f64,
    /// `⟨AL(I−Π)f, Πf⟩`
    pub al_cross: f64,
}

impl DTerms {
    pub fn total(&self, delta: f64) -> f64 {
        self.dissipation + delta * (self.pairing + self.at_cross - self.ta - self.al_cross)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Audits {
    /// `−⟨Lf,f⟩ >= C ‖(I−Π)f‖²_{-β}`
    pub micro: Margin,
    /// `C₄ X Y >= |⟨AT(I−Π)f, Πf⟩|`
    pub step2: Margin,
    /// `C₂ X² >= ⟨TA(I−Π)f, (I−Π)f⟩`
    pub step3: Margin,
    /// `⟨TA(I−Π)f, (I−Π)f⟩ >= 0`
    pub ta_nonneg: Margin,
    /// `C₂ X >= ‖TAf‖_β`
    pub ta_norm: Margin,
    /// `C_F X Y >= |⟨AL(I−Π)f, Πf⟩|`
    pub step4: Margin,
    /// `D >= κ (X² + Y²)`
    pub prop2: Margin,
    /// `H >= ½(1−δ)‖f‖²`
    pub h_lower: Margin,
    /// `½(1+δ)‖f‖² >= H`
    pub h_upper: Margin,
}

impl Audits {
    pub fn all(&self) -> [(&'static str, Margin); 9] {
        [
            ("micro", self.micro),
            ("step2", self.step2),
            ("step3", self.step3),
            ("ta_nonneg", self.ta_nonneg),
            ("ta_norm", self.ta_norm),
            ("step4", self.step4),
            ("prop2", self.prop2),
            ("h_lower", self.h_lower),
            ("h_upper", self.h_upper),
        ]
    }

    pub fn passes(&self) -> bool {
        self.all().iter().all(|(_, m)| m.passes())
    }
}

/// Snapshot of the hypocoercivity quantities at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct HypoState {
    pub time: f64,
    pub rho_hat: Vec<Complex64>,
    pub u_hat: Vec<Complex64>,
    pub norm2: f64,
    /// `(k, ‖f‖_k²)`
    pub norms: Vec<(f64, f64)>,
    pub micro_norm2: f64,
    pub pairing: f64,
    pub h_entropy: f64,
    pub d_production: f64,
    pub terms: DTerms,
    pub delta: f64,
    pub kappa: f64,
    pub audits: Audits,
}

/// `ρ̂_m = Σ_i w_i f̂_{m,i}`.
pub fn rho(f: &DistributionField, eq: &Equilibrium) -> Vec<Complex64> {
    f.density_spectrum(eq)
}

/// `Πf = ρ_f F`.
pub fn project_pi(f: &DistributionField, eq: &Equilibrium) -> DistributionField {
    let rho = f.density_spectrum(eq);
    let mut out = f.clone();
    for (m, r) in rho.iter().enumerate() {
        for (c, fv) in out.mode_mut(m).iter_mut().zip(eq.values()) {
            *c = r * *fv;
        }
    }
    out
}

/// `u − ΘΔu = ρ`: `û = ρ̂ / (1 + Θξ²)`.
pub fn solve_elliptic(rho_hat: &[Complex64], theta: f64, x: &SpatialGrid) -> Vec<Complex64> {
    rho_hat.iter().enumerate().map(|(m, r)| r / (1.0 + theta * x.wavenumber(m).powi(2))).collect()
}

/// `Θ‖∇u‖² + Θ²‖Δu‖²`.
pub fn atpi_pairing(u_hat: &[Complex64], theta: f64, x: &SpatialGrid) -> f64 {
    u_hat
        .iter()
        .enumerate()
        .map(|(m, u)| {
            let xi2 = x.wavenumber(m).powi(2);
            x.parseval(m) * (theta * xi2 + theta * theta * xi2 * xi2) * u.norm_sqr()
        })
        .sum()
}

fn first_moment(mode: &[Complex64], eq: &Equilibrium) -> Complex64 {
    eq.grid().weights().iter().zip(eq.grid().nodes()).zip(mode).map(|((w, v), c)| c * (w * v)).sum()
}

/// `Af = wF` with `w − ΘΔw = −∇ₓ·∫ v f dv`; returns `ŵ`.
pub fn apply_a(f: &DistributionField, eq: &Equilibrium, theta: f64) -> Vec<Complex64> {
    let x = f.x_grid();
    (0..f.modes())
        .map(|m| {
            let xi = x.wavenumber(m);
            let j = first_moment(f.mode(m), eq);
            Complex64::new(0.0, -xi) * j / (1.0 + theta * xi * xi)
        })
        .collect()
}

/// `TAf = v ∂ₓw F`.
pub fn apply_ta(f: &DistributionField, eq: &Equilibrium, theta: f64) -> DistributionField {
    let w_hat = apply_a(f, eq, theta);
    let x = *f.x_grid();
    let mut out = DistributionField::zeros(x, eq.len());
    for (m, w) in w_hat.iter().enumerate() {
        let xi = x.wavenumber(m);
        for ((c, &v), fv) in out.mode_mut(m).iter_mut().zip(eq.grid().nodes()).zip(eq.values()) {
            *c = Complex64::new(0.0, xi * v) * w * *fv;
        }
    }
    out
}

/// Hypocoercivity apparatus bound to one collision operator.
#[derive(Debug, Clone)]
pub struct Diagnostics {
    op: CollisionOperator,
    theta: f64,
    beta: f64,
    constants: StepConstants,
    delta: f64,
    kappa: f64,
    norm_ks: Vec<f64>,
    /// `Σ w <v>^β v² F`
    ta_weight: f64,
}

impl Diagnostics {
    pub fn new(op: &CollisionOperator, norm_ks: &[f64]) -> Result<Self> {
        let constants = StepConstants::compute(op)?;
        let (delta, kappa) = choose_delta(&constants)?;
        let eq = op.equilibrium();
        let beta = op.spec().beta;
        let v2b: Vec<f64> = eq.grid().nodes().iter().map(|&v| v * v * bracket(v).powf(beta)).collect();
        Ok(Self {
            op: op.clone(),
            theta: eq.theta(),
            beta,
            constants,
            delta,
            kappa,
            norm_ks: norm_ks.to_vec(),
            ta_weight: eq.average(&v2b),
        })
    }

    /// Uses a caller-chosen `δ`; `κ` is recomputed from the quadratic form.
    pub fn with_delta(mut self, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::Domain(format!("delta must lie in (0, 1), got {delta}")));
        }
        self.delta = delta;
        self.kappa = q_min_eigenvalue(&self.constants, delta);
        Ok(self)
    }

    pub fn constants(&self) -> &StepConstants {
        &self.constants
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn operator(&self) -> &CollisionOperator {
        &self.op
    }

    pub fn equilibrium(&self) -> &Equilibrium {
        self.op.equilibrium()
    }

    /// `H[f − f̄]`.
    pub fn entropy_h(&self, f: &DistributionField) -> f64 {
        self.evaluate(f).h_entropy
    }

    /// `D[f − f̄]`.
    pub fn production_d(&self, f: &DistributionField) -> f64 {
        self.evaluate(f).d_production
    }

    pub fn evaluate(&self, f: &DistributionField) -> HypoState {
        let eq = self.op.equilibrium();
        let g = f.fluctuation(eq);
        let x = *g.x_grid();
        let theta = self.theta;
        let w = eq.grid().weights();
        let v = eq.grid().nodes();
        let fe = eq.values();
        let w_minus = mu_weights(eq, -self.beta);
        let rho_hat = g.density_spectrum(eq);
        let u_hat = solve_elliptic(&rho_hat, theta, &x);
        let pairing = atpi_pairing(&u_hat, theta, &x);
        let mut terms = DTerms { pairing, ..DTerms::default() };
        let (mut a_ff, mut micro2, mut ta_norm2) = (0.0, 0.0, 0.0);
        let mut h = vec![Complex64::default(); eq.len()];
        let mut lh = vec![Complex64::default(); eq.len()];
        for (m, &r) in rho_hat.iter().enumerate().take(g.modes()) {
            let p = x.parseval(m);
            let xi = x.wavenumber(m);
            let den = 1.0 + theta * xi * xi;
            let gm = g.mode(m);
            for i in 0..eq.len() {
                h[i] = gm[i] - r * fe[i];
            }
            micro2 += p * h.iter().zip(&w_minus).map(|(c, wm)| wm * c.norm_sqr()).sum::<f64>();
            terms.dissipation += p * self.op.dissipation(gm);
            let j_h = first_moment(&h, eq);
            let s2: Complex64 = (0..eq.len()).map(|i| h[i] * (w[i] * v[i] * v[i])).sum();
            terms.at_cross += p * (s2 * (xi * xi / den) * r.conj()).re;
            terms.ta += p * xi * xi * j_h.norm_sqr() / den;
            let w1 = Complex64::new(0.0, -xi) * j_h / den;
            ta_norm2 += p * xi * xi * w1.norm_sqr() * self.ta_weight;
            self.op.apply_into(&h, &mut lh);
            let w5 = Complex64::new(0.0, -xi) * first_moment(&lh, eq) / den;
            terms.al_cross += p * (w5 * r.conj()).re;
            let wg = Complex64::new(0.0, -xi) * first_moment(gm, eq) / den;
            a_ff += p * (wg * r.conj()).re;
        }
        let norm2 = g.norm_sq(eq);
        let norms = self.norm_ks.iter().map(|&k| (k, g.norm_sq_weighted(eq, k))).collect();
        let (delta, kappa, c) = (self.delta, self.kappa, &self.constants);
        let h_entropy = 0.5 * norm2 + delta * a_ff;
        let d_production = terms.total(delta);
        let (xx, yy) = (micro2.sqrt(), pairing.sqrt());
        let audits = Audits {
            micro: Margin::new(terms.dissipation, c.c_micro * micro2),
            step2: Margin::new(c.c4 * xx * yy, terms.at_cross.abs()),
            step3: Margin::new(c.c2 * micro2, terms.ta),
            ta_nonneg: Margin::new(terms.ta, 0.0),
            ta_norm: Margin::new(c.c2 * xx, ta_norm2.sqrt()),
            step4: Margin::new(c.cf * xx * yy, terms.al_cross.abs()),
            prop2: Margin::new(d_production, kappa * (micro2 + pairing)),
            h_lower: Margin::new(h_entropy, 0.5 * (1.0 - delta) * norm2),
            h_upper: Margin::new(0.5 * (1.0 + delta) * norm2, h_entropy),
        };
        HypoState {
            time: f.time,
            rho_hat,
            u_hat,
            norm2,
            norms,
            micro_norm2: micro2,
            pairing,
            h_entropy,
            d_production,
            terms,
            delta,
            kappa,
            audits,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collision::{CollisionSpec, KernelFamily};
    use crate::equilibria::equilibrium_for;
    use crate::sampling::random_field;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn setup(spec: CollisionSpec) -> (Diagnostics, SpatialGrid) {
        let eq = equilibrium_for(0.5, 1, 7.0, 161).unwrap();
        let op = CollisionOperator::new(&spec, &eq).unwrap();
        (Diagnostics::new(&op, &[2.0]).unwrap(), SpatialGrid::new(32, 40.0).unwrap())
    }

    #[test]
    fn projection_is_idempotent_and_self_adjoint() {
        let (d, x) = setup(CollisionSpec::fokker_planck(0.5));
        let eq = d.equilibrium();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = random_field(eq, x, 6, &mut rng);
        let g = random_field(eq, x, 6, &mut rng);
        let pf = project_pi(&f, eq);
        let ppf = project_pi(&pf, eq);
        for (a, b) in pf.spectrum().iter().zip(ppf.spectrum()) {
            assert!((a - b).norm() <= 1e-12 * (1.0 + a.norm()));
        }
        let inner = |a: &DistributionField, b: &DistributionField| -> f64 {
            let wmu = mu_weights(eq, 0.0);
            (0..a.modes())
                .map(|m| {
                    x.parseval(m)
                        * a.mode(m)
                            .iter()
                            .zip(b.mode(m))
                            .zip(&wmu)
                            .map(|((p, q), w)| w * (p * q.conj()).re)
                            .sum::<f64>()
                })
                .sum()
        };
        let lhs = inner(&pf, &g);
        let rhs = inner(&f, &project_pi(&g, eq));
        assert!((lhs - rhs).abs() < 1e-11 * (lhs.abs() + rhs.abs()));
    }

    #[test]
    fn elliptic_solve_is_exact() {
        let x = SpatialGrid::new(16, 10.0).unwrap();
        let theta = 3.0;
        let mut rho = vec![Complex64::default(); x.modes()];
        rho[0] = Complex64::new(16.0 * 2.5, 0.0);
        rho[1] = Complex64::new(8.0, 0.0);
        let u = solve_elliptic(&rho, theta, &x);
        assert!((u[0].re - 40.0).abs() < 1e-14);
        let k = 2.0 * PI / 10.0;
        assert!((u[1].re - 8.0 / (1.0 + theta * k * k)).abs() < 1e-14);
        assert_eq!(atpi_pairing(&solve_elliptic(&[Complex64::new(5.0, 0.0)], theta, &x), theta, &x), 0.0);
        let p = atpi_pairing(&u, theta, &x);
        let direct = x.parseval(1) * theta * k * k * (1.0 + theta * k * k) * u[1].norm_sqr();
        assert!((p - direct).abs() < 1e-14 * p);
    }

    #[test]
    fn local_equilibrium_has_no_flux_and_zero_production_when_uniform() {
        let (d, x) = setup(CollisionSpec::fokker_planck(0.5));
        let eq = d.equilibrium();
        let rho: Vec<f64> = x.nodes().iter().map(|x| 1.0 + (2.0 * PI * x / 40.0).cos()).collect();
        let f = DistributionField::separable(x, &rho, eq.values()).unwrap();
        let w = apply_a(&f, eq, d.theta());
        assert!(w.iter().all(|c| c.norm() < 1e-12));
        let uniform = DistributionField::separable(x, &vec![2.0; x.n], eq.values()).unwrap();
        let s = d.evaluate(&uniform);
        assert!(s.d_production.abs() < 1e-20 && s.norm2 < 1e-20);
    }

    #[test]
    fn constants_and_delta() {
        for spec in [CollisionSpec::fokker_planck(0.5), CollisionSpec::scattering(KernelFamily::Separable, 1.0)] {
            let (d, _) = setup(spec);
            let c = d.constants();
            let (delta, kappa) = (d.delta(), d.kappa());
            assert!(delta > 0.0 && delta < 1.0 && kappa > 0.0);
            let k = c.c4 + c.cf;
            assert!(delta * (c.c_micro - delta * c.c2) > delta * delta * k * k / 4.0);
            assert!(q_min_eigenvalue(c, 1e-40) < 1e-39);
            for t in [0.5, 2.0] {
                assert!(q_min_eigenvalue(c, delta * t) <= kappa * (1.0 + 1e-9));
            }
        }
    }

    #[test]
    fn random_audits_pass() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for spec in [
            CollisionSpec::fokker_planck(0.5),
            CollisionSpec::scattering(KernelFamily::Separable, 1.0),
            CollisionSpec::scattering(KernelFamily::Boltzmann, 0.5),
        ] {
            let (d, x) = setup(spec);
            for _ in 0..50 {
                let f = random_field(d.equilibrium(), x, 8, &mut rng);
                let s = d.evaluate(&f);
                for (name, m) in s.audits.all() {
                    assert!(m.passes(), "{:?} {name}: {m:?}", spec.kind);
                }
            }
        }
    }

    #[test]
    fn pairing_matches_direct_inner_product() {
        let (d, x) = setup(CollisionSpec::fokker_planck(0.5));
        let eq = d.equilibrium();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let f = random_field(eq, x, 8, &mut rng).fluctuation(eq);
        let s = d.evaluate(&f);
        // ⟨Πf − uF, Πf⟩ = ∫ (ρ − u) ρ dx
        let direct: f64 =
            s.rho_hat.iter().zip(&s.u_hat).enumerate().map(|(m, (r, u))| x.parseval(m) * ((r - u) * r.conj()).re).sum();
        assert!((direct - s.pairing).abs() < 1e-9 * s.pairing);
    }
}
