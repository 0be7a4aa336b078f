//! Random test fields for the randomized audits.

use num_complex::Complex64;
use rand::Rng;

use crate::equilibria::Equilibrium;
use crate::grid::SpatialGrid;
use crate::spectral::random_smooth;
use crate::transport::DistributionField;

/// `f = Σ_m c_m(x) F(v) h_m(v)` over the lowest `max_modes` modes, with random smooth `h_m`.
pub fn random_field<R: Rng>(eq: &Equilibrium, x: SpatialGrid, max_modes: usize, rng: &mut R) -> DistributionField {
    let mut f = DistributionField::zeros(x, eq.len());
    for m in 0..max_modes.min(x.modes()) {
        let re = random_smooth(eq.grid(), rng);
        let im = if m == 0 { vec![0.0; eq.len()] } else { random_smooth(eq.grid(), rng) };
        let amp = x.n as f64 * rng.gen_range(0.2..1.0) / (1.0 + m as f64);
        for (i, c) in f.mode_mut(m).iter_mut().enumerate() {
            *c = Complex64::new(re[i], im[i]) * (amp * eq.values()[i]);
        }
    }
    f
}

/// Random velocity profile `F(v) h(v)` with `h` smooth.
pub fn random_profile<R: Rng>(eq: &Equilibrium, rng: &mut R) -> Vec<f64> {
    random_smooth(eq.grid(), rng).iter().zip(eq.values()).map(|(h, f)| h * f).collect()
}
