//! Subcommand implementations. Each writes its files under the output directory and
//! returns whether every audit passed.

use std::path::Path;

use anyhow::{bail, Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use hypoaudit::collision::{drift_constants, lyapunov_margin, macroscopic_diffusivity};
use hypoaudit::decay::{fit_rate, nash_audit, nash_constant, psi_holder_margins, zeta};
use hypoaudit::experiment::{run_kinetic, velocity_profile, KineticReport, KineticSetup};
use hypoaudit::homogeneous::{
    holder_margin, prop_b_tail_slope, run_homogeneous, weak_poincare_audit, HomogeneousConfig,
};
use hypoaudit::moments::{absorption_bound_margin, holder_step_margin, SplittingSpec};
use hypoaudit::sampling::{random_field, random_profile};
use hypoaudit::spectral::{
    build_schrodinger, compute_c_corollary, compute_c_star, random_smooth, rayleigh_audit, Centering,
};
use hypoaudit::{
    equilibrium_for, CollisionKind, CollisionOperator, Diagnostics, Margin, SolverConfig, SpatialGrid, AUDIT_SLACK,
};

use crate::config::{Collision, ConfigError, ExperimentConfig, Mode, SweepAxis};
use crate::report::{Csv, TextReport};
use crate::row;

pub struct Outcome {
    pub passed: bool,
    pub summary: Vec<String>,
}

fn require_line(cfg: &ExperimentConfig, what: &str) -> Result<()> {
    if cfg.d != 1 {
        return Err(ConfigError::Field {
            field: "physics.d".into(),
            message: format!("{what} runs are implemented for d = 1, got d = {}", cfg.d),
        }
        .into());
    }
    Ok(())
}

fn operator(cfg: &ExperimentConfig) -> Result<CollisionOperator> {
    let eq = equilibrium_for(cfg.alpha, cfg.d, cfg.resolved_k_max(), cfg.nv)?;
    Ok(CollisionOperator::new(&cfg.collision_spec(), &eq)?)
}

fn header_report(title: &str, cfg: &ExperimentConfig) -> TextReport {
    let mut r = TextReport::new(title);
    r.raw("# resolved configuration\n").raw(&cfg.to_text());
    r
}

fn entropy_section(r: &mut TextReport, diag: &Diagnostics) {
    let c = diag.constants();
    let eq = diag.equilibrium();
    r.section("constants.equilibrium").kv("c_alpha", eq.c_alpha()).kv("theta", eq.theta());
    r.section("constants.entropy")
        .kv("c2", c.c2)
        .kv("c4", c.c4)
        .kv("cf", c.cf)
        .kv("cf_analytic", c.cf_analytic.map_or("n/a".to_string(), |v| v.to_string()))
        .kv("c_micro", c.c_micro)
        .kv("delta", diag.delta())
        .kv("kappa", diag.kappa());
}

fn setup_for(cfg: &ExperimentConfig) -> KineticSetup {
    let solver = SolverConfig { dt: cfg.dt, t_end: cfg.t_end, splitting: cfg.splitting, scheme: cfg.scheme };
    KineticSetup {
        collision: cfg.collision_spec(),
        alpha: cfg.alpha,
        k: cfg.k,
        nx: cfg.nx,
        nv: cfg.nv,
        k_max: cfg.resolved_k_max(),
        length: cfg.length,
        solver,
        every: cfg.every,
        profile: cfg.profile,
        bump_width: cfg.bump_width,
    }
}

/// Rows past the wrap time are omitted: nothing is claimed once the torus has wrapped.
fn kinetic_csv(report: &KineticReport) -> Csv {
    let first = &report.rows[0];
    let extra: Vec<&str> = first.state.audits.all().iter().map(|(n, _)| *n).filter(|n| *n != "prop2").collect();
    let decay: Vec<&str> = first.decay.all().iter().map(|(n, _)| *n).collect();
    let mut header: Vec<String> = [
        "t",
        "norm2",
        "H",
        "D",
        "micro2",
        "pairing",
        "margin_prop2",
        "norm_k2",
        "rho_l1",
        "bound",
        "autocorrelation",
        "d_dissipation",
        "d_pairing",
        "d_at_cross",
        "d_ta",
        "d_al_cross",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend(extra.iter().chain(&decay).map(|n| format!("margin_{n}")));
    let mut csv = Csv::new(&header);
    for r in report.rows.iter().filter(|r| report.t_wrap.is_none_or(|tw| r.state.time < tw)) {
        let s = &r.state;
        let mut cells = row![
            s.time,
            s.norm2,
            s.h_entropy,
            s.d_production,
            s.micro_norm2,
            s.pairing,
            s.audits.prop2.relative(),
            r.norm_k2,
            r.rho_l1,
            r.bound,
            r.autocorrelation,
            s.terms.dissipation,
            s.terms.pairing,
            s.terms.at_cross,
            s.terms.ta,
            s.terms.al_cross,
        ];
        let margins = s.audits.all().into_iter().filter(|(n, _)| *n != "prop2").chain(r.decay.all());
        cells.extend(margins.map(|(_, m)| crate::report::Cell::cell(&m.relative())));
        csv.push(cells);
    }
    csv
}

fn kinetic_report(r: &mut TextReport, cfg: &ExperimentConfig, report: &KineticReport) -> Result<()> {
    let op = operator(cfg)?;
    let diag = Diagnostics::new(&op, &[cfg.k])?;
    let spec = SplittingSpec::default_for(&op, cfg.k)?;
    let emitted = report.rows.iter().filter(|row| report.t_wrap.is_none_or(|tw| row.state.time < tw)).count();
    r.section("run")
        .kv("length", report.x.length)
        .kv("macroscopic_diffusivity", macroscopic_diffusivity(&op)?)
        .kv("t_wrap", report.t_wrap.map_or("none".to_string(), |t| t.to_string()))
        .kv("rows_emitted", emitted)
        .kv("rows_total", report.rows.len())
        .kv("h_max_relative_increase", report.h_max_increase);
    entropy_section(r, &diag);
    r.kv("theta_k", op.equilibrium().theta_k(cfg.k)?);
    let b = &report.moment_bound;
    r.section("constants.moments")
        .kv("k1", spec.k1)
        .kv("k2", spec.k2)
        .kv("a", spec.a)
        .kv("r", spec.r)
        .kv("ell", spec.ell)
        .kv("b_k1", spec.b_k1)
        .kv("kk", b.kk)
        .kv("duhamel_integral", b.duhamel_integral)
        .kv("prefactor", b.prefactor)
        .kv("exponent", b.exponent)
        .kv("observed_sup", report.moment_audit.observed_sup);
    let m = &report.rate;
    r.section("constants.rate")
        .kv("zeta", m.zeta)
        .kv("c_nash", m.c_nash)
        .kv("c_small", m.c_small)
        .kv("c0", m.c0)
        .kv("c1", m.c1)
        .kv("combined", m.combined)
        .kv("c_rate", m.kappa_rate)
        .kv("l1_bound", m.inputs.l1_bound)
        .kv("z0", m.inputs.z0)
        .kv("norm_k_init", m.inputs.norm_k_init);
    r.section("fit");
    match &report.fit {
        Some(f) => r
            .kv("slope", f.slope)
            .kv("stderr", f.stderr)
            .kv("ci_low", f.ci.0)
            .kv("ci_high", f.ci.1)
            .kv("points", f.points),
        None => r.kv("slope", "n/a"),
    };
    Ok(())
}

fn failure_lines(failures: &[(String, f64)]) -> Vec<String> {
    failures.iter().map(|(n, t)| format!("audit `{n}` failed (first at t = {t})")).collect()
}

pub fn simulate(cfg: &ExperimentConfig, out: &Path, check_only: bool) -> Result<Outcome> {
    cfg.expect_mode(Mode::Kinetic)?;
    require_line(cfg, "kinetic")?;
    if check_only {
        return simulate_check(cfg, out);
    }
    let report = run_kinetic(&setup_for(cfg))?;
    kinetic_csv(&report).write(&out.join("timeseries.csv"))?;
    let mut text = header_report("kinetic run", cfg);
    kinetic_report(&mut text, cfg, &report)?;
    let failures = report.failures();
    audit_section(&mut text, &failures);
    text.write(&out.join("constants.txt"))?;
    let mut summary = vec![format!(
        "{} rows, H({}) = {:e}",
        report.rows.len(),
        cfg.t_end,
        report.rows.last().map_or(0.0, |r| r.state.h_entropy)
    )];
    if let Some(f) = report.fit {
        summary.push(format!("fitted slope of ‖f‖² {:.4} (ζ = {})", f.slope, report.rate.zeta));
    }
    summary.extend(failure_lines(&failures));
    Ok(Outcome { passed: failures.is_empty(), summary })
}

fn audit_section(text: &mut TextReport, failures: &[(String, f64)]) {
    text.section("audits").kv("slack", AUDIT_SLACK).kv("failures", failures.len());
    for (n, t) in failures {
        text.kv(n, format!("first failure at t = {t}"));
    }
}

/// Minimum relative margin per named audit.
struct AuditTable {
    rows: Vec<(String, usize, f64)>,
}

impl AuditTable {
    fn new() -> Self {
        Self { rows: Vec::new() }
    }

    fn add(&mut self, name: &str, margins: impl IntoIterator<Item = Margin>) {
        let (mut n, mut worst) = (0, f64::INFINITY);
        for m in margins {
            n += 1;
            worst = worst.min(m.relative());
        }
        self.rows.push((name.to_string(), n, worst));
    }

    fn add_min(&mut self, name: &str, samples: usize, worst: f64) {
        self.rows.push((name.to_string(), samples, worst));
    }

    fn passed(&self) -> bool {
        self.rows.iter().all(|(_, _, w)| *w >= -AUDIT_SLACK)
    }

    fn write(&self, out: &Path) -> Result<Vec<String>> {
        let mut csv = Csv::new(&["audit", "samples", "min_relative_margin", "passes"]);
        let mut lines = Vec::new();
        for (name, n, w) in &self.rows {
            let ok = *w >= -AUDIT_SLACK;
            csv.push(row![name.as_str(), *n, *w, ok]);
            lines.push(format!("{} {name}: {n} samples, min margin {w:.3e}", if ok { "ok  " } else { "FAIL" }));
        }
        csv.write(&out.join("audit.csv"))?;
        Ok(lines)
    }
}

fn simulate_check(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    let op = operator(cfg)?;
    let eq = op.equilibrium();
    let diag = Diagnostics::new(&op, &[cfg.k])?;
    let length = cfg.length.unwrap_or_else(|| 2.0 * std::f64::consts::PI * eq.theta().sqrt() * 4.0);
    let x = SpatialGrid::new(cfg.nx, length)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let beta = cfg.resolved_beta();
    let mut per_audit: Vec<(&'static str, Vec<Margin>)> = Vec::new();
    for _ in 0..cfg.audit_samples {
        let f = random_field(eq, x, 6, &mut rng);
        let state = diag.evaluate(&f);
        let [h1, h2] = psi_holder_margins(&f, eq, beta, cfg.k)?;
        let all = state.audits.all().into_iter().chain([("psi_holder", h1), ("psi_moment", h2)]);
        for (name, m) in all {
            match per_audit.iter_mut().find(|(n, _)| *n == name) {
                Some((_, v)) => v.push(m),
                None => per_audit.push((name, vec![m])),
            }
        }
    }
    let mut table = AuditTable::new();
    for (name, margins) in per_audit {
        table.add(name, margins);
    }
    let summary = table.write(out)?;
    let mut text = header_report("kinetic random-field audits", cfg);
    text.section("run").kv("seed", cfg.seed).kv("length", length).kv("samples", cfg.audit_samples);
    entropy_section(&mut text, &diag);
    text.write(&out.join("constants.txt"))?;
    Ok(Outcome { passed: table.passed(), summary })
}

pub fn homogeneous(cfg: &ExperimentConfig, out: &Path, check_only: bool) -> Result<Outcome> {
    cfg.expect_mode(Mode::Homogeneous)?;
    require_line(cfg, "homogeneous")?;
    if cfg.collision != Collision::FokkerPlanck {
        return Err(ConfigError::Field {
            field: "collision.kind".into(),
            message: "the homogeneous bound is stated for fokker_planck".into(),
        }
        .into());
    }
    let op = operator(cfg)?;
    let eq = op.equilibrium();
    let beta = cfg.resolved_beta();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    if check_only {
        let mut table = AuditTable::new();
        let hs: Vec<Vec<f64>> = (0..cfg.audit_samples).map(|_| random_smooth(eq.grid(), &mut rng)).collect();
        table.add("holder", hs.iter().map(|h| holder_margin(eq, h, beta, cfg.k)));
        let wp = weak_poincare_audit(&op, 0.5 * beta, cfg.audit_samples, &mut rng)?;
        table.add_min("weak_poincare", wp.samples, wp.min_margin);
        let summary = table.write(out)?;
        let mut text = header_report("homogeneous random-function audits", cfg);
        text.section("constants.weak_poincare")
            .kv("eta", wp.constant.eta)
            .kv("tau", wp.constant.tau)
            .kv("constant", wp.constant.constant);
        text.write(&out.join("constants.txt"))?;
        return Ok(Outcome { passed: table.passed(), summary });
    }

    let g = velocity_profile(cfg.profile, eq, cfg.k);
    let hcfg =
        HomogeneousConfig { dt: cfg.dt, t_end: cfg.t_end, every: cfg.every, scheme: cfg.scheme, keep_snapshots: false };
    let run = run_homogeneous(&op, &g, cfg.k, &hcfg)?;
    let bc = run.bound_constants.context("bound constants for fokker_planck")?;
    let bounds = run.bound_margins().context("bound margins")?;
    let groenwall = run.groenwall_margins().context("groenwall margins")?;
    let y0 = run.y_series[0];
    let mut csv = Csv::new(&["t", "y", "bound", "margin_bound", "margin_groenwall", "mass", "norm_k", "dissipation"]);
    for i in 0..run.times.len() {
        let t = run.times[i];
        csv.push(row![
            t,
            run.y_series[i],
            bc.bound(y0, t),
            bounds[i].relative(),
            groenwall[i].relative(),
            run.mass[i],
            run.norm_k[i],
            run.dissipation[i],
        ]);
    }
    csv.write(&out.join("timeseries.csv"))?;

    let tail = prop_b_tail_slope(y0, bc.big_k, bc.c, bc.beta, bc.k);
    let fit = fit_rate(&run.times, &run.y_series, (0.5 * cfg.t_end, cfg.t_end)).ok();
    let mut failures = Vec::new();
    if let Some(i) = bounds.iter().position(|m| !m.passes()) {
        failures.push(("bound".to_string(), run.times[i]));
    }
    if let Some(i) = groenwall.iter().position(|m| !m.passes()) {
        failures.push(("groenwall".to_string(), run.times[i]));
    }
    if run.max_y_increase() > AUDIT_SLACK {
        failures.push(("y_monotone".to_string(), f64::NAN));
    }
    if run.moment_sup() > bc.kk_k {
        failures.push(("moment_propagation".to_string(), f64::NAN));
    }

    let mut text = header_report("homogeneous run", cfg);
    text.section("constants.bound")
        .kv("kk_k", bc.kk_k)
        .kv("big_k", bc.big_k)
        .kv("c", bc.c)
        .kv("beta", bc.beta)
        .kv("k", bc.k)
        .kv("y0", y0)
        .kv("moment_sup", run.moment_sup())
        .kv("mass_drift", run.mass_drift());
    text.section("fit").kv("bound_tail_slope", tail).kv("predicted_tail_slope", -bc.k / bc.beta);
    match fit {
        Some(f) => text.kv("observed_slope", f.slope).kv("observed_ci_low", f.ci.0).kv("observed_ci_high", f.ci.1),
        None => text.kv("observed_slope", "n/a"),
    };
    audit_section(&mut text, &failures);
    text.write(&out.join("constants.txt"))?;
    let mut summary = vec![format!("bound tail slope {tail:.4} (predicted {})", -bc.k / bc.beta)];
    if let Some(f) = fit {
        summary.push(format!("observed late slope of y {:.4}", f.slope));
    }
    summary.extend(failure_lines(&failures));
    Ok(Outcome { passed: failures.is_empty(), summary })
}

pub fn spectral(cfg: &ExperimentConfig, out: &Path, check_only: bool) -> Result<Outcome> {
    cfg.expect_mode(Mode::Spectral)?;
    let beta = cfg.resolved_beta();
    let problem = build_schrodinger(cfg.alpha, beta, cfg.d, cfg.spectral_r, cfg.spectral_n)?;
    let (c_star, c_cor, sigma0, refinements, converged) = if check_only {
        (problem.c_star(), compute_c_corollary(&problem)?, problem.sigma0(), Vec::new(), None)
    } else {
        let res = compute_c_star(&problem)?;
        (res.c_star, res.c_corollary, res.sigma0, res.refinements, Some(res.converged))
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let nu = rayleigh_audit(&problem, c_star, Centering::Nu, cfg.audit_samples, &mut rng);
    let xi = rayleigh_audit(&problem, c_cor, Centering::Xi, cfg.audit_samples, &mut rng);
    let mut table = AuditTable::new();
    table.add_min("rayleigh_c_star", nu.samples, nu.min_margin);
    table.add_min("rayleigh_c_corollary", xi.samples, xi.min_margin);
    let mut summary = table.write(out)?;

    let conv = converged.map_or("n/a".to_string(), |c| c.to_string());
    let mut csv = Csv::new(&["alpha", "beta", "R", "n", "c_star", "c_corollary", "sigma0", "converged"]);
    csv.push(row![cfg.alpha, beta, cfg.spectral_r, cfg.spectral_n, c_star, c_cor, sigma0, conv.as_str()]);
    csv.write(&out.join("spectral.csv"))?;
    let mut text = header_report("spectral constants", cfg);
    text.section("constants.spectral")
        .kv("c_star", c_star)
        .kv("c_corollary", c_cor)
        .kv("c_norm", problem.c_norm)
        .kv("sigma0", sigma0)
        .kv("zero_mode_residual", problem.zero_mode_residual())
        .kv("converged", conv.as_str());
    for (i, (r, n, c)) in refinements.iter().enumerate() {
        text.kv(&format!("refinement_{i}"), format!("R = {r}, n = {n}, C* = {c}"));
    }
    text.write(&out.join("constants.txt"))?;
    summary.insert(0, format!("C* = {c_star:.6e}, corollary constant = {c_cor:.6e}, converged = {conv}"));
    Ok(Outcome { passed: table.passed(), summary })
}

struct SweepPoint {
    value: f64,
    cfg: ExperimentConfig,
    report: KineticReport,
}

pub fn sweep(cfg: &ExperimentConfig, out: &Path, check_only: bool) -> Result<Outcome> {
    cfg.expect_mode(Mode::RatesSweep)?;
    require_line(cfg, "kinetic")?;
    if check_only {
        bail!("--check-only is not available for sweeps; use `audit` instead");
    }
    let points: Vec<ExperimentConfig> = cfg
        .sweep_values
        .iter()
        .map(|&v| {
            let mut c = cfg.clone();
            match cfg.sweep_axis {
                SweepAxis::K => c.k = v,
                SweepAxis::Alpha => c.alpha = v,
            }
            c.validate().map(|_| c)
        })
        .collect::<std::result::Result<_, _>>()?;
    let results: Vec<Result<KineticReport>> = std::thread::scope(|s| {
        let handles: Vec<_> = points.iter().map(|c| s.spawn(move || Ok(run_kinetic(&setup_for(c))?))).collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(anyhow::anyhow!("sweep worker panicked"))))
            .collect()
    });
    let mut runs = Vec::new();
    for ((c, v), r) in points.into_iter().zip(&cfg.sweep_values).zip(results) {
        runs.push(SweepPoint { value: *v, cfg: c, report: r? });
    }

    let axis = if cfg.sweep_axis == SweepAxis::K { "k" } else { "alpha" };
    let mut table = Csv::new(&[
        "k",
        "alpha",
        "zeta_pred",
        "zeta_fit",
        "zeta_fit_low",
        "zeta_fit_high",
        "bound_violations",
        "audit_failures",
        "t_wrap",
    ]);
    let mut summary =
        vec![format!("{:>6} {:>6} {:>9} {:>9} {:>16}", "k", "alpha", "zeta_pred", "zeta_fit", "bound_violations")];
    let mut passed = true;
    for p in &runs {
        let r = &p.report;
        let name = format!("run_{axis}_{}.csv", p.value);
        kinetic_csv(r).write(&out.join(name))?;
        let pre_wrap = r.rows.iter().filter(|row| r.t_wrap.is_none_or(|tw| row.state.time < tw));
        let violations = pre_wrap.filter(|row| !row.decay.groenwall.passes()).count();
        let failures = r.failures();
        passed &= failures.is_empty();
        let z = zeta(1, p.cfg.k, p.cfg.resolved_beta());
        let (fit, lo, hi) = r.fit.map_or((f64::NAN, f64::NAN, f64::NAN), |f| (-f.slope, -f.ci.1, -f.ci.0));
        let wrap = r.t_wrap.map_or("none".to_string(), |t| t.to_string());
        table.push(row![p.cfg.k, p.cfg.alpha, z, fit, lo, hi, violations, failures.len(), wrap.as_str()]);
        summary.push(format!("{:>6} {:>6} {:>9.4} {:>9.4} {:>16}", p.cfg.k, p.cfg.alpha, z, fit, violations));
        summary.extend(failure_lines(&failures).into_iter().map(|l| format!("  {axis}={}: {l}", p.value)));
    }
    table.write(&out.join("sweep.csv"))?;
    let mut text = header_report("rate sweep", cfg);
    for p in &runs {
        text.raw(&format!("\n# ---- {axis} = {} ----", p.value));
        kinetic_report(&mut text, &p.cfg, &p.report)?;
    }
    text.write(&out.join("constants.txt"))?;
    Ok(Outcome { passed, summary })
}

/// Pure-inequality battery on seeded random functions.
pub fn audit(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    require_line(cfg, "audit")?;
    let op = operator(cfg)?;
    let eq = op.equilibrium();
    let n = cfg.audit_samples;
    let beta = cfg.resolved_beta();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut table = AuditTable::new();

    let spec = SplittingSpec::default_for(&op, cfg.k)?;
    let profiles: Vec<Vec<f64>> = (0..n).map(|_| random_profile(eq, &mut rng)).collect();
    table.add("splitting_holder", profiles.iter().map(|f| holder_step_margin(&op, &spec, f)));
    table.add("absorption", profiles.iter().map(|f| absorption_bound_margin(&op, &spec, f)));
    let dc = drift_constants(op.spec(), eq, cfg.k)?;
    table.add(
        "lyapunov",
        profiles.iter().map(|f| {
            let scale = op.inner_mu(f, f);
            Margin { value: lyapunov_margin(&op, &dc, f), scale }
        }),
    );
    let hs: Vec<Vec<f64>> = (0..n).map(|_| random_smooth(eq.grid(), &mut rng)).collect();
    table.add("homogeneous_holder", hs.iter().map(|h| holder_margin(eq, h, beta, cfg.k)));
    if op.spec().kind == CollisionKind::FokkerPlanck {
        let wp = weak_poincare_audit(&op, 0.5 * beta, n, &mut rng)?;
        table.add_min("weak_poincare", wp.samples, wp.min_margin);
    }

    let diag = Diagnostics::new(&op, &[cfg.k])?;
    let x = SpatialGrid::new(cfg.nx.min(32), 2.0 * std::f64::consts::PI * eq.theta().sqrt())?;
    let (mut micro, mut psi, mut cs) = (Vec::new(), Vec::new(), Vec::new());
    for _ in 0..n {
        let f = random_field(eq, x, 6, &mut rng);
        let a = diag.evaluate(&f).audits;
        micro.push(a.micro);
        cs.extend([a.step2, a.step3, a.ta_norm, a.step4]);
        psi.extend(psi_holder_margins(&f, eq, beta, cfg.k)?);
    }
    table.add("micro_coercivity", micro);
    table.add("cauchy_schwarz", cs);
    table.add("micro_holder", psi);
    let nash = nash_constant(1)?;
    table.add_min("nash", n, nash_audit(nash.value, 1, n, &mut rng));

    let summary = table.write(out)?;
    let mut text = header_report("pure-inequality audits", cfg);
    text.section("constants.nash").kv("family_max", nash.family_max).kv("certified", nash.value);
    entropy_section(&mut text, &diag);
    text.write(&out.join("constants.txt"))?;
    Ok(Outcome { passed: table.passed(), summary })
}
