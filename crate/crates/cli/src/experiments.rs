//! One runner per experiment. Each returns its check reports, extra text
//! tables and the CSV body; nothing is written here.

use std::fmt::Write;

use anyhow::{bail, Context, Result};
use polyfreq_core::blackbody::{self, ThermalParams};
use polyfreq_core::fields::{self, CoherentFieldSpec, Component, FieldKind, FieldPoint};
use polyfreq_core::multi::{self, ExtensionWeights, MultiSpace, VacuumSpec};
use polyfreq_core::oscillator::{self, BasisIndex, SingleBasis, StateVector};
use polyfreq_core::perturbation::first_order::{coupling, EXCITED};
use polyfreq_core::perturbation::kernel::{delta_t, lobe_half_width};
use polyfreq_core::perturbation::slots::{self, SecondOrderOptions};
use polyfreq_core::perturbation::{self, EmissionOptions, MultiLevelAtom, TwoLevelAtom};
use polyfreq_core::{Constants, ModeSet, Report, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{Experiment, Fixture, ModeSpec, PhiConfig, RunConfig, WeightsConfig};
use crate::modes_text::{format_modes, parse_modes};

pub struct Outcome {
    pub reports: Vec<Report>,
    pub text: String,
    pub csv: Vec<u8>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.reports.iter().all(Report::passed)
    }
}

pub fn run(cfg: &RunConfig) -> Result<Outcome> {
    match cfg.experiment {
        Experiment::AlgebraCheck => algebra_check(cfg),
        Experiment::FieldsCheck => fields_check(cfg),
        Experiment::Emission => emission(cfg),
        Experiment::TwoPhoton => two_photon(cfg),
        Experiment::Blackbody => blackbody_curves(cfg),
    }
}

pub fn build_modes(cfg: &RunConfig) -> Result<ModeSet> {
    let constants = Constants::default();
    let volume = cfg.modes.volume;
    let ms = match &cfg.modes.spec {
        ModeSpec::Cubic { box_length, max_index, count } => {
            let ms = ModeSet::cubic(*box_length, *max_index, volume, constants)?;
            match count {
                Some(c) if *c < ms.len() => ms.truncated(*c)?,
                _ => ms,
            }
        }
        ModeSpec::Shell { box_length, omega_min, omega_max } => ModeSet::shell(*box_length, *omega_min, *omega_max, volume, constants)?,
        ModeSpec::Listed(text) => parse_modes(text, volume, constants)?,
    };
    Ok(ms)
}

fn weights(cfg: &RunConfig) -> Result<ExtensionWeights> {
    Ok(match &cfg.weights {
        WeightsConfig::Canonical => ExtensionWeights::canonical(cfg.max_sector),
        WeightsConfig::Ones => ExtensionWeights::ones(cfg.max_sector),
        WeightsConfig::Explicit(c) => ExtensionWeights::explicit(c[..cfg.max_sector].to_vec())?,
    })
}

fn rng(cfg: &RunConfig) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(cfg.seed)
}

fn normalize(v: Vec<C64>) -> Result<Vec<C64>> {
    let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        bail!("vacuum.phi: profile vanishes on every mode in use");
    }
    Ok(v.into_iter().map(|a| a / norm).collect())
}

fn profile(cfg: &RunConfig) -> impl Fn(f64) -> f64 + '_ {
    let v = &cfg.vacuum;
    move |w: f64| v.amplitude * (-(w - v.center) * (w - v.center) / (2.0 * v.width * v.width)).exp()
}

fn vacuum_phi(cfg: &RunConfig, ms: &ModeSet, rng: &mut ChaCha8Rng) -> Result<Vec<C64>> {
    let phi = match &cfg.vacuum.phi {
        PhiConfig::Profile => {
            let f = profile(cfg);
            ms.modes().iter().map(|m| C64::new(f(m.omega).sqrt(), 0.0)).collect()
        }
        PhiConfig::Explicit(v) => {
            if v.len() != ms.len() {
                bail!("vacuum.phi has {} entries for {} modes", v.len(), ms.len());
            }
            v.clone()
        }
        PhiConfig::Random => (0..ms.len()).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect(),
    };
    normalize(phi)
}

fn random_points(rng: &mut ChaCha8Rng, count: usize) -> Vec<FieldPoint> {
    (0..count)
        .map(|_| FieldPoint::new(rng.gen_range(-3.0..3.0), [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)]))
        .collect()
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::Writer::from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<Vec<u8>> {
    w.into_inner().map_err(|e| anyhow::anyhow!("csv buffer: {e}"))
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn report_rows(reports: &[Report]) -> Result<Vec<u8>> {
    let mut w = csv_writer();
    w.write_record(["report", "identity", "deviation", "criterion", "bound", "passed"])?;
    for r in reports {
        for e in &r.entries {
            let (kind, bound) = match e.expect {
                polyfreq_core::Expect::AtMost(b) => ("at_most", b),
                polyfreq_core::Expect::AtLeast(b) => ("at_least", b),
            };
            w.write_record([r.title.as_str(), &e.name, &num(e.deviation), kind, &num(bound), if e.passed() { "true" } else { "false" }])?;
        }
    }
    finish(w)
}

fn rel(x: C64, y: C64) -> f64 {
    let s = x.norm().max(y.norm());
    if s == 0.0 {
        0.0
    } else {
        (x - y).norm() / s
    }
}

fn algebra_check(cfg: &RunConfig) -> Result<Outcome> {
    let ms = build_modes(cfg)?;
    let n_max = cfg.n_max;
    let w = weights(cfg)?;
    let mut rng = rng(cfg);
    let mut reports = vec![oscillator::algebra_report(&ms, n_max)?];

    let h = oscillator::hamiltonian(&ms, n_max)?;
    let annihilators: Vec<_> = (0..ms.len()).map(|m| oscillator::mode_annihilator(&ms, m, n_max)).collect::<Result<_, _>>()?;
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let t = rng.gen_range(0.0..10.0);
        for (m, a) in annihilators.iter().enumerate() {
            let evolved = oscillator::heisenberg_evolve(a, &h, t, ms.constants().hbar)?;
            worst = worst.max(evolved.max_deviation(&a.scaled(C64::from_polar(1.0, -ms.mode(m).omega * t))));
        }
    }
    let mut heis = Report::new(format!("Heisenberg evolution (10 seeded times, seed {})", cfg.seed));
    heis.at_most("e^{iHt} a_k e^{-iHt} = e^{-i omega_k t} a_k", worst, 1e-10);
    reports.push(heis);
    reports.push(multi::bold_algebra_report(&ms, n_max, &w, cfg.max_sector)?);

    let mut text = String::new();
    writeln!(text, "# mode set")?;
    text.push_str(&format_modes(&ms));
    let space = MultiSpace::new(&ms, n_max, cfg.max_sector)?;
    writeln!(text, "\n# sector dimensions (d = {})", space.single().dim())?;
    for (k, dim) in space.sector_dims().into_iter().enumerate() {
        writeln!(text, "k = {}  dim = {dim}", k + 1)?;
    }
    writeln!(text, "\n# generator eigenvalues of mode 0 (units of hbar omega)")?;
    for row in multi::sector_energy_spectrum_demo(&ms, 0)? {
        writeln!(text, "{:<38} k = {}  n = {:?}  E = {}", row.label, row.sector, row.occupation, row.energy)?;
    }
    if cfg.vacuum.p.len() == cfg.max_sector {
        let single = space.single();
        let mut ground = vec![C64::new(0.0, 0.0); single.dim()];
        ground[single.flat(BasisIndex { mode: 0, n: 0 })] = C64::new(1.0, 0.0);
        let sectors = (1..=cfg.max_sector)
            .map(|k| Ok(space.sector(k).product_state(&ground)?.into_iter().map(|a| a * cfg.vacuum.p[k - 1].sqrt()).collect()))
            .collect::<Result<Vec<Vec<C64>>>>()?;
        let psi = multi::MultiState::new(&space, sectors)?;
        let raised = multi::bold_annihilator(&space, &w, 0)?.adjoint().apply(&psi);
        writeln!(text, "\n# bold a_0^dag on the mode-0 ground state (sqrt p_k per sector)")?;
        writeln!(text, "k, occupation (mode:n), re, im")?;
        for (k, occ, a) in raised.rows(&space) {
            let occ: Vec<String> = occ.iter().map(|b| format!("{}:{}", b.mode, b.n)).collect();
            writeln!(text, "{k}, {}, {}, {}", occ.join(" "), a.re, a.im)?;
        }
    }
    let csv = report_rows(&reports)?;
    Ok(Outcome { reports, text, csv })
}

fn fields_check(cfg: &RunConfig) -> Result<Outcome> {
    let ms = build_modes(cfg)?;
    let n_max = cfg.n_max;
    let mut rng = rng(cfg);
    let points = random_points(&mut rng, cfg.fields.points);
    let mut reports = vec![fields::energy_momentum_identity_check(&ms, n_max, &points)?];

    let mut comm = 0.0f64;
    for p in &points {
        for a in Component::ALL {
            for b in Component::ALL {
                comm = comm.max(fields::eb_commutator(&ms, n_max, a, b, p)?.deviation);
            }
        }
    }
    let mut r = Report::new("field commutator");
    r.at_most("[E_a, B_b] = closed form (all components, all points)", comm, 1e-11);
    reports.push(r);

    let phi = normalize((0..ms.len()).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect())?;
    let alpha: Vec<C64> =
        (0..ms.len()).map(|_| C64::from_polar(cfg.fields.alpha, rng.gen_range(0.0..std::f64::consts::TAU))).collect();
    let n_coh = cfg.fields.coherent_n_max;
    let spec = CoherentFieldSpec::new(&ms, phi.clone(), alpha.clone(), n_coh).context("fields.coherent_n_max")?;
    let mut w = csv_writer();
    w.write_record(["t", "x", "y", "z", "field", "re_x", "im_x", "re_y", "im_y", "re_z", "im_z"])?;
    let mut coh = Report::new(format!("coherent-state averages (|alpha| = {}, n_max = {n_coh})", cfg.fields.alpha));
    for which in [FieldKind::A, FieldKind::E, FieldKind::B] {
        let mut worst = 0.0f64;
        for p in &points {
            let closed = fields::coherent_field_average(&ms, &spec, which, p);
            let explicit = fields::explicit_field_average(&ms, &spec, which, p)?;
            worst = (0..3).map(|i| (closed[i] - explicit[i]).norm()).fold(worst, f64::max);
            let mut rec = vec![num(p.t), num(p.x[0]), num(p.x[1]), num(p.x[2]), format!("{which:?}")];
            for c in closed {
                rec.push(num(c.re));
                rec.push(num(c.im));
            }
            w.write_record(&rec)?;
        }
        coh.at_most(format!("<{which:?}> explicit = closed form"), worst, 1e-9);
    }
    let oracle: f64 = (0..ms.len()).map(|k| ms.constants().hbar * ms.mode(k).omega * phi[k].norm_sqr() * (alpha[k].norm_sqr() + 0.5)).sum();
    let explicit = oscillator::average_energy(&spec.state(&ms)?, &ms, n_coh)?;
    coh.at_most("<H> = sum hbar omega |Phi|^2 (|alpha|^2 + 1/2)", (explicit - oracle).abs().max((fields::coherent_energy(&ms, &spec) - oracle).abs()), 1e-9);
    reports.push(coh);

    let mut text = String::from("# mode set\n");
    text.push_str(&format_modes(&ms));
    writeln!(text, "\n# spacetime points (seed {})", cfg.seed)?;
    for p in &points {
        writeln!(text, "t = {:.6}  x = ({:.6}, {:.6}, {:.6})", p.t, p.x[0], p.x[1], p.x[2])?;
    }
    Ok(Outcome { reports, text, csv: finish(w)? })
}

/// The `count` modes closest in frequency to `omega0`, in mode-set order.
fn nearest_modes(ms: &ModeSet, omega0: f64, count: usize) -> Result<ModeSet> {
    let mut idx: Vec<usize> = (0..ms.len()).collect();
    idx.sort_by(|&a, &b| (ms.mode(a).omega - omega0).abs().total_cmp(&(ms.mode(b).omega - omega0).abs()).then(a.cmp(&b)));
    idx.truncate(count);
    idx.sort_unstable();
    Ok(ModeSet::new(idx.iter().map(|&i| *ms.mode(i)).collect(), ms.volume(), *ms.constants())?)
}

fn emission(cfg: &RunConfig) -> Result<Outcome> {
    let ms = build_modes(cfg)?;
    let a = &cfg.atom;
    let atom = TwoLevelAtom::new(a.omega0, a.dipole, a.orientation)?;
    let f = profile(cfg);
    let mut opts = EmissionOptions::new(cfg.tolerances.t);
    opts.min_lobe_frequencies = cfg.tolerances.min_lobe_frequencies;
    let uniform = perturbation::emission_rate(&atom, |_| 1.0, &ms, &opts)?;
    let shaped = perturbation::emission_rate(&atom, &f, &ms, &opts)?;

    let mut rates = Report::new(format!("emission rate ({} modes, T = {})", ms.len(), opts.t));
    rates.at_most("P/P_old = 1 for F = 1", (uniform.ratio - 1.0).abs(), 1e-12);
    rates.at_most("P/P_old = F(omega_0)", (shaped.ratio / f(atom.omega0) - 1.0).abs(), cfg.tolerances.rate_ratio);
    let mut reports = vec![rates];

    let small = nearest_modes(&ms, atom.omega0, cfg.vacuum.modes)?;
    let mut rng = rng(cfg);
    let v = VacuumSpec::new(vacuum_phi(cfg, &small, &mut rng)?, cfg.vacuum.p.clone())?;
    let w = weights(cfg)?;
    let multi = perturbation::multi_first_order(&atom, &v, &w, &small, cfg.max_sector, 2.0)?;
    let mut mr = Report::new(format!("multi-oscillator first order ({} modes, M = {})", small.len(), cfg.max_sector));
    mr.at_most("|correction|^2 / single = sum k c_k^2 p_k", (multi.numeric_factor / multi.rate_factor - 1.0).abs(), 1e-12);
    if w.is_canonical() {
        mr.at_most("sum k c_k^2 p_k = 1 for c_k = 1/sqrt k", (multi.rate_factor - 1.0).abs(), 1e-14);
    }
    let placement_gap = multi.placements.iter().enumerate().map(|(i, &p)| (p as f64 - (i + 1) as f64).abs()).fold(0.0, f64::max);
    mr.at_most("k slot placements in sector k", placement_gap, 0.0);

    // first-order residual scales as d^2
    let basis = SingleBasis::for_modes(&small, 2);
    let mut amps = vec![C64::new(0.0, 0.0); 2 * basis.dim()];
    amps[EXCITED * basis.dim() + basis.flat(BasisIndex { mode: 0, n: 0 })] = C64::new(1.0, 0.0);
    let initial = StateVector::normalized(amps)?;
    let half = TwoLevelAtom::new(a.omega0, a.dipole / 2.0, a.orientation)?;
    let r_full = perturbation::first_order_residual(&atom, &small, 2, &initial, 2.0)?;
    let r_half = perturbation::first_order_residual(&half, &small, 2, &initial, 2.0)?;
    mr.at_most("residual(d) / residual(d/2) = 4", (r_full / r_half - 4.0).abs(), 0.2);
    reports.push(mr);

    let mut text = String::new();
    writeln!(text, "# rates (lobe holds {} distinct frequencies)", shaped.lobe_frequencies)?;
    writeln!(text, "{:<10} {:>14} {:>14} {:>12} {:>12}", "profile", "P", "P_old", "P/P_old", "F(omega_0)")?;
    writeln!(text, "{:<10} {:>14.6e} {:>14.6e} {:>12.6} {:>12.6}", "uniform", uniform.p, uniform.p_old, uniform.ratio, 1.0)?;
    writeln!(text, "{:<10} {:>14.6e} {:>14.6e} {:>12.6} {:>12.6}", "gaussian", shaped.p, shaped.p_old, shaped.ratio, f(atom.omega0))?;
    writeln!(text, "\n# multi-oscillator factor")?;
    writeln!(text, "c_k = {:?}  p_k = {:?}", w.values(), v.p())?;
    writeln!(text, "sum k c_k^2 p_k = {}  numeric = {}", multi.rate_factor, multi.numeric_factor)?;
    writeln!(text, "\n# modes used for the multi-oscillator vacuum")?;
    text.push_str(&format_modes(&small));

    let half_width = lobe_half_width(opts.t, ms.constants().hbar);
    let mut rows: Vec<(f64, usize, f64)> = Vec::new();
    for m in 0..ms.len() {
        let omega = ms.mode(m).omega;
        if (omega - atom.omega0).abs() > 3.0 * half_width {
            continue;
        }
        let weight = coupling(&atom, &ms, m).norm_sqr() * delta_t(atom.omega0 - omega, opts.t, 1.0);
        match rows.last_mut() {
            Some(r) if (r.0 - omega).abs() <= 1e-12 * omega => {
                r.1 += 1;
                r.2 += weight;
            }
            _ => rows.push((omega, 1, weight)),
        }
    }
    rows.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut merged: Vec<(f64, usize, f64)> = Vec::new();
    for r in rows {
        match merged.last_mut() {
            Some(l) if (l.0 - r.0).abs() <= 1e-12 * r.0 => {
                l.1 += r.1;
                l.2 += r.2;
            }
            _ => merged.push(r),
        }
    }
    let mut wtr = csv_writer();
    wtr.write_record(["omega", "modes", "profile", "kernel_weight"])?;
    for (omega, count, weight) in merged {
        wtr.write_record([num(omega), count.to_string(), num(f(omega)), num(weight)])?;
    }
    Ok(Outcome { reports, text, csv: finish(wtr)? })
}

fn two_photon(cfg: &RunConfig) -> Result<Outcome> {
    let ms = build_modes(cfg)?;
    if ms.len() < 2 {
        bail!("two-photon needs at least two modes");
    }
    let atom = match cfg.atom.fixture {
        Fixture::ThreeLevel => MultiLevelAtom::three_level_fixture(),
        Fixture::FourLevel => MultiLevelAtom::four_level_fixture(),
    };
    let mut rng = rng(cfg);
    let v = VacuumSpec::new(vacuum_phi(cfg, &ms, &mut rng)?, cfg.vacuum.p.clone())?;
    let w = weights(cfg)?;
    if w.max_sector() < 2 {
        bail!("truncation.max_sector must be at least 2 for two-quanta amplitudes");
    }
    let opts = SecondOrderOptions { t: cfg.tolerances.t, eta: cfg.tolerances.eta, regularize: false };
    let coarse = SecondOrderOptions { eta: 10.0 * opts.eta, ..opts };
    let levels = (atom.levels() - 1, 0);

    let (mut ratio, mut closed_dev, mut swap, mut eta_dev, mut prob_dev, mut identity) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut wtr = csv_writer();
    wtr.write_record(["channel", "route", "re", "im", "abs2"])?;
    for i in 0..ms.len() {
        for j in (i + 1)..ms.len() {
            let targets = (i, j);
            let modified = perturbation::second_order_two_quanta(&atom, &v, &w, &ms, levels, targets, &opts)?.value;
            let swapped = perturbation::second_order_two_quanta(&atom, &v, &w, &ms, levels, (j, i), &opts)?.value;
            let closed = perturbation::closed_form_two_quanta(&atom, &v, &w, &ms, levels, targets, &opts)?;
            let standard = perturbation::standard_oracle_two_photon(&atom, &ms, levels, targets, &opts)?;
            let expected = w.get(2) * w.get(2) * v.p_k(2).sqrt() * v.phi()[i] * v.phi()[j];
            ratio = ratio.max(rel(modified, expected * standard));
            closed_dev = closed_dev.max(rel(modified, closed));
            swap = swap.max(rel(modified, swapped));
            let loose = perturbation::second_order_two_quanta(&atom, &v, &w, &ms, levels, targets, &coarse)?.value;
            eta_dev = eta_dev.max(rel(modified, loose));

            let closed_p = slots::two_photon_probability(&v, &w, standard.norm_sqr(), targets)?;
            let numeric_p = slots::two_photon_probability_numeric(&atom, &v, &w, &ms, levels, targets, &opts)?;
            if closed_p > 0.0 || numeric_p > 0.0 {
                prob_dev = prob_dev.max((numeric_p - closed_p).abs() / closed_p.max(numeric_p));
            }
            if w.max_sector() >= 3 {
                let r = perturbation::three_oscillator_identity_check(&atom, &v, &w, &ms, levels, targets, &opts)?;
                identity = r.entries.iter().map(|e| e.deviation).fold(identity, f64::max);
            }
            let channel = format!("{i}-{j}");
            for (route, value) in [("modified", modified), ("closed_form", closed), ("standard", standard)] {
                wtr.write_record([channel.as_str(), route, &num(value.re), &num(value.im), &num(value.norm_sqr())])?;
            }
        }
    }
    let mut amp = Report::new(format!("two-quanta amplitudes (levels {} -> {}, T = {}, eta = {})", levels.0, levels.1, opts.t, opts.eta));
    amp.at_most("modified = c_2^2 sqrt(p_2) phi_1 phi_2 x standard", ratio, 1e-10);
    amp.at_most("slot engine = closed form", closed_dev, 1e-10);
    amp.at_most("swap symmetry", swap, 1e-12);
    amp.at_most("stable under eta -> 10 eta", eta_dev, 0.01);
    if w.max_sector() >= 3 {
        amp.at_most("c_3^-2 A_3 = c_2^-2 A_2, every spectator placement", identity, 1e-10);
    }
    let mut max_exc = 0usize;
    for k in 1..=w.max_sector() {
        max_exc = max_exc.max(slots::second_order_max_excitation(&atom, &ms, v.phi(), w.get(k), k, levels.0, &opts)?);
    }
    amp.at_most("second order adds at most two quanta", max_exc as f64, 2.0);

    let mut prob = Report::new("two-quanta probability");
    prob.at_most("sector sum = factor x |phi_1|^2 |phi_2|^2 x p_old", prob_dev, 1e-10);
    let factor = slots::two_photon_factor(&v, &w)?;
    if w.is_canonical() {
        prob.at_most("factor = 1 - sum p_n / n", (factor - slots::canonical_two_photon_factor(&v)).abs(), 1e-15);
    }
    let reports = vec![amp, prob];

    let mut text = String::from("# mode set\n");
    text.push_str(&format_modes(&ms));
    writeln!(text, "\n# vacuum")?;
    writeln!(text, "phi = [{}]", v.phi().iter().map(|z| format!("{z}")).collect::<Vec<_>>().join(", "))?;
    writeln!(text, "p_k = {:?}  c_k = {:?}", v.p(), w.values())?;
    writeln!(text, "probability factor 2 sum C(n,2) c_n^4 p_n = {factor}")?;
    Ok(Outcome { reports, text, csv: finish(wtr)? })
}

/// Root of `x = 3 (1 - e^-x)` by Newton iteration.
fn planck_peak_root() -> f64 {
    let mut x = 3.0f64;
    for _ in 0..50 {
        let g = x - 3.0 * (1.0 - (-x).exp());
        x -= g / (1.0 - 3.0 * (-x).exp());
    }
    x
}

fn blackbody_curves(cfg: &RunConfig) -> Result<Outcome> {
    let th = &cfg.thermal;
    let constants = Constants::default();
    let grid = blackbody::log_grid(th.x_min, th.x_max, th.points)?;
    let rel_tol = cfg.tolerances.rel_tol;
    let limit = blackbody::planck_limit_report(th.beta, &th.mu, &grid, constants, rel_tol)?;
    let mut report = limit.report.clone();

    for (curve, dev) in limit.curves.iter().zip(&limit.deviations) {
        if curve.mu_over_kt() <= -10.0 {
            report.at_most(format!("mu = {} k_B T within 1% of Planck", curve.mu_over_kt()), *dev, 0.01);
        }
    }
    let mut factored = 0.0f64;
    for &mu in &th.mu {
        let tp = ThermalParams::with_reduced_mu(th.beta, mu, constants)?;
        for &x in &grid {
            let a = blackbody::mean_excitations(&tp, tp.omega(x), rel_tol)?.value;
            let b = blackbody::mean_excitations_factored(&tp, tp.omega(x), rel_tol)?.value;
            factored = factored.max((a / b - 1.0).abs());
        }
    }
    report.at_most("q_m-factored = direct", factored, 1e-12);
    let x_planck = blackbody::planck_peak(th.beta, &constants);
    report.at_most("Planck peak at the root of x = 3(1 - e^-x)", (x_planck - planck_peak_root()).abs(), 1e-4);

    let mut text = String::new();
    writeln!(text, "# convergence (beta = {}, {} points on [{}, {}])", th.beta, th.points, th.x_min, th.x_max)?;
    writeln!(text, "{:>12} {:>16} {:>10}", "mu/kT", "max rel dev", "terms")?;
    for (curve, dev) in limit.curves.iter().zip(&limit.deviations) {
        writeln!(text, "{:>12} {:>16.6e} {:>10}", curve.mu_over_kt(), dev, curve.max_terms)?;
    }
    writeln!(text, "\n# peaks (beta hbar omega, density)")?;
    let hb = th.beta * constants.hbar;
    writeln!(text, "{:>12} {:>12.6} {:>14.6e}", "Planck", x_planck, blackbody::planck_density(th.beta, x_planck / hb, &constants))?;
    for &mu in &th.mu {
        let tp = ThermalParams::with_reduced_mu(th.beta, mu, constants)?;
        let (x, rho) = blackbody::curve_peak(&tp, rel_tol)?;
        writeln!(text, "{:>12} {:>12.6} {:>14.6e}", format!("mu/kT = {mu}"), x, rho)?;
        if mu == 0.0 {
            let rho_planck = blackbody::planck_density(th.beta, x_planck / hb, &constants);
            report.at_least("mu = 0 peak lowered (Planck - new)", rho_planck - rho, f64::MIN_POSITIVE);
            report.at_least("mu = 0 peak shifted up (x_new - x_Planck)", x - x_planck, f64::MIN_POSITIVE);
        }
    }
    match blackbody::visibility_threshold(th.beta, &grid, th.visibility, -50.0, constants, rel_tol) {
        Ok(mu) => writeln!(text, "\nmaximum deviation reaches {} at mu = {mu:.4} k_B T", th.visibility)?,
        Err(e) => writeln!(text, "\nvisibility threshold {} not bracketed: {e}", th.visibility)?,
    }

    let mut wtr = csv_writer();
    wtr.write_record(["mu_over_kT", "omega_over_kT", "rho_new", "rho_planck", "rel_dev"])?;
    for curve in &limit.curves {
        for p in &curve.points {
            wtr.write_record([num(curve.mu_over_kt()), num(p.x), num(p.rho_new), num(p.rho_planck), num(p.rel_dev)])?;
        }
    }
    Ok(Outcome { reports: vec![report], text, csv: finish(wtr)? })
}
