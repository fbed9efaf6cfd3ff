use rsq::potential::{barrier_height, boltzmann_density, effective_potential_of_kind, kramers_rate};
use rsq::qpe::{all_ones, hopping_probability, phase_to_energy, Evolution, QpeEngine, QpeOutcome, SpectralQpe};
use rsq::sampler::{
    chain_statistics, gaussian_state, hybrid_sample, run_langevin, Basins, ChainRecord, ChainReport, GlobalMoveConfig,
    HybridConfig, LangevinConfig, QpeBackend,
};
use rsq::simulator::Propagator;
use rsq::spectral::{
    build_effective_hamiltonian, build_ising_hamiltonian, diagonalize, fundamental_gap, reaction_current,
    two_site_double_well,
};
use rsq::vqe::{optimize_sweep, OptimizerConfig, Shots, VqeConfig, VqeTarget};
use rsq::{EffectiveKind, StateVector, Temperature};
use serde::Serialize;

use crate::config::{QpeModel, RunConfig, SampleMode};
use crate::output::{num, Outputs};

/// Least-squares slope of `y` against `x`.
fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

#[derive(Serialize)]
struct SpectrumSummary {
    e0: f64,
    gap: f64,
    log_gap_slope: f64,
    barrier: Option<f64>,
    slope_over_barrier: Option<f64>,
    kramers: Option<f64>,
}

pub fn spectrum(cfg: &RunConfig, out: &mut Outputs) -> anyhow::Result<()> {
    let (p, t, g) = (&cfg.potential, cfg.temperature, &cfg.grid);
    let h = build_effective_hamiltonian(p, t, g, EffectiveKind::Plain)?;
    let spec = diagonalize(&h)?;
    out.csv(
        "eigenvalues.csv",
        &["index", "energy"],
        spec.eigenvalues()
            .iter()
            .enumerate()
            .map(|(k, e)| vec![k.to_string(), num(*e)]),
    )?;

    let states = cfg.spectrum.states.min(spec.len());
    let vectors: Vec<Vec<f64>> = (0..states).map(|k| spec.real_vector(k)).collect();
    let rho = boltzmann_density(p, t, g);
    let mut header = vec![
        "x".to_string(),
        "v".into(),
        "v_eff".into(),
        "v_susy".into(),
        "boltzmann".into(),
    ];
    header.extend((0..states).map(|k| format!("psi_{k}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    out.csv(
        "eigenvectors.csv",
        &header,
        g.positions().iter().enumerate().map(|(i, &x)| {
            let mut row = vec![
                num(x),
                num(p.value(x)),
                num(effective_potential_of_kind(p, t, EffectiveKind::Plain, x)),
                num(effective_potential_of_kind(p, t, EffectiveKind::Supersymmetric, x)),
                num(rho[i]),
            ];
            row.extend(vectors.iter().map(|v| num(v[i])));
            row
        }),
    )?;

    let mut rows = Vec::new();
    let (mut inv_t, mut ln_gap) = (Vec::new(), Vec::new());
    for &temp in &cfg.spectrum.temperatures {
        let tt = Temperature::new(temp)?;
        let s = diagonalize(&build_effective_hamiltonian(p, tt, g, EffectiveKind::Plain)?)?;
        let gap = fundamental_gap(&s)?;
        let e = s.eigenvalues();
        let upper = (e.len() > 2).then(|| e[2] - e[1]);
        let kramers = kramers_rate(p, tt).ok();
        inv_t.push(1.0 / temp);
        ln_gap.push(gap.ln());
        rows.push(vec![
            num(temp),
            num(1.0 / temp),
            num(gap),
            num(gap.ln()),
            opt(upper),
            opt(kramers),
        ]);
    }
    out.csv(
        "gaps.csv",
        &[
            "temperature",
            "inverse_temperature",
            "gap",
            "ln_gap",
            "e2_minus_e1",
            "kramers",
        ],
        rows,
    )?;

    let barrier = barrier_height(p).ok();
    let log_gap_slope = slope(&inv_t, &ln_gap);
    let summary = SpectrumSummary {
        e0: spec.ground_energy(),
        gap: fundamental_gap(&spec)?,
        log_gap_slope,
        barrier,
        slope_over_barrier: barrier.map(|b| -log_gap_slope / b),
        kramers: kramers_rate(p, t).ok(),
    };
    out.json("summary.json", &summary)?;
    Ok(())
}

#[derive(Serialize)]
struct RateSummary {
    #[serde(rename = "E0_susy")]
    e0_susy: f64,
    kramers: Option<f64>,
    #[serde(rename = "delta_H")]
    delta_h: f64,
    susy_over_gap: f64,
    gap_over_kramers: Option<f64>,
}

pub fn rate(cfg: &RunConfig, out: &mut Outputs) -> anyhow::Result<()> {
    let (p, t, g) = (&cfg.potential, cfg.temperature, &cfg.grid);
    let plain = diagonalize(&build_effective_hamiltonian(p, t, g, EffectiveKind::Plain)?)?;
    let susy = diagonalize(&build_effective_hamiltonian(p, t, g, EffectiveKind::Supersymmetric)?)?;
    let delta_h = fundamental_gap(&plain)?;
    let kramers = kramers_rate(p, t).ok();
    let summary = RateSummary {
        e0_susy: susy.ground_energy(),
        kramers,
        delta_h,
        susy_over_gap: susy.ground_energy() / delta_h,
        gap_over_kramers: kramers.map(|k| delta_h / k),
    };
    out.json("rate.json", &summary)?;
    Ok(())
}

#[derive(Serialize)]
struct CurrentSummary {
    argmax_index: usize,
    argmax_x: f64,
    barrier_x: Option<f64>,
}

pub fn current(cfg: &RunConfig, out: &mut Outputs) -> anyhow::Result<()> {
    let (p, t, g) = (&cfg.potential, cfg.temperature, &cfg.grid);
    // both ground states are nodeless; fix their sign to positive
    let ground = |kind| -> rsq::Result<Vec<f64>> {
        let s = diagonalize(&build_effective_hamiltonian(p, t, g, kind)?)?;
        Ok(s.real_vector(0).iter().map(|v| v.abs()).collect())
    };
    let psi0 = ground(EffectiveKind::Plain)?;
    let psi0_susy = ground(EffectiveKind::Supersymmetric)?;
    let j = reaction_current(&psi0, &psi0_susy)?;
    let xs = g.positions();
    out.csv(
        "current.csv",
        &["x", "psi0", "psi0_susy", "current"],
        (0..xs.len()).map(|i| vec![num(xs[i]), num(psi0[i]), num(psi0_susy[i]), num(j[i])]),
    )?;
    let argmax = (0..j.len()).fold(0, |best, i| if j[i] > j[best] { i } else { best });
    let maxima = p.stationary_points().1;
    out.json(
        "current.json",
        &CurrentSummary {
            argmax_index: argmax,
            argmax_x: xs[argmax],
            barrier_x: maxima.first().copied(),
        },
    )?;
    Ok(())
}

#[derive(Serialize)]
struct VqeDepthSummary {
    depth: usize,
    best_energy: f64,
    relative_error: Option<f64>,
    evaluations: u64,
    restart_energies: Vec<f64>,
    best_params: Vec<f64>,
}

#[derive(Serialize)]
struct VqeSummary {
    exact_energy: Option<f64>,
    shots: Option<u64>,
    depths: Vec<VqeDepthSummary>,
}

pub fn vqe(cfg: &RunConfig, out: &mut Outputs) -> anyhow::Result<()> {
    let v = &cfg.vqe;
    let target = VqeTarget::Effective {
        potential: cfg.potential.clone(),
        temperature: cfg.temperature,
        variant: v.variant,
        grid: cfg.grid,
    };
    let vc = VqeConfig {
        target: target.clone(),
        shots: v.shots.map_or(Shots::Exact, Shots::Count),
        optimizer: OptimizerConfig {
            max_iters: v.max_iters,
            restarts: v.restarts,
            hops: v.hops,
            method: v.method,
            seed: cfg.seed,
            ..OptimizerConfig::default()
        },
    };
    let depths: Vec<usize> = (1..=v.depth).collect();
    let results = optimize_sweep(&vc, &depths)?;

    out.csv(
        "depth_sweep.csv",
        &["depth", "best_energy", "exact_energy", "relative_error", "evaluations"],
        results.iter().map(|r| {
            vec![
                r.depth.to_string(),
                num(r.best_energy),
                opt(r.exact_energy),
                opt(r.relative_error),
                r.evaluations.to_string(),
            ]
        }),
    )?;
    out.csv(
        "history.csv",
        &["depth", "step", "energy"],
        results.iter().flat_map(|r| {
            r.history
                .iter()
                .enumerate()
                .map(|(i, e)| vec![r.depth.to_string(), i.to_string(), num(*e)])
                .collect::<Vec<_>>()
        }),
    )?;

    let n = cfg.grid.n_qubits();
    let best = results.last().expect("depth >= 1");
    let vqe_probs = best.ansatz(n).state()?.probabilities();
    let exact = diagonalize(&target.hamiltonian()?)?;
    let exact_probs = exact.probabilities(0);
    out.csv(
        "state.csv",
        &["x", "vqe_probability", "exact_probability"],
        cfg.grid
            .positions()
            .iter()
            .enumerate()
            .map(|(i, &x)| vec![num(x), num(vqe_probs[i]), num(exact_probs[i])]),
    )?;
    out.json(
        "vqe.json",
        &VqeSummary {
            exact_energy: best.exact_energy,
            shots: v.shots,
            depths: results
                .iter()
                .map(|r| VqeDepthSummary {
                    depth: r.depth,
                    best_energy: r.best_energy,
                    relative_error: r.relative_error,
                    evaluations: r.evaluations,
                    restart_energies: r.restart_energies.clone(),
                    best_params: r.best_params.clone(),
                })
                .collect(),
        },
    )?;
    Ok(())
}

#[derive(Serialize)]
struct QpeSummary {
    model: QpeModel,
    hopping_probability: f64,
    modal_phase: u64,
    modal_energy: f64,
    n_eps: usize,
    time: f64,
    shots: usize,
    lowest_energies: Vec<f64>,
}

pub fn qpe_hop(cfg: &RunConfig, out: &mut Outputs) -> anyhow::Result<()> {
    let q = &cfg.qpe;
    let (outcome, targets, h): (QpeOutcome, Vec<usize>, _) = match q.model {
        QpeModel::Ising | QpeModel::RealSpace4 => {
            let (h, n, target) = if q.model == QpeModel::Ising {
                (build_ising_hamiltonian(q.ns, q.j, q.gamma)?, q.ns, all_ones(q.ns))
            } else {
                (two_site_double_well(q.j)?, 2, 3)
            };
            let evolution = match q.trotter_steps {
                Some(steps) => Evolution::TrotterIsing {
                    n_sites: q.ns,
                    coupling: q.j,
                    field: q.gamma,
                    steps,
                },
                None => Evolution::Exact,
            };
            let engine = QpeEngine::new(&h, q.n_eps, q.t, q.allow_aliasing, evolution)?;
            (engine.run(&StateVector::zero(n), q.shots, cfg.seed)?, vec![target], h)
        }
        QpeModel::Effective => {
            let (p, t, g) = (&cfg.potential, cfg.temperature, &cfg.grid);
            let h = build_effective_hamiltonian(p, t, g, EffectiveKind::Plain)?;
            let sampler = SpectralQpe::new(&Propagator::new(&h)?, q.n_eps, q.t, q.allow_aliasing)?;
            let basins = Basins::new(p);
            let center = basins.minima().first().copied().unwrap_or(0.0);
            let home = basins.basin_of(center);
            let targets = (0..g.size())
                .filter(|&i| basins.basin_of(g.position(i).expect("in range")) != home)
                .collect();
            let initial = gaussian_state(g, center, t)?;
            (sampler.run(&initial, q.shots, cfg.seed)?, targets, h)
        }
    };
    let hop = hopping_probability(&outcome, &targets)?;
    let spec = diagonalize(&h)?;

    let phases = outcome.phase_histogram();
    let mut rows = Vec::with_capacity(phases.len());
    for (k, &c) in phases.iter().enumerate() {
        rows.push(vec![
            k.to_string(),
            num(phase_to_energy(k as u64, outcome.n_eps, outcome.time)?),
            c.to_string(),
        ]);
    }
    out.csv("phases.csv", &["phase", "energy", "count"], rows)?;
    out.csv(
        "system.csv",
        &["index", "count"],
        outcome
            .system_histogram()
            .iter()
            .enumerate()
            .map(|(i, c)| vec![i.to_string(), c.to_string()]),
    )?;
    out.json(
        "qpe.json",
        &QpeSummary {
            model: q.model,
            hopping_probability: hop,
            modal_phase: outcome.modal_phase(),
            modal_energy: outcome.modal_energy(),
            n_eps: outcome.n_eps,
            time: outcome.time,
            shots: outcome.shots(),
            lowest_energies: spec.eigenvalues().iter().take(4).copied().collect(),
        },
    )?;
    Ok(())
}

#[derive(Serialize)]
struct ChainSummary {
    #[serde(flatten)]
    report: ChainReportView,
    hop_rate: f64,
    dt: f64,
    acceptance_rate: Option<f64>,
    global_hop_frequency: Option<f64>,
    kramers: Option<f64>,
}

#[derive(Serialize)]
struct ChainReportView {
    n_samples: usize,
    tv_distance: f64,
    hops: usize,
    occupancies: Vec<f64>,
    /// `null` when the basin label never changes.
    autocorr: Option<f64>,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

fn summarize(rec: &ChainRecord, report: &ChainReport, cfg: &RunConfig) -> ChainSummary {
    ChainSummary {
        report: ChainReportView {
            n_samples: report.n_samples,
            tv_distance: report.tv_distance,
            hops: report.hops,
            occupancies: report.occupancies.clone(),
            autocorr: finite(report.autocorrelation_time),
        },
        hop_rate: rec.hop_rate(),
        dt: rec.dt,
        acceptance_rate: rec.acceptance_rate(),
        global_hop_frequency: rec.global_hop_frequency(),
        kramers: kramers_rate(&cfg.potential, cfg.temperature).ok(),
    }
}

fn chain_files(
    prefix: &str,
    rec: &ChainRecord,
    report: &ChainReport,
    cfg: &RunConfig,
    out: &mut Outputs,
) -> anyhow::Result<()> {
    let every = cfg.sampler.record_every;
    out.csv(
        &format!("{prefix}trajectory.csv"),
        &["step", "x", "basin"],
        rec.samples
            .iter()
            .zip(&rec.labels)
            .enumerate()
            .step_by(every)
            .map(|(i, (x, l))| vec![i.to_string(), num(*x), l.to_string()]),
    )?;
    let rho = boltzmann_density(&cfg.potential, cfg.temperature, &cfg.grid);
    let total = report.n_samples as f64;
    out.csv(
        &format!("{prefix}histogram.csv"),
        &["x", "count", "frequency", "boltzmann"],
        cfg.grid.positions().iter().enumerate().map(|(i, &x)| {
            let c = report.histogram[i];
            vec![num(x), c.to_string(), num(c as f64 / total), num(rho[i])]
        }),
    )?;
    Ok(())
}

#[derive(Serialize)]
struct Comparison {
    step_budget: usize,
    langevin: ChainSummary,
    hybrid: ChainSummary,
    /// Hybrid hops over Langevin hops, `null` if Langevin never hopped.
    hop_ratio: Option<f64>,
    /// Langevin over hybrid basin-label autocorrelation time, in steps.
    autocorr_ratio: Option<f64>,
}

pub fn sample(cfg: &RunConfig, out: &mut Outputs) -> anyhow::Result<()> {
    let s = &cfg.sampler;
    let langevin_cfg = |steps| LangevinConfig {
        potential: cfg.potential.clone(),
        temperature: cfg.temperature,
        dt: s.dt,
        n_steps: steps,
        x_init: cfg.x_init(),
        seed: cfg.seed,
        mh_correct: s.mh,
    };
    let hybrid_cfg = HybridConfig {
        potential: cfg.potential.clone(),
        temperature: cfg.temperature,
        dt: s.dt,
        local_steps: s.local_steps,
        epochs: s.epochs,
        x_init: cfg.x_init(),
        seed: cfg.seed,
        mh_correct: s.mh,
        global: GlobalMoveConfig {
            grid: cfg.grid,
            resolution: s.resolution,
            width: s.width,
            backend: QpeBackend::Spectral,
        },
    };
    let stats = |rec: &ChainRecord| chain_statistics(rec, &cfg.potential, cfg.temperature, &cfg.grid);
    match s.mode {
        SampleMode::Langevin => {
            let rec = run_langevin(&langevin_cfg(s.steps))?;
            let report = stats(&rec)?;
            chain_files("", &rec, &report, cfg, out)?;
            out.json("report.json", &summarize(&rec, &report, cfg))?;
        }
        SampleMode::Hybrid => {
            let rec = hybrid_sample(&hybrid_cfg)?;
            let report = stats(&rec)?;
            chain_files("", &rec, &report, cfg, out)?;
            out.json("report.json", &summarize(&rec, &report, cfg))?;
        }
        SampleMode::Compare => {
            let budget = hybrid_cfg.step_budget();
            let hybrid = hybrid_sample(&hybrid_cfg)?;
            let langevin = run_langevin(&langevin_cfg(budget))?;
            let (hr, lr) = (stats(&hybrid)?, stats(&langevin)?);
            chain_files("langevin_", &langevin, &lr, cfg, out)?;
            chain_files("hybrid_", &hybrid, &hr, cfg, out)?;
            let hop_ratio = (lr.hops > 0).then(|| hr.hops as f64 / lr.hops as f64);
            // both chains record one sample per step
            let autocorr_ratio = finite(lr.autocorrelation_time / hr.autocorrelation_time);
            out.json(
                "report.json",
                &Comparison {
                    step_budget: budget,
                    langevin: summarize(&langevin, &lr, cfg),
                    hybrid: summarize(&hybrid, &hr, cfg),
                    hop_ratio,
                    autocorr_ratio,
                },
            )?;
        }
    }
    Ok(())
}
