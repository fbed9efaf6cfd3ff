//! Run configuration: TOML file, then command-line flags, then `RSQ_SEED`.

use std::path::Path;

use anyhow::{bail, Context};
use rsq::sampler::Resolution;
use rsq::vqe::LocalMethod;
use rsq::{EffectiveKind, Grid, Potential, Temperature};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub temperature: Temperature,
    pub potential: Potential,
    pub grid: Grid,
    pub spectrum: SpectrumSection,
    pub vqe: VqeSection,
    pub qpe: QpeSection,
    pub sampler: SamplerSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            temperature: Temperature::new(0.2).expect("positive"),
            potential: Potential::double_well(1.0, 1.0).expect("valid"),
            grid: Grid::new(7, 4.0).expect("valid"),
            spectrum: SpectrumSection::default(),
            vqe: VqeSection::default(),
            qpe: QpeSection::default(),
            sampler: SamplerSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumSection {
    /// Eigenfunctions written to `eigenvectors.csv`.
    pub states: usize,
    /// Temperatures of the gap sweep.
    pub temperatures: Vec<f64>,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        SpectrumSection {
            states: 7,
            temperatures: (0..7).map(|i| 0.1 + 0.025 * i as f64).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VqeSection {
    /// Largest depth of the sweep `1..=depth`.
    pub depth: usize,
    /// Shots per basis; absent means exact expectation values.
    pub shots: Option<u64>,
    pub restarts: usize,
    pub hops: usize,
    pub max_iters: u64,
    pub method: LocalMethod,
    pub variant: EffectiveKind,
}

impl Default for VqeSection {
    fn default() -> Self {
        VqeSection {
            depth: 4,
            shots: None,
            restarts: 8,
            hops: 40,
            max_iters: 3000,
            method: LocalMethod::Lbfgs,
            variant: EffectiveKind::Supersymmetric,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum QpeModel {
    /// Transverse-field Ising chain started in the all-up configuration.
    Ising,
    /// Two-qubit real-space double well started in `00`.
    #[value(name = "realspace4")]
    #[serde(rename = "realspace4")]
    RealSpace4,
    /// Effective Hamiltonian of `[potential]` on `[grid]`, started from a
    /// Gaussian in the first well.
    Effective,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QpeSection {
    pub model: QpeModel,
    /// Spins of the Ising chain.
    pub ns: usize,
    pub j: f64,
    pub gamma: f64,
    pub n_eps: usize,
    pub shots: usize,
    /// Base evolution time; absent picks the alias-free default.
    pub t: Option<f64>,
    /// Realize the Ising propagator with this many Trotter steps.
    pub trotter_steps: Option<usize>,
    /// Accept evolution times whose phases wrap past 2π.
    pub allow_aliasing: bool,
}

impl Default for QpeSection {
    fn default() -> Self {
        QpeSection {
            model: QpeModel::Ising,
            ns: 3,
            j: 1.0,
            gamma: 0.1,
            n_eps: 10,
            shots: 4096,
            t: None,
            trotter_steps: None,
            allow_aliasing: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SampleMode {
    Langevin,
    Hybrid,
    /// Both chains on the same step budget and seed.
    Compare,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplerSection {
    pub mode: SampleMode,
    /// Absent uses `10⁻³ · min(1, 1/h)`.
    pub dt: Option<f64>,
    /// Langevin steps (ignored by the hybrid chain, which runs
    /// `epochs · (local_steps + 1)`).
    pub steps: usize,
    pub epochs: usize,
    pub local_steps: usize,
    /// Phase-estimation resolution of the global moves.
    pub resolution: Resolution,
    /// Width of the Gaussian input state; absent means `sqrt(T)`.
    pub width: Option<f64>,
    /// Starting position; absent means the first minimum.
    pub x_init: Option<f64>,
    pub mh: bool,
    /// Keep every `record_every`-th sample in the trajectory CSV.
    pub record_every: usize,
}

impl Default for SamplerSection {
    fn default() -> Self {
        SamplerSection {
            mode: SampleMode::Langevin,
            dt: None,
            steps: 1_000_000,
            epochs: 100,
            local_steps: 1000,
            resolution: Resolution::Gap,
            width: None,
            x_init: None,
            mh: false,
            record_every: 100,
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Checks every section, before any compute.
    pub fn validate(&self) -> anyhow::Result<()> {
        self.potential.validate()?;
        if self.spectrum.states == 0 {
            bail!("spectrum.states must be positive");
        }
        if self.spectrum.temperatures.len() < 2 {
            bail!("spectrum.temperatures needs at least two values for the gap fit");
        }
        for &t in &self.spectrum.temperatures {
            Temperature::new(t)?;
        }

        if self.vqe.depth == 0 {
            bail!("vqe.depth must be positive");
        }
        if self.vqe.restarts == 0 {
            bail!("vqe.restarts must be positive");
        }
        if self.vqe.shots == Some(0) {
            bail!("vqe.shots must be positive");
        }

        let q = &self.qpe;
        if q.n_eps == 0 || q.shots == 0 {
            bail!("qpe.n_eps and qpe.shots must be positive");
        }
        if q.model == QpeModel::Ising && q.ns == 0 {
            bail!("qpe.ns must be positive");
        }
        if let Some(t) = q.t {
            if !(t.is_finite() && t > 0.0) {
                bail!("qpe.t must be positive");
            }
        }
        if q.trotter_steps == Some(0) {
            bail!("qpe.trotter_steps must be positive");
        }
        if q.trotter_steps.is_some() && q.model != QpeModel::Ising {
            bail!("qpe.trotter_steps applies to the ising model only");
        }

        let s = &self.sampler;
        if let Some(dt) = s.dt {
            if !(dt.is_finite() && dt > 0.0) {
                bail!("sampler.dt must be positive");
            }
        }
        if s.record_every == 0 {
            bail!("sampler.record_every must be positive");
        }
        if s.mode != SampleMode::Langevin && s.epochs == 0 {
            bail!("sampler.epochs must be positive");
        }
        if s.mode == SampleMode::Langevin && s.steps == 0 {
            bail!("sampler.steps must be positive");
        }
        if let Some(x) = s.x_init {
            if !x.is_finite() {
                bail!("sampler.x_init must be finite");
            }
        }
        Ok(())
    }

    pub fn x_init(&self) -> f64 {
        self.sampler
            .x_init
            .unwrap_or_else(|| self.potential.stationary_points().0.first().copied().unwrap_or(0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg: RunConfig = toml::from_str("").unwrap();
        assert_eq!(cfg, RunConfig::default());
    }

    #[test]
    fn sections_parse() {
        let text = r#"
            seed = 9
            temperature = 0.15

            [potential]
            kind = "harmonic"
            k = 2.0

            [grid]
            n_qubits = 5
            box_length = 6.0

            [qpe]
            model = "realspace4"
            n_eps = 4

            [sampler]
            mode = "hybrid"
            resolution = { manual = { n_eps = 12 } }
        "#;
        let cfg: RunConfig = toml::from_str(text).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.grid.n_qubits(), 5);
        assert_eq!(cfg.qpe.model, QpeModel::RealSpace4);
        assert_eq!(cfg.qpe.shots, 4096);
        assert_eq!(cfg.sampler.resolution, Resolution::Manual { n_eps: 12, time: None });
        assert_eq!(cfg.x_init(), 0.0);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<RunConfig>("sed = 1").is_err());
        assert!(toml::from_str::<RunConfig>("[vqe]\ndepht = 2").is_err());
        assert!(toml::from_str::<RunConfig>("[potential]\nkind = \"harmonic\"\nk = 1\nh = 2").is_err());
    }

    #[test]
    fn invalid_values_are_rejected() {
        assert!(toml::from_str::<RunConfig>("temperature = -1.0").is_err());
        assert!(toml::from_str::<RunConfig>("[grid]\nn_qubits = 0\nbox_length = 4.0").is_err());
        let empty: RunConfig = toml::from_str("[potential]\nkind = \"polynomial\"\ncoeffs = []").unwrap();
        assert!(empty.validate().is_err());
        let mut cfg = RunConfig::default();
        cfg.spectrum.temperatures = vec![0.2];
        assert!(cfg.validate().is_err());
        assert!(RunConfig::default().validate().is_ok());
    }

    #[test]
    fn resolved_config_round_trips() {
        let cfg = RunConfig::default();
        let json = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&json).unwrap(), cfg);
        assert_eq!(cfg.x_init(), -1.0);
    }
}
