//! Run configuration: one TOML file, every section optional, unknown keys
//! rejected. The resolved value is echoed into each run's manifest.

use std::path::{Path, PathBuf};

use halfline::verify::{Axis, GreenGrid, LemmaGrid};
use halfline::{
    BoundEnvelope, Components, Grid1D, InitialData, InitialProfile, ModelParams, QuadratureConfig,
    SolverConfig,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_model")]
    pub model: ModelParams,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default = "default_initial")]
    pub initial: InitialData,
    #[serde(default)]
    pub transforms: QuadratureConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub green_eval: GreenEvalConfig,
    #[serde(default)]
    pub stability_map: StabilityMapConfig,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_model() -> ModelParams {
    ModelParams::mixed(1.0, 1.0, 1.0).expect("valid defaults")
}

fn default_initial() -> InitialData {
    InitialData::new(
        InitialProfile::Algebraic {
            amplitude: 0.01,
            r: 1.0,
        },
        Components::Both,
    )
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: default_model(),
            solver: SolverConfig::default(),
            initial: default_initial(),
            transforms: QuadratureConfig::default(),
            verify: VerifyConfig::default(),
            green_eval: GreenEvalConfig::default(),
            stability_map: StabilityMapConfig::default(),
            output_dir: default_output_dir(),
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let cfg: RunConfig = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| CliError::ReadConfig {
                    path: p.to_path_buf(),
                    source,
                })?;
                toml::from_str(&text)?
            }
            None => RunConfig::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.transforms.validate()?;
        self.solver.pressure.validate(&self.model)?;
        self.initial.profile.validate()?;
        Ok(())
    }

    /// Applies `k` grid doublings to every sampling grid and solver mesh.
    pub fn refine(&mut self, k: u32) {
        for _ in 0..k {
            self.solver.grid = refine_grid(self.solver.grid);
            let v = &mut self.verify;
            v.theorem1.grid = v.theorem1.grid.refined();
            v.lemma41.grid = refine_lemma(v.lemma41.grid);
            v.lemma42.grid = refine_lemma(v.lemma42.grid);
            v.lemma43.grid = refine_lemma(v.lemma43.grid);
            v.instability.solver.grid = refine_grid(v.instability.solver.grid);
            v.decay.solver.grid = refine_grid(v.decay.solver.grid);
            self.green_eval.pde_grid = refine_grid(self.green_eval.pde_grid);
        }
    }
}

fn refine_grid(g: Grid1D) -> Grid1D {
    Grid1D { nx: 2 * g.nx, ..g }
}

fn refine_lemma(g: LemmaGrid) -> LemmaGrid {
    LemmaGrid {
        x: g.x.refined(),
        t: g.t.refined(),
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub theorem1: Theorem1Config,
    pub instability: InstabilityConfig,
    pub decay: DecayConfig,
    pub lemma41: InitialDataLemmaConfig,
    pub lemma42: WaveConfig,
    pub lemma43: WaveConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Theorem1Config {
    pub grid: GreenGrid,
    /// Derivative orders to check.
    pub alphas: Vec<u32>,
    pub envelope: BoundEnvelope,
}

impl Default for Theorem1Config {
    fn default() -> Self {
        Theorem1Config {
            grid: GreenGrid::default(),
            alphas: vec![0, 1],
            envelope: BoundEnvelope::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InstabilityConfig {
    /// Boundary coefficients of the unstable run; `c` and `nu` come from
    /// `[model]`. Ignored when `[model]` is itself unstable.
    pub a1: f64,
    pub a2: f64,
    pub solver: SolverConfig,
}

impl Default for InstabilityConfig {
    fn default() -> Self {
        InstabilityConfig {
            a1: 1.0,
            a2: 1.0,
            solver: SolverConfig::new(Grid1D::new(60.0, 2400).expect("valid grid"), 20.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecayConfig {
    /// Exponents `p` of the `L^p` norms; `inf` is allowed.
    pub p_list: Vec<f64>,
    /// Fitting window; `None` means the last decade.
    pub window: Option<(f64, f64)>,
    /// Nonlinear run used when no stored trajectory is given.
    pub solver: SolverConfig,
}

impl Default for DecayConfig {
    fn default() -> Self {
        let mut solver = SolverConfig::new(Grid1D::new(400.0, 4000).expect("valid grid"), 50.0);
        solver.output_times = (1..=100).map(|k| 0.5 * k as f64).collect();
        DecayConfig {
            p_list: vec![2.0, 4.0, f64::INFINITY],
            window: Some((5.0, 50.0)),
            solver,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialDataLemmaConfig {
    pub d0: f64,
    pub r: f64,
    pub e: f64,
    pub grid: LemmaGrid,
}

impl Default for InitialDataLemmaConfig {
    fn default() -> Self {
        InitialDataLemmaConfig {
            d0: 2.0,
            r: 1.0,
            e: 3.0,
            grid: LemmaGrid {
                x: Axis::new(0.0, 100.0, 51),
                t: Axis::new(0.0, 100.0, 51),
            },
        }
    }
}

/// Space-time convolution check. `lambda_prime` is ignored for the
/// same-speed estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WaveConfig {
    /// `(alpha, alpha', beta)` triples.
    pub cases: Vec<[f64; 3]>,
    /// Heat-kernel constant in `exp(-(x - y - lambda (t-s))^2 / (nu (t-s)))`.
    pub nu: f64,
    pub lambda: f64,
    pub lambda_prime: f64,
    pub grid: LemmaGrid,
}

impl Default for WaveConfig {
    fn default() -> Self {
        WaveConfig {
            cases: vec![[2.0, 0.0, 0.5]],
            nu: 2.0,
            lambda: 1.0,
            lambda_prime: -1.0,
            grid: LemmaGrid {
                x: Axis::new(-30.0, 30.0, 31),
                t: Axis::new(0.0, 20.0, 11),
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Evaluator {
    /// Closed-form leading-order kernel.
    Leading,
    /// Numerical inverse Laplace transform.
    LaplaceOracle,
    /// Narrow-pulse solver run.
    PdeOracle,
}

impl Evaluator {
    pub fn as_str(self) -> &'static str {
        match self {
            Evaluator::Leading => "leading",
            Evaluator::LaplaceOracle => "laplace",
            Evaluator::PdeOracle => "pde",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GreenEvalConfig {
    /// Explicit `[x, y, t]` points; used when no grid is given.
    pub points: Vec<[f64; 3]>,
    pub grid: Option<GreenGrid>,
    pub evaluators: Vec<Evaluator>,
    /// Mesh of the pulse runs. The pulse must sit ten widths from the wall.
    pub pde_grid: Grid1D,
    /// Pulse width; defaults to four cells.
    pub pulse_width: Option<f64>,
}

impl Default for GreenEvalConfig {
    fn default() -> Self {
        GreenEvalConfig {
            points: Vec::new(),
            grid: None,
            evaluators: vec![
                Evaluator::Leading,
                Evaluator::LaplaceOracle,
                Evaluator::PdeOracle,
            ],
            pde_grid: Grid1D::new(60.0, 2400).expect("valid grid"),
            pulse_width: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilityMapConfig {
    pub a1: Axis,
    pub a2: Axis,
}

impl Default for StabilityMapConfig {
    fn default() -> Self {
        StabilityMapConfig {
            a1: Axis::new(-2.0, 2.0, 9),
            a2: Axis::new(-2.0, 2.0, 9),
        }
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
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<RunConfig>("bogus = 1").is_err());
        assert!(toml::from_str::<RunConfig>("[solver]\ncfl = 0.3").is_err());
        assert!(
            toml::from_str::<RunConfig>("[model]\nc = 1\nnu = 1\na1 = 1\na2 = 1\nmu = 2").is_err()
        );
    }

    #[test]
    fn model_is_validated_on_load() {
        let err =
            toml::from_str::<RunConfig>("[model]\nc = -1\nnu = 1\na1 = -1\na2 = 1").unwrap_err();
        assert!(err.to_string().contains("sound speed"), "{err}");
    }

    #[test]
    fn infinity_parses_in_p_list() {
        let cfg: RunConfig = toml::from_str("[verify.decay]\np_list = [2.0, inf]").unwrap();
        assert_eq!(cfg.verify.decay.p_list, vec![2.0, f64::INFINITY]);
    }

    #[test]
    fn refinement_doubles_meshes() {
        let mut cfg = RunConfig::default();
        cfg.refine(1);
        assert_eq!(cfg.solver.grid.nx, 8000);
        assert_eq!(cfg.verify.theorem1.grid.x.n, 51);
    }

    #[test]
    fn resolved_config_roundtrips() {
        let cfg = RunConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }
}
