//! Experiment configuration files and the named presets.
//!
//! A config is a TOML document with one table per concern:
//!
//! ```toml
//! preset = "thinning2"        # optional starting point
//!
//! [rheology]
//! kind = "power_law"          # newtonian | power_law | ellis
//! alpha = 2.0
//! sigma = 0.0
//!
//! [grid]
//! n_cells = 64
//!
//! [initial]
//! mean = 1.0
//! epsilon = 0.05
//! modes = [[1, 1.0]]          # (k, coefficient) pairs, scaled by epsilon
//!
//! [integrator]
//! method = "chebyshev"
//! t_end = 8.0
//!
//! [output]
//! dir = "out/thinning2"
//! ```
//!
//! Keys given in the file override the preset's.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::h1_distance_to_mean;
use crate::model::{Regularisation, Rheology};
use crate::spatial::{FilmState, Grid};
use crate::timestep::{IntegratorConfig, Method};

pub const PRESETS: [&str; 5] = ["thickening", "thinning2", "thinning3", "newtonian", "ellis"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RheologyKind {
    Newtonian,
    PowerLaw,
    Ellis,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RheologySpec {
    pub kind: RheologyKind,
    pub alpha: f64,
    pub a: f64,
    pub b: f64,
    pub sigma: f64,
}

impl Default for RheologySpec {
    fn default() -> Self {
        RheologySpec {
            kind: RheologyKind::Newtonian,
            alpha: 1.0,
            a: 1.0,
            b: 1.0,
            sigma: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub x_left: f64,
    pub x_right: f64,
    pub n_cells: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            x_left: 0.0,
            x_right: 1.0,
            n_cells: 64,
        }
    }
}

/// `u₀ = mean + epsilon Σ_j c_j cos(k_j π (x - x_left) / L)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialSpec {
    pub mean: f64,
    pub epsilon: f64,
    pub modes: Vec<(u32, f64)>,
    /// Extra modes `k = 1..=random_modes` with coefficients drawn from
    /// `U(-1, 1) / k²` using `seed`.
    pub random_modes: u32,
    pub seed: u64,
}

impl Default for InitialSpec {
    fn default() -> Self {
        InitialSpec {
            mean: 1.0,
            epsilon: 0.05,
            modes: vec![(1, 1.0)],
            random_modes: 0,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: PathBuf,
    pub snapshots: usize,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            dir: PathBuf::from("out"),
            snapshots: 0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub preset: Option<String>,
    pub rheology: RheologySpec,
    pub grid: GridSpec,
    pub initial: InitialSpec,
    pub integrator: IntegratorConfig,
    pub output: OutputSpec,
}

impl ExperimentConfig {
    pub fn preset(name: &str) -> Result<Self> {
        let (kind, alpha, t_end) = match name {
            "thickening" => (RheologyKind::PowerLaw, 0.5, 1.0),
            "thinning2" => (RheologyKind::PowerLaw, 2.0, 8.0),
            "thinning3" => (RheologyKind::PowerLaw, 3.0, 8.0),
            "newtonian" => (RheologyKind::Newtonian, 1.0, 0.2),
            "ellis" => (RheologyKind::Ellis, 1.5, 0.2),
            other => {
                return Err(Error::Config(format!(
                    "unknown preset {other:?}; expected one of {}",
                    PRESETS.join(", ")
                )))
            }
        };
        Ok(ExperimentConfig {
            preset: Some(name.to_string()),
            rheology: RheologySpec {
                kind,
                alpha,
                ..RheologySpec::default()
            },
            grid: GridSpec::default(),
            initial: InitialSpec::default(),
            integrator: IntegratorConfig {
                method: Method::Chebyshev,
                t_end,
                sample_stride: 1,
                ..IntegratorConfig::default()
            },
            output: OutputSpec {
                dir: PathBuf::from("out").join(name),
                snapshots: 0,
            },
        })
    }

    /// Parses a config document; a `preset` key supplies defaults for every
    /// key the document leaves out.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let doc: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
        if doc.is_empty() {
            return Err(Error::Config("config is empty".into()));
        }
        let merged = match doc.get("preset") {
            Some(toml::Value::String(name)) => {
                let base = toml::Table::try_from(Self::preset(name)?)
                    .map_err(|e| Error::Config(e.to_string()))?;
                merge(base, doc)
            }
            Some(_) => return Err(Error::Config("preset must be a string".into())),
            None => doc,
        };
        let cfg: ExperimentConfig = merged
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads `source`, which is either a file path or `preset:<name>`.
    pub fn load(source: &str) -> Result<Self> {
        if let Some(name) = source.strip_prefix("preset:") {
            return Self::preset(name);
        }
        let path = Path::new(source);
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn rheology(&self) -> Result<Rheology> {
        let r = &self.rheology;
        let rheo = match r.kind {
            RheologyKind::Newtonian => Ok(Rheology::Newtonian),
            RheologyKind::PowerLaw => Rheology::power_law(r.alpha),
            RheologyKind::Ellis => Rheology::ellis(r.alpha, r.a, r.b),
        };
        rheo.map_err(|e| Error::Config(e.to_string()))
    }

    pub fn regularisation(&self) -> Result<Regularisation> {
        Regularisation::new(self.rheology.sigma).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn grid(&self) -> Result<Grid> {
        let g = &self.grid;
        Grid::new(g.x_left, g.x_right, g.n_cells).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.rheology()?;
        self.regularisation()?;
        self.grid()?;
        self.integrator.validate()?;
        let init = &self.initial;
        if !(init.mean.is_finite() && init.mean > 0.0) {
            return Err(Error::Config(format!("initial mean must be positive, got {}", init.mean)));
        }
        if !(init.epsilon.is_finite() && init.epsilon >= 0.0) {
            return Err(Error::Config(format!(
                "perturbation amplitude must be nonnegative, got {}",
                init.epsilon
            )));
        }
        for &(k, c) in &init.modes {
            if k == 0 || !c.is_finite() {
                return Err(Error::Config(format!("bad mode ({k}, {c}); need k >= 1 and a finite coefficient")));
            }
        }
        Ok(())
    }

    /// Every cosine mode, including the seeded random ones.
    pub fn all_modes(&self) -> Vec<(u32, f64)> {
        let init = &self.initial;
        let mut modes = init.modes.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(init.seed);
        for k in 1..=init.random_modes {
            let c: f64 = rng.gen_range(-1.0..1.0);
            modes.push((k, c / (k as f64 * k as f64)));
        }
        modes
    }
}

fn merge(mut base: toml::Table, over: toml::Table) -> toml::Table {
    for (key, value) in over {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => {
                let merged = merge(std::mem::take(b), o);
                *b = merged;
            }
            (_, value) => {
                base.insert(key, value);
            }
        }
    }
    base
}

/// Initial film and its `H¹` distance to the flat state.
pub struct InitialData {
    pub state: FilmState,
    pub h1_distance: f64,
    /// Whether `ū₀/2 ≤ u₀ ≤ 2ū₀` everywhere.
    pub in_corridor: bool,
}

pub fn make_initial_data(cfg: &ExperimentConfig) -> Result<InitialData> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let init = &cfg.initial;
    let modes = cfg.all_modes();
    let l = grid.length();
    let x0 = grid.x_left();
    let values: Vec<f64> = grid
        .cell_centres()
        .map(|x| {
            let s: f64 = modes
                .iter()
                .map(|&(k, c)| c * (k as f64 * PI * (x - x0) / l).cos())
                .sum();
            init.mean + init.epsilon * s
        })
        .collect();
    if let Some((i, &v)) = values
        .iter()
        .enumerate()
        .find(|(_, v)| !(v.is_finite() && **v > 0.0))
    {
        return Err(Error::Config(format!(
            "initial film is not positive: u = {v} in cell {i}"
        )));
    }
    let in_corridor = values
        .iter()
        .all(|&v| v >= 0.5 * init.mean && v <= 2.0 * init.mean);
    let state = FilmState::new(grid, values)?;
    Ok(InitialData {
        h1_distance: h1_distance_to_mean(&state),
        state,
        in_corridor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for name in PRESETS {
            let cfg = ExperimentConfig::preset(name).unwrap();
            cfg.validate().unwrap();
            assert_eq!(cfg.integrator.method, Method::Chebyshev);
        }
        assert!(ExperimentConfig::preset("nope").is_err());
    }

    #[test]
    fn file_overrides_preset() {
        let cfg = ExperimentConfig::from_toml_str(
            "preset = \"thinning2\"\n[grid]\nn_cells = 32\n[integrator]\nt_end = 2.0\n",
        )
        .unwrap();
        assert_eq!(cfg.grid.n_cells, 32);
        assert_eq!(cfg.integrator.t_end, 2.0);
        assert_eq!(cfg.rheology.alpha, 2.0);
        assert_eq!(cfg.integrator.method, Method::Chebyshev);
    }

    #[test]
    fn toml_round_trip() {
        let cfg = ExperimentConfig::preset("ellis").unwrap();
        let back = ExperimentConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn malformed_configs_are_config_errors() {
        for text in [
            "",
            "[grid\n",
            "[grid]\nn_cells = 1\n",
            "[rheology]\nkind = \"bingham\"\n",
            "[rheology]\nkind = \"ellis\"\nalpha = 0.5\n",
            "[initial]\nmean = -1.0\n",
            "[initial]\nmodes = [[0, 1.0]]\n",
            "[grid]\ncells = 8\n",
            "preset = 3\n",
        ] {
            assert!(
                matches!(ExperimentConfig::from_toml_str(text), Err(Error::Config(_))),
                "{text:?}"
            );
        }
    }

    #[test]
    fn flat_initial_data() {
        let mut cfg = ExperimentConfig::preset("newtonian").unwrap();
        cfg.initial.epsilon = 0.0;
        let init = make_initial_data(&cfg).unwrap();
        assert!(init.state.values().iter().all(|&v| v == 1.0));
        assert_eq!(init.h1_distance, 0.0);
    }

    #[test]
    fn single_mode_h1_distance() {
        let mut cfg = ExperimentConfig::preset("newtonian").unwrap();
        cfg.grid.n_cells = 256;
        let init = make_initial_data(&cfg).unwrap();
        let exact = (0.05f64.powi(2) / 2.0 + 0.05f64.powi(2) * PI * PI / 2.0).sqrt();
        assert!((init.h1_distance - exact).abs() < 1e-4 * exact);
        assert!(init.in_corridor);
    }

    #[test]
    fn even_mode_is_symmetric() {
        let mut cfg = ExperimentConfig::preset("newtonian").unwrap();
        cfg.initial.modes = vec![(2, 1.0)];
        cfg.grid.n_cells = 33;
        let u = make_initial_data(&cfg).unwrap().state.into_values();
        for i in 0..u.len() {
            assert!((u[i] - u[u.len() - 1 - i]).abs() < 1e-15);
        }
    }

    #[test]
    fn random_modes_are_seeded() {
        let mut cfg = ExperimentConfig::preset("newtonian").unwrap();
        cfg.initial.random_modes = 4;
        cfg.initial.seed = 11;
        assert_eq!(cfg.all_modes(), cfg.clone().all_modes());
        let mut other = cfg.clone();
        other.initial.seed = 12;
        assert_ne!(cfg.all_modes(), other.all_modes());
    }

    #[test]
    fn positivity_and_corridor() {
        let mut cfg = ExperimentConfig::preset("newtonian").unwrap();
        cfg.initial.epsilon = 1.5;
        assert!(matches!(make_initial_data(&cfg), Err(Error::Config(_))));
        cfg.initial.epsilon = 0.7;
        assert!(!make_initial_data(&cfg).unwrap().in_corridor);
    }
}
