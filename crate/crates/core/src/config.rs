//! Run configuration: a flat JSON document with the problem, data, solver,
//! design, sweep and output groups. Command-line flags override file keys;
//! every module invariant is re-validated at load time.

use crate::design::{AdmissibleSet, OuterConfig};
use crate::grid::{build_grid, Domain, Grid};
use crate::kernel::KernelSpec;
use crate::smooth::SmoothField;
use crate::solver::SolverConfig;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Seed for every randomized draw (verification checks, random data).
    pub seed: u64,
    pub problem: ProblemConfig,
    pub data: DataConfig,
    pub solver: SolverSettings,
    pub design: DesignSettings,
    pub sweep: SweepConfig,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            problem: ProblemConfig::default(),
            data: DataConfig::default(),
            solver: SolverSettings::default(),
            design: DesignSettings::default(),
            sweep: SweepConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemConfig {
    /// Spatial dimension of the grid (1 or 2).
    pub n: usize,
    pub p: f64,
    pub alpha: f64,
    pub delta: f64,
    /// Horizon-to-cell ratio; h = delta / h_ratio.
    pub h_ratio: f64,
    pub domain_min: Vec<f64>,
    pub domain_max: Vec<f64>,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        ProblemConfig {
            n: 1,
            p: 2.0,
            alpha: -1.0,
            delta: 0.125,
            h_ratio: 4.0,
            domain_min: vec![0.0],
            domain_max: vec![1.0],
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub f: SourceSpec,
    pub kappa: KappaSpec,
    /// Smooth closed-form flux used by consistency and stability sweeps.
    pub sigma: SmoothField,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            f: SourceSpec::Const { value: 1.0 },
            kappa: KappaSpec::Const { value: 1.0 },
            sigma: SmoothField::Bump {
                center: vec![0.5],
                rho: 0.25,
                amp: vec![1.0],
            },
        }
    }
}

/// Volumetric source specification.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceSpec {
    Const {
        value: f64,
    },
    /// Scalar bump `amp * exp(1 - 1/(1 - |x-center|^2/rho^2))`.
    Bump {
        center: Vec<f64>,
        rho: f64,
        amp: f64,
    },
}

impl SourceSpec {
    pub fn eval(&self, x: [f64; 2], n: usize) -> f64 {
        match self {
            SourceSpec::Const { value } => *value,
            SourceSpec::Bump { center, rho, amp } => {
                let bump = SmoothField::Bump {
                    center: center.clone(),
                    rho: *rho,
                    amp: vec![*amp],
                };
                bump.eval(x, n)[0]
            }
        }
    }
}

/// Conductivity specification: a fixed field or an admissible design set.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KappaSpec {
    Const {
        value: f64,
    },
    /// Independent uniform draws per cell, from the run seed.
    Random {
        lo: f64,
        hi: f64,
    },
    Design {
        lo: f64,
        hi: f64,
        volume: f64,
        halo_value: f64,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    pub tol: f64,
    pub max_iter: usize,
    pub eta: f64,
    pub acceptable_tol: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        let d = SolverConfig::default();
        SolverSettings {
            tol: d.tol,
            max_iter: d.max_iter,
            eta: d.eta,
            acceptable_tol: d.acceptable_tol,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct DesignSettings {
    pub outer_tol: f64,
    pub max_outer: usize,
    pub lambda_tol: f64,
}

impl Default for DesignSettings {
    fn default() -> Self {
        let d = OuterConfig::default();
        DesignSettings {
            outer_tol: d.tol,
            max_outer: d.max_outer,
            lambda_tol: d.lambda_tol,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// Horizons visited by sweep commands, largest first.
    pub deltas: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            deltas: vec![0.2, 0.1, 0.05],
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Artifact directory; nothing is written when empty.
    pub dir: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: String::new() }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)?;
        let cfg: RunConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.problem;
        if !(p.n == 1 || p.n == 2) {
            return Err(Error::Config(format!("grid dimension n = {} must be 1 or 2", p.n)));
        }
        if !(p.p > 1.0 && p.p.is_finite()) {
            return Err(Error::Config(format!("exponent p = {} must lie in (1, inf)", p.p)));
        }
        if !(p.delta > 0.0) {
            return Err(Error::Config(format!("horizon delta = {} must be positive", p.delta)));
        }
        if !(p.h_ratio >= 2.0) {
            return Err(Error::Config(format!(
                "h_ratio = {} must be at least 2 (resolution floor)",
                p.h_ratio
            )));
        }
        if p.domain_min.len() != p.n || p.domain_max.len() != p.n {
            return Err(Error::Config(format!(
                "domain bounds must have {} entries",
                p.n
            )));
        }
        // Kernel validity (alpha window, normalization).
        KernelSpec::new(p.n, p.p, p.delta, p.alpha)?;
        self.domain()?;
        match &self.data.kappa {
            KappaSpec::Const { value } => {
                if !(*value > 0.0) {
                    return Err(Error::Config("constant conductivity must be positive".into()));
                }
            }
            KappaSpec::Random { lo, hi } => {
                if !(*lo > 0.0 && hi >= lo) {
                    return Err(Error::Config(format!(
                        "random conductivity bounds [{lo}, {hi}] are invalid"
                    )));
                }
            }
            KappaSpec::Design {
                lo,
                hi,
                volume,
                halo_value,
            } => {
                AdmissibleSet::new(*lo, *hi, *volume, *halo_value)?;
            }
        }
        if !(self.solver.tol > 0.0) {
            return Err(Error::Config("solver tolerance must be positive".into()));
        }
        if self.solver.eta < 0.0 {
            return Err(Error::Config("eta must be nonnegative".into()));
        }
        if self.solver.eta == 0.0 && p.p < 2.0 {
            return Err(Error::Config(
                "eta = 0 is admissible only for p >= 2".into(),
            ));
        }
        for d in &self.sweep.deltas {
            if !(*d > 0.0) {
                return Err(Error::Config(format!("sweep horizon {d} must be positive")));
            }
        }
        Ok(())
    }

    pub fn domain(&self) -> Result<Domain> {
        let p = &self.problem;
        let d = match p.n {
            1 => Domain::Interval {
                a: p.domain_min[0],
                b: p.domain_max[0],
            },
            2 => Domain::Box2 {
                a: [p.domain_min[0], p.domain_min[1]],
                b: [p.domain_max[0], p.domain_max[1]],
            },
            _ => unreachable!("validated"),
        };
        if (0..p.n).any(|k| d.bounds(k).1 <= d.bounds(k).0) {
            return Err(Error::Config("domain has empty extent".into()));
        }
        Ok(d)
    }

    /// Kernel at a given horizon (sweep commands vary it).
    pub fn kernel_at(&self, delta: f64) -> Result<KernelSpec> {
        KernelSpec::new(self.problem.n, self.problem.p, delta, self.problem.alpha)
    }

    /// Grid at a given horizon, keeping delta/h fixed.
    pub fn grid_at(&self, delta: f64) -> Result<Grid> {
        let h = delta / self.problem.h_ratio;
        build_grid(&self.domain()?, h, delta)
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            tol: self.solver.tol,
            max_iter: self.solver.max_iter,
            eta: self.solver.eta,
            acceptable_tol: self.solver.acceptable_tol,
            line_search: Default::default(),
        }
    }

    pub fn outer_config(&self) -> OuterConfig {
        OuterConfig {
            tol: self.design.outer_tol,
            max_outer: self.design.max_outer,
            lambda_tol: self.design.lambda_tol,
        }
    }

    /// FNV-1a hash of the canonical JSON serialization; identifies every
    /// artifact written by a run. The output location is excluded so the
    /// same semantic configuration hashes identically wherever it writes.
    pub fn hash(&self) -> String {
        let mut semantic = self.clone();
        semantic.output = OutputConfig::default();
        let text = serde_json::to_string(&semantic).expect("config serializes");
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in text.as_bytes() {
            h ^= *b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        format!("{h:016x}")
    }
}
