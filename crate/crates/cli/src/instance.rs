use std::path::Path;

use contest_entry::mechanism::{attention_schedule, taxed_wta, winner_take_all};
use contest_entry::{
    AttentionCapsF64, CostModelF64, DesignConfig, QuadratureConfig, RewardVectorF64, SolverConfig,
};
use serde::{Deserialize, Serialize};

use crate::cli::Common;
use crate::fail::Failure;

/// Everything that defines a run apart from command-specific parameters.
/// The resolved form is echoed in every run record and can be fed back in
/// through `--config`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rewards: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub caps: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tax: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<String>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub design: DesignConfig,
    #[serde(default)]
    pub seed: u64,
}

/// How the reward schedule was specified.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constructor {
    Explicit,
    Wta,
    Attention,
}

pub fn load(common: &Common) -> Result<InstanceSpec, Failure> {
    let mut spec = match &common.config {
        Some(path) => read_config(path)?,
        None => InstanceSpec::default(),
    };
    macro_rules! set {
        ($($field:ident),*) => {$(
            if let Some(v) = &common.$field {
                spec.$field = Some(v.clone());
            }
        )*};
    }
    set!(n, rewards, wta, caps, tax, cost);
    if let Some(v) = common.arg_tol {
        spec.solver.arg_tol = v;
    }
    if let Some(v) = common.residual_tol {
        spec.solver.residual_tol = v;
    }
    if let Some(v) = common.max_iter {
        spec.solver.max_iter = v;
    }
    if let Some(v) = common.grid_nodes {
        spec.solver.grid_nodes = v;
    }
    if let Some(v) = common.quad_tol {
        spec.quadrature.tol = v;
    }
    if let Some(v) = common.quad_panels {
        spec.quadrature.panels = v;
    }
    if let Some(v) = common.quad_order {
        spec.quadrature.order = v;
    }
    if let Some(v) = common.rel_step {
        spec.design.rel_step = v;
    }
    if let Some(v) = common.budget_tol {
        spec.design.budget_tol = v;
    }
    if let Some(v) = common.seed {
        spec.seed = v;
    }
    spec.check_shape()?;
    Ok(spec)
}

fn read_config(path: &Path) -> Result<InstanceSpec, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| {
        Failure::usage(format!("config {} line {} column {}: {e}", path.display(), e.line(), e.column()))
    })
}

impl InstanceSpec {
    fn check_shape(&self) -> Result<(), Failure> {
        let given = [self.rewards.is_some(), self.wta.is_some(), self.caps.is_some()];
        if given.iter().filter(|&&g| g).count() > 1 {
            return Err(Failure::usage("give at most one of rewards, wta and caps"));
        }
        if self.tax.is_some() && self.wta.is_none() {
            return Err(Failure::usage("tax requires the wta constructor"));
        }
        if self.quadrature.order == 0 || self.quadrature.panels == 0 {
            return Err(Failure::usage("quadrature order and panels must be positive"));
        }
        Ok(())
    }

    pub fn constructor(&self) -> Option<Constructor> {
        if self.rewards.is_some() {
            Some(Constructor::Explicit)
        } else if self.wta.is_some() {
            Some(Constructor::Wta)
        } else if self.caps.is_some() {
            Some(Constructor::Attention)
        } else {
            None
        }
    }

    pub fn cost_model(&self) -> Result<CostModelF64, Failure> {
        let text = self.cost.as_deref().ok_or_else(|| Failure::usage("missing cost (--cost)"))?;
        Ok(text.parse::<CostModelF64>()?)
    }

    pub fn require_n(&self) -> Result<usize, Failure> {
        let from_list = self.rewards.as_ref().or(self.caps.as_ref()).map(Vec::len);
        match (self.n, from_list) {
            (Some(n), Some(m)) if n != m => {
                Err(Failure::usage(format!("n = {n} but the schedule lists {m} entries")))
            }
            (Some(n), _) | (None, Some(n)) => Ok(n),
            (None, None) => Err(Failure::usage("missing number of agents (--n)")),
        }
    }

    pub fn caps(&self) -> Result<AttentionCapsF64, Failure> {
        let caps = self.caps.clone().ok_or_else(|| Failure::usage("missing attention caps (--caps)"))?;
        self.require_n()?;
        Ok(AttentionCapsF64::new(caps)?)
    }

    /// The reward schedule, built from whichever constructor was given.
    pub fn rewards(&self, cost: &CostModelF64) -> Result<RewardVectorF64, Failure> {
        let n = self.require_n()?;
        match self.constructor() {
            Some(Constructor::Explicit) => Ok(RewardVectorF64::validate(self.rewards.clone().unwrap_or_default())?),
            Some(Constructor::Wta) => {
                let prize = self.wta.unwrap_or_default();
                Ok(match self.tax {
                    Some(t) => taxed_wta(n, prize, t, cost)?,
                    None => winner_take_all(n, prize)?,
                })
            }
            Some(Constructor::Attention) => Ok(attention_schedule(&self.caps()?, cost.entry_cost())?),
            None => Err(Failure::usage("missing reward schedule (--rewards, --wta or --caps)")),
        }
    }

    /// Normalises the cost string so the echo is canonical.
    pub fn canonical(mut self) -> Self {
        if let Some(c) = self.cost.as_deref().and_then(|c| c.parse::<CostModelF64>().ok()) {
            self.cost = Some(c.to_string());
        }
        self
    }
}
