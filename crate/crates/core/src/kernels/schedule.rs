use std::sync::Arc;

use rand::RngCore;
use serde_json::json;

use super::{DecodingConfig, Kernel, KernelError, KernelStep, Language, PromptSchedule, SchedulePolicy, StepContext};
use crate::textunit::Sentence;

/// Time-inhomogeneous kernel: iteration `t` runs the base kernel with the
/// template the schedule selects for `t`.
#[derive(Debug, Clone)]
pub struct ScheduledKernel {
    schedule: PromptSchedule,
    base: Arc<dyn Kernel>,
}

impl ScheduledKernel {
    pub fn new(schedule: PromptSchedule, base: Arc<dyn Kernel>) -> Self {
        Self { schedule, base }
    }

    pub fn schedule(&self) -> &PromptSchedule {
        &self.schedule
    }
}

impl Kernel for ScheduledKernel {
    fn step(&self, state: &Sentence, ctx: &mut StepContext<'_>) -> Result<KernelStep, KernelError> {
        let (k, template) = self.schedule.template_for(ctx.t);
        let mut step = self.base.step(state, &mut ctx.reborrow(Some(template), k))?;
        step.prompt_index = k;
        Ok(step)
    }

    fn domain(&self) -> &Language {
        self.base.domain()
    }

    fn codomain(&self) -> &Language {
        self.base.codomain()
    }

    /// Only a fixed schedule keeps the sentence-level chain homogeneous.
    fn is_deterministic(&self, decoding: &DecodingConfig) -> bool {
        self.schedule.policy() == SchedulePolicy::Fixed && self.base.is_deterministic(decoding)
    }

    fn describe(&self) -> serde_json::Value {
        let ids: Vec<&str> = self.schedule.templates().iter().map(|t| t.id()).collect();
        json!({
            "kind": "scheduled",
            "policy": self.schedule.policy(),
            "templates": ids,
            "base": self.base.describe(),
        })
    }
}

/// Dispatches to a different kernel per active template id. Useful for
/// replaying scripted behavior that depends on the prompt.
#[derive(Debug, Clone)]
pub struct PromptRouted {
    routes: Vec<(String, Arc<dyn Kernel>)>,
    domain: Language,
}

impl PromptRouted {
    pub fn new(routes: Vec<(String, Arc<dyn Kernel>)>) -> Result<Self, KernelError> {
        let first = routes
            .first()
            .ok_or_else(|| KernelError::InvalidInput("prompt router has no routes".into()))?;
        let domain = first.1.domain().clone();
        Ok(Self { routes, domain })
    }
}

impl Kernel for PromptRouted {
    fn step(&self, state: &Sentence, ctx: &mut StepContext<'_>) -> Result<KernelStep, KernelError> {
        let id = ctx
            .prompt
            .map(|p| p.id().to_string())
            .ok_or_else(|| KernelError::InvalidInput("prompt router called without an active template".into()))?;
        let kernel = self
            .routes
            .iter()
            .find(|(route, _)| *route == id)
            .map(|(_, k)| k)
            .ok_or_else(|| KernelError::InvalidInput(format!("no route for template `{id}`")))?;
        kernel.step(state, ctx)
    }

    fn domain(&self) -> &Language {
        &self.domain
    }

    fn codomain(&self) -> &Language {
        &self.domain
    }

    fn is_deterministic(&self, decoding: &DecodingConfig) -> bool {
        self.routes.iter().all(|(_, k)| k.is_deterministic(decoding))
    }

    fn describe(&self) -> serde_json::Value {
        let routes: serde_json::Map<String, serde_json::Value> =
            self.routes.iter().map(|(id, k)| (id.clone(), k.describe())).collect();
        json!({ "kind": "routed", "routes": routes })
    }
}

/// One step of a scheduled chain at iteration `t`.
pub fn scheduled_step(
    schedule: &PromptSchedule,
    base: &Arc<dyn Kernel>,
    state: &Sentence,
    t: usize,
    config: &DecodingConfig,
    rng: &mut dyn RngCore,
) -> Result<KernelStep, KernelError> {
    let kernel = ScheduledKernel::new(schedule.clone(), base.clone());
    let mut ctx = StepContext::new(config, rng).at(t);
    kernel.step(state, &mut ctx)
}
