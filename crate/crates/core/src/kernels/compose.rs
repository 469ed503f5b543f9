use std::sync::Arc;

use serde_json::json;

use super::{DecodingConfig, Kernel, KernelError, KernelStep, Language, StepContext};
use crate::textunit::Sentence;

/// `backward ∘ forward`: one step translates out and back, recording the
/// bridge-language string.
#[derive(Debug, Clone)]
pub struct RoundTripKernel {
    forward: Arc<dyn Kernel>,
    backward: Arc<dyn Kernel>,
}

/// Compose two directional kernels into a single step.
pub fn compose_round_trip(forward: Arc<dyn Kernel>, backward: Arc<dyn Kernel>) -> Result<RoundTripKernel, KernelError> {
    if forward.codomain() != backward.domain() {
        return Err(KernelError::Composition {
            forward_codomain: forward.codomain().clone(),
            backward_domain: backward.domain().clone(),
        });
    }
    Ok(RoundTripKernel { forward, backward })
}

impl RoundTripKernel {
    pub fn forward(&self) -> &Arc<dyn Kernel> {
        &self.forward
    }

    pub fn backward(&self) -> &Arc<dyn Kernel> {
        &self.backward
    }
}

impl Kernel for RoundTripKernel {
    fn step(&self, state: &Sentence, ctx: &mut StepContext<'_>) -> Result<KernelStep, KernelError> {
        let prompt_index = ctx.prompt_index;
        // Each direction carries its own template; a scheduled prompt is not
        // forwarded.
        let out = self.forward.step(state, &mut ctx.reborrow(None, prompt_index))?;
        let back = self.backward.step(&out.output, &mut ctx.reborrow(None, prompt_index))?;
        let step_probability = match (out.step_probability, back.step_probability) {
            (Some(a), Some(b)) => Some(a * b),
            _ => None,
        };
        let mut calls = out.calls;
        calls.extend(back.calls);
        Ok(KernelStep {
            output: back.output,
            chosen_index: back.chosen_index,
            step_probability,
            prompt_index,
            intermediate: Some(out.output),
            truncated: out.truncated || back.truncated,
            calls,
        })
    }

    fn domain(&self) -> &Language {
        self.forward.domain()
    }

    fn codomain(&self) -> &Language {
        self.backward.codomain()
    }

    fn is_deterministic(&self, decoding: &DecodingConfig) -> bool {
        self.forward.is_deterministic(decoding) && self.backward.is_deterministic(decoding)
    }

    fn describe(&self) -> serde_json::Value {
        json!({
            "kind": "roundtrip",
            "forward": self.forward.describe(),
            "backward": self.backward.describe(),
        })
    }
}
