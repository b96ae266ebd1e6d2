use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Policy;
use crate::env::Env;

/// Uniform choice among each agent's available actions.
#[derive(Clone, Debug)]
pub struct RandomPolicy {
    rng: ChaCha8Rng,
    scratch: Vec<usize>,
}

impl Default for RandomPolicy {
    fn default() -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(0),
            scratch: Vec::new(),
        }
    }
}

impl Policy for RandomPolicy {
    fn name(&self) -> &'static str {
        "random"
    }

    fn reset(&mut self, _env: &Env, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
    }

    fn act(&mut self, env: &Env, actions: &mut [usize]) {
        for (agent, slot) in actions.iter_mut().enumerate() {
            self.scratch.clear();
            self.scratch
                .extend((0..env.n_actions()).filter(|a| env.is_available(agent, *a)));
            *slot = self.scratch[self.rng.gen_range(0..self.scratch.len())];
        }
    }
}
