//! Wall-clock budgets.

use std::time::{Duration, Instant};

use dtlstar_core::statespace::Budget;

/// Runs out once the deadline passes.
#[derive(Clone, Debug)]
pub struct TimeBudget {
    deadline: Instant,
}

impl TimeBudget {
    pub fn new(limit: Duration) -> Self {
        TimeBudget { deadline: Instant::now() + limit }
    }

    pub fn millis(ms: u64) -> Self {
        Self::new(Duration::from_millis(ms))
    }
}

impl Budget for TimeBudget {
    fn spend(&mut self) -> bool {
        Instant::now() < self.deadline
    }
}
