//! Wall-clock budgets with cooperative cancellation.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use thiserror::Error;

#[derive(Debug, Clone, Copy, Error, PartialEq, Eq)]
pub enum Interrupted {
    #[error("budget exhausted")]
    Timeout,
    #[error("cancelled")]
    Cancelled,
}

/// A deadline plus a shared cancel flag. Clones share the flag, so a driver
/// can stop a worker by cancelling its own copy.
#[derive(Clone, Debug)]
pub struct Budget {
    deadline: Option<Instant>,
    cancel: Arc<AtomicBool>,
}

impl Default for Budget {
    fn default() -> Self {
        Budget::unlimited()
    }
}

impl Budget {
    pub fn unlimited() -> Budget {
        Budget { deadline: None, cancel: Arc::new(AtomicBool::new(false)) }
    }

    pub fn with_timeout(d: Duration) -> Budget {
        Budget { deadline: Some(Instant::now() + d), cancel: Arc::new(AtomicBool::new(false)) }
    }

    /// A budget ending no later than `self` and after at most `d`, sharing
    /// the cancel flag.
    pub fn sub(&self, d: Duration) -> Budget {
        let mine = Instant::now() + d;
        let deadline = Some(self.deadline.map_or(mine, |x| x.min(mine)));
        Budget { deadline, cancel: self.cancel.clone() }
    }

    pub fn deadline(&self) -> Option<Instant> {
        self.deadline
    }

    pub fn remaining(&self) -> Option<Duration> {
        self.deadline.map(|d| d.saturating_duration_since(Instant::now()))
    }

    pub fn cancel(&self) {
        self.cancel.store(true, Ordering::SeqCst);
    }

    pub fn is_cancelled(&self) -> bool {
        self.cancel.load(Ordering::SeqCst)
    }

    /// Checkpoint for loops: fails once the deadline passed or on cancel.
    pub fn check(&self) -> Result<(), Interrupted> {
        if self.is_cancelled() {
            return Err(Interrupted::Cancelled);
        }
        match self.deadline {
            Some(d) if Instant::now() >= d => Err(Interrupted::Timeout),
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_budget_is_expired() {
        assert_eq!(Budget::with_timeout(Duration::ZERO).check(), Err(Interrupted::Timeout));
    }

    #[test]
    fn cancel_is_shared() {
        let b = Budget::unlimited();
        let c = b.sub(Duration::from_secs(60));
        b.cancel();
        assert_eq!(c.check(), Err(Interrupted::Cancelled));
    }

    #[test]
    fn sub_never_extends() {
        let b = Budget::with_timeout(Duration::from_millis(10));
        let c = b.sub(Duration::from_secs(60));
        assert!(c.deadline() <= b.deadline());
    }
}
