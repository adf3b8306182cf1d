use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use chrono::{DateTime, Duration, SubsecRound, Utc};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use route_receipt::receipt::{new_receipt_id, receipt_id_from, Timestamp};

/// Source of `served_at`.
pub trait Clock: Send + Sync {
    fn now(&self) -> Timestamp;
}

/// Wall time, millisecond precision.
#[derive(Debug, Clone, Copy, Default)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> Timestamp {
        Timestamp::from_datetime(Utc::now().trunc_subsecs(3))
    }
}

#[derive(Debug, Clone)]
pub struct FixedClock(pub Timestamp);

impl Clock for FixedClock {
    fn now(&self) -> Timestamp {
        self.0.clone()
    }
}

/// Starts at `start` and moves forward by `step` on every reading.
#[derive(Debug)]
pub struct StepClock {
    start: DateTime<Utc>,
    step: Duration,
    ticks: AtomicU64,
}

impl StepClock {
    pub fn new(start: Timestamp, step: Duration) -> Self {
        StepClock {
            start: start.instant(),
            step,
            ticks: AtomicU64::new(0),
        }
    }
}

impl Clock for StepClock {
    fn now(&self) -> Timestamp {
        let n = self.ticks.fetch_add(1, Ordering::SeqCst);
        let offset = self.step * i32::try_from(n).unwrap_or(i32::MAX);
        Timestamp::from_datetime(self.start + offset)
    }
}

/// Source of receipt and request ids.
#[derive(Debug)]
pub enum IdSource {
    Random,
    Seeded(Box<Mutex<ChaCha8Rng>>),
}

impl IdSource {
    pub fn seeded(seed: u64) -> Self {
        IdSource::Seeded(Box::new(Mutex::new(ChaCha8Rng::seed_from_u64(seed))))
    }

    pub fn next_receipt_id(&self) -> String {
        match self {
            IdSource::Random => new_receipt_id(),
            IdSource::Seeded(rng) => receipt_id_from(&mut *rng.lock().expect("id source poisoned")),
        }
    }
}
