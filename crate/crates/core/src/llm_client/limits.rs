use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

/// Source of time for backoff and rate limiting.
pub trait Clock: Send + Sync {
    /// Monotonic time since an arbitrary origin.
    fn now(&self) -> Duration;
    fn sleep(&self, d: Duration);
}

#[derive(Debug)]
pub struct SystemClock {
    origin: Instant,
}

impl Default for SystemClock {
    fn default() -> Self {
        Self { origin: Instant::now() }
    }
}

impl Clock for SystemClock {
    fn now(&self) -> Duration {
        self.origin.elapsed()
    }

    fn sleep(&self, d: Duration) {
        std::thread::sleep(d);
    }
}

/// Clock that advances only when slept on, recording every sleep.
#[derive(Debug, Default)]
pub struct FakeClock {
    state: Mutex<(Duration, Vec<Duration>)>,
}

impl FakeClock {
    pub fn new() -> Arc<Self> {
        Arc::new(Self::default())
    }

    pub fn sleeps(&self) -> Vec<Duration> {
        self.state.lock().unwrap().1.clone()
    }

    pub fn advance(&self, d: Duration) {
        self.state.lock().unwrap().0 += d;
    }
}

impl Clock for FakeClock {
    fn now(&self) -> Duration {
        self.state.lock().unwrap().0
    }

    fn sleep(&self, d: Duration) {
        let mut s = self.state.lock().unwrap();
        s.0 += d;
        s.1.push(d);
    }
}

/// Counting semaphore capping in-flight requests.
#[derive(Debug)]
pub struct Semaphore {
    available: Mutex<usize>,
    cond: Condvar,
}

pub struct Permit<'a> {
    sem: &'a Semaphore,
}

impl Semaphore {
    pub fn new(permits: usize) -> Self {
        Self {
            available: Mutex::new(permits.max(1)),
            cond: Condvar::new(),
        }
    }

    pub fn acquire(&self) -> Permit<'_> {
        let mut n = self.available.lock().unwrap();
        while *n == 0 {
            n = self.cond.wait(n).unwrap();
        }
        *n -= 1;
        Permit { sem: self }
    }

    pub fn available(&self) -> usize {
        *self.available.lock().unwrap()
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.sem.available.lock().unwrap() += 1;
        self.sem.cond.notify_one();
    }
}

/// Token bucket with capacity one: consecutive requests are spaced at least
/// `60 / requests_per_minute` seconds apart.
#[derive(Debug)]
pub struct TokenBucket {
    interval: Duration,
    next_free: Mutex<Option<Duration>>,
}

impl TokenBucket {
    pub fn per_minute(requests_per_minute: f64) -> Self {
        Self {
            interval: Duration::from_secs_f64(60.0 / requests_per_minute.max(f64::MIN_POSITIVE)),
            next_free: Mutex::new(None),
        }
    }

    /// Blocks (on `clock`) until a request may be issued. The lock is held
    /// while waiting so bursts are serialized.
    pub fn acquire(&self, clock: &dyn Clock) {
        let mut next = self.next_free.lock().unwrap();
        let now = clock.now();
        let start = match *next {
            Some(t) if t > now => {
                clock.sleep(t - now);
                t
            }
            _ => now,
        };
        *next = Some(start + self.interval);
    }
}
