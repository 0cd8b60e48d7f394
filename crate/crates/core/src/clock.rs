//! Time source abstraction.
//!
//! Chains record per-iteration wall time and total CPU seconds, but the
//! core has no `std::time`; callers inject a clock. The CLI provides a
//! monotonic wall clock, tests and deterministic runs use [`NullClock`].

pub trait Clock {
    /// Nanoseconds since an arbitrary fixed origin.
    fn now_ns(&self) -> u64;
}

/// Clock that always reads zero. All recorded durations collapse to 0.
#[derive(Debug, Clone, Copy, Default)]
pub struct NullClock;

impl Clock for NullClock {
    fn now_ns(&self) -> u64 {
        0
    }
}

impl<T: Clock + ?Sized> Clock for &T {
    fn now_ns(&self) -> u64 {
        (**self).now_ns()
    }
}
