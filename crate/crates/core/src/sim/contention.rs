//! Random-access collision model.
//!
//! An access attempt sends a one-unit control packet. Two attempts collide
//! when their start times are less than one unit apart, i.e. the
//! vulnerability window around an attempt is two units wide. Under Poisson
//! attempts of rate `G` an attempt therefore succeeds with probability
//! `e^{-2G}`.

/// Duration of a single control packet.
pub const CONTROL_TIME: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Attempt {
    user: usize,
    start: f64,
    collided: bool,
}

/// Attempts currently on the air on one channel.
#[derive(Debug, Clone, Default)]
pub struct CollisionWindow {
    active: Vec<Attempt>,
}

impl CollisionWindow {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers an attempt by `user` starting at `now`. Any attempt still
    /// on the air collides with it.
    pub fn begin(&mut self, user: usize, now: f64) {
        let collided = !self.active.is_empty();
        for a in &mut self.active {
            a.collided = true;
        }
        self.active.push(Attempt { user, start: now, collided });
    }

    /// Ends `user`'s attempt; returns whether it got through cleanly.
    pub fn end(&mut self, user: usize) -> bool {
        let pos = self
            .active
            .iter()
            .position(|a| a.user == user)
            .expect("ending an attempt that was never started");
        !self.active.swap_remove(pos).collided
    }

    pub fn on_air(&self) -> usize {
        self.active.len()
    }

    /// Start time of the earliest attempt still on the air.
    pub fn earliest_start(&self) -> Option<f64> {
        self.active.iter().map(|a| a.start).min_by(f64::total_cmp)
    }
}
