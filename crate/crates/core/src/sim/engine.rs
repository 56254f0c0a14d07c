use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use rand::Rng;
use rand_distr::Exp1;

use super::contention::{CollisionWindow, CONTROL_TIME};
use super::{channel_stream, user_stream, AccessPlan, Mode, SimConfig, SimStats, UserPolicy, UserStream};
use crate::channel::ChannelModel;
use crate::congestion::HANDSHAKE_TIME;
use crate::error::{domain, Result};
use crate::policy::Action;
use crate::rng::{self, SimRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Event {
    Arrival(usize),
    BackoffDone(usize),
    ControlEnd(usize),
    Retry(usize),
    Won(usize),
    TxEnd(usize),
    Granted(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Scheduled {
    time: f64,
    seq: u64,
    event: Event,
}

impl Eq for Scheduled {}

impl Ord for Scheduled {
    // min-heap on (time, seq)
    fn cmp(&self, other: &Self) -> Ordering {
        other.time.total_cmp(&self.time).then_with(|| other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Entry {
    /// Arrived at the channel, fresh or switched in.
    Arrive,
    /// Contending again after STAY.
    Retry,
}

struct User {
    queued: u64,
    in_process: bool,
    stage: usize,
    channel: usize,
    route: Vec<usize>,
    process_start: f64,
    access_start: f64,
    entry: Entry,
    pending_bytes: f64,
    collisions: u32,
    arrivals: SimRng,
    access: SimRng,
}

struct Channel {
    reserved_by: Option<usize>,
    window: CollisionWindow,
    deferred: Vec<usize>,
    fifo: VecDeque<usize>,
    state: usize,
    tick: u64,
    rng: SimRng,
}

struct Engine<'a> {
    config: &'a SimConfig,
    models: &'a [ChannelModel],
    plan: &'a AccessPlan,
    users: Vec<User>,
    channels: Vec<Channel>,
    queue: BinaryHeap<Scheduled>,
    seq: u64,
    now: f64,
    stats: SimStats,
    bin_width: f64,
    contention_sum: Vec<f64>,
    switching_sum: Vec<f64>,
    process_time: f64,
    process_bytes: f64,
}

/// Simulates `config.horizon` time units and returns the measurements.
///
/// The run is a deterministic function of `config.seed`: every user and
/// channel draws from its own stream.
pub fn run(config: &SimConfig, channels: &[ChannelModel], plan: &AccessPlan) -> Result<SimStats> {
    config.validate()?;
    if channels.is_empty() {
        return Err(domain("need at least one channel"));
    }
    if plan.users.len() != config.n_users {
        return Err(domain(format!("plan has {} users, config {}", plan.users.len(), config.n_users)));
    }
    let n = channels.len();
    if plan.contention_delays.len() != n || plan.switching_delays.len() != n {
        return Err(domain("plan delays do not match the channel count"));
    }
    for u in &plan.users {
        if u.sequence.is_empty() || u.sequence.iter().any(|&j| j >= n) {
            return Err(domain("user sequence refers to a missing channel"));
        }
        let stages = match &u.policy {
            UserPolicy::Iid(p) => Some(p.len()),
            UserPolicy::Markov(p) => Some(p.len()),
            UserPolicy::Baseline => None,
        };
        if stages.is_some_and(|s| s != u.sequence.len()) {
            return Err(domain("policy stage count differs from its sequence length"));
        }
    }
    Engine::new(config, channels, plan).simulate()
}

impl<'a> Engine<'a> {
    fn new(config: &'a SimConfig, models: &'a [ChannelModel], plan: &'a AccessPlan) -> Self {
        let n = models.len();
        let users = (0..config.n_users)
            .map(|u| User {
                queued: 0,
                in_process: false,
                stage: 0,
                channel: 0,
                route: Vec::new(),
                process_start: 0.0,
                access_start: 0.0,
                entry: Entry::Arrive,
                pending_bytes: 0.0,
                collisions: 0,
                arrivals: rng::stream(config.seed, user_stream(u, UserStream::Arrivals)),
                access: rng::stream(config.seed, user_stream(u, UserStream::Access)),
            })
            .collect();
        let channels = models
            .iter()
            .enumerate()
            .map(|(j, m)| {
                let mut rng = rng::stream(config.seed, channel_stream(j));
                let state = match m {
                    ChannelModel::Markov(_) => m.initial_state(&mut rng),
                    ChannelModel::Iid(_) => 0,
                };
                Channel {
                    reserved_by: None,
                    window: CollisionWindow::new(),
                    deferred: Vec::new(),
                    fifo: VecDeque::new(),
                    state,
                    tick: 0,
                    rng,
                }
            })
            .collect();
        let window = config.horizon - config.warmup;
        let stats = SimStats {
            elapsed: window,
            attempt_rates: vec![0.0; n],
            contention_delays: vec![0.0; n],
            switching_delays: vec![0.0; n],
            contention_samples: vec![0; n],
            switching_samples: vec![0; n],
            load_series: vec![vec![0.0; n]; config.load_bins],
            ..SimStats::default()
        };
        Self {
            config,
            models,
            plan,
            users,
            channels,
            queue: BinaryHeap::new(),
            seq: 0,
            now: 0.0,
            stats,
            bin_width: window / config.load_bins as f64,
            contention_sum: vec![0.0; n],
            switching_sum: vec![0.0; n],
            process_time: 0.0,
            process_bytes: 0.0,
        }
    }

    fn schedule(&mut self, time: f64, event: Event) {
        self.seq += 1;
        self.queue.push(Scheduled { time, seq: self.seq, event });
    }

    fn measuring(&self) -> bool {
        self.now >= self.config.warmup
    }

    fn exp(rng: &mut SimRng, mean: f64) -> f64 {
        let e: f64 = rng.sample(Exp1);
        mean * e
    }

    fn simulate(mut self) -> Result<SimStats> {
        if self.config.arrival_rate > 0.0 {
            for u in 0..self.users.len() {
                let gap = Self::exp(&mut self.users[u].arrivals, 1.0 / self.config.arrival_rate);
                self.schedule(gap, Event::Arrival(u));
            }
        }
        while let Some(next) = self.queue.pop() {
            if next.time > self.config.horizon {
                break;
            }
            self.now = next.time;
            match next.event {
                Event::Arrival(u) => self.on_arrival(u),
                Event::BackoffDone(u) => self.on_backoff_done(u),
                Event::ControlEnd(u) => self.on_control_end(u),
                Event::Retry(u) => self.sense(u),
                Event::Won(u) => self.on_won(u),
                Event::TxEnd(u) => self.on_tx_end(u),
                Event::Granted(u) => self.on_granted(u),
            }
        }
        Ok(self.finish())
    }

    fn on_arrival(&mut self, u: usize) {
        self.stats.packets_generated += 1;
        self.users[u].queued += 1;
        let gap = Self::exp(&mut self.users[u].arrivals, 1.0 / self.config.arrival_rate);
        self.schedule(self.now + gap, Event::Arrival(u));
        if !self.users[u].in_process {
            self.start_process(u);
        }
    }

    fn start_process(&mut self, u: usize) {
        let n = self.models.len();
        let plan = &self.plan.users[u];
        let user = &mut self.users[u];
        user.in_process = true;
        user.process_start = self.now;
        user.stage = 0;
        user.route = match plan.policy {
            UserPolicy::Baseline => vec![user.access.random_range(0..n)],
            _ => plan.sequence.clone(),
        };
        user.channel = user.route[0];
        self.enter(u, Entry::Arrive);
    }

    fn enter(&mut self, u: usize, entry: Entry) {
        let ch = self.users[u].channel;
        self.users[u].access_start = self.now;
        self.users[u].entry = entry;
        match self.config.mode {
            // an arrival finding the channel idle transmits its RTS at once;
            // a user that just released the channel backs off like the rest
            Mode::Contention => match entry {
                Entry::Arrive => self.on_backoff_done(u),
                Entry::Retry => self.sense(u),
            },
            Mode::MeanDelay => {
                self.count_attempt(ch);
                let mean = match entry {
                    Entry::Arrive => self.plan.switching_delays[ch],
                    Entry::Retry => self.plan.contention_delays[ch],
                };
                let d = Self::exp(&mut self.users[u].access, mean);
                self.schedule(self.now + d, Event::Granted(u));
            }
        }
    }

    /// Carrier sense: defer while the channel is reserved, otherwise back off.
    fn sense(&mut self, u: usize) {
        let ch = self.users[u].channel;
        if self.channels[ch].reserved_by.is_some() {
            self.channels[ch].deferred.push(u);
        } else {
            self.back_off(u);
        }
    }

    fn back_off(&mut self, u: usize) {
        let stage = self.users[u].collisions.min(self.config.max_backoff_doublings);
        let mean = self.config.mean_backoff * f64::from(1u32 << stage);
        let b = Self::exp(&mut self.users[u].access, mean);
        self.schedule(self.now + b, Event::BackoffDone(u));
    }

    fn count_attempt(&mut self, ch: usize) {
        if self.measuring() {
            self.stats.attempts += 1;
            self.stats.attempt_rates[ch] += 1.0;
            let bin = (((self.now - self.config.warmup) / self.bin_width) as usize).min(self.config.load_bins - 1);
            self.stats.load_series[bin][ch] += 1.0;
        }
    }

    fn on_backoff_done(&mut self, u: usize) {
        let ch = self.users[u].channel;
        if self.channels[ch].reserved_by.is_some() {
            self.channels[ch].deferred.push(u);
            return;
        }
        self.count_attempt(ch);
        self.channels[ch].window.begin(u, self.now);
        self.schedule(self.now + CONTROL_TIME, Event::ControlEnd(u));
    }

    fn on_control_end(&mut self, u: usize) {
        let ch = self.users[u].channel;
        let clean = self.channels[ch].window.end(u);
        if clean && self.channels[ch].reserved_by.is_none() {
            if self.measuring() {
                self.stats.successful_attempts += 1;
            }
            self.channels[ch].reserved_by = Some(u);
            self.users[u].collisions = 0;
            self.schedule(self.now + (HANDSHAKE_TIME - CONTROL_TIME), Event::Won(u));
        } else {
            if clean {
                self.stats.exclusivity_violations += 1;
            }
            self.users[u].collisions += 1;
            // no CTS: wait out the reply slot, then sense again
            self.schedule(self.now + (HANDSHAKE_TIME - CONTROL_TIME), Event::Retry(u));
        }
    }

    fn on_granted(&mut self, u: usize) {
        let ch = self.users[u].channel;
        if self.channels[ch].reserved_by.is_some() {
            self.channels[ch].fifo.push_back(u);
        } else {
            self.channels[ch].reserved_by = Some(u);
            self.on_won(u);
        }
    }

    fn observe(&mut self, ch: usize) -> (f64, usize) {
        let now = self.now;
        let c = &mut self.channels[ch];
        match &self.models[ch] {
            ChannelModel::Iid(d) => {
                let i = d.sample_index(&mut c.rng);
                (d.support()[i], i)
            }
            ChannelModel::Markov(m) => {
                let tick = now.floor() as u64;
                if tick > c.tick {
                    c.state = m.advance(c.state, tick - c.tick, &mut c.rng);
                    c.tick = tick;
                }
                (m.reward(c.state), c.state)
            }
        }
    }

    fn on_won(&mut self, u: usize) {
        let ch = self.users[u].channel;
        if self.channels[ch].reserved_by != Some(u) {
            self.stats.exclusivity_violations += 1;
        }
        let waited = self.now - self.users[u].access_start;
        if self.measuring() {
            match self.users[u].entry {
                Entry::Arrive => {
                    self.switching_sum[ch] += waited;
                    self.stats.switching_samples[ch] += 1;
                }
                Entry::Retry => {
                    self.contention_sum[ch] += waited;
                    self.stats.contention_samples[ch] += 1;
                }
            }
        }
        let (reward, state) = self.observe(ch);
        let stage = self.users[u].stage;
        let last = stage + 1 == self.users[u].route.len();
        let mut action = self.plan.users[u].policy.decide(stage, reward, state);
        if action == Action::Switch && last {
            self.stats.revisit_violations += 1;
            action = Action::Stay;
        }
        if self.measuring() {
            self.stats.decisions[action.index()] += 1;
        }
        match action {
            Action::Stop => {
                self.users[u].pending_bytes = (reward * self.config.t()).min(self.config.packet_payload);
                self.schedule(self.now + self.config.t(), Event::TxEnd(u));
            }
            Action::Stay => {
                self.release(ch);
                self.enter(u, Entry::Retry);
            }
            Action::Switch => {
                self.release(ch);
                let user = &mut self.users[u];
                user.stage += 1;
                let next = user.route[user.stage];
                if user.route[..user.stage].contains(&next) {
                    self.stats.revisit_violations += 1;
                }
                user.channel = next;
                self.enter(u, Entry::Arrive);
            }
        }
    }

    fn on_tx_end(&mut self, u: usize) {
        let ch = self.users[u].channel;
        self.release(ch);
        let bytes = self.users[u].pending_bytes;
        if self.measuring() {
            self.stats.delivered_bytes += bytes;
            self.stats.processes_completed += 1;
            self.process_bytes += bytes;
            self.process_time += self.now - self.users[u].process_start;
        }
        self.stats.packets_delivered += 1;
        let user = &mut self.users[u];
        user.queued -= 1;
        user.in_process = false;
        if user.queued > 0 {
            self.start_process(u);
        }
    }

    fn release(&mut self, ch: usize) {
        self.channels[ch].reserved_by = None;
        match self.config.mode {
            Mode::Contention => {
                let waiting = std::mem::take(&mut self.channels[ch].deferred);
                for v in waiting {
                    self.back_off(v);
                }
            }
            Mode::MeanDelay => {
                if let Some(v) = self.channels[ch].fifo.pop_front() {
                    self.channels[ch].reserved_by = Some(v);
                    self.schedule(self.now, Event::Won(v));
                }
            }
        }
    }

    fn finish(mut self) -> SimStats {
        let window = self.stats.elapsed;
        let s = &mut self.stats;
        s.throughput = s.delivered_bytes / window;
        s.data_rate = if self.process_time > 0.0 { self.process_bytes / self.process_time } else { 0.0 };
        for r in &mut s.attempt_rates {
            *r /= window;
        }
        for row in &mut s.load_series {
            for r in row.iter_mut() {
                *r /= self.bin_width;
            }
        }
        for j in 0..s.contention_delays.len() {
            s.contention_delays[j] = mean_or_zero(self.contention_sum[j], s.contention_samples[j]);
            s.switching_delays[j] = mean_or_zero(self.switching_sum[j], s.switching_samples[j]);
        }
        s.packets_queued = self.users.iter().map(|u| u.queued).sum();
        self.stats
    }
}

fn mean_or_zero(sum: f64, n: u64) -> f64 {
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}
