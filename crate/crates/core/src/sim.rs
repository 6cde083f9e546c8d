//! Block-by-block Monte Carlo simulation of the whole system.
//!
//! Every block draws fresh uplink and downlink gains for all IoDs (uplink then
//! downlink, IoD by IoD), schedules at most one IoD, lets it spend its whole
//! battery on one packet and lets everyone else harvest. Continuous mode keeps
//! the exact residual energy; discretized mode keeps the battery on the level
//! grid and floors each harvest, which is the process the chains describe.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fairness::{normalized_ratio, JointState};
use crate::metrics::{charging_rounds, fairness_index, fairness_index_raw};
use crate::numerics::RicianSampler;
use crate::policy::PolicyKind;
use crate::scalar::Scalar;
use crate::system::SystemConfig;
use crate::throughput::weighted_energy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BatteryMode {
    Continuous,
    Discretized,
}

impl fmt::Display for BatteryMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BatteryMode::Continuous => "continuous",
            BatteryMode::Discretized => "discretized",
        })
    }
}

impl FromStr for BatteryMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "continuous" | "cont" => Ok(BatteryMode::Continuous),
            "discretized" | "discrete" | "disc" => Ok(BatteryMode::Discretized),
            other => Err(Error::Config(format!("unknown battery mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimOptions {
    pub mode: BatteryMode,
    /// Round robin hands an empty IoD's slot to the next non-empty one.
    pub rr_skip_empty: bool,
    /// Batches per replication for the batch-means standard errors.
    pub batches: usize,
    /// Number of leading blocks to keep in the per-block trace.
    pub trace_blocks: usize,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self { mode: BatteryMode::Discretized, rr_skip_empty: false, batches: 50, trace_blocks: 0 }
    }
}

impl SimOptions {
    pub fn with_mode(mode: BatteryMode) -> Self {
        Self { mode, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimState<S = f64> {
    /// Residual energy `r_i` in joules.
    pub energy: Vec<S>,
    /// Battery level (exact in discretized mode, floored in continuous mode).
    pub level: Vec<usize>,
    /// Blocks waited since the last transmission, `1..=M`.
    pub wait: Vec<usize>,
    /// Zero-based index of the next round-robin slot.
    pub rr_cursor: usize,
    pub block: u64,
}

impl<S: Scalar> SimState<S> {
    pub fn empty(num_iods: usize) -> Self {
        Self {
            energy: vec![S::zero(); num_iods],
            level: vec![0; num_iods],
            wait: vec![1; num_iods],
            rr_cursor: 0,
            block: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BlockOutcome {
    /// Nobody transmitted.
    Idle,
    Delivered(usize),
    Outage(usize),
}

impl BlockOutcome {
    pub fn is_outage(self) -> bool {
        !matches!(self, BlockOutcome::Delivered(_))
    }

    pub fn transmitter(self) -> Option<usize> {
        match self {
            BlockOutcome::Idle => None,
            BlockOutcome::Delivered(i) | BlockOutcome::Outage(i) => Some(i),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub block: u64,
    pub selected: Option<usize>,
    pub outcome: BlockOutcome,
    /// Residual energies at the start of the block.
    pub energy: Vec<f64>,
}

impl TraceRow {
    pub fn csv_header(num_iods: usize) -> Vec<String> {
        let mut cols = vec!["block".to_string(), "selected".into(), "outcome".into()];
        cols.extend((1..=num_iods).map(|i| format!("energy_{i}")));
        cols
    }

    pub fn csv_fields(&self) -> Vec<String> {
        let outcome = match self.outcome {
            BlockOutcome::Idle => "idle",
            BlockOutcome::Delivered(_) => "delivered",
            BlockOutcome::Outage(_) => "outage",
        };
        let mut f = vec![
            self.block.to_string(),
            self.selected.map(|i| (i + 1).to_string()).unwrap_or_default(),
            outcome.to_string(),
        ];
        f.extend(self.energy.iter().map(|e| format!("{e:.9e}")));
        f
    }
}

/// One running replication.
pub struct Simulator<S = f64> {
    cfg: SystemConfig<S>,
    policy: PolicyKind,
    opts: SimOptions,
    samplers: Vec<RicianSampler<S>>,
    gains: Vec<S>,
    phis: Vec<S>,
    sinr_threshold: S,
    state: SimState<S>,
    channel_rng: ChaCha8Rng,
    policy_rng: ChaCha8Rng,
    uplink: Vec<S>,
    downlink: Vec<S>,
}

impl<S: Scalar> Simulator<S> {
    /// Seeds the channel stream with stream 0 and the policy stream with
    /// stream 1 of `ChaCha8Rng::seed_from_u64(seed)`.
    pub fn new(cfg: &SystemConfig<S>, policy: PolicyKind, opts: SimOptions, seed: u64) -> Result<Self> {
        let (channel_rng, policy_rng) = replication_rngs(seed, 0);
        Self::with_rngs(cfg, policy, opts, channel_rng, policy_rng)
    }

    pub fn with_rngs(
        cfg: &SystemConfig<S>,
        policy: PolicyKind,
        opts: SimOptions,
        channel_rng: ChaCha8Rng,
        policy_rng: ChaCha8Rng,
    ) -> Result<Self> {
        cfg.validate()?;
        if opts.batches == 0 {
            return Err(Error::Config("batches must be at least 1".into()));
        }
        let l = cfg.num_iods();
        let samplers = (0..l).map(|i| cfg.channel(i).map(|c| c.sampler())).collect::<Result<_>>()?;
        let phis = (0..l).map(|i| cfg.mean_harvest(i)).collect::<Result<_>>()?;
        Ok(Self {
            cfg: cfg.clone(),
            policy,
            opts,
            samplers,
            gains: cfg.mean_gains(),
            phis,
            sinr_threshold: cfg.sinr_threshold(),
            state: SimState::empty(l),
            channel_rng,
            policy_rng,
            uplink: vec![S::zero(); l],
            downlink: vec![S::zero(); l],
        })
    }

    pub fn state(&self) -> &SimState<S> {
        &self.state
    }

    pub fn policy(&self) -> PolicyKind {
        self.policy
    }

    pub fn config(&self) -> &SystemConfig<S> {
        &self.cfg
    }

    /// Replaces the state, e.g. to start from a chosen battery configuration.
    pub fn set_state(&mut self, state: SimState<S>) -> Result<()> {
        let l = self.cfg.num_iods();
        if state.energy.len() != l || state.level.len() != l || state.wait.len() != l || state.rr_cursor >= l {
            return Err(Error::Domain("state does not match the number of IoDs".into()));
        }
        let bad_energy = state.energy.iter().any(|&e| !(e >= S::zero() && e <= self.cfg.battery_capacity));
        let bad_wait = state.wait.iter().any(|&w| w == 0 || w > self.cfg.max_wait);
        if bad_energy || bad_wait || state.level.iter().any(|&k| k > self.cfg.num_levels) {
            return Err(Error::Domain("state outside its invariants".into()));
        }
        self.state = state;
        Ok(())
    }

    /// Index of the chain state each IoD occupies: the battery level, or the
    /// joint `(level, wait)` index under the fairness-oriented policy.
    pub fn chain_state(&self, i: usize) -> usize {
        match self.policy {
            PolicyKind::FairnessOriented => {
                JointState::new(self.state.level[i], self.state.wait[i]).index(self.cfg.max_wait)
            }
            _ => self.state.level[i],
        }
    }

    pub fn num_chain_states(&self) -> usize {
        match self.policy {
            PolicyKind::FairnessOriented => (self.cfg.num_levels + 1) * self.cfg.max_wait,
            _ => self.cfg.num_levels + 1,
        }
    }

    fn has_energy(&self, i: usize) -> bool {
        self.state.energy[i] > S::zero()
    }

    fn argmax_by(&self, candidates: impl Iterator<Item = usize>, key: impl Fn(usize) -> S) -> Option<usize> {
        let mut best: Option<(usize, S)> = None;
        for i in candidates {
            let v = key(i);
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((i, v));
            }
        }
        best.map(|(i, _)| i)
    }

    fn weighted(&self, i: usize) -> S {
        weighted_energy(self.state.energy[i], self.gains[i])
    }

    /// Scheduling decision for the current state; `None` means an idle block.
    pub fn select(&mut self) -> Option<usize> {
        let l = self.cfg.num_iods();
        match self.policy {
            PolicyKind::ThroughputOriented => {
                let sel = self.argmax_by((0..l).filter(|&i| self.has_energy(i)), |i| self.weighted(i));
                debug_assert!(
                    sel.is_none_or(|s| (0..l).all(|j| !self.has_energy(j) || self.weighted(j) <= self.weighted(s)))
                );
                sel
            }
            PolicyKind::FairnessOriented => {
                let mm = self.cfg.max_wait;
                let overdue = self.argmax_by((0..l).filter(|&i| self.has_energy(i) && self.state.wait[i] >= mm), |i| {
                    self.weighted(i)
                });
                overdue.or_else(|| {
                    self.argmax_by((0..l).filter(|&i| self.has_energy(i)), |i| {
                        normalized_ratio(
                            self.state.energy[i],
                            self.state.wait[i],
                            self.phis[i],
                            self.cfg.battery_capacity,
                        )
                    })
                })
            }
            PolicyKind::RoundRobin => {
                let start = self.state.rr_cursor;
                self.state.rr_cursor = (start + 1) % l;
                if !self.opts.rr_skip_empty {
                    return self.has_energy(start).then_some(start);
                }
                let sel = (0..l).map(|o| (start + o) % l).find(|&i| self.has_energy(i))?;
                self.state.rr_cursor = (sel + 1) % l;
                Some(sel)
            }
            PolicyKind::RandomSelection => {
                let pick = self.policy_rng.random_range(0..l);
                self.has_energy(pick).then_some(pick)
            }
        }
    }

    fn draw_channels(&mut self) {
        for i in 0..self.samplers.len() {
            self.uplink[i] = self.samplers[i].sample(&mut self.channel_rng);
            self.downlink[i] = self.samplers[i].sample(&mut self.channel_rng);
        }
    }

    /// Advances one block.
    pub fn step(&mut self) -> BlockOutcome {
        self.draw_channels();
        let selected = self.select();
        let outcome = match selected {
            None => BlockOutcome::Idle,
            Some(i) => {
                let power = self.state.energy[i] / self.cfg.block_duration;
                if self.cfg.uplink_sinr(power, self.uplink[i]) >= self.sinr_threshold {
                    BlockOutcome::Delivered(i)
                } else {
                    BlockOutcome::Outage(i)
                }
            }
        };
        let (kk, mm, cap) = (self.cfg.num_levels, self.cfg.max_wait, self.cfg.battery_capacity);
        for i in 0..self.cfg.num_iods() {
            if Some(i) == selected {
                self.state.energy[i] = S::zero();
                self.state.level[i] = 0;
                self.state.wait[i] = 1;
                continue;
            }
            let harvest = self.cfg.harvested_energy(self.downlink[i]);
            match self.opts.mode {
                BatteryMode::Continuous => {
                    let e = (self.state.energy[i] + harvest).min(cap);
                    self.state.energy[i] = e;
                    self.state.level[i] = self.cfg.discretize_index(e);
                }
                BatteryMode::Discretized => {
                    let k = (self.state.level[i] + self.cfg.discretize_index(harvest)).min(kk);
                    self.state.level[i] = k;
                    self.state.energy[i] = self.cfg.level_energy(k);
                }
            }
            self.state.wait[i] = (self.state.wait[i] + 1).min(mm);
        }
        self.state.block += 1;
        outcome
    }

    /// Runs `blocks` blocks and collects the statistics.
    pub fn run_blocks(&mut self, blocks: u64) -> SimReport {
        let l = self.cfg.num_iods();
        let mut acc = Accumulator::new(self, blocks);
        for b in 0..blocks {
            for i in 0..l {
                acc.current_occupancy[i][self.chain_state(i)] += 1;
            }
            let traced = (b as usize) < self.opts.trace_blocks;
            let energy_before: Vec<f64> =
                if traced { self.state.energy.iter().map(|e| e.to_f64_lossy()).collect() } else { Vec::new() };
            let block = self.state.block;
            let outcome = self.step();
            if traced {
                acc.trace.push(TraceRow { block, selected: outcome.transmitter(), outcome, energy: energy_before });
            }
            acc.record(block, outcome);
            if acc.batch_done(b + 1) {
                acc.close_batch();
            }
        }
        acc.finish()
    }
}

/// Channel and policy streams of replication `r`: streams `2r` and `2r + 1`
/// of `ChaCha8Rng::seed_from_u64(master)`.
pub fn replication_rngs(master: u64, r: u64) -> (ChaCha8Rng, ChaCha8Rng) {
    let mut channel = ChaCha8Rng::seed_from_u64(master);
    channel.set_stream(2 * r);
    let mut policy = ChaCha8Rng::seed_from_u64(master);
    policy.set_stream(2 * r + 1);
    (channel, policy)
}

/// Running sums of a per-batch rate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BatchStat {
    pub batches: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl BatchStat {
    fn push(&mut self, x: f64) {
        self.batches += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    fn merge(&mut self, other: &BatchStat) {
        self.batches += other.batches;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    /// Standard error of the mean of the batch rates.
    pub fn std_error(&self) -> f64 {
        if self.batches < 2 {
            return f64::NAN;
        }
        let n = self.batches as f64;
        let mean = self.sum / n;
        let var = ((self.sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    }
}

struct Accumulator {
    blocks: u64,
    batches: u64,
    batch_start: u64,
    next_batch: u64,
    report: SimReport,
    current_occupancy: Vec<Vec<u64>>,
    current_outage: u64,
    current_access: Vec<u64>,
    last_tx: Vec<Option<u64>>,
    trace: Vec<TraceRow>,
}

impl Accumulator {
    fn new<S: Scalar>(sim: &Simulator<S>, blocks: u64) -> Self {
        let l = sim.cfg.num_iods();
        let n = sim.num_chain_states();
        let batches = (sim.opts.batches as u64).clamp(1, blocks.max(1));
        let mut report = SimReport::empty(sim.policy, sim.opts.mode, l, n);
        report.rate_req = sim.cfg.rate_req.to_f64_lossy();
        report.block_duration = sim.cfg.block_duration.to_f64_lossy();
        Self {
            blocks,
            batches,
            batch_start: 0,
            next_batch: 1,
            report,
            current_occupancy: vec![vec![0; n]; l],
            current_outage: 0,
            current_access: vec![0; l],
            last_tx: vec![None; l],
            trace: Vec::new(),
        }
    }

    fn record(&mut self, block: u64, outcome: BlockOutcome) {
        let r = &mut self.report;
        r.blocks_run += 1;
        match outcome {
            BlockOutcome::Idle => r.idle_blocks += 1,
            BlockOutcome::Delivered(i) | BlockOutcome::Outage(i) => {
                r.transmissions[i] += 1;
                self.current_access[i] += 1;
                if matches!(outcome, BlockOutcome::Delivered(_)) {
                    r.successes[i] += 1;
                }
                if let Some(prev) = self.last_tx[i] {
                    let gap = (block - prev - 1) as f64;
                    r.gap_count[i] += 1;
                    r.gap_sum[i] += gap;
                    r.gap_sum_sq[i] += gap * gap;
                }
                self.last_tx[i] = Some(block);
            }
        }
        if outcome.is_outage() {
            r.outage_blocks += 1;
            self.current_outage += 1;
        }
    }

    fn batch_done(&self, done: u64) -> bool {
        done == self.next_batch * self.blocks / self.batches
    }

    fn close_batch(&mut self) {
        let end = self.next_batch * self.blocks / self.batches;
        let len = (end - self.batch_start) as f64;
        let r = &mut self.report;
        r.outage_batches.push(self.current_outage as f64 / len);
        for (i, cur) in self.current_access.iter_mut().enumerate() {
            r.access_batches[i].push(*cur as f64 / len);
            *cur = 0;
        }
        for (i, row) in self.current_occupancy.iter_mut().enumerate() {
            for (s, c) in row.iter_mut().enumerate() {
                r.occupancy[i][s] += *c;
                let f = *c as f64 / len;
                r.occupancy_batch_sum[i][s] += f;
                r.occupancy_batch_sum_sq[i][s] += f * f;
                *c = 0;
            }
        }
        r.occupancy_batches += 1;
        self.current_outage = 0;
        self.batch_start = end;
        self.next_batch += 1;
    }

    fn finish(mut self) -> SimReport {
        if self.batch_start < self.blocks {
            self.close_batch();
        }
        self.report.trace = self.trace;
        self.report
    }
}

/// Counts and batch statistics of one or more replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub policy: PolicyKind,
    pub mode: BatteryMode,
    pub rate_req: f64,
    pub block_duration: f64,
    pub replications: u64,
    pub blocks_run: u64,
    pub idle_blocks: u64,
    pub outage_blocks: u64,
    pub transmissions: Vec<u64>,
    pub successes: Vec<u64>,
    pub gap_count: Vec<u64>,
    pub gap_sum: Vec<f64>,
    pub gap_sum_sq: Vec<f64>,
    /// Per IoD, blocks spent in each chain state (measured at block start).
    pub occupancy: Vec<Vec<u64>>,
    pub occupancy_batches: u64,
    pub occupancy_batch_sum: Vec<Vec<f64>>,
    pub occupancy_batch_sum_sq: Vec<Vec<f64>>,
    pub outage_batches: BatchStat,
    pub access_batches: Vec<BatchStat>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub trace: Vec<TraceRow>,
}

fn rate(count: u64, n: u64) -> f64 {
    if n == 0 {
        f64::NAN
    } else {
        count as f64 / n as f64
    }
}

/// `√(p(1−p)/n)`.
pub fn binomial_std_error(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

impl SimReport {
    fn empty(policy: PolicyKind, mode: BatteryMode, l: usize, states: usize) -> Self {
        Self {
            policy,
            mode,
            rate_req: f64::NAN,
            block_duration: f64::NAN,
            replications: 1,
            blocks_run: 0,
            idle_blocks: 0,
            outage_blocks: 0,
            transmissions: vec![0; l],
            successes: vec![0; l],
            gap_count: vec![0; l],
            gap_sum: vec![0.0; l],
            gap_sum_sq: vec![0.0; l],
            occupancy: vec![vec![0; states]; l],
            occupancy_batches: 0,
            occupancy_batch_sum: vec![vec![0.0; states]; l],
            occupancy_batch_sum_sq: vec![vec![0.0; states]; l],
            outage_batches: BatchStat::default(),
            access_batches: vec![BatchStat::default(); l],
            trace: Vec::new(),
        }
    }

    pub fn num_iods(&self) -> usize {
        self.transmissions.len()
    }

    /// Adds another replication of the same configuration.
    pub fn merge(&mut self, other: &SimReport) -> Result<()> {
        if self.policy != other.policy
            || self.mode != other.mode
            || self.num_iods() != other.num_iods()
            || self.occupancy.first().map(Vec::len) != other.occupancy.first().map(Vec::len)
        {
            return Err(Error::Domain("cannot merge reports of different experiments".into()));
        }
        fn add<T: Copy + std::ops::AddAssign>(a: &mut [T], b: &[T]) {
            a.iter_mut().zip(b).for_each(|(x, &y)| *x += y);
        }
        self.replications += other.replications;
        self.blocks_run += other.blocks_run;
        self.idle_blocks += other.idle_blocks;
        self.outage_blocks += other.outage_blocks;
        add(&mut self.transmissions, &other.transmissions);
        add(&mut self.successes, &other.successes);
        add(&mut self.gap_count, &other.gap_count);
        add(&mut self.gap_sum, &other.gap_sum);
        add(&mut self.gap_sum_sq, &other.gap_sum_sq);
        for i in 0..self.num_iods() {
            add(&mut self.occupancy[i], &other.occupancy[i]);
            add(&mut self.occupancy_batch_sum[i], &other.occupancy_batch_sum[i]);
            add(&mut self.occupancy_batch_sum_sq[i], &other.occupancy_batch_sum_sq[i]);
            self.access_batches[i].merge(&other.access_batches[i]);
        }
        self.occupancy_batches += other.occupancy_batches;
        self.outage_batches.merge(&other.outage_batches);
        self.trace.extend(other.trace.iter().cloned());
        Ok(())
    }

    pub fn outage_rate(&self) -> f64 {
        rate(self.outage_blocks, self.blocks_run)
    }

    pub fn idle_rate(&self) -> f64 {
        rate(self.idle_blocks, self.blocks_run)
    }

    /// Share of blocks in which IoD `i` transmitted and failed.
    pub fn failure_rate(&self, i: usize) -> f64 {
        rate(self.transmissions[i] - self.successes[i], self.blocks_run)
    }

    pub fn outage_se(&self) -> f64 {
        binomial_std_error(self.outage_rate(), self.blocks_run)
    }

    /// Batch-means standard error of the outage rate; accounts for the
    /// correlation between consecutive blocks.
    pub fn outage_se_batch(&self) -> f64 {
        self.outage_batches.std_error()
    }

    pub fn throughput(&self) -> f64 {
        self.rate_req * (1.0 - self.outage_rate()) * self.block_duration
    }

    pub fn throughput_se(&self) -> f64 {
        self.rate_req * self.block_duration * self.outage_se()
    }

    pub fn throughput_se_batch(&self) -> f64 {
        self.rate_req * self.block_duration * self.outage_se_batch()
    }

    pub fn access_rates(&self) -> Vec<f64> {
        self.transmissions.iter().map(|&c| rate(c, self.blocks_run)).collect()
    }

    pub fn access_se(&self) -> Vec<f64> {
        self.access_rates().iter().map(|&p| binomial_std_error(p, self.blocks_run)).collect()
    }

    pub fn access_se_batch(&self) -> Vec<f64> {
        self.access_batches.iter().map(BatchStat::std_error).collect()
    }

    pub fn success_rates(&self) -> Vec<f64> {
        self.successes.iter().map(|&c| rate(c, self.blocks_run)).collect()
    }

    /// Mean number of blocks between consecutive transmissions of each IoD.
    pub fn mean_gaps(&self) -> Vec<f64> {
        (0..self.num_iods())
            .map(|i| if self.gap_count[i] == 0 { f64::INFINITY } else { self.gap_sum[i] / self.gap_count[i] as f64 })
            .collect()
    }

    pub fn gap_se(&self) -> Vec<f64> {
        (0..self.num_iods())
            .map(|i| {
                let n = self.gap_count[i] as f64;
                if n < 2.0 {
                    return f64::NAN;
                }
                let mean = self.gap_sum[i] / n;
                let var = ((self.gap_sum_sq[i] - n * mean * mean) / (n - 1.0)).max(0.0);
                (var / n).sqrt()
            })
            .collect()
    }

    /// Gap implied by the access rate, `(1 − ρ)/ρ`.
    pub fn gap_from_access(&self) -> Vec<f64> {
        self.access_rates().into_iter().map(charging_rounds).collect()
    }

    pub fn occupancy_freq(&self, i: usize) -> Vec<f64> {
        self.occupancy[i].iter().map(|&c| rate(c, self.blocks_run)).collect()
    }

    /// Batch-means standard error of every occupancy frequency of IoD `i`.
    pub fn occupancy_se(&self, i: usize) -> Vec<f64> {
        self.occupancy_batch_sum[i]
            .iter()
            .zip(&self.occupancy_batch_sum_sq[i])
            .map(|(&sum, &sum_sq)| BatchStat { batches: self.occupancy_batches, sum, sum_sq }.std_error())
            .collect()
    }

    /// Occupancy aggregated to battery levels, given the number of waiting
    /// slots per level (1 for level-indexed policies).
    pub fn level_occupancy(&self, i: usize, max_wait: usize) -> Vec<f64> {
        self.occupancy_freq(i).chunks(max_wait).map(|c| c.iter().sum()).collect()
    }

    pub fn fairness(&self) -> f64 {
        fairness_index(&self.access_rates())
    }

    pub fn fairness_raw(&self) -> f64 {
        fairness_index_raw(&self.access_rates())
    }

    /// Column names of [`SimReport::csv_fields`]; per-IoD columns carry the
    /// 1-based IoD index.
    pub fn csv_header(num_iods: usize) -> Vec<String> {
        let mut cols: Vec<String> = [
            "policy",
            "mode",
            "replications",
            "blocks",
            "outage_rate",
            "outage_se",
            "outage_se_batch",
            "idle_rate",
            "throughput",
            "throughput_se",
            "throughput_se_batch",
            "fairness",
            "fairness_raw",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        for prefix in ["tx", "success", "access", "access_se", "gap_mean", "gap_se"] {
            cols.extend((1..=num_iods).map(|i| format!("{prefix}_{i}")));
        }
        cols
    }

    pub fn csv_fields(&self) -> Vec<String> {
        let num = |x: f64| {
            if x.is_infinite() {
                "inf".to_string()
            } else {
                format!("{x:.12e}")
            }
        };
        let mut f = vec![
            self.policy.to_string(),
            self.mode.to_string(),
            self.replications.to_string(),
            self.blocks_run.to_string(),
            num(self.outage_rate()),
            num(self.outage_se()),
            num(self.outage_se_batch()),
            num(self.idle_rate()),
            num(self.throughput()),
            num(self.throughput_se()),
            num(self.throughput_se_batch()),
            num(self.fairness()),
            num(self.fairness_raw()),
        ];
        f.extend(self.transmissions.iter().map(u64::to_string));
        f.extend(self.successes.iter().map(u64::to_string));
        for v in [self.access_rates(), self.access_se(), self.mean_gaps(), self.gap_se()] {
            f.extend(v.into_iter().map(num));
        }
        f
    }

    /// Long-format occupancy table: `iod,state,level,wait,count,freq,se`.
    pub fn occupancy_csv(&self, max_wait: usize) -> String {
        let mut out = String::from("iod,state,level,wait,count,freq,se\n");
        for i in 0..self.num_iods() {
            let se = self.occupancy_se(i);
            for (s, &c) in self.occupancy[i].iter().enumerate() {
                let (level, wait) = if self.policy == PolicyKind::FairnessOriented {
                    let js = JointState::from_index(s, max_wait);
                    (js.level, js.wait)
                } else {
                    (s, 0)
                };
                out.push_str(&format!(
                    "{},{s},{level},{wait},{c},{:.12e},{:.12e}\n",
                    i + 1,
                    rate(c, self.blocks_run),
                    se[s]
                ));
            }
        }
        out
    }
}

/// Runs one replication from empty batteries.
pub fn run<S: Scalar>(
    cfg: &SystemConfig<S>,
    policy: PolicyKind,
    blocks: u64,
    mode: BatteryMode,
    seed: u64,
) -> Result<SimReport> {
    run_with(cfg, policy, blocks, SimOptions::with_mode(mode), seed)
}

pub fn run_with<S: Scalar>(
    cfg: &SystemConfig<S>,
    policy: PolicyKind,
    blocks: u64,
    opts: SimOptions,
    seed: u64,
) -> Result<SimReport> {
    if blocks == 0 {
        return Err(Error::Config("blocks must be at least 1".into()));
    }
    Ok(Simulator::new(cfg, policy, opts, seed)?.run_blocks(blocks))
}

/// Runs `replications` independent replications of `blocks` blocks each on up
/// to `workers` threads and merges them in replication order. Replication `r`
/// draws from the streams given by [`replication_rngs`].
pub fn run_replications<S: Scalar>(
    cfg: &SystemConfig<S>,
    policy: PolicyKind,
    blocks: u64,
    replications: u64,
    opts: SimOptions,
    seed: u64,
    workers: usize,
) -> Result<SimReport> {
    if blocks == 0 || replications == 0 {
        return Err(Error::Config("blocks and replications must be at least 1".into()));
    }
    let workers = workers.clamp(1, replications as usize);
    let one = |r: u64| -> Result<SimReport> {
        let (c, p) = replication_rngs(seed, r);
        Ok(Simulator::with_rngs(cfg, policy, opts, c, p)?.run_blocks(blocks))
    };
    let mut reports: Vec<Option<Result<SimReport>>> = (0..replications).map(|_| None).collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let one = &one;
                scope.spawn(move || (w as u64..replications).step_by(workers).map(|r| (r, one(r))).collect::<Vec<_>>())
            })
            .collect();
        for h in handles {
            for (r, rep) in h.join().expect("simulation worker panicked") {
                reports[r as usize] = Some(rep);
            }
        }
    });
    let mut it = reports.into_iter().map(|r| r.expect("every replication ran"));
    let mut merged = it.next().expect("at least one replication")?;
    for rep in it {
        merged.merge(&rep?)?;
    }
    Ok(merged)
}

/// Occupancy counts of a single IoD's chain driven by a frozen selection
/// profile instead of competing IoDs: each block a non-empty IoD in state `s`
/// transmits with probability `upsilon[s]`, otherwise it harvests. Returns one
/// count vector per batch of `blocks / batches` blocks, after `burn_in`
/// unrecorded blocks.
#[allow(clippy::too_many_arguments)]
pub fn run_frozen_profile<S: Scalar>(
    cfg: &SystemConfig<S>,
    policy: PolicyKind,
    i: usize,
    upsilon: &[S],
    burn_in: u64,
    blocks: u64,
    batches: u64,
    seed: u64,
) -> Result<Vec<Vec<u64>>> {
    cfg.validate()?;
    let sampler = cfg.channel(i)?.sampler();
    let (kk, mm) = (cfg.num_levels, cfg.max_wait);
    let fair = match policy {
        PolicyKind::ThroughputOriented => false,
        PolicyKind::FairnessOriented => true,
        other => return Err(Error::NotAnalyzable(other.to_string())),
    };
    let states = if fair { (kk + 1) * mm } else { kk + 1 };
    if upsilon.len() != states {
        return Err(Error::Domain(format!("profile row has {} entries, expected {states}", upsilon.len())));
    }
    if batches == 0 || blocks < batches {
        return Err(Error::Config("need at least one block per batch".into()));
    }
    let (mut rng, mut coin) = replication_rngs(seed, 0);
    let (mut level, mut wait) = (0usize, 1usize);
    let per_batch = blocks / batches;
    let mut out = vec![vec![0u64; states]; batches as usize];
    for t in 0..burn_in + per_batch * batches {
        let s = if fair { JointState::new(level, wait).index(mm) } else { level };
        if t >= burn_in {
            out[((t - burn_in) / per_batch) as usize][s] += 1;
        }
        let gain = sampler.sample(&mut rng);
        if level > 0 && S::sample_unit(&mut coin) < upsilon[s] {
            level = 0;
            wait = 1;
        } else {
            level = (level + cfg.discretize_index(cfg.harvested_energy(gain))).min(kk);
            wait = (wait + 1).min(mm);
        }
    }
    Ok(out)
}
