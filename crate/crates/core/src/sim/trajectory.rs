use std::sync::{Arc, OnceLock};

use rand::Rng;

use super::state::{SlotState, TicketId};
use crate::model::discount::growth;
use crate::model::{present_value, EconomyParams};
use crate::{Error, Result};

/// Probability mass the default horizon may leave untracked.
pub const HORIZON_TAIL: f64 = 1e-9;

/// Discount mass the reward-stream horizon may drop. Reward streams with a
/// constant reward have zero spread, so this sits at the edge of double
/// precision rather than at [`HORIZON_TAIL`].
pub const STREAM_TAIL: f64 = 1e-15;

/// Smallest `t` with `tracked * (1 - 1/n)^t < HORIZON_TAIL`, i.e. the chance
/// that any of `tracked` tickets is still undrawn after `t` slots is below
/// the tail tolerance. About `20.7 n` slots for a single ticket.
pub fn default_horizon(n: u64, tracked: u64) -> u64 {
    if n <= 1 {
        return 1;
    }
    let target = (HORIZON_TAIL / tracked.max(1) as f64).ln();
    let per_slot = (-1.0 / n as f64).ln_1p();
    let mut t = (target / per_slot).ceil().max(1.0) as u64;
    while tracked.max(1) as f64 * (1.0 - 1.0 / n as f64).powf(t as f64) >= HORIZON_TAIL {
        t += 1;
    }
    t
}

/// Smallest `t` with `(1 + d)^-t < tolerance`; `None` when `d = 0`.
pub fn discount_horizon(d: f64, tolerance: f64) -> Option<u64> {
    if d > 0.0 {
        Some((-(tolerance.ln()) / d.ln_1p()).ceil().max(1.0) as u64)
    } else {
        None
    }
}

/// Starting pool, tracked tickets and stopping rule for one trajectory.
#[derive(Debug, Clone)]
pub struct TrajectorySetup {
    initial: SlotState,
    tracked: Vec<TicketId>,
    positions: Vec<Option<u32>>,
    horizon: u64,
    full_horizon: bool,
    growth: OnceLock<(u64, Arc<[f64]>)>,
}

/// Longest precomputed `(1 + d)^t` table; later slots compute it directly.
const GROWTH_TABLE_MAX: u64 = 1 << 16;

impl TrajectorySetup {
    /// Runs until every tracked ticket has won, or `horizon` slots.
    /// Tracked tickets must be distinct members of the initial pool.
    pub fn new(initial: SlotState, tracked: Vec<TicketId>, horizon: u64) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::invalid("horizon", "must be at least one slot"));
        }
        let n = initial.pool().len();
        let mut positions = vec![None; n];
        for (i, &id) in tracked.iter().enumerate() {
            let slot = initial
                .pool()
                .iter()
                .position(|t| t.id == id)
                .ok_or_else(|| Error::invalid("tracked", format!("ticket {id} is not in the pool")))?;
            if positions[slot].replace(i as u32).is_some() {
                return Err(Error::invalid("tracked", format!("ticket {id} listed twice")));
            }
        }
        Ok(Self {
            initial,
            tracked,
            positions,
            horizon,
            full_horizon: false,
            growth: OnceLock::new(),
        })
    }

    /// Runs all `horizon` slots regardless of tracked wins.
    pub fn full_horizon(mut self) -> Self {
        self.full_horizon = true;
        self
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn tracked(&self) -> &[TicketId] {
        &self.tracked
    }

    pub fn initial(&self) -> &SlotState {
        &self.initial
    }

    /// `(1 + d)^t` for `t = 0..=min(horizon, GROWTH_TABLE_MAX)`, built once
    /// and shared by every trajectory. Entries equal [`growth`] bit for bit.
    fn growth_table(&self, d: f64) -> Option<&[f64]> {
        let (key, table) = self.growth.get_or_init(|| {
            let len = self.horizon.min(GROWTH_TABLE_MAX) + 1;
            (d.to_bits(), (0..len).map(|t| growth(t, d)).collect())
        });
        (*key == d.to_bits()).then_some(&**table)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackedOutcome {
    pub id: TicketId,
    pub win_slot: Option<u64>,
    /// Realized reward discounted to slot 0; zero if the ticket never won.
    pub payoff: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub tracked: Vec<TrackedOutcome>,
    holder_totals: Vec<f64>,
    labels: Arc<[String]>,
    pub slots_simulated: u64,
    /// Some tracked ticket was still undrawn at the horizon.
    pub truncated: bool,
}

impl TrajectoryRecord {
    /// Win slot of the first tracked ticket.
    pub fn tracked_ticket_win_slot(&self) -> Option<u64> {
        self.tracked.first().and_then(|t| t.win_slot)
    }

    /// Summed discounted payoff of the tracked tickets.
    pub fn discounted_payoff(&self) -> f64 {
        self.tracked.iter().map(|t| t.payoff).sum()
    }

    pub fn holder_total(&self, label: &str) -> f64 {
        self.labels
            .iter()
            .position(|l| l == label)
            .map_or(0.0, |i| self.holder_totals[i])
    }

    /// Discounted rewards collected by each holder over the simulated slots.
    pub fn holder_totals(&self) -> impl Iterator<Item = (&str, f64)> {
        self.labels.iter().map(String::as_str).zip(self.holder_totals.iter().copied())
    }

    pub fn total_discounted_rewards(&self) -> f64 {
        self.holder_totals.iter().sum()
    }
}

pub fn run_trajectory<R: Rng + ?Sized>(params: &EconomyParams, setup: &TrajectorySetup, rng: &mut R) -> TrajectoryRecord {
    let mut state = setup.initial.clone();
    let n = state.pool().len() as u64;
    let d = params.d();
    let mut tracked: Vec<TrackedOutcome> = setup
        .tracked
        .iter()
        .map(|&id| TrackedOutcome {
            id,
            win_slot: None,
            payoff: 0.0,
        })
        .collect();
    let mut outstanding = tracked.len();
    let mut totals = vec![0.0; state.holder_labels().len()];
    let table = setup.growth_table(d).unwrap_or(&[]);

    while state.slot() < setup.horizon && (setup.full_horizon || outstanding > 0) {
        let out = state.step(params, rng);
        let pv = match table.get(out.slot as usize) {
            Some(g) => out.reward / g,
            None => present_value(out.reward, out.slot, d),
        };
        totals[out.winner.holder.0 as usize] += pv;
        if out.winner.id < n {
            if let Some(i) = setup.positions[out.winner.id as usize] {
                let t = &mut tracked[i as usize];
                t.win_slot = Some(out.slot);
                t.payoff = pv;
                outstanding -= 1;
            }
        }
    }

    TrajectoryRecord {
        tracked,
        holder_totals: totals,
        labels: state.holder_labels().clone(),
        slots_simulated: state.slot(),
        truncated: outstanding > 0,
    }
}
