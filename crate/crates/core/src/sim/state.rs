//! The live ticket pool and its slot transition.

use std::collections::HashMap;
use std::sync::Arc;

use rand::Rng;

use crate::market::MultiBlockSpec;
use crate::model::EconomyParams;
use crate::{Error, Result};

pub type TicketId = u64;

/// Index into a pool's holder-label table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HolderId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ticket {
    pub id: TicketId,
    pub holder: HolderId,
    pub minted_at: u64,
}

/// Label used for tickets bought on the open market.
pub const MARKET: &str = "market";

/// Owner of each initial ticket; ticket `i` goes to `owners[i]`.
#[derive(Debug, Clone)]
pub struct HolderAssignment {
    labels: Vec<String>,
    owners: Vec<HolderId>,
}

impl HolderAssignment {
    /// Every ticket to one holder.
    pub fn uniform(label: &str, n: u64) -> Self {
        Self {
            labels: vec![label.to_owned()],
            owners: vec![HolderId(0); n as usize],
        }
    }

    /// Tickets `0..k` to `designated`, the rest to `rest`.
    pub fn split(designated: &str, k: u64, rest: &str, n: u64) -> Self {
        let k = k.min(n) as usize;
        let mut owners = vec![HolderId(0); k];
        owners.resize(n as usize, HolderId(1));
        Self {
            labels: vec![designated.to_owned(), rest.to_owned()],
            owners,
        }
    }

    /// One label per ticket, in ticket order.
    pub fn from_labels<I, S>(labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut table = Vec::new();
        let mut index: HashMap<String, HolderId> = HashMap::new();
        let owners = labels
            .into_iter()
            .map(|l| {
                let l = l.into();
                *index.entry(l.clone()).or_insert_with(|| {
                    table.push(l);
                    HolderId(table.len() as u32 - 1)
                })
            })
            .collect();
        Self { labels: table, owners }
    }

    pub fn len(&self) -> usize {
        self.owners.len()
    }

    pub fn is_empty(&self) -> bool {
        self.owners.is_empty()
    }
}

/// Who receives the ticket minted after each draw.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MintRule {
    /// Cycle through the listed holders.
    RoundRobin(Vec<String>),
    /// The holder of the burned ticket buys its replacement, so every
    /// holder's share of the pool stays fixed.
    ReplaceInKind,
}

impl Default for MintRule {
    fn default() -> Self {
        MintRule::RoundRobin(vec![MARKET.to_owned()])
    }
}

#[derive(Debug, Clone)]
enum Mint {
    RoundRobin(Vec<HolderId>),
    ReplaceInKind,
}

#[derive(Debug, Clone)]
struct Rules {
    labels: Arc<[String]>,
    mint: Mint,
    multiblock: Option<MultiBlockSpec>,
}

/// What happened in one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotOutcome {
    pub slot: u64,
    pub winner: Ticket,
    /// Realized reward, after any multi-block bonus.
    pub reward: f64,
    pub minted: Ticket,
    pub streak: u64,
}

/// The outstanding tickets plus the bookkeeping needed to run the lottery.
///
/// The pool always holds exactly `n` tickets. Drawing replaces the winner in
/// place, so the fresh ticket only takes part from the following slot on.
#[derive(Debug, Clone)]
pub struct SlotState {
    slot: u64,
    pool: Vec<Ticket>,
    next_id: TicketId,
    last_winner: Option<HolderId>,
    streak: u64,
    cursor: usize,
    rules: Arc<Rules>,
}

/// Mints tickets `0..n` per the assignment, at slot 0.
pub fn init_state(params: &EconomyParams, holders: &HolderAssignment) -> Result<SlotState> {
    if holders.len() as u64 != params.n() {
        return Err(Error::AssignmentSize {
            expected: params.n(),
            got: holders.len() as u64,
        });
    }
    let pool = holders
        .owners
        .iter()
        .enumerate()
        .map(|(i, &holder)| Ticket {
            id: i as TicketId,
            holder,
            minted_at: 0,
        })
        .collect();
    let mut state = SlotState {
        slot: 0,
        pool,
        next_id: params.n(),
        last_winner: None,
        streak: 0,
        cursor: 0,
        rules: Arc::new(Rules {
            labels: holders.labels.clone().into(),
            mint: Mint::ReplaceInKind,
            multiblock: None,
        }),
    };
    state.set_mint_rule(&MintRule::default());
    Ok(state)
}

/// Advances `state` by one slot. See [`SlotState::step`].
pub fn step<R: Rng + ?Sized>(state: &mut SlotState, params: &EconomyParams, rng: &mut R) -> SlotOutcome {
    state.step(params, rng)
}

impl SlotState {
    pub fn with_mint_rule(mut self, rule: &MintRule) -> Self {
        self.set_mint_rule(rule);
        self
    }

    pub fn with_multiblock(mut self, spec: Option<MultiBlockSpec>) -> Self {
        Arc::make_mut(&mut self.rules).multiblock = spec;
        self
    }

    fn set_mint_rule(&mut self, rule: &MintRule) {
        let rules = Arc::make_mut(&mut self.rules);
        rules.mint = match rule {
            MintRule::ReplaceInKind => Mint::ReplaceInKind,
            MintRule::RoundRobin(names) => {
                let mut labels: Vec<String> = rules.labels.to_vec();
                let ids = names
                    .iter()
                    .map(|name| match labels.iter().position(|l| l == name) {
                        Some(i) => HolderId(i as u32),
                        None => {
                            labels.push(name.clone());
                            HolderId(labels.len() as u32 - 1)
                        }
                    })
                    .collect::<Vec<_>>();
                rules.labels = labels.into();
                if ids.is_empty() {
                    Mint::ReplaceInKind
                } else {
                    Mint::RoundRobin(ids)
                }
            }
        };
        self.cursor = 0;
    }

    /// Draws the winner uniformly over the pool, then the slot's reward.
    pub fn step<R: Rng + ?Sized>(&mut self, params: &EconomyParams, rng: &mut R) -> SlotOutcome {
        let index = rng.random_range(0..self.pool.len());
        let raw = params.reward().sample(rng);
        self.apply_draw(index, raw)
    }

    /// Applies a draw that selected pool position `index` with unadjusted reward `raw_reward`.
    pub fn apply_draw(&mut self, index: usize, raw_reward: f64) -> SlotOutcome {
        self.slot += 1;
        let winner = self.pool[index];
        if self.last_winner == Some(winner.holder) {
            self.streak += 1;
        } else {
            self.last_winner = Some(winner.holder);
            self.streak = 1;
        }
        let reward = match &self.rules.multiblock {
            Some(spec) => spec.realize(raw_reward, self.streak),
            None => raw_reward,
        };
        let holder = match &self.rules.mint {
            Mint::ReplaceInKind => winner.holder,
            Mint::RoundRobin(ids) => {
                let h = ids[self.cursor];
                self.cursor += 1;
                if self.cursor == ids.len() {
                    self.cursor = 0;
                }
                h
            }
        };
        let minted = Ticket {
            id: self.next_id,
            holder,
            minted_at: self.slot,
        };
        self.next_id += 1;
        self.pool[index] = minted;
        SlotOutcome {
            slot: self.slot,
            winner,
            reward,
            minted,
            streak: self.streak,
        }
    }

    pub fn slot(&self) -> u64 {
        self.slot
    }

    pub fn pool(&self) -> &[Ticket] {
        &self.pool
    }

    pub fn next_id(&self) -> TicketId {
        self.next_id
    }

    pub fn streak(&self) -> u64 {
        self.streak
    }

    pub fn last_winner_holder(&self) -> Option<&str> {
        self.last_winner.map(|h| self.holder_label(h))
    }

    pub fn holder_label(&self, id: HolderId) -> &str {
        &self.rules.labels[id.0 as usize]
    }

    pub fn holder_id(&self, label: &str) -> Option<HolderId> {
        self.rules.labels.iter().position(|l| l == label).map(|i| HolderId(i as u32))
    }

    pub fn holder_labels(&self) -> &Arc<[String]> {
        &self.rules.labels
    }

    pub fn multiblock(&self) -> Option<&MultiBlockSpec> {
        self.rules.multiblock.as_ref()
    }

    /// Number of pool tickets held by `holder`.
    pub fn holding(&self, holder: HolderId) -> usize {
        self.pool.iter().filter(|t| t.holder == holder).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RewardModel;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;

    fn params(n: u64) -> EconomyParams {
        EconomyParams::new(n, 0.01, RewardModel::constant(1.0).unwrap()).unwrap()
    }

    fn ids(state: &SlotState) -> Vec<TicketId> {
        state.pool().iter().map(|t| t.id).collect()
    }

    #[test]
    fn init_examples() {
        let s = init_state(&params(3), &HolderAssignment::uniform("A", 3)).unwrap();
        assert_eq!(ids(&s), vec![0, 1, 2]);
        assert_eq!(s.next_id(), 3);
        assert_eq!(s.slot(), 0);
        assert_eq!(s.streak(), 0);
        assert!(s.pool().iter().all(|t| s.holder_label(t.holder) == "A"));

        let s = init_state(&params(1), &HolderAssignment::uniform("A", 1)).unwrap();
        assert_eq!(ids(&s), vec![0]);

        assert!(EconomyParams::new(0, 0.01, RewardModel::constant(1.0).unwrap()).is_err());
        let err = init_state(&params(3), &HolderAssignment::uniform("A", 2)).unwrap_err();
        assert!(matches!(err, Error::AssignmentSize { expected: 3, got: 2 }));
    }

    #[test]
    fn forced_draw_burns_and_mints() {
        let mut s = init_state(&params(3), &HolderAssignment::uniform("A", 3)).unwrap();
        let out = s.apply_draw(2, 1.0);
        assert_eq!(out.winner.id, 2);
        assert_eq!(out.minted.id, 3);
        assert_eq!(out.minted.minted_at, 1);
        assert_eq!(ids(&s), vec![0, 1, 3]);
        assert_eq!(s.slot(), 1);
        assert_eq!(s.holder_label(out.minted.holder), MARKET);
    }

    #[test]
    fn single_ticket_always_wins() {
        let p = params(1);
        let mut s = init_state(&p, &HolderAssignment::uniform("A", 1)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for t in 0..50u64 {
            let out = s.step(&p, &mut rng);
            assert_eq!(out.winner.id, t);
            assert_eq!(s.pool().len(), 1);
        }
    }

    #[test]
    fn streak_bookkeeping() {
        let a = HolderAssignment::from_labels(["w", "w", "m"]);
        let mut s = init_state(&params(3), &a).unwrap().with_mint_rule(&MintRule::ReplaceInKind);
        assert_eq!(s.apply_draw(0, 1.0).streak, 1);
        assert_eq!(s.apply_draw(1, 1.0).streak, 2);
        assert_eq!(s.last_winner_holder(), Some("w"));
        assert_eq!(s.apply_draw(2, 1.0).streak, 1);
        assert_eq!(s.last_winner_holder(), Some("m"));
        assert_eq!(s.apply_draw(0, 1.0).streak, 1);
        // replacement kept the holder's share
        assert_eq!(s.holding(s.holder_id("w").unwrap()), 2);
    }

    #[test]
    fn round_robin_minting() {
        let rule = MintRule::RoundRobin(vec!["x".into(), "y".into()]);
        let mut s = init_state(&params(2), &HolderAssignment::uniform("A", 2))
            .unwrap()
            .with_mint_rule(&rule);
        let labels: Vec<String> = (0..4)
            .map(|i| {
                let out = s.apply_draw(i % 2, 0.0);
                s.holder_label(out.minted.holder).to_owned()
            })
            .collect();
        assert_eq!(labels, ["x", "y", "x", "y"]);
    }

    #[test]
    fn pool_conserved_and_burned_ids_never_return() {
        let p = params(7);
        let mut s = init_state(&p, &HolderAssignment::uniform("A", 7)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut burned = HashSet::new();
        for _ in 0..20_000 {
            let out = s.step(&p, &mut rng);
            assert_eq!(s.pool().len(), 7);
            assert!(burned.insert(out.winner.id));
            assert!(s.pool().iter().all(|t| !burned.contains(&t.id)));
        }
    }

    #[test]
    fn live_ticket_win_frequency_is_one_over_n() {
        // every pool position is hit with probability 1/n per slot
        let p = params(10);
        let mut s = init_state(&p, &HolderAssignment::uniform("A", 10)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        let steps = 1_000_000u64;
        let mut wins = [0u64; 10];
        for _ in 0..steps {
            let before: Vec<TicketId> = ids(&s);
            let out = s.step(&p, &mut rng);
            let pos = before.iter().position(|&id| id == out.winner.id).unwrap();
            wins[pos] += 1;
        }
        let band = 3.0 * (0.1f64 * 0.9 / steps as f64).sqrt();
        let mut chi2 = 0.0;
        for w in wins {
            let f = w as f64 / steps as f64;
            assert!((f - 0.1).abs() < band, "{f}");
            chi2 += (w as f64 - steps as f64 / 10.0).powi(2) / (steps as f64 / 10.0);
        }
        // chi-square 9 dof, 0.999 quantile
        assert!(chi2 < 27.877, "{chi2}");
    }
}
