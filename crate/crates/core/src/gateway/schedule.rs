//! Merges trace events, simulated blocks, policy updates and clock ticks into
//! one totally ordered stream.

use std::collections::VecDeque;

use super::engine::ChainEvent;
use crate::proxy::SimChain;

/// Events at the same instant are applied quotes first, then blocks, policy
/// updates and ticks.
fn priority(event: &ChainEvent) -> u8 {
    match event {
        ChainEvent::QuoteUpdate { .. } => 0,
        ChainEvent::NewBlock(_) => 1,
        ChainEvent::PolicyUpdate(_) => 2,
        ChainEvent::Approval { .. } => 3,
        ChainEvent::Tick => 4,
    }
}

#[derive(Debug)]
pub struct Schedule {
    fixed: VecDeque<(i64, ChainEvent)>,
    sims: Vec<SimChain>,
    tick_ms: i64,
    next_tick_ms: i64,
    end_ms: Option<i64>,
}

impl Schedule {
    /// `events` are sorted stably by time, so equal instants keep their
    /// source order. Ticks run every `tick_s` after `start_ms` up to `end_ms`.
    pub fn new(
        mut events: Vec<(i64, ChainEvent)>,
        sims: Vec<SimChain>,
        start_ms: i64,
        tick_s: u64,
        end_ms: Option<i64>,
    ) -> Self {
        events.sort_by_key(|(t, e)| (*t, priority(e)));
        let tick_ms = (tick_s.max(1) as i64).saturating_mul(1000);
        Schedule {
            fixed: events.into(),
            sims,
            tick_ms,
            next_tick_ms: start_ms.saturating_add(tick_ms),
            end_ms,
        }
    }

    pub fn end_ms(&self) -> Option<i64> {
        self.end_ms
    }

    fn next_sim(&mut self) -> Option<(i64, usize)> {
        self.sims
            .iter_mut()
            .enumerate()
            .map(|(i, s)| (s.peek_timestamp().secs() * 1000, i))
            .min()
    }

    fn candidate(&mut self) -> Option<(i64, u8, u8)> {
        let mut best: Option<(i64, u8, u8)> = None;
        let mut consider = |c: (i64, u8, u8)| {
            if best.is_none_or(|b| (c.0, c.1) < (b.0, b.1)) {
                best = Some(c);
            }
        };
        if let Some((t, e)) = self.fixed.front() {
            consider((*t, priority(e), 0));
        }
        if let Some((t, _)) = self.next_sim() {
            consider((t, 1, 1));
        }
        consider((self.next_tick_ms, 4, 2));
        best.filter(|(t, _, _)| self.end_ms.is_none_or(|end| *t <= end))
    }

    /// Time of the next event, if any remains before the end.
    pub fn peek_time(&mut self) -> Option<i64> {
        self.candidate().map(|c| c.0)
    }

    pub fn pop(&mut self) -> Option<(i64, ChainEvent)> {
        let (t, _, source) = self.candidate()?;
        match source {
            0 => self.fixed.pop_front(),
            1 => {
                let (_, i) = self.next_sim()?;
                let block = self.sims[i].next()?;
                Some((t, ChainEvent::NewBlock(block)))
            }
            _ => {
                self.next_tick_ms = self.next_tick_ms.saturating_add(self.tick_ms);
                Some((t, ChainEvent::Tick))
            }
        }
    }
}

impl Iterator for Schedule {
    type Item = (i64, ChainEvent);

    fn next(&mut self) -> Option<Self::Item> {
        self.pop()
    }
}
