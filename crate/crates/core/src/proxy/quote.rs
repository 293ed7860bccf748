//! Exchange-rate feeds.

use std::collections::{BTreeMap, BTreeSet};

use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};

use crate::num::decimal_number;
use crate::time::Timestamp;

/// Default age after which a quote no longer counts as current.
pub const DEFAULT_STALENESS_SECS: i64 = 600;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Quote {
    #[serde(with = "decimal_number")]
    pub usd: Decimal,
    pub at: Timestamp,
}

/// USD price per unit of a currency.
pub trait QuoteFeed: Send + Sync {
    /// The latest quote known at `now`, if any.
    fn quote(&self, symbol: &str, now: Timestamp) -> Option<Quote>;
}

/// Fixed prices that never age.
#[derive(Debug, Clone, Default)]
pub struct StaticQuotes {
    prices: BTreeMap<String, Decimal>,
}

impl StaticQuotes {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, symbol: impl Into<String>, usd: Decimal) -> Self {
        self.prices.insert(symbol.into(), usd);
        self
    }

    pub fn prices(&self) -> impl Iterator<Item = (&String, &Decimal)> {
        self.prices.iter()
    }
}

impl QuoteFeed for StaticQuotes {
    fn quote(&self, symbol: &str, now: Timestamp) -> Option<Quote> {
        self.prices.get(symbol).map(|usd| Quote { usd: *usd, at: now })
    }
}

/// Quotes recorded over time, e.g. from a quote trace file.
#[derive(Debug, Clone, Default)]
pub struct TraceQuotes {
    by_symbol: BTreeMap<String, Vec<Quote>>,
}

impl TraceQuotes {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, symbol: impl Into<String>, quote: Quote) {
        let series = self.by_symbol.entry(symbol.into()).or_default();
        let at = series.partition_point(|q| q.at <= quote.at);
        series.insert(at, quote);
    }
}

impl QuoteFeed for TraceQuotes {
    fn quote(&self, symbol: &str, now: Timestamp) -> Option<Quote> {
        let series = self.by_symbol.get(symbol)?;
        let idx = series.partition_point(|q| q.at <= now);
        idx.checked_sub(1).map(|i| series[i])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuoteStatus {
    Fresh(Quote),
    Stale(Quote),
    Missing,
}

/// Latest quote per symbol, fed by quote events, with a staleness bound.
#[derive(Debug, Clone)]
pub struct QuoteBook {
    quotes: BTreeMap<String, Quote>,
    pinned: BTreeSet<String>,
    staleness_secs: i64,
}

impl Default for QuoteBook {
    fn default() -> Self {
        QuoteBook::new(DEFAULT_STALENESS_SECS)
    }
}

impl QuoteBook {
    pub fn new(staleness_secs: i64) -> Self {
        QuoteBook {
            quotes: BTreeMap::new(),
            pinned: BTreeSet::new(),
            staleness_secs,
        }
    }

    pub fn staleness_secs(&self) -> i64 {
        self.staleness_secs
    }

    /// Records a quote. Older quotes than the one held are ignored.
    /// Returns whether the stored value changed.
    pub fn update(&mut self, symbol: &str, usd: Decimal, at: Timestamp) -> bool {
        match self.quotes.get(symbol) {
            Some(q) if q.at > at => false,
            Some(q) if q.at == at && q.usd == usd => false,
            _ => {
                self.quotes.insert(symbol.to_string(), Quote { usd, at });
                true
            }
        }
    }

    /// Stores a price that never goes stale.
    pub fn pin(&mut self, symbol: &str, usd: Decimal) {
        self.quotes.insert(
            symbol.to_string(),
            Quote {
                usd,
                at: Timestamp::EPOCH,
            },
        );
        self.pinned.insert(symbol.to_string());
    }

    pub fn status(&self, symbol: &str, now: Timestamp) -> QuoteStatus {
        match self.quotes.get(symbol) {
            None => QuoteStatus::Missing,
            Some(q) if self.pinned.contains(symbol) => QuoteStatus::Fresh(*q),
            Some(q) if now.since(q.at) > self.staleness_secs => QuoteStatus::Stale(*q),
            Some(q) => QuoteStatus::Fresh(*q),
        }
    }
}

impl QuoteFeed for QuoteBook {
    fn quote(&self, symbol: &str, now: Timestamp) -> Option<Quote> {
        match self.status(symbol, now) {
            QuoteStatus::Fresh(q) => Some(q),
            _ => None,
        }
    }
}
