//! Plain-text ranking tables.

use std::fmt::Write as _;

use crate::metrics::Metric;
use crate::selection::RankingResult;
use crate::switchover::SwitchoverSuggestion;

/// Weighted scores per metric, totals and eligibility, one column per chain
/// in registration order, followed by the winner line.
///
/// ```text
/// metric    bitcoin  ethereum
/// M1              0         5
/// ...
/// Total          70        90
/// Eligible      yes       yes
/// winner: ethereum
/// ```
pub fn ranking_table(ranking: &RankingResult) -> String {
    let label_width = "Eligible".len();
    let widths: Vec<usize> = ranking
        .per_chain
        .iter()
        .map(|c| c.chain.as_str().len().max(5))
        .collect();
    let mut out = String::new();
    let row = |out: &mut String, label: &str, cells: Vec<String>| {
        write!(out, "{label:<label_width$}").unwrap();
        for (cell, w) in cells.iter().zip(&widths) {
            write!(out, "  {cell:>w$}").unwrap();
        }
        out.push('\n');
    };
    row(
        &mut out,
        "metric",
        ranking.per_chain.iter().map(|c| c.chain.to_string()).collect(),
    );
    for m in Metric::ALL {
        row(
            &mut out,
            m.label(),
            ranking
                .per_chain
                .iter()
                .map(|c| c.weighted_scores[m.index()].to_string())
                .collect(),
        );
    }
    row(
        &mut out,
        "Total",
        ranking.per_chain.iter().map(|c| c.benefit.to_string()).collect(),
    );
    row(
        &mut out,
        "Eligible",
        ranking
            .per_chain
            .iter()
            .map(|c| if c.eligible { "yes" } else { "no" }.to_string())
            .collect(),
    );
    match &ranking.winner {
        Some(w) => writeln!(out, "winner: {w}").unwrap(),
        None => out.push_str("winner: none\n"),
    }
    out
}

/// One line per suggestion, oldest first.
pub fn suggestion_lines(suggestions: &[SwitchoverSuggestion]) -> String {
    if suggestions.is_empty() {
        return "suggestions: none\n".into();
    }
    let mut out = String::from("suggestions:\n");
    for s in suggestions {
        write!(
            out,
            "  #{} {} -> {} {} at {}",
            s.id, s.from, s.to, s.state, s.created_at
        )
        .unwrap();
        if let Some(r) = &s.transfer_range {
            write!(out, " transfer {}..{}", r.start, r.end).unwrap();
        }
        out.push('\n');
    }
    out
}

/// The ranking table followed by the suggestion log.
pub fn full_report(ranking: Option<&RankingResult>, suggestions: &[SwitchoverSuggestion]) -> String {
    let mut out = match ranking {
        Some(r) => ranking_table(r),
        None => "no ranking computed\n".into(),
    };
    out.push_str(&suggestion_lines(suggestions));
    out
}
