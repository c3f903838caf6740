//! Independent reference implementations used only by tests. They follow the
//! definitions literally with plain loops and share no code with the library.

#![allow(dead_code)]

use trendwave::sar_minmax::{ExtremumEvent, ExtremumKind};
use trendwave::synth::SplitMix64;

/// Cross-correlation of `a` with shift `n`, straight from the definition:
/// detrend by the centered window mean, pair `X_t` with `X_{t+n}` over every
/// admissible `t`, take the uncentered cosine.
pub fn brute_phi(a: &[f64], n: usize) -> Option<f64> {
    let m = a.len();
    let h = n / 2;
    let w = 2 * h + 1;
    if m < n + 1 + 2 * h + 1 {
        return None;
    }
    let x = |t: usize| -> f64 {
        let mut s = 0.0;
        for v in &a[t - h..=t + h] {
            s += v;
        }
        a[t] - s / w as f64
    };
    let last = m - n - 1 - h;
    let (mut xy, mut xx, mut yy) = (0.0, 0.0, 0.0);
    for t in h..=last {
        let (p, q) = (x(t), x(t + n));
        xy += p * q;
        xx += p * p;
        yy += q * q;
    }
    if xx == 0.0 || yy == 0.0 {
        return None;
    }
    Some(xy / (xx.sqrt() * yy.sqrt()))
}

/// Gaussian random walk of length `len` starting at `start`.
pub fn random_series(rng: &mut SplitMix64, len: usize, start: f64) -> Vec<f64> {
    let mut v = Vec::with_capacity(len);
    let mut p = start;
    for _ in 0..len {
        p += rng.normal();
        v.push(p);
    }
    v
}

/// One trend found by the enumerator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleTrend {
    pub activated_at: usize,
    pub broken_at: Option<usize>,
    pub movements: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OracleCounts {
    pub trends: Vec<OracleTrend>,
    pub s123: usize,
    pub s323: usize,
    pub s232: usize,
}

enum Event {
    /// Higher high identified; the current floor becomes the stop.
    Top { id: usize, stop: f64 },
    /// Higher low identified; `recorded` unless the top was already passed.
    Floor { id: usize, recorded: bool },
}

impl Event {
    fn id(&self) -> usize {
        match self {
            Event::Top { id, .. } | Event::Floor { id, .. } => *id,
        }
    }
}

#[derive(Clone, Copy)]
struct Pt {
    low: bool,
    at: usize,
    price: f64,
    id: usize,
}

/// Up and down results of the enumerator.
pub fn brute_trends(extrema: &[ExtremumEvent], highs: &[f64], lows: &[f64]) -> (OracleCounts, OracleCounts) {
    let confirmed: Vec<&ExtremumEvent> = extrema.iter().filter(|e| !e.provisional).collect();
    let up: Vec<Pt> = confirmed
        .iter()
        .map(|e| Pt {
            low: e.kind == ExtremumKind::Minimum,
            at: e.at,
            price: e.price,
            id: e.identified_at,
        })
        .collect();
    let down: Vec<Pt> = confirmed
        .iter()
        .map(|e| Pt {
            low: e.kind == ExtremumKind::Maximum,
            at: e.at,
            price: -e.price,
            id: e.identified_at,
        })
        .collect();
    let neg = |v: &[f64]| v.iter().map(|x| -x).collect::<Vec<_>>();
    (enumerate(&up, highs, lows), enumerate(&down, &neg(lows), &neg(highs)))
}

/// Every triple of consecutive low/high/low points is tested as a candidate
/// whenever no earlier trend covers the identification bar of its last low.
/// A trend's whole life is first computed without breaks, then cut at the
/// first bar trading below the stop in force at that bar.
fn enumerate(e: &[Pt], hi: &[f64], lo: &[f64]) -> OracleCounts {
    let len = hi.len();
    let mut out = OracleCounts::default();
    let covered = |trends: &[OracleTrend], b: usize| {
        trends
            .iter()
            .any(|t| t.activated_at < b && t.broken_at.is_none_or(|k| b <= k))
    };
    for k in 2..e.len() {
        let (p1, p2, p3) = (e[k - 2], e[k - 1], e[k]);
        if !p3.low || covered(&out.trends, p3.id) || p3.price <= p1.price {
            continue;
        }
        let p2_run = (p2.at + 1..=p3.id).map(|t| hi[t]).fold(f64::NEG_INFINITY, f64::max);
        if p2_run <= p2.price {
            out.s123 += 1;
        }
        let window_end = e.get(k + 1).map_or(len, |n| n.id);
        let fail = (p3.id..window_end).find(|&t| lo[t] < p3.price);
        let act = (p3.id..window_end).find(|&t| hi[t] > p2.price);
        let activated_at = match (act, fail) {
            (Some(a), Some(f)) if a < f => a,
            (Some(a), None) => a,
            _ => continue,
        };

        // Life without breaks.
        let (mut top, mut floor) = (p2, p3);
        let mut events = Vec::new();
        for q in &e[k + 1..] {
            if !q.low && q.price > top.price {
                events.push(Event::Top {
                    id: q.id,
                    stop: floor.price,
                });
                top = *q;
            } else if q.low && q.price > floor.price {
                let passed = (top.at + 1..=q.id).any(|t| hi[t] > top.price);
                events.push(Event::Floor {
                    id: q.id,
                    recorded: !passed,
                });
                floor = *q;
            }
        }
        let stop_at = |t: usize| {
            events.iter().rev().find_map(|ev| match ev {
                Event::Top { id, stop } if *id <= t => Some(*stop),
                _ => None,
            })
        };
        let broken_at = (activated_at..len).find(|&t| stop_at(t).is_some_and(|s| lo[t] < s));
        let live: Vec<&Event> = events
            .iter()
            .filter(|ev| broken_at.is_none_or(|b| ev.id() <= b))
            .collect();
        let n232 = live.iter().filter(|ev| matches!(ev, Event::Top { .. })).count();
        out.s232 += n232;
        out.s323 += live
            .iter()
            .filter(|ev| matches!(ev, Event::Floor { recorded: true, .. }))
            .count();
        out.trends.push(OracleTrend {
            activated_at,
            broken_at,
            movements: 1 + n232.max(1),
        });
    }
    out
}
