//! The 1-2-3 trend indicator: a state machine over identified extrema that
//! tracks up and down trends independently and records the 1-2-3, 3-2-3 and
//! 2-3-2 situations they pass through.
//!
//! Rules for an up trend (down trends are mirrored):
//!
//! * When a minimum `P3` is identified, no up trend is active and `P3` is
//!   above the minimum `P1` preceding the last maximum `P2`, a candidate
//!   forms. Its 1-2-3 situation is recorded unless `P2` was already exceeded
//!   between `P2` and the identification of `P3`.
//! * From that identification bar on, the candidate activates at the first
//!   bar whose high exceeds `P2`. It fails at a bar whose low undercuts `P3`
//!   (this wins on a bar that does both) or when the next maximum is
//!   identified first.
//! * While active, a higher maximum becomes the new `P2` and records a 2-3-2
//!   situation; a higher minimum becomes the new `P3` and records a 3-2-3
//!   situation unless `P2` was already exceeded by then.
//! * A `P3` becomes the stop level once the higher maximum following it is
//!   identified. The trend breaks at the first bar whose low falls below the
//!   stop. Every trend therefore breaks at most once and only after its first
//!   2-3-2 situation.
//!
//! On each bar identifications are handled before price checks.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market_data::CandleSeries;
use crate::sar_minmax::{Direction, ExtremumEvent, ExtremumKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PricePoint {
    pub at: usize,
    pub price: f64,
    pub identified_at: usize,
}

impl PricePoint {
    fn from_event(e: &ExtremumEvent) -> Self {
        Self {
            at: e.at,
            price: e.price,
            identified_at: e.identified_at,
        }
    }

    fn signed(self, s: f64) -> Self {
        Self {
            price: s * self.price,
            ..self
        }
    }
}

/// An activated trend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trend {
    pub direction: Direction,
    pub p1: PricePoint,
    /// Every P2 in order; the first is the activation level.
    pub p2_history: Vec<PricePoint>,
    /// Every P3 in order; the first is the candidate's P3.
    pub p3_history: Vec<PricePoint>,
    pub activated_at: Option<usize>,
    pub broken_at: Option<usize>,
    /// Number of 2-3-2 situations recorded while active.
    pub s232_count: usize,
}

impl Trend {
    pub fn p2(&self) -> PricePoint {
        *self.p2_history.last().expect("trend has a P2")
    }

    pub fn p3(&self) -> PricePoint {
        *self.p3_history.last().expect("trend has a P3")
    }

    pub fn is_broken(&self) -> bool {
        self.broken_at.is_some()
    }
}

/// Movements of an activated trend: the initial P1→P2 movement plus every
/// movement beyond a P2. An activated trend has at least two.
pub fn count_movements(trend: &Trend) -> Result<usize> {
    trend.activated_at.ok_or(Error::NotActivated)?;
    Ok(1 + trend.s232_count.max(1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SituationKind {
    S123,
    S323,
    S232,
}

impl SituationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SituationKind::S123 => "s123",
            SituationKind::S323 => "s323",
            SituationKind::S232 => "s232",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    TrendActivated,
    P2Passed,
    Failed,
    Censored,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::TrendActivated => "trend_activated",
            Outcome::P2Passed => "p2_passed",
            Outcome::Failed => "failed",
            Outcome::Censored => "censored",
        }
    }

    pub fn is_success(self) -> bool {
        matches!(self, Outcome::TrendActivated | Outcome::P2Passed)
    }
}

/// One situation with the points needed for its metrics. `p3` is the
/// previous P3 for a 3-2-3 situation and the current one for a 2-3-2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SituationRecord {
    pub kind: SituationKind,
    pub direction: Direction,
    pub p1: Option<PricePoint>,
    pub p2: PricePoint,
    pub p3: PricePoint,
    pub p3_new: Option<PricePoint>,
    pub p2_new: Option<PricePoint>,
    /// Close of the bar where the defining point was identified.
    pub close_at_identification: f64,
    /// Identification bar of the defining point.
    pub decision_bar: usize,
    pub outcome: Outcome,
    pub resolved_at: Option<usize>,
    /// 2-3-2 only: first bar after P3 whose extreme passes P2, and that extreme.
    pub break_point: Option<(usize, f64)>,
}

impl SituationRecord {
    /// The point whose identification created the record.
    pub fn defining_point(&self) -> PricePoint {
        match self.kind {
            SituationKind::S123 => self.p3,
            SituationKind::S323 => self.p3_new.expect("3-2-3 has P3_new"),
            SituationKind::S232 => self.p2_new.expect("2-3-2 has P2_new"),
        }
    }

    pub fn is_censored(&self) -> bool {
        self.outcome == Outcome::Censored
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrendRun {
    pub trends: Vec<Trend>,
    pub situations: Vec<SituationRecord>,
}

impl TrendRun {
    pub fn count(&self, kind: SituationKind) -> usize {
        self.situations.iter().filter(|r| r.kind == kind).count()
    }

    /// Every trend has broken and no 2-3-2 situation is censored.
    pub fn is_uncensored(&self) -> bool {
        self.trends.iter().all(Trend::is_broken)
            && !self
                .situations
                .iter()
                .any(|r| r.kind == SituationKind::S232 && r.is_censored())
    }
}

struct Candidate {
    p1: PricePoint,
    p2: PricePoint,
    p3: PricePoint,
    record: Option<usize>,
}

struct Active {
    trend: usize,
    p2: PricePoint,
    p3: PricePoint,
    stop: Option<f64>,
    open_232: Option<usize>,
    /// Open 3-2-3 records with the P2 level each must pass.
    open_323: Vec<(usize, f64)>,
}

/// One direction. Prices are multiplied by the direction sign so that the
/// logic is always written for an up trend: `hi`/`lo` are the signed bar
/// extremes and "lows" are the extrema that can serve as P1/P3.
struct Tracker<'a> {
    dir: Direction,
    s: f64,
    hi: Vec<f64>,
    lo: Vec<f64>,
    closes: &'a [f64],
    lows: Vec<PricePoint>,
    highs: Vec<PricePoint>,
    candidate: Option<Candidate>,
    active: Option<Active>,
    trends: Vec<Trend>,
    records: Vec<SituationRecord>,
}

impl<'a> Tracker<'a> {
    fn new(dir: Direction, series: &CandleSeries, closes: &'a [f64]) -> Self {
        let s = dir.sign();
        let (hi, lo) = match dir {
            Direction::Up => (series.highs(), series.lows()),
            Direction::Down => (
                series.lows().iter().map(|v| -v).collect(),
                series.highs().iter().map(|v| -v).collect(),
            ),
        };
        Self {
            dir,
            s,
            hi,
            lo,
            closes,
            lows: Vec::new(),
            highs: Vec::new(),
            candidate: None,
            active: None,
            trends: Vec::new(),
            records: Vec::new(),
        }
    }

    fn real(&self, p: PricePoint) -> PricePoint {
        p.signed(self.s)
    }

    /// Some bar in `(p2.at, until]` trades above `p2`.
    fn p2_broken(&self, p2: PricePoint, until: usize) -> bool {
        self.hi[p2.at + 1..=until].iter().any(|&h| h > p2.price)
    }

    fn push(&mut self, record: SituationRecord) -> usize {
        self.records.push(record);
        self.records.len() - 1
    }

    fn resolve(&mut self, idx: usize, outcome: Outcome, at: usize) {
        self.records[idx].outcome = outcome;
        self.records[idx].resolved_at = Some(at);
    }

    fn on_low(&mut self, m: PricePoint) {
        if let Some(a) = &self.active {
            if m.price > a.p3.price {
                let (p2, p3_old, trend) = (a.p2, a.p3, a.trend);
                let idx = (!self.p2_broken(p2, m.identified_at)).then(|| {
                    self.push(SituationRecord {
                        kind: SituationKind::S323,
                        direction: self.dir,
                        p1: None,
                        p2: self.real(p2),
                        p3: self.real(p3_old),
                        p3_new: Some(self.real(m)),
                        p2_new: None,
                        close_at_identification: self.closes[m.identified_at],
                        decision_bar: m.identified_at,
                        outcome: Outcome::Censored,
                        resolved_at: None,
                        break_point: None,
                    })
                });
                let a = self.active.as_mut().expect("active");
                if let Some(idx) = idx {
                    a.open_323.push((idx, p2.price));
                }
                a.p3 = m;
                let real = self.real(m);
                self.trends[trend].p3_history.push(real);
            }
        } else if let (Some(&p2), Some(&p1)) = (self.highs.last(), self.lows.last()) {
            if p1.at < p2.at && m.price > p1.price {
                let record = (!self.p2_broken(p2, m.identified_at)).then(|| {
                    self.push(SituationRecord {
                        kind: SituationKind::S123,
                        direction: self.dir,
                        p1: Some(self.real(p1)),
                        p2: self.real(p2),
                        p3: self.real(m),
                        p3_new: None,
                        p2_new: None,
                        close_at_identification: self.closes[m.identified_at],
                        decision_bar: m.identified_at,
                        outcome: Outcome::Censored,
                        resolved_at: None,
                        break_point: None,
                    })
                });
                self.candidate = Some(Candidate { p1, p2, p3: m, record });
            }
        }
        self.lows.push(m);
    }

    fn on_high(&mut self, hp: PricePoint) {
        if let Some(c) = self.candidate.take() {
            if let Some(r) = c.record {
                self.resolve(r, Outcome::Failed, hp.identified_at);
            }
        }
        if let Some(a) = &self.active {
            if hp.price > a.p2.price {
                let (p2, p3, trend, open) = (a.p2, a.p3, a.trend, a.open_232);
                if let Some(r) = open {
                    self.resolve(r, Outcome::P2Passed, hp.identified_at);
                }
                let break_point = (p3.at + 1..=hp.at)
                    .find(|&t| self.hi[t] > p2.price)
                    .map(|t| (t, self.s * self.hi[t]));
                let idx = self.push(SituationRecord {
                    kind: SituationKind::S232,
                    direction: self.dir,
                    p1: None,
                    p2: self.real(p2),
                    p3: self.real(p3),
                    p3_new: None,
                    p2_new: Some(self.real(hp)),
                    close_at_identification: self.closes[hp.identified_at],
                    decision_bar: hp.identified_at,
                    outcome: Outcome::Censored,
                    resolved_at: None,
                    break_point,
                });
                let a = self.active.as_mut().expect("active");
                a.open_232 = Some(idx);
                a.stop = Some(p3.price);
                a.p2 = hp;
                let real = self.real(hp);
                let t = &mut self.trends[trend];
                t.p2_history.push(real);
                t.s232_count += 1;
            }
        }
        self.highs.push(hp);
    }

    fn on_bar(&mut self, t: usize) {
        if let Some(c) = &self.candidate {
            if t >= c.p3.identified_at {
                if self.lo[t] < c.p3.price {
                    let c = self.candidate.take().expect("candidate");
                    if let Some(r) = c.record {
                        self.resolve(r, Outcome::Failed, t);
                    }
                } else if self.hi[t] > c.p2.price {
                    let c = self.candidate.take().expect("candidate");
                    if let Some(r) = c.record {
                        self.resolve(r, Outcome::TrendActivated, t);
                    }
                    self.trends.push(Trend {
                        direction: self.dir,
                        p1: self.real(c.p1),
                        p2_history: vec![self.real(c.p2)],
                        p3_history: vec![self.real(c.p3)],
                        activated_at: Some(t),
                        broken_at: None,
                        s232_count: 0,
                    });
                    self.active = Some(Active {
                        trend: self.trends.len() - 1,
                        p2: c.p2,
                        p3: c.p3,
                        stop: None,
                        open_232: None,
                        open_323: Vec::new(),
                    });
                }
            }
        }
        let Some(a) = &mut self.active else { return };
        if a.stop.is_some_and(|stop| self.lo[t] < stop) {
            let a = self.active.take().expect("active");
            self.trends[a.trend].broken_at = Some(t);
            for r in a.open_232.into_iter().chain(a.open_323.iter().map(|x| x.0)) {
                self.resolve(r, Outcome::Failed, t);
            }
            return;
        }
        let hi = self.hi[t];
        let mut passed = Vec::new();
        a.open_323.retain(|&(r, level)| {
            let pass = hi > level;
            if pass {
                passed.push(r);
            }
            !pass
        });
        for r in passed {
            self.resolve(r, Outcome::P2Passed, t);
        }
    }

    fn run(mut self, events: &[(usize, ExtremumKind, PricePoint)]) -> (Vec<Trend>, Vec<SituationRecord>) {
        let low_kind = match self.dir {
            Direction::Up => ExtremumKind::Minimum,
            Direction::Down => ExtremumKind::Maximum,
        };
        let mut next = events.iter().peekable();
        for t in 0..self.hi.len() {
            while let Some(&&(id, kind, p)) = next.peek() {
                if id != t {
                    break;
                }
                let p = p.signed(self.s);
                if kind == low_kind {
                    self.on_low(p);
                } else {
                    self.on_high(p);
                }
                next.next();
            }
            self.on_bar(t);
        }
        (self.trends, self.records)
    }
}

fn check_extrema(extrema: &[ExtremumEvent], len: usize) -> Result<()> {
    for e in extrema {
        if e.identified_at < e.at || e.identified_at >= len {
            return Err(Error::InvalidParameter(format!(
                "extremum at bar {} identified at bar {} outside the series",
                e.at, e.identified_at
            )));
        }
    }
    for w in extrema.windows(2) {
        if w[0].kind == w[1].kind || w[1].at <= w[0].at || w[1].identified_at <= w[0].identified_at {
            return Err(Error::InvalidParameter(format!(
                "extrema must alternate with increasing bars (at {} and {})",
                w[0].at, w[1].at
            )));
        }
    }
    Ok(())
}

/// Runs the trend indicator over `extrema` (provisional ones are ignored).
/// Trends are ordered by activation bar, situations by decision bar; up
/// comes before down on ties.
pub fn run_trend_indicator(extrema: &[ExtremumEvent], series: &CandleSeries) -> Result<TrendRun> {
    let confirmed: Vec<ExtremumEvent> = extrema.iter().filter(|e| !e.provisional).copied().collect();
    check_extrema(&confirmed, series.len())?;
    let events: Vec<_> = confirmed
        .iter()
        .map(|e| (e.identified_at, e.kind, PricePoint::from_event(e)))
        .collect();
    let closes = series.closes();
    let (mut trends, mut situations) = Tracker::new(Direction::Up, series, &closes).run(&events);
    let (down_trends, down_records) = Tracker::new(Direction::Down, series, &closes).run(&events);
    trends.extend(down_trends);
    situations.extend(down_records);
    // Stable sorts keep up before down on equal keys.
    trends.sort_by_key(|t| t.activated_at);
    situations.sort_by_key(|r| r.decision_bar);
    Ok(TrendRun { trends, situations })
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes `direction,start,break,movements` rows; `start` is the activation
/// bar and `break` is empty for trends still running.
pub fn write_trends_csv<W: Write>(trends: &[Trend], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["direction", "start", "break", "movements"])?;
    for t in trends {
        w.write_record([
            t.direction.as_str().to_string(),
            opt(t.activated_at),
            opt(t.broken_at),
            count_movements(t)?.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

/// Writes all records of one kind with every point, the outcome and the
/// metric inputs. Absent fields are left empty.
pub fn write_situations_csv<W: Write>(records: &[SituationRecord], kind: SituationKind, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["kind", "direction"];
    for p in ["p1", "p2", "p3", "p3_new", "p2_new"] {
        header.extend(match p {
            "p1" => ["p1_at", "p1_price", "p1_identified_at"],
            "p2" => ["p2_at", "p2_price", "p2_identified_at"],
            "p3" => ["p3_at", "p3_price", "p3_identified_at"],
            "p3_new" => ["p3_new_at", "p3_new_price", "p3_new_identified_at"],
            _ => ["p2_new_at", "p2_new_price", "p2_new_identified_at"],
        });
    }
    header.extend([
        "close_at_identification",
        "decision_bar",
        "outcome",
        "resolved_at",
        "break_at",
        "break_price",
    ]);
    w.write_record(&header)?;
    for r in records.iter().filter(|r| r.kind == kind) {
        let mut row = vec![r.kind.as_str().to_string(), r.direction.as_str().to_string()];
        for p in [r.p1, Some(r.p2), Some(r.p3), r.p3_new, r.p2_new] {
            row.push(opt(p.map(|p| p.at)));
            row.push(opt(p.map(|p| p.price)));
            row.push(opt(p.map(|p| p.identified_at)));
        }
        row.push(r.close_at_identification.to_string());
        row.push(r.decision_bar.to_string());
        row.push(r.outcome.as_str().to_string());
        row.push(opt(r.resolved_at));
        row.push(opt(r.break_point.map(|b| b.0)));
        row.push(opt(r.break_point.map(|b| b.1)));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate, staircase_extrema, Pivot, StaircaseSpec, SynthSpec};

    fn pv(at: usize, price: f64) -> Pivot {
        Pivot {
            at,
            price,
            identified_at: Some(at + 1),
        }
    }

    fn run(pivots: Vec<Pivot>, tail: usize) -> TrendRun {
        let spec = StaircaseSpec { pivots, tail };
        let series = generate(&SynthSpec::TrendStaircase(spec.clone())).unwrap();
        run_trend_indicator(&staircase_extrema(&spec).unwrap(), &series).unwrap()
    }

    fn up(run: &TrendRun) -> Vec<&SituationRecord> {
        run.situations.iter().filter(|r| r.direction == Direction::Up).collect()
    }

    #[test]
    fn hand_traced_activation() {
        // min 10 @0, max 20 @5, min 14 @9, rally above 20 by bar 12
        let r = run(vec![pv(0, 10.0), pv(5, 20.0), pv(9, 14.0), pv(15, 26.0)], 2);
        let t: Vec<_> = r.trends.iter().filter(|t| t.direction == Direction::Up).collect();
        assert_eq!(t.len(), 1);
        // the path reaches 20 at bar 12 and passes it at bar 13
        assert_eq!(t[0].activated_at, Some(13));
        let s = up(&r);
        assert_eq!(s[0].kind, SituationKind::S123);
        assert_eq!(s[0].outcome, Outcome::TrendActivated);
        assert_eq!(
            (s[0].p1.unwrap().price, s[0].p2.price, s[0].p3.price),
            (10.0, 20.0, 14.0)
        );
    }

    #[test]
    fn lower_p3_forms_no_candidate_and_reanchors() {
        let r = run(
            vec![
                pv(0, 10.0),
                pv(4, 20.0),
                pv(8, 8.0),
                pv(12, 15.0),
                pv(16, 11.0),
                pv(22, 30.0),
            ],
            2,
        );
        let s = up(&r);
        assert_eq!(s.iter().filter(|r| r.kind == SituationKind::S123).count(), 1);
        assert_eq!(s[0].p1.unwrap().price, 8.0);
        assert_eq!(s[0].p3.price, 11.0);
    }

    #[test]
    fn staircase_recovers_points_and_movements() {
        let r = run(
            vec![
                pv(0, 100.0),
                pv(5, 110.0),
                pv(9, 104.0),
                pv(19, 125.0),
                pv(24, 115.0),
                pv(30, 135.0),
                pv(35, 90.0),
            ],
            3,
        );
        let t = &r.trends[0];
        assert_eq!(t.direction, Direction::Up);
        assert_eq!(t.p1.price, 100.0);
        let p2: Vec<f64> = t.p2_history.iter().map(|p| p.price).collect();
        let p3: Vec<f64> = t.p3_history.iter().map(|p| p.price).collect();
        assert_eq!(p2, vec![110.0, 125.0, 135.0]);
        assert_eq!(p3, vec![104.0, 115.0]);
        assert_eq!(count_movements(t).unwrap(), 3);
        assert!(t.is_broken());
        let kinds: Vec<_> = up(&r).iter().map(|s| (s.kind, s.outcome)).collect();
        use Outcome::*;
        use SituationKind::*;
        assert_eq!(
            kinds,
            vec![
                (S123, TrendActivated),
                (S232, P2Passed),
                (S323, P2Passed),
                (S232, Failed)
            ]
        );
    }

    #[test]
    fn minimal_trend_has_two_movements() {
        let r = run(
            vec![pv(0, 100.0), pv(5, 110.0), pv(9, 104.0), pv(19, 125.0), pv(30, 90.0)],
            2,
        );
        let t = &r.trends[0];
        assert_eq!(count_movements(t).unwrap(), 2);
        assert!(t.is_broken());
        assert!(r.is_uncensored());
    }

    #[test]
    fn open_situations_are_censored() {
        let r = run(vec![pv(0, 100.0), pv(5, 110.0), Pivot::new(9, 104.0)], 3);
        let s = up(&r);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].outcome, Outcome::Censored);
        assert!(r.trends.is_empty());
    }

    #[test]
    fn not_activated_is_an_error() {
        let p = PricePoint {
            at: 0,
            price: 1.0,
            identified_at: 1,
        };
        let t = Trend {
            direction: Direction::Up,
            p1: p,
            p2_history: vec![p],
            p3_history: vec![p],
            activated_at: None,
            broken_at: None,
            s232_count: 0,
        };
        assert!(matches!(count_movements(&t), Err(Error::NotActivated)));
    }

    #[test]
    fn short_input_is_empty() {
        let r = run(vec![pv(0, 100.0), pv(5, 110.0)], 1);
        assert!(r.trends.is_empty() && r.situations.is_empty());
    }
}
