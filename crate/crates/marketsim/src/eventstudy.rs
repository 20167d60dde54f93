//! Event studies: cut windows around event times out of a sampled measure
//! series, align them at the event, normalize, and aggregate into mean and
//! standard-deviation curves.
//!
//! Mid prices are sampled on a uniform grid with last-known-value carry
//! forward between book changes; a sample is absent only before the book
//! has ever been two-sided.

use std::io::Write;

use crate::kernel::SimTime;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum EventStudyError {
    #[error("event time {event} does not fall on the sample grid")]
    OffGrid { event: SimTime },
    #[error("window [{lo} .. {hi}] exceeds series extent [{t0} .. {t_end}]")]
    WindowOutOfRange {
        lo: SimTime,
        hi: SimTime,
        t0: SimTime,
        t_end: SimTime,
    },
    #[error("benchmark value at the event is missing or non-positive")]
    BadBenchmark,
    #[error("offset layouts differ between subseries")]
    OffsetMismatch,
    #[error("baseline value at offset {0} is missing or zero")]
    BadBaseline(i64),
    #[error("value missing at offset {0}")]
    MissingValue(i64),
    #[error("cannot aggregate an empty collection")]
    EmptyCollection,
    #[error("window durations must be multiples of the sample interval")]
    RaggedWindow,
}

/// A measure series on a uniform time grid: `values[k]` is the value at
/// `t0 + k * interval`, `None` while the measure has not yet existed.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSeries {
    pub t0: SimTime,
    pub interval_ns: u64,
    pub values: Vec<Option<f64>>,
}

impl SampledSeries {
    /// Sample a change series (time, value) on the grid
    /// `t0, t0+interval, ...` (`len` points) carrying the last change
    /// forward. Changes must be time-ordered.
    pub fn from_changes(
        changes: &[(SimTime, f64)],
        t0: SimTime,
        interval_ns: u64,
        len: usize,
    ) -> SampledSeries {
        assert!(interval_ns > 0, "sample interval must be positive");
        debug_assert!(changes.windows(2).all(|w| w[0].0 <= w[1].0));
        let mut values = Vec::with_capacity(len);
        let mut cursor = 0usize;
        let mut current: Option<f64> = None;
        for k in 0..len {
            let at = t0 + (k as u64) * interval_ns;
            while cursor < changes.len() && changes[cursor].0 <= at {
                current = Some(changes[cursor].1);
                cursor += 1;
            }
            values.push(current);
        }
        SampledSeries {
            t0,
            interval_ns,
            values,
        }
    }

    pub fn t_end(&self) -> SimTime {
        self.t0 + (self.values.len().saturating_sub(1) as u64) * self.interval_ns
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// A subseries re-indexed so the event sits at relative offset 0; negative
/// offsets precede the event.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedSeries {
    pub step_ns: u64,
    /// Number of steps before the event.
    pub pre_steps: usize,
    /// Number of steps after the event.
    pub post_steps: usize,
    /// `pre_steps + 1 + post_steps` values; index `pre_steps` is offset 0.
    pub values: Vec<Option<f64>>,
}

impl WindowedSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Signed step offsets, event at 0.
    pub fn offsets(&self) -> impl Iterator<Item = i64> + '_ {
        let pre = self.pre_steps as i64;
        (0..self.values.len() as i64).map(move |i| i - pre)
    }

    pub fn value_at_offset(&self, offset: i64) -> Option<f64> {
        let idx = offset + self.pre_steps as i64;
        if idx < 0 || idx as usize >= self.values.len() {
            return None;
        }
        self.values[idx as usize]
    }

    fn same_layout(&self, other: &WindowedSeries) -> bool {
        self.step_ns == other.step_ns
            && self.pre_steps == other.pre_steps
            && self.post_steps == other.post_steps
    }

    /// Mean over the offsets in `[from, to]` (inclusive); None if any value
    /// in the range is missing.
    pub fn mean_over(&self, from: i64, to: i64) -> Option<f64> {
        let mut sum = 0.0;
        let mut n = 0usize;
        for off in from..=to {
            sum += self.value_at_offset(off)?;
            n += 1;
        }
        (n > 0).then(|| sum / n as f64)
    }
}

/// Cut the window `[event - pre, event + post]` out of a sampled series and
/// re-index it to the event.
pub fn extract_window(
    series: &SampledSeries,
    event_time: SimTime,
    pre_ns: u64,
    post_ns: u64,
) -> Result<WindowedSeries, EventStudyError> {
    let step = series.interval_ns;
    if pre_ns % step != 0 || post_ns % step != 0 {
        return Err(EventStudyError::RaggedWindow);
    }
    if event_time < series.t0 || (event_time - series.t0) % step != 0 {
        return Err(EventStudyError::OffGrid { event: event_time });
    }
    let lo = event_time
        .checked_sub(SimTime::from_nanos(pre_ns))
        .filter(|lo| *lo >= series.t0)
        .ok_or(EventStudyError::WindowOutOfRange {
            lo: SimTime::ZERO,
            hi: event_time + post_ns,
            t0: series.t0,
            t_end: series.t_end(),
        })?;
    let hi = event_time + post_ns;
    if hi > series.t_end() {
        return Err(EventStudyError::WindowOutOfRange {
            lo,
            hi,
            t0: series.t0,
            t_end: series.t_end(),
        });
    }
    let start_idx = ((lo - series.t0) / step) as usize;
    let count = ((pre_ns + post_ns) / step) as usize + 1;
    Ok(WindowedSeries {
        step_ns: step,
        pre_steps: (pre_ns / step) as usize,
        post_steps: (post_ns / step) as usize,
        values: series.values[start_idx..start_idx + count].to_vec(),
    })
}

/// Divide the whole window by its offset-0 value, making the event-time
/// level exactly 1.
pub fn normalize_benchmark(window: &WindowedSeries) -> Result<WindowedSeries, EventStudyError> {
    let benchmark = window
        .value_at_offset(0)
        .filter(|v| *v > 0.0)
        .ok_or(EventStudyError::BadBenchmark)?;
    Ok(WindowedSeries {
        values: window
            .values
            .iter()
            .map(|v| v.map(|x| x / benchmark))
            .collect(),
        ..window.clone()
    })
}

/// Pointwise ratio experimental / baseline at matching offsets.
pub fn normalize_baseline(
    experimental: &WindowedSeries,
    baseline: &WindowedSeries,
) -> Result<WindowedSeries, EventStudyError> {
    if !experimental.same_layout(baseline) {
        return Err(EventStudyError::OffsetMismatch);
    }
    let mut values = Vec::with_capacity(experimental.values.len());
    for (off, (e, b)) in experimental
        .offsets()
        .zip(experimental.values.iter().zip(baseline.values.iter()))
    {
        match (e, b) {
            (Some(e), Some(b)) if *b != 0.0 => values.push(Some(e / b)),
            (Some(_), _) => return Err(EventStudyError::BadBaseline(off)),
            (None, _) => return Err(EventStudyError::MissingValue(off)),
        }
    }
    Ok(WindowedSeries {
        values,
        ..experimental.clone()
    })
}

/// Pointwise relative difference `(experimental - control) / control`; the
/// impact definition for paired same-seed trials.
pub fn paired_impact(
    experimental: &WindowedSeries,
    control: &WindowedSeries,
) -> Result<WindowedSeries, EventStudyError> {
    if !experimental.same_layout(control) {
        return Err(EventStudyError::OffsetMismatch);
    }
    let mut values = Vec::with_capacity(experimental.values.len());
    for (off, (e, c)) in experimental
        .offsets()
        .zip(experimental.values.iter().zip(control.values.iter()))
    {
        match (e, c) {
            (Some(e), Some(c)) if *c != 0.0 => values.push(Some((e - c) / c)),
            (Some(_), _) => return Err(EventStudyError::BadBaseline(off)),
            (None, _) => return Err(EventStudyError::MissingValue(off)),
        }
    }
    Ok(WindowedSeries {
        values,
        ..experimental.clone()
    })
}

/// Aligned, aggregated curves: per-offset mean and population standard
/// deviation over the subseries collection.
#[derive(Debug, Clone, PartialEq)]
pub struct EventStudyResult {
    pub step_ns: u64,
    /// Offsets in steps, event at 0.
    pub offsets: Vec<i64>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub n: usize,
}

impl EventStudyResult {
    /// CSV rows `offset_ms,mean,std,n`. Offsets must be whole milliseconds.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        assert_eq!(
            self.step_ns % 1_000_000,
            0,
            "sample step must be a whole number of milliseconds"
        );
        let step_ms = (self.step_ns / 1_000_000) as i64;
        writeln!(w, "offset_ms,mean,std,n")?;
        for (i, off) in self.offsets.iter().enumerate() {
            writeln!(
                w,
                "{},{},{},{}",
                off * step_ms,
                self.mean[i],
                self.std[i],
                self.n
            )?;
        }
        Ok(())
    }

    pub fn value_at_offset(&self, offset: i64) -> Option<f64> {
        let idx = self.offsets.iter().position(|o| *o == offset)?;
        Some(self.mean[idx])
    }

    /// Mean of the mean-curve over offsets `[from, to]` inclusive.
    pub fn mean_over(&self, from: i64, to: i64) -> f64 {
        let vals: Vec<f64> = self
            .offsets
            .iter()
            .zip(&self.mean)
            .filter(|(o, _)| (from..=to).contains(*o))
            .map(|(_, m)| *m)
            .collect();
        assert!(!vals.is_empty(), "no offsets in [{from}, {to}]");
        vals.iter().sum::<f64>() / vals.len() as f64
    }
}

/// Combine aligned subseries into per-offset mean and population standard
/// deviation. All subseries must share the same offset layout and have a
/// value at every offset.
pub fn aggregate(windows: &[WindowedSeries]) -> Result<EventStudyResult, EventStudyError> {
    let first = windows.first().ok_or(EventStudyError::EmptyCollection)?;
    for w in windows {
        if !w.same_layout(first) {
            return Err(EventStudyError::OffsetMismatch);
        }
    }
    let len = first.values.len();
    let n = windows.len();
    let mut mean = vec![0.0; len];
    for w in windows {
        for (i, v) in w.values.iter().enumerate() {
            let off = i as i64 - first.pre_steps as i64;
            mean[i] += v.ok_or(EventStudyError::MissingValue(off))?;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let mut std = vec![0.0; len];
    for w in windows {
        for (i, v) in w.values.iter().enumerate() {
            let d = v.expect("checked above") - mean[i];
            std[i] += d * d;
        }
    }
    for s in &mut std {
        *s = (*s / n as f64).sqrt();
    }
    Ok(EventStudyResult {
        step_ns: first.step_ns,
        offsets: first.offsets().collect(),
        mean,
        std,
        n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_series(t0_ms: u64, interval_ms: u64, values: Vec<Option<f64>>) -> SampledSeries {
        SampledSeries {
            t0: SimTime::from_millis(t0_ms),
            interval_ns: interval_ms * 1_000_000,
            values,
        }
    }

    fn window(pre: usize, post: usize, values: Vec<f64>) -> WindowedSeries {
        assert_eq!(values.len(), pre + post + 1);
        WindowedSeries {
            step_ns: 1_000_000,
            pre_steps: pre,
            post_steps: post,
            values: values.into_iter().map(Some).collect(),
        }
    }

    #[test]
    fn carry_forward_sampling() {
        let changes = vec![
            (SimTime::from_millis(5), 10.0),
            (SimTime::from_millis(12), 11.0),
            (SimTime::from_millis(12), 12.0),
        ];
        let s = SampledSeries::from_changes(&changes, SimTime::ZERO, 5_000_000, 5);
        // t = 0, 5, 10, 15, 20 ms; the last change at an instant wins.
        assert_eq!(
            s.values,
            vec![None, Some(10.0), Some(10.0), Some(12.0), Some(12.0)]
        );
    }

    #[test]
    fn window_extraction_shape() {
        // 10s before, 60s after at 1 ms: 70_001 samples.
        let len = 100_000;
        let series = grid_series(0, 1, (0..len).map(|i| Some(i as f64)).collect());
        let w = extract_window(
            &series,
            SimTime::from_millis(20_000),
            10_000_000_000,
            60_000_000_000,
        )
        .unwrap();
        assert_eq!(w.len(), 70_001);
        assert_eq!(w.offsets().next(), Some(-10_000));
        assert_eq!(w.offsets().last(), Some(60_000));
        assert_eq!(w.value_at_offset(0), Some(20_000.0));
    }

    #[test]
    fn degenerate_window_is_single_sample() {
        let series = grid_series(0, 1, vec![Some(1.0), Some(2.0), Some(3.0)]);
        let w = extract_window(&series, SimTime::from_millis(1), 0, 0).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(w.value_at_offset(0), Some(2.0));
    }

    #[test]
    fn window_at_series_edge_errors() {
        let series = grid_series(0, 1, vec![Some(1.0); 10]);
        let err = extract_window(&series, SimTime::ZERO, 1_000_000, 0).unwrap_err();
        assert!(matches!(err, EventStudyError::WindowOutOfRange { .. }));
        let err =
            extract_window(&series, SimTime::from_millis(9), 0, 1_000_000).unwrap_err();
        assert!(matches!(err, EventStudyError::WindowOutOfRange { .. }));
    }

    #[test]
    fn benchmark_normalization() {
        let w = window(1, 1, vec![99.0, 100.0, 102.0]);
        let n = normalize_benchmark(&w).unwrap();
        assert_eq!(n.value_at_offset(0), Some(1.0));
        assert_eq!(n.value_at_offset(1), Some(1.02));
        // Constant series becomes all ones.
        let w = window(1, 1, vec![7.0, 7.0, 7.0]);
        let n = normalize_benchmark(&w).unwrap();
        assert!(n.values.iter().all(|v| v.unwrap() == 1.0));
    }

    #[test]
    fn benchmark_requires_value_at_event() {
        let mut w = window(1, 1, vec![1.0, 1.0, 1.0]);
        w.values[1] = None;
        assert_eq!(
            normalize_benchmark(&w).unwrap_err(),
            EventStudyError::BadBenchmark
        );
    }

    #[test]
    fn benchmark_scale_invariance() {
        let w = window(2, 2, vec![98.0, 99.0, 100.0, 103.0, 101.0]);
        let scaled = WindowedSeries {
            values: w.values.iter().map(|v| v.map(|x| x * 3.5)).collect(),
            ..w.clone()
        };
        let a = normalize_benchmark(&w).unwrap();
        let b = normalize_benchmark(&scaled).unwrap();
        for (x, y) in a.values.iter().zip(b.values.iter()) {
            assert!((x.unwrap() - y.unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn baseline_normalization() {
        let e = window(0, 1, vec![1001.0, 1001.0]);
        let b = window(0, 1, vec![1000.0, 1000.0]);
        let r = normalize_baseline(&e, &b).unwrap();
        assert!((r.value_at_offset(0).unwrap() - 1.001).abs() < 1e-12);
        // Identical series: all ones.
        let r = normalize_baseline(&b, &b).unwrap();
        assert!(r.values.iter().all(|v| v.unwrap() == 1.0));
        // Zero in the baseline is an error.
        let z = window(0, 1, vec![1000.0, 0.0]);
        assert_eq!(
            normalize_baseline(&e, &z).unwrap_err(),
            EventStudyError::BadBaseline(1)
        );
        // Mismatched layouts error.
        let short = window(0, 0, vec![1000.0]);
        assert_eq!(
            normalize_baseline(&e, &short).unwrap_err(),
            EventStudyError::OffsetMismatch
        );
    }

    #[test]
    fn paired_impact_basics() {
        let c = window(1, 1, vec![1000.0, 1000.0, 1000.0]);
        let e = window(1, 1, vec![1000.0, 1010.0, 1010.0]);
        let imp = paired_impact(&e, &c).unwrap();
        assert_eq!(imp.value_at_offset(-1), Some(0.0));
        assert!((imp.value_at_offset(0).unwrap() - 0.01).abs() < 1e-12);
        // Identical series: exact zeros.
        let imp = paired_impact(&c, &c).unwrap();
        assert!(imp.values.iter().all(|v| v.unwrap() == 0.0));
    }

    #[test]
    fn aggregate_mean_std_by_hand() {
        let a = window(0, 1, vec![1.0, 1.2]);
        let b = window(0, 1, vec![1.0, 0.8]);
        let r = aggregate(&[a.clone(), b]).unwrap();
        assert_eq!(r.mean, vec![1.0, 1.0]);
        assert!((r.std[0] - 0.0).abs() < 1e-12);
        assert!((r.std[1] - 0.2).abs() < 1e-12);
        assert_eq!(r.n, 2);
        // A single subseries aggregates to itself with zero std.
        let r = aggregate(std::slice::from_ref(&a)).unwrap();
        assert_eq!(r.mean, vec![1.0, 1.2]);
        assert!(r.std.iter().all(|s| *s == 0.0));
    }

    #[test]
    fn aggregate_rejects_empty_and_ragged() {
        assert_eq!(
            aggregate(&[]).unwrap_err(),
            EventStudyError::EmptyCollection
        );
        let a = window(0, 1, vec![1.0, 1.2]);
        let b = window(1, 1, vec![1.0, 1.0, 1.0]);
        assert_eq!(
            aggregate(&[a, b]).unwrap_err(),
            EventStudyError::OffsetMismatch
        );
    }

    #[test]
    fn aggregate_is_permutation_invariant() {
        let ws: Vec<WindowedSeries> = (0..5)
            .map(|i| window(1, 1, vec![1.0 + i as f64, 2.0, 3.0 - i as f64]))
            .collect();
        let fwd = aggregate(&ws).unwrap();
        let mut rev = ws.clone();
        rev.reverse();
        let bwd = aggregate(&rev).unwrap();
        assert_eq!(fwd, bwd);
    }

    #[test]
    fn aggregated_std_matches_noise_sigma() {
        let sigma = 0.05;
        let mut rng = crate::kernel::agent_stream(12, crate::kernel::AgentId(0));
        let normal = rand_distr::Normal::new(1.0, sigma).unwrap();
        let ws: Vec<WindowedSeries> = (0..100)
            .map(|_| {
                window(
                    2,
                    2,
                    (0..5)
                        .map(|_| rand_distr::Distribution::sample(&normal, &mut rng))
                        .collect(),
                )
            })
            .collect();
        let r = aggregate(&ws).unwrap();
        for s in &r.std {
            assert!(
                (s - sigma).abs() / sigma < 0.15,
                "std {s} vs sigma {sigma}"
            );
        }
    }

    #[test]
    fn csv_round_trips_exactly() {
        let r = EventStudyResult {
            step_ns: 1_000_000,
            offsets: vec![-1, 0, 1],
            mean: vec![0.9999999999999, 1.0, 1.0000001234],
            std: vec![0.0, 0.125, 0.3333333333333333],
            n: 7,
        };
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        for (i, line) in text.lines().skip(1).enumerate() {
            let cols: Vec<&str> = line.split(',').collect();
            assert_eq!(cols[0].parse::<i64>().unwrap(), r.offsets[i]);
            assert_eq!(cols[1].parse::<f64>().unwrap(), r.mean[i]);
            assert_eq!(cols[2].parse::<f64>().unwrap(), r.std[i]);
            assert_eq!(cols[3].parse::<usize>().unwrap(), r.n);
        }
    }
}
