use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use super::analytic::{analytic_rates, DetectionConfig, RateReport, SourceBrightness};
use crate::error::{Error, Result};

/// Smallest delay used for the off-peak accidental window, s.
pub const MIN_ACCIDENTAL_DELAY_S: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Signal,
    Idler,
}

impl Channel {
    pub fn name(self) -> &'static str {
        match self {
            Channel::Signal => "signal",
            Channel::Idler => "idler",
        }
    }
}

/// Detection times of one detector, in seconds from the start of the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeTagStream {
    pub channel: Channel,
    pub timestamps: Vec<f64>,
    pub seed: u64,
}

impl TimeTagStream {
    pub fn new(channel: Channel, timestamps: Vec<f64>, seed: u64) -> Result<Self> {
        check_sorted(&timestamps, channel)?;
        Ok(TimeTagStream { channel, timestamps, seed })
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }
}

fn check_sorted(t: &[f64], channel: Channel) -> Result<()> {
    if t.iter().any(|x| !x.is_finite()) || t.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::usage(format!("{} timestamps must be finite and strictly increasing", channel.name())));
    }
    Ok(())
}

/// Poisson event times with `rate` over `[0, duration)`.
fn poisson_times(rng: &mut ChaCha8Rng, rate: f64, duration: f64) -> Vec<f64> {
    let mut out = Vec::new();
    if rate <= 0.0 {
        return out;
    }
    let gap = Exp::new(rate).expect("positive rate");
    let mut t = gap.sample(rng);
    while t < duration {
        out.push(t);
        t += gap.sample(rng);
    }
    out
}

fn merge_sorted(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            out.push(a[i]);
            i += 1;
        } else {
            out.push(b[j]);
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Keeps an event only if it arrives at least `tau_dead` after the last kept
/// one. Exact repeats are dropped even without dead time.
fn apply_dead_time(times: Vec<f64>, tau_dead: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(times.len());
    let mut last = f64::NEG_INFINITY;
    for t in times {
        if t > last && t - last >= tau_dead {
            out.push(t);
            last = t;
        }
    }
    out
}

/// Simulated signal and idler detections.
///
/// Pairs are emitted as a Poisson process at `power·pairs_per_mw`; each
/// photon survives its path with `η·T` independently of its partner; dark
/// counts are independent Poisson processes; each detector then applies a
/// non-paralyzable dead time. Timing jitter is not modeled.
pub fn simulate_timetags(
    power_mw: f64,
    source: &SourceBrightness,
    det: &DetectionConfig,
    duration_s: f64,
    seed: u64,
) -> Result<(TimeTagStream, TimeTagStream)> {
    if !(duration_s.is_finite() && duration_s > 0.0) {
        return Err(Error::usage("simulation duration must be > 0"));
    }
    if !(power_mw.is_finite() && power_mw >= 0.0) {
        return Err(Error::domain("pump power must be >= 0"));
    }
    source.validate()?;
    det.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t = det.analyzer_transmission;
    let (ps, pi) = (det.eta_s * t, det.eta_i * t);
    let mut sig = Vec::new();
    let mut idl = Vec::new();
    for time in poisson_times(&mut rng, power_mw * source.pairs_per_mw, duration_s) {
        if rng.random::<f64>() < ps {
            sig.push(time);
        }
        if rng.random::<f64>() < pi {
            idl.push(time);
        }
    }
    let dark_s = poisson_times(&mut rng, det.dark_s_cps, duration_s);
    let dark_i = poisson_times(&mut rng, det.dark_i_cps, duration_s);
    let sig = apply_dead_time(merge_sorted(&sig, &dark_s), det.tau_dead_s);
    let idl = apply_dead_time(merge_sorted(&idl, &dark_i), det.tau_dead_s);
    Ok((
        TimeTagStream { channel: Channel::Signal, timestamps: sig, seed },
        TimeTagStream { channel: Channel::Idler, timestamps: idl, seed },
    ))
}

/// Events in `a` matched to a distinct event in `b` within `±τ/2`.
///
/// Each `a` event takes the nearest still-unused `b` event in its window.
pub fn count_coincidences(a: &TimeTagStream, b: &TimeTagStream, tau_cc_s: f64) -> Result<u64> {
    count_with_delay(a, b, tau_cc_s, 0.0)
}

/// As [`count_coincidences`] with every `b` event shifted by `delay_s`.
/// A delay far beyond the pair correlation time counts accidentals only.
pub fn count_with_delay(a: &TimeTagStream, b: &TimeTagStream, tau_cc_s: f64, delay_s: f64) -> Result<u64> {
    check_sorted(&a.timestamps, a.channel)?;
    check_sorted(&b.timestamps, b.channel)?;
    if !(tau_cc_s.is_finite() && tau_cc_s >= 0.0) || !delay_s.is_finite() {
        return Err(Error::usage("coincidence window must be finite and >= 0"));
    }
    let half = 0.5 * tau_cc_s;
    let bt = &b.timestamps;
    let mut used = vec![false; bt.len()];
    let mut start = 0;
    let mut count = 0;
    for &ta in &a.timestamps {
        while start < bt.len() && bt[start] + delay_s < ta - half {
            start += 1;
        }
        let mut best: Option<(usize, f64)> = None;
        let mut k = start;
        while k < bt.len() && bt[k] + delay_s <= ta + half {
            if !used[k] {
                let d = (bt[k] + delay_s - ta).abs();
                if best.is_none_or(|(_, bd)| d < bd) {
                    best = Some((k, d));
                }
            }
            k += 1;
        }
        if let Some((k, _)) = best {
            used[k] = true;
            count += 1;
        }
    }
    Ok(count)
}

/// Writes both streams as `channel,t_seconds` rows, signal first.
pub fn write_timetags_csv<W: Write>(streams: &[&TimeTagStream], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["channel", "t_seconds"])?;
    for s in streams {
        for t in &s.timestamps {
            w.write_record([s.channel.name(), &format!("{t:.12e}")])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// A measured rate with its Poisson standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub counts: u64,
    pub rate_cps: f64,
    pub sigma_cps: f64,
    pub analytic_cps: f64,
}

impl RateEstimate {
    fn new(counts: u64, duration_s: f64, analytic_cps: f64) -> Self {
        let n = counts as f64;
        // A zero count still carries an uncertainty of about one event.
        RateEstimate {
            counts,
            rate_cps: n / duration_s,
            sigma_cps: n.max(1.0).sqrt() / duration_s,
            analytic_cps,
        }
    }

    /// `(measured - analytic)/σ`.
    pub fn z_score(&self) -> f64 {
        (self.rate_cps - self.analytic_cps) / self.sigma_cps
    }

    pub fn within(&self, sigmas: f64) -> bool {
        self.z_score().abs() <= sigmas
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSummary {
    pub power_mw: f64,
    pub duration_s: f64,
    pub seed: u64,
    pub tau_cc_s: f64,
    pub accidental_delay_s: f64,
    pub singles_s: RateEstimate,
    pub singles_i: RateEstimate,
    /// Prompt-window twofolds, compared with the analytic pairs + accidentals.
    pub twofold: RateEstimate,
    /// Delayed-window counts, compared with the analytic accidentals.
    pub accidentals: RateEstimate,
    pub analytic: RateReport,
}

impl MonteCarloSummary {
    pub fn estimates(&self) -> [(&'static str, &RateEstimate); 4] {
        [
            ("singles_s", &self.singles_s),
            ("singles_i", &self.singles_i),
            ("twofold", &self.twofold),
            ("accidentals", &self.accidentals),
        ]
    }

    pub fn all_within(&self, sigmas: f64) -> bool {
        self.estimates().iter().all(|(_, e)| e.within(sigmas))
    }
}

/// Simulates, counts, and sets the result beside [`analytic_rates`].
///
/// Returns the streams as well so callers can dump them.
pub fn run_montecarlo(
    power_mw: f64,
    source: &SourceBrightness,
    det: &DetectionConfig,
    duration_s: f64,
    seed: u64,
) -> Result<(MonteCarloSummary, TimeTagStream, TimeTagStream)> {
    let (s, i) = simulate_timetags(power_mw, source, det, duration_s, seed)?;
    let analytic = analytic_rates(power_mw, source, det, 1.0)?;
    let delay = MIN_ACCIDENTAL_DELAY_S.max(100.0 * det.tau_cc_s);
    let prompt = count_coincidences(&s, &i, det.tau_cc_s)?;
    let delayed = count_with_delay(&s, &i, det.tau_cc_s, delay)?;
    let summary = MonteCarloSummary {
        power_mw,
        duration_s,
        seed,
        tau_cc_s: det.tau_cc_s,
        accidental_delay_s: delay,
        singles_s: RateEstimate::new(s.len() as u64, duration_s, analytic.singles_s),
        singles_i: RateEstimate::new(i.len() as u64, duration_s, analytic.singles_i),
        twofold: RateEstimate::new(prompt, duration_s, analytic.true_coincidences + analytic.accidentals),
        accidentals: RateEstimate::new(delayed, duration_s, analytic.accidentals),
        analytic,
    };
    Ok((summary, s, i))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stream(t: Vec<f64>) -> TimeTagStream {
        TimeTagStream::new(Channel::Signal, t, 0).unwrap()
    }

    fn ideal() -> DetectionConfig {
        DetectionConfig {
            eta_s: 1.0,
            eta_i: 1.0,
            dark_s_cps: 0.0,
            dark_i_cps: 0.0,
            tau_cc_s: 1e-9,
            tau_dead_s: 0.0,
            analyzer_transmission: 1.0,
        }
    }

    const SRC: SourceBrightness = SourceBrightness { pairs_per_mw: 1e5, spectral_fwhm_nm: 2.9 };

    #[test]
    fn perfect_detection_gives_identical_streams() {
        let (s, i) = simulate_timetags(1.0, &SRC, &ideal(), 0.1, 7).unwrap();
        assert_eq!(s.timestamps, i.timestamps);
        assert!(s.len() > 9_000);
        assert_eq!(count_coincidences(&s, &i, 1e-12).unwrap(), s.len() as u64);
    }

    #[test]
    fn seeds_are_reproducible() {
        let det = DetectionConfig { eta_s: 0.3, eta_i: 0.4, dark_s_cps: 500.0, tau_dead_s: 5e-8, ..ideal() };
        let a = simulate_timetags(1.0, &SRC, &det, 0.05, 42).unwrap();
        let b = simulate_timetags(1.0, &SRC, &det, 0.05, 42).unwrap();
        let c = simulate_timetags(1.0, &SRC, &det, 0.05, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.0.timestamps, c.0.timestamps);
        assert!(simulate_timetags(1.0, &SRC, &det, 0.0, 1).is_err());
    }

    #[test]
    fn dead_time_spacing_is_respected() {
        let det = DetectionConfig { tau_dead_s: 1e-6, ..ideal() };
        let (s, _) = simulate_timetags(10.0, &SRC, &det, 0.01, 3).unwrap();
        assert!(s.timestamps.windows(2).all(|w| w[1] - w[0] >= 1e-6));
    }

    #[test]
    fn greedy_matching_consumes_each_partner_once() {
        let a = stream(vec![1.0, 1.1, 5.0]);
        let b = stream(vec![1.05, 4.0]);
        assert_eq!(count_coincidences(&a, &b, 0.2).unwrap(), 1);
        assert_eq!(count_coincidences(&a, &b, 0.0).unwrap(), 0);
        assert_eq!(count_coincidences(&a, &b, 2.0).unwrap(), 2);
        let unsorted = TimeTagStream { channel: Channel::Idler, timestamps: vec![2.0, 1.0], seed: 0 };
        assert!(matches!(count_coincidences(&a, &unsorted, 1.0), Err(Error::Usage(_))));
        assert!(TimeTagStream::new(Channel::Idler, vec![1.0, 1.0], 0).is_err());
    }

    #[test]
    fn independent_streams_match_accidental_formula() {
        let det = DetectionConfig { dark_s_cps: 2e5, dark_i_cps: 3e5, ..ideal() };
        let (s, i) = simulate_timetags(0.0, &SRC, &det, 2.0, 11).unwrap();
        let tau = 1e-7;
        let n = count_coincidences(&s, &i, tau).unwrap() as f64;
        let expected = (s.len() as f64 / 2.0) * (i.len() as f64 / 2.0) * tau * 2.0;
        assert!((n - expected).abs() <= 3.0 * expected.sqrt(), "{n} vs {expected}");
        assert_eq!(count_coincidences(&s, &i, 0.0).unwrap(), 0);
    }

    #[test]
    fn timetag_csv_layout() {
        let a = stream(vec![1e-9, 2.5e-3]);
        let b = TimeTagStream::new(Channel::Idler, vec![3e-9], 0).unwrap();
        let mut buf = Vec::new();
        write_timetags_csv(&[&a, &b], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "channel,t_seconds");
        assert_eq!(lines.len(), 4);
        assert!(lines[3].starts_with("idler,3.0"));
    }

    #[test]
    fn singles_agree_with_saturation_model() {
        let det = DetectionConfig {
            eta_s: 0.25,
            eta_i: 0.35,
            dark_s_cps: 300.0,
            dark_i_cps: 300.0,
            tau_cc_s: 3.2e-9,
            tau_dead_s: 22e-9,
            analyzer_transmission: 0.9,
        };
        let (m, _, _) = run_montecarlo(2.0, &SRC, &det, 2.0, 5).unwrap();
        assert!(m.singles_s.within(3.0) && m.singles_i.within(3.0), "{m:?}");
    }
}
