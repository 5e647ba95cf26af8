use std::collections::BTreeSet;

use proptest::prelude::*;
use uhrsim_core::netsim::{run_scenario, Simulation};
use uhrsim_core::phy::{mpdu_error_trial, select_mcs, sinr_db, Interferer, McsTable};
use uhrsim_core::scenario::{preset, preset_text, serialize, ScenarioConfig};
use uhrsim_core::sim::{EventQueue, RngStream, SimTime};
use uhrsim_core::stats::DelayAccumulator;
use uhrsim_core::traffic::{FlowModel, FlowSource, FlowSpec, SourceEvent, TrafficClass};
use uhrsim_core::ids::{DeviceId, FlowId};

fn short(name: &str, ms: u64) -> ScenarioConfig {
    let mut c = preset(name).unwrap();
    c.run.duration = SimTime::from_millis(ms);
    c
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn queue_pops_in_order_and_skips_cancelled(
        times in prop::collection::vec(0u64..1_000, 1..200),
        cancel in prop::collection::vec(any::<bool>(), 200),
    ) {
        let mut q = EventQueue::new();
        let handles: Vec<_> = times.iter().enumerate().map(|(i, &t)| q.push(SimTime::from_nanos(t), i)).collect();
        let mut cancelled = BTreeSet::new();
        for (i, h) in handles.iter().enumerate() {
            if cancel[i] {
                prop_assert!(q.cancel(*h));
                cancelled.insert(i);
            }
        }
        let mut popped = Vec::new();
        while let Some(e) = q.pop() {
            popped.push((e.fire_at, e.seq, e.payload));
        }
        prop_assert_eq!(popped.len(), times.len() - cancelled.len());
        for w in popped.windows(2) {
            prop_assert!((w[0].0, w[0].1) < (w[1].0, w[1].1));
        }
        // Oracle: stable sort of the surviving inserts by time.
        let mut oracle: Vec<(u64, usize)> =
            times.iter().enumerate().filter(|(i, _)| !cancelled.contains(i)).map(|(i, &t)| (t, i)).collect();
        oracle.sort_by_key(|&(t, _)| t);
        let got: Vec<usize> = popped.iter().map(|p| p.2).collect();
        let want: Vec<usize> = oracle.iter().map(|p| p.1).collect();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn select_mcs_is_monotone(a in -10.0f64..60.0, b in -10.0f64..60.0) {
        let t = McsTable::wifi7_default();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let m = |s| select_mcs(s, &t).map(|e| e.index as i32).unwrap_or(-1);
        prop_assert!(m(lo) <= m(hi));
    }

    #[test]
    fn sinr_grows_with_suppression(
        signal in -90.0f64..0.0,
        powers in prop::collection::vec(-100.0f64..0.0, 1..5),
        sup in prop::collection::vec(0.0f64..50.0, 5),
        extra in 0.0f64..30.0,
        which in 0usize..5,
        noise in -100.0f64..-70.0,
    ) {
        let ivs: Vec<Interferer> = powers.iter().zip(&sup).map(|(&p, &s)| Interferer::new(p, s)).collect();
        let base = sinr_db(signal, &ivs, noise);
        let mut more = ivs.clone();
        let k = which % more.len();
        more[k].suppression_db += extra;
        prop_assert!(sinr_db(signal, &more, noise) >= base - 1e-12);
        prop_assert!(base <= signal - noise + 1e-12);
    }

    #[test]
    fn histogram_quantiles_track_sort_oracle(
        exps in prop::collection::vec(3.0f64..11.0, 1..2000),
        q in 0.001f64..0.999,
    ) {
        let mut acc = DelayAccumulator::new();
        let mut raw: Vec<u64> = exps.iter().map(|e| 10f64.powf(*e) as u64).collect();
        for &ns in &raw {
            acc.record(SimTime::from_nanos(ns));
        }
        acc.finalize();
        raw.sort_unstable();
        let exact = acc.quantile(q).unwrap();
        let hist = acc.histogram_quantile(q).unwrap().as_nanos() as f64;
        let rank = uhrsim_core::stats::quantile_rank(q, raw.len() as u64) as usize;
        let oracle = raw[rank - 1] as f64;
        prop_assert_eq!(exact.value.as_nanos() as f64, oracle);
        // Edges are rounded up to whole ns.
        prop_assert!((hist - oracle).abs() <= 0.01 * oracle + 1.0, "hist {} oracle {}", hist, oracle);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn config_round_trips(
        cbf in any::<bool>(),
        nulling in 0u32..400,
        duration_ms in 1u64..200_000,
        seed in any::<u32>(),
        mode in prop::sample::select(vec!["mlsr", "emlsr", "emlmr_str", "emlmr_nstr"]),
        rate in 1u32..10_000,
        preemption in any::<bool>(),
    ) {
        let name = if cbf { "case-study-cbf" } else { "case-study-mlo" };
        let text = preset_text(name).unwrap()
            .replace("nulling_db=30", &format!("nulling_db={}", nulling as f64 / 10.0))
            .replace("duration_s=120", &format!("duration_s={}", duration_ms as f64 / 1000.0))
            .replace("seed=1", &format!("seed={seed}"))
            .replace("mode=emlmr_str", &format!("mode={mode}"))
            .replace("rate_on_mbps=4000", &format!("rate_on_mbps={rate}"))
            .replace("preemption=false", &format!("preemption={preemption}"));
        let c = ScenarioConfig::parse(&text).unwrap();
        let back = ScenarioConfig::parse(&serialize(&c)).unwrap();
        prop_assert_eq!(&back, &c);
        prop_assert_eq!(back.hash_hex(), c.hash_hex());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn runs_pass_every_audit(
        seed in 1u64..10_000,
        scheme in prop::sample::select(vec!["none", "cbf", "ctdma", "cofdma"]),
        nulling in 5u32..40,
        mode in prop::sample::select(vec!["mlsr", "emlsr", "emlmr_str", "emlmr_nstr"]),
        buffer in prop::sample::select(vec![10u32, 500, 10240]),
    ) {
        let coord = match scheme {
            "none" => "scheme=none".to_string(),
            "cbf" => format!("scheme=cbf\nmembers=ap1,ap2\nnulling_db={nulling}"),
            s => format!("scheme={s}\nmembers=ap1,ap2"),
        };
        let text = preset_text("case-study-mlo").unwrap()
            .replace("scheme=none", &coord)
            .replace("mode=emlmr_str", &format!("mode={mode}"))
            .replace("buffer_packets=10240", &format!("buffer_packets={buffer}"))
            .replace("duration_s=120", "duration_s=0.05");
        let c = ScenarioConfig::parse(&text).unwrap();
        let (r, audit) = Simulation::new(&c, seed).unwrap().run_unchecked();
        prop_assert!(audit.is_clean(), "{}", audit);
        prop_assert!(r.ledger.longest_txop() <= SimTime::from_micros(5484));
        prop_assert!(r.ledger.largest_aggregate() <= 1024);
        for f in &r.report.flows {
            prop_assert!(f.counters.is_balanced());
        }
    }

    #[test]
    fn preemption_latency_bounded_while_holding(seed in 1u64..10_000, rate in 1u32..20) {
        let text = preset_text("case-study-mlo").unwrap()
            .replace("preemption=false", "preemption=true")
            .replace("duration_s=120", "duration_s=0.1")
            .replace(
                "flow=ap2_dl",
                &format!("flow=ts1 src=ap1 dst=sta1 model=poisson rate_mbps={rate} packet_bytes=200 class=ts\nflow=ap2_dl"),
            );
        let r = run_scenario(&ScenarioConfig::parse(&text).unwrap(), seed).unwrap();
        for l in &r.truncation_latencies {
            prop_assert!(*l <= SimTime::from_nanos(57_600));
        }
    }

    #[test]
    fn rtwt_quiet_intervals_hold(
        seed in 1u64..10_000,
        start in 0u32..2000,
        duration in 100u32..2000,
        period in 3000u32..20_000,
    ) {
        let text = preset_text("case-study-mlo").unwrap()
            .replace("duration_s=120", "duration_s=0.1")
            .replace(
                "preemption=false",
                &format!("preemption=false\nrtwt=sp ap=ap2 start_us={start} duration_us={duration} period_us={period} flows=ts1"),
            )
            .replace(
                "flow=ap2_dl",
                "flow=ts1 src=ap2 dst=sta2 model=cbr rate_mbps=2 packet_bytes=500 class=ts\nflow=ap2_dl",
            );
        let c = ScenarioConfig::parse(&text).unwrap();
        let (r, audit) = Simulation::new(&c, seed).unwrap().run_unchecked();
        prop_assert!(audit.quiet.is_empty(), "{}", audit);
        prop_assert!(audit.is_clean(), "{}", audit);
        let non_member: u64 = r.ledger.intervals().iter()
            .flat_map(|i| r.quiet.iter().filter(move |q| q.link == i.link).map(move |q| (i, q)))
            .filter(|(i, _)| !i.member_only)
            .map(|(i, q)| {
                let s = i.start.max(q.start);
                let e = i.end.min(q.end);
                e.saturating_sub(s).as_nanos()
            })
            .sum();
        prop_assert_eq!(non_member, 0);
    }

    #[test]
    fn replay_is_deterministic(seed in any::<u64>()) {
        let c = short("case-study-cbf", 30);
        let a = run_scenario(&c, seed).unwrap();
        let b = run_scenario(&c, seed).unwrap();
        prop_assert_eq!(a.summary.events, b.summary.events);
        prop_assert_eq!(a.report.summary_text(), b.report.summary_text());
        prop_assert_eq!(a.ledger.intervals(), b.ledger.intervals());
    }
}

#[test]
fn empirical_per_over_a_million_trials() {
    let mut rng = RngStream::new(7, "per-check");
    let n = 1_000_000;
    let lost = (0..n).filter(|_| mpdu_error_trial(0.1, &mut rng)).count();
    let per = lost as f64 / n as f64;
    assert!((per - 0.1).abs() <= 0.001, "{per}");
}

/// Kolmogorov-Smirnov distance between On/Off phase lengths and Exp(4.15 ms).
#[test]
fn onoff_phases_fit_exponential() {
    let mean = SimTime::from_micros(4150);
    let spec = FlowSpec {
        id: FlowId(0),
        name: "ks".into(),
        src: DeviceId(0),
        dst: DeviceId(1),
        model: FlowModel::OnOff {
            mean_on: mean,
            mean_off: mean,
            rate_on_bps: 1e3,
        },
        packet_bytes: 1500,
        class: TrafficClass::BestEffort,
    };
    let mut rng = RngStream::new(11, "ks");
    let mut src = FlowSource::new(spec, &mut rng);
    let mut last = None;
    let mut lens = Vec::new();
    while lens.len() < 100_000 {
        let (t, ev) = src.next_event(&mut rng);
        if let SourceEvent::PhaseChange { .. } = ev {
            if let Some(prev) = last {
                lens.push((t - prev).as_secs_f64());
            }
            last = Some(t);
        }
    }
    lens.sort_by(f64::total_cmp);
    let n = lens.len() as f64;
    let m = mean.as_secs_f64();
    let d = lens
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let cdf = 1.0 - (-x / m).exp();
            (cdf - i as f64 / n).abs().max((i as f64 + 1.0) / n - cdf)
        })
        .fold(0.0, f64::max);
    // Asymptotic critical value at alpha = 0.01.
    let critical = 1.628 / n.sqrt();
    assert!(d < critical, "D = {d}, critical {critical}");
}
