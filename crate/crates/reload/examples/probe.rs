// Temporary calibration probe. Not part of the shipped example set.
use reload::harness::{run_plan, ActuatorChoice, ExperimentReport, StudyConfig, Technique};
use reload::sim::SimConfig;

#[derive(Clone, Copy, Debug)]
struct Dial {
    cap: f64,
    onset: f64,
    slope: f64,
    amp: f64,
    profile: usize,
}

fn profile(ix: usize) -> Vec<f64> {
    match ix {
        0 => vec![25.0, 10.0, 50.0, 10.0, 45.0, 30.0, 50.0, 90.0, 85.0, 150.0, 5.0],
        1 => vec![6.0, 4.0, 4.0, 4.0, 6.0, 4.0, 6.0, 120.0, 240.0, 150.0, 6.0],
        2 => vec![15.0, 8.0, 40.0, 8.0, 30.0, 25.0, 45.0, 100.0, 90.0, 180.0, 9.0],
        3 => vec![10.0, 5.0, 20.0, 5.0, 15.0, 20.0, 30.0, 110.0, 200.0, 125.0, 10.0],
        4 => vec![11.0, 7.0, 7.0, 7.0, 11.0, 7.0, 11.0, 216.0, 432.0, 270.0, 11.0],
        5 => vec![14.0, 10.0, 10.0, 10.0, 14.0, 10.0, 14.0, 288.0, 576.0, 360.0, 14.0],
        6 => vec![60.0, 24.0, 120.0, 24.0, 108.0, 72.0, 120.0, 216.0, 204.0, 360.0, 12.0],
        7 => vec![60.0, 24.0, 120.0, 24.0, 108.0, 72.0, 120.0, 160.0, 290.0, 330.0, 12.0],
        _ => panic!("unknown profile {ix}"),
    }
}

fn sim_for(d: Dial, seed: u64) -> ActuatorChoice {
    ActuatorChoice::Sim {
        config: SimConfig {
            base_demand_ms: profile(d.profile),
            capacity: d.cap,
            error_onset: d.onset,
            error_slope: d.slope,
            noise_amplitude: d.amp,
            seed,
        },
    }
}

struct Card {
    seed: u64,
    conv: [Option<u64>; 4],
    means: [f64; 6],
    save_b: f64,
    save_c: f64,
    transfer_means: [f64; 3],
    transfer_max: u64,
    alpha01_conv: Option<u64>,
    gamma_ref: Option<u64>,
    gamma01: Option<u64>,
    gamma09: Option<u64>,
}

fn mean_of(r: &ExperimentReport) -> f64 {
    r.last_window_mean.unwrap_or(f64::NAN)
}

fn run_card(d: Dial, seed: u64) -> Card {
    let cfg = StudyConfig { seed, ..StudyConfig::default() };
    let go = |t: Technique| {
        let mut plan = cfg.plan_for(t);
        plan.actuator = sim_for(d, seed);
        run_plan(&plan).unwrap()
    };
    let a1 = go(Technique::EpsLow);
    let a2 = go(Technique::EpsHigh);
    let a3 = go(Technique::EpsDecay);
    let a4 = go(Technique::Dqn);
    let b = go(Technique::Baseline);
    let c = go(Technique::Random);

    let transfer = |t: Technique| {
        let mut plan = cfg.plan_for(t);
        plan.actuator = sim_for(d, seed);
        plan.schedule = Some(cfg.drift_schedule());
        run_plan(&plan).unwrap()
    };
    let ta = transfer(Technique::EpsDecay);
    let tb = transfer(Technique::Baseline);
    let tc = transfer(Technique::Random);

    let cell = |alpha, gamma| {
        let mut plan = cfg.plan_for(Technique::EpsDecay);
        plan.actuator = sim_for(d, seed);
        plan.alpha = alpha;
        plan.gamma = gamma;
        run_plan(&plan).unwrap()
    };
    use reload::agent::schedule::AlphaSchedule::Fixed;
    let alpha01 = cell(Fixed(0.1), 0.5);
    let gamma01 = cell(Fixed(0.5), 0.1);
    let gamma09 = cell(Fixed(0.5), 0.9);
    let gref = cell(Fixed(0.5), 0.5);

    let bm = mean_of(&b);
    let cm = mean_of(&c);
    let am = mean_of(&a3);
    Card {
        seed,
        conv: [
            a1.convergence_episode,
            a2.convergence_episode,
            a3.convergence_episode,
            a4.convergence_episode,
        ],
        means: [mean_of(&a1), mean_of(&a2), am, mean_of(&a4), bm, cm],
        save_b: (bm - am) / bm,
        save_c: (cm - am) / cm,
        transfer_means: [mean_of(&ta), mean_of(&tb), mean_of(&tc)],
        transfer_max: ta.final_users_series().into_iter().max().unwrap_or(0),
        alpha01_conv: alpha01.convergence_episode,
        gamma_ref: gref.convergence_episode,
        gamma01: gamma01.convergence_episode,
        gamma09: gamma09.convergence_episode,
    }
}

const CRIT: [&str; 13] = [
    "a1", "a2", "a3", "a4", "order", "saveB", "saveC", "dqn15", "tOrd", "dip", "a01", "g01", "g09",
];

impl Card {
    fn bits(&self) -> [bool; 13] {
        let band = |o: Option<u64>| o.is_some_and(|e| (15..=40).contains(&e));
        let med = {
            let mut xs: Vec<i64> =
                self.conv[..3].iter().map(|c| c.map_or(i64::MAX, |e| e as i64)).collect();
            xs.sort_unstable();
            xs[1]
        };
        let [_, _, a3m, a4m, bm, cm] = self.means;
        let [tam, tbm, tcm] = self.transfer_means;
        [
            band(self.conv[0]),
            band(self.conv[1]),
            band(self.conv[2]),
            self.conv[3].is_some_and(|e| (30..=45).contains(&e) && e as i64 >= med),
            a3m < cm && cm <= bm,
            self.save_b >= 0.20,
            self.save_c >= 0.08,
            (a4m - a3m).abs() <= 0.15 * a3m,
            tam < tbm && tam < tcm,
            (self.transfer_max as f64) <= 2.0 * a3m,
            self.alpha01_conv.is_none(),
            matches!((self.gamma01, self.gamma_ref), (Some(g), Some(r)) if g > r),
            matches!((self.gamma09, self.gamma_ref), (Some(g), Some(r)) if g > r),
        ]
    }

    fn verdict(&self) -> (bool, String) {
        let mut fails = Vec::new();
        for (i, label) in ["a1", "a2", "a3"].iter().enumerate() {
            match self.conv[i] {
                Some(e) if (15..=40).contains(&e) => {}
                other => fails.push(format!("{label}={other:?}")),
            }
        }
        let med = {
            let mut xs: Vec<i64> =
                self.conv[..3].iter().map(|c| c.map_or(i64::MAX, |e| e as i64)).collect();
            xs.sort_unstable();
            xs[1]
        };
        match self.conv[3] {
            Some(e) if (30..=45).contains(&e) && (e as i64) >= med => {}
            other => fails.push(format!("a4={other:?}(med {med})")),
        }
        let [_, _, a3m, a4m, bm, cm] = self.means;
        if !(a3m < cm && cm <= bm) {
            fails.push(format!("order a3 {a3m:.1} c {cm:.1} b {bm:.1}"));
        }
        if self.save_b < 0.20 {
            fails.push(format!("saveB {:.2}", self.save_b));
        }
        if self.save_c < 0.08 {
            fails.push(format!("saveC {:.2}", self.save_c));
        }
        if !((a4m - a3m).abs() <= 0.15 * a3m) {
            fails.push(format!("dqn mean {:.2}", (a4m - a3m) / a3m));
        }
        let [tam, tbm, tcm] = self.transfer_means;
        if !(tam < tbm && tam < tcm) {
            fails.push(format!("t-order a {tam:.1} b {tbm:.1} c {tcm:.1}"));
        }
        if (self.transfer_max as f64) > 2.0 * a3m {
            fails.push(format!("dip {} vs {:.1}", self.transfer_max, 2.0 * a3m));
        }
        if self.alpha01_conv.is_some() {
            fails.push(format!("alpha01={:?}", self.alpha01_conv));
        }
        match (self.gamma_ref, self.gamma01, self.gamma09) {
            (Some(r), g1, g9) => {
                match g1 {
                    Some(e) if e > r => {}
                    other => fails.push(format!("g01={other:?} ref {r}")),
                }
                match g9 {
                    Some(e) if e > r => {}
                    other => fails.push(format!("g09={other:?} ref {r}")),
                }
            }
            (None, ..) => fails.push("gref=None".into()),
        }
        (fails.is_empty(), fails.join(" "))
    }

    fn line(&self) -> String {
        let c = |o: Option<u64>| o.map_or("--".into(), |e| format!("{e}"));
        format!(
            "seed {:>2} conv[{:>2} {:>2} {:>2} {:>2}] m[{:>5.1} {:>5.1} {:>5.1} {:>5.1} {:>5.1} {:>5.1}] sB {:.2} sC {:.2} t[{:>5.1} {:>5.1} {:>5.1}] tmax {:>3} a01 {} g[{} {} {}]",
            self.seed,
            c(self.conv[0]), c(self.conv[1]), c(self.conv[2]), c(self.conv[3]),
            self.means[0], self.means[1], self.means[2], self.means[3], self.means[4], self.means[5],
            self.save_b, self.save_c,
            self.transfer_means[0], self.transfer_means[1], self.transfer_means[2],
            self.transfer_max,
            c(self.alpha01_conv),
            c(self.gamma_ref), c(self.gamma01), c(self.gamma09),
        )
    }
}

fn parse_csv<T: std::str::FromStr>(s: &str) -> Vec<T>
where
    T::Err: std::fmt::Debug,
{
    s.split(',').map(|p| p.trim().parse().unwrap()).collect()
}

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match args.first().map(String::as_str) {
        Some("cfg") => {
            let d = Dial {
                cap: args[1].parse().unwrap(),
                onset: args[2].parse().unwrap(),
                slope: args[3].parse().unwrap(),
                amp: args[4].parse().unwrap(),
                profile: args[5].parse().unwrap(),
            };
            let seeds: Vec<u64> = parse_csv(&args[6]);
            let mut passes = 0;
            for &s in &seeds {
                let card = run_card(d, s);
                let (ok, why) = card.verdict();
                println!("{} {}", card.line(), if ok { "PASS".into() } else { why });
                passes += ok as usize;
            }
            println!("dial {d:?} => {passes}/{} pass", seeds.len());
        }
        Some("grid") => {
            let seeds: Vec<u64> = parse_csv(&args[1]);
            let mut results = Vec::new();
            for profile in [0usize, 1, 2, 3] {
                for cap in [60.0, 64.0, 68.0] {
                    for onset in [0.75, 0.77] {
                        for amp in [0.3, 0.4, 0.5] {
                            let d = Dial { cap, onset, slope: 1.0, amp, profile };
                            let mut passes = 0;
                            let mut tags: Vec<String> = Vec::new();
                            for &s in &seeds {
                                let card = run_card(d, s);
                                let (ok, why) = card.verdict();
                                passes += ok as usize;
                                if !ok {
                                    tags.push(format!("s{}:{}", s, first_word(&why)));
                                }
                            }
                            results.push((passes, d, tags.join(" ")));
                        }
                    }
                }
            }
            results.sort_by_key(|(p, ..)| std::cmp::Reverse(*p));
            for (p, d, tags) in results.iter().take(24) {
                println!("{p:>2}/{} P{} cap {:>4.0} on {:.2} amp {:.1} | {tags}",
                    seeds.len(), d.profile, d.cap, d.onset, d.amp);
            }
        }
        Some("stats") => {
            let seeds: Vec<u64> = parse_csv(&args[1]);
            let dials: Vec<Dial> = [
                (0usize, 0.77, 1.0),
                (0, 0.90, 3.0),
                (4, 0.77, 1.0),
                (4, 0.90, 3.0),
                (4, 0.93, 5.0),
                (5, 0.77, 1.0),
                (5, 0.90, 3.0),
                (5, 0.93, 5.0),
                (5, 0.95, 10.0),
                (6, 0.77, 1.0),
                (6, 0.90, 3.0),
                (6, 0.93, 5.0),
            ]
            .iter()
            .flat_map(|&(profile, onset, slope)| {
                [0.4, 0.5].map(|amp| Dial { cap: 64.0, onset, slope, amp, profile })
            })
            .collect();
            println!("dial\\crit {} joint", CRIT.join(" "));
            for d in dials {
                let mut counts = [0usize; 13];
                let mut joint = 0;
                for &s in &seeds {
                    let bits = run_card(d, s).bits();
                    for (c, b) in counts.iter_mut().zip(bits) {
                        *c += b as usize;
                    }
                    joint += bits.iter().all(|&b| b) as usize;
                }
                let cells: Vec<String> =
                    counts.iter().zip(CRIT).map(|(c, n)| format!("{c:>w$}", w = n.len())).collect();
                println!(
                    "P{} on {:.2} sl {:>2.0} amp {:.1}: {} {:>5}",
                    d.profile, d.onset, d.slope, d.amp, cells.join(" "), joint
                );
            }
        }
        Some("dqnsweep") => {
            let d = Dial {
                cap: args[1].parse().unwrap(),
                onset: args[2].parse().unwrap(),
                slope: args[3].parse().unwrap(),
                amp: args[4].parse().unwrap(),
                profile: args[5].parse().unwrap(),
            };
            let seeds: Vec<u64> = parse_csv(&args[6]);
            let lrs: Vec<f64> = parse_csv(&args[7]);
            for lr in lrs {
                let mut in_band = 0;
                let mut in_ratio = 0;
                let mut lines = Vec::new();
                for &s in &seeds {
                    let cfg = StudyConfig { seed: s, dqn_alpha: lr, ..StudyConfig::default() };
                    let mut a3plan = cfg.plan_for(Technique::EpsDecay);
                    a3plan.actuator = sim_for(d, s);
                    let a3 = run_plan(&a3plan).unwrap();
                    let mut plan = cfg.plan_for(Technique::Dqn);
                    plan.actuator = sim_for(d, s);
                    let r = run_plan(&plan).unwrap();
                    let (a3m, a4m) = (mean_of(&a3), mean_of(&r));
                    let band = r.convergence_episode.is_some_and(|e| (25..=45).contains(&e));
                    let ratio = (a4m - a3m).abs() <= 0.15 * a3m;
                    in_band += band as usize;
                    in_ratio += ratio as usize;
                    lines.push(format!(
                        "  s{s}: conv {:?} mean {a4m:.1} (a3 {a3m:.1}) nonterm {}",
                        r.convergence_episode, r.non_terminal_count
                    ));
                }
                println!("lr {lr}: band {in_band}/{} ratio {in_ratio}/{}", seeds.len(), seeds.len());
                for l in lines {
                    println!("{l}");
                }
            }
        }
        Some("detail") => {
            let d = Dial {
                cap: args[1].parse().unwrap(),
                onset: args[2].parse().unwrap(),
                slope: args[3].parse().unwrap(),
                amp: args[4].parse().unwrap(),
                profile: args[5].parse().unwrap(),
            };
            let seed: u64 = args[6].parse().unwrap();
            let which = args[7].as_str();
            let cfg = StudyConfig { seed, ..StudyConfig::default() };
            use reload::agent::schedule::AlphaSchedule::Fixed;
            let report = {
                let (t, alpha, gamma, sched) = match which {
                    "a1" => (Technique::EpsLow, None, None, false),
                    "a2" => (Technique::EpsHigh, None, None, false),
                    "a3" => (Technique::EpsDecay, None, None, false),
                    "a4" => (Technique::Dqn, None, None, false),
                    "b" => (Technique::Baseline, None, None, false),
                    "c" => (Technique::Random, None, None, false),
                    "alpha01" => (Technique::EpsDecay, Some(Fixed(0.1)), None, false),
                    "gamma01" => (Technique::EpsDecay, None, Some(0.1), false),
                    "gamma09" => (Technique::EpsDecay, None, Some(0.9), false),
                    "gref" => (Technique::EpsDecay, None, Some(0.5), false),
                    "transfer" => (Technique::EpsDecay, None, None, true),
                    other => panic!("unknown series {other}"),
                };
                let mut plan = cfg.plan_for(t);
                plan.actuator = sim_for(d, seed);
                if let Some(a) = alpha {
                    plan.alpha = a;
                }
                if let Some(g) = gamma {
                    plan.gamma = g;
                }
                if sched {
                    plan.schedule = Some(cfg.drift_schedule());
                }
                run_plan(&plan).unwrap()
            };
            println!("{which} seed {seed} conv {:?} mean {:.1} nonterm {}",
                report.convergence_episode, mean_of(&report), report.non_terminal_count);
            println!("{:?}", report.final_users_series());
        }
        Some("scan") => {
            let d = Dial {
                cap: args[1].parse().unwrap(),
                onset: args[2].parse().unwrap(),
                slope: args[3].parse().unwrap(),
                amp: args[4].parse().unwrap(),
                profile: args[5].parse().unwrap(),
            };
            let which = args[6].as_str();
            let lo: u64 = args[7].parse().unwrap();
            let hi: u64 = args[8].parse().unwrap();
            use reload::agent::schedule::AlphaSchedule::Fixed;
            let mut nones = 0;
            let mut convs = Vec::new();
            for seed in lo..hi {
                let cfg = StudyConfig { seed, ..StudyConfig::default() };
                let (t, alpha, gamma) = match which {
                    "a1" => (Technique::EpsLow, None, None),
                    "a2" => (Technique::EpsHigh, None, None),
                    "a3" => (Technique::EpsDecay, None, None),
                    "a4" => (Technique::Dqn, None, None),
                    "alpha01" => (Technique::EpsDecay, Some(Fixed(0.1)), None),
                    "gamma01" => (Technique::EpsDecay, None, Some(0.1)),
                    "gamma09" => (Technique::EpsDecay, None, Some(0.9)),
                    other => panic!("unknown series {other}"),
                };
                let mut plan = cfg.plan_for(t);
                plan.actuator = sim_for(d, seed);
                if let Some(a) = alpha {
                    plan.alpha = a;
                }
                if let Some(g) = gamma {
                    plan.gamma = g;
                }
                let r = run_plan(&plan).unwrap();
                match r.convergence_episode {
                    None => nones += 1,
                    Some(e) => convs.push(e),
                }
            }
            convs.sort_unstable();
            let n = (hi - lo) as usize;
            let in_band = convs.iter().filter(|&&e| (15..=40).contains(&e)).count();
            println!(
                "{which}: None {nones}/{n} ({:.1}%), conv in [15,40] {in_band}/{n} ({:.1}%)",
                100.0 * nones as f64 / n as f64,
                100.0 * in_band as f64 / n as f64
            );
            let mut hist = std::collections::BTreeMap::new();
            for &e in &convs {
                *hist.entry(e / 5 * 5).or_insert(0usize) += 1;
            }
            println!("conv histogram (5-wide bins): {hist:?}");
        }
        Some("hunt") => {
            let d = Dial {
                cap: args[1].parse().unwrap(),
                onset: args[2].parse().unwrap(),
                slope: args[3].parse().unwrap(),
                amp: args[4].parse().unwrap(),
                profile: args[5].parse().unwrap(),
            };
            let lo: u64 = args[6].parse().unwrap();
            let hi: u64 = args[7].parse().unwrap();
            use reload::agent::schedule::AlphaSchedule::Fixed;
            let run_one = |t: Technique, alpha: Option<_>, gamma: Option<f64>, seed: u64| {
                let cfg = StudyConfig { seed, ..StudyConfig::default() };
                let mut plan = cfg.plan_for(t);
                plan.actuator = sim_for(d, seed);
                if let Some(a) = alpha {
                    plan.alpha = a;
                }
                if let Some(g) = gamma {
                    plan.gamma = g;
                }
                run_plan(&plan).unwrap()
            };
            let band = |r: &ExperimentReport| {
                r.convergence_episode.is_some_and(|e| (15..=40).contains(&e))
            };
            let mut s1 = 0u64;
            let mut s2 = 0u64;
            let mut s3 = 0u64;
            let mut s4 = 0u64;
            for seed in lo..hi {
                // stage 1: the rare one
                let a01 = run_one(Technique::EpsDecay, Some(Fixed(0.1)), None, seed);
                if a01.convergence_episode.is_some() {
                    continue;
                }
                s1 += 1;
                let a1 = run_one(Technique::EpsLow, None, None, seed);
                if !band(&a1) {
                    continue;
                }
                s2 += 1;
                let a2 = run_one(Technique::EpsHigh, None, None, seed);
                if !band(&a2) {
                    continue;
                }
                s3 += 1;
                let a3 = run_one(Technique::EpsDecay, None, None, seed);
                let Some(ref_conv) = a3.convergence_episode.filter(|e| (15..=40).contains(e))
                else {
                    continue;
                };
                let g01 = run_one(Technique::EpsDecay, None, Some(0.1), seed);
                if !matches!(g01.convergence_episode, Some(e) if e > ref_conv) {
                    continue;
                }
                let g09 = run_one(Technique::EpsDecay, None, Some(0.9), seed);
                if !matches!(g09.convergence_episode, Some(e) if e > ref_conv) {
                    continue;
                }
                s4 += 1;
                // stage 5: strategies, ordering, savings, transfer
                let a3m = a3.last_window_mean.unwrap_or(f64::NAN);
                let b = run_one(Technique::Baseline, None, None, seed);
                let c = run_one(Technique::Random, None, None, seed);
                let (bm, cm) =
                    (b.last_window_mean.unwrap_or(f64::NAN), c.last_window_mean.unwrap_or(f64::NAN));
                if !(a3m < cm && cm <= bm && (bm - a3m) / bm >= 0.20 && (cm - a3m) / cm >= 0.08) {
                    continue;
                }
                let cfg = StudyConfig { seed, ..StudyConfig::default() };
                let mut tplan = cfg.plan_for(Technique::EpsDecay);
                tplan.actuator = sim_for(d, seed);
                tplan.schedule = Some(cfg.drift_schedule());
                let ta = run_plan(&tplan).unwrap();
                let mut tbplan = cfg.plan_for(Technique::Baseline);
                tbplan.actuator = sim_for(d, seed);
                tbplan.schedule = Some(cfg.drift_schedule());
                let tb = run_plan(&tbplan).unwrap();
                let mut tcplan = cfg.plan_for(Technique::Random);
                tcplan.actuator = sim_for(d, seed);
                tcplan.schedule = Some(cfg.drift_schedule());
                let tc = run_plan(&tcplan).unwrap();
                let tam = ta.last_window_mean.unwrap_or(f64::NAN);
                let tmax = ta.final_users_series().into_iter().max().unwrap_or(0);
                if !(tam < tb.last_window_mean.unwrap_or(f64::NAN)
                    && tam < tc.last_window_mean.unwrap_or(f64::NAN)
                    && (tmax as f64) <= 2.0 * a3m)
                {
                    println!(
                        "seed {seed}: tabular OK (a3 {a3m:.1} b {bm:.1} c {cm:.1}) but transfer fails: tam {tam:.1} tmax {tmax}"
                    );
                    continue;
                }
                s5 += 1;
                // stage 6: DQN learning-rate grid
                let med = {
                    let mut xs: Vec<u64> = [&a1, &a2, &a3]
                        .iter()
                        .map(|r| r.convergence_episode.unwrap())
                        .collect();
                    xs.sort_unstable();
                    xs[1]
                };
                let mut passing_lrs = Vec::new();
                for lr in [0.005, 0.01, 0.02, 0.03, 0.05, 0.08] {
                    let dcfg = StudyConfig { seed, dqn_alpha: lr, ..StudyConfig::default() };
                    let mut dplan = dcfg.plan_for(Technique::Dqn);
                    dplan.actuator = sim_for(d, seed);
                    let a4 = run_plan(&dplan).unwrap();
                    let a4m = a4.last_window_mean.unwrap_or(f64::NAN);
                    let ok = a4
                        .convergence_episode
                        .is_some_and(|e| (30..=45).contains(&e) && e >= med)
                        && (a4m - a3m).abs() <= 0.15 * a3m;
                    if ok {
                        passing_lrs.push(lr);
                    }
                }
                println!(
                    "seed {seed}: ALL TABULAR PASS a3 {a3m:.1} b {bm:.1} c {cm:.1} tam {tam:.1} tmax {tmax} | dqn lrs {passing_lrs:?}"
                );
            }
            println!(
                "hunt [{lo},{hi}): a01-None {s1}, +a1 {s2}, +a2 {s3}, +a3+gammas {s4}, +order+transfer {s5}"
            );
        }
        Some("random_band") => {
            let d = Dial {
                cap: args[1].parse().unwrap(),
                onset: args[2].parse().unwrap(),
                slope: args[3].parse().unwrap(),
                amp: args[4].parse().unwrap(),
                profile: args[5].parse().unwrap(),
            };
            let mut totals = Vec::new();
            for seed in 0..40u64 {
                let cfg = StudyConfig { seed, episodes: 1, ..StudyConfig::default() };
                let mut plan = cfg.plan_for(Technique::Random);
                plan.actuator = sim_for(d, seed);
                let r = run_plan(&plan).unwrap();
                totals.push(r.final_users_series()[0]);
            }
            let lo = totals.iter().min().unwrap();
            let hi = totals.iter().max().unwrap();
            let mean: f64 = totals.iter().sum::<u64>() as f64 / totals.len() as f64;
            println!("random band over 40 runs: [{lo}, {hi}] mean {mean:.1}");
            println!("{totals:?}");
        }
        _ => eprintln!("modes: cfg|grid|detail|random_band"),
    }
}

fn first_word(s: &str) -> &str {
    s.split_whitespace().next().unwrap_or("")
}
