//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::{shipped_code, FloodingReference};
use gsbp_core::channel::ChannelConfig;
use gsbp_core::decoder::{check_node_kernel, CheckScratch, DecoderState, LLR_MAX};
use gsbp_core::ga::{
    iterations_to_convergence, ln_phi_exact, phi, phi_inverse, stable_mu_cap, threshold_search,
    GaConfig, GaState, PhiKernel, ThresholdOptions, DEFAULT_MU_CAP,
};
use gsbp_core::rng::{substream, Domain};
use gsbp_core::schedule::{
    flooding_schedule, iteration_budget, make_disjoint_schedule, make_nondisjoint_schedule,
};
use gsbp_core::sim::{run_point, Fairness, SimConfig, SnrPoint};
use gsbp_core::tanner::random_regular_graph;
use gsbp_core::{decode, decode_regrouped, DegreeDistribution, ScheduleSpec};
use rand::seq::SliceRandom;
use rand::Rng;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within(value: usize, target: usize, tol: f64) -> bool {
    (value as f64 - target as f64).abs() <= tol * target as f64
}

struct TableRow {
    dv: usize,
    dc: usize,
    ebn0: f64,
    groups: [usize; 3],
    bp: usize,
    gsbp: [usize; 3],
    ndgsbp: [usize; 3],
}

const TABLE: [TableRow; 2] = [
    TableRow {
        dv: 3,
        dc: 6,
        ebn0: 1.163,
        groups: [4, 12, 36],
        bp: 422,
        gsbp: [293, 262, 251],
        ndgsbp: [240, 208, 196],
    },
    TableRow {
        dv: 4,
        dc: 6,
        ebn0: 1.730,
        groups: [4, 16, 34],
        bp: 632,
        gsbp: [438, 386, 376],
        ndgsbp: [368, 324, 317],
    },
];

fn table_configs(row: &TableRow) -> Vec<GaConfig> {
    let dd = DegreeDistribution::regular(row.dv, row.dc).unwrap();
    let mut specs = vec![ScheduleSpec::flooding()];
    specs.extend(row.groups.iter().map(|&g| ScheduleSpec::disjoint(g)));
    specs.extend(
        row.groups
            .iter()
            .map(|&g| ScheduleSpec::non_disjoint(g, 0.4)),
    );
    specs
        .into_iter()
        .map(|s| GaConfig::at_ebn0(dd.clone(), s, row.ebn0))
        .collect()
}

fn criterion_1() -> Outcome {
    let all: Vec<GaConfig> = TABLE.iter().flat_map(table_configs).collect();
    let cap = match stable_mu_cap(&all, 100.0, 1e4) {
        Ok(cap) => cap,
        Err(e) => return outcome(false, format!("cap sweep failed: {e}")),
    };
    let mut pass = cap == DEFAULT_MU_CAP;
    let mut detail = vec![format!("mu_cap {cap}")];
    for row in &TABLE {
        let counts: Vec<Option<usize>> = table_configs(row)
            .iter()
            .map(|c| {
                let mut c = c.clone();
                c.mu_cap = cap;
                iterations_to_convergence(&c)
                    .ok()
                    .and_then(|o| o.iterations())
            })
            .collect();
        let Some(counts) = counts.into_iter().collect::<Option<Vec<usize>>>() else {
            return outcome(
                false,
                format!("({},{}) has a non-converging cell", row.dv, row.dc),
            );
        };
        let (bp, gs, nd) = (counts[0], &counts[1..4], &counts[4..7]);
        let expected: Vec<usize> = std::iter::once(row.bp)
            .chain(row.gsbp)
            .chain(row.ndgsbp)
            .collect();
        let close = counts
            .iter()
            .zip(&expected)
            .all(|(&c, &p)| within(c, p, 0.15));
        let ordered = (0..3).all(|k| nd[k] < gs[k] && gs[k] < bp);
        let decreasing = gs.windows(2).all(|w| w[1] < w[0]) && nd.windows(2).all(|w| w[1] < w[0]);
        pass &= close && ordered && decreasing;
        detail.push(format!(
            "({},{}) BP {bp}/{} GSBP {gs:?}/{:?} NDGSBP {nd:?}/{:?}",
            row.dv, row.dc, row.bp, row.gsbp, row.ndgsbp
        ));
    }
    outcome(pass, detail.join("; "))
}

fn criterion_2() -> Outcome {
    let opts = ThresholdOptions::default();
    let mut pass = true;
    let mut detail = Vec::new();
    for (dv, dc, target) in [(3, 6, 1.163), (4, 6, 1.730)] {
        let dd = DegreeDistribution::regular(dv, dc).unwrap();
        let specs = [
            ScheduleSpec::flooding(),
            ScheduleSpec::disjoint(12),
            ScheduleSpec::non_disjoint(12, 0.4),
        ];
        let found: Result<Vec<f64>, _> = specs
            .iter()
            .map(|&s| threshold_search(&dd, s, &opts))
            .collect();
        let Ok(found) = found else {
            return outcome(false, format!("({dv},{dc}) threshold search failed"));
        };
        pass &= (found[0] - target).abs() <= 0.01;
        pass &= found[1..].iter().all(|t| (t - found[0]).abs() <= 0.005);
        detail.push(format!(
            "({dv},{dc}) BP {:.4} GSBP {:.4} NDGSBP {:.4} dB",
            found[0], found[1], found[2]
        ));
    }
    outcome(pass, detail.join("; "))
}

fn criterion_3() -> Outcome {
    let g = random_regular_graph(60, 3, 6, 2024).unwrap();
    let mut worst = 0.0f64;
    let mut bits_agree = true;
    let mut total_iterations = 0;
    let mut stops_agree = true;
    for frame in 0..20 {
        let llr = ChannelConfig::from_ebn0(1.0 + 0.1 * frame as f64, 0.5, 9)
            .unwrap()
            .transmit_all_zero(60, frame);
        let schedule = flooding_schedule(&g);
        let mut state = DecoderState::new(&g, &llr).unwrap();
        let mut reference = FloodingReference::new(g.check_lists(), 60, &llr);
        let mut iterations = 0;
        // follow the decoder: stop once the hard decisions satisfy every check
        while iterations < 50 && (iterations == 0 || g.syndrome_weight(state.hard_decision()) != 0)
        {
            iterations += 1;
            state.iterate(&g, &schedule);
            let bits = reference.iterate();
            bits_agree &= state.hard_decision() == bits.as_slice();
            for (&(m, n), &c2v) in &reference.c2v {
                let e = g.edge(m, n).unwrap();
                worst = worst.max((state.c2v()[e] - c2v).abs());
                worst = worst.max((state.v2c()[e] - reference.v2c[&(m, n)]).abs());
            }
        }
        total_iterations += iterations;
        stops_agree &= decode(&g, &schedule, &llr, 50)
            .map(|out| out.iterations == iterations)
            .unwrap_or(false);
    }
    let mut identical = true;
    for seed in 0..20 {
        let gs = make_disjoint_schedule(&g, 6, seed).unwrap();
        let nd = make_nondisjoint_schedule(&g, 6, 0.0, seed).unwrap();
        let llr = ChannelConfig::from_ebn0(1.5, 0.5, seed)
            .unwrap()
            .transmit_all_zero(60, seed);
        identical &= gs.groups == nd.groups
            && decode(&g, &gs, &llr, 50).unwrap() == decode(&g, &nd, &llr, 50).unwrap();
    }
    outcome(
        worst <= 1e-12 && bits_agree && stops_agree && identical,
        format!("max message gap {worst:.2e} over 20 decodes ({total_iterations} iterations, same stopping point {stops_agree}); r=0 NDGSBP identical to GSBP: {identical}"),
    )
}

fn criterion_4() -> Outcome {
    let mut rng = substream(4, Domain::Channel, 0);
    let mut scratch = CheckScratch::default();
    let (mut sign_ok, mut magnitude_ok, mut worst_perm) = (true, true, 0.0f64);
    for _ in 0..10_000 {
        let d = rng.random_range(2..=20);
        let inputs: Vec<f64> = (0..d)
            .map(|_| match rng.random_range(0..10) {
                0 => rng.random_range(-1e-6..1e-6),
                1 => [0.0, LLR_MAX, -LLR_MAX, 1e3][rng.random_range(0..4)],
                _ => rng.random_range(-40.0..40.0),
            })
            .collect();
        let mut out = vec![0.0; d];
        check_node_kernel(&inputs, &mut out, &mut scratch);
        for (k, &value) in out.iter().enumerate() {
            let others = inputs
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != k)
                .map(|(_, x)| x.clamp(-LLR_MAX, LLR_MAX));
            let negatives = others.clone().filter(|&x| x < 0.0).count();
            let smallest = others.map(f64::abs).fold(f64::INFINITY, f64::min);
            magnitude_ok &= value.abs() <= smallest;
            sign_ok &= value == 0.0 || (value < 0.0) == (negatives % 2 == 1);
        }
        let mut order: Vec<usize> = (0..d).collect();
        order.shuffle(&mut rng);
        let permuted: Vec<f64> = order.iter().map(|&k| inputs[k]).collect();
        let mut out_perm = vec![0.0; d];
        check_node_kernel(&permuted, &mut out_perm, &mut scratch);
        for (slot, &k) in order.iter().enumerate() {
            worst_perm = worst_perm.max((out_perm[slot] - out[k]).abs());
        }
    }
    let g = random_regular_graph(60, 3, 6, 44).unwrap();
    let mut syndrome_ok = true;
    let mut converged = 0;
    for case in 0..10_000u64 {
        let spec = [
            ScheduleSpec::flooding(),
            ScheduleSpec::disjoint(5),
            ScheduleSpec::non_disjoint(5, 0.4),
        ][case as usize % 3];
        let ebn0 = rng.random_range(-1.0..4.0);
        let llr = ChannelConfig::from_ebn0(ebn0, 0.5, case)
            .unwrap()
            .transmit_all_zero(60, case);
        let mut srng = substream(case, Domain::Schedule, 0);
        let s = spec.build(g.n_checks(), &mut srng).unwrap();
        let out = decode_regrouped(&g, &s, &llr, 20, &mut srng).unwrap();
        if out.converged {
            converged += 1;
            syndrome_ok &= g.syndrome_weight(&out.bits) == 0;
        } else {
            syndrome_ok &= g.syndrome_weight(&out.bits) != 0;
        }
    }
    outcome(
        sign_ok && magnitude_ok && worst_perm <= 1e-12 && syndrome_ok,
        format!(
            "sign {sign_ok}, magnitude {magnitude_ok}, permutation gap {worst_perm:.1e} (10^4 cases); \
             converged flag matches syndrome in 10^4 decodes ({converged} converged): {syndrome_ok}"
        ),
    )
}

fn criterion_5() -> Outcome {
    let spec = ScheduleSpec::non_disjoint(12, 0.4);
    let s = spec
        .build(252, &mut substream(5, Domain::Schedule, 0))
        .unwrap();
    let budget = iteration_budget(252, 1000, &s);
    outcome(
        budget == 627 && s.group_size == 34,
        format!("N_G = {}, budget = {budget}", s.group_size),
    )
}

fn criterion_6() -> Outcome {
    let g = shipped_code();
    let run = |spec: ScheduleSpec| -> SnrPoint {
        let mut cfg = SimConfig::new(spec, vec![2.0]);
        cfg.max_iterations = 50;
        cfg.fairness = Fairness::Budgeted;
        cfg.min_frame_errors = 100;
        cfg.max_frames = 1_000_000;
        cfg.seed_channel = 2024;
        cfg.seed_schedule = 7;
        run_point(&g, &cfg, 2.0).expect("simulation")
    };
    let bp = run(ScheduleSpec::flooding());
    let gs = run(ScheduleSpec::disjoint(12));
    let nd = run(ScheduleSpec::non_disjoint(12, 0.4));
    let its = |p: &SnrPoint| p.mean_iterations_converged.unwrap_or(f64::NAN);
    let fer_ordered = nd.fer <= gs.fer && gs.fer <= bp.fer;
    let its_ordered = its(&nd) < its(&gs) && its(&gs) < its(&bp);
    let slack = 252 + 11 * 14;
    let fair = nd.max_check_updates as usize <= 50 * 252 + slack;
    let line = |name: &str, p: &SnrPoint| {
        format!(
            "{name} FER {:.4} ({}/{}, limit {}) iters {:.2}",
            p.fer,
            p.frame_errors,
            p.frames,
            p.iteration_limit,
            its(p)
        )
    };
    outcome(
        fer_ordered && its_ordered && fair,
        format!(
            "{}; {}; {}; FER ordered {fer_ordered}, iterations ordered {its_ordered}, work within budget {fair}",
            line("NDGSBP", &nd),
            line("GSBP", &gs),
            line("BP", &bp)
        ),
    )
}

fn criterion_7() -> Outcome {
    let ch = ChannelConfig::from_ebn0(1.163, 0.5, 31).unwrap();
    let samples: Vec<f64> = (0..1000)
        .flat_map(|frame| ch.transmit_all_zero(1000, frame))
        .collect();
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let (m_err, v_err) = (
        mean / (2.0 / ch.sigma2) - 1.0,
        var / (4.0 / ch.sigma2) - 1.0,
    );
    outcome(
        m_err.abs() < 0.005 && v_err.abs() < 0.015,
        format!(
            "mean error {:+.3}%, variance error {:+.3}% over 10^6 samples",
            100.0 * m_err,
            100.0 * v_err
        ),
    )
}

fn criterion_8() -> Outcome {
    let unit = phi(0.0).map(|v| v == 1.0).unwrap_or(false);
    let mut monotone = true;
    let mut worst_round = 0.0f64;
    let mut prev = ln_phi_exact(1e-6);
    for k in 1..=4000 {
        let mu = 1e-6 * 10f64.powf(k as f64 * 0.002);
        let v = ln_phi_exact(mu);
        monotone &= v < prev;
        prev = v;
        if k % 8 == 0 {
            let y = v.exp();
            if y > 0.0 {
                let back = phi_inverse(y).unwrap();
                worst_round = worst_round.max((back - mu).abs() / mu);
            }
        }
    }
    let dd = DegreeDistribution::regular(3, 6).unwrap();
    let mut cfg = GaConfig::at_ebn0(dd, ScheduleSpec::flooding(), 1.2);
    cfg.kernel = PhiKernel::Exact;
    let model = cfg.kernel.model();
    let mut state = GaState::new(&cfg);
    let mut mu_c = 0.0;
    let mut worst_iter = 0.0f64;
    for _ in 0..50 {
        let s = model.ln_phi(cfg.mu0 + 2.0 * mu_c).exp();
        mu_c = model.ln_phi_inverse((1.0 - (1.0 - s).powi(5)).ln());
        let engine = state.step(&cfg).unwrap();
        worst_iter = worst_iter.max((engine - mu_c).abs() / mu_c.max(1.0));
    }
    outcome(
        unit && monotone && worst_round <= 1e-6 && worst_iter <= 1e-9,
        format!(
            "Φ(0)=1 {unit}, strictly decreasing {monotone}, worst round trip {worst_round:.1e}, \
             G=1 vs textbook recursion {worst_iter:.1e} over 50 iterations"
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("GA iteration counts", criterion_1),
        ("GA threshold equality", criterion_2),
        ("schedule degeneracy oracles", criterion_3),
        ("check kernel properties", criterion_4),
        ("fair iteration budget", criterion_5),
        ("Monte-Carlo ordering at 2.0 dB", criterion_6),
        ("channel LLR consistency", criterion_7),
        ("GA numerics", criterion_8),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = run();
        let verdict = if result.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!result.pass);
        println!(
            "criterion {} {verdict} {name} [{:.1}s]: {}",
            k + 1,
            start.elapsed().as_secs_f64(),
            result.detail
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
