//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Select criteria by number: `cargo test --test acceptance -- 2 5 9`.

mod common;

use std::f64::consts::TAU;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{analytic_element, bessel_j, bessel_signed, minus_i_pow};
use nqkr::cli::{execute, Command, GridAxes, OutputFormat, RunConfig};
use nqkr::observables::{
    averaged_echo, averaged_echo_over, energy_run, fit_decay_rate, fit_localization_length, mean_p2,
    time_averaged_p2, EchoPair, TimeSeries,
};
use nqkr::propagator::Propagator;
use nqkr::spectrum::{argmax_fidelity, build_floquet_matrix, fidelity_profile, mean_ipr, QuasiSpectrum};
use nqkr::sweep::{edge_probability, fit_law, spearman, Law};
use nqkr::{ground_state, probabilities, Complex64, ModelParams};

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

fn within(value: f64, target: f64, rel: f64) -> bool {
    (value - target).abs() <= rel * target.abs()
}

fn mark(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "FAIL"
    }
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

// 1. Unitary limit.
const C1_NORM_DRIFT: f64 = 1e-9;
const C1_EPS_I: f64 = 1e-8;
const C1_RUNTIME_S: f64 = 5.0;

fn unitary_limit() -> Verdict {
    let start = Instant::now();
    let p = ModelParams::new(5.0, 0.0, 0.25, 1024).unwrap();
    let mut drift: f64 = 0.0;
    Propagator::new(&p, false)
        .unwrap()
        .evolve(ground_state(&p).unwrap(), 1000, |_, psi| {
            drift = drift.max(((2.0 * psi.log_true_norm()).exp() - 1.0).abs());
        })
        .unwrap();
    let spectrum = QuasiSpectrum::compute(&p.with_dim(512)).unwrap();
    let max_eps_i = spectrum.max_abs_eps_i();
    let t = secs(start.elapsed());
    let pass = drift < C1_NORM_DRIFT && max_eps_i < C1_EPS_I && t < C1_RUNTIME_S;
    Verdict::new(
        pass,
        format!(
            "max |N-1|={drift:.2e} (<{C1_NORM_DRIFT:e}), max |eps_i| D=512={max_eps_i:.2e} (<{C1_EPS_I:e}), {t:.1}s (<{C1_RUNTIME_S}s)"
        ),
    )
}

// 2. One-kick Bessel oracle.
const C2_TOL: f64 = 1e-10;

fn bessel_oracle() -> Verdict {
    let hbar = 0.25;
    let mut worst_p2: f64 = 0.0;
    let mut worst_amp: f64 = 0.0;
    for ratio in [4.0, 20.0, 40.0] {
        let k = ratio * hbar;
        let p = ModelParams::new(k, 0.0, hbar, 512).unwrap();
        let mut psi = ground_state(&p).unwrap();
        Propagator::new(&p, false).unwrap().step(&mut psi).unwrap();
        worst_p2 = worst_p2.max((mean_p2(&psi, &p).unwrap() - k * k / 2.0).abs());
        let table = bessel_j(Complex64::new(ratio, 0.0), 300);
        for (s, a) in psi.amps().iter().enumerate() {
            let n = p.momentum_index(s);
            let expected =
                Complex64::from_polar(1.0, -hbar * (n * n) as f64 / 2.0) * minus_i_pow(n) * bessel_signed(&table, n);
            worst_amp = worst_amp.max((a - expected).norm());
        }
    }
    Verdict::new(
        worst_p2 < C2_TOL && worst_amp < C2_TOL,
        format!("K/hbar in {{4,20,40}}: max |<p^2>-K^2/2|={worst_p2:.2e}, max amplitude error={worst_amp:.2e} (<{C2_TOL:e})"),
    )
}

// 3. Echo decay rate.
const C3_DIM: usize = 1 << 22;
const C3_KICKS: usize = 30;
const C3_PACKETS: usize = 25;
const C3_RATE_TOL: f64 = 0.25;
const C3_ENSEMBLE_TOL: f64 = 0.05;
const C3_RUNTIME_S: f64 = 600.0;

fn echo_params(lambda: f64) -> ModelParams {
    ModelParams::new(5.0, lambda, 1e-3, C3_DIM).unwrap().with_epsilon(1e-3)
}

fn echo_decay_rate() -> Verdict {
    let p = echo_params(0.0);
    let target = 2.5f64.ln();
    let start = Instant::now();
    let l25 = averaged_echo(&p, C3_KICKS, C3_PACKETS).unwrap();
    let t25 = secs(start.elapsed());
    let fit25 = fit_decay_rate(&l25);

    // The 50-packet centres are the 25-packet centres plus the odd multiples of 2 pi / 50.
    let odd: Vec<f64> = (0..C3_PACKETS).map(|j| TAU * (2 * j + 1) as f64 / (2 * C3_PACKETS) as f64).collect();
    let l_odd = averaged_echo_over(&EchoPair::new(&p).unwrap(), &odd, C3_KICKS).unwrap();
    let mut l50 = TimeSeries::with_capacity(l25.len());
    for ((t, a), (_, b)) in l25.iter().zip(l_odd.iter()) {
        l50.push(t, 0.5 * (a + b));
    }
    let fit50 = fit_decay_rate(&l50);
    match (fit25, fit50) {
        (Ok(f25), Ok(f50)) => {
            let (r25, r50) = (f25.rate(), f50.rate());
            let rate_ok = within(r25, target, C3_RATE_TOL);
            let ens_ok = within(r50, r25, C3_ENSEMBLE_TOL);
            let time_ok = t25 < C3_RUNTIME_S;
            let saturation = l25.values[l25.len() * 3 / 4..].iter().sum::<f64>() / (l25.len() - l25.len() * 3 / 4) as f64;
            Verdict::new(
                rate_ok && ens_ok && time_ok,
                format!(
                    "rate N=25 {r25:.4} over t={}..{} vs ln 2.5={target:.4} +-25% [{}]; N=50 rate {r50:.4} change {:.1}% (<5%) [{}]; saturation {saturation:.2e}; 25-packet run {t25:.0}s (<{C3_RUNTIME_S}s) [{}]",
                    l25.times[f25.window.start],
                    l25.times[f25.window.end - 1],
                    mark(rate_ok),
                    100.0 * (r50 - r25).abs() / r25,
                    mark(ens_ok),
                    mark(time_ok)
                ),
            )
        }
        (a, b) => Verdict::new(false, format!("decay fit failed: N=25 {:?}, N=50 {:?}", a.err(), b.err())),
    }
}

// 4. Echo freezing at |lambda| / hbar = 0.3.
const C4_LAMBDA: f64 = -3e-4;
const C4_KICKS: usize = 50;
const C4_FLOOR: f64 = 0.9;
const C4_RUNTIME_S: f64 = 600.0;

fn echo_freezing() -> Verdict {
    let p = echo_params(C4_LAMBDA);
    let start = Instant::now();
    let series = averaged_echo(&p, C4_KICKS, C3_PACKETS).unwrap();
    let t = secs(start.elapsed());
    let (t_min, l_min) = series
        .iter()
        .fold((0, f64::INFINITY), |acc, (t, l)| if l < acc.1 { (t, l) } else { acc });
    let floor_ok = l_min > C4_FLOOR;
    let time_ok = t < C4_RUNTIME_S;
    Verdict::new(
        floor_ok && time_ok,
        format!(
            "lambda={C4_LAMBDA:e} (|lambda|/hbar=0.3): min L={l_min:.4e} at t={t_min} (>{C4_FLOOR}) [{}], L(50)={:.4e}; {t:.0}s (<{C4_RUNTIME_S}s) [{}]",
            mark(floor_ok),
            series.values[C4_KICKS],
            mark(time_ok)
        ),
    )
}

// 5. Dynamical localization.
const C5_XI_HERMITIAN: f64 = 23.0;
const C5_XI_LOSS: f64 = 15.0;
const C5_XI_TOL: f64 = 0.30;
const C5_RUNTIME_S: f64 = 10.0;

struct Localization {
    xi: f64,
    mean_p2: f64,
    edge: f64,
}

fn localization(lambda: f64) -> Localization {
    let p = ModelParams::new(5.0, lambda, 0.25, 1024).unwrap();
    let run = energy_run(&p, ground_state(&p).unwrap(), 1000).unwrap();
    let dist = probabilities(&run.final_state).unwrap();
    Localization {
        xi: fit_localization_length(&dist, &p).unwrap().localization_length(),
        mean_p2: time_averaged_p2(&run.p2, 1000).unwrap(),
        edge: edge_probability(run.final_state.amps()),
    }
}

fn dynamical_localization() -> Verdict {
    let start = Instant::now();
    let lambdas = [0.0, 0.002, 0.003, -0.003];
    let runs: Vec<Localization> = lambdas.iter().map(|&l| localization(l)).collect();
    let t = secs(start.elapsed());
    let a = within(runs[0].xi, C5_XI_HERMITIAN, C5_XI_TOL);
    let b = within(runs[3].xi, C5_XI_LOSS, C5_XI_TOL) && runs[3].mean_p2 < runs[0].mean_p2;
    let rho = spearman(&lambdas[..3], &[runs[0].mean_p2, runs[1].mean_p2, runs[2].mean_p2]).unwrap();
    let c = rho == -1.0;
    let time_ok = t < C5_RUNTIME_S;
    Verdict::new(
        a && b && c && time_ok,
        format!(
            "(a) xi(0)={:.2} vs 23+-30% [{}]; (b) xi(-0.003)={:.2} vs 15+-30%, <p2>(-0.003)={:.1} < <p2>(0)={:.1} [{}]; (c) <p2> over lambda 0,0.002,0.003 = {:.1},{:.1},{:.1} spearman {rho} [{}]; max edge prob {:.1e}; {t:.1}s (<{C5_RUNTIME_S}s) [{}]",
            runs[0].xi,
            mark(a),
            runs[3].xi,
            runs[3].mean_p2,
            runs[0].mean_p2,
            mark(b),
            runs[0].mean_p2,
            runs[1].mean_p2,
            runs[2].mean_p2,
            mark(c),
            runs.iter().map(|r| r.edge).fold(0.0, f64::max),
            mark(time_ok)
        ),
    )
}

// 6. Fidelity mechanism; 7. norm growth against the top eps_i.
const C6_F_MIN: f64 = 0.9;
const C6_XI_AGREE: f64 = 0.15;
const C6_XI_PAPER: [(f64, f64); 2] = [(0.003, 19.0), (-0.003, 15.0)];
const C6_XI_BAND: f64 = 0.30;
const C6_RUNTIME_S: f64 = 120.0;
const C7_TOL: f64 = 0.05;

struct FidelityRun {
    lambda: f64,
    best_index: usize,
    best_eps_i: f64,
    f_max: f64,
    xi_state: f64,
    xi_mode: f64,
    top_eps_i: f64,
    norm_slope: f64,
    seconds: f64,
}

fn fidelity_run(lambda: f64) -> FidelityRun {
    let start = Instant::now();
    let p = ModelParams::new(5.0, lambda, 0.25, 1024).unwrap();
    let spectrum = QuasiSpectrum::compute(&p).unwrap();
    let mut log_norms = Vec::new();
    let psi = Propagator::new(&p, false)
        .unwrap()
        .evolve(ground_state(&p).unwrap(), 1000, |t, psi| {
            if t >= 500 {
                log_norms.push((t as f64, psi.log_true_norm()));
            }
        })
        .unwrap();
    let best = argmax_fidelity(&fidelity_profile(&psi, &spectrum).unwrap()).unwrap();
    let mode = spectrum.state(best.index).unwrap();
    let xi = |w| fit_localization_length(&probabilities(w).unwrap(), &p).unwrap().localization_length();
    let (xs, ys): (Vec<f64>, Vec<f64>) = log_norms.into_iter().unzip();
    let slope = nqkr::fit::linear_fit(&xs, &ys, 500..1001).unwrap().slope;
    FidelityRun {
        lambda,
        best_index: best.index,
        best_eps_i: best.eps_i,
        f_max: best.fidelity,
        xi_state: xi(&psi),
        xi_mode: xi(&mode),
        top_eps_i: spectrum.modes[0].eps_i,
        norm_slope: slope,
        seconds: secs(start.elapsed()),
    }
}

fn fidelity_mechanism(runs: &[FidelityRun]) -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    let total: f64 = runs.iter().map(|r| r.seconds).sum();
    for (r, &(_, xi_paper)) in runs.iter().zip(&C6_XI_PAPER) {
        let top2 = r.best_index < 2;
        let f_ok = r.f_max > C6_F_MIN;
        let agree = (r.xi_state - r.xi_mode).abs() <= C6_XI_AGREE * r.xi_mode.max(r.xi_state);
        let band = within(r.xi_state, xi_paper, C6_XI_BAND);
        pass &= top2 && f_ok && agree && band;
        parts.push(format!(
            "lambda={}: argmax-F mode rank {} eps_i={:.5} [{}], F_max={:.3} (>{C6_F_MIN}) [{}], xi state {:.2} mode {:.2} (15%) [{}], xi vs {xi_paper}+-30% [{}]",
            r.lambda,
            r.best_index + 1,
            r.best_eps_i,
            mark(top2),
            r.f_max,
            mark(f_ok),
            r.xi_state,
            r.xi_mode,
            mark(agree),
            mark(band)
        ));
    }
    let time_ok = total < C6_RUNTIME_S;
    parts.push(format!("{total:.1}s (<{C6_RUNTIME_S}s) [{}]", mark(time_ok)));
    Verdict::new(pass && time_ok, parts.join("; "))
}

fn norm_growth(runs: &[FidelityRun]) -> Verdict {
    let mut pass = true;
    let parts: Vec<String> = runs
        .iter()
        .map(|r| {
            let ok = within(r.norm_slope, r.top_eps_i, C7_TOL);
            pass &= ok;
            format!(
                "lambda={}: d ln N/dt over [500,1000]={:.5} vs top eps_i={:.5} ({:+.1}%) [{}]",
                r.lambda,
                r.norm_slope,
                r.top_eps_i,
                100.0 * (r.norm_slope - r.top_eps_i) / r.top_eps_i,
                mark(ok)
            )
        })
        .collect();
    Verdict::new(pass, parts.join("; "))
}

// 8. IPR laws.
const C8_ETA: [(f64, f64); 3] = [(0.1, 11.0), (0.25, 4.1), (0.4, 2.6)];
const C8_ETA_TOL: f64 = 0.40;
const C8_CORRELATION: f64 = 0.95;
const C8_ALPHA: f64 = 74.0;
const C8_ALPHA_TOL: f64 = 0.40;
const C8_RUNTIME_S: f64 = 1800.0;

fn ipr_of(k: f64, lambda: f64, hbar: f64) -> f64 {
    let p = ModelParams::new(k, lambda, hbar, 1024).unwrap();
    mean_ipr(&QuasiSpectrum::compute(&p).unwrap()).unwrap()
}

fn ipr_laws() -> Verdict {
    let start = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    let ks: Vec<f64> = (2..=10).map(f64::from).collect();
    for &(hbar, eta) in &C8_ETA {
        let values: Vec<f64> = ks.iter().map(|&k| ipr_of(k, 0.003, hbar)).collect();
        let fit = fit_law(&ks, &values, Law::Quadratic).unwrap();
        let corr_ok = fit.correlation > C8_CORRELATION;
        let eta_ok = within(fit.slope, eta, C8_ETA_TOL);
        pass &= corr_ok && eta_ok;
        parts.push(format!(
            "hbar={hbar}: <I>={:?} corr {:.3} (>{C8_CORRELATION}) [{}], eta {:.2} vs {eta}+-40% [{}]",
            values.iter().map(|v| (v * 10.0).round() / 10.0).collect::<Vec<_>>(),
            fit.correlation,
            mark(corr_ok),
            fit.slope,
            mark(eta_ok)
        ));
    }
    let lambdas: Vec<f64> = (1..=10).map(|i| 1e-3 * i as f64).collect();
    let values: Vec<f64> = lambdas.iter().map(|&l| ipr_of(5.0, l, 0.25)).collect();
    let decreasing = values.windows(2).all(|w| w[1] < w[0]);
    let alpha = -fit_law(&lambdas, &values, Law::Linear).unwrap().slope;
    let alpha_ok = within(alpha, C8_ALPHA, C8_ALPHA_TOL);
    pass &= decreasing && alpha_ok;
    parts.push(format!(
        "K=5 hbar=0.25 <I> over lambda 0.001..0.01={:?} strictly decreasing [{}], alpha {alpha:.1} vs 74+-40% [{}]",
        values.iter().map(|v| (v * 100.0).round() / 100.0).collect::<Vec<_>>(),
        mark(decreasing),
        mark(alpha_ok)
    ));
    let t = secs(start.elapsed());
    let time_ok = t < C8_RUNTIME_S;
    parts.push(format!("{t:.0}s (<{C8_RUNTIME_S}s) [{}]", mark(time_ok)));
    Verdict::new(pass && time_ok, parts.join("; "))
}

// 9. Floquet matrix against the Bessel form.
const C9_TOL: f64 = 1e-10;
const C9_TUPLES: [(f64, f64, f64); 5] = [
    (1.3, 0.004, 0.37),
    (2.7, -0.01, 0.6),
    (0.8, 0.02, 0.15),
    (2.4, 0.015, 0.25),
    (2.2, -0.003, 0.29),
];

fn matrix_oracle() -> Verdict {
    let dim = 64;
    let mut worst: f64 = 0.0;
    let mut compared = 0;
    for &(k, lambda, hbar) in &C9_TUPLES {
        let p = ModelParams::new(k, lambda, hbar, dim).unwrap();
        let u = build_floquet_matrix(&p).unwrap();
        let table = bessel_j(Complex64::new(k, lambda) / hbar, dim);
        for row in 0..dim {
            for col in 0..dim {
                let (m, n) = (p.momentum_index(row), p.momentum_index(col));
                // Entries beyond half the basis width alias onto the opposite edge.
                if (m - n).unsigned_abs() as usize > dim / 2 {
                    continue;
                }
                compared += 1;
                worst = worst.max((u[(row, col)] - analytic_element(hbar, dim, m, n, &table, false)).norm());
            }
        }
    }
    Verdict::new(
        worst <= C9_TOL,
        format!("D=64, 5 tuples, {compared} entries with |m-n|<=D/2: max error {worst:.2e} (<={C9_TOL:e})"),
    )
}

// 10. Sweep determinism across worker counts.
const C10_RUNTIME_S: f64 = 120.0;

fn sweep_determinism() -> Verdict {
    let start = Instant::now();
    let render = |workers: usize| {
        let mut config = RunConfig::new(Command::SweepP2, ModelParams::default());
        config.grid = Some(GridAxes {
            k_count: 11,
            lambda_count: 11,
            ..GridAxes::default()
        });
        config.workers = workers;
        let report = execute(&config).unwrap();
        (report.table.render(OutputFormat::Csv, &config.meta()), report.summary)
    };
    let (one, summary) = render(1);
    let (eight, _) = render(8);
    let t = secs(start.elapsed());
    let identical = one.as_bytes() == eight.as_bytes();
    let time_ok = t < C10_RUNTIME_S;
    Verdict::new(
        identical && time_ok,
        format!(
            "11x11 sweep-p2, 1 vs 8 workers: {} bytes, identical={identical}; {summary}; {t:.0}s (<{C10_RUNTIME_S}s) [{}]",
            one.len(),
            mark(time_ok)
        ),
    )
}

fn main() -> ExitCode {
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let wanted = |n: u32| selected.is_empty() || selected.contains(&n);
    let names = [
        "unitary limit",
        "one-kick Bessel oracle",
        "echo decay rate",
        "echo freezing",
        "dynamical localization",
        "fidelity mechanism",
        "norm growth vs top eps_i",
        "IPR laws",
        "Floquet matrix oracle",
        "sweep determinism",
    ];

    let mut fidelity_runs: Option<Vec<FidelityRun>> = None;
    let mut results = Vec::new();
    for n in 1..=10u32 {
        if !wanted(n) {
            continue;
        }
        let start = Instant::now();
        let verdict = match n {
            1 => unitary_limit(),
            2 => bessel_oracle(),
            3 => echo_decay_rate(),
            4 => echo_freezing(),
            5 => dynamical_localization(),
            6 | 7 => {
                let runs =
                    fidelity_runs.get_or_insert_with(|| C6_XI_PAPER.iter().map(|&(l, _)| fidelity_run(l)).collect());
                if n == 6 {
                    fidelity_mechanism(runs)
                } else {
                    norm_growth(runs)
                }
            }
            8 => ipr_laws(),
            9 => matrix_oracle(),
            _ => sweep_determinism(),
        };
        let line = format!(
            "criterion {n:>2} {:<26} {} ({:.1}s) {}",
            names[n as usize - 1],
            if verdict.pass { "PASS" } else { "FAIL" },
            secs(start.elapsed()),
            verdict.detail
        );
        println!("{line}");
        results.push(verdict.pass);
    }
    let passed = results.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
