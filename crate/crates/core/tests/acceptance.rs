//! Acceptance suite. Every criterion runs even if an earlier one fails;
//! each prints one PASS/FAIL line with its tolerance and time budget, and
//! the process exits non-zero if any failed.

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use chainlab::experiment::{cmd_report, cmd_run, sha256_hex, simulate_conditions, Condition, Overrides};
use chainlab::kernels::{
    compose_round_trip, DecodingConfig, FiniteKernel, Kernel, Language, RandomLogits, ScriptFallback, ScriptedKernel,
    StepContext,
};
use chainlab::markov::{
    compose_matrices, entropy, kl_divergence, mixture_entropy_bounds, random_simplex, random_stochastic,
    recurrent_classes, residual, sinkhorn, stationary, Distribution, TransitionMatrix,
};
use chainlab::metrics::{bleu, meteor_lite, normalized_diversity_ratio, rouge1, tfidf_cosine, tokenize, Rouge1};
use chainlab::runner::{chain_rng, recurrence_from_keys, recurrence_stats, run_chain, BatchConfig, ChainSetup};
use chainlab::stats::{
    correlation_p_value, length_diversity_table, linear_fit, pearson_with_p, LengthDiversityInput, PairedSample,
};
use chainlab::textunit::{Paragraph, Seed, Sentence};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn sentence(s: &str) -> Sentence {
    Sentence::new(s).unwrap()
}

// 1 ------------------------------------------------------------------

fn recurrence_semantics() -> Check {
    let kernel = ScriptedKernel::from_strs(
        &[
            ("We begin with a prologue.", "We start with a prologue."),
            ("We start with a prologue.", "We begin with a prologue."),
        ],
        ScriptFallback::Error,
    )
    .map_err(|e| e.to_string())?;
    let traj = run_chain(
        &kernel,
        &sentence("We begin with a prologue."),
        &ChainSetup::new(6, DecodingConfig::greedy()),
        &mut chain_rng(0, 0),
    )
    .map_err(|e| e.to_string())?;
    let r = recurrence_stats(&traj).map_err(|e| e.to_string())?;
    let got = (r.tau, r.cycle_length, r.distinct_count);
    ensure(got == (2, Some(2), 2), || format!("got (tau, cycle, U) = {got:?}"))?;
    Ok(format!("tau={} cycle={:?} U={}", r.tau, r.cycle_length, r.distinct_count))
}

// 2 ------------------------------------------------------------------

/// Quadratic scan: first t whose key equals any earlier key.
fn tau_oracle(keys: &[String]) -> (usize, usize) {
    let tau = (1..keys.len())
        .find(|&t| (0..t).any(|j| keys[j] == keys[t]))
        .unwrap_or(keys.len());
    let distinct = (0..keys.len()).filter(|&t| (0..t).all(|j| keys[j] != keys[t])).count();
    (tau, distinct)
}

fn recurrence_conventions() -> Check {
    let identity = run_chain(
        &ScriptedKernel::identity(),
        &sentence("Nothing changes here."),
        &ChainSetup::new(50, DecodingConfig::greedy()),
        &mut chain_rng(0, 0),
    )
    .map_err(|e| e.to_string())?;
    let r = recurrence_stats(&identity).map_err(|e| e.to_string())?;
    ensure((r.tau, r.distinct_count) == (1, 1), || format!("identity: tau={} U={}", r.tau, r.distinct_count))?;

    let states: Vec<String> = (0..=50).map(|i| format!("Sentence number {i}.")).collect();
    let pairs: Vec<(&str, &str)> = states.windows(2).map(|w| (w[0].as_str(), w[1].as_str())).collect();
    let chain = ScriptedKernel::from_strs(&pairs, ScriptFallback::Error).map_err(|e| e.to_string())?;
    let distinct = run_chain(
        &chain,
        &sentence(&states[0]),
        &ChainSetup::new(50, DecodingConfig::greedy()),
        &mut chain_rng(0, 0),
    )
    .map_err(|e| e.to_string())?;
    let r = recurrence_stats(&distinct).map_err(|e| e.to_string())?;
    ensure((r.tau, r.distinct_count) == (51, 51), || format!("all distinct: tau={} U={}", r.tau, r.distinct_count))?;

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for case in 0..1000 {
        let len = rng.gen_range(1..=60);
        let alphabet = rng.gen_range(1..=70);
        let keys: Vec<String> = (0..len).map(|_| format!("k{}", rng.gen_range(0..alphabet))).collect();
        let fast = recurrence_from_keys(&keys, rng.gen());
        let slow = tau_oracle(&keys);
        ensure((fast.tau, fast.distinct_count) == slow, || {
            format!("case {case}: streaming ({}, {}) vs oracle {slow:?}", fast.tau, fast.distinct_count)
        })?;
    }
    Ok("identity (1,1); distinct (51,51); 1000/1000 fuzzed match".into())
}

// 3 ------------------------------------------------------------------

fn dist(w: Vec<f64>) -> Distribution {
    Distribution::from_weights(w).unwrap()
}

fn kl_contraction() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = f64::NEG_INFINITY;
    for case in 0..1000 {
        let m = rng.gen_range(2..=50);
        let mut xw = random_simplex(m, &mut rng);
        // Some X with holes in the support.
        if case % 3 == 0 {
            for v in xw.iter_mut().take(m / 2) {
                *v = 0.0;
            }
            let s: f64 = xw.iter().sum();
            xw.iter_mut().for_each(|v| *v /= s);
        }
        let x = dist(xw);
        let y = dist(random_simplex(m, &mut rng));
        let p = random_stochastic(m, &mut rng);
        let before = kl_divergence(&x, &y).map_err(|e| e.to_string())?;
        let after = kl_divergence(&x.apply(&p).unwrap(), &y.apply(&p).unwrap()).map_err(|e| e.to_string())?;
        worst = worst.max(after - before);
        ensure(after <= before + 1e-9, || format!("case {case} (m={m}): {after} > {before}"))?;
    }
    Ok(format!("0 violations; max(after - before) = {worst:.3e}"))
}

// 4 ------------------------------------------------------------------

fn stabilization() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_res = 0.0f64;
    for case in 0..100 {
        let m = rng.gen_range(2..=50);
        let p = random_stochastic(m, &mut rng);
        let pi = stationary(&p, 1e-14, 100_000).map_err(|e| e.to_string())?;
        let res = residual(&pi, &p);
        worst_res = worst_res.max(res);
        ensure(res < 1e-8, || format!("case {case}: residual {res:e}"))?;
        let mut x = dist(random_simplex(m, &mut rng));
        let mut prev = kl_divergence(&x, &pi).unwrap();
        for n in 1..=100 {
            x = x.apply(&p).unwrap();
            let d = kl_divergence(&x, &pi).unwrap();
            ensure(d <= prev + 1e-9, || format!("case {case}: KL rose at n={n}: {prev} -> {d}"))?;
            prev = d;
        }
    }
    Ok(format!("100/100 monotone; max residual {worst_res:.2e}"))
}

// 5 ------------------------------------------------------------------

fn entropy_monotonicity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for case in 0..500 {
        let m = rng.gen_range(2..=30);
        let p = sinkhorn(random_stochastic(m, &mut rng).rows(), 1e-12, 100_000).map_err(|e| e.to_string())?;
        ensure(p.is_doubly_stochastic(1e-10), || format!("case {case}: not doubly stochastic"))?;
        let x = dist(random_simplex(m, &mut rng));
        let (h0, h1) = (entropy(&x), entropy(&x.apply(&p).unwrap()));
        ensure(h1 >= h0 - 1e-9, || format!("case {case}: H fell {h0} -> {h1}"))?;
    }
    // Witness: everything is sent to state 0.
    let witness = TransitionMatrix::from_rows(vec![vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap();
    let x = dist(vec![0.5, 0.5]);
    let (h0, h1) = (entropy(&x), entropy(&x.apply(&witness).unwrap()));
    ensure(!witness.is_doubly_stochastic(1e-9) && h1 < h0, || format!("witness: {h0} -> {h1}"))?;
    Ok(format!("500/500 non-decreasing; witness H {h0:.4} -> {h1:.4} nats"))
}

// 6 ------------------------------------------------------------------

fn mixture_sandwich() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let bs = [0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0];
    let mut cases = 0;
    while cases < 1000 {
        let m = rng.gen_range(2..=40);
        let p = random_stochastic(m, &mut rng);
        let x = dist(random_simplex(m, &mut rng));
        for &b in &bs {
            let bounds = mixture_entropy_bounds(&x, &p, b).map_err(|e| e.to_string())?;
            let h = 0.0 - [b, 1.0 - b].iter().filter(|&&v| v > 0.0).map(|v| v * v.ln()).sum::<f64>();
            ensure(
                bounds.lower <= bounds.mixture_entropy + 1e-9 && bounds.mixture_entropy <= bounds.lower + h + 1e-9,
                || format!("m={m} b={b}: {bounds:?}"),
            )?;
            cases += 1;
        }
    }
    Ok(format!("{cases}/{cases} inside the bounds"))
}

// 7 ------------------------------------------------------------------

/// Recurrent classes and transient states by transitive closure.
fn classes_oracle(p: &TransitionMatrix) -> (Vec<Vec<usize>>, Vec<usize>) {
    let m = p.n_rows();
    let mut reach = vec![vec![false; m]; m];
    for (i, row) in reach.iter_mut().enumerate() {
        row[i] = true;
        for (j, v) in row.iter_mut().enumerate() {
            *v |= p.get(i, j) > 0.0;
        }
    }
    for k in 0..m {
        for i in 0..m {
            for j in 0..m {
                if reach[i][k] && reach[k][j] {
                    reach[i][j] = true;
                }
            }
        }
    }
    let recurrent = |i: usize| (0..m).all(|j| !reach[i][j] || reach[j][i]);
    let mut classes: Vec<Vec<usize>> = Vec::new();
    let mut transient = Vec::new();
    for i in 0..m {
        if !recurrent(i) {
            transient.push(i);
        } else if !classes.iter().any(|c| reach[c[0]][i]) {
            classes.push((i..m).filter(|&j| reach[i][j]).collect());
        }
    }
    (classes, transient)
}

fn agrees(p: &TransitionMatrix) -> bool {
    let got = recurrent_classes(p, 0.0);
    (got.recurrent_classes, got.transient_states) == classes_oracle(p)
}

fn block_form() -> Check {
    let mut deterministic = 0usize;
    for m in 1..=6usize {
        let total = m.pow(m as u32);
        for code in 0..total {
            let mut c = code;
            let rows: Vec<Vec<f64>> = (0..m)
                .map(|_| {
                    let mut r = vec![0.0; m];
                    r[c % m] = 1.0;
                    c /= m;
                    r
                })
                .collect();
            let p = TransitionMatrix::from_rows(rows).unwrap();
            ensure(agrees(&p), || format!("deterministic map m={m} code={code}"))?;
            deterministic += 1;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in 0..5000 {
        let m = rng.gen_range(1..=6);
        let density = rng.gen_range(0.1..0.6);
        let rows: Vec<Vec<f64>> = (0..m)
            .map(|_| {
                let mut r: Vec<f64> = (0..m).map(|_| if rng.gen_bool(density) { rng.gen::<f64>() + 0.01 } else { 0.0 }).collect();
                if r.iter().all(|&v| v == 0.0) {
                    r[rng.gen_range(0..m)] = 1.0;
                }
                let s: f64 = r.iter().sum();
                r.iter_mut().for_each(|v| *v /= s);
                r
            })
            .collect();
        let p = TransitionMatrix::from_rows(rows).unwrap();
        ensure(agrees(&p), || format!("random sparse case {case} (m={m})"))?;
    }
    Ok(format!("{deterministic} exhaustive maps + 5000 sparse matrices, 100% agreement"))
}

// 8 ------------------------------------------------------------------

fn round_trip_composition() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let en: Vec<Sentence> = (0..4).map(|i| sentence(&format!("English sentence {i}."))).collect();
    let fr: Vec<Sentence> = (0..3).map(|i| sentence(&format!("Phrase française {i}."))).collect();
    let mut logits = |r: usize, c: usize| -> Vec<Vec<f64>> {
        (0..r).map(|_| (0..c).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect()
    };
    let fwd = FiniteKernel::rectangular(en.clone(), fr.clone(), logits(4, 3))
        .map_err(|e| e.to_string())?
        .with_languages(Language::en(), Language::new("fr"));
    let bwd = FiniteKernel::rectangular(fr, en.clone(), logits(3, 4))
        .map_err(|e| e.to_string())?
        .with_languages(Language::new("fr"), Language::en());
    let cfg = DecodingConfig::sampling(0.9, 0.95);
    let product = compose_matrices(
        &fwd.transition_matrix(&cfg).map_err(|e| e.to_string())?,
        &bwd.transition_matrix(&cfg).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    let rt = compose_round_trip(Arc::new(fwd), Arc::new(bwd)).map_err(|e| e.to_string())?;

    let index: HashMap<&str, usize> = en.iter().enumerate().map(|(i, s)| (s.key(), i)).collect();
    const DRAWS: usize = 20_000;
    let mut draw_rng = ChaCha8Rng::seed_from_u64(80);
    let mut worst = 0.0f64;
    for (i, src) in en.iter().enumerate() {
        let mut counts = [0usize; 4];
        for t in 0..DRAWS {
            let step = rt
                .step(src, &mut StepContext::new(&cfg, &mut draw_rng).at(t + 1))
                .map_err(|e| e.to_string())?;
            counts[index[step.output.key()]] += 1;
        }
        for (j, &c) in counts.iter().enumerate() {
            let p = product.get(i, j);
            let emp = c as f64 / DRAWS as f64;
            let sigma = (p * (1.0 - p) / DRAWS as f64).sqrt();
            let z = if sigma > 0.0 { (emp - p).abs() / sigma } else if c == 0 { 0.0 } else { f64::INFINITY };
            worst = worst.max(z);
            ensure(z <= 3.0, || format!("entry ({i},{j}): empirical {emp} vs {p}, {z:.2} sigma"))?;
        }
    }
    Ok(format!("{} draws per row, 16 entries, max deviation {worst:.2} sigma", DRAWS))
}

// 9 ------------------------------------------------------------------

fn decoding_regimes() -> Check {
    let kernel = FiniteKernel::random(RandomLogits::new(200, 42)).map_err(|e| e.to_string())?;
    let seeds: Vec<Seed> = (0..200)
        .map(|i| Seed {
            doc_id: format!("state-{i}"),
            state: kernel.sources()[i % kernel.len()].clone(),
        })
        .collect();
    let mut conds = vec![
        Condition {
            label: "greedy".into(),
            decoding: DecodingConfig::greedy(),
            sweep: false,
        },
        Condition {
            label: "sampling".into(),
            decoding: DecodingConfig::sampling(0.7, 0.9),
            sweep: false,
        },
    ];
    for t in [0.1, 0.5, 1.0, 2.0] {
        conds.push(Condition {
            label: format!("t={t}"),
            decoding: DecodingConfig::sampling(t, 1.0),
            sweep: true,
        });
    }
    let base = BatchConfig::new(50, DecodingConfig::greedy(), 42);
    let a = simulate_conditions(&kernel, &seeds, &base, &conds).map_err(|e| e.to_string())?;
    let b = simulate_conditions(&kernel, &seeds, &base, &conds).map_err(|e| e.to_string())?;
    ensure(a.iter().zip(&b).all(|(x, y)| x.reports == y.reports), || "reruns differ".into())?;
    let u = |k: usize| a[k].summary.distinct_count.mean;
    ensure(u(0) < u(1), || format!("mean U greedy {} !< sampling {}", u(0), u(1)))?;
    let taus: Vec<f64> = a[2..].iter().map(|r| r.summary.tau.mean).collect();
    ensure(taus.windows(2).all(|w| w[0] <= w[1]), || format!("sweep tau not monotone: {taus:?}"))?;
    Ok(format!(
        "U greedy {:.3} < sampling {:.3}; sweep tau {:?}; reruns identical",
        u(0),
        u(1),
        taus.iter().map(|t| (t * 1000.0).round() / 1000.0).collect::<Vec<_>>()
    ))
}

// 10 -----------------------------------------------------------------

fn close(name: &str, got: f64, want: f64) -> Result<(), String> {
    ensure((got - want).abs() <= 1e-9, || format!("{name}: {got} vs golden {want}"))
}

fn metric_golden_values() -> Check {
    let begin = "We begin with a prologue.";
    let start = "We start with a prologue.";
    let (c, r) = (tokenize(start), tokenize(begin));

    // p1 = 4/5; smoothed p2 = (2+1)/(4+1), p3 = (1+1)/(3+1), p4 = (0+1)/(2+1); BP = 1.
    close("bleu begin/start", bleu(&c, &r).unwrap(), (0.8f64 * 0.6 * 0.5 / 3.0).powf(0.25))?;
    close("bleu begin/start (literal)", bleu(&c, &r).unwrap(), 0.531_829_589_708)?;
    let ro = rouge1(&c, &r).unwrap();
    close("rouge1 begin/start p", ro.precision, 0.8)?;
    close("rouge1 begin/start r", ro.recall, 0.8)?;
    close("rouge1 begin/start f1", ro.f1, 0.8)?;
    // 4 matches in 2 chunks ("we" | "with a prologue"): Fmean = 0.8,
    // penalty = 0.5 (2/4)^3 = 0.0625.
    close("meteor begin/start", meteor_lite(&c, &r).unwrap(), 0.8 * (1.0 - 0.0625))?;
    // Nine 2-4-grams each, three shared. Over the two-sentence background
    // shared grams get idf 1, the others ln(3/2) + 1.
    let (a, b) = (sentence(start), sentence(begin));
    let w = 1.5f64.ln() + 1.0;
    close(
        "tfidf begin/start",
        tfidf_cosine(&a, &b, &[a.clone(), b.clone()]).unwrap(),
        3.0 / (3.0 + 6.0 * w * w),
    )?;

    // Clipping: "the" is allowed twice. p1 = 2/4, p2 = 1/4, p3 = 1/3,
    // p4 = 1/2; BP = exp(1 - 6/4).
    let (c, r) = (tokenize("the the the the"), tokenize("the cat sat on the mat"));
    close(
        "bleu clipping",
        bleu(&c, &r).unwrap(),
        (0.5f64 * 0.25 / 3.0 * 0.5).powf(0.25) * (-0.5f64).exp(),
    )?;
    let ro = rouge1(&c, &r).unwrap();
    close("rouge1 clipping p", ro.precision, 0.5)?;
    close("rouge1 clipping r", ro.recall, 1.0 / 3.0)?;
    close("rouge1 clipping f1", ro.f1, 0.4)?;
    // 2 matches, necessarily 2 chunks: Fmean = (1/6) / (0.45 + 1/30), penalty 0.5.
    close("meteor clipping", meteor_lite(&c, &r).unwrap(), (1.0 / 6.0) / (0.45 + 1.0 / 30.0) * 0.5)?;
    let (a, b) = (sentence("the the the the"), sentence("the cat sat on the mat"));
    close("tfidf clipping", tfidf_cosine(&a, &b, &[a.clone(), b.clone()]).unwrap(), 0.0)?;

    // Reversal: all unigrams shared, no bigram. p2 = 1/5, p3 = 1/4, p4 = 1/3.
    let (c, r) = (tokenize("prologue a with begin we"), tokenize(begin));
    close("bleu reversed", bleu(&c, &r).unwrap(), (0.2f64 * 0.25 / 3.0).powf(0.25))?;
    ensure(rouge1(&c, &r).unwrap() == Rouge1 { precision: 1.0, recall: 1.0, f1: 1.0 }, || "rouge1 reversed".into())?;
    // Five single-word chunks: penalty 0.5 (5/5)^3.
    close("meteor reversed", meteor_lite(&c, &r).unwrap(), 0.5)?;
    let (a, b) = (sentence("prologue a with begin we"), sentence(begin));
    close("tfidf reversed", tfidf_cosine(&a, &b, &[a.clone(), b.clone()]).unwrap(), 0.0)?;

    // Identity pairs.
    let mut meteor_identity = Vec::new();
    for s in [begin, "A much longer sentence that repeats itself and then repeats itself again."] {
        let t = tokenize(s);
        let st = sentence(s);
        ensure(bleu(&t, &t).unwrap() == 1.0, || format!("bleu identity {s:?}"))?;
        ensure(
            rouge1(&t, &t).unwrap() == Rouge1 { precision: 1.0, recall: 1.0, f1: 1.0 },
            || format!("rouge1 identity {s:?}"),
        )?;
        ensure(tfidf_cosine(&st, &st, std::slice::from_ref(&st)).unwrap() == 1.0, || format!("tfidf identity {s:?}"))?;
        let m = meteor_lite(&t, &t).unwrap();
        meteor_identity.push(m);
        // One chunk over n matches: the fragmentation penalty is 0.5 / n^3,
        // so an identical pair scores 1 - 0.5 / n^3 rather than 1.
        let n = t.len() as f64;
        close(&format!("meteor identity {s:?}"), m, 1.0 - 0.5 / (n * n * n))?;
    }
    Ok(format!(
        "3 pairs x 4 metrics within 1e-9; BLEU/ROUGE-1/TF-IDF identity = 1.0; METEOR identity = {:?} (1 - 0.5/n^3)",
        meteor_identity
    ))
}

// 11 -----------------------------------------------------------------

/// `P(|T| >= t)` by the finite trigonometric series for integer `nu`.
fn t_tail_series(t: f64, nu: usize) -> f64 {
    let theta = (t.abs() / (nu as f64).sqrt()).atan();
    let (s, c) = (theta.sin(), theta.cos());
    let a = if nu % 2 == 1 {
        let mut sum = 0.0;
        let mut term = c;
        let mut k = 0;
        while nu > 1 && 2 * k < nu - 2 {
            if k > 0 {
                term *= c * c * (2 * k) as f64 / (2 * k + 1) as f64;
            }
            sum += term;
            k += 1;
        }
        2.0 / std::f64::consts::PI * (theta + s * sum)
    } else {
        let (mut term, mut sum, mut k) = (1.0, 1.0, 1);
        while 2 * k <= nu - 2 {
            term *= c * c * (2 * k - 1) as f64 / (2 * k) as f64;
            sum += term;
            k += 1;
        }
        s * sum
    };
    1.0 - a
}

fn p_series(r: f64, n: usize) -> f64 {
    let nu = n - 2;
    t_tail_series(r * (nu as f64 / (1.0 - r * r)).sqrt(), nu)
}

fn statistics_oracle() -> Check {
    let mut worst = 0.0f64;
    for n in [3usize, 4, 5, 6, 7, 8, 9, 10, 15, 20, 30, 50, 100, 146, 150, 151, 200, 500] {
        for k in -19..=19 {
            let r = k as f64 * 0.05;
            let got = correlation_p_value(r, n).map_err(|e| e.to_string())?;
            let want = p_series(r, n);
            worst = worst.max((got - want).abs());
            ensure((got - want).abs() <= 1e-10, || format!("r={r} n={n}: {got} vs series {want}"))?;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..1000 {
        let n = rng.gen_range(3..=200);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let slope = rng.gen_range(-2.0..2.0);
        let y: Vec<f64> = x.iter().map(|v| slope * v + rng.gen_range(-10.0..10.0)).collect();
        let s = PairedSample::new(x, y).map_err(|e| e.to_string())?;
        let (r, _) = pearson_with_p(&s).map_err(|e| e.to_string())?;
        let fit = linear_fit(&s).map_err(|e| e.to_string())?;
        ensure((r * r - fit.r_squared).abs() <= 1e-9, || format!("case {case}: r^2 {} vs R^2 {}", r * r, fit.r_squared))?;
    }

    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/length_diversity_booksum_llama.csv");
    let mut reader = csv::Reader::from_path(&path).map_err(|e| e.to_string())?;
    let mut runs = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        runs.push(LengthDiversityInput {
            dataset: "booksum".into(),
            model_decoding: "Llama greedy".into(),
            run_id: rec[0].to_string(),
            seed_words: rec[1].parse().map_err(|e| format!("{e}"))?,
            distinct_count: rec[2].parse().map_err(|e| format!("{e}"))?,
        });
    }
    let row = length_diversity_table(&runs).remove(0);
    let (r, p) = (row.r.unwrap_or(f64::NAN), row.p.unwrap_or(f64::NAN));
    let (r_rel, p_rel) = ((r - 0.171).abs() / 0.171, (p - 3.611e-2).abs() / 3.611e-2);
    let fixture = format!(
        "fixture n={} r={r:.6} (rel {r_rel:.2e}) p={p:.6e} (rel {p_rel:.2e}) row \"{}\"",
        row.n,
        row.display_line()
    );
    ensure(r_rel <= 1e-3 && p_rel <= 1e-3, || fixture.clone())?;
    Ok(format!("series max |dp| {worst:.1e}; r^2 = R^2 on 1000 samples; {fixture}"))
}

// 12 -----------------------------------------------------------------

const PIPELINE_CONFIG: &str = r#"
schema_version = 1
horizon = 30
master_seed = 1234
dataset = "synthetic"

[corpus]
source = "kernel_states"
chains = 40

[kernel]
kind = "random_finite"
states = 25
seed = 9

[decoding]
mode = "sampling"
temperature = 0.8
top_p = 0.9
"#;

fn pipeline_reproducibility() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = tmp.path().join("pipeline.toml");
    fs::write(&config, PIPELINE_CONFIG).map_err(|e| e.to_string())?;
    let digests = |name: &str| -> Result<Vec<String>, String> {
        let out = tmp.path().join(name);
        let overrides = Overrides {
            out: Some(out.clone()),
            ..Overrides::default()
        };
        let run = cmd_run(&config, &overrides).map_err(|e| e.to_string())?;
        cmd_report(&run.out, Some(&out.join("report"))).map_err(|e| e.to_string())?;
        ["trajectories.jsonl", "recurrence.csv", "report/report.md"]
            .iter()
            .map(|f| fs::read(out.join(f)).map(|b| sha256_hex(&b)).map_err(|e| format!("{f}: {e}")))
            .collect()
    };
    let first = digests("first")?;
    let second = digests("second")?;
    ensure(first == second, || format!("hashes differ: {first:?} vs {second:?}"))?;
    Ok(format!("jsonl {} report {}", &first[0][..12], &first[2][..12]))
}

// 13 -----------------------------------------------------------------

fn paragraph_mode() -> Check {
    let a = "The fox ran. It was fast. Nobody saw it. The end came soon.";
    let b = "A hare walked. It was slow. Everyone watched. Dusk fell at last.";
    let seed = Paragraph::parse(a, "p").map_err(|e| e.to_string())?;
    ensure(seed.sentences().len() == 4, || "seed paragraph does not have 4 sentences".into())?;
    let ratio = |kernel: &ScriptedKernel| -> Result<f64, String> {
        let traj = run_chain(
            kernel,
            &seed.to_state(),
            &ChainSetup::new(50, DecodingConfig::greedy()),
            &mut chain_rng(0, 0),
        )
        .map_err(|e| e.to_string())?;
        let states: Vec<Sentence> = traj.states().cloned().collect();
        normalized_diversity_ratio(&states).map_err(|e| e.to_string())
    };
    let identity = ratio(&ScriptedKernel::identity())?;
    let alternating = ratio(&ScriptedKernel::cycle(&[a, b]).map_err(|e| e.to_string())?)?;
    ensure(identity == 1.0 && alternating == 2.0, || format!("identity {identity}, alternator {alternating}"))?;
    Ok(format!("identity {identity}, alternator {alternating}"))
}

// --------------------------------------------------------------------

struct Criterion {
    id: u32,
    name: &'static str,
    tolerance: &'static str,
    budget: Duration,
    run: fn() -> Check,
}

fn main() {
    let s = Duration::from_secs;
    let criteria = [
        Criterion { id: 1, name: "recurrence semantics", tolerance: "exact", budget: s(1), run: recurrence_semantics },
        Criterion { id: 2, name: "recurrence conventions", tolerance: "exact", budget: s(5), run: recurrence_conventions },
        Criterion { id: 3, name: "KL contraction", tolerance: "1e-9", budget: s(10), run: kl_contraction },
        Criterion { id: 4, name: "stabilization", tolerance: "1e-9 slack, residual < 1e-8", budget: s(30), run: stabilization },
        Criterion { id: 5, name: "entropy monotonicity", tolerance: "1e-9", budget: s(10), run: entropy_monotonicity },
        Criterion { id: 6, name: "mixture sandwich", tolerance: "1e-9", budget: s(5), run: mixture_sandwich },
        Criterion { id: 7, name: "block form", tolerance: "exact", budget: s(30), run: block_form },
        Criterion { id: 8, name: "round-trip composition", tolerance: "3 sigma per entry", budget: s(20), run: round_trip_composition },
        Criterion { id: 9, name: "decoding regimes", tolerance: "strict order", budget: s(60), run: decoding_regimes },
        Criterion { id: 10, name: "metric golden values", tolerance: "1e-9", budget: s(1), run: metric_golden_values },
        Criterion { id: 11, name: "statistics oracle", tolerance: "1e-10 / 1e-9 / 1e-3 rel", budget: s(10), run: statistics_oracle },
        Criterion { id: 12, name: "pipeline reproducibility", tolerance: "byte-identical", budget: s(30), run: pipeline_reproducibility },
        Criterion { id: 13, name: "paragraph mode", tolerance: "exact", budget: s(5), run: paragraph_mode },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let result = (c.run)();
        let elapsed = start.elapsed();
        let (ok, detail) = match result {
            Ok(d) if elapsed <= c.budget => (true, d),
            Ok(d) => (false, format!("{d}; over the time budget")),
            Err(e) => (false, e),
        };
        failed += usize::from(!ok);
        println!(
            "{} {:>2} {:<26} [{}; {:.2}s of {}s] {}",
            if ok { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            c.tolerance,
            elapsed.as_secs_f64(),
            c.budget.as_secs(),
            detail
        );
    }
    println!("\n{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

