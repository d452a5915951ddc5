//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

mod common;

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use subevent::cluster::{
    adjusted_rand_index, eig_topk, spectral_cluster, AffinityMatrix, SymmetricMatrix,
};
use subevent::corpus::{load_conllu, load_corpus, Corpus, Label, LabelMode, Stopwords};
use subevent::embed::{load_vectors, EmbeddingStore};
use subevent::eval::{auc, evaluate_at_k, full_sweep, roc_points};
use subevent::extract::{
    detect_phrases, extract_corpus, extract_nv_pairs, filter_candidates, Accounting, Candidate,
    CandidateKind, CandidateSet, PhraseConfig, PhraseStats, DEFAULT_NV_WINDOW,
};
use subevent::pipeline::{cmd_extract, PipelineConfig, RunManifest, MANIFEST_FILE};
use subevent::rank::{load_ontology, rank_candidates, ranking_order, Ontology, RankedCandidate};
use subevent::synth::{generate, SynthConfig};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data")
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn worked_example() -> Outcome {
    let start = Instant::now();
    let dir = data_dir().join("worked_example");
    let sw = Stopwords::english();
    let mut corpus = load_corpus(&dir.join("tweets.jsonl"), LabelMode::Labeled)
        .map_err(err)?
        .preprocess(&sw);
    corpus.attach_parses(&load_conllu(&dir.join("parses.conllu")).map_err(err)?);
    let tweet = corpus
        .tweets()
        .iter()
        .find(|t| t.raw_text == "waterborne diseases hurricane water recedes")
        .ok_or("worked tweet missing from fixture")?;

    let pairs = extract_nv_pairs(tweet, &sw).map_err(err)?;
    let got: BTreeSet<(String, String)> = pairs
        .iter()
        .map(|c| (c.first.clone(), c.second.clone()))
        .collect();
    let want: BTreeSet<(String, String)> = [("waterborne", "recedes"), ("water", "recedes")]
        .iter()
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect();
    check(got == want && pairs.len() == 2, || {
        format!("noun-verb pairs {got:?}")
    })?;

    let phrases = detect_phrases(&corpus, &PhraseConfig::default());
    let in_tweet: Vec<&Candidate> = phrases
        .iter()
        .filter(|p| {
            tweet
                .tokens
                .windows(2)
                .any(|w| w[0] == p.first && w[1] == p.second)
        })
        .collect();
    check(
        in_tweet.len() == 1 && in_tweet[0].text() == "waterborne diseases",
        || format!("phrases within the tweet: {in_tweet:?}"),
    )?;

    let (store, _) = load_vectors(&dir.join("vectors.txt")).map_err(err)?;
    let onto = load_ontology(&dir.join("ontology.txt"), &store).map_err(err)?;
    let ranked = rank_candidates(&filter_candidates(pairs, phrases, 1), &onto, &store);
    let pos = |a: &str, b: &str| {
        ranked
            .iter()
            .position(|r| r.candidate.first == a && r.candidate.second == b)
    };
    let (p1, p2) = (pos("waterborne", "diseases"), pos("water", "recedes"));
    check(matches!((p1, p2), (Some(x), Some(y)) if x < y), || {
        format!("waterborne diseases at {p1:?}, water recedes at {p2:?}")
    })?;
    let elapsed = start.elapsed().as_secs_f64();
    check(elapsed < 1.0, || format!("took {elapsed:.3}s"))?;
    Ok(format!(
        "pairs {{waterborne recedes, water recedes}}, phrase waterborne diseases, ranks {} < {}, {:.1} ms",
        p1.unwrap() + 1,
        p2.unwrap() + 1,
        elapsed * 1e3
    ))
}

fn accounting() -> Outcome {
    let within = |got: f64, want: f64| (100.0 * got - want).abs() <= 0.05;
    let harvey = Accounting {
        nv_before: 769_670,
        nv_after: 3_187,
        phrase_count: 27_122,
        total: 30_309,
        shared_pairs: 0,
    };
    let nepal_nv = subevent::extract::reduction(577_914, 19_229);
    check(
        harvey.total == harvey.nv_after + harvey.phrase_count,
        || "harvey identity".into(),
    )?;
    check(within(harvey.nv_reduction(), 99.59), || {
        format!("harvey nv {}", harvey.nv_reduction())
    })?;
    check(within(harvey.total_reduction(), 96.20), || {
        format!("harvey total {}", harvey.total_reduction())
    })?;
    check(within(nepal_nv, 96.67), || format!("nepal nv {nepal_nv}"))?;

    // The identity on real extraction runs.
    let sw = Stopwords::english();
    let mut runs = 0;
    for seed in 0..10 {
        let w = generate(&SynthConfig::fixture(seed)).map_err(err)?;
        let corpus = w.unlabeled.concat(w.labeled).preprocess(&sw);
        let ex = extract_corpus(
            &corpus,
            &sw,
            Some(&w.lexicon),
            DEFAULT_NV_WINDOW,
            &PhraseConfig::default(),
        )
        .map_err(err)?;
        for min in 1..=3 {
            let set = filter_candidates(ex.nv_pairs.clone(), ex.phrases.clone(), min);
            let a = set.accounting;
            check(
                a.total == a.nv_after + a.phrase_count && a.total == set.len(),
                || format!("{a:?}"),
            )?;
            runs += 1;
        }
    }
    let fixture = data_dir().join("fixture");
    let scratch = tempfile::tempdir().map_err(err)?;
    let cfg = PipelineConfig::load(&fixture.join("pipeline.json"))
        .and_then(|c| c.with_overrides(&[format!("paths.out_dir={}", scratch.path().display())]))
        .map_err(err)?;
    let got = cmd_extract(&cfg).map_err(err)?.accounting;
    let golden: Accounting = serde_json::from_str(
        &fs::read_to_string(fixture.join("golden_accounting.json")).map_err(err)?,
    )
    .map_err(err)?;
    check(got == golden, || {
        format!("fixture accounting {got:?} != golden {golden:?}")
    })?;
    Ok(format!(
        "99.59% / 96.20% / 96.67% reproduced; identity held on {runs} runs and the golden fixture"
    ))
}

fn toy_tweet(i: usize, tokens: &[&str]) -> subevent::corpus::Tweet {
    common::tweet(&i.to_string(), tokens, Label::Unlabeled)
}

fn phrase_scores() -> Outcome {
    let toy = [
        vec!["flood", "water", "rising"],
        vec!["flood", "water", "rescue"],
        vec!["power", "outage", "flood", "water"],
        vec!["power", "outage", "rescue"],
        vec!["water", "rising", "power", "outage"],
        vec!["rescue", "boats", "flood", "water"],
        vec!["power", "lines", "down"],
        vec!["water", "rising"],
    ];
    let corpus = Corpus::new(
        toy.iter()
            .enumerate()
            .map(|(i, t)| toy_tweet(i, t))
            .collect(),
    );
    let stats = PhraseStats::from_corpus(&corpus);
    check(stats.vocab_size() == 9, || {
        format!("vocab {}", stats.vocab_size())
    })?;
    // V = 9; unigram counts water 6, flood 4, power 4, rising 3, rescue 3, outage 3, others 1.
    let expected = [
        ("flood", "water", 0.75),   // (4-2)*9/(4*6)
        ("power", "outage", 0.75),  // (3-2)*9/(4*3)
        ("water", "rising", 0.5),   // (3-2)*9/(6*3)
        ("boats", "flood", -2.25),  // (1-2)*9/(1*4)
        ("lines", "down", -9.0),    // (1-2)*9/(1*1)
        ("outage", "flood", -0.75), // (1-2)*9/(3*4)
        ("outage", "rescue", -1.0), // (1-2)*9/(3*3)
        ("power", "lines", -2.25),  // (1-2)*9/(4*1)
        ("rescue", "boats", -3.0),  // (1-2)*9/(3*1)
        ("water", "rescue", -0.5),  // (1-2)*9/(6*3)
    ];
    for (a, b, want) in expected {
        let got = stats.score(a, b, 2);
        check((got - want).abs() <= 1e-12, || {
            format!("{a} {b}: {got} != {want}")
        })?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let words = ["aaa", "bbb", "ccc", "ddd", "eee", "fff", "ggg", "hhh"];
    let mut emitted = 0;
    for _ in 0..1000 {
        let n = rng.random_range(1..30);
        let tweets: Vec<_> = (0..n)
            .map(|i| {
                let len = rng.random_range(0..8);
                let toks: Vec<&str> = (0..len).map(|_| *words.choose(&mut rng).unwrap()).collect();
                toy_tweet(i, &toks)
            })
            .collect();
        let corpus = Corpus::new(tweets);
        let cfg = PhraseConfig {
            min_count: rng.random_range(1..5),
            threshold: rng.random_range(0.0..3.0),
        };
        let stats = PhraseStats::from_corpus(&corpus);
        for p in detect_phrases(&corpus, &cfg) {
            let count = stats.bigram_count(&p.first, &p.second);
            check(count >= cfg.min_count && p.frequency == count, || {
                format!(
                    "{} emitted with count {count} < {}",
                    p.text(),
                    cfg.min_count
                )
            })?;
            emitted += 1;
        }
    }
    Ok(format!(
        "10 scores exact to 1e-12; {emitted} phrases over 1000 random corpora all met min_count"
    ))
}

fn random_store(rng: &mut ChaCha8Rng, words: &[String], dim: usize) -> EmbeddingStore {
    let mut store = EmbeddingStore::new(dim).unwrap();
    for w in words {
        let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        store.insert(w, &v).unwrap();
    }
    store
}

/// Same candidates, scores and best terms, in the same order up to float ties.
fn same_ranking(a: &[RankedCandidate], b: &[RankedCandidate]) -> bool {
    let by_key: HashMap<_, _> = a.iter().map(|r| (r.candidate.key(), r)).collect();
    a.len() == b.len()
        && b.iter().all(|r| {
            by_key
                .get(&r.candidate.key())
                .is_some_and(|o| (o.score - r.score).abs() <= 1e-12 && o.best_term == r.best_term)
        })
        && b.windows(2).all(|w| {
            let (x, y) = (by_key[&w[0].candidate.key()], by_key[&w[1].candidate.key()]);
            (x.score - y.score).abs() <= 1e-12 || ranking_order(x, y).is_lt()
        })
}

fn ranking_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let vocab: Vec<String> = (0..400).map(|i| format!("w{i}")).collect();
    let store = random_store(&mut rng, &vocab[..360], 24);
    let terms: Vec<String> = (0..62)
        .map(|_| {
            let len = rng.random_range(1..=3);
            (0..len)
                .map(|_| vocab[rng.random_range(0..360)].clone())
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect();
    let mut seen = BTreeSet::new();
    let mut candidates = Vec::new();
    while candidates.len() < 1000 {
        let a = vocab.choose(&mut rng).unwrap().clone();
        let b = vocab.choose(&mut rng).unwrap().clone();
        let kind = if rng.random_bool(0.5) {
            CandidateKind::NounVerb
        } else {
            CandidateKind::Phrase
        };
        if seen.insert((kind, a.clone(), b.clone())) {
            candidates.push(Candidate {
                kind,
                first: a,
                second: b,
                frequency: rng.random_range(1..6),
            });
        }
    }
    let set = CandidateSet::from_candidates(candidates.clone());
    let onto = Ontology::from_terms(terms.clone(), &store).map_err(err)?;
    let ranked = rank_candidates(&set, &onto, &store);
    let oracle = common::brute_force_ranking(&candidates, &terms, &store);
    check(ranked.len() == oracle.len(), || "length mismatch".into())?;
    for (i, (r, o)) in ranked.iter().zip(&oracle).enumerate() {
        check(
            r.candidate.kind == o.kind
                && r.candidate.first == o.first
                && r.candidate.second == o.second
                && r.best_term == o.best_term
                && (r.score - o.score).abs() <= 1e-12,
            || format!("position {i}: {r:?} vs {o:?}"),
        )?;
    }
    let nulls = ranked.iter().filter(|r| r.score == -1.0).count();
    for factor in [2.5, 0.01, 1e3] {
        let scaled = store.scaled(factor);
        let onto_s = Ontology::from_terms(terms.clone(), &scaled).map_err(err)?;
        let again = rank_candidates(&set, &onto_s, &scaled);
        check(same_ranking(&ranked, &again), || {
            format!("rescaling by {factor} changed the ranking")
        })?;
    }
    Ok(format!("1000 x 62 ordering identical to the double loop ({nulls} null); invariant under 3 rescalings"))
}

fn eigensolver() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst_res = 0.0f64;
    let mut worst_val = 0.0f64;
    for case in 0..50 {
        let n = rng.random_range(1..=32);
        let k = rng.random_range(1..=n);
        let raw: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let m = SymmetricMatrix::from_fn(n, |i, j| raw[i.min(j) * n + i.max(j)]);
        let dense: Vec<Vec<f64>> = (0..n).map(|i| m.row(i).to_vec()).collect();
        let pairs = eig_topk(&m, k).map_err(err)?;
        let bound = 1e-8 * m.frobenius_norm().max(1.0);
        let oracle = common::jacobi_eigenvalues(&dense);
        for (i, p) in pairs.iter().enumerate() {
            let res = m.residual(p.value, &p.vector);
            let norm = p.vector.iter().map(|x| x * x).sum::<f64>().sqrt();
            worst_res = worst_res.max(res / bound);
            worst_val = worst_val.max((p.value - oracle[i]).abs());
            check(res <= bound, || {
                format!("case {case} (n={n}) pair {i}: residual {res:e} > {bound:e}")
            })?;
            check((norm - 1.0).abs() < 1e-10, || {
                format!("case {case}: eigenvector norm {norm}")
            })?;
            check((p.value - oracle[i]).abs() <= 1e-8, || {
                format!(
                    "case {case} (n={n}) value {i}: {} vs oracle {}",
                    p.value, oracle[i]
                )
            })?;
        }
    }
    Ok(format!(
        "50 matrices; worst residual {:.1e} of the bound, worst eigenvalue gap {worst_val:.1e}",
        worst_res
    ))
}

fn spectral() -> Outcome {
    let sizes = [10, 15, 20];
    let truth: Vec<usize> = sizes
        .iter()
        .enumerate()
        .flat_map(|(b, &s)| vec![b; s])
        .collect();
    let m = SymmetricMatrix::from_fn(truth.len(), |i, j| {
        if i != j && truth[i] == truth[j] {
            0.9
        } else {
            0.0
        }
    });
    let a = AffinityMatrix::from_matrix(m).map_err(err)?;
    for seed in 0..10 {
        let first = spectral_cluster(&a, 3, seed).map_err(err)?;
        let ari = adjusted_rand_index(&first.labels, &truth);
        check(ari == 1.0, || format!("seed {seed}: ARI {ari}"))?;
        for _ in 0..3 {
            let again = spectral_cluster(&a, 3, seed).map_err(err)?;
            check(again == first, || {
                format!("seed {seed}: labels changed between runs")
            })?;
        }
    }
    Ok("ARI 1.0 for seeds 0..9, labels identical across 4 runs per seed".into())
}

fn rank_world(seed: u64) -> Result<(Corpus, Vec<RankedCandidate>), String> {
    let world = generate(&SynthConfig::balanced(seed)).map_err(err)?;
    let sw = Stopwords::english();
    let labeled = world.labeled.preprocess(&sw);
    let ex = extract_corpus(
        &labeled,
        &sw,
        None,
        DEFAULT_NV_WINDOW,
        &PhraseConfig::default(),
    )
    .map_err(err)?;
    let set = filter_candidates(ex.nv_pairs, ex.phrases, 2);
    let onto = Ontology::bundled(&world.store).map_err(err)?;
    Ok((labeled, rank_candidates(&set, &onto, &world.store)))
}

fn metrics() -> Outcome {
    let fixture = common::six_tweet_fixture();
    let top = vec![RankedCandidate {
        candidate: Candidate::noun_verb("power", "outage", 3),
        score: 0.9,
        best_term: None,
        rank: 1,
    }];
    let m = evaluate_at_k(&top, &fixture, &[1]).map_err(err)?;
    let p = m[0];
    check(
        p.precision == 2.0 / 3.0 && p.recall == 0.5 && p.f1 == 4.0 / 7.0,
        || format!("{p:?}"),
    )?;

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let words = ["aaa", "bbb", "ccc", "ddd", "eee"];
    for case in 0..1000 {
        let n = rng.random_range(2..25);
        let tweets: Vec<_> = (0..n)
            .map(|i| {
                let len = rng.random_range(0..6);
                let toks: Vec<&str> = (0..len).map(|_| *words.choose(&mut rng).unwrap()).collect();
                let label = match i {
                    0 => Label::Informative,
                    1 => Label::Uninformative,
                    _ if rng.random_bool(0.5) => Label::Informative,
                    _ => Label::Uninformative,
                };
                common::tweet(&i.to_string(), &toks, label)
            })
            .collect();
        let corpus = Corpus::new(tweets);
        let ranked: Vec<RankedCandidate> = (0..rng.random_range(0..15))
            .map(|i| {
                let (a, b) = (
                    *words.choose(&mut rng).unwrap(),
                    *words.choose(&mut rng).unwrap(),
                );
                let candidate = if rng.random_bool(0.5) {
                    Candidate::noun_verb(a, b, 2)
                } else {
                    Candidate::phrase(a, b, 2)
                };
                RankedCandidate {
                    candidate,
                    score: 0.0,
                    best_term: None,
                    rank: i + 1,
                }
            })
            .collect();
        let ms = evaluate_at_k(&ranked, &corpus, &full_sweep(ranked.len())).map_err(err)?;
        for w in ms.windows(2) {
            check(w[0].tp <= w[1].tp && w[0].fp <= w[1].fp, || {
                format!("case {case}: not monotone")
            })?;
        }
    }

    let mut random_aucs = Vec::new();
    let mut moac_aucs = Vec::new();
    for seed in 0..20 {
        let (labeled, ranked) = rank_world(seed)?;
        let ks = full_sweep(ranked.len());
        if seed < 5 {
            moac_aucs.push(auc(&roc_points(
                &evaluate_at_k(&ranked, &labeled, &ks).map_err(err)?,
            )));
        }
        let mut shuffled = ranked;
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(1000 + seed));
        random_aucs.push(auc(&roc_points(
            &evaluate_at_k(&shuffled, &labeled, &ks).map_err(err)?,
        )));
    }
    let mean = random_aucs.iter().sum::<f64>() / random_aucs.len() as f64;
    let worst_moac = moac_aucs.iter().copied().fold(f64::INFINITY, f64::min);
    check((mean - 0.5).abs() <= 0.05, || {
        format!("random ranking mean AUC {mean:.4}")
    })?;
    check(worst_moac >= 0.8, || {
        format!("embedding ranking AUCs {moac_aucs:?}")
    })?;
    Ok(format!(
        "P 2/3 R 1/2 F1 4/7 exact; 1000 fixtures monotone; random AUC {mean:.3} (20 seeds); embedding AUC >= {worst_moac:.3} (5 corpora)"
    ))
}

fn artifacts(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(err)? {
        let path = entry.map_err(err)?.path();
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        if name != MANIFEST_FILE {
            out.push((name, fs::read(&path).map_err(err)?));
        }
    }
    out.sort();
    Ok(out)
}

fn end_to_end() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_subevent");
    let config = data_dir().join("fixture/pipeline.json");
    let scratch = tempfile::tempdir().map_err(err)?;
    let run = |name: &str, threads: &str| -> Result<(PathBuf, f64), String> {
        let out = scratch.path().join(name);
        let start = Instant::now();
        let status = Command::new(bin)
            .arg("pipeline")
            .arg("--config")
            .arg(&config)
            .args(["--threads", threads, "--seed", "0"])
            .arg(format!("--paths.out_dir={}", out.display()))
            .output()
            .map_err(err)?;
        let secs = start.elapsed().as_secs_f64();
        check(status.status.success(), || {
            String::from_utf8_lossy(&status.stderr).into_owned()
        })?;
        Ok((out, secs))
    };
    let (a, secs) = run("a", "1")?;
    let (b, _) = run("b", "1")?;
    let (c, _) = run("c", "8")?;
    check(secs < 10.0, || {
        format!("single-threaded run took {secs:.2}s")
    })?;
    let (fa, fb, fc) = (artifacts(&a)?, artifacts(&b)?, artifacts(&c)?);
    check(fa.len() == 7, || {
        format!("expected 7 artifacts, found {}", fa.len())
    })?;
    check(fa == fb, || "artifacts differ between two runs".into())?;
    check(fa == fc, || {
        "artifacts differ between 1 and 8 threads".into()
    })?;
    let ma = RunManifest::load(&a.join(MANIFEST_FILE)).map_err(err)?;
    let mc = RunManifest::load(&c.join(MANIFEST_FILE)).map_err(err)?;
    let hashes = |m: &RunManifest| {
        m.artifacts
            .values()
            .map(|r| r.sha256.clone())
            .collect::<Vec<_>>()
    };
    check(
        hashes(&ma) == hashes(&mc) && ma.completed_stages() == 4,
        || "manifest hashes differ".into(),
    )?;
    Ok(format!(
        "{:.2}s single-threaded, {} artifacts byte-identical across runs and 1 vs 8 threads",
        secs,
        fa.len()
    ))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("worked example", worked_example),
        ("accounting identities", accounting),
        ("phrase scorer", phrase_scores),
        ("ranking oracle", ranking_oracle),
        ("eigensolver", eigensolver),
        ("spectral clustering", spectral),
        ("retrieval metrics", metrics),
        ("end-to-end pipeline", end_to_end),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("[PASS] {} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("[FAIL] {} {name}: {why}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
