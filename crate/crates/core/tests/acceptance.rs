//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::{BTreeSet, VecDeque};
use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use polarpo::construction::{info_size, ConstructOptions, Construction};
use polarpo::dimension_reduction::{dr_update, DrConfig};
use polarpo::index::{join, split, BitIndex};
use polarpo::order::{combined_leq, po_relation_matrix, Relation, Source};
use polarpo::reliability::{bec_bhattacharyya, rank_channels, ChannelModel, ReliabilityRanking};
use polarpo::{construct, construction::gamma_sweep_rate};

type Outcome = Result<String, String>;
type Check = (&'static str, fn() -> Outcome);

const ERASURES: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_polarpo")
}

fn run_cli(args: &[&str], cache: Option<&Path>) -> Result<(Vec<u8>, Duration), String> {
    let mut cmd = Command::new(bin());
    cmd.args(args).env_remove("POLARPO_CACHE_DIR");
    if let Some(dir) = cache {
        cmd.arg("--cache-dir").arg(dir);
    }
    let start = Instant::now();
    let out = cmd.output().map_err(|e| format!("spawn: {e}"))?;
    let elapsed = start.elapsed();
    if !out.status.success() {
        return Err(format!(
            "polarpo {} exited with {}: {}",
            args.join(" "),
            out.status,
            String::from_utf8_lossy(&out.stderr).trim()
        ));
    }
    Ok((out.stdout, elapsed))
}

fn construction_from(stdout: &[u8]) -> Result<serde_json::Value, String> {
    serde_json::from_slice(stdout).map_err(|e| format!("bad JSON: {e}"))
}

fn set_len(v: &serde_json::Value, key: &str) -> usize {
    v[key].as_array().map_or(0, |a| a.len())
}

// Exact Bhattacharyya numerators over the common denominator base^(2^n),
// for an erasure probability of num/base. Indexed by raw = i - 1.
fn exact_bec(n: u32, num: u32, base: u32) -> Vec<BigUint> {
    let mut level = vec![BigUint::from(num)];
    let mut den = BigUint::from(base);
    for _ in 0..n {
        let mut next = Vec::with_capacity(level.len() * 2);
        for z in &level {
            let sq = z * z;
            next.push((z * &den) * 2u32 - &sq);
            next.push(sq);
        }
        den = &den * &den;
        level = next;
    }
    level
}

// Dense rank of each channel by exact Z, 0 = smallest Z (best).
fn exact_ranks(z: &[BigUint]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..z.len()).collect();
    idx.sort_by(|&a, &b| z[a].cmp(&z[b]));
    let mut rank = vec![0; z.len()];
    let mut r = 0;
    for w in 0..idx.len() {
        if w > 0 && z[idx[w]] != z[idx[w - 1]] {
            r += 1;
        }
        rank[idx[w]] = r;
    }
    rank
}

// Channels better than or equal to `raw`, by moving a single 1 to a higher
// 0 or raising a single 0 to 1, closed under repetition.
fn bfs_upset(raw: u32, n: u32) -> Vec<bool> {
    let mut seen = vec![false; 1 << n];
    let mut queue = VecDeque::from([raw]);
    seen[raw as usize] = true;
    while let Some(x) = queue.pop_front() {
        for lo in 0..n {
            if x >> lo & 1 == 1 {
                for hi in lo + 1..n {
                    if x >> hi & 1 == 0 {
                        let y = x ^ (1 << lo) ^ (1 << hi);
                        if !seen[y as usize] {
                            seen[y as usize] = true;
                            queue.push_back(y);
                        }
                    }
                }
            } else {
                let y = x | (1 << lo);
                if !seen[y as usize] {
                    seen[y as usize] = true;
                    queue.push_back(y);
                }
            }
        }
    }
    seen
}

fn po_only_n10() -> Outcome {
    let (out, t) = run_cli(&["construct", "-n", "10", "-R", "0.5"], None)?;
    let c = construction_from(&out)?;
    let n_big = 1024.0;
    let det = (set_len(&c, "I") + set_len(&c, "F")) as f64;
    let detail = format!(
        "|I|+|F| = {det} ({:.4} N), {:.2} s",
        det / n_big,
        t.as_secs_f64()
    );
    if (0.45 * n_big..=0.55 * n_big).contains(&det) && t < Duration::from_secs(10) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn po_dr_n10() -> Outcome {
    let base = ["construct", "-n", "10", "-R", "0.5", "--channel", "awgn:1", "--dr", "--nu", "7"];
    let (plain, _) = run_cli(&base, None)?;
    let plain = 1.0 - construction_from(&plain)?["gamma"].as_f64().unwrap_or(f64::NAN);
    let mut with_closure = base.to_vec();
    with_closure.push("--closure");
    let (out, t) = run_cli(&with_closure, None)?;
    let frac = 1.0 - construction_from(&out)?["gamma"].as_f64().unwrap_or(f64::NAN);
    let detail = format!(
        "determined {frac:.4} with closure ({:.2} s), {plain:.4} without",
        t.as_secs_f64()
    );
    if (0.77..=0.87).contains(&frac) && t < Duration::from_secs(30) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn low_rate_gamma() -> Outcome {
    let (out, _) = run_cli(&["construct", "-n", "9", "-R", "0.1"], None)?;
    let gamma = construction_from(&out)?["gamma"].as_f64().unwrap_or(f64::NAN);
    let detail = format!("gamma = {gamma:.4}");
    if (0.07..=0.11).contains(&gamma) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn rate_sweep_shape() -> Outcome {
    let model = ChannelModel::awgn(1.0).map_err(|e| e.to_string())?;
    let rates: Vec<f64> = (1..20).map(|k| k as f64 / 20.0).collect();
    let po = gamma_sweep_rate(9, None, false, &rates).map_err(|e| e.to_string())?;
    let dr = gamma_sweep_rate(9, Some(model), true, &rates).map_err(|e| e.to_string())?;
    let at_half = |s: &[(f64, f64)]| s.iter().find(|p| (p.0 - 0.5).abs() < 1e-12).unwrap().1;
    let max = |s: &[(f64, f64)]| s.iter().map(|p| p.1).fold(f64::MIN, f64::max);
    let mut problems = Vec::new();
    if at_half(&po) < max(&po) {
        problems.push("PO maximum not at R=0.5".to_string());
    }
    if at_half(&dr) < max(&dr) {
        problems.push("PO+DR maximum not at R=0.5".to_string());
    }
    for (a, b) in po.iter().zip(&dr) {
        if b.1 > a.1 {
            problems.push(format!("PO+DR above PO at R={}", a.0));
        }
    }
    let detail = format!(
        "gamma(0.5): PO {:.4}, PO+DR {:.4}",
        at_half(&po),
        at_half(&dr)
    );
    if problems.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{detail}; {}", problems.join(", ")))
    }
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut pairs = 0u64;
    let mut mismatches = 0u64;
    for n in 1..=8u32 {
        let matrix = po_relation_matrix(n).map_err(|e| e.to_string())?;
        for j in 0..1u32 << n {
            let up = bfs_upset(j, n);
            let bj = BitIndex::new(j + 1, n).unwrap();
            for i in 0..1u32 << n {
                pairs += 1;
                let bi = BitIndex::new(i + 1, n).unwrap();
                let counter = combined_leq(bj, bi);
                let stored = i == j || matrix.is_better(i + 1, j + 1);
                if counter != up[i as usize] || stored != up[i as usize] {
                    mismatches += 1;
                }
            }
        }
    }
    let t = start.elapsed();
    let detail = format!("{mismatches} mismatches over {pairs} pairs, {:.2} s", t.as_secs_f64());
    if mismatches == 0 && t < Duration::from_secs(60) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn bec_soundness() -> Outcome {
    let mut checked = 0u64;
    let mut violations = Vec::new();
    for n in 1..=10u32 {
        let po = po_relation_matrix(n).map_err(|e| e.to_string())?;
        for (k, &eps) in ERASURES.iter().enumerate() {
            let ranks = exact_ranks(&exact_bec(n, k as u32 + 1, 10));
            let mut check = |m: &polarpo::RelationMatrix, label: &str| {
                for (b, w, src) in m.determined() {
                    checked += 1;
                    if ranks[b as usize - 1] > ranks[w as usize - 1] {
                        violations.push(format!("n={n} eps={eps} {label} {src:?}: {b} over {w}"));
                    }
                }
            };
            check(&po, "PO");
            if n >= 4 {
                let model = ChannelModel::bec(eps).map_err(|e| e.to_string())?;
                let ranking = rank_channels(model, n - 3).map_err(|e| e.to_string())?;
                for closure in [false, true] {
                    let cfg = DrConfig::new(n, ranking.clone())
                        .map_err(|e| e.to_string())?
                        .with_closure(closure);
                    let mut m = po.clone();
                    dr_update(&mut m, &cfg).map_err(|e| format!("n={n} eps={eps}: {e}"))?;
                    check(&m, if closure { "DR+closure" } else { "DR" });
                }
            }
        }
    }
    let detail = format!("{} violations over {checked} relations", violations.len());
    if violations.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{detail}; first: {}", violations[0]))
    }
}

fn bec_conservation() -> Outcome {
    let mut worst = 0.0f64;
    for n in 1..=12u32 {
        for &eps in &ERASURES {
            let z = bec_bhattacharyya(n, eps);
            let expected = (1u64 << n) as f64 * eps;
            let sum: f64 = z.iter().sum();
            worst = worst.max(((sum - expected) / expected).abs());
        }
    }
    let detail = format!("worst relative error {worst:.3e}");
    if worst <= 1e-9 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn resolution() -> Outcome {
    let model = ChannelModel::bec(0.5).map_err(|e| e.to_string())?;
    let mut cases = 0;
    let mut failures = Vec::new();
    for n in 1..=10u32 {
        let big_n = 1u32 << n;
        let z = exact_bec(n, 1, 2);
        let mut by_z: Vec<u32> = (0..big_n).collect();
        by_z.sort_by(|&a, &b| z[a as usize].cmp(&z[b as usize]).then(a.cmp(&b)));
        for rate in [0.25, 0.5, 0.75] {
            let k = info_size(big_n, rate) as usize;
            let expected: BTreeSet<u32> = by_z[..k].iter().map(|&r| r + 1).collect();
            for use_dr in [false, n >= 4] {
                let opts = ConstructOptions {
                    use_dr,
                    resolve: true,
                    ..Default::default()
                };
                let c: Construction = construct(n, rate, Some(model), &opts).map_err(|e| e.to_string())?;
                cases += 1;
                let got: BTreeSet<u32> = c.information.iter().copied().collect();
                if got != expected {
                    failures.push(format!("n={n} K={k} dr={use_dr}"));
                }
            }
        }
    }
    let detail = format!("{} of {cases} cases differ", failures.len());
    if failures.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{detail}: {}", failures.join(", ")))
    }
}

fn worked_example() -> Outcome {
    let (n, n_u, n_l) = (8u32, 5u32, 3u32);
    let (i, j) = (159u32, 108u32);
    if split(i, n_u, n_l).ok() != Some((20, 7)) || split(j, n_u, n_l).ok() != Some((14, 4)) {
        return Err("split of the example pair is wrong".into());
    }
    if join(20, 7, n_l).ok() != Some(i) || join(14, 4, n_l).ok() != Some(j) {
        return Err("join of the example pair is wrong".into());
    }
    let po = po_relation_matrix(n).map_err(|e| e.to_string())?;
    if po.get(i, j) != Relation::Unknown {
        return Err(format!("PO already relates {i} and {j}"));
    }
    let mut rankings: Vec<ReliabilityRanking> = Vec::new();
    for &eps in &ERASURES {
        rankings.push(rank_channels(ChannelModel::bec(eps).unwrap(), n_u).map_err(|e| e.to_string())?);
    }
    for snr in [-2.0, 0.0, 1.0, 3.0] {
        rankings.push(rank_channels(ChannelModel::awgn(snr).unwrap(), n_u).map_err(|e| e.to_string())?);
    }
    let (mut ordered, mut lifted) = (0, 0);
    for ranking in rankings {
        let model = ranking.model();
        let strict = ranking.strictly_better(20, 14) || ranking.strictly_better(14, 20);
        let mut m = po.clone();
        dr_update(&mut m, &DrConfig::new(n, ranking.clone()).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        let determined = m.is_determined(i, j);
        if determined && m.source(i, j) != Some(Source::Dr) {
            return Err(format!("{model}: relation not tagged DR"));
        }
        if ranking.strictly_better(20, 14) {
            ordered += 1;
            if !m.is_better(i, j) {
                return Err(format!("{model}: 20 ranked above 14 but {i} not above {j}"));
            }
            lifted += 1;
        } else if strict && determined {
            return Err(format!("{model}: {j}'s upper part ranked higher but pair was determined"));
        }
    }
    if ordered == 0 {
        return Err("no ranking placed 20 above 14".into());
    }
    Ok(format!(
        "PO-incomparable; lifted under {lifted} of {ordered} rankings with 20 above 14"
    ))
}

fn determinism() -> Outcome {
    let work = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cache = work.path().join("cache");
    let ppm = work.path().join("m.ppm");
    let ppm_arg = ppm.to_str().unwrap();
    let commands: Vec<Vec<&str>> = vec![
        vec!["relation", "-n", "9"],
        vec!["construct", "-n", "9", "-R", "0.5", "--channel", "awgn:1", "--dr", "--closure"],
        vec!["construct", "-n", "8", "-R", "0.25", "--channel", "bec:0.5", "--dr", "--resolve"],
        vec!["sweep", "rate", "-n", "8", "--channel", "awgn:1"],
        vec!["sweep", "blocklength", "-R", "0.5", "--n-min", "4", "--n-max", "8", "--channel", "bec:0.3"],
        vec!["rank", "--channel", "awgn:1", "--nu", "6"],
        vec!["render", "-n", "7", "--channel", "awgn:1", "--out", ppm_arg],
    ];
    let capture = |args: &[&str], cache: Option<&Path>| -> Result<Vec<u8>, String> {
        let (mut out, _) = run_cli(args, cache)?;
        if args[0] == "render" {
            out = fs::read(&ppm).map_err(|e| e.to_string())?;
        }
        Ok(out)
    };
    for args in &commands {
        let reference = capture(args, None)?;
        let runs = [
            ("repeat", capture(args, None)?),
            ("cold cache", capture(args, Some(&cache))?),
            ("warm cache", capture(args, Some(&cache))?),
        ];
        fs::remove_dir_all(&cache).map_err(|e| e.to_string())?;
        let after = capture(args, Some(&cache))?;
        for (label, bytes) in runs.iter().chain([&("after deletion", after)]) {
            if *bytes != reference {
                return Err(format!("`{}` differs on {label}", args.join(" ")));
            }
        }
    }
    Ok(format!("{} commands byte-identical across runs and cache states", commands.len()))
}

fn main() -> ExitCode {
    let criteria: [Check; 10] = [
        ("PO-only determination, n=10, R=0.5", po_only_n10),
        ("PO+DR determination, n=10, R=0.5, AWGN 1 dB, n_u=7", po_dr_n10),
        ("PO-only gamma, n=9, R=0.1", low_rate_gamma),
        ("rate sweep shape, n=9", rate_sweep_shape),
        ("counter test equals swap/raise closure, n<=8", oracle_equivalence),
        ("BEC soundness of PO and DR relations, n<=10", bec_soundness),
        ("BEC conservation, n<=12", bec_conservation),
        ("resolution equals exact top-K, n<=10", resolution),
        ("worked incomparable pair (159, 108), n=8, n_u=5", worked_example),
        ("determinism and cache independence", determinism),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", k + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
