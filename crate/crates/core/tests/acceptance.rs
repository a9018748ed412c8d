//! Acceptance suite: one PASS/FAIL line per criterion.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_bigint::BigUint;

use fopforge::fologic::{check_mutual_exclusion, classify_projection, Exclusion};
use fopforge::harness::{check_instance, sample_indices, InstanceOutcome, Stage, Summary};
use fopforge::oracles::Budget;
use fopforge::problems::{encode_3sat, enumerate_3sat};
use fopforge::projana::{build_table, mutation_locality, table_consistency};
use fopforge::reductions::{apply_reduction, builtin_defs, target_of, BuiltinDefs, DEFAULT_NODE_BUDGET};

const SAMPLE_SEED: u64 = 42;
const SAMPLES: usize = 200;

struct Report {
    failed: usize,
}

impl Report {
    fn line(&mut self, id: u32, ok: bool, elapsed: Duration, detail: String) {
        if !ok {
            self.failed += 1;
        }
        println!("criterion {id}: {} ({:.2?}) {detail}", if ok { "PASS" } else { "FAIL" }, elapsed);
    }
}

fn run(n: usize, indices: &[usize], stage: Stage, defs: &BuiltinDefs) -> Result<Vec<InstanceOutcome>, String> {
    let e = enumerate_3sat(n).map_err(|e| e.to_string())?;
    indices
        .iter()
        .map(|&i| check_instance(i, &e.instance_at(i), defs, stage, Budget::default()).map_err(|e| format!("instance {i}: {e}")))
        .collect()
}

fn summarize(outcomes: &[InstanceOutcome]) -> Summary {
    let mut s = Summary::default();
    outcomes.iter().for_each(|o| s.add(o));
    s
}

fn describe(s: &Summary) -> String {
    let mut d = format!("{}/{} agree, {} satisfiable", s.agree, s.instances, s.satisfiable);
    if let Some((i, msg)) = &s.first_discrepancy {
        d += &format!("; instance {i}: {msg}");
    }
    d
}

/// The target computed straight from the tag positions: digit 1 in each
/// variable column `(0,j,1,n-1)`, digit 3 in each clause column `(n-1,i,1,n-1)`.
fn target_by_bit_positions(n: usize) -> BigUint {
    let m = n.pow(4);
    let rank = |a: usize, b: usize, c: usize, d: usize| ((a * n + b) * n + c) * n + d;
    let mut t = BigUint::from(0u8);
    for j in 0..n {
        t += BigUint::from(1u8) << (m - 1 - rank(0, j, 1, n - 1));
        t += BigUint::from(3u8) << (m - 1 - rank(n - 1, j, 1, n - 1));
    }
    t
}

fn main() -> ExitCode {
    let defs = builtin_defs();
    let mut report = Report { failed: 0 };
    let fail = |e: String| -> (bool, String) { (false, e) };

    // 1. exhaustive n = 2, full chain
    let t0 = Instant::now();
    let c1 = run(2, &(0..16).collect::<Vec<_>>(), Stage::Full, &defs);
    let el = t0.elapsed();
    let (ok, d) = match &c1 {
        Ok(o) => {
            let s = summarize(o);
            (s.instances == 16 && s.agree == 16 && s.satisfiable == 16 && el < Duration::from_secs(60), describe(&s))
        }
        Err(e) => fail(e.clone()),
    };
    report.line(1, ok, el, d);

    // 2. exhaustive n = 3, ρ1 stage, single thread
    let t0 = Instant::now();
    let c2 = run(3, &(0..8000).collect::<Vec<_>>(), Stage::Rho1, &defs);
    let el = t0.elapsed();
    let (ok, d) = match &c2 {
        Ok(o) => {
            let s = summarize(o);
            (s.instances == 8000 && s.agree == 8000 && el < Duration::from_secs(600), describe(&s))
        }
        Err(e) => fail(e.clone()),
    };
    report.line(2, ok, el, d);

    // 3. sampled n = 3, full chain
    let t0 = Instant::now();
    let c3 = run(3, &sample_indices(8000, SAMPLES, SAMPLE_SEED), Stage::Full, &defs);
    let el = t0.elapsed();
    let (ok, d) = match &c3 {
        Ok(o) => {
            let s = summarize(o);
            (s.instances >= 200 && s.agree == s.instances && el < Duration::from_secs(900), describe(&s) + &format!(", seed {SAMPLE_SEED}"))
        }
        Err(e) => fail(e.clone()),
    };
    report.line(3, ok, el, d);

    // 4. projection shape and guard exclusion
    let t0 = Instant::now();
    let mut problems = Vec::new();
    let mut checked = 0;
    for (def, rels, sizes) in [(&defs.rho1, ["W", "L"].as_slice(), [2usize, 3]), (&defs.rho2, ["T"].as_slice(), [16, 81])] {
        for rel in rels {
            let form = match classify_projection(&def.relations[*rel]) {
                Ok(f) => f,
                Err(e) => {
                    problems.push(format!("{}.{rel}: {e}", def.name));
                    continue;
                }
            };
            let params = def.relation_params(rel).unwrap();
            for m in sizes {
                match check_mutual_exclusion(&form, &params, m, DEFAULT_NODE_BUDGET) {
                    Ok(Exclusion::Exclusive { .. }) => checked += 1,
                    Ok(other) => problems.push(format!("{}.{rel} at {m}: {other:?}", def.name)),
                    Err(e) => problems.push(format!("{}.{rel} at {m}: {e}", def.name)),
                }
            }
        }
    }
    let d = problems.first().cloned().unwrap_or_else(|| format!("{checked} formula/size pairs exclusive"));
    report.line(4, problems.is_empty() && checked == 6, t0.elapsed(), d);

    // 5. locality and table consistency on n = 2 and their ρ1 images
    let t0 = Instant::now();
    let c5 = (|| -> Result<String, String> {
        let inputs: Vec<_> = enumerate_3sat(2).map_err(|e| e.to_string())?.iter().map(|c| encode_3sat(&c)).collect();
        let images: Vec<_> =
            inputs.iter().map(|s| apply_reduction(&defs.rho1, s)).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
        let mut flips = 0;
        for (def, corpus, m) in [(&defs.rho1, &inputs, 2usize), (&defs.rho2, &images, 16)] {
            let table = build_table(def, m, DEFAULT_NODE_BUDGET).map_err(|e| e.to_string())?;
            if let Err(mm) = table_consistency(def, &table, corpus.iter()).map_err(|e| e.to_string())? {
                return Err(format!("{} table mismatch: {mm:?}", def.name));
            }
            for s in corpus.iter() {
                match mutation_locality(def, &table, s).map_err(|e| e.to_string())? {
                    Ok(k) => flips += k,
                    Err(v) => return Err(format!("{} locality violation: {v:?}", def.name)),
                }
            }
        }
        Ok(format!("{flips} flips, 32 structures consistent"))
    })();
    let el = t0.elapsed();
    let (ok, d) = match c5 {
        Ok(d) => (true, d),
        Err(e) => (false, e),
    };
    report.line(5, ok, el, d);

    let all: Vec<&InstanceOutcome> =
        [&c1, &c2, &c3].into_iter().filter_map(|r| r.as_ref().ok()).flatten().collect();
    let chains_ran = c1.is_ok() && c2.is_ok() && c3.is_ok();

    // 6. digit patterns on every instance of 1–3
    let t0 = Instant::now();
    let digit_issue = all.iter().find_map(|o| {
        let full = o.partition.is_some();
        let bad = o
            .discrepancies
            .iter()
            .find(|d| d.contains("digit") || d.contains("b1 ≠") || d.contains("b2 ≠") || d.contains("copy row"));
        bad.map(|b| format!("instance {}: {b}", o.index))
            .or_else(|| (full && (o.digits.b1.is_none() || o.digits.b2.is_none())).then(|| format!("instance {}: b1/b2 digits missing", o.index)))
    });
    let sample = all.iter().find(|o| o.partition.is_some() && o.target.bits() > 16).map(|o| {
        format!(
            "n=3 t={} Σ={} b1={} b2={}",
            o.digits.target,
            o.digits.row_sum,
            o.digits.b1.clone().unwrap_or_default(),
            o.digits.b2.clone().unwrap_or_default()
        )
    });
    let ok = chains_ran && digit_issue.is_none();
    report.line(6, ok, t0.elapsed(), digit_issue.unwrap_or_else(|| format!("{} instances; {}", all.len(), sample.unwrap_or_default())));

    // 7. target invariance and the independently computed value
    let t0 = Instant::now();
    let c7 = (|| -> Result<String, String> {
        let script2 = target_by_bit_positions(2);
        if script2 != BigUint::from(4403u32) {
            return Err(format!("bit-position script gives {script2} at n=2"));
        }
        for n in [2usize, 3] {
            let e = enumerate_3sat(n).map_err(|e| e.to_string())?;
            let want = target_by_bit_positions(n);
            for (i, inst) in e.iter().enumerate() {
                let out = apply_reduction(&defs.rho1, &encode_3sat(&inst)).map_err(|e| e.to_string())?;
                let t = target_of(&out).map_err(|e| e.to_string())?;
                if t != want {
                    return Err(format!("n={n} instance {i}: target differs"));
                }
            }
        }
        Ok("t = 4403 at n=2 for all 16; one common target over all 8000 at n=3".into())
    })();
    let el = t0.elapsed();
    let (ok, d) = match c7 {
        Ok(d) => (true, d),
        Err(e) => (false, e),
    };
    report.line(7, ok, el, d);

    // 8. witness transport and b1/b2 separation on every satisfiable instance of 1–3
    let t0 = Instant::now();
    let mut sides = 0;
    let mut transports = 0;
    let transport_issue = all.iter().filter(|o| o.satisfiable).find_map(|o| {
        let want = if o.partition.is_some() { 4 } else { 2 };
        transports += o.transports;
        sides += o.partitions_checked;
        let bad = o.discrepancies.iter().find(|d| d.contains("transport") || d.contains("b1 and b2"));
        bad.map(|b| format!("instance {}: {b}", o.index))
            .or_else(|| (o.transports != want).then(|| format!("instance {}: {} of {want} transports ran", o.index, o.transports)))
            .or_else(|| (o.partition.is_some() && o.partitions_checked == 0).then(|| format!("instance {}: no balanced partition inspected", o.index)))
    });
    let ok = chains_ran && transport_issue.is_none();
    report.line(
        8,
        ok,
        t0.elapsed(),
        transport_issue.unwrap_or_else(|| format!("{transports} transports verified, {sides} balanced sides separate b1/b2")),
    );

    if report.failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
