//! Acceptance suite: one pass/fail line per criterion, tolerances pinned here.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::panic;
use std::time::{Duration, Instant};

use threadsplit_core::checks::{check_point, DEFAULT_ORDER};
use threadsplit_core::corpus::{by_id, CorpusEntry, CORPUS};
use threadsplit_core::cosmology::{
    build_metric, closed_forms, perturbed_efe, AlmostFlrwSpec, KNOWN_DISCREPANCIES,
};
use threadsplit_core::efe::{einstein_split, fluid_explicit};
use threadsplit_core::exprlang::{eval_f64, parse_expr, BinOp, Expr};
use threadsplit_core::metric::{load_spec, Matter};
use threadsplit_core::oracle::{assemble_metric4, project_frame, riemann4};
use threadsplit_core::pipeline::SplitPoint;
use threadsplit_core::report::{
    emit_report, expand_points, run_verification, Format, PointSource, RunConfig, SplitMix64,
};
use threadsplit_core::residual::ResidualBlock;
use threadsplit_core::structure::{ricci_split, RicciForm};

const POINTS_PER_METRIC: usize = 20;
const SEED: u64 = 0x5EED_2026;

const AC1_TOL: f64 = 1e-13;
const AC1_BUDGET: Duration = Duration::from_secs(1);
const AC2_TOL: f64 = 1e-9;
const AC2_BUDGET: Duration = Duration::from_secs(30);
const AC3_FORMS_TOL: f64 = 1e-10;
const AC3_ORACLE_TOL: f64 = 1e-9;
const AC4_TOL: f64 = 1e-9;
const AC5_TOL: f64 = 1e-10;
const AC6_TOL: f64 = 1e-8;
const AC7_CLOSED_TOL: f64 = 1e-9;
const AC7_THEOREM_TOL: f64 = 1e-11;
const AC8_FUZZ_INPUTS: usize = 10_000;

const AC_CORPUS: [&str; 5] = ["M0", "M1", "M2", "M3", "M4"];

type Outcome = Result<String, String>;

fn points(e: &CorpusEntry) -> Vec<[f64; 4]> {
    let mut rng = SplitMix64(
        SEED ^ e
            .id
            .bytes()
            .fold(0u64, |h, b| h.wrapping_mul(31).wrapping_add(b as u64)),
    );
    (0..POINTS_PER_METRIC)
        .map(|_| {
            std::array::from_fn(|k| {
                let (lo, hi) = e.bounds[k];
                lo + (hi - lo) * rng.next_f64()
            })
        })
        .collect()
}

fn corpus_blocks(ids: &[&str]) -> Result<Vec<(String, [f64; 4], ResidualBlock)>, String> {
    let mut out = Vec::new();
    for id in ids {
        let e = by_id(id).ok_or(format!("no corpus entry {id}"))?;
        let spec = e.spec();
        for x in points(e) {
            let b = check_point(&spec, x, DEFAULT_ORDER, None)
                .map_err(|err| format!("{id} {x:?}: {err}"))?;
            out.push((id.to_string(), x, b));
        }
    }
    Ok(out)
}

/// Largest value among entries named exactly or by prefix, with its location.
fn worst(blocks: &[(String, [f64; 4], ResidualBlock)], names: &[&str]) -> (f64, String) {
    let mut w = (0.0f64, String::new());
    for (id, x, b) in blocks {
        for (k, &v) in b.entries() {
            if names
                .iter()
                .any(|n| k == n || k.starts_with(&format!("{n}.")))
                && !(v <= w.0)
            {
                w = (v, format!("{k} on {id} at {x:?}"));
            }
        }
    }
    w
}

fn require(blocks: &[(String, [f64; 4], ResidualBlock)], names: &[&str], tol: f64) -> Outcome {
    for n in names {
        if !blocks.iter().all(|(_, _, b)| {
            b.entries()
                .keys()
                .any(|k| k == n || k.starts_with(&format!("{n}.")))
        }) {
            return Err(format!("check {n} missing from some point"));
        }
    }
    let (v, at) = worst(blocks, names);
    if v <= tol {
        Ok(format!("max {v:.2e} <= {tol:.0e}"))
    } else {
        Err(format!("{v:.3e} > {tol:.0e} ({at})"))
    }
}

fn ac1() -> Outcome {
    let start = Instant::now();
    let blocks = corpus_blocks(&["M0"])?;
    let m0 = by_id("M0").unwrap().spec();
    let mut quantities = 0.0f64;
    for x in points(by_id("M0").unwrap()) {
        let sp = SplitPoint::new(&m0, x, DEFAULT_ORDER).map_err(|e| e.to_string())?;
        let k = &sp.kin;
        for t in [
            &k.omega,
            &k.c,
            &k.a,
            &k.theta_ij,
            &k.sigma,
            &k.k,
            &k.b,
            &sp.conn.gamma,
            &sp.curv.rbar_low,
            &sp.curv.ricci,
        ] {
            quantities = quantities.max(t.max_abs());
        }
        for j in [k.psi, k.theta, k.sigma2, k.omega2, k.b2, sp.curv.scalar] {
            quantities = quantities.max(j.value().abs());
        }
        let r4 = riemann4(assemble_metric4(&sp.frame).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        let (fc, ric, ein) = project_frame(&r4, &sp.frame).map_err(|e| e.to_string())?;
        for t in [
            &fc.r_iljk, &fc.r_i0jk, &fc.r_il0k, &fc.r_i00k, &ric.r_ij, &ein.g_ij,
        ] {
            quantities = quantities.max(t.max_abs());
        }
    }
    let residuals = blocks
        .iter()
        .flat_map(|(_, _, b)| b.entries().values().copied())
        .fold(0.0, f64::max);
    let elapsed = start.elapsed();
    let m = quantities.max(residuals);
    if !(m <= AC1_TOL) {
        return Err(format!("max {m:.3e} > {AC1_TOL:.0e}"));
    }
    if elapsed > AC1_BUDGET {
        return Err(format!("took {elapsed:?} > {AC1_BUDGET:?}"));
    }
    Ok(format!("max {m:.2e}, {elapsed:.2?}"))
}

fn ac2() -> Outcome {
    let start = Instant::now();
    let blocks = corpus_blocks(&AC_CORPUS)?;
    let r = require(
        &blocks,
        &["oracle.curvature.4.5", "oracle.curvature.4.6"],
        AC2_TOL,
    )?;
    let elapsed = start.elapsed();
    if elapsed > AC2_BUDGET {
        return Err(format!("took {elapsed:?} > {AC2_BUDGET:?}"));
    }
    Ok(format!("{r}, {elapsed:.2?}"))
}

fn ac3() -> Outcome {
    let blocks = corpus_blocks(&AC_CORPUS)?;
    let a = require(&blocks, &["ricci.5.6-vs-5.7"], AC3_FORMS_TOL)?;
    let b = require(
        &blocks,
        &[
            "oracle.ricci.5.6",
            "oracle.ricci.5.7",
            "oracle.scalar.5.11",
            "oracle.einstein.6.3",
        ],
        AC3_ORACLE_TOL,
    )?;
    Ok(format!("forms {a}; oracle {b}"))
}

fn ac4() -> Outcome {
    let blocks = corpus_blocks(&AC_CORPUS)?;
    let always = [
        "vorticity.2.8a",
        "vorticity.2.8b",
        "bianchi.3.4",
        "constraint.3.6",
        "bianchi.3.13",
        "bianchi.3.14",
        "bianchi.3.15",
        "identity.4.7a",
        "identity.4.7b",
        "identity.4.7c",
        "identity.4.8",
        "identity.4.9",
        "identity.4.10a",
        "identity.4.10b",
    ];
    let r = require(&blocks, &always, AC4_TOL)?;
    // vorticity-free metrics must carry the extra identities
    let free: Vec<_> = blocks
        .iter()
        .filter(|(id, _, _)| id != "M3")
        .cloned()
        .collect();
    let extra = require(
        &free,
        &[
            "bianchi.3.16",
            "bianchi.3.17",
            "identity.4.11",
            "identity.4.12",
        ],
        AC4_TOL,
    )?;
    Ok(format!("{r}; vorticity-free {extra}"))
}

/// Dust solution for a = τ²: ρ = 3/(2πG τ⁶), p = 0.
const M1_DUST: &str =
    "[params]\npi = 3.141592653589793\n[metric]\nPhi = x0^2\ng11 = x0^4\ng22 = x0^4\ng33 = x0^4\n\
[matter]\nmode = explicit\nrho = 3/(2*pi*x0^6)\np = 0\n";

fn ac5() -> Outcome {
    let spec = load_spec(M1_DUST).map_err(|e| e.to_string())?;
    let Matter::Explicit(m) = &spec.matter else {
        return Err("expected explicit matter".into());
    };
    let cs = AlmostFlrwSpec::new(parse_expr("x0^2").unwrap());
    let mut worst = 0.0f64;
    let mut detail = String::new();
    for k in 0..5 {
        let tau = 1.0 + 0.5 * k as f64;
        let x = [tau, 0.3, -0.2, 0.1];
        let b = check_point(&spec, x, DEFAULT_ORDER, None).map_err(|e| e.to_string())?;
        let sp = SplitPoint::new(&spec, x, DEFAULT_ORDER).map_err(|e| e.to_string())?;
        let fl = fluid_explicit(m, &spec, &sp.frame).map_err(|e| e.to_string())?;
        let cf = closed_forms(&cs, x).map_err(|e| e.to_string())?;
        let pe = perturbed_efe(&cf, &sp, fl.rho.value(), fl.p.value(), 0.0, 1.0)
            .map_err(|e| e.to_string())?;
        for (name, v) in [
            ("tefe.7.4", b.get("tefe.7.4").unwrap_or(f64::NAN)),
            (
                "raychaudhuri.7.6",
                b.get("raychaudhuri.7.6").unwrap_or(f64::NAN),
            ),
            ("closed 9.21", pe.closed[2]),
            ("closed 9.22", pe.closed[3]),
        ] {
            if !(v <= worst) {
                worst = v;
                detail = format!("{name} at tau={tau}");
            }
        }
    }
    if !(worst <= AC5_TOL) {
        return Err(format!("{worst:.3e} > {AC5_TOL:.0e} ({detail})"));
    }
    // G_00 = 3𝓗² = 3 at τ = 2 on both paths
    let x = [2.0, 0.0, 0.0, 0.0];
    let sp = SplitPoint::new(&spec, x, DEFAULT_ORDER).map_err(|e| e.to_string())?;
    let r = ricci_split(&sp.frame, &sp.kin, &sp.curv, &sp.dv, RicciForm::Via57);
    let g00 = einstein_split(&r, &sp.curv, &sp.kin, &sp.dv, &sp.frame)
        .g_00
        .value();
    let r4 = riemann4(assemble_metric4(&sp.frame).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let g00_oracle = project_frame(&r4, &sp.frame)
        .map_err(|e| e.to_string())?
        .2
        .g_00
        .value();
    let d = (g00 - 3.0).abs().max((g00_oracle - 3.0).abs());
    if !(d <= AC5_TOL) {
        return Err(format!("G_00 split {g00} oracle {g00_oracle}, expected 3"));
    }
    Ok(format!(
        "max {worst:.2e}; G_00 = {g00:.15} (oracle {g00_oracle:.15})"
    ))
}

fn ac6() -> Outcome {
    let ids: Vec<&str> = CORPUS.iter().map(|e| e.id).collect();
    let blocks = corpus_blocks(&ids)?;
    require(
        &blocks,
        &[
            "cons.8.2",
            "cons.8.3",
            "cons.energy.8.5",
            "cons.momentum.8.6",
        ],
        AC6_TOL,
    )
}

fn m2_cosmo() -> AlmostFlrwSpec {
    let mut s = AlmostFlrwSpec::new(parse_expr("x0^2").unwrap());
    s.big_a = parse_expr("0.05*cos(x1)*exp(-x0/4)").unwrap();
    s.big_b = s.big_a.clone();
    s
}

fn ac7() -> Outcome {
    let cs = m2_cosmo();
    let built = build_metric(&cs).map_err(|e| e.to_string())?;
    let m2 = by_id("M2").unwrap();
    let file_spec = m2.spec();
    let docs = include_str!("../../../docs/known-discrepancies.md");
    let mut closed = 0.0f64;
    let mut theorem = 0.0f64;
    for x in points(m2) {
        // the builder reproduces the corpus file
        let a = SplitPoint::new(&built, x, DEFAULT_ORDER).map_err(|e| e.to_string())?;
        let b = SplitPoint::new(&file_spec, x, DEFAULT_ORDER).map_err(|e| e.to_string())?;
        let same = a
            .frame
            .gbar
            .max_rel_diff(&b.frame.gbar)
            .max((a.frame.phi - b.frame.phi).value().abs());
        if !(same <= 1e-14) {
            return Err(format!(
                "built metric differs from corpus M2 by {same:e} at {x:?}"
            ));
        }
        let block = check_point(&built, x, DEFAULT_ORDER, Some(&cs)).map_err(|e| e.to_string())?;
        for (k, &v) in block.entries() {
            if let Some(name) = k.strip_prefix("cosmo.closed.") {
                if KNOWN_DISCREPANCIES.contains(&name) {
                    if !docs.contains(name) {
                        return Err(format!("{name} is a known discrepancy but undocumented"));
                    }
                    continue;
                }
                if !(v <= AC7_CLOSED_TOL) {
                    return Err(format!("{k} = {v:.3e} at {x:?}"));
                }
                closed = closed.max(v);
            }
        }
        for n in [
            "cosmo.shear-free",
            "cosmo.vorticity-free",
            "cosmo.umbilical",
            "cosmo.closed.9.8",
        ] {
            let v = block.get(n).ok_or(format!("{n} missing"))?;
            if !(v <= AC7_THEOREM_TOL) {
                return Err(format!("{n} = {v:.3e} at {x:?}"));
            }
            theorem = theorem.max(v);
        }
    }
    for name in KNOWN_DISCREPANCIES {
        if !docs.contains(name) {
            return Err(format!("{name} missing from docs/known-discrepancies.md"));
        }
    }
    Ok(format!(
        "closed forms max {closed:.2e}; theorem checks max {theorem:.2e}"
    ))
}

fn golden() -> Vec<&'static str> {
    include_str!("data/golden_expressions.txt")
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect()
}

fn ac8() -> Outcome {
    let corpus = golden();
    if corpus.len() < 30 {
        return Err(format!(
            "golden corpus has {} < 30 expressions",
            corpus.len()
        ));
    }
    for t in &corpus {
        let e = parse_expr(t).map_err(|err| format!("{t}: {err}"))?;
        let again = parse_expr(&e.to_string()).map_err(|err| format!("reparse of {t}: {err}"))?;
        if again != e {
            return Err(format!("round trip changed {t}"));
        }
    }
    let v = eval_f64(&parse_expr("2^3^2").unwrap(), [0.0; 4], &BTreeMap::new());
    if v != Some(512.0) {
        return Err(format!("2^3^2 = {v:?}"));
    }
    let want = Expr::neg(Expr::binary(BinOp::Pow, Expr::ident("x1"), Expr::num(2.0)));
    if parse_expr("-x1^2").unwrap() != want {
        return Err("-x1^2 is not -(x1^2)".into());
    }
    let alphabet: Vec<char> = "x0123456789.eE+-*/^() sincoexptalnqrhu,_#\u{e9}\u{3c0}"
        .chars()
        .collect();
    let mut rng = SplitMix64(SEED);
    let mut ok = 0usize;
    for _ in 0..AC8_FUZZ_INPUTS {
        let len = (rng.next_u64() % 40) as usize;
        let s: String = (0..len)
            .map(|_| alphabet[(rng.next_u64() % alphabet.len() as u64) as usize])
            .collect();
        match panic::catch_unwind(|| parse_expr(&s).is_ok()) {
            Ok(true) => ok += 1,
            Ok(false) => {}
            Err(_) => return Err(format!("parser panicked on {s:?}")),
        }
    }
    Ok(format!(
        "{} golden expressions round-trip; fuzz {AC8_FUZZ_INPUTS} inputs, {ok} parsed, rest SyntaxError",
        corpus.len()
    ))
}

fn ac9() -> Outcome {
    let m2 = by_id("M2").unwrap();
    let run = |threads| {
        let mut c = RunConfig::new(
            m2.spec(),
            m2.text.to_string(),
            PointSource::List(points(m2)),
        );
        c.threads = Some(threads);
        run_verification(&c).map(|r| emit_report(&r, Format::Json))
    };
    let one = run(1).map_err(|e| e.to_string())?;
    let eight = run(8).map_err(|e| e.to_string())?;
    if one != eight {
        return Err("reports differ between 1 and 8 threads".into());
    }
    let again = run(8).map_err(|e| e.to_string())?;
    if again != eight {
        return Err("reports differ between repeated runs".into());
    }
    // seeded sampling is reproducible too
    let src = PointSource::Random {
        n: 5,
        seed: 9,
        bounds: m2.sample_box(),
    };
    if expand_points(&src) != expand_points(&src) {
        return Err("random points not reproducible".into());
    }
    Ok(format!("{} bytes identical", one.len()))
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("AC-1 null suite", ac1),
        ("AC-2 dual-path curvature", ac2),
        ("AC-3 ricci/scalar/einstein", ac3),
        ("AC-4 identity suites", ac4),
        ("AC-5 friedmann reproduction", ac5),
        ("AC-6 conservation", ac6),
        ("AC-7 almost-FLRW closed forms", ac7),
        ("AC-8 parser", ac8),
        ("AC-9 determinism", ac9),
    ];
    let mut failed = Vec::new();
    for (name, f) in criteria {
        match f() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                println!("FAIL {name}: {detail}");
                failed.push(name);
            }
        }
    }
    assert!(failed.is_empty(), "failed: {failed:?}");
}

#[test]
fn dust_density_matches_friedmann() {
    // ρ = 3𝓗²/(8πG a²) with 𝓗 = 2/τ, a = τ²
    let tau: f64 = 1.7;
    let rho = 3.0 * (2.0 / tau).powi(2) / (8.0 * PI * tau.powi(4));
    let spec = load_spec(M1_DUST).unwrap();
    let Matter::Explicit(m) = &spec.matter else {
        panic!()
    };
    let v = eval_f64(&m.rho, [tau, 0.0, 0.0, 0.0], &spec.params).unwrap();
    assert!((v - rho).abs() <= 1e-15 * rho);
}
