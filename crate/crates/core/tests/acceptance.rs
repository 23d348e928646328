//! Acceptance criteria. Runs with a custom harness so every criterion prints
//! exactly one PASS/FAIL line, followed by details when it fails.

use std::sync::Arc;
use std::time::{Duration, Instant};

use emrfuse::emr::{emr_fuse_n, ipf_oracle, zadeh_family_sources, EmrError};
use emrfuse::{
    conjunctive, dempster_fuse, emr_fuse, zadeh_family_oracle, Bba, PreBooleanAlgebra, Proposition,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ZADEH_TABLE_TOL: f64 = 1e-3;
const ZADEH_TABLE_BUDGET: Duration = Duration::from_secs(1);
const CLOSED_FORM_DRAWS: usize = 1000;
const CLOSED_FORM_TOL: f64 = 1e-5;
const CLOSED_FORM_BUDGET: Duration = Duration::from_secs(30);
const DST_TOL: f64 = 5e-4;
const EMR_ROW_TOL: f64 = 2e-3;
const COMPARISON_BUDGET: Duration = Duration::from_secs(5);
const ASSOCIATIVITY_TOL: f64 = 1e-6;
const PROPERTY_CASES: usize = 500;
const PROPERTY_BUDGET: Duration = Duration::from_secs(60);
const MARGINAL_TOL: f64 = 1e-8;
const COMMUTATIVITY_TOL: f64 = 1e-6;
const NEUTRAL_TOL: f64 = 1e-9;
const ENHANCEMENT_TOL: f64 = 1e-8;
const IPF_ENTROPY_TOL: f64 = 1e-6;
const CERTIFICATE_TOL: f64 = 1e-7;
const ANCHOR_TOL: f64 = 1e-12;

struct Verdict {
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Verdict {
    fn new() -> Self {
        Verdict {
            failures: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(what());
        }
    }

    fn close(&mut self, what: &str, got: f64, want: f64, tol: f64) {
        self.check((got - want).abs() <= tol, || {
            format!(
                "{what}: got {got:.6}, expected {want} (tol {tol:e}, off by {:.2e})",
                (got - want).abs()
            )
        });
    }

    fn budget(&mut self, start: Instant, budget: Duration) {
        let took = start.elapsed();
        self.notes.push(format!("{:.3} s", took.as_secs_f64()));
        self.check(took <= budget, || {
            format!("took {took:?}, budget {budget:?}")
        });
    }
}

fn zadeh_masses(b: &Bba) -> [f64; 4] {
    let alg = b.algebra();
    [
        b.mass(&alg.atom("a").unwrap()),
        b.mass(&alg.atom("b").unwrap()),
        b.mass(&alg.atom("c").unwrap()),
        b.mass(&alg.top()),
    ]
}

fn zadeh_table() -> Verdict {
    let mut v = Verdict::new();
    let rows: [((f64, f64), [f64; 4]); 4] = [
        ((0.499, 0.0), [0.499, 0.499, 0.0, 0.002]),
        ((0.3, 0.1), [0.3, 0.3, 0.175, 0.225]),
        ((0.3, 0.05), [0.3, 0.3, 0.09375, 0.30625]),
        ((0.3, 0.01), [0.3, 0.3, 0.01975, 0.38025]),
    ];
    let start = Instant::now();
    for ((ab, g), expected) in rows {
        let (_, m1, m2) = zadeh_family_sources(ab, g, ab, g).unwrap();
        let out = emr_fuse(&m1, &m2).unwrap();
        match out.fused() {
            Some(b) => {
                let got = zadeh_masses(b);
                for (name, (x, y)) in ["a", "b", "c", "abc"].iter().zip(got.iter().zip(expected)) {
                    v.close(&format!("row {ab}/{g} m({name})"), *x, y, ZADEH_TABLE_TOL);
                }
            }
            None => v.failures.push(format!("row {ab}/{g} was rejected")),
        }
    }
    let (_, m1, m2) = zadeh_family_sources(0.501, 0.0, 0.501, 0.0).unwrap();
    let out = emr_fuse(&m1, &m2).unwrap();
    v.check(out.is_rejected(), || "row 0.501/0 was not rejected".into());
    v.budget(start, ZADEH_TABLE_BUDGET);
    v
}

fn closed_form_agreement() -> Verdict {
    let mut v = Verdict::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let start = Instant::now();
    let mut feasible = 0;
    let mut worst: f64 = 0.0;
    for draw in 0..CLOSED_FORM_DRAWS {
        // Half the draws cover the whole parameter box, half are biased
        // towards the feasible region.
        let (a1, g1, b2, g2) = if draw % 2 == 0 {
            let a1 = rng.random::<f64>();
            let g1 = rng.random::<f64>() * (1.0 - a1);
            let b2 = rng.random::<f64>();
            let g2 = rng.random::<f64>() * (1.0 - b2);
            (a1, g1, b2, g2)
        } else {
            let a1 = rng.random::<f64>() * 0.5;
            let b2 = rng.random::<f64>() * (1.0 - a1);
            let room = 1.0 - a1 - b2;
            (
                a1,
                rng.random::<f64>() * room,
                b2,
                rng.random::<f64>() * room,
            )
        };
        let oracle = zadeh_family_oracle(a1, g1, b2, g2).unwrap();
        let (alg, m1, m2) = zadeh_family_sources(a1, g1, b2, g2).unwrap();
        let out = emr_fuse(&m1, &m2).unwrap();
        match (oracle.fused(), out.fused()) {
            (Some(want), Some(got)) => {
                feasible += 1;
                for p in alg.lattice() {
                    let label = alg.canonical_label(p);
                    let q = want.algebra().parse(&label).unwrap();
                    let err = (want.mass(&q) - got.mass(p)).abs();
                    worst = worst.max(err);
                    v.check(err <= CLOSED_FORM_TOL, || {
                        format!(
                            "({a1}, {g1}, {b2}, {g2}) m({}): solver {} vs closed form {}",
                            label,
                            got.mass(p),
                            want.mass(&q)
                        )
                    });
                }
            }
            (None, None) => {}
            (want, _) => v.failures.push(format!(
                "({a1}, {g1}, {b2}, {g2}): closed form says {}, solver disagrees",
                if want.is_some() {
                    "feasible"
                } else {
                    "infeasible"
                }
            )),
        }
    }
    v.notes.push(format!(
        "{feasible} feasible draws, worst mass error {worst:.2e}"
    ));
    v.budget(start, CLOSED_FORM_BUDGET);
    v
}

fn comparison_table() -> Verdict {
    let mut v = Verdict::new();
    let alg = Arc::new(PreBooleanAlgebra::powerset(&["a", "b", "c"]).unwrap());
    let masses = [
        ("a", 0.2),
        ("a|b", 0.2),
        ("a|c", 0.2),
        ("b|c", 0.2),
        ("top", 0.2),
    ];
    let m1 = Bba::parse(&alg, &masses).unwrap();
    let m2 = m1.clone();
    let labels = ["a", "b", "c", "a|b", "a|c", "b|c", "top"];
    let dst_row = [0.390, 0.087, 0.087, 0.131, 0.131, 0.131, 0.043];
    let emr_row = [0.411, 0.093, 0.093, 0.107, 0.107, 0.153, 0.036];

    let start = Instant::now();
    let ds = dempster_fuse(&m1, &m2).unwrap();
    let emr = emr_fuse(&m1, &m2).unwrap();
    v.budget(start, COMPARISON_BUDGET);
    for (label, want) in labels.iter().zip(dst_row) {
        v.close(
            &format!("dempster m({label})"),
            ds.mass(&alg.parse(label).unwrap()),
            want,
            DST_TOL,
        );
    }
    match emr.fused() {
        Some(b) => {
            for (label, want) in labels.iter().zip(emr_row) {
                v.close(
                    &format!("emr m({label})"),
                    b.mass(&alg.parse(label).unwrap()),
                    want,
                    EMR_ROW_TOL,
                );
            }
        }
        None => v
            .failures
            .push("emr rejected the comparison sources".into()),
    }
    v
}

fn non_associativity() -> Verdict {
    let mut v = Verdict::new();
    let alg = Arc::new(
        PreBooleanAlgebra::with_constraints(&["a", "na"], &["a & na = bot", "a | na = top"])
            .unwrap(),
    );
    let m1 = Bba::parse(&alg, &[("a", 0.5), ("top", 0.5)]).unwrap();
    let m2 = m1.clone();
    let m3 = Bba::parse(&alg, &[("na", 0.5), ("top", 0.5)]).unwrap();

    let m12 = emr_fuse(&m1, &m2).unwrap();
    let left = emr_fuse(m12.fused().unwrap(), &m3).unwrap();
    v.check(left.is_rejected(), || "(m1+m2)+m3 was not rejected".into());

    let m23 = emr_fuse(&m2, &m3).unwrap();
    let right = emr_fuse(&m1, m23.fused().unwrap()).unwrap();
    match right.fused() {
        Some(b) => {
            v.close(
                "m1+(m2+m3) m(a)",
                b.mass(&alg.atom("a").unwrap()),
                0.5,
                ASSOCIATIVITY_TOL,
            );
            v.close(
                "m1+(m2+m3) m(na)",
                b.mass(&alg.atom("na").unwrap()),
                0.5,
                ASSOCIATIVITY_TOL,
            );
        }
        None => v.failures.push("m1+(m2+m3) was rejected".into()),
    }
    v
}

fn random_algebra(rng: &mut ChaCha8Rng) -> Arc<PreBooleanAlgebra> {
    let three = rng.random_bool(0.6);
    let names: &[&str] = if three { &["a", "b", "c"] } else { &["a", "b"] };
    let pool: &[&str] = if three {
        &[
            "a & b = bot",
            "a & c = bot",
            "b & c = bot",
            "a | b | c = top",
            "a & b = a & c",
            "a & b & c = bot",
        ]
    } else {
        &["a & b = bot", "a | b = top"]
    };
    let constraints: Vec<&str> = pool
        .iter()
        .copied()
        .filter(|_| rng.random_bool(0.35))
        .collect();
    Arc::new(PreBooleanAlgebra::with_constraints(names, &constraints).unwrap())
}

fn random_bba(rng: &mut ChaCha8Rng, alg: &Arc<PreBooleanAlgebra>) -> Bba {
    let candidates: Vec<&Proposition> = alg.lattice().iter().filter(|p| !p.is_bot()).collect();
    let k = rng.random_range(1..=candidates.len().min(4));
    let mut chosen: Vec<Proposition> = Vec::new();
    while chosen.len() < k {
        let p = candidates[rng.random_range(0..candidates.len())].clone();
        if !chosen.contains(&p) {
            chosen.push(p);
        }
    }
    let weights: Vec<f64> = chosen.iter().map(|_| rng.random::<f64>() + 0.05).collect();
    let total: f64 = weights.iter().sum();
    let mut masses: Vec<(Proposition, f64)> = chosen
        .into_iter()
        .zip(weights)
        .map(|(p, w)| (p, w / total))
        .collect();
    // Keep the total exactly one up to rounding of a single entry.
    let rest: f64 = masses[1..].iter().map(|(_, m)| m).sum();
    masses[0].1 = 1.0 - rest;
    Bba::new(alg.clone(), masses, true).unwrap()
}

fn property_suites() -> Verdict {
    let mut v = Verdict::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0005);
    let start = Instant::now();
    let mut feasible = 0;
    let mut rejected = 0;
    let mut ipf_compared = 0;
    let mut neutral = 0;
    let (
        mut worst_marginal,
        mut worst_comm,
        mut worst_neutral,
        mut worst_enh,
        mut worst_ipf,
        mut worst_cert,
    ) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);

    while feasible < PROPERTY_CASES || neutral < PROPERTY_CASES {
        let alg = random_algebra(&mut rng);
        let b1 = random_bba(&mut rng, &alg);
        let b2 = random_bba(&mut rng, &alg);

        if neutral < PROPERTY_CASES {
            neutral += 1;
            let nu = Bba::total_ignorance(alg.clone());
            let out = emr_fuse_n(&[&b1, &nu]).unwrap();
            let fused = out
                .fused()
                .expect("fusion with total ignorance always exists");
            for p in alg.lattice() {
                let err = (fused.mass(p) - b1.mass(p)).abs();
                worst_neutral = worst_neutral.max(err);
                v.check(err <= NEUTRAL_TOL, || {
                    format!(
                        "neutral element off by {err:e} at {}",
                        alg.canonical_label(p)
                    )
                });
            }
        }

        let out = emr_fuse(&b1, &b2).unwrap();
        let Some(fused) = out.fused() else {
            rejected += 1;
            let swapped = emr_fuse(&b2, &b1).unwrap();
            v.check(swapped.is_rejected(), || {
                "rejection is not symmetric".into()
            });
            continue;
        };
        if feasible >= PROPERTY_CASES {
            continue;
        }
        feasible += 1;

        let d = &out.diagnostics;
        worst_marginal = worst_marginal.max(d.max_marginal_residual);
        v.check(d.max_marginal_residual <= MARGINAL_TOL, || {
            format!("marginal residual {:e}", d.max_marginal_residual)
        });

        v.check(fused.mass(&alg.bot()) == 0.0, || {
            format!("fused bot mass {}", fused.mass(&alg.bot()))
        });

        worst_cert = worst_cert.max(d.optimality_certificate);
        v.check(
            d.certified && d.optimality_certificate <= CERTIFICATE_TOL,
            || {
                format!(
                    "certificate {:e} (stop {:?})",
                    d.optimality_certificate, d.stop
                )
            },
        );

        let swapped = emr_fuse(&b2, &b1).unwrap();
        match swapped.fused() {
            Some(s) => {
                for p in alg.lattice() {
                    let err = (s.mass(p) - fused.mass(p)).abs();
                    worst_comm = worst_comm.max(err);
                    v.check(err <= COMMUTATIVITY_TOL, || {
                        format!("commutativity off by {err:e}")
                    });
                }
            }
            None => v
                .failures
                .push("swapped order rejected a feasible pair".into()),
        }

        for p in alg.lattice() {
            let bel = fused.belief(p).unwrap();
            let floor = b1.belief(p).unwrap().max(b2.belief(p).unwrap());
            let slack = bel - floor;
            worst_enh = worst_enh.min(slack);
            v.check(slack >= -ENHANCEMENT_TOL, || {
                format!(
                    "belief of {} dropped by {:e}",
                    alg.canonical_label(p),
                    -slack
                )
            });
        }

        match ipf_oracle(&[&b1, &b2]) {
            Ok(joint) => {
                ipf_compared += 1;
                let err = (joint.entropy() - d.entropy).abs();
                worst_ipf = worst_ipf.max(err);
                v.check(err <= IPF_ENTROPY_TOL, || {
                    format!(
                        "entropy {} vs fitted {} (off by {err:e})",
                        d.entropy,
                        joint.entropy()
                    )
                });
            }
            Err(EmrError::IpfNotConverged { .. }) => {}
            Err(e) => v.failures.push(format!("fitting failed: {e}")),
        }
    }
    v.notes.push(format!(
        "{feasible} feasible, {rejected} rejected, {neutral} neutral, {ipf_compared} fitted; worst: marginal {worst_marginal:.1e}, \
         commutativity {worst_comm:.1e}, neutral {worst_neutral:.1e}, enhancement {worst_enh:.1e}, entropy {worst_ipf:.1e}, \
         certificate {worst_cert:.1e}"
    ));
    v.check(ipf_compared >= PROPERTY_CASES / 2, || {
        format!("only {ipf_compared} fitted comparisons")
    });
    v.budget(start, PROPERTY_BUDGET);
    v
}

fn cardinalities() -> Verdict {
    let mut v = Verdict::new();
    let free = PreBooleanAlgebra::free(&["a", "b", "c"]).unwrap();
    let powerset = PreBooleanAlgebra::powerset(&["a", "b", "c"]).unwrap();
    let gamma = PreBooleanAlgebra::with_constraints(&["a", "b", "c"], &["a & b = a & c"]).unwrap();
    for (name, got, want) in [
        ("free", free.len(), 20),
        ("powerset", powerset.len(), 8),
        ("a&b=a&c", gamma.len(), 12),
    ] {
        v.check(got == want, || {
            format!("{name}: {got} elements, expected {want}")
        });
    }
    v
}

fn classical_anchors() -> Verdict {
    let mut v = Verdict::new();
    let boolean = Arc::new(
        PreBooleanAlgebra::with_constraints(&["a", "na"], &["a & na = bot", "a | na = top"])
            .unwrap(),
    );
    let a = boolean.atom("a").unwrap();
    let na = boolean.atom("na").unwrap();

    let m = Bba::parse(&boolean, &[("a", 0.5), ("top", 0.5)]).unwrap();
    let mu = conjunctive(&m, &m).unwrap();
    v.close("conjunctive mu(a)", mu.mu(&a), 0.75, ANCHOR_TOL);
    v.close(
        "conjunctive mu(top)",
        mu.mu(&boolean.top()),
        0.25,
        ANCHOR_TOL,
    );

    let m1 = Bba::parse(&boolean, &[("a", 0.5), ("na", 0.5)]).unwrap();
    let ds = dempster_fuse(&m1, &m).unwrap();
    v.close("dempster m(a)", ds.mass(&a), 2.0 / 3.0, ANCHOR_TOL);
    v.close("dempster m(na)", ds.mass(&na), 1.0 / 3.0, ANCHOR_TOL);
    v
}

type Criterion = (&'static str, fn() -> Verdict);

fn main() {
    let criteria: [Criterion; 7] = [
        ("1 zadeh-family table", zadeh_table),
        ("2 closed-form agreement", closed_form_agreement),
        ("3 comparison table", comparison_table),
        ("4 non-associativity", non_associativity),
        ("5 property suites", property_suites),
        ("6 algebra cardinalities", cardinalities),
        ("7 classical-rule anchors", classical_anchors),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let verdict = run();
        let status = if verdict.failures.is_empty() {
            "PASS"
        } else {
            "FAIL"
        };
        let notes = if verdict.notes.is_empty() {
            String::new()
        } else {
            format!(" ({})", verdict.notes.join("; "))
        };
        println!("criterion {name}: {status}{notes}");
        for f in verdict.failures.iter().take(10) {
            println!("    {f}");
        }
        if verdict.failures.len() > 10 {
            println!("    ... {} more", verdict.failures.len() - 10);
        }
        if !verdict.failures.is_empty() {
            failed += 1;
        }
    }
    println!("acceptance: {} of 7 criteria passed", 7 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
