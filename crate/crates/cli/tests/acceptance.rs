//! Acceptance suite: one PASS/FAIL line per criterion. Runs without the libtest
//! harness so the lines always reach the console.

use bridgecheck_cli::{sample_check, verify_system, LoadedSystem, VerifyFlags};
use bridgecheck_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

type Check = std::result::Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

fn load(name: &str) -> LoadedSystem {
    LoadedSystem::load(&fixture(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

const PROVED_FIXTURES: &[&str] = &[
    "counter_analog.json",
    "maze_affine.json",
    "maze_affine_ndet.json",
    "maze_saturating.json",
    "maze_saturating_ndet.json",
    "maze_offset.json",
    "maze_offset_ndet.json",
];

fn all_fixtures() -> impl Iterator<Item = &'static str> {
    PROVED_FIXTURES
        .iter()
        .copied()
        .chain(["maze_constant.json"])
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let v = f();
    (v, start.elapsed())
}

fn bx(bounds: &[(f64, f64)]) -> HyperBox {
    HyperBox::from_bounds(bounds).unwrap()
}

fn counter_analog() -> Check {
    let sys = load("counter_analog.json");
    let (out, elapsed) = timed(|| check_inductiveness(&sys.spec).unwrap());
    let Verdict::Proved { bridge } = &out.verdict else {
        return Err(format!("verdict {:?}", out.verdict));
    };
    let expected = vec![
        Clause::from((bx(&[(0.0, 2.0)]), bx(&[(-1.0, 1.0)]))),
        Clause::from((bx(&[(2.0, 4.0)]), bx(&[(1.0, 1.0)]))),
    ];
    ensure(bridge.clauses == expected, || format!("bridge {bridge:?}"))?;
    let s = out.stats;
    ensure(
        (s.splits, s.nnv_queries, s.smt_queries) == (1, 3, 4),
        || format!("stats {s:?}"),
    )?;
    ensure(elapsed < Duration::from_millis(100), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!("splits=1 nnv=3 smt=4, {elapsed:?}"))
}

fn affine_maze() -> Check {
    let mut details = Vec::new();
    for name in ["maze_affine.json", "maze_affine_ndet.json"] {
        for method in [BoundMethod::Ibp, BoundMethod::Crown] {
            let mut sys = load(name);
            sys.spec.options.bound_method = method;
            let (out, elapsed) = timed(|| check_inductiveness(&sys.spec).unwrap());
            ensure(out.is_proved(), || {
                format!("{name} {method:?}: {:?}", out.verdict)
            })?;
            ensure(out.stats.splits <= 2, || {
                format!("{name} {method:?}: {:?}", out.stats)
            })?;
            ensure(out.counters_consistent(), || {
                format!("{name} {method:?}: {:?}", out.stats)
            })?;
            ensure(elapsed < Duration::from_secs(1), || {
                format!("{name} {method:?}: took {elapsed:?}")
            })?;
            details.push(out.stats.splits.to_string());
        }
    }
    Ok(format!(
        "splits (det ibp/crown, ndet ibp/crown) = {}",
        details.join("/")
    ))
}

fn constant_maze() -> Check {
    let sys = load("maze_constant.json");
    let (out, elapsed) = timed(|| check_inductiveness(&sys.spec).unwrap());
    let Verdict::Falsified {
        witness, fstate, ..
    } = &out.verdict
    else {
        return Err(format!("verdict {:?}", out.verdict));
    };
    let w = witness.as_ref().ok_or("no concrete witness")?;
    ensure(fstate.contains_point(&w.state), || {
        "witness state outside the falsifying region".into()
    })?;
    // re-evaluate the transition from scratch
    let action = sys
        .spec
        .provider
        .action(&w.state)
        .unwrap()
        .ok_or("no action")?;
    ensure(action == w.action, || {
        format!("action {action:?} vs {:?}", w.action)
    })?;
    let mode = &sys.spec.env.modes()[w.mode];
    let joint: Vec<f64> = w.state.iter().chain(&action).copied().collect();
    ensure(mode.admits(&joint), || {
        "witness mode does not admit (s, a)".into()
    })?;
    let next: Vec<f64> = w
        .state
        .iter()
        .zip(&action)
        .map(|(s, a)| s + 0.1 * a)
        .collect();
    ensure(next == w.next, || format!("next {next:?} vs {:?}", w.next))?;
    ensure(sys.spec.candidate.contains_point(&w.state), || {
        "s ∉ candidate".into()
    })?;
    ensure(!sys.spec.candidate.contains_point(&next), || {
        "s' ∈ candidate".into()
    })?;
    ensure(elapsed < Duration::from_secs(5), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!("s={:?} → s'={:?}, {elapsed:?}", w.state, w.next))
}

fn counter_identities() -> Check {
    let mut runs = 0;
    let mut slowest = Duration::ZERO;
    let mut pattern = 0;
    for name in all_fixtures() {
        for method in [BoundMethod::Ibp, BoundMethod::Crown] {
            for kind in [SplitKind::AllDims, SplitKind::LongestDim] {
                let mut sys = load(name);
                sys.spec.options.bound_method = method;
                sys.spec.options.split = SplitStrategy::new(kind, 1e-6).unwrap();
                let (out, elapsed) = timed(|| check_inductiveness(&sys.spec).unwrap());
                let s = out.stats;
                let tag = format!("{name} {method:?} {kind:?}: {s:?} {}", out.is_proved());
                ensure(out.counters_consistent(), || tag.clone())?;
                let extra = u64::from(!out.is_proved());
                ensure(s.smt_queries == s.nnv_queries + s.splits + extra, || {
                    tag.clone()
                })?;
                let single_2d = sys.spec.state_dim() == 2 && sys.spec.candidate.boxes().len() == 1;
                if out.is_proved() && single_2d && kind == SplitKind::AllDims {
                    ensure(s.nnv_queries == 1 + 4 * s.splits, || tag.clone())?;
                    pattern += 1;
                }
                ensure(elapsed < Duration::from_secs(60), || {
                    format!("{tag}: took {elapsed:?}")
                })?;
                slowest = slowest.max(elapsed);
                runs += 1;
            }
        }
    }
    Ok(format!(
        "{runs} runs, {pattern} with nnv = 1 + 4·splits, slowest {slowest:?}"
    ))
}

fn random_net<R: Rng>(rng: &mut R) -> NeuralNet {
    let input = rng.random_range(1..=3);
    let depth = rng.random_range(1..=3);
    let mut width = input;
    let mut layers = Vec::new();
    for k in 0..depth {
        let last = k + 1 == depth;
        let out = if last {
            rng.random_range(1..=3)
        } else {
            rng.random_range(1..=16)
        };
        let rows: Vec<Vec<f64>> = (0..out)
            .map(|_| (0..width).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let bias: Vec<f64> = (0..out).map(|_| rng.random_range(-1.0..1.0)).collect();
        let act = if last && rng.random_bool(0.5) {
            Activation::Identity
        } else {
            Activation::Relu
        };
        layers.push(Layer::from_rows(&rows, &bias, act).unwrap());
        width = out;
    }
    NeuralNet::new(input, width, layers).unwrap()
}

fn within(psi: &HyperBox, y: &[f64]) -> bool {
    psi.intervals().iter().zip(y).all(|(i, &v)| {
        let tol = 1e-7 * v.abs().max(i.lo().abs()).max(i.hi().abs()).max(1.0);
        i.lo() - tol <= v && v <= i.hi() + tol
    })
}

fn bound_soundness() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let (pairs, samples) = (10_000, 10);
    let (mut ibp_bad, mut crown_bad) = (0, 0);
    for _ in 0..pairs {
        let net = random_net(&mut rng);
        let bounds: Vec<(f64, f64)> = (0..net.input_dim())
            .map(|_| {
                let c: f64 = rng.random_range(-2.0..2.0);
                let r: f64 = rng.random_range(0.0..1.5);
                (c - r, c + r)
            })
            .collect();
        let p = bx(&bounds);
        let ibp = net.post(&p, BoundMethod::Ibp).unwrap();
        let crown = net.post(&p, BoundMethod::Crown).unwrap();
        for _ in 0..samples {
            let x: Vec<f64> = bounds
                .iter()
                .map(|&(lo, hi)| rng.random_range(lo..=hi))
                .collect();
            let y = net.eval(&x).unwrap();
            ibp_bad += usize::from(!within(&ibp, &y));
            crown_bad += usize::from(!within(&crown, &y));
        }
    }
    ensure(ibp_bad == 0 && crown_bad == 0, || {
        format!("violations: ibp {ibp_bad}, crown {crown_bad}")
    })?;

    let net = NeuralNet::new(
        1,
        1,
        vec![
            Layer::from_rows(&[vec![1.0], vec![1.0]], &[0.0, 0.0], Activation::Relu).unwrap(),
            Layer::from_rows(&[vec![1.0, -1.0]], &[0.0], Activation::Identity).unwrap(),
        ],
    )
    .unwrap();
    let p = bx(&[(-1.0, 2.0)]);
    let ibp = net.post(&p, BoundMethod::Ibp).unwrap();
    let crown = net.post(&p, BoundMethod::Crown).unwrap();
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9;
    ensure(close(ibp.lo()[0], -2.0) && close(ibp.hi()[0], 2.0), || {
        format!("ibp {ibp:?}")
    })?;
    ensure(close(crown.hi()[0], 1.0), || format!("crown {crown:?}"))?;
    Ok(format!(
        "{} triples per method, 0 violations; cancellation ibp=[{}, {}] crown_hi={}",
        pairs * samples,
        ibp.lo()[0],
        ibp.hi()[0],
        crown.hi()[0]
    ))
}

/// Endpoints are multiples of 1/8 in [0, 1], so sampling every multiple of
/// 1/16 decides containment and disjointness exactly.
const GRID: usize = 16;

fn grid_points(dims: usize, lo: &[f64], hi: &[f64]) -> Vec<Vec<f64>> {
    let mut pts = vec![Vec::new()];
    for d in 0..dims {
        let coords: Vec<f64> = (0..=GRID)
            .map(|j| j as f64 / GRID as f64)
            .filter(|&c| lo[d] <= c && c <= hi[d])
            .collect();
        pts = pts
            .into_iter()
            .flat_map(|p| {
                coords.iter().map(move |&c| {
                    let mut q = p.clone();
                    q.push(c);
                    q
                })
            })
            .collect();
    }
    pts
}

fn dyadic_bounds<R: Rng>(rng: &mut R, dims: usize) -> Vec<(f64, f64)> {
    (0..dims)
        .map(|_| {
            let a = rng.random_range(0..=8u32);
            let b = rng.random_range(0..=8u32);
            (a.min(b) as f64 / 8.0, a.max(b) as f64 / 8.0)
        })
        .collect()
}

fn random_mixed<R: Rng>(rng: &mut R, dims: usize) -> MixedBox {
    MixedBox::new(
        dyadic_bounds(rng, dims)
            .into_iter()
            .map(|(lo, hi)| MixedInterval::new(lo, hi, rng.random_bool(0.3), rng.random_bool(0.3)))
            .collect(),
    )
}

fn geometry_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let instances = 10_000;
    let mut mismatches = Vec::new();
    let mut positives = [0usize; 3];
    for i in 0..instances {
        let dims = rng.random_range(1..=3);
        let query = bx(&dyadic_bounds(&mut rng, dims));
        let n = rng.random_range(0..=4);
        let cover: Vec<HyperBox> = (0..n).map(|_| bx(&dyadic_bounds(&mut rng, dims))).collect();
        let union = BoxUnion::new(dims, cover).unwrap();
        let pts = grid_points(dims, &query.lo(), &query.hi());

        let subset = box_subset_of_union(&query, &union).unwrap();
        let oracle_subset = pts.iter().all(|p| union.contains_point(p));
        if subset != oracle_subset {
            mismatches.push(format!("#{i} subset {query:?} ⊆ {union:?}: {subset}"));
        }
        let disjoint = box_disjoint_from_union(&query, &union).unwrap();
        let oracle_disjoint = !pts.iter().any(|p| union.contains_point(p));
        if disjoint != oracle_disjoint {
            mismatches.push(format!("#{i} disjoint {query:?} / {union:?}: {disjoint}"));
        }

        let region = random_mixed(&mut rng, dims);
        let guards: Vec<MixedBox> = (0..rng.random_range(0..=4))
            .map(|_| random_mixed(&mut rng, dims))
            .collect();
        let mixed = mixed_subset_of_union(&region, &guards);
        let all = vec![0.0; dims];
        let ones = vec![1.0; dims];
        let oracle_mixed = grid_points(dims, &all, &ones)
            .iter()
            .filter(|p| region.contains_point(p))
            .all(|p| guards.iter().any(|g| g.contains_point(p)));
        if mixed != oracle_mixed {
            mismatches.push(format!("#{i} mixed {region:?} ⊆ {guards:?}: {mixed}"));
        }
        positives[0] += usize::from(subset);
        positives[1] += usize::from(disjoint);
        positives[2] += usize::from(mixed);
    }
    ensure(mismatches.is_empty(), || {
        format!("{} mismatches, first: {}", mismatches.len(), mismatches[0])
    })?;
    ensure(
        positives
            .iter()
            .all(|&c| c > instances / 20 && c < instances - instances / 20),
        || format!("unbalanced instance mix {positives:?}"),
    )?;
    Ok(format!(
        "{instances} instances × (closed ⊆, disjoint, mixed ⊆), 0 mismatches; true counts {positives:?}"
    ))
}

fn sample_in<R: Rng>(b: &HyperBox, rng: &mut R) -> Vec<f64> {
    b.intervals()
        .iter()
        .map(|i| rng.random_range(i.lo()..=i.hi()))
        .collect()
}

fn bridge_validity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let samples = 10_000;
    let mut runs = 0;
    for name in PROVED_FIXTURES {
        for method in [BoundMethod::Ibp, BoundMethod::Crown] {
            let mut sys = load(name);
            sys.spec.options.bound_method = method;
            let spec = &sys.spec;
            let out = check_inductiveness(spec).unwrap();
            let Verdict::Proved { bridge } = &out.verdict else {
                return Err(format!("{name} {method:?} not proved: {:?}", out.verdict));
            };
            runs += 1;
            ensure(
                bridge_covers_candidate(bridge, &spec.candidate).unwrap(),
                || format!("{name} {method:?}: bridge does not cover the candidate"),
            )?;
            let cand = &spec.candidate.boxes()[0];
            for _ in 0..samples {
                // the controller's action is covered by some clause
                let s = sample_in(cand, &mut rng);
                let a = sample_in(&spec.provider.action_set(&s).unwrap().unwrap(), &mut rng);
                let covered = bridge
                    .clauses
                    .iter()
                    .any(|c| c.region.contains_point(&s) && c.actions.contains_point(&a));
                ensure(covered, || {
                    format!("{name} {method:?}: action not covered at s={s:?} a={a:?}")
                })?;

                // any transition allowed by a clause stays inside
                let c = &bridge.clauses[rng.random_range(0..bridge.len())];
                let s = sample_in(&c.region, &mut rng);
                let a = sample_in(&c.actions, &mut rng);
                if let Some((mode, next)) = spec.env.sample_successor(&s, &a, &mut rng).unwrap() {
                    ensure(spec.candidate.contains_point(&next), || {
                        format!("{name} {method:?}: clause transition leaves at s={s:?} a={a:?} mode {mode} s'={next:?}")
                    })?;
                }
            }
        }
    }
    Ok(format!("{runs} proved runs covered exactly; {samples} samples each for action coverage and clause transitions, 0 violations"))
}

fn oracle_consistency() -> Check {
    let n = 100_000;
    let mut proved = 0;
    for name in PROVED_FIXTURES {
        let sys = load(name);
        let report = verify_system(&sys, &VerifyFlags::default()).map_err(|e| e.to_string())?;
        ensure(report.outcome.is_proved(), || format!("{name} not proved"))?;
        proved += 1;
        let sampled = sample_check(&sys, n, 0).map_err(|e| e.to_string())?;
        ensure(sampled.violations == 0, || {
            format!("{name}: {} violations", sampled.violations)
        })?;
    }
    let sampled = sample_check(&load("maze_constant.json"), n, 0).map_err(|e| e.to_string())?;
    ensure(sampled.violations >= 1, || {
        "constant maze: no violations sampled".into()
    })?;
    Ok(format!(
        "{proved} proved systems: 0 violations in {n} samples each; constant maze: {} violations",
        sampled.violations
    ))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("counter analog end-to-end", counter_analog),
        ("affine maze controller proved", affine_maze),
        ("constant maze controller falsified", constant_maze),
        ("counter identities on every run", counter_identities),
        ("bound propagation soundness", bound_soundness),
        ("geometry oracle equivalence", geometry_oracle),
        ("bridge validity post-hoc", bridge_validity),
        ("sampling oracle consistency", oracle_consistency),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let result = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        match result {
            Ok(detail) => println!("PASS [{}] {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL [{}] {name}: {why}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
