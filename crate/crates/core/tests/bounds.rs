use bridgecheck_core::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_net<R: Rng>(rng: &mut R) -> NeuralNet {
    let input = rng.random_range(1..=3);
    let depth = rng.random_range(1..=3);
    let mut width = input;
    let mut layers = Vec::new();
    for k in 0..depth {
        let out = if k + 1 == depth {
            rng.random_range(1..=3)
        } else {
            rng.random_range(1..=16)
        };
        let rows: Vec<Vec<f64>> = (0..out)
            .map(|_| (0..width).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let bias: Vec<f64> = (0..out).map(|_| rng.random_range(-1.0..1.0)).collect();
        let act = if k + 1 == depth && rng.random_bool(0.5) {
            Activation::Identity
        } else {
            Activation::Relu
        };
        layers.push(Layer::from_rows(&rows, &bias, act).unwrap());
        width = out;
    }
    NeuralNet::new(input, width, layers).unwrap()
}

fn random_box<R: Rng>(rng: &mut R, dims: usize) -> HyperBox {
    let bounds: Vec<(f64, f64)> = (0..dims)
        .map(|_| {
            let c: f64 = rng.random_range(-2.0..2.0);
            let r: f64 = rng.random_range(0.0..1.5);
            (c - r, c + r)
        })
        .collect();
    HyperBox::from_bounds(&bounds).unwrap()
}

fn within(psi: &HyperBox, y: &[f64], rel: f64) -> bool {
    psi.intervals().iter().zip(y).all(|(i, &v)| {
        let tol = rel * v.abs().max(i.lo().abs()).max(i.hi().abs()).max(1.0);
        i.lo() - tol <= v && v <= i.hi() + tol
    })
}

#[test]
fn both_methods_contain_sampled_outputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..2_000 {
        let net = random_net(&mut rng);
        let p = random_box(&mut rng, net.input_dim());
        let ibp = net.ibp_post(&p).unwrap();
        let crown = net.crown_post(&p).unwrap();
        for _ in 0..5 {
            let x: Vec<f64> = p
                .intervals()
                .iter()
                .map(|i| rng.random_range(i.lo()..=i.hi()))
                .collect();
            let y = net.eval(&x).unwrap();
            assert!(within(&ibp, &y, 1e-7), "IBP {ibp:?} misses {y:?}");
            assert!(within(&crown, &y, 1e-7), "CROWN {crown:?} misses {y:?}");
        }
    }
}

/// Bridge clauses are checked against concrete `eval` outputs, so containment
/// must hold bit for bit, not just within a tolerance.
#[test]
fn both_methods_contain_eval_without_tolerance() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..2_000 {
        let net = random_net(&mut rng);
        let p = random_box(&mut rng, net.input_dim());
        let ibp = net.ibp_post(&p).unwrap();
        let crown = net.crown_post(&p).unwrap();
        assert!(crown.is_subset_of(&ibp));
        for _ in 0..5 {
            let x: Vec<f64> = p
                .intervals()
                .iter()
                .map(|i| rng.random_range(i.lo()..=i.hi()))
                .collect();
            let y = net.eval(&x).unwrap();
            assert!(ibp.contains_point(&y), "IBP {ibp:?} misses {y:?}");
            assert!(crown.contains_point(&y), "CROWN {crown:?} misses {y:?}");
        }
    }
}

#[test]
fn point_boxes_collapse_to_eval() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..500 {
        let net = random_net(&mut rng);
        let x: Vec<f64> = (0..net.input_dim())
            .map(|_| rng.random_range(-2.0..2.0))
            .collect();
        let p = HyperBox::point(&x).unwrap();
        let y = net.eval(&x).unwrap();
        assert_eq!(net.ibp_post(&p).unwrap(), HyperBox::point(&y).unwrap());
        let crown = net.crown_post(&p).unwrap();
        for (i, v) in crown.intervals().iter().zip(&y) {
            assert!((i.lo() - v).abs() <= 1e-9 * v.abs().max(1.0));
            assert!((i.hi() - v).abs() <= 1e-9 * v.abs().max(1.0));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn ibp_is_inclusion_monotone(seed in any::<u64>(), shrink in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 3)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = random_net(&mut rng);
        let outer = random_box(&mut rng, net.input_dim());
        let inner_bounds: Vec<(f64, f64)> = outer
            .intervals()
            .iter()
            .zip(&shrink)
            .map(|(i, &(a, b))| {
                let u = i.lo() + a.min(b) * i.width();
                let v = i.lo() + a.max(b) * i.width();
                (u, v)
            })
            .collect();
        let inner = HyperBox::from_bounds(&inner_bounds).unwrap();
        prop_assert!(net.ibp_post(&inner).unwrap().is_subset_of(&net.ibp_post(&outer).unwrap()));
    }
}
