#![allow(dead_code)]

use bridgecheck_core::*;

pub fn bx(bounds: &[(f64, f64)]) -> HyperBox {
    HyperBox::from_bounds(bounds).unwrap()
}

pub fn maze_candidate() -> BoxUnion {
    BoxUnion::single(bx(&[(0.25, 0.95), (0.55, 0.95)]))
}

/// x' = x + 0.1·c·a, y' = y + 0.1·c·b, c ∈ [c_lo, c_hi].
pub fn maze_env(c_lo: f64, c_hi: f64) -> EnvModel {
    let step = if c_lo == c_hi {
        Interval::point(0.1 * c_lo)
    } else {
        Interval::new(0.1 * c_lo, 0.1 * c_hi).unwrap()
    };
    let one = Interval::point(1.0);
    let mode = Mode {
        guard: MixedBox::unbounded(4),
        update: vec![
            AffineUpdate::new(
                vec![
                    Term { coeff: one, var: 0 },
                    Term {
                        coeff: step,
                        var: 2,
                    },
                ],
                Interval::point(0.0),
            ),
            AffineUpdate::new(
                vec![
                    Term { coeff: one, var: 1 },
                    Term {
                        coeff: step,
                        var: 3,
                    },
                ],
                Interval::point(0.0),
            ),
        ],
    };
    EnvModel::new(2, 2, vec![mode]).unwrap()
}

/// a = (0.6 − x, 0.75 − y) as a single identity layer.
pub fn affine_controller() -> NeuralNet {
    NeuralNet::new(
        2,
        2,
        vec![Layer::from_rows(
            &[vec![-1.0, 0.0], vec![0.0, -1.0]],
            &[0.6, 0.75],
            Activation::Identity,
        )
        .unwrap()],
    )
    .unwrap()
}

/// a = (1, 1) everywhere.
pub fn constant_controller() -> NeuralNet {
    NeuralNet::new(
        2,
        2,
        vec![Layer::from_rows(
            &[vec![0.0, 0.0], vec![0.0, 0.0]],
            &[1.0, 1.0],
            Activation::Identity,
        )
        .unwrap()],
    )
    .unwrap()
}

pub fn maze_system(net: NeuralNet, env: EnvModel, method: BoundMethod) -> SystemSpec {
    let options = VerifyOptions {
        bound_method: method,
        ..VerifyOptions::default()
    };
    SystemSpec::new(
        BoxUnion::single(bx(&[(0.3, 0.4), (0.6, 0.7)])),
        BoxUnion::single(bx(&[(0.22, 0.98), (0.54, 0.98)])),
        maze_candidate(),
        PostconditionProvider::Network { net, method },
        env,
        options,
    )
    .unwrap()
}
