use pdte_he::testing::{max_depth, random_circuit, run, CircuitShape};
use pdte_he::{BackendParams, KeyRequest, Mode, RlweBackend, Simulator, Tier};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use std::sync::OnceLock;

const N: usize = 4096;
const P: u64 = 65537;
const ROTATIONS: [i64; 5] = [1, -1, 2, 7, -100];

fn params() -> BackendParams {
    BackendParams::new(N, P, 1)
}

fn rlwe() -> &'static RlweBackend {
    static B: OnceLock<RlweBackend> = OnceLock::new();
    B.get_or_init(|| {
        let mut req = KeyRequest { relin: true, expansion: true, rotations: vec![] };
        for k in ROTATIONS {
            req.rotate(k, Tier::Top);
        }
        RlweBackend::generate(params(), Mode::Batched, &req, Some(3)).unwrap()
    })
}

fn shape(mode: Mode) -> CircuitShape {
    let q_bits = rlwe().chain().q_bits.iter().sum::<u32>();
    CircuitShape {
        mode,
        degree: N,
        plain_modulus: P,
        depth_budget: 1,
        rotations: ROTATIONS.to_vec(),
        ops: 10,
        noise_limit: q_bits - 17 - 12,
    }
}

fn agree(seed: u64, mode: Mode) {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let c = random_circuit(&mut rng, &shape(mode));
    assert!(max_depth(&c) <= 1);
    let sim = Simulator::new(params(), seed).unwrap();
    let want = run(&sim, &c).unwrap();
    let got = run(rlwe(), &c).unwrap();
    for (i, (g, w)) in got.iter().zip(&want).enumerate() {
        assert_eq!(g, w, "value {i} of circuit {c:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(std::env::var("PROPTEST_CASES").ok().and_then(|s| s.parse().ok()).unwrap_or(24)))]

    #[test]
    fn batched_circuits_agree(seed in any::<u64>()) {
        agree(seed, Mode::Batched);
    }

    #[test]
    fn polynomial_circuits_agree(seed in any::<u64>()) {
        agree(seed, Mode::Polynomial);
    }
}
