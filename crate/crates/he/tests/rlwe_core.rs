use pdte_he::rlwe::context::{ChainSpec, Context};
use pdte_he::rlwe::keys::SecretKey;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use std::collections::HashMap;
use std::time::Instant;

fn ctx(n: usize, q_bits: Vec<u32>) -> Context {
    Context::new(ChainSpec { degree: n, plain_modulus: 65537, q_bits, special_bits: 61 })
}

#[test]
fn batched_roundtrip_mul_rotate() {
    let c = ctx(4096, vec![60, 60, 60]);
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let sk = SecretKey::generate(&c, &mut rng);
    let rlk = c.relin_key(&sk, &mut rng);
    let half = c.n / 2;
    let a: Vec<u64> = (0..half).map(|_| rng.gen_range(0..65537)).collect();
    let b: Vec<u64> = (0..half).map(|_| rng.gen_range(0..65537)).collect();
    let ca = c.encrypt_sk(&sk, &c.encode_slots(&a), &mut rng);
    let cb = c.encrypt_sk(&sk, &c.encode_slots(&b), &mut rng);
    assert_eq!(c.decode_slots(&c.decrypt(&sk, &ca)), a);
    println!("fresh budget {:.1}", c.noise_budget(&sk, &ca));
    let prod = c.mul(&ca, &cb, &rlk);
    println!("mul budget {:.1}", c.noise_budget(&sk, &prod));
    let want: Vec<u64> = a.iter().zip(&b).map(|(x, y)| x * y % 65537).collect();
    assert_eq!(c.decode_slots(&c.decrypt(&sk, &prod)), want);
    let prod2 = c.mul(&prod, &ca, &rlk);
    println!("mul2 budget {:.1}", c.noise_budget(&sk, &prod2));
    let want2: Vec<u64> = want.iter().zip(&a).map(|(x, y)| x * y % 65537).collect();
    assert_eq!(c.decode_slots(&c.decrypt(&sk, &prod2)), want2);

    let k = 5i64;
    let g = c.rotation_galois(k);
    let gk = c.galois_key(&sk, g, 3, &mut rng);
    let rot = c.apply_galois(&ca, g, &gk);
    println!("rot budget {:.1}", c.noise_budget(&sk, &rot));
    let got = c.decode_slots(&c.decrypt(&sk, &rot));
    for i in 0..half {
        assert_eq!(got[i], a[(i + half - k as usize) % half]);
    }
    let rows = c.decode_rows(&c.decrypt(&sk, &rot));
    assert_eq!(&rows[..half], &rows[half..]);
}

#[test]
fn polynomial_trace_extracts_coefficient() {
    let c = ctx(4096, vec![60, 60]);
    let mut rng = ChaCha20Rng::seed_from_u64(2);
    let sk = SecretKey::generate(&c, &mut rng);
    let m: Vec<u64> = (0..c.n).map(|_| rng.gen_range(0..65537)).collect();
    let ct = c.encrypt_sk(&sk, &m, &mut rng);
    let keys: HashMap<usize, _> =
        c.trace_galois().into_iter().map(|g| (g, c.galois_key(&sk, g, 2, &mut rng))).collect();
    let k = 77;
    let shifted = c.mul_monomial(&ct, -(k as i64));
    let tr = c.trace(&shifted, &keys);
    println!("trace budget {:.1}", c.noise_budget(&sk, &tr));
    let out = c.decrypt(&sk, &tr);
    assert_eq!(out[0], m[k] * 4096 % 65537);
    assert!(out[1..].iter().all(|&x| x == 0));
}

#[test]
#[ignore]
fn timing_16384() {
    let c = ctx(16384, vec![60; 6]);
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let sk = SecretKey::generate(&c, &mut rng);
    let rlk = c.relin_key(&sk, &mut rng);
    let half = c.n / 2;
    let a: Vec<u64> = (0..half).map(|_| rng.gen_range(0..65537)).collect();
    let ca = c.encrypt_sk(&sk, &c.encode_slots(&a), &mut rng);
    let t0 = Instant::now();
    let p = c.mul(&ca, &ca, &rlk);
    println!("mul L=6 {:?}", t0.elapsed());
    let mut x = p;
    for _ in 0..4 {
        let t0 = Instant::now();
        x = c.mul(&x, &x, &rlk);
        println!("mul budget {:.1} {:?}", c.noise_budget(&sk, &x), t0.elapsed());
    }
    let low = c.mod_switch_to(&ca, 2);
    let g = c.rotation_galois(3);
    let gk = c.galois_key(&sk, g, 2, &mut rng);
    let t0 = Instant::now();
    let r = c.apply_galois(&low, g, &gk);
    println!("rotate L=2 {:?}", t0.elapsed());
    let dec = c.decompose_ct(&low);
    let t0 = Instant::now();
    let _e = c.galois_hoisted_ext(&low, &dec, g, &gk);
    println!("hoisted ext L=2 {:?}", t0.elapsed());
    let t0 = Instant::now();
    let _ = c.ext_mod_down(&_e);
    println!("mod down L=2 {:?}", t0.elapsed());
    let _ = r;
}
