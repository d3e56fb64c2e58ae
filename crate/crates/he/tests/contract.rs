use pdte_he::{
    BackendParams, HeBackend, HeError, KeyRequest, Mode, PolyPlain, RlweBackend, Simulator, SlotVector, Tier,
};

const P: u64 = 65537;

fn sim(n: usize, depth: usize) -> Simulator {
    Simulator::new(BackendParams::new(n, P, depth), 7).unwrap()
}

fn rlwe() -> RlweBackend {
    let mut req = KeyRequest { relin: true, expansion: true, rotations: vec![] };
    for k in [1, -1, 3, 2047, 2045] {
        req.rotate(k, Tier::Top);
    }
    RlweBackend::generate(BackendParams::new(4096, P, 1), Mode::Batched, &req, Some(11)).unwrap()
}

fn slots<B: HeBackend>(b: &B, f: impl Fn(usize) -> u64) -> SlotVector {
    SlotVector { slots: (0..b.slots()).map(f).collect() }
}

fn monomial<B: HeBackend>(b: &B, k: usize) -> PolyPlain {
    PolyPlain::monomial(b.params().degree, k as i64, b.plain_modulus())
}

fn check_contract<B: HeBackend>(b: &B) {
    let n = b.params().degree;
    let half = n / 2;

    let v = slots(b, |i| (i as u64 * 31 + 5) % P);
    let ct = b.encrypt_slots(&v).unwrap();
    assert_eq!(b.decrypt_slots(&ct).unwrap(), v);
    assert_eq!(b.depth(&ct), 0);

    let x = monomial(b, 9);
    let cx = b.encrypt_poly(&x).unwrap();
    assert_eq!(b.decrypt_poly(&cx).unwrap(), x);

    let inc = b.encrypt_slots(&slots(b, |i| i as u64 + 1)).unwrap();
    let ones = b.encode_slots(&slots(b, |_| 1)).unwrap();
    assert_eq!(b.decrypt_slots(&b.add_plain(&inc, &ones).unwrap()).unwrap(), slots(b, |i| i as u64 + 2));

    let sq = b.mul(&inc, &inc).unwrap();
    assert_eq!(b.depth(&sq), 1);
    assert_eq!(b.decrypt_slots(&sq).unwrap(), slots(b, |i| ((i as u64 + 1) * (i as u64 + 1)) % P));
    assert_eq!(b.depth(&b.add(&sq, &inc).unwrap()), 1);
    assert_eq!(b.depth(&b.mul_plain(&sq, &ones).unwrap()), 1);

    // polynomial products wrap negacyclically
    let wrap = b.mul(&b.encrypt_poly(&monomial(b, n - 2)).unwrap(), &b.encrypt_poly(&monomial(b, 7)).unwrap()).unwrap();
    let mut want = vec![0; n];
    want[5] = P - 1;
    assert_eq!(b.decrypt_poly(&wrap).unwrap().coeffs, want);

    let e0 = b.encrypt_slots(&slots(b, |i| u64::from(i == 0))).unwrap();
    assert_eq!(b.decrypt_slots(&b.rotate(&e0, 1).unwrap()).unwrap(), slots(b, |i| u64::from(i == 1)));
    assert_eq!(b.decrypt_slots(&b.rotate(&ct, 0).unwrap()).unwrap(), v);
    let there = b.rotate(&ct, 3).unwrap();
    let back = b.rotate(&there, half as i64 - 3).unwrap();
    assert_eq!(b.decrypt_slots(&back).unwrap(), v);
    assert_eq!(b.decrypt_slots(&b.rotate(&ct, -1).unwrap()).unwrap(), v.rotate(-1));

    let h = b.hoist(&ct).unwrap();
    for k in [1, 3, -1] {
        assert_eq!(b.decrypt_slots(&b.rotate_hoisted(&h, k).unwrap()).unwrap(), v.rotate(k));
    }
    let mask = slots(b, |i| (i % 5) as u64);
    let mut acc = b.lazy_mul_plain(&b.lazy_rotate(&h, 1).unwrap(), &b.encode_slots(&mask).unwrap()).unwrap();
    b.lazy_sub(&mut acc, &b.lazy_rotate(&h, 3).unwrap()).unwrap();
    b.lazy_add(&mut acc, &b.lazy(&ct)).unwrap();
    b.lazy_add_scalar(&mut acc, 4);
    b.lazy_neg(&mut acc);
    let got = b.decrypt_slots(&b.lazy_finish(&acc)).unwrap();
    let (r1, r3) = (v.rotate(1), v.rotate(3));
    let want = slots(b, |i| {
        let s = (r1.slots[i] * mask.slots[i] + 2 * P - r3.slots[i] + v.slots[i] + 4) % P;
        (P - s) % P
    });
    assert_eq!(got, want);

    for (input, k, expect) in [(monomial(b, 5), 5, 1), (monomial(b, 5), 3, 0)] {
        let e = b.expand_at(&b.encrypt_poly(&input).unwrap(), k).unwrap();
        assert_eq!(b.decrypt_poly(&e).unwrap().coeffs[0], expect);
    }
    let mut lin = vec![0; n];
    lin[0] = 3;
    lin[1] = 2;
    let e = b.expand_at(&b.encrypt_poly(&PolyPlain { coeffs: lin }).unwrap(), 1).unwrap();
    assert_eq!(b.decrypt_poly(&e).unwrap().coeffs[0], 2);

    let low = b.lower(&sq, Tier::Low);
    assert_eq!(b.decrypt_slots(&low).unwrap(), b.decrypt_slots(&sq).unwrap());
    let mid = b.lower(&ct, Tier::Mid);
    assert_eq!(b.decrypt_slots(&b.rotate(&mid, 1).unwrap()).unwrap(), v.rotate(1));

    let blob = b.serialize_ct(&sq);
    let round = b.deserialize_ct(&blob).unwrap();
    assert_eq!(b.decrypt_slots(&round).unwrap(), b.decrypt_slots(&sq).unwrap());
    assert_eq!(b.depth(&round), 1);
    assert!(b.deserialize_ct(&blob[..blob.len() - 1]).is_err());

    assert!(matches!(b.add(&ct, &cx), Err(HeError::ModeMismatch { .. })));
    assert!(b.rotate(&cx, 1).is_err());
    assert!(b.expand_at(&ct, 0).is_err());
    assert!(matches!(b.expand_at(&cx, n), Err(HeError::OutOfRange { .. })));
    assert!(matches!(b.mul(&sq, &sq), Err(HeError::DepthExceeded { .. })));

    let r = b.random_vec(1000, true);
    assert!(r.iter().all(|&x| x > 0 && x < P));
}

#[test]
fn simulator_meets_contract() {
    check_contract(&sim(4096, 1));
}

#[test]
fn rlwe_meets_contract() {
    check_contract(&rlwe());
}

#[test]
fn negacyclic_law_exhaustive_n8() {
    let b = sim(8, 1);
    for i in 0..8 {
        for j in 0..8 {
            let prod = b.mul(&b.encrypt_poly(&monomial(&b, i)).unwrap(), &b.encrypt_poly(&monomial(&b, j)).unwrap());
            let got = b.decrypt_poly(&prod.unwrap()).unwrap().coeffs;
            let mut want = vec![0u64; 8];
            if i + j < 8 {
                want[i + j] = 1;
            } else {
                want[i + j - 8] = P - 1;
            }
            assert_eq!(got, want, "X^{i} * X^{j}");
        }
    }
}

#[test]
fn simulator_small_examples() {
    let b = sim(8, 1);
    let x2 = b.encrypt_poly(&monomial(&b, 2)).unwrap();
    let x7 = b.encrypt_poly(&monomial(&b, 7)).unwrap();
    assert_eq!(b.decrypt_poly(&b.mul(&x2, &x7).unwrap()).unwrap().coeffs, vec![0, P - 1, 0, 0, 0, 0, 0, 0]);
    let v = b.encrypt_slots(&SlotVector { slots: vec![1, 2, 3, 4] }).unwrap();
    let w = b.encrypt_slots(&SlotVector { slots: vec![1, 1, 1, 1] });
    assert_eq!(b.decrypt_slots(&b.add(&v, &w.unwrap()).unwrap()).unwrap().slots, vec![2, 3, 4, 5]);
    let e = b.encrypt_slots(&SlotVector { slots: vec![1, 0, 0, 0] }).unwrap();
    assert_eq!(b.decrypt_slots(&b.rotate(&e, 1).unwrap()).unwrap().slots, vec![0, 1, 0, 0]);
}

#[test]
fn simulator_is_reproducible_under_seed() {
    let a = sim(16, 0).random_vec(64, false);
    let b = sim(16, 0).random_vec(64, false);
    assert_eq!(a, b);
}

#[test]
fn batched_mode_needs_congruent_prime() {
    let b = Simulator::new(BackendParams::new(16384, 12289, 1), 0).unwrap();
    assert!(b.encrypt_slots(&SlotVector::zero(8192)).is_err());
    assert!(b.encrypt_poly(&PolyPlain::zero(16384)).is_ok());
}

#[test]
fn rlwe_public_view_cannot_decrypt() {
    let b = rlwe();
    let public = b.public_view();
    let m = SlotVector::filled(b.slots(), 3);
    let ct = b.encrypt_slots(&m).unwrap();
    let out = public.mul_scalar(&ct, 2);
    assert!(matches!(public.decrypt_slots(&out), Err(HeError::NoSecretKey)));
    assert_eq!(b.decrypt_slots(&out).unwrap(), SlotVector::filled(b.slots(), 6));
}

#[test]
fn rlwe_missing_rotation_key_is_reported() {
    let b = rlwe();
    let ct = b.encrypt_slots(&SlotVector::zero(b.slots())).unwrap();
    assert!(matches!(b.rotate(&ct, 5), Err(HeError::MissingKey(_))));
}

#[test]
fn rlwe_key_material_round_trips() {
    use pdte_he::rlwe::serialize::{read_backend, write_eval_keys, write_secret_key};
    let b = rlwe();
    let eval = write_eval_keys(&b);
    let secret = write_secret_key(&b).unwrap();
    let server = read_backend(&eval, None).unwrap();
    let client = read_backend(&eval, Some(&secret)).unwrap();
    let v = SlotVector { slots: (0..b.slots() as u64).collect() };
    let ct = client.encrypt_slots(&v).unwrap();
    let wire = client.serialize_ct(&ct);
    let on_server = server.deserialize_ct(&wire).unwrap();
    let res = server.rotate(&server.mul(&on_server, &on_server).unwrap(), 1).unwrap();
    let back = client.deserialize_ct(&server.serialize_ct(&res)).unwrap();
    let want = SlotVector { slots: v.slots.iter().map(|x| x * x % P).collect() }.rotate(1);
    assert_eq!(client.decrypt_slots(&back).unwrap(), want);
    assert!(read_backend(&eval[..eval.len() - 3], None).is_err());
    assert!(read_backend(&secret, None).is_err());
}
