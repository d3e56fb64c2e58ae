use pdte_core::pdte::{synth_tree, DecisionTreeModel, PdteParams, Protocol};
use pdte_he::{HeBackend, PolyPlain, RlweBackend, Simulator};
use pdte_protocol::*;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::Arc;

fn spawn<B: WireBackend>(server: Server<B>) -> std::net::SocketAddr {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let server = Arc::new(server);
    std::thread::spawn(move || server.serve(listener));
    addr
}

fn small(protocol: Protocol, n: u32, attrs: usize) -> PdteParams {
    match protocol {
        Protocol::Xxcmp => PdteParams::new(protocol, n, attrs).with_degree(64),
        _ => PdteParams::new(protocol, n, attrs).with_degree(256),
    }
}

fn attrs_for(m: &DecisionTreeModel, seed: u64) -> Vec<u64> {
    let mut r = StdRng::seed_from_u64(seed);
    (0..m.num_attributes).map(|_| r.gen_range(0..1u64 << m.precision)).collect()
}

#[test]
fn tcp_round_trip_matches_clear_evaluation() {
    for protocol in Protocol::ALL {
        let params = small(protocol, 8, 5);
        let model = synth_tree(5, 8, 5, 11);
        let addr = spawn(Server::<Simulator>::new(params.clone(), model.clone()).unwrap());
        let client = Client::new(params.clone(), Simulator::keygen(&params, Some(1)).unwrap()).unwrap();
        for seed in 0..5 {
            let x = attrs_for(&model, seed);
            assert_eq!(client.query(addr, &x).unwrap(), model.eval_clear(&x).unwrap(), "{protocol}");
        }
    }
}

#[test]
fn response_shapes() {
    let model = synth_tree(4, 8, 3, 2);
    let leaves = model.leaves().len();
    for (protocol, expected) in [(Protocol::Xxcmp, leaves), (Protocol::Rcc, 1), (Protocol::Folklore, 1)] {
        let params = PdteParams::new(protocol, 8, 3);
        let server = Server::<Simulator>::new(params.clone(), model.clone()).unwrap();
        let client = Client::new(params.clone(), Simulator::keygen(&params, Some(3)).unwrap()).unwrap();
        server.add_keys(client.public_keys()).unwrap();
        let r = server.respond(&client.query_envelope(&[1, 2, 3]).unwrap()).unwrap();
        assert_eq!((r.x.len(), r.y.len()), (expected, expected), "{protocol}");
        assert_eq!(client.decode_response(&r).unwrap(), model.eval_clear(&[1, 2, 3]).unwrap());
    }
}

#[test]
fn digest_mismatch_is_error_code_two() {
    let model = synth_tree(3, 8, 2, 4);
    let params = PdteParams::new(Protocol::Rcc, 8, 2).with_degree(256);
    let other = params.clone().with_hamming_weight(params.hamming_weight + 1);
    assert_ne!(params_digest(&params), params_digest(&other));
    let addr = spawn(Server::<Simulator>::new(params, model).unwrap());
    let client = Client::new(other.clone(), Simulator::keygen(&other, Some(5)).unwrap()).unwrap();
    match client.query(addr, &[1, 2]) {
        Err(Error::Remote { code, .. }) => assert_eq!(code, ErrorCode::DigestMismatch),
        other => panic!("expected a digest error, got {other:?}"),
    }
    assert_eq!(u16::from(ErrorCode::DigestMismatch), 2);
}

#[test]
fn truncated_frame_closes_without_reply() {
    let model = synth_tree(2, 8, 1, 0);
    let params = small(Protocol::Folklore, 8, 1);
    let addr = spawn(Server::<Simulator>::new(params, model).unwrap());
    let mut s = TcpStream::connect(addr).unwrap();
    let mut frame = WireFrame::new(MsgType::Query, vec![7; 100]).encode();
    frame.truncate(40);
    s.write_all(&frame).unwrap();
    s.shutdown(std::net::Shutdown::Write).unwrap();
    let mut buf = Vec::new();
    s.read_to_end(&mut buf).unwrap();
    assert!(buf.is_empty());
}

#[test]
fn unknown_version_is_rejected() {
    let mut bytes = WireFrame::new(MsgType::Keys, vec![1, 2, 3]).encode();
    bytes[4] = 9;
    assert!(matches!(WireFrame::decode(&bytes), Err(FrameError::Version(9))));
    let mut bytes = WireFrame::new(MsgType::Keys, vec![]).encode();
    bytes[0] = b'X';
    assert!(matches!(WireFrame::decode(&bytes), Err(FrameError::Magic)));
    let mut bytes = WireFrame::new(MsgType::Keys, vec![]).encode();
    bytes[6] = 0;
    assert!(matches!(WireFrame::decode(&bytes), Err(FrameError::MsgType(0))));
    let mut bytes = WireFrame::new(MsgType::Keys, vec![1]).encode();
    bytes.push(0);
    assert!(matches!(WireFrame::decode(&bytes), Err(FrameError::Trailing(1))));
}

#[test]
fn header_layout_is_bit_exact() {
    let bytes = WireFrame::new(MsgType::Response, vec![0xAB; 3]).encode();
    assert_eq!(&bytes[..4], b"PDTE");
    assert_eq!(&bytes[4..6], &[1, 0]);
    assert_eq!(bytes[6], 3);
    assert_eq!(&bytes[7..15], &[3, 0, 0, 0, 0, 0, 0, 0]);
    assert_eq!(&bytes[15..], &[0xAB; 3]);
}

#[test]
fn file_mode_matches_tcp() {
    let dir = tempfile::tempdir().unwrap();
    let model = synth_tree(5, 8, 4, 9);
    let params = small(Protocol::Rcc, 8, 4);
    let server = Server::<Simulator>::new(params.clone(), model.clone()).unwrap();
    let client = Client::new(params.clone(), Simulator::keygen(&params, Some(8)).unwrap()).unwrap();
    let x = attrs_for(&model, 3);
    client.write_offline(dir.path(), &x).unwrap();
    assert_eq!(server.process_dir(dir.path()).unwrap(), MsgType::Response);
    assert_eq!(client.read_offline(dir.path()).unwrap(), model.eval_clear(&x).unwrap());
}

#[test]
fn out_of_range_attribute_fails_before_network() {
    let params = small(Protocol::Xxcmp, 8, 2);
    let client = Client::new(params.clone(), Simulator::keygen(&params, Some(8)).unwrap()).unwrap();
    // nothing listens on port 9 of this host; a network attempt would surface as Network
    match client.query("127.0.0.1:9", &[256, 0]) {
        Err(Error::Pdte(_)) => {}
        other => panic!("expected a local validation error, got {other:?}"),
    }
    assert!(matches!(client.query("127.0.0.1:9", &[1, 0]), Err(Error::Network(_))));
}

#[test]
fn keygen_refuses_to_overwrite_secret() {
    let dir = tempfile::tempdir().unwrap();
    let params = small(Protocol::Folklore, 8, 2);
    keygen::<Simulator>(&params, dir.path(), false, Some(1)).unwrap();
    assert!(matches!(keygen::<Simulator>(&params, dir.path(), false, Some(1)), Err(Error::Keys(_))));
    keygen::<Simulator>(&params, dir.path(), true, Some(2)).unwrap();
    let kd = KeyDir::new(dir.path());
    assert_eq!(kd.config().unwrap().backend, BackendKind::Sim);
    let other = small(Protocol::Folklore, 9, 2);
    assert!(kd.load_client::<Simulator>(&other).is_err());
}

#[test]
fn rlwe_public_set_evaluates_but_cannot_decrypt() {
    let dir = tempfile::tempdir().unwrap();
    let params = PdteParams::new(Protocol::Xxcmp, 8, 3);
    let client_b = keygen::<RlweBackend>(&params, dir.path(), false, Some(4)).unwrap();
    let kd = KeyDir::new(dir.path());

    let loaded = kd.load_client::<RlweBackend>(&params).unwrap();
    let m = PolyPlain::monomial(4096, 17, params.plain_modulus);
    let ct = client_b.encrypt_poly(&m).unwrap();
    assert_eq!(loaded.decrypt_poly(&ct).unwrap(), m);

    let public = kd.load_public::<RlweBackend>(&params).unwrap();
    assert!(public.decrypt_poly(&ct).is_err());

    let model = synth_tree(3, 8, 3, 6);
    let server = Server::<RlweBackend>::new(params.clone(), model.clone()).unwrap();
    server.add_keys(&kd.public().unwrap()).unwrap();
    let client = Client::new(params, loaded).unwrap();
    let x = [200, 3, 77];
    let r = server.respond(&client.query_envelope(&x).unwrap()).unwrap();
    assert_eq!(client.decode_response(&r).unwrap(), model.eval_clear(&x).unwrap());
}

#[test]
fn query_size_shapes() {
    let b = |p: &PdteParams| Simulator::keygen(p, Some(0)).unwrap();
    let bytes = |p: PdteParams| {
        let c = Client::new(p.clone(), b(&p)).unwrap();
        c.query_envelope(&vec![1; p.num_attributes]).unwrap().to_frame().encoded_len()
    };
    let rcc: Vec<usize> = [5, 20, 60, 100].iter().map(|&a| bytes(PdteParams::new(Protocol::Rcc, 16, a))).collect();
    assert!(rcc.windows(2).all(|w| w[0] == w[1]), "{rcc:?}");
    let xx: Vec<usize> = [5, 10, 15].iter().map(|&a| bytes(PdteParams::new(Protocol::Xxcmp, 8, a))).collect();
    assert_eq!(xx[2] - xx[1], xx[1] - xx[0]);
    assert!(xx[1] > xx[0]);
}

fn any_type() -> impl Strategy<Value = MsgType> {
    prop_oneof![Just(MsgType::Keys), Just(MsgType::Query), Just(MsgType::Response), Just(MsgType::Error)]
}

proptest! {
    #[test]
    fn frames_round_trip(t in any_type(), body in proptest::collection::vec(any::<u8>(), 0..2048)) {
        let f = WireFrame::new(t, body);
        let bytes = f.encode();
        prop_assert_eq!(WireFrame::decode(&bytes).unwrap(), f.clone());
        let mut cursor = std::io::Cursor::new(bytes.clone());
        prop_assert_eq!(WireFrame::read_from(&mut cursor).unwrap().unwrap(), f);
        prop_assert!(WireFrame::read_from(&mut cursor).unwrap().is_none());
        if bytes.len() > 1 {
            prop_assert!(WireFrame::decode(&bytes[..bytes.len() - 1]).is_err());
        }
    }

    #[test]
    fn envelopes_round_trip(blobs in proptest::collection::vec(proptest::collection::vec(any::<u8>(), 0..64), 0..6), d in any::<[u8; 32]>()) {
        let bufs: Vec<serde_bytes::ByteBuf> = blobs.into_iter().map(serde_bytes::ByteBuf::from).collect();
        let q = QueryEnvelope {
            protocol: Protocol::Rcc,
            digest: d,
            key_id: d,
            precision: 16,
            num_attributes: 3,
            hamming_weight: Some(4),
            code_length: Some(12),
            groups: vec![bufs.clone(), bufs.clone()],
        };
        prop_assert_eq!(QueryEnvelope::from_frame(&q.to_frame()).unwrap(), q);
        let r = ResponseEnvelope { digest: d, leaves: 9, x: bufs.clone(), y: bufs.clone() };
        prop_assert_eq!(ResponseEnvelope::from_frame(&r.to_frame()).unwrap(), r.clone());
        let k = KeysEnvelope { backend: BackendKind::Rlwe, digest: d, public: bufs.first().cloned().unwrap_or_default() };
        prop_assert_eq!(KeysEnvelope::from_frame(&k.to_frame()).unwrap(), k);
        let e = ErrorEnvelope { code: ErrorCode::Evaluation, message: "evaluation failed".into() };
        prop_assert_eq!(ErrorEnvelope::from_frame(&e.to_frame()).unwrap(), e);
        prop_assert!(ErrorEnvelope::from_frame(&r.to_frame()).is_err());
    }
}
