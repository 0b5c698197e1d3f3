use nmrdeco_core::pulseq::{parse, Builtin, ParseError};
use nmrdeco_core::SpinSystem;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const VOCAB: &[&str] = &[
    "pulse", "readout", "delay", "grad", "decouple", "refocus", "on", "off", "x", "y", "z", "-x",
    "-y", "all", "pi", "alpha", "J", "[", "]", "(", ")", ",", ";", "\n", "+", "-", "*", "/", "1",
    "2", "3", "9", "0", "0.5", "1e-3", "3.5e-3", ".25", "1e", "1e999", "C1", "C2", "H", "#c\n",
    "@", "é", "\t", "  ", "1.2.3", "2x", "",
];

fn check_span(src: &str, err: &ParseError) {
    let s = err.span;
    assert!(s.line >= 1 && s.col >= 1, "{src:?}: {err}");
    assert!(s.offset + s.len <= src.len(), "{src:?}: {err}");
    assert!(src.is_char_boundary(s.offset), "{src:?}: {err}");
    assert!(src.is_char_boundary(s.offset + s.len), "{src:?}: {err}");
    let line_no = src[..s.offset].matches('\n').count() + 1;
    assert_eq!(line_no, s.line, "{src:?}: {err}");
}

#[test]
fn random_token_streams_never_panic_and_errors_have_spans() {
    let sys = SpinSystem::trichloroethylene();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let (mut accepted, mut rejected) = (0usize, 0usize);
    for _ in 0..100_000 {
        let len = rng.gen_range(0..24);
        let mut src = String::new();
        for _ in 0..len {
            src.push_str(VOCAB[rng.gen_range(0..VOCAB.len())]);
            if rng.gen_bool(0.7) {
                src.push(' ');
            }
        }
        match parse(&src, &sys) {
            Ok(seq) => {
                accepted += 1;
                let again = parse(&seq.pretty(), &sys).expect("pretty output reparses");
                assert_eq!(again.pretty(), seq.pretty());
            }
            Err(e) => {
                rejected += 1;
                check_span(&src, &e);
            }
        }
    }
    assert!(accepted > 0 && rejected > 0, "{accepted} / {rejected}");
}

#[test]
fn well_formed_streams_are_accepted() {
    // A grammar-directed generator: exercises the success paths that
    // random token soup rarely reaches.
    let sys = SpinSystem::trichloroethylene();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let spins = ["1", "2", "3", "1,2", "C1,H", "all", "2,3"];
    let exprs = ["pi/2", "-pi", "alpha", "1/(4*J[1,2])", "2e-3", "(1+2)*3e-4", "pi*(1-0.5)"];
    for _ in 0..10_000 {
        let mut src = String::new();
        for _ in 0..rng.gen_range(1..8) {
            let e = exprs[rng.gen_range(0..exprs.len())];
            let s = spins[rng.gen_range(0..spins.len())];
            let line = match rng.gen_range(0..5) {
                0 => format!("pulse {} {e} on {s}", ["x", "y", "-x", "-y"][rng.gen_range(0..4)]),
                1 => format!("readout x {e} on {s}"),
                2 => "delay 1/(4*J[1,2])".to_string(),
                3 => "grad z".to_string(),
                _ => "refocus 3.5e-3".to_string(),
            };
            src.push_str(&line);
            src.push('\n');
        }
        let seq = parse(&src, &sys).unwrap_or_else(|e| panic!("{src}\n{e}"));
        let again = parse(&seq.pretty(), &sys).unwrap();
        assert_eq!(again.events, seq.events, "{src}");
    }
}

#[test]
fn builtins_round_trip() {
    let sys = SpinSystem::trichloroethylene();
    for b in [Builtin::Prep, Builtin::Entangle] {
        let seq = parse(b.script(), &sys).unwrap();
        let again = parse(&seq.pretty(), &sys).unwrap();
        assert_eq!(again.events, seq.events);
    }
}

#[test]
fn deep_nesting_is_rejected_not_overflowed() {
    let sys = SpinSystem::trichloroethylene();
    let src = format!("delay {}1{}", "(".repeat(100_000), ")".repeat(100_000));
    let err = parse(&src, &sys).unwrap_err();
    check_span(&src, &err);
}
