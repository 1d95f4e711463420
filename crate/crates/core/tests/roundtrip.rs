use defectdep_core::istarml::{emit_istarml, parse_istarml, parse_istarml_with, validate, ParseMode};
use defectdep_testkit::{fixture_models, mutate, GenModel, GenParams};
use rand::rngs::StdRng;
use rand::SeedableRng;

#[test]
fn generated_models_round_trip() {
    let mut rng = StdRng::seed_from_u64(0x5eed);
    for i in 0..100 {
        let xml = GenModel::random(&mut rng, GenParams::default()).to_xml();
        let first = parse_istarml(xml.as_bytes()).unwrap_or_else(|e| panic!("model {i}: {e}"));
        assert!(validate(&first).ok, "model {i}: {}", validate(&first));
        let emitted = emit_istarml(&first).unwrap();
        let second = parse_istarml(&emitted).unwrap();
        assert!(first.structurally_eq(&second), "model {i}");
        // canonical text is a fixed point
        assert_eq!(emit_istarml(&second).unwrap(), emitted, "model {i}");
    }
}

#[test]
fn fixtures_round_trip() {
    let fixtures = fixture_models();
    assert!(fixtures.len() >= 2);
    for path in fixtures {
        let bytes = std::fs::read(&path).unwrap();
        let model = parse_istarml_with(&bytes, ParseMode::Strict, "fixture").unwrap();
        let again = parse_istarml(&emit_istarml(&model).unwrap()).unwrap();
        assert!(model.structurally_eq(&again), "{}", path.display());
    }
}

#[test]
fn mutated_inputs_never_panic() {
    let mut rng = StdRng::seed_from_u64(0xf022);
    let mut seeds: Vec<Vec<u8>> = fixture_models()
        .iter()
        .map(|p| std::fs::read(p).unwrap())
        .collect();
    for _ in 0..20 {
        seeds.push(GenModel::random(&mut rng, GenParams::default()).to_xml().into_bytes());
    }
    let mut accepted = 0;
    for i in 0..10_000 {
        let input = mutate(&seeds[i % seeds.len()], &mut rng);
        let outcome = std::panic::catch_unwind(|| {
            let tolerant = parse_istarml(&input);
            let strict = parse_istarml_with(&input, ParseMode::Strict, "fuzz");
            if let Ok(model) = &tolerant {
                let report = validate(model);
                if report.ok {
                    let emitted = emit_istarml(model).expect("valid models emit");
                    let back = parse_istarml(&emitted).expect("emitted text parses");
                    assert!(model.structurally_eq(&back));
                }
            }
            strict.is_ok()
        });
        match outcome {
            Ok(true) => accepted += 1,
            Ok(false) => {}
            Err(_) => panic!("input {i} crashed: {:?}", String::from_utf8_lossy(&input)),
        }
    }
    // most mutations break the document; some must survive
    assert!(accepted > 0 && accepted < 10_000);
}
