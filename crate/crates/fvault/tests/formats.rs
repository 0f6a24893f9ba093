use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fvault::codec::{CodecError, Record};
use fvault::format::{
    parse_descriptors, parse_template, read_dataset, read_described, read_transform, template_to_string,
    transform_to_string, write_dataset, write_descriptors, write_template, FormatError,
};
use fvault::synth::{synthesize_dataset, SynthConfig};
use fvault_core::bch::BinaryCodeSpec;
use fvault_core::classic::{enroll, ClassicVaultParams};
use fvault_core::descriptor::{enroll_hardened, DescribedTemplate, Descriptor, OrdinateCodec};
use fvault_core::field::Polynomial;
use fvault_core::grid::{grid_enroll, GridParams};
use fvault_core::minutiae::{synthesize_finger, Minutia, MinutiaeTemplate, RigidTransform};

fn random_template(rng: &mut ChaCha8Rng) -> MinutiaeTemplate {
    let n = rng.gen_range(0..60);
    let ms = (0..n)
        .map(|_| {
            Minutia::new(
                rng.gen_range(0.0..296.0),
                rng.gen_range(0.0..560.0),
                rng.gen_range(0.0..360.0),
                rng.gen_range(0.0..=1.0),
            )
        })
        .collect();
    MinutiaeTemplate::new(ms, 296, 560)
}

#[test]
fn templates_survive_text_round_trips() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let t = random_template(&mut rng);
        let back = parse_template(&template_to_string(&t), Path::new("t")).unwrap();
        assert_eq!(back, t);
    }
}

#[test]
fn malformed_templates_name_the_line() {
    let text = "296 560\n10 20 30 0.5\n10 x 30 0.5\n";
    match parse_template(text, Path::new("bad.txt")) {
        Err(FormatError::Parse { line, .. }) => assert_eq!(line, 3),
        other => panic!("{other:?}"),
    }
    assert!(parse_template("", Path::new("empty.txt")).is_err());
}

#[test]
fn descriptors_and_transforms_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let ds: Vec<Descriptor> = (0..20).map(|_| Descriptor::random(&mut rng, 511)).collect();
    let text = fvault::format::descriptors_to_string(&ds);
    assert_eq!(parse_descriptors(&text, 511, Path::new("d")).unwrap(), ds);
    assert!(parse_descriptors(&text, 15, Path::new("d")).is_err());

    let dir = tempfile::tempdir().unwrap();
    let xf = RigidTransform::new(3.5, -7.25, 12.0, (148.0, 280.0));
    std::fs::write(dir.path().join("a.xf"), transform_to_string(&xf)).unwrap();
    let back = read_transform(&dir.path().join("a.xf")).unwrap();
    assert_eq!(back, xf);
}

#[test]
fn described_templates_pair_descriptors_in_file_order() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let t = synthesize_finger(3, 30, 296, 560, 30.0).unwrap();
    let ds: Vec<Descriptor> = (0..t.len()).map(|_| Descriptor::random(&mut rng, 15)).collect();
    write_template(&dir.path().join("t.txt"), &t).unwrap();
    write_descriptors(&dir.path().join("t.desc"), &ds).unwrap();
    let dt = read_described(&dir.path().join("t.txt"), &dir.path().join("t.desc"), 15).unwrap();
    for (m, d) in t.minutiae().iter().zip(&ds) {
        let i = dt.template.minutiae().iter().position(|x| x == m).unwrap();
        assert_eq!(&dt.descriptors[i], d);
    }
    write_descriptors(&dir.path().join("short.desc"), &ds[1..]).unwrap();
    assert!(read_described(&dir.path().join("t.txt"), &dir.path().join("short.desc"), 15).is_err());
}

#[test]
fn datasets_round_trip_through_directories() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SynthConfig {
        fingers: 3,
        impressions: 2,
        descriptor_bits: Some(15),
        seed: 4,
        ..SynthConfig::default()
    };
    let data = synthesize_dataset(&cfg).unwrap();
    write_dataset(dir.path(), &data).unwrap();
    let back = read_dataset(dir.path(), Some(15)).unwrap();
    assert_eq!(back.fingers.len(), 3);
    for (f, g) in data.fingers.iter().zip(&back.fingers) {
        for (a, b) in f.iter().zip(g) {
            assert_eq!(a.template, b.template);
            assert_eq!(a.descriptors, b.descriptors);
            assert_eq!(transform_to_string(&a.transform), transform_to_string(&b.transform));
        }
    }
    // without descriptor length the sidecars are ignored
    assert!(read_dataset(dir.path(), None).unwrap().fingers[0][0].descriptors.is_none());
    assert!(read_dataset(&dir.path().join("missing"), None).is_err());
}

fn secret(rng: &mut ChaCha8Rng, k: usize) -> Polynomial {
    Polynomial::random(rng, k).unwrap()
}

#[test]
fn random_records_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let codes = [BinaryCodeSpec::BCH_511_19, BinaryCodeSpec::BCH_31_6, BinaryCodeSpec::BCH_15_5];
    for i in 0..100 {
        let finger = synthesize_finger(rng.gen(), 40, 296, 560, 30.0).unwrap();
        let k = rng.gen_range(5..=12);
        let params = ClassicVaultParams {
            n: rng.gen_range(24..=300),
            ..ClassicVaultParams::reference(k)
        };
        let s = secret(&mut rng, k);
        let recs = [
            Record::Classic(enroll(&finger, &params, &s, rng.gen()).unwrap()),
            {
                let code = codes[i % 3];
                let bits = OrdinateCodec::new(code).unwrap().word_bits();
                let dt = DescribedTemplate::with_random_descriptors(&finger, bits, rng.gen());
                Record::Descriptor(enroll_hardened(&dt, &params, &s, code, rng.gen()).unwrap())
            },
            Record::Grid(
                grid_enroll(
                    &finger,
                    &GridParams {
                        lambda: rng.gen_range(24.0..40.0),
                        s: rng.gen_range(2..=8),
                        k,
                        ..GridParams::trained()
                    },
                    &s,
                    rng.gen(),
                )
                .unwrap(),
            ),
        ];
        for r in recs {
            let bytes = r.to_bytes();
            assert_eq!(Record::from_bytes(&bytes).unwrap(), r);
            // every strict prefix is rejected
            for cut in [0, 4, 5, bytes.len() / 2, bytes.len() - 1] {
                assert!(Record::from_bytes(&bytes[..cut]).is_err());
            }
            let mut longer = bytes.clone();
            longer.push(0);
            assert_eq!(Record::from_bytes(&longer), Err(CodecError::Trailing(1)));
        }
    }
}
