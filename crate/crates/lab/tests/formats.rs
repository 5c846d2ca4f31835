//! Round trips through the on-disk formats.

use fpp_core::{sample_edge_field, DistributionSpec, LatticeBox, Vertex};
use fpp_lab::formats::{read_field_binary, read_field_csv, read_path_csv, write_field_binary, write_field_csv, write_path_csv};
use fpp_lab::text::{fmt_num, fmt_spec, parse_num, parse_spec};
use proptest::prelude::*;

fn boxes() -> impl Strategy<Value = LatticeBox> {
    (2usize..=3, prop::collection::vec((-4i64..3, 1i64..5), 3)).prop_map(|(d, c)| {
        let lo: Vec<i64> = c[..d].iter().map(|x| x.0).collect();
        let hi: Vec<i64> = c[..d].iter().map(|x| x.0 + x.1).collect();
        LatticeBox::new(&lo, &hi).unwrap()
    })
}

proptest! {
    #[test]
    fn fields_survive_both_encodings(bx in boxes(), seed in any::<u64>()) {
        let f = sample_edge_field(&bx, &DistributionSpec::exponential(1.0), seed).unwrap();
        let mut csv = Vec::new();
        write_field_csv(&f, &mut csv).unwrap();
        let mut bin = Vec::new();
        write_field_binary(&f, &mut bin).unwrap();
        for g in [read_field_csv(&csv[..]).unwrap(), read_field_binary(&bin[..]).unwrap()] {
            prop_assert_eq!(g.lattice_box(), f.lattice_box());
            for (e, w) in f.iter() {
                prop_assert_eq!(g.weight(&e).unwrap().to_bits(), w.to_bits());
            }
        }
    }

    #[test]
    fn numbers_print_exactly(x in any::<f64>()) {
        let back = parse_num(&fmt_num(x)).unwrap();
        prop_assert!(back.to_bits() == x.to_bits() || (x.is_nan() && back.is_nan()));
    }

    #[test]
    fn paths_round_trip(steps in prop::collection::vec((-50i64..50, -50i64..50), 1..20)) {
        let verts: Vec<Vertex> = steps.iter().map(|&(a, b)| Vertex::new(&[a, b])).collect();
        let mut buf = Vec::new();
        write_path_csv(&verts, &mut buf).unwrap();
        prop_assert_eq!(read_path_csv(&buf[..]).unwrap(), verts);
    }
}

#[test]
fn law_grammar_round_trips() {
    for text in [
        "exponential(rate=2)",
        "uniform(a=0.5,b=3)",
        "pareto(shape=2.5,scale=1)",
        "point(value=1.25)",
        "atoms(atoms=[0.5:0.25,2:0.75])",
        "shifted(offset=1,inner=exponential(rate=1))",
        "mixture(atoms=[0:0.5],weight=0.5,inner=uniform(a=1,b=2))",
    ] {
        let spec = parse_spec(text).unwrap();
        assert_eq!(parse_spec(&fmt_spec(&spec)).unwrap(), spec, "{text}");
    }
    assert!(parse_spec("gaussian(mean=0)").is_err());
}

#[test]
fn truncated_binary_is_rejected() {
    let f = sample_edge_field(&LatticeBox::with_side(2, 3).unwrap(), &DistributionSpec::uniform(0.0, 1.0), 1).unwrap();
    let mut bin = Vec::new();
    write_field_binary(&f, &mut bin).unwrap();
    assert!(read_field_binary(&bin[..bin.len() - 3]).is_err());
    bin.push(0);
    assert!(read_field_binary(&bin[..]).is_err());
}
