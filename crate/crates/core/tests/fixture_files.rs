//! The files under `fixtures/` agree with the built-in constructions.

use std::fs;
use std::path::PathBuf;

use orgcx::bitio::codec::{read_machine, AnyMachine};
use orgcx::epsmachine::{self, EpsError, EpsilonMachine};
use orgcx::ocmachine::fixtures;
use orgcx::semantics::ChannelMatrix;
use orgcx::Distribution;

fn path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

fn text(name: &str) -> String {
    fs::read_to_string(path(name)).unwrap()
}

#[test]
fn containers_match_builtin_machines() {
    for n in [4, 16] {
        let ones = read_machine(&fs::read(path(&format!("ones{n}.occ1"))).unwrap()).unwrap();
        assert_eq!(ones, AnyMachine::Flat(fixtures::ones(n)));
        let coin = read_machine(&fs::read(path(&format!("coin{n}.occ1"))).unwrap()).unwrap();
        assert_eq!(coin, AnyMachine::Flat(fixtures::coin(n)));
    }
}

#[test]
fn machine_files_match_builtin_machines() {
    assert_eq!(
        EpsilonMachine::from_json(&text("gm.json")).unwrap(),
        epsmachine::fixtures::golden_mean()
    );
    assert_eq!(
        EpsilonMachine::from_json(&text("even.json")).unwrap(),
        epsmachine::fixtures::even_process()
    );
    assert_eq!(
        EpsilonMachine::from_json(&text("disconnected.json")).unwrap(),
        epsmachine::fixtures::disconnected()
    );
    let third = EpsilonMachine::from_json(&text("third.json")).unwrap();
    assert!(matches!(third.dyadic_exponent(), Err(EpsError::DyadicRequired { .. })));
}

#[test]
fn distribution_and_channel_files_load() {
    let ones = Distribution::from_json(&text("ones4.json")).unwrap();
    assert_eq!(ones, fixtures::ones(4).output_distribution(0).unwrap());
    for name in [
        "one.json",
        "uniform1.json",
        "three_quarters.json",
        "pattern4.json",
        "zeros4.json",
    ] {
        Distribution::from_json(&text(name)).unwrap();
    }
    for name in ["messages_uniform2.json", "messages_point2.json"] {
        assert_eq!(Distribution::from_json(&text(name)).unwrap().n(), 2);
    }
    assert_eq!(
        ChannelMatrix::from_json(&text("identity1.json")).unwrap(),
        ChannelMatrix::identity(1)
    );
    assert_eq!(
        ChannelMatrix::from_json(&text("identity2.json")).unwrap(),
        ChannelMatrix::identity(2)
    );
    ChannelMatrix::from_json(&text("erasing2.json")).unwrap();
}
