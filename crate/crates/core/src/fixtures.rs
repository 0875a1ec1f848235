//! Built-in example fans.

use crate::fan::FanData;
use crate::fanfile::{parse_fan_str, FanFile, Format};

pub const NAMES: [&str; 6] = ["p1", "p2", "p1xp1", "f1", "f2", "f3"];

pub fn source(name: &str) -> Option<&'static str> {
    Some(match name {
        "p1" => include_str!("../fixtures/p1.toml"),
        "p2" => include_str!("../fixtures/p2.toml"),
        "p1xp1" => include_str!("../fixtures/p1xp1.toml"),
        "f1" => include_str!("../fixtures/f1.toml"),
        "f2" => include_str!("../fixtures/f2.toml"),
        "f3" => include_str!("../fixtures/f3.toml"),
        _ => return None,
    })
}

pub fn load(name: &str) -> Option<FanFile> {
    let name = name.trim_end_matches(".toml");
    source(name).map(|s| parse_fan_str(s, Format::Toml).expect("built-in fixture parses"))
}

fn fan(name: &str) -> FanData {
    load(name).expect("known fixture").fan
}

pub fn p1() -> FanData {
    fan("p1")
}

pub fn p2() -> FanData {
    fan("p2")
}

pub fn p1xp1() -> FanData {
    fan("p1xp1")
}

pub fn f1() -> FanData {
    fan("f1")
}

pub fn f2() -> FanData {
    fan("f2")
}

pub fn f3() -> FanData {
    fan("f3")
}

/// The five weak Fano fixtures, in the order ℙ¹, ℙ², ℙ¹×ℙ¹, F₁, F₂.
pub fn weak_fano_fixtures() -> Vec<FanData> {
    vec![p1(), p2(), p1xp1(), f1(), f2()]
}
