//! Worked example scenarios shipped with the crate.
//!
//! Each constant holds a scenario document; see `fixtures/` in the crate root.

pub const TABLE1: &str = include_str!("../fixtures/table1.toml");
pub const TABLE4: &str = include_str!("../fixtures/table4.toml");
pub const TABLE5: &str = include_str!("../fixtures/table5.toml");
pub const TABLE5_DISCOUNT: &str = include_str!("../fixtures/table5_discount.toml");
pub const TABLE6: &str = include_str!("../fixtures/table6.toml");

/// `(name, document)` pairs for every fixture.
pub const ALL: [(&str, &str); 5] = [
    ("table1", TABLE1),
    ("table4", TABLE4),
    ("table5", TABLE5),
    ("table5_discount", TABLE5_DISCOUNT),
    ("table6", TABLE6),
];
