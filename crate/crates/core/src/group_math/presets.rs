//! Checked-in parameter sets. Each is validated the first time it is used.

use std::sync::OnceLock;

use num_bigint::BigUint;

use super::{hexint, validate_params, GroupParams};

/// `p = 23, q = 11, g = 2`; small enough to verify by hand.
pub fn tiny() -> &'static GroupParams {
    static CELL: OnceLock<GroupParams> = OnceLock::new();
    CELL.get_or_init(|| load("17", "b", "2"))
}

/// 32-bit `p` with `q = 10007`.
pub fn small() -> &'static GroupParams {
    static CELL: OnceLock<GroupParams> = OnceLock::new();
    CELL.get_or_init(|| load("9a75d1f1", "2717", "3cdb0160"))
}

/// 48-bit `p` with the 20-bit prime `q = 2^20 - 3`; discrete logs fall to
/// exhaustive search in well under a second.
pub fn toy() -> &'static GroupParams {
    static CELL: OnceLock<GroupParams> = OnceLock::new();
    CELL.get_or_init(|| load("ab73535a5a59", "ffffd", "a90a5f3635a2"))
}

/// 1024-bit `p` with a 160-bit `q`.
pub fn standard() -> &'static GroupParams {
    static CELL: OnceLock<GroupParams> = OnceLock::new();
    CELL.get_or_init(|| {
        serde_json::from_str(include_str!("../../fixtures/std_1024_160.json"))
            .expect("std_1024_160.json is a valid parameter set")
    })
}

fn load(p: &str, q: &str, g: &str) -> GroupParams {
    let parse = |s: &str| -> BigUint { hexint::decode(s).expect("preset hex") };
    validate_params(parse(p), parse(q), parse(g)).expect("preset parameters are valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        assert_eq!(tiny().q(), &BigUint::from(11u8));
        assert_eq!(small().q(), &BigUint::from(10007u32));
        assert_eq!(toy().q(), &BigUint::from((1u32 << 20) - 3));
        assert_eq!(standard().p().bits(), 1024);
        assert_eq!(standard().q().bits(), 160);
    }
}
