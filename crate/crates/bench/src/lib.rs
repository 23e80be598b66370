//! Fixtures shared by the benchmarks.

use apm_core::{DeltaModulus, LocalProfile, SieveTable};

pub fn profile() -> LocalProfile {
    LocalProfile::default_profile()
}

pub fn delta(d: u64) -> DeltaModulus {
    DeltaModulus::new(d).expect("positive modulus")
}

pub fn table(limit: u64) -> SieveTable {
    SieveTable::build(limit).expect("sieve limit within range")
}
