//! DAOS capacity under the default and an alternative erasure-coding layout.

use fabricmodel::storage::{daos_capacity, StorageSpec};
use fabricmodel::units::PB;

fn main() {
    let aurora = StorageSpec::aurora();
    for (data, parity) in [(16, 2), (8, 2), (4, 1)] {
        let spec = StorageSpec { ec_data: data, ec_parity: parity, ..aurora.clone() };
        let c = daos_capacity(&spec);
        println!("EC {data}+{parity}: raw {:.1} PB, usable {:.1} PB, {} engines", c.raw_bytes / PB, c.usable_bytes / PB, c.engines);
    }
    let too_wide = StorageSpec { ec_data: 17, ec_parity: 2, ..aurora };
    println!("EC 17+2 accepted: {}", too_wide.check().is_ok());
}
