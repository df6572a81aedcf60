//! Decibel conversions. Everything inside the optimizer is in watts and
//! linear ratios; these helpers are only used at configuration and report
//! boundaries.

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn noise_floor_conversion() {
        assert_relative_eq!(dbm_to_watts(-95.0), 10f64.powf(-12.5), max_relative = 1e-14);
        assert_relative_eq!(
            dbm_to_watts(36.0),
            3.981_071_705_534_972,
            max_relative = 1e-14
        );
    }

    #[test]
    fn db_round_trip() {
        for db in [-30.0, 0.0, 3.0, 17.5] {
            assert_relative_eq!(linear_to_db(db_to_linear(db)), db, epsilon = 1e-12);
            assert_relative_eq!(watts_to_dbm(dbm_to_watts(db)), db, epsilon = 1e-12);
        }
    }
}
