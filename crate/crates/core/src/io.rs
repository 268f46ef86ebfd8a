//! Plain-text serialization helpers.

/// One comma-separated line, every value with 17 significant digits.
pub fn csv_row(values: &[f64]) -> String {
    let mut line = values.iter().map(|v| format!("{v:.16e}")).collect::<Vec<_>>().join(",");
    line.push('\n');
    line
}

/// Complex numbers serialize as `[re, im]`.
pub mod complex_pair {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
        [z.re, z.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        Ok(Complex64::new(re, im))
    }
}
