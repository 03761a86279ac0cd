//! Bundled reference data.

use nalgebra::DMatrix;

const FAITHFUL_CSV: &str = include_str!("../data/faithful.csv");

/// Old Faithful geyser eruptions: 272 rows of (eruption minutes, waiting minutes).
pub fn faithful() -> DMatrix<f64> {
    let mut values = Vec::with_capacity(272 * 2);
    let mut rows = 0;
    for line in FAITHFUL_CSV.lines().skip(1).filter(|l| !l.trim().is_empty()) {
        for field in line.split(',') {
            values.push(field.trim().parse::<f64>().expect("bundled data parses"));
        }
        rows += 1;
    }
    DMatrix::from_row_slice(rows, 2, &values)
}

/// Column names of [`faithful`].
pub const FAITHFUL_COLUMNS: [&str; 2] = ["eruptions", "waiting"];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn faithful_shape_and_summary() {
        let x = faithful();
        assert_eq!(x.shape(), (272, 2));
        let mean_wait = x.column(1).sum() / 272.0;
        assert!((mean_wait - 70.897).abs() < 1e-3);
        assert_eq!(x[(0, 0)], 3.6);
        assert_eq!(x[(0, 1)], 79.0);
    }
}
