use std::io::Write;

use crate::error::Result;

/// Mean RMSE at each frame position across sequences of possibly different
/// lengths. Frames are numbered from 1.
pub fn per_frame_rmse(sequences: &[Vec<f64>]) -> Vec<(usize, f64)> {
    let longest = sequences.iter().map(Vec::len).max().unwrap_or(0);
    (0..longest)
        .map(|i| {
            let vals: Vec<f64> = sequences.iter().filter_map(|s| s.get(i).copied()).collect();
            (i + 1, vals.iter().sum::<f64>() / vals.len() as f64)
        })
        .collect()
}

/// Writes `frame,rmse_mm` CSV.
pub fn write_curve_csv(out: &mut impl Write, curve: &[(usize, f64)]) -> Result<()> {
    let io = |e| crate::error::Error::io("<curve>", e);
    writeln!(out, "frame,rmse_mm").map_err(io)?;
    for (frame, rmse) in curve {
        writeln!(out, "{frame},{rmse}").map_err(io)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_sequence_is_verbatim() {
        let c = per_frame_rmse(&[vec![900.0, 800.0, 750.0]]);
        assert_eq!(c, vec![(1, 900.0), (2, 800.0), (3, 750.0)]);
    }

    #[test]
    fn averages_across_sequences() {
        let c = per_frame_rmse(&[vec![700.0; 4], vec![800.0; 4]]);
        assert!(c.iter().all(|(_, v)| *v == 750.0));
        let ragged = per_frame_rmse(&[vec![1.0, 2.0], vec![3.0]]);
        assert_eq!(ragged, vec![(1, 2.0), (2, 2.0)]);
        assert!(per_frame_rmse(&[]).is_empty());
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        write_curve_csv(&mut buf, &[(1, 750.5), (2, 700.0)]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "frame,rmse_mm\n1,750.5\n2,700\n");
    }
}
