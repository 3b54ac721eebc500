//! Counts CSV: `#` comment lines, then a header and one row per setting.
//!
//! ```text
//! # config_sha256: 3f1c...
//! theta_rad,coincidences,bunched_arm1,bunched_arm2
//! 0.0000000000000000e0,31702,0,0
//! ```
//!
//! Angles are written with 17 significant digits so they survive a round trip.

use std::fmt::Write as _;

use crate::bayes::CountRecord;
use crate::error::{Error, Result};

const HEADER_SHORT: &str = "theta_rad,coincidences";
const HEADER_LONG: &str = "theta_rad,coincidences,bunched_arm1,bunched_arm2";

/// Serializes `counts`, preceded by one `# key: value` line per comment.
pub fn write_counts_csv(counts: &CountRecord, comments: &[(&str, String)]) -> String {
    let mut out = String::new();
    for (k, v) in comments {
        writeln!(out, "# {k}: {v}").unwrap();
    }
    let bunched = counts.bunched();
    out.push_str(if bunched.is_some() { HEADER_LONG } else { HEADER_SHORT });
    out.push('\n');
    for (i, (t, n)) in counts.settings().iter().zip(counts.coincidences()).enumerate() {
        write!(out, "{t:.16e},{n}").unwrap();
        if let Some(b) = bunched {
            write!(out, ",{},{}", b[i][0], b[i][1]).unwrap();
        }
        out.push('\n');
    }
    out
}

fn parse_field<T: std::str::FromStr>(field: &str, line: usize, what: &str) -> Result<T> {
    field.trim().parse().map_err(|_| Error::Parse {
        line,
        reason: format!("cannot read {what} from `{}`", field.trim()),
    })
}

/// Parses a counts CSV. Line numbers in errors are 1-based and count comments.
pub fn parse_counts_csv(text: &str) -> Result<CountRecord> {
    let mut header: Option<usize> = None;
    let mut settings = Vec::new();
    let mut coincidences = Vec::new();
    let mut bunched = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let Some(width) = header else {
            let cols: Vec<&str> = trimmed.split(',').map(str::trim).collect();
            header = match cols.join(",").as_str() {
                HEADER_SHORT => Some(2),
                HEADER_LONG => Some(4),
                _ => {
                    return Err(Error::Parse {
                        line,
                        reason: format!("expected header `{HEADER_SHORT}` or `{HEADER_LONG}`"),
                    })
                }
            };
            continue;
        };
        let fields: Vec<&str> = trimmed.split(',').collect();
        if fields.len() != width {
            return Err(Error::Parse {
                line,
                reason: format!("expected {width} fields, found {}", fields.len()),
            });
        }
        let theta: f64 = parse_field(fields[0], line, "an angle")?;
        if !theta.is_finite() {
            return Err(Error::Parse {
                line,
                reason: "angle is not finite".into(),
            });
        }
        settings.push(theta);
        coincidences.push(parse_field(fields[1], line, "a non-negative count")?);
        if width == 4 {
            bunched.push([
                parse_field(fields[2], line, "a non-negative count")?,
                parse_field(fields[3], line, "a non-negative count")?,
            ]);
        }
    }
    if header.is_none() || settings.is_empty() {
        return Err(Error::EmptyCounts);
    }
    let bunched = (header == Some(4)).then_some(bunched);
    CountRecord::new(settings, coincidences, bunched)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bayes::{sample_counts, SamplingMode};
    use crate::noon::ModelPoint;
    use proptest::prelude::*;

    #[test]
    fn round_trip_is_lossless() {
        for mode in [SamplingMode::Postselected, SamplingMode::Full] {
            let c = sample_counts(ModelPoint::new(0.3, 0.98).unwrap(), 5000, 3, mode).unwrap();
            let text = write_counts_csv(&c, &[("seed", "3".into())]);
            assert_eq!(parse_counts_csv(&text).unwrap(), c);
        }
    }

    #[test]
    fn bad_row_names_its_line() {
        let text = "# comment\ntheta_rad,coincidences\n0.0,10\n0.19,abc\n";
        match parse_counts_csv(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
        let text = "theta_rad,coincidences\n0.0,10,3\n";
        assert!(matches!(parse_counts_csv(text), Err(Error::Parse { line: 2, .. })));
        let text = "theta_rad,coincidences\n0.0,-4\n";
        assert!(matches!(parse_counts_csv(text), Err(Error::Parse { line: 2, .. })));
        let text = "phase,n\n0.0,4\n";
        assert!(matches!(parse_counts_csv(text), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn no_rows_is_empty() {
        assert!(matches!(parse_counts_csv(""), Err(Error::EmptyCounts)));
        assert!(matches!(parse_counts_csv("# only\ntheta_rad,coincidences\n"), Err(Error::EmptyCounts)));
    }

    proptest! {
        #[test]
        fn arbitrary_angles_round_trip(angles in prop::collection::vec(-10.0f64..10.0, 1..6), n in 0u64..1_000_000) {
            let counts = vec![n; angles.len()];
            let rec = CountRecord::new(angles, counts, None).unwrap();
            prop_assert_eq!(parse_counts_csv(&write_counts_csv(&rec, &[])).unwrap(), rec);
        }
    }
}
