//! CSV import for small hand-made fixtures.
//!
//! Format:
//! * `#` lines are comments and may appear anywhere; blank lines separate
//!   sample blocks.
//! * The header (first data line) is `rows,cols`.
//! * Each block is optionally a `label,<integer>` line followed by exactly
//!   `rows` lines of `cols` comma-separated reals. Either every block has
//!   a label or none does.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::stack::MatrixStack;

pub fn load_stack_csv(path: &Path) -> Result<MatrixStack> {
    let text = fs::read_to_string(path)?;
    parse_stack_csv(&text)
}

pub(crate) fn parse_stack_csv(text: &str) -> Result<MatrixStack> {
    // Keep (line number, content) for error reporting; drop comments.
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.starts_with('#'));

    let (header_no, header) = lines
        .by_ref()
        .find(|(_, l)| !l.is_empty())
        .ok_or_else(|| Error::ParseFailure {
            line: 0,
            msg: "empty file".into(),
        })?;
    let dims: Vec<&str> = header.split(',').map(str::trim).collect();
    if dims.len() != 2 {
        return Err(Error::ParseFailure {
            line: header_no,
            msg: "header must be `rows,cols`".into(),
        });
    }
    let rows: usize = dims[0].parse().map_err(|_| Error::ParseFailure {
        line: header_no,
        msg: format!("bad row count `{}`", dims[0]),
    })?;
    let cols: usize = dims[1].parse().map_err(|_| Error::ParseFailure {
        line: header_no,
        msg: format!("bad column count `{}`", dims[1]),
    })?;

    let mut samples = Vec::new();
    let mut labels: Vec<u32> = Vec::new();
    let mut remaining: Vec<(usize, &str)> = lines.filter(|(_, l)| !l.is_empty()).collect();
    remaining.reverse(); // pop from the front

    while let Some((line_no, line)) = remaining.pop() {
        let mut data_rows: Vec<(usize, &str)> = Vec::with_capacity(rows);
        if let Some(rest) = line.strip_prefix("label,") {
            let label: u32 = rest.trim().parse().map_err(|_| Error::ParseFailure {
                line: line_no,
                msg: format!("bad label `{rest}`"),
            })?;
            labels.push(label);
        } else {
            data_rows.push((line_no, line));
        }
        while data_rows.len() < rows {
            let (no, l) = remaining.pop().ok_or_else(|| Error::ParseFailure {
                line: line_no,
                msg: format!("sample block needs {rows} rows"),
            })?;
            data_rows.push((no, l));
        }
        let mut entries = Vec::with_capacity(rows * cols);
        for (no, l) in data_rows {
            let values: Vec<&str> = l.split(',').map(str::trim).collect();
            if values.len() != cols {
                return Err(Error::ParseFailure {
                    line: no,
                    msg: format!("expected {cols} values, got {}", values.len()),
                });
            }
            for v in values {
                let x: f64 = v.parse().map_err(|_| Error::ParseFailure {
                    line: no,
                    msg: format!("bad number `{v}`"),
                })?;
                entries.push(x);
            }
        }
        samples.push(Matrix::from_vec(rows, cols, entries)?);
    }

    if !labels.is_empty() && labels.len() != samples.len() {
        return Err(Error::ParseFailure {
            line: 0,
            msg: format!(
                "{} labels for {} samples: label every block or none",
                labels.len(),
                samples.len()
            ),
        });
    }
    let stack = MatrixStack::new(samples)?;
    if labels.is_empty() {
        Ok(stack)
    } else {
        stack.with_labels(labels)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_labeled_blocks() {
        let text = "# fixture\n2,3\n\nlabel,0\n1,2,3\n4,5,6\n\nlabel,1\n6,5,4\n3,2,1\n";
        let stack = parse_stack_csv(text).unwrap();
        assert_eq!(stack.len(), 2);
        assert_eq!(stack.rows(), 2);
        assert_eq!(stack.cols(), 3);
        assert_eq!(stack.sample(0).get(1, 2), 6.0);
        assert_eq!(stack.labels().unwrap(), &[0, 1]);
    }

    #[test]
    fn parses_unlabeled_blocks() {
        let text = "1,2\n0.5,-1.5\n\n2.5,3.5\n";
        let stack = parse_stack_csv(text).unwrap();
        assert_eq!(stack.len(), 2);
        assert!(stack.labels().is_none());
    }

    #[test]
    fn short_block_is_an_error() {
        let text = "2,2\n1,2\n";
        assert!(matches!(
            parse_stack_csv(text),
            Err(Error::ParseFailure { .. })
        ));
    }

    #[test]
    fn mixed_labeling_is_an_error() {
        let text = "1,1\nlabel,0\n1\n\n2\n";
        assert!(matches!(
            parse_stack_csv(text),
            Err(Error::ParseFailure { .. })
        ));
    }
}
