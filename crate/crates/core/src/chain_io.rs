//! Plain-text chain files.
//!
//! ```text
//! # comment
//! n 3
//! 0 0 0.5
//! 0 1 0.5
//! ...
//! ```
//!
//! States are 0-based. The writer emits probabilities with 17 significant
//! digits so a write/read cycle reproduces every `f64` exactly.

use std::io::{BufRead, Write};

use crate::chain::ChainMatrix;
use crate::error::{Error, Result};

pub fn read_chain<R: BufRead>(reader: R) -> Result<ChainMatrix> {
    let mut n: Option<usize> = None;
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        let parse_err = |msg: String| Error::Parse { line: line_no, msg };
        match (n, fields.as_slice()) {
            (None, ["n", count]) => {
                let count: usize = count
                    .parse()
                    .map_err(|e| parse_err(format!("bad state count: {e}")))?;
                if count == 0 {
                    return Err(parse_err("state count must be positive".into()));
                }
                n = Some(count);
                rows = vec![Vec::new(); count];
            }
            (None, _) => return Err(parse_err("expected `n <count>` header".into())),
            (Some(_), ["n", ..]) => return Err(parse_err("duplicate `n` header".into())),
            (Some(count), [src, dst, prob]) => {
                let src: usize = src
                    .parse()
                    .map_err(|e| parse_err(format!("bad source state: {e}")))?;
                let dst: usize = dst
                    .parse()
                    .map_err(|e| parse_err(format!("bad target state: {e}")))?;
                let prob: f64 = prob
                    .parse()
                    .map_err(|e| parse_err(format!("bad probability: {e}")))?;
                if src >= count || dst >= count {
                    return Err(parse_err(format!("state out of range for n = {count}")));
                }
                rows[src].push((dst, prob));
            }
            (Some(_), _) => return Err(parse_err("expected `<src> <dst> <prob>`".into())),
        }
    }
    if n.is_none() {
        return Err(Error::Parse {
            line: 0,
            msg: "missing `n <count>` header".into(),
        });
    }
    ChainMatrix::from_rows(rows)
}

pub fn write_chain<W: Write>(chain: &ChainMatrix, mut writer: W) -> Result<()> {
    writeln!(writer, "n {}", chain.n())?;
    for x in 0..chain.n() {
        for (y, p) in chain.row(x) {
            writeln!(writer, "{x} {y} {p:.16e}")?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_blank_lines() {
        let text = "# lazy flip\n\nn 2\n0 0 0.5 # stay\n0 1 0.5\n1 0 0.5\n1 1 0.5\n";
        let c = read_chain(text.as_bytes()).unwrap();
        assert_eq!(c.n(), 2);
        assert_eq!(c.prob(1, 0), 0.5);
        assert!(c.flags().lazy);
    }

    #[test]
    fn rejects_missing_header_and_bad_lines() {
        assert!(matches!(
            read_chain("0 0 1.0\n".as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            read_chain("n 1\n0 0\n".as_bytes()),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            read_chain("n 1\n0 3 1.0\n".as_bytes()),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            read_chain("".as_bytes()),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn non_stochastic_file_names_row() {
        let err = read_chain("n 2\n0 1 1.0\n1 0 0.9\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::NonStochasticRow { row: 1, .. }));
    }
}
