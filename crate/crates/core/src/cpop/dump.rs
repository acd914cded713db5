//! Plain-text instance dump for debugging.
//!
//! ```text
//! # optional comment lines
//! F P P_Dhd
//! c_0
//! ...
//! c_{P-1}
//! i j
//! ...
//! ```
//!
//! The header gives the row count, column count and deadhead penalty. The
//! next `P` lines are column costs; every remaining line is a nonzero
//! `a_ij = 1` as a 0-based row/column pair. Money is in integer cents.

use std::io::{BufRead, Write};

use super::{Cents, CpopError, CpopInstance};

pub fn write_instance<W: Write>(inst: &CpopInstance, mut out: W) -> Result<(), CpopError> {
    writeln!(
        out,
        "{} {} {}",
        inst.n_rows(),
        inst.n_columns(),
        inst.deadhead_penalty()
    )?;
    for c in inst.costs() {
        writeln!(out, "{c}")?;
    }
    for (j, col) in inst.columns().iter().enumerate() {
        for i in col {
            writeln!(out, "{i} {j}")?;
        }
    }
    Ok(())
}

pub fn read_instance<R: BufRead>(input: R) -> Result<CpopInstance, CpopError> {
    let mut lines = input
        .lines()
        .enumerate()
        .map(|(k, line)| line.map(|l| (k + 1, l)))
        .filter(|r| {
            r.as_ref()
                .map_or(true, |(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        });
    let bad = |line: usize, message: &str| CpopError::Dump {
        line,
        message: message.to_string(),
    };

    let (line, header) = lines.next().ok_or_else(|| bad(0, "missing header"))??;
    let fields = parse_fields::<i64>(&header).ok_or_else(|| bad(line, "expected `F P P_Dhd`"))?;
    let [n_rows, n_cols, penalty] = fields[..] else {
        return Err(bad(line, "expected `F P P_Dhd`"));
    };
    if n_rows < 0 || n_cols < 0 {
        return Err(bad(line, "negative dimension"));
    }
    let (n_rows, n_cols) = (n_rows as usize, n_cols as usize);

    let mut costs: Vec<Cents> = Vec::with_capacity(n_cols);
    for _ in 0..n_cols {
        let (line, text) = lines.next().ok_or_else(|| bad(0, "missing column costs"))??;
        costs.push(text.trim().parse().map_err(|_| bad(line, "expected an integer cost"))?);
    }
    let mut columns: Vec<Vec<usize>> = vec![Vec::new(); n_cols];
    for entry in lines {
        let (line, text) = entry?;
        let fields = parse_fields::<usize>(&text).ok_or_else(|| bad(line, "expected `i j`"))?;
        let [i, j] = fields[..] else {
            return Err(bad(line, "expected `i j`"));
        };
        if j >= n_cols {
            return Err(bad(line, "column index out of range"));
        }
        columns[j].push(i);
    }
    CpopInstance::new(n_rows, columns, costs, penalty)
}

fn parse_fields<T: std::str::FromStr>(line: &str) -> Option<Vec<T>> {
    line.split_whitespace().map(|f| f.parse().ok()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let inst =
            CpopInstance::new(3, vec![vec![0, 2], vec![1], vec![1, 2]], vec![10, 20, 30], 1000)
                .unwrap();
        let mut buf = Vec::new();
        write_instance(&inst, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("3 3 1000\n10\n20\n30\n0 0\n2 0\n"));
        let back = read_instance(&buf[..]).unwrap();
        assert_eq!(back, inst);
    }

    #[test]
    fn reports_line_numbers() {
        let text = "# comment\n2 1 5\n7\n0 x\n";
        match read_instance(text.as_bytes()) {
            Err(CpopError::Dump { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
    }
}
