use num::{BigInt, BigRational, BigUint};

use super::DiscreteMeasure;
use crate::{Error, Result};

/// Header `d n 𝔐_n`, then one `a_1 ... a_d num den` line per atom.
pub fn measure_to_text(mu: &DiscreteMeasure) -> String {
    let mut out = format!("{} {} {}\n", mu.d(), mu.level(), mu.scale());
    for (p, m) in mu.atoms() {
        for c in p {
            out.push_str(&c.to_string());
            out.push(' ');
        }
        out.push_str(&format!("{} {}\n", m.numer(), m.denom()));
    }
    out
}

fn parse<T: std::str::FromStr>(tok: &str, line: usize) -> Result<T> {
    tok.parse().map_err(|_| Error::Parse(format!("line {line}: bad token {tok:?}")))
}

pub fn measure_from_text(text: &str) -> Result<DiscreteMeasure> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| Error::Parse("empty input".into()))?;
    let h: Vec<&str> = header.split_whitespace().collect();
    if h.len() != 3 {
        return Err(Error::Parse("header must be `d n scale`".into()));
    }
    let d: usize = parse(h[0], 1)?;
    let n: usize = parse(h[1], 1)?;
    let scale: BigUint = parse(h[2], 1)?;
    let mut atoms = Vec::new();
    for (i, line) in lines {
        let t: Vec<&str> = line.split_whitespace().collect();
        if t.len() != d + 2 {
            return Err(Error::Parse(format!("line {}: expected {} fields", i + 1, d + 2)));
        }
        let p = t[..d].iter().map(|x| parse::<i64>(x, i + 1)).collect::<Result<Vec<_>>>()?;
        let num: BigInt = parse(t[d], i + 1)?;
        let den: BigInt = parse(t[d + 1], i + 1)?;
        if den == BigInt::from(0) {
            return Err(Error::Parse(format!("line {}: zero denominator", i + 1)));
        }
        atoms.push((p, BigRational::new(num, den)));
    }
    DiscreteMeasure::from_atoms(d, n, scale, atoms)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mu = DiscreteMeasure::from_atoms(
            2,
            1,
            BigUint::from(6u32),
            [(vec![0, 1], BigRational::new(1.into(), 3.into())), (vec![-2, 5], BigRational::new(2.into(), 3.into()))],
        )
        .unwrap();
        let text = measure_to_text(&mu);
        assert_eq!(measure_from_text(&text).unwrap(), mu);
        assert_eq!(measure_to_text(&measure_from_text(&text).unwrap()), text);
        assert!(measure_from_text("1 1").is_err());
    }
}
