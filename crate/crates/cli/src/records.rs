//! Line-delimited box records: `cx cy w h score`, `#` comments allowed.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use nanomvg::DetectionBox;

pub fn parse(text: &str) -> Result<Vec<DetectionBox>> {
    let mut boxes = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let v = line
            .split_whitespace()
            .map(str::parse::<f32>)
            .collect::<Result<Vec<_>, _>>()
            .with_context(|| format!("line {}: not a number", n + 1))?;
        // ground truth may omit the score
        let score = match v.len() {
            4 => 1.0,
            5 => v[4],
            k => bail!("line {}: expected 4 or 5 fields, got {k}", n + 1),
        };
        if v.iter().any(|x| !x.is_finite()) {
            bail!("line {}: non-finite value", n + 1);
        }
        boxes.push(DetectionBox::new(v[0], v[1], v[2], v[3], score));
    }
    Ok(boxes)
}

pub fn load(path: &Path) -> Result<Vec<DetectionBox>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn format(boxes: &[DetectionBox]) -> String {
    let mut out = String::new();
    for b in boxes {
        let _ = writeln!(out, "{} {} {} {} {}", b.cx, b.cy, b.w, b.h, b.score);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let boxes = vec![DetectionBox::new(1.5, 2.0, 3.25, 4.0, 0.75), DetectionBox::new(0.1, 0.2, 0.3, 0.4, 0.9)];
        assert_eq!(parse(&format(&boxes)).unwrap(), boxes);
    }

    #[test]
    fn score_optional_and_errors() {
        let b = parse("# gt\n10 10 4 4\n").unwrap();
        assert_eq!(b[0].score, 1.0);
        assert!(parse("1 2 3").is_err());
        assert!(parse("1 2 x 4").is_err());
        assert!(parse("1 2 NaN 4").is_err());
    }
}
