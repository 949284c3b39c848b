//! On-disk formats.
//!
//! Points file: the magic `OTPTS1`, little-endian `u32` N and D, then `N·D`
//! little-endian `f32` values in row-major order. The byte length is exactly
//! `14 + 4·N·D` and every value must be finite. Values are widened to `f64`
//! on load, which is exact.
//!
//! Distributions file: UTF-8 text, one distribution per line. A line holds
//! whitespace-separated tokens that are either all bare indices (uniform
//! weights) or all `index:weight` pairs. `#` starts a comment; blank lines are
//! skipped. Explicit weights whose sum is off by more than the mass tolerance
//! are rescaled, with a warning when the deviation exceeds `1e-6`.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use log::warn;

use crate::distributions::{uniform_distribution, Dataset, DiscreteDistribution, PointStore, MASS_TOLERANCE};
use crate::error::{Error, Result};
use crate::tree::{read_tree, write_tree, SpatialTree};

pub const POINTS_MAGIC: &[u8; 6] = b"OTPTS1";
const POINTS_HEADER: usize = 14;
/// Raw weight sums further than this from 1 trigger a warning on load.
pub const WEIGHT_WARN_TOLERANCE: f64 = 1e-6;

fn format_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Format(msg.into()))
}

/// Encodes a store; fails if a coordinate is not exactly representable as `f32`.
pub fn encode_points(store: &PointStore) -> Result<Vec<u8>> {
    let (n, d) = (store.len(), store.dim());
    let (Ok(n32), Ok(d32)) = (u32::try_from(n), u32::try_from(d)) else {
        return format_err("point count or dimension exceeds u32");
    };
    let mut out = Vec::with_capacity(POINTS_HEADER + 4 * n * d);
    out.extend_from_slice(POINTS_MAGIC);
    out.extend_from_slice(&n32.to_le_bytes());
    out.extend_from_slice(&d32.to_le_bytes());
    for (k, &v) in store.coords().iter().enumerate() {
        let f = v as f32;
        if f as f64 != v {
            return format_err(format!("coordinate {v} of point {} is not exact in f32", k / d));
        }
        out.extend_from_slice(&f.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_points(bytes: &[u8]) -> Result<PointStore> {
    if bytes.len() < POINTS_HEADER || &bytes[..6] != POINTS_MAGIC {
        return format_err("not a points file (bad magic)");
    }
    let n = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as usize;
    let d = u32::from_le_bytes(bytes[10..14].try_into().unwrap()) as usize;
    if n == 0 || d == 0 {
        return format_err("points file declares zero points or zero dimensions");
    }
    let expected = n
        .checked_mul(d)
        .and_then(|x| x.checked_mul(4))
        .and_then(|x| x.checked_add(POINTS_HEADER));
    if expected != Some(bytes.len()) {
        return format_err(format!(
            "points file has {} bytes, expected {} for N = {n}, D = {d}",
            bytes.len(),
            POINTS_HEADER as u128 + 4 * n as u128 * d as u128
        ));
    }
    let mut coords = Vec::with_capacity(n * d);
    for (k, chunk) in bytes[POINTS_HEADER..].chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return format_err(format!("non-finite coordinate in point {}", k / d));
        }
        coords.push(v as f64);
    }
    PointStore::new(d, coords)
}

/// A copy of the store with every coordinate rounded to the nearest `f32`.
pub fn round_to_f32(store: &PointStore) -> PointStore {
    let coords = store.coords().iter().map(|&v| v as f32 as f64).collect();
    PointStore::new(store.dim(), coords).expect("rounding keeps the shape")
}

pub fn read_points_file(path: impl AsRef<Path>) -> Result<PointStore> {
    decode_points(&fs::read(path)?)
}

pub fn write_points_file(path: impl AsRef<Path>, store: &PointStore) -> Result<()> {
    Ok(fs::write(path, encode_points(store)?)?)
}

fn parse_err<T>(line: usize, message: impl Into<String>) -> Result<T> {
    Err(Error::Parse { line, message: message.into() })
}

/// Parses a distributions file whose indices refer to a store of `n_points`.
pub fn parse_distributions(text: &str, n_points: usize) -> Result<Vec<DiscreteDistribution>> {
    let mut out = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let body = raw.split('#').next().unwrap_or("");
        let tokens: Vec<&str> = body.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        let weighted = tokens[0].contains(':');
        let mut support = Vec::with_capacity(tokens.len());
        let mut weights = Vec::with_capacity(tokens.len());
        for tok in &tokens {
            let (idx, w) = match tok.split_once(':') {
                Some((i, w)) if weighted => (i, Some(w)),
                None if !weighted => (*tok, None),
                _ => return parse_err(line, "cannot mix bare indices and index:weight tokens"),
            };
            let Ok(idx) = idx.parse::<usize>() else {
                return parse_err(line, format!("bad index {idx:?} in token {tok:?}"));
            };
            if let Some(w) = w {
                match w.parse::<f64>() {
                    Ok(v) if v.is_finite() && v >= 0.0 => weights.push(v),
                    _ => return parse_err(line, format!("bad weight {w:?} in token {tok:?}")),
                }
            }
            if idx >= n_points {
                return parse_err(line, format!("index {idx} out of range for {n_points} points"));
            }
            support.push(idx);
        }
        let dist = if weighted {
            let sum: f64 = weights.iter().sum();
            if sum <= 0.0 {
                return parse_err(line, "weights sum to zero");
            }
            if (sum - 1.0).abs() > WEIGHT_WARN_TOLERANCE {
                warn!("line {line}: weights sum to {sum}; normalizing");
            }
            if (sum - 1.0).abs() > MASS_TOLERANCE {
                for w in &mut weights {
                    *w /= sum;
                }
            }
            DiscreteDistribution::new(support, weights)
        } else {
            uniform_distribution(support)
        };
        out.push(dist.map_err(|e| Error::Parse { line, message: inner_message(e) })?);
    }
    Ok(out)
}

fn inner_message(e: Error) -> String {
    match e {
        Error::InvalidArgument(m) => m,
        other => other.to_string(),
    }
}

/// Writes uniform distributions as bare indices and others as `index:weight`
/// with round-trip float formatting.
pub fn format_distributions(items: &[DiscreteDistribution]) -> String {
    let mut out = String::new();
    for d in items {
        let tokens: Vec<String> = if d.is_uniform() {
            d.support().iter().map(|p| p.to_string()).collect()
        } else {
            d.support().iter().zip(d.weights()).map(|(p, w)| format!("{p}:{w:?}")).collect()
        };
        out.push_str(&tokens.join(" "));
        out.push('\n');
    }
    out
}

pub fn read_distributions_file(path: impl AsRef<Path>, n_points: usize) -> Result<Vec<DiscreteDistribution>> {
    parse_distributions(&fs::read_to_string(path)?, n_points)
}

pub fn write_distributions_file(path: impl AsRef<Path>, items: &[DiscreteDistribution]) -> Result<()> {
    Ok(fs::write(path, format_distributions(items))?)
}

/// Loads a points file and a distributions file into a dataset.
pub fn load_dataset(points: impl AsRef<Path>, dists: impl AsRef<Path>) -> Result<Dataset> {
    let store = read_points_file(points)?;
    let items = read_distributions_file(dists, store.len())?;
    if items.is_empty() {
        return Err(Error::Parse { line: 0, message: "distributions file holds no distributions".into() });
    }
    Dataset::new(Arc::new(store), items)
}

pub fn read_tree_file(path: impl AsRef<Path>) -> Result<SpatialTree> {
    read_tree(&fs::read(path)?)
}

pub fn write_tree_file(path: impl AsRef<Path>, tree: &SpatialTree) -> Result<()> {
    Ok(fs::write(path, write_tree(tree))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn points_layout() {
        let store = PointStore::new(2, vec![1.0, -2.5, 0.25, 3.0]).unwrap();
        let bytes = encode_points(&store).unwrap();
        assert_eq!(bytes.len(), 14 + 4 * 2 * 2);
        assert_eq!(&bytes[..6], b"OTPTS1");
        assert_eq!(&bytes[6..10], &2u32.to_le_bytes());
        assert_eq!(&bytes[10..14], &2u32.to_le_bytes());
        assert_eq!(&bytes[14..18], &1.0f32.to_le_bytes());
        assert_eq!(decode_points(&bytes).unwrap(), store);
    }

    #[test]
    fn points_rejects_bad_input() {
        let store = PointStore::new(1, vec![1.0, 2.0]).unwrap();
        let bytes = encode_points(&store).unwrap();
        assert!(decode_points(&bytes[..bytes.len() - 1]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(decode_points(&extra).is_err());
        let mut magic = bytes.clone();
        magic[0] = b'X';
        assert!(decode_points(&magic).is_err());
        let mut nan = bytes;
        nan[14..18].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(decode_points(&nan).is_err());
        let lossy = PointStore::new(1, vec![0.1]).unwrap();
        assert!(encode_points(&lossy).is_err());
        assert!(encode_points(&round_to_f32(&lossy)).is_ok());
    }

    #[test]
    fn distributions_parse() {
        let text = "# header\n0 1 2\n\n3:0.25 4:0.75  # trailing\n";
        let ds = parse_distributions(text, 5).unwrap();
        assert_eq!(ds.len(), 2);
        assert!(ds[0].is_uniform());
        assert_eq!(ds[0].support(), &[0, 1, 2]);
        assert_eq!(ds[1].weights(), &[0.25, 0.75]);
    }

    #[test]
    fn distributions_errors_cite_lines() {
        let cases = [
            ("0 1\n5:abc\n", 2),
            ("0 1\n1 1\n", 2),
            ("0 9\n", 1),
            ("0 1:0.5\n", 1),
            ("\n\n0:0 1:0\n", 3),
            ("x\n", 1),
            ("0:-0.5 1:1.5\n", 1),
        ];
        for (text, want) in cases {
            match parse_distributions(text, 6) {
                Err(Error::Parse { line, .. }) => assert_eq!(line, want, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn weights_are_normalized() {
        let ds = parse_distributions("0:1 1:3\n", 2).unwrap();
        assert_eq!(ds[0].weights(), &[0.25, 0.75]);
    }

    #[test]
    fn distributions_round_trip() {
        let items = vec![
            uniform_distribution(vec![4, 0, 2]).unwrap(),
            DiscreteDistribution::new(vec![1, 3], vec![0.1, 0.9]).unwrap(),
            DiscreteDistribution::new(vec![0, 1, 2], vec![1.0 / 3.0, 0.5, 1.0 / 6.0]).unwrap(),
        ];
        let back = parse_distributions(&format_distributions(&items), 5).unwrap();
        assert_eq!(back, items);
    }
}
