//! Plain-text persistence for targets, series, datasets, feature maps and
//! trained models.
//!
//! Reals are written as `{:.16e}` (17 significant digits), which round-trips
//! every `f64` exactly. Tabular files are CSV with a header row; metadata
//! sits in leading `# key = value` lines.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::circuit::ReuploadingParams;
use crate::error::{Error, Result};
use crate::features::{FeatureMap, MapKind};
use crate::fourier::FourierSeries;
use crate::learner::{LinkFunction, TrainedHypothesis, Weights};
use crate::sampling::LabeledDataset;

/// Formats a real with 17 significant digits.
pub fn real(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse<T: FromStr>(s: &str, what: &str) -> Result<T> {
    s.trim().parse().map_err(|_| Error::Parse(format!("bad {what}: {s:?}")))
}

fn meta_line(out: &mut String, key: &str, value: impl std::fmt::Display) {
    writeln!(out, "# {key} = {value}").unwrap();
}

/// Reads the `# key = value` lines that precede a CSV body.
fn read_meta(text: &str) -> BTreeMap<String, String> {
    text.lines()
        .map_while(|l| l.strip_prefix('#'))
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect()
}

fn meta<'a>(m: &'a BTreeMap<String, String>, key: &str) -> Result<&'a str> {
    m.get(key).map(String::as_str).ok_or_else(|| Error::Parse(format!("missing metadata key {key:?}")))
}

/// CSV body rows as parsed reals, checking the header.
fn read_rows(text: &str, header: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let got: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if got != header {
        return Err(Error::Parse(format!("expected header {header:?}, found {got:?}")));
    }
    rdr.records()
        .map(|rec| rec?.iter().map(|f| parse(f, "number")).collect())
        .collect()
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text)?;
    Ok(())
}

pub fn target_to_string(p: &ReuploadingParams) -> String {
    let mut out = String::new();
    writeln!(out, "layers = {}", p.layers()).unwrap();
    if let Some(seed) = p.seed() {
        writeln!(out, "seed = {seed}").unwrap();
    }
    for (i, [a, b, c]) in p.angles().iter().enumerate() {
        writeln!(out, "theta.{} = {} {} {}", i + 1, real(*a), real(*b), real(*c)).unwrap();
    }
    out
}

pub fn target_from_str(text: &str) -> Result<ReuploadingParams> {
    let mut layers = None;
    let mut seed = None;
    let mut rows: BTreeMap<usize, [f64; 3]> = BTreeMap::new();
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse(format!("expected key = value: {line:?}")))?;
        match k.trim() {
            "layers" => layers = Some(parse::<usize>(v, "layer count")?),
            "seed" => seed = Some(parse::<u64>(v, "seed")?),
            key => {
                let idx = key
                    .strip_prefix("theta.")
                    .ok_or_else(|| Error::Parse(format!("unknown key {key:?}")))?;
                let vals: Vec<f64> = v.split_whitespace().map(|s| parse(s, "angle")).collect::<Result<_>>()?;
                let row: [f64; 3] = vals
                    .try_into()
                    .map_err(|_| Error::Parse(format!("{key} needs three angles")))?;
                rows.insert(parse(idx, "row index")?, row);
            }
        }
    }
    let layers = layers.ok_or_else(|| Error::Parse("missing layers".into()))?;
    if rows.len() != layers + 1 || rows.keys().copied().ne(1..=layers + 1) {
        return Err(Error::Parse(format!("expected theta.1 .. theta.{}", layers + 1)));
    }
    ReuploadingParams::new(rows.into_values().collect(), seed)
}

pub fn save_target(p: &ReuploadingParams, path: &Path) -> Result<()> {
    write_file(path, &target_to_string(p))
}

pub fn load_target(path: &Path) -> Result<ReuploadingParams> {
    target_from_str(&fs::read_to_string(path)?)
}

pub fn series_to_string(s: &FourierSeries) -> String {
    let mut out = String::new();
    meta_line(&mut out, "c0", real(s.c0()));
    out.push_str("omega,a,b\n");
    for w in 1..=s.degree() {
        let (a, b) = s.coefficient(w);
        writeln!(out, "{w},{},{}", real(a), real(b)).unwrap();
    }
    out
}

pub fn series_from_str(text: &str) -> Result<FourierSeries> {
    let c0 = parse(meta(&read_meta(text), "c0")?, "c0")?;
    let rows = read_rows(text, &["omega", "a", "b"])?;
    for (i, r) in rows.iter().enumerate() {
        if r[0] != (i + 1) as f64 {
            return Err(Error::Parse(format!("row {} has omega {}", i + 1, r[0])));
        }
    }
    FourierSeries::new(c0, rows.iter().map(|r| r[1]).collect(), rows.iter().map(|r| r[2]).collect())
}

pub fn save_series(s: &FourierSeries, path: &Path) -> Result<()> {
    write_file(path, &series_to_string(s))
}

pub fn load_series(path: &Path) -> Result<FourierSeries> {
    series_from_str(&fs::read_to_string(path)?)
}

/// `target` names the file the labels came from; it is informational.
pub fn dataset_to_string(d: &LabeledDataset, target: &str) -> String {
    let mut out = String::new();
    meta_line(&mut out, "seed", d.seed);
    meta_line(&mut out, "shots", d.shots);
    meta_line(&mut out, "target", target);
    out.push_str("x,ybar\n");
    for (x, y) in d.iter() {
        writeln!(out, "{},{}", real(x), real(y)).unwrap();
    }
    out
}

pub fn dataset_from_str(text: &str) -> Result<LabeledDataset> {
    let m = read_meta(text);
    let seed = parse(meta(&m, "seed")?, "seed")?;
    let shots = parse(meta(&m, "shots")?, "shots")?;
    let rows = read_rows(text, &["x", "ybar"])?;
    LabeledDataset::new(rows.iter().map(|r| r[0]).collect(), rows.iter().map(|r| r[1]).collect(), shots, seed)
}

pub fn save_dataset(d: &LabeledDataset, target: &str, path: &Path) -> Result<()> {
    write_file(path, &dataset_to_string(d, target))
}

pub fn load_dataset(path: &Path) -> Result<LabeledDataset> {
    dataset_from_str(&fs::read_to_string(path)?)
}

fn map_meta(out: &mut String, map: &FeatureMap) {
    meta_line(out, "kind", map.kind());
    meta_line(out, "constant", map.includes_constant());
}

fn map_from_meta(m: &BTreeMap<String, String>, frequencies: Vec<u32>) -> Result<FeatureMap> {
    let kind: MapKind = meta(m, "kind")?.parse()?;
    let constant = parse(meta(m, "constant")?, "constant flag")?;
    FeatureMap::new(kind, frequencies, constant)
}

pub fn map_to_string(map: &FeatureMap) -> String {
    let mut out = String::new();
    map_meta(&mut out, map);
    out.push_str("frequency\n");
    for w in map.frequencies() {
        writeln!(out, "{w}").unwrap();
    }
    out
}

pub fn map_from_str(text: &str) -> Result<FeatureMap> {
    let freqs = read_rows(text, &["frequency"])?.iter().map(|r| r[0] as u32).collect();
    map_from_meta(&read_meta(text), freqs)
}

pub fn save_map(map: &FeatureMap, path: &Path) -> Result<()> {
    write_file(path, &map_to_string(map))
}

pub fn load_map(path: &Path) -> Result<FeatureMap> {
    map_from_str(&fs::read_to_string(path)?)
}

/// The map is embedded in the metadata (kind, constant flag and a
/// space-separated frequency list) so a model file stands alone.
pub fn model_to_string(h: &TrainedHypothesis) -> String {
    let mut out = String::new();
    map_meta(&mut out, &h.map);
    let freqs: Vec<String> = h.map.frequencies().iter().map(u32::to_string).collect();
    meta_line(&mut out, "frequencies", freqs.join(" "));
    meta_line(&mut out, "link", h.link);
    meta_line(&mut out, "selected_iteration", h.selected_iteration);
    if let Some(c) = h.regularization {
        meta_line(&mut out, "regularization", real(c));
    }
    match &h.weights {
        Weights::Primal(w) => {
            meta_line(&mut out, "form", "primal");
            out.push_str("index,weight\n");
            for (i, v) in w.iter().enumerate() {
                writeln!(out, "{i},{}", real(*v)).unwrap();
            }
        }
        Weights::Dual { alphas, support_xs } => {
            meta_line(&mut out, "form", "dual");
            out.push_str("x,alpha\n");
            for (x, a) in support_xs.iter().zip(alphas) {
                writeln!(out, "{},{}", real(*x), real(*a)).unwrap();
            }
        }
    }
    out
}

/// Restores a model for prediction; the training history is not stored.
pub fn model_from_str(text: &str) -> Result<TrainedHypothesis> {
    let m = read_meta(text);
    let freqs = meta(&m, "frequencies")?
        .split_whitespace()
        .map(|s| parse(s, "frequency"))
        .collect::<Result<_>>()?;
    let map = map_from_meta(&m, freqs)?;
    let link: LinkFunction = meta(&m, "link")?.parse()?;
    let weights = match meta(&m, "form")? {
        "primal" => {
            let w: Vec<f64> = read_rows(text, &["index", "weight"])?.iter().map(|r| r[1]).collect();
            if w.len() != map.dimension() {
                return Err(Error::Parse(format!("{} weights for a {}-dimensional map", w.len(), map.dimension())));
            }
            Weights::Primal(w)
        }
        "dual" => {
            let rows = read_rows(text, &["x", "alpha"])?;
            Weights::Dual { support_xs: rows.iter().map(|r| r[0]).collect(), alphas: rows.iter().map(|r| r[1]).collect() }
        }
        other => return Err(Error::Parse(format!("unknown form {other:?}"))),
    };
    Ok(TrainedHypothesis {
        map,
        link,
        weights,
        selected_iteration: parse(meta(&m, "selected_iteration")?, "selected iteration")?,
        history: Vec::new(),
        selection_fallback: false,
        regularization: m.get("regularization").map(|s| parse(s, "regularization")).transpose()?,
    })
}

pub fn save_model(h: &TrainedHypothesis, path: &Path) -> Result<()> {
    write_file(path, &model_to_string(h))
}

pub fn load_model(path: &Path) -> Result<TrainedHypothesis> {
    model_from_str(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::extract_series;
    use crate::learner::Predictor;

    #[test]
    fn target_round_trip_is_exact() {
        let p = ReuploadingParams::random(10, u64::MAX - 3).unwrap();
        let text = target_to_string(&p);
        let q = target_from_str(&text).unwrap();
        assert_eq!(p.angles(), q.angles());
        assert_eq!(q.seed(), Some(u64::MAX - 3));
        assert_eq!(target_to_string(&q), text);
    }

    #[test]
    fn target_rejects_gaps() {
        assert!(target_from_str("layers = 2\ntheta.1 = 0 0 0\ntheta.3 = 0 0 0\n").is_err());
        assert!(target_from_str("layers = 1\ntheta.1 = 0 0\ntheta.2 = 0 0 0\n").is_err());
        assert!(target_from_str("layers = 1\ntheta.1 = 0 0 0\ntheta.2 = 0 0 0\n").is_ok());
    }

    #[test]
    fn series_round_trip_is_exact() {
        let s = extract_series(&ReuploadingParams::random(7, 1).unwrap());
        let text = series_to_string(&s);
        assert!(text.lines().nth(1) == Some("omega,a,b"));
        assert_eq!(series_from_str(&text).unwrap(), s);
    }

    #[test]
    fn dataset_round_trip() {
        let d = LabeledDataset::new(vec![0.1, 1.0 / 3.0], vec![0.0, 0.75], 4, 99).unwrap();
        let text = dataset_to_string(&d, "target.txt");
        assert!(text.contains("# target = target.txt"));
        assert_eq!(dataset_from_str(&text).unwrap(), d);
    }

    #[test]
    fn map_round_trip() {
        let m = FeatureMap::rff(vec![3, 1, 3, 7], true).unwrap();
        assert_eq!(map_from_str(&map_to_string(&m)).unwrap(), m);
        let t = FeatureMap::truncated(4);
        assert_eq!(map_from_str(&map_to_string(&t)).unwrap(), t);
    }

    #[test]
    fn model_round_trip_preserves_predictions() {
        let mut h = TrainedHypothesis::zero(FeatureMap::truncated(2), LinkFunction::Clip01);
        h.weights = Weights::Primal(vec![0.5, 0.1, -0.2, 0.3, 0.05]);
        h.selected_iteration = 17;
        let back = model_from_str(&model_to_string(&h)).unwrap();
        assert_eq!(back.weights, h.weights);
        assert_eq!(back.selected_iteration, 17);
        for x in [0.0, 1.0, 5.5] {
            assert_eq!(back.predict(x), h.predict(x));
        }

        h.weights = Weights::Dual { alphas: vec![0.25, -0.5], support_xs: vec![0.3, 2.0] };
        h.link = LinkFunction::Identity;
        let back = model_from_str(&model_to_string(&h)).unwrap();
        assert_eq!(back.weights, h.weights);
        assert_eq!(back.link, LinkFunction::Identity);
    }

    #[test]
    fn files_on_disk() {
        let dir = tempfile::tempdir().unwrap();
        let p = ReuploadingParams::random(3, 8).unwrap();
        let path = dir.path().join("t.txt");
        save_target(&p, &path).unwrap();
        assert_eq!(load_target(&path).unwrap().angles(), p.angles());
        assert!(load_target(&dir.path().join("missing")).is_err());
    }
}
